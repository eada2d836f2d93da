use serde::{Deserialize, Serialize};

use super::{validate, Connectivity, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integer topological invariants of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub euler: i64,
    pub boundary_loops: usize,
    pub components: usize,
    /// Sum of the per-component genera.
    pub genus: usize,
}

impl std::fmt::Display for TopologyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "chi={} b={} components={} genus={}",
            self.euler, self.boundary_loops, self.components, self.genus
        )
    }
}

/// V − E + F over referenced vertices.
pub fn euler_characteristic<T: Real>(mesh: &TriMesh<T>) -> i64 {
    let conn = Connectivity::build(mesh);
    let v = referenced(mesh).iter().filter(|&&u| u).count() as i64;
    v - conn.edges.len() as i64 + mesh.triangles.len() as i64
}

fn referenced<T: Real>(mesh: &TriMesh<T>) -> Vec<bool> {
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            used[v] = true;
        }
    }
    used
}

pub fn topology<T: Real>(mesh: &TriMesh<T>) -> Result<TopologyReport> {
    let diag = validate(mesh);
    if !diag.is_combinatorially_valid() {
        return Err(Error::TopologyUndefined(format!(
            "{} non-manifold edges, {} non-manifold vertices, {} orientation defects, {} bad triangles",
            diag.nonmanifold_edges.len(),
            diag.nonmanifold_vertices.len(),
            diag.orientation_defects.len(),
            diag.bad_indices.len()
        )));
    }
    let conn = Connectivity::build(mesh);
    let nv = mesh.vertices.len();
    let used = referenced(mesh);

    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for e in &conn.edges {
        let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comp_id = vec![usize::MAX; nv];
    let mut ncomp = 0usize;
    for v in 0..nv {
        if !used[v] {
            continue;
        }
        let r = find(&mut parent, v);
        if comp_id[r] == usize::MAX {
            comp_id[r] = ncomp;
            ncomp += 1;
        }
        comp_id[v] = comp_id[r];
    }

    let mut chi = vec![0i64; ncomp];
    let mut loops = vec![0usize; ncomp];
    for v in 0..nv {
        if used[v] {
            chi[comp_id[v]] += 1;
        }
    }
    for e in &conn.edges {
        chi[comp_id[e[0]]] -= 1;
    }
    for t in &mesh.triangles {
        chi[comp_id[t[0]]] += 1;
    }
    for l in conn.boundary_loops(mesh) {
        loops[comp_id[l[0]]] += 1;
    }

    let mut genus = 0usize;
    for c in 0..ncomp {
        let twice = 2 - chi[c] - loops[c] as i64;
        if twice < 0 || twice % 2 != 0 {
            return Err(Error::TopologyUndefined(format!(
                "component {c}: chi={} with {} boundary loops gives no integer genus",
                chi[c], loops[c]
            )));
        }
        genus += (twice / 2) as usize;
    }
    Ok(TopologyReport {
        euler: chi.iter().sum(),
        boundary_loops: loops.iter().sum(),
        components: ncomp,
        genus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::primitives;

    #[test]
    fn tetrahedron() {
        let t = topology(&primitives::tetrahedron::<f64>()).unwrap();
        assert_eq!((t.euler, t.boundary_loops, t.components, t.genus), (2, 0, 1, 0));
        assert_eq!(euler_characteristic(&primitives::tetrahedron::<f64>()), 2);
    }

    #[test]
    fn torus_grid() {
        let t = topology(&primitives::torus::<f64>(2.0, 0.5, 24, 12)).unwrap();
        assert_eq!((t.euler, t.boundary_loops, t.components, t.genus), (0, 0, 1, 1));
    }

    #[test]
    fn flat_disc() {
        let m = primitives::disc::<f64>(8.0, 1.0);
        assert_eq!(euler_characteristic(&m), 1);
        let t = topology(&m).unwrap();
        assert_eq!((t.boundary_loops, t.genus), (1, 0));
    }

    #[test]
    fn two_components_sum() {
        let a = primitives::torus::<f64>(2.0, 0.5, 16, 8);
        let b = primitives::icosphere::<f64>(1.0, 1);
        let m = primitives::disjoint_union(&a, &b.map_positions(|p| *p + crate::vec3::Vec3::new(10.0, 0.0, 0.0)));
        let t = topology(&m).unwrap();
        assert_eq!((t.components, t.genus, t.euler), (2, 1, 2));
    }
}
