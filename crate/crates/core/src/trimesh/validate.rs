use std::collections::HashMap;

use serde::Serialize;

use super::{Connectivity, TriMesh, NONE};
use crate::scalar::Real;

/// Defect report produced by [`validate`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub nonfinite_vertices: Vec<usize>,
    pub bad_indices: Vec<usize>,
    /// Edges carried by more than two triangles.
    pub nonmanifold_edges: Vec<[usize; 2]>,
    /// Vertices whose incident triangles do not form a single fan.
    pub nonmanifold_vertices: Vec<usize>,
    /// Edges traversed in the same direction by both incident triangles.
    pub orientation_defects: Vec<[usize; 2]>,
    /// Pairs of vertices closer than `1e-9` times the bounding-box diagonal.
    pub duplicate_vertices: Vec<(usize, usize)>,
    /// Triangles with area below `1e-14` times the squared bounding-box diagonal.
    pub degenerate_triangles: Vec<usize>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.defect_count() == 0
    }

    pub fn defect_count(&self) -> usize {
        self.nonfinite_vertices.len()
            + self.bad_indices.len()
            + self.nonmanifold_edges.len()
            + self.nonmanifold_vertices.len()
            + self.orientation_defects.len()
            + self.duplicate_vertices.len()
            + self.degenerate_triangles.len()
    }

    /// True when only geometric (not combinatorial) defects are present.
    pub fn is_combinatorially_valid(&self) -> bool {
        self.bad_indices.is_empty()
            && self.nonmanifold_edges.is_empty()
            && self.nonmanifold_vertices.is_empty()
            && self.orientation_defects.is_empty()
    }
}

pub fn validate<T: Real>(mesh: &TriMesh<T>) -> Diagnostics {
    let mut d = Diagnostics::default();
    let nv = mesh.vertices.len();
    for (i, p) in mesh.vertices.iter().enumerate() {
        if !p.is_finite() {
            d.nonfinite_vertices.push(i);
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            d.bad_indices.push(t);
        }
    }
    if !d.bad_indices.is_empty() {
        return d;
    }

    let conn = Connectivity::build(mesh);
    for &e in &conn.nonmanifold_edges {
        d.nonmanifold_edges.push(conn.edges[e]);
    }
    for (e, et) in conn.edge_tris.iter().enumerate() {
        if et[1] == NONE || conn.nonmanifold_edges.contains(&e) {
            continue;
        }
        let [a, b] = conn.edges[e];
        let dir = |t: usize| {
            let tri = mesh.triangles[t];
            (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
        };
        if dir(et[0]) == dir(et[1]) {
            d.orientation_defects.push([a, b]);
        }
    }
    for v in 0..nv {
        if !vertex_is_single_fan(&conn, v) {
            d.nonmanifold_vertices.push(v);
        }
    }

    let scale = mesh.scale();
    let area_tol = T::lit(1e-14) * scale * scale;
    for t in 0..mesh.triangles.len() {
        let a = mesh.triangle_area(t);
        if !(a >= area_tol) {
            d.degenerate_triangles.push(t);
        }
    }
    d.duplicate_vertices = close_pairs(mesh, T::lit(1e-9) * scale);
    d
}

fn vertex_is_single_fan(conn: &Connectivity, v: usize) -> bool {
    let tris = conn.vertex_triangles(v);
    if tris.len() <= 1 {
        return true;
    }
    // union-find over incident triangles joined through edges containing v
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let local: HashMap<usize, usize> = tris.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    for &t in tris {
        for &e in &conn.tri_edges[t] {
            let [a, b] = conn.edges[e];
            if a != v && b != v {
                continue;
            }
            for &o in &conn.edge_tris[e] {
                if o != NONE && o != t {
                    if let Some(&j) = local.get(&o) {
                        let (ri, rj) = (find(&mut parent, local[&t]), find(&mut parent, j));
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let r0 = find(&mut parent, 0);
    (1..tris.len()).all(|i| find(&mut parent, i) == r0)
}

/// Vertex pairs closer than `tol`, found with a uniform spatial hash.
pub(crate) fn close_pairs<T: Real>(mesh: &TriMesh<T>, tol: T) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if !(tol > T::zero()) {
        return out;
    }
    let cell = |x: T| (x / tol).floor().to_i64().unwrap_or(i64::MIN);
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in mesh.vertices.iter().enumerate() {
        if !p.is_finite() {
            continue;
        }
        let key = (cell(p.x()), cell(p.y()), cell(p.z()));
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(key.0 + dx, key.1 + dy, key.2 + dz)) {
                        for &j in list {
                            if mesh.vertices[j].dist(p) < tol {
                                out.push((j, i));
                            }
                        }
                    }
                }
            }
        }
        grid.entry(key).or_default().push(i);
    }
    out
}
