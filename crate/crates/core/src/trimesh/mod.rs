//! Triangle meshes: storage, adjacency, validation, topology, clipping,
//! remeshing and file formats.

mod clip;
mod io;
pub mod primitives;
pub mod remesh;
mod topology;
mod validate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vec3::Vec3;

pub use clip::clip_to_ball;
pub use io::{read_obj, read_ply, write_obj, write_ply, MeshFormat};
pub use remesh::{remesh, RemeshParams, RemeshStats, Sizing};
pub use topology::{euler_characteristic, topology, TopologyReport};
pub use validate::{validate, Diagnostics};

/// Sentinel for "no triangle" in edge adjacency.
pub const NONE: usize = usize::MAX;

/// Oriented triangle mesh, possibly with boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
    /// True exactly for vertices on an edge with one incident triangle.
    /// Refreshed by [`TriMesh::refresh_boundary`].
    pub boundary_flags: Vec<bool>,
    pub orbit_labels: Vec<Option<usize>>,
}

impl<T: Real> TriMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Self {
        let n = vertices.len();
        let mut m = TriMesh {
            vertices,
            triangles,
            boundary_flags: vec![false; n],
            orbit_labels: vec![None; n],
        };
        m.refresh_boundary();
        m
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Recompute `boundary_flags` from the connectivity.
    pub fn refresh_boundary(&mut self) {
        let mut count: HashMap<(usize, usize), u32> = HashMap::with_capacity(self.triangles.len() * 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        self.boundary_flags = vec![false; self.vertices.len()];
        for ((a, b), c) in count {
            if c == 1 {
                self.boundary_flags[a] = true;
                self.boundary_flags[b] = true;
            }
        }
        if self.orbit_labels.len() != self.vertices.len() {
            self.orbit_labels.resize(self.vertices.len(), None);
        }
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_flags[v]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary_flags.iter().any(|&b| b)
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice-area normal of triangle `t` (not normalized).
    pub fn triangle_normal2(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> T {
        self.triangle_normal2(t).norm() * T::lit(0.5)
    }

    /// Axis-aligned bounding box (min, max). Zero box for an empty mesh.
    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let mut it = self.vertices.iter().filter(|p| p.is_finite());
        let Some(first) = it.next() else {
            return (Vec3::zero(), Vec3::zero());
        };
        let (mut lo, mut hi) = (*first, *first);
        for p in it {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Bounding-box diagonal, the length scale used by relative tolerances.
    pub fn scale(&self) -> T {
        let (lo, hi) = self.bounding_box();
        let d = (hi - lo).norm();
        if d > T::zero() {
            d
        } else {
            T::one()
        }
    }

    /// Area-weighted vertex normals (unit, or zero where undefined).
    pub fn vertex_normals(&self) -> Vec<Vec3<T>> {
        let mut n = vec![Vec3::zero(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let fn2 = self.triangle_normal2(t);
            for &v in tri {
                n[v] += fn2;
            }
        }
        n.iter().map(|v| v.normalized()).collect()
    }

    /// Apply `f` to every vertex position.
    pub fn map_positions(&self, f: impl Fn(&Vec3<T>) -> Vec3<T>) -> Self {
        let mut m = self.clone();
        for p in m.vertices.iter_mut() {
            *p = f(p);
        }
        m
    }

    /// Reverse the winding of every triangle.
    pub fn flip_orientation(&mut self) {
        for t in self.triangles.iter_mut() {
            t.swap(1, 2);
        }
    }

    /// Drop vertices referenced by no triangle, renumbering the rest.
    pub fn compact(&mut self) -> Vec<usize> {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        let mut map = vec![NONE; self.vertices.len()];
        let mut verts = Vec::new();
        let mut labels = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                map[i] = verts.len();
                verts.push(self.vertices[i]);
                labels.push(self.orbit_labels.get(i).copied().flatten());
            }
        }
        for t in self.triangles.iter_mut() {
            for v in t.iter_mut() {
                *v = map[*v];
            }
        }
        self.vertices = verts;
        self.orbit_labels = labels;
        self.refresh_boundary();
        map
    }

    /// Convert to another scalar type.
    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh {
            vertices: self.vertices.iter().map(|p| p.cast()).collect(),
            triangles: self.triangles.clone(),
            boundary_flags: self.boundary_flags.clone(),
            orbit_labels: self.orbit_labels.clone(),
        }
    }

    /// Edge lengths of every undirected edge.
    pub fn edge_lengths(&self) -> Vec<T> {
        let c = Connectivity::build(self);
        c.edges
            .iter()
            .map(|e| self.vertices[e[0]].dist(&self.vertices[e[1]]))
            .collect()
    }
}

/// Derived adjacency of a [`TriMesh`]. Rebuilt whenever connectivity changes.
#[derive(Clone, Debug)]
pub struct Connectivity {
    /// Undirected edges with `e[0] < e[1]`.
    pub edges: Vec<[usize; 2]>,
    /// Incident triangles per edge; second slot is [`NONE`] on the boundary.
    pub edge_tris: Vec<[usize; 2]>,
    /// Edges carrying three or more triangles.
    pub nonmanifold_edges: Vec<usize>,
    pub tri_edges: Vec<[usize; 3]>,
    pub edge_index: HashMap<(usize, usize), usize>,
    vert_tri_offsets: Vec<usize>,
    vert_tri_list: Vec<usize>,
}

impl Connectivity {
    pub fn build<T: Real>(mesh: &TriMesh<T>) -> Self {
        let nt = mesh.triangles.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(nt * 2);
        let mut edges = Vec::with_capacity(nt * 3 / 2 + 8);
        let mut edge_tris: Vec<[usize; 2]> = Vec::with_capacity(nt * 3 / 2 + 8);
        let mut nonmanifold = Vec::new();
        let mut tri_edges = vec![[0usize; 3]; nt];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push([NONE, NONE]);
                    edges.len() - 1
                });
                let slot = &mut edge_tris[e];
                if slot[0] == NONE {
                    slot[0] = t;
                } else if slot[1] == NONE {
                    slot[1] = t;
                } else if !nonmanifold.contains(&e) {
                    nonmanifold.push(e);
                }
                tri_edges[t][k] = e;
            }
        }
        let nv = mesh.vertices.len();
        let mut counts = vec![0usize; nv + 1];
        for tri in &mesh.triangles {
            for &v in tri {
                counts[v + 1] += 1;
            }
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut list = vec![0usize; counts[nv]];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &v in tri {
                list[fill[v]] = t;
                fill[v] += 1;
            }
        }
        Connectivity {
            edges,
            edge_tris,
            nonmanifold_edges: nonmanifold,
            tri_edges,
            edge_index,
            vert_tri_offsets: counts,
            vert_tri_list: list,
        }
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_tris[e][1] == NONE
    }

    /// Triangles incident to vertex `v`.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vert_tri_list[self.vert_tri_offsets[v]..self.vert_tri_offsets[v + 1]]
    }

    /// Distinct neighbours of `v`, sorted.
    pub fn vertex_neighbors<T: Real>(&self, mesh: &TriMesh<T>, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .vertex_triangles(v)
            .iter()
            .flat_map(|&t| mesh.triangles[t])
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Vertex opposite edge `e` in triangle `t`.
    pub fn opposite<T: Real>(&self, mesh: &TriMesh<T>, e: usize, t: usize) -> usize {
        let [a, b] = self.edges[e];
        mesh.triangles[t]
            .iter()
            .copied()
            .find(|&v| v != a && v != b)
            .expect("edge belongs to triangle")
    }

    /// Closed boundary loops, each as an ordered vertex cycle following the
    /// boundary orientation induced by the triangles.
    pub fn boundary_loops<T: Real>(&self, mesh: &TriMesh<T>) -> Vec<Vec<usize>> {
        // directed boundary half-edges a -> b as they appear in their triangle
        let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
        for (e, et) in self.edge_tris.iter().enumerate() {
            if et[1] != NONE || et[0] == NONE {
                continue;
            }
            let tri = mesh.triangles[et[0]];
            let [a, b] = self.edges[e];
            let (from, to) = if (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b) {
                (a, b)
            } else {
                (b, a)
            };
            next.entry(from).or_default().push(to);
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut loops = Vec::new();
        for s in starts {
            while let Some(list) = next.get_mut(&s) {
                let Some(mut cur) = list.pop() else { break };
                let mut cycle = vec![s];
                let mut guard = 0usize;
                while cur != s && guard <= self.edges.len() {
                    cycle.push(cur);
                    let Some(nx) = next.get_mut(&cur).and_then(|l| l.pop()) else {
                        break;
                    };
                    cur = nx;
                    guard += 1;
                }
                loops.push(cycle);
            }
        }
        loops
    }
}
