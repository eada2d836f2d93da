//! Reference meshes: tetrahedron, icosphere, torus, discs and cylinders, plus
//! the ring-by-ring builder the seed generators share.

use crate::scalar::Real;
use crate::trimesh::TriMesh;
use crate::vec3::Vec3;

/// A ring of vertices laid out at angles `2πj/count`, or a single pole.
#[derive(Clone, Copy, Debug)]
pub struct Ring {
    pub start: usize,
    pub count: usize,
}

impl Ring {
    pub fn index(&self, j: usize) -> usize {
        self.start + j % self.count
    }
}

/// Incremental builder for meshes made of concentric rings.
///
/// Consecutive rings are zipped together so the triangulation is invariant
/// under the dihedral group of order `2m` acting on the angle (rotations by
/// `2π/m` and reflections across angles `kπ/m`), provided every ring count
/// is a multiple of `2m`.
#[derive(Clone, Debug, Default)]
pub struct RingBuilder<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
}

impl<T: Real> RingBuilder<T> {
    pub fn new() -> Self {
        RingBuilder {
            vertices: Vec::new(),
            triangles: Vec::new(),
        }
    }

    pub fn add_ring(&mut self, points: impl IntoIterator<Item = Vec3<T>>) -> Ring {
        let start = self.vertices.len();
        self.vertices.extend(points);
        Ring {
            start,
            count: self.vertices.len() - start,
        }
    }

    /// Triangulate the band between two rings. With `flip == false` the
    /// winding is counter-clockwise when `inner` is drawn inside `outer` and
    /// angles increase counter-clockwise.
    pub fn connect(&mut self, inner: Ring, outer: Ring, m: usize, flip: bool) {
        let mut push = |t: [usize; 3], rev: bool| {
            let t = if rev != flip { [t[0], t[2], t[1]] } else { t };
            self.triangles.push(t);
        };
        if inner.count == 1 || outer.count == 1 {
            let (pole, ring, rev) = if inner.count == 1 {
                (inner.start, outer, false)
            } else {
                (outer.start, inner, true)
            };
            for j in 0..ring.count {
                push([pole, ring.index(j), ring.index(j + 1)], rev);
            }
            return;
        }
        let (na, nb) = (inner.count, outer.count);
        assert!(na % (2 * m) == 0 && nb % (2 * m) == 0, "ring counts must be multiples of 2m");
        for k in 0..m {
            let (a0, a1) = (k * na / m, (2 * k + 1) * na / (2 * m));
            let (b0, b1) = (k * nb / m, (2 * k + 1) * nb / (2 * m));
            let mut half = Vec::new();
            let (mut i, mut j) = (a0, b0);
            while i < a1 || j < b1 {
                let adv_inner = if i == a1 {
                    false
                } else if j == b1 {
                    true
                } else {
                    // compare (i+1)/na with (j+1)/nb exactly
                    (i + 1) * nb <= (j + 1) * na
                };
                if adv_inner {
                    half.push([(0, i), (1, j), (0, i + 1)]);
                    i += 1;
                } else {
                    half.push([(0, i), (1, j), (1, j + 1)]);
                    j += 1;
                }
            }
            let idx = |(r, j): (u8, usize)| if r == 0 { inner.index(j) } else { outer.index(j) };
            // reflect across the sector midline (2k+1)π/m
            let mirror = |(r, j): (u8, usize)| {
                let n = if r == 0 { na } else { nb };
                (r, ((2 * k + 1) * n / m + n - j % n) % n)
            };
            for t in &half {
                push([idx(t[0]), idx(t[1]), idx(t[2])], false);
                push([idx(mirror(t[0])), idx(mirror(t[1])), idx(mirror(t[2]))], true);
            }
        }
    }

    pub fn build(self) -> TriMesh<T> {
        TriMesh::new(self.vertices, self.triangles)
    }
}

/// Smallest multiple of `m` that is at least `max(x, m)`.
pub fn round_up_multiple(x: f64, m: usize) -> usize {
    let k = (x / m as f64).ceil().max(1.0) as usize;
    k * m
}

pub fn ring_points<T: Real>(count: usize, f: impl Fn(T) -> Vec3<T>) -> Vec<Vec3<T>> {
    let two_pi = T::PI() + T::PI();
    (0..count)
        .map(|j| f(two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(count)))
        .collect()
}

pub fn tetrahedron<T: Real>() -> TriMesh<T> {
    let s = T::one();
    let v = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    TriMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Subdivided icosahedron projected to the sphere of `radius`, oriented
/// outward. A vertex sits on each pole and the π-rotation about the x-axis
/// is a symmetry, so the mesh is invariant under the dihedral group `D5`.
pub fn icosphere<T: Real>(radius: T, level: usize) -> TriMesh<T> {
    let pi = T::PI();
    let tenth = pi / T::lit(10.0);
    let zr = T::one() / T::lit(5.0).sqrt();
    let rr = T::lit(2.0) * zr;
    let mut v = vec![Vec3::new(T::zero(), T::zero(), T::one())];
    for k in 0..5 {
        let a = -tenth + T::lit(0.4) * pi * T::from_usize_lossy(k);
        v.push(Vec3::new(rr * a.cos(), rr * a.sin(), zr));
    }
    for k in 0..5 {
        let a = tenth + T::lit(0.4) * pi * T::from_usize_lossy(k);
        v.push(Vec3::new(rr * a.cos(), rr * a.sin(), -zr));
    }
    v.push(Vec3::new(T::zero(), T::zero(), -T::one()));
    let (u, l) = (|k: usize| 1 + k % 5, |k: usize| 6 + k % 5);
    let mut f = Vec::new();
    for k in 0..5 {
        f.push([0, u(k), u(k + 1)]);
        f.push([u(k), l(k), u(k + 1)]);
        f.push([l(k), l(k + 1), u(k + 1)]);
        f.push([11, l(k + 1), l(k)]);
    }
    let mut mesh = TriMesh::new(v, f);
    for _ in 0..level {
        mesh = midpoint_subdivide(&mesh);
        for p in mesh.vertices.iter_mut() {
            *p = p.normalized();
        }
    }
    for p in mesh.vertices.iter_mut() {
        *p = *p * radius;
    }
    mesh
}

/// 1-to-4 midpoint subdivision.
pub fn midpoint_subdivide<T: Real>(mesh: &TriMesh<T>) -> TriMesh<T> {
    use std::collections::HashMap;
    let mut verts = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut get = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>| {
        *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
            verts.push((verts[a] + verts[b]) * T::lit(0.5));
            verts.len() - 1
        })
    };
    let mut tris = Vec::with_capacity(mesh.triangles.len() * 4);
    for &[a, b, c] in &mesh.triangles {
        let ab = get(a, b, &mut verts);
        let bc = get(b, c, &mut verts);
        let ca = get(c, a, &mut verts);
        tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    TriMesh::new(verts, tris)
}

/// Torus of revolution about the z-axis.
pub fn torus<T: Real>(major: T, minor: T, nu: usize, nv: usize) -> TriMesh<T> {
    let two_pi = T::PI() + T::PI();
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(nu);
        for j in 0..nv {
            let w = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(nv);
            let r = major + minor * w.cos();
            v.push(Vec3::new(r * u.cos(), r * u.sin(), minor * w.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut f = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(v, f)
}

/// Flat disc of `radius` in the plane `z = 0`, roughly uniform edge length
/// `edge`, upward normal, symmetric under the dihedral group of order 24.
pub fn disc<T: Real>(radius: T, edge: T) -> TriMesh<T> {
    disc_symmetric(radius, edge, 12)
}

/// Flat disc whose triangulation is invariant under `D_m` acting in the plane.
pub fn disc_symmetric<T: Real>(radius: T, edge: T, m: usize) -> TriMesh<T> {
    let rings = (radius / edge).ceil().to_usize().unwrap_or(1).max(1);
    let mut b = RingBuilder::new();
    let mut prev = b.add_ring([Vec3::zero()]);
    for i in 1..=rings {
        let r = radius * T::from_usize_lossy(i) / T::from_usize_lossy(rings);
        let n = round_up_multiple(std::f64::consts::TAU * r.as_f64() / edge.as_f64(), 2 * m);
        let ring = b.add_ring(ring_points(n, |a: T| Vec3::new(r * a.cos(), r * a.sin(), T::zero())));
        b.connect(prev, ring, m, false);
        prev = ring;
    }
    b.build()
}

/// Vertical cylinder of `radius` about the z-axis, clipped to the ball of
/// radius `ball`: its two boundary circles lie exactly on the sphere.
pub fn clipped_cylinder<T: Real>(radius: T, ball: T, edge: T) -> TriMesh<T> {
    let zmax = (ball * ball - radius * radius).sqrt();
    let n = round_up_multiple(std::f64::consts::TAU * radius.as_f64() / edge.as_f64(), 8);
    let rows = (T::lit(2.0) * zmax / (edge * T::lit(0.866))).ceil().to_usize().unwrap_or(2).max(2);
    let mut b = RingBuilder::new();
    let mut prev: Option<Ring> = None;
    for i in 0..=rows {
        let z = -zmax + T::lit(2.0) * zmax * T::from_usize_lossy(i) / T::from_usize_lossy(rows);
        let ring = b.add_ring(ring_points(n, |a: T| Vec3::new(radius * a.cos(), radius * a.sin(), z)));
        if let Some(p) = prev {
            // upward rings with counter-clockwise angles give an outward normal
            b.connect(p, ring, 4, true);
        }
        prev = Some(ring);
    }
    b.build()
}

/// Disjoint union of two meshes.
pub fn disjoint_union<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>) -> TriMesh<T> {
    let off = a.vertices.len();
    let mut v = a.vertices.clone();
    v.extend_from_slice(&b.vertices);
    let mut f = a.triangles.clone();
    f.extend(b.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
    TriMesh::new(v, f)
}

/// Signed enclosed volume (positive for outward-oriented closed meshes).
pub fn signed_volume<T: Real>(mesh: &TriMesh<T>) -> T {
    mesh.triangles
        .iter()
        .map(|&[a, b, c]| {
            mesh.vertices[a].dot(&mesh.vertices[b].cross(&mesh.vertices[c])) / T::lit(6.0)
        })
        .sum()
}

/// Attach `handles` tubes and punch `holes` boundary loops into a refined
/// icosphere. Purely combinatorial: the result is a valid oriented manifold
/// of genus `handles` with `holes` boundary loops, though tubes may pass
/// through the sphere geometrically. `pick` chooses triangle indices.
pub fn handle_body<T: Real>(handles: usize, holes: usize, mut pick: impl FnMut(usize) -> usize) -> TriMesh<T> {
    let base = icosphere::<T>(T::one(), 2);
    let mut tris = base.triangles.clone();
    let mut touched = vec![false; base.vertices.len()];
    let mut removed = vec![false; tris.len()];
    let mut take = |touched: &mut Vec<bool>, removed: &mut Vec<bool>| loop {
        let t = pick(tris.len());
        let tri = tris[t];
        if !removed[t] && tri.iter().all(|&v| !touched[v]) {
            removed[t] = true;
            // lock the closed neighbourhood so later picks stay disjoint
            for (u, other) in tris.iter().enumerate() {
                if other.iter().any(|v| tri.contains(v)) {
                    for &w in other {
                        touched[w] = true;
                    }
                    let _ = u;
                }
            }
            return tri;
        }
    };
    let mut extra = Vec::new();
    for _ in 0..handles {
        let a = take(&mut touched, &mut removed);
        let b = take(&mut touched, &mut removed);
        let s = |i: usize| (3 - i % 3) % 3;
        for i in 0..3 {
            extra.push([a[i], a[(i + 1) % 3], b[s(i + 1)]]);
            extra.push([a[i], b[s(i + 1)], b[s(i)]]);
        }
    }
    for _ in 0..holes {
        take(&mut touched, &mut removed);
    }
    let mut kept: Vec<[usize; 3]> = tris
        .drain(..)
        .zip(removed.iter())
        .filter(|(_, &r)| !r)
        .map(|(t, _)| t)
        .collect();
    kept.extend(extra);
    TriMesh::new(base.vertices, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::{topology, validate};

    #[test]
    fn icosphere_is_valid_and_outward() {
        for level in 0..3 {
            let m = icosphere::<f64>(2.0, level);
            assert!(validate(&m).is_valid());
            assert_eq!(m.triangles.len(), 20 * 4usize.pow(level as u32));
            assert!(signed_volume(&m) > 0.0);
        }
    }

    #[test]
    fn disc_and_cylinder_topology() {
        let d = disc::<f64>(8.0, 0.7);
        assert!(validate(&d).is_valid());
        let t = topology(&d).unwrap();
        assert_eq!((t.euler, t.boundary_loops), (1, 1));
        assert!(d.vertex_normals()[0].z() > 0.99);

        let c = clipped_cylinder::<f64>(2f64.sqrt(), 8.0, 0.4);
        assert!(validate(&c).is_valid());
        let t = topology(&c).unwrap();
        assert_eq!((t.genus, t.boundary_loops), (0, 2));
        let n = c.vertex_normals();
        let p = c.vertices[c.vertices.len() / 2];
        assert!(n[c.vertices.len() / 2].dot(&Vec3::new(p.x(), p.y(), 0.0)) > 0.0);
    }

    #[test]
    fn handle_body_bookkeeping() {
        let mut state = 7usize;
        let mut rng = |n: usize| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % n
        };
        let m = handle_body::<f64>(3, 2, &mut rng);
        assert!(validate(&m).is_combinatorially_valid());
        let t = topology(&m).unwrap();
        assert_eq!((t.genus, t.boundary_loops, t.components), (3, 2, 1));
    }
}
