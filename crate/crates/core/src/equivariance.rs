//! Finite rotation groups acting on meshes: construction, orbits,
//! symmetrization, defect measurement, and the Riemann–Hurwitz arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spatial::PointGrid;
use crate::trimesh::TriMesh;
use crate::vec3::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Trivial,
    Cyclic,
    Dihedral,
}

/// Finite group of rotations about the origin, stored element by element.
///
/// For `D_n` the first `n` elements are the rotations by `2πk/n` about the
/// vertical axis and the last `n` are the π-rotations `ψ_ℓ` about the
/// horizontal axes at angle `ℓπ/n`, `ℓ = 1..n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryGroup<T> {
    pub kind: GroupKind,
    pub n: usize,
    pub elements: Vec<Mat3<T>>,
}

impl<T: Real> SymmetryGroup<T> {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// The group containing only the identity.
    pub fn trivial() -> Self {
        SymmetryGroup {
            kind: GroupKind::Trivial,
            n: 1,
            elements: vec![Mat3::identity()],
        }
    }

    /// Unit vector along the horizontal axis `ξ_ℓ`.
    pub fn horizontal_axis(n: usize, l: usize) -> Vec3<T> {
        let a = T::PI() * T::from_usize_lossy(l) / T::from_usize_lossy(n);
        Vec3::new(a.cos(), a.sin(), T::zero())
    }

    /// Horizontal axes `ξ_1..ξ_n` for dihedral groups; empty otherwise.
    pub fn horizontal_axes(&self) -> Vec<Vec3<T>> {
        match self.kind {
            GroupKind::Dihedral => (1..=self.n).map(|l| Self::horizontal_axis(self.n, l)).collect(),
            _ => Vec::new(),
        }
    }

    /// The π-rotation `ψ_ℓ` of a dihedral group.
    pub fn psi(&self, l: usize) -> Option<&Mat3<T>> {
        match self.kind {
            GroupKind::Dihedral if (1..=self.n).contains(&l) => Some(&self.elements[self.n + l - 1]),
            _ => None,
        }
    }

    /// Index of the listed element equal to `m` within `tol` (Frobenius).
    pub fn find(&self, m: &Mat3<T>, tol: T) -> Option<usize> {
        self.elements.iter().position(|e| e.frobenius_dist(m) <= tol)
    }

    /// Parse names like `D3`, `C4` or `trivial`.
    pub fn parse(name: &str) -> Result<Self> {
        let s = name.trim();
        if s.eq_ignore_ascii_case("trivial") || s.eq_ignore_ascii_case("none") || s == "1" {
            return Ok(Self::trivial());
        }
        let (head, tail) = s.split_at(1.min(s.len()));
        let n: usize = tail
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unrecognised group '{name}' (expected Dn, Cn or trivial)")))?;
        match head {
            "D" | "d" => dihedral_group(n),
            "C" | "c" => cyclic_group(n),
            _ => Err(Error::InvalidInput(format!("unrecognised group '{name}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            GroupKind::Trivial => "trivial".into(),
            GroupKind::Cyclic => format!("C{}", self.n),
            GroupKind::Dihedral => format!("D{}", self.n),
        }
    }
}

fn vertical_rotations<T: Real>(n: usize) -> Vec<Mat3<T>> {
    let z = Vec3::unit(2);
    (0..n)
        .map(|k| {
            if k == 0 {
                Mat3::identity()
            } else {
                let a = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n);
                Mat3::rotation(z, a)
            }
        })
        .collect()
}

/// Dihedral rotation group `D_n` of order `2n`.
pub fn dihedral_group<T: Real>(n: usize) -> Result<SymmetryGroup<T>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("dihedral group needs n >= 2, got {n}")));
    }
    let mut elements = vertical_rotations(n);
    for l in 1..=n {
        elements.push(Mat3::rotation(SymmetryGroup::horizontal_axis(n, l), T::PI()));
    }
    Ok(SymmetryGroup {
        kind: GroupKind::Dihedral,
        n,
        elements,
    })
}

/// Cyclic group `C_n` of rotations about the vertical axis.
pub fn cyclic_group<T: Real>(n: usize) -> Result<SymmetryGroup<T>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("cyclic group needs n >= 2, got {n}")));
    }
    Ok(SymmetryGroup {
        kind: GroupKind::Cyclic,
        n,
        elements: vertical_rotations(n),
    })
}

/// Image of `mesh` under `q`; connectivity and labels unchanged.
pub fn apply_isometry<T: Real>(q: &Mat3<T>, mesh: &TriMesh<T>) -> TriMesh<T> {
    mesh.map_positions(|p| q.apply(p))
}

/// Partition of the vertices into group orbits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitStructure {
    pub orbit_of: Vec<usize>,
    /// Lowest vertex index of each orbit.
    pub representatives: Vec<usize>,
    pub stabilizer_size: Vec<usize>,
    /// `perm[g][v]` is the vertex matched to the image of `v` under element `g`.
    pub perm: Vec<Vec<usize>>,
    /// An element mapping the orbit representative onto each vertex.
    pub from_rep: Vec<usize>,
}

impl OrbitStructure {
    pub fn num_orbits(&self) -> usize {
        self.representatives.len()
    }

    pub fn orbit_size(&self, orbit: usize) -> usize {
        self.perm.len() / self.stabilizer_size[orbit]
    }

    /// Members of every orbit, each sorted.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.representatives.len()];
        for (v, &o) in self.orbit_of.iter().enumerate() {
            m[o].push(v);
        }
        m
    }

    /// Orbit labels in the per-vertex form stored on a mesh.
    pub fn labels(&self) -> Vec<Option<usize>> {
        self.orbit_of.iter().map(|&o| Some(o)).collect()
    }
}

/// Default matching tolerance: `1e-6` of the bounding-box diagonal.
pub fn default_tolerance<T: Real>(mesh: &TriMesh<T>) -> T {
    mesh.scale() * T::lit(1e-6)
}

/// Match every vertex image to a unique mesh vertex and collect orbits.
pub fn orbit_structure<T: Real>(mesh: &TriMesh<T>, group: &SymmetryGroup<T>, tol: T) -> Result<OrbitStructure> {
    let nv = mesh.vertices.len();
    let tolf = tol.as_f64();
    let grid = PointGrid::new(&mesh.vertices, (4.0 * tolf).max(mesh.scale().as_f64() * 1e-4));
    let mut perm = Vec::with_capacity(group.order());
    for (g, q) in group.elements.iter().enumerate() {
        let mut row = vec![0usize; nv];
        for v in 0..nv {
            let img = q.apply(&mesh.vertices[v]);
            let hits = grid.within(&img, tolf);
            match hits.len() {
                0 => return Err(Error::NotEquivariant { vertex: v, element: g }),
                1 => row[v] = hits[0],
                _ => return Err(Error::OrbitAmbiguous { vertex: v, element: g }),
            }
        }
        perm.push(row);
    }
    let mut orbit_of = vec![usize::MAX; nv];
    let mut from_rep = vec![0usize; nv];
    let mut representatives = Vec::new();
    let mut stabilizer_size = Vec::new();
    for v in 0..nv {
        if orbit_of[v] != usize::MAX {
            continue;
        }
        let id = representatives.len();
        representatives.push(v);
        let mut stab = 0;
        for (g, row) in perm.iter().enumerate() {
            let u = row[v];
            if u == v {
                stab += 1;
            }
            if orbit_of[u] == usize::MAX {
                orbit_of[u] = id;
                from_rep[u] = g;
            } else if orbit_of[u] != id {
                return Err(Error::OrbitAmbiguous { vertex: u, element: g });
            }
        }
        stabilizer_size.push(stab);
    }
    // orbit-stabilizer consistency guards against matching accidents
    let mut counts = vec![0usize; representatives.len()];
    for &o in &orbit_of {
        counts[o] += 1;
    }
    for (o, (&c, &s)) in counts.iter().zip(&stabilizer_size).enumerate() {
        if c * s != group.order() {
            return Err(Error::OrbitAmbiguous {
                vertex: representatives[o],
                element: 0,
            });
        }
    }
    Ok(OrbitStructure {
        orbit_of,
        representatives,
        stabilizer_size,
        perm,
        from_rep,
    })
}

/// Check that every group element maps triangles onto triangles under the
/// vertex matching in `orbits`.
pub fn check_connectivity<T: Real>(mesh: &TriMesh<T>, orbits: &OrbitStructure) -> Result<()> {
    let key = |t: [usize; 3]| {
        let mut k = t;
        k.sort_unstable();
        k
    };
    let tris: std::collections::HashSet<[usize; 3]> = mesh.triangles.iter().map(|t| key(*t)).collect();
    for (g, row) in orbits.perm.iter().enumerate() {
        for t in &mesh.triangles {
            if !tris.contains(&key(t.map(|v| row[v]))) {
                return Err(Error::NotEquivariant { vertex: t[0], element: g });
            }
        }
    }
    Ok(())
}

/// Replace each orbit by the group images of the average of its pulled-back
/// members. Exactly equivariant output; idempotent.
pub fn symmetrize<T: Real>(mesh: &TriMesh<T>, group: &SymmetryGroup<T>, orbits: &OrbitStructure) -> TriMesh<T> {
    let mut out = mesh.clone();
    symmetrize_positions(&mut out.vertices, group, orbits);
    out
}

/// In-place form of [`symmetrize`] acting on a position array.
pub fn symmetrize_positions<T: Real>(positions: &mut [Vec3<T>], group: &SymmetryGroup<T>, orbits: &OrbitStructure) {
    let inv_order = T::one() / T::from_usize_lossy(group.order());
    let transposes: Vec<Mat3<T>> = group.elements.iter().map(|q| q.transpose()).collect();
    let mut rep_pos = Vec::with_capacity(orbits.representatives.len());
    for &r in &orbits.representatives {
        let mut acc = Vec3::zero();
        for (g, qt) in transposes.iter().enumerate() {
            acc += qt.apply(&positions[orbits.perm[g][r]]);
        }
        rep_pos.push(acc * inv_order);
    }
    for v in 0..positions.len() {
        let o = orbits.orbit_of[v];
        positions[v] = group.elements[orbits.from_rep[v]].apply(&rep_pos[o]);
    }
}

/// Same averaging applied to a vector field that should transform like
/// positions (gradients, displacements).
pub fn symmetrize_field<T: Real>(field: &mut [Vec3<T>], group: &SymmetryGroup<T>, orbits: &OrbitStructure) {
    symmetrize_positions(field, group, orbits);
}

/// Largest distance from a mapped vertex to its nearest mesh vertex.
pub fn equivariance_defect<T: Real>(mesh: &TriMesh<T>, group: &SymmetryGroup<T>) -> T {
    let nv = mesh.vertices.len();
    if nv == 0 {
        return T::zero();
    }
    let cell = mesh.scale().as_f64() / (nv as f64).cbrt().max(1.0);
    let grid = PointGrid::new(&mesh.vertices, cell);
    let mut worst = 0.0f64;
    for q in &group.elements {
        for p in &mesh.vertices {
            if let Some((_, d)) = grid.nearest(&q.apply(p)) {
                worst = worst.max(d);
            }
        }
    }
    T::lit(worst)
}

/// `γ = (g+1)γ' + (j-1)g`: genus of a closed surface with a `C_{g+1}`
/// action whose quotient has genus `γ'` and which meets the rotation axis in
/// `2j` points.
pub fn riemann_hurwitz_genus(g: i64, quotient_genus: i64, axis_pairs: i64) -> i64 {
    (g + 1) * quotient_genus + (axis_pairs - 1) * g
}

/// All `(γ', j)` in the given ranges with `1 ≤ γ ≤ g`.
pub fn low_genus_solutions(g: i64, max_quotient_genus: i64, max_pairs: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for qg in 0..=max_quotient_genus {
        for j in 0..=max_pairs {
            let gamma = riemann_hurwitz_genus(g, qg, j);
            if 1 <= gamma && gamma <= g {
                out.push((qg, j));
            }
        }
    }
    out
}

/// Number of points where the line through the origin along `axis` crosses
/// the mesh. Crossings through shared edges or vertices count once.
pub fn axis_intersection_count<T: Real>(mesh: &TriMesh<T>, axis: Vec3<T>, tol: T) -> Result<usize> {
    Ok(axis_intersections(mesh, axis, tol)?.len())
}

/// Signed positions `s` along the unit axis of the crossings, merged within
/// `tol` and sorted.
pub fn axis_intersections<T: Real>(mesh: &TriMesh<T>, axis: Vec3<T>, tol: T) -> Result<Vec<T>> {
    let d = axis.normalized();
    if d.norm_sq() == T::zero() {
        return Err(Error::InvalidInput("axis direction is zero".into()));
    }
    let mut hits: Vec<T> = Vec::new();
    for (t, _) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = mesh.triangle_points(t);
        let (e1, e2) = (b - a, c - a);
        let n2 = e1.cross(&e2);
        let len = n2.norm();
        if len == T::zero() {
            continue;
        }
        // closest approach of the line to the triangle's plane test via Möller–Trumbore
        let pvec = d.cross(&e2);
        let det = e1.dot(&pvec);
        let scale = e1.norm().max(e2.norm());
        let u_num = (-a).dot(&pvec);
        let qvec = (-a).cross(&e1);
        let v_num = d.dot(&qvec);
        let edge_tol = tol / scale.max(T::tiny());
        if det.abs() <= T::tiny() * len {
            // axis parallel to the plane: only a problem if the axis lies in it
            let dist = a.dot(&(n2 / len)).abs();
            if dist <= tol && line_meets_triangle_in_plane(&[a, b, c], d, tol) {
                return Err(Error::AxisTangent(t));
            }
            continue;
        }
        let u = u_num / det;
        let v = v_num / det;
        if u < -edge_tol || v < -edge_tol || u + v > T::one() + edge_tol {
            continue;
        }
        // grazing incidence counts as tangency
        let cos = (det / (len)).abs();
        if cos < T::lit(1e-6) {
            return Err(Error::AxisTangent(t));
        }
        let s = e2.dot(&qvec) / det;
        hits.push(s);
    }
    hits.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<T> = Vec::new();
    for s in hits {
        if merged.last().map_or(true, |&l| (s - l).abs() > tol) {
            merged.push(s);
        }
    }
    Ok(merged)
}

fn line_meets_triangle_in_plane<T: Real>(p: &[Vec3<T>; 3], d: Vec3<T>, tol: T) -> bool {
    // distance from each vertex to the line; the line meets the triangle if
    // some vertex is on it or vertices lie on both sides
    let n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalized();
    let side = d.cross(&n);
    let s: Vec<T> = p.iter().map(|x| x.dot(&side)).collect();
    let (lo, hi) = s.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
    lo <= tol && hi >= -tol
}
