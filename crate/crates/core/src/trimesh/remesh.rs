//! Isotropic remeshing: split, collapse, flip and tangential relaxation,
//! optionally carried out orbit by orbit under a rotation group.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{topology, Connectivity, TriMesh, NONE};
use crate::equivariance::{orbit_structure, symmetrize_positions, OrbitStructure, SymmetryGroup};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Target edge length as a function of position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sizing {
    pub edge: f64,
    /// When set, the target grows linearly beyond this radius:
    /// `h(x) = edge · max(1, |x| / grade_radius)`.
    pub grade_radius: Option<f64>,
    /// Upper bound on the graded target.
    #[serde(default)]
    pub max_edge: Option<f64>,
}

impl Sizing {
    pub fn uniform(edge: f64) -> Self {
        Sizing {
            edge,
            grade_radius: None,
            max_edge: None,
        }
    }

    pub fn graded(edge: f64, grade_radius: f64) -> Self {
        Sizing {
            edge,
            grade_radius: Some(grade_radius),
            max_edge: None,
        }
    }

    pub fn at<T: Real>(&self, p: &Vec3<T>) -> T {
        let e = T::lit(self.edge);
        let h = match self.grade_radius {
            Some(r) if r > 0.0 => e * (p.norm() / T::lit(r)).max(T::one()),
            _ => e,
        };
        match self.max_edge {
            Some(m) => h.min(T::lit(m).max(e)),
            None => h,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemeshParams {
    pub sizing: Sizing,
    pub split_ratio: f64,
    pub collapse_ratio: f64,
    pub max_passes: usize,
    pub relax_iters: usize,
    pub relax_weight: f64,
    /// Sphere carrying the boundary. `None` infers it from the boundary
    /// vertices when they share one radius, otherwise boundary stays fixed.
    pub boundary_radius: Option<f64>,
}

impl RemeshParams {
    pub fn new(sizing: Sizing) -> Self {
        RemeshParams {
            sizing,
            split_ratio: 4.0 / 3.0,
            collapse_ratio: 4.0 / 5.0,
            max_passes: 6,
            relax_iters: 3,
            relax_weight: 0.5,
            boundary_radius: None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RemeshStats {
    pub passes: usize,
    pub splits: usize,
    pub collapses: usize,
    pub skipped_collapses: usize,
    pub flips: usize,
    /// Fraction of edges whose length lies in the target band afterwards.
    pub in_band: f64,
    /// Set when the pass budget ran out before the mesh settled.
    pub unsettled: bool,
}

/// Remesh toward a uniform `target_edge`, preserving topology.
pub fn remesh<T: Real>(mesh: &TriMesh<T>, target_edge: T, group: Option<&SymmetryGroup<T>>) -> Result<TriMesh<T>> {
    remesh_with(mesh, &RemeshParams::new(Sizing::uniform(target_edge.as_f64())), group).map(|(m, _)| m)
}

struct Work<'a, T: Real> {
    mesh: TriMesh<T>,
    params: &'a RemeshParams,
    group: Option<&'a SymmetryGroup<T>>,
    sphere: Option<T>,
    stats: RemeshStats,
}

/// Remesh with explicit parameters; returns the mesh and operation counts.
pub fn remesh_with<T: Real>(
    mesh: &TriMesh<T>,
    params: &RemeshParams,
    group: Option<&SymmetryGroup<T>>,
) -> Result<(TriMesh<T>, RemeshStats)> {
    if !(params.sizing.edge > 0.0) {
        return Err(Error::InvalidInput(format!("target edge must be positive, got {}", params.sizing.edge)));
    }
    let before = topology(mesh)?;
    let group = group.filter(|g| g.order() > 1);
    let mut work = Work {
        mesh: mesh.clone(),
        params,
        group,
        sphere: params.boundary_radius.map(T::lit).or_else(|| infer_sphere(mesh)),
        stats: RemeshStats::default(),
    };
    work.mesh.refresh_boundary();
    let mut settled = false;
    for _ in 0..params.max_passes {
        work.stats.passes += 1;
        let s = work.split_pass()?;
        let mut c = 0;
        for _ in 0..6 {
            let k = work.collapse_pass()?;
            c += k;
            if k == 0 {
                break;
            }
        }
        let mut f = 0;
        for _ in 0..3 {
            let k = work.flip_pass()?;
            f += k;
            if k == 0 {
                break;
            }
        }
        work.relax()?;
        if s + c + f == 0 {
            settled = true;
            break;
        }
    }
    work.stats.unsettled = !settled;
    if !settled {
        log::warn!("remesh: edge-length band not reached after {} passes", params.max_passes);
    }
    let mut out = work.mesh;
    out.refresh_boundary();
    if let Some(g) = group {
        let o = orbit_structure(&out, g, out.scale() * T::lit(1e-6))?;
        out.orbit_labels = o.labels();
    } else {
        out.orbit_labels = vec![None; out.vertices.len()];
    }
    let after = topology(&out)?;
    if after != before {
        return Err(Error::TopologyDrift {
            before: before.to_string(),
            after: after.to_string(),
        });
    }
    work.stats.in_band = in_band_fraction(&out, &params.sizing, params.collapse_ratio, params.split_ratio);
    Ok((out, work.stats))
}

/// Fraction of edges with `lo·h ≤ |e| ≤ hi·h`, `h` taken at the midpoint.
pub fn in_band_fraction<T: Real>(mesh: &TriMesh<T>, sizing: &Sizing, lo: f64, hi: f64) -> f64 {
    let c = Connectivity::build(mesh);
    if c.edges.is_empty() {
        return 1.0;
    }
    let ok = c
        .edges
        .iter()
        .filter(|e| {
            let (p, q) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
            let h = sizing.at(&((p + q) * T::lit(0.5))).as_f64();
            let l = p.dist(&q).as_f64();
            l >= lo * h * (1.0 - 1e-9) && l <= hi * h * (1.0 + 1e-9)
        })
        .count();
    ok as f64 / c.edges.len() as f64
}

/// Common radius of all boundary vertices, if they share one.
fn infer_sphere<T: Real>(mesh: &TriMesh<T>) -> Option<T> {
    let radii: Vec<T> = (0..mesh.vertices.len())
        .filter(|&v| mesh.boundary_flags.get(v).copied().unwrap_or(false))
        .map(|v| mesh.vertices[v].norm())
        .collect();
    let first = *radii.first()?;
    let tol = first * T::lit(1e-6);
    if first > T::zero() && radii.iter().all(|r| (*r - first).abs() <= tol) {
        Some(first)
    } else {
        None
    }
}

fn valence_target(boundary: bool) -> i64 {
    if boundary {
        4
    } else {
        6
    }
}

impl<'a, T: Real> Work<'a, T> {
    fn orbits(&self) -> Result<Option<OrbitStructure>> {
        match self.group {
            Some(g) => Ok(Some(orbit_structure(&self.mesh, g, self.mesh.scale() * T::lit(1e-6))?)),
            None => Ok(None),
        }
    }

    fn h(&self, p: &Vec3<T>) -> T {
        self.params.sizing.at(p)
    }

    fn edge_len(&self, c: &Connectivity, e: usize) -> T {
        let [a, b] = c.edges[e];
        self.mesh.vertices[a].dist(&self.mesh.vertices[b])
    }

    fn edge_mid(&self, c: &Connectivity, e: usize) -> Vec3<T> {
        let [a, b] = c.edges[e];
        (self.mesh.vertices[a] + self.mesh.vertices[b]) * T::lit(0.5)
    }

    fn to_sphere(&self, p: Vec3<T>) -> Vec3<T> {
        match self.sphere {
            Some(r) if p.norm() > T::zero() => p * (r / p.norm()),
            _ => p,
        }
    }

    /// Edge orbits as lists of distinct edge ids, ordered by representative.
    fn edge_orbits(&self, c: &Connectivity, orbits: Option<&OrbitStructure>) -> Result<Vec<Vec<usize>>> {
        let ne = c.edges.len();
        let Some(o) = orbits else {
            return Ok((0..ne).map(|e| vec![e]).collect());
        };
        let mut seen = vec![false; ne];
        let mut out = Vec::new();
        for e in 0..ne {
            if seen[e] {
                continue;
            }
            let [a, b] = c.edges[e];
            let mut members = Vec::new();
            for (g, row) in o.perm.iter().enumerate() {
                let img = c.edge(row[a], row[b]).ok_or(Error::NotEquivariant { vertex: a, element: g })?;
                if !seen[img] {
                    seen[img] = true;
                    members.push(img);
                }
            }
            out.push(members);
        }
        Ok(out)
    }

    fn split_pass(&mut self) -> Result<usize> {
        let orbits = self.orbits()?;
        let c = Connectivity::build(&self.mesh);
        let ratio = T::lit(self.params.split_ratio);
        let mut marked = vec![false; c.edges.len()];
        for orbit in self.edge_orbits(&c, orbits.as_ref())? {
            let e = orbit[0];
            if self.edge_len(&c, e) > ratio * self.h(&self.edge_mid(&c, e)) {
                for &m in &orbit {
                    marked[m] = true;
                }
            }
        }
        if !marked.iter().any(|&m| m) {
            return Ok(0);
        }
        // red-green closure: a triangle with two marked edges gets all three
        loop {
            let mut changed = false;
            for te in &c.tri_edges {
                let k = te.iter().filter(|&&e| marked[e]).count();
                if k == 2 {
                    for &e in te {
                        marked[e] = true;
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut mid = vec![NONE; c.edges.len()];
        let mut count = 0;
        for e in 0..c.edges.len() {
            if marked[e] {
                let mut p = self.edge_mid(&c, e);
                if c.is_boundary_edge(e) {
                    p = self.to_sphere(p);
                }
                mid[e] = self.mesh.vertices.len();
                self.mesh.vertices.push(p);
                count += 1;
            }
        }
        let mut tris = Vec::with_capacity(self.mesh.triangles.len() + 3 * count);
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            // tri_edges[t][k] is the edge (tri[k], tri[k+1])
            let te = c.tri_edges[t];
            let m = [mid[te[0]], mid[te[1]], mid[te[2]]];
            let k = m.iter().filter(|&&x| x != NONE).count();
            match k {
                0 => tris.push(*tri),
                1 => {
                    let j = (0..3).find(|&j| m[j] != NONE).unwrap();
                    let (a, b, cc) = (tri[j], tri[(j + 1) % 3], tri[(j + 2) % 3]);
                    tris.push([a, m[j], cc]);
                    tris.push([m[j], b, cc]);
                }
                _ => {
                    let [a, b, cc] = *tri;
                    tris.push([a, m[0], m[2]]);
                    tris.push([m[0], b, m[1]]);
                    tris.push([m[2], m[1], cc]);
                    tris.push([m[0], m[1], m[2]]);
                }
            }
        }
        self.mesh.triangles = tris;
        self.mesh.refresh_boundary();
        self.stats.splits += count;
        Ok(count)
    }

    fn collapse_pass(&mut self) -> Result<usize> {
        let orbits = self.orbits()?;
        let c = Connectivity::build(&self.mesh);
        let nv = self.mesh.vertices.len();
        let ratio = T::lit(self.params.collapse_ratio);
        let split = T::lit(self.params.split_ratio);
        let neighbors: Vec<Vec<usize>> = (0..nv).map(|v| c.vertex_neighbors(&self.mesh, v)).collect();
        let boundary = self.mesh.boundary_flags.clone();
        let mut loop_len = vec![usize::MAX; nv];
        for l in c.boundary_loops(&self.mesh) {
            for &v in &l {
                loop_len[v] = l.len();
            }
        }
        let stab_set = |v: usize| -> Vec<usize> {
            match &orbits {
                Some(o) => (0..o.perm.len()).filter(|&g| o.perm[g][v] == v).collect(),
                None => vec![0],
            }
        };
        let mut candidates: Vec<(T, Vec<usize>)> = Vec::new();
        for orbit in self.edge_orbits(&c, orbits.as_ref())? {
            let e = orbit[0];
            let l = self.edge_len(&c, e);
            if l < ratio * self.h(&self.edge_mid(&c, e)) {
                candidates.push((l, orbit));
            }
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut locked = vec![false; nv];
        let mut remap: Vec<usize> = (0..nv).collect();
        let mut count = 0;
        'orbit: for (_, orbit) in candidates {
            // plan every member first; commit only if all are admissible
            let mut plans = Vec::with_capacity(orbit.len());
            let mut touched: HashSet<usize> = HashSet::new();
            for &e in &orbit {
                let [a, b] = c.edges[e];
                let Some(plan) = self.plan_collapse(&c, e, &neighbors, &boundary, &loop_len, split, &stab_set) else {
                    self.stats.skipped_collapses += 1;
                    continue 'orbit;
                };
                let mut region: Vec<usize> = neighbors[a].iter().chain(&neighbors[b]).copied().collect();
                region.push(a);
                region.push(b);
                region.sort_unstable();
                region.dedup();
                for v in region {
                    if locked[v] || !touched.insert(v) {
                        self.stats.skipped_collapses += 1;
                        continue 'orbit;
                    }
                }
                plans.push(plan);
            }
            for v in &touched {
                locked[*v] = true;
            }
            for (keep, gone, pos) in plans {
                self.mesh.vertices[keep] = pos;
                remap[gone] = keep;
                count += 1;
            }
        }
        if count == 0 {
            return Ok(0);
        }
        let mut tris = Vec::with_capacity(self.mesh.triangles.len());
        for tri in &self.mesh.triangles {
            let t = tri.map(|v| remap[v]);
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                tris.push(t);
            }
        }
        self.mesh.triangles = tris;
        self.mesh.compact();
        self.stats.collapses += count;
        Ok(count)
    }

    /// Decide whether edge `e` may collapse and to where: `(keep, gone, position)`.
    #[allow(clippy::too_many_arguments)]
    fn plan_collapse(
        &self,
        c: &Connectivity,
        e: usize,
        neighbors: &[Vec<usize>],
        boundary: &[bool],
        loop_len: &[usize],
        split: T,
        stab_set: &dyn Fn(usize) -> Vec<usize>,
    ) -> Option<(usize, usize, Vec3<T>)> {
        let [a, b] = c.edges[e];
        let on_boundary = c.is_boundary_edge(e);
        if boundary[a] && boundary[b] && !on_boundary {
            return None;
        }
        if on_boundary && loop_len[a] <= 6 {
            return None;
        }
        // link condition
        let opp: Vec<usize> = c.edge_tris[e]
            .iter()
            .filter(|&&t| t != NONE)
            .map(|&t| c.opposite(&self.mesh, e, t))
            .collect();
        let common: Vec<usize> = neighbors[a].iter().copied().filter(|v| neighbors[b].contains(v)).collect();
        if common.len() != opp.len() || !common.iter().all(|v| opp.contains(v)) {
            return None;
        }
        for &o in &opp {
            let min_val = if boundary[o] { 3 } else { 4 };
            if neighbors[o].len() < min_val {
                return None;
            }
        }
        let (sa, sb) = (stab_set(a), stab_set(b));
        let (keep, gone, pos) = if boundary[a] != boundary[b] {
            if boundary[a] {
                (a, b, self.mesh.vertices[a])
            } else {
                (b, a, self.mesh.vertices[b])
            }
        } else if sa.len() != sb.len() {
            let (k, g, sk, sg) = if sa.len() > sb.len() { (a, b, &sa, &sb) } else { (b, a, &sb, &sa) };
            if !sg.iter().all(|x| sk.contains(x)) {
                return None;
            }
            (k, g, self.mesh.vertices[k])
        } else {
            if sa != sb {
                return None;
            }
            let mut p = (self.mesh.vertices[a] + self.mesh.vertices[b]) * T::lit(0.5);
            if on_boundary {
                p = self.to_sphere(p);
            }
            (a, b, p)
        };
        // geometric admissibility: no long edges, no folded triangles
        for &v in neighbors[a].iter().chain(&neighbors[b]) {
            if v == a || v == b {
                continue;
            }
            let q = self.mesh.vertices[v];
            if pos.dist(&q) > split * self.h(&((pos + q) * T::lit(0.5))) {
                return None;
            }
        }
        for &x in &[a, b] {
            for &t in c.vertex_triangles(x) {
                let tri = self.mesh.triangles[t];
                if tri.contains(&a) && tri.contains(&b) {
                    continue;
                }
                let old = self.mesh.triangle_normal2(t);
                let p = tri.map(|v| if v == a || v == b { pos } else { self.mesh.vertices[v] });
                let new = (p[1] - p[0]).cross(&(p[2] - p[0]));
                if new.dot(&old) <= T::lit(0.1) * old.norm() * new.norm() {
                    return None;
                }
            }
        }
        let _ = gone;
        Some((keep, gone, pos))
    }

    fn flip_pass(&mut self) -> Result<usize> {
        let orbits = self.orbits()?;
        let c = Connectivity::build(&self.mesh);
        let nv = self.mesh.vertices.len();
        let mut valence: Vec<i64> = (0..nv).map(|v| c.vertex_neighbors(&self.mesh, v).len() as i64).collect();
        let boundary = self.mesh.boundary_flags.clone();
        let mut locked = vec![false; nv];
        let mut flips: Vec<(usize, [usize; 4])> = Vec::new();
        'orbit: for orbit in self.edge_orbits(&c, orbits.as_ref())? {
            let e = orbit[0];
            let Some(quad) = self.flip_quad(&c, e) else { continue };
            let dev = |v: usize, val: i64| (val - valence_target(boundary[v])).pow(2);
            let [a, b, x, y] = quad;
            let before = dev(a, valence[a]) + dev(b, valence[b]) + dev(x, valence[x]) + dev(y, valence[y]);
            let after = dev(a, valence[a] - 1) + dev(b, valence[b] - 1) + dev(x, valence[x] + 1) + dev(y, valence[y] + 1);
            if after >= before || valence[a] <= 3 || valence[b] <= 3 {
                continue;
            }
            let mut touched = HashSet::new();
            let mut quads = Vec::new();
            for &m in &orbit {
                let Some(q) = self.flip_quad(&c, m) else { continue 'orbit };
                for v in q {
                    if locked[v] || !touched.insert(v) {
                        continue 'orbit;
                    }
                }
                quads.push((m, q));
            }
            for v in touched {
                locked[v] = true;
            }
            for (m, [a, b, x, y]) in quads {
                valence[a] -= 1;
                valence[b] -= 1;
                valence[x] += 1;
                valence[y] += 1;
                flips.push((m, [a, b, x, y]));
            }
        }
        for &(e, [a, b, x, y]) in &flips {
            let [t0, t1] = c.edge_tris[e];
            // t0 contains the directed edge a -> b and apex x
            self.mesh.triangles[t0] = [x, y, b];
            self.mesh.triangles[t1] = [y, x, a];
            let _ = (a, b);
        }
        self.mesh.refresh_boundary();
        self.stats.flips += flips.len();
        Ok(flips.len())
    }

    /// For an interior edge: `[a, b, x, y]` with triangle `(a, b, x)` and
    /// `(b, a, y)`, if the flip to `x-y` is geometrically admissible.
    fn flip_quad(&self, c: &Connectivity, e: usize) -> Option<[usize; 4]> {
        let [t0, t1] = c.edge_tris[e];
        if t1 == NONE {
            return None;
        }
        let tri = self.mesh.triangles[t0];
        let [u, v] = c.edges[e];
        let k = (0..3).find(|&k| {
            let (p, q) = (tri[k], tri[(k + 1) % 3]);
            (p == u && q == v) || (p == v && q == u)
        })?;
        let (a, b, x) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
        let y = c.opposite(&self.mesh, e, t1);
        if x == y || c.edge(x, y).is_some() {
            return None;
        }
        let p = |i: usize| self.mesh.vertices[i];
        let n_old = (p(b) - p(a)).cross(&(p(x) - p(a))) + (p(a) - p(b)).cross(&(p(y) - p(b)));
        let n1 = (p(y) - p(x)).cross(&(p(b) - p(x)));
        let n2 = (p(x) - p(y)).cross(&(p(a) - p(y)));
        let good = |n: &Vec3<T>| n.dot(&n_old) > T::lit(0.5) * n.norm() * n_old.norm();
        if !good(&n1) || !good(&n2) {
            return None;
        }
        // keep the flip from worsening the smallest angle much
        let min_angle = |q: [usize; 3]| {
            let mut m = T::PI();
            for i in 0..3 {
                let (o, s, t) = (p(q[i]), p(q[(i + 1) % 3]), p(q[(i + 2) % 3]));
                let (d1, d2) = ((s - o).normalized(), (t - o).normalized());
                m = m.min(d1.dot(&d2).max(-T::one()).min(T::one()).acos());
            }
            m
        };
        let before = min_angle([a, b, x]).min(min_angle([b, a, y]));
        let after = min_angle([x, y, b]).min(min_angle([y, x, a]));
        if after < T::lit(0.5) * before {
            return None;
        }
        Some([a, b, x, y])
    }

    fn relax(&mut self) -> Result<()> {
        let orbits = self.orbits()?;
        let c = Connectivity::build(&self.mesh);
        let nv = self.mesh.vertices.len();
        let lambda = T::lit(self.params.relax_weight);
        let boundary = self.mesh.boundary_flags.clone();
        let mut bnbr: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (e, ed) in c.edges.iter().enumerate() {
            if c.is_boundary_edge(e) {
                bnbr[ed[0]].push(ed[1]);
                bnbr[ed[1]].push(ed[0]);
            }
        }
        for _ in 0..self.params.relax_iters {
            let normals = self.mesh.vertex_normals();
            let mut next = self.mesh.vertices.clone();
            for v in 0..nv {
                let p = self.mesh.vertices[v];
                if boundary[v] {
                    if self.sphere.is_none() || bnbr[v].len() != 2 {
                        continue;
                    }
                    let target = self.size_weighted_mid(p, &bnbr[v]);
                    let tangent = (self.mesh.vertices[bnbr[v][1]] - self.mesh.vertices[bnbr[v][0]]).normalized();
                    let step = tangent * (target - p).dot(&tangent) * lambda;
                    next[v] = self.to_sphere(p + step);
                    continue;
                }
                let tris = c.vertex_triangles(v);
                let (mut acc, mut wsum) = (Vec3::zero(), T::zero());
                for &t in tris {
                    let q = self.mesh.triangle_points(t);
                    let cen = (q[0] + q[1] + q[2]) / T::lit(3.0);
                    let h = self.h(&cen);
                    // weight by area over local target area so graded regions balance
                    let wt = self.mesh.triangle_area(t) / (h * h);
                    acc += cen * wt;
                    wsum = wsum + wt;
                }
                if !(wsum > T::zero()) {
                    continue;
                }
                let d = acc / wsum - p;
                let n = normals[v];
                next[v] = p + (d - n * d.dot(&n)) * lambda;
            }
            if let (Some(g), Some(o)) = (self.group, orbits.as_ref()) {
                symmetrize_positions(&mut next, g, o);
            }
            self.mesh.vertices = next;
        }
        Ok(())
    }

    fn size_weighted_mid(&self, p: Vec3<T>, nb: &[usize]) -> Vec3<T> {
        let (q0, q1) = (self.mesh.vertices[nb[0]], self.mesh.vertices[nb[1]]);
        let (h0, h1) = (self.h(&((p + q0) * T::lit(0.5))), self.h(&((p + q1) * T::lit(0.5))));
        // place p so both edges have the same length relative to their target
        let s = h0 / (h0 + h1);
        q0 + (q1 - q0) * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::{dihedral_group, equivariance_defect};
    use crate::trimesh::{primitives, validate};

    #[test]
    fn icosphere_band() {
        let s = primitives::icosphere::<f64>(2.0, 3);
        let p = RemeshParams::new(Sizing::uniform(0.1));
        let (m, stats) = remesh_with(&s, &p, None).unwrap();
        assert!(validate(&m).is_valid());
        let t = topology(&m).unwrap();
        assert_eq!((t.genus, t.boundary_loops), (0, 0));
        assert!(stats.in_band >= 0.95, "in band {}", stats.in_band);
    }

    #[test]
    fn disc_keeps_boundary_on_circle() {
        let d = primitives::disc::<f64>(8.0, 0.9);
        let p = RemeshParams::new(Sizing::graded(0.3, 2.0));
        let (m, _) = remesh_with(&d, &p, None).unwrap();
        let t = topology(&m).unwrap();
        assert_eq!((t.euler, t.boundary_loops), (1, 1));
        for v in 0..m.vertices.len() {
            if m.boundary_flags[v] {
                assert!((m.vertices[v].norm() - 8.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equivariant_remesh_of_icosphere() {
        let s = primitives::icosphere::<f64>(2.0, 2);
        let g = dihedral_group::<f64>(5).unwrap();
        let (m, _) = remesh_with(&s, &RemeshParams::new(Sizing::uniform(0.3)), Some(&g)).unwrap();
        assert!(equivariance_defect(&m, &g) < 1e-9 * 0.3);
        assert_eq!(topology(&m).unwrap().genus, 0);
    }

    #[test]
    fn uniform_grid_is_a_fixed_point_for_split_and_collapse() {
        // equilateral strip; edges all exactly the target
        let n = 12;
        let h = 0.5f64;
        let mut v = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let x = i as f64 * h + if j % 2 == 1 { h / 2.0 } else { 0.0 };
                v.push(Vec3::new(x, j as f64 * h * 3f64.sqrt() / 2.0, 0.0));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut f = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if j % 2 == 0 {
                    f.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                    f.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                } else {
                    f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                    f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                }
            }
        }
        let grid = TriMesh::new(v, f);
        let mut p = RemeshParams::new(Sizing::uniform(h));
        p.max_passes = 1;
        let (_, stats) = remesh_with(&grid, &p, None).unwrap();
        assert_eq!(stats.splits, 0);
        assert_eq!(stats.collapses, 0);
    }
}
