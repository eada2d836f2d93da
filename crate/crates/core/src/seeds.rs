//! Initial surfaces: the desingularised plane ∪ sphere slice of the genus-g
//! sweepout, the desingularised cylinder ∪ sphere with two ends, and sampled
//! sweepout families.
//!
//! Both seeds are assembled from surfaces of revolution ("sheets") that meet
//! along horizontal circles. Along every circle the four half-sheets are
//! reconnected in pairs, and the pairing alternates between consecutive arcs
//! of angular width `π/m`, which produces `2m` switch points per circle and
//! the prescribed genus. Each reconnected corner is rounded by a quadratic
//! Bézier blend whose width vanishes at the switch points.

use serde::{Deserialize, Serialize};

use crate::equivariance::{check_connectivity, dihedral_group, orbit_structure, symmetrize, SymmetryGroup};
use crate::error::{Error, Result};
use crate::gaussmetric::discrete_gauss_area;
use crate::scalar::Real;
use crate::trimesh::primitives::{disc_symmetric, round_up_multiple, RingBuilder};
use crate::trimesh::{clip_to_ball, topology, validate, Sizing, TriMesh};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    OneEnd,
    TwoEnd,
}

/// Parameters of an initial surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedSpec {
    pub family: Family,
    /// Genus `g` for one-end seeds, dihedral parameter `n` for two-end seeds.
    pub g_or_n: usize,
    /// Sweepout parameter; the plane ∪ sphere slice is scaled by `t/(1-t)`.
    pub t: f64,
    /// Half-width of the neck blends.
    pub fillet: f64,
    pub target_edge: f64,
    pub clip_radius: f64,
    /// Edge lengths grow linearly beyond this radius.
    pub grade_radius: Option<f64>,
    /// Two-end seeds only: align the necks of both circles vertically
    /// instead of alternating them.
    pub prismatic: bool,
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            family: Family::OneEnd,
            g_or_n: 1,
            t: 2.0 / 3.0,
            fillet: 0.15,
            target_edge: 0.08,
            clip_radius: 8.0,
            grade_radius: Some(2.5),
            prismatic: false,
        }
    }
}

impl SeedSpec {
    pub fn one_end(g: usize, t: f64) -> Self {
        SeedSpec {
            family: Family::OneEnd,
            g_or_n: g,
            t,
            ..SeedSpec::default()
        }
    }

    pub fn two_end(n: usize) -> Self {
        SeedSpec {
            family: Family::TwoEnd,
            g_or_n: n,
            ..SeedSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.g_or_n == 0 {
            return bad("g_or_n must be positive".into());
        }
        if self.family == Family::TwoEnd && self.g_or_n < 3 {
            return bad(format!("two-end seeds need n >= 3, got {}", self.g_or_n));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return bad(format!("t must lie in (0,1), got {}", self.t));
        }
        if !(self.clip_radius > 0.0 && self.clip_radius.is_finite()) {
            return bad(format!("clip radius must be positive, got {}", self.clip_radius));
        }
        if !(self.fillet > 0.0 && self.fillet < 0.5f64.min(self.clip_radius / 10.0)) {
            return bad(format!("fillet must lie in (0, min(0.5, R/10)), got {}", self.fillet));
        }
        if !(self.target_edge > 0.0 && self.target_edge < self.fillet) {
            return bad(format!(
                "target edge must be positive and below the fillet, got {}",
                self.target_edge
            ));
        }
        Ok(())
    }

    /// Scale factor `t/(1-t)` of the one-end slice.
    pub fn scale(&self) -> f64 {
        self.t / (1.0 - self.t)
    }

    /// Symmetry group of the seed: `D_{g+1}` or `D_n`.
    pub fn group<T: Real>(&self) -> Result<SymmetryGroup<T>> {
        match self.family {
            Family::OneEnd => dihedral_group(self.g_or_n + 1),
            Family::TwoEnd => dihedral_group(self.g_or_n),
        }
    }

    /// Genus the seed is built to have.
    pub fn expected_genus(&self) -> usize {
        match self.family {
            Family::OneEnd => self.g_or_n,
            Family::TwoEnd => 2 * self.g_or_n - 1,
        }
    }

    pub fn expected_boundary_loops(&self) -> usize {
        match self.family {
            Family::OneEnd => 1,
            Family::TwoEnd => 2,
        }
    }

    fn sizing(&self) -> Sizing {
        Sizing {
            edge: self.target_edge,
            grade_radius: self.grade_radius,
            max_edge: None,
        }
    }
}

/// Meridian curve of a sheet, parametrised by arc length `u ∈ [0, L]`.
#[derive(Clone, Copy, Debug)]
enum Profile {
    /// `(ρ, z) = p + u·d`.
    Line { p: (f64, f64), d: (f64, f64) },
    /// Arc of the circle of radius `r` about the origin starting at polar
    /// elevation `phi0`, elevation changing with sign `dir`.
    Arc { r: f64, phi0: f64, dir: f64 },
}

impl Profile {
    fn at(&self, u: f64) -> (f64, f64) {
        match *self {
            Profile::Line { p, d } => (p.0 + u * d.0, p.1 + u * d.1),
            Profile::Arc { r, phi0, dir } => {
                let phi = phi0 + dir * u / r;
                (r * phi.cos(), r * phi.sin())
            }
        }
    }

    fn tangent(&self, u: f64) -> (f64, f64) {
        match *self {
            Profile::Line { d, .. } => d,
            Profile::Arc { r, phi0, dir } => {
                let phi = phi0 + dir * u / r;
                (-dir * phi.sin(), dir * phi.cos())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum End {
    Junction(usize),
    Pole,
    /// Last ring lies exactly on the clipping sphere.
    Boundary,
    /// Last ring beyond the clipping sphere; trimmed by clipping.
    Open,
}

#[derive(Clone, Copy, Debug)]
enum Facing {
    Fixed(f64, f64),
    Outward,
    Inward,
}

#[derive(Clone, Debug)]
struct Sheet {
    profile: Profile,
    length: f64,
    start: End,
    end: End,
    facing: Facing,
}

impl Sheet {
    /// Point at in-sheet distance `d` from the given end.
    fn from_end(&self, at_start: bool, d: f64) -> (f64, f64) {
        self.profile.at(if at_start { d } else { self.length - d })
    }

    fn desired_normal(&self, u: f64) -> (f64, f64) {
        match self.facing {
            Facing::Fixed(a, b) => (a, b),
            Facing::Outward | Facing::Inward => {
                let (r, z) = self.profile.at(u);
                let n = (r * r + z * z).sqrt().max(1e-300);
                let s = if matches!(self.facing, Facing::Outward) { 1.0 } else { -1.0 };
                (s * r / n, s * z / n)
            }
        }
    }
}

/// A circle where four sheets meet.
#[derive(Clone, Debug)]
struct Junction {
    /// Crossing point in the meridian half-plane.
    c: (f64, f64),
    /// Sheet ids in the order used by `pairs`.
    sheets: [usize; 4],
    /// Pairings (as positions into `sheets`) on even and odd arcs.
    pairs: [[(usize, usize); 2]; 2],
    /// Angular offset of the switch points, in units of `π/m`.
    offset: f64,
}

struct Layout {
    sheets: Vec<Sheet>,
    junctions: Vec<Junction>,
    m: usize,
    /// Neck blend half-width.
    fillet: f64,
    /// Vertex count of every junction ring.
    circle_count: usize,
}

struct VertexInfo {
    sheet: usize,
    u: f64,
    theta: f64,
}

/// Genus-g one-ended seed: the plane ∪ sphere slice at scale `t/(1-t)`,
/// desingularised along the equator with `2(g+1)` switch points, clipped to
/// the ball of radius `R`.
pub fn seed_one_end<T: Real>(spec: &SeedSpec) -> Result<TriMesh<T>> {
    if spec.family != Family::OneEnd {
        return Err(Error::InvalidInput("seed_one_end needs family one_end".into()));
    }
    spec.validate()?;
    let s = spec.scale();
    let big_r = spec.clip_radius;
    let m = spec.g_or_n + 1;
    let sizing = spec.sizing();
    let fillet = spec.fillet.min(0.25 * s);
    let h_circle = sizing.at(&Vec3::new(s, 0.0, 0.0)).min(0.35 * s);
    let margin = 2.0 * fillet + 2.0 * sizing.at(&Vec3::new(s, 0.0, 0.0));
    if s - margin > big_r {
        // the whole sphere and the necks lie outside the ball
        let mut d = disc_symmetric::<T>(T::lit(big_r), T::lit(spec.target_edge), m);
        grade_disc_rings(&mut d, &sizing, m, big_r)?;
        return finish(d, spec, false);
    }
    let (outer_end, outer_len) = if s + margin < big_r {
        (End::Boundary, big_r - s)
    } else {
        (End::Open, (s + margin).max(big_r) + 2.0 * sizing.at(&Vec3::new(big_r, 0.0, 0.0)) - s)
    };
    let sheets = vec![
        Sheet {
            profile: Profile::Line { p: (s, 0.0), d: (-1.0, 0.0) },
            length: s,
            start: End::Junction(0),
            end: End::Pole,
            facing: Facing::Fixed(0.0, -1.0),
        },
        Sheet {
            profile: Profile::Line { p: (s, 0.0), d: (1.0, 0.0) },
            length: outer_len,
            start: End::Junction(0),
            end: outer_end,
            facing: Facing::Fixed(0.0, 1.0),
        },
        Sheet {
            profile: Profile::Arc { r: s, phi0: 0.0, dir: 1.0 },
            length: std::f64::consts::FRAC_PI_2 * s,
            start: End::Junction(0),
            end: End::Pole,
            facing: Facing::Outward,
        },
        Sheet {
            profile: Profile::Arc { r: s, phi0: 0.0, dir: -1.0 },
            length: std::f64::consts::FRAC_PI_2 * s,
            start: End::Junction(0),
            end: End::Pole,
            facing: Facing::Inward,
        },
    ];
    // sheets: 0 inner, 1 outer, 2 upper, 3 lower
    let junctions = vec![Junction {
        c: (s, 0.0),
        sheets: [0, 1, 2, 3],
        pairs: [[(0, 2), (1, 3)], [(0, 3), (1, 2)]],
        offset: 0.0,
    }];
    let circle_count = round_up_multiple(std::f64::consts::TAU * s / h_circle, 2 * m).max(4 * m);
    let layout = Layout {
        sheets,
        junctions,
        m,
        fillet,
        circle_count,
    };
    let mesh = assemble::<T>(&layout, &sizing)?;
    let clipped = outer_end == End::Open;
    let mesh = if clipped { clip_to_ball(&mesh, T::lit(big_r))? } else { mesh };
    finish(mesh, spec, clipped)
}

/// Two-ended seed of genus `2n-1`: the cylinder of radius √2 and the sphere
/// of radius 2, desingularised along both intersection circles with `2n`
/// switch points each, clipped to the ball of radius `R`. The polar caps
/// of the sphere are kept.
pub fn seed_two_end<T: Real>(spec: &SeedSpec) -> Result<TriMesh<T>> {
    if spec.family != Family::TwoEnd {
        return Err(Error::InvalidInput("seed_two_end needs family two_end".into()));
    }
    spec.validate()?;
    let n = spec.g_or_n;
    let big_r = spec.clip_radius;
    if big_r <= 2.0 + 4.0 * spec.fillet {
        return Err(Error::SeedGeometry(format!(
            "clip radius {big_r} leaves no room for the cylinder ends"
        )));
    }
    let r2 = std::f64::consts::SQRT_2;
    let zmax = (big_r * big_r - 2.0).sqrt();
    let q = std::f64::consts::FRAC_PI_4;
    let sheets = vec![
        // 0 cylinder above the upper circle
        Sheet {
            profile: Profile::Line { p: (r2, r2), d: (0.0, 1.0) },
            length: zmax - r2,
            start: End::Junction(0),
            end: End::Boundary,
            facing: Facing::Fixed(1.0, 0.0),
        },
        // 1 cylinder between the circles
        Sheet {
            profile: Profile::Line { p: (r2, r2), d: (0.0, -1.0) },
            length: 2.0 * r2,
            start: End::Junction(0),
            end: End::Junction(1),
            facing: Facing::Fixed(-1.0, 0.0),
        },
        // 2 cylinder below the lower circle
        Sheet {
            profile: Profile::Line { p: (r2, -r2), d: (0.0, -1.0) },
            length: zmax - r2,
            start: End::Junction(1),
            end: End::Boundary,
            facing: Facing::Fixed(1.0, 0.0),
        },
        // 3 upper cap
        Sheet {
            profile: Profile::Arc { r: 2.0, phi0: q, dir: 1.0 },
            length: 2.0 * q,
            start: End::Junction(0),
            end: End::Pole,
            facing: Facing::Inward,
        },
        // 4 equatorial band
        Sheet {
            profile: Profile::Arc { r: 2.0, phi0: q, dir: -1.0 },
            length: 4.0 * q,
            start: End::Junction(0),
            end: End::Junction(1),
            facing: Facing::Outward,
        },
        // 5 lower cap
        Sheet {
            profile: Profile::Arc { r: 2.0, phi0: -q, dir: -1.0 },
            length: 2.0 * q,
            start: End::Junction(1),
            end: End::Pole,
            facing: Facing::Inward,
        },
    ];
    // positions: 0 outer cylinder, 1 middle cylinder, 2 cap, 3 band
    let upper = [0, 1, 3, 4];
    let lower = [2, 1, 5, 4];
    let p1 = [(3, 0), (2, 1)];
    let p2 = [(0, 2), (1, 3)];
    let (junctions, count_mult) = if spec.prismatic {
        (
            vec![
                Junction { c: (r2, r2), sheets: upper, pairs: [p1, p2], offset: 0.5 },
                Junction { c: (r2, -r2), sheets: lower, pairs: [p1, p2], offset: 0.5 },
            ],
            4 * n,
        )
    } else {
        (
            vec![
                Junction { c: (r2, r2), sheets: upper, pairs: [p1, p2], offset: 0.0 },
                Junction { c: (r2, -r2), sheets: lower, pairs: [p2, p1], offset: 0.0 },
            ],
            2 * n,
        )
    };
    let sizing = spec.sizing();
    let h_circle = sizing.at(&Vec3::new(r2, 0.0, r2));
    let circle_count = round_up_multiple(std::f64::consts::TAU * r2 / h_circle, count_mult).max(2 * count_mult);
    let layout = Layout {
        sheets,
        junctions,
        m: n,
        fillet: spec.fillet,
        circle_count,
    };
    let mesh = assemble::<T>(&layout, &sizing)?;
    finish(mesh, spec, false)
}

/// Build either seed according to `spec.family`.
pub fn seed<T: Real>(spec: &SeedSpec) -> Result<TriMesh<T>> {
    match spec.family {
        Family::OneEnd => seed_one_end(spec),
        Family::TwoEnd => seed_two_end(spec),
    }
}

/// Symmetrize, label orbits, and check the result.
fn finish<T: Real>(mut mesh: TriMesh<T>, spec: &SeedSpec, clipped: bool) -> Result<TriMesh<T>> {
    let group = spec.group::<T>()?;
    let orbits = orbit_structure(&mesh, &group, mesh.scale() * T::lit(1e-6))
        .and_then(|o| check_connectivity(&mesh, &o).map(|_| o))
        .map_err(|e| Error::SeedGeometry(format!("seed is not equivariant: {e}")))?;
    mesh = symmetrize(&mesh, &group, &orbits);
    let r = T::lit(spec.clip_radius);
    for v in 0..mesh.vertices.len() {
        if mesh.boundary_flags[v] {
            let p = mesh.vertices[v];
            mesh.vertices[v] = p * (r / p.norm());
        }
    }
    mesh.orbit_labels = orbits.labels();
    let diag = validate(&mesh);
    if !diag.is_valid() {
        return Err(Error::SeedGeometry(format!(
            "generated mesh failed validation ({} defects: {} degenerate triangles, {} duplicate vertices, {} orientation)",
            diag.defect_count(),
            diag.degenerate_triangles.len(),
            diag.duplicate_vertices.len(),
            diag.orientation_defects.len(),
        )));
    }
    let top = topology(&mesh)?;
    if !clipped && spec.scale_is_interior() {
        if top.genus as usize != spec.expected_genus()
            || top.boundary_loops != spec.expected_boundary_loops()
            || top.components != 1
        {
            return Err(Error::SeedGeometry(format!("seed topology {top} differs from the construction")));
        }
    }
    Ok(mesh)
}

impl SeedSpec {
    /// Whether the sphere of the one-end slice lies inside the clipping
    /// ball (always true for two-end seeds).
    fn scale_is_interior(&self) -> bool {
        match self.family {
            Family::TwoEnd => true,
            Family::OneEnd => self.scale() < self.clip_radius,
        }
    }
}

/// Ring parameters `0 = u_0 < … < u_k = L` following the local step
/// `step(u)`, by equidistributing `∫ du / step`. With `even` the band
/// count is even and the rings are placed symmetrically about `L/2`.
fn ring_params(length: f64, even: bool, step: impl Fn(f64) -> f64) -> Vec<f64> {
    let samples = 400usize;
    let mut cum = vec![0.0f64; samples + 1];
    for i in 0..samples {
        let (a, b) = (length * i as f64 / samples as f64, length * (i + 1) as f64 / samples as f64);
        let mid = 0.5 * (a + b);
        cum[i + 1] = cum[i] + (b - a) / step(mid).max(1e-12);
    }
    let total = cum[samples];
    let mut k = total.ceil().max(1.0) as usize;
    if even && k % 2 == 1 {
        k += 1;
    }
    let mut out = Vec::with_capacity(k + 1);
    out.push(0.0);
    let mut j = 0usize;
    for i in 1..k {
        let target = total * i as f64 / k as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(length * (j as f64 + frac) / samples as f64);
    }
    out.push(length);
    if even {
        for i in 0..=k / 2 {
            let a = 0.5 * (out[i] + length - out[k - i]);
            out[i] = a;
            out[k - i] = length - a;
        }
    }
    out
}

fn assemble<T: Real>(layout: &Layout, sizing: &Sizing) -> Result<TriMesh<T>> {
    let m = layout.m;
    let a_max = layout.fillet;
    let n_circle = layout.circle_count;
    let mut builder: RingBuilder<f64> = RingBuilder::new();
    let mut info: Vec<VertexInfo> = Vec::new();
    // junction ring vertex starts: (junction, sheet) -> first vertex
    let mut junction_rings: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layout.junctions.len()];
    for (sid, sheet) in layout.sheets.iter().enumerate() {
        let near = |u: f64| -> f64 {
            // distance to the nearest junction end
            let mut d = f64::INFINITY;
            if matches!(sheet.start, End::Junction(_)) {
                d = d.min(u);
            }
            if matches!(sheet.end, End::Junction(_)) {
                d = d.min(sheet.length - u);
            }
            d
        };
        let h_at = |u: f64| {
            let (r, z) = sheet.profile.at(u);
            sizing.at(&Vec3::new(r, 0.0, z))
        };
        let fine = (0.5 * a_max).min(h_at(0.0));
        let step = |u: f64| {
            let mut s = h_at(u);
            let d = near(u);
            if d.is_finite() {
                s = s.min(fine + 0.25 * d);
            }
            // resolve small spheres
            if let Profile::Arc { r, .. } = sheet.profile {
                s = s.min(0.35 * r);
            }
            if let Profile::Line { p, d: dir } = sheet.profile {
                if dir.0 < 0.0 {
                    s = s.min(0.35 * p.0);
                }
            }
            s
        };
        // a sheet between two junctions is mapped onto itself reversed by
        // the half-turns, so its bands are laid out mirror-symmetrically
        let reversible = matches!(sheet.start, End::Junction(_)) && matches!(sheet.end, End::Junction(_));
        let us = ring_params(sheet.length, reversible, step);
        let half = us.len() / 2;
        // orientation: the builder's default normal is e_u × e_θ
        let mid = 0.5 * sheet.length;
        let (tr, tz) = sheet.profile.tangent(mid);
        let natural = (-tz, tr);
        let want = sheet.desired_normal(mid);
        let flip = natural.0 * want.0 + natural.1 * want.1 < 0.0;
        let mut prev = None;
        for (i, &u) in us.iter().enumerate() {
            let (rho, z) = sheet.profile.at(u);
            let last = i + 1 == us.len();
            let is_pole = (last && sheet.end == End::Pole) || (i == 0 && sheet.start == End::Pole);
            let at_junction = (i == 0 && matches!(sheet.start, End::Junction(_)))
                || (last && matches!(sheet.end, End::Junction(_)));
            let count = if is_pole {
                1
            } else if at_junction || near(u) < 3.0 * a_max {
                n_circle
            } else {
                let h = h_at(u);
                round_up_multiple(std::f64::consts::TAU * rho / h, 2 * m).max(2 * m)
            };
            let ring = if count == 1 {
                builder.add_ring([Vec3::new(0.0, 0.0, z)])
            } else {
                let pts = (0..count).map(|j| {
                    let th = std::f64::consts::TAU * j as f64 / count as f64;
                    Vec3::new(rho * th.cos(), rho * th.sin(), z)
                });
                builder.add_ring(pts)
            };
            for j in 0..count {
                let th = if count == 1 { 0.0 } else { std::f64::consts::TAU * j as f64 / count as f64 };
                info.push(VertexInfo { sheet: sid, u, theta: th });
            }
            if i == 0 {
                if let End::Junction(c) = sheet.start {
                    junction_rings[c].push((sid, ring.start));
                }
            }
            if last {
                if let End::Junction(c) = sheet.end {
                    junction_rings[c].push((sid, ring.start));
                }
            }
            if let Some(p) = prev {
                if reversible && i > half {
                    builder.connect(ring, p, m, !flip);
                } else {
                    builder.connect(p, ring, m, flip);
                }
            }
            prev = Some(ring);
        }
    }
    let mut verts = builder.vertices.clone();
    let tris = builder.triangles.clone();

    // segment and amplitude of the blend at angle θ for junction j
    let seg_of = |j: &Junction, theta: f64| -> (usize, f64) {
        let w = std::f64::consts::PI / m as f64;
        let x = theta / w - j.offset;
        let x = x.rem_euclid(2.0 * m as f64);
        let k = x.floor();
        (k as usize, x - k)
    };
    let amplitude = |phase: f64| a_max * (std::f64::consts::PI * phase).sin().max(0.0).sqrt();

    // blend every vertex within the neck band of a junction
    for (v, vi) in info.iter().enumerate() {
        let sheet = &layout.sheets[vi.sheet];
        for (at_start, end) in [(true, sheet.start), (false, sheet.end)] {
            let End::Junction(c) = end else { continue };
            let d = if at_start { vi.u } else { sheet.length - vi.u };
            if d >= a_max {
                continue;
            }
            let junc = &layout.junctions[c];
            let (k, phase) = seg_of(junc, vi.theta);
            let a = amplitude(phase);
            if !(d < a) {
                continue;
            }
            let pos = junc.sheets.iter().position(|&s| s == vi.sheet).expect("sheet at its junction");
            let pairs = junc.pairs[k % 2];
            let partner_pos = pairs
                .iter()
                .find_map(|&(x, y)| if x == pos { Some(y) } else if y == pos { Some(x) } else { None })
                .expect("every sheet is paired");
            let partner = &layout.sheets[junc.sheets[partner_pos]];
            let partner_start = partner.start == End::Junction(c);
            let tp = sheet.from_end(at_start, a);
            let tq = partner.from_end(partner_start, a);
            let tau = 0.5 * (1.0 - d / a);
            let b = |p: f64, cc: f64, q: f64| {
                (1.0 - tau) * (1.0 - tau) * p + 2.0 * tau * (1.0 - tau) * cc + tau * tau * q
            };
            let rho = b(tp.0, junc.c.0, tq.0);
            let z = b(tp.1, junc.c.1, tq.1);
            verts[v] = Vec3::new(rho * vi.theta.cos(), rho * vi.theta.sin(), z);
        }
    }

    // merge the four copies of every junction ring according to the pairing
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (c, rings) in junction_rings.iter().enumerate() {
        let junc = &layout.junctions[c];
        if rings.len() != 4 {
            return Err(Error::SeedGeometry(format!("junction {c} has {} sheets", rings.len())));
        }
        let start_of = |pos: usize| {
            rings
                .iter()
                .find(|(s, _)| *s == junc.sheets[pos])
                .map(|(_, st)| *st)
                .expect("junction ring present")
        };
        let starts = [start_of(0), start_of(1), start_of(2), start_of(3)];
        let per_seg = n_circle as f64 / (2 * m) as f64;
        for j in 0..n_circle {
            let x = j as f64 / per_seg - junc.offset;
            let is_switch = (x - x.round()).abs() < 1e-9;
            if is_switch {
                let r0 = find(&mut parent, starts[0] + j);
                for st in &starts[1..] {
                    let r = find(&mut parent, st + j);
                    parent[r] = r0;
                }
            } else {
                let k = x.rem_euclid(2.0 * m as f64).floor() as usize;
                for &(p, q) in &junc.pairs[k % 2] {
                    let rp = find(&mut parent, starts[p] + j);
                    let rq = find(&mut parent, starts[q] + j);
                    parent[rq] = rp;
                }
            }
        }
    }
    let mut new_index = vec![usize::MAX; verts.len()];
    let mut out_verts: Vec<Vec3<T>> = Vec::new();
    for v in 0..verts.len() {
        let r = find(&mut parent, v);
        if new_index[r] == usize::MAX {
            new_index[r] = out_verts.len();
            out_verts.push(verts[r].cast());
        }
        new_index[v] = new_index[r];
    }
    let out_tris: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|v| new_index[v])).collect();
    if out_tris.iter().any(|t| t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
        return Err(Error::SeedGeometry("neck merge collapsed a triangle".into()));
    }
    let mut mesh = TriMesh::new(out_verts, out_tris);
    mesh.compact();
    Ok(mesh)
}

/// Replace the uniform rings of a plain disc by graded ones.
fn grade_disc_rings<T: Real>(disc: &mut TriMesh<T>, sizing: &Sizing, m: usize, radius: f64) -> Result<()> {
    if sizing.grade_radius.is_none() {
        return Ok(());
    }
    let sheet = Sheet {
        profile: Profile::Line { p: (0.0, 0.0), d: (1.0, 0.0) },
        length: radius,
        start: End::Pole,
        end: End::Boundary,
        facing: Facing::Fixed(0.0, 1.0),
    };
    let us = ring_params(radius, false, |u| sizing.at(&Vec3::new(u, 0.0, 0.0)));
    let mut b: RingBuilder<f64> = RingBuilder::new();
    let mut prev = b.add_ring([Vec3::zero()]);
    for &u in &us[1..] {
        let (rho, _) = sheet.profile.at(u);
        let n = round_up_multiple(std::f64::consts::TAU * rho / sizing.at(&Vec3::new(rho, 0.0, 0.0)), 2 * m);
        let ring = b.add_ring((0..n).map(|j| {
            let th = std::f64::consts::TAU * j as f64 / n as f64;
            Vec3::new(rho * th.cos(), rho * th.sin(), 0.0)
        }));
        b.connect(prev, ring, m, false);
        prev = ring;
    }
    *disc = b.build().cast();
    Ok(())
}

/// One sample of a sweepout family.
#[derive(Clone, Debug)]
pub struct SweepSample<T> {
    pub t: f64,
    pub mesh: TriMesh<T>,
    pub area: T,
}

/// One-end seeds at each `t` with their discrete Gaussian areas. Samples
/// are generated on up to `available_parallelism` worker threads.
pub fn sweepout_family<T: Real>(g: usize, t_samples: &[f64], defaults: &SeedSpec) -> Result<Vec<SweepSample<T>>> {
    if t_samples.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("t samples must be strictly increasing".into()));
    }
    let specs: Vec<SeedSpec> = t_samples
        .iter()
        .map(|&t| SeedSpec {
            family: Family::OneEnd,
            g_or_n: g,
            t,
            ..defaults.clone()
        })
        .collect();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(specs.len().max(1));
    let chunk = specs.len().div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<Vec<SweepSample<T>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|spec| {
                            let mesh = seed_one_end::<T>(spec)?;
                            let area = discrete_gauss_area(&mesh).total;
                            Ok(SweepSample { t: spec.t, mesh, area })
                        })
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(specs.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::equivariance_defect;

    #[test]
    fn ring_params_hit_both_ends() {
        let us = ring_params(3.0, false, |_| 0.25);
        assert_eq!(us.first(), Some(&0.0));
        assert_eq!(us.last(), Some(&3.0));
        assert_eq!(us.len(), 13);
    }

    #[test]
    fn one_end_genus_one() {
        let spec = SeedSpec {
            target_edge: 0.12,
            ..SeedSpec::one_end(1, 0.5)
        };
        let m = seed_one_end::<f64>(&spec).unwrap();
        let t = topology(&m).unwrap();
        assert_eq!((t.genus, t.boundary_loops, t.components), (1, 1, 1));
        let g = spec.group::<f64>().unwrap();
        assert!(equivariance_defect(&m, &g) < 1e-9 * 8.0);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(seed_one_end::<f64>(&SeedSpec::one_end(2, 1.2)).is_err());
        let s = SeedSpec {
            fillet: 0.05,
            ..SeedSpec::one_end(2, 0.5)
        };
        assert!(seed_one_end::<f64>(&s).is_err());
        assert!(seed_two_end::<f64>(&SeedSpec::two_end(2)).is_err());
    }
}
