//! One test per acceptance criterion. Each prints a `criterion N: PASS|FAIL`
//! line with the measured values (visible with `--nocapture`) and fails
//! when the criterion fails. The criteria run one at a time so that the
//! wall-clock limits are measured without contention.

use std::f64::consts::E;
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shrinker_core::equivariance::{orbit_structure, riemann_hurwitz_genus, symmetrize};
use shrinker_core::evolver::{descend, EvolveConfig};
use shrinker_core::gaussmetric::{discrete_gauss_area, gauss_area_gradient};
use shrinker_core::lab::{run_pipeline, verify_known_shrinkers, width_scan, RunOutput};
use shrinker_core::seeds::{seed, SeedSpec};
use shrinker_core::trimesh::primitives::{disc, icosphere, torus};
use shrinker_core::trimesh::remesh::remesh_with;
use shrinker_core::trimesh::{topology, RemeshParams, TopologyReport};
use shrinker_core::{Error, Mesh, Vec3};

static SERIAL: Mutex<()> = Mutex::new(());

const R: f64 = 8.0;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn time(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.check(t <= limit, format!("runtime {:.1}s (limit {}s)", t.as_secs_f64(), limit.as_secs()));
    }

    fn finish(self, n: usize) {
        let line = if self.failures.is_empty() {
            format!("criterion {n}: PASS [{}]", self.notes.join("; "))
        } else {
            format!(
                "criterion {n}: FAIL [{}] passed: [{}]",
                self.failures.join("; "),
                self.notes.join("; ")
            )
        };
        // straight to the stream, so the verdict shows without --nocapture
        let _ = writeln!(std::io::stdout().lock(), "{line}");
        if !self.failures.is_empty() {
            panic!("criterion {n} failed: {}", self.failures.join("; "));
        }
    }
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn pipeline(spec: &SeedSpec) -> shrinker_core::Result<RunOutput> {
    run_pipeline(spec, &EvolveConfig::default())
}

#[test]
fn criterion_1_known_shrinkers() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    let r = verify_known_shrinkers().unwrap();
    let sphere = r.get("sphere").unwrap();
    o.check(
        sphere.relative_area_error < 0.002,
        format!("sphere rel. area error {:.2e}", sphere.relative_area_error),
    );
    o.check(sphere.residual_rms < 1e-3, format!("sphere residual {:.2e}", sphere.residual_rms));
    let plane = r.get("plane").unwrap();
    let target = 1.0 - (-16.0f64).exp();
    o.check(
        (plane.gauss_area - target).abs() < 0.002,
        format!("plane |F - (1-e^-16)| {:.2e}", (plane.gauss_area - target).abs()),
    );
    o.check(plane.residual_rms < 1e-6, format!("plane residual {:.2e}", plane.residual_rms));
    let cyl = r.get("cylinder").unwrap();
    o.check(cyl.residual_rms < 1e-3, format!("cylinder residual {:.2e}", cyl.residual_rms));
    o.time(start, Duration::from_secs(10));
    o.finish(1);
}

/// Randomised closed and bounded meshes of roughly 500 vertices.
fn random_mesh(k: usize, rng: &mut ChaCha8Rng) -> Mesh {
    let base = match k % 3 {
        0 => icosphere::<f64>(rng.gen_range(1.0..3.0), 3),
        1 => torus::<f64>(rng.gen_range(1.5..2.5), rng.gen_range(0.4..0.9), 28, 18),
        _ => disc::<f64>(rng.gen_range(2.0..4.0), 0.2),
    };
    let h = base.edge_lengths().iter().cloned().fold(f64::MAX, f64::min);
    let shift = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut m = base;
    for p in m.vertices.iter_mut() {
        let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        *p = *p + d * (0.2 * h) + shift;
    }
    m
}

#[test]
fn criterion_2_gradient() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for k in 0..20 {
        let mut m = random_mesh(k, &mut rng);
        sizes.push(m.vertices.len());
        let grad = gauss_area_gradient(&m);
        let h = 1e-5 * m.scale();
        let mut stars = vec![Vec::new(); m.vertices.len()];
        for (t, tri) in m.triangles.iter().enumerate() {
            for &v in tri {
                stars[v].push(t);
            }
        }
        for v in 0..m.vertices.len() {
            let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalized();
            // moving v changes only its star, so difference the star's area
            let p = m.vertices[v];
            let mut central = |step: f64| {
                let mut star_area = |q: Vec3| {
                    m.vertices[v] = q;
                    let per = discrete_gauss_area(&m).per_triangle;
                    stars[v].iter().map(|&t| per[t]).sum::<f64>()
                };
                let d = (star_area(p + u * step) - star_area(p - u * step)) / (2.0 * step);
                m.vertices[v] = p;
                d
            };
            // near-critical vertices have tiny gradients, so cancel the h^2 term too
            let fd = (4.0 * central(h) - central(2.0 * h)) / 3.0;
            let rel = (fd - grad[v].dot(&u)).abs() / grad[v].norm().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    o.check(true, format!("20 meshes with {lo}..{hi} vertices"));
    o.check(worst < 1e-6, format!("max relative error {worst:.2e}"));
    o.time(start, Duration::from_secs(30));
    o.finish(2);
}

#[test]
fn criterion_3_sweepout_bound() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    let upper = (1.0 + 4.0 / E) * 1.02;
    let plane = 1.0 - (-16.0f64).exp();
    for g in [1, 2, 3, 5] {
        let s = width_scan(g, 99).unwrap();
        o.check(
            s.max_f <= upper && s.max_f >= 1.05,
            format!("g={g} max F {:.4} at t={:.2}", s.max_f, s.argmax_t),
        );
        let (a, b) = s.endpoint_areas;
        o.check(
            ((a - plane) / plane).abs() < 0.02 && ((b - plane) / plane).abs() < 0.02,
            format!("g={g} endpoints {a:.4} {b:.4}"),
        );
    }
    o.time(start, Duration::from_secs(120));
    o.finish(3);
}

#[test]
fn criterion_4_existence() {
    let _g = serial();
    let mut o = Outcome::new();
    for g in 1..=3 {
        let start = Instant::now();
        let out = match pipeline(&SeedSpec::one_end(g, 2.0 / 3.0)) {
            Ok(out) => out,
            Err(e) => {
                o.check(false, format!("g={g}: {e}"));
                continue;
            }
        };
        let a = &out.report.analysis;
        o.check(
            out.report.converged && a.residual_rms < 1e-4,
            format!("g={g} residual {:.1e}", a.residual_rms),
        );
        o.check(a.genus == g && a.end_count == 1, format!("g={g} genus {} ends {}", a.genus, a.end_count));
        o.check(
            a.equivariance_defect < 1e-9 * R,
            format!("g={g} defect {:.1e}", a.equivariance_defect),
        );
        o.check(
            a.gauss_area > 1.0 && a.gauss_area <= 1.0 + 4.0 / E + 0.02,
            format!("g={g} F {:.5}", a.gauss_area),
        );
        let angle = a.boundary_angle_stats.map_or(f64::INFINITY, |s| s.max_deviation_deg);
        o.check(angle < 2.0, format!("g={g} boundary angle {angle:.2}deg"));
        o.check(a.axis_hits == 2, format!("g={g} axis pairs {}", a.axis_hits));
        o.check(a.triangles <= 20_000, format!("g={g} {} triangles", a.triangles));
        o.time(start, Duration::from_secs(15 * 60));
    }
    o.finish(4);
}

#[test]
fn criterion_5_high_genus_trend() {
    let _g = serial();
    let mut o = Outcome::new();
    let mut dists = Vec::new();
    for g in [3, 5, 7, 11] {
        match pipeline(&SeedSpec::one_end(g, 2.0 / 3.0)) {
            Ok(out) if out.report.converged => dists.push((g, out.report.analysis.dist_to_plane_sphere)),
            Ok(out) => o.check(false, format!("g={g} not converged ({:.1e})", out.report.analysis.residual_rms)),
            Err(e) => o.check(false, format!("g={g}: {e}")),
        }
    }
    let listed: Vec<String> = dists.iter().map(|(g, d)| format!("g={g} {d:.3}")).collect();
    o.check(dists.len() == 4, listed.join(" "));
    o.check(dists.windows(2).all(|w| w[1].1 <= w[0].1), "non-increasing");
    let last = dists.iter().find(|d| d.0 == 11).map_or(f64::INFINITY, |d| d.1);
    o.check(last < 0.15, format!("g=11 below 0.15 ({last:.3})"));
    o.finish(5);
}

#[test]
fn criterion_6_riemann_hurwitz() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut formula_ok = true;
    let mut constraint_ok = true;
    for g in 1..=10i64 {
        for qg in 0..=3i64 {
            for j in 0..=3i64 {
                let gamma = riemann_hurwitz_genus(g, qg, j);
                // Euler characteristic of a (g+1)-sheeted cover branched at 2j points
                let chi = (g + 1) * (2 - 2 * qg) - 2 * j * g;
                formula_ok &= gamma == (g + 1) * qg + (j - 1) * g && 2 - 2 * gamma == chi;
                if 1 <= gamma && gamma <= g {
                    constraint_ok &= (qg, j) == (1, 0) || (qg, j) == (0, 2);
                }
            }
        }
    }
    o.check(formula_ok, "formula over 1..10 x 0..3 x 0..3");
    o.check(constraint_ok, "1 <= gamma <= g forces (1,0) or (0,2)");
    o.time(start, Duration::from_secs(1));
    o.finish(6);
}

fn seed_corpus() -> Vec<SeedSpec> {
    let mut v: Vec<SeedSpec> = (1..=5).map(|g| SeedSpec::one_end(g, 2.0 / 3.0)).collect();
    v.push(SeedSpec::one_end(2, 0.05));
    v.push(SeedSpec::one_end(2, 0.5));
    v.push(SeedSpec::one_end(2, 0.95));
    v.push(SeedSpec::one_end(11, 2.0 / 3.0));
    v.extend([3, 4, 7].map(SeedSpec::two_end));
    v.push(SeedSpec {
        prismatic: true,
        ..SeedSpec::two_end(4)
    });
    v
}

fn label(s: &SeedSpec) -> String {
    format!("{:?} {} t={}", s.family, s.g_or_n, s.t)
}

#[test]
fn criterion_7_robustness() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    let cfg = EvolveConfig {
        max_iters_a: 100,
        target_edge: 0.25,
        ..EvolveConfig::default()
    };
    let mut idem = 0.0f64;
    let mut remesh_ok = 0;
    let corpus = seed_corpus();
    for spec in &corpus {
        let m: Mesh = seed(spec).unwrap();
        let group = spec.group::<f64>().unwrap();
        let before: TopologyReport = topology(&m).unwrap();
        let orbits = orbit_structure(&m, &group, m.scale() * 1e-6).unwrap();
        let s1 = symmetrize(&m, &group, &orbits);
        let s2 = symmetrize(&s1, &group, &orbits);
        for (a, b) in s1.vertices.iter().zip(&s2.vertices) {
            idem = idem.max((*a - *b).max_abs());
        }
        let mut params = RemeshParams::new(cfg.sizing());
        params.boundary_radius = Some(spec.clip_radius);
        match remesh_with(&m, &params, Some(&group)) {
            Ok((r, _)) if topology(&r).unwrap() == before => remesh_ok += 1,
            Ok(_) => o.check(false, format!("remesh changed topology of {}", label(spec))),
            Err(e) => o.check(false, format!("remesh of {}: {e}", label(spec))),
        }
    }
    o.check(idem <= 1e-14, format!("symmetrize idempotent to {idem:.1e}"));
    o.check(
        remesh_ok == corpus.len(),
        format!("remesh kept topology on {remesh_ok}/{} seeds", corpus.len()),
    );
    for spec in [SeedSpec::one_end(1, 2.0 / 3.0), SeedSpec::one_end(4, 2.0 / 3.0), SeedSpec::two_end(3)] {
        let m: Mesh = seed(&spec).unwrap();
        let group = spec.group::<f64>().unwrap();
        let before = topology(&m).unwrap();
        let mut params = RemeshParams::new(cfg.sizing());
        params.boundary_radius = Some(R);
        let (m, _) = remesh_with(&m, &params, Some(&group)).unwrap();
        // descend checks topology after every remesh and reports drift as an error
        let res = match descend(&m, &group, &cfg) {
            Ok((m, t)) => topology(&m).map(|t2| (t2, t.records.len(), t.remesh_events)),
            Err(Error::Stalled { trace, .. }) => Ok((before, trace.records.len(), trace.remesh_events)),
            Err(e) => Err(e),
        };
        match res {
            Ok((after, n, k)) => o.check(
                after == before,
                format!("{}: {n} iterations, {k} remeshes, topology kept", label(&spec)),
            ),
            Err(e) => o.check(false, format!("{}: {e}", label(&spec))),
        }
    }
    o.time(start, Duration::from_secs(300));
    o.finish(7);
}

#[test]
fn criterion_8_two_ends() {
    let _g = serial();
    let mut o = Outcome::new();
    let start = Instant::now();
    match pipeline(&SeedSpec::two_end(7)) {
        Ok(out) => {
            let a = &out.report.analysis;
            o.check(out.report.converged, format!("converged, residual {:.1e}", a.residual_rms));
            o.check(a.genus == 13 && a.end_count == 2, format!("genus {} ends {}", a.genus, a.end_count));
            o.check(a.equivariance_defect < 1e-9 * R, format!("D7 defect {:.1e}", a.equivariance_defect));
        }
        Err(Error::Stage { stage, source, .. }) => match *source {
            Error::Stalled { iteration, trace } | Error::RefineStalled { iteration, trace, .. } => o.check(
                !trace.records.is_empty(),
                format!(
                    "structured stall in {stage} at iteration {iteration}: F {:.4}, residual {:.2e}",
                    trace.final_f, trace.final_residual
                ),
            ),
            other => o.check(false, format!("{stage}: {other}")),
        },
        Err(e) => o.check(false, e.to_string()),
    }
    o.time(start, Duration::from_secs(30 * 60));
    o.finish(8);
}
