use std::f64::consts::{E, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shrinker_core::equivariance::{apply_isometry, dihedral_group};
use shrinker_core::gaussmetric::*;
use shrinker_core::trimesh::primitives::{disc, icosphere};
use shrinker_core::{GenericMat3, Mesh, Vec3};

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn jittered_sphere(rng: &mut ChaCha8Rng, level: usize) -> Mesh {
    let r = rng.gen_range(1.0..3.0);
    let mut m = icosphere::<f64>(r, level);
    let shift = Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let amp = 0.15 * r / (1 << level) as f64;
    for p in m.vertices.iter_mut() {
        let d = Vec3::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
        *p = *p + d + shift;
    }
    m
}

#[test]
fn weight_examples() {
    assert_eq!(weight(Vec3::new(0.0, 0.0, 0.0)).unwrap(), 1.0);
    assert!((weight(Vec3::new(2.0, 0.0, 0.0)).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    let p = Vec3::new(2.0, 2.0, 2.0 * 2f64.sqrt());
    assert!((weight(p).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
    assert!(weight(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
}

#[test]
fn cylinder_area_matches_axial_quadrature() {
    // ∫ over the cylinder of e^{-(r²+z²)/4} dA / 4π = r e^{-r²/4}/2 ∫ e^{-z²/4} dz
    let r = 2f64.sqrt();
    let axial = simpson(|z| (-z * z / 4.0).exp(), -40.0, 40.0, 4000);
    let oracle = r * (-r * r / 4.0).exp() / 2.0 * axial;
    let v = cylinder_gauss_area(r).unwrap();
    assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    assert!((v - (2.0 * PI / E).sqrt()).abs() < 1e-12);
    assert!(v > sphere_gauss_area(2.0).unwrap());
    assert!(cylinder_gauss_area(0.0f64).is_err());
}

#[test]
fn halfspace_measure_matches_quadrature() {
    let oracle = simpson(|t| (-t * t / 4.0).exp(), 2.0, 40.0, 8000) / (4.0 * PI).sqrt();
    let v = halfspace_gauss_measure(2.0f64);
    assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    assert!((v - 0.078650).abs() < 5e-7);
    assert_eq!(halfspace_gauss_measure(0.0f64), 0.5);
    assert!(halfspace_gauss_measure(60.0f64) < 1e-300);
}

#[test]
fn sphere_scaling_curve() {
    let radii = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let mut best = (0.0, 0.0);
    for r in radii {
        let f = discrete_gauss_area(&icosphere::<f64>(r, 4)).total;
        let exact = sphere_gauss_area(r).unwrap();
        assert!(((f - exact) / exact).abs() < 5e-3, "r={r}: {f} vs {exact}");
        if f > best.1 {
            best = (r, f);
        }
    }
    assert_eq!(best.0, 2.0);
    let one = discrete_gauss_area(&icosphere::<f64>(1.0, 5)).total;
    assert!((one - (-0.25f64).exp()).abs() < 2e-3);
}

#[test]
fn disc_area_tends_to_closed_form() {
    let target = 1.0 - (-16.0f64).exp();
    let coarse = (discrete_gauss_area(&disc::<f64>(8.0, 0.4)).total - target).abs();
    let fine = (discrete_gauss_area(&disc::<f64>(8.0, 0.1)).total - target).abs();
    assert!(fine < coarse);
    assert!(fine < 2e-3, "{fine}");
}

#[test]
fn residuals_decrease_under_refinement() {
    let rms: Vec<f64> = (2..5)
        .map(|l| shrinker_residual(&icosphere::<f64>(2.0, l)).rms_weighted)
        .collect();
    assert!(rms[0] > rms[1] && rms[1] > rms[2], "{rms:?}");
    let unit = shrinker_residual(&icosphere::<f64>(1.0, 4));
    let mean: f64 = unit.per_vertex.iter().flatten().sum::<f64>() / unit.per_vertex.len() as f64;
    assert!((mean - 1.5).abs() < 0.02, "{mean}");
    for edge in [0.4, 0.2] {
        let d = disc::<f64>(8.0, edge);
        assert!(shrinker_residual(&d).rms_weighted < 1e-10);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let mut m = jittered_sphere(&mut rng, 3);
        let g = gauss_area_gradient(&m);
        let h = 1e-6 * m.scale();
        for v in (0..m.vertices.len()).step_by(7) {
            let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalized();
            let star: Vec<usize> = (0..m.triangles.len()).filter(|&t| m.triangles[t].contains(&v)).collect();
            // only the star of v changes, so difference its area alone
            let local = |m: &Mesh| {
                let per = discrete_gauss_area(m).per_triangle;
                star.iter().map(|&t| per[t]).sum::<f64>()
            };
            let p = m.vertices[v];
            m.vertices[v] = p + u * h;
            let fp = local(&m);
            m.vertices[v] = p - u * h;
            let fm = local(&m);
            m.vertices[v] = p;
            let fd = (fp - fm) / (2.0 * h);
            let an = g[v].dot(&u);
            assert!((fd - an).abs() <= 1e-6 * g[v].norm(), "vertex {v}: {fd} vs {an}");
        }
    }
}

#[test]
fn gradient_rotates_with_the_mesh() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = jittered_sphere(&mut rng, 2);
    let g0 = gauss_area_gradient(&m);
    let group = dihedral_group::<f64>(3).unwrap();
    for q in &group.elements {
        let g1 = gauss_area_gradient(&apply_isometry(q, &m));
        let back = q.transpose();
        for (a, b) in g0.iter().zip(&g1) {
            assert!((*a - back.apply(b)).norm() < 1e-12);
        }
    }
}

#[test]
fn plane_gradient_has_no_normal_part() {
    let d = disc::<f64>(8.0, 0.3);
    let g = gauss_area_gradient(&d);
    for (v, gv) in g.iter().enumerate() {
        if !d.boundary_flags[v] {
            assert!(gv.z().abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn area_is_rotation_invariant(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..6.3, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = jittered_sphere(&mut rng, 2);
        let q = GenericMat3::rotation(Vec3::new(ax, ay, az).normalized(), angle);
        let f0 = discrete_gauss_area(&m).total;
        let f1 = discrete_gauss_area(&apply_isometry(&q, &m)).total;
        prop_assert!((f0 - f1).abs() <= 1e-12 * f0);
    }

    #[test]
    fn halfspace_measures_are_complementary(s in -30.0f64..30.0) {
        let sum = halfspace_gauss_measure(s) + halfspace_gauss_measure(-s);
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halfspace_measure_decreases(s in -10.0f64..10.0, d in 1e-3f64..1.0) {
        prop_assert!(halfspace_gauss_measure(s + d) < halfspace_gauss_measure(s));
    }

    #[test]
    fn total_is_sum_of_triangles(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = jittered_sphere(&mut rng, 2);
        let r = discrete_gauss_area(&m);
        let s: f64 = r.per_triangle.iter().sum();
        prop_assert!((r.total - s).abs() <= 1e-12 * r.total);
        prop_assert!(r.per_triangle.iter().all(|a| *a >= 0.0 && a.is_finite()));
    }
}
