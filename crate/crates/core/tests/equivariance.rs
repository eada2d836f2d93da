use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shrinker_core::equivariance::*;
use shrinker_core::seeds::{seed, SeedSpec};
use shrinker_core::trimesh::primitives::disc_symmetric;
use shrinker_core::{Group, Mat3, Mesh, Vec3};

fn is_rotation(m: &Mat3) -> bool {
    m.mul(&m.transpose()).frobenius_dist(&Mat3::identity()) < 1e-12 && (m.det() - 1.0).abs() < 1e-12
}

#[test]
fn parse_names() {
    assert_eq!(Group::parse("D4").unwrap().order(), 8);
    assert_eq!(Group::parse("c5").unwrap().order(), 5);
    assert_eq!(Group::parse("trivial").unwrap().order(), 1);
    assert!(Group::parse("D1").is_err());
    assert!(Group::parse("X3").is_err());
    assert_eq!(Group::parse("D7").unwrap().name(), "D7");
}

#[test]
fn psi_fixes_its_axis() {
    let g = dihedral_group::<f64>(5).unwrap();
    for l in 1..=5 {
        let xi = Group::horizontal_axis(5, l);
        let psi = g.psi(l).unwrap();
        assert!((psi.apply(&xi) - xi).norm() < 1e-14);
        let z = Vec3::new(0.0, 0.0, 1.0);
        assert!((psi.apply(&z) + z).norm() < 1e-14);
    }
    assert!(g.psi(0).is_none() && g.psi(6).is_none());
}

#[test]
fn riemann_hurwitz_matches_euler_count() {
    // a (g+1)-fold branched cover with 2j fixed points of full ramification:
    // χ = (g+1) χ' - 2j·g
    for g in 1..=30i64 {
        for qg in 0..=4i64 {
            for j in 0..=6i64 {
                let chi = (g + 1) * (2 - 2 * qg) - 2 * j * g;
                assert_eq!(2 - 2 * riemann_hurwitz_genus(g, qg, j), chi);
            }
        }
    }
}

#[test]
fn low_genus_forces_two_axis_pairs_on_sphere_quotients() {
    for g in 1..=30i64 {
        let sols = low_genus_solutions(g, 4, 6);
        let planar: Vec<_> = sols.iter().filter(|s| s.0 == 0).collect();
        assert_eq!(planar, vec![&(0, 2)], "g={g}");
        // the only other option is a free action on a torus
        assert!(sols.iter().all(|&(qg, j)| qg == 0 || (qg, j) == (1, 0)));
        assert_eq!(riemann_hurwitz_genus(g, 0, 2), g);
    }
}

#[test]
fn axis_points_of_seed_have_small_stabilizers() {
    let spec = SeedSpec::one_end(2, 2.0 / 3.0);
    let m: Mesh = seed(&spec).unwrap();
    let g = spec.group::<f64>().unwrap();
    let o = orbit_structure(&m, &g, default_tolerance(&m)).unwrap();
    let tol = 1e-9 * m.scale();
    let axes = g.horizontal_axes();
    let mut on_axis = 0;
    for v in 0..m.vertices.len() {
        let p = m.vertices[v];
        let s = o.stabilizer_size[o.orbit_of[v]];
        if p.norm() < tol {
            assert_eq!(s, g.order());
        } else if axes.iter().any(|a| p.cross(a).norm() < tol) {
            assert_eq!(s, 2, "vertex {v} at {p:?}");
            on_axis += 1;
        } else if p.x().hypot(p.y()) < tol {
            assert_eq!(s, g.n);
        } else {
            assert_eq!(s, 1, "vertex {v} at {p:?}");
        }
    }
    assert!(on_axis > 0);
    for (k, members) in o.members().iter().enumerate() {
        assert_eq!(members.len() * o.stabilizer_size[k], g.order());
        assert_eq!(members.len(), o.orbit_size(k));
    }
}

#[test]
fn noisy_mesh_symmetrizes_once() {
    let g = dihedral_group::<f64>(3).unwrap();
    let mut m = disc_symmetric::<f64>(8.0, 0.5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in m.vertices.iter_mut() {
        *p = *p + Vec3::new(rng.gen_range(-1e-8..1e-8), rng.gen_range(-1e-8..1e-8), rng.gen_range(-1e-8..1e-8));
    }
    let o = orbit_structure(&m, &g, 1e-6).unwrap();
    assert!(equivariance_defect(&m, &g) > 1e-9);
    let s1 = symmetrize(&m, &g, &o);
    assert!(equivariance_defect(&s1, &g) < 1e-13);
    let s2 = symmetrize(&s1, &g, &o);
    let drift = s1.vertices.iter().zip(&s2.vertices).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
    assert!(drift < 1e-14, "{drift}");
}

#[test]
fn symmetrized_field_commutes_with_group() {
    let g = dihedral_group::<f64>(4).unwrap();
    let m = disc_symmetric::<f64>(3.0, 0.4, 4);
    let o = orbit_structure(&m, &g, default_tolerance(&m)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut field: Vec<Vec3> = (0..m.vertices.len())
        .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
        .collect();
    symmetrize_field(&mut field, &g, &o);
    for (k, q) in g.elements.iter().enumerate() {
        for v in 0..m.vertices.len() {
            let w = o.perm[k][v];
            assert!((q.apply(&field[v]) - field[w]).norm() < 1e-12);
        }
    }
}

#[test]
fn asymmetric_mesh_is_rejected() {
    let g = dihedral_group::<f64>(3).unwrap();
    let m = disc_symmetric::<f64>(3.0, 0.4, 3).map_positions(|p| *p + Vec3::new(0.3, 0.0, 0.0));
    assert!(orbit_structure(&m, &g, default_tolerance(&m)).is_err());
}

proptest! {
    #[test]
    fn groups_are_closed(n in 2usize..12, dihedral in any::<bool>()) {
        let g = if dihedral { dihedral_group::<f64>(n).unwrap() } else { cyclic_group::<f64>(n).unwrap() };
        prop_assert_eq!(g.order(), if dihedral { 2 * n } else { n });
        prop_assert!(g.find(&Mat3::identity(), 1e-12).is_some());
        for a in &g.elements {
            prop_assert!(is_rotation(a));
            prop_assert!(g.find(&a.transpose(), 1e-12).is_some());
            for b in &g.elements {
                prop_assert!(g.find(&a.mul(b), 1e-12).is_some());
            }
        }
        // no element is listed twice
        for (i, a) in g.elements.iter().enumerate() {
            prop_assert_eq!(g.find(a, 1e-9), Some(i));
        }
    }

    #[test]
    fn orbit_stabilizer_on_symmetric_discs(n in 2usize..7, edge in 0.3f64..0.8) {
        let g = dihedral_group::<f64>(n).unwrap();
        let m = disc_symmetric::<f64>(3.0, edge, n);
        let o = orbit_structure(&m, &g, default_tolerance(&m)).unwrap();
        let total: usize = (0..o.num_orbits()).map(|k| o.orbit_size(k)).sum();
        prop_assert_eq!(total, m.vertices.len());
        for (k, members) in o.members().iter().enumerate() {
            prop_assert_eq!(members.len() * o.stabilizer_size[k], g.order());
        }
    }
}
