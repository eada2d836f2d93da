use shrinker_core::equivariance::dihedral_group;
use shrinker_core::evolver::EvolveConfig;
use shrinker_core::lab::*;
use shrinker_core::seeds::SeedSpec;
use shrinker_core::trimesh::primitives::{clipped_cylinder, disc_symmetric, icosphere};
use shrinker_core::trimesh::MeshFormat;
use shrinker_core::{Error, Group, Mesh};

#[test]
fn known_shrinkers_pass() {
    let r = verify_known_shrinkers().unwrap();
    assert_eq!(r.radius, 8.0);
    let by = |name: &str| r.entries.iter().find(|e| e.name.contains(name)).unwrap();
    let sphere = by("sphere");
    assert!(sphere.relative_area_error < 0.002 && sphere.residual_rms < 1e-3);
    let plane = by("plane");
    assert!((plane.gauss_area - plane.expected_area).abs() < 0.002 && plane.residual_rms < 1e-6);
    assert!(by("cylinder").residual_rms < 1e-3);
}

#[test]
fn plane_and_sphere_are_at_distance_zero() {
    assert_eq!(distance_to_plane_sphere(&disc_symmetric::<f64>(8.0, 0.5, 2), 0.5), 0.0);
    assert!(distance_to_plane_sphere(&icosphere::<f64>(2.0, 3), 0.5) < 1e-12);
    let off = distance_to_plane_sphere(&icosphere::<f64>(3.0, 3), 0.5);
    assert!((off - 1.0).abs() < 1e-12);
}

#[test]
fn ends_are_boundary_loops() {
    assert_eq!(count_ends(&disc_symmetric::<f64>(8.0, 0.5, 2), 8.0).unwrap(), 1);
    assert_eq!(count_ends(&clipped_cylinder::<f64>(2f64.sqrt(), 8.0, 0.5), 8.0).unwrap(), 2);
    assert_eq!(count_ends(&icosphere::<f64>(2.0, 2), 8.0).unwrap(), 0);
    assert!(matches!(
        count_ends(&disc_symmetric::<f64>(6.0, 0.5, 2), 8.0),
        Err(Error::NotClipped { .. })
    ));
}

#[test]
fn small_width_scan() {
    let s = width_scan(1, 9).unwrap();
    assert_eq!(s.samples.len(), 9);
    assert!(s.max_f >= 1.05 && s.max_f <= (1.0 + 4.0 / std::f64::consts::E) * 1.02);
    assert!((s.argmax_t - 0.7).abs() < 1e-12);
    assert!(width_scan(1, 2).is_err());
}

#[test]
fn analysis_of_the_plane() {
    let g = dihedral_group::<f64>(2).unwrap();
    let a = analyze(&disc_symmetric::<f64>(8.0, 0.4, 2), &g, 8.0).unwrap();
    assert_eq!((a.genus, a.end_count, a.components), (0, 1, 1));
    assert!(a.residual_rms < 1e-10 && a.shrinker_residual_rms < 1e-10);
    assert!(a.equivariance_defect < 1e-12);
    let angle = a.boundary_angle_stats.unwrap();
    assert!(angle.max_deviation_deg < 1e-6);
    assert_eq!(a.axis_hits, 1);
    assert_eq!(a.dist_to_plane_sphere, 0.0);
}

#[test]
fn report_json_round_trip() {
    let g = Group::trivial();
    let a = analyze(&disc_symmetric::<f64>(8.0, 0.5, 2), &g, 8.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("analysis.json");
    write_json(&p, &a).unwrap();
    let back: Analysis = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(back.genus, a.genus);
    assert_eq!(back.gauss_area, a.gauss_area);
    assert_eq!(back.residual_rms, a.residual_rms);
}

#[test]
fn exported_mesh_reloads() {
    let m = icosphere::<f64>(2.0, 2);
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("s.obj", MeshFormat::Obj), ("s.ply", MeshFormat::Ply)] {
        let p = dir.path().join(name);
        export_mesh(&m, &p, fmt).unwrap();
        assert_eq!(Mesh::load(&p).unwrap().triangles, m.triangles);
    }
}

#[test]
fn pipeline_rejects_radius_mismatch() {
    let spec = SeedSpec::one_end(1, 2.0 / 3.0);
    let cfg = EvolveConfig {
        radius: 6.0,
        ..EvolveConfig::default()
    };
    let err = run_pipeline(&spec, &cfg).err().unwrap();
    assert!(matches!(err, Error::Stage { stage: "config", .. }));
    assert_eq!(err.exit_code(), 2);
}
