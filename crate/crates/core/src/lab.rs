//! Orchestration and analysis: end counting, the plane ∪ sphere distance
//! diagnostic, width scans, the known-shrinker check, run reports and the
//! seed → descend → refine pipeline.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::equivariance::{axis_intersections, equivariance_defect, SymmetryGroup};
use crate::error::{Error, Result};
use crate::evolver::{descend, refine_critical, EvolveConfig, EvolveTrace, Phase};
use crate::gaussmetric::{
    clipped_cylinder_gauss_area, disc_gauss_area, discrete_gauss_area, shrinker_residual, sphere_gauss_area,
    variational_residual,
};
use crate::scalar::Real;
use crate::seeds::{seed, sweepout_family, Family, SeedSpec};
use crate::trimesh::primitives::{clipped_cylinder, disc, icosphere};
use crate::trimesh::remesh::remesh_with;
use crate::trimesh::{clip_to_ball, topology, Connectivity, MeshFormat, RemeshParams, TriMesh};
use crate::vec3::Vec3;

/// Write `bytes` to a temporary file beside `path`, then rename over it.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize `value` as pretty JSON and write it atomically.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Number of ends of a clipped mesh: its boundary loops on `|x| = R`.
pub fn count_ends<T: Real>(mesh: &TriMesh<T>, radius: T) -> Result<usize> {
    let mut m = mesh.clone();
    m.refresh_boundary();
    for (v, p) in m.vertices.iter().enumerate() {
        if m.boundary_flags[v] {
            let off = p.norm() - radius;
            if off.abs() > T::lit(1e-6) * radius {
                return Err(Error::NotClipped {
                    vertex: v,
                    offset: off.as_f64(),
                });
            }
        }
    }
    Ok(topology(&m)?.boundary_loops)
}

/// One-sided distance from the mesh to the plane `x₃ = 0` union the sphere
/// of radius 2, ignoring vertices within `tube_radius` of their
/// intersection circle.
pub fn distance_to_plane_sphere<T: Real>(mesh: &TriMesh<T>, tube_radius: T) -> T {
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for p in &mesh.vertices {
        let rho = (p.x() * p.x() + p.y() * p.y()).sqrt();
        let to_circle = ((rho - two) * (rho - two) + p.z() * p.z()).sqrt();
        if to_circle <= tube_radius {
            continue;
        }
        let d = p.z().abs().min((p.norm() - two).abs());
        worst = worst.max(d);
    }
    worst
}

/// Result of a sweepout width scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthScan {
    pub g: usize,
    pub max_f: f64,
    pub argmax_t: f64,
    /// Areas at `t = 1/(samples+1)` and `t = samples/(samples+1)`.
    pub endpoint_areas: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

/// Width scan with the default seed parameters.
pub fn width_scan(g: usize, samples: usize) -> Result<WidthScan> {
    width_scan_with(g, samples, &SeedSpec::default())
}

/// Discrete Gaussian area of the one-end sweepout on the grid
/// `t_k = k/(samples+1)`, `k = 1..samples`.
pub fn width_scan_with(g: usize, samples: usize, defaults: &SeedSpec) -> Result<WidthScan> {
    if samples < 3 {
        return Err(Error::InvalidInput(format!("width scan needs at least 3 samples, got {samples}")));
    }
    let ts: Vec<f64> = (1..=samples).map(|k| k as f64 / (samples + 1) as f64).collect();
    let family = sweepout_family::<f64>(g, &ts, defaults)?;
    let pts: Vec<(f64, f64)> = family.iter().map(|s| (s.t, s.area)).collect();
    let (argmax_t, max_f) = pts
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best });
    Ok(WidthScan {
        g,
        max_f,
        argmax_t,
        endpoint_areas: (pts[0].1, pts[pts.len() - 1].1),
        samples: pts,
    })
}

/// One row of the known-shrinker check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownShrinker {
    pub name: String,
    pub triangles: usize,
    pub gauss_area: f64,
    pub expected_area: f64,
    pub relative_area_error: f64,
    pub residual_rms: f64,
    pub residual_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownShrinkerReport {
    pub radius: f64,
    pub entries: Vec<KnownShrinker>,
}

impl KnownShrinkerReport {
    pub fn get(&self, name: &str) -> Option<&KnownShrinker> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn known_entry(name: &str, mesh: &TriMesh<f64>, expected: f64) -> KnownShrinker {
    let f = discrete_gauss_area(mesh).total;
    let res = shrinker_residual(mesh);
    KnownShrinker {
        name: name.into(),
        triangles: mesh.num_triangles(),
        gauss_area: f,
        expected_area: expected,
        relative_area_error: (f - expected).abs() / expected,
        residual_rms: res.rms_weighted,
        residual_max: res.max_abs(),
    }
}

/// Plane disc, radius-2 sphere and radius-√2 cylinder, all clipped at 8,
/// measured against their closed-form Gaussian areas.
pub fn verify_known_shrinkers() -> Result<KnownShrinkerReport> {
    let r = 8.0;
    let plane = disc::<f64>(r, 0.1);
    let sphere = icosphere::<f64>(2.0, 5);
    let cylinder = clipped_cylinder::<f64>(std::f64::consts::SQRT_2, r, 0.05);
    Ok(KnownShrinkerReport {
        radius: r,
        entries: vec![
            known_entry("plane", &plane, disc_gauss_area(r)?),
            known_entry("sphere", &sphere, sphere_gauss_area(2.0)?),
            known_entry(
                "cylinder",
                &cylinder,
                clipped_cylinder_gauss_area(std::f64::consts::SQRT_2, r)?,
            ),
        ],
    })
}

/// Write a mesh in the requested format.
pub fn export_mesh<T: Real>(mesh: &TriMesh<T>, path: &Path, format: MeshFormat) -> Result<()> {
    mesh.save(path, Some(format))
}

/// Contact angles with the clipping sphere, degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleStats {
    pub mean_deg: f64,
    pub max_deviation_deg: f64,
}

/// Angle between the surface and the clipping sphere at the boundary
/// vertices, using area-weighted vertex normals.
pub fn boundary_angle_stats<T: Real>(mesh: &TriMesh<T>) -> Option<AngleStats> {
    let mut m = mesh.clone();
    m.refresh_boundary();
    let normals = m.vertex_normals();
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    let mut k = 0usize;
    for (v, p) in m.vertices.iter().enumerate() {
        if !m.boundary_flags[v] {
            continue;
        }
        // normals orthogonal ⇔ surfaces orthogonal
        let c = normals[v].dot(&p.normalized()).abs().min(T::one()).as_f64();
        let angle = c.acos().to_degrees();
        sum += angle;
        worst = worst.max((90.0 - angle).abs());
        k += 1;
    }
    (k > 0).then(|| AngleStats {
        mean_deg: sum / k as f64,
        max_deviation_deg: worst,
    })
}

/// Crossings of the vertical axis ξ₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisHits {
    /// Crossings inside the ball.
    pub raw: usize,
    /// Boundary loops winding once around ξ₀; each closes up through ξ₀ at
    /// infinity.
    pub winding_loops: usize,
    /// Pairs `j` of crossings of the closed-up surface: `(raw + winding_loops) / 2`.
    pub pairs: usize,
    pub positions: Vec<f64>,
    /// Largest deviation from a perpendicular crossing, degrees.
    pub max_orthogonality_deviation_deg: f64,
}

pub fn axis_hits<T: Real>(mesh: &TriMesh<T>, radius: T) -> Result<AxisHits> {
    let axis = Vec3::unit(2);
    let tol = mesh.scale() * T::lit(1e-9);
    let hits: Vec<T> = axis_intersections(mesh, axis, tol)?
        .into_iter()
        .filter(|s| s.abs() < radius)
        .collect();
    let conn = Connectivity::build(mesh);
    let mut winding = 0usize;
    for lp in conn.boundary_loops(mesh) {
        let mut turn = 0.0f64;
        for i in 0..lp.len() {
            let a = mesh.vertices[lp[i]];
            let b = mesh.vertices[lp[(i + 1) % lp.len()]];
            let (ta, tb) = (a.y().as_f64().atan2(a.x().as_f64()), b.y().as_f64().atan2(b.x().as_f64()));
            let mut d = tb - ta;
            while d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            while d < -std::f64::consts::PI {
                d += std::f64::consts::TAU;
            }
            turn += d;
        }
        if (turn / std::f64::consts::TAU).round().abs() % 2.0 == 1.0 {
            winding += 1;
        }
    }
    // orthogonality: area-weighted normal of the triangles met by the axis
    // at each crossing, so a crossing at a vertex uses its whole fan
    let mut crossings: Vec<(f64, Vec3<f64>)> = Vec::new();
    for t in 0..mesh.triangles.len() {
        let p = mesh.triangle_points(t);
        if let Some((z, n)) = axis_crossing(&p) {
            let n = if n.z() < 0.0 { -n } else { n };
            match crossings.iter_mut().find(|(c, _)| (c - z).abs() <= tol.as_f64().max(1e-12)) {
                Some((_, acc)) => *acc += n,
                None => crossings.push((z, n)),
            }
        }
    }
    let worst = crossings
        .iter()
        .map(|(_, n)| (n.z() / n.norm()).min(1.0).acos().to_degrees())
        .fold(0.0f64, f64::max);
    Ok(AxisHits {
        raw: hits.len(),
        winding_loops: winding,
        pairs: (hits.len() + winding) / 2,
        positions: hits.iter().map(|s| s.as_f64()).collect(),
        max_orthogonality_deviation_deg: worst,
    })
}

/// Height and area-weighted normal of a triangle whose horizontal
/// projection contains ξ₀.
fn axis_crossing<T: Real>(p: &[Vec3<T>; 3]) -> Option<(f64, Vec3<f64>)> {
    let q: Vec<Vec3<f64>> = p.iter().map(|v| Vec3::new(v.x().as_f64(), v.y().as_f64(), v.z().as_f64())).collect();
    let area = (q[1].x() - q[0].x()) * (q[2].y() - q[0].y()) - (q[2].x() - q[0].x()) * (q[1].y() - q[0].y());
    if area.abs() < 1e-300 {
        return None;
    }
    let l0 = (q[1].x() * q[2].y() - q[2].x() * q[1].y()) / area;
    let l1 = (q[2].x() * q[0].y() - q[0].x() * q[2].y()) / area;
    let l2 = 1.0 - l0 - l1;
    if l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12 {
        return None;
    }
    let z = l0 * q[0].z() + l1 * q[1].z() + l2 * q[2].z();
    Some((z, (q[1] - q[0]).cross(&(q[2] - q[0]))))
}

/// Largest distance from a horizontal symmetry axis to the nearest vertex.
pub fn horizontal_axis_gap<T: Real>(mesh: &TriMesh<T>, group: &SymmetryGroup<T>) -> f64 {
    group
        .horizontal_axes()
        .iter()
        .map(|a| {
            mesh.vertices
                .iter()
                .map(|p| (*p - *a * p.dot(a)).norm().as_f64())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Mean distance from ξ₀ of the boundary loops after clipping at `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndProfile {
    pub radius: f64,
    pub mean_axis_distance: f64,
}

fn end_profile(mesh: &TriMesh<f64>, radius: f64) -> Option<EndProfile> {
    let m = if radius < mesh.vertices.iter().map(|p| p.norm()).fold(0.0, f64::max) - 1e-9 {
        clip_to_ball(mesh, radius).ok()?
    } else {
        mesh.clone()
    };
    let conn = Connectivity::build(&m);
    let mut sum = 0.0;
    let mut k = 0usize;
    for lp in conn.boundary_loops(&m) {
        for v in lp {
            let p = m.vertices[v];
            sum += (p.x() * p.x() + p.y() * p.y()).sqrt();
            k += 1;
        }
    }
    (k > 0).then(|| EndProfile {
        radius,
        mean_axis_distance: sum / k as f64,
    })
}

/// Geometric and topological measurements of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub vertices: usize,
    pub triangles: usize,
    /// Discrete Gaussian area; proxy for the min-max width.
    pub gauss_area: f64,
    /// Gaussian-weighted RMS of the variational residual.
    pub residual_rms: f64,
    /// Gaussian-weighted RMS of `H - ⟨x,ν⟩/2` from the cotangent formula.
    pub shrinker_residual_rms: f64,
    pub genus: usize,
    pub boundary_loops: usize,
    pub components: usize,
    pub end_count: usize,
    pub group: String,
    pub equivariance_defect: f64,
    pub boundary_angle_stats: Option<AngleStats>,
    pub dist_to_plane_sphere: f64,
    /// Pair count `j` of ξ₀ crossings of the closed-up surface.
    pub axis_hits: usize,
    pub axis_hits_detail: AxisHits,
    pub horizontal_axis_gap: f64,
    /// Loop distance from ξ₀ at clip radii 7 and R; a ratio near `7/R`
    /// suggests conical ends, near 1 cylindrical ones.
    pub end_profiles: Vec<EndProfile>,
}

/// Analyse a clipped mesh against its symmetry group.
pub fn analyze(mesh: &TriMesh<f64>, group: &SymmetryGroup<f64>, radius: f64) -> Result<Analysis> {
    let top = topology(mesh)?;
    let end_count = count_ends(mesh, radius)?;
    debug_assert_eq!(end_count, top.boundary_loops);
    let hits = axis_hits(mesh, radius)?;
    let end_profiles = [7.0f64.min(radius), radius]
        .iter()
        .filter_map(|&r| end_profile(mesh, r))
        .collect();
    Ok(Analysis {
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        gauss_area: discrete_gauss_area(mesh).total,
        residual_rms: variational_residual(mesh).rms_weighted,
        shrinker_residual_rms: shrinker_residual(mesh).rms_weighted,
        genus: top.genus,
        boundary_loops: top.boundary_loops,
        components: top.components,
        end_count,
        group: group.name(),
        equivariance_defect: equivariance_defect(mesh, group),
        boundary_angle_stats: boundary_angle_stats(mesh),
        dist_to_plane_sphere: distance_to_plane_sphere(mesh, 0.5),
        axis_hits: hits.pairs,
        axis_hits_detail: hits,
        horizontal_axis_gap: horizontal_axis_gap(mesh, group),
        end_profiles,
    })
}

/// Condensed solver history.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub iterations_a: usize,
    pub iterations_b: usize,
    pub initial_f: f64,
    pub final_f: f64,
    pub final_residual: f64,
    pub converged: bool,
    pub remesh_events: usize,
    pub symmetrize_events: usize,
    pub recenter_events: usize,
}

impl TraceSummary {
    pub fn from_trace(t: &EvolveTrace) -> Self {
        TraceSummary {
            iterations_a: t.phase(Phase::A).count(),
            iterations_b: t.phase(Phase::B).count(),
            initial_f: t.records.first().map_or(t.final_f, |r| r.f_start),
            final_f: t.final_f,
            final_residual: t.final_residual,
            converged: t.converged,
            remesh_events: t.remesh_events,
            symmetrize_events: t.symmetrize_events,
            recenter_events: t.recenter_events,
        }
    }
}

/// Outcome of a pipeline run. The reported Gaussian area stands in for the
/// min-max width; a converged run certifies a critical point with the
/// listed invariants, not that it is the min-max surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: SeedSpec,
    pub config: EvolveConfig,
    pub analysis: Analysis,
    pub converged: bool,
    pub wall_time: f64,
    pub trace: TraceSummary,
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub mesh: TriMesh<f64>,
    pub trace: EvolveTrace,
}

fn stage<T>(name: &'static str, checkpoint: &Option<PathBuf>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        checkpoint: checkpoint.clone(),
        source: Box::new(e),
    })
}

/// Seed, remesh to the solver resolution, descend, refine, analyse.
pub fn run_pipeline(spec: &SeedSpec, config: &EvolveConfig) -> Result<RunOutput> {
    let clock = Instant::now();
    let ck = &config.checkpoint_dir;
    stage("config", ck, spec.validate().and_then(|_| config.validate()))?;
    if (spec.clip_radius - config.radius).abs() > 1e-12 * config.radius {
        return stage(
            "config",
            ck,
            Err(Error::InvalidInput(format!(
                "seed clip radius {} differs from solver radius {}",
                spec.clip_radius, config.radius
            ))),
        );
    }
    let group: SymmetryGroup<f64> = stage("seed", ck, spec.group())?;
    let seeded: TriMesh<f64> = stage("seed", ck, seed(spec))?;
    let start = stage("seed", ck, topology(&seeded))?;
    let mut params = RemeshParams::new(config.sizing());
    params.boundary_radius = Some(config.radius);
    let (mesh, _) = stage("remesh", ck, remesh_with(&seeded, &params, Some(&group)))?;
    let now = stage("remesh", ck, topology(&mesh))?;
    if now != start {
        return stage(
            "remesh",
            ck,
            Err(Error::TopologyDrift {
                before: start.to_string(),
                after: now.to_string(),
            }),
        );
    }
    let (mesh, mut trace) = stage("descend", ck, descend(&mesh, &group, config))?;
    let (mesh, refine_trace) = stage("refine", ck, refine_critical(&mesh, &group, config))?;
    trace.append(refine_trace);
    let mut mesh = mesh;
    mesh.orbit_labels = stage(
        "analyze",
        ck,
        crate::equivariance::orbit_structure(&mesh, &group, mesh.scale() * 1e-6),
    )?
    .labels();
    let analysis = stage("analyze", ck, analyze(&mesh, &group, config.radius))?;
    let report = RunReport {
        seed: spec.clone(),
        config: config.clone(),
        converged: trace.converged,
        analysis,
        wall_time: clock.elapsed().as_secs_f64(),
        trace: TraceSummary::from_trace(&trace),
    };
    Ok(RunOutput { report, mesh, trace })
}

/// One pipeline job of a batch.
#[derive(Clone, Debug)]
pub struct BatchJob {
    pub spec: SeedSpec,
    pub config: EvolveConfig,
    /// Directory receiving `report.json` and `mesh.obj`.
    pub out_dir: Option<PathBuf>,
}

/// Run independent pipelines on worker threads, one job per thread at a
/// time; results come back in job order.
pub fn run_batch(jobs: &[BatchJob], workers: usize) -> Vec<Result<RunReport>> {
    let workers = workers.max(1).min(jobs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<RunReport>>>> =
        jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let r = run_job(&jobs[i]);
                *slots[i].lock().expect("slot poisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot poisoned").expect("job ran"))
        .collect()
}

fn run_job(job: &BatchJob) -> Result<RunReport> {
    let out = run_pipeline(&job.spec, &job.config)?;
    if let Some(dir) = &job.out_dir {
        std::fs::create_dir_all(dir)?;
        out.mesh.save(&dir.join("mesh.obj"), Some(MeshFormat::Obj))?;
        write_json(&dir.join("report.json"), &out.report)?;
    }
    Ok(out.report)
}

/// Family name as used on the command line.
pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::OneEnd => "one_end",
        Family::TwoEnd => "two_end",
    }
}
