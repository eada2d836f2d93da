//! Two-phase search for critical points of the discrete Gaussian area:
//! projected descent with a free boundary on the clipping sphere, then a
//! damped Gauss–Newton solve on the normal residual that converges to
//! saddles as readily as to minima.

mod descent;
mod refine;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equivariance::{orbit_structure, OrbitStructure, SymmetryGroup};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trimesh::{Connectivity, Sizing, TriMesh};
use crate::vec3::Vec3;

pub use descent::{descend, recenter_dilation};
pub use refine::refine_critical;

/// Solver parameters. JSON field names match the command-line config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Clip radius.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Phase A target for the Gaussian-weighted residual RMS.
    pub descent_tol: f64,
    /// Phase B target.
    pub refine_tol: f64,
    pub armijo_c: f64,
    /// Largest vertex displacement of the first trial step.
    pub step_init: f64,
    #[serde(rename = "max_iters_A")]
    pub max_iters_a: usize,
    #[serde(rename = "max_iters_B")]
    pub max_iters_b: usize,
    pub remesh_every: usize,
    pub symmetrize_every: usize,
    pub lm_damping_init: f64,
    /// Remesh target edge length near the origin.
    pub target_edge: f64,
    /// Radius beyond which the remesh target grows linearly; `None` keeps
    /// the target uniform.
    pub grade_radius: Option<f64>,
    /// Cap on the graded remesh target.
    pub max_edge: Option<f64>,
    /// Maximise F along a cut-off dilation every `recenter_every`
    /// iterations of phase A; counteracts the unstable scaling mode.
    pub recenter: bool,
    pub recenter_every: usize,
    pub max_halvings: usize,
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            radius: 8.0,
            descent_tol: 1e-2,
            refine_tol: 1e-4,
            armijo_c: 1e-4,
            step_init: 0.05,
            max_iters_a: 1500,
            max_iters_b: 200,
            remesh_every: 25,
            symmetrize_every: 5,
            lm_damping_init: 1e-3,
            target_edge: 0.15,
            grade_radius: Some(4.0),
            max_edge: None,
            recenter: true,
            recenter_every: 5,
            max_halvings: 60,
            checkpoint_every: None,
            checkpoint_dir: None,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("R", self.radius),
            ("descent_tol", self.descent_tol),
            ("refine_tol", self.refine_tol),
            ("step_init", self.step_init),
            ("lm_damping_init", self.lm_damping_init),
            ("target_edge", self.target_edge),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::InvalidInput(format!("armijo_c must lie in (0,1), got {}", self.armijo_c)));
        }
        if self.refine_tol >= self.descent_tol {
            return Err(Error::InvalidInput("refine_tol must be smaller than descent_tol".into()));
        }
        if self.remesh_every == 0 || self.symmetrize_every == 0 || self.recenter_every == 0 {
            return Err(Error::InvalidInput("cadences must be positive".into()));
        }
        if self.max_iters_a == 0 || self.max_iters_b == 0 {
            return Err(Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }

    pub fn sizing(&self) -> Sizing {
        Sizing {
            edge: self.target_edge,
            grade_radius: self.grade_radius,
            max_edge: self.max_edge,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: EvolveConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    A,
    B,
}

/// One solver iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// F at the start of the iteration and after its accepted step.
    pub f_start: f64,
    pub f: f64,
    /// Gaussian-weighted residual RMS at the start of the iteration.
    pub residual_rms: f64,
    pub max_move: f64,
    pub step: f64,
    pub remeshed: bool,
    pub symmetrized: bool,
    pub recentered: bool,
    pub damping: Option<f64>,
}

/// Per-iteration history of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolveTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub final_f: f64,
    pub final_residual: f64,
    pub remesh_events: usize,
    pub symmetrize_events: usize,
    pub recenter_events: usize,
}

impl EvolveTrace {
    pub fn phase(&self, p: Phase) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.phase == p)
    }

    pub fn append(&mut self, other: EvolveTrace) {
        self.records.extend(other.records);
        self.converged = other.converged;
        self.final_f = other.final_f;
        self.final_residual = other.final_residual;
        self.remesh_events += other.remesh_events;
        self.symmetrize_events += other.symmetrize_events;
        self.recenter_events += other.recenter_events;
    }
}

/// Project boundary vertices radially onto `|x| = R`.
pub fn project_free_boundary<T: Real>(mesh: &TriMesh<T>, radius: T) -> Result<TriMesh<T>> {
    let mut out = mesh.clone();
    out.refresh_boundary();
    for v in 0..out.vertices.len() {
        if !out.boundary_flags[v] {
            continue;
        }
        let p = out.vertices[v];
        let r = p.norm();
        if r == T::zero() {
            return Err(Error::ProjectionUndefined(v));
        }
        if (r - radius).abs() > T::lit(0.1) * radius {
            return Err(Error::NotClipped {
                vertex: v,
                offset: (r - radius).as_f64(),
            });
        }
        if r != radius {
            out.vertices[v] = p * (radius / r);
        }
    }
    Ok(out)
}

/// Working state shared by both phases.
pub(crate) struct State<'a, T: Real> {
    pub mesh: TriMesh<T>,
    pub group: &'a SymmetryGroup<T>,
    pub orbits: Option<OrbitStructure>,
    pub conn: Connectivity,
    pub radius: T,
}

impl<'a, T: Real> State<'a, T> {
    pub fn new(mesh: &TriMesh<T>, group: &'a SymmetryGroup<T>, radius: T) -> Result<Self> {
        let mut mesh = mesh.clone();
        mesh.refresh_boundary();
        let mut s = State {
            conn: Connectivity::build(&mesh),
            mesh,
            group,
            orbits: None,
            radius,
        };
        s.rebuild()?;
        Ok(s)
    }

    /// Recompute adjacency and orbits after a connectivity change.
    pub fn rebuild(&mut self) -> Result<()> {
        self.mesh.refresh_boundary();
        self.conn = Connectivity::build(&self.mesh);
        self.orbits = if self.group.order() > 1 {
            Some(orbit_structure(&self.mesh, self.group, self.mesh.scale() * T::lit(1e-6))?)
        } else {
            None
        };
        Ok(())
    }

    pub fn symmetrize(&mut self) {
        if let Some(o) = &self.orbits {
            crate::equivariance::symmetrize_positions(&mut self.mesh.vertices, self.group, o);
            self.snap_boundary();
        }
    }

    pub fn snap_boundary(&mut self) {
        for v in 0..self.mesh.vertices.len() {
            if self.mesh.boundary_flags[v] {
                let p = self.mesh.vertices[v];
                let r = p.norm();
                if r > T::zero() {
                    self.mesh.vertices[v] = p * (self.radius / r);
                }
            }
        }
    }

    /// Unit conormal of each boundary vertex inside the sphere's tangent
    /// plane: perpendicular to the boundary curve and to the radius.
    pub fn boundary_conormals(&self) -> Vec<Option<Vec3<T>>> {
        let nv = self.mesh.vertices.len();
        let mut nb: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (e, ed) in self.conn.edges.iter().enumerate() {
            if self.conn.is_boundary_edge(e) {
                nb[ed[0]].push(ed[1]);
                nb[ed[1]].push(ed[0]);
            }
        }
        let normals = self.mesh.vertex_normals();
        (0..nv)
            .map(|v| {
                if !self.mesh.boundary_flags[v] || nb[v].len() != 2 {
                    return None;
                }
                let p = self.mesh.vertices[v];
                let tangent = self.mesh.vertices[nb[v][1]] - self.mesh.vertices[nb[v][0]];
                let c = p.cross(&tangent).normalized();
                if c.norm_sq() == T::zero() {
                    return None;
                }
                // orient along the surface normal side consistently
                Some(if c.dot(&normals[v]) < T::zero() { -c } else { c })
            })
            .collect()
    }

    pub fn write_checkpoint(&self, dir: &Path, tag: &str, trace: &EvolveTrace) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let mesh_path = dir.join(format!("{tag}.obj"));
        self.mesh.save(&mesh_path, None)?;
        let json = serde_json::to_string_pretty(trace)?;
        crate::lab::write_atomic(&dir.join(format!("{tag}.trace.json")), json.as_bytes())?;
        Ok(mesh_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_names() {
        let c = EvolveConfig::default();
        let j = serde_json::to_value(&c).unwrap();
        for k in [
            "R",
            "descent_tol",
            "refine_tol",
            "armijo_c",
            "step_init",
            "max_iters_A",
            "max_iters_B",
            "remesh_every",
            "symmetrize_every",
            "lm_damping_init",
        ] {
            assert!(j.get(k).is_some(), "missing {k}");
        }
        let back = EvolveConfig::from_json(&j.to_string()).unwrap();
        assert_eq!(back, c);
        assert!(EvolveConfig::from_json(r#"{"refine_tol": 0.5}"#).is_err());
        assert!(EvolveConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn radial_projection() {
        let m = TriMesh::new(
            vec![Vec3::new(8.1, 0.0, 0.0), Vec3::new(0.0, 8.0, 0.0), Vec3::new(0.0, 0.0, 7.95)],
            vec![[0, 1, 2]],
        );
        let p = project_free_boundary(&m, 8.0).unwrap();
        assert_eq!(p.vertices[0], Vec3::new(8.0, 0.0, 0.0));
        assert_eq!(p.vertices[1], Vec3::new(0.0, 8.0, 0.0));
    }
}
