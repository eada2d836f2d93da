use super::{EvolveConfig, EvolveTrace, Phase, State, TraceRecord};
use crate::equivariance::SymmetryGroup;
use crate::error::{Error, Result};
use crate::gaussmetric::{
    discrete_gauss_area, gauss_area_gradient, variational_residual_from, weighted_dual_areas,
};
use crate::scalar::Real;
use crate::trimesh::{remesh::remesh_with, topology, RemeshParams, TriMesh};
use crate::vec3::Vec3;

/// Phase A: normal-projected gradient descent on F with Armijo backtracking.
///
/// Interior vertices move along their normal by `-⟨∂F/∂x_v, ν_v⟩ / a_v`,
/// a diagonal preconditioning by the Gaussian-weighted dual area; boundary
/// vertices move along their conormal inside the clipping sphere and are
/// projected back onto it after every step.
pub fn descend<T: Real>(
    mesh: &TriMesh<T>,
    group: &SymmetryGroup<T>,
    config: &EvolveConfig,
) -> Result<(TriMesh<T>, EvolveTrace)> {
    config.validate()?;
    let radius = T::lit(config.radius);
    let seed_topology = topology(mesh)?;
    let mut st = State::new(&super::project_free_boundary(mesh, radius)?, group, radius)?;
    st.symmetrize();
    let mut trace = EvolveTrace::default();
    let mut f = discrete_gauss_area(&st.mesh).total;
    for it in 1..=config.max_iters_a {
        let grad = gauss_area_gradient(&st.mesh);
        let res = variational_residual_from(&st.mesh, &grad);
        let rms = res.rms_weighted.as_f64();
        if rms < config.descent_tol {
            trace.converged = true;
            break;
        }
        let dir = descent_direction(&st, &grad);
        let slope: T = grad.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
        let max_d = dir.iter().fold(T::zero(), |m, d| m.max(d.norm()));
        if !(slope < T::zero()) || max_d == T::zero() {
            trace.converged = rms < config.descent_tol;
            break;
        }
        let mut alpha = T::lit(config.step_init) / max_d;
        let c = T::lit(config.armijo_c);
        let start = st.mesh.vertices.clone();
        let mut accepted = None;
        for _ in 0..config.max_halvings {
            for v in 0..start.len() {
                st.mesh.vertices[v] = start[v] + dir[v] * alpha;
            }
            st.snap_boundary();
            let trial = discrete_gauss_area(&st.mesh).total;
            if trial < f && trial <= f + c * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        let Some(f_new) = accepted else {
            st.mesh.vertices = start;
            trace.final_f = f.as_f64();
            trace.final_residual = rms;
            return Err(Error::Stalled {
                iteration: it,
                trace: Box::new(trace),
            });
        };
        let mut rec = TraceRecord {
            iteration: it,
            phase: Phase::A,
            f_start: f.as_f64(),
            f: f_new.as_f64(),
            residual_rms: rms,
            max_move: (max_d * alpha).as_f64(),
            step: alpha.as_f64(),
            remeshed: false,
            symmetrized: false,
            recentered: false,
            damping: None,
        };
        f = f_new;
        if it % config.symmetrize_every == 0 {
            st.symmetrize();
            rec.symmetrized = true;
            trace.symmetrize_events += 1;
            f = discrete_gauss_area(&st.mesh).total;
        }
        if config.recenter && it % config.recenter_every == 0 {
            if recenter_state(&mut st, radius)? {
                rec.recentered = true;
                trace.recenter_events += 1;
            }
            f = discrete_gauss_area(&st.mesh).total;
        }
        if it % config.remesh_every == 0 {
            remesh_state(&mut st, config)?;
            let now = topology(&st.mesh)?;
            if now != seed_topology {
                return Err(Error::TopologyDrift {
                    before: seed_topology.to_string(),
                    after: now.to_string(),
                });
            }
            rec.remeshed = true;
            trace.remesh_events += 1;
            f = discrete_gauss_area(&st.mesh).total;
        }
        trace.records.push(rec);
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.checkpoint_dir) {
            if it % every == 0 {
                st.write_checkpoint(dir, &format!("phase_a_{it:05}"), &trace)?;
            }
        }
    }
    let res = variational_residual_from(&st.mesh, &gauss_area_gradient(&st.mesh));
    trace.final_f = f.as_f64();
    trace.final_residual = res.rms_weighted.as_f64();
    trace.converged = trace.final_residual < config.descent_tol;
    Ok((st.mesh, trace))
}

/// Preconditioned descent direction, normal for interior vertices and
/// conormal (inside the clipping sphere) for boundary vertices.
pub(crate) fn descent_direction<T: Real>(st: &State<'_, T>, grad: &[Vec3<T>]) -> Vec<Vec3<T>> {
    let normals = st.mesh.vertex_normals();
    let conormals = st.boundary_conormals();
    let area = weighted_dual_areas(&st.mesh);
    (0..st.mesh.vertices.len())
        .map(|v| {
            if !(area[v] > T::zero()) {
                return Vec3::zero();
            }
            let n = if st.mesh.boundary_flags[v] {
                match conormals[v] {
                    Some(c) => c,
                    None => return Vec3::zero(),
                }
            } else {
                normals[v]
            };
            n * (-grad[v].dot(&n) / area[v])
        })
        .collect()
}

pub(crate) fn remesh_state<T: Real>(st: &mut State<'_, T>, config: &EvolveConfig) -> Result<()> {
    let mut params = RemeshParams::new(config.sizing());
    params.boundary_radius = Some(config.radius);
    params.max_passes = 3;
    let g = if st.group.order() > 1 { Some(st.group) } else { None };
    let (m, _) = remesh_with(&st.mesh, &params, g)?;
    st.mesh = m;
    st.rebuild()?;
    st.symmetrize();
    Ok(())
}

/// Cut-off profile: 1 inside `R/2`, smoothly 0 at `R`.
fn cutoff<T: Real>(r: T, radius: T) -> T {
    let half = radius * T::lit(0.5);
    if r <= half {
        return T::one();
    }
    if r >= radius {
        return T::zero();
    }
    let s = (r - half) / half;
    T::one() - s * s * (T::lit(3.0) - T::lit(2.0) * s)
}

fn dilate<T: Real>(base: &[Vec3<T>], eps: T, radius: T) -> Vec<Vec3<T>> {
    base.iter().map(|p| *p * (T::one() + eps * cutoff(p.norm(), radius))).collect()
}

/// Maximise F over `x ↦ x + ε x η(|x|)` with `η` the cut-off profile.
/// Returns the chosen `ε`; the mesh is left unchanged when no increase is
/// found.
pub fn recenter_dilation<T: Real>(mesh: &mut TriMesh<T>, radius: T) -> T {
    let base = mesh.vertices.clone();
    let field: Vec<Vec3<T>> = base.iter().map(|p| *p * cutoff(p.norm(), radius)).collect();
    let f0 = discrete_gauss_area(mesh).total;
    let deriv = |m: &mut TriMesh<T>, eps: T| -> T {
        m.vertices = dilate(&base, eps, radius);
        let g = gauss_area_gradient(m);
        g.iter().zip(&field).map(|(a, b)| a.dot(b)).sum()
    };
    let h = T::lit(1e-4);
    let mut eps = T::zero();
    let mut best = (T::zero(), f0);
    for _ in 0..8 {
        let d1 = deriv(mesh, eps);
        let d2 = (deriv(mesh, eps + h) - deriv(mesh, eps - h)) / (h + h);
        let mut step = if d2 < T::zero() { -d1 / d2 } else { d1.signum() * T::lit(0.01) };
        step = step.max(T::lit(-0.05)).min(T::lit(0.05));
        let mut improved = false;
        for _ in 0..12 {
            mesh.vertices = dilate(&base, eps + step, radius);
            let f = discrete_gauss_area(mesh).total;
            if f > best.1 {
                best = (eps + step, f);
                improved = true;
                break;
            }
            step = step * T::lit(0.5);
        }
        if !improved {
            break;
        }
        eps = best.0;
        if step.abs() < T::lit(1e-7) {
            break;
        }
    }
    mesh.vertices = dilate(&base, best.0, radius);
    best.0
}

fn recenter_state<T: Real>(st: &mut State<'_, T>, radius: T) -> Result<bool> {
    let eps = recenter_dilation(&mut st.mesh, radius);
    st.snap_boundary();
    Ok(eps != T::zero())
}
