use nalgebra::{DMatrix, DVector};

use super::{EvolveConfig, EvolveTrace, Phase, State, TraceRecord};
use crate::equivariance::SymmetryGroup;
use crate::error::{Error, Result};
use crate::gaussmetric::{
    degenerate_threshold, discrete_gauss_area, gauss_area_gradient, triangle_gauss_gradient,
    variational_residual_from,
};
use crate::scalar::Real;
use crate::trimesh::{topology, TriMesh};
use crate::vec3::Vec3;

const MAX_REMESHES: usize = 10;

/// One scalar unknown: the displacement of an orbit along a fixed direction.
struct Dof<T> {
    rep: usize,
    dir: Vec3<T>,
    /// Orbit size times the representative's weighted dual area.
    weight: T,
    /// Weighted dual area at assembly, frozen for the iteration.
    area: T,
    /// Largest accepted displacement: a fraction of the shortest incident edge.
    reach: T,
}

/// Phase B: damped Gauss–Newton on the normal residual
/// `r_u = ⟨∂F/∂x_u, d_u⟩ / a_u` over orbit representatives.
///
/// Each unknown moves a whole orbit along the representative's normal
/// (conormal on the boundary), averaged over its stabilizer so that fixed
/// points keep their symmetry. The Jacobian is assembled column by column
/// from forward differences evaluated only on the affected 1-rings.
pub fn refine_critical<T: Real>(
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
    let mut lambda = T::lit(config.lm_damping_init);
    let mut remeshes = 0usize;
    let lambda_cap = T::lit(config.lm_damping_init * 1e6);
    let lambda_floor = T::lit(config.lm_damping_init * 1e-6);
    let tol = degenerate_threshold(&st.mesh);
    for it in 1..=config.max_iters_b {
        let grad = gauss_area_gradient(&st.mesh);
        let res = variational_residual_from(&st.mesh, &grad);
        let rms = res.rms_weighted;
        let f = discrete_gauss_area(&st.mesh).total;
        if rms < T::lit(config.refine_tol) {
            trace.converged = true;
            break;
        }
        let dofs = build_dofs(&st);
        if dofs.is_empty() {
            break;
        }
        let rhs0 = residuals(&st, &dofs, tol);
        let rows = jacobian(&mut st, &dofs, &rhs0, tol);
        let n = dofs.len();
        let mut jtj = DMatrix::<f64>::zeros(n, n);
        let mut jtr = DVector::<f64>::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            for &(i, a) in row {
                jtr[i] += a.as_f64() * rhs0[r].as_f64();
                for &(j, b) in row {
                    jtj[(i, j)] += a.as_f64() * b.as_f64();
                }
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)]).collect();
        let dmax = diag.iter().fold(0.0f64, |m, &d| m.max(d));
        let start = st.mesh.vertices.clone();
        let mut accepted = None;
        let mut folded = false;
        while lambda <= lambda_cap {
            let mut m = jtj.clone();
            for i in 0..n {
                m[(i, i)] += lambda.as_f64() * diag[i].max(dmax * 1e-12);
            }
            if let Some(ch) = m.cholesky() {
                let mut delta: Vec<T> = ch.solve(&jtr).iter().map(|x| T::lit(-x)).collect();
                // shrink the whole step until every orbit stays within reach
                let over = dofs
                    .iter()
                    .zip(&delta)
                    .fold(T::one(), |m, (d, x)| m.max(x.abs() / d.reach));
                for d in delta.iter_mut() {
                    *d = *d / over;
                }
                apply_step(&mut st, &dofs, &delta, &start);
                let trial = full_rms(&st.mesh);
                let flat = no_folds(&st.mesh, &start);
                log::debug!(
                    "phase B {it}: damping {:.3e} rms {:.4e} -> {:.4e}{}",
                    lambda.as_f64(),
                    rms.as_f64(),
                    trial.as_f64(),
                    if flat { "" } else { " (folds)" }
                );
                if trial < rms {
                    if flat {
                        let max_move = delta.iter().fold(T::zero(), |m, d| m.max(d.abs()));
                        accepted = Some(max_move);
                        break;
                    }
                    folded = true;
                }
                st.mesh.vertices.clone_from(&start);
            }
            lambda = lambda * T::lit(4.0);
        }
        if accepted.is_none() && folded && remeshes < MAX_REMESHES {
            // the step exists but the triangulation cannot carry it
            remeshes += 1;
            super::descent::remesh_state(&mut st, config)?;
            let now = topology(&st.mesh)?;
            if now != seed_topology {
                return Err(Error::TopologyDrift {
                    before: seed_topology.to_string(),
                    after: now.to_string(),
                });
            }
            trace.remesh_events += 1;
            trace.records.push(TraceRecord {
                iteration: it,
                phase: Phase::B,
                f_start: f.as_f64(),
                f: discrete_gauss_area(&st.mesh).total.as_f64(),
                residual_rms: rms.as_f64(),
                max_move: 0.0,
                step: 0.0,
                remeshed: true,
                symmetrized: true,
                recentered: false,
                damping: Some(lambda.as_f64()),
            });
            lambda = T::lit(config.lm_damping_init);
            continue;
        }
        let Some(max_move) = accepted else {
            trace.final_f = f.as_f64();
            trace.final_residual = rms.as_f64();
            return Err(Error::RefineStalled {
                iteration: it,
                damping: lambda.as_f64(),
                trace: Box::new(trace),
            });
        };
        st.symmetrize();
        let f_new = discrete_gauss_area(&st.mesh).total;
        trace.symmetrize_events += 1;
        trace.records.push(TraceRecord {
            iteration: it,
            phase: Phase::B,
            f_start: f.as_f64(),
            f: f_new.as_f64(),
            residual_rms: rms.as_f64(),
            max_move: max_move.as_f64(),
            step: 1.0,
            remeshed: false,
            symmetrized: true,
            recentered: false,
            damping: Some(lambda.as_f64()),
        });
        lambda = (lambda / T::lit(3.0)).max(lambda_floor);
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.checkpoint_dir) {
            if it % every == 0 {
                st.write_checkpoint(dir, &format!("phase_b_{it:05}"), &trace)?;
            }
        }
    }
    let res = variational_residual_from(&st.mesh, &gauss_area_gradient(&st.mesh));
    trace.final_f = discrete_gauss_area(&st.mesh).total.as_f64();
    trace.final_residual = res.rms_weighted.as_f64();
    trace.converged = trace.final_residual < config.refine_tol;
    let now = topology(&st.mesh)?;
    if now != seed_topology {
        return Err(Error::TopologyDrift {
            before: seed_topology.to_string(),
            after: now.to_string(),
        });
    }
    Ok((st.mesh, trace))
}

fn build_dofs<T: Real>(st: &State<'_, T>) -> Vec<Dof<T>> {
    let normals = st.mesh.vertex_normals();
    let conormals = st.boundary_conormals();
    let areas = crate::gaussmetric::weighted_dual_areas(&st.mesh);
    let reps: Vec<(usize, usize)> = match &st.orbits {
        Some(o) => o
            .representatives
            .iter()
            .enumerate()
            .map(|(k, &r)| (r, o.orbit_size(k)))
            .collect(),
        None => (0..st.mesh.vertices.len()).map(|v| (v, 1)).collect(),
    };
    let mut out = Vec::with_capacity(reps.len());
    for (rep, size) in reps {
        let base = if st.mesh.boundary_flags[rep] {
            match conormals[rep] {
                Some(c) => c,
                None => continue,
            }
        } else {
            normals[rep]
        };
        // average over the stabilizer so the move respects fixed points
        let dir = match &st.orbits {
            Some(o) => {
                let mut acc = Vec3::zero();
                let mut k = 0usize;
                for (g, row) in o.perm.iter().enumerate() {
                    if row[rep] == rep {
                        acc += st.group.elements[g].apply(&base);
                        k += 1;
                    }
                }
                acc / T::from_usize_lossy(k.max(1))
            }
            None => base,
        };
        if dir.norm() < T::lit(1e-3) || !(areas[rep] > T::zero()) {
            continue;
        }
        let shortest = st
            .conn
            .vertex_neighbors(&st.mesh, rep)
            .into_iter()
            .map(|u| (st.mesh.vertices[u] - st.mesh.vertices[rep]).norm())
            .fold(T::infinity(), |m, l| m.min(l));
        out.push(Dof {
            rep,
            dir: dir.normalized(),
            weight: T::from_usize_lossy(size) * areas[rep],
            area: areas[rep],
            reach: shortest * T::lit(0.5),
        });
    }
    out
}

/// Gradient of F at vertex `v` from its 1-ring.
fn local_gradient<T: Real>(st: &State<'_, T>, v: usize, tol: T) -> Vec3<T> {
    let mut g = Vec3::zero();
    for &t in st.conn.vertex_triangles(v) {
        let tri = st.mesh.triangles[t];
        let (_, gt) = triangle_gauss_gradient(&st.mesh.triangle_points(t), tol);
        let k = tri.iter().position(|&x| x == v).expect("vertex in its triangle");
        g += gt[k];
    }
    g
}

fn full_rms<T: Real>(mesh: &TriMesh<T>) -> T {
    variational_residual_from(mesh, &gauss_area_gradient(mesh)).rms_weighted
}

/// True when no triangle has turned over or collapsed relative to `before`.
fn no_folds<T: Real>(mesh: &TriMesh<T>, before: &[Vec3<T>]) -> bool {
    mesh.triangles.iter().all(|t| {
        let [a, b, c] = *t;
        let n0 = (before[b] - before[a]).cross(&(before[c] - before[a]));
        let n1 = (mesh.vertices[b] - mesh.vertices[a]).cross(&(mesh.vertices[c] - mesh.vertices[a]));
        n0.dot(&n1) > T::lit(0.25) * n0.norm() * n0.norm()
    })
}

fn residual_at<T: Real>(st: &State<'_, T>, dof: &Dof<T>, tol: T) -> T {
    let g = local_gradient(st, dof.rep, tol);
    // sqrt(|orbit| a0) <g, d> / a0 with a0 frozen at assembly
    dof.weight.sqrt() * g.dot(&dof.dir) / dof.area
}

fn residuals<T: Real>(st: &State<'_, T>, dofs: &[Dof<T>], tol: T) -> Vec<T> {
    dofs.iter().map(|d| residual_at(st, d, tol)).collect()
}

fn orbit_members<T: Real>(st: &State<'_, T>, rep: usize) -> Vec<(usize, usize)> {
    match &st.orbits {
        Some(o) => {
            let id = o.orbit_of[rep];
            let mut out: Vec<(usize, usize)> = Vec::new();
            for (g, row) in o.perm.iter().enumerate() {
                let v = row[rep];
                if !out.iter().any(|&(u, _)| u == v) {
                    out.push((v, g));
                }
            }
            debug_assert!(out.iter().all(|&(v, _)| o.orbit_of[v] == id));
            out
        }
        None => vec![(rep, 0)],
    }
}

fn displace<T: Real>(st: &mut State<'_, T>, dof: &Dof<T>, amount: T) {
    for (v, g) in orbit_members(st, dof.rep) {
        let d = st.group.elements[g].apply(&dof.dir);
        st.mesh.vertices[v] += d * amount;
    }
}

/// Sparse Jacobian of the residual vector: rows hold `(column, value)`.
#[allow(clippy::type_complexity)]
fn jacobian<T: Real>(st: &mut State<'_, T>, dofs: &[Dof<T>], r0: &[T], tol: T) -> Vec<Vec<(usize, T)>> {
    let n = dofs.len();
    let mut row_of_rep = vec![usize::MAX; st.mesh.vertices.len()];
    for (i, d) in dofs.iter().enumerate() {
        row_of_rep[d.rep] = i;
    }
    let rep_of = |st: &State<'_, T>, v: usize| -> usize {
        match &st.orbits {
            Some(o) => o.representatives[o.orbit_of[v]],
            None => v,
        }
    };
    let h = st.mesh.scale() * T::lit(1e-7);
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (j, dof) in dofs.iter().enumerate() {
        let mut affected: Vec<usize> = st
            .conn
            .vertex_neighbors(&st.mesh, dof.rep)
            .into_iter()
            .chain(std::iter::once(dof.rep))
            .map(|v| rep_of(st, v))
            .filter(|&r| row_of_rep[r] != usize::MAX)
            .map(|r| row_of_rep[r])
            .collect();
        affected.sort_unstable();
        affected.dedup();
        let saved: Vec<(usize, Vec3<T>)> = orbit_members(st, dof.rep)
            .into_iter()
            .map(|(v, _)| (v, st.mesh.vertices[v]))
            .collect();
        displace(st, dof, h);
        for &i in &affected {
            let r = residual_at(st, &dofs[i], tol);
            let val = (r - r0[i]) / h;
            if val != T::zero() {
                rows[i].push((j, val));
            }
        }
        for (v, p) in saved {
            st.mesh.vertices[v] = p;
        }
    }
    rows
}

fn apply_step<T: Real>(st: &mut State<'_, T>, dofs: &[Dof<T>], delta: &[T], start: &[Vec3<T>]) {
    st.mesh.vertices.clone_from(&start.to_vec());
    for (dof, &d) in dofs.iter().zip(delta) {
        displace(st, dof, d);
    }
    st.snap_boundary();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::dihedral_group;
    use crate::trimesh::primitives;

    #[test]
    fn inflated_sphere_returns_to_radius_two() {
        let m = primitives::icosphere::<f64>(2.2, 3);
        let g = dihedral_group(5).unwrap();
        let cfg = EvolveConfig::default();
        let (out, trace) = refine_critical(&m, &g, &cfg).unwrap();
        assert!(trace.converged, "{:?}", trace.final_residual);
        let mean = out.vertices.iter().map(|p| p.norm()).sum::<f64>() / out.vertices.len() as f64;
        assert!((mean - 2.0).abs() < 0.02, "{mean}");
    }
}
