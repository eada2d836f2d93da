//! Gaussian weight, closed-form reference areas, and the discrete Gaussian
//! area functional with its exact gradient and the shrinker residual.
//!
//! Throughout, the Gaussian area of a surface is
//! `F(Σ) = (1/4π) ∫_Σ exp(-|x|²/4) dA`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{erf, erfc, Real};
use crate::trimesh::TriMesh;
use crate::vec3::Vec3;

/// Relative area below which a triangle counts as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

#[inline]
fn w<T: Real>(p: &Vec3<T>) -> T {
    (-p.norm_sq() / T::lit(4.0)).exp()
}

#[inline]
fn inv_four_pi<T: Real>() -> T {
    T::one() / (T::lit(4.0) * T::PI())
}

/// Gaussian weight `exp(-|x|²/4)`.
pub fn weight<T: Real>(point: Vec3<T>) -> Result<T> {
    if !point.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite point {point:?}")));
    }
    Ok(w(&point))
}

fn positive<T: Real>(name: &str, r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {r}")))
    }
}

/// Gaussian area of the round sphere of radius `r` about the origin:
/// `r² exp(-r²/4)`.
pub fn sphere_gauss_area<T: Real>(radius: T) -> Result<T> {
    positive("radius", radius)?;
    Ok(radius * radius * (-radius * radius / T::lit(4.0)).exp())
}

/// Gaussian area of the infinite cylinder of radius `r` about a line
/// through the origin: `√π r exp(-r²/4)`.
pub fn cylinder_gauss_area<T: Real>(radius: T) -> Result<T> {
    positive("radius", radius)?;
    Ok(T::PI().sqrt() * radius * (-radius * radius / T::lit(4.0)).exp())
}

/// Gaussian area of the cylinder of radius `r` restricted to the ball of
/// radius `ball`: `√π r exp(-r²/4) erf(z₀/2)` with `z₀ = √(ball² - r²)`.
pub fn clipped_cylinder_gauss_area<T: Real>(radius: T, ball: T) -> Result<T> {
    positive("radius", radius)?;
    positive("ball", ball)?;
    if ball <= radius {
        return Ok(T::zero());
    }
    let z0 = (ball * ball - radius * radius).sqrt();
    Ok(cylinder_gauss_area(radius)? * erf(z0 / T::lit(2.0)))
}

/// Gaussian area of a flat disc of radius `R` centred at the origin:
/// `1 - exp(-R²/4)`.
pub fn disc_gauss_area<T: Real>(radius: T) -> Result<T> {
    positive("radius", radius)?;
    Ok(T::one() - (-radius * radius / T::lit(4.0)).exp())
}

/// Gaussian measure `(4π)^{-1/2} ∫_s^∞ exp(-t²/4) dt` of the half-space
/// `{x₃ > s}`, equal to `erfc(s/2)/2`.
pub fn halfspace_gauss_measure<T: Real>(offset: T) -> T {
    erfc(offset / T::lit(2.0)) / T::lit(2.0)
}

/// Discrete Gaussian area and its per-triangle contributions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedAreaResult<T> {
    pub total: T,
    pub per_triangle: Vec<T>,
    /// Triangles below the degeneracy threshold; they contribute zero.
    pub degenerate: Vec<usize>,
}

/// Area threshold for degenerate triangles of `mesh`.
pub fn degenerate_threshold<T: Real>(mesh: &TriMesh<T>) -> T {
    let s = mesh.scale();
    T::lit(DEGENERATE_AREA) * s * s
}

/// Gaussian area of one triangle, or `None` if degenerate.
#[inline]
pub fn triangle_gauss_area<T: Real>(p: &[Vec3<T>; 3], area_tol: T) -> Option<T> {
    let area = (p[1] - p[0]).cross(&(p[2] - p[0])).norm() * T::lit(0.5);
    if !(area >= area_tol) {
        return None;
    }
    let half = T::lit(0.5);
    let wsum = w(&((p[0] + p[1]) * half)) + w(&((p[1] + p[2]) * half)) + w(&((p[2] + p[0]) * half));
    Some(inv_four_pi::<T>() * area * wsum / T::lit(3.0))
}

/// Gaussian area of one triangle and its gradient with respect to each of
/// the three corners. Degenerate triangles give zero for both.
pub fn triangle_gauss_gradient<T: Real>(p: &[Vec3<T>; 3], area_tol: T) -> (T, [Vec3<T>; 3]) {
    let n2 = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let len = n2.norm();
    let area = len * T::lit(0.5);
    if !(area >= area_tol) {
        return (T::zero(), [Vec3::zero(); 3]);
    }
    let nhat = n2 / len;
    let half = T::lit(0.5);
    let third = T::one() / T::lit(3.0);
    let quarter = T::lit(0.25);
    // midpoints m[k] of edge (k, k+1)
    let m = [(p[0] + p[1]) * half, (p[1] + p[2]) * half, (p[2] + p[0]) * half];
    let wm = [w(&m[0]), w(&m[1]), w(&m[2])];
    let wbar = (wm[0] + wm[1] + wm[2]) * third;
    let c = inv_four_pi::<T>();
    let mut g = [Vec3::zero(); 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let grad_area = nhat.cross(&(p[k] - p[j])) * half;
        // vertex i touches midpoints of edges (i, j) and (k, i)
        let grad_w = (m[i] * wm[i] + m[k] * wm[k]) * (-quarter * third);
        g[i] = (grad_area * wbar + grad_w * area) * c;
    }
    (c * area * wbar, g)
}

/// Discrete Gaussian area with the three-point edge-midpoint rule.
pub fn discrete_gauss_area<T: Real>(mesh: &TriMesh<T>) -> WeightedAreaResult<T> {
    let tol = degenerate_threshold(mesh);
    let mut per_triangle = Vec::with_capacity(mesh.triangles.len());
    let mut degenerate = Vec::new();
    for t in 0..mesh.triangles.len() {
        match triangle_gauss_area(&mesh.triangle_points(t), tol) {
            Some(a) => per_triangle.push(a),
            None => {
                per_triangle.push(T::zero());
                degenerate.push(t);
            }
        }
    }
    WeightedAreaResult {
        total: pairwise_sum(&per_triangle),
        per_triangle,
        degenerate,
    }
}

/// Pairwise (tree) summation; deterministic and accurate for long lists.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= 16 {
        return xs.iter().fold(T::zero(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Exact gradient of [`discrete_gauss_area`] with respect to every vertex.
pub fn gauss_area_gradient<T: Real>(mesh: &TriMesh<T>) -> Vec<Vec3<T>> {
    let tol = degenerate_threshold(mesh);
    let mut g = vec![Vec3::zero(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (_, gt) = triangle_gauss_gradient(&mesh.triangle_points(t), tol);
        for k in 0..3 {
            g[tri[k]] += gt[k];
        }
    }
    g
}

/// Gaussian-weighted barycentric dual area `a_v = Σ_T A_T W̄_T / 3` where
/// `W̄_T` is the midpoint-averaged weight of triangle `T`.
pub fn weighted_dual_areas<T: Real>(mesh: &TriMesh<T>) -> Vec<T> {
    let tol = degenerate_threshold(mesh);
    let four_pi = T::lit(4.0) * T::PI();
    let mut a = vec![T::zero(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if let Some(f) = triangle_gauss_area(&mesh.triangle_points(t), tol) {
            for &v in tri {
                a[v] = a[v] + f * four_pi / T::lit(3.0);
            }
        }
    }
    a
}

/// Per-vertex residual with boundary and degenerate vertices absent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualField<T> {
    pub per_vertex: Vec<Option<T>>,
    /// Gaussian-weighted dual area of each vertex, the RMS weights.
    pub weights: Vec<T>,
    pub rms_weighted: T,
    /// Interior vertices whose 1-ring was too degenerate to evaluate.
    pub degenerate_vertices: Vec<usize>,
}

impl<T: Real> ResidualField<T> {
    fn from_values(per_vertex: Vec<Option<T>>, weights: Vec<T>, degenerate_vertices: Vec<usize>) -> Self {
        let rms_weighted = weighted_rms(&per_vertex, &weights);
        ResidualField {
            per_vertex,
            weights,
            rms_weighted,
            degenerate_vertices,
        }
    }

    /// Largest absolute residual over present vertices.
    pub fn max_abs(&self) -> T {
        self.per_vertex.iter().flatten().fold(T::zero(), |m, r| m.max(r.abs()))
    }
}

/// `sqrt(Σ w_v r_v² / Σ w_v)` over the present entries.
pub fn weighted_rms<T: Real>(values: &[Option<T>], weights: &[T]) -> T {
    let (mut num, mut den) = (T::zero(), T::zero());
    for (r, &wv) in values.iter().zip(weights) {
        if let Some(r) = r {
            num = num + wv * *r * *r;
            den = den + wv;
        }
    }
    if den > T::zero() {
        (num / den).sqrt()
    } else {
        T::zero()
    }
}

/// Pointwise shrinker residual `H - ½⟨x,ν⟩` at interior vertices.
///
/// `H` is the magnitude of the cotangent mean-curvature vector (the
/// gradient of Euclidean area divided by the mixed Voronoi area), signed by
/// its agreement with the area-weighted vertex normal `ν`. With outward
/// normals a sphere of radius `r` has `H = 2/r`.
pub fn shrinker_residual<T: Real>(mesh: &TriMesh<T>) -> ResidualField<T> {
    let nv = mesh.vertices.len();
    let tol = degenerate_threshold(mesh);
    let normals = mesh.vertex_normals();
    let mut area_grad = vec![Vec3::zero(); nv];
    let mut dual = vec![T::zero(); nv];
    let half = T::lit(0.5);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        let n2 = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let len = n2.norm();
        let area = len * half;
        if !(area >= tol) {
            continue;
        }
        let nhat = n2 / len;
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            area_grad[tri[i]] += nhat.cross(&(p[k] - p[j])) * half;
        }
        for (i, a) in mixed_areas(&p, area).into_iter().enumerate() {
            dual[tri[i]] = dual[tri[i]] + a;
        }
    }
    let weights = weighted_dual_areas(mesh);
    let mut per_vertex = vec![None; nv];
    let mut degenerate_vertices = Vec::new();
    for v in 0..nv {
        if mesh.boundary_flags.get(v).copied().unwrap_or(false) {
            continue;
        }
        if !(dual[v] >= tol) || normals[v].norm_sq() == T::zero() {
            degenerate_vertices.push(v);
            continue;
        }
        let hv = area_grad[v] / dual[v];
        let h = if hv.dot(&normals[v]) >= T::zero() { hv.norm() } else { -hv.norm() };
        per_vertex[v] = Some(h - half * mesh.vertices[v].dot(&normals[v]));
    }
    ResidualField::from_values(per_vertex, weights, degenerate_vertices)
}

/// Residual of the discrete Euler–Lagrange equation,
/// `r_v = 4π ⟨∂F/∂x_v, ν_v⟩ / a_v` with `a_v` the Gaussian-weighted mixed
/// Voronoi area, at interior vertices.
///
/// It approximates `H - ½⟨x,ν⟩` and vanishes exactly at critical points of
/// [`discrete_gauss_area`], which makes it the solver's stopping measure.
pub fn variational_residual<T: Real>(mesh: &TriMesh<T>) -> ResidualField<T> {
    let grad = gauss_area_gradient(mesh);
    variational_residual_from(mesh, &grad)
}

/// [`variational_residual`] with a precomputed gradient.
pub fn variational_residual_from<T: Real>(mesh: &TriMesh<T>, grad: &[Vec3<T>]) -> ResidualField<T> {
    let normals = mesh.vertex_normals();
    let weights = weighted_dual_areas(mesh);
    let voronoi = weighted_voronoi_areas(mesh);
    let four_pi = T::lit(4.0) * T::PI();
    let mut per_vertex = vec![None; mesh.vertices.len()];
    let mut degenerate_vertices = Vec::new();
    for v in 0..mesh.vertices.len() {
        if mesh.boundary_flags.get(v).copied().unwrap_or(false) {
            continue;
        }
        if !(voronoi[v] > T::zero()) || normals[v].norm_sq() == T::zero() {
            degenerate_vertices.push(v);
            continue;
        }
        per_vertex[v] = Some(four_pi * grad[v].dot(&normals[v]) / voronoi[v]);
    }
    ResidualField::from_values(per_vertex, weights, degenerate_vertices)
}

/// Gaussian-weighted mixed Voronoi areas `Σ_T A_{T,v} W̄_T`.
fn weighted_voronoi_areas<T: Real>(mesh: &TriMesh<T>) -> Vec<T> {
    let tol = degenerate_threshold(mesh);
    let four_pi = T::lit(4.0) * T::PI();
    let mut a = vec![T::zero(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        if let Some(f) = triangle_gauss_area(&p, tol) {
            let area = mesh.triangle_area(t);
            let wbar = f * four_pi / area;
            for (i, m) in mixed_areas(&p, area).into_iter().enumerate() {
                a[tri[i]] = a[tri[i]] + m * wbar;
            }
        }
    }
    a
}

/// Mixed Voronoi areas of the three corners of a triangle.
fn mixed_areas<T: Real>(p: &[Vec3<T>; 3], area: T) -> [T; 3] {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let dots = [
        -(e[1].dot(&e[2])), // angle at 0 between edges to 1 and 2
        -(e[2].dot(&e[0])),
        -(e[0].dot(&e[1])),
    ];
    if dots.iter().any(|&d| d < T::zero()) {
        let mut out = [area / T::lit(4.0); 3];
        for i in 0..3 {
            if dots[i] < T::zero() {
                out[i] = area / T::lit(2.0);
            }
        }
        return out;
    }
    // cot of the angle at corner i = dot_i / (2 area)
    let cot = |i: usize| dots[i] / (T::lit(2.0) * area);
    let l2 = [e[0].norm_sq(), e[1].norm_sq(), e[2].norm_sq()];
    let mut out = [T::zero(); 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // edges at corner i: to j (opposite corner k, length² l2[k]) and to k (opposite j)
        out[i] = (l2[k] * cot(k) + l2[j] * cot(j)) / T::lit(8.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::primitives;

    #[test]
    fn weight_values() {
        assert_eq!(weight(Vec3::new(0.0, 0.0, 0.0)).unwrap(), 1.0);
        assert!((weight(Vec3::new(2.0, 0.0, 0.0)).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let s = 2f64.sqrt() * 2.0;
        assert!((weight(Vec3::new(2.0, 2.0, s)).unwrap() - (-4f64).exp()).abs() < 1e-15);
        assert!(weight(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn closed_forms() {
        assert!((sphere_gauss_area(2.0).unwrap() - 4.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(sphere_gauss_area(0.0f64).is_err());
        assert!(cylinder_gauss_area(2f64.sqrt()).unwrap() > sphere_gauss_area(2.0).unwrap());
        assert_eq!(halfspace_gauss_measure(0.0f64), 0.5);
        for s in [0.3, 1.0, 2.5, 7.0] {
            let sum = halfspace_gauss_measure(s) + halfspace_gauss_measure(-s);
            assert!((sum - 1.0f64).abs() < 1e-12);
        }
    }

    #[test]
    fn far_triangle_is_negligible() {
        let m = TriMesh::new(
            vec![Vec3::new(20.0, 0.0, 0.0), Vec3::new(21.0, 0.0, 0.0), Vec3::new(20.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        assert!(discrete_gauss_area(&m).total < 1e-40);
    }

    #[test]
    fn degenerate_triangle_flagged() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 1, 3]],
        );
        let r = discrete_gauss_area(&m);
        assert_eq!(r.degenerate, vec![0]);
        assert_eq!(r.per_triangle[0], 0.0);
        assert_eq!(gauss_area_gradient(&m)[2], Vec3::zero());
    }

    #[test]
    fn total_matches_sum() {
        let m = primitives::icosphere::<f64>(1.7, 3);
        let r = discrete_gauss_area(&m);
        let s: f64 = r.per_triangle.iter().sum();
        assert!((r.total - s).abs() <= 1e-12 * r.total);
        assert!(r.per_triangle.iter().all(|&a| a >= 0.0 && a.is_finite()));
    }

    #[test]
    fn sphere_residual_sign() {
        // radius 1: H = 2, ½⟨x,ν⟩ = ½
        let m = primitives::icosphere::<f64>(1.0, 4);
        let r = shrinker_residual(&m);
        for v in r.per_vertex.iter().flatten() {
            assert!((v - 1.5).abs() < 0.02, "{v}");
        }
        let q = variational_residual(&m);
        for v in q.per_vertex.iter().flatten() {
            assert!((v - 1.5).abs() < 0.08, "{v}");
        }
    }

    #[test]
    fn boundary_vertices_absent() {
        let d = primitives::disc::<f64>(3.0, 0.5);
        let r = shrinker_residual(&d);
        for v in 0..d.vertices.len() {
            assert_eq!(r.per_vertex[v].is_none(), d.boundary_flags[v]);
        }
        assert!(r.rms_weighted < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let m = primitives::icosphere::<f32>(2.0, 3);
        let f = discrete_gauss_area(&m).total;
        assert!((f - 4.0 / std::f32::consts::E).abs() < 0.01);
    }
}
