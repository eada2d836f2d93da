use std::collections::HashMap;

use super::{validate, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Restrict a mesh to the closed ball of radius `radius` about the origin.
///
/// Vertices within `1e-9·radius` of the sphere are snapped onto it and count
/// as inside; edges crossing the sphere are split at the exact intersection
/// and the crossing triangles are clipped polygon-wise, keeping orientation.
pub fn clip_to_ball<T: Real>(mesh: &TriMesh<T>, radius: T) -> Result<TriMesh<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("clip radius must be positive, got {radius}")));
    }
    if mesh.vertices.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite vertex coordinate".into()));
    }
    let band = T::lit(1e-9) * radius;
    let mut verts = mesh.vertices.clone();
    let mut labels = mesh.orbit_labels.clone();
    labels.resize(verts.len(), None);
    let mut inside = vec![false; verts.len()];
    for (i, p) in verts.iter_mut().enumerate() {
        let r = p.norm();
        if (r - radius).abs() <= band {
            if r > T::zero() {
                *p = *p * (radius / r);
            }
            inside[i] = true;
        } else {
            inside[i] = r < radius;
        }
    }

    let mut crossing: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cross = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>, labels: &mut Vec<Option<usize>>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&i) = crossing.get(&key) {
            return i;
        }
        // a inside, b outside
        let (pa, pb) = (verts[a], verts[b]);
        let d = pb - pa;
        let dd = d.norm_sq();
        let ad = pa.dot(&d);
        let disc = (ad * ad + dd * (radius * radius - pa.norm_sq())).max(T::zero());
        let t = ((-ad + disc.sqrt()) / dd).max(T::zero()).min(T::one());
        let p = pa + d * t;
        let n = p.norm();
        let p = if n > T::zero() { p * (radius / n) } else { p };
        verts.push(p);
        labels.push(None);
        let i = verts.len() - 1;
        crossing.insert(key, i);
        i
    };

    let on_sphere = |i: usize, verts: &Vec<Vec3<T>>| (verts[i].norm() - radius).abs() <= band;
    let mut tris = Vec::with_capacity(mesh.triangles.len());
    for tri in &mesh.triangles {
        let ins = tri.map(|v| inside[v]);
        if ins.iter().all(|&b| b) {
            tris.push(*tri);
            continue;
        }
        if ins.iter().all(|&b| !b) {
            continue;
        }
        let mut poly: Vec<usize> = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if inside[a] {
                poly.push(a);
            }
            if inside[a] != inside[b] {
                let (i, o) = if inside[a] { (a, b) } else { (b, a) };
                if on_sphere(i, &verts) {
                    poly.push(i);
                } else {
                    poly.push(cross(i, o, &mut verts, &mut labels));
                }
            }
        }
        poly.dedup();
        if poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        // pick the quad diagonal from geometry so symmetric images split alike
        if poly.len() == 4 && !quad_split_at_first(&verts, &poly) {
            poly.rotate_left(1);
        }
        for k in 1..poly.len().saturating_sub(1) {
            let t = [poly[0], poly[k], poly[k + 1]];
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                tris.push(t);
            }
        }
    }
    let mut out = TriMesh {
        vertices: verts,
        triangles: tris,
        boundary_flags: Vec::new(),
        orbit_labels: labels,
    };
    out.compact();
    let diag = validate(&out);
    if !diag.is_combinatorially_valid() {
        return Err(Error::ClipDegenerate(format!(
            "clipping at radius {radius} produced {} non-manifold vertices and {} non-manifold edges",
            diag.nonmanifold_vertices.len(),
            diag.nonmanifold_edges.len()
        )));
    }
    Ok(out)
}

fn quad_split_at_first<T: Real>(verts: &[Vec3<T>], q: &[usize]) -> bool {
    let (a, b) = ((verts[q[0]] - verts[q[2]]).norm(), (verts[q[1]] - verts[q[3]]).norm());
    let tol = T::from(1e-9).unwrap() * (a + b);
    if (a - b).abs() > tol {
        return a < b;
    }
    let ma = (verts[q[0]] + verts[q[2]]).norm();
    let mb = (verts[q[1]] + verts[q[3]]).norm();
    ma <= mb
}
