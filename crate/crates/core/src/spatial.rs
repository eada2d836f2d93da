//! Uniform hash grid for radius and nearest-neighbour queries.

use std::collections::HashMap;

use crate::scalar::Real;
use crate::vec3::Vec3;

pub(crate) struct PointGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<[f64; 3]>,
    max_shell: i64,
}

impl PointGrid {
    pub fn new<T: Real>(points: &[Vec3<T>], cell: f64) -> Self {
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let points: Vec<[f64; 3]> = points.iter().map(|p| [p.0[0].as_f64(), p.0[1].as_f64(), p.0[2].as_f64()]).collect();
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                continue;
            }
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
            cells.entry(Self::key_of(p, cell)).or_default().push(i);
        }
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0f64, f64::max);
        let max_shell = if extent.is_finite() { (extent / cell).ceil() as i64 + 2 } else { 2 };
        PointGrid {
            cell,
            cells,
            points,
            max_shell,
        }
    }

    fn key_of(p: &[f64; 3], cell: f64) -> (i64, i64, i64) {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    }

    fn dist(&self, i: usize, q: &[f64; 3]) -> f64 {
        let p = &self.points[i];
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }

    /// Indices within distance `r` of `q`, in increasing index order.
    pub fn within<T: Real>(&self, q: &Vec3<T>, r: f64) -> Vec<usize> {
        let q = [q.0[0].as_f64(), q.0[1].as_f64(), q.0[2].as_f64()];
        let (lo, hi) = (
            Self::key_of(&[q[0] - r, q[1] - r, q[2] - r], self.cell),
            Self::key_of(&[q[0] + r, q[1] + r, q[2] + r], self.cell),
        );
        let mut out = Vec::new();
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                for z in lo.2..=hi.2 {
                    if let Some(ids) = self.cells.get(&(x, y, z)) {
                        out.extend(ids.iter().copied().filter(|&i| self.dist(i, &q) <= r));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `q` and its distance; `None` for an empty grid.
    pub fn nearest<T: Real>(&self, q: &Vec3<T>) -> Option<(usize, f64)> {
        if self.cells.is_empty() {
            return None;
        }
        let qf = [q.0[0].as_f64(), q.0[1].as_f64(), q.0[2].as_f64()];
        let c = Self::key_of(&qf, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for k in 0..=self.max_shell + 1 {
            for x in c.0 - k..=c.0 + k {
                for y in c.1 - k..=c.1 + k {
                    for z in c.2 - k..=c.2 + k {
                        let on_shell = (x - c.0).abs() == k || (y - c.1).abs() == k || (z - c.2).abs() == k;
                        if !on_shell {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&(x, y, z)) {
                            for &i in ids {
                                let d = self.dist(i, &qf);
                                if best.map_or(true, |(_, b)| d < b) {
                                    best = Some((i, d));
                                }
                            }
                        }
                    }
                }
            }
            if let Some((_, d)) = best {
                if d <= k as f64 * self.cell {
                    return best;
                }
            }
            if k > self.max_shell + 1 {
                break;
            }
        }
        if best.is_none() || qf.iter().any(|v| !v.is_finite()) {
            return best;
        }
        // query far outside the grid: fall back to a scan
        (0..self.points.len())
            .filter(|&i| self.points[i].iter().all(|c| c.is_finite()))
            .map(|i| (i, self.dist(i, &qf)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
