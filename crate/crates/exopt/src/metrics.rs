//! Hypervolume, generation of convergence, convergence time and correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::OptError;

/// Sample count used for m > 3 hypervolume estimates.
pub const MC_SAMPLES: u64 = 1_000_000;
/// Reference coordinate in normalized objective space.
pub const NORMALIZED_REF: f64 = 1.1;

/// GC rule for single-objective runs: best value stable for 20 generations within 0.05.
pub const SOOP_GC_WINDOW: usize = 20;
pub const SOOP_GC_MARGIN: f64 = 0.05;
/// GC rule for multi-objective runs, applied to the per-generation hypervolume.
pub const MOOP_GC_WINDOW: usize = 20;
pub const MOOP_GC_MARGIN: f64 = 1.0e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypervolume<T> {
    pub value: T,
    /// Monte-Carlo sample count, `None` for exact results.
    pub samples: Option<u64>,
}

/// Per-objective min-max bounds fixed before comparing sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Real> Normalization<T> {
    /// Bounds over the union of all given point sets. `None` if the union is empty.
    pub fn from_sets<'a, I>(sets: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a [Vec<T>]>,
    {
        let mut out: Option<Self> = None;
        for set in sets {
            for p in set {
                match &mut out {
                    None => out = Some(Self { min: p.clone(), max: p.clone() }),
                    Some(n) => {
                        for (k, &v) in p.iter().enumerate() {
                            n.min[k] = n.min[k].min(v);
                            n.max[k] = n.max[k].max(v);
                        }
                    }
                }
            }
        }
        out
    }

    /// Maps a point to [0, 1] per objective; a zero-range objective maps to 0.
    pub fn apply(&self, p: &[T]) -> Vec<T> {
        p.iter()
            .enumerate()
            .map(|(k, &v)| {
                let range = self.max[k] - self.min[k];
                if range > T::zero() {
                    (v - self.min[k]) / range
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    /// Hypervolume after normalization, with reference (1.1, …, 1.1).
    pub fn hypervolume(&self, points: &[Vec<T>]) -> Result<Hypervolume<T>, OptError> {
        let normalized: Vec<Vec<T>> = points.iter().map(|p| self.apply(p)).collect();
        let reference = vec![T::c(NORMALIZED_REF); self.min.len()];
        hypervolume(&normalized, &reference)
    }
}

/// Dominated volume of `points` (minimization) bounded by `reference`.
///
/// Exact for m ≤ 3; Monte-Carlo with [`MC_SAMPLES`] samples for m > 3.
pub fn hypervolume<T: Real>(points: &[Vec<T>], reference: &[T]) -> Result<Hypervolume<T>, OptError> {
    let m = reference.len();
    for p in points {
        if p.len() != m {
            return Err(OptError::DimensionMismatch { expected: m, found: p.len() });
        }
    }
    let inside: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .map(|p| p.iter().map(|v| v.as_f64()).collect())
        .collect();
    let r: Vec<f64> = reference.iter().map(|v| v.as_f64()).collect();
    if inside.is_empty() {
        return Ok(Hypervolume { value: T::zero(), samples: None });
    }
    let (value, samples) = match m {
        0 => (0.0, None),
        1 => (r[0] - inside.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), None),
        2 => {
            let mut pts: Vec<[f64; 2]> = inside.iter().map(|p| [p[0], p[1]]).collect();
            (hv2d(&mut pts, r[0], r[1]), None)
        }
        3 => (hv3d(&inside, &r), None),
        _ => (hypervolume_mc_f64(&inside, &r, MC_SAMPLES, 0), Some(MC_SAMPLES)),
    };
    Ok(Hypervolume { value: T::c(value), samples })
}

/// 2-D sweep on points sorted by the first objective.
fn hv2d(pts: &mut [[f64; 2]], rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut min_y = ry;
    for i in 0..pts.len() {
        min_y = min_y.min(pts[i][1]);
        let next_x = if i + 1 < pts.len() { pts[i + 1][0] } else { rx };
        area += (next_x - pts[i][0]) * (ry - min_y);
    }
    area
}

/// Slices along the third objective, summing 2-D areas times slab height.
fn hv3d(points: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slice: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        slice.push([pts[i][0], pts[i][1]]);
        let next_z = if i + 1 < pts.len() { pts[i + 1][2] } else { r[2] };
        let dz = next_z - pts[i][2];
        if dz > 0.0 {
            volume += hv2d(&mut slice, r[0], r[1]) * dz;
        }
    }
    volume
}

fn hypervolume_mc_f64(points: &[Vec<f64>], r: &[f64], samples: u64, seed: u64) -> f64 {
    let m = r.len();
    let lo: Vec<f64> = (0..m).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let box_volume: f64 = (0..m).map(|k| r[k] - lo[k]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; m];
    let mut hits = 0u64;
    for _ in 0..samples {
        for k in 0..m {
            x[k] = lo[k] + rng.random::<f64>() * (r[k] - lo[k]);
        }
        if points.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    box_volume * hits as f64 / samples as f64
}

/// Monte-Carlo hypervolume estimate with an explicit sample count and seed.
pub fn hypervolume_mc<T: Real>(points: &[Vec<T>], reference: &[T], samples: u64, seed: u64) -> Hypervolume<T> {
    let r: Vec<f64> = reference.iter().map(|v| v.as_f64()).collect();
    let inside: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .map(|p| p.iter().map(|v| v.as_f64()).collect())
        .collect();
    let value = if inside.is_empty() { 0.0 } else { hypervolume_mc_f64(&inside, &r, samples, seed) };
    Hypervolume { value: T::c(value), samples: Some(samples) }
}

/// Smallest 1-based generation g such that the window [g, g+window−1] fits in
/// the history and every value from g to the end lies within a band of width
/// `margin`. Returns NG (the history length) when no such g exists.
pub fn generation_of_convergence<T: Real>(history: &[T], window: usize, margin: T) -> usize {
    let ng = history.len();
    let window = window.max(1);
    if ng < window {
        return ng;
    }
    let mut lo = history[ng - 1];
    let mut hi = history[ng - 1];
    let mut gc = ng;
    for idx in (0..ng).rev() {
        lo = lo.min(history[idx]);
        hi = hi.max(history[idx]);
        if hi - lo > margin {
            break;
        }
        if idx + window <= ng {
            gc = idx + 1;
        }
    }
    gc
}

/// CT = GC / NG · RT.
pub fn convergence_time(gc: usize, ng: usize, rt: f64) -> Result<f64, OptError> {
    if gc < 1 || gc > ng {
        return Err(OptError::InvalidParams(format!("need 1 <= GC <= NG, got GC={gc}, NG={ng}")));
    }
    if !(rt >= 0.0) {
        return Err(OptError::InvalidParams("RT must be >= 0".into()));
    }
    Ok(gc as f64 / ng as f64 * rt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub gc: usize,
    pub ng: usize,
    pub rt: f64,
    pub ct: f64,
}

impl ConvergenceReport {
    pub fn from_history<T: Real>(history: &[T], window: usize, margin: T, rt: f64) -> Result<Self, OptError> {
        if history.is_empty() {
            return Err(OptError::InvalidParams("empty history".into()));
        }
        let ng = history.len();
        let gc = generation_of_convergence(history, window, margin);
        Ok(Self { gc, ng, rt, ct: convergence_time(gc, ng, rt)? })
    }
}

/// Pearson correlation coefficient.
pub fn pearson_correlation<T: Real>(x: &[T], y: &[T]) -> Result<T, OptError> {
    if x.len() != y.len() {
        return Err(OptError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.is_empty() {
        return Err(OptError::Undefined("correlation of empty samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let my = y.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a.as_f64() - mx;
        let dy = b.as_f64() - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(OptError::Undefined("zero variance".into()));
    }
    Ok(T::c((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}
