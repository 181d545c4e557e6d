use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_GRID_SIZE: usize = 512;
pub const MIN_SAMPLES: usize = 100;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Kernel support is truncated at this many bandwidths.
const KERNEL_CUTOFF: f64 = 8.0;
/// Above this many kernel evaluations the binned estimator is used.
const EXACT_LIMIT: usize = 4_000_000;
/// Bin width as a fraction of the bandwidth for the binned estimator.
const BINS_PER_BANDWIDTH: f64 = 32.0;

/// A one-dimensional density tabulated on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRecord {
    grid: f64,
    value: f64,
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Two-column `grid,value` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        for (&grid, &value) in self.grid.iter().zip(&self.values) {
            w.serialize(GridRecord { grid, value })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, label: impl Into<String>, bandwidth: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in r.deserialize() {
            let rec: GridRecord = rec?;
            grid.push(rec.grid);
            values.push(rec.value);
        }
        Ok(Self {
            grid,
            values,
            bandwidth,
            label: label.into(),
        })
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n as f64 - 1.0);
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "KDE needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("KDE input".into()));
    }
    Ok(())
}

/// Silverman's rule `1.06 sd n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    check_samples(samples)?;
    let sd = stats::variance(samples).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("sample has zero spread".into()));
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// Gaussian KDE with `grid_size` equally spaced points over `[min - 3h, max + 3h]`.
pub fn kde_1d(samples: &[f64], grid_size: usize, bandwidth: Option<f64>) -> Result<DensityEstimate> {
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => {
            check_samples(samples)?;
            h
        }
        Some(h) => return Err(Error::Precondition(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(samples)?,
    };
    if grid_size < 2 {
        return Err(Error::Precondition("grid needs at least two points".into()));
    }
    let (lo, hi) = min_max(samples);
    let grid = linspace(lo - 3.0 * h, hi + 3.0 * h, grid_size);
    let values = kde_on_grid(samples, &grid, h);
    Ok(DensityEstimate {
        grid,
        values,
        bandwidth: h,
        label: String::new(),
    })
}

pub(crate) fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 2 {
        return false;
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    step > 0.0
        && grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1e-300))
}

/// Evaluates the Gaussian KDE of `samples` with bandwidth `h` at `grid`.
///
/// Small problems are evaluated exactly. Large ones on uniform grids use
/// linear binning onto a sub-grid aligned with `grid` whose spacing is at most
/// `h / 32`, which perturbs the estimate far below its sampling error.
pub fn kde_on_grid(samples: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    if samples.len().saturating_mul(grid.len()) <= EXACT_LIMIT || !is_uniform(grid) {
        kde_exact(samples, grid, h)
    } else {
        kde_binned(samples, grid, h)
    }
}

fn kde_exact(samples: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = INV_SQRT_2PI / (h * samples.len() as f64);
    let cutoff = KERNEL_CUTOFF * h;
    grid.iter()
        .map(|&x| {
            let s: f64 = samples
                .iter()
                .filter(|&&xi| (x - xi).abs() < cutoff)
                .map(|&xi| {
                    let u = (x - xi) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect()
}

fn kde_binned(samples: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let g = grid.len();
    let step = (grid[g - 1] - grid[0]) / (g - 1) as f64;
    let refine = (step * BINS_PER_BANDWIDTH / h).ceil().max(1.0) as usize;
    let delta = step / refine as f64;
    let (smin, smax) = min_max(samples);
    let pad_lo = ((grid[0] - smin) / delta).ceil().max(0.0) as usize;
    let pad_hi = ((smax - grid[g - 1]) / delta).ceil().max(0.0) as usize;
    let origin = grid[0] - pad_lo as f64 * delta;
    let bins = pad_lo + (g - 1) * refine + pad_hi + 2;

    let mut counts = vec![0.0; bins];
    for &x in samples {
        let pos = (x - origin) / delta;
        let i = (pos.floor() as isize).clamp(0, bins as isize - 2) as usize;
        let w = (pos - i as f64).clamp(0.0, 1.0);
        counts[i] += 1.0 - w;
        counts[i + 1] += w;
    }

    let reach = (KERNEL_CUTOFF * h / delta).ceil() as usize;
    let kernel: Vec<f64> = (0..=reach)
        .map(|j| {
            let u = j as f64 * delta / h;
            (-0.5 * u * u).exp()
        })
        .collect();
    let norm = INV_SQRT_2PI / (h * samples.len() as f64);
    (0..g)
        .map(|k| {
            let center = pad_lo + k * refine;
            let lo = center.saturating_sub(reach);
            let hi = (center + reach).min(bins - 1);
            let s: f64 = (lo..=hi).map(|b| counts[b] * kernel[b.abs_diff(center)]).sum();
            s * norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn constant_sample_is_degenerate() {
        assert!(matches!(kde_1d(&[2.0; 200], 64, None), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(kde_1d(&[1.0, 2.0], 64, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn binned_matches_exact() {
        let xs = normal_sample(20_000, 4);
        let h = silverman_bandwidth(&xs).unwrap();
        let grid = linspace(-5.0, 5.0, 301);
        let a = kde_exact(&xs, &grid, h);
        let b = kde_binned(&xs, &grid, h);
        let max = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(max < 1e-4, "max diff {max}");
    }

    #[test]
    fn normalised() {
        let d = kde_1d(&normal_sample(5000, 1), DEFAULT_GRID_SIZE, None).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-3);
        assert!(d.values.iter().all(|&v| v >= 0.0));
        assert!(d.grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_round_trip() {
        let d = kde_1d(&normal_sample(500, 2), 64, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        d.write_csv(&path).unwrap();
        let back = DensityEstimate::read_csv(&path, "", d.bandwidth).unwrap();
        assert_eq!(back.grid, d.grid);
        assert_eq!(back.values, d.values);
    }
}
