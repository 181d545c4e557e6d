//! L2 distance `∫ (p - q)^2` between marginal densities.
//!
//! Each marginal is compared on one grid with one bandwidth (Silverman's rule
//! on the pooled sample). Besides the integral in parameter units (`raw`) the
//! report carries the same integral after expressing the parameter in units
//! of the reference standard deviation, `standardized = sd * raw`. Raw values
//! scale like `1 / sd`, so only the standardized values can be summed across
//! parameters of different units or compared across data sizes; `total` is
//! the standardized sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::kde::{kde_on_grid, linspace, min_max, silverman_bandwidth, trapezoid, DensityEstimate};

pub const BANDWIDTH_POLICY: &str = "silverman-pooled";

/// Row-major `n x d` draws.
#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    pub data: &'a [f64],
    pub dim: usize,
}

impl<'a> SampleView<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        Self { data, dim }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.chunks_exact(self.dim).map(|r| r[j]).collect()
    }
}

/// A marginal density known in closed form.
pub struct AnalyticMarginal {
    pub pdf: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub mean: f64,
    pub sd: f64,
    /// Closed support; the density is zero outside.
    pub support: (f64, f64),
}

pub enum Comparand<'a> {
    Samples(SampleView<'a>),
    Analytic(&'a [AnalyticMarginal]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Report {
    pub names: Vec<String>,
    /// Standardized per-marginal L2.
    pub per_marginal: Vec<f64>,
    pub total: f64,
    pub per_marginal_raw: Vec<f64>,
    pub total_raw: f64,
    pub bandwidths: Vec<f64>,
    /// Reference standard deviation used for standardization, per marginal.
    pub scales: Vec<f64>,
    pub grid_size: usize,
    pub bandwidth_policy: String,
}

/// Both densities of one marginal on their shared grid.
#[derive(Debug, Clone)]
pub struct MarginalComparison {
    pub grid: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub bandwidth: f64,
    pub scale: f64,
    pub raw: f64,
}

impl MarginalComparison {
    pub fn standardized(&self) -> f64 {
        self.raw * self.scale
    }

    pub fn left_density(&self, label: impl Into<String>) -> DensityEstimate {
        DensityEstimate {
            grid: self.grid.clone(),
            values: self.left.clone(),
            bandwidth: self.bandwidth,
            label: label.into(),
        }
    }

    pub fn right_density(&self, label: impl Into<String>) -> DensityEstimate {
        DensityEstimate {
            grid: self.grid.clone(),
            values: self.right.clone(),
            bandwidth: self.bandwidth,
            label: label.into(),
        }
    }
}

/// Mean and unbiased variance of the union of `a` and `b`, symmetric in its
/// arguments bit for bit.
fn pooled_moments(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = (a.len() + b.len()) as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let mean = (sa + sb) / n;
    let ss = |xs: &[f64]| xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss(a) + ss(b)) / (n - 1.0))
}

pub fn compare_sample_marginals(a: &[f64], b: &[f64], grid_size: usize) -> Result<MarginalComparison> {
    if grid_size < 2 {
        return Err(Error::Precondition("grid needs at least two points".into()));
    }
    // Validates sizes and finiteness of each side.
    silverman_bandwidth(a).or_else(|e| match e {
        Error::DegenerateSample(_) => Ok(0.0),
        other => Err(other),
    })?;
    silverman_bandwidth(b).or_else(|e| match e {
        Error::DegenerateSample(_) => Ok(0.0),
        other => Err(other),
    })?;
    let (_, var) = pooled_moments(a, b);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("pooled sample has zero spread".into()));
    }
    let h = 1.06 * sd * ((a.len() + b.len()) as f64).powf(-0.2);
    let (alo, ahi) = min_max(a);
    let (blo, bhi) = min_max(b);
    let grid = linspace(alo.min(blo) - 3.0 * h, ahi.max(bhi) + 3.0 * h, grid_size);
    let left = kde_on_grid(a, &grid, h);
    let right = kde_on_grid(b, &grid, h);
    let sq: Vec<f64> = left.iter().zip(&right).map(|(p, q)| (p - q) * (p - q)).collect();
    let raw = trapezoid(&grid, &sq);
    Ok(MarginalComparison {
        grid,
        left,
        right,
        bandwidth: h,
        scale: sd,
        raw,
    })
}

pub fn compare_with_analytic(a: &[f64], truth: &AnalyticMarginal, grid_size: usize) -> Result<MarginalComparison> {
    if grid_size < 2 {
        return Err(Error::Precondition("grid needs at least two points".into()));
    }
    if !(truth.sd > 0.0) {
        return Err(Error::Precondition("analytic marginal needs positive sd".into()));
    }
    let h = silverman_bandwidth(a)?;
    let (lo, hi) = min_max(a);
    let tlo = (truth.mean - 8.0 * truth.sd).max(truth.support.0);
    let thi = (truth.mean + 8.0 * truth.sd).min(truth.support.1);
    let grid = linspace((lo - 3.0 * h).min(tlo), (hi + 3.0 * h).max(thi), grid_size);
    let left = kde_on_grid(a, &grid, h);
    let right: Vec<f64> = grid
        .iter()
        .map(|&x| {
            if x < truth.support.0 || x > truth.support.1 {
                0.0
            } else {
                (truth.pdf)(x)
            }
        })
        .collect();
    let sq: Vec<f64> = left.iter().zip(&right).map(|(p, q)| (p - q) * (p - q)).collect();
    Ok(MarginalComparison {
        raw: trapezoid(&grid, &sq),
        grid,
        left,
        right,
        bandwidth: h,
        scale: truth.sd,
    })
}

/// Marginal-sum L2 between draws `a` and either draws or analytic marginals `b`.
pub fn l2_distance(a: SampleView<'_>, b: &Comparand<'_>, names: &[String], grid_size: usize) -> Result<L2Report> {
    let d = a.dim;
    let comparisons: Vec<MarginalComparison> = match b {
        Comparand::Samples(bv) => {
            if bv.dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: bv.dim,
                });
            }
            (0..d)
                .map(|j| compare_sample_marginals(&a.column(j), &bv.column(j), grid_size))
                .collect::<Result<_>>()?
        }
        Comparand::Analytic(truth) => {
            if truth.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: truth.len(),
                });
            }
            (0..d)
                .map(|j| compare_with_analytic(&a.column(j), &truth[j], grid_size))
                .collect::<Result<_>>()?
        }
    };
    Ok(report(&comparisons, names, grid_size))
}

pub fn report(comparisons: &[MarginalComparison], names: &[String], grid_size: usize) -> L2Report {
    let per_marginal: Vec<f64> = comparisons.iter().map(MarginalComparison::standardized).collect();
    let per_marginal_raw: Vec<f64> = comparisons.iter().map(|c| c.raw).collect();
    L2Report {
        names: names.to_vec(),
        total: per_marginal.iter().sum(),
        total_raw: per_marginal_raw.iter().sum(),
        per_marginal,
        per_marginal_raw,
        bandwidths: comparisons.iter().map(|c| c.bandwidth).collect(),
        scales: comparisons.iter().map(|c| c.scale).collect(),
        grid_size,
        bandwidth_policy: BANDWIDTH_POLICY.into(),
    }
}

/// `∫ (f - g)^2` over `[lo, hi]` by the trapezoid rule on `n` points.
pub fn l2_between_densities(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let grid = linspace(lo, hi, n);
    let sq: Vec<f64> = grid.iter().map(|&x| (f(x) - g(x)).powi(2)).collect();
    trapezoid(&grid, &sq)
}

/// Joint L2 for two-dimensional draws with a product Gaussian kernel, as a
/// cross-check of the marginal-sum mode. Raw units.
pub fn l2_joint_2d(a: SampleView<'_>, b: SampleView<'_>, grid_size: usize) -> Result<f64> {
    if a.dim != 2 || b.dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: a.dim.max(b.dim),
        });
    }
    let axes: Vec<(Vec<f64>, f64)> = (0..2)
        .map(|j| {
            let (ca, cb) = (a.column(j), b.column(j));
            let (_, var) = pooled_moments(&ca, &cb);
            let n = (ca.len() + cb.len()) as f64;
            let h = 1.06 * var.sqrt() * n.powf(-1.0 / 6.0);
            if !(h > 0.0) {
                return Err(Error::DegenerateSample(format!("component {j} has zero spread")));
            }
            let (alo, ahi) = min_max(&ca);
            let (blo, bhi) = min_max(&cb);
            Ok((linspace(alo.min(blo) - 3.0 * h, ahi.max(bhi) + 3.0 * h, grid_size), h))
        })
        .collect::<Result<_>>()?;
    let density = |s: &SampleView<'_>| -> Vec<f64> {
        let (gx, hx) = &axes[0];
        let (gy, hy) = &axes[1];
        let n = (s.data.len() / 2) as f64;
        let mut out = vec![0.0; gx.len() * gy.len()];
        for row in s.data.chunks_exact(2) {
            let kx: Vec<f64> = gx.iter().map(|&x| gauss((x - row[0]) / hx) / hx).collect();
            let ky: Vec<f64> = gy.iter().map(|&y| gauss((y - row[1]) / hy) / hy).collect();
            for (i, kxi) in kx.iter().enumerate() {
                if *kxi < 1e-300 {
                    continue;
                }
                for (j, kyj) in ky.iter().enumerate() {
                    out[i * gy.len() + j] += kxi * kyj;
                }
            }
        }
        out.iter_mut().for_each(|v| *v /= n);
        out
    };
    let (fa, fb) = (density(&a), density(&b));
    let (gx, gy) = (&axes[0].0, &axes[1].0);
    let inner: Vec<f64> = (0..gx.len())
        .map(|i| {
            let row: Vec<f64> = (0..gy.len())
                .map(|j| (fa[i * gy.len() + j] - fb[i * gy.len() + j]).powi(2))
                .collect();
            trapezoid(gy, &row)
        })
        .collect();
    Ok(trapezoid(gx, &inner))
}

fn gauss(u: f64) -> f64 {
    0.398_942_280_401_432_7 * (-0.5 * u * u).exp()
}
