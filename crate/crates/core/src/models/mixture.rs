//! Two-component regression mixture with latent labels.
//!
//! `y | x ~ (1 - p) N(alpha x1 + beta x2, sigma2) + p N(0, psi2)`.
//!
//! On a shard replicated `K` times each row carries a latent count
//! `z in {0..K}` of how many of its `K` copies belong to the noise component,
//! so `z ~ Binomial(K, p*)`. Every conditional below weights the regression
//! component by `K - z` and the noise component by `z`. With `K = 1` they are
//! the ordinary full-data Gibbs conditionals.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRow {
    pub x1: f64,
    pub x2: f64,
    pub y: f64,
}

/// Continuous parameters `(alpha, beta, sigma2, psi2, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub psi2: f64,
    pub p: f64,
}

impl MixtureParams {
    pub const NAMES: [&'static str; 5] = ["alpha", "beta", "sigma2", "psi2", "p"];

    pub fn to_array(self) -> [f64; 5] {
        [self.alpha, self.beta, self.sigma2, self.psi2, self.p]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 5 {
            return Err(Error::DimensionMismatch { expected: 5, got: v.len() });
        }
        let params = Self {
            alpha: v[0],
            beta: v[1],
            sigma2: v[2],
            psi2: v[3],
            p: v[4],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::Precondition("alpha and beta must be finite".into()));
        }
        if !(self.sigma2 > 0.0 && self.psi2 > 0.0) {
            return Err(Error::Precondition("sigma2 and psi2 must be positive".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Precondition("p must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Gibbs state: parameters plus one latent count per shard row.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub params: MixtureParams,
    pub z: Vec<u32>,
}

impl MixtureState {
    pub fn new(params: MixtureParams, z: Vec<u32>, replication: u32) -> Result<Self> {
        params.validate()?;
        if let Some(&bad) = z.iter().find(|&&c| c > replication) {
            return Err(Error::Precondition(format!(
                "latent count {bad} exceeds replication {replication}"
            )));
        }
        Ok(Self { params, z })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureHyperParams {
    pub m_alpha: f64,
    pub sigma2_alpha: f64,
    pub m_beta: f64,
    pub sigma2_beta: f64,
    pub alpha_sigma: f64,
    pub beta_sigma: f64,
    pub alpha_psi: f64,
    pub beta_psi: f64,
    pub lambda: f64,
    pub eta: f64,
}

impl Default for MixtureHyperParams {
    fn default() -> Self {
        Self {
            m_alpha: 0.0,
            sigma2_alpha: 100.0,
            m_beta: 0.0,
            sigma2_beta: 100.0,
            alpha_sigma: 1.0,
            beta_sigma: 1.0,
            alpha_psi: 1.0,
            beta_psi: 1.0,
            lambda: 1.0,
            eta: 1.0,
        }
    }
}

impl MixtureHyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma2_alpha", self.sigma2_alpha),
            ("sigma2_beta", self.sigma2_beta),
            ("alpha_sigma", self.alpha_sigma),
            ("beta_sigma", self.beta_sigma),
            ("alpha_psi", self.alpha_psi),
            ("beta_psi", self.beta_psi),
            ("lambda", self.lambda),
            ("eta", self.eta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub var: f64,
}

/// Inverse-gamma with density proportional to `x^(-shape - 1) exp(-rate / x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl NormalParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.mean, self.var.sqrt())
            .expect("validated normal parameters")
            .sample(rng)
    }
}

impl InvGammaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if !(self.shape > 0.0 && self.rate > 0.0) {
            return Err(Error::DegenerateConditional(format!(
                "inverse-gamma({}, {}) is improper",
                self.shape, self.rate
            )));
        }
        let g = Gamma::new(self.shape, 1.0 / self.rate)
            .map_err(|e| Error::DegenerateConditional(e.to_string()))?;
        Ok(1.0 / g.sample(rng))
    }
}

impl BetaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let b = Beta::new(self.a, self.b).map_err(|e| Error::DegenerateConditional(e.to_string()))?;
        Ok(b.sample(rng))
    }
}

/// Per-shard view of the data plus the powers applied to likelihood and prior.
///
/// `replication` is the integer `K` in `Binomial(K, p*)`; `prior_power` is `1`
/// for rescaled subposteriors and `1/K` for tempered-prior subposteriors.
#[derive(Debug, Clone, Copy)]
pub struct MixtureTarget<'a> {
    pub rows: &'a [MixtureRow],
    pub replication: u32,
    pub prior_power: f64,
    pub hyper: &'a MixtureHyperParams,
}

fn ln_normal(y: f64, mean: f64, var: f64) -> f64 {
    let r = y - mean;
    -HALF_LN_2PI - 0.5 * var.ln() - 0.5 * r * r / var
}

impl<'a> MixtureTarget<'a> {
    pub fn new(
        rows: &'a [MixtureRow],
        replication: u32,
        prior_power: f64,
        hyper: &'a MixtureHyperParams,
    ) -> Result<Self> {
        hyper.validate()?;
        if replication == 0 {
            return Err(Error::Precondition("replication must be >= 1".into()));
        }
        if !(prior_power > 0.0 && prior_power <= 1.0) {
            return Err(Error::Precondition(format!("prior power {prior_power} not in (0, 1]")));
        }
        Ok(Self {
            rows,
            replication,
            prior_power,
            hyper,
        })
    }

    /// Posterior probability that one copy of `row` belongs to the noise component.
    pub fn noise_probability(&self, params: &MixtureParams, row: &MixtureRow) -> f64 {
        let mean = params.alpha * row.x1 + params.beta * row.x2;
        let ln_noise = params.p.ln() + ln_normal(row.y, 0.0, params.psi2);
        let ln_reg = (-params.p).ln_1p() + ln_normal(row.y, mean, params.sigma2);
        // p* = 1 / (1 + exp(ln_reg - ln_noise))
        let d = ln_reg - ln_noise;
        if d > 0.0 {
            let e = (-d).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + d.exp())
        }
    }

    fn regression_weight(&self, z: u32) -> f64 {
        f64::from(self.replication - z)
    }

    /// Normal conditional of `alpha`. Collapses to the (tempered) prior when no
    /// weight sits on the regression component.
    pub fn alpha(&self, state: &MixtureState) -> NormalParams {
        let MixtureParams { beta, sigma2, .. } = state.params;
        let (mut num, mut den) = (0.0, 0.0);
        for (row, &z) in self.rows.iter().zip(&state.z) {
            let w = self.regression_weight(z);
            num += (row.y - beta * row.x2) * row.x1 * w;
            den += row.x1 * row.x1 * w;
        }
        let prior_prec = self.prior_power / self.hyper.sigma2_alpha;
        let prec = den / sigma2 + prior_prec;
        NormalParams {
            mean: (num / sigma2 + self.hyper.m_alpha * prior_prec) / prec,
            var: 1.0 / prec,
        }
    }

    pub fn beta(&self, state: &MixtureState) -> NormalParams {
        let MixtureParams { alpha, sigma2, .. } = state.params;
        let (mut num, mut den) = (0.0, 0.0);
        for (row, &z) in self.rows.iter().zip(&state.z) {
            let w = self.regression_weight(z);
            num += (row.y - alpha * row.x1) * row.x2 * w;
            den += row.x2 * row.x2 * w;
        }
        let prior_prec = self.prior_power / self.hyper.sigma2_beta;
        let prec = den / sigma2 + prior_prec;
        NormalParams {
            mean: (num / sigma2 + self.hyper.m_beta * prior_prec) / prec,
            var: 1.0 / prec,
        }
    }

    // A tempered IG(a, b)^w prior is IG(w (a + 1) - 1, w b); a Beta(l, e)^w
    // prior is Beta(w (l - 1) + 1, w (e - 1) + 1).
    fn tempered_ig(&self, shape: f64, rate: f64) -> (f64, f64) {
        let w = self.prior_power;
        (w * (shape + 1.0) - 1.0, w * rate)
    }

    pub fn sigma2(&self, state: &MixtureState) -> InvGammaParams {
        let MixtureParams { alpha, beta, .. } = state.params;
        let (mut count, mut ss) = (0.0, 0.0);
        for (row, &z) in self.rows.iter().zip(&state.z) {
            let w = self.regression_weight(z);
            let r = alpha * row.x1 + beta * row.x2 - row.y;
            count += w;
            ss += w * r * r;
        }
        let (a0, b0) = self.tempered_ig(self.hyper.alpha_sigma, self.hyper.beta_sigma);
        InvGammaParams {
            shape: a0 + 0.5 * count,
            rate: b0 + 0.5 * ss,
        }
    }

    pub fn psi2(&self, state: &MixtureState) -> InvGammaParams {
        let (mut count, mut ss) = (0.0, 0.0);
        for (row, &z) in self.rows.iter().zip(&state.z) {
            let w = f64::from(z);
            count += w;
            ss += w * row.y * row.y;
        }
        let (a0, b0) = self.tempered_ig(self.hyper.alpha_psi, self.hyper.beta_psi);
        InvGammaParams {
            shape: a0 + 0.5 * count,
            rate: b0 + 0.5 * ss,
        }
    }

    pub fn p(&self, state: &MixtureState) -> BetaParams {
        let noise: f64 = state.z.iter().map(|&z| f64::from(z)).sum();
        let total = f64::from(self.replication) * self.rows.len() as f64;
        let w = self.prior_power;
        BetaParams {
            a: w * (self.hyper.lambda - 1.0) + 1.0 + noise,
            b: w * (self.hyper.eta - 1.0) + 1.0 + (total - noise),
        }
    }

    /// Total regression weight `sum_j (K - z_j)`.
    pub fn regression_count(&self, state: &MixtureState) -> u64 {
        state
            .z
            .iter()
            .map(|&z| u64::from(self.replication - z))
            .sum()
    }

    pub fn sample_latents<R: Rng + ?Sized>(&self, state: &mut MixtureState, rng: &mut R) {
        let params = state.params;
        for (row, z) in self.rows.iter().zip(state.z.iter_mut()) {
            let prob = self.noise_probability(&params, row);
            *z = if self.replication == 1 {
                u32::from(rng.gen::<f64>() < prob)
            } else {
                Binomial::new(u64::from(self.replication), prob.clamp(0.0, 1.0))
                    .expect("probability in [0, 1]")
                    .sample(rng) as u32
            };
        }
    }
}

/// All full conditionals evaluated at one state.
#[derive(Debug, Clone)]
pub struct FullConditionals {
    pub noise_probabilities: Vec<f64>,
    pub alpha: NormalParams,
    pub beta: NormalParams,
    pub sigma2: InvGammaParams,
    pub psi2: InvGammaParams,
    pub p: BetaParams,
    /// Set when `sum_j (K - z_j) = 0`: alpha and beta revert to their priors.
    pub degenerate: bool,
}

pub fn mixture_gibbs_conditionals(
    state: &MixtureState,
    target: &MixtureTarget<'_>,
) -> Result<FullConditionals> {
    if state.z.len() != target.rows.len() {
        return Err(Error::DimensionMismatch {
            expected: target.rows.len(),
            got: state.z.len(),
        });
    }
    state.params.validate()?;
    Ok(FullConditionals {
        noise_probabilities: target
            .rows
            .iter()
            .map(|r| target.noise_probability(&state.params, r))
            .collect(),
        alpha: target.alpha(state),
        beta: target.beta(state),
        sigma2: target.sigma2(state),
        psi2: target.psi2(state),
        p: target.p(state),
        degenerate: target.regression_count(state) == 0,
    })
}

/// Marginal likelihood of the mixture (latents summed out) with the conjugate
/// priors, in natural coordinates. Used for density evaluation and checks;
/// sampling goes through the Gibbs conditionals.
#[derive(Debug, Clone, Copy)]
pub struct MixtureModel {
    pub hyper: MixtureHyperParams,
}

impl MixtureModel {
    fn components(theta: &[f64], row: &MixtureRow) -> (f64, f64, f64) {
        let mean = theta[0] * row.x1 + theta[1] * row.x2;
        let ln_reg = (-theta[4]).ln_1p() + ln_normal(row.y, mean, theta[2]);
        let ln_noise = theta[4].ln() + ln_normal(row.y, 0.0, theta[3]);
        (mean, ln_reg, ln_noise)
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl crate::model::Model for MixtureModel {
    type Row = MixtureRow;

    fn dim(&self) -> usize {
        5
    }

    fn component_names(&self) -> Vec<String> {
        MixtureParams::NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn log_lik(&self, theta: &[f64], row: &MixtureRow) -> f64 {
        if !(theta[2] > 0.0 && theta[3] > 0.0 && theta[4] > 0.0 && theta[4] < 1.0) {
            return f64::NAN;
        }
        let (_, a, b) = Self::components(theta, row);
        ln_add_exp(a, b)
    }

    fn add_grad_log_lik(&self, theta: &[f64], row: &MixtureRow, weight: f64, out: &mut [f64]) {
        let (mean, a, b) = Self::components(theta, row);
        let total = ln_add_exp(a, b);
        let w_reg = (a - total).exp();
        let w_noise = (b - total).exp();
        let (s2, q2, p) = (theta[2], theta[3], theta[4]);
        let r = row.y - mean;
        out[0] += weight * w_reg * r * row.x1 / s2;
        out[1] += weight * w_reg * r * row.x2 / s2;
        out[2] += weight * w_reg * (r * r / (2.0 * s2 * s2) - 0.5 / s2);
        out[3] += weight * w_noise * (row.y * row.y / (2.0 * q2 * q2) - 0.5 / q2);
        out[4] += weight * (w_noise / p - w_reg / (1.0 - p));
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let h = &self.hyper;
        let (s2, q2, p) = (theta[2], theta[3], theta[4]);
        if !(s2 > 0.0 && q2 > 0.0 && p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        let ig = |x: f64, a: f64, b: f64| a * b.ln() - statrs::function::gamma::ln_gamma(a) - (a + 1.0) * x.ln() - b / x;
        ln_normal(theta[0], h.m_alpha, h.sigma2_alpha)
            + ln_normal(theta[1], h.m_beta, h.sigma2_beta)
            + ig(s2, h.alpha_sigma, h.beta_sigma)
            + ig(q2, h.alpha_psi, h.beta_psi)
            + (h.lambda - 1.0) * p.ln()
            + (h.eta - 1.0) * (-p).ln_1p()
            - statrs::function::beta::ln_beta(h.lambda, h.eta)
    }

    fn add_grad_log_prior(&self, theta: &[f64], weight: f64, out: &mut [f64]) {
        let h = &self.hyper;
        let (s2, q2, p) = (theta[2], theta[3], theta[4]);
        out[0] -= weight * (theta[0] - h.m_alpha) / h.sigma2_alpha;
        out[1] -= weight * (theta[1] - h.m_beta) / h.sigma2_beta;
        out[2] += weight * (-(h.alpha_sigma + 1.0) / s2 + h.beta_sigma / (s2 * s2));
        out[3] += weight * (-(h.alpha_psi + 1.0) / q2 + h.beta_psi / (q2 * q2));
        out[4] += weight * ((h.lambda - 1.0) / p - (h.eta - 1.0) / (1.0 - p));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn rows() -> Vec<MixtureRow> {
        (0..10)
            .map(|i| {
                let t = i as f64;
                MixtureRow {
                    x1: (t * 0.7).sin(),
                    x2: (t * 1.3).cos(),
                    y: 2.0 * (t * 0.7).sin() + 5.0 * (t * 1.3).cos() + 0.1 * (t - 4.5),
                }
            })
            .collect()
    }

    fn params() -> MixtureParams {
        MixtureParams {
            alpha: 2.0,
            beta: 5.0,
            sigma2: 1.0,
            psi2: 10.0,
            p: 0.05,
        }
    }

    #[test]
    fn vanishing_noise_density_zeroes_labels() {
        let hyper = MixtureHyperParams::default();
        let rows = rows();
        let target = MixtureTarget::new(&rows, 5, 1.0, &hyper).unwrap();
        let mut p = params();
        p.psi2 = 1e12;
        for r in &rows {
            assert!(target.noise_probability(&p, r) < 1e-6);
        }
    }

    #[test]
    fn alpha_mean_matches_normal_equations() {
        // With z = 0 and K = 1 the alpha conditional is the ridge solution of
        // (x1'x1/s2 + 1/s2a) a = x1'(y - beta x2)/s2 + m_a/s2a.
        let hyper = MixtureHyperParams {
            m_alpha: 0.7,
            sigma2_alpha: 3.0,
            ..Default::default()
        };
        let rows = rows();
        let target = MixtureTarget::new(&rows, 1, 1.0, &hyper).unwrap();
        let mut p = params();
        p.sigma2 = 0.4;
        let state = MixtureState::new(p, vec![0; rows.len()], 1).unwrap();
        let got = target.alpha(&state);

        let n = rows.len();
        let x = DMatrix::from_iterator(n, 1, rows.iter().map(|r| r.x1));
        let resid = DVector::from_iterator(n, rows.iter().map(|r| r.y - p.beta * r.x2));
        let lhs = x.transpose() * &x / p.sigma2 + DMatrix::from_element(1, 1, 1.0 / hyper.sigma2_alpha);
        let rhs = x.transpose() * resid / p.sigma2
            + DVector::from_element(1, hyper.m_alpha / hyper.sigma2_alpha);
        let sol = lhs.clone().lu().solve(&rhs).unwrap();
        assert!((got.mean - sol[0]).abs() < 1e-12);
        assert!((got.var - 1.0 / lhs[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn p_conditional_counts() {
        let hyper = MixtureHyperParams::default();
        let rows = rows();
        let target = MixtureTarget::new(&rows, 1, 1.0, &hyper).unwrap();
        let mut z = vec![0; 10];
        z[1] = 1;
        z[4] = 1;
        z[8] = 1;
        let state = MixtureState::new(params(), z, 1).unwrap();
        let b = target.p(&state);
        assert_eq!((b.a, b.b), (4.0, 8.0));
    }

    #[test]
    fn all_noise_is_flagged_degenerate() {
        let hyper = MixtureHyperParams::default();
        let rows = rows();
        let target = MixtureTarget::new(&rows, 3, 1.0, &hyper).unwrap();
        let state = MixtureState::new(params(), vec![3; rows.len()], 3).unwrap();
        let c = mixture_gibbs_conditionals(&state, &target).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.alpha.mean, hyper.m_alpha);
        assert_eq!(c.alpha.var, hyper.sigma2_alpha);
    }

    #[test]
    fn replicated_counts_match_expanded_data() {
        // A shard replicated K times with counts z equals the K = 1 conditionals
        // on the dataset where each row appears K times with z of them labelled noise.
        let hyper = MixtureHyperParams::default();
        let rows = rows();
        let k = 4u32;
        let z: Vec<u32> = (0..rows.len() as u32).map(|i| i % (k + 1)).collect();
        let rep = MixtureTarget::new(&rows, k, 1.0, &hyper).unwrap();
        let rep_state = MixtureState::new(params(), z.clone(), k).unwrap();

        let mut expanded = Vec::new();
        let mut ez = Vec::new();
        for (r, &c) in rows.iter().zip(&z) {
            for copy in 0..k {
                expanded.push(*r);
                ez.push(u32::from(copy < c));
            }
        }
        let full = MixtureTarget::new(&expanded, 1, 1.0, &hyper).unwrap();
        let full_state = MixtureState::new(params(), ez, 1).unwrap();

        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs());
        let (a1, a2) = (rep.alpha(&rep_state), full.alpha(&full_state));
        assert!(close(a1.mean, a2.mean) && close(a1.var, a2.var));
        let (b1, b2) = (rep.beta(&rep_state), full.beta(&full_state));
        assert!(close(b1.mean, b2.mean) && close(b1.var, b2.var));
        let (s1, s2) = (rep.sigma2(&rep_state), full.sigma2(&full_state));
        assert!(close(s1.shape, s2.shape) && close(s1.rate, s2.rate));
        let (q1, q2) = (rep.psi2(&rep_state), full.psi2(&full_state));
        assert!(close(q1.shape, q2.shape) && close(q1.rate, q2.rate));
        let (p1, p2) = (rep.p(&rep_state), full.p(&full_state));
        assert!(close(p1.a, p2.a) && close(p1.b, p2.b));
    }

    #[test]
    fn tempered_prior_with_unit_power_is_untempered() {
        let hyper = MixtureHyperParams {
            alpha_sigma: 2.5,
            beta_sigma: 0.3,
            ..Default::default()
        };
        let rows = rows();
        let target = MixtureTarget::new(&rows, 1, 1.0, &hyper).unwrap();
        let state = MixtureState::new(params(), vec![0; rows.len()], 1).unwrap();
        let s = target.sigma2(&state);
        assert!((s.shape - (2.5 + 5.0)).abs() < 1e-12);
    }

    #[test]
    fn latent_count_bounds() {
        assert!(MixtureState::new(params(), vec![0, 4], 3).is_err());
    }
}
