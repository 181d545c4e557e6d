use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::combine::{combine_ar, combine_ar_at, combine_cmc, refine_center_newton, CombinedSample, Method, NewtonTrace};
use crate::data::{generate, ingest_csv, ExampleId, GeneratedData};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::metrics::l2::{compare_sample_marginals, compare_with_analytic, report, BANDWIDTH_POLICY};
use crate::metrics::{AnalyticMarginal, MarginalComparison};
use crate::model::{grad_log_post, DataShard, Dataset, Model, ParameterVector, Scaling};
use crate::models::{BetaBernoulli, GaussianModel, LogisticModel, MixtureModel, MixtureParams, MixtureRow};
use crate::sampler::{exact_beta_sample, find_mode, gibbs_sample_mixture, rwm_sample, ChainDraws, GibbsConfig, RwmConfig};
use crate::shard::{make_shards, run_subposteriors, shard_seed, SubposteriorResult};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One `(K, method)` cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub k: usize,
    pub method: Method,
    pub status: CellStatus,
    pub total_l2: Option<f64>,
    pub total_l2_raw: Option<f64>,
    pub per_marginal: Vec<f64>,
    pub per_marginal_raw: Vec<f64>,
    pub mean: Vec<f64>,
    pub wall_seconds: f64,
    pub acceptance_mean: Option<f64>,
    pub acceptance_min: Option<f64>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl CellResult {
    fn failed(k: usize, method: Method, error: &Error, wall_seconds: f64) -> Self {
        Self {
            k,
            method,
            status: CellStatus::Failed,
            total_l2: None,
            total_l2_raw: None,
            per_marginal: Vec::new(),
            per_marginal_raw: Vec::new(),
            mean: Vec::new(),
            wall_seconds,
            acceptance_mean: None,
            acceptance_min: None,
            warnings: Vec::new(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub names: Vec<String>,
    pub rows: Vec<CellResult>,
}

impl ResultTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == CellStatus::Ok)
    }

    pub fn cell(&self, k: usize, method: Method) -> Option<&CellResult> {
        self.rows.iter().find(|r| r.k == k && r.method == method)
    }
}

/// Everything computed for one shard count, kept for inspection and plotting.
#[derive(Debug, Clone)]
pub struct KArtifacts {
    pub k: usize,
    /// Rescaled subposteriors, when an AR method ran.
    pub sub: Option<SubposteriorResult>,
    /// Tempered-prior subposteriors, when CMC ran.
    pub cmc_sub: Option<SubposteriorResult>,
    pub combined: Vec<CombinedSample>,
    pub newton: Option<NewtonTrace>,
    /// Full-data gradient norm at the AR+NR center.
    pub center_gradient_norm: Option<f64>,
    pub densities: Vec<(Method, Vec<MarginalComparison>)>,
}

impl KArtifacts {
    pub fn combined(&self, method: Method) -> Option<&CombinedSample> {
        self.combined.iter().find(|c| c.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShardSeeds {
    pub k: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub name: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub names: Vec<String>,
    pub n: usize,
    pub truth: Vec<f64>,
    pub reference: String,
    pub data_summary: Option<String>,
    pub shard_seeds: Vec<ShardSeeds>,
    pub bandwidth_policy: String,
    pub grid_size: usize,
    pub l2_mode: String,
    pub burn_in: usize,
    pub reference_burn_in: usize,
    pub newton_iters: usize,
}

pub struct ExperimentRun {
    pub table: ResultTable,
    pub metadata: RunMetadata,
    /// Reference chain, absent when the reference is analytic.
    pub reference_chain: Option<ChainDraws>,
    pub artifacts: Vec<KArtifacts>,
}

pub enum Reference {
    Analytic(Vec<AnalyticMarginal>),
    Chain(ChainDraws),
}

/// Per-example sampling back end.
trait Family: Sync {
    type Row: Clone + Send + Sync;

    fn names(&self) -> Vec<String>;

    fn reference(&self, data: &Dataset<Self::Row>, cfg: &ExperimentConfig) -> Result<(Reference, String)>;

    fn subposteriors(
        &self,
        shards: &[DataShard<Self::Row>],
        scaling: Scaling,
        cfg: &ExperimentConfig,
    ) -> Result<SubposteriorResult>;

    /// Newton refinement and the full-data gradient norm at its result;
    /// `None` when the model has no Hessian.
    fn newton(
        &self,
        shards: &[DataShard<Self::Row>],
        init: &ParameterVector,
        cfg: &ExperimentConfig,
    ) -> Option<(Result<(ParameterVector, NewtonTrace)>, Box<dyn Fn(&[f64]) -> Result<f64> + '_>)>;
}

struct RwmFamily<M: Model> {
    model: M,
    base_init: Vec<f64>,
}

impl<M: Model> RwmFamily<M> {
    fn rwm_config(&self, rows: &[M::Row], lw: f64, pw: f64, burn_in: usize, draws: usize, thin: usize, cfg: &ExperimentConfig) -> RwmConfig {
        let mut rc = RwmConfig::new(burn_in + draws * thin, burn_in, self.base_init.clone());
        rc.thin = thin;
        rc.target_accept = cfg.target_accept;
        rc.adapt_window = cfg.adapt_window;
        if let Some(init) = &cfg.init {
            rc.init = init.clone();
        } else if cfg.mode_start && self.model.has_hessian() {
            match find_mode(&self.model, rows, lw, pw, &self.base_init, 100) {
                Ok(fit) => {
                    rc.init = fit.mode;
                    rc.init_cov = fit.covariance;
                }
                Err(e) => warn!("mode search failed, starting at the default point: {e}"),
            }
        }
        rc
    }
}

impl<M: Model> Family for RwmFamily<M> {
    type Row = M::Row;

    fn names(&self) -> Vec<String> {
        self.model.component_names()
    }

    fn reference(&self, data: &Dataset<M::Row>, cfg: &ExperimentConfig) -> Result<(Reference, String)> {
        let rows = data.rows();
        let rc = self.rwm_config(rows, 1.0, 1.0, cfg.reference_burn_in, cfg.reference_draws, 1, cfg);
        let target = self.model.weighted_target(rows, 1.0, 1.0);
        let chain = rwm_sample(target.as_ref(), &rc, cfg.reference_seed)?;
        let desc = format!(
            "full-data adaptive RWM chain, {} draws after {} burn-in, acceptance {:.3}",
            chain.len(),
            cfg.reference_burn_in,
            chain.acceptance_rate
        );
        Ok((Reference::Chain(chain), desc))
    }

    fn subposteriors(&self, shards: &[DataShard<M::Row>], scaling: Scaling, cfg: &ExperimentConfig) -> Result<SubposteriorResult> {
        run_subposteriors(shards, self.names(), cfg.chain_seed, cfg.workers(), |shard, seed| {
            let (lw, pw) = scaling.weights(shard.replication());
            let rc = self.rwm_config(shard.rows(), lw, pw, cfg.burn_in, cfg.draws, cfg.thin, cfg);
            let target = self.model.weighted_target(shard.rows(), lw, pw);
            rwm_sample(target.as_ref(), &rc, seed)
        })
    }

    fn newton(
        &self,
        shards: &[DataShard<M::Row>],
        init: &ParameterVector,
        cfg: &ExperimentConfig,
    ) -> Option<(Result<(ParameterVector, NewtonTrace)>, Box<dyn Fn(&[f64]) -> Result<f64> + '_>)> {
        if !self.model.has_hessian() {
            return None;
        }
        let refined = refine_center_newton(&self.model, shards, init, cfg.newton_iters, cfg.newton_tol);
        let shards = shards.to_vec();
        Some((refined, Box::new(move |t| Ok(grad_log_post(&self.model, &shards, t)?.norm()))))
    }
}

struct BetaFamily {
    bb: BetaBernoulli,
}

impl Family for BetaFamily {
    type Row = u8;

    fn names(&self) -> Vec<String> {
        vec!["p".into()]
    }

    fn reference(&self, data: &Dataset<u8>, _cfg: &ExperimentConfig) -> Result<(Reference, String)> {
        let post = self.bb.exact_posterior(data)?;
        let desc = format!("analytic Beta({}, {}) posterior", post.a, post.b);
        let marginal = AnalyticMarginal {
            mean: post.mean(),
            sd: post.variance().sqrt(),
            support: (0.0, 1.0),
            pdf: Box::new(move |x| post.pdf(x)),
        };
        Ok((Reference::Analytic(vec![marginal]), desc))
    }

    fn subposteriors(&self, shards: &[DataShard<u8>], scaling: Scaling, cfg: &ExperimentConfig) -> Result<SubposteriorResult> {
        run_subposteriors(shards, self.names(), cfg.chain_seed, cfg.workers(), |shard, seed| {
            exact_beta_sample(&self.bb.exact_subposterior(shard, scaling)?, cfg.draws, seed)
        })
    }

    fn newton(
        &self,
        shards: &[DataShard<u8>],
        init: &ParameterVector,
        cfg: &ExperimentConfig,
    ) -> Option<(Result<(ParameterVector, NewtonTrace)>, Box<dyn Fn(&[f64]) -> Result<f64> + '_>)> {
        let model = self.bb.model();
        let refined = refine_center_newton(&model, shards, init, cfg.newton_iters, cfg.newton_tol);
        let shards = shards.to_vec();
        Some((refined, Box::new(move |t| Ok(grad_log_post(&model, &shards, t)?.norm()))))
    }
}

struct MixtureFamily {
    model: MixtureModel,
    init: MixtureParams,
}

impl MixtureFamily {
    fn gibbs_config(&self, burn_in: usize, draws: usize, thin: usize, scaling: Scaling, cfg: &ExperimentConfig) -> GibbsConfig {
        let mut gc = GibbsConfig::new(burn_in + draws * thin, burn_in, self.init);
        gc.thin = thin;
        gc.latent_init = cfg.latent_init;
        gc.scaling = scaling;
        gc
    }
}

impl Family for MixtureFamily {
    type Row = MixtureRow;

    fn names(&self) -> Vec<String> {
        self.model.component_names()
    }

    fn reference(&self, data: &Dataset<MixtureRow>, cfg: &ExperimentConfig) -> Result<(Reference, String)> {
        let gc = self.gibbs_config(cfg.reference_burn_in, cfg.reference_draws, 1, Scaling::Rescaled, cfg);
        let chain = gibbs_sample_mixture(&DataShard::whole(data), &self.model.hyper, &gc, cfg.reference_seed)?;
        let desc = format!(
            "full-data Gibbs chain, {} draws after {} burn-in",
            chain.len(),
            cfg.reference_burn_in
        );
        Ok((Reference::Chain(chain), desc))
    }

    fn subposteriors(&self, shards: &[DataShard<MixtureRow>], scaling: Scaling, cfg: &ExperimentConfig) -> Result<SubposteriorResult> {
        let gc = self.gibbs_config(cfg.burn_in, cfg.draws, cfg.thin, scaling, cfg);
        run_subposteriors(shards, self.names(), cfg.chain_seed, cfg.workers(), |shard, seed| {
            gibbs_sample_mixture(shard, &self.model.hyper, &gc, seed)
        })
    }

    fn newton(
        &self,
        _shards: &[DataShard<MixtureRow>],
        _init: &ParameterVector,
        _cfg: &ExperimentConfig,
    ) -> Option<(Result<(ParameterVector, NewtonTrace)>, Box<dyn Fn(&[f64]) -> Result<f64> + '_>)> {
        None
    }
}

/// Least-squares start for the mixture Gibbs sampler.
fn mixture_start(rows: &[MixtureRow]) -> Result<MixtureParams> {
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        s11 += r.x1 * r.x1;
        s12 += r.x1 * r.x2;
        s22 += r.x2 * r.x2;
        s1y += r.x1 * r.y;
        s2y += r.x2 * r.y;
    }
    let det = s11 * s22 - s12 * s12;
    let (alpha, beta) = if det.abs() > 1e-12 * (s11 * s22).max(1e-300) {
        ((s22 * s1y - s12 * s2y) / det, (s11 * s2y - s12 * s1y) / det)
    } else {
        (0.0, 0.0)
    };
    let resid: Vec<f64> = rows.iter().map(|r| r.y - alpha * r.x1 - beta * r.x2).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let sigma2 = stats::variance(&resid).max(1e-6);
    let psi2 = stats::variance(&ys).max(sigma2);
    MixtureParams::from_slice(&[alpha, beta, sigma2, psi2, 0.1])
}

fn elapsed(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn acceptance(sub: &SubposteriorResult) -> (f64, f64) {
    let rates: Vec<f64> = sub.chains.iter().map(|c| c.acceptance_rate).collect();
    (stats::mean(&rates), rates.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn compare(combined: &CombinedSample, reference: &Reference, grid_size: usize) -> Result<Vec<MarginalComparison>> {
    (0..combined.dim())
        .map(|j| {
            let col = combined.column(j);
            match reference {
                Reference::Chain(c) => compare_sample_marginals(&col, &c.column(j), grid_size),
                Reference::Analytic(m) => compare_with_analytic(&col, &m[j], grid_size),
            }
        })
        .collect()
}

struct Evaluated {
    cell: CellResult,
    densities: Vec<MarginalComparison>,
}

fn evaluate(
    k: usize,
    combined: &CombinedSample,
    sub: &SubposteriorResult,
    reference: &Reference,
    names: &[String],
    cfg: &ExperimentConfig,
    wall_seconds: f64,
    mut warnings: Vec<String>,
) -> Result<Evaluated> {
    let comparisons = compare(combined, reference, cfg.grid_size)?;
    let rep = report(&comparisons, names, cfg.grid_size);
    let (acc_mean, acc_min) = acceptance(sub);
    warnings.extend(combined.warnings.iter().cloned());
    for c in &sub.chains {
        warnings.extend(c.warnings.iter().map(|w| format!("shard {}: {w}", c.shard_index)));
    }
    Ok(Evaluated {
        cell: CellResult {
            k,
            method: combined.method,
            status: CellStatus::Ok,
            total_l2: Some(rep.total),
            total_l2_raw: Some(rep.total_raw),
            per_marginal: rep.per_marginal,
            per_marginal_raw: rep.per_marginal_raw,
            mean: combined.mean(),
            wall_seconds,
            acceptance_mean: Some(acc_mean),
            acceptance_min: Some(acc_min),
            warnings,
            error: None,
        },
        densities: comparisons,
    })
}

fn run_family<F: Family>(family: &F, data: Dataset<F::Row>, cfg: &ExperimentConfig, truth: Vec<f64>, data_summary: Option<String>) -> Result<ExperimentRun> {
    let names = family.names();
    info!("{}: computing reference", cfg.name());
    let (reference, reference_desc) = family.reference(&data, cfg).map_err(|e| e.context("reference posterior"))?;

    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    let mut seeds = Vec::new();
    for &k in &cfg.k {
        info!("{}: K = {k}", cfg.name());
        seeds.push(ShardSeeds {
            k,
            seeds: (0..k).map(|i| shard_seed(cfg.chain_seed, i)).collect(),
        });
        let mut art = KArtifacts {
            k,
            sub: None,
            cmc_sub: None,
            combined: Vec::new(),
            newton: None,
            center_gradient_norm: None,
            densities: Vec::new(),
        };
        let shards = match make_shards(&data, k, cfg.chain_seed) {
            Ok(s) => s,
            Err(e) => {
                rows.extend(cfg.combiners.iter().map(|&m| CellResult::failed(k, m, &e, 0.0)));
                artifacts.push(art);
                continue;
            }
        };

        let wants_ar = cfg.combiners.iter().any(|m| matches!(m, Method::Ar | Method::ArNewton));
        let mut ar_sub: Option<(std::result::Result<SubposteriorResult, Error>, f64)> = None;
        if wants_ar {
            let t = Instant::now();
            let sub = family.subposteriors(&shards, Scaling::Rescaled, cfg);
            ar_sub = Some((sub, elapsed(t)));
        }
        let mut cmc_sub: Option<(std::result::Result<SubposteriorResult, Error>, f64)> = None;
        if cfg.combiners.contains(&Method::Cmc) {
            let t = Instant::now();
            let sub = family.subposteriors(&shards, Scaling::TemperedPrior, cfg);
            cmc_sub = Some((sub, elapsed(t)));
        }

        for &method in &cfg.combiners {
            let sub_entry = match method {
                Method::Cmc => cmc_sub.as_ref(),
                _ => ar_sub.as_ref(),
            };
            let (sub, sample_time) = match sub_entry {
                Some((Ok(s), t)) => (s, *t),
                Some((Err(e), t)) => {
                    rows.push(CellResult::failed(k, method, e, *t));
                    continue;
                }
                None => unreachable!("subposteriors are run for every requested combiner"),
            };
            let t = Instant::now();
            let mut warnings = Vec::new();
            let combined = match method {
                Method::Ar => combine_ar(sub),
                Method::Cmc => combine_cmc(sub),
                Method::ArNewton => combine_ar(sub).and_then(|ar| {
                    let center = match family.newton(&shards, &ar.center, cfg) {
                        Some((Ok((c, trace)), grad_norm)) => {
                            if !trace.converged {
                                warnings.push(format!(
                                    "Newton did not reach tolerance in {} iterations",
                                    cfg.newton_iters
                                ));
                            }
                            art.center_gradient_norm = grad_norm(c.values()).ok();
                            art.newton = Some(trace);
                            c
                        }
                        Some((Err(e), _)) => {
                            warnings.push(format!("Newton refinement failed ({e}); using the AR center"));
                            ar.center.clone()
                        }
                        None => {
                            warnings.push("model has no Hessian; using the AR center".into());
                            ar.center.clone()
                        }
                    };
                    combine_ar_at(sub, &center, Method::ArNewton)
                }),
            };
            let outcome = combined.and_then(|c| {
                let wall = sample_time + elapsed(t);
                let ev = evaluate(k, &c, sub, &reference, &names, cfg, wall, warnings)?;
                Ok((c, ev))
            });
            match outcome {
                Ok((c, ev)) => {
                    rows.push(ev.cell);
                    art.densities.push((method, ev.densities));
                    art.combined.push(c);
                }
                Err(e) => rows.push(CellResult::failed(k, method, &e, sample_time + elapsed(t))),
            }
        }
        art.sub = ar_sub.and_then(|(s, _)| s.ok());
        art.cmc_sub = cmc_sub.and_then(|(s, _)| s.ok());
        artifacts.push(art);
    }

    let metadata = RunMetadata {
        name: cfg.name(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        names: names.clone(),
        n: data.n(),
        truth,
        reference: reference_desc,
        data_summary,
        shard_seeds: seeds,
        bandwidth_policy: BANDWIDTH_POLICY.into(),
        grid_size: cfg.grid_size,
        l2_mode: "marginal-sum; total_l2 sums per-marginal L2 with each parameter in units of its reference sd, \
                  total_l2_raw sums them in parameter units"
            .into(),
        burn_in: cfg.burn_in,
        reference_burn_in: cfg.reference_burn_in,
        newton_iters: cfg.newton_iters,
    };
    let reference_chain = match reference {
        Reference::Chain(c) => Some(c),
        Reference::Analytic(_) => None,
    };
    Ok(ExperimentRun {
        table: ResultTable { names, rows },
        metadata,
        reference_chain,
        artifacts,
    })
}

/// Runs every `(K, combiner)` cell of `cfg`. Cell failures are recorded in
/// the table; errors before the first cell (data, reference) are returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let ctx = |e: Error| e.context(format!("experiment '{}'", cfg.name()));
    if let Some(src) = &cfg.csv {
        let ing = ingest_csv(src, cfg.n_features.unwrap_or(0), cfg.n).map_err(ctx)?;
        let p = ing.data.rows()[0].x.len();
        let summary = format!(
            "{} rows from {}, {} features standardized, class balance {:.4} ({})",
            ing.data.n(),
            src.path.display(),
            ing.feature_means.len(),
            ing.class_balance,
            ing.label_rule
        );
        let fam = RwmFamily {
            model: LogisticModel::new(p),
            base_init: vec![0.0; p],
        };
        return run_family(&fam, ing.data, cfg, Vec::new(), Some(summary)).map_err(ctx);
    }
    let spec = cfg.generator();
    let truth = spec.truth();
    let data = generate(&spec).map_err(ctx)?;
    match (cfg.example, data) {
        (ExampleId::Gaussian, GeneratedData::Gaussian(d)) => {
            let fam = RwmFamily {
                model: GaussianModel::new(),
                base_init: GaussianModel::mle(d.rows()).to_vec(),
            };
            run_family(&fam, d, cfg, truth, None)
        }
        (ExampleId::Logistic, GeneratedData::Logistic(d)) => {
            let p = d.rows()[0].x.len();
            let fam = RwmFamily {
                model: LogisticModel::new(p),
                base_init: vec![0.0; p],
            };
            run_family(&fam, d, cfg, truth, None)
        }
        (ExampleId::BetaBernoulli, GeneratedData::Bernoulli(d)) => {
            let successes = d.rows().iter().filter(|&&y| y == 1).count();
            let fam = BetaFamily {
                bb: BetaBernoulli {
                    a0: cfg.prior_a0,
                    b0: cfg.prior_b0,
                },
            };
            run_family(&fam, d, cfg, truth, Some(format!("{successes} successes")))
        }
        (ExampleId::Mixture, GeneratedData::Mixture(d)) => {
            let init = match &cfg.init {
                Some(v) => MixtureParams::from_slice(v)?,
                None => mixture_start(d.rows())?,
            };
            let fam = MixtureFamily {
                model: MixtureModel { hyper: cfg.hyper() },
                init,
            };
            run_family(&fam, d, cfg, truth, None)
        }
        _ => unreachable!("generator output matches the example id"),
    }
    .map_err(ctx)
}
