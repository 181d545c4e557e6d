//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use subpost::combine::{combine_ar, combine_cmc, gaussian_kl, tv_bound_from_kl, Method};
use subpost::data::{generate, ExampleId, GeneratedData};
use subpost::experiment::{run_experiment, ExperimentConfig, ExperimentRun};
use subpost::metrics::{fisher_covariance_check, l2_between_densities, MarginalComparison};
use subpost::model::{Dataset, Scaling};
use subpost::models::{BetaBernoulli, GaussianModel};
use subpost::sampler::{exact_beta_sample, RwmConfig};
use subpost::shard::{make_shards, run_rwm_subposteriors, run_subposteriors, SubposteriorResult};
use subpost::stats::covariance;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Every density grid produced by a run, for the normalization check.
#[derive(Default)]
struct Densities(Vec<(String, f64)>);

impl Densities {
    fn record(&mut self, tag: &str, run: &ExperimentRun) {
        for art in &run.artifacts {
            for (m, cmps) in &art.densities {
                for (j, c) in cmps.iter().enumerate() {
                    self.push(format!("{tag} K={} {} #{j}", art.k, m.label()), c);
                }
            }
        }
    }

    fn push(&mut self, label: String, c: &MarginalComparison) {
        self.0.push((label.clone(), c.left_density("kde").integral()));
    }
}

fn bernoulli_cfg(p: f64, n: usize, draws: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExampleId::BetaBernoulli, n, vec![50], vec![Method::Ar, Method::Cmc], draws);
    c.truth = vec![p];
    c
}

fn totals(run: &ExperimentRun, k: usize, m: Method) -> (f64, f64) {
    let cell = run.table.cell(k, m).expect("cell present");
    (cell.total_l2.unwrap_or(f64::NAN), cell.total_l2_raw.unwrap_or(f64::NAN))
}

fn criterion_1(dens: &mut Densities) -> Outcome {
    let t = Instant::now();
    let run = run_experiment(&bernoulli_cfg(0.1, 100_000, 100_000)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    dens.record("beta p=0.1", &run);
    let (ar, ar_raw) = totals(&run, 50, Method::Ar);
    let (cmc, cmc_raw) = totals(&run, 50, Method::Cmc);
    outcome(
        ar <= 5e-4 && ar <= cmc && secs < 120.0,
        format!("AR L2 {ar:.3e} (raw {ar_raw:.3e}) vs CMC {cmc:.3e} (raw {cmc_raw:.3e}); {secs:.1} s"),
    )
}

fn criterion_2(dens: &mut Densities) -> Outcome {
    let run = run_experiment(&bernoulli_cfg(0.001, 100_000, 100_000)).unwrap();
    dens.record("beta p=0.001", &run);
    let (ar, ar_raw) = totals(&run, 50, Method::Ar);
    let (cmc, cmc_raw) = totals(&run, 50, Method::Cmc);
    outcome(
        5.0 * ar <= cmc && 5.0 * ar_raw <= cmc_raw,
        format!(
            "AR {ar:.3e} vs CMC {cmc:.3e} ({:.1}x); raw AR {ar_raw:.3e} vs CMC {cmc_raw:.3e} ({:.1}x)",
            cmc / ar,
            cmc_raw / ar_raw
        ),
    )
}

fn criterion_3(dens: &mut Densities) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExampleId::Gaussian, 100_000, vec![20], vec![Method::Ar], 20_000);
    cfg.burn_in = 2_000;
    cfg.reference_draws = 100_000;
    cfg.reference_burn_in = 2_000;
    let run = run_experiment(&cfg).unwrap();
    dens.record("gaussian", &run);
    let (ar, ar_raw) = totals(&run, 20, Method::Ar);
    let GeneratedData::Gaussian(data) = generate(&cfg.generator()).unwrap() else {
        unreachable!()
    };
    let shards = make_shards(&data, 20, cfg.chain_seed).unwrap();
    let art = &run.artifacts[0];
    let check = fisher_covariance_check(
        &GaussianModel::new(),
        &shards,
        art.sub.as_ref().unwrap(),
        art.combined(Method::Ar).unwrap(),
        cfg.n,
    )
    .unwrap();
    outcome(
        ar <= 2e-3 && check.covariance_vs_inverse <= 0.15,
        format!(
            "AR L2 {ar:.3e} (raw {ar_raw:.3e}); N cov vs inverse information {:.1}%",
            100.0 * check.covariance_vs_inverse
        ),
    )
}

fn criterion_4(dens: &mut Densities) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExampleId::Logistic, 20_000, vec![20], vec![Method::Ar, Method::ArNewton], 10_000);
    cfg.burn_in = 2_000;
    cfg.reference_draws = 40_000;
    cfg.reference_burn_in = 4_000;
    cfg.newton_iters = 5;
    let run = run_experiment(&cfg).unwrap();
    dens.record("logistic", &run);
    let reference = run.reference_chain.as_ref().unwrap();
    let ref_mean = reference.mean();
    let ref_sd: Vec<f64> = reference.covariance().diagonal().iter().map(|v| v.sqrt()).collect();
    let art = &run.artifacts[0];
    let z = |m: Method| -> Vec<f64> {
        let mean = art.combined(m).unwrap().mean();
        mean.iter().zip(&ref_mean).zip(&ref_sd).map(|((a, b), s)| (a - b).abs() / s).collect()
    };
    let refined = z(Method::ArNewton);
    let plain = z(Method::Ar);
    let grad = art.center_gradient_norm.unwrap_or(f64::INFINITY);
    let worst = refined.iter().cloned().fold(0.0, f64::max);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
    outcome(
        worst <= 3.0 && grad < 1e-6,
        format!(
            "refined center: |mean - ref| / sd = [{}], gradient norm {grad:.2e}; unrefined AR: [{}]",
            fmt(&refined),
            fmt(&plain)
        ),
    )
}

fn criterion_5(dens: &mut Densities) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExampleId::Mixture, 100_000, vec![20], vec![Method::Ar], 2_000);
    cfg.burn_in = 500;
    cfg.reference_draws = 4_000;
    cfg.reference_burn_in = 500;
    let run = run_experiment(&cfg).unwrap();
    dens.record("mixture", &run);
    let cell = run.table.cell(20, Method::Ar).unwrap();
    let m = &cell.mean;
    let alpha_ok = (m[0] / 2.0 - 1.0).abs() <= 0.05;
    let beta_ok = (m[1] / 5.0 - 1.0).abs() <= 0.05;
    let p_ok = (m[4] - 0.05).abs() <= 0.01;
    let worst = cell.per_marginal.iter().cloned().fold(0.0, f64::max);
    let worst_raw = cell.per_marginal_raw.iter().cloned().fold(0.0, f64::max);
    outcome(
        alpha_ok && beta_ok && p_ok && worst <= 5e-2,
        format!(
            "means alpha {:.4} beta {:.4} p {:.4}; max per-marginal L2 {worst:.3e} (raw {worst_raw:.3e})",
            m[0], m[1], m[4]
        ),
    )
}

fn criterion_6(dens: &Densities) -> Outcome {
    let mut errs = Vec::new();
    let kl = gaussian_kl(&[1.0, 2.0], &[0.0, 0.0], &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0])).unwrap();
    // 0.5 * (1/2 + 4/4)
    if (kl - 0.75).abs() > 1e-12 {
        errs.push(format!("gaussian_kl {kl}"));
    }
    let tv = tv_bound_from_kl(0.0625).unwrap();
    if (tv - 0.5).abs() > 1e-12 {
        errs.push(format!("tv bound {tv}"));
    }
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let l2 = l2_between_densities(phi, |x| phi(x - 1.0), -12.0, 13.0, 20_001);
    if (l2 - 0.12477).abs() > 1e-3 {
        errs.push(format!("normal L2 {l2}"));
    }
    let worst = dens
        .0
        .iter()
        .map(|(l, v)| (l, (v - 1.0).abs()))
        .fold((None, 0.0), |acc, (l, e)| if e > acc.1 { (Some(l), e) } else { acc });
    if worst.1 > 1e-3 {
        errs.push(format!("KDE mass off by {:.2e} for {}", worst.1, worst.0.unwrap()));
    }
    outcome(
        errs.is_empty(),
        format!(
            "KL {kl}, TV {tv}, normal L2 {l2:.5}, worst KDE mass error {:.1e} over {} grids{}",
            worst.1,
            dens.0.len(),
            if errs.is_empty() { String::new() } else { format!("; failures: {}", errs.join(", ")) }
        ),
    )
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let mut errs = Vec::new();
    let bb = BetaBernoulli::default();
    let GeneratedData::Bernoulli(data) = generate(&bernoulli_cfg(0.1, 10_000, 1).generator()).unwrap() else {
        unreachable!()
    };
    let exact = |shards: &[subpost::model::DataShard<u8>], workers: usize| -> SubposteriorResult {
        run_subposteriors(shards, vec!["p".into()], 3, workers, |s, seed| {
            exact_beta_sample(&bb.exact_subposterior(s, Scaling::Rescaled)?, 5000, seed)
        })
        .unwrap()
    };

    // one shard: both combiners return the chain itself
    let whole = make_shards(&data, 1, 0).unwrap();
    let single = exact(&whole, 1);
    let chain = single.chains[0].as_slice();
    let e_ar = max_abs(combine_ar(&single).unwrap().as_slice(), chain);
    let e_cmc = max_abs(combine_cmc(&single).unwrap().as_slice(), chain);
    if e_ar != 0.0 || e_cmc > 1e-12 {
        errs.push(format!("K=1 identity AR {e_ar:.1e} CMC {e_cmc:.1e}"));
    }

    // recentring and rigid shift
    let shards = make_shards(&data, 10, 0).unwrap();
    let sub = exact(&shards, 2);
    let ar = combine_ar(&sub).unwrap();
    let bar = sub.shard_means.iter().map(|m| m.values()[0]).sum::<f64>() / 10.0;
    let e_mean = (ar.mean()[0] - bar).abs();
    if e_mean > 1e-10 {
        errs.push(format!("grand mean off by {e_mean:.1e}"));
    }
    let mut e_cov: f64 = 0.0;
    let mut offset = 0;
    for (c, cov) in sub.chains.iter().zip(&sub.shard_covs) {
        let block = &ar.as_slice()[offset..offset + c.len()];
        e_cov = e_cov.max((covariance(block, 1) - cov).abs().max() / cov.abs().max());
        offset += c.len();
    }
    if e_cov > 1e-12 {
        errs.push(format!("shift changed covariance by {e_cov:.1e}"));
    }

    // parallel and sequential shard runs agree bit for bit
    let model = GaussianModel::new();
    let GeneratedData::Gaussian(g) = generate(&ExperimentConfig::new(ExampleId::Gaussian, 4000, vec![8], vec![Method::Ar], 1).generator()).unwrap() else {
        unreachable!()
    };
    let gshards = make_shards(&g, 8, 1).unwrap();
    let rc = RwmConfig::new(3000, 500, GaussianModel::mle(g.rows()).to_vec());
    let seq = run_rwm_subposteriors(&model, &gshards, &rc, Scaling::Rescaled, 5, 1).unwrap();
    let par = run_rwm_subposteriors(&model, &gshards, &rc, Scaling::Rescaled, 5, 4).unwrap();
    if seq.chains.iter().zip(&par.chains).any(|(a, b)| a.as_slice() != b.as_slice()) {
        errs.push("parallel and sequential shard runs differ".into());
    }

    // full experiment re-run
    let mut cfg = ExperimentConfig::new(ExampleId::Gaussian, 4000, vec![4, 8], vec![Method::Ar, Method::ArNewton, Method::Cmc], 2000);
    cfg.burn_in = 500;
    cfg.reference_draws = 8000;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let same_table = a.table.rows.iter().zip(&b.table.rows).all(|(x, y)| {
        x.total_l2 == y.total_l2 && x.per_marginal_raw == y.per_marginal_raw && x.mean == y.mean
    });
    let same_draws = a
        .artifacts
        .iter()
        .zip(&b.artifacts)
        .all(|(x, y)| x.combined.iter().zip(&y.combined).all(|(p, q)| p.as_slice() == q.as_slice()));
    if !(same_table && same_draws) {
        errs.push("experiment re-run is not bit-identical".into());
    }

    outcome(
        errs.is_empty(),
        if errs.is_empty() {
            format!("K=1 AR {e_ar:.0e} CMC {e_cmc:.1e}; grand mean {e_mean:.1e}; shift cov {e_cov:.1e}; reruns identical")
        } else {
            errs.join("; ")
        },
    )
}

/// Relative gap between `N var(AR)` and `p(1 - p)` at the combined center,
/// with a delta-method standard error from the pooled draws.
fn covariance_gap(n: usize, seed: u64) -> (f64, f64) {
    let bb = BetaBernoulli::default();
    let mut cfg = bernoulli_cfg(0.1, n, 1);
    cfg.data_seed = seed;
    let GeneratedData::Bernoulli(data) = generate(&cfg.generator()).unwrap() else {
        unreachable!()
    };
    let data: Dataset<u8> = data;
    let shards = make_shards(&data, 50, 11).unwrap();
    let sub = run_subposteriors(&shards, vec!["p".into()], 13, 1, |s, seed| {
        exact_beta_sample(&bb.exact_subposterior(s, Scaling::Rescaled)?, 20_000, seed)
    })
    .unwrap();
    let ar = combine_ar(&sub).unwrap();
    let check = fisher_covariance_check(&bb.model(), &shards, &sub, &ar, n).unwrap();
    let x = ar.column(0);
    let m = ar.mean()[0];
    let var = check.scaled_covariance[0][0] / n as f64;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / x.len() as f64;
    let se_var = ((m4 - var * var) / x.len() as f64).sqrt();
    let se = se_var * n as f64 / check.inverse_information[0][0];
    (check.covariance_vs_inverse, se)
}

fn criterion_8() -> Outcome {
    let ns = [1_000usize, 10_000, 100_000];
    let gaps: Vec<(f64, f64)> = ns.iter().map(|&n| covariance_gap(n, 21)).collect();
    let monotone = gaps
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt());
    let text = ns
        .iter()
        .zip(&gaps)
        .map(|(n, (g, se))| format!("N={n}: {:.2}% (se {:.2}%)", 100.0 * g, 100.0 * se))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(monotone, text)
}

fn main() {
    let started = Instant::now();
    let mut dens = Densities::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 Beta-Bernoulli AR vs CMC", criterion_1(&mut dens)));
    results.push(("2 rare-event ordering", criterion_2(&mut dens)));
    results.push(("3 Gaussian L2 and information check", criterion_3(&mut dens)));
    results.push(("4 logistic refined center", criterion_4(&mut dens)));
    results.push(("5 mixture means and marginals", criterion_5(&mut dens)));
    results.push(("6 closed forms and KDE mass", criterion_6(&dens)));
    results.push(("7 structural invariants", criterion_7()));
    results.push(("8 covariance gap shrinks with N", criterion_8()));

    println!();
    let mut failed = 0;
    for (name, o) in &results {
        println!("acceptance {:<40} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0} s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
