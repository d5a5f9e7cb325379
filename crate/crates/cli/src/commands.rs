use esboot::bootstrap::{self, BootstrapContext};
use esboot::es_estimation::{asymptotic_interval, conditional_es, gamma_hat};
use esboot::experiments::{density_comparison, run_study, IntervalKind, Scenario, StudySummary};
use esboot::kde::Curve;
use esboot::{qmle, rng, AsymptoticInterval, EsEstimate, GammaHat, IntervalSet, VolatilityModel};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::config::{BootstrapConfig, DensityConfig, EsConfig, FitConfig, SimulateConfig, StudyConfig};
use crate::csvio::{num, read_returns, write_rows};
use crate::{Cli, CliError};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn simulate(cfg: &SimulateConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let mut rng = rng::stream(seed, rng::tag::SIMULATE, 0);
    let path = cfg.theta.simulate(&cfg.dist, cfg.n, cfg.burn_in, &mut rng)?;
    let out = cli.out.join("simulate.csv");
    let n = path.returns.len();
    let rows = (0..=n).map(|t| {
        let eps = path.returns.get(t).map_or(String::new(), |&e| num(e));
        vec![(t + 1).to_string(), eps, num(path.sigma2[t])]
    });
    write_rows(&out, &["t", "epsilon", "sigma2_true"], rows)?;
    Ok(vec![out])
}

pub fn fit(cfg: &FitConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let returns = read_returns(&cfg.input)?;
    let fit = qmle::fit(&returns, &cfg.qmle)?;
    let out = cli.out.join("fit.json");
    write_json(&out, &fit)?;
    Ok(vec![out])
}

#[derive(Serialize)]
struct EsReport {
    n: usize,
    theta_hat: esboot::GarchParams,
    es: EsEstimate,
    gamma_hat: GammaHat,
    asymptotic_interval: AsymptoticInterval,
    gamma: f64,
}

pub fn es(cfg: &EsConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let returns = read_returns(&cfg.input)?;
    let fit = qmle::fit(&returns, &cfg.qmle)?;
    let es = conditional_es(&fit, cfg.alpha)?;
    let g = gamma_hat(&fit, cfg.alpha)?;
    let asy = asymptotic_interval(&fit, &es, &g, cfg.gamma)?;
    let out = cli.out.join("es.json");
    write_json(
        &out,
        &EsReport { n: fit.n(), theta_hat: fit.theta_hat, es, gamma_hat: g, asymptotic_interval: asy, gamma: cfg.gamma },
    )?;
    Ok(vec![out])
}

#[derive(Serialize)]
struct BootstrapReport {
    n: usize,
    b: usize,
    failed: usize,
    seed: u64,
    es: EsEstimate,
    intervals: IntervalSet,
}

pub fn bootstrap(cfg: &BootstrapConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let returns = read_returns(&cfg.input)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let fit = qmle::fit(&returns, &cfg.qmle)?;
    let es = conditional_es(&fit, cfg.alpha)?;
    let ctx = BootstrapContext::new(&returns, fit, cfg.alpha, cfg.qmle.clone())?;
    let reps = bootstrap::run(&ctx, cfg.b, seed, cli.workers)?;
    let intervals = bootstrap::intervals(&reps, es.es_hat, ctx.n(), cfg.gamma)?;

    let csv_path = cli.out.join("replicates.csv");
    let rows = reps.iter().enumerate().map(|(i, r)| {
        vec![
            i.to_string(),
            num(r.theta_star.omega),
            num(r.theta_star.alpha),
            num(r.theta_star.beta),
            num(r.mu_star),
            num(r.es_star),
            r.converged.to_string(),
        ]
    });
    write_rows(&csv_path, &["index", "omega", "alpha", "beta", "mu_star", "es_star", "converged"], rows)?;
    let json_path = cli.out.join("bootstrap.json");
    let failed = reps.iter().filter(|r| !r.converged).count();
    write_json(&json_path, &BootstrapReport { n: ctx.n(), b: cfg.b, failed, seed, es, intervals })?;
    Ok(vec![json_path, csv_path])
}

pub const STUDY_HEADER: [&str; 8] =
    ["scenario_id", "n", "interval_type", "avg_coverage_pct", "below_pct", "above_pct", "avg_length", "excluded_count"];

pub fn study_rows(summaries: &[StudySummary], kinds: &[IntervalKind]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in summaries {
        for &k in kinds {
            if let Some(st) = s.get(k) {
                rows.push(vec![
                    s.scenario_id.clone(),
                    s.n.to_string(),
                    k.code().to_string(),
                    num(st.coverage_pct),
                    num(st.below_pct),
                    num(st.above_pct),
                    num(st.avg_length),
                    s.excluded.to_string(),
                ]);
            }
        }
    }
    rows
}

fn prepare(mut sc: Scenario, cli: &Cli) -> Scenario {
    if cli.full_scale {
        sc = sc.full_scale();
    }
    if let Some(seed) = cli.seed {
        sc.master_seed = seed;
    }
    sc
}

pub fn study(cfg: &StudyConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let scenarios: Vec<Scenario> = cfg.expand()?.into_iter().map(|s| prepare(s, cli)).collect();
    let mut summaries = Vec::new();
    for sc in &scenarios {
        summaries.push(run_study(sc, cli.workers)?.summary);
    }
    let csv_path = cli.out.join("study.csv");
    write_rows(&csv_path, &STUDY_HEADER, study_rows(&summaries, &IntervalKind::BOOTSTRAP))?;
    let asy_path = cli.out.join("study_asymptotic.csv");
    write_rows(&asy_path, &STUDY_HEADER, study_rows(&summaries, &[IntervalKind::Asymptotic]))?;
    let json_path = cli.out.join("study.json");
    write_json(&json_path, &summaries)?;
    Ok(vec![csv_path, asy_path, json_path])
}

#[derive(Serialize)]
struct DensityReport {
    ks: f64,
    excluded: usize,
    simulated_mode: f64,
    bootstrap_mode: f64,
    simulated_bandwidth: f64,
    bootstrap_bandwidth: f64,
    simulated: Vec<f64>,
    bootstrap: Vec<f64>,
}

fn write_curve(path: &Path, c: &Curve) -> Result<(), CliError> {
    write_rows(path, &["x", "density"], c.x.iter().zip(&c.density).map(|(x, d)| vec![num(*x), num(*d)]))
}

pub fn density(cfg: &DensityConfig, cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let sc = prepare(cfg.scenario.clone(), cli);
    let d = bootstrap::with_workers(cli.workers, || density_comparison(&sc, cfg.grid))?;
    let sim = cli.out.join("density_simulated.csv");
    let boot = cli.out.join("density_bootstrap.csv");
    write_curve(&sim, &d.simulated_curve)?;
    write_curve(&boot, &d.bootstrap_curve)?;
    let json_path = cli.out.join("density.json");
    write_json(
        &json_path,
        &DensityReport {
            ks: d.ks,
            excluded: d.excluded,
            simulated_mode: d.simulated_curve.mode(),
            bootstrap_mode: d.bootstrap_curve.mode(),
            simulated_bandwidth: d.simulated_curve.bandwidth,
            bootstrap_bandwidth: d.bootstrap_curve.bandwidth,
            simulated: d.simulated,
            bootstrap: d.bootstrap,
        },
    )?;
    Ok(vec![sim, boot, json_path])
}
