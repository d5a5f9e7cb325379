//! Fixed-design residual bootstrap for the conditional ES.
//!
//! Each replicate resamples the QML residuals, rescales them by the fitted
//! volatility path of the original sample and re-estimates θ with that path
//! held as the design: inside the bootstrap criterion `σ̃_t(θ)` is always
//! filtered from the original returns. Percentile-type intervals are then
//! read off the distribution of `√n (ES* − ÊS)`.

use crate::error::{Error, Result};
use crate::es_estimation::{conditional_es, mu_hat};
use crate::qmle::{maximize, FitResult, Objective, QmleOptions};
use crate::rng::{self, RngStream};
use crate::volatility::{GarchParams, VolatilityModel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_REPLICATES: usize = 100;
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Initial simplex edges for the warm-started bootstrap fit, in
/// `(ω/s², α, β)` coordinates.
pub const WARM_STEPS: [f64; 3] = [0.02, 0.02, 0.02];

#[derive(Debug, Clone)]
pub struct BootstrapContext {
    returns: Vec<f64>,
    fit: FitResult,
    sigma: Vec<f64>,
    alpha: f64,
    es_hat: f64,
    opts: QmleOptions,
}

impl BootstrapContext {
    pub fn new(returns: &[f64], fit: FitResult, alpha: f64, opts: QmleOptions) -> Result<Self> {
        opts.validate()?;
        let n = returns.len();
        if fit.residuals.len() != n || fit.filter_at_opt.sigma2.len() != n + 1 {
            return Err(Error::invalid("fit does not belong to the return series"));
        }
        let es_hat = conditional_es(&fit, alpha)?.es_hat;
        let sigma = fit.filter_at_opt.sigma2[..n].iter().map(|v| v.sqrt()).collect();
        Ok(Self { returns: returns.to_vec(), fit, sigma, alpha, es_hat, opts })
    }

    pub fn n(&self) -> usize {
        self.returns.len()
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn fit(&self) -> &FitResult {
        &self.fit
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn es_hat(&self) -> f64 {
        self.es_hat
    }

    /// `η*_t`, drawn uniformly with replacement from the residuals.
    pub fn draw_innovations(&self, rng: &mut RngStream) -> Vec<f64> {
        let eta = &self.fit.residuals;
        (0..eta.len()).map(|_| eta[rng.random_range(0..eta.len())]).collect()
    }

    /// `ε*_t = σ̃_t(θ̂) η*_t`.
    pub fn bootstrap_returns(&self, eta_star: &[f64]) -> Vec<f64> {
        self.sigma.iter().zip(eta_star).map(|(s, e)| s * e).collect()
    }

    /// Bootstrap criterion: design from the original returns, data `ε*`.
    pub fn objective(&self, eps_star: &[f64]) -> Result<Objective> {
        Objective::new(&self.returns, eps_star, self.opts.init)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReplicate {
    pub theta_star: GarchParams,
    pub mu_star: f64,
    /// `μ̂* · σ̃_{n+1}(θ̂*)`.
    pub es_star: f64,
    pub tail_count: usize,
    pub converged: bool,
}

pub fn bootstrap_replicate(ctx: &BootstrapContext, rng: &mut RngStream) -> Result<BootstrapReplicate> {
    let eta_star = ctx.draw_innovations(rng);
    let eps_star = ctx.bootstrap_returns(&eta_star);
    let objective = ctx.objective(&eps_star)?;
    let opt = maximize(&objective, &ctx.opts, &[ctx.fit.theta_hat], WARM_STEPS)?;
    let theta_star = opt.theta;
    let sigma2 = theta_star.filter(&ctx.returns, ctx.opts.init)?.sigma2;
    let n = ctx.n();
    let resid: Vec<f64> = eps_star.iter().zip(&sigma2).map(|(e, v)| e / v.sqrt()).collect();
    let tm = mu_hat(&resid, ctx.alpha)?;
    Ok(BootstrapReplicate {
        theta_star,
        mu_star: tm.mu_hat,
        es_star: tm.mu_hat * sigma2[n].sqrt(),
        tail_count: tm.tail_count,
        converged: opt.converged,
    })
}

fn check_failures(reps: &[BootstrapReplicate]) -> Result<()> {
    let failed = reps.iter().filter(|r| !r.converged).count();
    if failed as f64 > MAX_FAILURE_RATE * reps.len() as f64 {
        return Err(Error::ReplicateFailures { failed, total: reps.len() });
    }
    Ok(())
}

/// Runs `b` replicates on the current rayon pool. Replicate `i` draws from
/// the stream `(seed, BOOTSTRAP, i)`; the output is ordered by `i`.
pub fn run_replicates(ctx: &BootstrapContext, b: usize, seed: u64) -> Result<Vec<BootstrapReplicate>> {
    if b < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { required: MIN_REPLICATES, got: b });
    }
    let reps = (0..b)
        .into_par_iter()
        .map(|i| bootstrap_replicate(ctx, &mut rng::stream(seed, rng::tag::BOOTSTRAP, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    check_failures(&reps)?;
    Ok(reps)
}

/// Runs `b` replicates on a dedicated pool of `workers` threads
/// (`0` = rayon default).
pub fn run(ctx: &BootstrapContext, b: usize, seed: u64, workers: usize) -> Result<Vec<BootstrapReplicate>> {
    with_workers(workers, || run_replicates(ctx, b, seed))
}

pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub length: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    /// Equal-tailed percentile.
    pub ep: Interval,
    /// Reversed tails.
    pub rt: Interval,
    /// Symmetric.
    pub sy: Interval,
    pub gamma: f64,
    pub es_hat: f64,
    pub b_effective: usize,
}

/// Order statistic of rank `⌈pm⌉` of a sorted sample.
pub fn upper_rank_quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let r = ((p * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    sorted[r - 1]
}

pub fn intervals(replicates: &[BootstrapReplicate], es_hat: f64, n: usize, gamma: f64) -> Result<IntervalSet> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let rn = (n as f64).sqrt();
    let mut d: Vec<f64> = replicates.iter().filter(|r| r.converged).map(|r| rn * (r.es_star - es_hat)).collect();
    if d.len() < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { required: MIN_REPLICATES, got: d.len() });
    }
    d.sort_unstable_by(f64::total_cmp);
    let g_lo = upper_rank_quantile(&d, gamma / 2.0);
    let g_hi = upper_rank_quantile(&d, 1.0 - gamma / 2.0);
    let mut a: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    a.sort_unstable_by(f64::total_cmp);
    let h = upper_rank_quantile(&a, 1.0 - gamma);

    let length = (g_hi - g_lo) / rn;
    Ok(IntervalSet {
        ep: Interval { lo: es_hat - g_hi / rn, hi: es_hat - g_lo / rn, length },
        rt: Interval { lo: es_hat + g_lo / rn, hi: es_hat + g_hi / rn, length },
        sy: Interval { lo: es_hat - h / rn, hi: es_hat + h / rn, length: 2.0 * h / rn },
        gamma,
        es_hat,
        b_effective: d.len(),
    })
}
