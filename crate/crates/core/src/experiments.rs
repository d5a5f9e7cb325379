//! Monte Carlo coverage studies for the bootstrap ES intervals.
//!
//! A [`Scenario`] fixes the data generating process and the interval
//! settings. Trajectory `i` simulates a path from the stream
//! `(seed, SIMULATE, i)`, estimates the conditional ES, builds the
//! asymptotic and bootstrap intervals (bootstrap seed `(seed, REPLICATE, i)`)
//! and classifies the true conditional ES against each interval.

use crate::bootstrap::{self, BootstrapContext, Interval, IntervalSet};
use crate::distributions::InnovationDist;
use crate::error::{Error, Result};
use crate::es_estimation::{asymptotic_interval, conditional_es, gamma_hat, mu_hat, AsymptoticInterval};
use crate::kde::{self, Curve};
use crate::qmle::{self, QmleOptions};
use crate::rng::{self, tag};
use crate::volatility::{GarchParams, VolatilityModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_EXCLUSION_RATE: f64 = 0.05;
pub const DESK_REPLICATES: usize = 500;
pub const FULL_REPLICATES: usize = 2000;

/// `ω0 = 0.05 · 20² / 252`.
pub const OMEGA0: f64 = 0.05 * 400.0 / 252.0;

pub fn high_persistence() -> GarchParams {
    GarchParams { omega: OMEGA0, alpha: 0.15, beta: 0.8 }
}

pub fn low_persistence() -> GarchParams {
    GarchParams { omega: OMEGA0, alpha: 0.4, beta: 0.55 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub id: String,
    pub theta0: GarchParams,
    pub dist: InnovationDist,
    pub alpha: f64,
    pub n: usize,
    pub gamma: f64,
    /// Bootstrap replicates per trajectory; `0` skips the bootstrap.
    pub b: usize,
    /// Monte Carlo trajectories.
    pub s: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub qmle: QmleOptions,
}

fn default_burn_in() -> usize {
    1000
}

impl Scenario {
    /// Desk-scale scenario (`S = B = 500`, burn-in 1000, seed 0).
    pub fn desk(theta0: GarchParams, dist: InnovationDist, alpha: f64, n: usize, gamma: f64) -> Self {
        Self {
            id: String::new(),
            theta0,
            dist,
            alpha,
            n,
            gamma,
            b: DESK_REPLICATES,
            s: DESK_REPLICATES,
            burn_in: default_burn_in(),
            master_seed: 0,
            qmle: QmleOptions::default(),
        }
    }

    pub fn full_scale(mut self) -> Self {
        self.b = FULL_REPLICATES;
        self.s = FULL_REPLICATES;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// The explicit id, or one derived from the settings.
    pub fn label(&self) -> String {
        if !self.id.is_empty() {
            return self.id.clone();
        }
        let p = if self.theta0 == high_persistence() {
            "high".to_string()
        } else if self.theta0 == low_persistence() {
            "low".to_string()
        } else {
            format!("ab{:.3}", self.theta0.persistence())
        };
        format!("{p}-{}-a{}-g{}", self.dist.label(), self.alpha, self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.persistence() < 1.0) {
            return Err(Error::invalid(format!(
                "theta0 must satisfy alpha + beta < 1, got {}",
                self.theta0.persistence()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::invalid("ES level alpha must lie in (0, 0.5)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma must lie in (0, 1)"));
        }
        if self.n < qmle::MIN_OBSERVATIONS {
            return Err(Error::InsufficientData { required: qmle::MIN_OBSERVATIONS, got: self.n });
        }
        if self.b != 0 && self.b < bootstrap::MIN_REPLICATES {
            return Err(Error::TooFewReplicates { required: bootstrap::MIN_REPLICATES, got: self.b });
        }
        if self.s == 0 {
            return Err(Error::invalid("at least one trajectory is required"));
        }
        self.qmle.validate()
    }
}

/// Preset grids: both persistence settings for each sample size.
/// Grid 1 = t6, α 0.05, γ 0.10; 2 = normal, α 0.05, γ 0.10;
/// 3 = t6, α 0.01, γ 0.10; 4 = t6, α 0.05, γ 0.05.
pub fn table_scenarios(table: u8, ns: &[usize]) -> Result<Vec<Scenario>> {
    let t6 = InnovationDist::student_t(6.0)?;
    let (dist, alpha, gamma) = match table {
        1 => (t6, 0.05, 0.10),
        2 => (InnovationDist::normal(), 0.05, 0.10),
        3 => (t6, 0.01, 0.10),
        4 => (t6, 0.05, 0.05),
        _ => return Err(Error::invalid(format!("no table {table}; expected 1-4"))),
    };
    let mut out = Vec::new();
    for theta0 in [low_persistence(), high_persistence()] {
        for &n in ns {
            out.push(Scenario::desk(theta0, dist, alpha, n, gamma));
        }
    }
    Ok(out)
}

pub const TABLE_SAMPLE_SIZES: [usize; 4] = [500, 1000, 5000, 10000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Inside,
    /// True ES below the lower bound.
    Below,
    /// True ES above the upper bound.
    Above,
}

pub fn classify(lo: f64, hi: f64, truth: f64) -> Outcome {
    if truth < lo {
        Outcome::Below
    } else if truth > hi {
        Outcome::Above
    } else {
        Outcome::Inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// `μ_α σ_{n+1}(θ0)`.
    pub true_es: f64,
    pub mu_true: f64,
    pub es_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub theta_hat: Option<GarchParams>,
    pub iterations: usize,
    pub interior: bool,
    pub intervals: Option<IntervalSet>,
    pub asymptotic: Option<AsymptoticInterval>,
    /// Why the trajectory was excluded, if it was.
    pub excluded: Option<String>,
}

impl TrajectoryRecord {
    pub fn outcome(&self, kind: IntervalKind) -> Option<Outcome> {
        let (lo, hi) = self.bounds(kind)?;
        Some(classify(lo, hi, self.true_es))
    }

    pub fn bounds(&self, kind: IntervalKind) -> Option<(f64, f64)> {
        let pick = |i: Interval| (i.lo, i.hi);
        match kind {
            IntervalKind::Ep => self.intervals.map(|s| pick(s.ep)),
            IntervalKind::Rt => self.intervals.map(|s| pick(s.rt)),
            IntervalKind::Sy => self.intervals.map(|s| pick(s.sy)),
            IntervalKind::Asymptotic => self.asymptotic.map(|a| (a.lo, a.hi)),
        }
    }

    pub fn length(&self, kind: IntervalKind) -> Option<f64> {
        match kind {
            IntervalKind::Ep => self.intervals.map(|s| s.ep.length),
            IntervalKind::Rt => self.intervals.map(|s| s.rt.length),
            IntervalKind::Sy => self.intervals.map(|s| s.sy.length),
            IntervalKind::Asymptotic => self.asymptotic.map(|a| a.length()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalKind {
    #[serde(rename = "EP")]
    Ep,
    #[serde(rename = "RT")]
    Rt,
    #[serde(rename = "SY")]
    Sy,
    #[serde(rename = "ASY")]
    Asymptotic,
}

impl IntervalKind {
    pub const BOOTSTRAP: [IntervalKind; 3] = [IntervalKind::Ep, IntervalKind::Rt, IntervalKind::Sy];

    pub fn code(self) -> &'static str {
        match self {
            IntervalKind::Ep => "EP",
            IntervalKind::Rt => "RT",
            IntervalKind::Sy => "SY",
            IntervalKind::Asymptotic => "ASY",
        }
    }
}

fn excluded(index: usize, true_es: f64, mu_true: f64, why: String) -> TrajectoryRecord {
    TrajectoryRecord {
        index,
        true_es,
        mu_true,
        es_hat: None,
        mu_hat: None,
        theta_hat: None,
        iterations: 0,
        interior: false,
        intervals: None,
        asymptotic: None,
        excluded: Some(why),
    }
}

/// One simulate, fit, estimate and bootstrap pass. Estimation failures give
/// an excluded record; only invalid scenarios are errors.
pub fn run_trajectory(scenario: &Scenario, index: usize) -> Result<TrajectoryRecord> {
    let sc = scenario;
    let mut rng = rng::stream(sc.master_seed, tag::SIMULATE, index as u64);
    let path = sc.theta0.simulate(&sc.dist, sc.n, sc.burn_in, &mut rng)?;
    let mu_true = sc.dist.tail_quantities_closed(sc.alpha)?.mu;
    let true_es = mu_true * path.sigma2[sc.n].sqrt();

    let fit = match qmle::fit(&path.returns, &sc.qmle) {
        Ok(f) if f.converged => f,
        Ok(_) => return Ok(excluded(index, true_es, mu_true, "QML fit did not converge".into())),
        Err(e) => return Ok(excluded(index, true_es, mu_true, e.to_string())),
    };
    let es = match conditional_es(&fit, sc.alpha) {
        Ok(es) => es,
        Err(e) => return Ok(excluded(index, true_es, mu_true, e.to_string())),
    };
    let asymptotic = gamma_hat(&fit, sc.alpha)
        .and_then(|g| asymptotic_interval(&fit, &es, &g, sc.gamma))
        .ok();

    let mut record = TrajectoryRecord {
        index,
        true_es,
        mu_true,
        es_hat: Some(es.es_hat),
        mu_hat: Some(es.mu_hat),
        theta_hat: Some(fit.theta_hat),
        iterations: fit.iterations,
        interior: fit.interior,
        intervals: None,
        asymptotic,
        excluded: None,
    };
    if sc.b > 0 {
        let ctx = BootstrapContext::new(&path.returns, fit, sc.alpha, sc.qmle.clone())?;
        let seed = rng::mix(sc.master_seed, tag::REPLICATE, index as u64);
        match bootstrap::run_replicates(&ctx, sc.b, seed)
            .and_then(|reps| bootstrap::intervals(&reps, es.es_hat, sc.n, sc.gamma))
        {
            Ok(set) => record.intervals = Some(set),
            Err(e) => record.excluded = Some(e.to_string()),
        }
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub kind: IntervalKind,
    pub inside: usize,
    pub below: usize,
    pub above: usize,
    pub coverage_pct: f64,
    pub below_pct: f64,
    pub above_pct: f64,
    pub avg_length: f64,
}

impl IntervalStats {
    pub fn count(&self) -> usize {
        self.inside + self.below + self.above
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub scenario_id: String,
    pub n: usize,
    pub s: usize,
    pub b: usize,
    pub excluded: usize,
    /// EP, RT and SY when the bootstrap ran.
    pub bootstrap: Vec<IntervalStats>,
    pub asymptotic: Option<IntervalStats>,
}

impl StudySummary {
    pub fn get(&self, kind: IntervalKind) -> Option<&IntervalStats> {
        if kind == IntervalKind::Asymptotic {
            return self.asymptotic.as_ref();
        }
        self.bootstrap.iter().find(|s| s.kind == kind)
    }
}

fn stats(records: &[TrajectoryRecord], kind: IntervalKind) -> Option<IntervalStats> {
    let (mut inside, mut below, mut above, mut len) = (0, 0, 0, 0.0);
    for r in records {
        match r.outcome(kind)? {
            Outcome::Inside => inside += 1,
            Outcome::Below => below += 1,
            Outcome::Above => above += 1,
        }
        len += r.length(kind)?;
    }
    let m = (inside + below + above) as f64;
    if m == 0.0 {
        return None;
    }
    let pct = |c: usize| 100.0 * c as f64 / m;
    Some(IntervalStats {
        kind,
        inside,
        below,
        above,
        coverage_pct: pct(inside),
        below_pct: pct(below),
        above_pct: pct(above),
        avg_length: len / m,
    })
}

/// Aggregates trajectory records; excluded records are counted and skipped.
pub fn summarize(scenario: &Scenario, records: &[TrajectoryRecord]) -> StudySummary {
    let included: Vec<TrajectoryRecord> = records.iter().filter(|r| r.excluded.is_none()).cloned().collect();
    let bootstrap = if scenario.b > 0 {
        IntervalKind::BOOTSTRAP.iter().filter_map(|&k| stats(&included, k)).collect()
    } else {
        Vec::new()
    };
    let with_asy: Vec<TrajectoryRecord> = included.iter().filter(|r| r.asymptotic.is_some()).cloned().collect();
    StudySummary {
        scenario_id: scenario.label(),
        n: scenario.n,
        s: scenario.s,
        b: scenario.b,
        excluded: records.len() - included.len(),
        bootstrap,
        asymptotic: stats(&with_asy, IntervalKind::Asymptotic),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub summary: StudySummary,
    pub records: Vec<TrajectoryRecord>,
}

/// Runs all trajectories on the current rayon pool.
pub fn run_study_records(scenario: &Scenario) -> Result<Study> {
    scenario.validate()?;
    let records = (0..scenario.s)
        .into_par_iter()
        .map(|i| run_trajectory(scenario, i))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(scenario, &records);
    if summary.excluded as f64 > MAX_EXCLUSION_RATE * scenario.s as f64 {
        return Err(Error::TooManyExclusions { excluded: summary.excluded, total: scenario.s });
    }
    Ok(Study { summary, records })
}

/// Runs the study on `workers` threads (`0` = rayon default).
pub fn run_study(scenario: &Scenario, workers: usize) -> Result<Study> {
    bootstrap::with_workers(workers, || run_study_records(scenario))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityComparison {
    /// `√n (μ̂ − μ_α)` across simulated samples.
    pub simulated: Vec<f64>,
    /// `√n (μ̂* − μ̂)` across bootstrap replicates on the first sample.
    pub bootstrap: Vec<f64>,
    pub simulated_curve: Curve,
    pub bootstrap_curve: Curve,
    /// Two-sample KS distance between the two populations.
    pub ks: f64,
    pub excluded: usize,
}

/// Sampling distribution of `√n (μ̂ − μ_α)` over `S` simulated paths against
/// the bootstrap distribution of `√n (μ̂* − μ̂)` on the first usable path,
/// both smoothed on a shared grid of `n_grid` points.
pub fn density_comparison(scenario: &Scenario, n_grid: usize) -> Result<DensityComparison> {
    let sc = scenario;
    sc.validate()?;
    if sc.b == 0 || n_grid < 2 {
        return Err(Error::invalid("density comparison needs bootstrap replicates and at least 2 grid points"));
    }
    let mu_true = sc.dist.tail_quantities_closed(sc.alpha)?.mu;
    let rn = (sc.n as f64).sqrt();
    let fits: Vec<Option<(Vec<f64>, qmle::FitResult)>> = (0..sc.s)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(sc.master_seed, tag::SIMULATE, i as u64);
            let path = sc.theta0.simulate(&sc.dist, sc.n, sc.burn_in, &mut rng)?;
            Ok(match qmle::fit(&path.returns, &sc.qmle) {
                Ok(f) if f.converged => Some((path.returns, f)),
                _ => None,
            })
        })
        .collect::<Result<_>>()?;
    let excluded = fits.iter().filter(|f| f.is_none()).count();
    if excluded as f64 > MAX_EXCLUSION_RATE * sc.s as f64 {
        return Err(Error::TooManyExclusions { excluded, total: sc.s });
    }
    let simulated = fits
        .iter()
        .flatten()
        .map(|(_, f)| mu_hat(&f.residuals, sc.alpha).map(|m| rn * (m.mu_hat - mu_true)))
        .collect::<Result<Vec<_>>>()?;

    let (returns, fit) = fits.into_iter().flatten().next().ok_or(Error::TooManyExclusions { excluded, total: sc.s })?;
    let mu0 = mu_hat(&fit.residuals, sc.alpha)?.mu_hat;
    let ctx = BootstrapContext::new(&returns, fit, sc.alpha, sc.qmle.clone())?;
    let reps = bootstrap::run_replicates(&ctx, sc.b, rng::mix(sc.master_seed, tag::DENSITY, 0))?;
    let bootstrap: Vec<f64> = reps.iter().filter(|r| r.converged).map(|r| rn * (r.mu_star - mu0)).collect();

    let h_sim = kde::silverman_bandwidth(&simulated);
    let h_boot = kde::silverman_bandwidth(&bootstrap);
    let pad = 4.0 * h_sim.max(h_boot);
    let lo = simulated.iter().chain(&bootstrap).copied().fold(f64::INFINITY, f64::min) - pad;
    let hi = simulated.iter().chain(&bootstrap).copied().fold(f64::NEG_INFINITY, f64::max) + pad;
    let x = kde::grid(lo, hi, n_grid);
    Ok(DensityComparison {
        simulated_curve: kde::kde(&simulated, Some(h_sim), &x)?,
        bootstrap_curve: kde::kde(&bootstrap, Some(h_boot), &x)?,
        ks: kde::ks_two_sample(&simulated, &bootstrap),
        simulated,
        bootstrap,
        excluded,
    })
}
