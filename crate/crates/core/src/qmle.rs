//! Gaussian quasi-maximum-likelihood estimation of GARCH(1,1) parameters.
//!
//! The criterion is `L̃_n(θ) = (1/n) Σ [−½ (ε_t/σ̃_t(θ))² − log σ̃_t(θ)]`,
//! maximized by Nelder-Mead over a compact box. The search runs in the
//! coordinates `(ω/s², α, β)` where `s²` is the sample second moment of the
//! design returns, which makes the optimizer equivariant to the scale of
//! the data.

use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadOptions};
use crate::volatility::{check_returns, initial_state, mean_square, FilterOutput, GarchParams, InitScheme, VolatilityModel};
use serde::{Deserialize, Serialize};

pub const MIN_OBSERVATIONS: usize = 50;

const LOG_BLOCK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QmleOptions {
    /// Bounds on ω as multiples of the sample second moment `s²`.
    pub omega_rel_bounds: (f64, f64),
    pub alpha_max: f64,
    pub beta_max: f64,
    /// Upper bound on `α + β`; violating points are projected onto it.
    pub persistence_max: f64,
    /// Multistart `(α, β)` pairs; each start takes `ω = s²(1 − α − β)`.
    pub starts: Vec<(f64, f64)>,
    pub tol_f: f64,
    pub tol_x: f64,
    pub max_iter: usize,
    pub init: InitScheme,
}

impl Default for QmleOptions {
    fn default() -> Self {
        Self {
            omega_rel_bounds: (1e-8, 10.0),
            alpha_max: 0.999,
            beta_max: 0.999,
            persistence_max: 1.0 - 1e-6,
            starts: vec![(0.10, 0.80), (0.30, 0.50), (0.05, 0.90)],
            tol_f: 1e-10,
            tol_x: 1e-8,
            max_iter: 2000,
            init: InitScheme::Presample,
        }
    }
}

impl QmleOptions {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.omega_rel_bounds;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid("omega bounds must satisfy 0 < lo <= hi < inf"));
        }
        if !(self.alpha_max >= 0.0 && self.beta_max >= 0.0 && self.beta_max < 1.0) {
            return Err(Error::invalid("need alpha_max >= 0 and 0 <= beta_max < 1"));
        }
        if !(self.persistence_max > 0.0 && self.persistence_max < 1.0) {
            return Err(Error::invalid("persistence_max must lie in (0, 1)"));
        }
        if self.starts.is_empty() {
            return Err(Error::invalid("at least one start is required"));
        }
        for &(a, b) in &self.starts {
            if !(a >= 0.0 && b >= 0.0 && a + b < 1.0) {
                return Err(Error::invalid(format!("start ({a}, {b}) must have α, β ≥ 0 and α + β < 1")));
            }
        }
        if !(self.tol_f > 0.0 && self.tol_x > 0.0 && self.max_iter > 0) {
            return Err(Error::invalid("tolerances and iteration cap must be positive"));
        }
        Ok(())
    }

    fn nm(&self) -> NelderMeadOptions {
        NelderMeadOptions { tol_f: self.tol_f, tol_x: self.tol_x, max_iter: self.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: GarchParams,
    /// Achieved criterion value `L̃_n(θ̂)`.
    pub loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// No bound or the persistence constraint is active at `θ̂`.
    pub interior: bool,
    pub filter_at_opt: FilterOutput,
    /// `η̂_t = ε_t / σ̃_t(θ̂)`.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }
}

/// Gaussian QML criterion in fixed-design form: the variance path is filtered
/// from `design` while the standardized observations come from `data`.
/// For the ordinary criterion both slices are the sample itself.
#[derive(Debug, Clone)]
pub struct Objective {
    // Squares in units of `unit`.
    design_sq: Vec<f64>,
    data_sq: Vec<f64>,
    presample_ms: f64,
    unit: f64,
    init: InitScheme,
}

impl Objective {
    pub fn new(design: &[f64], data: &[f64], init: InitScheme) -> Result<Self> {
        check_returns(design)?;
        check_returns(data)?;
        if design.len() != data.len() {
            return Err(Error::invalid("design and data must have equal length"));
        }
        let presample_ms = mean_square(design);
        let unit = if presample_ms > 0.0 { presample_ms } else { 1.0 };
        Ok(Self {
            design_sq: design.iter().map(|x| x * x / unit).collect(),
            data_sq: data.iter().map(|x| x * x / unit).collect(),
            presample_ms,
            unit,
            init,
        })
    }

    pub fn n(&self) -> usize {
        self.data_sq.len()
    }

    /// Second moment of the design returns, the scale of ω.
    pub fn scale(&self) -> f64 {
        self.presample_ms
    }

    /// `L̃_n(θ)`, or −∞ if the value is not finite.
    pub fn value(&self, p: &GarchParams) -> f64 {
        let Ok((mut s2, _)) = initial_state(p, self.init, self.presample_ms) else {
            return f64::NEG_INFINITY;
        };
        // Work in units of the design second moment and take one logarithm
        // per block of products; blocks that leave the normal range fall
        // back to per-term logarithms.
        let unit = self.unit;
        let (omega, alpha, beta) = (p.omega / unit, p.alpha, p.beta);
        s2 /= unit;
        let mut quad = 0.0;
        let mut logs = 0.0;
        for (xs, es) in self.data_sq.chunks(LOG_BLOCK).zip(self.design_sq.chunks(LOG_BLOCK)) {
            let mut prod = 1.0;
            let first = s2;
            for (&x2, &e2) in xs.iter().zip(es) {
                quad += x2 / s2;
                prod *= s2;
                s2 = omega + alpha * e2 + beta * s2;
            }
            if prod.is_normal() {
                logs += prod.ln();
            } else {
                let mut v = first;
                for &e2 in es {
                    logs += v.ln();
                    v = omega + alpha * e2 + beta * v;
                }
            }
        }
        let n = self.n() as f64;
        let v = -0.5 * ((quad + logs) / n + unit.ln());
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `L̃_n(θ)` on a return series.
pub fn criterion(params: &GarchParams, returns: &[f64], init: InitScheme) -> Result<f64> {
    Ok(Objective::new(returns, returns, init)?.value(params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub theta: GarchParams,
    pub loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub interior: bool,
}

struct Feasible {
    lo: [f64; 3],
    hi: [f64; 3],
    persistence_max: f64,
}

impl Feasible {
    fn new(opts: &QmleOptions) -> Self {
        Self {
            lo: [opts.omega_rel_bounds.0, 0.0, 0.0],
            hi: [opts.omega_rel_bounds.1, opts.alpha_max, opts.beta_max],
            persistence_max: opts.persistence_max,
        }
    }

    fn project(&self, z: &mut [f64; 3]) {
        for k in 0..3 {
            let (lo, hi) = (self.lo[k], self.hi[k]);
            if z[k] < lo {
                z[k] = lo + (lo - z[k]);
            }
            if z[k] > hi {
                z[k] = hi - (z[k] - hi);
            }
            z[k] = z[k].clamp(lo, hi);
        }
        let s = z[1] + z[2];
        if s > self.persistence_max {
            let f = self.persistence_max / s;
            z[1] *= f;
            z[2] *= f;
        }
    }

    fn interior(&self, z: &[f64; 3]) -> bool {
        let margin = 1e-6;
        (0..3).all(|k| z[k] > self.lo[k] + margin * self.lo[k].abs().max(margin) && z[k] < self.hi[k] - margin)
            && z[1] + z[2] < self.persistence_max - margin
    }
}

/// Maximizes the objective from each start and keeps the best optimum.
///
/// `steps` are the initial simplex edges in `(ω/s², α, β)` coordinates.
/// Coordinates whose bounds coincide are held fixed.
pub fn maximize(
    objective: &Objective,
    opts: &QmleOptions,
    starts: &[GarchParams],
    steps: [f64; 3],
) -> Result<Optimum> {
    opts.validate()?;
    if starts.is_empty() {
        return Err(Error::invalid("at least one start is required"));
    }
    let scale = objective.scale();
    let feasible = Feasible::new(opts);
    let free: Vec<usize> = (0..3).filter(|&k| feasible.hi[k] > feasible.lo[k]).collect();

    let mut best: Option<Optimum> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    for start in starts {
        let mut z0 = [start.omega / scale, start.alpha, start.beta];
        feasible.project(&mut z0);
        let full = |sub: &[f64]| {
            let mut z = z0;
            for (&k, &v) in free.iter().zip(sub) {
                z[k] = v;
            }
            z
        };
        let theta_of = |z: &[f64; 3]| GarchParams { omega: z[0] * scale, alpha: z[1], beta: z[2] };
        let sub0: Vec<f64> = free.iter().map(|&k| z0[k]).collect();
        let sub_steps: Vec<f64> = free.iter().map(|&k| steps[k]).collect();

        let (z, f, converged, it, ev) = if free.is_empty() {
            (z0, -objective.value(&theta_of(&z0)), true, 0, 1)
        } else {
            let r = optim::minimize(
                |sub| -objective.value(&theta_of(&full(sub))),
                |sub| {
                    let mut z = full(sub);
                    feasible.project(&mut z);
                    for (slot, &k) in sub.iter_mut().zip(&free) {
                        *slot = z[k];
                    }
                },
                &sub0,
                &sub_steps,
                &opts.nm(),
            );
            (full(&r.x), r.f, r.converged, r.iterations, r.evaluations)
        };
        iterations += it;
        evaluations += ev;
        let candidate = Optimum {
            theta: theta_of(&z),
            loglik: -f,
            iterations: 0,
            evaluations: 0,
            converged,
            interior: feasible.interior(&z),
        };
        if best.as_ref().is_none_or(|b| candidate.loglik > b.loglik) {
            best = Some(candidate);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = iterations;
    best.evaluations = evaluations;
    if !best.loglik.is_finite() {
        return Err(Error::Convergence { what: "QML criterion", achieved: best.loglik });
    }
    Ok(best)
}

/// Default multistart points for a sample with second moment `scale`.
pub fn default_starts(opts: &QmleOptions, scale: f64) -> Vec<GarchParams> {
    opts.starts
        .iter()
        .map(|&(a, b)| GarchParams { omega: scale * (1.0 - a - b), alpha: a, beta: b })
        .collect()
}

pub const MULTISTART_STEPS: [f64; 3] = [0.05, 0.05, 0.05];

/// QML estimate `θ̂_n = argmax L̃_n(θ)`.
///
/// Non-convergence is not an error: the best point found is returned with
/// `converged = false`.
pub fn fit(returns: &[f64], opts: &QmleOptions) -> Result<FitResult> {
    if returns.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData { required: MIN_OBSERVATIONS, got: returns.len() });
    }
    let objective = Objective::new(returns, returns, opts.init)?;
    if objective.scale() == 0.0 {
        return Err(Error::invalid("returns are identically zero"));
    }
    let starts = default_starts(opts, objective.scale());
    let opt = maximize(&objective, opts, &starts, MULTISTART_STEPS)?;
    finish(returns, opts.init, opt)
}

pub(crate) fn finish(returns: &[f64], init: InitScheme, opt: Optimum) -> Result<FitResult> {
    let filter_at_opt = opt.theta.filter(returns, init)?;
    let residuals = returns
        .iter()
        .zip(&filter_at_opt.sigma2)
        .map(|(e, v)| e / v.sqrt())
        .collect();
    Ok(FitResult {
        theta_hat: opt.theta,
        loglik: opt.loglik,
        iterations: opt.iterations,
        evaluations: opt.evaluations,
        converged: opt.converged,
        interior: opt.interior,
        filter_at_opt,
        residuals,
    })
}
