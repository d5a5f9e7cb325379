//! GARCH(1,1) volatility filter, its analytic parameter derivatives, path
//! simulation and the scale map `θ ↦ θ_λ`.

use crate::distributions::InnovationDist;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `σ²_{t+1} = ω + α ε_t² + β σ²_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGarch")]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGarch {
    omega: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawGarch> for GarchParams {
    type Error = Error;
    fn try_from(r: RawGarch) -> Result<Self> {
        GarchParams::new(r.omega, r.alpha, r.beta)
    }
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid(format!("omega must be positive, got {omega}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!("alpha must be non-negative, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid(format!("beta must be non-negative, got {beta}")));
        }
        Ok(Self { omega, alpha, beta })
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    /// `ω/(1 − α − β)` when `α + β < 1`.
    pub fn unconditional_variance(&self) -> Option<f64> {
        (self.persistence() < 1.0).then(|| self.omega / (1.0 - self.persistence()))
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.omega, self.alpha, self.beta]
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

/// How the unobservable presample enters `σ̃²_1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum InitScheme {
    /// All presample returns replaced by the sample root mean square `s`,
    /// so `σ̃²_1(θ) = (ω + α s²)/(1 − β)`. The start depends on θ, which keeps
    /// the filter exactly homogeneous under the scale map; its derivative is
    /// carried through the recursion.
    #[default]
    Presample,
    /// `σ̃²_1 = s²`, treated as a constant in θ.
    SampleVariance,
    /// `σ̃²_1 = v`, treated as a constant in θ.
    Fixed(f64),
}

/// Filtered variances for `t = 1..=n+1` with their θ-gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub sigma2: Vec<f64>,
    pub dsigma2: Vec<[f64; 3]>,
    /// `D̃_t = ∂σ̃²_t/∂θ / (2 σ̃²_t) = (1/σ̃_t) ∂σ̃_t/∂θ`.
    pub d: Vec<[f64; 3]>,
}

impl FilterOutput {
    /// Length of the sample the filter was run on.
    pub fn n(&self) -> usize {
        self.sigma2.len() - 1
    }

    /// One-step-ahead volatility `σ̃_{n+1}`.
    pub fn sigma_next(&self) -> f64 {
        self.sigma2[self.n()].sqrt()
    }

    /// `∂σ̃_{n+1}/∂θ`.
    pub fn dsigma_next(&self) -> [f64; 3] {
        let n = self.n();
        let s = self.sigma2[n].sqrt();
        self.dsigma2[n].map(|g| g / (2.0 * s))
    }
}

/// A simulated path: `returns[t-1] = ε_t` for `t = 1..=n`, and the true
/// variances `σ²_t` for `t = 1..=n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub returns: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// A parametric volatility recursion `σ_t(θ) = σ(ε_{t−1}, ε_{t−2}, …; θ)`.
pub trait VolatilityModel: Sized + Copy {
    const DIM: usize;

    fn filter(&self, returns: &[f64], init: InitScheme) -> Result<FilterOutput>;

    fn simulate<R: Rng + ?Sized>(
        &self,
        dist: &InnovationDist,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<SimulatedPath>;

    /// Parameters `θ_λ` with `σ(·; θ_λ) = λ σ(·; θ)`.
    fn scale_params(&self, lambda: f64) -> Result<Self>;
}

pub(crate) fn mean_square(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

pub(crate) fn check_returns(returns: &[f64]) -> Result<()> {
    if returns.is_empty() {
        return Err(Error::InsufficientData { required: 1, got: 0 });
    }
    if let Some(index) = returns.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Initial variance and its θ-gradient.
pub(crate) fn initial_state(
    params: &GarchParams,
    init: InitScheme,
    presample_ms: f64,
) -> Result<(f64, [f64; 3])> {
    match init {
        InitScheme::Presample => {
            if params.beta >= 1.0 {
                return Err(Error::invalid("presample initialization needs beta < 1"));
            }
            let k = 1.0 / (1.0 - params.beta);
            let v = (params.omega + params.alpha * presample_ms) * k;
            Ok((v, [k, presample_ms * k, v * k]))
        }
        InitScheme::SampleVariance => Ok((presample_ms, [0.0; 3])),
        InitScheme::Fixed(v) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("fixed initial variance must be positive, got {v}")));
            }
            Ok((v, [0.0; 3]))
        }
    }
}

impl VolatilityModel for GarchParams {
    const DIM: usize = 3;

    fn filter(&self, returns: &[f64], init: InitScheme) -> Result<FilterOutput> {
        check_returns(returns)?;
        let n = returns.len();
        let (mut s2, mut ds2) = initial_state(self, init, mean_square(returns))?;
        let mut sigma2 = Vec::with_capacity(n + 1);
        let mut dsigma2 = Vec::with_capacity(n + 1);
        let GarchParams { omega, alpha, beta } = *self;
        for &e in returns {
            sigma2.push(s2);
            dsigma2.push(ds2);
            let e2 = e * e;
            ds2 = [1.0 + beta * ds2[0], e2 + beta * ds2[1], s2 + beta * ds2[2]];
            s2 = omega + alpha * e2 + beta * s2;
        }
        sigma2.push(s2);
        dsigma2.push(ds2);
        let d = sigma2
            .iter()
            .zip(&dsigma2)
            .map(|(&v, g)| g.map(|x| x / (2.0 * v)))
            .collect();
        Ok(FilterOutput { sigma2, dsigma2, d })
    }

    /// Exact recursion started at the unconditional variance; the first
    /// `burn_in` observations are discarded.
    fn simulate<R: Rng + ?Sized>(
        &self,
        dist: &InnovationDist,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<SimulatedPath> {
        let Some(mut s2) = self.unconditional_variance() else {
            return Err(Error::invalid(format!(
                "simulation requires alpha + beta < 1, got {}",
                self.persistence()
            )));
        };
        if n == 0 {
            return Err(Error::InsufficientData { required: 1, got: 0 });
        }
        let mut returns = Vec::with_capacity(n);
        let mut sigma2 = Vec::with_capacity(n + 1);
        for t in 0..burn_in + n {
            let e = s2.sqrt() * dist.sample_one(rng);
            if t >= burn_in {
                sigma2.push(s2);
                returns.push(e);
            }
            s2 = self.omega + self.alpha * e * e + self.beta * s2;
        }
        sigma2.push(s2);
        Ok(SimulatedPath { returns, sigma2 })
    }

    /// `(λ²ω, λ²α, β)`.
    fn scale_params(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {lambda}")));
        }
        let l2 = lambda * lambda;
        Ok(Self { omega: l2 * self.omega, alpha: l2 * self.alpha, beta: self.beta })
    }
}
