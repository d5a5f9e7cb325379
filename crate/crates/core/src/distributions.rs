//! Innovation laws with unit second moment: the standard normal and the
//! normalized Student-t `η = σ_ν·Y`, `Y ~ t_ν`, `σ_ν² = (ν − 2)/ν`.
//!
//! Besides density, distribution and quantile evaluation, each law exposes
//! the tail quantities that drive the asymptotic theory of the ES estimator:
//!
//! * `ξ_α`: the α-quantile,
//! * `μ_α = −E[η | η < ξ_α]`: the ES of the innovation,
//! * `p_α = E[η² 1{η < ξ_α}] − α`, `q_α = E[η³ 1{η < ξ_α}]`,
//! * `κ = E[η⁴]`.
//!
//! They are available in closed form and, independently, by quadrature.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::{norm_cdf, norm_inv_cdf, norm_pdf, student_cdf, student_inv_cdf, student_pdf};
use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Normal,
    StudentT,
}

/// Serialized form of [`InnovationDist`]; validated on conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Normal {},
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct InnovationDist {
    kind: DistKind,
    nu: f64,
    sigma_nu: f64,
}

impl TryFrom<DistSpec> for InnovationDist {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Normal {} => Ok(Self::normal()),
            DistSpec::StudentT { nu } => Self::student_t(nu),
        }
    }
}

impl From<InnovationDist> for DistSpec {
    fn from(d: InnovationDist) -> Self {
        match d.kind {
            DistKind::Normal => DistSpec::Normal {},
            DistKind::StudentT => DistSpec::StudentT { nu: d.nu },
        }
    }
}

/// Tail quantities of an innovation law at level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailQuantities {
    pub alpha: f64,
    pub xi: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
}

const QUAD_TOL: f64 = 1e-10;

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tail level must lie in (0, 0.5), got {alpha}")))
    }
}

impl InnovationDist {
    pub fn normal() -> Self {
        Self { kind: DistKind::Normal, nu: f64::INFINITY, sigma_nu: 1.0 }
    }

    /// Normalized Student-t with `nu > 4` degrees of freedom (finite fourth moment).
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 4.0) {
            return Err(Error::invalid(format!(
                "Student-t innovations need finite ν > 4 (finite fourth moment), got {nu}"
            )));
        }
        Ok(Self { kind: DistKind::StudentT, nu, sigma_nu: ((nu - 2.0) / nu).sqrt() })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn nu(&self) -> Option<f64> {
        (self.kind == DistKind::StudentT).then_some(self.nu)
    }

    pub fn sigma_nu(&self) -> Option<f64> {
        (self.kind == DistKind::StudentT).then_some(self.sigma_nu)
    }

    /// Short label, e.g. `normal` or `t6`.
    pub fn label(&self) -> String {
        match self.kind {
            DistKind::Normal => "normal".to_string(),
            DistKind::StudentT => format!("t{}", self.nu),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Normal => norm_pdf(x),
            DistKind::StudentT => student_pdf(x / self.sigma_nu, self.nu) / self.sigma_nu,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Normal => norm_cdf(x),
            DistKind::StudentT => student_cdf(x / self.sigma_nu, self.nu),
        }
    }

    pub fn inv_cdf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match self.kind {
            DistKind::Normal => norm_inv_cdf(p),
            DistKind::StudentT => self.sigma_nu * student_inv_cdf(p, self.nu),
        }
    }

    /// Fourth moment `κ = E[η⁴]`.
    pub fn kappa(&self) -> f64 {
        match self.kind {
            DistKind::Normal => 3.0,
            DistKind::StudentT => 3.0 * (self.nu - 2.0) / (self.nu - 4.0),
        }
    }

    /// One draw by inverse-CDF transform of an open-interval uniform.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_unchecked(u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Closed-form tail quantities.
    ///
    /// For the normalized t law, with `f_{ν−2}`/`F_{ν−2}` the standard t
    /// density/cdf with ν − 2 degrees of freedom:
    ///
    /// ```text
    /// μ_α = f_{ν−2}(ξ_α)/α
    /// p_α = F_{ν−2}(ξ_α) − α − ξ_α f_{ν−2}(ξ_α)
    /// q_α = −(2(νσ_ν² + ξ_α²)/(ν − 3) + ξ_α²) f_{ν−2}(ξ_α)
    /// ```
    ///
    /// The `F_{ν−2}(ξ_α) − α` term in `p_α` vanishes in the normal limit,
    /// where `μ_α = φ(ξ_α)/α`, `p_α = −ξ_α φ(ξ_α)`, `q_α = −(2 + ξ_α²) φ(ξ_α)`.
    pub fn tail_quantities_closed(&self, alpha: f64) -> Result<TailQuantities> {
        check_level(alpha)?;
        let xi = self.quantile_unchecked(alpha);
        let (mu, p, q) = match self.kind {
            DistKind::Normal => {
                let phi = norm_pdf(xi);
                (phi / alpha, -xi * phi, -(2.0 + xi * xi) * phi)
            }
            DistKind::StudentT => {
                let nu = self.nu;
                let f = student_pdf(xi, nu - 2.0);
                let big_f = student_cdf(xi, nu - 2.0);
                let s2 = self.sigma_nu * self.sigma_nu;
                let q = -(2.0 * (nu * s2 + xi * xi) / (nu - 3.0) + xi * xi) * f;
                (f / alpha, big_f - alpha - xi * f, q)
            }
        };
        Ok(TailQuantities { alpha, xi, mu, p, q, kappa: self.kappa() })
    }

    /// Tail quantities by root finding and adaptive quadrature.
    ///
    /// `ξ_α` comes from bisection on the cdf, the truncated moments from
    /// Gauss-Kronrod integration of `xᵐ f(x)` over `(−∞, ξ_α]` and `κ` from
    /// integration of `x⁴ f(x)` over the real line. Independent of the
    /// closed forms except for sharing `pdf`/`cdf`.
    pub fn tail_quantities_numeric(&self, alpha: f64) -> Result<TailQuantities> {
        check_level(alpha)?;
        let xi = self.bisect_quantile(alpha)?;
        let moment = |m: i32| {
            quadrature::integrate_lower_tail(|x| x.powi(m) * self.pdf(x), xi, QUAD_TOL).map(|q| q.value)
        };
        let m1 = moment(1)?;
        let m2 = moment(2)?;
        let m3 = moment(3)?;
        let kappa = quadrature::integrate_real_line(|x| x.powi(4) * self.pdf(x), QUAD_TOL)?.value;
        Ok(TailQuantities { alpha, xi, mu: -m1 / alpha, p: m2 - alpha, q: m3, kappa })
    }

    fn bisect_quantile(&self, p: f64) -> Result<f64> {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > p {
            lo *= 2.0;
            if lo < -1e6 {
                return Err(Error::Convergence { what: "quantile bracketing", achieved: lo });
            }
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Convergence { what: "quantile bracketing", achieved: hi });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
