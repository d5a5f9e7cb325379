//! Conditional expected shortfall from QML residuals.
//!
//! The ES of the innovation is estimated by the mean of the residuals at or
//! below their empirical α-quantile; the conditional ES is that mean scaled
//! by the one-step-ahead fitted volatility. The joint asymptotic covariance
//! of `(θ̂, μ̂)` is estimated by sample moments of the residuals and of the
//! filter derivatives.

use crate::distributions::TailQuantities;
use crate::error::{Error, Result};
use crate::qmle::FitResult;
use crate::special::norm_inv_cdf;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

pub const MAX_CONDITION: f64 = 1e12;

/// Number of residuals in the tail set, `⌊αn⌋ + 1`.
pub fn tail_count(n: usize, alpha: f64) -> usize {
    (alpha * n as f64 + 1e-9).floor() as usize + 1
}

fn check_tail(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("tail level must lie in (0, 1), got {alpha}")));
    }
    let k = tail_count(n, alpha);
    if k > n {
        return Err(Error::InsufficientData { required: k, got: n });
    }
    Ok(k)
}

fn by_value_then_index(values: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    |&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j))
}

/// Empirical α-quantile and its tail set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalQuantile {
    /// Order statistic of rank `⌊αn⌋ + 1`.
    pub xi: f64,
    /// Indices of the `⌊αn⌋ + 1` smallest values, ties broken by position.
    /// Sorted ascending.
    pub tail: Vec<usize>,
}

pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<EmpiricalQuantile> {
    let k = check_tail(values.len(), alpha)?;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = by_value_then_index(values);
    idx.select_nth_unstable_by(k - 1, &cmp);
    let xi = values[idx[k - 1]];
    let mut tail = idx[..k].to_vec();
    tail.sort_unstable();
    Ok(EmpiricalQuantile { xi, tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMean {
    pub xi_hat: f64,
    /// Negated mean of the tail set.
    pub mu_hat: f64,
    pub tail_count: usize,
}

/// `μ̂ = −(1/k) Σ_{tail} η̂_t` with `k = ⌊αn⌋ + 1`.
pub fn mu_hat(residuals: &[f64], alpha: f64) -> Result<TailMean> {
    let k = check_tail(residuals.len(), alpha)?;
    let mut v = residuals.to_vec();
    v.select_nth_unstable_by(k - 1, f64::total_cmp);
    let xi_hat = v[k - 1];
    let tail = &mut v[..k];
    tail.sort_unstable_by(f64::total_cmp);
    let sum: f64 = tail.iter().sum();
    Ok(TailMean { xi_hat, mu_hat: -sum / k as f64, tail_count: k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsEstimate {
    pub alpha: f64,
    pub xi_hat: f64,
    pub mu_hat: f64,
    /// `σ̃_{n+1}(θ̂)`.
    pub sigma_next: f64,
    /// `μ̂ · σ̃_{n+1}(θ̂)`.
    pub es_hat: f64,
    pub tail_count: usize,
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if fit.converged {
        Ok(())
    } else {
        Err(Error::Convergence { what: "QML fit", achieved: fit.loglik })
    }
}

pub fn conditional_es(fit: &FitResult, alpha: f64) -> Result<EsEstimate> {
    require_converged(fit)?;
    let tm = mu_hat(&fit.residuals, alpha)?;
    if !(tm.mu_hat > 0.0) {
        return Err(Error::Domain(format!("tail mean of residuals is not negative (μ̂ = {})", tm.mu_hat)));
    }
    let sigma_next = fit.filter_at_opt.sigma_next();
    Ok(EsEstimate {
        alpha,
        xi_hat: tm.xi_hat,
        mu_hat: tm.mu_hat,
        sigma_next,
        es_hat: tm.mu_hat * sigma_next,
        tail_count: tm.tail_count,
    })
}

/// Scalar ingredients of the asymptotic covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTerms {
    /// `Var[(η − ξ)1{η < ξ}] / α²`.
    pub sigma2_alpha: f64,
    /// `−Cov[η², (η − ξ)1{η < ξ}] / α`.
    pub x_alpha: f64,
    /// `½ x_α − μ (κ − 1)/4`.
    pub phi_alpha: f64,
    /// Asymptotic variance of `√n (μ̂ − μ)`.
    pub nu_alpha: f64,
}

/// Assembles the asymptotic terms from tail quantities, using
///
/// ```text
/// Var[(η − ξ)1{η < ξ}]     = p + α + ξ(1 − α)α(ξ + 2μ) − (αμ)²
/// Cov[η², (η − ξ)1{η < ξ}] = q − ξ p + αμ
/// ```
pub fn asymptotic_terms(alpha: f64, xi: f64, mu: f64, p: f64, q: f64, kappa: f64) -> AsymptoticTerms {
    let var = p + alpha + xi * (1.0 - alpha) * alpha * (xi + 2.0 * mu) - (alpha * mu).powi(2);
    let cov = q - xi * p + alpha * mu;
    let sigma2_alpha = var / (alpha * alpha);
    let x_alpha = -cov / alpha;
    let c = (kappa - 1.0) / 4.0;
    AsymptoticTerms {
        sigma2_alpha,
        x_alpha,
        phi_alpha: 0.5 * x_alpha - mu * c,
        nu_alpha: sigma2_alpha - x_alpha * mu + c * mu * mu,
    }
}

/// Population `ν_α` of an innovation law.
pub fn analytic_nu_alpha(tq: &TailQuantities) -> f64 {
    asymptotic_terms(tq.alpha, tq.xi, tq.mu, tq.p, tq.q, tq.kappa).nu_alpha
}

/// Sample moments entering the covariance estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlugIn {
    pub n: usize,
    pub alpha: f64,
    pub xi_hat: f64,
    pub mu_hat: f64,
    /// `(1/n) Σ η̂⁴`.
    pub kappa_hat: f64,
    /// `(1/n) Σ η̂² 1{tail} − α`.
    pub p_hat: f64,
    /// `(1/n) Σ η̂³ 1{tail}`.
    pub q_hat: f64,
    /// `(1/n) Σ D̂_t`.
    pub omega_hat: [f64; 3],
    /// `(1/n) Σ D̂_t D̂_tᵀ`.
    pub j_hat: [[f64; 3]; 3],
}

pub fn plug_in(fit: &FitResult, alpha: f64) -> Result<PlugIn> {
    let eta = &fit.residuals;
    let n = eta.len();
    let q = empirical_quantile(eta, alpha)?;
    let k = q.tail.len() as f64;
    let nf = n as f64;
    let mu_hat = -q.tail.iter().map(|&i| eta[i]).sum::<f64>() / k;
    let kappa_hat = eta.iter().map(|e| e.powi(4)).sum::<f64>() / nf;
    let p_hat = q.tail.iter().map(|&i| eta[i].powi(2)).sum::<f64>() / nf - alpha;
    let q_hat = q.tail.iter().map(|&i| eta[i].powi(3)).sum::<f64>() / nf;

    let mut omega_hat = [0.0; 3];
    let mut j_hat = [[0.0; 3]; 3];
    for d in &fit.filter_at_opt.d[..n] {
        for a in 0..3 {
            omega_hat[a] += d[a];
            for b in a..3 {
                j_hat[a][b] += d[a] * d[b];
            }
        }
    }
    for a in 0..3 {
        omega_hat[a] /= nf;
        for b in a..3 {
            j_hat[a][b] /= nf;
            j_hat[b][a] = j_hat[a][b];
        }
    }
    Ok(PlugIn { n, alpha, xi_hat: q.xi, mu_hat, kappa_hat, p_hat, q_hat, omega_hat, j_hat })
}

/// Plug-in estimate of the asymptotic covariance of `√n (θ̂ − θ, μ̂ − μ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaHat {
    pub n: usize,
    pub alpha: f64,
    pub kappa_hat: f64,
    pub omega_hat: [f64; 3],
    pub j_hat: [[f64; 3]; 3],
    pub j_inv: [[f64; 3]; 3],
    pub p_hat: f64,
    pub q_hat: f64,
    pub xi_hat: f64,
    pub mu_hat: f64,
    pub sigma2_alpha_hat: f64,
    pub x_alpha_hat: f64,
    pub phi_alpha_hat: f64,
    pub nu_alpha_hat: f64,
    /// ```text
    /// ⎡ (κ−1)/4 · J⁻¹     φ J⁻¹Ω ⎤
    /// ⎣ φ Ωᵀ J⁻¹          ν      ⎦
    /// ```
    pub gamma: [[f64; 4]; 4],
}

/// Inverse of a symmetric positive definite 3×3 matrix, rejecting
/// condition numbers above [`MAX_CONDITION`].
pub fn spd_inverse(m: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let a = Matrix3::from_fn(|i, j| m[i][j]);
    let eig = a.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let inv = a.cholesky().ok_or(Error::Singular { condition })?.inverse();
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (inv[(i, j)] + inv[(j, i)]))))
}

pub fn gamma_hat(fit: &FitResult, alpha: f64) -> Result<GammaHat> {
    require_converged(fit)?;
    let pi = plug_in(fit, alpha)?;
    let j_inv = spd_inverse(&pi.j_hat)?;
    let t = asymptotic_terms(alpha, pi.xi_hat, pi.mu_hat, pi.p_hat, pi.q_hat, pi.kappa_hat);

    let jinv = Matrix3::from_fn(|i, j| j_inv[i][j]);
    let cross = jinv * Vector3::from(pi.omega_hat) * t.phi_alpha;
    let c = (pi.kappa_hat - 1.0) / 4.0;
    let mut gamma = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            gamma[i][j] = c * j_inv[i][j];
        }
        gamma[i][3] = cross[i];
        gamma[3][i] = cross[i];
    }
    gamma[3][3] = t.nu_alpha;

    Ok(GammaHat {
        n: pi.n,
        alpha,
        kappa_hat: pi.kappa_hat,
        omega_hat: pi.omega_hat,
        j_hat: pi.j_hat,
        j_inv,
        p_hat: pi.p_hat,
        q_hat: pi.q_hat,
        xi_hat: pi.xi_hat,
        mu_hat: pi.mu_hat,
        sigma2_alpha_hat: t.sigma2_alpha,
        x_alpha_hat: t.x_alpha,
        phi_alpha_hat: t.phi_alpha,
        nu_alpha_hat: t.nu_alpha,
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticInterval {
    pub lo: f64,
    pub hi: f64,
    /// `vᵀ Γ̂ v`.
    pub quad_form: f64,
    /// The quadratic form came out negative and was set to zero.
    pub clamped: bool,
}

impl AsymptoticInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `es_hat ± |Φ⁻¹(γ/2)| √(quad_form / n)`.
pub fn delta_method_interval(es_hat: f64, quad_form: f64, n: usize, gamma: f64) -> Result<AsymptoticInterval> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if n == 0 || !quad_form.is_finite() {
        return Err(Error::invalid("need n > 0 and a finite quadratic form"));
    }
    let clamped = quad_form < 0.0;
    let qf = quad_form.max(0.0);
    let half = norm_inv_cdf(gamma / 2.0).abs() * (qf / n as f64).sqrt();
    Ok(AsymptoticInterval { lo: es_hat - half, hi: es_hat + half, quad_form: qf, clamped })
}

/// Delta-method interval for the conditional ES with gradient
/// `v = (μ̂ ∂σ̃_{n+1}/∂θ, σ̃_{n+1})`.
pub fn asymptotic_interval(fit: &FitResult, es: &EsEstimate, g: &GammaHat, gamma: f64) -> Result<AsymptoticInterval> {
    let ds = fit.filter_at_opt.dsigma_next();
    let v = [es.mu_hat * ds[0], es.mu_hat * ds[1], es.mu_hat * ds[2], es.sigma_next];
    let mut qf = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            qf += v[i] * g.gamma[i][j] * v[j];
        }
    }
    delta_method_interval(es.es_hat, qf, fit.n(), gamma)
}
