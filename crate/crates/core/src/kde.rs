//! Gaussian kernel density estimates and Kolmogorov-Smirnov distances.

use crate::error::{Error, Result};
use crate::special::norm_pdf;

pub const MIN_KDE_SAMPLE: usize = 30;

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Silverman's rule `1.06 σ̂ m^{−1/5}`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let (_, sd) = mean_sd(values);
    1.06 * sd * (values.len() as f64).powf(-0.2)
}

/// Evenly spaced grid of `points` values from `lo` to `hi`.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl Curve {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    pub fn mode(&self) -> f64 {
        let i = (0..self.density.len()).max_by(|&a, &b| self.density[a].total_cmp(&self.density[b])).unwrap_or(0);
        self.x[i]
    }

    /// Number of strict interior local maxima.
    pub fn local_maxima(&self) -> usize {
        self.density.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
    }
}

/// Gaussian KDE evaluated on `x`. The bandwidth defaults to Silverman's rule.
pub fn kde(values: &[f64], bandwidth: Option<f64>, x: &[f64]) -> Result<Curve> {
    if values.len() < MIN_KDE_SAMPLE {
        return Err(Error::InsufficientData { required: MIN_KDE_SAMPLE, got: values.len() });
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(values));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    let scale = 1.0 / (values.len() as f64 * h);
    let density = x.iter().map(|&g| scale * values.iter().map(|&v| norm_pdf((g - v) / h)).sum::<f64>()).collect();
    Ok(Curve { x: x.to_vec(), density, bandwidth: h })
}

/// `sup_x |F̂_a(x) − F̂_b(x)|` for two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `sup_x |F̂(x) − F(x)|` for a sample against a continuous cdf.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max)
}
