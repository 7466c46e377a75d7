//! Reference posteriors used to check the sampler: the closed-form
//! normal-mean update and brute-force quadrature in one or two dimensions.

use serde::{Deserialize, Serialize};

use super::sampler::Target;
use crate::error::{Error, Result};
use crate::stats::normal_logpdf;

/// Posterior of a normal mean with known noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPosterior {
    pub mean: f64,
    pub sd: f64,
}

/// Closed-form update of a `N(prior_mean, prior_sd)` prior on the mean of
/// `n` observations with noise `sigma` and sample mean `ybar`.
pub fn conjugate_posterior(prior_mean: f64, prior_sd: f64, sigma: f64, n: usize, ybar: f64) -> NormalPosterior {
    let prior_prec = prior_sd.powi(-2);
    let data_prec = n as f64 / (sigma * sigma);
    let prec = prior_prec + data_prec;
    NormalPosterior {
        mean: (prior_prec * prior_mean + data_prec * ybar) / prec,
        sd: prec.powf(-0.5),
    }
}

/// Normal-mean model as a sampler target: one coordinate `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalMeanModel {
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub sigma: f64,
    pub observations: Vec<f64>,
}

impl NormalMeanModel {
    pub fn posterior(&self) -> NormalPosterior {
        let n = self.observations.len();
        let ybar = if n == 0 { 0.0 } else { self.observations.iter().sum::<f64>() / n as f64 };
        conjugate_posterior(self.prior_mean, self.prior_sd, self.sigma, n, ybar)
    }
}

impl Target for NormalMeanModel {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let mu = x[0];
        normal_logpdf(mu, self.prior_mean, self.prior_sd)
            + self
                .observations
                .iter()
                .map(|&y| normal_logpdf(y, mu, self.sigma))
                .sum::<f64>()
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![self.prior_mean]
    }

    fn output_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// A target with every coordinate except `free` held at `base`.
pub struct Restricted<'a, T: Target> {
    inner: &'a T,
    base: Vec<f64>,
    free: Vec<usize>,
}

impl<'a, T: Target> Restricted<'a, T> {
    pub fn new(inner: &'a T, base: Vec<f64>, free: Vec<usize>) -> Result<Self> {
        if base.len() != inner.dim() || free.iter().any(|&i| i >= base.len()) {
            return Err(Error::DimensionMismatch("restriction does not fit the target".into()));
        }
        Ok(Self { inner, base, free })
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.base.clone();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        full
    }
}

impl<T: Target> Target for Restricted<'_, T> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.inner.log_density(&self.expand(x))
    }

    fn local_log_density(&self, x: &[f64], i: usize) -> f64 {
        self.inner.local_log_density(&self.expand(x), self.free[i])
    }

    fn initial_point(&self) -> Vec<f64> {
        self.free.iter().map(|&i| self.base[i]).collect()
    }

    fn output_names(&self) -> Vec<String> {
        let names = self.inner.output_names();
        self.free.iter().map(|&i| names[i].clone()).collect()
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        let out = self.inner.output(&self.expand(x));
        self.free.iter().map(|&i| out[i]).collect()
    }
}

/// Posterior moments from quadrature on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridPosterior {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Normalized mass in the outermost ring of grid cells.
    pub boundary_mass: f64,
}

pub const GRID_BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Integrate `log_density` (unnormalized) over a box with `points` nodes
/// per axis using the trapezoid rule. Supports one or two dimensions.
/// Fails with [`Error::GridTooSmall`] if the box cuts off visible mass.
pub fn grid_posterior(log_density: impl Fn(&[f64]) -> f64, bounds: &[(f64, f64)], points: usize) -> Result<GridPosterior> {
    if bounds.is_empty() || bounds.len() > 2 {
        return Err(Error::InvalidConfig(format!("grid quadrature supports 1 or 2 dimensions, got {}", bounds.len())));
    }
    if points < 3 || bounds.iter().any(|(lo, hi)| hi.is_nan() || lo.is_nan() || hi <= lo) {
        return Err(Error::InvalidConfig("grid needs at least 3 points and non-empty bounds".into()));
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
        .collect();
    let trapezoid = |k: usize| if k == 0 || k == points - 1 { 0.5 } else { 1.0 };

    let dims = bounds.len();
    let cells = points.pow(dims as u32);
    let mut nodes = Vec::with_capacity(cells);
    for flat in 0..cells {
        let idx: Vec<usize> = (0..dims).map(|d| (flat / points.pow(d as u32)) % points).collect();
        let x: Vec<f64> = idx.iter().enumerate().map(|(d, &k)| axes[d][k]).collect();
        let w: f64 = idx.iter().map(|&k| trapezoid(k)).product();
        let edge = idx.iter().any(|&k| k == 0 || k == points - 1);
        let lp = log_density(&x);
        nodes.push((x, w, edge, lp));
    }
    let max = nodes.iter().map(|n| n.3).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::InvalidConfig("log density is not finite anywhere on the grid".into()));
    }

    let mut total = 0.0;
    let mut boundary = 0.0;
    let mut first = vec![0.0; dims];
    let mut second = vec![0.0; dims];
    for (x, w, edge, lp) in &nodes {
        let mass = w * (lp - max).exp();
        total += mass;
        if *edge {
            boundary += mass;
        }
        for d in 0..dims {
            first[d] += mass * x[d];
            second[d] += mass * x[d] * x[d];
        }
    }
    let boundary_mass = boundary / total;
    if boundary_mass > GRID_BOUNDARY_TOLERANCE {
        return Err(Error::GridTooSmall { mass: boundary_mass });
    }
    let means: Vec<f64> = first.iter().map(|s| s / total).collect();
    let sds = second
        .iter()
        .zip(&means)
        .map(|(s, m)| (s / total - m * m).max(0.0).sqrt())
        .collect();
    Ok(GridPosterior {
        means,
        sds,
        boundary_mass,
    })
}
