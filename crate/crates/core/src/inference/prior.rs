use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::{is_noise, ParameterLayout, ParameterVector};
use crate::error::{Error, Result};
use crate::stats::{normal_logpdf, LN_2PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "camelCase")]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    HalfNormal { sd: f64 },
}

impl Marginal {
    /// Log density on the parameter's natural scale.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => normal_logpdf(x, mean, sd),
            Marginal::HalfNormal { sd } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    std::f64::consts::LN_2 + normal_logpdf(x, 0.0, sd)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } => mean,
            Marginal::HalfNormal { sd } => sd * (2.0 / std::f64::consts::PI).sqrt(),
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Marginal::Normal { sd, .. } => sd,
            Marginal::HalfNormal { sd } => sd * (1.0 - 2.0 / std::f64::consts::PI).sqrt(),
        }
    }

    fn check(&self) -> Result<()> {
        let sd = match *self {
            Marginal::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidPrior(format!("non-finite mean {mean}")));
                }
                sd
            }
            Marginal::HalfNormal { sd } => sd,
        };
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidPrior(format!("scale must be positive, got {sd}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarginalEntry {
    pub parameter: String,
    #[serde(flatten)]
    pub dist: Marginal,
}

/// Multivariate normal over a block of location parameters. The covariance
/// is stored as a row-major matrix (one inner array per row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GaussianBlock {
    pub parameters: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PriorProvenance {
    Default,
    #[serde(rename_all = "camelCase")]
    Chained { source_posterior_id: String },
}

/// Prior over every model parameter: independent marginals plus an
/// optional Gaussian block (present when chained from an earlier posterior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PriorSpec {
    pub v: u32,
    pub provenance: PriorProvenance,
    /// Graph and instrument the prior was derived under, when chained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_hash: Option<String>,
    pub marginals: Vec<MarginalEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<GaussianBlock>,
}

impl PriorSpec {
    /// Normal(0, 2) intercepts, Normal(0, 1) coefficients, HalfNormal(1) noise.
    pub fn default_for(layout: &ParameterLayout) -> Self {
        Self::from_names(&layout.names())
    }

    pub fn from_names(names: &[String]) -> Self {
        let marginals = names
            .iter()
            .map(|name| MarginalEntry {
                parameter: name.clone(),
                dist: default_marginal(name),
            })
            .collect();
        Self {
            v: 1,
            provenance: PriorProvenance::Default,
            graph_hash: None,
            marginals,
            block: None,
        }
    }

    pub fn parameter_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.marginals.iter().map(|m| m.parameter.as_str()).collect();
        if let Some(block) = &self.block {
            names.extend(block.parameters.iter().map(String::as_str));
        }
        names
    }

    pub fn marginal(&self, name: &str) -> Option<&Marginal> {
        self.marginals.iter().find(|m| m.parameter == name).map(|m| &m.dist)
    }

    /// Structural checks: positive scales, symmetric PSD covariance, no
    /// parameter covered twice.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for name in self.parameter_names() {
            if !seen.insert(name) {
                return Err(Error::InvalidPrior(format!("parameter {name} has more than one prior")));
            }
        }
        for m in &self.marginals {
            m.dist.check()?;
        }
        if let Some(block) = &self.block {
            let d = block.parameters.len();
            if block.mean.len() != d || block.covariance.len() != d || block.covariance.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidPrior("gaussian block dimensions disagree".into()));
            }
            if block.mean.iter().chain(block.covariance.iter().flatten()).any(|x| !x.is_finite()) {
                return Err(Error::InvalidPrior("gaussian block has non-finite entries".into()));
            }
            let cov = block_matrix(block);
            let scale = cov.diagonal().iter().fold(1e-300f64, |a, &b| a.max(b.abs()));
            for i in 0..d {
                for j in 0..i {
                    if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 * scale {
                        return Err(Error::InvalidPrior("covariance is not symmetric".into()));
                    }
                }
            }
            let eig = cov.symmetric_eigen();
            if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
                return Err(Error::InvalidPrior("covariance is not positive semi-definite".into()));
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("prior serializes")
    }

    /// Canonical compact bytes; their sha256 is [`PriorSpec::hash`].
    pub fn to_json(&self) -> Vec<u8> {
        crate::hashing::canonical_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let prior: PriorSpec = serde_json::from_slice(bytes)?;
        prior.validate()?;
        Ok(prior)
    }

    pub fn hash(&self) -> String {
        crate::hashing::canonical_hash(self)
    }
}

pub fn default_marginal(name: &str) -> Marginal {
    if is_noise(name) {
        Marginal::HalfNormal { sd: 1.0 }
    } else if name.ends_with(".intercept") {
        Marginal::Normal { mean: 0.0, sd: 2.0 }
    } else if name.ends_with(".loading") {
        Marginal::Normal { mean: 1.0, sd: 1.0 }
    } else {
        Marginal::Normal { mean: 0.0, sd: 1.0 }
    }
}

fn block_matrix(block: &GaussianBlock) -> DMatrix<f64> {
    let d = block.parameters.len();
    DMatrix::from_fn(d, d, |i, j| block.covariance[i][j])
}

/// Prior resolved against a concrete parameter ordering, ready for fast
/// repeated evaluation. Densities are on the sampler's coordinates: noise
/// parameters enter as `log sigma`, so the log-Jacobian `ln sigma` is added.
#[derive(Debug, Clone)]
pub struct CompiledPrior {
    /// Marginal of each coordinate (none for block members) and whether it is a noise parameter.
    marginals: Vec<(Option<Marginal>, bool)>,
    block: Option<CompiledBlock>,
}

#[derive(Debug, Clone)]
struct CompiledBlock {
    indices: Vec<usize>,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl CompiledPrior {
    pub fn new(prior: &PriorSpec, names: &[String]) -> Result<Self> {
        prior.validate()?;
        let index = |p: &str| names.iter().position(|n| n == p);
        for name in prior.parameter_names() {
            if index(name).is_none() {
                return Err(Error::InvalidPrior(format!("prior names unknown parameter {name}")));
            }
        }
        let covered: BTreeSet<&str> = prior.parameter_names().into_iter().collect();
        if let Some(missing) = names.iter().find(|n| !covered.contains(n.as_str())) {
            return Err(Error::MissingPrior(missing.clone()));
        }
        let mut marginals: Vec<(Option<Marginal>, bool)> = names.iter().map(|n| (None, is_noise(n))).collect();
        for m in &prior.marginals {
            marginals[index(&m.parameter).expect("checked")].0 = Some(m.dist);
        }
        let block = match &prior.block {
            None => None,
            Some(b) => {
                let indices: Vec<usize> = b.parameters.iter().map(|p| index(p).expect("checked")).collect();
                if let Some(&i) = indices.iter().find(|&&i| is_noise(&names[i])) {
                    return Err(Error::InvalidPrior(format!(
                        "noise parameter {} cannot be in the gaussian block",
                        names[i]
                    )));
                }
                let chol = robust_cholesky(block_matrix(b))?;
                let d = indices.len() as f64;
                let log_det: f64 = 2.0 * chol.diagonal().iter().map(|x| x.ln()).sum::<f64>();
                Some(CompiledBlock {
                    indices,
                    mean: DVector::from_vec(b.mean.clone()),
                    chol,
                    log_norm: -0.5 * d * LN_2PI - 0.5 * log_det,
                })
            }
        };
        Ok(Self { marginals, block })
    }

    /// Log prior at a point in sampler coordinates (noise as log sigma).
    /// Coordinates past the prior's parameters are ignored.
    pub fn log_density_unconstrained(&self, x: &[f64]) -> f64 {
        let mut total: f64 = (0..self.marginals.len()).map(|i| self.coordinate_term(x, i)).sum();
        if let Some(block) = &self.block {
            total += block.log_density(|k| x[block.indices[k]]);
        }
        total
    }

    /// Prior terms that involve coordinate `i`.
    pub fn local_log_density_unconstrained(&self, x: &[f64], i: usize) -> f64 {
        if i >= self.marginals.len() {
            return 0.0;
        }
        let mut total = self.coordinate_term(x, i);
        if let Some(block) = self.block.as_ref().filter(|b| b.indices.contains(&i)) {
            total += block.log_density(|k| x[block.indices[k]]);
        }
        total
    }

    fn coordinate_term(&self, x: &[f64], i: usize) -> f64 {
        match self.marginals[i] {
            (Some(dist), true) => dist.log_density(x[i].exp()) + x[i],
            (Some(dist), false) => dist.log_density(x[i]),
            (None, true) => x[i],
            (None, false) => 0.0,
        }
    }
}

impl CompiledBlock {
    fn log_density(&self, value: impl Fn(usize) -> f64) -> f64 {
        let d = self.indices.len();
        let diff = DVector::from_fn(d, |k, _| value(k) - self.mean[k]);
        // forward substitution with the lower Cholesky factor
        let mut y = DVector::zeros(d);
        for r in 0..d {
            let mut s = diff[r];
            for c in 0..r {
                s -= self.chol[(r, c)] * y[c];
            }
            y[r] = s / self.chol[(r, r)];
        }
        self.log_norm - 0.5 * y.norm_squared()
    }
}

/// Lower Cholesky factor; singular PSD matrices get a growing diagonal jitter.
fn robust_cholesky(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    let scale = (m.trace() / d.max(1) as f64).abs().max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut attempt = m.clone();
        for i in 0..d {
            attempt[(i, i)] += jitter;
        }
        if let Some(ch) = attempt.cholesky() {
            return Ok(ch.l());
        }
        jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 10.0 };
    }
    Err(Error::InvalidPrior("covariance matrix is not positive definite".into()))
}

/// Log prior density of `params`, with the `ln sigma` log-transform
/// Jacobian included for noise parameters.
pub fn log_prior(params: &ParameterVector, prior: &PriorSpec) -> Result<f64> {
    let compiled = CompiledPrior::new(prior, &params.names)?;
    let x: Vec<f64> = params
        .names
        .iter()
        .zip(&params.values)
        .map(|(n, &v)| if is_noise(n) { v.ln() } else { v })
        .collect();
    Ok(compiled.log_density_unconstrained(&x))
}
