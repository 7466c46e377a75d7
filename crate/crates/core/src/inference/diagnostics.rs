use serde::{Deserialize, Serialize};

use super::sampler::PosteriorSamples;
use crate::stats::{mean, variance};

pub const RHAT_THRESHOLD: f64 = 1.05;
pub const ESS_THRESHOLD: f64 = 100.0;

/// Convergence diagnostics for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterDiagnostics {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    /// `None` when every draw is identical.
    pub r_hat: Option<f64>,
    pub ess: Option<f64>,
    pub degenerate: bool,
}

impl ParameterDiagnostics {
    pub fn converged(&self) -> bool {
        self.degenerate
            || (self.r_hat.is_some_and(|r| r <= RHAT_THRESHOLD) && self.ess.is_some_and(|e| e >= ESS_THRESHOLD))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsReport {
    pub parameters: Vec<ParameterDiagnostics>,
    pub rhat_threshold: f64,
    pub ess_threshold: f64,
    pub max_r_hat: Option<f64>,
    pub min_ess: Option<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn get(&self, parameter: &str) -> Option<&ParameterDiagnostics> {
        self.parameters.iter().find(|p| p.parameter == parameter)
    }
}

/// Split R-hat: every chain is cut in half and the halves are treated as
/// separate chains. Returns `None` for constant draws or chains too short
/// to split.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let halves = split_chains(chains)?;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let w = mean(&halves.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let b = n * variance(&means);
    if w <= 0.0 || !w.is_finite() {
        return None;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Some((var_plus / w).sqrt())
}

fn split_chains(chains: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = chains.first()?.len() / 2;
    if n < 2 {
        return None;
    }
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        // odd lengths drop the middle draw
        halves.push(c[..n].to_vec());
        halves.push(c[c.len() - n..].to_vec());
    }
    Some(halves)
}

/// Multi-chain effective sample size from the combined autocorrelation,
/// truncating the sum at the first negative pair of consecutive lags.
/// Returns `None` for constant draws.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Option<f64> {
    let m = chains.len();
    let n = chains.first()?.len();
    if m == 0 || n < 4 {
        return None;
    }
    let chain_means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov: Vec<Vec<f64>> = chains
        .iter()
        .zip(&chain_means)
        .map(|(c, &mu)| autocovariance(c, mu))
        .collect();
    let w = mean(&acov.iter().map(|a| a[0] * n as f64 / (n as f64 - 1.0)).collect::<Vec<_>>());
    let b_over_n = if m > 1 { variance(&chain_means) } else { 0.0 };
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return None;
    }
    let rho = |t: usize| -> f64 {
        let mean_acov = acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;
        1.0 - (w - mean_acov) / var_plus
    };

    let mut tau = -1.0;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        t += 2;
    }
    let total = (m * n) as f64;
    Some((total / tau.max(1.0 / total)).min(total))
}

/// Biased (divide by n) autocovariance at every lag.
fn autocovariance(x: &[f64], mu: f64) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = x.iter().map(|v| v - mu).collect();
    (0..n)
        .map(|lag| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

pub fn diagnose(samples: &PosteriorSamples) -> DiagnosticsReport {
    let mut parameters = Vec::with_capacity(samples.parameter_names.len());
    let mut warnings = Vec::new();
    for (i, name) in samples.parameter_names.iter().enumerate() {
        let chains = samples.chain_series(i);
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        let degenerate = pooled.windows(2).all(|w| w[0] == w[1]);
        let (r_hat, ess) = if degenerate {
            warnings.push(format!("{name}: every draw is identical; R-hat and ESS are undefined"));
            (None, None)
        } else {
            (split_rhat(&chains), effective_sample_size(&chains))
        };
        let d = ParameterDiagnostics {
            parameter: name.clone(),
            mean: mean(&pooled),
            sd: crate::stats::sd(&pooled),
            r_hat,
            ess,
            degenerate,
        };
        if !d.converged() {
            warnings.push(format!(
                "{name}: R-hat {} ESS {} outside thresholds (R-hat <= {RHAT_THRESHOLD}, ESS >= {ESS_THRESHOLD})",
                fmt_opt(r_hat, 3),
                fmt_opt(ess, 0)
            ));
        }
        parameters.push(d);
    }
    let max_r_hat = parameters.iter().filter_map(|p| p.r_hat).reduce(f64::max);
    let min_ess = parameters.iter().filter_map(|p| p.ess).reduce(f64::min);
    let converged = parameters.iter().all(ParameterDiagnostics::converged);
    DiagnosticsReport {
        parameters,
        rhat_threshold: RHAT_THRESHOLD,
        ess_threshold: ESS_THRESHOLD,
        max_r_hat,
        min_ess,
        converged,
        warnings,
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}
