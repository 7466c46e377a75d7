use super::diagnostics::{diagnose, RHAT_THRESHOLD};
use super::params::is_noise;
use super::prior::{GaussianBlock, Marginal, MarginalEntry, PriorProvenance, PriorSpec};
use super::sampler::PosteriorSamples;
use crate::error::{Error, Result};
use crate::stats::mean;

/// Moment-match pooled posterior draws into a prior for the next wave.
///
/// Location parameters (intercepts, coefficients, loadings) become one
/// multivariate normal block with the pooled mean and covariance. Each
/// noise parameter becomes a HalfNormal whose second moment equals the
/// posterior second moment. Refuses samples whose split R-hat exceeds the
/// convergence threshold.
pub fn compress_samples(samples: &PosteriorSamples, provenance: PriorProvenance, graph_hash: Option<String>) -> Result<PriorSpec> {
    if samples.num_chains() < 2 {
        return Err(Error::TooFewChains(samples.num_chains()));
    }
    let report = diagnose(samples);
    let bad: Vec<String> = report
        .parameters
        .iter()
        .filter(|p| p.r_hat.is_some_and(|r| r > RHAT_THRESHOLD))
        .map(|p| format!("{} (R-hat {:.3})", p.parameter, p.r_hat.unwrap_or(f64::NAN)))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Unconverged(format!(
            "refusing to compress: {} exceed R-hat {RHAT_THRESHOLD}",
            bad.join(", ")
        )));
    }

    let names = &samples.parameter_names;
    let location: Vec<usize> = (0..names.len()).filter(|&i| !is_noise(&names[i])).collect();
    let columns: Vec<Vec<f64>> = location.iter().map(|&i| samples.pooled(i)).collect();
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let n = samples.total_draws();
    let d = location.len();
    let mut covariance = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in a..d {
            let cov = columns[a]
                .iter()
                .zip(&columns[b])
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum::<f64>()
                / (n as f64 - 1.0);
            covariance[a][b] = cov;
            covariance[b][a] = cov;
        }
    }

    let marginals = (0..names.len())
        .filter(|&i| is_noise(&names[i]))
        .map(|i| {
            let second = mean(&samples.pooled(i).iter().map(|s| s * s).collect::<Vec<_>>());
            MarginalEntry {
                parameter: names[i].clone(),
                dist: Marginal::HalfNormal { sd: second.sqrt() },
            }
        })
        .collect();
    let block = (d > 0).then(|| GaussianBlock {
        parameters: location.iter().map(|&i| names[i].clone()).collect(),
        mean: means,
        covariance,
    });
    let prior = PriorSpec {
        v: 1,
        provenance,
        graph_hash,
        marginals,
        block,
    };
    prior.validate()?;
    Ok(prior)
}
