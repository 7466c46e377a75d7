use serde::{Deserialize, Serialize};

use super::compress::compress_samples;
use super::diagnostics::{diagnose, DiagnosticsReport};
use super::latent::{latent_score_means, LatentModel};
use super::model::StructuralModel;
use super::params::{is_noise, ParameterLayout, ParameterVector};
use super::prior::{PriorProvenance, PriorSpec};
use super::sampler::{run_sampler, PosteriorSamples, SamplerConfig};
use crate::error::{Error, Result};
use crate::model::{ConstructId, InstrumentSpec};
use crate::stats::central_interval;
use crate::survey::ScoredDataset;

/// How construct scores enter the structural model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Measurement {
    /// Item-mean parcel z-scores are treated as observed.
    #[default]
    Parcel,
    /// Congeneric measurement model with sampled latent scores.
    Latent,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FitOptions {
    pub sampler: SamplerConfig,
    pub measurement: Measurement,
}

/// A fitted posterior bound to the graph and dataset it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Posterior {
    pub v: u32,
    #[serde(flatten)]
    pub samples: PosteriorSamples,
    pub diagnostics_summary: DiagnosticsReport,
    pub graph_hash: String,
    pub dataset_hash: String,
    pub prior_hash: String,
    pub prior_provenance: PriorProvenance,
    pub sampler: SamplerConfig,
    pub measurement: Measurement,
    pub layout: ParameterLayout,
    /// Posterior-mean latent scores (`respondents x constructs`), latent fits only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_scores: Option<Vec<Vec<f64>>>,
    pub undefined_coefficients: Vec<String>,
    pub warnings: Vec<String>,
}

impl Posterior {
    pub fn id(&self) -> String {
        crate::hashing::canonical_hash(self)
    }

    pub fn to_json(&self) -> Vec<u8> {
        crate::hashing::canonical_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let p: Posterior = serde_json::from_slice(bytes)?;
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let s = &self.samples;
        PosteriorSamples::new(s.parameter_names.clone(), s.draws.clone(), s.seed, s.acceptance_rates.clone())?;
        let structural = self.layout.names();
        if s.parameter_names.len() < structural.len() || s.parameter_names[..structural.len()] != structural[..] {
            return Err(Error::DimensionMismatch("posterior draws do not start with the structural parameters".into()));
        }
        Ok(())
    }

    /// Wrap externally produced draws (for example a constructed point
    /// mass) as a posterior for `data` under the default prior.
    pub fn from_samples(instrument: &InstrumentSpec, data: &ScoredDataset, samples: PosteriorSamples) -> Result<Self> {
        let layout = ParameterLayout::new(instrument.graph(), Some(data))?;
        let prior = PriorSpec::from_names(&samples.parameter_names);
        let diagnostics_summary = diagnose(&samples);
        let posterior = Self {
            v: 1,
            sampler: SamplerConfig {
                chains: samples.num_chains(),
                kept_draws: samples.num_draws(),
                warmup_draws: 0,
                seed: samples.seed,
                ..SamplerConfig::default()
            },
            samples,
            warnings: diagnostics_summary.warnings.clone(),
            diagnostics_summary,
            graph_hash: instrument.graph_hash(),
            dataset_hash: data.hash(),
            prior_hash: prior.hash(),
            prior_provenance: prior.provenance,
            measurement: Measurement::Parcel,
            undefined_coefficients: layout.undefined_coefficients(),
            layout,
            latent_scores: None,
        };
        posterior.check()?;
        Ok(posterior)
    }

    pub fn converged(&self) -> bool {
        self.diagnostics_summary.converged
    }

    /// Structural parameters of one pooled draw.
    pub fn structural_draw(&self, index: usize) -> ParameterVector {
        let names = self.layout.names();
        let m = self.samples.num_draws();
        let draw = &self.samples.draws[index / m][index % m];
        ParameterVector {
            values: draw[..names.len()].to_vec(),
            names,
        }
    }

    pub fn coefficient_table(&self, probability: f64) -> Vec<CoefficientSummary> {
        self.samples
            .parameter_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let pooled = self.samples.pooled(i);
                let (lower, upper) = central_interval(&pooled, probability);
                let diag = self.diagnostics_summary.get(name);
                CoefficientSummary {
                    parameter: name.clone(),
                    mean: crate::stats::mean(&pooled),
                    sd: crate::stats::sd(&pooled),
                    lower,
                    upper,
                    r_hat: diag.and_then(|d| d.r_hat),
                    ess: diag.and_then(|d| d.ess),
                }
            })
            .collect()
    }

    /// Compress into a prior for the next wave.
    pub fn compress(&self) -> Result<PriorSpec> {
        compress_samples(
            &self.samples,
            PriorProvenance::Chained {
                source_posterior_id: self.id(),
            },
            Some(self.graph_hash.clone()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoefficientSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub r_hat: Option<f64>,
    pub ess: Option<f64>,
}

/// Parameter names the model will sample for `data`.
pub fn model_parameter_names(instrument: &InstrumentSpec, data: &ScoredDataset, measurement: Measurement) -> Result<Vec<String>> {
    match measurement {
        Measurement::Parcel => Ok(ParameterLayout::new(instrument.graph(), Some(data))?.names()),
        Measurement::Latent => LatentModel::names_for(instrument.graph(), data),
    }
}

/// Fit the structural model. Without a prior the defaults are used. A
/// chained prior must come from the same graph and instrument.
pub fn fit(instrument: &InstrumentSpec, data: &ScoredDataset, prior: Option<&PriorSpec>, options: &FitOptions) -> Result<Posterior> {
    let graph_hash = instrument.graph_hash();
    let names = model_parameter_names(instrument, data, options.measurement)?;
    let prior = match prior {
        Some(p) => {
            if let Some(h) = &p.graph_hash {
                if *h != graph_hash {
                    return Err(Error::HashMismatch(format!(
                        "prior was derived under graph {h}, current graph is {graph_hash}"
                    )));
                }
            }
            p.clone()
        }
        None => PriorSpec::from_names(&names),
    };
    check_data_matches(instrument, data)?;

    let layout = ParameterLayout::new(instrument.graph(), Some(data))?;
    let (samples, latent_scores) = match options.measurement {
        Measurement::Parcel => {
            let model = StructuralModel::with_layout(layout.clone(), data, &prior)?;
            (run_sampler(&model, &options.sampler)?.samples, None)
        }
        Measurement::Latent => {
            let model = LatentModel::new(instrument.graph(), data, &prior)?;
            let run = run_sampler(&model, &options.sampler)?;
            let scores = latent_score_means(&model, &run.coordinate_means);
            (run.samples, Some(scores))
        }
    };
    let diagnostics_summary = diagnose(&samples);
    let mut warnings = data.provenance.warnings.clone();
    warnings.extend(diagnostics_summary.warnings.iter().cloned());
    if !diagnostics_summary.converged {
        warnings.push("diagnostics thresholds violated; treat this posterior with caution".into());
    }
    Ok(Posterior {
        v: 1,
        samples,
        diagnostics_summary,
        graph_hash,
        dataset_hash: data.hash(),
        prior_hash: prior.hash(),
        prior_provenance: prior.provenance.clone(),
        sampler: options.sampler.clone(),
        measurement: options.measurement,
        undefined_coefficients: layout.undefined_coefficients(),
        layout,
        latent_scores,
        warnings,
    })
}

fn check_data_matches(instrument: &InstrumentSpec, data: &ScoredDataset) -> Result<()> {
    for c in instrument.graph().node_ids() {
        if data.column_index(c).is_none() {
            return Err(Error::DimensionMismatch(format!("dataset has no column for graph node {c}")));
        }
    }
    Ok(())
}

/// Posterior mean of every noise-free structural coefficient `OUT<-PARENT`.
pub fn coefficient_means(posterior: &Posterior) -> Vec<((ConstructId, ConstructId), f64)> {
    posterior
        .samples
        .parameter_names
        .iter()
        .filter(|n| !is_noise(n))
        .filter_map(|n| {
            let pair = super::params::parse_coef_name(n)?;
            Some((pair, posterior.samples.mean(n)?))
        })
        .collect()
}
