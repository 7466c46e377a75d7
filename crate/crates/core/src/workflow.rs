//! Steps shared by the command line and the HTTP service, so both produce
//! identical artifacts from identical inputs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{CoefficientSummary, Measurement, Posterior};
use crate::model::{ConstructId, InstrumentSpec};
use crate::survey::{parse_responses, score_responses, InputFormat, ScoredDataset, ScoringOptions};

/// Anything that can be turned into a scored dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetInput {
    ResponsesCsv,
    ResponsesJson,
    Scored,
}

impl DatasetInput {
    /// CSV by extension; JSON is inspected to tell response lists from
    /// scored datasets.
    pub fn detect(path_hint: Option<&str>, bytes: &[u8]) -> Self {
        let first = bytes.iter().find(|b| !b.is_ascii_whitespace()).copied();
        let csv_name = path_hint.is_some_and(|p| p.to_ascii_lowercase().ends_with(".csv"));
        match first {
            Some(b'{') if !csv_name => Self::Scored,
            Some(b'[') if !csv_name => Self::ResponsesJson,
            _ => Self::ResponsesCsv,
        }
    }
}

/// Parse and score survey input with the default missing-data policy.
pub fn load_dataset(bytes: &[u8], kind: DatasetInput, instrument: &InstrumentSpec) -> Result<ScoredDataset> {
    let format = match kind {
        DatasetInput::Scored => return ScoredDataset::from_json(bytes),
        DatasetInput::ResponsesCsv => InputFormat::Csv,
        DatasetInput::ResponsesJson => InputFormat::Json,
    };
    let responses = parse_responses(bytes, format, instrument)?;
    score_responses(&responses, instrument, &ScoringOptions::with_default_policy())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstructMean {
    pub construct: ConstructId,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsOverview {
    pub converged: bool,
    pub max_r_hat: Option<f64>,
    pub min_ess: Option<f64>,
    pub acceptance_rates: Vec<f64>,
    pub warnings: Vec<String>,
}

/// What a reader needs from a fit: coefficients with credible intervals,
/// convergence, and the construct means of the data it was fit to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PosteriorSummary {
    pub v: u32,
    pub posterior_id: String,
    pub graph_hash: String,
    pub dataset_hash: String,
    pub measurement: Measurement,
    pub level: f64,
    pub coefficients: Vec<CoefficientSummary>,
    pub undefined_coefficients: Vec<String>,
    pub diagnostics: DiagnosticsOverview,
    pub construct_raw_means: Vec<ConstructMean>,
    pub respondents: usize,
}

pub const SUMMARY_LEVEL: f64 = 0.9;

pub fn posterior_summary(posterior: &Posterior, data: &ScoredDataset) -> Result<PosteriorSummary> {
    if posterior.dataset_hash != data.hash() {
        return Err(Error::HashMismatch(format!(
            "posterior was fit to dataset {}, got {}",
            posterior.dataset_hash,
            data.hash()
        )));
    }
    let d = &posterior.diagnostics_summary;
    Ok(PosteriorSummary {
        v: 1,
        posterior_id: posterior.id(),
        graph_hash: posterior.graph_hash.clone(),
        dataset_hash: posterior.dataset_hash.clone(),
        measurement: posterior.measurement,
        level: SUMMARY_LEVEL,
        coefficients: posterior.coefficient_table(SUMMARY_LEVEL),
        undefined_coefficients: posterior.undefined_coefficients.clone(),
        diagnostics: DiagnosticsOverview {
            converged: d.converged,
            max_r_hat: d.max_r_hat,
            min_ess: d.min_ess,
            acceptance_rates: posterior.samples.acceptance_rates.clone(),
            warnings: posterior.warnings.clone(),
        },
        construct_raw_means: data
            .column_stats
            .iter()
            .map(|s| ConstructMean {
                construct: s.construct,
                mean: s.mean,
                sd: s.sd,
            })
            .collect(),
        respondents: data.len(),
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}

/// R-hat / ESS table.
pub fn diagnostics_table(posterior: &Posterior) -> String {
    let d = &posterior.diagnostics_summary;
    let width = d.parameters.iter().map(|p| p.parameter.len()).max().unwrap_or(9).max(9);
    let mut out = format!("{:<width$}  {:>8} {:>8} {:>7} {:>8}\n", "parameter", "mean", "sd", "R-hat", "ESS");
    for p in &d.parameters {
        let flag = if p.converged() { "" } else { "  !" };
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.3} {:>8.3} {:>7} {:>8}{flag}",
            p.parameter,
            p.mean,
            p.sd,
            opt(p.r_hat, 3),
            opt(p.ess, 0)
        );
    }
    let rates: Vec<String> = posterior.samples.acceptance_rates.iter().map(|r| format!("{r:.2}")).collect();
    let _ = writeln!(out, "acceptance rates per chain: {}", rates.join(" "));
    let _ = writeln!(
        out,
        "thresholds: R-hat <= {}, ESS >= {}; {}",
        d.rhat_threshold,
        d.ess_threshold,
        if d.converged { "all parameters pass" } else { "SOME PARAMETERS FAIL" }
    );
    out
}

/// Human-readable report: coefficients, construct means, and the
/// constructs whose mean is below the scale midpoint while their effect on
/// BI is credibly positive (candidates for intervention).
pub fn report(summary: &PosteriorSummary, midpoint: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "posterior {}", summary.posterior_id);
    let _ = writeln!(
        out,
        "respondents: {}   measurement: {:?}   converged: {}",
        summary.respondents, summary.measurement, summary.diagnostics.converged
    );
    let _ = writeln!(out);
    let width = summary.coefficients.iter().map(|c| c.parameter.len()).max().unwrap_or(9).max(9);
    let pct = (summary.level * 100.0).round();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8} {:>8} {:>9} {:>9}",
        "parameter",
        "mean",
        "sd",
        format!("{}% lo", pct),
        format!("{}% hi", pct)
    );
    for c in &summary.coefficients {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.3} {:>8.3} {:>9.3} {:>9.3}",
            c.parameter, c.mean, c.sd, c.lower, c.upper
        );
    }
    if !summary.undefined_coefficients.is_empty() {
        let _ = writeln!(out, "undefined (constant column): {}", summary.undefined_coefficients.join(", "));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<9} {:>10} {:>8}", "construct", "raw mean", "raw sd");
    for m in &summary.construct_raw_means {
        let _ = writeln!(out, "{:<9} {:>10.3} {:>8.3}", m.construct.as_str(), m.mean, m.sd);
    }
    let candidates = intervention_candidates(summary, midpoint);
    let _ = writeln!(out);
    if candidates.is_empty() {
        let _ = writeln!(out, "no construct combines a below-midpoint mean with a credibly positive effect on BI");
    } else {
        let _ = writeln!(out, "intervention candidates (mean below {midpoint}, effect on BI credibly positive):");
        for (c, mean, effect) in candidates {
            let _ = writeln!(out, "  {c}: mean {mean:.2}, BI<-{c} {effect:.3}");
        }
    }
    if !summary.diagnostics.warnings.is_empty() {
        let _ = writeln!(out);
        for w in &summary.diagnostics.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
    }
    out
}

/// Predictors with raw mean below `midpoint` and a BI coefficient whose
/// lower credible bound is above zero, strongest effect first.
pub fn intervention_candidates(summary: &PosteriorSummary, midpoint: f64) -> Vec<(ConstructId, f64, f64)> {
    let mut out: Vec<(ConstructId, f64, f64)> = summary
        .construct_raw_means
        .iter()
        .filter(|m| !m.construct.is_outcome() && m.mean < midpoint)
        .filter_map(|m| {
            let coef = summary
                .coefficients
                .iter()
                .find(|c| c.parameter == format!("BI<-{}", m.construct))?;
            (coef.lower > 0.0).then_some((m.construct, m.mean, coef.mean))
        })
        .collect();
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    out
}
