use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::simulate::{PredictiveSummary, ScenarioSummary, SimulationOptions, Simulator, DEFAULT_LEVEL};
use crate::error::{Error, Result};
use crate::inference::Posterior;
use crate::model::InstrumentSpec;
use crate::stats::{central_interval, mean};
use crate::survey::ScoredDataset;

/// One row per scenario per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub rows: Vec<PredictiveSummary>,
}

impl Comparison {
    /// Plain-text table aligned on columns.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
        let mut out = format!(
            "{:<width$}  {:<6} {:>8} {:>8} {:>9} {:>9} {:>9} {:>8}\n",
            "scenario", "target", "mean", "sd", "lower", "upper", "raw mean", "draws"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:<6} {:>8.3} {:>8.3} {:>9.3} {:>9.3} {:>9.3} {:>8}",
                r.scenario,
                r.target.as_str(),
                r.mean,
                r.sd,
                r.lower,
                r.upper,
                r.raw_mean,
                r.draw_count
            );
        }
        out
    }
}

fn check_names(scenarios: &[Scenario]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in scenarios {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::InvalidScenario(format!("duplicate scenario name {}", s.name)));
        }
    }
    Ok(())
}

/// Simulate every scenario with the same seed. Each row equals the result
/// of simulating that scenario on its own.
pub fn compare(
    posterior: &Posterior,
    data: &ScoredDataset,
    instrument: &InstrumentSpec,
    scenarios: &[Scenario],
    options: &SimulationOptions,
) -> Result<Comparison> {
    check_names(scenarios)?;
    let sim = Simulator::new(posterior, data, instrument)?;
    let mut rows = Vec::with_capacity(scenarios.len() * 2);
    for s in scenarios {
        s.validate(instrument.graph())?;
        let summary = sim.simulate(s, options)?;
        rows.push(summary.bi);
        rows.push(summary.usage);
    }
    Ok(Comparison { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankEntry {
    pub scenario: String,
    /// Expected change in mean USE (z scale) relative to the baseline.
    pub expected_gain: f64,
    /// Central interval of the per-draw gain.
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// Share of posterior draws whose gain is positive.
    pub probability_of_improvement: f64,
    pub summary: ScenarioSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankingResult {
    pub baseline: ScenarioSummary,
    pub ranking: Vec<RankEntry>,
}

impl RankingResult {
    pub fn order(&self) -> Vec<&str> {
        self.ranking.iter().map(|e| e.scenario.as_str()).collect()
    }

    pub fn to_table(&self) -> String {
        let width = self.ranking.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
        let mut out = format!(
            "{:>4}  {:<width$}  {:>9} {:>9} {:>9} {:>8}\n",
            "rank", "scenario", "USE gain", "lower", "upper", "P(gain)"
        );
        for (i, e) in self.ranking.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>9.3} {:>9.3} {:>9.3} {:>8.3}",
                i + 1,
                e.scenario,
                e.expected_gain,
                e.lower,
                e.upper,
                e.probability_of_improvement
            );
        }
        let _ = writeln!(
            out,
            "baseline USE mean {:.3} (raw {:.2}), BI mean {:.3} (raw {:.2})",
            self.baseline.usage.mean, self.baseline.usage.raw_mean, self.baseline.bi.mean, self.baseline.bi.raw_mean
        );
        out
    }
}

/// Rank scenarios by expected USE gain over the baseline, highest first;
/// ties go to the alphabetically first name. Baseline and scenarios share
/// random numbers draw by draw, so gains carry no simulation noise from
/// the outcome equations beyond what the intervention itself changes.
pub fn rank(
    posterior: &Posterior,
    data: &ScoredDataset,
    instrument: &InstrumentSpec,
    scenarios: &[Scenario],
    options: &SimulationOptions,
) -> Result<RankingResult> {
    if scenarios.is_empty() {
        return Err(Error::InvalidScenario("ranking needs at least one scenario".into()));
    }
    check_names(scenarios)?;
    let sim = Simulator::new(posterior, data, instrument)?;
    let (baseline, base_means) = sim.simulate_detailed(&Scenario::baseline(), options)?;
    let mut ranking = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        s.validate(instrument.graph())?;
        let (summary, means) = sim.simulate_detailed(s, options)?;
        let gains: Vec<f64> = means.iter().zip(&base_means).map(|(a, b)| a - b).collect();
        let (lower, upper) = central_interval(&gains, DEFAULT_LEVEL);
        ranking.push(RankEntry {
            scenario: s.name.clone(),
            expected_gain: mean(&gains),
            level: DEFAULT_LEVEL,
            lower,
            upper,
            probability_of_improvement: gains.iter().filter(|&&g| g > 0.0).count() as f64 / gains.len() as f64,
            summary,
        });
    }
    ranking.sort_by(|a, b| {
        b.expected_gain
            .total_cmp(&a.expected_gain)
            .then_with(|| a.scenario.cmp(&b.scenario))
    });
    Ok(RankingResult { baseline, ranking })
}
