use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{InterventionScale, Scenario};
use crate::error::{Error, Result};
use crate::inference::{chain_rng, Posterior};
use crate::model::{ConstructId, InstrumentSpec};
use crate::stats::{central_interval, mean, sd};
use crate::survey::ScoredDataset;

pub const DEFAULT_LEVEL: f64 = 0.9;

/// Pooled posterior predictive distribution of one outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictiveSummary {
    pub scenario: String,
    pub target: ConstructId,
    /// On the z-score scale of the fitted model.
    pub mean: f64,
    pub sd: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub draw_count: usize,
    /// `mean` mapped back to Likert points.
    pub raw_mean: f64,
}

/// BI and USE summaries for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioSummary {
    pub bi: PredictiveSummary,
    #[serde(rename = "use")]
    pub usage: PredictiveSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationOptions {
    pub draws_per_sample: usize,
    pub seed: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            draws_per_sample: 1,
            seed: 20_260_101,
        }
    }
}

/// Structural coefficients of one posterior draw, dense over columns.
#[derive(Debug, Clone)]
pub(crate) struct DrawCoefficients {
    pub bi_intercept: f64,
    pub bi_coefs: Vec<(usize, f64)>,
    pub bi_sigma: f64,
    pub use_intercept: f64,
    pub use_bi: f64,
    pub use_coefs: Vec<(usize, f64)>,
    pub use_sigma: f64,
}

impl DrawCoefficients {
    pub fn expected_bi(&self, row: &[f64]) -> f64 {
        self.bi_intercept + self.bi_coefs.iter().map(|&(c, b)| b * row[c]).sum::<f64>()
    }

    pub fn expected_use(&self, row: &[f64], bi: f64) -> f64 {
        self.use_intercept + self.use_bi * bi + self.use_coefs.iter().map(|&(c, b)| b * row[c]).sum::<f64>()
    }
}

/// Everything needed to simulate: per-draw coefficients and the reference
/// population of respondents.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub(crate) draws: Vec<DrawCoefficients>,
    /// Respondent rows on the model's scale (parcel z-scores or latent scores).
    pub(crate) population: Vec<Vec<f64>>,
    constructs: Vec<ConstructId>,
    /// Per-column affine map from parcel z to the model scale.
    scale_map: Vec<(f64, f64)>,
    data: ScoredDataset,
    predictors: Vec<ConstructId>,
    undefined: Vec<ConstructId>,
}

impl Simulator {
    pub fn new(posterior: &Posterior, data: &ScoredDataset, instrument: &InstrumentSpec) -> Result<Self> {
        if posterior.dataset_hash != data.hash() {
            return Err(Error::HashMismatch(format!(
                "posterior was fit to dataset {}, got {}",
                posterior.dataset_hash,
                data.hash()
            )));
        }
        if posterior.graph_hash != instrument.graph_hash() {
            return Err(Error::HashMismatch(format!(
                "posterior was fit under graph {}, got {}",
                posterior.graph_hash,
                instrument.graph_hash()
            )));
        }
        let column = |c: ConstructId| {
            data.column_index(c)
                .ok_or_else(|| Error::DimensionMismatch(format!("dataset has no column for {c}")))
        };
        let layout = &posterior.layout;
        let names = layout.names();
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                posterior
                    .samples
                    .index_of(n)
                    .ok_or_else(|| Error::DimensionMismatch(format!("posterior has no parameter {n}")))
            })
            .collect::<Result<_>>()?;
        let bi_len = layout.intention.len();
        let bi_cols: Vec<usize> = layout.intention.parents.iter().map(|&p| column(p)).collect::<Result<_>>()?;
        let mut use_parents = Vec::new();
        let mut use_bi_pos = None;
        for (k, &p) in layout.usage.parents.iter().enumerate() {
            if p == ConstructId::BI {
                use_bi_pos = Some(k);
            } else {
                use_parents.push((k, column(p)?));
            }
        }
        let draws = posterior
            .samples
            .iter_draws()
            .map(|d| {
                let v = |k: usize| d[idx[k]];
                let u = |k: usize| d[idx[bi_len + k]];
                let use_k = layout.usage.parents.len();
                DrawCoefficients {
                    bi_intercept: v(0),
                    bi_coefs: bi_cols.iter().enumerate().map(|(j, &c)| (c, v(1 + j))).collect(),
                    bi_sigma: v(bi_len - 1),
                    use_intercept: u(0),
                    use_bi: use_bi_pos.map_or(0.0, |k| u(1 + k)),
                    use_coefs: use_parents.iter().map(|&(k, c)| (c, u(1 + k))).collect(),
                    use_sigma: u(use_k + 1),
                }
            })
            .collect();

        let (population, scale_map) = match &posterior.latent_scores {
            None => (data.z_scores.clone(), vec![(0.0, 1.0); data.constructs.len()]),
            Some(scores) => {
                if scores.len() != data.len() {
                    return Err(Error::DimensionMismatch("latent scores do not match the dataset".into()));
                }
                let map = (0..data.constructs.len())
                    .map(|c| {
                        let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
                        let s = if col.len() > 1 { sd(&col) } else { 1.0 };
                        (if col.is_empty() { 0.0 } else { mean(&col) }, s)
                    })
                    .collect();
                (scores.clone(), map)
            }
        };
        let mut undefined = layout.intention.undefined.clone();
        undefined.extend(layout.usage.undefined.iter().copied());
        Ok(Self {
            draws,
            population,
            constructs: data.constructs.clone(),
            scale_map,
            data: data.clone(),
            predictors: instrument.graph().predictors(),
            undefined,
        })
    }

    pub fn num_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn respondents(&self) -> usize {
        self.population.len()
    }

    fn column(&self, c: ConstructId) -> Result<usize> {
        self.constructs
            .iter()
            .position(|&k| k == c)
            .ok_or_else(|| Error::UnknownConstruct(c.to_string()))
    }

    /// Column overrides on the model scale.
    pub fn resolve(&self, scenario: &Scenario) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for iv in scenario.interventions() {
            if !self.predictors.contains(&iv.construct) {
                return Err(Error::InvalidScenario(format!("{} is not a predictor construct", iv.construct)));
            }
            if self.undefined.contains(&iv.construct) {
                return Err(Error::InvalidScenario(format!(
                    "{} is constant in the data; its effect is undefined",
                    iv.construct
                )));
            }
            let col = self.column(iv.construct)?;
            let z = match iv.scale {
                InterventionScale::Z => iv.value,
                InterventionScale::Raw => {
                    let scale = self.data.scale;
                    if !scale.contains(iv.value) {
                        return Err(Error::OutOfBounds {
                            item: iv.construct.to_string(),
                            value: iv.value,
                            min: scale.min,
                            max: scale.max,
                        });
                    }
                    let stats = &self.data.column_stats[col];
                    stats.to_z(iv.value).ok_or_else(|| {
                        Error::InvalidScenario(format!("{} is constant in the data; raw values cannot be converted", iv.construct))
                    })?
                }
            };
            let (m, s) = self.scale_map[col];
            out.push((col, if (m, s) == (0.0, 1.0) { z } else { m + s * z }));
        }
        Ok(out)
    }

    /// Map a model-scale value of `construct` back to Likert points.
    pub fn to_raw(&self, construct: ConstructId, value: f64) -> Result<f64> {
        let col = self.column(construct)?;
        let (m, s) = self.scale_map[col];
        let z = if (m, s) == (0.0, 1.0) { value } else { (value - m) / s };
        Ok(self.data.column_stats[col].to_raw(z))
    }

    /// Simulated `(BI*, USE*)` values grouped by posterior draw. Draw `d`
    /// uses RNG stream `d` of `seed`, so scenarios simulated with the same
    /// seed share their noise (common random numbers).
    pub(crate) fn simulate_draws(&self, overrides: &[(usize, f64)], options: &SimulationOptions) -> Vec<(Vec<f64>, Vec<f64>)> {
        let k = options.draws_per_sample;
        self.draws
            .par_iter()
            .enumerate()
            .map(|(d, coef)| {
                let mut rng = chain_rng(options.seed, d as u64);
                let mut bi_out = Vec::with_capacity(self.population.len() * k);
                let mut use_out = Vec::with_capacity(self.population.len() * k);
                let mut row = Vec::new();
                for person in &self.population {
                    row.clone_from(person);
                    for &(c, v) in overrides {
                        row[c] = v;
                    }
                    let bi_mean = coef.expected_bi(&row);
                    for _ in 0..k {
                        let e1: f64 = rng.sample(StandardNormal);
                        let e2: f64 = rng.sample(StandardNormal);
                        let bi = bi_mean + coef.bi_sigma * e1;
                        let usage = coef.expected_use(&row, bi) + coef.use_sigma * e2;
                        bi_out.push(bi);
                        use_out.push(usage);
                    }
                }
                (bi_out, use_out)
            })
            .collect()
    }

    /// Posterior predictive summaries of BI and USE under `scenario`.
    pub fn simulate(&self, scenario: &Scenario, options: &SimulationOptions) -> Result<ScenarioSummary> {
        Ok(self.simulate_detailed(scenario, options)?.0)
    }

    /// Summaries plus the mean simulated USE of every posterior draw.
    pub(crate) fn simulate_detailed(&self, scenario: &Scenario, options: &SimulationOptions) -> Result<(ScenarioSummary, Vec<f64>)> {
        if options.draws_per_sample == 0 {
            return Err(Error::InvalidConfig("draws per sample must be positive".into()));
        }
        if self.population.is_empty() || self.draws.is_empty() {
            return Err(Error::InvalidConfig("simulation needs respondents and posterior draws".into()));
        }
        let overrides = self.resolve(scenario)?;
        let per_draw = self.simulate_draws(&overrides, options);
        let use_means: Vec<f64> = per_draw.iter().map(|(_, u)| mean(u)).collect();
        let (bi, usage): (Vec<_>, Vec<_>) = per_draw.into_iter().unzip();
        let bi: Vec<f64> = bi.concat();
        let usage: Vec<f64> = usage.concat();
        let summary = ScenarioSummary {
            bi: self.summarize(&scenario.name, ConstructId::BI, &bi)?,
            usage: self.summarize(&scenario.name, ConstructId::USE, &usage)?,
        };
        Ok((summary, use_means))
    }

    fn summarize(&self, scenario: &str, target: ConstructId, values: &[f64]) -> Result<PredictiveSummary> {
        let m = mean(values);
        let (lower, upper) = central_interval(values, DEFAULT_LEVEL);
        Ok(PredictiveSummary {
            scenario: scenario.to_string(),
            target,
            mean: m,
            sd: if values.len() > 1 { sd(values) } else { 0.0 },
            level: DEFAULT_LEVEL,
            lower,
            upper,
            draw_count: values.len(),
            raw_mean: self.to_raw(target, m)?,
        })
    }
}

/// Posterior predictive of BI and USE under a scenario.
pub fn simulate(
    posterior: &Posterior,
    data: &ScoredDataset,
    instrument: &InstrumentSpec,
    scenario: &Scenario,
    options: &SimulationOptions,
) -> Result<ScenarioSummary> {
    scenario.validate(instrument.graph())?;
    Simulator::new(posterior, data, instrument)?.simulate(scenario, options)
}

/// [`simulate`] with the empty scenario.
pub fn baseline(
    posterior: &Posterior,
    data: &ScoredDataset,
    instrument: &InstrumentSpec,
    options: &SimulationOptions,
) -> Result<ScenarioSummary> {
    simulate(posterior, data, instrument, &Scenario::baseline(), options)
}
