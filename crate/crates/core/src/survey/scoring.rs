use serde::{Deserialize, Serialize};

use super::missing::{apply_missing_policy, coded_value, DroppedRespondent, MissingPolicy, MissingReport};
use super::response::{RespondentKey, SurveyResponse};
use crate::error::{Error, Result};
use crate::model::{ConstructId, InstrumentSpec, LikertScale};

/// Per-construct mean and sample sd on the raw (Likert point) scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColumnStats {
    pub construct: ConstructId,
    pub mean: f64,
    pub sd: f64,
    /// Constant (or single-row) column; its z-scores are all zero.
    pub degenerate: bool,
}

impl ColumnStats {
    pub fn to_z(&self, raw: f64) -> Option<f64> {
        (!self.degenerate && self.sd > 0.0).then(|| (raw - self.mean) / self.sd)
    }

    pub fn to_raw(&self, z: f64) -> f64 {
        self.mean + z * self.sd
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetProvenance {
    pub missing: Option<MissingReport>,
    pub dropped: Vec<DroppedRespondent>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoringOptions {
    pub policy: Option<MissingPolicy>,
    /// Fail instead of dropping respondents that have no usable items for a construct.
    pub strict: bool,
}

impl ScoringOptions {
    pub fn with_default_policy() -> Self {
        Self {
            policy: Some(MissingPolicy::default()),
            strict: false,
        }
    }
}

/// Construct scores per respondent, raw and standardized.
///
/// Rows follow `respondents`, columns follow `constructs` (registry order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoredDataset {
    pub v: u32,
    pub respondents: Vec<RespondentKey>,
    pub constructs: Vec<ConstructId>,
    pub raw_scores: Vec<Vec<f64>>,
    pub z_scores: Vec<Vec<f64>>,
    pub column_stats: Vec<ColumnStats>,
    pub scale: LikertScale,
    pub provenance: DatasetProvenance,
    /// Coded item answers behind the scores, used by the latent measurement layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<ItemMatrix>,
}

/// Coded (reverse-scored) answers per respondent and item; `None` = missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemMatrix {
    pub item_ids: Vec<String>,
    pub item_constructs: Vec<ConstructId>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl ScoredDataset {
    /// Standardize raw construct scores column by column (sample sd, n - 1).
    pub fn from_raw_scores(
        respondents: Vec<RespondentKey>,
        constructs: Vec<ConstructId>,
        raw_scores: Vec<Vec<f64>>,
        scale: LikertScale,
        provenance: DatasetProvenance,
    ) -> Result<Self> {
        if respondents.len() != raw_scores.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} respondents but {} score rows",
                respondents.len(),
                raw_scores.len()
            )));
        }
        let k = constructs.len();
        if let Some(row) = raw_scores.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(format!(
                "score row has {} columns, expected {k}",
                row.len()
            )));
        }
        if raw_scores.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite raw score".into()));
        }
        let n = raw_scores.len();
        let mut column_stats = Vec::with_capacity(k);
        let mut z_scores = vec![vec![0.0; k]; n];
        let mut provenance = provenance;
        for (j, &construct) in constructs.iter().enumerate() {
            let column: Vec<f64> = raw_scores.iter().map(|r| r[j]).collect();
            let mean = if n == 0 { 0.0 } else { column.iter().sum::<f64>() / n as f64 };
            let sd = if n < 2 {
                0.0
            } else {
                (column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            };
            let constant = n >= 1 && column.iter().all(|&x| x == column[0]);
            let degenerate = n >= 1 && (constant || sd == 0.0);
            if degenerate {
                provenance
                    .warnings
                    .push(format!("construct {construct} is constant across respondents"));
            } else {
                for (i, x) in column.iter().enumerate() {
                    z_scores[i][j] = (x - mean) / sd;
                }
            }
            column_stats.push(ColumnStats {
                construct,
                mean,
                sd,
                degenerate,
            });
        }
        Ok(Self {
            v: 1,
            respondents,
            constructs,
            raw_scores,
            z_scores,
            column_stats,
            scale,
            provenance,
            items: None,
        })
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    pub fn column_index(&self, construct: ConstructId) -> Option<usize> {
        self.constructs.iter().position(|&c| c == construct)
    }

    pub fn stats(&self, construct: ConstructId) -> Option<&ColumnStats> {
        self.column_stats.iter().find(|s| s.construct == construct)
    }

    pub fn z_column(&self, construct: ConstructId) -> Option<Vec<f64>> {
        let j = self.column_index(construct)?;
        Some(self.z_scores.iter().map(|r| r[j]).collect())
    }

    pub fn raw_means(&self) -> Vec<(ConstructId, f64)> {
        self.column_stats.iter().map(|s| (s.construct, s.mean)).collect()
    }

    pub fn hash(&self) -> String {
        crate::hashing::canonical_hash(self)
    }

    pub fn to_json(&self) -> Vec<u8> {
        crate::hashing::canonical_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let ds: ScoredDataset = serde_json::from_slice(bytes)?;
        ds.check_shape()?;
        Ok(ds)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.respondents.len();
        let k = self.constructs.len();
        let rows_ok = self.raw_scores.len() == n
            && self.z_scores.len() == n
            && self.raw_scores.iter().all(|r| r.len() == k)
            && self.z_scores.iter().all(|r| r.len() == k);
        let stats_ok = self.column_stats.len() == k
            && self
                .column_stats
                .iter()
                .zip(&self.constructs)
                .all(|(s, &c)| s.construct == c);
        let items_ok = self.items.as_ref().is_none_or(|m| {
            m.item_ids.len() == m.item_constructs.len()
                && m.values.len() == n
                && m.values.iter().all(|r| r.len() == m.item_ids.len())
        });
        if rows_ok && stats_ok && items_ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("scored dataset arrays do not match its header".into()))
        }
    }
}

/// Unweighted mean of coded items per construct, then standardization.
///
/// Respondents with no usable item for some construct are dropped with a
/// warning, or rejected in strict mode. Missing data is not imputed here; see
/// [`score_responses`] for the full pipeline.
pub fn score_constructs(responses: &[SurveyResponse], instrument: &InstrumentSpec, strict: bool) -> Result<ScoredDataset> {
    let groups = instrument.items_by_construct();
    let constructs: Vec<ConstructId> = groups.keys().copied().collect();
    let mut provenance = DatasetProvenance::default();
    let mut keys = Vec::with_capacity(responses.len());
    let mut rows = Vec::with_capacity(responses.len());
    let item_list: Vec<_> = groups.values().flatten().collect();
    let mut item_rows = Vec::with_capacity(responses.len());
    'respondents: for response in responses {
        let mut row = Vec::with_capacity(constructs.len());
        for (&construct, items) in &groups {
            let coded: Vec<f64> = items
                .iter()
                .filter_map(|item| {
                    response
                        .answers
                        .get(&item.id)
                        .map(|&raw| coded_value(instrument, item, raw))
                })
                .collect();
            if coded.is_empty() {
                if strict {
                    return Err(Error::NoUsableItems {
                        respondent: response.key().to_string(),
                        construct,
                    });
                }
                log::warn!("dropping respondent {}: no usable items for {construct}", response.key());
                provenance.dropped.push(DroppedRespondent {
                    key: response.key(),
                    construct: Some(construct),
                    reason: format!("no usable items for {construct}"),
                });
                continue 'respondents;
            }
            row.push(coded.iter().sum::<f64>() / coded.len() as f64);
        }
        keys.push(response.key());
        rows.push(row);
        item_rows.push(
            item_list
                .iter()
                .map(|item| response.answers.get(&item.id).map(|&raw| coded_value(instrument, item, raw)))
                .collect(),
        );
    }
    if !provenance.dropped.is_empty() {
        provenance
            .warnings
            .push(format!("{} respondents dropped during scoring", provenance.dropped.len()));
    }
    let mut scored = ScoredDataset::from_raw_scores(keys, constructs, rows, instrument.scale(), provenance)?;
    scored.items = Some(ItemMatrix {
        item_ids: item_list.iter().map(|i| i.id.clone()).collect(),
        item_constructs: item_list.iter().map(|i| i.construct_id).collect(),
        values: item_rows,
    });
    Ok(scored)
}

/// Missing-data policy followed by scoring.
pub fn score_responses(
    responses: &[SurveyResponse],
    instrument: &InstrumentSpec,
    options: &ScoringOptions,
) -> Result<ScoredDataset> {
    if options.strict {
        for response in responses {
            for (&construct, items) in &instrument.items_by_construct() {
                if !items.iter().any(|i| response.answers.contains_key(&i.id)) {
                    return Err(Error::NoUsableItems {
                        respondent: response.key().to_string(),
                        construct,
                    });
                }
            }
        }
    }
    let Some(policy) = options.policy else {
        return score_constructs(responses, instrument, options.strict);
    };
    let outcome = apply_missing_policy(responses, instrument, policy);
    let mut scored = score_constructs(&outcome.responses, instrument, options.strict)?;
    if !outcome.report.dropped.is_empty() {
        scored.provenance.warnings.insert(
            0,
            format!(
                "{} respondents dropped by missing-data policy",
                outcome.report.dropped.len()
            ),
        );
    }
    let mut dropped = outcome.report.dropped.clone();
    dropped.append(&mut scored.provenance.dropped);
    scored.provenance.dropped = dropped;
    scored.provenance.missing = Some(outcome.report);
    Ok(scored)
}

/// Mean pairwise Pearson correlation between the coded items of each
/// construct, over respondents answering both items. `None` when a
/// construct has fewer than two items or no defined correlation.
pub fn item_correlations(responses: &[SurveyResponse], instrument: &InstrumentSpec) -> Vec<(ConstructId, Option<f64>)> {
    let mut out = Vec::new();
    for (construct, items) in instrument.items_by_construct() {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for a in 0..items.len() {
            for b in (a + 1)..items.len() {
                let (xs, ys): (Vec<f64>, Vec<f64>) = responses
                    .iter()
                    .filter_map(|r| {
                        let x = r.answers.get(&items[a].id)?;
                        let y = r.answers.get(&items[b].id)?;
                        Some((
                            coded_value(instrument, items[a], *x),
                            coded_value(instrument, items[b], *y),
                        ))
                    })
                    .unzip();
                if let Some(r) = pearson(&xs, &ys) {
                    total += r;
                    pairs += 1;
                }
            }
        }
        out.push((construct, (pairs > 0).then(|| total / pairs as f64)));
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
