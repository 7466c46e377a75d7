//! Synthetic respondents generated from known structural coefficients, for
//! recovery tests and the bundled example data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{coef_name, intercept_name, sigma_name, ParameterLayout, ParameterVector};
use crate::model::{default_graph, ConstructId, InstrumentSpec, ItemKind, LikertScale};
use crate::survey::{DatasetProvenance, RespondentKey, ScoredDataset, SurveyResponse};

/// Generating model on the raw construct scale. Predictors are normal with
/// the given means and sds and a shared factor inducing correlation
/// `shared`; BI and USE follow linear equations with normal noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Generator {
    pub respondents: usize,
    pub seed: u64,
    /// Mean and sd of each predictor, registry order.
    pub predictors: Vec<(ConstructId, f64, f64)>,
    pub shared: f64,
    pub bi_intercept: f64,
    pub bi_coefs: Vec<(ConstructId, f64)>,
    pub bi_sigma: f64,
    pub use_intercept: f64,
    pub use_coefs: Vec<(ConstructId, f64)>,
    pub use_sigma: f64,
    /// Sd of item noise around the construct score when items are generated.
    pub item_noise: f64,
}

impl Default for Generator {
    fn default() -> Self {
        use ConstructId::*;
        Self {
            respondents: 200,
            seed: 42,
            predictors: vec![
                (PE, 5.0, 1.0),
                (EE, 5.2, 0.9),
                (SI, 4.2, 1.1),
                (FC, 3.6, 1.0),
                (HM, 4.8, 1.0),
                (HB, 3.9, 1.2),
                (TC, 3.4, 1.0),
                (PI, 4.5, 1.1),
                (CT, 3.0, 1.0),
                (TR, 4.1, 0.9),
            ],
            shared: 0.25,
            bi_intercept: 4.5,
            bi_coefs: vec![
                (PE, 0.30),
                (EE, 0.15),
                (SI, 0.10),
                (FC, 0.20),
                (HM, 0.10),
                (HB, 0.15),
                (TC, 0.40),
                (PI, -0.05),
                (CT, -0.15),
                (TR, 0.20),
            ],
            bi_sigma: 0.6,
            use_intercept: 3.8,
            use_coefs: vec![(BI, 0.6), (FC, 0.25), (HB, 0.2)],
            use_sigma: 0.7,
            item_noise: 0.6,
        }
    }
}

/// Raw construct scores plus the coefficients that generated them,
/// re-expressed in the z-score metric of this particular sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScores {
    pub dataset: ScoredDataset,
    pub truth: ParameterVector,
}

impl Generator {
    fn coef(list: &[(ConstructId, f64)], c: ConstructId) -> f64 {
        list.iter().find(|(k, _)| *k == c).map_or(0.0, |(_, b)| *b)
    }

    /// Raw scores in registry column order (12 columns), centred so the
    /// intercepts are the outcome means at average predictors.
    fn raw_rows(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let shared = self.shared.clamp(0.0, 1.0);
        (0..self.respondents)
            .map(|_| {
                let f: f64 = rng.sample(StandardNormal);
                let mut row = vec![0.0; ConstructId::ALL.len()];
                let mut bi = self.bi_intercept;
                for &(c, m, s) in &self.predictors {
                    let e: f64 = rng.sample(StandardNormal);
                    let x = m + s * (shared.sqrt() * f + (1.0 - shared).sqrt() * e);
                    row[c as usize] = x;
                    bi += Self::coef(&self.bi_coefs, c) * (x - m);
                }
                let e: f64 = rng.sample(StandardNormal);
                bi += self.bi_sigma * e;
                row[ConstructId::BI as usize] = bi;
                let mut usage = self.use_intercept + Self::coef(&self.use_coefs, ConstructId::BI) * (bi - self.bi_intercept);
                for &(c, m, _) in &self.predictors {
                    if c != ConstructId::BI {
                        usage += Self::coef(&self.use_coefs, c) * (row[c as usize] - m);
                    }
                }
                let e: f64 = rng.sample(StandardNormal);
                row[ConstructId::USE as usize] = usage + self.use_sigma * e;
                row
            })
            .collect()
    }

    /// Continuous construct scores (no item layer) and the exact z-metric
    /// truth: with column means `m` and sds `s`, a raw coefficient `b_k`
    /// becomes `b_k s_k / s_y`, the noise sd `sigma / s_y`, and the
    /// intercept absorbs the centring.
    pub fn scores(&self) -> Result<SyntheticScores> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let rows = self.raw_rows(&mut rng);
        let keys = (0..rows.len())
            .map(|i| RespondentKey {
                respondent_id: format!("s{:04}", i + 1),
                wave: "1".into(),
            })
            .collect();
        let dataset = ScoredDataset::from_raw_scores(
            keys,
            ConstructId::ALL.to_vec(),
            rows,
            LikertScale::DEFAULT,
            DatasetProvenance::default(),
        )?;
        let layout = ParameterLayout::new(&default_graph(), Some(&dataset))?;
        let stats = |c: ConstructId| dataset.stats(c).map(|s| (s.mean, s.sd)).expect("all columns present");
        let mut truth = ParameterVector::from_fn(&layout, |_| 1.0)?;
        for (outcome, intercept, coefs, sigma) in [
            (ConstructId::BI, self.bi_intercept, &self.bi_coefs, self.bi_sigma),
            (ConstructId::USE, self.use_intercept, &self.use_coefs, self.use_sigma),
        ] {
            let (my, sy) = stats(outcome);
            // outcome = intercept + sum b_k (x_k - c_k) + e, with c_k the generating centre
            let mut alpha = intercept - my;
            for parent in default_graph().parents(outcome)? {
                let b = Self::coef(coefs, parent);
                let centre = if parent == ConstructId::BI {
                    self.bi_intercept
                } else {
                    self.predictors.iter().find(|p| p.0 == parent).map_or(0.0, |p| p.1)
                };
                let (mk, sk) = stats(parent);
                alpha += b * (mk - centre);
                truth.set(&coef_name(outcome, parent), b * sk / sy)?;
            }
            truth.set(&intercept_name(outcome), alpha / sy)?;
            truth.set(&sigma_name(outcome), sigma / sy)?;
        }
        Ok(SyntheticScores { dataset, truth })
    }

    /// Item-level answers: each item is the construct score plus noise,
    /// rounded and clipped to the item's scale, mirrored for reverse-coded
    /// items.
    pub fn responses(&self, instrument: &InstrumentSpec) -> Vec<SurveyResponse> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let rows = self.raw_rows(&mut rng);
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let answers = instrument
                    .items()
                    .iter()
                    .map(|item| {
                        let scale = instrument.item_scale(item);
                        let noise: f64 = rng.sample(StandardNormal);
                        let value = row[item.construct_id as usize] + self.item_noise * noise;
                        let value = match item.kind {
                            ItemKind::Continuous => (value * 100.0).round() / 100.0,
                            ItemKind::Likert => {
                                let coded = value.round().clamp(scale.min as f64, scale.max as f64);
                                if item.reverse_coded {
                                    (scale.min + scale.max) as f64 - coded
                                } else {
                                    coded
                                }
                            }
                        };
                        (item.id.clone(), value)
                    })
                    .collect();
                SurveyResponse {
                    respondent_id: format!("s{:04}", i + 1),
                    wave: "1".into(),
                    answers,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::log_likelihood;
    use crate::model::default_instrument;
    use crate::survey::{parse_responses, score_constructs, to_csv, InputFormat};

    #[test]
    fn zero_noise_truth_fits_exactly() {
        // with (almost) no noise the z-metric truth reproduces every BI z-score
        let g = Generator {
            bi_sigma: 1e-9,
            use_sigma: 1e-9,
            respondents: 30,
            ..Generator::default()
        };
        let s = g.scores().unwrap();
        let bi = s.dataset.column_index(ConstructId::BI).unwrap();
        let parents = default_graph().parents(ConstructId::BI).unwrap();
        for row in &s.dataset.z_scores {
            let mut mu = s.truth.get("BI.intercept").unwrap();
            for p in &parents {
                mu += s.truth.get(&coef_name(ConstructId::BI, *p)).unwrap() * row[*p as usize];
            }
            assert!((mu - row[bi]).abs() < 1e-6);
        }
    }

    #[test]
    fn truth_beats_perturbed_parameters() {
        let s = Generator::default().scores().unwrap();
        let at_truth = log_likelihood(&s.truth, &s.dataset, &default_graph()).unwrap();
        let mut off = s.truth.clone();
        off.set("BI<-TC", s.truth.get("BI<-TC").unwrap() + 0.3).unwrap();
        assert!(log_likelihood(&off, &s.dataset, &default_graph()).unwrap() < at_truth);
    }

    #[test]
    fn generated_responses_parse_and_score() {
        let inst = default_instrument();
        let responses = Generator::default().responses(&inst);
        let csv = to_csv(&responses);
        let parsed = parse_responses(csv.as_bytes(), InputFormat::Csv, &inst).unwrap();
        assert_eq!(parsed, responses);
        let scored = score_constructs(&parsed, &inst, true).unwrap();
        assert_eq!(scored.len(), 200);
        assert!(scored.column_stats.iter().all(|c| !c.degenerate));
    }

    #[test]
    fn deterministic() {
        assert_eq!(Generator::default().scores().unwrap(), Generator::default().scores().unwrap());
    }
}
