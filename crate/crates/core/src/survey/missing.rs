use serde::{Deserialize, Serialize};

use super::response::{RespondentKey, SurveyResponse};
use crate::model::{ConstructId, InstrumentSpec, MeasurementItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Fill a missing item with the respondent's mean of the other (coded)
    /// items of the same construct, provided at least half of the
    /// construct's items were answered; otherwise drop the respondent.
    #[default]
    PerConstructItemMean,
    /// Drop every respondent with any missing item.
    DropRespondent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DroppedRespondent {
    pub key: RespondentKey,
    pub construct: Option<ConstructId>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MissingReport {
    pub policy: MissingPolicy,
    pub dropped: Vec<DroppedRespondent>,
    pub imputed_values: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub responses: Vec<SurveyResponse>,
    pub report: MissingReport,
}

/// Answer after reverse coding.
pub(crate) fn coded_value(instrument: &InstrumentSpec, item: &MeasurementItem, raw: f64) -> f64 {
    if item.reverse_coded {
        let scale = instrument.item_scale(item);
        (scale.min + scale.max) as f64 - raw
    } else {
        raw
    }
}

fn uncoded_value(instrument: &InstrumentSpec, item: &MeasurementItem, coded: f64) -> f64 {
    // reverse coding is an involution
    coded_value(instrument, item, coded)
}

pub fn apply_missing_policy(
    responses: &[SurveyResponse],
    instrument: &InstrumentSpec,
    policy: MissingPolicy,
) -> PolicyOutcome {
    let groups = instrument.items_by_construct();
    let mut kept = Vec::with_capacity(responses.len());
    let mut report = MissingReport {
        policy,
        ..MissingReport::default()
    };

    'respondents: for response in responses {
        let mut filled = response.clone();
        let mut imputed = 0;
        for (&construct, items) in &groups {
            let answered: Vec<f64> = items
                .iter()
                .filter_map(|item| {
                    response
                        .answers
                        .get(&item.id)
                        .map(|&raw| coded_value(instrument, item, raw))
                })
                .collect();
            if answered.len() == items.len() {
                continue;
            }
            let keep = match policy {
                MissingPolicy::DropRespondent => false,
                MissingPolicy::PerConstructItemMean => !answered.is_empty() && 2 * answered.len() >= items.len(),
            };
            if !keep {
                report.dropped.push(DroppedRespondent {
                    key: response.key(),
                    construct: Some(construct),
                    reason: format!(
                        "{} of {} items answered for {construct}",
                        answered.len(),
                        items.len()
                    ),
                });
                continue 'respondents;
            }
            let mean = answered.iter().sum::<f64>() / answered.len() as f64;
            for item in items {
                if !response.answers.contains_key(&item.id) {
                    filled
                        .answers
                        .insert(item.id.clone(), uncoded_value(instrument, item, mean));
                    imputed += 1;
                }
            }
        }
        report.imputed_values += imputed;
        kept.push(filled);
    }
    PolicyOutcome {
        responses: kept,
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_instrument;

    fn complete(id: &str) -> SurveyResponse {
        let inst = default_instrument();
        SurveyResponse {
            respondent_id: id.into(),
            wave: "w1".into(),
            answers: inst.items().iter().map(|i| (i.id.clone(), 4.0)).collect(),
        }
    }

    #[test]
    fn no_missing_is_identity() {
        let inst = default_instrument();
        let rs = vec![complete("a"), complete("b")];
        for policy in [MissingPolicy::PerConstructItemMean, MissingPolicy::DropRespondent] {
            let out = apply_missing_policy(&rs, &inst, policy);
            assert_eq!(out.responses, rs);
            assert_eq!(out.report.imputed_values, 0);
            assert!(out.report.dropped.is_empty());
        }
    }

    #[test]
    fn one_of_three_missing_uses_mean_of_answered() {
        let inst = default_instrument();
        let mut r = complete("a");
        r.answers.insert("PE1".into(), 5.0);
        r.answers.insert("PE2".into(), 7.0);
        r.answers.remove("PE3");
        let out = apply_missing_policy(&[r], &inst, MissingPolicy::PerConstructItemMean);
        assert_eq!(out.responses.len(), 1);
        assert_eq!(out.responses[0].answers["PE3"], 6.0);
        assert_eq!(out.report.imputed_values, 1);
    }

    #[test]
    fn imputation_respects_reverse_coding() {
        let inst = default_instrument();
        let mut r = complete("a");
        // EE3 is reverse coded; coded mean of EE1, EE2 is 6 -> raw EE3 = 2
        r.answers.insert("EE1".into(), 6.0);
        r.answers.insert("EE2".into(), 6.0);
        r.answers.remove("EE3");
        let out = apply_missing_policy(&[r], &inst, MissingPolicy::PerConstructItemMean);
        assert_eq!(out.responses[0].answers["EE3"], 2.0);
    }

    #[test]
    fn all_items_missing_drops_respondent() {
        let inst = default_instrument();
        let mut r = complete("a");
        r.answers.remove("HM1");
        r.answers.remove("HM2");
        for policy in [MissingPolicy::PerConstructItemMean, MissingPolicy::DropRespondent] {
            let out = apply_missing_policy(&[r.clone(), complete("b")], &inst, policy);
            assert_eq!(out.responses.len(), 1);
            assert_eq!(out.responses[0].respondent_id, "b");
            assert_eq!(out.report.dropped[0].construct, Some(ConstructId::HM));
        }
    }

    #[test]
    fn below_half_answered_drops() {
        let inst = default_instrument();
        let mut r = complete("a");
        r.answers.remove("PE1");
        r.answers.remove("PE2");
        let out = apply_missing_policy(&[r], &inst, MissingPolicy::PerConstructItemMean);
        assert!(out.responses.is_empty());
    }

    #[test]
    fn drop_policy_drops_any_missing() {
        let inst = default_instrument();
        let mut r = complete("a");
        r.answers.remove("PE3");
        let out = apply_missing_policy(&[r], &inst, MissingPolicy::DropRespondent);
        assert!(out.responses.is_empty());
    }
}
