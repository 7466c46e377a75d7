use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identifier of an acceptance construct.
///
/// Declaration order is the registry order (predictors in table order, then
/// BI and USE) and is used for every deterministic ordering in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstructId {
    PE,
    EE,
    SI,
    FC,
    HM,
    HB,
    TC,
    PI,
    CT,
    TR,
    BI,
    USE,
}

impl ConstructId {
    pub const ALL: [ConstructId; 12] = [
        ConstructId::PE,
        ConstructId::EE,
        ConstructId::SI,
        ConstructId::FC,
        ConstructId::HM,
        ConstructId::HB,
        ConstructId::TC,
        ConstructId::PI,
        ConstructId::CT,
        ConstructId::TR,
        ConstructId::BI,
        ConstructId::USE,
    ];

    pub const PREDICTORS: [ConstructId; 10] = [
        ConstructId::PE,
        ConstructId::EE,
        ConstructId::SI,
        ConstructId::FC,
        ConstructId::HM,
        ConstructId::HB,
        ConstructId::TC,
        ConstructId::PI,
        ConstructId::CT,
        ConstructId::TR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstructId::PE => "PE",
            ConstructId::EE => "EE",
            ConstructId::SI => "SI",
            ConstructId::FC => "FC",
            ConstructId::HM => "HM",
            ConstructId::HB => "HB",
            ConstructId::TC => "TC",
            ConstructId::PI => "PI",
            ConstructId::CT => "CT",
            ConstructId::TR => "TR",
            ConstructId::BI => "BI",
            ConstructId::USE => "USE",
        }
    }

    pub fn is_outcome(self) -> bool {
        matches!(self, ConstructId::BI | ConstructId::USE)
    }
}

impl fmt::Display for ConstructId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstructId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstructId::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownConstruct(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Predictor,
    Intention,
    Use,
}

/// Theory a construct or a relationship originates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theory {
    Utaut,
    Utaut2,
    Additional,
    Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Construct {
    pub id: ConstructId,
    pub name: String,
    pub definition: String,
    pub role: Role,
    pub theory: Theory,
}

impl Construct {
    fn new(id: ConstructId, name: &str, definition: &str, role: Role, theory: Theory) -> Self {
        Self {
            id,
            name: name.to_string(),
            definition: definition.to_string(),
            role,
            theory,
        }
    }
}

/// The twelve constructs of the default acceptance model, in registry order.
pub fn default_registry() -> Vec<Construct> {
    use ConstructId::*;
    use Role::*;
    vec![
        Construct::new(
            PE,
            "Performance Expectancy",
            "Belief that using the system helps attain gains in job performance (Venkatesh et al., 2003)",
            Predictor,
            Theory::Utaut,
        ),
        Construct::new(
            EE,
            "Effort Expectancy",
            "Degree of ease associated with using the system (Venkatesh et al., 2003)",
            Predictor,
            Theory::Utaut,
        ),
        Construct::new(
            SI,
            "Social Influence",
            "Perception that important others believe one should use the system (Venkatesh et al., 2003)",
            Predictor,
            Theory::Utaut,
        ),
        Construct::new(
            FC,
            "Facilitating Conditions",
            "Belief that organizational and technical infrastructure supports use (Venkatesh et al., 2003)",
            Predictor,
            Theory::Utaut,
        ),
        Construct::new(
            HM,
            "Hedonic Motivation",
            "Fun or pleasure derived from using the technology (Venkatesh et al., 2012)",
            Predictor,
            Theory::Utaut2,
        ),
        Construct::new(
            HB,
            "Habit",
            "Tendency to use the technology automatically because of learning (Venkatesh et al., 2012)",
            Predictor,
            Theory::Utaut2,
        ),
        Construct::new(
            TC,
            "Technology Compatibility",
            "Perceived consistency with existing values, needs and experiences of adopters (Blut et al., 2022)",
            Predictor,
            Theory::Additional,
        ),
        Construct::new(
            PI,
            "Personal Innovativeness",
            "Willingness to try out any new technology (Blut et al., 2022)",
            Predictor,
            Theory::Additional,
        ),
        Construct::new(
            CT,
            "Costs of Technology",
            "Extent to which using the technology is perceived as costly (Blut et al., 2022)",
            Predictor,
            Theory::Additional,
        ),
        Construct::new(
            TR,
            "Trust",
            "Attitude that an agent helps achieve one's goals under uncertainty and vulnerability (Choudhuri et al., 2025)",
            Predictor,
            Theory::Additional,
        ),
        Construct::new(
            BI,
            "Behavioral Intention",
            "Stated intention to use the technology",
            Intention,
            Theory::Outcome,
        ),
        Construct::new(
            USE,
            "Actual Use",
            "Realized use of the technology",
            Use,
            Theory::Outcome,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_roles() {
        let reg = default_registry();
        assert_eq!(reg.len(), 12);
        assert_eq!(reg.iter().filter(|c| c.role == Role::Predictor).count(), 10);
        let intention: Vec<_> = reg.iter().filter(|c| c.role == Role::Intention).collect();
        let usage: Vec<_> = reg.iter().filter(|c| c.role == Role::Use).collect();
        assert_eq!(intention.len(), 1);
        assert_eq!(intention[0].id, ConstructId::BI);
        assert_eq!(usage.len(), 1);
        assert_eq!(usage[0].id, ConstructId::USE);
    }

    #[test]
    fn registry_order_matches_ids() {
        let ids: Vec<_> = default_registry().iter().map(|c| c.id).collect();
        assert_eq!(ids, ConstructId::ALL.to_vec());
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn parse_ids() {
        assert_eq!("tc".parse::<ConstructId>().unwrap(), ConstructId::TC);
        assert_eq!("USE".parse::<ConstructId>().unwrap(), ConstructId::USE);
        assert!("PV".parse::<ConstructId>().is_err());
    }
}
