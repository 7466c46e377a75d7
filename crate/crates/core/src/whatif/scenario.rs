use std::collections::BTreeMap;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{AcceptanceGraph, ConstructId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterventionScale {
    /// Likert points on the instrument scale.
    #[default]
    Raw,
    /// Standard deviations from the sample mean.
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub value: f64,
    #[serde(default)]
    pub scale: InterventionScale,
}

/// `do(construct = value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intervention {
    pub construct: ConstructId,
    pub value: f64,
    pub scale: InterventionScale,
}

/// A named set of interventions, at most one per construct. The empty
/// scenario is the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, deserialize_with = "unique_settings")]
    pub set: BTreeMap<ConstructId, Setting>,
}

impl Scenario {
    pub fn baseline() -> Self {
        Self::new("baseline")
    }

    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            set: BTreeMap::new(),
        }
    }

    pub fn with(mut self, construct: ConstructId, value: f64, scale: InterventionScale) -> Self {
        self.set.insert(construct, Setting { value, scale });
        self
    }

    pub fn interventions(&self) -> Vec<Intervention> {
        self.set
            .iter()
            .map(|(&construct, s)| Intervention {
                construct,
                value: s.value,
                scale: s.scale,
            })
            .collect()
    }

    pub fn is_baseline(&self) -> bool {
        self.set.is_empty()
    }

    /// Every intervened construct must be a predictor node of `graph`.
    pub fn validate(&self, graph: &AcceptanceGraph) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidScenario("scenario name is empty".into()));
        }
        let predictors = graph.predictors();
        for (c, s) in &self.set {
            if !predictors.contains(c) {
                return Err(Error::InvalidScenario(format!(
                    "{c} is not a predictor construct and cannot be intervened on"
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::InvalidScenario(format!("value for {c} is not finite")));
            }
        }
        Ok(())
    }
}

fn unique_settings<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<ConstructId, Setting>, D::Error> {
    struct Unique;

    impl<'de> Visitor<'de> for Unique {
        type Value = BTreeMap<ConstructId, Setting>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map from construct id to {value, scale}")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((key, setting)) = map.next_entry::<String, Setting>()? {
                let construct: ConstructId = key.parse().map_err(serde::de::Error::custom)?;
                if out.insert(construct, setting).is_some() {
                    return Err(serde::de::Error::custom(format!("construct {construct} is set twice")));
                }
            }
            Ok(out)
        }
    }

    d.deserialize_map(Unique)
}

/// Parse a scenario file holding one scenario object or an array of them.
pub fn parse_scenarios(bytes: &[u8]) -> Result<Vec<Scenario>> {
    let invalid = |e: serde_json::Error| Error::InvalidScenario(format!("scenario file: {e}"));
    // decode straight from bytes: an intermediate Value would merge repeated keys
    if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'[') {
        serde_json::from_slice(bytes).map_err(invalid)
    } else {
        Ok(vec![serde_json::from_slice(bytes).map_err(invalid)?])
    }
}
