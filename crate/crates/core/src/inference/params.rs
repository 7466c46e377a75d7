use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AcceptanceGraph, ConstructId};
use crate::survey::ScoredDataset;

pub fn intercept_name(outcome: ConstructId) -> String {
    format!("{outcome}.intercept")
}

pub fn coef_name(outcome: ConstructId, parent: ConstructId) -> String {
    format!("{outcome}<-{parent}")
}

pub fn sigma_name(outcome: ConstructId) -> String {
    format!("{outcome}.sigma")
}

/// Noise (standard deviation) parameters are named `*.sigma`; they are
/// positive and sampled on the log scale.
pub fn is_noise(name: &str) -> bool {
    name.ends_with(".sigma")
}

/// Parse `OUT<-PARENT` into its two constructs.
pub fn parse_coef_name(name: &str) -> Option<(ConstructId, ConstructId)> {
    let (out, parent) = name.split_once("<-")?;
    Some((out.parse().ok()?, parent.parse().ok()?))
}

/// One linear-Gaussian structural equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Equation {
    pub outcome: ConstructId,
    /// Parents with a coefficient, in `parents()` order.
    pub parents: Vec<ConstructId>,
    /// Graph parents dropped because their column is constant.
    pub undefined: Vec<ConstructId>,
}

impl Equation {
    pub fn names(&self) -> Vec<String> {
        let mut names = vec![intercept_name(self.outcome)];
        names.extend(self.parents.iter().map(|&p| coef_name(self.outcome, p)));
        names.push(sigma_name(self.outcome));
        names
    }

    pub fn len(&self) -> usize {
        self.parents.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Layout of the structural parameter vector: the BI equation (intercept,
/// coefficients, sigma) followed by the USE equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterLayout {
    pub intention: Equation,
    pub usage: Equation,
}

impl ParameterLayout {
    /// Equations from the graph. When a dataset is given, predictors whose
    /// column is degenerate are dropped and listed as undefined.
    pub fn new(graph: &AcceptanceGraph, data: Option<&ScoredDataset>) -> Result<Self> {
        let equation = |outcome: ConstructId| -> Result<Equation> {
            let mut parents = Vec::new();
            let mut undefined = Vec::new();
            for p in graph.parents(outcome)? {
                let degenerate = data
                    .and_then(|d| d.stats(p))
                    .map(|s| s.degenerate)
                    .unwrap_or(false);
                if degenerate {
                    log::warn!("column {p} is constant; coefficient {outcome}<-{p} is undefined");
                    undefined.push(p);
                } else {
                    parents.push(p);
                }
            }
            Ok(Equation {
                outcome,
                parents,
                undefined,
            })
        };
        Ok(Self {
            intention: equation(ConstructId::BI)?,
            usage: equation(ConstructId::USE)?,
        })
    }

    pub fn equations(&self) -> [&Equation; 2] {
        [&self.intention, &self.usage]
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = self.intention.names();
        names.extend(self.usage.names());
        names
    }

    pub fn len(&self) -> usize {
        self.intention.len() + self.usage.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset of an equation's first parameter.
    pub fn offset(&self, outcome: ConstructId) -> usize {
        match outcome {
            ConstructId::BI => 0,
            _ => self.intention.len(),
        }
    }

    pub fn undefined_coefficients(&self) -> Vec<String> {
        self.equations()
            .iter()
            .flat_map(|eq| eq.undefined.iter().map(|&p| coef_name(eq.outcome, p)))
            .collect()
    }
}

/// Parameter values on their natural scale, paired with names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} values",
                names.len(),
                values.len()
            )));
        }
        for (n, v) in names.iter().zip(&values) {
            if is_noise(n) && *v <= 0.0 {
                return Err(Error::DimensionMismatch(format!("noise parameter {n} must be positive, got {v}")));
            }
        }
        Ok(Self { names, values })
    }

    /// Vector for `layout` with every value from `f(name)`.
    pub fn from_fn(layout: &ParameterLayout, f: impl Fn(&str) -> f64) -> Result<Self> {
        let names = layout.names();
        let values = names.iter().map(|n| f(n)).collect();
        Self::new(names, values)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::DimensionMismatch(format!("no parameter named {name}")))?;
        self.values[i] = value;
        Ok(())
    }
}
