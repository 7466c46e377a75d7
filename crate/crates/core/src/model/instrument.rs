use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::construct::{Construct, ConstructId};
use super::graph::{default_graph, validate_graph, AcceptanceGraph, Edge};
use crate::error::{Error, Result};

/// Inclusive ordinal bounds of a Likert scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertScale {
    pub min: i32,
    pub max: i32,
}

impl LikertScale {
    pub const DEFAULT: LikertScale = LikertScale { min: 1, max: 7 };

    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min >= max {
            return Err(Error::InvalidInstrument(format!(
                "scale minimum {min} must be below maximum {max}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min as f64 && value <= self.max as f64
    }

    pub fn midpoint(&self) -> f64 {
        (self.min + self.max) as f64 / 2.0
    }
}

impl Default for LikertScale {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    /// Ordinal answer within the item's scale bounds.
    #[default]
    Likert,
    /// Free numeric measurement (for example logged usage); only accepted for USE.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementItem {
    pub id: String,
    #[serde(rename = "construct")]
    pub construct_id: ConstructId,
    #[serde(default)]
    pub prompt: String,
    #[serde(rename = "reverse", default)]
    pub reverse_coded: bool,
    #[serde(default, skip_serializing_if = "is_likert")]
    pub kind: ItemKind,
    #[serde(rename = "min", default, skip_serializing_if = "Option::is_none")]
    scale_min: Option<i32>,
    #[serde(rename = "max", default, skip_serializing_if = "Option::is_none")]
    scale_max: Option<i32>,
}

fn is_likert(kind: &ItemKind) -> bool {
    *kind == ItemKind::Likert
}

impl MeasurementItem {
    pub fn new(id: &str, construct: ConstructId, prompt: &str, reverse_coded: bool) -> Self {
        Self {
            id: id.to_string(),
            construct_id: construct,
            prompt: prompt.to_string(),
            reverse_coded,
            kind: ItemKind::Likert,
            scale_min: None,
            scale_max: None,
        }
    }

    pub fn continuous(id: &str, construct: ConstructId, prompt: &str) -> Self {
        Self {
            kind: ItemKind::Continuous,
            ..Self::new(id, construct, prompt, false)
        }
    }

    pub fn with_bounds(mut self, min: i32, max: i32) -> Self {
        self.scale_min = Some(min);
        self.scale_max = Some(max);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstrumentDocument {
    #[serde(default = "schema_version")]
    v: u32,
    scale: LikertScale,
    constructs: Vec<Construct>,
    items: Vec<MeasurementItem>,
    edges: Vec<Edge>,
}

fn schema_version() -> u32 {
    1
}

/// Questionnaire items grouped by construct, together with the graph they
/// measure. Serialized as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentDocument", into = "InstrumentDocument")]
pub struct InstrumentSpec {
    scale: LikertScale,
    items: Vec<MeasurementItem>,
    graph: AcceptanceGraph,
}

impl TryFrom<InstrumentDocument> for InstrumentSpec {
    type Error = Error;

    fn try_from(doc: InstrumentDocument) -> Result<Self> {
        if doc.v != 1 {
            return Err(Error::InvalidInstrument(format!(
                "unsupported schema version {}",
                doc.v
            )));
        }
        let graph = AcceptanceGraph {
            nodes: doc.constructs,
            edges: doc.edges,
        };
        InstrumentSpec::new(doc.scale, doc.items, graph)
    }
}

impl From<InstrumentSpec> for InstrumentDocument {
    fn from(spec: InstrumentSpec) -> Self {
        InstrumentDocument {
            v: 1,
            scale: spec.scale,
            constructs: spec.graph.nodes,
            items: spec.items,
            edges: spec.graph.edges,
        }
    }
}

impl InstrumentSpec {
    pub fn new(scale: LikertScale, items: Vec<MeasurementItem>, graph: AcceptanceGraph) -> Result<Self> {
        LikertScale::new(scale.min, scale.max)?;
        let report = validate_graph(&graph);
        if !report.is_valid() {
            return Err(Error::InvalidGraph(report.to_string()));
        }
        let mut ids = BTreeSet::new();
        for item in &items {
            if !ids.insert(item.id.as_str()) {
                return Err(Error::InvalidInstrument(format!("duplicate item id {}", item.id)));
            }
            if !graph.contains(item.construct_id) {
                return Err(Error::InvalidInstrument(format!(
                    "item {} references construct {} which is not in the graph",
                    item.id, item.construct_id
                )));
            }
            if let (Some(lo), Some(hi)) = (item.scale_min, item.scale_max) {
                LikertScale::new(lo, hi)?;
            } else if item.scale_min.is_some() || item.scale_max.is_some() {
                return Err(Error::InvalidInstrument(format!(
                    "item {} overrides only one scale bound",
                    item.id
                )));
            }
            if item.kind == ItemKind::Continuous {
                if item.construct_id != ConstructId::USE {
                    return Err(Error::InvalidInstrument(format!(
                        "continuous item {} must measure USE",
                        item.id
                    )));
                }
                if item.reverse_coded {
                    return Err(Error::InvalidInstrument(format!(
                        "continuous item {} cannot be reverse coded",
                        item.id
                    )));
                }
            }
        }
        for node in graph.node_ids() {
            if !items.iter().any(|i| i.construct_id == node) {
                return Err(Error::InvalidInstrument(format!(
                    "construct {node} has no measurement items"
                )));
            }
        }
        Ok(Self { scale, items, graph })
    }

    pub fn scale(&self) -> LikertScale {
        self.scale
    }

    pub fn items(&self) -> &[MeasurementItem] {
        &self.items
    }

    pub fn graph(&self) -> &AcceptanceGraph {
        &self.graph
    }

    pub fn item(&self, id: &str) -> Option<&MeasurementItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// Bounds for an item; the shared scale unless the item overrides it.
    pub fn item_scale(&self, item: &MeasurementItem) -> LikertScale {
        match (item.scale_min, item.scale_max) {
            (Some(min), Some(max)) => LikertScale { min, max },
            _ => self.scale,
        }
    }

    /// Constructs with at least one item, in registry order.
    pub fn measured_constructs(&self) -> Vec<ConstructId> {
        self.graph.node_ids()
    }

    /// Items grouped by construct, keyed in registry order.
    pub fn items_by_construct(&self) -> BTreeMap<ConstructId, Vec<&MeasurementItem>> {
        let mut groups: BTreeMap<ConstructId, Vec<&MeasurementItem>> = BTreeMap::new();
        for item in &self.items {
            groups.entry(item.construct_id).or_default().push(item);
        }
        groups
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instrument serializes")
    }

    /// Content hash binding posteriors and priors to this exact model.
    pub fn graph_hash(&self) -> String {
        crate::hashing::canonical_hash(self)
    }
}

/// The provisional default questionnaire: two or three items per construct
/// on a 1..7 agreement scale; USE items ask for frequency on the same scale.
pub fn default_instrument() -> InstrumentSpec {
    use ConstructId::*;
    let item = MeasurementItem::new;
    let items = vec![
        item("PE1", PE, "Using the AI assistant in my job increases my productivity", false),
        item("PE2", PE, "The AI assistant improves the quality of my software development work", false),
        item("PE3", PE, "Using the AI assistant helps me finish programming tasks faster", false),
        item("EE1", EE, "I find the AI assistant easy to use for my work", false),
        item("EE2", EE, "Using the AI assistant for software tasks is straightforward", false),
        item("EE3", EE, "Getting useful results from the AI assistant takes a lot of effort", true),
        item("SI1", SI, "People whose opinion I value think I should use the AI assistant", false),
        item("SI2", SI, "My organization sees skill with AI assistants as important", false),
        item("FC1", FC, "I have the knowledge needed to use the AI assistant in my job", false),
        item("FC2", FC, "My organization offers enough training on using the AI assistant", false),
        item("FC3", FC, "The AI assistant is well integrated with the tools I already use", false),
        item("HM1", HM, "Using the AI assistant in my job is fun", false),
        item("HM2", HM, "Using the AI assistant stimulates my curiosity", false),
        item("HB1", HB, "Using the AI assistant has become natural to me", false),
        item("HB2", HB, "Using the AI assistant has become a habit for me", false),
        item("TC1", TC, "Using the AI assistant fits well with the way I like to work", false),
        item("TC2", TC, "The AI assistant is compatible with my current work situation", false),
        item("PI1", PI, "I like to experiment with new technologies", false),
        item("PI2", PI, "Among my peers I am usually the first to try new tools like AI assistants", false),
        item("CT1", CT, "Using the AI assistant for programming tasks is expensive", false),
        item("CT2", CT, "There are financial barriers to using the AI assistant for programming", false),
        item("TR1", TR, "I feel safe relying on the AI assistant to give me correct answers", false),
        item("TR2", TR, "I am confident that the AI assistant works well", false),
        item("BI1", BI, "I intend to continue using the AI assistant in my work", false),
        item("BI2", BI, "I plan to use the AI assistant frequently in the coming months", false),
        item("BI3", BI, "I expect to rely on the AI assistant for future programming tasks", false),
        item("USE1", USE, "How often do you use the AI assistant for writing code? (1 = never, 7 = several times a day)", false),
        item("USE2", USE, "How often do you use the AI assistant for reviewing or understanding code? (1 = never, 7 = several times a day)", false),
    ];
    InstrumentSpec::new(LikertScale::DEFAULT, items, default_graph()).expect("default instrument is valid")
}
