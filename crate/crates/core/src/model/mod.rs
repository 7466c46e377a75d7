//! Construct registry, measurement instrument and the acceptance graph.

mod construct;
mod graph;
mod instrument;

pub use construct::{default_registry, Construct, ConstructId, Role, Theory};
pub use graph::{
    default_graph, parents, topological_order, validate_graph, AcceptanceGraph, Edge, EdgeTheory,
    Finding, ValidationReport,
};
pub use instrument::{default_instrument, InstrumentSpec, ItemKind, LikertScale, MeasurementItem};
