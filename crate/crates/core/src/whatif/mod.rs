//! Counterfactual simulation: fix predictor constructs at chosen values,
//! propagate through BI to USE for every posterior draw, and rank
//! interventions by their expected effect on USE.

mod rank;
mod scenario;
mod simulate;

pub use rank::{compare, rank, Comparison, RankEntry, RankingResult};
pub use scenario::{parse_scenarios, Intervention, InterventionScale, Scenario, Setting};
pub use simulate::{baseline, simulate, PredictiveSummary, ScenarioSummary, SimulationOptions, Simulator, DEFAULT_LEVEL};
