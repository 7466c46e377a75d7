//! Likert response parsing, reverse coding, missing-data handling and
//! construct scoring.

mod missing;
mod response;
mod scoring;

pub use missing::{apply_missing_policy, DroppedRespondent, MissingPolicy, MissingReport, PolicyOutcome};
pub use response::{parse_responses, reverse_code, to_csv, InputFormat, RespondentKey, SurveyResponse, CSV_HEADER};
pub use scoring::{
    item_correlations, score_constructs, score_responses, ColumnStats, DatasetProvenance, ItemMatrix, ScoredDataset,
    ScoringOptions,
};
