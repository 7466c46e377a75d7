//! Bayesian technology-acceptance modeling.
//!
//! Survey responses are scored into construct columns, a linear-Gaussian
//! structural model over the acceptance graph is fit by adaptive
//! random-walk Metropolis, and posterior draws drive counterfactual
//! ("what-if") simulation of interventions on Actual Use.

pub mod error;
pub mod hashing;
pub mod inference;
pub mod model;
pub mod stats;
pub mod survey;
pub mod synthetic;
pub mod whatif;
pub mod workflow;

pub use error::{Error, Result};
