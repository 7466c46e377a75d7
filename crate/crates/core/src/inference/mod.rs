//! Prior, likelihood, adaptive Metropolis sampling, convergence
//! diagnostics, reference oracles and posterior compression.

mod compress;
mod diagnostics;
mod latent;
mod model;
mod oracle;
mod params;
mod posterior;
mod prior;
mod sampler;

pub use compress::compress_samples;
pub use diagnostics::{
    diagnose, effective_sample_size, split_rhat, DiagnosticsReport, ParameterDiagnostics, ESS_THRESHOLD, RHAT_THRESHOLD,
};
pub use latent::{item_loading_name, item_sigma_name, latent_sigma_name, LatentModel};
pub use model::{log_likelihood, StructuralModel};
pub use oracle::{
    conjugate_posterior, grid_posterior, GridPosterior, NormalMeanModel, NormalPosterior, Restricted,
    GRID_BOUNDARY_TOLERANCE,
};
pub use params::{coef_name, intercept_name, is_noise, parse_coef_name, sigma_name, Equation, ParameterLayout, ParameterVector};
pub use posterior::{
    coefficient_means, fit, model_parameter_names, CoefficientSummary, FitOptions, Measurement, Posterior,
};
pub use prior::{
    default_marginal, log_prior, CompiledPrior, GaussianBlock, Marginal, MarginalEntry, PriorProvenance, PriorSpec,
};
pub use sampler::{run_sampler, sample_posterior, PosteriorSamples, SamplerConfig, SamplerRun, Target};

pub(crate) use sampler::chain_rng;
