use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unnormalized log posterior over unconstrained coordinates.
///
/// Only differences of log densities are ever used, so the evidence term
/// (and any other additive constant) never needs to be computed.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// Sum of the log-density terms that depend on coordinate `i`. Must differ
    /// from [`Target::log_density`] only by terms constant in `x[i]`.
    fn local_log_density(&self, x: &[f64], _i: usize) -> f64 {
        self.log_density(x)
    }

    fn initial_point(&self) -> Vec<f64>;

    /// Names of the recorded quantities.
    fn output_names(&self) -> Vec<String>;

    /// Recorded quantities (on their natural scale) at `x`.
    fn output(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup_draws: usize,
    pub kept_draws: usize,
    pub seed: u64,
    pub target_acceptance: f64,
    pub initial_step_scale: f64,
    /// Half-width of the uniform jitter around the initial point.
    pub init_radius: f64,
    /// Run chains on the rayon pool. Results do not depend on it.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup_draws: 1000,
            kept_draws: 1000,
            seed: 20_260_101,
            target_acceptance: 0.3,
            initial_step_scale: 0.1,
            init_radius: 0.5,
            parallel: true,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 chains, got {}", self.chains)));
        }
        if self.kept_draws == 0 {
            return Err(Error::InvalidConfig("kept draws must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidConfig("target acceptance must lie in (0, 1)".into()));
        }
        if !(self.initial_step_scale > 0.0 && self.initial_step_scale.is_finite()) {
            return Err(Error::InvalidConfig("initial step scale must be positive".into()));
        }
        if !(self.init_radius >= 0.0 && self.init_radius.is_finite()) {
            return Err(Error::InvalidConfig("init radius must be non-negative".into()));
        }
        Ok(())
    }
}

/// Kept draws, `chains x draws x parameters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PosteriorSamples {
    pub parameter_names: Vec<String>,
    pub chains: usize,
    pub draws: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
    pub acceptance_rates: Vec<f64>,
}

impl PosteriorSamples {
    pub fn new(parameter_names: Vec<String>, draws: Vec<Vec<Vec<f64>>>, seed: u64, acceptance_rates: Vec<f64>) -> Result<Self> {
        let p = parameter_names.len();
        let n = draws.first().map(Vec::len).unwrap_or(0);
        for chain in &draws {
            if chain.len() != n {
                return Err(Error::DimensionMismatch("chains have different lengths".into()));
            }
            if chain.iter().any(|d| d.len() != p) {
                return Err(Error::DimensionMismatch("draw length differs from parameter count".into()));
            }
            if chain.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::DimensionMismatch("non-finite draw".into()));
            }
        }
        Ok(Self {
            parameter_names,
            chains: draws.len(),
            draws,
            seed,
            acceptance_rates,
        })
    }

    pub fn num_chains(&self) -> usize {
        self.draws.len()
    }

    pub fn num_draws(&self) -> usize {
        self.draws.first().map(Vec::len).unwrap_or(0)
    }

    pub fn total_draws(&self) -> usize {
        self.num_chains() * self.num_draws()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    /// Per-chain series of one parameter.
    pub fn chain_series(&self, index: usize) -> Vec<Vec<f64>> {
        self.draws
            .iter()
            .map(|chain| chain.iter().map(|d| d[index]).collect())
            .collect()
    }

    /// All draws of one parameter, chains concatenated.
    pub fn pooled(&self, index: usize) -> Vec<f64> {
        self.draws.iter().flatten().map(|d| d[index]).collect()
    }

    /// Draws pooled across chains in chain-major order.
    pub fn iter_draws(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.draws.iter().flatten()
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| crate::stats::mean(&self.pooled(i)))
    }

    pub fn sd(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| crate::stats::sd(&self.pooled(i)))
    }
}

/// Output of a sampling run.
#[derive(Debug, Clone)]
pub struct SamplerRun {
    pub samples: PosteriorSamples,
    /// Per-chain mean of every coordinate over kept draws (unconstrained scale).
    pub coordinate_means: Vec<Vec<f64>>,
    pub step_scales: Vec<Vec<f64>>,
}

const INIT_ATTEMPTS: usize = 100;

/// Component-wise adaptive random-walk Metropolis.
///
/// Each sweep updates every coordinate in turn with a Gaussian proposal.
/// During warmup the log proposal scale of each coordinate follows a
/// Robbins-Monro recursion toward the target acceptance rate; scales are
/// frozen for the kept draws. Chain `c` uses the ChaCha stream `c` of the
/// configured seed, so results do not depend on scheduling.
pub fn sample_posterior<T: Target>(target: &T, cfg: &SamplerConfig) -> Result<PosteriorSamples> {
    Ok(run_sampler(target, cfg)?.samples)
}

pub fn run_sampler<T: Target>(target: &T, cfg: &SamplerConfig) -> Result<SamplerRun> {
    cfg.validate()?;
    let chains: Vec<Result<ChainResult>> = if cfg.parallel {
        (0..cfg.chains).into_par_iter().map(|c| run_chain(target, cfg, c)).collect()
    } else {
        (0..cfg.chains).map(|c| run_chain(target, cfg, c)).collect()
    };
    let chains: Vec<ChainResult> = chains.into_iter().collect::<Result<_>>()?;
    let mut draws = Vec::with_capacity(chains.len());
    let mut rates = Vec::with_capacity(chains.len());
    let mut coordinate_means = Vec::with_capacity(chains.len());
    let mut step_scales = Vec::with_capacity(chains.len());
    for c in chains {
        draws.push(c.draws);
        rates.push(c.acceptance_rate);
        coordinate_means.push(c.coordinate_means);
        step_scales.push(c.step_scales);
    }
    let samples = PosteriorSamples::new(target.output_names(), draws, cfg.seed, rates)?;
    Ok(SamplerRun {
        samples,
        coordinate_means,
        step_scales,
    })
}

struct ChainResult {
    draws: Vec<Vec<f64>>,
    acceptance_rate: f64,
    coordinate_means: Vec<f64>,
    step_scales: Vec<f64>,
}

pub(crate) fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_chain<T: Target>(target: &T, cfg: &SamplerConfig, chain: usize) -> Result<ChainResult> {
    let mut rng = chain_rng(cfg.seed, chain as u64);
    let dim = target.dim();
    let base = target.initial_point();
    if base.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} coordinates, target has {dim}",
            base.len()
        )));
    }

    let mut x = base.clone();
    let mut ok = false;
    for _ in 0..INIT_ATTEMPTS {
        for (xi, bi) in x.iter_mut().zip(&base) {
            *xi = bi + cfg.init_radius * (2.0 * rng.random::<f64>() - 1.0);
        }
        if target.log_density(&x).is_finite() {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::NonFiniteInit {
            chain,
            attempts: INIT_ATTEMPTS,
        });
    }

    let mut log_scale = vec![cfg.initial_step_scale.ln(); dim];
    let mut draws = Vec::with_capacity(cfg.kept_draws);
    let mut accepted = 0usize;
    let mut sums = vec![0.0; dim];
    let total = cfg.warmup_draws + cfg.kept_draws;
    for sweep in 0..total {
        let warmup = sweep < cfg.warmup_draws;
        let gain = ((sweep + 1) as f64).powf(-0.6);
        for i in 0..dim {
            let current = target.local_log_density(&x, i);
            let old = x[i];
            let step: f64 = rng.sample(StandardNormal);
            x[i] = old + log_scale[i].exp() * step;
            let proposed = target.local_log_density(&x, i);
            let log_u = rng.random::<f64>().ln();
            let accept = proposed.is_finite() && log_u < proposed - current;
            if !accept {
                x[i] = old;
            }
            if warmup {
                let indicator = if accept { 1.0 } else { 0.0 };
                log_scale[i] += gain * (indicator - cfg.target_acceptance);
                log_scale[i] = log_scale[i].clamp(-30.0, 10.0);
            } else if accept {
                accepted += 1;
            }
        }
        if !warmup {
            for (s, xi) in sums.iter_mut().zip(&x) {
                *s += xi;
            }
            draws.push(target.output(&x));
        }
    }
    let updates = (cfg.kept_draws * dim).max(1);
    Ok(ChainResult {
        draws,
        acceptance_rate: accepted as f64 / updates as f64,
        coordinate_means: sums.iter().map(|s| s / cfg.kept_draws as f64).collect(),
        step_scales: log_scale.iter().map(|l| l.exp()).collect(),
    })
}

#[cfg(test)]
pub(crate) mod test_targets {
    use super::*;

    /// Independent normals with the given means and sds.
    pub struct Gaussian {
        pub means: Vec<f64>,
        pub sds: Vec<f64>,
        pub shift: f64,
    }

    impl Target for Gaussian {
        fn dim(&self) -> usize {
            self.means.len()
        }

        fn log_density(&self, x: &[f64]) -> f64 {
            self.shift
                + x.iter()
                    .zip(self.means.iter().zip(&self.sds))
                    .map(|(x, (m, s))| -0.5 * ((x - m) / s).powi(2))
                    .sum::<f64>()
        }

        fn initial_point(&self) -> Vec<f64> {
            vec![0.0; self.means.len()]
        }

        fn output_names(&self) -> Vec<String> {
            (0..self.means.len()).map(|i| format!("x{i}")).collect()
        }

        fn output(&self, x: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_targets::Gaussian;
    use super::*;

    fn cfg(seed: u64) -> SamplerConfig {
        SamplerConfig {
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn recovers_independent_normals() {
        let target = Gaussian {
            means: vec![1.0, -2.0],
            sds: vec![0.5, 2.0],
            shift: 0.0,
        };
        let s = sample_posterior(&target, &cfg(7)).unwrap();
        assert_eq!(s.num_chains(), 4);
        assert_eq!(s.num_draws(), 1000);
        assert!((s.mean("x0").unwrap() - 1.0).abs() < 0.05);
        assert!((s.mean("x1").unwrap() + 2.0).abs() < 0.2);
        assert!((s.sd("x1").unwrap() / 2.0 - 1.0).abs() < 0.1);
        for r in &s.acceptance_rates {
            assert!((r - 0.3).abs() < 0.1, "acceptance {r}");
        }
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let target = Gaussian {
            means: vec![0.3; 3],
            sds: vec![1.0; 3],
            shift: 0.0,
        };
        let mut serial = cfg(11);
        serial.parallel = false;
        let a = sample_posterior(&target, &cfg(11)).unwrap();
        let b = sample_posterior(&target, &serial).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn additive_constant_does_not_change_draws() {
        let make = |shift| Gaussian {
            means: vec![0.5, 1.5],
            sds: vec![1.0, 0.3],
            shift,
        };
        let a = sample_posterior(&make(0.0), &cfg(3)).unwrap();
        let b = sample_posterior(&make(-1234.5), &cfg(3)).unwrap();
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn different_seeds_differ() {
        let target = Gaussian {
            means: vec![0.0],
            sds: vec![1.0],
            shift: 0.0,
        };
        let a = sample_posterior(&target, &cfg(1)).unwrap();
        let b = sample_posterior(&target, &cfg(2)).unwrap();
        assert_ne!(a.draws, b.draws);
    }

    struct Nowhere;

    impl Target for Nowhere {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, _: &[f64]) -> f64 {
            f64::NEG_INFINITY
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![0.0]
        }
        fn output_names(&self) -> Vec<String> {
            vec!["x".into()]
        }
        fn output(&self, x: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
    }

    #[test]
    fn non_finite_initialization_fails() {
        assert!(matches!(
            sample_posterior(&Nowhere, &cfg(1)),
            Err(Error::NonFiniteInit { chain: 0, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1);
        c.chains = 1;
        assert!(c.validate().is_err());
        let mut c = cfg(1);
        c.kept_draws = 0;
        assert!(c.validate().is_err());
    }
}
