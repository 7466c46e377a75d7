use std::time::Instant;

use acceptance_core::inference::{
    compress_samples, conjugate_posterior, fit, grid_posterior, is_noise, log_likelihood, log_prior, run_sampler,
    sample_posterior, FitOptions, Marginal, NormalMeanModel, ParameterLayout, ParameterVector, PriorProvenance,
    PriorSpec, Restricted, SamplerConfig, StructuralModel, Target,
};
use acceptance_core::model::{default_graph, default_instrument, ConstructId};
use acceptance_core::survey::ScoredDataset;
use acceptance_core::synthetic::Generator;

/// Gaussian log density summed term by term, written independently of the
/// library's likelihood code.
fn brute_force_loglik(params: &ParameterVector, data: &ScoredDataset) -> f64 {
    let get = |n: &str| params.get(n).unwrap();
    let col = |c: ConstructId| data.column_index(c).unwrap();
    let mut total = 0.0;
    for row in &data.z_scores {
        let mut mu = get("BI.intercept");
        for c in ConstructId::PREDICTORS {
            mu += get(&format!("BI<-{c}")) * row[col(c)];
        }
        let s = get("BI.sigma");
        let r = row[col(ConstructId::BI)] - mu;
        total += -(2.0 * std::f64::consts::PI * s * s).ln() / 2.0 - r * r / (2.0 * s * s);

        let mu = get("USE.intercept")
            + get("USE<-BI") * row[col(ConstructId::BI)]
            + get("USE<-FC") * row[col(ConstructId::FC)]
            + get("USE<-HB") * row[col(ConstructId::HB)];
        let s = get("USE.sigma");
        let r = row[col(ConstructId::USE)] - mu;
        total += -(2.0 * std::f64::consts::PI * s * s).ln() / 2.0 - r * r / (2.0 * s * s);
    }
    total
}

fn synthetic(n: usize) -> (ScoredDataset, ParameterVector) {
    synthetic_seeded(n, Generator::default().seed)
}

fn synthetic_seeded(n: usize, seed: u64) -> (ScoredDataset, ParameterVector) {
    let s = Generator {
        respondents: n,
        seed,
        ..Generator::default()
    }
    .scores()
    .unwrap();
    (s.dataset, s.truth)
}

fn empty_dataset() -> ScoredDataset {
    let (d, _) = synthetic(0);
    d
}

#[test]
fn likelihood_matches_brute_force_oracle() {
    let (data, truth) = synthetic(120);
    for shift in [0.0f64, 0.3, -0.7] {
        let mut p = truth.clone();
        for (n, v) in p.names.clone().iter().zip(p.values.iter_mut()) {
            if is_noise(n) {
                *v *= 1.0 + shift.abs();
            } else {
                *v += shift;
            }
        }
        let ours = log_likelihood(&p, &data, &default_graph()).unwrap();
        let oracle = brute_force_loglik(&p, &data);
        assert!((ours - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{ours} vs {oracle}");
    }
}

#[test]
fn conjugate_oracle() {
    let model = NormalMeanModel {
        prior_mean: 0.0,
        prior_sd: 1.0,
        sigma: 1.0,
        observations: vec![1.0, 2.5, 3.0, 1.5],
    };
    let exact = conjugate_posterior(0.0, 1.0, 1.0, 4, 2.0);
    assert_eq!(model.posterior(), exact);
    let start = Instant::now();
    let s = sample_posterior(&model, &SamplerConfig::default().with_seed(1)).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert!((s.mean("mu").unwrap() - 1.6).abs() < 0.02);
    assert!((s.sd("mu").unwrap() / 0.2f64.sqrt() - 1.0).abs() < 0.05);
}

#[test]
fn flat_prior_limit() {
    let p = conjugate_posterior(5.0, 1e6, 1.0, 10, 2.0);
    assert!((p.mean - 2.0).abs() < 1e-9);
}

#[test]
fn grid_and_conjugate_agree() {
    let model = NormalMeanModel {
        prior_mean: 0.0,
        prior_sd: 1.0,
        sigma: 1.0,
        observations: vec![2.0; 4],
    };
    let g = grid_posterior(|x| model.log_density(x), &[(-6.0, 6.0)], 1201).unwrap();
    assert!((g.means[0] - 1.6).abs() <= 1e-3);
    assert!((g.sds[0] - 0.2f64.sqrt()).abs() <= 1e-3);
}

#[test]
fn symmetric_data_gives_zero_mean_on_grid() {
    let model = NormalMeanModel {
        prior_mean: 0.0,
        prior_sd: 1.0,
        sigma: 1.0,
        observations: vec![-1.5, -0.5, 0.5, 1.5],
    };
    let g = grid_posterior(|x| model.log_density(x), &[(-6.0, 6.0)], 601).unwrap();
    assert!(g.means[0].abs() < 0.02);
}

#[test]
fn mcmc_matches_quadrature_on_two_parameter_reduction() {
    let (data, truth) = synthetic(200);
    let layout = ParameterLayout::new(&default_graph(), Some(&data)).unwrap();
    let prior = PriorSpec::default_for(&layout);
    let model = StructuralModel::new(&default_graph(), &data, &prior).unwrap();
    let base = model.unconstrain(&truth).unwrap();
    let names = layout.names();
    let free: Vec<usize> = ["BI<-TC", "BI<-PE"].iter().map(|n| names.iter().position(|m| m == n).unwrap()).collect();
    let reduced = Restricted::new(&model, base.clone(), free.clone()).unwrap();

    let centre: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let bounds: Vec<(f64, f64)> = centre.iter().map(|c| (c - 1.0, c + 1.0)).collect();
    let g = grid_posterior(|x| reduced.log_density(x), &bounds, 401).unwrap();
    let s = sample_posterior(&reduced, &SamplerConfig::default().with_seed(3)).unwrap();
    for (k, name) in ["BI<-TC", "BI<-PE"].iter().enumerate() {
        let m = s.mean(name).unwrap();
        assert!((m - g.means[k]).abs() < 0.03, "{name}: mcmc {m} grid {}", g.means[k]);
    }
}

#[test]
fn prior_recovery_on_empty_dataset() {
    let data = empty_dataset();
    let layout = ParameterLayout::new(&default_graph(), Some(&data)).unwrap();
    assert_eq!(layout.len(), 17);
    let prior = PriorSpec::default_for(&layout);
    let model = StructuralModel::new(&default_graph(), &data, &prior).unwrap();
    let cfg = SamplerConfig {
        warmup_draws: 1000,
        kept_draws: 4000,
        ..SamplerConfig::default().with_seed(11)
    };
    let run = run_sampler(&model, &cfg).unwrap();
    let report = acceptance_core::inference::diagnose(&run.samples);
    for (i, name) in run.samples.parameter_names.iter().enumerate() {
        let m = prior.marginal(name).unwrap();
        let ess = report.parameters[i].ess.unwrap();
        let se = m.sd() / ess.sqrt();
        let got = run.samples.mean(name).unwrap();
        assert!((got - m.mean()).abs() < 3.0 * se, "{name}: mean {got} vs {} (se {se})", m.mean());
        // sd of the sample sd is roughly sd / sqrt(2 ess) for near-normal draws, wider for half-normal
        let sd = run.samples.sd(name).unwrap();
        assert!((sd / m.sd() - 1.0).abs() < 0.1, "{name}: sd {sd} vs {}", m.sd());
    }
}

#[test]
fn parameter_recovery() {
    let (data, truth) = synthetic_seeded(200, 1);
    let start = Instant::now();
    let post = fit(&default_instrument(), &data, None, &FitOptions::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "{elapsed}s");
    let table = post.coefficient_table(0.9);
    let mut covered = 0;
    for row in &table {
        let t = truth.get(&row.parameter).unwrap();
        assert!((row.mean - t).abs() < 0.15, "{}: {} vs {t}", row.parameter, row.mean);
        if row.parameter.contains("<-") && row.lower <= t && t <= row.upper {
            covered += 1;
        }
        assert!(row.r_hat.unwrap() <= 1.05, "{} R-hat {:?}", row.parameter, row.r_hat);
        assert!(row.ess.unwrap() >= 200.0, "{} ESS {:?}", row.parameter, row.ess);
    }
    assert!(covered >= 10, "{covered} of 13 coefficients covered");
}

#[test]
fn credible_intervals_are_calibrated_across_datasets() {
    let mut inside = 0;
    let mut total = 0;
    for seed in 10..18 {
        let (data, truth) = synthetic_seeded(200, seed);
        let post = fit(&default_instrument(), &data, None, &FitOptions::default()).unwrap();
        for row in post.coefficient_table(0.9) {
            let t = truth.get(&row.parameter).unwrap();
            total += 1;
            if row.lower <= t && t <= row.upper {
                inside += 1;
            }
        }
    }
    let rate = inside as f64 / total as f64;
    // 136 intervals: binomial sd of the rate at 0.9 is about 0.026
    assert!((0.82..=0.97).contains(&rate), "coverage {rate}");
}

#[test]
fn fits_are_deterministic_and_independent_of_threading() {
    let (data, _) = synthetic(80);
    let mut options = FitOptions::default();
    options.sampler.warmup_draws = 200;
    options.sampler.kept_draws = 200;
    let a = fit(&default_instrument(), &data, None, &options).unwrap();
    options.sampler.parallel = false;
    let b = fit(&default_instrument(), &data, None, &options).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    options.sampler.seed += 1;
    let c = fit(&default_instrument(), &data, None, &options).unwrap();
    assert_ne!(a.samples.draws, c.samples.draws);
}

#[test]
fn constant_shift_leaves_draws_unchanged() {
    struct Shifted<'a>(&'a StructuralModel, f64);
    impl Target for Shifted<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            self.0.log_density(x) + self.1
        }
        fn initial_point(&self) -> Vec<f64> {
            self.0.initial_point()
        }
        fn output_names(&self) -> Vec<String> {
            self.0.output_names()
        }
        fn output(&self, x: &[f64]) -> Vec<f64> {
            self.0.output(x)
        }
    }
    let (data, _) = synthetic(50);
    let layout = ParameterLayout::new(&default_graph(), Some(&data)).unwrap();
    let model = StructuralModel::new(&default_graph(), &data, &PriorSpec::default_for(&layout)).unwrap();
    let cfg = SamplerConfig {
        warmup_draws: 200,
        kept_draws: 200,
        ..SamplerConfig::default()
    };
    let a = sample_posterior(&Shifted(&model, 0.0), &cfg).unwrap();
    let b = sample_posterior(&Shifted(&model, 1e-3), &cfg).unwrap();
    assert_eq!(a.draws, b.draws);
}

/// Normal-mean posterior from a compressed prior: the block is 1x1.
fn chained(prior: &PriorSpec) -> (f64, f64) {
    let b = prior.block.as_ref().unwrap();
    (b.mean[0], b.covariance[0][0].sqrt())
}

#[test]
fn sequential_update_matches_batch() {
    let ys: Vec<f64> = (0..40).map(|i| 1.0 + ((i * 37) % 11) as f64 / 5.0 - 1.0).collect();
    let (a, b) = ys.split_at(20);
    let cfg = SamplerConfig::default().with_seed(21);
    let first = NormalMeanModel {
        prior_mean: 0.0,
        prior_sd: 1.0,
        sigma: 1.0,
        observations: a.to_vec(),
    };
    let s1 = sample_posterior(&first, &cfg).unwrap();
    let prior = compress_samples(&s1, PriorProvenance::Default, None).unwrap();
    let (m, sd) = chained(&prior);
    let second = NormalMeanModel {
        prior_mean: m,
        prior_sd: sd,
        sigma: 1.0,
        observations: b.to_vec(),
    };
    let sequential = sample_posterior(&second, &cfg).unwrap().mean("mu").unwrap();
    let batch = NormalMeanModel {
        prior_mean: 0.0,
        prior_sd: 1.0,
        sigma: 1.0,
        observations: ys.clone(),
    };
    let batch_mcmc = sample_posterior(&batch, &cfg).unwrap().mean("mu").unwrap();
    assert!((sequential - batch_mcmc).abs() < 0.02, "{sequential} vs {batch_mcmc}");
    assert!((sequential - batch.posterior().mean).abs() < 0.02);
}

#[test]
fn compressed_prior_reproduces_source_without_new_data() {
    let (data, _) = synthetic(150);
    let inst = default_instrument();
    let post = fit(&inst, &data, None, &FitOptions::default()).unwrap();
    let prior = post.compress().unwrap();
    assert_eq!(
        prior.provenance,
        PriorProvenance::Chained {
            source_posterior_id: post.id()
        }
    );
    let layout = ParameterLayout::new(&default_graph(), Some(&data)).unwrap();
    let empty = empty_dataset();
    let model = StructuralModel::with_layout(layout.clone(), &empty, &prior).unwrap();
    let refit = sample_posterior(&model, &SamplerConfig::default().with_seed(5)).unwrap();
    for name in layout.names().iter().filter(|n| !is_noise(n)) {
        let a = post.samples.mean(name).unwrap();
        let b = refit.mean(name).unwrap();
        let sd = post.samples.sd(name).unwrap();
        assert!((a - b).abs() < 0.15 * sd.max(0.02) + 0.01, "{name}: {a} vs {b}");
    }
}

#[test]
fn chained_prior_prefers_source_mean() {
    let (data, _) = synthetic(150);
    let post = fit(&default_instrument(), &data, None, &FitOptions::default()).unwrap();
    let prior = post.compress().unwrap();
    let names = post.layout.names();
    let at_mean = ParameterVector::new(names.clone(), names.iter().map(|n| post.samples.mean(n).unwrap()).collect()).unwrap();
    let shifted = ParameterVector::new(
        names.clone(),
        names
            .iter()
            .map(|n| {
                let m = post.samples.mean(n).unwrap();
                if is_noise(n) {
                    m
                } else {
                    m + 3.0 * post.samples.sd(n).unwrap()
                }
            })
            .collect(),
    )
    .unwrap();
    assert!(log_prior(&at_mean, &prior).unwrap() > log_prior(&shifted, &prior).unwrap());
}

#[test]
fn prior_from_other_graph_is_refused() {
    let (data, _) = synthetic(60);
    let mut prior = PriorSpec::default_for(&ParameterLayout::new(&default_graph(), Some(&data)).unwrap());
    prior.graph_hash = Some("not-this-graph".into());
    let err = fit(&default_instrument(), &data, Some(&prior), &FitOptions::default()).unwrap_err();
    assert!(matches!(err, acceptance_core::Error::HashMismatch(_)));
}

#[test]
fn standard_normal_prior_term() {
    let p = ParameterVector::new(vec!["BI<-PE".into()], vec![0.0]).unwrap();
    let prior = PriorSpec::from_names(&p.names);
    assert_eq!(prior.marginal("BI<-PE"), Some(&Marginal::Normal { mean: 0.0, sd: 1.0 }));
    let lp = log_prior(&p, &prior).unwrap();
    assert!((lp + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
}
