use super::params::{is_noise, Equation, ParameterLayout, ParameterVector};
use super::prior::{CompiledPrior, PriorSpec};
use super::sampler::Target;
use crate::error::{Error, Result};
use crate::model::{AcceptanceGraph, ConstructId};
use crate::stats::LN_2PI;
use crate::survey::ScoredDataset;

/// Design matrix and response of one structural equation, on z-scores.
#[derive(Debug, Clone)]
struct EquationData {
    /// Row-major `n x parents`.
    design: Vec<f64>,
    response: Vec<f64>,
    parents: usize,
}

impl EquationData {
    fn new(eq: &Equation, data: &ScoredDataset) -> Result<Self> {
        let column = |c: ConstructId| {
            data.z_column(c)
                .ok_or_else(|| Error::DimensionMismatch(format!("dataset has no column for {c}")))
        };
        let response = column(eq.outcome)?;
        let cols: Vec<Vec<f64>> = eq.parents.iter().map(|&p| column(p)).collect::<Result<_>>()?;
        let n = response.len();
        let mut design = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            design.extend(cols.iter().map(|c| c[i]));
        }
        Ok(Self {
            design,
            response,
            parents: eq.parents.len(),
        })
    }

    /// Gaussian log likelihood with `theta = [intercept, coefs.., sigma]`.
    fn log_likelihood(&self, intercept: f64, coefs: &[f64], sigma: f64) -> f64 {
        let n = self.response.len();
        if n == 0 {
            return 0.0;
        }
        let ss: f64 = (0..n)
            .map(|i| {
                let row = &self.design[i * self.parents..(i + 1) * self.parents];
                let mu = intercept + row.iter().zip(coefs).map(|(x, b)| x * b).sum::<f64>();
                (self.response[i] - mu).powi(2)
            })
            .sum();
        -0.5 * n as f64 * LN_2PI - n as f64 * sigma.ln() - 0.5 * ss / (sigma * sigma)
    }
}

/// Unnormalized posterior of the structural model: prior times the
/// likelihood of the BI and USE equations, with observed BI z-scores
/// entering the USE equation.
///
/// Sampler coordinates are the parameters in layout order with noise
/// parameters replaced by their logarithm.
#[derive(Debug, Clone)]
pub struct StructuralModel {
    layout: ParameterLayout,
    names: Vec<String>,
    intention: EquationData,
    usage: EquationData,
    prior: CompiledPrior,
}

impl StructuralModel {
    pub fn new(graph: &AcceptanceGraph, data: &ScoredDataset, prior: &PriorSpec) -> Result<Self> {
        let layout = ParameterLayout::new(graph, Some(data))?;
        Self::with_layout(layout, data, prior)
    }

    pub fn with_layout(layout: ParameterLayout, data: &ScoredDataset, prior: &PriorSpec) -> Result<Self> {
        let names = layout.names();
        let prior = CompiledPrior::new(prior, &names)?;
        Ok(Self {
            intention: EquationData::new(&layout.intention, data)?,
            usage: EquationData::new(&layout.usage, data)?,
            layout,
            names,
            prior,
        })
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn equation_loglik(&self, data: &EquationData, theta: &[f64]) -> f64 {
        let k = data.parents;
        data.log_likelihood(theta[0], &theta[1..=k], theta[k + 1].exp())
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.layout.intention.len())
    }

    /// Unconstrained coordinates for natural-scale parameters.
    pub fn unconstrain(&self, params: &ParameterVector) -> Result<Vec<f64>> {
        if params.names != self.names {
            return Err(Error::DimensionMismatch(format!(
                "parameter names {:?} do not match model layout {:?}",
                params.names, self.names
            )));
        }
        Ok(self
            .names
            .iter()
            .zip(&params.values)
            .map(|(n, &v)| if is_noise(n) { v.ln() } else { v })
            .collect())
    }

    pub fn log_likelihood_unconstrained(&self, x: &[f64]) -> f64 {
        let (bi, usage) = self.split(x);
        self.equation_loglik(&self.intention, bi) + self.equation_loglik(&self.usage, usage)
    }
}

impl Target for StructuralModel {
    fn dim(&self) -> usize {
        self.names.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_likelihood_unconstrained(x) + self.prior.log_density_unconstrained(x)
    }

    fn local_log_density(&self, x: &[f64], i: usize) -> f64 {
        let (bi, usage) = self.split(x);
        let lik = if i < bi.len() {
            self.equation_loglik(&self.intention, bi)
        } else {
            self.equation_loglik(&self.usage, usage)
        };
        lik + self.prior.local_log_density_unconstrained(x, i)
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.names.len()]
    }

    fn output_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        self.names
            .iter()
            .zip(x)
            .map(|(n, &v)| if is_noise(n) { v.exp() } else { v })
            .collect()
    }
}

/// Log likelihood of the structural equations at `params`.
pub fn log_likelihood(params: &ParameterVector, data: &ScoredDataset, graph: &AcceptanceGraph) -> Result<f64> {
    let layout = ParameterLayout::new(graph, Some(data))?;
    let names = layout.names();
    let prior = PriorSpec::from_names(&names);
    let model = StructuralModel::with_layout(layout, data, &prior)?;
    let x = model.unconstrain(params)?;
    Ok(model.log_likelihood_unconstrained(&x))
}
