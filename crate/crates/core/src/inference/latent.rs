use std::collections::BTreeMap;

use super::params::{is_noise, ParameterLayout};
use super::prior::{CompiledPrior, PriorSpec};
use super::sampler::Target;
use crate::error::{Error, Result};
use crate::model::{AcceptanceGraph, ConstructId};
use crate::stats::{mean, sd, LN_2PI};
use crate::survey::ScoredDataset;

pub fn latent_sigma_name(construct: ConstructId) -> String {
    format!("lat.{construct}.sigma")
}

pub fn item_loading_name(item: &str) -> String {
    format!("item.{item}.loading")
}

pub fn item_sigma_name(item: &str) -> String {
    format!("item.{item}.sigma")
}

#[inline]
fn normal_ll(x: f64, mu: f64, log_sigma: f64) -> f64 {
    let z = (x - mu) * (-log_sigma).exp();
    -0.5 * LN_2PI - log_sigma - 0.5 * z * z
}

#[derive(Debug, Clone)]
struct ItemSlot {
    /// Column of the construct in the dataset.
    column: usize,
    loading: Option<usize>,
    sigma: usize,
    /// Standardized coded answers per respondent.
    values: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
struct EquationSlot {
    outcome_column: usize,
    parent_columns: Vec<usize>,
    /// Offset of the intercept in the coordinate vector; coefficients
    /// follow, then log sigma.
    offset: usize,
}

impl EquationSlot {
    fn residual_ll(&self, x: &[f64], scores: &[f64]) -> f64 {
        let k = self.parent_columns.len();
        let mut mu = x[self.offset];
        for (j, &c) in self.parent_columns.iter().enumerate() {
            mu += x[self.offset + 1 + j] * scores[c];
        }
        normal_ll(scores[self.outcome_column], mu, x[self.offset + k + 1])
    }

    fn involves(&self, column: usize) -> bool {
        self.outcome_column == column || self.parent_columns.contains(&column)
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.parent_columns.len() + 2
    }
}

/// Structural model over latent construct scores with a congeneric
/// measurement model for the items:
///
/// `item_ij = lambda_j * S_ik + e_ij`, `e_ij ~ N(0, theta_j)`.
///
/// Items are standardized before fitting, so item intercepts are fixed at
/// 0 (a free intercept only trades off against the mean of the scores and
/// slows mixing badly). The first item of each construct has loading 1,
/// and so does every item of a construct measured by fewer than three
/// items: two indicators cannot separate a free loading from the score
/// variance. Predictor scores have mean 0 and sd `lat.K.sigma`; BI and USE
/// scores follow their structural equations. Latent scores are sampled
/// alongside the parameters but only the parameters are recorded.
#[derive(Debug, Clone)]
pub struct LatentModel {
    names: Vec<String>,
    columns: usize,
    respondents: usize,
    equations: [EquationSlot; 2],
    /// `(column, log sigma coordinate)` of each exogenous score.
    exogenous: Vec<(usize, usize)>,
    items: Vec<ItemSlot>,
    /// Items per construct column.
    items_by_column: Vec<Vec<usize>>,
    /// For each parameter coordinate, what its local density involves.
    roles: Vec<Role>,
    prior: CompiledPrior,
    init_scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Equation(usize),
    Exogenous(usize),
    Item(usize),
}

impl LatentModel {
    pub fn new(graph: &AcceptanceGraph, data: &ScoredDataset, prior: &PriorSpec) -> Result<Self> {
        let mut model = Self::assemble(graph, data)?;
        model.prior = CompiledPrior::new(prior, &model.names)?;
        Ok(model)
    }

    /// Parameter names the model would have for `data`, e.g. to build a prior.
    pub fn names_for(graph: &AcceptanceGraph, data: &ScoredDataset) -> Result<Vec<String>> {
        Ok(Self::assemble(graph, data)?.names)
    }

    fn assemble(graph: &AcceptanceGraph, data: &ScoredDataset) -> Result<Self> {
        let matrix = data
            .items
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("latent layer needs item-level answers in the dataset".into()))?;
        let layout = ParameterLayout::new(graph, Some(data))?;
        let mut names = layout.names();
        let column = |c: ConstructId| {
            data.column_index(c)
                .ok_or_else(|| Error::DimensionMismatch(format!("dataset has no column for {c}")))
        };

        let mut equations = Vec::new();
        for eq in layout.equations() {
            equations.push(EquationSlot {
                outcome_column: column(eq.outcome)?,
                parent_columns: eq.parents.iter().map(|&p| column(p)).collect::<Result<_>>()?,
                offset: layout.offset(eq.outcome),
            });
        }
        let equations: [EquationSlot; 2] = equations.try_into().expect("two equations");
        let mut roles: Vec<Role> = (0..names.len())
            .map(|i| Role::Equation(usize::from(i >= layout.intention.len())))
            .collect();

        let mut exogenous = Vec::new();
        for &c in &data.constructs {
            if !c.is_outcome() {
                exogenous.push((column(c)?, names.len()));
                roles.push(Role::Exogenous(exogenous.len() - 1));
                names.push(latent_sigma_name(c));
            }
        }

        let mut items = Vec::new();
        let mut items_by_column = vec![Vec::new(); data.constructs.len()];
        let mut counts: BTreeMap<ConstructId, usize> = BTreeMap::new();
        for &c in &matrix.item_constructs {
            *counts.entry(c).or_default() += 1;
        }
        let mut seen: BTreeMap<ConstructId, usize> = BTreeMap::new();
        for (j, (id, &construct)) in matrix.item_ids.iter().zip(&matrix.item_constructs).enumerate() {
            let col = column(construct)?;
            let first = !seen.contains_key(&construct);
            *seen.entry(construct).or_default() += 1;
            let observed: Vec<f64> = matrix.values.iter().filter_map(|r| r[j]).collect();
            let (m, s) = (mean(&observed), sd(&observed));
            if observed.len() < 2 || s.is_nan() || s <= 0.0 {
                return Err(Error::InvalidConfig(format!("item {id} is constant or unanswered; cannot standardize")));
            }
            let slot_index = items.len();
            let coordinate = |name: String, names: &mut Vec<String>, roles: &mut Vec<Role>| {
                names.push(name);
                roles.push(Role::Item(slot_index));
                names.len() - 1
            };
            let loading = (!first && counts[&construct] >= 3).then(|| coordinate(item_loading_name(id), &mut names, &mut roles));
            let sigma = coordinate(item_sigma_name(id), &mut names, &mut roles);
            items.push(ItemSlot {
                column: col,
                loading,
                sigma,
                values: matrix.values.iter().map(|r| r[j].map(|v| (v - m) / s)).collect(),
            });
            items_by_column[col].push(slot_index);
        }
        if let Some(c) = data.constructs.iter().find(|c| !seen.contains_key(c)) {
            return Err(Error::InvalidConfig(format!("construct {c} has no items")));
        }

        let n = data.len();
        let columns = data.constructs.len();
        let mut init_scores = vec![0.0; n * columns];
        for (col, slots) in items_by_column.iter().enumerate() {
            for i in 0..n {
                let vals: Vec<f64> = slots.iter().filter_map(|&j| items[j].values[i]).collect();
                if !vals.is_empty() {
                    init_scores[i * columns + col] = mean(&vals);
                }
            }
        }

        let prior = CompiledPrior::new(&PriorSpec::from_names(&names), &names)?;
        Ok(Self {
            names,
            columns,
            respondents: n,
            equations,
            exogenous,
            items,
            items_by_column,
            roles,
            prior,
            init_scores,
        })
    }

    /// Names of the recorded parameters (structural first, then measurement).
    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn num_parameters(&self) -> usize {
        self.names.len()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    fn scores<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        let start = self.names.len() + i * self.columns;
        &x[start..start + self.columns]
    }

    fn item_ll(&self, x: &[f64], j: usize, i: usize) -> f64 {
        let item = &self.items[j];
        let Some(y) = item.values[i] else { return 0.0 };
        let lambda = item.loading.map_or(1.0, |k| x[k]);
        let s = self.scores(x, i)[item.column];
        normal_ll(y, lambda * s, x[item.sigma])
    }

    fn exogenous_ll(&self, x: &[f64], e: usize, i: usize) -> f64 {
        let (col, sigma) = self.exogenous[e];
        normal_ll(self.scores(x, i)[col], 0.0, x[sigma])
    }

    /// Every term of respondent `i` that involves score column `col`.
    fn respondent_ll(&self, x: &[f64], i: usize, col: usize) -> f64 {
        let scores = self.scores(x, i);
        let mut total = 0.0;
        if let Some(e) = self.exogenous.iter().position(|&(c, _)| c == col) {
            total += self.exogenous_ll(x, e, i);
        }
        for eq in &self.equations {
            if eq.involves(col) {
                total += eq.residual_ll(x, scores);
            }
        }
        for &j in &self.items_by_column[col] {
            total += self.item_ll(x, j, i);
        }
        total
    }
}

impl Target for LatentModel {
    fn dim(&self) -> usize {
        self.names.len() + self.respondents * self.columns
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut total = self.prior.log_density_unconstrained(x);
        for i in 0..self.respondents {
            let scores = self.scores(x, i);
            total += self.equations.iter().map(|eq| eq.residual_ll(x, scores)).sum::<f64>();
            total += (0..self.exogenous.len()).map(|e| self.exogenous_ll(x, e, i)).sum::<f64>();
            total += (0..self.items.len()).map(|j| self.item_ll(x, j, i)).sum::<f64>();
        }
        total
    }

    fn local_log_density(&self, x: &[f64], k: usize) -> f64 {
        let p = self.names.len();
        if k >= p {
            let i = (k - p) / self.columns;
            return self.respondent_ll(x, i, (k - p) % self.columns);
        }
        let lik: f64 = match self.roles[k] {
            Role::Equation(e) => {
                debug_assert!(self.equations[e].range().contains(&k));
                (0..self.respondents)
                    .map(|i| self.equations[e].residual_ll(x, self.scores(x, i)))
                    .sum()
            }
            Role::Exogenous(e) => (0..self.respondents).map(|i| self.exogenous_ll(x, e, i)).sum(),
            Role::Item(j) => (0..self.respondents).map(|i| self.item_ll(x, j, i)).sum(),
        };
        lik + self.prior.local_log_density_unconstrained(x, k)
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .names
            .iter()
            .map(|n| if n.ends_with(".loading") { 1.0 } else { 0.0 })
            .collect();
        x.extend_from_slice(&self.init_scores);
        x
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

/// Posterior-mean latent scores (`respondents x columns`) from the
/// per-chain coordinate means of a latent-model run.
pub fn latent_score_means(model: &LatentModel, coordinate_means: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = model.num_parameters();
    let c = model.columns();
    let chains = coordinate_means.len().max(1) as f64;
    (0..model.respondents)
        .map(|i| {
            (0..c)
                .map(|col| coordinate_means.iter().map(|m| m[p + i * c + col]).sum::<f64>() / chains)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_graph, default_instrument};
    use crate::survey::score_constructs;
    use crate::synthetic::Generator;

    fn small_dataset() -> ScoredDataset {
        let instrument = default_instrument();
        let generator = Generator {
            respondents: 8,
            ..Generator::default()
        };
        score_constructs(&generator.responses(&instrument), &instrument, true).unwrap()
    }

    #[test]
    fn parameter_layout() {
        let data = small_dataset();
        let prior = PriorSpec::from_names(&[]);
        let err = LatentModel::new(&default_graph(), &data, &prior).unwrap_err();
        assert!(matches!(err, Error::MissingPrior(_)));

        let instrument = default_instrument();
        let mut expected_items = 0;
        for items in instrument.items_by_construct().values() {
            // loadings for all but the first item of three-item constructs; sigmas for all
            let n = items.len();
            expected_items += if n >= 3 { n - 1 } else { 0 } + n;
        }
        let full = full_prior(&data);
        let model = LatentModel::new(&default_graph(), &data, &full).unwrap();
        assert_eq!(model.num_parameters(), 27 + expected_items);
        assert_eq!(model.dim(), model.num_parameters() + 8 * 12);
        assert!(model.parameter_names().contains(&"item.PE2.loading".to_string()));
        assert!(!model.parameter_names().contains(&"item.PE1.loading".to_string()));
        assert!(!model.parameter_names().contains(&"item.TC2.loading".to_string()));
        assert!(!model.parameter_names().iter().any(|n| n.ends_with(".intercept") && n.starts_with("item.")));
    }

    fn full_prior(data: &ScoredDataset) -> PriorSpec {
        let probe = LatentModel::names_for(&default_graph(), data).unwrap();
        PriorSpec::from_names(&probe)
    }

    #[test]
    fn local_density_differs_by_constant() {
        let data = small_dataset();
        let model = LatentModel::new(&default_graph(), &data, &full_prior(&data)).unwrap();
        let x: Vec<f64> = model
            .initial_point()
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.01 * (i % 13) as f64 - 0.05)
            .collect();
        for k in (0..model.dim()).step_by(7) {
            let mut y = x.clone();
            y[k] += 0.21;
            let full = model.log_density(&y) - model.log_density(&x);
            let local = model.local_log_density(&y, k) - model.local_log_density(&x, k);
            assert!((full - local).abs() < 1e-8, "coordinate {k}: {full} vs {local}");
        }
    }

    #[test]
    fn requires_item_matrix() {
        let mut data = small_dataset();
        data.items = None;
        let prior = PriorSpec::from_names(&[]);
        assert!(matches!(
            LatentModel::new(&default_graph(), &data, &prior),
            Err(Error::InvalidConfig(_))
        ));
    }
}
