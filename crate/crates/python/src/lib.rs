//! Python bindings: instruments, datasets, fitting, diagnostics, prior
//! chaining and what-if simulation. Structured results come back as plain
//! Python dicts and lists.

use acceptance_core::inference::{fit as core_fit, FitOptions, Measurement, SamplerConfig};
use acceptance_core::model::InstrumentSpec;
use acceptance_core::survey::ScoredDataset;
use acceptance_core::whatif::{self, parse_scenarios, SimulationOptions};
use acceptance_core::workflow::{self, DatasetInput};
use acceptance_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Io(_) => PyRuntimeError::new_err(err.to_string()),
        Error::Unconverged(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Serialize through JSON into native Python objects.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn text_or_bytes(data: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
    if let Ok(b) = data.cast::<PyBytes>() {
        return Ok(b.as_bytes().to_vec());
    }
    Ok(data.extract::<String>()?.into_bytes())
}

/// Questionnaire items, scale and acceptance graph.
#[pyclass(name = "Instrument", module = "acceptance", frozen)]
struct PyInstrument {
    inner: InstrumentSpec,
}

#[pymethods]
impl PyInstrument {
    /// The built-in twelve-construct instrument.
    #[staticmethod]
    fn default() -> Self {
        Self {
            inner: acceptance_core::model::default_instrument(),
        }
    }

    #[staticmethod]
    fn from_json(text: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = InstrumentSpec::from_json(&text_or_bytes(text)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    #[getter]
    fn graph_hash(&self) -> String {
        self.inner.graph_hash()
    }

    /// `{"nodes": [...], "edges": [...]}`.
    fn graph(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, self.inner.graph())
    }

    /// Parents of a construct in graph order, e.g. `parents("USE")`.
    fn parents(&self, construct: &str) -> PyResult<Vec<String>> {
        let id = construct.parse().map_err(py_err)?;
        let parents = self.inner.graph().parents(id).map_err(py_err)?;
        Ok(parents.iter().map(|c| c.to_string()).collect())
    }
}

/// Scored survey data: construct scores per respondent, raw and standardized.
#[pyclass(name = "Dataset", module = "acceptance", frozen)]
struct PyDataset {
    inner: ScoredDataset,
}

#[pymethods]
impl PyDataset {
    /// Score long-format CSV (`respondent_id,wave,item_id,value`).
    #[staticmethod]
    fn from_csv(data: &Bound<'_, PyAny>, instrument: &PyInstrument) -> PyResult<Self> {
        let inner = workflow::load_dataset(&text_or_bytes(data)?, DatasetInput::ResponsesCsv, &instrument.inner).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// A JSON response list or an already scored dataset.
    #[staticmethod]
    fn from_json(data: &Bound<'_, PyAny>, instrument: &PyInstrument) -> PyResult<Self> {
        let bytes = text_or_bytes(data)?;
        let kind = DatasetInput::detect(None, &bytes);
        let inner = workflow::load_dataset(&bytes, kind, &instrument.inner).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        String::from_utf8(self.inner.to_json()).expect("JSON is UTF-8")
    }

    /// Content hash; the id the service would assign.
    #[getter]
    fn id(&self) -> String {
        self.inner.hash()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Raw-score mean per construct.
    fn raw_means(&self) -> Vec<(String, f64)> {
        self.inner.raw_means().into_iter().map(|(c, m)| (c.to_string(), m)).collect()
    }
}

/// Prior for chaining a fit onto an earlier wave.
#[pyclass(name = "Prior", module = "acceptance", frozen)]
struct PyPrior {
    inner: acceptance_core::inference::PriorSpec,
}

#[pymethods]
impl PyPrior {
    #[staticmethod]
    fn from_json(text: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = acceptance_core::inference::PriorSpec::from_json(&text_or_bytes(text)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        String::from_utf8(self.inner.to_json()).expect("JSON is UTF-8")
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.hash()
    }

    /// Provenance record, e.g. `{"kind": "chained", "sourcePosteriorId": ...}`.
    fn provenance(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.provenance)
    }
}

/// Posterior draws with diagnostics and the hashes binding them to their
/// graph and dataset.
#[pyclass(name = "Posterior", module = "acceptance", frozen)]
struct PyPosterior {
    inner: acceptance_core::inference::Posterior,
}

#[pymethods]
impl PyPosterior {
    #[staticmethod]
    fn from_json(text: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = acceptance_core::inference::Posterior::from_json(&text_or_bytes(text)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Canonical bytes, identical to the command line's posterior file.
    fn to_json(&self) -> String {
        String::from_utf8(self.inner.to_json()).expect("JSON is UTF-8")
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    #[getter]
    fn parameter_names(&self) -> Vec<String> {
        self.inner.samples.parameter_names.clone()
    }

    fn mean(&self, parameter: &str) -> PyResult<f64> {
        self.inner
            .samples
            .mean(parameter)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter {parameter}")))
    }

    fn sd(&self, parameter: &str) -> PyResult<f64> {
        self.inner
            .samples
            .sd(parameter)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter {parameter}")))
    }

    /// Pooled draws of one parameter, chain by chain.
    fn draws(&self, parameter: &str) -> PyResult<Vec<f64>> {
        let samples = &self.inner.samples;
        let index = samples
            .index_of(parameter)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter {parameter}")))?;
        Ok(samples.pooled(index))
    }

    fn diagnostics(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.diagnostics_summary)
    }

    fn diagnostics_table(&self) -> String {
        workflow::diagnostics_table(&self.inner)
    }

    /// Coefficients with credible intervals, diagnostics and construct means.
    fn summary(&self, py: Python<'_>, dataset: &PyDataset) -> PyResult<Py<PyAny>> {
        let s = workflow::posterior_summary(&self.inner, &dataset.inner).map_err(py_err)?;
        to_py(py, &s)
    }

    fn report(&self, dataset: &PyDataset, instrument: &PyInstrument) -> PyResult<String> {
        let s = workflow::posterior_summary(&self.inner, &dataset.inner).map_err(py_err)?;
        Ok(workflow::report(&s, instrument.inner.scale().midpoint()))
    }

    /// Prior for the next wave. Raises if the posterior has not converged.
    fn compress(&self) -> PyResult<PyPrior> {
        Ok(PyPrior {
            inner: self.inner.compress().map_err(py_err)?,
        })
    }
}

/// Fit the structural model. Keyword arguments override sampler defaults.
#[pyfunction]
#[pyo3(signature = (dataset, instrument=None, prior=None, *, seed=None, chains=None, warmup=None, draws=None, latent=false))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    dataset: &PyDataset,
    instrument: Option<&PyInstrument>,
    prior: Option<&PyPrior>,
    seed: Option<u64>,
    chains: Option<usize>,
    warmup: Option<usize>,
    draws: Option<usize>,
    latent: bool,
) -> PyResult<PyPosterior> {
    let instrument = instrument.map_or_else(acceptance_core::model::default_instrument, |i| i.inner.clone());
    let mut sampler = SamplerConfig::default();
    if let Some(s) = seed {
        sampler.seed = s;
    }
    if let Some(c) = chains {
        sampler.chains = c;
    }
    if let Some(w) = warmup {
        sampler.warmup_draws = w;
    }
    if let Some(d) = draws {
        sampler.kept_draws = d;
    }
    let options = FitOptions {
        sampler,
        measurement: if latent { Measurement::Latent } else { Measurement::Parcel },
    };
    let prior = prior.map(|p| &p.inner);
    let data = &dataset.inner;
    let inner = py
        .detach(|| core_fit(&instrument, data, prior, &options))
        .map_err(py_err)?;
    Ok(PyPosterior { inner })
}

fn sim_options(draws: usize, seed: Option<u64>) -> SimulationOptions {
    SimulationOptions {
        draws_per_sample: draws,
        seed: seed.unwrap_or(SimulationOptions::default().seed),
    }
}

fn one_scenario(text: &Bound<'_, PyAny>) -> PyResult<whatif::Scenario> {
    let mut list = parse_scenarios(&text_or_bytes(text)?).map_err(py_err)?;
    if list.len() != 1 {
        return Err(PyValueError::new_err(format!("expected one scenario, got {}", list.len())));
    }
    Ok(list.remove(0))
}

/// Posterior predictive BI and USE under a scenario given as JSON, e.g.
/// `{"name": "x", "set": {"TC": {"value": 6}}}`.
#[pyfunction]
#[pyo3(signature = (posterior, dataset, scenario, instrument=None, *, draws=1, seed=None))]
fn simulate(
    py: Python<'_>,
    posterior: &PyPosterior,
    dataset: &PyDataset,
    scenario: &Bound<'_, PyAny>,
    instrument: Option<&PyInstrument>,
    draws: usize,
    seed: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let instrument = instrument.map_or_else(acceptance_core::model::default_instrument, |i| i.inner.clone());
    let scenario = one_scenario(scenario)?;
    let options = sim_options(draws, seed);
    let result = py
        .detach(|| whatif::simulate(&posterior.inner, &dataset.inner, &instrument, &scenario, &options))
        .map_err(py_err)?;
    to_py(py, &result)
}

/// Rank scenarios (a JSON array) by expected USE gain over the baseline.
#[pyfunction]
#[pyo3(signature = (posterior, dataset, scenarios, instrument=None, *, draws=1, seed=None))]
fn rank(
    py: Python<'_>,
    posterior: &PyPosterior,
    dataset: &PyDataset,
    scenarios: &Bound<'_, PyAny>,
    instrument: Option<&PyInstrument>,
    draws: usize,
    seed: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let instrument = instrument.map_or_else(acceptance_core::model::default_instrument, |i| i.inner.clone());
    let scenarios = parse_scenarios(&text_or_bytes(scenarios)?).map_err(py_err)?;
    let options = sim_options(draws, seed);
    let result = py
        .detach(|| whatif::rank(&posterior.inner, &dataset.inner, &instrument, &scenarios, &options))
        .map_err(py_err)?;
    to_py(py, &result)
}

/// Long-format CSV of synthetic responses from the built-in generator.
#[pyfunction]
#[pyo3(signature = (respondents=200, seed=42))]
fn synthetic_csv(respondents: usize, seed: u64) -> String {
    let g = acceptance_core::synthetic::Generator {
        respondents,
        seed,
        ..Default::default()
    };
    acceptance_core::survey::to_csv(&g.responses(&acceptance_core::model::default_instrument()))
}

#[pymodule]
fn acceptance(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstrument>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPrior>()?;
    m.add_class::<PyPosterior>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_csv, m)?)?;
    Ok(())
}
