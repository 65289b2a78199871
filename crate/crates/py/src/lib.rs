//! Python bindings: catalogs, preference models, dominance, suggestion
//! scoring and simulation sweeps.
//!
//! Configuration objects cross the boundary as JSON strings in the same
//! formats the CLI and the service use.

use std::collections::BTreeMap;

use critique_core::sim::{run_sweep, CatalogSource, SimConfig};
use critique_core::suggest::{counting_scores, probabilistic_scores, select_suggestions};
use critique_core::{
    Catalog as CoreCatalog, CatalogFormat, CatalogSpec, Criterion, PreferenceModel as CoreModel,
    Strategy, SuggestionConfig,
};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(critique, CritiqueError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    CritiqueError::new_err(e.to_string())
}

/// A table of options over a typed attribute schema.
#[pyclass(name = "Catalog", module = "critique", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Catalog(CoreCatalog);

#[pymethods]
impl Catalog {
    /// Parse the JSON exchange format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreCatalog::from_json_str(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        CoreCatalog::load(text.as_bytes(), CatalogFormat::Csv)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CoreCatalog::load_path(path).map(Self).map_err(err)
    }

    /// A bundled catalog: `housing` or `listings`.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        match name {
            "housing" => Ok(Self(critique_core::fixtures::housing())),
            "listings" => Ok(Self(critique_core::fixtures::listings())),
            other => Err(err(format!("no bundled catalog `{other}`"))),
        }
    }

    /// Random catalog of `n` options, e.g. `generate(50, "9int", seed=1)`.
    #[staticmethod]
    #[pyo3(signature = (n, attrs, seed = 1))]
    fn generate(n: usize, attrs: &str, seed: u64) -> PyResult<Self> {
        let spec = CatalogSpec::parse_attrs(n, attrs).map_err(err)?;
        CoreCatalog::generate(&spec, seed).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.0.save(&mut out, CatalogFormat::Csv).map_err(err)?;
        String::from_utf8(out).map_err(err)
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.options().iter().map(|o| o.id.clone()).collect()
    }

    #[getter]
    fn attributes(&self) -> Vec<String> {
        self.0.schema().iter().map(|a| a.name.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Catalog({} options, {} attributes)",
            self.0.len(),
            self.0.schema().len()
        )
    }
}

/// Stated preferences, combined by weighted sum.
#[pyclass(name = "PreferenceModel", module = "critique", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PreferenceModel(CoreModel);

#[pymethods]
impl PreferenceModel {
    /// Parse `[{attr, variant, theta?, direction?, polarity?, tolerance_t?, weight}]`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreModel::from_json_str(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn validate(&self, catalog: &Catalog) -> PyResult<()> {
        self.0.validate(&catalog.0).map_err(err)
    }

    /// Weighted utility of every option, keyed by id.
    fn utilities(&self, catalog: &Catalog) -> PyResult<BTreeMap<String, f64>> {
        let eval = self.0.evaluate(&catalog.0).map_err(err)?;
        Ok(catalog
            .0
            .options()
            .iter()
            .zip(eval.utilities)
            .map(|(o, u)| (o.id.clone(), u))
            .collect())
    }

    /// The `k` best options by utility.
    fn top_k(&self, catalog: &Catalog, k: usize) -> PyResult<Vec<String>> {
        let top = self.0.top_k_candidates(&catalog.0, k).map_err(err)?;
        Ok(ids(&catalog.0, &top))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("PreferenceModel({})", self.0.to_json_string())
    }
}

fn ids(catalog: &CoreCatalog, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| catalog.options()[i].id.clone())
        .collect()
}

fn parse_config(config: Option<&str>) -> PyResult<SuggestionConfig> {
    match config {
        Some(text) => serde_json::from_str(text).map_err(err),
        None => Ok(SuggestionConfig::default()),
    }
}

/// Dominating and equal sets of every option.
#[pyfunction]
#[pyo3(signature = (catalog, model, criterion = "pareto"))]
fn dominance<'py>(
    py: Python<'py>,
    catalog: &Catalog,
    model: &PreferenceModel,
    criterion: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let criterion: Criterion = criterion.parse().map_err(err)?;
    let index = model
        .0
        .build_dominance_index(&catalog.0, criterion)
        .map_err(err)?;
    let out = PyDict::new(py);
    for (i, option) in catalog.0.options().iter().enumerate() {
        let entry = PyDict::new(py);
        entry.set_item("dominators", index.dominator_ids(&catalog.0, i))?;
        entry.set_item("equals", index.equal_ids(&catalog.0, i))?;
        out.set_item(&option.id, entry)?;
    }
    Ok(out)
}

/// Per-option scores: `f_c`, `f_p` (probabilistic strategies only) and
/// per-attribute deltas.
#[pyfunction]
#[pyo3(signature = (catalog, model, strategy = "prob2", config = None))]
fn scores<'py>(
    py: Python<'py>,
    catalog: &Catalog,
    model: &PreferenceModel,
    strategy: &str,
    config: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = parse_config(config)?;
    config.strategy = strategy.parse().map_err(err)?;
    let index = model
        .0
        .build_dominance_index(&catalog.0, config.criterion)
        .map_err(err)?;
    let scores = match config.strategy {
        Strategy::ProbIndependent | Strategy::ProbJoint => {
            probabilistic_scores(&catalog.0, &model.0, &index, &config).map_err(err)?
        }
        _ => counting_scores(&catalog.0, &index),
    };
    scores
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("id", &s.id)?;
            d.set_item("f_c", s.f_c)?;
            d.set_item("f_p", s.f_p)?;
            let deltas: BTreeMap<&str, f64> = catalog
                .0
                .schema()
                .iter()
                .zip(&s.deltas)
                .map(|(a, v)| (a.name.as_str(), *v))
                .collect();
            d.set_item("deltas", deltas)?;
            Ok(d)
        })
        .collect()
}

/// Ids of the chosen suggestion set, best first.
#[pyfunction]
#[pyo3(signature = (catalog, model, strategy = "prob2", set_size = 1, config = None, exclude = Vec::new()))]
fn suggest(
    catalog: &Catalog,
    model: &PreferenceModel,
    strategy: &str,
    set_size: usize,
    config: Option<&str>,
    exclude: Vec<String>,
) -> PyResult<Vec<String>> {
    let mut config = parse_config(config)?;
    config.strategy = strategy.parse().map_err(err)?;
    config.set_size = set_size;
    let excluded = exclude
        .iter()
        .map(|id| {
            catalog
                .0
                .option_index(id)
                .ok_or_else(|| err(format!("unknown option `{id}`")))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let index = model
        .0
        .build_dominance_index(&catalog.0, config.criterion)
        .map_err(err)?;
    let set = select_suggestions(&catalog.0, &model.0, &index, &config, &excluded).map_err(err)?;
    Ok(set.ids)
}

/// Mean fraction of hidden preferences discovered, per strategy.
#[pyfunction]
#[pyo3(signature = (catalog_spec = "rand-50x9int", m = None, runs = 100, seed = 1, strategy = "all", candidates = 0, suggestions = 5))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    catalog_spec: &str,
    m: Option<usize>,
    runs: usize,
    seed: u64,
    strategy: &str,
    candidates: usize,
    suggestions: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let spec = CatalogSpec::parse_compact(catalog_spec).map_err(err)?;
    let m = m.unwrap_or(spec.attributes.len());
    let strategies = match strategy {
        "all" => Strategy::ALL.to_vec(),
        name => vec![name.parse().map_err(err)?],
    };
    let mut config = SimConfig::new(CatalogSource::Generated(spec), m, runs, seed);
    config.session.display_candidates = candidates;
    config.session.display_suggestions = suggestions;
    let results = py
        .detach(|| run_sweep(&config, &strategies))
        .map_err(err)?;
    Ok(results
        .into_iter()
        .map(|r| (r.strategy.name().to_string(), r.mean_fraction))
        .collect())
}

#[pymodule]
fn critique(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CritiqueError", m.py().get_type::<CritiqueError>())?;
    m.add_class::<Catalog>()?;
    m.add_class::<PreferenceModel>()?;
    m.add_function(wrap_pyfunction!(dominance, m)?)?;
    m.add_function(wrap_pyfunction!(scores, m)?)?;
    m.add_function(wrap_pyfunction!(suggest, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
