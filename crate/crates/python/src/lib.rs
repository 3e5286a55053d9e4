//! Python bindings: environments, novelty helpers and full runs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qdlab::harness::run_algorithm;
use qdlab::{Algo, EnvSpec, MlpSpec, ParameterVector, SereneConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Number of weights and biases of a tanh MLP.
#[pyfunction]
#[pyo3(signature = (input_dim, hidden, output_dim))]
fn param_count(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> PyResult<usize> {
    Ok(MlpSpec::new(input_dim, hidden, output_dim).map_err(value_err)?.param_count())
}

/// A built-in environment or one loaded from a geometry file.
#[pyclass(name = "Env", frozen)]
struct PyEnv {
    inner: EnvSpec,
}

#[pymethods]
impl PyEnv {
    #[new]
    fn new(name_or_path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: EnvSpec::resolve(name_or_path).map_err(value_err)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn param_count(&self) -> usize {
        qdlab::env::Task::param_count(&self.inner)
    }

    /// ((xmin, ymin), (xmax, ymax)) of the behavior space.
    #[getter]
    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let b = self.inner.behavior_bounds();
        ((b.min[0], b.min[1]), (b.max[0], b.max[1]))
    }

    /// List of (id, (x, y), radius).
    #[getter]
    fn reward_areas(&self) -> Vec<(u32, (f64, f64), f64)> {
        qdlab::env::Task::reward_areas(&self.inner)
            .iter()
            .map(|a| (a.id, (a.center[0], a.center[1]), a.radius))
            .collect()
    }

    /// Runs one episode. Returns (descriptor, reward, area_id).
    fn run_episode(&self, params: Vec<f64>) -> PyResult<((f64, f64), f64, Option<u32>)> {
        if params.len() != self.param_count() {
            return Err(value_err(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let params = ParameterVector::try_new(params).map_err(value_err)?;
        let r = self.inner.run_episode(&params);
        Ok(((r.descriptor[0], r.descriptor[1]), r.reward, r.area_id))
    }

    fn without_rewards(&self) -> Self {
        Self {
            inner: self.inner.without_rewards(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Env('{}')", self.inner.name())
    }
}

/// Mean distance to the `k` nearest points of `reference`.
#[pyfunction]
#[pyo3(signature = (query, reference, k=15))]
fn novelty(query: (f64, f64), reference: Vec<(f64, f64)>, k: usize) -> f64 {
    let pts: Vec<[f64; 2]> = reference.into_iter().map(|(x, y)| [x, y]).collect();
    qdlab::novelty(query.into(), &pts, k)
}

/// Fraction of occupied cells of a `cells` x `cells` grid over `bounds`.
#[pyfunction]
#[pyo3(signature = (points, bounds, cells=50))]
fn coverage(points: Vec<(f64, f64)>, bounds: ((f64, f64), (f64, f64)), cells: usize) -> PyResult<f64> {
    if cells == 0 {
        return Err(value_err("cells must be positive"));
    }
    let pts: Vec<[f64; 2]> = points.into_iter().map(|(x, y)| [x, y]).collect();
    let rect = qdlab::Rect::new(bounds.0.into(), bounds.1.into());
    Ok(qdlab::coverage(&pts, &rect, cells))
}

#[pyfunction]
fn reward_value(distance: f64, radius: f64) -> PyResult<f64> {
    qdlab::env::reward_value(distance, radius).map_err(value_err)
}

/// Indices of the (improvement, novelty) pairs on the Pareto front.
#[pyfunction]
fn pareto_front(points: Vec<(f64, f64)>) -> Vec<usize> {
    qdlab::serene::pareto_front(&points)
}

/// Runs one algorithm for one seed and returns its metric rows as dicts.
#[pyfunction]
#[pyo3(signature = (algo, env, budget, seed=0, snapshot_every=1000))]
fn run(
    py: Python<'_>,
    algo: &str,
    env: &PyEnv,
    budget: u64,
    seed: u64,
    snapshot_every: u64,
) -> PyResult<Vec<Py<PyAny>>> {
    let algo: Algo = algo.parse().map_err(value_err)?;
    let cfg = SereneConfig {
        bud: budget,
        seed,
        ..SereneConfig::default()
    };
    cfg.validate().map_err(value_err)?;
    if snapshot_every == 0 {
        return Err(value_err("snapshot_every must be positive"));
    }
    let out = py.detach(|| run_algorithm(algo, &cfg, &env.inner, snapshot_every, false));
    out.rows
        .iter()
        .map(|r| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("evaluations", r.evaluations)?;
            d.set_item("coverage", r.coverage)?;
            d.set_item("cov_archive", r.cov_archive)?;
            d.set_item("max_reward", r.max_reward_per_area.clone())?;
            d.set_item("split_exploration", r.budget_split.exploration)?;
            d.set_item("split_areas", r.budget_split.areas.clone())?;
            d.set_item("a_nov_size", r.a_nov_size)?;
            d.set_item("a_rew_size", r.a_rew_size)?;
            d.set_item("phase", r.phase.label())?;
            Ok(d.into_any().unbind())
        })
        .collect()
}

#[pymodule]
fn qdlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(param_count, m)?)?;
    m.add_function(wrap_pyfunction!(novelty, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(reward_value, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_front, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
