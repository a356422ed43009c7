//! Python bindings over the core crate: world bundles, demonstration
//! corpora, training, evaluation and single-session traces, mirroring
//! the CLI's operations on in-memory objects.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gdpl_core::config::{Algo, Config};
use gdpl_core::error::GdplError;
use gdpl_core::metrics::AggregateMetrics;
use gdpl_core::{rng, trainer};

fn err(e: GdplError) -> PyErr {
    match &e {
        GdplError::Usage(_) | GdplError::Validation(_) => PyValueError::new_err(e.to_string()),
        GdplError::Io { .. } => PyIOError::new_err(e.to_string()),
        GdplError::Runtime(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn aggregate_dict<'py>(py: Python<'py>, a: &AggregateMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("sessions", a.sessions)?;
    d.set_item("success_rate", a.success_rate)?;
    d.set_item("inform_recall", a.inform_recall)?;
    d.set_item("inform_precision", a.inform_precision)?;
    d.set_item("inform_f1", a.inform_f1)?;
    d.set_item("match_rate", a.match_rate)?;
    d.set_item("mean_turns", a.mean_turns)?;
    Ok(d)
}

/// Synthetic multi-domain world: ontology, entity database and goal
/// statistics.
#[pyclass(frozen)]
struct Bundle {
    inner: gdpl_core::Bundle,
}

#[pymethods]
impl Bundle {
    /// Generate a fresh world from a seed.
    #[staticmethod]
    #[pyo3(signature = (seed = 0))]
    fn generate(seed: u64) -> PyResult<Self> {
        let inner =
            gdpl_core::synth_bundle(seed, &gdpl_core::SynthParams::default()).map_err(err)?;
        Ok(Bundle { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Bundle {
            inner: gdpl_core::Bundle::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn domains(&self) -> Vec<String> {
        self.inner
            .ontology
            .domains
            .iter()
            .map(|d| d.name.clone())
            .collect()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.ontology.vocab_size()
    }

    #[getter]
    fn entities(&self) -> usize {
        self.inner.database.tables.values().map(|t| t.len()).sum()
    }

    /// Content hash as a hex string; corpora and checkpoints are pinned
    /// to it.
    fn content_hash(&self) -> String {
        format!("{:016x}", self.inner.content_hash())
    }

    /// Sample one user goal and return it as a JSON string.
    #[pyo3(signature = (seed = 0))]
    fn sample_goal_json(&self, seed: u64) -> PyResult<String> {
        let mut r = rng::stream(seed, "trace/goal");
        let goal = gdpl_core::sample_goal(
            &self.inner.ontology,
            &self.inner.database,
            &self.inner.goal_stats,
            &mut r,
        )
        .map_err(err)?;
        serde_json::to_string_pretty(&goal).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Bundle(domains={}, vocab={}, entities={}, hash={})",
            self.inner.ontology.domains.len(),
            self.inner.ontology.vocab_size(),
            self.inner.database.tables.values().map(|t| t.len()).sum::<usize>(),
            self.content_hash()
        )
    }
}

/// Scripted-expert demonstration corpus bound to one world bundle.
#[pyclass(frozen)]
struct Corpus {
    inner: gdpl_core::corpus::Corpus,
}

#[pymethods]
impl Corpus {
    /// Roll fresh expert demonstrations in the given world.
    #[staticmethod]
    #[pyo3(signature = (bundle, sessions = 2000, epsilon = 0.2, seed = 0))]
    fn generate(bundle: &Bundle, sessions: usize, epsilon: f64, seed: u64) -> PyResult<Self> {
        let sim = gdpl_core::simulator::SimulatorConfig::default();
        let inner =
            gdpl_core::corpus::generate_corpus(&bundle.inner, sim, sessions, epsilon, seed)
                .map_err(err)?;
        Ok(Corpus { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf, bundle: &Bundle) -> PyResult<Self> {
        Ok(Corpus {
            inner: gdpl_core::corpus::Corpus::load(&path, &bundle.inner).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Aggregate metrics of the demonstrations themselves.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        aggregate_dict(py, &self.inner.header.stats)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.header.epsilon
    }

    fn __len__(&self) -> usize {
        self.inner.sessions.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(sessions={}, epsilon={}, success={:.3})",
            self.inner.sessions.len(),
            self.inner.header.epsilon,
            self.inner.header.stats.success_rate
        )
    }
}

/// Trained policy (and optional reward estimator) with its optimizer
/// state.
#[pyclass(frozen)]
struct Checkpoint {
    inner: trainer::Checkpoint,
}

#[pymethods]
impl Checkpoint {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Checkpoint {
            inner: trainer::Checkpoint::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn algo(&self) -> String {
        self.inner.algo.to_string()
    }

    #[getter]
    fn iteration(&self) -> usize {
        self.inner.iteration
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn has_estimator(&self) -> bool {
        self.inner.estimator.is_some()
    }

    fn __repr__(&self) -> String {
        format!(
            "Checkpoint(algo={}, iteration={}, seed={})",
            self.inner.algo, self.inner.iteration, self.inner.seed
        )
    }
}

/// Train a policy from scratch (behavior cloning, then reinforcement)
/// and return the final checkpoint. Writes `metrics.tsv` and
/// `checkpoint.json` into `out_dir` like the CLI does.
#[pyfunction]
#[pyo3(signature = (
    bundle,
    corpus,
    out_dir,
    algo = "gdpl",
    seed = 0,
    iterations = 10,
    episodes_per_iter = None,
    pretrain_epochs = None,
))]
#[allow(clippy::too_many_arguments)]
fn train(
    bundle: &Bundle,
    corpus: &Corpus,
    out_dir: PathBuf,
    algo: &str,
    seed: u64,
    iterations: usize,
    episodes_per_iter: Option<usize>,
    pretrain_epochs: Option<usize>,
) -> PyResult<Checkpoint> {
    let mut cfg = Config::default();
    cfg.training.algo = Algo::parse(algo).map_err(err)?;
    cfg.training.seed = seed;
    cfg.training.iterations = iterations;
    if let Some(n) = episodes_per_iter {
        cfg.training.episodes_per_iter = n;
    }
    if let Some(n) = pretrain_epochs {
        cfg.training.pretrain_epochs = n;
    }
    cfg.validate().map_err(err)?;
    let mut ckpt =
        trainer::init_checkpoint(&bundle.inner, &corpus.inner, &cfg.training).map_err(err)?;
    trainer::train(
        &bundle.inner,
        &corpus.inner,
        cfg.simulator,
        &cfg.training,
        &mut ckpt,
        &out_dir,
        iterations,
    )
    .map_err(err)?;
    Ok(Checkpoint { inner: ckpt })
}

/// Greedy evaluation on fresh goals: aggregate metrics plus per-session
/// returns under the checkpoint's reward.
#[pyfunction]
#[pyo3(signature = (bundle, checkpoint, goals = 100, seed = 0))]
fn evaluate<'py>(
    py: Python<'py>,
    bundle: &Bundle,
    checkpoint: &Checkpoint,
    goals: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    checkpoint.inner.check_bundle(&bundle.inner).map_err(err)?;
    let sim = gdpl_core::simulator::SimulatorConfig::default();
    let output =
        trainer::evaluate(&bundle.inner, &checkpoint.inner, sim, goals, seed).map_err(err)?;
    let d = aggregate_dict(py, &output.aggregate)?;
    d.set_item("returns", output.returns)?;
    d.set_item("reward_traces", output.reward_traces)?;
    Ok(d)
}

/// Play one session (greedy policy, or the scripted expert scored by
/// the learned reward) and return it as a dict of turns and rewards.
#[pyfunction]
#[pyo3(signature = (bundle, checkpoint, seed = 0, expert = false, epsilon = 0.0))]
fn trace<'py>(
    py: Python<'py>,
    bundle: &Bundle,
    checkpoint: &Checkpoint,
    seed: u64,
    expert: bool,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    checkpoint.inner.check_bundle(&bundle.inner).map_err(err)?;
    let sim = gdpl_core::simulator::SimulatorConfig::default();
    let mut goal_rng = rng::stream(seed, "trace/goal");
    let goal = gdpl_core::sample_goal(
        &bundle.inner.ontology,
        &bundle.inner.database,
        &bundle.inner.goal_stats,
        &mut goal_rng,
    )
    .map_err(err)?;
    let (session, rewards) = if expert {
        trainer::expert_trace(&bundle.inner, &checkpoint.inner, sim, goal, epsilon, seed)
            .map_err(err)?
    } else {
        trainer::policy_trace(&bundle.inner, &checkpoint.inner, sim, goal, seed).map_err(err)?
    };
    let metrics = gdpl_core::metrics::evaluate_session(&bundle.inner, &session).map_err(err)?;

    let turns = pyo3::types::PyList::empty_bound(py);
    for (turn, reward) in session.turns.iter().zip(&rewards) {
        let t = PyDict::new_bound(py);
        t.set_item(
            "user",
            turn.user_acts.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        )?;
        t.set_item(
            "system",
            turn.system_acts.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        )?;
        t.set_item("reward", *reward)?;
        turns.append(t)?;
    }
    let d = PyDict::new_bound(py);
    d.set_item("mode", if expert { "expert" } else { "policy" })?;
    d.set_item("success", metrics.success)?;
    d.set_item("exchanges", session.exchanges())?;
    d.set_item("total_return", rewards.iter().sum::<f64>())?;
    d.set_item("turns", turns)?;
    Ok(d)
}

#[pymodule]
fn gdpl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Bundle>()?;
    m.add_class::<Corpus>()?;
    m.add_class::<Checkpoint>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    Ok(())
}
