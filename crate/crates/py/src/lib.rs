//! Python bindings: the assignment solver, the link utility chain, network
//! realization with every association scheme, the incremental GDA engine,
//! and the Monte Carlo driver.

use densewlan::association::{self, AssociationSet, GdaEngine, Scheme};
use densewlan::mac::{self, FairnessParams, MacParams};
use densewlan::matching::{self, WeightMatrix};
use densewlan::scenario::{CapacityRule, Network as CoreNetwork, ScenarioParams};
use densewlan::simcore::{self, SimParams};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: densewlan::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<WeightMatrix> {
    WeightMatrix::from_rows(rows).map_err(err)
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(err)
}

fn rule(name: &str) -> PyResult<CapacityRule> {
    match name {
        "degree" => Ok(CapacityRule::Degree),
        "balanced" => Ok(CapacityRule::Balanced),
        other => Err(PyValueError::new_err(format!("unknown capacity rule `{other}`"))),
    }
}

/// Maximum-weight assignment: returns (column per row, objective).
#[pyfunction]
fn solve(weights: Vec<Vec<f64>>) -> PyResult<(Vec<Option<usize>>, f64)> {
    let m = matching::solve(&matrix(&weights)?).map_err(err)?;
    Ok((m.assignment(), m.objective()))
}

/// Cover-based Kuhn-Munkres: returns (column per row, objective).
#[pyfunction]
fn kma(weights: Vec<Vec<f64>>) -> PyResult<(Vec<Option<usize>>, f64)> {
    let out = matching::kma_routine(&matrix(&weights)?).map_err(err)?;
    Ok((out.assignment, out.objective))
}

/// Replicates each AP column `capacity` times and pads to square.
#[pyfunction]
fn pad_and_replicate(weights: Vec<Vec<f64>>, capacity: usize) -> PyResult<Vec<Vec<f64>>> {
    let p = matching::pad_and_replicate(&matrix(&weights)?, capacity).map_err(err)?;
    Ok((0..p.rows()).map(|r| p.row(r).to_vec()).collect())
}

/// SINR → rate → airtime → β → utility with the default MAC timing.
#[pyfunction]
#[pyo3(signature = (sinr, bandwidth_hz = 20e6, delta = 0.5))]
fn link_figures<'py>(py: Python<'py>, sinr: f64, bandwidth_hz: f64, delta: f64) -> PyResult<Bound<'py, PyDict>> {
    let f = mac::link_figures(sinr, bandwidth_hz, &MacParams::default(), &FairnessParams { delta });
    let d = PyDict::new(py);
    d.set_item("sinr", f.sinr)?;
    d.set_item("rate_bps", f.rate_bps)?;
    d.set_item("airtime_s", f.airtime_s)?;
    d.set_item("beta", f.beta)?;
    d.set_item("utility", f.utility)?;
    Ok(d)
}

fn association_dict<'py>(py: Python<'py>, a: &AssociationSet) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", a.scheme.name())?;
    d.set_item("ap", a.ap.clone())?;
    d.set_item("utility", a.utility.clone())?;
    d.set_item("sinr", a.sinr.clone())?;
    d.set_item("rate_bps", a.rate_bps.clone())?;
    d.set_item("upper_bound", a.upper_bound.clone())?;
    d.set_item("uncovered", a.uncovered.clone())?;
    d.set_item("objective", a.objective)?;
    Ok(d)
}

fn params(eta_n: f64, eta_m: f64) -> ScenarioParams {
    let mut p = ScenarioParams::default();
    p.intensities.eta_n = eta_n;
    p.intensities.eta_m = eta_m;
    p
}

/// One PPP network realization with its link tables.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    net: CoreNetwork,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (seed, eta_n = 0.5, eta_m = 0.2))]
    fn new(seed: u64, eta_n: f64, eta_m: f64) -> PyResult<Self> {
        Ok(Self {
            net: CoreNetwork::realize(&params(eta_n, eta_m), seed).map_err(err)?,
        })
    }

    #[getter]
    fn n_sta(&self) -> usize {
        self.net.n_sta()
    }

    #[getter]
    fn n_ap(&self) -> usize {
        self.net.n_ap()
    }

    fn sta_positions(&self) -> Vec<(f64, f64)> {
        self.net.geometry().sta_positions.iter().map(|p| (p.x, p.y)).collect()
    }

    fn ap_positions(&self) -> Vec<(f64, f64)> {
        self.net.geometry().ap_positions.iter().map(|p| (p.x, p.y)).collect()
    }

    /// Association edge weights (N × M) from the default snapshot.
    fn weights(&self) -> PyResult<Vec<Vec<f64>>> {
        let snap = association::build_snapshot(&self.net).map_err(err)?;
        Ok((0..snap.n_sta()).map(|i| snap.weight_row(i)).collect())
    }

    #[pyo3(signature = (scheme, capacity_rule = "degree"))]
    fn associate<'py>(&self, py: Python<'py>, scheme: &str, capacity_rule: &str) -> PyResult<Bound<'py, PyDict>> {
        let snap = association::build_snapshot(&self.net).map_err(err)?;
        let order = association::arrival_order(self.net.n_sta(), None);
        let a = association::associate(self::scheme(scheme)?, &snap, rule(capacity_rule)?, &order).map_err(err)?;
        association_dict(py, &a)
    }

    /// Simulates one scheme; returns (aggregate Mbps, per-STA Mbps).
    #[pyo3(signature = (scheme, n_slots = 1000, seed = 0))]
    fn simulate(&self, scheme: &str, n_slots: u64, seed: u64) -> PyResult<(f64, Vec<f64>)> {
        let snap = association::build_snapshot(&self.net).map_err(err)?;
        let order = association::arrival_order(self.net.n_sta(), None);
        let a = association::associate(self::scheme(scheme)?, &snap, self.net.params().capacity_rule, &order)
            .map_err(err)?;
        let sim = SimParams {
            n_slots,
            ..SimParams::default()
        };
        let m = simcore::simulate(&self.net, &a, &sim, seed).map_err(err)?;
        Ok((m.aggregate_mbps(), (0..m.n_sta).map(|i| m.sta_mbps(i)).collect()))
    }
}

/// Incremental association engine.
#[pyclass(name = "GdaEngine")]
struct PyGdaEngine {
    engine: GdaEngine,
}

#[pymethods]
impl PyGdaEngine {
    #[new]
    #[pyo3(signature = (n_ap, capacity_rule = "degree"))]
    fn new(n_ap: usize, capacity_rule: &str) -> PyResult<Self> {
        Ok(Self {
            engine: GdaEngine::new(n_ap, rule(capacity_rule)?),
        })
    }

    fn admit(&mut self, sta: usize, weights: Vec<f64>) -> PyResult<()> {
        self.engine.admit(sta, weights).map_err(err)
    }

    fn update_sta(&mut self, sta: usize, weights: Vec<f64>) -> PyResult<()> {
        self.engine.update_sta(sta, weights).map_err(err)
    }

    fn update_ap(&mut self, ap: usize, weights: Vec<f64>) -> PyResult<()> {
        self.engine.update_ap(ap, &weights).map_err(err)
    }

    fn assignment(&self, n_sta: usize) -> Vec<Option<usize>> {
        self.engine.assignment(n_sta)
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.engine.objective()
    }

    #[getter]
    fn slots(&self) -> Vec<usize> {
        self.engine.slots().to_vec()
    }
}

/// Monte Carlo over `realizations` networks; one summary dict per scheme.
#[pyfunction]
#[pyo3(signature = (schemes, eta_n = 0.5, eta_m = 0.2, realizations = 10, n_slots = 1000, seed = 1))]
fn run_monte_carlo<'py>(
    py: Python<'py>,
    schemes: Vec<String>,
    eta_n: f64,
    eta_m: f64,
    realizations: usize,
    n_slots: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let schemes: Vec<Scheme> = schemes.iter().map(|s| scheme(s)).collect::<PyResult<_>>()?;
    let sim = SimParams {
        n_slots,
        ..SimParams::default()
    };
    let p = params(eta_n, eta_m);
    let mc = py
        .detach(|| simcore::run_monte_carlo(&p, &schemes, &sim, realizations, seed))
        .map_err(err)?;
    mc.summaries
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("scheme", s.scheme.name())?;
            d.set_item("n_sta", s.mean_n_sta)?;
            d.set_item("n_ap", s.mean_n_ap)?;
            d.set_item("agg_mbps", s.agg_mbps.mean)?;
            d.set_item("ci_lo", s.agg_mbps.ci_lo)?;
            d.set_item("ci_hi", s.agg_mbps.ci_hi)?;
            d.set_item("util_sum", s.util_sum.mean)?;
            d.set_item("p10", s.p10.mean)?;
            d.set_item("p50", s.p50.mean)?;
            d.set_item("p90", s.p90.mean)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn densewlan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(kma, m)?)?;
    m.add_function(wrap_pyfunction!(pad_and_replicate, m)?)?;
    m.add_function(wrap_pyfunction!(link_figures, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyGdaEngine>()?;
    m.add("UNSERVABLE", mac::UNSERVABLE)?;
    m.add("SCHEMES", Scheme::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}
