//! Python bindings for the propagation engine: circuits, observables,
//! noise models, propagation runs, the dense cross-checks, and the
//! coefficient-distribution statistics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pauliprop::circuits::{
    random_clifford, random_clifford_t, random_matchgate_circuit, Circuit,
};
use pauliprop::dense::{build_full_omega, check_orthogonality};
use pauliprop::network::{omega_graph, GRAPH_THRESHOLD};
use pauliprop::pauli::PauliString as RsPauliString;
use pauliprop::propagation::{
    self, NoiseModel as RsNoiseModel, OperatorSum as RsOperatorSum, PropagationOptions,
    PropagationTrace as RsPropagationTrace, TruncationMode,
};
use pauliprop::stats;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<TruncationMode> {
    match mode {
        "pruned" => Ok(TruncationMode::Pruned),
        "global" => Ok(TruncationMode::Global),
        other => Err(PyValueError::new_err(format!(
            "unknown truncation mode {other:?}, expected \"pruned\" or \"global\""
        ))),
    }
}

/// A tensor product of single-qubit Pauli factors, written as text with
/// qubit 1 first (for example "XIZ").
#[pyclass(name = "PauliString", frozen)]
struct PyPauliString {
    inner: RsPauliString,
}

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyPauliString { inner: text.parse().map_err(value_err)? })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// Number of X/Y factors (the dephasing-sensitive weight).
    #[getter]
    fn weight(&self) -> u32 {
        self.inner.weight()
    }

    /// Number of non-identity factors.
    #[getter]
    fn support_size(&self) -> u32 {
        self.inner.support_size()
    }

    /// Rank of the string in the base-4 operator basis ordering.
    #[getter]
    fn index(&self) -> u64 {
        self.inner.index()
    }

    fn commutes_with(&self, other: &PyPauliString) -> PyResult<bool> {
        self.inner.commutes_with(&other.inner).map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString(\"{}\")", self.inner)
    }

    fn __eq__(&self, other: &PyPauliString) -> bool {
        self.inner == other.inner
    }
}

/// A real linear combination of Pauli strings.
#[pyclass(name = "OperatorSum", frozen)]
struct PyOperatorSum {
    inner: RsOperatorSum,
}

#[pymethods]
impl PyOperatorSum {
    /// Builds the sum from `(pauli_text, coefficient)` pairs; equal strings
    /// merge by summation.
    #[new]
    fn new(terms: Vec<(String, f64)>) -> PyResult<Self> {
        let first = terms.first().ok_or_else(|| {
            PyValueError::new_err("an operator sum needs at least one term")
        })?;
        let n = first.0.chars().count();
        let mut inner = RsOperatorSum::new(n).map_err(value_err)?;
        for (text, coeff) in &terms {
            let p: RsPauliString = text.parse().map_err(value_err)?;
            if p.n_qubits() != n {
                return Err(PyValueError::new_err(format!(
                    "term {text:?} has {} qubits, expected {n}",
                    p.n_qubits()
                )));
            }
            inner.add_term(p, *coeff).map_err(value_err)?;
        }
        Ok(PyOperatorSum { inner })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// The terms as `(pauli_text, coefficient)` pairs in basis order.
    fn terms(&self) -> Vec<(String, f64)> {
        self.inner.terms().map(|(p, l)| (p.to_string(), l)).collect()
    }

    fn coefficient(&self, text: &str) -> PyResult<f64> {
        let p: RsPauliString = text.parse().map_err(value_err)?;
        Ok(self.inner.coefficient(&p))
    }

    /// Sum of squared coefficients.
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// `<0...0| . |0...0>`: the sum of coefficients of diagonal strings.
    fn expectation_zero_state(&self) -> f64 {
        propagation::expectation_zero_state(&self.inner)
    }

    /// Number of terms with `|coefficient| >= eps`.
    fn count_significant(&self, eps: f64) -> usize {
        propagation::count_significant(&self.inner, eps)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("OperatorSum({} terms on {} qubits)", self.inner.len(), self.inner.n_qubits())
    }
}

/// Per-layer Lindblad-Z dephasing with rate `gamma` acting for time `t`.
#[pyclass(name = "NoiseModel", frozen)]
struct PyNoiseModel {
    inner: RsNoiseModel,
}

#[pymethods]
impl PyNoiseModel {
    #[new]
    #[pyo3(signature = (gamma=0.0, t=1.0))]
    fn new(gamma: f64, t: f64) -> PyResult<Self> {
        Ok(PyNoiseModel { inner: RsNoiseModel::new(gamma, t).map_err(value_err)? })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    /// Damping factor of a string with `weight` X/Y factors.
    fn damping(&self, weight: u32) -> f64 {
        self.inner.damping(weight)
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel(gamma={}, t={})", self.inner.gamma(), self.inner.t())
    }
}

/// A layered gate sequence on 1-based qubits.
#[pyclass(name = "Circuit", frozen)]
struct PyCircuit {
    inner: Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Seeded random circuit of H/S and CZ rounds; `layers` counts logical
    /// layers, each stored as three sub-layers.
    #[staticmethod]
    fn clifford(n_qubits: usize, layers: usize, seed: u64) -> PyResult<Self> {
        Ok(PyCircuit { inner: random_clifford(n_qubits, layers, seed).map_err(value_err)? })
    }

    /// Seeded random circuit of I/H/T singles and CZ rounds.
    #[staticmethod]
    fn clifford_t(n_qubits: usize, layers: usize, seed: u64) -> PyResult<Self> {
        Ok(PyCircuit { inner: random_clifford_t(n_qubits, layers, seed).map_err(value_err)? })
    }

    /// Seeded random nearest-neighbour matchgate sweeps; each logical layer
    /// stores `n_qubits - 1` sub-layers.
    #[staticmethod]
    fn matchgate(n_qubits: usize, layers: usize, seed: u64) -> PyResult<Self> {
        Ok(PyCircuit {
            inner: random_matchgate_circuit(n_qubits, layers, seed).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCircuit { inner: Circuit::from_json_str(text).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(value_err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// Stored layer count (sub-layers, not logical layers).
    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn gate_count(&self) -> usize {
        self.inner.gate_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit({} qubits, {} stored layers, {} gates)",
            self.inner.n_qubits(),
            self.inner.depth(),
            self.inner.gate_count()
        )
    }
}

/// Per-layer records of one propagation run.
#[pyclass(name = "PropagationTrace", frozen)]
struct PyPropagationTrace {
    inner: RsPropagationTrace,
}

#[pymethods]
impl PyPropagationTrace {
    /// Rows `(layer, retained, n_eps, norm, expectation)` in application
    /// order (last stored layer first).
    fn records(&self) -> Vec<(usize, usize, usize, f64, f64)> {
        self.inner
            .records
            .iter()
            .map(|r| (r.layer, r.retained, r.n_eps, r.norm, r.expectation))
            .collect()
    }

    #[getter]
    fn expectation(&self) -> f64 {
        self.inner.expectation
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }

    #[getter]
    fn count_eps(&self) -> f64 {
        self.inner.count_eps
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PropagationTrace({} layers, expectation={})",
            self.inner.records.len(),
            self.inner.expectation
        )
    }
}

/// Growth/decay fit of a significant-count trace.
#[pyclass(name = "GrowthDecayFit", frozen)]
struct PyGrowthDecayFit {
    inner: stats::GrowthDecayFit,
}

#[pymethods]
impl PyGrowthDecayFit {
    /// Per-layer branching factor.
    #[getter]
    fn d_bar(&self) -> f64 {
        self.inner.d_bar
    }

    /// Per-layer exponential decay rate (0 for noiseless traces).
    #[getter]
    fn decay_rate(&self) -> f64 {
        self.inner.decay_rate
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale
    }

    /// RMS of the log-domain residuals.
    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    /// The fitted count at (fractional) processed-layer count `layer`.
    fn eval(&self, layer: f64, d: usize) -> f64 {
        self.inner.eval(layer, d)
    }

    fn __repr__(&self) -> String {
        format!(
            "GrowthDecayFit(d_bar={}, decay_rate={}, residual={})",
            self.inner.d_bar, self.inner.decay_rate, self.inner.residual
        )
    }
}

/// Propagates `observable` backwards through `circuit` with per-layer
/// dephasing and amplitude truncation, returning the propagated sum and
/// the per-layer trace.
#[pyfunction]
#[pyo3(signature = (circuit, observable, eps=0.0, noise=None, mode="pruned", count_eps=None))]
fn propagate(
    circuit: &PyCircuit,
    observable: &PyOperatorSum,
    eps: f64,
    noise: Option<&PyNoiseModel>,
    mode: &str,
    count_eps: Option<f64>,
) -> PyResult<(PyOperatorSum, PyPropagationTrace)> {
    let noise = noise.map(|n| n.inner).unwrap_or_else(RsNoiseModel::noiseless);
    let options =
        PropagationOptions { eps, count_eps, mode: parse_mode(mode)? };
    let (out, trace) =
        propagation::propagate_with(&circuit.inner, &observable.inner, &noise, options)
            .map_err(value_err)?;
    Ok((PyOperatorSum { inner: out }, PyPropagationTrace { inner: trace }))
}

/// Dense forward evolution of `|0...0>` through the circuit with dephasing
/// after every layer; the reference for `propagate`.
#[pyfunction]
#[pyo3(signature = (circuit, observable, noise=None))]
fn schrodinger_expectation(
    circuit: &PyCircuit,
    observable: &PyOperatorSum,
    noise: Option<&PyNoiseModel>,
) -> PyResult<f64> {
    let noise = noise.map(|n| n.inner).unwrap_or_else(RsNoiseModel::noiseless);
    pauliprop::dense::schrodinger_expectation(&circuit.inner, &observable.inner, &noise)
        .map_err(value_err)
}

/// Largest deviation of the circuit's full transfer matrix from
/// orthogonality; noiseless circuits stay below 1e-9.
#[pyfunction]
#[pyo3(signature = (circuit, noise=None))]
fn transfer_orthogonality(circuit: &PyCircuit, noise: Option<&PyNoiseModel>) -> PyResult<f64> {
    let noise = noise.map(|n| n.inner).unwrap_or_else(RsNoiseModel::noiseless);
    let omega = build_full_omega(&circuit.inner, &noise).map_err(value_err)?;
    Ok(check_orthogonality(&omega))
}

/// Mean out-degree, max out-degree, and weak-component sizes of the
/// circuit's operator-spread graph.
#[pyfunction]
#[pyo3(signature = (circuit, noise=None, threshold=GRAPH_THRESHOLD))]
fn graph_summary(
    circuit: &PyCircuit,
    noise: Option<&PyNoiseModel>,
    threshold: f64,
) -> PyResult<(f64, usize, Vec<usize>)> {
    let noise = noise.map(|n| n.inner).unwrap_or_else(RsNoiseModel::noiseless);
    let omega = build_full_omega(&circuit.inner, &noise).map_err(value_err)?;
    let graph = omega_graph(&omega, threshold);
    let summary = graph.summary();
    Ok((summary.d_mean, summary.d_max, summary.components))
}

/// Coefficients of `s` ordered ascending over the full operator basis,
/// implicit zeros included: squared by default, raw signed with `signed`.
#[pyfunction]
#[pyo3(signature = (s, signed=false))]
fn ordered_spectrum(s: &PyOperatorSum, signed: bool) -> PyResult<Vec<f64>> {
    Ok(stats::ordered_spectrum(&s.inner, signed).map_err(value_err)?.values().to_vec())
}

/// Fraction of negative coefficients among the nonzero ones, or None for
/// an all-zero sum.
#[pyfunction]
fn negative_fraction(s: &PyOperatorSum) -> PyResult<Option<f64>> {
    Ok(stats::ordered_spectrum(&s.inner, true).map_err(value_err)?.negative_fraction())
}

/// One-variable Porter-Thomas prediction for the `n`-th smallest squared
/// coefficient out of `d`, given their sum `lam`.
#[pyfunction]
fn pt1_curve(n: usize, d: usize, lam: f64) -> f64 {
    stats::pt1_curve(n, d, lam)
}

/// Two-variable comparison curve for the same ordered ranks.
#[pyfunction]
fn pt2_curve(n: usize, d: usize, lam: f64) -> f64 {
    stats::pt2_curve(n, d, lam)
}

/// Least-squares fit of the growth/decay law to a trace's significant
/// counts; `d` is the operator-space dimension.
#[pyfunction]
fn fit_neps(trace: &PyPropagationTrace, d: usize) -> PyResult<PyGrowthDecayFit> {
    Ok(PyGrowthDecayFit { inner: stats::fit_neps(&trace.inner, d).map_err(value_err)? })
}

#[pymodule]
fn pauliprop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyOperatorSum>()?;
    m.add_class::<PyNoiseModel>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyPropagationTrace>()?;
    m.add_class::<PyGrowthDecayFit>()?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(schrodinger_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_orthogonality, m)?)?;
    m.add_function(wrap_pyfunction!(graph_summary, m)?)?;
    m.add_function(wrap_pyfunction!(ordered_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(negative_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(pt1_curve, m)?)?;
    m.add_function(wrap_pyfunction!(pt2_curve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_neps, m)?)?;
    m.add("GRAPH_THRESHOLD", GRAPH_THRESHOLD)?;
    Ok(())
}
