//! Reverse-order Heisenberg propagation of an operator through a circuit.
//!
//! The observable is a real combination of Pauli strings. Layers are
//! processed from the last to the first; each one first damps every
//! coefficient by `e^(-2*gamma*q*t)` (`q` the number of X/Y factors), then
//! conjugates each term through the layer's gates in reverse stored order.
//! A spawned contribution survives only while its running magnitude stays
//! strictly above the threshold `eps`; since every local transfer factor has
//! magnitude at most one, testing after each gate is equivalent to testing
//! the whole layer's factor at once. Survivors landing on the same string
//! are merged by summation at the end of the layer and kept regardless of
//! the merged size until the next layer's test; only exact zeros are
//! dropped. With `eps = 0` and `gamma = 0` the evolution is exact.
//!
//! Propagation is deliberately single-threaded: the merge order, and with it
//! every floating-point sum, is fixed by the term ordering, so a run is
//! reproducible bit for bit.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuits::Circuit;
use crate::gates::CompiledGate;
use crate::pauli::{PauliError, PauliString};

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("circuit acts on {circuit} qubits but the observable has {observable}")]
    QubitMismatch { circuit: usize, observable: usize },
    #[error("dephasing model needs gamma >= 0 and t > 0, got gamma = {gamma}, t = {t}")]
    BadNoise { gamma: f64, t: f64 },
    #[error("truncation threshold must be >= 0, got {0}")]
    NegativeEps(f64),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Real linear combination of Pauli strings on a fixed register. No stored
/// coefficient is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl OperatorSum {
    pub fn new(n_qubits: usize) -> Result<OperatorSum, PropagationError> {
        // delegate the register bounds check
        let _ = PauliString::identity(n_qubits)?;
        Ok(OperatorSum { n_qubits, terms: BTreeMap::new() })
    }

    /// The sum holding a single weighted string.
    pub fn single(p: PauliString, lambda: f64) -> OperatorSum {
        let mut s = OperatorSum { n_qubits: p.n_qubits(), terms: BTreeMap::new() };
        s.add_term(p, lambda).expect("string matches its own register");
        s
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, f64)>,
    ) -> Result<OperatorSum, PropagationError> {
        let mut s = OperatorSum::new(n_qubits)?;
        for (p, lambda) in terms {
            s.add_term(p, lambda)?;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `lambda * p` into the sum, merging with an existing term and
    /// removing it if the merged coefficient is exactly zero.
    pub fn add_term(&mut self, p: PauliString, lambda: f64) -> Result<(), PropagationError> {
        if p.n_qubits() != self.n_qubits {
            return Err(PropagationError::QubitMismatch {
                circuit: self.n_qubits,
                observable: p.n_qubits(),
            });
        }
        let entry = self.terms.entry(p).or_insert(0.0);
        *entry += lambda;
        if *entry == 0.0 {
            self.terms.remove(&p);
        }
        Ok(())
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Terms in the fixed string order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, &l)| (p, l))
    }

    /// The normalization `Lambda = sum of lambda^2`, conserved by noiseless
    /// exact propagation.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|l| l * l).sum()
    }

    fn from_map(n_qubits: usize, terms: BTreeMap<PauliString, f64>) -> OperatorSum {
        OperatorSum { n_qubits, terms }
    }
}

/// The normalization `Lambda = sum of lambda^2` of the sum.
pub fn norm(s: &OperatorSum) -> f64 {
    s.norm()
}

/// `<0...0| A |0...0>`: the sum of coefficients of the diagonal (I/Z-only)
/// strings, every other string having zero diagonal.
pub fn expectation_zero_state(s: &OperatorSum) -> f64 {
    s.terms.iter().filter(|(p, _)| p.is_diagonal()).map(|(_, &l)| l).sum()
}

/// Number of terms with `|lambda| >= eps`; the boundary counts, matching a
/// step function with `theta(0) = 1`.
pub fn count_significant(s: &OperatorSum, eps: f64) -> usize {
    s.terms.values().filter(|l| l.abs() >= eps).count()
}

/// Removes every term with `|lambda| < eps`. Applied to the output of an
/// `eps = 0` run this realizes truncation of the exactly evolved operator,
/// the comparison point for per-layer pruning.
pub fn global_truncate(s: &OperatorSum, eps: f64) -> OperatorSum {
    OperatorSum {
        n_qubits: s.n_qubits,
        terms: s.terms.iter().filter(|(_, l)| l.abs() >= eps).map(|(&p, &l)| (p, l)).collect(),
    }
}

/// Lindblad-Z dephasing acting for time `t` per layer with rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    gamma: f64,
    t: f64,
}

impl NoiseModel {
    pub fn new(gamma: f64, t: f64) -> Result<NoiseModel, PropagationError> {
        if !(gamma >= 0.0) || !(t > 0.0) {
            return Err(PropagationError::BadNoise { gamma, t });
        }
        Ok(NoiseModel { gamma, t })
    }

    pub fn noiseless() -> NoiseModel {
        NoiseModel { gamma: 0.0, t: 1.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Damping factor `e^(-2*gamma*q*t)` of a string with `q` X/Y factors.
    pub fn damping(&self, weight: u32) -> f64 {
        (-2.0 * self.gamma * weight as f64 * self.t).exp()
    }
}

/// Scales every coefficient by the damping factor of its weight. Diagonal
/// strings carry weight zero and pass unchanged.
pub fn apply_dephasing(s: &mut OperatorSum, noise: &NoiseModel) {
    if noise.gamma == 0.0 {
        return;
    }
    for (p, l) in s.terms.iter_mut() {
        *l *= noise.damping(p.weight());
    }
    // guard the no-zero invariant against underflow
    s.terms.retain(|_, l| *l != 0.0);
}

/// State of the propagated operator after one layer, recorded in
/// application (reverse) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRecord {
    /// 1-based stored-layer index, running from the last layer down to 1.
    pub layer: usize,
    /// Terms in the merged map after the layer.
    pub retained: usize,
    /// Terms with `|lambda| >= count_eps` after the layer.
    pub n_eps: usize,
    /// Normalization `Lambda` after the layer.
    pub norm: f64,
    /// `<0...0| . |0...0>` of the partially propagated operator.
    pub expectation: f64,
}

/// Per-layer records plus the run's final expectation and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationTrace {
    pub records: Vec<LayerRecord>,
    pub expectation: f64,
    pub eps: f64,
    /// Threshold used for the `n_eps` column (defaults to `eps`).
    pub count_eps: f64,
    pub gamma: f64,
    pub t: f64,
}

impl PropagationTrace {
    /// Rows `layer,retained,n_eps,lambda_norm` from the last layer down to
    /// 1, then a final `expectation,<value>` line.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("layer,retained,n_eps,lambda_norm\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{:.16e}\n", r.layer, r.retained, r.n_eps, r.norm));
        }
        out.push_str(&format!("expectation,{:.16e}\n", self.expectation));
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<(), PropagationError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// How the threshold is applied while a layer is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationMode {
    /// Drop a contribution as soon as its running coefficient reaches the
    /// threshold mid-expansion, before merging.
    #[default]
    Pruned,
    /// Expand every layer exactly, then drop merged coefficients below the
    /// threshold in one sweep per layer; costlier, but cancellations get a
    /// chance to complete before anything is discarded.
    Global,
}

/// Knobs of [`propagate_with`]: the truncation threshold and mode, plus an
/// optional separate threshold for the reported `n_eps` counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationOptions {
    pub eps: f64,
    pub count_eps: Option<f64>,
    pub mode: TruncationMode,
}

pub(crate) fn expand_term(
    gates: &[CompiledGate],
    p: PauliString,
    coeff: f64,
    eps: f64,
    out: &mut BTreeMap<PauliString, f64>,
) {
    let Some((gate, rest)) = gates.split_first() else {
        *out.entry(p).or_insert(0.0) += coeff;
        return;
    };
    for &(j, w) in gate.column_of(&p) {
        let c = coeff * w;
        if c.abs() > eps {
            expand_term(rest, gate.splice(&p, j), c, eps, out);
        }
    }
}

/// Propagates `observable` backwards through `circuit` with per-layer
/// dephasing `noise` and amplitude truncation.
pub fn propagate(
    circuit: &Circuit,
    observable: &OperatorSum,
    eps: f64,
    noise: &NoiseModel,
) -> Result<(OperatorSum, PropagationTrace), PropagationError> {
    let options = PropagationOptions { eps, ..PropagationOptions::default() };
    propagate_with(circuit, observable, noise, options)
}

/// [`propagate`] with a separate threshold for the `n_eps` trace column,
/// letting an exact run report the significant-term counts of a chosen
/// truncation level.
pub fn propagate_with(
    circuit: &Circuit,
    observable: &OperatorSum,
    noise: &NoiseModel,
    options: PropagationOptions,
) -> Result<(OperatorSum, PropagationTrace), PropagationError> {
    if circuit.n_qubits() != observable.n_qubits() {
        return Err(PropagationError::QubitMismatch {
            circuit: circuit.n_qubits(),
            observable: observable.n_qubits(),
        });
    }
    if !(options.eps >= 0.0) {
        return Err(PropagationError::NegativeEps(options.eps));
    }
    let eps = options.eps;
    let count_eps = options.count_eps.unwrap_or(eps);
    let gate_eps = match options.mode {
        TruncationMode::Pruned => eps,
        TruncationMode::Global => 0.0,
    };

    // gates of one layer apply in reverse stored order
    let compiled: Vec<Vec<CompiledGate>> = circuit
        .layers()
        .iter()
        .map(|layer| layer.gates().iter().rev().map(CompiledGate::new).collect())
        .collect();

    let mut current = observable.clone();
    let mut records = Vec::with_capacity(circuit.depth());
    for (l, gates) in compiled.iter().enumerate().rev() {
        apply_dephasing(&mut current, noise);
        let mut next = BTreeMap::new();
        for (&p, &lambda) in &current.terms {
            if gates.is_empty() {
                // the layer's transfer is the identity; the contribution
                // lambda * 1 still faces the threshold test
                if lambda.abs() > gate_eps {
                    *next.entry(p).or_insert(0.0) += lambda;
                }
            } else {
                expand_term(gates, p, lambda, gate_eps, &mut next);
            }
        }
        next.retain(|_, v| *v != 0.0);
        current = OperatorSum::from_map(observable.n_qubits(), next);
        if options.mode == TruncationMode::Global {
            current = global_truncate(&current, eps);
        }
        records.push(LayerRecord {
            layer: l + 1,
            retained: current.len(),
            n_eps: count_significant(&current, count_eps),
            norm: current.norm(),
            expectation: expectation_zero_state(&current),
        });
    }

    let trace = PropagationTrace {
        records,
        expectation: expectation_zero_state(&current),
        eps,
        count_eps,
        gamma: noise.gamma,
        t: noise.t,
    };
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{random_clifford, random_clifford_t, Circuit, Family, Layer};
    use crate::gates::{Gate, NamedGate};

    const TOL: f64 = 1e-10;

    fn pauli(text: &str) -> PauliString {
        text.parse().unwrap()
    }

    fn z_last(n: usize) -> OperatorSum {
        let mut p = PauliString::identity(n).unwrap();
        p.set_axis(n, crate::pauli::Axis::Z).unwrap();
        OperatorSum::single(p, 1.0)
    }

    #[test]
    fn dephasing_damps_by_weight() {
        let noise = NoiseModel::new(0.005, 1.0).unwrap();
        let mut s = OperatorSum::single(pauli("X"), 1.0);
        apply_dephasing(&mut s, &noise);
        assert!((s.coefficient(&pauli("X")) - (-0.01f64).exp()).abs() < 1e-15);

        let mut zz = OperatorSum::single(pauli("ZZ"), 0.4);
        apply_dephasing(&mut zz, &NoiseModel::new(3.0, 2.0).unwrap());
        assert_eq!(zz.coefficient(&pauli("ZZ")), 0.4);

        let mut untouched = OperatorSum::single(pauli("XYZ"), 0.7);
        apply_dephasing(&mut untouched, &NoiseModel::noiseless());
        assert_eq!(untouched.coefficient(&pauli("XYZ")), 0.7);
    }

    #[test]
    fn noise_model_rejects_bad_parameters() {
        assert!(NoiseModel::new(-0.1, 1.0).is_err());
        assert!(NoiseModel::new(0.1, 0.0).is_err());
        assert!(NoiseModel::new(f64::NAN, 1.0).is_err());
        let m = NoiseModel::new(0.25, 2.0).unwrap();
        assert!((m.damping(3) - (-3.0f64).exp()).abs() < 1e-15);
        assert_eq!(m.damping(0), 1.0);
    }

    #[test]
    fn zero_state_expectation_sums_diagonal_terms() {
        assert_eq!(expectation_zero_state(&z_last(4)), 1.0);
        assert_eq!(expectation_zero_state(&OperatorSum::single(pauli("X"), 0.7)), 0.0);
        let mixed = OperatorSum::from_terms(
            2,
            [(pauli("ZI"), 0.3), (pauli("IX"), 0.5), (pauli("ZZ"), -0.1)],
        )
        .unwrap();
        assert!((expectation_zero_state(&mixed) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn significant_counts_use_an_inclusive_boundary() {
        let empty = OperatorSum::new(2).unwrap();
        assert_eq!(count_significant(&empty, 0.0), 0);
        let s = OperatorSum::from_terms(1, [(pauli("Z"), 0.5), (pauli("X"), 0.001)]).unwrap();
        assert_eq!(count_significant(&s, 0.01), 1);
        assert_eq!(count_significant(&s, 0.0), 2);
        let boundary = OperatorSum::single(pauli("Z"), 0.01);
        assert_eq!(count_significant(&boundary, 0.01), 1);
    }

    #[test]
    fn global_truncation_keeps_the_boundary() {
        let s = OperatorSum::from_terms(
            1,
            [(pauli("Z"), 0.5), (pauli("X"), 0.01), (pauli("Y"), 0.0099)],
        )
        .unwrap();
        let cut = global_truncate(&s, 0.01);
        assert_eq!(cut.len(), 2);
        assert_eq!(cut.coefficient(&pauli("Y")), 0.0);
        let same = global_truncate(&s, 0.0);
        assert_eq!(same, s);
        let none = global_truncate(&s, 1.0);
        assert!(none.is_empty());
    }

    #[test]
    fn adding_terms_merges_and_drops_exact_zeros() {
        let mut s = OperatorSum::new(1).unwrap();
        s.add_term(pauli("Z"), 0.5).unwrap();
        s.add_term(pauli("Z"), 0.25).unwrap();
        assert_eq!(s.coefficient(&pauli("Z")), 0.75);
        s.add_term(pauli("Z"), -0.75).unwrap();
        assert!(s.is_empty());
        assert!(s.add_term(pauli("ZZ"), 1.0).is_err());
    }

    #[test]
    fn empty_circuit_returns_the_observable_unchanged() {
        let circuit = Circuit::new(3).unwrap();
        let obs = z_last(3);
        let noise = NoiseModel::new(0.3, 1.0).unwrap();
        let (out, trace) = propagate(&circuit, &obs, 0.0, &noise).unwrap();
        // zero layers means zero damping
        assert_eq!(out, obs);
        assert!(trace.records.is_empty());
        assert_eq!(trace.expectation, 1.0);
    }

    #[test]
    fn identity_gates_leave_any_observable_alone() {
        let mut circuit = Circuit::new(2).unwrap();
        for _ in 0..3 {
            let gates =
                vec![Gate::named(NamedGate::I, vec![1]).unwrap(), Gate::named(NamedGate::I, vec![2]).unwrap()];
            circuit.push_layer(Layer::new(gates)).unwrap();
        }
        let obs =
            OperatorSum::from_terms(2, [(pauli("XY"), 0.3), (pauli("ZI"), -0.2)]).unwrap();
        let (out, trace) = propagate(&circuit, &obs, 0.0, &NoiseModel::noiseless()).unwrap();
        assert_eq!(out, obs);
        assert_eq!(trace.records.len(), 3);
        assert!(trace.records.iter().all(|r| r.retained == 2));
    }

    #[test]
    fn layers_are_recorded_in_reverse_application_order() {
        let circuit = random_clifford_t(3, 4, 1).unwrap();
        let (_, trace) =
            propagate(&circuit, &z_last(3), 0.0, &NoiseModel::noiseless()).unwrap();
        let labels: Vec<usize> = trace.records.iter().map(|r| r.layer).collect();
        let expected: Vec<usize> = (1..=circuit.depth()).rev().collect();
        assert_eq!(labels, expected);
    }

    #[test]
    fn cancelling_contributions_shrink_to_rounding() {
        // conjugation by T sends X -> (X+Y)/sqrt(2) and Y -> (Y-X)/sqrt(2),
        // so X+Y propagates to sqrt(2) Y; the X part cancels up to one ulp
        // between the two trace evaluations
        let mut circuit = Circuit::new(1).unwrap();
        circuit.push_layer(Layer::new(vec![Gate::t(1).unwrap()])).unwrap();
        let obs = OperatorSum::from_terms(1, [(pauli("X"), 1.0), (pauli("Y"), 1.0)]).unwrap();
        let (out, _) = propagate(&circuit, &obs, 0.0, &NoiseModel::noiseless()).unwrap();
        assert!(out.coefficient(&pauli("X")).abs() < 1e-15);
        assert!((out.coefficient(&pauli("Y")) - 2.0f64.sqrt()).abs() < TOL);
        // merged contributions below the threshold are still kept: pruning
        // only ever tests individual spawned contributions
        let (pruned, _) = propagate(&circuit, &obs, 0.5, &NoiseModel::noiseless()).unwrap();
        assert!((pruned.coefficient(&pauli("Y")) - 2.0f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn an_empty_layer_still_applies_the_threshold() {
        let mut circuit = Circuit::new(1).unwrap();
        circuit.push_layer(Layer::new(vec![])).unwrap();
        let obs = OperatorSum::single(pauli("X"), 1.0);
        let noise = NoiseModel::new(0.5, 1.0).unwrap();
        // damped to e^-1, below the threshold 0.4
        let (out, trace) = propagate(&circuit, &obs, 0.4, &noise).unwrap();
        assert!(out.is_empty());
        assert_eq!(trace.records[0].retained, 0);
        // with a smaller threshold the damped term survives
        let (kept, _) = propagate(&circuit, &obs, 0.3, &noise).unwrap();
        assert!((kept.coefficient(&pauli("X")) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn clifford_circuits_keep_a_single_term() {
        for seed in [0, 1, 2] {
            let circuit = random_clifford(4, 20, seed).unwrap();
            let (out, trace) =
                propagate(&circuit, &z_last(4), 0.01, &NoiseModel::noiseless()).unwrap();
            assert_eq!(out.len(), 1);
            assert!(trace.records.iter().all(|r| r.retained == 1), "seed {seed}");
            let l = out.terms().next().unwrap().1;
            assert!((l.abs() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn exact_noiseless_propagation_conserves_the_norm() {
        for family in Family::ALL {
            for seed in [0, 7] {
                let circuit = family.sample(3, 10, seed).unwrap();
                let (out, trace) =
                    propagate(&circuit, &z_last(3), 0.0, &NoiseModel::noiseless()).unwrap();
                let bound = 1e-10 * circuit.depth() as f64;
                assert!(
                    (out.norm() - 1.0).abs() <= bound,
                    "{family} seed {seed}: norm {} deviates beyond {bound}",
                    out.norm()
                );
                assert!(trace.records.iter().all(|r| (r.norm - 1.0).abs() <= bound));
            }
        }
    }

    #[test]
    fn noisy_norm_never_increases() {
        let circuit = random_clifford_t(4, 30, 5).unwrap();
        let noise = NoiseModel::new(0.02, 1.0).unwrap();
        let (_, trace) = propagate(&circuit, &z_last(4), 0.0, &noise).unwrap();
        let mut last = 1.0;
        for r in &trace.records {
            assert!(r.norm <= last + 1e-15, "layer {}: {} > {last}", r.layer, r.norm);
            last = r.norm;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn count_threshold_can_differ_from_the_pruning_threshold() {
        let circuit = random_clifford_t(4, 30, 2).unwrap();
        let options =
            PropagationOptions { eps: 0.0, count_eps: Some(0.01), ..Default::default() };
        let (_, trace) =
            propagate_with(&circuit, &z_last(4), &NoiseModel::noiseless(), options).unwrap();
        assert_eq!(trace.count_eps, 0.01);
        assert!(trace.records.iter().all(|r| r.n_eps <= r.retained));
        assert!(trace.records.iter().any(|r| r.n_eps < r.retained));
    }

    #[test]
    fn global_mode_rescues_contributions_that_merge_above_threshold() {
        // through one T gate, X and Y components recombine: each path
        // carries 0.6/sqrt(2) ~ 0.42, the merged Y coefficient ~ 0.85
        let mut circuit = Circuit::new(1).unwrap();
        circuit.push_layer(Layer::new(vec![Gate::t(1).unwrap()])).unwrap();
        let mut obs = OperatorSum::new(1).unwrap();
        obs.add_term("X".parse().unwrap(), 0.6).unwrap();
        obs.add_term("Y".parse().unwrap(), 0.6).unwrap();
        let noise = NoiseModel::noiseless();
        let pruned = PropagationOptions { eps: 0.5, ..Default::default() };
        let (out, _) = propagate_with(&circuit, &obs, &noise, pruned).unwrap();
        assert!(out.is_empty(), "every path is below threshold mid-expansion");
        let global =
            PropagationOptions { eps: 0.5, mode: TruncationMode::Global, ..Default::default() };
        let (out, trace) = propagate_with(&circuit, &obs, &noise, global).unwrap();
        assert_eq!(out.len(), 1);
        let y = out.coefficient(&"Y".parse().unwrap());
        assert!((y - 1.2 / std::f64::consts::SQRT_2).abs() < TOL);
        assert_eq!(trace.records[0].retained, 1);
    }

    #[test]
    fn global_mode_with_zero_threshold_matches_the_exact_run() {
        let circuit = random_clifford_t(3, 12, 8).unwrap();
        let noise = NoiseModel::new(0.01, 1.0).unwrap();
        let (exact, _) = propagate(&circuit, &z_last(3), 0.0, &noise).unwrap();
        let options = PropagationOptions { mode: TruncationMode::Global, ..Default::default() };
        let (global, _) = propagate_with(&circuit, &z_last(3), &noise, options).unwrap();
        assert_eq!(exact.len(), global.len());
        for (p, lambda) in exact.terms() {
            assert!((global.coefficient(p) - lambda).abs() < 1e-15);
        }
    }

    #[test]
    fn qubit_mismatch_is_an_error() {
        let circuit = random_clifford(4, 2, 0).unwrap();
        let obs = z_last(3);
        assert!(matches!(
            propagate(&circuit, &obs, 0.0, &NoiseModel::noiseless()),
            Err(PropagationError::QubitMismatch { circuit: 4, observable: 3 })
        ));
    }

    #[test]
    fn trace_csv_has_the_documented_shape() {
        let circuit = random_clifford_t(3, 3, 8).unwrap();
        let noise = NoiseModel::new(0.01, 1.0).unwrap();
        let (_, trace) = propagate(&circuit, &z_last(3), 0.001, &noise).unwrap();
        let csv = trace.to_csv_string();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "layer,retained,n_eps,lambda_norm");
        assert_eq!(lines.len(), 1 + circuit.depth() + 1);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[0], circuit.depth().to_string());
        let parsed: f64 = first[3].parse().unwrap();
        assert!((parsed - trace.records[0].norm).abs() < 1e-15);
        let last = lines.last().unwrap();
        assert!(last.starts_with("expectation,"));
        let value: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, trace.expectation);
    }

    #[test]
    fn pruned_runs_drop_norm_relative_to_exact() {
        let circuit = random_clifford_t(4, 40, 3).unwrap();
        let noise = NoiseModel::new(0.01, 1.0).unwrap();
        let (exact, _) = propagate(&circuit, &z_last(4), 0.0, &noise).unwrap();
        let (pruned, _) = propagate(&circuit, &z_last(4), 0.05, &noise).unwrap();
        assert!(pruned.len() <= exact.len());
        assert!(pruned.norm() <= exact.norm() + 1e-12);
    }
}
