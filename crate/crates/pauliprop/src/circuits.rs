//! Layered circuits and the random ensembles used throughout.
//!
//! A circuit is a list of layers; within one layer all gate supports are
//! disjoint, so the layer's gates commute and act as a single unitary.
//! Ensemble rounds whose gates overlap are therefore stored as consecutive
//! sub-layers. Three ensembles are provided:
//!
//! * `clifford`: per logical layer, each qubit draws from `{I, H}`, then
//!   every nearest-neighbour pair draws from `{I, CZ}`. The pair round is
//!   split for disjointness into the odd pairs `(1,2), (3,4), ...` followed
//!   by the even pairs `(2,3), (4,5), ...`, so one logical layer is stored
//!   as three layers (some possibly empty) and the stored depth is `3 * L`.
//! * `clifford_t`: as above, with single-qubit draws from `{I, H, T}`.
//! * `matchgate`: sweeps over the pairs `(1,2), (2,3), ..., (n-1,n)` of
//!   two-block gates whose blocks are independent uniform plane rotations;
//!   each pair in a sweep is stored as its own layer, so the layer count of a
//!   circuit with `s` sweeps is `s * (n - 1)`.
//!
//! Identity draws are not stored, and empty rounds are kept so the stored
//! depth never depends on the draws. Randomness comes from one ChaCha12
//! seed; every (logical layer, slot) pair reads its own stream, so omitting
//! an identity never shifts later draws and prefixes agree between runs of
//! different depth. Slot `q - 1` holds the single-qubit draw on qubit `q`,
//! slot `n - 1 + p` the draw on the `p`-th adjacent pair (counting `(1,2)`
//! as `p = 0`); matchgate sweeps use slot `p` directly.
//!
//! Circuits serialize to a versioned JSON document listing layers of gates;
//! generic and matchgate matrices are stored row-major as `[re, im]` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{Gate, GateError, GateKind, NamedGate};
use crate::pauli::MAX_QUBITS;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("a circuit needs between 1 and {MAX_QUBITS} qubits, got {0}")]
    BadQubitCount(usize),
    #[error("layer {layer}: qubit {qubit} is used by more than one gate")]
    OverlappingSupport { layer: usize, qubit: usize },
    #[error("layer {layer}, gate {gate}: support {qubit} is outside 1..={n_qubits}")]
    SupportOutOfRange { layer: usize, gate: usize, qubit: usize, n_qubits: usize },
    #[error("layer {layer}, gate {gate}: unknown gate kind {kind:?}")]
    UnknownKind { layer: usize, gate: usize, kind: String },
    #[error("layer {layer}, gate {gate}: {source}")]
    BadGate { layer: usize, gate: usize, source: GateError },
    #[error("layer {layer}, gate {gate}: expected {expected} matrix entries, got {got}")]
    BadMatrix { layer: usize, gate: usize, expected: usize, got: usize },
    #[error("unsupported circuit document version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown circuit family {0:?} (expected clifford, clifford_t or matchgate)")]
    UnknownFamily(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One layer of gates on pairwise disjoint supports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layer {
    gates: Vec<Gate>,
}

impl Layer {
    pub fn new(gates: Vec<Gate>) -> Layer {
        Layer { gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn validate(&self, layer_index: usize, n_qubits: usize) -> Result<(), CircuitError> {
        let mut used = 0u64;
        for (g, gate) in self.gates.iter().enumerate() {
            for &q in gate.support() {
                if q == 0 || q > n_qubits {
                    return Err(CircuitError::SupportOutOfRange {
                        layer: layer_index,
                        gate: g,
                        qubit: q,
                        n_qubits,
                    });
                }
                let bit = 1u64 << (q - 1);
                if used & bit != 0 {
                    return Err(CircuitError::OverlappingSupport { layer: layer_index, qubit: q });
                }
                used |= bit;
            }
        }
        Ok(())
    }
}

/// A register size plus an ordered list of validated layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Circuit, CircuitError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(CircuitError::BadQubitCount(n_qubits));
        }
        Ok(Circuit { n_qubits, layers: Vec::new() })
    }

    pub fn from_layers(n_qubits: usize, layers: Vec<Layer>) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(n_qubits)?;
        for layer in layers {
            c.push_layer(layer)?;
        }
        Ok(c)
    }

    pub fn push_layer(&mut self, layer: Layer) -> Result<(), CircuitError> {
        layer.validate(self.layers.len(), self.n_qubits)?;
        self.layers.push(layer);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    pub fn to_json_string(&self) -> Result<String, CircuitError> {
        Ok(serde_json::to_string_pretty(&CircuitDoc::from_circuit(self))?)
    }

    pub fn from_json_str(text: &str) -> Result<Circuit, CircuitError> {
        let doc: CircuitDoc = serde_json::from_str(text)?;
        doc.into_circuit()
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<(), CircuitError> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Circuit, CircuitError> {
        Circuit::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// The random circuit ensembles selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Clifford,
    CliffordT,
    Matchgate,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Clifford, Family::CliffordT, Family::Matchgate];

    pub fn label(self) -> &'static str {
        match self {
            Family::Clifford => "clifford",
            Family::CliffordT => "clifford_t",
            Family::Matchgate => "matchgate",
        }
    }

    /// Draws a circuit of the family. `depth` counts logical layers, each of
    /// which expands to several stored layers: three for the Clifford
    /// ensembles, `n_qubits - 1` for matchgate sweeps.
    pub fn sample(self, n_qubits: usize, depth: usize, seed: u64) -> Result<Circuit, CircuitError> {
        match self {
            Family::Clifford => random_clifford(n_qubits, depth, seed),
            Family::CliffordT => random_clifford_t(n_qubits, depth, seed),
            Family::Matchgate => random_matchgate_circuit(n_qubits, depth, seed),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Family, CircuitError> {
        match s {
            "clifford" => Ok(Family::Clifford),
            "clifford_t" => Ok(Family::CliffordT),
            "matchgate" => Ok(Family::Matchgate),
            other => Err(CircuitError::UnknownFamily(other.to_string())),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The nearest-neighbour pairs of one disjoint pair round: `odd` selects
/// `(1,2), (3,4), ...`, otherwise `(2,3), (4,5), ...`.
pub fn pair_round(n_qubits: usize, odd: bool) -> Vec<(usize, usize)> {
    let start = if odd { 1 } else { 2 };
    (start..n_qubits).step_by(2).map(|q| (q, q + 1)).collect()
}

/// Number of stored layers one logical layer of the Clifford ensembles
/// expands to: the single-qubit round plus the two pair rounds.
pub const CLIFFORD_ROUNDS: usize = 3;

fn slot_rng(master: &ChaCha12Rng, layer: usize, slot: usize) -> ChaCha12Rng {
    let mut rng = master.clone();
    rng.set_stream(((layer as u64) << 16) | slot as u64);
    rng
}

fn random_brickwork(
    n_qubits: usize,
    n_layers: usize,
    seed: u64,
    with_t: bool,
) -> Result<Circuit, CircuitError> {
    let mut circuit = Circuit::new(n_qubits)?;
    let master = ChaCha12Rng::seed_from_u64(seed);
    for l in 0..n_layers {
        let mut singles = Vec::new();
        for q in 1..=n_qubits {
            let mut rng = slot_rng(&master, l, q - 1);
            let draw = rng.gen_range(0..2 + usize::from(with_t));
            let gate = match draw {
                0 => continue, // identity draws are not stored
                1 => Gate::named(NamedGate::H, vec![q]),
                _ => Gate::t(q),
            }
            .expect("named single-qubit gate on a valid qubit");
            singles.push(gate);
        }
        circuit.push_layer(Layer::new(singles)).expect("single-qubit round is disjoint");
        for odd in [true, false] {
            let mut czs = Vec::new();
            for (a, b) in pair_round(n_qubits, odd) {
                let pair_index = a - 1;
                let mut rng = slot_rng(&master, l, n_qubits - 1 + pair_index);
                if rng.gen_range(0..2) == 1 {
                    czs.push(Gate::named(NamedGate::Cz, vec![a, b]).expect("valid pair"));
                }
            }
            circuit.push_layer(Layer::new(czs)).expect("pair round is disjoint");
        }
    }
    Ok(circuit)
}

/// Layered circuit whose logical layers draw `{I, H}` on every qubit and
/// `{I, CZ}` on every nearest-neighbour pair, stored as [`CLIFFORD_ROUNDS`]
/// sub-layers per logical layer.
pub fn random_clifford(n_qubits: usize, n_layers: usize, seed: u64) -> Result<Circuit, CircuitError> {
    random_brickwork(n_qubits, n_layers, seed, false)
}

/// As [`random_clifford`] with single-qubit draws from `{I, H, T}`.
pub fn random_clifford_t(
    n_qubits: usize,
    n_layers: usize,
    seed: u64,
) -> Result<Circuit, CircuitError> {
    random_brickwork(n_qubits, n_layers, seed, true)
}

fn rotation_block(theta: f64) -> DMatrix<Complex64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
    )
}

/// Sweeps of two-block gates over `(1,2), (2,3), ..., (n-1,n)`; both blocks
/// are independent uniform plane rotations, so their determinants are 1 and
/// the two-block structure closes under composition. Each gate is stored as
/// its own layer.
pub fn random_matchgate_circuit(
    n_qubits: usize,
    n_sweeps: usize,
    seed: u64,
) -> Result<Circuit, CircuitError> {
    let mut circuit = Circuit::new(n_qubits)?;
    let master = ChaCha12Rng::seed_from_u64(seed);
    for sweep in 0..n_sweeps {
        for q in 1..n_qubits {
            let mut rng = slot_rng(&master, sweep, q - 1);
            let theta_a = rng.gen_range(0.0..std::f64::consts::TAU);
            let theta_b = rng.gen_range(0.0..std::f64::consts::TAU);
            let gate = Gate::new(
                GateKind::Matchgate { a: rotation_block(theta_a), b: rotation_block(theta_b) },
                vec![q, q + 1],
            )
            .expect("rotation blocks are unitary with unit determinant");
            circuit.push_layer(Layer::new(vec![gate])).expect("single gate layer");
        }
    }
    Ok(circuit)
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of the triangular diagonal folded into Q.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[derive(Serialize, Deserialize)]
struct GateDoc {
    kind: String,
    support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    version: u32,
    n_qubits: usize,
    layers: Vec<Vec<GateDoc>>,
}

const DOC_VERSION: u32 = 1;

fn matrix_to_pairs(m: &DMatrix<Complex64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    out
}

fn pairs_to_matrix(
    pairs: &[[f64; 2]],
    dim: usize,
    layer: usize,
    gate: usize,
) -> Result<DMatrix<Complex64>, CircuitError> {
    if pairs.len() != dim * dim {
        return Err(CircuitError::BadMatrix { layer, gate, expected: dim * dim, got: pairs.len() });
    }
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        let [re, im] = pairs[r * dim + c];
        Complex64::new(re, im)
    }))
}

impl CircuitDoc {
    fn from_circuit(circuit: &Circuit) -> CircuitDoc {
        let layers = circuit
            .layers
            .iter()
            .map(|layer| {
                layer
                    .gates
                    .iter()
                    .map(|gate| {
                        let support = gate.support().to_vec();
                        match gate.kind() {
                            GateKind::Named(g) => GateDoc {
                                kind: g.label().to_string(),
                                support,
                                matrix: None,
                                a: None,
                                b: None,
                            },
                            GateKind::T => GateDoc {
                                kind: "T".to_string(),
                                support,
                                matrix: None,
                                a: None,
                                b: None,
                            },
                            GateKind::Matchgate { a, b } => GateDoc {
                                kind: "matchgate".to_string(),
                                support,
                                matrix: None,
                                a: Some(matrix_to_pairs(a)),
                                b: Some(matrix_to_pairs(b)),
                            },
                            GateKind::Generic1Q(m) => GateDoc {
                                kind: "generic1q".to_string(),
                                support,
                                matrix: Some(matrix_to_pairs(m)),
                                a: None,
                                b: None,
                            },
                            GateKind::Generic2Q(m) => GateDoc {
                                kind: "generic2q".to_string(),
                                support,
                                matrix: Some(matrix_to_pairs(m)),
                                a: None,
                                b: None,
                            },
                        }
                    })
                    .collect()
            })
            .collect();
        CircuitDoc { version: DOC_VERSION, n_qubits: circuit.n_qubits, layers }
    }

    fn into_circuit(self) -> Result<Circuit, CircuitError> {
        if self.version != DOC_VERSION {
            return Err(CircuitError::UnsupportedVersion(self.version));
        }
        let mut circuit = Circuit::new(self.n_qubits)?;
        for (l, layer_doc) in self.layers.into_iter().enumerate() {
            let mut gates = Vec::with_capacity(layer_doc.len());
            for (g, doc) in layer_doc.into_iter().enumerate() {
                let kind = match doc.kind.as_str() {
                    "I" => GateKind::Named(NamedGate::I),
                    "H" => GateKind::Named(NamedGate::H),
                    "S" => GateKind::Named(NamedGate::S),
                    "X" => GateKind::Named(NamedGate::X),
                    "Y" => GateKind::Named(NamedGate::Y),
                    "Z" => GateKind::Named(NamedGate::Z),
                    "CZ" => GateKind::Named(NamedGate::Cz),
                    "CNOT" => GateKind::Named(NamedGate::Cnot),
                    "T" => GateKind::T,
                    "matchgate" => {
                        let a = doc.a.as_deref().unwrap_or(&[]);
                        let b = doc.b.as_deref().unwrap_or(&[]);
                        GateKind::Matchgate {
                            a: pairs_to_matrix(a, 2, l, g)?,
                            b: pairs_to_matrix(b, 2, l, g)?,
                        }
                    }
                    "generic1q" => {
                        let m = doc.matrix.as_deref().unwrap_or(&[]);
                        GateKind::Generic1Q(pairs_to_matrix(m, 2, l, g)?)
                    }
                    "generic2q" => {
                        let m = doc.matrix.as_deref().unwrap_or(&[]);
                        GateKind::Generic2Q(pairs_to_matrix(m, 4, l, g)?)
                    }
                    other => {
                        return Err(CircuitError::UnknownKind {
                            layer: l,
                            gate: g,
                            kind: other.to_string(),
                        })
                    }
                };
                let gate = Gate::new(kind, doc.support)
                    .map_err(|source| CircuitError::BadGate { layer: l, gate: g, source })?;
                gates.push(gate);
            }
            circuit.push_layer(Layer::new(gates))?;
        }
        Ok(circuit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn pair_rounds_split_the_chain_by_parity() {
        assert_eq!(pair_round(5, true), vec![(1, 2), (3, 4)]);
        assert_eq!(pair_round(5, false), vec![(2, 3), (4, 5)]);
        assert_eq!(pair_round(4, false), vec![(2, 3)]);
        assert_eq!(pair_round(2, false), vec![]);
        assert_eq!(pair_round(1, true), vec![]);
        // together the two rounds cover every adjacent pair exactly once
        let mut all = pair_round(7, true);
        all.extend(pair_round(7, false));
        all.sort();
        assert_eq!(all, (1..7).map(|q| (q, q + 1)).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_reproduces_the_same_circuit() {
        for family in Family::ALL {
            let a = family.sample(5, 20, 42).unwrap();
            let b = family.sample(5, 20, 42).unwrap();
            assert_eq!(a.to_json_string().unwrap(), b.to_json_string().unwrap());
            let c = family.sample(5, 20, 43).unwrap();
            assert_ne!(a.to_json_string().unwrap(), c.to_json_string().unwrap());
        }
    }

    #[test]
    fn deeper_runs_share_their_prefix_with_shallower_ones() {
        // every (layer, slot) pair has its own random stream, so the first
        // layers of a deep circuit match a shallow circuit exactly
        for family in Family::ALL {
            let shallow = family.sample(4, 5, 9).unwrap();
            let deep = family.sample(4, 12, 9).unwrap();
            assert_eq!(shallow.layers(), &deep.layers()[..shallow.depth()]);
        }
    }

    #[test]
    fn clifford_rounds_hold_h_and_parity_restricted_cz() {
        let circuit = random_clifford(6, 40, 3).unwrap();
        assert_eq!(circuit.depth(), 40 * CLIFFORD_ROUNDS);
        let mut saw_h = false;
        let mut saw_cz = false;
        for (l, layer) in circuit.layers().iter().enumerate() {
            match l % CLIFFORD_ROUNDS {
                0 => {
                    for gate in layer.gates() {
                        assert!(
                            matches!(gate.kind(), GateKind::Named(NamedGate::H)),
                            "round {l}: {gate:?}"
                        );
                        saw_h = true;
                    }
                }
                round => {
                    let allowed = pair_round(6, round == 1);
                    for gate in layer.gates() {
                        assert!(matches!(gate.kind(), GateKind::Named(NamedGate::Cz)));
                        let pair = (gate.support()[0], gate.support()[1]);
                        assert!(allowed.contains(&pair), "round {l} pair {pair:?}");
                        saw_cz = true;
                    }
                }
            }
        }
        assert!(saw_h && saw_cz);
    }

    #[test]
    fn clifford_t_layers_also_draw_t_gates() {
        let circuit = random_clifford_t(6, 40, 3).unwrap();
        let mut saw_t = false;
        for layer in circuit.layers() {
            for gate in layer.gates() {
                match gate.kind() {
                    GateKind::Named(NamedGate::H) | GateKind::Named(NamedGate::Cz) => {}
                    GateKind::T => saw_t = true,
                    other => panic!("unexpected gate {other:?}"),
                }
            }
        }
        assert!(saw_t);
    }

    #[test]
    fn matchgate_circuits_sweep_every_adjacent_pair() {
        let n = 5;
        let sweeps = 3;
        let circuit = random_matchgate_circuit(n, sweeps, 17).unwrap();
        assert_eq!(circuit.depth(), sweeps * (n - 1));
        for (l, layer) in circuit.layers().iter().enumerate() {
            assert_eq!(layer.gates().len(), 1);
            let gate = &layer.gates()[0];
            let q = 1 + (l % (n - 1));
            assert_eq!(gate.support(), &[q, q + 1]);
            match gate.kind() {
                GateKind::Matchgate { a, b } => {
                    for block in [a, b] {
                        // uniform plane rotation: real entries, determinant 1
                        for r in 0..2 {
                            for c in 0..2 {
                                assert!(block[(r, c)].im.abs() < TOL);
                            }
                        }
                        let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
                        assert!((det.re - 1.0).abs() < TOL && det.im.abs() < TOL);
                    }
                }
                other => panic!("unexpected gate {other:?}"),
            }
        }
    }

    #[test]
    fn haar_unitaries_are_unitary_to_tight_tolerance() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut worst = 0.0f64;
        for draw in 0..10_000 {
            let dim = if draw % 2 == 0 { 2 } else { 4 };
            let u = haar_unitary(dim, &mut rng);
            let gram = u.adjoint() * &u;
            for r in 0..dim {
                for c in 0..dim {
                    let expected = if r == c { 1.0 } else { 0.0 };
                    worst = worst.max((gram[(r, c)] - Complex64::new(expected, 0.0)).norm());
                }
            }
        }
        assert!(worst < TOL, "worst unitarity deviation {worst:e}");
    }

    #[test]
    fn haar_phases_are_not_stuck() {
        // smoke check against a broken phase fix: the mean of u_00 over many
        // draws must be near zero if phases wander the whole circle
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut mean = Complex64::new(0.0, 0.0);
        let draws = 2000;
        for _ in 0..draws {
            mean += haar_unitary(2, &mut rng)[(0, 0)];
        }
        mean /= draws as f64;
        assert!(mean.norm() < 0.05, "mean u_00 = {mean}");
    }

    #[test]
    fn json_round_trip_preserves_circuits_exactly() {
        for family in Family::ALL {
            let circuit = family.sample(4, 10, 23).unwrap();
            let text = circuit.to_json_string().unwrap();
            let back = Circuit::from_json_str(&text).unwrap();
            assert_eq!(circuit, back);
        }
    }

    #[test]
    fn documents_with_unknown_kinds_are_rejected_by_name() {
        let text = r#"{
            "version": 1,
            "n_qubits": 2,
            "layers": [[{"kind": "H", "support": [1]}],
                       [{"kind": "TOFFOLI", "support": [1]}]]
        }"#;
        match Circuit::from_json_str(text) {
            Err(CircuitError::UnknownKind { layer: 1, gate: 0, kind }) => {
                assert_eq!(kind, "TOFFOLI");
            }
            other => panic!("expected an unknown-kind error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_layers_are_rejected() {
        let h1 = Gate::named(NamedGate::H, vec![2]).unwrap();
        let cz = Gate::named(NamedGate::Cz, vec![2, 3]).unwrap();
        let mut circuit = Circuit::new(3).unwrap();
        let err = circuit.push_layer(Layer::new(vec![h1, cz])).unwrap_err();
        assert!(matches!(err, CircuitError::OverlappingSupport { layer: 0, qubit: 2 }));
    }

    #[test]
    fn out_of_range_support_is_rejected() {
        let h = Gate::named(NamedGate::H, vec![5]).unwrap();
        let mut circuit = Circuit::new(3).unwrap();
        let err = circuit.push_layer(Layer::new(vec![h])).unwrap_err();
        assert!(matches!(err, CircuitError::SupportOutOfRange { qubit: 5, .. }));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = r#"{"version": 7, "n_qubits": 1, "layers": []}"#;
        assert!(matches!(
            Circuit::from_json_str(text),
            Err(CircuitError::UnsupportedVersion(7))
        ));
    }

    #[test]
    fn family_labels_round_trip() {
        for family in Family::ALL {
            let parsed: Family = family.label().parse().unwrap();
            assert_eq!(parsed, family);
        }
        assert!("cliford".parse::<Family>().is_err());
    }
}
