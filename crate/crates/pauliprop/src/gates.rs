//! Gates and their action on Pauli strings by conjugation.
//!
//! Every gate, named or generic, is reduced to the same object: the real
//! transfer matrix `T_jk = Tr(B_j^dag U^dag B_k U) / 2^arity` over the local
//! Pauli basis of its support. Unitarity makes `T` orthogonal, its columns
//! hold the expansion of a conjugated basis string, and the identity string
//! is always a fixed point. Conjugating a global string reads one column and
//! splices the local factors back into the full register.
//!
//! Phase conventions for the named rotations are the exponential forms
//! `S = exp(i Z pi/4)` and `T = exp(i Z pi/8)`, so `T^dag X T = (X + Y)/sqrt(2)`.
//! For `CNOT` the first support qubit is the control. Global phases cancel in
//! conjugation, so gates equal up to phase produce identical transfers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::pauli::{PauliError, PauliString};

/// Tolerance for accepting a matrix as unitary and related validation checks.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Transfer-matrix entries at or below this magnitude are exact zeros of the
/// algebra contaminated by rounding, and are dropped.
pub const NUMERIC_ZERO: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GateError {
    #[error("gate matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matchgate blocks must have equal determinants (difference {0:e})")]
    DeterminantMismatch(f64),
    #[error("gate matrix must be {expected}x{expected}, got {rows}x{cols}")]
    WrongDimension { expected: usize, rows: usize, cols: usize },
    #[error("support must list {expected} distinct qubits, got {got:?}")]
    BadSupport { expected: usize, got: Vec<usize> },
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Gates with tabulated matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGate {
    I,
    H,
    S,
    X,
    Y,
    Z,
    Cz,
    Cnot,
}

impl NamedGate {
    pub fn arity(self) -> usize {
        match self {
            NamedGate::Cz | NamedGate::Cnot => 2,
            _ => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NamedGate::I => "I",
            NamedGate::H => "H",
            NamedGate::S => "S",
            NamedGate::X => "X",
            NamedGate::Y => "Y",
            NamedGate::Z => "Z",
            NamedGate::Cz => "CZ",
            NamedGate::Cnot => "CNOT",
        }
    }

    fn matrix(self) -> DMatrix<Complex64> {
        let c = Complex64::new;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            NamedGate::I => DMatrix::identity(2, 2),
            NamedGate::H => {
                DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
            }
            NamedGate::S => {
                let p = std::f64::consts::FRAC_PI_4;
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    Complex64::from_polar(1.0, p),
                    Complex64::from_polar(1.0, -p),
                ]))
            }
            NamedGate::X => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            NamedGate::Y => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            NamedGate::Z => DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
            NamedGate::Cz => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
            ])),
            NamedGate::Cnot => DMatrix::from_row_slice(
                2 * 2,
                2 * 2,
                &[
                    c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
                    c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                ],
            ),
        }
    }
}

/// The dynamical content of a gate.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Named(NamedGate),
    /// `exp(i Z pi/8)`.
    T,
    /// Two-qubit gate mixing `{|00>, |11>}` through `a` and `{|01>, |10>}`
    /// through `b`, with `det a = det b`.
    Matchgate { a: DMatrix<Complex64>, b: DMatrix<Complex64> },
    Generic1Q(DMatrix<Complex64>),
    Generic2Q(DMatrix<Complex64>),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Named(g) => g.arity(),
            GateKind::T | GateKind::Generic1Q(_) => 1,
            GateKind::Matchgate { .. } | GateKind::Generic2Q(_) => 2,
        }
    }
}

/// A gate applied to an explicit, ordered list of 1-based qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    support: Vec<usize>,
}

fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let d = u.nrows();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            let expected = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((gram[(r, c)] - expected).norm());
        }
    }
    worst
}

fn det2(m: &DMatrix<Complex64>) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Checks the matchgate block conditions: both blocks unitary with equal
/// determinants (within [`UNITARITY_TOL`]).
pub fn validate_matchgate(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<(), GateError> {
    for m in [a, b] {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(GateError::WrongDimension { expected: 2, rows: m.nrows(), cols: m.ncols() });
        }
        let dev = unitarity_deviation(m);
        if dev > UNITARITY_TOL {
            return Err(GateError::NotUnitary(dev));
        }
    }
    let diff = (det2(a) - det2(b)).norm();
    if diff > UNITARITY_TOL {
        return Err(GateError::DeterminantMismatch(diff));
    }
    Ok(())
}

fn matchgate_matrix(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut u = DMatrix::zeros(4, 4);
    u[(0, 0)] = a[(0, 0)];
    u[(0, 3)] = a[(0, 1)];
    u[(3, 0)] = a[(1, 0)];
    u[(3, 3)] = a[(1, 1)];
    u[(1, 1)] = b[(0, 0)];
    u[(1, 2)] = b[(0, 1)];
    u[(2, 1)] = b[(1, 0)];
    u[(2, 2)] = b[(1, 1)];
    u
}

impl Gate {
    pub fn new(kind: GateKind, support: Vec<usize>) -> Result<Gate, GateError> {
        let arity = kind.arity();
        let distinct = support.len() == arity
            && support.iter().all(|&q| q >= 1)
            && (arity == 1 || support[0] != support[1]);
        if !distinct {
            return Err(GateError::BadSupport { expected: arity, got: support });
        }
        match &kind {
            GateKind::Named(_) | GateKind::T => {}
            GateKind::Matchgate { a, b } => validate_matchgate(a, b)?,
            GateKind::Generic1Q(m) | GateKind::Generic2Q(m) => {
                let expected = 1 << arity;
                if m.nrows() != expected || m.ncols() != expected {
                    return Err(GateError::WrongDimension {
                        expected,
                        rows: m.nrows(),
                        cols: m.ncols(),
                    });
                }
                let dev = unitarity_deviation(m);
                if dev > UNITARITY_TOL {
                    return Err(GateError::NotUnitary(dev));
                }
            }
        }
        Ok(Gate { kind, support })
    }

    pub fn named(g: NamedGate, support: Vec<usize>) -> Result<Gate, GateError> {
        Gate::new(GateKind::Named(g), support)
    }

    pub fn t(qubit: usize) -> Result<Gate, GateError> {
        Gate::new(GateKind::T, vec![qubit])
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    /// The gate's unitary over its local basis: first support qubit is the
    /// most significant bit of the row/column index.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        match &self.kind {
            GateKind::Named(g) => g.matrix(),
            GateKind::T => {
                let p = std::f64::consts::FRAC_PI_8;
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    Complex64::from_polar(1.0, p),
                    Complex64::from_polar(1.0, -p),
                ]))
            }
            GateKind::Matchgate { a, b } => matchgate_matrix(a, b),
            GateKind::Generic1Q(m) | GateKind::Generic2Q(m) => m.clone(),
        }
    }
}

/// Dense matrix of a local Pauli basis element. `index` runs over `4^arity`
/// with the first support qubit as the most significant base-4 digit; digit
/// codes follow [`crate::pauli::Axis::code`].
fn local_pauli_dense(arity: usize, index: usize) -> DMatrix<Complex64> {
    let c = Complex64::new;
    let single = |code: usize| -> DMatrix<Complex64> {
        match code {
            0b00 => DMatrix::identity(2, 2),
            0b01 => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            0b11 => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            _ => DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        }
    };
    let mut m = single((index >> (2 * (arity - 1))) & 0b11);
    for i in 1..arity {
        let code = (index >> (2 * (arity - 1 - i))) & 0b11;
        m = m.kronecker(&single(code));
    }
    m
}

/// Orthogonal transfer matrix of one gate over its local Pauli basis.
#[derive(Debug, Clone)]
pub struct LocalTransfer {
    arity: usize,
    entries: DMatrix<f64>,
    /// entries per column as (row, value), zeros dropped
    columns: Vec<Vec<(usize, f64)>>,
}

impl LocalTransfer {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << (2 * self.arity)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column(&self, k: usize) -> &[(usize, f64)] {
        &self.columns[k]
    }

    /// `max |T^t T - I|`, which vanishes for exactly unitary gates.
    pub fn orthogonality_deviation(&self) -> f64 {
        let d = self.dim();
        let g = self.entries.transpose() * &self.entries;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let expected = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - expected).abs());
            }
        }
        worst
    }
}

/// Computes the transfer matrix of `gate` numerically from its unitary:
/// column `k` is the expansion of `U^dag B_k U` in the local basis under the
/// scaled trace `Tr(.)/2^arity`. Imaginary residue beyond [`UNITARITY_TOL`]
/// cannot occur for a validated gate and is asserted away. The identity row
/// and column are pinned to their exact values, which hold for every
/// unitary: conjugation fixes the identity and preserves tracelessness.
pub fn local_transfer(gate: &Gate) -> LocalTransfer {
    let arity = gate.arity();
    let dim = 1usize << (2 * arity);
    let sdim = 1usize << arity;
    let u = gate.unitary();
    let udag = u.adjoint();
    let mut entries = DMatrix::zeros(dim, dim);
    let mut columns = vec![Vec::new(); dim];
    entries[(0, 0)] = 1.0;
    columns[0].push((0, 1.0));
    let basis: Vec<DMatrix<Complex64>> = (0..dim).map(|j| local_pauli_dense(arity, j)).collect();
    for k in 1..dim {
        let conjugated = &udag * &basis[k] * &u;
        for j in 1..dim {
            // basis elements are Hermitian: Tr(B_j^dag M) = Tr(B_j M)
            let t = (&basis[j] * &conjugated).trace() / (sdim as f64);
            assert!(
                t.im.abs() <= UNITARITY_TOL,
                "non-real transfer entry {:?} from a validated gate",
                t
            );
            if t.re.abs() > NUMERIC_ZERO {
                entries[(j, k)] = t.re;
                columns[k].push((j, t.re));
            }
        }
    }
    LocalTransfer { arity, entries, columns }
}

/// A gate paired with its precomputed transfer, for repeated conjugation.
#[derive(Debug, Clone)]
pub struct CompiledGate {
    support: Vec<usize>,
    transfer: LocalTransfer,
}

impl CompiledGate {
    pub fn new(gate: &Gate) -> CompiledGate {
        CompiledGate { support: gate.support().to_vec(), transfer: local_transfer(gate) }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn transfer(&self) -> &LocalTransfer {
        &self.transfer
    }

    fn local_index(&self, p: &PauliString) -> usize {
        let mut k = 0usize;
        for &q in &self.support {
            let code = ((p.z_mask() >> (q - 1)) & 1) << 1 | ((p.x_mask() >> (q - 1)) & 1);
            k = (k << 2) | code as usize;
        }
        k
    }

    /// Transfer column describing the conjugation of `p`'s local factors.
    pub fn column_of(&self, p: &PauliString) -> &[(usize, f64)] {
        self.transfer.column(self.local_index(p))
    }

    /// Replaces `p`'s factors on the support with the local string `local`.
    pub fn splice(&self, p: &PauliString, local: usize) -> PauliString {
        let mut x = p.x_mask();
        let mut z = p.z_mask();
        let arity = self.support.len();
        for (i, &q) in self.support.iter().enumerate() {
            let code = (local >> (2 * (arity - 1 - i))) & 0b11;
            let bit = 1u64 << (q - 1);
            x = (x & !bit) | if code & 1 != 0 { bit } else { 0 };
            z = (z & !bit) | if code & 2 != 0 { bit } else { 0 };
        }
        PauliString::from_masks(p.n_qubits(), x, z).expect("masks within register")
    }

    /// Expands `coeff * U^dag p U` into weighted strings, appending to `out`.
    pub fn conjugate_into(&self, p: &PauliString, coeff: f64, out: &mut Vec<(PauliString, f64)>) {
        let k = self.local_index(p);
        for &(j, w) in self.transfer.column(k) {
            out.push((self.splice(p, j), coeff * w));
        }
    }
}

/// Heisenberg image of a weighted Pauli string under one gate: the expansion
/// of `coeff * U^dag p U` with real coefficients.
pub fn conjugate(
    gate: &Gate,
    p: &PauliString,
    coeff: f64,
) -> Result<Vec<(PauliString, f64)>, GateError> {
    for &q in gate.support() {
        if q == 0 || q > p.n_qubits() {
            return Err(GateError::Pauli(PauliError::QubitOutOfRange {
                qubit: q,
                n_qubits: p.n_qubits(),
            }));
        }
    }
    let compiled = CompiledGate::new(gate);
    let mut out = Vec::new();
    compiled.conjugate_into(p, coeff, &mut out);
    Ok(out)
}
