//! Dense brute-force references for the sparse engine.
//!
//! Everything here trades memory for certainty: the full transfer matrix
//! over the complete Pauli basis (`4^N x 4^N`, capped at `N = 6`), forward
//! density-matrix evolution with interleaved dephasing (capped at `N = 10`),
//! and the diagonality check of the conjugation map in the eigen-dyad basis
//! of the circuit unitary (capped at `N = 4`). The sparse propagation and
//! these references must agree to tight tolerances; nothing else in the
//! crate is treated as ground truth.
//!
//! Basis conventions: qubit 1 is the least significant bit of a computational
//! basis index, and a Pauli string acts as
//! `P|i> = i^{|x & z|} (-1)^{|z & i|} |i ^ x>` in terms of its bit masks.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuits::Circuit;
use crate::gates::{CompiledGate, Gate};
use crate::pauli::{PauliString, Phase};
use crate::propagation::{expand_term, NoiseModel, OperatorSum};

/// Register cap for the full transfer matrix (`4^N x 4^N` dense reals).
pub const FULL_OMEGA_MAX_QUBITS: usize = 6;
/// Register cap for dense density-matrix evolution.
pub const DENSITY_MAX_QUBITS: usize = 10;
/// Register cap for the eigenbasis diagonality check.
pub const EIGENBASIS_MAX_QUBITS: usize = 4;

/// Eigenvalue gaps below this are reported as degenerate: the dyad basis is
/// then non-unique, though diagonality itself still holds.
pub const DEGENERATE_GAP: f64 = 1e-10;

const OMEGA_MAGIC: u32 = u32::from_le_bytes(*b"OMEG");

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("{what} is limited to {limit} qubits, got {n}")]
    TooLarge { what: &'static str, n: usize, limit: usize },
    #[error("circuit acts on {circuit} qubits but the observable has {observable}")]
    QubitMismatch { circuit: usize, observable: usize },
    #[error("total evolution time must be positive, got {0}")]
    BadTime(f64),
    #[error("not a transfer-matrix file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense matrix of one Pauli string under the crate's basis conventions.
pub fn dense_pauli(p: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << p.n_qubits();
    let x = p.x_mask();
    let z = p.z_mask();
    let lead = Phase::from_exponent((x & z).count_ones() as i64);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim as u64 {
        let sign = if (z & i).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let (re, im) = lead.to_complex();
        m[((i ^ x) as usize, i as usize)] = Complex64::new(re * sign, im * sign);
    }
    m
}

/// Dense matrix of a whole operator sum.
pub fn dense_operator(s: &OperatorSum) -> DMatrix<Complex64> {
    let dim = 1usize << s.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (p, lambda) in s.terms() {
        m += dense_pauli(p) * Complex64::new(lambda, 0.0);
    }
    m
}

/// The transfer matrix of a whole circuit with interleaved damping, over the
/// complete Pauli basis in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct FullOmega {
    n_qubits: usize,
    entries: DMatrix<f64>,
}

impl FullOmega {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Binary export: ASCII magic, register size, then the entries row-major
    /// as little-endian doubles.
    pub fn write_binary(&self, path: &std::path::Path) -> Result<(), DenseError> {
        let dim = self.dim();
        let mut bytes = Vec::with_capacity(8 + dim * dim * 8);
        bytes.extend_from_slice(&OMEGA_MAGIC.to_le_bytes());
        bytes.extend_from_slice(&(self.n_qubits as u32).to_le_bytes());
        for r in 0..dim {
            for c in 0..dim {
                bytes.extend_from_slice(&self.entries[(r, c)].to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn read_binary(path: &std::path::Path) -> Result<FullOmega, DenseError> {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 8 {
            return Err(DenseError::BadFile("missing header".into()));
        }
        let magic = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        if magic != OMEGA_MAGIC {
            return Err(DenseError::BadFile(format!("bad magic {magic:#x}")));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if n == 0 || n > FULL_OMEGA_MAX_QUBITS {
            return Err(DenseError::BadFile(format!("unsupported register size {n}")));
        }
        let dim = 1usize << (2 * n);
        if bytes.len() != 8 + dim * dim * 8 {
            return Err(DenseError::BadFile(format!(
                "expected {} entry bytes, got {}",
                dim * dim * 8,
                bytes.len() - 8
            )));
        }
        let mut entries = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                let at = 8 + (r * dim + c) * 8;
                entries[(r, c)] = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            }
        }
        Ok(FullOmega { n_qubits: n, entries })
    }

    /// CSV edge list `j,k,omega` of entries with `|omega| > threshold`,
    /// scanned in row-major order.
    pub fn edges_csv(&self, threshold: f64) -> String {
        let dim = self.dim();
        let mut out = String::from("j,k,omega\n");
        for j in 0..dim {
            for k in 0..dim {
                let w = self.entries[(j, k)];
                if w.abs() > threshold {
                    out.push_str(&format!("{j},{k},{w:.16e}\n"));
                }
            }
        }
        out
    }
}

/// Builds the full transfer matrix by propagating every basis string through
/// the circuit exactly (no truncation), columns in parallel: column `k`
/// holds the expansion of the damped Heisenberg image of basis string `k`.
pub fn build_full_omega(circuit: &Circuit, noise: &NoiseModel) -> Result<FullOmega, DenseError> {
    let n = circuit.n_qubits();
    if n > FULL_OMEGA_MAX_QUBITS {
        return Err(DenseError::TooLarge {
            what: "the full transfer matrix",
            n,
            limit: FULL_OMEGA_MAX_QUBITS,
        });
    }
    let dim = 1usize << (2 * n);
    // gates of one layer apply in reverse stored order
    let compiled: Vec<Vec<CompiledGate>> = circuit
        .layers()
        .iter()
        .map(|layer| layer.gates().iter().rev().map(CompiledGate::new).collect())
        .collect();
    let mut entries = DMatrix::<f64>::zeros(dim, dim);
    // the backing slice is column-major: chunks of dim are whole columns
    entries
        .as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(k, column)| {
            let start = PauliString::from_index(n, k as u64).expect("index within basis");
            let mut current: BTreeMap<PauliString, f64> = BTreeMap::new();
            current.insert(start, 1.0);
            for gates in compiled.iter().rev() {
                let mut damped = current;
                if noise.gamma() > 0.0 {
                    for (p, l) in damped.iter_mut() {
                        *l *= noise.damping(p.weight());
                    }
                }
                let mut next = BTreeMap::new();
                for (&p, &lambda) in &damped {
                    if gates.is_empty() {
                        if lambda != 0.0 {
                            *next.entry(p).or_insert(0.0) += lambda;
                        }
                    } else {
                        expand_term(gates, p, lambda, 0.0, &mut next);
                    }
                }
                next.retain(|_, v| *v != 0.0);
                current = next;
            }
            for (p, lambda) in current {
                column[p.index() as usize] = lambda;
            }
        });
    Ok(FullOmega { n_qubits: n, entries })
}

/// `max |(O^t O - I)_jl|`: zero for exactly orthogonal transfers, strictly
/// positive once damping is interleaved.
pub fn check_orthogonality(omega: &FullOmega) -> f64 {
    let dim = omega.dim();
    let gram = omega.entries.transpose() * &omega.entries;
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let expected = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - expected).abs());
        }
    }
    worst
}

/// Writes `m <- U_emb * m` where `U_emb` embeds `u` on the 1-based support
/// qubits; the first support qubit is the most significant local bit.
fn apply_unitary_left(
    m: &mut DMatrix<Complex64>,
    u: &DMatrix<Complex64>,
    support: &[usize],
    n_qubits: usize,
) {
    let dim = 1usize << n_qubits;
    let arity = support.len();
    let ldim = 1usize << arity;
    let support_mask: u64 = support.iter().map(|&q| 1u64 << (q - 1)).sum();
    let patterns: Vec<u64> = (0..ldim as u64)
        .map(|s| {
            let mut bits = 0u64;
            for (i, &q) in support.iter().enumerate() {
                if (s >> (arity - 1 - i)) & 1 != 0 {
                    bits |= 1 << (q - 1);
                }
            }
            bits
        })
        .collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); ldim];
    for c in 0..dim {
        for rest in 0..dim as u64 {
            if rest & support_mask != 0 {
                continue;
            }
            for (s, &pat) in patterns.iter().enumerate() {
                vals[s] = m[((rest | pat) as usize, c)];
            }
            for (s_new, &pat) in patterns.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, &v) in vals.iter().enumerate() {
                    acc += u[(s_new, s)] * v;
                }
                m[((rest | pat) as usize, c)] = acc;
            }
        }
    }
}

/// Writes `m <- m * U_emb^dag` with the same embedding rules.
fn apply_unitary_right_dagger(
    m: &mut DMatrix<Complex64>,
    u: &DMatrix<Complex64>,
    support: &[usize],
    n_qubits: usize,
) {
    let dim = 1usize << n_qubits;
    let arity = support.len();
    let ldim = 1usize << arity;
    let support_mask: u64 = support.iter().map(|&q| 1u64 << (q - 1)).sum();
    let patterns: Vec<u64> = (0..ldim as u64)
        .map(|s| {
            let mut bits = 0u64;
            for (i, &q) in support.iter().enumerate() {
                if (s >> (arity - 1 - i)) & 1 != 0 {
                    bits |= 1 << (q - 1);
                }
            }
            bits
        })
        .collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); ldim];
    for r in 0..dim {
        for rest in 0..dim as u64 {
            if rest & support_mask != 0 {
                continue;
            }
            for (s, &pat) in patterns.iter().enumerate() {
                vals[s] = m[(r, (rest | pat) as usize)];
            }
            for (s_new, &pat) in patterns.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, &v) in vals.iter().enumerate() {
                    // (m U^dag)[., s_new] = sum_s m[., s] * conj(u[s_new, s])
                    acc += v * u[(s_new, s)].conj();
                }
                m[(r, (rest | pat) as usize)] = acc;
            }
        }
    }
}

/// Dense state of the register, evolved forward gate by gate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn zero_state(n_qubits: usize) -> Result<DensityMatrix, DenseError> {
        if n_qubits == 0 || n_qubits > DENSITY_MAX_QUBITS {
            return Err(DenseError::TooLarge {
                what: "density-matrix evolution",
                n: n_qubits,
                limit: DENSITY_MAX_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        let mut entries = DMatrix::zeros(dim, dim);
        entries[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// `rho <- U rho U^dag`.
    pub fn apply_gate(&mut self, gate: &Gate) {
        let u = gate.unitary();
        apply_unitary_left(&mut self.entries, &u, gate.support(), self.n_qubits);
        apply_unitary_right_dagger(&mut self.entries, &u, gate.support(), self.n_qubits);
    }

    /// Z-dephasing on every qubit for one layer time: the element between
    /// basis states differing on `h` qubits shrinks by `e^(-2*gamma*t*h)`,
    /// equivalently every Pauli component with `q` X/Y factors shrinks by
    /// the damping factor of weight `q`.
    pub fn apply_dephasing(&mut self, noise: &NoiseModel) {
        if noise.gamma() == 0.0 {
            return;
        }
        let dim = 1usize << self.n_qubits;
        for r in 0..dim {
            for c in 0..dim {
                let h = ((r ^ c) as u64).count_ones();
                if h != 0 {
                    self.entries[(r, c)] *= noise.damping(h);
                }
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let dim = 1usize << self.n_qubits;
        let adj = self.entries.adjoint();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((self.entries[(r, c)] - adj[(r, c)]).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part; a valid state stays above
    /// a small negative rounding floor.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(rho A)` for a real combination of Pauli strings; the imaginary
    /// part vanishes for Hermitian states and is asserted small.
    pub fn expectation(&self, observable: &OperatorSum) -> Result<f64, DenseError> {
        if observable.n_qubits() != self.n_qubits {
            return Err(DenseError::QubitMismatch {
                circuit: self.n_qubits,
                observable: observable.n_qubits(),
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut total = Complex64::new(0.0, 0.0);
        for (p, lambda) in observable.terms() {
            let x = p.x_mask();
            let z = p.z_mask();
            let (re, im) = Phase::from_exponent((x & z).count_ones() as i64).to_complex();
            let lead = Complex64::new(re, im);
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..dim as u64 {
                let sign = if (z & i).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                // Tr(rho P) = sum_i phi(i) rho[i, i^x]
                tr += lead * sign * self.entries[(i as usize, (i ^ x) as usize)];
            }
            total += tr * lambda;
        }
        debug_assert!(total.im.abs() < 1e-9, "non-real expectation {total}");
        Ok(total.re)
    }
}

/// Forward Schroedinger evolution of `|0...0>` through the circuit with the
/// dephasing channel after every layer, returning `Tr(rho_final A)`.
pub fn schrodinger_expectation(
    circuit: &Circuit,
    observable: &OperatorSum,
    noise: &NoiseModel,
) -> Result<f64, DenseError> {
    if circuit.n_qubits() != observable.n_qubits() {
        return Err(DenseError::QubitMismatch {
            circuit: circuit.n_qubits(),
            observable: observable.n_qubits(),
        });
    }
    let mut rho = DensityMatrix::zero_state(circuit.n_qubits())?;
    for layer in circuit.layers() {
        for gate in layer.gates() {
            rho.apply_gate(gate);
        }
        rho.apply_dephasing(noise);
    }
    rho.expectation(observable)
}

/// The circuit's full unitary, layers applied in stored order.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<Complex64>, DenseError> {
    let n = circuit.n_qubits();
    if n > DENSITY_MAX_QUBITS {
        return Err(DenseError::TooLarge {
            what: "the dense circuit unitary",
            n,
            limit: DENSITY_MAX_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut u = DMatrix::identity(dim, dim);
    for layer in circuit.layers() {
        for gate in layer.gates() {
            apply_unitary_left(&mut u, &gate.unitary(), gate.support(), n);
        }
    }
    Ok(u)
}

/// Outcome of the eigen-dyad diagonality check.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenbasisReport {
    /// Largest off-diagonal magnitude of the conjugation map in the dyad
    /// basis; the claim under test is that this vanishes.
    pub off_diagonal: f64,
    /// Largest deviation of a diagonal entry from `e^(-i (E_m - E_n) t)`.
    pub diagonal_phase_error: f64,
    /// Some eigenvalue gap is below [`DEGENERATE_GAP`]: diagonality still
    /// holds but the dyad choice is not unique.
    pub degenerate_gap: bool,
    /// Effective energies `E_n = -arg(u_n) / t_total`, principal branch.
    pub energies: Vec<f64>,
}

/// Orthonormal eigenbasis of a unitary matrix, via its Hermitian real part
/// with eigenspaces split by the Hermitian imaginary part. Both stages are
/// standard Hermitian eigenproblems, which sidesteps a general complex
/// non-Hermitian solver.
fn unitary_eigenbasis(u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = u.nrows();
    let half = Complex64::new(0.5, 0.0);
    let real_part = (u + u.adjoint()) * half;
    let imag_part = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
    let eig = SymmetricEigen::new(real_part);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut basis = DMatrix::<Complex64>::zeros(dim, dim);
    for (to, &from) in order.iter().enumerate() {
        basis.set_column(to, &eig.eigenvectors.column(from));
    }
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    // split groups of (numerically) equal cosines by the sine part
    let group_tol = 1e-8;
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && (sorted[end] - sorted[end - 1]).abs() < group_tol {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let block = basis.columns(start, size).clone_owned();
            let projected = block.adjoint() * &imag_part * &block;
            let sub = SymmetricEigen::new(projected);
            let rotated = &block * &sub.eigenvectors;
            basis.columns_mut(start, size).copy_from(&rotated);
        }
        start = end;
    }
    basis
}

/// Measures how diagonal the circuit's conjugation map is in the basis of
/// eigen-dyads `|E_n><E_m|` of the circuit unitary. The map sends such a
/// dyad to `e^(-i (E_m - E_n) t)` times itself exactly, so the off-diagonal
/// part is a pure numerical residual.
pub fn eigenbasis_offdiagonal(
    circuit: &Circuit,
    t_total: f64,
) -> Result<EigenbasisReport, DenseError> {
    let n = circuit.n_qubits();
    if n > EIGENBASIS_MAX_QUBITS {
        return Err(DenseError::TooLarge {
            what: "the eigenbasis check",
            n,
            limit: EIGENBASIS_MAX_QUBITS,
        });
    }
    if !(t_total > 0.0) {
        return Err(DenseError::BadTime(t_total));
    }
    let u = circuit_unitary(circuit)?;
    let dim = u.nrows();
    let basis = unitary_eigenbasis(&u);
    // C = V^dag U V is diagonal up to eigensolver residue; its diagonal
    // holds the unit eigenvalues
    let c = basis.adjoint() * &u * &basis;
    let eigenvalues: Vec<Complex64> = (0..dim).map(|i| c[(i, i)]).collect();
    let energies: Vec<f64> = eigenvalues.iter().map(|v| -v.arg() / t_total).collect();
    let mut degenerate = false;
    for a in 0..dim {
        for b in (a + 1)..dim {
            if (eigenvalues[a] - eigenvalues[b]).norm() < DEGENERATE_GAP {
                degenerate = true;
            }
        }
    }
    // the transfer entry between dyads (a,b) and (n,m) factorizes as
    // conj(C[n,a]) * C[m,b]
    let mut off_diagonal = 0.0f64;
    let mut diagonal_phase_error = 0.0f64;
    for nn in 0..dim {
        for mm in 0..dim {
            let expected =
                Complex::from_polar(1.0, -(energies[mm] - energies[nn]) * t_total);
            let actual = c[(nn, nn)].conj() * c[(mm, mm)];
            diagonal_phase_error = diagonal_phase_error.max((actual - expected).norm());
            for a in 0..dim {
                for b in 0..dim {
                    if a == nn && b == mm {
                        continue;
                    }
                    let value = c[(nn, a)].conj() * c[(mm, b)];
                    off_diagonal = off_diagonal.max(value.norm());
                }
            }
        }
    }
    Ok(EigenbasisReport { off_diagonal, diagonal_phase_error, degenerate_gap: degenerate, energies })
}
