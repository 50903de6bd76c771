//! Pauli strings in the symplectic (bitmask) representation.
//!
//! A Pauli string on `n` qubits is stored as a pair of bitmasks `(x_mask, z_mask)`:
//! bit `q-1` of `x_mask` is set when qubit `q` carries an X or Y factor, and bit
//! `q-1` of `z_mask` when it carries a Z or Y factor. The operator denoted by a
//! mask pair is the Hermitian product `i^{|x & z|} X^x Z^z`, so `(1,1)` on a qubit
//! is exactly Y. Multiplication reduces to XORs plus a phase in `{1, i, -1, -i}`.
//!
//! Qubits are numbered `1..=n`; qubit 1 is the leftmost character in the text
//! rendering (`"XIZY"` puts X on qubit 1) and the least significant mask bit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Hard cap on qubit count: masks are single machine words.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count {0} exceeds the supported maximum of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("qubit index {qubit} outside [1, {n_qubits}]")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("operands act on {left} and {right} qubits")]
    QubitCountMismatch { left: usize, right: usize },
    #[error("invalid Pauli character {0:?} (expected I, X, Y or Z)")]
    InvalidCharacter(char),
    #[error("empty Pauli string")]
    Empty,
}

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    /// Two-bit code `(z << 1) | x`; identity is 0.
    pub fn code(self) -> u64 {
        match self {
            Axis::I => 0b00,
            Axis::X => 0b01,
            Axis::Y => 0b11,
            Axis::Z => 0b10,
        }
    }

    pub fn from_code(code: u64) -> Axis {
        match code & 0b11 {
            0b00 => Axis::I,
            0b01 => Axis::X,
            0b11 => Axis::Y,
            _ => Axis::Z,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Fourth root of unity attached to Pauli products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    /// The phase `i^k`, reduced modulo 4.
    pub fn from_exponent(k: i64) -> Phase {
        match k.rem_euclid(4) {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    /// Value as `(re, im)`.
    pub fn to_complex(self) -> (f64, f64) {
        match self {
            Phase::PlusOne => (1.0, 0.0),
            Phase::PlusI => (0.0, 1.0),
            Phase::MinusOne => (-1.0, 0.0),
            Phase::MinusI => (0.0, -1.0),
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(i64::from(self.exponent()) + i64::from(other.exponent()))
    }
}

/// Hermitian Pauli string on a fixed qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

/// Pauli string together with the phase produced by a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhasedString {
    pub phase: Phase,
    pub string: PauliString,
}

fn register_mask(n_qubits: usize) -> u64 {
    if n_qubits == 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

impl PauliString {
    /// Identity string on `n_qubits` qubits.
    pub fn identity(n_qubits: usize) -> Result<PauliString, PauliError> {
        if n_qubits == 0 {
            return Err(PauliError::Empty);
        }
        if n_qubits > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        Ok(PauliString { n_qubits, x_mask: 0, z_mask: 0 })
    }

    /// String from raw masks; bits above `n_qubits` are rejected implicitly by masking.
    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<PauliString, PauliError> {
        let mut p = PauliString::identity(n_qubits)?;
        let m = register_mask(n_qubits);
        p.x_mask = x_mask & m;
        p.z_mask = z_mask & m;
        Ok(p)
    }

    /// Single-qubit Pauli embedded in an `n_qubits` register (1-based `qubit`).
    pub fn single(n_qubits: usize, qubit: usize, axis: Axis) -> Result<PauliString, PauliError> {
        let mut p = PauliString::identity(n_qubits)?;
        p.set_axis(qubit, axis)?;
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Factor on `qubit` (1-based).
    pub fn axis(&self, qubit: usize) -> Result<Axis, PauliError> {
        self.check_qubit(qubit)?;
        let b = qubit - 1;
        let code = (((self.z_mask >> b) & 1) << 1) | ((self.x_mask >> b) & 1);
        Ok(Axis::from_code(code))
    }

    pub fn set_axis(&mut self, qubit: usize, axis: Axis) -> Result<(), PauliError> {
        self.check_qubit(qubit)?;
        let b = qubit - 1;
        let code = axis.code();
        self.x_mask = (self.x_mask & !(1 << b)) | ((code & 1) << b);
        self.z_mask = (self.z_mask & !(1 << b)) | (((code >> 1) & 1) << b);
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), PauliError> {
        if qubit == 0 || qubit > self.n_qubits {
            return Err(PauliError::QubitOutOfRange { qubit, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    /// Number of X/Y factors; the quantity damped by Z-dephasing.
    pub fn weight(&self) -> u32 {
        self.x_mask.count_ones()
    }

    /// Number of non-identity factors.
    pub fn support_size(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Diagonal in the computational basis: no X or Y factor anywhere.
    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    /// Bijective index in `[0, 4^n)`: qubit `q` contributes its two-bit code at
    /// base-4 digit `q-1`, so the identity maps to 0.
    pub fn index(&self) -> u64 {
        let mut idx = 0u64;
        for q in (1..=self.n_qubits).rev() {
            let b = q - 1;
            let code = (((self.z_mask >> b) & 1) << 1) | ((self.x_mask >> b) & 1);
            idx = (idx << 2) | code;
        }
        idx
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(n_qubits: usize, index: u64) -> Result<PauliString, PauliError> {
        if n_qubits > 32 && n_qubits <= MAX_QUBITS {
            // index space exceeds u64 beyond 32 qubits
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        let mut p = PauliString::identity(n_qubits)?;
        for q in 1..=n_qubits {
            let code = (index >> (2 * (q - 1))) & 0b11;
            p.x_mask |= (code & 1) << (q - 1);
            p.z_mask |= ((code >> 1) & 1) << (q - 1);
        }
        Ok(p)
    }

    /// Product `self * other` as a phase and a Pauli string.
    ///
    /// With `P(x,z) = i^{|x&z|} X^x Z^z`, the product phase is
    /// `i^{|x1&z1| + |x2&z2| - |x3&z3| + 2|z1&x2|}` where `(x3,z3)` are the
    /// XORed masks.
    pub fn multiply(&self, other: &PauliString) -> Result<PhasedString, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitCountMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let x3 = self.x_mask ^ other.x_mask;
        let z3 = self.z_mask ^ other.z_mask;
        let k = i64::from((self.x_mask & self.z_mask).count_ones())
            + i64::from((other.x_mask & other.z_mask).count_ones())
            - i64::from((x3 & z3).count_ones())
            + 2 * i64::from((self.z_mask & other.x_mask).count_ones());
        Ok(PhasedString {
            phase: Phase::from_exponent(k),
            string: PauliString { n_qubits: self.n_qubits, x_mask: x3, z_mask: z3 },
        })
    }

    /// Whether the two strings commute (they either commute or anticommute).
    pub fn commutes_with(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::QubitCountMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let anti = ((self.x_mask & other.z_mask).count_ones()
            + (self.z_mask & other.x_mask).count_ones())
            % 2;
        Ok(anti == 0)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n_qubits {
            let axis = self.axis(q).expect("qubit in range");
            write!(f, "{}", axis.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(PauliError::Empty);
        }
        let mut p = PauliString::identity(s.chars().count())?;
        for (i, c) in s.chars().enumerate() {
            let axis = match c.to_ascii_uppercase() {
                'I' => Axis::I,
                'X' => Axis::X,
                'Y' => Axis::Y,
                'Z' => Axis::Z,
                other => return Err(PauliError::InvalidCharacter(other)),
            };
            p.set_axis(i + 1, axis)?;
        }
        Ok(p)
    }
}
