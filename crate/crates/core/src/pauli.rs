//! N-qubit Pauli strings with exact phase tracking.
//!
//! A string is stored as two bitmasks (`x`, `z`) plus a power of `i`. Bit `q`
//! of each mask refers to qubit `q` (0-based, qubit 0 is the leftmost tensor
//! factor). The letter on a qubit is `I = (0,0)`, `X = (1,0)`, `Z = (0,1)`,
//! `Y = (1,1)`, and the operator represented is
//!
//! ```text
//! i^phase * i^{|x & z|} * X^x Z^z
//! ```
//!
//! so a string with phase `+1` is always the Hermitian Pauli operator.

mod decomposition;

pub use decomposition::{decompose, PauliDecomposition};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Strings are limited to the width of one mask word.
pub const MAX_STRING_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// A power of `i`, i.e. an element of `Z4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub const fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub const fn exponent(self) -> u8 {
        self.0
    }

    pub const fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// `Some(+1)` or `Some(-1)` for real phases.
    pub fn as_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
    phase: Phase,
}

fn width_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Reverses the low `n` bits of `mask`. Converts between qubit order and
/// computational-basis bit order (qubit 0 is the most significant bit).
pub(crate) fn reverse_bits(mask: u64, n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    mask.reverse_bits() >> (64 - n)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_STRING_QUBITS, "at most {MAX_STRING_QUBITS} qubits");
        PauliString {
            n: n as u8,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    /// Builds a phase-free string from raw qubit-order masks.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_STRING_QUBITS, "at most {MAX_STRING_QUBITS} qubits");
        let w = width_mask(n);
        assert!(x & !w == 0 && z & !w == 0, "mask bits beyond qubit count");
        PauliString {
            n: n as u8,
            x,
            z,
            phase: Phase::ONE,
        }
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut s = PauliString::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            s.set(q, l);
        }
        s
    }

    /// `letter` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        let mut s = PauliString::identity(n);
        s.set(q, letter);
        s
    }

    /// Same letter on every listed qubit.
    pub fn on_qubits(n: usize, qubits: impl IntoIterator<Item = usize>, letter: Letter) -> Self {
        let mut s = PauliString::identity(n);
        for q in qubits {
            s.set(q, letter);
        }
        s
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        assert!(q < self.n_qubits(), "qubit {q} out of range");
        let (bx, bz) = letter.bits();
        let bit = 1u64 << q;
        self.x = (self.x & !bit) | if bx { bit } else { 0 };
        self.z = (self.z & !bit) | if bz { bit } else { 0 };
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    /// Drops the scalar phase, keeping the letters.
    pub fn phase_free(self) -> Self {
        self.with_phase(Phase::ONE)
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n_qubits()).map(move |q| self.letter(q))
    }

    pub fn letters_string(&self) -> String {
        self.letters().map(Letter::as_char).collect()
    }

    /// True when every letter is `I`, whatever the phase.
    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_qubits()).filter(move |&q| (self.x | self.z) >> q & 1 == 1)
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Exact product `self * rhs`.
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.n != rhs.n {
            return Err(Error::QubitMismatch {
                left: self.n_qubits(),
                right: rhs.n_qubits(),
            });
        }
        Ok(self.compose(rhs))
    }

    fn compose(&self, rhs: &PauliString) -> PauliString {
        let x = self.x ^ rhs.x;
        let z = self.z ^ rhs.z;
        // (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{z1.x2} X^x Z^z, then re-express the
        // bare product in terms of the Hermitian letters.
        let swap = (self.z & rhs.x).count_ones();
        let y3 = (x & z).count_ones();
        let k = self.phase.0 as u32 + rhs.phase.0 as u32 + self.y_count() + rhs.y_count() + 2 * swap
            + 4 * 64
            - y3;
        PauliString {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(k),
        }
    }

    pub fn adjoint(&self) -> PauliString {
        PauliString {
            phase: self.phase.conj(),
            ..*self
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Masks in computational-basis bit order, for matrix-level operations.
    pub fn basis_masks(&self) -> (u64, u64) {
        (
            reverse_bits(self.x, self.n_qubits()),
            reverse_bits(self.z, self.n_qubits()),
        )
    }

    /// `P|b> = c |b ^ x>`; returns `(b ^ x, c)`.
    pub fn apply_to_basis(&self, b: usize) -> (usize, Complex64) {
        let (xb, zb) = self.basis_masks();
        let sign = if (b as u64 & zb).count_ones() % 2 == 1 { 2 } else { 0 };
        let ph = Phase::from_exponent(self.phase.0 as u32 + self.y_count() + sign);
        (b ^ xb as usize, ph.to_complex())
    }

    /// Dense `2^n x 2^n` matrix, refusing chains above [`crate::DEFAULT_MAX_QUBITS`].
    pub fn to_matrix(&self) -> Result<CMat> {
        self.to_matrix_capped(crate::DEFAULT_MAX_QUBITS)
    }

    pub fn to_matrix_capped(&self, max_qubits: usize) -> Result<CMat> {
        let n = self.n_qubits();
        if n > max_qubits {
            return Err(Error::TooManyQubits {
                requested: n,
                max: max_qubits,
            });
        }
        let d = 1usize << n;
        let mut m = CMat::zeros(d, d);
        for b in 0..d {
            let (row, c) = self.apply_to_basis(b);
            m[(row, b)] = c;
        }
        Ok(m)
    }
}

/// Sign `s` with `g^dag h g = s h`. Phases of either argument do not matter.
pub fn conjugate_sign(g: &PauliString, h: &PauliString) -> Result<i8> {
    if g.n != h.n {
        return Err(Error::QubitMismatch {
            left: g.n_qubits(),
            right: h.n_qubits(),
        });
    }
    Ok(if g.commutes_with(h) { 1 } else { -1 })
}

/// Panics on mismatched qubit counts; use [`PauliString::multiply`] for a
/// fallible product.
impl Mul for PauliString {
    type Output = PauliString;
    fn mul(self, rhs: PauliString) -> PauliString {
        assert_eq!(self.n, rhs.n, "Pauli product of mismatched qubit counts");
        self.compose(&rhs)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\u{b7}", self.phase)?;
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `"+1·IZXY"`, `"-i*XX"` or a bare letter string `"IZXY"`.
    /// The minus sign may be ASCII or U+2212.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, letters) = match s.find(['\u{b7}', '*']) {
            Some(pos) => {
                let sep_len = s[pos..].chars().next().map_or(1, char::len_utf8);
                let phase = match s[..pos].replace('\u{2212}', "-").as_str() {
                    "+1" | "1" => Phase::ONE,
                    "-1" => Phase::MINUS_ONE,
                    "+i" | "i" => Phase::I,
                    "-i" => Phase::MINUS_I,
                    other => return Err(Error::Parse(alloc::format!("bad phase {other:?}"))),
                };
                (phase, &s[pos + sep_len..])
            }
            None => (Phase::ONE, s),
        };
        let letters: Vec<Letter> = letters
            .chars()
            .map(|c| {
                Letter::from_char(c)
                    .ok_or_else(|| Error::Parse(alloc::format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<_>>()?;
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        if letters.len() > MAX_STRING_QUBITS {
            return Err(Error::Parse(alloc::format!(
                "{} letters exceeds {MAX_STRING_QUBITS}",
                letters.len()
            )));
        }
        Ok(PauliString::from_letters(&letters).with_phase(phase))
    }
}
