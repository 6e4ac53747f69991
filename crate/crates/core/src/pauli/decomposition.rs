use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_complex::Complex64;

use super::{reverse_bits, Phase, PauliString};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_deviation, CMat};

/// Real expansion of a Hermitian operator in the Hermitian Pauli basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliDecomposition {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliDecomposition {
    pub fn new(n_qubits: usize) -> Self {
        PauliDecomposition {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Adds `coefficient` to the term for `string` (phase dropped).
    pub fn add(&mut self, string: PauliString, coefficient: f64) {
        assert_eq!(string.n_qubits(), self.n_qubits);
        let key = string.phase_free();
        let c = self.terms.entry(key).or_insert(0.0);
        *c += coefficient;
        if *c == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms
            .get(&string.phase_free())
            .copied()
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.terms.iter()
    }

    /// Terms with `|coefficient| > threshold`.
    pub fn filtered(&self, threshold: f64) -> PauliDecomposition {
        PauliDecomposition {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > threshold)
                .map(|(s, c)| (*s, *c))
                .collect(),
        }
    }

    /// `sum_s c_s s` as a dense matrix.
    pub fn reconstruct(&self) -> Result<CMat> {
        let d = 1usize << self.n_qubits;
        if self.n_qubits > crate::DEFAULT_MAX_QUBITS {
            return Err(Error::TooManyQubits {
                requested: self.n_qubits,
                max: crate::DEFAULT_MAX_QUBITS,
            });
        }
        let mut m = CMat::zeros(d, d);
        for (s, &c) in &self.terms {
            for b in 0..d {
                let (row, v) = s.apply_to_basis(b);
                m[(row, b)] += v * c;
            }
        }
        Ok(m)
    }

    /// Terms sorted by decreasing magnitude (ties by string), one
    /// `coefficient pauli_string` line each.
    pub fn sorted(&self) -> Vec<(PauliString, f64)> {
        let mut v: Vec<(PauliString, f64)> = self.terms.iter().map(|(s, c)| (*s, *c)).collect();
        v.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        v
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (s, c) in self.sorted() {
            let _ = writeln!(out, "{c:+.12e} {}", s.letters_string());
        }
        out
    }
}

/// In-place unnormalized Walsh-Hadamard transform.
fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*a + *b, *a - *b);
                *a = s;
                *b = t;
            }
        }
        h *= 2;
    }
}

/// Pauli-basis coefficients `Tr(s H) / 2^n` of a Hermitian matrix.
///
/// For each bit-flip pattern `x` the entries `H[a][a^x]` are gathered and a
/// Walsh-Hadamard transform yields all phase patterns `z` at once, for a
/// total cost of `O(d^2 log d)`. Coefficients below `1e-14` of the largest
/// one are dropped as rounding noise.
pub fn decompose(h: &CMat, n: usize) -> Result<PauliDecomposition> {
    if n > crate::DEFAULT_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: n,
            max: crate::DEFAULT_MAX_QUBITS,
        });
    }
    let d = 1usize << n;
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: h.nrows(),
        });
    }
    let norm = frobenius(h);
    let dev = hermitian_deviation(h);
    let tolerance = 1e-10 * norm;
    if dev > tolerance {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance,
        });
    }
    let mut raw: Vec<(PauliString, f64)> = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    for x in 0..d {
        for (a, slot) in buf.iter_mut().enumerate() {
            *slot = h[(a, a ^ x)];
        }
        walsh_hadamard(&mut buf);
        for (z, &w) in buf.iter().enumerate() {
            let y = (x & z).count_ones();
            let c = Phase::from_exponent(y).to_complex() * w / d as f64;
            if c.re != 0.0 {
                let s = PauliString::from_masks(n, reverse_bits(x as u64, n), reverse_bits(z as u64, n));
                raw.push((s, c.re));
            }
        }
    }
    let largest = raw.iter().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
    let mut out = PauliDecomposition::new(n);
    for (s, c) in raw {
        if c.abs() > 1e-14 * largest {
            out.terms.insert(s, c);
        }
    }
    Ok(out)
}
