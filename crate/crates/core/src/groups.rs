//! Decoupling groups and their control paths.
//!
//! Two constructions are provided: the nested group, which runs the
//! single-qubit group `{1, Z, X, Y}` on every even qubit (`4^m` elements for
//! `N = 2m` or `2m + 1`), and the 4-element collective group that alternates
//! `Z` on all odd qubits with `Y` on all even qubits. Qubits are numbered
//! from 1 in labels and tables, matching the usual chain notation; internally
//! qubit `q` (1-based) is index `q - 1`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_by_pauli, CMat};
use crate::pauli::{Letter, PauliString};

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingGroup {
    label: String,
    n_qubits: usize,
    elements: Vec<PauliString>,
    closed: bool,
}

impl DecouplingGroup {
    /// Element list in canonical path order. The first element must be the
    /// identity and all elements must be distinct up to phase.
    pub fn new(label: impl Into<String>, elements: Vec<PauliString>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::invalid("decoupling group needs at least one element"))?;
        let n = first.n_qubits();
        if !first.is_identity() {
            return Err(Error::invalid("first group element must be the identity"));
        }
        let elements: Vec<PauliString> = elements.into_iter().map(PauliString::phase_free).collect();
        for e in &elements {
            if e.n_qubits() != n {
                return Err(Error::QubitMismatch {
                    left: n,
                    right: e.n_qubits(),
                });
            }
        }
        let mut sorted = elements.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("group elements must be distinct"));
        }
        let closed = elements.iter().all(|a| {
            elements
                .iter()
                .all(|b| sorted.binary_search(&(*a * *b).phase_free()).is_ok())
        });
        let mut label = label.into();
        label.push_str(if closed { ",closed" } else { ",open" });
        Ok(DecouplingGroup {
            label,
            n_qubits: n,
            elements,
            closed,
        })
    }

    /// `{1}` on `n` qubits.
    pub fn trivial(n: usize) -> Self {
        DecouplingGroup::new(format!("trivial(N={n}"), vec![PauliString::identity(n)])
            .map(|mut g| {
                g.label.push(')');
                g
            })
            .expect("identity group is valid")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> PauliString {
        self.elements[j]
    }

    /// Whether the element set is closed under phase-free multiplication.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn canonical_path(&self) -> PulsePath {
        PulsePath {
            order: (0..self.len()).collect(),
        }
    }

    /// Text table with one row per qubit that any element acts on and one
    /// column per path position.
    pub fn table(&self, path: &PulsePath) -> String {
        let mut rows: Vec<usize> = (0..self.n_qubits)
            .filter(|&q| self.elements.iter().any(|e| e.letter(q) != Letter::I))
            .collect();
        if rows.is_empty() {
            rows.push(0);
        }
        let mut out = String::new();
        for q in rows {
            let _ = write!(out, "q{}:", q + 1);
            for &j in path.order() {
                let _ = write!(out, " {}", self.elements[j].letter(q).as_char());
            }
            out.push('\n');
        }
        out
    }
}

/// Order in which the group is traversed during one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulsePath {
    order: Vec<usize>,
}

impl PulsePath {
    pub fn new(order: Vec<usize>, group_len: usize) -> Result<Self> {
        if order.len() != group_len {
            return Err(Error::invalid(format!(
                "path visits {} elements, group has {group_len}",
                order.len()
            )));
        }
        let mut seen = vec![false; group_len];
        for &j in &order {
            if j >= group_len || core::mem::replace(&mut seen[j], true) {
                return Err(Error::invalid("path must be a permutation of the group"));
            }
        }
        Ok(PulsePath { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Frames `g_{order[k]}`, one per slot.
    pub fn frames(&self, group: &DecouplingGroup) -> Vec<PauliString> {
        self.order.iter().map(|&j| group.element(j)).collect()
    }

    /// Pulses `P_k = g_{order[k]} g_{order[k-1]}^dag` for `k = 1..=|G|`, the
    /// last one closing the cycle back to `g_{order[0]}`.
    pub fn pulses(&self, group: &DecouplingGroup) -> Vec<PauliString> {
        let frames = self.frames(group);
        let m = frames.len();
        (1..=m)
            .map(|k| frames[k % m] * frames[k - 1].adjoint())
            .collect()
    }
}

/// Digit `i` of the base-4 reflected Gray code of `j`.
fn gray_digit(j: usize, i: u32) -> usize {
    let q = j / 4usize.pow(i);
    if (q / 4) % 2 == 0 {
        q % 4
    } else {
        3 - q % 4
    }
}

/// Nested group for an `n`-qubit chain, `m = floor(n/2)` active (even)
/// qubits, traversed along a base-4 reflected Gray code.
///
/// Even qubit `r` (0-based among the even qubits, i.e. chain qubit `2r + 2`)
/// uses the alphabet `(1, Z, X, Y)` when `r` is even and `(1, Z, Y, X)` when
/// `r` is odd; the least significant Gray digit drives the first even qubit.
/// Consecutive elements differ on exactly one qubit, so every pulse of the
/// canonical path is a single-qubit rotation.
pub fn build_nested_group(n: usize) -> Result<DecouplingGroup> {
    if n < 2 {
        return Err(Error::invalid("nested group needs N >= 2"));
    }
    let m = n / 2;
    if m > 6 {
        return Err(Error::TooManyQubits {
            requested: n,
            max: 13,
        });
    }
    const FORWARD: [Letter; 4] = [Letter::I, Letter::Z, Letter::X, Letter::Y];
    const SWAPPED: [Letter; 4] = [Letter::I, Letter::Z, Letter::Y, Letter::X];
    let size = 4usize.pow(m as u32);
    let elements = (0..size)
        .map(|j| {
            let mut s = PauliString::identity(n);
            for r in 0..m {
                let alphabet = if r % 2 == 0 { &FORWARD } else { &SWAPPED };
                s.set(2 * r + 1, alphabet[gray_digit(j, r as u32)]);
            }
            s
        })
        .collect();
    DecouplingGroup::new(format!("nested(N={n},m={m}"), elements).map(close_label)
}

/// `{1, Z_1 Z_3 ..., Z_1 Y_2 Z_3 Y_4 ..., Y_2 Y_4 ...}` for even `n`.
pub fn build_collective_group(n: usize) -> Result<DecouplingGroup> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "collective group needs an even N >= 2, got {n}"
        )));
    }
    let odd = (0..n).step_by(2);
    let even = (1..n).step_by(2);
    let z_odd = PauliString::on_qubits(n, odd, Letter::Z);
    let y_even = PauliString::on_qubits(n, even, Letter::Y);
    let elements = vec![
        PauliString::identity(n),
        z_odd,
        (z_odd * y_even).phase_free(),
        y_even,
    ];
    DecouplingGroup::new(format!("collective(N={n}"), elements).map(close_label)
}

fn close_label(mut g: DecouplingGroup) -> DecouplingGroup {
    g.label.push(')');
    g
}

/// `(1/|G|) sum_j g_j^dag H g_j`.
pub fn group_average(group: &DecouplingGroup, h: &CMat) -> Result<CMat> {
    let d = 1usize << group.n_qubits();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: h.nrows(),
        });
    }
    let mut acc = CMat::zeros(d, d);
    for g in group.elements() {
        acc += conjugate_by_pauli(h, g)?;
    }
    Ok(acc / num_complex::Complex64::new(group.len() as f64, 0.0))
}

/// Number of nested-group elements acting on exactly `R` even qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrCounts {
    pub m: u32,
    /// `counts[R] = 3^R * C(m, R)`.
    pub counts: Vec<u128>,
}

impl QrCounts {
    pub fn total(&self) -> u128 {
        self.counts.iter().sum()
    }

    /// Indices attaining the largest count.
    pub fn argmax(&self) -> Vec<usize> {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        (0..self.counts.len())
            .filter(|&r| self.counts[r] == best)
            .collect()
    }

    /// Maxima predicted by the closed-form rule: two maxima at
    /// `(3m-1)/4` and `(3m+3)/4` when `m = 3 mod 4`, otherwise the unique
    /// integer in `[(3m-1)/4, (3m+3)/4]`.
    pub fn predicted_maxima(&self) -> Vec<usize> {
        let m = self.m as usize;
        if m % 4 == 3 {
            vec![(3 * m - 1) / 4, (3 * m + 3) / 4]
        } else {
            // ceil((3m - 1) / 4)
            vec![(3 * m + 2) / 4]
        }
    }
}

pub fn q_r_counts(m: u32) -> Result<QrCounts> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    if m > 60 {
        return Err(Error::invalid("m above 60 overflows 128-bit counts"));
    }
    let mut counts = Vec::with_capacity(m as usize + 1);
    let mut binom: u128 = 1;
    let mut pow3: u128 = 1;
    for r in 0..=m as u128 {
        counts.push(pow3 * binom);
        binom = binom * (m as u128 - r) / (r + 1);
        pow3 *= 3;
    }
    Ok(QrCounts { m, counts })
}
