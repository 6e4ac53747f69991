//! Average-Hamiltonian diagnostics for one control cycle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::Schur;
use num_complex::Complex64;
// Float math for no_std builds; shadowed by inherent methods under std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{commutator, conjugate_by_pauli, hermitian_part, matmul, unitarity_deviation, CMat};
use crate::pauli::{decompose, PauliDecomposition, PauliString};
use crate::schedule::ProtocolKind;

/// Margin to `+-pi` below which an eigenphase is considered ambiguous.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// One cycle of equal-length slots with the frame of each slot.
#[derive(Debug, Clone)]
pub struct CycleDescription<'a> {
    h: &'a CMat,
    frames: Vec<PauliString>,
    dt: f64,
}

impl<'a> CycleDescription<'a> {
    pub fn new(h: &'a CMat, frames: Vec<PauliString>, dt: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("cycle needs at least one slot"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive and finite"));
        }
        let d = 1usize << frames[0].n_qubits();
        if frames.iter().any(|f| f.n_qubits() != frames[0].n_qubits()) {
            return Err(Error::invalid("cycle frames have mixed qubit counts"));
        }
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: h.nrows(),
            });
        }
        let frames = frames.into_iter().map(PauliString::phase_free).collect();
        Ok(CycleDescription { h, frames, dt })
    }

    pub fn frames(&self) -> &[PauliString] {
        &self.frames
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn cycle_time(&self) -> f64 {
        self.frames.len() as f64 * self.dt
    }

    /// Toggling-frame Hamiltonians `g_k^dag H g_k`.
    pub fn toggled(&self) -> Vec<CMat> {
        self.frames
            .iter()
            .map(|g| conjugate_by_pauli(self.h, g).expect("dimensions checked at construction"))
            .collect()
    }

    pub fn magnus0(&self) -> CMat {
        magnus0_segments(&self.toggled())
    }

    pub fn magnus1(&self) -> CMat {
        magnus1_segments(&self.toggled(), self.dt)
    }
}

/// `(1/M) sum_k H_k` for equal slots.
pub fn magnus0_segments(hs: &[CMat]) -> CMat {
    let d = hs[0].nrows();
    let mut acc = CMat::zeros(d, d);
    for h in hs {
        acc += h;
    }
    hermitian_part(&(acc / Complex64::new(hs.len() as f64, 0.0)))
}

/// `(-i dt^2 / (2 T_c)) sum_{k>l} [H_k, H_l]` for equal slots of length `dt`.
pub fn magnus1_segments(hs: &[CMat], dt: f64) -> CMat {
    let d = hs[0].nrows();
    let mut acc = CMat::zeros(d, d);
    let mut earlier = CMat::zeros(d, d);
    for h in hs {
        acc += commutator(h, &earlier);
        earlier += h;
    }
    let tc = hs.len() as f64 * dt;
    let scale = Complex64::new(0.0, -dt * dt / (2.0 * tc));
    hermitian_part(&(acc * scale))
}

/// `H_eff = (i / T_c) log U` on the principal branch.
///
/// The unitary is diagonalized by a complex Schur decomposition, which for a
/// normal matrix yields an orthonormal eigenbasis even across degeneracies.
/// An eigenphase within [`BRANCH_MARGIN`] of `+-pi` is reported as an error.
pub fn effective_hamiltonian(u: &CMat, cycle_time: f64) -> Result<CMat> {
    if !(cycle_time > 0.0 && cycle_time.is_finite()) {
        return Err(Error::invalid("cycle time must be positive and finite"));
    }
    let deviation = unitarity_deviation(u);
    if deviation > 1e-8 {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: 1e-8,
        });
    }
    let d = u.nrows();
    let (q, t) = Schur::new(u.clone()).unpack();
    let mut phases = Vec::with_capacity(d);
    for k in 0..d {
        let phase = t[(k, k)].arg();
        let margin = core::f64::consts::PI - phase.abs();
        if margin < BRANCH_MARGIN {
            return Err(Error::BranchAmbiguity { phase, margin });
        }
        phases.push(phase);
    }
    // U = Q diag(e^{i phi}) Q^dag = exp(-i H T)  =>  H = -Q diag(phi) Q^dag / T.
    let scaled = CMat::from_fn(d, d, |i, k| q[(i, k)] * (-phases[k] / cycle_time));
    Ok(hermitian_part(&matmul(&scaled, &q.adjoint())))
}

/// Pauli expansion of `h` keeping terms above `threshold`.
pub fn residual_terms(h: &CMat, n_qubits: usize, threshold: f64) -> Result<PauliDecomposition> {
    Ok(decompose(h, n_qubits)?.filtered(threshold))
}

/// Default residual threshold `1e-12 kappa`.
pub fn default_residual_threshold(kappa: f64) -> f64 {
    1e-12 * kappa
}

/// Exponents of the order-of-magnitude infidelity estimate
/// `T^a L^b kappa^c`, with `L = |G| dt` (or `dt` alone for NRD).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub tag: String,
    pub time_exponent: f64,
    pub length_exponent: f64,
    pub kappa_exponent: f64,
    /// Whether the length scale is the cycle `|G| dt` rather than `dt`.
    pub uses_cycle: bool,
}

impl BoundSpec {
    pub fn for_protocol(kind: ProtocolKind) -> Result<Self> {
        let (tag, a, b, c, cycle) = match kind {
            ProtocolKind::Pdd => ("PDD", 2.0, 2.0, 4.0, true),
            ProtocolKind::Sdd => ("SDD", 2.0, 4.0, 6.0, true),
            ProtocolKind::Nrd => ("NRD", 1.0, 1.0, 2.0, false),
            ProtocolKind::Rpd | ProtocolKind::Prpd => ("RPD", 1.0, 3.0, 4.0, true),
            ProtocolKind::EmdGroup | ProtocolKind::EmdPauli => ("EMD", 1.0, 3.0, 4.0, true),
            ProtocolKind::Srpd => ("SRPD", 1.0, 5.0, 6.0, true),
            other => {
                return Err(Error::invalid(format!(
                    "no decay bound tabulated for protocol {other}"
                )))
            }
        };
        Ok(BoundSpec {
            tag: tag.into(),
            time_exponent: a,
            length_exponent: b,
            kappa_exponent: c,
            uses_cycle: cycle,
        })
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Self::for_protocol(tag.parse()?)
    }
}

/// `T^a L^b kappa^c` with unit prefactor.
pub fn decay_bound(spec: &BoundSpec, horizon: f64, dt: f64, group_len: usize, kappa: f64) -> Result<f64> {
    for (name, v) in [("T", horizon), ("dt", dt), ("kappa", kappa)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if group_len == 0 {
        return Err(Error::invalid("group size must be positive"));
    }
    let length = if spec.uses_cycle { group_len as f64 * dt } else { dt };
    Ok(horizon.powf(spec.time_exponent) * length.powf(spec.length_exponent) * kappa.powf(spec.kappa_exponent))
}
