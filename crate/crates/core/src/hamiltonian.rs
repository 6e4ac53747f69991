//! Nearest-neighbour Heisenberg chain
//!
//! ```text
//! H = sum_i (omega + delta_i) Z_i / 2 + J sum_i (X_i X_{i+1} + Y_i Y_{i+1} + Delta Z_i Z_{i+1})
//! ```
//!
//! in the lab frame or in the frame rotating at the common frequency
//! `omega`, where only the detunings `delta_i` remain. Energies are in units
//! of `J` (hbar = 1), times in units of `1/J`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
// Float math for no_std builds; shadowed by inherent methods under std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{connected_blocks, frobenius, hermitian_deviation, matmul, CMat, ZERO};
use crate::pauli::{Letter, PauliDecomposition, PauliString};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainSpec {
    pub n_qubits: usize,
    pub coupling: f64,
    pub anisotropy: f64,
    /// `delta_i = omega_i - omega`, one per qubit.
    pub detunings: Vec<f64>,
}

impl ChainSpec {
    /// Chain with all detunings zero.
    pub fn new(n_qubits: usize, coupling: f64, anisotropy: f64) -> Result<Self> {
        let spec = ChainSpec {
            n_qubits,
            coupling,
            anisotropy,
            detunings: vec![0.0; n_qubits],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_detunings(mut self, detunings: Vec<f64>) -> Result<Self> {
        self.detunings = detunings;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::invalid("chain needs at least one qubit"));
        }
        if self.detunings.len() != self.n_qubits {
            return Err(Error::invalid(format!(
                "{} detunings given for {} qubits",
                self.detunings.len(),
                self.n_qubits
            )));
        }
        let finite = self.coupling.is_finite()
            && self.anisotropy.is_finite()
            && self.detunings.iter().all(|d| d.is_finite());
        if !finite {
            return Err(Error::invalid("chain parameters must be finite"));
        }
        Ok(())
    }

    /// Coupling terms `J (XX + YY + Delta ZZ)` on every bond.
    pub fn coupling_terms(&self) -> PauliDecomposition {
        let n = self.n_qubits;
        let mut dec = PauliDecomposition::new(n);
        for i in 0..n.saturating_sub(1) {
            for (letter, c) in [
                (Letter::X, self.coupling),
                (Letter::Y, self.coupling),
                (Letter::Z, self.coupling * self.anisotropy),
            ] {
                dec.add(PauliString::on_qubits(n, [i, i + 1], letter), c);
            }
        }
        dec
    }

    /// All Pauli terms of the Hamiltonian in the given frame.
    pub fn terms(&self, frame: Frame) -> PauliDecomposition {
        let mut dec = self.coupling_terms();
        let omega = match frame {
            Frame::Rotating => 0.0,
            Frame::Lab { omega } => omega,
        };
        for (i, delta) in self.detunings.iter().enumerate() {
            dec.add(PauliString::single(self.n_qubits, i, Letter::Z), (omega + delta) / 2.0);
        }
        dec
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Frame {
    Rotating,
    Lab { omega: f64 },
}

/// Eigendecomposition of one invariant block of `H`.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    /// Basis states spanning the block, ascending.
    pub indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors in the block's local basis.
    pub eigenvectors: CMat,
}

/// Dense Hermitian matrix with its spectrum cached at construction.
///
/// The spectrum is computed per connected block of the nonzero pattern. For
/// the chain Hamiltonian those are the total-magnetization sectors, and the
/// block structure is exact (no thresholding).
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    n_qubits: usize,
    matrix: CMat,
    blocks: Vec<SpectralBlock>,
}

impl HamiltonianMatrix {
    pub fn from_matrix(n_qubits: usize, matrix: CMat) -> Result<Self> {
        Self::from_matrix_capped(n_qubits, matrix, crate::DEFAULT_MAX_QUBITS)
    }

    pub fn from_matrix_capped(n_qubits: usize, matrix: CMat, max_qubits: usize) -> Result<Self> {
        if n_qubits > max_qubits {
            return Err(Error::TooManyQubits {
                requested: n_qubits,
                max: max_qubits,
            });
        }
        let d = 1usize << n_qubits;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: matrix.nrows(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        let tolerance = 1e-12 * frobenius(&matrix);
        if dev > tolerance {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance,
            });
        }
        let blocks = connected_blocks(&matrix)
            .into_iter()
            .map(|indices| {
                let s = indices.len();
                let sub = CMat::from_fn(s, s, |i, j| {
                    // Symmetrize so the solver sees an exactly Hermitian block.
                    (matrix[(indices[i], indices[j])] + matrix[(indices[j], indices[i])].conj()) * 0.5
                });
                let eig = SymmetricEigen::new(sub);
                SpectralBlock {
                    indices,
                    eigenvalues: eig.eigenvalues.iter().copied().collect(),
                    eigenvectors: eig.eigenvectors,
                }
            })
            .collect();
        Ok(HamiltonianMatrix {
            n_qubits,
            matrix,
            blocks,
        })
    }

    pub fn from_terms(terms: &PauliDecomposition) -> Result<Self> {
        let n = terms.n_qubits();
        if n > crate::DEFAULT_MAX_QUBITS {
            return Err(Error::TooManyQubits {
                requested: n,
                max: crate::DEFAULT_MAX_QUBITS,
            });
        }
        Self::from_matrix(n, terms.reconstruct()?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn blocks(&self) -> &[SpectralBlock] {
        &self.blocks
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter().copied())
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        ev
    }

    /// Dense eigenvector matrix; columns follow the block order.
    pub fn eigenvectors(&self) -> CMat {
        let d = self.dim();
        let mut v = CMat::zeros(d, d);
        let mut col = 0;
        for b in &self.blocks {
            for k in 0..b.indices.len() {
                for (i, &row) in b.indices.iter().enumerate() {
                    v[(row, col)] = b.eigenvectors[(i, k)];
                }
                col += 1;
            }
        }
        v
    }

    /// `f(H) = V diag(f(lambda)) V^dag` assembled block by block.
    pub fn spectral_map(&self, f: impl Fn(f64) -> Complex64) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for b in &self.blocks {
            let s = b.indices.len();
            let v = &b.eigenvectors;
            let scaled = CMat::from_fn(s, s, |i, k| v[(i, k)] * f(b.eigenvalues[k]));
            let blk = matmul(&scaled, &v.adjoint());
            for (i, &r) in b.indices.iter().enumerate() {
                for (j, &c) in b.indices.iter().enumerate() {
                    out[(r, c)] = blk[(i, j)];
                }
            }
        }
        out
    }

    /// `exp(-i H t)` from the cached spectrum.
    pub fn evolution(&self, t: f64) -> CMat {
        self.spectral_map(|l| Complex64::from_polar(1.0, -l * t))
    }

    /// `||V diag(lambda) V^dag - H||_F`.
    pub fn reconstruction_error(&self) -> f64 {
        frobenius(&(self.spectral_map(|l| Complex64::new(l, 0.0)) - &self.matrix))
    }

    /// Operator 2-norm `max |eig(H)|`.
    pub fn kappa(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter())
            .fold(0.0, |m: f64, l| m.max(l.abs()))
    }
}

pub fn build_lab_frame(spec: &ChainSpec, omega: f64) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    HamiltonianMatrix::from_terms(&spec.terms(Frame::Lab { omega }))
}

/// Rotating-frame Hamiltonian. The coupling part must commute with the total
/// `Z`, otherwise the frame change would leave time dependence behind; this
/// is checked on the built matrix.
pub fn build_rotating_frame(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    if spec.n_qubits > crate::DEFAULT_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: spec.n_qubits,
            max: crate::DEFAULT_MAX_QUBITS,
        });
    }
    let coupling = spec.coupling_terms().reconstruct()?;
    let leak = total_z_commutator_norm(&coupling, spec.n_qubits);
    if leak > 1e-12 * frobenius(&coupling).max(1.0) {
        return Err(Error::Numerical(format!(
            "coupling does not conserve total Z (commutator norm {leak:e})"
        )));
    }
    HamiltonianMatrix::from_terms(&spec.terms(Frame::Rotating))
}

/// `||[sum_i Z_i, M]||_F`, using that `sum_i Z_i` is diagonal.
pub fn total_z_commutator_norm(m: &CMat, n: usize) -> f64 {
    let d = m.nrows();
    let mag = |b: usize| n as f64 - 2.0 * (b.count_ones() as f64);
    let mut acc = 0.0;
    for j in 0..d {
        for i in 0..d {
            let e = m[(i, j)];
            if e != ZERO {
                acc += ((mag(i) - mag(j)) * e).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

pub fn kappa(h: &HamiltonianMatrix) -> f64 {
    h.kappa()
}

/// Outcome of the `kappa * T_c < 1` sufficient convergence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub kappa: f64,
    pub cycle_time: f64,
    pub converges: bool,
}

impl ConvergenceCheck {
    pub fn product(&self) -> f64 {
        self.kappa * self.cycle_time
    }

    pub fn warning(&self) -> Option<String> {
        (!self.converges).then(|| {
            format!(
                "kappa*T_c = {:.4} >= 1: the Magnus series is not guaranteed to converge",
                self.product()
            )
        })
    }
}

pub fn convergence_check(kappa: f64, cycle_time: f64) -> ConvergenceCheck {
    ConvergenceCheck {
        kappa,
        cycle_time,
        converges: kappa * cycle_time < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sorted_eigs_dense(m: &CMat) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn single_qubit_lab_frame() {
        let spec = ChainSpec::new(1, 0.7, 1.0).unwrap();
        let h = build_lab_frame(&spec, 2.0).unwrap();
        let z: PauliString = "Z".parse().unwrap();
        assert!(frobenius(&(h.matrix() - z.to_matrix().unwrap())) < 1e-15);
        assert_eq!(h.eigenvalues(), vec![-1.0, 1.0]);
    }

    #[test]
    fn two_qubit_isotropic_spectrum() {
        let spec = ChainSpec::new(2, 1.0, 1.0).unwrap();
        let h = build_lab_frame(&spec, 0.0).unwrap();
        // Independent oracle: dense solver on the full 4x4 matrix.
        let dense = sorted_eigs_dense(h.matrix());
        let cached = h.eigenvalues();
        for (a, b) in dense.iter().zip(&cached) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for (got, want) in cached.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(h.kappa(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn two_qubit_xy_spectrum() {
        let spec = ChainSpec::new(2, 1.0, 0.0).unwrap();
        let h = build_lab_frame(&spec, 0.0).unwrap();
        for (got, want) in h.eigenvalues().iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(h.kappa(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rotating_frame_drops_zeeman() {
        let spec = ChainSpec::new(3, 1.0, 0.5).unwrap();
        let hr = build_rotating_frame(&spec).unwrap();
        let hl = build_lab_frame(&spec, 0.0).unwrap();
        assert!(frobenius(&(hr.matrix() - hl.matrix())) < 1e-15);
        let h2 = build_rotating_frame(&ChainSpec::new(2, 1.0, 1.0).unwrap()).unwrap();
        for (got, want) in h2.eigenvalues().iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn coupling_conserves_magnetization() {
        let spec = ChainSpec::new(4, 1.3, 2.0).unwrap();
        let c = spec.coupling_terms().reconstruct().unwrap();
        assert!(total_z_commutator_norm(&c, 4) < 1e-12);
        // Sector structure: no element connects different total-Z sectors.
        let h = build_rotating_frame(&spec.with_detunings(vec![0.1, -0.2, 0.3, 0.0]).unwrap()).unwrap();
        for i in 0..16usize {
            for j in 0..16usize {
                if i.count_ones() != j.count_ones() {
                    assert_eq!(h.matrix()[(i, j)], ZERO);
                }
            }
        }
        assert_eq!(h.blocks().len(), 5);
    }

    #[test]
    fn terms_match_model_exactly() {
        let spec = ChainSpec::new(3, 0.8, 1.7)
            .unwrap()
            .with_detunings(vec![0.2, 0.0, -0.4])
            .unwrap();
        let h = build_rotating_frame(&spec).unwrap();
        let dec = crate::pauli::decompose(h.matrix(), 3).unwrap();
        let p = |s: &str| s.parse::<PauliString>().unwrap();
        let expected = [
            ("XXI", 0.8),
            ("YYI", 0.8),
            ("ZZI", 0.8 * 1.7),
            ("IXX", 0.8),
            ("IYY", 0.8),
            ("IZZ", 0.8 * 1.7),
            ("ZII", 0.1),
            ("IIZ", -0.2),
        ];
        assert_eq!(dec.len(), expected.len());
        for (s, c) in expected {
            assert_abs_diff_eq!(dec.coefficient(&p(s)), c, epsilon = 1e-15);
        }
    }

    #[test]
    fn spectral_reconstruction_and_hermiticity() {
        let spec = ChainSpec::new(6, 1.0, 5.0).unwrap();
        let h = build_rotating_frame(&spec).unwrap();
        let norm = frobenius(h.matrix());
        assert!(hermitian_deviation(h.matrix()) < 1e-12 * norm);
        assert!(h.reconstruction_error() < 1e-10 * norm);
    }

    #[test]
    fn kappa_of_zero_matrix() {
        let h = HamiltonianMatrix::from_matrix(2, CMat::zeros(4, 4)).unwrap();
        assert_eq!(h.kappa(), 0.0);
    }

    #[test]
    fn rejects_oversized_chain() {
        let spec = ChainSpec::new(11, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_rotating_frame(&spec),
            Err(Error::TooManyQubits { requested: 11, .. })
        ));
        assert!(matches!(
            build_lab_frame(&spec, 1.0),
            Err(Error::TooManyQubits { .. })
        ));
    }

    #[test]
    fn convergence_examples() {
        assert!(convergence_check(3.0, 0.1).converges);
        let bad = convergence_check(3.0, 1.0);
        assert!(!bad.converges);
        assert!(bad.warning().is_some());
        assert!(convergence_check(0.0, 1e6).converges);
    }

    #[test]
    fn evolution_matches_dense_exponential() {
        let spec = ChainSpec::new(3, 1.0, 0.3).unwrap();
        let h = build_rotating_frame(&spec).unwrap();
        let u = h.evolution(0.37);
        let oracle = crate::linalg::expm_hermitian(h.matrix(), 0.37);
        assert!(frobenius(&(u - oracle)) < 1e-12);
    }
}
