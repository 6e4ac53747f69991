//! Dense complex helpers shared by the analysis modules.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
// Float math for no_std builds; shadowed by inherent methods under std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Dense complex matrix (column-major, nalgebra layout).
pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}

/// `||M - M^dag||_F`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `||U^dag U - 1||_F`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let g = matmul(&u.adjoint(), u);
    frobenius(&(g - CMat::identity(u.nrows(), u.ncols())))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    matmul(a, b) - matmul(b, a)
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Dense product through the blocked complex GEMM kernel.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // Column-major: element (i, j) at i + j * nrows.
    unsafe {
        gemm_raw(
            m,
            k,
            n,
            a.as_ptr(),
            (1, m as isize),
            b.as_ptr(),
            (1, k as isize),
            c.as_mut_ptr(),
            (1, m as isize),
            false,
        );
    }
    c
}

/// `C (+)= A B` for complex matrices with arbitrary strides `(row, col)`.
///
/// # Safety
/// Pointers must address matrices of the stated shapes and strides, and `c`
/// must not alias `a` or `b`.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    a: *const Complex64,
    a_stride: (isize, isize),
    b: *const Complex64,
    b_stride: (isize, isize),
    c: *mut Complex64,
    c_stride: (isize, isize),
    accumulate: bool,
) {
    use matrixmultiply::CGemmOption::Standard;
    // Complex64 is repr(C) { re, im }, identical in layout to [f64; 2].
    matrixmultiply::zgemm(
        Standard,
        Standard,
        m,
        k,
        n,
        [1.0, 0.0],
        a as *const [f64; 2],
        a_stride.0,
        a_stride.1,
        b as *const [f64; 2],
        b_stride.0,
        b_stride.1,
        if accumulate { [1.0, 0.0] } else { [0.0, 0.0] },
        c as *mut [f64; 2],
        c_stride.0,
        c_stride.1,
    );
}

/// `(-1)^{popcount(b & z)}` as a float.
#[inline]
pub(crate) fn parity_sign(b: usize, z: u64) -> f64 {
    if (b as u64 & z).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `g^dag M g` as a signed permutation of `M`, `O(d^2)`.
///
/// The phase of `g` cancels, so only its letters matter.
pub fn conjugate_by_pauli(m: &CMat, g: &PauliString) -> Result<CMat> {
    let d = 1usize << g.n_qubits();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: m.nrows(),
        });
    }
    let (xb, zb) = g.basis_masks();
    let x = xb as usize;
    let signs: Vec<f64> = (0..d).map(|a| parity_sign(a, zb)).collect();
    Ok(CMat::from_fn(d, d, |a, b| {
        m[(a ^ x, b ^ x)] * (signs[a] * signs[b])
    }))
}

/// `exp(-i H t)` for Hermitian `H`, through a dense eigendecomposition.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = h.nrows();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -l * t))
        .collect();
    let scaled = CMat::from_fn(d, d, |i, j| v[(i, j)] * phases[j]);
    matmul(&scaled, &v.adjoint())
}

/// Hermitian part `(M + M^dag) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Union-find partition of `0..d` into the connected components of the
/// nonzero pattern of `m`. Components are returned with sorted indices,
/// ordered by their smallest index.
pub(crate) fn connected_blocks(m: &CMat) -> Vec<Vec<usize>> {
    let d = m.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..d {
        for i in 0..j {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; d];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use proptest::prelude::*;

    fn random_matrix(d: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn matmul_matches_nalgebra() {
        let a = random_matrix(7, 1);
        let b = random_matrix(7, 2);
        assert!(frobenius(&(matmul(&a, &b) - &a * &b)) < 1e-12);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&CMat::zeros(4, 4), 1.3);
        assert!(frobenius(&(u - CMat::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn blocks_of_diagonal_matrix_are_singletons() {
        let m = CMat::identity(4, 4);
        assert_eq!(connected_blocks(&m), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    proptest! {
        /// Signed-permutation conjugation agrees with the explicit triple
        /// product for random strings on up to four qubits.
        #[test]
        fn conjugation_is_signed_permutation(n in 1usize..=4, x in any::<u64>(), z in any::<u64>(), seed in any::<u64>()) {
            let w = (1u64 << n) - 1;
            let g = PauliString::from_masks(n, x & w, z & w);
            let m = random_matrix(1 << n, seed);
            let gm = g.to_matrix().unwrap();
            let explicit = gm.adjoint() * &m * &gm;
            let fast = conjugate_by_pauli(&m, &g).unwrap();
            prop_assert!(frobenius(&(explicit - fast)) < 1e-12);
        }
    }
}
