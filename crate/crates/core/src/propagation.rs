//! Stepwise evolution of the logical-frame propagator.
//!
//! Each slot multiplies the running propagator on the left by `g^dag U0 g`.
//! `U0 = exp(-i H dt)` inherits the block structure of `H` (the
//! magnetization sectors for the chain), and conjugating by a Pauli string
//! with flip mask `x` maps a block on index set `S` to one on `S ^ x` with
//! sign flips only. A step is therefore a handful of small dense multiplies
//! on gathered rows instead of one `d x d` product.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Float math for no_std builds; shadowed by inherent methods under std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMatrix;
use crate::linalg::{gemm_raw, matmul, parity_sign, CMat, ONE, ZERO};
use crate::pauli::PauliString;
use crate::schedule::Schedule;

/// Drift `||U^dag U - 1||_F` above which the propagator is re-projected.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-11;
/// Steps between drift checks.
pub const RENORMALIZE_INTERVAL: u64 = 1000;

#[derive(Debug, Clone)]
struct StepBlock {
    indices: Vec<usize>,
    /// Row-major block of `U0`.
    u0: Vec<Complex64>,
}

/// `exp(-i H dt)` kept in block form.
#[derive(Debug, Clone)]
pub struct FreeStep {
    n_qubits: usize,
    dt: f64,
    blocks: Vec<StepBlock>,
}

impl FreeStep {
    pub fn new(h: &HamiltonianMatrix, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive and finite"));
        }
        let blocks = h
            .blocks()
            .iter()
            .map(|b| {
                let s = b.indices.len();
                let v = &b.eigenvectors;
                let scaled = CMat::from_fn(s, s, |i, k| {
                    v[(i, k)] * Complex64::from_polar(1.0, -b.eigenvalues[k] * dt)
                });
                let blk = matmul(&scaled, &v.adjoint());
                let mut u0 = Vec::with_capacity(s * s);
                for i in 0..s {
                    for j in 0..s {
                        u0.push(blk[(i, j)]);
                    }
                }
                StepBlock {
                    indices: b.indices.clone(),
                    u0,
                }
            })
            .collect();
        Ok(FreeStep {
            n_qubits: h.n_qubits(),
            dt,
            blocks,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dense(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for b in &self.blocks {
            let s = b.indices.len();
            for (i, &r) in b.indices.iter().enumerate() {
                for (j, &c) in b.indices.iter().enumerate() {
                    m[(r, c)] = b.u0[i * s + j];
                }
            }
        }
        m
    }

    /// `g^dag U0 g` as a dense matrix, for checks.
    pub fn conjugated(&self, g: &PauliString) -> Result<CMat> {
        crate::linalg::conjugate_by_pauli(&self.dense(), g)
    }
}

/// Running propagator of one realization.
#[derive(Debug, Clone)]
pub struct PropagationState {
    dim: usize,
    /// Row-major `U~`.
    u: Vec<Complex64>,
    frame: PauliString,
    steps: u64,
    dt: f64,
    renormalizations: u64,
    gather: Vec<Complex64>,
    product: Vec<Complex64>,
    kernel: Vec<Complex64>,
}

impl PropagationState {
    pub fn new(free: &FreeStep) -> Self {
        let d = free.dim();
        let mut u = vec![ZERO; d * d];
        for i in 0..d {
            u[i * d + i] = ONE;
        }
        let largest = free.blocks.iter().map(|b| b.indices.len()).max().unwrap_or(1);
        PropagationState {
            dim: d,
            u,
            frame: PauliString::identity(free.n_qubits),
            steps: 0,
            dt: free.dt,
            renormalizations: 0,
            gather: vec![ZERO; largest * d],
            product: vec![ZERO; largest * d],
            kernel: vec![ZERO; largest * largest],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frame of the most recent slot.
    pub fn frame(&self) -> PauliString {
        self.frame
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn elapsed(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn renormalizations(&self) -> u64 {
        self.renormalizations
    }

    /// `U~ <- (g^dag U0 g) U~`.
    pub fn step(&mut self, g: &PauliString, free: &FreeStep) -> Result<()> {
        if g.n_qubits() != free.n_qubits || free.dim() != self.dim {
            return Err(Error::QubitMismatch {
                left: free.n_qubits,
                right: g.n_qubits(),
            });
        }
        let d = self.dim;
        let (xb, zb) = g.basis_masks();
        let x = xb as usize;
        for b in &free.blocks {
            let s = b.indices.len();
            if s == 1 {
                let a = b.indices[0] ^ x;
                let c = b.u0[0];
                for v in &mut self.u[a * d..(a + 1) * d] {
                    *v *= c;
                }
                continue;
            }
            // (g^dag U0 g)[a_i][a_j] = sign(a_i) sign(a_j) U0[s_i][s_j], a = s ^ x.
            let signs: Vec<f64> = b.indices.iter().map(|&r| parity_sign(r ^ x, zb)).collect();
            for i in 0..s {
                for j in 0..s {
                    self.kernel[i * s + j] = b.u0[i * s + j] * (signs[i] * signs[j]);
                }
            }
            for (j, &r) in b.indices.iter().enumerate() {
                let a = r ^ x;
                self.gather[j * d..(j + 1) * d].copy_from_slice(&self.u[a * d..(a + 1) * d]);
            }
            // SAFETY: kernel is s x s, gather and product are s x d, all
            // row-major and distinct allocations.
            unsafe {
                gemm_raw(
                    s,
                    s,
                    d,
                    self.kernel.as_ptr(),
                    (s as isize, 1),
                    self.gather.as_ptr(),
                    (d as isize, 1),
                    self.product.as_mut_ptr(),
                    (d as isize, 1),
                    false,
                );
            }
            for (i, &r) in b.indices.iter().enumerate() {
                let a = r ^ x;
                self.u[a * d..(a + 1) * d].copy_from_slice(&self.product[i * d..(i + 1) * d]);
            }
        }
        self.frame = g.phase_free();
        self.steps += 1;
        if self.steps % RENORMALIZE_INTERVAL == 0 {
            self.renormalize();
        }
        Ok(())
    }

    /// `U~ <- C U~` for a row-major propagator `C` spanning `slots` slots.
    fn apply_block(&mut self, c: &[Complex64], slots: u64) {
        self.u = mul_row_major(c, &self.u, self.dim);
        let before = self.steps / RENORMALIZE_INTERVAL;
        self.steps += slots;
        if self.steps / RENORMALIZE_INTERVAL != before {
            self.renormalize();
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.u[i * self.dim + i]).sum()
    }

    /// Copy of `U~`.
    pub fn matrix(&self) -> CMat {
        let d = self.dim;
        CMat::from_fn(d, d, |i, j| self.u[i * d + j])
    }

    /// Row-major view of `U~`.
    pub fn as_row_major(&self) -> &[Complex64] {
        &self.u
    }

    pub fn unitarity_drift(&self) -> f64 {
        let m = self.matrix();
        crate::linalg::unitarity_deviation(&m)
    }

    /// Projects `U~` back onto the unitaries when the drift exceeds
    /// [`RENORMALIZE_THRESHOLD`]. Returns whether a projection happened.
    pub fn renormalize(&mut self) -> bool {
        let mut m = self.matrix();
        if crate::linalg::unitarity_deviation(&m) <= RENORMALIZE_THRESHOLD {
            return false;
        }
        polar_project(&mut m);
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.u[i * d + j] = m[(i, j)];
            }
        }
        self.renormalizations += 1;
        true
    }

    /// Overwrites `U~`, e.g. to resume from a snapshot.
    pub fn set_matrix(&mut self, m: &CMat) -> Result<()> {
        let d = self.dim;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: m.nrows(),
            });
        }
        for i in 0..d {
            for j in 0..d {
                self.u[i * d + j] = m[(i, j)];
            }
        }
        Ok(())
    }
}

/// Newton-Schulz iteration `X <- X (3 - X^dag X) / 2`, converging
/// quadratically to the unitary polar factor for nearly unitary input.
pub fn polar_project(m: &mut CMat) {
    let d = m.nrows();
    let three = CMat::identity(d, d) * Complex64::new(3.0, 0.0);
    for _ in 0..8 {
        let gram = matmul(&m.adjoint(), m);
        let drift = crate::linalg::frobenius(&(&gram - CMat::identity(d, d)));
        if drift < 1e-15 * (d as f64).sqrt() {
            break;
        }
        *m = matmul(m, &(&three - gram)) * Complex64::new(0.5, 0.0);
    }
}

/// Snapshot of `U~` at slot boundary `slot` (time `slot * dt`).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub slot: u64,
    pub time: f64,
    pub matrix: CMat,
}

/// Converts sample times to slot indices, rejecting times off the `dt` grid.
pub fn slots_from_times(times: &[f64], dt: f64) -> Result<Vec<u64>> {
    times
        .iter()
        .map(|&t| {
            let k = t / dt;
            let r = k.round();
            if !(t >= 0.0) || (k - r).abs() > 1e-9 * r.max(1.0) {
                Err(Error::invalid(alloc::format!(
                    "sample time {t} is not a multiple of dt = {dt}"
                )))
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

fn check_inputs(schedule: &Schedule, free: &FreeStep, slots: &[u64]) -> Result<()> {
    if schedule.n_qubits() != free.n_qubits() {
        return Err(Error::QubitMismatch {
            left: schedule.n_qubits(),
            right: free.n_qubits(),
        });
    }
    if schedule.dt() != free.dt() {
        return Err(Error::invalid(alloc::format!(
            "schedule dt {} differs from free step dt {}",
            schedule.dt(),
            free.dt()
        )));
    }
    if slots.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("sample slots must be non-decreasing"));
    }
    if let (Some(h), Some(&last)) = (schedule.horizon(), slots.last()) {
        if last > h as u64 {
            return Err(Error::invalid(alloc::format!(
                "sample slot {last} beyond schedule horizon {h}"
            )));
        }
    }
    Ok(())
}

fn mul_row_major(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; d * d];
    // SAFETY: all three buffers are d x d row-major and distinct.
    unsafe {
        gemm_raw(
            d,
            d,
            d,
            a.as_ptr(),
            (d as isize, 1),
            b.as_ptr(),
            (d as isize, 1),
            out.as_mut_ptr(),
            (d as isize, 1),
            false,
        );
    }
    out
}

/// `C^k` by binary powering, memoizing every power computed on the way.
fn cycle_power(powers: &mut BTreeMap<u64, Vec<Complex64>>, k: u64, d: usize) -> Vec<Complex64> {
    if let Some(c) = powers.get(&k) {
        return c.clone();
    }
    let half = cycle_power(powers, k / 2, d);
    let mut c = mul_row_major(&half, &half, d);
    if k % 2 == 1 {
        c = mul_row_major(&powers[&1], &c, d);
    }
    powers.insert(k, c.clone());
    c
}

/// Runs the schedule, calling `visit` at every requested slot boundary.
///
/// Periodic schedules sampled only at multiples of their period skip the
/// slot-by-slot stepping: each gap between samples is bridged by one
/// multiplication with a power of the one-cycle propagator.
pub fn propagate_with(
    schedule: &Schedule,
    free: &FreeStep,
    slots: &[u64],
    mut visit: impl FnMut(u64, &PropagationState),
) -> Result<PropagationState> {
    check_inputs(schedule, free, slots)?;
    let mut state = PropagationState::new(free);
    let mut frames = schedule.frames();
    // One-cycle propagator and its powers, keyed by exponent.
    let mut cycle: Option<(u64, BTreeMap<u64, Vec<Complex64>>)> = None;
    if let Some(period) = schedule.period().map(|p| p as u64) {
        let last = slots.last().copied().unwrap_or(0);
        if last >= 2 * period && slots.iter().all(|s| s % period == 0) {
            let mut one = PropagationState::new(free);
            for g in schedule.frames().take(period as usize) {
                one.step(&g, free)?;
            }
            let mut powers = BTreeMap::new();
            powers.insert(1, one.u);
            cycle = Some((period, powers));
        }
    }
    for &slot in slots {
        match &mut cycle {
            Some((period, powers)) => {
                let gap = slot - state.steps();
                if gap > 0 {
                    let c = cycle_power(powers, gap / *period, state.dim);
                    state.apply_block(&c, gap);
                }
            }
            None => {
                while state.steps() < slot {
                    let g = frames
                        .next()
                        .ok_or_else(|| Error::invalid("schedule ended before the last sample"))?;
                    state.step(&g, free)?;
                }
            }
        }
        visit(slot, &state);
    }
    Ok(state)
}

/// Snapshots of `U~` at the given slots.
pub fn propagate(schedule: &Schedule, free: &FreeStep, slots: &[u64]) -> Result<Vec<Snapshot>> {
    let dt = free.dt();
    let mut out = Vec::with_capacity(slots.len());
    propagate_with(schedule, free, slots, |slot, s| {
        out.push(Snapshot {
            slot,
            time: slot as f64 * dt,
            matrix: s.matrix(),
        })
    })?;
    Ok(out)
}

/// `Tr U~` at the given slots, without copying the propagator.
pub fn propagate_traces(schedule: &Schedule, free: &FreeStep, slots: &[u64]) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(slots.len());
    propagate_with(schedule, free, slots, |_, s| out.push(s.trace()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_collective_group, build_nested_group};
    use crate::hamiltonian::{build_rotating_frame, ChainSpec};
    use crate::linalg::{expm_hermitian, frobenius, spectral_norm, unitarity_deviation};
    use crate::schedule::{schedule_free, schedule_pdd, schedule_sdd};
    use rand::{Rng, SeedableRng};

    fn chain(n: usize, delta: f64) -> HamiltonianMatrix {
        build_rotating_frame(&ChainSpec::new(n, 1.0, delta).unwrap()).unwrap()
    }

    fn brute_force(h: &CMat, frames: &[PauliString], dt: f64) -> CMat {
        let d = h.nrows();
        let u0 = expm_hermitian(h, dt);
        let mut u = CMat::identity(d, d);
        for g in frames {
            let gm = g.to_matrix().unwrap();
            u = gm.adjoint() * &u0 * gm * u;
        }
        u
    }

    #[test]
    fn identity_frame_is_free_evolution() {
        let h = chain(3, 1.0);
        let free = FreeStep::new(&h, 0.1).unwrap();
        let mut s = PropagationState::new(&free);
        s.step(&PauliString::identity(3), &free).unwrap();
        assert!(frobenius(&(s.matrix() - h.evolution(0.1))) < 1e-13);
        assert!(unitarity_deviation(&free.dense()) < 1e-12);
    }

    #[test]
    fn flipping_all_spins_conjugates_a_diagonal_step() {
        let spec = ChainSpec::new(3, 0.0, 1.0)
            .unwrap()
            .with_detunings(vec![0.3, -0.7, 1.1])
            .unwrap();
        let h = build_rotating_frame(&spec).unwrap();
        let free = FreeStep::new(&h, 0.2).unwrap();
        let g: PauliString = "XXX".parse().unwrap();
        let mut s = PropagationState::new(&free);
        s.step(&g, &free).unwrap();
        let u = s.matrix();
        // X on every qubit maps basis state b to its complement.
        for b in 0..8 {
            let expected = h.matrix()[(7 - b, 7 - b)];
            let phase = Complex64::from_polar(1.0, -expected.re * 0.2);
            assert!((u[(b, b)] - phase).norm() < 1e-14);
        }
        assert!(frobenius(&(u.clone() - CMat::from_diagonal(&u.diagonal()))) < 1e-15);
    }

    #[test]
    fn two_steps_match_ordered_product() {
        let h = chain(2, 1.0);
        let free = FreeStep::new(&h, 0.3).unwrap();
        for x in 0..4u64 {
            for z in 0..4u64 {
                let g = PauliString::from_masks(2, x, z);
                let frames = [PauliString::identity(2), g];
                let mut s = PropagationState::new(&free);
                for f in &frames {
                    s.step(f, &free).unwrap();
                }
                let oracle = brute_force(h.matrix(), &frames, 0.3);
                assert!(frobenius(&(s.matrix() - oracle)) < 1e-13);
            }
        }
    }

    #[test]
    fn random_frames_match_ordered_product() {
        let h = chain(4, 5.0);
        let free = FreeStep::new(&h, 0.07).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let frames: Vec<PauliString> = (0..40)
            .map(|_| PauliString::from_masks(4, rng.gen::<u64>() & 15, rng.gen::<u64>() & 15))
            .collect();
        let mut s = PropagationState::new(&free);
        for f in &frames {
            s.step(f, &free).unwrap();
        }
        assert!(frobenius(&(s.matrix() - brute_force(h.matrix(), &frames, 0.07))) < 1e-11);
        assert!(unitarity_deviation(&s.matrix()) < 1e-12);
    }

    #[test]
    fn free_two_qubit_spectrum() {
        let h = chain(2, 1.0);
        let t = 0.37;
        let free = FreeStep::new(&h, t).unwrap();
        let snaps = propagate(&schedule_free(2, t).unwrap(), &free, &[0, 1]).unwrap();
        assert!(frobenius(&(snaps[0].matrix.clone() - CMat::identity(4, 4))) < 1e-15);
        let ev = snaps[1].matrix.clone().eigenvalues_complex();
        let mut phases: Vec<Complex64> = ev.to_vec();
        phases.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let single = Complex64::from_polar(1.0, -t);
        let triplet_count = phases.iter().filter(|p| (**p - single).norm() < 1e-12).count();
        assert_eq!(triplet_count, 3);
        assert!(phases
            .iter()
            .any(|p| (*p - Complex64::from_polar(1.0, 3.0 * t)).norm() < 1e-12));
    }

    trait ComplexEigen {
        fn eigenvalues_complex(self) -> Vec<Complex64>;
    }

    impl ComplexEigen for CMat {
        fn eigenvalues_complex(self) -> Vec<Complex64> {
            nalgebra::Schur::new(self).eigenvalues().unwrap().iter().copied().collect()
        }
    }

    #[test]
    fn sdd_cycle_is_time_reversal_symmetric() {
        let h = chain(4, 1.0);
        let minus = HamiltonianMatrix::from_matrix(4, -h.matrix().clone()).unwrap();
        let group = build_collective_group(4).unwrap();
        let sched = schedule_sdd(&group, 0.05).unwrap();
        let fwd = propagate(&sched, &FreeStep::new(&h, 0.05).unwrap(), &[8]).unwrap();
        let bwd = propagate(&sched, &FreeStep::new(&minus, 0.05).unwrap(), &[8]).unwrap();
        assert!(frobenius(&(fwd[0].matrix.adjoint() - &bwd[0].matrix)) < 1e-13);
    }

    #[test]
    fn averaged_single_term_cancels_exactly() {
        let xx: PauliString = "XX".parse().unwrap();
        let h = HamiltonianMatrix::from_matrix(2, xx.to_matrix().unwrap()).unwrap();
        let group = build_collective_group(2).unwrap();
        for dt in [0.1, 0.01] {
            let snaps = propagate(
                &schedule_pdd(&group, dt).unwrap(),
                &FreeStep::new(&h, dt).unwrap(),
                &[4],
            )
            .unwrap();
            assert!(spectral_norm(&(snaps[0].matrix.clone() - CMat::identity(4, 4))) < 1e-12);
        }
    }

    #[test]
    fn pdd_cycle_deviation_is_second_order() {
        let h = chain(4, 1.0);
        let group = build_collective_group(4).unwrap();
        let dev = |dt: f64| {
            let snaps = propagate(
                &schedule_pdd(&group, dt).unwrap(),
                &FreeStep::new(&h, dt).unwrap(),
                &[4],
            )
            .unwrap();
            spectral_norm(&(snaps[0].matrix.clone() - CMat::identity(16, 16)))
        };
        let (a, b) = (dev(2e-3), dev(1e-3));
        let ratio = a / b;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn nested_pdd_matches_brute_force() {
        let h = chain(4, 1.0);
        let group = build_nested_group(4).unwrap();
        let frames: Vec<PauliString> = schedule_pdd(&group, 0.02).unwrap().frames().take(16).collect();
        let snaps = propagate(
            &schedule_pdd(&group, 0.02).unwrap(),
            &FreeStep::new(&h, 0.02).unwrap(),
            &[16],
        )
        .unwrap();
        assert!(frobenius(&(snaps[0].matrix.clone() - brute_force(h.matrix(), &frames, 0.02))) < 1e-12);
    }

    #[test]
    fn cycle_powers_match_stepping() {
        let h = chain(4, 1.0);
        let group = build_nested_group(4).unwrap();
        let free = FreeStep::new(&h, 0.01).unwrap();
        let pdd = schedule_pdd(&group, 0.01).unwrap();
        let frames: Vec<PauliString> = pdd.frames().take(16 * 70).collect();
        let stepped = Schedule::frozen("PDD", 0.01, None, group.label(), frames).unwrap();
        // Uneven gaps exercise several powers, including repeats.
        let slots: Vec<u64> = [0, 1, 2, 5, 7, 12, 13, 13, 40, 41, 70].iter().map(|n| 16 * n).collect();
        let fast = propagate_traces(&pdd, &free, &slots).unwrap();
        let slow = propagate_traces(&stepped, &free, &slots).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-11);
        }
        // Period one: plain free evolution.
        let free_sched = schedule_free(4, 0.01).unwrap();
        let snaps = propagate(&free_sched, &free, &[0, 300, 1000, 1037]).unwrap();
        for s in &snaps {
            let exact = h.evolution(s.time);
            assert!(frobenius(&(&s.matrix - &exact)) < 1e-11);
        }
    }

    #[test]
    fn traces_match_snapshots() {
        let h = chain(3, 1.0);
        let free = FreeStep::new(&h, 0.1).unwrap();
        let sched = schedule_free(3, 0.1).unwrap();
        let slots = [0, 3, 3, 10];
        let traces = propagate_traces(&sched, &free, &slots).unwrap();
        let snaps = propagate(&sched, &free, &slots).unwrap();
        for (t, s) in traces.iter().zip(&snaps) {
            assert!((t - crate::linalg::trace(&s.matrix)).norm() < 1e-15);
        }
    }

    #[test]
    fn off_grid_times_are_rejected() {
        assert!(slots_from_times(&[0.0, 0.3, 0.25], 0.1).is_err());
        assert_eq!(slots_from_times(&[0.0, 0.3, 1.2], 0.1).unwrap(), vec![0, 3, 12]);
    }

    #[test]
    fn mismatched_dt_is_rejected() {
        let h = chain(2, 1.0);
        let free = FreeStep::new(&h, 0.1).unwrap();
        assert!(propagate(&schedule_free(2, 0.2).unwrap(), &free, &[1]).is_err());
    }

    #[test]
    fn unitary_input_is_left_alone() {
        let h = chain(3, 1.0);
        let free = FreeStep::new(&h, 0.1).unwrap();
        let mut s = PropagationState::new(&free);
        s.step(&"XIZ".parse().unwrap(), &free).unwrap();
        let before = s.matrix();
        assert!(!s.renormalize());
        assert_eq!(s.renormalizations(), 0);
        assert!(frobenius(&(s.matrix() - before)) < 1e-14);
    }

    #[test]
    fn drifted_input_is_projected_onto_polar_factor() {
        let h = chain(3, 1.0);
        let free = FreeStep::new(&h, 0.1).unwrap();
        let mut s = PropagationState::new(&free);
        s.step(&"XIZ".parse().unwrap(), &free).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = CMat::from_fn(8, 8, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let drifted = s.matrix() + noise * Complex64::new(3e-10, 0.0);
        s.set_matrix(&drifted).unwrap();
        let drift = s.unitarity_drift();
        assert!(drift > 1e-9 && drift < 1e-8, "drift {drift}");
        assert!(s.renormalize());
        assert_eq!(s.renormalizations(), 1);
        assert!(s.unitarity_drift() < 1e-13);
        // Polar factor W V^dag from the SVD of the drifted matrix.
        let svd = drifted.svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        assert!(frobenius(&(s.matrix() - polar)) < 1e-13);
    }

    #[test]
    fn long_runs_stay_unitary() {
        let h = chain(3, 5.0);
        let group = build_collective_group(2).ok();
        assert!(group.is_some());
        let free = FreeStep::new(&h, 0.05).unwrap();
        let mut s = PropagationState::new(&free);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20_000 {
            let g = PauliString::from_masks(3, rng.gen::<u64>() & 7, rng.gen::<u64>() & 7);
            s.step(&g, &free).unwrap();
        }
        assert!(s.unitarity_drift() < 1e-10);
    }
}
