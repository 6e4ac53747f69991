use ddkit_core::fidelity::{entanglement_fidelity, run_realization, SamplePlan};
use ddkit_core::groups::{build_collective_group, build_nested_group, DecouplingGroup};
use ddkit_core::hamiltonian::{build_rotating_frame, ChainSpec};
use ddkit_core::linalg::{matmul, unitarity_deviation};
use ddkit_core::pauli::PauliString;
use ddkit_core::propagation::{propagate, FreeStep};
use ddkit_core::schedule::{derandomize, ProtocolConfig, ProtocolKind, RealizationSeed, Schedule};
use ddkit_core::CMat;
use proptest::prelude::*;

fn groups() -> Vec<DecouplingGroup> {
    vec![
        build_collective_group(4).unwrap(),
        build_nested_group(4).unwrap(),
        build_nested_group(3).unwrap(),
    ]
}

fn schedule(kind: ProtocolKind, g: &DecouplingGroup, seed: u64) -> Schedule {
    ProtocolConfig::new(kind)
        .with_cdd_level(2)
        .with_switch_level(1)
        .schedule(g, 0.1, RealizationSeed::new(seed, 3))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every emitted frame is the pulse times the previous frame, exactly.
    #[test]
    fn frames_are_pulse_products(seed in any::<u64>(), gi in 0usize..3, ki in 0usize..11) {
        let g = &groups()[gi];
        let kind = ProtocolKind::ALL[ki];
        let s = schedule(kind, g, seed);
        let mut acc = PauliString::identity(g.n_qubits());
        for e in s.events().take(200) {
            acc = e.pulse * acc;
            prop_assert_eq!(acc, e.frame);
            prop_assert!(g.elements().contains(&e.frame.phase_free()) || kind == ProtocolKind::EmdPauli);
        }
    }

    /// Same protocol and seed, same event stream.
    #[test]
    fn seeded_streams_repeat(seed in any::<u64>(), ki in 0usize..11) {
        let g = build_collective_group(4).unwrap();
        let kind = ProtocolKind::ALL[ki];
        let a: Vec<_> = schedule(kind, &g, seed).events().take(150).collect();
        let b: Vec<_> = schedule(kind, &g, seed).events().take(150).collect();
        prop_assert_eq!(a, b);
    }

    /// Periodic and pseudo-random path protocols return to the identity at
    /// every cycle boundary.
    #[test]
    fn claimed_cycles_close(seed in any::<u64>(), gi in 0usize..3) {
        let g = &groups()[gi];
        for kind in [ProtocolKind::Pdd, ProtocolKind::Sdd, ProtocolKind::Cdd, ProtocolKind::Prpd] {
            let s = schedule(kind, g, seed);
            prop_assert!(s.is_cyclic());
            let len = s.cycle_len().unwrap();
            for (k, f) in s.frames().take(6 * len).enumerate() {
                if k % len == 0 {
                    prop_assert!(f.phase_free().is_identity(), "{} slot {}", kind, k);
                }
            }
        }
    }

    /// Propagators stay unitary for any protocol on a detuned chain.
    #[test]
    fn propagators_stay_unitary(seed in any::<u64>(), ki in 0usize..11, d in prop::collection::vec(-1.0f64..1.0, 4)) {
        let g = build_collective_group(4).unwrap();
        let spec = ChainSpec::new(4, 1.0, 0.7).unwrap().with_detunings(d).unwrap();
        let free = FreeStep::new(&build_rotating_frame(&spec).unwrap(), 0.1).unwrap();
        let s = schedule(ProtocolKind::ALL[ki], &g, seed);
        for snap in propagate(&s, &free, &[7, 64, 120]).unwrap() {
            prop_assert!(unitarity_deviation(&snap.matrix) < 1e-12);
        }
    }
}

/// Engine output against explicit ordered products of dense matrices.
#[test]
fn engine_matches_dense_products_on_three_qubits() {
    let g = build_nested_group(3).unwrap();
    let spec = ChainSpec::new(3, 0.8, 1.3).unwrap().with_detunings(vec![0.2, -0.1, 0.05]).unwrap();
    let h = build_rotating_frame(&spec).unwrap();
    let free = FreeStep::new(&h, 0.1).unwrap();
    let u0 = h.evolution(0.1);
    for kind in [ProtocolKind::Nrd, ProtocolKind::Srpd, ProtocolKind::Cdd] {
        let s = schedule(kind, &g, 17);
        let frames: Vec<PauliString> = s.frames().take(40).collect();
        let mut u = CMat::identity(8, 8);
        for f in &frames {
            let m = f.to_matrix().unwrap();
            let step = matmul(&matmul(&m.adjoint(), &u0), &m);
            u = matmul(&step, &u);
        }
        let engine = propagate(&s, &free, &[40]).unwrap().remove(0).matrix;
        let err = (&engine - &u).norm();
        assert!(err < 1e-11, "{kind}: {err}");
    }
}

#[test]
fn frozen_realization_replays_the_same_fidelity() {
    let g = build_collective_group(4).unwrap();
    let h = build_rotating_frame(&ChainSpec::new(4, 1.0, 1.0).unwrap()).unwrap();
    let free = FreeStep::new(&h, 0.1).unwrap();
    let plan = SamplePlan::per_cycle(4, 25);
    let seed = RealizationSeed::new(4, 9);
    let config = ProtocolConfig::new(ProtocolKind::Nrd);
    let live = run_realization(&config, &g, &free, seed, &plan).unwrap();
    let frozen = derandomize(&config.schedule(&g, 0.1, seed).unwrap(), Some(100)).unwrap();
    let replay: Vec<f64> = propagate(&frozen, &free, plan.slots())
        .unwrap()
        .iter()
        .map(|s| entanglement_fidelity(&s.matrix).unwrap())
        .collect();
    assert_eq!(live.values.len(), replay.len());
    for (a, b) in live.values.iter().zip(&replay) {
        assert!((a - b).abs() < 1e-13);
    }
}
