//! Built-in experiments for the two standard figures.
//!
//! Parameter values follow the figure captions. Horizons are not given
//! there; ours are chosen so the long-time behaviour is visible.

use ddkit_core::schedule::ProtocolKind;

use crate::config::{
    ChainConfig, DtSpec, ExperimentConfig, FrameChoice, GroupConfig, GroupKind, ProtocolEntry, RunConfig, Sampling,
};

pub const FIG1_QUBITS: usize = 8;
pub const FIG1_ANISOTROPY: f64 = 1.0;
/// Cycle times of the two periodic curves.
pub const FIG1_CYCLE_TIMES: [f64; 2] = [0.08, 0.12];
pub const FIG1_REALIZATIONS: usize = 50;
pub const FIG1_INTRA_DT: f64 = 0.005;
pub const FIG1_INTRA_REALIZATIONS: usize = 100;
/// Left-panel horizon; a multiple of both cycle times.
pub const FIG1_HORIZON: f64 = 120.0;
/// Smaller groups average worse per cycle, so NRD overtakes later.
pub const FIG1_REDUCED_HORIZON: f64 = 150.0;
/// Left-panel sampling interval: two long cycles, three short ones.
pub const FIG1_SAMPLE_INTERVAL: f64 = 0.24;

pub const FIG2_QUBITS: usize = 8;
pub const FIG2_REALIZATIONS: usize = 100;
pub const FIG2_LEFT_ANISOTROPY: f64 = 1.0;
pub const FIG2_LEFT_DT: f64 = 0.1;
pub const FIG2_RIGHT_ANISOTROPY: f64 = 5.0;
pub const FIG2_RIGHT_DT: f64 = 0.05;
/// Hybrid switches after the third concatenation level, at `4^3 dt`.
pub const FIG2_SWITCH_LEVEL: u32 = 3;
pub const FIG2_LEFT_HORIZON: f64 = 100.0;
pub const FIG2_RIGHT_HORIZON: f64 = 50.0;

pub const FIG2_LEFT_PROTOCOLS: [ProtocolKind; 7] = [
    ProtocolKind::Pdd,
    ProtocolKind::Sdd,
    ProtocolKind::Cdd,
    ProtocolKind::Nrd,
    ProtocolKind::Prpd,
    ProtocolKind::Srpd,
    ProtocolKind::Free,
];
pub const FIG2_RIGHT_PROTOCOLS: [ProtocolKind; 3] = [ProtocolKind::Cdd, ProtocolKind::Srpd, ProtocolKind::Hybrid];

/// Knobs shared by both figure commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Smaller chain for quick runs.
    pub reduced: Option<usize>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub realizations: Option<usize>,
}

/// One panel of a figure: a name and the experiment behind it.
#[derive(Debug, Clone)]
pub struct Panel {
    pub name: &'static str,
    pub config: ExperimentConfig,
}

fn chain(n: usize, anisotropy: f64) -> ChainConfig {
    ChainConfig {
        n_qubits: n,
        coupling: 1.0,
        anisotropy,
        detunings: None,
        frame: FrameChoice::Rotating,
        omega: None,
    }
}

fn group(kind: GroupKind) -> GroupConfig {
    GroupConfig {
        kind,
        elements: None,
        file: None,
    }
}

fn entry(kind: ProtocolKind) -> ProtocolEntry {
    let e = ProtocolEntry::new(kind);
    if kind == ProtocolKind::Cdd {
        e.auto_level()
    } else {
        e
    }
}

/// Size of the nested group on `n` qubits.
pub fn nested_group_len(n: usize) -> usize {
    1 << (2 * (n / 2))
}

/// Periodic DD at two cycle times against random DD, nested group.
pub fn figure1(o: &Overrides) -> Vec<Panel> {
    let n = o.reduced.unwrap_or(FIG1_QUBITS);
    let m = nested_group_len(n) as f64;
    let [short, long] = FIG1_CYCLE_TIMES;
    let seed = o.seed.unwrap_or(1);
    let left = ExperimentConfig {
        chain: chain(n, FIG1_ANISOTROPY),
        group: group(GroupKind::Nested),
        run: RunConfig {
            dt: DtSpec::One(long / m),
            horizon: o.horizon.unwrap_or(if n < FIG1_QUBITS {
                FIG1_REDUCED_HORIZON
            } else {
                FIG1_HORIZON
            }),
            sampling: Sampling::PerCycle,
            sample_interval: Some(FIG1_SAMPLE_INTERVAL),
            realizations: o.realizations.unwrap_or(FIG1_REALIZATIONS),
            seed,
            output: None,
        },
        protocols: vec![
            ProtocolEntry::new(ProtocolKind::Pdd).labeled("PDD_Tc0.08").with_dt(short / m),
            ProtocolEntry::new(ProtocolKind::Pdd).labeled("PDD_Tc0.12"),
            ProtocolEntry::new(ProtocolKind::Nrd),
            ProtocolEntry::new(ProtocolKind::Free),
        ],
    };
    let right = ExperimentConfig {
        chain: chain(n, FIG1_ANISOTROPY),
        group: group(GroupKind::Nested),
        run: RunConfig {
            dt: DtSpec::One(FIG1_INTRA_DT),
            horizon: m * FIG1_INTRA_DT,
            sampling: Sampling::IntraCycle,
            sample_interval: None,
            realizations: o.realizations.unwrap_or(FIG1_INTRA_REALIZATIONS),
            seed,
            output: None,
        },
        protocols: vec![ProtocolEntry::new(ProtocolKind::Pdd), ProtocolEntry::new(ProtocolKind::Nrd)],
    };
    vec![
        Panel {
            name: "left",
            config: left,
        },
        Panel {
            name: "right",
            config: right,
        },
    ]
}

/// Deterministic against random DD, collective group.
pub fn figure2(o: &Overrides) -> Vec<Panel> {
    let n = o.reduced.unwrap_or(FIG2_QUBITS);
    let seed = o.seed.unwrap_or(1);
    let r = o.realizations.unwrap_or(FIG2_REALIZATIONS);
    let run = |dt: f64, horizon: f64| RunConfig {
        dt: DtSpec::One(dt),
        horizon: o.horizon.unwrap_or(horizon),
        sampling: Sampling::PerCycle,
        sample_interval: None,
        realizations: r,
        seed,
        output: None,
    };
    let mut right_protocols: Vec<ProtocolEntry> = FIG2_RIGHT_PROTOCOLS.iter().map(|&k| entry(k)).collect();
    right_protocols[2].switch_level = Some(FIG2_SWITCH_LEVEL);
    vec![
        Panel {
            name: "left",
            config: ExperimentConfig {
                chain: chain(n, FIG2_LEFT_ANISOTROPY),
                group: group(GroupKind::Collective),
                run: run(FIG2_LEFT_DT, FIG2_LEFT_HORIZON),
                protocols: FIG2_LEFT_PROTOCOLS.iter().map(|&k| entry(k)).collect(),
            },
        },
        Panel {
            name: "right",
            config: ExperimentConfig {
                chain: chain(n, FIG2_RIGHT_ANISOTROPY),
                group: group(GroupKind::Collective),
                run: run(FIG2_RIGHT_DT, FIG2_RIGHT_HORIZON),
                protocols: right_protocols,
            },
        },
    ]
}
