//! Pulse schedules for bang-bang decoupling.
//!
//! Every protocol is described by its sequence of frames `f_0, f_1, ...`:
//! `f_k` is the control frame during the free-evolution slot
//! `[k dt, (k+1) dt)`. The pulse applied at `t_k = k dt` is
//! `P_k = f_k f_{k-1}^dag` with `f_{-1} = 1`, so the cumulative product of
//! pulses equals the current frame exactly (phases included). Identity
//! pulses are emitted explicitly so every schedule has one event per slot.
//!
//! Randomized protocols draw from a ChaCha8 stream keyed by a root seed and a
//! per-realization stream index, so realization `r` can be regenerated in
//! isolation.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groups::{DecouplingGroup, PulsePath};
use crate::pauli::PauliString;

/// Default ceiling on the length of one expanded concatenated cycle.
pub const DEFAULT_EVENT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProtocolKind {
    /// No pulses at all.
    Free,
    Pdd,
    Sdd,
    Cdd,
    Nrd,
    Rpd,
    Prpd,
    Srpd,
    /// Embedded decoupling with bordering pulses drawn from the group.
    EmdGroup,
    /// Embedded decoupling with bordering pulses drawn as independent
    /// random letters on every qubit.
    EmdPauli,
    /// CDD up to a switch level, SRPD afterwards.
    Hybrid,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 11] = [
        ProtocolKind::Free,
        ProtocolKind::Pdd,
        ProtocolKind::Sdd,
        ProtocolKind::Cdd,
        ProtocolKind::Nrd,
        ProtocolKind::Rpd,
        ProtocolKind::Prpd,
        ProtocolKind::Srpd,
        ProtocolKind::EmdGroup,
        ProtocolKind::EmdPauli,
        ProtocolKind::Hybrid,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ProtocolKind::Free => "FREE",
            ProtocolKind::Pdd => "PDD",
            ProtocolKind::Sdd => "SDD",
            ProtocolKind::Cdd => "CDD",
            ProtocolKind::Nrd => "NRD",
            ProtocolKind::Rpd => "RPD",
            ProtocolKind::Prpd => "pRPD",
            ProtocolKind::Srpd => "SRPD",
            ProtocolKind::EmdGroup => "EMD-G",
            ProtocolKind::EmdPauli => "EMD-Pauli",
            ProtocolKind::Hybrid => "HYBRID",
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            ProtocolKind::Free | ProtocolKind::Pdd | ProtocolKind::Sdd | ProtocolKind::Cdd
        )
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('_', "-");
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.tag().to_ascii_uppercase() == wanted)
            .or(match wanted.as_str() {
                "EMD" => Some(ProtocolKind::EmdGroup),
                "CDD-SRPD" | "CDD->SRPD" => Some(ProtocolKind::Hybrid),
                _ => None,
            })
            .ok_or_else(|| Error::Parse(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BorderSet {
    Group,
    PauliProducts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Concatenation level for CDD.
    pub cdd_level: u32,
    /// CDD level after which HYBRID switches to SRPD.
    pub hybrid_switch_level: u32,
    /// Inner path for PDD/SDD/CDD/EMD; `None` uses the canonical path.
    pub path: Option<PulsePath>,
    pub event_cap: u64,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind) -> Self {
        ProtocolConfig {
            kind,
            cdd_level: 1,
            hybrid_switch_level: 3,
            path: None,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }

    pub fn with_cdd_level(mut self, level: u32) -> Self {
        self.cdd_level = level;
        self
    }

    pub fn with_switch_level(mut self, level: u32) -> Self {
        self.hybrid_switch_level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ProtocolKind::Cdd && self.cdd_level == 0 {
            return Err(Error::invalid("cdd_level must be at least 1"));
        }
        if self.kind == ProtocolKind::Hybrid && self.hybrid_switch_level == 0 {
            return Err(Error::invalid("hybrid_switch_level must be at least 1"));
        }
        Ok(())
    }

    /// Builds the schedule for one realization.
    pub fn schedule(&self, group: &DecouplingGroup, dt: f64, seed: RealizationSeed) -> Result<Schedule> {
        self.validate()?;
        let path = self.path.clone().unwrap_or_else(|| group.canonical_path());
        if path.len() != group.len() {
            return Err(Error::invalid("path length does not match the group"));
        }
        match self.kind {
            ProtocolKind::Free => schedule_free(group.n_qubits(), dt),
            ProtocolKind::Pdd => schedule_pdd_with_path(group, &path, dt),
            ProtocolKind::Sdd => schedule_sdd_with_path(group, &path, dt),
            ProtocolKind::Cdd => schedule_cdd_with_path(group, &path, dt, self.cdd_level, self.event_cap),
            ProtocolKind::Nrd => schedule_nrd(group, dt, seed),
            ProtocolKind::Rpd => schedule_rpd(group, dt, seed, false, false),
            ProtocolKind::Prpd => schedule_rpd(group, dt, seed, true, false),
            ProtocolKind::Srpd => schedule_rpd(group, dt, seed, false, true),
            ProtocolKind::EmdGroup => schedule_emd_with_path(group, &path, dt, seed, BorderSet::Group),
            ProtocolKind::EmdPauli => {
                schedule_emd_with_path(group, &path, dt, seed, BorderSet::PauliProducts)
            }
            ProtocolKind::Hybrid => {
                schedule_hybrid(group, dt, seed, self.hybrid_switch_level, self.event_cap)
            }
        }
    }
}

/// Root seed plus stream index of one control realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RealizationSeed {
    pub root: u64,
    pub stream: u64,
}

impl RealizationSeed {
    pub fn new(root: u64, stream: u64) -> Self {
        RealizationSeed { root, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for RealizationSeed {
    fn from(root: u64) -> Self {
        RealizationSeed { root, stream: 0 }
    }
}

/// One pulse and the free-evolution slot that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub index: u64,
    pub time: f64,
    pub pulse: PauliString,
    pub frame: PauliString,
}

#[derive(Debug, Clone)]
enum Border {
    Group(Vec<PauliString>),
    Pauli(usize),
}

#[derive(Debug, Clone)]
enum Source {
    Periodic(Vec<PauliString>),
    Nrd {
        elements: Vec<PauliString>,
        rng: ChaCha8Rng,
    },
    RandomPath {
        elements: Vec<PauliString>,
        pseudo: bool,
        symmetric: bool,
        rng: ChaCha8Rng,
        order: Vec<usize>,
        buffer: Vec<PauliString>,
        pos: usize,
    },
    Emd {
        inner: Vec<PauliString>,
        border: Border,
        rng: ChaCha8Rng,
        accumulated: PauliString,
        pos: usize,
    },
    Chain {
        prefix: Vec<PauliString>,
        pos: usize,
        then: Box<Source>,
    },
    Finite {
        frames: Vec<PauliString>,
        pos: usize,
    },
}

impl Source {
    fn next_frame(&mut self, slot: u64) -> Option<PauliString> {
        match self {
            Source::Periodic(frames) => Some(frames[(slot % frames.len() as u64) as usize]),
            Source::Nrd { elements, rng } => Some(elements[rng.gen_range(0..elements.len())]),
            Source::RandomPath {
                elements,
                pseudo,
                symmetric,
                rng,
                order,
                buffer,
                pos,
            } => {
                if *pos == buffer.len() {
                    if *pseudo {
                        order[1..].shuffle(rng);
                    } else {
                        order.shuffle(rng);
                    }
                    buffer.clear();
                    buffer.extend(order.iter().map(|&j| elements[j]));
                    if *symmetric {
                        buffer.extend(order.iter().rev().map(|&j| elements[j]));
                    }
                    *pos = 0;
                }
                let f = buffer[*pos];
                *pos += 1;
                Some(f)
            }
            Source::Emd {
                inner,
                border,
                rng,
                accumulated,
                pos,
            } => {
                if *pos == inner.len() {
                    let b = match border {
                        Border::Group(elements) => elements[rng.gen_range(0..elements.len())],
                        Border::Pauli(n) => {
                            let n = *n;
                            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                            PauliString::from_masks(n, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask)
                        }
                    };
                    *accumulated = b * *accumulated;
                    *pos = 0;
                }
                let f = inner[*pos] * *accumulated;
                *pos += 1;
                Some(f)
            }
            Source::Chain { prefix, pos, then } => {
                if *pos < prefix.len() {
                    *pos += 1;
                    Some(prefix[*pos - 1])
                } else {
                    then.next_frame(slot)
                }
            }
            Source::Finite { frames, pos } => {
                let f = frames.get(*pos).copied();
                *pos += 1;
                f
            }
        }
    }
}

/// A control realization: a (possibly unbounded) stream of frames and the
/// metadata needed to regenerate it.
#[derive(Debug, Clone)]
pub struct Schedule {
    protocol: String,
    n_qubits: usize,
    dt: f64,
    seed: Option<RealizationSeed>,
    group_label: String,
    /// Slots per (super-)cycle of the underlying inner code.
    cycle_len: Option<usize>,
    /// Whether the frame returns to the identity every `cycle_len` slots.
    cyclic: bool,
    source: Source,
}

impl Schedule {
    pub fn protocol(&self) -> &str {
        &self.protocol
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> Option<RealizationSeed> {
        self.seed
    }

    pub fn group_label(&self) -> &str {
        &self.group_label
    }

    pub fn cycle_len(&self) -> Option<usize> {
        self.cycle_len
    }

    /// True when frames are guaranteed to be the identity at every multiple
    /// of [`Schedule::cycle_len`].
    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    /// Number of slots for finite schedules, `None` for unbounded streams.
    pub fn horizon(&self) -> Option<usize> {
        match &self.source {
            Source::Finite { frames, .. } => Some(frames.len()),
            _ => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.seed.is_none()
    }

    /// Length of the repeating frame block for strictly periodic schedules.
    pub fn period(&self) -> Option<usize> {
        match &self.source {
            Source::Periodic(frames) => Some(frames.len()),
            _ => None,
        }
    }

    pub fn frames(&self) -> Frames {
        Frames {
            source: self.source.clone(),
            slot: 0,
        }
    }

    pub fn events(&self) -> Events {
        Events {
            frames: self.frames(),
            prev: PauliString::identity(self.n_qubits),
            dt: self.dt,
            index: 0,
        }
    }

    /// Finite schedule replaying `frames` without any randomness.
    pub fn frozen(
        protocol: impl Into<String>,
        dt: f64,
        seed: Option<RealizationSeed>,
        group_label: impl Into<String>,
        frames: Vec<PauliString>,
    ) -> Result<Self> {
        let n = frames
            .first()
            .map(PauliString::n_qubits)
            .ok_or_else(|| Error::invalid("frozen schedule has no events"))?;
        if frames.iter().any(|f| f.n_qubits() != n) {
            return Err(Error::invalid("frozen frames have mixed qubit counts"));
        }
        check_dt(dt)?;
        Ok(Schedule {
            protocol: protocol.into(),
            n_qubits: n,
            dt,
            seed,
            group_label: group_label.into(),
            cycle_len: None,
            cyclic: false,
            source: Source::Finite { frames, pos: 0 },
        })
    }
}

#[derive(Debug, Clone)]
pub struct Frames {
    source: Source,
    slot: u64,
}

impl Iterator for Frames {
    type Item = PauliString;
    fn next(&mut self) -> Option<PauliString> {
        let f = self.source.next_frame(self.slot)?;
        self.slot += 1;
        Some(f)
    }
}

#[derive(Debug, Clone)]
pub struct Events {
    frames: Frames,
    prev: PauliString,
    dt: f64,
    index: u64,
}

impl Iterator for Events {
    type Item = Event;
    fn next(&mut self) -> Option<Event> {
        let frame = self.frames.next()?;
        let pulse = frame * self.prev.adjoint();
        let e = Event {
            index: self.index,
            time: self.index as f64 * self.dt,
            pulse,
            frame,
        };
        self.prev = frame;
        self.index += 1;
        Some(e)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be positive and finite, got {dt}")));
    }
    Ok(())
}

fn deterministic(
    tag: &str,
    group_label: &str,
    n: usize,
    dt: f64,
    frames: Vec<PauliString>,
) -> Result<Schedule> {
    check_dt(dt)?;
    let cyclic = frames.first().is_some_and(PauliString::is_identity);
    Ok(Schedule {
        protocol: tag.to_string(),
        n_qubits: n,
        dt,
        seed: None,
        group_label: group_label.to_string(),
        cycle_len: Some(frames.len()),
        cyclic,
        source: Source::Periodic(frames),
    })
}

/// Uncontrolled evolution: identity frame in every slot.
pub fn schedule_free(n: usize, dt: f64) -> Result<Schedule> {
    deterministic("FREE", "none", n, dt, vec![PauliString::identity(n)])
}

/// Periodic deterministic decoupling along the canonical path: the first
/// pulse comes at `t_1 = dt` and the last pulse of each cycle returns the
/// frame to `g_0`.
pub fn schedule_pdd(group: &DecouplingGroup, dt: f64) -> Result<Schedule> {
    schedule_pdd_with_path(group, &group.canonical_path(), dt)
}

pub fn schedule_pdd_with_path(group: &DecouplingGroup, path: &PulsePath, dt: f64) -> Result<Schedule> {
    deterministic("PDD", group.label(), group.n_qubits(), dt, path.frames(group))
}

/// Time-symmetrized PDD: the path forward then backward, period `2|G|`.
pub fn schedule_sdd(group: &DecouplingGroup, dt: f64) -> Result<Schedule> {
    schedule_sdd_with_path(group, &group.canonical_path(), dt)
}

pub fn schedule_sdd_with_path(group: &DecouplingGroup, path: &PulsePath, dt: f64) -> Result<Schedule> {
    let mut frames = path.frames(group);
    let back: Vec<PauliString> = frames.iter().rev().copied().collect();
    frames.extend(back);
    deterministic("SDD", group.label(), group.n_qubits(), dt, frames)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Free,
    Pulse(PauliString),
}

/// Expands `C_{l+1} = C_l P_1 C_l P_2 ... C_l P_M` starting from
/// `C_1 = f P_1 f P_2 ... f P_M` (`f` a free interval).
fn cdd_tokens(pulses: &[PauliString], level: u32) -> Vec<Token> {
    let mut current: Vec<Token> = pulses
        .iter()
        .flat_map(|&p| [Token::Free, Token::Pulse(p)])
        .collect();
    for _ in 1..level {
        let mut next = Vec::with_capacity(current.len() * pulses.len() + pulses.len());
        for &p in pulses {
            next.extend_from_slice(&current);
            next.push(Token::Pulse(p));
        }
        current = next;
    }
    current
}

/// Per-slot frames of one concatenated cycle, merging adjacent pulses into
/// a single product.
pub fn cdd_frames(group: &DecouplingGroup, path: &PulsePath, level: u32, cap: u64) -> Result<Vec<PauliString>> {
    if level == 0 {
        return Err(Error::invalid("cdd_level must be at least 1"));
    }
    let slots = (group.len() as u128).checked_pow(level).unwrap_or(u128::MAX);
    if slots > cap as u128 {
        return Err(Error::EventCap {
            what: "concatenated cycle",
            requested: slots,
            cap,
        });
    }
    let n = group.n_qubits();
    let tokens = cdd_tokens(&path.pulses(group), level);
    let mut frames = Vec::with_capacity(slots as usize);
    // The cycle starts in g_{order[0]}; canonical paths start at the identity.
    let mut frame = group.element(path.order()[0]);
    let mut pending = PauliString::identity(n);
    for t in tokens {
        match t {
            Token::Pulse(p) => pending = p * pending,
            Token::Free => {
                if !frames.is_empty() {
                    frame = pending * frame;
                }
                pending = PauliString::identity(n);
                frames.push(frame);
            }
        }
    }
    Ok(frames)
}

/// Concatenated decoupling at level `level`, repeated periodically.
pub fn schedule_cdd(group: &DecouplingGroup, dt: f64, level: u32, cap: u64) -> Result<Schedule> {
    schedule_cdd_with_path(group, &group.canonical_path(), dt, level, cap)
}

pub fn schedule_cdd_with_path(
    group: &DecouplingGroup,
    path: &PulsePath,
    dt: f64,
    level: u32,
    cap: u64,
) -> Result<Schedule> {
    let frames = cdd_frames(group, path, level, cap)?;
    let mut s = deterministic("CDD", group.label(), group.n_qubits(), dt, frames)?;
    s.protocol = format!("CDD{level}");
    Ok(s)
}

/// Naive random decoupling: an independent uniform group element in every
/// slot, including the first (so a pulse may occur at `t_0 = 0`).
pub fn schedule_nrd(group: &DecouplingGroup, dt: f64, seed: impl Into<RealizationSeed>) -> Result<Schedule> {
    check_dt(dt)?;
    let seed = seed.into();
    Ok(Schedule {
        protocol: "NRD".into(),
        n_qubits: group.n_qubits(),
        dt,
        seed: Some(seed),
        group_label: group.label().into(),
        cycle_len: None,
        cyclic: false,
        source: Source::Nrd {
            elements: group.elements().to_vec(),
            rng: seed.rng(),
        },
    })
}

fn random_path_source(group: &DecouplingGroup, seed: RealizationSeed, pseudo: bool, symmetric: bool) -> Source {
    Source::RandomPath {
        elements: group.elements().to_vec(),
        pseudo,
        symmetric,
        rng: seed.rng(),
        order: (0..group.len()).collect(),
        buffer: Vec::with_capacity(2 * group.len()),
        pos: 0,
    }
}

/// Random path decoupling: a fresh uniform traversal order of the group at
/// every super-cycle boundary `T_n`.
///
/// `pseudo` pins the first element to the identity (so frames coincide with
/// the physical frame at every `T_n`); `symmetric` traverses each drawn path
/// forward then backward. The step from one super-cycle's last frame to the
/// next one's first frame is a single pulse at `T_n`, including `T_0 = 0`.
pub fn schedule_rpd(
    group: &DecouplingGroup,
    dt: f64,
    seed: impl Into<RealizationSeed>,
    pseudo: bool,
    symmetric: bool,
) -> Result<Schedule> {
    check_dt(dt)?;
    let seed = seed.into();
    let tag = match (pseudo, symmetric) {
        (false, false) => "RPD",
        (true, false) => "pRPD",
        (false, true) => "SRPD",
        (true, true) => "pSRPD",
    };
    let period = if symmetric { 2 * group.len() } else { group.len() };
    Ok(Schedule {
        protocol: tag.into(),
        n_qubits: group.n_qubits(),
        dt,
        seed: Some(seed),
        group_label: group.label().into(),
        cycle_len: Some(period),
        cyclic: pseudo,
        source: random_path_source(group, seed, pseudo, symmetric),
    })
}

/// Embedded decoupling: fixed inner PDD cycle, with a random bordering
/// pulse composed into the frame at every `T_n`, `n >= 1`.
pub fn schedule_emd(
    group: &DecouplingGroup,
    dt: f64,
    seed: impl Into<RealizationSeed>,
    border: BorderSet,
) -> Result<Schedule> {
    schedule_emd_with_path(group, &group.canonical_path(), dt, seed, border)
}

pub fn schedule_emd_with_path(
    group: &DecouplingGroup,
    path: &PulsePath,
    dt: f64,
    seed: impl Into<RealizationSeed>,
    border: BorderSet,
) -> Result<Schedule> {
    check_dt(dt)?;
    let seed = seed.into();
    let n = group.n_qubits();
    let (tag, border) = match border {
        BorderSet::Group => ("EMD-G", Border::Group(group.elements().to_vec())),
        BorderSet::PauliProducts => ("EMD-Pauli", Border::Pauli(n)),
    };
    Ok(Schedule {
        protocol: tag.into(),
        n_qubits: n,
        dt,
        seed: Some(seed),
        group_label: group.label().into(),
        cycle_len: Some(group.len()),
        cyclic: false,
        source: Source::Emd {
            inner: path.frames(group),
            border,
            rng: seed.rng(),
            accumulated: PauliString::identity(n),
            // The first cycle runs without a border pulse.
            pos: 0,
        },
    })
}

/// CDD up to level `switch_level` (`|G|^L` slots), then SRPD super-cycles.
/// The SRPD part starts as a fresh realization from the identity frame,
/// which the completed CDD cycle has already restored.
pub fn schedule_hybrid(
    group: &DecouplingGroup,
    dt: f64,
    seed: impl Into<RealizationSeed>,
    switch_level: u32,
    cap: u64,
) -> Result<Schedule> {
    check_dt(dt)?;
    if switch_level == 0 {
        return Err(Error::invalid("hybrid switch level must be at least 1"));
    }
    let seed = seed.into();
    let prefix = cdd_frames(group, &group.canonical_path(), switch_level, cap)?;
    Ok(Schedule {
        protocol: format!("HYBRID{switch_level}"),
        n_qubits: group.n_qubits(),
        dt,
        seed: Some(seed),
        group_label: group.label().into(),
        cycle_len: Some(2 * group.len()),
        cyclic: false,
        source: Source::Chain {
            prefix,
            pos: 0,
            then: Box::new(random_path_source(group, seed, false, true)),
        },
    })
}

/// Number of slots in the CDD prefix of a hybrid schedule.
pub fn hybrid_switch_slot(group: &DecouplingGroup, switch_level: u32) -> u64 {
    (group.len() as u64).pow(switch_level)
}

/// Freezes a realization into a replayable finite schedule. Unbounded
/// streams need an explicit horizon (in slots); finite ones may be
/// truncated.
pub fn derandomize(schedule: &Schedule, horizon: Option<usize>) -> Result<Schedule> {
    let frames: Vec<PauliString> = match (schedule.horizon(), horizon) {
        (None, None) => {
            return Err(Error::invalid(
                "unbounded schedule: a horizon is required to derandomize",
            ))
        }
        (Some(len), Some(h)) if h > len => {
            return Err(Error::invalid(format!(
                "horizon {h} exceeds the {len} recorded slots"
            )))
        }
        (_, Some(h)) => schedule.frames().take(h).collect(),
        (Some(_), None) => schedule.frames().collect(),
    };
    let mut s = Schedule::frozen(
        schedule.protocol.clone(),
        schedule.dt,
        schedule.seed,
        schedule.group_label.clone(),
        frames,
    )?;
    s.cycle_len = schedule.cycle_len;
    s.cyclic = schedule.cyclic;
    Ok(s)
}
