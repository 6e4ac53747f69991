//! Experiment configuration files.
//!
//! A config is a TOML document with `[chain]`, `[group]`, `[run]` tables and
//! one `[[protocol]]` entry per protocol. Unknown keys are rejected.
//!
//! ```toml
//! [chain]
//! n_qubits = 4
//! coupling = 1.0
//! anisotropy = 1.0
//!
//! [group]
//! kind = "collective"
//!
//! [run]
//! dt = 0.1
//! horizon = 20.0
//! sampling = "per-cycle"
//! realizations = 100
//! seed = 1
//!
//! [[protocol]]
//! kind = "SRPD"
//!
//! [[protocol]]
//! kind = "CDD"
//! cdd_level = "auto"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use ddkit_core::groups::{build_collective_group, build_nested_group, DecouplingGroup, PulsePath};
use ddkit_core::hamiltonian::{build_lab_frame, build_rotating_frame, ChainSpec, HamiltonianMatrix};
use ddkit_core::pauli::PauliString;
use ddkit_core::schedule::{ProtocolConfig, ProtocolKind, DEFAULT_EVENT_CAP};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainConfig,
    pub group: GroupConfig,
    pub run: RunConfig,
    #[serde(rename = "protocol")]
    pub protocols: Vec<ProtocolEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n_qubits: usize,
    #[serde(default = "one")]
    pub coupling: f64,
    pub anisotropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings: Option<Vec<f64>>,
    #[serde(default)]
    pub frame: FrameChoice,
    /// Reference frequency for the lab frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameChoice {
    #[default]
    Rotating,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub kind: GroupKind,
    /// Element strings for `custom`, identity first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<String>>,
    /// File with one element string per line for `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Nested,
    Collective,
    Custom,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::Nested => "nested",
            GroupKind::Collective => "collective",
            GroupKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    One(f64),
    Many(Vec<f64>),
}

impl DtSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DtSpec::One(v) => vec![*v],
            DtSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    PerCycle,
    IntraCycle,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::PerCycle => "per-cycle",
            Sampling::IntraCycle => "intra-cycle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dt: DtSpec,
    pub horizon: f64,
    #[serde(default)]
    pub sampling: Sampling,
    /// Time between samples in per-cycle mode; defaults to `|G| dt`.
    /// Must be a multiple of every `dt` in use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_realizations() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Fixed(u32),
    /// Only `"auto"` is accepted: the smallest level whose cycle covers the
    /// horizon (a level-`l` cycle starts with the level-`l-1` cycle).
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolEntry {
    pub kind: String,
    /// Output name; defaults to the protocol tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdd_level: Option<LevelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_cap: Option<u64>,
}

impl ProtocolEntry {
    pub fn new(kind: ProtocolKind) -> Self {
        ProtocolEntry {
            kind: kind.tag().into(),
            label: None,
            cdd_level: None,
            switch_level: None,
            path: None,
            dt: None,
            realizations: None,
            event_cap: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn auto_level(mut self) -> Self {
        self.cdd_level = Some(LevelSpec::Word("auto".into()));
        self
    }
}

/// One protocol at one `dt`, ready to run.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub protocol: ProtocolConfig,
    pub dt: f64,
    pub realizations: usize,
    /// Sample slots.
    pub slots: Vec<u64>,
}

/// Everything needed to run an experiment.
pub struct Prepared {
    pub spec: ChainSpec,
    pub hamiltonian: HamiltonianMatrix,
    pub group: DecouplingGroup,
    pub jobs: Vec<Job>,
}

const TIME_GRID_TOLERANCE: f64 = 1e-9;

/// Number of whole `dt` slots in `horizon`, if it is a multiple.
pub fn slots_in(horizon: f64, dt: f64) -> Option<u64> {
    let k = horizon / dt;
    let r = k.round();
    (r >= 0.0 && (k - r).abs() <= TIME_GRID_TOLERANCE * r.max(1.0)).then_some(r as u64)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(vec![format!("config: {}", e.message())]))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative group files are resolved against the config's directory.
        if let (Some(file), Some(dir)) = (cfg.group.file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dts(&self) -> Vec<f64> {
        self.run.dt.values()
    }

    pub fn chain_spec(&self) -> ddkit_core::Result<ChainSpec> {
        let spec = ChainSpec::new(self.chain.n_qubits, self.chain.coupling, self.chain.anisotropy)?;
        match &self.chain.detunings {
            Some(d) => spec.with_detunings(d.clone()),
            None => Ok(spec),
        }
    }

    pub fn build_hamiltonian(&self, spec: &ChainSpec) -> ddkit_core::Result<HamiltonianMatrix> {
        match self.chain.frame {
            FrameChoice::Rotating => build_rotating_frame(spec),
            FrameChoice::Lab => build_lab_frame(spec, self.chain.omega.unwrap_or(0.0)),
        }
    }

    pub fn build_group(&self) -> CliResult<DecouplingGroup> {
        let n = self.chain.n_qubits;
        Ok(match self.group.kind {
            GroupKind::Nested => build_nested_group(n)?,
            GroupKind::Collective => build_collective_group(n)?,
            GroupKind::Custom => {
                let strings: Vec<String> = match (&self.group.elements, &self.group.file) {
                    (Some(e), None) => e.clone(),
                    (None, Some(path)) => std::fs::read_to_string(path)
                        .map_err(|e| CliError::io(path, e))?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(String::from)
                        .collect(),
                    _ => {
                        return Err(CliError::Validation(vec![
                            "group: custom groups need exactly one of `elements` or `file`".into(),
                        ]))
                    }
                };
                let elements = strings
                    .iter()
                    .map(|s| s.parse::<PauliString>())
                    .collect::<ddkit_core::Result<Vec<_>>>()?;
                DecouplingGroup::new("custom", elements)?
            }
        })
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> CliResult<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.chain_spec() {
            problems.push(format!("chain: {e}"));
        }
        if self.chain.frame == FrameChoice::Lab && self.chain.omega.is_none() {
            problems.push("chain.omega: required for the lab frame".into());
        }
        if self.chain.frame == FrameChoice::Rotating && self.chain.omega.is_some() {
            problems.push("chain.omega: only meaningful for the lab frame".into());
        }
        let custom = self.group.kind == GroupKind::Custom;
        if !custom && (self.group.elements.is_some() || self.group.file.is_some()) {
            problems.push("group: `elements`/`file` only apply to custom groups".into());
        }
        let group = match self.build_group() {
            Ok(g) => {
                if g.n_qubits() != self.chain.n_qubits {
                    problems.push(format!(
                        "group: elements act on {} qubits, chain has {}",
                        g.n_qubits(),
                        self.chain.n_qubits
                    ));
                }
                Some(g)
            }
            Err(e) => {
                problems.push(format!("group: {e}"));
                None
            }
        };
        let dts = self.dts();
        if dts.is_empty() {
            problems.push("run.dt: at least one value required".into());
        }
        if !(self.run.horizon > 0.0 && self.run.horizon.is_finite()) {
            problems.push(format!("run.horizon: must be positive, got {}", self.run.horizon));
        }
        for &dt in &dts {
            if !(dt > 0.0 && dt.is_finite()) {
                problems.push(format!("run.dt: must be positive, got {dt}"));
            } else if slots_in(self.run.horizon, dt).is_none() {
                problems.push(format!(
                    "run.horizon: {} is not a multiple of run.dt = {dt}",
                    self.run.horizon
                ));
            }
        }
        if self.run.realizations == 0 {
            problems.push("run.realizations: must be at least 1".into());
        }
        if let Some(iv) = self.run.sample_interval {
            if !(iv > 0.0 && iv.is_finite()) {
                problems.push(format!("run.sample_interval: must be positive, got {iv}"));
            } else if self.run.sampling == Sampling::IntraCycle {
                problems.push("run.sample_interval: only applies to per-cycle sampling".into());
            } else {
                for dt in dts.iter().copied().chain(self.protocols.iter().filter_map(|p| p.dt)) {
                    if dt > 0.0 && slots_in(iv, dt).is_none_or(|k| k == 0) {
                        problems.push(format!("run.sample_interval: {iv} is not a multiple of dt = {dt}"));
                    }
                }
            }
        }
        if self.protocols.is_empty() {
            problems.push("protocol: at least one [[protocol]] entry required".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, p) in self.protocols.iter().enumerate() {
            let at = format!("protocol[{i}]");
            let kind = match p.kind.parse::<ProtocolKind>() {
                Ok(k) => k,
                Err(e) => {
                    problems.push(format!("{at}.kind: {e}"));
                    continue;
                }
            };
            if !labels.insert(p.label.clone().unwrap_or_else(|| kind.tag().into())) {
                problems.push(format!("{at}.label: duplicate output label"));
            }
            match &p.cdd_level {
                Some(_) if kind != ProtocolKind::Cdd => {
                    problems.push(format!("{at}.cdd_level: only applies to CDD"))
                }
                Some(LevelSpec::Fixed(0)) => problems.push(format!("{at}.cdd_level: must be at least 1")),
                Some(LevelSpec::Word(w)) if w != "auto" => {
                    problems.push(format!("{at}.cdd_level: expected an integer or \"auto\", got {w:?}"))
                }
                _ => {}
            }
            if p.switch_level.is_some() && kind != ProtocolKind::Hybrid {
                problems.push(format!("{at}.switch_level: only applies to HYBRID"));
            }
            if p.switch_level == Some(0) {
                problems.push(format!("{at}.switch_level: must be at least 1"));
            }
            if let Some(dt) = p.dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    problems.push(format!("{at}.dt: must be positive, got {dt}"));
                } else if slots_in(self.run.horizon, dt).is_none() {
                    problems.push(format!("{at}.dt: run.horizon is not a multiple of {dt}"));
                }
            }
            if p.realizations == Some(0) {
                problems.push(format!("{at}.realizations: must be at least 1"));
            }
            if let (Some(path), Some(g)) = (&p.path, &group) {
                if let Err(e) = PulsePath::new(path.clone(), g.len()) {
                    problems.push(format!("{at}.path: {e}"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }

    /// Validates and expands the config into runnable jobs.
    pub fn prepare(&self) -> CliResult<Prepared> {
        self.validate()?;
        let spec = self.chain_spec()?;
        let hamiltonian = self.build_hamiltonian(&spec)?;
        let group = self.build_group()?;
        let mut jobs = Vec::new();
        let dts = self.dts();
        for p in &self.protocols {
            let kind: ProtocolKind = p.kind.parse()?;
            let job_dts = p.dt.map(|d| vec![d]).unwrap_or_else(|| dts.clone());
            for (k, &dt) in job_dts.iter().enumerate() {
                let total = slots_in(self.run.horizon, dt).expect("validated");
                let mut protocol = ProtocolConfig::new(kind);
                protocol.event_cap = p.event_cap.unwrap_or(DEFAULT_EVENT_CAP);
                if let Some(path) = &p.path {
                    protocol.path = Some(PulsePath::new(path.clone(), group.len())?);
                }
                if let Some(level) = p.switch_level {
                    protocol.hybrid_switch_level = level;
                }
                protocol.cdd_level = match &p.cdd_level {
                    Some(LevelSpec::Fixed(l)) => *l,
                    Some(LevelSpec::Word(_)) => auto_level(group.len(), total),
                    None => 1,
                };
                let slots = match self.run.sampling {
                    Sampling::PerCycle => {
                        let every = match self.run.sample_interval {
                            Some(iv) => slots_in(iv, dt).expect("validated"),
                            None => group.len() as u64,
                        };
                        (0..=total / every).map(|n| n * every).collect()
                    }
                    Sampling::IntraCycle => (0..=total).collect(),
                };
                let base = p.label.clone().unwrap_or_else(|| kind.tag().into());
                let label = if job_dts.len() > 1 { format!("{base}_dt{k}") } else { base };
                jobs.push(Job {
                    label,
                    protocol,
                    dt,
                    realizations: p.realizations.unwrap_or(self.run.realizations),
                    slots,
                });
            }
        }
        Ok(Prepared {
            spec,
            hamiltonian,
            group,
            jobs,
        })
    }
}

/// Smallest CDD level whose cycle `|G|^l` covers `slots`.
pub fn auto_level(group_len: usize, slots: u64) -> u32 {
    let mut level = 1;
    let mut len = group_len.max(2) as u64;
    while len < slots {
        len = len.saturating_mul(group_len.max(2) as u64);
        level += 1;
    }
    level
}
