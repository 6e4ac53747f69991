//! Result CSV files.
//!
//! A file starts with `# key: value` metadata lines, followed by the
//! `t,mean,stderr,min,max` table. The metadata is complete enough to rerun
//! the ensemble bit-exactly (see [`replay`]).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ddkit_core::fidelity::EnsembleResult;
use ddkit_core::groups::{build_collective_group, build_nested_group, DecouplingGroup, PulsePath};
use ddkit_core::hamiltonian::{build_lab_frame, build_rotating_frame, ChainSpec, HamiltonianMatrix};
use ddkit_core::pauli::PauliString;
use ddkit_core::schedule::{ProtocolConfig, ProtocolKind};

use crate::config::{FrameChoice, GroupKind, Job, Prepared, Sampling};
use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 5] = ["t", "mean", "stderr", "min", "max"];

pub fn build_id() -> &'static str {
    env!("DDKIT_BUILD_ID")
}

/// Everything recorded about one job.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub protocol: String,
    pub label: String,
    pub spec: ChainSpec,
    pub frame: FrameChoice,
    pub omega: Option<f64>,
    pub dt: f64,
    pub group_kind: GroupKind,
    pub group_elements: Vec<PauliString>,
    pub sampling: Sampling,
    pub stride: u64,
    pub horizon_slots: u64,
    pub cdd_level: u32,
    pub switch_level: u32,
    pub path: Option<Vec<usize>>,
    pub event_cap: u64,
    pub realizations: usize,
    pub requested_realizations: usize,
    pub root_seed: u64,
    pub build: String,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl RunMetadata {
    #[allow(clippy::too_many_arguments)]
    pub fn describe(
        prep: &Prepared,
        frame: FrameChoice,
        omega: Option<f64>,
        group_kind: GroupKind,
        sampling: Sampling,
        job: &Job,
        realizations: usize,
        root_seed: u64,
    ) -> Self {
        let stride = match job.slots.as_slice() {
            [_, b, ..] => *b,
            _ => 1,
        };
        RunMetadata {
            protocol: job.protocol.kind.tag().into(),
            label: job.label.clone(),
            spec: prep.spec.clone(),
            frame,
            omega,
            dt: job.dt,
            group_kind,
            group_elements: prep.group.elements().to_vec(),
            sampling,
            stride,
            horizon_slots: job.slots.last().copied().unwrap_or(0),
            cdd_level: job.protocol.cdd_level,
            switch_level: job.protocol.hybrid_switch_level,
            path: job.protocol.path.as_ref().map(|p| p.order().to_vec()),
            event_cap: job.protocol.event_cap,
            realizations,
            requested_realizations: job.realizations,
            root_seed,
            build: build_id().into(),
        }
    }

    fn lines(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("protocol", self.protocol.clone()),
            ("label", self.label.clone()),
            ("N", self.spec.n_qubits.to_string()),
            ("J", self.spec.coupling.to_string()),
            ("Delta", self.spec.anisotropy.to_string()),
            ("detunings", join(&self.spec.detunings)),
            (
                "frame",
                match (self.frame, self.omega) {
                    (FrameChoice::Lab, Some(w)) => format!("lab {w}"),
                    _ => "rotating".into(),
                },
            ),
            ("dt", self.dt.to_string()),
            ("group", self.group_kind.to_string()),
        ];
        if self.group_kind == GroupKind::Custom {
            v.push(("group_elements", join(&self.group_elements)));
        }
        v.extend([
            ("group_size", self.group_elements.len().to_string()),
            ("sampling", self.sampling.to_string()),
            ("stride_slots", self.stride.to_string()),
            ("horizon_slots", self.horizon_slots.to_string()),
            ("horizon", (self.horizon_slots as f64 * self.dt).to_string()),
            ("cdd_level", self.cdd_level.to_string()),
            ("switch_level", self.switch_level.to_string()),
            (
                "path",
                self.path.as_ref().map_or_else(|| "canonical".into(), join),
            ),
            ("event_cap", self.event_cap.to_string()),
            ("R", self.realizations.to_string()),
            ("R_requested", self.requested_realizations.to_string()),
            ("root_seed", self.root_seed.to_string()),
            ("build", self.build.clone()),
        ]);
        v
    }

    pub fn parse(map: &BTreeMap<String, String>, origin: &Path) -> CliResult<Self> {
        let bad = |msg: String| CliError::format(origin, 0, msg);
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| bad(format!("missing metadata `{k}`")));
        fn num<T: std::str::FromStr>(k: &str, v: &str, origin: &Path) -> CliResult<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse()
                .map_err(|e| CliError::format(origin, 0, format!("metadata `{k}`: {e}")))
        }
        let nums = |k: &str| -> CliResult<Vec<f64>> {
            get(k)?.split_whitespace().map(|x| num(k, x, origin)).collect()
        };
        let n: usize = num("N", get("N")?, origin)?;
        let spec = ChainSpec::new(n, num("J", get("J")?, origin)?, num("Delta", get("Delta")?, origin)?)?
            .with_detunings(nums("detunings")?)?;
        let (frame, omega) = match get("frame")?.split_whitespace().collect::<Vec<_>>()[..] {
            ["rotating"] => (FrameChoice::Rotating, None),
            ["lab", w] => (FrameChoice::Lab, Some(num("frame", w, origin)?)),
            _ => return Err(bad("metadata `frame`: expected `rotating` or `lab OMEGA`".into())),
        };
        let group_kind = match get("group")? {
            "nested" => GroupKind::Nested,
            "collective" => GroupKind::Collective,
            "custom" => GroupKind::Custom,
            g => return Err(bad(format!("metadata `group`: unknown group {g:?}"))),
        };
        let group_elements = match group_kind {
            GroupKind::Nested => build_nested_group(n)?.elements().to_vec(),
            GroupKind::Collective => build_collective_group(n)?.elements().to_vec(),
            GroupKind::Custom => get("group_elements")?
                .split_whitespace()
                .map(str::parse)
                .collect::<ddkit_core::Result<_>>()?,
        };
        let sampling = match get("sampling")? {
            "per-cycle" => Sampling::PerCycle,
            "intra-cycle" => Sampling::IntraCycle,
            s => return Err(bad(format!("metadata `sampling`: unknown mode {s:?}"))),
        };
        let path = match get("path")? {
            "canonical" => None,
            p => Some(p.split_whitespace().map(|x| num("path", x, origin)).collect::<CliResult<_>>()?),
        };
        Ok(RunMetadata {
            protocol: get("protocol")?.into(),
            label: get("label")?.into(),
            spec,
            frame,
            omega,
            dt: num("dt", get("dt")?, origin)?,
            group_kind,
            group_elements,
            sampling,
            stride: num("stride_slots", get("stride_slots")?, origin)?,
            horizon_slots: num("horizon_slots", get("horizon_slots")?, origin)?,
            cdd_level: num("cdd_level", get("cdd_level")?, origin)?,
            switch_level: num("switch_level", get("switch_level")?, origin)?,
            path,
            event_cap: num("event_cap", get("event_cap")?, origin)?,
            realizations: num("R", get("R")?, origin)?,
            requested_realizations: num("R_requested", get("R_requested")?, origin)?,
            root_seed: num("root_seed", get("root_seed")?, origin)?,
            build: get("build")?.into(),
        })
    }

    pub fn hamiltonian(&self) -> CliResult<HamiltonianMatrix> {
        Ok(match (self.frame, self.omega) {
            (FrameChoice::Lab, Some(w)) => build_lab_frame(&self.spec, w)?,
            _ => build_rotating_frame(&self.spec)?,
        })
    }

    pub fn group(&self) -> CliResult<DecouplingGroup> {
        Ok(DecouplingGroup::new(
            self.group_kind.to_string(),
            self.group_elements.clone(),
        )?)
    }

    /// The single job this file records.
    pub fn job(&self) -> CliResult<Job> {
        let kind: ProtocolKind = self.protocol.parse()?;
        let mut protocol = ProtocolConfig::new(kind)
            .with_cdd_level(self.cdd_level)
            .with_switch_level(self.switch_level);
        protocol.event_cap = self.event_cap;
        if let Some(p) = &self.path {
            protocol.path = Some(PulsePath::new(p.clone(), self.group_elements.len())?);
        }
        let stride = self.stride.max(1);
        Ok(Job {
            label: self.label.clone(),
            protocol,
            dt: self.dt,
            realizations: self.requested_realizations,
            slots: (0..=self.horizon_slots / stride).map(|k| k * stride).collect(),
        })
    }
}

/// One result file in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultFile {
    pub metadata: RunMetadata,
    pub result: EnsembleResult,
}

pub fn write_csv(mut w: impl Write, meta: &RunMetadata, result: &EnsembleResult) -> CliResult<()> {
    let io = |e| CliError::io(Path::new("<csv>"), e);
    for (k, v) in meta.lines() {
        writeln!(w, "# {k}: {v}").map_err(io)?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(HEADER)?;
    for i in 0..result.times.len() {
        csv.write_record([
            result.times[i].to_string(),
            result.mean[i].to_string(),
            result.stderr[i].to_string(),
            result.min[i].to_string(),
            result.max[i].to_string(),
        ])?;
    }
    csv.flush().map_err(io)?;
    Ok(())
}

pub fn save_csv(path: &Path, meta: &RunMetadata, result: &EnsembleResult) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), meta, result).map_err(|e| match e {
        CliError::Io { source, .. } => CliError::io(path, source),
        other => other,
    })
}

pub fn read_csv(r: impl BufRead, origin: &Path) -> CliResult<ResultFile> {
    let mut map = BTreeMap::new();
    let mut body = String::new();
    let mut body_start = 0;
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(origin, e))?;
        match line.strip_prefix('#') {
            Some(rest) if body.is_empty() => {
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| CliError::format(origin, i + 1, "metadata line needs `key: value`"))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
                body_start = i + 1;
            }
            _ => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let metadata = RunMetadata::parse(&map, origin)?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != HEADER {
        return Err(CliError::format(origin, body_start + 1, format!("unexpected header {header:?}")));
    }
    let (mut times, mut mean, mut stderr, mut min, mut max) = (vec![], vec![], vec![], vec![], vec![]);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = body_start + i + 2;
        let vals: Vec<f64> = rec
            .iter()
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::format(origin, line, e.to_string()))?;
        let [t, m, s, lo, hi] = vals[..] else {
            return Err(CliError::format(origin, line, "expected 5 columns"));
        };
        times.push(t);
        mean.push(m);
        stderr.push(s);
        min.push(lo);
        max.push(hi);
    }
    let result = EnsembleResult {
        protocol: metadata.protocol.clone(),
        times,
        mean,
        stderr,
        min,
        max,
        realizations: metadata.realizations,
        root_seed: metadata.root_seed,
    };
    Ok(ResultFile { metadata, result })
}

pub fn load_csv(path: &Path) -> CliResult<ResultFile> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv(std::io::BufReader::new(file), path)
}

/// Reruns the ensemble described by a result file.
pub fn replay(meta: &RunMetadata, workers: usize) -> CliResult<EnsembleResult> {
    let prep = Prepared {
        spec: meta.spec.clone(),
        hamiltonian: meta.hamiltonian()?,
        group: meta.group()?,
        jobs: vec![meta.job()?],
    };
    let pool = crate::ensemble::pool(workers)?;
    let mut results = crate::ensemble::run_jobs(&prep, meta.root_seed, &pool)?;
    Ok(results.remove(0))
}
