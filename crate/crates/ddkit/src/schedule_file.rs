//! Plain-text schedule files.
//!
//! ```text
//! # protocol NRD
//! # dt 0.1
//! # seed 7 0
//! # group collective
//! # qubits 4
//! # k t_k pulse frame
//! 0 0 +1·XXXX +1·XXXX
//! 1 0.1 +1·YYYY +1·ZZZZ
//! ```
//!
//! Times use the shortest decimal that parses back to the same `f64`, so a
//! write/read cycle is bit-exact.

use std::io::{BufRead, Write};
use std::path::Path;

use ddkit_core::pauli::PauliString;
use ddkit_core::schedule::{Event, RealizationSeed, Schedule};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFile {
    pub protocol: String,
    pub dt: f64,
    pub seed: Option<RealizationSeed>,
    pub group_label: String,
    pub n_qubits: usize,
    pub events: Vec<Event>,
}

impl ScheduleFile {
    /// Records the first `slots` events of `schedule`.
    pub fn capture(schedule: &Schedule, slots: usize) -> Self {
        ScheduleFile {
            protocol: schedule.protocol().into(),
            dt: schedule.dt(),
            seed: schedule.seed(),
            group_label: schedule.group_label().into(),
            n_qubits: schedule.n_qubits(),
            events: schedule.events().take(slots).collect(),
        }
    }

    /// Replayable schedule with the recorded frames.
    pub fn to_schedule(&self) -> CliResult<Schedule> {
        let frames = self.events.iter().map(|e| e.frame).collect();
        Ok(Schedule::frozen(
            self.protocol.clone(),
            self.dt,
            self.seed,
            self.group_label.clone(),
            frames,
        )?)
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# protocol {}", self.protocol)?;
        writeln!(w, "# dt {}", self.dt)?;
        match self.seed {
            Some(s) => writeln!(w, "# seed {} {}", s.root, s.stream)?,
            None => writeln!(w, "# seed none")?,
        }
        writeln!(w, "# group {}", self.group_label)?;
        writeln!(w, "# qubits {}", self.n_qubits)?;
        writeln!(w, "# k t_k pulse frame")?;
        for e in &self.events {
            writeln!(w, "{} {} {} {}", e.index, e.time, e.pulse, e.frame)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read(std::io::BufReader::new(file), path)
    }

    /// Parses a schedule file; `origin` only labels error messages.
    pub fn read(r: impl BufRead, origin: &Path) -> CliResult<Self> {
        let mut protocol = None;
        let mut dt = None;
        let mut seed = None;
        let mut group_label = None;
        let mut n_qubits = None;
        let mut events: Vec<Event> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| CliError::io(origin, e))?;
            let bad = |msg: String| CliError::format(origin, lineno, msg);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                let key = it.next().unwrap_or("");
                let vals: Vec<&str> = it.collect();
                match (key, vals.as_slice()) {
                    ("protocol", [p]) => protocol = Some(p.to_string()),
                    ("dt", [v]) => dt = Some(v.parse::<f64>().map_err(|e| bad(format!("dt: {e}")))?),
                    ("seed", ["none"]) => seed = Some(None),
                    ("seed", [a, b]) => {
                        let root = a.parse().map_err(|e| bad(format!("seed: {e}")))?;
                        let stream = b.parse().map_err(|e| bad(format!("seed: {e}")))?;
                        seed = Some(Some(RealizationSeed::new(root, stream)));
                    }
                    ("group", [g]) => group_label = Some(g.to_string()),
                    ("qubits", [n]) => n_qubits = Some(n.parse().map_err(|e| bad(format!("qubits: {e}")))?),
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [k, t, pulse, frame] = fields[..] else {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            };
            let index: u64 = k.parse().map_err(|e| bad(format!("k: {e}")))?;
            if index != events.len() as u64 {
                return Err(bad(format!("expected event {}, found {index}", events.len())));
            }
            let time: f64 = t.parse().map_err(|e| bad(format!("t_k: {e}")))?;
            let pulse: PauliString = pulse.parse().map_err(|e| bad(format!("pulse: {e}")))?;
            let frame: PauliString = frame.parse().map_err(|e| bad(format!("frame: {e}")))?;
            let prev = events
                .last()
                .map(|e| e.frame)
                .unwrap_or_else(|| PauliString::identity(frame.n_qubits()));
            let composed = pulse.multiply(&prev).map_err(|e| bad(e.to_string()))?;
            if composed != frame {
                return Err(bad(format!("frame {frame} is not pulse {pulse} times {prev}")));
            }
            events.push(Event {
                index,
                time,
                pulse,
                frame,
            });
        }
        let missing = |what: &str| CliError::format(origin, 0, format!("missing `# {what}` header"));
        let file = ScheduleFile {
            protocol: protocol.ok_or_else(|| missing("protocol"))?,
            dt: dt.ok_or_else(|| missing("dt"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            group_label: group_label.ok_or_else(|| missing("group"))?,
            n_qubits: n_qubits.ok_or_else(|| missing("qubits"))?,
            events,
        };
        if let Some(e) = file.events.iter().find(|e| e.frame.n_qubits() != file.n_qubits) {
            return Err(CliError::format(
                origin,
                0,
                format!("event {} acts on {} qubits, header says {}", e.index, e.frame.n_qubits(), file.n_qubits),
            ));
        }
        Ok(file)
    }
}
