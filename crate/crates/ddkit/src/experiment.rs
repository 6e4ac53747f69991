//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use ddkit_core::aht::{
    decay_bound, default_residual_threshold, effective_hamiltonian, residual_terms, BoundSpec, CycleDescription,
};
use ddkit_core::fidelity::{check_plan, effective_realizations, EnsembleResult, SamplePlan};
use ddkit_core::hamiltonian::convergence_check;
use ddkit_core::linalg::spectral_norm;
use ddkit_core::pauli::{conjugate_sign, PauliString};
use ddkit_core::propagation::{propagate, FreeStep, PropagationState};
use ddkit_core::schedule::{ProtocolKind, RealizationSeed};
use ddkit_core::DEFAULT_MAX_QUBITS;

use crate::config::{ExperimentConfig, Job, Prepared};
use crate::ensemble;
use crate::error::{CliError, CliResult};
use crate::output::{save_csv, RunMetadata};
use crate::presets::Panel;
use crate::schedule_file::ScheduleFile;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Worker threads; `0` uses every core.
    pub workers: usize,
    pub seed: Option<u64>,
    /// Also write the first realization's schedule next to each CSV.
    pub dump_schedule: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub results: Vec<(String, EnsembleResult)>,
    pub summary: String,
}

fn threads(workers: usize) -> usize {
    if workers > 0 {
        workers
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Cycle time used for the `kappa T_c` check.
fn cycle_time(prep: &Prepared, job: &Job) -> f64 {
    let len = job
        .protocol
        .schedule(&prep.group, job.dt, RealizationSeed::new(0, 0))
        .ok()
        .and_then(|s| s.cycle_len())
        .filter(|_| job.protocol.kind != ProtocolKind::Free)
        .unwrap_or(prep.group.len());
    len as f64 * job.dt
}

pub fn cmd_run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunReport> {
    let seed = opts.seed.unwrap_or(cfg.run.seed);
    let prep = cfg.prepare()?;
    let est = estimate_prepared(&prep, opts.workers, true)?;
    for job in &prep.jobs {
        if let Err(e) = check_plan(&job.protocol, &SamplePlan::from_slots(job.slots.clone())) {
            return Err(CliError::Refused {
                source: e,
                estimate: est.report(),
            });
        }
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let mut summary = String::new();
    let kappa = prep.hamiltonian.kappa();
    let _ = writeln!(summary, "kappa = {kappa:.6}");
    for job in &prep.jobs {
        let check = convergence_check(kappa, cycle_time(&prep, job));
        let _ = writeln!(
            summary,
            "{:<12} dt = {:<10} T_c = {:<10.6} kappa*T_c = {:.4}{}",
            job.label,
            job.dt,
            check.cycle_time,
            check.product(),
            if check.converges { "" } else { "  (series not guaranteed to converge)" }
        );
    }

    let pool = ensemble::pool(opts.workers)?;
    let start = Instant::now();
    let (results, _) = ensemble::run_jobs_timed(&prep, seed, &pool)?;
    let actual = start.elapsed();
    let _ = writeln!(
        summary,
        "runtime: estimated {}, actual {}",
        human(est.wall_seconds()),
        human(actual.as_secs_f64())
    );

    let mut files = Vec::new();
    let mut labeled = Vec::new();
    for (job, result) in prep.jobs.iter().zip(results) {
        let meta = RunMetadata::describe(
            &prep,
            cfg.chain.frame,
            cfg.chain.omega,
            cfg.group.kind,
            cfg.run.sampling,
            job,
            result.realizations,
            seed,
        );
        let path = out.join(format!("{}.csv", job.label));
        save_csv(&path, &meta, &result)?;
        let _ = writeln!(summary, "wrote {}", path.display());
        files.push(path);
        if opts.dump_schedule {
            let path = out.join(format!("{}.sched", job.label));
            let schedule = job.protocol.schedule(&prep.group, job.dt, RealizationSeed::new(seed, 0))?;
            let slots = job.slots.last().copied().unwrap_or(0).max(1) as usize;
            ScheduleFile::capture(&schedule, slots).save(&path)?;
            let _ = writeln!(summary, "wrote {}", path.display());
            files.push(path);
        }
        labeled.push((job.label.clone(), result));
    }
    Ok(RunReport {
        files,
        results: labeled,
        summary,
    })
}

/// Runs every panel into `out/<figure>/<panel>/`.
pub fn cmd_figure(figure: &str, panels: &[Panel], opts: &RunOptions) -> CliResult<Vec<RunReport>> {
    let root = opts.out.clone().unwrap_or_else(|| PathBuf::from(".")).join(figure);
    panels
        .iter()
        .map(|p| {
            let o = RunOptions {
                out: Some(root.join(p.name)),
                ..opts.clone()
            };
            let mut r = cmd_run(&p.config, &o)?;
            r.summary = format!("[{figure} {}]\n{}", p.name, r.summary);
            Ok(r)
        })
        .collect()
}

fn human(seconds: f64) -> String {
    if seconds < 1.0 {
        format!("{:.0} ms", seconds * 1e3)
    } else if seconds < 120.0 {
        format!("{seconds:.1} s")
    } else if seconds < 7200.0 {
        format!("{:.1} min", seconds / 60.0)
    } else {
        format!("{:.1} h", seconds / 3600.0)
    }
}

fn bytes(b: u64) -> String {
    const MIB: f64 = 1024.0 * 1024.0;
    if (b as f64) < MIB {
        format!("{:.1} KiB", b as f64 / 1024.0)
    } else {
        format!("{:.1} MiB", b as f64 / MIB)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobEstimate {
    pub label: String,
    pub realizations: usize,
    pub slots: u64,
    pub steps: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub n_qubits: usize,
    pub dim: usize,
    pub jobs: Vec<JobEstimate>,
    pub total_steps: u128,
    /// One dense `d x d` complex matrix.
    pub matrix_bytes: u64,
    pub memory_bytes: u64,
    pub seconds_per_step: Option<f64>,
    pub workers: usize,
}

/// Dense matrices held per worker: propagator plus gather, product and
/// kernel scratch.
const MATRICES_PER_WORKER: u64 = 4;
/// Shared matrices: Hamiltonian, eigenvectors, free step.
const SHARED_MATRICES: u64 = 3;

impl Estimate {
    pub fn wall_seconds(&self) -> f64 {
        self.seconds_per_step.unwrap_or(0.0) * self.total_steps as f64 / self.workers as f64
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "N = {}, d = {}", self.n_qubits, self.dim);
        for j in &self.jobs {
            let _ = writeln!(
                s,
                "{:<12} R = {:<5} T/dt = {:<9} steps = {}",
                j.label, j.realizations, j.slots, j.steps
            );
        }
        let _ = writeln!(s, "total steps = {} ({:.3e})", self.total_steps, self.total_steps as f64);
        let _ = writeln!(
            s,
            "memory: {} per {}x{} matrix, about {} with {} worker(s)",
            bytes(self.matrix_bytes),
            self.dim,
            self.dim,
            bytes(self.memory_bytes),
            self.workers
        );
        if let Some(sps) = self.seconds_per_step {
            let _ = writeln!(
                s,
                "calibration: {:.3} ms/step, estimated wall clock {}",
                sps * 1e3,
                human(self.wall_seconds())
            );
        }
        s
    }
}

/// Resource estimate for a config; `calibrate` times a short run.
pub fn cmd_estimate(cfg: &ExperimentConfig, workers: usize, calibrate: bool) -> CliResult<Estimate> {
    let n = cfg.chain.n_qubits;
    if n > DEFAULT_MAX_QUBITS {
        return Err(ddkit_core::Error::TooManyQubits {
            requested: n,
            max: DEFAULT_MAX_QUBITS,
        }
        .into());
    }
    estimate_prepared(&cfg.prepare()?, workers, calibrate)
}

fn estimate_prepared(prep: &Prepared, workers: usize, calibrate: bool) -> CliResult<Estimate> {
    let n = prep.spec.n_qubits;
    let dim = 1usize << n;
    let jobs: Vec<JobEstimate> = prep
        .jobs
        .iter()
        .map(|j| {
            let r = effective_realizations(&j.protocol, j.realizations);
            let slots = j.slots.last().copied().unwrap_or(0);
            JobEstimate {
                label: j.label.clone(),
                realizations: r,
                slots,
                steps: r as u128 * slots as u128,
            }
        })
        .collect();
    let total_steps = jobs.iter().map(|j| j.steps).sum();
    let workers = threads(workers);
    let matrix_bytes = 16 * (dim as u64) * (dim as u64);
    let seconds_per_step = match (calibrate, prep.jobs.first()) {
        (true, Some(job)) => Some(calibration(prep, job.dt)?),
        _ => None,
    };
    Ok(Estimate {
        n_qubits: n,
        dim,
        jobs,
        total_steps,
        matrix_bytes,
        memory_bytes: matrix_bytes * (MATRICES_PER_WORKER * workers as u64 + SHARED_MATRICES),
        seconds_per_step,
        workers,
    })
}

/// Seconds per propagation step, from a short run cycling through the group.
fn calibration(prep: &Prepared, dt: f64) -> CliResult<f64> {
    const BUDGET: Duration = Duration::from_millis(30);
    let free = FreeStep::new(&prep.hamiltonian, dt)?;
    let mut state = PropagationState::new(&free);
    let elements = prep.group.elements();
    let start = Instant::now();
    let mut steps = 0u64;
    while steps < 3 || (start.elapsed() < BUDGET && steps < 2000) {
        state.step(&elements[(steps as usize * 7 + 1) % elements.len()], &free)?;
        steps += 1;
    }
    Ok(start.elapsed().as_secs_f64() / steps as f64)
}

/// Number of residual terms listed per protocol.
const AHT_TOP_TERMS: usize = 12;

/// Average-Hamiltonian diagnostics for every deterministic protocol.
pub fn cmd_aht(cfg: &ExperimentConfig) -> CliResult<String> {
    let prep = cfg.prepare()?;
    let h = prep.hamiltonian.matrix();
    let n = prep.spec.n_qubits;
    let kappa = prep.hamiltonian.kappa();
    let horizon = cfg.run.horizon;
    let mut s = String::new();
    let _ = writeln!(s, "N = {n}, group {} (|G| = {}), kappa = {kappa:.6}", prep.group.label(), prep.group.len());
    for job in &prep.jobs {
        let kind = job.protocol.kind;
        let _ = writeln!(s, "\n== {} (dt = {})", job.label, job.dt);
        if let Ok(spec) = BoundSpec::for_protocol(kind) {
            let b = decay_bound(&spec, horizon, job.dt, prep.group.len(), kappa)?;
            let _ = writeln!(
                s,
                "bound: T^{} L^{} kappa^{} at T = {horizon}: {b:.4e}",
                spec.time_exponent, spec.length_exponent, spec.kappa_exponent
            );
        }
        if !kind.is_deterministic() {
            let _ = writeln!(s, "no fixed cycle; bound only");
            continue;
        }
        let schedule = job.protocol.schedule(&prep.group, job.dt, RealizationSeed::new(0, 0))?;
        let len = schedule.cycle_len().unwrap_or(1);
        let frames: Vec<PauliString> = schedule.frames().take(len).collect();
        let cycle = CycleDescription::new(h, frames, job.dt)?;
        let tc = cycle.cycle_time();
        let check = convergence_check(kappa, tc);
        let m0 = spectral_norm(&cycle.magnus0());
        let m1 = spectral_norm(&cycle.magnus1());
        let _ = writeln!(s, "T_c = {tc}, kappa*T_c = {:.4}", check.product());
        if let Some(w) = check.warning() {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "|magnus0| = {m0:.4e}  (/kappa = {:.4e})", m0 / kappa);
        let _ = writeln!(s, "|magnus1| = {m1:.4e}  (/kappa^2 T_c = {:.4e})", m1 / (kappa * kappa * tc));
        if !schedule.is_cyclic() {
            let _ = writeln!(s, "cycle does not close; no effective Hamiltonian");
            continue;
        }
        let free = FreeStep::new(&prep.hamiltonian, job.dt)?;
        let u = propagate(&schedule, &free, &[len as u64])?.remove(0).matrix;
        let h_eff = effective_hamiltonian(&u, tc)?;
        let terms = residual_terms(&h_eff, n, default_residual_threshold(kappa))?;
        let _ = writeln!(s, "H_eff: {} terms above {:.1e}", terms.len(), default_residual_threshold(kappa));
        for (p, c) in terms.sorted().into_iter().take(AHT_TOP_TERMS) {
            let _ = writeln!(s, "  {c:+.6e} {}", p.letters_string());
        }
        let pairs = same_letter_pairs(&terms, &prep.group)?;
        if !pairs.is_empty() {
            let _ = writeln!(s, "two-body XX/YY/ZZ terms (coefficient, pulse-invariant):");
            for (p, c, invariant) in pairs {
                let _ = writeln!(s, "  {c:+.6e} {} {}", p.letters_string(), if invariant { "yes" } else { "no" });
            }
        }
    }
    Ok(s)
}

/// Weight-2 terms with equal letters, and whether every group element
/// commutes with them.
pub fn same_letter_pairs(
    terms: &ddkit_core::pauli::PauliDecomposition,
    group: &ddkit_core::groups::DecouplingGroup,
) -> CliResult<Vec<(PauliString, f64, bool)>> {
    let mut out = Vec::new();
    for (p, c) in terms.sorted() {
        let letters: Vec<_> = p.support().map(|q| p.letter(q)).collect();
        if letters.len() == 2 && letters[0] == letters[1] {
            let mut invariant = true;
            for g in group.elements() {
                invariant &= conjugate_sign(g, &p)? == 1;
            }
            out.push((p, c, invariant));
        }
    }
    Ok(out)
}
