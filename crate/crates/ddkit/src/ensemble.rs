//! Parallel ensemble execution.
//!
//! Every (job, realization) pair is an independent task. Results are merged
//! by realization index, so the output does not depend on the pool size.

use std::time::{Duration, Instant};

use ddkit_core::fidelity::{
    check_plan, effective_realizations, run_realization, EnsembleResult, EnsembleSamples, FidelityTrace,
    SamplePlan,
};
use ddkit_core::propagation::FreeStep;
use ddkit_core::schedule::RealizationSeed;
use rayon::prelude::*;

use crate::config::Prepared;
use crate::error::{CliError, CliResult};

/// Worker pool; `0` means one thread per core.
pub fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(vec![format!("--workers: {e}")]))
}

/// Runs every job of `prep`, returning results in job order.
pub fn run_jobs(prep: &Prepared, root_seed: u64, pool: &rayon::ThreadPool) -> CliResult<Vec<EnsembleResult>> {
    Ok(run_jobs_timed(prep, root_seed, pool)?.0)
}

/// As [`run_jobs`], also reporting the summed task time per job.
pub fn run_jobs_timed(
    prep: &Prepared,
    root_seed: u64,
    pool: &rayon::ThreadPool,
) -> CliResult<(Vec<EnsembleResult>, Vec<Duration>)> {
    let mut frees = Vec::with_capacity(prep.jobs.len());
    let mut plans = Vec::with_capacity(prep.jobs.len());
    let mut tasks = Vec::new();
    for (j, job) in prep.jobs.iter().enumerate() {
        let plan = SamplePlan::from_slots(job.slots.clone());
        check_plan(&job.protocol, &plan)?;
        frees.push(FreeStep::new(&prep.hamiltonian, job.dt)?);
        plans.push(plan);
        let r = effective_realizations(&job.protocol, job.realizations);
        tasks.extend((0..r as u64).map(|k| (j, k)));
    }
    let traces: Vec<ddkit_core::Result<(usize, FidelityTrace, Duration)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(j, k)| {
                let start = Instant::now();
                let job = &prep.jobs[j];
                let seed = RealizationSeed::new(root_seed, k);
                let trace = run_realization(&job.protocol, &prep.group, &frees[j], seed, &plans[j])?;
                Ok((j, trace, start.elapsed()))
            })
            .collect()
    });
    let mut samples: Vec<EnsembleSamples> = prep
        .jobs
        .iter()
        .zip(&plans)
        .map(|(job, plan)| EnsembleSamples::new(job.protocol.kind.tag(), root_seed, plan.times(job.dt)))
        .collect();
    let mut elapsed = vec![Duration::ZERO; prep.jobs.len()];
    for t in traces {
        let (j, trace, took) = t?;
        elapsed[j] += took;
        samples[j].insert(trace)?;
    }
    let results = samples
        .iter()
        .map(|s| s.result())
        .collect::<ddkit_core::Result<Vec<_>>>()?;
    Ok((results, elapsed))
}
