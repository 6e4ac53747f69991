//! Fidelity measures and Monte-Carlo aggregation over control realizations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
// Float math for no_std builds; shadowed by inherent methods under std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::groups::DecouplingGroup;
use crate::linalg::{trace, unitarity_deviation, CMat};
use crate::propagation::{propagate_traces, FreeStep};
use crate::schedule::{ProtocolConfig, RealizationSeed};

/// Unitarity tolerance for fidelity inputs.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

/// `|Tr U / d|^2`.
pub fn entanglement_fidelity(u: &CMat) -> Result<f64> {
    let deviation = unitarity_deviation(u);
    if deviation > UNITARITY_TOLERANCE {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: UNITARITY_TOLERANCE,
        });
    }
    Ok(fidelity_from_trace(trace(u), u.nrows()))
}

#[inline]
pub fn fidelity_from_trace(tr: Complex64, d: usize) -> f64 {
    (tr / d as f64).norm_sqr()
}

/// `|<psi| U |psi>|^2`.
pub fn pure_state_fidelity(u: &CMat, psi: &[Complex64]) -> Result<f64> {
    let deviation = unitarity_deviation(u);
    if deviation > UNITARITY_TOLERANCE {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: UNITARITY_TOLERANCE,
        });
    }
    if psi.len() != u.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            actual: psi.len(),
        });
    }
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("state norm {norm} is not 1")));
    }
    let mut overlap = Complex64::new(0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, b) in psi.iter().enumerate() {
            row += u[(i, j)] * b;
        }
        overlap += a.conj() * row;
    }
    Ok(overlap.norm_sqr())
}

/// Slot boundaries at which fidelity is recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    slots: Vec<u64>,
}

impl SamplePlan {
    /// `T_n = n * cycle_len * dt` for `n = 0..=cycles`.
    pub fn per_cycle(cycle_len: u64, cycles: u64) -> Self {
        SamplePlan {
            slots: (0..=cycles).map(|n| n * cycle_len).collect(),
        }
    }

    /// Every slot boundary `0..=slots`.
    pub fn intra_cycle(slots: u64) -> Self {
        SamplePlan {
            slots: (0..=slots).collect(),
        }
    }

    pub fn from_slots(mut slots: Vec<u64>) -> Self {
        slots.sort_unstable();
        slots.dedup();
        SamplePlan { slots }
    }

    pub fn slots(&self) -> &[u64] {
        &self.slots
    }

    pub fn last_slot(&self) -> u64 {
        self.slots.last().copied().unwrap_or(0)
    }

    pub fn times(&self, dt: f64) -> Vec<f64> {
        self.slots.iter().map(|&k| k as f64 * dt).collect()
    }
}

/// Fidelity of one realization at the plan's sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTrace {
    pub protocol: String,
    pub realization: u64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Entanglement fidelity along one realization of `config`.
pub fn run_realization(
    config: &ProtocolConfig,
    group: &DecouplingGroup,
    free: &FreeStep,
    seed: RealizationSeed,
    plan: &SamplePlan,
) -> Result<FidelityTrace> {
    let schedule = config.schedule(group, free.dt(), seed)?;
    let d = free.dim();
    let values = propagate_traces(&schedule, free, plan.slots())?
        .into_iter()
        .map(|tr| fidelity_from_trace(tr, d))
        .collect();
    Ok(FidelityTrace {
        protocol: String::from(schedule.protocol()),
        realization: seed.stream,
        times: plan.times(free.dt()),
        values,
    })
}

/// Per-realization traces keyed by realization index, so that partial
/// ensembles merge into exactly the result of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSamples {
    protocol: String,
    root_seed: u64,
    times: Vec<f64>,
    samples: BTreeMap<u64, Vec<f64>>,
}

impl EnsembleSamples {
    pub fn new(protocol: impl Into<String>, root_seed: u64, times: Vec<f64>) -> Self {
        EnsembleSamples {
            protocol: protocol.into(),
            root_seed,
            times,
            samples: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, trace: FidelityTrace) -> Result<()> {
        if trace.values.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                actual: trace.values.len(),
            });
        }
        if self.samples.insert(trace.realization, trace.values).is_some() {
            return Err(Error::invalid(format!(
                "realization {} recorded twice",
                trace.realization
            )));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: EnsembleSamples) -> Result<()> {
        if other.times != self.times || other.root_seed != self.root_seed {
            return Err(Error::invalid("cannot merge ensembles with different grids or seeds"));
        }
        for (realization, values) in other.samples {
            self.insert(FidelityTrace {
                protocol: other.protocol.clone(),
                realization,
                times: Vec::new(),
                values,
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trace(&self, realization: u64) -> Option<&[f64]> {
        self.samples.get(&realization).map(Vec::as_slice)
    }

    pub fn result(&self) -> Result<EnsembleResult> {
        let r = self.samples.len();
        if r == 0 {
            return Err(Error::invalid("ensemble has no realizations"));
        }
        let n = self.times.len();
        let mut mean = alloc::vec![0.0; n];
        let mut min = alloc::vec![f64::INFINITY; n];
        let mut max = alloc::vec![f64::NEG_INFINITY; n];
        for values in self.samples.values() {
            for i in 0..n {
                mean[i] += values[i];
                min[i] = min[i].min(values[i]);
                max[i] = max[i].max(values[i]);
            }
        }
        for m in &mut mean {
            *m /= r as f64;
        }
        let mut stderr = alloc::vec![0.0; n];
        if r > 1 {
            for values in self.samples.values() {
                for i in 0..n {
                    stderr[i] += (values[i] - mean[i]).powi(2);
                }
            }
            for s in &mut stderr {
                *s = (*s / (r - 1) as f64).sqrt() / (r as f64).sqrt();
            }
        }
        for i in 0..n {
            // Rounding in the running sum can push the mean a hair outside.
            mean[i] = mean[i].clamp(min[i], max[i]);
        }
        Ok(EnsembleResult {
            protocol: self.protocol.clone(),
            times: self.times.clone(),
            mean,
            stderr,
            min,
            max,
            realizations: r,
            root_seed: self.root_seed,
        })
    }
}

/// Aggregated fidelity statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub protocol: String,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Unbiased sample standard deviation over `sqrt(R)`.
    pub stderr: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub realizations: usize,
    pub root_seed: u64,
}

/// Realizations actually run: deterministic protocols need only one.
pub fn effective_realizations(config: &ProtocolConfig, requested: usize) -> usize {
    if config.kind.is_deterministic() {
        1
    } else {
        requested
    }
}

/// Sequential ensemble run. Realization `r` uses stream `r` of `root_seed`.
pub fn run_ensemble(
    config: &ProtocolConfig,
    group: &DecouplingGroup,
    free: &FreeStep,
    plan: &SamplePlan,
    realizations: usize,
    root_seed: u64,
) -> Result<EnsembleResult> {
    if realizations == 0 {
        return Err(Error::invalid("need at least one realization"));
    }
    check_plan(config, plan)?;
    let r = effective_realizations(config, realizations);
    let mut samples: Option<EnsembleSamples> = None;
    for k in 0..r as u64 {
        let trace = run_realization(config, group, free, RealizationSeed::new(root_seed, k), plan)?;
        samples
            .get_or_insert_with(|| EnsembleSamples::new(trace.protocol.clone(), root_seed, trace.times.clone()))
            .insert(trace)?;
    }
    samples.expect("at least one realization").result()
}

/// Rejects plans whose length exceeds the configured event cap.
pub fn check_plan(config: &ProtocolConfig, plan: &SamplePlan) -> Result<()> {
    if plan.last_slot() > config.event_cap {
        return Err(Error::EventCap {
            what: "slots per realization",
            requested: plan.last_slot() as u128,
            cap: config.event_cap,
        });
    }
    Ok(())
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::invalid("log-log fit needs at least two points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite data"));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("log-log fit needs distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if xs.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LogLogFit {
        slope,
        slope_stderr,
        intercept,
        points: xs.len(),
    })
}

/// Minimum number of usable samples for a decay-exponent fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Slope of `ln(1 - mean F)` against `ln T` over `window = (t_min, t_max)`.
///
/// Requires at least [`MIN_FIT_POINTS`] samples in the window whose `1 - F`
/// exceeds ten standard errors. The fit itself uses every sample in the
/// window with positive `1 - F`; filtering on the noise level would favour
/// realizations that happen to fluctuate low.
pub fn fit_decay_exponent(result: &EnsembleResult, window: (f64, f64)) -> Result<LogLogFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut resolved = 0;
    for i in 0..result.times.len() {
        let t = result.times[i];
        let infidelity = 1.0 - result.mean[i];
        if t >= window.0 && t <= window.1 && t > 0.0 && infidelity > 0.0 {
            xs.push(t);
            ys.push(infidelity);
            if infidelity > 10.0 * result.stderr[i] {
                resolved += 1;
            }
        }
    }
    if resolved < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "decay fit needs at least {MIN_FIT_POINTS} samples in [{}, {}] with 1-F > 10 stderr, found {resolved}",
            window.0,
            window.1,
        )));
    }
    fit_log_log(&xs, &ys)
}
