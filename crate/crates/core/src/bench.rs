//! Ablation harness: pure random sampling, the two single-memory variants and
//! the full search, each repeated over independently seeded macro-replications.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::{evaluate, DecisionSpace, StochasticObjective};
use crate::optimizer::{
    is_improvement, run_with_stream, Mode, OptimizationResult, TesoConfig, TrialRecord,
    TrialStatus,
};
use crate::stream::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Prs,
    TesoNoElite,
    TesoNoTabu,
    TesoFull,
}

impl Variant {
    /// Table order: baseline first, full algorithm last.
    pub const ALL: [Variant; 4] = [
        Variant::Prs,
        Variant::TesoNoElite,
        Variant::TesoNoTabu,
        Variant::TesoFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Prs => "PRS",
            Variant::TesoNoElite => "TESO-noElite",
            Variant::TesoNoTabu => "TESO-noTabu",
            Variant::TesoFull => "TESO",
        }
    }

    /// Identifier used in config files and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Variant::Prs => "prs",
            Variant::TesoNoElite => "teso-no-elite",
            Variant::TesoNoTabu => "teso-no-tabu",
            Variant::TesoFull => "teso",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.slug() == s || v.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown algorithm {s:?} (expected prs, teso-no-elite, teso-no-tabu or teso)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub variant: Variant,
    pub config: TesoConfig,
}

impl AlgorithmSpec {
    /// Applies the variant's ablation switches to `base`.
    pub fn new(variant: Variant, base: &TesoConfig) -> Self {
        let mut config = base.clone();
        match variant {
            Variant::Prs | Variant::TesoFull => {}
            Variant::TesoNoTabu => config.disable_tabu = true,
            Variant::TesoNoElite => config.disable_elite = true,
        }
        AlgorithmSpec { variant, config }
    }

    pub fn run<O: StochasticObjective + ?Sized>(
        &self,
        model: &O,
        space: &DecisionSpace,
        stream: Stream,
    ) -> Result<OptimizationResult> {
        match self.variant {
            Variant::Prs => run_prs(&self.config, model, space, stream),
            _ => run_with_stream(&self.config, model, space, stream),
        }
    }
}

/// Pure random sampling: `trials` uniform candidates, each replicated `n_rep`
/// times, no memory and no early stop.
pub fn run_prs<O: StochasticObjective + ?Sized>(
    config: &TesoConfig,
    model: &O,
    space: &DecisionSpace,
    stream: Stream,
) -> Result<OptimizationResult> {
    if config.trials == 0 {
        return Err(Error::invalid("trial budget must be at least 1"));
    }
    if config.n_rep == 0 {
        return Err(Error::invalid("n_rep must be at least 1"));
    }
    let mut f_best = config.direction.worst_value();
    let mut x_best = None;
    let mut trace = Vec::with_capacity(config.trials);
    for t in 1..=config.trials {
        let trial = stream.child(t as u64);
        let x = space.sample_uniform(&mut trial.child(0).rng());
        let eval = evaluate(model, &x, config.n_rep, trial.child(1))?;
        if is_improvement(eval.mean, f_best, config.direction) {
            f_best = eval.mean;
            x_best = Some(x.clone());
        }
        trace.push(TrialRecord {
            t,
            candidate: x,
            mode: Mode::Diversify,
            status: TrialStatus::Evaluated,
            mean: Some(eval.mean),
            std: Some(eval.std),
            best_so_far: f_best,
            eta: 0.0,
            samples: None,
        });
    }
    Ok(OptimizationResult {
        x_best: x_best.ok_or_else(|| Error::invalid("no candidate was evaluated"))?,
        f_best,
        trials_used: config.trials,
        evaluations_used: config.trials,
        samples_used: config.trials * config.n_rep,
        terminated_early: false,
        trace,
    })
}

/// What the "average over the last trials" metric averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LastWindowMetric {
    /// Means of the last evaluated candidates.
    #[default]
    CandidateMeans,
    /// Best-so-far values of the last trials.
    BestSoFar,
}

impl LastWindowMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            LastWindowMetric::CandidateMeans => "candidate-means",
            LastWindowMetric::BestSoFar => "best-so-far",
        }
    }
}

impl std::str::FromStr for LastWindowMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "candidate-means" => Ok(LastWindowMetric::CandidateMeans),
            "best-so-far" => Ok(LastWindowMetric::BestSoFar),
            other => Err(Error::invalid(format!(
                "unknown last-window metric {other:?} (expected candidate-means or best-so-far)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastWindow {
    pub size: usize,
    pub metric: LastWindowMetric,
}

impl Default for LastWindow {
    fn default() -> Self {
        LastWindow {
            size: 50,
            metric: LastWindowMetric::CandidateMeans,
        }
    }
}

impl LastWindow {
    pub fn average(&self, result: &OptimizationResult) -> f64 {
        let values: Vec<f64> = match self.metric {
            LastWindowMetric::CandidateMeans => result.trace.iter().filter_map(|r| r.mean).collect(),
            LastWindowMetric::BestSoFar => result.best_so_far(),
        };
        let tail = &values[values.len().saturating_sub(self.size)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Outcome of one macro-replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroResult {
    pub macro_index: usize,
    pub final_best_mean: f64,
    pub final_best_x: Vec<f64>,
    pub avg_last_window: f64,
    pub wall_time_seconds: f64,
    pub trials_used: usize,
    pub evaluations_used: usize,
    pub samples_used: usize,
    pub terminated_early: bool,
    /// Best-so-far value per trial.
    pub trace: Vec<f64>,
}

impl MacroResult {
    pub fn from_run(macro_index: usize, result: &OptimizationResult, window: LastWindow, seconds: f64) -> Self {
        MacroResult {
            macro_index,
            final_best_mean: result.f_best,
            final_best_x: result.x_best.0.clone(),
            avg_last_window: window.average(result),
            wall_time_seconds: seconds,
            trials_used: result.trials_used,
            evaluations_used: result.evaluations_used,
            samples_used: result.samples_used,
            terminated_early: result.terminated_early,
            trace: result.best_so_far(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub mean: f64,
    /// Standard error across macros; `None` for a single macro.
    pub se: Option<f64>,
}

/// Cross-macro mean of best-so-far traces, each padded to `trials` by carrying
/// its last value forward.
pub fn convergence_curve(results: &[MacroResult], trials: usize) -> Result<Vec<CurvePoint>> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    if let Some(r) = results.iter().find(|r| r.trace.is_empty()) {
        return Err(Error::invalid(format!("macro {} has an empty trace", r.macro_index)));
    }
    let n = results.len() as f64;
    Ok((0..trials)
        .map(|i| {
            let column: Vec<f64> = results
                .iter()
                .map(|r| *r.trace.get(i).unwrap_or_else(|| r.trace.last().unwrap()))
                .collect();
            let (mean, sd) = sample_mean_std(&column);
            CurvePoint {
                t: i + 1,
                mean,
                se: sd.map(|s| s / n.sqrt()),
            }
        })
        .collect())
}

/// Mean and (n-1) standard deviation; the latter undefined for one value.
fn sample_mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], Some(0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (n - 1) as f64).sqrt()))
}

/// Aggregate over the successful macros of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub variant: Variant,
    pub n_macro: usize,
    pub final_best_mean: f64,
    pub final_best_std: Option<f64>,
    pub avg_last_mean: f64,
    pub avg_last_std: Option<f64>,
    pub mean_wall_time: f64,
    pub curve: Vec<CurvePoint>,
    pub macros: Vec<MacroResult>,
    /// `(macro_index, message)` for runs that failed.
    pub failures: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub base_seed: u64,
    pub n_macro: usize,
    pub trials: usize,
    pub last_window: LastWindow,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl SuiteSummary {
    pub fn algorithm(&self, variant: Variant) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.variant == variant)
    }

    /// Copy with all wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> SuiteSummary {
        let mut s = self.clone();
        for a in &mut s.algorithms {
            a.mean_wall_time = 0.0;
            for m in &mut a.macros {
                m.wall_time_seconds = 0.0;
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub n_macro: usize,
    pub base_seed: u64,
    pub last_window: LastWindow,
    /// Worker threads; 0 means rayon's default.
    pub jobs: usize,
}

/// Stream of macro-replication `index`, shared by all algorithms.
pub fn macro_stream(base_seed: u64, index: usize) -> Stream {
    Stream::new(base_seed).child(index as u64)
}

/// Runs every spec `n_macro` times and aggregates. Individual run failures are
/// recorded in the summary rather than aborting the suite.
pub fn run_suite<O: StochasticObjective + ?Sized>(
    specs: &[AlgorithmSpec],
    model: &O,
    space: &DecisionSpace,
    options: &SuiteOptions,
) -> Result<SuiteSummary> {
    if options.n_macro == 0 {
        return Err(Error::invalid("n_macro must be at least 1"));
    }
    if specs.is_empty() {
        return Err(Error::invalid("no algorithms to run"));
    }
    for s in specs {
        if s.variant != Variant::Prs {
            s.config.validate()?;
        }
    }
    let trials = specs.iter().map(|s| s.config.trials).max().unwrap_or(0);

    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|a| (0..options.n_macro).map(move |m| (a, m)))
        .collect();
    let execute = || -> Vec<Result<MacroResult>> {
        jobs.par_iter()
            .map(|&(a, m)| {
                let start = Instant::now();
                let r = specs[a].run(model, space, macro_stream(options.base_seed, m))?;
                Ok(MacroResult::from_run(m, &r, options.last_window, start.elapsed().as_secs_f64()))
            })
            .collect()
    };
    let outcomes = if options.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?
            .install(execute)
    } else {
        execute()
    };

    // `jobs` order is (algorithm, macro) so chunks line up with specs.
    let mut algorithms = Vec::with_capacity(specs.len());
    for (spec, chunk) in specs.iter().zip(outcomes.chunks(options.n_macro)) {
        let mut macros = Vec::new();
        let mut failures = Vec::new();
        for (m, outcome) in chunk.iter().enumerate() {
            match outcome {
                Ok(r) => macros.push(r.clone()),
                Err(e) => failures.push((m, e.to_string())),
            }
        }
        algorithms.push(summarize(spec, macros, failures)?);
    }
    Ok(SuiteSummary {
        base_seed: options.base_seed,
        n_macro: options.n_macro,
        trials,
        last_window: options.last_window,
        algorithms,
    })
}

fn summarize(
    spec: &AlgorithmSpec,
    macros: Vec<MacroResult>,
    failures: Vec<(usize, String)>,
) -> Result<AlgorithmSummary> {
    let finals: Vec<f64> = macros.iter().map(|m| m.final_best_mean).collect();
    let lasts: Vec<f64> = macros.iter().map(|m| m.avg_last_window).collect();
    let (final_best_mean, final_best_std) = if finals.is_empty() {
        (f64::NAN, None)
    } else {
        sample_mean_std(&finals)
    };
    let (avg_last_mean, avg_last_std) = if lasts.is_empty() {
        (f64::NAN, None)
    } else {
        sample_mean_std(&lasts)
    };
    let curve = if macros.is_empty() {
        Vec::new()
    } else {
        convergence_curve(&macros, spec.config.trials)?
    };
    let mean_wall_time = if macros.is_empty() {
        f64::NAN
    } else {
        macros.iter().map(|m| m.wall_time_seconds).sum::<f64>() / macros.len() as f64
    };
    Ok(AlgorithmSummary {
        variant: spec.variant,
        n_macro: macros.len(),
        final_best_mean,
        final_best_std,
        avg_last_mean,
        avg_last_std,
        mean_wall_time,
        curve,
        macros,
        failures,
    })
}
