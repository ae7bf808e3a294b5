//! C ABI over the `teso` crate.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_run`
//! functions and released with the matching `*_free`. Fallible calls return a
//! [`TesoStatus`] and write results through out-pointers; the message of the
//! last failure on the calling thread is available from
//! [`teso_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use teso::bench::{run_suite, AlgorithmSpec, LastWindow, SuiteOptions, SuiteSummary, Variant};
use teso::objective::Direction;
use teso::optimizer::{run, AspirationPolicy, Mode, OptimizationResult, TesoConfig, TrialStatus};
use teso::queue::{erlang_c, AnalyticQueue, QueueModel, WaitMode};
use teso::{output, Error, Stream};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TesoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unstable = 3,
    OutOfBounds = 4,
    Io = 5,
    Config = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TesoWaitMode {
    Queue = 0,
    Sojourn = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TesoVariant {
    Prs = 0,
    NoElite = 1,
    NoTabu = 2,
    Full = 3,
}

/// Optimizer parameters. Obtain defaults from `teso_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TesoParams {
    pub trials: usize,
    pub n_init: usize,
    pub n_rep: usize,
    pub eta_init: f64,
    pub eta_final: f64,
    pub tabu_capacity: usize,
    pub elite_capacity: usize,
    pub p_div: f64,
    pub dt_max: usize,
    /// Non-zero to maximize.
    pub maximize: bool,
    pub bin_width: f64,
    pub pilot_reps: usize,
    pub disable_tabu: bool,
    pub disable_elite: bool,
    pub reuse_pilot: bool,
    pub seed: u64,
}

/// One row of an optimization trace. Absent `mean`/`std` are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TesoTraceRow {
    pub t: usize,
    /// 0 = diversify, 1 = intensify.
    pub mode: u32,
    /// 0 = evaluated, 1 = skipped (tabu), 2 = accepted by aspiration.
    pub status: u32,
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub best_so_far: f64,
    pub eta: f64,
}

/// Aggregate of one algorithm in a suite. Undefined statistics are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TesoSuiteEntry {
    pub variant: TesoVariant,
    pub n_macro: usize,
    pub failures: usize,
    pub final_best_mean: f64,
    pub final_best_std: f64,
    pub avg_last_mean: f64,
    pub avg_last_std: f64,
    pub mean_wall_time: f64,
}

/// Opaque M/M/k queue model.
pub struct TesoQueueModel(QueueModel);

/// Opaque optimization result.
pub struct TesoResult(OptimizationResult);

/// Opaque benchmark-suite summary.
pub struct TesoSuite(SuiteSummary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TesoStatus {
    match e {
        Error::Unstable { .. } => TesoStatus::Unstable,
        Error::OutOfBounds { .. } | Error::DimensionMismatch { .. } => TesoStatus::OutOfBounds,
        Error::Io { .. } | Error::Csv(_) => TesoStatus::Io,
        Error::Config { .. } => TesoStatus::Config,
        _ => TesoStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (TesoStatus, String)>>(f: F) -> TesoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TesoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            TesoStatus::Internal
        }
    }
}

fn lift(e: Error) -> (TesoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TesoStatus, String) {
    (TesoStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (TesoStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (TesoStatus::InvalidArgument, "path is not valid UTF-8".to_owned()))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn teso_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Probability of waiting in an M/M/k queue with offered load `a`.
#[no_mangle]
pub unsafe extern "C" fn teso_erlang_c(k: u32, a: f64, out: *mut f64) -> TesoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = erlang_c(k, a).map_err(lift)?;
        Ok(())
    })
}

/// Default queue model (lambda 2.5, three servers, C = 0.5, mu in [1, 4]).
#[no_mangle]
pub extern "C" fn teso_queue_model_default() -> *mut TesoQueueModel {
    Box::into_raw(Box::new(TesoQueueModel(QueueModel::default())))
}

#[no_mangle]
pub unsafe extern "C" fn teso_queue_model_new(
    lambda: f64,
    servers: u32,
    cost: f64,
    mu_lower: f64,
    mu_upper: f64,
    customers_per_rep: usize,
    warmup_customers: usize,
    wait_mode: TesoWaitMode,
    out: *mut *mut TesoQueueModel,
) -> TesoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = QueueModel {
            lambda,
            servers,
            cost,
            mu_lower,
            mu_upper,
            customers_per_rep,
            warmup_customers,
            wait_mode: match wait_mode {
                TesoWaitMode::Queue => WaitMode::QueueWait,
                TesoWaitMode::Sojourn => WaitMode::Sojourn,
            },
        };
        model.validate().map_err(lift)?;
        *out = Box::into_raw(Box::new(TesoQueueModel(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn teso_queue_model_free(model: *mut TesoQueueModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const TesoQueueModel) -> Result<&'a QueueModel, (TesoStatus, String)> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

/// Closed-form objective at `mu`.
#[no_mangle]
pub unsafe extern "C" fn teso_analytic_objective(
    model: *const TesoQueueModel,
    mu: f64,
    out: *mut f64,
) -> TesoStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.analytic_objective(mu).map_err(lift)?;
        Ok(())
    })
}

/// One simulated replication of the mean delay at `mu`.
#[no_mangle]
pub unsafe extern "C" fn teso_simulate_wait(
    model: *const TesoQueueModel,
    mu: f64,
    seed: u64,
    out: *mut f64,
) -> TesoStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.simulate_wait(mu, Stream::new(seed)).map_err(lift)?;
        Ok(())
    })
}

/// One noisy objective sample (simulated delay plus cost) at `mu`.
#[no_mangle]
pub unsafe extern "C" fn teso_objective_sample(
    model: *const TesoQueueModel,
    mu: f64,
    seed: u64,
    out: *mut f64,
) -> TesoStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.objective_sample(mu, Stream::new(seed)).map_err(lift)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn teso_params_default() -> TesoParams {
    let c = TesoConfig::default();
    TesoParams {
        trials: c.trials,
        n_init: c.n_init,
        n_rep: c.n_rep,
        eta_init: c.eta_init,
        eta_final: c.eta_final,
        tabu_capacity: c.tabu_capacity,
        elite_capacity: c.elite_capacity,
        p_div: c.p_div,
        dt_max: c.dt_max,
        maximize: false,
        bin_width: c.bin_width,
        pilot_reps: c.pilot_reps,
        disable_tabu: c.disable_tabu,
        disable_elite: c.disable_elite,
        reuse_pilot: c.reuse_pilot,
        seed: c.base_seed,
    }
}

fn to_config(p: &TesoParams) -> TesoConfig {
    TesoConfig {
        trials: p.trials,
        n_init: p.n_init,
        n_rep: p.n_rep,
        eta_init: p.eta_init,
        eta_final: p.eta_final,
        tabu_capacity: p.tabu_capacity,
        elite_capacity: p.elite_capacity,
        p_div: p.p_div,
        dt_max: p.dt_max,
        direction: if p.maximize {
            Direction::Maximize
        } else {
            Direction::Minimize
        },
        bin_width: p.bin_width,
        pilot_reps: p.pilot_reps,
        disable_tabu: p.disable_tabu,
        disable_elite: p.disable_elite,
        aspiration: AspirationPolicy::PilotImproves,
        reuse_pilot: p.reuse_pilot,
        keep_samples: false,
        base_seed: p.seed,
    }
}

/// Optimizes the queue objective. With `analytic` set the closed form is used
/// as a zero-noise objective instead of the simulation.
#[no_mangle]
pub unsafe extern "C" fn teso_optimize_queue(
    model: *const TesoQueueModel,
    params: *const TesoParams,
    analytic: bool,
    out: *mut *mut TesoResult,
) -> TesoStatus {
    guard(|| {
        let m = model_ref(model)?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = to_config(p);
        let space = m.decision_space();
        let result = if analytic {
            run(&config, &AnalyticQueue(m.clone()), &space)
        } else {
            run(&config, m, &space)
        }
        .map_err(lift)?;
        *out = Box::into_raw(Box::new(TesoResult(result)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_free(result: *mut TesoResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Best candidate (first coordinate); NaN for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn teso_result_x_best(result: *const TesoResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.x_best.first())
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_f_best(result: *const TesoResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.f_best)
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_trials_used(result: *const TesoResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.trials_used)
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_evaluations_used(result: *const TesoResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.evaluations_used)
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_terminated_early(result: *const TesoResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.terminated_early)
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_trace_len(result: *const TesoResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.trace.len())
}

#[no_mangle]
pub unsafe extern "C" fn teso_result_trace_row(
    result: *const TesoResult,
    index: usize,
    out: *mut TesoTraceRow,
) -> TesoStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rec = r.0.trace.get(index).ok_or_else(|| {
            (
                TesoStatus::OutOfBounds,
                format!("trace index {index} >= length {}", r.0.trace.len()),
            )
        })?;
        *out = TesoTraceRow {
            t: rec.t,
            mode: match rec.mode {
                Mode::Diversify => 0,
                Mode::Intensify => 1,
            },
            status: match rec.status {
                TrialStatus::Evaluated => 0,
                TrialStatus::SkippedTabu => 1,
                TrialStatus::AspirationAccepted => 2,
            },
            x: rec.candidate.first(),
            mean: rec.mean.unwrap_or(f64::NAN),
            std: rec.std.unwrap_or(f64::NAN),
            best_so_far: rec.best_so_far,
            eta: rec.eta,
        };
        Ok(())
    })
}

/// Writes the trace CSV (`t,mode,status,x,mean,std,best_so_far,eta`).
#[no_mangle]
pub unsafe extern "C" fn teso_result_write_trace(
    result: *const TesoResult,
    path: *const c_char,
) -> TesoStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let path = path_arg(path)?;
        let mut buf = Vec::new();
        output::write_trace(&mut buf, &r.0).map_err(lift)?;
        output::write_file(path, &buf).map_err(lift)
    })
}

fn variant_of(v: TesoVariant) -> Variant {
    match v {
        TesoVariant::Prs => Variant::Prs,
        TesoVariant::NoElite => Variant::TesoNoElite,
        TesoVariant::NoTabu => Variant::TesoNoTabu,
        TesoVariant::Full => Variant::TesoFull,
    }
}

/// Runs `n_variants` algorithms for `n_macro` macro-replications each on the
/// simulated queue objective. `jobs = 0` uses the default thread count.
#[no_mangle]
pub unsafe extern "C" fn teso_suite_run(
    model: *const TesoQueueModel,
    params: *const TesoParams,
    variants: *const TesoVariant,
    n_variants: usize,
    n_macro: usize,
    jobs: usize,
    out: *mut *mut TesoSuite,
) -> TesoStatus {
    guard(|| {
        let m = model_ref(model)?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if variants.is_null() {
            return Err(null("variants"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let base = to_config(p);
        let specs: Vec<AlgorithmSpec> = std::slice::from_raw_parts(variants, n_variants)
            .iter()
            .map(|v| AlgorithmSpec::new(variant_of(*v), &base))
            .collect();
        let options = SuiteOptions {
            n_macro,
            base_seed: p.seed,
            last_window: LastWindow::default(),
            jobs,
        };
        let summary = run_suite(&specs, m, &m.decision_space(), &options).map_err(lift)?;
        *out = Box::into_raw(Box::new(TesoSuite(summary)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn teso_suite_free(suite: *mut TesoSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

#[no_mangle]
pub unsafe extern "C" fn teso_suite_len(suite: *const TesoSuite) -> usize {
    suite.as_ref().map_or(0, |s| s.0.algorithms.len())
}

#[no_mangle]
pub unsafe extern "C" fn teso_suite_entry(
    suite: *const TesoSuite,
    index: usize,
    out: *mut TesoSuiteEntry,
) -> TesoStatus {
    guard(|| {
        let s = suite.as_ref().ok_or_else(|| null("suite"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = s.0.algorithms.get(index).ok_or_else(|| {
            (
                TesoStatus::OutOfBounds,
                format!("suite index {index} >= length {}", s.0.algorithms.len()),
            )
        })?;
        *out = TesoSuiteEntry {
            variant: match a.variant {
                Variant::Prs => TesoVariant::Prs,
                Variant::TesoNoElite => TesoVariant::NoElite,
                Variant::TesoNoTabu => TesoVariant::NoTabu,
                Variant::TesoFull => TesoVariant::Full,
            },
            n_macro: a.n_macro,
            failures: a.failures.len(),
            final_best_mean: a.final_best_mean,
            final_best_std: a.final_best_std.unwrap_or(f64::NAN),
            avg_last_mean: a.avg_last_mean,
            avg_last_std: a.avg_last_std.unwrap_or(f64::NAN),
            mean_wall_time: a.mean_wall_time,
        };
        Ok(())
    })
}

/// Writes `summary.toml` and the convergence CSVs into `dir`, creating it.
#[no_mangle]
pub unsafe extern "C" fn teso_suite_write(suite: *const TesoSuite, dir: *const c_char) -> TesoStatus {
    guard(|| {
        let s = suite.as_ref().ok_or_else(|| null("suite"))?;
        let dir = path_arg(dir)?;
        output::write_suite(dir, &s.0).map(|_| ()).map_err(lift)
    })
}
