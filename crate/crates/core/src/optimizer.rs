//! The tabu/elite-memory search loop.
//!
//! Each trial generates one candidate, either uniformly (diversification) or by
//! Gaussian perturbation of an elite-memory member (intensification). Candidates
//! whose bin key is in the tabu list are screened by a short pilot and dropped
//! unless the pilot mean beats the incumbent. Survivors get `n_rep`
//! replications; the incumbent, both memories and the perturbation scale are
//! then updated, and the run stops after `dt_max` evaluated trials without
//! improvement.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::memory::{represent, EliteMemory, TabuList};
use crate::objective::{
    evaluate_continuing, sample_replications, Candidate, DecisionSpace, Direction, Evaluation,
    StochasticObjective,
};
use crate::stream::{Stream, StreamRng};

/// How a tabu candidate may bypass its restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AspirationPolicy {
    /// Pilot mean over `pilot_reps` replications strictly improves on the incumbent.
    #[default]
    PilotImproves,
    /// Tabu candidates are always skipped.
    Never,
    /// Tabu candidates are always evaluated (no pilot).
    Always,
}

impl AspirationPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            AspirationPolicy::PilotImproves => "pilot-improves",
            AspirationPolicy::Never => "never",
            AspirationPolicy::Always => "always",
        }
    }
}

impl std::str::FromStr for AspirationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pilot-improves" => Ok(AspirationPolicy::PilotImproves),
            "never" => Ok(AspirationPolicy::Never),
            "always" => Ok(AspirationPolicy::Always),
            other => Err(Error::invalid(format!(
                "unknown aspiration policy {other:?} (expected pilot-improves, never or always)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TesoConfig {
    /// Total trial budget.
    pub trials: usize,
    /// Leading trials that always diversify.
    pub n_init: usize,
    pub n_rep: usize,
    pub eta_init: f64,
    pub eta_final: f64,
    pub tabu_capacity: usize,
    pub elite_capacity: usize,
    pub p_div: f64,
    /// Evaluated trials without improvement before stopping.
    pub dt_max: usize,
    pub direction: Direction,
    pub bin_width: f64,
    pub pilot_reps: usize,
    pub disable_tabu: bool,
    pub disable_elite: bool,
    pub aspiration: AspirationPolicy,
    /// Pilot samples count toward the `n_rep` of the full evaluation.
    pub reuse_pilot: bool,
    /// Retain raw replication samples in trace records.
    pub keep_samples: bool,
    pub base_seed: u64,
}

impl Default for TesoConfig {
    fn default() -> Self {
        TesoConfig {
            trials: 300,
            n_init: 20,
            n_rep: 30,
            eta_init: 0.2,
            eta_final: 0.01,
            tabu_capacity: 15,
            elite_capacity: 10,
            p_div: 0.2,
            dt_max: 50,
            direction: Direction::Minimize,
            bin_width: 0.01,
            pilot_reps: 5,
            disable_tabu: false,
            disable_elite: false,
            aspiration: AspirationPolicy::PilotImproves,
            reuse_pilot: true,
            keep_samples: false,
            base_seed: 0,
        }
    }
}

impl TesoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParameter(m));
        if self.trials == 0 {
            return fail("trial budget must be at least 1".into());
        }
        if self.n_init > self.trials {
            return fail(format!("n_init = {} exceeds trial budget {}", self.n_init, self.trials));
        }
        if self.n_rep == 0 {
            return fail("n_rep must be at least 1".into());
        }
        if !(self.eta_init > 0.0 && self.eta_final > 0.0 && self.eta_final <= self.eta_init) {
            return fail(format!(
                "noise schedule needs 0 < eta_final <= eta_init, got {} -> {}",
                self.eta_init, self.eta_final
            ));
        }
        if self.elite_capacity == 0 {
            return fail("elite_capacity must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p_div) {
            return fail(format!("p_div = {} must lie in [0, 1]", self.p_div));
        }
        if self.dt_max == 0 {
            return fail("dt_max must be at least 1".into());
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return fail(format!("bin_width = {} must be positive", self.bin_width));
        }
        if self.pilot_reps == 0 || self.pilot_reps > self.n_rep {
            return fail(format!(
                "pilot_reps = {} must lie in [1, n_rep = {}]",
                self.pilot_reps, self.n_rep
            ));
        }
        Ok(())
    }

    fn tabu_enabled(&self) -> bool {
        !self.disable_tabu && self.tabu_capacity > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Diversify,
    Intensify,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Diversify => "diversify",
            Mode::Intensify => "intensify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Evaluated,
    SkippedTabu,
    AspirationAccepted,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Evaluated => "evaluated",
            TrialStatus::SkippedTabu => "skipped_tabu",
            TrialStatus::AspirationAccepted => "aspiration_accepted",
        }
    }

    pub fn is_evaluated(self) -> bool {
        self != TrialStatus::SkippedTabu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub t: usize,
    pub candidate: Candidate,
    pub mode: Mode,
    pub status: TrialStatus,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub best_so_far: f64,
    /// Perturbation scale in force when the candidate was generated.
    pub eta: f64,
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub x_best: Candidate,
    pub f_best: f64,
    pub trials_used: usize,
    /// Trials that received a full evaluation.
    pub evaluations_used: usize,
    /// Objective samples drawn, pilots included.
    pub samples_used: usize,
    pub terminated_early: bool,
    pub trace: Vec<TrialRecord>,
}

impl OptimizationResult {
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.best_so_far).collect()
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub t: usize,
    pub f_best: f64,
    pub x_best: Option<Candidate>,
    pub eta: f64,
    /// Evaluated trials since the last improvement (after initialisation).
    pub dt: usize,
    pub tabu: TabuList,
    pub elite: EliteMemory,
    pub trace: Vec<TrialRecord>,
}

impl SearchState {
    pub fn new(config: &TesoConfig) -> Self {
        let tabu_capacity = if config.tabu_enabled() { config.tabu_capacity } else { 0 };
        SearchState {
            t: 0,
            f_best: config.direction.worst_value(),
            x_best: None,
            eta: config.eta_init,
            dt: 0,
            tabu: TabuList::new(tabu_capacity),
            elite: EliteMemory::new(config.elite_capacity, config.direction),
            trace: Vec::new(),
        }
    }
}

/// Linear schedule from `eta_init` at `t = 0` to `eta_final` at `t = total`.
pub fn update_noise(t: usize, total: usize, eta_init: f64, eta_final: f64) -> f64 {
    if total == 0 {
        return eta_final;
    }
    let frac = (t.min(total) as f64) / total as f64;
    eta_init + (eta_final - eta_init) * frac
}

pub fn is_improvement(mean: f64, f_best: f64, direction: Direction) -> bool {
    direction.improves(mean, f_best)
}

/// Gaussian step with per-coordinate sd `eta * range`, clamped to the box.
pub fn perturb<R: Rng + ?Sized>(
    x: &Candidate,
    eta: f64,
    space: &DecisionSpace,
    rng: &mut R,
) -> Candidate {
    let coords = x
        .coords()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let sd = (eta * space.range(i)).max(0.0);
            let step = Normal::new(0.0, sd).map(|n| n.sample(rng)).unwrap_or(0.0);
            v + step
        })
        .collect();
    space.clamp(coords)
}

/// Candidate for trial `state.t` (1-based) and the mode that produced it.
pub fn generate_candidate<R: Rng + ?Sized>(
    state: &SearchState,
    config: &TesoConfig,
    space: &DecisionSpace,
    rng: &mut R,
) -> (Candidate, Mode) {
    if state.t <= config.n_init || rng.random::<f64>() < config.p_div {
        return (space.sample_uniform(rng), Mode::Diversify);
    }
    let anchor = if config.disable_elite {
        state.x_best.as_ref()
    } else {
        state.elite.select(rng).ok()
    };
    match anchor {
        Some(x) => (perturb(x, state.eta, space, rng), Mode::Intensify),
        None => (space.sample_uniform(rng), Mode::Diversify),
    }
}

/// Screens a tabu candidate. Returns the decision and any pilot samples drawn
/// (replications `0..pilot_reps` of `stream`).
pub fn aspiration_met<O: StochasticObjective + ?Sized>(
    x: &Candidate,
    state: &SearchState,
    config: &TesoConfig,
    model: &O,
    stream: Stream,
) -> Result<(bool, Option<Vec<f64>>)> {
    match config.aspiration {
        AspirationPolicy::Never => Ok((false, None)),
        AspirationPolicy::Always => Ok((true, None)),
        AspirationPolicy::PilotImproves => {
            let pilot = sample_replications(model, x, stream, 0..config.pilot_reps)?;
            let pilot_eval = Evaluation::from_samples(pilot.clone(), false)?;
            Ok((
                is_improvement(pilot_eval.mean, state.f_best, config.direction),
                Some(pilot),
            ))
        }
    }
}

/// Runs the full search loop with randomness rooted at `config.base_seed`.
pub fn run<O: StochasticObjective + ?Sized>(
    config: &TesoConfig,
    model: &O,
    space: &DecisionSpace,
) -> Result<OptimizationResult> {
    run_with_stream(config, model, space, Stream::new(config.base_seed))
}

/// Runs the full search loop with randomness rooted at `root`.
pub fn run_with_stream<O: StochasticObjective + ?Sized>(
    config: &TesoConfig,
    model: &O,
    space: &DecisionSpace,
    root: Stream,
) -> Result<OptimizationResult> {
    config.validate()?;
    let mut state = SearchState::new(config);
    let mut evaluations = 0;
    let mut samples = 0;
    let mut terminated_early = false;

    for t in 1..=config.trials {
        state.t = t;
        let trial = root.child(t as u64);
        let mut rng: StreamRng = trial.child(0).rng();
        let eval_stream = trial.child(1);
        let eta = state.eta;

        let (x, mode) = generate_candidate(&state, config, space, &mut rng);
        let key = represent(&x, space, config.bin_width);

        let mut status = TrialStatus::Evaluated;
        let mut prefix = Vec::new();
        if state.tabu.contains(&key) {
            let pilot_stream = if config.reuse_pilot { eval_stream } else { trial.child(2) };
            let (accepted, pilot) = aspiration_met(&x, &state, config, model, pilot_stream)?;
            let pilot = pilot.unwrap_or_default();
            samples += pilot.len();
            if !accepted {
                state.trace.push(TrialRecord {
                    t,
                    candidate: x,
                    mode,
                    status: TrialStatus::SkippedTabu,
                    mean: None,
                    std: None,
                    best_so_far: state.f_best,
                    eta,
                    samples: None,
                });
                continue;
            }
            status = TrialStatus::AspirationAccepted;
            if config.reuse_pilot {
                samples -= pilot.len();
                prefix = pilot;
            }
        }

        let eval = evaluate_continuing(
            model,
            &x,
            config.n_rep,
            eval_stream,
            prefix,
            config.keep_samples,
        )?;
        evaluations += 1;
        samples += config.n_rep;

        if is_improvement(eval.mean, state.f_best, config.direction) {
            state.f_best = eval.mean;
            state.x_best = Some(x.clone());
            state.dt = 0;
        } else if t > config.n_init {
            state.dt += 1;
        }
        state.tabu.insert(key);
        state.elite.insert(x.clone(), eval.mean);
        state.eta = update_noise(t, config.trials, config.eta_init, config.eta_final);

        state.trace.push(TrialRecord {
            t,
            candidate: x,
            mode,
            status,
            mean: Some(eval.mean),
            std: Some(eval.std),
            best_so_far: state.f_best,
            eta,
            samples: eval.samples,
        });

        if state.dt >= config.dt_max {
            terminated_early = t < config.trials;
            break;
        }
    }

    let x_best = state
        .x_best
        .ok_or_else(|| Error::invalid("no candidate was evaluated"))?;
    Ok(OptimizationResult {
        x_best,
        f_best: state.f_best,
        trials_used: state.t,
        evaluations_used: evaluations,
        samples_used: samples,
        terminated_early,
        trace: state.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::CandidateKey;
    use crate::objective::Deterministic;

    fn unit_space() -> DecisionSpace {
        DecisionSpace::interval(1.0, 4.0).unwrap()
    }

    #[test]
    fn noise_schedule() {
        assert!((update_noise(300, 300, 0.2, 0.01) - 0.01).abs() < 1e-15);
        assert!((update_noise(150, 300, 0.2, 0.01) - 0.105).abs() < 1e-15);
        assert!((update_noise(1, 300, 0.2, 0.01) - 0.2).abs() < 1e-3);
        for t in 1..=50 {
            assert_eq!(update_noise(t, 50, 0.3, 0.3), 0.3);
        }
    }

    #[test]
    fn improvement_is_strict() {
        assert!(is_improvement(2.0, 3.0, Direction::Minimize));
        assert!(!is_improvement(3.0, 3.0, Direction::Minimize));
        assert!(is_improvement(3.0, 2.0, Direction::Maximize));
    }

    #[test]
    fn perturb_limits() {
        let s = unit_space();
        let mut rng = Stream::new(1).rng();
        assert_eq!(perturb(&Candidate::scalar(2.5), 0.0, &s, &mut rng).first(), 2.5);
        for _ in 0..200 {
            let x = perturb(&Candidate::scalar(4.0), 0.2, &s, &mut rng).first();
            assert!((1.0..=4.0).contains(&x));
        }
    }

    #[test]
    fn perturb_scale_is_eta_times_range() {
        // sd = 0.2 * 3 = 0.6; at x = 2.5 clamping is a > 2.5-sigma event.
        let s = unit_space();
        let mut rng = Stream::new(2).rng();
        let d: Vec<f64> = (0..10_000)
            .map(|_| perturb(&Candidate::scalar(2.5), 0.2, &s, &mut rng).first() - 2.5)
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((sd - 0.6).abs() <= 0.02, "sd {sd}");
    }

    #[test]
    fn generation_modes() {
        let cfg = TesoConfig::default();
        let s = unit_space();
        let mut state = SearchState::new(&cfg);
        let mut rng = Stream::new(4).rng();

        state.t = 1;
        let (x, mode) = generate_candidate(&state, &cfg, &s, &mut rng);
        assert_eq!(mode, Mode::Diversify);
        assert!(s.contains(&x));

        // Empty elite memory after initialisation falls back to random.
        state.t = 25;
        let cfg_no_div = TesoConfig { p_div: 0.0, ..cfg.clone() };
        let (_, mode) = generate_candidate(&state, &cfg_no_div, &s, &mut rng);
        assert_eq!(mode, Mode::Diversify);

        state.t = 100;
        state.eta = 0.1;
        state.elite.insert(Candidate::scalar(1.2), 0.0);
        for _ in 0..50 {
            let (x, mode) = generate_candidate(&state, &cfg_no_div, &s, &mut rng);
            assert_eq!(mode, Mode::Intensify);
            assert!(s.contains(&x));
        }
    }

    #[test]
    fn no_elite_perturbs_incumbent() {
        let cfg = TesoConfig {
            p_div: 0.0,
            disable_elite: true,
            ..TesoConfig::default()
        };
        let s = unit_space();
        let mut state = SearchState::new(&cfg);
        state.t = 50;
        state.eta = 1e-12;
        state.elite.insert(Candidate::scalar(3.9), 0.0);
        let mut rng = Stream::new(5).rng();
        assert_eq!(generate_candidate(&state, &cfg, &s, &mut rng).1, Mode::Diversify);
        state.x_best = Some(Candidate::scalar(1.7));
        let (x, mode) = generate_candidate(&state, &cfg, &s, &mut rng);
        assert_eq!(mode, Mode::Intensify);
        assert!((x.first() - 1.7).abs() < 1e-9);
    }

    #[test]
    fn aspiration_pilot() {
        let cfg = TesoConfig::default();
        let s = unit_space();
        let f = Deterministic::new(s.clone(), |x: &[f64]| x[0]);
        let mut state = SearchState::new(&cfg);
        let x = Candidate::scalar(3.0);
        let (ok, pilot) = aspiration_met(&x, &state, &cfg, &f, Stream::new(0)).unwrap();
        assert!(ok);
        assert_eq!(pilot.unwrap().len(), 5);

        state.f_best = 4.0;
        assert!(aspiration_met(&x, &state, &cfg, &f, Stream::new(0)).unwrap().0);
        let worse = Candidate::scalar(3.0);
        state.f_best = 2.5;
        assert!(!aspiration_met(&worse, &state, &cfg, &f, Stream::new(0)).unwrap().0);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = TesoConfig { trials: 0, n_init: 0, ..TesoConfig::default() };
        let f = Deterministic::new(unit_space(), |x: &[f64]| x[0]);
        assert!(run(&cfg, &f, &unit_space()).is_err());
    }

    #[test]
    fn constant_objective_stops_early() {
        let cfg = TesoConfig {
            dt_max: 1,
            n_init: 1,
            ..TesoConfig::default()
        };
        let f = Deterministic::new(unit_space(), |_: &[f64]| 7.0);
        let r = run(&cfg, &f, &unit_space()).unwrap();
        assert!(r.terminated_early);
        assert!(r.trials_used < cfg.trials);
        assert_eq!(r.f_best, 7.0);
    }

    #[test]
    fn tabu_hit_is_screened_and_accepted_candidate_is_evaluated() {
        // A tiny space with one bin: every candidate after the first is tabu.
        let s = DecisionSpace::interval(0.0, 1.0).unwrap();
        let f = Deterministic::new(s.clone(), |x: &[f64]| x[0]);
        let cfg = TesoConfig {
            trials: 40,
            n_init: 5,
            bin_width: 10.0,
            ..TesoConfig::default()
        };
        let r = run(&cfg, &f, &s).unwrap();
        assert_eq!(r.trace[0].status, TrialStatus::Evaluated);
        for rec in &r.trace[1..] {
            match rec.status {
                TrialStatus::SkippedTabu => assert!(rec.mean.is_none()),
                TrialStatus::AspirationAccepted => {
                    assert!(rec.mean.unwrap() <= rec.best_so_far)
                }
                TrialStatus::Evaluated => panic!("bin 0 is always tabu"),
            }
        }
        assert_eq!(represent(&r.x_best, &s, 10.0), CandidateKey(vec![0]));
    }
}
