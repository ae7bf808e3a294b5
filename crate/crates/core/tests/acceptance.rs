//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p teso --test acceptance -- --nocapture --test-threads 1`
//! to see the report in order.

use std::collections::VecDeque;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teso::bench::{run_suite, AlgorithmSpec, LastWindow, SuiteOptions, SuiteSummary, Variant};
use teso::memory::{CandidateKey, EliteMemory, TabuList};
use teso::objective::{Counting, Deterministic};
use teso::optimizer::{run, update_noise, TrialStatus};
use teso::queue::AnalyticQueue;
use teso::{Candidate, DecisionSpace, Direction, QueueModel, TesoConfig};

const SEED: u64 = 1;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn default_specs() -> Vec<AlgorithmSpec> {
    let base = TesoConfig::default();
    Variant::ALL.iter().map(|v| AlgorithmSpec::new(*v, &base)).collect()
}

fn default_options() -> SuiteOptions {
    SuiteOptions {
        n_macro: 30,
        base_seed: SEED,
        last_window: LastWindow::default(),
        jobs: 0,
    }
}

fn full_suite() -> &'static SuiteSummary {
    static SUITE: OnceLock<SuiteSummary> = OnceLock::new();
    SUITE.get_or_init(|| {
        let model = QueueModel::default();
        run_suite(&default_specs(), &model, &model.decision_space(), &default_options()).unwrap()
    })
}

#[test]
fn criterion_1_analytic_oracle() {
    let start = Instant::now();
    let grid = QueueModel::default().analytic_grid(1.0, 4.0, 0.001).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (2.52..=2.54).contains(&grid.min) && (1.10..=1.14).contains(&grid.argmin) && secs < 1.0;
    report(
        1,
        "analytic oracle",
        pass,
        format!("J* = {:.6} at mu* = {:.3} in {secs:.4} s", grid.min, grid.argmin),
    );
    assert!(pass);
}

#[test]
fn criterion_2_simulator_validity() {
    let model = QueueModel::default();
    let start = Instant::now();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for i in 0..10 {
        let mu = 1.0 + 0.3 * i as f64;
        let root = teso::Stream::new(SEED).child(i);
        let xs: Vec<f64> = (0..100)
            .map(|j| model.simulate_wait(mu, root.child(j)).unwrap())
            .collect();
        let (mean, sd) = teso::objective::mean_std(&xs);
        let se = sd / 10.0;
        let exact = model.analytic_queue_wait(mu).unwrap();
        let z = if se > 0.0 { (mean - exact).abs() / se } else { 0.0 };
        worst = worst.max(z);
        if z <= 3.0 {
            hits += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = hits >= 9 && secs < 60.0;
    report(
        2,
        "simulator validity",
        pass,
        format!("{hits}/10 grid points within 3 SE (max |z| = {worst:.2}) in {secs:.2} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_ordering() {
    let s = full_suite();
    let get = |v| s.algorithm(v).unwrap();
    let (prs, ne, nt, full) = (
        get(Variant::Prs),
        get(Variant::TesoNoElite),
        get(Variant::TesoNoTabu),
        get(Variant::TesoFull),
    );
    let ordered = full.final_best_mean < nt.final_best_mean
        && nt.final_best_mean < ne.final_best_mean
        && ne.final_best_mean < prs.final_best_mean;
    let in_range = (2.50..=2.65).contains(&full.final_best_mean);
    let stds: Vec<f64> = s.algorithms.iter().map(|a| a.final_best_std.unwrap()).collect();
    let smallest = stds.iter().all(|v| full.final_best_std.unwrap() <= *v);
    let detail = s
        .algorithms
        .iter()
        .map(|a| format!("{} {:.4} +- {:.4}", a.variant.name(), a.final_best_mean, a.final_best_std.unwrap()))
        .collect::<Vec<_>>()
        .join(", ");
    let pass = ordered && in_range && smallest;
    report(
        3,
        "suite ordering",
        pass,
        format!("{detail}; ordered={ordered} teso_in_range={in_range} teso_std_smallest={smallest}"),
    );
    assert!(ordered, "expected TESO < TESO-noTabu < TESO-noElite < PRS");
    assert!(in_range, "TESO final best {} outside [2.50, 2.65]", full.final_best_mean);
    assert!(smallest, "TESO std is not the smallest");
}

#[test]
fn criterion_4_convergence_curve() {
    let curve = &full_suite().algorithm(Variant::TesoFull).unwrap().curve;
    let monotone = curve.windows(2).all(|w| w[1].mean <= w[0].mean);
    let last = curve.last().unwrap();
    let pass = monotone && last.t == 300 && (2.45..=2.70).contains(&last.mean);
    report(
        4,
        "convergence curve",
        pass,
        format!("monotone={monotone}, mean best at t={} is {:.4}", last.t, last.mean),
    );
    assert!(pass);
}

#[test]
fn criterion_5_zero_noise_equivalence() {
    let model = QueueModel::default();
    let argmin = model.analytic_grid(1.0, 4.0, 0.001).unwrap().argmin;
    let objective = AnalyticQueue(model.clone());
    let space = model.decision_space();
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 1..=30 {
        let config = TesoConfig {
            base_seed: seed,
            ..TesoConfig::default()
        };
        let r = run(&config, &objective, &space).unwrap();
        if (r.x_best.first() - argmin).abs() <= config.bin_width {
            hits += 1;
        } else {
            misses.push(format!("seed {seed}: {:.4}", r.x_best.first()));
        }
    }
    let pass = hits >= 27;
    report(
        5,
        "zero-noise equivalence",
        pass,
        format!("{hits}/30 runs within 0.01 of {argmin:.3}; misses [{}]", misses.join(", ")),
    );
    assert!(pass);
}

fn tabu_invariants() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cap = 15;
    let mut tabu = TabuList::new(cap);
    let mut model: VecDeque<CandidateKey> = VecDeque::new();
    for _ in 0..10_000 {
        let key = CandidateKey(vec![rng.random_range(0..40)]);
        if rng.random_bool(0.5) {
            tabu.insert(key.clone());
            model.retain(|k| *k != key);
            model.push_back(key);
            if model.len() > cap {
                model.pop_front();
            }
        } else if tabu.contains(&key) != model.contains(&key) {
            return false;
        }
        if tabu.len() > cap || !tabu.iter().eq(model.iter()) {
            return false;
        }
    }
    true
}

fn elite_matches_sorted_history() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let cap = 10;
    let mut elite = EliteMemory::new(cap, Direction::Minimize);
    let mut history: Vec<f64> = Vec::new();
    for i in 0..2_000 {
        // Coarse values force ties.
        let mean = (rng.random::<f64>() * 50.0).floor();
        elite.insert(Candidate::scalar(i as f64), mean);
        history.push(mean);
        let mut sorted = history.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.truncate(cap);
        let mut held: Vec<f64> = elite.entries().iter().map(|e| e.mean).collect();
        held.sort_by(f64::total_cmp);
        if held != sorted {
            return false;
        }
    }
    true
}

fn noise_schedule() -> bool {
    let first = update_noise(1, 300, 0.2, 0.01);
    let last = update_noise(300, 300, 0.2, 0.01);
    let monotone = (1..300).all(|t| update_noise(t + 1, 300, 0.2, 0.01) <= update_noise(t, 300, 0.2, 0.01));
    (first - 0.2).abs() < 1e-3 && (last - 0.01).abs() < 1e-15 && monotone
}

fn suite_replay() -> bool {
    let model = QueueModel::default();
    let again = run_suite(&default_specs(), &model, &model.decision_space(), &default_options()).unwrap();
    again.without_timing() == full_suite().without_timing()
}

fn early_stop_on_constant() -> bool {
    let space = DecisionSpace::interval(1.0, 4.0).unwrap();
    let constant = Deterministic::new(space.clone(), |_: &[f64]| 1.0);
    let config = TesoConfig {
        base_seed: SEED,
        ..TesoConfig::default()
    };
    let r = run(&config, &constant, &space).unwrap();
    let evaluated_after_init = r
        .trace
        .iter()
        .filter(|t| t.t > config.n_init && t.status.is_evaluated())
        .count();
    r.terminated_early && r.trials_used < 300 && evaluated_after_init == config.dt_max
}

fn no_tabu_never_skips() -> bool {
    let model = QueueModel::default();
    let config = TesoConfig {
        disable_tabu: true,
        base_seed: SEED,
        ..TesoConfig::default()
    };
    let space = model.decision_space();
    let r = run(&config, &AnalyticQueue(model), &space).unwrap();
    r.trace.iter().all(|t| t.status == TrialStatus::Evaluated)
}

fn sample_budget() -> bool {
    let model = Counting::new(QueueModel::default());
    let space = model.inner().decision_space();
    let base = TesoConfig::default();
    Variant::ALL.iter().all(|v| {
        let spec = AlgorithmSpec::new(*v, &base);
        (0..3).all(|m| {
            model.reset();
            let r = spec.run(&model, &space, teso::bench::macro_stream(SEED, m)).unwrap();
            let n = model.count();
            n == r.samples_used as u64 && n <= (base.trials * base.n_rep) as u64
        })
    })
}

#[test]
fn criterion_6_property_suites() {
    type Check = (&'static str, fn() -> bool);
    let checks: [Check; 7] = [
        ("tabu invariants (1e4 ops)", tabu_invariants),
        ("elite equals sorted history", elite_matches_sorted_history),
        ("noise schedule", noise_schedule),
        ("bit-exact suite replay", suite_replay),
        ("early stop on constant objective", early_stop_on_constant),
        ("disable_tabu has no skips", no_tabu_never_skips),
        ("sample budget", sample_budget),
    ];
    let results: Vec<(&str, bool)> = checks.iter().map(|(n, f)| (*n, f())).collect();
    let pass = results.iter().all(|(_, ok)| *ok);
    let detail = results
        .iter()
        .map(|(n, ok)| format!("{n}={}", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    report(6, "property suites", pass, detail);
    assert!(pass);
}
