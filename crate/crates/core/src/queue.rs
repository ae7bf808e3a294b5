//! M/M/k queue test problem.
//!
//! The objective trades mean customer delay against a quadratic service-rate
//! cost, `J(mu) = E[W(k, mu)] + C * k * mu^2`. Delays are simulated with the
//! multi-server workload recursion: arrivals see a sorted vector of residual
//! server workloads, wait for the smallest one, and add their service time to
//! it. Erlang C gives the same quantity in closed form for validation.

use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::objective::{Candidate, DecisionSpace, StochasticObjective};
use crate::stream::Stream;

/// Which delay the objective averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaitMode {
    /// Time spent in queue before service starts.
    #[default]
    QueueWait,
    /// Queue wait plus service time.
    Sojourn,
}

impl WaitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WaitMode::QueueWait => "queue",
            WaitMode::Sojourn => "sojourn",
        }
    }
}

impl std::str::FromStr for WaitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queue" | "queue-wait" => Ok(WaitMode::QueueWait),
            "sojourn" => Ok(WaitMode::Sojourn),
            other => Err(Error::invalid(format!(
                "unknown wait mode {other:?} (expected \"queue\" or \"sojourn\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    /// Arrival rate.
    pub lambda: f64,
    /// Number of identical servers.
    pub servers: u32,
    /// Cost coefficient per server on `mu^2`.
    pub cost: f64,
    pub mu_lower: f64,
    pub mu_upper: f64,
    pub customers_per_rep: usize,
    pub warmup_customers: usize,
    pub wait_mode: WaitMode,
}

impl Default for QueueModel {
    fn default() -> Self {
        QueueModel {
            lambda: 2.5,
            servers: 3,
            cost: 0.5,
            mu_lower: 1.0,
            mu_upper: 4.0,
            customers_per_rep: 2000,
            warmup_customers: 500,
            wait_mode: WaitMode::QueueWait,
        }
    }
}

impl QueueModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda = {} must be positive", self.lambda)));
        }
        if self.servers == 0 {
            return Err(Error::invalid("number of servers must be at least 1"));
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            return Err(Error::invalid(format!("cost coefficient = {} must be >= 0", self.cost)));
        }
        if !(self.mu_lower.is_finite() && self.mu_upper.is_finite() && self.mu_lower < self.mu_upper)
        {
            return Err(Error::invalid(format!(
                "mu bounds [{}, {}] must be finite with lower < upper",
                self.mu_lower, self.mu_upper
            )));
        }
        if self.customers_per_rep == 0 {
            return Err(Error::invalid("customers_per_rep must be at least 1"));
        }
        self.check_stable(self.mu_lower)
    }

    pub fn decision_space(&self) -> DecisionSpace {
        DecisionSpace::interval(self.mu_lower, self.mu_upper)
            .expect("validated queue model has ordered bounds")
    }

    /// Requires `k * mu > lambda`.
    pub fn check_stable(&self, mu: f64) -> Result<()> {
        let capacity = f64::from(self.servers) * mu;
        if capacity > self.lambda {
            Ok(())
        } else {
            Err(Error::Unstable {
                mu,
                capacity,
                lambda: self.lambda,
            })
        }
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        self.check_stable(mu)?;
        if !(self.mu_lower..=self.mu_upper).contains(&mu) {
            return Err(Error::OutOfBounds {
                index: 0,
                value: mu,
                lower: self.mu_lower,
                upper: self.mu_upper,
            });
        }
        Ok(())
    }

    pub fn cost_term(&self, mu: f64) -> f64 {
        self.cost * f64::from(self.servers) * mu * mu
    }

    /// One replication: mean delay of `customers_per_rep` customers after
    /// discarding `warmup_customers`, starting from an empty system.
    pub fn simulate_wait(&self, mu: f64, stream: Stream) -> Result<f64> {
        self.check_mu(mu)?;
        let interarrival = Exp::new(self.lambda).map_err(|e| Error::invalid(e.to_string()))?;
        let service = Exp::new(mu).map_err(|e| Error::invalid(e.to_string()))?;
        let mut arrivals = stream.child(0).rng();
        let mut services = stream.child(1).rng();

        // Residual workloads, ascending.
        let mut work = vec![0.0_f64; self.servers as usize];
        let total = self.warmup_customers + self.customers_per_rep;
        let mut sum = 0.0;
        for n in 0..total {
            let delay = work[0];
            let s = service.sample(&mut services);
            if n >= self.warmup_customers {
                sum += match self.wait_mode {
                    WaitMode::QueueWait => delay,
                    WaitMode::Sojourn => delay + s,
                };
            }
            work[0] += s;
            let a = interarrival.sample(&mut arrivals);
            for w in work.iter_mut() {
                *w = (*w - a).max(0.0);
            }
            // Only the head changed; bubble it into place.
            let mut i = 0;
            while i + 1 < work.len() && work[i] > work[i + 1] {
                work.swap(i, i + 1);
                i += 1;
            }
        }
        Ok(sum / self.customers_per_rep as f64)
    }

    /// Simulated delay plus the deterministic cost term.
    pub fn objective_sample(&self, mu: f64, stream: Stream) -> Result<f64> {
        Ok(self.simulate_wait(mu, stream)? + self.cost_term(mu))
    }

    /// Steady-state mean queue wait `C(k, a) / (k mu - lambda)`.
    pub fn analytic_queue_wait(&self, mu: f64) -> Result<f64> {
        self.check_stable(mu)?;
        let k = self.servers;
        let c = erlang_c(k, self.lambda / mu)?;
        Ok(c / (f64::from(k) * mu - self.lambda))
    }

    /// Closed-form objective; does not require `mu` inside the search bounds.
    pub fn analytic_objective(&self, mu: f64) -> Result<f64> {
        let wq = self.analytic_queue_wait(mu)?;
        let wait = match self.wait_mode {
            WaitMode::QueueWait => wq,
            WaitMode::Sojourn => wq + 1.0 / mu,
        };
        Ok(wait + self.cost_term(mu))
    }

    /// Evaluates the analytic objective on `lower, lower + step, ..., upper`.
    pub fn analytic_grid(&self, lower: f64, upper: f64, step: f64) -> Result<GridSearch> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("grid step {step} must be positive")));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::invalid(format!("grid range [{lower}, {upper}] is empty")));
        }
        let n = ((upper - lower) / step + 1e-9).floor() as usize;
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mu = lower + i as f64 * step;
            points.push((mu, self.analytic_objective(mu)?));
        }
        let (argmin, min) = points
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |best, (mu, j)| if j < best.1 { (mu, j) } else { best });
        Ok(GridSearch { points, argmin, min })
    }
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub points: Vec<(f64, f64)>,
    pub argmin: f64,
    pub min: f64,
}

/// Erlang C: probability an arrival waits in an M/M/k queue with offered load `a`.
///
/// Evaluated through the Erlang B recursion `B_n = a B_{n-1} / (n + a B_{n-1})`,
/// then `C = k B / (k - a (1 - B))`, which avoids factorial overflow.
pub fn erlang_c(k: u32, a: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("erlang_c needs k >= 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::invalid(format!("offered load {a} must be finite and >= 0")));
    }
    let kf = f64::from(k);
    if a >= kf {
        return Err(Error::Unstable {
            mu: f64::NAN,
            capacity: kf,
            lambda: a,
        });
    }
    let mut b = 1.0;
    for n in 1..=k {
        b = a * b / (f64::from(n) + a * b);
    }
    Ok(kf * b / (kf - a * (1.0 - b)))
}

impl StochasticObjective for QueueModel {
    fn sample(&self, x: &Candidate, stream: Stream) -> Result<f64> {
        if x.dimension() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: x.dimension(),
            });
        }
        self.objective_sample(x.first(), stream)
    }
}

/// Zero-noise view of a queue model: every sample is the analytic objective.
#[derive(Debug, Clone)]
pub struct AnalyticQueue(pub QueueModel);

impl StochasticObjective for AnalyticQueue {
    fn sample(&self, x: &Candidate, _stream: Stream) -> Result<f64> {
        if x.dimension() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: x.dimension(),
            });
        }
        self.0.check_mu(x.first())?;
        self.0.analytic_objective(x.first())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of the Erlang C closed form with factorials.
    fn erlang_c_direct(k: u32, a: f64) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let rho = a / f64::from(k);
        let head: f64 = (0..k).map(|n| a.powi(n as i32) / fact(n)).sum();
        let tail = a.powi(k as i32) / (fact(k) * (1.0 - rho));
        tail / (head + tail)
    }

    #[test]
    fn erlang_c_matches_direct_formula() {
        for k in 1..=8 {
            for i in 1..40 {
                let a = f64::from(k) * f64::from(i) / 40.0;
                let got = erlang_c(k, a).unwrap();
                let want = erlang_c_direct(k, a);
                assert!((got - want).abs() < 1e-12, "k={k} a={a}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn erlang_c_examples() {
        assert!((erlang_c(1, 0.37).unwrap() - 0.37).abs() < 1e-15);
        // Direct closed form at k=3, a=2.5: 0.702247191...
        assert!((erlang_c(3, 2.5).unwrap() - 0.702_247_191_011_236).abs() < 1e-12);
        assert!(erlang_c(3, 1e-9).unwrap() < 1e-20);
        assert_eq!(erlang_c(3, 0.0).unwrap(), 0.0);
        assert!(matches!(erlang_c(3, 3.0), Err(Error::Unstable { .. })));
    }

    #[test]
    fn erlang_c_monotone_towards_one() {
        for k in 1..=6 {
            let kf = f64::from(k);
            let mut prev = 0.0;
            for i in 1..1000 {
                let c = erlang_c(k, kf * f64::from(i) / 1000.0).unwrap();
                assert!(c > prev);
                prev = c;
            }
            assert!(erlang_c(k, kf * (1.0 - 1e-9)).unwrap() > 0.999_999);
        }
    }

    #[test]
    fn analytic_values() {
        let m = QueueModel::default();
        // Wq(1.5) = C(3, 5/3) / (4.5 - 2.5) = 0.14988...
        let wq = m.analytic_queue_wait(1.5).unwrap();
        assert!((wq - 0.149_880_095_923_261_4).abs() < 1e-12);
        assert!((m.analytic_objective(1.5).unwrap() - 3.524_880_095_923_261).abs() < 1e-12);
        let soj = QueueModel {
            wait_mode: WaitMode::Sojourn,
            ..QueueModel::default()
        };
        assert!((soj.analytic_objective(1.5).unwrap() - (3.524_880_095_923_261 + 1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn mm1_closed_form() {
        let m = QueueModel {
            lambda: 0.5,
            servers: 1,
            mu_lower: 0.6,
            ..QueueModel::default()
        };
        assert!((m.analytic_queue_wait(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_errors() {
        let m = QueueModel::default();
        assert!(matches!(m.simulate_wait(0.8, Stream::new(0)), Err(Error::Unstable { .. })));
        assert!(matches!(m.simulate_wait(2.5 / 3.0, Stream::new(0)), Err(Error::Unstable { .. })));
        assert!(matches!(m.analytic_objective(0.8), Err(Error::Unstable { .. })));
        assert!(matches!(m.simulate_wait(4.5, Stream::new(0)), Err(Error::OutOfBounds { .. })));
        let bad = QueueModel {
            mu_lower: 0.8,
            ..QueueModel::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Unstable { .. })));
        assert!(QueueModel::default().validate().is_ok());
    }

    #[test]
    fn cost_term_is_exact_addend() {
        let m = QueueModel::default();
        assert_eq!(m.cost_term(2.0), 6.0);
        for seed in 0..20 {
            let s = Stream::new(seed);
            let w = m.simulate_wait(2.0, s).unwrap();
            assert_eq!(m.objective_sample(2.0, s).unwrap(), w + 6.0);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = QueueModel::default();
        let a = m.simulate_wait(1.3, Stream::new(5)).unwrap();
        let b = m.simulate_wait(1.3, Stream::new(5)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, m.simulate_wait(1.3, Stream::new(6)).unwrap());
    }

    #[test]
    fn sojourn_adds_service() {
        let q = QueueModel::default();
        let s = QueueModel {
            wait_mode: WaitMode::Sojourn,
            ..QueueModel::default()
        };
        let stream = Stream::new(8);
        // Same draws, so the difference is the mean service time of the window.
        let diff = s.simulate_wait(2.0, stream).unwrap() - q.simulate_wait(2.0, stream).unwrap();
        assert!(diff > 0.4 && diff < 0.6, "mean service time {diff}");
    }

    #[test]
    fn grid_search_finds_minimum() {
        let g = QueueModel::default().analytic_grid(1.0, 4.0, 0.001).unwrap();
        assert_eq!(g.points.len(), 3001);
        assert!((g.argmin - 1.123).abs() < 1e-9);
        assert!((g.min - 2.530_940_496_549_2).abs() < 1e-9);
    }
}
