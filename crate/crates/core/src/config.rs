//! Experiment configuration file.
//!
//! A TOML document with a top-level `seed` and three sections:
//!
//! ```toml
//! seed = 1
//!
//! [queue]
//! lambda = 2.5
//! servers = 3
//! cost = 0.5
//! mu_lower = 1.0
//! mu_upper = 4.0
//! customers_per_rep = 2000
//! warmup_customers = 500
//! wait_mode = "queue"
//!
//! [teso]
//! trials = 300
//! # ... every optimizer parameter, see `TesoSection`
//!
//! [suite]
//! n_macro = 30
//! algorithms = ["prs", "teso-no-elite", "teso-no-tabu", "teso"]
//! output_dir = "results"
//! ```
//!
//! Missing keys take their defaults, unknown keys are rejected, and every
//! validation error names the file line of the offending key.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{AlgorithmSpec, LastWindow, LastWindowMetric, SuiteOptions, Variant};
use crate::error::{Error, Result};
use crate::objective::Direction;
use crate::optimizer::{AspirationPolicy, TesoConfig};
use crate::queue::{QueueModel, WaitMode};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n_macro: usize,
    pub algorithms: Vec<Variant>,
    pub output_dir: PathBuf,
    /// Parallel macro-replications; 0 lets rayon decide.
    pub jobs: usize,
    pub last_window: LastWindow,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_macro: 30,
            algorithms: Variant::ALL.to_vec(),
            output_dir: PathBuf::from("results"),
            jobs: 0,
            last_window: LastWindow::default(),
        }
    }
}

/// Effective configuration of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub queue: QueueModel,
    pub teso: TesoConfig,
    pub suite: SuiteConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            queue: QueueModel::default(),
            teso: TesoConfig {
                base_seed: DEFAULT_SEED,
                ..TesoConfig::default()
            },
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QueueSection {
    lambda: f64,
    servers: u32,
    cost: f64,
    mu_lower: f64,
    mu_upper: f64,
    customers_per_rep: usize,
    warmup_customers: usize,
    wait_mode: String,
}

impl Default for QueueSection {
    fn default() -> Self {
        QueueSection::from(&QueueModel::default())
    }
}

impl From<&QueueModel> for QueueSection {
    fn from(q: &QueueModel) -> Self {
        QueueSection {
            lambda: q.lambda,
            servers: q.servers,
            cost: q.cost,
            mu_lower: q.mu_lower,
            mu_upper: q.mu_upper,
            customers_per_rep: q.customers_per_rep,
            warmup_customers: q.warmup_customers,
            wait_mode: q.wait_mode.as_str().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TesoSection {
    trials: usize,
    n_init: usize,
    n_rep: usize,
    eta_init: f64,
    eta_final: f64,
    tabu_capacity: usize,
    elite_capacity: usize,
    p_div: f64,
    dt_max: usize,
    direction: String,
    bin_width: f64,
    pilot_reps: usize,
    disable_tabu: bool,
    disable_elite: bool,
    aspiration: String,
    reuse_pilot: bool,
    keep_samples: bool,
}

impl Default for TesoSection {
    fn default() -> Self {
        TesoSection::from(&TesoConfig::default())
    }
}

impl From<&TesoConfig> for TesoSection {
    fn from(t: &TesoConfig) -> Self {
        TesoSection {
            trials: t.trials,
            n_init: t.n_init,
            n_rep: t.n_rep,
            eta_init: t.eta_init,
            eta_final: t.eta_final,
            tabu_capacity: t.tabu_capacity,
            elite_capacity: t.elite_capacity,
            p_div: t.p_div,
            dt_max: t.dt_max,
            direction: match t.direction {
                Direction::Minimize => "minimize",
                Direction::Maximize => "maximize",
            }
            .to_owned(),
            bin_width: t.bin_width,
            pilot_reps: t.pilot_reps,
            disable_tabu: t.disable_tabu,
            disable_elite: t.disable_elite,
            aspiration: t.aspiration.as_str().to_owned(),
            reuse_pilot: t.reuse_pilot,
            keep_samples: t.keep_samples,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SuiteSection {
    n_macro: usize,
    algorithms: Vec<String>,
    output_dir: PathBuf,
    jobs: usize,
    last_window: usize,
    last_window_metric: String,
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection::from(&SuiteConfig::default())
    }
}

impl From<&SuiteConfig> for SuiteSection {
    fn from(s: &SuiteConfig) -> Self {
        SuiteSection {
            n_macro: s.n_macro,
            algorithms: s.algorithms.iter().map(|v| v.slug().to_owned()).collect(),
            output_dir: s.output_dir.clone(),
            jobs: s.jobs,
            last_window: s.last_window.size,
            last_window_metric: s.last_window.metric.as_str().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    queue: QueueSection,
    #[serde(default)]
    teso: TesoSection,
    #[serde(default)]
    suite: SuiteSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Where each `section.key` came from, for error messages.
struct Origins {
    path: PathBuf,
    lines: HashMap<String, (PathBuf, usize)>,
}

impl Origins {
    fn scan(path: &Path, src: &str) -> Self {
        let mut lines = HashMap::new();
        let mut section = String::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_owned();
                lines.insert(section.clone(), (path.to_owned(), i + 1));
            } else if let Some((key, _)) = line.split_once('=') {
                let key = key.trim().trim_matches('"');
                let full = if section.is_empty() {
                    key.to_owned()
                } else {
                    format!("{section}.{key}")
                };
                lines.insert(full, (path.to_owned(), i + 1));
            }
        }
        Origins {
            path: path.to_owned(),
            lines,
        }
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        let section = key.split('.').next().unwrap_or("");
        let (path, line) = self
            .lines
            .get(key)
            .or_else(|| self.lines.get(section))
            .cloned()
            .unwrap_or_else(|| (self.path.clone(), 1));
        Error::Config {
            path,
            line,
            message: format!("{key}: {}", message.into()),
        }
    }
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src, path, &[])
    }

    /// Loads a config and applies `section.key=value` overrides on top of it.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let src = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml_str(&src, p, overrides)
            }
            None => Self::from_toml_str("", Path::new("<defaults>"), overrides),
        }
    }

    /// Parses `src`; `path` is only used in error messages.
    pub fn from_toml_str(src: &str, path: &Path, overrides: &[String]) -> Result<Self> {
        let mut origins = Origins::scan(path, src);
        let parse_error = |e: toml::de::Error| Error::Config {
            path: path.to_owned(),
            line: e.span().map(|s| line_of_offset(src, s.start)).unwrap_or(1),
            message: e.message().to_owned(),
        };
        let file: FileConfig = if overrides.is_empty() {
            toml::from_str(src).map_err(parse_error)?
        } else {
            let mut table: toml::Table = toml::from_str(src).map_err(parse_error)?;
            for (i, o) in overrides.iter().enumerate() {
                let key = apply_override(&mut table, o).map_err(|m| Error::Config {
                    path: PathBuf::from("--set"),
                    line: i + 1,
                    message: m,
                })?;
                origins.lines.insert(key, (PathBuf::from("--set"), i + 1));
            }
            let text = toml::to_string(&table).map_err(|e| Error::invalid(e.to_string()))?;
            toml::from_str(&text).map_err(|e: toml::de::Error| Error::Config {
                path: PathBuf::from("--set"),
                line: 1,
                message: e.message().to_owned(),
            })?
        };
        Self::from_file(file, &origins)
    }

    fn from_file(file: FileConfig, o: &Origins) -> Result<Self> {
        let q = &file.queue;
        let wait_mode: WaitMode = q
            .wait_mode
            .parse()
            .map_err(|e: Error| o.error("queue.wait_mode", e.to_string()))?;
        let queue = QueueModel {
            lambda: q.lambda,
            servers: q.servers,
            cost: q.cost,
            mu_lower: q.mu_lower,
            mu_upper: q.mu_upper,
            customers_per_rep: q.customers_per_rep,
            warmup_customers: q.warmup_customers,
            wait_mode,
        };
        validate_queue(&queue, o)?;

        let t = &file.teso;
        let direction = match t.direction.as_str() {
            "minimize" => Direction::Minimize,
            "maximize" => Direction::Maximize,
            other => {
                return Err(o.error(
                    "teso.direction",
                    format!("unknown direction {other:?} (expected minimize or maximize)"),
                ))
            }
        };
        let aspiration: AspirationPolicy = t
            .aspiration
            .parse()
            .map_err(|e: Error| o.error("teso.aspiration", e.to_string()))?;
        let teso = TesoConfig {
            trials: t.trials,
            n_init: t.n_init,
            n_rep: t.n_rep,
            eta_init: t.eta_init,
            eta_final: t.eta_final,
            tabu_capacity: t.tabu_capacity,
            elite_capacity: t.elite_capacity,
            p_div: t.p_div,
            dt_max: t.dt_max,
            direction,
            bin_width: t.bin_width,
            pilot_reps: t.pilot_reps,
            disable_tabu: t.disable_tabu,
            disable_elite: t.disable_elite,
            aspiration,
            reuse_pilot: t.reuse_pilot,
            keep_samples: t.keep_samples,
            base_seed: file.seed,
        };
        validate_teso(&teso, o)?;

        let s = &file.suite;
        let algorithms = s
            .algorithms
            .iter()
            .map(|a| a.parse::<Variant>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| o.error("suite.algorithms", e.to_string()))?;
        if algorithms.is_empty() {
            return Err(o.error("suite.algorithms", "at least one algorithm is required"));
        }
        if s.n_macro == 0 {
            return Err(o.error("suite.n_macro", "must be at least 1"));
        }
        if s.last_window == 0 {
            return Err(o.error("suite.last_window", "must be at least 1"));
        }
        let metric: LastWindowMetric = s
            .last_window_metric
            .parse()
            .map_err(|e: Error| o.error("suite.last_window_metric", e.to_string()))?;
        let suite = SuiteConfig {
            n_macro: s.n_macro,
            algorithms,
            output_dir: s.output_dir.clone(),
            jobs: s.jobs,
            last_window: LastWindow {
                size: s.last_window,
                metric,
            },
        };
        Ok(ExperimentConfig {
            seed: file.seed,
            queue,
            teso,
            suite,
        })
    }

    /// Effective configuration with every default spelled out.
    pub fn to_toml_string(&self) -> String {
        let file = FileConfig {
            seed: self.seed,
            queue: QueueSection::from(&self.queue),
            teso: TesoSection::from(&self.teso),
            suite: SuiteSection::from(&self.suite),
        };
        toml::to_string(&file).expect("config sections are plain TOML values")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.teso.base_seed = seed;
    }

    pub fn algorithm_specs(&self) -> Vec<AlgorithmSpec> {
        self.suite
            .algorithms
            .iter()
            .map(|v| AlgorithmSpec::new(*v, &self.teso))
            .collect()
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            n_macro: self.suite.n_macro,
            base_seed: self.seed,
            last_window: self.suite.last_window,
            jobs: self.suite.jobs,
        }
    }
}

/// Sets `section.key = value` in `table`; `value` is parsed as a TOML value,
/// falling back to a bare string. Returns the dotted key.
fn apply_override(table: &mut toml::Table, spec: &str) -> std::result::Result<String, String> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override {spec:?} is not of the form section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let mut parts = key.split('.');
    let (first, second) = (parts.next(), parts.next());
    if parts.next().is_some() {
        return Err(format!("override key {key:?} has more than two components"));
    }
    match (first, second) {
        (Some(k), None) if !k.is_empty() => {
            table.insert(k.to_owned(), value);
        }
        (Some(section), Some(k)) if !section.is_empty() && !k.is_empty() => {
            let entry = table
                .entry(section.to_owned())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let sub = entry
                .as_table_mut()
                .ok_or_else(|| format!("{section} is not a section"))?;
            sub.insert(k.to_owned(), value);
        }
        _ => return Err(format!("empty override key in {spec:?}")),
    }
    Ok(key.to_owned())
}

fn validate_queue(q: &QueueModel, o: &Origins) -> Result<()> {
    if !(q.lambda.is_finite() && q.lambda > 0.0) {
        return Err(o.error("queue.lambda", format!("{} must be positive", q.lambda)));
    }
    if q.servers == 0 {
        return Err(o.error("queue.servers", "must be at least 1"));
    }
    if !(q.cost.is_finite() && q.cost >= 0.0) {
        return Err(o.error("queue.cost", format!("{} must be >= 0", q.cost)));
    }
    if !(q.mu_lower.is_finite() && q.mu_upper.is_finite() && q.mu_lower < q.mu_upper) {
        return Err(o.error(
            "queue.mu_upper",
            format!("bounds [{}, {}] need lower < upper", q.mu_lower, q.mu_upper),
        ));
    }
    if f64::from(q.servers) * q.mu_lower <= q.lambda {
        return Err(o.error(
            "queue.mu_lower",
            format!(
                "stability requires servers * mu > lambda over the whole range, \
                 but {} * {} = {} <= {}",
                q.servers,
                q.mu_lower,
                f64::from(q.servers) * q.mu_lower,
                q.lambda
            ),
        ));
    }
    if q.customers_per_rep == 0 {
        return Err(o.error("queue.customers_per_rep", "must be at least 1"));
    }
    q.validate().map_err(|e| o.error("queue", e.to_string()))
}

fn validate_teso(t: &TesoConfig, o: &Origins) -> Result<()> {
    let checks: [(bool, &str, String); 10] = [
        (t.trials >= 1, "teso.trials", "must be at least 1".into()),
        (
            t.n_init <= t.trials,
            "teso.n_init",
            format!("{} exceeds trials = {}", t.n_init, t.trials),
        ),
        (t.n_rep >= 1, "teso.n_rep", "must be at least 1".into()),
        (t.eta_init > 0.0, "teso.eta_init", format!("{} must be positive", t.eta_init)),
        (
            t.eta_final > 0.0 && t.eta_final <= t.eta_init,
            "teso.eta_final",
            format!("{} must lie in (0, eta_init = {}]", t.eta_final, t.eta_init),
        ),
        (t.elite_capacity >= 1, "teso.elite_capacity", "must be at least 1".into()),
        (
            (0.0..=1.0).contains(&t.p_div),
            "teso.p_div",
            format!("{} must lie in [0, 1]", t.p_div),
        ),
        (t.dt_max >= 1, "teso.dt_max", "must be at least 1".into()),
        (
            t.bin_width > 0.0 && t.bin_width.is_finite(),
            "teso.bin_width",
            format!("{} must be positive", t.bin_width),
        ),
        (
            t.pilot_reps >= 1 && t.pilot_reps <= t.n_rep,
            "teso.pilot_reps",
            format!("{} must lie in [1, n_rep = {}]", t.pilot_reps, t.n_rep),
        ),
    ];
    for (ok, key, msg) in checks {
        if !ok {
            return Err(o.error(key, msg));
        }
    }
    t.validate().map_err(|e| o.error("teso", e.to_string()))
}
