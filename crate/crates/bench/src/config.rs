//! Experiment configuration: a flat `key = value` file with `#` comments.
//! Absent keys take the defaults of the chosen experiment; unknown keys are
//! rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::plant::PendulumParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("failed to read {}: {message}", path.display())]
    Unreadable { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Repetitive sine path with a half-length change at 50 s.
    CaseA,
    /// Growing spiral.
    CaseB,
    /// Seeded random closed spline over 300 s.
    CaseC,
    /// Case B with wide receptive fields.
    GlobalRbf,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainerKind {
    Sgd,
    Rls,
    Ffrls,
    Smrls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Sine,
    Spiral,
    Spline,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!(
                        "unknown value `{other}` (expected one of: {})",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(ExperimentKind {
    ExperimentKind::CaseA => "case_a",
    ExperimentKind::CaseB => "case_b",
    ExperimentKind::CaseC => "case_c",
    ExperimentKind::GlobalRbf => "global_rbf",
    ExperimentKind::Custom => "custom",
});

keyword_enum!(TrainerKind {
    TrainerKind::Sgd => "sgd",
    TrainerKind::Rls => "rls",
    TrainerKind::Ffrls => "ffrls",
    TrainerKind::Smrls => "smrls",
});

keyword_enum!(TrajectoryKind {
    TrajectoryKind::Sine => "sine",
    TrajectoryKind::Spiral => "spiral",
    TrajectoryKind::Spline => "spline",
});

/// Abrupt change of the pendulum half length during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub time: f64,
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub duration: f64,
    pub period: f64,
    /// Spline only.
    pub control_points: usize,
    /// Spline only: seconds per loop.
    pub loop_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub trainer: TrainerKind,
    pub neurons_per_dim: usize,
    pub dimension: usize,
    pub width: f64,
    pub partitions_per_dim: usize,
    pub eta: f64,
    pub lambda: f64,
    pub p0_scale: f64,
    pub w0: f64,
    pub plant: PendulumParams,
    pub perturbation: Option<Perturbation>,
    pub trajectory: TrajectorySpec,
    /// Raw state bounds `(min, max)` for `x₁` and `x₂`.
    pub bounds: [(f64, f64); 2],
    pub snapshots: Vec<f64>,
    /// Extra tracking-error windows reported in the summary.
    pub windows: Vec<(f64, f64)>,
    /// Extra learned-knowledge windows on the training path.
    pub eval_windows: Vec<(f64, f64)>,
    /// Also evaluate learned knowledge along the spiral over `[0, 100]`.
    pub ergodic_eval: bool,
    pub segments: usize,
    pub output: PathBuf,
    pub seed: u64,
}

/// Every recognized key, in the order `config_resolved.csv` lists them.
pub const KEYS: &[&str] = &[
    "experiment",
    "trainer",
    "neurons_per_dim",
    "dimension",
    "width",
    "partitions_per_dim",
    "eta",
    "lambda",
    "p0_scale",
    "w0",
    "gravity",
    "cart_mass",
    "pendulum_mass",
    "half_length",
    "perturbation_time",
    "perturbed_half_length",
    "trajectory",
    "duration",
    "period",
    "control_points",
    "loop_time",
    "x1_min",
    "x1_max",
    "x2_min",
    "x2_max",
    "snapshots",
    "windows",
    "eval_windows",
    "ergodic_eval",
    "segments",
    "output",
    "seed",
];

impl ExperimentConfig {
    /// Defaults for an experiment and trainer.
    pub fn defaults(experiment: ExperimentKind, trainer: TrainerKind) -> Self {
        let mut cfg = Self {
            experiment,
            trainer,
            neurons_per_dim: 3,
            dimension: 2,
            width: 1.0,
            partitions_per_dim: 100,
            eta: 0.02,
            lambda: 0.999,
            p0_scale: 10.0,
            w0: 0.0,
            plant: PendulumParams::default(),
            perturbation: None,
            trajectory: TrajectorySpec {
                kind: TrajectoryKind::Spiral,
                duration: 100.0,
                period: 0.01,
                control_points: 8,
                loop_time: 30.0,
            },
            bounds: [(-1.0, 1.0), (-1.0, 1.0)],
            snapshots: vec![100.0],
            windows: vec![],
            eval_windows: vec![],
            ergodic_eval: false,
            segments: 10,
            output: PathBuf::from(format!("runs/{}_{}", experiment, trainer)),
            seed: 0,
        };
        match experiment {
            ExperimentKind::CaseA => {
                cfg.trajectory.kind = TrajectoryKind::Sine;
                cfg.perturbation = Some(Perturbation {
                    time: 50.0,
                    half_length: 0.3,
                });
                cfg.snapshots = vec![52.0, 60.0, 75.0, 100.0];
                cfg.windows = vec![(0.0, 50.0), (55.0, 100.0)];
            }
            ExperimentKind::CaseB | ExperimentKind::GlobalRbf => {
                cfg.eval_windows = vec![(0.0, 90.0)];
                cfg.windows = vec![(0.0, 90.0), (90.0, 100.0)];
                if experiment == ExperimentKind::GlobalRbf {
                    cfg.width = 2.0;
                }
            }
            ExperimentKind::CaseC => {
                cfg.trajectory.kind = TrajectoryKind::Spline;
                cfg.trajectory.duration = 300.0;
                cfg.snapshots = vec![100.0, 200.0, 300.0];
                cfg.ergodic_eval = true;
            }
            ExperimentKind::Custom => {}
        }
        cfg
    }

    /// `(key, value)` pairs in [`KEYS`] order, values printed losslessly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let (pt, pl) = match self.perturbation {
            Some(p) => (fmt_f64(p.time), fmt_f64(p.half_length)),
            None => ("none".to_string(), "none".to_string()),
        };
        vec![
            ("experiment", self.experiment.to_string()),
            ("trainer", self.trainer.to_string()),
            ("neurons_per_dim", self.neurons_per_dim.to_string()),
            ("dimension", self.dimension.to_string()),
            ("width", fmt_f64(self.width)),
            ("partitions_per_dim", self.partitions_per_dim.to_string()),
            ("eta", fmt_f64(self.eta)),
            ("lambda", fmt_f64(self.lambda)),
            ("p0_scale", fmt_f64(self.p0_scale)),
            ("w0", fmt_f64(self.w0)),
            ("gravity", fmt_f64(self.plant.gravity)),
            ("cart_mass", fmt_f64(self.plant.cart_mass)),
            ("pendulum_mass", fmt_f64(self.plant.pendulum_mass)),
            ("half_length", fmt_f64(self.plant.half_length)),
            ("perturbation_time", pt),
            ("perturbed_half_length", pl),
            ("trajectory", self.trajectory.kind.to_string()),
            ("duration", fmt_f64(self.trajectory.duration)),
            ("period", fmt_f64(self.trajectory.period)),
            ("control_points", self.trajectory.control_points.to_string()),
            ("loop_time", fmt_f64(self.trajectory.loop_time)),
            ("x1_min", fmt_f64(self.bounds[0].0)),
            ("x1_max", fmt_f64(self.bounds[0].1)),
            ("x2_min", fmt_f64(self.bounds[1].0)),
            ("x2_max", fmt_f64(self.bounds[1].1)),
            (
                "snapshots",
                join(self.snapshots.iter().map(|t| fmt_f64(*t))),
            ),
            ("windows", join(self.windows.iter().map(fmt_window))),
            (
                "eval_windows",
                join(self.eval_windows.iter().map(fmt_window)),
            ),
            ("ergodic_eval", self.ergodic_eval.to_string()),
            ("segments", self.segments.to_string()),
            ("output", self.output.display().to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Builds a config from `(line, key, value)` triples. `experiment` and
    /// `trainer` select the defaults; every other key overrides one field.
    pub fn from_entries(entries: &[(usize, String, String)]) -> Result<Self, ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (line, key, _) in entries {
            if !KEYS.contains(&key.as_str()) {
                return Err(invalid(key, format!("unknown key (line {line})")));
            }
            if !seen.insert(key.as_str()) {
                return Err(ConfigError::Parse {
                    line: *line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let lookup = |k: &str| {
            entries
                .iter()
                .find(|(_, key, _)| key == k)
                .map(|(_, _, v)| v.as_str())
        };
        let experiment: ExperimentKind = match lookup("experiment") {
            Some(v) => v.parse().map_err(|e| invalid("experiment", e))?,
            None => return Err(invalid("experiment", "required key is missing")),
        };
        let trainer: TrainerKind = match lookup("trainer") {
            Some(v) => v.parse().map_err(|e| invalid("trainer", e))?,
            None => return Err(invalid("trainer", "required key is missing")),
        };
        let mut cfg = Self::defaults(experiment, trainer);
        let mut perturbation_time = cfg.perturbation.map(|p| p.time);
        let mut perturbed_length = cfg.perturbation.map(|p| p.half_length);
        let mut output_set = false;

        for (_, key, value) in entries {
            let v = value.as_str();
            match key.as_str() {
                "experiment" | "trainer" => {}
                "neurons_per_dim" => cfg.neurons_per_dim = num(key, v)?,
                "dimension" => cfg.dimension = num(key, v)?,
                "width" => cfg.width = num(key, v)?,
                "partitions_per_dim" => cfg.partitions_per_dim = num(key, v)?,
                "eta" => cfg.eta = num(key, v)?,
                "lambda" => cfg.lambda = num(key, v)?,
                "p0_scale" => cfg.p0_scale = num(key, v)?,
                "w0" => cfg.w0 = num(key, v)?,
                "gravity" => cfg.plant.gravity = num(key, v)?,
                "cart_mass" => cfg.plant.cart_mass = num(key, v)?,
                "pendulum_mass" => cfg.plant.pendulum_mass = num(key, v)?,
                "half_length" => cfg.plant.half_length = num(key, v)?,
                "perturbation_time" => perturbation_time = optional(key, v)?,
                "perturbed_half_length" => perturbed_length = optional(key, v)?,
                "trajectory" => cfg.trajectory.kind = v.parse().map_err(|e| invalid(key, e))?,
                "duration" => cfg.trajectory.duration = num(key, v)?,
                "period" => cfg.trajectory.period = num(key, v)?,
                "control_points" => cfg.trajectory.control_points = num(key, v)?,
                "loop_time" => cfg.trajectory.loop_time = num(key, v)?,
                "x1_min" => cfg.bounds[0].0 = num(key, v)?,
                "x1_max" => cfg.bounds[0].1 = num(key, v)?,
                "x2_min" => cfg.bounds[1].0 = num(key, v)?,
                "x2_max" => cfg.bounds[1].1 = num(key, v)?,
                "snapshots" => cfg.snapshots = list(v, |s| num(key, s))?,
                "windows" => cfg.windows = list(v, |s| window(key, s))?,
                "eval_windows" => cfg.eval_windows = list(v, |s| window(key, s))?,
                "ergodic_eval" => cfg.ergodic_eval = num(key, v)?,
                "segments" => cfg.segments = num(key, v)?,
                "output" => {
                    if v.is_empty() {
                        return Err(invalid(key, "empty path"));
                    }
                    cfg.output = PathBuf::from(v);
                    output_set = true;
                }
                "seed" => cfg.seed = num(key, v)?,
                _ => unreachable!("keys were checked above"),
            }
        }
        if !output_set && experiment == ExperimentKind::Custom {
            cfg.output = PathBuf::from(format!("runs/custom_{trainer}"));
        }
        cfg.perturbation = match (perturbation_time, perturbed_length) {
            (None, None) => None,
            (Some(time), Some(half_length)) => Some(Perturbation { time, half_length }),
            (Some(_), None) => {
                return Err(invalid(
                    "perturbed_half_length",
                    "required when perturbation_time is set",
                ))
            }
            (None, Some(_)) => {
                return Err(invalid(
                    "perturbation_time",
                    "required when perturbed_half_length is set",
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(
                    key,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        }
        if self.neurons_per_dim == 0 {
            return Err(invalid("neurons_per_dim", "must be at least 1"));
        }
        if self.dimension != 2 {
            return Err(invalid(
                "dimension",
                format!(
                    "pendulum experiments use a 2-dimensional input, got {}",
                    self.dimension
                ),
            ));
        }
        if self.neurons_per_dim.checked_pow(2).is_none_or(|n| n > 4096) {
            return Err(invalid("neurons_per_dim", "more than 4096 neurons"));
        }
        positive("width", self.width)?;
        if self.partitions_per_dim == 0 || self.partitions_per_dim > 4096 {
            return Err(invalid("partitions_per_dim", "must lie in 1..=4096"));
        }
        positive("eta", self.eta)?;
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(
                "lambda",
                format!("forgetting factor must lie in (0, 1], got {}", self.lambda),
            ));
        }
        positive("p0_scale", self.p0_scale)?;
        if !self.w0.is_finite() {
            return Err(invalid("w0", "must be finite"));
        }
        self.plant
            .validate()
            .map_err(|e| invalid(e.name, format!("must be positive, got {}", e.value)))?;
        if let Some(p) = self.perturbation {
            if !(p.time.is_finite() && p.time >= 0.0) {
                return Err(invalid("perturbation_time", "must be a non-negative time"));
            }
            self.plant
                .with_half_length(p.half_length)
                .validate()
                .map_err(|_| invalid("perturbed_half_length", "must be positive"))?;
        }
        let t = &self.trajectory;
        positive("duration", t.duration)?;
        positive("period", t.period)?;
        let steps = t.duration / t.period;
        if steps > 1e7 {
            return Err(invalid("duration", "more than 10^7 sampling instants"));
        }
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) || steps.round() < 1.0 {
            return Err(invalid("period", "must divide the duration"));
        }
        if t.control_points < 4 || t.control_points > 1024 {
            return Err(invalid("control_points", "must lie in 4..=1024"));
        }
        positive("loop_time", t.loop_time)?;
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(invalid(
                    if i == 0 { "x1_max" } else { "x2_max" },
                    "upper bound must exceed lower bound",
                ));
            }
        }
        for s in &self.snapshots {
            if !(*s > 0.0 && *s <= t.duration + 1e-9) {
                return Err(invalid(
                    "snapshots",
                    format!("time {s} outside (0, duration]"),
                ));
            }
        }
        for (key, ws) in [
            ("windows", &self.windows),
            ("eval_windows", &self.eval_windows),
        ] {
            for (a, b) in ws {
                if !(*a >= 0.0 && b > a && *b <= t.duration + 1e-9) {
                    return Err(invalid(
                        key,
                        format!("window {a}:{b} outside [0, duration]"),
                    ));
                }
            }
        }
        if self.segments == 0 || self.segments > 10_000 {
            return Err(invalid("segments", "must lie in 1..=10000"));
        }
        Ok(())
    }
}

/// Parses a `key = value` configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = read(path)?;
    if is_resolved_csv(&text) {
        parse_resolved_csv(&text)
    } else {
        parse_config_str(&text)
    }
}

/// Parses `key = value` text; `#` starts a comment.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Parse {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        entries.push((line, key.to_string(), value.trim().to_string()));
    }
    ExperimentConfig::from_entries(&entries)
}

/// Parses the `key,value` echo written as `config_resolved.csv`.
pub fn parse_resolved_csv(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "key,value" => {}
        _ => {
            return Err(ConfigError::Parse {
                line: 1,
                message: "expected header `key,value`".into(),
            })
        }
    }
    let mut entries = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = raw.split_once(',') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key,value`, found `{raw}`"),
            });
        };
        let value = unquote(value).ok_or_else(|| ConfigError::Parse {
            line,
            message: "unterminated quoted value".into(),
        })?;
        entries.push((line, key.trim().to_string(), value));
    }
    ExperimentConfig::from_entries(&entries)
}

/// Renders the resolved configuration as `key,value` CSV.
pub fn resolved_csv(cfg: &ExperimentConfig) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in cfg.to_pairs() {
        out.push_str(k);
        out.push(',');
        out.push_str(&quote(&v));
        out.push('\n');
    }
    out
}

fn is_resolved_csv(text: &str) -> bool {
    text.lines().next().map(str::trim) == Some("key,value")
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::MissingFile(path.to_path_buf()),
        _ => ConfigError::Unreadable {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    })
}

fn quote(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn unquote(v: &str) -> Option<String> {
    match v.strip_prefix('"') {
        Some(rest) => rest
            .strip_suffix('"')
            .map(|inner| inner.replace("\"\"", "\"")),
        None => Some(v.to_string()),
    }
}

/// Lossless rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_window(w: &(f64, f64)) -> String {
    format!("{}:{}", fmt_f64(w.0), fmt_f64(w.1))
}

fn join(items: impl Iterator<Item = String>) -> String {
    let items: Vec<_> = items.collect();
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(" ")
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

fn optional(key: &str, v: &str) -> Result<Option<f64>, ConfigError> {
    if v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

/// Whitespace- or comma-separated items; `none` or empty means no items.
fn list<T>(v: &str, item: impl Fn(&str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    if v == "none" {
        return Ok(Vec::new());
    }
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn window(key: &str, s: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| invalid(key, format!("window `{s}` is not `start:end`")))?;
    Ok((num(key, a)?, num(key, b)?))
}
