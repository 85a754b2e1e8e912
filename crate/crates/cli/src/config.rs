//! Run configuration: flat `key = value` text with dotted section prefixes.
//!
//! ```text
//! # comments run to end of line
//! experiment = bell-test
//! seed = 1
//! source.phase_mode = uniform
//! arms.noise_sigma = 0.1        # both arms
//! settings.a = pi/8
//! ```
//!
//! Numeric values accept products and quotients of numbers and `pi`
//! (`3*pi/8`, `-pi/2`, `1e-3`). A JSON-lines run manifest is also accepted;
//! its `config` object holds the same keys.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use homodyne_lhv::detector::{DiscriminatorMode, SettingMode};
use homodyne_lhv::source::PhaseMode;
use homodyne_lhv::tomography::DEFAULT_FILTER_CUTOFF;
use homodyne_lhv::{ArmSettings64, ChshSettings64, GridSpec64, SourceConfig64};

use crate::error::CliError;
use crate::format::float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BellTest,
    LoopholeSweep,
    Histogram,
    Curve,
    Scatter,
    Singles,
    Tomography,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::BellTest,
        Experiment::LoopholeSweep,
        Experiment::Histogram,
        Experiment::Curve,
        Experiment::Scatter,
        Experiment::Singles,
        Experiment::Tomography,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BellTest => "bell-test",
            Experiment::LoopholeSweep => "loophole-sweep",
            Experiment::Histogram => "histogram",
            Experiment::Curve => "curve",
            Experiment::Scatter => "scatter",
            Experiment::Singles => "singles",
            Experiment::Tomography => "tomography",
        }
    }

    /// Stream tag separating experiments run from the same seed.
    pub fn tag(self) -> u64 {
        Self::ALL.iter().position(|&e| e == self).unwrap() as u64
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepUnit {
    Absolute,
    /// Values are multiples of arm A's nominal X_max.
    XMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub unit: SweepUnit,
}

impl Sweep {
    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScatterKind {
    Ramp,
    Random,
    Columns(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyConfig {
    pub grid: GridSpec64,
    pub filter_cutoff: f64,
    /// Volts per quadrature unit; `None` means `2·arm_a.noise_sigma`.
    pub normalization: Option<f64>,
    pub calibrate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Meaning depends on the experiment; see the README.
    pub trials: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub source: SourceConfig64,
    pub arm_a: ArmSettings64,
    pub arm_b: ArmSettings64,
    pub settings: ChshSettings64,
    pub sweep: Sweep,
    pub histogram_bins: usize,
    pub histogram_half_width: Option<f64>,
    pub curve_theta_a: f64,
    pub curve_points: usize,
    pub scatter: ScatterKind,
    pub singles_points: usize,
    pub tomography: TomographyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            trials: 100_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            source: SourceConfig64::default(),
            arm_a: ArmSettings64::default(),
            arm_b: ArmSettings64::default(),
            settings: ChshSettings64::default(),
            sweep: Sweep {
                param: "arms.discriminator_threshold".into(),
                start: 0.0,
                stop: 0.95,
                steps: 20,
                unit: SweepUnit::XMax,
            },
            histogram_bins: 60,
            histogram_half_width: None,
            curve_theta_a: std::f64::consts::FRAC_PI_2,
            curve_points: 41,
            scatter: ScatterKind::Ramp,
            singles_points: 41,
            tomography: TomographyConfig {
                grid: GridSpec64::default(),
                filter_cutoff: DEFAULT_FILTER_CUTOFF,
                normalization: None,
                calibrate: true,
            },
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = `{value}`: {what}"))
}

/// Evaluates `[-]factor (('*'|'/') factor)*` with numeric or `pi` factors.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        let f = match tok {
            "pi" | "π" => std::f64::consts::PI,
            _ if tok.starts_with(['+', '-']) => return None,
            _ => tok.parse::<f64>().ok()?,
        };
        value = if op == '*' { value * f } else { value / f };
        if end == rest.len() {
            break;
        }
        op = rest[end..].chars().next().unwrap();
        rest = &rest[end + 1..];
    }
    Some(if neg { -value } else { value })
}

fn num(key: &str, value: &str) -> Result<f64, CliError> {
    parse_number(value)
        .filter(|v| !v.is_nan())
        .ok_or_else(|| bad(key, value, "expected a number"))
}

fn count<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, value, "expected a non-negative integer"))
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>, CliError> {
    match value.trim() {
        "auto" => Ok(None),
        v => num(key, v).map(Some),
    }
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), float)
}

fn set_arm(arm: &mut ArmSettings64, field: &str, key: &str, value: &str) -> Result<(), CliError> {
    match field {
        "mode" => {
            arm.mode = match value.trim() {
                "phase" => SettingMode::Phase,
                "path" => SettingMode::Path,
                _ => return Err(bad(key, value, "expected phase or path")),
            }
        }
        "theta_setting" => arm.theta_setting = num(key, value)?,
        "path_delta" => arm.path_delta = num(key, value)?,
        "path_offset" => arm.path_offset = num(key, value)?,
        "omega_ref" => arm.omega_ref = num(key, value)?,
        "lo_amplitude" => arm.lo_amplitude = num(key, value)?,
        "gain" => arm.gain = num(key, value)?,
        "noise_sigma" => arm.noise_sigma = num(key, value)?,
        "discriminator_threshold" => arm.discriminator_threshold = num(key, value)?,
        "discriminator_mode" => {
            let offset = match arm.discriminator_mode {
                DiscriminatorMode::TwoChannel { offset } => offset,
                DiscriminatorMode::Difference => 0.0,
            };
            arm.discriminator_mode = match value.trim() {
                "difference" => DiscriminatorMode::Difference,
                "two_channel" => DiscriminatorMode::TwoChannel { offset },
                _ => return Err(bad(key, value, "expected difference or two_channel")),
            }
        }
        "discriminator_offset" => {
            let v = num(key, value)?;
            match &mut arm.discriminator_mode {
                DiscriminatorMode::TwoChannel { offset } => *offset = v,
                DiscriminatorMode::Difference => {
                    arm.discriminator_mode = DiscriminatorMode::TwoChannel { offset: v }
                }
            }
        }
        _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn arm_pairs(prefix: &str, arm: &ArmSettings64, out: &mut Vec<(String, String)>) {
    let (mode, offset) = match arm.discriminator_mode {
        DiscriminatorMode::Difference => ("difference", None),
        DiscriminatorMode::TwoChannel { offset } => ("two_channel", Some(offset)),
    };
    let mut push = |k: &str, v: String| out.push((format!("{prefix}.{k}"), v));
    push("mode", arm.mode.to_string());
    push("omega_ref", float(arm.omega_ref));
    push("path_offset", float(arm.path_offset));
    push("theta_setting", float(arm.theta_setting));
    push("path_delta", float(arm.path_delta));
    push("lo_amplitude", float(arm.lo_amplitude));
    push("gain", float(arm.gain));
    push("noise_sigma", float(arm.noise_sigma));
    push("discriminator_threshold", float(arm.discriminator_threshold));
    push("discriminator_mode", mode.into());
    if let Some(o) = offset {
        push("discriminator_offset", float(o));
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        let value = value.trim();
        let (section, field) = key.split_once('.').unwrap_or(("", key));
        match (section, field) {
            ("", "experiment") => self.experiment = Some(value.parse()?),
            ("", "seed") => self.seed = count(key, value)?,
            ("", "trials") => self.trials = count(key, value)?,
            ("", "workers") => self.workers = count(key, value)?,
            ("", "out") => self.out = Some(PathBuf::from(value)),
            ("source", f) => {
                let s = &mut self.source;
                match f {
                    "p_alpha_zero" => s.p_alpha_zero = num(key, value)?,
                    "omega_mean" => s.omega_mean = num(key, value)?,
                    "omega_sigma" => s.omega_sigma = num(key, value)?,
                    "delta_omega_sigma" => s.delta_omega_sigma = num(key, value)?,
                    "amplitude_mean" => s.amplitude_mean = num(key, value)?,
                    "amplitude_sigma" => s.amplitude_sigma = num(key, value)?,
                    "amplitude_correlation" => s.amplitude_correlation = num(key, value)?,
                    "tap_ratio" => s.tap_ratio = num(key, value)?,
                    "pd_threshold" => s.pd_threshold = num(key, value)?,
                    "phase_mode" => {
                        s.phase_mode = value
                            .parse::<PhaseMode>()
                            .map_err(|_| bad(key, value, "expected two_class or uniform"))?
                    }
                    _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
                }
            }
            ("arm_a", f) => set_arm(&mut self.arm_a, f, key, value)?,
            ("arm_b", f) => set_arm(&mut self.arm_b, f, key, value)?,
            ("arms", f) => {
                set_arm(&mut self.arm_a, f, key, value)?;
                set_arm(&mut self.arm_b, f, key, value)?;
            }
            ("settings", f) => {
                let v = num(key, value)?;
                match f {
                    "a" => self.settings.a = v,
                    "a_prime" => self.settings.a_prime = v,
                    "b" => self.settings.b = v,
                    "b_prime" => self.settings.b_prime = v,
                    _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
                }
            }
            ("sweep", f) => match f {
                "param" => self.sweep.param = value.into(),
                "start" => self.sweep.start = num(key, value)?,
                "stop" => self.sweep.stop = num(key, value)?,
                "steps" => self.sweep.steps = count(key, value)?,
                "unit" => {
                    self.sweep.unit = match value {
                        "abs" => SweepUnit::Absolute,
                        "xmax" => SweepUnit::XMax,
                        _ => return Err(bad(key, value, "expected abs or xmax")),
                    }
                }
                _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
            },
            ("histogram", "bins") => self.histogram_bins = count(key, value)?,
            ("histogram", "half_width") => self.histogram_half_width = opt_num(key, value)?,
            ("curve", "theta_a") => self.curve_theta_a = num(key, value)?,
            ("curve", "points") => self.curve_points = count(key, value)?,
            ("scatter", "mode") => {
                self.scatter = match value {
                    "ramp" => ScatterKind::Ramp,
                    "random" => ScatterKind::Random,
                    "columns" => match &self.scatter {
                        ScatterKind::Columns(c) => ScatterKind::Columns(c.clone()),
                        _ => ScatterKind::Columns(Vec::new()),
                    },
                    _ => return Err(bad(key, value, "expected ramp, random or columns")),
                }
            }
            ("scatter", "columns") => {
                let cols = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<Vec<_>, _>>()?;
                self.scatter = ScatterKind::Columns(cols);
            }
            ("singles", "points") => self.singles_points = count(key, value)?,
            ("tomography", f) => {
                let t = &mut self.tomography;
                match f {
                    "n_x" => t.grid.n_x = count(key, value)?,
                    "n_p" => t.grid.n_p = count(key, value)?,
                    "x_extent" => t.grid.x_extent = num(key, value)?,
                    "p_extent" => t.grid.p_extent = num(key, value)?,
                    "phase_bins" => t.grid.phase_bins = count(key, value)?,
                    "quadrature_bins" => t.grid.quadrature_bins = count(key, value)?,
                    "quadrature_extent" => t.grid.quadrature_extent = num(key, value)?,
                    "filter_cutoff" => t.filter_cutoff = num(key, value)?,
                    "normalization" => t.normalization = opt_num(key, value)?,
                    "calibrate" => t.calibrate = flag(key, value)?,
                    _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
                }
            }
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let line = trimmed.lines().next().unwrap_or("");
            let v: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| CliError::Config(format!("manifest: {e}")))?;
            let map = v
                .get("config")
                .and_then(|c| c.as_object())
                .ok_or_else(|| CliError::Config("manifest has no `config` object".into()))?;
            for (k, val) in map {
                let s = val
                    .as_str()
                    .ok_or_else(|| CliError::Config(format!("manifest value for `{k}` is not a string")))?;
                cfg.set(k, s)?;
            }
            return Ok(cfg);
        }
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Every setting as `(key, value)`; feeding these back through
    /// [`set`](Self::set) reproduces the configuration.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(e) = self.experiment {
            push("experiment", e.to_string());
        }
        push("seed", self.seed.to_string());
        push("trials", self.trials.to_string());
        push("workers", self.workers.to_string());
        if let Some(o) = &self.out {
            push("out", o.display().to_string());
        }
        let s = &self.source;
        push("source.p_alpha_zero", float(s.p_alpha_zero));
        push("source.omega_mean", float(s.omega_mean));
        push("source.omega_sigma", float(s.omega_sigma));
        push("source.delta_omega_sigma", float(s.delta_omega_sigma));
        push("source.amplitude_mean", float(s.amplitude_mean));
        push("source.amplitude_sigma", float(s.amplitude_sigma));
        push("source.amplitude_correlation", float(s.amplitude_correlation));
        push("source.tap_ratio", float(s.tap_ratio));
        push("source.pd_threshold", float(s.pd_threshold));
        push("source.phase_mode", s.phase_mode.to_string());
        push("settings.a", float(self.settings.a));
        push("settings.a_prime", float(self.settings.a_prime));
        push("settings.b", float(self.settings.b));
        push("settings.b_prime", float(self.settings.b_prime));
        push("sweep.param", self.sweep.param.clone());
        push("sweep.start", float(self.sweep.start));
        push("sweep.stop", float(self.sweep.stop));
        push("sweep.steps", self.sweep.steps.to_string());
        push(
            "sweep.unit",
            match self.sweep.unit {
                SweepUnit::Absolute => "abs",
                SweepUnit::XMax => "xmax",
            }
            .into(),
        );
        push("histogram.bins", self.histogram_bins.to_string());
        push("histogram.half_width", opt_str(self.histogram_half_width));
        push("curve.theta_a", float(self.curve_theta_a));
        push("curve.points", self.curve_points.to_string());
        match &self.scatter {
            ScatterKind::Ramp => push("scatter.mode", "ramp".into()),
            ScatterKind::Random => push("scatter.mode", "random".into()),
            ScatterKind::Columns(c) => {
                push(
                    "scatter.columns",
                    c.iter().map(|&v| float(v)).collect::<Vec<_>>().join(","),
                );
                push("scatter.mode", "columns".into());
            }
        }
        push("singles.points", self.singles_points.to_string());
        let t = &self.tomography;
        push("tomography.n_x", t.grid.n_x.to_string());
        push("tomography.n_p", t.grid.n_p.to_string());
        push("tomography.x_extent", float(t.grid.x_extent));
        push("tomography.p_extent", float(t.grid.p_extent));
        push("tomography.phase_bins", t.grid.phase_bins.to_string());
        push("tomography.quadrature_bins", t.grid.quadrature_bins.to_string());
        push("tomography.quadrature_extent", float(t.grid.quadrature_extent));
        push("tomography.filter_cutoff", float(t.filter_cutoff));
        push("tomography.normalization", opt_str(t.normalization));
        push("tomography.calibrate", t.calibrate.to_string());
        arm_pairs("arm_a", &self.arm_a, &mut out);
        arm_pairs("arm_b", &self.arm_b, &mut out);
        out
    }

    /// Checks cross-field constraints that individual keys cannot.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.experiment.is_none() {
            return Err(CliError::Config("no experiment given".into()));
        }
        if self.trials < 1 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.sweep.steps < 1 {
            return Err(CliError::Config("sweep.steps must be at least 1".into()));
        }
        // The swept parameter must name a numeric key.
        self.clone().set(&self.sweep.param, "0")?;
        Ok(())
    }
}
