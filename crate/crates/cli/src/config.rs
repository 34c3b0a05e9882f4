//! Line-oriented `key = value` run configuration.
//!
//! A run is assembled from three layers: built-in defaults, then the config
//! file, then command-line flags, later layers winning key by key. Unknown
//! keys and out-of-range numbers are rejected at parse time, and every
//! accepted configuration can be echoed back with --dump-config in a form
//! that parses to the same run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use outlier_core::bandwidth::CvConfig;
use outlier_core::detector::{Bandwidth, DetectorConfig, LevelSchedule, Variant};
use outlier_core::sim::{Distribution, MeanFn, Process};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    Summable,
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(ScheduleKind::Constant),
            "summable" => Ok(ScheduleKind::Summable),
            other => Err(format!("unknown schedule '{other}', expected constant or summable")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthChoice {
    Auto,
    Fixed(f64),
}

impl FromStr for BandwidthChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(BandwidthChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthChoice::Fixed(h)),
            Ok(h) => Err(format!("bandwidth {h} out of range, need a positive number or 'auto'")),
            Err(_) => Err(format!("bandwidth '{s}' is neither a number nor 'auto'")),
        }
    }
}

/// Comma-separated positive weights, e.g. `0.5,0.25,0.125`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightList(pub Vec<f64>);

impl FromStr for WeightList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut ws = Vec::new();
        for piece in s.split(',') {
            let piece = piece.trim();
            match piece.parse::<f64>() {
                Ok(w) if w > 0.0 && w.is_finite() => ws.push(w),
                _ => return Err(format!("weight '{piece}' is not a positive number")),
            }
        }
        Ok(WeightList(ws))
    }
}

/// One layer of settings; `None` means "not set at this layer".
#[derive(Debug, Clone, Default)]
pub struct ConfigPatch {
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub schedule: Option<ScheduleKind>,
    pub weights: Option<WeightList>,
    pub variant: Option<Variant>,
    pub bandwidth: Option<BandwidthChoice>,
    pub block_count: Option<usize>,
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mean_fn: Option<MeanFn>,
    pub process: Option<Process>,
    pub dist: Option<Distribution>,
    pub contaminated: bool,
    pub replications: Option<usize>,
    pub full_grid: bool,
}

impl ConfigPatch {
    fn apply(&mut self, other: ConfigPatch) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            n, alpha, schedule, weights, variant, bandwidth, block_count, seed, input, output,
            mean_fn, process, dist, replications
        );
        self.contaminated |= other.contaminated;
        self.full_grid |= other.full_grid;
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub schedule: ScheduleKind,
    pub weights: Option<Vec<f64>>,
    pub variant: Variant,
    pub bandwidth: BandwidthChoice,
    pub block_count: Option<usize>,
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mean_fn: MeanFn,
    pub process: Process,
    pub dist: Distribution,
    pub contaminated: bool,
    pub replications: usize,
    pub full_grid: bool,
}

impl RunConfig {
    pub fn resolve(file: ConfigPatch, flags: ConfigPatch) -> Result<RunConfig> {
        let mut merged = file;
        merged.apply(flags);

        let n = merged.n.unwrap_or(100);
        if n < 2 {
            return Err(CliError::Usage(format!("n = {n} is too small to calibrate")));
        }
        let alpha = merged.alpha.unwrap_or(0.01);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha = {alpha} must lie strictly in (0, 1)")));
        }
        let replications = merged.replications.unwrap_or(100);
        if replications == 0 {
            return Err(CliError::Usage("replications must be at least 1".into()));
        }
        if let Some(m) = merged.block_count {
            if m < 2 {
                return Err(CliError::Usage(format!("block_count = {m} leaves nothing to fit")));
            }
        }
        let schedule = merged.schedule.unwrap_or(ScheduleKind::Constant);
        let weights = merged.weights.map(|w| w.0);
        if weights.is_some() && schedule != ScheduleKind::Summable {
            return Err(CliError::Usage("weights only make sense with schedule = summable".into()));
        }

        Ok(RunConfig {
            n,
            alpha,
            schedule,
            weights,
            variant: merged.variant.unwrap_or(Variant::Full),
            bandwidth: merged.bandwidth.unwrap_or(BandwidthChoice::Auto),
            block_count: merged.block_count,
            seed: merged.seed,
            input: merged.input,
            output: merged.output,
            mean_fn: merged.mean_fn.unwrap_or(MeanFn::Mu0),
            process: merged.process.unwrap_or(Process::Iid),
            dist: merged.dist.unwrap_or(Distribution::Normal),
            contaminated: merged.contaminated,
            replications,
            full_grid: merged.full_grid,
        })
    }

    /// Detector settings for a stream calibrated on `n` points. The grid
    /// command passes its own n per cell; everything else uses self.n.
    pub fn detector_config(&self, n: usize) -> Result<DetectorConfig> {
        let schedule = match (self.schedule, &self.weights) {
            (ScheduleKind::Constant, _) => LevelSchedule::constant(self.alpha),
            (ScheduleKind::Summable, None) => LevelSchedule::summable(self.alpha),
            (ScheduleKind::Summable, Some(ws)) => LevelSchedule::summable_with(self.alpha, ws.clone()),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let mut cfg = DetectorConfig::new(n, schedule);
        cfg.variant = self.variant;
        cfg.bandwidth = match self.bandwidth {
            BandwidthChoice::Auto => Bandwidth::Auto(CvConfig::for_length(n)),
            BandwidthChoice::Fixed(h) => Bandwidth::Fixed(h),
        };
        cfg.block_count = self.block_count;
        Ok(cfg)
    }

    /// Echo in the accepted file format; parsing this output reproduces the
    /// same resolved configuration.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let kind = match self.schedule {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Summable => "summable",
        };
        let _ = writeln!(out, "schedule = {kind}");
        if let Some(ws) = &self.weights {
            let joined: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
            let _ = writeln!(out, "weights = {}", joined.join(","));
        }
        let variant = match self.variant {
            Variant::Full => "full",
            Variant::Partial => "partial",
        };
        let _ = writeln!(out, "variant = {variant}");
        match self.bandwidth {
            BandwidthChoice::Auto => {
                let _ = writeln!(out, "bandwidth = auto");
            }
            BandwidthChoice::Fixed(h) => {
                let _ = writeln!(out, "bandwidth = {h}");
            }
        }
        if let Some(m) = self.block_count {
            let _ = writeln!(out, "block_count = {m}");
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed = {s}");
        }
        if let Some(p) = &self.input {
            let _ = writeln!(out, "input = {}", p.display());
        }
        if let Some(p) = &self.output {
            let _ = writeln!(out, "output = {}", p.display());
        }
        let _ = writeln!(out, "mean_fn = {}", self.mean_fn.as_str());
        let _ = writeln!(out, "process = {}", self.process.as_str());
        let _ = writeln!(out, "dist = {}", self.dist.as_str());
        let _ = writeln!(out, "contaminated = {}", self.contaminated);
        let _ = writeln!(out, "replications = {}", self.replications);
        let _ = writeln!(out, "full_grid = {}", self.full_grid);
        out
    }
}

fn parse_key<T: FromStr>(value: &str, line: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| CliError::Config {
        line,
        message: format!("bad {what} '{value}': {e}"),
    })
}

/// Parses a config file: one `key = value` per line, `#` starts a comment,
/// blank lines ignored, unknown keys rejected.
pub fn parse_file(path: &Path) -> Result<ConfigPatch> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ConfigPatch> {
    let mut patch = ConfigPatch::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Config { line, message: format!("expected key = value, got '{content}'") });
        };
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(CliError::Config { line, message: format!("key '{key}' has no value") });
        }
        match key {
            "n" => patch.n = Some(parse_key(value, line, "n")?),
            "alpha" => patch.alpha = Some(parse_key(value, line, "alpha")?),
            "schedule" => patch.schedule = Some(parse_key(value, line, "schedule")?),
            "weights" => patch.weights = Some(parse_key(value, line, "weights")?),
            "variant" => {
                patch.variant = Some(match value {
                    "full" => Variant::Full,
                    "partial" => Variant::Partial,
                    other => {
                        return Err(CliError::Config {
                            line,
                            message: format!("unknown variant '{other}', expected full or partial"),
                        })
                    }
                })
            }
            "bandwidth" => patch.bandwidth = Some(parse_key(value, line, "bandwidth")?),
            "block_count" => patch.block_count = Some(parse_key(value, line, "block_count")?),
            "seed" => patch.seed = Some(parse_key(value, line, "seed")?),
            "input" => patch.input = Some(PathBuf::from(value)),
            "output" => patch.output = Some(PathBuf::from(value)),
            "mean_fn" => patch.mean_fn = Some(parse_key(value, line, "mean_fn")?),
            "process" => patch.process = Some(parse_key(value, line, "process")?),
            "dist" => patch.dist = Some(parse_key(value, line, "dist")?),
            "contaminated" => patch.contaminated = parse_key(value, line, "contaminated")?,
            "replications" => patch.replications = Some(parse_key(value, line, "replications")?),
            "full_grid" => patch.full_grid = parse_key(value, line, "full_grid")?,
            other => {
                return Err(CliError::Config { line, message: format!("unknown key '{other}'") });
            }
        }
    }
    Ok(patch)
}
