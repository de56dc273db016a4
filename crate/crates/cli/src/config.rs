//! Experiment configuration: JSON schema, flag parsing, and the
//! defaults/file/flags merge.
//!
//! A run is fully described by one [`ExperimentConfig`]; the resolved value
//! is embedded verbatim (as JSON) in every output file's header comment, and
//! re-parsing that header reproduces the configuration.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use doubling_core::cocycle::EnergyGrid;
use doubling_core::potential::{PotentialSpec, SamplingFunction};
use doubling_core::symbolic::{DigitSequence, ENCODE_CYCLE_CAP};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Lyapunov,
    Bands,
    Spectrum,
    Localize,
    Verify,
    FloatDemo,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Lyapunov => "lyapunov",
            CommandKind::Bands => "bands",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Localize => "localize",
            CommandKind::Verify => "verify",
            CommandKind::FloatDemo => "float-demo",
        }
    }
}

/// Sampling function as configured: `cosine`, `step:c`, `table:path`,
/// `table` with inline values, or `const:v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingFunctionSpec {
    Cosine,
    Step {
        threshold: f64,
    },
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    Const {
        value: f64,
    },
}

impl SamplingFunctionSpec {
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if s == "cosine" {
            return Ok(SamplingFunctionSpec::Cosine);
        }
        if let Some(rest) = s.strip_prefix("step:") {
            let threshold: f64 = rest.parse().map_err(|_| format!("bad step threshold {rest:?}"))?;
            return Ok(SamplingFunctionSpec::Step { threshold });
        }
        if let Some(rest) = s.strip_prefix("table:") {
            return Ok(SamplingFunctionSpec::Table {
                values: None,
                path: Some(PathBuf::from(rest)),
            });
        }
        if let Some(rest) = s.strip_prefix("const:") {
            let value: f64 = rest.parse().map_err(|_| format!("bad constant value {rest:?}"))?;
            return Ok(SamplingFunctionSpec::Const { value });
        }
        Err(format!(
            "unknown sampling function {s:?}; expected cosine | step:c | table:path | const:v"
        ))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplingFunctionSpec::Cosine => "cosine",
            SamplingFunctionSpec::Step { .. } => "step",
            SamplingFunctionSpec::Table { .. } => "table",
            SamplingFunctionSpec::Const { .. } => "const",
        }
    }

    pub fn to_core(&self) -> Result<SamplingFunction, CliError> {
        match self {
            SamplingFunctionSpec::Cosine => Ok(SamplingFunction::cosine()),
            SamplingFunctionSpec::Step { threshold } => Ok(SamplingFunction::step(*threshold)?),
            SamplingFunctionSpec::Const { value } => Ok(SamplingFunction::constant(*value)),
            SamplingFunctionSpec::Table { values, path } => match (values, path) {
                (Some(vals), None) => Ok(SamplingFunction::table(vals.clone())?),
                (None, Some(p)) => {
                    let text = fs::read_to_string(p).map_err(|e| {
                        CliError::Validation(format!("cannot read table {}: {e}", p.display()))
                    })?;
                    let vals: Vec<f64> = text
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(|l| {
                            l.parse::<f64>().map_err(|_| {
                                CliError::Validation(format!("bad table entry {l:?}"))
                            })
                        })
                        .collect::<Result<_, _>>()?;
                    Ok(SamplingFunction::table(vals)?)
                }
                (Some(_), Some(_)) => Err(CliError::Validation(
                    "table takes either inline values or a path, not both".into(),
                )),
                (None, None) => Err(CliError::Validation(
                    "table needs inline values or a path".into(),
                )),
            },
        }
    }
}

/// Digit stream selecting θ: a seeded Bernoulli stream, an encoded rational,
/// or explicit prefix/cycle digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Seeded {
        seed: u64,
    },
    Rational {
        p: u64,
        q: u64,
    },
    Digits {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        prefix: Vec<u32>,
        cycle: Vec<u32>,
    },
}

fn parse_digit_run(s: &str) -> Result<Vec<u32>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(',') {
        s.split(',')
            .map(|d| d.trim().parse::<u32>().map_err(|_| format!("bad digit {d:?}")))
            .collect()
    } else {
        s.chars()
            .map(|c| c.to_digit(10).ok_or_else(|| format!("bad digit {c:?}")))
            .collect()
    }
}

impl ThetaSpec {
    /// `seed:123` | `rational:p/q` | `digits:[prefix;]cycle` where a digit
    /// run is either bare digits (`0110`) or comma-separated (`0,1,1,0`).
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("seed:") {
            let seed: u64 = rest.parse().map_err(|_| format!("bad seed {rest:?}"))?;
            return Ok(ThetaSpec::Seeded { seed });
        }
        if let Some(rest) = s.strip_prefix("rational:") {
            let (p, q) = rest
                .split_once('/')
                .ok_or_else(|| format!("expected p/q, got {rest:?}"))?;
            let p: u64 = p.parse().map_err(|_| format!("bad numerator {p:?}"))?;
            let q: u64 = q.parse().map_err(|_| format!("bad denominator {q:?}"))?;
            return Ok(ThetaSpec::Rational { p, q });
        }
        if let Some(rest) = s.strip_prefix("digits:") {
            let (prefix, cycle) = match rest.split_once(';') {
                Some((pre, cyc)) => (parse_digit_run(pre)?, parse_digit_run(cyc)?),
                None => (Vec::new(), parse_digit_run(rest)?),
            };
            if cycle.is_empty() {
                return Err("digit cycle must be non-empty".into());
            }
            return Ok(ThetaSpec::Digits { prefix, cycle });
        }
        Err(format!(
            "unknown theta {s:?}; expected seed:<u64> | rational:p/q | digits:[prefix;]cycle"
        ))
    }

    pub fn to_halfline(&self, base: u32) -> Result<DigitSequence, CliError> {
        match self {
            ThetaSpec::Seeded { seed } => Ok(DigitSequence::seeded(base, *seed)?),
            ThetaSpec::Rational { p, q } => {
                Ok(DigitSequence::encode(*p, *q, base, ENCODE_CYCLE_CAP)?)
            }
            ThetaSpec::Digits { prefix, cycle } => {
                Ok(DigitSequence::periodic(base, prefix.clone(), cycle.clone())?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    /// `lo:hi:count`
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:count, got {s:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| format!("bad lo {:?}", parts[0]))?;
        let hi: f64 = parts[1].parse().map_err(|_| format!("bad hi {:?}", parts[1]))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| format!("bad count {:?}", parts[2]))?;
        Ok(GridSpec { lo, hi, count })
    }

    pub fn to_core(&self) -> Result<EnergyGrid, CliError> {
        Ok(EnergyGrid::new(self.lo, self.hi, self.count)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully resolved run description; embedded in every output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub lambda: f64,
    pub f: SamplingFunctionSpec,
    pub base: u32,
    pub theta: ThetaSpec,
    pub grid: GridSpec,
    pub n_steps: u64,
    pub n_samples: u32,
    pub box_size: usize,
    pub alpha: f64,
    pub seed: u64,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn potential_spec(&self) -> Result<PotentialSpec, CliError> {
        Ok(PotentialSpec::new(self.lambda, self.f.to_core()?, self.base)?)
    }

    pub fn provenance_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Partial configuration as read from a JSON file; every field optional,
/// unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    pub lambda: Option<f64>,
    pub f: Option<SamplingFunctionSpec>,
    pub base: Option<u32>,
    pub theta: Option<ThetaSpec>,
    pub grid: Option<GridSpec>,
    pub n_steps: Option<u64>,
    pub n_samples: Option<u32>,
    pub box_size: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag-level overrides, already parsed. Merged on top of file values and
/// defaults (flags win).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub f: Option<SamplingFunctionSpec>,
    pub base: Option<u32>,
    pub theta: Option<ThetaSpec>,
    pub grid: Option<GridSpec>,
    pub n_steps: Option<u64>,
    pub n_samples: Option<u32>,
    pub box_size: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// Defaults ← file ← flags, then derived defaults (grid from the spectral
/// enclosure when untouched) and validation of the numeric ranges the
/// target modules insist on.
pub fn resolve(
    command: CommandKind,
    file: FileConfig,
    flags: Overrides,
) -> Result<ExperimentConfig, CliError> {
    let lambda = flags.lambda.or(file.lambda).unwrap_or(1.0);
    let f = flags
        .f
        .or(file.f)
        .unwrap_or(SamplingFunctionSpec::Cosine);
    let base = flags.base.or(file.base).unwrap_or(2);
    let seed = flags.seed.or(file.seed).unwrap_or(1);
    let theta = flags
        .theta
        .or(file.theta)
        .unwrap_or(ThetaSpec::Seeded { seed });

    let config = ExperimentConfig {
        command,
        lambda,
        base,
        theta,
        grid: GridSpec {
            lo: 0.0,
            hi: 0.0,
            count: 0,
        }, // placeholder, fixed below
        n_steps: flags.n_steps.or(file.n_steps).unwrap_or(100_000),
        n_samples: flags.n_samples.or(file.n_samples).unwrap_or(16),
        box_size: flags.box_size.or(file.box_size).unwrap_or(1000),
        alpha: flags.alpha.or(file.alpha).unwrap_or(0.0),
        seed,
        threads: flags.threads.or(file.threads).unwrap_or(0),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format).unwrap_or(OutputFormat::Csv),
        f,
    };

    let grid = match flags.grid.or(file.grid) {
        Some(g) => g,
        None => {
            // Default grid: 101 points over the spectral enclosure.
            let spec = config.potential_spec()?;
            let (lo, hi) = spec.enclosure();
            GridSpec { lo, hi, count: 101 }
        }
    };
    let config = ExperimentConfig { grid, ..config };

    // Surface parameter problems now, not mid-run.
    config.potential_spec()?;
    config.grid.to_core()?;
    if config.box_size < 1 {
        return Err(CliError::Validation("N must be ≥ 1".into()));
    }
    Ok(config)
}
