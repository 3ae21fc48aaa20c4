//! Scenario configuration.
//!
//! Files are flat TOML with one `angles.<symbol>` key per axis, in radians:
//!
//! ```toml
//! scenario = "v3-eacp"
//! seed = 7
//! pairs = 1000000
//! hypotheses = "WR, EACP, FWP"
//! model = "collapse-sequential"
//! angles.P = 0.0
//! angles.E = 2.356194490192345
//! angles.Eprime = -2.356194490192345
//! ```
//!
//! Values resolve in order: scenario defaults, then the file, then flags.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::fmt;
use std::path::{Path, PathBuf};

use bellbench::primitives::{Angle, AxisConfig, AxisSymbol};
use bellbench::realism::{CounterfactualModel, ReplayTable};
use bellbench::relativity::{HypothesisSet, SpacetimeEvent};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_PAIRS: usize = 1_000_000;
pub const OUT_DIR_ENV: &str = "BELLBENCH_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    V3Local,
    V4Chsh,
    V3Eacp,
    NoCorrelation,
    ObserverOrder,
    Polytope,
    LhvSweep,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::V3Local => "v3-local",
            ScenarioName::V4Chsh => "v4-chsh",
            ScenarioName::V3Eacp => "v3-eacp",
            ScenarioName::NoCorrelation => "no-correlation",
            ScenarioName::ObserverOrder => "observer-order",
            ScenarioName::Polytope => "polytope",
            ScenarioName::LhvSweep => "lhv-sweep",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <ScenarioName as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| CliError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Table => "txt",
        }
    }

    fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "txt" => Some(Format::Table),
            _ => None,
        }
    }
}

/// Where results go. `path: None` means stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Raw contents of a configuration file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    #[serde(alias = "n_pairs")]
    pub pairs: Option<usize>,
    pub model: Option<String>,
    pub hypotheses: Option<String>,
    #[serde(default)]
    pub angles: BTreeMap<String, f64>,
    pub grid_step: Option<f64>,
    /// Correlation target for `polytope`: three or four values.
    pub target: Option<Vec<f64>>,
    /// `events.E = [x, t]`, `events.P = [x, t]` for `observer-order`.
    #[serde(default)]
    pub events: BTreeMap<String, [f64; 2]>,
    pub sweep_seeds: Option<u64>,
    pub sweep_pairs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<ScenarioName>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub n_pairs: usize,
    pub angles: AxisConfig,
    /// The model as written in the configuration, echoed in outputs.
    pub model_spec: String,
    pub model: CounterfactualModel,
    pub hypotheses: HypothesisSet,
    pub grid_step: Option<f64>,
    pub target: Vec<f64>,
    pub events: (SpacetimeEvent, SpacetimeEvent),
    pub sweep_seeds: u64,
    pub sweep_pairs: usize,
    pub output: OutputSpec,
}

struct Defaults {
    angles: AxisConfig,
    hypotheses: HypothesisSet,
    model: &'static str,
    grid_step: Option<f64>,
}

fn defaults(s: ScenarioName) -> Defaults {
    let v3 = AxisConfig::v3(0.0, 3.0 * FRAC_PI_4, -3.0 * FRAC_PI_4);
    let v4 = AxisConfig::v4(FRAC_PI_4, 3.0 * FRAC_PI_4, FRAC_PI_2, 0.0);
    let (angles, hypotheses, model) = match s {
        ScenarioName::V3Local => (v3, HypothesisSet::local_realism(), "lhv-sign"),
        ScenarioName::V4Chsh => (v4, HypothesisSet::local_realism(), "lhv-sign"),
        ScenarioName::V3Eacp => (v3, HypothesisSet::eacp_free_will(), "collapse-sequential"),
        ScenarioName::NoCorrelation => (v3, HypothesisSet::eacp_free_will(), "lhv-sign"),
        ScenarioName::ObserverOrder | ScenarioName::Polytope => {
            (AxisConfig::new(), HypothesisSet::quantum_only(), "lhv-sign")
        }
        ScenarioName::LhvSweep => (AxisConfig::new(), HypothesisSet::local_realism(), "lhv-sign"),
    };
    Defaults {
        angles,
        hypotheses,
        model,
        grid_step: (s == ScenarioName::LhvSweep).then_some(PI / 90.0),
    }
}

fn parse_model(spec: &str) -> Result<CounterfactualModel, CliError> {
    match spec.trim().strip_prefix("replay:") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Ok(CounterfactualModel::FileReplay(ReplayTable::parse(&text)?))
        }
        None => CounterfactualModel::from_spec(spec).map_err(CliError::Config),
    }
}

fn parse_event(events: &BTreeMap<String, [f64; 2]>, key: &str, default: (f64, f64)) -> Result<SpacetimeEvent, CliError> {
    let [x, t] = events.get(key).copied().unwrap_or([default.0, default.1]);
    if !x.is_finite() || !t.is_finite() {
        return Err(CliError::Config(format!("events.{key} must be finite")));
    }
    Ok(SpacetimeEvent::new(x, t))
}

impl ScenarioConfig {
    /// Combines scenario defaults, an optional file and flag overrides.
    /// `out_dir` is the value of [`OUT_DIR_ENV`], if set.
    pub fn resolve(file: FileConfig, flags: Overrides, out_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let scenario = match (flags.scenario, &file.scenario) {
            (Some(s), _) => s,
            (None, Some(s)) => s.parse()?,
            (None, None) => return Err(CliError::Config("no scenario given".into())),
        };
        let d = defaults(scenario);

        let mut angles = d.angles;
        for (key, value) in &file.angles {
            let symbol: AxisSymbol = key
                .parse()
                .map_err(|_| CliError::Config(format!("unknown axis `angles.{key}`")))?;
            if !value.is_finite() {
                return Err(CliError::Config(format!("angles.{key} must be finite")));
            }
            angles.set(symbol, Angle::new(*value));
        }

        let hypotheses = match &file.hypotheses {
            Some(h) => h.parse().map_err(CliError::Config)?,
            None => d.hypotheses,
        };

        let model_spec = file.model.clone().unwrap_or_else(|| d.model.to_string());
        let model = parse_model(&model_spec)?;

        let n_pairs = flags.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS);
        if n_pairs == 0 {
            return Err(CliError::Config("pairs must be at least 1".into()));
        }

        let grid_step = flags.grid_step.or(file.grid_step).or(d.grid_step);
        if let Some(step) = grid_step {
            if !(step.is_finite() && step > 0.0 && step <= PI) {
                return Err(CliError::Config(format!("grid step {step} must lie in (0, π]")));
            }
        }

        let target = file.target.clone().unwrap_or_else(|| vec![SQRT_2 / 2.0, 0.0, SQRT_2 / 2.0]);

        let events = (
            parse_event(&file.events, "E", (-1.0, 0.0))?,
            parse_event(&file.events, "P", (1.0, 0.0))?,
        );
        if let Some(key) = file.events.keys().find(|k| *k != "E" && *k != "P") {
            return Err(CliError::Config(format!("unknown event `events.{key}`")));
        }

        let sweep_seeds = file.sweep_seeds.unwrap_or(10);
        let sweep_pairs = file.sweep_pairs.unwrap_or(10_000);
        if sweep_seeds == 0 || sweep_pairs == 0 {
            return Err(CliError::Config("sweep_seeds and sweep_pairs must be at least 1".into()));
        }

        let path = flags.out.or(file.out);
        let format = flags.format.or(file.format);
        let output = match (path, out_dir) {
            (Some(p), _) => OutputSpec {
                format: format.or_else(|| Format::from_path(&p)).unwrap_or(Format::Csv),
                path: Some(p),
            },
            (None, Some(dir)) => {
                let format = format.unwrap_or(Format::Csv);
                OutputSpec {
                    path: Some(dir.join(format!("{scenario}.{}", format.extension()))),
                    format,
                }
            }
            (None, None) => OutputSpec {
                path: None,
                format: format.unwrap_or(Format::Table),
            },
        };

        Ok(ScenarioConfig {
            scenario,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            n_pairs,
            angles,
            model_spec,
            model,
            hypotheses,
            grid_step,
            target,
            events,
            sweep_seeds,
            sweep_pairs,
            output,
        })
    }

    /// Defaults for `scenario` with no file and no flags.
    pub fn for_scenario(scenario: ScenarioName) -> Self {
        let flags = Overrides {
            scenario: Some(scenario),
            ..Overrides::default()
        };
        Self::resolve(FileConfig::default(), flags, None).expect("built-in defaults are valid")
    }
}
