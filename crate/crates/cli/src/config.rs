//! Run configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use carnot_verif::group::GroupDescriptor;
use carnot_verif::keller_osserman::KVariant;
use carnot_verif::oracle::GrowthKind;
use carnot_verif::profile::ProfileDescriptor;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A grid axis: one value, an explicit list, or `start..=stop` by `step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Axis::Value(v) => Ok(vec![*v]),
            Axis::List(v) if v.is_empty() => Err(CliError::Usage("empty axis list".into())),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::Usage(format!(
                        "bad range start={start} stop={stop} step={step}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    #[default]
    Main,
    Main2,
    Prop31,
    MeanCurvature,
    Maximum,
    Literature,
    All,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(default)]
    pub theorem: Theorem,
    pub p: Axis,
    pub chi: Axis,
    pub mu: Axis,
    #[serde(default)]
    pub omega: Option<Axis>,
    #[serde(default)]
    pub sigma: Option<Axis>,
    #[serde(default = "default_q")]
    pub q: u32,
    #[serde(default)]
    pub growth: GrowthKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub l_at_zero_positive: bool,
    #[serde(default)]
    pub symmetric: bool,
}

fn default_q() -> u32 {
    3
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KoFamily {
    /// `φ = t^{p−1}`, `l = t^a`, `f = t^ω`
    #[default]
    Power,
    /// `φ` mean curvature, `l = t^χ/(1+t)`, `f = t^ω`
    MeanCurvature,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoConfig {
    #[serde(default)]
    pub family: KoFamily,
    #[serde(default = "default_p_axis")]
    pub p: Axis,
    #[serde(default = "zero_axis")]
    pub a: Axis,
    #[serde(default = "zero_axis")]
    pub chi: Axis,
    #[serde(default = "zero_axis")]
    pub mu: Axis,
    pub omega: Axis,
    #[serde(default)]
    pub variant: KVariant,
}

fn default_p_axis() -> Axis {
    Axis::Value(2.0)
}

fn zero_axis() -> Axis {
    Axis::Value(0.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    Basamento,
    #[default]
    Sharpness,
    Counterexample,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    #[serde(default)]
    pub mode: WitnessMode,
    #[serde(default)]
    pub case: Option<u8>,
    #[serde(default = "zero_axis")]
    pub chi: Axis,
    #[serde(default = "zero_axis")]
    pub mu: Axis,
    #[serde(default)]
    pub omega: Option<Axis>,
    /// Defaults: `σ*` for sharpness, the case default for counterexamples.
    #[serde(default)]
    pub sigma: Option<Axis>,
    #[serde(default = "default_q")]
    pub q: u32,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PasteConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_r_glue")]
    pub r_glue: f64,
    #[serde(default = "default_bumps")]
    pub n_bumps: usize,
    #[serde(default = "default_straddle")]
    pub n_straddle: usize,
    #[serde(default = "default_rho_min")]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    /// `"<inner|outer> > <level>"`, level a number or `k gamma`.
    #[serde(default = "default_mask")]
    pub mask: String,
}

impl Default for PasteConfig {
    fn default() -> Self {
        PasteConfig {
            nodes: default_nodes(),
            r_glue: default_r_glue(),
            n_bumps: default_bumps(),
            n_straddle: default_straddle(),
            rho_min: default_rho_min(),
            rho_max: default_rho_max(),
            mask: default_mask(),
        }
    }
}

fn default_nodes() -> usize {
    128
}
fn default_r_glue() -> f64 {
    0.6
}
fn default_bumps() -> usize {
    50
}
fn default_straddle() -> usize {
    10
}
fn default_rho_min() -> f64 {
    0.15
}
fn default_rho_max() -> f64 {
    0.4
}
fn default_mask() -> String {
    "inner > 2gamma".into()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    #[default]
    Classify,
    Ko,
    Witness,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Full Cartesian product of the axes.
    #[default]
    Grid,
    /// Uniform draws from the bounding box of the axes.
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub target: SweepTarget,
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    BrokenDilation,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfcheckConfig {
    #[serde(default)]
    pub n_triples: Option<usize>,
    #[serde(default)]
    pub volume_samples: Option<usize>,
    #[serde(default)]
    pub fault: Option<Fault>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_rows")]
    pub max_rows: usize,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: default_max_rows(),
            checkpoint_every: default_checkpoint(),
        }
    }
}

fn default_max_rows() -> usize {
    1_000_000
}
fn default_checkpoint() -> usize {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_delta_band")]
    pub ko_delta_band: f64,
    #[serde(default = "default_t1")]
    pub ko_t1: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ko_delta_band: default_delta_band(),
            ko_t1: default_t1(),
        }
    }
}

fn default_delta_band() -> f64 {
    0.05
}
fn default_t1() -> f64 {
    1e8
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub group: Option<GroupDescriptor>,
    #[serde(default)]
    pub profile: Option<ProfileDescriptor>,
    #[serde(default)]
    pub classify: Option<ClassifyConfig>,
    #[serde(default)]
    pub ko: Option<KoConfig>,
    #[serde(default)]
    pub witness: Option<WitnessConfig>,
    #[serde(default)]
    pub paste: Option<PasteConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub selfcheck: Option<SelfcheckConfig>,
}

impl RunConfig {
    /// JSON when the file is `.json` or starts with `{`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let cfg: RunConfig = if json {
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.ko_delta_band > 0.0) || !(t.ko_t1 > 0.0) {
            return Err(CliError::Usage("tolerances must be > 0".into()));
        }
        if self.limits.max_rows == 0 || self.limits.checkpoint_every == 0 {
            return Err(CliError::Usage("max_rows and checkpoint_every must be > 0".into()));
        }
        Ok(())
    }
}
