//! JSON configuration file and flag precedence.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use dicke_battery::model::{ModelConfig, ModelParams};

use crate::args::{BranchArg, Format, GlobalArgs, ModeArg, SystemArg};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Partial model parameters; missing entries fall back to the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub omega: Option<f64>,
    pub omega0: Option<f64>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl From<OneOrMany> for Vec<f64> {
    fn from(v: OneOrMany) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

/// Options of any subcommand; each one reads the keys it understands.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub k: Option<OneOrMany>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub system: Option<SystemArg>,
    pub init: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub branch: Option<BranchArg>,
    pub samples: Option<usize>,
    pub compare: Option<bool>,
    pub n_values: Option<Vec<u64>>,
    pub mode: Option<ModeArg>,
    pub perturb_omega: Option<f64>,
}

pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Model parameters: flags, then the config file, then
/// `omega = omega0 = 1, lambda = 0.5, epsilon = -1, N = 100`.
pub fn model(global: &GlobalArgs, file: &ModelSection) -> Result<ModelParams> {
    let c = ModelConfig {
        omega: global.omega.or(file.omega).unwrap_or(1.0),
        omega0: global.omega0.or(file.omega0).unwrap_or(1.0),
        lambda: global.lambda.or(file.lambda).unwrap_or(0.5),
        epsilon: global.epsilon.or(file.epsilon).unwrap_or(-1.0),
        n: global.n.or(file.n).unwrap_or(100),
    };
    Ok(ModelParams::try_from(c)?)
}

pub fn moduli(global: &GlobalArgs, run: &RunSection) -> Option<Vec<f64>> {
    global.k.clone().or_else(|| run.k.clone().map(Into::into))
}

pub fn tol(global: &GlobalArgs, run: &RunSection) -> Result<f64> {
    let tol = global.tol.or(run.tol).unwrap_or(1e-10);
    if !(1e-13..=1e-3).contains(&tol) {
        bail!("--tol must lie in [1e-13, 1e-3], got {tol}");
    }
    Ok(tol)
}

/// Fails unless `path` can be created or overwritten.
pub fn check_writable(path: &Path) -> Result<()> {
    if path.is_dir() {
        bail!("output path {} is a directory", path.display());
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("output directory {} does not exist", parent.display());
    }
    if path.exists() && fs::metadata(path)?.permissions().readonly() {
        bail!("output file {} is read-only", path.display());
    }
    Ok(())
}
