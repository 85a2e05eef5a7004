//! Run configuration: command-line flags override a JSON config file, which
//! overrides the `CE_SEED` and `CE_ALPHA` environment variables.

use std::path::Path;

use failex_core::simulator::StackingConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_json;

pub const ENV_SEED: &str = "CE_SEED";
pub const ENV_ALPHA: &str = "CE_ALPHA";

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.8;
pub const DEFAULT_FOLDS: usize = 10;

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub folds: Option<usize>,
    pub edge: Option<f64>,
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
    pub drop_range: Option<[f64; 2]>,
    pub colors_up: Option<Vec<String>>,
    pub colors_down: Option<Vec<String>>,
    pub sigma0: Option<f64>,
    pub height_gain: Option<f64>,
    pub stability: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p),
            None => Ok(ConfigFile::default()),
        }
    }

    /// Simulator settings from this file on top of the defaults. The seed is
    /// resolved separately.
    pub fn stacking(&self) -> StackingConfig {
        let mut cfg = StackingConfig::default();
        let pair = |r: [f64; 2]| (r[0], r[1]);
        if let Some(v) = self.edge {
            cfg.edge = v;
        }
        if let Some(v) = self.x_range {
            cfg.x_range = pair(v);
        }
        if let Some(v) = self.y_range {
            cfg.y_range = pair(v);
        }
        if let Some(v) = self.drop_range {
            cfg.drop_range = pair(v);
        }
        if let Some(v) = &self.colors_up {
            cfg.colors_up = v.clone();
        }
        if let Some(v) = &self.colors_down {
            cfg.colors_down = v.clone();
        }
        if let Some(v) = self.sigma0 {
            cfg.sigma0 = v;
        }
        if let Some(v) = self.height_gain {
            cfg.height_gain = v;
        }
        if let Some(v) = self.stability {
            cfg.stability = v;
        }
        cfg
    }
}

/// Source of environment values; a closure so tests need not touch the
/// process environment.
pub trait Env {
    fn var(&self, key: &str) -> Option<String>;
}

pub struct ProcessEnv;

impl Env for ProcessEnv {
    fn var(&self, key: &str) -> Option<String> {
        std::env::var(key).ok()
    }
}

impl<F: Fn(&str) -> Option<String>> Env for F {
    fn var(&self, key: &str) -> Option<String> {
        self(key)
    }
}

fn env_parsed<T: std::str::FromStr>(env: &dyn Env, key: &str) -> Result<Option<T>> {
    match env.var(key) {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::input(format!("{key}={s:?} is not a valid value"))),
    }
}

/// Seed from flag, then file, then `CE_SEED`.
pub fn resolve_seed(flag: Option<u64>, file: &ConfigFile, env: &dyn Env) -> Result<Option<u64>> {
    Ok(match flag.or(file.seed) {
        Some(s) => Some(s),
        None => env_parsed(env, ENV_SEED)?,
    })
}

/// Significance level from flag, then file, then `CE_ALPHA`, then 0.05.
pub fn resolve_alpha(flag: Option<f64>, file: &ConfigFile, env: &dyn Env) -> Result<f64> {
    let alpha = match flag.or(file.alpha) {
        Some(a) => a,
        None => env_parsed(env, ENV_ALPHA)?.unwrap_or(DEFAULT_ALPHA),
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(alpha)
}
