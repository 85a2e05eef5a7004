//! Seeded generator of randomized cube-stacking trials.
//!
//! Causes are drawn uniformly; the outcome comes from a planar landing
//! model: the upper cube lands at the commanded offset plus Gaussian jitter
//! whose spread grows with drop height, and it stays on top when its center
//! lands within `stability * edge / 2` of the lower cube's center on both
//! axes. Colors are drawn but never read by the outcome.
//!
//! Row `i` of a dataset uses its own ChaCha stream derived from
//! `(seed, i)`, so rows can be produced in any order or in parallel.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::variable::{Dataset, Sample, Value, VariableSpec};

pub const X_OFF: &str = "xOff";
pub const Y_OFF: &str = "yOff";
pub const DROP_OFF: &str = "dropOff";
pub const COLOR_UP: &str = "colorUp";
pub const COLOR_DOWN: &str = "colorDown";
pub const ON_TOP: &str = "onTop";

/// Column order of generated datasets.
pub const COLUMNS: [&str; 6] = [X_OFF, Y_OFF, DROP_OFF, COLOR_UP, COLOR_DOWN, ON_TOP];

#[derive(Debug, Clone, PartialEq)]
pub struct StackingConfig {
    /// Cube edge length in meters.
    pub edge: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub drop_range: (f64, f64),
    pub colors_up: Vec<String>,
    pub colors_down: Vec<String>,
    /// Jitter standard deviation at zero drop height, meters.
    pub sigma0: f64,
    /// Extra jitter per meter of drop height.
    pub height_gain: f64,
    /// Fraction of the half edge the landing center may deviate.
    pub stability: f64,
    pub seed: u64,
}

impl Default for StackingConfig {
    fn default() -> Self {
        let colors: Vec<String> = ["Red", "Blue", "Green", "Orange"].iter().map(|c| c.to_string()).collect();
        StackingConfig {
            edge: 0.05,
            x_range: (-0.03, 0.03),
            y_range: (-0.03, 0.03),
            drop_range: (0.004, 0.1),
            colors_up: colors.clone(),
            colors_down: colors,
            sigma0: 0.004,
            height_gain: 0.08,
            stability: 0.9,
            seed: 0,
        }
    }
}

impl StackingConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.edge, self.sigma0, self.height_gain, self.stability]
            .iter()
            .chain([self.x_range, self.y_range, self.drop_range].iter().flat_map(|r| [&r.0, &r.1]))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite simulator parameter".into()));
        }
        if self.edge <= 0.0 || self.sigma0 < 0.0 || self.height_gain < 0.0 {
            return Err(Error::InvalidArgument("edge must be positive, sigma0 and height_gain non-negative".into()));
        }
        if !(self.stability > 0.0 && self.stability <= 1.0) {
            return Err(Error::InvalidArgument(format!("stability {} outside (0, 1]", self.stability)));
        }
        for (name, (lo, hi)) in [(X_OFF, self.x_range), (Y_OFF, self.y_range), (DROP_OFF, self.drop_range)] {
            if lo >= hi {
                return Err(Error::InvalidArgument(format!("degenerate range for {name}")));
            }
        }
        if self.drop_range.0 < 0.0 {
            return Err(Error::InvalidArgument("drop height must be non-negative".into()));
        }
        for (name, colors) in [(COLOR_UP, &self.colors_up), (COLOR_DOWN, &self.colors_down)] {
            VariableSpec::categorical(name, colors).validate()?;
        }
        Ok(())
    }

    /// Jitter standard deviation at drop height `h`.
    pub fn sigma(&self, h: f64) -> f64 {
        self.sigma0 + self.height_gain * h
    }

    /// Largest landing deviation per axis that keeps the cube on top.
    pub fn tolerance(&self) -> f64 {
        self.stability * self.edge / 2.0
    }

    /// Variable declarations for generated data, with the given bin counts
    /// for (xOff, yOff, dropOff).
    pub fn variables(&self, bins: [usize; 3]) -> Vec<VariableSpec> {
        vec![
            VariableSpec::continuous(X_OFF, self.x_range.0, self.x_range.1, bins[0]),
            VariableSpec::continuous(Y_OFF, self.y_range.0, self.y_range.1, bins[1]),
            VariableSpec::continuous(DROP_OFF, self.drop_range.0, self.drop_range.1, bins[2]),
            VariableSpec::categorical(COLOR_UP, &self.colors_up),
            VariableSpec::categorical(COLOR_DOWN, &self.colors_down),
            VariableSpec::outcome(ON_TOP, &["0", "1"]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackingTrial {
    pub x_off: f64,
    pub y_off: f64,
    pub drop_off: f64,
    pub color_up: usize,
    pub color_down: usize,
    pub on_top: bool,
}

impl StackingTrial {
    pub fn to_row(&self, cfg: &StackingConfig) -> Vec<Value> {
        vec![
            Value::Number(self.x_off),
            Value::Number(self.y_off),
            Value::Number(self.drop_off),
            Value::Label(cfg.colors_up[self.color_up].clone()),
            Value::Label(cfg.colors_down[self.color_down].clone()),
            Value::label(if self.on_top { "1" } else { "0" }),
        ]
    }

    pub fn to_sample(&self, cfg: &StackingConfig) -> Sample {
        let mut s = Sample::new();
        for (name, v) in COLUMNS.iter().zip(self.to_row(cfg)) {
            s.values.insert(name.to_string(), v);
        }
        s
    }
}

/// Random stream for row `index` of a dataset generated with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outcome of a drop with fixed causes.
pub fn simulate_outcome<R: Rng + ?Sized>(cfg: &StackingConfig, x_off: f64, y_off: f64, drop_off: f64, rng: &mut R) -> bool {
    let sigma = cfg.sigma(drop_off);
    let jx: f64 = rng.sample(StandardNormal);
    let jy: f64 = rng.sample(StandardNormal);
    let tol = cfg.tolerance();
    libm::fabs(x_off + sigma * jx) <= tol && libm::fabs(y_off + sigma * jy) <= tol
}

/// One randomized trial. Draw order: xOff, yOff, dropOff, colorUp,
/// colorDown, then the two jitters.
pub fn sample_trial<R: Rng + ?Sized>(cfg: &StackingConfig, rng: &mut R) -> StackingTrial {
    let x_off = rng.random_range(cfg.x_range.0..=cfg.x_range.1);
    let y_off = rng.random_range(cfg.y_range.0..=cfg.y_range.1);
    let drop_off = rng.random_range(cfg.drop_range.0..=cfg.drop_range.1);
    let color_up = rng.random_range(0..cfg.colors_up.len());
    let color_down = rng.random_range(0..cfg.colors_down.len());
    let on_top = simulate_outcome(cfg, x_off, y_off, drop_off, rng);
    StackingTrial { x_off, y_off, drop_off, color_up, color_down, on_top }
}

/// Trial `index` of the dataset seeded by `cfg.seed`.
pub fn trial_at(cfg: &StackingConfig, index: u64) -> StackingTrial {
    sample_trial(cfg, &mut trial_rng(cfg.seed, index))
}

/// `n` trials, sequentially. Bins only shape the declared variables.
pub fn generate_dataset(cfg: &StackingConfig, n: usize, bins: [usize; 3]) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut ds = Dataset::new(cfg.variables(bins))?;
    for i in 0..n {
        ds.push_row(trial_at(cfg, i as u64).to_row(cfg))?;
    }
    Ok(ds)
}
