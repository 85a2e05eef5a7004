//! Parallel dataset generation. Every row has its own random stream, so the
//! result is identical to the sequential generator for the same seed.

use failex_core::simulator::{trial_at, StackingConfig};
use failex_core::{Dataset, Error as CoreError};
use rayon::prelude::*;

use crate::error::Result;

pub fn generate_parallel(cfg: &StackingConfig, n: usize, bins: [usize; 3]) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(CoreError::InvalidArgument("sample count must be at least 1".into()).into());
    }
    let rows: Vec<_> = (0..n as u64).into_par_iter().map(|i| trial_at(cfg, i).to_row(cfg)).collect();
    let mut ds = Dataset::new(cfg.variables(bins))?;
    for row in rows {
        ds.push_row(row)?;
    }
    Ok(ds)
}
