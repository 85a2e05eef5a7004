//! File formats, parallel simulation and the command-line pipeline for
//! [`failex_core`]: simulate trials, learn a network, explain failures and
//! evaluate models.

pub mod config;
pub mod error;
pub mod explanation;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
pub use model::{FitInfo, Model};
