//! Scenario configuration, Monte Carlo runs, metrics and CSV export.

mod config;
mod export;
mod metrics;
mod run;
mod study;

pub use config::*;
pub use export::*;
pub use metrics::*;
pub use run::*;
pub use study::*;
