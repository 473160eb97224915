//! Experiment harness around `vropt-core`: LIBSVM input, named datasets,
//! config files, measurement traces, CSV and SVG output.

pub mod check;
pub mod config;
pub mod error;
pub mod harness;
pub mod libsvm;
pub mod plot;
pub mod registry;
pub mod trace;

pub use config::{Algorithm, Budget, DatasetSource, ExperimentConfig};
pub use error::{Result, VroptError};
pub use harness::{run_experiment, run_with_problem, BoundReport, RunOutput};
pub use trace::TraceRecord;
