//! Tooling for taking trained models to hardware: circuit export and import,
//! gate accounting, shot-noise inference, random baselines and persistence.

mod baseline;
pub mod persist;
mod qasm;
mod shots;
mod stats;

pub use baseline::{binomial_pmf, binomial_quantile_exact, random_baseline_quantile, BaselineQuantile};
pub use persist::{load_model, load_model_expect, save_model, LoaderArtifact, LoaderEntry, ModelArtifact};
pub use qasm::{export_qasm, import_qasm};
pub use shots::{shot_inference, DeviationReport, ShotInference};
pub use stats::{gate_stats, GateStats};
