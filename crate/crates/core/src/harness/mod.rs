//! End-to-end workflow: presets, shot stages, evaluation and benchmark circuits.

pub mod benchmarks;
pub mod config;
pub mod pipeline;
pub mod report;

pub use benchmarks::{generate_benchmark, Benchmark, BenchmarkKind};
pub use config::{AllocationMode, ParamOptimization, Preset, RunConfig};
pub use pipeline::{
    empirical_err, evaluate_variance, prepare, run_pipeline, run_prepared, run_repetitions,
    Prepared,
};
pub use report::{EvaluationReport, RunReport};
