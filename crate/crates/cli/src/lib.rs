//! Benchmark harness for the `fullpack` GEMV kernels: parameter sweeps,
//! layer scenarios, randomised verification and CSV reports.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;
pub mod verify;

pub use config::{parse_kernels, parse_sizes, LayerKind, LayerScenario, LayerSpec, SweepConfig};
pub use error::{HarnessError, Result};
pub use harness::{run_scenario, run_sweep, Case, Runner};
pub use report::{emit_csv, BenchReport, BenchRow, CSV_HEADER};
pub use verify::{run_verify, VerifySummary};
