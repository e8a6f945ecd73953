//! Library side of the `cwdist` binary.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage, configuration or
//! I/O error.

pub mod commands;
pub mod error;
pub mod report;

pub use commands::{
    bench_ratios, cmd_bench, cmd_dist, cmd_normality, cmd_oracle_validate, cmd_train,
    load_dataset, BenchOptions, BenchRow, DistOptions, OracleOptions, TrainJob,
    BENCH_RATIO_RANGE, ORACLE_Z_LIMIT,
};
pub use error::CliError;
pub use report::{RunReport, Status};
