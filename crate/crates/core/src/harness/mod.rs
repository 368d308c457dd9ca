//! Experiment configuration, execution, verdicts and report files.

pub mod bundles;
pub mod config;
pub mod diag;
pub mod report;
pub mod run;
pub mod verdict;

pub use bundles::bundle;
pub use config::{ExperimentConfig, Target, XRule};
pub use report::{write_report, Format, CSV_HEADER};
pub use run::{asymptotic_table, run, Report, RatioRow, Summary};
pub use verdict::{convergence_verdict, Verdict};
