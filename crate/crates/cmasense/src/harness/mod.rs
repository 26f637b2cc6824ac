//! Experiment orchestration: configuration, the shared-frontend pipeline,
//! sweep execution, capture ingestion, and result emission.

mod config;
mod ingest;
mod pipeline;
mod report;
mod run;

pub use config::{
    load_with_overrides, split_override_args, CaptureFormat, CaptureSection, EqSection,
    ExperimentConfig, OutputSection, PsdSection,
};
pub use ingest::{export_frame, ingest_frame};
pub use pipeline::{
    acquire_frame, frame_checksum, rmse_vs_reference, run_frontend, run_variant,
    sensing_analysis, FrontEndOutput, SensingOutput, VariantOutput,
};
pub use report::cmd_report;
pub use run::{
    cmd_simulate, cmd_sweep, execute_run, print_report, AggregateRow, RunReport, SweepReport,
    VariantMetrics, VariantRecord,
};
