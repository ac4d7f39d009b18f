//! Run configuration, stage orchestration, JSONL logging and SVG plots.

pub mod config;
pub mod log;
pub mod plot;
pub mod run;

pub use config::{EvalConfig, Overrides, Paths, Robot, RunConfig, RunStage, TerrainConfig};
pub use log::{read_log, RunLog};
pub use plot::{build_charts, emit_plots, Chart, PlotFile, Series};
pub use run::{
    evaluate_stage1, run_distill, run_eval, run_inspect, run_plot, run_record, run_stage1, run_stage2, sine_command, stage1_env_config,
    stage1_policy, stage2_env_config, stage2_policy, RunReport, SeedOutcome, Stage1Eval, Stage1Policy, Stage2Policy, TrackingError,
    FINAL_WINDOW, STAGE1_EVAL_STEPS,
};
