//! Configuration, presets and batch sweeps over `(N, v_max, t)`.

mod config;
mod preset;
mod sweep;

pub use config::{load_config, ExperimentConfig, DEFAULT_ALPHA, DEFAULT_BOUNDS, DEFAULT_P_MAX, DEFAULT_T};
pub use preset::{preset_paper_example, preset_paper_example_with_phases, Preset, PAPER_EXAMPLE_MODES};
pub use sweep::{
    compare_dirs, extrapolation_verdict, locate_flip, oracle_check_dir, read_record, run_dir_name, run_sweep,
    Extrapolation, FlipBracket, OracleCheck, PointReport, RunRecord, SummaryRow, SweepReport, Timings,
    REPORT_FILE, SUMMARY_FILE, TABLE_FILE, TRACES_FILE, VERDICT_FILE, VERSION,
};
