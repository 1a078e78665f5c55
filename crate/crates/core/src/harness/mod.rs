//! Batch experiments: sampled parameter combinations, warm-up windows,
//! competitive-ratio statistics, ψ studies and report output.

mod batch;
mod exec;
mod presets;
mod psi;
mod report;

pub use batch::{
    mean_std, ratio, run_protocol, summarize, BatchConfig, BatchRecord, Combination, ParamSpace, PolicyOutcome,
    RepMode, Scenario, SummaryLine,
};
pub use exec::{map_indexed, Exec};
pub use presets::{scenario_presets, PRESET_NAMES};
pub use psi::{psi_stat, psi_stat_window, psi_study, PsiCell, PsiGrouping, PsiRow, PsiStat, PsiStudy, PsiStudyConfig};
pub use report::{csv_header, emit_csv, fmt_g, scatter_svg, write_csv, write_psi_csv, write_runlog};
