//! Sweeps, result tables, plots and comparison reports.

pub mod plot;
pub mod report;
pub mod results;
pub mod sweep;

pub use plot::{render_plots, render_svg, Metric};
pub use report::{compare_report, Check, Report, Thresholds, Verdict};
pub use results::{ResultRow, RowSink, Source};
pub use sweep::{run_sweep, standard_vehicle_counts, CaseSpec, SweepSpec, STANDARD_CASES};
