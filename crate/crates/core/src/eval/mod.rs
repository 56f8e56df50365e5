//! Evaluation: MPJPE and Procrustes-aligned MPJPE, per-method reports,
//! sample-count ablation curves, candidate diversity and SVG charts.

mod ablation;
mod diversity;
mod metrics;
pub mod plot;
mod report;

pub use ablation::{ablation_curve, estimate, pose_error, AblationCurve, AblationItem, ScoringConfig};
pub use diversity::{diversity_stats, DiversityStats};
pub use metrics::{mpjpe, pa_mpjpe, procrustes_align, procrustes_transform, Similarity};
pub use report::{format_table, write_reports_csv, EvalReport, ItemError, Method, Metric};
