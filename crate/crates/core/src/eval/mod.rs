//! Ground truth, baselines and rand index evaluation.

mod baseline;
mod geo;
mod metrics;
mod plot;
mod sweep;

pub use baseline::{lloyd_kmeans, run_baseline, BaselineMethod};
pub use geo::{geo_ground_truth, location_truth_from_geo};
pub use metrics::{adjusted_rand_index, pair_counts, rand_index, PairCounts};
pub use plot::rand_index_svg;
pub use sweep::{score, sweep_k, write_rows, EvalReport, EvalRow, Method, SummaryRow, SweepConfig};
