//! Translation quality metrics and score reports.

mod bins;
mod chrf;
mod scores;
mod subset;

pub use bins::{bin_scores, equal_edges, write_bin_report, write_plot_csv, BinReport};
pub use chrf::{chrf, chrf_stats, corpus_chrf, ChrfParams, ChrfStats};
pub use scores::{ingest_external_scores, join_scores, ScoreRecord, ScoreSchema, ScoredBitext};
pub use subset::{cumulative_count, cumulative_subset, cumulative_subset_shuffled};
