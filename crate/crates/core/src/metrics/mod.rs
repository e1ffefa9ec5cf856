//! Automatic evaluation metrics.

mod bleu;
mod readability;
mod report;
mod sari;

pub use bleu::{bleu, corpus_bleu, self_bleu, BleuStats};
pub use readability::{fk_from_counts, fk_grade};
pub use report::{corpus_report, format_table, EvalReport, EvalRow, COLUMNS};
pub use sari::{is_source_subsequence, sari, OrderScores, SariScore, MAX_ORDER};
