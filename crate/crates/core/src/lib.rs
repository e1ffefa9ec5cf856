//! Controllable sentence simplification: rule-based split and deletion
//! candidates, a pairwise candidate ranker, a copy-controlled paraphraser and
//! the usual automatic metrics.

pub mod augment;
mod error;
pub mod metrics;
pub mod paraphraser;
pub mod pipeline;
pub mod ranker;
pub mod structgen;
pub mod text;

pub use error::{Error, Result};
pub use text::{compression_ratio, jaccard, ngrams, tokenize, GaussianBinner, NGramMultiset, TokenSeq};
