//! End-to-end orchestration: corpus preparation, training, controllable
//! simplification and file formats.

mod config;
mod control;
mod corpus;
pub mod io;
mod run;
mod train;

pub use config::{ParaphraserSection, PipelineConfig};
pub use control::{ControlConfig, Mode};
pub use corpus::{
    prepare_corpus, tokenize_corpus, AlignedRecord, CorpusPair, Partition, PrepStats, TokenizedPair, AUGMENTED, BLEU_MAX,
    BLEU_MIN, ORIGINAL,
};
pub use run::{simplify, simplify_corpus, Models, RunStats, Simplified};
pub use train::{
    augment_corpus, paraphrase_pairs, ranking_examples, train_delsplit, train_paraphraser, train_ranker,
};
