//! Copy-controlled paraphrase generation and the deletion-and-split model.

mod beam;
mod labels;
mod model;
mod vocab;

pub use beam::{has_repeated_trigram, DecodeConfig, Generation, SentenceConstraint};
pub use labels::{copied_word_fraction, copy_fraction, derive_copy_labels};
pub use model::{
    paper, vocab_for, CopyConstraint, EncodedStates, EpochLog, ModelKind, Paraphraser, ParaphraserConfig, TrainExample,
    DEFAULT_CP,
};
pub use vocab::{Vocab, BOS, EOS, UNK};
