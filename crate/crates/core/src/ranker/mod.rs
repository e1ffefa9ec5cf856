//! Candidate ranking: gold scores, features and the pairwise-trained scorer.

mod features;
mod model;
mod similarity;

pub use features::{FeatureEncoder, RankFeatures, NUM_REALS};
pub use model::{
    gold_score, length_penalized_score, pair_hinge, pair_label, pair_matrix, rank_by_scores, GoldScorerConfig,
    RankerConfig, RankerLog, RankerModel, RankingExample,
};
pub use similarity::{lemma, Similarity};
