//! Pairwise hinge-loss training of a feedforward candidate scorer.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use neural::{Activation, AdamConfig, AdamState, Checkpoint, Graph, Matrix, Mlp, MlpSpec, ParamStore};

use super::features::{FeatureEncoder, RankFeatures};
use super::similarity::Similarity;
use crate::error::{Error, Result};
use crate::metrics::sari;
use crate::structgen::{Candidate, CandidateSet};
use crate::text::{compression_ratio, TokenSeq};

/// `exp(-lambda |phi_v - phi_y|) * sim`.
pub fn length_penalized_score(lambda: f64, phi_v: f64, phi_y: f64, sim: f64) -> f64 {
    (-lambda * (phi_v - phi_y).abs()).exp() * sim
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoldScorerConfig {
    pub lambda: f64,
    /// Fixed target ratio; when absent the reference's own ratio to the source is used.
    pub target_cr: Option<f64>,
    pub similarity: Similarity,
}

impl Default for GoldScorerConfig {
    fn default() -> Self {
        Self { lambda: 1.0, target_cr: None, similarity: Similarity::SoftF1 }
    }
}

/// Gold score of a candidate against the reference.
pub fn gold_score(candidate: &Candidate, source: &TokenSeq, reference: &TokenSeq, cfg: &GoldScorerConfig) -> f64 {
    let phi_y = cfg.target_cr.unwrap_or_else(|| compression_ratio(reference, source));
    length_penalized_score(cfg.lambda, candidate.cr, phi_y, cfg.similarity.score(&candidate.tokens, reference))
}

/// Pair label: sign of the gold score difference.
pub fn pair_label(gold_i: f64, gold_j: f64) -> f64 {
    if gold_i > gold_j {
        1.0
    } else if gold_i < gold_j {
        -1.0
    } else {
        0.0
    }
}

/// `max(0, 1 - l d)` for one ordered pair.
pub fn pair_hinge(label: f64, diff: f64) -> f64 {
    (1.0 - label * diff).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub bins: usize,
    /// Candidates sampled per source and epoch.
    pub sample_size: usize,
    pub seed: u64,
    pub gold: GoldScorerConfig,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            dropout: 0.2,
            learning_rate: 0.01,
            epochs: 10,
            bins: 10,
            sample_size: 10,
            seed: 7,
            gold: GoldScorerConfig::default(),
        }
    }
}

/// A source, its candidates and their gold scores.
#[derive(Clone, Debug)]
pub struct RankingExample {
    pub source: TokenSeq,
    pub candidates: Vec<Candidate>,
    pub gold: Vec<f64>,
    pub reference: Option<TokenSeq>,
}

impl RankingExample {
    pub fn from_reference(cset: &CandidateSet, reference: &TokenSeq, cfg: &GoldScorerConfig) -> Self {
        let gold = cset.candidates().iter().map(|c| gold_score(c, &cset.source, reference, cfg)).collect();
        Self { source: cset.source.clone(), candidates: cset.candidates().to_vec(), gold, reference: Some(reference.clone()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankerLog {
    pub epoch: usize,
    pub loss: f64,
    pub dev_pairwise_accuracy: Option<f64>,
    pub dev_sari: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RankerModel {
    config: RankerConfig,
    encoder: FeatureEncoder,
    store: ParamStore,
    mlp: Mlp,
}

struct Prepared {
    features: Matrix,
    gold: Vec<f64>,
}

impl RankerModel {
    fn build(config: RankerConfig, encoder: FeatureEncoder) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new(config.seed);
        let spec = MlpSpec {
            input: encoder.dim(),
            hidden: config.hidden.clone(),
            output: 1,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Identity,
        };
        let mlp = Mlp::new(&mut store, &mut rng, "scorer", spec)?;
        Ok(Self { config, encoder, store, mlp })
    }

    pub fn config(&self) -> &RankerConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn feature_encoder(&self) -> &FeatureEncoder {
        &self.encoder
    }

    fn feature_matrix(&self, candidates: &[Candidate], source: &TokenSeq) -> Result<Matrix> {
        let dim = self.encoder.dim();
        let mut data = Vec::with_capacity(candidates.len() * dim);
        for c in candidates {
            data.extend(self.encoder.encode(&RankFeatures::extract(c, source)?));
        }
        Ok(Matrix::from_shape_vec((candidates.len(), dim), data).expect("rows of encoder dim"))
    }

    fn score_matrix(&self, x: Matrix) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.store);
        let xv = g.constant(x);
        let y = self.mlp.forward(&mut g, xv, 0.0)?;
        Ok(g.value(y).iter().copied().collect())
    }

    /// Scorer outputs g(v) for each candidate.
    pub fn score(&self, candidates: &[Candidate], source: &TokenSeq) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        self.score_matrix(self.feature_matrix(candidates, source)?)
    }

    /// Candidates in decreasing score order.
    pub fn rank(&self, candidates: &[Candidate], source: &TokenSeq) -> Result<Vec<Candidate>> {
        if candidates.is_empty() {
            return Err(Error::EmptyInput("candidate set".into()));
        }
        let scores = self.score(candidates, source)?;
        Ok(rank_by_scores(candidates, &scores).into_iter().map(|i| candidates[i].clone()).collect())
    }

    /// Fraction of strictly ordered gold pairs whose score difference has the right sign.
    pub fn pairwise_accuracy(&self, examples: &[RankingExample]) -> Result<f64> {
        let counts = examples
            .par_iter()
            .map(|ex| {
                let s = self.score(&ex.candidates, &ex.source)?;
                let (mut right, mut total) = (0usize, 0usize);
                for i in 0..s.len() {
                    for j in 0..s.len() {
                        if ex.gold[i] > ex.gold[j] {
                            total += 1;
                            right += usize::from(s[i] > s[j]);
                        }
                    }
                }
                Ok((right, total))
            })
            .collect::<Result<Vec<_>>>()?;
        let (right, total) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        Ok(if total == 0 { 0.0 } else { right as f64 / total as f64 })
    }

    /// Mean SARI of the top-ranked candidate over examples with references.
    pub fn top1_sari(&self, examples: &[RankingExample]) -> Result<Option<f64>> {
        let scores = examples
            .par_iter()
            .filter(|ex| ex.reference.is_some() && !ex.candidates.is_empty())
            .map(|ex| {
                let top = &self.rank(&ex.candidates, &ex.source)?[0];
                Ok(sari(&ex.source, &top.tokens, std::slice::from_ref(ex.reference.as_ref().expect("filtered")))?.sari)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64))
    }

    /// Trains on `train`; when `dev` is non-empty the epoch with the best dev
    /// pairwise accuracy is kept.
    pub fn train(train: &[RankingExample], dev: &[RankingExample], config: RankerConfig) -> Result<(Self, Vec<RankerLog>)> {
        if !train.iter().any(|ex| ex.candidates.len() >= 2) {
            return Err(Error::DegenerateTraining("no source has two or more candidates".into()));
        }
        if config.sample_size < 2 {
            return Err(Error::InvalidConfig("sample_size must be at least 2".into()));
        }
        let feats = train
            .iter()
            .flat_map(|ex| ex.candidates.iter().map(move |c| RankFeatures::extract(c, &ex.source)))
            .collect::<Result<Vec<_>>>()?;
        let encoder = FeatureEncoder::fit(&feats, config.bins)?;
        let mut model = Self::build(config, encoder)?;
        let prepared = train
            .iter()
            .filter(|ex| ex.candidates.len() >= 2)
            .map(|ex| Ok(Prepared { features: model.feature_matrix(&ex.candidates, &ex.source)?, gold: ex.gold.clone() }))
            .collect::<Result<Vec<_>>>()?;
        let cfg = model.config.clone();
        let mut adam = AdamState::new(AdamConfig::with_lr(cfg.learning_rate), &model.store);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa11ce);
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        let mut logs = Vec::new();
        let mut best: Option<(f64, ParamStore)> = None;
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for &k in &order {
                let ex = &prepared[k];
                let n = ex.gold.len();
                let picked = sample(&mut rng, n, cfg.sample_size.min(n)).into_vec();
                let x = ex.features.select(ndarray::Axis(0), &picked);
                let pairs = pair_matrix(&picked.iter().map(|&i| ex.gold[i]).collect::<Vec<_>>());
                let grads = {
                    let mut g = Graph::training(&model.store, rng_seed(&cfg, epoch, k));
                    let xv = g.constant(x);
                    let scores = model.mlp.forward(&mut g, xv, cfg.dropout)?;
                    let p = g.constant(pairs);
                    let margins = g.matmul(p, scores);
                    let loss = g.hinge_mean(margins);
                    total += g.scalar(loss);
                    g.backward(loss)
                };
                adam.step(&mut model.store, &grads)?;
            }
            let loss = total / prepared.len() as f64;
            let (acc, dev_sari) = if dev.is_empty() {
                (None, None)
            } else {
                (Some(model.pairwise_accuracy(dev)?), model.top1_sari(dev)?)
            };
            log::info!("ranker epoch {epoch}: loss {loss:.4} dev acc {acc:?}");
            if let Some(a) = acc {
                if best.as_ref().is_none_or(|(b, _)| a > *b) {
                    best = Some((a, model.store.clone()));
                }
            }
            logs.push(RankerLog { epoch, loss, dev_pairwise_accuracy: acc, dev_sari });
        }
        if let Some((_, store)) = best {
            model.store = store;
        }
        Ok((model, logs))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let spec = serde_json::json!({ "config": self.config, "encoder": self.encoder });
        Checkpoint::from_store("ranker", spec, &self.store, serde_json::json!({}))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let config: RankerConfig = serde_json::from_value(ckpt.model_spec["config"].clone())?;
        let encoder: FeatureEncoder = serde_json::from_value(ckpt.model_spec["encoder"].clone())?;
        let mut model = Self::build(config, encoder)?;
        ckpt.load_into(&mut model.store)?;
        Ok(model)
    }
}

fn rng_seed(cfg: &RankerConfig, epoch: usize, k: usize) -> u64 {
    cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add((epoch as u64) << 32 | k as u64)
}

/// Rows `l_ij (e_i - e_j)` for all ordered pairs i != j, so that multiplying by
/// the score column gives the signed margins `l_ij d_ij`. Tied pairs keep a
/// zero row and contribute a constant 1 to the mean hinge.
pub fn pair_matrix(gold: &[f64]) -> Matrix {
    let n = gold.len();
    let mut m = Matrix::zeros((n * (n - 1), n));
    let mut row = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let l = pair_label(gold[i], gold[j]);
            m[[row, i]] = l;
            m[[row, j]] = -l;
            row += 1;
        }
    }
    m
}

/// Indices sorted by descending score; ties go to fewer rule applications,
/// then to the earlier candidate.
pub fn rank_by_scores(candidates: &[Candidate], scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(candidates[a].rule_count().cmp(&candidates[b].rule_count()))
            .then(a.cmp(&b))
    });
    idx
}
