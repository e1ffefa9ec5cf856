//! Transformer encoder-decoder with an encoder-side copy gate.
//!
//! With copy control, a binned copy ratio is projected to the model dimension
//! and prepended as position 0. Each token state `h_i` is scored by the copy
//! network to give `p_i`, and the decoder attends over `h_i + p_i * u`. The cp
//! slot itself is not gated.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use neural::{
    init, Activation, AdamConfig, AdamState, Checkpoint, Decoder, Embedding, Encoder, Gradients, Graph, Linear,
    Matrix, Mlp, MlpSpec, ParamId, ParamStore, TransformerConfig, Var,
};

use super::labels::{copy_fraction, derive_copy_labels};
use super::vocab::{Vocab, BOS, EOS};
use crate::error::{Error, Result};
use crate::text::{GaussianBinner, TokenSeq};

/// Paper-scale settings, kept for reference; defaults are desk-scale.
pub mod paper {
    pub const LEARNING_RATE: f64 = 1e-4;
    pub const WARMUP_STEPS: u64 = 40_000;
    pub const TOTAL_STEPS: u64 = 100_000;
    pub const BATCH_SIZE: usize = 64;
    pub const COPY_HIDDEN: [usize; 3] = [1000, 1000, 1000];
    pub const BEAM_WIDTH: usize = 10;
}

pub const DEFAULT_CP: f64 = 0.7;

/// Target fraction of input words to copy, in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CopyConstraint(f64);

impl CopyConstraint {
    pub fn new(cp: f64) -> Result<Self> {
        if cp > 0.0 && cp <= 1.0 {
            Ok(Self(cp))
        } else {
            Err(Error::InvalidConfig(format!("copy ratio {cp} outside (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for CopyConstraint {
    fn default() -> Self {
        Self(DEFAULT_CP)
    }
}

impl TryFrom<f64> for CopyConstraint {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CopyConstraint> for f64 {
    fn from(c: CopyConstraint) -> f64 {
        c.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Copy-controlled paraphraser.
    Paraphraser,
    /// Same architecture without the copy network and cp slot.
    DelSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParaphraserConfig {
    pub transformer: TransformerConfig,
    pub copy_hidden: Vec<usize>,
    pub cp_bins: usize,
    pub copy_weight: f64,
    pub learning_rate: f64,
    pub warmup_steps: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_clip: f64,
    pub min_count: usize,
    pub seed: u64,
    /// Dev rows decoded per epoch for checkpoint selection.
    pub dev_limit: usize,
}

impl Default for ParaphraserConfig {
    fn default() -> Self {
        Self {
            transformer: TransformerConfig::default(),
            copy_hidden: vec![64, 64, 64],
            cp_bins: 10,
            copy_weight: 1.0,
            learning_rate: 1e-3,
            warmup_steps: 200,
            epochs: 10,
            batch_size: 16,
            grad_clip: 1.0,
            min_count: 1,
            seed: 13,
            dev_limit: 50,
        }
    }
}

impl ParaphraserConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.transformer;
        if t.model_dim == 0 || t.heads == 0 || t.model_dim % t.heads != 0 {
            return Err(Error::InvalidConfig("model_dim must be a positive multiple of heads".into()));
        }
        if self.cp_bins < 2 || self.batch_size == 0 || self.learning_rate <= 0.0 || self.copy_weight < 0.0 {
            return Err(Error::InvalidConfig("invalid paraphraser training settings".into()));
        }
        Ok(())
    }
}

/// Training log line for one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub dev_sari: Option<f64>,
}

#[derive(Clone, Debug)]
struct CopyControl {
    net: Mlp,
    gate: ParamId,
    cp_proj: Linear,
    binner: GaussianBinner,
}

/// Encoder outputs for inspection: raw token states, copy probabilities and
/// gated states, one row per input token.
#[derive(Clone, Debug)]
pub struct EncodedStates {
    pub hidden: Matrix,
    pub copy_probs: Vec<f64>,
    pub gated: Matrix,
}

/// One training instance in id form.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub labels: Vec<f64>,
    pub cp: f64,
}

pub(crate) struct Encoded {
    pub memory: Var,
    pub copy_logits: Option<Var>,
    /// Token states before gating (copy models only).
    pub hidden: Option<Var>,
}

#[derive(Clone, Debug)]
pub struct Paraphraser {
    kind: ModelKind,
    config: ParaphraserConfig,
    vocab: Vocab,
    store: ParamStore,
    embed: Embedding,
    encoder: Encoder,
    decoder: Decoder,
    project: Linear,
    copy: Option<CopyControl>,
    trained: bool,
}

impl Paraphraser {
    /// Randomly initialized model. Shared parameters are created first, so a
    /// copy model and a delsplit model with the same seed and vocabulary start
    /// from identical transformer weights.
    pub fn new(kind: ModelKind, config: ParaphraserConfig, vocab: Vocab) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new(config.seed);
        let d = config.transformer.model_dim;
        let embed = Embedding::new(&mut store, &mut rng, "embed", vocab.len(), d)?;
        let encoder = Encoder::new(&mut store, &mut rng, "enc", &config.transformer)?;
        let decoder = Decoder::new(&mut store, &mut rng, "dec", &config.transformer)?;
        let project = Linear::new(&mut store, &mut rng, "proj", d, vocab.len(), true)?;
        let copy = match kind {
            ModelKind::DelSplit => None,
            ModelKind::Paraphraser => {
                let spec = MlpSpec {
                    input: d,
                    hidden: config.copy_hidden.clone(),
                    output: 1,
                    hidden_activation: Activation::Tanh,
                    output_activation: Activation::Identity,
                };
                let net = Mlp::new(&mut store, &mut rng, "copy.net", spec)?;
                let gate = store.add("copy.gate_u", init::normal(&mut rng, 1, d, 1.0 / (d as f64).sqrt()))?;
                let cp_proj = Linear::new(&mut store, &mut rng, "copy.cp_proj", config.cp_bins, d, true)?;
                let binner = GaussianBinner::spanning(0.0, 1.0, config.cp_bins)?;
                Some(CopyControl { net, gate, cp_proj, binner })
            }
        };
        Ok(Self { kind, config, vocab, store, embed, encoder, decoder, project, copy, trained: false })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &ParaphraserConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn has_copy_control(&self) -> bool {
        self.copy.is_some()
    }

    pub fn gate_vector(&self) -> Option<ParamId> {
        self.copy.as_ref().map(|c| c.gate)
    }

    /// Parameter ids of the copy network, the gate vector and the cp projection.
    pub fn copy_param_ids(&self) -> Vec<ParamId> {
        self.store.iter().filter(|(_, name, _)| name.starts_with("copy.")).map(|(id, _, _)| id).collect()
    }

    /// Total scalar count and the part belonging to copy control.
    pub fn parameter_counts(&self) -> (usize, usize) {
        (self.store.num_scalars(), self.store.num_scalars_with_prefix("copy."))
    }

    fn positions(&self, g: &mut Graph<'_>, x: Var) -> Var {
        let (len, d) = g.value(x).dim();
        let pe = g.constant(neural::positional_encoding(len, d));
        g.add(x, pe)
    }

    fn embed_tokens(&self, g: &mut Graph<'_>, ids: &[usize]) -> Result<Var> {
        let e = self.embed.forward(g, ids)?;
        Ok(g.scale(e, (self.config.transformer.model_dim as f64).sqrt()))
    }

    /// Runs the encoder. `forced_p` overrides the copy network's probabilities.
    pub(crate) fn encode_graph(
        &self,
        g: &mut Graph<'_>,
        source: &[usize],
        cp: f64,
        forced_p: Option<&[f64]>,
        dropout: f64,
    ) -> Result<Encoded> {
        if source.is_empty() {
            return Err(Error::EmptyInput("paraphraser input".into()));
        }
        let tokens = self.embed_tokens(g, source)?;
        let Some(copy) = &self.copy else {
            let x = self.positions(g, tokens);
            let x = g.dropout(x, dropout);
            let memory = self.encoder.forward(g, x, dropout)?;
            return Ok(Encoded { memory, copy_logits: None, hidden: None });
        };
        let bins = g.constant(Matrix::from_shape_vec((1, copy.binner.dim()), copy.binner.transform(cp)).expect("row"));
        let slot = copy.cp_proj.forward(g, bins)?;
        let x = g.concat_rows(&[slot, tokens]);
        let x = self.positions(g, x);
        let x = g.dropout(x, dropout);
        let h = self.encoder.forward(g, x, dropout)?;
        let l = source.len();
        let h_slot = g.slice_rows(h, 0, 1);
        let h_tok = g.slice_rows(h, 1, l);
        let logits = copy.net.forward(g, h_tok, 0.0)?;
        let p = match forced_p {
            Some(p) if p.len() == l => g.constant(Matrix::from_shape_vec((l, 1), p.to_vec()).expect("column")),
            Some(p) => return Err(Error::InvalidConfig(format!("{} forced copy probabilities for {l} tokens", p.len()))),
            None => g.sigmoid(logits),
        };
        let u = g.param(copy.gate);
        let pu = g.matmul(p, u);
        let gated = g.add(h_tok, pu);
        let memory = g.concat_rows(&[h_slot, gated]);
        Ok(Encoded { memory, copy_logits: Some(logits), hidden: Some(h_tok) })
    }

    /// Decoder logits for every position of `prefix`.
    pub(crate) fn decode_graph(&self, g: &mut Graph<'_>, prefix: &[usize], memory: Var, dropout: f64) -> Result<Var> {
        let y = self.embed_tokens(g, prefix)?;
        let y = self.positions(g, y);
        let y = g.dropout(y, dropout);
        let h = self.decoder.forward(g, y, memory, dropout)?;
        Ok(self.project.forward(g, h)?)
    }

    /// Token cross-entropy and copy-label BCE (0 without copy control).
    pub fn loss_parts(&self, g: &mut Graph<'_>, ex: &TrainExample, dropout: f64) -> Result<(Var, Option<Var>)> {
        let enc = self.encode_graph(g, &ex.source, ex.cp, None, dropout)?;
        let mut input = vec![BOS];
        input.extend(&ex.target);
        let mut output = ex.target.clone();
        output.push(EOS);
        let logits = self.decode_graph(g, &input, enc.memory, dropout)?;
        let ce = g.cross_entropy(logits, &output);
        let bce = enc.copy_logits.map(|z| g.bce_with_logits(z, &ex.labels));
        Ok((ce, bce))
    }

    /// Total loss: cross-entropy plus `copy_weight` times the copy BCE.
    pub fn loss(&self, g: &mut Graph<'_>, ex: &TrainExample, dropout: f64) -> Result<Var> {
        let (ce, bce) = self.loss_parts(g, ex, dropout)?;
        Ok(match bce {
            Some(b) if self.config.copy_weight != 0.0 => {
                let w = g.scale(b, self.config.copy_weight);
                g.add(ce, w)
            }
            _ => ce,
        })
    }

    /// Gated encoder states for `input`, optionally with forced copy probabilities.
    pub fn encode_with_copy(&self, input: &TokenSeq, cp: CopyConstraint, forced_p: Option<&[f64]>) -> Result<EncodedStates> {
        if self.copy.is_none() {
            return Err(Error::InvalidConfig("model has no copy control".into()));
        }
        let ids = self.vocab.encode(input);
        let mut g = Graph::new(&self.store);
        let enc = self.encode_graph(&mut g, &ids, cp.value(), forced_p, 0.0)?;
        let gated = g.value(enc.memory).slice(ndarray::s![1.., ..]).to_owned();
        let hidden = g.value(enc.hidden.expect("copy model")).clone();
        let logits = g.value(enc.copy_logits.expect("copy model"));
        let copy_probs = match forced_p {
            Some(p) => p.to_vec(),
            None => logits.iter().map(|&z| neural::sigmoid(z)).collect(),
        };
        Ok(EncodedStates { hidden, copy_probs, gated })
    }

    /// Next-token log-probabilities after every prefix position, for a fixed memory.
    pub(crate) fn next_log_probs(&self, memory: &Matrix, prefix: &[usize]) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.store);
        let m = g.constant(memory.clone());
        let y = self.embed_tokens(&mut g, prefix)?;
        let y = self.positions(&mut g, y);
        let h = self.decoder.forward(&mut g, y, m, 0.0)?;
        let last = g.slice_rows(h, prefix.len() - 1, 1);
        let logits = self.project.forward(&mut g, last)?;
        let row = g.value(logits).row(0).to_vec();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        Ok(row.into_iter().map(|v| v - lse).collect())
    }

    pub(crate) fn memory_for(&self, input: &TokenSeq, cp: CopyConstraint) -> Result<Matrix> {
        let ids = self.vocab.encode(input);
        let mut g = Graph::new(&self.store);
        let enc = self.encode_graph(&mut g, &ids, cp.value(), None, 0.0)?;
        Ok(g.value(enc.memory).clone())
    }

    /// Converts a (input, reference) pair to ids, copy labels and the gold copy ratio.
    pub fn example(&self, input: &TokenSeq, reference: &TokenSeq) -> TrainExample {
        let labels = derive_copy_labels(input, reference);
        let cp = copy_fraction(input, &labels).max(1e-3);
        TrainExample {
            source: self.vocab.encode(input),
            target: self.vocab.encode(reference),
            labels: labels.into_iter().map(f64::from).collect(),
            cp,
        }
    }

    /// Mean loss over `examples` in inference mode.
    pub fn mean_loss(&self, examples: &[TrainExample]) -> Result<f64> {
        let losses = examples
            .par_iter()
            .map(|ex| {
                let mut g = Graph::new(&self.store);
                let l = self.loss(&mut g, ex, 0.0)?;
                Ok(g.scalar(l))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
    }

    /// Trains on `pairs`. After each epoch, `dev_score` (if given) scores the
    /// model and the best-scoring parameters are kept.
    pub fn fit(
        &mut self,
        pairs: &[(TokenSeq, TokenSeq)],
        mut dev_score: Option<&mut dyn FnMut(&Paraphraser) -> Result<f64>>,
    ) -> Result<Vec<EpochLog>> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("training corpus".into()));
        }
        let examples: Vec<TrainExample> = pairs.iter().map(|(x, y)| self.example(x, y)).collect();
        let adam_cfg = AdamConfig { learning_rate: self.config.learning_rate, warmup_steps: self.config.warmup_steps, ..AdamConfig::default() };
        let mut adam = AdamState::new(adam_cfg, &self.store);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let dropout = self.config.transformer.dropout;
        let mut logs = Vec::new();
        let mut best: Option<(f64, ParamStore)> = None;
        for epoch in 1..=self.config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(self.config.batch_size) {
                let step = adam.step_count();
                let results = batch
                    .par_iter()
                    .enumerate()
                    .map(|(i, &idx)| {
                        let seed = self.config.seed.wrapping_mul(1_000_003).wrapping_add(step * 4096 + i as u64);
                        let mut g = Graph::training(&self.store, seed);
                        let l = self.loss(&mut g, &examples[idx], dropout)?;
                        Ok((g.scalar(l), g.backward(l)))
                    })
                    .collect::<Result<Vec<(f64, Gradients)>>>()?;
                let mut grads = Gradients::new(self.store.len());
                for (l, gr) in &results {
                    epoch_loss += l;
                    grads.merge(gr);
                }
                grads.scale(1.0 / batch.len() as f64);
                if self.config.grad_clip > 0.0 {
                    grads.clip_global_norm(self.config.grad_clip);
                }
                adam.step(&mut self.store, &grads)?;
            }
            let loss = epoch_loss / examples.len() as f64;
            if !loss.is_finite() {
                return Err(neural::NeuralError::TrainingDiverged(format!("epoch {epoch} loss {loss}")).into());
            }
            self.trained = true;
            let dev_sari = match dev_score.as_mut() {
                Some(f) => Some(f(self)?),
                None => None,
            };
            log::info!("paraphraser epoch {epoch}: loss {loss:.4} dev {dev_sari:?}");
            if let Some(s) = dev_sari {
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, self.store.clone()));
                }
            }
            logs.push(EpochLog { epoch, loss, dev_sari });
        }
        if let Some((_, store)) = best {
            self.store = store;
        }
        Ok(logs)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let spec = serde_json::json!({ "kind": self.kind, "config": self.config, "vocab": self.vocab });
        let kind = match self.kind {
            ModelKind::Paraphraser => "paraphraser",
            ModelKind::DelSplit => "delsplit",
        };
        Checkpoint::from_store(kind, spec, &self.store, serde_json::json!({ "trained": self.trained }))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let kind: ModelKind = serde_json::from_value(ckpt.model_spec["kind"].clone())?;
        let config: ParaphraserConfig = serde_json::from_value(ckpt.model_spec["config"].clone())?;
        let vocab: Vocab = serde_json::from_value(ckpt.model_spec["vocab"].clone())?;
        let mut model = Self::new(kind, config, vocab)?;
        ckpt.load_into(&mut model.store)?;
        model.trained = ckpt.metadata["trained"].as_bool().unwrap_or(false);
        Ok(model)
    }
}

/// Builds a vocabulary from both sides of a pair corpus.
pub fn vocab_for(pairs: &[(TokenSeq, TokenSeq)], min_count: usize) -> Vocab {
    Vocab::build(pairs.iter().flat_map(|(x, y)| [x, y]), min_count)
}
