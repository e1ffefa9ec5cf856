use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::graph::{Graph, Mask, Var};
use crate::init;
use crate::params::{ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, g: &mut Graph<'_>, x: Var) -> Var {
        match self {
            Activation::Identity => x,
            Activation::Tanh => g.tanh(x),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::Relu => g.relu(x),
        }
    }
}

fn expect_cols(g: &Graph<'_>, x: Var, cols: usize, what: &str) -> Result<()> {
    let got = g.value(x).ncols();
    if got != cols {
        return Err(NeuralError::Shape(format!("{what}: expected {cols} input columns, got {got}")));
    }
    Ok(())
}

/// `x · W + b` with `W: in x out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
    ) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), init::xavier_uniform(rng, in_dim, out_dim))?;
        let bias = if bias { Some(store.add(format!("{name}.bias"), init::zeros(1, out_dim))?) } else { None };
        Ok(Self { weight, bias, in_dim, out_dim })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        expect_cols(g, x, self.in_dim, "linear")?;
        let w = g.param(self.weight);
        let y = g.matmul(x, w);
        Ok(match self.bias {
            Some(b) => {
                let b = g.param(b);
                g.add_row(y, b)
            }
            None => y,
        })
    }
}

/// Layer sizes and activations of a feedforward network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

#[derive(Clone, Debug)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, prefix: &str, spec: MlpSpec) -> Result<Self> {
        let mut dims = vec![spec.input];
        dims.extend(&spec.hidden);
        dims.push(spec.output);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, rng, &format!("{prefix}.{i}"), w[0], w[1], true))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    /// Rows of `x` are independent inputs. Dropout (rate `dropout`) follows each
    /// hidden activation and is only active on a training graph.
    pub fn forward(&self, g: &mut Graph<'_>, x: Var, dropout: f64) -> Result<Var> {
        expect_cols(g, x, self.spec.input, "mlp")?;
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(g, h)?;
            if i < last {
                h = self.spec.hidden_activation.apply(g, h);
                h = g.dropout(h, dropout);
            } else {
                h = self.spec.output_activation.apply(g, h);
            }
        }
        Ok(h)
    }

    /// Inference on a single input vector.
    pub fn infer(&self, store: &ParamStore, input: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new(store);
        let x = g.constant(ndarray::Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("1 x n"));
        let y = self.forward(&mut g, x, 0.0)?;
        Ok(g.value(y).iter().copied().collect())
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub dim: usize,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        let gamma = store.add(format!("{name}.gamma"), init::ones(1, dim))?;
        let beta = store.add(format!("{name}.beta"), init::zeros(1, dim))?;
        Ok(Self { gamma, beta, dim })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        expect_cols(g, x, self.dim, "layer_norm")?;
        let (gamma, beta) = (g.param(self.gamma), g.param(self.beta));
        Ok(g.layer_norm(x, gamma, beta))
    }
}

#[derive(Clone, Debug)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, vocab: usize, dim: usize) -> Result<Self> {
        let std = 1.0 / (dim as f64).sqrt();
        let table = store.add(format!("{name}.table"), init::normal(rng, vocab, dim, std))?;
        Ok(Self { table, vocab, dim })
    }

    pub fn forward(&self, g: &mut Graph<'_>, ids: &[usize]) -> Result<Var> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.vocab) {
            return Err(NeuralError::Shape(format!("token id {bad} outside vocabulary of {}", self.vocab)));
        }
        let t = g.param(self.table);
        Ok(g.gather(t, ids))
    }
}

/// Scaled dot-product attention with `heads` heads over `dim` model columns.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
    pub dim: usize,
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, dim: usize, heads: usize) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(NeuralError::Shape(format!("model dim {dim} not divisible by {heads} heads")));
        }
        Ok(Self {
            query: Linear::new(store, rng, &format!("{name}.q"), dim, dim, true)?,
            key: Linear::new(store, rng, &format!("{name}.k"), dim, dim, true)?,
            value: Linear::new(store, rng, &format!("{name}.v"), dim, dim, true)?,
            output: Linear::new(store, rng, &format!("{name}.o"), dim, dim, true)?,
            heads,
            dim,
        })
    }

    /// `queries: n x dim`, `memory: m x dim`, optional `n x m` mask.
    pub fn forward(&self, g: &mut Graph<'_>, queries: Var, memory: Var, mask: Option<&Mask>) -> Result<Var> {
        let (n, m) = (g.value(queries).nrows(), g.value(memory).nrows());
        if let Some(mask) = mask {
            if mask.dim() != (n, m) {
                return Err(NeuralError::Shape(format!("attention mask {:?} for {n} queries, {m} keys", mask.dim())));
            }
        }
        let q = self.query.forward(g, queries)?;
        let k = self.key.forward(g, memory)?;
        let v = self.value.forward(g, memory)?;
        let head_dim = self.dim / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let mut outputs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = g.slice_cols(q, h * head_dim, head_dim);
            let kh = g.slice_cols(k, h * head_dim, head_dim);
            let vh = g.slice_cols(v, h * head_dim, head_dim);
            let scores = g.matmul_t(qh, kh);
            let scores = g.scale(scores, scale);
            let weights = g.softmax(scores, mask);
            outputs.push(g.matmul(weights, vh));
        }
        let joined = if outputs.len() == 1 { outputs[0] } else { g.concat_cols(&outputs) };
        self.output.forward(g, joined)
    }
}

/// Position-wise `relu(x W1 + b1) W2 + b2`.
#[derive(Clone, Debug)]
pub struct FeedForward {
    pub inner: Linear,
    pub outer: Linear,
}

impl FeedForward {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, dim: usize, hidden: usize) -> Result<Self> {
        Ok(Self {
            inner: Linear::new(store, rng, &format!("{name}.inner"), dim, hidden, true)?,
            outer: Linear::new(store, rng, &format!("{name}.outer"), hidden, dim, true)?,
        })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var, dropout: f64) -> Result<Var> {
        let h = self.inner.forward(g, x)?;
        let h = g.relu(h);
        let h = g.dropout(h, dropout);
        self.outer.forward(g, h)
    }
}
