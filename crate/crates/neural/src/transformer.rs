//! Pre-layer-norm transformer encoder and decoder stacks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, Mask, Matrix, Var};
use crate::layers::{FeedForward, LayerNorm, MultiHeadAttention};
use crate::params::ParamStore;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformerConfig {
    pub model_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub dropout: f64,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        Self { model_dim: 64, heads: 4, ff_dim: 128, encoder_layers: 2, decoder_layers: 2, dropout: 0.1 }
    }
}

/// Sinusoidal position table, `len x dim`.
pub fn positional_encoding(len: usize, dim: usize) -> Matrix {
    Matrix::from_shape_fn((len, dim), |(pos, i)| {
        let pair = (i / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * pair / dim as f64);
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

#[derive(Clone, Debug)]
pub struct EncoderLayer {
    norm_attn: LayerNorm,
    attn: MultiHeadAttention,
    norm_ff: LayerNorm,
    ff: FeedForward,
}

impl EncoderLayer {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, cfg: &TransformerConfig) -> Result<Self> {
        Ok(Self {
            norm_attn: LayerNorm::new(store, &format!("{name}.norm_attn"), cfg.model_dim)?,
            attn: MultiHeadAttention::new(store, rng, &format!("{name}.attn"), cfg.model_dim, cfg.heads)?,
            norm_ff: LayerNorm::new(store, &format!("{name}.norm_ff"), cfg.model_dim)?,
            ff: FeedForward::new(store, rng, &format!("{name}.ff"), cfg.model_dim, cfg.ff_dim)?,
        })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var, mask: Option<&Mask>, dropout: f64) -> Result<Var> {
        let h = self.norm_attn.forward(g, x)?;
        let h = self.attn.forward(g, h, h, mask)?;
        let h = g.dropout(h, dropout);
        let x = g.add(x, h);
        let h = self.norm_ff.forward(g, x)?;
        let h = self.ff.forward(g, h, dropout)?;
        let h = g.dropout(h, dropout);
        Ok(g.add(x, h))
    }
}

#[derive(Clone, Debug)]
pub struct DecoderLayer {
    norm_self: LayerNorm,
    self_attn: MultiHeadAttention,
    norm_cross: LayerNorm,
    cross_attn: MultiHeadAttention,
    norm_ff: LayerNorm,
    ff: FeedForward,
}

impl DecoderLayer {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, cfg: &TransformerConfig) -> Result<Self> {
        Ok(Self {
            norm_self: LayerNorm::new(store, &format!("{name}.norm_self"), cfg.model_dim)?,
            self_attn: MultiHeadAttention::new(store, rng, &format!("{name}.self_attn"), cfg.model_dim, cfg.heads)?,
            norm_cross: LayerNorm::new(store, &format!("{name}.norm_cross"), cfg.model_dim)?,
            cross_attn: MultiHeadAttention::new(store, rng, &format!("{name}.cross_attn"), cfg.model_dim, cfg.heads)?,
            norm_ff: LayerNorm::new(store, &format!("{name}.norm_ff"), cfg.model_dim)?,
            ff: FeedForward::new(store, rng, &format!("{name}.ff"), cfg.model_dim, cfg.ff_dim)?,
        })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var, memory: Var, causal: &Mask, dropout: f64) -> Result<Var> {
        let h = self.norm_self.forward(g, x)?;
        let h = self.self_attn.forward(g, h, h, Some(causal))?;
        let h = g.dropout(h, dropout);
        let x = g.add(x, h);
        let h = self.norm_cross.forward(g, x)?;
        let h = self.cross_attn.forward(g, h, memory, None)?;
        let h = g.dropout(h, dropout);
        let x = g.add(x, h);
        let h = self.norm_ff.forward(g, x)?;
        let h = self.ff.forward(g, h, dropout)?;
        let h = g.dropout(h, dropout);
        Ok(g.add(x, h))
    }
}

/// Stack of encoder layers followed by a final layer norm.
#[derive(Clone, Debug)]
pub struct Encoder {
    layers: Vec<EncoderLayer>,
    norm: LayerNorm,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, cfg: &TransformerConfig) -> Result<Self> {
        let layers = (0..cfg.encoder_layers)
            .map(|i| EncoderLayer::new(store, rng, &format!("{name}.layer{i}"), cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers, norm: LayerNorm::new(store, &format!("{name}.norm"), cfg.model_dim)? })
    }

    /// `x` already carries token and position information.
    pub fn forward(&self, g: &mut Graph<'_>, x: Var, dropout: f64) -> Result<Var> {
        let mut h = x;
        for layer in &self.layers {
            h = layer.forward(g, h, None, dropout)?;
        }
        self.norm.forward(g, h)
    }
}

/// Stack of causal decoder layers followed by a final layer norm.
#[derive(Clone, Debug)]
pub struct Decoder {
    layers: Vec<DecoderLayer>,
    norm: LayerNorm,
}

impl Decoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, cfg: &TransformerConfig) -> Result<Self> {
        let layers = (0..cfg.decoder_layers)
            .map(|i| DecoderLayer::new(store, rng, &format!("{name}.layer{i}"), cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers, norm: LayerNorm::new(store, &format!("{name}.norm"), cfg.model_dim)? })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var, memory: Var, dropout: f64) -> Result<Var> {
        let causal = Mask::causal(g.value(x).nrows());
        let mut h = x;
        for layer in &self.layers {
            h = layer.forward(g, h, memory, &causal, dropout)?;
        }
        self.norm.forward(g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> TransformerConfig {
        TransformerConfig { model_dim: 8, heads: 2, ff_dim: 16, encoder_layers: 1, decoder_layers: 2, dropout: 0.0 }
    }

    #[test]
    fn decoder_output_is_causal() {
        let cfg = small();
        let mut store = ParamStore::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dec = Decoder::new(&mut store, &mut rng, "dec", &cfg).unwrap();
        let input = crate::init::normal(&mut rng, 5, 8, 1.0);
        let memory = crate::init::normal(&mut rng, 3, 8, 1.0);
        let run = |x: &Matrix| {
            let mut g = Graph::new(&store);
            let xv = g.constant(x.clone());
            let mv = g.constant(memory.clone());
            let y = dec.forward(&mut g, xv, mv, 0.0).unwrap();
            g.value(y).clone()
        };
        let base = run(&input);
        for t in 0..5 {
            let mut perturbed = input.clone();
            for r in (t + 1)..5 {
                for c in 0..8 {
                    perturbed[[r, c]] += (r * 8 + c) as f64 * 0.37 - 5.0;
                }
            }
            let out = run(&perturbed);
            for r in 0..=t {
                for c in 0..8 {
                    assert!((out[[r, c]] - base[[r, c]]).abs() < 1e-12, "position {r} changed when perturbing > {t}");
                }
            }
            if t < 4 {
                assert!((out[[4, 0]] - base[[4, 0]]).abs() > 1e-9);
            }
        }
    }

    #[test]
    fn positional_encoding_first_row() {
        let pe = positional_encoding(3, 4);
        assert_eq!(pe[[0, 0]], 0.0);
        assert_eq!(pe[[0, 1]], 1.0);
        assert!((pe[[1, 0]] - 1f64.sin()).abs() < 1e-15);
    }
}
