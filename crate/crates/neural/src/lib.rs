//! Minimal trainable-model substrate.
//!
//! Everything here works on dense row-major `f64` matrices. A [`Graph`] records
//! operations as they are evaluated and replays them in reverse to produce
//! [`Gradients`] for the parameters held in a [`ParamStore`]. Layers
//! ([`Linear`], [`Mlp`], [`MultiHeadAttention`], the transformer stacks) only
//! own [`ParamId`]s, so a trained store can be shared read-only between
//! inference workers while each worker builds its own graph.

pub mod adam;
pub mod checkpoint;
mod error;
pub mod gradcheck;
pub mod graph;
pub mod init;
pub mod layers;
pub mod params;
pub mod transformer;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, NamedArray};
pub use error::{NeuralError, Result};
pub use graph::{sigmoid, Gradients, Graph, Mask, Matrix, Var};
pub use layers::{Activation, Embedding, FeedForward, LayerNorm, Linear, Mlp, MlpSpec, MultiHeadAttention};
pub use params::{ParamId, ParamStore};
pub use transformer::{positional_encoding, Decoder, DecoderLayer, Encoder, EncoderLayer, TransformerConfig};
