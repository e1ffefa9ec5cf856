//! Versioned checkpoint container.
//!
//! Layout: one header line `SIMPLIFY-CKPT <version>\n`, then a JSON body with
//! the model kind, its spec, every named parameter as a row-major array, the
//! initialization seed and free-form training metadata. Floats are written in
//! shortest round-trip form, so a write/read cycle is bitwise exact.

use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::graph::Matrix;
use crate::params::ParamStore;

pub const MAGIC: &str = "SIMPLIFY-CKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kind: String,
    pub model_spec: serde_json::Value,
    pub params: Vec<NamedArray>,
    pub seed: u64,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn from_store(kind: &str, model_spec: serde_json::Value, store: &ParamStore, metadata: serde_json::Value) -> Self {
        let params = store
            .iter()
            .map(|(_, name, v)| NamedArray {
                name: name.to_string(),
                shape: [v.nrows(), v.ncols()],
                data: v.iter().copied().collect(),
            })
            .collect();
        Self { format_version: FORMAT_VERSION, kind: kind.to_string(), model_spec, params, seed: store.seed(), metadata }
    }

    /// Copies every stored array into `store`. Names and shapes must match exactly.
    pub fn load_into(&self, store: &mut ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(NeuralError::Checkpoint(format!(
                "checkpoint has {} parameters, model expects {}",
                self.params.len(),
                store.len()
            )));
        }
        for p in &self.params {
            let id = store.id(&p.name).ok_or_else(|| NeuralError::UnknownParam(p.name.clone()))?;
            let m = Matrix::from_shape_vec((p.shape[0], p.shape[1]), p.data.clone())
                .map_err(|e| NeuralError::Checkpoint(format!("parameter `{}`: {e}", p.name)))?;
            store.set(id, m)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = format!("{MAGIC} {}\n", self.format_version).into_bytes();
        serde_json::to_writer(&mut out, self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| NeuralError::Checkpoint("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline]).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| NeuralError::Checkpoint(format!("bad magic in header `{header}`")))?;
        let version: u32 = version.parse().map_err(|_| NeuralError::Checkpoint(format!("bad version `{version}`")))?;
        if version != FORMAT_VERSION {
            return Err(NeuralError::Checkpoint(format!("unsupported format version {version}")));
        }
        let ckpt: Checkpoint = serde_json::from_slice(&bytes[newline + 1..])?;
        if ckpt.format_version != version {
            return Err(NeuralError::Checkpoint("header and body versions disagree".into()));
        }
        for p in &ckpt.params {
            if p.shape[0] * p.shape[1] != p.data.len() {
                return Err(NeuralError::Checkpoint(format!("parameter `{}` data does not match shape", p.name)));
            }
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip_is_bitwise(values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..40), seed in any::<u64>()) {
            let mut store = ParamStore::new(seed);
            let n = values.len();
            store.add("w", Matrix::from_shape_vec((1, n), values.clone()).unwrap()).unwrap();
            let ckpt = Checkpoint::from_store("test", serde_json::json!({"n": n}), &store, serde_json::json!({"epoch": 3}));
            let back = Checkpoint::from_bytes(&ckpt.to_bytes().unwrap()).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back.params[0].data), bits(&values));
            prop_assert_eq!(back.seed, seed);
            let mut fresh = ParamStore::new(seed);
            fresh.add("w", Matrix::zeros((1, n))).unwrap();
            back.load_into(&mut fresh).unwrap();
            prop_assert_eq!(fresh, store);
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(Checkpoint::from_bytes(b"NOPE 1\n{}").is_err());
        assert!(Checkpoint::from_bytes(b"SIMPLIFY-CKPT 99\n{}").is_err());
    }

    #[test]
    fn shape_mismatch_on_load() {
        let mut store = ParamStore::new(0);
        store.add("w", Matrix::zeros((2, 2))).unwrap();
        let ckpt = Checkpoint::from_store("t", serde_json::Value::Null, &store, serde_json::Value::Null);
        let mut other = ParamStore::new(0);
        other.add("w", Matrix::zeros((1, 4))).unwrap();
        assert!(ckpt.load_into(&mut other).is_err());
    }
}
