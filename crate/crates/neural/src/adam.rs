//! Adam with bias-corrected moments and an optional linear warmup.

use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::graph::{Gradients, Matrix};
use crate::params::ParamStore;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Linear warmup length in steps; 0 disables warmup.
    pub warmup_steps: u64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, warmup_steps: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Matrix> = store.iter().map(|(_, _, v)| Matrix::zeros(v.dim())).collect();
        Self { config, step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Learning rate used by the next update.
    pub fn next_learning_rate(&self) -> f64 {
        let t = self.step + 1;
        match self.config.warmup_steps {
            0 => self.config.learning_rate,
            w => self.config.learning_rate * (t as f64 / w as f64).min(1.0),
        }
    }

    /// Applies one update. Parameters without a gradient keep their moments
    /// decaying as if the gradient were zero.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        if !grads.all_finite() {
            return Err(NeuralError::TrainingDiverged(format!("non-finite gradient at step {}", self.step + 1)));
        }
        let lr = self.next_learning_rate();
        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon, .. } = self.config;
        let correction1 = 1.0 - beta1.powi(self.step as i32);
        let correction2 = 1.0 - beta2.powi(self.step as i32);
        for id in store.ids().collect::<Vec<_>>() {
            let i = id.index();
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            match grads.get(id) {
                Some(g) => {
                    ndarray::Zip::from(&mut *m).and(g).for_each(|m, &g| *m = beta1 * *m + (1.0 - beta1) * g);
                    ndarray::Zip::from(&mut *v).and(g).for_each(|v, &g| *v = beta2 * *v + (1.0 - beta2) * g * g);
                }
                None => {
                    m.mapv_inplace(|m| beta1 * m);
                    v.mapv_inplace(|v| beta2 * v);
                }
            }
            let param = store.value_mut(id);
            ndarray::Zip::from(param).and(&*m).and(&*v).for_each(|p, &m, &v| {
                let m_hat = m / correction1;
                let v_hat = v / correction2;
                *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
            });
        }
        if !store.all_finite() {
            return Err(NeuralError::TrainingDiverged(format!("non-finite parameter after step {}", self.step)));
        }
        Ok(())
    }
}
