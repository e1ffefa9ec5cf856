//! Central finite-difference gradient checking.
//!
//! The numerical side only evaluates the loss; it never touches the backward
//! pass, so it is an independent check on [`Graph::backward`].

use crate::graph::Graph;
use crate::graph::Var;
use crate::params::{ParamId, ParamStore};

/// Result for one parameter tensor.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub name: String,
    /// `‖analytic − numeric‖ / max(‖analytic‖ + ‖numeric‖, 1e-6)`; the floor keeps
    /// identically-zero gradients (e.g. attention key biases) from reporting noise.
    pub relative_error: f64,
    pub max_abs_diff: f64,
}

/// Compares the analytic gradient of `loss` with central differences of step
/// `h` for every scalar of the listed parameters. `loss` must be a
/// deterministic function of the store (use an inference-mode graph or a fixed
/// dropout seed).
pub fn check<F>(store: &mut ParamStore, params: &[ParamId], h: f64, loss: F) -> Vec<GradCheck>
where
    F: Fn(&mut Graph<'_>) -> Var,
{
    let analytic = {
        let mut g = Graph::new(store);
        let l = loss(&mut g);
        g.backward(l)
    };
    let eval = |store: &ParamStore| {
        let mut g = Graph::new(store);
        let l = loss(&mut g);
        g.scalar(l)
    };

    params
        .iter()
        .map(|&id| {
            let base = store.value(id).clone();
            let zeros = ndarray::Array2::zeros(base.dim());
            let grad = analytic.get(id).unwrap_or(&zeros).clone();
            let mut numeric = ndarray::Array2::<f64>::zeros(base.dim());
            for idx in 0..base.len() {
                let (r, c) = (idx / base.ncols(), idx % base.ncols());
                let mut plus = base.clone();
                plus[[r, c]] += h;
                store.set(id, plus).expect("same shape");
                let f_plus = eval(store);
                let mut minus = base.clone();
                minus[[r, c]] -= h;
                store.set(id, minus).expect("same shape");
                let f_minus = eval(store);
                numeric[[r, c]] = (f_plus - f_minus) / (2.0 * h);
            }
            store.set(id, base).expect("same shape");
            let diff = &grad - &numeric;
            let norm = |m: &ndarray::Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
            GradCheck {
                name: store.name(id).to_string(),
                relative_error: norm(&diff) / (norm(&grad) + norm(&numeric)).max(1e-6),
                max_abs_diff: diff.iter().fold(0.0f64, |a, &b| a.max(b.abs())),
            }
        })
        .collect()
}
