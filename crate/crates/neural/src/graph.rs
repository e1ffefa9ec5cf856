//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Primitive operations panic on shape disagreement, like the underlying
//! `ndarray` arithmetic. Layers validate their inputs and surface
//! [`NeuralError::Shape`](crate::NeuralError::Shape) instead.

use std::collections::HashMap;

use ndarray::{concatenate, s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::{ParamId, ParamStore};

pub type Matrix = Array2<f64>;

/// Handle to a node recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Boolean attention mask; `true` marks an allowed (query, key) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    allowed: Vec<bool>,
}

impl Mask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self { rows, cols, allowed: vec![true; rows * cols] }
    }

    /// Position `t` may attend to positions `0..=t`.
    pub fn causal(len: usize) -> Self {
        let mut allowed = vec![false; len * len];
        for r in 0..len {
            for c in 0..=r {
                allowed[r * len + c] = true;
            }
        }
        Self { rows: len, cols: len, allowed }
    }

    /// Every query may attend to the keys flagged valid.
    pub fn key_padding(rows: usize, valid_keys: &[bool]) -> Self {
        let cols = valid_keys.len();
        let allowed = (0..rows).flat_map(|_| valid_keys.iter().copied()).collect();
        Self { rows, cols, allowed }
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.allowed[row * self.cols + col]
    }
}

enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulTransB(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Matrix, inv_std: Vec<f64> },
    Gather { table: Var, ids: Vec<usize> },
    SliceCols { x: Var, start: usize },
    SliceRows { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Dropout { x: Var, mask: Matrix },
    CrossEntropy { logits: Var, targets: Vec<usize>, probs: Matrix },
    BceWithLogits { z: Var, labels: Vec<f64> },
    HingeMean(Var),
    Mean(Var),
    Sum(Var),
}

struct Node {
    value: Option<Matrix>,
    op: Op,
}

/// Records a forward computation so it can be differentiated.
///
/// In inference mode dropout is the identity. In training mode dropout masks
/// are drawn from a ChaCha RNG seeded at construction, so identical seeds give
/// identical masks.
pub struct Graph<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    rng: Option<ChaCha8Rng>,
}

impl<'s> Graph<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Self { store, nodes: Vec::new(), params: HashMap::new(), rng: None }
    }

    pub fn training(store: &'s ParamStore, seed: u64) -> Self {
        Self { rng: Some(ChaCha8Rng::seed_from_u64(seed)), ..Self::new(store) }
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn store(&self) -> &'s ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        match &self.nodes[v.0].op {
            Op::Param(id) => self.store.value(*id),
            _ => self.nodes[v.0].value.as_ref().expect("non-parameter nodes carry a value"),
        }
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.dim(), (1, 1), "scalar() on a non-scalar node");
        m[[0, 0]]
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value: Some(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Constant)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        self.nodes.push(Node { value: None, op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).dot(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).dot(&self.value(b).t());
        self.push(out, Op::MatMulTransB(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a) + self.value(b);
        self.push(out, Op::Add(a, b))
    }

    /// Adds a `1 x cols` row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.nrows(), 1, "add_row expects a single row");
        let out = self.value(a) + r;
        self.push(out, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a) * self.value(b);
        self.push(out, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a) * factor;
        self.push(out, Op::Scale(a, factor))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    /// Row-wise softmax. Masked-out entries get probability exactly 0; a fully
    /// masked row is all zeros.
    pub fn softmax(&mut self, a: Var, mask: Option<&Mask>) -> Var {
        let x = self.value(a);
        if let Some(m) = mask {
            assert_eq!(m.dim(), x.dim(), "mask shape must match scores");
        }
        let mut out = Matrix::zeros(x.dim());
        for (r, row) in x.outer_iter().enumerate() {
            let allowed = |c: usize| mask.map_or(true, |m| m.allows(r, c));
            let max = row
                .iter()
                .enumerate()
                .filter(|(c, _)| allowed(*c))
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut total = 0.0;
            for (c, &v) in row.iter().enumerate() {
                if allowed(c) {
                    let e = (v - max).exp();
                    out[[r, c]] = e;
                    total += e;
                }
            }
            out.row_mut(r).mapv_inplace(|e| e / total);
        }
        self.push(out, Op::Softmax(a))
    }

    /// Per-row normalization to zero mean and unit variance, then `gamma ⊙ x̂ + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        const EPS: f64 = 1e-5;
        let xv = self.value(x);
        let cols = xv.ncols() as f64;
        let mut xhat = Matrix::zeros(xv.dim());
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for (r, row) in xv.outer_iter().enumerate() {
            let mean = row.sum() / cols;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / cols;
            let is = 1.0 / (var + EPS).sqrt();
            inv_std.push(is);
            for (c, v) in row.iter().enumerate() {
                xhat[[r, c]] = (v - mean) * is;
            }
        }
        let out = &xhat * self.value(gamma) + self.value(beta);
        self.push(out, Op::LayerNorm { x, gamma, beta, xhat, inv_std })
    }

    /// Selects rows of `table` (an embedding lookup).
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut out = Matrix::zeros((ids.len(), t.ncols()));
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).assign(&t.row(id));
        }
        self.push(out, Op::Gather { table, ids: ids.to_vec() })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let out = self.value(x).slice(s![.., start..start + len]).to_owned();
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let out = self.value(x).slice(s![start..start + len, ..]).to_owned();
        self.push(out, Op::SliceRows { x, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = concatenate(Axis(1), &views).expect("concat_cols: row counts differ");
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = concatenate(Axis(0), &views).expect("concat_rows: column counts differ");
        self.push(out, Op::ConcatRows(parts.to_vec()))
    }

    /// Inverted dropout. Identity outside training mode or when `p == 0`.
    pub fn dropout(&mut self, x: Var, p: f64) -> Var {
        if p <= 0.0 || self.rng.is_none() {
            return x;
        }
        let keep = 1.0 - p;
        let dim = self.value(x).dim();
        let rng = self.rng.as_mut().expect("checked above");
        let mask = Matrix::from_shape_fn(dim, |_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 });
        let out = self.value(x) * &mask;
        self.push(out, Op::Dropout { x, mask })
    }

    /// Mean token cross-entropy of row-wise logits against target class ids.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let l = self.value(logits);
        assert_eq!(l.nrows(), targets.len(), "one target per logit row");
        let mut probs = Matrix::zeros(l.dim());
        let mut total = 0.0;
        for (r, row) in l.outer_iter().enumerate() {
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + sum.ln();
            for (c, v) in row.iter().enumerate() {
                probs[[r, c]] = (v - log_z).exp();
            }
            total += log_z - row[targets[r]];
        }
        let n = targets.len().max(1) as f64;
        let out = Matrix::from_elem((1, 1), total / n);
        self.push(out, Op::CrossEntropy { logits, targets: targets.to_vec(), probs })
    }

    /// Mean binary cross-entropy of `sigmoid(z)` against labels in [0, 1].
    /// `z` is a column of logits.
    pub fn bce_with_logits(&mut self, z: Var, labels: &[f64]) -> Var {
        let zv = self.value(z);
        assert_eq!(zv.len(), labels.len(), "one label per logit");
        let total: f64 = zv.iter().zip(labels).map(|(&z, &y)| softplus(z) - y * z).sum();
        let n = labels.len().max(1) as f64;
        let out = Matrix::from_elem((1, 1), total / n);
        self.push(out, Op::BceWithLogits { z, labels: labels.to_vec() })
    }

    /// `mean(max(0, 1 - x))` over every entry of `x`.
    pub fn hinge_mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let n = xv.len().max(1) as f64;
        let total: f64 = xv.iter().map(|&v| (1.0 - v).max(0.0)).sum();
        self.push(Matrix::from_elem((1, 1), total / n), Op::HingeMean(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let n = xv.len().max(1) as f64;
        let out = Matrix::from_elem((1, 1), xv.sum() / n);
        self.push(out, Op::Mean(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let out = Matrix::from_elem((1, 1), self.value(x).sum());
        self.push(out, Op::Sum(x))
    }

    /// Gradient of the scalar `loss` with respect to every parameter used.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).dim(), (1, 1), "backward expects a scalar loss");
        let mut grads: Vec<Option<Matrix>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::ones((1, 1)));
        let mut out = Gradients::new(self.store.len());

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Constant => {}
                Op::Param(id) => out.accumulate(*id, g),
                Op::MatMul(a, b) => {
                    let da = g.dot(&self.value(*b).t());
                    let db = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MatMulTransB(a, b) => {
                    let da = g.dot(self.value(*b));
                    let db = g.t().dot(self.value(*a));
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(a, row) => {
                    let dr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *row, dr);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = &g * self.value(*b);
                    let db = &g * self.value(*a);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Scale(a, f) => acc(&mut grads, *a, g * *f),
                Op::Tanh(a) => {
                    let y = self.value(Var(idx));
                    acc(&mut grads, *a, &g * &y.mapv(|t| 1.0 - t * t));
                }
                Op::Sigmoid(a) => {
                    let y = self.value(Var(idx));
                    acc(&mut grads, *a, &g * &y.mapv(|s| s * (1.0 - s)));
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let dx = ndarray::Zip::from(&g).and(x).map_collect(|&g, &x| if x > 0.0 { g } else { 0.0 });
                    acc(&mut grads, *a, dx);
                }
                Op::Softmax(a) => {
                    let y = self.value(Var(idx));
                    let gy = &g * y;
                    let row_dot = gy.sum_axis(Axis(1)).insert_axis(Axis(1));
                    let dx = &gy - &(y * &row_dot);
                    acc(&mut grads, *a, dx);
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let gam = self.value(*gamma);
                    acc(&mut grads, *gamma, (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut grads, *beta, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    let dxhat = &g * gam;
                    let n = xhat.ncols() as f64;
                    let mut dx = Matrix::zeros(xhat.dim());
                    for r in 0..xhat.nrows() {
                        let dr = dxhat.row(r);
                        let xr = xhat.row(r);
                        let sum_d = dr.sum();
                        let sum_dx = dr.dot(&xr);
                        for c in 0..xhat.ncols() {
                            dx[[r, c]] = inv_std[r] / n * (n * dr[c] - sum_d - xr[c] * sum_dx);
                        }
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::Gather { table, ids } => {
                    let mut dt = Matrix::zeros(self.value(*table).dim());
                    for (r, &id) in ids.iter().enumerate() {
                        let mut row = dt.row_mut(id);
                        row += &g.row(r);
                    }
                    acc(&mut grads, *table, dt);
                }
                Op::SliceCols { x, start } => {
                    let mut dx = Matrix::zeros(self.value(*x).dim());
                    dx.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut grads, *x, dx);
                }
                Op::SliceRows { x, start } => {
                    let mut dx = Matrix::zeros(self.value(*x).dim());
                    dx.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    acc(&mut grads, *x, dx);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        acc(&mut grads, p, g.slice(s![.., offset..offset + w]).to_owned());
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let h = self.value(p).nrows();
                        acc(&mut grads, p, g.slice(s![offset..offset + h, ..]).to_owned());
                        offset += h;
                    }
                }
                Op::Dropout { x, mask } => acc(&mut grads, *x, &g * mask),
                Op::CrossEntropy { logits, targets, probs } => {
                    let upstream = g[[0, 0]] / targets.len().max(1) as f64;
                    let mut dl = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        dl[[r, t]] -= 1.0;
                    }
                    acc(&mut grads, *logits, dl * upstream);
                }
                Op::BceWithLogits { z, labels } => {
                    let upstream = g[[0, 0]] / labels.len().max(1) as f64;
                    let zv = self.value(*z);
                    let mut dz = Matrix::zeros(zv.dim());
                    for ((d, &zi), &y) in dz.iter_mut().zip(zv.iter()).zip(labels) {
                        *d = (sigmoid(zi) - y) * upstream;
                    }
                    acc(&mut grads, *z, dz);
                }
                Op::HingeMean(x) => {
                    let xv = self.value(*x);
                    let upstream = g[[0, 0]] / xv.len().max(1) as f64;
                    acc(&mut grads, *x, xv.mapv(|v| if 1.0 - v > 0.0 { -upstream } else { 0.0 }));
                }
                Op::Mean(x) => {
                    let xv = self.value(*x);
                    let upstream = g[[0, 0]] / xv.len().max(1) as f64;
                    acc(&mut grads, *x, Matrix::from_elem(xv.dim(), upstream));
                }
                Op::Sum(x) => {
                    let dim = self.value(*x).dim();
                    acc(&mut grads, *x, Matrix::from_elem(dim, g[[0, 0]]));
                }
            }
        }
        out
    }
}

fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(existing) => *existing += &g,
        slot => *slot = Some(g),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-parameter gradients, indexed by [`ParamId`]. Parameters not touched by
/// the graph have no entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn new(num_params: usize) -> Self {
        Self { grads: vec![None; num_params] }
    }

    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.grads.get(id.index()).and_then(Option::as_ref)
    }

    pub fn accumulate(&mut self, id: ParamId, g: Matrix) {
        match &mut self.grads[id.index()] {
            Some(existing) => *existing += &g,
            slot => *slot = Some(g),
        }
    }

    /// Adds every entry of `other` into `self`.
    pub fn merge(&mut self, other: &Gradients) {
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                match &mut self.grads[i] {
                    Some(existing) => *existing += g,
                    slot => *slot = Some(g.clone()),
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.mapv_inplace(|v| v * factor);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().flatten().flat_map(|g| g.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`. Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn all_finite(&self) -> bool {
        self.grads.iter().flatten().all(|g| g.iter().all(|v| v.is_finite()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.grads.iter().enumerate().filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}
