//! Analytic gradients against central finite differences (h = 1e-4) for every
//! layer type, on several random instances each.

use neural::gradcheck;
use neural::init;
use neural::{
    Activation, AdamConfig, AdamState, Decoder, Embedding, Encoder, Graph, LayerNorm, Mask, Matrix, Mlp, MlpSpec,
    MultiHeadAttention, ParamStore, TransformerConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;
const TOL: f64 = 1e-4;
const INSTANCES: u64 = 5;

fn assert_all_pass(reports: &[gradcheck::GradCheck]) {
    for r in reports {
        assert!(r.relative_error < TOL, "{}: relative error {:.3e}", r.name, r.relative_error);
    }
}

/// Projects a matrix onto a scalar with fixed random weights so every output
/// entry receives a distinct upstream gradient.
fn weighted_sum(g: &mut Graph<'_>, x: neural::Var, weights: &Matrix) -> neural::Var {
    let w = g.constant(weights.clone());
    let y = g.mul(x, w);
    g.sum(y)
}

#[test]
fn mlp_tanh_and_sigmoid() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new(seed);
        let spec = MlpSpec {
            input: 4,
            hidden: vec![5, 3],
            output: 1,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Sigmoid,
        };
        let mlp = Mlp::new(&mut store, &mut rng, "mlp", spec).unwrap();
        let x = init::normal(&mut rng, 3, 4, 1.0);
        let labels: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let xv = g.constant(x.clone());
            let y = mlp.forward(g, xv, 0.0).unwrap();
            let t = g.constant(Matrix::from_shape_vec((3, 1), labels.clone()).unwrap());
            let neg = g.scale(t, -1.0);
            let d = g.add(y, neg);
            let sq = g.mul(d, d);
            g.mean(sq)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn relu_feedforward_with_cross_entropy() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut store = ParamStore::new(seed);
        let spec = MlpSpec {
            input: 3,
            hidden: vec![6],
            output: 4,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
        };
        let mlp = Mlp::new(&mut store, &mut rng, "ff", spec).unwrap();
        let x = init::normal(&mut rng, 5, 3, 1.0);
        let targets: Vec<usize> = (0..5).map(|_| rng.gen_range(0..4)).collect();
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let xv = g.constant(x.clone());
            let logits = mlp.forward(g, xv, 0.0).unwrap();
            g.cross_entropy(logits, &targets)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn layer_norm_parameters_and_input() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut store = ParamStore::new(seed);
        let ln = LayerNorm::new(&mut store, "ln", 6).unwrap();
        store.set(ln.gamma, init::normal(&mut rng, 1, 6, 1.0)).unwrap();
        store.set(ln.beta, init::normal(&mut rng, 1, 6, 1.0)).unwrap();
        let x = store.add("x", init::normal(&mut rng, 3, 6, 2.0)).unwrap();
        let w = init::normal(&mut rng, 3, 6, 1.0);
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let xv = g.param(x);
            let y = ln.forward(g, xv).unwrap();
            weighted_sum(g, y, &w)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn attention_with_and_without_masks() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let mut store = ParamStore::new(seed);
        let attn = MultiHeadAttention::new(&mut store, &mut rng, "attn", 8, 2).unwrap();
        let q = store.add("queries", init::normal(&mut rng, 4, 8, 1.0)).unwrap();
        let m = store.add("memory", init::normal(&mut rng, 5, 8, 1.0)).unwrap();
        let w_cross = init::normal(&mut rng, 4, 8, 1.0);
        let w_self = init::normal(&mut rng, 4, 8, 1.0);
        let pad = Mask::key_padding(4, &[true, true, false, true, true]);
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let qv = g.param(q);
            let mv = g.param(m);
            let cross = attn.forward(g, qv, mv, Some(&pad)).unwrap();
            let own = attn.forward(g, qv, qv, Some(&Mask::causal(4))).unwrap();
            let a = weighted_sum(g, cross, &w_cross);
            let b = weighted_sum(g, own, &w_self);
            g.add(a, b)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn encoder_decoder_stack_with_embeddings() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let mut store = ParamStore::new(seed);
        let cfg = TransformerConfig { model_dim: 8, heads: 2, ff_dim: 12, encoder_layers: 1, decoder_layers: 1, dropout: 0.0 };
        let emb = Embedding::new(&mut store, &mut rng, "emb", 7, 8).unwrap();
        let enc = Encoder::new(&mut store, &mut rng, "enc", &cfg).unwrap();
        let dec = Decoder::new(&mut store, &mut rng, "dec", &cfg).unwrap();
        let proj = neural::Linear::new(&mut store, &mut rng, "out", 8, 7, true).unwrap();
        let src: Vec<usize> = (0..4).map(|_| rng.gen_range(0..7)).collect();
        let tgt_in: Vec<usize> = (0..3).map(|_| rng.gen_range(0..7)).collect();
        let tgt_out: Vec<usize> = (0..3).map(|_| rng.gen_range(0..7)).collect();
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let x = emb.forward(g, &src).unwrap();
            let pe = g.constant(neural::positional_encoding(4, 8));
            let x = g.add(x, pe);
            let memory = enc.forward(g, x, 0.0).unwrap();
            let y = emb.forward(g, &tgt_in).unwrap();
            let h = dec.forward(g, y, memory, 0.0).unwrap();
            let logits = proj.forward(g, h).unwrap();
            g.cross_entropy(logits, &tgt_out)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn binary_cross_entropy_and_hinge() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let mut store = ParamStore::new(seed);
        let z = store.add("z", init::normal(&mut rng, 6, 1, 2.0)).unwrap();
        let s = store.add("s", init::normal(&mut rng, 4, 1, 1.0)).unwrap();
        let labels: Vec<f64> = (0..6).map(|_| f64::from(rng.gen_range(0..2u8))).collect();
        // Pairwise differences with random ±1 labels; margins kept away from the kink.
        let pairs = Matrix::from_shape_fn((6, 4), |(r, c)| match (r % 3 == c, (r + 1) % 4 == c) {
            (true, _) => if r % 2 == 0 { 1.0 } else { -1.0 },
            (_, true) => if r % 2 == 0 { -1.0 } else { 1.0 },
            _ => 0.0,
        });
        let ids: Vec<_> = store.ids().collect();
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let zv = g.param(z);
            let bce = g.bce_with_logits(zv, &labels);
            let sv = g.param(s);
            let p = g.constant(pairs.clone());
            let margins = g.matmul(p, sv);
            let scaled = g.scale(margins, 0.1);
            let hinge = g.hinge_mean(scaled);
            g.add(bce, hinge)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn dropout_with_fixed_mask_seed() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut store = ParamStore::new(seed);
        let x = store.add("x", init::normal(&mut rng, 3, 5, 1.0)).unwrap();
        let w = init::normal(&mut rng, 3, 5, 1.0);
        let ids: Vec<_> = store.ids().collect();
        // gradcheck builds inference graphs; emulate a fixed mask explicitly.
        let mask = {
            let mut g = Graph::training(&store, seed);
            let ones = g.constant(Matrix::ones((3, 5)));
            let d = g.dropout(ones, 0.4);
            g.value(d).clone()
        };
        let reports = gradcheck::check(&mut store, &ids, H, |g| {
            let xv = g.param(x);
            let m = g.constant(mask.clone());
            let y = g.mul(xv, m);
            let t = g.tanh(y);
            weighted_sum(g, t, &w)
        });
        assert_all_pass(&reports);
    }
}

#[test]
fn identical_seeds_train_to_identical_bits() {
    let train = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut store = ParamStore::new(42);
        let spec = MlpSpec {
            input: 3,
            hidden: vec![8, 8],
            output: 1,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Identity,
        };
        let mlp = Mlp::new(&mut store, &mut rng, "m", spec).unwrap();
        let mut adam = AdamState::new(AdamConfig::with_lr(0.01), &store);
        for step in 0..25u64 {
            let x = init::normal(&mut rng, 4, 3, 1.0);
            let grads = {
                let mut g = Graph::training(&store, step);
                let xv = g.constant(x);
                let y = mlp.forward(&mut g, xv, 0.2).unwrap();
                let l = g.hinge_mean(y);
                g.backward(l)
            };
            adam.step(&mut store, &grads).unwrap();
        }
        store
    };
    let (a, b) = (train(), train());
    for ((_, _, va), (_, _, vb)) in a.iter().zip(b.iter()) {
        let bits = |m: &Matrix| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(va), bits(vb));
    }
}
