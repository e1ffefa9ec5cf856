//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simplify::pipeline::{CorpusPair, Partition, ORIGINAL};

const NOUNS: &[&str] = &[
    "farmer", "doctor", "teacher", "river", "market", "village", "horse", "boat", "garden", "house", "bridge", "child",
    "painter", "soldier", "baker", "window", "road", "school", "station", "forest",
];
const ADJECTIVES: &[&str] = &["old", "young", "tall", "quiet", "famous", "busy", "small", "clever"];
/// Past-tense verbs; the first six have a plainer synonym in the references.
const VERBS: &[(&str, &str)] = &[
    ("purchased", "bought"),
    ("constructed", "built"),
    ("observed", "saw"),
    ("departed", "left"),
    ("inspected", "checked"),
    ("assisted", "helped"),
    ("visited", "visited"),
    ("painted", "painted"),
    ("cleaned", "cleaned"),
    ("followed", "followed"),
    ("carried", "carried"),
    ("watched", "watched"),
];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty")
}

/// Distinct nouns so that clause subjects and objects differ.
fn nouns<R: Rng>(rng: &mut R, n: usize) -> Vec<&'static str> {
    NOUNS.choose_multiple(rng, n).copied().collect()
}

fn verb<R: Rng>(rng: &mut R) -> (&'static str, &'static str) {
    *VERBS.choose(rng).expect("non-empty")
}

/// One (complex, simple) pair from one of three clause templates.
pub fn multi_clause_pair<R: Rng>(rng: &mut R) -> (String, String) {
    let n = nouns(rng, 5);
    let a = pick(rng, ADJECTIVES);
    let (v1, s1) = verb(rng);
    let (v2, s2) = verb(rng);
    let (v3, s3) = verb(rng);
    match rng.gen_range(0..3) {
        0 => (
            format!(
                "the {a} {} , who {v1} the {} , {v2} the {} , and the {} {v3} the {} .",
                n[0], n[1], n[2], n[3], n[4]
            ),
            format!("the {} {s2} the {} . the {} {s1} the {} . the {} {s3} the {} .", n[0], n[2], n[0], n[1], n[3], n[4]),
        ),
        1 => (
            format!("because the {} {v1} the {} , the {a} {} {v2} the {} , but the {} {v3} .", n[0], n[1], n[2], n[3], n[4]),
            format!("the {} {s2} the {} . the {} {s1} the {} . the {} {s3} .", n[2], n[3], n[0], n[1], n[4]),
        ),
        _ => (
            format!("the {} ( a {a} {} ) {v1} the {} near the {} .", n[0], n[1], n[2], n[3]),
            format!("the {} {s1} the {} near the {} .", n[0], n[2], n[3]),
        ),
    }
}

/// `train + dev + test` pairs with partition tags, in that order.
pub fn multi_clause_corpus(seed: u64, train: usize, dev: usize, test: usize) -> Vec<CorpusPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = [(Partition::Train, train), (Partition::Dev, dev), (Partition::Test, test)];
    parts
        .into_iter()
        .flat_map(|(p, n)| std::iter::repeat_n(p, n))
        .map(|partition| {
            let (complex, simple) = multi_clause_pair(&mut rng);
            CorpusPair { complex, simple: vec![simple], partition, provenance: ORIGINAL.to_string() }
        })
        .collect()
}

/// Desk-scale pipeline settings small enough for test runs.
pub fn small_pipeline_config() -> simplify::pipeline::PipelineConfig {
    let mut cfg = simplify::pipeline::PipelineConfig::default();
    let m = &mut cfg.paraphraser.model;
    m.transformer.model_dim = 32;
    m.transformer.heads = 4;
    m.transformer.ff_dim = 64;
    m.transformer.encoder_layers = 1;
    m.transformer.decoder_layers = 1;
    m.copy_hidden = vec![32, 32, 32];
    m.epochs = 4;
    m.warmup_steps = 20;
    m.dev_limit = 10;
    cfg.paraphraser.delsplit_width = 4;
    cfg.paraphraser.decode.beam_width = 4;
    cfg
}
