#![allow(dead_code)]

use std::collections::BTreeMap;

use phonoscope_core::corpus::{Corpus, FeatureMatrix, PhoneSegment, UtteranceRecord};
use phonoscope_core::phonology::{PhoneMapping, PhonoFeatureTable};
use phonoscope_core::synth::{generate, SynthConfig, SynthCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn toy() -> (PhonoFeatureTable, PhoneMapping) {
    let t = PhonoFeatureTable::toy();
    let m = PhoneMapping::identity(&t);
    (t, m)
}

pub fn oracle(sigma: f64, seed: u64) -> SynthCorpus {
    let cfg = SynthConfig { noise_sigma: sigma, seed, ..Default::default() };
    generate(&cfg, &PhonoFeatureTable::toy()).unwrap()
}

pub fn small_oracle(sigma: f64, seed: u64, n_utterances: usize) -> SynthCorpus {
    let cfg = SynthConfig { noise_sigma: sigma, seed, n_utterances, ..Default::default() };
    generate(&cfg, &PhonoFeatureTable::toy()).unwrap()
}

/// One utterance per entry; every segment gets `frames` random rows.
pub fn random_corpus(utterances: &[Vec<&str>], frames: usize, dim: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = utterances
        .iter()
        .enumerate()
        .map(|(i, phones)| {
            let t = phones.len() * frames;
            let data: Vec<f32> = (0..t * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let segments =
                phones.iter().enumerate().map(|(j, p)| PhoneSegment::new(*p, j * frames, (j + 1) * frames)).collect();
            UtteranceRecord {
                utterance_id: format!("u{i}"),
                features: BTreeMap::from([(0, FeatureMatrix::new(0, t, dim, data).unwrap())]),
                segments,
                split_tag: "train".into(),
            }
        })
        .collect();
    Corpus::from_records("random", records).unwrap()
}

pub fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}
