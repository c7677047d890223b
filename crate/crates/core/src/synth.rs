//! Synthetic corpora with planted positional phonological structure.
//!
//! Each frame of the phone at sequence index `s` is
//!
//! ```text
//! r[t] = Σ_{k=-2..2} w_k Σ_f sign(φ_f(p^{s+k})) u_{k,f} + ε,   ε ~ N(0, σ² I)
//! ```
//!
//! where `{u_{k,f}}` is an orthonormal set drawn by QR of a Gaussian matrix,
//! `sign` maps `+/−/0` to `+1/−1/0` and out-of-range neighbours contribute
//! nothing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_corpus, Corpus, CorpusError, FeatureMatrix, PhoneSegment, UtteranceRecord};
use crate::phonology::{PhonoFeatureTable, PhonologyError};
use crate::phonovec::{
    analysis_features, read_vector_set, write_vector_set, PhonologicalVector, PhonovecError, PositionalVectorSet,
    VectorCell, POSITIONS,
};
use crate::rng::{label_key, stream_rng};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.phf";
pub const CONFIG_FILE: &str = "synth_config.json";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("dimension {dim} is smaller than 5 × {features} planted features")]
    DimensionTooSmall { dim: usize, features: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no ground truth under {0}")]
    MissingGroundTruth(PathBuf),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Phonovec(#[from] PhonovecError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dim: usize,
    pub n_utterances: usize,
    /// Inclusive range of phones per utterance.
    pub phones_per_utterance: (usize, usize),
    /// Inclusive range of frames per phone.
    pub frames_per_phone: (usize, usize),
    /// `[w₋₂, w₋₁, w₀, w₊₁, w₊₂]`.
    pub position_weights: [f64; 5],
    pub noise_sigma: f64,
    /// Layers `0..n_layers`, sharing the planted basis with independent noise.
    pub n_layers: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            n_utterances: 500,
            phones_per_utterance: (10, 20),
            frames_per_phone: (3, 8),
            position_weights: [0.25, 0.5, 1.0, 0.5, 0.25],
            noise_sigma: 0.05,
            n_layers: 1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn check(&self, n_features: usize) -> Result<(), SynthError> {
        if self.dim < 5 * n_features {
            return Err(SynthError::DimensionTooSmall { dim: self.dim, features: n_features });
        }
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.into()));
        if self.position_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("position weights must be finite and non-negative");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be finite and non-negative");
        }
        let (p0, p1) = self.phones_per_utterance;
        let (f0, f1) = self.frames_per_phone;
        if p0 == 0 || p0 > p1 || f0 == 0 || f0 > f1 {
            return bad("phone and frame ranges must be non-empty with a positive lower bound");
        }
        if self.n_utterances == 0 || self.n_layers == 0 {
            return bad("n_utterances and n_layers must be positive");
        }
        Ok(())
    }
}

/// Split tag of utterance `i`: every fifth utterance is held out.
pub fn split_tag(i: usize) -> &'static str {
    if i % 5 == 4 {
        "test"
    } else {
        "train"
    }
}

/// A generated corpus with its planted structure.
#[derive(Debug)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// Unscaled orthonormal basis, rows ordered position-major over
    /// `(position, feature)`, shape `(5·F) × D`.
    pub basis: Vec<Vec<f64>>,
    /// Planted `w_k · u_{k,f}` per layer.
    pub ground_truth: PositionalVectorSet,
}

/// Orthonormal `count × dim` rows from the thin QR of a Gaussian matrix.
pub fn orthonormal_basis<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let g = DMatrix::<f64>::from_fn(dim, count, |_, _| rng.sample(StandardNormal));
    let q = g.qr().q();
    (0..count).map(|j| q.column(j).iter().copied().collect()).collect()
}

/// Generates the corpus in memory.
pub fn generate(cfg: &SynthConfig, table: &PhonoFeatureTable) -> Result<SynthCorpus, SynthError> {
    let features = analysis_features();
    cfg.check(features.len())?;
    let columns: Vec<usize> =
        features.iter().map(|f| table.feature_index(&f.column)).collect::<Result<_, PhonologyError>>()?;
    let phones = table.phones();
    let signs: Vec<Vec<f64>> = phones
        .iter()
        .map(|p| {
            let row = table.row(p).expect("phone from table");
            columns.iter().map(|&c| row[c].sign()).collect()
        })
        .collect();

    let nf = features.len();
    let basis = orthonormal_basis(POSITIONS.len() * nf, cfg.dim, &mut stream_rng(cfg.seed, &[label_key("basis")]));
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");

    let mut records = Vec::with_capacity(cfg.n_utterances);
    for i in 0..cfg.n_utterances {
        let mut rng = stream_rng(cfg.seed, &[label_key("utterance"), i as u64]);
        let n_phones = rng.random_range(cfg.phones_per_utterance.0..=cfg.phones_per_utterance.1);
        let seq: Vec<usize> = (0..n_phones).map(|_| rng.random_range(0..phones.len())).collect();
        let lens: Vec<usize> =
            (0..n_phones).map(|_| rng.random_range(cfg.frames_per_phone.0..=cfg.frames_per_phone.1)).collect();

        // noiseless representation per phone position
        let clean: Vec<Vec<f64>> = (0..n_phones)
            .map(|s| {
                let mut v = vec![0.0; cfg.dim];
                for (ki, &k) in POSITIONS.iter().enumerate() {
                    let t = s as i64 + k as i64;
                    let w = cfg.position_weights[ki];
                    if t < 0 || t >= n_phones as i64 || w == 0.0 {
                        continue;
                    }
                    for (fi, &sg) in signs[seq[t as usize]].iter().enumerate() {
                        if sg != 0.0 {
                            let u = &basis[ki * nf + fi];
                            v.iter_mut().zip(u).for_each(|(a, b)| *a += w * sg * b);
                        }
                    }
                }
                v
            })
            .collect();

        let mut segments = Vec::with_capacity(n_phones);
        let mut start = 0;
        for (s, &len) in lens.iter().enumerate() {
            segments.push(PhoneSegment::new(phones[seq[s]].clone(), start, start + len));
            start += len;
        }
        let total = start;

        let mut feats = BTreeMap::new();
        for layer in 0..cfg.n_layers as u32 {
            let mut nrng = stream_rng(cfg.seed, &[label_key("noise"), i as u64, layer as u64]);
            let mut data = Vec::with_capacity(total * cfg.dim);
            for (s, &len) in lens.iter().enumerate() {
                for _ in 0..len {
                    for &c in &clean[s] {
                        let e = if cfg.noise_sigma > 0.0 { noise.sample(&mut nrng) } else { 0.0 };
                        data.push((c + e) as f32);
                    }
                }
            }
            feats.insert(layer, FeatureMatrix::new(layer, total, cfg.dim, data)?);
        }
        records.push(UtteranceRecord {
            utterance_id: format!("synth{i:05}"),
            features: feats,
            segments,
            split_tag: split_tag(i).into(),
        });
    }
    let mut corpus = Corpus::from_records("synthetic", records)?;
    corpus.frame_hop_info = format!("synthetic frames, seed {}", cfg.seed);

    let mut cells = Vec::with_capacity(nf * POSITIONS.len());
    for (fi, f) in features.iter().enumerate() {
        for (ki, &k) in POSITIONS.iter().enumerate() {
            let w = cfg.position_weights[ki];
            cells.push(VectorCell {
                feature: f.clone(),
                position: k,
                vector: Some(PhonologicalVector {
                    feature: f.name.clone(),
                    position: k,
                    layer: 0,
                    vector: basis[ki * nf + fi].iter().map(|x| w * x).collect(),
                    n_plus: 0,
                    n_minus: 0,
                }),
                absent_reason: None,
            });
        }
    }
    let ground_truth = PositionalVectorSet { layer: 0, dim: cfg.dim, cells };
    Ok(SynthCorpus { corpus, basis, ground_truth })
}

/// Generates the corpus and writes it, the ground truth and the resolved
/// configuration under `out_dir`. Returns the manifest path.
pub fn generate_synthetic_corpus(
    cfg: &SynthConfig,
    table: &PhonoFeatureTable,
    out_dir: &Path,
) -> Result<(PathBuf, SynthCorpus), SynthError> {
    let synth = generate(cfg, table)?;
    let manifest = write_corpus(out_dir, &synth.corpus)?;
    write_vector_set(&out_dir.join(GROUND_TRUTH_FILE), &synth.ground_truth)?;
    let cpath = out_dir.join(CONFIG_FILE);
    let json = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(&cpath, json + "\n").map_err(|source| SynthError::Io { path: cpath, source })?;
    Ok((manifest, synth))
}

/// Planted `w_k · u_{k,f}` written next to a generated corpus.
pub fn ground_truth_vectors(out_dir: &Path) -> Result<PositionalVectorSet, SynthError> {
    let path = out_dir.join(GROUND_TRUTH_FILE);
    if !path.is_file() {
        return Err(SynthError::MissingGroundTruth(out_dir.to_path_buf()));
    }
    Ok(read_vector_set(&path)?)
}
