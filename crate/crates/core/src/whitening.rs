//! ZCA whitening and mask-filling similarity.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{phf, Corpus, CorpusManifest, FeatureMatrix, FrameRows, PhfError};
use crate::rng::{label_key, stream_rng};
use crate::stats::{mean, sample_std};
use crate::vector::cosine;

/// Regularizer relative to the mean eigenvalue.
pub const EPSILON_SCALE: f64 = 1e-5;
pub const DEFAULT_FIT_UTTERANCES: usize = 100;

#[derive(Debug, Error)]
pub enum WhiteningError {
    #[error("need {needed} utterances to fit, split has {available}")]
    InsufficientUtterances { needed: usize, available: usize },
    #[error("frame covariance is not finite")]
    NonFiniteCovariance,
    #[error("frame covariance is zero")]
    DegenerateCovariance,
    #[error("dimension {found} does not match the transform's {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("layer {0} missing")]
    LayerMissing(u32),
    #[error("pair {utterance}: mask is empty")]
    EmptyMask { utterance: String },
    #[error("pair {utterance}: {reason}")]
    InvalidPair { utterance: String, reason: String },
    #[error("{path}: {source}")]
    Phf { path: PathBuf, source: PhfError },
    #[error("{path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
}

/// `x ↦ W (x − μ)` with `W = U (Λ + εI)^{-1/2} Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub layer: u32,
    pub mean: Vec<f64>,
    /// Row-major `D × D`, symmetric.
    pub transform: Vec<f64>,
    pub dim: usize,
    pub epsilon: f64,
    pub n_frames_fit: usize,
}

impl WhiteningTransform {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.transform)
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>, WhiteningError> {
        if x.len() != self.dim {
            return Err(WhiteningError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.transform.chunks_exact(self.dim).map(|w| w.iter().zip(&c).map(|(a, b)| a * b).sum()).collect())
    }

    fn apply_f32(&self, x: &[f32]) -> Vec<f64> {
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(&a, m)| a as f64 - m).collect();
        self.transform.chunks_exact(self.dim).map(|w| w.iter().zip(&c).map(|(a, b)| a * b).sum()).collect()
    }

    /// `(rows − μ) Wᵀ`, one output row per input row.
    pub fn apply(&self, rows: FrameRows<'_>) -> Result<Vec<Vec<f64>>, WhiteningError> {
        if rows.cols() != self.dim {
            return Err(WhiteningError::DimensionMismatch { expected: self.dim, found: rows.cols() });
        }
        Ok(rows.iter().map(|r| self.apply_f32(r)).collect())
    }
}

/// Fits a whitener on every frame of `mats`, accumulated in the given order.
pub fn fit_zca_on(layer: u32, mats: &[&FeatureMatrix]) -> Result<WhiteningTransform, WhiteningError> {
    let dim = mats.first().map(|m| m.cols()).ok_or(WhiteningError::InsufficientUtterances { needed: 1, available: 0 })?;
    if let Some(m) = mats.iter().find(|m| m.cols() != dim) {
        return Err(WhiteningError::DimensionMismatch { expected: dim, found: m.cols() });
    }
    let n: usize = mats.iter().map(|m| m.rows()).sum();
    let mut x = DMatrix::<f64>::zeros(n, dim);
    let mut r = 0;
    for m in mats {
        for t in 0..m.rows() {
            for (j, &v) in m.row(t).iter().enumerate() {
                x[(r, j)] = v as f64;
            }
            r += 1;
        }
    }
    let mu: DVector<f64> = x.row_mean().transpose();
    for mut row in x.row_iter_mut() {
        row -= mu.transpose();
    }
    let cov = (x.transpose() * &x) / n as f64;
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(WhiteningError::NonFiniteCovariance);
    }
    let eig = SymmetricEigen::new(cov);
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let mean_eig = lambda.iter().sum::<f64>() / dim as f64;
    if mean_eig <= 0.0 {
        return Err(WhiteningError::DegenerateCovariance);
    }
    let epsilon = EPSILON_SCALE * mean_eig;
    let scale = DMatrix::from_diagonal(&DVector::from_iterator(dim, lambda.iter().map(|l| 1.0 / (l + epsilon).sqrt())));
    let u = &eig.eigenvectors;
    let w = u * scale * u.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let transform: Vec<f64> = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| w[(i, j)]).collect();
    Ok(WhiteningTransform { layer, mean: mu.iter().copied().collect(), transform, dim, epsilon, n_frames_fit: n })
}

/// Fits on `n_utterances` utterances of `split`, sampled without replacement
/// under `seed`.
pub fn fit_zca(
    corpus: &Corpus,
    split: Option<&str>,
    layer: u32,
    n_utterances: usize,
    seed: u64,
) -> Result<WhiteningTransform, WhiteningError> {
    let pool: Vec<&FeatureMatrix> = corpus
        .split(split)
        .map(|(_, u)| u.layer(layer).map_err(|_| WhiteningError::LayerMissing(layer)))
        .collect::<Result<_, _>>()?;
    fit_sampled(&pool, layer, n_utterances, seed)
}

fn fit_sampled(
    pool: &[&FeatureMatrix],
    layer: u32,
    n_utterances: usize,
    seed: u64,
) -> Result<WhiteningTransform, WhiteningError> {
    if n_utterances == 0 || pool.len() < n_utterances {
        return Err(WhiteningError::InsufficientUtterances { needed: n_utterances.max(1), available: pool.len() });
    }
    let mut rng = stream_rng(seed, &[label_key("zca"), layer as u64]);
    let mut picked = sample(&mut rng, pool.len(), n_utterances).into_vec();
    picked.sort_unstable();
    let mats: Vec<&FeatureMatrix> = picked.iter().map(|&i| pool[i]).collect();
    fit_zca_on(layer, &mats)
}

/// Original and masked-input representations of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedPair {
    pub utterance_id: String,
    /// layer → (original, masked)
    pub layers: BTreeMap<u32, (FeatureMatrix, FeatureMatrix)>,
    pub masked_frame_indices: Vec<usize>,
}

impl MaskedPair {
    pub fn validate(&self) -> Result<(), WhiteningError> {
        let bad = |reason: String| WhiteningError::InvalidPair { utterance: self.utterance_id.clone(), reason };
        if self.masked_frame_indices.is_empty() {
            return Err(WhiteningError::EmptyMask { utterance: self.utterance_id.clone() });
        }
        if self.masked_frame_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("masked_frame_indices must be strictly ascending".into()));
        }
        for (layer, (o, m)) in &self.layers {
            if o.rows() != m.rows() || o.cols() != m.cols() {
                return Err(bad(format!(
                    "layer {layer}: original {}x{} vs masked {}x{}",
                    o.rows(),
                    o.cols(),
                    m.rows(),
                    m.cols()
                )));
            }
            if let Some(&t) = self.masked_frame_indices.iter().find(|&&t| t >= o.rows()) {
                return Err(bad(format!("masked frame {t} outside 0..{}", o.rows())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFillResult {
    pub layer: u32,
    pub mean: f64,
    pub std: f64,
    pub n_frames: usize,
}

/// Per layer, mean and standard deviation of
/// `cos(whiten(orig[t]), whiten(masked[t]))` over all masked frames.
pub fn mask_filling_similarity(
    pairs: &[MaskedPair],
    whiteners: &BTreeMap<u32, WhiteningTransform>,
) -> Result<Vec<MaskFillResult>, WhiteningError> {
    for p in pairs {
        p.validate()?;
    }
    let mut out = Vec::new();
    for (&layer, w) in whiteners {
        let mut sims = Vec::new();
        for p in pairs {
            let (o, m) = p.layers.get(&layer).ok_or(WhiteningError::LayerMissing(layer))?;
            if o.cols() != w.dim {
                return Err(WhiteningError::DimensionMismatch { expected: w.dim, found: o.cols() });
            }
            for &t in &p.masked_frame_indices {
                if let Ok(c) = cosine(&w.apply_f32(o.row(t)), &w.apply_f32(m.row(t))) {
                    sims.push(c);
                }
            }
        }
        if sims.is_empty() {
            return Err(WhiteningError::EmptyMask { utterance: "all pairs".into() });
        }
        out.push(MaskFillResult { layer, mean: mean(&sims), std: sample_std(&sims), n_frames: sims.len() });
    }
    Ok(out)
}

/// Fits one whitener per layer on the original-signal matrices of `pairs`.
pub fn fit_on_originals(
    pairs: &[MaskedPair],
    layers: &[u32],
    n_utterances: usize,
    seed: u64,
) -> Result<BTreeMap<u32, WhiteningTransform>, WhiteningError> {
    layers
        .iter()
        .map(|&l| {
            let pool: Vec<&FeatureMatrix> = pairs
                .iter()
                .map(|p| p.layers.get(&l).map(|(o, _)| o).ok_or(WhiteningError::LayerMissing(l)))
                .collect::<Result<_, _>>()?;
            Ok((l, fit_sampled(&pool, l, n_utterances.min(pool.len()), seed)?))
        })
        .collect()
}

/// Pair manifest: one entry per utterance with per-layer original and masked
/// `.phf` files and a mask sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub corpus_name: String,
    pub layer_ids: Vec<u32>,
    pub pairs: Vec<PairEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub utterance_id: String,
    pub original_files: BTreeMap<u32, PathBuf>,
    pub masked_files: BTreeMap<u32, PathBuf>,
    pub mask_file: PathBuf,
}

/// Mask sidecar contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub utterance_id: String,
    pub masked_frame_indices: Vec<usize>,
}

pub fn load_pairs(manifest_path: &Path) -> Result<Vec<MaskedPair>, WhiteningError> {
    let merr = |path: &Path, reason: String| WhiteningError::Manifest { path: path.into(), reason };
    let text = fs::read_to_string(manifest_path).map_err(|e| merr(manifest_path, e.to_string()))?;
    let m: PairManifest = serde_json::from_str(&text).map_err(|e| merr(manifest_path, e.to_string()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let read = |rel: &Path| {
        let path = CorpusManifest::resolve(base, rel);
        phf::read_phf(&path).map_err(|source| WhiteningError::Phf { path, source })
    };
    let mut out = Vec::with_capacity(m.pairs.len());
    for e in &m.pairs {
        let mut layers = BTreeMap::new();
        for &l in &m.layer_ids {
            let missing = || merr(manifest_path, format!("pair {} lacks layer {l}", e.utterance_id));
            let o = read(e.original_files.get(&l).ok_or_else(missing)?)?;
            let k = read(e.masked_files.get(&l).ok_or_else(missing)?)?;
            layers.insert(l, (o, k));
        }
        let spath = CorpusManifest::resolve(base, &e.mask_file);
        let stext = fs::read_to_string(&spath).map_err(|err| merr(&spath, err.to_string()))?;
        let side: MaskSidecar = serde_json::from_str(&stext).map_err(|err| merr(&spath, err.to_string()))?;
        if side.utterance_id != e.utterance_id {
            return Err(merr(&spath, format!("sidecar names {}, expected {}", side.utterance_id, e.utterance_id)));
        }
        let pair = MaskedPair { utterance_id: e.utterance_id.clone(), layers, masked_frame_indices: side.masked_frame_indices };
        pair.validate()?;
        out.push(pair);
    }
    Ok(out)
}

/// Writes `pairs` under `dir` and returns the pair-manifest path.
pub fn write_pairs(dir: &Path, corpus_name: &str, pairs: &[MaskedPair]) -> Result<PathBuf, WhiteningError> {
    let merr = |path: &Path, reason: String| WhiteningError::Manifest { path: path.into(), reason };
    fs::create_dir_all(dir).map_err(|e| merr(dir, e.to_string()))?;
    let layer_ids: Vec<u32> = pairs.first().map(|p| p.layers.keys().copied().collect()).unwrap_or_default();
    let mut entries = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let stem = format!("{i:05}");
        let (mut original_files, mut masked_files) = (BTreeMap::new(), BTreeMap::new());
        for (&l, (o, m)) in &p.layers {
            for (tag, mat, files) in [("orig", o, &mut original_files), ("masked", m, &mut masked_files)] {
                let name = PathBuf::from(format!("{stem}.{tag}.L{l}.phf"));
                let path = dir.join(&name);
                phf::write_phf(&path, mat).map_err(|source| WhiteningError::Phf { path, source })?;
                files.insert(l, name);
            }
        }
        let mask_file = PathBuf::from(format!("{stem}.mask.json"));
        let side = MaskSidecar { utterance_id: p.utterance_id.clone(), masked_frame_indices: p.masked_frame_indices.clone() };
        let spath = dir.join(&mask_file);
        fs::write(&spath, serde_json::to_string_pretty(&side).expect("serializes") + "\n")
            .map_err(|e| merr(&spath, e.to_string()))?;
        entries.push(PairEntry { utterance_id: p.utterance_id.clone(), original_files, masked_files, mask_file });
    }
    let manifest = PairManifest { corpus_name: corpus_name.into(), layer_ids, pairs: entries };
    let mpath = dir.join("pairs.json");
    fs::write(&mpath, serde_json::to_string_pretty(&manifest).expect("serializes") + "\n")
        .map_err(|e| merr(&mpath, e.to_string()))?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_dimension_stays_finite() {
        let data: Vec<f32> = (0..200).flat_map(|i| [i as f32 * 0.1, 3.0, (i % 7) as f32]).collect();
        let m = FeatureMatrix::new(0, 200, 3, data).unwrap();
        let w = fit_zca_on(0, &[&m]).unwrap();
        assert!(w.transform.iter().all(|v| v.is_finite()));
        let z = w.apply_vec(&w.mean.clone()).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let m = FeatureMatrix::new(0, 4, 2, vec![1.0, 2.0, 3.0, 1.0, 0.0, 5.0, 2.0, 2.0]).unwrap();
        let w = fit_zca_on(0, &[&m]).unwrap();
        assert!(matches!(w.apply_vec(&[1.0]), Err(WhiteningError::DimensionMismatch { expected: 2, found: 1 })));
    }
}
