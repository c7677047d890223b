//! Position-indexed phonological vectors by difference of means, plus the
//! similarity, orthogonality and norm summaries built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{phf, Corpus, CorpusError, FeatureMatrix, PhfError};
use crate::phonology::{FeatureValue, NaturalClass, PhoneMapping, PhonoFeatureTable, PhonologyError};
use crate::pooling::{self, PoolingKind};
use crate::rng::{label_key, stream_rng};
use crate::stats::VectorAccumulator;
use crate::vector::{cosine, norm};

/// Relative phone positions analysed.
pub const POSITIONS: [i32; 5] = [-2, -1, 0, 1, 2];
pub const DEFAULT_MIN_SAMPLES: usize = 25;

#[derive(Debug, Error)]
pub enum PhonovecError {
    #[error("{feature}@{position:+}: only {count} samples on the {side} side (need {min})")]
    InsufficientSamples { feature: String, position: i32, side: Side, count: usize, min: usize },
    #[error("no vector for {feature}@{position:+}")]
    MissingVector { feature: String, position: i32 },
    #[error("vector for {feature}@{position:+} is zero")]
    ZeroVector { feature: String, position: i32 },
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Phf { path: PathBuf, source: PhfError },
    #[error("{path}: {reason}")]
    Sidecar { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

/// The eight analysis features and their table columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnalysisFeature {
    High,
    Low,
    Back,
    Round,
    Nasal,
    Sonorant,
    Strident,
    Voicing,
}

impl AnalysisFeature {
    pub const ALL: [AnalysisFeature; 8] = [
        AnalysisFeature::High,
        AnalysisFeature::Low,
        AnalysisFeature::Back,
        AnalysisFeature::Round,
        AnalysisFeature::Nasal,
        AnalysisFeature::Sonorant,
        AnalysisFeature::Strident,
        AnalysisFeature::Voicing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisFeature::High => "high",
            AnalysisFeature::Low => "low",
            AnalysisFeature::Back => "back",
            AnalysisFeature::Round => "round",
            AnalysisFeature::Nasal => "nasal",
            AnalysisFeature::Sonorant => "sonorant",
            AnalysisFeature::Strident => "strident",
            AnalysisFeature::Voicing => "voicing",
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            AnalysisFeature::High => "hi",
            AnalysisFeature::Low => "lo",
            AnalysisFeature::Back => "back",
            AnalysisFeature::Round => "round",
            AnalysisFeature::Nasal => "nas",
            AnalysisFeature::Sonorant => "son",
            AnalysisFeature::Strident => "strid",
            AnalysisFeature::Voicing => "voi",
        }
    }

    pub fn class(self) -> NaturalClass {
        match self {
            AnalysisFeature::High | AnalysisFeature::Low | AnalysisFeature::Back | AnalysisFeature::Round => {
                NaturalClass::Vowel
            }
            _ => NaturalClass::Consonant,
        }
    }

    pub fn spec(self) -> FeatureSpec {
        FeatureSpec { name: self.name().into(), column: self.column().into(), class: Some(self.class()) }
    }
}

/// A feature to extract: display name, table column and optional natural
/// class restriction on the conditioning phone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub column: String,
    pub class: Option<NaturalClass>,
}

impl FeatureSpec {
    /// Unrestricted feature named after its column.
    pub fn column(column: &str) -> Self {
        Self { name: column.into(), column: column.into(), class: None }
    }

    /// Looks up one of the eight analysis features by name or column,
    /// falling back to an unrestricted table column.
    pub fn parse(s: &str) -> Self {
        AnalysisFeature::ALL
            .iter()
            .find(|f| f.name() == s || f.column() == s)
            .map(|f| f.spec())
            .unwrap_or_else(|| Self::column(s))
    }
}

pub fn analysis_features() -> Vec<FeatureSpec> {
    AnalysisFeature::ALL.iter().map(|f| f.spec()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonologicalVector {
    pub feature: String,
    pub position: i32,
    pub layer: u32,
    pub vector: Vec<f64>,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// One `(feature, position)` cell: a vector or the reason it is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCell {
    pub feature: FeatureSpec,
    pub position: i32,
    pub vector: Option<PhonologicalVector>,
    pub absent_reason: Option<String>,
}

/// Vectors for every `(feature, position)` cell of one layer, in
/// feature-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalVectorSet {
    pub layer: u32,
    pub dim: usize,
    pub cells: Vec<VectorCell>,
}

impl PositionalVectorSet {
    pub fn get(&self, feature: &str, position: i32) -> Option<&PhonologicalVector> {
        self.cell(feature, position).and_then(|c| c.vector.as_ref())
    }

    pub fn cell(&self, feature: &str, position: i32) -> Option<&VectorCell> {
        self.cells.iter().find(|c| c.feature.name == feature && c.position == position)
    }

    pub fn require(&self, feature: &str, position: i32) -> Result<&PhonologicalVector, PhonovecError> {
        self.get(feature, position)
            .ok_or_else(|| PhonovecError::MissingVector { feature: feature.into(), position })
    }

    pub fn features(&self) -> Vec<FeatureSpec> {
        let mut out: Vec<FeatureSpec> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.feature) {
                out.push(c.feature.clone());
            }
        }
        out
    }

    pub fn positions(&self) -> Vec<i32> {
        let mut out: Vec<i32> = self.cells.iter().map(|c| c.position).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn present(&self) -> impl Iterator<Item = (&VectorCell, &PhonologicalVector)> {
        self.cells.iter().filter_map(|c| c.vector.as_ref().map(|v| (c, v)))
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.cells {
            if let Some(v) = &mut c.vector {
                v.vector.iter_mut().for_each(|x| *x *= factor);
            }
        }
        out
    }
}

/// Options shared by the extraction entry points.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub pooling: PoolingKind,
    pub min_samples: usize,
    /// Seed for random pooling; each segment owns a stream keyed by
    /// `(utterance_id, segment index)`.
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { pooling: PoolingKind::Center, min_samples: DEFAULT_MIN_SAMPLES, seed: 0 }
    }
}

struct CellAcc {
    plus: VectorAccumulator,
    minus: VectorAccumulator,
}

struct ResolvedFeature {
    column: usize,
    class: Option<NaturalClass>,
}

/// Extracts every `(feature, position)` vector of `layer` in one pass.
///
/// For each segment `p⁰` whose phone maps to the table, its pooled
/// representation joins the plus (minus) population of cell `(f, k)` when the
/// phone at offset `k` exists, maps, belongs to `f`'s class and has `f = +`
/// (`f = −`). Cells with fewer than `min_samples` on either side are absent.
#[allow(clippy::too_many_arguments)]
pub fn extract_vector_set(
    corpus: &Corpus,
    split: Option<&str>,
    layer: u32,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    features: &[FeatureSpec],
    positions: &[i32],
    opts: &ExtractOptions,
) -> Result<PositionalVectorSet, PhonovecError> {
    let dim = corpus.dim(layer).ok_or_else(|| CorpusError::LayerMissing { utterance: corpus.name.clone(), layer })?;
    let accs = accumulate(corpus, split, layer, table, mapping, features, positions, opts)?;
    let mut cells = Vec::with_capacity(accs.len());
    for (fi, f) in features.iter().enumerate() {
        for (pi, &k) in positions.iter().enumerate() {
            let (vector, absent_reason) = match finish_cell(f, k, layer, &accs[fi * positions.len() + pi], opts) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            cells.push(VectorCell { feature: f.clone(), position: k, vector, absent_reason });
        }
    }
    Ok(PositionalVectorSet { layer, dim, cells })
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    corpus: &Corpus,
    split: Option<&str>,
    layer: u32,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    features: &[FeatureSpec],
    positions: &[i32],
    opts: &ExtractOptions,
) -> Result<Vec<CellAcc>, PhonovecError> {
    let dim = corpus.dim(layer).ok_or_else(|| CorpusError::LayerMissing { utterance: corpus.name.clone(), layer })?;
    let resolved: Vec<ResolvedFeature> = features
        .iter()
        .map(|f| Ok(ResolvedFeature { column: table.feature_index(&f.column)?, class: f.class }))
        .collect::<Result<_, PhonologyError>>()?;
    let mut accs: Vec<CellAcc> = (0..features.len() * positions.len())
        .map(|_| CellAcc { plus: VectorAccumulator::new(dim), minus: VectorAccumulator::new(dim) })
        .collect();

    for (_, u) in corpus.split(split) {
        let m = u.layer(layer)?;
        // mapped phone features and class per segment
        let info: Vec<Option<(&[FeatureValue], NaturalClass)>> = u
            .segments
            .iter()
            .map(|s| {
                let ipa = mapping.map_label(&s.phone)?;
                let row = table.row(ipa).ok()?;
                let class = table.natural_class_of(ipa).ok()?;
                Some((row, class))
            })
            .collect();
        for (s, seg) in u.segments.iter().enumerate() {
            if info[s].is_none() {
                continue;
            }
            let rows = m.slice(seg.start_frame, seg.end_frame);
            let v = match opts.pooling {
                PoolingKind::Random => {
                    let mut rng = stream_rng(opts.seed, &[label_key("phonovec"), label_key(&u.utterance_id), s as u64]);
                    pooling::random_pool(rows, &mut rng).map(|d| d.vector)
                }
                PoolingKind::Mean => pooling::mean_pool(rows),
                PoolingKind::Center => pooling::center_pool(rows),
            }
            .expect("validated segments are non-empty");
            for (pi, &k) in positions.iter().enumerate() {
                let t = s as i64 + k as i64;
                if t < 0 || t >= info.len() as i64 {
                    continue;
                }
                let Some((row, class)) = info[t as usize] else { continue };
                for (fi, f) in resolved.iter().enumerate() {
                    if f.class.is_some_and(|c| c != class) {
                        continue;
                    }
                    let acc = &mut accs[fi * positions.len() + pi];
                    match row[f.column] {
                        FeatureValue::Plus => acc.plus.add(&v),
                        FeatureValue::Minus => acc.minus.add(&v),
                        FeatureValue::Zero => {}
                    }
                }
            }
        }
    }

    Ok(accs)
}

fn finish_cell(
    f: &FeatureSpec,
    position: i32,
    layer: u32,
    acc: &CellAcc,
    opts: &ExtractOptions,
) -> Result<PhonologicalVector, PhonovecError> {
    let (n_plus, n_minus) = (acc.plus.count(), acc.minus.count());
    for (side, count) in [(Side::Plus, n_plus), (Side::Minus, n_minus)] {
        if count < opts.min_samples.max(1) {
            return Err(PhonovecError::InsufficientSamples {
                feature: f.name.clone(),
                position,
                side,
                count,
                min: opts.min_samples,
            });
        }
    }
    let (mp, mm) = (acc.plus.mean().expect("non-empty"), acc.minus.mean().expect("non-empty"));
    Ok(PhonologicalVector {
        feature: f.name.clone(),
        position,
        layer,
        vector: mp.iter().zip(&mm).map(|(a, b)| a - b).collect(),
        n_plus,
        n_minus,
    })
}

/// Single-cell extraction; fails instead of marking the cell absent.
#[allow(clippy::too_many_arguments)]
pub fn extract_phonological_vector(
    corpus: &Corpus,
    split: Option<&str>,
    feature: &FeatureSpec,
    position: i32,
    layer: u32,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    opts: &ExtractOptions,
) -> Result<PhonologicalVector, PhonovecError> {
    let accs = accumulate(corpus, split, layer, table, mapping, std::slice::from_ref(feature), &[position], opts)?;
    finish_cell(feature, position, layer, &accs[0], opts)
}

/// Runs [`extract_vector_set`] for several layers in parallel.
#[allow(clippy::too_many_arguments)]
pub fn extract_layers(
    corpus: &Corpus,
    split: Option<&str>,
    layers: &[u32],
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    features: &[FeatureSpec],
    positions: &[i32],
    opts: &ExtractOptions,
) -> Result<Vec<PositionalVectorSet>, PhonovecError> {
    layers
        .par_iter()
        .map(|&l| extract_vector_set(corpus, split, l, table, mapping, features, positions, opts))
        .collect()
}

pub fn cell_label(feature: &str, position: i32) -> String {
    format!("{feature}@{position:+}")
}

/// Symmetric cosine matrix over the requested cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub layer: u32,
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Cosine between every pair of `(feature, position)` cells, positions
/// outermost. The diagonal is exactly 1.
pub fn vector_similarity_matrix(
    set: &PositionalVectorSet,
    features: &[FeatureSpec],
    positions: &[i32],
) -> Result<SimilarityMatrix, PhonovecError> {
    let mut vecs = Vec::new();
    let mut labels = Vec::new();
    for &k in positions {
        for f in features {
            let v = set.require(&f.name, k)?;
            if norm(&v.vector) == 0.0 {
                return Err(PhonovecError::ZeroVector { feature: f.name.clone(), position: k });
            }
            labels.push(cell_label(&f.name, k));
            vecs.push(&v.vector);
        }
    }
    let n = vecs.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            let c = cosine(vecs[i], vecs[j]).expect("non-zero vectors");
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(SimilarityMatrix { layer: set.layer, labels, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalitySummary {
    pub layer: u32,
    /// Mean |cos| over pairs sharing natural class and position.
    pub within: Option<f64>,
    /// Mean |cos| over pairs at different positions.
    pub across: Option<f64>,
    pub n_within: usize,
    pub n_across: usize,
}

/// Within- versus across-subspace mean absolute cosine for one layer.
/// Same-position pairs of different classes count toward neither side.
/// Absent and zero vectors are left out; a summary with no pairs on one side
/// reports that side as `None`.
pub fn positional_orthogonality_summary(set: &PositionalVectorSet, positions: &[i32]) -> OrthogonalitySummary {
    let cells: Vec<(&VectorCell, &PhonologicalVector)> = set
        .present()
        .filter(|(c, v)| positions.contains(&c.position) && norm(&v.vector) > 0.0)
        .collect();
    let (mut within, mut across) = (Vec::new(), Vec::new());
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let (ci, vi) = cells[i];
            let (cj, vj) = cells[j];
            let c = cosine(&vi.vector, &vj.vector).expect("non-zero vectors").abs();
            if ci.position != cj.position {
                across.push(c);
            } else if ci.feature.class == cj.feature.class {
                within.push(c);
            }
        }
    }
    let avg = |xs: &[f64]| (!xs.is_empty()).then(|| crate::stats::mean(xs));
    OrthogonalitySummary {
        layer: set.layer,
        within: avg(&within),
        across: avg(&across),
        n_within: within.len(),
        n_across: across.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub layer: u32,
    pub position: i32,
    /// Mean L2 norm over the present features, in corpus feature units.
    pub mean_norm: Option<f64>,
    pub n_features: usize,
}

/// Mean vector norm per position.
pub fn vector_norm_profile(set: &PositionalVectorSet, positions: &[i32]) -> Vec<NormEntry> {
    positions
        .iter()
        .map(|&k| {
            let norms: Vec<f64> =
                set.present().filter(|(c, _)| c.position == k).map(|(_, v)| norm(&v.vector)).collect();
            NormEntry {
                layer: set.layer,
                position: k,
                mean_norm: (!norms.is_empty()).then(|| crate::stats::mean(&norms)),
                n_features: norms.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SidecarRow {
    feature: String,
    column: String,
    class: Option<NaturalClass>,
    position: i32,
    present: bool,
    n_plus: usize,
    n_minus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    absent_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    layer: u32,
    dim: usize,
    rows: Vec<SidecarRow>,
}

/// Sidecar path next to a vector-set `.phf` file.
pub fn sidecar_path(phf_path: &Path) -> PathBuf {
    phf_path.with_extension("json")
}

/// Writes the set as a `cells × D` `.phf` (absent rows zero) plus a JSON
/// sidecar naming the rows.
pub fn write_vector_set(phf_path: &Path, set: &PositionalVectorSet) -> Result<(), PhonovecError> {
    let mut data = Vec::with_capacity(set.cells.len() * set.dim);
    let mut rows = Vec::with_capacity(set.cells.len());
    for c in &set.cells {
        match &c.vector {
            Some(v) => data.extend(v.vector.iter().map(|&x| x as f32)),
            None => data.extend(std::iter::repeat_n(0.0f32, set.dim)),
        }
        rows.push(SidecarRow {
            feature: c.feature.name.clone(),
            column: c.feature.column.clone(),
            class: c.feature.class,
            position: c.position,
            present: c.vector.is_some(),
            n_plus: c.vector.as_ref().map_or(0, |v| v.n_plus),
            n_minus: c.vector.as_ref().map_or(0, |v| v.n_minus),
            absent_reason: c.absent_reason.clone(),
        });
    }
    let m = FeatureMatrix::new(set.layer, set.cells.len(), set.dim, data)?;
    phf::write_phf(phf_path, &m).map_err(|source| PhonovecError::Phf { path: phf_path.into(), source })?;
    let side = sidecar_path(phf_path);
    let json = serde_json::to_string_pretty(&Sidecar { layer: set.layer, dim: set.dim, rows }).expect("serializes");
    fs::write(&side, json + "\n").map_err(|source| PhonovecError::Io { path: side, source })
}

/// Reads a set written by [`write_vector_set`]. Values round-trip through
/// `f32`.
pub fn read_vector_set(phf_path: &Path) -> Result<PositionalVectorSet, PhonovecError> {
    let m = phf::read_phf(phf_path).map_err(|source| PhonovecError::Phf { path: phf_path.into(), source })?;
    let side = sidecar_path(phf_path);
    let text = fs::read_to_string(&side).map_err(|source| PhonovecError::Io { path: side.clone(), source })?;
    let sc: Sidecar = serde_json::from_str(&text)
        .map_err(|e| PhonovecError::Sidecar { path: side.clone(), reason: e.to_string() })?;
    if sc.rows.len() != m.rows() || sc.dim != m.cols() {
        return Err(PhonovecError::Sidecar {
            path: side,
            reason: format!("sidecar describes {}x{}, matrix is {}x{}", sc.rows.len(), sc.dim, m.rows(), m.cols()),
        });
    }
    let cells = sc
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let feature = FeatureSpec { name: r.feature.clone(), column: r.column, class: r.class };
            let vector = r.present.then(|| PhonologicalVector {
                feature: r.feature,
                position: r.position,
                layer: sc.layer,
                vector: m.row(i).iter().map(|&x| x as f64).collect(),
                n_plus: r.n_plus,
                n_minus: r.n_minus,
            });
            VectorCell { feature, position: r.position, vector, absent_reason: r.absent_reason }
        })
        .collect();
    Ok(PositionalVectorSet { layer: sc.layer, dim: sc.dim, cells })
}

/// Groups sets by layer for lookup.
pub fn by_layer(sets: Vec<PositionalVectorSet>) -> BTreeMap<u32, PositionalVectorSet> {
    sets.into_iter().map(|s| (s.layer, s)).collect()
}
