//! Corpus model: per-layer frame matrices, frame-indexed phone alignments and
//! the JSON manifest that ties them together.

pub mod alignment;
pub mod manifest;
pub mod phf;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use alignment::{read_alignment, write_alignment, AlignmentError};
pub use manifest::{CorpusManifest, UtteranceEntry};
pub use phf::{read_phf, write_phf, PhfError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read manifest {path}: {source}")]
    ManifestIo { path: PathBuf, source: std::io::Error },
    #[error("cannot parse manifest {path}: {source}")]
    ManifestParse { path: PathBuf, source: serde_json::Error },
    #[error("manifest: {0}")]
    InvalidManifest(String),
    #[error("utterance {utterance}: missing file {path}")]
    MissingFile { utterance: String, path: PathBuf },
    #[error("utterance {utterance}: {path}: {source}")]
    MalformedHeader { utterance: String, path: PathBuf, source: PhfError },
    #[error("utterance {utterance}: {path}: {source}")]
    MalformedAlignment { utterance: String, path: PathBuf, source: AlignmentError },
    #[error("utterance {utterance}: {path} declares layer {found}, manifest lists it as layer {expected}")]
    LayerIdMismatch { utterance: String, path: PathBuf, expected: u32, found: u32 },
    #[error("utterance {utterance}, layer {layer}: dimension {found} differs from {expected}")]
    DimensionMismatch { utterance: String, layer: u32, expected: usize, found: usize },
    #[error("utterance {utterance}, layer {layer}: {found} frames, other layers have {expected}")]
    FrameCountMismatch { utterance: String, layer: u32, expected: usize, found: usize },
    #[error("utterance {utterance}, segment {segment} ({phone}): end_frame {end_frame} exceeds frame count {frames}")]
    AlignmentOutOfRange { utterance: String, segment: usize, phone: String, end_frame: usize, frames: usize },
    #[error("utterance {utterance}, segment {segment} ({phone}): {reason}")]
    InvalidSegment { utterance: String, segment: usize, phone: String, reason: String },
    #[error("utterance {utterance}: layer {layer} not present")]
    LayerMissing { utterance: String, layer: u32 },
    #[error("invalid feature matrix: {0}")]
    InvalidMatrix(String),
    #[error("i/o error writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// A `T × D` matrix of frame representations for one layer, row-major `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    layer_id: u32,
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(layer_id: u32, rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, CorpusError> {
        if rows == 0 || cols == 0 {
            return Err(CorpusError::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(CorpusError::InvalidMatrix(format!(
                "{} values for shape {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(CorpusError::InvalidMatrix(format!(
                "non-finite value at row {}, col {}",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { layer_id, rows, cols, data })
    }

    pub(crate) fn from_parts_unchecked(layer_id: u32, rows: usize, cols: usize, data: Vec<f32>) -> Self {
        Self { layer_id, rows, cols, data }
    }

    pub fn layer_id(&self) -> u32 {
        self.layer_id
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    /// Rows `start..end` as a borrowed view.
    pub fn slice(&self, start: usize, end: usize) -> FrameRows<'_> {
        assert!(start < end && end <= self.rows, "row range {start}..{end} outside 0..{}", self.rows);
        FrameRows { data: &self.data[start * self.cols..end * self.cols], cols: self.cols }
    }

    pub fn all_rows(&self) -> FrameRows<'_> {
        self.slice(0, self.rows)
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        Self { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }
}

/// Borrowed run of consecutive frames, shape `(n, D)`.
#[derive(Debug, Clone, Copy)]
pub struct FrameRows<'a> {
    data: &'a [f32],
    cols: usize,
}

impl<'a> FrameRows<'a> {
    pub fn new(data: &'a [f32], cols: usize) -> Self {
        assert!(cols > 0 && data.len().is_multiple_of(cols), "data length must be a multiple of cols");
        Self { data, cols }
    }
    pub fn len(&self) -> usize {
        self.data.len() / self.cols
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn iter(&self) -> impl Iterator<Item = &'a [f32]> + 'a {
        self.data.chunks_exact(self.cols)
    }
}

/// Aligned phone with frame span `[start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoneSegment {
    pub phone: String,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl PhoneSegment {
    pub fn new(phone: impl Into<String>, start_frame: usize, end_frame: usize) -> Self {
        Self { phone: phone.into(), start_frame, end_frame }
    }
    pub fn len(&self) -> usize {
        self.end_frame.saturating_sub(self.start_frame)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub features: BTreeMap<u32, FeatureMatrix>,
    pub segments: Vec<PhoneSegment>,
    pub split_tag: String,
}

impl UtteranceRecord {
    /// Frame count shared by all layers.
    pub fn frames(&self) -> usize {
        self.features.values().next().map_or(0, FeatureMatrix::rows)
    }

    pub fn layer(&self, layer: u32) -> Result<&FeatureMatrix, CorpusError> {
        self.features
            .get(&layer)
            .ok_or_else(|| CorpusError::LayerMissing { utterance: self.utterance_id.clone(), layer })
    }

    /// Checks the record invariants against the expected dimension per layer.
    pub fn validate(&self, dims: &BTreeMap<u32, usize>) -> Result<(), CorpusError> {
        let uid = || self.utterance_id.clone();
        let mut frames = None;
        for (&layer, &dim) in dims {
            let m = self.layer(layer)?;
            if m.cols() != dim {
                return Err(CorpusError::DimensionMismatch { utterance: uid(), layer, expected: dim, found: m.cols() });
            }
            match frames {
                None => frames = Some(m.rows()),
                Some(t) if t != m.rows() => {
                    return Err(CorpusError::FrameCountMismatch { utterance: uid(), layer, expected: t, found: m.rows() })
                }
                _ => {}
            }
        }
        let frames = frames.unwrap_or(0);
        let mut prev_end = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            let bad = |reason: String| CorpusError::InvalidSegment {
                utterance: uid(),
                segment: i,
                phone: seg.phone.clone(),
                reason,
            };
            if seg.end_frame <= seg.start_frame {
                return Err(bad(format!("empty span [{}, {})", seg.start_frame, seg.end_frame)));
            }
            if seg.start_frame < prev_end {
                return Err(bad(format!("starts at {} before previous segment ends at {prev_end}", seg.start_frame)));
            }
            if seg.end_frame > frames {
                return Err(CorpusError::AlignmentOutOfRange {
                    utterance: uid(),
                    segment: i,
                    phone: seg.phone.clone(),
                    end_frame: seg.end_frame,
                    frames,
                });
            }
            prev_end = seg.end_frame;
        }
        Ok(())
    }
}

/// Frames of `seg` at `layer`, shape `(end - start, D)`.
pub fn frames_for_segment<'a>(
    u: &'a UtteranceRecord,
    layer: u32,
    seg: &PhoneSegment,
) -> Result<FrameRows<'a>, CorpusError> {
    Ok(u.layer(layer)?.slice(seg.start_frame, seg.end_frame))
}

/// An utterance rejected during a `skip_invalid` load.
#[derive(Debug)]
pub struct Rejection {
    pub utterance_id: String,
    pub error: CorpusError,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub skip_invalid: bool,
}

/// Immutable, validated collection of utterances in manifest order.
#[derive(Debug)]
pub struct Corpus {
    pub name: String,
    pub layer_ids: Vec<u32>,
    pub dim_per_layer: BTreeMap<u32, usize>,
    pub frame_hop_info: String,
    utterances: Vec<UtteranceRecord>,
    rejected: Vec<Rejection>,
    manifest_sha256: Option<String>,
}

impl Corpus {
    /// Builds an in-memory corpus, validating every record. Layers and
    /// dimensions are taken from the first record.
    pub fn from_records(name: impl Into<String>, utterances: Vec<UtteranceRecord>) -> Result<Self, CorpusError> {
        let first = utterances
            .first()
            .ok_or_else(|| CorpusError::InvalidManifest("corpus has no utterances".into()))?;
        let dim_per_layer: BTreeMap<u32, usize> = first.features.iter().map(|(&l, m)| (l, m.cols())).collect();
        let mut seen = HashSet::new();
        for u in &utterances {
            if !seen.insert(u.utterance_id.as_str()) {
                return Err(CorpusError::InvalidManifest(format!("duplicate utterance_id {}", u.utterance_id)));
            }
            u.validate(&dim_per_layer)?;
        }
        Ok(Self {
            name: name.into(),
            layer_ids: dim_per_layer.keys().copied().collect(),
            dim_per_layer,
            frame_hop_info: String::new(),
            utterances,
            rejected: Vec::new(),
            manifest_sha256: None,
        })
    }

    pub fn utterances(&self) -> &[UtteranceRecord] {
        &self.utterances
    }

    pub fn rejected(&self) -> &[Rejection] {
        &self.rejected
    }

    /// SHA-256 of the manifest bytes this corpus was loaded from.
    pub fn manifest_sha256(&self) -> Option<&str> {
        self.manifest_sha256.as_deref()
    }

    pub fn dim(&self, layer: u32) -> Option<usize> {
        self.dim_per_layer.get(&layer).copied()
    }

    /// Utterances (with their corpus index) whose split tag equals `tag`;
    /// `None` selects everything.
    pub fn split<'a>(&'a self, tag: Option<&'a str>) -> impl Iterator<Item = (usize, &'a UtteranceRecord)> + 'a {
        self.utterances
            .iter()
            .enumerate()
            .filter(move |(_, u)| tag.is_none_or(|t| u.split_tag == t))
    }

    pub fn utterance_index(&self, id: &str) -> Option<usize> {
        self.utterances.iter().position(|u| u.utterance_id == id)
    }

    /// Copy with every feature value multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Corpus {
        self.map_records(|u| UtteranceRecord {
            features: u.features.iter().map(|(&l, m)| (l, m.scaled(factor))).collect(),
            ..u.clone()
        })
    }

    /// Copy with each record replaced by `f(record)`. Layer metadata is kept.
    pub fn map_records(&self, f: impl Fn(&UtteranceRecord) -> UtteranceRecord) -> Corpus {
        Corpus {
            name: self.name.clone(),
            layer_ids: self.layer_ids.clone(),
            dim_per_layer: self.dim_per_layer.clone(),
            frame_hop_info: self.frame_hop_info.clone(),
            utterances: self.utterances.iter().map(f).collect(),
            rejected: Vec::new(),
            manifest_sha256: None,
        }
    }
}

fn check_manifest(m: &CorpusManifest) -> Result<(), CorpusError> {
    if m.layer_ids.is_empty() {
        return Err(CorpusError::InvalidManifest("layer_ids is empty".into()));
    }
    if m.layer_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CorpusError::InvalidManifest("layer_ids must be strictly ascending".into()));
    }
    for l in &m.layer_ids {
        match m.dim_per_layer.get(l) {
            Some(&d) if d >= 1 => {}
            _ => return Err(CorpusError::InvalidManifest(format!("dim_per_layer has no positive entry for layer {l}"))),
        }
    }
    let mut seen = HashSet::new();
    for u in &m.utterances {
        if !seen.insert(u.utterance_id.as_str()) {
            return Err(CorpusError::InvalidManifest(format!("duplicate utterance_id {}", u.utterance_id)));
        }
    }
    Ok(())
}

fn load_utterance(base: &Path, m: &CorpusManifest, e: &UtteranceEntry) -> Result<UtteranceRecord, CorpusError> {
    let uid = || e.utterance_id.clone();
    let mut features = BTreeMap::new();
    for &layer in &m.layer_ids {
        let rel = e
            .feature_files
            .get(&layer)
            .ok_or_else(|| CorpusError::LayerMissing { utterance: uid(), layer })?;
        let path = CorpusManifest::resolve(base, rel);
        if !path.is_file() {
            return Err(CorpusError::MissingFile { utterance: uid(), path });
        }
        let mat = read_phf(&path).map_err(|source| CorpusError::MalformedHeader {
            utterance: uid(),
            path: path.clone(),
            source,
        })?;
        if mat.layer_id() != layer {
            return Err(CorpusError::LayerIdMismatch { utterance: uid(), path, expected: layer, found: mat.layer_id() });
        }
        features.insert(layer, mat);
    }
    let apath = CorpusManifest::resolve(base, &e.alignment_file);
    if !apath.is_file() {
        return Err(CorpusError::MissingFile { utterance: uid(), path: apath });
    }
    let segments = read_alignment(&apath).map_err(|source| CorpusError::MalformedAlignment {
        utterance: uid(),
        path: apath.clone(),
        source,
    })?;
    let rec = UtteranceRecord { utterance_id: uid(), features, segments, split_tag: e.split_tag.clone() };
    rec.validate(&m.dim_per_layer.iter().filter(|(l, _)| m.layer_ids.contains(l)).map(|(&l, &d)| (l, d)).collect())?;
    Ok(rec)
}

/// Loads and validates the corpus described by `manifest_path`.
///
/// Utterances are loaded in parallel; the result keeps manifest order. An
/// invalid utterance aborts the load with its diagnostic unless
/// `opts.skip_invalid` is set, in which case it is recorded in
/// [`Corpus::rejected`] and logged.
pub fn load_corpus(manifest_path: &Path, opts: LoadOptions) -> Result<Corpus, CorpusError> {
    let bytes = fs::read(manifest_path)
        .map_err(|source| CorpusError::ManifestIo { path: manifest_path.to_path_buf(), source })?;
    let manifest: CorpusManifest = serde_json::from_slice(&bytes)
        .map_err(|source| CorpusError::ManifestParse { path: manifest_path.to_path_buf(), source })?;
    check_manifest(&manifest)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let results: Vec<Result<UtteranceRecord, CorpusError>> =
        manifest.utterances.par_iter().map(|e| load_utterance(base, &manifest, e)).collect();

    let mut utterances = Vec::with_capacity(results.len());
    let mut rejected = Vec::new();
    for (entry, r) in manifest.utterances.iter().zip(results) {
        match r {
            Ok(u) => utterances.push(u),
            Err(e) if opts.skip_invalid => {
                warn!("skipping utterance {}: {e}", entry.utterance_id);
                rejected.push(Rejection { utterance_id: entry.utterance_id.clone(), error: e });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Corpus {
        name: manifest.corpus_name,
        layer_ids: manifest.layer_ids.clone(),
        dim_per_layer: manifest.dim_per_layer.into_iter().filter(|(l, _)| manifest.layer_ids.contains(l)).collect(),
        frame_hop_info: manifest.frame_hop_info,
        utterances,
        rejected,
        manifest_sha256: Some(hex::encode(Sha256::digest(&bytes))),
    })
}

fn file_stem(index: usize, utterance_id: &str) -> String {
    let clean: String =
        utterance_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{index:05}_{clean}")
}

/// Writes `corpus` under `dir` (feature files, alignments and
/// `manifest.json`) and returns the manifest path.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf, CorpusError> {
    let werr = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(werr(dir))?;
    let mut entries = Vec::with_capacity(corpus.utterances.len());
    for (i, u) in corpus.utterances.iter().enumerate() {
        let stem = file_stem(i, &u.utterance_id);
        let mut feature_files = BTreeMap::new();
        for (&layer, m) in &u.features {
            let name = PathBuf::from(format!("{stem}.L{layer}.phf"));
            let path = dir.join(&name);
            write_phf(&path, m).map_err(|e| match e {
                PhfError::Io(source) => CorpusError::Write { path: path.clone(), source },
                other => CorpusError::InvalidMatrix(other.to_string()),
            })?;
            feature_files.insert(layer, name);
        }
        let aname = PathBuf::from(format!("{stem}.tsv"));
        let apath = dir.join(&aname);
        write_alignment(&apath, &u.segments).map_err(werr(&apath))?;
        entries.push(UtteranceEntry {
            utterance_id: u.utterance_id.clone(),
            feature_files,
            alignment_file: aname,
            split_tag: u.split_tag.clone(),
        });
    }
    let manifest = CorpusManifest {
        corpus_name: corpus.name.clone(),
        layer_ids: corpus.layer_ids.clone(),
        dim_per_layer: corpus.dim_per_layer.clone(),
        utterances: entries,
        frame_hop_info: corpus.frame_hop_info.clone(),
    };
    let mpath = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&mpath, json + "\n").map_err(werr(&mpath))?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, t: usize, d: usize, segs: Vec<PhoneSegment>) -> UtteranceRecord {
        let data: Vec<f32> = (0..t * d).map(|i| i as f32 * 0.5 - 3.0).collect();
        let mut features = BTreeMap::new();
        features.insert(0, FeatureMatrix::new(0, t, d, data).unwrap());
        UtteranceRecord { utterance_id: id.into(), features, segments: segs, split_tag: "test".into() }
    }

    #[test]
    fn segment_slicing() {
        let u = record("u", 10, 3, vec![PhoneSegment::new("a", 3, 5)]);
        let m = u.layer(0).unwrap();
        let rows = frames_for_segment(&u, 0, &PhoneSegment::new("a", 3, 5)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.row(0), m.row(3));
        assert_eq!(rows.row(1), m.row(4));
        assert_eq!(frames_for_segment(&u, 0, &PhoneSegment::new("a", 0, 1)).unwrap().len(), 1);
        let all = frames_for_segment(&u, 0, &PhoneSegment::new("a", 0, 10)).unwrap();
        assert_eq!(all.iter().flatten().copied().collect::<Vec<_>>(), m.data());
        assert!(matches!(
            frames_for_segment(&u, 4, &PhoneSegment::new("a", 0, 1)),
            Err(CorpusError::LayerMissing { layer: 4, .. })
        ));
    }

    #[test]
    fn validation_catches_bad_alignments() {
        let dims: BTreeMap<u32, usize> = [(0, 3)].into();
        let over = record("u", 10, 3, vec![PhoneSegment::new("a", 0, 4), PhoneSegment::new("b", 4, 13)]);
        match over.validate(&dims) {
            Err(CorpusError::AlignmentOutOfRange { utterance, segment, end_frame, frames, .. }) => {
                assert_eq!((utterance.as_str(), segment, end_frame, frames), ("u", 1, 13, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
        let overlap = record("u", 10, 3, vec![PhoneSegment::new("a", 0, 4), PhoneSegment::new("b", 3, 6)]);
        assert!(matches!(overlap.validate(&dims), Err(CorpusError::InvalidSegment { segment: 1, .. })));
        let empty = record("u", 10, 3, vec![PhoneSegment::new("a", 2, 2)]);
        assert!(matches!(empty.validate(&dims), Err(CorpusError::InvalidSegment { segment: 0, .. })));
        let wrong_dim: BTreeMap<u32, usize> = [(0, 4)].into();
        assert!(matches!(
            record("u", 10, 3, vec![]).validate(&wrong_dim),
            Err(CorpusError::DimensionMismatch { expected: 4, found: 3, .. })
        ));
    }

    #[test]
    fn from_records_rejects_duplicates() {
        let a = record("u", 4, 2, vec![]);
        assert!(matches!(Corpus::from_records("c", vec![a.clone(), a]), Err(CorpusError::InvalidManifest(_))));
    }
}
