//! Boundary-window similarity curves, crossing detection and full-utterance
//! similarity traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, FrameRows, PhoneSegment, UtteranceRecord};
use crate::phonology::{FeatureValue, PhoneMapping, PhonoFeatureTable, PhonologyError};
use crate::phonovec::{cell_label, FeatureSpec, PositionalVectorSet};
use crate::stats::CompensatedSum;
use crate::vector::{cosine_f32, norm};

/// Frames per window; the boundary frame sits at index [`BOUNDARY_INDEX`].
pub const WINDOW_LEN: usize = 11;
pub const BOUNDARY_INDEX: usize = 5;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("no vector for {feature}@{position:+}")]
    MissingVector { feature: String, position: i32 },
    #[error("vector for {feature}@{position:+} is zero")]
    ZeroVector { feature: String, position: i32 },
    #[error("a frame row is all zeros; cosine undefined")]
    ZeroFrame,
    #[error("no boundary windows")]
    NoWindows,
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// `p⁻¹` has `f = −`, `p⁰` has `f = +`; the boundary starts `p⁰`.
    Onset,
    /// `p⁰` has `f = +`, `p⁺¹` has `f = −`; the boundary starts `p⁺¹`.
    Offset,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::Onset => "onset",
            BoundaryKind::Offset => "offset",
        }
    }

    /// Positions of the vectors behind curves A and B.
    pub fn curve_positions(self) -> (i32, i32) {
        match self {
            BoundaryKind::Onset => (0, 1),
            BoundaryKind::Offset => (0, -1),
        }
    }
}

/// Eleven frames `b-5 ..= b+5` around boundary frame `b`, the first frame of
/// the right-hand phone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryWindow {
    pub utterance_index: usize,
    pub utterance_id: String,
    pub boundary_frame: usize,
    /// Segment index of the right-hand phone.
    pub right_segment: usize,
    pub left_phone: String,
    pub right_phone: String,
    pub kind: BoundaryKind,
    pub feature: String,
}

impl BoundaryWindow {
    pub fn frames<'a>(&self, corpus: &'a Corpus, layer: u32) -> Result<FrameRows<'a>, CorpusError> {
        let u = &corpus.utterances()[self.utterance_index];
        Ok(u.layer(layer)?.slice(self.boundary_frame - BOUNDARY_INDEX, self.boundary_frame + BOUNDARY_INDEX + 1))
    }
}

/// Windows at every adjacent segment pair whose feature values flip in the
/// direction `kind` requires, with `p⁰` in the feature's class. Windows
/// reaching past either end of the utterance are dropped.
pub fn collect_boundary_windows(
    corpus: &Corpus,
    split: Option<&str>,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    feature: &FeatureSpec,
    kind: BoundaryKind,
) -> Result<Vec<BoundaryWindow>, BoundaryError> {
    let col = table.feature_index(&feature.column)?;
    let mut out = Vec::new();
    for (ui, u) in corpus.split(split) {
        let frames = u.frames();
        for i in 1..u.segments.len() {
            let (l, r) = (&u.segments[i - 1], &u.segments[i]);
            let (Some(lp), Some(rp)) = (mapped(mapping, table, l), mapped(mapping, table, r)) else { continue };
            let (lv, rv) = (table.row(lp)?[col], table.row(rp)?[col]);
            let (want_l, want_r, p0) = match kind {
                BoundaryKind::Onset => (FeatureValue::Minus, FeatureValue::Plus, rp),
                BoundaryKind::Offset => (FeatureValue::Plus, FeatureValue::Minus, lp),
            };
            if lv != want_l || rv != want_r {
                continue;
            }
            if let Some(c) = feature.class {
                if table.natural_class_of(p0)? != c {
                    continue;
                }
            }
            let b = r.start_frame;
            if b < BOUNDARY_INDEX || b + BOUNDARY_INDEX >= frames {
                continue;
            }
            out.push(BoundaryWindow {
                utterance_index: ui,
                utterance_id: u.utterance_id.clone(),
                boundary_frame: b,
                right_segment: i,
                left_phone: lp.to_string(),
                right_phone: rp.to_string(),
                kind,
                feature: feature.name.clone(),
            });
        }
    }
    Ok(out)
}

fn mapped<'m>(mapping: &'m PhoneMapping, table: &PhonoFeatureTable, seg: &PhoneSegment) -> Option<&'m str> {
    mapping.map_label(&seg.phone).filter(|p| table.contains(p))
}

/// Curves, crossing and diagnostics for one `(feature, kind)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub feature: String,
    pub kind: BoundaryKind,
    pub layer: u32,
    /// Mean `cos(v⁰_f, r[i])`.
    pub curve_a: Vec<f64>,
    /// Mean `cos(v⁺¹_f, r[i])` for onsets, `cos(v⁻¹_f, r[i])` for offsets.
    pub curve_b: Vec<f64>,
    pub crossing: Option<f64>,
    pub sign_changes: usize,
    pub n_boundaries: usize,
}

fn nonzero_vector<'s>(set: &'s PositionalVectorSet, feature: &str, position: i32) -> Result<&'s [f64], BoundaryError> {
    let v = set
        .get(feature, position)
        .ok_or_else(|| BoundaryError::MissingVector { feature: feature.into(), position })?;
    if norm(&v.vector) == 0.0 {
        return Err(BoundaryError::ZeroVector { feature: feature.into(), position });
    }
    Ok(&v.vector)
}

/// Mean similarity curves over `windows`, which must share feature and kind.
pub fn boundary_similarity_curves(
    corpus: &Corpus,
    layer: u32,
    windows: &[BoundaryWindow],
    vectors: &PositionalVectorSet,
    feature: &str,
    kind: BoundaryKind,
) -> Result<CrossingReport, BoundaryError> {
    let (pa, pb) = kind.curve_positions();
    let va = nonzero_vector(vectors, feature, pa)?;
    let vb = nonzero_vector(vectors, feature, pb)?;
    if windows.is_empty() {
        return Err(BoundaryError::NoWindows);
    }
    let mut sa = [CompensatedSum::default(); WINDOW_LEN];
    let mut sb = [CompensatedSum::default(); WINDOW_LEN];
    for w in windows {
        let rows = w.frames(corpus, layer)?;
        for (i, row) in rows.iter().enumerate() {
            sa[i].add(cosine_f32(va, row).map_err(|_| BoundaryError::ZeroFrame)?);
            sb[i].add(cosine_f32(vb, row).map_err(|_| BoundaryError::ZeroFrame)?);
        }
    }
    let n = windows.len() as f64;
    let curve_a: Vec<f64> = sa.iter().map(|s| s.value() / n).collect();
    let curve_b: Vec<f64> = sb.iter().map(|s| s.value() / n).collect();
    let (crossing, sign_changes) = detect_crossing(&curve_a, &curve_b);
    Ok(CrossingReport {
        feature: feature.into(),
        kind,
        layer,
        curve_a,
        curve_b,
        crossing,
        sign_changes,
        n_boundaries: windows.len(),
    })
}

/// First sign change of `a − b`, refined by linear interpolation, plus the
/// total number of sign changes. A zero difference at index `t` is itself
/// the crossing when the sign on either side differs.
pub fn detect_crossing(a: &[f64], b: &[f64]) -> (Option<f64>, usize) {
    assert_eq!(a.len(), b.len(), "curves differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut first = None;
    let mut changes = 0;
    let mut last_sign: Option<(usize, f64)> = None;
    for (t, &x) in d.iter().enumerate() {
        let s = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            continue;
        };
        if let Some((tp, sp)) = last_sign {
            if s != sp {
                changes += 1;
                if first.is_none() {
                    first = Some(if tp + 1 == t {
                        let (x0, x1) = (d[tp], d[t]);
                        tp as f64 + x0 / (x0 - x1)
                    } else {
                        // zeros between tp and t
                        (tp + 1) as f64
                    });
                }
            }
        }
        last_sign = Some((t, s));
    }
    (first, changes)
}

/// `trace.values[row][t] = cos(v^k_f, r[t])` for every requested cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrace {
    pub utterance_id: String,
    pub layer: u32,
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub segments: Vec<PhoneSegment>,
}

pub fn frame_trace(
    utterance: &UtteranceRecord,
    layer: u32,
    vectors: &PositionalVectorSet,
    features: &[FeatureSpec],
    positions: &[i32],
) -> Result<FrameTrace, BoundaryError> {
    let m = utterance.layer(layer)?;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for f in features {
        for &k in positions {
            let v = nonzero_vector(vectors, &f.name, k)?;
            let row: Vec<f64> = (0..m.rows())
                .map(|t| cosine_f32(v, m.row(t)).map_err(|_| BoundaryError::ZeroFrame))
                .collect::<Result<_, _>>()?;
            labels.push(cell_label(&f.name, k));
            values.push(row);
        }
    }
    Ok(FrameTrace {
        utterance_id: utterance.utterance_id.clone(),
        layer,
        labels,
        values,
        segments: utterance.segments.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let (c, n) = detect_crossing(&[0.0, 0.0, 1.0], &[1.0, 0.5, 0.0]);
        // d = [-1, -0.5, 1]: root between 1 and 2 at 1 + 0.5/1.5
        assert!((c.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(n, 1);
        let (c, _) = detect_crossing(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]);
        assert_eq!(c, Some(1.0));
        assert_eq!(detect_crossing(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]), (None, 0));
    }

    #[test]
    fn crossing_counts_and_first_wins() {
        let a = [0.0, 1.0, 0.0, 1.0];
        let b = [0.5; 4];
        let (c, n) = detect_crossing(&a, &b);
        assert_eq!(c, Some(0.5));
        assert_eq!(n, 3);
    }
}
