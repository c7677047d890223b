//! Success rate as a function of where the pooled frame sits relative to
//! the analogy phone: offset `j` of the neighbouring segment and the
//! normalized-position bin of the drawn frame inside it.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::phonology::{AnalogyQuadruplet, PhoneMapping, PhonoFeatureTable};
use crate::pooling::PoolingKind;
use crate::stats::RateSummary;

use super::{AnalogyEngine, AnalogyError, BinFilter, IndexMode, InstanceIndex, TrialConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub offset: i32,
    pub bin: usize,
    /// Absent when no quadruplet could be evaluated in this cell.
    pub summary: Option<RateSummary>,
    pub n_evaluated: usize,
    pub n_skipped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absent_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub layer: u32,
    pub bins: usize,
    pub config: TrialConfig,
    pub n_quadruplets: usize,
    /// Offset-major, bins ascending.
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, offset: i32, bin: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.offset == offset && c.bin == bin)
    }
}

/// Rates per `(offset, bin)`.
///
/// Instances are keyed by the phone at the window center; the representation
/// is a random frame of the segment at `offset`, and only frames whose
/// position bin equals `bin` are kept. Pooling in `cfg` is forced to random.
#[allow(clippy::too_many_arguments)]
pub fn positional_window_sweep(
    corpus: &Corpus,
    split: Option<&str>,
    table: &PhonoFeatureTable,
    mapping: &PhoneMapping,
    inventory: &[String],
    quadruplets: &[AnalogyQuadruplet],
    cfg: &TrialConfig,
    layer: u32,
    offsets: &[i32],
    bins: usize,
) -> Result<SweepReport, AnalogyError> {
    if bins == 0 {
        return Err(AnalogyError::InvalidConfig("bins must be at least 1".into()));
    }
    if quadruplets.is_empty() {
        return Err(AnalogyError::NoQuadruplets);
    }
    let base = TrialConfig { pooling: PoolingKind::Random, bin: None, ..cfg.clone() };
    let mut cells = Vec::with_capacity(offsets.len() * bins);
    for &j in offsets {
        let index = InstanceIndex::build(corpus, split, table, mapping, inventory, IndexMode::Sweep(j))?;
        for b in 0..bins {
            let c = TrialConfig { bin: Some(BinFilter { bins, bin: b }), ..base.clone() };
            let report = AnalogyEngine::new(corpus, &index, layer, c)?.success_rate(quadruplets)?;
            let absent_reason = report.summary.is_none().then(|| {
                let first = report.skipped.first().map(|s| s.reason.clone()).unwrap_or_default();
                format!("empty bin {b} at offset {j:+}: {first}")
            });
            cells.push(SweepCell {
                offset: j,
                bin: b,
                summary: report.summary,
                n_evaluated: report.n_evaluated,
                n_skipped: report.skipped.len(),
                absent_reason,
            });
        }
    }
    Ok(SweepReport { layer, bins, config: base, n_quadruplets: quadruplets.len(), cells })
}
