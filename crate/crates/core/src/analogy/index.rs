//! Phone occurrence index used to draw analogy and baseline samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::phonology::{PhoneMapping, PhonoFeatureTable};

use super::AnalogyError;

/// Which segment an occurrence is keyed by and which one is pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    /// Keyed and pooled on the same segment.
    Standard,
    /// 5-phone windows keyed by the phone at offset `k`, pooled on `p⁰`.
    Contextual(i32),
    /// 5-phone windows keyed by `p⁰`, pooled on the segment at offset `j`.
    Sweep(i32),
}

impl IndexMode {
    /// `(key offset, pooled offset)` relative to the window center, and
    /// whether a full 5-phone window is required.
    fn offsets(self) -> (i64, i64, bool) {
        match self {
            IndexMode::Standard => (0, 0, false),
            IndexMode::Contextual(k) => (k as i64, 0, true),
            IndexMode::Sweep(j) => (0, j as i64, true),
        }
    }

    fn offset(self) -> Option<i32> {
        match self {
            IndexMode::Standard => None,
            IndexMode::Contextual(k) | IndexMode::Sweep(k) => Some(k),
        }
    }
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexMode::Standard => write!(f, "standard"),
            IndexMode::Contextual(k) => write!(f, "contextual{k:+}"),
            IndexMode::Sweep(j) => write!(f, "sweep{j:+}"),
        }
    }
}

/// One occurrence: the utterance and the segment whose frames are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    pub utterance: u32,
    pub segment: u32,
    /// Frame count of the pooled segment.
    pub len: u32,
}

#[derive(Debug, Clone)]
struct PhoneEntry {
    range: Range<usize>,
    /// `(utterance, sub-range)` in ascending utterance order.
    utterances: Vec<(u32, Range<usize>)>,
}

/// Occurrences of every inventory phone, grouped by phone then utterance.
#[derive(Debug, Clone)]
pub struct InstanceIndex {
    mode: IndexMode,
    instances: Vec<Instance>,
    phones: BTreeMap<String, PhoneEntry>,
}

impl InstanceIndex {
    /// Indexes the occurrences of `inventory` phones in `split`.
    ///
    /// In window modes a center segment qualifies only when all five
    /// positions `-2..=2` exist in its utterance; the keyed phone must be in
    /// the inventory and the pooled segment's phone must map to the table.
    pub fn build(
        corpus: &Corpus,
        split: Option<&str>,
        table: &PhonoFeatureTable,
        mapping: &PhoneMapping,
        inventory: &[String],
        mode: IndexMode,
    ) -> Result<Self, AnalogyError> {
        if let Some(k) = mode.offset() {
            if !(-2..=2).contains(&k) {
                return Err(AnalogyError::InvalidConfig(format!("offset {k} outside -2..=2")));
            }
        }
        let inv: BTreeSet<&str> = inventory.iter().map(String::as_str).collect();
        let (key_off, pool_off, window) = mode.offsets();
        let mut by_phone: BTreeMap<String, Vec<Instance>> = inv.iter().map(|p| (p.to_string(), Vec::new())).collect();
        for (ui, u) in corpus.split(split) {
            let n = u.segments.len() as i64;
            let mapped: Vec<Option<&str>> = u
                .segments
                .iter()
                .map(|s| mapping.map_label(&s.phone).filter(|p| table.contains(p)))
                .collect();
            for s in 0..n {
                if window && (s < 2 || s + 2 >= n) {
                    continue;
                }
                let (kp, pp) = (s + key_off, s + pool_off);
                if kp < 0 || kp >= n || pp < 0 || pp >= n {
                    continue;
                }
                let (Some(key), Some(_)) = (mapped[kp as usize], mapped[pp as usize]) else { continue };
                if let Some(list) = by_phone.get_mut(key) {
                    let seg = &u.segments[pp as usize];
                    list.push(Instance { utterance: ui as u32, segment: pp as u32, len: seg.len() as u32 });
                }
            }
        }
        let mut instances = Vec::new();
        let mut phones = BTreeMap::new();
        for (phone, mut list) in by_phone {
            list.sort_unstable();
            let start = instances.len();
            let mut utterances: Vec<(u32, Range<usize>)> = Vec::new();
            for (i, inst) in list.iter().enumerate() {
                let at = start + i;
                match utterances.last_mut() {
                    Some((u, r)) if *u == inst.utterance => r.end = at + 1,
                    _ => utterances.push((inst.utterance, at..at + 1)),
                }
            }
            instances.extend(list);
            phones.insert(phone, PhoneEntry { range: start..instances.len(), utterances });
        }
        Ok(Self { mode, instances, phones })
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    /// All occurrences; phone `p` occupies [`Self::range`]`(p)`.
    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn phones(&self) -> impl Iterator<Item = &str> {
        self.phones.keys().map(String::as_str)
    }

    pub fn range(&self, phone: &str) -> Option<Range<usize>> {
        self.phones.get(phone).map(|e| e.range.clone())
    }

    pub fn instances_of(&self, phone: &str) -> &[Instance] {
        self.range(phone).map_or(&[], |r| &self.instances[r])
    }

    pub fn count(&self, phone: &str) -> usize {
        self.range(phone).map_or(0, |r| r.len())
    }

    pub fn utterance_count(&self, phone: &str) -> usize {
        self.phones.get(phone).map_or(0, |e| e.utterances.len())
    }

    /// Index (into [`Self::instances`]) of a uniform occurrence of `phone`.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, phone: &str, rng: &mut R) -> Result<usize, AnalogyError> {
        let r = self.range(phone).filter(|r| !r.is_empty()).ok_or_else(|| AnalogyError::NoInstances(phone.into()))?;
        Ok(rng.random_range(r))
    }

    /// Uniform occurrence of `phone` outside the utterance of instance `first`.
    pub(crate) fn draw_other_utterance<R: Rng + ?Sized>(
        &self,
        phone: &str,
        first: usize,
        rng: &mut R,
    ) -> Result<usize, AnalogyError> {
        let e = self.phones.get(phone).ok_or_else(|| AnalogyError::NoInstances(phone.into()))?;
        if e.utterances.len() < 2 {
            return Err(AnalogyError::InsufficientUtterances(phone.into()));
        }
        let u = self.instances[first].utterance;
        let i = e.utterances.binary_search_by_key(&u, |(x, _)| *x).expect("first instance belongs to phone");
        Ok(skip_range(e.range.clone(), e.utterances[i].1.clone(), rng))
    }

    /// Uniform occurrence over all instances that are not `phone`.
    pub(crate) fn draw_other_phone<R: Rng + ?Sized>(&self, phone: &str, rng: &mut R) -> Result<usize, AnalogyError> {
        let own = self.range(phone).unwrap_or(0..0);
        if self.instances.len() == own.len() {
            return Err(AnalogyError::NoInstances(format!("any phone other than {phone}")));
        }
        Ok(skip_range(0..self.instances.len(), own, rng))
    }
}

/// Uniform index in `outer` excluding the non-empty-complement sub-range `hole`.
fn skip_range<R: Rng + ?Sized>(outer: Range<usize>, hole: Range<usize>, rng: &mut R) -> usize {
    let avail = outer.len() - hole.len();
    let x = outer.start + rng.random_range(0..avail);
    if x >= hole.start {
        x + hole.len()
    } else {
        x
    }
}
