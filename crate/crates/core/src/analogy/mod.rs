//! Phonological analogy success rates.
//!
//! A quadruplet `(a, b, c, d)` succeeds in a replication when the mean
//! cosine between pooled `d` and `pool(b) − pool(a) + pool(c)` lies strictly
//! between the lower baseline (pooled `d` against pooled non-`d` instances)
//! and the upper baseline (pooled `d` against pooled `d` from another
//! utterance). Every estimate averages `samples` draws with replacement; each
//! replication redraws everything, baselines included.

mod index;
mod sweep;

pub use index::{IndexMode, Instance, InstanceIndex};
pub use sweep::{positional_window_sweep, SweepCell, SweepReport};

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::phonology::AnalogyQuadruplet;
use crate::pooling::{self, PoolingKind};
use crate::rng::{label_key, stream_rng};
use crate::stats::{student_t_interval, CompensatedSum, RateSummary};
use crate::vector::{cosine, offset_add};

#[derive(Debug, Error)]
pub enum AnalogyError {
    #[error("no instances of {0}")]
    NoInstances(String),
    #[error("{0} occurs in fewer than two utterances")]
    InsufficientUtterances(String),
    #[error("no quadruplets to evaluate")]
    NoQuadruplets,
    #[error("every sampled {0} similarity involved a zero vector")]
    ZeroVector(&'static str),
    #[error("{phone}: no frame in bin {bin} of {bins}{}", offset.map(|o| format!(" at offset {o:+}")).unwrap_or_default())]
    EmptyBin { phone: String, offset: Option<i32>, bin: usize, bins: usize },
    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Restricts random pooling to frames whose normalized position falls in
/// `bin` of `bins`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinFilter {
    pub bins: usize,
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub samples: usize,
    pub replications: usize,
    pub ci_level: f64,
    pub pooling: PoolingKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<BinFilter>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self { samples: 1000, replications: 10, ci_level: 0.99, pooling: PoolingKind::Mean, seed: 0, bin: None }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), AnalogyError> {
        let bad = |m: String| Err(AnalogyError::InvalidConfig(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} outside (0, 1)", self.ci_level));
        }
        if let Some(f) = self.bin {
            if self.pooling != PoolingKind::Random {
                return bad("position bins require random pooling".into());
            }
            if f.bins == 0 || f.bin >= f.bins {
                return bad(format!("bin {} outside 0..{}", f.bin, f.bins));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupletOutcome {
    #[serde(flatten)]
    pub quadruplet: AnalogyQuadruplet,
    pub analogy_sim: Vec<f64>,
    pub upper_sim: Vec<f64>,
    pub lower_sim: Vec<f64>,
    pub success: Vec<bool>,
    /// Upper baseline not above the lower one in some replication, so success
    /// was impossible there.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedQuadruplet {
    #[serde(flatten)]
    pub quadruplet: AnalogyQuadruplet,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRateReport {
    pub layer: u32,
    pub mode: IndexMode,
    pub config: TrialConfig,
    /// Absent when every quadruplet was skipped.
    pub summary: Option<RateSummary>,
    pub n_quadruplets: usize,
    pub n_evaluated: usize,
    pub skipped: Vec<SkippedQuadruplet>,
    pub quadruplets: Vec<QuadrupletOutcome>,
}

/// Reachability of the bin filter per phone: `(instances, utterances)`.
#[derive(Debug, Clone, Default)]
struct Reach {
    per_phone: BTreeMap<String, (usize, usize)>,
    total: usize,
}

/// `(upper, lower)` baselines of one target and replication, or why they failed.
type BaselinePair = Result<(f64, f64), String>;

/// Sampling engine over one layer of an indexed corpus.
pub struct AnalogyEngine<'a> {
    corpus: &'a Corpus,
    index: &'a InstanceIndex,
    layer: u32,
    cfg: TrialConfig,
    reach: Option<Reach>,
}

impl<'a> AnalogyEngine<'a> {
    pub fn new(corpus: &'a Corpus, index: &'a InstanceIndex, layer: u32, cfg: TrialConfig) -> Result<Self, AnalogyError> {
        cfg.validate()?;
        if corpus.dim(layer).is_none() {
            return Err(CorpusError::LayerMissing { utterance: corpus.name.clone(), layer }.into());
        }
        let reach = cfg.bin.map(|f| {
            let mut r = Reach::default();
            for phone in index.phones() {
                let insts = index.instances_of(phone);
                let ok: Vec<&Instance> =
                    insts.iter().filter(|i| pooling::segment_reaches_bin(i.len as usize, f.bins, f.bin)).collect();
                let utts: BTreeSet<u32> = ok.iter().map(|i| i.utterance).collect();
                r.total += ok.len();
                r.per_phone.insert(phone.to_string(), (ok.len(), utts.len()));
            }
            r
        });
        Ok(Self { corpus, index, layer, cfg, reach })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.cfg
    }

    fn empty_bin(&self, phone: &str) -> AnalogyError {
        let f = self.cfg.bin.expect("bin filter set");
        let offset = match self.index.mode() {
            IndexMode::Standard => None,
            IndexMode::Contextual(k) | IndexMode::Sweep(k) => Some(k),
        };
        AnalogyError::EmptyBin { phone: phone.into(), offset, bin: f.bin, bins: f.bins }
    }

    fn reach_of(&self, phone: &str) -> (usize, usize) {
        self.reach.as_ref().and_then(|r| r.per_phone.get(phone).copied()).unwrap_or((0, 0))
    }

    fn check_phone(&self, phone: &str) -> Result<(), AnalogyError> {
        if self.index.count(phone) == 0 {
            return Err(AnalogyError::NoInstances(phone.into()));
        }
        if self.reach.is_some() && self.reach_of(phone).0 == 0 {
            return Err(self.empty_bin(phone));
        }
        Ok(())
    }

    fn check_upper(&self, phone: &str) -> Result<(), AnalogyError> {
        self.check_phone(phone)?;
        if self.index.utterance_count(phone) < 2 || (self.reach.is_some() && self.reach_of(phone).1 < 2) {
            return Err(AnalogyError::InsufficientUtterances(phone.into()));
        }
        Ok(())
    }

    fn check_lower(&self, phone: &str) -> Result<(), AnalogyError> {
        self.check_phone(phone)?;
        let others = self.index.instances().len() - self.index.count(phone);
        if others == 0 {
            return Err(AnalogyError::NoInstances(format!("any phone other than {phone}")));
        }
        if let Some(r) = &self.reach {
            if r.total == self.reach_of(phone).0 {
                return Err(self.empty_bin(&format!("any phone other than {phone}")));
            }
        }
        Ok(())
    }

    /// Pools instance `i`; `None` when a random frame falls outside the bin.
    fn pool(&self, i: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let inst = self.index.instances()[i];
        let u = &self.corpus.utterances()[inst.utterance as usize];
        let seg = &u.segments[inst.segment as usize];
        let rows = u.layer(self.layer).expect("layer checked").slice(seg.start_frame, seg.end_frame);
        let v = match self.cfg.pooling {
            PoolingKind::Mean => pooling::mean_pool(rows),
            PoolingKind::Center => pooling::center_pool(rows),
            PoolingKind::Random => {
                let idx = pooling::random_index(rows.len(), rng);
                if let Some(f) = self.cfg.bin {
                    if pooling::index_bin(idx, rows.len(), f.bins) != f.bin {
                        return None;
                    }
                }
                Ok(rows.row(idx).iter().map(|&x| x as f64).collect())
            }
        };
        Some(v.expect("validated segments are non-empty"))
    }

    /// Draws with `pick` until the pooled frame passes the bin filter.
    fn sample(
        &self,
        rng: &mut ChaCha8Rng,
        mut pick: impl FnMut(&mut ChaCha8Rng) -> Result<usize, AnalogyError>,
    ) -> Result<(usize, Vec<f64>), AnalogyError> {
        loop {
            let i = pick(rng)?;
            if let Some(v) = self.pool(i, rng) {
                return Ok((i, v));
            }
        }
    }

    fn mean_cosine(
        &self,
        what: &'static str,
        rng: &mut ChaCha8Rng,
        mut one: impl FnMut(&mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>), AnalogyError>,
    ) -> Result<f64, AnalogyError> {
        let mut sum = CompensatedSum::default();
        let mut n = 0usize;
        for _ in 0..self.cfg.samples {
            let (u, v) = one(rng)?;
            if let Ok(c) = cosine(&u, &v) {
                sum.add(c);
                n += 1;
            }
        }
        if n == 0 {
            return Err(AnalogyError::ZeroVector(what));
        }
        Ok(sum.value() / n as f64)
    }

    fn rng(&self, tag: &str, replication: usize, item: &str) -> ChaCha8Rng {
        stream_rng(self.cfg.seed, &[label_key(tag), replication as u64, label_key(item)])
    }

    /// Mean of `cos(pool(d), pool(b) − pool(a) + pool(c))` with independent
    /// instance draws.
    pub fn analogy_similarity(&self, q: &AnalogyQuadruplet, replication: usize) -> Result<f64, AnalogyError> {
        for p in q.phones() {
            self.check_phone(p)?;
        }
        let mut rng = self.rng("analogy", replication, &q.to_string());
        self.mean_cosine("analogy", &mut rng, |rng| {
            let (_, a) = self.sample(rng, |r| self.index.draw(&q.a, r))?;
            let (_, b) = self.sample(rng, |r| self.index.draw(&q.b, r))?;
            let (_, c) = self.sample(rng, |r| self.index.draw(&q.c, r))?;
            let (_, d) = self.sample(rng, |r| self.index.draw(&q.d, r))?;
            Ok((d, offset_add(&a, &b, &c)))
        })
    }

    /// Mean cosine between pooled instances of `phone` from different
    /// utterances.
    pub fn baseline_upper(&self, phone: &str, replication: usize) -> Result<f64, AnalogyError> {
        self.check_upper(phone)?;
        let mut rng = self.rng("upper", replication, phone);
        self.mean_cosine("upper-baseline", &mut rng, |rng| {
            let (i, x) = self.sample(rng, |r| self.index.draw(phone, r))?;
            let (_, y) = self.sample(rng, |r| self.index.draw_other_utterance(phone, i, r))?;
            Ok((x, y))
        })
    }

    /// Mean cosine between pooled `phone` and a pooled instance drawn
    /// uniformly from all other phones' instances.
    pub fn baseline_lower(&self, phone: &str, replication: usize) -> Result<f64, AnalogyError> {
        self.check_lower(phone)?;
        let mut rng = self.rng("lower", replication, phone);
        self.mean_cosine("lower-baseline", &mut rng, |rng| {
            let (_, x) = self.sample(rng, |r| self.index.draw(phone, r))?;
            let (_, y) = self.sample(rng, |r| self.index.draw_other_phone(phone, r))?;
            Ok((x, y))
        })
    }

    /// Success rate over `quadruplets` across all replications.
    ///
    /// Quadruplets with any failing estimate are skipped, listed with the
    /// reason and left out of the denominator. Output does not depend on the
    /// number of worker threads.
    pub fn success_rate(&self, quadruplets: &[AnalogyQuadruplet]) -> Result<SuccessRateReport, AnalogyError> {
        if quadruplets.is_empty() {
            return Err(AnalogyError::NoQuadruplets);
        }
        let reps = self.cfg.replications;
        let targets: Vec<&str> =
            quadruplets.iter().map(|q| q.d.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
        let jobs: Vec<(&str, usize)> = targets.iter().flat_map(|&d| (0..reps).map(move |r| (d, r))).collect();
        let baselines: BTreeMap<(&str, usize), BaselinePair> = jobs
            .par_iter()
            .map(|&(d, r)| {
                let res = self
                    .baseline_upper(d, r)
                    .and_then(|up| Ok((up, self.baseline_lower(d, r)?)))
                    .map_err(|e| e.to_string());
                ((d, r), res)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();

        let results: Vec<Result<QuadrupletOutcome, String>> = quadruplets
            .par_iter()
            .map(|q| {
                let mut out = QuadrupletOutcome {
                    quadruplet: q.clone(),
                    analogy_sim: Vec::with_capacity(reps),
                    upper_sim: Vec::with_capacity(reps),
                    lower_sim: Vec::with_capacity(reps),
                    success: Vec::with_capacity(reps),
                    degenerate: false,
                };
                for r in 0..reps {
                    let (up, low) = baselines[&(q.d.as_str(), r)].clone()?;
                    let sim = self.analogy_similarity(q, r).map_err(|e| e.to_string())?;
                    out.analogy_sim.push(sim);
                    out.upper_sim.push(up);
                    out.lower_sim.push(low);
                    out.success.push(low < sim && sim < up);
                    out.degenerate |= up <= low;
                }
                Ok(out)
            })
            .collect();

        let mut outcomes = Vec::new();
        let mut skipped = Vec::new();
        for (q, r) in quadruplets.iter().zip(results) {
            match r {
                Ok(o) => outcomes.push(o),
                Err(reason) => skipped.push(SkippedQuadruplet { quadruplet: q.clone(), reason }),
            }
        }
        let summary = (!outcomes.is_empty()).then(|| {
            let rates: Vec<f64> = (0..reps)
                .map(|r| outcomes.iter().filter(|o| o.success[r]).count() as f64 / outcomes.len() as f64)
                .collect();
            student_t_interval(&rates, self.cfg.ci_level, 0.0, 1.0)
        });
        Ok(SuccessRateReport {
            layer: self.layer,
            mode: self.index.mode(),
            config: self.cfg.clone(),
            summary,
            n_quadruplets: quadruplets.len(),
            n_evaluated: outcomes.len(),
            skipped,
            quadruplets: outcomes,
        })
    }
}

/// Convenience wrapper: builds an engine and runs [`AnalogyEngine::success_rate`].
pub fn success_rate(
    quadruplets: &[AnalogyQuadruplet],
    index: &InstanceIndex,
    corpus: &Corpus,
    cfg: &TrialConfig,
    layer: u32,
) -> Result<SuccessRateReport, AnalogyError> {
    AnalogyEngine::new(corpus, index, layer, cfg.clone())?.success_rate(quadruplets)
}
