//! Small statistics helpers: compensated sums, moments and Student-t
//! confidence intervals over replications.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Element-wise compensated accumulator for D-vectors.
#[derive(Debug, Clone)]
pub struct VectorAccumulator {
    sums: Vec<CompensatedSum>,
    count: usize,
}

impl VectorAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { sums: vec![CompensatedSum::default(); dim], count: 0 }
    }

    pub fn add(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.sums.len());
        for (s, &x) in self.sums.iter_mut().zip(v) {
            s.add(x);
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean vector, or `None` when nothing was added.
    pub fn mean(&self) -> Option<Vec<f64>> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        Some(self.sums.iter().map(|s| s.value() / n).collect())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add((x - m) * (x - m)));
    (s.value() / (xs.len() - 1) as f64).sqrt()
}

/// Mean of a set of replications with a two-sided Student-t interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_replication: Vec<f64>,
}

/// Two-sided Student-t confidence interval at `level` over `values`.
///
/// With a single value the interval collapses onto it. Bounds are clamped to
/// `[lower, upper]` (use `f64::NEG_INFINITY`/`INFINITY` to disable).
pub fn student_t_interval(values: &[f64], level: f64, lower: f64, upper: f64) -> RateSummary {
    assert!(!values.is_empty(), "interval over no replications");
    assert!(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    let m = mean(values);
    let half = if values.len() < 2 {
        0.0
    } else {
        let dof = (values.len() - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
        let q = t.inverse_cdf(0.5 + level / 2.0);
        q * sample_std(values) / (values.len() as f64).sqrt()
    };
    RateSummary {
        mean: m,
        ci_low: (m - half).max(lower),
        ci_high: (m + half).min(upper),
        per_replication: values.to_vec(),
    }
}
