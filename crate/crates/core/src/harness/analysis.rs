use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{curve, CurveKey, RateResult};
use crate::error::Result;

/// Paired one-sided t-test of `mean(upper - lower) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTest {
    pub n: usize,
    pub mean_diff: f64,
    pub stderr: f64,
    pub p_value: f64,
}

impl PairTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pairs are formed by index; pairs with a non-finite member are dropped.
pub fn paired_one_sided(upper: &[f64], lower: &[f64]) -> PairTest {
    let d: Vec<f64> =
        upper.iter().zip(lower).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| a - b).collect();
    let n = d.len();
    if n == 0 {
        return PairTest { n, mean_diff: f64::NAN, stderr: f64::NAN, p_value: 1.0 };
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return PairTest { n, mean_diff: mean, stderr: f64::NAN, p_value: 1.0 };
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let stderr = (var / n as f64).sqrt();
    let p_value = if stderr == 0.0 {
        if mean > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom are positive");
        1.0 - t.cdf(mean / stderr)
    };
    PairTest { n, mean_diff: mean, stderr, p_value }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrRanking {
    pub snr_db: f64,
    /// Mean rate of each curve, in the expected order.
    pub means: Vec<f64>,
    /// Curve indices sorted by observed mean, best first.
    pub observed: Vec<usize>,
    /// `tests[i]` compares expected neighbours `i` and `i + 1`.
    pub tests: Vec<PairTest>,
    /// Indices `i` whose test was not significant at the report's level.
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyReport {
    pub curves: Vec<String>,
    pub alpha: f64,
    pub rankings: Vec<SnrRanking>,
}

impl HierarchyReport {
    pub fn holds(&self) -> bool {
        self.rankings.iter().all(|r| r.violations.is_empty())
    }

    pub fn violation_count(&self) -> usize {
        self.rankings.iter().map(|r| r.violations.len()).sum()
    }
}

/// Tests every adjacent pair of `expected` (best first) at every SNR point
/// shared by all curves.
pub fn compare_hierarchy(results: &[RateResult], expected: &[CurveKey], alpha: f64) -> Result<HierarchyReport> {
    let curves = expected.iter().map(|k| curve(results, k)).collect::<Result<Vec<_>>>()?;
    let mut rankings = Vec::new();
    for point in &curves[0] {
        let snr = point.snr_db;
        let cells: Option<Vec<&RateResult>> =
            curves.iter().map(|c| c.iter().find(|r| r.snr_db == snr).copied()).collect();
        let Some(cells) = cells else { continue };
        let means: Vec<f64> = cells.iter().map(|r| r.mean_rate).collect();
        let mut observed: Vec<usize> = (0..cells.len()).collect();
        observed.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        let tests: Vec<PairTest> = cells.windows(2).map(|w| paired_one_sided(&w[0].samples, &w[1].samples)).collect();
        let violations = tests.iter().enumerate().filter(|(_, t)| !t.significant(alpha)).map(|(i, _)| i).collect();
        rankings.push(SnrRanking { snr_db: snr, means, observed, tests, violations });
    }
    Ok(HierarchyReport { curves: expected.iter().map(CurveKey::label).collect(), alpha, rankings })
}

/// SNR at which a piecewise-linear curve first reaches `level`.
fn snr_at(snr: &[f64], rate: &[f64], level: f64) -> Option<f64> {
    (0..snr.len().saturating_sub(1)).find_map(|i| {
        let (r0, r1) = (rate[i], rate[i + 1]);
        if !(r0 <= level && level <= r1) {
            return None;
        }
        if r1 == r0 {
            return Some(snr[i]);
        }
        Some(snr[i] + (level - r0) / (r1 - r0) * (snr[i + 1] - snr[i]))
    })
}

/// Largest horizontal distance (dB) by which `better` reaches a rate level
/// before `worse`, over the levels both curves attain. Returns the gap and
/// the rate at which it occurs.
pub fn horizontal_gap_db(snr: &[f64], better: &[f64], worse: &[f64]) -> Option<(f64, f64)> {
    better
        .iter()
        .chain(worse)
        .filter_map(|&level| Some((snr_at(snr, worse, level)? - snr_at(snr, better, level)?, level)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
}
