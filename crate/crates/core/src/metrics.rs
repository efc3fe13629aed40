//! Evaluation: average precision, rank correlation, ensemble diversity and
//! outlier ratios of training samples.
//!
//! Rankings order instances by descending score; equal scores are broken by
//! ascending instance index so every ranking is a total order.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};

fn undefined<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::UndefinedMetric(msg.into()))
}

/// Instance indices ordered from most to least outlying.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingList(Vec<usize>);

impl RankingList {
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        RankingList(order)
    }

    /// Wraps an explicit order; it must be a permutation of `0..n`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::Input(format!(
                        "ranking is not a permutation (index {i})"
                    )))
                }
            }
        }
        Ok(RankingList(order))
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Self {
        RankingList(self.0.iter().rev().copied().collect())
    }

    /// `positions()[i]` is the rank of instance `i`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (rank, &i) in self.0.iter().enumerate() {
            pos[i] = rank;
        }
        pos
    }
}

/// Un-interpolated average precision: the mean of precision@k over the
/// ranks `k` of the positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 || positives == labels.len() {
        return undefined("average precision needs at least one positive and one negative label");
    }
    let ranking = RankingList::from_scores(scores);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in ranking.order().iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Counts inversions of `v` by merge sort.
fn count_inversions(v: &mut [usize], buf: &mut Vec<usize>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            buf.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall's tau-a between two total rankings of the same instances,
/// computed in `O(n log n)`.
pub fn kendall_tau(a: &RankingList, b: &RankingList) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "rankings over {} and {} instances",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return undefined("Kendall's tau needs at least two instances");
    }
    let pos_b = b.positions();
    let mut seq: Vec<usize> = a.order().iter().map(|&i| pos_b[i]).collect();
    let discordant = count_inversions(&mut seq, &mut Vec::with_capacity(n));
    let pairs = (n as u64 * (n as u64 - 1) / 2) as f64;
    Ok(1.0 - 2.0 * discordant as f64 / pairs)
}

/// One minus the mean pairwise Kendall's tau: 0 for identical rankings,
/// 2 for a pair of exactly reversed rankings.
pub fn ensemble_diversity(rankings: &[RankingList]) -> Result<f64> {
    let k = rankings.len();
    if k < 2 {
        return undefined("diversity needs at least two rankings");
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += kendall_tau(&rankings[i], &rankings[j])?;
        }
    }
    Ok(1.0 - 2.0 * sum / (k * (k - 1)) as f64)
}

/// Fraction of drawn indices, counted with multiplicity, that are outliers.
pub fn outlier_ratio(sample_indices: &[usize], labels: &[bool]) -> Result<f64> {
    if sample_indices.is_empty() {
        return Ok(0.0);
    }
    let mut outliers = 0usize;
    for &i in sample_indices {
        match labels.get(i) {
            Some(true) => outliers += 1,
            Some(false) => {}
            None => return Err(Error::Input(format!("sample index {i} out of range"))),
        }
    }
    Ok(outliers as f64 / sample_indices.len() as f64)
}

/// Rankings produced by the scoring components (1..m).
pub fn component_rankings(state: &EnsembleState) -> Vec<RankingList> {
    state
        .scoring_components()
        .iter()
        .map(|c| RankingList::from_scores(&c.errors))
        .collect()
}

/// Average precision of each scoring component's own errors.
pub fn per_component_ap(state: &EnsembleState, labels: &[bool]) -> Result<Vec<f64>> {
    state
        .scoring_components()
        .iter()
        .map(|c| average_precision(&c.errors, labels))
        .collect()
}

/// Box-plot statistics; quartiles use linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    FiveNumberSummary::of(values).map(|s| s.median)
}
