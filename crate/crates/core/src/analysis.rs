//! Rubric-level diagnostics: difficulty buckets, headroom quintiles,
//! outcome transitions between static and focal aggregation, weight
//! similarity and pass rates.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::focal::SaturationVector;
use crate::rubric::PairOutcomes;

/// Initial-score threshold below which a criterion is hard.
pub const HARD_THRESHOLD: f64 = 5.0;
/// Initial-score threshold above which a criterion is easy.
pub const EASY_THRESHOLD: f64 = 8.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Hard,
    Medium,
    Easy,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Hard, Bucket::Medium, Bucket::Easy];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Hard => "hard",
            Bucket::Medium => "medium",
            Bucket::Easy => "easy",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels each criterion by its initial mean score. Ties go to `Medium`.
pub fn bucket_criteria(
    initial_scores: &[f64],
    hard_threshold: f64,
    easy_threshold: f64,
) -> Result<Vec<Bucket>> {
    if !(hard_threshold < easy_threshold) {
        return Err(Error::InvertedThresholds {
            hard: hard_threshold,
            easy: easy_threshold,
        });
    }
    Ok(initial_scores
        .iter()
        .map(|&s| {
            if s < hard_threshold {
                Bucket::Hard
            } else if s > easy_threshold {
                Bucket::Easy
            } else {
                Bucket::Medium
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuintileShares {
    /// Normalized mean weight share per group, lowest headroom first.
    pub shares: Vec<f64>,
    /// Criteria per group.
    pub sizes: Vec<usize>,
    /// Criterion indices per group.
    pub members: Vec<Vec<usize>>,
}

/// Groups criteria into headroom quintiles and reports how the weight mass
/// is spread across them.
///
/// Criteria are sorted by `1 - P` ascending (ties by index) and split into
/// five groups of near-equal size, with any remainder placed in the
/// highest-headroom groups. Each group's share is its mean weight
/// normalized so the shares sum to one. With fewer than five criteria each
/// criterion forms its own group.
pub fn headroom_quintiles(saturation: &SaturationVector, weights: &[f64]) -> Result<QuintileShares> {
    let p = saturation.values();
    let k = p.len();
    if weights.len() != k {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: k,
            found: weights.len(),
        });
    }
    if k == 0 {
        return Err(Error::EmptyInput("saturation"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVector("weights"));
    }

    let n_groups = k.min(5);
    if k < 5 {
        log::warn!("only {k} criteria; reporting {k} headroom groups instead of quintiles");
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (1.0 - p[a]).total_cmp(&(1.0 - p[b])).then(a.cmp(&b)));

    let base = k / n_groups;
    let rem = k % n_groups;
    let sizes: Vec<usize> = (0..n_groups)
        .map(|g| base + usize::from(g >= n_groups - rem))
        .collect();

    let mut members = Vec::with_capacity(n_groups);
    let mut at = 0;
    for &size in &sizes {
        members.push(order[at..at + size].to_vec());
        at += size;
    }
    let means: Vec<f64> = members
        .iter()
        .map(|m| m.iter().map(|&i| weights[i] / total).sum::<f64>() / m.len() as f64)
        .collect();
    let norm: f64 = means.iter().sum();
    Ok(QuintileShares {
        shares: means.iter().map(|m| m / norm).collect(),
        sizes,
        members,
    })
}

/// Pair-outcome transitions, indexed `[static + 2][focal + 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TransitionMatrix(pub [[u64; 5]; 5]);

impl TransitionMatrix {
    pub const OUTCOMES: [i8; 5] = [-2, -1, 0, 1, 2];

    pub fn get(&self, from: i8, to: i8) -> u64 {
        self.0[(from + 2) as usize][(to + 2) as usize]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..5).map(|i| self.0[i][i]).sum()
    }

    pub fn row_sums(&self) -> [u64; 5] {
        let mut out = [0; 5];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row.iter().sum();
        }
        out
    }

    pub fn col_sums(&self) -> [u64; 5] {
        let mut out = [0; 5];
        for row in &self.0 {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn accumulate(&mut self, other: &TransitionMatrix) {
        for (row, orow) in self.0.iter_mut().zip(&other.0) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
    }
}

/// Counts how each ordered pair's outcome moves from static to focal weights.
pub fn outcome_transition_matrix(
    static_outcomes: &PairOutcomes,
    focal_outcomes: &PairOutcomes,
) -> Result<TransitionMatrix> {
    let g = static_outcomes.group_size();
    if focal_outcomes.group_size() != g {
        return Err(Error::DimensionMismatch {
            what: "focal outcomes group size",
            expected: g,
            found: focal_outcomes.group_size(),
        });
    }
    let mut m = TransitionMatrix::default();
    for (i, j, from) in static_outcomes.iter() {
        let to = focal_outcomes.get(i, j).expect("same group size");
        m.0[(from + 2) as usize][(to + 2) as usize] += 1;
    }
    Ok(m)
}

pub fn weight_cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 {
        return Err(Error::ZeroVector("first weight vector"));
    }
    if nb == 0.0 {
        return Err(Error::ZeroVector("second weight vector"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Fraction of scores strictly above `threshold`.
pub fn pass_rate(scores: &[f64], threshold: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    let passed = scores.iter().filter(|&&s| s > threshold).count();
    Ok(passed as f64 / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rubric::{pair_outcomes, ScoreTensor};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bucket_examples() {
        let b = bucket_criteria(&[3.24, 9.37, 5.0, 8.5, 7.0], HARD_THRESHOLD, EASY_THRESHOLD)
            .unwrap();
        assert_eq!(
            b,
            vec![Bucket::Hard, Bucket::Easy, Bucket::Medium, Bucket::Medium, Bucket::Medium]
        );
        assert!(matches!(
            bucket_criteria(&[1.0], 8.5, 5.0),
            Err(Error::InvertedThresholds { .. })
        ));
    }

    #[test]
    fn quintile_examples() {
        let p = SaturationVector::new(vec![0.1, 0.9, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 0.0])
            .unwrap();
        let q = headroom_quintiles(&p, &[1.0; 10]).unwrap();
        for s in &q.shares {
            assert_abs_diff_eq!(*s, 0.2, epsilon = 1e-15);
        }

        // weight grows with headroom rank
        let headroom = p.headroom();
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| headroom[a].total_cmp(&headroom[b]));
        let mut w = vec![0.0; 10];
        for (rank, &i) in order.iter().enumerate() {
            w[i] = (rank + 1) as f64;
        }
        let q = headroom_quintiles(&p, &w).unwrap();
        assert!(q.shares.windows(2).all(|s| s[0] < s[1]));
        assert_abs_diff_eq!(q.shares.iter().sum::<f64>(), 1.0, epsilon = 1e-15);

        let p5 = SaturationVector::new(vec![0.9, 0.1, 0.5, 0.7, 0.3]).unwrap();
        let w5 = [0.1, 0.3, 0.2, 0.15, 0.25];
        let q = headroom_quintiles(&p5, &w5).unwrap();
        // lowest headroom first: criteria 0, 3, 2, 4, 1
        assert_eq!(q.members, vec![vec![0], vec![3], vec![2], vec![4], vec![1]]);
        let expected = [0.1, 0.15, 0.2, 0.25, 0.3];
        for (s, e) in q.shares.iter().zip(expected) {
            assert_abs_diff_eq!(*s, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn quintile_remainder_goes_to_high_headroom() {
        let p = SaturationVector::new((0..7).map(|i| 1.0 - i as f64 / 10.0).collect()).unwrap();
        let q = headroom_quintiles(&p, &[1.0; 7]).unwrap();
        assert_eq!(q.sizes, vec![1, 1, 1, 2, 2]);
        assert_eq!(q.members[4], vec![5, 6]);

        let q = headroom_quintiles(&SaturationVector::new(vec![0.2, 0.4]).unwrap(), &[1.0, 3.0])
            .unwrap();
        assert_eq!(q.sizes, vec![1, 1]);
    }

    #[test]
    fn transition_examples() {
        let t = ScoreTensor::from_fn(4, 2, |i, j, k| ((i * 5 + j * 3 + k) % 9) as f64);
        let w = [0.5, 0.5];
        let o = pair_outcomes(&w, &t, 1.0).unwrap();
        let m = outcome_transition_matrix(&o, &o).unwrap();
        assert_eq!(m.total(), 12);
        assert_eq!(m.diagonal(), 12);

        // Δ_{0,1} = 0.6 under base weights, 1.2 under focal weights.
        let t = ScoreTensor::from_fn(2, 2, |i, _, k| if i == 0 { [5.0, 6.2][k] } else { [5.0, 5.0][k] });
        let base = pair_outcomes(&[0.5, 0.5], &t, 1.0).unwrap();
        let focal = pair_outcomes(&[0.0, 1.0], &t, 1.0).unwrap();
        let m = outcome_transition_matrix(&base, &focal).unwrap();
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.get(-1, -2), 1);
        assert_eq!(m.total(), 2);
        assert_eq!(m.row_sums().iter().sum::<u64>(), 2);
        assert_eq!(m.col_sums().iter().sum::<u64>(), 2);

        let other = pair_outcomes(&[0.5, 0.5], &ScoreTensor::constant(3, 2, 1.0), 1.0).unwrap();
        assert!(outcome_transition_matrix(&base, &other).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(weight_cosine(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(weight_cosine(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            weight_cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert!(weight_cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn pass_rate_examples() {
        assert_eq!(pass_rate(&[10.0; 4], 8.5).unwrap(), 1.0);
        assert!(pass_rate(&[], 5.0).is_err());
        assert_abs_diff_eq!(pass_rate(&[4.0, 6.0, 8.0], 5.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(pass_rate(&[5.0], 5.0).unwrap(), 0.0);
    }
}
