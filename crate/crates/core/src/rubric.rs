//! Rubric domain types and the static pairwise reward.
//!
//! A rollout group of size `G` is judged pairwise: for every ordered pair
//! `(i, j)` with `i != j` the judge returns a criterion-level score vector
//! `s_{i,j}`. A weight vector collapses it into `S_{i,j}(w) = <w, s_{i,j}>`,
//! the margin `Δ_{i,j}(w) = S_{i,j}(w) - S_{j,i}(w)` is mapped to a discrete
//! outcome by [`phi_tau`], and each rollout's reward is the sum of its
//! outcomes against the rest of the group.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default score ceiling.
pub const DEFAULT_S_MAX: f64 = 10.0;
/// Default strong-preference threshold.
pub const DEFAULT_TAU: f64 = 1.0;
/// Default Gibbs temperature.
pub const DEFAULT_TEMPERATURE: f64 = 10.0;
/// Default focal exponent.
pub const DEFAULT_GAMMA: f64 = 2.0;
/// Default headroom smoothing constant.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Below this group standard deviation advantages are reported as zero.
pub const DEFAULT_STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    /// Binary compliance, scored as either 0 or `s_max`.
    HardRule,
    /// Graded on `[0, s_max]`.
    Principle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub kind: CriterionKind,
    pub base_weight: f64,
}

impl Criterion {
    pub fn principle(id: impl Into<String>, base_weight: f64) -> Self {
        Self {
            id: id.into(),
            kind: CriterionKind::Principle,
            base_weight,
        }
    }

    pub fn hard_rule(id: impl Into<String>, base_weight: f64) -> Self {
        Self {
            id: id.into(),
            kind: CriterionKind::HardRule,
            base_weight,
        }
    }
}

/// An ordered list of criteria with a shared score ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    criteria: Vec<Criterion>,
    s_max: f64,
}

impl Rubric {
    pub fn new(criteria: Vec<Criterion>, s_max: f64) -> Result<Self> {
        if criteria.is_empty() {
            return Err(Error::InvalidRubric("rubric needs at least one criterion".into()));
        }
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s_max",
                value: s_max,
                reason: "must be positive and finite",
            });
        }
        let mut seen = HashSet::new();
        for c in &criteria {
            if !(c.base_weight >= 0.0 && c.base_weight.is_finite()) {
                return Err(Error::InvalidRubric(format!(
                    "criterion {} has invalid base weight {}",
                    c.id, c.base_weight
                )));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(Error::InvalidRubric(format!("duplicate criterion id {}", c.id)));
            }
        }
        let mass: f64 = criteria.iter().map(|c| c.base_weight).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidRubric("base weights sum to zero".into()));
        }
        Ok(Self { criteria, s_max })
    }

    /// `k` principles named `c1..ck` with equal weights `1/k`.
    pub fn uniform(k: usize, s_max: f64) -> Result<Self> {
        let w = 1.0 / k.max(1) as f64;
        Self::new(
            (1..=k).map(|n| Criterion::principle(format!("c{n}"), w)).collect(),
            s_max,
        )
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn base_weights(&self) -> Vec<f64> {
        self.criteria.iter().map(|c| c.base_weight).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.criteria.iter().position(|c| c.id == id)
    }
}

/// Ordered-pair criterion scores for one rollout group.
///
/// Stored densely as `G x G x K`; diagonal cells exist in memory but are
/// never read or written through the public API.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    group_size: usize,
    num_criteria: usize,
    data: Vec<f64>,
}

impl ScoreTensor {
    /// Builds a tensor by evaluating `f(i, j, k)` for every off-diagonal pair.
    pub fn from_fn(
        group_size: usize,
        num_criteria: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = vec![0.0; group_size * group_size * num_criteria];
        for i in 0..group_size {
            for j in 0..group_size {
                if i == j {
                    continue;
                }
                for k in 0..num_criteria {
                    data[(i * group_size + j) * num_criteria + k] = f(i, j, k);
                }
            }
        }
        Self {
            group_size,
            num_criteria,
            data,
        }
    }

    /// A tensor with every off-diagonal score equal to `value`.
    pub fn constant(group_size: usize, num_criteria: usize, value: f64) -> Self {
        Self::from_fn(group_size, num_criteria, |_, _, _| value)
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn num_criteria(&self) -> usize {
        self.num_criteria
    }

    fn offset(&self, i: usize, j: usize) -> Result<usize> {
        if i == j || i >= self.group_size || j >= self.group_size {
            return Err(Error::InvalidPair { i, j });
        }
        Ok((i * self.group_size + j) * self.num_criteria)
    }

    /// The score vector `s_{i,j}`.
    pub fn pair(&self, i: usize, j: usize) -> Result<&[f64]> {
        let at = self.offset(i, j)?;
        Ok(&self.data[at..at + self.num_criteria])
    }

    pub fn pair_mut(&mut self, i: usize, j: usize) -> Result<&mut [f64]> {
        let at = self.offset(i, j)?;
        let k = self.num_criteria;
        Ok(&mut self.data[at..at + k])
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        let pair = self.pair(i, j)?;
        pair.get(k).copied().ok_or(Error::DimensionMismatch {
            what: "criterion index",
            expected: self.num_criteria,
            found: k,
        })
    }

    /// Iterates over `(i, j, s_{i,j})` for all ordered pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        let g = self.group_size;
        (0..g).flat_map(move |i| {
            (0..g).filter(move |&j| j != i).map(move |j| {
                let at = (i * g + j) * self.num_criteria;
                (i, j, &self.data[at..at + self.num_criteria])
            })
        })
    }

    /// Checks every score lies in `[0, s_max]`.
    pub fn validate(&self, s_max: f64) -> Result<()> {
        for (i, j, scores) in self.pairs() {
            for (k, &v) in scores.iter().enumerate() {
                if !(0.0..=s_max).contains(&v) {
                    return Err(Error::ScoreOutOfRange {
                        i,
                        j,
                        k,
                        value: v,
                        s_max,
                    });
                }
            }
        }
        Ok(())
    }

    /// Copy of this tensor with `shift` added to criterion `k` of every pair.
    pub fn shifted(&self, k: usize, shift: f64) -> Self {
        let mut out = self.clone();
        let kk = self.num_criteria;
        for i in 0..self.group_size {
            for j in 0..self.group_size {
                if i != j {
                    out.data[(i * self.group_size + j) * kk + k] += shift;
                }
            }
        }
        out
    }
}

/// Hyper-parameters of the reward pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub tau: f64,
    pub temperature: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub advantage_std_floor: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            temperature: DEFAULT_TEMPERATURE,
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
            advantage_std_floor: DEFAULT_STD_FLOOR,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau", self.tau),
            ("temperature", self.temperature),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.advantage_std_floor >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "advantage_std_floor",
                value: self.advantage_std_floor,
                reason: "must be nonnegative",
            });
        }
        Ok(())
    }
}

/// `S(w) = <w, s>`.
pub fn weighted_score(weights: &[f64], pair_scores: &[f64]) -> Result<f64> {
    if weights.len() != pair_scores.len() {
        return Err(Error::DimensionMismatch {
            what: "pair scores",
            expected: weights.len(),
            found: pair_scores.len(),
        });
    }
    Ok(weights.iter().zip(pair_scores).map(|(w, s)| w * s).sum())
}

/// `Δ_{i,j}(w) = S_{i,j}(w) - S_{j,i}(w)`.
pub fn pairwise_margin(weights: &[f64], tensor: &ScoreTensor, i: usize, j: usize) -> Result<f64> {
    let forward = weighted_score(weights, tensor.pair(i, j)?)?;
    let backward = weighted_score(weights, tensor.pair(j, i)?)?;
    Ok(forward - backward)
}

/// Maps a margin to `{-2, -1, 0, 1, 2}`: strong outcomes at `|Δ| >= tau`.
pub fn phi_tau(delta: f64, tau: f64) -> i8 {
    debug_assert!(tau > 0.0);
    if delta == 0.0 || delta.is_nan() {
        return 0;
    }
    let sign: i8 = if delta > 0.0 { 1 } else { -1 };
    if delta.abs() >= tau {
        2 * sign
    } else {
        sign
    }
}

fn require_group(tensor: &ScoreTensor, weights: &[f64]) -> Result<()> {
    if tensor.group_size() < 2 {
        return Err(Error::InsufficientGroup {
            size: tensor.group_size(),
            min: 2,
        });
    }
    if weights.len() != tensor.num_criteria() {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: tensor.num_criteria(),
            found: weights.len(),
        });
    }
    Ok(())
}

/// `R_i(w) = Σ_{j≠i} Φ_τ(Δ_{i,j}(w))` for every rollout.
pub fn group_rewards(weights: &[f64], tensor: &ScoreTensor, tau: f64) -> Result<Vec<f64>> {
    let outcomes = pair_outcomes(weights, tensor, tau)?;
    Ok((0..outcomes.group_size())
        .map(|i| outcomes.row_sum(i) as f64)
        .collect())
}

/// Matrix of discrete outcomes `Φ_τ(Δ_{i,j}(w))` for all ordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairOutcomes {
    group_size: usize,
    values: Vec<i8>,
}

impl PairOutcomes {
    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn get(&self, i: usize, j: usize) -> Option<i8> {
        (i != j && i < self.group_size && j < self.group_size)
            .then(|| self.values[i * self.group_size + j])
    }

    pub fn row_sum(&self, i: usize) -> i64 {
        let g = self.group_size;
        self.values[i * g..(i + 1) * g].iter().map(|&v| v as i64).sum()
    }

    /// `(i, j, outcome)` over all ordered pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        let g = self.group_size;
        (0..g).flat_map(move |i| {
            (0..g)
                .filter(move |&j| j != i)
                .map(move |j| (i, j, self.values[i * g + j]))
        })
    }
}

pub fn pair_outcomes(weights: &[f64], tensor: &ScoreTensor, tau: f64) -> Result<PairOutcomes> {
    require_group(tensor, weights)?;
    let g = tensor.group_size();
    let mut values = vec![0i8; g * g];
    for i in 0..g {
        for j in (i + 1)..g {
            let phi = phi_tau(pairwise_margin(weights, tensor, i, j)?, tau);
            // Φ is odd and the margin antisymmetric, so one evaluation fills both cells.
            values[i * g + j] = phi;
            values[j * g + i] = -phi;
        }
    }
    Ok(PairOutcomes {
        group_size: g,
        values,
    })
}

/// Group-relative advantage `(R_i - mean) / std` with population std.
///
/// Returns all zeros when the std falls below `std_floor`.
pub fn group_advantage(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std >= std_floor) || std == 0.0 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / std).collect()
}
