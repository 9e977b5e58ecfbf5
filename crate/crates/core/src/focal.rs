//! Saturation-aware reweighting of the rubric scalarizer.
//!
//! The base pass produces group rewards under `w_base`. Those rewards are
//! turned into Gibbs weights over rollouts, which weight the per-rollout
//! criterion means into a saturation estimate `P^(k)` in `[0, 1]`. Criteria
//! with little headroom `1 - P^(k)` are damped by `(1 - P + ε)^γ`, the result
//! is renormalized to the base mass, and the same score tensor is aggregated
//! again under the focal weights. No second judging pass is involved.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rubric::{group_advantage, group_rewards, Rubric, ScoreTensor, SynthesisConfig};

/// Softmax of the base rewards at temperature `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsWeights(Vec<f64>);

impl GibbsWeights {
    pub fn uniform(group_size: usize) -> Self {
        Self(vec![1.0 / group_size as f64; group_size])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Per-criterion saturation `P^(k)` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationVector(Vec<f64>);

impl SaturationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter {
                name: "saturation",
                value: bad,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn headroom(&self) -> Vec<f64> {
        self.0.iter().map(|p| 1.0 - p).collect()
    }
}

/// Mass-preserving reweighting of the base scalarizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocalWeights(Vec<f64>);

impl FocalWeights {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `G x K` matrix of `s̄_i^(k)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionMeans {
    group_size: usize,
    num_criteria: usize,
    data: Vec<f64>,
}

impl CriterionMeans {
    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn num_criteria(&self) -> usize {
        self.num_criteria
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.num_criteria + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.num_criteria..(i + 1) * self.num_criteria]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.group_size).map(|i| self.get(i, k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisResult {
    pub base_rewards: Vec<f64>,
    pub gibbs: GibbsWeights,
    pub criterion_means: CriterionMeans,
    pub saturation: SaturationVector,
    pub focal_weights: FocalWeights,
    pub focal_rewards: Vec<f64>,
    pub base_advantages: Vec<f64>,
    pub focal_advantages: Vec<f64>,
    /// Degenerate-input notices; also sent to the `log` warning channel.
    pub warnings: Vec<String>,
}

/// Ablations of the focal pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Ablation {
    /// Saturation from a uniform average over rollouts instead of Gibbs weights.
    NoFrontierWeighting,
    /// Aggregate with fixed stored weights; no online reweighting.
    FrozenScalarizer(Vec<f64>),
}

/// `r_i = exp(R_i/T) / Σ exp(R_i'/T)`, evaluated with max-subtraction.
pub fn gibbs_weights(base_rewards: &[f64], temperature: f64) -> Result<GibbsWeights> {
    if base_rewards.is_empty() {
        return Err(Error::EmptyInput("base rewards"));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            value: temperature,
            reason: "must be positive",
        });
    }
    let max = base_rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = base_rewards
        .iter()
        .map(|r| ((r - max) / temperature).exp())
        .collect();
    let z: f64 = exps.iter().sum();
    Ok(GibbsWeights(exps.into_iter().map(|e| e / z).collect()))
}

/// `s̄_i^(k) = (1/(G-1)) Σ_{j≠i} s_{i,j}^(k)`.
pub fn criterion_means(tensor: &ScoreTensor) -> Result<CriterionMeans> {
    let g = tensor.group_size();
    if g < 2 {
        return Err(Error::InsufficientGroup { size: g, min: 2 });
    }
    let k = tensor.num_criteria();
    let mut data = vec![0.0; g * k];
    for (i, _, scores) in tensor.pairs() {
        for (acc, s) in data[i * k..(i + 1) * k].iter_mut().zip(scores) {
            *acc += s;
        }
    }
    let denom = (g - 1) as f64;
    data.iter_mut().for_each(|v| *v /= denom);
    Ok(CriterionMeans {
        group_size: g,
        num_criteria: k,
        data,
    })
}

/// `P^(k) = <r, s̄^(k)> / S_max`.
pub fn saturation(
    means: &CriterionMeans,
    gibbs: &GibbsWeights,
    s_max: f64,
) -> Result<SaturationVector> {
    if gibbs.values().len() != means.group_size() {
        return Err(Error::DimensionMismatch {
            what: "gibbs weights",
            expected: means.group_size(),
            found: gibbs.values().len(),
        });
    }
    let values = (0..means.num_criteria())
        .map(|k| {
            let dot: f64 = gibbs
                .values()
                .iter()
                .enumerate()
                .map(|(i, r)| r * means.get(i, k))
                .sum();
            // Rounding in the weights can push a fully saturated column a few ulps past 1.
            (dot / s_max).clamp(0.0, 1.0)
        })
        .collect();
    SaturationVector::new(values)
}

/// `w_focal = (<w_base,1> / <w̃,1>) w̃` with `w̃ = (1 - P + ε)^γ ⊙ w_base`.
pub fn focal_weights(
    saturation: &SaturationVector,
    base: &[f64],
    gamma: f64,
    epsilon: f64,
) -> Result<FocalWeights> {
    let p = saturation.values();
    if p.len() != base.len() {
        return Err(Error::DimensionMismatch {
            what: "saturation",
            expected: base.len(),
            found: p.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must be positive",
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be positive",
        });
    }
    let mass: f64 = base.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroVector("base weights"));
    }

    let factors: Vec<f64> = p.iter().map(|pk| (1.0 - pk + epsilon).powf(gamma)).collect();

    // Equal factors on the support cancel in the normalization.
    let mut support = base.iter().zip(&factors).filter(|(w, _)| **w > 0.0).map(|(_, f)| *f);
    let first = support.next();
    if let Some(first) = first {
        if support.all(|f| f == first) {
            return Ok(FocalWeights(base.to_vec()));
        }
    }

    let tilde: Vec<f64> = base.iter().zip(&factors).map(|(w, f)| w * f).collect();
    let tilde_mass: f64 = tilde.iter().sum();
    let scale = mass / tilde_mass;
    Ok(FocalWeights(tilde.into_iter().map(|w| w * scale).collect()))
}

fn check_inputs(tensor: &ScoreTensor, rubric: &Rubric, config: &SynthesisConfig) -> Result<()> {
    config.validate()?;
    if tensor.num_criteria() != rubric.len() {
        return Err(Error::DimensionMismatch {
            what: "tensor criteria",
            expected: rubric.len(),
            found: tensor.num_criteria(),
        });
    }
    if tensor.group_size() < 2 {
        return Err(Error::InsufficientGroup {
            size: tensor.group_size(),
            min: 2,
        });
    }
    tensor.validate(rubric.s_max())
}

fn degenerate_base_warning(tensor: &ScoreTensor, base_rewards: &[f64]) -> Option<String> {
    if base_rewards.iter().any(|r| *r != 0.0) {
        return None;
    }
    let varies = tensor.pairs().any(|(i, j, s)| {
        let back = tensor.pair(j, i).expect("valid pair");
        s.iter().zip(back).any(|(a, b)| a != b)
    });
    varies.then(|| {
        "all base rewards are zero although scores differ between rollouts; Gibbs weights are uniform"
            .to_string()
    })
}

/// Runs the full focal pipeline on one rollout group.
pub fn synthesize(
    tensor: &ScoreTensor,
    rubric: &Rubric,
    config: &SynthesisConfig,
) -> Result<SynthesisResult> {
    run_pipeline(tensor, rubric, config, None)
}

/// Runs an ablated variant of [`synthesize`].
pub fn synthesize_ablated(
    tensor: &ScoreTensor,
    rubric: &Rubric,
    config: &SynthesisConfig,
    ablation: &Ablation,
) -> Result<SynthesisResult> {
    run_pipeline(tensor, rubric, config, Some(ablation))
}

fn run_pipeline(
    tensor: &ScoreTensor,
    rubric: &Rubric,
    config: &SynthesisConfig,
    ablation: Option<&Ablation>,
) -> Result<SynthesisResult> {
    check_inputs(tensor, rubric, config)?;
    let base = rubric.base_weights();
    let base_rewards = group_rewards(&base, tensor, config.tau)?;

    let mut warnings = Vec::new();
    if let Some(w) = degenerate_base_warning(tensor, &base_rewards) {
        log::debug!("{w}");
        warnings.push(w);
    }

    let gibbs = match ablation {
        Some(Ablation::NoFrontierWeighting) => GibbsWeights::uniform(tensor.group_size()),
        _ => gibbs_weights(&base_rewards, config.temperature)?,
    };
    let means = criterion_means(tensor)?;
    let sat = saturation(&means, &gibbs, rubric.s_max())?;

    let weights = match ablation {
        Some(Ablation::FrozenScalarizer(stored)) => {
            if stored.len() != base.len() {
                return Err(Error::DimensionMismatch {
                    what: "frozen weights",
                    expected: base.len(),
                    found: stored.len(),
                });
            }
            if let Some(&bad) = stored.iter().find(|w| !(**w >= 0.0)) {
                return Err(Error::InvalidParameter {
                    name: "frozen weights",
                    value: bad,
                    reason: "must be nonnegative",
                });
            }
            FocalWeights(stored.clone())
        }
        _ => focal_weights(&sat, &base, config.gamma, config.epsilon)?,
    };

    let focal_rewards = group_rewards(weights.values(), tensor, config.tau)?;
    let base_advantages = group_advantage(&base_rewards, config.advantage_std_floor);
    let focal_advantages = group_advantage(&focal_rewards, config.advantage_std_floor);

    Ok(SynthesisResult {
        base_rewards,
        gibbs,
        criterion_means: means,
        saturation: sat,
        focal_weights: weights,
        focal_rewards,
        base_advantages,
        focal_advantages,
        warnings,
    })
}
