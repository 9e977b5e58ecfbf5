//! Synthetic rubric-saturation laboratory.
//!
//! A pseudo-policy holds one latent ability per criterion. Each step it
//! emits a rollout group whose judge scores are noisy functions of those
//! abilities, the group is aggregated under the chosen scalarizer, and each
//! ability moves toward 1 in proportion to the weight share its criterion
//! received, its improvement rate, and its remaining headroom.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{bucket_criteria, pass_rate, Bucket, EASY_THRESHOLD, HARD_THRESHOLD};
use crate::error::{Error, Result};
use crate::focal::{synthesize, synthesize_ablated, Ablation, SynthesisResult};
use crate::rubric::{CriterionKind, Rubric, ScoreTensor, SynthesisConfig};
use crate::format::fmt_sig;

/// Standard deviation of the per-comparison judge noise, in score units.
pub const DEFAULT_COMPARISON_NOISE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionProfile {
    pub initial_ability: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    pub profile: Vec<CriterionProfile>,
    /// Std of the per-rollout quality perturbation (ability units).
    pub noise_scale: f64,
    /// Std of the per-comparison score noise (score units).
    pub comparison_noise: f64,
    pub group_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self::heterogeneous(0)
    }
}

impl SimSpec {
    /// One hard, one medium and one easy criterion.
    pub fn heterogeneous(seed: u64) -> Self {
        Self {
            profile: vec![
                CriterionProfile {
                    initial_ability: 0.2,
                    rate: 0.15,
                },
                CriterionProfile {
                    initial_ability: 0.6,
                    rate: 1.0,
                },
                CriterionProfile {
                    initial_ability: 0.9,
                    rate: 10.0,
                },
            ],
            noise_scale: 0.15,
            comparison_noise: DEFAULT_COMPARISON_NOISE,
            group_size: 8,
            steps: 200,
            learning_rate: 0.05,
            seed,
        }
    }

    pub fn num_criteria(&self) -> usize {
        self.profile.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.profile.is_empty() {
            return Err(Error::EmptyInput("difficulty profile"));
        }
        for p in &self.profile {
            if !(0.0..=1.0).contains(&p.initial_ability) {
                return Err(Error::InvalidParameter {
                    name: "initial_ability",
                    value: p.initial_ability,
                    reason: "must lie in [0, 1]",
                });
            }
            if !(p.rate > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    value: p.rate,
                    reason: "must be positive",
                });
            }
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_scale",
                value: self.noise_scale,
                reason: "must be nonnegative",
            });
        }
        if !(self.comparison_noise >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "comparison_noise",
                value: self.comparison_noise,
                reason: "must be nonnegative",
            });
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                value: self.learning_rate,
                reason: "must be positive",
            });
        }
        if self.group_size < 2 {
            return Err(Error::InsufficientGroup {
                size: self.group_size,
                min: 2,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimEnvironment {
    abilities: Vec<f64>,
    rates: Vec<f64>,
    step_count: usize,
    noise_scale: f64,
    comparison_noise: f64,
    rng: ChaCha8Rng,
}

impl SimEnvironment {
    pub fn new(spec: &SimSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            abilities: spec.profile.iter().map(|p| p.initial_ability).collect(),
            rates: spec.profile.iter().map(|p| p.rate).collect(),
            step_count: 0,
            noise_scale: spec.noise_scale,
            comparison_noise: spec.comparison_noise,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        })
    }

    pub fn abilities(&self) -> &[f64] {
        &self.abilities
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }
}

/// Draws one judged rollout group from the current abilities.
///
/// Rollout `i` gets quality `q_i^(k) = clamp(ability^(k) + noise)`. Principle
/// scores are `s_max·q_i^(k)` plus comparison noise, clamped; hard rules
/// report `s_max` when that noisy score reaches half the ceiling and 0
/// otherwise.
pub fn generate_scores(
    env: &mut SimEnvironment,
    rubric: &Rubric,
    group_size: usize,
) -> Result<ScoreTensor> {
    if group_size < 2 {
        return Err(Error::InsufficientGroup {
            size: group_size,
            min: 2,
        });
    }
    let k = env.abilities.len();
    if rubric.len() != k {
        return Err(Error::DimensionMismatch {
            what: "rubric criteria",
            expected: k,
            found: rubric.len(),
        });
    }
    let s_max = rubric.s_max();
    let mut quality = vec![0.0; group_size * k];
    for i in 0..group_size {
        for kk in 0..k {
            let z: f64 = env.rng.sample(StandardNormal);
            quality[i * k + kk] = (env.abilities[kk] + env.noise_scale * z).clamp(0.0, 1.0);
        }
    }
    let kinds: Vec<CriterionKind> = rubric.criteria().iter().map(|c| c.kind).collect();
    let noise = env.comparison_noise;
    let rng = &mut env.rng;
    Ok(ScoreTensor::from_fn(group_size, k, |i, _, kk| {
        let z: f64 = rng.sample(StandardNormal);
        let raw = s_max * quality[i * k + kk] + noise * z;
        match kinds[kk] {
            CriterionKind::Principle => raw.clamp(0.0, s_max),
            CriterionKind::HardRule => {
                if raw >= 0.5 * s_max {
                    s_max
                } else {
                    0.0
                }
            }
        }
    }))
}

/// Applies one step of training pressure with the weights actually used.
///
/// `ability += lr · (w/Σw) · rate · (1 - ability)`, clamped to `[0, 1]`.
pub fn step_env(env: &mut SimEnvironment, applied_weights: &[f64], learning_rate: f64) -> Result<()> {
    if applied_weights.len() != env.abilities.len() {
        return Err(Error::DimensionMismatch {
            what: "applied weights",
            expected: env.abilities.len(),
            found: applied_weights.len(),
        });
    }
    if let Some(&bad) = applied_weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "applied weights",
            value: bad,
            reason: "must be nonnegative",
        });
    }
    env.step_count += 1;
    let total: f64 = applied_weights.iter().sum();
    if total == 0.0 {
        log::warn!("step {}: all applied weights are zero; abilities unchanged", env.step_count);
        return Ok(());
    }
    for ((a, w), rate) in env.abilities.iter_mut().zip(applied_weights).zip(&env.rates) {
        let gain = learning_rate * (w / total) * rate * (1.0 - *a);
        *a = (*a + gain).clamp(0.0, 1.0);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Static,
    Focal,
    NoFrontier,
    Frozen,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Static, Mode::Focal, Mode::NoFrontier, Mode::Frozen];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Focal => "focal",
            Mode::NoFrontier => "no-frontier",
            Mode::Frozen => "frozen",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::parse("mode", format!("unknown mode {s:?}")))
    }
}

/// Pass rates per difficulty bucket; `None` for empty buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketPassRates {
    pub hard: Option<f64>,
    pub medium: Option<f64>,
    pub easy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Abilities at the start of the step.
    pub abilities: Vec<f64>,
    pub saturation: Vec<f64>,
    /// Weights applied to the abilities in this step.
    pub weights: Vec<f64>,
    /// Per-criterion mean judge score over the group.
    pub mean_scores: Vec<f64>,
    pub pass_rates: BucketPassRates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub mode: Mode,
    pub seed: u64,
    pub criterion_ids: Vec<String>,
    /// Difficulty buckets from the initial abilities.
    pub buckets: Vec<Bucket>,
    /// `steps + 1` records: every training step plus the final state.
    pub steps: Vec<StepRecord>,
}

impl TrajectoryRecord {
    pub fn final_abilities(&self) -> &[f64] {
        &self.steps.last().expect("at least the initial record").abilities
    }

    /// CSV with one row per step per criterion.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "criterion_id", "ability", "P", "weight", "bucket"])?;
        for rec in &self.steps {
            for (k, id) in self.criterion_ids.iter().enumerate() {
                w.write_record([
                    rec.step.to_string(),
                    id.clone(),
                    fmt_sig(rec.abilities[k]),
                    fmt_sig(rec.saturation[k]),
                    fmt_sig(rec.weights[k]),
                    self.buckets[k].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn bucket_pass_rates(result: &SynthesisResult, buckets: &[Bucket]) -> Result<BucketPassRates> {
    let means = &result.criterion_means;
    let rate_for = |bucket: Bucket, threshold: f64| -> Result<Option<f64>> {
        let scores: Vec<f64> = (0..means.num_criteria())
            .filter(|&k| buckets[k] == bucket)
            .flat_map(|k| means.column(k))
            .collect();
        if scores.is_empty() {
            Ok(None)
        } else {
            pass_rate(&scores, threshold).map(Some)
        }
    };
    Ok(BucketPassRates {
        hard: rate_for(Bucket::Hard, HARD_THRESHOLD)?,
        medium: rate_for(Bucket::Medium, HARD_THRESHOLD)?,
        easy: rate_for(Bucket::Easy, EASY_THRESHOLD)?,
    })
}

/// Runs one seeded training trajectory under the given scalarizer.
pub fn run_experiment(
    spec: &SimSpec,
    rubric: &Rubric,
    config: &SynthesisConfig,
    mode: Mode,
) -> Result<TrajectoryRecord> {
    let mut env = SimEnvironment::new(spec)?;
    if rubric.len() != spec.num_criteria() {
        return Err(Error::DimensionMismatch {
            what: "rubric criteria",
            expected: spec.num_criteria(),
            found: rubric.len(),
        });
    }
    config.validate()?;
    let initial_scores: Vec<f64> = env.abilities.iter().map(|a| a * rubric.s_max()).collect();
    let buckets = bucket_criteria(&initial_scores, HARD_THRESHOLD, EASY_THRESHOLD)?;
    let base = rubric.base_weights();
    let mut frozen: Option<Vec<f64>> = None;
    let mut steps = Vec::with_capacity(spec.steps + 1);

    for step in 0..=spec.steps {
        let tensor = generate_scores(&mut env, rubric, spec.group_size)?;
        let result = match mode {
            Mode::Static | Mode::Focal => synthesize(&tensor, rubric, config)?,
            Mode::NoFrontier => {
                synthesize_ablated(&tensor, rubric, config, &Ablation::NoFrontierWeighting)?
            }
            Mode::Frozen => {
                // The focal weights from the first group stay fixed for the run.
                let stored = match &frozen {
                    Some(w) => w.clone(),
                    None => synthesize(&tensor, rubric, config)?.focal_weights.into_inner(),
                };
                let r = synthesize_ablated(
                    &tensor,
                    rubric,
                    config,
                    &Ablation::FrozenScalarizer(stored.clone()),
                )?;
                frozen = Some(stored);
                r
            }
        };
        let weights = match mode {
            Mode::Static => base.clone(),
            _ => result.focal_weights.values().to_vec(),
        };
        let mean_scores = (0..rubric.len())
            .map(|k| {
                let col = result.criterion_means.column(k);
                col.iter().sum::<f64>() / col.len() as f64
            })
            .collect();
        steps.push(StepRecord {
            step,
            abilities: env.abilities.clone(),
            saturation: result.saturation.values().to_vec(),
            weights: weights.clone(),
            mean_scores,
            pass_rates: bucket_pass_rates(&result, &buckets)?,
        });
        if step < spec.steps {
            step_env(&mut env, &weights, spec.learning_rate)?;
        }
    }

    Ok(TrajectoryRecord {
        mode,
        seed: spec.seed,
        criterion_ids: rubric.criteria().iter().map(|c| c.id.clone()).collect(),
        buckets,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rubric::Criterion;
    use approx::assert_abs_diff_eq;

    fn spec_with(profile: &[(f64, f64)], noise: f64, comparison: f64) -> SimSpec {
        SimSpec {
            profile: profile
                .iter()
                .map(|&(a, r)| CriterionProfile {
                    initial_ability: a,
                    rate: r,
                })
                .collect(),
            noise_scale: noise,
            comparison_noise: comparison,
            group_size: 4,
            steps: 10,
            learning_rate: 0.1,
            seed: 5,
        }
    }

    #[test]
    fn noiseless_scores_are_flat() {
        let spec = spec_with(&[(0.4, 1.0), (0.7, 1.0)], 0.0, 0.0);
        let mut env = SimEnvironment::new(&spec).unwrap();
        let rubric = Rubric::uniform(2, 10.0).unwrap();
        let t = generate_scores(&mut env, &rubric, 5).unwrap();
        for (_, _, s) in t.pairs() {
            assert_abs_diff_eq!(s[0], 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s[1], 7.0, epsilon = 1e-12);
        }
        let r = crate::rubric::group_rewards(&rubric.base_weights(), &t, 1.0).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn full_ability_hits_ceiling() {
        let spec = spec_with(&[(1.0, 1.0)], 0.0, 0.0);
        let mut env = SimEnvironment::new(&spec).unwrap();
        let t = generate_scores(&mut env, &Rubric::uniform(1, 10.0).unwrap(), 3).unwrap();
        assert!(t.pairs().all(|(_, _, s)| s[0] == 10.0));
    }

    #[test]
    fn scores_replay_under_seed() {
        let spec = SimSpec::heterogeneous(17);
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let a = generate_scores(&mut SimEnvironment::new(&spec).unwrap(), &rubric, 6).unwrap();
        let b = generate_scores(&mut SimEnvironment::new(&spec).unwrap(), &rubric, 6).unwrap();
        assert_eq!(a, b);
        a.validate(10.0).unwrap();
    }

    #[test]
    fn hard_rules_are_binary() {
        let spec = spec_with(&[(0.5, 1.0), (0.5, 1.0)], 0.2, 0.5);
        let mut env = SimEnvironment::new(&spec).unwrap();
        let rubric = Rubric::new(
            vec![Criterion::hard_rule("safe", 0.5), Criterion::principle("clear", 0.5)],
            10.0,
        )
        .unwrap();
        let t = generate_scores(&mut env, &rubric, 6).unwrap();
        assert!(t.pairs().all(|(_, _, s)| s[0] == 0.0 || s[0] == 10.0));
    }

    #[test]
    fn step_examples() {
        let spec = spec_with(&[(1.0, 1.0), (0.2, 1.0), (0.5, 2.0)], 0.1, 0.25);
        let mut env = SimEnvironment::new(&spec).unwrap();
        step_env(&mut env, &[1.0, 0.0, 1.0], 0.1).unwrap();
        assert_eq!(env.abilities()[0], 1.0);
        assert_eq!(env.abilities()[1], 0.2);
        // 0.5 + 0.1 * 0.5 * 2 * 0.5
        assert_abs_diff_eq!(env.abilities()[2], 0.55, epsilon = 1e-15);

        let mut env = SimEnvironment::new(&spec_with(&[(0.2, 1.0), (0.6, 1.0)], 0.1, 0.25)).unwrap();
        step_env(&mut env, &[1.0, 1.0], 0.2).unwrap();
        assert_abs_diff_eq!(env.abilities()[0], 0.2 + 0.1 * 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(env.abilities()[1], 0.6 + 0.1 * 0.4, epsilon = 1e-15);

        let before = env.abilities().to_vec();
        step_env(&mut env, &[0.0, 0.0], 0.2).unwrap();
        assert_eq!(env.abilities(), before.as_slice());
        assert!(step_env(&mut env, &[1.0], 0.2).is_err());
        assert!(step_env(&mut env, &[-1.0, 1.0], 0.2).is_err());
    }

    #[test]
    fn zero_steps_records_initial_state() {
        let mut spec = SimSpec::heterogeneous(3);
        spec.steps = 0;
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let rec = run_experiment(&spec, &rubric, &SynthesisConfig::default(), Mode::Focal).unwrap();
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.steps[0].abilities, vec![0.2, 0.6, 0.9]);
        assert_eq!(rec.buckets, vec![Bucket::Hard, Bucket::Medium, Bucket::Easy]);
    }

    #[test]
    fn identical_criteria_make_focal_inert() {
        let mut spec = spec_with(&[(0.4, 1.0), (0.4, 1.0), (0.4, 1.0)], 0.0, 0.0);
        spec.steps = 30;
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let cfg = SynthesisConfig::default();
        let s = run_experiment(&spec, &rubric, &cfg, Mode::Static).unwrap();
        let f = run_experiment(&spec, &rubric, &cfg, Mode::Focal).unwrap();
        for (a, b) in s.steps.iter().zip(&f.steps) {
            for (x, y) in a.abilities.iter().zip(&b.abilities) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn trajectories_are_monotone_and_replayable() {
        let spec = SimSpec {
            steps: 40,
            ..SimSpec::heterogeneous(9)
        };
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let cfg = SynthesisConfig::default();
        for mode in Mode::ALL {
            let a = run_experiment(&spec, &rubric, &cfg, mode).unwrap();
            let b = run_experiment(&spec, &rubric, &cfg, mode).unwrap();
            assert_eq!(a, b);
            for w in a.steps.windows(2) {
                for (x, y) in w[0].abilities.iter().zip(&w[1].abilities) {
                    assert!(y >= x && *y <= 1.0);
                }
            }
            let contiguous = a.steps.iter().enumerate().all(|(i, r)| r.step == i);
            assert!(contiguous);
        }
    }

    #[test]
    fn frozen_keeps_first_weights() {
        let spec = SimSpec {
            steps: 15,
            ..SimSpec::heterogeneous(2)
        };
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let rec = run_experiment(&spec, &rubric, &SynthesisConfig::default(), Mode::Frozen).unwrap();
        let first = &rec.steps[0].weights;
        assert_ne!(first, &rubric.base_weights());
        assert!(rec.steps.iter().all(|s| &s.weights == first));
    }

    #[test]
    fn csv_export_shape() {
        let spec = SimSpec {
            steps: 2,
            ..SimSpec::heterogeneous(1)
        };
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let rec = run_experiment(&spec, &rubric, &SynthesisConfig::default(), Mode::Static).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,criterion_id,ability,P,weight,bucket");
        assert_eq!(lines.len(), 1 + 3 * 3);
        assert!(lines[1].starts_with("0,c1,0.200000000,"));
        assert!(lines[1].ends_with(",hard"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("no-frontier".parse::<Mode>().unwrap(), Mode::NoFrontier);
        assert!("dynamic".parse::<Mode>().is_err());
    }
}
