//! Random problem instances for sweeps and property checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::rubric::{Criterion, Rubric, ScoreTensor};
use crate::theory::{HeadroomModel, LatentModel};

/// Scores drawn uniformly from `[0, s_max]`.
pub fn random_tensor<R: Rng>(rng: &mut R, group_size: usize, num_criteria: usize, s_max: f64) -> ScoreTensor {
    ScoreTensor::from_fn(group_size, num_criteria, |_, _, _| rng.random_range(0.0..=s_max))
}

/// Nonnegative weights with at least one strictly positive entry.
pub fn random_weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    if rng.random_bool(0.2) && k > 1 {
        // exercise zero entries
        let z = rng.random_range(0..k);
        w[z] = 0.0;
    }
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    w
}

/// `B Bᵀ + δ I` with Gaussian `B`.
pub fn random_spd<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.7);
    let jitter = rng.random_range(0.05..0.5);
    &b * b.transpose() + DMatrix::identity(k, k) * jitter
}

pub fn random_latent_model<R: Rng>(rng: &mut R, k: usize) -> Result<LatentModel> {
    let scale = rng.random_range(0.05..2.0);
    let eta = (0..k).map(|_| rng.random_range(0.0..1.0) * scale).collect();
    let plus = random_spd(rng, k);
    let minus = random_spd(rng, k);
    let label_prob = rng.random_range(0.2..0.8);
    LatentModel::new(eta, plus, minus, label_prob)
}

pub fn random_headroom_model<R: Rng>(rng: &mut R, k: usize) -> Result<HeadroomModel> {
    let base = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let headroom = (0..k).map(|_| rng.random_range(0.01..=1.0)).collect();
    HeadroomModel::new(
        base,
        headroom,
        rng.random_range(0.5..3.0),
        rng.random_range(0.1..3.0),
        rng.random_range(0.2..2.0),
    )
}

/// A seeded judged group whose first `hard_rules` criteria are hard rules.
pub fn random_group(
    seed: u64,
    group_size: usize,
    num_criteria: usize,
    hard_rules: usize,
    s_max: f64,
) -> Result<(ScoreTensor, Rubric)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let weights = random_weights(&mut rng, num_criteria);
    let total: f64 = weights.iter().sum();
    let criteria = weights
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if k < hard_rules {
                Criterion::hard_rule(format!("rule{}", k + 1), w / total)
            } else {
                Criterion::principle(format!("principle{}", k + 1 - hard_rules), w / total)
            }
        })
        .collect();
    let rubric = Rubric::new(criteria, s_max)?;
    let tensor = ScoreTensor::from_fn(group_size, num_criteria, |_, _, k| {
        if k < hard_rules {
            if rng.random_bool(0.7) {
                s_max
            } else {
                0.0
            }
        } else {
            rng.random_range(0.0..=s_max)
        }
    });
    Ok((tensor, rubric))
}
