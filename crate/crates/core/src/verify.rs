//! The `verify-theory` check suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::focal::{focal_weights, gibbs_weights, synthesize, SaturationVector};
use crate::instances::{
    random_headroom_model, random_latent_model, random_tensor, random_weights,
};
use crate::report::{Check, Relation, VerificationReport};
use crate::rubric::{group_rewards, Criterion, Rubric, SynthesisConfig};
use crate::theory::{
    gibbs_bound_check, misallocation_mc, preferred_direction, shift_probe, sphere_search,
    static_gap, xi_surrogate, HeadroomModel, LatentModel,
};

/// Instance counts for the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub mc_instances: usize,
    pub mc_samples: u64,
    pub gap_models: usize,
    pub sphere_directions: usize,
    pub gibbs_instances: usize,
    pub shift_tensors: usize,
    pub random_draws: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            mc_instances: 50,
            mc_samples: 1_000_000,
            gap_models: 100,
            sphere_directions: 10_000,
            gibbs_instances: 10_000,
            shift_tensors: 100,
            random_draws: 10_000,
        }
    }
}

/// Monte-Carlo slack in binomial standard errors.
pub const MC_SIGMA_SLACK: f64 = 3.0;

pub fn verify_theory(seed: u64, opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    misallocation_checks(&mut report, &mut rng, opts)?;
    static_gap_checks(&mut report, &mut rng, opts)?;
    frontier_checks(&mut report, &mut rng, opts)?;
    shift_checks(&mut report, &mut rng, opts)?;
    temperature_checks(&mut report, &mut rng, opts)?;
    pipeline_checks(&mut report, &mut rng, opts)?;
    Ok(report)
}

fn misallocation_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let scalar = LatentModel::isotropic(vec![2.0], 1.0)?;
    report.push(Check::new(
        "xi_scalar_example",
        xi_surrogate(&[3.0], &scalar)?,
        Relation::Equal,
        4.0,
        1e-12,
    ));

    let tail = LatentModel::isotropic(vec![3.0], 1.0)?;
    let est = misallocation_mc(&[1.0], &tail, opts.mc_samples, rng.random())?;
    report.push(Check::new(
        "misallocation_scalar_bound",
        est.empirical_rate + MC_SIGMA_SLACK * est.std_err,
        Relation::AtMost,
        est.bound,
        0.0,
    ));

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.mc_instances {
        let k = rng.random_range(1..=6);
        let model = random_latent_model(rng, k)?;
        let a = random_weights(rng, k);
        let est = misallocation_mc(&a, &model, opts.mc_samples, rng.random())?;
        worst = worst.max(est.empirical_rate + MC_SIGMA_SLACK * est.std_err - est.bound);
    }
    if opts.mc_instances > 0 {
        report.push(Check::new(
            "misallocation_sweep_worst_excess",
            worst,
            Relation::AtMost,
            0.0,
            0.0,
        ));
    }
    Ok(())
}

fn static_gap_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let worked = HeadroomModel::new(vec![1.0, 1.0], vec![1.0, 0.0], 1.0, 1.0, 1.0)?;
    let gap = static_gap(&worked)?;
    report.push(Check::new("static_gap_example_closed_form", gap.closed_form, Relation::Equal, 0.5, 1e-12));
    report.push(Check::new("static_gap_example_oracle", gap.oracle, Relation::Equal, 0.5, 1e-12));

    let mut max_rel = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    // With one criterion the gap is identically zero and the oracle is a
    // difference of equal numbers, so it is checked on an absolute scale.
    let single = random_headroom_model(rng, 1)?;
    let g1 = static_gap(&single)?;
    let scale = xi_surrogate(&single.eta(), &single.latent()?)?;
    report.push(Check::new("static_gap_single_criterion", g1.closed_form, Relation::Equal, 0.0, 0.0));
    report.push(Check::new(
        "static_gap_single_criterion_oracle",
        g1.oracle.abs() / scale,
        Relation::AtMost,
        0.0,
        1e-12,
    ));

    for _ in 0..opts.gap_models {
        let k = rng.random_range(2..=8);
        let model = random_headroom_model(rng, k)?;
        let gap = static_gap(&model)?;
        max_rel = max_rel.max(gap.relative_error());
        min_gap = min_gap.min(gap.closed_form).min(gap.oracle);

        let latent = model.latent()?;
        let best = xi_surrogate(&preferred_direction(&model)?, &latent)?;
        let searched = sphere_search(&latent, opts.sphere_directions, rng.random())?;
        max_excess = max_excess.max((searched - best) / best.max(1e-300));
    }
    if opts.gap_models > 0 {
        report.push(Check::new("static_gap_max_rel_err", max_rel, Relation::AtMost, 1e-9, 0.0));
        report.push(Check::new("static_gap_min", min_gap, Relation::AtLeast, 0.0, 1e-12));
        report.push(Check::new(
            "sphere_search_max_rel_excess",
            max_excess,
            Relation::AtMost,
            1e-6,
            0.0,
        ));
    }
    Ok(())
}

fn frontier_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let c = gibbs_bound_check(&[5.0, 0.0], &[0], 10.0, &[1.0, 0.0])?;
    report.push(Check::new(
        "frontier_g2_mass_out",
        c.mass_out,
        Relation::Equal,
        1.0 / (1.0 + 0.5f64.exp()),
        1e-9,
    ));
    report.push(Check::new("frontier_g2_bound", c.mass_out, Relation::AtMost, c.bound, 0.0));

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.gibbs_instances {
        let (rewards, frontier, t, z) = random_frontier_instance(rng);
        let c = gibbs_bound_check(&rewards, &frontier, t, &z)?;
        let excess = (c.mass_out.max(c.p_gap) - c.bound) / c.bound.max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
    }
    if opts.gibbs_instances > 0 {
        report.push(Check::new(
            "frontier_sweep_worst_rel_excess",
            worst,
            Relation::AtMost,
            0.0,
            1e-12,
        ));
    }
    Ok(())
}

/// Rewards with a positive gap between a random frontier and the rest.
pub fn random_frontier_instance<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<usize>, f64, Vec<f64>) {
    let g = rng.random_range(2..=8);
    let s = rng.random_range(1..g);
    let delta = rng.random_range(0.01..20.0);
    let top_out = rng.random_range(-14.0..14.0);
    let mut idx: Vec<usize> = (0..g).collect();
    idx.shuffle(rng);
    let frontier: Vec<usize> = idx[..s].to_vec();
    let mut rewards = vec![0.0; g];
    for (n, &i) in idx.iter().enumerate() {
        rewards[i] = if n < s {
            top_out + delta + if n == 0 { 0.0 } else { rng.random_range(0.0..5.0) }
        } else {
            top_out - if n == s { 0.0 } else { rng.random_range(0.0..5.0) }
        };
    }
    let t = rng.random_range(0.5..20.0);
    let z = (0..g).map(|_| rng.random_range(0.0..=1.0)).collect();
    (rewards, frontier, t, z)
}

fn shift_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let cfg = SynthesisConfig::default();
    let mut invariance = 0.0f64;
    let mut sat_err = 0.0f64;
    for _ in 0..opts.shift_tensors {
        let g = rng.random_range(2..=8);
        let k = rng.random_range(1..=6);
        let tensor = random_tensor(rng, g, k, 10.0);
        let rubric = Rubric::new(
            random_weights(rng, k)
                .into_iter()
                .enumerate()
                .map(|(n, w)| Criterion::principle(format!("c{n}"), w))
                .collect(),
            10.0,
        )?;
        let kk = rng.random_range(0..k);
        let b = admissible_shift(rng, &tensor, kk, 10.0);
        let r = shift_probe(&tensor, &rubric, &cfg, kk, b)?;
        invariance = invariance
            .max(r.max_margin_diff)
            .max(r.max_base_reward_diff)
            .max(r.max_gibbs_diff)
            .max(r.max_other_saturation_diff);
        sat_err = sat_err.max((r.saturation_shift - r.expected_shift).abs());
    }
    if opts.shift_tensors > 0 {
        report.push(Check::new("shift_max_invariance_diff", invariance, Relation::AtMost, 0.0, 1e-12));
        report.push(Check::new("shift_max_saturation_err", sat_err, Relation::AtMost, 0.0, 1e-12));
    }
    Ok(())
}

/// A shift `b` keeping criterion `k` inside `[0, s_max]`.
pub fn admissible_shift<R: Rng>(
    rng: &mut R,
    tensor: &crate::rubric::ScoreTensor,
    k: usize,
    s_max: f64,
) -> f64 {
    let (lo, hi) = tensor
        .pairs()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, s)| {
            (lo.min(s[k]), hi.max(s[k]))
        });
    let b = rng.random_range(-lo..=(s_max - hi));
    // Keep the endpoints strictly inside after rounding.
    b.clamp(-lo, s_max - hi)
}

fn temperature_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let mut max_dev = 0.0f64;
    let mut min_mass = f64::INFINITY;
    let n = opts.random_draws;
    for _ in 0..n {
        let g = rng.random_range(2..=8);
        let k = rng.random_range(1..=6);
        let tensor = random_tensor(rng, g, k, 10.0);
        let w = random_weights(rng, k);
        let rewards = group_rewards(&w, &tensor, 1.0)?;
        let hot = gibbs_weights(&rewards, 1e6)?;
        let u = 1.0 / g as f64;
        max_dev = hot.values().iter().map(|r| (r - u).abs()).fold(max_dev, f64::max);

        let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..g).filter(|&i| rewards[i] == max).collect();
        if winners.len() == 1 {
            let cold = gibbs_weights(&rewards, 1e-6)?;
            min_mass = min_mass.min(cold.values()[winners[0]]);
        }
    }
    if n > 0 {
        report.push(Check::new("temperature_high_max_dev", max_dev, Relation::AtMost, 1e-4, 0.0));
        if min_mass.is_finite() {
            report.push(Check::new(
                "temperature_low_min_argmax_mass",
                min_mass,
                Relation::AtLeast,
                1.0 - 1e-6,
                0.0,
            ));
        }
    }
    Ok(())
}

fn pipeline_checks(
    report: &mut VerificationReport,
    rng: &mut ChaCha8Rng,
    opts: &VerifyOptions,
) -> Result<()> {
    let mut mass_err = 0.0f64;
    for _ in 0..opts.random_draws {
        let k = rng.random_range(1..=12);
        let base = random_weights(rng, k);
        let p = SaturationVector::new((0..k).map(|_| rng.random_range(0.0..=1.0)).collect())?;
        let w = focal_weights(&p, &base, rng.random_range(0.5..=4.0), rng.random_range(1e-4..=0.1))?;
        mass_err = mass_err.max((w.values().iter().sum::<f64>() - base.iter().sum::<f64>()).abs());
    }

    let mut sum_err = 0.0f64;
    let cfg = SynthesisConfig::default();
    for _ in 0..opts.random_draws {
        let g = rng.random_range(2..=8);
        let k = rng.random_range(1..=12);
        let tensor = random_tensor(rng, g, k, 10.0);
        let rubric = Rubric::new(
            random_weights(rng, k)
                .into_iter()
                .enumerate()
                .map(|(n, w)| Criterion::principle(format!("c{n}"), w))
                .collect(),
            10.0,
        )?;
        let res = synthesize(&tensor, &rubric, &cfg)?;
        sum_err = sum_err
            .max(res.base_rewards.iter().sum::<f64>().abs())
            .max(res.focal_rewards.iter().sum::<f64>().abs());
    }
    if opts.random_draws > 0 {
        report.push(Check::new("focal_mass_max_err", mass_err, Relation::AtMost, 0.0, 1e-12));
        report.push(Check::new("reward_sum_max_abs", sum_err, Relation::AtMost, 0.0, 1e-9));
    }
    Ok(())
}
