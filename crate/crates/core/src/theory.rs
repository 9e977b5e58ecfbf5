//! Numerical checks for the local misallocation analysis.
//!
//! A scalarizer `a` turns a criterion-level pairwise difference `D` into a
//! margin `aᵀD`. Under a latent label `L ∈ {+1, -1}` with `E[D | L] = L·η`
//! and sub-Gaussian residuals with proxy `Σ(L)`, the probability that the
//! margin's sign disagrees with `L` is at most `exp(-Ξ(a)/2)`, where
//! `Ξ(a) = (aᵀη)² / max_ℓ aᵀΣ(ℓ)a`. Under isotropic noise and a
//! headroom-shaped edge `η = c·w ⊙ H^γ₀` the maximizer of `Ξ` is `∝ η`.

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::focal::{gibbs_weights, synthesize, SynthesisResult};
use crate::rubric::{pairwise_margin, Rubric, ScoreTensor, SynthesisConfig};

/// Number of independently seeded streams the Monte-Carlo sampler uses.
/// Fixed so results do not depend on the thread pool size.
const MC_SHARDS: u64 = 64;

/// Label-conditional edge and residual model for one training state.
#[derive(Debug, Clone)]
pub struct LatentModel {
    eta: Vec<f64>,
    sigma_plus: DMatrix<f64>,
    sigma_minus: DMatrix<f64>,
    label_prob: f64,
    chol_plus: DMatrix<f64>,
    chol_minus: DMatrix<f64>,
}

fn cholesky_factor(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotPositiveDefinite(name));
            }
        }
    }
    Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite(name))
}

impl LatentModel {
    pub fn new(
        eta: Vec<f64>,
        sigma_plus: DMatrix<f64>,
        sigma_minus: DMatrix<f64>,
        label_prob: f64,
    ) -> Result<Self> {
        let k = eta.len();
        if k == 0 {
            return Err(Error::EmptyInput("eta"));
        }
        if let Some(&bad) = eta.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: bad,
                reason: "entries must be nonnegative",
            });
        }
        for (m, name) in [(&sigma_plus, "sigma_plus"), (&sigma_minus, "sigma_minus")] {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch {
                    what: name,
                    expected: k,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        if !(label_prob > 0.0 && label_prob < 1.0) {
            return Err(Error::InvalidParameter {
                name: "label_prob",
                value: label_prob,
                reason: "must lie in (0, 1)",
            });
        }
        let chol_plus = cholesky_factor(&sigma_plus, "sigma_plus")?;
        let chol_minus = cholesky_factor(&sigma_minus, "sigma_minus")?;
        Ok(Self {
            eta,
            sigma_plus,
            sigma_minus,
            label_prob,
            chol_plus,
            chol_minus,
        })
    }

    /// Same residual covariance `sigma² I` under both labels.
    pub fn isotropic(eta: Vec<f64>, sigma: f64) -> Result<Self> {
        let k = eta.len();
        let cov = DMatrix::identity(k, k) * (sigma * sigma);
        Self::new(eta, cov.clone(), cov, 0.5)
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn sigma_plus(&self) -> &DMatrix<f64> {
        &self.sigma_plus
    }

    pub fn sigma_minus(&self) -> &DMatrix<f64> {
        &self.sigma_minus
    }

    pub fn label_prob(&self) -> f64 {
        self.label_prob
    }
}

fn quad_form(m: &DMatrix<f64>, a: &[f64]) -> f64 {
    let k = a.len();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            acc += a[i] * m[(i, j)] * a[j];
        }
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_direction(a: &[f64], k: usize) -> Result<()> {
    if a.len() != k {
        return Err(Error::DimensionMismatch {
            what: "scalarizer",
            expected: k,
            found: a.len(),
        });
    }
    if a.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroVector("scalarizer"));
    }
    Ok(())
}

/// `Ξ(a) = (aᵀη)² / max_ℓ aᵀΣ(ℓ)a`.
pub fn xi_surrogate(a: &[f64], model: &LatentModel) -> Result<f64> {
    check_direction(a, model.dim())?;
    let signal = dot(a, &model.eta);
    let noise = quad_form(&model.sigma_plus, a).max(quad_form(&model.sigma_minus, a));
    Ok(signal * signal / noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisallocationEstimate {
    pub empirical_rate: f64,
    pub bound: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl MisallocationEstimate {
    /// Whether `rate + slack·std_err <= bound`.
    pub fn holds_with(&self, slack: f64) -> bool {
        self.empirical_rate + slack * self.std_err <= self.bound
    }
}

fn mat_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    (0..k * k).map(|idx| m[(idx / k, idx % k)]).collect()
}

/// Monte-Carlo estimate of `Pr[L·aᵀD <= 0]` with Gaussian residuals.
///
/// Sampling is split into a fixed number of ChaCha streams derived from
/// `seed`, so the estimate is reproducible regardless of thread count.
pub fn misallocation_mc(
    a: &[f64],
    model: &LatentModel,
    n_samples: u64,
    seed: u64,
) -> Result<MisallocationEstimate> {
    if n_samples == 0 {
        return Err(Error::EmptyInput("n_samples"));
    }
    let xi = xi_surrogate(a, model)?;
    let k = model.dim();
    let chol_plus = mat_rows(&model.chol_plus);
    let chol_minus = mat_rows(&model.chol_minus);
    let eta = &model.eta;
    let p_plus = model.label_prob;

    let per_shard = n_samples / MC_SHARDS;
    let extra = n_samples % MC_SHARDS;

    let failures: u64 = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = per_shard + u64::from(shard < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut z = vec![0.0; k];
            let mut fails = 0u64;
            for _ in 0..count {
                let label = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
                let chol = if label > 0.0 { &chol_plus } else { &chol_minus };
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let mut margin = 0.0;
                for r in 0..k {
                    let row = &chol[r * k..r * k + r + 1];
                    let resid: f64 = row.iter().zip(&z).map(|(c, zz)| c * zz).sum();
                    margin += a[r] * (label * eta[r] + resid);
                }
                if label * margin <= 0.0 {
                    fails += 1;
                }
            }
            fails
        })
        .sum();

    let n = n_samples as f64;
    let rate = failures as f64 / n;
    Ok(MisallocationEstimate {
        empirical_rate: rate,
        bound: (-0.5 * xi).exp(),
        std_err: (rate * (1.0 - rate) / n).sqrt(),
        samples: n_samples,
    })
}

/// Isotropic headroom-shaped edge model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadroomModel {
    base: Vec<f64>,
    headroom: Vec<f64>,
    gamma0: f64,
    scale_c: f64,
    sigma_iso: f64,
}

impl HeadroomModel {
    pub fn new(
        base: Vec<f64>,
        headroom: Vec<f64>,
        gamma0: f64,
        scale_c: f64,
        sigma_iso: f64,
    ) -> Result<Self> {
        if base.len() != headroom.len() {
            return Err(Error::DimensionMismatch {
                what: "headroom",
                expected: base.len(),
                found: headroom.len(),
            });
        }
        if base.is_empty() {
            return Err(Error::EmptyInput("base weights"));
        }
        if let Some(&bad) = base.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "base",
                value: bad,
                reason: "must be nonnegative",
            });
        }
        if let Some(&bad) = headroom.iter().find(|h| !(0.0..=1.0).contains(*h)) {
            return Err(Error::InvalidParameter {
                name: "headroom",
                value: bad,
                reason: "must lie in [0, 1]",
            });
        }
        for (name, v) in [("gamma0", gamma0), ("scale_c", scale_c), ("sigma_iso", sigma_iso)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        Ok(Self {
            base,
            headroom,
            gamma0,
            scale_c,
            sigma_iso,
        })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn headroom(&self) -> &[f64] {
        &self.headroom
    }

    fn shaped(&self) -> Vec<f64> {
        self.headroom.iter().map(|h| h.powf(self.gamma0)).collect()
    }

    /// `η = c · w_base ⊙ H^γ₀`.
    pub fn eta(&self) -> Vec<f64> {
        self.base
            .iter()
            .zip(self.shaped())
            .map(|(w, h)| self.scale_c * w * h)
            .collect()
    }

    /// The latent model with `Σ(+1) = Σ(-1) = σ² I`.
    pub fn latent(&self) -> Result<LatentModel> {
        LatentModel::isotropic(self.eta(), self.sigma_iso)
    }
}

/// Unit vector along `w_base ⊙ H^γ₀`.
pub fn preferred_direction(model: &HeadroomModel) -> Result<Vec<f64>> {
    let raw: Vec<f64> = model
        .base
        .iter()
        .zip(model.shaped())
        .map(|(w, h)| w * h)
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok(raw.into_iter().map(|x| x / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticGap {
    /// `(c²‖w‖²/σ²) · Var_μ(H^γ₀)` with `μ ∝ w²`.
    pub closed_form: f64,
    /// `Ξ(η) - Ξ(w_base)` evaluated through [`xi_surrogate`].
    pub oracle: f64,
}

impl StaticGap {
    pub fn relative_error(&self) -> f64 {
        (self.closed_form - self.oracle).abs() / self.closed_form.max(1e-12)
    }
}

pub fn static_gap(model: &HeadroomModel) -> Result<StaticGap> {
    preferred_direction(model)?;
    let w_sq: Vec<f64> = model.base.iter().map(|w| w * w).collect();
    let norm_sq: f64 = w_sq.iter().sum();
    let z = model.shaped();
    let mean: f64 = w_sq.iter().zip(&z).map(|(m, zz)| m * zz).sum::<f64>() / norm_sq;
    let var: f64 = w_sq
        .iter()
        .zip(&z)
        .map(|(m, zz)| m * (zz - mean).powi(2))
        .sum::<f64>()
        / norm_sq;
    let closed_form =
        model.scale_c.powi(2) * norm_sq / model.sigma_iso.powi(2) * var;

    let latent = model.latent()?;
    let oracle = xi_surrogate(latent.eta(), &latent)? - xi_surrogate(&model.base, &latent)?;
    Ok(StaticGap {
        closed_form,
        oracle,
    })
}

/// Largest `Ξ` over `n_directions` uniformly random unit vectors.
pub fn sphere_search(model: &LatentModel, n_directions: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = model.dim();
    let mut best = 0.0f64;
    let mut a = vec![0.0; k];
    for _ in 0..n_directions {
        loop {
            for x in a.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            if a.iter().any(|x| *x != 0.0) {
                break;
            }
        }
        best = best.max(xi_surrogate(&a, model)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsBoundCheck {
    /// Gibbs mass outside the frontier, `1 - ρ`.
    pub mass_out: f64,
    /// `((G - |S|) / |S|) · exp(-δ/T)`.
    pub bound: f64,
    /// `|P - P_S|` for the supplied saturation column.
    pub p_gap: f64,
    pub p_bound: f64,
    pub delta: f64,
}

impl GibbsBoundCheck {
    /// Both inequalities, with `rel_tol` relative slack for rounding.
    pub fn holds(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.bound.max(f64::MIN_POSITIVE);
        self.mass_out <= self.bound + slack && self.p_gap <= self.p_bound + slack
    }
}

/// Frontier concentration of the Gibbs weights.
///
/// `z` is a per-rollout saturation column in `[0, 1]`.
pub fn gibbs_bound_check(
    base_rewards: &[f64],
    frontier: &[usize],
    temperature: f64,
    z: &[f64],
) -> Result<GibbsBoundCheck> {
    let g = base_rewards.len();
    if z.len() != g {
        return Err(Error::DimensionMismatch {
            what: "saturation column",
            expected: g,
            found: z.len(),
        });
    }
    let mut in_frontier = vec![false; g];
    for &i in frontier {
        if i >= g || in_frontier[i] {
            return Err(Error::InvalidFrontier(format!("bad or repeated index {i}")));
        }
        in_frontier[i] = true;
    }
    let s = frontier.len();
    if s == 0 || s >= g {
        return Err(Error::InvalidFrontier(format!(
            "frontier of size {s} must be a nonempty proper subset of {g} rollouts"
        )));
    }
    let min_in = (0..g)
        .filter(|&i| in_frontier[i])
        .map(|i| base_rewards[i])
        .fold(f64::INFINITY, f64::min);
    let max_out = (0..g)
        .filter(|&i| !in_frontier[i])
        .map(|i| base_rewards[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let delta = min_in - max_out;
    if !(delta > 0.0) {
        return Err(Error::FrontierGap { delta });
    }

    let r = gibbs_weights(base_rewards, temperature)?;
    let r = r.values();
    let rho: f64 = (0..g).filter(|&i| in_frontier[i]).map(|i| r[i]).sum();
    // Summing the outside mass directly avoids cancellation in 1 - ρ.
    let mass_out: f64 = (0..g).filter(|&i| !in_frontier[i]).map(|i| r[i]).sum();
    let p_frontier: f64 = (0..g)
        .filter(|&i| in_frontier[i])
        .map(|i| r[i] / rho * z[i])
        .sum();
    // P - P_S = Σ_{j∉S} r_j z_j - (1 - ρ) P_S, free of cancellation.
    let out_part: f64 = (0..g)
        .filter(|&i| !in_frontier[i])
        .map(|i| r[i] * z[i])
        .sum();
    let bound = (g - s) as f64 / s as f64 * (-delta / temperature).exp();
    Ok(GibbsBoundCheck {
        mass_out,
        bound,
        p_gap: (out_part - mass_out * p_frontier).abs(),
        p_bound: bound,
        delta,
    })
}

/// Differences between the pipeline on a tensor and on a copy with one
/// criterion shifted by a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftReport {
    pub criterion: usize,
    pub shift: f64,
    pub max_margin_diff: f64,
    pub max_base_reward_diff: f64,
    pub max_gibbs_diff: f64,
    /// `P'^(k) - P^(k)`.
    pub saturation_shift: f64,
    /// `b / s_max`.
    pub expected_shift: f64,
    /// Largest `|P'^(k') - P^(k')|` over the unshifted criteria.
    pub max_other_saturation_diff: f64,
}

impl ShiftReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_margin_diff <= tol
            && self.max_base_reward_diff <= tol
            && self.max_gibbs_diff <= tol
            && (self.saturation_shift - self.expected_shift).abs() <= tol
            && self.max_other_saturation_diff <= tol
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn shift_probe(
    tensor: &ScoreTensor,
    rubric: &Rubric,
    config: &SynthesisConfig,
    k: usize,
    shift: f64,
) -> Result<ShiftReport> {
    if k >= tensor.num_criteria() {
        return Err(Error::DimensionMismatch {
            what: "criterion index",
            expected: tensor.num_criteria(),
            found: k,
        });
    }
    let s_max = rubric.s_max();
    if tensor
        .pairs()
        .any(|(_, _, s)| !(0.0..=s_max).contains(&(s[k] + shift)))
    {
        return Err(Error::ShiftOutOfRange { k, shift, s_max });
    }
    let shifted = tensor.shifted(k, shift);
    let before: SynthesisResult = synthesize(tensor, rubric, config)?;
    let after = synthesize(&shifted, rubric, config)?;

    let base = rubric.base_weights();
    let g = tensor.group_size();
    let mut max_margin_diff = 0.0f64;
    for i in 0..g {
        for j in 0..g {
            if i != j {
                let m0 = pairwise_margin(&base, tensor, i, j)?;
                let m1 = pairwise_margin(&base, &shifted, i, j)?;
                max_margin_diff = max_margin_diff.max((m0 - m1).abs());
            }
        }
    }
    let p0 = before.saturation.values();
    let p1 = after.saturation.values();
    let max_other = (0..p0.len())
        .filter(|&kk| kk != k)
        .map(|kk| (p0[kk] - p1[kk]).abs())
        .fold(0.0, f64::max);
    Ok(ShiftReport {
        criterion: k,
        shift,
        max_margin_diff,
        max_base_reward_diff: max_abs_diff(&before.base_rewards, &after.base_rewards),
        max_gibbs_diff: max_abs_diff(before.gibbs.values(), after.gibbs.values()),
        saturation_shift: p1[k] - p0[k],
        expected_shift: shift / s_max,
        max_other_saturation_diff: max_other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_model(eta: f64, var: f64) -> LatentModel {
        let m = DMatrix::from_element(1, 1, var);
        LatentModel::new(vec![eta], m.clone(), m, 0.5).unwrap()
    }

    #[test]
    fn xi_examples() {
        let m = scalar_model(2.0, 1.0);
        assert_abs_diff_eq!(xi_surrogate(&[3.0], &m).unwrap(), 4.0, epsilon = 1e-12);

        let m = LatentModel::isotropic(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(xi_surrogate(&[0.0, 2.0], &m).unwrap(), 0.0);

        let m = LatentModel::isotropic(vec![0.7, 0.2, 1.1], 0.8).unwrap();
        let a = [0.3, 1.2, 0.5];
        let scaled: Vec<f64> = a.iter().map(|x| x * 7.5).collect();
        assert_abs_diff_eq!(
            xi_surrogate(&a, &m).unwrap(),
            xi_surrogate(&scaled, &m).unwrap(),
            epsilon = 1e-12
        );
        assert!(matches!(xi_surrogate(&[0.0, 0.0, 0.0], &m), Err(Error::ZeroVector(_))));
    }

    #[test]
    fn xi_uses_worse_label_covariance() {
        let plus = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let minus = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let m = LatentModel::new(vec![1.0, 1.0], plus, minus, 0.3).unwrap();
        // aᵀΣ₋a = 4 dominates aᵀΣ₊a = 1
        assert_abs_diff_eq!(xi_surrogate(&[1.0, 0.0], &m).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn latent_model_rejects_bad_covariances() {
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let id = DMatrix::identity(2, 2);
        assert!(matches!(
            LatentModel::new(vec![1.0, 1.0], not_pd, id.clone(), 0.5),
            Err(Error::NotPositiveDefinite("sigma_plus"))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.1, 2.0]);
        assert!(matches!(
            LatentModel::new(vec![1.0, 1.0], id.clone(), asym, 0.5),
            Err(Error::NotPositiveDefinite("sigma_minus"))
        ));
        assert!(LatentModel::new(vec![-1.0, 1.0], id.clone(), id.clone(), 0.5).is_err());
        assert!(LatentModel::new(vec![1.0, 1.0], id.clone(), id, 1.0).is_err());
    }

    #[test]
    fn mc_zero_edge_is_a_coin_flip() {
        let m = LatentModel::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        let est = misallocation_mc(&[1.0, 1.0], &m, 200_000, 3).unwrap();
        assert_eq!(est.bound, 1.0);
        assert!((est.empirical_rate - 0.5).abs() < 5.0 * est.std_err);
        assert!(est.holds_with(3.0));
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let m = LatentModel::isotropic(vec![0.4, 0.1], 1.0).unwrap();
        let a = misallocation_mc(&[1.0, 2.0], &m, 10_001, 11).unwrap();
        let b = misallocation_mc(&[1.0, 2.0], &m, 10_001, 11).unwrap();
        let c = misallocation_mc(&[1.0, 2.0], &m, 10_001, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.empirical_rate, c.empirical_rate);
        assert!(misallocation_mc(&[1.0, 2.0], &m, 0, 1).is_err());
    }

    #[test]
    fn direction_examples() {
        let m = HeadroomModel::new(vec![1.0, 1.0], vec![1.0, 0.5], 1.0, 1.0, 1.0).unwrap();
        let d = preferred_direction(&m).unwrap();
        let n = (1.0f64 + 0.25).sqrt();
        assert_abs_diff_eq!(d[0], 1.0 / n, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.5 / n, epsilon = 1e-15);

        let m = HeadroomModel::new(vec![0.0, 1.0], vec![0.3, 0.9], 2.0, 1.0, 1.0).unwrap();
        assert_eq!(preferred_direction(&m).unwrap(), vec![0.0, 1.0]);

        let m = HeadroomModel::new(vec![3.0, 4.0], vec![0.6, 0.6], 1.5, 1.0, 1.0).unwrap();
        let d = preferred_direction(&m).unwrap();
        assert_abs_diff_eq!(d[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.8, epsilon = 1e-15);

        let m = HeadroomModel::new(vec![1.0, 0.0], vec![0.0, 1.0], 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(preferred_direction(&m), Err(Error::DegenerateDirection)));
    }

    #[test]
    fn gap_examples() {
        let m = HeadroomModel::new(vec![1.0, 1.0], vec![1.0, 0.0], 1.0, 1.0, 1.0).unwrap();
        let gap = static_gap(&m).unwrap();
        assert_abs_diff_eq!(gap.closed_form, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gap.oracle, 0.5, epsilon = 1e-15);

        let m = HeadroomModel::new(vec![0.2, 0.5, 0.3], vec![0.4; 3], 2.0, 1.3, 0.7).unwrap();
        let gap = static_gap(&m).unwrap();
        assert_abs_diff_eq!(gap.closed_form, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gap.oracle, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gibbs_bound_examples() {
        let c = gibbs_bound_check(&[5.0, 0.0], &[0], 10.0, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(c.mass_out, 0.3775406687981454, epsilon = 1e-12);
        assert_abs_diff_eq!(c.bound, 0.6065306597126334, epsilon = 1e-12);
        assert!(c.holds(0.0));

        let c = gibbs_bound_check(&[1e6, 0.0, -3.0], &[0], 10.0, &[0.2, 0.9, 0.4]).unwrap();
        assert_eq!(c.mass_out, 0.0);
        assert_eq!(c.bound, 0.0);
        assert!(c.holds(0.0));

        assert!(matches!(
            gibbs_bound_check(&[1.0, 1.0], &[0], 10.0, &[0.0, 0.0]),
            Err(Error::FrontierGap { .. })
        ));
        assert!(gibbs_bound_check(&[1.0, 0.0], &[0, 1], 10.0, &[0.0, 0.0]).is_err());
        assert!(gibbs_bound_check(&[1.0, 0.0], &[], 10.0, &[0.0, 0.0]).is_err());
        assert!(gibbs_bound_check(&[1.0, 0.0, 0.0], &[0, 0], 10.0, &[0.0; 3]).is_err());
    }

    fn probe_tensor() -> ScoreTensor {
        ScoreTensor::from_fn(4, 3, |i, j, k| {
            2.0 + ((i * 7 + j * 3 + k * 5) % 11) as f64 * 0.55
        })
    }

    #[test]
    fn shift_probe_examples() {
        let t = probe_tensor();
        let rubric = Rubric::uniform(3, 10.0).unwrap();
        let cfg = SynthesisConfig::default();

        let r = shift_probe(&t, &rubric, &cfg, 1, 0.0).unwrap();
        assert_eq!(r.max_margin_diff, 0.0);
        assert_eq!(r.saturation_shift, 0.0);

        let r = shift_probe(&t, &rubric, &cfg, 1, 1.0).unwrap();
        assert_abs_diff_eq!(r.saturation_shift, 0.1, epsilon = 1e-12);
        assert!(r.holds(1e-12));

        let r = shift_probe(&t, &rubric, &cfg, 2, -0.5).unwrap();
        assert_abs_diff_eq!(r.saturation_shift, -0.05, epsilon = 1e-12);
        assert!(r.holds(1e-12));

        assert!(matches!(
            shift_probe(&t, &rubric, &cfg, 0, 9.0),
            Err(Error::ShiftOutOfRange { .. })
        ));
    }
}
