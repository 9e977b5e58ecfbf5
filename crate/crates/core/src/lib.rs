//! Focal reward synthesis for rubric-based reinforcement learning.
//!
//! Criterion-level pairwise judge scores are aggregated into group rewards,
//! the rewards are projected back onto the criteria to estimate how
//! saturated each criterion already is on the strong rollouts, and the
//! scalarizer is reweighted toward criteria with remaining headroom.
//!
//! Modules:
//! - [`rubric`]: domain types, margins, `Φ_τ`, group rewards and advantages.
//! - [`focal`]: Gibbs projection, saturation, focal weights, the full pipeline.
//! - [`theory`]: numerical checks of the misallocation analysis.
//! - [`sim`]: a synthetic saturation laboratory for comparing scalarizers.
//! - [`analysis`]: buckets, headroom quintiles, outcome transitions.
//! - [`tensor_file`]: JSON input for judged groups.
//! - [`verify`]: the theory check suite, reported through [`report`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod focal;
pub mod format;
pub mod instances;
pub mod report;
pub mod rubric;
pub mod sim;
pub mod tensor_file;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use focal::{
    criterion_means, focal_weights, gibbs_weights, saturation, synthesize, synthesize_ablated,
    Ablation, CriterionMeans, FocalWeights, GibbsWeights, SaturationVector, SynthesisResult,
};
pub use rubric::{
    group_advantage, group_rewards, pair_outcomes, pairwise_margin, phi_tau, weighted_score,
    Criterion, CriterionKind, PairOutcomes, Rubric, ScoreTensor, SynthesisConfig,
};
