//! Longitudinal network panel modeling.
//!
//! Implements a temporal exponential random graph model (TERGM) with
//! MCMC maximum-likelihood estimation, a minimal stochastic actor-oriented
//! model (SAOM) with method-of-moments estimation, an out-of-sample
//! evaluation harness over panel waves, and an auditor that detects
//! covariate terms carrying test-wave information into "out-of-sample"
//! predictions.

pub mod audit;
pub mod error;
pub mod eval;
pub mod network;
pub mod panel;
pub mod saom;
pub mod stats;
pub mod synth;
pub mod tergm;
pub mod terms;

pub use audit::{
    classify, perturbation_probe, AuditFinding, AuditReport, ProbeConfig, ProbeResult, Severity,
};
pub use error::{Error, Result};
pub use eval::{
    holdout_split, leaking_terms, predict_wave_saom, predict_wave_tergm, roc_pr_curves, score,
    tie_scores, GofReport, HoldoutSplit, QuantileEnvelope,
};
pub use saom::{estimate_mom, simulate_period, MomConfig, SaomEffect, SaomModel};
pub use synth::{
    default_generator_spec, generate_tergm_panel, generate_tergm_panel_with_covariates,
    synthetic_covariates, DEFAULT_THETA_STAR,
};
pub use tergm::{
    estimate, estimate_with_options, exact_distribution, mple, sample, EstimateOptions,
    ExactDistribution, McmcConfig, ParameterEstimate, TergmModel,
};
pub use network::{
    degrees, geodesic_distribution, geodesic_distribution_full, indegree_distribution,
    shared_partner_counts, DegreeMode, GeodesicDistribution, Network, SharedPartnerRelation,
    SharedPartnerType,
};
pub use panel::{
    derive_attribute, Covariates, DerivedAttribute, DerivedSpec, DyadCovariate, Panel, Provenance,
    Transform, WaveBinding,
};
pub use stats::{change_statistic, statistic_value, statistic_vector, StatisticContext};
pub use terms::{corrected_spec, flawed_spec, Binding, ModelSpec, TermKind, TermSpec, DEFAULT_DECAY};
