//! Leakage audit: a static classifier that walks a model spec and flags
//! covariate terms whose inputs are computed from the wave being modeled,
//! plus a dynamic perturbation probe that measures how hard the fitted
//! model leans on a suspect covariate.
//!
//! The worst case is a degree transform of the dependent wave feeding a
//! degree-margin term on the *same* margin: the statistic is then a
//! deterministic function of the outcome it is supposed to predict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DegreeMode, Network};
use crate::panel::{Covariates, WaveBinding};
use crate::terms::{Binding, ModelSpec, TermSpec};
use crate::tergm::{sample, McmcConfig, TergmModel};

/// Classification of one model term, ordered from harmless to worst.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Structural statistic of the modeled wave, or the lagged-tie memory
    /// term: dependence on the outcome is what the model estimates.
    Endogenous,
    /// Covariate resolved strictly before the modeled wave.
    LaggedSafe,
    /// Outcome information enters through a different margin, or the
    /// covariate's provenance cannot be established for a contemporaneous
    /// binding (treated as leaking rather than given the benefit of doubt).
    Circular,
    /// A degree transform of the modeled wave feeds a term on the same
    /// degree margin: the term restates the outcome.
    Tautological,
}

impl Severity {
    pub fn name(self) -> &'static str {
        match self {
            Severity::Endogenous => "endogenous",
            Severity::LaggedSafe => "lagged_safe",
            Severity::Circular => "circular",
            Severity::Tautological => "tautological",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditFinding {
    pub term: String,
    pub severity: Severity,
    pub explanation: String,
}

/// Full audit output: one finding per term, optionally a probe result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub findings: Vec<AuditFinding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeResult>,
}

impl AuditReport {
    pub fn worst(&self) -> Severity {
        self.findings
            .iter()
            .map(|f| f.severity)
            .max()
            .unwrap_or(Severity::Endogenous)
    }

    /// True when any term is Circular or Tautological.
    pub fn has_leakage(&self) -> bool {
        self.worst() >= Severity::Circular
    }
}

/// Classify every term of a spec by where its inputs come from.
pub fn classify(spec: &ModelSpec) -> Vec<AuditFinding> {
    spec.terms.iter().map(|t| classify_term(t, spec)).collect()
}

fn classify_term(term: &TermSpec, spec: &ModelSpec) -> AuditFinding {
    let label = term.label();
    let Some(attr) = &term.attr else {
        return AuditFinding {
            term: label,
            severity: Severity::Endogenous,
            explanation: "structural or memory statistic; no external input".into(),
        };
    };
    match spec.derived.iter().find(|d| &d.name == attr) {
        Some(d) if d.source_wave == WaveBinding::Dependent => {
            let transform_margin = d.transform.mode();
            match term.kind.covariate_margin() {
                Some(m) if m == transform_margin => AuditFinding {
                    term: label,
                    severity: Severity::Tautological,
                    explanation: format!(
                        "`{attr}` is a {} transform of the modeled wave feeding the same margin",
                        margin_name(transform_margin)
                    ),
                },
                _ => AuditFinding {
                    term: label,
                    severity: Severity::Circular,
                    explanation: format!(
                        "`{attr}` is computed from the modeled wave ({} margin) but enters a different statistic",
                        margin_name(transform_margin)
                    ),
                },
            }
        }
        Some(_) => AuditFinding {
            term: label,
            severity: Severity::LaggedSafe,
            explanation: format!("`{attr}` is derived from a wave before the modeled one"),
        },
        None => match term.binding {
            Binding::Contemporaneous => AuditFinding {
                term: label,
                severity: Severity::Circular,
                explanation: format!(
                    "`{attr}` has no declared provenance yet is bound contemporaneously; \
                     treated as leaking"
                ),
            },
            _ => AuditFinding {
                term: label,
                severity: Severity::LaggedSafe,
                explanation: format!("`{attr}` is exogenous under a lagged binding"),
            },
        },
    }
}

fn margin_name(mode: DegreeMode) -> &'static str {
    match mode {
        DegreeMode::In => "indegree",
        DegreeMode::Out => "outdegree",
    }
}

/// Settings for the dynamic probe.
#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub nsim: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            nsim: 50,
            burn_in: 10_000,
            thinning: 500,
            seed: 0,
        }
    }
}

/// Outcome of the perturbation probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeResult {
    pub attr: String,
    /// Divergence between two baseline arms run with different seeds:
    /// the Monte Carlo noise floor.
    pub noise_divergence: f64,
    /// Divergence between a baseline arm and the arm with the covariate
    /// flattened to its mean.
    pub perturbed_divergence: f64,
    /// Perturbed-to-noise ratio (noise floored to avoid division blowup).
    pub ratio: f64,
    /// True when the perturbed arm diverges more than three times the noise.
    pub flagged: bool,
}

/// Flatten `attr` to its mean, re-simulate, and compare the resulting tie
/// distributions against two baseline arms. Divergence is the absolute
/// density shift plus the largest per-node mean-degree shift; the verdict
/// requires three times the seed-to-seed Monte Carlo noise.
pub fn perturbation_probe(
    model: &TergmModel,
    previous: &Network,
    covariates: &Covariates,
    attr: &str,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    if cfg.nsim == 0 {
        return Err(Error::EmptySims);
    }
    let values = covariates.numeric(attr)?;
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let mut perturbed = covariates.clone();
    perturbed.set_numeric_constant(attr, mean)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seed_a: u64 = rng.gen();
    let seed_b: u64 = rng.gen();

    let arm = |cov: &Covariates, seed: u64| -> Result<Vec<Network>> {
        let mcmc = McmcConfig {
            burn_in: cfg.burn_in,
            thinning: cfg.thinning,
            sample_size: cfg.nsim,
            seed,
        };
        sample(model, previous, cov, &mcmc, previous)
    };
    let base_a = arm(covariates, seed_a)?;
    let base_b = arm(covariates, seed_b)?;
    let pert = arm(&perturbed, seed_a)?;

    let noise_divergence = divergence(&base_a, &base_b);
    let perturbed_divergence = divergence(&base_a, &pert);
    let floor = noise_divergence.max(1e-3);
    let ratio = perturbed_divergence / floor;
    Ok(ProbeResult {
        attr: attr.to_string(),
        noise_divergence,
        perturbed_divergence,
        ratio,
        flagged: perturbed_divergence > 3.0 * floor,
    })
}

/// Absolute mean-density shift plus the maximum per-node shift in mean
/// total degree between two arms of simulations.
fn divergence(a: &[Network], b: &[Network]) -> f64 {
    let n = a[0].n();
    let mean_density =
        |arm: &[Network]| arm.iter().map(Network::density).sum::<f64>() / arm.len() as f64;
    let mean_degrees = |arm: &[Network]| -> Vec<f64> {
        let mut d = vec![0.0; n];
        for net in arm {
            for (i, slot) in d.iter_mut().enumerate() {
                *slot += (net.indegree(i) + net.outdegree(i)) as f64;
            }
        }
        for slot in &mut d {
            *slot /= arm.len() as f64;
        }
        d
    };
    let density_shift = (mean_density(a) - mean_density(b)).abs();
    let da = mean_degrees(a);
    let db = mean_degrees(b);
    let degree_shift = da
        .iter()
        .zip(&db)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    density_shift + degree_shift
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::random_net;
    use crate::terms::{corrected_spec, flawed_spec, TermKind};

    #[test]
    fn flawed_spec_classification() {
        let findings = classify(&flawed_spec());
        assert_eq!(findings.len(), 13);
        let sev = |label: &str| {
            findings
                .iter()
                .find(|f| f.term == label)
                .unwrap_or_else(|| panic!("no finding for {label}"))
                .severity
        };
        // same-margin dependent-wave transforms restate the outcome
        assert_eq!(sev("node_icov(idegsqrt)"), Severity::Tautological);
        assert_eq!(sev("node_ocov(odegsqrt)"), Severity::Tautological);
        // cross-margin dependent-wave transform
        assert_eq!(sev("node_icov(odegsqrt)"), Severity::Circular);
        assert_eq!(sev("node_match(sex)"), Severity::LaggedSafe);
        assert_eq!(sev("edge_cov(primary)"), Severity::LaggedSafe);
        assert_eq!(sev("edges"), Severity::Endogenous);
        assert_eq!(sev("memory_stability"), Severity::Endogenous);
    }

    #[test]
    fn corrected_spec_is_clean() {
        let report = AuditReport {
            findings: classify(&corrected_spec()),
            probe: None,
        };
        assert!(!report.has_leakage());
        assert!(report.worst() <= Severity::LaggedSafe);
    }

    #[test]
    fn unknown_provenance_contemporaneous_is_circular() {
        let spec = ModelSpec {
            derived: vec![],
            terms: vec![TermSpec::covariate(
                TermKind::NodeIcov,
                "mystery",
                Binding::Contemporaneous,
            )],
        };
        let findings = classify(&spec);
        assert_eq!(findings[0].severity, Severity::Circular);
        assert!(findings[0].explanation.contains("provenance"));
    }

    #[test]
    fn severity_ordering() {
        assert!(Severity::Tautological > Severity::Circular);
        assert!(Severity::Circular > Severity::LaggedSafe);
        assert!(Severity::LaggedSafe > Severity::Endogenous);
    }

    #[test]
    fn probe_flags_model_that_leans_on_covariate() {
        let n = 12;
        let previous = random_net(n, 5);
        let mut cov = Covariates::new();
        // steep ramp so flattening it reshuffles incoming ties a lot
        cov.insert_numeric("x", (0..n).map(|i| i as f64 / 2.0).collect());
        let model = TergmModel::new(
            vec![
                TermSpec::structural(TermKind::Edges),
                TermSpec::covariate(TermKind::NodeIcov, "x", Binding::Lagged),
            ],
            vec![-3.0, 1.2],
        )
        .unwrap();
        let result = perturbation_probe(
            &model,
            &previous,
            &cov,
            "x",
            &ProbeConfig {
                nsim: 40,
                burn_in: 8_000,
                thinning: 400,
                seed: 9,
            },
        )
        .unwrap();
        assert!(result.flagged, "probe result {result:?}");
    }

    #[test]
    fn probe_ignores_unused_covariate() {
        let n = 10;
        let previous = random_net(n, 6);
        let mut cov = Covariates::new();
        cov.insert_numeric("x", (0..n).map(|i| i as f64).collect());
        let model =
            TergmModel::new(vec![TermSpec::structural(TermKind::Edges)], vec![-1.0]).unwrap();
        let result =
            perturbation_probe(&model, &previous, &cov, "x", &ProbeConfig::default()).unwrap();
        assert!(!result.flagged, "probe result {result:?}");
    }

    #[test]
    fn probe_requires_known_numeric_covariate() {
        let previous = random_net(6, 7);
        let cov = Covariates::new();
        let model =
            TergmModel::new(vec![TermSpec::structural(TermKind::Edges)], vec![0.0]).unwrap();
        let err = perturbation_probe(&model, &previous, &cov, "nope", &ProbeConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::MissingCovariate(_)));
    }
}
