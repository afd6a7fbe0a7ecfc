//! Out-of-sample evaluation: train on the leading waves, simulate the held
//! out wave conditional on the last training wave, and score simulations
//! against the observation with shared-partner, degree and geodesic
//! envelopes plus ROC/PR tie prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    geodesic_distribution, indegree_distribution, shared_partner_counts, Network,
    SharedPartnerRelation, SharedPartnerType,
};
use crate::panel::{Covariates, Panel};
use crate::saom::{simulate_period, SaomModel};
use crate::terms::{Binding, ModelSpec};
use crate::tergm::{sample, McmcConfig, TergmModel};

/// Observed histogram with per-bucket simulated quantile envelopes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantileEnvelope {
    pub observed: Vec<f64>,
    pub min: Vec<f64>,
    pub q05: Vec<f64>,
    pub median: Vec<f64>,
    pub q95: Vec<f64>,
    pub max: Vec<f64>,
}

impl QuantileEnvelope {
    fn from_sims(observed: Vec<f64>, sims: &[Vec<f64>]) -> Self {
        let buckets = observed.len();
        let mut min = vec![f64::INFINITY; buckets];
        let mut max = vec![f64::NEG_INFINITY; buckets];
        let mut q05 = vec![0.0; buckets];
        let mut median = vec![0.0; buckets];
        let mut q95 = vec![0.0; buckets];
        for b in 0..buckets {
            let mut vals: Vec<f64> = sims.iter().map(|s| s[b]).collect();
            vals.sort_by(|a, c| a.partial_cmp(c).unwrap());
            min[b] = *vals.first().unwrap();
            max[b] = *vals.last().unwrap();
            q05[b] = quantile(&vals, 0.05);
            median[b] = quantile(&vals, 0.5);
            q95[b] = quantile(&vals, 0.95);
        }
        QuantileEnvelope {
            observed,
            min,
            q05,
            median,
            q95,
            max,
        }
    }

    /// Fraction of buckets whose observed value lies inside [min, max].
    pub fn coverage(&self) -> f64 {
        let hits = self
            .observed
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .filter(|(o, (lo, hi))| **o >= **lo && **o <= **hi)
            .count();
        hits as f64 / self.observed.len().max(1) as f64
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// One achieved ROC operating point (scores >= threshold predicted as ties).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// One achieved precision/recall operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Simulated-vs-observed goodness of fit plus tie-prediction curves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GofReport {
    pub esp: QuantileEnvelope,
    pub dsp: QuantileEnvelope,
    pub indegree: QuantileEnvelope,
    pub geodesic: QuantileEnvelope,
    /// Achieved operating points by descending threshold; the AUC additionally
    /// anchors the curve at (0,0) and (1,1).
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub nsim: usize,
    #[serde(default)]
    pub leakage_warnings: Vec<String>,
}

/// Training waves plus the held-out network, with any leakage overrides
/// recorded for the report.
#[derive(Debug)]
pub struct HoldoutSplit {
    pub training: Panel,
    pub test: Network,
    pub leakage_warnings: Vec<String>,
}

/// Split off the final wave as test data, rejecting model terms that would
/// resolve against it. `allow_leakage` downgrades the rejection to recorded
/// warnings (used only to reproduce the flaw).
pub fn holdout_split(
    panel: &Panel,
    test_wave: usize,
    spec: &ModelSpec,
    allow_leakage: bool,
) -> Result<HoldoutSplit> {
    if test_wave + 1 != panel.n_waves() {
        return Err(Error::WaveOutOfRange {
            wave: test_wave,
            waves: panel.n_waves(),
        });
    }
    let offending = leaking_terms(spec, test_wave);
    if !offending.is_empty() && !allow_leakage {
        return Err(Error::Leakage { terms: offending });
    }
    let leakage_warnings = offending
        .into_iter()
        .map(|t| format!("term {t} resolves against the held-out wave (override active)"))
        .collect();
    let training = Panel::from_waves_unchecked(
        panel.waves()[..test_wave].to_vec(),
        panel.covariates.clone(),
    );
    Ok(HoldoutSplit {
        training,
        test: panel.wave(test_wave)?.clone(),
        leakage_warnings,
    })
}

/// Terms whose covariate binding reaches the test wave when predicting it.
pub fn leaking_terms(spec: &ModelSpec, test_wave: usize) -> Vec<String> {
    spec.terms
        .iter()
        .filter(|term| {
            let Some(attr) = &term.attr else { return false };
            match spec.derived.iter().find(|d| &d.name == attr) {
                Some(d) => d.resolve_wave(test_wave) >= test_wave,
                // undeclared provenance with a contemporaneous binding is
                // treated as leaking (fail-unsafe)
                None => term.binding == Binding::Contemporaneous,
            }
        })
        .map(|t| t.label())
        .collect()
}

/// Simulate the held-out wave from a fitted TERGM conditional on the last
/// training wave.
pub fn predict_wave_tergm(
    model: &TergmModel,
    last_train_wave: &Network,
    covariates: &Covariates,
    nsim: usize,
    cfg: &McmcConfig,
) -> Result<Vec<Network>> {
    if nsim == 0 {
        return Ok(Vec::new());
    }
    let cfg = McmcConfig {
        sample_size: nsim,
        ..*cfg
    };
    sample(model, last_train_wave, covariates, &cfg, last_train_wave)
}

/// SAOM counterpart: independent mini-step simulation replicates.
pub fn predict_wave_saom(
    model: &SaomModel,
    last_train_wave: &Network,
    covariates: &Covariates,
    nsim: usize,
    seed: u64,
) -> Result<Vec<Network>> {
    (0..nsim)
        .map(|r| {
            simulate_period(
                model,
                last_train_wave,
                covariates,
                seed.wrapping_add(r as u64 * 0x9E37),
            )
        })
        .collect()
}

/// Per-dyad tie score: fraction of simulations with the tie present.
pub fn tie_scores(sims: &[Network], n: usize) -> Vec<f64> {
    let mut scores = vec![0.0; n * n];
    for sim in sims {
        for i in 0..n {
            for j in sim.out_neighbors(i) {
                scores[i * n + j] += 1.0;
            }
        }
    }
    let m = sims.len() as f64;
    for s in &mut scores {
        *s /= m;
    }
    scores
}

/// ROC and PR curves from scores and truth labels by threshold sweep over
/// the distinct scores, plus trapezoid (ROC) and step (PR) AUCs.
pub fn roc_pr_curves(pairs: &[(f64, bool)]) -> (Vec<RocPoint>, Vec<PrPoint>, f64, f64) {
    let positives = pairs.iter().filter(|(_, y)| *y).count() as f64;
    let negatives = pairs.len() as f64 - positives;
    let mut sorted: Vec<(f64, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut roc = Vec::new();
    let mut pr = Vec::new();
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut idx = 0;
    while idx < sorted.len() {
        let threshold = sorted[idx].0;
        while idx < sorted.len() && sorted[idx].0 == threshold {
            if sorted[idx].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            idx += 1;
        }
        let tpr = if positives > 0.0 { tp / positives } else { 0.0 };
        let fpr = if negatives > 0.0 { fp / negatives } else { 0.0 };
        roc.push(RocPoint { threshold, fpr, tpr });
        pr.push(PrPoint {
            threshold,
            recall: tpr,
            precision: tp / (tp + fp),
        });
    }

    // trapezoid rule over the ROC, anchored at (0,0) and (1,1)
    let mut auc_roc = 0.0;
    let (mut x0, mut y0) = (0.0, 0.0);
    for p in roc.iter().map(|p| (p.fpr, p.tpr)).chain([(1.0, 1.0)]) {
        auc_roc += (p.0 - x0) * (y0 + p.1) / 2.0;
        (x0, y0) = p;
    }
    if positives == 0.0 || negatives == 0.0 {
        auc_roc = 0.5;
    }

    // piecewise-constant precision between achieved recall levels
    let mut auc_pr = 0.0;
    let mut prev_recall = 0.0;
    for p in &pr {
        auc_pr += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    (roc, pr, auc_roc, auc_pr)
}

/// Score simulations against the observed held-out network.
pub fn score(sims: &[Network], observed: &Network) -> Result<GofReport> {
    if sims.is_empty() {
        return Err(Error::EmptySims);
    }
    let n = observed.n();
    for s in sims {
        if s.n() != n {
            return Err(Error::SizeMismatch(s.n(), n));
        }
    }

    let scores = tie_scores(sims, n);
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push((scores[i * n + j], observed.get(i, j)));
            }
        }
    }
    let (roc, pr, auc_roc, auc_pr) = roc_pr_curves(&pairs);

    let esp_obs = to_f64(&shared_partner_counts(
        observed,
        SharedPartnerRelation::Edgewise,
        SharedPartnerType::Otp,
    ));
    let dsp_obs = to_f64(&shared_partner_counts(
        observed,
        SharedPartnerRelation::Dyadwise,
        SharedPartnerType::Otp,
    ));
    let ideg_obs = to_f64(&indegree_distribution(observed));
    let geo_obs = geodesic_vec(observed)?;

    let mut esp_sims = Vec::with_capacity(sims.len());
    let mut dsp_sims = Vec::with_capacity(sims.len());
    let mut ideg_sims = Vec::with_capacity(sims.len());
    let mut geo_sims = Vec::with_capacity(sims.len());
    for s in sims {
        esp_sims.push(to_f64(&shared_partner_counts(
            s,
            SharedPartnerRelation::Edgewise,
            SharedPartnerType::Otp,
        )));
        dsp_sims.push(to_f64(&shared_partner_counts(
            s,
            SharedPartnerRelation::Dyadwise,
            SharedPartnerType::Otp,
        )));
        ideg_sims.push(to_f64(&indegree_distribution(s)));
        geo_sims.push(geodesic_vec(s)?);
    }

    Ok(GofReport {
        esp: QuantileEnvelope::from_sims(esp_obs, &esp_sims),
        dsp: QuantileEnvelope::from_sims(dsp_obs, &dsp_sims),
        indegree: QuantileEnvelope::from_sims(ideg_obs, &ideg_sims),
        geodesic: QuantileEnvelope::from_sims(geo_obs, &geo_sims),
        roc,
        pr,
        auc_roc,
        auc_pr,
        nsim: sims.len(),
        leakage_warnings: Vec::new(),
    })
}

fn to_f64(v: &[u64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Geodesic buckets 1..=n-1 with the unreachable count appended.
fn geodesic_vec(net: &Network) -> Result<Vec<f64>> {
    let g = geodesic_distribution(net, net.n().saturating_sub(1).max(1), false)?;
    let mut v = to_f64(&g.counts);
    v.push(g.unreachable as f64);
    Ok(v)
}
