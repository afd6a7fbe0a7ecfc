//! TERGM: conditional exponential-family model for one panel transition,
//! tie-toggle Metropolis-Hastings sampling, and maximum-likelihood
//! estimation by importance-sampled Newton steps with a pseudo-likelihood
//! initializer.
//!
//! Estimation conditions on the observed previous wave per transition;
//! transitions are conditionally independent, so observed targets and
//! simulated statistics sum across transitions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::panel::{Covariates, Panel};
use crate::stats::{change_statistic, change_statistic_cleared, statistic_vector, StatisticContext};
use crate::terms::{ModelSpec, TermSpec};

/// Coefficient cap treated as a separation / boundary diagnostic.
const THETA_CAP: f64 = 50.0;
/// Pseudo-likelihood coefficient cap (separation guard).
const MPLE_CAP: f64 = 10.0;
/// Trust region: max infinity-norm of one Newton step.
const MAX_STEP: f64 = 0.5;

/// TERGM with fixed term list and coefficients on the log-odds scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TergmModel {
    pub terms: Vec<TermSpec>,
    pub theta: Vec<f64>,
}

impl TergmModel {
    pub fn new(terms: Vec<TermSpec>, theta: Vec<f64>) -> Result<Self> {
        if terms.len() != theta.len() {
            return Err(Error::SpecParse(format!(
                "{} terms but {} coefficients",
                terms.len(),
                theta.len()
            )));
        }
        for t in &terms {
            t.validate()?;
        }
        Ok(TergmModel { terms, theta })
    }
}

/// MCMC sampling schedule. `thinning` is the number of proposals between
/// retained samples.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            burn_in: 30_000,
            thinning: 3_000,
            sample_size: 5_000,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        McmcConfig { seed, ..self }
    }
}

/// Coefficients with standard errors and convergence diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub theta_hat: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Row-major k x k covariance of the estimate.
    pub covariance: Vec<Vec<f64>>,
    /// (simulated mean - observed) / simulated sd, per coordinate, at theta_hat.
    pub convergence_tratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Simulated networks hit the all-ties/no-ties boundary in >10% of draws.
    pub degenerate: bool,
    /// A coefficient ran into the cap (perfect prediction / separation).
    pub separation: bool,
}

/// Unnormalized log probability theta . s(ctx).
pub fn log_weight(model: &TergmModel, ctx: &StatisticContext) -> Result<f64> {
    let s = statistic_vector(&model.terms, ctx)?;
    Ok(dot(&model.theta, &s))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One MH chain over tie toggles. Retains networks and/or running statistic
/// vectors depending on what the caller needs.
struct ChainOutput {
    networks: Vec<Network>,
    stats: Vec<Vec<f64>>,
    densities: Vec<f64>,
}

fn run_chain(
    model: &TergmModel,
    previous: &Network,
    covariates: &Covariates,
    cfg: &McmcConfig,
    init: &Network,
    keep_networks: bool,
) -> Result<ChainOutput> {
    let n = init.n();
    if previous.n() != n {
        return Err(Error::SizeMismatch(previous.n(), n));
    }
    let k = model.terms.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = init.clone();
    let init_ctx = StatisticContext::new(&state, previous, covariates);
    let mut running = statistic_vector(&model.terms, &init_ctx)?;

    let mut networks = Vec::new();
    let mut stats = Vec::with_capacity(cfg.sample_size);
    let mut densities = Vec::with_capacity(cfg.sample_size);
    let max_ties = (n * (n - 1)) as f64;

    let total = cfg.burn_in + cfg.thinning * cfg.sample_size;
    let mut deltas = vec![0.0; k];
    for step in 0..total {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let present = state.get(i, j);
        if present {
            state.set(i, j, false);
        }
        let mut logratio = 0.0;
        for (idx, term) in model.terms.iter().enumerate() {
            let d = change_statistic_cleared(term, &state, previous, covariates, i, j)?;
            deltas[idx] = d;
            logratio += model.theta[idx] * d;
        }
        if present {
            logratio = -logratio;
        }
        let accept = logratio >= 0.0 || rng.gen::<f64>() < logratio.exp();
        if accept {
            state.set(i, j, !present);
            let sign = if present { -1.0 } else { 1.0 };
            for idx in 0..k {
                running[idx] += sign * deltas[idx];
            }
        } else if present {
            state.set(i, j, true);
        }

        if step >= cfg.burn_in && (step - cfg.burn_in + 1) % cfg.thinning == 0 {
            stats.push(running.clone());
            let e = state.edge_count() as f64;
            densities.push(e / max_ties);
            if keep_networks {
                networks.push(state.clone());
            }
            if stats.len() == cfg.sample_size {
                break;
            }
        }
    }
    Ok(ChainOutput {
        networks,
        stats,
        densities,
    })
}

/// Metropolis-Hastings sample of networks conditional on `previous`.
pub fn sample(
    model: &TergmModel,
    previous: &Network,
    covariates: &Covariates,
    cfg: &McmcConfig,
    init: &Network,
) -> Result<Vec<Network>> {
    Ok(run_chain(model, previous, covariates, cfg, init, true)?.networks)
}

/// Like `sample` but returns only the statistic vectors of retained draws.
pub fn sample_statistics(
    model: &TergmModel,
    previous: &Network,
    covariates: &Covariates,
    cfg: &McmcConfig,
    init: &Network,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let out = run_chain(model, previous, covariates, cfg, init, false)?;
    Ok((out.stats, out.densities))
}

/// Full probability table over all digraphs on n <= 4 nodes; the exact
/// oracle for the sampler and estimator.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    pub n: usize,
    /// Probability per graph, indexed by the dyad bitmask below.
    pub probabilities: Vec<f64>,
    /// Statistic vector per graph, same indexing.
    pub statistics: Vec<Vec<f64>>,
}

impl ExactDistribution {
    /// Off-diagonal dyads in row-major order; bit b of a graph index is dyad b.
    pub fn dyads(n: usize) -> Vec<(usize, usize)> {
        let mut d = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d.push((i, j));
                }
            }
        }
        d
    }

    pub fn network_for_index(n: usize, index: usize) -> Network {
        let dyads = Self::dyads(n);
        let mut net = Network::empty(n);
        for (bit, &(i, j)) in dyads.iter().enumerate() {
            if index >> bit & 1 == 1 {
                net.set(i, j, true);
            }
        }
        net
    }

    pub fn index_for_network(net: &Network) -> usize {
        let dyads = Self::dyads(net.n());
        let mut idx = 0;
        for (bit, &(i, j)) in dyads.iter().enumerate() {
            if net.get(i, j) {
                idx |= 1 << bit;
            }
        }
        idx
    }

    pub fn expected_statistics(&self) -> Vec<f64> {
        let k = self.statistics.first().map_or(0, Vec::len);
        let mut e = vec![0.0; k];
        for (p, s) in self.probabilities.iter().zip(&self.statistics) {
            for (acc, v) in e.iter_mut().zip(s) {
                *acc += p * v;
            }
        }
        e
    }
}

pub fn exact_distribution(
    model: &TergmModel,
    previous: &Network,
    covariates: &Covariates,
) -> Result<ExactDistribution> {
    let n = previous.n();
    if n > 4 {
        return Err(Error::TooLargeForExact(n));
    }
    let d = n * (n - 1);
    let count = 1usize << d;
    let mut log_weights = Vec::with_capacity(count);
    let mut statistics = Vec::with_capacity(count);
    for index in 0..count {
        let net = ExactDistribution::network_for_index(n, index);
        let ctx = StatisticContext::new(&net, previous, covariates);
        let s = statistic_vector(&model.terms, &ctx)?;
        log_weights.push(dot(&model.theta, &s));
        statistics.push(s);
    }
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probabilities: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let z: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= z;
    }
    Ok(ExactDistribution {
        n,
        probabilities,
        statistics,
    })
}

/// One estimation transition: dependent wave with its previous wave and the
/// covariates materialized for it.
pub(crate) struct Transition {
    pub previous: Network,
    pub current: Network,
    pub covariates: Covariates,
}

pub(crate) fn transitions(spec: &ModelSpec, panel: &Panel) -> Result<Vec<Transition>> {
    if panel.n_waves() < 2 {
        return Err(Error::TooFewWaves(panel.n_waves()));
    }
    (1..panel.n_waves())
        .map(|t| {
            Ok(Transition {
                previous: panel.wave(t - 1)?.clone(),
                current: panel.wave(t)?.clone(),
                covariates: panel.transition_covariates(t, &spec.derived)?,
            })
        })
        .collect()
}

/// Maximum pseudo-likelihood: logistic regression of observed tie states on
/// change statistics, pooled over transitions. Initializer only.
pub fn mple(spec: &ModelSpec, panel: &Panel) -> Result<Vec<f64>> {
    let trans = transitions(spec, panel)?;
    let k = spec.terms.len();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for tr in &trans {
        let n = tr.current.n();
        let ctx = StatisticContext::new(&tr.current, &tr.previous, &tr.covariates);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut row = Vec::with_capacity(k);
                for term in &spec.terms {
                    row.push(change_statistic(term, &ctx, i, j)?);
                }
                xs.push(row);
                ys.push(tr.current.get(i, j) as u8 as f64);
            }
        }
    }
    logistic_fit(&xs, &ys, k)
}

fn logistic_fit(xs: &[Vec<f64>], ys: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut beta = DVector::zeros(k);
    for _ in 0..40 {
        let mut grad = DVector::zeros(k);
        let mut hess = DMatrix::zeros(k, k);
        for (row, &y) in xs.iter().zip(ys) {
            let x = DVector::from_row_slice(row);
            let eta: f64 = beta.dot(&x);
            let p = 1.0 / (1.0 + (-eta).exp());
            grad += &x * (y - p);
            let w = (p * (1.0 - p)).max(1e-10);
            hess += &x * x.transpose() * w;
        }
        for d in 0..k {
            hess[(d, d)] += 1e-8;
        }
        let step = hess
            .clone()
            .lu()
            .solve(&grad)
            .ok_or(Error::Singular("pseudo-likelihood Hessian"))?;
        beta += &step;
        // separation guard
        let mut capped = false;
        for b in beta.iter_mut() {
            if b.abs() > MPLE_CAP {
                *b = b.signum() * MPLE_CAP;
                capped = true;
            }
        }
        if step.amax() < 1e-8 || capped {
            break;
        }
    }
    Ok(beta.iter().cloned().collect())
}

/// Knobs for the MCMC-MLE loop beyond the sampling schedule.
#[derive(Clone, Copy, Debug)]
pub struct EstimateOptions {
    pub max_iterations: usize,
    pub tratio_tolerance: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            max_iterations: 30,
            tratio_tolerance: 0.1,
        }
    }
}

/// Simulate per-transition chains at `theta` and sum statistic vectors
/// across transitions draw-by-draw (chains are independent).
fn simulate_summed_stats(
    terms: &[TermSpec],
    theta: &[f64],
    trans: &[Transition],
    cfg: &McmcConfig,
    seed_salt: u64,
) -> Result<(DMatrix<f64>, f64)> {
    let k = terms.len();
    let m = cfg.sample_size;
    let model = TergmModel {
        terms: terms.to_vec(),
        theta: theta.to_vec(),
    };
    let mut summed = DMatrix::zeros(m, k);
    let mut boundary = 0usize;
    let mut total_draws = 0usize;
    for (t_idx, tr) in trans.iter().enumerate() {
        let chain_cfg = McmcConfig {
            seed: cfg
                .seed
                .wrapping_mul(0x9E3779B97F4A7C15)
                .wrapping_add(seed_salt)
                .wrapping_add(t_idx as u64),
            ..*cfg
        };
        let (stats, densities) =
            sample_statistics(&model, &tr.previous, &tr.covariates, &chain_cfg, &tr.current)?;
        for (d, s) in stats.iter().enumerate() {
            for c in 0..k {
                summed[(d, c)] += s[c];
            }
        }
        boundary += densities
            .iter()
            .filter(|&&d| d == 0.0 || d == 1.0)
            .count();
        total_draws += densities.len();
    }
    let boundary_frac = boundary as f64 / total_draws.max(1) as f64;
    Ok((summed, boundary_frac))
}

fn weighted_moments(m: &DMatrix<f64>, w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let k = m.ncols();
    let wsum: f64 = w.iter().sum();
    let mut mean = DVector::zeros(k);
    for (d, &wd) in w.iter().enumerate() {
        for c in 0..k {
            mean[c] += wd * m[(d, c)];
        }
    }
    mean /= wsum;
    let mut cov = DMatrix::zeros(k, k);
    for (d, &wd) in w.iter().enumerate() {
        let row = m.row(d).transpose() - &mean;
        cov += &row * row.transpose() * wd;
    }
    cov /= wsum;
    (mean, cov)
}

/// MCMC maximum likelihood over all panel transitions.
pub fn estimate(spec: &ModelSpec, panel: &Panel, cfg: &McmcConfig) -> Result<ParameterEstimate> {
    estimate_with_options(spec, panel, cfg, &EstimateOptions::default())
}

pub fn estimate_with_options(
    spec: &ModelSpec,
    panel: &Panel,
    cfg: &McmcConfig,
    opts: &EstimateOptions,
) -> Result<ParameterEstimate> {
    let trans = transitions(spec, panel)?;
    let k = spec.terms.len();

    // observed targets summed across transitions
    let mut observed = DVector::zeros(k);
    for tr in &trans {
        let ctx = StatisticContext::new(&tr.current, &tr.previous, &tr.covariates);
        let s = statistic_vector(&spec.terms, &ctx)?;
        for c in 0..k {
            observed[c] += s[c];
        }
    }

    let mut theta = DVector::from_vec(mple(spec, panel)?);
    let mut degenerate = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut loop_converged = false;
    // diagnostics from the last simulated sample; the sample that passes the
    // tolerance check is the one the reported t-ratios come from
    let mut final_tratios = vec![f64::INFINITY; k];
    let mut final_cov = DMatrix::zeros(k, k);

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let (stats, boundary_frac) =
            simulate_summed_stats(&spec.terms, theta.as_slice(), &trans, cfg, iter as u64)?;
        if boundary_frac > 0.10 {
            degenerate = true;
        }
        let m = stats.nrows();
        let uniform = vec![1.0; m];
        let (mean, cov) = weighted_moments(&stats, &uniform);
        let sd = cov_sd(&cov);
        let tratios: Vec<f64> = (0..k)
            .map(|c| (mean[c] - observed[c]) / sd[c].max(1e-12))
            .collect();
        final_tratios = tratios.clone();
        final_cov = cov;
        // capped initializer plus a statistic with no simulation variance
        // means the data pin that statistic at its boundary
        for c in 0..k {
            if theta[c].abs() >= MPLE_CAP && sd[c] < 1e-8 {
                separation = true;
            }
        }
        if tratios.iter().all(|t| t.abs() < opts.tratio_tolerance) {
            loop_converged = true;
            break;
        }

        // importance-sampled Newton steps on the current sample until the
        // effective sample size degrades, then resample
        let anchor = theta.clone();
        let mut weights = uniform;
        for _ in 0..5 {
            let (wmean, wcov) = weighted_moments(&stats, &weights);
            let mut info = wcov.clone();
            let ridge = 1e-8 * (info.trace() / k as f64).max(1.0);
            for d in 0..k {
                info[(d, d)] += ridge;
            }
            let gradient = &observed - &wmean;
            let mut step = info
                .clone()
                .lu()
                .solve(&gradient)
                .ok_or(Error::Singular("simulated Fisher information"))?;
            clip_step(&mut step);
            // step-halving until the reweighted sample still carries information
            let mut halvings = 0;
            let (candidate, new_weights) = loop {
                let candidate = &theta + &step;
                let new_weights: Vec<f64> = (0..stats.nrows())
                    .map(|d| {
                        let mut lw = 0.0;
                        for c in 0..k {
                            lw += (candidate[c] - anchor[c]) * stats[(d, c)];
                        }
                        lw
                    })
                    .collect();
                let new_weights = normalize_log_weights(new_weights);
                if effective_sample_size(&new_weights) >= 0.1 * stats.nrows() as f64
                    || halvings >= 10
                {
                    break (candidate, new_weights);
                }
                step /= 2.0;
                halvings += 1;
            };
            let ess = effective_sample_size(&new_weights);
            theta = candidate;
            weights = new_weights;
            if ess < 0.3 * stats.nrows() as f64 || step.amax() < 1e-9 {
                break;
            }
        }
        for c in 0..k {
            if theta[c].abs() > THETA_CAP {
                theta[c] = theta[c].signum() * THETA_CAP;
                separation = true;
            }
        }
    }

    let converged = loop_converged && !separation;
    let tratios = final_tratios;

    let mut info = final_cov.clone();
    let ridge = 1e-10 * (info.trace() / k as f64).max(1.0);
    for d in 0..k {
        info[(d, d)] += ridge;
    }
    let covariance = info
        .try_inverse()
        .ok_or(Error::Singular("simulated Fisher information"))?;
    let standard_errors: Vec<f64> = (0..k).map(|c| covariance[(c, c)].max(0.0).sqrt()).collect();

    Ok(ParameterEstimate {
        theta_hat: theta.iter().cloned().collect(),
        standard_errors,
        covariance: (0..k)
            .map(|r| (0..k).map(|c| covariance[(r, c)]).collect())
            .collect(),
        convergence_tratios: tratios,
        iterations,
        converged,
        degenerate,
        separation,
    })
}

fn cov_sd(cov: &DMatrix<f64>) -> Vec<f64> {
    (0..cov.ncols()).map(|c| cov[(c, c)].max(0.0).sqrt()).collect()
}

fn clip_step(step: &mut DVector<f64>) {
    let max = step.amax();
    if max > MAX_STEP {
        *step *= MAX_STEP / max;
    }
}

fn normalize_log_weights(mut lw: Vec<f64>) -> Vec<f64> {
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for w in &mut lw {
        *w = (*w - max).exp();
        sum += *w;
    }
    for w in &mut lw {
        *w /= sum;
    }
    lw
}

fn effective_sample_size(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sumsq: f64 = weights.iter().map(|w| w * w).sum();
    sum * sum / sumsq.max(f64::MIN_POSITIVE)
}
