//! Minimal stochastic actor-oriented model: continuous-time mini-step
//! simulation with multinomial-logit tie choices and method-of-moments
//! estimation by Robbins-Monro stochastic approximation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::panel::{Covariates, Panel};
use crate::terms::DEFAULT_DECAY;
use crate::tergm::ParameterEstimate;

/// Actor-level effects entering the objective function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "effect", content = "attr")]
pub enum SaomEffect {
    Outdegree,
    Reciprocity,
    TransitiveTies,
    GwespTransitive,
    GwespCyclic,
    IndegreePopularitySqrt,
    OutdegreePopularity,
    OutdegreeActivitySqrt,
    CovariateEgo(String),
    CovariateAlter(String),
    CovariateSame(String),
}

impl SaomEffect {
    pub fn label(&self) -> String {
        match self {
            SaomEffect::Outdegree => "outdegree".into(),
            SaomEffect::Reciprocity => "reciprocity".into(),
            SaomEffect::TransitiveTies => "transitive_ties".into(),
            SaomEffect::GwespTransitive => "gwesp_transitive".into(),
            SaomEffect::GwespCyclic => "gwesp_cyclic".into(),
            SaomEffect::IndegreePopularitySqrt => "indegree_popularity_sqrt".into(),
            SaomEffect::OutdegreePopularity => "outdegree_popularity".into(),
            SaomEffect::OutdegreeActivitySqrt => "outdegree_activity_sqrt".into(),
            SaomEffect::CovariateEgo(a) => format!("ego({a})"),
            SaomEffect::CovariateAlter(a) => format!("alter({a})"),
            SaomEffect::CovariateSame(a) => format!("same({a})"),
        }
    }
}

/// Actor model: one rate per period plus an objective-function effect list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaomModel {
    pub rate_per_period: f64,
    pub effects: Vec<SaomEffect>,
    pub beta: Vec<f64>,
}

impl SaomModel {
    pub fn new(rate_per_period: f64, effects: Vec<SaomEffect>, beta: Vec<f64>) -> Result<Self> {
        if effects.len() != beta.len() {
            return Err(Error::SpecParse(format!(
                "{} effects but {} coefficients",
                effects.len(),
                beta.len()
            )));
        }
        if !(rate_per_period > 0.0) {
            return Err(Error::SpecParse(format!(
                "rate must be positive, got {rate_per_period}"
            )));
        }
        Ok(SaomModel {
            rate_per_period,
            effects,
            beta,
        })
    }
}

#[inline]
fn gw_weight(decay: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    decay.exp() * (1.0 - (1.0 - (-decay).exp()).powi(k as i32))
}

/// Value of one effect from actor i's perspective.
pub fn actor_statistic(
    effect: &SaomEffect,
    actor: usize,
    x: &Network,
    covariates: &Covariates,
) -> Result<f64> {
    let value = match effect {
        SaomEffect::Outdegree => x.outdegree(actor) as f64,
        SaomEffect::Reciprocity => x
            .out_neighbors(actor)
            .filter(|&j| x.get(j, actor))
            .count() as f64,
        SaomEffect::TransitiveTies => x
            .out_neighbors(actor)
            .filter(|&j| x.otp_count(actor, j) > 0)
            .count() as f64,
        SaomEffect::GwespTransitive => x
            .out_neighbors(actor)
            .map(|j| gw_weight(DEFAULT_DECAY, x.otp_count(actor, j)))
            .sum(),
        SaomEffect::GwespCyclic => x
            .out_neighbors(actor)
            .map(|j| gw_weight(DEFAULT_DECAY, x.itp_count(actor, j)))
            .sum(),
        SaomEffect::IndegreePopularitySqrt => x
            .out_neighbors(actor)
            .map(|j| (x.indegree(j) as f64).sqrt())
            .sum(),
        SaomEffect::OutdegreePopularity => x
            .out_neighbors(actor)
            .map(|j| x.outdegree(j) as f64)
            .sum(),
        SaomEffect::OutdegreeActivitySqrt => (x.outdegree(actor) as f64).powf(1.5),
        SaomEffect::CovariateEgo(attr) => {
            let v = covariates.numeric(attr)?;
            x.outdegree(actor) as f64 * v[actor]
        }
        SaomEffect::CovariateAlter(attr) => {
            let v = covariates.numeric(attr)?;
            x.out_neighbors(actor).map(|j| v[j]).sum()
        }
        SaomEffect::CovariateSame(attr) => {
            let f = covariates.factor(attr)?;
            x.out_neighbors(actor)
                .filter(|&j| f[actor] == f[j])
                .count() as f64
        }
    };
    Ok(value)
}

/// Network-level statistic for an effect: sum of actor statistics. These are
/// the method-of-moments targets.
pub fn network_statistic(effect: &SaomEffect, x: &Network, covariates: &Covariates) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..x.n() {
        total += actor_statistic(effect, i, x, covariates)?;
    }
    Ok(total)
}

/// Actor i and the state it is deciding from.
pub struct ObjectiveContext<'a> {
    pub actor: usize,
    pub current: &'a Network,
    pub covariates: &'a Covariates,
}

/// Objective value sum_k beta_k s_ik(candidate) for a candidate differing
/// from the current state by at most one outgoing tie of the actor.
pub fn objective(model: &SaomModel, ctx: &ObjectiveContext, candidate: &Network) -> Result<f64> {
    let n = ctx.current.n();
    let mut diffs = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j || ctx.current.get(i, j) == candidate.get(i, j) {
                continue;
            }
            if i != ctx.actor {
                return Err(Error::InvalidCandidate { actor: ctx.actor });
            }
            diffs += 1;
        }
    }
    if diffs > 1 {
        return Err(Error::InvalidCandidate { actor: ctx.actor });
    }
    objective_unchecked(model, ctx.actor, candidate, ctx.covariates)
}

fn objective_unchecked(
    model: &SaomModel,
    actor: usize,
    x: &Network,
    covariates: &Covariates,
) -> Result<f64> {
    let mut f = 0.0;
    for (effect, &beta) in model.effects.iter().zip(&model.beta) {
        f += beta * actor_statistic(effect, actor, x, covariates)?;
    }
    Ok(f)
}

/// Simulate one period: Poisson(n * rate) mini-steps, uniform actor
/// selection, multinomial-logit choice over "keep" plus each outgoing-tie
/// toggle. Bit-reproducible for a fixed seed.
pub fn simulate_period(
    model: &SaomModel,
    start: &Network,
    covariates: &Covariates,
    seed: u64,
) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = start.n();
    let mut state = start.clone();
    let lambda = n as f64 * model.rate_per_period;
    let steps = if lambda <= 0.0 {
        0
    } else {
        Poisson::new(lambda)
            .map_err(|_| Error::SpecParse(format!("bad rate {}", model.rate_per_period)))?
            .sample(&mut rng) as usize
    };
    let mut log_odds = vec![0.0; n];
    for _ in 0..steps {
        let actor = rng.gen_range(0..n);
        // option index j != actor toggles tie (actor, j); index == actor keeps
        let keep = objective_unchecked(model, actor, &state, covariates)?;
        for j in 0..n {
            if j == actor {
                log_odds[j] = keep;
            } else {
                state.toggle(actor, j);
                log_odds[j] = objective_unchecked(model, actor, &state, covariates)?;
                state.toggle(actor, j);
            }
        }
        let max = log_odds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_odds.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut choice = n - 1;
        for (j, w) in weights.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 {
                choice = j;
                break;
            }
        }
        if choice != actor {
            state.toggle(actor, choice);
        }
    }
    Ok(state)
}

/// Robbins-Monro schedule for method-of-moments estimation.
#[derive(Clone, Copy, Debug)]
pub struct MomConfig {
    pub phase1_reps: usize,
    pub phase2_subphases: usize,
    pub phase2_base_iterations: usize,
    pub phase3_reps: usize,
    pub initial_gain: f64,
    /// Finite-difference step for the derivative matrix.
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for MomConfig {
    fn default() -> Self {
        MomConfig {
            phase1_reps: 100,
            phase2_subphases: 4,
            phase2_base_iterations: 50,
            phase3_reps: 500,
            initial_gain: 0.2,
            fd_step: 0.3,
            seed: 0,
        }
    }
}

const RATE_FLOOR: f64 = 0.01;

/// Parameter layout for the estimator: index 0 is the rate, then one beta
/// per effect.
fn unpack(theta: &DVector<f64>, effects: &[SaomEffect]) -> SaomModel {
    SaomModel {
        rate_per_period: theta[0].max(RATE_FLOOR),
        effects: effects.to_vec(),
        beta: theta.iter().skip(1).cloned().collect(),
    }
}

struct MomProblem<'a> {
    effects: &'a [SaomEffect],
    panel: &'a Panel,
    observed: DVector<f64>,
}

impl MomProblem<'_> {
    /// Simulated target vector for one replicate: summed over transitions,
    /// [hamming distance, per-effect end-wave statistics...].
    fn simulate_targets(&self, theta: &DVector<f64>, seed: u64) -> Result<DVector<f64>> {
        let model = unpack(theta, self.effects);
        let k = self.effects.len();
        let mut out = DVector::zeros(k + 1);
        for t in 1..self.panel.n_waves() {
            let start = self.panel.wave(t - 1)?;
            let end = simulate_period(
                &model,
                start,
                &self.panel.covariates,
                seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(t as u64),
            )?;
            out[0] += start.hamming(&end)? as f64;
            for (e, effect) in self.effects.iter().enumerate() {
                out[e + 1] += network_statistic(effect, &end, &self.panel.covariates)?;
            }
        }
        Ok(out)
    }

    fn mean_targets(&self, theta: &DVector<f64>, reps: usize, seed: u64) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(self.observed.len());
        for r in 0..reps {
            acc += self.simulate_targets(theta, seed.wrapping_add(r as u64 * 7919))?;
        }
        Ok(acc / reps as f64)
    }

    /// Derivative of expected targets w.r.t. parameters by paired-seed
    /// forward differences.
    fn derivative(
        &self,
        theta: &DVector<f64>,
        reps: usize,
        fd_step: f64,
        seed: u64,
    ) -> Result<DMatrix<f64>> {
        let p = theta.len();
        let base = self.mean_targets(theta, reps, seed)?;
        let mut d = DMatrix::zeros(p, p);
        for col in 0..p {
            let mut shifted = theta.clone();
            shifted[col] += fd_step;
            let plus = self.mean_targets(&shifted, reps, seed)?;
            for row in 0..p {
                d[(row, col)] = (plus[row] - base[row]) / fd_step;
            }
        }
        Ok(d)
    }
}

/// Invert the moment derivative, escalating a ridge when simulation noise
/// or degenerate data leave it numerically singular.
fn regularized_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    let scale = m.amax().max(1.0);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut reg = m.clone();
        for d in 0..p {
            reg[(d, d)] += ridge;
        }
        if let Some(inv) = reg.lu().solve(&DMatrix::identity(p, p)) {
            if inv.iter().all(|v| v.is_finite()) && inv.amax() < 1e12 {
                return Ok(inv);
            }
        }
        ridge = if ridge == 0.0 { 1e-6 * scale } else { ridge * 10.0 };
    }
    Err(Error::Singular("moment derivative matrix"))
}

/// Method-of-moments estimation. Returned layout: index 0 is the rate,
/// remaining entries follow the effect list.
pub fn estimate_mom(
    effects: &[SaomEffect],
    panel: &Panel,
    cfg: &MomConfig,
) -> Result<ParameterEstimate> {
    if panel.n_waves() < 2 {
        return Err(Error::TooFewWaves(panel.n_waves()));
    }
    let p = effects.len() + 1;
    let n = panel.n() as f64;

    let mut observed: DVector<f64> = DVector::zeros(p);
    for t in 1..panel.n_waves() {
        observed[0] += panel.wave(t - 1)?.hamming(panel.wave(t)?)? as f64;
        for (e, effect) in effects.iter().enumerate() {
            observed[e + 1] += network_statistic(effect, panel.wave(t)?, &panel.covariates)?;
        }
    }

    // crude initial values: enough change capacity for the observed hamming
    // distance, outdegree effect at the logit of observed density
    let transitions = (panel.n_waves() - 1) as f64;
    let mut theta: DVector<f64> = DVector::zeros(p);
    theta[0] = (1.5 * observed[0] / (n * transitions)).max(0.5_f64);
    let mean_density: f64 = (1..panel.n_waves())
        .map(|t| panel.wave(t).unwrap().density())
        .sum::<f64>()
        / transitions;
    for (e, effect) in effects.iter().enumerate() {
        if *effect == SaomEffect::Outdegree {
            let d = mean_density.clamp(0.01, 0.99);
            theta[e + 1] = (d / (1.0 - d)).ln();
        }
    }

    let problem = MomProblem {
        effects,
        panel,
        observed: observed.clone(),
    };

    // Phase 1: derivative matrix by finite differences
    let deriv = problem.derivative(&theta, cfg.phase1_reps, cfg.fd_step, cfg.seed)?;
    let deriv_inv = regularized_inverse(&deriv)?;

    // Phase 2: Robbins-Monro subphases with halving gains, Polyak averaging
    let mut iterations = 0;
    let mut seed_counter = cfg.seed.wrapping_add(0xAA11);
    for sub in 0..cfg.phase2_subphases {
        let gain = cfg.initial_gain / (1 << sub) as f64;
        let iters = cfg.phase2_base_iterations * (sub + 1);
        let mut acc = DVector::zeros(p);
        for _ in 0..iters {
            iterations += 1;
            seed_counter = seed_counter.wrapping_add(1);
            let sim = problem.simulate_targets(&theta, seed_counter)?;
            let deviation = &sim - &observed;
            theta -= gain * (&deriv_inv * deviation);
            theta[0] = theta[0].max(RATE_FLOOR);
            acc += &theta;
        }
        theta = acc / iters as f64;
        theta[0] = theta[0].max(RATE_FLOOR);
    }

    // Phase 3: convergence t-ratios and delta-method standard errors
    let mut sims = DMatrix::zeros(cfg.phase3_reps, p);
    for r in 0..cfg.phase3_reps {
        let s = problem.simulate_targets(&theta, cfg.seed.wrapping_add(0xBEEF + r as u64))?;
        for c in 0..p {
            sims[(r, c)] = s[c];
        }
    }
    let reps = cfg.phase3_reps as f64;
    let mean = DVector::from_iterator(p, sims.column_iter().map(|c| c.sum() / reps));
    let mut sigma = DMatrix::zeros(p, p);
    for r in 0..cfg.phase3_reps {
        let d = sims.row(r).transpose() - &mean;
        sigma += &d * d.transpose();
    }
    sigma /= reps;
    let sd: Vec<f64> = (0..p).map(|c| sigma[(c, c)].max(0.0).sqrt()).collect();
    let tratios: Vec<f64> = (0..p)
        .map(|c| (mean[c] - observed[c]) / sd[c].max(1e-12))
        .collect();

    let deriv3 = problem.derivative(&theta, cfg.phase1_reps, cfg.fd_step, cfg.seed ^ 0x5555)?;
    let deriv3_inv = regularized_inverse(&deriv3)?;
    let covariance = &deriv3_inv * &sigma * deriv3_inv.transpose();
    let standard_errors: Vec<f64> = (0..p).map(|c| covariance[(c, c)].max(0.0).sqrt()).collect();

    let at_rate_floor = theta[0] <= RATE_FLOOR * 2.0;
    let converged = tratios.iter().all(|t| t.abs() < 0.1) && !at_rate_floor;
    Ok(ParameterEstimate {
        theta_hat: theta.iter().cloned().collect(),
        standard_errors,
        covariance: (0..p)
            .map(|r| (0..p).map(|c| covariance[(r, c)]).collect())
            .collect(),
        convergence_tratios: tratios,
        iterations,
        converged,
        degenerate: false,
        separation: at_rate_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::random_net;

    fn base_model(effects: Vec<SaomEffect>, beta: Vec<f64>) -> SaomModel {
        SaomModel::new(5.0, effects, beta).unwrap()
    }

    #[test]
    fn objective_zero_beta() {
        let net = random_net(8, 1);
        let cov = Covariates::new();
        let model = base_model(vec![SaomEffect::Outdegree], vec![0.0]);
        let ctx = ObjectiveContext {
            actor: 0,
            current: &net,
            covariates: &cov,
        };
        assert_eq!(objective(&model, &ctx, &net).unwrap(), 0.0);
    }

    #[test]
    fn objective_outdegree_effect() {
        let net = random_net(8, 2);
        let cov = Covariates::new();
        let model = base_model(vec![SaomEffect::Outdegree], vec![0.7]);
        let mut candidate = net.clone();
        let j = if net.get(3, 4) { 4 } else { 4 };
        candidate.toggle(3, j);
        let ctx = ObjectiveContext {
            actor: 3,
            current: &net,
            covariates: &cov,
        };
        let f = objective(&model, &ctx, &candidate).unwrap();
        assert!((f - 0.7 * candidate.outdegree(3) as f64).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_foreign_change() {
        let net = random_net(8, 3);
        let cov = Covariates::new();
        let model = base_model(vec![SaomEffect::Outdegree], vec![1.0]);
        let mut candidate = net.clone();
        candidate.toggle(5, 6);
        let ctx = ObjectiveContext {
            actor: 0,
            current: &net,
            covariates: &cov,
        };
        assert!(matches!(
            objective(&model, &ctx, &candidate),
            Err(Error::InvalidCandidate { actor: 0 })
        ));
    }

    #[test]
    fn actor_statistics_match_direct_formulas() {
        let net = random_net(9, 11);
        let mut cov = Covariates::new();
        cov.insert_numeric("v", (0..9).map(|i| i as f64 * 0.5 - 2.0).collect());
        cov.insert_factor(
            "g",
            (0..9).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect(),
        );
        let dense = net.to_dense();
        for actor in 0..9 {
            let outdeg: f64 = dense[actor].iter().map(|&v| v as f64).sum();
            let recip: f64 = (0..9)
                .map(|j| (dense[actor][j] * dense[j][actor]) as f64)
                .sum();
            let indeg_pop: f64 = (0..9)
                .filter(|&j| dense[actor][j] == 1)
                .map(|j| ((0..9).map(|i| dense[i][j] as usize).sum::<usize>() as f64).sqrt())
                .sum();
            assert_eq!(
                actor_statistic(&SaomEffect::Outdegree, actor, &net, &cov).unwrap(),
                outdeg
            );
            assert_eq!(
                actor_statistic(&SaomEffect::Reciprocity, actor, &net, &cov).unwrap(),
                recip
            );
            assert!(
                (actor_statistic(&SaomEffect::IndegreePopularitySqrt, actor, &net, &cov).unwrap()
                    - indeg_pop)
                    .abs()
                    < 1e-12
            );
            let v = cov.numeric("v").unwrap();
            let ego = outdeg * v[actor];
            assert!(
                (actor_statistic(&SaomEffect::CovariateEgo("v".into()), actor, &net, &cov)
                    .unwrap()
                    - ego)
                    .abs()
                    < 1e-12
            );
            let activity = outdeg.powf(1.5);
            assert!(
                (actor_statistic(&SaomEffect::OutdegreeActivitySqrt, actor, &net, &cov).unwrap()
                    - activity)
                    .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn simulate_zero_rate_returns_start() {
        let net = random_net(10, 4);
        let cov = Covariates::new();
        let model = SaomModel::new(1e-9, vec![SaomEffect::Outdegree], vec![0.0]).unwrap();
        let end = simulate_period(&model, &net, &cov, 1).unwrap();
        assert_eq!(end, net);
    }

    #[test]
    fn simulate_is_reproducible() {
        let net = random_net(12, 5);
        let cov = Covariates::new();
        let model = base_model(
            vec![SaomEffect::Outdegree, SaomEffect::Reciprocity],
            vec![-1.0, 1.0],
        );
        let a = simulate_period(&model, &net, &cov, 99).unwrap();
        let b = simulate_period(&model, &net, &cov, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_period(&model, &net, &cov, 100).unwrap();
        assert!(a != c || a.edge_count() == c.edge_count());
    }

    #[test]
    fn zero_beta_drifts_toward_half_density() {
        let start = Network::empty(12);
        let cov = Covariates::new();
        // pure random toggles: stationary density is 1/2
        let model = SaomModel::new(40.0, vec![SaomEffect::Outdegree], vec![0.0]).unwrap();
        let mut mean = 0.0;
        for seed in 0..20 {
            let end = simulate_period(&model, &start, &cov, seed).unwrap();
            mean += end.density();
        }
        mean /= 20.0;
        assert!((mean - 0.5).abs() < 0.08, "density {mean}");
    }

    #[test]
    fn reciprocity_effect_builds_mutual_dyads() {
        let start = random_net(14, 6);
        let cov = Covariates::new();
        let with = SaomModel::new(
            8.0,
            vec![SaomEffect::Outdegree, SaomEffect::Reciprocity],
            vec![-1.0, 2.5],
        )
        .unwrap();
        let without = SaomModel::new(
            8.0,
            vec![SaomEffect::Outdegree, SaomEffect::Reciprocity],
            vec![-1.0, 0.0],
        )
        .unwrap();
        let mutual_count = |x: &Network| {
            let mut m = 0;
            for i in 0..x.n() {
                for j in x.out_neighbors(i) {
                    if j > i && x.get(j, i) {
                        m += 1;
                    }
                }
            }
            m
        };
        let mut with_mean = 0.0;
        let mut without_mean = 0.0;
        for seed in 0..15 {
            with_mean += mutual_count(&simulate_period(&with, &start, &cov, seed).unwrap()) as f64;
            without_mean +=
                mutual_count(&simulate_period(&without, &start, &cov, seed).unwrap()) as f64;
        }
        assert!(
            with_mean > without_mean,
            "reciprocity {with_mean} vs baseline {without_mean}"
        );
    }

    #[test]
    fn choice_probabilities_shift_invariant() {
        // adding a constant to all objective values leaves the logit
        // distribution unchanged; spot-check via paired simulation
        let start = random_net(10, 8);
        let mut cov = Covariates::new();
        cov.insert_numeric("one", vec![1.0; 10]);
        let base = base_model(vec![SaomEffect::Outdegree], vec![-0.8]);
        // outdegree + constant-per-tie alter covariate shifts candidate
        // objectives relative to "keep", so use ego covariate of a constant:
        // outdeg_i * 1 differs per candidate too. A true constant shift is
        // adding c to every option, which the softmax cancels; verify the
        // softmax directly instead.
        let keep = 1.3;
        let opts = [keep, 0.2, -0.7, 2.0];
        let soft = |vals: &[f64]| {
            let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = vals.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let p1 = soft(&opts);
        let shifted: Vec<f64> = opts.iter().map(|v| v + 17.0).collect();
        let p2 = soft(&shifted);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let _ = (start, base);
    }

    #[test]
    fn identical_waves_drive_rate_to_floor() {
        let wave = random_net(10, 9);
        let panel = Panel::new(vec![wave.clone(), wave], Covariates::new()).unwrap();
        let cfg = MomConfig {
            phase1_reps: 20,
            phase2_subphases: 3,
            phase2_base_iterations: 20,
            phase3_reps: 50,
            seed: 4,
            ..MomConfig::default()
        };
        let est = estimate_mom(
            &[SaomEffect::Outdegree, SaomEffect::Reciprocity],
            &panel,
            &cfg,
        )
        .unwrap();
        assert!(
            est.theta_hat[0] < 0.3,
            "rate should collapse toward zero: {:?}",
            est.theta_hat
        );
        assert!(est.separation || !est.converged);
    }
}
