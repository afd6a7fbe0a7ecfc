//! Global statistic values and change statistics for every term kind.
//!
//! Change statistics are the workhorse of the sampler and the
//! pseudo-likelihood: `delta = s(x with tie) - s(x without tie)` holding all
//! other ties fixed. Each kind gets a local evaluation; the test suite pins
//! every one of them against the brute-force difference of global values.

use crate::error::{Error, Result};
use crate::network::Network;
use crate::panel::Covariates;
use crate::terms::{TermKind, TermSpec};

/// Inputs for evaluating statistics on one panel transition (or a sampler
/// state standing in for the current wave).
#[derive(Clone, Copy)]
pub struct StatisticContext<'a> {
    pub current: &'a Network,
    pub previous: &'a Network,
    pub covariates: &'a Covariates,
}

impl<'a> StatisticContext<'a> {
    pub fn new(current: &'a Network, previous: &'a Network, covariates: &'a Covariates) -> Self {
        StatisticContext {
            current,
            previous,
            covariates,
        }
    }
}

/// Geometric weight e^a * (1 - (1 - e^-a)^k) shared by the gwesp and
/// gw-degree families.
#[inline]
fn gw_weight(decay: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    decay.exp() * (1.0 - (1.0 - (-decay).exp()).powi(k as i32))
}

#[inline]
fn gw_weight_step(decay: f64, k: usize) -> f64 {
    gw_weight(decay, k + 1) - gw_weight(decay, k)
}

/// Indicator vector for a factor covariate: true where the level differs
/// from the reference (lexicographically smallest) level.
fn factor_indicator(values: &[String]) -> Vec<bool> {
    match Covariates::reference_level(values) {
        Some(reference) => values.iter().map(|v| v != reference).collect(),
        None => Vec::new(),
    }
}

/// The scalar value of one term on the given context.
pub fn statistic_value(term: &TermSpec, ctx: &StatisticContext) -> Result<f64> {
    term.validate()?;
    let x = ctx.current;
    let n = x.n();
    let value = match term.kind {
        TermKind::Edges => x.edge_count() as f64,
        TermKind::Mutual => {
            let mut m = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    if j > i && x.get(j, i) {
                        m += 1;
                    }
                }
            }
            m as f64
        }
        TermKind::Ttriple => {
            let mut t = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    t += x.common_receivers(i, j);
                }
            }
            t as f64
        }
        TermKind::Ctriple => {
            let mut c = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    c += x.itp_count(i, j);
                }
            }
            // every cyclic triple is hit once per rotation
            c as f64 / 3.0
        }
        TermKind::TransitiveTies => {
            let mut t = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    if x.otp_count(i, j) > 0 {
                        t += 1;
                    }
                }
            }
            t as f64
        }
        TermKind::GwespOtp | TermKind::GwespItp => {
            let decay = term.decay();
            let mut total = 0.0;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    let sp = match term.kind {
                        TermKind::GwespOtp => x.otp_count(i, j),
                        _ => x.itp_count(i, j),
                    };
                    total += gw_weight(decay, sp);
                }
            }
            total
        }
        TermKind::GwIndegree => {
            let decay = term.decay();
            (0..n).map(|j| gw_weight(decay, x.indegree(j))).sum()
        }
        TermKind::GwOutdegree => {
            let decay = term.decay();
            (0..n).map(|i| gw_weight(decay, x.outdegree(i))).sum()
        }
        TermKind::Twopath => {
            let degree_prod: usize = (0..n).map(|h| x.indegree(h) * x.outdegree(h)).sum();
            let mut closed = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    if x.get(j, i) {
                        closed += 1;
                    }
                }
            }
            (degree_prod - closed) as f64
        }
        TermKind::NodeIcov => {
            let attr = term.attr.as_ref().expect("validated");
            let v = ctx.covariates.numeric(attr)?;
            check_len(attr, v.len(), n)?;
            (0..n).map(|j| x.indegree(j) as f64 * v[j]).sum()
        }
        TermKind::NodeOcov => {
            let attr = term.attr.as_ref().expect("validated");
            let v = ctx.covariates.numeric(attr)?;
            check_len(attr, v.len(), n)?;
            (0..n).map(|i| x.outdegree(i) as f64 * v[i]).sum()
        }
        TermKind::NodeIfactor | TermKind::NodeOfactor => {
            let attr = term.attr.as_ref().expect("validated");
            let f = ctx.covariates.factor(attr)?;
            check_len(attr, f.len(), n)?;
            let ind = factor_indicator(f);
            match term.kind {
                TermKind::NodeIfactor => (0..n)
                    .filter(|&j| ind[j])
                    .map(|j| x.indegree(j) as f64)
                    .sum(),
                _ => (0..n)
                    .filter(|&i| ind[i])
                    .map(|i| x.outdegree(i) as f64)
                    .sum(),
            }
        }
        TermKind::NodeMatch => {
            let attr = term.attr.as_ref().expect("validated");
            let f = ctx.covariates.factor(attr)?;
            check_len(attr, f.len(), n)?;
            let mut m = 0usize;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    if f[i] == f[j] {
                        m += 1;
                    }
                }
            }
            m as f64
        }
        TermKind::EdgeCov => {
            let attr = term.attr.as_ref().expect("validated");
            let w = ctx.covariates.dyadic(attr)?;
            check_len(attr, w.n, n)?;
            let mut total = 0.0;
            for i in 0..n {
                for j in x.out_neighbors(i) {
                    total += w.get(i, j);
                }
            }
            total
        }
        TermKind::MemoryStability => {
            let ham = x.hamming(ctx.previous)? as f64;
            (n * (n - 1)) as f64 - ham
        }
    };
    Ok(value)
}

fn check_len(name: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::CovariateLength {
            name: name.to_string(),
            got,
            expected,
        });
    }
    Ok(())
}

/// Change statistic for dyad (i, j): value with the tie minus value without,
/// all other ties fixed at `ctx.current`.
pub fn change_statistic(term: &TermSpec, ctx: &StatisticContext, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::DiagonalDyad { i, j });
    }
    let n = ctx.current.n();
    if i >= n || j >= n {
        return Err(Error::NodeOutOfRange { node: i.max(j), n });
    }
    if ctx.current.get(i, j) {
        let mut cleared = ctx.current.clone();
        cleared.set(i, j, false);
        change_statistic_cleared(term, &cleared, ctx.previous, ctx.covariates, i, j)
    } else {
        change_statistic_cleared(term, ctx.current, ctx.previous, ctx.covariates, i, j)
    }
}

/// Change statistic assuming `current` already has x_ij = 0. This is the
/// sampler's hot path: the caller owns the state and keeps the proposal
/// dyad cleared while evaluating.
pub fn change_statistic_cleared(
    term: &TermSpec,
    current: &Network,
    previous: &Network,
    covariates: &Covariates,
    i: usize,
    j: usize,
) -> Result<f64> {
    debug_assert!(!current.get(i, j));
    let x = current;
    let n = x.n();
    let delta = match term.kind {
        TermKind::Edges => 1.0,
        TermKind::Mutual => x.get(j, i) as u8 as f64,
        TermKind::Ttriple => {
            (x.common_receivers(i, j) + x.common_senders(i, j) + x.otp_count(i, j)) as f64
        }
        TermKind::Ctriple => x.itp_count(i, j) as f64,
        TermKind::TransitiveTies => {
            let mut d = (x.otp_count(i, j) > 0) as u8 as f64;
            // existing ties i->k gain their first closure through i->j->k
            for k in x.out_neighbors(i) {
                if k != j && x.get(j, k) && x.otp_count(i, k) == 0 {
                    d += 1.0;
                }
            }
            // existing ties k->j gain their first closure through k->i->j
            for k in x.in_neighbors(j) {
                if k != i && x.get(k, i) && x.otp_count(k, j) == 0 {
                    d += 1.0;
                }
            }
            d
        }
        TermKind::GwespOtp => {
            let decay = term.decay();
            let mut d = gw_weight(decay, x.otp_count(i, j));
            for k in x.out_neighbors(i) {
                if k != j && x.get(j, k) {
                    d += gw_weight_step(decay, x.otp_count(i, k));
                }
            }
            for k in x.in_neighbors(j) {
                if k != i && x.get(k, i) {
                    d += gw_weight_step(decay, x.otp_count(k, j));
                }
            }
            d
        }
        TermKind::GwespItp => {
            let decay = term.decay();
            let mut d = gw_weight(decay, x.itp_count(i, j));
            // ties k->i whose pair gains partner j via i->j, j->k... partner is j
            // itp partners of edge (k, i) are h with i->h and h->k; h=j needs j->k
            for k in x.in_neighbors(i) {
                if k != j && x.get(j, k) {
                    d += gw_weight_step(decay, x.itp_count(k, i));
                }
            }
            // ties j->k whose pair gains partner i: partners of (j, k) are h with
            // k->h and h->j; h=i needs k->i
            for k in x.out_neighbors(j) {
                if k != i && x.get(k, i) {
                    d += gw_weight_step(decay, x.itp_count(j, k));
                }
            }
            d
        }
        TermKind::GwIndegree => gw_weight_step(term.decay(), x.indegree(j)),
        TermKind::GwOutdegree => gw_weight_step(term.decay(), x.outdegree(i)),
        TermKind::Twopath => {
            (x.indegree(i) + x.outdegree(j)) as f64 - 2.0 * (x.get(j, i) as u8 as f64)
        }
        TermKind::NodeIcov => {
            let attr = term.attr.as_ref().ok_or_else(|| Error::MissingAttr(term.kind.name().into()))?;
            let v = covariates.numeric(attr)?;
            check_len(attr, v.len(), n)?;
            v[j]
        }
        TermKind::NodeOcov => {
            let attr = term.attr.as_ref().ok_or_else(|| Error::MissingAttr(term.kind.name().into()))?;
            let v = covariates.numeric(attr)?;
            check_len(attr, v.len(), n)?;
            v[i]
        }
        TermKind::NodeIfactor | TermKind::NodeOfactor => {
            let attr = term.attr.as_ref().ok_or_else(|| Error::MissingAttr(term.kind.name().into()))?;
            let f = covariates.factor(attr)?;
            check_len(attr, f.len(), n)?;
            let reference = Covariates::reference_level(f).expect("non-empty factor");
            let node = if term.kind == TermKind::NodeIfactor { j } else { i };
            (&f[node] != reference) as u8 as f64
        }
        TermKind::NodeMatch => {
            let attr = term.attr.as_ref().ok_or_else(|| Error::MissingAttr(term.kind.name().into()))?;
            let f = covariates.factor(attr)?;
            check_len(attr, f.len(), n)?;
            (f[i] == f[j]) as u8 as f64
        }
        TermKind::EdgeCov => {
            let attr = term.attr.as_ref().ok_or_else(|| Error::MissingAttr(term.kind.name().into()))?;
            let w = covariates.dyadic(attr)?;
            check_len(attr, w.n, n)?;
            w.get(i, j)
        }
        TermKind::MemoryStability => {
            if previous.get(i, j) {
                1.0
            } else {
                -1.0
            }
        }
    };
    Ok(delta)
}

/// Evaluate a term list in order; element order matches term order.
pub fn statistic_vector(terms: &[TermSpec], ctx: &StatisticContext) -> Result<Vec<f64>> {
    terms.iter().map(|t| statistic_value(t, ctx)).collect()
}

/// Change-statistic vector for one dyad, same ordering as `statistic_vector`.
pub fn change_vector(terms: &[TermSpec], ctx: &StatisticContext, i: usize, j: usize) -> Result<Vec<f64>> {
    terms.iter().map(|t| change_statistic(t, ctx, i, j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::random_net;
    use crate::terms::Binding;

    fn test_covariates(n: usize, seed: u64) -> Covariates {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut cov = Covariates::new();
        cov.insert_numeric("b", (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
        cov.insert_factor(
            "sex",
            (0..n)
                .map(|_| if rng.gen_bool(0.5) { "boy" } else { "girl" }.to_string())
                .collect(),
        );
        cov.insert_dyadic(
            "w",
            crate::panel::DyadCovariate::new(
                n,
                (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap(),
        );
        cov
    }

    fn all_terms() -> Vec<TermSpec> {
        let mut terms: Vec<TermSpec> = TermKind::ALL
            .iter()
            .filter(|k| k.is_structural())
            .map(|&k| TermSpec::structural(k))
            .collect();
        terms.push(TermSpec::covariate(TermKind::NodeIcov, "b", Binding::Lagged));
        terms.push(TermSpec::covariate(TermKind::NodeOcov, "b", Binding::Lagged));
        terms.push(TermSpec::covariate(TermKind::NodeIfactor, "sex", Binding::Lagged));
        terms.push(TermSpec::covariate(TermKind::NodeOfactor, "sex", Binding::Lagged));
        terms.push(TermSpec::covariate(TermKind::NodeMatch, "sex", Binding::Lagged));
        terms.push(TermSpec::covariate(TermKind::EdgeCov, "w", Binding::Lagged));
        terms.push(TermSpec::memory_stability());
        assert_eq!(terms.len(), 17);
        terms
    }

    #[test]
    fn memory_stability_identical_waves() {
        let net = random_net(26, 3);
        let cov = Covariates::new();
        let ctx = StatisticContext::new(&net, &net, &cov);
        let v = statistic_value(&TermSpec::memory_stability(), &ctx).unwrap();
        assert_eq!(v, 650.0);
    }

    #[test]
    fn memory_stability_complement_is_zero() {
        let net = random_net(9, 4);
        let comp = net.complement();
        let cov = Covariates::new();
        let ctx = StatisticContext::new(&net, &comp, &cov);
        let v = statistic_value(&TermSpec::memory_stability(), &ctx).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn gwesp_single_shared_partner_is_one() {
        // {0->1, 0->2, 2->1}: one edge with exactly one OTP partner
        let net = Network::from_edges(3, &[(0, 1), (0, 2), (2, 1)]).unwrap();
        let cov = Covariates::new();
        let prev = Network::empty(3);
        let ctx = StatisticContext::new(&net, &prev, &cov);
        for decay in [0.1, 0.693, 2.0] {
            let term = TermSpec {
                decay: Some(decay),
                ..TermSpec::structural(TermKind::GwespOtp)
            };
            let v = statistic_value(&term, &ctx).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "decay {decay}: {v}");
        }
    }

    #[test]
    fn node_icov_hand_example() {
        // node 0 has indegree 3, b = (2, 0, 0, 0)
        let net = Network::from_edges(4, &[(1, 0), (2, 0), (3, 0)]).unwrap();
        let mut cov = Covariates::new();
        cov.insert_numeric("b", vec![2.0, 0.0, 0.0, 0.0]);
        let prev = Network::empty(4);
        let ctx = StatisticContext::new(&net, &prev, &cov);
        let term = TermSpec::covariate(TermKind::NodeIcov, "b", Binding::Lagged);
        assert_eq!(statistic_value(&term, &ctx).unwrap(), 6.0);
    }

    #[test]
    fn triadic_terms_match_triple_loop() {
        for seed in 0..6u64 {
            let net = random_net(7, seed);
            let dense = net.to_dense();
            let cov = Covariates::new();
            let prev = Network::empty(7);
            let ctx = StatisticContext::new(&net, &prev, &cov);

            let mut ttriple = 0.0;
            let mut cyclic_ordered = 0.0;
            let mut twopath = 0.0;
            for i in 0..7 {
                for j in 0..7 {
                    for h in 0..7 {
                        if i == j || j == h || i == h {
                            continue;
                        }
                        ttriple += (dense[i][j] * dense[j][h] * dense[i][h]) as f64;
                        cyclic_ordered += (dense[i][j] * dense[j][h] * dense[h][i]) as f64;
                    }
                    if i != j {
                        for h in 0..7 {
                            if h != i && h != j {
                                twopath += (dense[i][h] * dense[h][j]) as f64;
                            }
                        }
                    }
                }
            }
            let mut transitive = 0.0;
            for i in 0..7 {
                for j in 0..7 {
                    if i != j && dense[i][j] == 1 {
                        let closed = (0..7)
                            .any(|h| h != i && h != j && dense[i][h] == 1 && dense[h][j] == 1);
                        if closed {
                            transitive += 1.0;
                        }
                    }
                }
            }

            let get = |k| statistic_value(&TermSpec::structural(k), &ctx).unwrap();
            assert_eq!(get(TermKind::Ttriple), ttriple, "seed {seed}");
            assert_eq!(get(TermKind::Ctriple), cyclic_ordered / 3.0, "seed {seed}");
            assert_eq!(get(TermKind::Twopath), twopath, "seed {seed}");
            assert_eq!(get(TermKind::TransitiveTies), transitive, "seed {seed}");
        }
    }

    #[test]
    fn change_statistics_match_global_difference() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let terms = all_terms();
        for case in 0..40 {
            let n = rng.gen_range(3..=8);
            let net = random_net(n, rng.gen());
            let prev = random_net(n, rng.gen());
            let cov = test_covariates(n, rng.gen());
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let ctx = StatisticContext::new(&net, &prev, &cov);
            for term in &terms {
                let delta = change_statistic(term, &ctx, i, j).unwrap();
                let mut with = net.clone();
                with.set(i, j, true);
                let mut without = net.clone();
                without.set(i, j, false);
                let s_with =
                    statistic_value(term, &StatisticContext::new(&with, &prev, &cov)).unwrap();
                let s_without =
                    statistic_value(term, &StatisticContext::new(&without, &prev, &cov)).unwrap();
                assert!(
                    (delta - (s_with - s_without)).abs() < 1e-10,
                    "case {case} term {} dyad ({i},{j}): {delta} vs {}",
                    term.label(),
                    s_with - s_without
                );
            }
        }
    }

    #[test]
    fn change_statistic_rejects_diagonal() {
        let net = random_net(4, 1);
        let cov = Covariates::new();
        let ctx = StatisticContext::new(&net, &net, &cov);
        let err = change_statistic(&TermSpec::structural(TermKind::Edges), &ctx, 2, 2).unwrap_err();
        assert!(matches!(err, Error::DiagonalDyad { .. }));
    }

    #[test]
    fn gwesp_at_zero_decay_equals_transitive_ties() {
        for seed in 10..15 {
            let net = random_net(8, seed);
            let cov = Covariates::new();
            let prev = Network::empty(8);
            let ctx = StatisticContext::new(&net, &prev, &cov);
            let gwesp = statistic_value(
                &TermSpec {
                    decay: Some(0.0),
                    ..TermSpec::structural(TermKind::GwespOtp)
                },
                &ctx,
            )
            .unwrap();
            let tt =
                statistic_value(&TermSpec::structural(TermKind::TransitiveTies), &ctx).unwrap();
            assert!((gwesp - tt).abs() < 1e-12);
        }
    }

    #[test]
    fn node_icov_on_own_sqrt_indegrees_equals_endogenous_form() {
        // binding b = sqrt(indegrees of current) makes node_icov identical to
        // sum_j indeg_j * sqrt(indeg_j)
        let net = random_net(12, 77);
        let mut cov = Covariates::new();
        let b: Vec<f64> = crate::network::degrees(&net, crate::network::DegreeMode::In)
            .into_iter()
            .map(|d| (d as f64).sqrt())
            .collect();
        cov.insert_numeric("idegsqrt", b.clone());
        let prev = Network::empty(12);
        let ctx = StatisticContext::new(&net, &prev, &cov);
        let term = TermSpec::covariate(TermKind::NodeIcov, "idegsqrt", Binding::Contemporaneous);
        let v = statistic_value(&term, &ctx).unwrap();
        let endo: f64 = (0..12)
            .map(|j| net.indegree(j) as f64 * (net.indegree(j) as f64).sqrt())
            .sum();
        assert!((v - endo).abs() < 1e-12);
    }

    #[test]
    fn statistics_invariant_under_relabeling() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150);
        let n = 7;
        let net = random_net(n, 21);
        let prev = random_net(n, 22);
        let cov = test_covariates(n, 23);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);

        let relabeled_net = net.relabel(&perm);
        let relabeled_prev = prev.relabel(&perm);
        let mut relabeled_cov = Covariates::new();
        let mut b = vec![0.0; n];
        let mut sex = vec![String::new(); n];
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            b[perm[i]] = cov.numeric("b").unwrap()[i];
            sex[perm[i]] = cov.factor("sex").unwrap()[i].clone();
            for j in 0..n {
                w[perm[i] * n + perm[j]] = cov.dyadic("w").unwrap().get(i, j);
            }
        }
        relabeled_cov.insert_numeric("b", b);
        relabeled_cov.insert_factor("sex", sex);
        relabeled_cov.insert_dyadic("w", crate::panel::DyadCovariate::new(n, w).unwrap());

        let ctx = StatisticContext::new(&net, &prev, &cov);
        let rctx = StatisticContext::new(&relabeled_net, &relabeled_prev, &relabeled_cov);
        for term in all_terms() {
            let a = statistic_value(&term, &ctx).unwrap();
            let b = statistic_value(&term, &rctx).unwrap();
            assert!((a - b).abs() < 1e-9, "term {} not invariant", term.label());
        }
    }

    #[test]
    fn statistic_vector_trivial_examples() {
        let empty = Network::empty(4);
        let cov = Covariates::new();
        let ctx = StatisticContext::new(&empty, &empty, &cov);
        let v = statistic_vector(
            &[
                TermSpec::structural(TermKind::Edges),
                TermSpec::structural(TermKind::Mutual),
            ],
            &ctx,
        )
        .unwrap();
        assert_eq!(v, vec![0.0, 0.0]);

        let complete = Network::complete(3);
        let ctx = StatisticContext::new(&complete, &complete, &cov);
        let v = statistic_vector(
            &[
                TermSpec::structural(TermKind::Edges),
                TermSpec::memory_stability(),
            ],
            &ctx,
        )
        .unwrap();
        assert_eq!(v, vec![6.0, 6.0]);
    }
}
