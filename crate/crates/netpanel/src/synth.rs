//! Synthetic panel generation: documented generating coefficients for
//! recovery tests and the flaw-replication workflow when no external data
//! set is supplied.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::panel::{derive_attribute_from_network, Covariates, DyadCovariate, Panel, WaveBinding};
use crate::terms::{ModelSpec, TermKind, TermSpec};
use crate::tergm::{sample, McmcConfig, TergmModel};

/// Default generating coefficients for the built-in synthetic panel:
/// edges -2.0, reciprocity 1.0, dyadic stability 1.0.
pub const DEFAULT_THETA_STAR: [f64; 3] = [-2.0, 1.0, 1.0];

pub fn default_generator_spec() -> ModelSpec {
    ModelSpec {
        derived: vec![],
        terms: vec![
            TermSpec::structural(TermKind::Edges),
            TermSpec::structural(TermKind::Mutual),
            TermSpec::memory_stability(),
        ],
    }
}

pub fn bernoulli_network(n: usize, density: f64, rng: &mut impl Rng) -> Network {
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                net.set(i, j, true);
            }
        }
    }
    net
}

/// Random exogenous covariates shaped like the classroom data the flawed
/// and corrected fixtures reference: a binary `sex` factor and a
/// block-structured `primary` dyadic covariate.
pub fn synthetic_covariates(n: usize, seed: u64) -> Covariates {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov = Covariates::new();
    let sex: Vec<String> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { "boy" } else { "girl" }.to_string())
        .collect();
    let class: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let mut primary = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && class[i] == class[j] {
                primary[i * n + j] = 1.0;
            }
        }
    }
    cov.insert_factor("sex", sex);
    cov.insert_dyadic("primary", DyadCovariate::new(n, primary).unwrap());
    cov
}

/// Generate a panel by sampling each wave from the TERGM conditional on the
/// previous one. The generator spec must not contain dependent-wave
/// bindings (nothing to condition on while generating).
pub fn generate_tergm_panel(
    spec: &ModelSpec,
    theta: &[f64],
    n: usize,
    n_waves: usize,
    init_density: f64,
    seed: u64,
) -> Result<Panel> {
    generate_tergm_panel_with_covariates(
        spec,
        theta,
        n,
        n_waves,
        init_density,
        seed,
        Covariates::new(),
    )
}

pub fn generate_tergm_panel_with_covariates(
    spec: &ModelSpec,
    theta: &[f64],
    n: usize,
    n_waves: usize,
    init_density: f64,
    seed: u64,
    base_covariates: Covariates,
) -> Result<Panel> {
    if n_waves < 2 {
        return Err(Error::TooFewWaves(n_waves));
    }
    for d in &spec.derived {
        if d.source_wave == WaveBinding::Dependent {
            return Err(Error::SpecParse(format!(
                "generator cannot bind attribute `{}` to the dependent wave",
                d.name
            )));
        }
    }
    let model = TergmModel::new(spec.terms.clone(), theta.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = vec![bernoulli_network(n, init_density, &mut rng)];
    let proposals = (40 * n * (n - 1)).max(20_000);
    for t in 1..n_waves {
        let mut covariates = base_covariates.clone();
        for d in &spec.derived {
            let wave = match d.source_wave {
                WaveBinding::Previous => t - 1,
                WaveBinding::Wave(w) => w.min(t - 1),
                WaveBinding::Dependent => unreachable!(),
            };
            let attr = derive_attribute_from_network(&waves[wave], wave, d.transform, &d.name);
            covariates.insert_derived(&attr);
        }
        let cfg = McmcConfig {
            burn_in: proposals,
            thinning: 1,
            sample_size: 1,
            seed: rng.gen(),
        };
        let previous = waves[t - 1].clone();
        let next = sample(&model, &previous, &covariates, &cfg, &previous)?
            .pop()
            .expect("one retained draw");
        waves.push(next);
    }
    Panel::new(waves, base_covariates)
}
