//! Subcommand implementations.

use std::path::Path;

use netpanel::{
    classify, corrected_spec, default_generator_spec, estimate_mom, flawed_spec,
    generate_tergm_panel_with_covariates, holdout_split, perturbation_probe, predict_wave_saom,
    predict_wave_tergm, score, synthetic_covariates, AuditReport, Covariates, Error, GofReport,
    McmcConfig, ModelSpec, MomConfig, Network, Panel, ParameterEstimate, ProbeConfig, Result,
    SaomEffect, SaomModel, Severity, TermKind, TergmModel, DEFAULT_THETA_STAR,
};
use serde::Serialize;

use crate::report::{
    estimate_rows, load_params, paths_to_strings, write_gof_csvs, write_json, write_text,
    ConfigEcho, EstimatesFile,
};
use crate::{
    data, AuditArgs, EstimateArgs, GofArgs, ReplicateFlawArgs, SimulateArgs, EXIT_LEAKAGE,
    EXIT_NONCONVERGENCE, EXIT_OK,
};

fn parse_spec(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::DataFile {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    ModelSpec::parse(&text)
}

/// Map TERGM-style terms onto actor-model effects. The memory term is
/// dropped (the actor process already conditions on the prior wave); terms
/// with no actor counterpart are rejected.
fn saom_effects(spec: &ModelSpec) -> Result<Vec<SaomEffect>> {
    let mut effects = Vec::new();
    for term in &spec.terms {
        let attr = || term.attr.clone().unwrap_or_default();
        let eff = match term.kind {
            TermKind::Edges => SaomEffect::Outdegree,
            TermKind::Mutual => SaomEffect::Reciprocity,
            TermKind::TransitiveTies => SaomEffect::TransitiveTies,
            TermKind::GwespOtp => SaomEffect::GwespTransitive,
            TermKind::GwespItp => SaomEffect::GwespCyclic,
            TermKind::GwIndegree => SaomEffect::IndegreePopularitySqrt,
            TermKind::GwOutdegree => SaomEffect::OutdegreeActivitySqrt,
            TermKind::Twopath => SaomEffect::OutdegreePopularity,
            TermKind::NodeIcov => SaomEffect::CovariateAlter(attr()),
            TermKind::NodeOcov => SaomEffect::CovariateEgo(attr()),
            TermKind::NodeMatch => SaomEffect::CovariateSame(attr()),
            TermKind::MemoryStability => continue,
            other => {
                return Err(Error::SpecParse(format!(
                    "term `{}` has no actor-model counterpart",
                    other.name()
                )))
            }
        };
        effects.push(eff);
    }
    Ok(effects)
}

fn tergm_labels(spec: &ModelSpec) -> Vec<String> {
    spec.terms.iter().map(|t| t.label()).collect()
}

fn saom_labels(effects: &[SaomEffect]) -> Vec<String> {
    std::iter::once("rate".to_string())
        .chain(effects.iter().map(|e| e.label()))
        .collect()
}

fn print_estimates(labels: &[String], est: &ParameterEstimate) {
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(4).max(4);
    println!("{:width$}  {:>10}  {:>10}  {:>8}", "term", "est", "se", "t-ratio");
    for (i, label) in labels.iter().enumerate() {
        println!(
            "{:width$}  {:>10.4}  {:>10.4}  {:>8.4}",
            label, est.theta_hat[i], est.standard_errors[i], est.convergence_tratios[i]
        );
    }
    if !est.converged {
        println!("warning: estimation did not converge");
    }
    if est.degenerate {
        println!("warning: sampler visited near-empty/near-complete networks");
    }
    if est.separation {
        println!("warning: separation detected; estimates are boundary values");
    }
}

fn fit(
    spec: &ModelSpec,
    panel: &Panel,
    model: &str,
    seed: u64,
    nsim: usize,
    burnin: usize,
    thin: usize,
) -> Result<(Vec<String>, ParameterEstimate)> {
    if model == "saom" {
        let effects = saom_effects(spec)?;
        let cfg = MomConfig {
            seed,
            ..MomConfig::default()
        };
        let est = estimate_mom(&effects, panel, &cfg)?;
        Ok((saom_labels(&effects), est))
    } else {
        let cfg = McmcConfig {
            burn_in: burnin,
            thinning: thin,
            sample_size: nsim,
            seed,
        };
        let est = netpanel::estimate(spec, panel, &cfg)?;
        Ok((tergm_labels(spec), est))
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<i32> {
    let panel = data::load_panel(&args.data.waves, &args.data.covariates)?;
    let spec = parse_spec(&args.spec)?;
    let config = ConfigEcho {
        subcommand: "estimate",
        waves: paths_to_strings(&args.data.waves),
        covariates: paths_to_strings(&args.data.covariates),
        spec: Some(args.spec.display().to_string()),
        model: Some(args.model.clone()),
        seed: args.seed,
        nsim: args.nsim,
        burnin: args.mcmc.burnin,
        thin: args.mcmc.thin,
        allow_leakage: false,
    };
    let (labels, est) = fit(
        &spec,
        &panel,
        &args.model,
        args.seed,
        args.nsim,
        args.mcmc.burnin,
        args.mcmc.thin,
    )?;
    let file = EstimatesFile {
        config_hash: config.hash(),
        seed: args.seed,
        model: args.model.clone(),
        converged: est.converged,
        degenerate: est.degenerate,
        separation: est.separation,
        iterations: est.iterations,
        estimates: estimate_rows(&labels, &est),
    };
    let path = write_json(&args.out, "estimates.json", &file)?;
    print_estimates(&labels, &est);
    println!("wrote {}", path.display());
    Ok(if est.converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

/// Build the covariate store for simulating the wave after the supplied
/// ones, materializing derived attributes at their resolved waves.
fn forward_covariates(
    spec: &ModelSpec,
    waves: &[Network],
    mut cov: Covariates,
) -> Result<Covariates> {
    let next = waves.len();
    for d in &spec.derived {
        let wave = d.resolve_wave(next);
        if wave >= waves.len() {
            return Err(Error::Leakage {
                terms: vec![format!("{} (bound to unobserved wave {wave})", d.name)],
            });
        }
        let attr =
            netpanel::panel::derive_attribute_from_network(&waves[wave], wave, d.transform, &d.name);
        cov.insert_derived(&attr);
    }
    Ok(cov)
}

fn theta_from_params(params: &EstimatesFile, spec: &ModelSpec) -> Result<Vec<f64>> {
    if params.estimates.len() != spec.terms.len() {
        return Err(Error::SpecParse(format!(
            "params file has {} coefficients, spec has {} terms",
            params.estimates.len(),
            spec.terms.len()
        )));
    }
    Ok(params.estimates.iter().map(|r| r.est).collect())
}

#[derive(Serialize)]
struct SimulateFile {
    config_hash: String,
    seed: u64,
    nsim: usize,
    files: Vec<String>,
    densities: Vec<f64>,
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let spec = parse_spec(&args.spec)?;
    let mut waves = Vec::new();
    for p in &args.data.waves {
        waves.push(data::load_wave(p)?);
    }
    let n = waves[0].n();
    let mut cov = Covariates::new();
    for p in &args.data.covariates {
        data::load_covariate_file(p, n, &mut cov)?;
    }
    cov.validate_lengths(n)?;
    let cov = forward_covariates(&spec, &waves, cov)?;
    let params = load_params(&args.params)?;
    let theta = theta_from_params(&params, &spec)?;
    let model = TergmModel::new(spec.terms.clone(), theta)?;

    let config = ConfigEcho {
        subcommand: "simulate",
        waves: paths_to_strings(&args.data.waves),
        covariates: paths_to_strings(&args.data.covariates),
        spec: Some(args.spec.display().to_string()),
        model: Some("tergm".into()),
        seed: args.seed,
        nsim: args.nsim,
        burnin: args.mcmc.burnin,
        thin: args.mcmc.thin,
        allow_leakage: false,
    };
    let hash = config.hash();

    let previous = waves.last().expect("at least one wave");
    let cfg = McmcConfig {
        burn_in: args.mcmc.burnin,
        thinning: args.mcmc.thin,
        sample_size: args.nsim,
        seed: args.seed,
    };
    let sims = netpanel::sample(&model, previous, &cov, &cfg, previous)?;

    let mut files = Vec::new();
    let mut densities = Vec::new();
    for (i, sim) in sims.iter().enumerate() {
        let name = format!("sim_{:04}.txt", i + 1);
        let body = format!(
            "# config_hash={hash} seed={} draw={}\n{}",
            args.seed,
            i + 1,
            data::format_wave(sim)
        );
        write_text(&args.out, &name, &body)?;
        files.push(name);
        densities.push(sim.density());
    }
    let meta = SimulateFile {
        config_hash: hash,
        seed: args.seed,
        nsim: args.nsim,
        files,
        densities,
    };
    write_json(&args.out, "simulate.json", &meta)?;
    println!("wrote {} simulated networks to {}", sims.len(), args.out.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GofFile {
    config_hash: String,
    seed: u64,
    model: String,
    converged: bool,
    estimates: Vec<crate::report::EstimateRow>,
    report: GofReport,
}

fn run_gof(
    panel: &Panel,
    spec: &ModelSpec,
    model: &str,
    seed: u64,
    nsim: usize,
    burnin: usize,
    thin: usize,
    allow_leakage: bool,
) -> Result<(Vec<String>, ParameterEstimate, GofReport)> {
    if panel.n_waves() < 3 {
        return Err(Error::TooFewWaves(panel.n_waves()));
    }
    let test_wave = panel.n_waves() - 1;
    let split = holdout_split(panel, test_wave, spec, allow_leakage)?;
    // `nsim` counts held-out-wave predictions; estimation needs a healthy
    // simulated sample regardless
    let fit_sample = nsim.max(500);
    let (labels, est) = fit(spec, &split.training, model, seed, fit_sample, burnin, thin)?;
    let cov = panel.transition_covariates(test_wave, &spec.derived)?;
    let last_train = split.training.waves().last().expect("training waves");
    let sims = if model == "saom" {
        let effects = saom_effects(spec)?;
        let saom = SaomModel::new(
            est.theta_hat[0].max(0.01),
            effects,
            est.theta_hat[1..].to_vec(),
        )?;
        predict_wave_saom(&saom, last_train, &cov, nsim, seed.wrapping_add(0x51))?
    } else {
        let tergm = TergmModel::new(spec.terms.clone(), est.theta_hat.clone())?;
        let cfg = McmcConfig {
            burn_in: burnin,
            thinning: thin,
            sample_size: nsim,
            seed: seed.wrapping_add(0x51),
        };
        predict_wave_tergm(&tergm, last_train, &cov, nsim, &cfg)?
    };
    let mut report = score(&sims, &split.test)?;
    report.leakage_warnings = split.leakage_warnings;
    Ok((labels, est, report))
}

pub fn gof(args: &GofArgs) -> Result<i32> {
    let panel = data::load_panel(&args.data.waves, &args.data.covariates)?;
    let spec = parse_spec(&args.spec)?;
    let config = ConfigEcho {
        subcommand: "gof",
        waves: paths_to_strings(&args.data.waves),
        covariates: paths_to_strings(&args.data.covariates),
        spec: Some(args.spec.display().to_string()),
        model: Some(args.model.clone()),
        seed: args.seed,
        nsim: args.nsim,
        burnin: args.mcmc.burnin,
        thin: args.mcmc.thin,
        allow_leakage: args.allow_leakage,
    };
    let (labels, est, report) = run_gof(
        &panel,
        &spec,
        &args.model,
        args.seed,
        args.nsim,
        args.mcmc.burnin,
        args.mcmc.thin,
        args.allow_leakage,
    )?;
    let hash = config.hash();
    let file = GofFile {
        config_hash: hash.clone(),
        seed: args.seed,
        model: args.model.clone(),
        converged: est.converged,
        estimates: estimate_rows(&labels, &est),
        report,
    };
    write_json(&args.out, "gof.json", &file)?;
    write_gof_csvs(&args.out, &file.report, &hash, args.seed)?;
    println!(
        "auc_roc={:.4} auc_pr={:.4} nsim={}",
        file.report.auc_roc, file.report.auc_pr, file.report.nsim
    );
    for w in &file.report.leakage_warnings {
        println!("leakage warning: {w}");
    }
    Ok(if est.converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

#[derive(Serialize)]
struct AuditFile {
    config_hash: String,
    seed: u64,
    worst: Severity,
    has_leakage: bool,
    #[serde(flatten)]
    report: AuditReport,
}

pub fn audit(args: &AuditArgs) -> Result<i32> {
    let spec = parse_spec(&args.spec)?;
    let findings = classify(&spec);
    let mut report = AuditReport {
        findings,
        probe: None,
    };

    // dynamic probe when a panel and fitted coefficients are supplied:
    // re-simulate with the worst suspect covariate flattened
    if !args.waves.is_empty() {
        if let Some(params_path) = &args.params {
            let panel = data::load_panel(&args.waves, &args.covariates)?;
            let params = load_params(params_path)?;
            let theta = theta_from_params(&params, &spec)?;
            let model = TergmModel::new(spec.terms.clone(), theta)?;
            let last = panel.n_waves() - 1;
            let cov = panel.transition_covariates(last, &spec.derived)?;
            let suspect = report
                .findings
                .iter()
                .filter(|f| f.severity >= Severity::Circular)
                .filter_map(|f| {
                    spec.terms
                        .iter()
                        .find(|t| t.label() == f.term)
                        .and_then(|t| t.attr.clone())
                })
                .find(|a| cov.numeric(a).is_ok());
            if let Some(attr) = suspect {
                let probe_cfg = ProbeConfig {
                    nsim: args.nsim,
                    burn_in: args.mcmc.burnin,
                    thinning: args.mcmc.thin,
                    seed: args.seed,
                };
                let previous = panel.wave(last - 1)?;
                report.probe =
                    Some(perturbation_probe(&model, previous, &cov, &attr, &probe_cfg)?);
            }
        }
    }

    let config = ConfigEcho {
        subcommand: "audit",
        waves: paths_to_strings(&args.waves),
        covariates: paths_to_strings(&args.covariates),
        spec: Some(args.spec.display().to_string()),
        model: None,
        seed: args.seed,
        nsim: args.nsim,
        burnin: args.mcmc.burnin,
        thin: args.mcmc.thin,
        allow_leakage: args.allow_leakage,
    };
    let file = AuditFile {
        config_hash: config.hash(),
        seed: args.seed,
        worst: report.worst(),
        has_leakage: report.has_leakage(),
        report,
    };
    write_json(&args.out, "audit.json", &file)?;
    for f in &file.report.findings {
        println!("{:13} {}: {}", f.severity.name(), f.term, f.explanation);
    }
    if let Some(p) = &file.report.probe {
        println!(
            "probe `{}`: perturbed divergence {:.4} vs noise {:.4} (ratio {:.1}){}",
            p.attr,
            p.perturbed_divergence,
            p.noise_divergence,
            p.ratio,
            if p.flagged { " FLAGGED" } else { "" }
        );
    }
    if file.has_leakage && !args.allow_leakage {
        eprintln!("leakage findings present");
        return Ok(EXIT_LEAKAGE);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FlawArm {
    estimates: Vec<crate::report::EstimateRow>,
    converged: bool,
    auc_roc: f64,
    auc_pr: f64,
    leakage_warnings: Vec<String>,
}

#[derive(Serialize)]
struct ReplicateFlawFile {
    config_hash: String,
    seed: u64,
    generator_theta: Vec<f64>,
    flawed: FlawArm,
    corrected: FlawArm,
}

pub fn replicate_flaw(args: &ReplicateFlawArgs) -> Result<i32> {
    let panel = if args.waves.is_empty() {
        generate_tergm_panel_with_covariates(
            &default_generator_spec(),
            &DEFAULT_THETA_STAR,
            args.nodes,
            args.panel_waves,
            0.2,
            args.seed,
            synthetic_covariates(args.nodes, args.seed ^ 0xC0FFEE),
        )?
    } else {
        data::load_panel(&args.waves, &args.covariates)?
    };

    let config = ConfigEcho {
        subcommand: "replicate-flaw",
        waves: paths_to_strings(&args.waves),
        covariates: paths_to_strings(&args.covariates),
        spec: None,
        model: Some("tergm".into()),
        seed: args.seed,
        nsim: args.nsim,
        burnin: args.mcmc.burnin,
        thin: args.mcmc.thin,
        allow_leakage: true,
    };

    let mut arms = Vec::new();
    for (spec, allow) in [(flawed_spec(), true), (corrected_spec(), false)] {
        let (labels, est, report) = run_gof(
            &panel,
            &spec,
            "tergm",
            args.seed,
            args.nsim,
            args.mcmc.burnin,
            args.mcmc.thin,
            allow,
        )?;
        arms.push(FlawArm {
            estimates: estimate_rows(&labels, &est),
            converged: est.converged,
            auc_roc: report.auc_roc,
            auc_pr: report.auc_pr,
            leakage_warnings: report.leakage_warnings,
        });
    }
    let corrected = arms.pop().expect("two arms");
    let flawed = arms.pop().expect("two arms");

    println!("{:28} {:>10} {:>10}", "term", "flawed", "corrected");
    let corr_of = |term: &str| {
        corrected
            .estimates
            .iter()
            .find(|r| r.term == term)
            .map(|r| format!("{:>10.3}", r.est))
            .unwrap_or_else(|| format!("{:>10}", "-"))
    };
    for row in &flawed.estimates {
        println!("{:28} {:>10.3} {}", row.term, row.est, corr_of(&row.term));
    }
    for row in &corrected.estimates {
        if !flawed.estimates.iter().any(|r| r.term == row.term) {
            println!("{:28} {:>10} {:>10.3}", row.term, "-", row.est);
        }
    }
    println!(
        "held-out AUC_ROC: flawed {:.4} (leaked) vs corrected {:.4}",
        flawed.auc_roc, corrected.auc_roc
    );

    let file = ReplicateFlawFile {
        config_hash: config.hash(),
        seed: args.seed,
        generator_theta: DEFAULT_THETA_STAR.to_vec(),
        flawed,
        corrected,
    };
    write_json(&args.out, "comparison.json", &file)?;
    Ok(EXIT_OK)
}
