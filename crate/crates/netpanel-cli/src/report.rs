//! Report emission: every artifact embeds the seed and a hash of the run
//! configuration so outputs can be traced back to the exact invocation.

use std::path::{Path, PathBuf};

use netpanel::{Error, GofReport, ParameterEstimate, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Canonical run-configuration echo used for hashing and embedding.
#[derive(Serialize)]
pub struct ConfigEcho {
    pub subcommand: &'static str,
    pub waves: Vec<String>,
    pub covariates: Vec<String>,
    pub spec: Option<String>,
    pub model: Option<String>,
    pub seed: u64,
    pub nsim: usize,
    pub burnin: usize,
    pub thin: usize,
    pub allow_leakage: bool,
}

impl ConfigEcho {
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

pub fn paths_to_strings(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::DataFile {
        file: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn csv_preamble(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} seed={seed}\n")
}

/// Write the GOF report's per-curve and per-histogram CSVs next to the JSON.
pub fn write_gof_csvs(dir: &Path, report: &GofReport, hash: &str, seed: u64) -> Result<()> {
    let mut roc = csv_preamble(hash, seed);
    roc.push_str("threshold,fpr,tpr\n");
    for p in &report.roc {
        roc.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    write_text(dir, "roc.csv", &roc)?;

    let mut pr = csv_preamble(hash, seed);
    pr.push_str("threshold,recall,precision\n");
    for p in &report.pr {
        pr.push_str(&format!("{},{},{}\n", p.threshold, p.recall, p.precision));
    }
    write_text(dir, "pr.csv", &pr)?;

    for (name, env) in [
        ("esp", &report.esp),
        ("dsp", &report.dsp),
        ("indegree", &report.indegree),
        ("geodesic", &report.geodesic),
    ] {
        let mut hist = csv_preamble(hash, seed);
        hist.push_str("bucket,observed,q05,median,q95\n");
        for b in 0..env.observed.len() {
            hist.push_str(&format!(
                "{},{},{},{},{}\n",
                b, env.observed[b], env.q05[b], env.median[b], env.q95[b]
            ));
        }
        write_text(dir, &format!("{name}.csv"), &hist)?;
    }
    Ok(())
}

/// One row of estimates.json.
#[derive(Serialize, serde::Deserialize)]
pub struct EstimateRow {
    pub term: String,
    pub est: f64,
    pub se: f64,
    pub t_ratio: f64,
}

#[derive(Serialize, serde::Deserialize)]
pub struct EstimatesFile {
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
    pub converged: bool,
    pub degenerate: bool,
    pub separation: bool,
    pub iterations: usize,
    pub estimates: Vec<EstimateRow>,
}

pub fn estimate_rows(labels: &[String], est: &ParameterEstimate) -> Vec<EstimateRow> {
    labels
        .iter()
        .zip(est.theta_hat.iter())
        .zip(est.standard_errors.iter())
        .zip(est.convergence_tratios.iter())
        .map(|(((term, &e), &se), &t)| EstimateRow {
            term: term.clone(),
            est: e,
            se,
            t_ratio: t,
        })
        .collect()
}

/// Read coefficients back out of an estimates.json, in file order.
pub fn load_params(path: &Path) -> Result<EstimatesFile> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::DataFile {
        file: path.display().to_string(),
        message: format!("not a valid estimates file: {e}"),
    })
}
