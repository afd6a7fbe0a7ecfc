//! Python bindings: thin wrappers over the core types plus report-producing
//! entry points that return JSON strings (parse with `json.loads`).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use netpanel::{
    classify, estimate_mom, generate_tergm_panel_with_covariates, holdout_split,
    predict_wave_tergm, score, synthetic_covariates, AuditReport, Covariates, DyadCovariate,
    McmcConfig, ModelSpec, MomConfig, Panel, SaomEffect, TergmModel, DEFAULT_THETA_STAR,
};

fn err(e: netpanel::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Directed binary network over a fixed node set.
#[pyclass(name = "Network")]
#[derive(Clone)]
struct PyNetwork {
    inner: netpanel::Network,
}

#[pymethods]
impl PyNetwork {
    #[new]
    fn new(n: usize) -> Self {
        PyNetwork {
            inner: netpanel::Network::empty(n),
        }
    }

    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: netpanel::Network::from_edges(n, &edges).map_err(err)?,
        })
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.inner.get(i, j)
    }

    fn set(&mut self, i: usize, j: usize, value: bool) {
        self.inner.set(i, j, value);
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn density(&self) -> f64 {
        self.inner.density()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.inner.n() {
            for j in self.inner.out_neighbors(i) {
                out.push((i, j));
            }
        }
        out
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(n={}, edges={})",
            self.inner.n(),
            self.inner.edge_count()
        )
    }
}

/// Ordered waves plus named covariates.
#[pyclass(name = "Panel")]
struct PyPanel {
    waves: Vec<netpanel::Network>,
    covariates: Covariates,
}

impl PyPanel {
    fn build(&self) -> PyResult<Panel> {
        Panel::new(self.waves.clone(), self.covariates.clone()).map_err(err)
    }
}

#[pymethods]
impl PyPanel {
    #[new]
    fn new(waves: Vec<PyNetwork>) -> PyResult<Self> {
        let panel = PyPanel {
            waves: waves.into_iter().map(|w| w.inner).collect(),
            covariates: Covariates::new(),
        };
        panel.build()?;
        Ok(panel)
    }

    /// Synthetic panel from the built-in generator
    /// (edges -2.0, reciprocity 1.0, stability 1.0) with sex/primary covariates.
    #[staticmethod]
    fn synthetic(n: usize, n_waves: usize, seed: u64) -> PyResult<Self> {
        let panel = generate_tergm_panel_with_covariates(
            &netpanel::default_generator_spec(),
            &DEFAULT_THETA_STAR,
            n,
            n_waves,
            0.2,
            seed,
            synthetic_covariates(n, seed ^ 0xC0FFEE),
        )
        .map_err(err)?;
        Ok(PyPanel {
            waves: panel.waves().to_vec(),
            covariates: panel.covariates.clone(),
        })
    }

    fn n(&self) -> usize {
        self.waves.first().map(|w| w.n()).unwrap_or(0)
    }

    fn n_waves(&self) -> usize {
        self.waves.len()
    }

    fn wave(&self, t: usize) -> PyResult<PyNetwork> {
        self.waves
            .get(t)
            .map(|w| PyNetwork { inner: w.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("wave {t} out of range")))
    }

    fn add_numeric(&mut self, name: &str, values: Vec<f64>) {
        self.covariates.insert_numeric(name, values);
    }

    fn add_factor(&mut self, name: &str, values: Vec<String>) {
        self.covariates.insert_factor(name, values);
    }

    /// Row-major n*n dyadic covariate.
    fn add_dyadic(&mut self, name: &str, values: Vec<f64>) -> PyResult<()> {
        let cov = DyadCovariate::new(self.n(), values).map_err(err)?;
        self.covariates.insert_dyadic(name, cov);
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("Panel(n={}, waves={})", self.n(), self.waves.len())
    }
}

fn parse_spec(spec_json: &str) -> PyResult<ModelSpec> {
    ModelSpec::parse(spec_json).map_err(err)
}

/// The two reference specifications, as spec JSON.
#[pyfunction]
fn flawed_spec_json() -> String {
    netpanel::flawed_spec().to_json()
}

#[pyfunction]
fn corrected_spec_json() -> String {
    netpanel::corrected_spec().to_json()
}

fn estimate_json(labels: Vec<String>, est: &netpanel::ParameterEstimate) -> String {
    let rows: Vec<serde_json::Value> = labels
        .iter()
        .enumerate()
        .map(|(i, term)| {
            serde_json::json!({
                "term": term,
                "est": est.theta_hat[i],
                "se": est.standard_errors[i],
                "t_ratio": est.convergence_tratios[i],
            })
        })
        .collect();
    serde_json::json!({
        "converged": est.converged,
        "degenerate": est.degenerate,
        "separation": est.separation,
        "iterations": est.iterations,
        "estimates": rows,
    })
    .to_string()
}

/// Fit a TERGM by MCMC maximum likelihood; returns an estimates JSON string.
#[pyfunction]
#[pyo3(signature = (spec_json, panel, seed, burnin=20_000, thin=500, nsim=500))]
fn estimate_tergm(
    spec_json: &str,
    panel: &PyPanel,
    seed: u64,
    burnin: usize,
    thin: usize,
    nsim: usize,
) -> PyResult<String> {
    let spec = parse_spec(spec_json)?;
    let p = panel.build()?;
    let cfg = McmcConfig {
        burn_in: burnin,
        thinning: thin,
        sample_size: nsim,
        seed,
    };
    let est = netpanel::estimate(&spec, &p, &cfg).map_err(err)?;
    let labels = spec.terms.iter().map(|t| t.label()).collect();
    Ok(estimate_json(labels, &est))
}

/// Fit the actor model by method of moments; effects given as a JSON array
/// of {"effect": ..., "attr": ...} objects.
#[pyfunction]
#[pyo3(signature = (effects_json, panel, seed))]
fn estimate_saom(effects_json: &str, panel: &PyPanel, seed: u64) -> PyResult<String> {
    let effects: Vec<SaomEffect> = serde_json::from_str(effects_json)
        .map_err(|e| PyValueError::new_err(format!("effects: {e}")))?;
    let p = panel.build()?;
    let cfg = MomConfig {
        seed,
        ..MomConfig::default()
    };
    let est = estimate_mom(&effects, &p, &cfg).map_err(err)?;
    let labels = std::iter::once("rate".to_string())
        .chain(effects.iter().map(|e| e.label()))
        .collect();
    Ok(estimate_json(labels, &est))
}

/// Simulate `nsim` next waves conditional on the panel's last wave.
#[pyfunction]
#[pyo3(signature = (spec_json, panel, theta, seed, nsim=10, burnin=20_000, thin=500))]
fn simulate(
    spec_json: &str,
    panel: &PyPanel,
    theta: Vec<f64>,
    seed: u64,
    nsim: usize,
    burnin: usize,
    thin: usize,
) -> PyResult<Vec<PyNetwork>> {
    let spec = parse_spec(spec_json)?;
    let p = panel.build()?;
    let next = p.n_waves();
    for d in &spec.derived {
        if d.resolve_wave(next) >= next {
            return Err(PyValueError::new_err(format!(
                "attribute `{}` is bound to an unobserved wave",
                d.name
            )));
        }
    }
    let cov = p.transition_covariates(next - 1, &spec.derived).map_err(err)?;
    let model = TergmModel::new(spec.terms.clone(), theta).map_err(err)?;
    let previous = p.wave(next - 1).map_err(err)?;
    let cfg = McmcConfig {
        burn_in: burnin,
        thinning: thin,
        sample_size: nsim,
        seed,
    };
    let sims = predict_wave_tergm(&model, previous, &cov, nsim, &cfg).map_err(err)?;
    Ok(sims.into_iter().map(|inner| PyNetwork { inner }).collect())
}

/// Hold out the final wave, fit, predict and score; returns GOF JSON.
#[pyfunction]
#[pyo3(signature = (spec_json, panel, seed, nsim=50, burnin=20_000, thin=500, allow_leakage=false))]
fn gof(
    spec_json: &str,
    panel: &PyPanel,
    seed: u64,
    nsim: usize,
    burnin: usize,
    thin: usize,
    allow_leakage: bool,
) -> PyResult<String> {
    let spec = parse_spec(spec_json)?;
    let p = panel.build()?;
    let test_wave = p.n_waves() - 1;
    let split = holdout_split(&p, test_wave, &spec, allow_leakage).map_err(err)?;
    let cfg = McmcConfig {
        burn_in: burnin,
        thinning: thin,
        sample_size: nsim.max(500),
        seed,
    };
    let est = netpanel::estimate(&spec, &split.training, &cfg).map_err(err)?;
    let cov = p
        .transition_covariates(test_wave, &spec.derived)
        .map_err(err)?;
    let model = TergmModel::new(spec.terms.clone(), est.theta_hat.clone()).map_err(err)?;
    let last_train = split.training.waves().last().unwrap();
    let pred_cfg = McmcConfig {
        sample_size: nsim,
        seed: seed.wrapping_add(0x51),
        ..cfg
    };
    let sims = predict_wave_tergm(&model, last_train, &cov, nsim, &pred_cfg).map_err(err)?;
    let mut report = score(&sims, &split.test).map_err(err)?;
    report.leakage_warnings = split.leakage_warnings;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Static leakage audit of a model spec; returns findings JSON.
#[pyfunction]
fn audit(spec_json: &str) -> PyResult<String> {
    let spec = parse_spec(spec_json)?;
    let report = AuditReport {
        findings: classify(&spec),
        probe: None,
    };
    let value = serde_json::json!({
        "worst": report.worst(),
        "has_leakage": report.has_leakage(),
        "findings": report.findings,
    });
    Ok(value.to_string())
}

#[pymodule]
fn netpanel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyPanel>()?;
    m.add_function(wrap_pyfunction!(flawed_spec_json, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_spec_json, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_tergm, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_saom, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(gof, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    Ok(())
}
