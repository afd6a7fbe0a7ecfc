//! Panel container: ordered waves over a fixed node set plus named
//! covariates with provenance tracking.
//!
//! Provenance is what the leakage audit runs on: attributes derived from an
//! observed wave carry that wave's index, attributes loaded from files carry
//! `Exogenous` and are treated as potentially contemporaneous downstream.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{degrees, DegreeMode, Network};

/// Degree transform applied when deriving a nodal attribute from a wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    SqrtIndegree,
    SqrtOutdegree,
}

impl Transform {
    pub fn mode(self) -> DegreeMode {
        match self {
            Transform::SqrtIndegree => DegreeMode::In,
            Transform::SqrtOutdegree => DegreeMode::Out,
        }
    }
}

/// Nodal attribute computed from an observed wave; `source_wave` is recorded
/// so the audit can compare it against the dependent wave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedAttribute {
    pub name: String,
    pub source_wave: usize,
    pub transform: Transform,
    pub values: Vec<f64>,
}

/// Which wave a derived attribute is bound to, before a concrete transition
/// is known. `Dependent` is the circular binding under audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveBinding {
    Dependent,
    Previous,
    Wave(usize),
}

/// Declaration of a derived attribute in a model spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedSpec {
    pub name: String,
    pub transform: Transform,
    pub source_wave: WaveBinding,
}

impl DerivedSpec {
    pub fn resolve_wave(&self, dependent_wave: usize) -> usize {
        match self.source_wave {
            WaveBinding::Dependent => dependent_wave,
            WaveBinding::Previous => dependent_wave.saturating_sub(1),
            WaveBinding::Wave(w) => w,
        }
    }
}

/// Where a covariate's values came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Loaded from a file; no declared wave of origin.
    Exogenous,
    /// Computed from an observed wave by a declared transform.
    Derived {
        source_wave: usize,
        transform: Transform,
    },
}

/// Dense static dyadic covariate (row-major n x n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadCovariate {
    pub n: usize,
    pub values: Vec<f64>,
}

impl DyadCovariate {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::NotSquare {
                rows: n,
                cols: values.len() / n.max(1),
            });
        }
        Ok(DyadCovariate { n, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Named covariate store shared by statistic evaluation and simulation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    numeric: BTreeMap<String, Vec<f64>>,
    factor: BTreeMap<String, Vec<String>>,
    dyadic: BTreeMap<String, DyadCovariate>,
    provenance: BTreeMap<String, Provenance>,
}

impl Covariates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_numeric(&mut self, name: &str, values: Vec<f64>) {
        self.numeric.insert(name.to_string(), values);
        self.provenance
            .insert(name.to_string(), Provenance::Exogenous);
    }

    pub fn insert_factor(&mut self, name: &str, values: Vec<String>) {
        self.factor.insert(name.to_string(), values);
        self.provenance
            .insert(name.to_string(), Provenance::Exogenous);
    }

    pub fn insert_dyadic(&mut self, name: &str, cov: DyadCovariate) {
        self.dyadic.insert(name.to_string(), cov);
        self.provenance
            .insert(name.to_string(), Provenance::Exogenous);
    }

    pub fn insert_derived(&mut self, attr: &DerivedAttribute) {
        self.numeric
            .insert(attr.name.clone(), attr.values.clone());
        self.provenance.insert(
            attr.name.clone(),
            Provenance::Derived {
                source_wave: attr.source_wave,
                transform: attr.transform,
            },
        );
    }

    /// Replace a numeric covariate by a constant vector, keeping provenance.
    /// This is the perturbation probe's knob.
    pub fn set_numeric_constant(&mut self, name: &str, value: f64) -> Result<()> {
        let v = self
            .numeric
            .get_mut(name)
            .ok_or_else(|| Error::MissingCovariate(name.to_string()))?;
        v.fill(value);
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.numeric.get(name) {
            Some(v) => Ok(v),
            None if self.factor.contains_key(name) || self.dyadic.contains_key(name) => {
                Err(Error::CovariateKind {
                    name: name.to_string(),
                    got: if self.factor.contains_key(name) {
                        "factor"
                    } else {
                        "dyadic"
                    },
                    expected: "numeric",
                })
            }
            None => Err(Error::MissingCovariate(name.to_string())),
        }
    }

    pub fn factor(&self, name: &str) -> Result<&[String]> {
        match self.factor.get(name) {
            Some(v) => Ok(v),
            None if self.numeric.contains_key(name) || self.dyadic.contains_key(name) => {
                Err(Error::CovariateKind {
                    name: name.to_string(),
                    got: if self.numeric.contains_key(name) {
                        "numeric"
                    } else {
                        "dyadic"
                    },
                    expected: "factor",
                })
            }
            None => Err(Error::MissingCovariate(name.to_string())),
        }
    }

    pub fn dyadic(&self, name: &str) -> Result<&DyadCovariate> {
        self.dyadic
            .get(name)
            .ok_or_else(|| Error::MissingCovariate(name.to_string()))
    }

    pub fn provenance(&self, name: &str) -> Option<&Provenance> {
        self.provenance.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.provenance.contains_key(name)
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &str> {
        self.numeric.keys().map(String::as_str)
    }

    /// Reference level of a factor: the lexicographically smallest level.
    pub fn reference_level(values: &[String]) -> Option<&String> {
        values.iter().min()
    }

    pub fn validate_lengths(&self, n: usize) -> Result<()> {
        for (name, v) in &self.numeric {
            if v.len() != n {
                return Err(Error::CovariateLength {
                    name: name.clone(),
                    got: v.len(),
                    expected: n,
                });
            }
        }
        for (name, v) in &self.factor {
            if v.len() != n {
                return Err(Error::CovariateLength {
                    name: name.clone(),
                    got: v.len(),
                    expected: n,
                });
            }
        }
        for (name, m) in &self.dyadic {
            if m.n != n {
                return Err(Error::CovariateLength {
                    name: name.clone(),
                    got: m.n,
                    expected: n,
                });
            }
        }
        Ok(())
    }
}

/// Ordered waves of networks over the same node set plus covariates.
#[derive(Clone, Debug)]
pub struct Panel {
    waves: Vec<Network>,
    pub covariates: Covariates,
}

impl Panel {
    pub fn new(waves: Vec<Network>, covariates: Covariates) -> Result<Self> {
        if waves.len() < 2 {
            return Err(Error::TooFewWaves(waves.len()));
        }
        let n = waves[0].n();
        for (t, w) in waves.iter().enumerate() {
            if w.n() != n {
                return Err(Error::WaveSizeMismatch {
                    wave: t,
                    got: w.n(),
                    expected: n,
                });
            }
        }
        covariates.validate_lengths(n)?;
        Ok(Panel { waves, covariates })
    }

    /// Like `new` but without the two-wave minimum (used by holdout splitting
    /// when only the waves before the test wave remain).
    pub fn from_waves_unchecked(waves: Vec<Network>, covariates: Covariates) -> Self {
        Panel { waves, covariates }
    }

    pub fn n(&self) -> usize {
        self.waves[0].n()
    }

    pub fn n_waves(&self) -> usize {
        self.waves.len()
    }

    pub fn wave(&self, t: usize) -> Result<&Network> {
        self.waves.get(t).ok_or(Error::WaveOutOfRange {
            wave: t,
            waves: self.waves.len(),
        })
    }

    pub fn waves(&self) -> &[Network] {
        &self.waves
    }

    /// Covariate store for the transition predicting `dependent_wave`, with
    /// every derived-attribute declaration materialized at its bound wave.
    pub fn transition_covariates(
        &self,
        dependent_wave: usize,
        derived: &[DerivedSpec],
    ) -> Result<Covariates> {
        let mut cov = self.covariates.clone();
        for spec in derived {
            let wave = spec.resolve_wave(dependent_wave);
            let attr = derive_attribute_named(self, wave, spec.transform, &spec.name)?;
            cov.insert_derived(&attr);
        }
        Ok(cov)
    }
}

/// Compute sqrt-degree values from a wave, recording the source wave.
pub fn derive_attribute(panel: &Panel, wave: usize, transform: Transform) -> Result<DerivedAttribute> {
    let name = match transform {
        Transform::SqrtIndegree => "idegsqrt",
        Transform::SqrtOutdegree => "odegsqrt",
    };
    derive_attribute_named(panel, wave, transform, name)
}

pub fn derive_attribute_named(
    panel: &Panel,
    wave: usize,
    transform: Transform,
    name: &str,
) -> Result<DerivedAttribute> {
    let net = panel.wave(wave)?;
    Ok(derive_attribute_from_network(net, wave, transform, name))
}

pub fn derive_attribute_from_network(
    net: &Network,
    source_wave: usize,
    transform: Transform,
    name: &str,
) -> DerivedAttribute {
    let values = degrees(net, transform.mode())
        .into_iter()
        .map(|d| (d as f64).sqrt())
        .collect();
    DerivedAttribute {
        name: name.to_string(),
        source_wave,
        transform,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::degrees;

    fn panel_of(waves: Vec<Network>) -> Panel {
        Panel::new(waves, Covariates::new()).unwrap()
    }

    #[test]
    fn derive_sqrt_indegree_exact_squares() {
        // indegrees (4, 1, 0, ...) on 6 nodes
        let net = Network::from_edges(
            6,
            &[(1, 0), (2, 0), (3, 0), (4, 0), (0, 1)],
        )
        .unwrap();
        let panel = panel_of(vec![net, Network::empty(6)]);
        let attr = derive_attribute(&panel, 0, Transform::SqrtIndegree).unwrap();
        assert_eq!(attr.values[0], 2.0);
        assert_eq!(attr.values[1], 1.0);
        assert_eq!(attr.values[2], 0.0);
        assert_eq!(attr.source_wave, 0);
    }

    #[test]
    fn derive_empty_wave_all_zero() {
        let panel = panel_of(vec![Network::empty(4), Network::empty(4)]);
        let attr = derive_attribute(&panel, 1, Transform::SqrtOutdegree).unwrap();
        assert!(attr.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derive_matches_degree_oracle_and_is_stable() {
        let net = crate::network::tests::random_net(26, 42);
        let panel = panel_of(vec![net.clone(), Network::empty(26)]);
        let attr = derive_attribute(&panel, 0, Transform::SqrtIndegree).unwrap();
        let expect: Vec<f64> = degrees(&net, DegreeMode::In)
            .into_iter()
            .map(|d| (d as f64).sqrt())
            .collect();
        assert_eq!(attr.values, expect);
        // idempotent re-derivation
        let again = derive_attribute(&panel, 0, Transform::SqrtIndegree).unwrap();
        assert_eq!(attr, again);
    }

    #[test]
    fn panel_rejects_mismatched_waves() {
        let err = Panel::new(
            vec![Network::empty(4), Network::empty(5)],
            Covariates::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::WaveSizeMismatch { wave: 1, .. }));
    }

    #[test]
    fn transition_covariates_bind_dependent_wave() {
        let w0 = Network::empty(3);
        let w1 = Network::from_edges(3, &[(0, 1), (2, 1)]).unwrap();
        let panel = panel_of(vec![w0, w1]);
        let derived = vec![DerivedSpec {
            name: "idegsqrt".into(),
            transform: Transform::SqrtIndegree,
            source_wave: WaveBinding::Dependent,
        }];
        let cov = panel.transition_covariates(1, &derived).unwrap();
        let v = cov.numeric("idegsqrt").unwrap();
        assert_eq!(v[1], (2.0f64).sqrt());
        match cov.provenance("idegsqrt") {
            Some(Provenance::Derived { source_wave: 1, .. }) => {}
            other => panic!("wrong provenance: {other:?}"),
        }
    }
}
