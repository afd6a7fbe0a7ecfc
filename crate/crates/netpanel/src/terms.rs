//! Model-term catalog: term kinds, wave bindings and spec-file parsing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{DerivedSpec, WaveBinding};

/// Default decay for the geometrically weighted families (ln 2).
pub const DEFAULT_DECAY: f64 = 0.693;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Edges,
    Mutual,
    Ttriple,
    Ctriple,
    TransitiveTies,
    GwespOtp,
    GwespItp,
    GwIndegree,
    GwOutdegree,
    Twopath,
    NodeIcov,
    NodeOcov,
    NodeIfactor,
    NodeOfactor,
    NodeMatch,
    EdgeCov,
    MemoryStability,
}

impl TermKind {
    pub const ALL: [TermKind; 17] = [
        TermKind::Edges,
        TermKind::Mutual,
        TermKind::Ttriple,
        TermKind::Ctriple,
        TermKind::TransitiveTies,
        TermKind::GwespOtp,
        TermKind::GwespItp,
        TermKind::GwIndegree,
        TermKind::GwOutdegree,
        TermKind::Twopath,
        TermKind::NodeIcov,
        TermKind::NodeOcov,
        TermKind::NodeIfactor,
        TermKind::NodeOfactor,
        TermKind::NodeMatch,
        TermKind::EdgeCov,
        TermKind::MemoryStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermKind::Edges => "edges",
            TermKind::Mutual => "mutual",
            TermKind::Ttriple => "ttriple",
            TermKind::Ctriple => "ctriple",
            TermKind::TransitiveTies => "transitive_ties",
            TermKind::GwespOtp => "gwesp_otp",
            TermKind::GwespItp => "gwesp_itp",
            TermKind::GwIndegree => "gw_indegree",
            TermKind::GwOutdegree => "gw_outdegree",
            TermKind::Twopath => "twopath",
            TermKind::NodeIcov => "node_icov",
            TermKind::NodeOcov => "node_ocov",
            TermKind::NodeIfactor => "node_ifactor",
            TermKind::NodeOfactor => "node_ofactor",
            TermKind::NodeMatch => "node_match",
            TermKind::EdgeCov => "edge_cov",
            TermKind::MemoryStability => "memory_stability",
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            TermKind::GwespOtp | TermKind::GwespItp | TermKind::GwIndegree | TermKind::GwOutdegree
        )
    }

    /// Purely structural terms of the current network (no covariate, no memory).
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            TermKind::Edges
                | TermKind::Mutual
                | TermKind::Ttriple
                | TermKind::Ctriple
                | TermKind::TransitiveTies
                | TermKind::GwespOtp
                | TermKind::GwespItp
                | TermKind::GwIndegree
                | TermKind::GwOutdegree
                | TermKind::Twopath
        )
    }

    pub fn needs_attr(self) -> bool {
        matches!(
            self,
            TermKind::NodeIcov
                | TermKind::NodeOcov
                | TermKind::NodeIfactor
                | TermKind::NodeOfactor
                | TermKind::NodeMatch
                | TermKind::EdgeCov
        )
    }

    /// Which tie margin a nodal covariate term feeds. `In` means the term
    /// models incoming ties of the node carrying the covariate value.
    pub fn covariate_margin(self) -> Option<crate::network::DegreeMode> {
        match self {
            TermKind::NodeIcov | TermKind::NodeIfactor => Some(crate::network::DegreeMode::In),
            TermKind::NodeOcov | TermKind::NodeOfactor => Some(crate::network::DegreeMode::Out),
            _ => None,
        }
    }
}

/// How a term's inputs relate to the modeled wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Endogenous,
    Lagged,
    Contemporaneous,
}

impl std::fmt::Display for Binding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Binding::Endogenous => "endogenous",
            Binding::Lagged => "lagged",
            Binding::Contemporaneous => "contemporaneous",
        })
    }
}

/// One model statistic with its wave-binding tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    #[serde(rename = "term")]
    pub kind: TermKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attr: Option<String>,
    pub binding: Binding,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_wave: Option<WaveBinding>,
}

impl TermSpec {
    pub fn structural(kind: TermKind) -> Self {
        TermSpec {
            kind,
            decay: if kind.is_weighted() {
                Some(DEFAULT_DECAY)
            } else {
                None
            },
            attr: None,
            binding: Binding::Endogenous,
            source_wave: None,
        }
    }

    pub fn memory_stability() -> Self {
        TermSpec {
            kind: TermKind::MemoryStability,
            decay: None,
            attr: None,
            binding: Binding::Lagged,
            source_wave: None,
        }
    }

    pub fn covariate(kind: TermKind, attr: &str, binding: Binding) -> Self {
        TermSpec {
            kind,
            decay: None,
            attr: Some(attr.to_string()),
            binding,
            source_wave: None,
        }
    }

    pub fn decay(&self) -> f64 {
        self.decay.unwrap_or(DEFAULT_DECAY)
    }

    pub fn label(&self) -> String {
        match &self.attr {
            Some(a) => format!("{}({})", self.kind.name(), a),
            None => self.kind.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.decay.is_some() && !self.kind.is_weighted() {
            return Err(Error::DecayNotAllowed(self.kind.name().to_string()));
        }
        if self.kind.needs_attr() && self.attr.is_none() {
            return Err(Error::MissingAttr(self.kind.name().to_string()));
        }
        if let Some(d) = self.decay {
            if !(d >= 0.0) {
                return Err(Error::SpecParse(format!(
                    "decay must be nonnegative, got {d}"
                )));
            }
        }
        let binding_ok = match self.kind {
            TermKind::MemoryStability => self.binding == Binding::Lagged,
            k if k.is_structural() => self.binding == Binding::Endogenous,
            _ => true,
        };
        if !binding_ok {
            return Err(Error::InvalidBinding {
                term: self.kind.name().to_string(),
                binding: self.binding.to_string(),
            });
        }
        Ok(())
    }
}

/// Parsed model spec file: term list plus derived-attribute declarations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub derived: Vec<DerivedSpec>,
    pub terms: Vec<TermSpec>,
}

impl ModelSpec {
    /// Accepts either a bare JSON array of terms or an object with
    /// `terms` and optional `derived` arrays.
    pub fn parse(json: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::SpecParse(e.to_string()))?;
        let spec: ModelSpec = if value.is_array() {
            ModelSpec {
                derived: Vec::new(),
                terms: serde_json::from_value(value).map_err(map_term_err)?,
            }
        } else {
            serde_json::from_value(value).map_err(map_term_err)?
        };
        for term in &spec.terms {
            term.validate()?;
            // covariate terms referencing a derived attribute inherit its binding wave
            if let Some(attr) = &term.attr {
                if let Some(d) = spec.derived.iter().find(|d| &d.name == attr) {
                    let consistent = match (term.binding, d.source_wave) {
                        (Binding::Contemporaneous, WaveBinding::Dependent) => true,
                        (Binding::Lagged, WaveBinding::Previous | WaveBinding::Wave(_)) => true,
                        (Binding::Contemporaneous, WaveBinding::Wave(_)) => true,
                        _ => false,
                    };
                    if !consistent {
                        return Err(Error::SpecParse(format!(
                            "term {} has binding {} but attribute {} is bound to {:?}",
                            term.label(),
                            term.binding,
                            attr,
                            d.source_wave
                        )));
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }
}

fn map_term_err(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    if msg.contains("unknown variant") {
        let valid = TermKind::ALL
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(", ");
        Error::UnknownTerm {
            got: msg,
            valid,
        }
    } else {
        Error::SpecParse(msg)
    }
}

/// The 13-term specification with three contemporaneous degree covariates
/// (two tautological, one circular): the model under audit.
pub fn flawed_spec() -> ModelSpec {
    ModelSpec {
        derived: vec![
            DerivedSpec {
                name: "idegsqrt".into(),
                transform: crate::panel::Transform::SqrtIndegree,
                source_wave: WaveBinding::Dependent,
            },
            DerivedSpec {
                name: "odegsqrt".into(),
                transform: crate::panel::Transform::SqrtOutdegree,
                source_wave: WaveBinding::Dependent,
            },
        ],
        terms: vec![
            TermSpec::structural(TermKind::Edges),
            TermSpec::structural(TermKind::Mutual),
            TermSpec::structural(TermKind::Ttriple),
            TermSpec::structural(TermKind::TransitiveTies),
            TermSpec::structural(TermKind::Ctriple),
            TermSpec::covariate(TermKind::NodeIcov, "idegsqrt", Binding::Contemporaneous),
            TermSpec::covariate(TermKind::NodeIcov, "odegsqrt", Binding::Contemporaneous),
            TermSpec::covariate(TermKind::NodeOcov, "odegsqrt", Binding::Contemporaneous),
            TermSpec::covariate(TermKind::NodeOfactor, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::NodeIfactor, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::NodeMatch, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::EdgeCov, "primary", Binding::Lagged),
            TermSpec::memory_stability(),
        ],
    }
}

/// The corrected specification: degree dispersion and triadic closure
/// modeled endogenously (geometrically weighted degree/ESP terms, two-paths).
pub fn corrected_spec() -> ModelSpec {
    ModelSpec {
        derived: Vec::new(),
        terms: vec![
            TermSpec::structural(TermKind::Edges),
            TermSpec::structural(TermKind::Mutual),
            TermSpec::structural(TermKind::TransitiveTies),
            TermSpec::structural(TermKind::GwespOtp),
            TermSpec::structural(TermKind::GwespItp),
            TermSpec::structural(TermKind::GwIndegree),
            TermSpec::structural(TermKind::Twopath),
            TermSpec::structural(TermKind::GwOutdegree),
            TermSpec::covariate(TermKind::NodeOfactor, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::NodeIfactor, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::NodeMatch, "sex", Binding::Lagged),
            TermSpec::covariate(TermKind::EdgeCov, "primary", Binding::Lagged),
            TermSpec::memory_stability(),
        ],
    }
}
