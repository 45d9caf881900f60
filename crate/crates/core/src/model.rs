//! Models understood by every part of the crate, and their JSON form.
//!
//! ```json
//! {"alphabet": ["0","1"], "kind": "finite",
//!  "contexts": [{"w": "1", "p": [0.7, 0.3]}, {"w": "0", "p": [0.8, 0.2]}]}
//! {"kind": "comb", "q0": 0.6, "qinf": 0.3, "gamma": 0.5}
//! ```
//!
//! Context strings are written in time order (most recent symbol last) and
//! each `p` is ordered like the alphabet. The memoryless model is a finite
//! model with the single context `""`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Word};
use crate::comb::CombSpec;
use crate::error::{Error, Result};
use crate::tree::{
    truncate, validate_model, ContextMatch, ContextOracle, ContextTree, ProbabilisticContextTree,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Finite(ProbabilisticContextTree),
    Comb(CombSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub w: String,
    pub p: Vec<f64>,
}

/// Serialized form of a [`Model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Finite {
        alphabet: Vec<String>,
        contexts: Vec<ContextEntry>,
    },
    Comb {
        q0: f64,
        qinf: f64,
        gamma: f64,
    },
}

impl Model {
    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Model::Finite(m) => m.alphabet(),
            Model::Comb(c) => c.alphabet(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Model::Finite(_))
    }

    /// Height of the tree, `None` when unbounded.
    pub fn height(&self) -> Option<usize> {
        match self {
            Model::Finite(m) => Some(m.height()),
            Model::Comb(_) => None,
        }
    }

    /// `τ|_K` of the true tree.
    pub fn truncation(&self, k: usize) -> ContextTree {
        match self {
            Model::Finite(m) => truncate(m.tree(), k),
            Model::Comb(c) => c.truncation(k),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Comb { q0, qinf, gamma } => {
                Ok(Model::Comb(CombSpec::new(*q0, *qinf, *gamma)?))
            }
            ModelSpec::Finite { alphabet, contexts } => {
                let symbols = alphabet
                    .iter()
                    .map(|s| {
                        let mut chars = s.chars();
                        match (chars.next(), chars.next()) {
                            (Some(c), None) => Ok(c),
                            _ => Err(Error::InvalidAlphabet(format!(
                                "symbol {s:?} is not a single character"
                            ))),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let alphabet = Alphabet::new(symbols)?;
                let entries = contexts
                    .iter()
                    .map(|c| Ok((alphabet.parse(&c.w)?, c.p.clone())))
                    .collect::<Result<Vec<(Word, Vec<f64>)>>>()?;
                let model = ProbabilisticContextTree::new(alphabet, entries)?;
                let report = validate_model(&model);
                // Non-nullness is an analysis assumption, not a structural one.
                if !(report.has_suffix_property()
                    && report.is_irreducible()
                    && report.is_complete())
                {
                    return Err(Error::InvalidModel(report.describe(model.alphabet())));
                }
                Ok(Model::Finite(model))
            }
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        match self {
            Model::Comb(c) => ModelSpec::Comb {
                q0: c.q0(),
                qinf: c.q_inf(),
                gamma: c.gamma(),
            },
            Model::Finite(m) => ModelSpec::Finite {
                alphabet: m
                    .alphabet()
                    .symbols()
                    .iter()
                    .map(|c| c.to_string())
                    .collect(),
                contexts: m
                    .entries()
                    .into_iter()
                    .map(|(w, p)| ContextEntry {
                        w: m.alphabet().render(w.as_slice()),
                        p: p.to_vec(),
                    })
                    .collect(),
            },
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl ContextOracle for Model {
    fn alphabet(&self) -> &Alphabet {
        Model::alphabet(self)
    }

    fn lookup(&self, past: &[u8]) -> Option<ContextMatch<'_>> {
        match self {
            Model::Finite(m) => m.lookup(past),
            Model::Comb(c) => c.lookup(past),
        }
    }
}

impl From<ProbabilisticContextTree> for Model {
    fn from(m: ProbabilisticContextTree) -> Self {
        Model::Finite(m)
    }
}

impl From<CombSpec> for Model {
    fn from(c: CombSpec) -> Self {
        Model::Comb(c)
    }
}

/// The fixtures used throughout the tests and documentation.
pub mod fixtures {
    use super::*;

    /// `τ = {0, 1}`, `p(1|0) = 0.2`, `p(1|1) = 0.7`.
    pub fn t0() -> Model {
        ProbabilisticContextTree::binary(&[("0", 0.2), ("1", 0.7)])
            .unwrap()
            .into()
    }

    /// `τ = {1, 10, 100, 000}`, `p(1|·) = (0.3, 0.6, 0.4, 0.2)`.
    pub fn t1() -> Model {
        ProbabilisticContextTree::binary(&[("1", 0.3), ("10", 0.6), ("100", 0.4), ("000", 0.2)])
            .unwrap()
            .into()
    }

    /// Comb with `q0 = 0.6`, `q∞ = 0.3`, `γ = 0.5`.
    pub fn u1() -> Model {
        CombSpec::new(0.6, 0.3, 0.5).unwrap().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_finite_and_comb() {
        let m = Model::from_json(
            r#"{"alphabet":["0","1"],"kind":"finite",
                "contexts":[{"w":"1","p":[0.7,0.3]},{"w":"10","p":[0.4,0.6]},
                            {"w":"100","p":[0.6,0.4]},{"w":"000","p":[0.8,0.2]}]}"#,
        )
        .unwrap();
        assert_eq!(m, fixtures::t1());
        let c = Model::from_json(r#"{"kind":"comb","q0":0.6,"qinf":0.3,"gamma":0.5}"#).unwrap();
        assert_eq!(c, fixtures::u1());
    }

    #[test]
    fn json_round_trip() {
        for m in [fixtures::t0(), fixtures::t1(), fixtures::u1()] {
            assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
        }
    }

    #[test]
    fn memoryless_json() {
        let m = Model::from_json(
            r#"{"alphabet":["a","b","c"],"kind":"finite","contexts":[{"w":"","p":[0.2,0.3,0.5]}]}"#,
        )
        .unwrap();
        assert_eq!(m.height(), Some(0));
        assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn rejects_invalid_models() {
        // incomplete
        assert!(Model::from_json(
            r#"{"alphabet":["0","1"],"kind":"finite","contexts":[{"w":"00","p":[0.5,0.5]},{"w":"10","p":[0.5,0.5]}]}"#
        )
        .is_err());
        // bad symbol
        assert!(matches!(
            Model::from_json(
                r#"{"alphabet":["0","1"],"kind":"finite","contexts":[{"w":"2","p":[0.5,0.5]}]}"#
            ),
            Err(Error::InvalidSymbol('2'))
        ));
        assert!(Model::from_json(r#"{"kind":"comb","q0":1.5,"qinf":0.3,"gamma":0.5}"#).is_err());
        assert!(Model::from_json(r#"{"kind":"spiral"}"#).is_err());
    }
}
