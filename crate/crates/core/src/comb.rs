//! The comb: an unbounded binary context tree.
//!
//! Contexts are `1·0^j` for every `j ≥ 0` (the most recent 1 followed by `j`
//! zeros) and `p(1 | 1·0^j) = q∞ + (q0 − q∞)·γ^j`.

use std::borrow::Cow;

use crate::alphabet::{Alphabet, Word};
use crate::error::{Error, Result};
use crate::tree::{ContextMatch, ContextOracle, ContextTree};

/// Precomputed rows beyond which `q_j` is evaluated on the fly.
const ROW_TABLE_CAP: usize = 4096;

/// Tail threshold used to fold the comb into a finite chain for analysis.
pub const FOLD_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CombSpec {
    q0: f64,
    q_inf: f64,
    gamma: f64,
    alphabet: Alphabet,
    rows: Vec<[f64; 2]>,
}

impl PartialEq for CombSpec {
    fn eq(&self, other: &Self) -> bool {
        self.q0 == other.q0 && self.q_inf == other.q_inf && self.gamma == other.gamma
    }
}

impl CombSpec {
    pub fn new(q0: f64, q_inf: f64, gamma: f64) -> Result<Self> {
        for (name, q) in [("q0", q0), ("qinf", q_inf)] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "{name} = {q} must lie in (0, 1)"
                )));
            }
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidModel(format!(
                "gamma = {gamma} must be positive"
            )));
        }
        if gamma >= 1.0 {
            return Err(Error::SummabilityViolation(format!(
                "gamma = {gamma} gives 1 - alpha_k = |q0 - qinf| gamma^k, which is not summable"
            )));
        }
        let mut spec = Self {
            q0,
            q_inf,
            gamma,
            alphabet: Alphabet::binary(),
            rows: Vec::new(),
        };
        let mut rows = Vec::new();
        for j in 0..ROW_TABLE_CAP {
            let q = spec.q(j);
            rows.push([1.0 - q, q]);
            if j > 0 && q == rows[j - 1][1] {
                break;
            }
        }
        spec.rows = rows;
        Ok(spec)
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn q_inf(&self) -> f64 {
        self.q_inf
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `q_j = p(1 | 1·0^j)`.
    pub fn q(&self, j: usize) -> f64 {
        self.q_inf + (self.q0 - self.q_inf) * self.gamma.powi(j.min(i32::MAX as usize) as i32)
    }

    /// Smallest `L` with `|q0 − q∞|·γ^L < 1e-9`; contexts `1·0^j` with
    /// `j ≥ L` are merged for stationary computations.
    pub fn fold_depth(&self) -> usize {
        let spread = (self.q0 - self.q_inf).abs();
        let mut l = 0;
        while spread * self.gamma.powi(l as i32) >= FOLD_TOLERANCE {
            l += 1;
        }
        l
    }

    /// The context `1·0^j`.
    pub fn context(j: usize) -> Word {
        let mut v = vec![1u8];
        v.extend(std::iter::repeat_n(0u8, j));
        Word(v)
    }

    /// `τ|_K = {1·0^j : j < K} ∪ {0^K}`.
    pub fn truncation(&self, k: usize) -> ContextTree {
        assert!(k >= 1, "truncation level must be at least 1");
        let mut words: Vec<Word> = (0..k).map(Self::context).collect();
        words.push(Word(vec![0u8; k]));
        ContextTree::new(self.alphabet.clone(), words).expect("comb truncation is well formed")
    }
}

impl ContextOracle for CombSpec {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn lookup(&self, past: &[u8]) -> Option<ContextMatch<'_>> {
        let last_one = past.iter().rposition(|&s| s == 1)?;
        let j = past.len() - 1 - last_one;
        let row = match self.rows.get(j) {
            Some(r) => Cow::Borrowed(&r[..]),
            None if !self.rows.is_empty() && self.rows.len() < ROW_TABLE_CAP => {
                // The table stopped because q_j no longer changes.
                Cow::Borrowed(&self.rows[self.rows.len() - 1][..])
            }
            None => {
                let q = self.q(j);
                Cow::Owned(vec![1.0 - q, q])
            }
        };
        Some(ContextMatch { len: j + 1, row })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{context_of, truncate, Lookup};

    fn u1() -> CombSpec {
        CombSpec::new(0.6, 0.3, 0.5).unwrap()
    }

    #[test]
    fn parameters_checked() {
        assert!(CombSpec::new(0.0, 0.3, 0.5).is_err());
        assert!(CombSpec::new(0.6, 1.0, 0.5).is_err());
        assert!(matches!(
            CombSpec::new(0.6, 0.3, 1.0),
            Err(Error::SummabilityViolation(_))
        ));
    }

    #[test]
    fn rows_follow_geometric_law() {
        let c = u1();
        assert_eq!(c.q(0), 0.6);
        assert!((c.q(1) - 0.45).abs() < 1e-15);
        assert!((c.q(200) - 0.3).abs() < 1e-15);
        let a = Alphabet::binary();
        match context_of(&c, &a.parse("0100").unwrap()).unwrap() {
            Lookup::Context { context, row } => {
                assert_eq!(context, a.parse("100").unwrap());
                assert!((row[1] - 0.375).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        // Far beyond the precomputed table.
        let mut past = vec![1u8];
        past.extend(std::iter::repeat_n(0u8, 10_000));
        let m = c.lookup(&past).unwrap();
        assert_eq!(m.len, 10_001);
        assert!((m.row[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_one_needs_more_past() {
        let a = Alphabet::binary();
        assert_eq!(
            context_of(&u1(), &a.parse("0000").unwrap()).unwrap(),
            Lookup::NeedMorePast
        );
    }

    #[test]
    fn truncation_matches_enumerated_suffixes() {
        // Oracle: truncate the explicit finite family {1·0^j : j ≤ 10}.
        let explicit =
            ContextTree::new(Alphabet::binary(), (0..=10).map(CombSpec::context)).unwrap();
        for k in 1..=6 {
            assert_eq!(u1().truncation(k), truncate(&explicit, k), "K = {k}");
        }
        let a = Alphabet::binary();
        assert_eq!(
            u1().truncation(3),
            ContextTree::parse(&a, &["1", "10", "100", "000"]).unwrap()
        );
    }

    #[test]
    fn fold_depth_for_u1() {
        // 0.3 * 0.5^L < 1e-9 first at L = 29.
        assert_eq!(u1().fold_depth(), 29);
    }
}
