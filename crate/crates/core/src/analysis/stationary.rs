//! Finite state representations of models and their stationary laws.
//!
//! A finite tree of height `h` is embedded in the Markov chain on `A^h`
//! (state = the last `h` symbols). The comb is folded at depth `L` into its
//! renewal chain on `{0, .., L}` (state = zeros since the last 1, capped).

use serde::Serialize;

use crate::alphabet::Word;
use crate::comb::CombSpec;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tree::{ContextOracle, ProbabilisticContextTree};

/// Largest dense state space (`2^12`).
pub const MAX_STATES: usize = 4096;

/// Required invariance residual `‖πP − π‖∞`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum StateSpace {
    /// Words of length `depth`; state index is the word read in base `|A|`
    /// with the most recent symbol least significant.
    Words { depth: usize },
    /// Renewal states `0..=fold` of a comb.
    Renewal { fold: usize },
}

/// Deterministic-transition chain: from state `s`, symbol `a` is emitted
/// with probability `emit[s][a]` and the chain moves to `next[s][a]`.
#[derive(Clone, Debug)]
pub(crate) struct StateChain {
    pub k: usize,
    pub states: usize,
    pub space: StateSpace,
    emit: Vec<f64>,
    next: Vec<u32>,
}

impl StateChain {
    pub fn for_model(model: &Model) -> Result<Self> {
        match model {
            Model::Finite(m) => Self::for_tree(m),
            Model::Comb(c) => Ok(Self::for_comb(c)),
        }
    }

    pub fn for_tree(model: &ProbabilisticContextTree) -> Result<Self> {
        let k = model.alphabet().len();
        let h = model.height();
        let states =
            k.checked_pow(h as u32)
                .filter(|&s| s <= MAX_STATES)
                .ok_or(Error::ModelTooLarge {
                    states: k.saturating_pow(h as u32),
                    cap: MAX_STATES,
                })?;
        let mut emit = Vec::with_capacity(states * k);
        let mut next = Vec::with_capacity(states * k);
        let mut word = vec![0u8; h];
        for s in 0..states {
            let mut idx = s;
            for slot in word.iter_mut().rev() {
                *slot = (idx % k) as u8;
                idx /= k;
            }
            let m = model.lookup(&word).ok_or_else(|| {
                Error::InvalidModel(format!(
                    "past {:?} has no context (tree is not complete)",
                    model.alphabet().render(&word)
                ))
            })?;
            for a in 0..k {
                emit.push(m.row[a]);
                next.push(((s * k + a) % states) as u32);
            }
        }
        Ok(Self {
            k,
            states,
            space: StateSpace::Words { depth: h },
            emit,
            next,
        })
    }

    pub fn for_comb(comb: &CombSpec) -> Self {
        let fold = comb.fold_depth();
        let states = fold + 1;
        let mut emit = Vec::with_capacity(states * 2);
        let mut next = Vec::with_capacity(states * 2);
        for j in 0..states {
            let q = comb.q(j);
            emit.extend([1.0 - q, q]);
            next.extend([(j + 1).min(fold) as u32, 0]);
        }
        Self {
            k: 2,
            states,
            space: StateSpace::Renewal { fold },
            emit,
            next,
        }
    }

    #[inline]
    pub fn emit(&self, s: usize, a: usize) -> f64 {
        self.emit[s * self.k + a]
    }

    #[inline]
    pub fn next(&self, s: usize, a: usize) -> usize {
        self.next[s * self.k + a] as usize
    }

    /// `out = v · P`.
    fn transition(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (s, &mass) in v.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for a in 0..self.k {
                out[self.next(s, a)] += mass * self.emit(s, a);
            }
        }
    }

    /// Forward step on symbol `a`: `out[s'] = Σ_s v[s]·emit(s,a)·[next(s,a) = s']`.
    pub fn step(&self, v: &[f64], a: usize, out: &mut [f64]) {
        out.fill(0.0);
        for (s, &mass) in v.iter().enumerate() {
            if mass != 0.0 {
                out[self.next(s, a)] += mass * self.emit(s, a);
            }
        }
    }

    /// Unnormalized forward vector after reading `w` from `start`.
    pub fn forward(&self, start: &[f64], w: &[u8]) -> Vec<f64> {
        let mut v = start.to_vec();
        let mut buf = vec![0.0; self.states];
        for &a in w {
            self.step(&v, a as usize, &mut buf);
            std::mem::swap(&mut v, &mut buf);
        }
        v
    }

    pub fn stationary(&self) -> Result<StationaryLaw> {
        let mut pi = vec![1.0 / self.states as f64; self.states];
        let mut next = vec![0.0; self.states];
        let mut iterations = 0;
        loop {
            self.transition(&pi, &mut next);
            iterations += 1;
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|p| *p /= total);
            let change = max_abs_diff(&pi, &next);
            std::mem::swap(&mut pi, &mut next);
            if change <= 1e-14 || iterations >= MAX_ITERATIONS {
                break;
            }
        }
        self.transition(&pi, &mut next);
        let residual = max_abs_diff(&pi, &next);
        if residual > RESIDUAL_TOLERANCE {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        Ok(StationaryLaw {
            space: self.space,
            probs: pi,
            iterations,
            residual,
        })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution of a model's state chain.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryLaw {
    pub space: StateSpace,
    pub probs: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl StationaryLaw {
    /// For a word state space, the probability of the length-`h` word `w`.
    pub fn word_state(&self, w: &Word, k: usize) -> Option<f64> {
        match self.space {
            StateSpace::Words { depth } if depth == w.len() => {
                let idx = w
                    .as_slice()
                    .iter()
                    .fold(0usize, |acc, &s| acc * k + s as usize);
                Some(self.probs[idx])
            }
            _ => None,
        }
    }
}

/// Stationary law of a finite model over `A^h`, by power iteration from the
/// uniform vector.
pub fn stationary_law(model: &ProbabilisticContextTree) -> Result<StationaryLaw> {
    StateChain::for_tree(model)?.stationary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::model::fixtures;

    #[test]
    fn t0_two_state_solution() {
        let Model::Finite(t0) = fixtures::t0() else {
            unreachable!()
        };
        let law = stationary_law(&t0).unwrap();
        // π(1) = p(1|0) / (p(1|0) + p(0|1)) = 0.2 / 0.5
        assert!((law.probs[0] - 0.6).abs() < 1e-12);
        assert!((law.probs[1] - 0.4).abs() < 1e-12);
        assert!(law.residual <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn iid_rows_give_product_measure() {
        let a = Alphabet::binary();
        let m = ProbabilisticContextTree::parse(
            &a,
            &[
                ("1", vec![0.3, 0.7]),
                ("10", vec![0.3, 0.7]),
                ("00", vec![0.3, 0.7]),
            ],
        )
        .unwrap();
        let law = stationary_law(&m).unwrap();
        for w in a.words_of_len(2) {
            let expect: f64 = w
                .as_slice()
                .iter()
                .map(|&s| [0.3, 0.7][s as usize])
                .product();
            assert!((law.word_state(&w, 2).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let a = Alphabet::binary();
        let mut ctx: Vec<(String, Vec<f64>)> = (0..13)
            .map(|j| (format!("1{}", "0".repeat(j)), vec![0.5, 0.5]))
            .collect();
        ctx.push(("0".repeat(13), vec![0.5, 0.5]));
        let entries: Vec<(&str, Vec<f64>)> =
            ctx.iter().map(|(w, p)| (w.as_str(), p.clone())).collect();
        let m = ProbabilisticContextTree::parse(&a, &entries).unwrap();
        assert!(matches!(
            stationary_law(&m),
            Err(Error::ModelTooLarge { .. })
        ));
    }

    #[test]
    fn comb_renewal_chain_is_stationary() {
        let Model::Comb(c) = fixtures::u1() else {
            unreachable!()
        };
        let chain = StateChain::for_comb(&c);
        let law = chain.stationary().unwrap();
        assert_eq!(law.space, StateSpace::Renewal { fold: 29 });
        assert!((law.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Renewal balance: π_{j+1} = π_j (1 − q_j) below the fold.
        for j in 0..10 {
            assert!((law.probs[j + 1] - law.probs[j] * (1.0 - c.q(j))).abs() < 1e-12);
        }
    }
}
