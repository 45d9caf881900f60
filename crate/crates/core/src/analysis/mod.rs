//! Theoretical quantities of a model: stationary word probabilities,
//! loss-of-memory coefficients, divergence sets, and the exponential bounds
//! on count deviations, empirical transition probabilities and tree recovery.

pub mod bounds;
mod stationary;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::alphabet::Word;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tree::ContextOracle;

pub use bounds::{
    c_constant, count_deviation_bound, phat_deviation_bound, recovery_bound, rho_sequence,
    rho_sum_bound, RecoveryConstants, RhoSequence,
};
pub use stationary::{stationary_law, StateSpace, StationaryLaw, MAX_STATES, RESIDUAL_TOLERANCE};

use stationary::StateChain;

/// Two transition rows are considered different when some entry differs by
/// more than this.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-9;

/// Cap on the number of explicitly enumerated words in [`Analyzer::epsilon_sequence`].
const EPSILON_ENUMERATION_CAP: usize = 1 << 20;

/// `α_0..α_{k_max}` and the full sum `α = Σ_k (1 − α_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSequence {
    pub values: Vec<f64>,
    pub sum: f64,
}

/// `C_k` with the per-word gaps, and `D_k` (`+∞` when `C_k` is empty).
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceSet {
    pub k: usize,
    pub words: Vec<Word>,
    pub gaps: Vec<f64>,
    pub d_gap: f64,
}

/// A model together with its stationary law.
#[derive(Debug)]
pub struct Analyzer<'m> {
    model: &'m Model,
    chain: StateChain,
    law: StationaryLaw,
}

impl<'m> Analyzer<'m> {
    pub fn new(model: &'m Model) -> Result<Self> {
        let chain = StateChain::for_model(model)?;
        let law = chain.stationary()?;
        Ok(Self { model, chain, law })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn law(&self) -> &StationaryLaw {
        &self.law
    }

    fn k(&self) -> usize {
        self.model.alphabet().len()
    }

    /// Stationary probability of the cylinder `w`.
    pub fn word_probability(&self, w: &Word) -> f64 {
        self.chain
            .forward(&self.law.probs, w.as_slice())
            .iter()
            .sum()
    }

    /// `p(a|v)`. Read from the model when `v` ends in a context, otherwise
    /// `p(va)/p(v)`.
    pub fn conditional_probability(&self, a: u8, v: &Word) -> Result<f64> {
        if let Some(m) = self.model.lookup(v.as_slice()) {
            return Ok(m.row[a as usize]);
        }
        let before = self.chain.forward(&self.law.probs, v.as_slice());
        let pv: f64 = before.iter().sum();
        if !(pv > 0.0) {
            return Err(Error::UndefinedConditional(
                self.model.alphabet().render(v.as_slice()),
            ));
        }
        let mut after = vec![0.0; self.chain.states];
        self.chain.step(&before, a as usize, &mut after);
        Ok(after.iter().sum::<f64>() / pv)
    }

    fn conditional_row(&self, v: &Word) -> Result<Vec<f64>> {
        (0..self.k() as u8)
            .map(|a| self.conditional_probability(a, v))
            .collect()
    }

    /// `α_k` for any `k`.
    ///
    /// A past `u` that already ends in a context contributes 1: its next
    /// symbol law is fully determined.
    pub fn alpha(&self, k: usize) -> f64 {
        match self.model {
            Model::Comb(c) => {
                let spread = (c.q0() - c.q_inf()).abs();
                if k == 0 {
                    c.q0().min(c.q_inf()) + 1.0 - c.q0().max(c.q_inf())
                } else {
                    1.0 - spread * c.gamma().powi(k as i32)
                }
            }
            Model::Finite(m) => {
                let kk = self.k();
                let entries = m.entries();
                if k == 0 {
                    return (0..kk)
                        .map(|a| {
                            entries
                                .iter()
                                .map(|(_, r)| r[a])
                                .fold(f64::INFINITY, f64::min)
                        })
                        .sum();
                }
                if k >= m.height() {
                    return 1.0;
                }
                let mut best = f64::INFINITY;
                for u in m.alphabet().words_of_len(k) {
                    if m.lookup(u.as_slice()).is_some() {
                        best = best.min(1.0);
                        continue;
                    }
                    let above: Vec<&[f64]> = entries
                        .iter()
                        .filter(|(w, _)| u.is_proper_suffix_of(w))
                        .map(|(_, r)| *r)
                        .collect();
                    let sum: f64 = (0..kk)
                        .map(|a| above.iter().map(|r| r[a]).fold(f64::INFINITY, f64::min))
                        .sum();
                    best = best.min(sum);
                }
                best
            }
        }
    }

    /// `α_0..α_{k_max}` and `α`, including the closed-form tail for the comb.
    pub fn alpha_sequence(&self, k_max: usize) -> Result<AlphaSequence> {
        let values: Vec<f64> = (0..=k_max).map(|k| self.alpha(k)).collect();
        let sum = match self.model {
            Model::Finite(m) => (0..m.height().max(1)).map(|k| 1.0 - self.alpha(k)).sum(),
            Model::Comb(c) => {
                let spread = (c.q0() - c.q_inf()).abs();
                (1.0 - self.alpha(0)) + spread * c.gamma() / (1.0 - c.gamma())
            }
        };
        if !sum.is_finite() {
            return Err(Error::SummabilityViolation(format!("alpha = {sum}")));
        }
        Ok(AlphaSequence { values, sum })
    }

    /// `C = α₀ / (8e(α + α₀))`. Requires non-nullness (`α₀ > 0`).
    pub fn c_constant(&self) -> Result<f64> {
        let alphas = self.alpha_sequence(0)?;
        let alpha0 = alphas.values[0];
        if !(alpha0 > 0.0) {
            return Err(Error::PreconditionViolation(
                "transition probabilities are not bounded away from zero (alpha_0 = 0)".into(),
            ));
        }
        Ok(c_constant(alpha0, alphas.sum))
    }

    /// `C_k = {u ∈ τ|_k : p(·|u) ≠ p(·|suf(u))}` and `D_k`.
    pub fn divergence_set(&self, k: usize) -> Result<DivergenceSet> {
        let truncated = self.model.truncation(k);
        let mut words = Vec::new();
        let mut gaps = Vec::new();
        for u in truncated.iter() {
            let row = self.conditional_row(u)?;
            let parent = self.conditional_row(&u.suf())?;
            let gap = row
                .iter()
                .zip(&parent)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if gap > DIVERGENCE_TOLERANCE {
                words.push(u.clone());
                gaps.push(gap);
            }
        }
        let d_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(DivergenceSet {
            k,
            words,
            gaps,
            d_gap,
        })
    }

    /// `ε_k`: the smallest positive stationary probability of a word of
    /// length at most `k`.
    pub fn epsilon(&self, k: usize) -> Result<f64> {
        Ok(*self.epsilon_sequence(k)?.last().unwrap())
    }

    /// `ε_0..ε_{k_max}`.
    ///
    /// Words are enumerated only until the chain state they lead to is
    /// determined; from then on `p(wa) = p(w)·p(a|state)` and a min-product
    /// recursion over states covers all continuations.
    pub fn epsilon_sequence(&self, k_max: usize) -> Result<Vec<f64>> {
        let states = self.chain.states;
        let k = self.k();
        let mut eps: Vec<f64> = vec![1.0];
        let mut open: Vec<Vec<f64>> = vec![self.law.probs.clone()];
        let mut pool = vec![f64::INFINITY; states];
        let mut buf = vec![0.0; states];
        for _ in 1..=k_max {
            let mut next_pool = vec![f64::INFINITY; states];
            for (s, &p) in pool.iter().enumerate() {
                if p.is_finite() {
                    for a in 0..k {
                        let q = p * self.chain.emit(s, a);
                        if q > 0.0 {
                            let t = self.chain.next(s, a);
                            next_pool[t] = next_pool[t].min(q);
                        }
                    }
                }
            }
            let mut next_open = Vec::new();
            for v in &open {
                for a in 0..k {
                    self.chain.step(v, a, &mut buf);
                    let mass: f64 = buf.iter().sum();
                    if !(mass > 0.0) {
                        continue;
                    }
                    let mut support = buf.iter().enumerate().filter(|(_, &x)| x > 0.0);
                    let first = support.next().map(|(s, _)| s);
                    match (first, support.next()) {
                        (Some(s), None) => next_pool[s] = next_pool[s].min(mass),
                        _ => next_open.push(buf.clone()),
                    }
                }
            }
            if next_open.len() > EPSILON_ENUMERATION_CAP {
                return Err(Error::EnumerationTooLarge {
                    size: next_open.len() as u128,
                    limit: EPSILON_ENUMERATION_CAP as u128,
                });
            }
            let level_min = next_pool
                .iter()
                .copied()
                .chain(next_open.iter().map(|v| v.iter().sum::<f64>()))
                .fold(f64::INFINITY, f64::min);
            eps.push(eps.last().unwrap().min(level_min));
            pool = next_pool;
            open = next_open;
        }
        Ok(eps)
    }

    /// The smallest `d` strictly greater than
    /// `max_u min{k : ∃w ∈ C_k, u ≺ w}`, where `u` ranges over λ and the
    /// proper suffixes of elements of `τ|_K` that are not contexts. A `u`
    /// with no witness contributes 0.
    pub fn minimal_depth(&self, level: usize) -> Result<usize> {
        assert!(level >= 1, "truncation level must be at least 1");
        let truncated = self.model.truncation(level);
        let mut candidates = vec![Word::empty()];
        for w in truncated.iter() {
            candidates.extend(w.proper_suffixes().filter(|s| !s.is_empty()));
        }
        candidates.sort();
        candidates.dedup();
        let is_context = |u: &Word| match self.model {
            Model::Finite(m) => m.tree().contains(u),
            Model::Comb(_) => u.first_is_one_and_rest_zero(),
        };
        candidates.retain(|u| !is_context(u));

        let search_limit = match self.model {
            Model::Finite(m) => m.height().max(1),
            Model::Comb(c) => c.fold_depth().max(level) + 1,
        };
        let mut sets: BTreeMap<usize, DivergenceSet> = BTreeMap::new();
        let mut worst = 0;
        for u in &candidates {
            let mut found = 0;
            for k in (u.len() + 1)..=search_limit {
                if let std::collections::btree_map::Entry::Vacant(e) = sets.entry(k) {
                    e.insert(self.divergence_set(k)?);
                }
                if sets[&k].words.iter().any(|w| u.is_proper_suffix_of(w)) {
                    found = k;
                    break;
                }
            }
            worst = worst.max(found);
        }
        Ok(worst + 1)
    }

    /// Bound on `P(|N_n(wa) − (n−ℓ(w))p(wa)| > t)`.
    pub fn bound_count_deviation(&self, w: &Word, _a: u8, t: f64, n: usize) -> Result<f64> {
        count_deviation_bound(self.c_constant()?, w.len(), t, n)
    }

    /// Bound on `P(|p̂_n(a|w) − p(a|w)| > t)`.
    pub fn bound_phat_deviation(&self, w: &Word, _a: u8, t: f64, n: usize) -> Result<f64> {
        phat_deviation_bound(
            self.c_constant()?,
            self.k(),
            w.len(),
            self.word_probability(w),
            t,
            n,
        )
    }

    /// Constants of the recovery bound at truncation level `level` and depth `d`.
    pub fn recovery_constants(&self, level: usize, d: usize) -> Result<RecoveryConstants> {
        Ok(RecoveryConstants {
            alphabet_size: self.k(),
            c: self.c_constant()?,
            min_depth: self.minimal_depth(level)?,
            d_gap: self.divergence_set(d)?.d_gap,
            epsilon: self.epsilon(d)?,
        })
    }

    /// Bound on `P(τ̂|_K ≠ τ|_K)`.
    pub fn bound_recovery(&self, level: usize, d: usize, delta: f64, n: usize) -> Result<f64> {
        recovery_bound(&self.recovery_constants(level, d)?, d, delta, n)
    }

    /// Everything above for one model, as serialized by `vlmc analyze`.
    pub fn report(&self, opts: &ReportOptions) -> Result<BoundReport> {
        let alphas = self.alpha_sequence(opts.k_max)?;
        let c = self.c_constant()?;
        let rho_alphas: Vec<f64> = (0..=opts.rho_len).map(|k| self.alpha(k)).collect();
        let rho = rho_sequence(&rho_alphas);
        let render = |w: &Word| self.model.alphabet().render(w.as_slice());
        let divergence = (1..=opts.k_max)
            .map(|k| {
                self.divergence_set(k).map(|s| DivergenceEntry {
                    k,
                    words: s.words.iter().map(render).collect(),
                    d_gap: s.d_gap.is_finite().then_some(s.d_gap),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let d_min = (1..=opts.level)
            .map(|level| self.minimal_depth(level).map(|d| DepthEntry { level, d }))
            .collect::<Result<Vec<_>>>()?;
        let bounds = match opts.recovery {
            None => None,
            Some(q) => Some(self.recovery_entry(opts.level, q)?),
        };
        Ok(BoundReport {
            alpha_seq: alphas.values,
            alpha_sum: alphas.sum,
            c,
            divergence,
            epsilon: self.epsilon_sequence(opts.k_max)?,
            rho_seq: rho.values,
            rho_sum: rho.sum,
            d_min,
            bounds,
        })
    }

    fn recovery_entry(&self, level: usize, q: RecoveryQuery) -> Result<RecoveryEntry> {
        let d = match q.depth {
            Some(d) => d,
            None => self.minimal_depth(level)?,
        };
        let consts = self.recovery_constants(level, d)?;
        let delta = q.delta.unwrap_or(consts.d_gap / 2.0);
        let (value, error) = match recovery_bound(&consts, d, delta, q.n) {
            Ok(v) => (Some(v), None),
            Err(e) if e.is_precondition() => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        Ok(RecoveryEntry {
            level,
            d,
            delta,
            n: q.n,
            value,
            vacuous: value.map(|v| v >= 1.0),
            error,
        })
    }
}

impl Word {
    fn first_is_one_and_rest_zero(&self) -> bool {
        matches!(self.as_slice().split_first(), Some((1, rest)) if rest.iter().all(|&s| s == 0))
    }
}

/// Parameters of [`Analyzer::report`].
#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub k_max: usize,
    /// Largest truncation level for which the minimal depth is reported.
    pub level: usize,
    /// Number of ρ terms after `ρ_0`.
    pub rho_len: usize,
    pub recovery: Option<RecoveryQuery>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            k_max: 20,
            level: 1,
            rho_len: 100,
            recovery: None,
        }
    }
}

/// Evaluate the recovery bound at `n`, with `d` defaulting to the minimal
/// depth and `δ` to `D_d / 2`.
#[derive(Clone, Copy, Debug)]
pub struct RecoveryQuery {
    pub n: usize,
    pub depth: Option<usize>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceEntry {
    pub k: usize,
    #[serde(rename = "C_k")]
    pub words: Vec<String>,
    /// `null` when `C_k` is empty.
    #[serde(rename = "D_k")]
    pub d_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthEntry {
    #[serde(rename = "K")]
    pub level: usize,
    pub d: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryEntry {
    #[serde(rename = "K")]
    pub level: usize,
    pub d: usize,
    pub delta: f64,
    pub n: usize,
    pub value: Option<f64>,
    pub vacuous: Option<bool>,
    pub error: Option<String>,
}

/// Theoretical quantities of a model, serialized with fixed field names.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub alpha_seq: Vec<f64>,
    pub alpha_sum: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub divergence: Vec<DivergenceEntry>,
    pub epsilon: Vec<f64>,
    pub rho_seq: Vec<f64>,
    pub rho_sum: f64,
    pub d_min: Vec<DepthEntry>,
    pub bounds: Option<RecoveryEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::model::fixtures::{t0, t1, u1};
    use crate::tree::ProbabilisticContextTree;
    use std::f64::consts::E;

    fn w(s: &str) -> Word {
        Alphabet::binary().parse(s).unwrap()
    }

    #[test]
    fn t0_word_probabilities() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        assert!((an.word_probability(&w("01")) - 0.12).abs() < 1e-12);
        assert!((an.word_probability(&w("0000")) - 0.3072).abs() < 1e-12);
        assert_eq!(an.word_probability(&Word::empty()), 1.0);
    }

    #[test]
    fn t0_conditionals() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        assert_eq!(an.conditional_probability(1, &w("01")).unwrap(), 0.7);
        assert!((an.conditional_probability(1, &Word::empty()).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn t1_conditional_is_word_ratio() {
        let m = t1();
        let an = Analyzer::new(&m).unwrap();
        let ratio = an.word_probability(&w("001")) / an.word_probability(&w("00"));
        assert!((an.conditional_probability(1, &w("00")).unwrap() - ratio).abs() < 1e-14);
    }

    #[test]
    fn alpha_examples() {
        let m = t0();
        let a = Analyzer::new(&m).unwrap().alpha_sequence(5).unwrap();
        assert!((a.values[0] - 0.5).abs() < 1e-15);
        assert!(a.values[1..].iter().all(|&x| x == 1.0));
        assert!((a.sum - 0.5).abs() < 1e-15);

        let m = u1();
        let a = Analyzer::new(&m).unwrap().alpha_sequence(10).unwrap();
        assert!((a.values[0] - 0.7).abs() < 1e-15);
        for k in 1..=10 {
            assert!((a.values[k] - (1.0 - 0.3 * 0.5f64.powi(k as i32))).abs() < 1e-15);
        }
        assert!((a.sum - 0.6).abs() < 1e-15);

        let m: Model =
            ProbabilisticContextTree::memoryless(Alphabet::binary(), vec![0.3, 0.7]).into();
        let a = Analyzer::new(&m).unwrap().alpha_sequence(3).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert_eq!(a.sum, 0.0);
    }

    #[test]
    fn alpha_t1_by_enumeration() {
        // α_1: u = "1" is a context → 1; u = "0": contexts above are 10, 100, 000
        // with p(1|·) = 0.6, 0.4, 0.2 → min p(0|·) + min p(1|·) = 0.4 + 0.2.
        // α_2: u = "00": contexts 100, 000 → 0.6 + 0.2; u = "10" is a context.
        let m = t1();
        let a = Analyzer::new(&m).unwrap().alpha_sequence(4).unwrap();
        let expect = [0.4 + 0.2, 0.6, 0.8, 1.0, 1.0];
        for (x, e) in a.values.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15, "{:?}", a.values);
        }
        assert!((a.sum - (0.4 + 0.4 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn c_constant_for_t0() {
        let m = t0();
        let c = Analyzer::new(&m).unwrap().c_constant().unwrap();
        assert!((c - 1.0 / (16.0 * E)).abs() < 1e-15);
    }

    #[test]
    fn divergence_t0() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        let s = an.divergence_set(2).unwrap();
        assert_eq!(s.words, vec![w("0"), w("1")]);
        assert!((s.d_gap - 0.2).abs() < 1e-12);
    }

    #[test]
    fn divergence_iid_is_empty() {
        let m: Model = ProbabilisticContextTree::binary(&[("0", 0.3), ("1", 0.3)])
            .unwrap()
            .into();
        let an = Analyzer::new(&m).unwrap();
        let s = an.divergence_set(2).unwrap();
        assert!(s.words.is_empty());
        assert_eq!(s.d_gap, f64::INFINITY);
        assert_eq!(an.minimal_depth(1).unwrap(), 1);
    }

    #[test]
    fn epsilon_t0() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        assert_eq!(an.epsilon(0).unwrap(), 1.0);
        assert!((an.epsilon(1).unwrap() - 0.4).abs() < 1e-12);
        assert!((an.epsilon(2).unwrap() - 0.12).abs() < 1e-12);
    }

    #[test]
    fn minimal_depth_examples() {
        let m = t0();
        assert_eq!(Analyzer::new(&m).unwrap().minimal_depth(1).unwrap(), 2);
        let m = t1();
        assert_eq!(Analyzer::new(&m).unwrap().minimal_depth(3).unwrap(), 4);
        let m = u1();
        let an = Analyzer::new(&m).unwrap();
        assert_eq!(an.minimal_depth(2).unwrap(), 3);
    }

    #[test]
    fn report_serializes_fixed_fields() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        let opts = ReportOptions {
            k_max: 4,
            level: 1,
            rho_len: 30,
            recovery: Some(RecoveryQuery {
                n: 1_000_000,
                depth: None,
                delta: None,
            }),
        };
        let v = serde_json::to_value(an.report(&opts).unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expect = vec![
            "alpha_seq",
            "alpha_sum",
            "C",
            "D",
            "epsilon",
            "rho_seq",
            "rho_sum",
            "d_min",
            "bounds",
        ];
        expect.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expect);
        assert_eq!(v["d_min"][0]["d"], 2);
        assert_eq!(v["bounds"]["d"], 2);
        assert_eq!(v["bounds"]["vacuous"], true);
    }

    #[test]
    fn t0_bound_values() {
        let m = t0();
        let an = Analyzer::new(&m).unwrap();
        let count = an.bound_count_deviation(&w("0"), 0, 100.0, 1001).unwrap();
        assert!((count - 1.287_776_536_090_07).abs() < 1e-9, "{count}");
        let phat = an.bound_phat_deviation(&w("0"), 0, 0.1, 10_000).unwrap();
        assert!((phat - 5.632_581_620_677_69).abs() < 1e-9, "{phat}");
        let rec = an.bound_recovery(1, 2, 0.1, 1_000_000).unwrap();
        assert!((rec - 90.879_590_611_947_44).abs() < 1e-7, "{rec}");
    }
}
