//! The algorithm Context: estimate a context tree from substring counts.
//!
//! A word `w` with `1 ≤ ℓ(w) ≤ d` is kept when
//!
//! * some symbol `a` has `N_n(aw·) > 0` and `Δ_n(a·suf(w)) > δ` (the same
//!   `a` in both clauses), and
//! * every observed extension `uw` with `1 ≤ ℓ(u) ≤ d − ℓ(w)` and
//!   `N_n(uw·) ≥ 1` has `Δ_n(uw) ≤ δ`.
//!
//! Comparisons with `δ` are exact.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Word};
use crate::counts::CountTrie;
use crate::error::{Error, Result};
use crate::sampler::Provenance;
use crate::tree::{truncate, ContextTree};

/// Cap on `|A|^d` for [`estimate_brute_force`].
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationParams {
    pub delta: f64,
    pub depth: usize,
    /// Truncation level for comparisons; the estimate itself ignores it.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
}

impl EstimationParams {
    pub fn new(delta: f64, depth: usize) -> Self {
        Self {
            delta,
            depth,
            level: None,
        }
    }

    /// `δ ≥ 0` and `1 ≤ d < n`.
    ///
    /// `δ = 0` is accepted: it keeps every context whose extensions show no
    /// empirical difference at all.
    fn check(&self, n: usize) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "delta = {} must be a non-negative number",
                self.delta
            )));
        }
        if self.depth == 0 {
            return Err(Error::InvalidConfig("depth must be at least 1".into()));
        }
        if self.depth >= n {
            return Err(Error::DegenerateSample {
                n,
                depth: self.depth,
            });
        }
        Ok(())
    }
}

/// An estimated tree with its empirical transition rows.
///
/// An empty tree is the memoryless model; its single row is the marginal
/// `p̂_n(·|λ)`, stored under λ.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub tree: ContextTree,
    pub rows: Vec<(Word, Vec<f64>)>,
    pub params: Option<EstimationParams>,
    pub provenance: Option<Provenance>,
}

impl EstimationResult {
    pub fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    /// Whether `τ̂|_K = other|_K`.
    pub fn matches_at(&self, other: &ContextTree, level: usize) -> bool {
        trees_equal_truncated(&self.tree, other, level)
    }
}

/// Runs the algorithm Context on `trie`.
pub fn estimate(trie: &CountTrie, params: EstimationParams) -> Result<EstimationResult> {
    params.check(trie.sample_len())?;
    let d = params.depth;
    if d + 1 > trie.depth_budget() {
        return Err(Error::DepthExceeded {
            len: d + 1,
            max: trie.depth_budget(),
        });
    }
    let delta = params.delta;
    let k = trie.alphabet().len() as u8;

    let observed = trie.words_up_to(d);
    // `blocked` holds every word with a strict observed extension `uw`
    // (ℓ(uw) ≤ d, N(uw·) ≥ 1) whose Δ exceeds δ. Longest words first so the
    // flag travels down suffix chains.
    let mut by_len: Vec<&Word> = observed.iter().collect();
    by_len.sort_by_key(|w| std::cmp::Reverse(w.len()));
    let mut blocked: BTreeSet<Word> = BTreeSet::new();
    for y in by_len {
        if y.len() < 2 {
            break;
        }
        if blocked.contains(y) || (trie.count_dot(y)? >= 1 && trie.delta(y)? > delta) {
            blocked.insert(y.suf());
        }
    }

    let mut contexts = Vec::new();
    for w in &observed {
        if blocked.contains(w) {
            continue;
        }
        let parent = w.suf();
        let mut kept = false;
        for a in 0..k {
            if trie.count_dot(&w.prepend(a))? > 0 && trie.delta(&parent.prepend(a))? > delta {
                kept = true;
                break;
            }
        }
        if kept {
            contexts.push(w.clone());
        }
    }
    let tree = ContextTree::new(trie.alphabet().clone(), contexts)?;
    let mut result = attach_rows(trie, tree)?;
    result.params = Some(params);
    Ok(result)
}

/// Evaluates the defining predicate for every word of length `1..=d` by
/// direct scanning of the sample. Independent of [`CountTrie`].
pub fn estimate_brute_force(
    alphabet: &Alphabet,
    sample: &[u8],
    params: EstimationParams,
) -> Result<EstimationResult> {
    let n = sample.len();
    params.check(n)?;
    let (d, delta) = (params.depth, params.delta);
    let k = alphabet.len();
    let size = (k as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut naive = NaiveCounts::new(sample, k);
    let mut contexts = Vec::new();
    for len in 1..=d {
        for w in alphabet.words_of_len(len) {
            let first = (0..k as u8).any(|a| {
                let aw = w.prepend(a);
                let asw = w.suf().prepend(a);
                naive.count_dot(&aw) > 0 && naive.delta(&asw) > delta
            });
            if !first {
                continue;
            }
            let second = (1..=d - len).all(|ul| {
                alphabet.words_of_len(ul).all(|u| {
                    let uw = w.prepend_word(&u);
                    naive.count_dot(&uw) < 1 || naive.delta(&uw) <= delta
                })
            });
            if second {
                contexts.push(w);
            }
        }
    }
    let tree = ContextTree::new(alphabet.clone(), contexts)?;
    let rows = if tree.is_empty() {
        vec![(Word::empty(), naive.row(&Word::empty()))]
    } else {
        tree.iter().map(|w| (w.clone(), naive.row(w))).collect()
    };
    Ok(EstimationResult {
        tree,
        rows,
        params: Some(params),
        provenance: None,
    })
}

/// Window-scanning counts with memoization.
struct NaiveCounts<'s> {
    sample: &'s [u8],
    k: usize,
    memo: HashMap<Vec<u8>, u64>,
}

impl<'s> NaiveCounts<'s> {
    fn new(sample: &'s [u8], k: usize) -> Self {
        Self {
            sample,
            k,
            memo: HashMap::new(),
        }
    }

    fn count(&mut self, w: &[u8]) -> u64 {
        if let Some(&c) = self.memo.get(w) {
            return c;
        }
        let c = if w.is_empty() {
            self.sample.len() as u64
        } else {
            self.sample.windows(w.len()).filter(|x| *x == w).count() as u64
        };
        self.memo.insert(w.to_vec(), c);
        c
    }

    fn count_dot(&mut self, w: &Word) -> u64 {
        (0..self.k as u8)
            .map(|b| self.count(w.append(b).as_slice()))
            .sum()
    }

    fn row(&mut self, w: &Word) -> Vec<f64> {
        let den = self.count_dot(w) + self.k as u64;
        (0..self.k as u8)
            .map(|a| (self.count(w.append(a).as_slice()) + 1) as f64 / den as f64)
            .collect()
    }

    fn delta(&mut self, w: &Word) -> f64 {
        let own = self.row(w);
        let parent = self.row(&w.suf());
        own.iter()
            .zip(&parent)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Attaches `p̂_n(·|w)` to every context; an empty tree gets the marginal row.
pub fn attach_rows(trie: &CountTrie, tree: ContextTree) -> Result<EstimationResult> {
    let rows = if tree.is_empty() {
        vec![(Word::empty(), trie.empirical_row(&Word::empty())?)]
    } else {
        tree.iter()
            .map(|w| Ok((w.clone(), trie.empirical_row(w)?)))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(EstimationResult {
        tree,
        rows,
        params: None,
        provenance: None,
    })
}

/// `t1|_K = t2|_K` as sets.
///
/// # Panics
/// If `level == 0`.
pub fn trees_equal_truncated(t1: &ContextTree, t2: &ContextTree, level: usize) -> bool {
    truncate(t1, level).iter().eq(truncate(t2, level).iter())
}
