//! Substring counts `N_n(w)` of a sample and the smoothed empirical
//! transition probabilities built from them.

use crate::alphabet::{Alphabet, Word};
use crate::error::{Error, Result};
use crate::sampler::SamplePath;

const NO_CHILD: u32 = u32::MAX;

/// Counts of every substring of length at most `d_plus` of a sample, in a
/// child-array trie rooted at λ and keyed by alphabet index.
#[derive(Clone, Debug)]
pub struct CountTrie {
    alphabet: Alphabet,
    d_plus: usize,
    n: usize,
    children: Vec<u32>,
    counts: Vec<u64>,
    /// Last `d_plus` symbols of the sample.
    tail: Vec<u8>,
}

/// Counts all substrings of length at most `d + 1`.
pub fn build_counts(sample: &SamplePath, d: usize) -> Result<CountTrie> {
    CountTrie::build(sample.alphabet(), sample.symbols(), d)
}

impl CountTrie {
    pub fn build(alphabet: &Alphabet, symbols: &[u8], d: usize) -> Result<Self> {
        let n = symbols.len();
        let d_plus = d + 1;
        if d_plus > n {
            return Err(Error::DepthTooLarge { depth: d, n });
        }
        let k = alphabet.len();
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= k) {
            return Err(Error::InvalidModel(format!(
                "symbol index {s} out of range"
            )));
        }
        let mut trie = CountTrie {
            alphabet: alphabet.clone(),
            d_plus,
            n,
            children: vec![NO_CHILD; k],
            counts: vec![n as u64],
            tail: symbols[n - d_plus..].to_vec(),
        };
        for t in 0..n {
            let mut node = 0;
            for &s in &symbols[t..n.min(t + d_plus)] {
                let slot = node * k + s as usize;
                node = match trie.children[slot] {
                    NO_CHILD => {
                        let fresh = trie.counts.len();
                        trie.children[slot] = fresh as u32;
                        trie.children.extend(std::iter::repeat_n(NO_CHILD, k));
                        trie.counts.push(0);
                        fresh
                    }
                    c => c as usize,
                };
                trie.counts[node] += 1;
            }
        }
        Ok(trie)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Sample length `n`.
    pub fn sample_len(&self) -> usize {
        self.n
    }

    /// Longest counted word length (`d + 1`).
    pub fn depth_budget(&self) -> usize {
        self.d_plus
    }

    /// Stored nodes, λ included.
    pub fn node_count(&self) -> usize {
        self.counts.len()
    }

    fn node(&self, w: &[u8]) -> Option<usize> {
        let k = self.alphabet.len();
        let mut node = 0;
        for &s in w {
            match self.children[node * k + s as usize] {
                NO_CHILD => return None,
                c => node = c as usize,
            }
        }
        Some(node)
    }

    fn check_len(&self, len: usize, max: usize) -> Result<()> {
        if len > max {
            Err(Error::DepthExceeded { len, max })
        } else {
            Ok(())
        }
    }

    /// `N_n(w)`; 0 for absent words.
    pub fn count(&self, w: &Word) -> Result<u64> {
        self.check_len(w.len(), self.d_plus)?;
        Ok(self.node(w.as_slice()).map_or(0, |x| self.counts[x]))
    }

    /// `N_n(w·) = Σ_b N_n(wb)`.
    ///
    /// Words of length `d + 1` have no stored extensions; for them the sum
    /// equals `N_n(w)` minus one when the sample ends with `w`.
    pub fn count_dot(&self, w: &Word) -> Result<u64> {
        self.check_len(w.len(), self.d_plus)?;
        let Some(node) = self.node(w.as_slice()) else {
            return Ok(0);
        };
        if w.len() < self.d_plus {
            let k = self.alphabet.len();
            Ok(self.children[node * k..(node + 1) * k]
                .iter()
                .filter(|&&c| c != NO_CHILD)
                .map(|&c| self.counts[c as usize])
                .sum())
        } else {
            let ends_here = self.tail.ends_with(w.as_slice());
            Ok(self.counts[node] - u64::from(ends_here))
        }
    }

    /// `p̂_n(a|w)` as the exact ratio `(N_n(wa)+1, N_n(w·)+|A|)`.
    pub fn empirical_ratio(&self, a: u8, w: &Word) -> Result<(u64, u64)> {
        self.check_len(w.len(), self.d_plus - 1)?;
        let num = self.count(&w.append(a))? + 1;
        let den = self.count_dot(w)? + self.alphabet.len() as u64;
        Ok((num, den))
    }

    /// `p̂_n(a|w) = (N_n(wa)+1)/(N_n(w·)+|A|)`.
    pub fn empirical_prob(&self, a: u8, w: &Word) -> Result<f64> {
        let (num, den) = self.empirical_ratio(a, w)?;
        Ok(num as f64 / den as f64)
    }

    /// `(p̂_n(a|w))_{a∈A}`.
    pub fn empirical_row(&self, w: &Word) -> Result<Vec<f64>> {
        (0..self.alphabet.len() as u8)
            .map(|a| self.empirical_prob(a, w))
            .collect()
    }

    /// `Δ_n(w) = max_a |p̂_n(a|w) − p̂_n(a|suf(w))|`.
    pub fn delta(&self, w: &Word) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::PreconditionViolation(
                "delta is undefined for the empty word".into(),
            ));
        }
        let own = self.empirical_row(w)?;
        let parent = self.empirical_row(&w.suf())?;
        Ok(own
            .iter()
            .zip(&parent)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Every stored word other than λ with its count, shortest first and
    /// lexicographic within a length.
    pub fn dump(&self) -> Vec<(Word, u64)> {
        let k = self.alphabet.len();
        let mut out = Vec::new();
        let mut level: Vec<(usize, Word)> = vec![(0, Word::empty())];
        while !level.is_empty() {
            let mut next = Vec::new();
            for (node, w) in &level {
                for a in 0..k {
                    let c = self.children[node * k + a];
                    if c != NO_CHILD {
                        let child = w.append(a as u8);
                        out.push((child.clone(), self.counts[c as usize]));
                        next.push((c as usize, child));
                    }
                }
            }
            level = next;
        }
        out
    }

    /// Stored words of length `1..=max_len` in depth-first alphabet order.
    pub(crate) fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let k = self.alphabet.len();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Word::empty())];
        while let Some((node, w)) = stack.pop() {
            if !w.is_empty() {
                out.push(w.clone());
            }
            if w.len() == max_len {
                continue;
            }
            for a in (0..k).rev() {
                let c = self.children[node * k + a];
                if c != NO_CHILD {
                    stack.push((c as usize, w.append(a as u8)));
                }
            }
        }
        out
    }
}
