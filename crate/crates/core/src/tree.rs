//! Context trees, probabilistic context trees and context lookup.

use std::borrow::Cow;
use std::collections::BTreeSet;

use crate::alphabet::{Alphabet, Word};
use crate::error::{Error, Result};

/// Tolerance on probability row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A finite set of contexts (words of length at least one).
///
/// The set may be empty, which denotes the memoryless model. Construction
/// does not enforce the suffix property; use [`validate_tree`] for that.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextTree {
    alphabet: Alphabet,
    contexts: BTreeSet<Word>,
}

impl ContextTree {
    pub fn new(alphabet: Alphabet, contexts: impl IntoIterator<Item = Word>) -> Result<Self> {
        let contexts: BTreeSet<Word> = contexts.into_iter().collect();
        for w in &contexts {
            if w.is_empty() {
                return Err(Error::InvalidModel(
                    "contexts must be non-empty words".into(),
                ));
            }
            if let Some(&s) = w.as_slice().iter().find(|&&s| s as usize >= alphabet.len()) {
                return Err(Error::InvalidModel(format!(
                    "symbol index {s} out of range"
                )));
            }
        }
        Ok(Self { alphabet, contexts })
    }

    /// Builds a tree from symbol strings; duplicates collapse.
    pub fn parse<S: AsRef<str>>(alphabet: &Alphabet, words: &[S]) -> Result<Self> {
        let contexts = words
            .iter()
            .map(|s| alphabet.parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet.clone(), contexts)
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            contexts: BTreeSet::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.contexts.contains(w)
    }

    /// Contexts in lexicographic (depth-first, alphabet order) order.
    pub fn iter(&self) -> impl Iterator<Item = &Word> {
        self.contexts.iter()
    }

    /// Height: the maximum context length (0 for the empty tree).
    pub fn height(&self) -> usize {
        self.contexts.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Contexts rendered with the alphabet's symbols.
    pub fn rendered(&self) -> Vec<String> {
        self.contexts
            .iter()
            .map(|w| self.alphabet.render(w.as_slice()))
            .collect()
    }

    /// The context of `past` (its unique suffix in the tree), assuming the
    /// suffix property holds.
    pub fn find_suffix_of(&self, past: &[u8]) -> Option<&Word> {
        (1..=past.len().min(self.height())).find_map(|l| {
            self.contexts
                .get(&Word::from_slice(&past[past.len() - l..]))
        })
    }
}

/// Outcome of [`validate_tree`] / [`validate_model`]. Valid iff every list is
/// empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// Pairs `(s, w)` of contexts with `s ≺ w`.
    pub suffix_violations: Vec<(Word, Word)>,
    /// Pairs `(w, s)` where replacing context `w` by its proper suffix `s`
    /// keeps the suffix property.
    pub irreducibility_violations: Vec<(Word, Word)>,
    /// Words `a·u` such that no past ending in them has a context.
    pub uncovered: Vec<Word>,
    /// Contexts whose row does not sum to one.
    pub row_sum_violations: Vec<Word>,
    /// `(context, symbol)` pairs with a non-positive transition probability.
    pub non_null_violations: Vec<(Word, u8)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.suffix_violations.is_empty()
            && self.irreducibility_violations.is_empty()
            && self.uncovered.is_empty()
            && self.row_sum_violations.is_empty()
            && self.non_null_violations.is_empty()
    }

    pub fn has_suffix_property(&self) -> bool {
        self.suffix_violations.is_empty()
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducibility_violations.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }

    /// Human readable summary of the violations.
    pub fn describe(&self, alphabet: &Alphabet) -> String {
        let r = |w: &Word| format!("{:?}", alphabet.render(w.as_slice()));
        let mut parts = Vec::new();
        for (s, w) in &self.suffix_violations {
            parts.push(format!("{} is a suffix of {}", r(s), r(w)));
        }
        for (w, s) in &self.irreducibility_violations {
            parts.push(format!("{} can be replaced by {}", r(w), r(s)));
        }
        for w in &self.uncovered {
            parts.push(format!("pasts ending in {} have no context", r(w)));
        }
        for w in &self.row_sum_violations {
            parts.push(format!("row of {} does not sum to 1", r(w)));
        }
        for (w, a) in &self.non_null_violations {
            parts.push(format!(
                "p({}|{}) is not positive",
                alphabet.symbol(*a),
                r(w)
            ));
        }
        parts.join("; ")
    }
}

fn has_suffix_property(set: &BTreeSet<Word>) -> bool {
    set.iter().all(|w| {
        w.proper_suffixes()
            .all(|s| s.is_empty() || !set.contains(&s))
    })
}

/// Checks the suffix property, irreducibility and completeness of a tree.
///
/// Irreducibility is checked literally: for every context `w` and every
/// non-empty proper suffix `s`, the set with `w` replaced by `s` must violate
/// the suffix property.
pub fn validate_tree(tree: &ContextTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    let set = &tree.contexts;

    for w in set {
        for s in w.proper_suffixes() {
            if !s.is_empty() && set.contains(&s) {
                report.suffix_violations.push((s, w.clone()));
            }
        }
    }

    if report.suffix_violations.is_empty() {
        for w in set {
            for s in w.proper_suffixes().filter(|s| !s.is_empty()) {
                let mut replaced = set.clone();
                replaced.remove(w);
                replaced.insert(s.clone());
                if has_suffix_property(&replaced) {
                    report.irreducibility_violations.push((w.clone(), s));
                }
            }
        }
        report.uncovered = uncovered_words(tree);
    }
    report
}

/// Words `a·u` where `u` is a proper suffix of some context (an internal
/// node) but `a·u` is neither a context nor a suffix of one.
fn uncovered_words(tree: &ContextTree) -> Vec<Word> {
    if tree.is_empty() {
        return Vec::new();
    }
    let mut nodes: BTreeSet<Word> = BTreeSet::new();
    let mut internal: BTreeSet<Word> = BTreeSet::new();
    for w in &tree.contexts {
        nodes.insert(w.clone());
        for s in w.proper_suffixes() {
            nodes.insert(s.clone());
            internal.insert(s);
        }
    }
    let k = tree.alphabet.len() as u8;
    let mut out = Vec::new();
    for u in &internal {
        for a in 0..k {
            let child = u.prepend(a);
            if !nodes.contains(&child) {
                out.push(child);
            }
        }
    }
    out.sort();
    out
}

/// `τ|_K`: contexts of length at most `k`, plus the length-`k` suffixes of
/// longer contexts.
///
/// # Panics
/// If `k == 0`.
pub fn truncate(tree: &ContextTree, k: usize) -> ContextTree {
    assert!(k >= 1, "truncation level must be at least 1");
    let contexts = tree
        .contexts
        .iter()
        .map(|w| if w.len() <= k { w.clone() } else { w.tail(k) })
        .collect();
    ContextTree {
        alphabet: tree.alphabet.clone(),
        contexts,
    }
}

/// Result of matching a past against a model.
#[derive(Clone, Debug, PartialEq)]
pub enum Lookup {
    Context { context: Word, row: Vec<f64> },
    NeedMorePast,
}

/// A context matched at the end of a past: its length and transition row.
#[derive(Clone, Debug)]
pub struct ContextMatch<'a> {
    pub len: usize,
    pub row: Cow<'a, [f64]>,
}

/// A possibly unbounded context tree, queried lazily.
///
/// Implementations must be consistent: if `lookup(p)` resolves, then
/// `lookup(q ++ p)` resolves to the same context for every `q`.
pub trait ContextOracle: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    /// Matches the end of `past` (symbol indices, most recent last).
    fn lookup(&self, past: &[u8]) -> Option<ContextMatch<'_>>;
}

/// Returns the context of `past` with its transition row.
pub fn context_of<O: ContextOracle + ?Sized>(model: &O, past: &Word) -> Result<Lookup> {
    let alphabet = model.alphabet();
    if let Some(&s) = past
        .as_slice()
        .iter()
        .find(|&&s| s as usize >= alphabet.len())
    {
        return Err(Error::InvalidSymbol(
            std::char::from_digit(s as u32, 36).unwrap_or('?'),
        ));
    }
    Ok(match model.lookup(past.as_slice()) {
        Some(m) => Lookup::Context {
            context: past.tail(m.len),
            row: m.row.into_owned(),
        },
        None => Lookup::NeedMorePast,
    })
}

const NO_CHILD: u32 = u32::MAX;

/// Reversed trie over contexts: walking from the root follows the past from
/// the most recent symbol backwards.
#[derive(Clone, Debug)]
struct ContextIndex {
    k: usize,
    children: Vec<u32>,
    /// Row index for nodes that are contexts.
    leaf: Vec<Option<u32>>,
}

impl ContextIndex {
    fn build(k: usize, contexts: &[Word]) -> Self {
        let mut idx = ContextIndex {
            k,
            children: vec![NO_CHILD; k],
            leaf: vec![None],
        };
        for (row, w) in contexts.iter().enumerate() {
            let mut node = 0usize;
            for &s in w.as_slice().iter().rev() {
                let slot = node * k + s as usize;
                if idx.children[slot] == NO_CHILD {
                    idx.children[slot] = idx.leaf.len() as u32;
                    idx.leaf.push(None);
                    idx.children.extend(std::iter::repeat_n(NO_CHILD, k));
                }
                node = idx.children[slot] as usize;
            }
            idx.leaf[node] = Some(row as u32);
        }
        idx
    }

    /// Returns `(context length, row index)`.
    fn find(&self, past: &[u8]) -> Option<(usize, usize)> {
        let mut node = 0usize;
        for (depth, &s) in past.iter().rev().enumerate() {
            let next = self.children[node * self.k + s as usize];
            if next == NO_CHILD {
                return None;
            }
            node = next as usize;
            if let Some(row) = self.leaf[node] {
                return Some((depth + 1, row as usize));
            }
        }
        None
    }
}

/// A finite context tree with one transition row per context.
///
/// The empty tree carries a single row: the memoryless model.
#[derive(Clone, Debug)]
pub struct ProbabilisticContextTree {
    tree: ContextTree,
    /// Rows in the iteration order of `tree`.
    rows: Vec<Vec<f64>>,
    index: ContextIndex,
}

impl PartialEq for ProbabilisticContextTree {
    fn eq(&self, other: &Self) -> bool {
        self.tree == other.tree && self.rows == other.rows
    }
}

impl ProbabilisticContextTree {
    /// Builds a model from `(context, row)` pairs. An empty context list is
    /// rejected; use [`ProbabilisticContextTree::memoryless`] or a single
    /// `(λ, row)` entry for the memoryless model.
    ///
    /// Requires the suffix property and well-formed rows (length `|A|`,
    /// entries in `[0, 1]`, sum 1). Irreducibility, completeness and
    /// non-nullness are reported by [`validate_model`].
    pub fn new(alphabet: Alphabet, entries: Vec<(Word, Vec<f64>)>) -> Result<Self> {
        let k = alphabet.len();
        for (w, row) in &entries {
            if row.len() != k {
                return Err(Error::InvalidModel(format!(
                    "row of {:?} has {} entries, alphabet has {k}",
                    alphabet.render(w.as_slice()),
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "row of {:?} has entries outside [0, 1]",
                    alphabet.render(w.as_slice())
                )));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "row of {:?} does not sum to 1",
                    alphabet.render(w.as_slice())
                )));
            }
        }
        if entries.len() == 1 && entries[0].0.is_empty() {
            return Ok(Self::memoryless(
                alphabet,
                entries.into_iter().next().unwrap().1,
            ));
        }
        if entries.is_empty() {
            return Err(Error::InvalidModel("model has no contexts".into()));
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::InvalidModel("duplicate context".into()));
        }
        let tree = ContextTree::new(alphabet, entries.iter().map(|(w, _)| w.clone()))?;
        let report = validate_tree(&tree);
        if !report.has_suffix_property() {
            return Err(Error::InvalidModel(report.describe(tree.alphabet())));
        }
        let words: Vec<Word> = tree.iter().cloned().collect();
        let index = ContextIndex::build(k, &words);
        let rows = entries.into_iter().map(|(_, r)| r).collect();
        Ok(Self { tree, rows, index })
    }

    /// Parses `(context string, row)` pairs.
    pub fn parse(alphabet: &Alphabet, entries: &[(&str, Vec<f64>)]) -> Result<Self> {
        let entries = entries
            .iter()
            .map(|(w, r)| Ok((alphabet.parse(w)?, r.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet.clone(), entries)
    }

    /// Binary model from `p(1|w)` values.
    pub fn binary(entries: &[(&str, f64)]) -> Result<Self> {
        let entries: Vec<(&str, Vec<f64>)> = entries
            .iter()
            .map(|&(w, p1)| (w, vec![1.0 - p1, p1]))
            .collect();
        Self::parse(&Alphabet::binary(), &entries)
    }

    /// The memoryless model: i.i.d. symbols with law `row`.
    pub fn memoryless(alphabet: Alphabet, row: Vec<f64>) -> Self {
        let k = alphabet.len();
        Self {
            tree: ContextTree::empty(alphabet),
            rows: vec![row],
            index: ContextIndex::build(k, &[]),
        }
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    pub fn is_memoryless(&self) -> bool {
        self.tree.is_empty()
    }

    /// `(context, row)` pairs in tree order; the memoryless model yields a
    /// single `(λ, row)`.
    pub fn entries(&self) -> Vec<(Word, &[f64])> {
        if self.is_memoryless() {
            return vec![(Word::empty(), &self.rows[0])];
        }
        self.tree
            .iter()
            .cloned()
            .zip(self.rows.iter().map(Vec::as_slice))
            .collect()
    }

    /// Row of a context of the tree.
    pub fn row(&self, context: &Word) -> Option<&[f64]> {
        if self.is_memoryless() {
            return context.is_empty().then(|| self.rows[0].as_slice());
        }
        self.tree
            .iter()
            .position(|w| w == context)
            .map(|i| self.rows[i].as_slice())
    }
}

impl ContextOracle for ProbabilisticContextTree {
    fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    fn lookup(&self, past: &[u8]) -> Option<ContextMatch<'_>> {
        if self.is_memoryless() {
            return Some(ContextMatch {
                len: 0,
                row: Cow::Borrowed(&self.rows[0]),
            });
        }
        self.index.find(past).map(|(len, row)| ContextMatch {
            len,
            row: Cow::Borrowed(&self.rows[row]),
        })
    }
}

/// Full validation of a probabilistic context tree: tree structure plus row
/// sums and non-nullness.
pub fn validate_model(model: &ProbabilisticContextTree) -> ValidationReport {
    let mut report = validate_tree(model.tree());
    for (w, row) in model.entries() {
        if (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
            report.row_sum_violations.push(w.clone());
        }
        for (a, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                report.non_null_violations.push((w.clone(), a as u8));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(words: &[&str]) -> ContextTree {
        ContextTree::parse(&Alphabet::binary(), words).unwrap()
    }

    fn t1() -> ProbabilisticContextTree {
        ProbabilisticContextTree::binary(&[("1", 0.3), ("10", 0.6), ("100", 0.4), ("000", 0.2)])
            .unwrap()
    }

    #[test]
    fn valid_tree() {
        let r = validate_tree(&bin(&["1", "10", "100", "000"]));
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn duplicates_collapse_and_suffix_violation_reported() {
        let t = bin(&["1", "01", "1"]);
        assert_eq!(t.len(), 2);
        let r = validate_tree(&t);
        assert_eq!(r.suffix_violations.len(), 1);
        assert!(!r.is_valid());

        let r = validate_tree(&bin(&["1", "11"]));
        let a = Alphabet::binary();
        assert_eq!(
            r.suffix_violations,
            vec![(a.parse("1").unwrap(), a.parse("11").unwrap())]
        );
    }

    #[test]
    fn incomplete_sibling_pair_is_rejected() {
        // Pasts ending in 1 have no context.
        let r = validate_tree(&bin(&["00", "10"]));
        assert!(!r.is_valid());
        assert!(r.has_suffix_property());
        assert_eq!(r.uncovered, vec![Alphabet::binary().parse("1").unwrap()]);
    }

    #[test]
    fn reducible_tree_detected() {
        // "10" can be replaced by "0" without breaking the suffix property.
        let r = validate_tree(&bin(&["1", "10"]));
        let a = Alphabet::binary();
        assert_eq!(
            r.irreducibility_violations,
            vec![(a.parse("10").unwrap(), a.parse("0").unwrap())]
        );
    }

    #[test]
    fn truncation_examples() {
        let t = bin(&["1", "10", "100", "000"]);
        assert_eq!(truncate(&t, 2), bin(&["1", "10", "00"]));
        assert_eq!(truncate(&t, 3), t);
        assert_eq!(truncate(&t, 7), t);
        assert_eq!(truncate(&t, 1), bin(&["0", "1"]));
    }

    #[test]
    fn lookup_examples() {
        let a = Alphabet::binary();
        let t0 = ProbabilisticContextTree::binary(&[("0", 0.2), ("1", 0.7)]).unwrap();
        match context_of(&t0, &a.parse("0101").unwrap()).unwrap() {
            Lookup::Context { context, row } => {
                assert_eq!(context, a.parse("1").unwrap());
                assert_eq!(row, vec![0.30000000000000004, 0.7]);
            }
            other => panic!("{other:?}"),
        }

        let t1 = t1();
        match context_of(&t1, &a.parse("10").unwrap()).unwrap() {
            Lookup::Context { context, .. } => assert_eq!(context, a.parse("10").unwrap()),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            context_of(&t1, &a.parse("0").unwrap()).unwrap(),
            Lookup::NeedMorePast
        );
        assert!(matches!(
            context_of(&t1, &Word(vec![0, 5])),
            Err(Error::InvalidSymbol(_))
        ));
    }

    #[test]
    fn memoryless_lookup_returns_lambda() {
        let m = ProbabilisticContextTree::memoryless(Alphabet::binary(), vec![0.25, 0.75]);
        match context_of(&m, &Word::empty()).unwrap() {
            Lookup::Context { context, row } => {
                assert!(context.is_empty());
                assert_eq!(row, vec![0.25, 0.75]);
            }
            other => panic!("{other:?}"),
        }
        assert!(validate_model(&m).is_valid());
    }

    #[test]
    fn model_rejects_suffix_violation_and_bad_rows() {
        assert!(ProbabilisticContextTree::binary(&[("1", 0.5), ("11", 0.5), ("0", 0.5)]).is_err());
        let a = Alphabet::binary();
        assert!(ProbabilisticContextTree::parse(
            &a,
            &[("0", vec![0.5, 0.6]), ("1", vec![0.5, 0.5])]
        )
        .is_err());
        assert!(
            ProbabilisticContextTree::parse(&a, &[("0", vec![1.0]), ("1", vec![0.5, 0.5])])
                .is_err()
        );
    }

    #[test]
    fn model_validation_reports_non_null() {
        let m = ProbabilisticContextTree::binary(&[("0", 0.0), ("1", 0.5)]).unwrap();
        let r = validate_model(&m);
        assert_eq!(r.non_null_violations.len(), 1);
        assert!(validate_model(&t1()).is_valid());
    }

    #[test]
    fn row_lookup() {
        let a = Alphabet::binary();
        assert_eq!(t1().row(&a.parse("100").unwrap()), Some(&[0.6, 0.4][..]));
        assert_eq!(t1().row(&a.parse("00").unwrap()), None);
    }
}
