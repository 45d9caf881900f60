//! Generators and naive reference computations shared by the test targets.
#![allow(dead_code)]

use proptest::prelude::*;

use vlmc::{Alphabet, ContextTree, ProbabilisticContextTree, Word};

pub fn alphabet(k: usize) -> Alphabet {
    Alphabet::new("0123456789abcdef".chars().take(k)).unwrap()
}

/// Grows a complete tree from λ by splitting the leaf chosen by each
/// `pick` into its `k` one-symbol-older extensions.
pub fn grow_tree(k: usize, max_height: usize, picks: &[u32]) -> ContextTree {
    let mut leaves = vec![Word::empty()];
    for &p in picks {
        let open: Vec<usize> = (0..leaves.len())
            .filter(|&i| leaves[i].len() < max_height)
            .collect();
        if open.is_empty() {
            break;
        }
        let leaf = leaves.swap_remove(open[p as usize % open.len()]);
        leaves.extend((0..k as u8).map(|a| leaf.prepend(a)));
    }
    leaves.retain(|w| !w.is_empty());
    ContextTree::new(alphabet(k), leaves).unwrap()
}

/// Complete trees over 2 or 3 symbols, height at most 4, at least one split.
pub fn tree_strategy() -> impl Strategy<Value = ContextTree> {
    (2usize..=3, prop::collection::vec(any::<u32>(), 1..7))
        .prop_map(|(k, picks)| grow_tree(k, 4, &picks))
}

/// Non-null rows on a complete tree.
pub fn model_strategy() -> impl Strategy<Value = ProbabilisticContextTree> {
    tree_strategy().prop_flat_map(|tree| {
        let k = tree.alphabet().len();
        let n = tree.len();
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, k), n).prop_map(move |weights| {
            let entries = tree
                .iter()
                .zip(weights)
                .map(|(w, ws)| {
                    let total: f64 = ws.iter().sum();
                    let mut row: Vec<f64> = ws.iter().map(|x| x / total).collect();
                    let head: f64 = row[..k - 1].iter().sum();
                    row[k - 1] = 1.0 - head;
                    (w.clone(), row)
                })
                .collect();
            ProbabilisticContextTree::new(tree.alphabet().clone(), entries).unwrap()
        })
    })
}

/// Samples over `k` symbols with length in `len`.
pub fn sample_strategy(
    k: std::ops::RangeInclusive<usize>,
    len: std::ops::Range<usize>,
) -> impl Strategy<Value = (usize, Vec<u8>)> {
    k.prop_flat_map(move |k| (Just(k), prop::collection::vec(0..k as u8, len.clone())))
}

/// Occurrences of `w` in `x` by sliding window.
pub fn naive_count(x: &[u8], w: &[u8]) -> u64 {
    if w.is_empty() {
        return x.len() as u64;
    }
    x.windows(w.len()).filter(|win| *win == w).count() as u64
}

/// Brute-force suffix property check.
pub fn has_suffix_property(tree: &ContextTree) -> bool {
    let words: Vec<&Word> = tree.iter().collect();
    words
        .iter()
        .all(|a| words.iter().all(|b| !a.is_proper_suffix_of(b)))
}

/// Whether every word of length `≤ d` occurs followed by some symbol.
pub fn saturated(x: &[u8], k: usize, d: usize) -> bool {
    let a = alphabet(k);
    (1..=d).all(|len| {
        a.words_of_len(len)
            .all(|w| (0..k as u8).any(|b| naive_count(x, w.append(b).as_slice()) > 0))
    })
}
