//! Brute-force rewrite-closure oracle for word canonical forms.
//!
//! Independent of the normal-form engine in [`crate::coxeter`]: the closure
//! of a word under adjacent edge-swaps and adjacent equal-pair deletions is
//! explored exhaustively; the canonical form is the lexicographically least
//! word of minimal length in that closure. Agreement with the engine over a
//! family of graphs and word lengths is a checkable property, exposed both
//! to the test suite and to the verification CLI.

use std::collections::BTreeSet;

use crate::coxeter::Coxeter;
use crate::graph::{SimplicialGraph, VertexId};

/// Every word reachable from `word` by swapping adjacent letters joined by
/// an edge or deleting an adjacent equal pair.
pub fn rewrite_closure(g: &SimplicialGraph, word: &[VertexId]) -> BTreeSet<Vec<VertexId>> {
    let mut seen: BTreeSet<Vec<VertexId>> = BTreeSet::new();
    let mut stack = vec![word.to_vec()];
    seen.insert(word.to_vec());
    while let Some(w) = stack.pop() {
        for i in 0..w.len().saturating_sub(1) {
            if w[i] == w[i + 1] {
                let mut shorter = w.clone();
                shorter.remove(i + 1);
                shorter.remove(i);
                if seen.insert(shorter.clone()) {
                    stack.push(shorter);
                }
            } else if g.adjacent(w[i], w[i + 1]) {
                let mut swapped = w.clone();
                swapped.swap(i, i + 1);
                if seen.insert(swapped.clone()) {
                    stack.push(swapped);
                }
            }
        }
    }
    seen
}

/// Lexicographically least word of minimal length in the rewrite closure.
pub fn oracle_canonical(g: &SimplicialGraph, word: &[VertexId]) -> Vec<VertexId> {
    let closure = rewrite_closure(g, word);
    let min_len = closure.iter().map(|w| w.len()).min().unwrap_or(0);
    closure
        .into_iter()
        .filter(|w| w.len() == min_len)
        .min()
        .unwrap_or_default()
}

/// All words over `vertices` letters of length at most `max_len`.
pub fn all_words(vertices: usize, max_len: usize) -> Vec<Vec<VertexId>> {
    let mut out = vec![vec![]];
    let mut level: Vec<Vec<VertexId>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * vertices);
        for w in &level {
            for v in 0..vertices as VertexId {
                let mut w2 = w.clone();
                w2.push(v);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Compares the engine canonical form against the oracle for every word of
/// length at most `max_len` over the host graph. Returns the number of
/// words checked and the mismatching words, if any.
pub fn check_against_engine(
    cox: &Coxeter,
    max_len: usize,
) -> (usize, Vec<Vec<VertexId>>) {
    let g = cox.graph();
    let words = all_words(g.vertex_count(), max_len);
    let mut mismatches = Vec::new();
    for w in &words {
        let engine = cox.normalize(w).expect("letters in range");
        let oracle = oracle_canonical(g, w);
        if engine.letters() != oracle.as_slice() {
            mismatches.push(w.clone());
        }
    }
    (words.len(), mismatches)
}

/// Every labelled graph with `vertices` vertices and at most `max_edges`
/// edges, in deterministic order.
pub fn graphs_with_few_edges(vertices: usize, max_edges: usize) -> Vec<SimplicialGraph> {
    let mut pairs = Vec::new();
    for a in 0..vertices as VertexId {
        for b in a + 1..vertices as VertexId {
            pairs.push((a, b));
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        if (mask.count_ones() as usize) > max_edges {
            continue;
        }
        let edges: Vec<(VertexId, VertexId)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        out.push(SimplicialGraph::from_ids(vertices, &edges).expect("valid graph"));
    }
    out
}
