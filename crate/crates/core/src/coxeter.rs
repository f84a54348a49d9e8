//! Word arithmetic in the right-angled Coxeter group of a graph.
//!
//! Generators are the graph vertices, every generator is an involution, and
//! two generators commute exactly when they are joined by an edge. Group
//! elements are stored as ShortLex-minimal reduced words under the declared
//! vertex order: first fully reduce by cancelling equal letters that are
//! separated only by star members, then greedily pull the least letter that
//! shuffles to the front.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::{SimplicialGraph, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoxeterError {
    #[error("letter {0} is not a vertex of the host graph")]
    UnknownLetter(VertexId),
    #[error("elements live over different host graphs")]
    HostMismatch,
    #[error("word is not reduced")]
    NotReduced,
    #[error("words are not shuffle equivalent")]
    NotEquivalent,
}

/// Side of the weak Bruhat order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `v <= w` iff `w` has a reduced expression starting in `v`.
    Right,
    /// `v <= w` iff `w` has a reduced expression ending in `v`.
    Left,
}

/// A group element in ShortLex-minimal reduced form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement {
    letters: Vec<VertexId>,
    host: u64,
}

impl GroupElement {
    pub fn letters(&self) -> &[VertexId] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Word engine over a fixed host graph.
#[derive(Debug, Clone)]
pub struct Coxeter {
    graph: Arc<SimplicialGraph>,
    host: u64,
}

impl Coxeter {
    pub fn new(graph: Arc<SimplicialGraph>) -> Self {
        let host = graph.fingerprint();
        Coxeter { graph, host }
    }

    pub fn graph(&self) -> &SimplicialGraph {
        &self.graph
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            letters: Vec::new(),
            host: self.host,
        }
    }

    pub fn generator(&self, v: VertexId) -> Result<GroupElement, CoxeterError> {
        self.check_letters(&[v])?;
        Ok(GroupElement {
            letters: vec![v],
            host: self.host,
        })
    }

    fn check_letters(&self, letters: &[VertexId]) -> Result<(), CoxeterError> {
        for &l in letters {
            if !self.graph.contains(l) {
                return Err(CoxeterError::UnknownLetter(l));
            }
        }
        Ok(())
    }

    fn check_host(&self, g: &GroupElement) -> Result<(), CoxeterError> {
        if g.host == self.host {
            Ok(())
        } else {
            Err(CoxeterError::HostMismatch)
        }
    }

    /// True iff for every pair of equal letters some letter strictly between
    /// them lies outside the star of that letter.
    pub fn is_reduced(&self, letters: &[VertexId]) -> Result<bool, CoxeterError> {
        self.check_letters(letters)?;
        for i in 0..letters.len() {
            for j in i + 1..letters.len() {
                if letters[i] == letters[j] {
                    let separated = letters[i + 1..j]
                        .iter()
                        .any(|&k| k != letters[i] && !self.graph.adjacent(k, letters[i]));
                    if !separated {
                        return Ok(false);
                    }
                    break;
                }
            }
        }
        Ok(true)
    }

    /// Deletes equal-letter pairs separated only by star members until no
    /// such pair remains. The right-angled deletion property guarantees the
    /// result is reduced.
    fn reduce(&self, mut letters: Vec<VertexId>) -> Vec<VertexId> {
        'scan: loop {
            for i in 0..letters.len() {
                for j in i + 1..letters.len() {
                    if letters[i] == letters[j] {
                        let deletable = letters[i + 1..j]
                            .iter()
                            .all(|&k| k != letters[i] && self.graph.adjacent(k, letters[i]));
                        if deletable {
                            letters.remove(j);
                            letters.remove(i);
                            continue 'scan;
                        }
                        break;
                    }
                }
            }
            return letters;
        }
    }

    /// ShortLex canonical form of a reduced word, together with the position
    /// map: `canonical[p] = letters[perm[p]]`.
    pub fn canonical_with_perm(&self, letters: &[VertexId]) -> (Vec<VertexId>, Vec<usize>) {
        let mut remaining: Vec<(VertexId, usize)> =
            letters.iter().copied().zip(0..).collect();
        let mut canonical = Vec::with_capacity(letters.len());
        let mut perm = Vec::with_capacity(letters.len());
        while !remaining.is_empty() {
            let mut best: Option<usize> = None;
            for (pos, &(v, _)) in remaining.iter().enumerate() {
                let movable = remaining[..pos]
                    .iter()
                    .all(|&(w, _)| self.graph.adjacent(w, v));
                if movable && best.is_none_or(|b| v < remaining[b].0) {
                    best = Some(pos);
                }
            }
            let (v, orig) = remaining.remove(best.expect("nonempty word has a movable letter"));
            canonical.push(v);
            perm.push(orig);
        }
        (canonical, perm)
    }

    /// The unique ShortLex-minimal reduced word equivalent to the input.
    pub fn normalize(&self, letters: &[VertexId]) -> Result<GroupElement, CoxeterError> {
        self.check_letters(letters)?;
        let reduced = self.reduce(letters.to_vec());
        let (canonical, _) = self.canonical_with_perm(&reduced);
        Ok(GroupElement {
            letters: canonical,
            host: self.host,
        })
    }

    pub fn multiply(
        &self,
        g: &GroupElement,
        h: &GroupElement,
    ) -> Result<GroupElement, CoxeterError> {
        self.check_host(g)?;
        self.check_host(h)?;
        let mut letters = Vec::with_capacity(g.len() + h.len());
        letters.extend_from_slice(&g.letters);
        letters.extend_from_slice(&h.letters);
        self.normalize(&letters)
    }

    /// Inverse by letter reversal; generators are involutions.
    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement, CoxeterError> {
        self.check_host(g)?;
        let reversed: Vec<VertexId> = g.letters.iter().rev().copied().collect();
        let (canonical, _) = self.canonical_with_perm(&reversed);
        Ok(GroupElement {
            letters: canonical,
            host: self.host,
        })
    }

    /// Weak Bruhat order: on the right, `v <= w` iff `|v^-1 w| = |w| - |v|`.
    pub fn bruhat_leq(
        &self,
        v: &GroupElement,
        w: &GroupElement,
        side: Side,
    ) -> Result<bool, CoxeterError> {
        self.check_host(v)?;
        self.check_host(w)?;
        if v.len() > w.len() {
            return Ok(false);
        }
        let product = match side {
            Side::Right => self.multiply(&self.inverse(v)?, w)?,
            Side::Left => self.multiply(w, &self.inverse(v)?)?,
        };
        Ok(product.len() == w.len() - v.len())
    }

    /// Position of the front-movable occurrence of the generator `v` in a
    /// reduced word, if any. Its existence is equivalent to `v <= w` on the
    /// right, and the occurrence is unique in a reduced word.
    pub fn front_movable_position(&self, letters: &[VertexId], v: VertexId) -> Option<usize> {
        for (p, &l) in letters.iter().enumerate() {
            if l == v {
                return Some(p);
            }
            if !self.graph.adjacent(l, v) {
                return None;
            }
        }
        None
    }

    /// True iff `w` has a reduced expression beginning with the generator `v`.
    pub fn starts_with(&self, w: &GroupElement, v: VertexId) -> bool {
        self.front_movable_position(&w.letters, v).is_some()
    }

    /// The unique order-preserving permutation carrying `v` to `w`:
    /// `w[p] = v[sigma[p]]`, with equal letters kept in relative order.
    pub fn shuffle_permutation(
        &self,
        v: &[VertexId],
        w: &[VertexId],
    ) -> Result<Vec<usize>, CoxeterError> {
        if !self.is_reduced(v)? || !self.is_reduced(w)? {
            return Err(CoxeterError::NotReduced);
        }
        if self.normalize(v)? != self.normalize(w)? {
            return Err(CoxeterError::NotEquivalent);
        }
        let mut used = vec![false; v.len()];
        let mut sigma = Vec::with_capacity(w.len());
        for &letter in w {
            let idx = v
                .iter()
                .enumerate()
                .position(|(i, &x)| x == letter && !used[i])
                .ok_or(CoxeterError::NotEquivalent)?;
            used[idx] = true;
            sigma.push(idx);
        }
        Ok(sigma)
    }

    /// All elements of length at most `radius` in deterministic ShortLex
    /// order, without duplicates.
    pub fn enumerate_ball(&self, radius: usize) -> Vec<GroupElement> {
        let mut out = vec![self.identity()];
        let mut level: Vec<GroupElement> = vec![self.identity()];
        for r in 1..=radius {
            let mut next: std::collections::BTreeSet<Vec<VertexId>> = Default::default();
            for g in &level {
                for s in 0..self.graph.vertex_count() as VertexId {
                    let gen = self.generator(s).expect("generator in range");
                    let h = self.multiply(g, &gen).expect("same host");
                    if h.len() == r {
                        next.insert(h.letters);
                    }
                }
            }
            level = next
                .into_iter()
                .map(|letters| GroupElement {
                    letters,
                    host: self.host,
                })
                .collect();
            out.extend(level.iter().cloned());
        }
        out
    }

    /// Wraps letters already known to be canonical; debug-asserted.
    pub fn element_from_canonical(&self, letters: Vec<VertexId>) -> GroupElement {
        debug_assert_eq!(
            self.canonical_with_perm(&letters).0,
            letters,
            "letters must already be canonical"
        );
        GroupElement {
            letters,
            host: self.host,
        }
    }
}
