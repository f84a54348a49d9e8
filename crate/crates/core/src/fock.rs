//! Lazy sparse model of the graph-product Fock space and its operators.
//!
//! Vectors are finitely supported amplitude maps over canonical basis
//! indices: a ShortLex-minimal reduced word together with one defect-basis
//! leg per letter. There is no global truncation; operators are rule-based
//! appliers. The empty word with no legs is the vacuum.
//!
//! Operators are composable expression trees over the primitives: vertex
//! actions `lambda_v(x)`, word-sector start projections `Q_w`, rank-one leg
//! projections `Q(a Omega)`, scalar combinations and products. Adjoints are
//! taken symbolically (`lambda_v(x)* = lambda_v(x*)`, projections are
//! self-adjoint, products reverse).

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, CMat, CVec, VertexAlgebra, C64};
use crate::coxeter::{Coxeter, CoxeterError, GroupElement};
use crate::graph::{SimplicialGraph, VertexId};

/// Amplitudes below this threshold are pruned after every primitive.
pub const PRUNE_EPS: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum FockError {
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("expected one algebra per vertex: {vertices} vertices, {algebras} algebras")]
    AlgebraCount { vertices: usize, algebras: usize },
    #[error("word is not reduced")]
    NotReduced,
    #[error("legs must match the word letter for letter")]
    LegArity,
    #[error("leg {leg} out of range for vertex {vertex} (defect dimension {dim})")]
    LegOutOfRange { vertex: VertexId, leg: u32, dim: usize },
    #[error("element at vertex {vertex} must lie in the state kernel (value {value:.3e})")]
    KernelRequired { vertex: VertexId, value: f64 },
    #[error("the trivial word does not define a start projection")]
    TrivialWordProjection,
    #[error("rank-one projection stack must be nonempty")]
    EmptyStack,
    #[error("stack element at vertex {0} has vanishing defect vector")]
    ZeroLeg(VertexId),
    #[error("diagonal vertices must form a clique")]
    CliqueRequired,
    #[error("operation requires a two-vertex edgeless host graph")]
    WrongHost,
    #[error("seed vector must be nonzero")]
    ZeroSeed,
}

/// Canonical Fock basis index: a canonical reduced word plus one
/// defect-basis leg per letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockIndex {
    pub letters: Vec<VertexId>,
    pub legs: Vec<u32>,
}

impl FockIndex {
    pub fn vacuum() -> Self {
        FockIndex {
            letters: Vec::new(),
            legs: Vec::new(),
        }
    }

    pub fn new(letters: Vec<VertexId>, legs: Vec<u32>) -> Self {
        debug_assert_eq!(letters.len(), legs.len());
        FockIndex { letters, legs }
    }

    pub fn is_vacuum(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Finitely supported amplitude map over canonical indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockVector {
    amps: BTreeMap<FockIndex, C64>,
}

impl FockVector {
    pub fn zero() -> Self {
        FockVector::default()
    }

    pub fn vacuum() -> Self {
        Self::basis(FockIndex::vacuum())
    }

    pub fn basis(idx: FockIndex) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(idx, C64::new(1.0, 0.0));
        FockVector { amps }
    }

    pub fn insert_add(&mut self, idx: FockIndex, amp: C64) {
        let entry = self.amps.entry(idx).or_insert(C64::new(0.0, 0.0));
        *entry += amp;
    }

    pub fn add_scaled(&mut self, other: &FockVector, c: C64) {
        for (idx, amp) in &other.amps {
            self.insert_add(idx.clone(), amp * c);
        }
    }

    pub fn scale(&mut self, c: C64) {
        for amp in self.amps.values_mut() {
            *amp *= c;
        }
    }

    pub fn prune(&mut self) {
        self.amps.retain(|_, amp| amp.norm() > PRUNE_EPS);
    }

    /// Pairing linear in the second slot: `<self, other>`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        let (small, big, flip) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, false)
        } else {
            (&other.amps, &self.amps, true)
        };
        let mut acc = C64::new(0.0, 0.0);
        for (idx, amp) in small {
            if let Some(other_amp) = big.get(idx) {
                if flip {
                    acc += other_amp.conj() * amp;
                } else {
                    acc += amp.conj() * other_amp;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Option<FockVector> {
        let n = self.norm();
        if n <= PRUNE_EPS {
            return None;
        }
        let mut out = self.clone();
        out.scale(C64::new(1.0 / n, 0.0));
        Some(out)
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, idx: &FockIndex) -> C64 {
        self.amps.get(idx).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&FockIndex, &C64)> {
        self.amps.iter()
    }

    /// Diagnostic dump: `letters|legs -> [re, im]`, keys sorted.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (idx, amp) in &self.amps {
            let letters: Vec<String> = idx.letters.iter().map(|l| l.to_string()).collect();
            let legs: Vec<String> = idx.legs.iter().map(|l| l.to_string()).collect();
            let key = format!("{}|{}", letters.join(","), legs.join(","));
            map.insert(key, serde_json::json!([amp.re, amp.im]));
        }
        serde_json::Value::Object(map)
    }
}

/// Rank-one leg data of a projection `Q(a Omega)`: the stack's own letter
/// order and the unit defect vector of each factor.
#[derive(Debug, Clone)]
pub struct RankOneStack {
    letters: Vec<VertexId>,
    legs: Vec<CVec>,
    /// Nonzero entries of each leg, for sparse expansion.
    supports: Vec<Vec<(u32, C64)>>,
    word: GroupElement,
}

impl RankOneStack {
    pub fn word(&self) -> &GroupElement {
        &self.word
    }

    pub fn letters(&self) -> &[VertexId] {
        &self.letters
    }
}

/// Composable rule-based operator on Fock vectors.
#[derive(Debug, Clone)]
pub enum OperatorExpression {
    Identity,
    /// Action of a vertex-algebra element, stored as its GNS matrix.
    Lambda { vertex: VertexId, action: CMat },
    /// Projection onto the sectors of words starting in `word`.
    ProjWord { word: GroupElement },
    /// Rank-one leg projection determined by a reduced stack.
    ProjVector { stack: Arc<RankOneStack> },
    Scaled(C64, Box<OperatorExpression>),
    Sum(Vec<OperatorExpression>),
    /// Operator-order product; the last factor acts first.
    Product(Vec<OperatorExpression>),
}

impl OperatorExpression {
    pub fn scaled(self, c: C64) -> Self {
        OperatorExpression::Scaled(c, Box::new(self))
    }

    /// `1 - self`.
    pub fn complement(self) -> Self {
        OperatorExpression::Sum(vec![
            OperatorExpression::Identity,
            self.scaled(C64::new(-1.0, 0.0)),
        ])
    }

    pub fn product(factors: Vec<OperatorExpression>) -> Self {
        if factors.is_empty() {
            OperatorExpression::Identity
        } else {
            OperatorExpression::Product(factors)
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            OperatorExpression::Identity => OperatorExpression::Identity,
            OperatorExpression::Lambda { vertex, action } => OperatorExpression::Lambda {
                vertex: *vertex,
                action: action.adjoint(),
            },
            OperatorExpression::ProjWord { word } => OperatorExpression::ProjWord {
                word: word.clone(),
            },
            OperatorExpression::ProjVector { stack } => OperatorExpression::ProjVector {
                stack: stack.clone(),
            },
            OperatorExpression::Scaled(c, e) => {
                OperatorExpression::Scaled(c.conj(), Box::new(e.adjoint()))
            }
            OperatorExpression::Sum(es) => {
                OperatorExpression::Sum(es.iter().map(|e| e.adjoint()).collect())
            }
            OperatorExpression::Product(es) => {
                OperatorExpression::Product(es.iter().rev().map(|e| e.adjoint()).collect())
            }
        }
    }

    pub fn apply(&self, ctx: &FockContext, vec: &FockVector) -> FockVector {
        match self {
            OperatorExpression::Identity => vec.clone(),
            OperatorExpression::Lambda { vertex, action } => {
                let mut out = FockVector::zero();
                for (idx, amp) in vec.amplitudes() {
                    ctx.lambda_on_basis(*vertex, action, idx, *amp, &mut out);
                }
                out.prune();
                out
            }
            OperatorExpression::ProjWord { word } => {
                let mut out = FockVector::zero();
                for (idx, amp) in vec.amplitudes() {
                    if !idx.is_vacuum() && ctx.starts_with_word(word.letters(), &idx.letters) {
                        out.insert_add(idx.clone(), *amp);
                    }
                }
                out
            }
            OperatorExpression::ProjVector { stack } => {
                let mut out = FockVector::zero();
                for (idx, amp) in vec.amplitudes() {
                    ctx.rank_one_on_basis(stack, idx, *amp, &mut out);
                }
                out.prune();
                out
            }
            OperatorExpression::Scaled(c, e) => {
                let mut out = e.apply(ctx, vec);
                out.scale(*c);
                out.prune();
                out
            }
            OperatorExpression::Sum(es) => {
                let mut out = FockVector::zero();
                for e in es {
                    let part = e.apply(ctx, vec);
                    out.add_scaled(&part, C64::new(1.0, 0.0));
                }
                out.prune();
                out
            }
            OperatorExpression::Product(es) => {
                let mut cur = vec.clone();
                for e in es.iter().rev() {
                    cur = e.apply(ctx, &cur);
                    if cur.support() == 0 {
                        return cur;
                    }
                }
                cur
            }
        }
    }
}

/// Shared graph, word engine and per-vertex algebras backing a Fock space.
#[derive(Debug, Clone)]
pub struct FockContext {
    graph: Arc<SimplicialGraph>,
    cox: Coxeter,
    algebras: Vec<Arc<VertexAlgebra>>,
}

impl FockContext {
    pub fn new(
        graph: Arc<SimplicialGraph>,
        algebras: Vec<Arc<VertexAlgebra>>,
    ) -> Result<Self, FockError> {
        if algebras.len() != graph.vertex_count() {
            return Err(FockError::AlgebraCount {
                vertices: graph.vertex_count(),
                algebras: algebras.len(),
            });
        }
        let cox = Coxeter::new(graph.clone());
        Ok(FockContext {
            graph,
            cox,
            algebras,
        })
    }

    pub fn graph(&self) -> &SimplicialGraph {
        &self.graph
    }

    pub fn coxeter(&self) -> &Coxeter {
        &self.cox
    }

    pub fn algebra(&self, v: VertexId) -> &VertexAlgebra {
        &self.algebras[v as usize]
    }

    pub fn defect_dim(&self, v: VertexId) -> usize {
        self.algebras[v as usize].defect_dim()
    }

    /// Identifies an index over any reduced representative with its
    /// canonical form, permuting legs along the unique order-preserving
    /// shuffle. The permutation is unitary, so the phase is always one.
    pub fn canonicalize(
        &self,
        letters: &[VertexId],
        legs: &[u32],
    ) -> Result<(FockIndex, C64), FockError> {
        if letters.len() != legs.len() {
            return Err(FockError::LegArity);
        }
        if !self.cox.is_reduced(letters)? {
            return Err(FockError::NotReduced);
        }
        for (&l, &leg) in letters.iter().zip(legs) {
            let dim = self.defect_dim(l);
            if leg as usize >= dim {
                return Err(FockError::LegOutOfRange {
                    vertex: l,
                    leg,
                    dim,
                });
            }
        }
        let (canonical, perm) = self.cox.canonical_with_perm(letters);
        let new_legs: Vec<u32> = perm.iter().map(|&p| legs[p]).collect();
        Ok((FockIndex::new(canonical, new_legs), C64::new(1.0, 0.0)))
    }

    /// True iff the index word has a reduced expression starting with the
    /// (reduced) prefix, extracted letter by letter.
    fn starts_with_word(&self, prefix: &[VertexId], letters: &[VertexId]) -> bool {
        if prefix.len() > letters.len() {
            return false;
        }
        let mut cur: Vec<VertexId> = letters.to_vec();
        for &s in prefix {
            match self.cox.front_movable_position(&cur, s) {
                Some(p) => {
                    cur.remove(p);
                }
                None => return false,
            }
        }
        true
    }

    /// Single-vertex action on one basis index, accumulated into `out`.
    ///
    /// If the vertex starts the word, the front-movable letter absorbs the
    /// action: its leg is rotated through the defect part of the image and
    /// the cyclic component deletes the letter. Otherwise the image of the
    /// cyclic vector is prepended leg by leg and the state value keeps the
    /// index unchanged.
    fn lambda_on_basis(
        &self,
        vertex: VertexId,
        action: &CMat,
        idx: &FockIndex,
        amp: C64,
        out: &mut FockVector,
    ) {
        let defect_dim = self.defect_dim(vertex);
        if let Some(pos) = self.cox.front_movable_position(&idx.letters, vertex) {
            let j = idx.legs[pos] as usize;
            let scalar = action[(0, 1 + j)];
            if (amp * scalar).norm() > PRUNE_EPS {
                let mut rem_letters = idx.letters.clone();
                rem_letters.remove(pos);
                let mut rem_legs = idx.legs.clone();
                rem_legs.remove(pos);
                let (canonical, perm) = self.cox.canonical_with_perm(&rem_letters);
                let legs: Vec<u32> = perm.iter().map(|&p| rem_legs[p]).collect();
                out.insert_add(FockIndex::new(canonical, legs), amp * scalar);
            }
            for k in 0..defect_dim {
                let coeff = action[(1 + k, 1 + j)];
                if (amp * coeff).norm() > PRUNE_EPS {
                    let mut legs = idx.legs.clone();
                    legs[pos] = k as u32;
                    out.insert_add(FockIndex::new(idx.letters.clone(), legs), amp * coeff);
                }
            }
        } else {
            let scalar = action[(0, 0)];
            if (amp * scalar).norm() > PRUNE_EPS {
                out.insert_add(idx.clone(), amp * scalar);
            }
            let mut target_letters = Vec::with_capacity(idx.letters.len() + 1);
            target_letters.push(vertex);
            target_letters.extend_from_slice(&idx.letters);
            let (canonical, perm) = self.cox.canonical_with_perm(&target_letters);
            for k in 0..defect_dim {
                let coeff = action[(1 + k, 0)];
                if (amp * coeff).norm() <= PRUNE_EPS {
                    continue;
                }
                let legs: Vec<u32> = perm
                    .iter()
                    .map(|&p| if p == 0 { k as u32 } else { idx.legs[p - 1] })
                    .collect();
                out.insert_add(FockIndex::new(canonical.clone(), legs), amp * coeff);
            }
        }
    }

    /// Rank-one projection on one basis index, accumulated into `out`.
    ///
    /// The stack letters are extracted from the front in order; failure to
    /// extract annihilates the index. Extraction pins the canonical
    /// positions carrying the stack legs, so the projection replaces those
    /// legs by the stack's unit vectors and leaves the tail untouched.
    fn rank_one_on_basis(
        &self,
        stack: &RankOneStack,
        idx: &FockIndex,
        amp: C64,
        out: &mut FockVector,
    ) {
        if stack.letters.len() > idx.letters.len() {
            return;
        }
        let mut cur: Vec<(VertexId, usize)> = idx
            .letters
            .iter()
            .copied()
            .zip(0..)
            .collect();
        let mut pinned = Vec::with_capacity(stack.letters.len());
        let mut coeff = amp;
        for (i, &s) in stack.letters.iter().enumerate() {
            let mut found = None;
            for (p, &(l, _)) in cur.iter().enumerate() {
                if l == s {
                    found = Some(p);
                    break;
                }
                if !self.graph.adjacent(l, s) {
                    break;
                }
            }
            let Some(p) = found else { return };
            let (_, orig) = cur.remove(p);
            let j = idx.legs[orig] as usize;
            coeff *= stack.legs[i][j].conj();
            pinned.push(orig);
        }
        if coeff.norm() <= PRUNE_EPS {
            return;
        }
        let mut legs = idx.legs.clone();
        emit_combinations(stack, 0, coeff, &mut legs, &pinned, &idx.letters, out);
    }

    /// Vertex action as an operator expression; validates membership.
    pub fn lambda(&self, vertex: VertexId, x: &CMat) -> Result<OperatorExpression, FockError> {
        let alg = self.algebra(vertex);
        alg.check_member(x)?;
        Ok(OperatorExpression::Lambda {
            vertex,
            action: alg.gns_action(x),
        })
    }

    /// Start projection `Q_w` for a nontrivial word.
    pub fn q_word(&self, word: &GroupElement) -> Result<OperatorExpression, FockError> {
        if word.is_identity() {
            return Err(FockError::TrivialWordProjection);
        }
        Ok(OperatorExpression::ProjWord { word: word.clone() })
    }

    /// Rank-one projection `Q(a Omega)` of a reduced kernel-element stack.
    pub fn q_vector(
        &self,
        stack: &[(VertexId, CMat)],
    ) -> Result<OperatorExpression, FockError> {
        Ok(OperatorExpression::ProjVector {
            stack: Arc::new(self.rank_one_stack(stack)?),
        })
    }

    pub fn rank_one_stack(
        &self,
        stack: &[(VertexId, CMat)],
    ) -> Result<RankOneStack, FockError> {
        if stack.is_empty() {
            return Err(FockError::EmptyStack);
        }
        let letters: Vec<VertexId> = stack.iter().map(|&(v, _)| v).collect();
        if !self.cox.is_reduced(&letters)? {
            return Err(FockError::NotReduced);
        }
        let mut legs = Vec::with_capacity(stack.len());
        let mut supports = Vec::with_capacity(stack.len());
        for (v, x) in stack {
            let alg = self.algebra(*v);
            alg.check_member(x)?;
            let coords = alg.gns_coords(x);
            let state_part = coords[0].norm();
            if state_part > 1e-10 {
                return Err(FockError::KernelRequired {
                    vertex: *v,
                    value: state_part,
                });
            }
            let defect = CVec::from_fn(alg.defect_dim(), |k, _| coords[k + 1]);
            let norm = defect.norm();
            if norm <= PRUNE_EPS {
                return Err(FockError::ZeroLeg(*v));
            }
            let unit = defect / C64::new(norm, 0.0);
            let support: Vec<(u32, C64)> = (0..alg.defect_dim())
                .filter(|&k| unit[k].norm() > 1e-13)
                .map(|k| (k as u32, unit[k]))
                .collect();
            legs.push(unit);
            supports.push(support);
        }
        let word = self.cox.normalize(&letters)?;
        Ok(RankOneStack {
            letters,
            legs,
            supports,
            word,
        })
    }

    /// Creation operator `Q_v a Q_v^perp`.
    pub fn creation(&self, vertex: VertexId, x: &CMat) -> Result<OperatorExpression, FockError> {
        let q = self.q_word(&self.cox.generator(vertex)?)?;
        Ok(OperatorExpression::Product(vec![
            q.clone(),
            self.lambda(vertex, x)?,
            q.complement(),
        ]))
    }

    /// Diagonal operator `Q_v a Q_v`.
    pub fn diagonal(&self, vertex: VertexId, x: &CMat) -> Result<OperatorExpression, FockError> {
        let q = self.q_word(&self.cox.generator(vertex)?)?;
        Ok(OperatorExpression::Product(vec![
            q.clone(),
            self.lambda(vertex, x)?,
            q,
        ]))
    }

    /// Annihilation operator `Q_v^perp a Q_v`, the adjoint of a creation.
    pub fn annihilation(
        &self,
        vertex: VertexId,
        x: &CMat,
    ) -> Result<OperatorExpression, FockError> {
        let q = self.q_word(&self.cox.generator(vertex)?)?;
        Ok(OperatorExpression::Product(vec![
            q.clone().complement(),
            self.lambda(vertex, x)?,
            q,
        ]))
    }

    /// `<Omega, op Omega>`.
    pub fn vacuum_expectation(&self, op: &OperatorExpression) -> C64 {
        op.apply(self, &FockVector::vacuum())
            .amplitude(&FockIndex::vacuum())
    }
}

fn emit_combinations(
    stack: &RankOneStack,
    depth: usize,
    coeff: C64,
    legs: &mut Vec<u32>,
    pinned: &[usize],
    letters: &[VertexId],
    out: &mut FockVector,
) {
    if depth == stack.letters.len() {
        out.insert_add(FockIndex::new(letters.to_vec(), legs.clone()), coeff);
        return;
    }
    for &(k, value) in &stack.supports[depth] {
        let prev = legs[pinned[depth]];
        legs[pinned[depth]] = k;
        emit_combinations(stack, depth + 1, coeff * value, legs, pinned, letters, out);
        legs[pinned[depth]] = prev;
    }
}

/// A reduced operator: vertex-wise kernel factors over a reduced type word.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    pub factors: Vec<(VertexId, CMat)>,
    /// The associated word (type) of the operator.
    pub word: GroupElement,
    pub expr: OperatorExpression,
}

/// Validates the factors and assembles the left-to-right product of vertex
/// actions; each factor must kill the state of its vertex.
pub fn reduced_operator(
    ctx: &FockContext,
    factors: &[(VertexId, CMat)],
) -> Result<ReducedOperator, FockError> {
    let letters: Vec<VertexId> = factors.iter().map(|&(v, _)| v).collect();
    if !ctx.cox.is_reduced(&letters)? {
        return Err(FockError::NotReduced);
    }
    let mut parts = Vec::with_capacity(factors.len());
    for (v, x) in factors {
        let value = ctx.algebra(*v).state(x).norm();
        if value > 1e-10 {
            return Err(FockError::KernelRequired { vertex: *v, value });
        }
        parts.push(ctx.lambda(*v, x)?);
    }
    let word = ctx.cox.normalize(&letters)?;
    Ok(ReducedOperator {
        factors: factors.to_vec(),
        word,
        expr: OperatorExpression::product(parts),
    })
}

/// Applies a reduced operator built from `factors` to `vec`.
pub fn apply_reduced(
    ctx: &FockContext,
    factors: &[(VertexId, CMat)],
    vec: &FockVector,
) -> Result<FockVector, FockError> {
    Ok(reduced_operator(ctx, factors)?.expr.apply(ctx, vec))
}

/// An elementary operator: creations, a diagonal clique factor, and the
/// adjoint of a creation stack, with its signature word.
#[derive(Debug, Clone)]
pub struct Elementary {
    pub expr: OperatorExpression,
    pub signature: GroupElement,
}

/// Builds `(a_1^+ ... a_k^+) d (b_1^+ ... b_l^+)*`. Creation and
/// annihilation stacks must be reduced kernel elements; the diagonal
/// vertices must form a clique (their elements may have any state value).
pub fn make_elementary(
    ctx: &FockContext,
    creations: &[(VertexId, CMat)],
    diag: &[(VertexId, CMat)],
    annihilations: &[(VertexId, CMat)],
) -> Result<Elementary, FockError> {
    let c_word: Vec<VertexId> = creations.iter().map(|&(v, _)| v).collect();
    let a_word: Vec<VertexId> = annihilations.iter().map(|&(v, _)| v).collect();
    if !ctx.cox.is_reduced(&c_word)? || !ctx.cox.is_reduced(&a_word)? {
        return Err(FockError::NotReduced);
    }
    let mut diag_vertices: Vec<VertexId> = diag.iter().map(|&(v, _)| v).collect();
    diag_vertices.sort_unstable();
    diag_vertices.dedup();
    if !ctx.graph.is_clique(&diag_vertices)? {
        return Err(FockError::CliqueRequired);
    }
    let mut parts = Vec::new();
    for (v, a) in creations {
        check_kernel(ctx, *v, a)?;
        parts.push(ctx.creation(*v, a)?);
    }
    for (v, c) in diag {
        parts.push(ctx.diagonal(*v, c)?);
    }
    for (v, b) in annihilations.iter().rev() {
        check_kernel(ctx, *v, b)?;
        // ((b^+) applied on the right as an adjoint factor.
        parts.push(ctx.creation(*v, b)?.adjoint());
    }
    let signature = signature_word(ctx, &c_word, &a_word)?;
    Ok(Elementary {
        expr: OperatorExpression::product(parts),
        signature,
    })
}

fn check_kernel(ctx: &FockContext, v: VertexId, x: &CMat) -> Result<(), FockError> {
    let value = ctx.algebra(v).state(x).norm();
    if value > 1e-10 {
        return Err(FockError::KernelRequired { vertex: v, value });
    }
    Ok(())
}

/// Signature of an elementary operator: creation word times the inverse of
/// the annihilation word.
pub fn signature_word(
    ctx: &FockContext,
    creation_word: &[VertexId],
    annihilation_word: &[VertexId],
) -> Result<GroupElement, FockError> {
    let cox = ctx.coxeter();
    let c = cox.normalize(creation_word)?;
    let a = cox.normalize(annihilation_word)?;
    Ok(cox.multiply(&c, &cox.inverse(&a)?)?)
}

/// Decomposes a reduced alternating operator over a two-vertex edgeless
/// host into its `2m + 1` elementary terms: for each split point the
/// creation head and annihilation tail, and for each letter the diagonal
/// sandwich between them.
pub fn decompose_free_reduced(
    ctx: &FockContext,
    factors: &[(VertexId, CMat)],
) -> Result<Vec<OperatorExpression>, FockError> {
    if ctx.graph.vertex_count() != 2 || !ctx.graph.edges().is_empty() {
        return Err(FockError::WrongHost);
    }
    for window in factors.windows(2) {
        if window[0].0 == window[1].0 {
            return Err(FockError::NotReduced);
        }
    }
    for (v, x) in factors {
        check_kernel(ctx, *v, x)?;
    }
    let m = factors.len();
    if m == 0 {
        return Ok(vec![OperatorExpression::Identity]);
    }
    let mut terms = Vec::with_capacity(2 * m + 1);
    for k in 0..=m {
        let mut parts = Vec::new();
        for (v, a) in &factors[..k] {
            parts.push(ctx.creation(*v, a)?);
        }
        for (v, a) in &factors[k..] {
            parts.push(ctx.annihilation(*v, a)?);
        }
        terms.push(OperatorExpression::product(parts));
    }
    for k in 0..m {
        let mut parts = Vec::new();
        for (v, a) in &factors[..k] {
            parts.push(ctx.creation(*v, a)?);
        }
        let (v, c) = &factors[k];
        parts.push(ctx.diagonal(*v, c)?);
        for (v, a) in &factors[k + 1..] {
            parts.push(ctx.annihilation(*v, a)?);
        }
        terms.push(OperatorExpression::product(parts));
    }
    Ok(terms)
}

/// Maximal Rayleigh quotient over the Krylov family generated from the
/// seeds; a certified lower bound for the norm of a self-adjoint operator
/// on the explored subspace.
pub fn rayleigh_probe(
    ctx: &FockContext,
    op: &OperatorExpression,
    seeds: &[FockVector],
    iterations: usize,
) -> Result<f64, FockError> {
    let mut best: f64 = 0.0;
    for seed in seeds {
        let mut v = seed.normalized().ok_or(FockError::ZeroSeed)?;
        for _ in 0..iterations.max(1) {
            let image = op.apply(ctx, &v);
            let quotient = v.inner(&image).re;
            best = best.max(quotient);
            match image.normalized() {
                Some(next) => v = next,
                None => break,
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Three-vertex edgeless host, order-2 group algebra at every vertex.
    fn z2_ctx() -> FockContext {
        let graph = Arc::new(SimplicialGraph::new(&["a", "b", "c"], &[]).unwrap());
        let alg = Arc::new(VertexAlgebra::group_algebra(2).unwrap());
        FockContext::new(graph, vec![alg.clone(), alg.clone(), alg]).unwrap()
    }

    /// Two-vertex free host with order-2 and order-3 group algebras.
    fn free_ctx() -> FockContext {
        let graph = Arc::new(SimplicialGraph::new(&["a", "b"], &[]).unwrap());
        FockContext::new(
            graph,
            vec![
                Arc::new(VertexAlgebra::group_algebra(2).unwrap()),
                Arc::new(VertexAlgebra::group_algebra(3).unwrap()),
            ],
        )
        .unwrap()
    }

    /// Two commuting vertices with order-3 algebras, for edge cases.
    fn edge_ctx() -> FockContext {
        let graph = Arc::new(SimplicialGraph::new(&["a", "b"], &[("a", "b")]).unwrap());
        let alg = Arc::new(VertexAlgebra::group_algebra(3).unwrap());
        FockContext::new(graph, vec![alg.clone(), alg]).unwrap()
    }

    fn random_element(alg: &VertexAlgebra, rng: &mut ChaCha8Rng) -> CMat {
        let mut x = CMat::zeros(alg.dim(), alg.dim());
        for b in alg.basis() {
            x += b * C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        x
    }

    fn random_vector(ctx: &FockContext, radius: usize, rng: &mut ChaCha8Rng) -> FockVector {
        let ball = ctx.coxeter().enumerate_ball(radius);
        let mut v = FockVector::zero();
        for _ in 0..6 {
            let w = &ball[rng.random_range(0..ball.len())];
            let legs: Vec<u32> = w
                .letters()
                .iter()
                .map(|&l| rng.random_range(0..ctx.defect_dim(l)) as u32)
                .collect();
            v.insert_add(
                FockIndex::new(w.letters().to_vec(), legs),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        v.normalized().unwrap_or_else(FockVector::vacuum)
    }

    #[test]
    fn lambda_on_vacuum_creates_a_leg() {
        let ctx = z2_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let op = ctx.lambda(0, &u).unwrap();
        let out = op.apply(&ctx, &FockVector::vacuum());
        assert_eq!(out.support(), 1);
        assert!(
            (out.amplitude(&FockIndex::new(vec![0], vec![0])) - c(1.0)).norm() < 1e-12
        );
    }

    #[test]
    fn lambda_involution_returns_to_vacuum() {
        let ctx = z2_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let op = ctx.lambda(0, &u).unwrap();
        let one = op.apply(&ctx, &FockVector::vacuum());
        let back = op.apply(&ctx, &one);
        assert!((back.amplitude(&FockIndex::vacuum()) - c(1.0)).norm() < 1e-12);
        assert_eq!(back.support(), 1);
    }

    #[test]
    fn vacuum_reproduces_the_state() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in 0..2u32 {
            for _ in 0..50 {
                let x = random_element(ctx.algebra(v), &mut rng);
                let op = ctx.lambda(v, &x).unwrap();
                let got = ctx.vacuum_expectation(&op);
                let want = ctx.algebra(v).state(&x);
                assert!((got - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn lambda_is_multiplicative() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for v in 0..2u32 {
            for _ in 0..10 {
                let x = random_element(ctx.algebra(v), &mut rng);
                let y = random_element(ctx.algebra(v), &mut rng);
                let vec = random_vector(&ctx, 3, &mut rng);
                let xy = ctx.lambda(v, &(&x * &y)).unwrap().apply(&ctx, &vec);
                let step = ctx.lambda(v, &y).unwrap().apply(&ctx, &vec);
                let composed = ctx.lambda(v, &x).unwrap().apply(&ctx, &step);
                let mut diff = xy;
                diff.add_scaled(&composed, c(-1.0));
                assert!(diff.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn lambda_adjoint_consistency() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let v = rng.random_range(0..2u32);
            let x = random_element(ctx.algebra(v), &mut rng);
            let op = ctx.lambda(v, &x).unwrap();
            let adj = op.adjoint();
            let e1 = random_vector(&ctx, 3, &mut rng);
            let e2 = random_vector(&ctx, 3, &mut rng);
            let lhs = op.apply(&ctx, &e1).inner(&e2);
            let rhs = e1.inner(&adj.apply(&ctx, &e2));
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn adjacent_vertices_commute() {
        let ctx = edge_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let x = random_element(ctx.algebra(0), &mut rng);
            let y = random_element(ctx.algebra(1), &mut rng);
            let vec = random_vector(&ctx, 2, &mut rng);
            let a = ctx.lambda(0, &x).unwrap();
            let b = ctx.lambda(1, &y).unwrap();
            let ab = a.apply(&ctx, &b.apply(&ctx, &vec));
            let ba = b.apply(&ctx, &a.apply(&ctx, &vec));
            let mut diff = ab;
            diff.add_scaled(&ba, c(-1.0));
            assert!(diff.norm() < 1e-9);
        }
    }

    #[test]
    fn canonicalize_shuffles_legs() {
        let ctx = edge_ctx();
        // Letters (b, a) with legs (1, 0) identify with (a, b), legs (0, 1).
        let (idx, phase) = ctx.canonicalize(&[1, 0], &[1, 0]).unwrap();
        assert_eq!(idx.letters, vec![0, 1]);
        assert_eq!(idx.legs, vec![0, 1]);
        assert!((phase - c(1.0)).norm() < 1e-15);
        let (same, _) = ctx.canonicalize(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(same.letters, vec![0, 1]);
        assert_eq!(same.legs, vec![0, 1]);
        assert!(ctx.canonicalize(&[0, 0], &[0, 0]).is_err());
    }

    #[test]
    fn canonicalize_preserves_inner_products() {
        let ctx = edge_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let legs1 = vec![
                rng.random_range(0..2) as u32,
                rng.random_range(0..2) as u32,
            ];
            let legs2 = vec![
                rng.random_range(0..2) as u32,
                rng.random_range(0..2) as u32,
            ];
            let (i1, _) = ctx.canonicalize(&[1, 0], &[legs1[0], legs1[1]]).unwrap();
            let (i2, _) = ctx.canonicalize(&[1, 0], &[legs2[0], legs2[1]]).unwrap();
            let same = legs1 == legs2;
            assert_eq!(i1 == i2, same);
        }
    }

    #[test]
    fn q_word_examples() {
        let ctx = z2_ctx();
        let cox = ctx.coxeter();
        let gen = cox.generator(0).unwrap();
        let q = ctx.q_word(&gen).unwrap();
        assert_eq!(q.apply(&ctx, &FockVector::vacuum()).support(), 0);
        let one = FockVector::basis(FockIndex::new(vec![0], vec![0]));
        assert_eq!(q.apply(&ctx, &one), one);
        assert!(ctx.q_word(&cox.identity()).is_err());
    }

    #[test]
    fn q_projections_of_distinct_generators_are_orthogonal() {
        let ctx = z2_ctx();
        let cox = ctx.coxeter();
        let qa = ctx.q_word(&cox.generator(0).unwrap()).unwrap();
        let qb = ctx.q_word(&cox.generator(1).unwrap()).unwrap();
        for w in cox.enumerate_ball(6) {
            if w.is_identity() {
                continue;
            }
            let legs = vec![0u32; w.len()];
            let v = FockVector::basis(FockIndex::new(w.letters().to_vec(), legs));
            let out = qa.apply(&ctx, &qb.apply(&ctx, &v));
            assert_eq!(out.support(), 0);
        }
    }

    #[test]
    fn q_word_idempotent_selfadjoint_diagonal() {
        let ctx = z2_ctx();
        let cox = ctx.coxeter();
        let w = cox.normalize(&[0, 1]).unwrap();
        let q = ctx.q_word(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v = random_vector(&ctx, 4, &mut rng);
            let once = q.apply(&ctx, &v);
            let twice = q.apply(&ctx, &once);
            let mut diff = twice.clone();
            diff.add_scaled(&once, c(-1.0));
            assert!(diff.norm() < 1e-12);
            // Word-diagonal: kept indices appear with unchanged word.
            for (idx, _) in once.amplitudes() {
                assert!(v.amplitude(idx).norm() > 0.0);
            }
            let u = random_vector(&ctx, 4, &mut rng);
            let lhs = q.apply(&ctx, &v).inner(&u);
            let rhs = v.inner(&q.apply(&ctx, &u));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_one_projection_fixes_its_own_vector() {
        let ctx = free_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let stack = vec![(0u32, u.clone()), (1u32, b.clone())];
        let q = ctx.q_vector(&stack).unwrap();
        // The stack vector itself.
        let target = apply_reduced(&ctx, &stack, &FockVector::vacuum()).unwrap();
        let out = q.apply(&ctx, &target);
        let mut diff = out;
        diff.add_scaled(&target, c(-1.0));
        assert!(diff.norm() < 1e-12);
        // Orthogonal leg at the second letter is annihilated.
        let other = FockVector::basis(FockIndex::new(vec![0, 1], vec![0, 1]));
        assert_eq!(q.apply(&ctx, &other).support(), 0);
    }

    #[test]
    fn rank_one_projections_of_distinct_words_annihilate() {
        let ctx = free_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let b2 = ctx.algebra(1).unitary("g2").unwrap().clone();
        let qg = ctx.q_vector(&[(0, u.clone()), (1, b.clone())]).unwrap();
        let qh = ctx.q_vector(&[(0, u.clone()), (1, b2.clone())]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let v = random_vector(&ctx, 4, &mut rng);
            let out = qg.apply(&ctx, &qh.apply(&ctx, &v));
            assert!(out.norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_stack_projection_matches_elementary_product() {
        let ctx = free_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let stack = vec![(0u32, u.clone()), (1u32, b.clone())];
        let q = ctx.q_vector(&stack).unwrap();
        let created = OperatorExpression::Product(vec![
            ctx.creation(0, &u).unwrap(),
            ctx.creation(1, &b).unwrap(),
        ]);
        let elementary =
            OperatorExpression::Product(vec![created.clone(), created.adjoint()]);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let v = random_vector(&ctx, 4, &mut rng);
            let lhs = q.apply(&ctx, &v);
            let rhs = elementary.apply(&ctx, &v);
            let mut diff = lhs;
            diff.add_scaled(&rhs, c(-1.0));
            assert!(diff.norm() < 1e-10);
        }
    }

    #[test]
    fn elementary_signature_examples() {
        let ctx = free_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let pure_creation =
            make_elementary(&ctx, &[(0, u.clone()), (1, b.clone())], &[], &[]).unwrap();
        assert_eq!(pure_creation.signature.letters(), &[0, 1]);
        let pure_diag = make_elementary(&ctx, &[], &[(0, u.clone())], &[]).unwrap();
        assert!(pure_diag.signature.is_identity());
        let balanced =
            make_elementary(&ctx, &[(0, u.clone())], &[], &[(0, u.clone())]).unwrap();
        assert!(balanced.signature.is_identity());
    }

    #[test]
    fn elementary_clique_gate() {
        let ctx = z2_ctx();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        // Two distinct vertices of an edgeless graph never form a clique.
        let err = make_elementary(&ctx, &[], &[(0, u.clone()), (1, u.clone())], &[]);
        assert!(matches!(err, Err(FockError::CliqueRequired)));
        let ctx2 = edge_ctx();
        let x = ctx2.algebra(0).unitary("g").unwrap().clone();
        assert!(make_elementary(&ctx2, &[], &[(0, x.clone()), (1, x)], &[]).is_ok());
    }

    #[test]
    fn diagonal_operator_preserves_words() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let x = random_element(ctx.algebra(0), &mut rng);
        let d = ctx.diagonal(0, &x).unwrap();
        for _ in 0..20 {
            let v = random_vector(&ctx, 4, &mut rng);
            let out = d.apply(&ctx, &v);
            for (idx, _) in out.amplitudes() {
                assert!(
                    v.amplitudes().any(|(i, _)| i.letters == idx.letters),
                    "diagonal operator must preserve word sectors"
                );
            }
        }
    }

    #[test]
    fn signature_shifts_word_sectors() {
        let ctx = free_ctx();
        let cox = ctx.coxeter();
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let x = make_elementary(&ctx, &[(0, u.clone()), (1, b.clone())], &[], &[(1, b.clone())])
            .unwrap();
        for w in cox.enumerate_ball(6) {
            let legs: Vec<u32> = w.letters().iter().map(|_| 0u32).collect();
            let v = FockVector::basis(FockIndex::new(w.letters().to_vec(), legs));
            let out = x.expr.apply(&ctx, &v);
            let expected = cox.multiply(&x.signature, &w).unwrap();
            for (idx, _) in out.amplitudes() {
                assert_eq!(idx.letters, expected.letters());
            }
        }
    }

    #[test]
    fn free_decomposition_reproduces_direct_application() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let lifts1: Vec<CMat> = (0..2).map(|k| ctx.algebra(1).defect_lift(k).clone()).collect();
        let words: Vec<Vec<(VertexId, CMat)>> = vec![
            vec![(0, u.clone())],
            vec![(1, lifts1[0].clone())],
            vec![(0, u.clone()), (1, lifts1[1].clone())],
            vec![(1, lifts1[0].clone()), (0, u.clone())],
            vec![(0, u.clone()), (1, lifts1[0].clone()), (0, u.clone())],
        ];
        for factors in words {
            let terms = decompose_free_reduced(&ctx, &factors).unwrap();
            assert_eq!(terms.len(), 2 * factors.len() + 1);
            let direct = reduced_operator(&ctx, &factors).unwrap();
            for _ in 0..20 {
                let v = random_vector(&ctx, 4, &mut rng);
                let mut sum = FockVector::zero();
                for t in &terms {
                    sum.add_scaled(&t.apply(&ctx, &v), c(1.0));
                }
                let want = direct.expr.apply(&ctx, &v);
                let mut diff = sum;
                diff.add_scaled(&want, c(-1.0));
                assert!(diff.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_decomposition_is_the_identity() {
        let ctx = free_ctx();
        let terms = decompose_free_reduced(&ctx, &[]).unwrap();
        assert_eq!(terms.len(), 1);
        let v = FockVector::basis(FockIndex::new(vec![0], vec![0]));
        assert_eq!(terms[0].apply(&ctx, &v), v);
        // Wrong host graphs are rejected.
        let ctx3 = z2_ctx();
        assert!(matches!(
            decompose_free_reduced(&ctx3, &[]),
            Err(FockError::WrongHost)
        ));
    }

    #[test]
    fn vacuum_expectation_examples() {
        let ctx = free_ctx();
        assert!(
            (ctx.vacuum_expectation(&OperatorExpression::Identity) - c(1.0)).norm() < 1e-15
        );
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let b = ctx.algebra(1).unitary("g").unwrap().clone();
        let red = reduced_operator(&ctx, &[(0, u.clone()), (1, b.clone())]).unwrap();
        assert!(ctx.vacuum_expectation(&red.expr).norm() < 1e-12);
        let single = ctx.lambda(0, &u).unwrap();
        assert!(ctx.vacuum_expectation(&single).norm() < 1e-12);
    }

    #[test]
    fn reduced_operator_requires_kernel_factors() {
        let ctx = free_ctx();
        let id = ctx.algebra(0).identity();
        assert!(matches!(
            reduced_operator(&ctx, &[(0, id)]),
            Err(FockError::KernelRequired { .. })
        ));
    }

    #[test]
    fn commuting_reduced_factors_swap() {
        let ctx = edge_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let x = ctx.algebra(0).circ(&random_element(ctx.algebra(0), &mut rng));
        let y = ctx.algebra(1).circ(&random_element(ctx.algebra(1), &mut rng));
        for _ in 0..20 {
            let v = random_vector(&ctx, 3, &mut rng);
            let ab = apply_reduced(&ctx, &[(0, x.clone()), (1, y.clone())], &v).unwrap();
            let ba = apply_reduced(&ctx, &[(1, y.clone()), (0, x.clone())], &v).unwrap();
            let mut diff = ab;
            diff.add_scaled(&ba, c(-1.0));
            assert!(diff.norm() < 1e-10);
        }
    }

    #[test]
    fn rayleigh_probe_basics() {
        let ctx = free_ctx();
        let zero = OperatorExpression::Identity.scaled(c(0.0));
        let seeds = vec![FockVector::vacuum()];
        assert_eq!(rayleigh_probe(&ctx, &zero, &seeds, 4).unwrap(), 0.0);
        let u = ctx.algebra(0).unitary("g").unwrap().clone();
        let q = ctx.q_vector(&[(0, u)]).unwrap();
        let mut seed = FockVector::vacuum();
        seed.insert_add(FockIndex::new(vec![0], vec![0]), c(0.7));
        let got = rayleigh_probe(&ctx, &q, &[seed], 4).unwrap();
        assert!(got >= 1.0 - 1e-9 && got <= 1.0 + 1e-9);
        assert!(matches!(
            rayleigh_probe(&ctx, &q, &[FockVector::zero()], 2),
            Err(FockError::ZeroSeed)
        ));
    }

    #[test]
    fn unitary_lambda_is_unitary_on_vectors() {
        let ctx = free_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for v in 0..2u32 {
            let u = ctx.algebra(v).distinguished_unitary().unwrap().clone();
            let op = ctx.lambda(v, &u).unwrap();
            let inv = op.adjoint();
            for _ in 0..15 {
                let vec = random_vector(&ctx, 4, &mut rng);
                let round = inv.apply(&ctx, &op.apply(&ctx, &vec));
                let mut diff = round;
                diff.add_scaled(&vec, c(-1.0));
                assert!(diff.norm() < 1e-10);
            }
        }
    }
}
