//! Finite simplicial graphs and the closed covering-walk constructions.
//!
//! A [`SimplicialGraph`] is finite, undirected and loop-free. Vertices are
//! identified by their position in the declared vertex list; that order is
//! also the tie-breaking order used by every deterministic walk construction
//! and by the ShortLex normal form in [`crate::coxeter`].

use std::collections::BTreeSet;

use thiserror::Error;

/// Index of a vertex in the declared vertex order.
pub type VertexId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("at most 64 vertices are supported, got {0}")]
    TooLarge(usize),
    #[error("duplicate vertex name `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("loop edge at vertex `{0}`")]
    LoopEdge(String),
    #[error("walk construction requires a connected graph")]
    Disconnected,
    #[error("walk construction requires at least 3 vertices")]
    TooFewVertices,
    #[error("missing edge ({0}, {1})")]
    MissingEdge(String, String),
    #[error("vertex `{0}` must have degree at least 2 in the complement")]
    LowComplementDegree(String),
    #[error("walk family requires K > n and K > max word length over F (got K={k}, n={n}, max={max_f})")]
    BadFreeParameter { k: usize, n: usize, max_f: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk must be nonempty")]
    EmptyWalk,
    #[error("steps {0} and {1} are not joined by a host edge")]
    NotAdjacent(usize, usize),
    #[error("walk is not closed: endpoints are not joined by a host edge")]
    NotClosed,
    #[error("walk does not cover the host vertex set")]
    NotCovering,
    #[error("step {0} is not a host vertex")]
    UnknownStep(usize),
}

/// Finite undirected simplicial graph with a declared vertex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialGraph {
    names: Vec<String>,
    adj: Vec<u64>,
}

impl SimplicialGraph {
    /// Builds a graph from vertex names and edges given as name pairs.
    pub fn new<S: AsRef<str>>(names: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        if names.is_empty() {
            return Err(GraphError::Empty);
        }
        if names.len() > 64 {
            return Err(GraphError::TooLarge(names.len()));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_owned()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(GraphError::DuplicateVertex(n.clone()));
            }
        }
        let mut g = SimplicialGraph {
            adj: vec![0; names.len()],
            names,
        };
        for (a, b) in edges {
            let a = g.index_of(a.as_ref())?;
            let b = g.index_of(b.as_ref())?;
            if a == b {
                return Err(GraphError::LoopEdge(g.names[a as usize].clone()));
            }
            g.adj[a as usize] |= 1 << b;
            g.adj[b as usize] |= 1 << a;
        }
        Ok(g)
    }

    /// Builds a graph on vertices `0..count` (named by their index) from id pairs.
    pub fn from_ids(count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let names: Vec<String> = (0..count).map(|i| i.to_string()).collect();
        let named: Vec<(String, String)> = edges
            .iter()
            .map(|&(a, b)| {
                (
                    names
                        .get(a as usize)
                        .cloned()
                        .unwrap_or_else(|| a.to_string()),
                    names
                        .get(b as usize)
                        .cloned()
                        .unwrap_or_else(|| b.to_string()),
                )
            })
            .collect();
        Self::new(&names, &named.iter().map(|(a, b)| (a.clone(), b.clone())).collect::<Vec<_>>())
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_of(&self, v: VertexId) -> &str {
        &self.names[v as usize]
    }

    pub fn index_of(&self, name: &str) -> Result<VertexId, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as VertexId)
            .ok_or_else(|| GraphError::UnknownVertex(name.to_owned()))
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.names.len()
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v.to_string()))
        }
    }

    pub fn adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.adj[a as usize] >> b & 1 == 1
    }

    /// Neighbourhood of `v` as a bitmask over vertex ids.
    pub fn neighbour_mask(&self, v: VertexId) -> u64 {
        self.adj[v as usize]
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for a in 0..self.vertex_count() as VertexId {
            for b in (a + 1)..self.vertex_count() as VertexId {
                if self.adjacent(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        Ok(self.adj[v as usize].count_ones() as usize)
    }

    /// Complement graph on the same vertices; an involution.
    pub fn complement(&self) -> SimplicialGraph {
        let full: u64 = if self.vertex_count() == 64 {
            u64::MAX
        } else {
            (1u64 << self.vertex_count()) - 1
        };
        let adj = self
            .adj
            .iter()
            .enumerate()
            .map(|(i, row)| (!row & full) & !(1u64 << i))
            .collect();
        SimplicialGraph {
            names: self.names.clone(),
            adj,
        }
    }

    /// `{v}` together with all neighbours of `v`.
    pub fn star(&self, v: VertexId) -> Result<BTreeSet<VertexId>, GraphError> {
        self.check_vertex(v)?;
        let mut out: BTreeSet<VertexId> = self.neighbours(v).collect();
        out.insert(v);
        Ok(out)
    }

    /// Neighbours of `v`, i.e. the star with `v` removed.
    pub fn link(&self, v: VertexId) -> Result<BTreeSet<VertexId>, GraphError> {
        self.check_vertex(v)?;
        Ok(self.neighbours(v).collect())
    }

    pub fn neighbours(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let row = self.adj[v as usize];
        (0..self.vertex_count() as VertexId).filter(move |b| row >> b & 1 == 1)
    }

    /// True iff every distinct pair in `set` is an edge. Empty sets and
    /// singletons are cliques.
    pub fn is_clique(&self, set: &[VertexId]) -> Result<bool, GraphError> {
        for &v in set {
            self.check_vertex(v)?;
        }
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                if a != b && !self.adjacent(a, b) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn is_connected(&self) -> Result<bool, GraphError> {
        if self.names.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut seen = 1u64;
        let mut stack = vec![0 as VertexId];
        while let Some(v) = stack.pop() {
            for w in self.neighbours(v) {
                if seen >> w & 1 == 0 {
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
        }
        Ok(seen.count_ones() as usize == self.vertex_count())
    }

    /// Stable fingerprint of the vertex list and edge set.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        for n in &self.names {
            for b in n.bytes() {
                mix(b);
            }
            mix(0xff);
        }
        for row in &self.adj {
            for b in row.to_le_bytes() {
                mix(b);
            }
        }
        h
    }
}

/// A finite vertex sequence whose consecutive steps are host edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Walk {
    pub steps: Vec<VertexId>,
}

impl Walk {
    pub fn new(steps: Vec<VertexId>) -> Self {
        Walk { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the walk invariants against `host`: consecutive adjacency,
    /// closedness (endpoints joined by a host edge) and covering (step set
    /// equals the host vertex set) where requested.
    pub fn validate(
        &self,
        host: &SimplicialGraph,
        closed: bool,
        covering: bool,
    ) -> Result<(), WalkError> {
        if self.steps.is_empty() {
            return Err(WalkError::EmptyWalk);
        }
        for (i, &s) in self.steps.iter().enumerate() {
            if !host.contains(s) {
                return Err(WalkError::UnknownStep(i));
            }
        }
        for i in 0..self.steps.len() - 1 {
            if !host.adjacent(self.steps[i], self.steps[i + 1]) {
                return Err(WalkError::NotAdjacent(i, i + 1));
            }
        }
        if closed {
            let first = self.steps[0];
            let last = *self.steps.last().unwrap();
            if !host.adjacent(first, last) {
                return Err(WalkError::NotClosed);
            }
        }
        if covering {
            let mut seen = 0u64;
            for &s in &self.steps {
                seen |= 1 << s;
            }
            if seen.count_ones() as usize != host.vertex_count() {
                return Err(WalkError::NotCovering);
            }
        }
        Ok(())
    }
}

/// Exhaustively enumerates closed walks of exactly `length` steps from `x`
/// to `y` that cover the whole graph, in lexicographic step order, up to
/// `cap` results.
pub fn enumerate_closed_covering_walks(
    g: &SimplicialGraph,
    x: VertexId,
    y: VertexId,
    length: usize,
    cap: usize,
) -> Vec<Walk> {
    let mut out = Vec::new();
    if length == 0 || !g.contains(x) || !g.contains(y) {
        return out;
    }
    // Closedness pins (x, y) as a host edge up front, except for the
    // degenerate single-step case which can never be closed.
    if !g.adjacent(x, y) {
        return out;
    }
    let full: u64 = if g.vertex_count() == 64 {
        u64::MAX
    } else {
        (1u64 << g.vertex_count()) - 1
    };
    let mut steps = vec![x];
    let seen = 1u64 << x;
    fn rec(
        g: &SimplicialGraph,
        y: VertexId,
        length: usize,
        cap: usize,
        full: u64,
        steps: &mut Vec<VertexId>,
        seen: u64,
        out: &mut Vec<Walk>,
    ) {
        if out.len() >= cap {
            return;
        }
        if steps.len() == length {
            if *steps.last().unwrap() == y && seen == full {
                out.push(Walk::new(steps.clone()));
            }
            return;
        }
        // Remaining positions must suffice to reach the missing vertices.
        let missing = (full & !seen).count_ones() as usize;
        if length - steps.len() < missing {
            return;
        }
        let cur = *steps.last().unwrap();
        for next in g.neighbours(cur) {
            steps.push(next);
            rec(g, y, length, cap, full, steps, seen | 1 << next, out);
            steps.pop();
        }
    }
    rec(g, y, length, cap, full, &mut steps, seen, &mut out);
    out
}

/// The walk family witnessing that closed covering walks between adjacent
/// vertices come in arbitrarily large batches of common length.
#[derive(Debug, Clone)]
pub struct AbundantWalks {
    /// Common walk length `L = 2(K + k + l - 1)`.
    pub length: usize,
    /// `K + 1 > n` pairwise distinct closed covering walks from `x` to `y`.
    pub walks: Vec<Walk>,
    /// The deterministic closed covering base walk `u` with `u_1 = x`, `u_2 = y`.
    pub base: Walk,
    /// The probe walk from `x` to a vertex with two distinct neighbours.
    pub probe: Walk,
    /// The two distinct neighbours of the probe endpoint used as pivots.
    pub branch: (VertexId, VertexId),
}

/// Deterministic closed covering walk with prescribed first two steps.
///
/// Depth-first exploration that records backtracking steps and stops at the
/// first moment every vertex has been visited and the current vertex is
/// adjacent to the start.
fn covering_walk(g: &SimplicialGraph, x: VertexId, y: VertexId) -> Vec<VertexId> {
    let full: u64 = if g.vertex_count() == 64 {
        u64::MAX
    } else {
        (1u64 << g.vertex_count()) - 1
    };
    let mut walk = vec![x];
    let mut visited = 1u64 << x;
    let mut parents: Vec<VertexId> = Vec::new();
    let mut cur = x;
    let mut first = true;
    loop {
        if visited == full && g.adjacent(cur, x) && cur != x {
            return walk;
        }
        let next = if first {
            first = false;
            Some(y)
        } else {
            g.neighbours(cur).find(|&w| visited >> w & 1 == 0)
        };
        match next {
            Some(w) => {
                parents.push(cur);
                visited |= 1 << w;
                cur = w;
                walk.push(w);
            }
            None => {
                let back = parents.pop().expect("covering walk backtracked past start");
                cur = back;
                walk.push(back);
            }
        }
    }
}

/// Shortest walk from `x` to the nearest vertex with degree at least 2,
/// breaking ties by vertex order.
fn probe_walk(g: &SimplicialGraph, x: VertexId) -> Option<Vec<VertexId>> {
    let mut parent: Vec<Option<VertexId>> = vec![None; g.vertex_count()];
    let mut dist: Vec<Option<usize>> = vec![None; g.vertex_count()];
    dist[x as usize] = Some(0);
    let mut queue = std::collections::VecDeque::from([x]);
    let mut target: Option<VertexId> = None;
    'outer: while let Some(v) = queue.pop_front() {
        if g.adj[v as usize].count_ones() >= 2 {
            target = Some(v);
            break 'outer;
        }
        for w in g.neighbours(v) {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(dist[v as usize].unwrap() + 1);
                parent[w as usize] = Some(v);
                queue.push_back(w);
            }
        }
    }
    let mut path = vec![target?];
    while let Some(p) = parent[path[path.len() - 1] as usize] {
        path.push(p);
    }
    path.reverse();
    Some(path)
}

/// Builds more than `n` distinct closed covering walks of a common length
/// from `x` to `y`, following the pattern: base walk, probe walk, `r1`
/// pivot-`a` repetitions, `r2` pivot-`b` repetitions with `r1 + r2 = K`,
/// then the retraced probe and base.
pub fn abundant_walks(
    g: &SimplicialGraph,
    x: VertexId,
    y: VertexId,
    n: usize,
) -> Result<AbundantWalks, GraphError> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if g.vertex_count() < 3 {
        return Err(GraphError::TooFewVertices);
    }
    if !g.is_connected()? {
        return Err(GraphError::Disconnected);
    }
    if !g.adjacent(x, y) {
        return Err(GraphError::MissingEdge(
            g.name_of(x).to_owned(),
            g.name_of(y).to_owned(),
        ));
    }
    let base = covering_walk(g, x, y);
    let probe = probe_walk(g, x).ok_or(GraphError::Disconnected)?;
    let tip = *probe.last().unwrap();
    let mut nbrs = g.neighbours(tip);
    let a = nbrs.next().expect("probe endpoint has degree >= 2");
    let b = nbrs.next().expect("probe endpoint has degree >= 2");
    // Smallest K exceeding n - 1.
    let k_rep = n;
    let length = 2 * (k_rep + base.len() + probe.len() - 1);
    let mut walks = Vec::with_capacity(k_rep + 1);
    for r1 in (0..=k_rep).rev() {
        let r2 = k_rep - r1;
        let mut steps = base.clone();
        steps.extend_from_slice(&probe);
        for _ in 0..r1 {
            steps.push(a);
            steps.push(tip);
        }
        for _ in 0..r2 {
            steps.push(b);
            steps.push(tip);
        }
        steps.extend(probe[..probe.len() - 1].iter().rev());
        steps.extend(base[1..].iter().rev());
        debug_assert_eq!(steps.len(), length);
        walks.push(Walk::new(steps));
    }
    Ok(AbundantWalks {
        length,
        walks,
        base: Walk::new(base),
        probe: Walk::new(probe),
        branch: (a, b),
    })
}

/// Walk family for the many-vertex construction, living in the complement.
#[derive(Debug, Clone)]
pub struct GraphCaseWalks {
    /// Common length `L = 2(R + K - 1)` where `K` is the base family length.
    pub length: usize,
    /// `n` distinct closed covering walks in the complement, common start `x`
    /// and common endpoint `y`.
    pub walks: Vec<Walk>,
    pub x: VertexId,
    /// Common endpoint; the first complement-neighbour of `x`.
    pub y: VertexId,
    /// Second complement-neighbour of `x`; not on an edge with `x`.
    pub z: VertexId,
    /// Repetition count `R = maxF + 1`.
    pub repetitions: usize,
    /// Length of the underlying abundant base walks.
    pub base_length: usize,
}

/// First vertex (in declared order) with complement-degree at least 2, the
/// default base point of the many-vertex construction.
pub fn select_base_vertex(gamma: &SimplicialGraph) -> Option<VertexId> {
    let comp = gamma.complement();
    (0..gamma.vertex_count() as VertexId).find(|&v| comp.adj[v as usize].count_ones() >= 2)
}

/// Builds `n` distinct closed covering walks in the complement of `gamma`,
/// all starting at `x` and ending at a common vertex, by prepending `R`
/// repetitions of the first two base-walk steps to each abundant base walk.
pub fn graph_case_walks(
    gamma: &SimplicialGraph,
    max_f: usize,
    x: VertexId,
    n: usize,
) -> Result<GraphCaseWalks, GraphError> {
    gamma.check_vertex(x)?;
    if gamma.vertex_count() < 3 {
        return Err(GraphError::TooFewVertices);
    }
    let comp = gamma.complement();
    if !comp.is_connected()? {
        return Err(GraphError::Disconnected);
    }
    let mut comp_nbrs = comp.neighbours(x);
    let (y, z) = match (comp_nbrs.next(), comp_nbrs.next()) {
        (Some(y), Some(z)) => (y, z),
        _ => return Err(GraphError::LowComplementDegree(gamma.name_of(x).to_owned())),
    };
    let base = abundant_walks(&comp, x, y, n)?;
    let repetitions = max_f + 1;
    let base_length = base.length;
    let length = 2 * (repetitions + base_length - 1);
    let first = &base.walks[0];
    let mut walks = Vec::with_capacity(n);
    for i in 0..n {
        let mut steps = Vec::with_capacity(length);
        for _ in 0..repetitions {
            steps.push(first.steps[0]);
            steps.push(first.steps[1]);
        }
        steps.extend_from_slice(&first.steps[2..]);
        steps.extend_from_slice(&base.walks[i].steps);
        debug_assert_eq!(steps.len(), length);
        walks.push(Walk::new(steps));
    }
    Ok(GraphCaseWalks {
        length,
        walks,
        x,
        y,
        z,
        repetitions,
        base_length,
    })
}

/// Vertex ids of the auxiliary three-vertex graph used by the free case.
pub const AUX_R: VertexId = 0;
pub const AUX_S: VertexId = 1;
pub const AUX_T: VertexId = 2;

/// The auxiliary graph on `{r, s, t}` with the single edge `(r, t)`. Its
/// complement is the path `r - s - t`.
pub fn free_aux_graph() -> SimplicialGraph {
    SimplicialGraph::new(&["r", "s", "t"], &[("r", "t")]).expect("static graph")
}

/// Walk family for the two-vertex (free) construction over the auxiliary
/// graph complement.
#[derive(Debug, Clone)]
pub struct FreeCaseWalks {
    /// Common length `L = 2(2K + n)`.
    pub length: usize,
    /// The walks indexed by `i = 1..=n`, each of the block shape
    /// `(s,r) x K, (s,t) x K, (s,r) x i, (s,t) x (n - i)`.
    pub walks: Vec<Walk>,
    pub k: usize,
}

/// Builds the `n` block walks over the complement of the auxiliary graph.
pub fn free_case_walks(k: usize, n: usize, max_f: usize) -> Result<FreeCaseWalks, GraphError> {
    if k <= n || k <= max_f {
        return Err(GraphError::BadFreeParameter { k, n, max_f });
    }
    let length = 2 * (2 * k + n);
    let mut walks = Vec::with_capacity(n);
    for i in 1..=n {
        let mut steps = Vec::with_capacity(length);
        for _ in 0..k {
            steps.push(AUX_S);
            steps.push(AUX_R);
        }
        for _ in 0..k {
            steps.push(AUX_S);
            steps.push(AUX_T);
        }
        for _ in 0..i {
            steps.push(AUX_S);
            steps.push(AUX_R);
        }
        for _ in 0..n - i {
            steps.push(AUX_S);
            steps.push(AUX_T);
        }
        debug_assert_eq!(steps.len(), length);
        walks.push(Walk::new(steps));
    }
    Ok(FreeCaseWalks { length, walks, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k3() -> SimplicialGraph {
        SimplicialGraph::new(&["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap()
    }

    fn edgeless(n: usize) -> SimplicialGraph {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        SimplicialGraph::new(&names, &[]).unwrap()
    }

    #[test]
    fn complement_of_complete_graph_is_edgeless() {
        let c = k3().complement();
        assert!(c.edges().is_empty());
        assert_eq!(c.complement(), k3());
    }

    #[test]
    fn complement_single_edge() {
        let g = SimplicialGraph::new(&["a", "b", "c"], &[("a", "b")]).unwrap();
        let c = g.complement();
        assert_eq!(c.edges(), vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn star_and_link() {
        let g = SimplicialGraph::new(&["a", "b", "c"], &[("a", "b")]).unwrap();
        assert_eq!(g.star(0).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(edgeless(3).star(1).unwrap(), BTreeSet::from([1]));
        assert_eq!(k3().star(0).unwrap(), BTreeSet::from([0, 1, 2]));
        assert_eq!(g.link(0).unwrap(), BTreeSet::from([1]));
        assert!(g.star(7).is_err());
    }

    #[test]
    fn clique_checks() {
        let g = SimplicialGraph::new(&["a", "b", "c"], &[("a", "b")]).unwrap();
        assert!(g.is_clique(&[]).unwrap());
        assert!(g.is_clique(&[0]).unwrap());
        assert!(g.is_clique(&[0, 1]).unwrap());
        assert!(!g.is_clique(&[0, 1, 2]).unwrap());
        assert!(g.is_clique(&[9]).is_err());
    }

    #[test]
    fn connectivity() {
        assert!(k3().is_connected().unwrap());
        assert!(!edgeless(2).is_connected().unwrap());
        let g = SimplicialGraph::new(&["a", "b", "c"], &[("a", "b")]).unwrap();
        assert!(g.complement().is_connected().unwrap());
    }

    #[test]
    fn rejects_loops_and_unknown_endpoints() {
        assert_eq!(
            SimplicialGraph::new(&["a"], &[("a", "a")]),
            Err(GraphError::LoopEdge("a".into()))
        );
        assert!(matches!(
            SimplicialGraph::new(&["a"], &[("a", "b")]),
            Err(GraphError::UnknownVertex(_))
        ));
    }

    #[test]
    fn enumerate_respects_covering() {
        // A two-step walk cannot cover three vertices; neither can one step.
        assert!(enumerate_closed_covering_walks(&k3(), 0, 1, 2, usize::MAX).is_empty());
        assert!(enumerate_closed_covering_walks(&k3(), 0, 1, 1, usize::MAX).is_empty());
        let walks = enumerate_closed_covering_walks(&k3(), 0, 1, 3, usize::MAX);
        assert_eq!(walks, vec![Walk::new(vec![0, 2, 1])]);
    }

    #[test]
    fn enumerate_finds_the_length8_pattern() {
        let walks = enumerate_closed_covering_walks(&k3(), 0, 1, 8, usize::MAX);
        assert!(walks.contains(&Walk::new(vec![0, 1, 2, 0, 1, 0, 2, 1])));
        for w in &walks {
            w.validate(&k3(), true, true).unwrap();
        }
    }

    #[test]
    fn abundant_walks_on_k3() {
        let fam = abundant_walks(&k3(), 0, 1, 1).unwrap();
        assert_eq!(fam.length, 8);
        assert!(fam.walks.len() > 1);
        assert!(fam.walks.contains(&Walk::new(vec![0, 1, 2, 0, 1, 0, 2, 1])));
        let all = enumerate_closed_covering_walks(&k3(), 0, 1, 8, usize::MAX);
        for w in &fam.walks {
            w.validate(&k3(), true, true).unwrap();
            assert!(all.contains(w), "oracle must contain {w:?}");
        }
        let mut dedup = fam.walks.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), fam.walks.len());
    }

    #[test]
    fn abundant_walks_rejects_bad_inputs() {
        // Edgeless graph: disconnected, reported before the missing edge.
        assert_eq!(
            abundant_walks(&edgeless(3), 0, 1, 1).unwrap_err(),
            GraphError::Disconnected
        );
        let path = SimplicialGraph::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(
            abundant_walks(&path, 0, 2, 1).unwrap_err(),
            GraphError::MissingEdge("a".into(), "c".into())
        );
        assert_eq!(
            abundant_walks(&k3(), 0, 1, 1).map(|f| f.length),
            Ok(8)
        );
        let two = SimplicialGraph::new(&["a", "b"], &[("a", "b")]).unwrap();
        assert_eq!(
            abundant_walks(&two, 0, 1, 1).unwrap_err(),
            GraphError::TooFewVertices
        );
    }

    #[test]
    fn graph_case_walks_on_edgeless_three() {
        let gamma = edgeless(3);
        let fam = graph_case_walks(&gamma, 2, 0, 1).unwrap();
        assert_eq!(fam.repetitions, 3);
        assert_eq!(fam.base_length, 8);
        assert_eq!(fam.length, 20);
        let comp = gamma.complement();
        let w2 = fam.walks[0].steps[1];
        for w in &fam.walks {
            w.validate(&comp, true, true).unwrap();
            assert_eq!(&w.steps[..6], &[fam.x, w2, fam.x, w2, fam.x, w2]);
        }
        assert_ne!(fam.y, fam.z);
        assert!(!gamma.adjacent(fam.x, fam.z));
    }

    #[test]
    fn graph_case_walks_three_distinct() {
        let fam = graph_case_walks(&edgeless(3), 2, 0, 3).unwrap();
        assert_eq!(fam.walks.len(), 3);
        let mut dedup = fam.walks.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 3);
        let last = fam.length - 1;
        assert!(fam.walks.iter().all(|w| w.steps[0] == fam.x));
        assert!(fam.walks.iter().all(|w| w.steps[last] == fam.y));
    }

    #[test]
    fn free_case_walks_smallest_instance() {
        let fam = free_case_walks(2, 1, 1).unwrap();
        assert_eq!(fam.length, 10);
        assert_eq!(fam.walks.len(), 1);
        assert_eq!(
            fam.walks[0].steps,
            vec![AUX_S, AUX_R, AUX_S, AUX_R, AUX_S, AUX_T, AUX_S, AUX_T, AUX_S, AUX_R]
        );
        let comp = free_aux_graph().complement();
        fam.walks[0].validate(&comp, true, true).unwrap();
    }

    #[test]
    fn free_case_walks_tail_split() {
        let fam = free_case_walks(3, 2, 2).unwrap();
        assert_eq!(fam.length, 16);
        assert_eq!(fam.walks.len(), 2);
        assert_eq!(&fam.walks[0].steps[..12], &fam.walks[1].steps[..12]);
        assert_ne!(fam.walks[0], fam.walks[1]);
        let comp = free_aux_graph().complement();
        for w in &fam.walks {
            w.validate(&comp, true, true).unwrap();
        }
    }

    #[test]
    fn free_case_walks_parameter_gate() {
        assert!(matches!(
            free_case_walks(2, 2, 1),
            Err(GraphError::BadFreeParameter { .. })
        ));
        assert!(matches!(
            free_case_walks(2, 1, 2),
            Err(GraphError::BadFreeParameter { .. })
        ));
    }

    fn arb_graph() -> impl Strategy<Value = SimplicialGraph> {
        (2usize..6, any::<u32>()).prop_map(|(n, bits)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n as VertexId {
                for b in (a + 1)..n as VertexId {
                    if bits >> (k % 32) & 1 == 1 {
                        edges.push((a, b));
                    }
                    k += 1;
                }
            }
            SimplicialGraph::from_ids(n, &edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn complement_is_an_involution(g in arb_graph()) {
            prop_assert_eq!(g.complement().complement(), g);
        }

        #[test]
        fn complement_partitions_pairs(g in arb_graph()) {
            let c = g.complement();
            for a in 0..g.vertex_count() as VertexId {
                for b in 0..g.vertex_count() as VertexId {
                    if a != b {
                        prop_assert!(g.adjacent(a, b) ^ c.adjacent(a, b));
                    }
                }
            }
        }

        #[test]
        fn abundant_walks_validate_everywhere(g in arb_graph(), n in 0usize..3) {
            prop_assume!(g.vertex_count() >= 3);
            prop_assume!(g.is_connected().unwrap());
            let edges = g.edges();
            prop_assume!(!edges.is_empty());
            let (x, y) = edges[0];
            let fam = abundant_walks(&g, x, y, n).unwrap();
            prop_assert!(fam.walks.len() >= n + 1);
            for w in &fam.walks {
                prop_assert!(w.validate(&g, true, true).is_ok());
                prop_assert_eq!(w.steps[0], x);
                prop_assert_eq!(*w.steps.last().unwrap(), y);
                prop_assert_eq!(w.len(), fam.length);
            }
            let mut dedup: Vec<_> = fam.walks.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), fam.walks.len());
        }
    }
}
