//! Builders for the walk-based operators `T_{n,F}` and the checks that
//! certify every identity their construction rests on.
//!
//! Two regimes share one shape. With at least three vertices, walks in the
//! complement graph produce words `g_i` and the operator averages the
//! branches `Q(u_{g_i xy} O)(u_{g_i xy} u_x u_{g_i xz}*)` and their
//! counterparts on the complement of the projection. With exactly two
//! vertices, walks over an auxiliary three-vertex graph are translated
//! through the pairing data `u_r = v1*, u_s = u, u_t = v2*`.
//!
//! Every check evaluates operator identities on a deterministic sampled
//! vector suite and reports the maximal residual; nothing is asserted
//! against a truncated basis.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, CMat, C64};
use crate::coxeter::{CoxeterError, GroupElement};
use crate::fock::{
    rayleigh_probe, reduced_operator, FockContext, FockError, FockIndex, FockVector,
    OperatorExpression,
};
use crate::graph::{
    free_case_walks, graph_case_walks, select_base_vertex, GraphError, VertexId, Walk, AUX_R,
    AUX_S, AUX_T,
};

/// Default residual tolerance for every asserted identity.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("builder requires {0} mode")]
    WrongMode(&'static str),
    #[error("the finite set F must avoid the identity")]
    IdentityInF,
    #[error("free mode requires pairing data (u, v1, v2)")]
    MissingAvitzour,
    #[error("no vertex has degree at least 2 in the complement")]
    NoBasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Graph,
    Free,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Graph => "graph",
            Mode::Free => "free",
        }
    }
}

/// Pairing data of the two-vertex regime: a centralizer-kernel unitary in
/// the first algebra and an orthogonal pair in the second.
#[derive(Debug, Clone)]
pub struct AvitzourData {
    pub u: CMat,
    pub v1: CMat,
    pub v2: CMat,
    pub u_name: String,
    pub v1_name: String,
    pub v2_name: String,
}

/// A fully validated run configuration: host graph, one algebra per vertex,
/// the regime, and pairing data in free mode.
#[derive(Debug, Clone)]
pub struct SelflessConfig {
    pub ctx: FockContext,
    pub mode: Mode,
    pub avitzour: Option<AvitzourData>,
}

/// One verification row: an identity, its parameters, and the worst
/// residual observed on the sampled suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check_id: String,
    pub anchor: String,
    pub parameters: serde_json::Value,
    pub max_residual: f64,
    pub pass: bool,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl CheckRow {
    fn new(
        check_id: &str,
        anchor: &str,
        parameters: serde_json::Value,
        max_residual: f64,
        pass: bool,
    ) -> Self {
        CheckRow {
            check_id: check_id.to_owned(),
            anchor: anchor.to_owned(),
            parameters,
            max_residual,
            pass,
            wall_ms: 0.0,
        }
    }
}

fn timed<F: FnOnce() -> CheckRow>(f: F) -> CheckRow {
    let start = std::time::Instant::now();
    let mut row = f();
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

/// Letter stack: a word of vertices with one algebra element per letter.
pub type LetterStack = Vec<(VertexId, CMat)>;

/// Per-walk data of one summand of `T_{n,F}`.
#[derive(Debug, Clone)]
pub struct TBranch {
    /// Stack of `u_{g xy}` (graph) or `u_{g st}` (free).
    pub ascend: LetterStack,
    /// Stack of `u_{g xz}` (graph) or `u_{g sr}` (free).
    pub descend: LetterStack,
    /// Stack of `u_g`, the bare walk word.
    pub base: LetterStack,
    /// Stack whose projection dominates the descent-compressed summand:
    /// `u_{g xz}` in graph mode, `u_{g s}` in free mode.
    pub contain: LetterStack,
    /// The unitary `u_{g xy} u_x u_{g xz}*` resp. `u_{g st} u_{g sr}*`.
    pub w_up: OperatorExpression,
    /// Its adjoint.
    pub w_down: OperatorExpression,
    /// `Q(u_ascend O)`.
    pub q_ascend: OperatorExpression,
    /// `w_down (1 - Q) w_up`, one summand of `P1`.
    pub p1_summand: OperatorExpression,
}

/// The operator `T_{n,F}` with its projection decomposition and the
/// explicit reduced-operator expansion of its self-adjoint part.
#[derive(Debug)]
pub struct TOperator {
    pub n: usize,
    pub f: Vec<GroupElement>,
    pub mode: Mode,
    pub expr: OperatorExpression,
    pub p1: OperatorExpression,
    pub p2: OperatorExpression,
    /// `(1 / sqrt(2n)) sum (w_up + w_down)`, equal to `T + T*`.
    pub explicit: OperatorExpression,
    pub branches: Vec<TBranch>,
    pub walks: Vec<Walk>,
    pub walk_len: usize,
    pub info: serde_json::Value,
}

fn stack_expr(ctx: &FockContext, stack: &LetterStack) -> Result<OperatorExpression, FockError> {
    let mut parts = Vec::with_capacity(stack.len());
    for (v, x) in stack {
        parts.push(ctx.lambda(*v, x)?);
    }
    Ok(OperatorExpression::product(parts))
}

fn assemble(
    cfg: &SelflessConfig,
    branches: Vec<TBranch>,
    f: Vec<GroupElement>,
    n: usize,
    walks: Vec<Walk>,
    walk_len: usize,
    info: serde_json::Value,
) -> TOperator {
    let scale = C64::new(1.0 / (2.0 * n as f64).sqrt(), 0.0);
    let mut t_terms = Vec::with_capacity(2 * n);
    let mut explicit_terms = Vec::with_capacity(2 * n);
    let mut p1_terms = Vec::with_capacity(n);
    let mut p2_terms = Vec::with_capacity(n);
    for b in &branches {
        t_terms.push(OperatorExpression::Product(vec![
            b.q_ascend.clone(),
            b.w_up.clone(),
        ]));
        t_terms.push(OperatorExpression::Product(vec![
            b.w_down.clone(),
            b.q_ascend.clone().complement(),
        ]));
        explicit_terms.push(b.w_up.clone());
        explicit_terms.push(b.w_down.clone());
        p1_terms.push(b.p1_summand.clone());
        p2_terms.push(b.q_ascend.clone());
    }
    TOperator {
        n,
        f,
        mode: cfg.mode,
        expr: OperatorExpression::Sum(t_terms).scaled(scale),
        p1: OperatorExpression::Sum(p1_terms),
        p2: OperatorExpression::Sum(p2_terms),
        explicit: OperatorExpression::Sum(explicit_terms).scaled(scale),
        branches,
        walks,
        walk_len,
        info,
    }
}

fn check_f(f: &[GroupElement]) -> Result<usize, HarnessError> {
    if f.iter().any(|w| w.is_identity()) {
        return Err(HarnessError::IdentityInF);
    }
    Ok(f.iter().map(|w| w.len()).max().unwrap_or(0))
}

/// Builds `T_{n,F}` in the many-vertex regime: a base point of
/// complement-degree at least 2, the walk family, and per-walk branches
/// over the per-vertex distinguished unitaries.
pub fn build_t_graph(
    cfg: &SelflessConfig,
    f: &[GroupElement],
    n: usize,
) -> Result<TOperator, HarnessError> {
    if cfg.mode != Mode::Graph {
        return Err(HarnessError::WrongMode("graph"));
    }
    let max_f = check_f(f)?;
    let graph = cfg.ctx.graph();
    let x = select_base_vertex(graph).ok_or(HarnessError::NoBasePoint)?;
    let fam = graph_case_walks(graph, max_f, x, n)?;
    let unitary = |v: VertexId| -> Result<CMat, HarnessError> {
        Ok(cfg.ctx.algebra(v).distinguished_unitary()?.clone())
    };
    let (y, z) = (fam.y, fam.z);
    let mut branches = Vec::with_capacity(n);
    for walk in &fam.walks {
        let base: LetterStack = walk
            .steps
            .iter()
            .map(|&v| Ok((v, unitary(v)?)))
            .collect::<Result<_, HarnessError>>()?;
        let mut ascend = base.clone();
        ascend.push((x, unitary(x)?));
        ascend.push((y, unitary(y)?));
        let mut descend = base.clone();
        descend.push((x, unitary(x)?));
        descend.push((z, unitary(z)?));
        let w_up = OperatorExpression::Product(vec![
            stack_expr(&cfg.ctx, &ascend)?,
            cfg.ctx.lambda(x, &unitary(x)?)?,
            stack_expr(&cfg.ctx, &descend)?.adjoint(),
        ]);
        let w_down = w_up.adjoint();
        let q_ascend = cfg.ctx.q_vector(&ascend)?;
        let p1_summand = OperatorExpression::Product(vec![
            w_down.clone(),
            q_ascend.clone().complement(),
            w_up.clone(),
        ]);
        branches.push(TBranch {
            contain: descend.clone(),
            ascend,
            descend,
            base,
            w_up,
            w_down,
            q_ascend,
            p1_summand,
        });
    }
    let info = serde_json::json!({
        "case": "graph",
        "x": graph.name_of(x),
        "y": graph.name_of(y),
        "z": graph.name_of(z),
        "repetitions": fam.repetitions,
        "walk_length": fam.length,
        "base_length": fam.base_length,
    });
    Ok(assemble(
        cfg,
        branches,
        f.to_vec(),
        n,
        fam.walks,
        fam.length,
        info,
    ))
}

/// Builds `T_{n,F}` in the two-vertex regime. Walk letters over the
/// auxiliary graph translate to algebra elements via
/// `r -> v1*, s -> u, t -> v2*`.
pub fn build_t_free(
    cfg: &SelflessConfig,
    f: &[GroupElement],
    n: usize,
) -> Result<TOperator, HarnessError> {
    if cfg.mode != Mode::Free {
        return Err(HarnessError::WrongMode("free"));
    }
    let max_f = check_f(f)?;
    let data = cfg.avitzour.as_ref().ok_or(HarnessError::MissingAvitzour)?;
    let k = n.max(max_f) + 1;
    let fam = free_case_walks(k, n, max_f)?;
    let map_letter = |aux: VertexId| -> (VertexId, CMat) {
        match aux {
            AUX_R => (1, data.v1.adjoint()),
            AUX_S => (0, data.u.clone()),
            AUX_T => (1, data.v2.adjoint()),
            _ => unreachable!("auxiliary graph has three vertices"),
        }
    };
    let mut branches = Vec::with_capacity(n);
    for walk in &fam.walks {
        let base: LetterStack = walk.steps.iter().map(|&v| map_letter(v)).collect();
        let mut ascend = base.clone();
        ascend.push(map_letter(AUX_S));
        ascend.push(map_letter(AUX_T));
        let mut descend = base.clone();
        descend.push(map_letter(AUX_S));
        descend.push(map_letter(AUX_R));
        let mut contain = base.clone();
        contain.push(map_letter(AUX_S));
        let w_up = OperatorExpression::Product(vec![
            stack_expr(&cfg.ctx, &ascend)?,
            stack_expr(&cfg.ctx, &descend)?.adjoint(),
        ]);
        let w_down = w_up.adjoint();
        let q_ascend = cfg.ctx.q_vector(&ascend)?;
        let p1_summand = OperatorExpression::Product(vec![
            w_down.clone(),
            q_ascend.clone().complement(),
            w_up.clone(),
        ]);
        branches.push(TBranch {
            ascend,
            descend,
            base,
            contain,
            w_up,
            w_down,
            q_ascend,
            p1_summand,
        });
    }
    let info = serde_json::json!({
        "case": "free",
        "K": k,
        "walk_length": fam.length,
        "u": data.u_name,
        "v1": data.v1_name,
        "v2": data.v2_name,
    });
    Ok(assemble(
        cfg,
        branches,
        f.to_vec(),
        n,
        fam.walks,
        fam.length,
        info,
    ))
}

/// Builds the operator for the configured regime.
pub fn build_t(
    cfg: &SelflessConfig,
    f: &[GroupElement],
    n: usize,
) -> Result<TOperator, HarnessError> {
    match cfg.mode {
        Mode::Graph => build_t_graph(cfg, f, n),
        Mode::Free => build_t_free(cfg, f, n),
    }
}

/// The finite set `F`: the ball of the given radius with the identity
/// removed.
pub fn ball_without_identity(cfg: &SelflessConfig, radius: usize) -> Vec<GroupElement> {
    cfg.ctx
        .coxeter()
        .enumerate_ball(radius)
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect()
}

/// Deterministic sampled-vector suite: walk-aligned states obtained by
/// applying suffixes of the branch stacks to the vacuum (with occasional
/// leg re-rolls), plus generic sparse combinations over short words.
pub fn sample_suite(
    cfg: &SelflessConfig,
    top: &TOperator,
    seed: u64,
    walk_aligned: usize,
    generic: usize,
) -> Vec<FockVector> {
    let ctx = &cfg.ctx;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stacks: Vec<&LetterStack> = Vec::new();
    for b in &top.branches {
        stacks.push(&b.ascend);
        stacks.push(&b.descend);
    }
    let mut out = Vec::with_capacity(walk_aligned + generic);
    let max_word = 30;
    for _ in 0..walk_aligned {
        let mut vec = FockVector::zero();
        let support = rng.random_range(1..=8usize);
        for _ in 0..support {
            let stack = stacks[rng.random_range(0..stacks.len())];
            let lo = stack.len().saturating_sub(max_word);
            let start = rng.random_range(lo..=stack.len());
            let mut state = FockVector::vacuum();
            for (v, x) in stack[start..].iter().rev() {
                let op = ctx.lambda(*v, x).expect("validated stack element");
                state = op.apply(ctx, &state);
            }
            // Re-roll legs half the time to leave the pinned spans.
            if rng.random_range(0..2) == 1 && state.support() == 1 {
                let (idx, _) = state.amplitudes().next().map(|(i, a)| (i.clone(), *a)).unwrap();
                let legs: Vec<u32> = idx
                    .letters
                    .iter()
                    .map(|&l| rng.random_range(0..ctx.defect_dim(l)) as u32)
                    .collect();
                state = FockVector::basis(FockIndex::new(idx.letters, legs));
            }
            let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            vec.add_scaled(&state, amp);
        }
        if let Some(v) = vec.normalized() {
            out.push(v);
        }
    }
    let ball = ctx.coxeter().enumerate_ball(6);
    for _ in 0..generic {
        let mut vec = FockVector::zero();
        let support = rng.random_range(1..=8usize);
        for _ in 0..support {
            let w = &ball[rng.random_range(0..ball.len())];
            let legs: Vec<u32> = w
                .letters()
                .iter()
                .map(|&l| rng.random_range(0..ctx.defect_dim(l)) as u32)
                .collect();
            let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            vec.insert_add(FockIndex::new(w.letters().to_vec(), legs), amp);
        }
        if let Some(v) = vec.normalized() {
            out.push(v);
        }
    }
    out
}

fn max_zero_residual(
    ctx: &FockContext,
    expr: &OperatorExpression,
    suite: &[FockVector],
) -> f64 {
    suite
        .par_iter()
        .map(|v| expr.apply(ctx, v).norm())
        .reduce(|| 0.0, f64::max)
}

fn max_equality_residual(
    ctx: &FockContext,
    lhs: &OperatorExpression,
    rhs: &OperatorExpression,
    suite: &[FockVector],
) -> f64 {
    suite
        .par_iter()
        .map(|v| {
            let mut d = lhs.apply(ctx, v);
            d.add_scaled(&rhs.apply(ctx, v), C64::new(-1.0, 0.0));
            d.norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// Worst distance of `op v` from the range of the projection `proj`.
fn max_containment_residual(
    ctx: &FockContext,
    proj: &OperatorExpression,
    op: &OperatorExpression,
    suite: &[FockVector],
) -> f64 {
    suite
        .par_iter()
        .map(|v| {
            let image = op.apply(ctx, v);
            let mut d = proj.apply(ctx, &image);
            d.add_scaled(&image, C64::new(-1.0, 0.0));
            d.norm()
        })
        .reduce(|| 0.0, f64::max)
}

fn max_projection_defect(
    ctx: &FockContext,
    p: &OperatorExpression,
    suite: &[FockVector],
) -> f64 {
    let idem = suite
        .par_iter()
        .map(|v| {
            let once = p.apply(ctx, v);
            let mut d = p.apply(ctx, &once);
            d.add_scaled(&once, C64::new(-1.0, 0.0));
            d.norm()
        })
        .reduce(|| 0.0, f64::max);
    let pairs: Vec<(usize, usize)> = (0..suite.len().min(24))
        .flat_map(|i| ((i + 1)..suite.len().min(24)).map(move |j| (i, j)))
        .collect();
    let selfadj = pairs
        .par_iter()
        .map(|&(i, j)| {
            let lhs = p.apply(ctx, &suite[i]).inner(&suite[j]);
            let rhs = suite[i].inner(&p.apply(ctx, &suite[j]));
            (lhs - rhs).norm()
        })
        .reduce(|| 0.0, f64::max);
    idem.max(selfadj)
}

/// All reduced operators spanning a type: one defect-basis lift per letter,
/// every combination.
pub fn spanning_stacks(cfg: &SelflessConfig, word: &GroupElement) -> Vec<LetterStack> {
    let ctx = &cfg.ctx;
    let mut stacks: Vec<LetterStack> = vec![Vec::new()];
    for &letter in word.letters() {
        let dim = ctx.defect_dim(letter);
        let mut next = Vec::with_capacity(stacks.len() * dim);
        for stack in &stacks {
            for k in 0..dim {
                let mut s = stack.clone();
                s.push((letter, ctx.algebra(letter).defect_lift(k).clone()));
                next.push(s);
            }
        }
        stacks = next;
    }
    stacks
}

fn anchors(mode: Mode) -> [(&'static str, &'static str); 9] {
    match mode {
        Mode::Graph => [
            ("lemma_1_1", "Q(u_gxy O) Q(u_hxy O) = 0"),
            ("lemma_1_2", "Q(u_gxy O) (u_hxy u_x u_hxz*) Q(u_hxy O)^ = 0"),
            ("lemma_1_3", "Q(u_gxy O)^ (u_gxy u_x u_gxz*) Q(u_hxy O) = 0"),
            ("lemma_1_4", "Q(u_gxy O)^ (u_gxy u_x u_gxz*) Q(u_gxy O) = 0"),
            (
                "lemma_1_5",
                "Q(u_gxy O)^ (u_gxy u_x u_gxz*)(u_hxz u_x* u_hxy*) Q(u_hxy O)^ = 0",
            ),
            (
                "lemma_2_1",
                "(u_gxz u_x* u_gxy*) Q(u_gxy O)^ (u_gxy u_x u_gxz*) <= Q(u_gxz O)",
            ),
            (
                "lemma_2_2",
                "(u_hxz u_x* u_hxy*) Q(u_hxy O)^ (u_hxy u_x u_hxz*) <= Q(u_hxz O)",
            ),
            (
                "lemma_3_1",
                "Q(u_gxy O)^ (u_gxy u_x u_gxz*) = Q(u_gxy O)^ (u_gxy u_x u_gxz*) Q(u_g O)",
            ),
            (
                "main_identity",
                "(u_gxz u_x* u_gxy*) Q(u_gxy O)^ = Q(u_gxz O) (u_gxz u_x* u_gxy*) Q(u_gxy O)^",
            ),
        ],
        Mode::Free => [
            ("lemma_1_1", "Q(u_gst O) Q(u_hst O) = 0"),
            ("lemma_1_2", "Q(u_gst O) (u_hsr u_hst*) Q(u_hst O)^ = 0"),
            ("lemma_1_3", "Q(u_gst O)^ (u_gst u_gsr*) Q(u_hst O) = 0"),
            ("lemma_1_4", "Q(u_gst O)^ (u_gst u_gsr*) Q(u_gst O) = 0"),
            (
                "lemma_1_5",
                "Q(u_gst O)^ (u_gst u_gsr*)(u_hsr u_hst*) Q(u_gst O)^ = 0",
            ),
            (
                "lemma_2_1",
                "(u_gsr u_gst*) Q(u_gst O)^ (u_gst u_gsr*) <= Q(u_gs O)",
            ),
            (
                "lemma_2_2",
                "(u_hsr u_hst*) Q(u_hst O)^ (u_hst u_hsr*) <= Q(u_hs O)",
            ),
            (
                "lemma_3_1",
                "Q(u_gst O)^ (u_gst u_gsr*) = Q(u_gst O)^ (u_gst u_gsr*) Q(u_g O)",
            ),
            (
                "main_identity",
                "(u_gsr u_gst*) Q(u_gst O)^ = Q(u_gs O) (u_gsr u_gst*) Q(u_gst O)^",
            ),
        ],
    }
}

/// Evaluates the eight displayed multiplication relations, plus the master
/// identity they all reduce to, over every ordered pair of distinct walks.
pub fn check_lemma_identities(
    cfg: &SelflessConfig,
    top: &TOperator,
    suite: &[FockVector],
    tol: f64,
) -> Result<Vec<CheckRow>, HarnessError> {
    let ctx = &cfg.ctx;
    let n = top.branches.len();
    let labels = anchors(top.mode);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let pair_params = serde_json::json!({"n": n, "ordered_pairs": pairs.len(), "walk_length": top.walk_len});
    let single_params = serde_json::json!({"n": n, "walk_length": top.walk_len});
    let mut rows = Vec::new();

    // Pairwise relations (1.1), (1.2), (1.3), (1.5).
    for slot in [0usize, 1, 2, 4] {
        let (id, anchor) = labels[slot];
        let params = pair_params.clone();
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for &(i, j) in &pairs {
                let g = &top.branches[i];
                let h = &top.branches[j];
                let expr = match slot {
                    0 => OperatorExpression::Product(vec![
                        g.q_ascend.clone(),
                        h.q_ascend.clone(),
                    ]),
                    1 => OperatorExpression::Product(vec![
                        g.q_ascend.clone(),
                        match top.mode {
                            Mode::Graph => h.w_up.clone(),
                            Mode::Free => h.w_down.clone(),
                        },
                        h.q_ascend.clone().complement(),
                    ]),
                    2 => OperatorExpression::Product(vec![
                        g.q_ascend.clone().complement(),
                        g.w_up.clone(),
                        h.q_ascend.clone(),
                    ]),
                    _ => {
                        let right = match top.mode {
                            // The displayed free relation closes with the
                            // g-side complement; the graph one with h.
                            Mode::Graph => h.q_ascend.clone().complement(),
                            Mode::Free => g.q_ascend.clone().complement(),
                        };
                        OperatorExpression::Product(vec![
                            g.q_ascend.clone().complement(),
                            g.w_up.clone(),
                            h.w_down.clone(),
                            right,
                        ])
                    }
                };
                worst = worst.max(max_zero_residual(ctx, &expr, suite));
            }
            CheckRow::new(id, anchor, params.clone(), worst, worst < tol)
        }));
    }

    // Per-walk relation (1.4).
    {
        let (id, anchor) = labels[3];
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for b in &top.branches {
                let expr = OperatorExpression::Product(vec![
                    b.q_ascend.clone().complement(),
                    b.w_up.clone(),
                    b.q_ascend.clone(),
                ]);
                worst = worst.max(max_zero_residual(ctx, &expr, suite));
            }
            CheckRow::new(id, anchor, single_params.clone(), worst, worst < tol)
        }));
    }

    // Range containments (2.1) and (2.2): the same shape on each walk; the
    // first walk instantiates (2.1), the others (2.2).
    for (slot, take_first) in [(5usize, true), (6, false)] {
        let (id, anchor) = labels[slot];
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for (i, b) in top.branches.iter().enumerate() {
                if take_first != (i == 0) && n > 1 {
                    continue;
                }
                let proj = cfg
                    .ctx
                    .q_vector(&b.contain)
                    .expect("contain stack is reduced");
                worst = worst.max(max_containment_residual(ctx, &proj, &b.p1_summand, suite));
            }
            CheckRow::new(id, anchor, single_params.clone(), worst, worst < tol)
        }));
    }

    // Per-walk relation (3.1).
    {
        let (id, anchor) = labels[7];
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for b in &top.branches {
                let q_base = cfg.ctx.q_vector(&b.base).expect("base stack is reduced");
                let lhs = OperatorExpression::Product(vec![
                    b.q_ascend.clone().complement(),
                    b.w_up.clone(),
                ]);
                let rhs = OperatorExpression::Product(vec![
                    b.q_ascend.clone().complement(),
                    b.w_up.clone(),
                    q_base,
                ]);
                worst = worst.max(max_equality_residual(ctx, &lhs, &rhs, suite));
            }
            CheckRow::new(id, anchor, single_params.clone(), worst, worst < tol)
        }));
    }

    // Master identity.
    {
        let (id, anchor) = labels[8];
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for b in &top.branches {
                let q_contain = cfg
                    .ctx
                    .q_vector(&b.contain)
                    .expect("contain stack is reduced");
                let lhs = OperatorExpression::Product(vec![
                    b.w_down.clone(),
                    b.q_ascend.clone().complement(),
                ]);
                let rhs = OperatorExpression::Product(vec![
                    q_contain,
                    b.w_down.clone(),
                    b.q_ascend.clone().complement(),
                ]);
                worst = worst.max(max_equality_residual(ctx, &lhs, &rhs, suite));
            }
            CheckRow::new(id, anchor, single_params.clone(), worst, worst < tol)
        }));
    }

    Ok(rows)
}

fn word_label(cfg: &SelflessConfig, w: &GroupElement) -> String {
    w.letters()
        .iter()
        .map(|&l| cfg.ctx.graph().name_of(l).to_owned())
        .collect::<Vec<_>>()
        .join(",")
}

/// `Q(u_gi O) a Q(u_gj O) = 0` for a spanning set of reduced operators of
/// every type in `F`, over all ordered walk pairs including `i = j`.
pub fn check_different_paths(
    cfg: &SelflessConfig,
    top: &TOperator,
    suite: &[FockVector],
    tol: f64,
) -> Result<Vec<CheckRow>, HarnessError> {
    let ctx = &cfg.ctx;
    let n = top.branches.len();
    let mut q_base = Vec::with_capacity(n);
    for b in &top.branches {
        q_base.push(ctx.q_vector(&b.base)?);
    }
    let mut rows = Vec::new();
    for w in &top.f {
        let spans = spanning_stacks(cfg, w);
        let params = serde_json::json!({
            "type": word_label(cfg, w),
            "span": spans.len(),
            "pairs": n * n,
            "n": n,
        });
        let anchor = "Q(u_gi O) a Q(u_gj O) = 0 for reduced a of type in F";
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for stack in &spans {
                let a = reduced_operator(ctx, stack).expect("spanning stack is reduced");
                for qi in &q_base {
                    for qj in &q_base {
                        let expr = OperatorExpression::Product(vec![
                            qi.clone(),
                            a.expr.clone(),
                            qj.clone(),
                        ]);
                        worst = worst.max(max_zero_residual(ctx, &expr, suite));
                    }
                }
            }
            CheckRow::new("different_paths", anchor, params.clone(), worst, worst < tol)
        }));
    }

    // The middle-factor mechanism: conjugating a kernel element by a
    // centralizer unitary keeps it in the kernel, so the diagonal sandwich
    // of an odd split vanishes between the walk projections.
    rows.push(timed(|| {
        let mut worst: f64 = 0.0;
        for v in 0..ctx.graph().vertex_count() as VertexId {
            let alg = ctx.algebra(v);
            if let Ok(u) = alg.distinguished_unitary() {
                for k in 0..alg.defect_dim() {
                    let c = alg.defect_lift(k);
                    let conj = u.adjoint() * c * u;
                    worst = worst.max(alg.state(&conj).norm());
                }
            }
        }
        CheckRow::new(
            "centralizer_conjugation",
            "state(u* c u) = state(c) = 0 for kernel c",
            serde_json::json!({}),
            worst,
            worst < tol,
        )
    }));
    if top.mode == Mode::Free {
        let alg = ctx.algebra(0);
        let mut diag_terms = Vec::new();
        for k in 0..alg.defect_dim() {
            diag_terms.push(ctx.diagonal(0, alg.defect_lift(k))?);
        }
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for d in &diag_terms {
                for qi in &q_base {
                    for qj in &q_base {
                        let expr = OperatorExpression::Product(vec![
                            qi.clone(),
                            d.clone(),
                            qj.clone(),
                        ]);
                        worst = worst.max(max_zero_residual(ctx, &expr, suite));
                    }
                }
            }
            CheckRow::new(
                "different_paths_middle_term",
                "Q(u_gi O) d(a) Q(u_gj O) = 0 for the odd-split diagonal term",
                serde_json::json!({"n": n}),
                worst,
                worst < tol,
            )
        }));
    }
    Ok(rows)
}

/// Certifies the isometry defect: the projection identity for `T*T - 1`,
/// the projection properties of `P1` and `P2`, the range containments and
/// orthogonality of the `P1` summands, a norm probe of `P1 + P2`, and the
/// resulting bound `1/n`.
pub fn check_isometry_defect(
    cfg: &SelflessConfig,
    top: &TOperator,
    suite: &[FockVector],
    tol: f64,
) -> Result<Vec<CheckRow>, HarnessError> {
    let ctx = &cfg.ctx;
    let n = top.n;
    let scale = C64::new(1.0 / (2.0 * n as f64), 0.0);
    let mut rows = Vec::new();

    let identity_expr = OperatorExpression::Sum(vec![
        OperatorExpression::Product(vec![top.expr.adjoint(), top.expr.clone()]),
        OperatorExpression::Identity.scaled(C64::new(-1.0, 0.0)),
        top.p1.clone().scaled(scale),
        top.p2.clone().scaled(scale),
    ]);
    let residual = timed(|| {
        let worst = max_zero_residual(ctx, &identity_expr, suite);
        CheckRow::new(
            "isometry_identity",
            "T*T - 1 = -(P1 + P2) / 2n",
            serde_json::json!({"n": n}),
            worst,
            worst < tol,
        )
    });
    let identity_residual = residual.max_residual;
    let identity_pass = residual.pass;
    rows.push(residual);

    for (label, p) in [("p1_projection", &top.p1), ("p2_projection", &top.p2)] {
        rows.push(timed(|| {
            let worst = max_projection_defect(ctx, p, suite);
            CheckRow::new(
                label,
                "P is idempotent and self-adjoint",
                serde_json::json!({"n": n}),
                worst,
                worst < tol,
            )
        }));
    }

    rows.push(timed(|| {
        let mut worst: f64 = 0.0;
        for b in &top.branches {
            let proj = ctx.q_vector(&b.contain).expect("contain stack is reduced");
            worst = worst.max(max_containment_residual(ctx, &proj, &b.p1_summand, suite));
        }
        CheckRow::new(
            "p1_summand_containment",
            "each P1 summand is dominated by its descent projection",
            serde_json::json!({"n": n}),
            worst,
            worst < tol,
        )
    }));

    rows.push(timed(|| {
        let mut worst: f64 = 0.0;
        for (i, bi) in top.branches.iter().enumerate() {
            for (j, bj) in top.branches.iter().enumerate() {
                if i == j {
                    continue;
                }
                let expr = OperatorExpression::Product(vec![
                    bi.p1_summand.clone(),
                    bj.p1_summand.clone(),
                ]);
                worst = worst.max(max_zero_residual(ctx, &expr, suite));
            }
        }
        CheckRow::new(
            "p1_summands_orthogonal",
            "distinct P1 summands multiply to zero",
            serde_json::json!({"n": n, "pairs": n * (n - 1)}),
            worst,
            worst < tol,
        )
    }));

    rows.push(timed(|| {
        let two_forms = OperatorExpression::Sum(vec![top.expr.clone(), top.expr.adjoint()]);
        let worst = max_equality_residual(ctx, &two_forms, &top.explicit, suite);
        CheckRow::new(
            "self_adjoint_part_reduced_form",
            "T + T* equals its explicit reduced-operator expansion",
            serde_json::json!({"n": n}),
            worst,
            worst < tol,
        )
    }));

    let probe_row = timed(|| {
        let p_sum = OperatorExpression::Sum(vec![top.p1.clone(), top.p2.clone()]);
        let seeds: Vec<FockVector> = suite.iter().take(8).cloned().collect();
        let value = rayleigh_probe(ctx, &p_sum, &seeds, 6).unwrap_or(0.0);
        let excess = (value - 2.0).max(0.0);
        CheckRow::new(
            "p1p2_norm_probe",
            "rayleigh(P1 + P2) <= 2",
            serde_json::json!({"n": n, "value": value}),
            excess,
            excess < tol,
        )
    });
    let probe_pass = probe_row.pass;
    rows.push(probe_row);

    let all_pass = identity_pass
        && probe_pass
        && rows.iter().all(|r| r.pass);
    rows.push(CheckRow::new(
        "certified_isometry_bound",
        "|| T*T - 1 || <= 1/n",
        serde_json::json!({"n": n, "bound": 1.0 / n as f64}),
        identity_residual,
        all_pass,
    ));
    Ok(rows)
}

/// `T* a T = 0` for a spanning set of every type in `F`, and the negative
/// control: with `a = 1` the probe of `T*T` stays within `1/n` of one.
pub fn check_state_absorption(
    cfg: &SelflessConfig,
    top: &TOperator,
    suite: &[FockVector],
    tol: f64,
) -> Result<Vec<CheckRow>, HarnessError> {
    let ctx = &cfg.ctx;
    let n = top.n;
    let mut rows = Vec::new();
    for w in &top.f {
        let spans = spanning_stacks(cfg, w);
        let params = serde_json::json!({
            "type": word_label(cfg, w),
            "span": spans.len(),
            "n": n,
        });
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for stack in &spans {
                let a = reduced_operator(ctx, stack).expect("spanning stack is reduced");
                let expr = OperatorExpression::Product(vec![
                    top.expr.adjoint(),
                    a.expr.clone(),
                    top.expr.clone(),
                ]);
                worst = worst.max(max_zero_residual(ctx, &expr, suite));
            }
            CheckRow::new(
                "state_absorption",
                "T* a T = 0 for reduced a of type in F",
                params.clone(),
                worst,
                worst < tol,
            )
        }));
    }
    rows.push(timed(|| {
        let tt = OperatorExpression::Product(vec![top.expr.adjoint(), top.expr.clone()]);
        let seeds: Vec<FockVector> = suite.iter().take(8).cloned().collect();
        let value = rayleigh_probe(ctx, &tt, &seeds, 6).unwrap_or(0.0);
        let lower = 1.0 - 1.0 / n as f64;
        let excess = (value - (1.0 + tol)).max(lower - tol - value).max(0.0);
        CheckRow::new(
            "absorption_negative_control",
            "with a = 1, rayleigh(T*T) lies within 1/n of one",
            serde_json::json!({"n": n, "value": value, "lower": lower, "upper": 1.0}),
            excess,
            excess <= 0.0,
        )
    }));
    Ok(rows)
}

/// Foundational identities of the vertex actions and projections on the
/// sampled suite.
pub fn check_fock_axioms(
    cfg: &SelflessConfig,
    suite: &[FockVector],
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckRow>, HarnessError> {
    let ctx = &cfg.ctx;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f0ca);
    let vertex_count = ctx.graph().vertex_count() as VertexId;
    let mut rows = Vec::new();

    let random_element = |v: VertexId, rng: &mut ChaCha8Rng| -> CMat {
        let alg = ctx.algebra(v);
        let mut x = CMat::zeros(alg.dim(), alg.dim());
        for b in alg.basis() {
            x += b * C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        x
    };

    {
        let mut cases = Vec::new();
        for v in 0..vertex_count {
            for _ in 0..5 {
                cases.push((v, random_element(v, &mut rng), random_element(v, &mut rng)));
            }
        }
        rows.push(timed(|| {
            let worst = cases
                .par_iter()
                .map(|(v, x, y)| {
                    let xy = ctx.lambda(*v, &(x * y)).expect("member");
                    let lx = ctx.lambda(*v, x).expect("member");
                    let ly = ctx.lambda(*v, y).expect("member");
                    suite
                        .iter()
                        .take(40)
                        .map(|vec| {
                            let mut d = xy.apply(ctx, vec);
                            let staged = lx.apply(ctx, &ly.apply(ctx, vec));
                            d.add_scaled(&staged, C64::new(-1.0, 0.0));
                            d.norm()
                        })
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            CheckRow::new(
                "lambda_multiplicative",
                "lambda_v(xy) = lambda_v(x) lambda_v(y)",
                serde_json::json!({"elements": cases.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        let mut cases = Vec::new();
        for _ in 0..200 {
            let v = rng.random_range(0..vertex_count);
            let i = rng.random_range(0..suite.len());
            let j = rng.random_range(0..suite.len());
            cases.push((v, random_element(v, &mut rng), i, j));
        }
        rows.push(timed(|| {
            let worst = cases
                .par_iter()
                .map(|(v, x, i, j)| {
                    let op = ctx.lambda(*v, x).expect("member");
                    let adj = op.adjoint();
                    let lhs = op.apply(ctx, &suite[*i]).inner(&suite[*j]);
                    let rhs = suite[*i].inner(&adj.apply(ctx, &suite[*j]));
                    (lhs - rhs).norm()
                })
                .reduce(|| 0.0, f64::max);
            CheckRow::new(
                "lambda_adjoint",
                "<lambda_v(x) e1, e2> = <e1, lambda_v(x*) e2>",
                serde_json::json!({"pairs": cases.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for v in 0..vertex_count {
                if let Ok(u) = ctx.algebra(v).distinguished_unitary() {
                    let op = ctx.lambda(v, u).expect("member");
                    let inv = op.adjoint();
                    for vec in suite.iter().take(40) {
                        let mut d = inv.apply(ctx, &op.apply(ctx, vec));
                        d.add_scaled(vec, C64::new(-1.0, 0.0));
                        worst = worst.max(d.norm());
                    }
                }
            }
            CheckRow::new(
                "lambda_unitary",
                "lambda_v(u)* lambda_v(u) = 1 for distinguished unitaries",
                serde_json::json!({}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        let edges = ctx.graph().edges();
        let mut cases = Vec::new();
        for &(a, b) in &edges {
            for _ in 0..5 {
                cases.push((a, b, random_element(a, &mut rng), random_element(b, &mut rng)));
            }
        }
        rows.push(timed(|| {
            let worst = cases
                .par_iter()
                .map(|(a, b, x, y)| {
                    let la = ctx.lambda(*a, x).expect("member");
                    let lb = ctx.lambda(*b, y).expect("member");
                    suite
                        .iter()
                        .take(30)
                        .map(|vec| {
                            let mut d = la.apply(ctx, &lb.apply(ctx, vec));
                            d.add_scaled(&lb.apply(ctx, &la.apply(ctx, vec)), C64::new(-1.0, 0.0));
                            d.norm()
                        })
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            CheckRow::new(
                "edge_commutation",
                "lambda_v and lambda_w commute along edges",
                serde_json::json!({"edges": edges.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        let mut cases = Vec::new();
        for v in 0..vertex_count {
            for _ in 0..50 {
                cases.push((v, random_element(v, &mut rng)));
            }
        }
        rows.push(timed(|| {
            let worst = cases
                .par_iter()
                .map(|(v, x)| {
                    let op = ctx.lambda(*v, x).expect("member");
                    (ctx.vacuum_expectation(&op) - ctx.algebra(*v).state(x)).norm()
                })
                .reduce(|| 0.0, f64::max);
            CheckRow::new(
                "vacuum_state",
                "<O, lambda_v(x) O> = state_v(x)",
                serde_json::json!({"elements": cases.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        let words: Vec<GroupElement> = ctx
            .coxeter()
            .enumerate_ball(3)
            .into_iter()
            .filter(|w| !w.is_identity())
            .collect();
        rows.push(timed(|| {
            let worst = words
                .par_iter()
                .map(|w| {
                    let q = ctx.q_word(w).expect("nontrivial word");
                    max_projection_defect(ctx, &q, suite)
                })
                .reduce(|| 0.0, f64::max);
            CheckRow::new(
                "q_projections",
                "Q_w is idempotent, self-adjoint and word-diagonal",
                serde_json::json!({"words": words.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    {
        let types: Vec<GroupElement> = ball_without_identity(cfg, 2);
        rows.push(timed(|| {
            let mut worst: f64 = 0.0;
            for w in &types {
                for stack in spanning_stacks(cfg, w) {
                    let a = reduced_operator(ctx, &stack).expect("spanning stack");
                    worst = worst.max(ctx.vacuum_expectation(&a.expr).norm());
                }
            }
            CheckRow::new(
                "reduced_vacuum",
                "the vacuum state vanishes on reduced operators of nonempty type",
                serde_json::json!({"types": types.len()}),
                worst,
                worst < tol,
            )
        }));
    }

    Ok(rows)
}

/// Vacuum moments of a truncated one-sided shift plus its adjoint; exact
/// for truncation beyond the walk height.
pub fn shift_moment_oracle(kmax: usize) -> Vec<f64> {
    let dim = 2 * kmax + 2;
    let mut s = vec![vec![0.0f64; dim]; dim];
    for i in 0..dim - 1 {
        s[i + 1][i] = 1.0; // shift: e_i -> e_{i+1}
    }
    let mut sym = vec![vec![0.0f64; dim]; dim];
    for (i, row) in s.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            sym[i][j] = v + s[j][i];
        }
    }
    let mut moments = Vec::with_capacity(kmax + 1);
    let mut vec = vec![0.0f64; dim];
    vec[0] = 1.0;
    moments.push(1.0);
    for _ in 1..=kmax {
        for _ in 0..2 {
            let mut next = vec![0.0f64; dim];
            for (i, row) in sym.iter().enumerate() {
                let mut acc = 0.0;
                for (j, &m) in row.iter().enumerate() {
                    acc += m * vec[j];
                }
                next[i] = acc;
            }
            vec = next;
        }
        moments.push(vec[0]);
    }
    moments
}

/// Compares vacuum moments of `T + T*` against the shift oracle. Purely
/// diagnostic: deviations are reported, never asserted.
pub fn shift_moment_diagnostic(
    cfg: &SelflessConfig,
    top: &TOperator,
    kmax: usize,
) -> Vec<CheckRow> {
    let ctx = &cfg.ctx;
    let oracle = shift_moment_oracle(kmax);
    let mut rows = Vec::new();
    let mut state = FockVector::vacuum();
    let vacuum = FockIndex::vacuum();
    for k in 0..=kmax {
        if k > 0 {
            state = top.explicit.apply(ctx, &state);
            state = top.explicit.apply(ctx, &state);
        }
        let value = state.amplitude(&vacuum).re;
        let deviation = (value - oracle[k]).abs();
        rows.push(timed(|| {
            CheckRow::new(
                "shift_moment",
                "vacuum moments of T + T* against the one-sided shift",
                serde_json::json!({
                    "k": k,
                    "n": top.n,
                    "value": value,
                    "oracle": oracle[k],
                    "deviation": deviation,
                    "diagnostic": true,
                }),
                0.0,
                true,
            )
        }));
    }
    rows
}
