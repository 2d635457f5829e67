//! Constructive circuit rewrites.
//!
//! * [`negations_to_orientation`]: guess the value of every NOT input, one
//!   monotone copy per guess, and keep the copy whose guesses check out.
//! * [`peel_negation`]: split a monotone function on its first NOT input.
//! * [`fix_vertex_set`] and [`uniform_restriction`]: restrictions of CLIQUE
//!   circuits by vertex sets.
//! * [`beta_reduction`]: a CLIQUE circuit whose gates are all monotone in
//!   the edges inside a vertex set `U`, built from a communication protocol.
//! * [`am_cover_family`]: monotone functions whose boundary graphs cover the
//!   boundary graph of a function computed with few negations.
//!
//! NOT gates are numbered in file order, which is topological.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{
    demorgan_normalize, restrict_with_map, Circuit, CircuitBuilder, CircuitError, GateKind,
    GateRef, Value,
};
use crate::funcs::{
    boundary_graph, clique_fn, first_clique, is_monotone, k_subsets, sensitive_mask,
    BoundaryGraph, FuncError, GraphEncoding,
};
use crate::kw::{ceil_log2, protocol_to_circuit, Answer, GamePair, KwEngine, KwError, Mode, Node, Polarity, Speaker, Wire};
use crate::orientation::{minimal_orientation, orientation_profile, OrientationError};
use crate::table::{Assignment, TableError, TruthTable};

/// Default cap on NOT gates for the transforms that enumerate `{0,1}^t`.
pub const MAX_NEGATIONS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{t} NOT gates exceeds the cap of {cap}")]
    TooManyNegations { t: usize, cap: usize },
    #[error("circuit has no NOT gates")]
    NoNegations,
    #[error("circuit computes a non-monotone function")]
    NotMonotone,
    #[error("vertex set {0:#b} is outside the graph")]
    VertexOutOfRange(u32),
    #[error("circuit has {nvars} inputs but the graph has {edges} edges")]
    EncodingMismatch { nvars: u32, edges: u32 },
    #[error("circuit does not compute CLIQUE({n},{k})")]
    NotClique { n: u32, k: u32 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Kw(#[from] KwError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Table(#[from] TableError),
}

fn check_cap(c: &Circuit, cap: usize) -> Result<Vec<GateRef>, TransformError> {
    let nots = c.negations();
    if nots.len() > cap {
        return Err(TransformError::TooManyNegations { t: nots.len(), cap });
    }
    Ok(nots)
}

/// Bit `j` of `b` is the guessed value of the `j`-th NOT's input.
fn guess(b: usize, j: usize) -> bool {
    b >> j & 1 == 1
}

fn bits_label(b: usize, len: usize) -> String {
    (0..len).map(|j| if guess(b, j) { '1' } else { '0' }).collect()
}

/// Rebuilds `c` as an OR over all `b ∈ {0,1}^t` of
/// `(⋀_i g_{i,b}^{b_i}) ∧ C''(x, b)`, where `C''(·, b)` is `c` with the
/// `i`-th NOT gate replaced by the constant `¬b_i` and `g_{i,b}` is the
/// copy of that NOT's input inside `C''(·, b)`. `g^1 = g` and `g^0 = ¬g`.
///
/// In each term the positive factors and the copy form one AND chain, the
/// negated factors another, joined by a single AND; the terms meet in a
/// balanced OR tree. A circuit without NOT gates is returned unchanged.
pub fn negations_to_orientation(c: &Circuit) -> Result<Circuit, TransformError> {
    let nots = check_cap(c, MAX_NEGATIONS)?;
    let t = nots.len();
    if t == 0 {
        return Ok(c.clone());
    }
    let index: HashMap<GateRef, usize> = nots.iter().enumerate().map(|(j, &r)| (r, j)).collect();
    let mut b = CircuitBuilder::new(c.nvars());
    let mut terms = Vec::with_capacity(1 << t);
    for bits in 0..1usize << t {
        let suffix = format!("_b{}", bits_label(bits, t));
        let map = b.import(c, &suffix, |b, r| {
            index.get(&r).map(|&j| b.constant(!guess(bits, j)))
        });
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (j, &r) in nots.iter().enumerate() {
            let GateKind::Not(inp) = c.kind(r) else { unreachable!() };
            let g = map[inp.0];
            if guess(bits, j) {
                pos.push(g);
            } else {
                neg.push(b.not(g));
            }
        }
        pos.push(map[c.output().0]);
        let p = b.and_all(&pos);
        let term = if neg.is_empty() {
            p
        } else {
            let n = b.and_all(&neg);
            b.and(p, n)
        };
        terms.push(term);
    }
    let out = b.or_all(&terms);
    Ok(b.finish(out)?)
}

/// Measurements of a [`negations_to_orientation`] result against its bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionCheck {
    pub t: usize,
    pub size_in: usize,
    pub size_out: usize,
    /// `2^t (size_in + 2^t) + 2^t`.
    pub size_bound: usize,
    /// AND/OR gates with a non-zero minimal orientation.
    pub dense_and_or: usize,
    /// All gates with a non-zero minimal orientation, NOT gates included.
    pub dense_total: usize,
    /// `2^(t-1) (t+2) - 1`, or 0 when `t = 0`.
    pub dense_bound: usize,
    pub equivalent: bool,
}

impl ExpansionCheck {
    pub fn ok(&self) -> bool {
        self.equivalent
            && self.size_out <= self.size_bound
            && self.dense_and_or <= self.dense_bound
            && (self.t != 1 || self.dense_total <= 3)
    }
}

pub fn check_expansion(c: &Circuit, out: &Circuit) -> Result<ExpansionCheck, TransformError> {
    let t = c.stats().negations;
    let size_in = c.stats().size;
    let p = 1usize << t;
    let dense_bound = if t == 0 { 0 } else { (1usize << (t - 1)) * (t + 2) - 1 };
    let prof = orientation_profile(out)?;
    let dense = |include_not: bool| {
        out.refs()
            .filter(|&r| {
                let k = out.kind(r);
                !k.is_leaf() && (include_not || !k.is_not()) && !prof.beta(r).is_zero()
            })
            .count()
    };
    Ok(ExpansionCheck {
        t,
        size_in,
        size_out: out.stats().size,
        size_bound: p * (size_in + p) + p,
        dense_and_or: dense(false),
        dense_total: dense(true),
        dense_bound,
        equivalent: out.truth_table()? == c.truth_table()?,
    })
}

/// Result of one peel step on a monotone function.
#[derive(Debug, Clone)]
pub struct Peel {
    /// `g_1`, the input of the first NOT gate, as its own circuit.
    pub selector: Circuit,
    /// `f'_0 = f_0 ∨ g_1`, with `f_0` = `c` under `g_1 = 0`.
    pub f0: Circuit,
    /// `f'_1 = f_1 ∧ g_1`, with `f_1` = `c` under `g_1 = 1`.
    pub f1: Circuit,
    /// `(g_1 ∧ f'_1) ∨ (¬g_1 ∧ f'_0)`.
    pub recombined: Circuit,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeelCheck {
    pub t: usize,
    pub f0_monotone: bool,
    pub f1_monotone: bool,
    pub f0_negations: usize,
    pub f1_negations: usize,
    pub equivalent: bool,
}

impl PeelCheck {
    pub fn ok(&self) -> bool {
        self.f0_monotone
            && self.f1_monotone
            && self.equivalent
            && self.f0_negations + 1 == self.t
            && self.f1_negations + 1 == self.t
    }
}

/// Imports `c` with the NOT gate `n1` replaced by `value`; returns the copy's
/// output and `g_1`.
fn copy_with(b: &mut CircuitBuilder, c: &Circuit, n1: GateRef, value: bool, suffix: &str) -> (GateRef, GateRef) {
    let GateKind::Not(g1) = c.kind(n1) else { unreachable!() };
    let map = b.import(c, suffix, |b, r| (r == n1).then(|| b.constant(value)));
    (map[c.output().0], map[g1.0])
}

/// Splits the monotone function of `c` on the input `g_1` of its first NOT
/// gate. No constants are propagated, so both branches keep exactly `t - 1`
/// NOT gates.
pub fn peel_negation(c: &Circuit) -> Result<Peel, TransformError> {
    let c = c.pruned();
    let Some(&n1) = c.negations().first() else {
        return Err(TransformError::NoNegations);
    };
    if !is_monotone(&c.truth_table()?) {
        return Err(TransformError::NotMonotone);
    }
    let GateKind::Not(g1) = c.kind(n1) else { unreachable!() };
    let n = c.nvars();

    let selector = Circuit::new(n, c.gates().to_vec(), g1)?.pruned();

    // g_1 = 0 makes the NOT output 1, and vice versa.
    let mut b = CircuitBuilder::new(n);
    let (o, g) = copy_with(&mut b, &c, n1, true, "_f0");
    let out = b.or(o, g);
    let f0 = b.finish(out)?;

    let mut b = CircuitBuilder::new(n);
    let (o, g) = copy_with(&mut b, &c, n1, false, "_f1");
    let out = b.and(o, g);
    let f1 = b.finish(out)?;

    let mut b = CircuitBuilder::new(n);
    let (o1, g) = copy_with(&mut b, &c, n1, false, "_f1");
    let f1p = b.and(o1, g);
    let (o0, g0) = copy_with(&mut b, &c, n1, true, "_f0");
    let f0p = b.or(o0, g0);
    let ng = b.not(g);
    let l = b.and(g, f1p);
    let r = b.and(ng, f0p);
    let out = b.or(l, r);
    let recombined = b.finish(out)?;

    Ok(Peel {
        selector,
        f0,
        f1,
        recombined,
    })
}

pub fn check_peel(c: &Circuit, p: &Peel) -> Result<PeelCheck, TransformError> {
    Ok(PeelCheck {
        t: c.pruned().stats().negations,
        f0_monotone: is_monotone(&p.f0.truth_table()?),
        f1_monotone: is_monotone(&p.f1.truth_table()?),
        f0_negations: p.f0.stats().negations,
        f1_negations: p.f1.stats().negations,
        equivalent: p.recombined.truth_table()? == c.truth_table()?,
    })
}

fn check_graph(c: &Circuit, enc: &GraphEncoding, vs: u32) -> Result<(), TransformError> {
    if c.nvars() != enc.nvars() {
        return Err(TransformError::EncodingMismatch {
            nvars: c.nvars(),
            edges: enc.nvars(),
        });
    }
    if vs & !enc.all_vertices() != 0 {
        return Err(TransformError::VertexOutOfRange(vs));
    }
    Ok(())
}

/// Edge assignments for `restrict` from a mask and the values to give it.
fn edge_fixes(enc: &GraphEncoding, mask: u64, ones: u64) -> Vec<(u32, bool)> {
    enc.edges()
        .filter(|&(u, v, _)| mask & enc.edge_bit(u, v) != 0)
        .map(|(u, v, i)| (i, ones & enc.edge_bit(u, v) != 0))
        .collect()
}

#[derive(Debug, Clone)]
pub struct FixedVertexSet {
    pub circuit: Circuit,
    /// NOT gates whose input depends only on fixed edges.
    pub fixed_nots: Vec<String>,
    /// Whether all of those became constants.
    pub fixed_nots_constant: bool,
}

/// Sets every edge touching `s` to 0.
pub fn fix_vertex_set(c: &Circuit, enc: &GraphEncoding, s: u32) -> Result<FixedVertexSet, TransformError> {
    check_graph(c, enc, s)?;
    let touching = enc.edges_touching(s);
    let r = restrict_with_map(c, &edge_fixes(enc, touching, 0))?;
    let tables = c.gate_tables()?;
    let mut fixed_nots = Vec::new();
    let mut all_const = true;
    for n in c.negations() {
        let GateKind::Not(a) = c.kind(n) else { unreachable!() };
        if sensitive_mask(&tables[a.0]) & !touching == 0 {
            fixed_nots.push(c.name(n).to_string());
            all_const &= matches!(r.map[n.0], Value::Const(_));
        }
    }
    Ok(FixedVertexSet {
        circuit: r.circuit,
        fixed_nots,
        fixed_nots_constant: all_const,
    })
}

/// CLIQUE of size `k` on the subgraph induced by `vs`, as a table over all
/// edge variables.
pub fn induced_clique_table(enc: &GraphEncoding, vs: u32, k: u32) -> Result<TruthTable, TransformError> {
    let n = enc.n();
    let size = vs.count_ones();
    if k == 0 {
        return Ok(TruthTable::constant(enc.nvars(), true)?);
    }
    let masks: Vec<u64> = k_subsets(n, k)
        .into_iter()
        .filter(|s| s & !vs == 0)
        .map(|s| enc.edges_within(s))
        .collect();
    if k > size {
        return Ok(TruthTable::zero(enc.nvars())?);
    }
    Ok(TruthTable::from_fn(enc.nvars(), |row| {
        masks.iter().any(|&m| row as u64 & m == m)
    })?)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformRestriction {
    #[serde(skip)]
    pub circuit: Option<Circuit>,
    /// Size of the planted clique outside `U`.
    pub planted: u32,
    /// Clique size the restriction computes on `U`'s edges.
    pub residual_k: u32,
    pub equivalent: bool,
    /// Whether the union of all gate orientations of `c` avoids `U`'s edges.
    pub uniform_zero_on_u: bool,
    /// Whether every gate of the restriction is monotone.
    pub restriction_monotone: bool,
}

/// Plants the lexicographically first clique of `⌊(n-|U|)/2⌋` vertices
/// outside `U`, clears every other edge outside `U`, and sets all edges
/// between `U` and the rest to 1. For `c` computing CLIQUE of size `k`, the
/// result is CLIQUE on `U`'s edges of size `k - max(planted, [U ≠ [n]])`.
pub fn uniform_restriction(
    c: &Circuit,
    enc: &GraphEncoding,
    u: u32,
    k: u32,
) -> Result<UniformRestriction, TransformError> {
    check_graph(c, enc, u)?;
    let n = enc.n();
    if k == 0 || k > n {
        return Err(FuncError::OutOfRange(format!("clique size {k} on {n} vertices")).into());
    }
    let rest = enc.all_vertices() & !u;
    let planted = rest.count_ones() / 2;
    let clique = k_subsets(n, planted)
        .into_iter()
        .find(|s| s & !rest == 0)
        .unwrap_or(0);
    let outside = enc.edges_within(rest);
    let cross = enc.edges_between(rest, u);
    let ones = enc.edges_within(clique) | cross;
    let fixes = edge_fixes(enc, outside | cross, ones);
    let r = crate::circuit::restrict(c, &fixes)?;
    let joined = planted.max(u32::from(rest != 0));
    let residual_k = k.saturating_sub(joined);
    let expected = induced_clique_table(enc, u, residual_k)?;
    let u_edges = enc.edges_within(u);
    let tables = c.gate_tables()?;
    let uniform = tables
        .par_iter()
        .map(minimal_orientation)
        .reduce(|| crate::orientation::OrientationVector::zero(c.nvars()), |a, b| a.union(&b));
    let r_tables = r.gate_tables()?;
    Ok(UniformRestriction {
        equivalent: r.truth_table()? == expected,
        uniform_zero_on_u: uniform.bits() & u_edges == 0,
        restriction_monotone: r_tables.par_iter().all(is_monotone),
        circuit: Some(r),
        planted,
        residual_k,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaReduction {
    #[serde(skip)]
    pub circuit: Option<Circuit>,
    pub depth: u32,
    pub normalized_depth: u32,
    pub u_size: u32,
    pub tree_cost: usize,
    pub equivalent: bool,
    /// Gates whose minimal orientation touches an edge inside `U`.
    pub oriented_on_u: Vec<String>,
    /// `depth <= normalized_depth + |U| + 1`.
    pub depth_ok: bool,
    /// Whether the `+1` for Bob's early answer was used.
    pub plus_one_needed: bool,
}

impl BetaReduction {
    pub fn ok(&self) -> bool {
        self.equivalent && self.oriented_on_u.is_empty() && self.depth_ok
    }
}

/// Builds a CLIQUE(n, k) circuit none of whose gates is oriented on an edge
/// inside `u`.
///
/// For each pair, Alice fixes the lexicographically first `k`-clique `K` of
/// her graph, deletes her edges inside `u` that are not edges of `K`, and
/// sends the characteristic vector of `W = K ∩ u`. Bob deletes his edges
/// inside `u` outside `W`. If one of `W`'s edges is missing from his graph he
/// names it, encoded in `⌈log2(C(|W|,2)+1)⌉` bits with 0 meaning "none";
/// otherwise both play the general game on the normalized circuit with the
/// edited inputs. The protocol tree over all pairs becomes the new circuit.
pub fn beta_reduction(
    c: &Circuit,
    enc: &GraphEncoding,
    u: u32,
    k: u32,
) -> Result<BetaReduction, TransformError> {
    check_graph(c, enc, u)?;
    let f = c.truth_table()?;
    if f != clique_fn(enc, k)? {
        return Err(TransformError::NotClique { n: enc.n(), k });
    }
    let nvars = c.nvars();
    let engine = KwEngine::new(c, Mode::General)?;
    let normalized_depth = demorgan_normalize(c).depth();
    let u_edges = enc.edges_within(u);
    let u_verts: Vec<u32> = (1..=enc.n()).filter(|v| u >> (v - 1) & 1 == 1).collect();
    let pairs = GamePair::all(&f);

    let play = |p: &GamePair| -> Result<(Vec<Wire>, Answer), TransformError> {
        let (x, y) = (p.x.bits(), p.y.bits());
        let kc = first_clique(enc, x, k).expect("1-inputs contain a clique");
        let w = kc & u;
        let keep = enc.edges_within(w);
        let xp = x & !(u_edges & !keep);
        let yp = y & !(u_edges & !keep);
        let mut wire = Vec::new();
        if !u_verts.is_empty() {
            let msg = u_verts
                .iter()
                .map(|v| if w >> (v - 1) & 1 == 1 { '1' } else { '0' })
                .collect();
            wire.push(Wire { speaker: Speaker::Alice, message: msg });
        }
        let w_edges: Vec<(u32, u32, u32)> = enc
            .edges()
            .filter(|&(a, b, _)| keep & enc.edge_bit(a, b) != 0)
            .collect();
        let width = ceil_log2(w_edges.len() as u64 + 1);
        let missing = w_edges.iter().position(|&(a, b, _)| yp & enc.edge_bit(a, b) == 0);
        if width > 0 {
            let code = missing.map_or(0, |j| j as u64 + 1);
            let msg = (0..width).rev().map(|b| if code >> b & 1 == 1 { '1' } else { '0' }).collect();
            wire.push(Wire { speaker: Speaker::Bob, message: msg });
        }
        if let Some(j) = missing {
            let answer = Answer {
                index: w_edges[j].2,
                polarity: Polarity::Positive,
            };
            return Ok((wire, answer));
        }
        let pair = GamePair {
            x: Assignment::new(nvars, xp)?,
            y: Assignment::new(nvars, yp)?,
        };
        let run = engine.play(&pair)?;
        wire.extend(run.wire);
        Ok((wire, run.transcript.answer))
    };
    let runs: Vec<(Vec<Wire>, Answer)> = pairs.par_iter().map(play).collect::<Result<_, _>>()?;
    let mut root = Node::Empty;
    for ((wire, answer), p) in runs.into_iter().zip(&pairs) {
        if !answer.separates(&p.x, &p.y) {
            return Err(KwError::InconsistentLeaf { answer, x: p.x, y: p.y }.into());
        }
        root.insert(&wire, answer, *p)?;
    }
    let tree = match root {
        Node::Empty => crate::kw::ProtocolTree::Constant {
            value: f.is_constant().unwrap_or(false),
        },
        r => r.freeze(),
    };
    let out = protocol_to_circuit(&tree, nvars)?;
    let prof = orientation_profile(&out)?;
    let oriented_on_u = out
        .refs()
        .filter(|&r| prof.beta(r).bits() & u_edges != 0)
        .map(|r| out.name(r).to_string())
        .collect();
    let depth = out.depth();
    let u_size = u.count_ones();
    Ok(BetaReduction {
        equivalent: out.truth_table()? == f,
        depth,
        normalized_depth,
        u_size,
        tree_cost: tree.cost(),
        oriented_on_u,
        depth_ok: depth <= normalized_depth + u_size + 1,
        plus_one_needed: depth > normalized_depth + u_size,
        circuit: Some(out),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverMember {
    /// NOT gate whose input this is, or `None` for the output.
    pub negation: Option<String>,
    /// Constants forced on the NOT outputs, as input guesses `b_1 b_2 ...`.
    pub guesses: String,
    pub table: TruthTable,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverFamily {
    pub t: usize,
    pub members: Vec<CoverMember>,
    /// Members before removing duplicate tables.
    pub count_before_dedup: usize,
    /// `2^(t+1) - 1`.
    pub size_bound: usize,
    pub all_monotone: bool,
    /// First boundary edge of `f` not covered by any member, as row pairs.
    pub uncovered: Option<(usize, usize)>,
}

impl CoverFamily {
    pub fn ok(&self) -> bool {
        self.all_monotone && self.uncovered.is_none() && self.count_before_dedup <= self.size_bound
    }
}

/// For every NOT gate `i` and every guess prefix `p ∈ {0,1}^(i-1)`, the
/// function at the NOT's input with earlier NOT outputs fixed to `¬p`; and
/// for every full guess `b`, the output with all NOT outputs fixed to `¬b`.
/// Duplicate tables are dropped.
pub fn am_cover_family(c: &Circuit) -> Result<CoverFamily, TransformError> {
    let nots = check_cap(c, MAX_NEGATIONS)?;
    let t = nots.len();
    let f = c.truth_table()?;
    if !is_monotone(&f) {
        return Err(TransformError::NotMonotone);
    }
    let forced = |bits: usize| -> HashMap<GateRef, bool> {
        nots.iter().enumerate().map(|(j, &r)| (r, !guess(bits, j))).collect()
    };
    let mut raw: Vec<CoverMember> = Vec::new();
    for (i, &r) in nots.iter().enumerate() {
        let GateKind::Not(inp) = c.kind(r) else { unreachable!() };
        for prefix in 0..1usize << i {
            let table = c.gate_tables_forcing(&forced(prefix))?.swap_remove(inp.0);
            raw.push(CoverMember {
                negation: Some(c.name(r).to_string()),
                guesses: bits_label(prefix, i),
                monotone: is_monotone(&table),
                table,
            });
        }
    }
    for bits in 0..1usize << t {
        let table = c.gate_tables_forcing(&forced(bits))?.swap_remove(c.output().0);
        raw.push(CoverMember {
            negation: None,
            guesses: bits_label(bits, t),
            monotone: is_monotone(&table),
            table,
        });
    }
    let count_before_dedup = raw.len();
    let mut seen = BTreeSet::new();
    let members: Vec<CoverMember> = raw
        .into_iter()
        .filter(|m| seen.insert(m.table.to_hex()))
        .collect();
    let mut union = BoundaryGraph::empty(c.nvars());
    for m in &members {
        union.union_with(&boundary_graph(&m.table));
    }
    Ok(CoverFamily {
        t,
        all_monotone: members.iter().all(|m| m.monotone),
        uncovered: boundary_graph(&f).first_uncovered(&union),
        members,
        count_before_dedup,
        size_bound: (1usize << (t + 1)) - 1,
    })
}
