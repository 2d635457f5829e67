//! Seeded circuit generators for the verification suites.
//!
//! Everything here is a pure function of `(seed, index)`, so a suite cut
//! short by a time budget has still checked a deterministic prefix.
//!
//! Circuits are generated as expression trees. The monotone-root corpus
//! starts from a monotone tree whose function depends on every input and
//! applies function-preserving rewrites that introduce NOT gates in
//! different places: above whole subtrees, inside De Morgan duals, next to
//! single literals, and in absorbed terms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, CircuitError, GateKind, GateRef};
use crate::funcs::{clique_circuit, sensitive_mask, FuncError, GraphEncoding};

pub const DEFAULT_SEED: u64 = 1;
/// Depth cap of the monotone-root corpus.
pub const CORPUS_MAX_DEPTH: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("no circuit with {neg} NOT gates fits in depth {depth}")]
    Infeasible { depth: u32, neg: usize },
    #[error("nvars must be between 1 and {max}, got {got}")]
    BadVars { got: u32, max: u32 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// Function-preserving rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rewrite {
    /// `g` to `NOT NOT g`.
    DoubleNeg,
    /// `AND(a,b)` to `NOT OR(NOT a, NOT b)`, and dually.
    DeMorgan,
    /// `x_i` to `(x_i AND NOT x_j) OR (x_i AND x_j)`.
    LiteralSplit,
    /// `g` to `g OR (g AND NOT x_j)`.
    Absorb,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Expr {
    Var(u32),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn height(&self) -> u32 {
        match self {
            Expr::Var(_) => 0,
            Expr::Not(a) => a.height() + 1,
            Expr::And(a, b) | Expr::Or(a, b) => a.height().max(b.height()) + 1,
        }
    }

    fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    /// `(preorder index, distance from root, height, kind tag)` per node.
    fn nodes(&self) -> Vec<(usize, u32, u32, u8)> {
        fn walk(e: &Expr, d: u32, out: &mut Vec<(usize, u32, u32, u8)>) {
            let i = out.len();
            let tag = match e {
                Expr::Var(_) => 0,
                Expr::Not(_) => 1,
                _ => 2,
            };
            out.push((i, d, e.height(), tag));
            match e {
                Expr::Var(_) => {}
                Expr::Not(a) => walk(a, d + 1, out),
                Expr::And(a, b) | Expr::Or(a, b) => {
                    walk(a, d + 1, out);
                    walk(b, d + 1, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }

    /// Replaces the node at preorder index `idx` by `f(node)`.
    fn replace(&mut self, idx: usize, f: &mut dyn FnMut(Expr) -> Expr) {
        fn go(e: &mut Expr, idx: usize, next: &mut usize, f: &mut dyn FnMut(Expr) -> Expr) -> bool {
            if *next == idx {
                let old = std::mem::replace(e, Expr::Var(0));
                *e = f(old);
                return true;
            }
            *next += 1;
            match e {
                Expr::Var(_) => false,
                Expr::Not(a) => go(a, idx, next, f),
                Expr::And(a, b) | Expr::Or(a, b) => go(a, idx, next, f) || go(b, idx, next, f),
            }
        }
        let mut next = 0;
        go(self, idx, &mut next, f);
    }

    fn build(&self, b: &mut CircuitBuilder) -> GateRef {
        match self {
            Expr::Var(i) => b.var(*i),
            Expr::Not(a) => {
                let a = a.build(b);
                b.not(a)
            }
            Expr::And(l, r) => {
                let (l, r) = (l.build(b), r.build(b));
                b.and(l, r)
            }
            Expr::Or(l, r) => {
                let (l, r) = (l.build(b), r.build(b));
                b.or(l, r)
            }
        }
    }

    fn to_circuit(&self, nvars: u32) -> Result<Circuit, CircuitError> {
        let mut b = CircuitBuilder::new(nvars);
        let out = self.build(&mut b);
        b.finish(out)
    }

    /// Unfolds a constant-free circuit into a tree.
    fn from_circuit(c: &Circuit, g: GateRef) -> Option<Expr> {
        Some(match c.kind(g) {
            GateKind::Var(i) => Expr::Var(i),
            GateKind::Const(_) => return None,
            GateKind::Not(a) => Expr::not(Self::from_circuit(c, a)?),
            GateKind::And(a, b) => Expr::and(Self::from_circuit(c, a)?, Self::from_circuit(c, b)?),
            GateKind::Or(a, b) => Expr::or(Self::from_circuit(c, a)?, Self::from_circuit(c, b)?),
        })
    }
}

/// Per-entry RNG, independent of every other entry.
fn entry_rng(seed: u64, stream: u64, idx: u64) -> ChaCha8Rng {
    let mix = seed
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ idx.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mix)
}

/// A random AND/OR tree of height at most `budget`. Leaf variables are
/// drawn from `vars`, a pool consumed in order and refilled at random, so
/// that a shuffled `1..=nvars` pool makes every variable appear when there
/// are enough leaves.
fn monotone_tree(rng: &mut ChaCha8Rng, nvars: u32, budget: u32, leaf_p: f64, vars: &mut Vec<u32>) -> Expr {
    fn go(rng: &mut ChaCha8Rng, nvars: u32, budget: u32, root: bool, leaf_p: f64, vars: &mut Vec<u32>) -> Expr {
        if budget == 0 || (!root && rng.gen_bool(leaf_p)) {
            return Expr::Var(vars.pop().unwrap_or_else(|| rng.gen_range(1..=nvars)));
        }
        let a = go(rng, nvars, budget - 1, false, leaf_p, vars);
        let b = go(rng, nvars, budget - 1, false, leaf_p, vars);
        if rng.gen_bool(0.5) {
            Expr::and(a, b)
        } else {
            Expr::or(a, b)
        }
    }
    go(rng, nvars, budget, true, leaf_p, vars)
}

fn check_vars(nvars: u32) -> Result<(), CorpusError> {
    let max = crate::table::MAX_TABLE_VARS;
    if nvars == 0 || nvars > max {
        return Err(CorpusError::BadVars { got: nvars, max });
    }
    Ok(())
}

/// Random circuit over `nvars` inputs with depth at most `depth` and exactly
/// `neg` NOT gates at random positions. Reproducible per `seed`.
pub fn random_circuit(nvars: u32, depth: u32, neg: usize, seed: u64) -> Result<Circuit, CorpusError> {
    check_vars(nvars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        if let Some(e) = random_expr(&mut rng, nvars, depth, neg) {
            return Ok(e.to_circuit(nvars)?);
        }
    }
    Err(CorpusError::Infeasible { depth, neg })
}

fn random_expr(rng: &mut ChaCha8Rng, nvars: u32, depth: u32, neg: usize) -> Option<Expr> {
    let mut pool = Vec::new();
    let mut e = monotone_tree(rng, nvars, depth, 0.25, &mut pool);
    for _ in 0..neg {
        let nodes = e.nodes();
        // Wrapping a node in NOT adds one level on its path; turning a binary
        // gate into NOT of one child keeps the height.
        let wrap: Vec<usize> = nodes
            .iter()
            .filter(|&&(_, d, h, _)| d + h < depth)
            .map(|n| n.0)
            .collect();
        let fold: Vec<usize> = nodes.iter().filter(|n| n.3 == 2).map(|n| n.0).collect();
        let use_wrap = !wrap.is_empty() && (fold.is_empty() || rng.gen_bool(0.7));
        if use_wrap {
            let i = *wrap.choose(rng)?;
            e.replace(i, &mut Expr::not);
        } else {
            let i = *fold.choose(rng)?;
            let left = rng.gen_bool(0.5);
            e.replace(i, &mut |old| match old {
                Expr::And(a, b) | Expr::Or(a, b) => Expr::not(if left { *a } else { *b }),
                other => other,
            });
        }
    }
    // Folding may discard a subtree holding an earlier NOT.
    let count = e.nodes().iter().filter(|n| n.3 == 1).count();
    (count == neg).then_some(e)
}

/// A generated circuit with how it was made.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusEntry {
    pub id: String,
    pub nvars: u32,
    pub negations: usize,
    pub rewrites: Vec<Rewrite>,
    #[serde(skip)]
    pub circuit: Circuit,
}

impl CorpusEntry {
    fn new(id: String, nvars: u32, rewrites: Vec<Rewrite>, circuit: Circuit) -> Self {
        Self {
            id,
            nvars,
            negations: circuit.negations().len(),
            rewrites,
            circuit,
        }
    }
}

/// Applies one random rewrite that keeps the height within `cap`. Returns
/// `None` if none fits.
fn apply_rewrite(rng: &mut ChaCha8Rng, e: &mut Expr, nvars: u32, cap: u32) -> Option<Rewrite> {
    let nodes = e.nodes();
    let mut options: Vec<(Rewrite, usize)> = Vec::new();
    for &(i, d, h, tag) in &nodes {
        if d + h + 2 <= cap {
            options.push((Rewrite::DoubleNeg, i));
        }
        if tag == 2 && d + h + 2 <= cap {
            options.push((Rewrite::DeMorgan, i));
        }
        if tag == 0 && nvars >= 2 && d + 3 <= cap {
            options.push((Rewrite::LiteralSplit, i));
        }
        if nvars >= 2 && d + h.max(1) + 2 <= cap {
            options.push((Rewrite::Absorb, i));
        }
    }
    // Pick the kind first so that rarer kinds are not drowned out.
    let kinds: Vec<Rewrite> = [Rewrite::DoubleNeg, Rewrite::DeMorgan, Rewrite::LiteralSplit, Rewrite::Absorb]
        .into_iter()
        .filter(|k| options.iter().any(|o| o.0 == *k))
        .collect();
    let kind = *kinds.choose(rng)?;
    let at: Vec<usize> = options.iter().filter(|o| o.0 == kind).map(|o| o.1).collect();
    let i = *at.choose(rng)?;
    let other = |rng: &mut ChaCha8Rng, not: u32| loop {
        let j = rng.gen_range(1..=nvars);
        if j != not {
            break j;
        }
    };
    match kind {
        Rewrite::DoubleNeg => e.replace(i, &mut |g| Expr::not(Expr::not(g))),
        Rewrite::DeMorgan => e.replace(i, &mut |g| match g {
            Expr::And(a, b) => Expr::not(Expr::or(Expr::not(*a), Expr::not(*b))),
            Expr::Or(a, b) => Expr::not(Expr::and(Expr::not(*a), Expr::not(*b))),
            other => other,
        }),
        Rewrite::LiteralSplit => e.replace(i, &mut |g| {
            let Expr::Var(v) = g else { return g };
            let j = other(rng, v);
            Expr::or(
                Expr::and(Expr::Var(v), Expr::not(Expr::Var(j))),
                Expr::and(Expr::Var(v), Expr::Var(j)),
            )
        }),
        Rewrite::Absorb => {
            let j = rng.gen_range(1..=nvars);
            e.replace(i, &mut |g| Expr::or(g.clone(), Expr::and(g, Expr::not(Expr::Var(j)))))
        }
    }
    Some(kind)
}

/// A monotone tree over `nvars` inputs whose function depends on all of
/// them, with height at most `max_h`.
fn sensitive_monotone_tree(rng: &mut ChaCha8Rng, nvars: u32, max_h: u32) -> Result<Expr, CorpusError> {
    let full = if nvars == 64 { u64::MAX } else { (1u64 << nvars) - 1 };
    let min_h = 32 - (nvars - 1).leading_zeros();
    for attempt in 0..4096u32 {
        let h = rng.gen_range(min_h.max(1)..=max_h.max(min_h.max(1)));
        let mut pool: Vec<u32> = (1..=nvars).collect();
        pool.shuffle(rng);
        let leaf_p = if attempt < 2048 { 0.2 } else { 0.05 };
        let e = monotone_tree(rng, nvars, h, leaf_p, &mut pool);
        let c = e.to_circuit(nvars)?;
        if sensitive_mask(&c.truth_table()?) == full {
            return Ok(e);
        }
    }
    Err(CorpusError::Infeasible { depth: max_h, neg: 0 })
}

/// Entry `idx` of the monotone-root corpus: inputs `2 + idx mod 7`, a base
/// of height at most 5, then `idx mod 5` rewrites within depth 8. Every
/// fifth entry is therefore NOT-free.
pub fn monotone_root_entry(seed: u64, idx: usize) -> Result<CorpusEntry, CorpusError> {
    let mut rng = entry_rng(seed, 1, idx as u64);
    let nvars = 2 + (idx % 7) as u32;
    let mut e = sensitive_monotone_tree(&mut rng, nvars, 5)?;
    let mut rewrites = Vec::new();
    for _ in 0..idx % 5 {
        if let Some(r) = apply_rewrite(&mut rng, &mut e, nvars, CORPUS_MAX_DEPTH) {
            rewrites.push(r);
        }
    }
    let c = e.to_circuit(nvars)?;
    Ok(CorpusEntry::new(format!("mono-{idx:04}"), nvars, rewrites, c))
}

/// Entry `idx` of the negation corpus: `t = 1 + idx mod 3` NOT gates,
/// inputs `2 + (idx / 3) mod 5`, depth between 2 and 5.
pub fn negation_entry(seed: u64, idx: usize) -> Result<CorpusEntry, CorpusError> {
    let mut rng = entry_rng(seed, 2, idx as u64);
    let t = 1 + idx % 3;
    let nvars = 2 + ((idx / 3) % 5) as u32;
    for _ in 0..64 {
        let depth = rng.gen_range(2..=5);
        if let Some(e) = random_expr(&mut rng, nvars, depth, t) {
            let c = e.to_circuit(nvars)?;
            return Ok(CorpusEntry::new(format!("neg-{idx:04}"), nvars, Vec::new(), c));
        }
    }
    Err(CorpusError::Infeasible { depth: 5, neg: t })
}

/// Entry `idx` of the general corpus: arbitrary functions, inputs
/// `2 + idx mod 7`, depth 2 to 6, 0 to 3 NOT gates.
pub fn general_entry(seed: u64, idx: usize) -> Result<CorpusEntry, CorpusError> {
    let mut rng = entry_rng(seed, 3, idx as u64);
    let nvars = 2 + (idx % 7) as u32;
    for _ in 0..64 {
        let depth = rng.gen_range(2..=6);
        let neg = rng.gen_range(0..=3);
        if let Some(e) = random_expr(&mut rng, nvars, depth, neg) {
            let c = e.to_circuit(nvars)?;
            return Ok(CorpusEntry::new(format!("gen-{idx:04}"), nvars, Vec::new(), c));
        }
    }
    Err(CorpusError::Infeasible { depth: 6, neg: 3 })
}

/// Entry `idx` of the CLIQUE corpus on 4 vertices: the OR-of-ANDs circuit
/// for `k = 2 + idx mod 2` with 1 to 3 rewrites within depth 8.
pub fn clique_entry(seed: u64, idx: usize) -> Result<(CorpusEntry, u32), CorpusError> {
    let mut rng = entry_rng(seed, 4, idx as u64);
    let enc = GraphEncoding::new(4)?;
    let k = 2 + (idx % 2) as u32;
    let base = clique_circuit(&enc, k)?;
    let mut e = Expr::from_circuit(&base, base.output()).expect("no constants");
    let mut rewrites = Vec::new();
    for _ in 0..1 + idx % 3 {
        if let Some(r) = apply_rewrite(&mut rng, &mut e, enc.nvars(), CORPUS_MAX_DEPTH) {
            rewrites.push(r);
        }
    }
    let c = e.to_circuit(enc.nvars())?;
    Ok((CorpusEntry::new(format!("clique4-{idx:04}"), enc.nvars(), rewrites, c), k))
}

fn collect<T: Send>(count: usize, f: impl Fn(usize) -> Result<T, CorpusError> + Sync + Send) -> Result<Vec<T>, CorpusError> {
    (0..count).into_par_iter().map(f).collect()
}

pub fn monotone_root_corpus(seed: u64, count: usize) -> Result<Vec<CorpusEntry>, CorpusError> {
    collect(count, |i| monotone_root_entry(seed, i))
}

pub fn negation_corpus(seed: u64, count: usize) -> Result<Vec<CorpusEntry>, CorpusError> {
    collect(count, |i| negation_entry(seed, i))
}

pub fn general_corpus(seed: u64, count: usize) -> Result<Vec<CorpusEntry>, CorpusError> {
    collect(count, |i| general_entry(seed, i))
}

pub fn clique_corpus(seed: u64, count: usize) -> Result<Vec<(CorpusEntry, u32)>, CorpusError> {
    collect(count, |i| clique_entry(seed, i))
}
