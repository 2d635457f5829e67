//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! The checks recompute everything they can from first principles: gate
//! functions by direct evaluation, orientations from the pairwise
//! definition or from single-coordinate drops, depths by longest path, and
//! protocol runs by replaying each transcript round against the circuit.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use orientcirc::circuit::{demorgan_normalize, Circuit, GateKind, GateRef};
use orientcirc::corpus::{
    clique_corpus, general_corpus, monotone_root_corpus, negation_corpus, CorpusEntry,
};
use orientcirc::funcs::{clique_circuit, clique_maxterms, clique_minterms, GraphEncoding};
use orientcirc::kw::{
    build_protocol_tree, protocol_to_circuit, GamePair, KwEngine, Mode, Polarity, ProtocolTree,
    Speaker, Transcript,
};
use orientcirc::orientation::{
    is_orientation, minimal_orientation, monotone_extension, orientation_profile,
    OrientationVector,
};
use orientcirc::table::{Assignment, TruthTable};
use orientcirc::transforms::{am_cover_family, beta_reduction, negations_to_orientation, peel_negation};

const SEED: u64 = 1;
const CORPUS: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail },
        Some(f) => Outcome {
            pass: false,
            detail: format!("{detail}; {} violation(s), first: {f}", failures.len()),
        },
    }
}

// ---------------------------------------------------------------------------
// Oracles. Masks use the row layout: variable i of n sits at bit n - i.

fn bit(n: u32, i: u32) -> u64 {
    1u64 << (n - i)
}

/// Every gate's value on every row, by plain evaluation.
fn eval_gates(c: &Circuit) -> Vec<Vec<bool>> {
    let n = c.nvars();
    let rows = 1usize << n;
    let mut vals: Vec<Vec<bool>> = Vec::with_capacity(c.len());
    for r in c.refs() {
        let v = match c.kind(r) {
            GateKind::Var(i) => (0..rows).map(|x| x as u64 & bit(n, i) != 0).collect(),
            GateKind::Const(b) => vec![b; rows],
            GateKind::Not(a) => vals[a.0].iter().map(|v| !v).collect(),
            GateKind::And(a, b) => vals[a.0].iter().zip(&vals[b.0]).map(|(p, q)| *p && *q).collect(),
            GateKind::Or(a, b) => vals[a.0].iter().zip(&vals[b.0]).map(|(p, q)| *p || *q).collect(),
        };
        vals.push(v);
    }
    vals
}

fn output_values(c: &Circuit) -> Vec<bool> {
    eval_gates(c).swap_remove(c.output().0)
}

/// Coordinates along which `f` goes from 1 to 0 on some upward edge.
fn dropping(f: &[bool]) -> u64 {
    let rows = f.len();
    let mut m = 0u64;
    for u in 0..rows {
        let mut p = 1usize;
        while p < rows {
            if u & p == 0 && f[u] && !f[u | p] {
                m |= p as u64;
            }
            p <<= 1;
        }
    }
    m
}

/// Coordinates on which `f` depends.
fn sensitive(f: &[bool]) -> u64 {
    let rows = f.len();
    let mut m = 0u64;
    for u in 0..rows {
        let mut p = 1usize;
        while p < rows {
            if u & p == 0 && f[u] != f[u | p] {
                m |= p as u64;
            }
            p <<= 1;
        }
    }
    m
}

fn monotone(f: &[bool]) -> bool {
    dropping(f) == 0
}

fn table_values(t: &TruthTable) -> Vec<bool> {
    (0..t.rows()).map(|r| t.get(r)).collect()
}

/// Longest input-to-output path in gates. With `literals`, a NOT directly
/// above a VAR counts as a leaf.
fn depth(c: &Circuit, literals: bool) -> u32 {
    let mut d = vec![0u32; c.len()];
    for r in c.refs() {
        d[r.0] = match c.kind(r) {
            GateKind::Var(_) | GateKind::Const(_) => 0,
            GateKind::Not(a) if literals && matches!(c.kind(a), GateKind::Var(_)) => 0,
            GateKind::Not(a) => d[a.0] + 1,
            GateKind::And(a, b) | GateKind::Or(a, b) => d[a.0].max(d[b.0]) + 1,
        };
    }
    d[c.output().0]
}

fn internal_size(c: &Circuit) -> usize {
    c.refs()
        .filter(|&r| !matches!(c.kind(r), GateKind::Var(_) | GateKind::Const(_)))
        .count()
}

fn nots(c: &Circuit) -> usize {
    c.refs().filter(|&r| matches!(c.kind(r), GateKind::Not(_))).count()
}

fn tree_cost(t: &ProtocolTree) -> usize {
    match t {
        ProtocolTree::AliceSpeaks { len, children } | ProtocolTree::BobSpeaks { len, children } => {
            len + children.values().map(tree_cost).max().unwrap_or(0)
        }
        ProtocolTree::Answer { .. } | ProtocolTree::Constant { .. } => 0,
    }
}

/// Edges of the complete graph on `n` vertices in variable order.
fn edge_list(n: u32) -> Vec<(u32, u32)> {
    (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect()
}

/// Graph-level clique test straight from the definition.
fn has_clique(n: u32, k: u32, row: usize) -> bool {
    let edges = edge_list(n);
    let m = edges.len() as u32;
    let adj = |u: u32, v: u32| {
        let j = edges.iter().position(|&e| e == (u.min(v), u.max(v))).unwrap() as u32;
        row as u64 & bit(m, j + 1) != 0
    };
    (0u32..1 << n).any(|s| {
        s.count_ones() == k
            && (1..=n).all(|u| {
                (u + 1..=n).all(|v| s >> (u - 1) & 1 == 0 || s >> (v - 1) & 1 == 0 || adj(u, v))
            })
    })
}

fn all_pairs(f: &[bool], n: u32) -> Vec<GamePair> {
    let ones: Vec<usize> = (0..f.len()).filter(|&r| f[r]).collect();
    let zeros: Vec<usize> = (0..f.len()).filter(|&r| !f[r]).collect();
    ones.iter()
        .flat_map(|&x| {
            zeros.iter().map(move |&y| GamePair {
                x: Assignment::from_row(n, x),
                y: Assignment::from_row(n, y),
            })
        })
        .collect()
}

fn with_clock(f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let t = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!(
            "panicked: {}",
            e.downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        ),
    });
    (o, t.elapsed().as_secs_f64())
}

// ---------------------------------------------------------------------------
// Transcript replay.

/// What a replay needs to know about one circuit.
struct Ctx<'a> {
    c: &'a Circuit,
    vals: Vec<Vec<bool>>,
    beta: Vec<u64>,
    /// Data coordinates `S` at each AND/OR gate and at a NOT output.
    supp: Vec<u64>,
    w: u32,
    depth: u32,
    /// Vertex mode: the graph edges, clique size and class-number width.
    vertex: Option<(Vec<(u32, u32)>, u32)>,
}

impl<'a> Ctx<'a> {
    fn new(c: &'a Circuit, vertex: bool) -> Self {
        let vals = eval_gates(c);
        let beta: Vec<u64> = vals.iter().map(|v| dropping(v)).collect();
        let w = c
            .refs()
            .filter(|&r| !matches!(c.kind(r), GateKind::Var(_) | GateKind::Const(_)))
            .map(|r| beta[r.0].count_ones())
            .max()
            .unwrap_or(0);
        let gamma = |g: GateRef| match c.kind(g) {
            GateKind::Not(a) => beta[a.0],
            _ => 0,
        };
        let supp = c
            .refs()
            .map(|r| match c.kind(r) {
                GateKind::And(a, b) | GateKind::Or(a, b) => beta[a.0] | beta[b.0] | gamma(a) | gamma(b),
                GateKind::Not(a) if r == c.output() => beta[r.0] | beta[a.0],
                _ => 0,
            })
            .collect();
        let vertex = vertex.then(|| {
            let n = (2..).find(|n| n * (n - 1) / 2 == c.nvars()).unwrap();
            let bits = 32 - (n - 1u32).leading_zeros();
            (edge_list(n), bits)
        });
        Ctx {
            c,
            depth: depth(c, false),
            vals,
            beta,
            supp,
            w,
            vertex,
        }
    }

    fn n(&self) -> u32 {
        self.c.nvars()
    }

    /// Variables of `mask`, ascending.
    fn vars(&self, mask: u64) -> Vec<u32> {
        (1..=self.n()).filter(|&i| mask & bit(self.n(), i) != 0).collect()
    }

    /// Vertices touched by the edge variables in `mask`, ascending.
    fn span(&self, mask: u64) -> Vec<u32> {
        let (edges, _) = self.vertex.as_ref().unwrap();
        let mut vs: Vec<u32> = self
            .vars(mask)
            .into_iter()
            .flat_map(|i| {
                let (u, v) = edges[(i - 1) as usize];
                [u, v]
            })
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Largest vertex span of any data set in the circuit.
    fn max_span(&self) -> usize {
        self.supp.iter().map(|&s| self.span(s).len()).max().unwrap_or(0)
    }

    fn restriction_monotone(&self, g: GateRef, pattern: u64, cache: &mut HashMap<(usize, u64), bool>) -> bool {
        let bm = self.beta[g.0];
        *cache.entry((g.0, pattern)).or_insert_with(|| {
            let f = &self.vals[g.0];
            (0..f.len()).all(|u| {
                u as u64 & bm != pattern
                    || (0..self.n()).all(|p| {
                        let q = 1usize << p;
                        bm & q as u64 != 0 || u & q != 0 || !f[u] || f[u | q]
                    })
            })
        })
    }

    /// Replays `t` for the pair `(x, y)` and checks every rule of the
    /// orientation-aware protocol. Returns the first broken rule.
    fn replay(
        &self,
        x: u64,
        y: u64,
        t: &Transcript,
        cache: &mut HashMap<(usize, u64), bool>,
    ) -> Result<bool, String> {
        let c = self.c;
        let n = self.n();
        let per_round = 4 * self.w as usize + 1;
        let (mut xp, mut yp) = (x, y);
        let mut g = c.output();
        let mut k = 0;
        let rounds = &t.rounds;
        let get = |v: u64, i: u32| v & bit(n, i) != 0;
        let mut from_data = false;
        loop {
            let name = c.name(g);
            let bm = self.beta[g.0];
            if !self.vals[g.0][xp as usize] || self.vals[g.0][yp as usize] {
                return Err(format!("gate {name}: does not separate x'={xp:b} y'={yp:b}"));
            }
            if (xp ^ yp) & bm != 0 {
                return Err(format!("gate {name}: x', y' differ on the orientation"));
            }
            if !self.restriction_monotone(g, xp & bm, cache) {
                return Err(format!("gate {name}: restriction not monotone"));
            }
            let (a, b, sender) = match c.kind(g) {
                GateKind::Var(i) => {
                    if k != rounds.len() {
                        return Err("rounds after reaching a leaf".into());
                    }
                    if t.answer.index != i || t.answer.polarity != Polarity::Positive {
                        return Err(format!("leaf x{i} but answer {}", t.answer));
                    }
                    break;
                }
                GateKind::Const(_) => return Err(format!("descended into constant {name}")),
                GateKind::Not(_) if g != c.output() => return Err(format!("descended into NOT {name}")),
                GateKind::Not(_) => (g, g, Speaker::Alice),
                GateKind::And(a, b) => (a, b, Speaker::Alice),
                GateKind::Or(a, b) => (a, b, Speaker::Bob),
            };
            let s = self.supp[g.0];
            let own = if sender == Speaker::Alice { xp } else { yp };
            let mut data = 0;
            if s != 0 {
                let r = rounds.get(k).ok_or("missing data round")?;
                data = match &self.vertex {
                    None => self.vars(s).len(),
                    Some((_, cb)) => {
                        let span = self.span(s).len();
                        if sender == Speaker::Alice { span } else { span * *cb as usize }
                    }
                };
                if r.gate != name || r.speaker != sender || r.bits != data || r.message.len() != data {
                    return Err(format!(
                        "gate {name}: data round {:?} {} bits, expected {sender:?} {data}",
                        r.speaker, r.bits
                    ));
                }
                if self.vertex.is_none() {
                    let expect: String = self.vars(s).iter().map(|&i| if get(own, i) { '1' } else { '0' }).collect();
                    if r.message != expect {
                        return Err(format!("gate {name}: data message {} != {expect}", r.message));
                    }
                }
                k += 1;
            }
            if k == rounds.len() || matches!(c.kind(g), GateKind::Not(_)) {
                // Answered from the data: the smallest separating index in S.
                if k != rounds.len() {
                    return Err("rounds after the output NOT".into());
                }
                let sep = self.vars(s & xp & !yp);
                if sep.first() != Some(&t.answer.index) || t.answer.polarity != Polarity::Positive {
                    return Err(format!("gate {name}: answer {} not the smallest in {sep:?}", t.answer));
                }
                from_data = true;
                break;
            }
            let r = &rounds[k];
            let replier = if sender == Speaker::Alice { Speaker::Bob } else { Speaker::Alice };
            if r.gate != name || r.speaker != replier || r.bits != 1 {
                return Err(format!("gate {name}: expected a 1-bit direction from {replier:?}"));
            }
            if !self.vars(s & xp & !yp).is_empty() {
                return Err(format!("gate {name}: continued although S separates"));
            }
            if self.vertex.is_none() && data + 1 > per_round {
                return Err(format!("gate {name}: round of {} bits exceeds {per_round}", data + 1));
            }
            let (nx, ny) = if sender == Speaker::Alice {
                (xp, (yp & !s) | (xp & s))
            } else {
                ((xp & !s) | (yp & s), yp)
            };
            let new_own = if replier == Speaker::Alice { nx } else { ny };
            let old_own = if replier == Speaker::Alice { xp } else { yp };
            match &r.updated {
                Some(v) if v.bits() != new_own => return Err(format!("gate {name}: wrong update")),
                None if new_own != old_own => return Err(format!("gate {name}: missing update")),
                _ => {}
            }
            let sep = |h: GateRef| {
                if sender == Speaker::Alice { !self.vals[h.0][ny as usize] } else { self.vals[h.0][nx as usize] }
            };
            let next = match r.message.as_str() {
                "0" => a,
                "1" if !sep(a) => b,
                "1" => return Err(format!("gate {name}: went right although left separates")),
                m => return Err(format!("gate {name}: direction message {m}")),
            };
            if matches!(c.kind(next), GateKind::Not(_)) {
                return Err(format!("gate {name}: direction points into a NOT"));
            }
            xp = nx;
            yp = ny;
            g = next;
            k += 1;
        }
        let total: usize = rounds.iter().map(|r| r.bits).sum();
        if total != t.total_bits {
            return Err("total_bits is not the sum of the rounds".into());
        }
        if !(get(x, t.answer.index) && !get(y, t.answer.index)) {
            return Err(format!("answer {} does not separate the original pair", t.answer));
        }
        let round_cap = match &self.vertex {
            None => per_round,
            Some((_, cb)) => self.max_span() * *cb as usize + 1,
        };
        if total > self.depth as usize * round_cap {
            return Err(format!("{total} bits > depth {} * {round_cap}", self.depth));
        }
        Ok(from_data)
    }
}

fn corpus() -> Vec<CorpusEntry> {
    monotone_root_corpus(SEED, CORPUS).expect("corpus generation")
}

// ---------------------------------------------------------------------------
// Criteria.

fn c1_orientation_characterization() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0u64;
    for n in 1..=4u32 {
        let rows = 1usize << n;
        // For each β, the pairs (x, y) with (x, x⊕β) ≤ (y, y⊕β), x ≠ y.
        let order: Vec<Vec<(usize, usize)>> = (0..1usize << n)
            .map(|b| {
                let mut v = Vec::new();
                for x in 0..rows {
                    for y in 0..rows {
                        let (px, py) = ((x << n) | (x ^ b), (y << n) | (y ^ b));
                        if x != y && px & !py == 0 {
                            v.push((x, y));
                        }
                    }
                }
                v
            })
            .collect();
        let bad: Vec<String> = (0u64..1 << rows)
            .into_par_iter()
            .flat_map_iter(|code| {
                let f = TruthTable::from_fn(n, |r| code >> r & 1 == 1).unwrap();
                let min = minimal_orientation(&f);
                let order = &order;
                (0..1u64 << n).filter_map(move |b| {
                    let by_def = order[b as usize]
                        .iter()
                        .all(|&(x, y)| code >> x & 1 == 0 || code >> y & 1 == 1);
                    let beta = OrientationVector::new(n, b);
                    let lib = is_orientation(&f, &beta).unwrap();
                    let cover = b & min.bits() == min.bits();
                    (by_def != lib || by_def != cover).then(|| format!("n={n} f={} {beta}", f))
                })
            })
            .collect();
        checked += (1u64 << rows) * (1 << n);
        failures.extend(bad);
    }
    outcome(&failures, format!("{checked} (f, beta) pairs on 1..=4 variables"))
}

fn c2_monotone_extension() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0u64;
    for n in 1..=4u32 {
        let rows = 1usize << n;
        let bad: Vec<String> = (0u64..1 << rows)
            .into_par_iter()
            .filter_map(|code| {
                let f = TruthTable::from_fn(n, |r| code >> r & 1 == 1).unwrap();
                let beta = minimal_orientation(&f);
                let h = match monotone_extension(&f, &beta) {
                    Ok(h) => h,
                    Err(err) => return Some(format!("n={n} f={f}: {err}")),
                };
                let hv = table_values(&h);
                let b = beta.bits() as usize;
                let diag = (0..rows).all(|x| hv[(x << n) | (x ^ b)] == (code >> x & 1 == 1));
                (h.nvars() != 2 * n || !monotone(&hv) || !diag).then(|| format!("n={n} f={f}"))
            })
            .collect();
        count += 1 << rows;
        failures.extend(bad);
    }
    outcome(&failures, format!("{count} functions on 1..=4 variables"))
}

fn c3_protocol(corpus: &[CorpusEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut pairs_total = 0usize;
    let mut weighted = 0usize;
    let mut max_w = 0;
    let mut data_answers = 0usize;
    for e in corpus {
        let c = &e.circuit;
        let ctx = Ctx::new(c, false);
        let n = c.nvars();
        let f = &ctx.vals[c.output().0];
        let full = (1u64 << n) - 1;
        if n > 8 || ctx.depth > 8 || !monotone(f) || sensitive(f) != full {
            failures.push(format!("{}: outside the corpus contract", e.id));
            continue;
        }
        if ctx.w > 0 {
            weighted += 1;
        }
        max_w = max_w.max(ctx.w);
        let prof = orientation_profile(c).unwrap();
        let engine = KwEngine::with_profile(c, Mode::Modified, &prof).unwrap();
        let pairs = all_pairs(f, n);
        pairs_total += pairs.len();
        let res: Vec<(Option<String>, bool)> = pairs
            .par_iter()
            .map_init(HashMap::new, |cache, p| match engine.run(p) {
                Ok(t) => match ctx.replay(p.x.bits(), p.y.bits(), &t, cache) {
                    Ok(early) => (None, early),
                    Err(m) => (Some(format!("{} x={} y={}: {m}", e.id, p.x, p.y)), false),
                },
                Err(err) => (Some(format!("{} x={} y={}: {err}", e.id, p.x, p.y)), false),
            })
            .collect();
        for (r, early) in res {
            if let Some(m) = r {
                failures.push(m);
            }
            data_answers += early as usize;
        }
    }
    outcome(
        &failures,
        format!(
            "{} circuits ({weighted} with max weight > 0, up to {max_w}), {pairs_total} pairs, {data_answers} answered from data",
            corpus.len()
        ),
    )
}

fn c4_w0_reduction(corpus: &[CorpusEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut circuits = 0;
    let mut pairs_total = 0;
    for e in corpus {
        let c = &e.circuit;
        let vals = eval_gates(c);
        if !vals.iter().all(|v| monotone(v)) {
            continue;
        }
        circuits += 1;
        let modified = KwEngine::new(c, Mode::Modified).unwrap();
        let plus = KwEngine::new(c, Mode::Plus).unwrap();
        let d = depth(c, false) as usize;
        let pairs = all_pairs(&vals[c.output().0], c.nvars());
        pairs_total += pairs.len();
        for p in &pairs {
            let (a, b) = (modified.run(p).unwrap(), plus.run(p).unwrap());
            if a != b {
                failures.push(format!("{} x={} y={}: transcripts differ", e.id, p.x, p.y));
            }
            if b.rounds.iter().any(|r| r.bits != 1) || b.total_bits > d {
                failures.push(format!("{} x={} y={}: KW+ accounting", e.id, p.x, p.y));
            }
        }
    }
    if circuits == 0 {
        failures.push("no NOT-free circuits in the corpus".into());
    }
    outcome(&failures, format!("{circuits} monotone circuits, {pairs_total} pairs"))
}

fn c5_expansion() -> Outcome {
    let cases = negation_corpus(SEED, 240).unwrap();
    let mut failures = Vec::new();
    let mut by_t = [0usize; 4];
    let mut worst = [(0usize, 0usize); 4];
    for e in &cases {
        let c = &e.circuit;
        let t = nots(c);
        if !(1..=3).contains(&t) || c.nvars() > 6 {
            failures.push(format!("{}: t={t} nvars={}", e.id, c.nvars()));
            continue;
        }
        by_t[t] += 1;
        let out = negations_to_orientation(c).unwrap();
        if output_values(&out) != output_values(c) {
            failures.push(format!("{}: not equivalent", e.id));
        }
        let (s, p) = (internal_size(c), 1usize << t);
        if internal_size(&out) > p * (s + p) + p {
            failures.push(format!("{}: size {} > {}", e.id, internal_size(&out), p * (s + p) + p));
        }
        let vals = eval_gates(&out);
        let dense = |with_not: bool| {
            out.refs()
                .filter(|&r| match out.kind(r) {
                    GateKind::And(..) | GateKind::Or(..) => true,
                    GateKind::Not(_) => with_not,
                    _ => false,
                })
                .filter(|&r| !monotone(&vals[r.0]))
                .count()
        };
        let (gates, all) = (dense(false), dense(true));
        let bound = (1usize << (t - 1)) * (t + 2) - 1;
        worst[t] = (worst[t].0.max(gates), worst[t].1.max(all));
        if gates > bound {
            failures.push(format!("{}: {gates} dense AND/OR gates > {bound}", e.id));
        }
        if t == 1 && all > 3 {
            failures.push(format!("{}: {all} dense gates at t=1", e.id));
        }
    }
    if cases.len() < 200 || by_t[1..].contains(&0) {
        failures.push(format!("corpus too small: {by_t:?}"));
    }
    outcome(
        &failures,
        format!(
            "{} circuits (t=1/2/3: {}/{}/{}), worst dense AND/OR {}/{}/{} vs 2/7/19, with NOTs {}/{}/{}",
            cases.len(),
            by_t[1],
            by_t[2],
            by_t[3],
            worst[1].0,
            worst[2].0,
            worst[3].0,
            worst[1].1,
            worst[2].1,
            worst[3].1
        ),
    )
}

fn c6_peel(corpus: &[CorpusEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for e in corpus.iter().filter(|e| nots(&e.circuit) >= 1) {
        count += 1;
        let c = &e.circuit;
        let t = nots(c);
        let p = match peel_negation(c) {
            Ok(p) => p,
            Err(err) => {
                failures.push(format!("{}: {err}", e.id));
                continue;
            }
        };
        if !monotone(&output_values(&p.f0)) || !monotone(&output_values(&p.f1)) {
            failures.push(format!("{}: branch not monotone", e.id));
        }
        if output_values(&p.recombined) != output_values(c) {
            failures.push(format!("{}: recombination differs", e.id));
        }
        // The selector is the first NOT's input.
        let first = c.refs().find(|&r| matches!(c.kind(r), GateKind::Not(_))).unwrap();
        let GateKind::Not(g1) = c.kind(first) else { unreachable!() };
        if output_values(&p.selector) != eval_gates(c)[g1.0] {
            failures.push(format!("{}: wrong selector", e.id));
        }
        if nots(&p.f0) >= t || nots(&p.f1) >= t {
            failures.push(format!("{}: branches keep {} and {} of {t} NOTs", e.id, nots(&p.f0), nots(&p.f1)));
        }
    }
    if count == 0 {
        failures.push("no circuits with NOT gates".into());
    }
    outcome(&failures, format!("{count} circuits with t >= 1"))
}

fn c7_beta_reduction() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    let mut plus_one = 0;
    for n in [4u32, 5] {
        let k = n / 2;
        let enc = GraphEncoding::new(n).unwrap();
        let m = enc.nvars();
        // The encoding numbers edges in the order the oracle assumes.
        for (j, (u, v)) in edge_list(n).into_iter().enumerate() {
            assert_eq!(enc.edge_index(u, v).unwrap(), j as u32 + 1);
        }
        let expect: Vec<bool> = (0..1usize << m).map(|r| has_clique(n, k, r)).collect();
        let c = clique_circuit(&enc, k).unwrap();
        let norm_depth = depth(&demorgan_normalize(&c), false);
        for a in 1..=n {
            for b in a + 1..=n {
                cases += 1;
                let u = 1u32 << (a - 1) | 1 << (b - 1);
                let r = beta_reduction(&c, &enc, u, k).unwrap();
                let out = r.circuit.as_ref().unwrap();
                let vals = eval_gates(out);
                if vals[out.output().0] != expect {
                    failures.push(format!("n={n} U={{{a},{b}}}: not CLIQUE({n},{k})"));
                }
                let e_ab = bit(m, edge_list(n).iter().position(|&e| e == (a, b)).unwrap() as u32 + 1);
                if let Some(g) = out.refs().find(|&g| dropping(&vals[g.0]) & e_ab != 0) {
                    failures.push(format!("n={n} U={{{a},{b}}}: gate {} oriented on edge {a}{b}", out.name(g)));
                }
                let d = depth(out, false);
                if d > norm_depth + 2 + 1 {
                    failures.push(format!("n={n} U={{{a},{b}}}: depth {d} > {norm_depth} + 3"));
                }
                plus_one += usize::from(d > norm_depth + 2);
            }
        }
    }
    outcome(&failures, format!("{cases} vertex pairs U at n=4,5, extra level used {plus_one} times"))
}

fn c8_roundtrip(corpus: &[CorpusEntry]) -> Outcome {
    let general = general_corpus(SEED, 200).unwrap();
    let mut jobs: Vec<(&CorpusEntry, Mode)> = Vec::new();
    for e in corpus {
        jobs.push((e, Mode::Modified));
        jobs.push((e, Mode::General));
        if nots(&e.circuit) == 0 {
            jobs.push((e, Mode::Plus));
        }
    }
    for e in &general {
        jobs.push((e, Mode::General));
    }
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(e, mode)| {
            let c = &e.circuit;
            let tree = match build_protocol_tree(c, mode, None) {
                Ok(t) => t,
                Err(err) => return Some(format!("{} {mode}: {err}", e.id)),
            };
            let back = protocol_to_circuit(&tree, c.nvars()).unwrap();
            let cost = tree_cost(&tree);
            if output_values(&back) != output_values(c) {
                return Some(format!("{} {mode}: function changed", e.id));
            }
            if depth(&back, true) as usize > cost {
                return Some(format!("{} {mode}: depth {} > cost {cost}", e.id, depth(&back, true)));
            }
            let negative = back.refs().any(|r| matches!(back.kind(r), GateKind::Not(_)));
            if !negative && depth(&back, false) as usize > cost {
                return Some(format!("{} {mode}: depth > cost", e.id));
            }
            None
        })
        .collect();
    outcome(&failures, format!("{} trees from {} circuits", jobs.len(), corpus.len() + general.len()))
}

fn c9_cover(corpus: &[CorpusEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut members = 0;
    for e in corpus.iter().filter(|e| nots(&e.circuit) <= 3) {
        count += 1;
        let c = &e.circuit;
        let t = nots(c);
        let fam = am_cover_family(c).unwrap();
        members += fam.members.len();
        if fam.count_before_dedup > (1 << (t + 1)) - 1 {
            failures.push(format!("{}: {} members", e.id, fam.count_before_dedup));
        }
        let tables: Vec<Vec<bool>> = fam.members.iter().map(|m| table_values(&m.table)).collect();
        if !tables.iter().all(|m| monotone(m)) {
            failures.push(format!("{}: non-monotone member", e.id));
        }
        let f = output_values(c);
        let rows = f.len();
        'edges: for u in 0..rows {
            let mut p = 1;
            while p < rows {
                if u & p == 0 && f[u] != f[u | p] && !tables.iter().any(|m| m[u] != m[u | p]) {
                    failures.push(format!("{}: edge {u:b}-{:b} uncovered", e.id, u | p));
                    break 'edges;
                }
                p <<= 1;
            }
        }
    }
    outcome(&failures, format!("{count} circuits with t <= 3, {members} members after dedup"))
}

fn c10_sensitivity(corpus: &[CorpusEntry]) -> Outcome {
    let mut circuits: Vec<&Circuit> = corpus.iter().map(|e| &e.circuit).collect();
    let neg = negation_corpus(SEED, 240).unwrap();
    let gen = general_corpus(SEED, 200).unwrap();
    let cl = clique_corpus(SEED, 40).unwrap();
    circuits.extend(neg.iter().map(|e| &e.circuit));
    circuits.extend(gen.iter().map(|e| &e.circuit));
    circuits.extend(cl.iter().map(|(e, _)| &e.circuit));
    let mut gates = 0;
    let mut failures = Vec::new();
    for c in &circuits {
        let ctx = Ctx::new(c, false);
        for r in c.refs() {
            let GateKind::Not(a) = c.kind(r) else { continue };
            gates += 1;
            let sens = sensitive(&ctx.vals[a.0]);
            let sup = ctx.beta[a.0] | ctx.beta[r.0];
            if sens & !sup != 0 || sens.count_ones() > 2 * ctx.w {
                failures.push(format!("NOT {}: sensitive {sens:b} outside {sup:b}", c.name(r)));
            }
        }
    }
    outcome(&failures, format!("{gates} NOT gates in {} circuits", circuits.len()))
}

fn c11_vertex() -> Outcome {
    let enc = GraphEncoding::new(4).unwrap();
    let edges = edge_list(4);
    let entries = clique_corpus(SEED, 40).unwrap();
    let mut failures = Vec::new();
    let mut pairs_total = 0;
    let mut data_rounds = 0;
    for (e, k) in &entries {
        let c = &e.circuit;
        let ctx = Ctx::new(c, true);
        let mins = clique_minterms(&enc, *k).unwrap();
        let maxs = clique_maxterms(&enc, *k, false).unwrap();
        let adj = |g: &Assignment, u: u32, v: u32| {
            let j = edges.iter().position(|&x| x == (u.min(v), u.max(v))).unwrap() as u32 + 1;
            g.get(j)
        };
        // Min-terms are exactly the edges of a k-set; max-terms are complete
        // multipartite graphs with at most k-1 classes.
        for x in &mins {
            let ok = (0u32..16).any(|s| {
                s.count_ones() == *k
                    && edges.iter().all(|&(u, v)| adj(x, u, v) == (s >> (u - 1) & 1 == 1 && s >> (v - 1) & 1 == 1))
            });
            if !ok {
                failures.push(format!("{x} is not a bare {k}-clique"));
            }
        }
        for y in &maxs {
            let same = |u: u32, v: u32| u == v || !adj(y, u, v);
            let transitive = (1..=4).all(|a| (1..=4).all(|b| (1..=4).all(|c| !(same(a, b) && same(b, c)) || same(a, c))));
            let classes = (1..=4).filter(|&v| (1..v).all(|u| !same(u, v))).count() as u32;
            if !transitive || classes > k - 1 {
                failures.push(format!("{y} is not a complete {}-partite graph", k - 1));
            }
        }
        let engine = KwEngine::new(c, Mode::Vertex).unwrap();
        let mut cache = HashMap::new();
        for x in &mins {
            for y in &maxs {
                pairs_total += 1;
                let t = match engine.run(&GamePair { x: *x, y: *y }) {
                    Ok(t) => t,
                    Err(err) => {
                        failures.push(format!("{} x={x} y={y}: {err}", e.id));
                        continue;
                    }
                };
                if let Err(m) = ctx.replay(x.bits(), y.bits(), &t, &mut cache) {
                    failures.push(format!("{} x={x} y={y}: {m}", e.id));
                }
                // Message contents: clique flags from Alice, class numbers
                // from Bob that agree exactly on non-adjacent vertices of y.
                let clique: Vec<u32> = (1..=4).filter(|&v| (1..=4).any(|u| u != v && adj(x, u, v))).collect();
                for r in t.rounds.iter().filter(|r| r.bits > 1 || r.message.len() > 1) {
                    data_rounds += 1;
                    let g = c.find(&r.gate).unwrap();
                    let span = ctx.span(ctx.supp[g.0]);
                    match r.speaker {
                        Speaker::Alice => {
                            let expect: String =
                                span.iter().map(|v| if clique.contains(v) { '1' } else { '0' }).collect();
                            if r.message != expect {
                                failures.push(format!("{} x={x}: Alice sent {} not {expect}", e.id, r.message));
                            }
                        }
                        Speaker::Bob => {
                            let codes: Vec<&str> = (0..span.len()).map(|i| &r.message[2 * i..2 * i + 2]).collect();
                            for i in 0..span.len() {
                                for j in i + 1..span.len() {
                                    if (codes[i] == codes[j]) == adj(y, span[i], span[j]) {
                                        failures.push(format!("{} y={y}: class codes disagree with y", e.id));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(
        &failures,
        format!("{} CLIQUE circuits on 4 vertices, {pairs_total} term pairs, {data_rounds} data rounds", entries.len()),
    )
}

fn main() -> ExitCode {
    let corpus = corpus();
    type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("orientation characterization", Box::new(c1_orientation_characterization)),
        ("monotone extension", Box::new(c2_monotone_extension)),
        ("modified protocol validity and bound", Box::new(|| c3_protocol(&corpus))),
        ("zero-weight reduction to KW+", Box::new(|| c4_w0_reduction(&corpus))),
        ("negation-to-orientation expansion", Box::new(c5_expansion)),
        ("one-negation peel", Box::new(|| c6_peel(&corpus))),
        ("beta reduction for CLIQUE", Box::new(c7_beta_reduction)),
        ("protocol/circuit round trip", Box::new(|| c8_roundtrip(&corpus))),
        ("boundary cover family", Box::new(|| c9_cover(&corpus))),
        ("NOT-gate sensitivity", Box::new(|| c10_sensitivity(&corpus))),
        ("vertex protocol accounting", Box::new(c11_vertex)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let (o, secs) = with_clock(check);
        println!(
            "[{}] criterion {:>2}: {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
