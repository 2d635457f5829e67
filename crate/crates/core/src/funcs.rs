//! Function algebra over truth tables: monotonicity, sensitivity, boundary
//! graphs, and the graph functions CLIQUE and PMATCH.
//!
//! Graphs on vertices `1..=n` are assignments over the `C(n,2)` edge
//! variables of a [`GraphEncoding`]. Vertex sets are `u32` bit masks with
//! vertex `v` at bit `v - 1`.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder};
use crate::table::{var_bit, Assignment, TableError, TruthTable, MAX_ASSIGNMENT_VARS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FuncError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("perfect matchings need an even vertex count, got {0}")]
    OddVertexCount(u32),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Whether `f` has an edge `u < u | 1<<p` with `f(u) = 1` and `f(u | 1<<p) = 0`.
pub(crate) fn decreasing_at(f: &TruthTable, p: u32) -> bool {
    let mut hit = false;
    f.for_each_edge_word(p, |_, lo, hi, m| hit |= lo & !hi & m != 0);
    hit
}

pub(crate) fn sensitive_at(f: &TruthTable, p: u32) -> bool {
    let mut hit = false;
    f.for_each_edge_word(p, |_, lo, hi, m| hit |= (lo ^ hi) & m != 0);
    hit
}

/// True iff `f(u) <= f(v)` on every hypercube edge `u <= v`.
pub fn is_monotone(f: &TruthTable) -> bool {
    (0..f.nvars()).all(|p| !decreasing_at(f, p))
}

/// Variables (1-based, ascending) that `f` depends on.
pub fn sensitive_indices(f: &TruthTable) -> BTreeSet<u32> {
    let n = f.nvars();
    (1..=n).filter(|&i| sensitive_at(f, var_bit(n, i))).collect()
}

/// Sensitive variables as an assignment-layout bit mask.
pub fn sensitive_mask(f: &TruthTable) -> u64 {
    (0..f.nvars())
        .filter(|&p| sensitive_at(f, p))
        .fold(0, |m, p| m | 1u64 << p)
}

/// The hypercube edges on which a function flips, stored per variable as a
/// bitset of lower endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryGraph {
    nvars: u32,
    /// `lower[p]`: rows `u` with bit `p` clear such that `(u, u | 1<<p)` is an edge.
    lower: Vec<Vec<u64>>,
}

impl BoundaryGraph {
    pub fn empty(nvars: u32) -> Self {
        let words = ((1usize << nvars) + 63) / 64;
        Self {
            nvars,
            lower: vec![vec![0; words]; nvars as usize],
        }
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.lower
            .iter()
            .flatten()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.iter().flatten().all(|&w| w == 0)
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        let (u, v) = (u.min(v), u.max(v));
        let d = u ^ v;
        if !d.is_power_of_two() || v >= 1usize << self.nvars {
            return false;
        }
        let p = d.trailing_zeros() as usize;
        (self.lower[p][u >> 6] >> (u & 63)) & 1 == 1
    }

    /// Edges as `(u, v)` row pairs with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, words) in self.lower.iter().enumerate() {
            for (i, &w) in words.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let j = w.trailing_zeros() as usize;
                    w &= w - 1;
                    let u = i * 64 + j;
                    out.push((u, u | 1 << p));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn union_with(&mut self, other: &BoundaryGraph) {
        assert_eq!(self.nvars, other.nvars, "boundary graphs over different cubes");
        for (a, b) in self.lower.iter_mut().zip(&other.lower) {
            for (x, y) in a.iter_mut().zip(b) {
                *x |= y;
            }
        }
    }

    /// First edge of `self` missing from `other`, if any.
    pub fn first_uncovered(&self, other: &BoundaryGraph) -> Option<(usize, usize)> {
        for (p, (a, b)) in self.lower.iter().zip(&other.lower).enumerate() {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                let miss = x & !y;
                if miss != 0 {
                    let u = i * 64 + miss.trailing_zeros() as usize;
                    return Some((u, u | 1 << p));
                }
            }
        }
        None
    }

    pub fn is_subset(&self, other: &BoundaryGraph) -> bool {
        self.first_uncovered(other).is_none()
    }
}

pub fn boundary_graph(f: &TruthTable) -> BoundaryGraph {
    let mut g = BoundaryGraph::empty(f.nvars());
    for p in 0..f.nvars() {
        let slot = &mut g.lower[p as usize];
        f.for_each_edge_word(p, |i, lo, hi, m| slot[i] |= (lo ^ hi) & m);
    }
    g
}

/// Lexicographic bijection between edges `{u,v}` of the complete graph on
/// `1..=n` and variables `1..=C(n,2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphEncoding {
    n: u32,
}

impl GraphEncoding {
    pub fn new(n: u32) -> Result<Self, FuncError> {
        if n == 0 || n * (n - 1) / 2 > MAX_ASSIGNMENT_VARS || n > 32 {
            return Err(FuncError::OutOfRange(format!("vertex count {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nvars(&self) -> u32 {
        self.n * (self.n - 1) / 2
    }

    pub fn all_vertices(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    pub fn edge_index(&self, u: u32, v: u32) -> Result<u32, FuncError> {
        if u == 0 || u >= v || v > self.n {
            return Err(FuncError::OutOfRange(format!(
                "edge ({u},{v}) on {} vertices",
                self.n
            )));
        }
        Ok((u - 1) * (2 * self.n - u) / 2 + (v - u))
    }

    pub fn index_edge(&self, i: u32) -> Result<(u32, u32), FuncError> {
        if i == 0 || i > self.nvars() {
            return Err(FuncError::OutOfRange(format!(
                "edge variable {i} on {} vertices",
                self.n
            )));
        }
        let mut base = 0;
        for u in 1..self.n {
            let row = self.n - u;
            if i <= base + row {
                return Ok((u, u + (i - base)));
            }
            base += row;
        }
        unreachable!()
    }

    fn idx(&self, u: u32, v: u32) -> u32 {
        let (u, v) = (u.min(v), u.max(v));
        (u - 1) * (2 * self.n - u) / 2 + (v - u)
    }

    /// Assignment-layout bit of the edge `{u,v}`.
    pub fn edge_bit(&self, u: u32, v: u32) -> u64 {
        1u64 << var_bit(self.nvars(), self.idx(u, v))
    }

    /// All edges `(u, v, var)` in variable order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        (1..=self.n).flat_map(move |u| (u + 1..=self.n).map(move |v| (u, v, self.idx(u, v))))
    }

    /// Edge-variable mask of all edges with both endpoints in `vs`.
    pub fn edges_within(&self, vs: u32) -> u64 {
        self.edges()
            .filter(|&(u, v, _)| vs >> (u - 1) & 1 == 1 && vs >> (v - 1) & 1 == 1)
            .fold(0, |m, (u, v, _)| m | self.edge_bit(u, v))
    }

    /// Edge-variable mask of all edges with at least one endpoint in `vs`.
    pub fn edges_touching(&self, vs: u32) -> u64 {
        self.edges()
            .filter(|&(u, v, _)| vs >> (u - 1) & 1 == 1 || vs >> (v - 1) & 1 == 1)
            .fold(0, |m, (u, v, _)| m | self.edge_bit(u, v))
    }

    /// Edge-variable mask of all edges between `a` and `b` (disjoint sets).
    pub fn edges_between(&self, a: u32, b: u32) -> u64 {
        self.edges()
            .filter(|&(u, v, _)| {
                let (iu, iv) = (1u32 << (u - 1), 1u32 << (v - 1));
                (a & iu != 0 && b & iv != 0) || (a & iv != 0 && b & iu != 0)
            })
            .fold(0, |m, (u, v, _)| m | self.edge_bit(u, v))
    }

    /// Vertices touched by the edges in an edge-variable mask.
    pub fn span(&self, edge_mask: u64) -> u32 {
        self.edges()
            .filter(|&(u, v, _)| edge_mask & self.edge_bit(u, v) != 0)
            .fold(0, |m, (u, v, _)| m | 1 << (u - 1) | 1 << (v - 1))
    }

    /// Neighbourhood masks of the graph encoded by `bits`, indexed by vertex - 1.
    pub fn adjacency(&self, bits: u64) -> Vec<u32> {
        let mut adj = vec![0u32; self.n as usize];
        for (u, v, _) in self.edges() {
            if bits & self.edge_bit(u, v) != 0 {
                adj[(u - 1) as usize] |= 1 << (v - 1);
                adj[(v - 1) as usize] |= 1 << (u - 1);
            }
        }
        adj
    }

    pub fn graph(&self, bits: u64) -> Assignment {
        Assignment::new(self.nvars(), bits).expect("encoding fits an assignment")
    }
}

/// Parses a vertex list such as `1,2,5` into a mask.
pub fn parse_vertex_set(s: &str, n: u32) -> Result<u32, FuncError> {
    let mut mask = 0u32;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: u32 = part
            .parse()
            .map_err(|_| FuncError::OutOfRange(format!("vertex `{part}`")))?;
        if v == 0 || v > n {
            return Err(FuncError::OutOfRange(format!("vertex {v} outside 1..={n}")));
        }
        mask |= 1 << (v - 1);
    }
    Ok(mask)
}

pub fn format_vertex_set(vs: u32) -> String {
    (0..32)
        .filter(|b| vs >> b & 1 == 1)
        .map(|b| (b + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// All `k`-element subsets of `{1..=n}` as masks, in lexicographic order of
/// their sorted vertex lists.
pub fn k_subsets(n: u32, k: u32) -> Vec<u32> {
    fn rec(start: u32, n: u32, k: u32, acc: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for v in start..=n {
            if n - v + 1 < k {
                break;
            }
            rec(v + 1, n, k - 1, acc | 1 << (v - 1), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(1, n, k, 0, &mut out);
    }
    out
}

fn check_k(enc: &GraphEncoding, k: u32) -> Result<(), FuncError> {
    if k == 0 || k > enc.n() {
        return Err(FuncError::OutOfRange(format!(
            "clique size {k} on {} vertices",
            enc.n()
        )));
    }
    Ok(())
}

/// Table that is 1 exactly on supersets of one of the given edge masks.
fn upward_closure_of(nvars: u32, masks: &[u64]) -> Result<TruthTable, FuncError> {
    Ok(TruthTable::from_fn(nvars, |row| {
        let r = row as u64;
        masks.iter().any(|&m| r & m == m)
    })?)
}

/// CLIQUE(n, k): 1 iff the graph has a clique on `k` vertices.
pub fn clique_fn(enc: &GraphEncoding, k: u32) -> Result<TruthTable, FuncError> {
    check_k(enc, k)?;
    let masks: Vec<u64> = k_subsets(enc.n(), k)
        .into_iter()
        .map(|s| enc.edges_within(s))
        .collect();
    upward_closure_of(enc.nvars(), &masks)
}

/// Edge masks of every perfect matching of `K_n`.
pub fn perfect_matchings(enc: &GraphEncoding) -> Result<Vec<u64>, FuncError> {
    if enc.n() % 2 == 1 {
        return Err(FuncError::OddVertexCount(enc.n()));
    }
    fn rec(enc: &GraphEncoding, free: u32, acc: u64, out: &mut Vec<u64>) {
        if free == 0 {
            out.push(acc);
            return;
        }
        let u = free.trailing_zeros() + 1;
        let rest = free & !(1 << (u - 1));
        let mut cands = rest;
        while cands != 0 {
            let v = cands.trailing_zeros() + 1;
            cands &= cands - 1;
            rec(enc, rest & !(1 << (v - 1)), acc | enc.edge_bit(u, v), out);
        }
    }
    let mut out = Vec::new();
    rec(enc, enc.all_vertices(), 0, &mut out);
    Ok(out)
}

/// PMATCH(n): 1 iff the graph has a perfect matching.
pub fn pmatch_fn(enc: &GraphEncoding) -> Result<TruthTable, FuncError> {
    let masks = perfect_matchings(enc)?;
    upward_closure_of(enc.nvars(), &masks)
}

/// Bare `k`-cliques, one per `k`-subset (a 1-clique is the empty graph, so
/// `k = 1` yields a single assignment).
pub fn clique_minterms(enc: &GraphEncoding, k: u32) -> Result<Vec<Assignment>, FuncError> {
    check_k(enc, k)?;
    let mut seen = BTreeSet::new();
    Ok(k_subsets(enc.n(), k)
        .into_iter()
        .map(|s| enc.edges_within(s))
        .filter(|m| seen.insert(*m))
        .map(|m| enc.graph(m))
        .collect())
}

/// Set partitions of `1..=n` into at most `classes` blocks, as class labels
/// in restricted-growth form (vertex 1 is in class 0).
fn partitions(n: u32, classes: u32) -> Vec<Vec<u32>> {
    fn rec(v: u32, n: u32, classes: u32, used: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if v == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..(used + 1).min(classes) {
            cur.push(c);
            rec(v + 1, n, classes, used.max(c + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if classes > 0 {
        rec(0, n, classes, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Complete `(k-1)`-partite graphs: every coloring of the vertices with
/// `k-1` colors, edges exactly between differently colored vertices,
/// deduplicated. With `balanced`, only colorings that use all `k-1` colors
/// with class sizes differing by at most one are kept.
pub fn clique_maxterms(
    enc: &GraphEncoding,
    k: u32,
    balanced: bool,
) -> Result<Vec<Assignment>, FuncError> {
    check_k(enc, k)?;
    let n = enc.n();
    let mut out = Vec::new();
    for labels in partitions(n, k - 1) {
        if balanced {
            let mut sizes = vec![0u32; (k - 1) as usize];
            labels.iter().for_each(|&c| sizes[c as usize] += 1);
            let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
            if lo == 0 || hi - lo > 1 {
                continue;
            }
        }
        let mut bits = 0u64;
        for (u, v, _) in enc.edges() {
            if labels[(u - 1) as usize] != labels[(v - 1) as usize] {
                bits |= enc.edge_bit(u, v);
            }
        }
        out.push(enc.graph(bits));
    }
    Ok(out)
}

/// If `x` is exactly a clique (edges = all pairs of some vertex set with at
/// least two vertices), that vertex set.
pub fn as_bare_clique(enc: &GraphEncoding, x: &Assignment) -> Option<u32> {
    let vs = enc.span(x.bits());
    (vs != 0 && enc.edges_within(vs) == x.bits()).then_some(vs)
}

/// If `y` is complete multipartite, the class number of every vertex
/// (indexed by vertex - 1). Classes are the connected components of the
/// complement graph, numbered in order of their smallest vertex.
pub fn partite_classes(enc: &GraphEncoding, y: &Assignment) -> Option<Vec<u32>> {
    let n = enc.n() as usize;
    let adj = enc.adjacency(y.bits());
    let all = enc.all_vertices();
    let mut class = vec![u32::MAX; n];
    let mut next = 0;
    for v in 0..n {
        if class[v] != u32::MAX {
            continue;
        }
        // In a complete multipartite graph a class is the non-neighbourhood.
        let members = all & !adj[v];
        for u in 0..n {
            if members >> u & 1 == 1 {
                if class[u] != u32::MAX {
                    return None;
                }
                class[u] = next;
            }
        }
        next += 1;
    }
    let mut bits = 0u64;
    for (u, v, _) in enc.edges() {
        if class[(u - 1) as usize] != class[(v - 1) as usize] {
            bits |= enc.edge_bit(u, v);
        }
    }
    (bits == y.bits()).then_some(class)
}

/// Lexicographically smallest `k`-clique of the graph, if any.
pub fn first_clique(enc: &GraphEncoding, bits: u64, k: u32) -> Option<u32> {
    k_subsets(enc.n(), k)
        .into_iter()
        .find(|&s| bits & enc.edges_within(s) == enc.edges_within(s))
}

/// The textbook monotone CLIQUE(n, k) circuit: an OR over all `k`-subsets of
/// the AND of their edges, both as balanced trees.
pub fn clique_circuit(enc: &GraphEncoding, k: u32) -> Result<Circuit, FuncError> {
    check_k(enc, k)?;
    let mut b = CircuitBuilder::new(enc.nvars());
    let terms: Vec<_> = k_subsets(enc.n(), k)
        .into_iter()
        .map(|s| {
            let vars: Vec<_> = enc
                .edges()
                .filter(|&(u, v, _)| enc.edges_within(s) & enc.edge_bit(u, v) != 0)
                .map(|(_, _, i)| b.var(i))
                .collect();
            b.and_all(&vars)
        })
        .collect();
    let out = b.or_all(&terms);
    Ok(b.finish(out).expect("builder output is well formed"))
}

/// Clique size used when only `n` is given: `n/2`, rounded down for odd `n`.
/// The flag is set when rounding happened.
pub fn default_clique_size(n: u32) -> (u32, bool) {
    (n / 2, n % 2 == 1)
}
