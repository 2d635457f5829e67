//! Karchmer-Wigderson games played along a circuit.
//!
//! Alice holds `x` with `f(x) = 1`, Bob holds `y` with `f(y) = 0`, and they
//! walk down the circuit from the output keeping the current gate 1 on
//! Alice's side and 0 on Bob's. Four protocols are simulated:
//!
//! * `plus`: the monotone game on a circuit whose gates are all monotone.
//! * `general`: the standard game on the DeMorgan-normalized circuit.
//! * `modified`: the orientation-aware descent through a circuit with
//!   internal NOT gates. At each gate the parties first align their inputs
//!   on the orientation support of the children, then take one direction bit.
//! * `vertex`: the same descent on CLIQUE min-term/max-term pairs, with data
//!   messages phrased in terms of vertices instead of edges.
//!
//! Transcripts account semantic bits: a data message costs one bit per
//! coordinate, a direction costs one bit, and an answer is the protocol's
//! output rather than a message. Zero-length messages are omitted.
//! [`ProtocolTree`]s need a prefix-free wire format instead; see
//! [`build_protocol_tree`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{demorgan_normalize, Circuit, CircuitBuilder, CircuitError, GateKind, GateRef};
use crate::funcs::{
    as_bare_clique, clique_maxterms, clique_minterms, partite_classes, GraphEncoding,
};
use crate::orientation::{orientation_profile, OrientationError, OrientationProfile};
use crate::report::{Failure, VerificationReport};
use crate::table::{var_bit, Assignment, TruthTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Alice,
    Bob,
}

/// Which way the answer index separates the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// `x_i = 1` and `y_i = 0`.
    #[serde(rename = "x1y0")]
    Positive,
    /// `x_i = 0` and `y_i = 1`.
    #[serde(rename = "x0y1")]
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Answer {
    pub index: u32,
    pub polarity: Polarity,
}

impl Answer {
    pub fn separates(&self, x: &Assignment, y: &Assignment) -> bool {
        let (xi, yi) = (x.get(self.index), y.get(self.index));
        match self.polarity {
            Polarity::Positive => xi && !yi,
            Polarity::Negative => !xi && yi,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Positive => write!(f, "{} (x=1, y=0)", self.index),
            Polarity::Negative => write!(f, "{} (x=0, y=1)", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Round {
    pub gate: String,
    pub speaker: Speaker,
    pub bits: usize,
    pub message: String,
    /// The speaker's input after this round, when the round changed it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updated: Option<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub total_bits: usize,
    pub answer: Answer,
}

/// An input pair of the game on `f`: `f(x) = 1`, `f(y) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GamePair {
    pub x: Assignment,
    pub y: Assignment,
}

impl GamePair {
    pub fn new(f: &TruthTable, x: Assignment, y: Assignment) -> Result<Self, KwError> {
        for a in [&x, &y] {
            if a.nvars() != f.nvars() {
                return Err(KwError::LengthMismatch {
                    expected: f.nvars(),
                    found: a.nvars(),
                });
            }
        }
        if !f.get(x.row()) {
            return Err(KwError::NotAOneInput(x));
        }
        if f.get(y.row()) {
            return Err(KwError::NotAZeroInput(y));
        }
        Ok(Self { x, y })
    }

    /// Every pair in `f⁻¹(1) × f⁻¹(0)`, ordered by `(x, y)` row.
    pub fn all(f: &TruthTable) -> Vec<GamePair> {
        let n = f.nvars();
        let zeros: Vec<usize> = f.zeros().collect();
        f.ones()
            .flat_map(|x| {
                zeros.iter().map(move |&y| GamePair {
                    x: Assignment::from_row(n, x),
                    y: Assignment::from_row(n, y),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plus,
    General,
    Modified,
    Vertex,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plus => "plus",
            Mode::General => "general",
            Mode::Modified => "modified",
            Mode::Vertex => "vertex",
        })
    }
}

impl FromStr for Mode {
    type Err = KwError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" => Ok(Mode::Plus),
            "general" => Ok(Mode::General),
            "modified" => Ok(Mode::Modified),
            "vertex" => Ok(Mode::Vertex),
            _ => Err(KwError::UnknownMode(s.to_string())),
        }
    }
}

/// The part of the protocol's guarantee that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// `x'` and `y'` differ on the gate's orientation support.
    OrientationAgreement,
    /// The gate is not 1 on `x'`.
    OneOnX,
    /// The gate is not 0 on `y'`.
    ZeroOnY,
    /// Fixing the oriented coordinates to `x'` leaves a non-monotone function.
    RestrictionMonotone,
    /// The descent would enter a NOT gate.
    NotDescent,
    /// The descent reached a leaf that is not a positive literal.
    LeafLiteral,
    /// No child could be chosen.
    NoDirection,
    /// A root NOT gate round found no separating index.
    RootAnswer,
    /// A round exceeded its bit allowance.
    RoundBits,
    /// The transcript exceeded the depth bound.
    TotalBits,
    /// The answer does not separate the original pair.
    AnswerValid,
    /// The receiver's reconstruction of a vertex message disagreed with the
    /// sender's actual input.
    Reconstruction,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("clause serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KwError {
    #[error("length mismatch: expected {expected} variables, got {found}")]
    LengthMismatch { expected: u32, found: u32 },
    #[error("x={0} is not a 1-input of the function")]
    NotAOneInput(Assignment),
    #[error("y={0} is not a 0-input of the function")]
    NotAZeroInput(Assignment),
    #[error("gate `{0}` computes a non-monotone function")]
    NonMonotoneGate(String),
    #[error("the output is not monotone and x={x}, y={y} differ on its orientation")]
    RootDisagreement { x: Assignment, y: Assignment },
    #[error("x={0} is not a bare clique")]
    NotMinterm(Assignment),
    #[error("y={0} is not a complete multipartite graph")]
    NotMaxterm(Assignment),
    #[error("{nvars} variables is not C(n,2) for any n")]
    NotAGraph { nvars: u32 },
    #[error("orientation profile does not belong to this circuit")]
    ProfileMismatch,
    #[error("unknown protocol mode `{0}`")]
    UnknownMode(String),
    #[error("{mode} protocol trees are not supported")]
    UnsupportedMode { mode: Mode },
    #[error("gate `{gate}`: {clause} violated at x'={x}, y'={y}")]
    Invariant {
        gate: String,
        clause: Clause,
        x: Assignment,
        y: Assignment,
    },
    #[error("protocol is not a tree: runs disagree after the same messages (x={x}, y={y})")]
    TreeConflict { x: Assignment, y: Assignment },
    #[error("leaf answer {answer} does not separate x={x}, y={y}")]
    InconsistentLeaf {
        answer: Answer,
        x: Assignment,
        y: Assignment,
    },
    #[error("answer index {index} outside 1..={nvars}")]
    AnswerOutOfRange { index: u32, nvars: u32 },
    #[error("no game pairs: the function is constant")]
    NoPairs,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Func(#[from] crate::funcs::FuncError),
}

/// `⌈log2 m⌉` for `m >= 1`.
pub fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

fn bits_string(v: u64, width: u32) -> String {
    (0..width)
        .rev()
        .map(|b| if v >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// One message in the wire format used for protocol trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Wire {
    pub(crate) speaker: Speaker,
    pub(crate) message: String,
}

#[derive(Debug, Clone)]
pub(crate) struct Run {
    pub(crate) transcript: Transcript,
    pub(crate) wire: Vec<Wire>,
}

/// Per-run state of the vertex protocol.
struct VertexView {
    clique: u32,
    classes: Vec<u32>,
    /// Coordinates of `x'` / `y'` rewritten in earlier rounds.
    x_over: u64,
    y_over: u64,
}

/// A protocol bound to one circuit. Construction does the per-gate
/// precomputation; [`KwEngine::run`] then plays single pairs cheaply and can
/// be called from many threads.
pub struct KwEngine {
    mode: Mode,
    circuit: Circuit,
    tables: Vec<TruthTable>,
    /// Minimal orientations as assignment-layout masks (modified/vertex).
    betas: Vec<u64>,
    /// Orientation support `S` used at each AND/OR gate and at a NOT root.
    supports: Vec<u64>,
    /// Per gate, the `x'`-patterns on the gate's orientation support under
    /// which the restricted function is not monotone.
    bad_patterns: Vec<HashSet<u64>>,
    max_weight: u32,
    depth: u32,
    enc: Option<GraphEncoding>,
    /// Bits per vertex in Bob's class-number messages.
    class_bits: u32,
    bound: u64,
}

impl KwEngine {
    /// Engine for `plus` or `general`; `modified` and `vertex` compute the
    /// orientation profile themselves.
    pub fn new(c: &Circuit, mode: Mode) -> Result<Self, KwError> {
        match mode {
            Mode::Plus | Mode::General => Self::build(c, mode, None),
            Mode::Modified | Mode::Vertex => {
                let prof = orientation_profile(c)?;
                Self::build(c, mode, Some(&prof))
            }
        }
    }

    pub fn with_profile(c: &Circuit, mode: Mode, prof: &OrientationProfile) -> Result<Self, KwError> {
        Self::build(c, mode, Some(prof))
    }

    fn build(c: &Circuit, mode: Mode, prof: Option<&OrientationProfile>) -> Result<Self, KwError> {
        let circuit = match mode {
            Mode::General => demorgan_normalize(c),
            _ => c.clone(),
        };
        let n = circuit.nvars();
        let (tables, betas, max_weight) = match (mode, prof) {
            (Mode::Modified | Mode::Vertex, Some(p)) => {
                if p.len() != circuit.len() || p.nvars != n {
                    return Err(KwError::ProfileMismatch);
                }
                let betas = circuit.refs().map(|r| p.beta(r).bits()).collect();
                (p.tables().to_vec(), betas, p.max_weight)
            }
            (Mode::Modified | Mode::Vertex, None) => unreachable!(),
            _ => (circuit.gate_tables()?, vec![0; circuit.len()], 0),
        };
        if mode == Mode::Plus {
            for r in circuit.refs() {
                let t = &tables[r.0];
                if (0..n).any(|p| crate::funcs::decreasing_at(t, p)) {
                    return Err(KwError::NonMonotoneGate(circuit.name(r).to_string()));
                }
            }
        }
        let root = circuit.output();
        let mut supports = vec![0u64; circuit.len()];
        let gamma = |g: GateRef| match circuit.kind(g) {
            GateKind::Not(a) => betas[a.0],
            _ => 0,
        };
        for r in circuit.refs() {
            supports[r.0] = match circuit.kind(r) {
                GateKind::And(a, b) | GateKind::Or(a, b) => {
                    betas[a.0] | betas[b.0] | gamma(a) | gamma(b)
                }
                GateKind::Not(a) if r == root => betas[r.0] | betas[a.0],
                _ => 0,
            };
        }
        let bad_patterns = if matches!(mode, Mode::Modified | Mode::Vertex) {
            circuit
                .refs()
                .map(|r| {
                    let mut bad = HashSet::new();
                    let bm = betas[r.0];
                    for p in (0..n).filter(|p| bm >> p & 1 == 0) {
                        tables[r.0].for_each_edge_word(p, |i, lo, hi, m| {
                            let mut v = lo & !hi & m;
                            while v != 0 {
                                let u = (i * 64) as u64 + v.trailing_zeros() as u64;
                                v &= v - 1;
                                bad.insert(u & bm);
                            }
                        });
                    }
                    bad
                })
                .collect()
        } else {
            Vec::new()
        };
        let enc = if mode == Mode::Vertex {
            Some(encoding_for(n)?)
        } else {
            None
        };
        let class_bits = enc.map_or(0, |e| ceil_log2(e.n() as u64));
        let depth = circuit.depth();
        let mut engine = Self {
            mode,
            circuit,
            tables,
            betas,
            supports,
            bad_patterns,
            max_weight,
            depth,
            enc,
            class_bits,
            bound: 0,
        };
        engine.bound = engine.compute_bound();
        Ok(engine)
    }

    fn compute_bound(&self) -> u64 {
        let d = self.depth as u64;
        match self.mode {
            Mode::Plus | Mode::General => d,
            Mode::Modified => d * (4 * self.max_weight as u64 + 1),
            Mode::Vertex => d * (self.max_span() as u64 * self.class_bits as u64 + 1),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The circuit the protocol walks (normalized in `general` mode).
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn function(&self) -> &TruthTable {
        &self.tables[self.circuit.output().0]
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Worst-case transcript bits the mode promises.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Orientation support `S` at gate `g`, as variable indices.
    pub fn support(&self, g: GateRef) -> Vec<u32> {
        let n = self.circuit.nvars();
        (1..=n)
            .filter(|&i| self.supports[g.0] >> var_bit(n, i) & 1 == 1)
            .collect()
    }

    /// Largest number of vertices spanned by a gate's support (vertex mode).
    pub fn max_span(&self) -> u32 {
        match self.enc {
            Some(e) => self
                .supports
                .iter()
                .map(|&s| e.span(s).count_ones())
                .max()
                .unwrap_or(0),
            None => 0,
        }
    }

    /// Orientation of the output function (zero when it is monotone).
    pub fn root_orientation(&self) -> u64 {
        self.betas[self.circuit.output().0]
    }

    /// In the orientation-aware modes the pair must already agree on the
    /// output's orientation; for a monotone output every pair does.
    pub fn pair_admissible(&self, p: &GamePair) -> bool {
        (p.x.bits() ^ p.y.bits()) & self.root_orientation() == 0
    }

    pub fn run(&self, p: &GamePair) -> Result<Transcript, KwError> {
        Ok(self.play(p)?.transcript)
    }

    fn violation(&self, g: GateRef, clause: Clause, x: u64, y: u64) -> KwError {
        let n = self.circuit.nvars();
        KwError::Invariant {
            gate: self.circuit.name(g).to_string(),
            clause,
            x: Assignment::new(n, x).expect("fits"),
            y: Assignment::new(n, y).expect("fits"),
        }
    }

    fn value(&self, g: GateRef, a: u64) -> bool {
        self.tables[g.0].get(a as usize)
    }

    fn check_invariant(&self, g: GateRef, x: u64, y: u64) -> Result<(), KwError> {
        if !self.value(g, x) {
            return Err(self.violation(g, Clause::OneOnX, x, y));
        }
        if self.value(g, y) {
            return Err(self.violation(g, Clause::ZeroOnY, x, y));
        }
        if self.mode == Mode::Modified || self.mode == Mode::Vertex {
            let bm = self.betas[g.0];
            if (x ^ y) & bm != 0 {
                return Err(self.violation(g, Clause::OrientationAgreement, x, y));
            }
            if self.bad_patterns[g.0].contains(&(x & bm)) {
                return Err(self.violation(g, Clause::RestrictionMonotone, x, y));
            }
        }
        Ok(())
    }

    /// Variables of `mask` in ascending index order, as bit positions.
    fn positions(&self, mask: u64) -> Vec<u32> {
        let n = self.circuit.nvars();
        (1..=n)
            .map(|i| var_bit(n, i))
            .filter(|&p| mask >> p & 1 == 1)
            .collect()
    }

    pub(crate) fn play(&self, p: &GamePair) -> Result<Run, KwError> {
        let c = &self.circuit;
        let n = c.nvars();
        GamePair::new(self.function(), p.x, p.y)?;
        if !self.pair_admissible(p) {
            return Err(KwError::RootDisagreement { x: p.x, y: p.y });
        }
        let mut view = match self.enc {
            Some(e) => Some(VertexView {
                clique: as_bare_clique(&e, &p.x).ok_or(KwError::NotMinterm(p.x))?,
                classes: partite_classes(&e, &p.y).ok_or(KwError::NotMaxterm(p.y))?,
                x_over: 0,
                y_over: 0,
            }),
            None => None,
        };
        let (mut xp, mut yp) = (p.x.bits(), p.y.bits());
        let mut g = c.output();
        let mut rounds: Vec<Round> = Vec::new();
        let mut wire: Vec<Wire> = Vec::new();
        let per_round = 4 * self.max_weight as usize + 1;
        let answer = loop {
            self.check_invariant(g, xp, yp)?;
            let name = c.name(g).to_string();
            match (c.kind(g), self.mode) {
                (GateKind::Var(i), _) => {
                    break Answer {
                        index: i,
                        polarity: Polarity::Positive,
                    }
                }
                (GateKind::Const(_), _) => {
                    return Err(self.violation(g, Clause::LeafLiteral, xp, yp))
                }
                (GateKind::Not(a), Mode::General) => match c.kind(a) {
                    GateKind::Var(i) => {
                        break Answer {
                            index: i,
                            polarity: Polarity::Negative,
                        }
                    }
                    _ => return Err(self.violation(g, Clause::LeafLiteral, xp, yp)),
                },
                (GateKind::Not(_), Mode::Plus) => {
                    return Err(KwError::NonMonotoneGate(name));
                }
                (GateKind::Not(_), _) => {
                    if g != c.output() {
                        return Err(self.violation(g, Clause::NotDescent, xp, yp));
                    }
                    // The output depends only on S, so Alice's data is enough
                    // for Bob to name a separating coordinate.
                    let s = self.supports[g.0];
                    let data = self.data_message(Speaker::Alice, g, s, xp, yp, &mut view)?;
                    push_data(&mut rounds, &mut wire, &name, Speaker::Alice, data);
                    let (cands, idx) = self.candidates(s, xp, yp, Speaker::Bob);
                    let Some(&pos) = idx.first() else {
                        return Err(self.violation(g, Clause::RootAnswer, xp, yp));
                    };
                    let j = cands.iter().position(|&q| q == pos).unwrap() as u64;
                    let width = ceil_log2(2 + cands.len() as u64);
                    wire.push(Wire {
                        speaker: Speaker::Bob,
                        message: bits_string(2 + j, width),
                    });
                    break Answer {
                        index: n - pos,
                        polarity: Polarity::Positive,
                    };
                }
                (GateKind::And(a, b) | GateKind::Or(a, b), Mode::Plus | Mode::General) => {
                    let is_and = matches!(c.kind(g), GateKind::And(..));
                    let (speaker, next) = if is_and {
                        let pick = if !self.value(a, yp) { Some(a) } else if !self.value(b, yp) { Some(b) } else { None };
                        (Speaker::Bob, pick)
                    } else {
                        let pick = if self.value(a, xp) { Some(a) } else if self.value(b, xp) { Some(b) } else { None };
                        (Speaker::Alice, pick)
                    };
                    let Some(next) = next else {
                        return Err(self.violation(g, Clause::NoDirection, xp, yp));
                    };
                    let message = if next == a { "0" } else { "1" }.to_string();
                    wire.push(Wire { speaker, message: message.clone() });
                    rounds.push(Round { gate: name, speaker, bits: 1, message, updated: None });
                    g = next;
                }
                (GateKind::And(a, b) | GateKind::Or(a, b), _) => {
                    let is_and = matches!(c.kind(g), GateKind::And(..));
                    let s = self.supports[g.0];
                    let (sender, replier) = if is_and {
                        (Speaker::Alice, Speaker::Bob)
                    } else {
                        (Speaker::Bob, Speaker::Alice)
                    };
                    let data = self.data_message(sender, g, s, xp, yp, &mut view)?;
                    let data_bits = data.len();
                    push_data(&mut rounds, &mut wire, &name, sender, data);
                    let (cands, idx) = self.candidates(s, xp, yp, replier);
                    let width = ceil_log2(2 + cands.len() as u64);
                    if let Some(&pos) = idx.first() {
                        let j = cands.iter().position(|&q| q == pos).unwrap() as u64;
                        wire.push(Wire { speaker: replier, message: bits_string(2 + j, width) });
                        if data_bits > per_round && self.mode == Mode::Modified {
                            return Err(self.violation(g, Clause::RoundBits, xp, yp));
                        }
                        break Answer {
                            index: n - pos,
                            polarity: Polarity::Positive,
                        };
                    }
                    // Align the replier's input with the sender's on S and
                    // move toward a child that still separates.
                    let (nx, ny) = if is_and {
                        (xp, (yp & !s) | (xp & s))
                    } else {
                        ((xp & !s) | (yp & s), yp)
                    };
                    let ok = |child: GateRef| {
                        if is_and { !self.value(child, ny) } else { self.value(child, nx) }
                    };
                    let next = if ok(a) { a } else if ok(b) { b } else {
                        return Err(self.violation(g, Clause::NoDirection, nx, ny));
                    };
                    if c.kind(next).is_not() {
                        return Err(self.violation(next, Clause::NotDescent, nx, ny));
                    }
                    let dir = u64::from(next != a);
                    let updated = if is_and {
                        (ny != yp).then(|| Assignment::new(n, ny).expect("fits"))
                    } else {
                        (nx != xp).then(|| Assignment::new(n, nx).expect("fits"))
                    };
                    if let Some(v) = view.as_mut() {
                        if is_and { v.y_over |= s } else { v.x_over |= s }
                    }
                    wire.push(Wire { speaker: replier, message: bits_string(dir, width) });
                    rounds.push(Round {
                        gate: name,
                        speaker: replier,
                        bits: 1,
                        message: dir.to_string(),
                        updated,
                    });
                    if data_bits + 1 > per_round && self.mode == Mode::Modified {
                        return Err(self.violation(g, Clause::RoundBits, xp, yp));
                    }
                    xp = nx;
                    yp = ny;
                    g = next;
                }
            }
        };
        if !answer.separates(&p.x, &p.y) {
            return Err(self.violation(g, Clause::AnswerValid, xp, yp));
        }
        let total_bits: usize = rounds.iter().map(|r| r.bits).sum();
        if total_bits as u64 > self.bound {
            return Err(self.violation(g, Clause::TotalBits, xp, yp));
        }
        Ok(Run {
            transcript: Transcript { rounds, total_bits, answer },
            wire,
        })
    }

    /// Positions in `s` where the replier could still answer given the data
    /// message (first vector), and those that actually separate (second).
    fn candidates(&self, s: u64, x: u64, y: u64, replier: Speaker) -> (Vec<u32>, Vec<u32>) {
        let open = match replier {
            // Bob learned x'_S: indices with x'_i = 1 may be answers.
            Speaker::Bob => s & x,
            // Alice learned y'_S: indices with y'_i = 0 may be answers.
            Speaker::Alice => s & !y,
        };
        let sep = s & x & !y;
        (self.positions(open), self.positions(sep))
    }

    /// The data message the sender puts on the wire at gate `g`.
    fn data_message(
        &self,
        sender: Speaker,
        g: GateRef,
        s: u64,
        x: u64,
        y: u64,
        view: &mut Option<VertexView>,
    ) -> Result<String, KwError> {
        let own = match sender {
            Speaker::Alice => x,
            Speaker::Bob => y,
        };
        let Some(v) = view.as_ref() else {
            return Ok(self
                .positions(s)
                .into_iter()
                .map(|p| if own >> p & 1 == 1 { '1' } else { '0' })
                .collect());
        };
        let e = self.enc.expect("vertex mode has an encoding");
        let span = e.span(s);
        let verts: Vec<u32> = (1..=e.n()).filter(|u| span >> (u - 1) & 1 == 1).collect();
        let msg: String = match sender {
            Speaker::Alice => verts
                .iter()
                .map(|u| if v.clique >> (u - 1) & 1 == 1 { '1' } else { '0' })
                .collect(),
            Speaker::Bob => verts
                .iter()
                .map(|u| bits_string(v.classes[(u - 1) as usize] as u64, self.class_bits))
                .collect(),
        };
        // The receiver rebuilds the sender's values on S from the message
        // and from coordinates both sides saw rewritten earlier.
        let over = match sender {
            Speaker::Alice => v.x_over,
            Speaker::Bob => v.y_over,
        };
        let bytes = msg.as_bytes();
        let w = match sender {
            Speaker::Alice => 1,
            Speaker::Bob => self.class_bits as usize,
        };
        let field = |u: u32| {
            let k = verts.iter().position(|&q| q == u).unwrap();
            let chunk = &msg[k * w..(k + 1) * w];
            u64::from_str_radix(chunk, 2).unwrap_or(0)
        };
        debug_assert_eq!(bytes.len(), verts.len() * w);
        let mut rebuilt = 0u64;
        for (a, b, _) in e.edges() {
            let bit = e.edge_bit(a, b);
            if s & bit == 0 {
                continue;
            }
            let val = if over & bit != 0 {
                own & bit != 0
            } else {
                match sender {
                    Speaker::Alice => field(a) == 1 && field(b) == 1,
                    Speaker::Bob => field(a) != field(b),
                }
            };
            if val {
                rebuilt |= bit;
            }
        }
        if rebuilt != own & s {
            return Err(self.violation(g, Clause::Reconstruction, x, y));
        }
        Ok(msg)
    }
}

fn push_data(rounds: &mut Vec<Round>, wire: &mut Vec<Wire>, gate: &str, speaker: Speaker, data: String) {
    if data.is_empty() {
        return;
    }
    wire.push(Wire { speaker, message: data.clone() });
    rounds.push(Round {
        gate: gate.to_string(),
        speaker,
        bits: data.len(),
        message: data,
        updated: None,
    });
}

/// Encoding whose edge variables number exactly `nvars`.
pub fn encoding_for(nvars: u32) -> Result<GraphEncoding, KwError> {
    (1..=12)
        .find(|n| n * (n - 1) / 2 == nvars)
        .map(GraphEncoding::new)
        .transpose()?
        .ok_or(KwError::NotAGraph { nvars })
}

pub fn kw_plus_protocol(c: &Circuit, p: &GamePair) -> Result<Transcript, KwError> {
    KwEngine::new(c, Mode::Plus)?.run(p)
}

pub fn kw_general_protocol(c: &Circuit, p: &GamePair) -> Result<Transcript, KwError> {
    KwEngine::new(c, Mode::General)?.run(p)
}

pub fn modified_kw_protocol(
    c: &Circuit,
    prof: &OrientationProfile,
    p: &GamePair,
) -> Result<Transcript, KwError> {
    KwEngine::with_profile(c, Mode::Modified, prof)?.run(p)
}

/// The vertex-message variant. `enc` must match the circuit's variables.
pub fn vertex_kw_protocol(
    c: &Circuit,
    prof: &OrientationProfile,
    enc: &GraphEncoding,
    p: &GamePair,
) -> Result<Transcript, KwError> {
    if enc.nvars() != c.nvars() {
        return Err(KwError::LengthMismatch {
            expected: c.nvars(),
            found: enc.nvars(),
        });
    }
    KwEngine::with_profile(c, Mode::Vertex, prof)?.run(p)
}

/// A deterministic protocol as a game tree. Children are keyed by message
/// bit strings and only hold messages some input pair actually sends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProtocolTree {
    AliceSpeaks {
        len: usize,
        children: BTreeMap<String, ProtocolTree>,
    },
    BobSpeaks {
        len: usize,
        children: BTreeMap<String, ProtocolTree>,
    },
    Answer {
        answer: Answer,
    },
    /// The function has no game pairs; it is this constant.
    Constant {
        value: bool,
    },
}

impl ProtocolTree {
    /// Largest total message length on a root-to-leaf path.
    pub fn cost(&self) -> usize {
        match self {
            ProtocolTree::AliceSpeaks { len, children } | ProtocolTree::BobSpeaks { len, children } => {
                len + children.values().map(ProtocolTree::cost).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            ProtocolTree::AliceSpeaks { children, .. } | ProtocolTree::BobSpeaks { children, .. } => {
                children.values().map(ProtocolTree::leaves).sum()
            }
            _ => 1,
        }
    }
}

/// Tree under construction.
pub(crate) enum Node {
    Empty,
    Leaf(Answer),
    Speak {
        speaker: Speaker,
        len: usize,
        children: BTreeMap<String, Node>,
    },
}

impl Node {
    pub(crate) fn insert(&mut self, path: &[Wire], answer: Answer, pair: GamePair) -> Result<(), KwError> {
        let conflict = || KwError::TreeConflict { x: pair.x, y: pair.y };
        match (path.split_first(), &mut *self) {
            (None, Node::Empty) => {
                *self = Node::Leaf(answer);
                Ok(())
            }
            (None, Node::Leaf(a)) if *a == answer => Ok(()),
            (None, _) => Err(conflict()),
            (Some((m, rest)), Node::Empty) => {
                let mut child = Node::Empty;
                child.insert(rest, answer, pair)?;
                *self = Node::Speak {
                    speaker: m.speaker,
                    len: m.message.len(),
                    children: BTreeMap::from([(m.message.clone(), child)]),
                };
                Ok(())
            }
            (Some((m, rest)), Node::Speak { speaker, len, children }) => {
                if *speaker != m.speaker || *len != m.message.len() {
                    return Err(conflict());
                }
                children
                    .entry(m.message.clone())
                    .or_insert(Node::Empty)
                    .insert(rest, answer, pair)
            }
            (Some(_), Node::Leaf(_)) => Err(conflict()),
        }
    }

    pub(crate) fn freeze(self) -> ProtocolTree {
        match self {
            Node::Empty => unreachable!("empty nodes are never left behind"),
            Node::Leaf(answer) => ProtocolTree::Answer { answer },
            Node::Speak { speaker, len, children } => {
                let children = children.into_iter().map(|(k, v)| (k, v.freeze())).collect();
                match speaker {
                    Speaker::Alice => ProtocolTree::AliceSpeaks { len, children },
                    Speaker::Bob => ProtocolTree::BobSpeaks { len, children },
                }
            }
        }
    }
}

/// Materializes the protocol of `mode` on `c` over `pairs` (all of
/// `f⁻¹(1) × f⁻¹(0)` when `None`).
///
/// In `modified` mode the replier's message after a data round must say
/// either "go left", "go right" or "answer the j-th open coordinate", so it
/// is sent as a `⌈log2(2+m)⌉`-bit number where `m` is the number of open
/// coordinates. The tree cost can therefore exceed the semantic transcript
/// bits. Vertex mode is not supported here.
pub fn build_protocol_tree(
    c: &Circuit,
    mode: Mode,
    pairs: Option<&[GamePair]>,
) -> Result<ProtocolTree, KwError> {
    if mode == Mode::Vertex {
        return Err(KwError::UnsupportedMode { mode });
    }
    let engine = KwEngine::new(c, mode)?;
    let f = engine.function();
    let owned;
    let pairs = match pairs {
        Some(p) => p,
        None => {
            owned = GamePair::all(f);
            &owned
        }
    };
    if pairs.is_empty() {
        return match f.is_constant() {
            Some(value) => Ok(ProtocolTree::Constant { value }),
            None => Err(KwError::NoPairs),
        };
    }
    let runs: Vec<Run> = pairs
        .par_iter()
        .map(|p| engine.play(p))
        .collect::<Result<_, _>>()?;
    let mut root = Node::Empty;
    for (run, pair) in runs.into_iter().zip(pairs) {
        if !run.transcript.answer.separates(&pair.x, &pair.y) {
            return Err(KwError::InconsistentLeaf {
                answer: run.transcript.answer,
                x: pair.x,
                y: pair.y,
            });
        }
        root.insert(&run.wire, run.transcript.answer, *pair)?;
    }
    Ok(root.freeze())
}

/// Turns a protocol tree into a circuit: Alice's messages become OR trees,
/// Bob's AND trees, answers literals. Each message of `k` bits adds at most
/// `k` levels, so the depth over literals ([`Circuit::literal_depth`]) is at
/// most the tree cost. Negative answers add one NOT above their variable.
pub fn protocol_to_circuit(t: &ProtocolTree, nvars: u32) -> Result<Circuit, KwError> {
    let mut b = CircuitBuilder::new(nvars);
    let out = lower(t, nvars, &mut b)?;
    Ok(b.finish(out)?)
}

fn lower(t: &ProtocolTree, nvars: u32, b: &mut CircuitBuilder) -> Result<GateRef, KwError> {
    match t {
        ProtocolTree::Constant { value } => Ok(b.constant(*value)),
        ProtocolTree::Answer { answer } => {
            if answer.index == 0 || answer.index > nvars {
                return Err(KwError::AnswerOutOfRange {
                    index: answer.index,
                    nvars,
                });
            }
            let v = b.var(answer.index);
            Ok(match answer.polarity {
                Polarity::Positive => v,
                Polarity::Negative => b.not(v),
            })
        }
        ProtocolTree::AliceSpeaks { children, .. } => lower_trie(children, 0, nvars, b, true),
        ProtocolTree::BobSpeaks { children, .. } => lower_trie(children, 0, nvars, b, false),
    }
}

/// Joins the children sharing a message prefix bit by bit.
fn lower_trie(
    children: &BTreeMap<String, ProtocolTree>,
    at: usize,
    nvars: u32,
    b: &mut CircuitBuilder,
    or: bool,
) -> Result<GateRef, KwError> {
    if children.len() == 1 {
        let only = children.values().next().unwrap();
        return lower(only, nvars, b);
    }
    let (zero, one): (BTreeMap<_, _>, BTreeMap<_, _>) = children
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .partition(|(k, _)| k.as_bytes()[at] == b'0');
    // Only messages some pair sends are present; a bit every one of them
    // agrees on needs no gate.
    if zero.is_empty() {
        return lower_trie(&one, at + 1, nvars, b, or);
    }
    if one.is_empty() {
        return lower_trie(&zero, at + 1, nvars, b, or);
    }
    let l = lower_trie(&zero, at + 1, nvars, b, or)?;
    let r = lower_trie(&one, at + 1, nvars, b, or)?;
    Ok(if or { b.or(l, r) } else { b.and(l, r) })
}

/// Where the pairs of an exhaustive check come from.
#[derive(Debug, Clone)]
pub enum PairSource {
    /// Every pair in `f⁻¹(1) × f⁻¹(0)`.
    All,
    /// CLIQUE min-terms against (unbalanced) max-terms for clique size `k`.
    CliqueTerms { k: u32 },
    Given(Vec<GamePair>),
}

/// Pairs from `source` for the function `f`.
pub fn pairs_from(f: &TruthTable, source: &PairSource) -> Result<Vec<GamePair>, KwError> {
    match source {
        PairSource::All => Ok(GamePair::all(f)),
        PairSource::CliqueTerms { k } => {
            let e = encoding_for(f.nvars())?;
            let mins = clique_minterms(&e, *k)?;
            let maxs = clique_maxterms(&e, *k, false)?;
            let mut out = Vec::new();
            for x in &mins {
                for y in &maxs {
                    out.push(GamePair::new(f, *x, *y)?);
                }
            }
            Ok(out)
        }
        PairSource::Given(v) => Ok(v.clone()),
    }
}

/// Runs `mode` on every pair from `source` and reports answer validity,
/// invariant violations and the worst transcript against the mode's bound.
pub fn exhaustive_kw_verify(c: &Circuit, mode: Mode, source: &PairSource) -> VerificationReport {
    let start = std::time::Instant::now();
    let mut report = VerificationReport::new(format!("kw-{mode}"));
    let engine = match KwEngine::new(c, mode) {
        Ok(e) => e,
        Err(e) => {
            report.fail(Failure::new("setup", e.to_string()));
            return report;
        }
    };
    report.bound = Some(engine.bound());
    let mut pairs = match pairs_from(engine.function(), source) {
        Ok(p) => p,
        Err(e) => {
            report.fail(Failure::new("pairs", e.to_string()));
            return report;
        }
    };
    if engine.root_orientation() != 0 {
        pairs.retain(|p| engine.pair_admissible(p));
        report.note("output is not monotone: only pairs agreeing on its orientation are played");
    }
    if pairs.is_empty() {
        report.note("no game pairs: constant function, vacuous pass");
    }
    let partial: Vec<VerificationReport> = pairs
        .par_iter()
        .map(|p| {
            let mut r = VerificationReport::new("");
            r.cases = 1;
            match engine.run(p) {
                Ok(t) => r.observe_cost(t.total_bits as u64),
                Err(e) => {
                    let mut f = Failure::new(format!("x={} y={}", p.x, p.y), e.to_string())
                        .pair(p.x, p.y)
                        .replay(format!(
                            "orientcirc kw-sim {{circuit}} --mode {mode} --x {} --y {}",
                            p.x, p.y
                        ));
                    if let KwError::Invariant { gate, .. } = &e {
                        f = f.gate(gate.clone());
                    }
                    r.fail(f);
                }
            }
            r
        })
        .collect();
    for r in partial {
        report.merge(r);
    }
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    report
}
