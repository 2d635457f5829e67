//! Verification suites behind `orientcirc verify`.
//!
//! Each suite walks a deterministic case stream (exhaustive enumerations or
//! the seeded corpora) in fixed-size chunks. Chunks run in parallel, and
//! partial reports are merged in case order, so output does not depend on
//! the thread count. With a time budget the stream stops at a chunk
//! boundary and the report is marked truncated.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{serialize_circuit, Circuit};
use crate::corpus::{
    clique_entry, general_entry, monotone_root_entry, negation_entry, CorpusEntry, CorpusError,
    DEFAULT_SEED,
};
use crate::funcs::{clique_circuit, default_clique_size, is_monotone, k_subsets, sensitive_mask, GraphEncoding};
use crate::kw::{
    build_protocol_tree, pairs_from, protocol_to_circuit, GamePair, KwEngine, KwError, Mode, PairSource,
    Polarity, Speaker,
};
use crate::orientation::{
    minimal_orientation, monotone_extension, negation_sensitivity_from_profile, orientation_profile,
    OrientationVector,
};
use crate::report::{Failure, VerificationReport};
use crate::table::TruthTable;
use crate::transforms::{am_cover_family, beta_reduction, check_expansion, check_peel, negations_to_orientation, peel_negation, MAX_NEGATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Orientation,
    Protocol,
    Expansion,
    Peel,
    Betared,
    Amcover,
    Roundtrip,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "orientation",
        "algorithm1",
        "eq1",
        "peel",
        "betared",
        "amcover",
        "roundtrip",
        "all",
    ];

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Orientation,
                Suite::Protocol,
                Suite::Expansion,
                Suite::Peel,
                Suite::Betared,
                Suite::Amcover,
                Suite::Roundtrip,
            ],
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::NAMES[*self as usize])
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [
            Suite::Orientation,
            Suite::Protocol,
            Suite::Expansion,
            Suite::Peel,
            Suite::Betared,
            Suite::Amcover,
            Suite::Roundtrip,
            Suite::All,
        ];
        all.into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| format!("unknown suite `{s}`; expected one of {}", Self::NAMES.join(", ")))
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    pub budget: Option<Duration>,
    /// Entries of the monotone-root corpus.
    pub corpus: usize,
    /// Entries of the negation corpus (expansion suite).
    pub negation_cases: usize,
    /// Entries of the general corpus (round-trip suite).
    pub general_cases: usize,
    /// Entries of the 4-vertex CLIQUE corpus (vertex protocol).
    pub clique_cases: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            budget: None,
            corpus: 500,
            negation_cases: 240,
            general_cases: 200,
            clique_cases: 40,
        }
    }
}

/// Shared stopping time for all suites of one run.
#[derive(Debug, Clone, Copy)]
struct Deadline(Option<Instant>);

impl Deadline {
    fn passed(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

const CHUNK: usize = 16;

/// Runs `case` on `0..count` in ordered chunks and merges into `report`.
fn run_cases(
    report: &mut VerificationReport,
    count: usize,
    deadline: Deadline,
    case: impl Fn(usize) -> VerificationReport + Sync,
) {
    let mut next = 0;
    while next < count {
        if deadline.passed() {
            report.truncated = true;
            report.note(format!("budget reached after {next} of {count} cases"));
            break;
        }
        let end = (next + CHUNK).min(count);
        let parts: Vec<VerificationReport> = (next..end).into_par_iter().map(&case).collect();
        for p in parts {
            report.merge(p);
        }
        next = end;
    }
}

fn case_report() -> VerificationReport {
    let mut r = VerificationReport::new("");
    r.cases = 1;
    r
}

fn corpus_failure(r: &mut VerificationReport, what: &str, e: CorpusError) {
    r.fail(Failure::new(what, format!("corpus generation: {e}")));
}

fn witness(e: &CorpusEntry, clause: impl Into<String>) -> Failure {
    Failure::new(e.id.clone(), clause).circuit(serialize_circuit(&e.circuit))
}

/// The definition itself: `β` orients `f` iff `f` is monotone along the
/// order `x ⪯ y ⇔ (x, x⊕β) ≤ (y, y⊕β)`, checked over every pair.
pub fn orientation_by_pairs(f: &TruthTable, beta: &OrientationVector) -> bool {
    let b = beta.bits() as usize;
    let rows = f.rows();
    (0..rows).all(|x| {
        !f.get(x)
            || (0..rows).all(|y| {
                let below = x & !y == 0 && (x ^ b) & !(y ^ b) == 0;
                !below || f.get(y)
            })
    })
}

fn orientation_suite(deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("orientation");
    // Cases are (n, function) for n = 1..=4.
    let offsets: Vec<(u32, usize)> = (1..=4u32).map(|n| (n, 1usize << (1 << n))).collect();
    let total: usize = offsets.iter().map(|o| o.1).sum();
    let locate = |mut i: usize| {
        for &(n, cnt) in &offsets {
            if i < cnt {
                return (n, i);
            }
            i -= cnt;
        }
        unreachable!()
    };
    run_cases(&mut report, total, deadline, |i| {
        let (n, code) = locate(i);
        let mut r = case_report();
        let f = TruthTable::from_fn(n, |row| code >> row & 1 == 1).expect("small");
        let min = minimal_orientation(&f);
        for b in 0..1u64 << n {
            let beta = OrientationVector::new(n, b);
            let by_def = orientation_by_pairs(&f, &beta);
            if by_def != beta.covers(&min) {
                r.fail(
                    Failure::new(format!("n={n} f={}", f.to_bit_string()), "orientation_characterization")
                        .replay(format!("orientcirc analyze --table {} --beta {beta}", f)),
                );
            }
        }
        match monotone_extension(&f, &min) {
            Ok(h) => {
                let diag = (0..f.rows()).all(|x| h.get((x << n) | (x ^ min.bits() as usize)) == f.get(x));
                if !is_monotone(&h) || !diag {
                    r.fail(Failure::new(format!("n={n} f={}", f.to_bit_string()), "monotone_extension"));
                }
            }
            Err(e) => r.fail(Failure::new(format!("n={n} f={}", f.to_bit_string()), e.to_string())),
        }
        r
    });
    report
}

fn pair_failure(e: &CorpusEntry, mode: Mode, p: &GamePair, clause: impl Into<String>) -> Failure {
    witness(e, clause).pair(p.x, p.y).replay(format!(
        "orientcirc kw-sim {}.circ --mode {mode} --x {} --y {}",
        e.id, p.x, p.y
    ))
}

/// The modified protocol over the monotone-root corpus, the w=0 reduction, NOT-gate
/// sensitivity and the vertex protocol on CLIQUE instances.
fn protocol_suite(cfg: &VerifyConfig, deadline: Deadline) -> Vec<VerificationReport> {
    let mut alg = VerificationReport::new("algorithm1");
    let mut w0 = VerificationReport::new("w0-reduction");
    let mut sens = VerificationReport::new("negation-sensitivity");
    let mut vert = VerificationReport::new("vertex");
    let mut parts: Vec<(VerificationReport, VerificationReport, VerificationReport)> = Vec::new();
    let mut next = 0;
    while next < cfg.corpus {
        if deadline.passed() {
            for r in [&mut alg, &mut w0, &mut sens] {
                r.truncated = true;
                r.note(format!("budget reached after {next} of {} cases", cfg.corpus));
            }
            break;
        }
        let end = (next + CHUNK).min(cfg.corpus);
        parts.extend(
            (next..end)
                .into_par_iter()
                .map(|i| protocol_case(cfg.seed, i))
                .collect::<Vec<_>>(),
        );
        next = end;
    }
    for (a, w, s) in parts {
        alg.merge(a);
        w0.merge(w);
        sens.merge(s);
    }
    run_cases(&mut vert, cfg.clique_cases, deadline, |i| vertex_case(cfg.seed, i));
    vec![alg, w0, sens, vert]
}

fn protocol_case(seed: u64, i: usize) -> (VerificationReport, VerificationReport, VerificationReport) {
    let mut a = case_report();
    let mut w = VerificationReport::new("");
    let mut s = case_report();
    let e = match monotone_root_entry(seed, i) {
        Ok(e) => e,
        Err(err) => {
            corpus_failure(&mut a, &format!("mono-{i:04}"), err);
            return (a, w, s);
        }
    };
    let c = &e.circuit;
    let prof = match orientation_profile(c) {
        Ok(p) => p,
        Err(err) => {
            a.fail(witness(&e, err.to_string()));
            return (a, w, s);
        }
    };
    if let Err(err) = negation_sensitivity_from_profile(c, &prof) {
        s.fail(witness(&e, err.to_string()));
    } else {
        for n in c.negations() {
            let crate::circuit::GateKind::Not(inp) = c.kind(n) else { unreachable!() };
            let k = sensitive_mask(prof.table(inp)).count_ones();
            if k > 2 * prof.max_weight {
                s.fail(witness(&e, "sensitive_count").gate(c.name(n)));
            }
        }
    }
    let engine = match KwEngine::with_profile(c, Mode::Modified, &prof) {
        Ok(x) => x,
        Err(err) => {
            a.fail(witness(&e, err.to_string()));
            return (a, w, s);
        }
    };
    let pairs = GamePair::all(engine.function());
    let bound = engine.bound();
    a.bound = Some(bound);
    let plus = (prof.max_weight == 0).then(|| KwEngine::new(c, Mode::Plus));
    if plus.is_some() {
        w.cases = 1;
    }
    let results: Vec<(VerificationReport, VerificationReport)> = pairs
        .par_iter()
        .map(|p| {
            let mut ra = VerificationReport::new("");
            let mut rw = VerificationReport::new("");
            match engine.run(p) {
                Ok(t) => {
                    ra.observe_cost(t.total_bits as u64);
                    if t.answer.polarity != Polarity::Positive || !t.answer.separates(&p.x, &p.y) {
                        ra.fail(pair_failure(&e, Mode::Modified, p, "answer_valid"));
                    }
                    if t.total_bits as u64 > bound {
                        ra.fail(pair_failure(&e, Mode::Modified, p, "total_bits"));
                    }
                    match &plus {
                        Some(Ok(pe)) => match pe.run(p) {
                            Ok(tp) if tp == t => {}
                            Ok(_) => rw.fail(pair_failure(&e, Mode::Modified, p, "w0_transcript_mismatch")),
                            Err(err) => rw.fail(pair_failure(&e, Mode::Plus, p, err.to_string())),
                        },
                        Some(Err(err)) => rw.fail(witness(&e, err.to_string())),
                        None => {}
                    }
                }
                Err(err) => {
                    let mut f = pair_failure(&e, Mode::Modified, p, err.to_string());
                    if let KwError::Invariant { gate, .. } = &err {
                        f = f.gate(gate.clone());
                    }
                    ra.fail(f);
                }
            }
            (ra, rw)
        })
        .collect();
    for (ra, rw) in results {
        a.merge(ra);
        w.merge(rw);
    }
    (a, w, s)
}

fn vertex_case(seed: u64, i: usize) -> VerificationReport {
    let mut r = case_report();
    let (e, k) = match clique_entry(seed, i) {
        Ok(x) => x,
        Err(err) => {
            corpus_failure(&mut r, &format!("clique4-{i:04}"), err);
            return r;
        }
    };
    let engine = match KwEngine::new(&e.circuit, Mode::Vertex) {
        Ok(x) => x,
        Err(err) => {
            r.fail(witness(&e, err.to_string()));
            return r;
        }
    };
    let pairs = match pairs_from(engine.function(), &PairSource::CliqueTerms { k }) {
        Ok(p) => p,
        Err(err) => {
            r.fail(witness(&e, err.to_string()));
            return r;
        }
    };
    let class_bits = crate::kw::ceil_log2(4) as usize;
    let enc = GraphEncoding::new(4).expect("4 vertices");
    let circuit = engine.circuit();
    for p in &pairs {
        match engine.run(p) {
            Ok(t) => {
                r.observe_cost(t.total_bits as u64);
                if !t.answer.separates(&p.x, &p.y) || t.answer.polarity != Polarity::Positive {
                    r.fail(pair_failure(&e, Mode::Vertex, p, "answer_valid"));
                }
                // Data messages must be exactly one flag per spanned vertex
                // from Alice, `⌈log2 n⌉` bits per spanned vertex from Bob.
                for round in &t.rounds {
                    let g = circuit.find(&round.gate).expect("round names a gate");
                    let mask = engine
                        .support(g)
                        .iter()
                        .fold(0u64, |m, &v| m | 1u64 << crate::table::var_bit(enc.nvars(), v));
                    let span = enc.span(mask).count_ones() as usize;
                    let data = match round.speaker {
                        Speaker::Alice => span,
                        Speaker::Bob => span * class_bits,
                    };
                    if round.bits != data && round.bits != 1 {
                        r.fail(pair_failure(&e, Mode::Vertex, p, "vertex_accounting").gate(round.gate.clone()));
                    }
                }
                let sum: usize = t.rounds.iter().map(|x| x.bits).sum();
                if sum != t.total_bits || t.total_bits as u64 > engine.bound() {
                    r.fail(pair_failure(&e, Mode::Vertex, p, "total_bits"));
                }
            }
            Err(err) => r.fail(pair_failure(&e, Mode::Vertex, p, err.to_string())),
        }
    }
    r
}

fn expansion_suite(cfg: &VerifyConfig, deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("eq1");
    run_cases(&mut report, cfg.negation_cases, deadline, |i| {
        let mut r = case_report();
        let e = match negation_entry(cfg.seed, i) {
            Ok(e) => e,
            Err(err) => {
                corpus_failure(&mut r, &format!("neg-{i:04}"), err);
                return r;
            }
        };
        match negations_to_orientation(&e.circuit).and_then(|out| check_expansion(&e.circuit, &out)) {
            Ok(chk) => {
                r.observe_cost(chk.dense_and_or as u64);
                if !chk.ok() {
                    r.fail(witness(
                        &e,
                        format!(
                            "expansion bounds: equivalent={} size={}/{} dense={}/{} total_dense={}",
                            chk.equivalent,
                            chk.size_out,
                            chk.size_bound,
                            chk.dense_and_or,
                            chk.dense_bound,
                            chk.dense_total
                        ),
                    ));
                }
            }
            Err(err) => r.fail(witness(&e, err.to_string())),
        }
        r
    });
    report
}

fn peel_suite(cfg: &VerifyConfig, deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("peel");
    run_cases(&mut report, cfg.corpus, deadline, |i| {
        let mut r = VerificationReport::new("");
        let e = match monotone_root_entry(cfg.seed, i) {
            Ok(e) => e,
            Err(err) => {
                corpus_failure(&mut r, &format!("mono-{i:04}"), err);
                return r;
            }
        };
        if e.negations == 0 {
            return r;
        }
        r.cases = 1;
        match peel_negation(&e.circuit).and_then(|p| check_peel(&e.circuit, &p)) {
            Ok(chk) if chk.ok() => {}
            Ok(chk) => r.fail(witness(&e, format!("peel: {chk:?}"))),
            Err(err) => r.fail(witness(&e, err.to_string())),
        }
        r
    });
    report
}

fn betared_suite(_cfg: &VerifyConfig, deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("betared");
    let cases: Vec<(u32, u32)> = [4u32, 5]
        .into_iter()
        .flat_map(|n| k_subsets(n, 2).into_iter().map(move |u| (n, u)))
        .collect();
    run_cases(&mut report, cases.len(), deadline, |i| {
        let (n, u) = cases[i];
        let mut r = case_report();
        let enc = GraphEncoding::new(n).expect("small graph");
        let (k, _) = default_clique_size(n);
        let name = format!("n={n} k={k} U={}", crate::funcs::format_vertex_set(u));
        let res = clique_circuit(&enc, k)
            .map_err(Into::into)
            .and_then(|c| beta_reduction(&c, &enc, u, k));
        match res {
            Ok(b) => {
                r.observe_cost(b.depth as u64);
                if b.plus_one_needed {
                    r.note(format!("{name}: Bob's early answer used the extra level"));
                }
                if !b.ok() {
                    r.fail(Failure::new(name, format!(
                        "beta reduction: equivalent={} oriented_on_u={:?} depth={} normalized={}",
                        b.equivalent, b.oriented_on_u, b.depth, b.normalized_depth
                    )));
                }
            }
            Err(err) => r.fail(Failure::new(name, err.to_string())),
        }
        r
    });
    report
}

fn amcover_suite(cfg: &VerifyConfig, deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("amcover");
    run_cases(&mut report, cfg.corpus, deadline, |i| {
        let mut r = VerificationReport::new("");
        let e = match monotone_root_entry(cfg.seed, i) {
            Ok(e) => e,
            Err(err) => {
                corpus_failure(&mut r, &format!("mono-{i:04}"), err);
                return r;
            }
        };
        if e.negations > 3.min(MAX_NEGATIONS) {
            return r;
        }
        r.cases = 1;
        match am_cover_family(&e.circuit) {
            Ok(fam) => {
                r.observe_cost(fam.count_before_dedup as u64);
                if !fam.ok() {
                    r.fail(witness(
                        &e,
                        format!(
                            "cover: members={} bound={} monotone={} uncovered={:?}",
                            fam.count_before_dedup, fam.size_bound, fam.all_monotone, fam.uncovered
                        ),
                    ));
                }
            }
            Err(err) => r.fail(witness(&e, err.to_string())),
        }
        r
    });
    report
}

/// Builds the protocol tree in `mode`, converts it back and compares.
pub fn roundtrip_check(c: &Circuit, mode: Mode) -> Result<Option<String>, KwError> {
    let tree = build_protocol_tree(c, mode, None)?;
    let back = protocol_to_circuit(&tree, c.nvars())?;
    if back.truth_table()? != c.truth_table()? {
        return Ok(Some("roundtrip_function".into()));
    }
    if back.literal_depth() as usize > tree.cost() {
        return Ok(Some(format!(
            "roundtrip_depth: {} > cost {}",
            back.literal_depth(),
            tree.cost()
        )));
    }
    Ok(None)
}

fn roundtrip_suite(cfg: &VerifyConfig, deadline: Deadline) -> VerificationReport {
    let mut report = VerificationReport::new("roundtrip");
    let total = cfg.corpus + cfg.general_cases;
    run_cases(&mut report, total, deadline, |i| {
        let mut r = case_report();
        let (e, modes) = if i < cfg.corpus {
            match monotone_root_entry(cfg.seed, i) {
                Ok(e) => {
                    let mut m = vec![Mode::Modified, Mode::General];
                    if e.negations == 0 {
                        m.push(Mode::Plus);
                    }
                    (e, m)
                }
                Err(err) => {
                    corpus_failure(&mut r, &format!("mono-{i:04}"), err);
                    return r;
                }
            }
        } else {
            match general_entry(cfg.seed, i - cfg.corpus) {
                Ok(e) => (e, vec![Mode::General]),
                Err(err) => {
                    corpus_failure(&mut r, &format!("gen-{:04}", i - cfg.corpus), err);
                    return r;
                }
            }
        };
        for mode in modes {
            match roundtrip_check(&e.circuit, mode) {
                Ok(None) => {}
                Ok(Some(clause)) => r.fail(witness(&e, format!("{mode}: {clause}"))),
                Err(err) => r.fail(witness(&e, format!("{mode}: {err}"))),
            }
        }
        r
    });
    report
}

/// Runs `suite` (or every suite for `all`) and returns one report per
/// checked property, in a fixed order.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Vec<VerificationReport> {
    let deadline = Deadline(cfg.budget.map(|b| Instant::now() + b));
    let mut out = Vec::new();
    for s in suite.parts() {
        let start = Instant::now();
        let mut reports = match s {
            Suite::Orientation => vec![orientation_suite(deadline)],
            Suite::Protocol => protocol_suite(cfg, deadline),
            Suite::Expansion => vec![expansion_suite(cfg, deadline)],
            Suite::Peel => vec![peel_suite(cfg, deadline)],
            Suite::Betared => vec![betared_suite(cfg, deadline)],
            Suite::Amcover => vec![amcover_suite(cfg, deadline)],
            Suite::Roundtrip => vec![roundtrip_suite(cfg, deadline)],
            Suite::All => unreachable!(),
        };
        let ms = start.elapsed().as_millis() as u64;
        for r in &mut reports {
            r.wall_time_ms = ms;
        }
        out.extend(reports);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            corpus: 20,
            negation_cases: 12,
            general_cases: 10,
            clique_cases: 4,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("nosuchsuite".parse::<Suite>().is_err());
    }

    #[test]
    fn pairwise_definition_small() {
        let f = TruthTable::from_bit_string("10").unwrap();
        assert!(!orientation_by_pairs(&f, &OrientationVector::new(1, 0)));
        assert!(orientation_by_pairs(&f, &OrientationVector::new(1, 1)));
    }

    #[test]
    fn small_suites_pass() {
        let cfg = small();
        for s in [Suite::Protocol, Suite::Expansion, Suite::Peel, Suite::Amcover, Suite::Roundtrip] {
            for r in run_suite(s, &cfg) {
                assert!(r.pass, "{}: {:?}", r.suite, r.failures);
                assert!(r.cases > 0, "{}", r.suite);
            }
        }
    }

    #[test]
    fn zero_budget_truncates() {
        let cfg = VerifyConfig {
            budget: Some(Duration::ZERO),
            ..small()
        };
        let r = &run_suite(Suite::Expansion, &cfg)[0];
        assert!(r.truncated && r.pass);
        assert_eq!(r.cases, 0);
    }
}
