use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use orientcirc::circuit::{parse_circuit, serialize_circuit, Circuit};
use orientcirc::corpus::random_circuit;
use orientcirc::funcs::{
    clique_circuit, clique_fn, clique_maxterms, clique_minterms, default_clique_size, is_monotone,
    parse_vertex_set, pmatch_fn, sensitive_indices, GraphEncoding,
};
use orientcirc::kw::{
    build_protocol_tree, encoding_for, exhaustive_kw_verify, GamePair, KwEngine, Mode, PairSource,
};
use orientcirc::orientation::{
    check_uniform_orientation, is_orientation, minimal_orientation, negation_sensitivity_from_profile,
    orientation_profile, OrientationVector,
};
use orientcirc::report::VerificationReport;
use orientcirc::table::{Assignment, TruthTable};
use orientcirc::transforms::{
    am_cover_family, beta_reduction, check_expansion, check_peel, fix_vertex_set, negations_to_orientation,
    peel_negation, uniform_restriction,
};
use orientcirc::verify::{run_suite, Suite, VerifyConfig};

#[derive(Parser)]
#[command(name = "orientcirc", version, about = "Orientation analysis and KW protocol simulation for small circuits")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "ORIENTCIRC_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate truth tables, term lists or random netlists.
    Gen {
        #[command(subcommand)]
        what: Gen,
    },
    /// Circuit statistics and function properties.
    Analyze(AnalyzeArgs),
    /// Per-gate minimal orientations.
    Orient(OrientArgs),
    /// Simulate a communication protocol on a circuit.
    KwSim(KwArgs),
    /// Constructive circuit transforms.
    Transform {
        #[command(subcommand)]
        what: Transform,
    },
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum Gen {
    /// CLIQUE(n, k) truth table, or with --circuit its OR-of-ANDs netlist.
    Clique {
        #[arg(long)]
        n: u32,
        /// Clique size (default: floor(n/2)).
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        circuit: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perfect-matching truth table.
    Pmatch {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bare k-cliques on n vertices.
    Minterms {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete (k-1)-partite graphs on n vertices.
    Maxterms {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: Option<u32>,
        /// Only partitions with nonempty classes whose sizes differ by at most one.
        #[arg(long)]
        balanced: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random netlist with an exact number of NOT gates.
    RandomCircuit {
        #[arg(long)]
        nvars: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        neg: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Netlist file.
    circuit: Option<PathBuf>,
    /// Analyze a truth table (`tt:N:HEX` or a bit string) instead.
    #[arg(long, conflicts_with = "circuit")]
    table: Option<String>,
    /// Also test whether this vector is an orientation.
    #[arg(long)]
    beta: Option<String>,
}

#[derive(Args)]
struct OrientArgs {
    circuit: PathBuf,
    /// Check that one vector orients every gate; exit 1 if not.
    #[arg(long)]
    uniform: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    All,
    Clique,
}

#[derive(Args)]
struct KwArgs {
    circuit: PathBuf,
    #[arg(long, default_value = "plus")]
    mode: String,
    #[arg(long, requires = "y")]
    x: Option<String>,
    #[arg(long, requires = "x")]
    y: Option<String>,
    /// Play every pair and report against the mode's bound.
    #[arg(long, conflicts_with_all = ["x", "tree"])]
    exhaustive: bool,
    /// Print the protocol tree over all pairs.
    #[arg(long, conflicts_with = "x")]
    tree: bool,
    /// Pair source for --exhaustive (default: clique terms in vertex mode).
    #[arg(long, value_enum)]
    pairs: Option<PairsArg>,
    /// Clique size for clique pairs (default: inferred from the function).
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct GraphArgs {
    circuit: PathBuf,
    /// Clique size the circuit computes (default: floor(n/2)).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Transform {
    /// Replace NOT gates by guessed constants, one copy per guess.
    Neg2orient {
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a monotone function on its first NOT input.
    Peel {
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write selector.circ, f0.circ and f1.circ here.
        #[arg(long)]
        branches: Option<PathBuf>,
    },
    /// Set every edge touching a vertex set to 0.
    Fixset {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        vertices: String,
    },
    /// Plant a clique outside U and join it to U.
    Unirestrict {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        u: String,
    },
    /// Rebuild a CLIQUE circuit with no gate oriented inside U.
    Betared {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        u: String,
    },
    /// Monotone functions whose boundary graphs cover the function's.
    Amcover {
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_parser = parse_suite)]
    suite: Suite,
    /// Stop at a case boundary once this much time has passed (e.g. 60s, 2m).
    #[arg(long, value_parser = parse_budget)]
    budget: Option<Duration>,
    /// Entries of the monotone-root corpus.
    #[arg(long, default_value_t = 500)]
    corpus: usize,
    /// Report zero wall time so outputs compare byte for byte.
    #[arg(long)]
    no_time: bool,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_budget(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let (num, unit) = match s.find(|c: char| !c.is_ascii_digit() && c != '.') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, "s"),
    };
    let v: f64 = num.parse().map_err(|_| format!("bad duration `{s}`"))?;
    let secs = match unit {
        "ms" => v / 1000.0,
        "s" => v,
        "m" => v * 60.0,
        "h" => v * 3600.0,
        _ => return Err(format!("bad duration unit in `{s}`; use ms, s, m or h")),
    };
    Ok(Duration::from_secs_f64(secs))
}

/// Failure modes of a command, mapped to exit codes.
enum Fail {
    /// Bad input or arguments: exit 2.
    Usage(String),
    /// A check ran and did not hold: exit 1.
    Check,
}

type Res = Result<(), Fail>;

fn usage(e: impl ToString) -> Fail {
    Fail::Usage(e.to_string())
}

fn read_circuit(p: &Path) -> Result<Circuit, Fail> {
    let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    parse_circuit(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Res {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn clique_k(n: u32, k: Option<u32>) -> u32 {
    k.unwrap_or_else(|| default_clique_size(n).0)
}

fn format_graph(enc: &GraphEncoding, a: &Assignment) -> String {
    let sep = if enc.n() > 9 { "-" } else { "" };
    let edges: Vec<String> = enc
        .edges()
        .filter(|&(_, _, i)| a.get(i))
        .map(|(u, v, _)| format!("{u}{sep}{v}"))
        .collect();
    format!("{{{}}}", edges.join(","))
}

fn cmd_gen(cli: &Cli, what: &Gen) -> Res {
    match what {
        Gen::Clique { n, k, circuit, out } => {
            let enc = GraphEncoding::new(*n).map_err(usage)?;
            let k = clique_k(*n, *k);
            if *circuit {
                let c = clique_circuit(&enc, k).map_err(usage)?;
                return emit(out.as_deref(), &serialize_circuit(&c));
            }
            let f = clique_fn(&enc, k).map_err(usage)?;
            emit(out.as_deref(), &format!("{}\n", f))
        }
        Gen::Pmatch { n, out } => {
            let enc = GraphEncoding::new(*n).map_err(usage)?;
            let f = pmatch_fn(&enc).map_err(usage)?;
            emit(out.as_deref(), &format!("{}\n", f))
        }
        Gen::Minterms { n, k, out } | Gen::Maxterms { n, k, out, .. } => {
            let enc = GraphEncoding::new(*n).map_err(usage)?;
            let k = clique_k(*n, *k);
            let terms = match what {
                Gen::Minterms { .. } => clique_minterms(&enc, k),
                Gen::Maxterms { balanced, .. } => clique_maxterms(&enc, k, *balanced),
                _ => unreachable!(),
            }
            .map_err(usage)?;
            let text = if cli.json {
                let list: Vec<Json> = terms
                    .iter()
                    .map(|a| json!({"bits": a.to_string(), "edges": format_graph(&enc, a)}))
                    .collect();
                pretty(&list)
            } else {
                terms
                    .iter()
                    .map(|a| format!("{a} {}\n", format_graph(&enc, a)))
                    .collect()
            };
            emit(out.as_deref(), &text)
        }
        Gen::RandomCircuit { nvars, depth, neg, out } => {
            let c = random_circuit(*nvars, *depth, *neg, cli.seed).map_err(usage)?;
            emit(out.as_deref(), &serialize_circuit(&c))
        }
    }
}

fn parse_table(s: &str) -> Result<TruthTable, Fail> {
    if s.starts_with("tt:") {
        s.parse().map_err(usage)
    } else {
        TruthTable::from_bit_string(s).map_err(usage)
    }
}

fn parse_beta(s: &str) -> Result<OrientationVector, Fail> {
    s.parse().map_err(usage)
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs) -> Res {
    let (circuit, f) = match (&a.circuit, &a.table) {
        (Some(p), None) => {
            let c = read_circuit(p)?;
            let f = c.truth_table().map_err(usage)?;
            (Some(c), f)
        }
        (None, Some(t)) => (None, parse_table(t)?),
        _ => return Err(usage("give a netlist file or --table")),
    };
    let min = minimal_orientation(&f);
    let sens: Vec<u32> = sensitive_indices(&f).into_iter().collect();
    let beta_check = match &a.beta {
        Some(b) => {
            let beta = parse_beta(b)?;
            Some((beta, is_orientation(&f, &beta).map_err(usage)?))
        }
        None => None,
    };
    if cli.json {
        let mut v = json!({
            "nvars": f.nvars(),
            "table": f.to_string(),
            "monotone": is_monotone(&f),
            "minimal_orientation": min,
            "weight": min.weight(),
            "sensitive": sens,
        });
        if let Some(c) = &circuit {
            v["stats"] = json!(c.stats());
            v["demorgan"] = json!(c.is_demorgan());
        }
        if let Some((b, ok)) = &beta_check {
            v["beta"] = json!(b);
            v["is_orientation"] = json!(ok);
        }
        print!("{}", pretty(&v));
    } else {
        if let Some(c) = &circuit {
            let s = c.stats();
            println!("depth       {}", s.depth);
            println!("size        {}", s.size);
            println!("negations   {}", s.negations);
            println!("demorgan    {}", c.is_demorgan());
        }
        println!("nvars       {}", f.nvars());
        println!("table       {}", f);
        println!("monotone    {}", is_monotone(&f));
        println!("orientation {min} (weight {})", min.weight());
        println!(
            "sensitive   {}",
            sens.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        );
        if let Some((b, ok)) = &beta_check {
            println!("{b} is {}an orientation", if *ok { "" } else { "not " });
        }
    }
    Ok(())
}

fn cmd_orient(cli: &Cli, a: &OrientArgs) -> Res {
    let c = read_circuit(&a.circuit)?;
    let prof = orientation_profile(&c).map_err(usage)?;
    let sens = negation_sensitivity_from_profile(&c, &prof).map_err(usage)?;
    let uniform = match &a.uniform {
        Some(b) => {
            let beta = parse_beta(b)?;
            Some((beta, check_uniform_orientation(&c, &beta).map_err(usage)?))
        }
        None => None,
    };
    if cli.json {
        let mut v = json!({"profile": prof, "negations": sens});
        if let Some((b, ok)) = &uniform {
            v["uniform"] = json!({"beta": b, "ok": ok});
        }
        print!("{}", pretty(&v));
    } else {
        for g in &prof.gates {
            println!("{} {} {}", g.gate, g.weight, g.beta);
        }
        println!("max_weight {}", prof.max_weight);
        for s in &sens {
            println!(
                "not {} sensitive {{{}}} within {{{}}} ({} <= {})",
                s.gate,
                join(&s.sensitive),
                join(&s.support),
                s.sensitive.len(),
                s.bound
            );
        }
        if let Some((b, ok)) = &uniform {
            println!("uniform {b} {}", if *ok { "ok" } else { "fails" });
        }
    }
    match uniform {
        Some((_, false)) => Err(Fail::Check),
        _ => Ok(()),
    }
}

fn join(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Smallest `k` with `f = CLIQUE(n, k)`, for the encoding matching `f`.
fn infer_clique_k(f: &TruthTable) -> Result<u32, Fail> {
    let enc = encoding_for(f.nvars()).map_err(usage)?;
    (1..=enc.n())
        .find(|&k| clique_fn(&enc, k).is_ok_and(|g| &g == f))
        .ok_or_else(|| usage("function is not CLIQUE(n, k) for any k; pass --k"))
}

fn print_report(cli: &Cli, r: &VerificationReport) {
    if cli.json {
        print!("{}", pretty(r));
    } else {
        print_report_row(r);
        for f in &r.failures {
            println!("  fail {} [{}]", f.case, f.clause);
            if let Some(g) = &f.gate {
                println!("    gate {g}");
            }
            if let Some((x, y)) = &f.pair {
                println!("    pair x={x} y={y}");
            }
            if let Some(rp) = &f.replay {
                println!("    replay: {rp}");
            }
        }
        for n in &r.notes {
            println!("  note {n}");
        }
    }
}

fn print_report_row(r: &VerificationReport) {
    let opt = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
    println!(
        "{:<22} {:<4} cases={:<7} failures={:<4} max_cost={:<5} bound={:<5} truncated={} time_ms={}",
        r.suite,
        if r.pass { "PASS" } else { "FAIL" },
        r.cases,
        r.failure_count,
        opt(r.max_cost),
        opt(r.bound),
        r.truncated,
        r.wall_time_ms
    );
}

fn cmd_kw(cli: &Cli, a: &KwArgs) -> Res {
    let c = read_circuit(&a.circuit)?;
    let mode: Mode = a.mode.parse().map_err(usage)?;
    if let (Some(x), Some(y)) = (&a.x, &a.y) {
        let x: Assignment = x.parse().map_err(usage)?;
        let y: Assignment = y.parse().map_err(usage)?;
        let engine = KwEngine::new(&c, mode).map_err(usage)?;
        let pair = GamePair::new(engine.function(), x, y).map_err(usage)?;
        return match engine.run(&pair) {
            Ok(t) => {
                print!("{}", pretty(&t));
                Ok(())
            }
            Err(e) => {
                eprintln!("protocol failed: {e}");
                Err(Fail::Check)
            }
        };
    }
    if a.tree {
        let t = build_protocol_tree(&c, mode, None).map_err(usage)?;
        print!("{}", pretty(&t));
        return Ok(());
    }
    if !a.exhaustive {
        return Err(usage("give --x and --y, --exhaustive or --tree"));
    }
    let pairs = a.pairs.unwrap_or(if mode == Mode::Vertex { PairsArg::Clique } else { PairsArg::All });
    let source = match pairs {
        PairsArg::All => PairSource::All,
        PairsArg::Clique => {
            let k = match a.k {
                Some(k) => k,
                None => infer_clique_k(&c.truth_table().map_err(usage)?)?,
            };
            PairSource::CliqueTerms { k }
        }
    };
    let mut r = exhaustive_kw_verify(&c, mode, &source);
    // Point replays at the file that was checked.
    for f in &mut r.failures {
        if let Some(rp) = &mut f.replay {
            *rp = rp.replace("{circuit}", &a.circuit.display().to_string());
        }
    }
    print_report(cli, &r);
    if r.pass {
        Ok(())
    } else {
        Err(Fail::Check)
    }
}

/// Writes the transformed netlist and prints the check summary. With
/// `--out` the summary goes to stdout; otherwise the netlist does, and the
/// summary goes to stderr.
fn finish_transform(cli: &Cli, out: Option<&Path>, c: &Circuit, summary: Json, ok: bool) -> Res {
    let text = if cli.json {
        pretty(&summary)
    } else {
        summary_text(&summary)
    };
    match out {
        Some(p) => {
            emit(Some(p), &serialize_circuit(c))?;
            print!("{text}");
        }
        None => {
            print!("{}", serialize_circuit(c));
            eprint!("{text}");
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Fail::Check)
    }
}

fn summary_text(v: &Json) -> String {
    match v.as_object() {
        Some(m) => m.iter().map(|(k, v)| format!("{k} {v}\n")).collect(),
        None => format!("{v}\n"),
    }
}

fn graph_setup(g: &GraphArgs, set: &str) -> Result<(Circuit, GraphEncoding, u32, u32), Fail> {
    let c = read_circuit(&g.circuit)?;
    let enc = encoding_for(c.nvars()).map_err(usage)?;
    let vs = parse_vertex_set(set, enc.n()).map_err(usage)?;
    let k = clique_k(enc.n(), g.k);
    Ok((c, enc, vs, k))
}

fn cmd_transform(cli: &Cli, what: &Transform) -> Res {
    match what {
        Transform::Neg2orient { circuit, out } => {
            let c = read_circuit(circuit)?;
            let o = negations_to_orientation(&c).map_err(usage)?;
            let chk = check_expansion(&c, &o).map_err(usage)?;
            let ok = chk.ok();
            finish_transform(cli, out.as_deref(), &o, json!(chk), ok)
        }
        Transform::Peel { circuit, out, branches } => {
            let c = read_circuit(circuit)?;
            let p = peel_negation(&c).map_err(usage)?;
            let chk = check_peel(&c, &p).map_err(usage)?;
            if let Some(dir) = branches {
                fs::create_dir_all(dir).map_err(usage)?;
                for (name, x) in [("selector", &p.selector), ("f0", &p.f0), ("f1", &p.f1)] {
                    emit(Some(&dir.join(format!("{name}.circ"))), &serialize_circuit(x))?;
                }
            }
            let ok = chk.ok();
            finish_transform(cli, out.as_deref(), &p.recombined, json!(chk), ok)
        }
        Transform::Fixset { g, vertices } => {
            let (c, enc, s, _) = graph_setup(g, vertices)?;
            let r = fix_vertex_set(&c, &enc, s).map_err(usage)?;
            let summary = json!({
                "fixed_nots": r.fixed_nots,
                "fixed_nots_constant": r.fixed_nots_constant,
            });
            finish_transform(cli, g.out.as_deref(), &r.circuit, summary, r.fixed_nots_constant)
        }
        Transform::Unirestrict { g, u } => {
            let (c, enc, u, k) = graph_setup(g, u)?;
            let r = uniform_restriction(&c, &enc, u, k).map_err(usage)?;
            let out = r.circuit.clone().expect("set by the transform");
            let ok = r.equivalent && (!r.uniform_zero_on_u || r.restriction_monotone);
            finish_transform(cli, g.out.as_deref(), &out, json!(r), ok)
        }
        Transform::Betared { g, u } => {
            let (c, enc, u, k) = graph_setup(g, u)?;
            let r = beta_reduction(&c, &enc, u, k).map_err(usage)?;
            let out = r.circuit.clone().expect("set by the transform");
            finish_transform(cli, g.out.as_deref(), &out, json!(r), r.ok())
        }
        Transform::Amcover { circuit, out } => {
            let c = read_circuit(circuit)?;
            let fam = am_cover_family(&c).map_err(usage)?;
            let text = if cli.json {
                pretty(&fam)
            } else {
                let mut s = String::new();
                for m in &fam.members {
                    s += &format!(
                        "{} {} {} monotone={}\n",
                        m.table,
                        m.negation.as_deref().unwrap_or("output"),
                        if m.guesses.is_empty() { "-" } else { &m.guesses },
                        m.monotone
                    );
                }
                s += &format!(
                    "members {} (before dedup {}, bound {})\ncovered {}\n",
                    fam.members.len(),
                    fam.count_before_dedup,
                    fam.size_bound,
                    fam.uncovered.is_none()
                );
                s
            };
            emit(out.as_deref(), &text)?;
            if fam.ok() {
                Ok(())
            } else {
                Err(Fail::Check)
            }
        }
    }
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Res {
    let cfg = VerifyConfig {
        seed: cli.seed,
        budget: a.budget,
        corpus: a.corpus,
        ..VerifyConfig::default()
    };
    let mut reports = run_suite(a.suite, &cfg);
    if a.no_time {
        for r in &mut reports {
            r.wall_time_ms = 0;
        }
    }
    if cli.json {
        print!("{}", pretty(&reports));
    } else {
        for r in &reports {
            print_report(cli, r);
        }
    }
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Fail::Check)
    }
}

fn main() -> ExitCode {
    // Die quietly when the reader of stdout goes away (`| head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.cmd {
        Cmd::Gen { what } => cmd_gen(&cli, what),
        Cmd::Analyze(a) => cmd_analyze(&cli, a),
        Cmd::Orient(a) => cmd_orient(&cli, a),
        Cmd::KwSim(a) => cmd_kw(&cli, a),
        Cmd::Transform { what } => cmd_transform(&cli, what),
        Cmd::Verify(a) => cmd_verify(&cli, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check) => ExitCode::from(1),
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
