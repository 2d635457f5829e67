//! The `.circ` netlist format.
//!
//! ```text
//! # comment
//! nvars 2
//! g1 = VAR 1
//! g2 = VAR 2
//! g3 = AND g1 g2
//! output g3
//! ```

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use super::{valid_name, Circuit, CircuitError, Gate, GateKind, GateRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undefined gate `{name}`")]
    UndefinedGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {op} takes {expected} input(s), found {found}")]
    Arity {
        line: usize,
        col: usize,
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:{col}: duplicate gate id `{name}`")]
    DuplicateGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: variable {index} outside 1..={nvars}")]
    VarOutOfRange {
        line: usize,
        col: usize,
        index: u32,
        nvars: u32,
    },
    #[error("missing `nvars` header")]
    MissingHeader,
    #[error("missing `output` line")]
    MissingOutput,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in body.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &body[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            col: s + 1,
        });
    }
    out
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut nvars: Option<u32> = None;
    let mut gates: Vec<Gate> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut output: Option<GateRef> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let toks = tokenize(raw);
        let Some(first) = toks.first() else { continue };
        if output.is_some() {
            return Err(syntax(line, first.col, "content after `output` line"));
        }
        let Some(n) = nvars else {
            if first.text != "nvars" {
                return Err(syntax(line, first.col, "expected `nvars N` header"));
            }
            if toks.len() != 2 {
                let col = toks.get(2).map_or(first.col, |t| t.col);
                return Err(syntax(line, col, "expected `nvars N`"));
            }
            let v = toks[1]
                .text
                .parse::<u32>()
                .map_err(|_| syntax(line, toks[1].col, "expected a variable count"))?;
            nvars = Some(v);
            continue;
        };
        if first.text == "output" {
            if toks.len() != 2 {
                let col = toks.get(2).map_or(first.col, |t| t.col);
                return Err(syntax(line, col, "expected `output ID`"));
            }
            let id = &toks[1];
            let idx = *ids.get(id.text).ok_or_else(|| ParseError::UndefinedGate {
                line,
                col: id.col,
                name: id.text.to_string(),
            })?;
            output = Some(GateRef(idx));
            continue;
        }
        if first.text == "nvars" {
            return Err(syntax(line, first.col, "duplicate `nvars` header"));
        }
        if !valid_name(first.text) {
            return Err(syntax(line, first.col, format!("invalid gate id `{}`", first.text)));
        }
        match toks.get(1) {
            Some(t) if t.text == "=" => {}
            Some(t) => return Err(syntax(line, t.col, "expected `=`")),
            None => return Err(syntax(line, first.col + first.text.len(), "expected `=`")),
        }
        let Some(op) = toks.get(2) else {
            return Err(syntax(line, toks[1].col + 1, "expected gate kind"));
        };
        let args = &toks[3..];
        let expected = match op.text {
            "VAR" | "CONST" | "NOT" => 1,
            "AND" | "OR" => 2,
            other => return Err(syntax(line, op.col, format!("unknown gate kind `{other}`"))),
        };
        if args.len() != expected {
            let col = args.get(expected).map_or(op.col, |t| t.col);
            if matches!(op.text, "VAR" | "CONST") {
                return Err(syntax(line, col, format!("{} takes exactly one operand", op.text)));
            }
            return Err(ParseError::Arity {
                line,
                col,
                op: op.text.to_string(),
                expected,
                found: args.len(),
            });
        }
        let lookup = |t: &Token<'_>| {
            ids.get(t.text)
                .map(|&i| GateRef(i))
                .ok_or_else(|| ParseError::UndefinedGate {
                    line,
                    col: t.col,
                    name: t.text.to_string(),
                })
        };
        let kind = match op.text {
            "VAR" => {
                let t = &args[0];
                let i = t
                    .text
                    .parse::<u32>()
                    .map_err(|_| syntax(line, t.col, "expected a variable index"))?;
                if i == 0 || i > n {
                    return Err(ParseError::VarOutOfRange {
                        line,
                        col: t.col,
                        index: i,
                        nvars: n,
                    });
                }
                GateKind::Var(i)
            }
            "CONST" => match args[0].text {
                "0" => GateKind::Const(false),
                "1" => GateKind::Const(true),
                _ => return Err(syntax(line, args[0].col, "CONST takes 0 or 1")),
            },
            "NOT" => GateKind::Not(lookup(&args[0])?),
            "AND" => GateKind::And(lookup(&args[0])?, lookup(&args[1])?),
            "OR" => GateKind::Or(lookup(&args[0])?, lookup(&args[1])?),
            _ => unreachable!(),
        };
        if ids.contains_key(first.text) {
            return Err(ParseError::DuplicateGate {
                line,
                col: first.col,
                name: first.text.to_string(),
            });
        }
        ids.insert(first.text.to_string(), gates.len());
        gates.push(Gate {
            name: first.text.to_string(),
            kind,
        });
    }

    let nvars = nvars.ok_or(ParseError::MissingHeader)?;
    let output = output.ok_or(ParseError::MissingOutput)?;
    Ok(Circuit::new(nvars, gates, output)?)
}

pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "nvars {}", c.nvars()).unwrap();
    for g in c.gates() {
        let n = |r: GateRef| c.name(r);
        match g.kind {
            GateKind::Var(i) => writeln!(out, "{} = VAR {}", g.name, i),
            GateKind::Const(b) => writeln!(out, "{} = CONST {}", g.name, b as u8),
            GateKind::Not(a) => writeln!(out, "{} = NOT {}", g.name, n(a)),
            GateKind::And(a, b) => writeln!(out, "{} = AND {} {}", g.name, n(a), n(b)),
            GateKind::Or(a, b) => writeln!(out, "{} = OR {} {}", g.name, n(a), n(b)),
        }
        .unwrap();
    }
    writeln!(out, "output {}", c.name(c.output())).unwrap();
    out
}
