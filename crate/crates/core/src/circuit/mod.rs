//! Circuit IR: a bounded fan-in DAG over AND/OR/NOT/VAR/CONST gates with a
//! single output.
//!
//! Gates are stored in topological order; a [`GateRef`] is an index into that
//! order, and every gate's inputs carry smaller indices. Gate names are the
//! identifiers used in the `.circ` netlist format and survive round trips.

mod builder;
mod parse;
mod rewrite;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::table::{var_bit, Assignment, TableError, TruthTable};

pub use builder::CircuitBuilder;
pub use parse::{parse_circuit, serialize_circuit, ParseError};
pub use rewrite::{demorgan_normalize, restrict, restrict_with_map, Restricted, Value};

/// Index of a gate inside its [`Circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateRef(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Var(u32),
    Const(bool),
    Not(GateRef),
    And(GateRef, GateRef),
    Or(GateRef, GateRef),
}

impl GateKind {
    pub fn inputs(&self) -> impl Iterator<Item = GateRef> {
        let (a, b) = match *self {
            GateKind::Var(_) | GateKind::Const(_) => (None, None),
            GateKind::Not(a) => (Some(a), None),
            GateKind::And(a, b) | GateKind::Or(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, GateKind::Var(_) | GateKind::Const(_))
    }

    pub fn is_not(&self) -> bool {
        matches!(self, GateKind::Not(_))
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            GateKind::Var(_) => "VAR",
            GateKind::Const(_) => "CONST",
            GateKind::Not(_) => "NOT",
            GateKind::And(..) => "AND",
            GateKind::Or(..) => "OR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub name: String,
    pub kind: GateKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("gate `{gate}` references gate #{input} which does not precede it")]
    NotTopological { gate: String, input: usize },
    #[error("gate `{gate}` uses variable {index} outside 1..={nvars}")]
    VarOutOfRange { gate: String, index: u32, nvars: u32 },
    #[error("duplicate gate id `{0}`")]
    DuplicateGate(String),
    #[error("invalid gate id `{0}`")]
    InvalidName(String),
    #[error("output refers to missing gate #{0}")]
    MissingOutput(usize),
    #[error("circuit has no gates")]
    Empty,
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("restriction key {index} outside 1..={nvars}")]
    KeyOutOfRange { index: u32, nvars: u32 },
    #[error("restriction assigns variable {0} both 0 and 1")]
    ConflictingKey(u32),
    #[error(transparent)]
    Table(#[from] TableError),
}

pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An immutable, validated circuit.
#[derive(Clone, PartialEq, Eq)]
pub struct Circuit {
    nvars: u32,
    gates: Vec<Gate>,
    output: GateRef,
}

impl Circuit {
    pub fn new(nvars: u32, gates: Vec<Gate>, output: GateRef) -> Result<Self, CircuitError> {
        if gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        if output.0 >= gates.len() {
            return Err(CircuitError::MissingOutput(output.0));
        }
        let mut seen = HashMap::with_capacity(gates.len());
        for (idx, gate) in gates.iter().enumerate() {
            if !valid_name(&gate.name) {
                return Err(CircuitError::InvalidName(gate.name.clone()));
            }
            if seen.insert(gate.name.as_str(), idx).is_some() {
                return Err(CircuitError::DuplicateGate(gate.name.clone()));
            }
            if let GateKind::Var(i) = gate.kind {
                if i == 0 || i > nvars {
                    return Err(CircuitError::VarOutOfRange {
                        gate: gate.name.clone(),
                        index: i,
                        nvars,
                    });
                }
            }
            if let Some(bad) = gate.kind.inputs().find(|r| r.0 >= idx) {
                return Err(CircuitError::NotTopological {
                    gate: gate.name.clone(),
                    input: bad.0,
                });
            }
        }
        Ok(Self {
            nvars,
            gates,
            output,
        })
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, r: GateRef) -> &Gate {
        &self.gates[r.0]
    }

    pub fn kind(&self, r: GateRef) -> GateKind {
        self.gates[r.0].kind
    }

    pub fn name(&self, r: GateRef) -> &str {
        &self.gates[r.0].name
    }

    pub fn output(&self) -> GateRef {
        self.output
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn refs(&self) -> impl Iterator<Item = GateRef> {
        (0..self.gates.len()).map(GateRef)
    }

    pub fn find(&self, name: &str) -> Result<GateRef, CircuitError> {
        self.gates
            .iter()
            .position(|g| g.name == name)
            .map(GateRef)
            .ok_or_else(|| CircuitError::UnknownGate(name.to_string()))
    }

    /// NOT gates in file (topological) order.
    pub fn negations(&self) -> Vec<GateRef> {
        self.refs().filter(|r| self.kind(*r).is_not()).collect()
    }

    /// Gates reachable from the output, as a mask indexed by gate.
    pub fn reachable(&self) -> Vec<bool> {
        let mut live = vec![false; self.gates.len()];
        live[self.output.0] = true;
        for idx in (0..self.gates.len()).rev() {
            if live[idx] {
                for r in self.gates[idx].kind.inputs() {
                    live[r.0] = true;
                }
            }
        }
        live
    }

    /// Drops gates the output does not depend on, keeping order and names.
    pub fn pruned(&self) -> Circuit {
        self.pruned_with_map().0
    }

    /// [`Circuit::pruned`] plus the old-to-new gate map (`None` for dropped gates).
    pub fn pruned_with_map(&self) -> (Circuit, Vec<Option<GateRef>>) {
        let live = self.reachable();
        let mut remap = vec![usize::MAX; self.gates.len()];
        let mut gates = Vec::new();
        for (idx, gate) in self.gates.iter().enumerate() {
            if !live[idx] {
                continue;
            }
            let m = |r: GateRef| GateRef(remap[r.0]);
            let kind = match gate.kind {
                GateKind::Not(a) => GateKind::Not(m(a)),
                GateKind::And(a, b) => GateKind::And(m(a), m(b)),
                GateKind::Or(a, b) => GateKind::Or(m(a), m(b)),
                k => k,
            };
            remap[idx] = gates.len();
            gates.push(Gate {
                name: gate.name.clone(),
                kind,
            });
        }
        let circuit = Circuit {
            nvars: self.nvars,
            gates,
            output: GateRef(remap[self.output.0]),
        };
        let map = remap
            .into_iter()
            .map(|i| (i != usize::MAX).then_some(GateRef(i)))
            .collect();
        (circuit, map)
    }

    /// Values of every gate under `a`.
    pub fn eval_all(&self, a: &Assignment) -> Result<Vec<bool>, CircuitError> {
        if a.nvars() != self.nvars {
            return Err(TableError::LengthMismatch {
                expected: self.nvars,
                found: a.nvars(),
            }
            .into());
        }
        let mut vals: Vec<bool> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match gate.kind {
                GateKind::Var(i) => a.get(i),
                GateKind::Const(b) => b,
                GateKind::Not(x) => !vals[x.0],
                GateKind::And(x, y) => vals[x.0] && vals[y.0],
                GateKind::Or(x, y) => vals[x.0] || vals[y.0],
            };
            vals.push(v);
        }
        Ok(vals)
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, CircuitError> {
        Ok(self.eval_all(a)?[self.output.0])
    }

    /// Truth table of every gate, over the circuit's inputs.
    pub fn gate_tables(&self) -> Result<Vec<TruthTable>, CircuitError> {
        self.gate_tables_forcing(&HashMap::new())
    }

    /// Like [`Circuit::gate_tables`], but the listed gates output the given
    /// constants instead of their own function.
    pub fn gate_tables_forcing(
        &self,
        forced: &HashMap<GateRef, bool>,
    ) -> Result<Vec<TruthTable>, CircuitError> {
        let n = self.nvars;
        let mut tables: Vec<TruthTable> = Vec::with_capacity(self.gates.len());
        let mut var_cache: HashMap<u32, TruthTable> = HashMap::new();
        for (idx, gate) in self.gates.iter().enumerate() {
            let t = if let Some(&b) = forced.get(&GateRef(idx)) {
                TruthTable::constant(n, b)?
            } else {
                match gate.kind {
                    GateKind::Var(i) => match var_cache.get(&i) {
                        Some(t) => t.clone(),
                        None => {
                            let t = TruthTable::var(n, i)?;
                            var_cache.insert(i, t.clone());
                            t
                        }
                    },
                    GateKind::Const(b) => TruthTable::constant(n, b)?,
                    GateKind::Not(x) => !&tables[x.0],
                    GateKind::And(x, y) => &tables[x.0] & &tables[y.0],
                    GateKind::Or(x, y) => &tables[x.0] | &tables[y.0],
                }
            };
            tables.push(t);
        }
        Ok(tables)
    }

    pub fn gate_truth_table(&self, g: GateRef) -> Result<TruthTable, CircuitError> {
        if g.0 >= self.gates.len() {
            return Err(CircuitError::UnknownGate(format!("#{}", g.0)));
        }
        Ok(self.gate_tables()?.swap_remove(g.0))
    }

    pub fn truth_table(&self) -> Result<TruthTable, CircuitError> {
        self.gate_truth_table(self.output)
    }

    /// Depth of every gate: leaves are 0, an internal gate is one more than
    /// its deepest input.
    pub fn gate_depths(&self) -> Vec<u32> {
        let mut depth: Vec<u32> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let d = gate
                .kind
                .inputs()
                .map(|r| depth[r.0] + 1)
                .max()
                .unwrap_or(0);
            depth.push(d);
        }
        depth
    }

    pub fn depth(&self) -> u32 {
        self.gate_depths()[self.output.0]
    }

    /// Depth with a NOT directly above a VAR counted as a leaf, the usual
    /// convention for DeMorgan circuits over literals.
    pub fn literal_depth(&self) -> u32 {
        let mut depth: Vec<u32> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let d = match gate.kind {
                GateKind::Not(x) if matches!(self.kind(x), GateKind::Var(_)) => 0,
                k => k.inputs().map(|r| depth[r.0] + 1).max().unwrap_or(0),
            };
            depth.push(d);
        }
        depth[self.output.0]
    }

    pub fn stats(&self) -> CircuitStats {
        let size = self.gates.iter().filter(|g| !g.kind.is_leaf()).count();
        let negations = self.gates.iter().filter(|g| g.kind.is_not()).count();
        CircuitStats {
            depth: self.depth(),
            size,
            negations,
        }
    }

    /// True when every NOT gate sits directly above a VAR gate.
    pub fn is_demorgan(&self) -> bool {
        self.gates.iter().all(|g| match g.kind {
            GateKind::Not(x) => matches!(self.kind(x), GateKind::Var(_)),
            _ => true,
        })
    }

    /// Characteristic mask (assignment bit layout) of variables that appear
    /// under a NOT gate directly.
    pub fn negated_leaf_mask(&self) -> u64 {
        let mut mask = 0u64;
        for g in &self.gates {
            if let GateKind::Not(x) = g.kind {
                if let GateKind::Var(i) = self.kind(x) {
                    mask |= 1u64 << var_bit(self.nvars, i);
                }
            }
        }
        mask
    }
}

impl fmt::Debug for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_circuit(self))
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_circuit(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    /// Longest output-to-leaf path, counted in edges through internal gates.
    pub depth: u32,
    /// AND, OR and NOT gates.
    pub size: usize,
    pub negations: usize,
}
