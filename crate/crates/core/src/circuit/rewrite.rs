//! DeMorgan normalization and restriction with constant propagation.

use std::collections::BTreeMap;

use super::{Circuit, CircuitBuilder, CircuitError, GateKind, GateRef};

/// Pushes every NOT down to the VAR leaves. Double negations cancel and NOT
/// of a constant folds. A gate that must be available in both polarities is
/// duplicated; positive copies keep their original names, negated copies get
/// an `_n` suffix.
pub fn demorgan_normalize(c: &Circuit) -> Circuit {
    let mut b = CircuitBuilder::new(c.nvars());
    b.reserve(c.gates().iter().map(|g| g.name.as_str()));
    // pos[g] / neg[g]: builder gates computing g and NOT g.
    let mut pos: Vec<GateRef> = Vec::with_capacity(c.len());
    let mut neg: Vec<GateRef> = Vec::with_capacity(c.len());
    for r in c.refs() {
        let name = c.name(r);
        let neg_hint = format!("{name}_n");
        let (p, n) = match c.kind(r) {
            GateKind::Var(i) => {
                let p = b.push_exact(GateKind::Var(i), name);
                let n = b.push(GateKind::Not(p), Some(&neg_hint));
                (p, n)
            }
            GateKind::Const(v) => {
                let p = b.push_exact(GateKind::Const(v), name);
                let n = b.push(GateKind::Const(!v), Some(&neg_hint));
                (p, n)
            }
            GateKind::Not(a) => (neg[a.0], pos[a.0]),
            GateKind::And(x, y) => {
                let p = b.push_exact(GateKind::And(pos[x.0], pos[y.0]), name);
                let n = b.push(GateKind::Or(neg[x.0], neg[y.0]), Some(&neg_hint));
                (p, n)
            }
            GateKind::Or(x, y) => {
                let p = b.push_exact(GateKind::Or(pos[x.0], pos[y.0]), name);
                let n = b.push(GateKind::And(neg[x.0], neg[y.0]), Some(&neg_hint));
                (p, n)
            }
        };
        pos.push(p);
        neg.push(n);
    }
    b.finish(pos[c.output().0])
        .expect("normalization preserves well-formedness")
}

/// What an original gate became under a restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Const(bool),
    /// A gate of the restricted circuit.
    Gate(GateRef),
    /// Non-constant, but the restricted output no longer depends on it.
    Dropped,
}

#[derive(Debug, Clone)]
pub struct Restricted {
    pub circuit: Circuit,
    /// Indexed by the original circuit's gates.
    pub map: Vec<Value>,
}

fn check_partial(c: &Circuit, partial: &[(u32, bool)]) -> Result<BTreeMap<u32, bool>, CircuitError> {
    let mut fixed = BTreeMap::new();
    for &(i, v) in partial {
        if i == 0 || i > c.nvars() {
            return Err(CircuitError::KeyOutOfRange {
                index: i,
                nvars: c.nvars(),
            });
        }
        if let Some(old) = fixed.insert(i, v) {
            if old != v {
                return Err(CircuitError::ConflictingKey(i));
            }
        }
    }
    Ok(fixed)
}

/// Fixes the given variables and propagates constants. The result keeps the
/// same `nvars`; depth and size never grow.
pub fn restrict(c: &Circuit, partial: &[(u32, bool)]) -> Result<Circuit, CircuitError> {
    Ok(restrict_with_map(c, partial)?.circuit)
}

pub fn restrict_with_map(c: &Circuit, partial: &[(u32, bool)]) -> Result<Restricted, CircuitError> {
    let fixed = check_partial(c, partial)?;
    let mut b = CircuitBuilder::new(c.nvars());
    b.reserve(c.gates().iter().map(|g| g.name.as_str()));
    let mut vals: Vec<Value> = Vec::with_capacity(c.len());
    for r in c.refs() {
        let name = c.name(r);
        let v = match c.kind(r) {
            GateKind::Var(i) => match fixed.get(&i) {
                Some(&bit) => Value::Const(bit),
                None => Value::Gate(b.push_exact(GateKind::Var(i), name)),
            },
            GateKind::Const(bit) => Value::Const(bit),
            GateKind::Not(a) => match vals[a.0] {
                Value::Const(bit) => Value::Const(!bit),
                Value::Gate(g) => Value::Gate(b.push_exact(GateKind::Not(g), name)),
                Value::Dropped => unreachable!(),
            },
            GateKind::And(x, y) => match (vals[x.0], vals[y.0]) {
                (Value::Const(false), _) | (_, Value::Const(false)) => Value::Const(false),
                (Value::Const(true), o) | (o, Value::Const(true)) => o,
                (Value::Gate(p), Value::Gate(q)) => {
                    Value::Gate(b.push_exact(GateKind::And(p, q), name))
                }
                _ => unreachable!(),
            },
            GateKind::Or(x, y) => match (vals[x.0], vals[y.0]) {
                (Value::Const(true), _) | (_, Value::Const(true)) => Value::Const(true),
                (Value::Const(false), o) | (o, Value::Const(false)) => o,
                (Value::Gate(p), Value::Gate(q)) => {
                    Value::Gate(b.push_exact(GateKind::Or(p, q), name))
                }
                _ => unreachable!(),
            },
        };
        vals.push(v);
    }
    let out = match vals[c.output().0] {
        Value::Gate(g) => g,
        Value::Const(bit) => b.push_exact(GateKind::Const(bit), c.name(c.output())),
        Value::Dropped => unreachable!(),
    };
    let (circuit, prune_map) = b.finish_unpruned(out)?.pruned_with_map();
    let map = vals
        .into_iter()
        .map(|v| match v {
            Value::Gate(g) => prune_map[g.0].map_or(Value::Dropped, Value::Gate),
            other => other,
        })
        .collect();
    Ok(Restricted { circuit, map })
}
