use std::collections::{HashMap, HashSet};

use super::{valid_name, Circuit, CircuitError, Gate, GateKind, GateRef};

/// Incremental construction of a [`Circuit`]. Gates are appended in
/// topological order by construction; VAR and CONST leaves are shared.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    nvars: u32,
    gates: Vec<Gate>,
    names: HashSet<String>,
    vars: HashMap<u32, GateRef>,
    consts: [Option<GateRef>; 2],
    counter: usize,
}

impl CircuitBuilder {
    pub fn new(nvars: u32) -> Self {
        Self {
            nvars,
            gates: Vec::new(),
            names: HashSet::new(),
            vars: HashMap::new(),
            consts: [None, None],
            counter: 0,
        }
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn kind(&self, r: GateRef) -> GateKind {
        self.gates[r.0].kind
    }

    fn fresh_name(&mut self, hint: Option<&str>) -> String {
        if let Some(h) = hint.filter(|h| valid_name(h)) {
            if !self.names.contains(h) {
                return h.to_string();
            }
            let mut k = 2;
            loop {
                let cand = format!("{h}_{k}");
                if !self.names.contains(&cand) {
                    return cand;
                }
                k += 1;
            }
        }
        loop {
            self.counter += 1;
            let cand = format!("g{}", self.counter);
            if !self.names.contains(&cand) {
                return cand;
            }
        }
    }

    /// Marks names as taken so generated names avoid them.
    pub fn reserve<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) {
        self.names.extend(names.into_iter().map(str::to_string));
    }

    /// Appends a gate under exactly `name`, which may have been reserved but
    /// must not already label a gate.
    pub fn push_exact(&mut self, kind: GateKind, name: &str) -> GateRef {
        debug_assert!(!self.gates.iter().any(|g| g.name == name));
        self.names.insert(name.to_string());
        self.gates.push(Gate {
            name: name.to_string(),
            kind,
        });
        GateRef(self.gates.len() - 1)
    }

    /// Appends a gate, deriving a unique name from `hint` when given.
    pub fn push(&mut self, kind: GateKind, hint: Option<&str>) -> GateRef {
        let name = self.fresh_name(hint);
        self.names.insert(name.clone());
        self.gates.push(Gate { name, kind });
        GateRef(self.gates.len() - 1)
    }

    pub fn var(&mut self, i: u32) -> GateRef {
        if let Some(&r) = self.vars.get(&i) {
            return r;
        }
        let r = self.push(GateKind::Var(i), None);
        self.vars.insert(i, r);
        r
    }

    pub fn constant(&mut self, b: bool) -> GateRef {
        if let Some(r) = self.consts[b as usize] {
            return r;
        }
        let r = self.push(GateKind::Const(b), None);
        self.consts[b as usize] = Some(r);
        r
    }

    pub fn not(&mut self, a: GateRef) -> GateRef {
        self.push(GateKind::Not(a), None)
    }

    pub fn and(&mut self, a: GateRef, b: GateRef) -> GateRef {
        self.push(GateKind::And(a, b), None)
    }

    pub fn or(&mut self, a: GateRef, b: GateRef) -> GateRef {
        self.push(GateKind::Or(a, b), None)
    }

    fn balanced(
        &mut self,
        items: &[GateRef],
        join: fn(&mut Self, GateRef, GateRef) -> GateRef,
    ) -> Option<GateRef> {
        match items.len() {
            0 => None,
            1 => Some(items[0]),
            n => {
                let (l, r) = items.split_at((n + 1) / 2);
                let a = self.balanced(l, join).unwrap();
                let b = self.balanced(r, join).unwrap();
                Some(join(self, a, b))
            }
        }
    }

    /// Balanced AND tree; the empty conjunction is CONST 1.
    pub fn and_all(&mut self, items: &[GateRef]) -> GateRef {
        self.balanced(items, Self::and)
            .unwrap_or_else(|| self.constant(true))
    }

    /// Balanced OR tree; the empty disjunction is CONST 0.
    pub fn or_all(&mut self, items: &[GateRef]) -> GateRef {
        self.balanced(items, Self::or)
            .unwrap_or_else(|| self.constant(false))
    }

    /// Copies every gate of `c` into this builder. Gates for which
    /// `substitute` returns a replacement are not copied; references to them
    /// resolve to the replacement. Names are derived from the source names
    /// with `suffix` appended. Returns the source-to-copy map.
    pub fn import(
        &mut self,
        c: &Circuit,
        suffix: &str,
        mut substitute: impl FnMut(&mut Self, GateRef) -> Option<GateRef>,
    ) -> Vec<GateRef> {
        let mut map: Vec<GateRef> = Vec::with_capacity(c.len());
        for r in c.refs() {
            if let Some(sub) = substitute(self, r) {
                map.push(sub);
                continue;
            }
            let copied = match c.kind(r) {
                GateKind::Var(i) => self.var(i),
                GateKind::Const(b) => self.constant(b),
                kind => {
                    let m = |g: GateRef| map[g.0];
                    let kind = match kind {
                        GateKind::Not(a) => GateKind::Not(m(a)),
                        GateKind::And(a, b) => GateKind::And(m(a), m(b)),
                        GateKind::Or(a, b) => GateKind::Or(m(a), m(b)),
                        _ => unreachable!(),
                    };
                    let hint = format!("{}{}", c.name(r), suffix);
                    self.push(kind, Some(&hint))
                }
            };
            map.push(copied);
        }
        map
    }

    /// Finishes the circuit, dropping gates the output does not reach.
    pub fn finish(self, output: GateRef) -> Result<Circuit, CircuitError> {
        Ok(Circuit::new(self.nvars, self.gates, output)?.pruned())
    }

    /// Finishes without pruning.
    pub fn finish_unpruned(self, output: GateRef) -> Result<Circuit, CircuitError> {
        Circuit::new(self.nvars, self.gates, output)
    }
}
