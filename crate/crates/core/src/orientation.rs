//! Orientations: `β` is an orientation of `f` when `f(x) = h(x, x⊕β)` for
//! some monotone `h` on twice the variables.
//!
//! The least orientation has `β_i = 1` exactly when flipping variable `i`
//! from 0 to 1 can drop `f` from 1 to 0, and every superset of it is again an
//! orientation. Everything here is computed from truth tables, never from
//! circuit syntax.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateKind, GateRef};
use crate::funcs::{decreasing_at, sensitive_mask};
use crate::table::{var_bit, Assignment, TableError, TruthTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrientationError {
    #[error("length mismatch: function has {expected} variables, vector has {found}")]
    LengthMismatch { expected: u32, found: u32 },
    #[error("not an orientation: s={s} dominates t={t} in (x, x^beta) but f(s)=0 < f(t)=1")]
    NotAnOrientation { s: Assignment, t: Assignment },
    #[error("malformed orientation vector `{0}` (expected beta:0101)")]
    BadVector(String),
    #[error("NOT gate `{gate}` depends on x{index} outside the support of its orientations")]
    SensitivityViolation { gate: String, index: u32 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// An orientation vector. Bit layout matches [`Assignment`]: variable `i` of
/// `n` sits at bit `n - i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrientationVector {
    nvars: u32,
    bits: u64,
}

impl OrientationVector {
    pub fn new(nvars: u32, bits: u64) -> Self {
        let mask = if nvars >= 64 { u64::MAX } else { (1u64 << nvars) - 1 };
        Self {
            nvars,
            bits: bits & mask,
        }
    }

    pub fn zero(nvars: u32) -> Self {
        Self::new(nvars, 0)
    }

    pub fn ones(nvars: u32) -> Self {
        Self::new(nvars, u64::MAX)
    }

    pub fn from_vars(nvars: u32, vars: impl IntoIterator<Item = u32>) -> Self {
        let bits = vars
            .into_iter()
            .fold(0u64, |m, i| m | 1u64 << var_bit(nvars, i));
        Self::new(nvars, bits)
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn get(&self, var: u32) -> bool {
        self.bits >> var_bit(self.nvars, var) & 1 == 1
    }

    /// Componentwise `self >= other`.
    pub fn covers(&self, other: &OrientationVector) -> bool {
        other.bits & !self.bits == 0
    }

    pub fn union(&self, other: &OrientationVector) -> OrientationVector {
        Self::new(self.nvars, self.bits | other.bits)
    }

    /// Variables with `β_i = 1`, ascending.
    pub fn support(&self) -> Vec<u32> {
        (1..=self.nvars).filter(|&i| self.get(i)).collect()
    }
}

impl fmt::Display for OrientationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("beta:")?;
        for i in 1..=self.nvars {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for OrientationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for OrientationVector {
    type Err = OrientationError;

    /// Accepts `beta:0110` or a bare `0110`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim();
        let body = body.strip_prefix("beta:").unwrap_or(body);
        let a: Assignment = body
            .parse()
            .map_err(|_| OrientationError::BadVector(s.to_string()))?;
        Ok(Self::new(a.nvars(), a.bits()))
    }
}

impl Serialize for OrientationVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OrientationVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn minimal_orientation(f: &TruthTable) -> OrientationVector {
    let bits = (0..f.nvars())
        .filter(|&p| decreasing_at(f, p))
        .fold(0u64, |m, p| m | 1u64 << p);
    OrientationVector::new(f.nvars(), bits)
}

fn check_len(f: &TruthTable, beta: &OrientationVector) -> Result<(), OrientationError> {
    if f.nvars() != beta.nvars() {
        return Err(OrientationError::LengthMismatch {
            expected: f.nvars(),
            found: beta.nvars(),
        });
    }
    Ok(())
}

/// Whether `beta` is an orientation of `f`, via `beta >= minimal_orientation(f)`.
pub fn is_orientation(f: &TruthTable, beta: &OrientationVector) -> Result<bool, OrientationError> {
    check_len(f, beta)?;
    Ok(beta.covers(&minimal_orientation(f)))
}

/// The least monotone `h` on `2n` variables with `h(x, x⊕β) = f(x)`.
///
/// Row layout of `h`: the `x` half occupies the high `n` bits, the `x⊕β`
/// half the low `n` bits, so `h`'s variable `i` is `x_i` and variable `n+i`
/// is `(x⊕β)_i`.
pub fn monotone_extension(
    f: &TruthTable,
    beta: &OrientationVector,
) -> Result<TruthTable, OrientationError> {
    check_len(f, beta)?;
    let n = f.nvars();
    if let Some(p) = (0..n).find(|&p| beta.bits >> p & 1 == 0 && decreasing_at(f, p)) {
        // An upward edge along p that drops f; with β_p = 0 the pair is
        // ordered the same way in both halves.
        let t = (0..f.rows())
            .find(|&u| u >> p & 1 == 0 && f.get(u) && !f.get(u | 1 << p))
            .expect("decreasing edge exists");
        let s = t | 1 << p;
        return Err(OrientationError::NotAnOrientation {
            s: Assignment::from_row(n, s),
            t: Assignment::from_row(n, t),
        });
    }
    let mut h = TruthTable::zero(2 * n)?;
    for x in f.ones() {
        h.set((x << n) | (x ^ beta.bits as usize), true);
    }
    for p in 0..2 * n {
        for row in 0..h.rows() {
            if row >> p & 1 == 0 && h.get(row) {
                h.set(row | 1 << p, true);
            }
        }
    }
    Ok(h)
}

/// Row of `h` holding `(x, x⊕β)`.
pub fn extension_row(x: usize, beta: &OrientationVector) -> usize {
    (x << beta.nvars()) | (x ^ beta.bits as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct GateOrientation {
    pub gate: String,
    pub kind: &'static str,
    pub internal: bool,
    pub weight: u32,
    pub beta: OrientationVector,
}

/// Orientations around one NOT gate: `input` belongs to the function
/// entering it, `output` to the negated function.
#[derive(Debug, Clone, Serialize)]
pub struct NotOrientation {
    pub gate: String,
    pub input_gate: String,
    pub input: OrientationVector,
    pub output: OrientationVector,
}

/// Minimal orientation of every gate's function, over the circuit's inputs.
#[derive(Debug, Clone, Serialize)]
pub struct OrientationProfile {
    pub nvars: u32,
    pub gates: Vec<GateOrientation>,
    /// Largest weight over internal gates (VAR/CONST leaves excluded).
    pub max_weight: u32,
    pub nots: Vec<NotOrientation>,
    #[serde(skip)]
    tables: Vec<TruthTable>,
}

impl OrientationProfile {
    pub fn beta(&self, g: GateRef) -> OrientationVector {
        self.gates[g.0].beta
    }

    pub fn table(&self, g: GateRef) -> &TruthTable {
        &self.tables[g.0]
    }

    pub fn tables(&self) -> &[TruthTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates whose minimal orientation is non-zero.
    pub fn dense_gates(&self) -> impl Iterator<Item = &GateOrientation> {
        self.gates.iter().filter(|g| !g.beta.is_zero())
    }
}

pub fn orientation_profile(c: &Circuit) -> Result<OrientationProfile, OrientationError> {
    let tables = c.gate_tables()?;
    let betas: Vec<OrientationVector> = tables.par_iter().map(minimal_orientation).collect();
    let gates: Vec<GateOrientation> = c
        .refs()
        .map(|r| GateOrientation {
            gate: c.name(r).to_string(),
            kind: c.kind(r).mnemonic(),
            internal: !c.kind(r).is_leaf(),
            weight: betas[r.0].weight(),
            beta: betas[r.0],
        })
        .collect();
    let max_weight = gates
        .iter()
        .filter(|g| g.internal)
        .map(|g| g.weight)
        .max()
        .unwrap_or(0);
    let nots = c
        .refs()
        .filter_map(|r| match c.kind(r) {
            GateKind::Not(a) => Some(NotOrientation {
                gate: c.name(r).to_string(),
                input_gate: c.name(a).to_string(),
                input: betas[a.0],
                output: betas[r.0],
            }),
            _ => None,
        })
        .collect();
    Ok(OrientationProfile {
        nvars: c.nvars(),
        gates,
        max_weight,
        nots,
        tables,
    })
}

/// Whether one `beta` is an orientation of every gate's function.
pub fn check_uniform_orientation(
    c: &Circuit,
    beta: &OrientationVector,
) -> Result<bool, OrientationError> {
    if beta.nvars() != c.nvars() {
        return Err(OrientationError::LengthMismatch {
            expected: c.nvars(),
            found: beta.nvars(),
        });
    }
    let tables = c.gate_tables()?;
    Ok(tables
        .par_iter()
        .all(|t| beta.covers(&minimal_orientation(t))))
}

#[derive(Debug, Clone, Serialize)]
pub struct NegationSensitivity {
    pub gate: String,
    pub input_gate: String,
    /// Variables the NOT's input function depends on.
    pub sensitive: Vec<u32>,
    /// Support of the union of the input and output orientations.
    pub support: Vec<u32>,
    /// Twice the circuit's max weight.
    pub bound: u32,
}

/// For every NOT gate, checks that its input function depends only on
/// variables in the union of the two orientations around it. A violation
/// is impossible for minimal orientations and is reported as an error.
pub fn negation_sensitivity_check(
    c: &Circuit,
) -> Result<Vec<NegationSensitivity>, OrientationError> {
    let prof = orientation_profile(c)?;
    negation_sensitivity_from_profile(c, &prof)
}

pub fn negation_sensitivity_from_profile(
    c: &Circuit,
    prof: &OrientationProfile,
) -> Result<Vec<NegationSensitivity>, OrientationError> {
    let n = c.nvars();
    let mut out = Vec::new();
    for r in c.negations() {
        let GateKind::Not(a) = c.kind(r) else { unreachable!() };
        let sens = sensitive_mask(prof.table(a));
        let sup = prof.beta(a).union(&prof.beta(r));
        if let Some(p) = (0..n).find(|&p| sens >> p & 1 == 1 && sup.bits() >> p & 1 == 0) {
            return Err(OrientationError::SensitivityViolation {
                gate: c.name(r).to_string(),
                index: n - p,
            });
        }
        let sensitive = (1..=n)
            .filter(|&i| sens >> var_bit(n, i) & 1 == 1)
            .collect();
        out.push(NegationSensitivity {
            gate: c.name(r).to_string(),
            input_gate: c.name(a).to_string(),
            sensitive,
            support: sup.support(),
            bound: 2 * prof.max_weight,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::funcs::is_monotone;

    fn tt(s: &str) -> TruthTable {
        TruthTable::from_bit_string(s).unwrap()
    }

    fn beta(s: &str) -> OrientationVector {
        s.parse().unwrap()
    }

    #[test]
    fn minimal_examples() {
        assert_eq!(minimal_orientation(&tt("0001")), beta("00"));
        assert_eq!(minimal_orientation(&tt("10")), beta("1"));
        assert_eq!(minimal_orientation(&tt("0110")), beta("11"));
        // x1 AND NOT x2
        assert_eq!(minimal_orientation(&tt("0010")).to_string(), "beta:01");
    }

    #[test]
    fn is_orientation_examples() {
        assert!(is_orientation(&tt("0001"), &beta("11")).unwrap());
        assert!(!is_orientation(&tt("10"), &beta("0")).unwrap());
        assert!(!is_orientation(&tt("0110"), &beta("10")).unwrap());
        assert!(is_orientation(&tt("0110"), &beta("1")).is_err());
    }

    #[test]
    fn extension_examples() {
        // x1 with beta 0: h = x AND y on the 2-variable cube.
        let h = monotone_extension(&tt("01"), &beta("0")).unwrap();
        assert_eq!(h.to_bit_string(), "0001");
        // NOT x1 with beta 1: h = the second coordinate.
        let h = monotone_extension(&tt("10"), &beta("1")).unwrap();
        assert_eq!(h.to_bit_string(), "0101");
        let f = tt("0001");
        let h = monotone_extension(&f, &beta("00")).unwrap();
        assert_eq!(h.count_ones(), 1);
        assert!(h.get(0b1111));
    }

    #[test]
    fn extension_witness() {
        let err = monotone_extension(&tt("10"), &beta("0")).unwrap_err();
        match err {
            OrientationError::NotAnOrientation { s, t } => {
                assert_eq!((s.to_string(), t.to_string()), ("1".into(), "0".into()));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn extension_is_monotone_and_faithful() {
        let f = tt("0110_1001".replace('_', "").as_str());
        let b = minimal_orientation(&f);
        let h = monotone_extension(&f, &b).unwrap();
        assert!(is_monotone(&h));
        for x in 0..f.rows() {
            assert_eq!(h.get(extension_row(x, &b)), f.get(x));
        }
    }

    #[test]
    fn profile_examples() {
        let mono = parse_circuit("nvars 2\na = VAR 1\nb = VAR 2\no = OR a b\noutput o").unwrap();
        let p = orientation_profile(&mono).unwrap();
        assert_eq!(p.max_weight, 0);
        assert!(p.nots.is_empty());

        let neg = parse_circuit("nvars 1\ng1 = VAR 1\ng2 = NOT g1\noutput g2").unwrap();
        let p = orientation_profile(&neg).unwrap();
        assert_eq!(p.gates[1].beta.to_string(), "beta:1");
        assert_eq!(p.max_weight, 1);
        assert_eq!(p.nots[0].input, beta("0"));

        let xor = parse_circuit(
            "nvars 2\na = VAR 1\nb = VAR 2\nna = NOT a\nnb = NOT b\n\
             l = AND a nb\nr = AND na b\no = OR l r\noutput o",
        )
        .unwrap();
        let p = orientation_profile(&xor).unwrap();
        assert_eq!(p.gates[xor.output().0].weight, 2);
    }

    #[test]
    fn uniform_orientation() {
        let neg = parse_circuit("nvars 1\ng1 = VAR 1\ng2 = NOT g1\noutput g2").unwrap();
        assert!(!check_uniform_orientation(&neg, &beta("0")).unwrap());
        assert!(check_uniform_orientation(&neg, &beta("1")).unwrap());
        assert!(check_uniform_orientation(&neg, &beta("11")).is_err());
    }

    #[test]
    fn sensitivity_report() {
        let c = parse_circuit("nvars 2\na = VAR 1\nb = VAR 2\ng = AND a b\nn = NOT g\noutput n")
            .unwrap();
        let r = negation_sensitivity_check(&c).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].sensitive, vec![1, 2]);
        assert_eq!(r[0].support, vec![1, 2]);
        let m = parse_circuit("nvars 1\na = VAR 1\noutput a").unwrap();
        assert!(negation_sensitivity_check(&m).unwrap().is_empty());
    }

    #[test]
    fn vector_round_trip() {
        let b = beta("beta:0110");
        assert_eq!(b.weight(), 2);
        assert_eq!(b.support(), vec![2, 3]);
        assert_eq!(b.to_string().parse::<OrientationVector>().unwrap(), b);
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"beta:0110\"");
    }
}
