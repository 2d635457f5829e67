//! Truth tables and hypercube points.
//!
//! Row-index convention, used everywhere in the crate: variable 1 is the most
//! significant bit of the row index. For `n` variables, variable `i` lives at
//! bit `n - i`. An [`Assignment`] stores its bits in exactly the same layout,
//! so `assignment.row()` is the table row it selects.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, Not};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest variable count a [`TruthTable`] may hold (2^20 rows, 128 KiB).
pub const MAX_TABLE_VARS: u32 = 20;

/// Largest variable count an [`Assignment`] may hold.
pub const MAX_ASSIGNMENT_VARS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("{nvars} variables exceeds the truth-table cap of {cap}")]
    TooManyVars { nvars: u32, cap: u32 },
    #[error("variable index {index} out of range 1..={nvars}")]
    VarOutOfRange { index: u32, nvars: u32 },
    #[error("length mismatch: expected {expected} variables, got {found}")]
    LengthMismatch { expected: u32, found: u32 },
    #[error("malformed truth table `{0}` (expected tt:N:HEX)")]
    BadTableSyntax(String),
    #[error("malformed assignment `{0}` (expected a string of 0/1)")]
    BadAssignment(String),
}

/// Bit position of variable `var` (1-based) in a row index over `nvars` variables.
#[inline]
pub fn var_bit(nvars: u32, var: u32) -> u32 {
    debug_assert!(var >= 1 && var <= nvars);
    nvars - var
}

/// A point of `{0,1}^n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    nvars: u32,
    bits: u64,
}

impl Assignment {
    pub fn new(nvars: u32, bits: u64) -> Result<Self, TableError> {
        if nvars > MAX_ASSIGNMENT_VARS {
            return Err(TableError::TooManyVars {
                nvars,
                cap: MAX_ASSIGNMENT_VARS,
            });
        }
        Ok(Self {
            nvars,
            bits: bits & mask(nvars),
        })
    }

    /// The assignment selecting `row` of a table over `nvars` variables.
    pub fn from_row(nvars: u32, row: usize) -> Self {
        Self::new(nvars, row as u64).expect("row assignment within cap")
    }

    pub fn zeros(nvars: u32) -> Self {
        Self::from_row(nvars, 0)
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn row(&self) -> usize {
        self.bits as usize
    }

    /// Value of variable `var` (1-based).
    #[inline]
    pub fn get(&self, var: u32) -> bool {
        (self.bits >> var_bit(self.nvars, var)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, var: u32, value: bool) {
        let b = 1u64 << var_bit(self.nvars, var);
        if value {
            self.bits |= b;
        } else {
            self.bits &= !b;
        }
    }

    pub fn with(mut self, var: u32, value: bool) -> Self {
        self.set(var, value);
        self
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Assignment) -> bool {
        self.bits & !other.bits == 0
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for var in 1..=self.nvars {
            f.write_str(if self.get(var) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({self})")
    }
}

impl FromStr for Assignment {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.len() as u32 > MAX_ASSIGNMENT_VARS {
            return Err(TableError::TooManyVars {
                nvars: s.len() as u32,
                cap: MAX_ASSIGNMENT_VARS,
            });
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(TableError::BadAssignment(s.to_string())),
            }
        }
        Assignment::new(s.len() as u32, bits)
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn mask(nvars: u32) -> u64 {
    if nvars >= 64 {
        u64::MAX
    } else {
        (1u64 << nvars) - 1
    }
}

/// A Boolean function `{0,1}^n -> {0,1}` stored as a packed bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    nvars: u32,
    words: Vec<u64>,
}

impl TruthTable {
    fn check_vars(nvars: u32) -> Result<(), TableError> {
        if nvars > MAX_TABLE_VARS {
            Err(TableError::TooManyVars {
                nvars,
                cap: MAX_TABLE_VARS,
            })
        } else {
            Ok(())
        }
    }

    fn word_count(nvars: u32) -> usize {
        ((1usize << nvars) + 63) / 64
    }

    fn tail_mask(&self) -> u64 {
        let rows = self.rows();
        if rows % 64 == 0 {
            u64::MAX
        } else {
            (1u64 << (rows % 64)) - 1
        }
    }

    fn clear_tail(&mut self) {
        let m = self.tail_mask();
        if let Some(last) = self.words.last_mut() {
            *last &= m;
        }
    }

    pub fn zero(nvars: u32) -> Result<Self, TableError> {
        Self::check_vars(nvars)?;
        Ok(Self {
            nvars,
            words: vec![0; Self::word_count(nvars)],
        })
    }

    pub fn constant(nvars: u32, value: bool) -> Result<Self, TableError> {
        let mut t = Self::zero(nvars)?;
        if value {
            t.words.iter_mut().for_each(|w| *w = u64::MAX);
            t.clear_tail();
        }
        Ok(t)
    }

    /// The projection onto variable `var`.
    pub fn var(nvars: u32, var: u32) -> Result<Self, TableError> {
        if var == 0 || var > nvars {
            return Err(TableError::VarOutOfRange { index: var, nvars });
        }
        let p = var_bit(nvars, var);
        Self::from_fn(nvars, |row| (row >> p) & 1 == 1)
    }

    pub fn from_fn(nvars: u32, mut f: impl FnMut(usize) -> bool) -> Result<Self, TableError> {
        let mut t = Self::zero(nvars)?;
        for row in 0..t.rows() {
            if f(row) {
                t.words[row >> 6] |= 1u64 << (row & 63);
            }
        }
        Ok(t)
    }

    /// Parses the row-0-first bit string form, e.g. `0001`.
    pub fn from_bit_string(s: &str) -> Result<Self, TableError> {
        let s = s.trim();
        let rows = s.len();
        if rows == 0 || !rows.is_power_of_two() {
            return Err(TableError::BadTableSyntax(s.to_string()));
        }
        let nvars = rows.trailing_zeros();
        let bytes = s.as_bytes();
        if bytes.iter().any(|b| *b != b'0' && *b != b'1') {
            return Err(TableError::BadTableSyntax(s.to_string()));
        }
        Self::from_fn(nvars, |row| bytes[row] == b'1')
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn rows(&self) -> usize {
        1usize << self.nvars
    }

    #[inline]
    pub fn get(&self, row: usize) -> bool {
        (self.words[row >> 6] >> (row & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, value: bool) {
        let b = 1u64 << (row & 63);
        if value {
            self.words[row >> 6] |= b;
        } else {
            self.words[row >> 6] &= !b;
        }
    }

    /// Visits every hypercube edge along row bit `p` one word at a time.
    /// `visit(word, lo, hi, mask)` gets, for each row `u = 64*word + j` with
    /// bit `j` of `mask` set, `f(u)` in bit `j` of `lo` and `f(u | 1 << p)`
    /// in bit `j` of `hi`. Rows in `mask` always have bit `p` clear.
    pub fn for_each_edge_word(&self, p: u32, mut visit: impl FnMut(usize, u64, u64, u64)) {
        debug_assert!(p < self.nvars);
        if p < 6 {
            const LOW: [u64; 6] = [
                0x5555_5555_5555_5555,
                0x3333_3333_3333_3333,
                0x0f0f_0f0f_0f0f_0f0f,
                0x00ff_00ff_00ff_00ff,
                0x0000_ffff_0000_ffff,
                0x0000_0000_ffff_ffff,
            ];
            let shift = 1u32 << p;
            let mask = LOW[p as usize] & self.tail_mask();
            for (i, &w) in self.words.iter().enumerate() {
                visit(i, w, w >> shift, mask);
            }
        } else {
            let stride = 1usize << (p - 6);
            for i in 0..self.words.len() {
                if i & stride == 0 {
                    visit(i, self.words[i], self.words[i | stride], u64::MAX);
                }
            }
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, TableError> {
        if a.nvars() != self.nvars {
            return Err(TableError::LengthMismatch {
                expected: self.nvars,
                found: a.nvars(),
            });
        }
        Ok(self.get(a.row()))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_constant(&self) -> Option<bool> {
        match self.count_ones() {
            0 => Some(false),
            n if n == self.rows() => Some(true),
            _ => None,
        }
    }

    /// Rows where the function is 1, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows()).filter(move |&r| self.get(r))
    }

    /// Rows where the function is 0, ascending.
    pub fn zeros(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows()).filter(move |&r| !self.get(r))
    }

    /// Row-0-first bit string, e.g. `0001` for x1 AND x2.
    pub fn to_bit_string(&self) -> String {
        (0..self.rows())
            .map(|r| if self.get(r) { '1' } else { '0' })
            .collect()
    }

    /// Hex form of the row-0-first bit string; the first nibble's high bit is
    /// row 0. Tables with fewer than four rows are right-padded with zeros.
    pub fn to_hex(&self) -> String {
        let rows = self.rows();
        let nibbles = (rows + 3) / 4;
        let mut out = String::with_capacity(nibbles);
        for n in 0..nibbles {
            let mut v = 0u32;
            for k in 0..4 {
                let row = n * 4 + k;
                v <<= 1;
                if row < rows && self.get(row) {
                    v |= 1;
                }
            }
            out.push(std::char::from_digit(v, 16).unwrap().to_ascii_uppercase());
        }
        out
    }

    pub fn from_hex(nvars: u32, hex: &str) -> Result<Self, TableError> {
        let bad = || TableError::BadTableSyntax(format!("tt:{nvars}:{hex}"));
        let mut t = Self::zero(nvars)?;
        let rows = t.rows();
        if hex.len() != (rows + 3) / 4 {
            return Err(bad());
        }
        for (n, c) in hex.chars().enumerate() {
            let v = c.to_digit(16).ok_or_else(bad)?;
            for k in 0..4 {
                let row = n * 4 + k;
                let bit = (v >> (3 - k)) & 1 == 1;
                if row < rows {
                    t.set(row, bit);
                } else if bit {
                    return Err(bad());
                }
            }
        }
        Ok(t)
    }

    /// Table over `nvars` variables; fails if the caps differ.
    pub fn same_shape(&self, other: &TruthTable) -> Result<(), TableError> {
        if self.nvars != other.nvars {
            Err(TableError::LengthMismatch {
                expected: self.nvars,
                found: other.nvars,
            })
        } else {
            Ok(())
        }
    }

    fn zip_with(&self, other: &TruthTable, op: impl Fn(u64, u64) -> u64) -> TruthTable {
        assert_eq!(self.nvars, other.nvars, "truth tables over different variable counts");
        let mut t = TruthTable {
            nvars: self.nvars,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        };
        t.clear_tail();
        t
    }

    /// `self(x) <= other(x)` for every row.
    pub fn implies(&self, other: &TruthTable) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

impl BitAnd for &TruthTable {
    type Output = TruthTable;
    fn bitand(self, rhs: &TruthTable) -> TruthTable {
        self.zip_with(rhs, |a, b| a & b)
    }
}

impl BitOr for &TruthTable {
    type Output = TruthTable;
    fn bitor(self, rhs: &TruthTable) -> TruthTable {
        self.zip_with(rhs, |a, b| a | b)
    }
}

impl BitXor for &TruthTable {
    type Output = TruthTable;
    fn bitxor(self, rhs: &TruthTable) -> TruthTable {
        self.zip_with(rhs, |a, b| a ^ b)
    }
}

impl Not for &TruthTable {
    type Output = TruthTable;
    fn not(self) -> TruthTable {
        let mut t = TruthTable {
            nvars: self.nvars,
            words: self.words.iter().map(|w| !w).collect(),
        };
        t.clear_tail();
        t
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tt:{}:{}", self.nvars, self.to_hex())
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nvars <= 6 {
            write!(f, "TruthTable({})", self.to_bit_string())
        } else {
            write!(f, "TruthTable({self})")
        }
    }
}

impl FromStr for TruthTable {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || TableError::BadTableSyntax(s.to_string());
        let rest = s.strip_prefix("tt:").ok_or_else(bad)?;
        let (n, hex) = rest.split_once(':').ok_or_else(bad)?;
        let nvars: u32 = n.parse().map_err(|_| bad())?;
        TruthTable::from_hex(nvars, hex)
    }
}

impl Serialize for TruthTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_one_is_high_order() {
        let x1 = TruthTable::var(2, 1).unwrap();
        let x2 = TruthTable::var(2, 2).unwrap();
        assert_eq!(x1.to_bit_string(), "0011");
        assert_eq!(x2.to_bit_string(), "0101");
        assert_eq!((&x1 & &x2).to_bit_string(), "0001");
    }

    #[test]
    fn assignment_string_matches_row() {
        let a: Assignment = "110".parse().unwrap();
        assert_eq!(a.row(), 6);
        assert!(a.get(1) && a.get(2) && !a.get(3));
        assert_eq!(a.to_string(), "110");
    }

    #[test]
    fn hex_form() {
        let t = TruthTable::from_bit_string("10001111").unwrap();
        assert_eq!(t.to_string(), "tt:3:8F");
        assert_eq!("tt:3:8F".parse::<TruthTable>().unwrap(), t);
        let small = TruthTable::var(1, 1).unwrap();
        assert_eq!(small.to_string(), "tt:1:4");
        assert_eq!("tt:1:4".parse::<TruthTable>().unwrap(), small);
        assert!("tt:1:5".parse::<TruthTable>().is_err());
        assert!("tt:3:8".parse::<TruthTable>().is_err());
    }

    #[test]
    fn not_keeps_tail_clear() {
        let t = TruthTable::constant(3, false).unwrap();
        let n = !&t;
        assert_eq!(n.count_ones(), 8);
        assert_eq!(n.is_constant(), Some(true));
    }

    #[test]
    fn cap_enforced() {
        assert!(TruthTable::zero(MAX_TABLE_VARS + 1).is_err());
        assert!(TruthTable::zero(MAX_TABLE_VARS).is_ok());
    }

    #[test]
    fn wide_tables_index_words() {
        let x1 = TruthTable::var(8, 1).unwrap();
        assert_eq!(x1.count_ones(), 128);
        assert!(!x1.get(127) && x1.get(128));
        let x8 = TruthTable::var(8, 8).unwrap();
        assert!(x8.get(1) && !x8.get(2));
    }
}
