//! Verification reports shared by the exhaustive checkers and the CLI.

use serde::Serialize;

/// Upper limit on failures stored with witnesses; later ones are only counted.
pub const MAX_WITNESSES: usize = 25;

/// One failed case with enough context to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub case: String,
    pub clause: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<String>,
}

impl Failure {
    pub fn new(case: impl Into<String>, clause: impl Into<String>) -> Self {
        Self {
            case: case.into(),
            clause: clause.into(),
            gate: None,
            pair: None,
            circuit: None,
            replay: None,
        }
    }

    pub fn gate(mut self, g: impl Into<String>) -> Self {
        self.gate = Some(g.into());
        self
    }

    pub fn pair(mut self, x: impl ToString, y: impl ToString) -> Self {
        self.pair = Some((x.to_string(), y.to_string()));
        self
    }

    pub fn circuit(mut self, c: impl Into<String>) -> Self {
        self.circuit = Some(c.into());
        self
    }

    pub fn replay(mut self, r: impl Into<String>) -> Self {
        self.replay = Some(r.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub pass: bool,
    pub cases: u64,
    pub failure_count: u64,
    pub failures: Vec<Failure>,
    /// Largest observed cost (bits, depth or size, per suite).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cost: Option<u64>,
    /// Bound that `max_cost` is checked against, when it is a single number.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    /// Set when a time budget cut the case stream short.
    pub truncated: bool,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            pass: true,
            cases: 0,
            failure_count: 0,
            failures: Vec::new(),
            max_cost: None,
            bound: None,
            truncated: false,
            wall_time_ms: 0,
            notes: Vec::new(),
        }
    }

    pub fn fail(&mut self, f: Failure) {
        self.pass = false;
        self.failure_count += 1;
        if self.failures.len() < MAX_WITNESSES {
            self.failures.push(f);
        }
    }

    pub fn observe_cost(&mut self, cost: u64) {
        self.max_cost = Some(self.max_cost.map_or(cost, |m| m.max(cost)));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        let s = s.into();
        if !self.notes.contains(&s) {
            self.notes.push(s);
        }
    }

    /// Folds `other` into `self`. Associative, so parallel partial reports
    /// merged in case order give the same result as a sequential run.
    pub fn merge(&mut self, other: VerificationReport) {
        self.cases += other.cases;
        self.pass &= other.pass;
        self.failure_count += other.failure_count;
        for f in other.failures {
            if self.failures.len() < MAX_WITNESSES {
                self.failures.push(f);
            }
        }
        if let Some(c) = other.max_cost {
            self.observe_cost(c);
        }
        self.truncated |= other.truncated;
        for n in other.notes {
            self.note(n);
        }
    }
}
