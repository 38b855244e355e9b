use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Vacated,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Vacated => "VACATED",
        };
        f.write_str(s)
    }
}

/// Outcome of one named verification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// Range that was actually examined.
    pub scope: String,
    pub witnesses: Vec<String>,
    pub counterexample: Option<String>,
    pub millis: u64,
}

const MAX_WITNESSES: usize = 64;

impl CheckResult {
    fn new(name: &str, status: Status, scope: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            status,
            scope: scope.into(),
            witnesses: Vec::new(),
            counterexample: None,
            millis: 0,
        }
    }

    pub fn pass(name: &str, scope: impl Into<String>) -> Self {
        Self::new(name, Status::Pass, scope)
    }

    pub fn fail(name: &str, scope: impl Into<String>, counterexample: impl Into<String>) -> Self {
        let mut r = Self::new(name, Status::Fail, scope);
        r.counterexample = Some(counterexample.into());
        r
    }

    pub fn inconclusive(name: &str, scope: impl Into<String>) -> Self {
        Self::new(name, Status::Inconclusive, scope)
    }

    pub fn vacated(name: &str, scope: impl Into<String>) -> Self {
        Self::new(name, Status::Vacated, scope)
    }

    /// Pass, or Fail carrying the first counterexample.
    pub fn from_outcome(name: &str, scope: impl Into<String>, counterexample: Option<String>) -> Self {
        match counterexample {
            None => Self::pass(name, scope),
            Some(c) => Self::fail(name, scope, c),
        }
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.push_witness(w);
        self
    }

    pub fn push_witness(&mut self, w: impl Into<String>) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w.into());
        }
    }

    pub fn is_fail(&self) -> bool {
        self.status == Status::Fail
    }

    /// Folds `other` into `self`: the worse status wins, scopes and witnesses are concatenated.
    pub fn merge(mut self, other: CheckResult) -> Self {
        let rank = |s: Status| match s {
            Status::Pass => 0,
            Status::Vacated => 1,
            Status::Inconclusive => 2,
            Status::Fail => 3,
        };
        if rank(other.status) > rank(self.status) {
            self.status = other.status;
        }
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
        if !other.scope.is_empty() {
            if self.scope.is_empty() {
                self.scope = other.scope;
            } else {
                self.scope = format!("{}; {}", self.scope, other.scope);
            }
        }
        for w in other.witnesses {
            self.push_witness(w);
        }
        self
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<16} {:<12} {}", self.name, self.status.to_string(), self.scope)?;
        if let Some(c) = &self.counterexample {
            write!(f, " | counterexample: {c}")?;
        }
        Ok(())
    }
}
