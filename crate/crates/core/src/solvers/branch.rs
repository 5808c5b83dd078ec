//! Branch choices at the discontinuity set.
//!
//! A branch is a list of rules. A rule names a group of pairs and a wait. It
//! arms the first time all of its pairs sit at distance one together; after
//! the wait its pairs are switched on (or, for `Never`, held off for good).
//! While an armed rule is still waiting its pairs are held off, and every
//! other boundary pair met in the same event stays off too: a branch that
//! speaks about an event decides the whole event.
//!
//! Textual form, tokens separated by whitespace or `;`:
//!
//! ```text
//! wait=0:1-2+2-3     switch (1,2) and (2,3) on as soon as both touch
//! wait=1.5:1-2       hold (1,2) off for 1.5, then switch it on
//! wait=inf:all       never switch anything on (also `never:all`)
//! ```
//!
//! `all` (or `both`) matches the full set of boundary pairs of the first event.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::model::Pair;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wait {
    After(f64),
    Never,
}

impl fmt::Display for Wait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wait::After(d) => write!(f, "{d}"),
            Wait::Never => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Pairs(Vec<Pair>),
    /// Every boundary pair of the first event.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationRule {
    pub target: Target,
    pub wait: Wait,
}

impl ActivationRule {
    pub fn after(pairs: &[Pair], wait: f64) -> Self {
        Self { target: Target::Pairs(sorted(pairs)), wait: Wait::After(wait) }
    }

    pub fn never(pairs: &[Pair]) -> Self {
        Self { target: Target::Pairs(sorted(pairs)), wait: Wait::Never }
    }
}

fn sorted(pairs: &[Pair]) -> Vec<Pair> {
    let mut v = pairs.to_vec();
    v.sort();
    v.dedup();
    v
}

/// An empty spec leaves every event to the default graph resolution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub rules: Vec<ActivationRule>,
}

impl BranchSpec {
    pub fn new(rules: Vec<ActivationRule>) -> Result<Self, SolverError> {
        let spec = Self { rules };
        spec.validate()?;
        Ok(spec)
    }

    /// The default resolution everywhere.
    pub fn resolve() -> Self {
        Self::default()
    }

    pub fn rule(mut self, rule: ActivationRule) -> Result<Self, SolverError> {
        self.rules.push(rule);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for r in &self.rules {
            if let Wait::After(d) = r.wait {
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(SolverError::Branch(format!("wait {d} must be finite and nonnegative")));
                }
            }
            if let Target::Pairs(p) = &r.target {
                if p.is_empty() {
                    return Err(SolverError::Branch("a rule needs at least one pair".into()));
                }
            }
        }
        for (a, ra) in self.rules.iter().enumerate() {
            for rb in &self.rules[a + 1..] {
                if let (Target::Pairs(pa), Target::Pairs(pb)) = (&ra.target, &rb.target) {
                    if let Some(p) = pa.iter().find(|p| pb.contains(p)) {
                        return Err(SolverError::Branch(format!("pair {p} appears in two rules")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn has_positive_wait(&self) -> bool {
        self.rules.iter().any(|r| matches!(r.wait, Wait::After(d) if d > 0.0))
    }

    pub fn parse(text: &str) -> Result<Self, SolverError> {
        let mut rules = Vec::new();
        for tok in text.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty()) {
            rules.push(parse_rule(tok)?);
        }
        Self::new(rules)
    }
}

fn parse_rule(tok: &str) -> Result<ActivationRule, SolverError> {
    let bad = |why: &str| SolverError::Branch(format!("bad rule {tok:?}: {why}"));
    let (head, pairs) = tok.split_once(':').ok_or_else(|| bad("expected wait=<t>:<pairs>"))?;
    let wait = match head.trim() {
        "never" => Wait::Never,
        h => {
            let v = h.strip_prefix("wait=").ok_or_else(|| bad("expected wait=<t>"))?;
            match v.to_ascii_lowercase().as_str() {
                "inf" | "never" | "infinity" => Wait::Never,
                s => Wait::After(s.parse::<f64>().map_err(|_| bad("wait is not a number"))?),
            }
        }
    };
    let target = match pairs.trim() {
        "all" | "both" => Target::All,
        p => {
            let mut v = Vec::new();
            for part in p.split('+') {
                v.push(Pair::parse_one_based(part).ok_or_else(|| bad(&format!("bad pair {part:?}")))?);
            }
            Target::Pairs(sorted(&v))
        }
    };
    Ok(ActivationRule { target, wait })
}

impl fmt::Display for BranchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rules.is_empty() {
            return f.write_str("resolve");
        }
        for (k, r) in self.rules.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "wait={}:", r.wait)?;
            match &r.target {
                Target::All => f.write_str("all")?,
                Target::Pairs(p) => {
                    let s: Vec<String> = p.iter().map(Pair::to_string).collect();
                    f.write_str(&s.join("+"))?;
                }
            }
        }
        Ok(())
    }
}
