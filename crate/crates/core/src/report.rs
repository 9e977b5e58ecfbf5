//! Named pass/fail checks with explicit tolerances.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::format::fmt_sig;

/// How a check compares its computed value with the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value - target| <= tolerance`
    Equal,
    /// `value <= target + tolerance`
    AtMost,
    /// `value >= target - tolerance`
    AtLeast,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Equal => "eq",
            Relation::AtMost => "le",
            Relation::AtLeast => "ge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, target: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Equal => (value - target).abs() <= tolerance,
            Relation::AtMost => value <= target + tolerance,
            Relation::AtLeast => value >= target - tolerance,
        };
        Self {
            name: name.into(),
            value,
            target,
            relation,
            tolerance,
            pass,
        }
    }

    /// A boolean check recorded as 1/0 against a target of 1.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Equal, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check", "value", "relation", "target", "tolerance", "pass"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                fmt_sig(c.value),
                c.relation.as_str().to_string(),
                fmt_sig(c.target),
                fmt_sig(c.tolerance),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::new("a", 1.0 + 1e-13, Relation::Equal, 1.0, 1e-12).pass);
        assert!(!Check::new("a", 1.1, Relation::Equal, 1.0, 1e-12).pass);
        assert!(Check::new("b", 0.3, Relation::AtMost, 0.6, 0.0).pass);
        assert!(!Check::new("b", 0.7, Relation::AtMost, 0.6, 0.0).pass);
        assert!(Check::new("c", -1e-13, Relation::AtLeast, 0.0, 1e-12).pass);
        assert!(!Check::flag("d", false).pass);
    }

    #[test]
    fn csv_rows() {
        let mut r = VerificationReport::default();
        r.push(Check::new("gap", 0.5, Relation::Equal, 0.5, 1e-9));
        r.push(Check::flag("flag", false));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "check,value,relation,target,tolerance,pass\n\
             gap,0.500000000,eq,0.500000000,1.00000000e-9,true\n\
             flag,0,eq,1.00000000,0,false\n"
        );
        assert!(!r.all_passed());
        assert_eq!(r.failures().count(), 1);
    }
}
