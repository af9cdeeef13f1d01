//! Pass/fail records shared by every identity suite.

use serde::Serialize;

use crate::ring::RingElem;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub lhs: String,
    pub rhs: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn equal(name: impl Into<String>, lhs: &RingElem, rhs: &RingElem) -> Check {
        Check { name: name.into(), passed: lhs == rhs, lhs: lhs.to_string(), rhs: rhs.to_string(), note: None }
    }

    pub fn zero(name: impl Into<String>, e: &RingElem) -> Check {
        Check::equal(name, e, &RingElem::zero())
    }

    pub fn flag(name: impl Into<String>, passed: bool, lhs: impl Into<String>, rhs: impl Into<String>) -> Check {
        Check { name: name.into(), passed, lhs: lhs.into(), rhs: rhs.into(), note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Report {
        Report { suite: suite.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}
