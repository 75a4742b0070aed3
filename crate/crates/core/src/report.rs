//! Per-relation results shared by both realizations.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    /// the run stopped at its time budget before every basis state was checked
    Incomplete,
}

/// The first basis element on which the two sides differ, and the output
/// component whose coefficients disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub basis: String,
    pub component: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub id: String,
    pub status: Status,
    pub witness: Option<Witness>,
    /// coefficient of `witness.component` on the left side
    pub lhs: Option<String>,
    pub rhs: Option<String>,
    /// number of basis elements both sides were applied to
    pub checked: usize,
    /// outcome of the seeded rational substitutions
    pub numeric: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RelationReport {
    pub fn pass(id: impl Into<String>, checked: usize, numeric: Status) -> Self {
        RelationReport {
            id: id.into(),
            status: Status::Pass,
            witness: None,
            lhs: None,
            rhs: None,
            checked,
            numeric,
            note: None,
        }
    }

    pub fn fail(
        id: impl Into<String>,
        checked: usize,
        witness: Witness,
        lhs: String,
        rhs: String,
    ) -> Self {
        RelationReport {
            id: id.into(),
            status: Status::Fail,
            witness: Some(witness),
            lhs: Some(lhs),
            rhs: Some(rhs),
            checked,
            numeric: Status::NotApplicable,
            note: None,
        }
    }

    pub fn not_applicable(id: impl Into<String>, note: impl Into<String>) -> Self {
        RelationReport {
            id: id.into(),
            status: Status::NotApplicable,
            witness: None,
            lhs: None,
            rhs: None,
            checked: 0,
            numeric: Status::NotApplicable,
            note: Some(note.into()),
        }
    }

    pub fn incomplete(
        id: impl Into<String>,
        checked: usize,
        numeric: Status,
        note: impl Into<String>,
    ) -> Self {
        RelationReport {
            id: id.into(),
            status: Status::Incomplete,
            witness: None,
            lhs: None,
            rhs: None,
            checked,
            numeric,
            note: Some(note.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// FNV-1a, used to derive a per-relation seed from its id.
pub fn id_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
