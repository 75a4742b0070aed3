//! q-difference realization of `U_q(sl(M|N))` and its relation checks.

pub mod checks;
pub mod ops;
pub mod realization;

pub use checks::{
    check_bracket_identities, check_chevalley, check_intermediate, check_remarks, Checker, Instance,
};
pub use ops::{Atom, AtomId, AtomKind, Lowering, OpExpr, QDiffOp};
pub use realization::{FiniteRealization, Sabotage, SabotageMode, Variant};
