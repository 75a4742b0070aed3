//! Free boson realization of `U_q(sl-hat(2|1))` acting on a truncated Fock space.

pub mod checks;
pub mod current;
pub mod fock;
pub mod oscillator;

pub use checks::{AffineChecker, AffineConfig};
pub use current::{
    build_current, AffineContext, CompiledCurrent, CurrentName, FConstants, HMode, Level,
};
pub use fock::{basis, basis_in, Fam, FockState, FockVector, MomentumWindow};
