//! Exact verification of q-difference and free-boson realizations of
//! quantum superalgebras.

pub mod affine;
pub mod error;
pub mod finite;
pub mod grassmann;
pub mod harness;
pub mod report;
pub mod ring;
pub mod structure;

pub use error::Error;
