//! Exact probabilities of discrete projection determinantal processes, their
//! conditional variants, and numerical verification of the negative
//! correlation identities satisfied by processes conditioned on events of the
//! form `A_i ⊄ φ`.
//!
//! Ground-set indices are 1-based everywhere in the public API.

pub mod cs;
pub mod dpp;
pub mod error;
pub mod exterior;
pub mod harness;
pub mod identities;
pub mod linalg;

pub use error::{Error, Result};
pub use exterior::IndexCombo;
