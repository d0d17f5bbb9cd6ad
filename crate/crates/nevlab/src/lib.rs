//! nevlab: a numerical laboratory for the value distribution of holomorphic
//! curves in projective space.
//!
//! The crate measures how fast an entire curve `f: C -> P^n` grows and how
//! often it meets divisors, then cross-checks the classical identities that
//! tie those measurements together: the First Main Theorem, the Jensen
//! formula, Jacobian-section zero divisors, a Schwarz-type norm bound, a
//! Second-Main-Theorem-style identity for twisted Jacobian sections, and
//! covariant-jet machinery for curves guided by a meromorphic connection.
//!
//! Start from the runnable examples (`cargo run -p nevlab --example ...`),
//! one per capability; the `nevlab` binary runs the same pipelines from
//! plain-text config files. See the repository README for the tour.

pub mod config;
pub mod connection;
pub mod curve;
pub mod error;
pub mod experiment;
pub mod exterior;
pub mod expr;
pub mod growth;
pub mod jacobian;
pub mod jet;
pub mod nevanlinna;
pub mod quad;
pub mod zeros;

pub use error::{Error, Result};
