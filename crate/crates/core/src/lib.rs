//! Exact contextuality analysis of bipartite compound systems.
//!
//! A system assigns a joint distribution to each context `(x, y)` of an
//! A-setting and a B-setting. [`contextuality::classify`] decides whether it
//! is a mixture of non-signaling deterministic systems, returning either the
//! mixture or a Bell-type inequality it violates. All arithmetic is exact.

pub mod catalog;
pub mod contextuality;
pub mod feasibility;
pub mod format;
pub mod ks;
pub mod system;

pub use system::{ratio, Context, JointPmf, Label, Rational, Side, SupportSpec, SystemSpec};
