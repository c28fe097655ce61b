//! Exact combinatorics of multi-normal deformations.
//!
//! Given the action matrix of a family of submanifolds and a base point on
//! the zero section, the crate builds the generator semigroups, eliminates
//! auxiliary variables, emits multicone inequality systems, level functions
//! and the index sets of multi-asymptotic expansions.

pub mod rat;
pub mod linalg;
pub mod lp;
pub mod monomial;
pub mod deformation;
pub mod semigroup;
pub mod levels;
pub mod restriction;
pub mod poly;
pub mod multicone;
pub mod asymptotics;
pub mod fixtures;
pub mod report;

#[cfg(test)]
mod props;
