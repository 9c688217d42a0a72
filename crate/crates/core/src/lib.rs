//! Two-phase solution-path validation for data-driven chance-constrained
//! optimization.
//!
//! Phase one turns a data-driven reformulation with a scalar conservativeness
//! parameter `s` into a solution path `{x*(s_j)}`; phase two picks the least
//! conservative candidate whose held-out constraint satisfaction clears a
//! statistical margin.

pub mod harness;
pub mod instances;
pub mod mathkit;
pub mod reformulations;
pub mod solvers;
pub mod validators;
