//! Achievable laws of sums of standard uniform random variables.
//!
//! Exact rational deciders for membership in the aggregation set, explicit
//! couplings for the two-margin atomic cases, sharp interval-probability
//! bounds for three or more margins, and a discretized linear-feasibility
//! oracle used to cross-check all of them.

pub mod bounds;
pub mod convex;
pub mod coupling;
pub mod decision;
pub mod distribution;
pub mod error;
pub mod membership;
pub mod oracle;
pub mod rational;
pub mod simplex;

pub use bounds::{cdf_bounds, extremal_sum_distribution, max_closed_interval, min_open_interval, AttainingKind, BoundResult};
pub use convex::convex_order_vs_uniform;
pub use decision::{Certificate, Decision, Direction, Rule, ShapeHint, TriAtomicCase, Verdict};
pub use distribution::{Atom, MixtureDistribution, StopLossValue, UniformPiece};
pub use membership::{decide, non_integrity};
pub use error::{Error, Result};
pub use oracle::{discretize, feasible, grid_extreme_prob, GridJoint, GridSpec, GridTarget, GridVerdict};
pub use rational::{q, Rational};
pub use simplex::Sense;
