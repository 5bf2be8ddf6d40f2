//! Numerical toolkit for the quasihyperbolic metric of Euclidean domains.
//!
//! The crate computes quasihyperbolic lengths and distances, certified
//! ε-short arcs, and empirical estimates of the constants that appear in the
//! theory of uniform and John domains and of weakly quasisymmetric maps.
//! Experiments that check the associated inequalities on seeded samples live
//! in [`experiments`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod conditions;
pub mod domain;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod geom;
mod lattice;
pub mod maps;
pub mod paths;
pub mod qh;
pub mod quadrature;

pub use domain::{Aabb, Domain, DomainKind, DomainSpec};
pub use error::{QhError, Result};
pub use estimate::{ConstantEstimate, Sidedness};
pub use geom::{ArcPolyline, Point};
pub use maps::{MapKind, MapSpec};
pub use paths::{PathGraph, ShortArcResult};
pub use qh::{CoarseLengthResult, QhDistance, QhLengthResult};
