//! Laws of the maximal out-degree of Galton-Watson trees.
//!
//! The crate computes, for an offspring distribution `p`, the distribution of
//!
//! * `M_n`, the largest out-degree among the vertices of generation `n`
//!   ([`exact::generation_cdf`]),
//! * `M_[0,n]`, the largest out-degree over generations `0..=n`
//!   ([`exact::local_cdf`]),
//! * `M`, the largest out-degree of the whole tree ([`global::global_cdf`]),
//!
//! by composing truncated probability generating functions and by solving
//! the fixed-point equation `G_r(t) = t`. The [`asymptotics`] module tabulates
//! the tail laws these quantities obey, and [`montecarlo`] samples trees as an
//! independent check of every exact formula.
//!
//! All probability arithmetic goes through [`CdfPoint`], which carries a
//! probability together with its complement so that tails far below machine
//! epsilon keep their relative precision.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod asymptotics;
mod error;
pub mod exact;
pub mod global;
pub mod montecarlo;
pub mod offspring;
mod point;
pub mod special;
pub mod sum;

pub use error::{Error, Result};
pub use offspring::{
    Criticality, OffspringDistribution, OffspringFamily, OffspringSpec, Truncation,
};
pub use point::CdfPoint;
