//! Numerical laboratory for translates of curved pieces of horospherical
//! subgroups in products of `SL(2,R)/SL(2,Z)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bump;
pub mod curvature;
pub mod equidist;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod homspace;
pub mod linalg;
pub mod par;
pub mod policy;
pub mod poly;
pub mod qmc;
pub mod quad;
pub mod rng;
pub mod sl2;
pub mod submanifold;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
