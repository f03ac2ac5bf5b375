//! Numerical laboratory for the conformal growth process of SLE_κ excursions.

pub mod capacity;
pub mod conformal;
pub mod error;
pub mod exponent;
pub mod extended;
pub mod field;
pub mod growth;
pub mod hypergeom;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod subordinator;
pub mod validate;

pub use error::{Error, Result};
pub use extended::Extended;
