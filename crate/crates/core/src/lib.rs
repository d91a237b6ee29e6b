//! Superselection-sector calculus on finite-dimensional nets of observables.

pub mod algebra;
pub mod conjugate;
pub mod document;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod intertwine;
pub mod left_inverse;
pub mod linalg;
pub mod net;
pub mod object;
pub mod presheaf;
pub mod site;
pub mod statistics;
pub mod symmetry;

pub use error::{Error, Result};
