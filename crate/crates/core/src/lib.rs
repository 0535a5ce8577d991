//! Generalized inverses with prescribed complements, co-final sets of
//! subspace families, numerical Frobenius integration and charts for
//! fixed-rank matrix manifolds.

pub mod builtins;
pub mod config;
pub mod error;
pub mod family;
pub mod frobenius;
pub mod geninv;
pub mod io;
pub mod linalg;
pub mod opmanifold;
pub mod sampling;
pub mod verify;

pub use config::Config;
pub use error::{Error, Result};
pub use linalg::{Matrix, Subspace, Vector};
