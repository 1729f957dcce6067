//! Circular restricted n-body problem toolkit.

pub mod bodies;
pub mod dynamics;
pub mod ephem;
pub mod error;
pub mod fli;
pub mod orbits;
pub mod propagate;
pub mod scenarios;

pub use bodies::SystemModel;
pub use dynamics::State6;
pub use error::{Error, Result};
