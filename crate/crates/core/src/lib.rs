//! Uniallpass feedback delay networks: systems that stay allpass for every
//! choice of delay lengths.

pub mod allpass;
pub mod complete;
pub mod designs;
pub mod error;
pub mod fixtures;
pub mod gcp;
pub mod homogeneous;
pub mod io;
pub mod linalg;
pub mod response;
pub mod system;
pub mod verify;

pub use error::{FdnError, Result};
pub use system::{DelayVector, FdnSystem, SystemMatrix};
