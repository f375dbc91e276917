//! Exact-arithmetic workbench for the computational substructures of relative
//! p-adic Hodge theory at desk scale: toric frames and their combinatorics,
//! truncated characteristic-p perfect closures, length-n Witt vectors and the
//! theta map into cyclotomic rings, the Gamma-action with its analyticity
//! measurements, phi-module slope theory, and the deperfection (descent)
//! algorithms.
//!
//! Everything is exact: norms are stored as rational p-valuations
//! (norm = p^-v), truncation is tracked by explicit error floors, and no
//! floating point appears anywhere.

pub mod rat;
pub mod error;
pub mod linalg;
pub mod ff;
pub mod cones;
pub mod charp;
pub mod witt;
pub mod cyclo;
pub mod wittperiod;
pub mod gamma;
pub mod phimod;
pub mod descent;
pub mod suite;
pub mod io;

pub use error::{Error, Result};
pub use rat::{Rat, Val};
