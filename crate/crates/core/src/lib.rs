//! Spectral calculus and cohomology for two-dimensional toroidal groups `C²/L`.

pub mod calculus;
pub mod cohomo;
pub mod lattice;
pub mod primitives;
pub mod specform;
pub mod suites;

pub use lattice::{Lattice, ModeIndex, RealExpr};
