//! Truncated (hyperideal) hyperbolic tetrahedra: conversion between
//! dihedral angles and edge lengths, volumes, Schläfli gradients, and
//! sampling checks of volume maximization among tetrahedra with a lower
//! bound on edge lengths.

pub mod convert;
pub mod domain;
pub mod error;
pub mod extremal;
pub mod schlafli;
pub mod specfun;
pub mod volume;

pub use convert::{angles_to_lengths, in_l, lengths_to_angles};
pub use domain::{DihedralAngles, EdgeLengths, Tetrahedron, VertexPermutation};
pub use error::{Error, Result};
pub use volume::{regular_volume_l0, ushijima_volume};

/// `ℓ₀ = arccosh((3 + √3) / 4)`, the edge length of the regular truncated
/// tetrahedron with all dihedral angles π/6.
pub fn ell_0() -> f64 {
    ((3.0 + 3f64.sqrt()) / 4.0).acosh()
}
