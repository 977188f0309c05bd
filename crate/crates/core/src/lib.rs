//! Discontinuous Galerkin solver for single-phase Darcy flow in a porous
//! medium cut by one fracture whose aperture varies along its length.
//!
//! The crate provides a full-dimensional reference model, in which the
//! fracture is a thin meshed subdomain, and four reduced interface models
//! (`I`, `I-R`, `II`, `II-R`) that collapse the fracture onto a line. The
//! reduced models differ in whether aperture gradients enter the interface
//! transport equation and whether the bulk domains are rectified.
//!
//! Typical use goes through [`models`]: pick a [`models::Problem`] preset,
//! a [`models::Discretization`], and call [`models::run_full`] or
//! [`models::run_reduced`]. [`postproc`] turns solutions into interface
//! errors and sweep tables.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod models;
pub mod postproc;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
