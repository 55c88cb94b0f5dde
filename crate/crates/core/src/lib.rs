//! Guaranteed error majorants for evolutionary convection–diffusion
//! problems `u_t - Δu + a·∇u = f` on boxes with homogeneous Dirichlet data.

pub mod closed_form;
pub mod error;
pub mod fields;
pub mod flux_recon;
pub mod harness;
pub mod linalg;
pub mod majorant;
pub mod mesh;
pub mod nonconforming;
pub mod problem;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
