//! Adaptive P1 finite elements for quasilinear diffusion problems with steep
//! layers.
//!
//! The nonlinear system on each mesh is solved by a damped Newmark-type
//! iteration with adaptive dissipation `gamma`, source scaling `delta` and
//! a masked Laplacian regularization. Meshes are refined by newest-vertex
//! bisection driven by residual indicators and Dörfler marking.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod stabilizer;

pub use error::{Error, Result};
