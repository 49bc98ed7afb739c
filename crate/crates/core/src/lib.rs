//! Numerical experiments for the boundary-point (Hopf) lemma and its
//! quantitative form for `-div(sigma grad u) = 0` on the unit disk.
//!
//! The pipeline is: [`mesh`] builds an acute disk triangulation,
//! [`coefficients`] supplies the conductivity `sigma`, [`solver`] computes P1
//! solutions, [`functionals`] measures `d_nu u(x0)` and the L1 deviations from
//! the boundary maximum, [`kernels`] builds discrete harmonic measures and
//! Green functions, [`barrier`] certifies the barrier lower bound and
//! [`experiments`] runs the boundary-data sweep with its log-log fit.
//!
//! ```
//! use hopflab::coefficients::{ConductivityField, FieldKind};
//! use hopflab::functionals::hopf_report;
//! use hopflab::mesh::generate_disk_mesh;
//! use hopflab::solver::assemble_system;
//!
//! let mesh = generate_disk_mesh(0.2)?;
//! let field = ConductivityField::preset(FieldKind::Gaussian)?;
//! let u = assemble_system(&mesh, &field, |_| 0.0, |p| p.y)?.solve(1e-10)?;
//! let report = hopf_report(&u)?;
//! assert!(report.normal_derivative > 0.0);
//! # Ok::<(), hopflab::Error>(())
//! ```

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geometry;
pub mod kernels;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{SymMat2, Vec2};
