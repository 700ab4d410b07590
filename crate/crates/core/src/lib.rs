//! Discretization and variational eigenvalues of subelliptic p-Laplacians
//! `Σ X_i*(|Xu|^{p−2} X_i u) = λ |u|^{p−2} u` on boxes with Dirichlet data.
//!
//! Modules are layered bottom-up: [`fields`] (vector fields, bracket
//! generation) → [`domain`] (grids, `X`, `X*`) → [`functionals`] (`F`, `G`,
//! gradients, inequality checks) → [`spectrum`] (eigenvalue solvers) and
//! [`metric`] (control distance, Hölder diagnostics).

pub mod domain;
pub mod error;
pub mod exec;
pub mod fields;
pub mod functionals;
pub mod linalg;
pub mod metric;
pub mod spectrum;

pub use domain::{apply_x, apply_x_star, lp_norm, seminorm_x, DiscreteDomain, GridFunction, HorizontalField};
pub use error::{Error, Result};
pub use fields::{BoxRegion, FieldFamily};
