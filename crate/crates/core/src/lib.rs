//! Normalizing constants of the matrix Bingham and matrix Langevin
//! distributions on the Stiefel manifold `V_{d,p}`.
//!
//! Both constants are hypergeometric functions of matrix argument,
//!
//! ```text
//! Phi_{d,p}(A, S) = sum_k 1/k! sum_{|kappa|=k, l(kappa)<=p} C_kappa(A) C_kappa(S) / C_kappa(I_d)
//! Psi_{d,p}(B)    = sum_k 1/k! sum_{|kappa|=k, l(kappa)<=p} C_kappa(B'B/4) / (d/2)_kappa
//! ```
//!
//! evaluated here from exact zonal polynomial coefficients. Truncating after
//! degree `m - 1` leaves a remainder that [`bounds`] encloses from above
//! (series and closed form) and below, and [`stiefel_mc`] cross-checks by
//! sampling the uniform measure on `V_{d,p}`.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`linalg`] | symmetric/rectangular matrices, Jacobi eigensolver, Householder QR |
//! | [`partitions`] | partitions, lexicographic order, shifted factorials |
//! | [`zonal`] | exact coefficient tables, `C_kappa(I_d)`, monomial symmetric functions |
//! | [`series`] | truncated `0F0`, `0F1`, `1F1` series and certified reference remainders |
//! | [`bounds`] | remainder bounds, constants, `m` selection |
//! | [`verify`] | executable inequality checks with margins |
//! | [`stiefel_mc`] | Haar sampling and Monte Carlo estimators |
//! | [`cli`] | command-line front end |

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod numeric;
pub mod partitions;
pub mod series;
pub mod stiefel_mc;
pub mod verify;
pub mod zonal;

pub use error::{Error, Result};
pub use linalg::{EigenSystem, RectMatrix, SymmetricMatrix};
pub use partitions::Partition;
pub use zonal::{Rational, ZonalCoeffTable};
