//! Numerical toolkit for perturbation theory of matrix semigroups.
//!
//! Generators are dense complex matrices ([`LinearOperator`]); semigroups are
//! their exponentials. The modules certify growth envelopes, relative
//! bounds of perturbations, perturbed-generation bounds, Yosida distances
//! and exponential dichotomies, turning each inequality into a check that
//! reports pass, tight, fail or marginal.

pub mod catalog;
pub mod cli;
pub mod dichotomy;
pub mod error;
pub mod expm;
pub mod grid;
pub mod hille_yosida;
pub mod matrix_io;
pub mod operator;
pub mod perturbation;
pub mod report;
pub mod schur;
pub mod suite;
pub mod tol;
pub mod verdict;

pub use error::{LabError, Result};
pub use expm::matrix_exponential;
pub use grid::{ScalarGrid, Spacing};
pub use operator::{
    op_norm, resolvent, shift_generator, spectrum, LinearOperator, SpectralData,
};
