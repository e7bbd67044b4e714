//! Askey-Wilson signed measures, the Uchiyama-Sasamoto-Wadati matrix
//! representation, and the multi-time Markov description of the open
//! asymmetric simple exclusion process.
//!
//! Module layout, bottom to top:
//! - [`qcore`]: q-Pochhammer symbols, `4phi3`, log-scaled arithmetic
//! - [`awpoly`]: Askey-Wilson polynomials and connection coefficients
//! - [`awmeasure`]: signed Askey-Wilson measures and their quadrature
//! - [`asepmap`]: boundary-rate parametrization and phase classification
//! - [`usw_mpa`]: tridiagonal matrix representation and generating functions
//! - [`oracle`]: brute-force stationary law on `2^n` configurations
//! - [`multitime`]: marginal and transition measures, Laplace-transform pinning
//! - [`asymptotics`]: large-`n` predictions and empirical transforms

pub mod error;
pub mod qcore;
pub mod quad;
pub mod awpoly;
pub mod awmeasure;
pub mod asepmap;
pub mod usw_mpa;
pub mod oracle;
pub mod multitime;
pub mod asymptotics;

pub use error::{Error, Result};
