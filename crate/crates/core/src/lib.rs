//! Haar-averaged fidelity statistics for quantum gates.
//!
//! For a map `M = U0^dagger N` (target `U0`, actual operation `N`) the
//! fidelity of an input `|psi>` is `f = |<psi|M|psi>|^2`. This crate provides
//!
//! * closed-form mean and second moment of `f` over Haar-uniform inputs, for
//!   full-space maps, subspace-restricted maps and Kraus-form channels
//!   ([`moments`]);
//! * the exact distribution of `f` for 2x2 normal maps ([`qubit_dist`]);
//! * Monte Carlo estimators and exact sphere-monomial integrals that serve as
//!   independent oracles ([`sampler`]);
//! * a box-constrained simplex optimizer over parameterized gates ([`optimizer`]).
//!
//! ```
//! use qfid::linalg::{polar, ComplexMatrix};
//! use qfid::moments::avg_fidelity;
//! use std::f64::consts::PI;
//!
//! let m = ComplexMatrix::diag(&[polar(0.7, PI / 8.0), polar(0.8, 4.0 * PI / 5.0)]);
//! assert_eq!(format!("{:.2}", avg_fidelity(&m)), "0.28");
//! ```
//!
//! Monte Carlo runs parallelize over rayon when the default `parallel`
//! feature is on; disabling it leaves a sequential path with identical
//! results for the same seed and worker count.

pub mod error;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod optimizer;
pub mod qubit_dist;
pub mod random;
pub mod sampler;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Complex, ComplexMatrix, QubitSpectrum, SubspaceSelector};
pub use moments::{GateSpec, KrausMap, MomentReport};
pub use qubit_dist::FidelityDistribution;
pub use sampler::{McConfig, McEstimate};
