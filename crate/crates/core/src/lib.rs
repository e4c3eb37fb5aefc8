//! Discrete temporal function bases and the machinery around them.
//!
//! * [`basis`]: Fourier, cosine, Legendre (naive and mean sampled) and Haar
//!   basis transformation matrices.
//! * [`dlop`]: Discrete Legendre Orthogonal Polynomials via a stable
//!   recurrence, an exact big-integer closed form and a rational oracle.
//! * [`ldn`]: the Legendre Delay Network LTI system, its zero-order-hold and
//!   Euler discretizations, and the induced basis.
//! * [`recon`]: least-squares identification of discrete LTI systems from
//!   arbitrary bases, with dampening, and inverse discretization.
//! * [`filtering`]: pseudo-inverses, signal band-limiting and basis low-pass
//!   filtering.
//! * [`sliding`]: per-sample FIR and LTI coefficient runners.
//! * [`bench`]: the delay-decoding benchmark.
//!
//! ```
//! use tempo_bases::basis::{cosine_basis, orthonormality_error};
//!
//! let e = cosine_basis(8, 32)?;
//! assert!(orthonormality_error(&e) < 1e-12);
//! # Ok::<(), tempo_bases::Error>(())
//! ```

pub mod basis;
pub mod bench;
pub mod dlop;
pub mod error;
pub mod filtering;
pub mod io;
pub mod ldn;
pub mod linalg;
pub mod recon;
pub mod selfcheck;
pub mod sliding;

pub use basis::{BasisKind, BasisMatrix, CoefficientVector, ColumnConvention, Sampling, Signal};
pub use error::{Error, Result};
pub use ldn::{DiscreteLti, Discretization, LtiSystem};
