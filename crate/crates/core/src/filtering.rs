//! Pseudo-inverses, band-limiting of signals and low-pass filtering of basis
//! matrices through a Fourier projection.

use nalgebra::{DMatrix, DVector};

use crate::basis::{fourier_basis, BasisKind, BasisMatrix, ColumnConvention, Signal};
use crate::error::{Error, Result};
use crate::linalg::pinv;

/// Default relative singular-value cutoff for the full-rank check.
pub const PINV_RCOND: f64 = 1e-12;

fn time_forward(e: &BasisMatrix) -> DMatrix<f64> {
    e.to_convention(ColumnConvention::TimeForward).data().clone()
}

/// Right pseudo-inverse `E^+ = E^T (E E^T)^{-1}` (`N x q`), so `E E^+ = I`.
pub fn pseudo_inverse(e: &BasisMatrix) -> Result<DMatrix<f64>> {
    pinv(&time_forward(e), PINV_RCOND, "pseudo_inverse")
}

/// Projects `u` onto the row space of `E`: `u' = E^+ E u`. The coefficients
/// `E u'` equal `E u`.
pub fn bandlimit_signal(e: &BasisMatrix, u: &Signal) -> Result<Signal> {
    let n = e.n();
    if u.len() != n {
        return Err(Error::LengthMismatch {
            op: "bandlimit_signal",
            expected: n,
            found: u.len(),
        });
    }
    let tf = time_forward(e);
    let e_pinv = pinv(&tf, PINV_RCOND, "bandlimit_signal")?;
    let m = &tf * DVector::from_column_slice(u.samples());
    let projected = e_pinv * m;
    Signal::new(projected.as_slice().to_vec())
}

/// A basis whose rows have been projected onto the first `q_prime` Fourier
/// rows. Rows are not re-normalized.
#[derive(Debug, Clone)]
pub struct FilteredBasis {
    pub base: BasisMatrix,
    pub q_prime: usize,
    /// `E F^T F`, TimeForward.
    pub data: DMatrix<f64>,
}

impl FilteredBasis {
    /// Row-normalized copy usable wherever a [`BasisMatrix`] is expected.
    pub fn to_basis(&self) -> Result<BasisMatrix> {
        BasisMatrix::from_raw(self.data.clone(), BasisKind::Filtered, ColumnConvention::TimeForward)
    }
}

/// `M F^T F` with `F` the first `q_prime` Fourier rows over `M.ncols()`
/// samples.
pub fn lowpass_filter_matrix(m: &DMatrix<f64>, q_prime: usize) -> Result<DMatrix<f64>> {
    let f = fourier_basis(q_prime, m.ncols())?;
    Ok((m * f.data().transpose()) * f.data())
}

/// Low-pass filters each row of `E` by projection onto `q_prime` Fourier rows.
pub fn lowpass_filter_basis(e: &BasisMatrix, q_prime: usize) -> Result<FilteredBasis> {
    let data = lowpass_filter_matrix(&time_forward(e), q_prime)?;
    Ok(FilteredBasis {
        base: e.clone(),
        q_prime,
        data,
    })
}
