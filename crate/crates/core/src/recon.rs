//! Identification of a discrete LTI system `(A, B)` whose impulse response
//! reproduces the columns of a basis matrix, plus dampening and inverse
//! discretization.
//!
//! In impulse order the basis columns are `R_0 = B`, `R_1 = A B`, ...; the
//! newest-sample column of a TimeForward matrix is `R_0`. `B` is read off
//! directly and `A` is the least-squares map `R_j -> R_{j+1}`.

use nalgebra::DMatrix;

use crate::basis::{BasisMatrix, ColumnConvention};
use crate::error::{Error, Result};
use crate::ldn::{discretize_lti, solve_checked, DiscreteLti, Discretization, LtiSystem};
use crate::linalg::{eigenvalues, logm, lstsq, pinv};

/// How to make the identified system forget samples older than the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dampening {
    #[default]
    None,
    /// Append the weighted equation `A R_{N-1} = 0`.
    Lstsq,
    /// Project out the oldest sample's contribution after each update.
    Erasure,
}

impl std::str::FromStr for Dampening {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Dampening::None),
            "lstsq" => Ok(Dampening::Lstsq),
            "erasure" => Ok(Dampening::Erasure),
            other => Err(Error::InvalidArgument(format!("unknown dampening '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    pub dampen: Dampening,
    pub theta: f64,
    /// Relative singular-value cutoff for the least-squares solve.
    pub rcond: f64,
    /// Treat the input as row-normalized and restore its pre-normalization
    /// row scale when the basis carries it. Without the scale the recovered
    /// system differs from the generating one by a diagonal similarity.
    pub assume_normalized: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            dampen: Dampening::None,
            theta: 1.0,
            rcond: 1e-12,
            assume_normalized: true,
        }
    }
}

impl ReconstructionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.rcond > 0.0 && self.rcond < 1.0) {
            return Err(Error::InvalidArgument(format!("rcond must lie in (0, 1), got {}", self.rcond)));
        }
        Ok(())
    }
}

/// The matrix identification works on: TimeForward, with the raw row scale
/// restored when requested and known.
fn working_matrix(basis: &BasisMatrix, assume_normalized: bool) -> DMatrix<f64> {
    let tf = basis.to_convention(ColumnConvention::TimeForward);
    if assume_normalized {
        tf.unnormalized()
    } else {
        tf.data().clone()
    }
}

/// Weight of the least-squares dampening equation.
pub fn lstsq_dampening_weight(q: usize, n: usize) -> f64 {
    (n as f64 - 1.0) / (q.max(2) as f64 - 1.0)
}

/// Least-squares identification of `(A, B)` from a basis matrix.
pub fn reconstruct_discrete_lti(basis: &BasisMatrix, cfg: &ReconstructionConfig) -> Result<DiscreteLti> {
    cfg.validate()?;
    let e = working_matrix(basis, cfg.assume_normalized);
    let d = reconstruct_from_matrix(&e, cfg.dampen, cfg.rcond)?;
    if cfg.dampen == Dampening::Erasure {
        let p = projector_from_matrix(&e)?;
        return Ok(apply_projector(&d, &p));
    }
    Ok(d)
}

/// Identification on a raw TimeForward matrix (no row rescaling).
pub fn reconstruct_from_matrix(e: &DMatrix<f64>, dampen: Dampening, rcond: f64) -> Result<DiscreteLti> {
    let (q, n) = e.shape();
    if n <= q {
        return Err(Error::InsufficientColumns { q, n, needed: q + 1 });
    }
    // Impulse order: R_j is TimeForward column n - 1 - j.
    let r = |j: usize| e.column(n - 1 - j);
    let extra = usize::from(dampen == Dampening::Lstsq);
    let rows = n - 1 + extra;
    let mut x_t = DMatrix::<f64>::zeros(rows, q);
    let mut y_t = DMatrix::<f64>::zeros(rows, q);
    for j in 0..n - 1 {
        x_t.set_row(j, &r(j).transpose());
        y_t.set_row(j, &r(j + 1).transpose());
    }
    if extra == 1 {
        let w = lstsq_dampening_weight(q, n);
        x_t.set_row(n - 1, &(r(n - 1).transpose() * w));
    }
    let fit = lstsq(&x_t, &y_t, rcond);
    if fit.rank < q {
        log::warn!(
            "reconstruct_discrete_lti: least-squares system has rank {} < q = {q}; solved with cutoff {rcond:e}",
            fit.rank
        );
    }
    Ok(DiscreteLti {
        a: fit.solution.transpose(),
        b: r(0).into_owned(),
        n,
        method: Discretization::Zoh,
    })
}

/// The erasure factor `P = I - c r^T`, where `c` is the oldest-sample column
/// of `E` and `r` is the oldest-sample row of the pseudo-inverse `E^+`.
pub fn erasure_projector(basis: &BasisMatrix, assume_normalized: bool) -> Result<DMatrix<f64>> {
    projector_from_matrix(&working_matrix(basis, assume_normalized))
}

fn projector_from_matrix(e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = e.nrows();
    let e_pinv = pinv(e, 1e-12, "erasure_dampen")?;
    let c = e.column(0);
    let r = e_pinv.row(0);
    Ok(DMatrix::identity(q, q) - c * r)
}

fn apply_projector(d: &DiscreteLti, p: &DMatrix<f64>) -> DiscreteLti {
    DiscreteLti {
        a: p * &d.a,
        b: p * &d.b,
        n: d.n,
        method: d.method,
    }
}

/// Erasure dampening of a system identified from `basis`.
pub fn erasure_dampen(d: &DiscreteLti, basis: &BasisMatrix) -> Result<DiscreteLti> {
    Ok(apply_projector(d, &erasure_projector(basis, true)?))
}

/// Continuous feedback matrix `(N / theta) log(A_d)`.
pub fn continuous_feedback(d: &DiscreteLti, theta: f64) -> Result<DMatrix<f64>> {
    Ok(logm(&d.a)? * (d.n as f64 / theta))
}

/// Inverts the zero-order-hold discretization:
/// `A = (N / theta) log(A_d)`, `B = (A_d - I)^{-1} A B_d`.
pub fn undiscretize_lti(d: &DiscreteLti, theta: f64) -> Result<LtiSystem> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let q = d.order();
    let a = continuous_feedback(d, theta)?;
    let shifted = &d.a - DMatrix::<f64>::identity(q, q);
    let b = solve_checked(&shifted, &(&a * &d.b), "undiscretize_lti").map_err(|_| {
        Error::ReconstructionFailure("A_d - I is singular (A_d has an eigenvalue at 1)".into())
    })?;
    LtiSystem::new(a, b, theta)
}

/// Re-discretizes a continuous system and reports the largest deviation
/// from `d`; a diagnostic for the round trip.
pub fn round_trip_error(d: &DiscreteLti, theta: f64) -> Result<f64> {
    let sys = undiscretize_lti(d, theta)?;
    let back = discretize_lti(&sys, d.n)?;
    let da = crate::linalg::max_abs_diff(&back.a, &d.a);
    let db = (&back.b - &d.b).amax();
    Ok(da.max(db))
}

/// Relative fit residual `||A X - Y||_F / ||E||_F` of an identified system.
pub fn identification_residual(e: &DMatrix<f64>, d: &DiscreteLti) -> f64 {
    let n = e.ncols();
    // TimeForward column k + 1 maps onto column k.
    let later = e.columns(1, n - 1);
    let earlier = e.columns(0, n - 1);
    (&d.a * later - earlier).norm() / e.norm()
}

/// Eigenvalues of the continuous feedback matrix of an identified system.
pub fn continuous_eigenvalues(d: &DiscreteLti, theta: f64) -> Result<Vec<nalgebra::Complex<f64>>> {
    eigenvalues(&continuous_feedback(d, theta)?)
}

/// RMS of the impulse response over steps `[N, 2N)` relative to `[0, N)`.
pub fn impulse_rms_ratio(d: &DiscreteLti) -> f64 {
    let n = d.n;
    let r = crate::ldn::impulse_response(d, 2 * n);
    let head: Vec<f64> = r.rows(0, n).iter().copied().collect();
    let tail: Vec<f64> = r.rows(n, n).iter().copied().collect();
    crate::linalg::rms(&tail) / crate::linalg::rms(&head)
}
