//! The Legendre Delay Network (LDN): a linear time-invariant system whose
//! state approximates the shifted Legendre coefficients of the input over a
//! sliding window of length `theta`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::{fourier_basis, BasisKind, BasisMatrix, ColumnConvention};
use crate::error::{check_order, Error, Result};
use crate::linalg::{expm, max_abs, nrmse, spectral_radius};

/// Pre-normalization magnitude above which an Euler basis counts as diverged.
pub const EULER_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Number of white-noise trials used by [`spectrum_nrmse`].
pub const SPECTRUM_TRIALS: usize = 64;

/// Continuous system `theta * dm/dt = A' m + B' u`, stored with the `1/theta`
/// folded in: `dm/dt = A m + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub theta: f64,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, theta: f64) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "inconsistent system dimensions: A is {}x{}, B has {} entries",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("system contains non-finite entries".into()));
        }
        Ok(LtiSystem { a, b, theta })
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }
}

/// How a discrete system was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    Zoh,
    Euler,
}

/// Discrete system `m_t = A m_{t-1} + B u_t` with `n` steps per window.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLti {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub n: usize,
    pub method: Discretization,
}

impl DiscreteLti {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn step(&self, state: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.a * state + &self.b * u
    }
}

/// The LDN system of order `q` for a window of `theta` seconds.
pub fn ldn_system(q: usize, theta: f64) -> Result<LtiSystem> {
    if q == 0 {
        return Err(Error::InvalidArgument("LDN order q must be at least 1".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let a = DMatrix::from_fn(q, q, |i, j| {
        let sign = if i <= j {
            -1.0
        } else if (i - j) % 2 == 1 {
            1.0
        } else {
            -1.0
        };
        (2 * i + 1) as f64 * sign / theta
    });
    let b = DVector::from_fn(q, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        (2 * i + 1) as f64 * sign / theta
    });
    LtiSystem::new(a, b, theta)
}

/// Zero-order-hold discretization with `n` steps per window:
/// `A_d = exp(A theta / n)`, `B_d = A^{-1} (A_d - I) B`.
pub fn discretize_lti(sys: &LtiSystem, n: usize) -> Result<DiscreteLti> {
    if n == 0 {
        return Err(Error::InvalidArgument("step count N must be at least 1".into()));
    }
    let q = sys.order();
    let a_s = &sys.a * sys.theta;
    let b_s = &sys.b * sys.theta;
    let a_d = expm(&(&a_s / n as f64));
    let rhs = (&a_d - DMatrix::<f64>::identity(q, q)) * b_s;
    let b_d = solve_checked(&a_s, &rhs, "discretize_lti")?;
    Ok(DiscreteLti {
        a: a_d,
        b: b_d,
        n,
        method: Discretization::Zoh,
    })
}

/// Forward-Euler discretization: `A_d = I + A theta / n`, `B_d = B theta / n`.
pub fn discretize_euler(sys: &LtiSystem, n: usize) -> Result<DiscreteLti> {
    if n == 0 {
        return Err(Error::InvalidArgument("step count N must be at least 1".into()));
    }
    let q = sys.order();
    let h = sys.theta / n as f64;
    Ok(DiscreteLti {
        a: DMatrix::identity(q, q) + &sys.a * h,
        b: &sys.b * h,
        n,
        method: Discretization::Euler,
    })
}

/// Solves `a x = rhs`, rejecting singular or numerically singular `a`.
pub(crate) fn solve_checked(a: &DMatrix<f64>, rhs: &DVector<f64>, op: &'static str) -> Result<DVector<f64>> {
    let svd = a.clone().svd(false, false);
    let s = &svd.singular_values;
    let s_max = s.iter().fold(0.0f64, |m, x| m.max(*x));
    let s_min = s.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if s_max == 0.0 || s_min / s_max < 1e3 * f64::EPSILON {
        return Err(Error::SingularMatrix {
            op,
            detail: format!("condition ratio {:.3e}", if s_max > 0.0 { s_min / s_max } else { 0.0 }),
        });
    }
    a.clone().lu().solve(rhs).ok_or_else(|| Error::SingularMatrix {
        op,
        detail: "LU factorization failed".into(),
    })
}

/// Columns `A^{n-1-k} B`, `k = 0..n-1`: the newest sample's weight `B` sits in
/// the last column. Built by iterating backwards from `B`.
fn impulse_columns(a: &DMatrix<f64>, b: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let q = b.len();
    let mut out = DMatrix::zeros(q, n);
    let mut col = b.clone();
    for k in (0..n).rev() {
        out.set_column(k, &col);
        if k > 0 {
            col = a * &col;
        }
    }
    out
}

/// Unnormalized LDN matrix `H'` (TimeForward) from the ZOH system.
pub fn ldn_matrix_unnormalized(q: usize, n: usize) -> Result<DMatrix<f64>> {
    check_order(q, n)?;
    let d = discretize_lti(&ldn_system(q, 1.0)?, n)?;
    Ok(impulse_columns(&d.a, &d.b, n))
}

/// Row-normalized LDN basis from the ZOH discretization; the raw row norms
/// are kept so identification can work on `H'`.
pub fn ldn_basis(q: usize, n: usize) -> Result<BasisMatrix> {
    let raw = ldn_matrix_unnormalized(q, n)?;
    BasisMatrix::from_raw(raw, BasisKind::Ldn, ColumnConvention::TimeForward)
}

/// LDN basis from the Euler recurrence together with its divergence status.
#[derive(Debug, Clone)]
pub struct EulerBasis {
    pub basis: BasisMatrix,
    /// Largest pre-normalization magnitude.
    pub max_abs: f64,
    /// Spectral radius of the Euler transition matrix.
    pub spectral_radius: f64,
    /// Set when the transition matrix is unstable (spectral radius above
    /// one) or an entry exceeds [`EULER_DIVERGENCE_THRESHOLD`].
    pub diverged: bool,
}

/// LDN basis from the forward-Euler discretization. Small `N` relative to
/// `q^2` diverges; this is reported through [`EulerBasis::diverged`].
pub fn ldn_basis_euler(q: usize, n: usize) -> Result<EulerBasis> {
    check_order(q, n)?;
    let d = discretize_euler(&ldn_system(q, 1.0)?, n)?;
    let mut raw = DMatrix::zeros(q, n);
    let mut col = d.b.clone();
    // log10 of the factor removed to keep columns representable.
    let mut removed = 0.0f64;
    for k in (0..n).rev() {
        raw.set_column(k, &col);
        if k > 0 {
            col = &d.a * &col;
            let size = col.amax();
            if size > 1e200 {
                raw.scale_mut(1e-200);
                col.scale_mut(1e-200);
                removed += 200.0;
            }
        }
    }
    let max_abs = if removed > 0.0 {
        f64::INFINITY
    } else {
        max_abs(&raw)
    };
    let rho = spectral_radius(&d.a)?;
    let diverged = rho > 1.0 || max_abs > EULER_DIVERGENCE_THRESHOLD;
    let mut basis = BasisMatrix::from_raw(raw, BasisKind::LdnEuler, ColumnConvention::TimeForward)?;
    if removed > 0.0 {
        basis = basis.without_raw_norms();
    }
    Ok(EulerBasis {
        basis,
        max_abs,
        spectral_radius: rho,
        diverged,
    })
}

/// States after feeding a unit impulse: row `t` is `A^t B`.
pub fn impulse_response(d: &DiscreteLti, steps: usize) -> DMatrix<f64> {
    let q = d.order();
    let mut out = DMatrix::zeros(steps, q);
    let mut state = d.b.clone();
    for t in 0..steps {
        out.set_row(t, &state.transpose());
        if t + 1 < steps {
            state = &d.a * &state;
        }
    }
    out
}

/// Mean of the continuous impulse response `exp(A t) B` over each of the `n`
/// sampling intervals of the window, scaled by `theta / n` so that it is
/// comparable with a discrete impulse response. Column `k` is TimeForward
/// (lag `n - 1 - k`). Each interval uses its own matrix exponential.
pub fn mean_sampled_impulse_response(sys: &LtiSystem, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("step count N must be at least 1".into()));
    }
    let q = sys.order();
    let h = sys.theta / n as f64;
    let mut out = DMatrix::zeros(q, n);
    let mut lower = DMatrix::<f64>::identity(q, q);
    for lag in 0..n {
        let upper = expm(&(&sys.a * (h * (lag + 1) as f64)));
        let rhs = (&upper - &lower) * &sys.b;
        let integral = solve_checked(&sys.a, &rhs, "mean_sampled_impulse_response")?;
        out.set_column(n - 1 - lag, &integral);
        lower = upper;
    }
    Ok(out)
}

/// Fourier band-limiting: keeps the first `2 f_hat + 1` Fourier rows (all
/// frequencies up to `f_hat` cycles per window).
fn bandlimit_fourier(u: &DVector<f64>, f_hat: usize) -> Result<DVector<f64>> {
    let n = u.len();
    if 2 * f_hat >= n {
        return Ok(u.clone());
    }
    let f = fourier_basis(2 * f_hat + 1, n)?;
    let m = f.data() * u;
    Ok(f.data().transpose() * m)
}

/// Mean NRMSE between `H u` and `H u_hat` over seeded white-noise windows,
/// where `H` is the normalized LDN basis and `u_hat` keeps only frequencies
/// up to `f_hat` cycles per window. One value per entry of `f_hats`.
pub fn spectrum_nrmse(q: usize, n: usize, f_hats: &[usize], trials: usize, seed: u64) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let h = ldn_basis(q, n)?;
    let windows: Vec<DVector<f64>> = (0..trials)
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
        })
        .collect();
    f_hats
        .iter()
        .map(|&f_hat| {
            let errors: Result<Vec<f64>> = windows
                .par_iter()
                .map(|u| {
                    let u_hat = bandlimit_fourier(u, f_hat)?;
                    let m = h.data() * u;
                    let m_hat = h.data() * u_hat;
                    Ok(nrmse(m_hat.as_slice(), m.as_slice()))
                })
                .collect();
            let errors = errors?;
            Ok(errors.iter().sum::<f64>() / errors.len() as f64)
        })
        .collect()
}

/// NRMSE of the Euler LDN basis against the ZOH LDN basis (both normalized).
pub fn euler_nrmse(q: usize, n: usize) -> Result<(f64, bool)> {
    let euler = ldn_basis_euler(q, n)?;
    let zoh = ldn_basis(q, n)?;
    Ok((nrmse(euler.basis.data().as_slice(), zoh.data().as_slice()), euler.diverged))
}
