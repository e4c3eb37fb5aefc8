//! Dense matrix functions used throughout the crate: the matrix exponential
//! (scaling and squaring with a degree-13 Padé approximant), the principal
//! real matrix logarithm (inverse scaling and squaring), eigenvalues, and
//! least squares with a relative singular-value cutoff.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

/// Maximum 1-norm for which the degree-13 Padé approximant is accurate to
/// double precision without scaling.
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub fn norm_1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64).sqrt()
}

/// Root-mean-square of `actual - reference`, divided by the RMS of
/// `reference`.
pub fn nrmse(actual: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(actual.len(), reference.len());
    let diff: Vec<f64> = actual.iter().zip(reference).map(|(a, r)| a - r).collect();
    rms(&diff) / rms(reference)
}

/// Matrix exponential of a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }

    let norm = norm_1(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-squarings);

    let b = &PADE_13;
    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (b[13]) + &a4 * b[11] + &a2 * b[9];
    let u_outer = &a6 * u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1];
    let u = &scaled * u_outer;

    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");

    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        Error::ReconstructionFailure("Schur decomposition did not converge".into())
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Spectral radius (largest eigenvalue magnitude).
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or_else(|| singular_in_sqrt())?;
        let z_inv = z.clone().try_inverse().ok_or_else(|| singular_in_sqrt())?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = norm_1(&(&y_next - &y)) / norm_1(&y_next).max(f64::MIN_POSITIVE);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Ok(y);
        }
    }
    Ok(y)
}

fn singular_in_sqrt() -> Error {
    Error::ReconstructionFailure("singular iterate in matrix square root".into())
}

/// Principal real logarithm of a real square matrix.
///
/// Fails when an eigenvalue lies on the closed negative real axis, where no
/// real principal logarithm exists.
pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "logm requires a square matrix");
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    for z in eigenvalues(a)? {
        let on_real_axis = z.im.abs() <= 1e-12 * z.norm().max(scale);
        if on_real_axis && z.re <= 1e-14 * scale {
            return Err(Error::ReconstructionFailure(format!(
                "matrix logarithm undefined: eigenvalue {:.6e}{:+.6e}i on the closed negative real axis",
                z.re, z.im
            )));
        }
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut roots = 0u32;
    while norm_1(&(&x - &eye)) > 0.25 {
        if roots >= 60 {
            return Err(Error::ReconstructionFailure(
                "matrix logarithm: square-root sequence did not approach the identity".into(),
            ));
        }
        x = sqrtm(&x)?;
        roots += 1;
    }

    // log(X) = 2 atanh(Z) with Z = (X - I)(X + I)^{-1}; here ||Z|| <= 1/7.
    let zm = (&x + &eye)
        .transpose()
        .lu()
        .solve(&(&x - &eye).transpose())
        .ok_or_else(|| Error::ReconstructionFailure("matrix logarithm: X + I singular".into()))?
        .transpose();
    let z2 = &zm * &zm;
    let mut term = zm.clone();
    let mut sum = zm;
    for k in 1..60 {
        term = &term * &z2;
        let contribution = &term / (2 * k + 1) as f64;
        let size = max_abs(&contribution);
        sum += contribution;
        if size < 1e-18 * max_abs(&sum).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(sum * (2.0 * 2f64.powi(roots as i32)))
}

/// Result of a truncated-SVD least-squares solve.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub solution: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: DVector<f64>,
}

/// Least-squares solution of `a * x = b`, discarding singular values below
/// `rcond * sigma_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>, rcond: f64) -> Lstsq {
    assert_eq!(a.nrows(), b.nrows(), "lstsq: row mismatch");
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(0.0, |m: f64, s| m.max(*s));
    let cutoff = rcond * sigma_max;

    let mut utb = u.transpose() * b;
    let mut rank = 0;
    for (i, s) in sigma.iter().enumerate() {
        if *s > cutoff && *s > 0.0 {
            utb.row_mut(i).scale_mut(1.0 / s);
            rank += 1;
        } else {
            utb.row_mut(i).fill(0.0);
        }
    }
    Lstsq {
        solution: v_t.transpose() * utb,
        rank,
        singular_values: sigma.clone(),
    }
}

/// Moore-Penrose pseudo-inverse of a full-rank matrix; rank loss relative to
/// `rcond` is an error.
pub fn pinv(a: &DMatrix<f64>, rcond: f64, op: &'static str) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().fold(0.0, |m: f64, s| m.max(*s));
    let s_min = sigma.iter().fold(f64::INFINITY, |m: f64, s| m.min(*s));
    let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    if ratio < rcond {
        return Err(Error::RankDeficient { op, ratio, rcond });
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut ut = u.transpose();
    for (i, s) in sigma.iter().enumerate() {
        ut.row_mut(i).scale_mut(1.0 / s);
    }
    Ok(v_t.transpose() * ut)
}
