//! Discrete function bases represented as row-normalized basis transformation
//! matrices.
//!
//! A [`BasisMatrix`] holds `q` unit-norm rows of length `N`. Multiplying it
//! with a window of `N` samples yields `q` generalized Fourier coefficients.
//! The classical bases (Fourier, cosine, sampled Legendre and Haar) are
//! constructed here; DLOP and LDN bases live in their own modules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};

/// Row norms must be within this distance of one.
pub const ROW_NORM_TOL: f64 = 1e-12;

/// Which family a basis matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BasisKind {
    Fourier,
    Cosine,
    LegendreNaive,
    LegendreMean,
    Dlop,
    Haar,
    Ldn,
    LdnEuler,
    Filtered,
    Custom,
}

impl BasisKind {
    pub const ALL: [BasisKind; 10] = [
        BasisKind::Fourier,
        BasisKind::Cosine,
        BasisKind::LegendreNaive,
        BasisKind::LegendreMean,
        BasisKind::Dlop,
        BasisKind::Haar,
        BasisKind::Ldn,
        BasisKind::LdnEuler,
        BasisKind::Filtered,
        BasisKind::Custom,
    ];

    /// Stable numeric code used by the binary matrix format.
    pub fn code(self) -> u32 {
        match self {
            BasisKind::Fourier => 0,
            BasisKind::Cosine => 1,
            BasisKind::LegendreNaive => 2,
            BasisKind::LegendreMean => 3,
            BasisKind::Dlop => 4,
            BasisKind::Haar => 5,
            BasisKind::Ldn => 6,
            BasisKind::LdnEuler => 7,
            BasisKind::Filtered => 8,
            BasisKind::Custom => 9,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Fourier => "fourier",
            BasisKind::Cosine => "cosine",
            BasisKind::LegendreNaive => "legendre-naive",
            BasisKind::LegendreMean => "legendre",
            BasisKind::Dlop => "dlop",
            BasisKind::Haar => "haar",
            BasisKind::Ldn => "ldn",
            BasisKind::LdnEuler => "ldn-euler",
            BasisKind::Filtered => "filtered",
            BasisKind::Custom => "custom",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let kind = match lower.as_str() {
            "legendre-mean" | "legendremean" => BasisKind::LegendreMean,
            "legendrenaive" => BasisKind::LegendreNaive,
            other => Self::ALL
                .iter()
                .copied()
                .find(|k| k.name() == other)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown basis kind '{s}'")))?,
        };
        Ok(kind)
    }
}

impl TryFrom<String> for BasisKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BasisKind> for String {
    fn from(kind: BasisKind) -> String {
        kind.name().to_string()
    }
}

/// How matrix columns line up with the samples of a window.
///
/// With `TimeForward`, column `j` multiplies `u_j` (oldest sample first, the
/// newest sample in the last column). With `FirReversed`, column `j`
/// multiplies `u_{N-1-j}`, i.e. columns are filter taps ordered by lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnConvention {
    TimeForward,
    FirReversed,
}

/// Sampling scheme for turning a continuous function into a discrete one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Evaluate at interval centres `(k + 1/2) / N`.
    Naive,
    /// Average over each interval `[k / N, (k + 1) / N]`.
    Mean,
}

/// A `q x N` matrix of unit-norm discrete basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    data: DMatrix<f64>,
    kind: BasisKind,
    convention: ColumnConvention,
    raw_norms: Option<Vec<f64>>,
}

impl BasisMatrix {
    /// Wraps an already row-normalized matrix, validating the invariants.
    pub fn new(data: DMatrix<f64>, kind: BasisKind, convention: ColumnConvention) -> Result<Self> {
        check_order(data.nrows(), data.ncols())?;
        check_finite(&data)?;
        for (i, row) in data.row_iter().enumerate() {
            let norm = row.norm();
            if (norm - 1.0).abs() > ROW_NORM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(BasisMatrix {
            data,
            kind,
            convention,
            raw_norms: None,
        })
    }

    /// Normalizes each row of `raw` to unit length, remembering the original
    /// row norms.
    pub fn from_raw(raw: DMatrix<f64>, kind: BasisKind, convention: ColumnConvention) -> Result<Self> {
        check_order(raw.nrows(), raw.ncols())?;
        check_finite(&raw)?;
        let mut data = raw;
        let mut norms = Vec::with_capacity(data.nrows());
        for i in 0..data.nrows() {
            let norm = data.row(i).norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} of the {kind} basis has zero or non-finite norm"
                )));
            }
            data.row_mut(i).scale_mut(1.0 / norm);
            norms.push(norm);
        }
        Ok(BasisMatrix {
            data,
            kind,
            convention,
            raw_norms: Some(norms),
        })
    }

    pub fn q(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn convention(&self) -> ColumnConvention {
        self.convention
    }

    /// Row norms before normalization, when the constructor knew them.
    pub fn raw_norms(&self) -> Option<&[f64]> {
        self.raw_norms.as_deref()
    }

    pub(crate) fn with_raw_norms(mut self, norms: Vec<f64>) -> Self {
        debug_assert_eq!(norms.len(), self.q());
        self.raw_norms = Some(norms);
        self
    }

    pub(crate) fn without_raw_norms(mut self) -> Self {
        self.raw_norms = None;
        self
    }

    pub fn with_kind(mut self, kind: BasisKind) -> Self {
        self.kind = kind;
        self
    }

    /// The matrix with the pre-normalization row scale restored (or the
    /// normalized data when the scale is unknown).
    pub fn unnormalized(&self) -> DMatrix<f64> {
        let mut out = self.data.clone();
        if let Some(norms) = &self.raw_norms {
            for (i, s) in norms.iter().enumerate() {
                out.row_mut(i).scale_mut(*s);
            }
        }
        out
    }

    /// Same basis, stored in the requested column convention.
    pub fn to_convention(&self, convention: ColumnConvention) -> BasisMatrix {
        if convention == self.convention {
            return self.clone();
        }
        let n = self.n();
        let data = DMatrix::from_fn(self.q(), n, |i, j| self.data[(i, n - 1 - j)]);
        BasisMatrix {
            data,
            kind: self.kind,
            convention,
            raw_norms: self.raw_norms.clone(),
        }
    }

    /// Coefficients `m = E u` for a window of exactly `N` samples given in
    /// chronological order (column semantics follow the stored convention).
    pub fn apply(&self, window: &[f64]) -> Result<CoefficientVector> {
        let n = self.n();
        if window.len() != n {
            return Err(Error::LengthMismatch {
                op: "apply_basis",
                expected: n,
                found: window.len(),
            });
        }
        let coeffs = DVector::from_fn(self.q(), |i, _| {
            let row = self.data.row(i);
            match self.convention {
                ColumnConvention::TimeForward => {
                    row.iter().zip(window).map(|(e, u)| e * u).sum()
                }
                ColumnConvention::FirReversed => {
                    row.iter().zip(window.iter().rev()).map(|(e, u)| e * u).sum()
                }
            }
        });
        Ok(CoefficientVector(coeffs))
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("matrix contains non-finite entries".into()))
    }
}

/// A discrete signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    dt: Option<f64>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("signal must contain at least one sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("signal contains non-finite samples".into()));
        }
        Ok(Signal { samples, dt: None })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample period must be positive, got {dt}")));
        }
        self.dt = Some(dt);
        Ok(self)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample period; defaults to `1 / len` (the signal spans one unit of time).
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(1.0 / self.samples.len() as f64)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Generalized Fourier coefficients of a window with respect to a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub DVector<f64>);

impl CoefficientVector {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for CoefficientVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `m = E u`; see [`BasisMatrix::apply`].
pub fn apply_basis(basis: &BasisMatrix, signal: &Signal) -> Result<CoefficientVector> {
    basis.apply(signal.samples())
}

/// `E E^T`, the matrix of pairwise row inner products.
pub fn gram(basis: &BasisMatrix) -> DMatrix<f64> {
    basis.data() * basis.data().transpose()
}

/// Largest deviation of `gram(E)` from the identity.
pub fn orthonormality_error(basis: &BasisMatrix) -> f64 {
    let g = gram(basis);
    let q = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..q {
        for j in 0..q {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Largest off-diagonal magnitude of `gram(E)`.
pub fn max_off_diagonal(basis: &BasisMatrix) -> f64 {
    let g = gram(basis);
    let q = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..q {
        for j in 0..q {
            if i != j {
                worst = worst.max(g[(i, j)].abs());
            }
        }
    }
    worst
}

fn centre(k: usize, n: usize) -> f64 {
    (k as f64 + 0.5) / n as f64
}

/// Frequency (in cycles per window) of Fourier row `row`: rows are ordered
/// DC, sin 1, cos 1, sin 2, cos 2, ...
pub fn fourier_frequency(row: usize) -> usize {
    row.div_ceil(2)
}

/// Discrete Fourier basis obtained by sampling the Fourier series at interval
/// centres. Orthonormal for all `q <= N`.
pub fn fourier_basis(q: usize, n: usize) -> Result<BasisMatrix> {
    check_order(q, n)?;
    let scale = (2.0 / n as f64).sqrt();
    let raw = DMatrix::from_fn(q, n, |row, k| {
        let x = centre(k, n);
        let f = fourier_frequency(row) as f64;
        if row == 0 {
            1.0 / (n as f64).sqrt()
        } else if row % 2 == 1 {
            scale * (2.0 * PI * f * x).sin()
        } else {
            scale * (2.0 * PI * f * x).cos()
        }
    });
    // For q = N with N even the last row is the Nyquist sine (-1)^k, whose
    // norm is sqrt(2); row normalization rescales it to 1/sqrt(N).
    BasisMatrix::from_raw(raw, BasisKind::Fourier, ColumnConvention::TimeForward)
}

/// Discrete cosine basis (DCT-II rows). Orthonormal for all `q <= N`.
pub fn cosine_basis(q: usize, n: usize) -> Result<BasisMatrix> {
    check_order(q, n)?;
    let scale = (2.0 / n as f64).sqrt();
    let raw = DMatrix::from_fn(q, n, |row, k| {
        if row == 0 {
            1.0 / (n as f64).sqrt()
        } else {
            scale * (PI * row as f64 * centre(k, n)).cos()
        }
    });
    BasisMatrix::from_raw(raw, BasisKind::Cosine, ColumnConvention::TimeForward)
}

/// Values of the shifted Legendre polynomials `p~_0(x) .. p~_{count-1}(x)`
/// over `[0, 1]`, with `p~_n(1) = 1`.
pub fn shifted_legendre_values(x: f64, count: usize) -> Vec<f64> {
    let y = 2.0 * x - 1.0;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(1.0);
    if count == 1 {
        return out;
    }
    out.push(y);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * y * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// Antiderivatives of the shifted Legendre polynomials (up to a constant per
/// degree), using `d/dx (p~_{n+1} - p~_{n-1}) = 2 (2n + 1) p~_n`.
fn shifted_legendre_antiderivatives(x: f64, count: usize) -> Vec<f64> {
    let p = shifted_legendre_values(x, count + 1);
    (0..count)
        .map(|n| {
            if n == 0 {
                x
            } else {
                (p[n + 1] - p[n - 1]) / (2.0 * (2 * n + 1) as f64)
            }
        })
        .collect()
}

/// Sampled, mirrored shifted Legendre basis: row `n` samples `p~_n(1 - x)`.
/// Not orthogonal.
pub fn legendre_basis(q: usize, n: usize, sampling: Sampling) -> Result<BasisMatrix> {
    check_order(q, n)?;
    let mut raw = DMatrix::zeros(q, n);
    let sqrt_n = (n as f64).sqrt();
    match sampling {
        Sampling::Naive => {
            for k in 0..n {
                let values = shifted_legendre_values(1.0 - centre(k, n), q);
                for (row, v) in values.into_iter().enumerate() {
                    raw[(row, k)] = v / sqrt_n;
                }
            }
        }
        Sampling::Mean => {
            let mut upper = shifted_legendre_antiderivatives(1.0, q);
            for k in 0..n {
                let lower = shifted_legendre_antiderivatives(1.0 - (k + 1) as f64 / n as f64, q);
                for row in 0..q {
                    raw[(row, k)] = sqrt_n * (upper[row] - lower[row]);
                }
                upper = lower;
            }
        }
    }
    let kind = match sampling {
        Sampling::Naive => BasisKind::LegendreNaive,
        Sampling::Mean => BasisKind::LegendreMean,
    };
    BasisMatrix::from_raw(raw, kind, ColumnConvention::TimeForward)
}

/// Continuous Haar function `w_n(x)` on `[0, 1]`.
pub fn haar_function(index: usize, x: f64) -> f64 {
    fn mother(y: f64) -> f64 {
        if (0.0..0.5).contains(&y) {
            1.0
        } else if (0.5..=1.0).contains(&y) {
            -1.0
        } else {
            0.0
        }
    }
    if index == 0 {
        return 1.0;
    }
    let phi = (1usize << index.ilog2()) as f64;
    phi.sqrt() * mother(phi * x - index as f64 + phi)
}

/// Naively sampled Haar basis, rows in index order `w_0, w_1, w_2, ...`
/// (scale-major, shift-minor). Orthonormal when `q = N` is a power of two.
pub fn haar_basis(q: usize, n: usize) -> Result<BasisMatrix> {
    check_order(q, n)?;
    let sqrt_n = (n as f64).sqrt();
    let raw = DMatrix::from_fn(q, n, |row, k| haar_function(row, centre(k, n)) / sqrt_n);
    BasisMatrix::from_raw(raw, BasisKind::Haar, ColumnConvention::TimeForward)
}

/// Builds any of the standard bases by kind, with default parameters.
pub fn build_basis(kind: BasisKind, q: usize, n: usize) -> Result<BasisMatrix> {
    match kind {
        BasisKind::Fourier => fourier_basis(q, n),
        BasisKind::Cosine => cosine_basis(q, n),
        BasisKind::LegendreNaive => legendre_basis(q, n, Sampling::Naive),
        BasisKind::LegendreMean => legendre_basis(q, n, Sampling::Mean),
        BasisKind::Dlop => crate::dlop::dlop_basis(q, n, &crate::dlop::DlopParams::default()),
        BasisKind::Haar => haar_basis(q, n),
        BasisKind::Ldn => crate::ldn::ldn_basis(q, n),
        BasisKind::LdnEuler => Ok(crate::ldn::ldn_basis_euler(q, n)?.basis),
        BasisKind::Filtered | BasisKind::Custom => Err(Error::InvalidArgument(format!(
            "basis kind '{kind}' has no standalone constructor"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_row(basis: &BasisMatrix, row: usize, expected: &[f64], tol: f64) {
        let actual: Vec<f64> = basis.data().row(row).iter().copied().collect();
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "row {row}: {actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn fourier_single_row_is_constant() {
        assert_row(&fourier_basis(1, 4).unwrap(), 0, &[0.5; 4], 1e-15);
    }

    #[test]
    fn fourier_full_even_has_alternating_last_row() {
        let f = fourier_basis(4, 4).unwrap();
        assert_row(&f, 3, &[0.5, -0.5, 0.5, -0.5], 1e-14);
        assert!(orthonormality_error(&f) < 1e-12);
    }

    #[test]
    fn fourier_q5_n8_is_orthonormal() {
        assert!(orthonormality_error(&fourier_basis(5, 8).unwrap()) <= 1e-12);
    }

    #[test]
    fn cosine_examples() {
        let c = cosine_basis(1, 3).unwrap();
        assert_row(&c, 0, &[1.0 / 3f64.sqrt(); 3], 1e-15);

        let c = cosine_basis(2, 4).unwrap();
        let expected: Vec<f64> = [1.0, 3.0, 5.0, 7.0]
            .iter()
            .map(|m| SQRT_HALF * (m * PI / 8.0).cos())
            .collect();
        assert_row(&c, 1, &expected, 1e-15);

        assert!(orthonormality_error(&cosine_basis(16, 16).unwrap()) <= 1e-12);
    }

    #[test]
    fn legendre_examples() {
        for sampling in [Sampling::Naive, Sampling::Mean] {
            let p = legendre_basis(1, 5, sampling).unwrap();
            assert_row(&p, 0, &[1.0 / 5f64.sqrt(); 5], 1e-15);
        }
        let p = legendre_basis(2, 2, Sampling::Naive).unwrap();
        assert_row(&p, 1, &[SQRT_HALF, -SQRT_HALF], 1e-15);

        let p = legendre_basis(8, 8, Sampling::Mean).unwrap();
        assert!(max_off_diagonal(&p) > 1e-3);
    }

    // Monomial coefficients of p~_n from the coefficient recurrence
    // (n + 1) a_{n+1,i} = (2n + 1)(2 a_{n,i-1} - a_{n,i}) - n a_{n-1,i},
    // evaluated with Horner's rule. Independent of the value recurrence.
    fn shifted_legendre_coefficients(degree: usize) -> Vec<Vec<f64>> {
        let mut coeffs = vec![vec![1.0], vec![-1.0, 2.0]];
        for n in 1..degree {
            let nf = n as f64;
            let mut next = vec![0.0; n + 2];
            for (i, slot) in next.iter_mut().enumerate() {
                let a_i = coeffs[n].get(i).copied().unwrap_or(0.0);
                let a_im1 = if i > 0 { coeffs[n][i - 1] } else { 0.0 };
                let b_i = coeffs[n - 1].get(i).copied().unwrap_or(0.0);
                *slot = ((2.0 * nf + 1.0) * (2.0 * a_im1 - a_i) - nf * b_i) / (nf + 1.0);
            }
            coeffs.push(next);
        }
        coeffs.truncate(degree + 1);
        coeffs
    }

    #[test]
    fn legendre_values_match_coefficient_form() {
        let coeffs = shifted_legendre_coefficients(12);
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let values = shifted_legendre_values(x, 13);
            for (n, c) in coeffs.iter().enumerate() {
                let horner = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
                assert!((values[n] - horner).abs() < 1e-9, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn haar_examples() {
        let w = haar_basis(2, 2).unwrap();
        assert_row(&w, 0, &[SQRT_HALF, SQRT_HALF], 1e-15);
        assert_row(&w, 1, &[SQRT_HALF, -SQRT_HALF], 1e-15);

        assert_row(&haar_basis(1, 7).unwrap(), 0, &[1.0 / 7f64.sqrt(); 7], 1e-15);
        assert!(orthonormality_error(&haar_basis(8, 8).unwrap()) <= 1e-12);
    }

    #[test]
    fn haar_ordering_is_scale_major() {
        let w = haar_basis(4, 4).unwrap();
        let h = 0.5;
        assert_row(&w, 1, &[h, h, -h, -h], 1e-15);
        assert_row(&w, 2, &[SQRT_HALF, -SQRT_HALF, 0.0, 0.0], 1e-15);
        assert_row(&w, 3, &[0.0, 0.0, SQRT_HALF, -SQRT_HALF], 1e-15);
    }

    #[test]
    fn apply_examples() {
        let e = cosine_basis(5, 5).unwrap();
        let u: Vec<f64> = e.data().row(2).iter().copied().collect();
        let m = e.apply(&u).unwrap();
        for i in 0..5 {
            let target = if i == 2 { 1.0 } else { 0.0 };
            assert!((m[i] - target).abs() < 1e-14);
        }

        let f = fourier_basis(3, 8).unwrap();
        let m = apply_basis(&f, &Signal::new(vec![1.0; 8]).unwrap()).unwrap();
        assert!((m[0] - 8f64.sqrt()).abs() < 1e-14);
        assert!(m[1].abs() < 1e-14 && m[2].abs() < 1e-14);

        let w = haar_basis(2, 2).unwrap();
        let m = w.apply(&[1.0, 0.0]).unwrap();
        assert!((m[0] - SQRT_HALF).abs() < 1e-15 && (m[1] - SQRT_HALF).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let f = fourier_basis(3, 8).unwrap();
        assert!(matches!(f.apply(&[1.0; 7]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn gram_of_single_row() {
        let g = gram(&haar_basis(1, 9).unwrap());
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constructors_reject_bad_orders() {
        assert!(fourier_basis(5, 4).is_err());
        assert!(cosine_basis(0, 4).is_err());
        assert!(legendre_basis(9, 8, Sampling::Mean).is_err());
        assert!(haar_basis(3, 2).is_err());
    }

    #[test]
    fn kind_codes_round_trip() {
        for kind in BasisKind::ALL {
            assert_eq!(BasisKind::from_code(kind.code()), Some(kind));
            assert_eq!(kind.name().parse::<BasisKind>().unwrap(), kind);
        }
    }

    fn continuous(kind: BasisKind, index: usize, x: f64) -> f64 {
        match kind {
            BasisKind::Fourier => {
                let f = fourier_frequency(index) as f64;
                if index == 0 {
                    1.0
                } else if index % 2 == 1 {
                    2f64.sqrt() * (2.0 * PI * f * x).sin()
                } else {
                    2f64.sqrt() * (2.0 * PI * f * x).cos()
                }
            }
            BasisKind::Cosine => {
                if index == 0 {
                    1.0
                } else {
                    2f64.sqrt() * (PI * index as f64 * x).cos()
                }
            }
            _ => {
                let p = shifted_legendre_values(1.0 - x, index + 1)[index];
                ((2 * index + 1) as f64).sqrt() * p
            }
        }
    }

    #[test]
    fn discrete_bases_converge_to_continuous() {
        let bases: [(BasisKind, fn(usize, usize) -> Result<BasisMatrix>); 4] = [
            (BasisKind::Fourier, fourier_basis),
            (BasisKind::Cosine, cosine_basis),
            (BasisKind::LegendreNaive, |q, n| legendre_basis(q, n, Sampling::Naive)),
            (BasisKind::LegendreMean, |q, n| legendre_basis(q, n, Sampling::Mean)),
        ];
        for (kind, build) in bases {
            let mats: Vec<(usize, BasisMatrix)> =
                [64, 256, 1024].iter().map(|&n| (n, build(5, n).unwrap())).collect();
            for index in 0..5 {
                for &x in &[0.25, 0.5, 0.75] {
                    let errors: Vec<f64> = mats
                        .iter()
                        .map(|(n, e)| {
                            let k = (x * (*n as f64 - 1.0)).round() as usize;
                            ((*n as f64).sqrt() * e.data()[(index, k)] - continuous(kind, index, x)).abs()
                        })
                        .collect();
                    assert!(
                        errors[1] <= errors[0] + 1e-12 && errors[2] <= errors[1] + 1e-12,
                        "{kind} n={index} x={x}: {errors:?}"
                    );
                    assert!(errors[2] < 0.05, "{kind} n={index} x={x}: {errors:?}");
                }
            }
        }
    }

    fn any_constructor(kind: u8, q: usize, n: usize) -> BasisMatrix {
        match kind {
            0 => fourier_basis(q, n),
            1 => cosine_basis(q, n),
            2 => legendre_basis(q, n, Sampling::Naive),
            3 => legendre_basis(q, n, Sampling::Mean),
            _ => haar_basis(q, n),
        }
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rows_have_unit_norm(kind in 0u8..5, n in 1usize..=256, frac in 0.0f64..=1.0) {
            let q = ((frac * n as f64).ceil() as usize).clamp(1, n);
            let e = any_constructor(kind, q, n);
            for row in e.data().row_iter() {
                prop_assert!((row.norm() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn fourier_and_cosine_orthonormal(n in 1usize..=256, frac in 0.0f64..=1.0) {
            let q = ((frac * n as f64).ceil() as usize).clamp(1, n);
            prop_assert!(orthonormality_error(&fourier_basis(q, n).unwrap()) <= 1e-10);
            prop_assert!(orthonormality_error(&cosine_basis(q, n).unwrap()) <= 1e-10);
        }

        #[test]
        fn conventions_agree_on_reversed_input(
            kind in 0u8..5,
            u in proptest::collection::vec(-1.0f64..1.0, 1..40),
        ) {
            let n = u.len();
            let q = n.div_ceil(2);
            let forward = any_constructor(kind, q, n);
            let reversed_tag = BasisMatrix { convention: ColumnConvention::FirReversed, ..forward.clone() };
            let rev: Vec<f64> = u.iter().rev().copied().collect();
            let a = forward.apply(&u).unwrap();
            let b = reversed_tag.apply(&rev).unwrap();
            for i in 0..q {
                prop_assert!((a[i] - b[i]).abs() <= 1e-12);
            }
            // Converting storage keeps the chronological meaning.
            let converted = forward.to_convention(ColumnConvention::FirReversed).apply(&u).unwrap();
            for i in 0..q {
                prop_assert!((a[i] - converted[i]).abs() <= 1e-12);
            }
        }
    }
}
