//! Discrete Legendre Orthogonal Polynomials (DLOPs).
//!
//! Three independent constructions are provided:
//!
//! * [`dlop_basis`]: the normalized three-term recurrence, `O(qN)`, evaluated
//!   in double-double arithmetic with a zero clamp that stops rounding noise
//!   from rebounding.
//! * [`dlop_basis_direct`]: the closed form evaluated exactly over big
//!   integers, normalized in floating point at the end.
//! * [`dlop_basis_linsys`]: Gram-Schmidt style solve for polynomial
//!   coefficients in exact rational arithmetic (small `N` only, test oracle).
//!
//! Orientation: rows are polynomials in the sample index whose value in the
//! last column (the newest sample) is positive, matching the mirrored
//! Legendre basis convention used by the LDN.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::basis::{BasisKind, BasisMatrix, ColumnConvention};
use crate::error::{check_order, Error, Result};

/// Largest `N` accepted by the rational linear-system oracle.
pub const LINSYS_MAX_N: usize = 16;

/// Default threshold below which the recurrence treats an entry as zero.
pub const DEFAULT_ZERO_CLAMP_EPS: f64 = 1e-13;

/// Parameters for the recurrence construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlopParams {
    /// Clamp threshold; `None` disables clamping (only useful to observe the
    /// instability it prevents).
    pub zero_clamp_eps: Option<f64>,
}

impl Default for DlopParams {
    fn default() -> Self {
        DlopParams {
            zero_clamp_eps: Some(DEFAULT_ZERO_CLAMP_EPS),
        }
    }
}

impl DlopParams {
    pub fn unclamped() -> Self {
        DlopParams { zero_clamp_eps: None }
    }

    fn validate(&self) -> Result<()> {
        if let Some(eps) = self.zero_clamp_eps {
            if !(eps > 0.0 && eps < 1e-6) {
                return Err(Error::InvalidArgument(format!(
                    "zero_clamp_eps must lie in (0, 1e-6), got {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// Which DLOP construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlopAlgorithm {
    Recurrence,
    Direct,
    Linsys,
}

impl std::str::FromStr for DlopAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recurrence" => Ok(DlopAlgorithm::Recurrence),
            "direct" => Ok(DlopAlgorithm::Direct),
            "linsys" => Ok(DlopAlgorithm::Linsys),
            other => Err(Error::InvalidArgument(format!("unknown DLOP algorithm '{other}'"))),
        }
    }
}

pub fn dlop_basis_with(algo: DlopAlgorithm, q: usize, n: usize) -> Result<BasisMatrix> {
    match algo {
        DlopAlgorithm::Recurrence => dlop_basis(q, n, &DlopParams::default()),
        DlopAlgorithm::Direct => dlop_basis_direct(q, n),
        DlopAlgorithm::Linsys => dlop_basis_linsys(q, n),
    }
}

/// Orthonormal DLOP matrix from the normalized recurrence.
pub fn dlop_basis(q: usize, n: usize, params: &DlopParams) -> Result<BasisMatrix> {
    let data = dlop_recurrence_values(q, n, params)?;
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::ReconstructionFailure(
            "DLOP recurrence overflowed; enable the zero clamp".into(),
        ));
    }
    BasisMatrix::from_raw(data, BasisKind::Dlop, ColumnConvention::TimeForward)
}

/// Raw output of the normalized recurrence, before any rescaling. Rows have
/// unit norm up to rounding when the recurrence is stable.
pub fn dlop_recurrence_values(q: usize, n: usize, params: &DlopParams) -> Result<DMatrix<f64>> {
    check_order(q, n)?;
    params.validate()?;
    let nf = Dd::from(n as f64);
    let one = Dd::from(1.0);
    let mut data = DMatrix::<f64>::zeros(q, n);
    let mut dead = vec![false; n];
    // Two most recent rows, kept in double-double.
    let mut prev2 = vec![one / nf.sqrt(); n];
    let mut prev1 = vec![Dd::from(0.0); n];

    for (k, v) in prev2.iter().enumerate() {
        data[(0, k)] = v.hi();
    }
    if q > 1 {
        let scale = (Dd::from(3.0) * (nf - one) / (nf * (nf + one))).sqrt() / (nf - one);
        for k in 0..n {
            prev1[k] = scale * (2.0 * k as f64 + 1.0 - n as f64);
            data[(1, k)] = prev1[k].hi();
        }
    }
    for row in 2..q {
        let r = row as f64;
        let nr = n as f64 - r;
        let np = n as f64 + r;
        let denom = Dd::from(r) * nr;
        let ratio1 = Dd::from((2.0 * r + 1.0) * nr) / ((2.0 * r - 1.0) * np);
        let ratio2 = Dd::from((2.0 * r + 1.0) * nr) * (nr + 1.0)
            / (Dd::from((2.0 * r - 3.0) * np) * (np - 1.0));
        let c1 = Dd::from(2.0 * r - 1.0) / denom * ratio1.sqrt();
        let c2 = Dd::from((r - 1.0) * (np - 1.0)) / denom * ratio2.sqrt();
        for k in 0..n {
            let (p1, p2) = (prev1[k], prev2[k]);
            let mut next = c1 * (p1 * (2.0 * k as f64 + 1.0 - n as f64)) - c2 * p2;
            if let Some(eps) = params.zero_clamp_eps {
                if dead[k] || (p1.hi().abs() < eps && p2.hi().abs() < eps) {
                    dead[k] = true;
                    next = Dd::from(0.0);
                }
            }
            data[(row, k)] = next.hi();
            prev2[k] = p1;
            prev1[k] = next;
        }
    }
    Ok(data)
}

/// Double-double number `hi + lo`, enough to keep the recurrence's rounding
/// noise below the clamp threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn hi(self) -> f64 {
        self.hi
    }

    fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from(0.0);
        }
        let x = self.hi.sqrt();
        // One Newton step: x + (a - x^2) / 2x.
        let sq = Dd::from(x) * x;
        let r = (self - sq).hi;
        Dd::quick(x, r / (2.0 * x))
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Dd {
        Dd { hi, lo: 0.0 }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let v = Dd::quick(s.hi, s.lo + t.hi);
        Dd::quick(v.hi, v.lo + t.lo)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl std::ops::Add<f64> for Dd {
    type Output = Dd;
    fn add(self, o: f64) -> Dd {
        self + Dd::from(o)
    }
}

impl std::ops::Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, o: f64) -> Dd {
        self + Dd::from(-o)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl std::ops::Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, o: f64) -> Dd {
        self * Dd::from(o)
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * q1;
        let q2 = r.hi / o.hi;
        let r = r - o * q2;
        let q3 = r.hi / o.hi;
        Dd::quick(q1, q2) + q3
    }
}

impl std::ops::Div<f64> for Dd {
    type Output = Dd;
    fn div(self, o: f64) -> Dd {
        self / Dd::from(o)
    }
}

/// Falling factorial `x (x - 1) ... (x - i + 1)` as a big integer.
fn falling_factorial(x: i64, i: usize) -> BigInt {
    (0..i as i64).fold(BigInt::one(), |acc, j| acc * BigInt::from(x - j))
}

fn binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc *= BigInt::from(n - j);
        acc /= BigInt::from(j + 1);
    }
    acc
}

/// Coefficients `c_i = (-1)^i C(n,i) C(n+i,i) (N-1-i)^(n-i)` of the integer
/// closed-form numerator `S_n(k) = sum_i c_i k^(i)`.
fn closed_form_coefficients(row: usize, n: usize) -> Vec<BigInt> {
    (0..=row)
        .map(|i| {
            let mut c = binomial(row, i) * binomial(row + i, i);
            c *= falling_factorial(n as i64 - 1 - i as i64, row - i);
            if i % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .collect()
}

/// `S_n(k)` via the nested form `c_0 + k (c_1 + (k - 1)(c_2 + ...))`; terms
/// with `i > k` vanish because the falling factorial has a zero factor.
fn closed_form_numerator(coeffs: &[BigInt], k: usize) -> BigInt {
    let top = (coeffs.len() - 1).min(k);
    let mut acc = coeffs[top].clone();
    for i in (0..top).rev() {
        acc *= (k - i) as u64;
        acc += &coeffs[i];
    }
    acc
}

/// `x / 2^shift` rounded to a double (the shift truncates low bits).
fn scaled_to_f64(x: &BigInt, shift: u64) -> f64 {
    let v = x.abs() >> shift;
    let mag = v.to_f64().unwrap_or(f64::INFINITY);
    if x.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Exact integer numerators `S_n(k)`, `k = 0..N-1`, of the closed form in its
/// original orientation (`L_n(0; N) = 1/sqrt(N)` before normalization).
pub fn closed_form_row(row: usize, n: usize) -> Vec<BigInt> {
    let coeffs = closed_form_coefficients(row, n);
    (0..n).map(|k| closed_form_numerator(&coeffs, k)).collect()
}

/// Unnormalized closed-form values `L_n(k; N)` in double precision, original
/// orientation (first entry equals `1/sqrt(N)`).
pub fn closed_form_values(row: usize, n: usize) -> Result<Vec<f64>> {
    check_order(row + 1, n)?;
    let numerators = closed_form_row(row, n);
    let denom = falling_factorial(n as i64 - 1, row);
    let sqrt_n = (n as f64).sqrt();
    Ok(numerators
        .iter()
        .map(|s| {
            let r = BigRational::new(s.clone(), denom.clone());
            r.to_f64().unwrap_or(f64::NAN) / sqrt_n
        })
        .collect())
}

/// Orthonormal DLOP matrix from the exact closed form.
pub fn dlop_basis_direct(q: usize, n: usize) -> Result<BasisMatrix> {
    check_order(q, n)?;
    let mut data = DMatrix::<f64>::zeros(q, n);
    for row in 0..q {
        let coeffs = closed_form_coefficients(row, n);
        // Mirror so the newest sample carries the positive end value.
        let values: Vec<BigInt> = (0..n)
            .map(|k| closed_form_numerator(&coeffs, n - 1 - k))
            .collect();
        let max_bits = values.iter().map(|v| v.bits()).max().unwrap_or(0);
        let shift = max_bits.saturating_sub(500);
        for (k, v) in values.iter().enumerate() {
            data[(row, k)] = scaled_to_f64(v, shift);
        }
    }
    Ok(BasisMatrix::from_raw(data, BasisKind::Dlop, ColumnConvention::TimeForward)?.with_unit_raw_norms())
}

/// DLOP matrix by solving for polynomial coefficients in exact rational
/// arithmetic: each row is orthogonal to all previous rows and equals one in
/// the last column. Limited to `N <= 16`.
pub fn dlop_basis_linsys(q: usize, n: usize) -> Result<BasisMatrix> {
    check_order(q, n)?;
    if n > LINSYS_MAX_N {
        return Err(Error::UnsupportedSize {
            op: "dlop_basis_linsys",
            n,
            max: LINSYS_MAX_N,
        });
    }
    let powers: Vec<Vec<BigRational>> = (0..n)
        .map(|k| {
            let x = BigRational::from_integer(BigInt::from(k));
            let mut p = vec![BigRational::one()];
            for i in 1..q {
                let next = &p[i - 1] * &x;
                p.push(next);
            }
            p
        })
        .collect();

    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(q);
    for deg in 0..q {
        let unknowns = deg + 1;
        let mut system: Vec<Vec<BigRational>> = Vec::with_capacity(unknowns);
        for prev in &rows {
            let mut eq: Vec<BigRational> = (0..unknowns)
                .map(|i| {
                    (0..n).fold(BigRational::zero(), |acc, k| acc + &prev[k] * &powers[k][i])
                })
                .collect();
            eq.push(BigRational::zero());
            system.push(eq);
        }
        let mut last: Vec<BigRational> = (0..unknowns).map(|i| powers[n - 1][i].clone()).collect();
        last.push(BigRational::one());
        system.push(last);

        let alpha = solve_rational(system)?;
        let row: Vec<BigRational> = (0..n)
            .map(|k| {
                (0..unknowns).fold(BigRational::zero(), |acc, i| acc + &alpha[i] * &powers[k][i])
            })
            .collect();
        rows.push(row);
    }

    let data = DMatrix::from_fn(q, n, |i, k| rows[i][k].to_f64().unwrap_or(f64::NAN));
    Ok(BasisMatrix::from_raw(data, BasisKind::Dlop, ColumnConvention::TimeForward)?.with_unit_raw_norms())
}

/// Gauss-Jordan elimination on an augmented square system.
fn solve_rational(mut m: Vec<Vec<BigRational>>) -> Result<Vec<BigRational>> {
    let size = m.len();
    for col in 0..size {
        let pivot = (col..size).find(|&r| !m[r][col].is_zero()).ok_or_else(|| Error::SingularMatrix {
            op: "dlop_basis_linsys",
            detail: format!("no pivot in column {col}"),
        })?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for entry in m[col].iter_mut() {
            *entry /= &p;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (entry, pv) in row.iter_mut().zip(&pivot_row) {
                *entry -= &factor * pv;
            }
        }
    }
    Ok(m.into_iter().map(|row| row[size].clone()).collect())
}

impl BasisMatrix {
    /// DLOP constructions are orthonormal by construction, so the
    /// "unnormalized" matrix is the normalized one.
    fn with_unit_raw_norms(self) -> Self {
        let q = self.q();
        self.with_raw_norms(vec![1.0; q])
    }
}
