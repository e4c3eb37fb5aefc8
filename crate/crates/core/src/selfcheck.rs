//! Cross-module invariant suite run by `tempo-bases check`.
//!
//! Each check is small enough that the whole suite finishes in a few
//! seconds. Checks never panic; numerical errors count as failures.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{
    build_basis, cosine_basis, fourier_basis, haar_basis, orthonormality_error, BasisKind,
};
use crate::dlop::{dlop_basis, dlop_basis_direct, dlop_basis_linsys, DlopParams};
use crate::error::Result;
use crate::filtering::{bandlimit_signal, lowpass_filter_basis};
use crate::io::{read_basis_csv, write_matrix_csv};
use crate::ldn::{discretize_lti, ldn_basis, ldn_matrix_unnormalized, ldn_system, mean_sampled_impulse_response};
use crate::linalg::max_abs_diff;
use crate::recon::{erasure_projector, reconstruct_from_matrix, undiscretize_lti, Dampening};
use crate::sliding::{SlidingFirState, SlidingLtiState};
use crate::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("orthonormal classical bases", classical_orthonormality),
    ("dlop oracle chain", dlop_oracles),
    ("ldn round trip", ldn_round_trip),
    ("ldn mean sampling", ldn_mean_sampling),
    ("undiscretize inverse", undiscretize_inverse),
    ("fir runner matches batch", fir_matches_batch),
    ("structured euler matches dense", euler_structured),
    ("reconstruction lemma", reconstruction_lemma),
    ("erasure projector idempotent", erasure_idempotent),
    ("filtering keeps own span", filtering_own_span),
    ("csv round trip", csv_round_trip),
];

/// Names of all checks, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(name, _)| *name).collect()
}

pub fn run_checks() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f() {
                Ok(outcome) => outcome,
                Err(e) => (false, e.to_string()),
            };
            CheckResult { name, passed, detail }
        })
        .collect()
}

fn bound(value: f64, limit: f64) -> (bool, String) {
    (value <= limit, format!("{value:.3e} (limit {limit:.0e})"))
}

fn classical_orthonormality() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in [8, 33, 64, 100] {
        for q in [1, n / 3, n / 2, n] {
            worst = worst.max(orthonormality_error(&fourier_basis(q, n)?));
            worst = worst.max(orthonormality_error(&cosine_basis(q, n)?));
        }
    }
    for n in [2, 16, 128] {
        worst = worst.max(orthonormality_error(&haar_basis(n, n)?));
    }
    Ok(bound(worst, 1e-10))
}

fn dlop_oracles() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in [3, 9, 16] {
        let lin = dlop_basis_linsys(n, n)?;
        let direct = dlop_basis_direct(n, n)?;
        worst = worst.max(max_abs_diff(lin.data(), direct.data()));
    }
    let rec = dlop_basis(64, 64, &DlopParams::default())?;
    let direct = dlop_basis_direct(64, 64)?;
    worst = worst.max(max_abs_diff(rec.data(), direct.data()));
    Ok(bound(worst, 1e-7))
}

fn ldn_round_trip() -> Result<(bool, String)> {
    let h = ldn_matrix_unnormalized(8, 128)?;
    let d = reconstruct_from_matrix(&h, Dampening::None, 1e-12)?;
    let reference = discretize_lti(&ldn_system(8, 1.0)?, 128)?;
    let err = max_abs_diff(&d.a, &reference.a).max((&d.b - &reference.b).amax());
    Ok(bound(err, 1e-6))
}

fn ldn_mean_sampling() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (q, n) in [(4, 32), (16, 256)] {
        let h = ldn_basis(q, n)?;
        let mean = crate::BasisMatrix::from_raw(
            mean_sampled_impulse_response(&ldn_system(q, 1.0)?, n)?,
            BasisKind::Custom,
            crate::ColumnConvention::TimeForward,
        )?;
        worst = worst.max(max_abs_diff(h.data(), mean.data()));
    }
    Ok(bound(worst, 1e-9))
}

fn undiscretize_inverse() -> Result<(bool, String)> {
    let sys = ldn_system(6, 1.0)?;
    let back = undiscretize_lti(&discretize_lti(&sys, 64)?, 1.0)?;
    let err = max_abs_diff(&back.a, &sys.a).max((&back.b - &sys.b).amax());
    Ok(bound(err, 1e-8))
}

fn fir_matches_batch() -> Result<(bool, String)> {
    let e = build_basis(BasisKind::Dlop, 7, 24)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u: Vec<f64> = (0..80).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut fir = SlidingFirState::new(&e);
    let mut worst = 0.0f64;
    for t in 0..u.len() {
        let m = fir.step(u[t]);
        if t + 1 >= 24 {
            let batch = e.apply(&u[t + 1 - 24..=t])?;
            worst = worst.max((m.0 - batch.0).amax());
        }
    }
    Ok(bound(worst, 1e-12))
}

fn euler_structured() -> Result<(bool, String)> {
    let mut fast = SlidingLtiState::ldn_euler(32, 4096)?;
    let mut dense = SlidingLtiState::new(fast.system().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let u = rng.random_range(-1.0..1.0);
        let a = fast.step_euler(u)?;
        let b = dense.step(u);
        worst = worst.max((a.0 - b.0).amax());
    }
    Ok(bound(worst, 1e-12))
}

fn reconstruction_lemma() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=32);
        let q = rng.random_range(1..n.min(8) + 1).min(n - 1);
        let e = dlop_basis(q, n, &DlopParams::default())?;
        let e = e.data();
        let proj = |u: &DVector<f64>| e.transpose() * (e * u);
        let inside = e.transpose() * DVector::from_fn(q, |_, _| rng.random_range(-1.0..1.0));
        if (proj(&inside) - &inside).amax() > 1e-10 {
            failures += 1;
        }
        let outside = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if (proj(&outside) - &outside).norm() <= 1e-6 {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} failures in 200 cases")))
}

fn erasure_idempotent() -> Result<(bool, String)> {
    // P = I - c r is a projector when r c = 1, i.e. for square bases.
    let e = fourier_basis(16, 16)?;
    let p = erasure_projector(&e, true)?;
    Ok(bound(max_abs_diff(&(&p * &p), &p), 1e-12))
}

fn filtering_own_span() -> Result<(bool, String)> {
    let f = fourier_basis(7, 40)?;
    let filtered = lowpass_filter_basis(&f, 7)?;
    let mut err = max_abs_diff(&filtered.data, f.data());
    let u = Signal::new((0..40).map(|k| (k as f64 * 0.3).sin()).collect())?;
    let limited = bandlimit_signal(&f, &u)?;
    let again = bandlimit_signal(&f, &limited)?;
    err = err.max(
        limited
            .samples()
            .iter()
            .zip(again.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
    );
    Ok(bound(err, 1e-10))
}

fn csv_round_trip() -> Result<(bool, String)> {
    let e = dlop_basis(13, 57, &DlopParams::default())?;
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, e.data())?;
    let back = read_basis_csv(buf.as_slice(), BasisKind::Dlop)?;
    let identical = back.data() == e.data();
    Ok((identical, if identical { "bit-identical".into() } else { "values differ".into() }))
}
