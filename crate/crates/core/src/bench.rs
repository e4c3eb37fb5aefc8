//! Delay-decoding benchmark.
//!
//! Low-pass filtered white-noise signals are streamed through each basis
//! with the FIR runner. For every `(q, theta)` a linear decoder is fitted on
//! training signals to read `u_{t - theta}` out of the coefficients `E u_t`,
//! then scored on separate test signals.
//!
//! Signals are shared by all bases: the signal with index `i` in role
//! `r` is drawn from a ChaCha8 generator seeded with the master seed on
//! stream `(r << 32) | i`. Comparisons between bases are therefore paired.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, BasisKind, BasisMatrix, Signal};
use crate::error::{Error, Result};
use crate::filtering::lowpass_filter_basis;
use crate::io::format_f64;
use crate::linalg::lstsq;
use crate::sliding::{SlidingFirState, SlidingLtiState};

/// Bases compared by default, in the order they are reported.
pub const DEFAULT_BASES: [BasisKind; 6] = [
    BasisKind::Ldn,
    BasisKind::Dlop,
    BasisKind::LegendreMean,
    BasisKind::Fourier,
    BasisKind::Cosine,
    BasisKind::Haar,
];

/// Which runner produces the coefficients of the LDN. Other bases always use
/// the FIR runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchEngine {
    #[default]
    Fir,
    Zoh,
}

impl std::str::FromStr for BenchEngine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fir" => Ok(BenchEngine::Fir),
            "zoh" => Ok(BenchEngine::Zoh),
            other => Err(Error::InvalidArgument(format!("unknown bench engine '{other}'"))),
        }
    }
}

/// Benchmark settings. The window is one second long, so the sample rate is
/// `n` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n: usize,
    pub signal_len: usize,
    pub n_train_signals: usize,
    pub n_test_signals: usize,
    pub q_grid: Vec<usize>,
    pub theta_grid: Vec<usize>,
    pub lowpass_cutoff_hz: f64,
    pub rcond: f64,
    pub seed: u64,
    pub filtered: bool,
    pub engine: BenchEngine,
    pub bases: Vec<BasisKind>,
}

impl Default for BenchConfig {
    /// Desk scale: 9 x 9 grid, 100 training and 100 test signals.
    fn default() -> Self {
        BenchConfig {
            n: 128,
            signal_len: 256,
            n_train_signals: 100,
            n_test_signals: 100,
            q_grid: linspace_usize(1, 128, 9),
            theta_grid: linspace_usize(0, 127, 9),
            lowpass_cutoff_hz: 15.0,
            rcond: 1e-4,
            seed: 0,
            filtered: false,
            engine: BenchEngine::Fir,
            bases: DEFAULT_BASES.to_vec(),
        }
    }
}

impl BenchConfig {
    /// 51 x 51 grid with 1000 training and 1000 test signals.
    pub fn paper_scale() -> Self {
        BenchConfig {
            n_train_signals: 1000,
            n_test_signals: 1000,
            q_grid: linspace_usize(1, 128, 51),
            theta_grid: linspace_usize(0, 127, 51),
            ..BenchConfig::default()
        }
    }

    /// Parses a TOML config. Omitted grids are 9-point grids spanning the
    /// given `n`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut cfg: BenchConfig = table.clone().try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        if !table.contains_key("q_grid") {
            cfg.q_grid = linspace_usize(1, cfg.n.max(1), 9);
        }
        if !table.contains_key("theta_grid") {
            cfg.theta_grid = linspace_usize(0, cfg.n.saturating_sub(1), 9);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sample_rate(&self) -> f64 {
        self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 2 {
            return fail(format!("window n must be at least 2, got {}", self.n));
        }
        if self.signal_len < self.n {
            return fail(format!("signal_len {} is shorter than the window {}", self.signal_len, self.n));
        }
        if self.n_train_signals == 0 || self.n_test_signals == 0 {
            return fail("signal counts must be positive".into());
        }
        if self.q_grid.is_empty() || self.theta_grid.is_empty() || self.bases.is_empty() {
            return fail("q_grid, theta_grid and bases must be non-empty".into());
        }
        if let Some(q) = self.q_grid.iter().find(|&&q| q == 0 || q > self.n) {
            return fail(format!("q = {q} outside 1..={}", self.n));
        }
        if let Some(t) = self.theta_grid.iter().find(|&&t| t >= self.n) {
            return fail(format!("theta = {t} outside 0..{}", self.n));
        }
        if !(self.lowpass_cutoff_hz > 0.0 && self.lowpass_cutoff_hz < self.sample_rate() / 2.0) {
            return fail(format!(
                "cutoff {} Hz must lie in (0, {}) Hz",
                self.lowpass_cutoff_hz,
                self.sample_rate() / 2.0
            ));
        }
        if !(self.rcond > 0.0 && self.rcond < 1.0) {
            return fail(format!("rcond must lie in (0, 1), got {}", self.rcond));
        }
        if let Some(k) = self.bases.iter().find(|k| matches!(k, BasisKind::Filtered | BasisKind::Custom)) {
            return fail(format!("basis '{k}' cannot be benchmarked directly"));
        }
        Ok(())
    }
}

/// `count` integers evenly spaced over `[lo, hi]`, rounded.
pub fn linspace_usize(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) as f64 / (count - 1) as f64;
    (0..count).map(|i| (lo as f64 + i as f64 * step).round() as usize).collect()
}

/// Amplitude gain of the noise filter: `0.1` at the cutoff, Gaussian rolloff.
pub fn lowpass_gain(f: f64, cutoff_hz: f64) -> f64 {
    (-(f / cutoff_hz).powi(2) * std::f64::consts::LN_10).exp()
}

/// White Gaussian noise shaped by [`lowpass_gain`] in the frequency domain,
/// normalized to unit RMS.
pub fn gen_lowpass_noise(len: usize, cutoff_hz: f64, sample_rate: f64, seed: u64) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lowpass_noise_from(&mut rng, len, cutoff_hz, sample_rate)
}

fn lowpass_noise_from(rng: &mut ChaCha8Rng, len: usize, cutoff_hz: f64, sample_rate: f64) -> Result<Signal> {
    if len == 0 {
        return Err(Error::InvalidArgument("signal length must be positive".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|_| Complex::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (j, c) in buf.iter_mut().enumerate() {
        let bin = j.min(len - j) as f64;
        *c *= lowpass_gain(bin * sample_rate / len as f64, cutoff_hz);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let mut samples: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let rms = crate::linalg::rms(&samples);
    if rms == 0.0 {
        return Err(Error::ReconstructionFailure("generated signal is identically zero".into()));
    }
    samples.iter_mut().for_each(|x| *x /= rms);
    Signal::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Train = 1,
    Test = 2,
}

fn signal_set(cfg: &BenchConfig, role: Role, count: usize) -> Result<Vec<Signal>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((role as u64) << 32) | i as u64);
            lowpass_noise_from(&mut rng, cfg.signal_len, cfg.lowpass_cutoff_hz, cfg.sample_rate())
        })
        .collect()
}

/// A decoder reading `u_{t - theta}` from `q` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDecoder {
    pub kind: BasisKind,
    pub q: usize,
    pub theta: usize,
    pub d: DVector<f64>,
}

impl DelayDecoder {
    pub fn decode(&self, m: &[f64]) -> f64 {
        self.d.iter().zip(m).map(|(a, b)| a * b).sum()
    }
}

/// Fits one decoder per target column: `d = argmin |M d - y|` with singular
/// values below `rcond * sigma_max` discarded. `trajectories` holds one row
/// of coefficients per sample time, `targets` one column per delay.
pub fn train_delay_decoders(
    trajectories: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    rcond: f64,
) -> Result<DMatrix<f64>> {
    if trajectories.nrows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if trajectories.nrows() != targets.nrows() {
        return Err(Error::LengthMismatch {
            op: "train_delay_decoders",
            expected: trajectories.nrows(),
            found: targets.nrows(),
        });
    }
    if trajectories.nrows() < trajectories.ncols() {
        log::warn!(
            "train_delay_decoders: {} samples for {} coefficients",
            trajectories.nrows(),
            trajectories.ncols()
        );
    }
    Ok(lstsq(trajectories, targets, rcond).solution)
}

/// Single-delay form of [`train_delay_decoders`].
pub fn train_delay_decoder(
    kind: BasisKind,
    theta: usize,
    trajectories: &DMatrix<f64>,
    targets: &DVector<f64>,
    rcond: f64,
) -> Result<DelayDecoder> {
    let d = train_delay_decoders(trajectories, &DMatrix::from_column_slice(targets.len(), 1, targets.as_slice()), rcond)?;
    Ok(DelayDecoder {
        kind,
        q: trajectories.ncols(),
        theta,
        d: d.column(0).into_owned(),
    })
}

/// Coefficient rows `E u_t` and delayed targets `u_{t - theta}` for every
/// full window `t >= N - 1` of every signal.
#[derive(Debug, Clone)]
pub struct Trajectories {
    pub coefficients: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    /// Number of rows contributed by each signal.
    pub rows_per_signal: usize,
}

/// Streams `signals` through `runner` (fresh state per signal).
pub fn collect_trajectories<F>(signals: &[Signal], n: usize, q: usize, thetas: &[usize], mut runner: F) -> Trajectories
where
    F: FnMut(&[f64]) -> Vec<DVector<f64>>,
{
    let len = signals.first().map_or(0, |s| s.len());
    let rows_per_signal = len + 1 - n;
    let total = rows_per_signal * signals.len();
    let mut coefficients = DMatrix::zeros(total, q);
    let mut targets = DMatrix::zeros(total, thetas.len());
    for (s, signal) in signals.iter().enumerate() {
        let u = signal.samples();
        let states = runner(u);
        for (k, t) in (n - 1..len).enumerate() {
            let row = s * rows_per_signal + k;
            coefficients.row_mut(row).copy_from(&states[t].transpose());
            for (j, &theta) in thetas.iter().enumerate() {
                targets[(row, j)] = u[t - theta];
            }
        }
    }
    Trajectories {
        coefficients,
        targets,
        rows_per_signal,
    }
}

fn fir_runner(basis: &BasisMatrix) -> impl FnMut(&[f64]) -> Vec<DVector<f64>> + '_ {
    move |u| {
        let mut state = SlidingFirState::new(basis);
        u.iter().map(|&x| state.step(x).into_inner()).collect()
    }
}

/// One benchmarked basis variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub kind: BasisKind,
    pub filtered: bool,
    pub engine: BenchEngine,
}

impl Variant {
    pub fn label(&self) -> String {
        let mut label = self.kind.name().to_string();
        if self.engine == BenchEngine::Zoh && self.kind == BasisKind::Ldn {
            label.push_str("-zoh");
        }
        if self.filtered {
            label = format!("filtered-{label}");
        }
        label
    }

    fn basis(&self, q: usize, n: usize) -> Result<BasisMatrix> {
        let base = build_basis(self.kind, q, n)?;
        if self.filtered {
            lowpass_filter_basis(&base, q)?.to_basis()
        } else {
            Ok(base)
        }
    }

    fn trajectories(&self, q: usize, cfg: &BenchConfig, signals: &[Signal]) -> Result<Trajectories> {
        let n = cfg.n;
        if self.kind == BasisKind::Ldn && self.engine == BenchEngine::Zoh && !self.filtered {
            let template = SlidingLtiState::ldn_zoh(q, n)?;
            return Ok(collect_trajectories(signals, n, q, &cfg.theta_grid, |u| {
                let mut state = template.clone();
                state.reset();
                u.iter().map(|&x| state.step(x).into_inner()).collect()
            }));
        }
        let basis = self.basis(q, n)?;
        Ok(collect_trajectories(signals, n, q, &cfg.theta_grid, fir_runner(&basis)))
    }
}

/// Errors of one basis variant over the `(q, theta)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGrid {
    pub label: String,
    pub q_grid: Vec<usize>,
    pub theta_grid: Vec<usize>,
    /// Test RMSE, rows indexed by q, columns by theta.
    pub rmse: DMatrix<f64>,
    /// Training RMSE on the same layout.
    pub train_rmse: DMatrix<f64>,
    /// Mean squared error of each test signal pooled over all cells.
    pub per_signal_mse: Vec<f64>,
}

impl ErrorGrid {
    /// RMSE over all cells and trials.
    pub fn summary_e(&self) -> f64 {
        if self.rmse.is_empty() {
            return 0.0;
        }
        (self.rmse.iter().map(|x| x * x).sum::<f64>() / self.rmse.len() as f64).sqrt()
    }

    pub fn train_e(&self) -> f64 {
        if self.train_rmse.is_empty() {
            return 0.0;
        }
        (self.train_rmse.iter().map(|x| x * x).sum::<f64>() / self.train_rmse.len() as f64).sqrt()
    }

    /// Per-signal RMSE pooled over the grid.
    pub fn per_signal_e(&self) -> Vec<f64> {
        self.per_signal_mse.iter().map(|x| x.sqrt()).collect()
    }

    /// `(q, theta)` of the smallest cell.
    pub fn argmin(&self) -> (usize, usize) {
        let (mut best, mut at) = (f64::INFINITY, (0, 0));
        for i in 0..self.rmse.nrows() {
            for j in 0..self.rmse.ncols() {
                if self.rmse[(i, j)] < best {
                    best = self.rmse[(i, j)];
                    at = (self.q_grid[i], self.theta_grid[j]);
                }
            }
        }
        at
    }

    /// `(max - min) / mean` of each q row.
    pub fn theta_spread(&self) -> Vec<f64> {
        self.rmse
            .row_iter()
            .map(|row| {
                let max = row.max();
                let min = row.min();
                let mean = row.mean();
                if mean > 0.0 {
                    (max - min) / mean
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut header = vec!["q\\theta".to_string()];
        header.extend(self.theta_grid.iter().map(|t| t.to_string()));
        let labels: Vec<String> = self.q_grid.iter().map(|q| q.to_string()).collect();
        crate::io::write_labeled_csv(writer, &header, &labels, &self.rmse)
    }
}

/// Paired difference `E(b) - E(a)` of per-signal RMSE and its standard error.
pub fn paired_gap(a: &ErrorGrid, b: &ErrorGrid) -> (f64, f64) {
    let ea = a.per_signal_e();
    let eb = b.per_signal_e();
    let d: Vec<f64> = eb.iter().zip(&ea).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    if d.is_empty() {
        return (0.0, 0.0);
    }
    let mean = d.iter().sum::<f64>() / n;
    if d.len() < 2 {
        return (mean, 0.0);
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_cell(variant: Variant, q: usize, cfg: &BenchConfig, train: &[Signal], test: &[Signal]) -> Result<CellResult> {
    let tr = variant.trajectories(q, cfg, train)?;
    let te = variant.trajectories(q, cfg, test)?;
    let decoders = train_delay_decoders(&tr.coefficients, &tr.targets, cfg.rcond)?;
    let mut decoders = decoders;
    if decoders.iter().any(|x| !x.is_finite()) {
        log::warn!("{} q={q}: non-finite decoder replaced by zero", variant.label());
        decoders.fill(0.0);
    }
    let train_err = &tr.coefficients * &decoders - &tr.targets;
    let test_err = &te.coefficients * &decoders - &te.targets;
    let column_rmse = |m: &DMatrix<f64>| -> Vec<f64> {
        m.column_iter()
            .map(|c| (c.norm_squared() / c.len() as f64).sqrt())
            .collect()
    };
    let per_signal = (0..test.len())
        .map(|s| {
            let block = test_err.rows(s * te.rows_per_signal, te.rows_per_signal);
            block.norm_squared() / block.len() as f64
        })
        .collect();
    Ok(CellResult {
        train: column_rmse(&train_err),
        test: column_rmse(&test_err),
        per_signal,
    })
}

struct CellResult {
    train: Vec<f64>,
    test: Vec<f64>,
    per_signal: Vec<f64>,
}

/// Basis variants selected by `cfg`.
pub fn variants(cfg: &BenchConfig) -> Vec<Variant> {
    let mut out: Vec<Variant> = cfg
        .bases
        .iter()
        .map(|&kind| Variant {
            kind,
            filtered: false,
            engine: cfg.engine,
        })
        .collect();
    if cfg.filtered {
        out.extend(cfg.bases.iter().map(|&kind| Variant {
            kind,
            filtered: true,
            engine: BenchEngine::Fir,
        }));
    }
    out
}

/// Runs the benchmark; one grid per basis variant, in [`variants`] order.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<ErrorGrid>> {
    cfg.validate()?;
    let train = signal_set(cfg, Role::Train, cfg.n_train_signals)?;
    let test = signal_set(cfg, Role::Test, cfg.n_test_signals)?;
    let variants = variants(cfg);
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..cfg.q_grid.len()).map(move |i| (v, i)))
        .collect();
    let cells: Vec<Result<CellResult>> = jobs
        .par_iter()
        .map(|&(v, i)| run_cell(variants[v], cfg.q_grid[i], cfg, &train, &test))
        .collect();

    let (nq, nt) = (cfg.q_grid.len(), cfg.theta_grid.len());
    let mut grids: Vec<ErrorGrid> = variants
        .iter()
        .map(|v| ErrorGrid {
            label: v.label(),
            q_grid: cfg.q_grid.clone(),
            theta_grid: cfg.theta_grid.clone(),
            rmse: DMatrix::zeros(nq, nt),
            train_rmse: DMatrix::zeros(nq, nt),
            per_signal_mse: vec![0.0; test.len()],
        })
        .collect();
    for (&(v, i), cell) in jobs.iter().zip(cells) {
        let cell = cell?;
        let grid = &mut grids[v];
        for j in 0..nt {
            grid.rmse[(i, j)] = cell.test[j];
            grid.train_rmse[(i, j)] = cell.train[j];
        }
        for (acc, x) in grid.per_signal_mse.iter_mut().zip(&cell.per_signal) {
            *acc += x / nq as f64;
        }
    }
    Ok(grids)
}

/// One line of the summary report.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub e: f64,
    /// Standard error of the per-signal RMSE mean.
    pub se: f64,
    pub train_e: f64,
    /// `(q, theta)` of the best cell.
    pub argmin: (usize, usize),
}

pub fn summarize(grids: &[ErrorGrid]) -> Vec<SummaryRow> {
    grids
        .iter()
        .map(|g| {
            let e = g.per_signal_e();
            let n = e.len() as f64;
            let se = if e.len() > 1 {
                let mean = e.iter().sum::<f64>() / n;
                (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                label: g.label.clone(),
                e: g.summary_e(),
                se,
                train_e: g.train_e(),
                argmin: g.argmin(),
            }
        })
        .collect()
}

/// Writes `grid_<label>.csv` for every grid and `summary.csv` into `dir`.
pub fn write_results(dir: &Path, cfg: &BenchConfig, grids: &[ErrorGrid]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for g in grids {
        let file = std::fs::File::create(dir.join(format!("grid_{}.csv", g.label)))?;
        g.write_csv(std::io::BufWriter::new(file))?;
    }
    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(|e| Error::Parse(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["basis", "E", "se", "train_E", "n_signals", "n_train_signals", "seed"])
        .map_err(csv_err)?;
    for row in summarize(grids) {
        w.write_record([
            row.label,
            format_f64(row.e),
            format_f64(row.se),
            format_f64(row.train_e),
            cfg.n_test_signals.to_string(),
            cfg.n_train_signals.to_string(),
            cfg.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{ColumnConvention, cosine_basis};

    fn small_config() -> BenchConfig {
        BenchConfig {
            n: 32,
            signal_len: 64,
            n_train_signals: 12,
            n_test_signals: 8,
            q_grid: vec![2, 8, 16],
            theta_grid: vec![0, 10, 31],
            lowpass_cutoff_hz: 4.0,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn default_grids() {
        let cfg = BenchConfig::default();
        assert_eq!(cfg.q_grid, vec![1, 17, 33, 49, 65, 80, 96, 112, 128]);
        assert_eq!(cfg.theta_grid, vec![0, 16, 32, 48, 64, 79, 95, 111, 127]);
        assert!(cfg.validate().is_ok());
        assert_eq!(BenchConfig::paper_scale().q_grid.len(), 51);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = small_config();
        let back = BenchConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        let partial = BenchConfig::from_toml_str("seed = 7\nbases = [\"dlop\", \"haar\"]\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.bases, vec![BasisKind::Dlop, BasisKind::Haar]);
        assert!(BenchConfig::from_toml_str("bogus = 1\n").is_err());
        assert!(BenchConfig::from_toml_str("lowpass_cutoff_hz = 64.0\n").is_err());
        let small = BenchConfig::from_toml_str("n = 64\n").unwrap();
        assert_eq!(small.q_grid, linspace_usize(1, 64, 9));
        assert_eq!(small.theta_grid, linspace_usize(0, 63, 9));
    }

    #[test]
    fn noise_is_deterministic_and_normalized() {
        let a = gen_lowpass_noise(256, 15.0, 128.0, 9).unwrap();
        let b = gen_lowpass_noise(256, 15.0, 128.0, 9).unwrap();
        assert_eq!(a, b);
        assert!((crate::linalg::rms(a.samples()) - 1.0).abs() < 1e-12);
        assert!(gen_lowpass_noise(256, 64.0, 128.0, 9).is_err());
    }

    #[test]
    fn noise_rolls_off_above_cutoff() {
        let (len, fc, sr) = (256usize, 15.0, 128.0);
        let (mut low, mut high) = (0.0, 0.0);
        for seed in 0..100 {
            let s = gen_lowpass_noise(len, fc, sr, seed).unwrap();
            let mut buf: Vec<Complex<f64>> = s.samples().iter().map(|&x| Complex::new(x, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(len).process(&mut buf);
            let (mut nl, mut nh, mut pl, mut ph) = (0, 0, 0.0, 0.0);
            for (j, c) in buf.iter().enumerate().take(len / 2 + 1) {
                let f = j as f64 * sr / len as f64;
                let p = c.norm_sqr();
                if f < fc {
                    pl += p;
                    nl += 1;
                } else if f > 2.0 * fc {
                    ph += p;
                    nh += 1;
                }
            }
            low += pl / nl as f64;
            high += ph / nh as f64;
        }
        assert!(high <= 0.1 * low);
        // No bin is zeroed outright.
        assert!(lowpass_gain(sr / 2.0, fc) > 0.0);
    }

    #[test]
    fn full_basis_decodes_exactly() {
        let cfg = small_config();
        let signals = signal_set(&cfg, Role::Train, 4).unwrap();
        let e = cosine_basis(32, 32).unwrap();
        let tr = collect_trajectories(&signals, 32, 32, &[0, 5], fir_runner(&e));
        let d = train_delay_decoders(&tr.coefficients, &tr.targets, 1e-12).unwrap();
        let err = &tr.coefficients * &d - &tr.targets;
        assert!((err.norm_squared() / err.len() as f64).sqrt() <= 1e-6);
    }

    #[test]
    fn identity_basis_selects_delayed_sample() {
        let n = 16;
        let e = BasisMatrix::new(DMatrix::identity(n, n), BasisKind::Custom, ColumnConvention::TimeForward).unwrap();
        let cfg = BenchConfig {
            n,
            signal_len: 48,
            lowpass_cutoff_hz: 3.0,
            ..BenchConfig::default()
        };
        let signals = signal_set(&cfg, Role::Train, 3).unwrap();
        let tr = collect_trajectories(&signals, n, n, &[4], fir_runner(&e));
        let target = tr.targets.column(0).into_owned();
        let dec = train_delay_decoder(BasisKind::Custom, 4, &tr.coefficients, &target, 1e-12).unwrap();
        for (k, x) in dec.d.iter().enumerate() {
            let expected = if k == n - 1 - 4 { 1.0 } else { 0.0 };
            assert!((x - expected).abs() < 1e-9, "{k}: {x}");
        }
    }

    #[test]
    fn smaller_rcond_fits_training_data_better() {
        let cfg = small_config();
        let signals = signal_set(&cfg, Role::Train, 6).unwrap();
        let e = build_basis(BasisKind::LegendreMean, 16, 32).unwrap();
        let tr = collect_trajectories(&signals, 32, 16, &[0, 16, 31], fir_runner(&e));
        let mut last = f64::INFINITY;
        for rcond in [1e-1, 1e-2, 1e-3, 1e-4] {
            let d = train_delay_decoders(&tr.coefficients, &tr.targets, rcond).unwrap();
            let err = (&tr.coefficients * &d - &tr.targets).norm();
            assert!(err <= last + 1e-12);
            last = err;
        }
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(train_delay_decoders(&DMatrix::zeros(0, 3), &DMatrix::zeros(0, 1), 1e-4).is_err());
    }

    #[test]
    fn benchmark_is_reproducible() {
        let cfg = BenchConfig {
            bases: vec![BasisKind::Dlop, BasisKind::Fourier],
            filtered: true,
            ..small_config()
        };
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a[2].label, "filtered-dlop");
        for g in &a {
            assert!(g.rmse.iter().all(|x| x.is_finite() && *x >= 0.0));
            assert!(g.train_e() <= g.summary_e() * 1.5);
        }
    }

    #[test]
    fn summarize_edge_cases() {
        assert!(summarize(&[]).is_empty());
        let zero = ErrorGrid {
            label: "z".into(),
            q_grid: vec![1],
            theta_grid: vec![0, 1],
            rmse: DMatrix::zeros(1, 2),
            train_rmse: DMatrix::zeros(1, 2),
            per_signal_mse: vec![0.0; 3],
        };
        assert_eq!(summarize(&[zero])[0].e, 0.0);
    }

    #[test]
    fn zoh_engine_label() {
        let v = Variant {
            kind: BasisKind::Ldn,
            filtered: false,
            engine: BenchEngine::Zoh,
        };
        assert_eq!(v.label(), "ldn-zoh");
    }
}
