use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use tempo_bases::bench::{run_benchmark, summarize, write_results, BenchConfig, BenchEngine};
use tempo_bases::dlop::{dlop_basis_with, DlopAlgorithm};
use tempo_bases::filtering::{bandlimit_signal, lowpass_filter_basis};
use tempo_bases::io::{load_basis, load_signal_csv, save_basis, write_labeled_csv, write_matrix_csv};
use tempo_bases::ldn::{
    discretize_euler, discretize_lti, impulse_response, ldn_basis, ldn_basis_euler, ldn_system, spectrum_nrmse,
    SPECTRUM_TRIALS,
};
use tempo_bases::recon::{reconstruct_discrete_lti, undiscretize_lti, Dampening, ReconstructionConfig};
use tempo_bases::selfcheck::run_checks;
use tempo_bases::sliding::{SlidingFirState, SlidingLtiState};
use tempo_bases::{basis::build_basis, BasisKind, BasisMatrix, ColumnConvention, Error, Signal};

const THREADS_ENV: &str = "TEMPO_BASES_THREADS";

/// Discrete temporal function bases, LDN systems and delay-decoding benchmarks.
#[derive(Debug, Parser)]
#[command(name = "tempo-bases", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a basis matrix and write it as CSV or TBAS binary.
    Basis(BasisArgs),
    /// Emit the LDN basis, its impulse response or its band-limit spectrum.
    Ldn(LdnArgs),
    /// Identify a discrete LTI system from a basis matrix file.
    Lti(LtiArgs),
    /// Low-pass filter a basis through a Fourier projection.
    Filter(FilterArgs),
    /// Stream a signal through a sliding transform.
    Slide(SlideArgs),
    /// Run the delay-decoding benchmark.
    Bench(BenchArgs),
    /// Run the invariant self-check suite.
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Recurrence,
    Direct,
    Linsys,
}

impl From<Algo> for DlopAlgorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Recurrence => DlopAlgorithm::Recurrence,
            Algo::Direct => DlopAlgorithm::Direct,
            Algo::Linsys => DlopAlgorithm::Linsys,
        }
    }
}

#[derive(Debug, Args)]
struct BasisArgs {
    /// fourier, cosine, legendre-naive, legendre, dlop, haar, ldn, ldn-euler.
    #[arg(long)]
    kind: BasisKind,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    n: usize,
    /// DLOP construction.
    #[arg(long, value_enum, default_value = "recurrence")]
    algo: Algo,
    /// Output file (.bin/.tbas for binary); CSV on stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LdnEmit {
    Basis,
    Impulse,
    Spectrum,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Zoh,
    Euler,
}

#[derive(Debug, Args)]
struct LdnArgs {
    #[arg(long)]
    q: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "basis")]
    emit: LdnEmit,
    #[arg(long, value_enum, default_value = "zoh")]
    method: Method,
    /// Impulse-response length (default 2N).
    #[arg(long)]
    steps: Option<usize>,
    /// White-noise trials for the spectrum.
    #[arg(long, default_value_t = SPECTRUM_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DampenArg {
    None,
    Lstsq,
    Erasure,
}

impl From<DampenArg> for Dampening {
    fn from(d: DampenArg) -> Self {
        match d {
            DampenArg::None => Dampening::None,
            DampenArg::Lstsq => Dampening::Lstsq,
            DampenArg::Erasure => Dampening::Erasure,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LtiEmit {
    System,
    Impulse,
}

#[derive(Debug, Args)]
struct LtiArgs {
    /// Basis matrix file (CSV or TBAS binary), TimeForward columns.
    #[arg(long)]
    from: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    dampen: DampenArg,
    /// Window length in seconds.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, value_enum, default_value = "system")]
    emit: LtiEmit,
    /// Emit the continuous system instead of the discrete one.
    #[arg(long)]
    continuous: bool,
    /// Impulse-response length (default 2N).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    rcond: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    basis: BasisKind,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    n: usize,
    /// Number of Fourier rows kept.
    #[arg(long)]
    qprime: usize,
    /// Row-normalize the filtered matrix.
    #[arg(long)]
    normalize: bool,
    /// Signal to band-limit through the unfiltered basis (aliasing demo).
    #[arg(long, requires = "signal_out")]
    input: Option<PathBuf>,
    /// Where to write the band-limited signal.
    #[arg(long)]
    signal_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SlideEngine {
    Fir,
    Zoh,
    Euler,
}

#[derive(Debug, Args)]
struct SlideArgs {
    #[arg(long, default_value = "ldn")]
    basis: BasisKind,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "fir")]
    engine: SlideEngine,
    /// Signal CSV; every number is one sample.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML configuration; desk-scale defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Start from the 51 x 51 grid with 1000 signals per role.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Also benchmark the low-pass filtered bases.
    #[arg(long)]
    filtered: bool,
    #[arg(long, value_enum)]
    engine: Option<SlideEngine>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(failed)) => {
            eprintln!("{failed} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

enum Failure {
    Error(Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Basis(args) => {
            eprintln!("config: {args:?}");
            let basis = match args.kind {
                BasisKind::Dlop => dlop_basis_with(args.algo.into(), args.q, args.n)?,
                kind => build_basis(kind, args.q, args.n)?,
            };
            emit_basis(&basis, args.out.as_deref())?;
        }
        Command::Ldn(args) => {
            eprintln!("config: {args:?}");
            ldn(&args)?;
        }
        Command::Lti(args) => {
            eprintln!("config: {args:?}");
            lti(&args)?;
        }
        Command::Filter(args) => {
            eprintln!("config: {args:?}");
            filter(&args)?;
        }
        Command::Slide(args) => {
            eprintln!("config: {args:?}");
            slide(&args)?;
        }
        Command::Bench(args) => bench(&args)?,
        Command::Check => {
            let results = run_checks();
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed > 0 {
                return Err(Failure::Checks(failed));
            }
        }
    }
    Ok(())
}

fn writer(out: Option<&Path>) -> std::io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_basis(basis: &BasisMatrix, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => save_basis(path, basis),
        None => emit_matrix(basis.to_convention(ColumnConvention::TimeForward).data(), None),
    }
}

fn emit_matrix(m: &DMatrix<f64>, out: Option<&Path>) -> Result<(), Error> {
    write_matrix_csv(writer(out)?, m)
}

fn ldn(args: &LdnArgs) -> Result<(), Error> {
    let out = args.out.as_deref();
    match args.emit {
        LdnEmit::Basis => {
            let basis = match args.method {
                Method::Zoh => ldn_basis(args.q, args.n)?,
                Method::Euler => {
                    let euler = ldn_basis_euler(args.q, args.n)?;
                    if euler.diverged {
                        log::warn!(
                            "Euler LDN diverges at q={}, N={} (spectral radius {:.4})",
                            args.q,
                            args.n,
                            euler.spectral_radius
                        );
                    }
                    euler.basis
                }
            };
            emit_basis(&basis, out)
        }
        LdnEmit::Impulse => {
            let sys = ldn_system(args.q, 1.0)?;
            let d = match args.method {
                Method::Zoh => discretize_lti(&sys, args.n)?,
                Method::Euler => discretize_euler(&sys, args.n)?,
            };
            emit_matrix(&impulse_response(&d, args.steps.unwrap_or(2 * args.n)), out)
        }
        LdnEmit::Spectrum => {
            let f_hats: Vec<usize> = (0..=args.n / 2).collect();
            let nrmse = spectrum_nrmse(args.q, args.n, &f_hats, args.trials, args.seed)?;
            let power = row_power_spectrum(&ldn_basis(args.q, args.n)?);
            let table = DMatrix::from_fn(f_hats.len(), 2, |i, j| if j == 0 { power[i] } else { nrmse[i] });
            let header = ["f_hz", "power", "nrmse"].map(String::from);
            let labels: Vec<String> = f_hats.iter().map(|f| f.to_string()).collect();
            write_labeled_csv(writer(out)?, &header, &labels, &table)
        }
    }
}

/// Power of the basis rows at each integer frequency (cycles per window),
/// summed over rows.
fn row_power_spectrum(basis: &BasisMatrix) -> Vec<f64> {
    let n = basis.n();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut power = vec![0.0; n / 2 + 1];
    for row in basis.data().row_iter() {
        let mut buf: Vec<Complex<f64>> = row.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft.process(&mut buf);
        for (f, p) in power.iter_mut().enumerate() {
            *p += buf[f].norm_sqr();
        }
    }
    power
}

fn lti(args: &LtiArgs) -> Result<(), Error> {
    let basis = load_basis(&args.from)?;
    let cfg = ReconstructionConfig {
        dampen: args.dampen.into(),
        theta: args.theta,
        rcond: args.rcond,
        ..ReconstructionConfig::default()
    };
    let d = reconstruct_discrete_lti(&basis, &cfg)?;
    let out = args.out.as_deref();
    match args.emit {
        LtiEmit::System => {
            let (a, b) = if args.continuous {
                let sys = undiscretize_lti(&d, args.theta)?;
                (sys.a, sys.b)
            } else {
                (d.a.clone(), d.b.clone())
            };
            // One row per state: the row of A followed by the entry of B.
            let q = b.len();
            let mut ab = DMatrix::zeros(q, q + 1);
            ab.view_mut((0, 0), (q, q)).copy_from(&a);
            ab.set_column(q, &b);
            emit_matrix(&ab, out)
        }
        LtiEmit::Impulse => emit_matrix(&impulse_response(&d, args.steps.unwrap_or(2 * basis.n())), out),
    }
}

fn filter(args: &FilterArgs) -> Result<(), Error> {
    let base = match args.basis {
        BasisKind::Dlop => dlop_basis_with(DlopAlgorithm::Recurrence, args.q, args.n)?,
        kind => build_basis(kind, args.q, args.n)?,
    };
    let filtered = lowpass_filter_basis(&base, args.qprime)?;
    if args.normalize {
        emit_basis(&filtered.to_basis()?, args.out.as_deref())?;
    } else {
        emit_matrix(&filtered.data, args.out.as_deref())?;
    }
    if let (Some(input), Some(signal_out)) = (&args.input, &args.signal_out) {
        let u = Signal::new(load_signal_csv(input)?)?;
        let limited = bandlimit_signal(&base, &u)?;
        let column = DMatrix::from_column_slice(limited.len(), 1, limited.samples());
        emit_matrix(&column, Some(signal_out))?;
    }
    Ok(())
}

fn slide(args: &SlideArgs) -> Result<(), Error> {
    let samples = load_signal_csv(&args.input)?;
    let q = args.q;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    match args.engine {
        SlideEngine::Fir => {
            let basis = build_basis(args.basis, q, args.n)?;
            let mut state = SlidingFirState::new(&basis);
            rows.extend(samples.iter().map(|&u| state.step(u).as_slice().to_vec()));
        }
        SlideEngine::Zoh | SlideEngine::Euler => {
            if args.basis != BasisKind::Ldn {
                return Err(Error::InvalidArgument(format!(
                    "engine {:?} is only available for the ldn basis",
                    args.engine
                )));
            }
            if let SlideEngine::Zoh = args.engine {
                let mut state = SlidingLtiState::ldn_zoh(q, args.n)?;
                rows.extend(samples.iter().map(|&u| state.step(u).as_slice().to_vec()));
            } else {
                let mut state = SlidingLtiState::ldn_euler(q, args.n)?;
                for &u in &samples {
                    rows.push(state.step_euler(u)?.as_slice().to_vec());
                }
                if state.diverged() {
                    log::warn!("Euler state diverged at q={q}, N={}", args.n);
                }
            }
        }
    }
    let m = DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]);
    emit_matrix(&m, args.out.as_deref())
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None if args.paper_scale => BenchConfig::paper_scale(),
        None => BenchConfig::default(),
    };
    if args.config.is_some() && args.paper_scale {
        log::warn!("--paper-scale ignored because --config was given");
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.filtered {
        cfg.filtered = true;
    }
    match args.engine {
        Some(SlideEngine::Fir) => cfg.engine = BenchEngine::Fir,
        Some(SlideEngine::Zoh) => cfg.engine = BenchEngine::Zoh,
        Some(SlideEngine::Euler) => {
            return Err(Error::InvalidArgument("the benchmark supports the fir and zoh engines".into()))
        }
        None => {}
    }
    cfg.validate()?;
    eprintln!("config:\n{}", cfg.to_toml_string());
    let grids = run_benchmark(&cfg)?;
    write_results(&args.out, &cfg, &grids)?;
    for row in summarize(&grids) {
        println!(
            "{:<20} E = {:.4} (se {:.4}, train {:.4}), best cell q={} theta={}",
            row.label, row.e, row.se, row.train_e, row.argmin.0, row.argmin.1
        );
    }
    Ok(())
}
