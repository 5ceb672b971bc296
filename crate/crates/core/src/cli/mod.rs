//! Command-line front end: training, separation, denoising, tracking and experiment runs.
//!
//! Exit codes: 0 on success, 1 for I/O or format problems, 2 for usage errors and
//! 3 for numerical failures.

mod model_file;

pub use model_file::{LoadedModel, ModelFile, FORMAT_VERSION, LOAD_REJECT_TOL, LOAD_RENORMALIZE_TOL};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dsp::{read_wav, stft, write_wav};
use crate::dynamic::{
    build_lag_matrix, filter_sequence, lower_bound, nvar_divergence, train, FilterConfig, TrainConfig,
    DEFAULT_INNER_ITERS,
};
use crate::error::{Error, Result};
use crate::experiments::{
    format_g, run_separation, run_tracking, separate, track_frequency, tracking_model, ExperimentReport,
    SeparationScenario, TrackingScenario,
};
use crate::matrix::NonnegMatrix;

#[derive(Debug, Parser)]
#[command(name = "dnmf", version, about = "Dynamic nonnegative matrix factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a basis and N-VAR dynamics from a WAV file or a CSV magnitude matrix.
    Train(TrainArgs),
    /// Split a two-source mixture with two trained models.
    Separate(SeparateArgs),
    /// Recover speech from a noisy recording with speech and noise models.
    Denoise(DenoiseArgs),
    /// Run a Monte Carlo experiment and write its metric table.
    Experiment(ExperimentArgs),
    /// Track the frequency of a single sinusoid in an 8 kHz recording.
    Track(TrackArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StftArgs {
    /// Frame length in samples (a power of two).
    #[arg(long = "fft", default_value_t = 1024)]
    pub fft_size: usize,
    /// Frame advance in samples.
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// WAV file, or CSV file with one row per frequency bin and one column per frame.
    pub input: PathBuf,
    /// Number of basis vectors I.
    #[arg(long, default_value_t = 50)]
    pub rank: usize,
    /// N-VAR order J; 0 trains a static model.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// EM iterations.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Iteration after which the N-VAR model is estimated and used as a prior.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Annealing exponent applied to the predictions.
    #[arg(long, default_value_t = 0.15)]
    pub q: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub stft: StftArgs,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    /// Annealing exponent for the filter's predictions.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Update iterations per frame.
    #[arg(long, default_value_t = DEFAULT_INNER_ITERS)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub stft: StftArgs,
}

impl FilterArgs {
    fn config(&self) -> FilterConfig {
        FilterConfig { q: self.q, inner_iters: self.inner_iters, seed: self.seed }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    #[arg(long)]
    pub model1: PathBuf,
    #[arg(long)]
    pub model2: PathBuf,
    #[arg(long)]
    pub out1: PathBuf,
    #[arg(long)]
    pub out2: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub noisy: PathBuf,
    #[arg(long)]
    pub speech_model: PathBuf,
    #[arg(long)]
    pub noise_model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Tracking,
    Separation,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Monte Carlo runs per SNR (tracking only).
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    /// Comma-separated input SNRs in dB; for separation, the mixture SNRs.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// 8 kHz mono WAV.
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = DEFAULT_INNER_ITERS)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::DimensionMismatch(_) | Error::Io(_) | Error::Parse(_) | Error::UnsupportedAudio(_) => 1,
        Error::InvalidEntry { .. }
        | Error::ZeroColumn(_)
        | Error::EmptyBasis(_)
        | Error::NotStochastic { .. }
        | Error::NonPositive { .. }
        | Error::ZeroDenominator(_)
        | Error::NoConvergence { .. }
        | Error::InfiniteSnr => 3,
    }
}

/// Parses `args` (including the program name), runs the command and reports errors on stderr.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Separate(a) => cmd_separate(a, out),
        Command::Denoise(a) => cmd_denoise(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::Track(a) => cmd_track(a, out),
    }
}

/// Reads a CSV matrix of nonnegative numbers, one row per line.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<NonnegMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {field:?}: {e}", r + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    NonnegMatrix::from_rows(&rows)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn write_out(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(line)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let x = if is_csv(&a.input) {
        read_matrix_csv(&a.input)?
    } else {
        let (samples, rate) = read_wav(&a.input)?;
        stft(&samples, a.stft.fft_size, a.stft.hop, rate)?.magnitude()
    };
    let cfg = TrainConfig { iters: a.iters, prior_start: a.m, q: a.q, seed: a.seed };
    let trained = train(&x, a.rank, a.order, &cfg)?;
    let h = trained.h.matrix();
    let bound = lower_bound(&x, &trained.model, h, &trained.model, h)?;
    let metadata = BTreeMap::from([
        ("source".to_string(), a.input.display().to_string()),
        ("seed".to_string(), a.seed.to_string()),
        ("iters".to_string(), a.iters.to_string()),
        ("m".to_string(), a.m.to_string()),
        ("fft".to_string(), a.stft.fft_size.to_string()),
        ("hop".to_string(), a.stft.hop.to_string()),
        ("created_unix".to_string(), unix_time()),
    ]);
    ModelFile::from_model(&trained.model, a.q, metadata).save(&a.out)?;
    write_out(out, format_args!("lower_bound {}", format_g(bound)))?;
    if a.order > 0 {
        let v = build_lag_matrix(h, a.order)?;
        let d = nvar_divergence(h, &trained.model.stacked_lags()?, &v)?;
        write_out(out, format_args!("nvar_divergence {}", format_g(d)))?;
    }
    write_out(out, format_args!("wrote {}", a.out.display()))
}

fn unix_time() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default()
}

fn load_model(path: &Path, bins: usize) -> Result<crate::dynamic::DnmfModel> {
    let loaded = ModelFile::load(path)?.into_model()?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    if loaded.model.bins() != bins {
        return Err(Error::DimensionMismatch(format!(
            "{} has K = {}, but the FFT size gives {bins} bins",
            path.display(),
            loaded.model.bins()
        )));
    }
    Ok(loaded.model)
}

/// Loads a mixture and two models and returns both source estimates with the sample rate.
fn separate_files(mixture: &Path, model1: &Path, model2: &Path, f: &FilterArgs) -> Result<(Vec<f64>, Vec<f64>, u32)> {
    let (samples, rate) = read_wav(mixture)?;
    let spec = stft(&samples, f.stft.fft_size, f.stft.hop, rate)?;
    let m1 = load_model(model1, spec.bins())?;
    let m2 = load_model(model2, spec.bins())?;
    let (y1, y2) = separate(&spec, &m1, &m2, &f.config())?;
    Ok((y1, y2, rate))
}

fn cmd_separate(a: &SeparateArgs, out: &mut dyn Write) -> Result<()> {
    let (y1, y2, rate) = separate_files(&a.mixture, &a.model1, &a.model2, &a.filter)?;
    write_wav(&a.out1, &y1, rate)?;
    write_wav(&a.out2, &y2, rate)?;
    write_out(out, format_args!("wrote {} and {}", a.out1.display(), a.out2.display()))
}

fn cmd_denoise(a: &DenoiseArgs, out: &mut dyn Write) -> Result<()> {
    let (speech, _, rate) = separate_files(&a.noisy, &a.speech_model, &a.noise_model, &a.filter)?;
    write_wav(&a.out, &speech, rate)?;
    write_out(out, format_args!("wrote {}", a.out.display()))
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let report = match a.scenario {
        Scenario::Tracking => {
            let mut s = TrackingScenario { runs: a.runs, seed: a.seed, ..Default::default() };
            if let Some(snrs) = &a.snr {
                s.snrs_db = snrs.clone();
            }
            run_tracking(&s)?
        }
        Scenario::Separation => {
            let snrs = a.snr.clone().unwrap_or_else(|| vec![0.0]);
            let mut report = ExperimentReport::default();
            for snr in snrs {
                let s = SeparationScenario { mixture_snr_db: snr, seed: a.seed, ..Default::default() };
                report.rows.extend(run_separation(&s)?.rows);
            }
            report
        }
    };
    report.write_csv(File::create(&a.csv)?)?;
    write_out(out, format_args!("wrote {} rows to {}", report.rows.len(), a.csv.display()))
}

fn cmd_track(a: &TrackArgs, out: &mut dyn Write) -> Result<()> {
    let scenario = TrackingScenario::default();
    let (samples, rate) = read_wav(&a.input)?;
    if rate != scenario.sample_rate {
        return Err(Error::UnsupportedAudio(format!(
            "tracking expects {} Hz input, got {rate} Hz",
            scenario.sample_rate
        )));
    }
    let mag = stft(&samples, scenario.fft_size, scenario.hop, rate)?.magnitude();
    let cfg = FilterConfig { q: a.q, inner_iters: a.inner_iters, seed: a.seed };
    let h = filter_sequence(&tracking_model(scenario.bins()), &mag, &cfg)?;
    let mut text = String::from("frame,omega\n");
    for (t, col) in h.columns().iter().enumerate() {
        text.push_str(&format!("{},{}\n", t + 1, format_g(track_frequency(col, scenario.fft_size))));
    }
    match &a.csv {
        Some(path) => {
            std::fs::write(path, text)?;
            write_out(out, format_args!("wrote {} frames to {}", h.cols(), path.display()))
        }
        None => Ok(out.write_all(text.as_bytes())?),
    }
}
