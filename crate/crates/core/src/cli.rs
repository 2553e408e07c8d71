//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{
    default_beta_grid, format_table, log_grid, run_benchmark, sweep_beta, BenchmarkConfig,
};
use crate::io::{read_signal, read_values, to_json, write_json, write_signal};
use crate::prior::{besov_norm, sample_besov_function, BetaSchedule, PriorConfig, RandomSeed};
use crate::prune::{BaseDensity, Hyperprior, PruneReport};
use crate::quality::MetricsReport;
use crate::restore::{
    convolve, default_image_scale, denoise, pnp_deconvolve, ConvOp, DenoiseConfig, NoiseHandling,
    PnPConfig, PruneMode,
};
use crate::testdata::{add_noise, blocks, phantom, NoiseLevel};
use crate::tree::TreeMask;
use crate::wavelet::{DyadicSignal, WaveletBasis};

#[derive(Debug, Parser)]
#[command(
    name = "besov-tree",
    version,
    about = "Wavelet tree pruning under random tree Besov priors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise a CSV signal or PGM image.
    Denoise(DenoiseArgs),
    /// Draw a function from the random tree Besov prior.
    SamplePrior(SampleArgs),
    /// Plug-and-play deconvolution of a 1D signal.
    Deconvolve(DeconvolveArgs),
    /// Compare the tree methods with thresholding baselines.
    Benchmark(BenchmarkArgs),
    /// Score fixed-beta denoising over a beta grid.
    SweepBeta(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveletArg {
    Haar,
    Db2,
}

impl WaveletArg {
    fn basis(self) -> WaveletBasis {
        match self {
            WaveletArg::Haar => WaveletBasis::haar(),
            WaveletArg::Db2 => WaveletBasis::db2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModelArg {
    /// Coefficients carry unit-variance noise (use with --scale).
    Unit,
    /// Estimate the noise level from the finest wavelet level.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestSignal {
    Blocks,
    Phantom,
}

/// Noise synthesis: treat the input as clean and add Gaussian noise.
#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Noise sd such that sd(signal) / sd(noise) equals this ratio.
    #[arg(long, conflicts_with = "noise_pct")]
    pub snr: Option<f64>,
    /// Noise sd as a percentage of the largest absolute sample.
    #[arg(long)]
    pub noise_pct: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl NoiseArgs {
    fn level(&self) -> Option<NoiseLevel> {
        self.snr
            .map(NoiseLevel::Snr)
            .or(self.noise_pct.map(NoiseLevel::Percent))
    }

    fn apply(&self, clean: &DyadicSignal) -> Result<Option<DyadicSignal>> {
        match self.level() {
            Some(level) => {
                let sigma = level.sigma(clean)?;
                Ok(Some(add_noise(clean, sigma, RandomSeed::new(self.seed))))
            }
            None => Ok(None),
        }
    }
}

/// Denoiser settings shared by `denoise` and `deconvolve`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub wavelet: Option<WaveletArg>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub prior: PriorArg,
    /// Fixed wavelet density index in (0, 1/2].
    #[arg(long, conflicts_with = "auto_beta")]
    pub beta: Option<f64>,
    /// Estimate beta per level under the hyperprior (the default).
    #[arg(long)]
    pub auto_beta: bool,
    /// Hyperprior exponent.
    #[arg(long, default_value_t = 100.0)]
    pub a: f64,
    /// Base prior scale (Laplace default: 1 for signals, 0.11 for images).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Input multiplier (images default to 250 / noise-pct when that is given).
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_model: Option<NoiseModelArg>,
}

impl ModelArgs {
    fn config(&self, dim: usize, noise_pct: Option<f64>) -> Result<DenoiseConfig> {
        let basis = self
            .wavelet
            .unwrap_or(if dim == 2 {
                WaveletArg::Db2
            } else {
                WaveletArg::Haar
            })
            .basis();
        let density = match self.prior {
            PriorArg::Gaussian => BaseDensity::Gaussian {
                kappa: self.kappa.unwrap_or(1.0),
            },
            PriorArg::Laplace => {
                BaseDensity::laplace(self.kappa.unwrap_or(if dim == 2 { 0.11 } else { 1.0 }))
            }
        };
        let mode = match self.beta {
            Some(b) => PruneMode::Fixed(BetaSchedule::Scalar(b)),
            None => PruneMode::Auto(Hyperprior::new(self.a)?),
        };
        let scale = match (self.scale, noise_pct) {
            (Some(s), _) => s,
            (None, Some(p)) if dim == 2 => default_image_scale(p)?,
            _ => 1.0,
        };
        let noise = match self.noise_model {
            Some(NoiseModelArg::Unit) => NoiseHandling::AssumeUnit,
            Some(NoiseModelArg::Estimate) => NoiseHandling::Estimate,
            None if dim == 2 => NoiseHandling::AssumeUnit,
            None => NoiseHandling::Estimate,
        };
        let cfg = DenoiseConfig::new(basis, density, mode)
            .with_scale(scale)
            .with_noise(noise);
        cfg.validate()?;
        if let PruneMode::Fixed(BetaSchedule::Scalar(b)) = cfg.mode {
            if !(b > 0.0 && b <= 0.5) {
                return Err(Error::param(format!("--beta {b} must lie in (0, 0.5]")));
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// CSV signal or PGM image.
    #[arg(long)]
    pub input: PathBuf,
    /// Reconstruction (CSV or PGM by extension).
    #[arg(long)]
    pub output: PathBuf,
    /// Clean signal for metrics; defaults to the input when noise is synthesised.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Pruning report JSON [default: <output>.prune.json].
    #[arg(long)]
    pub prune_json: Option<PathBuf>,
    /// Metrics JSON [default: <output>.metrics.json].
    #[arg(long)]
    pub metrics_json: Option<PathBuf>,
    /// Record wall-clock time in the metrics.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Sampled function (CSV or PGM).
    #[arg(long)]
    pub output: PathBuf,
    /// Mask and norm JSON [default: <output>.json].
    #[arg(long)]
    pub mask_json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Depth J; the output has 2^(J+1) samples per side.
    #[arg(long, default_value_t = 9)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, value_enum, default_value = "db2")]
    pub wavelet: WaveletArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DeconvolveArgs {
    /// Measured signal, or the clean signal when --snr/--noise-pct/--simulate is given.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Odd-length kernel as CSV [default: Gaussian, sd 0.75, radius 2].
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Blur the input with the kernel (and add noise if requested) before inverting.
    #[arg(long)]
    pub simulate: bool,
    /// Gradient step [default: 1 / ||A||^2].
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Metrics JSON [default: <output>.metrics.json].
    #[arg(long)]
    pub metrics_json: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

/// Ground truth and noisy data for `benchmark` and `sweep-beta`.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Clean reference signal or image.
    #[arg(long, conflicts_with = "test_signal")]
    pub reference: Option<PathBuf>,
    /// Built-in ground truth.
    #[arg(long, value_enum)]
    pub test_signal: Option<TestSignal>,
    /// Samples per side of the built-in signal.
    #[arg(long)]
    pub size: Option<usize>,
    /// Noisy observation; synthesised from --snr/--noise-pct otherwise.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

impl DataArgs {
    fn load(&self) -> Result<(DyadicSignal, DyadicSignal, Option<f64>)> {
        let clean = match (&self.reference, self.test_signal) {
            (Some(p), _) => read_signal(p)?,
            (None, Some(TestSignal::Blocks)) => blocks(self.size.unwrap_or(8192))?,
            (None, Some(TestSignal::Phantom)) => phantom(self.size.unwrap_or(256))?,
            (None, None) => return Err(Error::param("give --reference or --test-signal")),
        };
        let noisy = match (&self.input, self.noise.apply(&clean)?) {
            (Some(p), None) => read_signal(p)?,
            (None, Some(x)) => x,
            (Some(_), Some(_)) => {
                return Err(Error::param(
                    "--input conflicts with synthesised noise (--snr/--noise-pct)",
                ))
            }
            (None, None) => return Err(Error::param("give --input or one of --snr/--noise-pct")),
        };
        if !clean.same_shape(&noisy) {
            return Err(Error::param("noisy input and reference differ in shape"));
        }
        Ok((clean, noisy, self.noise.noise_pct))
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Table as JSON; the aligned text goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub wavelet: Option<WaveletArg>,
    /// Hyperprior exponent for automatic Gaussian pruning.
    #[arg(long, default_value_t = 100.0)]
    pub a: f64,
    /// Hyperprior exponent for automatic Laplace pruning.
    #[arg(long, default_value_t = 10.0)]
    pub a_laplace: f64,
    /// Laplace scale [default: 1 for signals, 0.11 for images].
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_model: Option<NoiseModelArg>,
    /// Comma-separated beta grid [default: 25 log points plus refinement near 1/2].
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated beta grid.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid_size")]
    pub betas: Option<Vec<f64>>,
    /// Log-spaced grid on [1e-6, 0.49] of this size instead of the default grid.
    #[arg(long)]
    pub grid_size: Option<usize>,
}

/// Exit status for an error: 2 for usage and I/O problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Format { .. } | Error::Parameter(_) => 2,
        _ => 1,
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Serialize)]
struct SampleOutput {
    mask: TreeMask,
    kept_nodes: usize,
    besov_norm: f64,
    seed: u64,
}

/// Run a parsed command; returns the text for stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Denoise(a) => cmd_denoise(&a),
        Command::SamplePrior(a) => cmd_sample_prior(&a),
        Command::Deconvolve(a) => cmd_deconvolve(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::SweepBeta(a) => cmd_sweep_beta(&a),
    }
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<String> {
    let input = read_signal(&args.input)?;
    let cfg = args.model.config(input.dim(), args.noise.noise_pct)?;
    let synthesised = args.noise.apply(&input)?;
    let reference = match (&args.reference, &synthesised) {
        (Some(p), _) => Some(read_signal(p)?),
        (None, Some(_)) => Some(input.clone()),
        (None, None) => None,
    };
    let noisy = synthesised.unwrap_or(input);
    let start = Instant::now();
    let (rec, result) = denoise(&noisy, &cfg)?;
    let runtime = elapsed_ms(start);
    write_signal(&args.output, &rec)?;
    let report: PruneReport = result.report();
    let prune_path = args
        .prune_json
        .clone()
        .unwrap_or_else(|| sibling(&args.output, ".prune.json"));
    write_json(&prune_path, &report)?;
    let mut out = format!(
        "kept {} of {} nodes, total cost {:.6}\n",
        report.mask.count(),
        TreeMask::full(report.mask.dim(), report.mask.depth()).count(),
        report.total_cost
    );
    if let Some(reference) = reference {
        let mut m = MetricsReport::evaluate(&rec, &reference)?;
        m.beta_hat = result.beta_hat.clone();
        if args.timing {
            m.runtime_ms = Some(runtime);
        }
        let path = args
            .metrics_json
            .clone()
            .unwrap_or_else(|| sibling(&args.output, ".metrics.json"));
        write_json(&path, &m)?;
        out.push_str(&to_json(&m)?);
    }
    Ok(out)
}

pub fn cmd_sample_prior(args: &SampleArgs) -> Result<String> {
    let config = PriorConfig {
        smoothness: args.s,
        integrability: args.p,
        scale: args.kappa,
        beta: BetaSchedule::Scalar(args.beta),
        dim: args.dim,
        depth: args.depth,
    };
    let basis = args.wavelet.basis();
    let draw = sample_besov_function(&config, &basis, RandomSeed::new(args.seed))?;
    write_signal(&args.output, &draw.signal)?;
    let summary = SampleOutput {
        kept_nodes: draw.mask.count(),
        besov_norm: besov_norm(&draw.pyramid, args.s, args.p)?,
        mask: draw.mask,
        seed: args.seed,
    };
    let path = args
        .mask_json
        .clone()
        .unwrap_or_else(|| sibling(&args.output, ".json"));
    write_json(&path, &summary)?;
    Ok(format!(
        "kept {} nodes, Besov norm {:.6}\n",
        summary.kept_nodes, summary.besov_norm
    ))
}

pub fn cmd_deconvolve(args: &DeconvolveArgs) -> Result<String> {
    let input = read_signal(&args.input)?;
    if input.dim() != 1 {
        return Err(Error::param("deconvolution supports 1D signals only"));
    }
    let op = match &args.kernel {
        Some(p) => ConvOp::new(read_values(p)?)?,
        None => ConvOp::gaussian(0.75, 2)?,
    };
    let simulate = args.simulate || args.noise.level().is_some();
    let (measured, reference) = if simulate {
        let blurred = convolve(&input, &op)?;
        let noisy = match args.noise.level() {
            Some(level) => add_noise(
                &blurred,
                level.sigma(&blurred)?,
                RandomSeed::new(args.noise.seed),
            ),
            None => blurred,
        };
        (noisy, Some(input))
    } else {
        (input, None)
    };
    let reference = match &args.reference {
        Some(p) => Some(read_signal(p)?),
        None => reference,
    };
    let mut config = PnPConfig::new(args.model.config(1, None)?);
    config.tau = args.tau;
    config.iterations = args.iters;
    config.tolerance = args.tolerance;
    let start = Instant::now();
    let outcome = pnp_deconvolve(&measured, &op, &config)?;
    let runtime = elapsed_ms(start);
    write_signal(&args.output, &outcome.signal)?;
    let mut out = format!(
        "{} iterations (tau {:.6}), converged: {}\n",
        outcome.iterations, outcome.tau, outcome.converged
    );
    if let Some(reference) = reference {
        let mut m = MetricsReport::evaluate(&outcome.signal, &reference)?;
        m.beta_hat = outcome.last.and_then(|r| r.beta_hat);
        if args.timing {
            m.runtime_ms = Some(runtime);
        }
        let path = args
            .metrics_json
            .clone()
            .unwrap_or_else(|| sibling(&args.output, ".metrics.json"));
        write_json(&path, &m)?;
        out.push_str(&to_json(&m)?);
    }
    Ok(out)
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<String> {
    let (clean, noisy, pct) = args.data.load()?;
    let mut cfg = if clean.dim() == 2 {
        BenchmarkConfig::image(pct.unwrap_or(7.0))?
    } else {
        BenchmarkConfig::signal()
    };
    if let Some(w) = args.wavelet {
        cfg.basis = w.basis();
    }
    if let Some(s) = args.scale {
        cfg.scale = s;
    }
    if let Some(k) = args.kappa {
        cfg.kappa_laplace = k;
    }
    match args.noise_model {
        Some(NoiseModelArg::Unit) => cfg.noise = NoiseHandling::AssumeUnit,
        Some(NoiseModelArg::Estimate) => cfg.noise = NoiseHandling::Estimate,
        None => {}
    }
    cfg.a_gaussian = Hyperprior::new(args.a)?.a;
    cfg.a_laplace = Hyperprior::new(args.a_laplace)?.a;
    if let Some(b) = &args.betas {
        cfg.betas = b.clone();
    }
    let start = Instant::now();
    let mut rows = run_benchmark(&clean, &noisy, &cfg)?;
    if args.timing {
        let ms = elapsed_ms(start);
        for r in &mut rows {
            r.metrics.runtime_ms = Some(ms);
        }
    }
    if let Some(p) = &args.output {
        write_json(p, &rows)?;
    }
    Ok(format_table(&rows))
}

pub fn cmd_sweep_beta(args: &SweepArgs) -> Result<String> {
    let (clean, noisy, pct) = args.data.load()?;
    let cfg = args.model.config(clean.dim(), pct)?;
    let betas = match (&args.betas, args.grid_size) {
        (Some(b), _) => b.clone(),
        (None, Some(n)) => log_grid(1e-6, 0.49, n)?,
        (None, None) => default_beta_grid(),
    };
    let report = sweep_beta(&noisy, &clean, &cfg, &betas)?;
    if let Some(p) = &args.output {
        write_json(p, &report)?;
    }
    let mut out = String::new();
    for pt in &report.points {
        out.push_str(&format!(
            "beta {:.6e}  {} {:.6}  rel_error {:.6}\n",
            pt.beta, report.metric, pt.score, pt.rel_error
        ));
    }
    out.push_str(&format!("best beta {:.6e}\n", report.best_beta));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::param("x")), 2);
        assert_eq!(
            exit_code(&Error::Io {
                path: "a".into(),
                source: std::io::Error::other("x")
            }),
            2
        );
        assert_eq!(exit_code(&Error::ZeroReference), 1);
        assert_eq!(
            exit_code(&Error::Divergence {
                iteration: 1,
                norm: 2.0,
                limit: 1.0
            }),
            1
        );
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "besov-tree",
            "denoise",
            "--input",
            "a.csv",
            "--output",
            "b.csv",
            "--wavelet",
            "haar",
            "--prior",
            "gaussian",
            "--auto-beta",
            "--a",
            "100",
        ])
        .unwrap();
        let Command::Denoise(d) = cli.command else {
            panic!()
        };
        assert!(d.model.auto_beta);
        let cfg = d.model.config(1, None).unwrap();
        assert_eq!(cfg.mode, PruneMode::Auto(Hyperprior { a: 100.0 }));
        assert_eq!(cfg.noise, NoiseHandling::Estimate);
    }

    #[test]
    fn beta_and_auto_conflict() {
        let r = Cli::try_parse_from([
            "besov-tree",
            "denoise",
            "--input",
            "a",
            "--output",
            "b",
            "--beta",
            "0.1",
            "--auto-beta",
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn image_defaults() {
        let cli = Cli::try_parse_from([
            "besov-tree",
            "denoise",
            "--input",
            "a.pgm",
            "--output",
            "b.pgm",
            "--prior",
            "laplace",
            "--noise-pct",
            "7",
        ])
        .unwrap();
        let Command::Denoise(d) = cli.command else {
            panic!()
        };
        let cfg = d.model.config(2, d.noise.noise_pct).unwrap();
        assert_eq!(cfg.density, BaseDensity::laplace(0.11));
        assert!((cfg.scale - 250.0 / 7.0).abs() < 1e-12);
        assert_eq!(cfg.noise, NoiseHandling::AssumeUnit);
        assert_eq!(cfg.basis, WaveletBasis::db2());
    }

    #[test]
    fn bad_beta_is_usage_error() {
        let m = ModelArgs {
            wavelet: None,
            prior: PriorArg::Gaussian,
            beta: Some(0.7),
            auto_beta: false,
            a: 100.0,
            kappa: None,
            scale: None,
            noise_model: None,
        };
        assert_eq!(exit_code(&m.config(1, None).unwrap_err()), 2);
    }
}
