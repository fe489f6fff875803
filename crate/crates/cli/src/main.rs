use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use loopy_spectra::closed_form::{self, DEFAULT_PEAK_ETAS};
use loopy_spectra::io::{self, fmt_g12, DensityTable};
use loopy_spectra::oracle::{self, DiagConfig};
use loopy_spectra::{compare, generate, FactorGraph, GenSpec, Grid, Metric, Model, SolveConfig};

const THREADS_ENV: &str = "LOOPY_SPECTRA_THREADS";

#[derive(Parser)]
#[command(name = "loopy-spectra", version, about = "Adjacency spectra of motif networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random network and write it as JSON.
    Generate(GenerateArgs),
    /// Compute a spectral density.
    #[command(subcommand)]
    Spectrum(Spectrum),
    /// Distance between two density CSV files.
    Compare(CompareArgs),
    /// Closed-walk moments Tr A^r / n of a network.
    Moments(MomentsArgs),
    /// Degree sequence of a network, one per line.
    Degrees(DegreesArgs),
}

#[derive(Subcommand)]
enum Spectrum {
    /// Message passing on the factor graph.
    Mp(MpArgs),
    /// Analytic density of the regular edge/triangle ensemble.
    ExactRegular(ExactArgs),
    /// Dense diagonalization.
    Diag(DiagArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    RegularEt,
    PoissonEt,
    ConfigModel,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mean_edges: Option<f64>,
    #[arg(long)]
    mean_triangles: Option<f64>,
    #[arg(long)]
    degrees_file: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    xmin: f64,
    #[arg(long, allow_negative_numbers = true)]
    xmax: f64,
    #[arg(long)]
    dx: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid> {
        make_grid(self.xmin, self.xmax, self.dx)
    }
}

fn make_grid(xmin: f64, xmax: f64, dx: f64) -> Result<Grid> {
    Grid::new(xmin, xmax, dx).with_context(|| format!("invalid grid: xmin={xmin} xmax={xmax} dx={dx}"))
}

#[derive(Args)]
struct MpArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Broaden to Im rho(x + i eta); without it only the continuous part is written.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    peaks_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagArgs {
    #[arg(long)]
    net: PathBuf,
    /// Histogram bin width.
    #[arg(long, default_value_t = oracle::DEFAULT_BIN_WIDTH)]
    bins: f64,
    /// Write the Lorentzian-smoothed density instead of the histogram.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "eta")]
    xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "eta")]
    xmax: Option<f64>,
    #[arg(long, requires = "eta")]
    dx: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eigs_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricName {
    L1,
    Linf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, value_enum, default_value = "l1")]
    metric: MetricName,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
}

#[derive(Args)]
struct DegreesArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_net(path: &Path) -> Result<FactorGraph> {
    io::parse_network(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn run_generate(a: GenerateArgs) -> Result<ExitCode> {
    let need_n = || a.n.context("--n is required for this model");
    let model = match a.model {
        ModelName::RegularEt => Model::RegularEdgeTriangle { n: need_n()? },
        ModelName::PoissonEt => Model::PoissonEdgeTriangle {
            n: need_n()?,
            mean_edges: a.mean_edges.context("--mean-edges is required for poisson-et")?,
            mean_triangles: a.mean_triangles.context("--mean-triangles is required for poisson-et")?,
        },
        ModelName::ConfigModel => {
            let path = a.degrees_file.as_deref().context("--degrees-file is required for config-model")?;
            let degrees = io::parse_degrees(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(n) = a.n {
                if n != degrees.len() {
                    bail!("--n {n} does not match {} degrees in {}", degrees.len(), path.display());
                }
            }
            Model::ConfigurationModel { degrees }
        }
    };
    let fg = generate(&GenSpec { model, seed: a.seed })?;
    emit(a.out.as_deref(), &io::write_network(&fg))?;
    Ok(ExitCode::SUCCESS)
}

fn run_mp(a: MpArgs) -> Result<ExitCode> {
    let grid = a.grid.grid()?;
    let cfg = SolveConfig { tol: a.tol, max_iter: a.max_iter, damping: a.damping, warm_start: !a.no_warm_start };
    cfg.validate()?;
    if !(a.eta > 0.0 && a.eta.is_finite()) {
        bail!("--eta must be positive and finite, got {}", a.eta);
    }
    let fg = load_net(&a.net)?;
    let result = loopy_spectra::density_scan(&fg, &grid, a.eta, &cfg)?;
    emit(a.out.as_deref(), &result.to_table().to_csv())?;
    let failed = result.converged.iter().filter(|&&c| !c).count();
    if failed > 0 {
        eprintln!("error: {failed} of {} grid points did not converge", result.grid.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_exact(a: ExactArgs) -> Result<ExitCode> {
    let grid = a.grid.grid()?;
    if let Some(eta) = a.eta {
        if !(eta > 0.0 && eta.is_finite()) {
            bail!("--eta must be positive and finite, got {eta}");
        }
    }
    emit(a.out.as_deref(), &closed_form::regular_density(&grid, a.eta).to_csv())?;
    if let Some(p) = a.peaks_out.as_deref() {
        let peaks = closed_form::peak_weights(&DEFAULT_PEAK_ETAS)?;
        emit(Some(p), &(serde_json::to_string_pretty(&peaks)? + "\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_diag(a: DiagArgs) -> Result<ExitCode> {
    if !(a.bins > 0.0 && a.bins.is_finite()) {
        bail!("--bins must be positive, got {}", a.bins);
    }
    if let Some(eta) = a.eta {
        if !(eta > 0.0 && eta.is_finite()) {
            bail!("--eta must be positive and finite, got {eta}");
        }
    }
    let fg = load_net(&a.net)?;
    let report = oracle::diagonalize_with(&fg, &DiagConfig { bin_width: a.bins, ..DiagConfig::default() })?;
    let table = match a.eta {
        Some(eta) => {
            let (lo, hi) = match (report.eigenvalues.first(), report.eigenvalues.last()) {
                (Some(&lo), Some(&hi)) => (lo - 0.5, hi + 0.5),
                _ => (-0.5, 0.5),
            };
            let grid = make_grid(a.xmin.unwrap_or(lo), a.xmax.unwrap_or(hi), a.dx.unwrap_or(0.01))?;
            let xs: Vec<f64> = grid.points().collect();
            let rho = oracle::smoothed_density(&report.eigenvalues, &xs, eta);
            DensityTable::from_curve(xs, rho)
        }
        None => DensityTable::from_curve(report.histogram.centers(), report.histogram.density.iter().copied()),
    };
    emit(a.out.as_deref(), &table.to_csv())?;
    if let Some(p) = a.eigs_out.as_deref() {
        emit(Some(p), &io::write_values(&report.eigenvalues))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_compare(a: CompareArgs) -> Result<ExitCode> {
    let load = |p: &Path| -> Result<DensityTable> {
        DensityTable::parse_csv(&read(p)?).with_context(|| format!("parsing {}", p.display()))
    };
    let (ta, tb) = (load(&a.a)?, load(&a.b)?);
    let metric = match a.metric {
        MetricName::L1 => Metric::L1,
        MetricName::Linf => Metric::Linf,
    };
    let r = compare(&ta, &tb, metric)?;
    println!(
        "metric={} value={} lo={} hi={} dx={} points={}",
        match metric {
            Metric::L1 => "l1",
            Metric::Linf => "linf",
        },
        fmt_g12(r.value),
        fmt_g12(r.lo),
        fmt_g12(r.hi),
        fmt_g12(r.dx),
        r.points
    );
    match a.threshold {
        Some(t) if !(r.value < t) => {
            eprintln!("error: {} is not below threshold {}", fmt_g12(r.value), fmt_g12(t));
            Ok(ExitCode::from(1))
        }
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn run_moments(a: MomentsArgs) -> Result<ExitCode> {
    if a.max_order > oracle::MAX_WALK_LENGTH {
        bail!("--max-order must be at most {}", oracle::MAX_WALK_LENGTH);
    }
    let fg = load_net(&a.net)?;
    let m = oracle::trace_moments(&fg, a.max_order)?;
    let mut out = String::new();
    for (r, v) in m.iter().enumerate() {
        out.push_str(&format!("{r},{}\n", fmt_g12(*v)));
    }
    emit(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_degrees(a: DegreesArgs) -> Result<ExitCode> {
    let fg = load_net(&a.net)?;
    let out: String = loopy_spectra::degrees_of(&fg).iter().map(|d| format!("{d}\n")).collect();
    emit(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_ENV}={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Spectrum(Spectrum::Mp(a)) => run_mp(a),
        Command::Spectrum(Spectrum::ExactRegular(a)) => run_exact(a),
        Command::Spectrum(Spectrum::Diag(a)) => run_diag(a),
        Command::Compare(a) => run_compare(a),
        Command::Moments(a) => run_moments(a),
        Command::Degrees(a) => run_degrees(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
