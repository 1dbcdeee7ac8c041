//! Command-line frontend: matrix generation, estimator runs, oracle
//! comparisons and CSV/JSON output.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::density::Method;
use crate::error::{DosError, Result};
use crate::lanczos::{HaydockRoute, Reorthogonalization};
use crate::matrix::{
    load_matrix_market, write_matrix_market, GaussianBump, IntervalOptions, LaplacianSpec,
    SparseSymmetricMatrix, SpectralInterval,
};
use crate::metrics::{temperature_sweep, PhysicalConstants, DEFAULT_CENTERS};
use crate::pipeline::{evaluate_error, heat_capacity, run_method, spectral_interval, EstimatorConfig};
use crate::reference::{dense_eigensolve, DEFAULT_ORACLE_CAP};
use crate::stochastic::ProbeDistribution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ORACLE_CAP: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "specdos", version, about = "Spectral density estimation for large symmetric matrices")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPECDOS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the selected matrix in Matrix Market format.
    Gen {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the spectral interval.
    Bounds {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one estimator and write `lambda,phi`.
    Dos {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, default_value = "lanczos")]
        method: Method,
        /// CSV output; a `.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regularized DOS from the dense eigendecomposition.
    Exact {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        /// Also write the eigenvalues, one per line.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of several methods against the dense oracle, repeated over seeds.
    Compare {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, value_delimiter = ',', default_value = "lanczos,kpm,kpm-jackson,kpml,dgl,haydock")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_CENTERS)]
        centers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized heat capacity over a temperature sweep.
    Heatcap {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, value_delimiter = ',', default_value = "exact,lanczos,kpm")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0.05)]
        tmin: f64,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 100)]
        temps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Matrix Market file.
    #[arg(long, conflicts_with_all = ["laplacian2d", "bump", "no_bumps"])]
    pub matrix: Option<PathBuf>,
    /// Modified 2D Laplacian grid, e.g. `30x25` (the default).
    #[arg(long)]
    pub laplacian2d: Option<String>,
    /// Gaussian bump `cx,cy,height,width`; repeatable. Without any, the two
    /// benchmark bumps are used.
    #[arg(long)]
    pub bump: Vec<GaussianBump>,
    /// Plain Laplacian without potential.
    #[arg(long, conflicts_with = "bump")]
    pub no_bumps: bool,
}

impl MatrixArgs {
    pub fn load(&self) -> Result<SparseSymmetricMatrix> {
        if let Some(path) = &self.matrix {
            return load_matrix_market(path);
        }
        let mut spec = LaplacianSpec::benchmark();
        if let Some(shape) = &self.laplacian2d {
            (spec.nx, spec.ny) = LaplacianSpec::parse_shape(shape)?;
        }
        if self.no_bumps {
            spec.bumps.clear();
        } else if !self.bump.is_empty() {
            spec.bumps = self.bump.clone();
        }
        spec.build()
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, default_value_t = 100)]
    pub degree: usize,
    #[arg(long, default_value_t = 100)]
    pub nvec: usize,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub probes: ProbeDistribution,
    /// Chebyshev moments from products of half-degree vectors.
    #[arg(long)]
    pub product_formula: bool,
    /// Skip reorthogonalization in Lanczos-based methods.
    #[arg(long)]
    pub no_reorth: bool,
    #[arg(long, default_value_t = 20)]
    pub interval_steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub interval_margin: f64,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
}

impl EstimatorArgs {
    pub fn config(&self, method: Method) -> EstimatorConfig {
        EstimatorConfig {
            method,
            degree: self.degree,
            n_vec: self.nvec,
            sigma: self.sigma,
            eta: self.eta,
            grid_points: self.grid_points,
            seed: self.seed,
            distribution: self.probes,
            interval: self.interval_options(),
            reorth: if self.no_reorth {
                Reorthogonalization::None
            } else {
                Reorthogonalization::Full
            },
            product_formula: self.product_formula,
            haydock_route: HaydockRoute::ContinuedFraction,
            oracle_cap: self.oracle_cap,
            ..EstimatorConfig::new(method)
        }
    }

    fn interval_options(&self) -> IntervalOptions {
        IntervalOptions {
            steps: self.interval_steps,
            margin: self.interval_margin,
            ..Default::default()
        }
    }
}

/// JSON sidecar describing a `dos` or `exact` run.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub method: Method,
    pub dim: usize,
    pub degree: Option<usize>,
    pub n_vec: Option<usize>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub seed: u64,
    pub product_formula: bool,
    pub matvecs: usize,
    pub interval_matvecs: usize,
    pub interval: SpectralInterval,
    pub grid_points: usize,
    pub truncation_diagnostic: Option<f64>,
    pub wall_time_s: f64,
}

/// Exit code for a library error.
pub fn exit_code(err: &DosError) -> i32 {
    match err {
        DosError::OracleCap { .. } => EXIT_ORACLE_CAP,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(DosError::InvalidParameter("--threads must be positive".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Gen { matrix, out } => {
            let a = matrix.load()?;
            write_matrix_market(&a, &out)?;
            info!("wrote {} x {} matrix with {} nonzeros", a.dim(), a.dim(), a.nnz());
            Ok(())
        }
        Command::Bounds {
            matrix,
            steps,
            margin,
            seed,
        } => {
            let a = matrix.load()?;
            let (iv, matvecs) = spectral_interval(&a, IntervalOptions { steps, margin, seed })?;
            let json = serde_json::json!({
                "lower": iv.lower,
                "upper": iv.upper,
                "matvecs": matvecs,
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("plain json"));
            Ok(())
        }
        Command::Dos {
            matrix,
            est,
            method,
            out,
        } => {
            let a = matrix.load()?;
            cmd_dos(&a, &est.config(method), out.as_deref())
        }
        Command::Exact {
            matrix,
            sigma,
            eta,
            grid_points,
            oracle_cap,
            eigenvalues,
            out,
        } => {
            let a = matrix.load()?;
            let cfg = EstimatorConfig {
                sigma,
                eta,
                grid_points,
                oracle_cap,
                ..EstimatorConfig::new(Method::Exact)
            };
            if let Some(path) = eigenvalues {
                let s = dense_eigensolve(&a, oracle_cap, false)?;
                let mut w = io::BufWriter::new(create(&path)?);
                for v in &s.eigenvalues {
                    writeln!(w, "{v}").map_err(|e| DosError::io(&path, e))?;
                }
                w.flush().map_err(|e| DosError::io(&path, e))?;
            }
            cmd_dos(&a, &cfg, out.as_deref())
        }
        Command::Compare {
            matrix,
            est,
            methods,
            degrees,
            reps,
            centers,
            out,
        } => {
            let a = matrix.load()?;
            cmd_compare(&a, &est, &methods, &degrees, reps, centers, out.as_deref())
        }
        Command::Heatcap {
            matrix,
            est,
            methods,
            tmin,
            tmax,
            temps,
            out,
        } => {
            let a = matrix.load()?;
            if !(tmin > 0.0 && tmax > tmin) || temps < 2 {
                return Err(DosError::InvalidParameter(
                    "need 0 < --tmin < --tmax and --temps >= 2".into(),
                ));
            }
            let t = temperature_sweep(tmin, tmax, temps);
            cmd_heatcap(&a, &est, &methods, &t, out.as_deref())
        }
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| DosError::io(path, e))
}

fn cmd_dos(a: &SparseSymmetricMatrix, cfg: &EstimatorConfig, out: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let run = run_method(a, cfg, None)?;
    let wall = start.elapsed().as_secs_f64();
    let est = run.original();
    let summary = RunSummary {
        method: cfg.method,
        dim: a.dim(),
        degree: est.params.degree,
        n_vec: est.params.n_vec,
        sigma: est.params.sigma,
        eta: est.params.eta,
        seed: cfg.seed,
        product_formula: cfg.product_formula,
        matvecs: est.params.matvecs,
        interval_matvecs: run.interval_matvecs,
        interval: run.interval,
        grid_points: est.len(),
        truncation_diagnostic: est.params.truncation_diagnostic,
        wall_time_s: wall,
    };
    info!(
        "{}: {} matvecs (+{} for the interval) in {wall:.3}s",
        cfg.method, summary.matvecs, summary.interval_matvecs
    );
    match out {
        Some(path) => {
            write_density_csv(path, &est.grid, &est.values)?;
            let side = path.with_extension("json");
            let json = serde_json::to_string_pretty(&summary).expect("plain json");
            std::fs::write(&side, json + "\n").map_err(|e| DosError::io(&side, e))
        }
        None => {
            let stdout = io::stdout();
            write_density(stdout.lock(), &est.grid, &est.values)
                .map_err(|e| DosError::io("<stdout>", e))
        }
    }
}

/// Writes `lambda,phi` rows.
pub fn write_density_csv(path: &Path, lambda: &[f64], phi: &[f64]) -> Result<()> {
    write_density(create(path)?, lambda, phi).map_err(|e| DosError::io(path, e))
}

fn write_density<W: Write>(w: W, lambda: &[f64], phi: &[f64]) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["lambda", "phi"])?;
    for (l, p) in lambda.iter().zip(phi) {
        csv.serialize((l, p))?;
    }
    csv.flush()
}

/// Reads a `lambda,phi` file written by [`write_density_csv`].
pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| DosError::io(path, e.into()))?;
    let mut lambda = Vec::new();
    let mut phi = Vec::new();
    for (i, row) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (l, p) = row.map_err(|e| DosError::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        lambda.push(l);
        phi.push(p);
    }
    Ok((lambda, phi))
}

#[derive(Debug, Serialize)]
struct CompareRow {
    method: Method,
    degree: usize,
    reps: usize,
    mean_error: f64,
    std_error: f64,
    matvecs: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_compare(
    a: &SparseSymmetricMatrix,
    est: &EstimatorArgs,
    methods: &[Method],
    degrees: &[usize],
    reps: usize,
    centers: usize,
    out: Option<&Path>,
) -> Result<()> {
    if reps == 0 || methods.is_empty() || degrees.is_empty() {
        return Err(DosError::InvalidParameter(
            "compare needs at least one method, degree and repetition".into(),
        ));
    }
    let sigma = est.sigma.ok_or_else(|| {
        DosError::InvalidParameter("compare needs --sigma (the error metric width)".into())
    })?;
    let spectrum = dense_eigensolve(a, est.oracle_cap, false)?;
    let (interval, _) = spectral_interval(a, est.interval_options())?;

    let mut rows = Vec::new();
    for &method in methods {
        for &degree in degrees {
            let mut errors = Vec::with_capacity(reps);
            let mut matvecs = 0;
            for r in 0..reps as u64 {
                let mut cfg = est.config(method);
                cfg.degree = degree;
                cfg.seed = est.seed + r;
                if method == Method::Haydock && cfg.eta.is_none() {
                    cfg.eta = Some(sigma);
                }
                if method == Method::Exact {
                    cfg.sigma = Some(sigma);
                }
                let run = run_method(a, &cfg, Some(interval))?;
                matvecs = run.estimate.params.matvecs;
                errors.push(evaluate_error(&spectrum, &run, sigma, centers)?.value);
            }
            let (mean_error, std_error) = mean_std(&errors);
            info!("{method} M={degree}: {mean_error:.3e} +- {std_error:.1e}");
            rows.push(CompareRow {
                method,
                degree,
                reps,
                mean_error,
                std_error,
                matvecs,
            });
        }
    }
    write_rows(out, &rows)
}

#[derive(Debug, Serialize)]
struct HeatRow {
    method: Method,
    #[serde(rename = "T")]
    temperature: f64,
    #[serde(rename = "Cv_normalized")]
    cv: f64,
}

fn cmd_heatcap(
    a: &SparseSymmetricMatrix,
    est: &EstimatorArgs,
    methods: &[Method],
    temperatures: &[f64],
    out: Option<&Path>,
) -> Result<()> {
    let constants = PhysicalConstants::default();
    let (interval, _) = spectral_interval(a, est.interval_options())?;
    let mut rows = Vec::new();
    for &method in methods {
        let mut cfg = est.config(method);
        if matches!(method, Method::Lanczos | Method::Exact) && cfg.sigma.is_none() {
            // integrated against the heat kernel directly; sigma only
            // satisfies validation
            cfg.sigma = Some(1.0);
        }
        let cv = heat_capacity(a, &cfg, Some(interval), temperatures, &constants)?;
        rows.extend(temperatures.iter().zip(cv).map(|(&t, cv)| HeatRow {
            method,
            temperature: t,
            cv,
        }));
    }
    write_rows(out, &rows)
}

fn write_rows<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    fn emit<W: Write, T: Serialize>(w: W, rows: &[T]) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()
    }
    match out {
        Some(path) => emit(create(path)?, rows).map_err(|e| DosError::io(path, e)),
        None => emit(io::stdout().lock(), rows).map_err(|e| DosError::io("<stdout>", e)),
    }
}
