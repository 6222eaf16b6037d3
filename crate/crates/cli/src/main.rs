use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use remle::error::Error;
use remle::group::{default_group_init, group_mm_fit, GroupedDesign};
use remle::io::{format_number, read_matrix_csv, read_truth_csv, read_vector_csv};
use remle::mp::{d_factor, delta_limit, s_bar, trace_limit_inv, MpSpec};
use remle::sim::{run_experiment, summarize, write_manifest, write_records_csv, write_summary_csv};
use remle::sim::{ExperimentConfig, RunOptions};
use remle::single::{
    default_init, delta, delta_starstar, fit_by_root, mm_fit, DeltaStar, MmOptions, RootOptions,
    TrueParameters,
};
use remle::{decompose, DesignMatrix};

/// SNR and noise-variance estimation for high-dimensional linear models.
///
/// Exit status: 0 on success, 1 on input errors, 2 when a fit did not
/// converge or failed numerically (estimates, if any, are still written).
#[derive(Debug, Parser)]
#[command(name = "remle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the noise variance and SNR(s) to a design and response.
    Estimate(EstimateArgs),
    /// Run a seeded simulation experiment from a TOML config.
    Simulate(SimulateArgs),
    /// Tabulate the limiting trace functionals for aspect ratio tau.
    Theory(TheoryArgs),
    /// Tabulate the likelihood equation and its surrogates against a known truth.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct FitFlags {
    /// Convergence tolerance: log-likelihood change for mm [default: 1e-8],
    /// relative bracket width for root [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct MatrixInput {
    /// Design matrix CSV, one observation per row.
    #[arg(long)]
    matrix: PathBuf,
    /// Response CSV, one value per row.
    #[arg(long)]
    response: PathBuf,
    /// Input CSVs start with a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    /// Multiplicative MM iteration.
    Mm,
    /// Solve the profiled SNR equation (single design only).
    Root,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: MatrixInput,
    /// Consecutive column group sizes, e.g. `500,500`; must sum to the column count.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Method::Mm)]
    method: Method,
    #[command(flatten)]
    fit: FitFlags,
    /// Output CSV path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records.csv, summary.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "REMLE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `tol` [config default: 1e-8].
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides `max_iter` [config default: 10000].
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Limiting aspect ratio n/p.
    #[arg(long)]
    tau: f64,
    /// SNR grid, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// True SNR.
    #[arg(long, default_value_t = 2.0)]
    gamma0: f64,
    /// True noise variance.
    #[arg(long, default_value_t = 0.5)]
    sigma0_sq: f64,
    /// Output CSV path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: MatrixInput,
    /// Truth CSV: header `sigma0_sq,beta_1,...,beta_p` and one row.
    #[arg(long)]
    truth: PathBuf,
    /// SNR grid, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// Output CSV path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::NoRoot { .. } | Error::Quadrature { .. } => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    // usage errors are input errors, not clap's default exit status 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Theory(a) => theory(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: the fit did not converge");
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_table(path: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(open_out(path)?);
    let csv_err = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_inputs(input: &MatrixInput) -> Result<(DesignMatrix<f64>, Vec<f64>), Failure> {
    let z = read_matrix_csv(&input.matrix, input.header)?;
    let y = read_vector_csv(&input.response, input.header)?;
    if y.len() != z.nrows() {
        return Err(Failure::Input(format!(
            "{} has {} rows but {} has {} values",
            input.matrix.display(),
            z.nrows(),
            input.response.display(),
            y.len()
        )));
    }
    Ok((z, y))
}

fn estimate(a: EstimateArgs) -> Outcome {
    let (z, y) = read_inputs(&a.input)?;
    let mut mm = MmOptions::default().with_max_iter(a.fit.max_iter);
    if let Some(t) = a.fit.tol {
        mm = mm.with_tol(t);
    }
    let sizes = a.groups.clone().unwrap_or_else(|| vec![z.ncols()]);
    let total: usize = sizes.iter().sum();
    if sizes.contains(&0) || total != z.ncols() {
        return Err(Failure::Input(format!(
            "--groups sizes sum to {total} but the design has {} columns",
            z.ncols()
        )));
    }

    let (header, row, converged) = if sizes.len() == 1 {
        let cache = decompose(&z)?;
        let ry = cache.rotate_response(&y)?;
        let est = match a.method {
            Method::Mm => mm_fit(&cache, &ry, default_init(&ry), &mm)?,
            Method::Root => {
                let mut ro = RootOptions::default();
                ro.max_iter = a.fit.max_iter;
                if let Some(t) = a.fit.tol {
                    ro.tol = t;
                }
                fit_by_root(&cache, &ry, &ro)?
            }
        };
        let header = ["gamma_hat", "sigma_eps_hat", "sigma_alpha_hat", "iterations", "converged", "boundary", "final_loglik"];
        let row = vec![
            format_number(est.gamma_hat),
            format_number(est.sigma_eps_sq),
            format_number(est.sigma_alpha_sq),
            est.iterations.to_string(),
            est.converged.to_string(),
            est.boundary.to_string(),
            format_number(est.final_loglik),
        ];
        eprintln!(
            "n = {}, p = {}: gamma_hat = {}, sigma_eps_hat = {}, {} after {} iterations{}",
            z.nrows(),
            z.ncols(),
            row[0],
            row[1],
            if est.converged { "converged" } else { "NOT converged" },
            est.iterations,
            if est.boundary { " (boundary)" } else { "" }
        );
        (header.map(String::from).to_vec(), row, est.converged)
    } else {
        if matches!(a.method, Method::Root) {
            return Err(Failure::Input("--method root supports a single design only".into()));
        }
        let design = GroupedDesign::from_partition(&z, &sizes)?;
        let (se, sa) = default_group_init(&y, design.s());
        let est = group_mm_fit(&design, &y, (se, &sa), &mm)?;
        let s = sizes.len();
        let mut header: Vec<String> = (1..=s).map(|i| format!("gamma_hat_{i}")).collect();
        header.push("gamma_hat_total".into());
        header.push("sigma_eps_hat".into());
        header.extend((1..=s).map(|i| format!("sigma_alpha_hat_{i}")));
        for c in ["iterations", "converged", "boundary", "final_loglik"] {
            header.push(c.into());
        }
        let mut row: Vec<String> = est.gamma_hat.iter().map(|v| format_number(*v)).collect();
        row.push(format_number(est.gamma_total()));
        row.push(format_number(est.sigma_eps_sq));
        row.extend(est.sigma_alpha_sq.iter().map(|v| format_number(*v)));
        row.push(est.iterations.to_string());
        row.push(est.converged.to_string());
        row.push(est.boundary.to_string());
        row.push(format_number(est.final_loglik));
        eprintln!(
            "n = {}, groups = {:?}: gamma_hat = [{}], sigma_eps_hat = {}, {} after {} iterations",
            z.nrows(),
            sizes,
            row[..s].join(", "),
            row[s + 1],
            if est.converged { "converged" } else { "NOT converged" },
            est.iterations
        );
        (header, row, est.converged)
    };
    write_table(a.out.as_deref(), &header, &[row])?;
    Ok(converged)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut cfg = ExperimentConfig::from_path(&a.config)?;
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(m) = a.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::Input(format!("{}: {e}", a.out.display())))?;
    let opts = RunOptions {
        threads: a.threads,
        dump_dir: cfg.dump_data.then(|| a.out.join("data")),
        diagnostics: false,
    };
    let start = Instant::now();
    let records = run_experiment(&cfg, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    let summary = summarize(&records)?;

    let create = |name: &str| -> Result<BufWriter<File>, Failure> {
        let p = a.out.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
    };
    write_records_csv(create("records.csv")?, &records)?;
    write_summary_csv(create("summary.csv")?, &summary)?;
    write_manifest(create("manifest.json")?, &cfg, &records, a.threads, elapsed)?;

    let failed = records.iter().filter(|r| !r.succeeded()).count();
    let unconverged = records.iter().filter(|r| r.succeeded() && !r.converged).count();
    eprintln!(
        "{} replications in {:.1} s: {} failed, {} not converged; wrote {}",
        records.len(),
        elapsed,
        failed,
        unconverged,
        a.out.display()
    );
    Ok(true)
}

fn theory(a: TheoryArgs) -> Outcome {
    let spec = MpSpec::new(a.tau)?;
    if a.gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Failure::Input("--gamma values must be finite and > 0".into()));
    }
    let header: Vec<String> = [
        "tau", "gamma", "gamma0", "sigma0_sq", "trace_limit_1", "trace_limit_2", "d_factor", "c_gamma", "s_bar",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::with_capacity(a.gamma.len());
    for &g in &a.gamma {
        rows.push(vec![
            format_number(a.tau),
            format_number(g),
            format_number(a.gamma0),
            format_number(a.sigma0_sq),
            format_number(trace_limit_inv(&spec, g, 1)?),
            format_number(trace_limit_inv(&spec, g, 2)?),
            format_number(d_factor(&spec, g)?),
            format_number(delta_limit(&spec, g, a.gamma0, a.sigma0_sq)?),
            format_number(s_bar(&spec, g, a.gamma0, a.sigma0_sq)?),
        ]);
    }
    write_table(a.out.as_deref(), &header, &rows)?;
    Ok(true)
}

fn diagnose(a: DiagnoseArgs) -> Outcome {
    let (z, y) = read_inputs(&a.input)?;
    let (sigma0_sq, beta) = read_truth_csv(&a.truth)?;
    if a.gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Failure::Input("--gamma values must be finite and > 0".into()));
    }
    let truth = TrueParameters::new(beta, sigma0_sq)?;
    let cache = decompose(&z)?;
    let ry = cache.rotate_response(&y)?;
    let star = DeltaStar::new(&cache, &z, &truth)?;
    let spec = MpSpec::new(z.nrows() as f64 / z.ncols() as f64)?;
    let gamma0 = truth.gamma0();

    let header: Vec<String> = ["gamma", "delta", "delta_star", "delta_starstar", "delta_limit"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::with_capacity(a.gamma.len());
    for &g in &a.gamma {
        rows.push(vec![
            format_number(g),
            format_number(delta(&cache, &ry, g)?),
            format_number(star.eval(&cache, g)?),
            format_number(delta_starstar(&cache, gamma0, sigma0_sq, g)?),
            format_number(delta_limit(&spec, g, gamma0, sigma0_sq)?),
        ]);
    }
    eprintln!("n = {}, p = {}, gamma0 = {}", z.nrows(), z.ncols(), format_number(gamma0));
    write_table(a.out.as_deref(), &header, &rows)?;
    Ok(true)
}
