use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use ttspec::hamiltonians::{HamiltonianSpec, Model, HENON_HEILES_LAMBDA};
use ttspec::{LocalSolver, SolverConfig};
use ttspec_cli::config::parse_local_solver;
use ttspec_cli::output::{self, Format};
use ttspec_cli::{
    loglog_slope, run, scan, Axis, Error, ExperimentConfig, ResultRecord, ScanRow, SolverKind, Status, VerifyMode, EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "ttspec", version, about = "Block tensor-train eigensolver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write its result files.
    Run(RunArgs),
    /// Repeat a configuration over a list of values of one parameter.
    Scan(ScanArgs),
    /// Solve and compare with the closed-form or dense reference.
    Verify(RunArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// laplace, henon-heiles or heisenberg.
    #[arg(long)]
    model: Model,
    /// Number of dimensions or spins.
    #[arg(long)]
    d: usize,
    /// Mode size [default: 16, or 2 for heisenberg].
    #[arg(long)]
    n: Option<usize>,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 1)]
    b: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    rmax: usize,
    #[arg(long, default_value_t = 20)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// eigb or deflation.
    #[arg(long, default_value = "eigb")]
    solver: SolverKind,
    /// Henon-Heiles anharmonicity.
    #[arg(long, default_value_t = HENON_HEILES_LAMBDA)]
    lambda: f64,
    /// Relative change of the eigenvalue sum that ends the sweeps
    /// [default: eps].
    #[arg(long)]
    conv_tol: Option<f64>,
    /// dense, iterative or auto.
    #[arg(long, default_value = "auto", value_parser = parse_local_solver)]
    local_solver: LocalSolver,
    /// Largest local problem solved densely in auto mode.
    #[arg(long)]
    local_size_threshold: Option<usize>,
    /// Rank of the random initial guess [default: b].
    #[arg(long)]
    initial_rank: Option<usize>,
    /// Largest operator dimension that may be densified.
    #[arg(long)]
    densify_cap: Option<usize>,
    /// none, closed-form or dense-oracle.
    #[arg(long)]
    verify: Option<VerifyMode>,
    /// Eigenvalue error tolerance for verification.
    #[arg(long)]
    tol_eig: Option<f64>,
    /// Subspace angle tolerance (radians) for verification.
    #[arg(long)]
    tol_angle: Option<f64>,
    /// Residual tolerance for dense-oracle verification.
    #[arg(long)]
    tol_residual: Option<f64>,
    /// Output path prefix; `.json` / `.csv` are appended.
    #[arg(long, default_value = "ttspec_result")]
    out: PathBuf,
    /// json, csv or both (JSON is always written).
    #[arg(long, default_value = "both")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter to vary: d, n, b or eps.
    #[arg(long)]
    axis: Axis,
    /// Comma-separated values of the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Accuracy of a reference run per point; fills the error column.
    #[arg(long)]
    reference_eps: Option<f64>,
    /// Runs executed concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Common {
    fn experiment(&self, default_verify: VerifyMode) -> ExperimentConfig {
        let n = self.n.unwrap_or(16);
        let mut hamiltonian = match self.model {
            Model::Laplace => HamiltonianSpec::laplace(self.d, n),
            Model::HenonHeiles => HamiltonianSpec::henon_heiles(self.d, n, self.lambda),
            Model::Heisenberg => HamiltonianSpec::heisenberg(self.d),
        };
        if let Some(n) = self.n {
            hamiltonian.n = n;
        }
        let mut sc = SolverConfig::new(self.b, self.eps)
            .with_rmax(self.rmax)
            .with_max_sweeps(self.max_sweeps)
            .with_seed(self.seed)
            .with_local_solver(self.local_solver);
        sc.conv_tol = self.conv_tol;
        sc.initial_rank = self.initial_rank;
        if let Some(t) = self.local_size_threshold {
            sc.local_size_threshold = t;
        }
        if let Some(c) = self.densify_cap {
            sc.densify_cap = c;
        }
        let mut cfg = ExperimentConfig::new(hamiltonian, sc).with_solver(self.solver).with_verify(self.verify.unwrap_or(default_verify));
        if let Some(t) = self.tol_eig {
            cfg.tolerances.eigenvalue = t;
        }
        if let Some(t) = self.tol_angle {
            cfg.tolerances.angle = t;
        }
        if let Some(t) = self.tol_residual {
            cfg.tolerances.residual = t;
        }
        cfg
    }
}

fn print_record(rec: &ResultRecord) {
    println!(
        "{} on {} (d = {}, n = {}), B = {}, eps = {:e}",
        rec.method, rec.config.model, rec.config.d, rec.config.n, rec.config.b, rec.config.eps
    );
    println!("sweeps {}, converged {}, max rank {}, time {:.3} s", rec.num_sweeps, rec.converged, rec.max_rank, rec.wall_time_seconds);
    println!("rank profile {:?}", rec.rank_profile);
    match &rec.verification {
        None => {
            for (k, l) in rec.eigenvalues.iter().enumerate() {
                println!("{k:4}  {}", output::sci(*l));
            }
        }
        Some(v) => {
            println!("{:>4}  {:>24}  {:>24}  {:>10}", "k", "eigenvalue", "reference", "abs error");
            for (k, l) in rec.eigenvalues.iter().enumerate() {
                println!("{k:4}  {:>24}  {:>24}  {:>10.3e}", output::sci(*l), output::sci(v.reference[k]), v.abs_errors[k]);
            }
            for l in &v.levels {
                let angle = l.angle.map_or_else(|| "-".to_string(), |a| format!("{a:.3e}"));
                println!(
                    "level {}: multiplicity {}{}, spread {:.2e}, angle {angle}",
                    l.level,
                    l.multiplicity,
                    if l.complete { "" } else { " (incomplete)" },
                    l.spread
                );
            }
            println!("verification ({}): {}", v.mode, if v.passed { "passed" } else { "FAILED" });
            for f in &v.failures {
                println!("  {f}");
            }
        }
    }
}

fn write_run(common: &Common, rec: &ResultRecord) -> Result<(), Error> {
    let json = output::with_extension(&common.out, "json");
    output::write_json(&json, rec)?;
    if common.format.csv() {
        output::write_eigenvalue_csv(&output::with_extension(&common.out, "csv"), rec)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, default_verify: VerifyMode) -> Result<i32, Error> {
    let cfg = args.common.experiment(default_verify);
    let outcome = run(&cfg)?;
    print_record(&outcome.record);
    write_run(&args.common, &outcome.record)?;
    Ok(outcome.status.exit_code())
}

fn cmd_verify(args: &RunArgs) -> Result<i32, Error> {
    let default = match args.common.model {
        Model::Laplace => VerifyMode::ClosedForm,
        _ => VerifyMode::DenseOracle,
    };
    if args.common.verify == Some(VerifyMode::None) {
        return Err(Error::Usage("verify needs closed-form or dense-oracle".into()));
    }
    cmd_run(args, default)
}

#[derive(Serialize)]
struct ScanReport<'a> {
    axis: Axis,
    values: &'a [f64],
    reference_eps: Option<f64>,
    /// Log-log slope of wall time against the axis value.
    time_slope: Option<f64>,
    /// Log-log slope of the ground-state error against the axis value.
    error_slope: Option<f64>,
    rows: &'a [ScanRow],
}

fn cmd_scan(args: &ScanArgs) -> Result<i32, Error> {
    let template = args.common.experiment(VerifyMode::None);
    let rows = scan(&template, args.axis, &args.values, args.jobs, args.reference_eps);

    let ok: Vec<(f64, &ResultRecord, Option<f64>)> = rows
        .iter()
        .filter_map(|r| {
            let rec = r.outcome.as_ref().ok()?;
            let err = r.reference.as_ref().map(|re| (rec.eigenvalues[0] - re[0]).abs());
            Some((r.value, rec, err))
        })
        .collect();
    let xs: Vec<f64> = ok.iter().map(|p| p.0).collect();
    let times: Vec<f64> = ok.iter().map(|p| p.1.wall_time_seconds).collect();
    let time_slope = loglog_slope(&xs, &times);
    let error_slope = if args.reference_eps.is_some() {
        let errs: Vec<f64> = ok.iter().map(|p| p.2.unwrap_or(0.0)).collect();
        loglog_slope(&xs, &errs)
    } else {
        None
    };

    println!("{:>12}  {:>8}  {:>24}  {:>10}  {:>8}  {:>10}", args.axis.name(), "status", "lambda_0", "error", "max rank", "time [s]");
    for row in &rows {
        match &row.outcome {
            Ok(rec) => {
                let err = row.reference.as_ref().map_or_else(|| "-".to_string(), |r| format!("{:.3e}", (rec.eigenvalues[0] - r[0]).abs()));
                let status = if !rec.verified() {
                    "failed"
                } else if rec.converged {
                    "ok"
                } else {
                    "no-conv"
                };
                println!(
                    "{:>12}  {status:>8}  {:>24}  {err:>10}  {:>8}  {:>10.3}",
                    row.value,
                    output::sci(rec.eigenvalues[0]),
                    rec.max_rank,
                    rec.wall_time_seconds
                );
            }
            Err(e) => println!("{:>12}  {:>8}  {e}", row.value, "error"),
        }
    }
    if let Some(s) = time_slope {
        println!("log-log slope of time vs {}: {s:.3}", args.axis.name());
    }
    if let Some(s) = error_slope {
        println!("log-log slope of error vs {}: {s:.3}", args.axis.name());
    }

    let report =
        ScanReport { axis: args.axis, values: &args.values, reference_eps: args.reference_eps, time_slope, error_slope, rows: &rows };
    output::write_json(&output::with_extension(&args.common.out, "json"), &report)?;
    if args.common.format.csv() {
        let csv = output::scan_csv(args.axis.name(), &rows);
        std::fs::write(output::with_extension(&args.common.out, "csv"), csv)
            .map_err(|e| Error::Io(format!("{}: {e}", args.common.out.display())))?;
    }

    let status = rows.iter().fold(Status::Ok, |acc, r| {
        let s = match &r.outcome {
            Ok(rec) if !rec.verified() => Status::VerificationFailed,
            Ok(rec) if !rec.converged => Status::NotConverged,
            Ok(_) => Status::Ok,
            Err(_) => Status::NotConverged,
        };
        if s.exit_code() > acc.exit_code() {
            s
        } else {
            acc
        }
    });
    Ok(status.exit_code())
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("TTSPEC_THREADS") {
        let threads: usize =
            v.trim().parse().map_err(|_| Error::Usage(format!("TTSPEC_THREADS must be a non-negative integer, got `{v}`")))?;
        ttspec::linalg::set_dense_threads(threads);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Run(a) => cmd_run(a, VerifyMode::None),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
