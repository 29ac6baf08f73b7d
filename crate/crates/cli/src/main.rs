//! ulamlab: experiment runner for the Cauchy-Jensen stability laboratory.
//!
//! Subcommands:
//!   run      parse a config (or the built-in matrix), synthesize the
//!            perturbed function, run both extraction methods, evaluate the
//!            requested certificates, write report.json and summary.csv
//!   padic    evaluate a p-adic arithmetic expression
//!   extract  extraction only, reporting per-point convergence
//!   certify  certificates only, one pass/fail line per theorem
//!   sweep    vary one control parameter, emitting a CSV margin curve
//!
//! Exit status: 0 when every requested certificate passes, 1 when any
//! fails or is rejected with violated hypotheses, 2 on usage/config errors.

mod expr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use ulamlab_core::certify::CertStatus;
use ulamlab_core::config::{default_matrix, ExperimentConfig};
use ulamlab_core::runner::run_many;
use ulamlab_core::Error;

#[derive(Parser)]
#[command(
    name = "ulamlab",
    version,
    about = "Verification laboratory for the Cauchy-Jensen additive functional equation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run experiments and write report.json + summary.csv
    Run(RunArgs),
    /// Evaluate a p-adic arithmetic expression, e.g. "norm(12, p=2)"
    Padic(PadicArgs),
    /// Run extraction only and report per-point convergence
    Extract(RunArgs),
    /// Evaluate the certificates and print one line per theorem
    Certify(RunArgs),
    /// Sweep one parameter (r | theta | epsilon) and emit margin curves
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML)
    #[arg(long, conflicts_with = "matrix")]
    config: Option<PathBuf>,
    /// Run the built-in default experiment matrix instead of a config file
    #[arg(long)]
    matrix: bool,
    /// Output directory for report.json and summary.csv
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override every config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the rayon heuristic)
    #[arg(long)]
    jobs: Option<usize>,
    /// Restrict to these theorem ids (comma separated)
    #[arg(long, value_delimiter = ',')]
    theorem: Vec<String>,
}

#[derive(Args)]
struct PadicArgs {
    /// Expression, e.g. "norm(12, p=2)" or "3 * inv(3) - 1"
    expr: String,
    #[arg(long, default_value_t = 2)]
    prime: u32,
    #[arg(long, default_value_t = 64)]
    precision: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter to vary: r | theta | epsilon
    param: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 9)]
    steps: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args, Mode::Run),
        Cmd::Extract(args) => cmd_run(args, Mode::Extract),
        Cmd::Certify(args) => cmd_run(args, Mode::Certify),
        Cmd::Padic(args) => cmd_padic(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn init_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // Ignore the error when a pool already exists (tests re-enter).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Mode {
    Run,
    Extract,
    Certify,
}

fn load_configs(args: &RunArgs) -> Result<Vec<ExperimentConfig>, Error> {
    let mut configs = if args.matrix {
        default_matrix()
    } else if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        vec![ExperimentConfig::from_toml(&text)?]
    } else {
        return Err(Error::Config(
            "pass --config PATH or --matrix (see `ulamlab run --help`)".into(),
        ));
    };
    if !args.theorem.is_empty() {
        for cfg in &mut configs {
            let keep: Vec<String> = cfg
                .experiment
                .theorems
                .iter()
                .filter(|t| args.theorem.iter().any(|want| want.eq_ignore_ascii_case(t)))
                .cloned()
                .collect();
            cfg.experiment.theorems = if keep.is_empty() {
                args.theorem.clone()
            } else {
                keep
            };
            cfg.validate()?;
        }
    }
    Ok(configs)
}

fn cmd_run(args: RunArgs, mode: Mode) -> Result<ExitCode, Error> {
    init_jobs(args.jobs);
    let configs = load_configs(&args)?;
    let report = run_many(&configs, args.seed)?;
    let (json_path, csv_path) = report.write(
        &args.out,
        &configs[0].output.json,
        &configs[0].output.csv,
    )?;

    let mut ok = true;
    for exp in &report.experiments {
        match mode {
            Mode::Extract => {
                let converged = exp
                    .direct
                    .as_ref()
                    .map(|m| m.all_converged)
                    .unwrap_or(true)
                    && exp
                        .fixed_point
                        .as_ref()
                        .map(|m| m.all_converged)
                        .unwrap_or(true);
                let agree = exp.agreement.as_ref().map(|a| a.pass).unwrap_or(true);
                let n = exp
                    .direct
                    .as_ref()
                    .or(exp.fixed_point.as_ref().and(exp.direct.as_ref()))
                    .map(|m| m.points.len())
                    .unwrap_or(0);
                println!(
                    "extract {}: {} ({} points, agreement {})",
                    exp.name,
                    if converged && agree { "converged" } else { "NOT CONVERGED" },
                    n,
                    if agree { "ok" } else { "broken" },
                );
                ok &= converged && agree;
            }
            Mode::Run | Mode::Certify => {
                for cert in &exp.certificates {
                    print_cert_line(&exp.name, &cert.theorem, cert.status, cert.min_margin);
                    if let Some(r) = &cert.corollary {
                        print_cert_line(&exp.name, &r.theorem, r.status, r.min_margin);
                    }
                }
                ok &= exp.pass;
            }
        }
    }
    if mode != Mode::Extract {
        println!(
            "{}: {}",
            if ok { "all certificates passed" } else { "FAILURES present" },
            json_path.display()
        );
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_cert_line(exp: &str, theorem: &str, status: CertStatus, min_margin: f64) {
    let label = match status {
        CertStatus::Pass => "pass",
        CertStatus::Fail => "FAIL",
        CertStatus::HypothesisViolated => "hypothesis-violated",
    };
    println!("certify {exp} / {theorem}: {label} (min margin {min_margin:.3e})");
}

fn cmd_padic(args: PadicArgs) -> Result<ExitCode, Error> {
    let mut ev = expr::Evaluator::new(args.prime, args.precision);
    let value = ev.eval(&args.expr)?;
    println!("{}", value.render());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    init_jobs(args.jobs);
    if args.steps < 1 {
        return Err(Error::Config("sweep: steps must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.config)?;
    let base = ExperimentConfig::from_toml(&text)?;

    let mut rows = Vec::new();
    let mut all_pass = true;
    for i in 0..args.steps {
        let v = if args.steps == 1 {
            args.from
        } else {
            args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64
        };
        let cfg = override_param(&base, &args.param, v)?;
        let report = run_many(std::slice::from_ref(&cfg), args.seed)?;
        for exp in &report.experiments {
            for cert in &exp.certificates {
                let status = match cert.status {
                    CertStatus::Pass => "pass",
                    CertStatus::Fail => "fail",
                    CertStatus::HypothesisViolated => "hypothesis-violated",
                };
                rows.push(format!(
                    "{},{},{},{},{}",
                    args.param, v, cert.theorem, cert.min_margin, status
                ));
                all_pass &= cert.pass;
            }
        }
    }

    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join(format!("sweep-{}.csv", args.param));
    let mut body = String::from("param,value,theorem_id,min_margin,status\n");
    for row in &rows {
        body.push_str(row);
        body.push('\n');
    }
    std::fs::write(&path, body)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Exact dyadic rational string for an f64 sweep value.
fn f64_to_rational_string(v: f64) -> Result<String, Error> {
    let q = BigRational::from_float(v)
        .ok_or_else(|| Error::Config(format!("sweep value {v} is not finite")))?;
    Ok(format!("{}/{}", q.numer(), q.denom()))
}

fn override_param(
    base: &ExperimentConfig,
    param: &str,
    v: f64,
) -> Result<ExperimentConfig, Error> {
    let mut cfg = base.clone();
    match param {
        "r" | "p" => {
            let s = f64_to_rational_string(v)?;
            cfg.control.r = s.clone();
            cfg.control.xi = s.clone();
            cfg.control.p1 = s.clone();
            cfg.control.p2 = s.clone();
            cfg.control.p3 = s;
            // Keep the synthesized perturbation commensurate with the
            // control exponent when it is a power perturbation.
            if cfg.function.perturbation == "power" {
                cfg.function.rho = v;
            }
        }
        "theta" => {
            cfg.control.coefficient = f64_to_rational_string(v)?;
        }
        "epsilon" => {
            cfg.function.epsilon = v;
        }
        other => {
            return Err(Error::Config(format!(
                "sweep: unknown parameter `{other}` (expected r, theta or epsilon)"
            )))
        }
    }
    let _ = cfg
        .control_family()?
        .degree()
        .to_f64()
        .ok_or_else(|| Error::Config("sweep produced a non-finite exponent".into()))?;
    cfg.validate()?;
    Ok(cfg)
}
