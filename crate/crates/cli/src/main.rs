//! Command-line front end: `solve`, `sample-study`, `noise-bench` and
//! `plan-audit` over JSON experiment configs. All randomness is seeded
//! through the config (or flags), so identical invocations produce
//! identical output files. Exit codes: 0 success, 2 config error,
//! 3 numerical failure, 4 budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use poisson_vqa::experiment::{
    run_noise_bench, run_plan_audit, run_sample_study, run_solve, write_atomic,
    write_solve_outputs, ExperimentConfig, ExperimentError, ModeConfig, Resample, RhsConfig,
};
use poisson_vqa::parallel::configure_threads;
use poisson_vqa::poisson::{BoundaryCondition, PoissonSpec};

#[derive(Parser)]
#[command(name = "poisson-vqa", version, about = "Variational quantum Poisson solver (classically simulated)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one problem and write report.json, solution.csv, trace.jsonl.
    Solve(SolveArgs),
    /// Repeat the solve over a grid of shot budgets and compare.
    SampleStudy(SampleStudyArgs),
    /// Depolarizing-noise comparison of the two measurement schemes.
    NoiseBench(NoiseBenchArgs),
    /// Dump measurement plans and circuit counts.
    PlanAudit(PlanAuditArgs),
}

#[derive(Args)]
struct CommonOverrides {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the evaluation mode (exact | shots | noisy).
    #[arg(long)]
    mode: Option<String>,
    /// Override the shot budget (implies shots mode).
    #[arg(long)]
    shots: Option<u64>,
    /// Override the ansatz depth.
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonOverrides,
}

#[derive(Args)]
struct SampleStudyArgs {
    #[command(flatten)]
    common: CommonOverrides,
    /// Comma-separated shot budgets (use `exact` for the exact sentinel).
    #[arg(long, value_delimiter = ',', required = true)]
    shot_grid: Vec<String>,
}

#[derive(Args)]
struct NoiseBenchArgs {
    /// Qubits per axis of the 2-D all-Dirichlet operator.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Ansatz blocks for the random trial states.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Single-qubit depolarizing rate.
    #[arg(long, default_value_t = 2.0e-4)]
    p1: f64,
    /// Comma-separated two-qubit rates.
    #[arg(long, value_delimiter = ',', default_values_t = [6.0e-3, 8.0e-3, 1.0e-2])]
    p2_grid: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanAuditArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// Boundary conditions as letters, e.g. `ND` or `DDD`.
    #[arg(long)]
    bc: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(args: &CommonOverrides) -> Result<ExperimentConfig, ExperimentError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.optimizer.seed = seed;
    }
    if let Some(p) = args.p {
        config.ansatz_depth = p;
    }
    if let Some(mode) = &args.mode {
        config.mode = match mode.as_str() {
            "exact" => ModeConfig::Exact,
            "shots" => match config.mode {
                ModeConfig::Shots { .. } => config.mode,
                _ => ModeConfig::Shots {
                    shots: args.shots.unwrap_or(1 << 17),
                    seed: config.optimizer.seed,
                    resample: Resample::default(),
                },
            },
            "noisy" => match config.mode {
                ModeConfig::Noisy { .. } => config.mode,
                _ => ModeConfig::Noisy { p1: 2.0e-4, p2: 6.0e-3 },
            },
            other => {
                return Err(ExperimentError::Config(format!(
                    "unknown mode override `{other}` (expected exact|shots|noisy)"
                )))
            }
        };
    }
    if let Some(shots) = args.shots {
        config.mode = match config.mode {
            ModeConfig::Shots { seed, resample, .. } => ModeConfig::Shots { shots, seed, resample },
            _ => ModeConfig::Shots {
                shots,
                seed: config.optimizer.seed,
                resample: Resample::default(),
            },
        };
    }
    Ok(config)
}

fn vg_of(config: &ExperimentConfig) -> Option<f64> {
    match config.problem.rhs {
        RhsConfig::Device { vg } => Some(vg),
        _ => None,
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), ExperimentError> {
    let config = load_config(&args.common)?;
    let started = Instant::now();
    let output = run_solve(&config)?;
    let spec = PoissonSpec::new(
        config.problem.d,
        config.problem.n,
        config.problem.bc.clone(),
    )?;
    let report_path = write_solve_outputs(&args.common.out, &output, &spec, vg_of(&config))?;
    eprintln!(
        "solve finished in {:.1?}: E_min = {:.6e}, fidelity = {}, norm error = {}",
        started.elapsed(),
        output.report.e_min,
        output
            .report
            .fidelity
            .map_or("n/a".into(), |f| format!("{f:.6}")),
        output
            .report
            .norm_rel_error
            .map_or("n/a".into(), |f| format!("{f:.6}")),
    );
    println!("{}", report_path.display());
    Ok(())
}

fn cmd_sample_study(args: &SampleStudyArgs) -> Result<(), ExperimentError> {
    let config = load_config(&args.common)?;
    let grid: Vec<u64> = args
        .shot_grid
        .iter()
        .map(|s| {
            if s == "exact" {
                Ok(u64::MAX)
            } else {
                s.parse::<u64>()
                    .map_err(|e| ExperimentError::Config(format!("bad shot count `{s}`: {e}")))
            }
        })
        .collect::<Result<_, _>>()?;
    let started = Instant::now();
    let (report, outputs) = run_sample_study(&config, &grid)?;
    std::fs::create_dir_all(&args.common.out)?;
    let mut json = serde_json::to_vec_pretty(&report).expect("serializable report");
    json.push(b'\n');
    write_atomic(&args.common.out.join("sample_study.json"), &json)?;
    write_atomic(
        &args.common.out.join("sample_study.csv"),
        report.to_csv().as_bytes(),
    )?;
    let spec = PoissonSpec::new(
        config.problem.d,
        config.problem.n,
        config.problem.bc.clone(),
    )?;
    for (row, output) in report.rows.iter().zip(&outputs) {
        let sub = args.common.out.join(format!("shots-{}", row.shots));
        write_solve_outputs(&sub, output, &spec, vg_of(&config))?;
    }
    eprintln!("sample study finished in {:.1?}", started.elapsed());
    println!("{}", args.common.out.join("sample_study.csv").display());
    Ok(())
}

fn cmd_noise_bench(args: &NoiseBenchArgs) -> Result<(), ExperimentError> {
    let started = Instant::now();
    let result = run_noise_bench(args.n, args.p, args.p1, &args.p2_grid, args.trials, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("noise_bench.csv");
    write_atomic(&csv_path, result.to_csv().as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&result).expect("serializable result");
    json.push(b'\n');
    write_atomic(&args.out.join("noise_bench.json"), &json)?;
    eprintln!("noise bench finished in {:.1?}", started.elapsed());
    println!("{}", csv_path.display());
    Ok(())
}

fn cmd_plan_audit(args: &PlanAuditArgs) -> Result<(), ExperimentError> {
    let bc: Vec<BoundaryCondition> = args
        .bc
        .chars()
        .map(|c| match c.to_ascii_uppercase() {
            'D' => Ok(BoundaryCondition::Dirichlet),
            'N' => Ok(BoundaryCondition::Neumann),
            'P' => Ok(BoundaryCondition::Periodic),
            other => Err(ExperimentError::Config(format!(
                "unknown boundary letter `{other}` (expected D, N or P)"
            ))),
        })
        .collect::<Result<_, _>>()?;
    let spec = PoissonSpec::new(args.d, args.n, bc)?;
    let report = run_plan_audit(&spec);
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("plan_audit.json");
    let mut json = serde_json::to_vec_pretty(&report).expect("serializable audit");
    json.push(b'\n');
    write_atomic(&path, &json)?;
    eprintln!(
        "plans: expectation = {} circuits{}",
        report.expectation_circuits,
        report
            .squared_circuits
            .map_or(String::new(), |c| format!(", squared operator = {c} circuits")),
    );
    println!("{}", path.display());
    Ok(())
}

fn thread_cap_from_env() -> Option<usize> {
    let raw = std::env::var("POISSON_VQA_THREADS").ok()?;
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => Some(n),
        _ => {
            eprintln!("ignoring invalid POISSON_VQA_THREADS={raw}");
            None
        }
    }
}

fn main() -> ExitCode {
    configure_threads(thread_cap_from_env());
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::SampleStudy(args) => cmd_sample_study(args),
        Command::NoiseBench(args) => cmd_noise_bench(args),
        Command::PlanAudit(args) => cmd_plan_audit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
