//! Experiment configs, runners and report export: the paper's three studies
//! (ideal solves, shot-sampling study, noise comparison) plus the plan
//! audit, all driven by a single JSON config with seeded randomness.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::random_parameters;
use crate::cost::{cost, gradient, CostContext, CostError, CostEvaluation, EvalMode};
use crate::lbfgs::{self, Objective, OptimizerConfig, RunTrace, Termination};
use crate::measure::{audit, plan_expectation, plan_expectation_squared_dirichlet, PlanAudit};
use crate::noise_bench::{noise_sweep, NoiseBenchError, NoiseSweepResult};
use crate::poisson::{
    grid_csv, metrics_against, solve_spec, BoundaryCondition, ExactSolution, PoissonError,
    PoissonSpec, RhsSpec, SolutionMetrics,
};
use crate::qsim::{derive_seed, NoiseModel, QsimError, MAX_DENSITY_QUBITS};

/// Failure classes map onto the CLI exit codes: config errors exit 2,
/// numerical failures 3, budget violations 4.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Numerical(_) => 3,
            ExperimentError::Budget(_) => 4,
            ExperimentError::Io(_) => 1,
        }
    }
}

impl From<PoissonError> for ExperimentError {
    fn from(e: PoissonError) -> Self {
        match e {
            PoissonError::SingularSystem | PoissonError::ZeroSolution => {
                ExperimentError::Numerical(e.to_string())
            }
            PoissonError::TooWide(_) => ExperimentError::Budget(e.to_string()),
            other => ExperimentError::Config(other.to_string()),
        }
    }
}

impl From<CostError> for ExperimentError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::BudgetTooSmall { .. } => ExperimentError::Budget(e.to_string()),
            CostError::Qsim(QsimError::WidthOutOfRange { .. }) => {
                ExperimentError::Budget(e.to_string())
            }
            other => ExperimentError::Config(other.to_string()),
        }
    }
}

impl From<NoiseBenchError> for ExperimentError {
    fn from(e: NoiseBenchError) -> Self {
        ExperimentError::Budget(e.to_string())
    }
}

/// Right-hand-side selector in configs; grid sizes come from the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RhsConfig {
    StepFunction,
    Device { vg: f64 },
    Explicit { vector: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub d: usize,
    pub n: usize,
    pub bc: Vec<BoundaryCondition>,
    pub rhs: RhsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    /// Fresh seed stream every optimizer iteration, shared within the
    /// iteration (common random numbers across the line search).
    #[default]
    PerIteration,
    /// One fixed stream for the whole run.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModeConfig {
    Exact,
    Shots {
        shots: u64,
        seed: u64,
        #[serde(default)]
        resample: Resample,
    },
    Noisy {
        p1: f64,
        p2: f64,
    },
}

fn default_schema() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub problem: ProblemConfig,
    pub ansatz_depth: usize,
    pub mode: ModeConfig,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

/// Optimizer block with config-level defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            memory: 10,
            max_iters: 2000,
            grad_tol: 1e-7,
            f_tol: 1e-12,
            restarts: 8,
            seed: 0,
        }
    }
}

impl OptimizerSettings {
    fn to_config(self, stochastic: bool) -> OptimizerConfig {
        OptimizerConfig {
            memory: self.memory,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            f_tol: self.f_tol,
            restarts: self.restarts,
            seed: self.seed,
            stochastic,
        }
    }
}

/// Resolved problem pieces shared by the runners.
pub struct ResolvedProblem {
    pub spec: PoissonSpec,
    pub rhs_spec: RhsSpec,
    pub ctx: CostContext,
}

pub fn resolve_problem(config: &ExperimentConfig) -> Result<ResolvedProblem, ExperimentError> {
    let p = &config.problem;
    let spec = PoissonSpec::new(p.d, p.n, p.bc.clone())?;
    let rhs_spec = match &p.rhs {
        RhsConfig::StepFunction => RhsSpec::StepFunction { d: p.d, n: p.n },
        RhsConfig::Device { vg } => {
            if p.d != 2 {
                return Err(ExperimentError::Config(
                    "device right-hand side is defined on a two-dimensional domain".into(),
                ));
            }
            RhsSpec::Device { n: p.n, vg: *vg }
        }
        RhsConfig::Explicit { vector } => RhsSpec::Explicit { vector: vector.clone() },
    };
    let ctx = CostContext::new(spec.clone(), &rhs_spec, config.ansatz_depth)?;
    validate_mode(config, &ctx)?;
    Ok(ResolvedProblem { spec, rhs_spec, ctx })
}

fn validate_mode(config: &ExperimentConfig, ctx: &CostContext) -> Result<(), ExperimentError> {
    match config.mode {
        ModeConfig::Exact => Ok(()),
        ModeConfig::Shots { shots, .. } => {
            let circuits = ctx.circuits_per_cost_eval() as u64;
            if shots < circuits {
                return Err(ExperimentError::Budget(format!(
                    "shot budget {shots} cannot cover {circuits} circuits per evaluation"
                )));
            }
            Ok(())
        }
        ModeConfig::Noisy { p1, p2 } => {
            NoiseModel::new(p1, p2)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            // Widest register a noisy gradient touches: RHS preparation
            // register plus the derivative ancilla.
            let prep_width = ctx
                .prep
                .as_ref()
                .map_or(ctx.spec.num_qubits(), |p| p.circuit().num_qubits());
            let widest = (ctx.spec.num_qubits() + 1).max(prep_width + 1);
            if widest > MAX_DENSITY_QUBITS {
                return Err(ExperimentError::Budget(format!(
                    "noisy mode needs a {widest}-qubit density matrix; the cap is {MAX_DENSITY_QUBITS}"
                )));
            }
            Ok(())
        }
    }
}

/// Objective adapter: maps evaluation calls onto [`cost`] / [`gradient`]
/// with the mode's seed policy and accumulates circuit/shot usage.
pub struct VqaObjective<'a> {
    ctx: &'a CostContext,
    mode: ModeConfig,
    iteration: usize,
    pub circuits: u64,
    pub shots: u64,
    shots_this_iter: u64,
}

impl<'a> VqaObjective<'a> {
    pub fn new(ctx: &'a CostContext, mode: ModeConfig) -> Self {
        VqaObjective {
            ctx,
            mode,
            iteration: 0,
            circuits: 0,
            shots: 0,
            shots_this_iter: 0,
        }
    }

    fn eval_mode(&self) -> EvalMode {
        match self.mode {
            ModeConfig::Exact => EvalMode::Exact,
            ModeConfig::Shots { shots, seed, resample } => EvalMode::Shots {
                budget: shots,
                seed: match resample {
                    Resample::PerIteration => derive_seed(seed, self.iteration as u64),
                    Resample::Fixed => seed,
                },
            },
            ModeConfig::Noisy { p1, p2 } => EvalMode::Noisy {
                noise: NoiseModel::new(p1, p2).expect("validated"),
            },
        }
    }

    fn track(&mut self, circuits: u64, shots: u64) {
        self.circuits += circuits;
        self.shots += shots;
        self.shots_this_iter += shots;
    }
}

impl Objective for VqaObjective<'_> {
    fn value(&mut self, theta: &[f64]) -> f64 {
        match cost(self.ctx, theta, &self.eval_mode()) {
            Ok(ev) => {
                self.track(ev.circuits_used, ev.shots_used);
                ev.value
            }
            Err(_) => f64::NAN,
        }
    }

    fn gradient(&mut self, theta: &[f64]) -> Vec<f64> {
        match gradient(self.ctx, theta, &self.eval_mode()) {
            Ok(ev) => {
                self.track(ev.circuits_used, ev.shots_used);
                ev.grad
            }
            Err(_) => vec![f64::NAN; theta.len()],
        }
    }

    fn begin_iteration(&mut self, iter: usize) {
        self.iteration = iter;
    }

    fn take_shots(&mut self) -> u64 {
        std::mem::take(&mut self.shots_this_iter)
    }

    fn usage(&self) -> (u64, u64) {
        (self.circuits, self.shots)
    }

    fn resamples_per_iteration(&self) -> bool {
        matches!(
            self.mode,
            ModeConfig::Shots { resample: Resample::PerIteration, .. }
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub e_min: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Serialize)]
#[allow(clippy::struct_field_names)]
pub struct SolveReport {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub theta_opt: Vec<f64>,
    pub e_min: f64,
    pub final_evaluation: CostEvaluation,
    pub r_opt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_rel_error: Option<f64>,
    pub non_physical_rhs: bool,
    pub circuits_per_cost_eval: usize,
    pub total_circuits: u64,
    pub total_shots: u64,
    pub best_restart: usize,
    pub restart_summaries: Vec<RestartSummary>,
}

#[derive(Debug)]
pub struct SolveOutput {
    pub report: SolveReport,
    /// Reconstructed field `r * ||b|| * psi` on the grid.
    pub solution: Vec<f64>,
    pub exact: Option<ExactSolution>,
    pub traces: Vec<RunTrace>,
}

pub fn run_solve(config: &ExperimentConfig) -> Result<SolveOutput, ExperimentError> {
    let resolved = resolve_problem(config)?;
    let ctx = &resolved.ctx;
    let stochastic = matches!(config.mode, ModeConfig::Shots { .. });
    let opt_config = config.optimizer.to_config(stochastic);
    opt_config
        .validate()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    // The dense oracle; singular systems fail here before any optimization.
    let exact = solve_spec(&resolved.spec, &ctx.rhs)?;

    let result = lbfgs::multistart(
        |_j| VqaObjective::new(ctx, config.mode),
        |j| random_parameters(&ctx.ansatz, derive_seed(opt_config.seed, j as u64)),
        &opt_config,
    );

    let theta_opt = result.best.theta_opt.clone();
    if !result.best.e_min.is_finite() {
        return Err(ExperimentError::Numerical(
            "optimizer terminated on a non-finite cost".into(),
        ));
    }

    // Final evaluation at the optimum, same mode, dedicated seed stream.
    let final_mode = match config.mode {
        ModeConfig::Exact => EvalMode::Exact,
        ModeConfig::Shots { shots, seed, .. } => EvalMode::Shots {
            budget: shots,
            seed: derive_seed(seed, u64::MAX),
        },
        ModeConfig::Noisy { p1, p2 } => EvalMode::Noisy {
            noise: NoiseModel::new(p1, p2).expect("validated"),
        },
    };
    let final_eval = cost(ctx, &theta_opt, &final_mode)?;
    let psi = crate::ansatz::ansatz_state(&ctx.ansatz, &theta_opt)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let m = metrics_against(&psi, final_eval.r, &exact, ctx.rhs.norm())?;

    let scale = final_eval.r * ctx.rhs.norm();
    let solution: Vec<f64> = psi.amps().iter().map(|a| scale * a.re).collect();

    let total_circuits: u64 = result.runs.iter().map(|r| r.circuits).sum::<u64>()
        + final_eval.circuits_used;
    let total_shots: u64 =
        result.runs.iter().map(|r| r.shots).sum::<u64>() + final_eval.shots_used;

    let report = SolveReport {
        schema: config.schema,
        config: config.clone(),
        theta_opt,
        e_min: result.best.e_min,
        final_evaluation: final_eval,
        r_opt: final_eval.r,
        fidelity: Some(m.fidelity),
        norm_rel_error: Some(m.norm_rel_error),
        non_physical_rhs: ctx.non_physical_rhs(),
        circuits_per_cost_eval: ctx.circuits_per_cost_eval(),
        total_circuits,
        total_shots,
        best_restart: result.best_index,
        restart_summaries: result
            .runs
            .iter()
            .enumerate()
            .map(|(j, r)| RestartSummary {
                restart: j,
                e_min: r.e_min,
                termination: r.termination,
                iterations: r.iterations.len(),
                evaluations: r.evaluations,
            })
            .collect(),
    };
    Ok(SolveOutput {
        report,
        solution,
        exact: Some(exact),
        traces: result.runs,
    })
}

/// Convenience accessor used by studies and tests.
pub fn solve_metrics(output: &SolveOutput) -> SolutionMetrics {
    SolutionMetrics {
        fidelity: output.report.fidelity.unwrap_or(f64::NAN),
        norm_rel_error: output.report.norm_rel_error.unwrap_or(f64::NAN),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleStudyRow {
    pub shots: u64,
    pub fidelity: f64,
    pub norm_rel_error: f64,
    pub e_min: f64,
}

#[derive(Debug, Serialize)]
pub struct SampleStudyReport {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub rows: Vec<SampleStudyRow>,
}

impl SampleStudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shots,fidelity,norm_rel_error,e_min\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.shots, r.fidelity, r.norm_rel_error, r.e_min
            ));
        }
        out
    }
}

/// Repeats the solve across a grid of shot budgets with fixed seeds.
/// A budget of `u64::MAX` is the exact-mode sentinel.
pub fn run_sample_study(
    config: &ExperimentConfig,
    shot_grid: &[u64],
) -> Result<(SampleStudyReport, Vec<SolveOutput>), ExperimentError> {
    if shot_grid.is_empty() {
        return Err(ExperimentError::Config("empty shot grid".into()));
    }
    let (base_seed, resample) = match config.mode {
        ModeConfig::Shots { seed, resample, .. } => (seed, resample),
        _ => (0, Resample::default()),
    };
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for &shots in shot_grid {
        let mut cfg = config.clone();
        cfg.mode = if shots == u64::MAX {
            ModeConfig::Exact
        } else {
            ModeConfig::Shots {
                shots,
                seed: base_seed,
                resample,
            }
        };
        let output = run_solve(&cfg)?;
        rows.push(SampleStudyRow {
            shots,
            fidelity: output.report.fidelity.unwrap_or(f64::NAN),
            norm_rel_error: output.report.norm_rel_error.unwrap_or(f64::NAN),
            e_min: output.report.e_min,
        });
        outputs.push(output);
    }
    Ok((
        SampleStudyReport {
            schema: config.schema,
            config: config.clone(),
            rows,
        },
        outputs,
    ))
}

pub fn run_noise_bench(
    n: usize,
    ansatz_depth: usize,
    p1: f64,
    p2_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<NoiseSweepResult, ExperimentError> {
    if p2_grid.is_empty() {
        return Err(ExperimentError::Config("empty p2 grid".into()));
    }
    if trials == 0 {
        return Err(ExperimentError::Config("trials must be at least 1".into()));
    }
    Ok(noise_sweep(n, ansatz_depth, p1, p2_grid, trials, seed)?)
}

#[derive(Debug, Serialize)]
pub struct PlanAuditReport {
    pub schema: u32,
    pub spec: PoissonSpec,
    pub expectation_circuits: usize,
    pub expectation_plan: PlanAudit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squared_circuits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squared_plan: Option<PlanAudit>,
}

pub fn run_plan_audit(spec: &PoissonSpec) -> PlanAuditReport {
    let plan = plan_expectation(spec);
    let squared = plan_expectation_squared_dirichlet(spec).ok();
    PlanAuditReport {
        schema: 1,
        spec: spec.clone(),
        expectation_circuits: plan.circuit_count(),
        expectation_plan: audit(&plan),
        squared_circuits: squared.as_ref().map(|p| p.circuit_count()),
        squared_plan: squared.as_ref().map(audit),
    }
}

/// Writes bytes atomically (temp file in the same directory, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Writes the solve artifacts: `report.json`, `solution.csv`,
/// `trace.jsonl`. Returns the report path.
pub fn write_solve_outputs(
    out_dir: &Path,
    output: &SolveOutput,
    spec: &PoissonSpec,
    vg: Option<f64>,
) -> Result<PathBuf, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("report.json");
    let mut json = serde_json::to_vec_pretty(&output.report).expect("serializable report");
    json.push(b'\n');
    write_atomic(&report_path, &json)?;
    let csv = grid_csv(spec, &output.solution, vg);
    write_atomic(&out_dir.join("solution.csv"), csv.as_bytes())?;
    let mut lines = String::new();
    for (j, trace) in output.traces.iter().enumerate() {
        for rec in &trace.iterations {
            let row = serde_json::json!({
                "restart": j,
                "iter": rec.iter,
                "e": rec.e,
                "grad_inf": rec.grad_inf,
                "step": rec.step,
                "shots": rec.shots,
            });
            lines.push_str(&row.to_string());
            lines.push('\n');
        }
    }
    write_atomic(&out_dir.join("trace.jsonl"), lines.as_bytes())?;
    Ok(report_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config() -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            problem: ProblemConfig {
                d: 2,
                n: 2,
                bc: vec![BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
                rhs: RhsConfig::StepFunction,
            },
            ansatz_depth: 2,
            mode: ModeConfig::Exact,
            optimizer: OptimizerSettings {
                restarts: 2,
                max_iters: 300,
                seed: 5,
                ..OptimizerSettings::default()
            },
        }
    }

    #[test]
    fn solve_small_toy_reaches_high_fidelity() {
        let output = run_solve(&toy_config()).unwrap();
        let m = solve_metrics(&output);
        assert!(m.fidelity > 0.999, "fidelity {}", m.fidelity);
        assert!(m.norm_rel_error < 0.01, "norm error {}", m.norm_rel_error);
        assert_eq!(output.report.circuits_per_cost_eval, 4); // 2 + 1 Neumann + numerator
    }

    #[test]
    fn reports_are_bitwise_deterministic() {
        let a = run_solve(&toy_config()).unwrap();
        let b = run_solve(&toy_config()).unwrap();
        let ja = serde_json::to_string(&a.report).unwrap();
        let jb = serde_json::to_string(&b.report).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn config_roundtrip_and_defaults() {
        let text = r#"{
            "problem": {"d": 2, "n": 2, "bc": ["neumann", "dirichlet"],
                        "rhs": {"type": "step_function"}},
            "ansatz_depth": 2,
            "mode": {"type": "shots", "shots": 65536, "seed": 3}
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.schema, 1);
        assert_eq!(cfg.optimizer.restarts, 8);
        match cfg.mode {
            ModeConfig::Shots { resample, .. } => {
                assert_eq!(resample, Resample::PerIteration)
            }
            _ => panic!("wrong mode"),
        }
        let again: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn device_rhs_requires_two_dimensions() {
        let mut cfg = toy_config();
        cfg.problem.d = 1;
        cfg.problem.bc = vec![BoundaryCondition::Dirichlet];
        cfg.problem.n = 3;
        cfg.problem.rhs = RhsConfig::Device { vg: 0.5 };
        let err = run_solve(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn singular_problem_is_numerical_failure() {
        let mut cfg = toy_config();
        cfg.problem.bc = vec![BoundaryCondition::Neumann, BoundaryCondition::Neumann];
        let err = run_solve(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn shot_budget_below_circuit_count_is_budget_error() {
        let mut cfg = toy_config();
        cfg.mode = ModeConfig::Shots { shots: 2, seed: 1, resample: Resample::default() };
        let err = run_solve(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn noisy_width_budget_enforced() {
        let mut cfg = toy_config();
        cfg.problem.n = 5; // dn + 1 = 11 > 10
        cfg.problem.rhs = RhsConfig::StepFunction;
        cfg.mode = ModeConfig::Noisy { p1: 1e-4, p2: 1e-3 };
        let err = run_solve(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn sample_study_exact_sentinel_matches_solve() {
        let mut cfg = toy_config();
        cfg.mode = ModeConfig::Shots { shots: 1 << 14, seed: 9, resample: Resample::default() };
        let (study, _) = run_sample_study(&cfg, &[u64::MAX]).unwrap();
        let direct = run_solve(&toy_config()).unwrap();
        assert!((study.rows[0].e_min - direct.report.e_min).abs() < 1e-12);
    }

    #[test]
    fn plan_audit_counts() {
        let spec = PoissonSpec::new(2, 4, vec![BoundaryCondition::Dirichlet; 2]).unwrap();
        let report = run_plan_audit(&spec);
        assert_eq!(report.expectation_circuits, 4);
        assert_eq!(report.squared_circuits, Some(24));
        let spec = PoissonSpec::new(
            2,
            4,
            vec![BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
        )
        .unwrap();
        let report = run_plan_audit(&spec);
        assert_eq!(report.expectation_circuits, 5);
        assert_eq!(report.squared_circuits, None);
        let spec = PoissonSpec::new(3, 4, vec![BoundaryCondition::Dirichlet; 3]).unwrap();
        assert_eq!(run_plan_audit(&spec).expectation_circuits, 4);
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = std::env::temp_dir().join(format!("pvqa-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.json");
        write_atomic(&path, b"{}").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"{}");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
