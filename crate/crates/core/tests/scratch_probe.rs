//! Scratch feasibility probe (deleted before finalization).
use poisson_vqa::experiment::*;
use poisson_vqa::poisson::BoundaryCondition;

fn toy(shots: u64, resample: Resample, restarts: usize, max_iters: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema: 1,
        problem: ProblemConfig {
            d: 2, n: 4,
            bc: vec![BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
            rhs: RhsConfig::StepFunction,
        },
        ansatz_depth: 3,
        mode: ModeConfig::Shots { shots, seed, resample },
        optimizer: OptimizerSettings { restarts, seed, max_iters, ..Default::default() },
    }
}

#[test]
fn probe_shot_modes() {
    for (label, resample, iters) in [("per_iter", Resample::PerIteration, 200usize), ("fixed", Resample::Fixed, 300)] {
        let t0 = std::time::Instant::now();
        let out = run_solve(&toy(1 << 18, resample, 3, iters, 11)).unwrap();
        let m = solve_metrics(&out);
        eprintln!("toy {label}: fid={:.4} norm={:.4} e={:.5} dt={:?}", m.fidelity, m.norm_rel_error, out.report.e_min, t0.elapsed());
        for rs in &out.report.restart_summaries {
            eprintln!("  r{}: e={:.6} iters={} {:?}", rs.restart, rs.e_min, rs.iterations, rs.termination);
        }
    }
}
