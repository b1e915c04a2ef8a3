//! The variational cost `E(theta) = -(Re<b|psi>)^2 / (2 <psi|A|psi>)`, the
//! norm-recovery factor `r(theta)`, and the analytic gradient, all realized
//! through the measurement constructions: the numerator as an all-zeros
//! probability after inverse state preparation, the denominator through the
//! shift-operator plan, and the gradient through the derivative state with
//! an X-measured ancilla.

use crate::ansatz::{ansatz_state, build_ansatz, build_derivative_state, AnsatzError, AnsatzSpec};
use crate::measure::{
    ancilla_extended_plan, estimate_expectation, estimate_expectation_noisy, plan_expectation,
    EstimateMode, MeasureError, MeasurementPlan,
};
use crate::poisson::{build_rhs, PoissonError, PoissonSpec, Rhs, RhsSpec};
use crate::qsim::{
    derive_seed, sample, Circuit, DensityMatrix, Gate, NoiseModel, QsimError, StateVector,
};

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("no efficient preparation circuit for an explicit right-hand side; use exact-overlap mode")]
    NoPreparationCircuit,
    #[error("right-hand side length {got} does not match system size {expect}")]
    RhsSizeMismatch { expect: usize, got: usize },
    #[error("shot budget {budget} cannot cover {circuits} circuits")]
    BudgetTooSmall { budget: u64, circuits: usize },
    #[error("shot-mode denominator vanished (<= 1e-6) after one doubled re-estimate")]
    DegenerateDenominator,
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// How the normalized right-hand side enters the numerator circuit.
#[derive(Debug, Clone)]
pub enum RhsPreparation {
    /// `U_b |0..0> = b/||b||` on the system register.
    DirectUnitary { circuit: Circuit },
    /// One-ancilla mixture `|b'> = cos(eta)|0>|b0^> + sin(eta)|1>|b1^>` on
    /// `1 + 2n` qubits; the numerator carries the `2(beta0^2+beta1^2)`
    /// prefactor.
    AncillaMixture {
        circuit: Circuit,
        eta: f64,
        beta0: f64,
        beta1: f64,
    },
}

impl RhsPreparation {
    pub fn circuit(&self) -> &Circuit {
        match self {
            RhsPreparation::DirectUnitary { circuit } => circuit,
            RhsPreparation::AncillaMixture { circuit, .. } => circuit,
        }
    }

    fn prefactor(&self) -> f64 {
        match self {
            RhsPreparation::DirectUnitary { .. } => 1.0,
            RhsPreparation::AncillaMixture { beta0, beta1, .. } => {
                2.0 * (beta0 * beta0 + beta1 * beta1)
            }
        }
    }
}

/// Step-function preparation: Hadamards everywhere, then Z on the leading
/// qubit of each axis.
pub fn step_function_circuit(d: usize, n: usize) -> Circuit {
    let mut c = Circuit::new(d * n);
    for q in 0..d * n {
        c.push(Gate::H { qubit: q }).expect("in range");
    }
    for axis in 0..d {
        c.push(Gate::Z { qubit: axis * n }).expect("in range");
    }
    c
}

/// Ancilla-mixture preparation for the device RHS on `1 + 2n` qubits
/// (ancilla first). The common `|+>` factors are unconditional Hadamards,
/// the branch-dependent ones controlled-RY(pi/2); the electrode entangler
/// (H + X + CNOT pattern) runs last and fixes both branches at once, since
/// it maps `|000>` to `(|011>+|100>)/sqrt(2)` while leaving `|0++>` at
/// `|+++>`. Gate count `2n + 5`.
pub fn device_rhs_circuit(n: usize, vg: f64) -> Result<RhsPreparation, CostError> {
    let rhs = build_rhs(&RhsSpec::Device { n, vg })?;
    let s = rhs.device.expect("device scalars");
    let anc = 0usize;
    let sys = |q: usize| 1 + q;
    let mut c = Circuit::new(1 + 2 * n);
    c.push(Gate::Ry { qubit: anc, angle: 2.0 * s.eta })?;
    for q in n..2 * n {
        c.push(Gate::Cry {
            control: anc,
            target: sys(q),
            angle: std::f64::consts::FRAC_PI_2,
        })?;
    }
    for q in [1usize, 2] {
        c.push(Gate::Cry {
            control: anc,
            target: sys(q),
            angle: std::f64::consts::FRAC_PI_2,
        })?;
    }
    for q in 3..n {
        c.push(Gate::H { qubit: sys(q) })?;
    }
    c.push(Gate::H { qubit: sys(0) })?;
    c.push(Gate::X { qubit: sys(1) })?;
    c.push(Gate::Cnot { control: sys(0), target: sys(1) })?;
    c.push(Gate::X { qubit: sys(2) })?;
    c.push(Gate::Cnot { control: sys(0), target: sys(2) })?;
    Ok(RhsPreparation::AncillaMixture {
        circuit: c,
        eta: s.eta,
        beta0: s.beta0,
        beta1: s.beta1,
    })
}

/// Builds the preparation for a right-hand-side selector. Explicit vectors
/// have no efficient circuit and signal the caller to fall back to the
/// exact-overlap route.
pub fn prepare_rhs(rhs: &RhsSpec) -> Result<RhsPreparation, CostError> {
    match rhs {
        RhsSpec::StepFunction { d, n } => Ok(RhsPreparation::DirectUnitary {
            circuit: step_function_circuit(*d, *n),
        }),
        RhsSpec::Device { n, vg } => device_rhs_circuit(*n, *vg),
        RhsSpec::Explicit { .. } => Err(CostError::NoPreparationCircuit),
    }
}

/// Everything fixed across evaluations of one problem: geometry, RHS data,
/// preparation circuit (when one exists), the denominator plan and its
/// ancilla-extended version for gradients.
#[derive(Debug, Clone)]
pub struct CostContext {
    pub spec: PoissonSpec,
    pub ansatz: AnsatzSpec,
    pub rhs: Rhs,
    pub bhat: Vec<f64>,
    pub prep: Option<RhsPreparation>,
    pub plan: MeasurementPlan,
    pub deriv_plan: MeasurementPlan,
}

impl CostContext {
    pub fn new(spec: PoissonSpec, rhs_spec: &RhsSpec, depth: usize) -> Result<Self, CostError> {
        let rhs = build_rhs(rhs_spec)?;
        if rhs.vector.len() != spec.system_size() {
            return Err(CostError::RhsSizeMismatch {
                expect: spec.system_size(),
                got: rhs.vector.len(),
            });
        }
        let prep = match prepare_rhs(rhs_spec) {
            Ok(p) => Some(p),
            Err(CostError::NoPreparationCircuit) => None,
            Err(e) => return Err(e),
        };
        let ansatz = AnsatzSpec::new(spec.num_qubits(), depth)?;
        let plan = plan_expectation(&spec);
        let deriv_plan = ancilla_extended_plan(&plan);
        let norm = rhs.norm();
        let bhat = rhs.vector.iter().map(|&v| v / norm).collect();
        Ok(CostContext {
            spec,
            ansatz,
            rhs,
            bhat,
            prep,
            plan,
            deriv_plan,
        })
    }

    /// Circuits per plain cost evaluation: the denominator plan plus the
    /// numerator circuit.
    pub fn circuits_per_cost_eval(&self) -> usize {
        self.plan.circuit_count() + 1
    }

    /// Whether the numerator is computed by exact overlap instead of a
    /// preparation circuit (explicit RHS; non-physical shortcut).
    pub fn non_physical_rhs(&self) -> bool {
        self.prep.is_none()
    }

    fn dense_overlap(&self, psi: &StateVector) -> f64 {
        psi.amps()
            .iter()
            .zip(&self.bhat)
            .map(|(a, &b)| a.re * b)
            .sum()
    }
}

/// Evaluation backend for one cost or gradient call.
#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    Exact,
    /// `budget` = total shots for one cost evaluation, split evenly across
    /// its circuits; `seed` identifies the evaluation's random stream.
    Shots { budget: u64, seed: u64 },
    /// Depolarizing-noise density-matrix evolution (exact expectations of
    /// the noisy state; no sampling).
    Noisy { noise: NoiseModel },
}

/// Result of one cost evaluation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CostEvaluation {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub r: f64,
    pub circuits_used: u64,
    pub shots_used: u64,
}

fn zero_probability_exact(circuit: &Circuit) -> Result<f64, CostError> {
    let out = circuit.run(&StateVector::zero_state(circuit.num_qubits()))?;
    Ok(out.amps()[0].norm_sqr())
}

fn zero_probability_shots(circuit: &Circuit, shots: u64, seed: u64) -> Result<f64, CostError> {
    let out = circuit.run(&StateVector::zero_state(circuit.num_qubits()))?;
    let hist = sample(&out, shots, seed)?;
    Ok(hist.frequency(0))
}

fn zero_probability_noisy(circuit: &Circuit, noise: &NoiseModel) -> Result<f64, CostError> {
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits())?;
    rho.run_noisy(circuit, noise)?;
    Ok(rho.diagonal()[0])
}

struct Usage {
    circuits: u64,
    shots: u64,
}

/// Per-circuit shot allocation: the evaluation budget split evenly over the
/// numerator circuit and the denominator plan.
fn shots_per_circuit(ctx: &CostContext, budget: u64) -> Result<u64, CostError> {
    let circuits = ctx.circuits_per_cost_eval();
    let per = budget / circuits as u64;
    if per == 0 {
        return Err(CostError::BudgetTooSmall { budget, circuits });
    }
    Ok(per)
}

/// The numerator `(Re<b^|psi>)^2` for a prepared ansatz circuit. For
/// circuit-backed right-hand sides this is the all-zeros probability of
/// (preparation of psi) followed by the inverse RHS preparation, scaled by
/// the mixture prefactor; for explicit vectors it is the dense overlap
/// squared (all modes; marked non-physical in reports).
fn numerator_eval(
    ctx: &CostContext,
    ansatz_circuit: &Circuit,
    mode: &EvalMode,
    seed_tag: u64,
    usage: &mut Usage,
) -> Result<f64, CostError> {
    match &ctx.prep {
        Some(prep) => {
            let prep_circuit = prep.circuit();
            let width = prep_circuit.num_qubits();
            let mut c = Circuit::new(width);
            if width == ctx.spec.num_qubits() {
                c.extend(ansatz_circuit)?;
            } else {
                // Ancilla-mixture register: |+> on the ancilla, ansatz on
                // the shifted system qubits.
                c.push(Gate::H { qubit: 0 })?;
                let map: Vec<usize> = (1..width).collect();
                c.extend(&ansatz_circuit.remapped(&map, width)?)?;
            }
            c.extend(&prep_circuit.inverted())?;
            usage.circuits += 1;
            let p0 = match mode {
                EvalMode::Exact => zero_probability_exact(&c)?,
                EvalMode::Shots { budget, seed } => {
                    let per = shots_per_circuit(ctx, *budget)?;
                    usage.shots += per;
                    zero_probability_shots(&c, per, derive_seed(*seed, seed_tag))?
                }
                EvalMode::Noisy { noise } => zero_probability_noisy(&c, noise)?,
            };
            Ok(prep.prefactor() * p0)
        }
        None => {
            let f = match mode {
                EvalMode::Noisy { noise } => {
                    // Tr(rho |b^><b^|) on the noisy ansatz state.
                    let mut rho = DensityMatrix::zero_state(ctx.spec.num_qubits())?;
                    rho.run_noisy(ansatz_circuit, noise)?;
                    let dim = rho.dim();
                    let mut acc = 0.0;
                    for i in 0..dim {
                        for j in 0..dim {
                            acc += ctx.bhat[i] * ctx.bhat[j] * rho.entry(i, j).re;
                        }
                    }
                    return Ok(acc);
                }
                _ => {
                    let psi = ansatz_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits()))?;
                    ctx.dense_overlap(&psi)
                }
            };
            Ok(f * f)
        }
    }
}

fn denominator_eval(
    ctx: &CostContext,
    ansatz_circuit: &Circuit,
    mode: &EvalMode,
    seed_tag: u64,
    usage: &mut Usage,
) -> Result<f64, CostError> {
    usage.circuits += ctx.plan.circuit_count() as u64;
    match mode {
        EvalMode::Exact => {
            let psi = ansatz_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits()))?;
            Ok(estimate_expectation(&psi, &ctx.plan, EstimateMode::Exact)?)
        }
        EvalMode::Shots { budget, seed } => {
            let per = shots_per_circuit(ctx, *budget)?;
            let nc = ctx.plan.circuit_count() as u64;
            let psi = ansatz_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits()))?;
            let mut est = estimate_expectation(
                &psi,
                &ctx.plan,
                EstimateMode::Shots {
                    budget: per * nc,
                    seed: derive_seed(*seed, seed_tag),
                },
            )?;
            usage.shots += per * nc;
            if est <= 1e-6 {
                // One re-estimate with doubled shots, then give up on this
                // evaluation (the optimizer treats +inf as a rejected step).
                est = estimate_expectation(
                    &psi,
                    &ctx.plan,
                    EstimateMode::Shots {
                        budget: 2 * per * nc,
                        seed: derive_seed(*seed, seed_tag ^ 0xdd),
                    },
                )?;
                usage.circuits += nc;
                usage.shots += 2 * per * nc;
                if est <= 1e-6 {
                    return Err(CostError::DegenerateDenominator);
                }
            }
            Ok(est)
        }
        EvalMode::Noisy { noise } => {
            Ok(estimate_expectation_noisy(ansatz_circuit, &ctx.plan, noise)?)
        }
    }
}

const TAG_NUMERATOR: u64 = 0xb0;
const TAG_DENOMINATOR: u64 = 0xd0;

/// Evaluates the cost at `theta`. On a degenerate shot-mode denominator the
/// value is `+inf` (a rejectable evaluation), never an error.
pub fn cost(ctx: &CostContext, theta: &[f64], mode: &EvalMode) -> Result<CostEvaluation, CostError> {
    let mut usage = Usage { circuits: 0, shots: 0 };
    let ansatz_circuit = build_ansatz(&ctx.ansatz, theta)?;
    let numerator = numerator_eval(ctx, &ansatz_circuit, mode, TAG_NUMERATOR, &mut usage)?;
    let denominator = match denominator_eval(ctx, &ansatz_circuit, mode, TAG_DENOMINATOR, &mut usage)
    {
        Ok(d) => d,
        Err(CostError::DegenerateDenominator) => {
            return Ok(CostEvaluation {
                value: f64::INFINITY,
                numerator,
                denominator: 0.0,
                r: 0.0,
                circuits_used: usage.circuits,
                shots_used: usage.shots,
            });
        }
        Err(e) => return Err(e),
    };
    let psi = ansatz_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits()))?;
    let sign = ctx.dense_overlap(&psi).signum();
    let r = sign * numerator.max(0.0).sqrt() / denominator;
    let value = if numerator == 0.0 {
        0.0
    } else {
        -numerator / (2.0 * denominator)
    };
    Ok(CostEvaluation {
        value,
        numerator,
        denominator,
        r,
        circuits_used: usage.circuits,
        shots_used: usage.shots,
    })
}

/// Cost of an externally supplied state (test and audit hook; bypasses the
/// ansatz but uses the same estimators in exact mode).
pub fn exact_cost_of_state(ctx: &CostContext, psi: &StateVector) -> Result<CostEvaluation, CostError> {
    let f = ctx.dense_overlap(psi);
    let denominator = estimate_expectation(psi, &ctx.plan, EstimateMode::Exact)?;
    let numerator = f * f;
    Ok(CostEvaluation {
        value: -numerator / (2.0 * denominator),
        numerator,
        denominator,
        r: f / denominator,
        circuits_used: ctx.circuits_per_cost_eval() as u64,
        shots_used: 0,
    })
}

/// Result of one gradient evaluation.
#[derive(Debug, Clone)]
pub struct GradientEvaluation {
    pub grad: Vec<f64>,
    pub circuits_used: u64,
    pub shots_used: u64,
}

/// `(<+| (x) <b^|) |Psi_i>` squared, realized as an all-zeros probability:
/// H on the derivative ancilla plus the inverse RHS preparation appended to
/// the derivative-state circuit (with the mixture ancilla and prefactor in
/// the device case). Explicit vectors project densely.
fn plus_b_overlap_sq(
    ctx: &CostContext,
    deriv_circuit: &Circuit,
    mode: &EvalMode,
    seed_tag: u64,
    usage: &mut Usage,
) -> Result<f64, CostError> {
    let dn = ctx.spec.num_qubits();
    match &ctx.prep {
        Some(prep) => {
            let prep_circuit = prep.circuit();
            let combined = if prep_circuit.num_qubits() == dn {
                let width = dn + 1;
                let mut c = Circuit::new(width);
                c.extend(deriv_circuit)?;
                c.push(Gate::H { qubit: 0 })?;
                let map: Vec<usize> = (1..width).collect();
                c.extend(&prep_circuit.inverted().remapped(&map, width)?)?;
                c
            } else {
                // Register: mixture ancilla 0, derivative ancilla 1, system 2...
                let width = dn + 2;
                let mut c = Circuit::new(width);
                c.push(Gate::H { qubit: 0 })?;
                let map: Vec<usize> = (1..width).collect();
                c.extend(&deriv_circuit.remapped(&map, width)?)?;
                c.push(Gate::H { qubit: 1 })?;
                let mut prep_map = vec![0usize];
                prep_map.extend(2..width);
                c.extend(&prep_circuit.inverted().remapped(&prep_map, width)?)?;
                c
            };
            usage.circuits += 1;
            let p0 = match mode {
                EvalMode::Exact => zero_probability_exact(&combined)?,
                EvalMode::Shots { budget, seed } => {
                    let per = shots_per_circuit(ctx, *budget)?;
                    usage.shots += per;
                    zero_probability_shots(&combined, per, derive_seed(*seed, seed_tag))?
                }
                EvalMode::Noisy { noise } => zero_probability_noisy(&combined, noise)?,
            };
            Ok(prep.prefactor() * p0)
        }
        None => {
            match mode {
                EvalMode::Noisy { noise } => {
                    // w = |+> (x) |b^> as a vector; Tr(rho w w^T).
                    let mut rho = DensityMatrix::zero_state(dn + 1)?;
                    rho.run_noisy(deriv_circuit, noise)?;
                    let half = 1usize << dn;
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    let w: Vec<f64> = (0..2 * half)
                        .map(|z| s * ctx.bhat[z % half])
                        .collect();
                    let mut acc = 0.0;
                    for i in 0..2 * half {
                        for j in 0..2 * half {
                            acc += w[i] * w[j] * rho.entry(i, j).re;
                        }
                    }
                    Ok(acc)
                }
                _ => {
                    let out = deriv_circuit.run(&StateVector::zero_state(dn + 1))?;
                    let half = 1usize << dn;
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    let amp: f64 = out
                        .amps()
                        .iter()
                        .enumerate()
                        .map(|(z, a)| s * ctx.bhat[z % half] * a.re)
                        .sum();
                    Ok(amp * amp)
                }
            }
        }
    }
}

/// `<Psi_i| X (x) A |Psi_i>` through the ancilla-extended measurement plan.
fn derivative_denominator_term(
    ctx: &CostContext,
    deriv_circuit: &Circuit,
    mode: &EvalMode,
    seed_tag: u64,
    usage: &mut Usage,
) -> Result<f64, CostError> {
    usage.circuits += ctx.deriv_plan.circuit_count() as u64;
    match mode {
        EvalMode::Exact => {
            let psi = deriv_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits() + 1))?;
            Ok(estimate_expectation(&psi, &ctx.deriv_plan, EstimateMode::Exact)?)
        }
        EvalMode::Shots { budget, seed } => {
            let per = shots_per_circuit(ctx, *budget)?;
            let nc = ctx.deriv_plan.circuit_count() as u64;
            usage.shots += per * nc;
            let psi = deriv_circuit.run(&StateVector::zero_state(ctx.spec.num_qubits() + 1))?;
            Ok(estimate_expectation(
                &psi,
                &ctx.deriv_plan,
                EstimateMode::Shots {
                    budget: per * nc,
                    seed: derive_seed(*seed, seed_tag),
                },
            )?)
        }
        EvalMode::Noisy { noise } => Ok(estimate_expectation_noisy(
            deriv_circuit,
            &ctx.deriv_plan,
            noise,
        )?),
    }
}

/// Tensors `|+>` as a new leftmost qubit onto a state.
fn expand_plus_ancilla(state: &StateVector) -> Result<StateVector, CostError> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = Vec::with_capacity(state.len() * 2);
    for a in state.amps() {
        amps.push(a * half);
    }
    for a in state.amps() {
        amps.push(a * half);
    }
    Ok(StateVector::from_amplitudes(amps)?)
}

/// Exact-mode gradient with shared prefixes: the base ansatz and the
/// derivative-register evolution are checkpointed at every parameterized RY,
/// so each index only replays its suffix. Numerically identical to the
/// circuit-per-index route (same measurement quantities, evaluated exactly).
fn gradient_exact(ctx: &CostContext, theta: &[f64]) -> Result<GradientEvaluation, CostError> {
    let dn = ctx.spec.num_qubits();
    let count = ctx.ansatz.parameter_count();
    let mut usage = Usage { circuits: 0, shots: 0 };

    let ansatz_circuit = build_ansatz(&ctx.ansatz, theta)?;
    let f_sq = numerator_eval(ctx, &ansatz_circuit, &EvalMode::Exact, TAG_NUMERATOR, &mut usage)?;
    usage.circuits += ctx.plan.circuit_count() as u64;

    // Base register: checkpoints before each parameterized RY.
    let tagged = crate::ansatz::tagged_gates(&ctx.ansatz, theta, 0)?;
    let mut pre_ry: Vec<StateVector> = Vec::with_capacity(count);
    let mut positions = vec![0usize; count];
    let mut psi = StateVector::zero_state(dn);
    for (gi, tg) in tagged.iter().enumerate() {
        if let Some(p) = tg.param {
            pre_ry.push(psi.clone());
            positions[p] = gi;
        }
        psi.apply(&tg.gate);
    }
    let denom = estimate_expectation(&psi, &ctx.plan, EstimateMode::Exact)?;

    // Derivative register: checkpoints right after each parameterized RY
    // (where the controlled-RY(pi) inserts).
    let tagged1 = crate::ansatz::tagged_gates(&ctx.ansatz, theta, 1)?;
    let mut post_ry: Vec<StateVector> = Vec::with_capacity(count);
    let mut dstate = StateVector::zero_state(dn + 1);
    dstate.apply(&Gate::H { qubit: 0 });
    for tg in &tagged1 {
        dstate.apply(&tg.gate);
        if tg.param.is_some() {
            post_ry.push(dstate.clone());
        }
    }

    // Closers appended after the suffix replay, built once.
    enum Closer {
        Direct { numerator: Circuit, overlap: Circuit },
        Mixture { numerator: Circuit, overlap: Circuit, prefactor: f64 },
        DenseOverlap,
    }
    let closer = match &ctx.prep {
        Some(RhsPreparation::DirectUnitary { circuit }) => {
            let numerator = circuit.inverted();
            let mut overlap = Circuit::new(dn + 1);
            overlap.push(Gate::H { qubit: 0 })?;
            let map: Vec<usize> = (1..dn + 1).collect();
            overlap.extend(&circuit.inverted().remapped(&map, dn + 1)?)?;
            Closer::Direct { numerator, overlap }
        }
        Some(RhsPreparation::AncillaMixture { circuit, beta0, beta1, .. }) => {
            let numerator = circuit.inverted();
            let width = dn + 2;
            let mut overlap = Circuit::new(width);
            overlap.push(Gate::H { qubit: 1 })?;
            let mut prep_map = vec![0usize];
            prep_map.extend(2..width);
            overlap.extend(&circuit.inverted().remapped(&prep_map, width)?)?;
            Closer::Mixture {
                numerator,
                overlap,
                prefactor: 2.0 * (beta0 * beta0 + beta1 * beta1),
            }
        }
        None => Closer::DenseOverlap,
    };

    let results = crate::parallel::map_indexed(count, |i| -> Result<f64, CostError> {
        let qubit = ctx.ansatz.parameter_qubit(i);
        // psi(theta + pi_i): replay from the pre-RY checkpoint.
        let mut shifted = pre_ry[i].clone();
        shifted.apply(&Gate::Ry {
            qubit,
            angle: theta[i] + std::f64::consts::PI,
        });
        for tg in &tagged[positions[i] + 1..] {
            shifted.apply(&tg.gate);
        }
        // Derivative state: controlled-RY(pi) at the post-RY checkpoint.
        let mut deriv = post_ry[i].clone();
        deriv.apply(&Gate::Cry {
            control: 0,
            target: qubit + 1,
            angle: std::f64::consts::PI,
        });
        for tg in &tagged1[positions[i] + 1..] {
            deriv.apply(&tg.gate);
        }

        let (fp_sq, t) = match &closer {
            Closer::Direct { numerator, overlap } => {
                let mut s = shifted.clone();
                numerator.run_in_place(&mut s)?;
                let fp_sq = s.amps()[0].norm_sqr();
                let mut o = deriv.clone();
                overlap.run_in_place(&mut o)?;
                (fp_sq, o.amps()[0].norm_sqr())
            }
            Closer::Mixture { numerator, overlap, prefactor } => {
                let mut s = expand_plus_ancilla(&shifted)?;
                numerator.run_in_place(&mut s)?;
                let fp_sq = prefactor * s.amps()[0].norm_sqr();
                let mut o = expand_plus_ancilla(&deriv)?;
                overlap.run_in_place(&mut o)?;
                (fp_sq, prefactor * o.amps()[0].norm_sqr())
            }
            Closer::DenseOverlap => {
                let fp: f64 = shifted
                    .amps()
                    .iter()
                    .zip(&ctx.bhat)
                    .map(|(a, &b)| a.re * b)
                    .sum();
                let half = std::f64::consts::FRAC_1_SQRT_2;
                let amp: f64 = deriv
                    .amps()
                    .iter()
                    .enumerate()
                    .map(|(z, a)| half * ctx.bhat[z % (1 << dn)] * a.re)
                    .sum();
                (fp * fp, amp * amp)
            }
        };
        let xa = estimate_expectation(&deriv, &ctx.deriv_plan, EstimateMode::Exact)?;
        let ff_prime = 2.0 * t - 0.5 * f_sq - 0.5 * fp_sq;
        Ok(-0.5 * ff_prime / denom + 0.5 * f_sq * xa / (denom * denom))
    });
    let mut grad = Vec::with_capacity(count);
    for res in results {
        grad.push(res?);
    }
    usage.circuits += count as u64 * (2 + ctx.deriv_plan.circuit_count() as u64);
    Ok(GradientEvaluation {
        grad,
        circuits_used: usage.circuits,
        shots_used: 0,
    })
}

/// Analytic gradient at `theta`. The first term of each partial derivative
/// comes from the three-term overlap identity
/// `f f' = 2 (<+,b|Psi>)^2 - f^2/2 - f'^2/2`, the second from
/// `<Psi| X (x) A |Psi>`; both reuse the shared numerator and denominator
/// of the unshifted point.
pub fn gradient(
    ctx: &CostContext,
    theta: &[f64],
    mode: &EvalMode,
) -> Result<GradientEvaluation, CostError> {
    if matches!(mode, EvalMode::Exact) {
        return gradient_exact(ctx, theta);
    }
    let mut usage = Usage { circuits: 0, shots: 0 };
    let ansatz_circuit = build_ansatz(&ctx.ansatz, theta)?;
    let f_sq = numerator_eval(ctx, &ansatz_circuit, mode, TAG_NUMERATOR, &mut usage)?;
    let denom = match denominator_eval(ctx, &ansatz_circuit, mode, TAG_DENOMINATOR, &mut usage) {
        Ok(d) => d,
        Err(CostError::DegenerateDenominator) => {
            return Ok(GradientEvaluation {
                grad: vec![f64::NAN; theta.len()],
                circuits_used: usage.circuits,
                shots_used: usage.shots,
            });
        }
        Err(e) => return Err(e),
    };
    let count = ctx.ansatz.parameter_count();
    let results = crate::parallel::map_indexed(count, |i| {
        let mut local = Usage { circuits: 0, shots: 0 };
        let out = (|| -> Result<f64, CostError> {
            let mut shifted = theta.to_vec();
            shifted[i] += std::f64::consts::PI;
            let shifted_circuit = build_ansatz(&ctx.ansatz, &shifted)?;
            let fp_sq =
                numerator_eval(ctx, &shifted_circuit, mode, 0x1000 + i as u64, &mut local)?;
            let deriv_circuit = build_derivative_state(&ctx.ansatz, theta, i)?;
            let t = plus_b_overlap_sq(ctx, &deriv_circuit, mode, 0x2000 + i as u64, &mut local)?;
            let ff_prime = 2.0 * t - 0.5 * f_sq - 0.5 * fp_sq;
            let xa = derivative_denominator_term(
                ctx,
                &deriv_circuit,
                mode,
                0x3000 + i as u64,
                &mut local,
            )?;
            Ok(-0.5 * ff_prime / denom + 0.5 * f_sq * xa / (denom * denom))
        })();
        (out, local.circuits, local.shots)
    });
    let mut grad = Vec::with_capacity(count);
    for (res, c, s) in results {
        usage.circuits += c;
        usage.shots += s;
        grad.push(res?);
    }
    Ok(GradientEvaluation {
        grad,
        circuits_used: usage.circuits,
        shots_used: usage.shots,
    })
}
