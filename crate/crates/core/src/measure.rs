//! Decomposition of the Poisson operator into measurement circuits.
//!
//! The off-diagonal part of each one-dimensional Poisson matrix splits into
//! shift terms `O+ + O-` acting on trailing qubit windows. Each such term is
//! the difference of projectors onto the two states
//! `phi_k^t = (|01..1> + (-1)^t |10..0>)/sqrt(2)`, which a short basis
//! rotation `V` (one Hadamard plus a CNOT cascade) maps onto computational
//! basis states. Measuring the rotated state therefore yields the term as a
//! signed probability, and windows of different axes share one circuit, so
//! the circuit count is independent of the dimension.

use serde::Serialize;

use crate::poisson::{BoundaryCondition, PoissonSpec};
use crate::qsim::{
    derive_seed, sample, Circuit, DensityMatrix, Gate, NoiseModel, QsimError, StateVector,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("window parameter k must satisfy 1 <= k <= {max}, got {got}")]
    BadWindow { got: usize, max: usize },
    #[error("squared-operator plan requires d = 2 with all-Dirichlet boundaries")]
    SquaredPlanUnsupported,
    #[error("state width {got} does not match plan width {expect}")]
    WidthMismatch { expect: usize, got: usize },
    #[error("shot budget must cover at least one shot per circuit ({circuits} circuits)")]
    BudgetTooSmall { circuits: usize },
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// One off-diagonal shift term of the decomposition: axis `axis`, window of
/// the trailing `k` qubits of that axis register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftTerm {
    pub axis: usize,
    pub k: usize,
}

/// What a sign rule measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    /// `O+ + O-` on the trailing `k`-qubit window of an axis.
    Shift { axis: usize, k: usize },
    /// `e1 e1^T + em em^T` on an axis register (Neumann correction, also the
    /// boundary term of the squared-operator plan).
    Ends { axis: usize },
    /// `e1 em^T + em e1^T` wrap coupling of a periodic axis.
    PeriodicWrap { axis: usize },
    /// Second-neighbour shift: `O+ + O-` on a `k`-window of the leading
    /// `n-1` qubits of an axis (squared-operator plan only).
    ShiftHigh { axis: usize, k: usize },
    /// Product term `(O+ + O-)_k1 (x) (O+ + O-)_k2` across the two axes
    /// (squared-operator plan only).
    ShiftPair { k1: usize, k2: usize },
    /// X-basis parity of a prepended ancilla (derivative-state plans).
    AncillaParity,
}

/// Signed-probability rule evaluated on the measured bitstring: the window
/// value (window\[0\] is the most significant bit) is matched against
/// `patterns`; matches contribute their sign, everything else contributes 0.
/// The rule's total is scaled by `weight`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignRule {
    pub kind: TermKind,
    pub window: Vec<usize>,
    pub patterns: Vec<(u64, i8)>,
    pub weight: f64,
}

impl SignRule {
    /// Sign of basis index `z` under this rule (without the weight).
    pub fn sign(&self, z: usize, num_qubits: usize) -> i8 {
        let mut val: u64 = 0;
        for &q in &self.window {
            val = (val << 1) | ((z >> (num_qubits - 1 - q)) & 1) as u64;
        }
        for &(pat, s) in &self.patterns {
            if pat == val {
                return s;
            }
        }
        0
    }

    fn signed_sum(&self, probs: &[f64], num_qubits: usize) -> f64 {
        probs
            .iter()
            .enumerate()
            .map(|(z, p)| f64::from(self.sign(z, num_qubits)) * p)
            .sum()
    }
}

/// One measurement circuit of a plan: the basis rotation appended to the
/// prepared state, plus the sign rules read off its histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanCircuit {
    pub rotation: Circuit,
    pub rules: Vec<SignRule>,
}

/// A complete recipe for estimating `<psi| A |psi>`:
/// `constant_offset + sum over circuits of sum over rules of
///  weight * (signed probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub num_qubits: usize,
    pub constant_offset: f64,
    pub circuits: Vec<PlanCircuit>,
}

impl MeasurementPlan {
    pub fn circuit_count(&self) -> usize {
        self.circuits.len()
    }
}

/// The basis rotation `V` on `window` (in application order: H on the
/// leading window qubit, then the CNOT cascade down the window).
/// `V |t 1 0..0> = phi_k^t`.
pub fn v_rotation(width: usize, window: &[usize]) -> Circuit {
    let mut c = Circuit::new(width);
    c.push(Gate::H { qubit: window[0] }).expect("valid window");
    for w in window.windows(2) {
        c.push(Gate::Cnot {
            control: w[0],
            target: w[1],
        })
        .expect("valid window");
    }
    c
}

/// Sign patterns of a `k`-qubit shift window after the `V^dagger` rotation:
/// outcome `0 1 0..0` counts +1, `1 1 0..0` counts -1, all else 0.
pub fn sign_pattern(k: usize) -> Vec<(u64, i8)> {
    if k == 1 {
        vec![(0, 1), (1, -1)]
    } else {
        let plus = 1u64 << (k - 2);
        let minus = (1u64 << (k - 1)) | plus;
        vec![(plus, 1), (minus, -1)]
    }
}

fn axis_window(spec: &PoissonSpec, axis: usize, k: usize) -> Vec<usize> {
    let base = axis * spec.n;
    (base + spec.n - k..base + spec.n).collect()
}

/// Builds the measurement plan for `<psi| A |psi>`: `n` circuits, one per
/// window size `k`, each rotating every axis window simultaneously; one
/// extra computational-basis circuit when any axis is Neumann. Periodic
/// wrap terms ride on the `k = n` circuit.
pub fn plan_expectation(spec: &PoissonSpec) -> MeasurementPlan {
    let nq = spec.num_qubits();
    let mut circuits = Vec::with_capacity(spec.n + 1);
    for k in 1..=spec.n {
        let mut rotation = Circuit::new(nq);
        let mut rules = Vec::new();
        for axis in 0..spec.d {
            let window = axis_window(spec, axis, k);
            let v = v_rotation(nq, &window);
            rotation.extend(&v.inverted()).expect("width ok");
            rules.push(SignRule {
                kind: TermKind::Shift { axis, k },
                window,
                patterns: sign_pattern(k),
                weight: -1.0,
            });
            if k == spec.n && spec.bc[axis] == BoundaryCondition::Periodic {
                // The k = n rotation maps the GHZ pair (e1 +- em)/sqrt(2)
                // onto |t 0..0>, so the wrap term shares this circuit.
                let window = axis_window(spec, axis, spec.n);
                let minus = 1u64 << (spec.n - 1);
                rules.push(SignRule {
                    kind: TermKind::PeriodicWrap { axis },
                    window,
                    patterns: vec![(0, 1), (minus, -1)],
                    weight: -1.0,
                });
            }
        }
        circuits.push(PlanCircuit { rotation, rules });
    }
    let neumann_axes: Vec<usize> = (0..spec.d)
        .filter(|&a| spec.bc[a] == BoundaryCondition::Neumann)
        .collect();
    if !neumann_axes.is_empty() {
        let rules = neumann_axes
            .into_iter()
            .map(|axis| {
                let window = axis_window(spec, axis, spec.n);
                let all_ones = (1u64 << spec.n) - 1;
                SignRule {
                    kind: TermKind::Ends { axis },
                    window,
                    patterns: vec![(0, 1), (all_ones, 1)],
                    weight: -1.0,
                }
            })
            .collect();
        circuits.push(PlanCircuit {
            rotation: Circuit::new(nq),
            rules,
        });
    }
    MeasurementPlan {
        num_qubits: nq,
        constant_offset: 2.0 * spec.d as f64,
        circuits,
    }
}

/// Number of circuits one expectation estimate needs. Independent of the
/// dimension; one extra circuit when a Neumann axis is present.
pub fn circuit_count(spec: &PoissonSpec) -> usize {
    plan_expectation(spec).circuit_count()
}

/// Plan for the competitor cost's `<psi| A^2 |psi>` on a two-dimensional
/// all-Dirichlet domain: `n^2 + 2n` circuits. The squared one-dimensional
/// operator decomposes into nearest-neighbour shifts (weight -4 per axis
/// from the square plus -4 from the cross term), second-neighbour shifts on
/// the leading `n-1` qubits (weight +1), boundary end projectors (weight
/// -1), and the `n^2` pairwise product terms (weight +2).
pub fn plan_expectation_squared_dirichlet(
    spec: &PoissonSpec,
) -> Result<MeasurementPlan, MeasureError> {
    if spec.d != 2 || spec.bc.iter().any(|&b| b != BoundaryCondition::Dirichlet) {
        return Err(MeasureError::SquaredPlanUnsupported);
    }
    let nq = spec.num_qubits();
    let n = spec.n;
    let mut circuits = Vec::with_capacity(n * n + 2 * n);
    // Full-window shifts, both axes batched; -4 (square) - 4 (cross) = -8.
    for k in 1..=n {
        let mut rotation = Circuit::new(nq);
        let mut rules = Vec::new();
        for axis in 0..2 {
            let window = axis_window(spec, axis, k);
            rotation
                .extend(&v_rotation(nq, &window).inverted())
                .expect("width ok");
            rules.push(SignRule {
                kind: TermKind::Shift { axis, k },
                window,
                patterns: sign_pattern(k),
                weight: -8.0,
            });
        }
        circuits.push(PlanCircuit { rotation, rules });
    }
    // Second-neighbour shifts: windows on the leading n-1 qubits of each axis.
    for k in 1..n {
        let mut rotation = Circuit::new(nq);
        let mut rules = Vec::new();
        for axis in 0..2 {
            let base = axis * n;
            let window: Vec<usize> = (base + n - 1 - k..base + n - 1).collect();
            rotation
                .extend(&v_rotation(nq, &window).inverted())
                .expect("width ok");
            rules.push(SignRule {
                kind: TermKind::ShiftHigh { axis, k },
                window,
                patterns: sign_pattern(k),
                weight: 1.0,
            });
        }
        circuits.push(PlanCircuit { rotation, rules });
    }
    // Boundary ends of both axes in one computational-basis circuit.
    let rules = (0..2)
        .map(|axis| {
            let window = axis_window(spec, axis, n);
            let all_ones = (1u64 << n) - 1;
            SignRule {
                kind: TermKind::Ends { axis },
                window,
                patterns: vec![(0, 1), (all_ones, 1)],
                weight: -1.0,
            }
        })
        .collect();
    circuits.push(PlanCircuit {
        rotation: Circuit::new(nq),
        rules,
    });
    // Pairwise product terms, one circuit per (k1, k2).
    for k1 in 1..=n {
        for k2 in 1..=n {
            let w1 = axis_window(spec, 0, k1);
            let w2 = axis_window(spec, 1, k2);
            let mut rotation = Circuit::new(nq);
            rotation
                .extend(&v_rotation(nq, &w1).inverted())
                .expect("width ok");
            rotation
                .extend(&v_rotation(nq, &w2).inverted())
                .expect("width ok");
            let p1 = sign_pattern(k1);
            let p2 = sign_pattern(k2);
            let mut patterns = Vec::with_capacity(4);
            for &(a, sa) in &p1 {
                for &(b, sb) in &p2 {
                    patterns.push(((a << k2) | b, sa * sb));
                }
            }
            let mut window = w1;
            window.extend(&w2);
            circuits.push(PlanCircuit {
                rotation,
                rules: vec![SignRule {
                    kind: TermKind::ShiftPair { k1, k2 },
                    window,
                    patterns,
                    weight: 2.0,
                }],
            });
        }
    }
    Ok(MeasurementPlan {
        num_qubits: nq,
        constant_offset: 20.0,
        circuits,
    })
}

/// Lifts a plan onto a register with one ancilla prepended (new qubit 0) and
/// multiplies every rule by the ancilla's X-basis parity. Estimating the
/// lifted plan on the derivative state gives `<Psi| X (x) A |Psi>`.
pub fn ancilla_extended_plan(plan: &MeasurementPlan) -> MeasurementPlan {
    let nq = plan.num_qubits + 1;
    let map: Vec<usize> = (1..nq).collect();
    let mut circuits: Vec<PlanCircuit> = plan
        .circuits
        .iter()
        .map(|pc| {
            let mut rotation = Circuit::new(nq);
            rotation.push(Gate::H { qubit: 0 }).expect("ancilla");
            rotation
                .extend(&pc.rotation.remapped(&map, nq).expect("shift by one"))
                .expect("width ok");
            let rules = pc
                .rules
                .iter()
                .map(|r| {
                    let mut window = vec![0usize];
                    window.extend(r.window.iter().map(|&q| q + 1));
                    let mut patterns = Vec::with_capacity(r.patterns.len() * 2);
                    let top = 1u64 << r.window.len();
                    for &(p, s) in &r.patterns {
                        patterns.push((p, s));
                        patterns.push((top | p, -s));
                    }
                    SignRule {
                        kind: r.kind,
                        window,
                        patterns,
                        weight: r.weight,
                    }
                })
                .collect();
            PlanCircuit { rotation, rules }
        })
        .collect();
    // The constant offset becomes offset * <X on ancilla>, measured on the
    // first circuit's histogram.
    if plan.constant_offset != 0.0 {
        if let Some(first) = circuits.first_mut() {
            first.rules.push(SignRule {
                kind: TermKind::AncillaParity,
                window: vec![0],
                patterns: vec![(0, 1), (1, -1)],
                weight: plan.constant_offset,
            });
        }
    }
    MeasurementPlan {
        num_qubits: nq,
        constant_offset: 0.0,
        circuits,
    }
}

/// How expectation values are extracted from circuits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateMode {
    /// Full outcome distributions from the statevector.
    Exact,
    /// Sampled histograms; the budget is split evenly across the plan's
    /// circuits and sub-seeds are derived per circuit.
    Shots { budget: u64, seed: u64 },
}

/// Estimates the plan's expectation value on a prepared state.
pub fn estimate_expectation(
    psi: &StateVector,
    plan: &MeasurementPlan,
    mode: EstimateMode,
) -> Result<f64, MeasureError> {
    if psi.num_qubits() != plan.num_qubits {
        return Err(MeasureError::WidthMismatch {
            expect: plan.num_qubits,
            got: psi.num_qubits(),
        });
    }
    let mut acc = plan.constant_offset;
    for (ci, pc) in plan.circuits.iter().enumerate() {
        let rotated = pc.rotation.run(psi)?;
        let probs = match mode {
            EstimateMode::Exact => rotated.probabilities(),
            EstimateMode::Shots { budget, seed } => {
                let per = budget / plan.circuits.len() as u64;
                if per == 0 {
                    return Err(MeasureError::BudgetTooSmall {
                        circuits: plan.circuits.len(),
                    });
                }
                sample(&rotated, per, derive_seed(seed, ci as u64))?.frequencies()
            }
        };
        for rule in &pc.rules {
            acc += rule.weight * rule.signed_sum(&probs, plan.num_qubits);
        }
    }
    Ok(acc)
}

/// Estimates the plan's expectation under depolarizing noise: for every plan
/// circuit the state preparation and the basis rotation are evolved as noisy
/// gates on a density matrix, and the rules read the noisy diagonal.
pub fn estimate_expectation_noisy(
    preparation: &Circuit,
    plan: &MeasurementPlan,
    noise: &NoiseModel,
) -> Result<f64, MeasureError> {
    let mut acc = plan.constant_offset;
    for pc in &plan.circuits {
        let mut rho = DensityMatrix::zero_state(plan.num_qubits)?;
        rho.run_noisy(preparation, noise)?;
        rho.run_noisy(&pc.rotation, noise)?;
        let probs = rho.diagonal();
        for rule in &pc.rules {
            acc += rule.weight * rule.signed_sum(&probs, plan.num_qubits);
        }
    }
    Ok(acc)
}

/// Serializable audit view of a plan (circuit gate listings, windows, sign
/// rules, counts).
#[derive(Debug, Serialize)]
pub struct PlanAudit {
    pub num_qubits: usize,
    pub constant_offset: f64,
    pub circuit_count: usize,
    pub circuits: Vec<CircuitAudit>,
}

#[derive(Debug, Serialize)]
pub struct CircuitAudit {
    pub rotation: Vec<String>,
    pub rules: Vec<SignRule>,
}

pub fn audit(plan: &MeasurementPlan) -> PlanAudit {
    PlanAudit {
        num_qubits: plan.num_qubits,
        constant_offset: plan.constant_offset,
        circuit_count: plan.circuit_count(),
        circuits: plan
            .circuits
            .iter()
            .map(|pc| CircuitAudit {
                rotation: pc.rotation.gates().iter().map(|g| g.to_string()).collect(),
                rules: pc.rules.clone(),
            })
            .collect(),
    }
}

/// Dense reconstruction of the operator a plan estimates. Test oracle: the
/// result must equal the Kronecker-sum matrix entrywise.
pub fn plan_matrix(plan: &MeasurementPlan) -> nalgebra::DMatrix<f64> {
    use nalgebra::DMatrix;
    let dim = 1 << plan.num_qubits;
    let mut total = DMatrix::<f64>::identity(dim, dim) * plan.constant_offset;
    for pc in &plan.circuits {
        // Columns of R = rotation as a dense matrix.
        let mut r = DMatrix::<crate::qsim::Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut amps = vec![crate::qsim::Complex64::new(0.0, 0.0); dim];
            amps[col] = crate::qsim::Complex64::new(1.0, 0.0);
            let state = StateVector::from_amplitudes(amps).expect("basis state");
            let out = pc.rotation.run(&state).expect("width ok");
            for row in 0..dim {
                r[(row, col)] = out.amps()[row];
            }
        }
        for rule in &pc.rules {
            // R^dagger diag(sign) R, accumulated with the rule weight.
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = crate::qsim::Complex64::new(0.0, 0.0);
                    for z in 0..dim {
                        let s = rule.sign(z, plan.num_qubits);
                        if s != 0 {
                            acc += r[(z, i)].conj() * r[(z, j)] * f64::from(s);
                        }
                    }
                    total[(i, j)] += rule.weight * acc.re;
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::build_matrix;
    use crate::qsim::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn spec(d: usize, n: usize, bc: &[BoundaryCondition]) -> PoissonSpec {
        PoissonSpec::new(d, n, bc.to_vec()).unwrap()
    }

    fn random_real_state(nq: usize, seed: u64) -> StateVector {
        let mut state = seed | 1;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let vals: Vec<f64> = (0..1usize << nq).map(|_| next()).collect();
        StateVector::from_real(&vals).unwrap()
    }

    fn dense_quadratic_form(a: &nalgebra::DMatrix<f64>, psi: &StateVector) -> f64 {
        let dim = a.nrows();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                acc += (psi.amps()[i].conj() * psi.amps()[j]).re * a[(i, j)];
            }
        }
        acc
    }

    #[test]
    fn v_rotation_k1_is_hadamard() {
        let v = v_rotation(2, &[1]);
        assert_eq!(v.gates(), &[Gate::H { qubit: 1 }]);
        // V|0> on the window = |+>, V|1> = |->.
        let mut s = StateVector::zero_state(1);
        let v1 = v_rotation(1, &[0]);
        v1.run_in_place(&mut s).unwrap();
        assert!((s.amps()[0].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.amps()[1].re - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn v_rotation_k2_states() {
        // V|01> = (|01> + |10>)/sqrt(2)
        let v = v_rotation(2, &[0, 1]);
        let init = StateVector::from_amplitudes(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let out = v.run(&init).unwrap();
        assert!((out.amps()[1].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.amps()[2].re - FRAC_1_SQRT_2).abs() < 1e-12);

        // V|11> = (|01> - |10>)/sqrt(2)
        let init = StateVector::from_amplitudes(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let out = v.run(&init).unwrap();
        assert!((out.amps()[1].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.amps()[2].re + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn sign_pattern_shapes() {
        assert_eq!(sign_pattern(1), vec![(0, 1), (1, -1)]);
        // k=3: "010" -> +1, "110" -> -1; everything else 0.
        let p = sign_pattern(3);
        assert_eq!(p, vec![(0b010, 1), (0b110, -1)]);
        // Completeness: exactly two of 2^k patterns carry a sign.
        for k in 1..=5 {
            assert_eq!(sign_pattern(k).len(), 2);
        }
    }

    #[test]
    fn plan_circuit_counts() {
        use BoundaryCondition::*;
        assert_eq!(circuit_count(&spec(2, 4, &[Dirichlet, Dirichlet])), 4);
        assert_eq!(circuit_count(&spec(2, 4, &[Neumann, Dirichlet])), 5);
        assert_eq!(circuit_count(&spec(1, 3, &[Periodic])), 3);
        assert_eq!(circuit_count(&spec(3, 4, &[Dirichlet; 3])), 4);
        assert_eq!(circuit_count(&spec(2, 5, &[Neumann, Dirichlet])), 6);
        assert_eq!(circuit_count(&spec(1, 1, &[Dirichlet])), 1);
    }

    #[test]
    fn dimension_independence_for_dirichlet() {
        use BoundaryCondition::*;
        for n in 1..=3 {
            let counts: Vec<usize> = (1..=3)
                .map(|d| circuit_count(&spec(d, n, &vec![Dirichlet; d])))
                .collect();
            assert!(counts.iter().all(|&c| c == n));
        }
    }

    #[test]
    fn reconstruction_matches_dense_matrix() {
        use BoundaryCondition::*;
        // Exhaustive over d, n and per-axis boundary choices at small sizes.
        for d in 1..=2usize {
            for n in 1..=2usize {
                let opts = [Dirichlet, Neumann, Periodic];
                let combos: Vec<Vec<BoundaryCondition>> = if d == 1 {
                    opts.iter().map(|&b| vec![b]).collect()
                } else {
                    opts.iter()
                        .flat_map(|&b1| opts.iter().map(move |&b2| vec![b1, b2]))
                        .collect()
                };
                for bc in combos {
                    let sp = spec(d, n, &bc);
                    let plan = plan_expectation(&sp);
                    let rec = plan_matrix(&plan);
                    let dense = build_matrix(&sp);
                    let diff = (&rec - &dense).abs().max();
                    assert!(diff < 1e-12, "d={d} n={n} bc={bc:?}: diff {diff}");
                }
            }
        }
    }

    #[test]
    fn estimate_matches_dense_quadratic_form() {
        use BoundaryCondition::*;
        let cases = [
            spec(1, 2, &[Dirichlet]),
            spec(2, 2, &[Neumann, Dirichlet]),
            spec(1, 3, &[Periodic]),
            spec(3, 1, &[Dirichlet, Neumann, Periodic]),
        ];
        for sp in cases {
            let a = build_matrix(&sp);
            let plan = plan_expectation(&sp);
            for seed in 0..20 {
                let psi = random_real_state(sp.num_qubits(), 1000 + seed);
                let est = estimate_expectation(&psi, &plan, EstimateMode::Exact).unwrap();
                let oracle = dense_quadratic_form(&a, &psi);
                assert!((est - oracle).abs() < 1e-10, "{sp:?} seed {seed}");
            }
        }
    }

    #[test]
    fn estimate_examples() {
        use BoundaryCondition::*;
        // Uniform state on d=1, n=2 Dirichlet: (1/4) * sum of entries = 0.5.
        let sp = spec(1, 2, &[Dirichlet]);
        let psi = StateVector::from_real(&[1.0; 4]).unwrap();
        let e = estimate_expectation(&psi, &plan_expectation(&sp), EstimateMode::Exact).unwrap();
        assert!((e - 0.5).abs() < 1e-10);

        // |00> on d=2 n=1 [N,D]: diagonal entry 1 + 2 = 3.
        let sp = spec(2, 1, &[Neumann, Dirichlet]);
        let psi = StateVector::zero_state(2);
        let e = estimate_expectation(&psi, &plan_expectation(&sp), EstimateMode::Exact).unwrap();
        assert!((e - 3.0).abs() < 1e-10);
    }

    #[test]
    fn squared_plan_count_and_oracle() {
        use BoundaryCondition::*;
        let sp = spec(2, 4, &[Dirichlet, Dirichlet]);
        let plan = plan_expectation_squared_dirichlet(&sp).unwrap();
        assert_eq!(plan.circuit_count(), 24); // n^2 + 2n at n = 4

        let sp2 = spec(2, 2, &[Dirichlet, Dirichlet]);
        let plan2 = plan_expectation_squared_dirichlet(&sp2).unwrap();
        assert_eq!(plan2.circuit_count(), 8);
        let a = build_matrix(&sp2);
        let a2 = &a * &a;
        for seed in 0..10 {
            let psi = random_real_state(sp2.num_qubits(), 77 + seed);
            let est = estimate_expectation(&psi, &plan2, EstimateMode::Exact).unwrap();
            let oracle = dense_quadratic_form(&a2, &psi);
            assert!((est - oracle).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn squared_plan_reconstruction() {
        use BoundaryCondition::*;
        for n in 1..=2usize {
            let sp = spec(2, n, &[Dirichlet, Dirichlet]);
            let plan = plan_expectation_squared_dirichlet(&sp).unwrap();
            let rec = plan_matrix(&plan);
            let a = build_matrix(&sp);
            let dense = &a * &a;
            let diff = (&rec - &dense).abs().max();
            assert!(diff < 1e-12, "n={n}: diff {diff}");
        }
    }

    #[test]
    fn squared_plan_rejects_mixed_boundaries() {
        use BoundaryCondition::*;
        let sp = spec(2, 2, &[Neumann, Dirichlet]);
        assert!(matches!(
            plan_expectation_squared_dirichlet(&sp),
            Err(MeasureError::SquaredPlanUnsupported)
        ));
    }

    #[test]
    fn shots_mode_converges_to_exact() {
        use BoundaryCondition::*;
        let sp = spec(2, 2, &[Neumann, Dirichlet]);
        let plan = plan_expectation(&sp);
        let psi = random_real_state(4, 5);
        let exact = estimate_expectation(&psi, &plan, EstimateMode::Exact).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for e in [10u32, 12, 14, 17] {
            let mut err = 0.0;
            let reps = 8;
            for seed in 0..reps {
                let est = estimate_expectation(
                    &psi,
                    &plan,
                    EstimateMode::Shots { budget: (1 << e) * plan.circuit_count() as u64, seed },
                )
                .unwrap();
                err += (est - exact).abs();
            }
            xs.push(f64::from(e));
            ys.push((err / reps as f64).ln());
        }
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope < -0.2 && slope > -0.5, "slope {slope}");
    }

    #[test]
    fn shots_budget_too_small_is_error() {
        use BoundaryCondition::*;
        let sp = spec(2, 2, &[Dirichlet, Dirichlet]);
        let plan = plan_expectation(&sp);
        let psi = StateVector::zero_state(4);
        assert!(matches!(
            estimate_expectation(&psi, &plan, EstimateMode::Shots { budget: 1, seed: 0 }),
            Err(MeasureError::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn noisy_estimate_with_zero_rates_matches_exact() {
        use BoundaryCondition::*;
        let sp = spec(2, 2, &[Dirichlet, Dirichlet]);
        let plan = plan_expectation(&sp);
        let mut prep = Circuit::new(4);
        prep.push(Gate::Ry { qubit: 0, angle: 0.7 }).unwrap();
        prep.push(Gate::Cz { a: 0, b: 1 }).unwrap();
        prep.push(Gate::Ry { qubit: 1, angle: 1.1 }).unwrap();
        prep.push(Gate::Ry { qubit: 2, angle: 0.2 }).unwrap();
        prep.push(Gate::Ry { qubit: 3, angle: -0.4 }).unwrap();
        let psi = prep.run(&StateVector::zero_state(4)).unwrap();
        let exact = estimate_expectation(&psi, &plan, EstimateMode::Exact).unwrap();
        let noisy =
            estimate_expectation_noisy(&prep, &plan, &NoiseModel::noiseless()).unwrap();
        assert!((exact - noisy).abs() < 1e-10);
    }
}
