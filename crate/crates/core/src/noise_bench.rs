//! The multi-controlled-X baseline for estimating `<psi|A_DD|psi>` and the
//! depolarizing-noise comparison against the shift-operator scheme.
//!
//! The baseline runs one Hadamard test per axis whose ancilla controls a
//! cyclic-decrement ladder (X, CX, CCX, CCCX with positive controls on
//! already-flipped lower bits), plus one wrap-correction test per axis with
//! ancilla-controlled `X^(x)n`. All multi-controlled gates are expanded to
//! one- and two-qubit gates through exact Toffoli decompositions, which is
//! what makes the scheme deep and noise-sensitive.

use serde::Serialize;

use crate::ansatz::{build_ansatz, random_parameters, AnsatzSpec};
use crate::measure::{estimate_expectation, estimate_expectation_noisy, plan_expectation, EstimateMode};
use crate::poisson::{BoundaryCondition, PoissonSpec};
use crate::qsim::{
    Circuit, DensityMatrix, Gate, NoiseModel, QsimError, StateVector, MAX_DENSITY_QUBITS,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NoiseBenchError {
    #[error("baseline circuits support 1 <= n <= 4 (density-matrix budget), got {0}")]
    UnsupportedWidth(usize),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// A multi-controlled target operation expanded into one- and two-qubit
/// gates. `ancillas` lists scratch qubits that enter and leave in `|0>`.
#[derive(Debug, Clone)]
pub struct DecomposedCircuit {
    pub circuit: Circuit,
    pub ancillas: Vec<usize>,
    pub depth: usize,
}

/// Longest dependency chain through the gate list.
pub fn circuit_depth(circuit: &Circuit) -> usize {
    let mut level = vec![0usize; circuit.num_qubits()];
    let mut depth = 0;
    for g in circuit.gates() {
        let (a, b) = g.qubits();
        let l = match b {
            Some(b) => level[a].max(level[b]) + 1,
            None => level[a] + 1,
        };
        level[a] = l;
        if let Some(b) = b {
            level[b] = l;
        }
        depth = depth.max(l);
    }
    depth
}

const T: f64 = std::f64::consts::FRAC_PI_4;

/// Standard 6-CNOT + single-qubit-gate Toffoli: exact unitary equivalence
/// (T gates realized as phase gates keep the global phase).
pub fn toffoli_gates(c1: usize, c2: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::H { qubit: target },
        Gate::Cnot { control: c2, target },
        Gate::Phase { qubit: target, angle: -T },
        Gate::Cnot { control: c1, target },
        Gate::Phase { qubit: target, angle: T },
        Gate::Cnot { control: c2, target },
        Gate::Phase { qubit: target, angle: -T },
        Gate::Cnot { control: c1, target },
        Gate::Phase { qubit: c2, angle: T },
        Gate::Phase { qubit: target, angle: T },
        Gate::Cnot { control: c1, target: c2 },
        Gate::H { qubit: target },
        Gate::Phase { qubit: c1, angle: T },
        Gate::Phase { qubit: c2, angle: -T },
        Gate::Cnot { control: c1, target: c2 },
    ]
}

/// The canonical 3-qubit Toffoli decomposition (controls 0, 1; target 2).
pub fn decompose_toffoli() -> DecomposedCircuit {
    let mut circuit = Circuit::new(3);
    for g in toffoli_gates(0, 1, 2) {
        circuit.push(g).expect("static gate list");
    }
    let depth = circuit_depth(&circuit);
    DecomposedCircuit {
        circuit,
        ancillas: vec![],
        depth,
    }
}

/// CCCX as three Toffolis around one clean ancilla (compute-use-uncompute),
/// each expanded by [`toffoli_gates`].
pub fn cccx_gates(c1: usize, c2: usize, c3: usize, target: usize, ancilla: usize) -> Vec<Gate> {
    let mut gates = toffoli_gates(c1, c2, ancilla);
    gates.extend(toffoli_gates(ancilla, c3, target));
    gates.extend(toffoli_gates(c1, c2, ancilla));
    gates
}

/// The canonical 5-qubit CCCX decomposition (controls 0, 1, 2; target 3;
/// clean ancilla 4).
pub fn decompose_cccx() -> DecomposedCircuit {
    let mut circuit = Circuit::new(5);
    for g in cccx_gates(0, 1, 2, 3, 4) {
        circuit.push(g).expect("static gate list");
    }
    let depth = circuit_depth(&circuit);
    DecomposedCircuit {
        circuit,
        ancillas: vec![4],
        depth,
    }
}

/// C4X with one clean ancilla and one dirty helper: the clean ancilla takes
/// `c1 AND c2`, then a 4-Toffoli dirty-ancilla C3X finishes the job.
pub fn c4x_gates(
    c1: usize,
    c2: usize,
    c3: usize,
    c4: usize,
    target: usize,
    clean: usize,
    dirty: usize,
) -> Vec<Gate> {
    let mut gates = toffoli_gates(c1, c2, clean);
    // C3X(clean, c3, c4 -> target) with dirty helper d:
    // CCX(a,b,d); CCX(d,c,t); CCX(a,b,d); CCX(d,c,t) flips t iff a&b&c.
    gates.extend(toffoli_gates(clean, c3, dirty));
    gates.extend(toffoli_gates(dirty, c4, target));
    gates.extend(toffoli_gates(clean, c3, dirty));
    gates.extend(toffoli_gates(dirty, c4, target));
    gates.extend(toffoli_gates(c1, c2, clean));
    gates
}

/// An abstract multi-controlled X, before decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct McxGate {
    pub controls: Vec<usize>,
    pub target: usize,
}

impl McxGate {
    pub fn total_qubits(&self) -> usize {
        self.controls.len() + 1
    }
}

/// The h-controlled cyclic-decrement ladder on one axis register, as
/// abstract multi-controlled gates. Applied LSB upward; each gate's extra
/// controls read the already-flipped lower bits.
pub fn controlled_decrement_ladder(h: usize, axis_qubits: &[usize]) -> Vec<McxGate> {
    let n = axis_qubits.len();
    let mut gates = Vec::with_capacity(n);
    for t in (0..n).rev() {
        let mut controls = vec![h];
        controls.extend(&axis_qubits[t + 1..]);
        gates.push(McxGate {
            controls,
            target: axis_qubits[t],
        });
    }
    gates
}

/// Gate census of the full baseline construction at width `n` (both axes),
/// before decomposition.
pub fn baseline_ladder_census(n: usize) -> Vec<McxGate> {
    let mut all = Vec::new();
    let h = 2 * n; // ancilla position in the census view
    for axis in 0..2 {
        let qubits: Vec<usize> = (axis * n..(axis + 1) * n).collect();
        all.extend(controlled_decrement_ladder(h, &qubits));
    }
    all
}

fn expand_mcx(
    circuit: &mut Circuit,
    gate: &McxGate,
    clean: usize,
    dirty_pool: &[usize],
) -> Result<(), QsimError> {
    let gs = match gate.controls.len() {
        1 => vec![Gate::Cnot {
            control: gate.controls[0],
            target: gate.target,
        }],
        2 => toffoli_gates(gate.controls[0], gate.controls[1], gate.target),
        3 => cccx_gates(
            gate.controls[0],
            gate.controls[1],
            gate.controls[2],
            gate.target,
            clean,
        ),
        4 => {
            let dirty = dirty_pool
                .iter()
                .copied()
                .find(|q| !gate.controls.contains(q) && *q != gate.target && *q != clean)
                .expect("idle qubit available as dirty helper");
            c4x_gates(
                gate.controls[0],
                gate.controls[1],
                gate.controls[2],
                gate.controls[3],
                gate.target,
                clean,
                dirty,
            )
        }
        _ => unreachable!("ladder gates have at most 4 controls"),
    };
    for g in gs {
        circuit.push(g)?;
    }
    Ok(())
}

/// One measurement circuit of the baseline scheme. The circuit spans
/// `2n + 2` qubits: system `0..2n`, Hadamard-test ancilla `2n`, scratch
/// `2n + 1`. It contains only the measurement machinery; the ansatz is
/// prepended by the caller.
#[derive(Debug, Clone)]
pub struct BaselineCircuit {
    pub kind: BaselineKind,
    pub circuit: Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Hadamard test of the cyclic decrement on one axis.
    ShiftTest { axis: usize },
    /// Hadamard test of `X^(x)n` filtered on the axis end states.
    WrapTest { axis: usize },
}

/// The four baseline measurement circuits for the 2-D all-Dirichlet
/// operator at width `n`, fully decomposed to one- and two-qubit gates.
pub struct BaselineScheme {
    pub n: usize,
    pub width: usize,
    pub circuits: Vec<BaselineCircuit>,
}

pub fn baseline_scheme(n: usize) -> Result<BaselineScheme, NoiseBenchError> {
    if n < 1 || 2 * n + 2 > MAX_DENSITY_QUBITS {
        return Err(NoiseBenchError::UnsupportedWidth(n));
    }
    let width = 2 * n + 2;
    let h = 2 * n;
    let clean = 2 * n + 1;
    let mut circuits = Vec::with_capacity(4);
    for axis in 0..2usize {
        let axis_qubits: Vec<usize> = (axis * n..(axis + 1) * n).collect();
        let other_axis: Vec<usize> = ((1 - axis) * n..(2 - axis) * n).collect();

        let mut shift = Circuit::new(width);
        shift.push(Gate::H { qubit: h })?;
        for mcx in controlled_decrement_ladder(h, &axis_qubits) {
            expand_mcx(&mut shift, &mcx, clean, &other_axis)?;
        }
        shift.push(Gate::H { qubit: h })?;
        circuits.push(BaselineCircuit {
            kind: BaselineKind::ShiftTest { axis },
            circuit: shift,
        });

        let mut wrap = Circuit::new(width);
        wrap.push(Gate::H { qubit: h })?;
        for &q in &axis_qubits {
            wrap.push(Gate::Cnot { control: h, target: q })?;
        }
        wrap.push(Gate::H { qubit: h })?;
        circuits.push(BaselineCircuit {
            kind: BaselineKind::WrapTest { axis },
            circuit: wrap,
        });
    }
    Ok(BaselineScheme { n, width, circuits })
}

impl BaselineScheme {
    /// Assembles `<A_DD> = 4 - sum_axis 2 Re<D_axis> + sum_axis <wrap_axis>`
    /// from the per-circuit outcome distributions.
    fn assemble(&self, terms: &[f64]) -> f64 {
        let mut acc = 4.0;
        for (bc, &t) in self.circuits.iter().zip(terms) {
            match bc.kind {
                BaselineKind::ShiftTest { .. } => acc -= 2.0 * t,
                BaselineKind::WrapTest { .. } => acc += t,
            }
        }
        acc
    }

    /// Signed readout of one circuit's probabilities: the ancilla X-parity,
    /// filtered on the axis end states for wrap tests.
    fn term_from_probs(&self, kind: BaselineKind, probs: &[f64]) -> f64 {
        let n = self.n;
        let width = self.width;
        let h_bit = |z: usize| (z >> (width - 1 - 2 * n)) & 1;
        match kind {
            BaselineKind::ShiftTest { .. } => probs
                .iter()
                .enumerate()
                .map(|(z, p)| if h_bit(z) == 0 { *p } else { -*p })
                .sum(),
            BaselineKind::WrapTest { axis } => {
                let ones = (1usize << n) - 1;
                probs
                    .iter()
                    .enumerate()
                    .map(|(z, p)| {
                        let axis_val =
                            (z >> (width - n - axis * n)) & ((1usize << n) - 1);
                        if axis_val == 0 || axis_val == ones {
                            if h_bit(z) == 0 {
                                *p
                            } else {
                                -*p
                            }
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
        }
    }

    /// Noiseless evaluation from a system-register preparation circuit.
    pub fn expectation_exact(&self, preparation: &Circuit) -> Result<f64, NoiseBenchError> {
        let map: Vec<usize> = (0..preparation.num_qubits()).collect();
        let prep = preparation.remapped(&map, self.width)?;
        let mut terms = Vec::with_capacity(self.circuits.len());
        for bc in &self.circuits {
            let mut full = Circuit::new(self.width);
            full.extend(&prep)?;
            full.extend(&bc.circuit)?;
            let out = full.run(&StateVector::zero_state(self.width))?;
            terms.push(self.term_from_probs(bc.kind, &out.probabilities()));
        }
        Ok(self.assemble(&terms))
    }

    /// Depolarizing-noise evaluation (density matrix; every decomposed gate
    /// carries its channel).
    pub fn expectation_noisy(
        &self,
        preparation: &Circuit,
        noise: &NoiseModel,
    ) -> Result<f64, NoiseBenchError> {
        let map: Vec<usize> = (0..preparation.num_qubits()).collect();
        let prep = preparation.remapped(&map, self.width)?;
        let mut terms = Vec::with_capacity(self.circuits.len());
        for bc in &self.circuits {
            let mut rho = DensityMatrix::zero_state(self.width)?;
            rho.run_noisy(&prep, noise)?;
            rho.run_noisy(&bc.circuit, noise)?;
            terms.push(self.term_from_probs(bc.kind, &rho.diagonal()));
        }
        Ok(self.assemble(&terms))
    }
}

/// Mean relative errors of both schemes over a grid of two-qubit error
/// rates.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepResult {
    pub n: usize,
    pub ansatz_depth: usize,
    pub p1: f64,
    pub p2_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub shift_scheme_mean: Vec<f64>,
    pub shift_scheme_stderr: Vec<f64>,
    pub baseline_mean: Vec<f64>,
    pub baseline_stderr: Vec<f64>,
}

impl NoiseSweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p2,scheme,mean_rel_error,stderr,trials\n");
        for (i, &p2) in self.p2_grid.iter().enumerate() {
            out.push_str(&format!(
                "{},shift_operator,{},{},{}\n",
                p2, self.shift_scheme_mean[i], self.shift_scheme_stderr[i], self.trials
            ));
            out.push_str(&format!(
                "{},mcx_baseline,{},{},{}\n",
                p2, self.baseline_mean[i], self.baseline_stderr[i], self.trials
            ));
        }
        out
    }
}

/// Relative error `|ideal - noisy| / |ideal|` of the expectation value for
/// both schemes at every grid point, averaged over `trials` random
/// parameter draws. Each (grid point, trial) pair owns its density
/// matrices; trials are embarrassingly parallel.
pub fn noise_sweep(
    n: usize,
    ansatz_depth: usize,
    p1: f64,
    p2_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<NoiseSweepResult, NoiseBenchError> {
    let scheme = baseline_scheme(n)?;
    let spec = PoissonSpec::new(2, n, vec![BoundaryCondition::Dirichlet; 2])
        .expect("valid all-Dirichlet spec");
    let plan = plan_expectation(&spec);
    let ansatz = AnsatzSpec::new(2 * n, ansatz_depth).expect("width within cap");

    let jobs: Vec<(usize, usize)> = (0..p2_grid.len())
        .flat_map(|gi| (0..trials).map(move |t| (gi, t)))
        .collect();
    let errors: Vec<Result<(f64, f64), NoiseBenchError>> =
        crate::parallel::map_indexed(jobs.len(), |j| {
            let (gi, trial) = jobs[j];
            let noise = NoiseModel::new(p1, p2_grid[gi]).expect("validated rates");
            let theta = random_parameters(
                &ansatz,
                crate::qsim::derive_seed(seed, trial as u64),
            );
            let prep = build_ansatz(&ansatz, &theta).expect("matching parameter count");
            let psi = prep.run(&StateVector::zero_state(2 * n))?;
            let ideal = estimate_expectation(&psi, &plan, EstimateMode::Exact)
                .expect("exact estimate");
            let noisy_ours = estimate_expectation_noisy(&prep, &plan, &noise)
                .expect("plan width within density budget");
            let noisy_base = scheme.expectation_noisy(&prep, &noise)?;
            Ok((
                (ideal - noisy_ours).abs() / ideal.abs(),
                (ideal - noisy_base).abs() / ideal.abs(),
            ))
        });

    let mut ours_mean = vec![0.0; p2_grid.len()];
    let mut ours_sq = vec![0.0; p2_grid.len()];
    let mut base_mean = vec![0.0; p2_grid.len()];
    let mut base_sq = vec![0.0; p2_grid.len()];
    for (j, res) in errors.into_iter().enumerate() {
        let (ours, base) = res?;
        let (gi, _) = jobs[j];
        ours_mean[gi] += ours;
        ours_sq[gi] += ours * ours;
        base_mean[gi] += base;
        base_sq[gi] += base * base;
    }
    let t = trials as f64;
    let mut ours_se = vec![0.0; p2_grid.len()];
    let mut base_se = vec![0.0; p2_grid.len()];
    for gi in 0..p2_grid.len() {
        ours_mean[gi] /= t;
        base_mean[gi] /= t;
        let var_o = (ours_sq[gi] / t - ours_mean[gi] * ours_mean[gi]).max(0.0);
        let var_b = (base_sq[gi] / t - base_mean[gi] * base_mean[gi]).max(0.0);
        ours_se[gi] = (var_o / t).sqrt();
        base_se[gi] = (var_b / t).sqrt();
    }
    Ok(NoiseSweepResult {
        n,
        ansatz_depth,
        p1,
        p2_grid: p2_grid.to_vec(),
        trials,
        seed,
        shift_scheme_mean: ours_mean,
        shift_scheme_stderr: ours_se,
        baseline_mean: base_mean,
        baseline_stderr: base_se,
    })
}
