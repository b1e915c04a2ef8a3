//! The hardware-efficient real-valued ansatz and its derivative-state
//! extension.
//!
//! Layout: one initial RY per qubit, then `depth` repeated blocks. A block
//! walks the nearest-neighbour pairs `(j, j+1)` in order, applying CZ
//! followed by one RY on each pair qubit, contributing `2(width-1)`
//! parameters per block. RY and CZ have real matrices, so the prepared state
//! is exactly real. Parameter count: `width + 2*depth*(width-1)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qsim::{Circuit, Gate, QsimError, StateVector};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("ansatz width must be 1..=12 (one qubit is reserved for the derivative ancilla)")]
    BadWidth(usize),
    #[error("parameter vector length {got} does not match the ansatz ({expect})")]
    ParameterCountMismatch { expect: usize, got: usize },
    #[error("parameter index {got} out of range ({count} parameters)")]
    ParameterIndexOutOfRange { got: usize, count: usize },
    #[error("parameters must be finite")]
    NonFiniteParameter,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Geometry of the ansatz circuit: register width and repeated-block count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AnsatzSpec {
    pub width: usize,
    pub depth: usize,
}

impl AnsatzSpec {
    pub fn new(width: usize, depth: usize) -> Result<Self, AnsatzError> {
        if width < 1 || width > 12 {
            return Err(AnsatzError::BadWidth(width));
        }
        Ok(AnsatzSpec { width, depth })
    }

    pub fn parameter_count(&self) -> usize {
        self.width + 2 * self.depth * (self.width.saturating_sub(1))
    }

    /// Target qubit of the RY gate carrying parameter `i`.
    pub fn parameter_qubit(&self, i: usize) -> usize {
        if i < self.width {
            return i;
        }
        let in_block = (i - self.width) % (2 * (self.width - 1));
        let pair = in_block / 2;
        pair + in_block % 2
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), AnsatzError> {
        if theta.len() != self.parameter_count() {
            return Err(AnsatzError::ParameterCountMismatch {
                expect: self.parameter_count(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(AnsatzError::NonFiniteParameter);
        }
        Ok(())
    }
}

/// One ansatz gate together with the parameter index it carries (RY gates
/// only).
#[derive(Debug, Clone, Copy)]
pub struct TaggedGate {
    pub gate: Gate,
    pub param: Option<usize>,
}

/// The ansatz gate sequence with parameter tags, with system qubit `q`
/// placed at `q + offset` on a `total_width`-qubit register. Shared-prefix
/// gradient evaluation walks this list directly.
pub fn tagged_gates(
    spec: &AnsatzSpec,
    theta: &[f64],
    offset: usize,
) -> Result<Vec<TaggedGate>, AnsatzError> {
    spec.check_theta(theta)?;
    let mut out = Vec::with_capacity(spec.parameter_count() + spec.depth * spec.width);
    let mut idx = 0usize;
    let mut push_ry = |out: &mut Vec<TaggedGate>, qubit: usize, idx: &mut usize| {
        out.push(TaggedGate {
            gate: Gate::Ry {
                qubit: qubit + offset,
                angle: theta[*idx],
            },
            param: Some(*idx),
        });
        *idx += 1;
    };
    for q in 0..spec.width {
        push_ry(&mut out, q, &mut idx);
    }
    for _ in 0..spec.depth {
        for j in 0..spec.width - 1 {
            out.push(TaggedGate {
                gate: Gate::Cz {
                    a: j + offset,
                    b: j + 1 + offset,
                },
                param: None,
            });
            push_ry(&mut out, j, &mut idx);
            push_ry(&mut out, j + 1, &mut idx);
        }
    }
    Ok(out)
}

/// Builds the ansatz on `total_width` qubits with system qubit `q` placed at
/// `q + offset`, optionally inserting a controlled-RY(pi) from qubit 0 right
/// after the RY carrying `shift_index`.
fn build_internal(
    spec: &AnsatzSpec,
    theta: &[f64],
    offset: usize,
    total_width: usize,
    shift_index: Option<usize>,
) -> Result<Circuit, AnsatzError> {
    spec.check_theta(theta)?;
    let mut c = Circuit::new(total_width);
    let mut idx = 0usize;
    let push_ry = |c: &mut Circuit, qubit: usize, idx: &mut usize| -> Result<(), AnsatzError> {
        c.push(Gate::Ry {
            qubit: qubit + offset,
            angle: theta[*idx],
        })?;
        if shift_index == Some(*idx) {
            c.push(Gate::Cry {
                control: 0,
                target: qubit + offset,
                angle: std::f64::consts::PI,
            })?;
        }
        *idx += 1;
        Ok(())
    };
    for q in 0..spec.width {
        push_ry(&mut c, q, &mut idx)?;
    }
    for _ in 0..spec.depth {
        for j in 0..spec.width - 1 {
            c.push(Gate::Cz {
                a: j + offset,
                b: j + 1 + offset,
            })?;
            push_ry(&mut c, j, &mut idx)?;
            push_ry(&mut c, j + 1, &mut idx)?;
        }
    }
    Ok(c)
}

/// The ansatz circuit `U_psi(theta)` on `spec.width` qubits.
pub fn build_ansatz(spec: &AnsatzSpec, theta: &[f64]) -> Result<Circuit, AnsatzError> {
    build_internal(spec, theta, 0, spec.width, None)
}

/// Runs the ansatz from `|0..0>`.
pub fn ansatz_state(spec: &AnsatzSpec, theta: &[f64]) -> Result<StateVector, AnsatzError> {
    let c = build_ansatz(spec, theta)?;
    Ok(c.run(&StateVector::zero_state(spec.width))?)
}

/// Derivative-state circuit on `width + 1` qubits: ancilla (qubit 0) in the
/// Hadamard basis controls an RY(pi) inserted right after the RY carrying
/// parameter `i`, so the output is
/// `(|0>|psi(theta)> + |1>|psi(theta + pi_i)>)/sqrt(2)`.
pub fn build_derivative_state(
    spec: &AnsatzSpec,
    theta: &[f64],
    i: usize,
) -> Result<Circuit, AnsatzError> {
    if i >= spec.parameter_count() {
        return Err(AnsatzError::ParameterIndexOutOfRange {
            got: i,
            count: spec.parameter_count(),
        });
    }
    let mut c = Circuit::new(spec.width + 1);
    c.push(Gate::H { qubit: 0 })?;
    let body = build_internal(spec, theta, 1, spec.width + 1, Some(i))?;
    c.extend(&body)?;
    Ok(c)
}

/// Seeded initial parameters, uniform in `[0, 2*pi)`.
pub fn random_parameters(spec: &AnsatzSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.parameter_count())
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect()
}
