use std::fmt;

use super::{Complex64, QsimError, MAX_STATE_QUBITS};

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One- and two-qubit gates. `RY(theta)` uses the real convention
/// `[[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]` so circuits built from
/// `RY`/`CZ` keep statevectors exactly real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Rx { qubit: usize, angle: f64 },
    /// Phase gate `diag(1, e^{i*angle})`; `Phase(pi/4)` is the T gate.
    Phase { qubit: usize, angle: f64 },
    H { qubit: usize },
    X { qubit: usize },
    Z { qubit: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    Cry { control: usize, target: usize, angle: f64 },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Rx { qubit, .. }
            | Gate::Phase { qubit, .. }
            | Gate::H { qubit }
            | Gate::X { qubit }
            | Gate::Z { qubit } => (qubit, None),
            Gate::Cz { a, b } => (a, Some(b)),
            Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => {
                (control, Some(target))
            }
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1.is_some()
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. }
            | Gate::Rz { angle, .. }
            | Gate::Rx { angle, .. }
            | Gate::Phase { angle, .. }
            | Gate::Cry { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn validate(&self, width: usize) -> Result<(), QsimError> {
        let (a, b) = self.qubits();
        if a >= width {
            return Err(QsimError::QubitOutOfRange { index: a, width });
        }
        if let Some(b) = b {
            if b >= width {
                return Err(QsimError::QubitOutOfRange { index: b, width });
            }
            if a == b {
                return Err(QsimError::OverlappingQubits);
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(QsimError::NonFiniteAngle);
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Phase { qubit, angle } => Gate::Phase { qubit, angle: -angle },
            Gate::Cry { control, target, angle } => Gate::Cry { control, target, angle: -angle },
            g => g, // H, X, Z, CZ, CNOT are involutions
        }
    }

    /// Remaps qubit indices through `map[old] = new`.
    pub fn remapped(&self, map: &[usize]) -> Gate {
        let m = |q: usize| map[q];
        match *self {
            Gate::Ry { qubit, angle } => Gate::Ry { qubit: m(qubit), angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit: m(qubit), angle },
            Gate::Rx { qubit, angle } => Gate::Rx { qubit: m(qubit), angle },
            Gate::Phase { qubit, angle } => Gate::Phase { qubit: m(qubit), angle },
            Gate::H { qubit } => Gate::H { qubit: m(qubit) },
            Gate::X { qubit } => Gate::X { qubit: m(qubit) },
            Gate::Z { qubit } => Gate::Z { qubit: m(qubit) },
            Gate::Cz { a, b } => Gate::Cz { a: m(a), b: m(b) },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: m(control),
                target: m(target),
            },
            Gate::Cry { control, target, angle } => Gate::Cry {
                control: m(control),
                target: m(target),
                angle,
            },
        }
    }

    /// 2x2 matrix for uncontrolled single-qubit gates.
    pub(crate) fn one_qubit_matrix(&self) -> Option<(usize, Mat2)> {
        let m = match *self {
            Gate::Ry { qubit, angle } => {
                let (s, co) = (angle / 2.0).sin_cos();
                (qubit, [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            Gate::Rz { qubit, angle } => {
                let half = angle / 2.0;
                (
                    qubit,
                    [
                        [Complex64::from_polar(1.0, -half), c(0.0, 0.0)],
                        [c(0.0, 0.0), Complex64::from_polar(1.0, half)],
                    ],
                )
            }
            Gate::Rx { qubit, angle } => {
                let (s, co) = (angle / 2.0).sin_cos();
                (qubit, [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            Gate::Phase { qubit, angle } => (
                qubit,
                [
                    [c(1.0, 0.0), c(0.0, 0.0)],
                    [c(0.0, 0.0), Complex64::from_polar(1.0, angle)],
                ],
            ),
            Gate::H { qubit } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (qubit, [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
            }
            Gate::X { qubit } => (qubit, [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]),
            Gate::Z { qubit } => (qubit, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]),
            _ => return None,
        };
        Some(m)
    }

    /// `(control, target, matrix)` for controlled gates. CZ is reported with
    /// `a` as control and `b` as target; the action is symmetric.
    pub(crate) fn controlled_matrix(&self) -> Option<(usize, usize, Mat2)> {
        match *self {
            Gate::Cz { a, b } => Some((a, b, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])),
            Gate::Cnot { control, target } => Some((
                control,
                target,
                [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            )),
            Gate::Cry { control, target, angle } => {
                let (s, co) = (angle / 2.0).sin_cos();
                Some((control, target, [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Ry { qubit, angle } => write!(f, "ry({angle:.6}) q{qubit}"),
            Gate::Rz { qubit, angle } => write!(f, "rz({angle:.6}) q{qubit}"),
            Gate::Rx { qubit, angle } => write!(f, "rx({angle:.6}) q{qubit}"),
            Gate::Phase { qubit, angle } => write!(f, "p({angle:.6}) q{qubit}"),
            Gate::H { qubit } => write!(f, "h q{qubit}"),
            Gate::X { qubit } => write!(f, "x q{qubit}"),
            Gate::Z { qubit } => write!(f, "z q{qubit}"),
            Gate::Cz { a, b } => write!(f, "cz q{a} q{b}"),
            Gate::Cnot { control, target } => write!(f, "cnot q{control} q{target}"),
            Gate::Cry { control, target, angle } => {
                write!(f, "cry({angle:.6}) q{control} q{target}")
            }
        }
    }
}

/// Ordered gate list over a fixed-width register. Construction is
/// append-only; every push validates qubit indices and angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        assert!(
            num_qubits >= 1 && num_qubits <= MAX_STATE_QUBITS,
            "circuit width out of range"
        );
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), QsimError> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends all gates of `other`; `other` must not be wider.
    pub fn extend(&mut self, other: &Circuit) -> Result<(), QsimError> {
        if other.num_qubits > self.num_qubits {
            return Err(QsimError::WidthMismatch {
                circuit: other.num_qubits,
                register: self.num_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// The inverse circuit: gates reversed with each gate inverted.
    pub fn inverted(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// A copy of this circuit living on a `new_width` register, with qubit
    /// `q` moved to `map[q]`. The map must be injective and in range.
    pub fn remapped(&self, map: &[usize], new_width: usize) -> Result<Circuit, QsimError> {
        if map.len() != self.num_qubits {
            return Err(QsimError::InvalidRemap);
        }
        let mut seen = vec![false; new_width];
        for &q in map {
            if q >= new_width || seen[q] {
                return Err(QsimError::InvalidRemap);
            }
            seen[q] = true;
        }
        let mut out = Circuit::new(new_width);
        for g in &self.gates {
            out.push(g.remapped(map))?;
        }
        Ok(out)
    }

    /// Runs the circuit on a copy of `initial`.
    pub fn run(&self, initial: &super::StateVector) -> Result<super::StateVector, QsimError> {
        let mut state = initial.clone();
        self.run_in_place(&mut state)?;
        Ok(state)
    }

    pub fn run_in_place(&self, state: &mut super::StateVector) -> Result<(), QsimError> {
        if self.num_qubits > state.num_qubits() {
            return Err(QsimError::WidthMismatch {
                circuit: self.num_qubits,
                register: state.num_qubits(),
            });
        }
        for g in &self.gates {
            state.apply(g);
        }
        Ok(())
    }
}
