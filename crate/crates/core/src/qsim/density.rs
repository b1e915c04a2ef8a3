use super::{Circuit, Complex64, Gate, QsimError, StateVector, MAX_DENSITY_QUBITS};

/// Per-gate depolarizing rates: `p1` for single-qubit gates, `p2` for
/// two-qubit gates (applied jointly to both acted qubits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64) -> Result<Self, QsimError> {
        if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
            return Err(QsimError::InvalidNoiseRate);
        }
        Ok(NoiseModel { p1, p2 })
    }

    pub fn noiseless() -> Self {
        NoiseModel { p1: 0.0, p2: 0.0 }
    }
}

/// Dense density matrix (row-major `2^q x 2^q`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    mat: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(num_qubits: usize) -> Result<Self, QsimError> {
        if num_qubits < 1 || num_qubits > MAX_DENSITY_QUBITS {
            return Err(QsimError::WidthOutOfRange {
                width: num_qubits,
                max: MAX_DENSITY_QUBITS,
            });
        }
        let dim = 1 << num_qubits;
        let mut mat = vec![Complex64::new(0.0, 0.0); dim * dim];
        mat[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { num_qubits, dim, mat })
    }

    /// `|psi><psi|` for a pure state.
    pub fn from_pure(state: &StateVector) -> Result<Self, QsimError> {
        if state.num_qubits() > MAX_DENSITY_QUBITS {
            return Err(QsimError::WidthOutOfRange {
                width: state.num_qubits(),
                max: MAX_DENSITY_QUBITS,
            });
        }
        let dim = state.len();
        let amps = state.amps();
        let mut mat = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                mat[i * dim + j] = amps[i] * amps[j].conj();
            }
        }
        Ok(DensityMatrix {
            num_qubits: state.num_qubits(),
            dim,
            mat,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[i * self.dim + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.mat[i * self.dim + i]).sum()
    }

    /// Real parts of the diagonal: outcome probabilities in the
    /// computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.mat[i * self.dim + i].re).collect()
    }

    pub fn expectation_diagonal(&self, sign: impl Fn(usize) -> i8) -> f64 {
        (0..self.dim)
            .map(|z| f64::from(sign(z)) * self.mat[z * self.dim + z].re)
            .sum()
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.mat[i * self.dim + j] - self.mat[j * self.dim + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `rho <- U rho U^dagger` for a unitary gate. Diagonal gates take a
    /// single-pass phase path.
    pub fn apply_gate(&mut self, gate: &Gate) {
        debug_assert!(gate.validate(self.num_qubits).is_ok());
        match *gate {
            Gate::Z { qubit } => {
                let mask = 1usize << self.bit_pos(qubit);
                self.apply_sign_diag(|i| i & mask != 0);
            }
            Gate::Cz { a, b } => {
                let mask = (1usize << self.bit_pos(a)) | (1usize << self.bit_pos(b));
                self.apply_sign_diag(|i| i & mask == mask);
            }
            Gate::Rz { qubit, angle } => {
                let mask = 1usize << self.bit_pos(qubit);
                let lo = Complex64::from_polar(1.0, -angle / 2.0);
                let hi = Complex64::from_polar(1.0, angle / 2.0);
                self.apply_phase_diag(|i| if i & mask == 0 { lo } else { hi });
            }
            Gate::Phase { qubit, angle } => {
                let mask = 1usize << self.bit_pos(qubit);
                let one = Complex64::new(1.0, 0.0);
                let ph = Complex64::from_polar(1.0, angle);
                self.apply_phase_diag(|i| if i & mask == 0 { one } else { ph });
            }
            _ => {
                if let Some((q, m)) = gate.one_qubit_matrix() {
                    self.transform(None, q, &m);
                } else if let Some((ctrl, tgt, m)) = gate.controlled_matrix() {
                    self.transform(Some(ctrl), tgt, &m);
                }
            }
        }
    }

    /// `rho[i,j] <- s_i s_j rho[i,j]` for signs in {+1, -1}.
    fn apply_sign_diag(&mut self, flagged: impl Fn(usize) -> bool) {
        let dim = self.dim;
        for i in 0..dim {
            let fi = flagged(i);
            for j in 0..dim {
                if fi != flagged(j) {
                    self.mat[i * dim + j] = -self.mat[i * dim + j];
                }
            }
        }
    }

    /// `rho[i,j] <- d_i conj(d_j) rho[i,j]` for a diagonal unitary.
    fn apply_phase_diag(&mut self, d: impl Fn(usize) -> Complex64) {
        let dim = self.dim;
        let phases: Vec<Complex64> = (0..dim).map(d).collect();
        for i in 0..dim {
            let di = phases[i];
            for j in 0..dim {
                self.mat[i * dim + j] *= di * phases[j].conj();
            }
        }
    }

    /// Applies the gate unitary, then the depolarizing channel on the acted
    /// qubit(s): `rho <- (1-p) rho + p * (maximally mixed on acted qubits)`,
    /// with `p = p1` for one-qubit gates and `p = p2` (joint two-qubit
    /// channel) for two-qubit gates.
    pub fn apply_noisy_gate(&mut self, gate: &Gate, noise: &NoiseModel) {
        self.apply_gate(gate);
        let (a, b) = gate.qubits();
        match b {
            None => self.depolarize(&[a], noise.p1),
            Some(b) => self.depolarize(&[a, b], noise.p2),
        }
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<(), QsimError> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(QsimError::WidthMismatch {
                circuit: circuit.num_qubits(),
                register: self.num_qubits,
            });
        }
        for g in circuit.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    pub fn run_noisy(&mut self, circuit: &Circuit, noise: &NoiseModel) -> Result<(), QsimError> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(QsimError::WidthMismatch {
                circuit: circuit.num_qubits(),
                register: self.num_qubits,
            });
        }
        for g in circuit.gates() {
            self.apply_noisy_gate(g, noise);
        }
        Ok(())
    }

    fn bit_pos(&self, qubit: usize) -> usize {
        self.num_qubits - 1 - qubit
    }

    /// Left-multiplies by the (optionally controlled) 2x2 unitary on the row
    /// index, then right-multiplies by its adjoint on the column index.
    fn transform(&mut self, control: Option<usize>, target: usize, m: &[[Complex64; 2]; 2]) {
        let tmask = 1usize << self.bit_pos(target);
        let cmask = control.map(|c| 1usize << self.bit_pos(c));
        let active = |idx: usize| cmask.map_or(true, |cm| idx & cm != 0);
        let dim = self.dim;
        // Rows.
        for r0 in 0..dim {
            if r0 & tmask != 0 || !active(r0) {
                continue;
            }
            let r1 = r0 | tmask;
            for col in 0..dim {
                let a0 = self.mat[r0 * dim + col];
                let a1 = self.mat[r1 * dim + col];
                self.mat[r0 * dim + col] = m[0][0] * a0 + m[0][1] * a1;
                self.mat[r1 * dim + col] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        // Columns (adjoint from the right).
        for c0 in 0..dim {
            if c0 & tmask != 0 || !active(c0) {
                continue;
            }
            let c1 = c0 | tmask;
            for row in 0..dim {
                let a0 = self.mat[row * dim + c0];
                let a1 = self.mat[row * dim + c1];
                self.mat[row * dim + c0] = a0 * m[0][0].conj() + a1 * m[0][1].conj();
                self.mat[row * dim + c1] = a0 * m[1][0].conj() + a1 * m[1][1].conj();
            }
        }
    }

    /// `rho <- (1-p) rho + p * (I/2^k (x) Tr_qubits rho)` where the maximally
    /// mixed factor replaces the state on `qubits`. In place: entries whose
    /// row/column agree outside the acted qubits mix within their
    /// `2^k x 2^k` block; everything else just scales by `1-p`.
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        if p == 1.0 {
            self.depolarize_full(qubits);
            return;
        }
        let dim = self.dim;
        let k = qubits.len();
        let sub = 1usize << k;
        let positions: Vec<usize> = qubits.iter().map(|&q| self.bit_pos(q)).collect();
        let mut qmask = 0usize;
        for &pos in &positions {
            qmask |= 1 << pos;
        }
        let spread = |t: usize| -> usize {
            let mut out = 0;
            for (i, &pos) in positions.iter().enumerate() {
                out |= ((t >> (k - 1 - i)) & 1) << pos;
            }
            out
        };
        let offsets: Vec<usize> = (0..sub).map(spread).collect();
        let keep = 1.0 - p;
        let weight = p / sub as f64;
        // Everything scales by 1-p; entries whose row/column agree outside
        // the acted qubits additionally gain p/2^k of their block trace.
        for v in self.mat.iter_mut() {
            *v *= keep;
        }
        for r_rest in 0..dim {
            if r_rest & qmask != 0 {
                continue;
            }
            for c_rest in 0..dim {
                if c_rest & qmask != 0 {
                    continue;
                }
                let mut sigma = Complex64::new(0.0, 0.0);
                for &s in &offsets {
                    sigma += self.mat[(r_rest | s) * dim + (c_rest | s)];
                }
                // The diagonal was already scaled; undo to get the trace.
                sigma = sigma * (weight / keep);
                for &s in &offsets {
                    self.mat[(r_rest | s) * dim + (c_rest | s)] += sigma;
                }
            }
        }
    }

    /// p = 1 special case: replace the acted qubits by the maximally mixed
    /// state outright.
    fn depolarize_full(&mut self, qubits: &[usize]) {
        let dim = self.dim;
        let k = qubits.len();
        let sub = 1usize << k;
        let positions: Vec<usize> = qubits.iter().map(|&q| self.bit_pos(q)).collect();
        let mut qmask = 0usize;
        for &pos in &positions {
            qmask |= 1 << pos;
        }
        let spread = |t: usize| -> usize {
            let mut out = 0;
            for (i, &pos) in positions.iter().enumerate() {
                out |= ((t >> (k - 1 - i)) & 1) << pos;
            }
            out
        };
        let offsets: Vec<usize> = (0..sub).map(spread).collect();
        let weight = 1.0 / sub as f64;
        let mut mixed = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r_rest in 0..dim {
            if r_rest & qmask != 0 {
                continue;
            }
            for c_rest in 0..dim {
                if c_rest & qmask != 0 {
                    continue;
                }
                let mut sigma = Complex64::new(0.0, 0.0);
                for &s in &offsets {
                    sigma += self.mat[(r_rest | s) * dim + (c_rest | s)];
                }
                let v = sigma * weight;
                for &s in &offsets {
                    mixed[(r_rest | s) * dim + (c_rest | s)] = v;
                }
            }
        }
        self.mat = mixed;
    }
}
