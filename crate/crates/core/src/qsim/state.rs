use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Complex64, Gate, QsimError, MAX_STATE_QUBITS};

/// Dense statevector over `2^num_qubits` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state `|0..0>`.
    pub fn zero_state(num_qubits: usize) -> Self {
        assert!(
            num_qubits >= 1 && num_qubits <= MAX_STATE_QUBITS,
            "statevector width out of range"
        );
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    /// Builds a state from explicit amplitudes (must be a power-of-two length
    /// within the width cap and normalized to 1e-10).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > (1 << MAX_STATE_QUBITS) {
            return Err(QsimError::InvalidAmplitudes);
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QsimError::InvalidAmplitudes);
        }
        Ok(StateVector {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Builds a normalized state from real amplitudes.
    pub fn from_real(values: &[f64]) -> Result<Self, QsimError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QsimError::InvalidAmplitudes);
        }
        Self::from_amplitudes(
            values
                .iter()
                .map(|&v| Complex64::new(v / norm, 0.0))
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Bit of qubit `q` in basis index `idx` (q0 = leftmost tensor factor).
    #[inline]
    pub fn qubit_bit(num_qubits: usize, idx: usize, q: usize) -> usize {
        (idx >> (num_qubits - 1 - q)) & 1
    }

    /// Applies a gate in place. The gate must have been validated for this
    /// width (Circuit construction guarantees it).
    pub fn apply(&mut self, gate: &Gate) {
        debug_assert!(gate.validate(self.num_qubits).is_ok());
        if let Some((q, m)) = gate.one_qubit_matrix() {
            self.apply_one_qubit(q, &m);
        } else if let Some((ctrl, tgt, m)) = gate.controlled_matrix() {
            self.apply_controlled(ctrl, tgt, &m);
        }
    }

    fn apply_one_qubit(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let pos = self.num_qubits - 1 - qubit;
        let stride = 1usize << pos;
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + stride {
                let i0 = low;
                let i1 = low | stride;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    fn apply_controlled(&mut self, control: usize, target: usize, m: &[[Complex64; 2]; 2]) {
        let cpos = self.num_qubits - 1 - control;
        let tpos = self.num_qubits - 1 - target;
        let cmask = 1usize << cpos;
        let tmask = 1usize << tpos;
        for i0 in 0..self.amps.len() {
            if i0 & cmask != 0 && i0 & tmask == 0 {
                let i1 = i0 | tmask;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// `sum_z sign(z) |amp_z|^2` for a diagonal sign assignment.
    pub fn expectation_diagonal(&self, sign: impl Fn(usize) -> i8) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(z, a)| f64::from(sign(z)) * a.norm_sqr())
            .sum()
    }
}

/// Counts of computational-basis outcomes from repeated measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    shots: u64,
}

impl Histogram {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn frequency(&self, idx: usize) -> f64 {
        self.counts[idx] as f64 / self.shots as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }

    /// Sample-mean estimator of `sum_z sign(z) P(z)`.
    pub fn expectation_diagonal(&self, sign: impl Fn(usize) -> i8) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(z, &n)| f64::from(sign(z)) * n as f64)
            .sum::<f64>()
            / self.shots as f64
    }
}

/// Draws `shots` i.i.d. computational-basis samples by inverse-CDF over the
/// cumulative outcome probabilities, using a ChaCha stream seeded with `seed`.
/// Deterministic for a fixed seed.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<Histogram, QsimError> {
    if shots == 0 {
        return Err(QsimError::ZeroShots);
    }
    let probs = state.probabilities();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    // Guard the tail against rounding so every draw lands in range.
    if let Some(last) = cdf.last_mut() {
        *last = f64::max(*last, 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    let top = counts.len() - 1;
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c <= u);
        counts[idx.min(top)] += 1;
    }
    Ok(Histogram { counts, shots })
}

#[cfg(test)]
mod tests {
    use super::super::Circuit;
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero_state(1);
        s.apply(&Gate::H { qubit: 0 });
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps()[0].re - h).abs() < EPS);
        assert!((s.amps()[1].re - h).abs() < EPS);
        assert!(s.amps()[0].im.abs() < EPS && s.amps()[1].im.abs() < EPS);
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let mut s = StateVector::zero_state(1);
        s.apply(&Gate::Ry { qubit: 0, angle: std::f64::consts::PI });
        assert!(s.amps()[0].norm() < EPS);
        assert!((s.amps()[1].re - 1.0).abs() < EPS);
    }

    #[test]
    fn cz_negates_one_one() {
        let amps = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        s.apply(&Gate::Cz { a: 0, b: 1 });
        assert!((s.amps()[3].re + 1.0).abs() < EPS);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3);
        let init = StateVector::zero_state(3);
        let out = c.run(&init).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn bell_preparation() {
        let mut c = Circuit::new(2);
        c.push(Gate::H { qubit: 0 }).unwrap();
        c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let out = c.run(&StateVector::zero_state(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amps()[0].re - h).abs() < EPS);
        assert!(out.amps()[1].norm() < EPS);
        assert!(out.amps()[2].norm() < EPS);
        assert!((out.amps()[3].re - h).abs() < EPS);
    }

    #[test]
    fn gate_then_inverse_is_identity() {
        // Unitarity check over every gate kind on a random state.
        let mut rng_state = 0x12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 3;
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(next() - 0.5, next() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let base = StateVector::from_amplitudes(amps).unwrap();
        let gates = [
            Gate::Ry { qubit: 0, angle: 0.7 },
            Gate::Rz { qubit: 1, angle: -1.3 },
            Gate::Rx { qubit: 2, angle: 2.1 },
            Gate::Phase { qubit: 1, angle: 0.9 },
            Gate::H { qubit: 2 },
            Gate::X { qubit: 0 },
            Gate::Z { qubit: 1 },
            Gate::Cz { a: 0, b: 2 },
            Gate::Cnot { control: 1, target: 0 },
            Gate::Cry { control: 2, target: 1, angle: 1.7 },
        ];
        for g in gates {
            let mut s = base.clone();
            s.apply(&g);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10, "norm broken by {g}");
            s.apply(&g.inverse());
            for (a, b) in s.amps().iter().zip(base.amps()) {
                assert!((a - b).norm() < 1e-10, "inverse failed for {g}");
            }
        }
    }

    #[test]
    fn sample_deterministic_state() {
        let s = StateVector::zero_state(1);
        let h = sample(&s, 100, 7).unwrap();
        assert_eq!(h.counts(), &[100, 0]);
    }

    #[test]
    fn sample_zero_shots_is_error() {
        let s = StateVector::zero_state(1);
        assert_eq!(sample(&s, 0, 7), Err(QsimError::ZeroShots));
    }

    #[test]
    fn sample_plus_state_within_five_sigma() {
        let mut s = StateVector::zero_state(1);
        s.apply(&Gate::H { qubit: 0 });
        let shots = 1u64 << 17;
        let h = sample(&s, shots, 42).unwrap();
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((h.frequency(1) - 0.5).abs() < 5.0 * sigma);
    }

    #[test]
    fn sample_is_reproducible() {
        let mut s = StateVector::zero_state(2);
        s.apply(&Gate::H { qubit: 0 });
        s.apply(&Gate::Ry { qubit: 1, angle: 0.8 });
        let a = sample(&s, 5000, 99).unwrap();
        let b = sample(&s, 5000, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn expectation_diagonal_examples() {
        // Completeness: all-plus signs on a normalized state.
        let mut s = StateVector::zero_state(2);
        s.apply(&Gate::Ry { qubit: 0, angle: 1.1 });
        s.apply(&Gate::Ry { qubit: 1, angle: 0.3 });
        assert!((s.expectation_diagonal(|_| 1) - 1.0).abs() < 1e-10);

        // Z expectation of |+>.
        let mut plus = StateVector::zero_state(1);
        plus.apply(&Gate::H { qubit: 0 });
        let z = plus.expectation_diagonal(|z| if z == 0 { 1 } else { -1 });
        assert!(z.abs() < 1e-10);

        // Uniform 2-qubit state, +1 iff bitstring ends in 0.
        let mut u = StateVector::zero_state(2);
        u.apply(&Gate::H { qubit: 0 });
        u.apply(&Gate::H { qubit: 1 });
        let v = u.expectation_diagonal(|z| if z & 1 == 0 { 1 } else { 0 });
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn sampling_error_shrinks_like_inverse_sqrt_shots() {
        // Mean |freq - prob| over seeds, regressed on log2(shots).
        let mut s = StateVector::zero_state(3);
        s.apply(&Gate::H { qubit: 0 });
        s.apply(&Gate::Ry { qubit: 1, angle: 1.0 });
        s.apply(&Gate::Cnot { control: 0, target: 2 });
        let probs = s.probabilities();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for e in [10u32, 12, 14, 17] {
            let shots = 1u64 << e;
            let mut err = 0.0;
            let reps = 6;
            for seed in 0..reps {
                let h = sample(&s, shots, 1000 + seed).unwrap();
                err += h
                    .frequencies()
                    .iter()
                    .zip(&probs)
                    .map(|(f, p)| (f - p).abs())
                    .sum::<f64>();
            }
            xs.push(f64::from(e));
            ys.push((err / reps as f64).ln());
        }
        // Least-squares slope in ln(err) vs log2(shots); ideal is -ln(2)/2 ~ -0.347.
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            slope < -0.2 && slope > -0.5,
            "unexpected convergence rate: slope {slope}"
        );
    }
}
