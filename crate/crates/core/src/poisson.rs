//! Classical construction of the discretized Poisson system: per-axis
//! finite-difference matrices, Kronecker-sum assembly, right-hand sides,
//! dense exact solves, and the fidelity / norm-error metrics used to score
//! variational solutions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::qsim::StateVector;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("dimension must be 1..=3, got {0}")]
    BadDimension(usize),
    #[error("qubits per axis must be 1..=5, got {0}")]
    BadAxisQubits(usize),
    #[error("boundary condition list length {got} does not match dimension {d}")]
    BadBoundaryCount { d: usize, got: usize },
    #[error("total register width {0} exceeds 13 qubits")]
    TooWide(usize),
    #[error("device right-hand side requires n >= 3 (electrode prefix pattern), got n = {0}")]
    DeviceTooNarrow(usize),
    #[error("explicit right-hand side must be nonzero with power-of-two length")]
    BadExplicitVector,
    #[error("right-hand side length {got} does not match system size {expect}")]
    RhsSizeMismatch { expect: usize, got: usize },
    #[error("system matrix is singular (no Dirichlet axis); exact solve rejected")]
    SingularSystem,
    #[error("exact solution is zero; metrics undefined")]
    ZeroSolution,
    #[error("state width {got} does not match system width {expect}")]
    StateWidthMismatch { expect: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn letter(&self) -> char {
        match self {
            BoundaryCondition::Dirichlet => 'D',
            BoundaryCondition::Neumann => 'N',
            BoundaryCondition::Periodic => 'P',
        }
    }
}

/// Problem geometry: `d` axes, each discretized with `2^n` grid points and
/// one boundary condition per axis. Axis 1 is the leftmost Kronecker factor
/// and owns qubits `q0..q_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSpec {
    pub d: usize,
    pub n: usize,
    pub bc: Vec<BoundaryCondition>,
}

impl PoissonSpec {
    pub fn new(d: usize, n: usize, bc: Vec<BoundaryCondition>) -> Result<Self, PoissonError> {
        if !(1..=3).contains(&d) {
            return Err(PoissonError::BadDimension(d));
        }
        if !(1..=5).contains(&n) {
            return Err(PoissonError::BadAxisQubits(n));
        }
        if bc.len() != d {
            return Err(PoissonError::BadBoundaryCount { d, got: bc.len() });
        }
        if d * n > 13 {
            return Err(PoissonError::TooWide(d * n));
        }
        Ok(PoissonSpec { d, n, bc })
    }

    pub fn num_qubits(&self) -> usize {
        self.d * self.n
    }

    pub fn points_per_axis(&self) -> usize {
        1 << self.n
    }

    pub fn system_size(&self) -> usize {
        1 << (self.d * self.n)
    }

    /// Positive definite iff at least one axis is Dirichlet; all-Neumann or
    /// all-Periodic systems are singular.
    pub fn is_positive_definite(&self) -> bool {
        self.bc.contains(&BoundaryCondition::Dirichlet)
    }

    pub fn bc_string(&self) -> String {
        self.bc.iter().map(BoundaryCondition::letter).collect()
    }

    /// Qubit indices of axis `axis` (0-based), in register order.
    pub fn axis_qubits(&self, axis: usize) -> std::ops::Range<usize> {
        axis * self.n..(axis + 1) * self.n
    }
}

/// One-dimensional finite-difference Poisson matrix for `2^n` grid points.
/// Dirichlet: tridiagonal `(-1, 2, -1)`. Neumann: corner diagonal entries
/// reduced to 1. Periodic: Dirichlet pattern plus `-1` wrap couplings.
pub fn build_matrix_1d(n: usize, bc: BoundaryCondition) -> DMatrix<f64> {
    let m = 1usize << n;
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = 2.0;
        if i + 1 < m {
            a[(i, i + 1)] = -1.0;
            a[(i + 1, i)] = -1.0;
        }
    }
    match bc {
        BoundaryCondition::Dirichlet => {}
        BoundaryCondition::Neumann => {
            a[(0, 0)] = 1.0;
            a[(m - 1, m - 1)] = 1.0;
        }
        BoundaryCondition::Periodic => {
            a[(0, m - 1)] -= 1.0;
            a[(m - 1, 0)] -= 1.0;
        }
    }
    a
}

/// Kronecker-sum assembly of the d-dimensional system matrix, axis 1 as the
/// leftmost factor.
pub fn build_matrix(spec: &PoissonSpec) -> DMatrix<f64> {
    let m = spec.points_per_axis();
    let size = spec.system_size();
    let eye = DMatrix::<f64>::identity(m, m);
    let mut total = DMatrix::<f64>::zeros(size, size);
    for (axis, &bc) in spec.bc.iter().enumerate() {
        let a1 = build_matrix_1d(spec.n, bc);
        let mut term = DMatrix::<f64>::identity(1, 1);
        for j in 0..spec.d {
            term = term.kronecker(if j == axis { &a1 } else { &eye });
        }
        total += term;
    }
    total
}

/// Right-hand-side selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RhsSpec {
    /// `b = gamma^(x)d` with `gamma = (1,..,1,-1,..,-1)/sqrt(m)` per axis.
    StepFunction { d: usize, n: usize },
    /// Four-electrode silicon device: `b = vg*b0 + alpha1*b1` on a 2-D grid.
    Device { n: usize, vg: f64 },
    /// Explicit vector (no preparation circuit; exact-overlap fallback).
    Explicit { vector: Vec<f64> },
}

/// Physical constants of the silicon device problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceConstants {
    /// Permittivity of bulk silicon [F/m].
    pub eps_si: f64,
    /// Grid spacing [m].
    pub delta_x: f64,
    /// Proton charge [C].
    pub q_charge: f64,
    /// Space charge density [m^-3].
    pub n_space: f64,
}

impl Default for DeviceConstants {
    fn default() -> Self {
        DeviceConstants {
            eps_si: 1.044e-10,
            delta_x: 1e-9,
            q_charge: 1.602e-19,
            n_space: 1.180e22,
        }
    }
}

impl DeviceConstants {
    /// Space-charge coefficient `alpha1 = dx^2 * Q * N_s / eps_si` [V].
    pub fn alpha1(&self) -> f64 {
        self.delta_x * self.delta_x * self.q_charge * self.n_space / self.eps_si
    }
}

/// Scalars of the device RHS decomposition `b = alpha0*b0 + alpha1*b1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceScalars {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Mixture angle `eta = atan(sqrt(2)^(n+2) * alpha1 / alpha0)`.
    pub eta: f64,
    pub norm_b0: f64,
    pub norm_b1: f64,
}

/// Assembled right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub vector: DVector<f64>,
    pub device: Option<DeviceScalars>,
}

impl Rhs {
    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    pub fn normalized(&self) -> DVector<f64> {
        &self.vector / self.norm()
    }
}

/// Grid indices (axis-1 values) covered by the biased middle top electrode:
/// the contiguous band `[3*2^(n-3), 5*2^(n-3))`.
pub fn device_electrode_range(n: usize) -> std::ops::Range<usize> {
    3 * (1 << (n - 3))..5 * (1 << (n - 3))
}

pub fn build_rhs(rhs: &RhsSpec) -> Result<Rhs, PoissonError> {
    match rhs {
        RhsSpec::StepFunction { d, n } => {
            let m = 1usize << n;
            let gamma: Vec<f64> = (0..m)
                .map(|i| if i < m / 2 { 1.0 } else { -1.0 } / (m as f64).sqrt())
                .collect();
            let mut b = vec![1.0];
            for _ in 0..*d {
                let mut next = Vec::with_capacity(b.len() * m);
                for &x in &b {
                    for &g in &gamma {
                        next.push(x * g);
                    }
                }
                b = next;
            }
            Ok(Rhs {
                vector: DVector::from_vec(b),
                device: None,
            })
        }
        RhsSpec::Device { n, vg } => {
            if *n < 3 {
                return Err(PoissonError::DeviceTooNarrow(*n));
            }
            let n = *n;
            let m = 1usize << n;
            let size = m * m;
            let constants = DeviceConstants::default();
            let alpha0 = *vg;
            let alpha1 = constants.alpha1();
            // b0: indicator of the middle electrode band at the first
            // interior row (axis-2 index 0); b1: all-ones space charge.
            let mut b = DVector::from_element(size, alpha1);
            for i1 in device_electrode_range(n) {
                b[i1 * m] += alpha0;
            }
            let norm_b0 = 2f64.powi(n as i32 - 2).sqrt();
            let norm_b1 = m as f64;
            let eta = (2f64.powf((n as f64 + 2.0) / 2.0) * alpha1 / alpha0).atan();
            let norm_b = b.norm();
            Ok(Rhs {
                vector: b,
                device: Some(DeviceScalars {
                    alpha0,
                    alpha1,
                    beta0: alpha0 * norm_b0 / norm_b,
                    beta1: alpha1 * norm_b1 / norm_b,
                    eta,
                    norm_b0,
                    norm_b1,
                }),
            })
        }
        RhsSpec::Explicit { vector } => {
            let len = vector.len();
            if len < 2 || !len.is_power_of_two() || vector.iter().all(|&v| v == 0.0) {
                return Err(PoissonError::BadExplicitVector);
            }
            Ok(Rhs {
                vector: DVector::from_vec(vector.clone()),
                device: None,
            })
        }
    }
}

/// Exact solution of `A v0 = b`.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub v0: DVector<f64>,
    pub norm: f64,
}

/// Dense symmetric-positive-definite solve. Rejects singular systems.
pub fn solve_exact(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<ExactSolution, PoissonError> {
    if a.nrows() != b.len() {
        return Err(PoissonError::RhsSizeMismatch {
            expect: a.nrows(),
            got: b.len(),
        });
    }
    let chol = a.clone().cholesky().ok_or(PoissonError::SingularSystem)?;
    let v0 = chol.solve(b);
    // Rounding can leave a singular matrix with a tiny positive pivot;
    // the residual contract catches that.
    if (a * &v0 - b).norm() > 1e-9 * b.norm() {
        return Err(PoissonError::SingularSystem);
    }
    let norm = v0.norm();
    Ok(ExactSolution { v0, norm })
}

/// Convenience: assemble the matrix for `spec` and solve against `rhs`.
/// Specs without a Dirichlet axis are singular by construction and rejected
/// outright.
pub fn solve_spec(spec: &PoissonSpec, rhs: &Rhs) -> Result<ExactSolution, PoissonError> {
    if rhs.vector.len() != spec.system_size() {
        return Err(PoissonError::RhsSizeMismatch {
            expect: spec.system_size(),
            got: rhs.vector.len(),
        });
    }
    if !spec.is_positive_definite() {
        return Err(PoissonError::SingularSystem);
    }
    solve_exact(&build_matrix(spec), &rhs.vector)
}

/// Solution quality scores: `fidelity = |<psi|u>|` against the normalized
/// exact solution, and the relative error of the recovered norm
/// `| (||v0|| - |r|*||b||) / ||v0|| |`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub fidelity: f64,
    pub norm_rel_error: f64,
}

pub fn metrics(
    psi: &StateVector,
    r_opt: f64,
    spec: &PoissonSpec,
    rhs: &Rhs,
) -> Result<SolutionMetrics, PoissonError> {
    if psi.num_qubits() != spec.num_qubits() {
        return Err(PoissonError::StateWidthMismatch {
            expect: spec.num_qubits(),
            got: psi.num_qubits(),
        });
    }
    let exact = solve_spec(spec, rhs)?;
    metrics_against(psi, r_opt, &exact, rhs.norm())
}

/// Same as [`metrics`] with a precomputed exact solution.
pub fn metrics_against(
    psi: &StateVector,
    r_opt: f64,
    exact: &ExactSolution,
    b_norm: f64,
) -> Result<SolutionMetrics, PoissonError> {
    if exact.norm == 0.0 {
        return Err(PoissonError::ZeroSolution);
    }
    let overlap: f64 = psi
        .amps()
        .iter()
        .zip(exact.v0.iter())
        .map(|(a, &u)| (a.conj() * (u / exact.norm)).re)
        .sum();
    let overlap_im: f64 = psi
        .amps()
        .iter()
        .zip(exact.v0.iter())
        .map(|(a, &u)| (a.conj() * (u / exact.norm)).im)
        .sum();
    let fidelity = (overlap * overlap + overlap_im * overlap_im).sqrt();
    let norm_rel_error = ((exact.norm - r_opt.abs() * b_norm) / exact.norm).abs();
    Ok(SolutionMetrics {
        fidelity,
        norm_rel_error,
    })
}

/// Renders a solution grid as CSV: a comment header carrying the problem
/// descriptor, then `x1,..,xd,value` rows in basis-index order (the last
/// axis varies fastest).
pub fn grid_csv(spec: &PoissonSpec, values: &[f64], vg: Option<f64>) -> String {
    let m = spec.points_per_axis();
    let mut out = String::new();
    match vg {
        Some(v) => out.push_str(&format!(
            "# d={},n={},bc={},vg={}\n",
            spec.d,
            spec.n,
            spec.bc_string(),
            v
        )),
        None => out.push_str(&format!("# d={},n={},bc={}\n", spec.d, spec.n, spec.bc_string())),
    }
    for axis in 1..=spec.d {
        out.push_str(&format!("x{axis},"));
    }
    out.push_str("value\n");
    for (idx, v) in values.iter().enumerate() {
        let mut coords = Vec::with_capacity(spec.d);
        let mut rest = idx;
        for j in (0..spec.d).rev() {
            let base = m.pow(j as u32);
            coords.push(rest / base);
            rest %= base;
        }
        for c in coords {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Complex64;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dirichlet_matrix_n1() {
        let a = build_matrix_1d(1, BoundaryCondition::Dirichlet);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    }

    #[test]
    fn neumann_matrix_n1() {
        let a = build_matrix_1d(1, BoundaryCondition::Neumann);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn periodic_matrix_n2_has_wrap_corners() {
        let a = build_matrix_1d(2, BoundaryCondition::Periodic);
        let mut expect = build_matrix_1d(2, BoundaryCondition::Dirichlet);
        expect[(0, 3)] = -1.0;
        expect[(3, 0)] = -1.0;
        assert_eq!(a, expect);
    }

    #[test]
    fn kronecker_sum_2d_dirichlet() {
        // Explicit 4x4 oracle for d=2, n=1, [D,D].
        let spec = PoissonSpec::new(
            2,
            1,
            vec![BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet],
        )
        .unwrap();
        let a = build_matrix(&spec);
        let a1 = build_matrix_1d(1, BoundaryCondition::Dirichlet);
        let eye = DMatrix::<f64>::identity(2, 2);
        let expect = a1.kronecker(&eye) + eye.kronecker(&a1);
        assert_eq!(a, expect);
        assert_eq!(a[(0, 0)], 4.0);
    }

    #[test]
    fn kronecker_sum_identity_against_direct_terms() {
        for bc in [
            [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
            [BoundaryCondition::Periodic, BoundaryCondition::Dirichlet],
            [BoundaryCondition::Dirichlet, BoundaryCondition::Periodic],
        ] {
            let spec = PoissonSpec::new(2, 2, bc.to_vec()).unwrap();
            let a = build_matrix(&spec);
            let eye = DMatrix::<f64>::identity(4, 4);
            let expect = build_matrix_1d(2, bc[0]).kronecker(&eye)
                + eye.kronecker(&build_matrix_1d(2, bc[1]));
            assert_eq!(a, expect);
            // Symmetry.
            assert_eq!(a, a.transpose());
        }
    }

    #[test]
    fn one_dimensional_build_matches_1d() {
        let spec = PoissonSpec::new(1, 3, vec![BoundaryCondition::Neumann]).unwrap();
        assert_eq!(build_matrix(&spec), build_matrix_1d(3, BoundaryCondition::Neumann));
    }

    #[test]
    fn neumann_dirichlet_row_sums() {
        // A_N (x) I + I (x) A_D at n=1: row sums follow the Neumann pattern.
        let spec = PoissonSpec::new(
            2,
            1,
            vec![BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
        )
        .unwrap();
        let a = build_matrix(&spec);
        // Row 0: (1 - 1) from A_N(x)I plus (2 - 1) from I(x)A_D = 1.
        let sums: Vec<f64> = (0..4).map(|i| a.row(i).sum()).collect();
        assert_eq!(sums, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(a[(0, 0)], 3.0);
    }

    #[test]
    fn dirichlet_specs_are_positive_definite() {
        for d in 1..=3usize {
            for n in 1..=2usize {
                let mut bc = vec![BoundaryCondition::Neumann; d];
                bc[d - 1] = BoundaryCondition::Dirichlet;
                let spec = PoissonSpec::new(d, n, bc).unwrap();
                let a = build_matrix(&spec);
                let eig = a.symmetric_eigenvalues();
                assert!(eig.iter().all(|&e| e > 0.0), "not SPD for d={d}, n={n}");
            }
        }
    }

    #[test]
    fn step_function_rhs_1d() {
        let rhs = build_rhs(&RhsSpec::StepFunction { d: 1, n: 1 }).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(rhs.vector[0], h, 1e-15));
        assert!(close(rhs.vector[1], -h, 1e-15));
    }

    #[test]
    fn device_alpha1_within_half_percent() {
        let a1 = DeviceConstants::default().alpha1();
        assert!((a1 - 1.810e-5).abs() / 1.810e-5 < 0.005, "alpha1 = {a1}");
    }

    #[test]
    fn device_eta_n4() {
        let rhs = build_rhs(&RhsSpec::Device { n: 4, vg: 0.5 }).unwrap();
        let s = rhs.device.unwrap();
        // eta = atan(8 * alpha1 / 0.5)
        let expect = (8.0 * s.alpha1 / 0.5).atan();
        assert!(close(s.eta, expect, 1e-15));
        assert!(close(s.eta, 2.896e-4, 3e-7), "eta = {}", s.eta);
    }

    #[test]
    fn device_b0_support() {
        let rhs = build_rhs(&RhsSpec::Device { n: 4, vg: 0.5 }).unwrap();
        let s = rhs.device.unwrap();
        let m = 16;
        for idx in 0..rhs.vector.len() {
            let (i1, i2) = (idx / m, idx % m);
            let expect_electrode = (6..10).contains(&i1) && i2 == 0;
            let has_bias = (rhs.vector[idx] - s.alpha1).abs() > 1e-12;
            assert_eq!(has_bias, expect_electrode, "index ({i1},{i2})");
            if expect_electrode {
                assert!(close(rhs.vector[idx], s.alpha0 + s.alpha1, 1e-15));
            }
        }
    }

    #[test]
    fn device_reconstruction_from_scalars() {
        // Rebuild b from the alpha/beta/eta decomposition and compare.
        let n = 4usize;
        let rhs = build_rhs(&RhsSpec::Device { n, vg: 0.3 }).unwrap();
        let s = rhs.device.unwrap();
        let m = 1 << n;
        let mut b = DVector::from_element(m * m, 0.0);
        // alpha0 * b0
        for i1 in device_electrode_range(n) {
            b[i1 * m] += s.alpha0;
        }
        // alpha1 * b1
        for i in 0..m * m {
            b[i] += s.alpha1;
        }
        assert_eq!(b, rhs.vector);
        // Norm identities.
        assert!(close(s.norm_b0, 2.0, 1e-12));
        assert!(close(s.norm_b1, 16.0, 1e-12));
        // tan(eta) = beta1/beta0.
        assert!(close(s.eta.tan(), s.beta1 / s.beta0, 1e-12));
    }

    #[test]
    fn device_needs_three_qubits() {
        assert_eq!(
            build_rhs(&RhsSpec::Device { n: 2, vg: 0.5 }),
            Err(PoissonError::DeviceTooNarrow(2))
        );
    }

    #[test]
    fn solve_two_by_two_oracle() {
        let a = build_matrix_1d(1, BoundaryCondition::Dirichlet);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        let sol = solve_exact(&a, &b).unwrap();
        assert!(close(sol.v0[0], 2.0 / 3.0, 1e-12));
        assert!(close(sol.v0[1], 1.0 / 3.0, 1e-12));
    }

    #[test]
    fn solve_inverse_consistency() {
        let spec = PoissonSpec::new(
            2,
            2,
            vec![BoundaryCondition::Neumann, BoundaryCondition::Dirichlet],
        )
        .unwrap();
        let a = build_matrix(&spec);
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let w = DVector::from_fn(16, |_, _| next());
        let b = &a * &w;
        let sol = solve_exact(&a, &b).unwrap();
        assert!((&sol.v0 - &w).norm() < 1e-9);
        // Residual contract.
        assert!((&a * &sol.v0 - &b).norm() <= 1e-9 * b.norm());
    }

    #[test]
    fn singular_system_rejected() {
        let spec = PoissonSpec::new(1, 2, vec![BoundaryCondition::Neumann]).unwrap();
        let a = build_matrix(&spec);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            solve_exact(&a, &b),
            Err(PoissonError::SingularSystem)
        ));
    }

    #[test]
    fn metrics_perfect_and_orthogonal() {
        let spec = PoissonSpec::new(1, 1, vec![BoundaryCondition::Dirichlet]).unwrap();
        let rhs = build_rhs(&RhsSpec::Explicit { vector: vec![1.0, 0.0] }).unwrap();
        let exact = solve_spec(&spec, &rhs).unwrap();
        let u: Vec<f64> = exact.v0.iter().map(|&v| v / exact.norm).collect();
        let psi = StateVector::from_real(&u).unwrap();
        let r = exact.norm / rhs.norm();
        let m = metrics(&psi, r, &spec, &rhs).unwrap();
        assert!(close(m.fidelity, 1.0, 1e-12));
        assert!(close(m.norm_rel_error, 0.0, 1e-12));

        // Orthogonal state: fidelity 0.
        let perp = StateVector::from_amplitudes(vec![
            Complex64::new(-u[1], 0.0),
            Complex64::new(u[0], 0.0),
        ])
        .unwrap();
        let m2 = metrics(&perp, r, &spec, &rhs).unwrap();
        assert!(m2.fidelity < 1e-12);
    }

    #[test]
    fn grid_csv_layout() {
        let spec = PoissonSpec::new(
            2,
            1,
            vec![BoundaryCondition::Dirichlet, BoundaryCondition::Dirichlet],
        )
        .unwrap();
        let csv = grid_csv(&spec, &[1.0, 2.0, 3.0, 4.0], Some(0.5));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# d=2,n=1,bc=DD,vg=0.5");
        assert_eq!(lines[1], "x1,x2,value");
        assert_eq!(lines[2], "0,0,1");
        assert_eq!(lines[3], "0,1,2");
        assert_eq!(lines[4], "1,0,3");
        assert_eq!(lines[5], "1,1,4");
    }
}
