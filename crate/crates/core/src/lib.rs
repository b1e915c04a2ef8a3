//! Classical simulation of a variational quantum solver for multi-dimensional
//! Poisson equations with mixed (Dirichlet / Neumann / periodic) boundary
//! conditions.
//!
//! The crate simulates every quantum circuit of the algorithm on a classical
//! machine in three modes: ideal statevector, shot-sampled, and density-matrix
//! evolution with depolarizing noise. The classical finite-difference system
//! serves as the exact oracle against which the variational solution is scored
//! (fidelity and relative norm error).
//!
//! Module map:
//! - [`qsim`]: gate-level statevector / density-matrix simulator and sampling.
//! - [`poisson`]: discretized Poisson matrices, right-hand sides, dense oracle.
//! - [`measure`]: decomposition of the Poisson operator into measurement
//!   circuits and expectation estimation.
//! - [`ansatz`]: the hardware-efficient real-valued ansatz and its
//!   derivative-state extension.
//! - [`cost`]: the variational cost, norm-recovery factor and analytic
//!   gradient.
//! - [`lbfgs`]: limited-memory quasi-Newton outer loop with restarts.
//! - [`noise_bench`]: the multi-controlled-X baseline scheme and the
//!   depolarizing-noise comparison.
//! - [`experiment`]: experiment configs, runners, reports and file export.

pub mod ansatz;
pub mod cost;
pub mod experiment;
pub mod lbfgs;
pub mod measure;
pub mod noise_bench;
pub mod parallel;
pub mod poisson;
pub mod qsim;
