//! Minimal gate-level quantum simulator.
//!
//! Supports statevector evolution, computational-basis sampling and
//! density-matrix evolution with per-gate depolarizing channels. The basis
//! convention throughout: qubit `q0` is the leftmost tensor factor, so the
//! basis index of a bitstring `c0 c1 .. c_{q-1}` is `sum c_j * 2^(q-1-j)`.

mod density;
mod gate;
mod state;

pub use density::{DensityMatrix, NoiseModel};
pub use gate::{Circuit, Gate};
pub use state::{sample, Histogram, StateVector};

pub type Complex64 = num_complex::Complex<f64>;

/// Widest register the statevector simulator accepts.
pub const MAX_STATE_QUBITS: usize = 13;
/// Widest register the density-matrix simulator accepts.
pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum QsimError {
    #[error("qubit index {index} out of range for {width}-qubit register")]
    QubitOutOfRange { index: usize, width: usize },
    #[error("two-qubit gate qubits must be distinct")]
    OverlappingQubits,
    #[error("gate angle must be finite")]
    NonFiniteAngle,
    #[error("register width {width} outside supported range 1..={max}")]
    WidthOutOfRange { width: usize, max: usize },
    #[error("circuit width {circuit} exceeds register width {register}")]
    WidthMismatch { circuit: usize, register: usize },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("noise rate must lie in [0, 1]")]
    InvalidNoiseRate,
    #[error("amplitude vector must have power-of-two length and unit norm")]
    InvalidAmplitudes,
    #[error("qubit remap must be injective and in range")]
    InvalidRemap,
}

/// Mixes a base seed with a stream tag into an independent sub-seed
/// (splitmix64 finalizer). Used to derive per-circuit seeds deterministically.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
