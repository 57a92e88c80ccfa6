//! Dense state-vector simulation for small qubit registers.
//!
//! The engine represents pure states as full complex amplitude vectors and
//! supports register composition, unitary application, projective measurement
//! in arbitrary orthonormal bases, and bipartite factor extraction. Registers
//! are capped at [`MAX_QUBITS`] qubits, which keeps every operation cheap
//! enough for exhaustive verification sweeps.
//!
//! Bit ordering is fixed throughout: register position 0 is the leftmost ket
//! symbol and the most significant bit of the amplitude index, so the state
//! |q₀q₁…qₙ₋₁⟩ sits at index q₀·2ⁿ⁻¹ + … + qₙ₋₁.
//!
//! All values are immutable after construction and all operations are pure
//! functions returning new values; the only stateful object is the random
//! number generator passed into [`StateVector::measure_sampled`].

mod bits;
mod error;
mod factor;
mod measure;
mod operator;
mod state;

pub use error::QsimError;
pub use factor::BipartiteFactorization;
pub use measure::{MeasurementBasis, MeasurementResult, QubitDisposition};
pub use operator::QOperator;
pub use state::{QubitId, StateVector};

pub use num_complex::Complex64;

/// Hard cap on register width.
pub const MAX_QUBITS: usize = 10;

/// Tolerance for norm, unitarity, orthonormality and related checks.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// A forced outcome whose projection probability falls below this cutoff is
/// rejected as impossible.
pub const IMPOSSIBLE_OUTCOME_CUTOFF: f64 = 1e-12;

/// A cut whose second Schmidt coefficient falls below this threshold is
/// treated as a product (Schmidt rank 1).
pub const SCHMIDT_RANK_TOLERANCE: f64 = 1e-8;

pub type Result<T> = std::result::Result<T, QsimError>;
