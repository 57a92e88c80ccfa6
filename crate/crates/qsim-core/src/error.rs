use thiserror::Error;

/// Errors reported by the state-vector engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("register of {requested} qubits exceeds the {max}-qubit cap")]
    CapacityExceeded { requested: usize, max: usize },

    #[error("{len} amplitudes do not form a {n_qubits}-qubit register")]
    AmplitudeCountMismatch { n_qubits: usize, len: usize },

    #[error("state is not normalized (|Σ|amp|² − 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("basis index {index} out of range for {n_qubits} qubits")]
    BasisIndexOutOfRange { index: usize, n_qubits: usize },

    #[error("matrix has {len} entries, expected {expected} for arity {arity}")]
    MatrixShapeMismatch {
        arity: usize,
        len: usize,
        expected: usize,
    },

    #[error("matrix is not unitary (max |M†M − I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("basis has {count} vectors, a complete basis on {arity} qubits needs {expected}")]
    IncompleteBasis {
        arity: usize,
        count: usize,
        expected: usize,
    },

    #[error("basis vectors are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("{labels} labels do not match {vectors} basis vectors")]
    LabelCountMismatch { labels: usize, vectors: usize },

    #[error("duplicate outcome label {label:?}")]
    DuplicateLabel { label: String },

    #[error("target position {position} out of range for a {n_qubits}-qubit register")]
    TargetOutOfRange { position: usize, n_qubits: usize },

    #[error("duplicate target position {position}")]
    DuplicateTarget { position: usize },

    #[error("{targets} targets do not match basis arity {arity}")]
    ArityMismatch { arity: usize, targets: usize },

    #[error("unknown outcome label {label:?}")]
    UnknownOutcome { label: String },

    #[error("outcome {label:?} has probability {probability:.3e}, below the impossible-outcome cutoff")]
    ImpossibleOutcome { label: String, probability: f64 },

    #[error("qubit counts differ: {left} vs {right}")]
    QubitCountMismatch { left: usize, right: usize },

    #[error("cut must be a nonempty proper subset of the register")]
    InvalidCut,
}
