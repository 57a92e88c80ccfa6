use num_complex::Complex64;

use crate::bits;
use crate::{QsimError, QubitId, Result, StateVector, NORM_TOLERANCE};

/// Unitary matrix acting on an ordered subset of register qubits.
///
/// The matrix is row-major over the targets' local basis; the first target is
/// the most significant local bit. Unitarity is validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    arity: usize,
    matrix: Vec<Complex64>,
    targets: Vec<QubitId>,
}

impl QOperator {
    pub fn new(targets: Vec<QubitId>, matrix: Vec<Complex64>) -> Result<Self> {
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(QsimError::DuplicateTarget {
                    position: t.position(),
                });
            }
        }
        let arity = targets.len();
        let dim = 1usize << arity;
        if matrix.len() != dim * dim {
            return Err(QsimError::MatrixShapeMismatch {
                arity,
                len: matrix.len(),
                expected: dim * dim,
            });
        }
        let deviation = unitarity_deviation(&matrix, dim);
        if deviation > NORM_TOLERANCE {
            return Err(QsimError::NotUnitary { deviation });
        }
        Ok(Self {
            arity,
            matrix,
            targets,
        })
    }

    /// Single-qubit operator from a row-major 2×2 matrix.
    pub fn single(target: QubitId, matrix: [Complex64; 4]) -> Result<Self> {
        Self::new(vec![target], matrix.to_vec())
    }

    /// Identity on the given targets.
    pub fn identity(targets: Vec<QubitId>) -> Result<Self> {
        let dim = 1usize << targets.len();
        let mut matrix = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            matrix[r * dim + r] = Complex64::ONE;
        }
        Self::new(targets, matrix)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn targets(&self) -> &[QubitId] {
        &self.targets
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * (1 << self.arity) + col]
    }

    /// The same operator re-targeted at different qubits.
    pub fn retargeted(&self, targets: Vec<QubitId>) -> Result<Self> {
        Self::new(targets, self.matrix.clone())
    }
}

/// max |(M†M − I)(r, c)| over all entries.
fn unitarity_deviation(matrix: &[Complex64], dim: usize) -> f64 {
    let mut deviation = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let mut s = Complex64::ZERO;
            for k in 0..dim {
                s += matrix[k * dim + r].conj() * matrix[k * dim + c];
            }
            let expected = if r == c {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            deviation = deviation.max((s - expected).norm());
        }
    }
    deviation
}

impl StateVector {
    /// Apply `op` to its target qubits, identity elsewhere:
    /// (I ⊗ … ⊗ M ⊗ … ⊗ I)|self⟩ under the register's bit ordering.
    pub fn apply(&self, op: &QOperator) -> Result<StateVector> {
        let n = self.n_qubits();
        let positions: Vec<usize> = op.targets().iter().map(|t| t.position()).collect();
        for &p in &positions {
            if p >= n {
                return Err(QsimError::TargetOutOfRange {
                    position: p,
                    n_qubits: n,
                });
            }
        }
        let dim = self.dim();
        let sub_dim = 1usize << op.arity();
        let mut out = vec![Complex64::ZERO; dim];
        for (idx, slot) in out.iter_mut().enumerate() {
            let row = bits::sub_index(idx, &positions, n);
            let mut acc = Complex64::ZERO;
            for col in 0..sub_dim {
                acc += op.entry(row, col)
                    * self.amplitude(bits::with_sub_index(idx, &positions, col, n));
            }
            *slot = acc;
        }
        StateVector::new(n, out)
    }
}
