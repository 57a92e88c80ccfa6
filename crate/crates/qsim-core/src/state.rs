use num_complex::Complex64;

use crate::{QsimError, Result, MAX_QUBITS, NORM_TOLERANCE};

/// Position of a qubit within a register.
///
/// Position 0 is the leftmost ket symbol and the most significant bit of the
/// amplitude index. Positions within one register are distinct and contiguous
/// from 0 by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(usize);

impl QubitId {
    pub const fn new(position: usize) -> Self {
        Self(position)
    }

    pub const fn position(self) -> usize {
        self.0
    }
}

impl From<usize> for QubitId {
    fn from(position: usize) -> Self {
        Self(position)
    }
}

/// Normalized pure state of an `n_qubits` register, stored as 2ⁿ complex
/// amplitudes.
///
/// A zero-qubit register is legal and holds a single unit-modulus amplitude;
/// it is what remains after every qubit has been measured away.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Build a state from raw amplitudes, validating the register cap, the
    /// amplitude count and normalization. Normalization is validated, never
    /// silently repaired.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::CapacityExceeded {
                requested: n_qubits,
                max: MAX_QUBITS,
            });
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(QsimError::AmplitudeCountMismatch {
                n_qubits,
                len: amplitudes.len(),
            });
        }
        let deviation = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized { deviation });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state |index⟩ of an `n_qubits` register.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::CapacityExceeded {
                requested: n_qubits,
                max: MAX_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QsimError::BasisIndexOutOfRange { index, n_qubits });
        }
        let mut amplitudes = vec![Complex64::ZERO; dim];
        amplitudes[index] = Complex64::ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Single-qubit state c₀|0⟩ + c₁|1⟩.
    pub fn qubit(c0: Complex64, c1: Complex64) -> Result<Self> {
        Self::new(1, vec![c0, c1])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Dimension of the amplitude vector (2ⁿ).
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// Tensor product with `right`. The left register is major: the result's
    /// amplitude index is `left_index · 2^n_right + right_index`, so the left
    /// qubits keep their positions and the right qubits shift up by
    /// `self.n_qubits()`.
    pub fn tensor_product(&self, right: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + right.n_qubits;
        if n > MAX_QUBITS {
            return Err(QsimError::CapacityExceeded {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        let mut amplitudes = Vec::with_capacity(1 << n);
        for l in &self.amplitudes {
            for r in &right.amplitudes {
                amplitudes.push(l * r);
            }
        }
        StateVector::new(n, amplitudes)
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(QsimError::QubitCountMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|² ∈ [0, 1]; invariant under a global phase of either
    /// argument.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }
}
