use num_complex::Complex64;
use rand::Rng;

use crate::bits;
use crate::{
    QsimError, QubitId, Result, StateVector, IMPOSSIBLE_OUTCOME_CUTOFF, NORM_TOLERANCE,
};

/// Complete orthonormal basis on `arity` qubits, one label per outcome.
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    arity: usize,
    vectors: Vec<StateVector>,
    labels: Vec<String>,
}

impl MeasurementBasis {
    pub fn new(labels: Vec<String>, vectors: Vec<StateVector>) -> Result<Self> {
        let arity = match vectors.first() {
            Some(v) => v.n_qubits(),
            None => {
                return Err(QsimError::IncompleteBasis {
                    arity: 0,
                    count: 0,
                    expected: 1,
                })
            }
        };
        let expected = 1usize << arity;
        if vectors.len() != expected || vectors.iter().any(|v| v.n_qubits() != arity) {
            return Err(QsimError::IncompleteBasis {
                arity,
                count: vectors.len(),
                expected,
            });
        }
        if labels.len() != vectors.len() {
            return Err(QsimError::LabelCountMismatch {
                labels: labels.len(),
                vectors: vectors.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QsimError::DuplicateLabel { label: l.clone() });
            }
        }
        let mut deviation = 0.0f64;
        for (i, v) in vectors.iter().enumerate() {
            for (j, w) in vectors.iter().enumerate() {
                let overlap = v.inner_product(w)?;
                let expected = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                deviation = deviation.max((overlap - expected).norm());
            }
        }
        if deviation > NORM_TOLERANCE {
            return Err(QsimError::NotOrthonormal { deviation });
        }
        Ok(Self {
            arity,
            vectors,
            labels,
        })
    }

    /// Computational basis, labelled by bit strings ("0"/"1" for one qubit,
    /// "00".."11" for two, ...).
    pub fn computational(arity: usize) -> Self {
        let dim = 1usize << arity;
        let vectors = (0..dim)
            .map(|i| StateVector::basis_state(arity, i).expect("basis state within cap"))
            .collect();
        let labels = (0..dim).map(|i| format!("{i:0width$b}", width = arity)).collect();
        Self::new(labels, vectors).expect("computational basis is orthonormal")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vector(&self, index: usize) -> &StateVector {
        &self.vectors[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// What happens to the measured qubits in the post-measurement state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QubitDisposition {
    /// Measured qubits are removed; the register shrinks by the basis arity.
    #[default]
    Remove,
    /// Measured qubits stay in place, collapsed onto the outcome vector.
    Retain,
}

/// Outcome of a projective measurement.
#[derive(Debug, Clone)]
pub struct MeasurementResult {
    pub outcome_index: usize,
    pub outcome_label: String,
    /// Squared norm of the unnormalized projection.
    pub probability: f64,
    /// Renormalized post-measurement state.
    pub post_state: StateVector,
}

impl StateVector {
    fn validate_measurement(
        &self,
        basis: &MeasurementBasis,
        targets: &[QubitId],
    ) -> Result<Vec<usize>> {
        if targets.len() != basis.arity() {
            return Err(QsimError::ArityMismatch {
                arity: basis.arity(),
                targets: targets.len(),
            });
        }
        let positions: Vec<usize> = targets.iter().map(|t| t.position()).collect();
        for (i, &p) in positions.iter().enumerate() {
            if p >= self.n_qubits() {
                return Err(QsimError::TargetOutOfRange {
                    position: p,
                    n_qubits: self.n_qubits(),
                });
            }
            if positions[..i].contains(&p) {
                return Err(QsimError::DuplicateTarget { position: p });
            }
        }
        Ok(positions)
    }

    /// Unnormalized projection coefficients onto `vector` over the untouched
    /// qubits, plus the outcome probability.
    fn project(
        &self,
        vector: &StateVector,
        positions: &[usize],
        rest: &[usize],
    ) -> (Vec<Complex64>, f64) {
        let n = self.n_qubits();
        let mut proj = vec![Complex64::ZERO; 1 << rest.len()];
        for idx in 0..self.dim() {
            let cfg = bits::sub_index(idx, positions, n);
            let r = bits::sub_index(idx, rest, n);
            proj[r] += vector.amplitude(cfg).conj() * self.amplitude(idx);
        }
        let probability = proj.iter().map(|c| c.norm_sqr()).sum();
        (proj, probability)
    }

    fn collapse(
        &self,
        basis: &MeasurementBasis,
        positions: &[usize],
        outcome_index: usize,
        disposition: QubitDisposition,
    ) -> Result<MeasurementResult> {
        let rest = bits::complement(positions, self.n_qubits());
        let vector = basis.vector(outcome_index);
        let (proj, probability) = self.project(vector, positions, &rest);
        let label = basis.labels()[outcome_index].clone();
        if probability < IMPOSSIBLE_OUTCOME_CUTOFF {
            return Err(QsimError::ImpossibleOutcome {
                label,
                probability,
            });
        }
        let scale = probability.sqrt();
        let post_state = match disposition {
            QubitDisposition::Remove => {
                let amps = proj.iter().map(|c| c / scale).collect();
                StateVector::new(rest.len(), amps)?
            }
            QubitDisposition::Retain => {
                let n = self.n_qubits();
                let mut amps = vec![Complex64::ZERO; self.dim()];
                for (idx, slot) in amps.iter_mut().enumerate() {
                    let cfg = bits::sub_index(idx, positions, n);
                    let r = bits::sub_index(idx, &rest, n);
                    *slot = vector.amplitude(cfg) * proj[r] / scale;
                }
                StateVector::new(n, amps)?
            }
        };
        Ok(MeasurementResult {
            outcome_index,
            outcome_label: label,
            probability,
            post_state,
        })
    }

    /// Born probabilities for every outcome of `basis` on `targets`, in label
    /// order.
    pub fn outcome_probabilities(
        &self,
        basis: &MeasurementBasis,
        targets: &[QubitId],
    ) -> Result<Vec<f64>> {
        let positions = self.validate_measurement(basis, targets)?;
        let rest = bits::complement(&positions, self.n_qubits());
        Ok((0..basis.labels().len())
            .map(|i| self.project(basis.vector(i), &positions, &rest).1)
            .collect())
    }

    /// Deterministic projection onto the basis vector named `label`.
    ///
    /// Fails with [`QsimError::ImpossibleOutcome`] if the projection
    /// probability falls below the impossible-outcome cutoff.
    pub fn measure_forced(
        &self,
        basis: &MeasurementBasis,
        targets: &[QubitId],
        label: &str,
        disposition: QubitDisposition,
    ) -> Result<MeasurementResult> {
        let positions = self.validate_measurement(basis, targets)?;
        let outcome_index = basis
            .index_of(label)
            .ok_or_else(|| QsimError::UnknownOutcome {
                label: label.to_owned(),
            })?;
        self.collapse(basis, &positions, outcome_index, disposition)
    }

    /// Sample an outcome from the Born distribution using `rng`, then collapse.
    pub fn measure_sampled<R: Rng + ?Sized>(
        &self,
        basis: &MeasurementBasis,
        targets: &[QubitId],
        disposition: QubitDisposition,
        rng: &mut R,
    ) -> Result<MeasurementResult> {
        let positions = self.validate_measurement(basis, targets)?;
        let rest = bits::complement(&positions, self.n_qubits());
        let probs: Vec<f64> = (0..basis.labels().len())
            .map(|i| self.project(basis.vector(i), &positions, &rest).1)
            .collect();
        let draw: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut outcome_index = None;
        for (i, &p) in probs.iter().enumerate() {
            cumulative += p;
            if draw < cumulative && p >= IMPOSSIBLE_OUTCOME_CUTOFF {
                outcome_index = Some(i);
                break;
            }
        }
        // Rounding can leave the draw above the final cumulative sum; fall
        // back to the most likely outcome.
        let outcome_index = outcome_index.unwrap_or_else(|| {
            probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("basis is never empty")
        });
        self.collapse(basis, &positions, outcome_index, disposition)
    }
}
