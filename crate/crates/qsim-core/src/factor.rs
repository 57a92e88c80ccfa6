use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bits;
use crate::{QsimError, QubitId, Result, StateVector, SCHMIDT_RANK_TOLERANCE};

/// Outcome of a bipartite factorization attempt.
#[derive(Debug, Clone)]
pub enum BipartiteFactorization {
    /// Schmidt rank 1: the state equals `left ⊗ right` across the cut. The
    /// global phase lives in the left factor; the right factor's first
    /// nonzero amplitude is real and nonnegative.
    Product {
        left: StateVector,
        right: StateVector,
    },
    /// Schmidt rank above 1; coefficients are sorted in descending order.
    Entangled { schmidt_coefficients: Vec<f64> },
}

impl StateVector {
    fn cut_positions(&self, left: &[QubitId]) -> Result<(Vec<usize>, Vec<usize>)> {
        let n = self.n_qubits();
        if left.is_empty() || left.len() >= n {
            return Err(QsimError::InvalidCut);
        }
        let positions: Vec<usize> = left.iter().map(|q| q.position()).collect();
        for (i, &p) in positions.iter().enumerate() {
            if p >= n {
                return Err(QsimError::TargetOutOfRange {
                    position: p,
                    n_qubits: n,
                });
            }
            if positions[..i].contains(&p) {
                return Err(QsimError::DuplicateTarget { position: p });
            }
        }
        let rest = bits::complement(&positions, n);
        Ok((positions, rest))
    }

    fn amplitude_matrix(&self, left: &[usize], right: &[usize]) -> DMatrix<Complex64> {
        let rows = 1usize << left.len();
        let cols = 1usize << right.len();
        let n = self.n_qubits();
        let mut m = DMatrix::zeros(rows, cols);
        for idx in 0..self.dim() {
            let r = bits::sub_index(idx, left, n);
            let c = bits::sub_index(idx, right, n);
            m[(r, c)] = self.amplitude(idx);
        }
        m
    }

    /// Schmidt coefficients (descending) across the cut `left` | complement.
    /// The `left` qubits index the factor in the order given; the complement
    /// keeps ascending register order.
    pub fn schmidt_coefficients(&self, left: &[QubitId]) -> Result<Vec<f64>> {
        let (positions, rest) = self.cut_positions(left)?;
        let m = self.amplitude_matrix(&positions, &rest);
        let svd = m.svd(false, false);
        Ok(svd.singular_values.iter().copied().collect())
    }

    /// Split the state across the cut `left` | complement if its Schmidt rank
    /// is 1; otherwise report the Schmidt spectrum.
    pub fn factorize_bipartite(&self, left: &[QubitId]) -> Result<BipartiteFactorization> {
        let (positions, rest) = self.cut_positions(left)?;
        let m = self.amplitude_matrix(&positions, &rest);
        let svd = m.svd(true, true);
        let sv = &svd.singular_values;
        if sv.len() > 1 && sv[1] >= SCHMIDT_RANK_TOLERANCE {
            return Ok(BipartiteFactorization::Entangled {
                schmidt_coefficients: sv.iter().copied().collect(),
            });
        }
        let u = svd.u.as_ref().expect("u requested");
        let v_t = svd.v_t.as_ref().expect("v_t requested");
        let mut left_amps: Vec<Complex64> = (0..u.nrows()).map(|i| sv[0] * u[(i, 0)]).collect();
        let mut right_amps: Vec<Complex64> = (0..v_t.ncols()).map(|j| v_t[(0, j)]).collect();
        // Phase convention: right factor's first nonzero amplitude is made
        // real-nonnegative, the compensating phase moves into the left factor.
        if let Some(z) = right_amps.iter().find(|z| z.norm() > 1e-12) {
            let phase = z / z.norm();
            for a in &mut right_amps {
                *a /= phase;
            }
            for a in &mut left_amps {
                *a *= phase;
            }
        }
        let left_norm = left_amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let right_norm = right_amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut left_amps {
            *a /= left_norm;
        }
        for a in &mut right_amps {
            *a /= right_norm;
        }
        Ok(BipartiteFactorization::Product {
            left: StateVector::new(positions.len(), left_amps)?,
            right: StateVector::new(rest.len(), right_amps)?,
        })
    }
}
