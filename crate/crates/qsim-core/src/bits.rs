//! Amplitude-index bit arithmetic.
//!
//! Register position 0 is the leftmost ket symbol and the most significant
//! bit of the amplitude index.

/// Bit of `index` at register `position`.
pub(crate) fn bit(index: usize, position: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - position)) & 1
}

/// Local basis index formed by the bits at `positions`, in the given order
/// (the first position becomes the most significant local bit).
pub(crate) fn sub_index(index: usize, positions: &[usize], n_qubits: usize) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | bit(index, p, n_qubits))
}

/// `index` with the bits at `positions` replaced by the bits of `sub`.
pub(crate) fn with_sub_index(
    index: usize,
    positions: &[usize],
    sub: usize,
    n_qubits: usize,
) -> usize {
    let k = positions.len();
    let mut out = index;
    for (j, &p) in positions.iter().enumerate() {
        let shift = n_qubits - 1 - p;
        let b = (sub >> (k - 1 - j)) & 1;
        out = (out & !(1 << shift)) | (b << shift);
    }
    out
}

/// Positions of the register not contained in `positions`, ascending.
pub(crate) fn complement(positions: &[usize], n_qubits: usize) -> Vec<usize> {
    (0..n_qubits).filter(|p| !positions.contains(p)).collect()
}
