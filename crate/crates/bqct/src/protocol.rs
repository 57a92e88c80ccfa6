//! States, bases and unitaries of the teleportation channel, plus a
//! single-round executor running channel preparation through the three
//! measurements.
//!
//! The composite register order is fixed globally as
//! [a, b, A₁, A₂, B₁, B₂, C]: Alice's and Bob's unknown input particles
//! first, then the five channel particles. Alice owns a, A₁, A₂; Bob owns
//! b, B₁, B₂; Charlie owns the control particle C.

use std::fmt;

use num_complex::Complex64;
use qsim_core::{
    BipartiteFactorization, MeasurementBasis, MeasurementResult, QOperator, QsimError,
    QubitDisposition, QubitId, StateVector,
};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::correction::{CorrectionTable, Pauli};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Engine(#[from] QsimError),

    #[error("input amplitudes are not normalized (deviation {deviation:.3e})")]
    UnnormalizedInput { deviation: f64 },

    #[error("input qubits belong to Alice or Bob, not {party}")]
    InvalidOwner { party: Party },

    #[error("Bell index {value} outside 1..=4")]
    BellIndexOutOfRange { value: u8 },

    #[error("control bit {value} must be 0 or 1")]
    ControlBitOutOfRange { value: u8 },

    #[error("channel layout must map the five channel particles to distinct positions")]
    InvalidLayout,

    #[error("residual state across A₂|B₁ did not factor (Schmidt coefficients {schmidt:?})")]
    ResidualNotAProduct { schmidt: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// The three protocol participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    /// Particles held by this party; ownership never changes mid-run.
    pub fn owned_particles(self) -> &'static [Particle] {
        match self {
            Party::Alice => &[Particle::A, Particle::A1, Particle::A2],
            Party::Bob => &[Particle::B, Particle::B1, Particle::B2],
            Party::Charlie => &[Particle::C],
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => write!(f, "Alice"),
            Party::Bob => write!(f, "Bob"),
            Party::Charlie => write!(f, "Charlie"),
        }
    }
}

/// The seven particles of the composite system.
///
/// `A` and `B` are the unknown input particles a and b; the rest form the
/// five-particle channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Particle {
    A,
    B,
    A1,
    A2,
    B1,
    B2,
    C,
}

impl Particle {
    /// Fixed register order of the seven-particle system.
    pub const SYSTEM_ORDER: [Particle; 7] = [
        Particle::A,
        Particle::B,
        Particle::A1,
        Particle::A2,
        Particle::B1,
        Particle::B2,
        Particle::C,
    ];

    /// The five channel particles in channel register order.
    pub const CHANNEL_ORDER: [Particle; 5] = [
        Particle::A1,
        Particle::A2,
        Particle::B1,
        Particle::B2,
        Particle::C,
    ];

    pub fn is_channel(self) -> bool {
        !matches!(self, Particle::A | Particle::B)
    }
}

impl fmt::Display for Particle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Particle::A => "a",
            Particle::B => "b",
            Particle::A1 => "A1",
            Particle::A2 => "A2",
            Particle::B1 => "B1",
            Particle::B2 => "B2",
            Particle::C => "C",
        };
        write!(f, "{name}")
    }
}

/// Unknown single-qubit input state held by Alice or Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputQubit {
    owner: Party,
    c0: Complex64,
    c1: Complex64,
}

impl InputQubit {
    pub fn new(owner: Party, c0: Complex64, c1: Complex64) -> Result<Self> {
        if owner == Party::Charlie {
            return Err(ProtocolError::InvalidOwner { party: owner });
        }
        let deviation = (c0.norm_sqr() + c1.norm_sqr() - 1.0).abs();
        if deviation > qsim_core::NORM_TOLERANCE {
            return Err(ProtocolError::UnnormalizedInput { deviation });
        }
        Ok(Self { owner, c0, c1 })
    }

    /// Alice's particle a.
    pub fn alice(c0: Complex64, c1: Complex64) -> Result<Self> {
        Self::new(Party::Alice, c0, c1)
    }

    /// Bob's particle b.
    pub fn bob(c0: Complex64, c1: Complex64) -> Result<Self> {
        Self::new(Party::Bob, c0, c1)
    }

    pub fn owner(self) -> Party {
        self.owner
    }

    pub fn c0(self) -> Complex64 {
        self.c0
    }

    pub fn c1(self) -> Complex64 {
        self.c1
    }

    pub fn state(self) -> StateVector {
        StateVector::qubit(self.c0, self.c1).expect("validated at construction")
    }
}

/// Mapping from the five channel particles to register positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelLayout {
    positions: [usize; 5],
}

impl ChannelLayout {
    /// Positions given in channel order [A₁, A₂, B₁, B₂, C].
    pub fn new(positions: [usize; 5]) -> Result<Self> {
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(ProtocolError::InvalidLayout);
            }
        }
        Ok(Self { positions })
    }

    /// Layout of the standalone five-qubit channel register.
    pub fn channel() -> Self {
        Self::new([0, 1, 2, 3, 4]).expect("distinct positions")
    }

    /// Layout of the channel inside the seven-particle system register.
    pub fn in_system() -> Self {
        Self::new([2, 3, 4, 5, 6]).expect("distinct positions")
    }

    pub fn position(&self, particle: Particle) -> Option<QubitId> {
        let idx = Particle::CHANNEL_ORDER.iter().position(|p| *p == particle)?;
        Some(QubitId::new(self.positions[idx]))
    }
}

/// Index into the numbered Bell basis, 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellIndex(u8);

impl BellIndex {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=4).contains(&value) {
            Ok(Self(value))
        } else {
            Err(ProtocolError::BellIndexOutOfRange { value })
        }
    }

    pub fn all() -> [BellIndex; 4] {
        [Self(1), Self(2), Self(3), Self(4)]
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn zero_based(self) -> usize {
        usize::from(self.0 - 1)
    }

    fn from_label(label: &str) -> Self {
        let value: u8 = label.parse().expect("bell basis labels are 1..=4");
        Self::new(value).expect("bell basis labels are 1..=4")
    }
}

impl fmt::Display for BellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One of the 32 joint measurement outcomes: Alice's Bell index `i` for the
/// pair (a, A₁), Bob's Bell index `j` for (B₂, b), and Charlie's bit `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProtocolOutcome {
    pub i: BellIndex,
    pub j: BellIndex,
    pub k: u8,
}

impl ProtocolOutcome {
    pub fn new(i: BellIndex, j: BellIndex, k: u8) -> Result<Self> {
        if k > 1 {
            return Err(ProtocolError::ControlBitOutOfRange { value: k });
        }
        Ok(Self { i, j, k })
    }

    /// All 32 outcomes in lexicographic (i, j, k) order.
    pub fn all() -> Vec<ProtocolOutcome> {
        let mut outcomes = Vec::with_capacity(32);
        for i in BellIndex::all() {
            for j in BellIndex::all() {
                for k in 0..=1u8 {
                    outcomes.push(ProtocolOutcome { i, j, k });
                }
            }
        }
        outcomes
    }
}

impl fmt::Display for ProtocolOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.k)
    }
}

/// The four Bell states in the numbered convention:
/// |φ¹⟩ = (|00⟩+|11⟩)/√2, |φ²⟩ = (|00⟩−|11⟩)/√2,
/// |φ³⟩ = (|01⟩+|10⟩)/√2, |φ⁴⟩ = (|01⟩−|10⟩)/√2.
pub fn bell_states() -> [StateVector; 4] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::ZERO;
    let make = |amps: [Complex64; 4]| StateVector::new(2, amps.to_vec()).expect("unit norm");
    [
        make([s, z, z, s]),
        make([s, z, z, -s]),
        make([z, s, s, z]),
        make([z, s, -s, z]),
    ]
}

/// Bell measurement basis with outcome labels "1".."4".
pub fn bell_basis() -> MeasurementBasis {
    let labels = BellIndex::all().iter().map(|b| b.to_string()).collect();
    MeasurementBasis::new(labels, bell_states().to_vec()).expect("Bell basis is orthonormal")
}

/// Charlie's computational measurement basis, labels "0" and "1".
pub fn control_basis() -> MeasurementBasis {
    MeasurementBasis::computational(1)
}

/// The five-qubit maximally entangled channel state, assembled as half the
/// sum of four branches, each a three-bit prefix tensored with a Bell pair:
/// |001⟩|φ⁴⟩ + |010⟩|φ²⟩ + |100⟩|φ³⟩ + |111⟩|φ¹⟩.
pub fn brown_state() -> StateVector {
    let bells = bell_states();
    const BRANCHES: [(usize, usize); 4] = [(0b001, 3), (0b010, 1), (0b100, 2), (0b111, 0)];
    let mut amps = vec![Complex64::ZERO; 32];
    for (prefix, bell) in BRANCHES {
        for (pair_cfg, amp) in bells[bell].amplitudes().iter().enumerate() {
            amps[(prefix << 2) | pair_cfg] += 0.5 * amp;
        }
    }
    StateVector::new(5, amps).expect("channel state is normalized")
}

/// Alice's local two-qubit unitary on (A₁, A₂), targeted at the standalone
/// channel layout. It cycles |01⟩→|00⟩, |10⟩→|01⟩, |11⟩→|10⟩, |00⟩→−|11⟩.
pub fn alice_unitary() -> QOperator {
    let o = Complex64::ZERO;
    let l = Complex64::ONE;
    #[rustfmt::skip]
    let matrix = vec![
        o,  l, o, o,
        o,  o, l, o,
        o,  o, o, l,
        -l, o, o, o,
    ];
    let layout = ChannelLayout::channel();
    let targets = vec![
        layout.position(Particle::A1).expect("channel particle"),
        layout.position(Particle::A2).expect("channel particle"),
    ];
    QOperator::new(targets, matrix).expect("signed permutation is unitary")
}

/// Compose the seven-particle system state |χ⟩_a ⊗ |χ⟩_b ⊗ channel, in the
/// fixed register order [a, b, A₁, A₂, B₁, B₂, C].
pub fn prepare_system(chi_a: &InputQubit, chi_b: &InputQubit) -> Result<StateVector> {
    let state = chi_a
        .state()
        .tensor_product(&chi_b.state())?
        .tensor_product(&brown_state())?;
    Ok(state)
}

/// Tracks which particle sits at which register position as measurements
/// remove qubits.
struct SystemRegister {
    order: Vec<Particle>,
    state: StateVector,
}

impl SystemRegister {
    fn new(state: StateVector) -> Self {
        Self {
            order: Particle::SYSTEM_ORDER.to_vec(),
            state,
        }
    }

    fn position(&self, particle: Particle) -> QubitId {
        let pos = self
            .order
            .iter()
            .position(|p| *p == particle)
            .expect("particle still in register");
        QubitId::new(pos)
    }

    fn apply(&mut self, op: &QOperator, targets: &[Particle]) -> Result<()> {
        let ids: Vec<QubitId> = targets.iter().map(|p| self.position(*p)).collect();
        self.state = self.state.apply(&op.retargeted(ids)?)?;
        Ok(())
    }

    /// Measure `targets` in `basis` and remove them from the register.
    fn measure(
        &mut self,
        basis: &MeasurementBasis,
        targets: &[Particle],
        driver: &mut OutcomeDriver<'_>,
    ) -> Result<MeasurementResult> {
        let ids: Vec<QubitId> = targets.iter().map(|p| self.position(*p)).collect();
        let result = match driver {
            OutcomeDriver::Forced(labels) => {
                let label = labels.next().expect("a label per measurement");
                self.state
                    .measure_forced(basis, &ids, &label, QubitDisposition::Remove)?
            }
            OutcomeDriver::Sampled(rng) => {
                self.state
                    .measure_sampled(basis, &ids, QubitDisposition::Remove, &mut **rng)?
            }
        };
        self.order.retain(|p| !targets.contains(p));
        self.state = result.post_state.clone();
        Ok(result)
    }
}

enum OutcomeDriver<'a> {
    Forced(std::vec::IntoIter<String>),
    Sampled(&'a mut dyn RngCore),
}

/// Result of one protocol round up to (and including) the three measurements,
/// before any correction is applied.
#[derive(Debug, Clone)]
pub struct MeasuredRound {
    pub outcome: ProtocolOutcome,
    /// Joint Born probability of the three outcomes.
    pub joint_probability: f64,
    /// Post-measurement two-qubit state on [A₂, B₁].
    pub residual: StateVector,
    /// Single-qubit factor held by Alice (carries χ_b after correction).
    pub pre_correction_a2: StateVector,
    /// Single-qubit factor held by Bob (carries χ_a after correction).
    pub pre_correction_b1: StateVector,
}

fn execute_round(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    mut driver: OutcomeDriver<'_>,
) -> Result<MeasuredRound> {
    let mut register = SystemRegister::new(prepare_system(chi_a, chi_b)?);
    register.apply(&alice_unitary(), &[Particle::A1, Particle::A2])?;

    let bell = bell_basis();
    let alice = register.measure(&bell, &[Particle::A, Particle::A1], &mut driver)?;
    let bob = register.measure(&bell, &[Particle::B2, Particle::B], &mut driver)?;
    let charlie = register.measure(&control_basis(), &[Particle::C], &mut driver)?;

    let outcome = ProtocolOutcome::new(
        BellIndex::from_label(&alice.outcome_label),
        BellIndex::from_label(&bob.outcome_label),
        charlie.outcome_index as u8,
    )?;
    let joint_probability = alice.probability * bob.probability * charlie.probability;

    let residual = register.state.clone();
    let cut = [register.position(Particle::A2)];
    let (pre_correction_a2, pre_correction_b1) = match residual.factorize_bipartite(&cut)? {
        BipartiteFactorization::Product { left, right } => (left, right),
        BipartiteFactorization::Entangled {
            schmidt_coefficients,
        } => {
            return Err(ProtocolError::ResidualNotAProduct {
                schmidt: schmidt_coefficients,
            })
        }
    };

    Ok(MeasuredRound {
        outcome,
        joint_probability,
        residual,
        pre_correction_a2,
        pre_correction_b1,
    })
}

/// Run one round with every measurement forced to the given outcome.
pub fn execute_round_forced(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    outcome: ProtocolOutcome,
) -> Result<MeasuredRound> {
    let labels = vec![
        outcome.i.to_string(),
        outcome.j.to_string(),
        outcome.k.to_string(),
    ];
    execute_round(chi_a, chi_b, OutcomeDriver::Forced(labels.into_iter()))
}

/// Run one round with outcomes sampled from the Born distribution.
pub fn execute_round_sampled(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    rng: &mut dyn RngCore,
) -> Result<MeasuredRound> {
    execute_round(chi_a, chi_b, OutcomeDriver::Sampled(rng))
}

/// A fully corrected protocol round.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub chi_a: InputQubit,
    pub chi_b: InputQubit,
    pub outcome: ProtocolOutcome,
    pub joint_probability: f64,
    pub pre_correction_a2: StateVector,
    pub pre_correction_b1: StateVector,
    pub correction_a2: Pauli,
    pub correction_b1: Pauli,
    pub corrected_a2: StateVector,
    pub corrected_b1: StateVector,
    /// Fidelity of the corrected A₂ state against χ_b.
    pub fidelity_a2: f64,
    /// Fidelity of the corrected B₁ state against χ_a.
    pub fidelity_b1: f64,
}

/// Execute one full protocol round: preparation, Alice's unitary, the three
/// measurements, factor extraction, table lookup and correction.
///
/// With `forced` given, every measurement is projected deterministically onto
/// that outcome; otherwise outcomes are sampled using a generator seeded with
/// `seed`.
pub fn run_protocol(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    forced: Option<ProtocolOutcome>,
    seed: u64,
) -> Result<ProtocolRun> {
    let round = match forced {
        Some(outcome) => execute_round_forced(chi_a, chi_b, outcome)?,
        None => {
            use rand::SeedableRng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            execute_round_sampled(chi_a, chi_b, &mut rng)?
        }
    };
    let entry = CorrectionTable::standard().entry(round.outcome);
    let corrected_a2 = round
        .pre_correction_a2
        .apply(&entry.recovery_a2.operator(QubitId::new(0)))?;
    let corrected_b1 = round
        .pre_correction_b1
        .apply(&entry.recovery_b1.operator(QubitId::new(0)))?;
    let fidelity_a2 = corrected_a2.fidelity(&chi_b.state())?;
    let fidelity_b1 = corrected_b1.fidelity(&chi_a.state())?;
    Ok(ProtocolRun {
        chi_a: *chi_a,
        chi_b: *chi_b,
        outcome: round.outcome,
        joint_probability: round.joint_probability,
        pre_correction_a2: round.pre_correction_a2,
        pre_correction_b1: round.pre_correction_b1,
        correction_a2: entry.recovery_a2,
        correction_b1: entry.recovery_b1,
        corrected_a2,
        corrected_b1,
        fidelity_a2,
        fidelity_b1,
    })
}

/// Haar-random single-qubit amplitudes: two independent standard complex
/// Gaussians, normalized.
pub fn haar_random_amplitudes(rng: &mut dyn RngCore) -> (Complex64, Complex64) {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let c0 = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let c1 = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let norm = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if norm > 1e-6 {
            return (c0 / norm, c1 / norm);
        }
    }
}

/// Haar-random input pair for Alice and Bob.
pub fn haar_random_inputs(rng: &mut dyn RngCore) -> (InputQubit, InputQubit) {
    let (a0, a1) = haar_random_amplitudes(rng);
    let (b0, b1) = haar_random_amplitudes(rng);
    (
        InputQubit::alice(a0, a1).expect("normalized by construction"),
        InputQubit::bob(b0, b1).expect("normalized by construction"),
    )
}

/// Joint Born probability of a single outcome for the given inputs.
pub fn outcome_probability(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    outcome: ProtocolOutcome,
) -> Result<f64> {
    Ok(execute_round_forced(chi_a, chi_b, outcome)?.joint_probability)
}
