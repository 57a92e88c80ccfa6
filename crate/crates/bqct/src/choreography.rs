//! Alice, Bob and Charlie as communicating parties.
//!
//! A session runs one protocol round, then plays out the classical
//! choreography: Alice sends Bob her Bell index, Bob sends Alice his, and in
//! controlled mode Charlie unicasts his bit to both receivers. Each receiver
//! looks up its recovery operator from the correction table using the data it
//! actually received, substituting the do-nothing defaults (Bell index 1,
//! control bit 0) for anything missing. Every event lands in an ordered
//! transcript.

use std::fmt;

use qsim_core::QubitId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::correction::{CorrectionTable, Pauli};
use crate::protocol::{
    execute_round_forced, execute_round_sampled, BellIndex, InputQubit, Particle, Party,
    ProtocolError, ProtocolOutcome,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChoreographyError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("event {seq}: {party} applied a correction before receiving {missing}")]
    CausalOrderViolation {
        seq: u32,
        party: Party,
        missing: String,
    },
}

pub type Result<T> = std::result::Result<T, ChoreographyError>;

/// Whether Charlie discloses his measurement outcome, and what the receivers
/// assume when he does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionMode {
    /// Charlie unicasts his bit to both receivers.
    Controlled,
    /// Charlie sends nothing; receivers assume the do-nothing branch k = 0.
    ControlWithheld,
    /// Charlie sends nothing; each receiver guesses k uniformly at random.
    ControlWithheldGuess,
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionMode::Controlled => write!(f, "controlled"),
            SessionMode::ControlWithheld => write!(f, "withheld"),
            SessionMode::ControlWithheldGuess => write!(f, "withheld-guess"),
        }
    }
}

/// Payload of one classical message: a Bell index (2 bits) or Charlie's
/// control bit (1 bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessagePayload {
    BellOutcome(BellIndex),
    ControlBit(u8),
}

impl MessagePayload {
    pub fn bit_count(self) -> u32 {
        match self {
            MessagePayload::BellOutcome(_) => 2,
            MessagePayload::ControlBit(_) => 1,
        }
    }
}

impl fmt::Display for MessagePayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessagePayload::BellOutcome(i) => write!(f, "bell={i}"),
            MessagePayload::ControlBit(k) => write!(f, "control={k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalMessage {
    /// Sequence number shared with the transcript event that records it.
    pub seq: u32,
    pub sender: Party,
    pub recipient: Party,
    pub payload: MessagePayload,
}

/// The distinct message slots of a controlled session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageSlot {
    /// Alice → Bob: her Bell index i.
    AliceBell,
    /// Bob → Alice: his Bell index j.
    BobBell,
    /// Charlie → Alice: his bit k.
    ControlToAlice,
    /// Charlie → Bob: his bit k.
    ControlToBob,
}

impl MessageSlot {
    pub const ALL: [MessageSlot; 4] = [
        MessageSlot::AliceBell,
        MessageSlot::BobBell,
        MessageSlot::ControlToAlice,
        MessageSlot::ControlToBob,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    BellMeasurement {
        pair: (Particle, Particle),
        outcome: BellIndex,
    },
    ControlMeasurement {
        outcome: u8,
    },
    MessageSent(ClassicalMessage),
    CorrectionApplied {
        target: Particle,
        op: Pauli,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub seq: u32,
    pub party: Party,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.seq, self.party)?;
        match &self.kind {
            EventKind::BellMeasurement { pair, outcome } => {
                write!(f, "measure-bell pair={},{} outcome={outcome}", pair.0, pair.1)
            }
            EventKind::ControlMeasurement { outcome } => {
                write!(f, "measure-control outcome={outcome}")
            }
            EventKind::MessageSent(msg) => {
                write!(
                    f,
                    "send to={} {} bits={}",
                    msg.recipient,
                    msg.payload,
                    msg.payload.bit_count()
                )
            }
            EventKind::CorrectionApplied { target, op } => {
                write!(f, "correct target={target} op={op}")
            }
        }
    }
}

/// Ordered record of everything that happened in one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    mode: SessionMode,
    events: Vec<Event>,
}

impl Transcript {
    pub fn mode(&self) -> SessionMode {
        self.mode
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn messages(&self) -> impl Iterator<Item = &ClassicalMessage> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::MessageSent(msg) => Some(msg),
            _ => None,
        })
    }

    /// Total classical cost in transmitted bits (a broadcast counts once per
    /// unicast).
    pub fn classical_bits(&self) -> u32 {
        self.messages().map(|m| m.payload.bit_count()).sum()
    }

    /// One event per line: seq, party, event-kind, payload.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.to_string());
            out.push('\n');
        }
        out
    }

    /// Check that every correction event is preceded by receipt of all
    /// messages its table lookup requires: the Bell index for the relevant
    /// pair, plus Charlie's bit in controlled mode.
    pub fn validate(&self) -> Result<()> {
        let mut alice_has_bell = false;
        let mut alice_has_control = false;
        let mut bob_has_bell = false;
        let mut bob_has_control = false;
        for event in &self.events {
            match &event.kind {
                EventKind::MessageSent(msg) => match (msg.recipient, msg.payload) {
                    (Party::Alice, MessagePayload::BellOutcome(_)) => alice_has_bell = true,
                    (Party::Alice, MessagePayload::ControlBit(_)) => alice_has_control = true,
                    (Party::Bob, MessagePayload::BellOutcome(_)) => bob_has_bell = true,
                    (Party::Bob, MessagePayload::ControlBit(_)) => bob_has_control = true,
                    _ => {}
                },
                EventKind::CorrectionApplied { .. } => {
                    let (has_bell, has_control) = match event.party {
                        Party::Alice => (alice_has_bell, alice_has_control),
                        Party::Bob => (bob_has_bell, bob_has_control),
                        Party::Charlie => (false, false),
                    };
                    let mut missing = Vec::new();
                    if !has_bell {
                        missing.push("the partner's Bell index");
                    }
                    if self.mode == SessionMode::Controlled && !has_control {
                        missing.push("the control bit");
                    }
                    if !missing.is_empty() {
                        return Err(ChoreographyError::CausalOrderViolation {
                            seq: event.seq,
                            party: event.party,
                            missing: missing.join(" and "),
                        });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Final state of a session: the transcript plus the corrected fidelities.
#[derive(Debug, Clone)]
pub struct SessionResult {
    pub transcript: Transcript,
    pub outcome: ProtocolOutcome,
    /// Recovery Alice applied to A₂.
    pub correction_a2: Pauli,
    /// Recovery Bob applied to B₁.
    pub correction_b1: Pauli,
    /// Fidelity of Bob's corrected B₁ against χ_a.
    pub fidelity_b1: f64,
    /// Fidelity of Alice's corrected A₂ against χ_b.
    pub fidelity_a2: f64,
}

/// Knowledge a receiver has when it performs its correction; missing data
/// falls back to the do-nothing defaults.
#[derive(Default)]
struct Received {
    bell: Option<BellIndex>,
    control: Option<u8>,
}

impl Received {
    fn bell_or_default(&self) -> BellIndex {
        self.bell
            .unwrap_or_else(|| BellIndex::new(1).expect("valid index"))
    }

    fn control_or_default(&self) -> u8 {
        self.control.unwrap_or(0)
    }
}

fn push_event(events: &mut Vec<Event>, party: Party, kind: EventKind) {
    events.push(Event {
        seq: events.len() as u32,
        party,
        kind,
    });
}

fn run_session_inner(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    mode: SessionMode,
    forced: Option<ProtocolOutcome>,
    seed: u64,
    deleted: Option<MessageSlot>,
) -> Result<SessionResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let round = match forced {
        Some(outcome) => execute_round_forced(chi_a, chi_b, outcome)?,
        None => execute_round_sampled(chi_a, chi_b, &mut rng)?,
    };
    let outcome = round.outcome;

    let mut events = Vec::new();
    push_event(
        &mut events,
        Party::Alice,
        EventKind::BellMeasurement {
            pair: (Particle::A, Particle::A1),
            outcome: outcome.i,
        },
    );
    push_event(
        &mut events,
        Party::Bob,
        EventKind::BellMeasurement {
            pair: (Particle::B2, Particle::B),
            outcome: outcome.j,
        },
    );
    push_event(
        &mut events,
        Party::Charlie,
        EventKind::ControlMeasurement { outcome: outcome.k },
    );

    let mut alice = Received::default();
    let mut bob = Received::default();
    let slots: &[MessageSlot] = match mode {
        SessionMode::Controlled => &[
            MessageSlot::AliceBell,
            MessageSlot::BobBell,
            MessageSlot::ControlToAlice,
            MessageSlot::ControlToBob,
        ],
        SessionMode::ControlWithheld | SessionMode::ControlWithheldGuess => {
            &[MessageSlot::AliceBell, MessageSlot::BobBell]
        }
    };
    for &slot in slots {
        if deleted == Some(slot) {
            continue;
        }
        let (sender, recipient, payload) = match slot {
            MessageSlot::AliceBell => (
                Party::Alice,
                Party::Bob,
                MessagePayload::BellOutcome(outcome.i),
            ),
            MessageSlot::BobBell => (
                Party::Bob,
                Party::Alice,
                MessagePayload::BellOutcome(outcome.j),
            ),
            MessageSlot::ControlToAlice => (
                Party::Charlie,
                Party::Alice,
                MessagePayload::ControlBit(outcome.k),
            ),
            MessageSlot::ControlToBob => (
                Party::Charlie,
                Party::Bob,
                MessagePayload::ControlBit(outcome.k),
            ),
        };
        let received = match recipient {
            Party::Alice => &mut alice,
            _ => &mut bob,
        };
        match payload {
            MessagePayload::BellOutcome(i) => received.bell = Some(i),
            MessagePayload::ControlBit(k) => received.control = Some(k),
        }
        let message = ClassicalMessage {
            seq: events.len() as u32,
            sender,
            recipient,
            payload,
        };
        push_event(&mut events, sender, EventKind::MessageSent(message));
    }

    if mode == SessionMode::ControlWithheldGuess {
        // Alice guesses first, then Bob; both draws come from the session
        // generator, so transcripts stay seed-deterministic.
        use rand::Rng;
        alice.control.get_or_insert_with(|| rng.random_range(0..=1));
        bob.control.get_or_insert_with(|| rng.random_range(0..=1));
    }

    let table = CorrectionTable::standard();
    let correction_a2 = table.recovery_a2_for(alice.bell_or_default(), alice.control_or_default());
    let correction_b1 = table.recovery_b1_for(bob.bell_or_default(), bob.control_or_default());
    push_event(
        &mut events,
        Party::Alice,
        EventKind::CorrectionApplied {
            target: Particle::A2,
            op: correction_a2,
        },
    );
    push_event(
        &mut events,
        Party::Bob,
        EventKind::CorrectionApplied {
            target: Particle::B1,
            op: correction_b1,
        },
    );

    let corrected_a2 = round
        .pre_correction_a2
        .apply(&correction_a2.operator(QubitId::new(0)))
        .map_err(ProtocolError::from)?;
    let corrected_b1 = round
        .pre_correction_b1
        .apply(&correction_b1.operator(QubitId::new(0)))
        .map_err(ProtocolError::from)?;
    let fidelity_a2 = corrected_a2
        .fidelity(&chi_b.state())
        .map_err(ProtocolError::from)?;
    let fidelity_b1 = corrected_b1
        .fidelity(&chi_a.state())
        .map_err(ProtocolError::from)?;

    Ok(SessionResult {
        transcript: Transcript { mode, events },
        outcome,
        correction_a2,
        correction_b1,
        fidelity_b1,
        fidelity_a2,
    })
}

/// Run one session with sampled measurement outcomes. The transcript is
/// validated against the correction-after-message invariant before being
/// returned.
pub fn run_session(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    mode: SessionMode,
    seed: u64,
) -> Result<SessionResult> {
    let result = run_session_inner(chi_a, chi_b, mode, None, seed, None)?;
    result.transcript.validate()?;
    Ok(result)
}

/// Run one session with every measurement forced to `outcome`.
pub fn run_session_forced(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    mode: SessionMode,
    outcome: ProtocolOutcome,
) -> Result<SessionResult> {
    let result = run_session_inner(chi_a, chi_b, mode, Some(outcome), 0, None)?;
    result.transcript.validate()?;
    Ok(result)
}

/// Controlled-mode session with one message slot deleted; the receiver falls
/// back to the defaults for the missing datum. The transcript is deliberately
/// left unvalidated since the deletion breaks the causal invariant.
pub fn run_session_with_deleted_message(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    deleted: MessageSlot,
    seed: u64,
) -> Result<SessionResult> {
    run_session_inner(
        chi_a,
        chi_b,
        SessionMode::Controlled,
        None,
        seed,
        Some(deleted),
    )
}

/// Forced-outcome variant of the deleted-message replay.
pub fn run_session_forced_with_deleted_message(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
    deleted: MessageSlot,
    outcome: ProtocolOutcome,
) -> Result<SessionResult> {
    run_session_inner(
        chi_a,
        chi_b,
        SessionMode::Controlled,
        Some(outcome),
        0,
        Some(deleted),
    )
}

/// Average post-correction fidelities over all 32 outcomes (Born weights)
/// when the receivers never learn Charlie's bit and always apply the k = 0
/// corrections. Returns (mean B₁ fidelity vs χ_a, mean A₂ fidelity vs χ_b).
pub fn expected_uncontrolled_fidelity(
    chi_a: &InputQubit,
    chi_b: &InputQubit,
) -> Result<(f64, f64)> {
    let table = CorrectionTable::standard();
    let mut mean_b1 = 0.0;
    let mut mean_a2 = 0.0;
    for outcome in ProtocolOutcome::all() {
        let round = execute_round_forced(chi_a, chi_b, outcome)?;
        let recovery_b1 = table.recovery_b1_for(outcome.i, 0);
        let recovery_a2 = table.recovery_a2_for(outcome.j, 0);
        let fidelity_b1 = round
            .pre_correction_b1
            .apply(&recovery_b1.operator(QubitId::new(0)))
            .map_err(ProtocolError::from)?
            .fidelity(&chi_a.state())
            .map_err(ProtocolError::from)?;
        let fidelity_a2 = round
            .pre_correction_a2
            .apply(&recovery_a2.operator(QubitId::new(0)))
            .map_err(ProtocolError::from)?
            .fidelity(&chi_b.state())
            .map_err(ProtocolError::from)?;
        mean_b1 += round.joint_probability * fidelity_b1;
        mean_a2 += round.joint_probability * fidelity_a2;
    }
    Ok((mean_b1, mean_a2))
}
