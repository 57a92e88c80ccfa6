//! Bidirectional controlled teleportation over the five-qubit Brown state.
//!
//! Alice and Bob each hold an unknown qubit and swap them through a shared
//! five-qubit maximally entangled channel, under the control of a supervisor
//! (Charlie) whose single-bit measurement outcome is required to finish
//! either correction. The crate provides:
//!
//! - [`protocol`]: the channel state, measurement bases, Alice's local
//!   unitary, and a single-round executor (forced or sampled outcomes);
//! - [`correction`]: derivation, verification and serialization of the full
//!   32-entry outcome → recovery-operator table;
//! - [`choreography`]: the three parties as communicating state machines
//!   exchanging classical messages, with transcripts and control
//!   quantification;
//! - [`cli`]: the `bqct` command-line interface (verify / table / run /
//!   sweep).

pub mod choreography;
pub mod cli;
pub mod correction;
pub mod protocol;
