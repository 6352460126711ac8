//! Two-party LOCC execution: local unitaries, projective measurements,
//! classical messages and standby entanglement, run either along one
//! sampled path or across every branch.
//!
//! A round is one transmitted message. Parties may only touch registers they
//! own and may only condition on outcomes they produced or were sent.

mod engine;
mod protocol;
mod transcript;

pub use engine::{run_all_branches, run_sampled, Engine, DEFAULT_BRANCH_LIMIT};
pub use protocol::{
    computational_basis, hadamard_basis, Action, ClassicalRecord, ClassicalView, Party, Protocol, ProtocolStep, Rule,
};
pub use transcript::{count_rounds, Message, OutcomeRecord, ResourceLedger, Transcript};
