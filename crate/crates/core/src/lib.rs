//! Exact simulation and analysis of entanglement-assisted LOCC protocols that
//! implement the two-qubit controlled-phase gates `U_θ` and `Ũ_θ`.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`], [`state`], [`measures`], [`matrix_io`]: dense complex linear
//!   algebra, labeled registers, entropies and distances.
//! * [`gates`]: gate and resource-state constructors.
//! * [`locc`]: a two-party execution engine with classical messages, round
//!   counting, branch enumeration and entanglement bookkeeping.
//! * [`protocols`]: the probabilistic first half, the deterministic one-ebit
//!   protocol, their composite, the n-shot batch and the full protocol that
//!   starts from one maximally entangled resource.
//! * [`cost`]: closed-form cost functions and the round/cost trade-off report.
//! * [`markov`]: Petz recovery channels, Cesaro fixed points and the
//!   Markovianizing cost that lower-bounds two-round protocols.
//! * [`typicality`]: weakly typical sets, the projected resource state and
//!   dilution feasibility by majorization.

pub mod cost;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod locc;
pub mod markov;
pub mod matrix_io;
pub mod measures;
pub mod protocols;
pub mod rng;
pub mod state;
pub mod typicality;

pub use error::{Error, Result};
pub use gates::{GateKind, GateSelector, GateSpec};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use state::{DensityOperator, Layout, PureState, Register};
