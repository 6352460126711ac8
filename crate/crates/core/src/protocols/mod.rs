//! Concrete protocols for `Ũ_θ = exp(i(θ/2) σ_z⊗σ_z)`:
//!
//! * a probabilistic two-round protocol consuming `|φ_α⟩`, which implements
//!   `Ũ_θ` on success and `Ũ_{θ′}` on failure;
//! * a deterministic two-round protocol implementing any `Ũ_φ` with one Bell
//!   pair;
//! * their four-round composite, which always implements `Ũ_θ`;
//! * the n-shot batch with a shared Bell-pair budget;
//! * the full protocol starting from a single maximally entangled resource,
//!   compared exactly against `|Ψ_{Ũ_θ}⟩^{⊗n}`.
//!
//! Inputs are pure states holding qubit registers `A` (Alice) and `B` (Bob)
//! plus any reference registers, which no party may touch.

mod full;
mod nshot;
mod single;

use serde::Serialize;

pub use full::{full_mn, full_mn_exact, FullMnReport, FullMnSample, FULL_MN_LIMIT};
pub use nshot::{epsilon_exact, estimate_epsilon, nshot_run, plus_plus, EpsilonEstimate, Event, NShotReport};
pub use single::{
    chi_basis, composite_protocol, composite_single_shot, deterministic_one_ebit, first_half_protocol, gate_fidelity,
    one_ebit_protocol, prob_first_half, residual_angle,
};

use crate::locc::{ResourceLedger, Transcript};
use crate::state::PureState;

/// How measurement outcomes are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// One path, sampled from the stream for `(seed, trial)`.
    Sampled { seed: u64, trial: u64 },
    /// Every path with nonzero probability.
    Exhaustive,
}

/// Register labels and outcome keys for one input pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairLabels {
    pub a: String,
    pub b: String,
    pub a0: String,
    pub b0: String,
    /// Standby Bell pair halves (Alice, Bob).
    pub c: String,
    pub d: String,
    suffix: String,
}

impl Default for PairLabels {
    fn default() -> Self {
        Self::with_suffix("")
    }
}

impl PairLabels {
    /// Labels for pair `i` of a batch: `A_i`, `B_i`, `A0_i`, ….
    pub fn indexed(i: usize) -> Self {
        Self::with_suffix(&format!("_{i}"))
    }

    fn with_suffix(suffix: &str) -> Self {
        let l = |base: &str| format!("{base}{suffix}");
        Self {
            a: l("A"),
            b: l("B"),
            a0: l("A0"),
            b0: l("B0"),
            c: l("C"),
            d: l("D"),
            suffix: suffix.to_string(),
        }
    }

    /// Outcome key `name` for this pair.
    pub fn key(&self, name: &str) -> String {
        format!("{name}{}", self.suffix)
    }

    /// Reference registers `RA`, `RB` for this pair.
    pub fn references(&self) -> (String, String) {
        (format!("RA{}", self.suffix), format!("RB{}", self.suffix))
    }
}

/// Outcome keys: Alice's `±` result, Bob's `χ` result, and the two bits of
/// the one-ebit repair.
pub const KEY_ALICE: &str = "s1";
pub const KEY_BOB: &str = "s2";
pub const KEY_REPAIR_ALICE: &str = "e1";
pub const KEY_REPAIR_BOB: &str = "e2";

/// Result of one execution path of a single-pair protocol.
#[derive(Clone, Debug)]
pub struct ShotOutcome {
    /// Whether the probabilistic half succeeded (always `true` for the
    /// one-ebit protocol).
    pub success: bool,
    /// `θ′` when the probabilistic half failed.
    pub residual_angle: Option<f64>,
    /// The angle `φ` with `post_state = Ũ_φ|ψ⟩` up to phase.
    pub applied_angle: f64,
    pub post_state: PureState,
    pub ledger: ResourceLedger,
    pub transcript: Transcript,
}
