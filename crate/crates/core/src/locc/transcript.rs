use serde::Serialize;
use serde_json::json;

use super::protocol::{ClassicalRecord, Party};
use crate::state::PureState;

/// Entanglement bookkeeping for one run, in ebits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResourceLedger {
    pub ebits_consumed: f64,
    pub ebits_returned: f64,
    pub net_cost: f64,
}

impl ResourceLedger {
    pub fn new(ebits_consumed: f64, ebits_returned: f64) -> Self {
        Self {
            ebits_consumed,
            ebits_returned,
            net_cost: ebits_consumed - ebits_returned,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeRecord {
    pub step: usize,
    pub key: String,
    pub actor: Party,
    pub outcome: usize,
    /// Conditional probability of this outcome given the path so far.
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Message {
    pub round: usize,
    pub sender: Party,
    pub keys: Vec<String>,
    pub bits: String,
}

/// Record of one execution path.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub executed_steps: Vec<usize>,
    pub outcomes: Vec<OutcomeRecord>,
    pub messages: Vec<Message>,
    pub rounds_used: usize,
    pub final_state: PureState,
    pub ledger: ResourceLedger,
    /// Probability of this path (product of the outcome probabilities).
    pub probability: f64,
    pub record: ClassicalRecord,
}

impl Transcript {
    pub fn outcome(&self, key: &str) -> Option<usize> {
        self.record.get(key)
    }

    /// `{"rounds", "outcomes", "messages", "net_cost_ebits"}`
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rounds": self.rounds_used,
            "outcomes": self.outcomes,
            "messages": self.messages,
            "net_cost_ebits": self.ledger.net_cost,
        })
    }
}

/// Number of rounds: maximal runs of consecutive messages from one sender.
pub fn count_rounds(t: &Transcript) -> usize {
    let mut rounds = 0;
    let mut last = None;
    for m in &t.messages {
        if last != Some(m.sender) {
            rounds += 1;
            last = Some(m.sender);
        }
    }
    rounds
}
