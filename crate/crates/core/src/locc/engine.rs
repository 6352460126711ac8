use rand::Rng;

use super::protocol::{Action, ClassicalRecord, Entry, Party, Protocol, ProtocolStep};
use super::transcript::{Message, OutcomeRecord, ResourceLedger, Transcript};
use crate::error::{Error, Result};
use crate::gates;
use crate::linalg;
use crate::rng::trial_rng;
use crate::state::PureState;

/// Default cap on the number of leaves in exhaustive enumeration.
pub const DEFAULT_BRANCH_LIMIT: usize = 1 << 16;

/// Outcomes with probability below this are treated as impossible.
const IMPOSSIBLE: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
pub struct Engine {
    pub branch_limit: usize,
}

impl Default for Engine {
    fn default() -> Self {
        Self {
            branch_limit: DEFAULT_BRANCH_LIMIT,
        }
    }
}

#[derive(Clone)]
struct Path {
    state: PureState,
    record: ClassicalRecord,
    outcomes: Vec<OutcomeRecord>,
    messages: Vec<Message>,
    executed: Vec<usize>,
    standby_used: usize,
    probability: f64,
}

enum Flow {
    Continue,
    Branch(Vec<(usize, f64, PureState)>),
}

impl Engine {
    pub fn with_branch_limit(branch_limit: usize) -> Self {
        Self { branch_limit }
    }

    /// One sampled execution. Outcome probabilities are computed exactly
    /// from the amplitudes before sampling.
    pub fn run_sampled<R: Rng + ?Sized>(
        &self,
        protocol: &Protocol,
        input: &PureState,
        rng: &mut R,
    ) -> Result<Transcript> {
        let mut path = Path::start(input)?;
        for idx in 0..protocol.steps.len() {
            match step(protocol, idx, &mut path)? {
                Flow::Continue => {}
                Flow::Branch(options) => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut chosen = options.len() - 1;
                    for (i, (_, p, _)) in options.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            chosen = i;
                            break;
                        }
                    }
                    let (outcome, p, state) = options.into_iter().nth(chosen).unwrap();
                    path.commit(protocol, idx, outcome, p, state);
                }
            }
        }
        path.finish(protocol)
    }

    /// Every execution path with its probability.
    pub fn run_all_branches(&self, protocol: &Protocol, input: &PureState) -> Result<Vec<(f64, Transcript)>> {
        let mut leaves = Vec::new();
        self.explore(protocol, 0, Path::start(input)?, &mut leaves)?;
        Ok(leaves)
    }

    fn explore(
        &self,
        protocol: &Protocol,
        from: usize,
        mut path: Path,
        leaves: &mut Vec<(f64, Transcript)>,
    ) -> Result<()> {
        for idx in from..protocol.steps.len() {
            if let Flow::Branch(options) = step(protocol, idx, &mut path)? {
                let live: Vec<_> = options.into_iter().filter(|o| o.1 > IMPOSSIBLE).collect();
                let n = live.len();
                for (i, (outcome, p, state)) in live.into_iter().enumerate() {
                    let mut child = if i + 1 == n {
                        std::mem::replace(&mut path, Path::placeholder())
                    } else {
                        path.clone()
                    };
                    child.commit(protocol, idx, outcome, p, state);
                    self.explore(protocol, idx + 1, child, leaves)?;
                }
                return Ok(());
            }
        }
        if leaves.len() >= self.branch_limit {
            return Err(Error::BranchLimit(self.branch_limit));
        }
        let t = path.finish(protocol)?;
        leaves.push((t.probability, t));
        Ok(())
    }
}

/// One sampled run with the stream for `(seed, trial 0)`.
pub fn run_sampled(protocol: &Protocol, input: &PureState, seed: u64) -> Result<Transcript> {
    Engine::default().run_sampled(protocol, input, &mut trial_rng(seed, 0))
}

pub fn run_all_branches(protocol: &Protocol, input: &PureState) -> Result<Vec<(f64, Transcript)>> {
    Engine::default().run_all_branches(protocol, input)
}

impl Path {
    fn start(input: &PureState) -> Result<Self> {
        Ok(Self {
            state: input.renormalize()?,
            record: ClassicalRecord::default(),
            outcomes: Vec::new(),
            messages: Vec::new(),
            executed: Vec::new(),
            standby_used: 0,
            probability: 1.0,
        })
    }

    fn placeholder() -> Self {
        Self {
            state: PureState::basis(vec![], &[]).expect("scalar state"),
            record: ClassicalRecord::default(),
            outcomes: Vec::new(),
            messages: Vec::new(),
            executed: Vec::new(),
            standby_used: 0,
            probability: 0.0,
        }
    }

    fn commit(&mut self, protocol: &Protocol, idx: usize, outcome: usize, p: f64, state: PureState) {
        let s = &protocol.steps[idx];
        if let Action::Measure { key, basis, .. } = &s.action {
            self.record.entries.insert(
                key.clone(),
                Entry {
                    owner: s.actor,
                    value: outcome,
                    outcomes: basis.len(),
                    shared: false,
                },
            );
            self.outcomes.push(OutcomeRecord {
                step: idx,
                key: key.clone(),
                actor: s.actor,
                outcome,
                probability: p,
            });
        }
        self.state = state;
        self.state.rescale_to_unit();
        self.probability *= p;
        self.executed.push(idx);
    }

    fn finish(self, protocol: &Protocol) -> Result<Transcript> {
        let returned = (protocol.standby_pairs - self.standby_used) as f64;
        Ok(Transcript {
            executed_steps: self.executed,
            outcomes: self.outcomes,
            rounds_used: self.messages.len(),
            messages: self.messages,
            final_state: self.state.renormalize()?,
            ledger: ResourceLedger::new(protocol.consumed_ebits, returned),
            probability: self.probability,
            record: self.record,
        })
    }
}

fn check_owned(protocol: &Protocol, actor: Party, labels: &[String]) -> Result<()> {
    for l in labels {
        match protocol.owner(l) {
            Some(p) if p == actor => {}
            Some(p) => return Err(Error::Locality(format!("{actor} acted on `{l}`, which belongs to {p}"))),
            None => return Err(Error::Locality(format!("{actor} acted on `{l}`, which no party holds"))),
        }
    }
    Ok(())
}

fn step(protocol: &Protocol, idx: usize, path: &mut Path) -> Result<Flow> {
    let ProtocolStep { actor, guard, action } = &protocol.steps[idx];
    let actor = *actor;
    if let Some(g) = guard {
        if !g(&path.record.view(actor)) {
            return Ok(Flow::Continue);
        }
    }
    match action {
        Action::LocalUnitary { targets, gate } => {
            check_owned(protocol, actor, targets)?;
            path.state.apply_in_place(gate, targets)?;
        }
        Action::ConditionedUnitary { targets, rule } => {
            check_owned(protocol, actor, targets)?;
            if let Some(gate) = rule(&path.record.view(actor)) {
                linalg::ensure_unitary(&gate)?;
                path.state.apply_in_place(&gate, targets)?;
            }
        }
        Action::Measure { register, basis, key } => {
            check_owned(protocol, actor, std::slice::from_ref(register))?;
            if path.record.entries.contains_key(key) {
                return Err(Error::Internal(format!("outcome key `{key}` reused")));
            }
            let dim = path.state.layout().dim_of(register)?;
            if dim != basis.len() {
                return Err(Error::InvalidBasis(format!(
                    "{}-element basis on `{register}` of dimension {dim}",
                    basis.len()
                )));
            }
            let mut options = Vec::with_capacity(basis.len());
            for (k, v) in basis.iter().enumerate() {
                // renormalized only once the outcome is committed
                let projected = path.state.project_out(register, v)?;
                let p = projected.norm().powi(2);
                options.push((k, p, projected));
            }
            return Ok(Flow::Branch(options));
        }
        Action::SendMessage { keys } => {
            let mut sent = Vec::new();
            let mut bits = String::new();
            for k in keys {
                let Some(entry) = path.record.entries.get_mut(k) else {
                    continue;
                };
                if entry.owner != actor && !entry.shared {
                    return Err(Error::Locality(format!("{actor} cannot send unknown `{k}`")));
                }
                entry.shared = true;
                let width = usize::BITS - (entry.outcomes.max(2) - 1).leading_zeros();
                bits.push_str(&format!("{:0w$b}", entry.value, w = width as usize));
                sent.push(k.clone());
            }
            if !sent.is_empty() {
                path.messages.push(Message {
                    round: path.messages.len() + 1,
                    sender: actor,
                    keys: sent,
                    bits,
                });
            }
        }
        Action::DrawStandbyPair { alice, bob } => {
            if path.standby_used >= protocol.standby_pairs {
                return Err(Error::BudgetExhausted(format!(
                    "all {} standby pairs already used",
                    protocol.standby_pairs
                )));
            }
            path.standby_used += 1;
            let pair = gates::max_entangled_on(2, alice, bob)?;
            path.state = path.state.tensor(&pair)?;
        }
    }
    path.executed.push(idx);
    Ok(Flow::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::protocol::{computational_basis, hadamard_basis};
    use crate::state::Register;

    fn plus() -> PureState {
        PureState::basis(vec![Register::qubit("A")], &[0])
            .unwrap()
            .apply_on(&hadamard(), &["A"])
            .unwrap()
    }

    fn hadamard() -> linalg::ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        linalg::ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                linalg::c(s, 0.0),
                linalg::c(s, 0.0),
                linalg::c(s, 0.0),
                linalg::c(-s, 0.0),
            ],
        )
    }

    fn measure_a() -> Protocol {
        let mut p = Protocol::new(&[("A", Party::Alice)]);
        p.push(ProtocolStep::measure(Party::Alice, "A", computational_basis(2), "m").unwrap());
        p.push(ProtocolStep::send(Party::Alice, vec!["m".into()]));
        p
    }

    #[test]
    fn measuring_plus_gives_fair_branches() {
        let leaves = run_all_branches(&measure_a(), &plus()).unwrap();
        assert_eq!(leaves.len(), 2);
        for (p, t) in &leaves {
            assert!((p - 0.5).abs() < 1e-15);
            assert_eq!(t.rounds_used, 1);
            assert!((t.outcomes[0].probability - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_replay_is_deterministic() {
        let a = run_sampled(&measure_a(), &plus(), 11).unwrap();
        let b = run_sampled(&measure_a(), &plus(), 11).unwrap();
        assert_eq!(a.outcome("m"), b.outcome("m"));
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn trivial_protocol_is_single_branch() {
        let mut p = Protocol::new(&[("A", Party::Alice)]);
        p.push(ProtocolStep::unitary(Party::Alice, &["A"], linalg::identity(2)).unwrap());
        let leaves = run_all_branches(&p, &plus()).unwrap();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].0, 1.0);
        assert_eq!(leaves[0].1.rounds_used, 0);
        assert_eq!(super::super::count_rounds(&leaves[0].1), 0);
    }

    #[test]
    fn locality_is_enforced() {
        let mut p = Protocol::new(&[("A", Party::Alice)]);
        p.push(ProtocolStep::unitary(Party::Bob, &["A"], linalg::identity(2)).unwrap());
        assert!(matches!(run_all_branches(&p, &plus()), Err(Error::Locality(_))));

        let mut p = measure_a();
        p.push(ProtocolStep::send(Party::Bob, vec!["m".into()]));
        // Bob re-sending what he was told is allowed
        assert!(run_all_branches(&p, &plus()).is_ok());

        let mut p = Protocol::new(&[("A", Party::Alice)]);
        p.push(ProtocolStep::measure(Party::Alice, "A", computational_basis(2), "m").unwrap());
        p.push(ProtocolStep::send(Party::Bob, vec!["m".into()]));
        assert!(matches!(run_all_branches(&p, &plus()), Err(Error::Locality(_))));
    }

    #[test]
    fn guards_use_the_actor_view() {
        // Bob's guard reads Alice's bit before it was sent: never true.
        let mut p = Protocol::new(&[("A", Party::Alice), ("B", Party::Bob)]);
        p.push(ProtocolStep::measure(Party::Alice, "A", hadamard_basis(), "m").unwrap());
        p.push(
            ProtocolStep::unitary(Party::Bob, &["B"], linalg::pauli_x())
                .unwrap()
                .when(|v| v.is("m", 0)),
        );
        let input = plus()
            .tensor(&PureState::basis(vec![Register::qubit("B")], &[0]).unwrap())
            .unwrap();
        let leaves = run_all_branches(&p, &input).unwrap();
        // |+⟩ measured in ± gives outcome 0 with certainty; the zero branch is dropped
        assert_eq!(leaves.len(), 1);
        let zero = PureState::basis(vec![Register::qubit("B")], &[0]).unwrap();
        assert!((leaves[0].1.final_state.overlap(&zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_limit_and_standby_budget() {
        let mut p = Protocol::new(&[("A", Party::Alice)]);
        p.push(ProtocolStep::measure(Party::Alice, "A", computational_basis(2), "m").unwrap());
        let e = Engine::with_branch_limit(1);
        assert!(matches!(e.run_all_branches(&p, &plus()), Err(Error::BranchLimit(1))));

        let mut p = Protocol::new(&[]).with_resources(1.0, 1);
        p.push(ProtocolStep::draw_pair(Party::Alice, "C", "D"));
        p.push(ProtocolStep::draw_pair(Party::Alice, "E", "F"));
        assert!(matches!(run_all_branches(&p, &plus()), Err(Error::BudgetExhausted(_))));
    }

    #[test]
    fn ledger_counts_unused_standby_as_returned() {
        let p = Protocol::new(&[]).with_resources(2.5, 2);
        let t = run_sampled(&p, &plus(), 0).unwrap();
        assert_eq!(t.ledger.ebits_returned, 2.0);
        assert_eq!(t.ledger.net_cost, 0.5);
    }
}
