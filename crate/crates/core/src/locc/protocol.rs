use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, EXACT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
        })
    }
}

/// A classical decision taken by one party from what it knows.
pub type Rule<T> = Arc<dyn Fn(&ClassicalView<'_>) -> T + Send + Sync>;

#[derive(Clone, Debug)]
pub(crate) struct Entry {
    pub owner: Party,
    pub value: usize,
    pub outcomes: usize,
    pub shared: bool,
}

/// Measurement outcomes recorded so far, with who knows what.
#[derive(Clone, Debug, Default)]
pub struct ClassicalRecord {
    pub(crate) entries: BTreeMap<String, Entry>,
}

impl ClassicalRecord {
    pub fn view(&self, party: Party) -> ClassicalView<'_> {
        ClassicalView { party, record: self }
    }

    /// Outcome regardless of who holds it (for post-hoc analysis only).
    pub fn get(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.value)
    }
}

/// One party's window onto the classical record: its own outcomes plus
/// everything it has been sent.
#[derive(Clone, Copy)]
pub struct ClassicalView<'a> {
    party: Party,
    record: &'a ClassicalRecord,
}

impl ClassicalView<'_> {
    pub fn party(&self) -> Party {
        self.party
    }

    pub fn get(&self, key: &str) -> Option<usize> {
        self.record
            .entries
            .get(key)
            .filter(|e| e.owner == self.party || e.shared)
            .map(|e| e.value)
    }

    /// `true` iff the outcome is known and equals `value`.
    pub fn is(&self, key: &str, value: usize) -> bool {
        self.get(key) == Some(value)
    }
}

/// What a step does.
#[derive(Clone)]
pub enum Action {
    LocalUnitary {
        targets: Vec<String>,
        gate: ComplexMatrix,
    },
    /// The rule picks a unitary (or nothing) from the actor's view.
    ConditionedUnitary {
        targets: Vec<String>,
        rule: Rule<Option<ComplexMatrix>>,
    },
    /// Projective measurement in an orthonormal basis; the register is
    /// removed from the state afterwards.
    Measure {
        register: String,
        basis: Vec<ComplexVector>,
        key: String,
    },
    /// Send the listed outcomes that exist. Skipped (no round) if none do.
    SendMessage {
        keys: Vec<String>,
    },
    /// Bring one standby Bell pair `(|00⟩+|11⟩)/√2` into the simulation.
    DrawStandbyPair {
        alice: String,
        bob: String,
    },
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::LocalUnitary { targets, .. } => write!(f, "LocalUnitary{targets:?}"),
            Action::ConditionedUnitary { targets, .. } => {
                write!(f, "ConditionedUnitary{targets:?}")
            }
            Action::Measure { register, key, .. } => write!(f, "Measure({register} -> {key})"),
            Action::SendMessage { keys } => write!(f, "SendMessage{keys:?}"),
            Action::DrawStandbyPair { alice, bob } => write!(f, "DrawStandbyPair({alice}, {bob})"),
        }
    }
}

#[derive(Clone)]
pub struct ProtocolStep {
    pub actor: Party,
    pub guard: Option<Rule<bool>>,
    pub action: Action,
}

impl fmt::Debug for ProtocolStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProtocolStep")
            .field("actor", &self.actor)
            .field("guarded", &self.guard.is_some())
            .field("action", &self.action)
            .finish()
    }
}

impl ProtocolStep {
    pub fn unitary(actor: Party, targets: &[&str], gate: ComplexMatrix) -> Result<Self> {
        linalg::ensure_unitary(&gate)?;
        Ok(Self::new(
            actor,
            Action::LocalUnitary {
                targets: owned(targets),
                gate,
            },
        ))
    }

    /// The rule's outputs are checked for unitarity when applied.
    pub fn conditioned<F>(actor: Party, targets: &[&str], rule: F) -> Self
    where
        F: Fn(&ClassicalView<'_>) -> Option<ComplexMatrix> + Send + Sync + 'static,
    {
        Self::new(
            actor,
            Action::ConditionedUnitary {
                targets: owned(targets),
                rule: Arc::new(rule),
            },
        )
    }

    /// Basis vectors may be unnormalized; they are normalized here and the
    /// resulting projectors must resolve the identity.
    pub fn measure(actor: Party, register: &str, basis: Vec<ComplexVector>, key: &str) -> Result<Self> {
        let basis = normalize_basis(basis)?;
        Ok(Self::new(
            actor,
            Action::Measure {
                register: register.to_string(),
                basis,
                key: key.to_string(),
            },
        ))
    }

    pub fn send(actor: Party, keys: Vec<String>) -> Self {
        Self::new(actor, Action::SendMessage { keys })
    }

    pub fn draw_pair(actor: Party, alice: &str, bob: &str) -> Self {
        Self::new(
            actor,
            Action::DrawStandbyPair {
                alice: alice.to_string(),
                bob: bob.to_string(),
            },
        )
    }

    fn new(actor: Party, action: Action) -> Self {
        Self {
            actor,
            guard: None,
            action,
        }
    }

    /// Execute only when `guard` holds in the actor's view.
    pub fn when<F>(mut self, guard: F) -> Self
    where
        F: Fn(&ClassicalView<'_>) -> bool + Send + Sync + 'static,
    {
        self.guard = Some(Arc::new(guard));
        self
    }

    pub fn when_rule(mut self, guard: Option<Rule<bool>>) -> Self {
        self.guard = guard;
        self
    }
}

fn owned(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn normalize_basis(basis: Vec<ComplexVector>) -> Result<Vec<ComplexVector>> {
    let dim = basis.first().map(|v| v.len()).unwrap_or(0);
    if dim == 0 || basis.len() != dim || basis.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidBasis(format!(
            "need {dim} vectors of length {dim}, got {}",
            basis.len()
        )));
    }
    let basis = basis
        .into_iter()
        .map(|v| {
            let n = linalg::vector_norm(&v);
            if n == 0.0 || !n.is_finite() {
                Err(Error::InvalidBasis("zero or non-finite vector".into()))
            } else {
                Ok(v / Complex64::new(n, 0.0))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut resolution = ComplexMatrix::zeros(dim, dim);
    for v in &basis {
        resolution += v * v.adjoint();
    }
    let defect = linalg::max_abs_diff(&resolution, &linalg::identity(dim));
    if defect > EXACT_TOL {
        return Err(Error::InvalidBasis(format!(
            "projectors do not resolve the identity (defect {defect:.3e})"
        )));
    }
    Ok(basis)
}

/// Computational basis `{|0⟩, …, |d−1⟩}`.
pub fn computational_basis(d: usize) -> Vec<ComplexVector> {
    (0..d)
        .map(|i| {
            let mut v = ComplexVector::zeros(d);
            v[i] = linalg::ONE;
            v
        })
        .collect()
}

/// `{|+⟩, |−⟩}`
pub fn hadamard_basis() -> Vec<ComplexVector> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ComplexVector::from_column_slice(&[linalg::c(s, 0.0), linalg::c(s, 0.0)]),
        ComplexVector::from_column_slice(&[linalg::c(s, 0.0), linalg::c(-s, 0.0)]),
    ]
}

/// An LOCC protocol: steps, register ownership and the resources it is
/// handed.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub(crate) steps: Vec<ProtocolStep>,
    pub(crate) owners: HashMap<String, Party>,
    /// Entanglement (ebits) handed to the protocol up front, including the
    /// standby pairs.
    pub consumed_ebits: f64,
    pub standby_pairs: usize,
}

impl Protocol {
    /// `owners` lists the registers each party may act on. Registers absent
    /// from it (reference systems) are untouchable. Labels of standby pairs
    /// are registered automatically.
    pub fn new(owners: &[(&str, Party)]) -> Self {
        Self {
            steps: Vec::new(),
            owners: owners.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            consumed_ebits: 0.0,
            standby_pairs: 0,
        }
    }

    pub fn with_resources(mut self, consumed_ebits: f64, standby_pairs: usize) -> Self {
        self.consumed_ebits = consumed_ebits;
        self.standby_pairs = standby_pairs;
        self
    }

    pub fn own(&mut self, label: &str, party: Party) {
        self.owners.insert(label.to_string(), party);
    }

    pub fn push(&mut self, step: ProtocolStep) {
        if let Action::DrawStandbyPair { alice, bob } = &step.action {
            self.owners.insert(alice.clone(), Party::Alice);
            self.owners.insert(bob.clone(), Party::Bob);
        }
        self.steps.push(step);
    }

    pub fn extend(&mut self, steps: impl IntoIterator<Item = ProtocolStep>) {
        for s in steps {
            self.push(s);
        }
    }

    pub fn steps(&self) -> &[ProtocolStep] {
        &self.steps
    }

    pub fn owner(&self, label: &str) -> Option<Party> {
        self.owners.get(label).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn supernormalized_basis_is_normalized() {
        let b = vec![
            ComplexVector::from_column_slice(&[c(2.0, 0.0), c(2.0, 0.0)]),
            ComplexVector::from_column_slice(&[c(3.0, 0.0), c(-3.0, 0.0)]),
        ];
        let step = ProtocolStep::measure(Party::Bob, "B0", b, "k").unwrap();
        if let Action::Measure { basis, .. } = step.action {
            assert!((linalg::vector_norm(&basis[0]) - 1.0).abs() < 1e-15);
        } else {
            unreachable!()
        }
    }

    #[test]
    fn non_orthogonal_basis_rejected() {
        let b = vec![
            ComplexVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
            ComplexVector::from_column_slice(&[c(1.0, 0.0), c(1.0, 0.0)]),
        ];
        assert!(ProtocolStep::measure(Party::Bob, "B0", b, "k").is_err());
        assert!(ProtocolStep::measure(Party::Bob, "B0", computational_basis(2)[..1].to_vec(), "k").is_err());
    }

    #[test]
    fn views_respect_knowledge() {
        let mut rec = ClassicalRecord::default();
        rec.entries.insert(
            "a".into(),
            Entry {
                owner: Party::Alice,
                value: 1,
                outcomes: 2,
                shared: false,
            },
        );
        assert_eq!(rec.view(Party::Alice).get("a"), Some(1));
        assert_eq!(rec.view(Party::Bob).get("a"), None);
        rec.entries.get_mut("a").unwrap().shared = true;
        assert!(rec.view(Party::Bob).is("a", 1));
    }
}
