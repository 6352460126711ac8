use std::sync::Arc;

use serde::Serialize;

use super::nshot::epsilon_exact;
use super::single::{
    first_half_alice, first_half_bob, guarded, repair_alice, repair_alice_final, repair_bob, residual_angle, send,
};
use super::{PairLabels, KEY_ALICE, KEY_BOB, KEY_REPAIR_ALICE, KEY_REPAIR_BOB};
use crate::cost;
use crate::error::{check_range, Error, Result};
use crate::gates;
use crate::linalg::{self, ComplexVector};
use crate::locc::{ClassicalView, Engine, Party, Protocol, ResourceLedger, Rule, Transcript};
use crate::rng::trial_rng;
use crate::state::PureState;
use crate::typicality::{self, Dilution};

/// Largest batch simulated exactly: each pair carries `A, R_A, B, R_B` plus
/// two resource qubits, so `n = 3` already needs an 18-qubit state.
pub const FULL_MN_LIMIT: usize = 3;

/// Leaves whose states agree to this overlap defect are merged.
const SAME_RAY: f64 = 1e-12;

/// Exact comparison of the full protocol against `|Ψ_{Ũ_θ}⟩^{⊗n}`.
#[derive(Clone, Debug, Serialize)]
pub struct FullMnReport {
    pub theta: f64,
    pub n: usize,
    pub delta: f64,
    /// Exact `‖ρ(M_n) − |Ψ⟩⟨Ψ|^{⊗n}‖₁`.
    pub lhs: f64,
    /// `‖M′(ω_n) − M′(φ^{⊗n})‖₁`, the first link of the triangle chain.
    pub resource_term: f64,
    /// `‖M′(φ^{⊗n}) − |Ψ⟩⟨Ψ|^{⊗n}‖₁`, the second link.
    pub protocol_term: f64,
    /// Probability of event (b) when the resource is exactly `|φ⟩^{⊗n}`,
    /// summed over branches.
    pub epsilon_n: f64,
    /// The same probability from the binomial tail.
    pub epsilon_n_binomial: f64,
    pub eps_prime: f64,
    /// `2ε_n + ε′_n`
    pub rhs: f64,
    /// `⟨Ψ^{⊗n}|ρ(M_n)|Ψ^{⊗n}⟩`
    pub fidelity: f64,
    /// `lhs ≤ rhs`
    pub holds: bool,
    /// `fidelity ≥ 1 − rhs`
    pub fidelity_bound_holds: bool,
    pub dilution: Dilution,
    /// Bell pairs held for repairs, `⌈n(1 − p_θ + δ)⌉`.
    pub bell_budget: usize,
    /// `log K_n = dilution bits + Bell budget`.
    pub log_k: u32,
    /// `⌈n(E_θ + 2δ)⌉`; `log_k` can exceed it by one because the two budgets
    /// are rounded up separately.
    pub log_k_nominal: u32,
    /// Expected ledger over branches.
    pub expected_ledger: ResourceLedger,
    pub leaves: usize,
    pub distinct_leaves: usize,
}

/// One sampled run of the full protocol.
#[derive(Clone, Debug)]
pub struct FullMnSample {
    pub final_state: PureState,
    /// Fidelity with `|Ψ_{Ũ_θ}⟩^{⊗n}`.
    pub fidelity: f64,
    pub ledger: ResourceLedger,
    pub event_b: bool,
    pub transcript: Transcript,
}

struct Setup {
    labels: Vec<PairLabels>,
    protocol: Protocol,
    /// `|Φ₂⟩^{A R_A} |Φ₂⟩^{B R_B}` for every pair.
    inputs: PureState,
    target: PureState,
    omega: typicality::Omega,
    phi_n: PureState,
    dilution: Dilution,
    budget: usize,
    threshold: usize,
    log_k_nominal: u32,
}

fn successes(v: &ClassicalView<'_>, keys: &[String]) -> usize {
    keys.iter().filter(|k| v.is(k, 0)).count()
}

fn setup(theta: f64, n: usize, delta: f64) -> Result<Setup> {
    check_range(
        "theta",
        theta,
        theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2,
        "(0, pi/2]",
    )?;
    check_range("delta", delta, delta > 0.0, "(0, inf)")?;
    if n == 0 || n > FULL_MN_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: FULL_MN_LIMIT,
        });
    }
    let alpha = theta.sqrt();
    let p = cost::success_prob(alpha, theta)?;
    let profile = cost::e_theta(theta)?;
    let labels: Vec<PairLabels> = (1..=n).map(PairLabels::indexed).collect();
    let resource_labels: Vec<(String, String)> = labels.iter().map(|l| (l.a0.clone(), l.b0.clone())).collect();

    let omega = typicality::omega_n_on(theta, delta, &resource_labels)?;
    let phi_n = typicality::phi_power_on(theta, &resource_labels)?;
    let dilution = typicality::dilution_with_bits(
        &omega.typical,
        (n as f64 * (omega.typical.entropy + delta)).ceil() as u32,
    )?;
    let budget = (n as f64 * (1.0 - p + delta)).ceil() as usize;
    let x = n as f64 * (p - delta);
    let threshold = if x <= 0.0 { 0 } else { x.ceil() as usize };

    let mut inputs = PureState::basis(vec![], &[])?;
    let mut target = PureState::basis(vec![], &[])?;
    let u = gates::u_tilde_theta(theta).matrix;
    for l in &labels {
        let (ra, rb) = l.references();
        let pair = gates::max_entangled_on(2, &l.a, &ra)?.tensor(&gates::max_entangled_on(2, &l.b, &rb)?)?;
        target = target.tensor(&pair.apply_on(&u, &[&l.a, &l.b])?)?;
        inputs = inputs.tensor(&pair)?;
    }

    let mut owners = Vec::new();
    for l in &labels {
        owners.extend([
            (l.a.as_str(), Party::Alice),
            (l.a0.as_str(), Party::Alice),
            (l.b.as_str(), Party::Bob),
            (l.b0.as_str(), Party::Bob),
        ]);
    }
    let bob_keys: Vec<String> = labels.iter().map(|l| l.key(KEY_BOB)).collect();
    let consumed = dilution.bits as f64 + budget as f64;
    let mut protocol = Protocol::new(&owners).with_resources(consumed, budget);
    for l in &labels {
        protocol.extend(first_half_alice(l)?);
    }
    protocol.push(send(Party::Alice, labels.iter().map(|l| l.key(KEY_ALICE)).collect()));
    for l in &labels {
        protocol.extend(first_half_bob(theta, alpha, l)?);
    }
    protocol.push(send(Party::Bob, bob_keys.clone()));

    // repair pair i only under event (a)
    let repair_angle = theta - residual_angle(theta, alpha);
    let guards: Vec<Rule<bool>> = labels
        .iter()
        .map(|l| {
            let own = l.key(KEY_BOB);
            let keys = bob_keys.clone();
            let g: Rule<bool> =
                Arc::new(move |v: &ClassicalView<'_>| v.is(&own, 1) && successes(v, &keys) >= threshold);
            g
        })
        .collect();
    for (l, g) in labels.iter().zip(&guards) {
        protocol.extend(guarded(repair_alice(l)?, g));
    }
    protocol.push(send(
        Party::Alice,
        labels.iter().map(|l| l.key(KEY_REPAIR_ALICE)).collect(),
    ));
    for (l, g) in labels.iter().zip(&guards) {
        protocol.extend(guarded(repair_bob(repair_angle, l)?, g));
    }
    protocol.push(send(Party::Bob, labels.iter().map(|l| l.key(KEY_REPAIR_BOB)).collect()));
    for (l, g) in labels.iter().zip(&guards) {
        protocol.extend(guarded(repair_alice_final(l), g));
    }

    Ok(Setup {
        labels,
        protocol,
        inputs,
        target,
        omega,
        phi_n,
        dilution,
        budget,
        threshold,
        log_k_nominal: (n as f64 * (profile.e_theta + 2.0 * delta)).ceil() as u32,
    })
}

/// Merge leaves that carry the same ray, summing their weights.
fn merge_leaves(leaves: Vec<(f64, Transcript)>) -> Result<Vec<(f64, PureState)>> {
    let mut merged: Vec<(f64, PureState)> = Vec::new();
    for (p, t) in leaves {
        let mut placed = false;
        for (w, s) in merged.iter_mut() {
            if s.overlap(&t.final_state)? > 1.0 - SAME_RAY {
                *w += p;
                placed = true;
                break;
            }
        }
        if !placed {
            merged.push((p, t.final_state));
        }
    }
    Ok(merged)
}

/// Amplitudes of `s` in the register order of `reference`.
fn aligned(s: &PureState, reference: &PureState) -> Result<ComplexVector> {
    let order: Vec<&str> = reference.layout().labels().collect();
    Ok(s.reorder(&order)?.amplitudes().clone())
}

fn distance(a: &[(f64, PureState)], b: &[(f64, PureState)], reference: &PureState) -> Result<f64> {
    let mut vectors = Vec::with_capacity(a.len() + b.len());
    for (w, s) in a {
        vectors.push((*w, aligned(s, reference)?));
    }
    for (w, s) in b {
        vectors.push((-*w, aligned(s, reference)?));
    }
    let terms: Vec<(f64, &ComplexVector)> = vectors.iter().map(|(w, v)| (*w, v)).collect();
    Ok(linalg::trace_norm_of_weighted_projectors(&terms))
}

/// Enumerate every branch of the full protocol for `n ≤ 3` and evaluate both
/// sides of the error chain exactly. The resource `|ω_n⟩` is prepared
/// directly; `dilution` records whether the allotted Bell pairs majorize it.
pub fn full_mn_exact(theta: f64, n: usize, delta: f64) -> Result<FullMnReport> {
    let s = setup(theta, n, delta)?;
    let engine = Engine::default();
    let actual = engine.run_all_branches(&s.protocol, &s.inputs.tensor(&s.omega.state)?)?;
    let ideal = engine.run_all_branches(&s.protocol, &s.inputs.tensor(&s.phi_n)?)?;

    let bob_keys: Vec<String> = s.labels.iter().map(|l| l.key(KEY_BOB)).collect();
    let epsilon_n: f64 = ideal
        .iter()
        .filter(|(_, t)| bob_keys.iter().filter(|k| t.outcome(k) == Some(0)).count() < s.threshold)
        .map(|(p, _)| p)
        .sum();
    let mut consumed = 0.0;
    let mut returned = 0.0;
    for (p, t) in &actual {
        consumed += p * t.ledger.ebits_consumed;
        returned += p * t.ledger.ebits_returned;
    }
    let leaves = actual.len();

    let actual = merge_leaves(actual)?;
    let ideal = merge_leaves(ideal)?;
    let target = [(1.0, s.target.clone())];
    let lhs = distance(&actual, &target, &s.target)?;
    let resource_term = distance(&actual, &ideal, &s.target)?;
    let protocol_term = distance(&ideal, &target, &s.target)?;
    let mut fidelity = 0.0;
    for (w, st) in &actual {
        fidelity += w * s.target.overlap(st)?;
    }
    let rhs = 2.0 * epsilon_n + s.omega.eps_prime;
    Ok(FullMnReport {
        theta,
        n,
        delta,
        lhs,
        resource_term,
        protocol_term,
        epsilon_n,
        epsilon_n_binomial: epsilon_exact(theta, n, delta)?,
        eps_prime: s.omega.eps_prime,
        rhs,
        fidelity,
        holds: lhs <= rhs + linalg::EXACT_TOL,
        fidelity_bound_holds: fidelity >= 1.0 - rhs - linalg::EXACT_TOL,
        dilution: s.dilution,
        bell_budget: s.budget,
        log_k: s.dilution.bits + s.budget as u32,
        log_k_nominal: s.log_k_nominal,
        expected_ledger: ResourceLedger::new(consumed, returned),
        leaves,
        distinct_leaves: actual.len(),
    })
}

/// One sampled run of the full protocol from the stream `(seed, 0)`.
pub fn full_mn(theta: f64, n: usize, delta: f64, seed: u64) -> Result<FullMnSample> {
    let s = setup(theta, n, delta)?;
    let t = Engine::default().run_sampled(&s.protocol, &s.inputs.tensor(&s.omega.state)?, &mut trial_rng(seed, 0))?;
    let wins = s
        .labels
        .iter()
        .filter(|l| t.outcome(&l.key(KEY_BOB)) == Some(0))
        .count();
    Ok(FullMnSample {
        fidelity: s.target.overlap(&t.final_state)?,
        final_state: t.final_state.clone(),
        ledger: t.ledger,
        event_b: wins < s.threshold,
        transcript: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_holds_at_three_pairs() {
        let r = full_mn_exact(1.0, 3, 0.2).unwrap();
        assert!((r.epsilon_n - r.epsilon_n_binomial).abs() < 1e-12);
        assert!(r.resource_term <= r.eps_prime + 1e-12);
        assert!(r.protocol_term <= 2.0 * r.epsilon_n + 1e-12);
        assert!(r.holds && r.fidelity_bound_holds);
        assert!(r.distinct_leaves < r.leaves);
        assert!(r.log_k >= r.log_k_nominal && r.log_k <= r.log_k_nominal + 1);
    }

    #[test]
    fn empty_typical_set_is_reported() {
        assert!(matches!(full_mn_exact(1.0, 1, 0.2), Err(Error::EmptyTypicalSet { .. })));
        assert!(matches!(full_mn_exact(1.0, 4, 0.2), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn sampled_run_replays() {
        let a = full_mn(1.0, 3, 0.2, 11).unwrap();
        let b = full_mn(1.0, 3, 0.2, 11).unwrap();
        assert_eq!(a.transcript.to_json(), b.transcript.to_json());
        if !a.event_b {
            // ω_3 differs from φ^{⊗3}, so even event (a) is not exact
            assert!(a.fidelity > 0.0);
        }
    }
}
