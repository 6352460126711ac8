use std::sync::Arc;

use super::{Mode, PairLabels, ShotOutcome, KEY_ALICE, KEY_BOB, KEY_REPAIR_ALICE, KEY_REPAIR_BOB};
use crate::error::{check_range, Error, Result};
use crate::gates;
use crate::linalg::{self, c, ComplexVector};
use crate::locc::{computational_basis, hadamard_basis, Engine, Party, Protocol, ProtocolStep, Rule, Transcript};
use crate::rng::trial_rng;
use crate::state::PureState;

/// Bob's measurement basis `{χ, χ⊥}`, scaled by `sin(α/2)cos(α/2)` so that no
/// component divides by zero; normalization happens when the step is built.
pub fn chi_basis(theta: f64, alpha: f64) -> Vec<ComplexVector> {
    let (st, ct) = (theta / 2.0).sin_cos();
    let (sa, ca) = (alpha / 2.0).sin_cos();
    vec![
        ComplexVector::from_column_slice(&[c(ct * sa, 0.0), c(st * ca, 0.0)]),
        ComplexVector::from_column_slice(&[c(st * ca, 0.0), c(-ct * sa, 0.0)]),
    ]
}

/// Angle of the gate left behind when Bob obtains `χ⊥`:
/// `θ′ = −2 atan(tan²(α/2) / tan(θ/2))`. The magnitude follows the tangent
/// relation; the sign is negative because `⟨χ⊥|` picks up `−i sin(α/2)`.
pub fn residual_angle(theta: f64, alpha: f64) -> f64 {
    let (st, ct) = (theta / 2.0).sin_cos();
    let (sa, ca) = (alpha / 2.0).sin_cos();
    -2.0 * (sa * sa * ct).atan2(ca * ca * st)
}

fn check_angles(theta: f64, alpha: f64) -> Result<()> {
    check_range(
        "theta",
        theta,
        theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2,
        "(0, pi/2]",
    )?;
    check_range("alpha", alpha, alpha > 0.0 && alpha <= std::f64::consts::PI, "(0, pi]")
}

pub(crate) fn flag(key: String, value: usize) -> Rule<bool> {
    Arc::new(move |v| v.is(&key, value))
}

/// Alice's part of the probabilistic half: controlled-z from `A0` onto `A`,
/// then `A0` in the `±` basis.
pub(crate) fn first_half_alice(l: &PairLabels) -> Result<Vec<ProtocolStep>> {
    Ok(vec![
        ProtocolStep::unitary(Party::Alice, &[&l.a0, &l.a], gates::controlled_z().matrix)?,
        ProtocolStep::measure(Party::Alice, &l.a0, hadamard_basis(), &l.key(KEY_ALICE))?,
    ])
}

/// Bob's part: `σ_z` on `B0` if Alice saw `−`, controlled-z from `B0` onto
/// `B`, then `B0` in the `χ` basis.
pub(crate) fn first_half_bob(theta: f64, alpha: f64, l: &PairLabels) -> Result<Vec<ProtocolStep>> {
    let key = l.key(KEY_ALICE);
    let z = linalg::pauli_z();
    Ok(vec![
        ProtocolStep::conditioned(Party::Bob, &[&l.b0], move |v| v.is(&key, 1).then(|| z.clone())),
        ProtocolStep::unitary(Party::Bob, &[&l.b0, &l.b], gates::controlled_z().matrix)?,
        ProtocolStep::measure(Party::Bob, &l.b0, chi_basis(theta, alpha), &l.key(KEY_BOB))?,
    ])
}

/// Alice's opening of the one-ebit protocol: draw a Bell pair on `(C, D)`,
/// CNOT from `A` onto `C`, measure `C`.
pub(crate) fn repair_alice(l: &PairLabels) -> Result<Vec<ProtocolStep>> {
    Ok(vec![
        ProtocolStep::draw_pair(Party::Alice, &l.c, &l.d),
        ProtocolStep::unitary(Party::Alice, &[&l.a, &l.c], gates::cnot())?,
        ProtocolStep::measure(Party::Alice, &l.c, computational_basis(2), &l.key(KEY_REPAIR_ALICE))?,
    ])
}

/// Bob's half: flip `D` on Alice's bit, apply `Ũ_φ` to `(D, B)`, measure `D`
/// in the `±` basis.
pub(crate) fn repair_bob(phi: f64, l: &PairLabels) -> Result<Vec<ProtocolStep>> {
    let key = l.key(KEY_REPAIR_ALICE);
    let x = linalg::pauli_x();
    Ok(vec![
        ProtocolStep::conditioned(Party::Bob, &[&l.d], move |v| v.is(&key, 1).then(|| x.clone())),
        ProtocolStep::unitary(Party::Bob, &[&l.d, &l.b], gates::u_tilde_theta(phi).matrix)?,
        ProtocolStep::measure(Party::Bob, &l.d, hadamard_basis(), &l.key(KEY_REPAIR_BOB))?,
    ])
}

/// Alice's closing correction: `σ_z` on `A` if Bob saw `−`.
pub(crate) fn repair_alice_final(l: &PairLabels) -> Vec<ProtocolStep> {
    let key = l.key(KEY_REPAIR_BOB);
    let z = linalg::pauli_z();
    vec![ProtocolStep::conditioned(Party::Alice, &[&l.a], move |v| {
        v.is(&key, 1).then(|| z.clone())
    })]
}

pub(crate) fn guarded(steps: Vec<ProtocolStep>, guard: &Rule<bool>) -> Vec<ProtocolStep> {
    steps.into_iter().map(|s| s.when_rule(Some(guard.clone()))).collect()
}

pub(crate) fn send(actor: Party, keys: Vec<String>) -> ProtocolStep {
    ProtocolStep::send(actor, keys)
}

pub(crate) fn owners(l: &PairLabels) -> [(&str, Party); 4] {
    [
        (l.a.as_str(), Party::Alice),
        (l.a0.as_str(), Party::Alice),
        (l.b.as_str(), Party::Bob),
        (l.b0.as_str(), Party::Bob),
    ]
}

/// Entanglement entropy of `|φ_α⟩`, read off its Schmidt decomposition.
pub(crate) fn resource_entropy(alpha: f64) -> Result<f64> {
    Ok(gates::phi_alpha(alpha)?.schmidt(&["A0"])?.entropy())
}

/// The probabilistic half as a two-round protocol. The ledger charges the
/// entanglement entropy of `|φ_α⟩`.
pub fn first_half_protocol(theta: f64, alpha: f64) -> Result<Protocol> {
    first_half_protocol_on(theta, alpha, &PairLabels::default())
}

pub(crate) fn first_half_protocol_on(theta: f64, alpha: f64, l: &PairLabels) -> Result<Protocol> {
    check_angles(theta, alpha)?;
    let mut p = Protocol::new(&owners(l)).with_resources(resource_entropy(alpha)?, 0);
    p.extend(first_half_alice(l)?);
    p.push(send(Party::Alice, vec![l.key(KEY_ALICE)]));
    p.extend(first_half_bob(theta, alpha, l)?);
    p.push(send(Party::Bob, vec![l.key(KEY_BOB)]));
    Ok(p)
}

/// The deterministic one-ebit protocol for `Ũ_φ` as a two-round protocol.
pub fn one_ebit_protocol(phi: f64) -> Result<Protocol> {
    one_ebit_protocol_on(phi, &PairLabels::default())
}

pub(crate) fn one_ebit_protocol_on(phi: f64, l: &PairLabels) -> Result<Protocol> {
    if !phi.is_finite() {
        return Err(Error::OutOfRange {
            name: "phi",
            value: phi,
            range: "finite",
        });
    }
    let mut p = Protocol::new(&owners(l)).with_resources(1.0, 1);
    p.extend(repair_alice(l)?);
    p.push(send(Party::Alice, vec![l.key(KEY_REPAIR_ALICE)]));
    p.extend(repair_bob(phi, l)?);
    p.push(send(Party::Bob, vec![l.key(KEY_REPAIR_BOB)]));
    p.extend(repair_alice_final(l));
    Ok(p)
}

/// The four-round composite: the probabilistic half, then on failure the
/// one-ebit protocol for `Ũ_{θ−θ′}` using one standby Bell pair. An unused
/// pair is returned.
pub fn composite_protocol(theta: f64, alpha: f64) -> Result<Protocol> {
    let l = PairLabels::default();
    check_angles(theta, alpha)?;
    let repair_angle = theta - residual_angle(theta, alpha);
    let failed = flag(l.key(KEY_BOB), 1);
    let mut p = Protocol::new(&owners(&l)).with_resources(resource_entropy(alpha)? + 1.0, 1);
    p.extend(first_half_alice(&l)?);
    p.push(send(Party::Alice, vec![l.key(KEY_ALICE)]));
    p.extend(first_half_bob(theta, alpha, &l)?);
    p.push(send(Party::Bob, vec![l.key(KEY_BOB)]));
    p.extend(guarded(repair_alice(&l)?, &failed));
    p.push(send(Party::Alice, vec![l.key(KEY_REPAIR_ALICE)]));
    p.extend(guarded(repair_bob(repair_angle, &l)?, &failed));
    p.push(send(Party::Bob, vec![l.key(KEY_REPAIR_BOB)]));
    p.extend(guarded(repair_alice_final(&l), &failed));
    Ok(p)
}

fn check_input(input: &PureState, l: &PairLabels) -> Result<()> {
    for label in [&l.a, &l.b] {
        let d = input.layout().dim_of(label)?;
        if d != 2 {
            return Err(Error::DimensionMismatch(format!(
                "register `{label}` has dimension {d}, expected a qubit"
            )));
        }
    }
    Ok(())
}

pub(crate) fn execute(protocol: &Protocol, state: &PureState, mode: Mode) -> Result<Vec<(f64, Transcript)>> {
    let engine = Engine::default();
    match mode {
        Mode::Sampled { seed, trial } => {
            let t = engine.run_sampled(protocol, state, &mut trial_rng(seed, trial))?;
            Ok(vec![(t.probability, t)])
        }
        Mode::Exhaustive => engine.run_all_branches(protocol, state),
    }
}

/// Run the probabilistic half on `input` (registers `A`, `B` and optional
/// references); `|φ_α⟩` is attached on `(A0, B0)`.
pub fn prob_first_half(theta: f64, alpha: f64, input: &PureState, mode: Mode) -> Result<Vec<(f64, ShotOutcome)>> {
    let l = PairLabels::default();
    check_input(input, &l)?;
    let protocol = first_half_protocol_on(theta, alpha, &l)?;
    let state = input.tensor(&gates::phi_alpha_on(alpha, &l.a0, &l.b0)?)?;
    let theta_f = residual_angle(theta, alpha);
    execute(&protocol, &state, mode)?
        .into_iter()
        .map(|(p, t)| {
            let success = t.outcome(&l.key(KEY_BOB)) == Some(0);
            Ok((
                p,
                ShotOutcome {
                    success,
                    residual_angle: (!success).then_some(theta_f),
                    applied_angle: if success { theta } else { theta_f },
                    post_state: t.final_state.clone(),
                    ledger: t.ledger,
                    transcript: t,
                },
            ))
        })
        .collect()
}

/// Run the one-ebit protocol for `Ũ_φ` on `input`; the Bell pair is drawn on
/// `(C, D)`.
pub fn deterministic_one_ebit(phi: f64, input: &PureState, mode: Mode) -> Result<Vec<(f64, ShotOutcome)>> {
    let l = PairLabels::default();
    check_input(input, &l)?;
    let protocol = one_ebit_protocol_on(phi, &l)?;
    execute(&protocol, input, mode)?
        .into_iter()
        .map(|(p, t)| {
            Ok((
                p,
                ShotOutcome {
                    success: true,
                    residual_angle: None,
                    applied_angle: phi,
                    post_state: t.final_state.clone(),
                    ledger: t.ledger,
                    transcript: t,
                },
            ))
        })
        .collect()
}

/// Run the composite protocol. Every path ends in `Ũ_θ|ψ⟩`; `success`
/// records whether the probabilistic half succeeded on its own.
pub fn composite_single_shot(theta: f64, alpha: f64, input: &PureState, mode: Mode) -> Result<Vec<(f64, ShotOutcome)>> {
    let l = PairLabels::default();
    check_input(input, &l)?;
    let protocol = composite_protocol(theta, alpha)?;
    let state = input.tensor(&gates::phi_alpha_on(alpha, &l.a0, &l.b0)?)?;
    let theta_f = residual_angle(theta, alpha);
    execute(&protocol, &state, mode)?
        .into_iter()
        .map(|(p, t)| {
            let success = t.outcome(&l.key(KEY_BOB)) == Some(0);
            Ok((
                p,
                ShotOutcome {
                    success,
                    residual_angle: (!success).then_some(theta_f),
                    applied_angle: theta,
                    post_state: t.final_state.clone(),
                    ledger: t.ledger,
                    transcript: t,
                },
            ))
        })
        .collect()
}

/// `|⟨post| (Ũ_φ ⊗ I)|ψ⟩|²` with `Ũ_φ` on `(A, B)`.
pub fn gate_fidelity(input: &PureState, post: &PureState, phi: f64) -> Result<f64> {
    let target = input.apply_on(&gates::u_tilde_theta(phi).matrix, &["A", "B"])?;
    post.overlap(&target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost;
    use crate::locc::count_rounds;
    use crate::state::Register;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_input(seed: u64) -> PureState {
        use rand::Rng;
        let mut rng = trial_rng(seed, 0);
        let v = ComplexVector::from_fn(4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        PureState::normalized(vec![Register::qubit("A"), Register::qubit("B")], v).unwrap()
    }

    #[test]
    fn chi_basis_is_the_supernormalized_pair() {
        let (t, a) = (0.7, 1.1);
        let b = chi_basis(t, a);
        let chi = [(t / 2.0).cos() / (a / 2.0).cos(), (t / 2.0).sin() / (a / 2.0).sin()];
        let ratio = b[0][0].re / chi[0];
        assert!((b[0][1].re - ratio * chi[1]).abs() < 1e-15);
        assert!(linalg::inner(&b[0], &b[1]).norm() < 1e-15);
    }

    #[test]
    fn residual_angle_satisfies_tangent_relation() {
        for (t, a) in [(0.3, 0.5), (1.0, 1.0), (FRAC_PI_2, 0.2)] {
            let tp = residual_angle(t, a);
            let want = (a / 2.0).tan().powi(2) / (t / 2.0).tan();
            assert!(((-tp / 2.0).tan() - want).abs() < 1e-12);
        }
        assert!((residual_angle(1.0, 1.0) + 1.0).abs() < 1e-15);
        assert!((residual_angle(0.5, PI) + PI).abs() < 1e-15);
    }

    #[test]
    fn first_half_branches() {
        let psi = random_input(1);
        for (t, a) in [(1.0, 1.0), (FRAC_PI_2, FRAC_PI_2), (0.4, 0.9), (0.2, PI)] {
            let leaves = prob_first_half(t, a, &psi, Mode::Exhaustive).unwrap();
            let total: f64 = leaves.iter().map(|l| l.0).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let ps: f64 = leaves.iter().filter(|l| l.1.success).map(|l| l.0).sum();
            assert!((ps - cost::success_prob(a, t).unwrap()).abs() < 1e-12);
            for (_, o) in &leaves {
                assert!(gate_fidelity(&psi, &o.post_state, o.applied_angle).unwrap() > 1.0 - 1e-12);
                assert_eq!(o.transcript.rounds_used, 2);
                assert_eq!(count_rounds(&o.transcript), 2);
            }
        }
        assert_eq!(prob_first_half(1.0, 0.8, &psi, Mode::Exhaustive).unwrap().len(), 4);
    }

    #[test]
    fn one_ebit_is_deterministic() {
        let psi = random_input(2);
        for phi in [0.0, 0.3, -1.2, 2.0] {
            let leaves = deterministic_one_ebit(phi, &psi, Mode::Exhaustive).unwrap();
            assert_eq!(leaves.len(), 4);
            for (p, o) in &leaves {
                assert!((p - 0.25).abs() < 1e-12);
                assert!(gate_fidelity(&psi, &o.post_state, phi).unwrap() > 1.0 - 1e-12);
                assert_eq!(o.transcript.rounds_used, 2);
                assert_eq!(o.ledger.net_cost, 1.0);
            }
        }
    }

    #[test]
    fn composite_always_implements_the_gate() {
        let psi = random_input(3);
        let (t, a) = (FRAC_PI_2, FRAC_PI_2);
        let leaves = composite_single_shot(t, a, &psi, Mode::Exhaustive).unwrap();
        let mut cost = 0.0;
        for (p, o) in &leaves {
            assert!(gate_fidelity(&psi, &o.post_state, t).unwrap() > 1.0 - 1e-10);
            assert!(o.transcript.rounds_used <= 4);
            assert_eq!(count_rounds(&o.transcript), if o.success { 2 } else { 4 });
            cost += p * o.ledger.net_cost;
        }
        assert!((cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sampled_mode_replays() {
        let psi = random_input(4);
        let a = composite_single_shot(1.0, 1.0, &psi, Mode::Sampled { seed: 9, trial: 3 }).unwrap();
        let b = composite_single_shot(1.0, 1.0, &psi, Mode::Sampled { seed: 9, trial: 3 }).unwrap();
        assert_eq!(a[0].1.transcript.to_json(), b[0].1.transcript.to_json());
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let only_a = PureState::basis(vec![Register::qubit("A")], &[0]).unwrap();
        assert!(prob_first_half(1.0, 1.0, &only_a, Mode::Exhaustive).is_err());
        let qutrit = PureState::basis(vec![Register::qubit("A"), Register::new("B", 3)], &[0, 0]).unwrap();
        assert!(prob_first_half(1.0, 1.0, &qutrit, Mode::Exhaustive).is_err());
        assert!(prob_first_half(0.0, 1.0, &random_input(0), Mode::Exhaustive).is_err());
    }
}
