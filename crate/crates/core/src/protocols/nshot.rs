use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::single::{first_half_protocol_on, one_ebit_protocol_on, resource_entropy};
use super::{gate_fidelity, residual_angle, PairLabels, KEY_BOB};
use crate::cost;
use crate::error::{check_range, Error, Result};
use crate::gates;
use crate::linalg::c;
use crate::locc::{Engine, ResourceLedger};
use crate::rng::trial_rng;
use crate::state::{PureState, Register};

/// (a): enough pairs succeeded and every failure is repaired from the Bell
/// budget. (b): fewer than `n(p_θ − δ)` successes; the batch aborts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Event {
    A,
    B,
}

/// One run of the n-shot batch.
#[derive(Clone, Debug, Serialize)]
pub struct NShotReport {
    pub n: usize,
    pub delta: f64,
    pub alpha: f64,
    pub p_theta: f64,
    pub successes: usize,
    pub failures: usize,
    pub event: Event,
    /// `⌈n(1 − p_θ + δ)⌉`
    pub budget_pairs: usize,
    pub pairs_used: usize,
    /// Exact `P[event (b)]` for this `(θ, n, δ)`.
    pub epsilon_n: f64,
    pub ledger: ResourceLedger,
    /// Fidelity of the product output with `⊗_i Ũ_θ|ψ_i⟩`.
    pub final_fidelity: f64,
    pub rounds_used: usize,
    #[serde(skip)]
    pub post_states: Vec<PureState>,
}

impl NShotReport {
    /// Trace distance (range `[0, 2]`) between the pure output and target.
    pub fn trace_distance(&self) -> f64 {
        2.0 * (1.0 - self.final_fidelity).max(0.0).sqrt()
    }
}

fn check_batch(theta: f64, n: usize, delta: f64) -> Result<()> {
    check_range(
        "theta",
        theta,
        theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2,
        "(0, pi/2]",
    )?;
    check_range("delta", delta, delta > 0.0, "(0, inf)")?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            range: "positive integers",
        });
    }
    Ok(())
}

/// Smallest success count that avoids event (b), i.e. `⌈n(p − δ)⌉` clamped to `[0, n]`.
fn success_threshold(n: usize, p: f64, delta: f64) -> usize {
    let x = n as f64 * (p - delta);
    if x <= 0.0 {
        0
    } else {
        (x.ceil() as usize).min(n + 1)
    }
}

fn bell_budget(n: usize, p: f64, delta: f64) -> usize {
    (n as f64 * (1.0 - p + delta)).ceil().max(0.0) as usize
}

/// Exact `P[S < n(p_θ − δ)]` for `S ~ Binomial(n, p_θ)`, summed in the log
/// domain.
pub fn epsilon_exact(theta: f64, n: usize, delta: f64) -> Result<f64> {
    check_batch(theta, n, delta)?;
    let p = cost::success_prob(theta.sqrt(), theta)?;
    Ok(binomial_lower_tail(n, p, success_threshold(n, p, delta)))
}

/// `P[S < k]` for `S ~ Binomial(n, p)`.
fn binomial_lower_tail(n: usize, p: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > n {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let odds = (p / (1.0 - p)).ln();
    let mut log_pmf = n as f64 * (1.0 - p).ln();
    let mut terms = Vec::with_capacity(k);
    for j in 0..k {
        terms.push(log_pmf);
        log_pmf += ((n - j) as f64 / (j + 1) as f64).ln() + odds;
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (top.exp() * terms.iter().map(|t| (t - top).exp()).sum::<f64>()).min(1.0)
}

/// Run the batch on `inputs[i]` (registers `A`, `B` and optional references),
/// one pair at a time; pairs are independent, so only the shared classical
/// count couples them. Randomness comes from the stream `(seed, trial)`.
pub fn nshot_run(theta: f64, n: usize, delta: f64, inputs: &[PureState], seed: u64, trial: u64) -> Result<NShotReport> {
    let batch = Batch::new(theta, n, delta)?;
    if inputs.len() != n {
        return Err(Error::DimensionMismatch(format!("{} inputs for n = {n}", inputs.len())));
    }
    batch.run(inputs, &mut trial_rng(seed, trial))
}

/// Protocols and constants shared by every run at one `(θ, n, δ)`.
pub(crate) struct Batch {
    pub theta: f64,
    pub n: usize,
    pub delta: f64,
    pub alpha: f64,
    pub p: f64,
    pub threshold: usize,
    pub budget: usize,
    pub epsilon: f64,
    pub entropy: f64,
    first_half: crate::locc::Protocol,
    repair: crate::locc::Protocol,
    resource: PureState,
}

impl Batch {
    pub fn new(theta: f64, n: usize, delta: f64) -> Result<Self> {
        check_batch(theta, n, delta)?;
        let alpha = theta.sqrt();
        let p = cost::success_prob(alpha, theta)?;
        let l = PairLabels::default();
        let threshold = success_threshold(n, p, delta);
        Ok(Self {
            theta,
            n,
            delta,
            alpha,
            p,
            threshold,
            budget: bell_budget(n, p, delta),
            epsilon: binomial_lower_tail(n, p, threshold),
            entropy: resource_entropy(alpha)?,
            first_half: first_half_protocol_on(theta, alpha, &l)?,
            repair: one_ebit_protocol_on(theta - residual_angle(theta, alpha), &l)?,
            resource: gates::phi_alpha_on(alpha, &l.a0, &l.b0)?,
        })
    }

    pub fn run<R: Rng + ?Sized>(&self, inputs: &[PureState], rng: &mut R) -> Result<NShotReport> {
        let engine = Engine::default();
        let mut states = Vec::with_capacity(self.n);
        let mut failed = Vec::new();
        for (i, psi) in inputs.iter().enumerate() {
            let t = engine.run_sampled(&self.first_half, &psi.tensor(&self.resource)?, rng)?;
            if t.outcome(KEY_BOB) != Some(0) {
                failed.push(i);
            }
            states.push(t.final_state);
        }
        let successes = self.n - failed.len();
        let event = if successes < self.threshold { Event::B } else { Event::A };
        let mut pairs_used = 0;
        if event == Event::A {
            if failed.len() > self.budget {
                return Err(Error::Internal(format!(
                    "{} failures exceed the budget of {} pairs under event (a)",
                    failed.len(),
                    self.budget
                )));
            }
            for &i in &failed {
                let t = engine.run_sampled(&self.repair, &states[i], rng)?;
                states[i] = t.final_state;
                pairs_used += 1;
            }
        }
        let mut final_fidelity = 1.0;
        for (psi, out) in inputs.iter().zip(&states) {
            final_fidelity *= gate_fidelity(psi, out, self.theta)?;
        }
        let consumed = self.n as f64 * self.entropy + self.budget as f64;
        Ok(NShotReport {
            n: self.n,
            delta: self.delta,
            alpha: self.alpha,
            p_theta: self.p,
            successes,
            failures: failed.len(),
            event,
            budget_pairs: self.budget,
            pairs_used,
            epsilon_n: self.epsilon,
            ledger: ResourceLedger::new(consumed, (self.budget - pairs_used) as f64),
            final_fidelity,
            // all pairs share each message, so a repair adds two rounds
            rounds_used: if pairs_used > 0 { 4 } else { 2 },
            post_states: states,
        })
    }
}

/// Monte Carlo estimate of `ε_n` at one `n`.
#[derive(Clone, Debug, Serialize)]
pub struct EpsilonEstimate {
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    pub events_b: u64,
    pub epsilon_hat: f64,
    /// Binomial standard error of `epsilon_hat`.
    pub std_error: f64,
    pub epsilon_exact: f64,
    /// Mean trace distance to the target; bounded by `2 ε̂_n` by convexity.
    pub mean_trace_distance: f64,
    pub mean_net_cost: f64,
}

/// `|+⟩_A |+⟩_B`, the per-pair input used for error estimates.
pub fn plus_plus() -> PureState {
    PureState::new(
        vec![Register::qubit("A"), Register::qubit("B")],
        crate::linalg::ComplexVector::from_element(4, c(0.5, 0.0)),
    )
    .expect("normalized")
}

/// Run `trials` independent batches on `|+⟩|+⟩` pairs; trial `t` uses the
/// stream `(seed, t)`.
pub fn estimate_epsilon(theta: f64, n: usize, delta: f64, trials: u64, seed: u64) -> Result<EpsilonEstimate> {
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            range: "positive integers",
        });
    }
    let batch = Batch::new(theta, n, delta)?;
    let inputs = vec![plus_plus(); n];
    // collected in trial order and summed serially so the float totals are
    // bit-identical for every thread count
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = batch.run(&inputs, &mut trial_rng(seed, t))?;
            Ok::<_, Error>((u64::from(r.event == Event::B), r.trace_distance(), r.ledger.net_cost))
        })
        .collect::<Result<Vec<_>>>()?;
    let (events_b, distance, net) = per_trial
        .iter()
        .fold((0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let m = trials as f64;
    let eps = events_b as f64 / m;
    Ok(EpsilonEstimate {
        n,
        delta,
        trials,
        events_b,
        epsilon_hat: eps,
        std_error: (eps * (1.0 - eps) / m).sqrt(),
        epsilon_exact: batch.epsilon,
        mean_trace_distance: distance / m,
        mean_net_cost: net / m,
    })
}
