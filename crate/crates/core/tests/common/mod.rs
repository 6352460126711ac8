//! Shared oracles and input generators for the integration tests. The
//! closed forms here are written out independently of `locc_core::cost`.

#![allow(dead_code)]

use locc_core::linalg::{c, ComplexVector};
use locc_core::rng::trial_rng;
use locc_core::state::{PureState, Register};
use rand::Rng;

/// `sin²α / (2(1 − cos θ cos α))`
pub fn p_oracle(alpha: f64, theta: f64) -> f64 {
    alpha.sin().powi(2) / (2.0 * (1.0 - theta.cos() * alpha.cos()))
}

pub fn h_oracle(x: f64) -> f64 {
    let term = |t: f64| if t <= 0.0 { 0.0 } else { -t * t.log2() };
    term(x) + term(1.0 - x)
}

/// `1 − p + h(cos²(α/2))`
pub fn avg_cost_oracle(alpha: f64, theta: f64) -> f64 {
    1.0 - p_oracle(alpha, theta) + h_oracle((alpha / 2.0).cos().powi(2))
}

/// `θ′` with `|tan(θ′/2)| = tan²(α/2) / tan(θ/2)`, either sign.
pub fn residual_magnitude(alpha: f64, theta: f64) -> f64 {
    2.0 * ((alpha / 2.0).tan().powi(2) / (theta / 2.0).tan()).atan()
}

/// `k·π/20` for `k = 1..=10`, the grid over `(0, π/2]`.
pub fn grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * std::f64::consts::PI / 20.0).collect()
}

/// Random two-qubit state on `A, B` with i.i.d. uniform box amplitudes.
pub fn random_ab(seed: u64, index: u64) -> PureState {
    let mut rng = trial_rng(seed, index);
    let v = ComplexVector::from_fn(4, |_, _| {
        c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    });
    PureState::normalized(vec![Register::qubit("A"), Register::qubit("B")], v).unwrap()
}

pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // written to the raw handle so the verdict survives libtest's capture
    let line = format!("criterion {criterion}: {verdict}: {detail}\n");
    let _ = std::io::Write::write_all(&mut std::io::stdout(), line.as_bytes());
}
