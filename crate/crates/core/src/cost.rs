//! Closed-form cost model of the composite four-round protocol and the
//! two-round versus four-round trade-off.
//!
//! With resource `|φ_α⟩` the probabilistic half succeeds with probability
//! `p(α,θ) = sin²α / (2(1 − cosθ cosα))` and the composite protocol costs
//! `Ē(α,θ) = 1 − p(α,θ) + h(cos²(α/2))` ebits on average. The schedule
//! `α_θ = √θ` gives `E_θ → 0` as `θ → 0`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::gates;
use crate::markov;
use crate::measures::binary_entropy;

/// Grid resolution used to bracket the first crossing of `E_θ = 1`.
const THETA_MAX_GRID: usize = 4096;

/// `p(α,θ)`. The denominator is evaluated as `2sin²(θ/2) + 2cosθ sin²(α/2)`,
/// which avoids cancellation for small angles.
pub fn success_prob(alpha: f64, theta: f64) -> Result<f64> {
    if !alpha.is_finite() || !theta.is_finite() {
        return Err(Error::Singular(format!("alpha = {alpha}, theta = {theta}")));
    }
    let st = (theta / 2.0).sin();
    let sa = (alpha / 2.0).sin();
    let denom = 2.0 * st * st + theta.cos() * 2.0 * sa * sa;
    if denom <= 0.0 {
        return Err(Error::Singular(format!(
            "1 - cos(theta)cos(alpha) vanishes at alpha = {alpha}, theta = {theta}"
        )));
    }
    let s = alpha.sin();
    Ok(s * s / (2.0 * denom))
}

/// `Ē(α,θ) = 1 − p(α,θ) + h(cos²(α/2))`.
pub fn avg_cost(alpha: f64, theta: f64) -> Result<f64> {
    let p = success_prob(alpha, theta)?;
    let c = (alpha / 2.0).cos();
    Ok(1.0 - p + binary_entropy(c * c)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostProfile {
    pub theta: f64,
    pub alpha_theta: f64,
    pub p_theta: f64,
    pub h_theta: f64,
    #[serde(rename = "E_theta")]
    pub e_theta: f64,
}

/// The cost profile at `α = √θ`.
pub fn e_theta(theta: f64) -> Result<CostProfile> {
    check_range("theta", theta, theta > 0.0 && theta <= FRAC_PI_2, "(0, pi/2]")?;
    let alpha = theta.sqrt();
    let p = success_prob(alpha, theta)?;
    let c = (alpha / 2.0).cos();
    let h = binary_entropy(c * c)?;
    Ok(CostProfile {
        theta,
        alpha_theta: alpha,
        p_theta: p,
        h_theta: h,
        e_theta: 1.0 - p + h,
    })
}

/// Profiles for each angle, in order.
pub fn cost_curve(thetas: &[f64]) -> Result<Vec<CostProfile>> {
    thetas.iter().map(|&t| e_theta(t)).collect()
}

/// `n` angles spaced evenly in `log θ` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_range("lo", lo, lo > 0.0 && lo <= hi, "(0, hi]")?;
    if n < 2 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Largest `θ*` such that `E_θ < 1` for every `θ ≤ θ*`, to within `tolerance`
/// in `|E_θ* − 1|`. Returns `π/2` when `E_{π/2} < 1`.
///
/// The first crossing is bracketed on a uniform grid and then bisected; the
/// returned angle always sits on the `E < 1` side.
pub fn theta_max_solve(tolerance: f64) -> Result<f64> {
    check_range("tolerance", tolerance, tolerance > 0.0, "(0, inf)")?;
    let e = |t: f64| e_theta(t).map(|p| p.e_theta);
    let step = FRAC_PI_2 / THETA_MAX_GRID as f64;
    let mut lo = step;
    if e(lo)? >= 1.0 {
        return Err(Error::Internal("E_theta >= 1 at the smallest grid angle".into()));
    }
    let mut hi = None;
    for k in 2..=THETA_MAX_GRID {
        let t = if k == THETA_MAX_GRID {
            FRAC_PI_2
        } else {
            step * k as f64
        };
        if e(t)? >= 1.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let Some(mut hi) = hi else {
        return Ok(FRAC_PI_2);
    };
    for _ in 0..200 {
        if 1.0 - e(lo)? <= tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if e(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Lower bound on two-round cost versus the four-round upper bound at one angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub theta: f64,
    /// `M(Ũ_θ†)`, which lower-bounds any two-round protocol.
    pub lower_bound_two_round: f64,
    /// `E_θ`, achieved by the four-round protocol.
    pub upper_bound_four_round: f64,
    pub separation: bool,
    pub theta_max: f64,
}

pub fn tradeoff_report(theta: f64) -> Result<TradeoffReport> {
    let profile = e_theta(theta)?;
    let lower = markov::markov_cost(&gates::u_tilde_theta(theta).dagger(), 2)?.cost_bits;
    Ok(TradeoffReport {
        theta,
        lower_bound_two_round: lower,
        upper_bound_four_round: profile.e_theta,
        separation: lower > profile.e_theta,
        theta_max: theta_max_solve(1e-12)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_p(alpha: f64, theta: f64) -> f64 {
        alpha.sin().powi(2) / (2.0 * (1.0 - theta.cos() * alpha.cos()))
    }

    #[test]
    fn closed_form_examples() {
        assert!((success_prob(FRAC_PI_2, FRAC_PI_2).unwrap() - 0.5).abs() < 1e-15);
        for t in [0.05, 0.3, 1.0, 1.4] {
            assert!((success_prob(t, t).unwrap() - 0.5).abs() < 1e-14);
        }
        assert!(success_prob(1e-9, 1.0).unwrap() < 1e-17);
        assert!(matches!(success_prob(0.0, 0.0), Err(Error::Singular(_))));
        assert!((avg_cost(FRAC_PI_2, FRAC_PI_2).unwrap() - 1.5).abs() < 1e-15);
        assert!((avg_cost(1e-9, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_denominator_matches_naive_form() {
        for a in [0.2, 0.7, 1.3, PI] {
            for t in [0.1, 0.9, FRAC_PI_2] {
                let d = success_prob(a, t).unwrap() - naive_p(a, t);
                assert!(d.abs() < 1e-13, "{a} {t}");
            }
        }
    }

    #[test]
    fn small_theta_behavior() {
        let small = e_theta(1e-3).unwrap();
        assert!(small.e_theta < 0.01);
        assert!((small.e_theta - 0.0046).abs() < 1e-4);
        assert!((e_theta(0.1).unwrap().e_theta - 0.2775).abs() < 1e-4);
        assert!(e_theta(FRAC_PI_2).unwrap().e_theta > 1.0);

        let grid = log_grid(1e-4, 1e-1, 31).unwrap();
        let curve = cost_curve(&grid).unwrap();
        assert!(curve.windows(2).all(|w| w[0].e_theta < w[1].e_theta));
        for t in [1e-2, 1e-3, 1e-4] {
            let p = e_theta(t).unwrap();
            assert!((1.0 - p.p_theta) / t < 2.0);
        }
        assert!(e_theta(0.0).is_err());
        assert!(e_theta(1.6).is_err());
    }

    #[test]
    fn continuity_on_grid() {
        let eps = 1e-6;
        for k in 1..=50 {
            let t = FRAC_PI_2 * k as f64 / 51.0;
            let d = (e_theta(t + eps).unwrap().e_theta - e_theta(t).unwrap().e_theta).abs();
            assert!(d / eps < 50.0);
        }
    }

    #[test]
    fn theta_max_is_the_first_crossing() {
        let t = theta_max_solve(1e-12).unwrap();
        let e = e_theta(t).unwrap().e_theta;
        assert!(e < 1.0 && 1.0 - e <= 1e-12);
        assert!(e_theta(t / 2.0).unwrap().e_theta < 1.0);
        for k in 1..=200 {
            assert!(e_theta(t * k as f64 / 200.0).unwrap().e_theta < 1.0);
        }
    }

    #[test]
    fn tradeoff_at_small_angle() {
        let r = tradeoff_report(0.1).unwrap();
        assert!((r.lower_bound_two_round - 1.0).abs() < 1e-9);
        assert!(r.upper_bound_four_round < 1.0);
        assert!(r.separation);
        let r = tradeoff_report(FRAC_PI_2).unwrap();
        assert!(!r.separation);
    }
}
