//! Weak typicality for the Bernoulli source `(λ₀, λ₁) = (cos²(α/2), sin²(α/2))`
//! underlying `|φ_α⟩`, the projected resource `|ω_n⟩`, and dilution
//! feasibility by majorization.
//!
//! A sequence `x ∈ {0,1}ⁿ` is δ-weakly typical when
//! `2^{−n(H+δ)} ≤ λ_x ≤ 2^{−n(H−δ)}`. Since `λ_x` depends only on the Hamming
//! weight, everything is computed per weight class with binomial
//! multiplicities in the log domain.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::linalg::{self, c, ComplexVector, ZERO};
use crate::measures::binary_entropy;
use crate::state::{PureState, Register};

/// Largest `n` handled by class-based computations.
pub const CLASS_LIMIT: usize = 1024;
/// Largest `n` for explicit member enumeration.
pub const MEMBER_LIMIT: usize = 24;
/// Largest `n` for which `|ω_n⟩` is built as a vector (`4ⁿ` amplitudes).
pub const OMEGA_LIMIT: usize = 12;

/// Slack on the membership inequalities, scaled by `n`, absorbing rounding in
/// the log-weights.
const MEMBERSHIP_SLACK: f64 = 1e-12;

/// All sequences of one Hamming weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TypeClass {
    pub weight: usize,
    /// `C(n, weight)`
    pub count: f64,
    /// `log₂ λ_x` for any member `x`.
    pub log2_prob: f64,
}

impl TypeClass {
    /// Total probability of the class.
    pub fn mass(&self) -> f64 {
        if self.count == 0.0 || self.log2_prob == f64::NEG_INFINITY {
            0.0
        } else {
            (self.count.log2() + self.log2_prob).exp2()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalSet {
    pub n: usize,
    pub delta: f64,
    pub lambda: (f64, f64),
    /// Admitted classes in order of increasing weight.
    pub classes: Vec<TypeClass>,
    /// `P = Σ_{x∈T} λ_x`
    pub weight: f64,
    /// `1 − P`, summed over the rejected classes so it stays accurate when
    /// `P` is close to one.
    pub complement: f64,
    /// `H(λ)` in bits.
    pub entropy: f64,
}

fn log2_prob(n: usize, k: usize, lambda: (f64, f64)) -> f64 {
    let term = |count: usize, p: f64| if count == 0 { 0.0 } else { count as f64 * p.log2() };
    term(n - k, lambda.0) + term(k, lambda.1)
}

/// `C(n, k)` for all `k`, by the multiplicative recurrence.
fn binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut b = 1.0;
    out.push(b);
    for k in 1..=n {
        b = b * (n - k + 1) as f64 / k as f64;
        out.push(b.round());
    }
    out
}

fn check_lambda(lambda: (f64, f64)) -> Result<()> {
    let (a, b) = lambda;
    if !(a >= 0.0 && b >= 0.0) || (a + b - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!("({a}, {b})")));
    }
    Ok(())
}

/// `(cos²(α_θ/2), sin²(α_θ/2))` with `α_θ = √θ`.
pub fn source(theta: f64) -> Result<(f64, f64)> {
    check_range("theta", theta, theta > 0.0 && theta <= FRAC_PI_2, "(0, pi/2]")?;
    let (s, co) = (theta.sqrt() / 2.0).sin_cos();
    Ok((co * co, s * s))
}

pub fn typical_set(lambda: (f64, f64), n: usize, delta: f64) -> Result<TypicalSet> {
    check_lambda(lambda)?;
    check_range("delta", delta, delta >= 0.0 && delta.is_finite(), "[0, inf)")?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            range: "n >= 1",
        });
    }
    if n > CLASS_LIMIT {
        return Err(Error::TooLarge { n, limit: CLASS_LIMIT });
    }
    let h = binary_entropy(lambda.0)?;
    let nf = n as f64;
    let (lo, hi) = (-nf * (h + delta), -nf * (h - delta));
    let slack = MEMBERSHIP_SLACK * nf;
    let counts = binomials(n);
    let (classes, rejected): (Vec<TypeClass>, Vec<TypeClass>) = (0..=n)
        .map(|k| TypeClass {
            weight: k,
            count: counts[k],
            log2_prob: log2_prob(n, k, lambda),
        })
        .partition(|cl| cl.log2_prob >= lo - slack && cl.log2_prob <= hi + slack);
    let weight = classes.iter().map(TypeClass::mass).sum::<f64>().min(1.0);
    let complement = rejected.iter().map(TypeClass::mass).sum::<f64>().min(1.0);
    Ok(TypicalSet {
        n,
        delta,
        lambda,
        classes,
        weight,
        complement,
        entropy: h,
    })
}

impl TypicalSet {
    pub fn is_empty(&self) -> bool {
        self.weight == 0.0
    }

    /// Number of typical sequences.
    pub fn size(&self) -> f64 {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn admits_weight(&self, k: usize) -> bool {
        self.classes.iter().any(|c| c.weight == k)
    }

    /// Whether the sequence with bits `x` (bit `i` for position `i`) is typical.
    pub fn contains(&self, x: u64) -> bool {
        self.admits_weight(x.count_ones() as usize)
    }

    /// Members as bit patterns, ascending.
    pub fn members(&self) -> Result<Vec<u64>> {
        if self.n > MEMBER_LIMIT {
            return Err(Error::TooLarge {
                n: self.n,
                limit: MEMBER_LIMIT,
            });
        }
        Ok((0..1u64 << self.n).filter(|&x| self.contains(x)).collect())
    }

    /// `λ′_x = λ_x / P` per admitted class as `(value, multiplicity)`, in
    /// descending order of value.
    pub fn renormalized(&self) -> Result<Vec<(f64, f64)>> {
        if self.is_empty() {
            return Err(Error::EmptyTypicalSet {
                n: self.n,
                delta: self.delta,
            });
        }
        let mut out: Vec<(f64, f64)> = self
            .classes
            .iter()
            .filter(|c| c.log2_prob > f64::NEG_INFINITY)
            .map(|c| ((c.log2_prob - self.weight.log2()).exp2(), c.count))
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(out)
    }

    /// `2√(1 − P)`
    pub fn eps_prime(&self) -> f64 {
        2.0 * self.complement.sqrt()
    }
}

/// Interleaved labels `A0_1, B0_1, …, A0_n, B0_n` for the resource pairs.
pub fn resource_labels(n: usize) -> Vec<(String, String)> {
    (1..=n).map(|i| (format!("A0_{i}"), format!("B0_{i}"))).collect()
}

fn pair_registers(labels: &[(String, String)]) -> Vec<Register> {
    labels
        .iter()
        .flat_map(|(a, b)| [Register::qubit(a.as_str()), Register::qubit(b.as_str())])
        .collect()
}

/// Amplitudes of `|φ_α⟩^{⊗n}` restricted to sequences passing `keep`, on the
/// interleaved layout; pair digit `3` is `|11⟩`.
fn product_amplitudes(theta: f64, n: usize, keep: impl Fn(usize) -> bool) -> Result<ComplexVector> {
    if n > OMEGA_LIMIT {
        return Err(Error::TooLarge { n, limit: OMEGA_LIMIT });
    }
    let (s, co) = (theta.sqrt() / 2.0).sin_cos();
    let mut v = ComplexVector::from_element(1 << (2 * n), ZERO);
    for x in 0u64..1 << n {
        let k = x.count_ones() as usize;
        if !keep(k) {
            continue;
        }
        let mut index = 0usize;
        for i in 0..n {
            index = index * 4 + if x >> (n - 1 - i) & 1 == 1 { 3 } else { 0 };
        }
        let phase = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][k % 4];
        v[index] = phase * co.powi((n - k) as i32) * s.powi(k as i32);
    }
    Ok(v)
}

/// `|φ_{α_θ}⟩^{⊗n}` on the given pair labels.
pub fn phi_power_on(theta: f64, labels: &[(String, String)]) -> Result<PureState> {
    source(theta)?;
    let v = product_amplitudes(theta, labels.len(), |_| true)?;
    PureState::normalized(pair_registers(labels), v)
}

#[derive(Clone, Debug)]
pub struct Omega {
    pub state: PureState,
    pub typical: TypicalSet,
    /// `2√(1 − P)`, the exact trace distance to `|φ⟩^{⊗n}`.
    pub eps_prime: f64,
}

/// `|ω_n⟩ = Π_{n,δ}|φ_{α_θ}⟩^{⊗n} / ‖·‖` on `A0_i, B0_i`.
pub fn omega_n(theta: f64, n: usize, delta: f64) -> Result<Omega> {
    omega_n_on(theta, delta, &resource_labels(n))
}

pub fn omega_n_on(theta: f64, delta: f64, labels: &[(String, String)]) -> Result<Omega> {
    let n = labels.len();
    let typical = typical_set(source(theta)?, n, delta)?;
    if typical.is_empty() {
        return Err(Error::EmptyTypicalSet { n, delta });
    }
    let v = product_amplitudes(theta, n, |k| typical.admits_weight(k))?;
    let state = PureState::normalized(pair_registers(labels), v)?;
    let eps_prime = typical.eps_prime();
    Ok(Omega {
        state,
        typical,
        eps_prime,
    })
}

/// `‖|ω_n⟩⟨ω_n| − |φ⟩⟨φ|^{⊗n}‖₁` from the eigenvalues of the difference
/// operator restricted to the span of the two vectors.
pub fn eps_prime_by_eigen(theta: f64, n: usize, delta: f64) -> Result<f64> {
    let omega = omega_n(theta, n, delta)?;
    let phi = phi_power_on(theta, &resource_labels(n))?;
    Ok(linalg::trace_norm_of_weighted_projectors(&[
        (1.0, omega.state.amplitudes()),
        (-1.0, phi.amplitudes()),
    ]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dilution {
    pub feasible: bool,
    /// `n(H + δ)`
    pub budget_bits: f64,
    /// Bits actually allotted, `⌈n(H + δ)⌉` unless overridden.
    pub bits: u32,
    /// `min λ′_x`
    pub min_lambda_prime: f64,
}

/// Whether the uniform distribution on `2^bits` outcomes is majorized by
/// `λ′`, i.e. whether `bits` ebits dilute to `|ω_n⟩` by LOCC.
pub fn dilution_feasible(theta: f64, n: usize, delta: f64) -> Result<Dilution> {
    let typical = typical_set(source(theta)?, n, delta)?;
    let budget = n as f64 * (typical.entropy + delta);
    dilution_with_bits(&typical, budget.ceil() as u32)
}

/// Majorization test with an explicit number of Bell pairs.
pub fn dilution_with_bits(typical: &TypicalSet, bits: u32) -> Result<Dilution> {
    let classes = typical.renormalized()?;
    let budget_bits = typical.n as f64 * (typical.entropy + typical.delta);
    let total = (bits as f64).exp2();
    let unit = 1.0 / total;
    let tol = 1e-12;
    let mut feasible = true;
    let (mut count, mut mass) = (0.0f64, 0.0f64);
    // Partial sums of both sides are piecewise linear with breaks at class
    // boundaries and at 2^bits, so checking those points suffices.
    for &(value, mult) in &classes {
        if count + mult >= total {
            feasible = mass + (total - count) * value >= 1.0 - tol;
            break;
        }
        count += mult;
        mass += mult * value;
        if mass < count * unit - tol {
            feasible = false;
            break;
        }
    }
    Ok(Dilution {
        feasible,
        budget_bits,
        bits,
        min_lambda_prime: classes.last().map(|c| c.0).unwrap_or(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "one_minus_P")]
    pub one_minus_p: f64,
    pub eps_prime: f64,
    pub budget_bits: f64,
    /// `None` when the typical set is empty.
    pub feasible: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationScan {
    pub rows: Vec<ScanRow>,
    /// `1 − P` strictly decreasing along the rows.
    pub decreasing: bool,
    /// `P` non-decreasing along the rows.
    pub p_non_decreasing: bool,
    /// `−slope` of the least-squares fit of `ln(1 − P)` against `n`, over
    /// rows with `1 − P > 0`.
    pub fitted_exponent: Option<f64>,
}

pub fn concentration_scan(theta: f64, delta: f64, ns: &[usize]) -> Result<ConcentrationScan> {
    concentration_scan_lambda(source(theta)?, delta, ns)
}

pub fn concentration_scan_lambda(lambda: (f64, f64), delta: f64, ns: &[usize]) -> Result<ConcentrationScan> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let t = typical_set(lambda, n, delta)?;
        let budget = n as f64 * (t.entropy + delta);
        let feasible = if t.is_empty() {
            None
        } else {
            Some(dilution_with_bits(&t, budget.ceil() as u32)?.feasible)
        };
        rows.push(ScanRow {
            n,
            delta,
            p: t.weight,
            one_minus_p: t.complement,
            eps_prime: t.eps_prime(),
            budget_bits: budget,
            feasible,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].one_minus_p < w[0].one_minus_p);
    let p_non_decreasing = rows.windows(2).all(|w| w[1].p >= w[0].p);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.one_minus_p > 0.0)
        .map(|r| (r.n as f64, r.one_minus_p.ln()))
        .collect();
    let fitted_exponent = least_squares_slope(&pts).map(|s| -s);
    Ok(ConcentrationScan {
        rows,
        decreasing,
        p_non_decreasing,
        fitted_exponent,
    })
}

/// Slope of the least-squares line through `pts`; `None` with fewer than two
/// distinct abscissae.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
