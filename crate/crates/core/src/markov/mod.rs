//! Markovianizing cost of a bipartite unitary.
//!
//! For `U` on `A⊗B` (each of dimension `d`) let
//! `|Ψ_U⟩ = (U ⊗ I)|Φ_d⟩^{A R_A}|Φ_d⟩^{B R_B}`. The Petz recovery map of
//! `Ψ_U` from `A` to `A B R_B` induces a channel `ℰ_U` on `A`; its Cesàro
//! limit `ℰ_∞` applied to `|Φ_d⟩` gives `Φ_∞`, and `M(U) = S(Φ_∞)`. Any
//! two-round protocol implementing `U` at rate `E` needs `E ≥ M(U†)`.

mod channel;

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

pub use channel::{CptpResiduals, QuantumChannel};

use crate::error::{Error, Result};
use crate::gates::{self, GateSpec};
use crate::linalg::{self, ComplexMatrix};
use crate::measures::entropy;
use crate::state::{DensityOperator, PureState};

/// Singular values of `S − I` below this span the fixed-point space.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Default doubling cap for the power-sum Cesàro average (`N ≤ 2^50`).
pub const MAX_DOUBLINGS: u32 = 50;

fn check_gate(u: &GateSpec, d: usize) -> Result<()> {
    if d < 2 || u.dim() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "gate of dimension {} is not a {d}x{d} bipartite unitary",
            u.dim()
        )));
    }
    Ok(())
}

/// `|Ψ_U⟩` on registers `(A, R_A, B, R_B)`.
pub fn psi_u(u: &GateSpec, d: usize) -> Result<PureState> {
    psi_u_on(u, d, ["A", "RA", "B", "RB"])
}

/// `|Ψ_U⟩` with custom labels, given in the order `[A, R_A, B, R_B]`.
pub fn psi_u_on(u: &GateSpec, d: usize, labels: [&str; 4]) -> Result<PureState> {
    check_gate(u, d)?;
    let [a, ra, b, rb] = labels;
    let phi = gates::max_entangled_on(d, a, ra)?.tensor(&gates::max_entangled_on(d, b, rb)?)?;
    phi.apply_on(&u.matrix, &[a, b])
}

/// `ℛ_U(τ) = (1/d) U (Tr_B[U†(τ⊗I)U] ⊗ Φ_d^{B R_B}) U†`, a channel from `A`
/// to `(A, B, R_B)`.
pub fn petz_recovery(u: &GateSpec, d: usize) -> Result<QuantumChannel> {
    check_gate(u, d)?;
    let phi = gates::max_entangled(d)?.density();
    let big_u = linalg::kron(&u.matrix, &linalg::identity(d));
    let scale = Complex64::new(1.0 / d as f64, 0.0);
    let ch = QuantumChannel::from_map(d, d * d * d, |tau| {
        let m = u.matrix.adjoint() * linalg::kron(tau, &linalg::identity(d)) * &u.matrix;
        let reduced = ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|t| m[(i * d + t, j * d + t)]).sum());
        let inner = linalg::kron(&reduced, phi.matrix());
        Ok(&big_u * inner * big_u.adjoint() * scale)
    })?;
    ch.validate()?;
    Ok(ch)
}

/// The Petz map built directly from the marginals of `Ψ_U`:
/// `ℛ(τ) = Ψ_{ABR_B}^{1/2} (Ψ_A^{-1/2} τ Ψ_A^{-1/2} ⊗ I) Ψ_{ABR_B}^{1/2}`.
/// Independent of [`petz_recovery`], which uses the simplified form.
pub fn petz_recovery_from_marginals(u: &GateSpec, d: usize) -> Result<QuantumChannel> {
    let psi = psi_u(u, d)?.density();
    let big = psi.partial_trace(&["A", "B", "RB"])?;
    let small = psi.partial_trace(&["A"])?;
    let big_sqrt = linalg::psd_sqrt(big.matrix())?;
    let small_isqrt = linalg::psd_inverse_sqrt(small.matrix())?;
    let ch = QuantumChannel::from_map(d, d * d * d, |tau| {
        let core = &small_isqrt * tau * &small_isqrt;
        Ok(&big_sqrt * linalg::kron(&core, &linalg::identity(d * d)) * &big_sqrt)
    })?;
    ch.validate()?;
    Ok(ch)
}

/// `ℰ_U = Tr_{B R_B} ∘ ℛ_U`
pub fn induced_channel(u: &GateSpec, d: usize) -> Result<QuantumChannel> {
    let ch = petz_recovery(u, d)?.trace_out_tail(d * d)?;
    ch.validate()?;
    Ok(ch)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CesaroMethod {
    Spectral,
    Power { terms: u64 },
}

/// `lim_N (1/N) Σ_{n=1}^N S^n` as the oblique projector onto the fixed-point
/// space of `S` along the other generalized eigenspaces:
/// `P = R (L†R)^{-1} L†` with `R`, `L` the right and left kernels of `S − I`.
pub fn cesaro_spectral(e: &QuantumChannel) -> Result<QuantumChannel> {
    square(e)?;
    let s = e.superoperator();
    let n = s.nrows();
    let diff = s - linalg::identity(n);
    let svd = diff.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Internal("SVD did not return singular vectors".into())),
    };
    let kernel: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] < FIXED_POINT_TOL).collect();
    if kernel.is_empty() {
        return Err(Error::Singular("channel has no fixed points".into()));
    }
    let right = ComplexMatrix::from_fn(n, kernel.len(), |r, k| v_t[(kernel[k], r)].conj());
    let left = ComplexMatrix::from_fn(n, kernel.len(), |r, k| u[(r, kernel[k])]);
    let gram = left.adjoint() * &right;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Singular("fixed-point space is defective".into()))?;
    QuantumChannel::from_superoperator(e.in_dim(), e.out_dim(), &right * inv * left.adjoint())
}

/// Cesàro partial sums at `N = 2^k` by doubling:
/// `Σ_{2N} = Σ_N + S^N Σ_N`. Stops when successive averages differ by at
/// most `tolerance` (entrywise); returns the number of terms used. The
/// peripheral spectrum must be roots of unity of order `2^k` for the power to
/// settle, which covers the channels built here; otherwise the averages still
/// converge but more slowly.
pub fn cesaro_power(e: &QuantumChannel, tolerance: f64, max_doublings: u32) -> Result<(QuantumChannel, u64)> {
    square(e)?;
    let s = e.superoperator();
    let mut power = s.clone();
    let mut sum = s.clone();
    let mut terms: u64 = 1;
    let mut average = sum.clone();
    let mut frozen = false;
    let mut last_gap = f64::INFINITY;
    for _ in 0..max_doublings {
        sum = &sum + &power * &sum;
        if !frozen {
            // once S^N is idempotent to rounding level it stays put; squaring
            // further would only amplify rounding on the unit eigenvalues
            let squared = &power * &power;
            let gap = linalg::max_abs_diff(&squared, &power);
            frozen = gap <= 1e-12 || (gap < 1e-8 && gap >= last_gap);
            last_gap = gap;
            power = squared;
        }
        terms *= 2;
        let next = &sum / Complex64::new(terms as f64, 0.0);
        let change = linalg::max_abs_diff(&next, &average);
        average = next;
        if terms >= 16 && change <= tolerance {
            let ch = QuantumChannel::from_superoperator(e.in_dim(), e.out_dim(), average)?;
            return Ok((ch, terms));
        }
    }
    Err(Error::NoConvergence(terms))
}

fn square(e: &QuantumChannel) -> Result<()> {
    if e.in_dim() != e.out_dim() {
        return Err(Error::DimensionMismatch(
            "Cesaro averages need a channel from a space to itself".into(),
        ));
    }
    Ok(())
}

/// `ℰ_∞`: spectral projector, checked for idempotence and `ℰ∘ℰ_∞ = ℰ_∞`;
/// falls back to power sums if the spectral route fails those checks.
pub fn cesaro_limit(e: &QuantumChannel, tolerance: f64) -> Result<(QuantumChannel, CesaroMethod)> {
    if let Ok(p) = cesaro_spectral(e) {
        let (idem, comm) = fixed_point_residuals(e, &p);
        if idem <= tolerance && comm <= tolerance {
            return Ok((p, CesaroMethod::Spectral));
        }
    }
    let (p, terms) = cesaro_power(e, tolerance, MAX_DOUBLINGS)?;
    Ok((p, CesaroMethod::Power { terms }))
}

/// `(‖P∘P − P‖_max, max(‖S∘P − P‖_max, ‖P∘S − P‖_max))`
pub fn fixed_point_residuals(e: &QuantumChannel, limit: &QuantumChannel) -> (f64, f64) {
    let s = e.superoperator();
    let p = limit.superoperator();
    let idem = linalg::max_abs_diff(&(p * p), p);
    let comm = linalg::max_abs_diff(&(s * p), p).max(linalg::max_abs_diff(&(p * s), p));
    (idem, comm)
}

#[derive(Clone, Debug)]
pub struct MarkovReport {
    pub cost_bits: f64,
    /// `Φ_∞ = (ℰ_∞ ⊗ id)(Φ_d)` on `(A, R_A)`.
    pub fixed_point: DensityOperator,
    /// Eigenvalues of `Φ_∞`, ascending.
    pub fixed_point_spectrum: Vec<f64>,
    pub petz: CptpResiduals,
    pub induced: CptpResiduals,
    pub limit: CptpResiduals,
    pub idempotence: f64,
    pub commutation: f64,
    pub method: CesaroMethod,
    pub induced_channel: QuantumChannel,
    pub limit_channel: QuantumChannel,
}

impl MarkovReport {
    /// `{"markov_cost_bits", "fixed_point_spectrum", "cptp_residuals"}`
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "markov_cost_bits": self.cost_bits,
            "fixed_point_spectrum": self.fixed_point_spectrum,
            "cptp_residuals": {
                "petz": self.petz,
                "induced": self.induced,
                "limit": self.limit,
                "idempotence": self.idempotence,
                "commutation": self.commutation,
            },
            "cesaro": self.method,
        })
    }
}

/// `M(U) = S(Φ_∞)`.
pub fn markov_cost(u: &GateSpec, d: usize) -> Result<MarkovReport> {
    let petz = petz_recovery(u, d)?;
    let petz_res = petz.validate()?;
    let induced = petz.trace_out_tail(d * d)?;
    let induced_res = induced.validate()?;
    let (limit, method) = cesaro_limit(&induced, 1e-10)?;
    let limit_res = limit.validate()?;
    let (idempotence, commutation) = fixed_point_residuals(&induced, &limit);
    let phi = gates::max_entangled_on(d, "A", "RA")?.density();
    let fixed_point = limit.apply_on(&phi, "A")?;
    let spectrum = fixed_point.spectrum()?;
    Ok(MarkovReport {
        cost_bits: entropy(&fixed_point)?,
        fixed_point,
        fixed_point_spectrum: spectrum,
        petz: petz_res,
        induced: induced_res,
        limit: limit_res,
        idempotence,
        commutation,
        method,
        induced_channel: induced,
        limit_channel: limit,
    })
}

fn marginal_entropy(rho: &DensityOperator, keep: &[&str]) -> Result<f64> {
    if keep.is_empty() {
        return Ok(0.0);
    }
    entropy(&rho.partial_trace(keep)?)
}

/// `I(A:B|C) = S(AC) + S(BC) − S(ABC) − S(C)`. Values in `[−1e-9, 0)` are
/// clamped to zero; groups must be disjoint.
pub fn conditional_mutual_information<S: AsRef<str>>(rho: &DensityOperator, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
    let mut seen = BTreeSet::new();
    for l in a.iter().chain(b).chain(c) {
        rho.layout().position(l.as_ref())?;
        if !seen.insert(l.as_ref()) {
            return Err(Error::DuplicateLabel(l.as_ref().to_string()));
        }
    }
    let a: Vec<&str> = a.iter().map(|l| l.as_ref()).collect();
    let b: Vec<&str> = b.iter().map(|l| l.as_ref()).collect();
    let c: Vec<&str> = c.iter().map(|l| l.as_ref()).collect();
    let cmi = marginal_entropy(rho, &[&a[..], &c[..]].concat())? + marginal_entropy(rho, &[&b[..], &c[..]].concat())?
        - marginal_entropy(rho, &[&a[..], &b[..], &c[..]].concat())?
        - marginal_entropy(rho, &c)?;
    if (-1e-9..0.0).contains(&cmi) {
        Ok(0.0)
    } else {
        Ok(cmi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::u_tilde_theta;
    use crate::linalg::{c, pauli_x, pauli_z};
    use std::f64::consts::FRAC_PI_2;

    fn identity_gate() -> GateSpec {
        GateSpec::custom(linalg::identity(4)).unwrap()
    }

    fn random_density(seed: u64) -> ComplexMatrix {
        use rand::Rng;
        let mut rng = crate::rng::trial_rng(seed, 0);
        let a = ComplexMatrix::from_fn(2, 2, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &a * a.adjoint();
        let t = m.trace();
        m / t
    }

    #[test]
    fn psi_u_basics() {
        let psi = psi_u(&identity_gate(), 2).unwrap();
        let want = gates::max_entangled_on(2, "A", "RA")
            .unwrap()
            .tensor(&gates::max_entangled_on(2, "B", "RB").unwrap())
            .unwrap();
        assert!((psi.overlap(&want).unwrap() - 1.0).abs() < 1e-14);
        let psi = psi_u(&u_tilde_theta(0.8), 2).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let a = psi.density().partial_trace(&["A"]).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), &(linalg::identity(2) * c(0.5, 0.0))) < 1e-14);
        assert!(psi_u(&u_tilde_theta(0.8), 3).is_err());
    }

    #[test]
    fn petz_of_identity_appends_max_entangled() {
        let r = petz_recovery(&identity_gate(), 2).unwrap();
        let phi = gates::max_entangled(2).unwrap().density();
        let tau = random_density(3);
        let got = r.apply(&tau).unwrap();
        assert!(linalg::max_abs_diff(&got, &linalg::kron(&tau, phi.matrix())) < 1e-14);
        assert!((got.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn petz_forms_agree() {
        for t in [0.3, 1.0, FRAC_PI_2] {
            let u = u_tilde_theta(t).dagger();
            let a = petz_recovery(&u, 2).unwrap();
            let b = petz_recovery_from_marginals(&u, 2).unwrap();
            let d = linalg::max_abs_diff(a.superoperator(), b.superoperator());
            assert!(d < 1e-12, "{t}: {d}");
        }
    }

    #[test]
    fn induced_channel_is_a_dephasing_mixture() {
        for t in [0.1, 0.5, 1.0, FRAC_PI_2] {
            let e = induced_channel(&u_tilde_theta(t).dagger(), 2).unwrap();
            let (keep, flip) = ((1.0 + t.cos().powi(2)) / 2.0, t.sin().powi(2) / 2.0);
            let tau = random_density(7);
            let want = &tau * c(keep, 0.0) + pauli_z() * &tau * pauli_z() * c(flip, 0.0);
            assert!(linalg::max_abs_diff(&e.apply(&tau).unwrap(), &want) < 1e-12);
            let pi = linalg::identity(2) * c(0.5, 0.0);
            assert!(linalg::max_abs_diff(&e.apply(&pi).unwrap(), &pi) < 1e-14);
        }
        let e = induced_channel(&identity_gate(), 2).unwrap();
        assert!(linalg::max_abs_diff(e.superoperator(), &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn cesaro_routes_agree() {
        let e = induced_channel(&u_tilde_theta(0.5).dagger(), 2).unwrap();
        let spectral = cesaro_spectral(&e).unwrap();
        let (power, terms) = cesaro_power(&e, 1e-12, MAX_DOUBLINGS).unwrap();
        assert!(terms > 16);
        assert!(linalg::max_abs_diff(spectral.superoperator(), power.superoperator()) < 1e-9);
        let tau = random_density(1);
        let dephased = linalg::diag(&[tau[(0, 0)], tau[(1, 1)]]);
        assert!(linalg::max_abs_diff(&spectral.apply(&tau).unwrap(), &dephased) < 1e-12);
    }

    #[test]
    fn cesaro_kills_oscillation() {
        let flip = QuantumChannel::unitary(&pauli_x()).unwrap();
        let (p, method) = cesaro_limit(&flip, 1e-10).unwrap();
        assert_eq!(method, CesaroMethod::Spectral);
        // average of τ and XτX
        let tau = random_density(5);
        let want = (&tau + pauli_x() * &tau * pauli_x()) * c(0.5, 0.0);
        assert!(linalg::max_abs_diff(&p.apply(&tau).unwrap(), &want) < 1e-12);
        let (q, _) = cesaro_power(&flip, 1e-12, MAX_DOUBLINGS).unwrap();
        assert!(linalg::max_abs_diff(p.superoperator(), q.superoperator()) < 1e-9);
        let id = QuantumChannel::identity(3);
        let (p, _) = cesaro_limit(&id, 1e-10).unwrap();
        assert!(linalg::max_abs_diff(p.superoperator(), &linalg::identity(9)) < 1e-12);
    }

    #[test]
    fn power_sum_reports_non_convergence() {
        let e = induced_channel(&u_tilde_theta(0.5).dagger(), 2).unwrap();
        assert!(matches!(cesaro_power(&e, 1e-12, 3), Err(Error::NoConvergence(8))));
    }

    #[test]
    fn markov_cost_values() {
        for t in [0.1, 0.5, 1.0, FRAC_PI_2] {
            let r = markov_cost(&u_tilde_theta(t).dagger(), 2).unwrap();
            assert!((r.cost_bits - 1.0).abs() < 1e-9, "{t}: {}", r.cost_bits);
            let want = linalg::diag(&[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
            assert!(linalg::max_abs_diff(r.fixed_point.matrix(), &want) < 1e-10);
        }
        let r = markov_cost(&identity_gate(), 2).unwrap();
        assert!(r.cost_bits.abs() < 1e-9);
        let cnot = GateSpec::custom(gates::cnot()).unwrap();
        let r = markov_cost(&cnot, 2).unwrap();
        assert!(r.cost_bits >= 0.0 && r.cost_bits <= 2.0 + 1e-12);
    }

    #[test]
    fn cmi_examples() {
        let pa = gates::max_entangled_on(2, "A", "X").unwrap().density();
        let rho = pa
            .partial_trace(&["A"])
            .unwrap()
            .tensor(&DensityOperator::maximally_mixed(vec![crate::Register::qubit("B")]).unwrap())
            .unwrap()
            .tensor(&DensityOperator::maximally_mixed(vec![crate::Register::qubit("C")]).unwrap())
            .unwrap();
        assert!(
            conditional_mutual_information(&rho, &["A"], &["B"], &["C"])
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(matches!(
            conditional_mutual_information(&rho, &["A"], &["A"], &["C"]),
            Err(Error::DuplicateLabel(_))
        ));

        let psi = psi_u(&u_tilde_theta(1.0), 2).unwrap().density();
        let raw = conditional_mutual_information(&psi, &["A"], &["B", "RB"], &["RA"]).unwrap();
        assert!(raw > 1e-3);
        let limit = markov_cost(&u_tilde_theta(1.0).dagger(), 2).unwrap().limit_channel;
        let dephased = limit.apply_on(&psi, "A").unwrap();
        let cmi = conditional_mutual_information(&dephased, &["A"], &["B", "RB"], &["RA"]).unwrap();
        assert!(cmi.abs() < 1e-9);
    }
}
