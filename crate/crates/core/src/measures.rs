//! Entropies, distances and majorization. All logarithms are base 2.
//!
//! The trace distance here is the *unnormalized* trace norm
//! `‖ρ − σ‖₁ = Tr|ρ − σ|`, which ranges over `[0, 2]`. Many texts use half of
//! this quantity.

use crate::error::{Error, Result};
use crate::linalg::{self, clamp_nonnegative, hermitian_eigen, hermitian_eigenvalues, ComplexMatrix};
use crate::state::DensityOperator;

/// Eigenvalues below this contribute nothing to entropies.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Shannon entropy (bits) of a probability vector; entries below
/// [`ENTROPY_FLOOR`] are dropped.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > ENTROPY_FLOOR).map(|&x| -x * x.log2()).sum()
}

/// `h(x) = −x log x − (1−x) log(1−x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    crate::error::check_range("x", x, (0.0..=1.0).contains(&x), "[0, 1]")?;
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(shannon_entropy(&rho.spectrum()?))
}

/// `F(ρ,σ) = (Tr √(√ρ σ √ρ))²`
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let s = rho.aligned_matrix(sigma)?;
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let vals = clamp_nonnegative(&vals)?;
    let sqrt_rho =
        &vecs * linalg::diag(&vals.iter().map(|v| linalg::c(v.sqrt(), 0.0)).collect::<Vec<_>>()) * vecs.adjoint();
    let inner = &sqrt_rho * s * &sqrt_rho;
    let root_sum: f64 = clamp_nonnegative(&hermitian_eigenvalues(&inner))?
        .iter()
        .map(|v| v.sqrt())
        .sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// `‖ρ − σ‖₁`, unnormalized (range `[0, 2]`).
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let s = rho.aligned_matrix(sigma)?;
    Ok(trace_norm(&(rho.matrix() - s)))
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidProbabilities(format!("entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidProbabilities(format!("sums to {total}")));
    }
    Ok(())
}

/// True iff `p` is majorized by `q`: the descending partial sums of `q`
/// dominate those of `p` at every index. The shorter vector is zero-padded.
pub fn majorizes(p: &[f64], q: &[f64]) -> Result<bool> {
    check_distribution(p)?;
    check_distribution(q)?;
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (p, q) = (sorted(p), sorted(q));
    let len = p.len().max(q.len());
    let (mut sp, mut sq) = (0.0, 0.0);
    for i in 0..len {
        sp += p.get(i).copied().unwrap_or(0.0);
        sq += q.get(i).copied().unwrap_or(0.0);
        if sq < sp - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}
