//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Tolerance for unitarity, normalization and Hermiticity checks.
pub const EXACT_TOL: f64 = 1e-12;

/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as numerical zeros.
pub const CLAMP_TOL: f64 = 1e-10;

/// Relative eigenvalue level below which matrix square roots treat an
/// eigenvalue as zero.
const PSD_NOISE: f64 = 1e-14;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{i phase}`
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(entries))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖U†U − I‖_max`, or infinity for non-square input.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    unitarity_defect(u) <= tol
}

pub fn ensure_unitary(u: &ComplexMatrix) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect <= EXACT_TOL {
        Ok(())
    } else {
        Err(Error::NotUnitary(defect))
    }
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascend; eigenvectors
/// are the matching columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    // symmetrize first so tiny anti-Hermitian noise does not leak in
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Clamp eigenvalues in `[-CLAMP_TOL, 0)` to zero; anything more negative is
/// an error.
pub fn clamp_nonnegative(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                Ok(v)
            } else if v >= -CLAMP_TOL {
                Ok(0.0)
            } else {
                Err(Error::NegativeEigenvalue(v))
            }
        })
        .collect()
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_power(m, 0.5, false)
}

/// `m^{-1/2}` on the support of `m` (zero on the kernel).
pub fn psd_inverse_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_power(m, -0.5, true)
}

fn psd_power(m: &ComplexMatrix, power: f64, support_only: bool) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    let values = clamp_nonnegative(&values)?;
    let top = values.iter().cloned().fold(0.0, f64::max);
    // eigenvalues at rounding level are treated as exact zeros; their square
    // roots would otherwise inject ~1e-8 errors
    let noise = PSD_NOISE * top.max(1.0);
    let cut = if support_only { noise.max(CLAMP_TOL) } else { noise };
    let scaled: Vec<Complex64> = values
        .iter()
        .map(|&v| if v <= cut { ZERO } else { c(v.powf(power), 0.0) })
        .collect();
    Ok(&vectors * diag(&scaled) * vectors.adjoint())
}

/// Compare two matrices modulo one global phase. The phase is fixed by the
/// largest-magnitude entry of `b`. Returns the max-norm residual.
pub fn phase_aligned_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let (idx, pivot) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, z)| (i, *z))
        .unwrap_or((0, ZERO));
    if pivot.norm() == 0.0 {
        return max_abs(a);
    }
    let other = a.as_slice()[idx];
    if other.norm() == 0.0 {
        return f64::INFINITY;
    }
    let phase = (pivot / other) / (pivot / other).norm();
    max_abs_diff(&(a * phase), b)
}

pub fn vector_norm(v: &ComplexVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Trace norm of `Σ_i w_i |v_i⟩⟨v_i|` for real (possibly negative) weights,
/// computed inside the span of the vectors. Avoids forming the full operator
/// when the ambient dimension is much larger than the number of terms.
pub fn trace_norm_of_weighted_projectors(terms: &[(f64, &ComplexVector)]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let dim = terms[0].1.len();
    let k = terms.len();
    // X has columns sqrt|w_i| v_i; the operator is X D X† with D = sign(w).
    let mut x = ComplexMatrix::zeros(dim, k);
    let mut signs = Vec::with_capacity(k);
    for (col, (w, v)) in terms.iter().enumerate() {
        let s = w.abs().sqrt();
        for r in 0..dim {
            x[(r, col)] = v[r] * s;
        }
        signs.push(if *w < 0.0 { -1.0 } else { 1.0 });
    }
    let small = if dim >= k {
        let r = x.qr().r();
        let d = diag(&signs.iter().map(|&s| c(s, 0.0)).collect::<Vec<_>>());
        &r * d * r.adjoint()
    } else {
        let d = diag(&signs.iter().map(|&s| c(s, 0.0)).collect::<Vec<_>>());
        &x * d * x.adjoint()
    };
    hermitian_eigenvalues(&small).iter().map(|v| v.abs()).sum()
}
