use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, CLAMP_TOL, ZERO};
use crate::state::DensityOperator;

/// A linear map between operator spaces, stored as its superoperator in the
/// row-major vectorization `vec(X)[i·d + j] = X[i, j]` together with its
/// normalized Choi matrix `C = (1/d_in) Σ_ij |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    in_dim: usize,
    out_dim: usize,
    superop: ComplexMatrix,
    choi: ComplexMatrix,
}

/// Deviations from complete positivity and trace preservation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpResiduals {
    /// Smallest Choi eigenvalue; CP requires it to be `≥ −1e-10`.
    pub choi_min_eigenvalue: f64,
    /// `max |Tr_out C − I/d_in|`.
    pub trace_preservation: f64,
    pub choi_hermiticity: f64,
}

impl CptpResiduals {
    pub fn is_cptp(&self) -> bool {
        self.choi_min_eigenvalue >= -CLAMP_TOL
            && self.trace_preservation <= CLAMP_TOL
            && self.choi_hermiticity <= CLAMP_TOL
    }
}

impl QuantumChannel {
    pub fn from_superoperator(in_dim: usize, out_dim: usize, superop: ComplexMatrix) -> Result<Self> {
        if superop.nrows() != out_dim * out_dim || superop.ncols() != in_dim * in_dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} superoperator for {in_dim} -> {out_dim}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        let scale = Complex64::new(1.0 / in_dim as f64, 0.0);
        let choi = ComplexMatrix::from_fn(in_dim * out_dim, in_dim * out_dim, |r, c| {
            let (i, a) = (r / out_dim, r % out_dim);
            let (j, b) = (c / out_dim, c % out_dim);
            superop[(a * out_dim + b, i * in_dim + j)] * scale
        });
        Ok(Self {
            in_dim,
            out_dim,
            superop,
            choi,
        })
    }

    /// Tabulate a linear map on the matrix units `|i⟩⟨j|`.
    pub fn from_map<F>(in_dim: usize, out_dim: usize, map: F) -> Result<Self>
    where
        F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
    {
        let mut superop = ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let mut unit = ComplexMatrix::zeros(in_dim, in_dim);
                unit[(i, j)] = linalg::ONE;
                let image = map(&unit)?;
                if image.nrows() != out_dim || image.ncols() != out_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "map produced a {}x{} output, expected {out_dim}x{out_dim}",
                        image.nrows(),
                        image.ncols()
                    )));
                }
                let col = i * in_dim + j;
                for a in 0..out_dim {
                    for b in 0..out_dim {
                        superop[(a * out_dim + b, col)] = image[(a, b)];
                    }
                }
            }
        }
        Self::from_superoperator(in_dim, out_dim, superop)
    }

    /// `X ↦ Σ_k K_k X K_k†`
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no Kraus operators".into()))?;
        let (out_dim, in_dim) = first.shape();
        let mut superop = ComplexMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for k in kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            superop += linalg::kron(k, &k.map(|z| z.conj()));
        }
        Self::from_superoperator(in_dim, out_dim, superop)
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        linalg::ensure_unitary(u)?;
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_superoperator(d, d, linalg::identity(d * d)).expect("square identity")
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        &self.superop
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.in_dim;
        if x.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} input for a channel on dimension {d}",
                x.nrows(),
                x.ncols()
            )));
        }
        let v = ComplexMatrix::from_fn(d * d, 1, |r, _| x[(r / d, r % d)]);
        let w = &self.superop * v;
        let o = self.out_dim;
        Ok(ComplexMatrix::from_fn(o, o, |a, b| w[(a * o + b, 0)]))
    }

    /// `self ∘ first`
    pub fn compose(&self, first: &QuantumChannel) -> Result<Self> {
        if first.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot feed a {}-dimensional output into a {}-dimensional input",
                first.out_dim, self.in_dim
            )));
        }
        Self::from_superoperator(first.in_dim, self.out_dim, &self.superop * &first.superop)
    }

    /// Follow the channel by tracing out the trailing `tail` dimensions of its
    /// output (`out_dim = keep · tail`).
    pub fn trace_out_tail(&self, tail: usize) -> Result<Self> {
        if tail == 0 || !self.out_dim.is_multiple_of(tail) {
            return Err(Error::DimensionMismatch(format!(
                "cannot trace a factor of {tail} out of dimension {}",
                self.out_dim
            )));
        }
        let keep = self.out_dim / tail;
        let o = self.out_dim;
        let n_in = self.in_dim * self.in_dim;
        let mut superop = ComplexMatrix::zeros(keep * keep, n_in);
        for a in 0..keep {
            for b in 0..keep {
                for t in 0..tail {
                    let row = (a * tail + t) * o + (b * tail + t);
                    for col in 0..n_in {
                        superop[(a * keep + b, col)] += self.superop[(row, col)];
                    }
                }
            }
        }
        Self::from_superoperator(self.in_dim, keep, superop)
    }

    pub fn cptp_residuals(&self) -> CptpResiduals {
        let (i, o) = (self.in_dim, self.out_dim);
        let reduced = ComplexMatrix::from_fn(i, i, |r, c| (0..o).map(|a| self.choi[(r * o + a, c * o + a)]).sum());
        let target = linalg::identity(i) / Complex64::new(i as f64, 0.0);
        let min = linalg::hermitian_eigenvalues(&self.choi)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        CptpResiduals {
            choi_min_eigenvalue: min,
            trace_preservation: linalg::max_abs_diff(&reduced, &target),
            choi_hermiticity: linalg::hermiticity_defect(&self.choi),
        }
    }

    /// Residuals, or [`Error::NotCptp`] if they exceed `1e-10`.
    pub fn validate(&self) -> Result<CptpResiduals> {
        let r = self.cptp_residuals();
        if r.is_cptp() {
            Ok(r)
        } else {
            Err(Error::NotCptp(format!(
                "min Choi eigenvalue {:.3e}, TP residual {:.3e}, Hermiticity {:.3e}",
                r.choi_min_eigenvalue, r.trace_preservation, r.choi_hermiticity
            )))
        }
    }

    /// `(ℰ ⊗ id)(ρ)` with the channel acting on register `label`. The channel
    /// must preserve dimension.
    pub fn apply_on(&self, rho: &DensityOperator, label: &str) -> Result<DensityOperator> {
        let d = rho.layout().dim_of(label)?;
        if self.in_dim != d || self.out_dim != d {
            return Err(Error::DimensionMismatch(format!(
                "{} -> {} channel on register `{label}` of dimension {d}",
                self.in_dim, self.out_dim
            )));
        }
        let split = rho.layout().split(&[label])?;
        let m = rho.matrix();
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        let mut block = ComplexMatrix::from_element(d, d, ZERO);
        for &r in &split.rest {
            for &s in &split.rest {
                for (i, &oi) in split.selected.iter().enumerate() {
                    for (j, &oj) in split.selected.iter().enumerate() {
                        block[(i, j)] = m[(oi + r, oj + s)];
                    }
                }
                let image = self.apply(&block)?;
                for (a, &oa) in split.selected.iter().enumerate() {
                    for (b, &ob) in split.selected.iter().enumerate() {
                        out[(oa + r, ob + s)] = image[(a, b)];
                    }
                }
            }
        }
        DensityOperator::from_layout(rho.layout().clone(), out)
    }
}
