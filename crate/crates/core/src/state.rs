//! Pure states and density operators over labeled registers.
//!
//! Registers are stored in order; the first register is the most significant
//! digit of the flat index (row-major Kronecker convention).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    self, clamp_nonnegative, hermitian_eigen, ComplexMatrix, ComplexVector, CLAMP_TOL, EXACT_TOL, ZERO,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    /// Shared so that layouts clone without copying strings.
    pub label: Arc<str>,
    pub dim: usize,
}

impl Register {
    pub fn new(label: impl Into<Arc<str>>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }

    pub fn qubit(label: impl Into<Arc<str>>) -> Self {
        Self::new(label, 2)
    }
}

/// Ordered list of registers with index arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    registers: Vec<Register>,
}

/// Decomposition of the flat index space into a selected group of registers
/// and the remainder: every flat index is `selected[s] + rest[r]`.
#[derive(Clone, Debug)]
pub struct Split {
    pub selected: Vec<usize>,
    pub rest: Vec<usize>,
}

impl Layout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        for (i, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "register `{}` has dimension 0",
                    r.label
                )));
            }
            // register counts stay small, so a quadratic scan beats hashing
            if registers[..i].iter().any(|q| q.label == r.label) {
                return Err(Error::DuplicateLabel(r.label.to_string()));
            }
        }
        Ok(Self { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|r| &*r.label)
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| &*r.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.registers.iter().any(|r| &*r.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.registers[self.position(label)?].dim)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.registers.len()];
        for k in (0..self.registers.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.registers[k + 1].dim;
        }
        strides
    }

    /// Offsets for a register group, enumerated with the first listed
    /// register as the most significant digit, plus offsets for the
    /// complement in layout order.
    pub fn split<S: AsRef<str>>(&self, labels: &[S]) -> Result<Split> {
        let positions = labels
            .iter()
            .map(|l| self.position(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::DuplicateLabel(labels[i].as_ref().to_string()));
            }
        }
        let strides = self.strides();
        let group = |p: usize| (self.registers[p].dim, strides[p]);
        let selected = offsets(positions.iter().map(|&p| group(p)));
        let rest = offsets((0..self.registers.len()).filter(|p| !positions.contains(p)).map(group));
        Ok(Split { selected, rest })
    }

    /// Layout restricted to `labels`, in the given order.
    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<Layout> {
        let regs = labels
            .iter()
            .map(|l| Ok(self.registers[self.position(l.as_ref())?].clone()))
            .collect::<Result<Vec<_>>>()?;
        Layout::new(regs)
    }

    /// Layout without `labels`, preserving order.
    pub fn without<S: AsRef<str>>(&self, labels: &[S]) -> Result<Layout> {
        for l in labels {
            self.position(l.as_ref())?;
        }
        Layout::new(
            self.registers
                .iter()
                .filter(|r| !labels.iter().any(|l| l.as_ref() == &*r.label))
                .cloned()
                .collect(),
        )
    }

    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Layout::new(regs)
    }

    fn same_set(&self, other: &Layout) -> bool {
        self.len() == other.len() && other.registers.iter().all(|r| self.registers.iter().any(|s| s == r))
    }
}

/// All offsets `Σ_g d_g · stride_g` with the first group most significant.
fn offsets(groups: impl Iterator<Item = (usize, usize)> + Clone) -> Vec<usize> {
    let total: usize = groups.clone().map(|g| g.0).product();
    let mut out = Vec::with_capacity(total);
    out.push(0);
    for (dim, stride) in groups {
        let len = out.len();
        // expand in place, keeping earlier groups more significant
        out.resize(len * dim, 0);
        for base_idx in (0..len).rev() {
            let base = out[base_idx];
            for d in 0..dim {
                out[base_idx * dim + d] = base + d * stride;
            }
        }
    }
    out
}

/// A state vector over labeled registers.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: Layout,
    amplitudes: ComplexVector,
    subnormalized: bool,
}

impl PureState {
    /// Normalized state; the norm must equal 1 within `1e-12`.
    pub fn new(registers: Vec<Register>, amplitudes: ComplexVector) -> Result<Self> {
        let layout = Layout::new(registers)?;
        Self::from_layout(layout, amplitudes)
    }

    pub fn from_layout(layout: Layout, amplitudes: ComplexVector) -> Result<Self> {
        let state = Self::raw(layout, amplitudes, false)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// A post-selection intermediate whose norm may be below 1.
    pub fn subnormalized(registers: Vec<Register>, amplitudes: ComplexVector) -> Result<Self> {
        Self::raw(Layout::new(registers)?, amplitudes, true)
    }

    fn raw(layout: Layout, amplitudes: ComplexVector, subnormalized: bool) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for total dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("non-finite amplitude".into()));
        }
        Ok(Self {
            layout,
            amplitudes,
            subnormalized,
        })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(registers: Vec<Register>, amplitudes: ComplexVector) -> Result<Self> {
        let norm = linalg::vector_norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(registers, amplitudes / Complex64::new(norm, 0.0))
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(registers: Vec<Register>, digits: &[usize]) -> Result<Self> {
        let layout = Layout::new(registers)?;
        if digits.len() != layout.len() {
            return Err(Error::DimensionMismatch("one digit per register".into()));
        }
        let mut index = 0;
        for (r, &d) in layout.registers().iter().zip(digits) {
            if d >= r.dim {
                return Err(Error::DimensionMismatch(format!(
                    "digit {d} for register `{}` of dimension {}",
                    r.label, r.dim
                )));
            }
            index = index * r.dim + d;
        }
        let mut amps = ComplexVector::zeros(layout.total_dim());
        amps[index] = linalg::ONE;
        Self::from_layout(layout, amps)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn registers(&self) -> &[Register] {
        self.layout.registers()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::vector_norm(&self.amplitudes)
    }

    /// Kronecker product; register list is the concatenation.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        Self::raw(layout, amps, self.subnormalized || other.subnormalized)
    }

    /// Apply a unitary to the listed registers (identity elsewhere).
    pub fn apply_on<S: AsRef<str>>(&self, gate: &ComplexMatrix, targets: &[S]) -> Result<PureState> {
        linalg::ensure_unitary(gate)?;
        let mut out = self.clone();
        out.apply_in_place(gate, targets)?;
        Ok(out)
    }

    /// In-place application without the unitarity check; callers validate
    /// their gates once up front.
    pub(crate) fn apply_in_place<S: AsRef<str>>(&mut self, gate: &ComplexMatrix, targets: &[S]) -> Result<()> {
        let split = self.layout.split(targets)?;
        let k = split.selected.len();
        if gate.nrows() != k || gate.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} gate on targets of total dimension {k}",
                gate.nrows(),
                gate.ncols()
            )));
        }
        let mut buf = vec![ZERO; k];
        for &base in &split.rest {
            for (t, &off) in split.selected.iter().enumerate() {
                buf[t] = self.amplitudes[base + off];
            }
            for (row, &off) in split.selected.iter().enumerate() {
                let mut acc = ZERO;
                for (col, b) in buf.iter().enumerate() {
                    acc += gate[(row, col)] * b;
                }
                self.amplitudes[base + off] = acc;
            }
        }
        Ok(())
    }

    /// Contract register `label` with `⟨v|`, removing that register. The
    /// result is subnormalized; its squared norm is the outcome probability
    /// when `v` is a unit vector.
    pub fn project_out(&self, label: &str, v: &ComplexVector) -> Result<PureState> {
        let split = self.layout.split(&[label])?;
        if v.len() != split.selected.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis vector of length {} for register `{label}`",
                v.len()
            )));
        }
        let mut amps = ComplexVector::zeros(split.rest.len());
        for (r, &base) in split.rest.iter().enumerate() {
            let mut acc = ZERO;
            for (t, &off) in split.selected.iter().enumerate() {
                acc += v[t].conj() * self.amplitudes[base + off];
            }
            amps[r] = acc;
        }
        Self::raw(self.layout.without(&[label])?, amps, true)
    }

    /// In-place version of [`renormalize`](Self::renormalize); a zero vector
    /// is left untouched.
    pub(crate) fn rescale_to_unit(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes /= Complex64::new(n, 0.0);
            self.subnormalized = false;
        }
    }

    /// Rescale to unit norm and clear the subnormalized flag.
    pub fn renormalize(&self) -> Result<PureState> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: &self.amplitudes / Complex64::new(n, 0.0),
            subnormalized: false,
        })
    }

    /// Same state with registers permuted into `order`.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<PureState> {
        if order.len() != self.layout.len() {
            return Err(Error::DimensionMismatch("reorder must list every register".into()));
        }
        let split = self.layout.split(order)?;
        let amps = ComplexVector::from_iterator(
            split.selected.len(),
            split.selected.iter().map(|&off| self.amplitudes[off]),
        );
        Self::raw(self.layout.subset(order)?, amps, self.subnormalized)
    }

    /// `⟨self|other⟩`, aligning register order by label.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        let other = self.aligned(other)?;
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn aligned(&self, other: &PureState) -> Result<PureState> {
        if !self.layout.same_set(&other.layout) {
            return Err(Error::DimensionMismatch("states live on different registers".into()));
        }
        if self.layout == other.layout {
            Ok(other.clone())
        } else {
            let labels: Vec<&str> = self.layout.labels().collect();
            other.reorder(&labels)
        }
    }

    pub fn density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator {
            layout: self.layout.clone(),
            matrix: m,
        }
    }

    /// Schmidt decomposition across `side_a | rest`.
    pub fn schmidt<S: AsRef<str>>(&self, side_a: &[S]) -> Result<Schmidt> {
        if side_a.is_empty() || side_a.len() == self.layout.len() {
            return Err(Error::EmptyCut);
        }
        let split = self.layout.split(side_a)?;
        let m = ComplexMatrix::from_fn(split.selected.len(), split.rest.len(), |i, j| {
            self.amplitudes[split.selected[i] + split.rest[j]]
        });
        let svd = m.svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let coefficients: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let basis_a = ComplexMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
        let basis_b = ComplexMatrix::from_fn(v_t.ncols(), order.len(), |r, k| v_t[(order[k], r)]);
        Ok(Schmidt {
            coefficients,
            basis_a,
            basis_b,
        })
    }
}

/// Schmidt coefficients (descending) and the matching local bases as
/// columns.
#[derive(Clone, Debug)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    pub basis_a: ComplexMatrix,
    pub basis_b: ComplexMatrix,
}

impl Schmidt {
    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// Entanglement entropy in bits.
    pub fn entropy(&self) -> f64 {
        crate::measures::shannon_entropy(&self.coefficients.iter().map(|c| c * c).collect::<Vec<_>>())
    }
}

/// Density operator over labeled registers.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: Layout,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validated density operator: Hermitian and unit trace within `1e-12`,
    /// minimum eigenvalue at least `-1e-10`.
    pub fn new(registers: Vec<Register>, matrix: ComplexMatrix) -> Result<Self> {
        Self::from_layout(Layout::new(registers)?, matrix)
    }

    pub fn from_layout(layout: Layout, matrix: ComplexMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for total dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > EXACT_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = linalg::hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -CLAMP_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(Self { layout, matrix })
    }

    /// `π_d` on the given registers.
    pub fn maximally_mixed(registers: Vec<Register>) -> Result<Self> {
        let layout = Layout::new(registers)?;
        let d = layout.total_dim();
        let m = linalg::identity(d) / Complex64::new(d as f64, 0.0);
        Ok(Self { layout, matrix: m })
    }

    /// `Σ_i p_i |ψ_i⟩⟨ψ_i|`, all states on the same registers.
    pub fn mixture(weighted: &[(f64, &PureState)]) -> Result<Self> {
        let first = weighted
            .first()
            .ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?
            .1;
        let d = first.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (p, psi) in weighted {
            let psi = first.aligned(psi)?;
            m += (&psi.amplitudes * psi.amplitudes.adjoint()) * Complex64::new(*p, 0.0);
        }
        Self::from_layout(first.layout.clone(), m)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn registers(&self) -> &[Register] {
        self.layout.registers()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues (ascending), clamped per [`linalg::clamp_nonnegative`].
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        clamp_nonnegative(&linalg::hermitian_eigenvalues(&self.matrix))
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(Self {
            layout: self.layout.concat(&other.layout)?,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        })
    }

    /// Reduced operator on `keep`, in the layout's original order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        for l in keep {
            self.layout.position(l.as_ref())?;
        }
        let ordered: Vec<String> = self
            .layout
            .labels()
            .filter(|l| keep.iter().any(|k| k.as_ref() == *l))
            .map(str::to_string)
            .collect();
        let split = self.layout.split(&ordered)?;
        let k = split.selected.len();
        let m = ComplexMatrix::from_fn(k, k, |i, j| {
            let (oi, oj) = (split.selected[i], split.selected[j]);
            split.rest.iter().map(|&r| self.matrix[(oi + r, oj + r)]).sum()
        });
        Ok(Self {
            layout: self.layout.subset(&ordered)?,
            matrix: m,
        })
    }

    /// `U ρ U†` with `U` on `targets`.
    pub fn apply_on<S: AsRef<str>>(&self, gate: &ComplexMatrix, targets: &[S]) -> Result<DensityOperator> {
        linalg::ensure_unitary(gate)?;
        let full = self.embed(gate, targets)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &full * &self.matrix * full.adjoint(),
        })
    }

    /// Lift an operator on `targets` to the full space.
    pub fn embed<S: AsRef<str>>(&self, op: &ComplexMatrix, targets: &[S]) -> Result<ComplexMatrix> {
        embed_operator(&self.layout, op, targets)
    }

    /// Same operator with registers permuted into `order`.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<DensityOperator> {
        if order.len() != self.layout.len() {
            return Err(Error::DimensionMismatch("reorder must list every register".into()));
        }
        let split = self.layout.split(order)?;
        let s = &split.selected;
        let m = ComplexMatrix::from_fn(s.len(), s.len(), |i, j| self.matrix[(s[i], s[j])]);
        Ok(Self {
            layout: self.layout.subset(order)?,
            matrix: m,
        })
    }

    pub(crate) fn aligned_matrix(&self, other: &DensityOperator) -> Result<ComplexMatrix> {
        if !self.layout.same_set(&other.layout) {
            return Err(Error::DimensionMismatch("operators live on different registers".into()));
        }
        if self.layout == other.layout {
            Ok(other.matrix.clone())
        } else {
            let labels: Vec<&str> = self.layout.labels().collect();
            Ok(other.reorder(&labels)?.matrix)
        }
    }

    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        hermitian_eigen(&self.matrix)
    }
}

/// Lift an operator acting on `targets` to the whole layout.
pub fn embed_operator<S: AsRef<str>>(layout: &Layout, op: &ComplexMatrix, targets: &[S]) -> Result<ComplexMatrix> {
    let split = layout.split(targets)?;
    let k = split.selected.len();
    if op.nrows() != k || op.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on targets of dimension {k}",
            op.nrows(),
            op.ncols()
        )));
    }
    let d = layout.total_dim();
    let mut full = ComplexMatrix::zeros(d, d);
    for &base in &split.rest {
        for (i, &oi) in split.selected.iter().enumerate() {
            for (j, &oj) in split.selected.iter().enumerate() {
                full[(base + oi, base + oj)] = op[(i, j)];
            }
        }
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, pauli_z, ONE};

    fn q(l: &str) -> Register {
        Register::qubit(l)
    }

    fn bell(a: &str, b: &str) -> PureState {
        let s = 0.5f64.sqrt();
        PureState::new(
            vec![q(a), q(b)],
            ComplexVector::from_column_slice(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let z = PureState::basis(vec![q("A")], &[0]).unwrap();
        let o = PureState::basis(vec![q("B")], &[1]).unwrap();
        let t = z.tensor(&o).unwrap();
        assert_eq!(t.amplitudes()[1], ONE);
        assert_eq!(t.dim(), 4);
    }

    #[test]
    fn tensor_rejects_duplicate_labels() {
        let z = PureState::basis(vec![q("A")], &[0]).unwrap();
        assert!(matches!(z.tensor(&z), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn bell_tensor_bell_is_normalized() {
        let t = bell("A", "B").tensor(&bell("C", "D")).unwrap();
        assert_eq!(t.dim(), 16);
        assert!((t.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let r = bell("A", "B").density().partial_trace(&["A"]).unwrap();
        let expect = DensityOperator::maximally_mixed(vec![q("A")]).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), expect.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_unknown_label() {
        assert!(matches!(
            bell("A", "B").density().partial_trace(&["Z"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn sigma_z_on_one() {
        let one = PureState::basis(vec![q("A"), q("B")], &[1, 0]).unwrap();
        let out = one.apply_on(&pauli_z(), &["A"]).unwrap();
        assert_eq!(out.amplitudes()[2], -ONE);
    }

    #[test]
    fn apply_rejects_non_unitary_and_bad_dims() {
        let s = PureState::basis(vec![q("A")], &[0]).unwrap();
        let bad = ComplexMatrix::from_element(2, 2, ONE);
        assert!(matches!(s.apply_on(&bad, &["A"]), Err(Error::NotUnitary(_))));
        assert!(matches!(
            s.apply_on(&linalg::identity(4), &["A"]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn apply_respects_target_order() {
        // CNOT with control listed first
        let cnot = ComplexMatrix::from_row_slice(
            4,
            4,
            &[
                ONE, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO,
            ],
        );
        let s = PureState::basis(vec![q("T"), q("C")], &[0, 1]).unwrap();
        let out = s.apply_on(&cnot, &["C", "T"]).unwrap();
        let expect = PureState::basis(vec![q("T"), q("C")], &[1, 1]).unwrap();
        assert!((out.overlap(&expect).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schmidt_of_bell_and_product() {
        let s = bell("A", "B").schmidt(&["A"]).unwrap();
        let h = 0.5f64.sqrt();
        assert!((s.coefficients[0] - h).abs() < 1e-15 && (s.coefficients[1] - h).abs() < 1e-15);
        let p = PureState::basis(vec![q("A"), q("B")], &[0, 0]).unwrap();
        let s = p.schmidt(&["A"]).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.rank(1e-12), 1);
        assert!(matches!(p.schmidt::<&str>(&[]), Err(Error::EmptyCut)));
        assert!(matches!(p.schmidt(&["A", "B"]), Err(Error::EmptyCut)));
    }

    #[test]
    fn reorder_preserves_overlap() {
        let a = bell("A", "B")
            .tensor(&PureState::basis(vec![q("C")], &[1]).unwrap())
            .unwrap();
        let b = a.reorder(&["C", "B", "A"]).unwrap();
        assert!((a.overlap(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)]);
        assert!(DensityOperator::new(vec![q("A")], bad).is_err());
        let nonherm = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), ONE, ZERO, c(0.5, 0.0)]);
        assert!(DensityOperator::new(vec![q("A")], nonherm).is_err());
    }
}
