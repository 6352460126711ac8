//! Gate and resource-state constructors.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::linalg::{self, c, cis, diag, kron, ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::matrix_io::MatrixFile;
use crate::state::{PureState, Register};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    UTheta,
    UTildeTheta,
    ControlledZ,
    SigmaZ,
    Custom,
}

/// A named unitary. `theta` is set for the parametrized kinds.
#[derive(Clone, Debug)]
pub struct GateSpec {
    pub kind: GateKind,
    pub theta: Option<f64>,
    pub matrix: ComplexMatrix,
}

impl GateSpec {
    /// Wraps an arbitrary matrix after checking unitarity.
    pub fn custom(matrix: ComplexMatrix) -> Result<Self> {
        linalg::ensure_unitary(&matrix)?;
        Ok(Self {
            kind: GateKind::Custom,
            theta: None,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Hermitian conjugate. Kind is kept; for `UTildeTheta` the angle flips.
    pub fn dagger(&self) -> GateSpec {
        let theta = match self.kind {
            GateKind::UTildeTheta => self.theta.map(|t| -t),
            _ => self.theta,
        };
        let kind = match self.kind {
            GateKind::UTildeTheta | GateKind::ControlledZ | GateKind::SigmaZ => self.kind,
            _ => GateKind::Custom,
        };
        GateSpec {
            kind,
            theta,
            matrix: self.matrix.adjoint(),
        }
    }
}

/// `U_θ = |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ e^{iθσ_z}` = `diag(1, 1, e^{iθ}, e^{−iθ})`.
pub fn u_theta(theta: f64) -> Result<GateSpec> {
    check_range(
        "theta",
        theta,
        theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2,
        "(0, pi/2]",
    )?;
    Ok(GateSpec {
        kind: GateKind::UTheta,
        theta: Some(theta),
        matrix: diag(&[ONE, ONE, cis(theta), cis(-theta)]),
    })
}

/// `Ũ_θ = cos(θ/2) I⊗I + i sin(θ/2) σ_z⊗σ_z`, defined for every real θ
/// since repair steps compose angles outside `(0, π/2]`.
pub fn u_tilde_theta(theta: f64) -> GateSpec {
    let (p, m) = (cis(theta / 2.0), cis(-theta / 2.0));
    GateSpec {
        kind: GateKind::UTildeTheta,
        theta: Some(theta),
        matrix: diag(&[p, m, m, p]),
    }
}

pub fn controlled_z() -> GateSpec {
    GateSpec {
        kind: GateKind::ControlledZ,
        theta: None,
        matrix: diag(&[ONE, ONE, ONE, -ONE]),
    }
}

pub fn sigma_z() -> GateSpec {
    GateSpec {
        kind: GateKind::SigmaZ,
        theta: None,
        matrix: linalg::pauli_z(),
    }
}

/// CNOT with the first qubit as control.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, ONE, ZERO, ZERO, //
            ZERO, ZERO, ZERO, ONE, //
            ZERO, ZERO, ONE, ZERO,
        ],
    )
}

/// `|φ_α⟩ = cos(α/2)|00⟩ + i sin(α/2)|11⟩` on registers `(A0, B0)`.
pub fn phi_alpha(alpha: f64) -> Result<PureState> {
    phi_alpha_on(alpha, "A0", "B0")
}

pub fn phi_alpha_on(alpha: f64, a: &str, b: &str) -> Result<PureState> {
    check_range("alpha", alpha, alpha > 0.0 && alpha <= std::f64::consts::PI, "(0, pi]")?;
    let (s, co) = (alpha / 2.0).sin_cos();
    PureState::new(
        vec![Register::qubit(a), Register::qubit(b)],
        ComplexVector::from_column_slice(&[c(co, 0.0), ZERO, ZERO, c(0.0, s)]),
    )
}

/// `|Φ_d⟩ = d^{-1/2} Σ_i |ii⟩` on `(A0, B0)`.
pub fn max_entangled(d: usize) -> Result<PureState> {
    max_entangled_on(d, "A0", "B0")
}

pub fn max_entangled_on(d: usize, a: &str, b: &str) -> Result<PureState> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    let mut v = ComplexVector::zeros(d * d);
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::new(vec![Register::new(a, d), Register::new(b, d)], v)
}

/// Local unitaries with `(A₁⊗B₁) Ũ_θ (A₂⊗B₂) = U_θ` up to global phase.
#[derive(Clone, Debug)]
pub struct LocalEquivalence {
    pub a1: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub b2: ComplexMatrix,
    /// Phase-aligned max-norm residual of the identity.
    pub residual: f64,
}

/// `U_θ = (σ_x ⊗ e^{iθσ_z/2}) Ũ_θ (σ_x ⊗ I)`; checked numerically before
/// being returned.
pub fn local_equivalence(theta: f64) -> Result<LocalEquivalence> {
    let target = u_theta(theta)?;
    let a1 = linalg::pauli_x();
    let b1 = diag(&[cis(theta / 2.0), cis(-theta / 2.0)]);
    let a2 = linalg::pauli_x();
    let b2 = linalg::identity(2);
    let composed = kron(&a1, &b1) * &u_tilde_theta(theta).matrix * kron(&a2, &b2);
    let residual = linalg::phase_aligned_diff(&composed, &target.matrix);
    if residual > linalg::EXACT_TOL {
        return Err(Error::Internal(format!(
            "local equivalence failed at theta = {theta} (residual {residual:.3e})"
        )));
    }
    Ok(LocalEquivalence {
        a1,
        b1,
        a2,
        b2,
        residual,
    })
}

/// Gate selector accepted on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum GateSelector {
    UTheta(f64),
    UTilde(f64),
    UTildeDagger(f64),
    Czz,
    File(String),
}

impl FromStr for GateSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let angle = || -> Result<f64> {
            let a = arg.ok_or_else(|| Error::Parse(format!("`{s}` needs an angle")))?;
            let v: f64 = a.parse().map_err(|_| Error::Parse(format!("bad angle `{a}`")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("bad angle `{a}`")));
            }
            Ok(v)
        };
        match kind {
            "utheta" => Ok(Self::UTheta(angle()?)),
            "utilde" => Ok(Self::UTilde(angle()?)),
            "utilde-dagger" => Ok(Self::UTildeDagger(angle()?)),
            "czz" if arg.is_none() => Ok(Self::Czz),
            "file" => match arg {
                Some(p) if !p.is_empty() => Ok(Self::File(p.to_string())),
                _ => Err(Error::Parse("`file:` needs a path".into())),
            },
            _ => Err(Error::Parse(format!("unknown gate selector `{s}`"))),
        }
    }
}

impl fmt::Display for GateSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UTheta(t) => write!(f, "utheta:{t}"),
            Self::UTilde(t) => write!(f, "utilde:{t}"),
            Self::UTildeDagger(t) => write!(f, "utilde-dagger:{t}"),
            Self::Czz => write!(f, "czz"),
            Self::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl GateSelector {
    pub fn build(&self) -> Result<GateSpec> {
        match self {
            Self::UTheta(t) => u_theta(*t),
            Self::UTilde(t) => Ok(u_tilde_theta(*t)),
            Self::UTildeDagger(t) => Ok(u_tilde_theta(*t).dagger()),
            Self::Czz => Ok(controlled_z()),
            Self::File(p) => GateSpec::custom(MatrixFile::read(p)?.matrix()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, I};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn u_theta_at_half_pi() {
        let u = u_theta(FRAC_PI_2).unwrap();
        let expect = diag(&[ONE, ONE, I, -I]);
        assert!(max_abs_diff(&u.matrix, &expect) < 1e-15);
        assert!(u_theta(0.0).is_err());
        assert!(u_theta(2.0).is_err());
        assert!(linalg::is_unitary(&u_theta(0.3).unwrap().matrix, 1e-12));
        assert!(max_abs_diff(&u_theta(1e-12).unwrap().matrix, &linalg::identity(4)) < 1e-11);
    }

    #[test]
    fn u_tilde_values() {
        assert!(max_abs_diff(&u_tilde_theta(0.0).matrix, &linalg::identity(4)) < 1e-15);
        let expect = diag(&[I, -I, -I, I]);
        assert!(max_abs_diff(&u_tilde_theta(PI).matrix, &expect) < 1e-15);
    }

    #[test]
    fn u_tilde_matches_its_definition() {
        let t: f64 = 0.77;
        let zz = kron(&linalg::pauli_z(), &linalg::pauli_z());
        let def = linalg::identity(4) * c((t / 2.0).cos(), 0.0) + zz * c(0.0, (t / 2.0).sin());
        assert!(max_abs_diff(&u_tilde_theta(t).matrix, &def) < 1e-15);
    }

    #[test]
    fn u_tilde_composes() {
        let (t, tp) = (1.1, -0.4);
        let prod = &u_tilde_theta(t - tp).matrix * &u_tilde_theta(tp).matrix;
        assert!(max_abs_diff(&prod, &u_tilde_theta(t).matrix) < 1e-12);
    }

    #[test]
    fn phi_alpha_entropy() {
        let s = phi_alpha(FRAC_PI_2).unwrap();
        assert!((s.schmidt(&["A0"]).unwrap().entropy() - 1.0).abs() < 1e-12);
        let s = phi_alpha(1e-9).unwrap();
        assert!(s.schmidt(&["A0"]).unwrap().entropy() < 1e-12);
        assert!(phi_alpha(0.0).is_err());
        assert!(phi_alpha(4.0).is_err());
        let s = phi_alpha(1.0).unwrap();
        let x = 0.5f64.cos().powi(2);
        assert!((x - 0.770_151_152_934_069_9).abs() < 1e-12);
        let h = crate::measures::binary_entropy(x).unwrap();
        assert!((s.schmidt(&["A0"]).unwrap().entropy() - h).abs() < 1e-12);
    }

    #[test]
    fn phi_alpha_schmidt_coefficients() {
        let a = PI / 3.0;
        let sc = phi_alpha(a).unwrap().schmidt(&["A0"]).unwrap();
        assert!((sc.coefficients[0] - (PI / 6.0).cos()).abs() < 1e-12);
        assert!((sc.coefficients[1] - (PI / 6.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn max_entangled_states() {
        assert!((max_entangled(2).unwrap().schmidt(&["A0"]).unwrap().entropy() - 1.0).abs() < 1e-12);
        assert!((max_entangled(4).unwrap().schmidt(&["A0"]).unwrap().entropy() - 2.0).abs() < 1e-12);
        assert!(max_entangled(1).is_err());
        let r = max_entangled(3).unwrap().density().partial_trace(&["A0"]).unwrap();
        assert!(max_abs_diff(r.matrix(), &(linalg::identity(3) / c(3.0, 0.0))) < 1e-15);
    }

    #[test]
    fn local_equivalence_holds() {
        for t in [FRAC_PI_2, 0.1, 0.9] {
            let le = local_equivalence(t).unwrap();
            let composed = kron(&le.a1, &le.b1) * &u_tilde_theta(t).matrix * kron(&le.a2, &le.b2);
            assert!(linalg::phase_aligned_diff(&composed, &u_theta(t).unwrap().matrix) < 1e-12);
        }
    }

    #[test]
    fn selectors() {
        assert_eq!("utheta:0.5".parse::<GateSelector>().unwrap(), GateSelector::UTheta(0.5));
        assert_eq!("czz".parse::<GateSelector>().unwrap(), GateSelector::Czz);
        assert_eq!(
            "utilde-dagger:1".parse::<GateSelector>().unwrap(),
            GateSelector::UTildeDagger(1.0)
        );
        assert!("utilde".parse::<GateSelector>().is_err());
        assert!("foo:1".parse::<GateSelector>().is_err());
        assert!("file:".parse::<GateSelector>().is_err());
        let d = GateSelector::UTildeDagger(0.5).build().unwrap();
        assert!(max_abs_diff(&d.matrix, &u_tilde_theta(-0.5).matrix) < 1e-15);
    }
}
