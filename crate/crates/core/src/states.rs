//! Quantum states, POVMs, detection operators and post-measurement states.

use crate::error::{Error, Result};
use crate::qmatrix::{herm_eig, psd_sqrt, relative_tol, CVector, ComplexMatrix, C64, HERMITIAN_TOL};

/// Tolerance on `Σ_γ F^γ = I` and `Σ_γ M^γ†M^γ = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Outcome probabilities below this are treated as impossible outcomes.
pub const MIN_DETECTION_PROBABILITY: f64 = 1e-12;

/// A density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_residual();
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "density matrix is not Hermitian: ||rho - rho†||_F = {herm:e}"
            )));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(Error::Validation(format!("density matrix trace is {tr}, expected 1")));
        }
        let matrix = matrix.hermitian_part();
        let min = herm_eig(&matrix)?.eigenvalues[0];
        if min < -HERMITIAN_TOL {
            return Err(Error::NotPsd { eigenvalue: min, tolerance: HERMITIAN_TOL });
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::Validation("pure state vector must be non-zero and finite".into()));
        }
        let unit = psi / C64::new(norm, 0.0);
        Self::new(ComplexMatrix::projector(&unit))
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::Dimension(format!("basis index {k} out of range for dimension {dim}")));
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(k, k, C64::new(1.0, 0.0));
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Which POVM invariant a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Shape,
    Hermiticity,
    Positivity,
    Completeness,
    Labels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending effect, when the violation is local to one.
    pub index: Option<usize>,
    pub residual: f64,
    pub message: String,
}

/// Ordered effects `{F^γ}` with opaque outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Lists every violated POVM invariant. An empty list means the input is a valid POVM.
pub fn povm_violations(effects: &[ComplexMatrix], labels: &[String]) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(first) = effects.first() else {
        out.push(Violation {
            kind: ViolationKind::Shape,
            index: None,
            residual: f64::NAN,
            message: "POVM has no effects".into(),
        });
        return out;
    };
    let dim = first.rows();
    let mut shapes_ok = true;
    for (k, f) in effects.iter().enumerate() {
        if f.rows() != dim || f.cols() != dim {
            shapes_ok = false;
            out.push(Violation {
                kind: ViolationKind::Shape,
                index: Some(k),
                residual: f64::NAN,
                message: format!("effect {k} is {}x{}, expected {dim}x{dim}", f.rows(), f.cols()),
            });
            continue;
        }
        let herm = f.hermiticity_residual();
        if herm > relative_tol(HERMITIAN_TOL, f.frobenius_norm()) {
            out.push(Violation {
                kind: ViolationKind::Hermiticity,
                index: Some(k),
                residual: herm,
                message: format!("effect {k} is not Hermitian: ||F - F†||_F = {herm:e}"),
            });
            continue;
        }
        let tol = relative_tol(HERMITIAN_TOL, f.frobenius_norm());
        if let Ok(eig) = herm_eig(f) {
            let min = eig.eigenvalues[0];
            if min < -tol {
                out.push(Violation {
                    kind: ViolationKind::Positivity,
                    index: Some(k),
                    residual: -min,
                    message: format!("effect {k} has negative eigenvalue {min:e}"),
                });
            }
        }
    }
    if shapes_ok {
        let sum: ComplexMatrix = effects.iter().cloned().sum();
        let residual = sum.identity_residual();
        if residual > COMPLETENESS_TOL {
            out.push(Violation {
                kind: ViolationKind::Completeness,
                index: None,
                residual,
                message: format!("sum of effects differs from identity: ||sum F - I||_F = {residual:e}"),
            });
        }
    }
    if labels.len() != effects.len() {
        out.push(Violation {
            kind: ViolationKind::Labels,
            index: None,
            residual: f64::NAN,
            message: format!("{} labels for {} effects", labels.len(), effects.len()),
        });
    }
    for (k, l) in labels.iter().enumerate() {
        if labels[..k].contains(l) {
            out.push(Violation {
                kind: ViolationKind::Labels,
                index: Some(k),
                residual: f64::NAN,
                message: format!("duplicate outcome label {l:?}"),
            });
        }
    }
    out
}

pub fn validate_povm(effects: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Povm> {
    if let Some(v) = povm_violations(&effects, &labels).into_iter().next() {
        return Err(match v.kind {
            ViolationKind::Completeness => Error::Completeness { residual: v.residual },
            ViolationKind::Positivity => Error::Positivity {
                index: v.index.unwrap_or(0),
                eigenvalue: -v.residual,
            },
            ViolationKind::Shape => Error::Dimension(v.message),
            ViolationKind::Hermiticity | ViolationKind::Labels => Error::Validation(v.message),
        });
    }
    let dim = effects[0].rows();
    Ok(Povm { dim, effects, labels })
}

/// Default labels `"0", "1", ...`.
pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

/// Ordered detection operators `{M^γ}` with `Σ M^γ†M^γ = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl MeasurementSet {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::Validation("measurement set has no operators".into()));
        };
        let dim = first.rows();
        if let Some(k) = ops.iter().position(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::Dimension(format!(
                "measurement operator {k} is {}x{}, expected {dim}x{dim}",
                ops[k].rows(),
                ops[k].cols()
            )));
        }
        let residual = completeness_residual(&ops);
        if residual > COMPLETENESS_TOL {
            return Err(Error::Completeness { residual });
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Effects `F^γ = M^γ†M^γ`.
    pub fn effects(&self) -> Vec<ComplexMatrix> {
        self.ops.iter().map(|m| &m.adjoint() * m).collect()
    }
}

/// `‖Σ_γ M^γ†M^γ − I‖_F`
pub fn completeness_residual(ops: &[ComplexMatrix]) -> f64 {
    let sum: ComplexMatrix = ops.iter().map(|m| &m.adjoint() * m).sum();
    sum.identity_residual()
}

/// `M^γ = twist_γ · √F^γ`, with the identity as default twist.
pub fn detection_ops(povm: &Povm, twists: Option<&[ComplexMatrix]>) -> Result<MeasurementSet> {
    if let Some(tw) = twists {
        if tw.len() != povm.len() {
            return Err(Error::Validation(format!(
                "{} twists supplied for {} effects",
                tw.len(),
                povm.len()
            )));
        }
        for (k, u) in tw.iter().enumerate() {
            if !u.is_square() || u.rows() != povm.dim() {
                return Err(Error::Dimension(format!("twist {k} does not act on dimension {}", povm.dim())));
            }
            let res = u.unitarity_residual();
            if res > HERMITIAN_TOL {
                return Err(Error::Validation(format!("twist {k} is not unitary: ||U†U - I||_F = {res:e}")));
            }
        }
    }
    let ops = povm
        .effects()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let root = psd_sqrt(f)?;
            Ok(match twists {
                Some(tw) => &tw[k] * &root,
                None => root,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(ops)
}

fn check_dims(rho: &DensityMatrix, dim: usize) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::Dimension(format!(
            "state has dimension {}, measurement acts on dimension {dim}",
            rho.dim()
        )));
    }
    Ok(())
}

/// `p_γ = Tr[ρ F^γ]`, with round-off negatives clamped to zero.
pub fn probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    check_dims(rho, povm.dim())?;
    Ok(povm
        .effects()
        .iter()
        .map(|f| (rho.matrix() * f).trace().re.max(0.0))
        .collect())
}

/// One branch of a measurement: its probability and, when that is not
/// negligible, the normalized conditional state.
#[derive(Debug, Clone, PartialEq)]
pub struct Detected {
    pub probability: f64,
    /// `None` when `probability < 1e-12`: the normalized state is undefined.
    pub state: Option<DensityMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostMeasurement {
    pub rho_out: DensityMatrix,
    pub detected: Vec<Detected>,
}

/// Non-selective output `Σ M ρ M†` and the γ-detected states `MρM†/p_γ`.
pub fn post_measurement(rho: &DensityMatrix, ms: &MeasurementSet) -> Result<PostMeasurement> {
    check_dims(rho, ms.dim())?;
    let branches: Vec<ComplexMatrix> = ms.ops().iter().map(|m| m.conjugate(rho.matrix())).collect();
    let detected = branches
        .iter()
        .map(|b| {
            let p = b.trace().re.max(0.0);
            let state = if p < MIN_DETECTION_PROBABILITY {
                None
            } else {
                Some(DensityMatrix::new(b.scale_re(1.0 / p))?)
            };
            Ok(Detected { probability: p, state })
        })
        .collect::<Result<Vec<_>>>()?;
    let rho_out = DensityMatrix::new(branches.into_iter().sum())?;
    Ok(PostMeasurement { rho_out, detected })
}
