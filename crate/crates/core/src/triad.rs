//! System + ancilla + apparatus model.
//!
//! The apparatus Ξ is finite-dimensional: `O_Ξ = diag(0, …, n_Ξ−1)` and the
//! initial pointer is the uniform superposition `|D⟩`. Outcome `γ` imprints the
//! phase ramp `e^{-i t o_γ m}` on `|D⟩`, so pointer overlaps are Dirichlet
//! kernels. With integer outcome values they vanish exactly at `t* = 2π/n_Ξ`
//! and recur with period `2π`. This is a finite stand-in for a macroscopic
//! apparatus, not a canonically conjugate pointer pair.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::naimark::NaimarkModel;
use crate::qmatrix::{partial_trace, CVector, ComplexMatrix, Keep, C64, HERMITIAN_TOL};
use crate::states::DensityMatrix;

/// Projector identities must hold to this tolerance.
pub const PROJECTOR_TOL: f64 = 1e-8;

const INTEGER_TOL: f64 = 1e-12;

/// Apparatus dimension and the outcome values `o_γ` it couples to.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSpec {
    n_xi: usize,
    spectrum: Vec<f64>,
}

impl XiSpec {
    /// `o_γ` must be finite and pairwise distinct.
    pub fn new(n_xi: usize, spectrum: Vec<f64>) -> Result<Self> {
        if n_xi < 2 {
            return Err(Error::Validation(format!("n_xi must be at least 2, got {n_xi}")));
        }
        if spectrum.is_empty() || spectrum.iter().any(|o| !o.is_finite()) {
            return Err(Error::Validation("outcome values must be finite and non-empty".into()));
        }
        for (k, a) in spectrum.iter().enumerate() {
            if spectrum[..k].contains(a) {
                return Err(Error::Validation(format!("outcome value {a} is repeated")));
            }
        }
        let spec = Self { n_xi, spectrum };
        if spec.is_integer() && spec.max_gap() >= n_xi as f64 {
            return Err(Error::Validation(format!(
                "n_xi = {n_xi} must exceed the largest outcome gap {}",
                spec.max_gap()
            )));
        }
        Ok(spec)
    }

    /// `o_γ = γ`
    pub fn integer(n_xi: usize, n_gamma: usize) -> Result<Self> {
        Self::new(n_xi, (0..n_gamma).map(|g| g as f64).collect())
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn n_gamma(&self) -> usize {
        self.spectrum.len()
    }

    fn is_integer(&self) -> bool {
        self.spectrum.iter().all(|o| (o - o.round()).abs() <= INTEGER_TOL)
    }

    fn max_gap(&self) -> f64 {
        let lo = self.spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.spectrum.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// `|Ξ^γ(t)⟩ = e^{-i t o_γ O_Ξ}|D⟩`
    pub fn pointer_state(&self, gamma: usize, t: f64) -> CVector {
        let amp = 1.0 / (self.n_xi as f64).sqrt();
        let o = self.spectrum[gamma];
        CVector::from_fn(self.n_xi, |m, _| C64::from_polar(amp, -t * o * m as f64))
    }

    /// First time with exactly orthogonal pointers, `2π/n_Ξ`, for integer outcome values.
    pub fn orthogonality_time(&self) -> Option<f64> {
        self.is_integer().then(|| 2.0 * PI / self.n_xi as f64)
    }
}

/// `Q[γ',γ] = ⟨Ξ^γ'(t)|Ξ^γ(t)⟩ = (1/n_Ξ) Σ_m e^{-i t (o_γ − o_γ') m}`.
pub fn vno_pointer_overlaps(xi: &XiSpec, t: f64) -> ComplexMatrix {
    let n = xi.n_gamma();
    let inv = 1.0 / xi.n_xi as f64;
    ComplexMatrix::from_fn(n, n, |gp, g| {
        if g == gp {
            return C64::new(1.0, 0.0);
        }
        let phase = -t * (xi.spectrum[g] - xi.spectrum[gp]);
        (0..xi.n_xi)
            .map(|m| C64::from_polar(inv, phase * m as f64))
            .sum()
    })
}

/// Dilation, its outcome projectors `P^γ = V†(I⊗|γ⟩⟨γ|)V`, the apparatus, and
/// the ancilla basis `{e_k}` (columns of a unitary) used to resolve `Tr_A`.
#[derive(Debug, Clone)]
pub struct TriadModel {
    naimark: NaimarkModel,
    projectors: Vec<ComplexMatrix>,
    discard: ComplexMatrix,
    xi: XiSpec,
    ancilla_basis: ComplexMatrix,
}

/// Projector identities of a [`TriadModel`], as Frobenius residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorResiduals {
    pub idempotence: f64,
    pub hermiticity: f64,
    pub orthogonality: f64,
    /// `‖Σ_γ P^γ + P_discard − I‖_F`
    pub completeness: f64,
}

impl ProjectorResiduals {
    pub fn max(&self) -> f64 {
        self.idempotence
            .max(self.hermiticity)
            .max(self.orthogonality)
            .max(self.completeness)
    }
}

fn projector_residuals(projectors: &[ComplexMatrix], discard: &ComplexMatrix) -> ProjectorResiduals {
    let all: Vec<&ComplexMatrix> = projectors.iter().chain(std::iter::once(discard)).collect();
    let mut r = ProjectorResiduals {
        idempotence: 0.0,
        hermiticity: 0.0,
        orthogonality: 0.0,
        completeness: 0.0,
    };
    for (a, p) in all.iter().enumerate() {
        r.idempotence = r.idempotence.max((&(*p * *p) - *p).frobenius_norm());
        r.hermiticity = r.hermiticity.max(p.hermiticity_residual());
        for q in &all[..a] {
            r.orthogonality = r.orthogonality.max((*p * *q).frobenius_norm());
        }
    }
    let sum: ComplexMatrix = all.iter().map(|p| (*p).clone()).sum();
    r.completeness = sum.identity_residual();
    r
}

/// Outcome projectors plus the discard projector onto the non-pointer ancilla levels.
pub fn triad_projectors(nm: &NaimarkModel, xi: XiSpec) -> Result<TriadModel> {
    if xi.n_gamma() != nm.n_gamma() {
        return Err(Error::Dimension(format!(
            "{} apparatus outcome values for {} outcomes",
            xi.n_gamma(),
            nm.n_gamma()
        )));
    }
    let projectors: Vec<ComplexMatrix> = (0..nm.n_gamma()).map(|g| nm.naimark_projector(g)).collect();
    let rest: ComplexMatrix = (0..nm.n_a())
        .filter(|a| !nm.pointer_indices().contains(a))
        .map(|a| nm.ancilla_projector(a))
        .fold(ComplexMatrix::zeros(nm.n_s() * nm.n_a(), nm.n_s() * nm.n_a()), |acc, p| &acc + &p);
    let discard = nm.v_sa().adjoint().conjugate(&rest);
    let res = projector_residuals(&projectors, &discard);
    if res.max() > PROJECTOR_TOL {
        return Err(Error::Construction(format!(
            "outcome projectors fail their identities (residual {:e})",
            res.max()
        )));
    }
    Ok(TriadModel {
        ancilla_basis: ComplexMatrix::identity(nm.n_a()),
        naimark: nm.clone(),
        projectors,
        discard,
        xi,
    })
}

impl TriadModel {
    /// Replaces the ancilla basis; columns of `basis` are the `e_k`.
    pub fn with_ancilla_basis(mut self, basis: ComplexMatrix) -> Result<Self> {
        if !basis.is_square() || basis.rows() != self.naimark.n_a() {
            return Err(Error::Dimension(format!(
                "ancilla basis must be {0}x{0}",
                self.naimark.n_a()
            )));
        }
        let res = basis.unitarity_residual();
        if res > HERMITIAN_TOL {
            return Err(Error::Validation(format!("ancilla basis is not unitary (residual {res:e})")));
        }
        self.ancilla_basis = basis;
        Ok(self)
    }

    pub fn naimark(&self) -> &NaimarkModel {
        &self.naimark
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn discard_projector(&self) -> &ComplexMatrix {
        &self.discard
    }

    pub fn xi(&self) -> &XiSpec {
        &self.xi
    }

    pub fn ancilla_basis(&self) -> &ComplexMatrix {
        &self.ancilla_basis
    }

    pub fn residuals(&self) -> ProjectorResiduals {
        projector_residuals(&self.projectors, &self.discard)
    }

    /// `N^(kγ) = ⟨e_k|V†|γ⟩` as an `n_S × n_S` operator.
    pub fn n_operator(&self, k: usize, gamma: usize) -> ComplexMatrix {
        let nm = &self.naimark;
        let (n_s, n_a) = (nm.n_s(), nm.n_a());
        let v = nm.v_sa();
        let a = nm.pointer_index(gamma);
        // ⟨i,e_k|V†|j,γ⟩ = conj(⟨j,γ|V|i,e_k⟩)
        ComplexMatrix::from_fn(n_s, n_s, |i, j| {
            (0..n_a)
                .map(|b| self.ancilla_basis.get(b, k) * v.get(j * n_a + a, i * n_a + b))
                .sum::<C64>()
                .conj()
        })
    }
}

#[derive(Debug, Clone)]
pub struct TriadState {
    pub rho_s: DensityMatrix,
    /// `N^(kγ)` keyed by `(k, γ)`.
    pub n_ops: BTreeMap<(usize, usize), ComplexMatrix>,
    /// `‖Σ_k N^(kγ)†N^(kγ) − I‖_F` per outcome.
    pub resolution_residuals: Vec<f64>,
    /// Apparatus overlaps used, `Q(t)`.
    pub overlaps: ComplexMatrix,
}

/// `ρ_S(t) = Σ_γγ'k Q[γ',γ](t) N^(kγ) M^γ ρ M^γ'† N^(kγ')†`.
///
/// Once `Q(t*) = I` this is `Σ_γk N^(kγ)(M^γ ρ M^γ†)N^(kγ)†`.
pub fn triad_reduced_state(tm: &TriadModel, rho: &DensityMatrix, t: f64) -> Result<TriadState> {
    let nm = &tm.naimark;
    if rho.dim() != nm.n_s() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, dilation acts on system dimension {}",
            rho.dim(),
            nm.n_s()
        )));
    }
    let n_g = nm.n_gamma();
    let n_a = nm.n_a();
    let mut n_ops = BTreeMap::new();
    for k in 0..n_a {
        for g in 0..n_g {
            n_ops.insert((k, g), tm.n_operator(k, g));
        }
    }
    let resolution_residuals = (0..n_g)
        .map(|g| {
            let s: ComplexMatrix = (0..n_a)
                .map(|k| {
                    let n = &n_ops[&(k, g)];
                    &n.adjoint() * n
                })
                .sum();
            s.identity_residual()
        })
        .collect();
    let overlaps = vno_pointer_overlaps(&tm.xi, t);
    let m: Vec<ComplexMatrix> = (0..n_g).map(|g| nm.detection_operator(g)).collect();
    let mut out = ComplexMatrix::zeros(nm.n_s(), nm.n_s());
    for g in 0..n_g {
        for gp in 0..n_g {
            let q = overlaps.get(gp, g);
            if q.norm() == 0.0 {
                continue;
            }
            let sys = &(&m[g] * rho.matrix()) * &m[gp].adjoint();
            for k in 0..n_a {
                let term = &(&n_ops[&(k, g)] * &sys) * &n_ops[&(k, gp)].adjoint();
                out = &out + &term.scale(q);
            }
        }
    }
    Ok(TriadState {
        rho_s: DensityMatrix::new(out)?,
        n_ops,
        resolution_residuals,
        overlaps,
    })
}

/// `Tr[(ρ⊗|ψ₀⟩⟨ψ₀|)P^γ]` per outcome, and the discard weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TriadProbabilities {
    pub outcomes: Vec<f64>,
    pub discard: f64,
}

pub fn triad_probabilities(tm: &TriadModel, rho: &DensityMatrix) -> Result<TriadProbabilities> {
    let input = tm.naimark.input_state(rho)?;
    let weight = |p: &ComplexMatrix| (&input * p).trace().re;
    Ok(TriadProbabilities {
        outcomes: tm.projectors.iter().map(|p| weight(p).max(0.0)).collect(),
        discard: weight(&tm.discard),
    })
}

/// Refinement `F^(γk) = M^(γk)†M^(γk)`, `M^(γk) = N^(kγ)M^γ`.
#[derive(Debug, Clone)]
pub struct DoubleLabelPovm {
    /// `effects[γ][k]`
    pub effects: Vec<Vec<ComplexMatrix>>,
    /// `probs[γ][k] = Tr[ρ F^(γk)]`
    pub probs: Vec<Vec<f64>>,
    /// `Σ_k probs[γ][k]`
    pub marginals: Vec<f64>,
    /// `‖Σ_γk F^(γk) − I‖_F`
    pub completeness_residual: f64,
}

impl DoubleLabelPovm {
    pub fn outcome_count(&self) -> usize {
        self.effects.iter().map(Vec::len).sum()
    }
}

pub fn double_label_povm(tm: &TriadModel, rho: &DensityMatrix) -> Result<DoubleLabelPovm> {
    let nm = &tm.naimark;
    if rho.dim() != nm.n_s() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, dilation acts on system dimension {}",
            rho.dim(),
            nm.n_s()
        )));
    }
    let effects: Vec<Vec<ComplexMatrix>> = (0..nm.n_gamma())
        .map(|g| {
            let m = nm.detection_operator(g);
            (0..nm.n_a())
                .map(|k| {
                    let mk = &tm.n_operator(k, g) * &m;
                    &mk.adjoint() * &mk
                })
                .collect()
        })
        .collect();
    let probs: Vec<Vec<f64>> = effects
        .iter()
        .map(|row| row.iter().map(|f| (rho.matrix() * f).trace().re.max(0.0)).collect())
        .collect();
    let marginals = probs.iter().map(|row| row.iter().sum()).collect();
    let total: ComplexMatrix = effects.iter().flatten().cloned().sum();
    Ok(DoubleLabelPovm {
        completeness_residual: total.identity_residual(),
        effects,
        probs,
        marginals,
    })
}

/// `Tr_A` of a joint operator on `n_S·n_A`.
pub fn system_part(tm: &TriadModel, joint: &ComplexMatrix) -> Result<ComplexMatrix> {
    partial_trace(joint, tm.naimark.n_s(), tm.naimark.n_a(), Keep::First)
}
