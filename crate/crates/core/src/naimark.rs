//! Naimark dilation built from detection operators.
//!
//! The ancilla carries a reference level `|ψ₀⟩` plus `n_Γ·n_L` pointer levels
//! `|γ,ℓ⟩`. For each system basis vector `|j⟩` the vectors
//! `ξ_j^(0) = |j⟩|ψ₀⟩` and `ξ_j^(ℓ) = Σ_γ M^γ|j⟩|γ,ℓ⟩` are orthonormal; the
//! dilation swaps `ξ_j^(0)` and `ξ_j^(1)` inside each two-dimensional block.

use std::f64::consts::FRAC_PI_2;

use crate::dynamics::{full_hamiltonian, ChainSpec};
use crate::error::{Error, Result};
use crate::qmatrix::{evolve_unitary, partial_trace, tensor, CVector, ComplexMatrix, Keep, C64, HERMITIAN_TOL, I, ONE, ZERO};
use crate::states::{probabilities, DensityMatrix, MeasurementSet, Povm};

/// Gram residual above which the ξ-vectors are reported as degenerate.
pub const XI_GRAM_TOL: f64 = 1e-8;

/// Global phase `α` of the dilation; compensated by the prefactor `i` in [`naimark_unitary`].
pub const NAIMARK_PHASE: f64 = -FRAC_PI_2;

/// Canonical ancilla basis: index 0 is `|ψ₀⟩`, then the pointer levels
/// `|γ,ℓ⟩ ↦ 1 + (ℓ−1)·n_Γ + γ` for `ℓ = 1..=n_L`, `γ = 0..n_Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncillaLayout {
    n_gamma: usize,
    n_l: usize,
}

impl AncillaLayout {
    pub fn new(n_gamma: usize, n_l: usize) -> Result<Self> {
        if n_gamma == 0 || n_l == 0 {
            return Err(Error::Validation(format!(
                "ancilla layout needs n_gamma >= 1 and n_l >= 1, got ({n_gamma}, {n_l})"
            )));
        }
        Ok(Self { n_gamma, n_l })
    }

    pub fn n_gamma(&self) -> usize {
        self.n_gamma
    }

    pub fn n_l(&self) -> usize {
        self.n_l
    }

    /// `n_A = n_Γ·n_L + 1`
    pub fn n_a(&self) -> usize {
        self.n_gamma * self.n_l + 1
    }

    pub fn psi0_index(&self) -> usize {
        0
    }

    /// Ancilla index of `|γ,ℓ⟩`; `level` is one-based.
    pub fn pointer_index(&self, gamma: usize, level: usize) -> usize {
        debug_assert!(gamma < self.n_gamma && (1..=self.n_l).contains(&level));
        1 + (level - 1) * self.n_gamma + gamma
    }

    pub fn basis_vector(&self, index: usize) -> CVector {
        let mut v = CVector::zeros(self.n_a());
        v[index] = ONE;
        v
    }
}

/// The orthonormal family `ξ_j^(ℓ)`, `j = 0..n_S`, `ℓ = 0..=n_L`.
#[derive(Debug, Clone)]
pub struct XiBasis {
    n_s: usize,
    layout: AncillaLayout,
    vectors: Vec<CVector>,
}

impl XiBasis {
    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn layout(&self) -> &AncillaLayout {
        &self.layout
    }

    pub fn vector(&self, j: usize, level: usize) -> &CVector {
        &self.vectors[j * (self.layout.n_l + 1) + level]
    }

    /// All vectors ordered by `(j, ℓ)`.
    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// Gram matrix of [`Self::vectors`].
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.vectors.len();
        ComplexMatrix::from_fn(n, n, |r, c| self.vectors[r].dotc(&self.vectors[c]))
    }

    /// Projector onto `span{ξ_j^(0), …, ξ_j^(levels)}`.
    pub fn block_projector(&self, j: usize, levels: usize) -> ComplexMatrix {
        (0..=levels).map(|l| ComplexMatrix::projector(self.vector(j, l))).sum()
    }
}

pub fn xi_basis(ms: &MeasurementSet, layout: AncillaLayout) -> Result<XiBasis> {
    if layout.n_gamma != ms.len() {
        return Err(Error::Dimension(format!(
            "layout has {} outcomes, measurement set has {}",
            layout.n_gamma,
            ms.len()
        )));
    }
    let n_s = ms.dim();
    let n_a = layout.n_a();
    let mut vectors = Vec::with_capacity(n_s * (layout.n_l + 1));
    for j in 0..n_s {
        let mut xi0 = CVector::zeros(n_s * n_a);
        xi0[j * n_a + layout.psi0_index()] = ONE;
        vectors.push(xi0);
        for level in 1..=layout.n_l {
            let mut xi = CVector::zeros(n_s * n_a);
            for (gamma, m) in ms.ops().iter().enumerate() {
                let a = layout.pointer_index(gamma, level);
                for i in 0..n_s {
                    xi[i * n_a + a] = m.get(i, j);
                }
            }
            vectors.push(xi);
        }
    }
    let basis = XiBasis { n_s, layout, vectors };
    let residual = basis.gram().identity_residual();
    if residual > XI_GRAM_TOL {
        return Err(Error::Degenerate(format!(
            "xi vectors are not orthonormal (Gram residual {residual:e}); the measurement set is not complete"
        )));
    }
    Ok(basis)
}

/// A dilation `V_SA` together with the ancilla levels that define it.
#[derive(Debug, Clone)]
pub struct NaimarkModel {
    n_s: usize,
    n_a: usize,
    psi0_index: usize,
    pointer_indices: Vec<usize>,
    v_sa: ComplexMatrix,
    layout: Option<AncillaLayout>,
    alpha: f64,
}

impl NaimarkModel {
    /// Wraps an arbitrary dilation unitary on `n_S·n_A`, with `|ψ₀⟩` and the
    /// outcome levels given as ancilla indices.
    pub fn from_unitary(
        v_sa: ComplexMatrix,
        n_s: usize,
        n_a: usize,
        psi0_index: usize,
        pointer_indices: Vec<usize>,
    ) -> Result<Self> {
        let n = n_s * n_a;
        if !v_sa.is_square() || v_sa.rows() != n {
            return Err(Error::Dimension(format!(
                "dilation must be {n}x{n}, got {}x{}",
                v_sa.rows(),
                v_sa.cols()
            )));
        }
        if psi0_index >= n_a || pointer_indices.iter().any(|&k| k >= n_a) || pointer_indices.is_empty() {
            return Err(Error::Dimension("ancilla index out of range".into()));
        }
        if pointer_indices.iter().enumerate().any(|(k, p)| pointer_indices[..k].contains(p)) {
            return Err(Error::Validation("pointer levels must be distinct".into()));
        }
        let res = v_sa.unitarity_residual();
        if res > HERMITIAN_TOL {
            return Err(Error::Validation(format!("dilation is not unitary: ||V†V - I||_F = {res:e}")));
        }
        Ok(Self {
            n_s,
            n_a,
            psi0_index,
            pointer_indices,
            v_sa,
            layout: None,
            alpha: 0.0,
        })
    }

    /// The swap dilation on `n ⊗ n` with `|ψ₀⟩ = |0⟩` and pointers `|γ⟩ = |γ⟩`.
    /// It realizes the ideal PVM `{|γ⟩⟨γ|}` with `M^γ = |0⟩⟨γ|`.
    pub fn swap(n: usize) -> Result<Self> {
        let dim = n * n;
        let v = ComplexMatrix::from_fn(dim, dim, |r, c| {
            let (rs, ra) = (r / n, r % n);
            let (cs, ca) = (c / n, c % n);
            if rs == ca && ra == cs {
                ONE
            } else {
                ZERO
            }
        });
        Self::from_unitary(v, n, n, 0, (0..n).collect())
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_gamma(&self) -> usize {
        self.pointer_indices.len()
    }

    pub fn psi0_index(&self) -> usize {
        self.psi0_index
    }

    pub fn pointer_index(&self, gamma: usize) -> usize {
        self.pointer_indices[gamma]
    }

    pub fn pointer_indices(&self) -> &[usize] {
        &self.pointer_indices
    }

    pub fn v_sa(&self) -> &ComplexMatrix {
        &self.v_sa
    }

    /// Layout when the model came from [`naimark_unitary`].
    pub fn layout(&self) -> Option<&AncillaLayout> {
        self.layout.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn ancilla_ket(&self, index: usize) -> CVector {
        let mut v = CVector::zeros(self.n_a);
        v[index] = ONE;
        v
    }

    /// `I_S ⊗ |a⟩⟨a|`
    pub fn ancilla_projector(&self, index: usize) -> ComplexMatrix {
        tensor(&ComplexMatrix::identity(self.n_s), &ComplexMatrix::projector(&self.ancilla_ket(index)))
            .expect("dimension already validated")
    }

    /// `V†(I_S ⊗ |γ⟩⟨γ|)V`
    pub fn naimark_projector(&self, gamma: usize) -> ComplexMatrix {
        let p = self.ancilla_projector(self.pointer_indices[gamma]);
        self.v_sa.adjoint().conjugate(&p)
    }

    /// `⟨γ|V|ψ₀⟩` as an `n_S × n_S` operator.
    pub fn detection_operator(&self, gamma: usize) -> ComplexMatrix {
        let a = self.pointer_indices[gamma];
        ComplexMatrix::from_fn(self.n_s, self.n_s, |i, j| {
            self.v_sa.get(i * self.n_a + a, j * self.n_a + self.psi0_index)
        })
    }

    /// `Tr_A[(I ⊗ |ψ₀⟩⟨ψ₀|) V†(I ⊗ |γ⟩⟨γ|)V]`
    pub fn reconstructed_effect(&self, gamma: usize) -> ComplexMatrix {
        let prod = &self.ancilla_projector(self.psi0_index) * &self.naimark_projector(gamma);
        partial_trace(&prod, self.n_s, self.n_a, Keep::First).expect("dimension already validated")
    }

    /// `ρ ⊗ |ψ₀⟩⟨ψ₀|`
    pub fn input_state(&self, rho: &DensityMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.n_s {
            return Err(Error::Dimension(format!(
                "state has dimension {}, dilation acts on system dimension {}",
                rho.dim(),
                self.n_s
            )));
        }
        tensor(rho.matrix(), &ComplexMatrix::projector(&self.ancilla_ket(self.psi0_index)))
    }

    /// `Tr[(ρ ⊗ |ψ₀⟩⟨ψ₀|) V†(I ⊗ |γ⟩⟨γ|)V]` for every outcome.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let input = self.input_state(rho)?;
        Ok((0..self.n_gamma())
            .map(|g| (&input * &self.naimark_projector(g)).trace().re.max(0.0))
            .collect())
    }
}

/// Dilation from the periodic Hamiltonian: `V = i·e^{-iH t_d}` with `ω = 1`, `t_d = π/2`.
///
/// On the ξ-span this is `⊕_j σ^(j)`, so `V ξ_j^(0) = ξ_j^(1)`; on the
/// orthogonal complement (annihilated by `H`) it is `i·I`.
pub fn naimark_unitary(ms: &MeasurementSet) -> Result<NaimarkModel> {
    let layout = AncillaLayout::new(ms.len(), 1)?;
    // Orthonormality of the ξ-family is what makes the Hamiltonian route valid.
    xi_basis(ms, layout)?;
    let spec = ChainSpec::uniform(1, 1.0)?;
    let h = full_hamiltonian(ms, &spec)?;
    let t_d = FRAC_PI_2;
    let v = evolve_unitary(&h, t_d)?.scale(I);
    let pointers = (0..ms.len()).map(|g| layout.pointer_index(g, 1)).collect();
    let mut model = NaimarkModel::from_unitary(v, ms.dim(), layout.n_a(), layout.psi0_index(), pointers)?;
    model.layout = Some(layout);
    model.alpha = NAIMARK_PHASE;
    Ok(model)
}

/// Per-outcome comparison between the dilation and the direct formulas.
#[derive(Debug, Clone)]
pub struct OutcomeCheck {
    pub label: String,
    /// `⟨γ|V|ψ₀⟩`
    pub recovered_op: ComplexMatrix,
    pub op_residual: f64,
    pub recovered_effect: ComplexMatrix,
    pub effect_residual: f64,
    pub p_direct: f64,
    pub p_naimark: f64,
}

#[derive(Debug, Clone)]
pub struct NaimarkReport {
    pub outcomes: Vec<OutcomeCheck>,
    pub unitarity_residual: f64,
}

impl NaimarkReport {
    pub fn max_op_residual(&self) -> f64 {
        self.outcomes.iter().map(|o| o.op_residual).fold(0.0, f64::max)
    }

    pub fn max_effect_residual(&self) -> f64 {
        self.outcomes.iter().map(|o| o.effect_residual).fold(0.0, f64::max)
    }

    pub fn max_probability_residual(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| (o.p_direct - o.p_naimark).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_op_residual()
            .max(self.max_effect_residual())
            .max(self.max_probability_residual())
    }
}

/// Recovers `M^γ`, `F^γ` and `p_γ` from the dilation and compares each against its
/// direct counterpart.
pub fn recover_and_verify(
    model: &NaimarkModel,
    ms: &MeasurementSet,
    povm: &Povm,
    rho: &DensityMatrix,
) -> Result<NaimarkReport> {
    if ms.len() != model.n_gamma() || povm.len() != model.n_gamma() {
        return Err(Error::Dimension(format!(
            "dilation has {} outcomes, measurement set {} and POVM {}",
            model.n_gamma(),
            ms.len(),
            povm.len()
        )));
    }
    if ms.dim() != model.n_s() || povm.dim() != model.n_s() {
        return Err(Error::Dimension("system dimensions disagree".into()));
    }
    let direct = probabilities(rho, povm)?;
    let naimark = model.probabilities(rho)?;
    let outcomes = (0..model.n_gamma())
        .map(|g| {
            let recovered_op = model.detection_operator(g);
            let recovered_effect = model.reconstructed_effect(g);
            OutcomeCheck {
                label: povm.labels()[g].clone(),
                op_residual: recovered_op.distance(&ms.ops()[g]),
                effect_residual: recovered_effect.distance(&povm.effects()[g]),
                recovered_op,
                recovered_effect,
                p_direct: direct[g],
                p_naimark: naimark[g],
            }
        })
        .collect();
    Ok(NaimarkReport {
        outcomes,
        unitarity_residual: model.v_sa().unitarity_residual(),
    })
}

/// `e^{iα}` for the model's phase convention.
pub fn phase_factor(alpha: f64) -> C64 {
    C64::from_polar(1.0, alpha)
}
