//! Naimark Hamiltonians and the system+ancilla evolution they generate.
//!
//! The Hamiltonian is block diagonal over `H^(j) = span{ξ_j^(0), …, ξ_j^(n_L)}`
//! and every block has the same tridiagonal matrix (a single-excitation hopping
//! chain). The amplitudes `β_ℓ(t)` are therefore computed once in the
//! `(n_L+1)`-dimensional chain; the full-space evolution is kept as an oracle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::naimark::{xi_basis, AncillaLayout, XiBasis};
use crate::qmatrix::{
    evolution_from_eig, evolve_unitary, herm_eig, tensor, CVector, ComplexMatrix, C64, DEFAULT_MAX_DIM, ZERO,
};
use crate::states::{DensityMatrix, MeasurementSet};

/// Pointer states need `|β₀| < 1 − POINTER_MARGIN`.
pub const POINTER_MARGIN: f64 = 1e-12;

/// Default plateau threshold on `P₀(t)`.
pub const DEFAULT_PLATEAU_EPSILON: f64 = 1e-3;

/// Default time step, in units of `1/ω₀`.
pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingProfile {
    /// `ω_ℓ = ω₀`
    Uniform,
    /// `ω_ℓ = (ω₀/2)·√((ℓ+1)(n_L−ℓ))`, the perfect-state-transfer couplings.
    Pst,
    Custom,
}

impl fmt::Display for CouplingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingProfile::Uniform => "uniform",
            CouplingProfile::Pst => "pst",
            CouplingProfile::Custom => "custom",
        })
    }
}

impl FromStr for CouplingProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(CouplingProfile::Uniform),
            "pst" => Ok(CouplingProfile::Pst),
            "custom" => Ok(CouplingProfile::Custom),
            other => Err(Error::Validation(format!(
                "unknown coupling profile {other:?} (expected uniform or pst)"
            ))),
        }
    }
}

/// Chain couplings `ω_0 … ω_{n_L−1}`; `ω_ℓ` links levels `ℓ` and `ℓ+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    omegas: Vec<f64>,
    profile: CouplingProfile,
}

impl ChainSpec {
    pub fn custom(omegas: Vec<f64>) -> Result<Self> {
        Self::with_profile(omegas, CouplingProfile::Custom)
    }

    pub fn uniform(n_l: usize, omega0: f64) -> Result<Self> {
        coupling_profile(CouplingProfile::Uniform, n_l, omega0)
    }

    fn with_profile(omegas: Vec<f64>, profile: CouplingProfile) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Validation("chain needs at least one coupling (n_l >= 1)".into()));
        }
        if let Some(k) = omegas.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Validation(format!(
                "coupling omega_{k} = {} must be positive and finite",
                omegas[k]
            )));
        }
        Ok(Self { omegas, profile })
    }

    pub fn n_l(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn omega0(&self) -> f64 {
        self.omegas[0]
    }

    pub fn profile(&self) -> CouplingProfile {
        self.profile
    }
}

pub fn coupling_profile(kind: CouplingProfile, n_l: usize, omega0: f64) -> Result<ChainSpec> {
    if n_l == 0 {
        return Err(Error::Validation("n_l must be at least 1".into()));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::Validation(format!("omega0 must be positive, got {omega0}")));
    }
    let omegas = match kind {
        CouplingProfile::Uniform => vec![omega0; n_l],
        CouplingProfile::Pst => (0..n_l)
            .map(|l| 0.5 * omega0 * (((l + 1) * (n_l - l)) as f64).sqrt())
            .collect(),
        CouplingProfile::Custom => {
            return Err(Error::Validation(
                "custom profiles are built from explicit couplings, not a kind".into(),
            ))
        }
    };
    ChainSpec::with_profile(omegas, kind)
}

/// Tridiagonal `(n_L+1)×(n_L+1)` chain matrix with `ω_ℓ` on the off-diagonals.
pub fn block_hamiltonian(spec: &ChainSpec) -> ComplexMatrix {
    let n = spec.n_l() + 1;
    ComplexMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            C64::new(spec.omegas[r], 0.0)
        } else if r == c + 1 {
            C64::new(spec.omegas[c], 0.0)
        } else {
            ZERO
        }
    })
}

/// Uniform grid `0, dt, …, n·dt` with `n = round(t_max/dt)`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Validation("dt must be positive".into()));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Validation("t_max must be positive".into()));
    }
    let steps = (t_max / dt).round() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Amplitudes `β_ℓ(t)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `betas[k][ℓ] = β_ℓ(times[k])`, `ℓ = 0..=n_L`.
    pub betas: Vec<Vec<C64>>,
    /// `P₀ = |β₀|²`
    pub p0: Vec<f64>,
    /// Phase `ξ₀` of `β₀ = |β₀|e^{iξ₀}`.
    pub xi0_phase: Vec<f64>,
    /// Optional joint states `ρ_SA(t)` at selected times.
    pub snapshots: Vec<(f64, DensityMatrix)>,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t |Σ_ℓ |β_ℓ(t)|² − 1|`
    pub fn norm_residual(&self) -> f64 {
        self.betas
            .iter()
            .map(|b| (b.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `β_ℓ(t) = ⟨ℓ|e^{-itH_chain}|0⟩`. Time points are evaluated in parallel; each
/// point is computed independently so the result does not depend on scheduling.
pub fn beta_amplitudes(spec: &ChainSpec, times: &[f64]) -> Result<EvolutionTrace> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Validation(format!("time {t} is not finite")));
    }
    let eig = herm_eig(&block_hamiltonian(spec))?;
    let n = eig.dim();
    let vecs = &eig.eigenvectors;
    let betas: Vec<Vec<C64>> = times
        .par_iter()
        .map(|&t| {
            let weights: Vec<C64> = (0..n)
                .map(|k| C64::from_polar(1.0, -eig.eigenvalues[k] * t) * vecs.get(0, k).conj())
                .collect();
            (0..n)
                .map(|l| (0..n).map(|k| vecs.get(l, k) * weights[k]).sum())
                .collect()
        })
        .collect();
    let p0 = betas.iter().map(|b| b[0].norm_sqr()).collect();
    let xi0_phase = betas.iter().map(|b| b[0].arg()).collect();
    Ok(EvolutionTrace {
        times: times.to_vec(),
        betas,
        p0,
        xi0_phase,
        snapshots: Vec::new(),
    })
}

fn layout_for(ms: &MeasurementSet, spec: &ChainSpec) -> Result<AncillaLayout> {
    let layout = AncillaLayout::new(ms.len(), spec.n_l())?;
    let dim = ms.dim().checked_mul(layout.n_a());
    match dim {
        Some(d) if d <= DEFAULT_MAX_DIM => Ok(layout),
        _ => Err(Error::Dimension(format!(
            "joint space n_S·n_A = {}·{} exceeds the maximum dimension {DEFAULT_MAX_DIM}",
            ms.dim(),
            layout.n_a()
        ))),
    }
}

/// Naimark Hamiltonian in compact form:
/// `Σ_γ M^γ⊗Θ^(γ) + Σ_γγ' M^γM^γ'†⊗Θ^(γ,γ') + h.c.` with
/// `Θ^(γ) = ω₀|γ,1⟩⟨ψ₀|` and `Θ^(γ,γ') = Σ_{ℓ≥1} ω_ℓ|γ,ℓ⟩⟨γ',ℓ+1|`.
pub fn full_hamiltonian(ms: &MeasurementSet, spec: &ChainSpec) -> Result<ComplexMatrix> {
    let layout = layout_for(ms, spec)?;
    let n_a = layout.n_a();
    let ket = |i: usize| layout.basis_vector(i);
    let mut upper = ComplexMatrix::zeros(ms.dim() * n_a, ms.dim() * n_a);
    for (g, m) in ms.ops().iter().enumerate() {
        let theta = ComplexMatrix::outer(&ket(layout.pointer_index(g, 1)), &ket(layout.psi0_index()))
            .scale_re(spec.omegas[0]);
        upper = &upper + &tensor(m, &theta)?;
    }
    for (g, mg) in ms.ops().iter().enumerate() {
        for (gp, mgp) in ms.ops().iter().enumerate() {
            let theta: Option<ComplexMatrix> = (1..spec.n_l())
                .map(|l| {
                    ComplexMatrix::outer(&ket(layout.pointer_index(g, l)), &ket(layout.pointer_index(gp, l + 1)))
                        .scale_re(spec.omegas[l])
                })
                .reduce(|a, b| &a + &b);
            if let Some(theta) = theta {
                upper = &upper + &tensor(&(mg * &mgp.adjoint()), &theta)?;
            }
        }
    }
    Ok(&upper + &upper.adjoint())
}

/// `σ^(j,ℓ) = |ξ_j^(ℓ)⟩⟨ξ_j^(ℓ+1)| + h.c.`
pub fn sigma_operator(xi: &XiBasis, j: usize, level: usize) -> ComplexMatrix {
    let a = ComplexMatrix::outer(xi.vector(j, level), xi.vector(j, level + 1));
    &a + &a.adjoint()
}

/// Block form `Σ_j Σ_ℓ ω_ℓ σ^(j,ℓ)`, built directly from the ξ-vectors.
pub fn block_sum_hamiltonian(ms: &MeasurementSet, spec: &ChainSpec) -> Result<ComplexMatrix> {
    let layout = layout_for(ms, spec)?;
    let xi = xi_basis(ms, layout)?;
    let terms = (0..ms.dim()).flat_map(|j| {
        let xi = &xi;
        (0..spec.n_l()).map(move |l| sigma_operator(xi, j, l).scale_re(spec.omegas[l]))
    });
    Ok(terms.sum())
}

/// `U(t) = e^{-iH_SA t}` on the full joint space.
pub fn joint_propagator(ms: &MeasurementSet, spec: &ChainSpec, t: f64) -> Result<ComplexMatrix> {
    evolve_unitary(&full_hamiltonian(ms, spec)?, t)
}

fn reference_input(rho: &DensityMatrix, ms: &MeasurementSet, layout: &AncillaLayout) -> Result<ComplexMatrix> {
    if rho.dim() != ms.dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, measurement acts on {}",
            rho.dim(),
            ms.dim()
        )));
    }
    tensor(rho.matrix(), &ComplexMatrix::projector(&layout.basis_vector(layout.psi0_index())))
}

/// `ρ_SA(t) = U(t)(ρ ⊗ |ψ₀⟩⟨ψ₀|)U(t)†` by full-matrix evolution.
pub fn evolve_joint(rho: &DensityMatrix, ms: &MeasurementSet, spec: &ChainSpec, t: f64) -> Result<DensityMatrix> {
    let layout = layout_for(ms, spec)?;
    let input = reference_input(rho, ms, &layout)?;
    let u = joint_propagator(ms, spec, t)?;
    DensityMatrix::new(u.conjugate(&input))
}

/// `|A^γ(t)⟩ = (1−|β₀|²)^{-1/2} Σ_{ℓ≥1} β_ℓ(t)|γ,ℓ⟩` for every outcome.
///
/// The normalization uses `√(Σ_{ℓ≥1}|β_ℓ|²)`, equal to `√(1−|β₀|²)` for a
/// normalized amplitude row but free of cancellation when `|β₀|` is close to 1.
pub fn pointer_states(betas: &[C64], layout: &AncillaLayout) -> Result<Vec<CVector>> {
    if betas.len() != layout.n_l() + 1 {
        return Err(Error::Dimension(format!(
            "{} amplitudes for a chain with {} levels",
            betas.len(),
            layout.n_l() + 1
        )));
    }
    let b0 = betas[0].norm();
    if b0 >= 1.0 - POINTER_MARGIN {
        return Err(Error::UndefinedPointer(b0));
    }
    let tail = betas[1..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((0..layout.n_gamma())
        .map(|g| {
            let mut v = CVector::zeros(layout.n_a());
            for (l, beta) in betas.iter().enumerate().skip(1) {
                v[layout.pointer_index(g, l)] = *beta / tail;
            }
            v
        })
        .collect())
}

/// `Σ_γγ' M^γ ρ M^γ'† ⊗ |A^γ⟩⟨A^γ'|`, the joint state once `P₀` has vanished.
pub fn decohered_joint(rho: &DensityMatrix, ms: &MeasurementSet, pointers: &[CVector]) -> Result<ComplexMatrix> {
    let mut out: Option<ComplexMatrix> = None;
    for (g, mg) in ms.ops().iter().enumerate() {
        for (gp, mgp) in ms.ops().iter().enumerate() {
            let sys = &(mg * rho.matrix()) * &mgp.adjoint();
            let term = tensor(&sys, &ComplexMatrix::outer(&pointers[g], &pointers[gp]))?;
            out = Some(match out {
                Some(acc) => &acc + &term,
                None => term,
            });
        }
    }
    out.ok_or_else(|| Error::Validation("empty measurement set".into()))
}

/// Joint state assembled from the amplitudes:
/// `|β₀|² ρ⊗|ψ₀⟩⟨ψ₀| + |β₀|Δ_SA(t) + (1−|β₀|²) Σ_γγ' M^γρM^γ'† ⊗ |A^γ⟩⟨A^γ'|`
/// with `Δ_SA = e^{-iξ₀}√(1−|β₀|²) Σ_γ M^γρ ⊗ |A^γ⟩⟨ψ₀| + h.c.`.
pub fn closed_form_joint(rho: &DensityMatrix, ms: &MeasurementSet, spec: &ChainSpec, t: f64) -> Result<DensityMatrix> {
    let layout = layout_for(ms, spec)?;
    let input = reference_input(rho, ms, &layout)?;
    let trace = beta_amplitudes(spec, &[t])?;
    let betas = &trace.betas[0];
    let b0 = betas[0].norm();
    let populated = input.scale_re(b0 * b0);
    if b0 >= 1.0 - POINTER_MARGIN {
        // β₀ = 1: nothing has left the reference level.
        return DensityMatrix::new(populated);
    }
    let pointers = pointer_states(betas, &layout)?;
    let leaked = betas[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let psi0 = layout.basis_vector(layout.psi0_index());
    let phase = C64::from_polar(1.0, -trace.xi0_phase[0]);
    let mut coherence: Option<ComplexMatrix> = None;
    for (g, m) in ms.ops().iter().enumerate() {
        let term = tensor(&(m * rho.matrix()), &ComplexMatrix::outer(&pointers[g], &psi0))?;
        coherence = Some(match coherence {
            Some(acc) => &acc + &term,
            None => term,
        });
    }
    let half = coherence
        .expect("measurement sets are non-empty")
        .scale(phase * C64::new(leaked.sqrt(), 0.0));
    let delta = &half + &half.adjoint();
    let decohered = decohered_joint(rho, ms, &pointers)?.scale_re(leaked);
    DensityMatrix::new(&(&populated + &delta.scale_re(b0)) + &decohered)
}

/// Recorded interval over which `P₀(t) < ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauWindow {
    /// First sample of the window, reported as the decoherence time.
    pub t_start: f64,
    pub t_end: f64,
}

impl PlateauWindow {
    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Longest contiguous run of samples with `P₀ < ε` (earliest on ties);
/// `None` when no sample qualifies. Expects `0 < ε < 1`.
pub fn plateau_window(trace: &EvolutionTrace, epsilon: f64) -> Option<PlateauWindow> {
    let mut best: Option<(usize, usize)> = None;
    let mut start: Option<usize> = None;
    for (k, &p) in trace.p0.iter().enumerate() {
        if p < epsilon {
            let s = *start.get_or_insert(k);
            if best.is_none_or(|(bs, be)| k - s > be - bs) {
                best = Some((s, k));
            }
        } else {
            start = None;
        }
    }
    best.map(|(s, e)| PlateauWindow {
        t_start: trace.times[s],
        t_end: trace.times[e],
    })
}

/// Sample times at which `P₀` climbs back to `≥ ε` after the plateau
/// (the longest run below `ε`). Oscillations during the initial decay are not revivals.
pub fn revival_times(trace: &EvolutionTrace, epsilon: f64) -> Vec<f64> {
    let Some(window) = plateau_window(trace, epsilon) else {
        return Vec::new();
    };
    trace
        .p0
        .windows(2)
        .enumerate()
        .filter(|(k, w)| trace.times[*k] >= window.t_end && w[0] < epsilon && w[1] >= epsilon)
        .map(|(k, _)| trace.times[k + 1])
        .collect()
}

/// `Σ_ℓ β_ℓ ξ_j^(ℓ)`, the evolved state of block `j` from `ξ_j^(0)`.
pub fn block_state(xi: &XiBasis, j: usize, betas: &[C64]) -> CVector {
    betas
        .iter()
        .enumerate()
        .fold(CVector::zeros(xi.vector(j, 0).len()), |acc, (l, b)| acc + xi.vector(j, l) * *b)
}

/// `e^{-iH t}` evaluated for many times from one decomposition.
pub fn propagators(h: &ComplexMatrix, times: &[f64]) -> Result<Vec<ComplexMatrix>> {
    let eig = herm_eig(h)?;
    Ok(times.par_iter().map(|&t| evolution_from_eig(&eig, t)).collect())
}
