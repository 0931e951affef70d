//! Reference measurements and seeded random generators.
//!
//! All random constructors take an explicit RNG so runs are reproducible from a seed.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::qmatrix::{evolve_unitary, herm_eig, CVector, ComplexMatrix, C64};
use crate::states::{index_labels, validate_povm, DensityMatrix, Povm};

/// Deterministic RNG used by fixtures and the CLI generator.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Trine state `cos(θ/2)|0⟩ + sin(θ/2)|1⟩` with Bloch angle `θ = 2πγ/3`.
pub fn trine_state(gamma: usize) -> CVector {
    let half = PI * gamma as f64 / 3.0;
    CVector::from_vec(vec![C64::new(half.cos(), 0.0), C64::new(half.sin(), 0.0)])
}

/// Qubit trine POVM `F^γ = (2/3)|φ_γ⟩⟨φ_γ|`.
pub fn trine_povm() -> Povm {
    let effects = (0..3)
        .map(|g| ComplexMatrix::projector(&trine_state(g)).scale_re(2.0 / 3.0))
        .collect();
    validate_povm(effects, vec!["trine-0".into(), "trine-120".into(), "trine-240".into()])
        .expect("trine POVM is valid")
}

/// Ideal PVM in the computational basis of dimension `n`.
pub fn basis_pvm(n: usize) -> Povm {
    let effects = (0..n)
        .map(|k| {
            let mut p = ComplexMatrix::zeros(n, n);
            p.set(k, k, C64::new(1.0, 0.0));
            p
        })
        .collect();
    validate_povm(effects, index_labels(n)).expect("basis PVM is valid")
}

/// `{|0⟩⟨0|, |1⟩⟨1|}`
pub fn qubit_pvm() -> Povm {
    basis_pvm(2)
}

fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, n).scale_re(3.0);
    evolve_unitary(&h, 1.0).expect("Hermitian generator")
}

/// Normalized random pure state.
pub fn random_state_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| random_complex(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Full-rank-in-general mixed state `A A† / Tr(A A†)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let a = random_matrix(rng, n, n);
    let g = &a * &a.adjoint();
    let tr = g.trace().re;
    DensityMatrix::new(g.scale_re(1.0 / tr)).expect("Gram matrices are valid states")
}

/// Random POVM built as `F^γ = S^{-1/2} G_γ S^{-1/2}` with `G_γ = A_γ†A_γ`, `S = Σ G_γ`.
pub fn random_povm<R: Rng>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let grams: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let a = random_matrix(rng, dim, dim);
            &a.adjoint() * &a
        })
        .collect();
    let total: ComplexMatrix = grams.iter().cloned().sum();
    let eig = herm_eig(&total).expect("sum of Gram matrices is Hermitian");
    let inv_sqrt = eig.map_spectrum(|l| C64::new(1.0 / l.sqrt(), 0.0));
    let effects = grams
        .iter()
        .map(|g| (&(&inv_sqrt * g) * &inv_sqrt).hermitian_part())
        .collect();
    validate_povm(effects, index_labels(outcomes)).expect("normalized Gram family is a POVM")
}
