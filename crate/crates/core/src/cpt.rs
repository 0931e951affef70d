//! Audit of the map obtained by forcing the vN-O coupling onto a set of
//! (possibly non-orthogonal) detection operators.
//!
//! With pointer overlaps `Q[γ',γ] = ⟨Ξ^γ'|Ξ^γ⟩` the forced map is
//! `ρ ↦ Σ_γγ' Q[γ',γ] M^γ ρ M^γ'†`. Writing `Q = Σ_j q_j |u_j⟩⟨u_j|` gives the
//! weighted Kraus form `Σ_j q_j L^(j) ρ L^(j)†` with `L^(j) = Σ_γ ū_j[γ] M^γ`.

use crate::error::{Error, Result};
use crate::qmatrix::{herm_eig, relative_tol, CVector, ComplexMatrix, HermEig, C64, HERMITIAN_TOL};
use crate::states::{DensityMatrix, MeasurementSet};

/// Pointer vectors must have unit norm to this tolerance.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Overlap eigenvalues down to `-EIGEN_CLAMP` are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Pointer Gram matrix and its spectral decomposition.
#[derive(Debug, Clone)]
pub struct GramModel {
    q: ComplexMatrix,
    eigen: HermEig,
}

impl GramModel {
    /// Builds the model from an overlap matrix; it must be Hermitian PSD with unit diagonal.
    pub fn from_overlaps(q: ComplexMatrix) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Dimension(format!("overlap matrix is {}x{}", q.rows(), q.cols())));
        }
        for g in 0..q.rows() {
            let d = q.get(g, g);
            if (d - C64::new(1.0, 0.0)).norm() > UNIT_NORM_TOL {
                return Err(Error::Validation(format!(
                    "pointer {g} is not normalized: <g|g> = {d}"
                )));
            }
        }
        let res = q.hermiticity_residual();
        if res > relative_tol(HERMITIAN_TOL, q.frobenius_norm()) {
            return Err(Error::Validation(format!("overlap matrix is not Hermitian (residual {res:e})")));
        }
        let mut eigen = herm_eig(&q)?;
        if let Some(&low) = eigen.eigenvalues.first() {
            if low < -EIGEN_CLAMP {
                return Err(Error::NotPsd {
                    eigenvalue: low,
                    tolerance: EIGEN_CLAMP,
                });
            }
        }
        for l in eigen.eigenvalues.iter_mut() {
            *l = l.max(0.0);
        }
        Ok(Self {
            q: q.hermitian_part(),
            eigen,
        })
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn eigen(&self) -> &HermEig {
        &self.eigen
    }

    pub fn len(&self) -> usize {
        self.q.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.q.rows() == 0
    }

    /// Eigenvalues `q_j`, ascending.
    pub fn weights(&self) -> &[f64] {
        &self.eigen.eigenvalues
    }

    /// `‖Q − I‖_F`
    pub fn orthonormality_residual(&self) -> f64 {
        self.q.identity_residual()
    }
}

/// `Q[γ',γ] = ⟨Ξ^γ'|Ξ^γ⟩` for unit-norm pointers of equal length.
pub fn gram_matrix(pointers: &[CVector]) -> Result<GramModel> {
    let first = pointers
        .first()
        .ok_or_else(|| Error::Validation("no pointer states given".into()))?;
    for (g, p) in pointers.iter().enumerate() {
        if p.len() != first.len() {
            return Err(Error::Dimension(format!(
                "pointer {g} has length {}, expected {}",
                p.len(),
                first.len()
            )));
        }
        let norm = p.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Validation(format!("pointer {g} has norm {norm}, expected 1")));
        }
    }
    let n = pointers.len();
    let q = ComplexMatrix::from_fn(n, n, |gp, g| pointers[gp].dotc(&pointers[g]));
    GramModel::from_overlaps(q)
}

/// Weighted Kraus operator `(q_j, L^(j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedOperator {
    pub weight: f64,
    pub op: ComplexMatrix,
}

fn check_sizes(gm: &GramModel, ms: &MeasurementSet) -> Result<()> {
    if gm.len() != ms.len() {
        return Err(Error::Dimension(format!(
            "{} pointer overlaps for {} measurement operators",
            gm.len(),
            ms.len()
        )));
    }
    Ok(())
}

/// `L^(j) = Σ_γ ū_j[γ] M^γ`, one per eigenvector of `Q`.
pub fn induced_map_operators(gm: &GramModel, ms: &MeasurementSet) -> Result<Vec<InducedOperator>> {
    check_sizes(gm, ms)?;
    let u = &gm.eigen.eigenvectors;
    Ok((0..gm.len())
        .map(|j| {
            let op = ms
                .ops()
                .iter()
                .enumerate()
                .map(|(g, m)| m.scale(u.get(g, j).conj()))
                .sum();
            InducedOperator {
                weight: gm.eigen.eigenvalues[j],
                op,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptDeviation {
    /// `‖Σ_j L^(j)†L^(j) − I‖_F`; vanishes for every unitary recombination.
    pub kraus_residual: f64,
    /// `‖Σ_j q_j L^(j)†L^(j) − I‖_F`; zero iff the forced map is CPT.
    pub cpt_residual: f64,
}

pub fn cpt_deviation(gm: &GramModel, ms: &MeasurementSet) -> Result<CptDeviation> {
    let ops = induced_map_operators(gm, ms)?;
    let gram = |w: &dyn Fn(f64) -> f64| -> ComplexMatrix {
        ops.iter().map(|o| (&o.op.adjoint() * &o.op).scale_re(w(o.weight))).sum()
    };
    Ok(CptDeviation {
        kraus_residual: gram(&|_| 1.0).identity_residual(),
        cpt_residual: gram(&|q| q).identity_residual(),
    })
}

/// `Σ_γγ' Q[γ',γ] M^γ ρ M^γ'†`, the system state left by the forced coupling.
pub fn forced_map(gm: &GramModel, ms: &MeasurementSet, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    check_sizes(gm, ms)?;
    if rho.dim() != ms.dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, measurement acts on {}",
            rho.dim(),
            ms.dim()
        )));
    }
    let ops = ms.ops();
    Ok(ops
        .iter()
        .enumerate()
        .flat_map(|(g, mg)| {
            ops.iter().enumerate().map(move |(gp, mgp)| {
                (&(mg * rho.matrix()) * &mgp.adjoint()).scale(gm.q.get(gp, g))
            })
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{qubit_pvm, trine_povm};
    use crate::states::detection_ops;

    fn trine_ms() -> MeasurementSet {
        detection_ops(&trine_povm(), None).unwrap()
    }

    fn uniform_overlaps(n: usize, c: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |r, k| C64::new(if r == k { 1.0 } else { c }, 0.0))
    }

    fn unit(n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn orthonormal_pointers_give_identity() {
        let gm = gram_matrix(&[unit(3, 0), unit(3, 1), unit(3, 2)]).unwrap();
        assert!(gm.orthonormality_residual() < 1e-15);
        assert!(gm.weights().iter().all(|q| (q - 1.0).abs() < 1e-14));
    }

    #[test]
    fn identical_pointers_give_rank_one() {
        let gm = gram_matrix(&[unit(2, 0), unit(2, 0), unit(2, 0)]).unwrap();
        let w = gm.weights();
        assert!(w[0].abs() < 1e-14 && w[1].abs() < 1e-14 && (w[2] - 3.0).abs() < 1e-14);
        let trace: f64 = w.iter().sum();
        assert!((trace - 3.0).abs() < 1e-13);

        let ms = trine_ms();
        let ops = induced_map_operators(&gm, &ms).unwrap();
        let sum: ComplexMatrix = ms.ops().iter().cloned().sum();
        let expected = sum.scale_re(1.0 / 3f64.sqrt());
        // eigenvector (1,1,1)/√3 up to a global phase
        let l = &ops[2].op;
        let phase = (expected.get(0, 0) / l.get(0, 0)).arg();
        assert!(l.scale(C64::from_polar(1.0, phase)).distance(&expected) < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_pointer() {
        let v = unit(2, 0) * C64::new(1.1, 0.0);
        assert!(gram_matrix(&[v, unit(2, 1)]).unwrap_err().is_validation());
        assert!(gram_matrix(&[]).is_err());
    }

    #[test]
    fn kraus_sum_always_identity() {
        let ms = trine_ms();
        for c in [0.0, 0.3, 0.5, 0.9] {
            let gm = GramModel::from_overlaps(uniform_overlaps(3, c)).unwrap();
            let d = cpt_deviation(&gm, &ms).unwrap();
            assert!(d.kraus_residual <= 1e-12, "c = {c}");
        }
    }

    #[test]
    fn identity_overlaps_are_cpt() {
        let gm = GramModel::from_overlaps(ComplexMatrix::identity(3)).unwrap();
        assert!(cpt_deviation(&gm, &trine_ms()).unwrap().cpt_residual <= 1e-12);
    }

    #[test]
    fn pvm_is_cpt_for_any_overlaps() {
        let ms = detection_ops(&qubit_pvm(), None).unwrap();
        let q = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.3, 0.4)],
            vec![C64::new(0.3, -0.4), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        let gm = GramModel::from_overlaps(q).unwrap();
        assert!(cpt_deviation(&gm, &ms).unwrap().cpt_residual <= 1e-12);
    }

    #[test]
    fn trine_with_half_overlaps_violates() {
        let gm = GramModel::from_overlaps(uniform_overlaps(3, 0.5)).unwrap();
        let ms = trine_ms();
        let d = cpt_deviation(&gm, &ms).unwrap();
        assert!(d.cpt_residual > 0.1, "{d:?}");
        // oracle: Σ_γγ' Q[γ',γ] M^γ'†M^γ − I summed directly
        let direct: ComplexMatrix = (0..3)
            .flat_map(|g| (0..3).map(move |gp| (g, gp)))
            .map(|(g, gp)| (&ms.ops()[gp].adjoint() * &ms.ops()[g]).scale(gm.q().get(gp, g)))
            .sum();
        assert!((direct.identity_residual() - d.cpt_residual).abs() < 1e-12);
    }

    #[test]
    fn forced_map_with_identity_overlaps_is_post_measurement() {
        let ms = trine_ms();
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let gm = GramModel::from_overlaps(ComplexMatrix::identity(3)).unwrap();
        let out = forced_map(&gm, &ms, &rho).unwrap();
        let post = crate::states::post_measurement(&rho, &ms).unwrap();
        assert!(out.distance(post.rho_out.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_mismatched_sizes_and_indefinite_overlaps() {
        let gm = GramModel::from_overlaps(ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(cpt_deviation(&gm, &trine_ms()), Err(Error::Dimension(_))));
        assert!(matches!(
            GramModel::from_overlaps(uniform_overlaps(3, -0.9)),
            Err(Error::NotPsd { .. })
        ));
    }
}
