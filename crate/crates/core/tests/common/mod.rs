//! Randomized invariant checks shared by the property suite and the acceptance run.
//!
//! Each check draws everything it needs from a seeded RNG and returns `Err`
//! with a description on the first violated invariant. Dimensions stay ≤ 4.
#![allow(dead_code)]

use povm_dyn::cpt::{cpt_deviation, gram_matrix};
use povm_dyn::dynamics::{
    beta_amplitudes, block_sum_hamiltonian, closed_form_joint, full_hamiltonian, joint_propagator, plateau_window,
    pointer_states, sigma_operator, time_grid, ChainSpec,
};
use povm_dyn::fixtures::{
    random_density, random_hermitian, random_matrix, random_povm, random_state_vector, random_unitary, seeded_rng,
};
use povm_dyn::naimark::{naimark_unitary, recover_and_verify, xi_basis, AncillaLayout};
use povm_dyn::qmatrix::{
    evolve_unitary, herm_eig, partial_trace, psd_sqrt, tensor, trace_distance, Keep, C64,
};
use povm_dyn::states::{completeness_residual, detection_ops, post_measurement, probabilities, MeasurementSet, Povm};
use povm_dyn::triad::{double_label_povm, triad_probabilities, triad_projectors, triad_reduced_state, XiSpec};
use povm_dyn::{CVector, ComplexMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Check = fn(u64) -> Result<(), String>;

pub const PROPERTIES: &[(&str, Check)] = &[
    ("tensor_is_associative", tensor_is_associative),
    ("partial_trace_of_product", partial_trace_of_product),
    ("eigendecomposition_reconstructs", eigendecomposition_reconstructs),
    ("evolution_group_law", evolution_group_law),
    ("psd_sqrt_of_square", psd_sqrt_of_square),
    ("probabilities_sum_to_one", probabilities_sum_to_one),
    ("post_measurement_is_a_state", post_measurement_is_a_state),
    ("detection_ops_are_complete", detection_ops_are_complete),
    ("xi_family_is_orthonormal", xi_family_is_orthonormal),
    ("xi_blocks_are_orthogonal", xi_blocks_are_orthogonal),
    ("dilation_round_trip", dilation_round_trip),
    ("chain_amplitudes_are_block_independent", chain_amplitudes_are_block_independent),
    ("compact_hamiltonian_equals_block_sum", compact_hamiltonian_equals_block_sum),
    ("sigma_blocks_annihilate", sigma_blocks_annihilate),
    ("two_level_evolution_is_periodic", two_level_evolution_is_periodic),
    ("plateau_state_is_post_measurement", plateau_state_is_post_measurement),
    ("gram_trace_is_outcome_count", gram_trace_is_outcome_count),
    ("kraus_sum_is_identity", kraus_sum_is_identity),
    ("cpt_residual_ignores_relabeling", cpt_residual_ignores_relabeling),
    ("chain_pointers_are_orthonormal", chain_pointers_are_orthonormal),
    ("triad_projectors_resolve_identity", triad_projectors_resolve_identity),
    ("probability_routes_agree", probability_routes_agree),
    ("n_operators_resolve_identity", n_operators_resolve_identity),
    ("marginals_ignore_ancilla_basis", marginals_ignore_ancilla_basis),
];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: povm_dyn::Error) -> String {
    e.to_string()
}

fn dim(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=4)
}

fn random_setup(rng: &mut ChaCha8Rng, max_dim: usize, max_outcomes: usize) -> Result<(Povm, MeasurementSet), String> {
    let d = rng.gen_range(1..=max_dim);
    let n = rng.gen_range(2..=max_outcomes);
    let povm = random_povm(rng, d, n);
    let ms = detection_ops(&povm, None).map_err(err)?;
    Ok((povm, ms))
}

pub fn tensor_is_associative(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let shapes: Vec<(usize, usize)> = (0..3).map(|_| (dim(rng), dim(rng))).collect();
    let m: Vec<ComplexMatrix> = shapes.iter().map(|&(r, c)| random_matrix(rng, r, c)).collect();
    let (a, b, c) = (&m[0], &m[1], &m[2]);
    let left = tensor(&tensor(a, b).map_err(err)?, c).map_err(err)?;
    let right = tensor(a, &tensor(b, c).map_err(err)?).map_err(err)?;
    let d = left.distance(&right);
    ensure(d <= 1e-12, || format!("(a⊗b)⊗c differs from a⊗(b⊗c) by {d:e}"))
}

pub fn partial_trace_of_product(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (da, db) = (dim(rng), dim(rng));
    let a = random_matrix(rng, da, da);
    let b = random_matrix(rng, db, db);
    let ab = tensor(&a, &b).map_err(err)?;
    let first = partial_trace(&ab, da, db, Keep::First).map_err(err)?;
    let second = partial_trace(&ab, da, db, Keep::Second).map_err(err)?;
    let d1 = first.distance(&a.scale(b.trace()));
    let d2 = second.distance(&b.scale(a.trace()));
    ensure(d1 <= 1e-12 && d2 <= 1e-12, || format!("partial traces off by {d1:e}, {d2:e}"))
}

pub fn eigendecomposition_reconstructs(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let n = dim(rng);
    let h = random_hermitian(rng, n);
    let eig = herm_eig(&h).map_err(err)?;
    let rec = eig.reconstruct().distance(&h);
    let uni = eig.eigenvectors.unitarity_residual();
    let sorted = eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
    ensure(rec <= 1e-10 * h.frobenius_norm().max(1.0) && uni <= 1e-10 && sorted, || {
        format!("reconstruction {rec:e}, unitarity {uni:e}, sorted {sorted}")
    })
}

pub fn evolution_group_law(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let n = dim(rng);
    let h = random_hermitian(rng, n);
    let (t1, t2) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let u1 = evolve_unitary(&h, t1).map_err(err)?;
    let u2 = evolve_unitary(&h, t2).map_err(err)?;
    let u12 = evolve_unitary(&h, t1 + t2).map_err(err)?;
    let d = (&u1 * &u2).distance(&u12);
    let uni = u1.unitarity_residual();
    ensure(d <= 1e-9 && uni <= 1e-10, || format!("group law {d:e}, unitarity {uni:e}"))
}

pub fn psd_sqrt_of_square(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let n = dim(rng);
    let a = random_matrix(rng, n, n);
    let m = &a.adjoint() * &a;
    let root = psd_sqrt(&(&m * &m)).map_err(err)?;
    let d = root.distance(&m);
    let sq = (&root * &root).distance(&(&m * &m));
    ensure(d <= 1e-9 * m.frobenius_norm().max(1.0) && sq <= 1e-10 * (&m * &m).frobenius_norm().max(1.0), || {
        format!("sqrt(m²) differs from m by {d:e}; square residual {sq:e}")
    })
}

pub fn probabilities_sum_to_one(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, _) = random_setup(rng, 4, 5)?;
    let rho = random_density(rng, povm.dim());
    let p = probabilities(&rho, &povm).map_err(err)?;
    let total: f64 = p.iter().sum();
    ensure((total - 1.0).abs() <= 1e-10 && p.iter().all(|x| *x >= 0.0), || {
        format!("probabilities {p:?} sum to {total}")
    })
}

pub fn post_measurement_is_a_state(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 5)?;
    let rho = random_density(rng, ms.dim());
    // DensityMatrix construction already enforces Hermiticity, trace and positivity.
    let post = post_measurement(&rho, &ms).map_err(err)?;
    let tr = post.rho_out.matrix().trace().re;
    let summed: f64 = post.detected.iter().map(|d| d.probability).sum();
    ensure((tr - 1.0).abs() <= 1e-10 && (tr - summed).abs() <= 1e-12, || {
        format!("Tr rho_out = {tr}, Σ p = {summed}")
    })
}

pub fn detection_ops_are_complete(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, _) = random_setup(rng, 4, 5)?;
    let twists: Vec<ComplexMatrix> = (0..povm.len()).map(|_| random_unitary(rng, povm.dim())).collect();
    for tw in [None, Some(twists.as_slice())] {
        let ms = detection_ops(&povm, tw).map_err(err)?;
        let r = completeness_residual(ms.ops());
        ensure(r <= 1e-10, || format!("Σ M†M residual {r:e}"))?;
    }
    Ok(())
}

pub fn xi_family_is_orthonormal(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 4)?;
    let layout = AncillaLayout::new(ms.len(), rng.gen_range(1..=3)).map_err(err)?;
    let xi = xi_basis(&ms, layout).map_err(err)?;
    let r = xi.gram().identity_residual();
    ensure(r <= 1e-10, || format!("ξ Gram residual {r:e}"))
}

pub fn xi_blocks_are_orthogonal(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 4)?;
    let xi = xi_basis(&ms, AncillaLayout::new(ms.len(), 1).map_err(err)?).map_err(err)?;
    let p: Vec<ComplexMatrix> = (0..ms.dim()).map(|j| xi.block_projector(j, 1)).collect();
    for (j, pj) in p.iter().enumerate() {
        for (k, pk) in p.iter().enumerate() {
            let prod = pj * pk;
            let d = if j == k { prod.distance(pj) } else { prod.frobenius_norm() };
            ensure(d <= 1e-10, || format!("P_{j} P_{k} residual {d:e}"))?;
        }
    }
    Ok(())
}

pub fn dilation_round_trip(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, ms) = random_setup(rng, 3, 5)?;
    let model = naimark_unitary(&ms).map_err(err)?;
    let rho = random_density(rng, ms.dim());
    let report = recover_and_verify(&model, &ms, &povm, &rho).map_err(err)?;
    ensure(
        report.max_op_residual() <= 1e-10 && report.max_residual() <= 1e-9 && report.unitarity_residual <= 1e-10,
        || format!("dilation residuals op {:e}, all {:e}", report.max_op_residual(), report.max_residual()),
    )
}

fn random_chain(rng: &mut ChaCha8Rng, max_levels: usize) -> ChainSpec {
    let n_l = rng.gen_range(1..=max_levels);
    ChainSpec::custom((0..n_l).map(|_| rng.gen_range(0.2..2.0)).collect()).expect("positive couplings")
}

pub fn chain_amplitudes_are_block_independent(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 3, 3)?;
    let spec = random_chain(rng, 4);
    let t = rng.gen_range(0.0..6.0);
    let xi = xi_basis(&ms, AncillaLayout::new(ms.len(), spec.n_l()).map_err(err)?).map_err(err)?;
    let u = joint_propagator(&ms, &spec, t).map_err(err)?;
    let fast = beta_amplitudes(&spec, &[t]).map_err(err)?;
    for j in 0..ms.dim() {
        let evolved = u.apply(xi.vector(j, 0));
        for (l, beta) in fast.betas[0].iter().enumerate() {
            let b = xi.vector(j, l).dotc(&evolved);
            let d = (b - beta).norm();
            ensure(d <= 1e-10, || format!("β_{l} in block {j} differs from the chain by {d:e}"))?;
        }
    }
    Ok(())
}

pub fn compact_hamiltonian_equals_block_sum(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 3, 4)?;
    let spec = random_chain(rng, 6);
    let a = full_hamiltonian(&ms, &spec).map_err(err)?;
    let b = block_sum_hamiltonian(&ms, &spec).map_err(err)?;
    let d = a.distance(&b);
    ensure(d <= 1e-10, || format!("compact and block Hamiltonians differ by {d:e}"))
}

pub fn sigma_blocks_annihilate(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 3, 3)?;
    if ms.dim() < 2 {
        return Ok(());
    }
    let n_l = rng.gen_range(1..=3);
    let xi = xi_basis(&ms, AncillaLayout::new(ms.len(), n_l).map_err(err)?).map_err(err)?;
    let (l, lp) = (rng.gen_range(0..n_l), rng.gen_range(0..n_l));
    let a = sigma_operator(&xi, 0, l);
    let b = sigma_operator(&xi, 1, lp);
    let d = (&a * &b).frobenius_norm();
    ensure(d <= 1e-10, || format!("σ^(0,{l}) σ^(1,{lp}) has norm {d:e}"))
}

pub fn two_level_evolution_is_periodic(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 3, 4)?;
    let omega = rng.gen_range(0.3..2.0);
    let spec = ChainSpec::uniform(1, omega).map_err(err)?;
    let t = rng.gen_range(0.0..5.0);
    let xi = xi_basis(&ms, AncillaLayout::new(ms.len(), 1).map_err(err)?).map_err(err)?;
    let span: ComplexMatrix = xi.vectors().iter().map(ComplexMatrix::projector).sum();
    let u = joint_propagator(&ms, &spec, t).map_err(err)?;
    let later = joint_propagator(&ms, &spec, t + 2.0 * std::f64::consts::PI / omega).map_err(err)?;
    let d = (&(&later - &u) * &span).frobenius_norm();
    ensure(d <= 1e-9, || format!("U(t + 2π/ω) − U(t) on the ξ-span has norm {d:e}"))
}

pub fn plateau_state_is_post_measurement(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 2, 3)?;
    let rho = random_density(rng, ms.dim());
    let spec = ChainSpec::uniform(30, 1.0).map_err(err)?;
    let eps = 1e-3;
    let trace = beta_amplitudes(&spec, &time_grid(25.0, 0.05).map_err(err)?).map_err(err)?;
    let window = plateau_window(&trace, eps).ok_or("no plateau below 1e-3 for n_L = 30")?;
    let t = rng.gen_range(window.t_start..=window.t_end);
    let joint = closed_form_joint(&rho, &ms, &spec, t).map_err(err)?;
    let n_a = ms.len() * spec.n_l() + 1;
    let reduced = partial_trace(joint.matrix(), ms.dim(), n_a, Keep::First).map_err(err)?;
    let post = post_measurement(&rho, &ms).map_err(err)?;
    let d = trace_distance(&reduced, post.rho_out.matrix()).map_err(err)?;
    ensure(d <= 3.0 * eps.sqrt(), || format!("trace distance {d:e} at t = {t} exceeds 3√ε"))
}

fn random_pointers(rng: &mut ChaCha8Rng, count: usize, len: usize) -> Vec<CVector> {
    (0..count).map(|_| random_state_vector(rng, len)).collect()
}

pub fn gram_trace_is_outcome_count(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let n = rng.gen_range(1..=4);
    let len = dim(rng);
    let gm = gram_matrix(&random_pointers(rng, n, len)).map_err(err)?;
    let total: f64 = gm.weights().iter().sum();
    let tr = gm.q().trace();
    ensure(
        (total - n as f64).abs() <= 1e-10 && (tr - C64::new(n as f64, 0.0)).norm() <= 1e-12,
        || format!("Σ q_j = {total}, Tr Q = {tr} for {n} pointers"),
    )
}

pub fn kraus_sum_is_identity(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 4)?;
    let len = dim(rng);
    let gm = gram_matrix(&random_pointers(rng, ms.len(), len)).map_err(err)?;
    let d = cpt_deviation(&gm, &ms).map_err(err)?;
    ensure(d.kraus_residual <= 1e-10, || format!("kraus residual {:e}", d.kraus_residual))
}

pub fn cpt_residual_ignores_relabeling(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 4)?;
    let len = dim(rng);
    let pointers = random_pointers(rng, ms.len(), len);
    let base = cpt_deviation(&gram_matrix(&pointers).map_err(err)?, &ms).map_err(err)?;
    let mut perm: Vec<usize> = (0..ms.len()).collect();
    perm.rotate_left(rng.gen_range(0..ms.len()));
    perm.swap(0, ms.len() - 1);
    let permuted_ptrs: Vec<CVector> = perm.iter().map(|&k| pointers[k].clone()).collect();
    let permuted_ms = MeasurementSet::new(perm.iter().map(|&k| ms.ops()[k].clone()).collect()).map_err(err)?;
    let other = cpt_deviation(&gram_matrix(&permuted_ptrs).map_err(err)?, &permuted_ms).map_err(err)?;
    let d = (base.cpt_residual - other.cpt_residual).abs();
    ensure(d <= 1e-10, || format!("relabeling changed cpt_residual by {d:e}"))
}

pub fn chain_pointers_are_orthonormal(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, ms) = random_setup(rng, 4, 4)?;
    let spec = random_chain(rng, 8);
    let layout = AncillaLayout::new(ms.len(), spec.n_l()).map_err(err)?;
    let times: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..20.0)).collect();
    let trace = beta_amplitudes(&spec, &times).map_err(err)?;
    for (k, betas) in trace.betas.iter().enumerate() {
        if trace.p0[k] >= 1.0 - 1e-6 {
            continue;
        }
        let gm = gram_matrix(&pointer_states(betas, &layout).map_err(err)?).map_err(err)?;
        let r = gm.orthonormality_residual();
        let d = cpt_deviation(&gm, &ms).map_err(err)?;
        ensure(r <= 1e-10 && d.cpt_residual <= 1e-10, || {
            format!("t = {}: pointer Gram residual {r:e}, cpt residual {:e}", times[k], d.cpt_residual)
        })?;
    }
    Ok(())
}

fn triad_setup(rng: &mut ChaCha8Rng) -> Result<(Povm, povm_dyn::triad::TriadModel), String> {
    let (povm, ms) = random_setup(rng, 3, 4)?;
    let nm = naimark_unitary(&ms).map_err(err)?;
    let n_xi = rng.gen_range(ms.len()..=ms.len() + 3);
    let tm = triad_projectors(&nm, XiSpec::integer(n_xi, ms.len()).map_err(err)?).map_err(err)?;
    Ok((povm, tm))
}

pub fn triad_projectors_resolve_identity(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (_, tm) = triad_setup(rng)?;
    let r = tm.residuals();
    ensure(r.max() <= 1e-10, || format!("projector residuals {r:?}"))
}

pub fn probability_routes_agree(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, tm) = triad_setup(rng)?;
    let rho = random_density(rng, povm.dim());
    let direct = probabilities(&rho, &povm).map_err(err)?;
    let naimark = tm.naimark().probabilities(&rho).map_err(err)?;
    let triad = triad_probabilities(&tm, &rho).map_err(err)?;
    for g in 0..povm.len() {
        let d = (direct[g] - naimark[g]).abs().max((direct[g] - triad.outcomes[g]).abs());
        ensure(d <= 1e-10, || format!("outcome {g}: routes differ by {d:e}"))?;
    }
    ensure(triad.discard.abs() <= 1e-10, || format!("discard weight {}", triad.discard))
}

pub fn n_operators_resolve_identity(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, tm) = triad_setup(rng)?;
    let rho = random_density(rng, povm.dim());
    let t = rng.gen_range(0.0..7.0);
    let st = triad_reduced_state(&tm, &rho, t).map_err(err)?;
    let worst = st.resolution_residuals.iter().cloned().fold(0.0, f64::max);
    ensure(worst <= 1e-10, || format!("Σ_k N†N residual {worst:e}"))
}

pub fn marginals_ignore_ancilla_basis(seed: u64) -> Result<(), String> {
    let rng = &mut seeded_rng(seed);
    let (povm, tm) = triad_setup(rng)?;
    let rho = random_density(rng, povm.dim());
    let base = double_label_povm(&tm, &rho).map_err(err)?;
    let u = random_unitary(rng, tm.naimark().n_a());
    let rotated = double_label_povm(&tm.with_ancilla_basis(u).map_err(err)?, &rho).map_err(err)?;
    let direct = probabilities(&rho, &povm).map_err(err)?;
    for g in 0..povm.len() {
        let d = (base.marginals[g] - rotated.marginals[g]).abs();
        let e = (base.marginals[g] - direct[g]).abs();
        ensure(d <= 1e-10 && e <= 1e-12, || format!("outcome {g}: basis change {d:e}, coarse-graining {e:e}"))?;
    }
    ensure(rotated.completeness_residual <= 1e-10, || {
        format!("Σ F^(γk) residual {:e}", rotated.completeness_residual)
    })
}

/// Runs one check over `cases` consecutive seeds.
pub fn run_many(check: Check, first_seed: u64, cases: u64) -> Result<(), String> {
    (first_seed..first_seed + cases).try_for_each(|s| check(s).map_err(|e| format!("seed {s}: {e}")))
}
