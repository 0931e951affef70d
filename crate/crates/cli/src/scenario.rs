//! Scenario execution: time series, summaries and audit reports.

use std::fmt::Write as _;
use std::path::Path;

use povm_dyn::cpt::{cpt_deviation, gram_matrix, GramModel};
use povm_dyn::dynamics::{
    beta_amplitudes, closed_form_joint, plateau_window, pointer_states, revival_times, time_grid, ChainSpec,
    EvolutionTrace,
};
use povm_dyn::naimark::{naimark_unitary, recover_and_verify, AncillaLayout, NaimarkModel};
use povm_dyn::qmatrix::{partial_trace, trace_distance, Keep, DEFAULT_MAX_DIM};
use povm_dyn::states::{detection_ops, post_measurement, probabilities, DensityMatrix, MeasurementSet, Povm};
use povm_dyn::triad::{
    double_label_povm, triad_probabilities, triad_projectors, triad_reduced_state, vno_pointer_overlaps, XiSpec,
};
use povm_dyn::ComplexMatrix;
use serde::Serialize;

use crate::config::{initial_state, load_povm, Audit, Loaded, ModelKind, ScenarioConfig};
use crate::CliError;

/// Pointer states are only defined once this much population has left `|ψ₀⟩`.
const POINTER_P0_CUTOFF: f64 = 1.0 - 1e-6;

const REVIVAL_NOTE: &str = "revival times are in units of 1/omega0; the expected scale n_l/omega0 is an assumed reading of a qualitative statement, checked to within 50%";
const APPARATUS_NOTE: &str = "the apparatus is a finite n_xi-level surrogate with integer outcome values; pointer overlaps are Dirichlet kernels, exactly zero at t_star = 2*pi/n_xi and recurring with period 2*pi";

/// Everything a scenario needs, validated and built once.
pub struct Prepared {
    pub config: ScenarioConfig,
    pub povm: Povm,
    pub ms: MeasurementSet,
    pub rho: DensityMatrix,
    pub spec: ChainSpec,
}

pub fn prepare(loaded: &Loaded) -> Result<Prepared, CliError> {
    let config = loaded.config.clone();
    let problems = config.field_violations();
    if !problems.is_empty() {
        return Err(CliError::Validation(problems.join("; ")));
    }
    let povm = load_povm(&loaded.povm_path)?;
    let rho = initial_state(&config.state, povm.dim())?;
    let ms = detection_ops(&povm, None)?;
    let spec = config.chain()?;
    Ok(Prepared {
        config,
        povm,
        ms,
        rho,
        spec,
    })
}

#[derive(Debug, Serialize)]
pub struct ModelInfo {
    pub model: ModelKind,
    pub n_s: usize,
    pub n_gamma: usize,
    pub n_l: usize,
    pub n_a: usize,
    pub profile: String,
    pub omegas: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ProbabilityReport {
    pub labels: Vec<String>,
    pub direct: Vec<f64>,
    pub naimark: Option<Vec<f64>>,
    pub triad: Option<Vec<f64>>,
    pub max_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct NaimarkSection {
    pub max_op_residual: f64,
    pub max_effect_residual: f64,
    pub max_probability_residual: f64,
    pub unitarity_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct PlateauSection {
    pub epsilon: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub length: f64,
    /// Trace distance between `Tr_A ρ_SA(t_start)` and `Σ M ρ M†`; absent when the joint space is too large.
    pub reduced_state_distance: Option<f64>,
    pub reduced_state_bound: f64,
}

#[derive(Debug, Serialize)]
pub struct RevivalSection {
    pub times: Vec<f64>,
    pub expected_scale: f64,
    pub note: &'static str,
}

#[derive(Debug, Serialize)]
pub struct PointerAudit {
    pub samples: usize,
    pub max_gram_residual: f64,
    pub max_cpt_residual: f64,
    pub max_kraus_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct OverlapAudit {
    /// Apparatus time; absent for a prescribed overlap matrix.
    pub t: Option<f64>,
    pub max_offdiagonal_overlap: f64,
    pub cpt_residual: f64,
    pub kraus_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct CptSection {
    pub pointers: PointerAudit,
    pub apparatus: Vec<OverlapAudit>,
    pub uniform_overlap: Option<OverlapAudit>,
}

#[derive(Debug, Serialize)]
pub struct TriadSection {
    pub n_xi: usize,
    pub t_star: f64,
    pub projector_residual: f64,
    pub discard_probability: f64,
    pub outcome_count: usize,
    pub marginals: Vec<f64>,
    pub marginal_residual: f64,
    pub double_label_probabilities: Vec<Vec<f64>>,
    pub completeness_residual: f64,
    pub max_resolution_residual: f64,
    pub reduced_state: Vec<Vec<[f64; 2]>>,
    pub distance_to_post_measurement: f64,
    pub note: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub model: ModelInfo,
    pub samples: usize,
    pub norm_residual: f64,
    pub probabilities: ProbabilityReport,
    pub naimark: Option<NaimarkSection>,
    pub plateau: Option<PlateauSection>,
    pub revivals: RevivalSection,
    pub cpt: Option<CptSection>,
    pub triad: Option<TriadSection>,
}

fn model_info(p: &Prepared) -> Result<ModelInfo, CliError> {
    let layout = AncillaLayout::new(p.ms.len(), p.spec.n_l())?;
    Ok(ModelInfo {
        model: p.config.model,
        n_s: p.ms.dim(),
        n_gamma: p.ms.len(),
        n_l: p.spec.n_l(),
        n_a: layout.n_a(),
        profile: p.spec.profile().to_string(),
        omegas: p.spec.omegas().to_vec(),
    })
}

fn to_json(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    povm_dyn::povm_file::matrix_to_json(m)
}

/// CSV with columns `t, p0, xi0_phase, beta_abs_0 … beta_abs_nL`, 17 significant digits.
pub fn trace_csv(trace: &EvolutionTrace, n_l: usize) -> String {
    let mut out = String::from("t,p0,xi0_phase");
    for l in 0..=n_l {
        let _ = write!(out, ",beta_abs_{l}");
    }
    out.push('\n');
    for k in 0..trace.len() {
        let _ = write!(out, "{:.16e},{:.16e},{:.16e}", trace.times[k], trace.p0[k], trace.xi0_phase[k]);
        for b in &trace.betas[k] {
            let _ = write!(out, ",{:.16e}", b.norm());
        }
        out.push('\n');
    }
    out
}

pub fn pointer_audit(ms: &MeasurementSet, spec: &ChainSpec, trace: &EvolutionTrace) -> Result<PointerAudit, CliError> {
    let layout = AncillaLayout::new(ms.len(), spec.n_l())?;
    let mut audit = PointerAudit {
        samples: 0,
        max_gram_residual: 0.0,
        max_cpt_residual: 0.0,
        max_kraus_residual: 0.0,
    };
    for (betas, p0) in trace.betas.iter().zip(&trace.p0) {
        if *p0 >= POINTER_P0_CUTOFF {
            continue;
        }
        let gm = gram_matrix(&pointer_states(betas, &layout)?)?;
        let d = cpt_deviation(&gm, ms)?;
        audit.samples += 1;
        audit.max_gram_residual = audit.max_gram_residual.max(gm.orthonormality_residual());
        audit.max_cpt_residual = audit.max_cpt_residual.max(d.cpt_residual);
        audit.max_kraus_residual = audit.max_kraus_residual.max(d.kraus_residual);
    }
    Ok(audit)
}

fn overlap_audit(ms: &MeasurementSet, q: ComplexMatrix, t: Option<f64>) -> Result<OverlapAudit, CliError> {
    let n = q.rows();
    let max_offdiagonal_overlap = (0..n)
        .flat_map(|r| (0..n).filter(move |c| *c != r).map(move |c| (r, c)))
        .map(|(r, c)| q.get(r, c).norm())
        .fold(0.0, f64::max);
    let d = cpt_deviation(&GramModel::from_overlaps(q)?, ms)?;
    Ok(OverlapAudit {
        t,
        max_offdiagonal_overlap,
        cpt_residual: d.cpt_residual,
        kraus_residual: d.kraus_residual,
    })
}

fn xi_spec(cfg: &ScenarioConfig, n_gamma: usize) -> Result<XiSpec, CliError> {
    Ok(XiSpec::integer(cfg.n_xi_for(n_gamma), n_gamma)?)
}

pub fn cpt_section(p: &Prepared, trace: &EvolutionTrace, uniform: Option<f64>) -> Result<CptSection, CliError> {
    let xi = xi_spec(&p.config, p.ms.len())?;
    let t_star = xi.orthogonality_time().expect("integer outcome values");
    let apparatus = [0.0, 0.5 * t_star, t_star]
        .into_iter()
        .map(|t| overlap_audit(&p.ms, vno_pointer_overlaps(&xi, t), Some(t)))
        .collect::<Result<Vec<_>, _>>()?;
    let uniform_overlap = match uniform {
        Some(c) => {
            let n = p.ms.len();
            let q = ComplexMatrix::from_fn(n, n, |r, k| {
                povm_dyn::C64::new(if r == k { 1.0 } else { c }, 0.0)
            });
            Some(overlap_audit(&p.ms, q, None)?)
        }
        None => None,
    };
    Ok(CptSection {
        pointers: pointer_audit(&p.ms, &p.spec, trace)?,
        apparatus,
        uniform_overlap,
    })
}

pub fn triad_section(p: &Prepared, nm: &NaimarkModel) -> Result<TriadSection, CliError> {
    let xi = xi_spec(&p.config, p.ms.len())?;
    let n_xi = xi.n_xi();
    let t_star = xi.orthogonality_time().expect("integer outcome values");
    let tm = triad_projectors(nm, xi)?;
    let tp = triad_probabilities(&tm, &p.rho)?;
    let dl = double_label_povm(&tm, &p.rho)?;
    let direct = probabilities(&p.rho, &p.povm)?;
    let marginal_residual = dl
        .marginals
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let st = triad_reduced_state(&tm, &p.rho, t_star)?;
    let post = post_measurement(&p.rho, &p.ms)?;
    Ok(TriadSection {
        n_xi,
        t_star,
        projector_residual: tm.residuals().max(),
        discard_probability: tp.discard,
        outcome_count: dl.outcome_count(),
        marginals: dl.marginals.clone(),
        marginal_residual,
        double_label_probabilities: dl.probs.clone(),
        completeness_residual: dl.completeness_residual,
        max_resolution_residual: st.resolution_residuals.iter().cloned().fold(0.0, f64::max),
        reduced_state: to_json(st.rho_s.matrix()),
        distance_to_post_measurement: trace_distance(st.rho_s.matrix(), post.rho_out.matrix())?,
        note: APPARATUS_NOTE,
    })
}

fn reduced_state_distance(p: &Prepared, t: f64) -> Result<Option<f64>, CliError> {
    let n_a = AncillaLayout::new(p.ms.len(), p.spec.n_l())?.n_a();
    if p.ms.dim() * n_a > DEFAULT_MAX_DIM {
        return Ok(None);
    }
    let joint = closed_form_joint(&p.rho, &p.ms, &p.spec, t)?;
    let reduced = partial_trace(joint.matrix(), p.ms.dim(), n_a, Keep::First)?;
    let post = post_measurement(&p.rho, &p.ms)?;
    Ok(Some(trace_distance(&reduced, post.rho_out.matrix())?))
}

pub fn run_trace(p: &Prepared) -> Result<EvolutionTrace, CliError> {
    let times = time_grid(p.config.t_max, p.config.dt)?;
    Ok(beta_amplitudes(&p.spec, &times)?)
}

pub fn summarize(p: &Prepared, trace: &EvolutionTrace) -> Result<Summary, CliError> {
    let cfg = &p.config;
    let direct = probabilities(&p.rho, &p.povm)?;
    let needs_dilation = cfg.has_audit(Audit::Naimark) || cfg.has_audit(Audit::Triad);
    let nm = if needs_dilation { Some(naimark_unitary(&p.ms)?) } else { None };

    let naimark = match (&nm, cfg.has_audit(Audit::Naimark)) {
        (Some(nm), true) => {
            let r = recover_and_verify(nm, &p.ms, &p.povm, &p.rho)?;
            Some(NaimarkSection {
                max_op_residual: r.max_op_residual(),
                max_effect_residual: r.max_effect_residual(),
                max_probability_residual: r.max_probability_residual(),
                unitarity_residual: r.unitarity_residual,
            })
        }
        _ => None,
    };
    let triad = match (&nm, cfg.has_audit(Audit::Triad)) {
        (Some(nm), true) => Some(triad_section(p, nm)?),
        _ => None,
    };
    let naimark_probs = match (&nm, cfg.has_audit(Audit::Naimark)) {
        (Some(nm), true) => Some(nm.probabilities(&p.rho)?),
        _ => None,
    };
    let triad_probs = match (&nm, cfg.has_audit(Audit::Triad)) {
        (Some(nm), true) => {
            let tm = triad_projectors(nm, xi_spec(cfg, p.ms.len())?)?;
            Some(triad_probabilities(&tm, &p.rho)?.outcomes)
        }
        _ => None,
    };
    let max_residual = [&naimark_probs, &triad_probs]
        .into_iter()
        .flatten()
        .flat_map(|route| route.iter().zip(&direct).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let plateau = match plateau_window(trace, cfg.epsilon) {
        Some(w) => Some(PlateauSection {
            epsilon: cfg.epsilon,
            t_start: w.t_start,
            t_end: w.t_end,
            length: w.length(),
            reduced_state_distance: reduced_state_distance(p, w.t_start)?,
            reduced_state_bound: 3.0 * cfg.epsilon.sqrt(),
        }),
        None => None,
    };
    let cpt = if cfg.has_audit(Audit::Cpt) {
        Some(cpt_section(p, trace, None)?)
    } else {
        None
    };
    Ok(Summary {
        status: if plateau.is_some() { "ok" } else { "no-plateau" },
        model: model_info(p)?,
        samples: trace.len(),
        norm_residual: trace.norm_residual(),
        probabilities: ProbabilityReport {
            labels: p.povm.labels().to_vec(),
            direct,
            naimark: naimark_probs,
            triad: triad_probs,
            max_residual,
        },
        naimark,
        plateau,
        revivals: RevivalSection {
            times: revival_times(trace, cfg.epsilon),
            expected_scale: p.spec.n_l() as f64 / p.spec.omega0(),
            note: REVIVAL_NOTE,
        },
        cpt,
        triad,
    })
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
