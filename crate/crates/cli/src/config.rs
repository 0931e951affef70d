//! Scenario configuration: JSON file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use povm_dyn::dynamics::{coupling_profile, ChainSpec, CouplingProfile, DEFAULT_DT, DEFAULT_PLATEAU_EPSILON};
use povm_dyn::povm_file::{matrix_from_json, parse_povm_file, JsonMatrix};
use povm_dyn::states::{DensityMatrix, Povm};
use povm_dyn::{CVector, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Two-level exchange, `n_l = 1`.
    Periodic,
    /// Hopping chain with `n_l` pointer levels.
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Uniform,
    Pst,
}

impl From<ProfileKind> for CouplingProfile {
    fn from(p: ProfileKind) -> Self {
        match p {
            ProfileKind::Uniform => CouplingProfile::Uniform,
            ProfileKind::Pst => CouplingProfile::Pst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Audit {
    Naimark,
    Cpt,
    Triad,
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Audit::Naimark => "naimark",
            Audit::Cpt => "cpt",
            Audit::Triad => "triad",
        })
    }
}

/// Initial system state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    MaximallyMixed,
    Basis(usize),
    /// Amplitudes as `[re, im]`; normalized on load.
    Pure(Vec<[f64; 2]>),
    Density(JsonMatrix),
}

fn default_model() -> ModelKind {
    ModelKind::Chain
}
fn default_n_l() -> usize {
    1
}
fn default_profile() -> ProfileKind {
    ProfileKind::Uniform
}
fn default_omega0() -> f64 {
    1.0
}
fn default_t_max() -> f64 {
    40.0
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_epsilon() -> f64 {
    DEFAULT_PLATEAU_EPSILON
}
fn default_state() -> StateSpec {
    StateSpec::MaximallyMixed
}
fn default_audits() -> Vec<Audit> {
    vec![Audit::Naimark, Audit::Cpt, Audit::Triad]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// POVM JSON file; relative paths resolve against the config file.
    pub povm: PathBuf,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default = "default_n_l")]
    pub n_l: usize,
    #[serde(default = "default_profile")]
    pub profile: ProfileKind,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_state")]
    pub state: StateSpec,
    #[serde(default = "default_audits")]
    pub audits: Vec<Audit>,
    /// Apparatus dimension; defaults to the outcome count plus one.
    #[serde(default)]
    pub n_xi: Option<usize>,
}

/// Flags that override config fields of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub povm: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub n_l: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileKind>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub audits: Option<Vec<Audit>>,
    #[arg(long)]
    pub n_xi: Option<usize>,
}

impl ScenarioConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.povm {
            self.povm = v.clone();
        }
        if let Some(v) = o.model {
            self.model = v;
        }
        if let Some(v) = o.n_l {
            self.n_l = v;
        }
        if let Some(v) = o.profile {
            self.profile = v;
        }
        if let Some(v) = o.omega0 {
            self.omega0 = v;
        }
        if let Some(v) = o.t_max {
            self.t_max = v;
        }
        if let Some(v) = o.dt {
            self.dt = v;
        }
        if let Some(v) = o.epsilon {
            self.epsilon = v;
        }
        if let Some(v) = &o.audits {
            self.audits = v.clone();
        }
        if let Some(v) = o.n_xi {
            self.n_xi = Some(v);
        }
    }

    pub fn has_audit(&self, a: Audit) -> bool {
        self.audits.contains(&a)
    }

    /// Field-level violations, independent of the POVM contents.
    pub fn field_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            out.push(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            out.push(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            out.push(format!("omega0 must be positive, got {}", self.omega0));
        }
        if self.n_l == 0 {
            out.push("n_l must be at least 1".into());
        }
        if self.model == ModelKind::Periodic && self.n_l != 1 {
            out.push(format!("the periodic model has n_l = 1, got {}", self.n_l));
        }
        if let (true, true) = (self.dt > 0.0, self.t_max > 0.0) {
            let steps = (self.t_max / self.dt).round();
            if steps > 1e7 {
                out.push(format!("time grid of {steps} steps is too large"));
            }
        }
        out
    }

    pub fn chain(&self) -> Result<ChainSpec, CliError> {
        let n_l = match self.model {
            ModelKind::Periodic => 1,
            ModelKind::Chain => self.n_l,
        };
        Ok(coupling_profile(self.profile.into(), n_l, self.omega0)?)
    }

    pub fn n_xi_for(&self, n_gamma: usize) -> usize {
        self.n_xi.unwrap_or(n_gamma + 1)
    }
}

/// A loaded config with its POVM path resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ScenarioConfig,
    pub povm_path: PathBuf,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Loaded, CliError> {
    let text = read_text(path)?;
    let mut config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    config.apply(overrides);
    let povm_path = if config.povm.is_absolute() {
        config.povm.clone()
    } else {
        path.parent().unwrap_or(Path::new(".")).join(&config.povm)
    };
    Ok(Loaded { config, povm_path })
}

pub fn load_povm(path: &Path) -> Result<Povm, CliError> {
    let text = read_text(path)?;
    Ok(parse_povm_file(&text)?.into_povm()?)
}

/// Every problem with the config and its POVM, without running anything.
pub fn violations(loaded: &Loaded) -> Result<Vec<String>, CliError> {
    let cfg = &loaded.config;
    let mut out = cfg.field_violations();
    let text = read_text(&loaded.povm_path)?;
    let file = match parse_povm_file(&text) {
        Ok(f) => f,
        Err(e) => {
            out.push(format!("povm {}: {e}", loaded.povm_path.display()));
            return Ok(out);
        }
    };
    let (dim, n_gamma) = (file.dim, file.effects.len());
    match file.violations() {
        Ok(vs) => out.extend(vs.into_iter().map(|v| format!("povm: {}", v.message))),
        Err(e) => out.push(format!("povm: {e}")),
    }
    if let Err(e) = initial_state(&cfg.state, dim) {
        out.push(format!("state: {e}"));
    }
    let n_xi = cfg.n_xi_for(n_gamma);
    if cfg.has_audit(Audit::Triad) && n_xi < n_gamma.max(2) {
        out.push(format!("n_xi = {n_xi} must be at least the outcome count {n_gamma}"));
    }
    Ok(out)
}

pub fn initial_state(spec: &StateSpec, dim: usize) -> Result<DensityMatrix, CliError> {
    let rho = match spec {
        StateSpec::MaximallyMixed => DensityMatrix::maximally_mixed(dim),
        StateSpec::Basis(k) => DensityMatrix::basis(dim, *k)?,
        StateSpec::Pure(amps) => {
            if amps.len() != dim {
                return Err(CliError::Validation(format!(
                    "pure state has {} amplitudes, POVM dimension is {dim}",
                    amps.len()
                )));
            }
            let v = CVector::from_iterator(dim, amps.iter().map(|[re, im]| C64::new(*re, *im)));
            DensityMatrix::from_pure(&v)?
        }
        StateSpec::Density(rows) => {
            let m = matrix_from_json(rows)?;
            if m.rows() != dim || m.cols() != dim {
                return Err(CliError::Validation(format!(
                    "density matrix is {}x{}, POVM dimension is {dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            DensityMatrix::new(m)?
        }
    };
    Ok(rho)
}
