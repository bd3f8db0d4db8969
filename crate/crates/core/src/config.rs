//! Run configuration in TOML.
//!
//! Every section and key is optional; omitted keys take the defaults below.
//! Unknown keys are rejected.
//!
//! ```toml
//! t_end = 1.0                  # > 0
//! output_dir = "runs"          # default: $CHDM_OUTPUT_ROOT, else "runs"
//! run_id = "reference"         # default: "run"
//!
//! [domain]
//! dimension = 1                # 1 or 2
//! points_per_axis = 128        # power of two >= 8
//! dealias_fraction = 0.6666666666666666
//!
//! [model]
//! gamma = 0.01
//! m = 1.0
//! beta = [0.0]                 # one entry per dimension
//! phi_coeffs = [-1.0, 0.0, 1.0]  # a_1 .. a_{2k+1}
//! psi_coeffs = [0.0, 0.5]        # b_0 .. b_k
//! theta = 0.01
//! signed_power = false
//!
//! [stepper]
//! scheme = "imex_bdf2"         # or "imex_be"
//! dt = 1e-3                    # shorthand for dt_min = dt_max = dt
//! stabilization = 1.0
//! safety = 0.9
//! error_tol = 1e-4
//!
//! [initial]
//! kind = "random"              # constant | mode | random | file
//! seed = 0
//! mean = 0.0
//! amplitude = 0.5
//! decay = 1.0
//! max_mode = 8
//!
//! [diagnostics]
//! eps_deg = 1e-3
//! tol_ineq = 1e-3
//! strict = false
//! source_bound = true
//! observe_every = 1
//!
//! [output]
//! snapshots = 50               # evenly spaced in (0, t_end]
//! # snapshot_times = [0.5, 1.0] # overrides `snapshots`
//! ```
//!
//! The other initial kinds take `value` (constant), `mean`, `amplitude` and
//! `wavevector` (mode: `mean + amplitude·cos(ξ·x)`), or `path` (file: a
//! snapshot written by this crate).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Scheme, StepperConfig};
use crate::model::ModelParams;
use crate::spectral::{DomainSpec, DEFAULT_DEALIAS_FRACTION};

pub const OUTPUT_ROOT_ENV: &str = "CHDM_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    Mode {
        #[serde(default)]
        mean: f64,
        amplitude: f64,
        wavevector: Vec<i64>,
    },
    /// Random trigonometric polynomial: each mode with `|ξ_a| <= max_mode` gets
    /// uniform coefficients scaled by `(1 + |ξ|²)^{-decay}`, then the fluctuation
    /// is rescaled to RMS `amplitude`. Draws come from ChaCha8 seeded with `seed`.
    Random {
        seed: u64,
        #[serde(default)]
        mean: f64,
        amplitude: f64,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_max_mode")]
        max_mode: usize,
    },
    File {
        path: PathBuf,
    },
}

fn default_decay() -> f64 {
    1.0
}

fn default_max_mode() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub eps_deg: f64,
    pub tol_ineq: f64,
    pub strict: bool,
    pub source_bound: bool,
    pub observe_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotSchedule {
    Count(usize),
    Times(Vec<f64>),
}

impl SnapshotSchedule {
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        match self {
            SnapshotSchedule::Count(n) => (1..=*n).map(|i| t_end * i as f64 / *n as f64).collect(),
            SnapshotSchedule::Times(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub model: ModelParams,
    pub stepper: StepperConfig,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub diagnostics: DiagnosticsConfig,
    pub snapshots: SnapshotSchedule,
    /// `None` means the environment default.
    pub output_dir: Option<PathBuf>,
    pub run_id: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        // parse_config("") fills every default
        RunConfig::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn output_root(&self) -> PathBuf {
        match &self.output_dir {
            Some(p) => p.clone(),
            None => std::env::var_os(OUTPUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs")),
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_root().join(&self.run_id)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.times(self.t_end)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    /// Resolves a relative initial-condition file against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let InitialCondition::File { path } = &mut self.initial {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let raw = self.to_raw();
        RunConfig::from_raw(raw).map(|_| ())
    }

    fn to_raw(&self) -> RawConfig {
        let d = self.diagnostics.clone();
        let (snapshots, snapshot_times) = match &self.snapshots {
            SnapshotSchedule::Count(n) => (Some(*n), None),
            SnapshotSchedule::Times(t) => (None, Some(t.clone())),
        };
        RawConfig {
            t_end: Some(self.t_end),
            output_dir: self.output_dir.clone(),
            run_id: Some(self.run_id.clone()),
            domain: RawDomain {
                dimension: Some(self.domain.dimension),
                points_per_axis: Some(self.domain.points_per_axis),
                dealias_fraction: Some(self.domain.dealias_fraction),
            },
            model: RawModel {
                gamma: Some(self.model.gamma),
                m: Some(self.model.m),
                beta: Some(self.model.beta.clone()),
                phi_coeffs: Some(self.model.phi_coeffs.clone()),
                psi_coeffs: Some(self.model.psi_coeffs.clone()),
                theta: Some(self.model.theta),
                signed_power: Some(self.model.signed_power),
            },
            stepper: RawStepper {
                scheme: Some(self.stepper.scheme),
                dt: None,
                dt_min: Some(self.stepper.dt_min),
                dt_max: Some(self.stepper.dt_max),
                stabilization: Some(self.stepper.stabilization),
                safety: Some(self.stepper.safety),
                error_tol: Some(self.stepper.error_tol),
            },
            initial: Some(self.initial.clone()),
            diagnostics: RawDiagnostics {
                eps_deg: Some(d.eps_deg),
                tol_ineq: Some(d.tol_ineq),
                strict: Some(d.strict),
                source_bound: Some(d.source_bound),
                observe_every: Some(d.observe_every),
            },
            output: RawOutput {
                snapshots,
                snapshot_times,
            },
        }
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let domain = from_domain(&raw.domain)?;
        let dim = domain.dimension;

        let m = &raw.model;
        let model = ModelParams {
            gamma: m.gamma.unwrap_or(0.01),
            m: m.m.unwrap_or(1.0),
            beta: m.beta.clone().unwrap_or_else(|| vec![0.0; dim]),
            phi_coeffs: m.phi_coeffs.clone().unwrap_or_else(|| vec![-1.0, 0.0, 1.0]),
            psi_coeffs: m.psi_coeffs.clone().unwrap_or_else(|| vec![0.0, 0.5]),
            theta: m.theta.unwrap_or(0.01),
            signed_power: m.signed_power.unwrap_or(false),
        };
        model.validate(dim).map_err(|e| prefix("model", e))?;

        let s = &raw.stepper;
        if s.dt.is_some() && (s.dt_min.is_some() || s.dt_max.is_some()) {
            return Err(Error::validation("stepper.dt", "give either dt or dt_min/dt_max"));
        }
        let dt = s.dt.unwrap_or(1e-3);
        let stepper = StepperConfig {
            scheme: s.scheme.unwrap_or(Scheme::ImexBdf2),
            stabilization: s.stabilization.unwrap_or(1.0),
            dt_min: s.dt_min.unwrap_or(dt),
            dt_max: s.dt_max.unwrap_or(s.dt_min.unwrap_or(dt)),
            safety: s.safety.unwrap_or(0.9),
            error_tol: s.error_tol.unwrap_or(1e-4),
        };
        stepper.validate().map_err(|e| prefix("stepper", e))?;

        let t_end = raw.t_end.unwrap_or(1.0);
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::validation("t_end", format!("must be > 0, got {t_end}")));
        }

        let initial = raw.initial.clone().unwrap_or(InitialCondition::Random {
            seed: 0,
            mean: 0.0,
            amplitude: 0.5,
            decay: default_decay(),
            max_mode: default_max_mode(),
        });
        check_initial(&initial, &domain)?;

        let r = &raw.diagnostics;
        let diagnostics = DiagnosticsConfig {
            eps_deg: r.eps_deg.unwrap_or(crate::diagnostics::DEFAULT_EPS_DEG),
            tol_ineq: r.tol_ineq.unwrap_or(crate::diagnostics::DEFAULT_TOL_INEQ),
            strict: r.strict.unwrap_or(false),
            source_bound: r.source_bound.unwrap_or(true),
            observe_every: r.observe_every.unwrap_or(1),
        };
        if !(diagnostics.eps_deg > 0.0 && diagnostics.eps_deg.is_finite()) {
            return Err(Error::validation("diagnostics.eps_deg", "must be > 0"));
        }
        if !(diagnostics.tol_ineq >= 0.0 && diagnostics.tol_ineq.is_finite()) {
            return Err(Error::validation("diagnostics.tol_ineq", "must be >= 0"));
        }
        if diagnostics.source_bound && model.theta == 0.0 {
            return Err(Error::validation(
                "model.theta",
                "theta = 0 is incompatible with diagnostics.source_bound = true",
            ));
        }

        let snapshots = match (&raw.output.snapshots, &raw.output.snapshot_times) {
            (Some(_), Some(_)) => {
                return Err(Error::validation("output.snapshot_times", "give either snapshots or snapshot_times"))
            }
            (_, Some(times)) => {
                let increasing = times.windows(2).all(|w| w[0] < w[1]);
                if times.is_empty() || !increasing || times.iter().any(|&t| !(t > 0.0 && t <= t_end)) {
                    return Err(Error::validation(
                        "output.snapshot_times",
                        "must be strictly increasing values in (0, t_end]",
                    ));
                }
                SnapshotSchedule::Times(times.clone())
            }
            (n, None) => {
                let n = n.unwrap_or(50);
                if n == 0 {
                    return Err(Error::validation("output.snapshots", "must be >= 1"));
                }
                SnapshotSchedule::Count(n)
            }
        };

        let run_id = raw.run_id.clone().unwrap_or_else(|| "run".to_string());
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == "." || run_id == ".." {
            return Err(Error::validation("run_id", "must be a plain directory name"));
        }

        Ok(RunConfig {
            domain,
            model,
            stepper,
            t_end,
            initial,
            diagnostics,
            snapshots,
            output_dir: raw.output_dir.clone(),
            run_id,
        })
    }
}

fn from_domain(r: &RawDomain) -> Result<DomainSpec> {
    let d = DomainSpec {
        dimension: r.dimension.unwrap_or(1),
        points_per_axis: r.points_per_axis.unwrap_or(128),
        dealias_fraction: r.dealias_fraction.unwrap_or(DEFAULT_DEALIAS_FRACTION),
    };
    d.validate().map_err(|e| match e {
        Error::InvalidDomain(msg) => {
            let key = ["dimension", "points_per_axis", "dealias_fraction"]
                .into_iter()
                .find(|k| msg.starts_with(k))
                .unwrap_or("dimension");
            Error::validation(&format!("domain.{key}"), msg)
        }
        other => other,
    })?;
    Ok(d)
}

fn check_initial(ic: &InitialCondition, domain: &DomainSpec) -> Result<()> {
    match ic {
        InitialCondition::Constant { value } if !value.is_finite() => {
            Err(Error::validation("initial.value", "must be finite"))
        }
        InitialCondition::Mode {
            mean,
            amplitude,
            wavevector,
        } => {
            if wavevector.len() != domain.dimension {
                return Err(Error::validation(
                    "initial.wavevector",
                    format!("needs {} components", domain.dimension),
                ));
            }
            let c = domain.dealias_cutoff() as i64;
            if wavevector.iter().any(|k| k.abs() > c) {
                return Err(Error::validation(
                    "initial.wavevector",
                    format!("components must satisfy |k| <= {c} (dealiasing cutoff)"),
                ));
            }
            if !(mean.is_finite() && amplitude.is_finite()) {
                return Err(Error::validation("initial.amplitude", "must be finite"));
            }
            Ok(())
        }
        InitialCondition::Random {
            mean,
            amplitude,
            decay,
            max_mode,
            ..
        } => {
            if *max_mode == 0 || *max_mode > domain.dealias_cutoff() {
                return Err(Error::validation(
                    "initial.max_mode",
                    format!("must lie in 1..={}", domain.dealias_cutoff()),
                ));
            }
            if !(mean.is_finite() && *amplitude >= 0.0 && amplitude.is_finite() && decay.is_finite()) {
                return Err(Error::validation("initial.amplitude", "mean, amplitude, decay must be finite, amplitude >= 0"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::validation(&format!("{section}.{name}"), reason),
        other => other,
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    RunConfig::from_raw(raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Parse {
        line,
        message: e.message().to_string(),
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_id: Option<String>,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    stepper: RawStepper,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<InitialCondition>,
    #[serde(default)]
    diagnostics: RawDiagnostics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    dimension: Option<usize>,
    points_per_axis: Option<usize>,
    dealias_fraction: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    gamma: Option<f64>,
    m: Option<f64>,
    beta: Option<Vec<f64>>,
    phi_coeffs: Option<Vec<f64>>,
    psi_coeffs: Option<Vec<f64>>,
    theta: Option<f64>,
    signed_power: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    stabilization: Option<f64>,
    safety: Option<f64>,
    error_tol: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    eps_deg: Option<f64>,
    tol_ineq: Option<f64>,
    strict: Option<bool>,
    source_bound: Option<bool>,
    observe_every: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_times: Option<Vec<f64>>,
}
