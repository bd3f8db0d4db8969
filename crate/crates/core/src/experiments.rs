//! Run driver, persistence and the scripted studies built on it.
//!
//! Every run directory has the layout
//!
//! ```text
//! <run-dir>/config.toml        the resolved configuration (reruns reproduce the CSV bit for bit)
//! <run-dir>/diagnostics.csv    one row per record
//! <run-dir>/snapshots/NNNNN.bin  initial state and every snapshot time
//! <run-dir>/summary.toml       status, counters and invariant checks
//! ```
//!
//! Studies put one such directory per member run under their experiment root.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InitialCondition, RunConfig};
use crate::diagnostics::{self, DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::integrator::{self, Forcing, RunOptions, RunStats, Scheme, SolverState, StepperConfig};
use crate::model::{self, ModelParams};
use crate::snapshot;
use crate::spectral::{inverse_unchecked, DomainSpec, ModeKind, PhysicalField, RealBasis, SpectralField};

/// Least-squares slope of `y` against `x`; `None` for fewer than two points or constant `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Samples the configured initial condition on `domain`.
pub fn initial_field(ic: &InitialCondition, domain: &DomainSpec) -> Result<PhysicalField> {
    match ic {
        InitialCondition::Constant { value } => Ok(PhysicalField::constant(*domain, *value)),
        InitialCondition::Mode {
            mean,
            amplitude,
            wavevector,
        } => {
            let k = [wavevector[0] as f64, wavevector.get(1).copied().unwrap_or(0) as f64];
            Ok(PhysicalField::from_fn(*domain, |x| mean + amplitude * (k[0] * x[0] + k[1] * x[1]).cos()))
        }
        InitialCondition::Random {
            seed,
            mean,
            amplitude,
            decay,
            max_mode,
        } => {
            let basis = RealBasis::new(domain.dimension, *max_mode);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut coords: Vec<f64> = basis
                .modes()
                .iter()
                .map(|&(xi, kind)| {
                    if kind == ModeKind::Constant {
                        return 0.0;
                    }
                    let k2 = (xi[0] * xi[0] + xi[1] * xi[1]) as f64;
                    rng.random_range(-1.0..1.0) * (1.0 + k2).powf(-decay)
                })
                .collect();
            // orthonormal coordinates: RMS over the box is |c| / sqrt(|Ω|)
            let rms = coords.iter().map(|c| c * c).sum::<f64>().sqrt() / domain.volume().sqrt();
            if rms > 0.0 {
                coords.iter_mut().for_each(|c| *c *= amplitude / rms);
            }
            coords[0] = mean * domain.volume().sqrt();
            Ok(inverse_unchecked(&basis.to_spectral(&coords, *domain)?))
        }
        InitialCondition::File { path } => {
            let snap = snapshot::load(path)?;
            let d = snap.field.domain();
            if d.dimension != domain.dimension || d.points_per_axis != domain.points_per_axis {
                return Err(Error::validation(
                    "initial.path",
                    format!(
                        "snapshot grid {}^{} does not match the configured domain",
                        d.points_per_axis, d.dimension
                    ),
                ));
            }
            PhysicalField::new(*domain, snap.field.into_values())
        }
    }
}

/// Everything a run produced, including a partial record on failure.
#[derive(Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub records: Vec<DiagnosticsRecord>,
    /// Initial state followed by every snapshot time reached.
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: Option<SolverState>,
    pub stats: RunStats,
    pub violations: Vec<String>,
    pub error: Option<Error>,
}

impl RunOutput {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records.first().map_or(0.0, |r| r.mass);
        self.records.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max)
    }
}

fn initial_dt(config: &RunConfig, u0: &PhysicalField) -> f64 {
    let s = &config.stepper;
    if s.is_adaptive() {
        s.clamp(integrator::default_dt(&config.domain, &config.model, s.stabilization, u0))
    } else {
        s.dt_min
    }
}

/// Runs one configuration with diagnostics. Setup errors are returned; errors
/// during time stepping are kept in [`RunOutput::error`] with the partial output.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    execute_with(config, None)
}

pub fn execute_with(config: &RunConfig, forcing: Option<&dyn Forcing>) -> Result<RunOutput> {
    config.validate()?;
    let u0 = initial_field(&config.initial, &config.domain)?;
    let state = integrator::initial_state(&u0, config.domain.dealias_cutoff(), initial_dt(config, &u0))?;

    let mut rec = Recorder::new(&config.model);
    rec.eps_deg = config.diagnostics.eps_deg;
    rec.tol_ineq = config.diagnostics.tol_ineq;
    rec.strict = config.diagnostics.strict;
    rec.source_bound = config.diagnostics.source_bound;
    rec.keep_snapshots = true;
    let options = RunOptions {
        stop_times: config.snapshot_times(),
        observe_every: config.diagnostics.observe_every,
        forcing,
    };
    let result = integrator::run(state, &config.model, &config.stepper, config.t_end, &options, &mut rec);
    let (final_state, stats, error) = match result {
        Ok((s, stats)) => (Some(s), stats, None),
        Err(e) => (None, RunStats::default(), Some(e)),
    };
    if let Some(e) = &error {
        log::error!("run {} failed: {e}", config.run_id);
    }
    Ok(RunOutput {
        config: config.clone(),
        records: rec.records,
        snapshots: rec.snapshots,
        final_state,
        stats,
        violations: rec.violations,
        error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub t_final: f64,
    pub records: usize,
    pub snapshots: usize,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub controller_warnings: u64,
    pub mass_drift: f64,
    pub inequality_violations: usize,
}

impl RunSummary {
    pub fn of(out: &RunOutput) -> Self {
        RunSummary {
            run_id: out.config.run_id.clone(),
            status: if out.succeeded() { "ok" } else { "failed" }.into(),
            failure: out.error.as_ref().map(|e| e.to_string()),
            t_final: out.records.last().map_or(0.0, |r| r.t),
            records: out.records.len(),
            snapshots: out.snapshots.len(),
            accepted_steps: out.stats.accepted,
            rejected_steps: out.stats.rejected,
            controller_warnings: out.stats.controller_warnings,
            mass_drift: out.mass_drift(),
            inequality_violations: out.violations.len(),
        }
    }
}

pub fn snapshot_path(run_dir: &Path, index: usize) -> PathBuf {
    run_dir.join("snapshots").join(format!("{index:05}.bin"))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_toml(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::validation("summary", e.to_string()))?;
    write_text(path, &text)
}

/// Writes config, diagnostics, snapshots and summary into `run_dir`.
pub fn persist(run_dir: &Path, out: &RunOutput) -> Result<()> {
    create_dir(&run_dir.join("snapshots"))?;
    write_text(&run_dir.join("config.toml"), &out.config.to_toml())?;
    diagnostics::save_csv(&run_dir.join("diagnostics.csv"), &out.records)?;
    for (i, (t, u)) in out.snapshots.iter().enumerate() {
        snapshot::save(&snapshot_path(run_dir, i), *t, &inverse_unchecked(u))?;
    }
    write_toml(&run_dir.join("summary.toml"), &RunSummary::of(out))
}

/// Runs and persists into `config.run_dir()`.
pub fn execute_and_persist(config: &RunConfig) -> Result<RunOutput> {
    let out = execute(config)?;
    persist(&config.run_dir(), &out)?;
    Ok(out)
}

/// Executes independent runs in parallel, in input order. Each config's
/// `output_dir` is replaced by `root` when given.
pub fn run_ensemble(configs: &[RunConfig], root: Option<&Path>) -> Result<Vec<RunOutput>> {
    configs
        .par_iter()
        .map(|c| {
            let mut c = c.clone();
            if let Some(root) = root {
                c.output_dir = Some(root.to_path_buf());
            }
            let out = execute(&c)?;
            if root.is_some() {
                persist(&c.run_dir(), &out)?;
            }
            Ok(out)
        })
        .collect()
}

/// Outcome of the invariant checks on a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub mass_drift: f64,
    pub mass_tol: f64,
    pub mass_ok: bool,
    /// Record times where the energy rose by more than `1e-12·(1 + |E|)`;
    /// only checked when β = 0.
    pub energy_increases: Vec<f64>,
    pub inequality_violations: Vec<String>,
}

impl VerifyReport {
    /// Whether the energy and inequality checks passed (mass is reported separately).
    pub fn is_clean(&self) -> bool {
        self.energy_increases.is_empty() && self.inequality_violations.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "mass drift {:.3e} (tol {:.3e}): {}\n",
            self.mass_drift,
            self.mass_tol,
            if self.mass_ok { "ok" } else { "VIOLATED" }
        );
        s += &format!("energy increases: {}\n", self.energy_increases.len());
        s += &format!("inequality violations: {}\n", self.inequality_violations.len());
        for v in &self.inequality_violations {
            s += &format!("  {v}\n");
        }
        s
    }
}

pub fn verify(out: &RunOutput) -> VerifyReport {
    let m0 = out.records.first().map_or(0.0, |r| r.mass);
    let mass_tol = 1e-10 * (1.0 + m0.abs());
    let mass_drift = out.mass_drift();
    let energy_increases = if out.config.model.beta_norm_sq() == 0.0 {
        out.records
            .windows(2)
            .filter(|w| w[1].energy - w[0].energy > 1e-12 * (1.0 + w[0].energy.abs()))
            .map(|w| w[1].t)
            .collect()
    } else {
        Vec::new()
    };
    VerifyReport {
        mass_drift,
        mass_tol,
        mass_ok: mass_drift <= mass_tol,
        energy_increases,
        inequality_violations: out.violations.clone(),
    }
}

/// `(∫_0^T ‖a - b‖²_{L²} dt)^{1/2}` by the trapezoid rule over matching snapshots.
pub fn space_time_l2(a: &[(f64, SpectralField)], b: &[(f64, SpectralField)]) -> f64 {
    if a.len() != b.len() || a.len() < 2 {
        return f64::NAN;
    }
    let sq: Vec<f64> = a.iter().zip(b).map(|((_, u), (_, v))| u.sub(v).l2_norm().powi(2)).collect();
    let mut acc = 0.0;
    for k in 1..a.len() {
        if a[k].0 != b[k].0 {
            return f64::NAN;
        }
        acc += 0.5 * (a[k].0 - a[k - 1].0) * (sq[k] + sq[k - 1]);
    }
    acc.sqrt()
}

#[derive(Debug)]
pub struct ContinuationResult {
    pub theta_sequence: Vec<f64>,
    /// `d_i = ‖u_{θ_i} - u_{θ_{i+1}}‖_{L²(Ω×(0,T))}`; NaN when either run failed.
    pub pairwise_l2: Vec<f64>,
    pub final_fields: Vec<Option<SpectralField>>,
    /// `(t, degeneracy_measure)` per θ.
    pub degeneracy_traces: Vec<Vec<(f64, f64)>>,
    pub failures: Vec<Option<String>>,
}

impl ContinuationResult {
    /// Whether `d_1 > d_2 > … > d_count`.
    pub fn decreasing_through(&self, count: usize) -> bool {
        let d = &self.pairwise_l2[..count.min(self.pairwise_l2.len())];
        d.iter().all(|v| v.is_finite()) && d.windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Serialize)]
struct ContinuationSummary<'a> {
    theta_sequence: &'a [f64],
    pairwise_l2: &'a [f64],
    failed_runs: Vec<String>,
}

/// Runs the base configuration once per θ (non-increasing, positive) and
/// measures consecutive space-time L² differences.
pub fn theta_continuation(base: &RunConfig, thetas: &[f64], root: Option<&Path>) -> Result<ContinuationResult> {
    if thetas.is_empty() || thetas.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::param("theta_sequence", "values must be finite and > 0"));
    }
    if thetas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("theta_sequence", "must be non-increasing"));
    }
    let configs: Vec<RunConfig> = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut c = base.clone();
            c.model.theta = theta;
            c.run_id = format!("theta_{:02}", i + 1);
            c
        })
        .collect();
    let outs = run_ensemble(&configs, root)?;

    let pairwise_l2 = outs
        .windows(2)
        .map(|w| {
            if w[0].succeeded() && w[1].succeeded() {
                space_time_l2(&w[0].snapshots, &w[1].snapshots)
            } else {
                f64::NAN
            }
        })
        .collect::<Vec<_>>();
    let degeneracy_traces: Vec<Vec<(f64, f64)>> = outs
        .iter()
        .map(|o| o.records.iter().map(|r| (r.t, r.degeneracy_measure)).collect())
        .collect();
    let result = ContinuationResult {
        theta_sequence: thetas.to_vec(),
        pairwise_l2,
        final_fields: outs.iter().map(|o| o.final_state.as_ref().map(|s| s.u.clone())).collect(),
        degeneracy_traces,
        failures: outs.iter().map(|o| o.error.as_ref().map(|e| e.to_string())).collect(),
    };

    if let Some(root) = root {
        for (c, trace) in configs.iter().zip(&result.degeneracy_traces) {
            let mut text = String::from("t,degeneracy_measure\n");
            for (t, m) in trace {
                text.push_str(&format!("{t:.16e},{m:.16e}\n"));
            }
            write_text(&root.join(&c.run_id).join("degeneracy.csv"), &text)?;
        }
        let summary = ContinuationSummary {
            theta_sequence: &result.theta_sequence,
            pairwise_l2: &result.pairwise_l2,
            failed_runs: configs
                .iter()
                .zip(&result.failures)
                .filter(|(_, f)| f.is_some())
                .map(|(c, _)| c.run_id.clone())
                .collect(),
        };
        write_toml(&root.join("continuation.toml"), &summary)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTable {
    pub n_list: Vec<usize>,
    /// Max over snapshot times of the L² distance to the finest run, one per
    /// non-finest resolution.
    pub errors: Vec<f64>,
}

/// Runs the base configuration on every grid size and compares each with the finest.
pub fn n_refinement(base: &RunConfig, n_list: &[usize], root: Option<&Path>) -> Result<RefinementTable> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list.iter().any(|n| !n.is_power_of_two()) {
        return Err(Error::param("n_list", "must be increasing powers of two"));
    }
    let configs: Vec<RunConfig> = n_list
        .iter()
        .map(|&n| {
            let mut c = base.clone();
            c.domain.points_per_axis = n;
            c.run_id = format!("n_{n:04}");
            c
        })
        .collect();
    let outs = run_ensemble(&configs, root)?;
    if let Some(failed) = outs.iter().find(|o| !o.succeeded()) {
        return Err(Error::InvariantViolation {
            t: failed.records.last().map_or(0.0, |r| r.t),
            what: format!("refinement run {} failed", failed.config.run_id),
        });
    }
    let mut errors = Vec::new();
    if let Some((finest, rest)) = outs.split_last() {
        let fine_domain = finest.config.domain;
        for o in rest {
            let e = o
                .snapshots
                .iter()
                .zip(&finest.snapshots)
                .map(|((_, u), (_, v))| u.resample(fine_domain).map(|u| u.sub(v).l2_norm()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            errors.push(e);
        }
    }
    let table = RefinementTable {
        n_list: n_list.to_vec(),
        errors,
    };
    if let Some(root) = root {
        write_toml(&root.join("refinement.toml"), &table)?;
    }
    Ok(table)
}

/// Closed-form manufactured solutions, all functions of `x_0` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmsCase {
    /// `0.5 + 0.1 cos x`
    Stationary,
    /// `e^{-t} (0.2 + 0.1 cos x)`, bounded away from zero on `[0, 1]`
    Decaying,
    /// `e^{-t} · 0.5 cos x`, crosses zero and so exercises the θ-branch
    ZeroCrossing,
}

impl MmsCase {
    /// `(mean, cos-amplitude, decay rate)`.
    fn shape(self) -> (f64, f64, f64) {
        match self {
            MmsCase::Stationary => (0.5, 0.1, 0.0),
            MmsCase::Decaying => (0.2, 0.1, 1.0),
            MmsCase::ZeroCrossing => (0.0, 0.5, 1.0),
        }
    }

    fn field(domain: &DomainSpec, mean: f64, amp: f64) -> SpectralField {
        use num_complex::Complex64;
        let mut modes = vec![([0, 0], Complex64::new(mean, 0.0))];
        if amp != 0.0 {
            modes.push(([1, 0], Complex64::new(0.5 * amp, 0.0)));
        }
        SpectralField::from_modes(*domain, &modes)
    }

    pub fn exact(self, t: f64, domain: &DomainSpec) -> SpectralField {
        let (mean, amp, rate) = self.shape();
        let s = (-rate * t).exp();
        Self::field(domain, s * mean, s * amp)
    }

    pub fn time_derivative(self, t: f64, domain: &DomainSpec) -> SpectralField {
        let (_, _, rate) = self.shape();
        self.exact(t, domain).scale(-rate)
    }
}

/// `f = ∂_t u* - rhs(u*)` from the solver's own operators.
pub struct MmsForcing<'a> {
    pub case: MmsCase,
    pub params: &'a ModelParams,
}

impl Forcing for MmsForcing<'_> {
    fn eval(&self, t: f64, domain: &DomainSpec) -> Result<SpectralField> {
        let u = self.case.exact(t, domain);
        Ok(self.case.time_derivative(t, domain).sub(&model::rhs(&u, self.params)?))
    }
}

/// L² norm of `∂_t u* - rhs(u*) - f` at time `t`.
pub fn mms_residual(case: MmsCase, params: &ModelParams, domain: &DomainSpec, t: f64) -> Result<f64> {
    let forcing = MmsForcing { case, params };
    let u = case.exact(t, domain);
    let r = case
        .time_derivative(t, domain)
        .sub(&model::rhs(&u, params)?)
        .sub(&forcing.eval(t, domain)?);
    Ok(r.l2_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsResult {
    pub dt_list: Vec<f64>,
    /// `‖u(T) - u*(T)‖_{L²}` per dt.
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log dt.
    pub order: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn mms_verify(
    case: MmsCase,
    params: &ModelParams,
    domain: &DomainSpec,
    scheme: Scheme,
    stabilization: f64,
    dt_list: &[f64],
    t_end: f64,
) -> Result<MmsResult> {
    let residual = mms_residual(case, params, domain, 0.0)?;
    if residual > 1e-10 {
        return Err(Error::InvariantViolation {
            t: 0.0,
            what: format!("manufactured residual {residual:.3e}"),
        });
    }
    let forcing = MmsForcing { case, params };
    let errors = dt_list
        .par_iter()
        .map(|&dt| {
            let u0 = inverse_unchecked(&case.exact(0.0, domain));
            let state = integrator::initial_state(&u0, domain.dealias_cutoff(), dt)?;
            let config = StepperConfig {
                stabilization,
                ..StepperConfig::fixed(scheme, dt)
            };
            let options = RunOptions {
                forcing: Some(&forcing),
                ..Default::default()
            };
            let mut ignore = |_: &SolverState, _| Ok(());
            let (end, _) = integrator::run(state, params, &config, t_end, &options, &mut ignore)?;
            Ok(end.u.sub(&case.exact(t_end, domain)).l2_norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = dt_list.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(MmsResult {
        dt_list: dt_list.to_vec(),
        errors,
        order: least_squares_slope(&lx, &ly),
    })
}

/// One ensemble member for the Gronwall fit.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub records: Vec<DiagnosticsRecord>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallFit {
    /// Least-squares rate, clamped at zero.
    pub c1: f64,
    /// Supremum of the pointwise rates, clamped at zero.
    pub c1_sup: f64,
    pub c3: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub note: Option<String>,
}

/// Fits `log((E(t) + C3)/(E(0) + C3)) ≈ C1 |β|² (t - t₀)/2` through the origin
/// over all members with β ≠ 0. `C3` is the smallest shift keeping `E + C3`
/// positive across the ensemble.
pub fn fit_gronwall_constants(ensemble: &[EnergyTrace]) -> Result<GronwallFit> {
    if ensemble.len() < 2 {
        return Err(Error::param("ensemble", "needs at least two runs"));
    }
    let min_e = ensemble
        .iter()
        .flat_map(|r| r.records.iter().map(|x| x.energy))
        .fold(f64::INFINITY, f64::min);
    let c3 = if min_e > 0.0 {
        0.0
    } else {
        -min_e + 1e-3 * (1.0 + min_e.abs())
    };

    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut pairs = Vec::new();
    let mut c1_sup = 0.0_f64;
    for run in ensemble {
        let b2: f64 = run.beta.iter().map(|b| b * b).sum();
        let Some(first) = run.records.first() else { continue };
        if b2 == 0.0 {
            continue;
        }
        for r in &run.records[1..] {
            let s = 0.5 * b2 * (r.t - first.t);
            let y = ((r.energy + c3) / (first.energy + c3)).ln();
            if s > 0.0 && y.is_finite() {
                sxy += s * y;
                sxx += s * s;
                pairs.push((s, y));
                c1_sup = c1_sup.max(y / s);
            }
        }
    }
    if sxx == 0.0 {
        return Ok(GronwallFit {
            c1: 0.0,
            c1_sup: 0.0,
            c3,
            residual: 0.0,
            note: Some("no run with beta != 0 and t > t0; C1 = 0".into()),
        });
    }
    let slope = sxy / sxx;
    let residual = (pairs.iter().map(|(s, y)| (y - slope * s).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    let note = (slope <= 0.0).then(|| format!("non-increasing energy (slope {slope:.3e}); C1 = 0"));
    Ok(GronwallFit {
        c1: slope.max(0.0),
        c1_sup,
        c3,
        residual,
        note,
    })
}
