//! Stabilized IMEX time stepping of the Galerkin system in coefficient space.
//!
//! Each step treats the constant-coefficient hyperdiffusion `-γA Δ²u` implicitly
//! and everything else explicitly:
//!
//! ```text
//! BE:    (u' - u)/h = -γA Δ²u' + [R(u) + γA Δ²u] + f(t+h)
//! BDF2:  α0 u' - α1 u + α2 u⁻ = h(-γA Δ²u' + (1+ω) N(u) - ω N(u⁻) + f(t+h)),
//!        N(v) = R(v) + γA Δ²v,  ω = h/h⁻,
//!        α0 = (1+2ω)/(1+ω), α1 = 1+ω, α2 = ω²/(1+ω)
//! ```
//!
//! where `R` is [`crate::model::rhs`] and `A = max(stabilization, max_x M_θ(u))`
//! is refreshed every step. The implicit solve is a per-mode division.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs_with_mobility_max, ModelParams};
use crate::spectral::{forward, inverse_unchecked, DomainSpec, PhysicalField, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexBe,
    ImexBdf2,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::ImexBe => 1,
            Scheme::ImexBdf2 => 2,
        }
    }
}

fn default_stabilization() -> f64 {
    1.0
}

fn default_safety() -> f64 {
    0.9
}

fn default_error_tol() -> f64 {
    1e-4
}

/// Step-size and scheme settings. `dt_min == dt_max` selects fixed stepping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Lower bound for the per-step stabilization coefficient `A`.
    #[serde(default = "default_stabilization")]
    pub stabilization: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_error_tol")]
    pub error_tol: f64,
}

impl StepperConfig {
    pub fn fixed(scheme: Scheme, dt: f64) -> Self {
        StepperConfig {
            scheme,
            stabilization: 1.0,
            dt_min: dt,
            dt_max: dt,
            safety: 0.9,
            error_tol: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stabilization > 0.0 && self.stabilization.is_finite()) {
            return Err(Error::param("stabilization", "must be > 0"));
        }
        if !(self.dt_min > 0.0 && self.dt_min.is_finite()) {
            return Err(Error::param("dt_min", "must be > 0"));
        }
        if !(self.dt_max.is_finite() && self.dt_max >= self.dt_min) {
            return Err(Error::param("dt_max", "must be finite and >= dt_min"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::param("safety", "must lie in (0, 1]"));
        }
        if !(self.error_tol > 0.0 && self.error_tol.is_finite()) {
            return Err(Error::param("error_tol", "must be > 0"));
        }
        Ok(())
    }

    pub fn is_adaptive(&self) -> bool {
        self.dt_min < self.dt_max
    }

    pub fn clamp(&self, dt: f64) -> f64 {
        dt.clamp(self.dt_min, self.dt_max)
    }
}

/// Previous time level kept for two-step schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub u: SpectralField,
    pub rhs: SpectralField,
    pub h: f64,
}

/// Solution coefficients at time `t`, plus the proposed next step size.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: SpectralField,
    pub dt: f64,
    pub step_count: u64,
    pub history: Option<History>,
}

impl SolverState {
    pub fn domain(&self) -> &DomainSpec {
        self.u.domain()
    }

    pub fn physical(&self) -> PhysicalField {
        inverse_unchecked(&self.u)
    }
}

/// Projects initial data onto the modes with `|ξ_a| <= cutoff`.
pub fn initial_state(u0: &PhysicalField, cutoff: usize, dt: f64) -> Result<SolverState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let u = forward(u0)?.project(cutoff);
    Ok(SolverState {
        t: 0.0,
        u,
        dt,
        step_count: 0,
        history: None,
    })
}

/// `0.1 Δx² / (γA)` with `A = max(stabilization, max M_θ(u0))`.
pub fn default_dt(domain: &DomainSpec, params: &ModelParams, stabilization: f64, u0: &PhysicalField) -> f64 {
    let a = u0
        .values()
        .iter()
        .fold(stabilization, |acc, &v| acc.max(params.effective_mobility(v)));
    0.1 * domain.spacing().powi(2) / (params.gamma * a)
}

/// Time-dependent source added to the right-hand side.
pub trait Forcing: Sync {
    fn eval(&self, t: f64, domain: &DomainSpec) -> Result<SpectralField>;
}

fn blow_up(state: &SolverState, reason: String) -> Error {
    Error::BlowUp {
        t: state.t,
        reason,
        snapshot: Box::new(state.clone()),
    }
}

fn check_blow_up(prev: &SolverState, next: &SpectralField) -> Result<()> {
    let bad = next.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite());
    if bad {
        return Err(blow_up(prev, "non-finite coefficients".into()));
    }
    let max = inverse_unchecked(next).max_abs();
    if max.is_nan() || max > crate::model::BLOWUP_THRESHOLD {
        return Err(blow_up(prev, format!("max |u| = {max:.3e}")));
    }
    Ok(())
}

/// One step of size `state.dt` (clamped to the configured bounds).
pub fn step(state: &SolverState, params: &ModelParams, config: &StepperConfig) -> Result<SolverState> {
    let h = config.clamp(state.dt);
    step_sized(state, params, config, h, None)
}

/// One step of exactly `h`, with an optional forcing evaluated at `t + h`.
pub fn step_sized(
    state: &SolverState,
    params: &ModelParams,
    config: &StepperConfig,
    h: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<SolverState> {
    let (r, max_mobility) = rhs_with_mobility_max(&state.u, params).map_err(|e| match e {
        Error::Overflow { context, max_abs } => blow_up(state, format!("{context}: max |u| = {max_abs:.3e}")),
        other => other,
    })?;
    let a = config.stabilization.max(max_mobility);
    let ga = params.gamma * a;
    let force = forcing.map(|f| f.eval(state.t + h, state.domain())).transpose()?;

    let next = match (config.scheme, &state.history) {
        (Scheme::ImexBdf2, Some(prev)) => {
            let w = h / prev.h;
            let a0 = (1.0 + 2.0 * w) / (1.0 + w);
            let a1 = 1.0 + w;
            let a2 = w * w / (1.0 + w);
            let n_now = r.add(&state.u.bilaplacian().scale(ga));
            let n_prev = prev.rhs.add(&prev.u.bilaplacian().scale(ga));
            let mut explicit = n_now.scale(1.0 + w).axpy(-w, &n_prev);
            if let Some(f) = &force {
                explicit = explicit.add(f);
            }
            let numer = state.u.scale(a1).axpy(-a2, &prev.u).axpy(h, &explicit);
            solve_diagonal(&numer, |k2| a0 + h * ga * k2 * k2)
        }
        _ => {
            let mut explicit = r.add(&state.u.bilaplacian().scale(ga));
            if let Some(f) = &force {
                explicit = explicit.add(f);
            }
            let numer = state.u.axpy(h, &explicit);
            solve_diagonal(&numer, |k2| 1.0 + h * ga * k2 * k2)
        }
    }
    .dealias();

    check_blow_up(state, &next)?;
    Ok(SolverState {
        t: state.t + h,
        u: next,
        dt: state.dt,
        step_count: state.step_count + 1,
        history: Some(History {
            u: state.u.clone(),
            rhs: r,
            h,
        }),
    })
}

fn solve_diagonal(numer: &SpectralField, denom: impl Fn(f64) -> f64) -> SpectralField {
    numer.map_radial(|k2| 1.0 / denom(k2))
}

/// Outcome of the step-size controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtProposal {
    pub dt: f64,
    /// Set when the error estimate was not finite.
    pub warning: bool,
}

/// `clamp(safety · dt · (error_tol / err)^{1/(p+1)})`.
pub fn adapt_dt(dt: f64, error_estimate: f64, config: &StepperConfig) -> DtProposal {
    if !error_estimate.is_finite() {
        return DtProposal {
            dt: config.dt_min,
            warning: true,
        };
    }
    if error_estimate <= 0.0 {
        return DtProposal {
            dt: config.dt_max,
            warning: false,
        };
    }
    let exponent = 1.0 / (config.scheme.order() as f64 + 1.0);
    let raw = config.safety * dt * (config.error_tol / error_estimate).powf(exponent);
    DtProposal {
        dt: config.clamp(raw),
        warning: false,
    }
}

/// Relative L² distance used by step doubling.
fn relative_error(fine: &SpectralField, coarse: &SpectralField) -> f64 {
    let scale = fine.l2_norm().max(fine.domain().volume().sqrt());
    fine.sub(coarse).l2_norm() / scale
}

/// Why the observer is being called.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Initial,
    Step,
    /// Landed on a requested output time (index into `RunOptions::stop_times`,
    /// or `None` for the final time when it is not itself a stop time).
    Stop(Option<usize>),
}

/// Read-only hook into a run. Returning an error aborts the run.
pub trait Observer {
    fn observe(&mut self, state: &SolverState, event: StepEvent) -> Result<()>;
}

impl<F: FnMut(&SolverState, StepEvent) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &SolverState, event: StepEvent) -> Result<()> {
        self(state, event)
    }
}

#[derive(Clone, Default)]
pub struct RunOptions<'a> {
    /// Output times in `(t0, t_end]`; steps are shortened to land on them.
    pub stop_times: Vec<f64>,
    /// Call the observer every this many accepted steps (0 = only at stops).
    pub observe_every: usize,
    pub forcing: Option<&'a dyn Forcing>,
}

/// Counters reported by [`run`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub accepted: u64,
    pub rejected: u64,
    pub controller_warnings: u64,
}

/// Steps from `state.t` to `t_end`, landing exactly on every stop time.
pub fn run(
    state: SolverState,
    params: &ModelParams,
    config: &StepperConfig,
    t_end: f64,
    options: &RunOptions<'_>,
    observer: &mut dyn Observer,
) -> Result<(SolverState, RunStats)> {
    let mut stats = RunStats::default();
    if t_end == state.t {
        return Ok((state, stats));
    }
    if t_end.is_nan() || t_end <= state.t {
        return Err(Error::param("t_end", format!("must exceed current time {}", state.t)));
    }
    config.validate()?;

    let mut targets: Vec<(f64, Option<usize>)> = options
        .stop_times
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > state.t && s <= t_end)
        .map(|(i, &s)| (s, Some(i)))
        .collect();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    if targets.last().map(|t| t.0) != Some(t_end) {
        targets.push((t_end, None));
    }

    let mut state = SolverState {
        dt: config.clamp(state.dt),
        ..state
    };
    observer.observe(&state, StepEvent::Initial)?;
    let mut since_observed = 0usize;

    for (target, tag) in targets {
        loop {
            let remaining = target - state.t;
            if remaining <= 0.0 {
                break;
            }
            let landing = remaining <= state.dt * (1.0 + 1e-9);
            let h = if landing { remaining } else { state.dt };

            let mut next = if config.is_adaptive() {
                let big = step_sized(&state, params, config, h, options.forcing)?;
                let half = step_sized(&state, params, config, 0.5 * h, options.forcing)?;
                let fine = step_sized(&half, params, config, 0.5 * h, options.forcing)?;
                let err = relative_error(&fine.u, &big.u);
                let proposal = adapt_dt(h, err, config);
                if proposal.warning {
                    stats.controller_warnings += 1;
                    log::warn!("non-finite error estimate at t = {}", state.t);
                }
                if err > config.error_tol && h > config.dt_min && !proposal.warning {
                    stats.rejected += 1;
                    state.dt = proposal.dt.min(0.5 * h).max(config.dt_min);
                    continue;
                }
                let mut fine = fine;
                fine.step_count = state.step_count + 1;
                fine.dt = if landing {
                    proposal.dt.max(state.dt).min(config.dt_max)
                } else {
                    proposal.dt
                };
                fine
            } else {
                step_sized(&state, params, config, h, options.forcing)?
            };
            if landing {
                next.t = target;
            }
            stats.accepted += 1;
            state = next;
            since_observed += 1;
            let at_stop = landing;
            if at_stop {
                observer.observe(&state, StepEvent::Stop(tag))?;
                since_observed = 0;
            } else if options.observe_every > 0 && since_observed >= options.observe_every {
                observer.observe(&state, StepEvent::Step)?;
                since_observed = 0;
            }
        }
    }
    Ok((state, stats))
}
