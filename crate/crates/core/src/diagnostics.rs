//! Monitored quantities of a run: mass, free energy, dissipation, the explicit
//! convective source bound and the per-step energy inequality
//!
//! ```text
//! dE/dt + ½ ∫ M_θ |∇μ|² ≤ (|β|²/2) ∫ ψ(u)²/M_θ(u)
//! ```
//!
//! Integrals of nonlinear expressions are evaluated on a grid refined enough
//! to resolve their polynomial part exactly (up to 4× the native grid).
//!
//! The gradient of the chemical potential is formed as `γ∇Δu - φ'(u)∇u`. This
//! is the negative of `∇μ` for `μ = -γΔu + φ(u)`; only its square enters.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::{Observer, SolverState, StepEvent};
use crate::model::ModelParams;
use crate::spectral::{inverse_unchecked, DomainSpec, PhysicalField, SpectralField};

pub const DEFAULT_EPS_DEG: f64 = 1e-3;
pub const DEFAULT_TOL_INEQ: f64 = 1e-3;

pub const CSV_HEADER: &str =
    "t,mass,energy,dissipation,source_bound,ineq_residual,l2,h1,max_abs,min_abs,degeneracy_measure";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub source_bound: f64,
    /// NaN for the first record of a run.
    pub ineq_residual: f64,
    pub l2: f64,
    pub h1: f64,
    pub max_abs: f64,
    pub min_abs: f64,
    pub degeneracy_measure: f64,
}

impl DiagnosticsRecord {
    fn fields(&self) -> [f64; 11] {
        [
            self.t,
            self.mass,
            self.energy,
            self.dissipation,
            self.source_bound,
            self.ineq_residual,
            self.l2,
            self.h1,
            self.max_abs,
            self.min_abs,
            self.degeneracy_measure,
        ]
    }

    fn from_fields(f: [f64; 11]) -> Self {
        DiagnosticsRecord {
            t: f[0],
            mass: f[1],
            energy: f[2],
            dissipation: f[3],
            source_bound: f[4],
            ineq_residual: f[5],
            l2: f[6],
            h1: f[7],
            max_abs: f[8],
            min_abs: f[9],
            degeneracy_measure: f[10],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub max_abs: f64,
    pub min_abs: f64,
}

/// Largest `|ξ_a|` carrying a nonzero coefficient.
fn active_cutoff(u: &SpectralField) -> usize {
    let d = u.domain();
    u.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(j, _)| {
            let xi = d.wavevector(j);
            xi[0].unsigned_abs().max(xi[1].unsigned_abs()) as usize
        })
        .max()
        .unwrap_or(0)
}

/// Native or refined grid on which a degree-`degree` polynomial in `u` and its
/// derivatives is integrated exactly, if at most 4× finer. Fields with Nyquist
/// content stay on their own grid.
fn quadrature_domain(u: &SpectralField, degree: usize) -> DomainSpec {
    let d = *u.domain();
    let k = active_cutoff(u);
    if k >= d.nyquist() {
        return d;
    }
    let mut n = d.points_per_axis;
    while n <= degree * k && n < 4 * d.points_per_axis {
        n *= 2;
    }
    DomainSpec {
        points_per_axis: n,
        ..d
    }
}

fn on_grid(u: &SpectralField, target: DomainSpec) -> SpectralField {
    if target == *u.domain() {
        u.clone()
    } else {
        u.resample(target).expect("same dimension")
    }
}

/// Integral over the box of grid samples (rectangle rule = trapezoid on a periodic grid).
fn integrate(values: impl Iterator<Item = f64>, domain: &DomainSpec) -> f64 {
    values.sum::<f64>() * domain.cell_volume()
}

/// `∫ u`, exactly `|Ω|` times the mean coefficient.
pub fn mass(u: &SpectralField) -> f64 {
    u.domain().volume() * u.mean()
}

/// `∫ γ/2 |∇u|² + Φ(u)`.
pub fn energy(u: &SpectralField, params: &ModelParams) -> f64 {
    let gradient = 0.5 * params.gamma * u.h1_seminorm().powi(2);
    let q = quadrature_domain(u, params.phi_coeffs.len() + 1);
    let phys = inverse_unchecked(&on_grid(u, q));
    gradient + integrate(phys.values().iter().map(|&v| params.potential(v)), &q)
}

/// Samples of `γ∇Δu - φ'(u)∇u` and of `u` on the grid `q`.
fn potential_gradient(u: &SpectralField, params: &ModelParams, q: DomainSpec) -> (PhysicalField, Vec<Vec<f64>>) {
    let fine = on_grid(u, q);
    let phys = inverse_unchecked(&fine);
    let lap = fine.laplacian();
    let comps = (0..q.dimension)
        .map(|a| {
            let gl = inverse_unchecked(&lap.derivative(a));
            let gu = inverse_unchecked(&fine.derivative(a));
            phys.values()
                .iter()
                .zip(gl.values().iter().zip(gu.values()))
                .map(|(&v, (&l, &g))| params.gamma * l - params.phi_prime(v) * g)
                .collect()
        })
        .collect();
    (phys, comps)
}

/// `∫ M_θ(u) |γ∇Δu - φ'(u)∇u|²` (with `M` in place of `M_θ` when θ = 0).
pub fn dissipation(u: &SpectralField, params: &ModelParams) -> f64 {
    let degree = 2 * params.phi_coeffs.len() + (2.0 * params.m).ceil() as usize;
    let q = quadrature_domain(u, degree);
    let (phys, grad) = potential_gradient(u, params, q);
    let vals = phys.values().iter().enumerate().map(|(p, &v)| {
        let g2: f64 = grad.iter().map(|c| c[p] * c[p]).sum();
        params.effective_mobility(v) * g2
    });
    integrate(vals, &q)
}

/// `(|β|²/2) ∫ ψ(u)²/M_θ(u)`. Zero whenever β = 0; otherwise requires θ > 0.
pub fn source_bound(u: &SpectralField, params: &ModelParams) -> Result<f64> {
    let b2 = params.beta_norm_sq();
    if b2 == 0.0 {
        return Ok(0.0);
    }
    if params.theta <= 0.0 {
        return Err(Error::param("theta", "source bound needs theta > 0"));
    }
    let q = quadrature_domain(u, 4 * params.psi_coeffs.len());
    let phys = inverse_unchecked(&on_grid(u, q));
    let mut acc = 0.0;
    for &v in phys.values() {
        let psi = params.psi(v)?;
        acc += psi * psi / params.mobility_reg(v)?;
    }
    Ok(0.5 * b2 * acc * q.cell_volume())
}

/// `(E⁺ - E)/(t⁺ - t) + ½ D⁺ - S⁺`; the inequality holds when this is ≤ tol.
pub fn check_energy_inequality(prev: &DiagnosticsRecord, next: &DiagnosticsRecord) -> f64 {
    (next.energy - prev.energy) / (next.t - prev.t) + 0.5 * next.dissipation - next.source_bound
}

/// Worst `E(t) - e^{C1|β|²(t - t₀)/2}(E(t₀) + C3)`; nonpositive means the bound holds.
pub fn gronwall_envelope(records: &[DiagnosticsRecord], c1: f64, c3: f64, beta: &[f64]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NEG_INFINITY;
    };
    let b2: f64 = beta.iter().map(|b| b * b).sum();
    records
        .iter()
        .map(|r| r.energy - (0.5 * c1 * b2 * (r.t - first.t)).exp() * (first.energy + c3))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn norms(u: &SpectralField) -> Norms {
    let phys = inverse_unchecked(u);
    Norms {
        l2: u.l2_norm(),
        h1: u.h1_seminorm(),
        max_abs: phys.max_abs(),
        min_abs: phys.min_abs(),
    }
}

/// Fraction of grid nodes with `|u| ≤ eps_deg`.
pub fn degeneracy_measure(u: &SpectralField, eps_deg: f64) -> f64 {
    degeneracy_fraction(&inverse_unchecked(u), eps_deg)
}

pub fn degeneracy_fraction(u: &PhysicalField, eps_deg: f64) -> f64 {
    let hits = u.values().iter().filter(|v| v.abs() <= eps_deg).count();
    hits as f64 / u.values().len() as f64
}

/// Everything except the inequality residual.
pub fn record(t: f64, u: &SpectralField, params: &ModelParams, eps_deg: f64) -> Result<DiagnosticsRecord> {
    let n = norms(u);
    let source = if params.theta > 0.0 || params.beta_norm_sq() == 0.0 {
        source_bound(u, params)?
    } else {
        f64::NAN
    };
    Ok(DiagnosticsRecord {
        t,
        mass: mass(u),
        energy: energy(u, params),
        dissipation: dissipation(u, params),
        source_bound: source,
        ineq_residual: f64::NAN,
        l2: n.l2,
        h1: n.h1,
        max_abs: n.max_abs,
        min_abs: n.min_abs,
        degeneracy_measure: degeneracy_measure(u, eps_deg),
    })
}

/// Observer that appends a record at every call and checks the inequality
/// against the previous one. In strict mode a violation aborts the run.
pub struct Recorder<'a> {
    params: &'a ModelParams,
    pub eps_deg: f64,
    /// Residual tolerance is `tol_ineq · (1 + |E_prev|)`.
    pub tol_ineq: f64,
    pub strict: bool,
    /// When off, `source_bound` and the inequality residual are NaN.
    pub source_bound: bool,
    /// Keep a copy of the state at every stop event.
    pub keep_snapshots: bool,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub violations: Vec<String>,
}

impl<'a> Recorder<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        Recorder {
            params,
            eps_deg: DEFAULT_EPS_DEG,
            tol_ineq: DEFAULT_TOL_INEQ,
            strict: false,
            source_bound: true,
            keep_snapshots: false,
            records: Vec::new(),
            snapshots: Vec::new(),
            violations: Vec::new(),
        }
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, state: &SolverState, event: StepEvent) -> Result<()> {
        let mut rec = record(state.t, &state.u, self.params, self.eps_deg)?;
        if !self.source_bound {
            rec.source_bound = f64::NAN;
        }
        if let Some(prev) = self.records.last() {
            rec.ineq_residual = check_energy_inequality(prev, &rec);
            let tol = self.tol_ineq * (1.0 + prev.energy.abs());
            if rec.ineq_residual > tol {
                let msg = format!(
                    "energy inequality residual {:.3e} exceeds {:.3e} at t = {}",
                    rec.ineq_residual, tol, rec.t
                );
                log::warn!("{msg}");
                self.violations.push(msg.clone());
                if self.strict {
                    return Err(Error::InvariantViolation { t: rec.t, what: msg });
                }
            }
        }
        if self.keep_snapshots && matches!(event, StepEvent::Initial | StepEvent::Stop(_)) {
            self.snapshots.push((state.t, state.u.clone()));
        }
        self.records.push(rec);
        Ok(())
    }
}

pub fn write_csv(mut w: impl Write, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let row: Vec<String> = r.fields().iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(&mut w, records).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_csv(r: impl BufRead) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose().map_err(|e| Error::io("<csv>", e))?;
    if header.as_deref().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: "missing or unexpected diagnostics header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 2, message };
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let fields: [f64; 11] = vals
            .try_into()
            .map_err(|v: Vec<f64>| parse_err(format!("expected 11 columns, got {}", v.len())))?;
        out.push(DiagnosticsRecord::from_fields(fields));
    }
    Ok(out)
}

pub fn load_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}
