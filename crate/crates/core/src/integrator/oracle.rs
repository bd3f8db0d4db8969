//! Reference Galerkin right-hand side by dense quadrature.
//!
//! Works directly in the real orthonormal basis `ρ_j` of [`RealBasis`]: it
//! evaluates `u^N = Σ c_j ρ_j` on an oversampled grid by explicit summation,
//! projects the chemical potential weakly,
//!
//! ```text
//! d_j = ∫ γ ∇u^N·∇ρ_j + φ(u^N) ρ_j,         μ^N = Σ d_j ρ_j,
//! ```
//!
//! and returns
//!
//! ```text
//! dc_j/dt = -∫ M_θ(u^N) ∇μ^N·∇ρ_j + β·∫ ∇ψ(u^N) ρ_j            (gradient form)
//!         = -∫ M_θ(u^N) ∇μ^N·∇ρ_j - β·∫ ψ(u^N) ∇ρ_j            (integrated by parts)
//! ```
//!
//! No FFTs, dealiasing or shared code paths with [`crate::model::rhs`] are used,
//! other than the scalar nonlinearities of [`ModelParams`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{ModeKind, RealBasis};

/// Largest per-axis cutoff accepted by the oracle.
pub const MAX_ORACLE_CUTOFF: usize = 8;

/// How the convective term is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvectiveForm {
    /// `β·∫ ∇ψ(u) ρ_j`
    Gradient,
    /// `-β·∫ ψ(u) ∇ρ_j`
    IntegratedByParts,
}

/// Oversampled grid with per-axis cos/sin tables for wavenumbers `0..=cutoff`.
struct QuadratureGrid {
    dimension: usize,
    points: usize,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl QuadratureGrid {
    fn new(dimension: usize, cutoff: usize) -> Self {
        let modes_per_axis = 2 * cutoff + 1;
        let points = (8 * modes_per_axis).next_power_of_two();
        let mut cos = Vec::with_capacity(cutoff + 1);
        let mut sin = Vec::with_capacity(cutoff + 1);
        for k in 0..=cutoff {
            let xs = (0..points).map(|i| 2.0 * PI * i as f64 / points as f64);
            cos.push(xs.clone().map(|x| (k as f64 * x).cos()).collect());
            sin.push(xs.map(|x| (k as f64 * x).sin()).collect());
        }
        QuadratureGrid {
            dimension,
            points,
            cos,
            sin,
        }
    }

    fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    fn weight(&self) -> f64 {
        (2.0 * PI / self.points as f64).powi(self.dimension as i32)
    }

    fn cs(&self, k: i64, i: usize) -> (f64, f64) {
        let a = k.unsigned_abs() as usize;
        let s = if k < 0 { -self.sin[a][i] } else { self.sin[a][i] };
        (self.cos[a][i], s)
    }

    /// `cos(ξ·x)` and `sin(ξ·x)` at flat node `p`.
    fn phase(&self, xi: [i64; 2], p: usize) -> (f64, f64) {
        if self.dimension == 1 {
            return self.cs(xi[0], p);
        }
        let (c0, s0) = self.cs(xi[0], p / self.points);
        let (c1, s1) = self.cs(xi[1], p % self.points);
        (c0 * c1 - s0 * s1, s0 * c1 + c0 * s1)
    }
}

/// Value and gradient of every basis function at one node.
fn basis_at(basis: &RealBasis, grid: &QuadratureGrid, vol: f64, p: usize, out: &mut [(f64, [f64; 2])]) {
    let norm0 = 1.0 / vol.sqrt();
    let norm = (2.0 / vol).sqrt();
    for (slot, &(xi, kind)) in out.iter_mut().zip(basis.modes()) {
        let xf = [xi[0] as f64, xi[1] as f64];
        *slot = match kind {
            ModeKind::Constant => (norm0, [0.0, 0.0]),
            ModeKind::Cos => {
                let (c, s) = grid.phase(xi, p);
                (norm * c, [-norm * s * xf[0], -norm * s * xf[1]])
            }
            ModeKind::Sin => {
                let (c, s) = grid.phase(xi, p);
                (norm * s, [norm * c * xf[0], norm * c * xf[1]])
            }
        };
    }
}

/// Exact Galerkin right-hand side for real-basis coefficients `c`.
pub fn galerkin_oracle_rhs(
    c: &[f64],
    params: &ModelParams,
    dimension: usize,
    cutoff: usize,
    form: ConvectiveForm,
) -> Result<Vec<f64>> {
    if cutoff > MAX_ORACLE_CUTOFF {
        return Err(Error::CostGuard {
            requested: cutoff,
            limit: MAX_ORACLE_CUTOFF,
        });
    }
    if !(1..=2).contains(&dimension) {
        return Err(Error::InvalidDomain(format!("dimension {dimension}")));
    }
    let basis = RealBasis::new(dimension, cutoff);
    if c.len() != basis.len() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} coefficients, got {}",
            basis.len(),
            c.len()
        )));
    }
    if params.beta.len() != dimension {
        return Err(Error::param("beta", "length must equal dimension"));
    }
    let grid = QuadratureGrid::new(dimension, cutoff);
    let vol = (2.0 * PI).powi(dimension as i32);
    let w = grid.weight();
    let nb = basis.len();
    let mut rho = vec![(0.0, [0.0; 2]); nb];

    // u^N and ∇u^N on the grid, then the weak projection d_j of μ.
    let mut u = vec![0.0; grid.len()];
    let mut grad_u = vec![[0.0; 2]; grid.len()];
    let mut d = vec![0.0; nb];
    for p in 0..grid.len() {
        basis_at(&basis, &grid, vol, p, &mut rho);
        let (mut v, mut g) = (0.0, [0.0; 2]);
        for (&cj, (r, dr)) in c.iter().zip(&rho) {
            v += cj * r;
            g[0] += cj * dr[0];
            g[1] += cj * dr[1];
        }
        u[p] = v;
        grad_u[p] = g;
        let phi = params.phi(v);
        for (dj, (r, dr)) in d.iter_mut().zip(&rho) {
            *dj += w * (params.gamma * (g[0] * dr[0] + g[1] * dr[1]) + phi * r);
        }
    }

    let beta = [params.beta[0], params.beta.get(1).copied().unwrap_or(0.0)];
    let mut out = vec![0.0; nb];
    for p in 0..grid.len() {
        basis_at(&basis, &grid, vol, p, &mut rho);
        let mut grad_mu = [0.0; 2];
        for (&dj, (_, dr)) in d.iter().zip(&rho) {
            grad_mu[0] += dj * dr[0];
            grad_mu[1] += dj * dr[1];
        }
        let mob = params.effective_mobility(u[p]);
        let flux = [mob * grad_mu[0], mob * grad_mu[1]];
        match form {
            ConvectiveForm::Gradient => {
                let conv = params.psi_prime(u[p])? * (beta[0] * grad_u[p][0] + beta[1] * grad_u[p][1]);
                for (o, (r, dr)) in out.iter_mut().zip(&rho) {
                    *o += w * (-(flux[0] * dr[0] + flux[1] * dr[1]) + conv * r);
                }
            }
            ConvectiveForm::IntegratedByParts => {
                let psi = params.psi(u[p])?;
                for (o, (_, dr)) in out.iter_mut().zip(&rho) {
                    *o += w * (-(flux[0] * dr[0] + flux[1] * dr[1]) - psi * (beta[0] * dr[0] + beta[1] * dr[1]));
                }
            }
        }
    }
    Ok(out)
}
