//! Periodic tensor grids on `[0, 2π]^n` and the trigonometric Galerkin space.
//!
//! Fields live in two representations. [`PhysicalField`] holds samples on the
//! uniform grid `x_j = 2π j / N` (row-major, axis 0 slowest). [`SpectralField`]
//! holds complex-exponential coefficients `c_ξ` in FFT order, normalized so
//! that
//!
//! ```text
//! u(x) = Σ_ξ c_ξ e^{iξ·x},     c_0 = mean(u).
//! ```
//!
//! Real fields carry conjugate-symmetric coefficients, `c_{-ξ} = conj(c_ξ)`.
//! The real orthonormal basis used by the Galerkin formulation,
//! `{|Ω|^{-1/2}, sqrt(2/|Ω|) cos(ξ·x), sqrt(2/|Ω|) sin(ξ·x)}` over a half-lattice
//! of wavevectors, is related to the complex coefficients by
//!
//! ```text
//! a_const = sqrt(|Ω|) c_0,   a_cos = sqrt(2|Ω|) Re c_ξ,   a_sin = -sqrt(2|Ω|) Im c_ξ,
//! ```
//!
//! see [`RealBasis`]. Under this map the ℓ² norm of the real coefficients equals
//! the L²(Ω) norm of the field, which is `sqrt(|Ω| Σ |c_ξ|²)`.
//!
//! Integrals use the trapezoid rule on the periodic grid, which is exact for
//! trigonometric polynomials of degree below `N` per axis.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tolerated conjugate-symmetry defect, relative to `max(1, max |c|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

/// Periodic box `[0, 2π]^dimension` sampled with `points_per_axis` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dimension: usize,
    pub points_per_axis: usize,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

impl DomainSpec {
    pub fn new(dimension: usize, points_per_axis: usize) -> Result<Self> {
        Self::with_dealias(dimension, points_per_axis, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(dimension: usize, points_per_axis: usize, dealias_fraction: f64) -> Result<Self> {
        let d = DomainSpec {
            dimension,
            points_per_axis,
            dealias_fraction,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dimension) {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if self.points_per_axis < 8 || !self.points_per_axis.is_power_of_two() {
            return Err(Error::InvalidDomain(format!(
                "points_per_axis must be a power of two >= 8, got {}",
                self.points_per_axis
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidDomain(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// Number of grid nodes, `points_per_axis^dimension`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|Ω| = (2π)^dimension`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dimension as i32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_axis as f64
    }

    /// Trapezoid weight of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn nyquist(&self) -> usize {
        self.points_per_axis / 2
    }

    /// Largest wavenumber component retained by [`SpectralField::dealias`].
    pub fn dealias_cutoff(&self) -> usize {
        (self.dealias_fraction * self.nyquist() as f64 + 1e-9).floor() as usize
    }

    /// Multi-index of a flat row-major offset.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        match self.dimension {
            1 => [flat, 0],
            _ => [flat / n, flat % n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dimension {
            1 => idx[0],
            _ => idx[0] * self.points_per_axis + idx[1],
        }
    }

    /// Signed wavenumber for an FFT-ordered index; the Nyquist index maps to `+N/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.points_per_axis;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.points_per_axis / 2
    }

    /// Wavevector at a flat spectral offset (unused components are 0).
    pub fn wavevector(&self, flat: usize) -> [i64; 2] {
        let [i0, i1] = self.multi_index(flat);
        match self.dimension {
            1 => [self.wavenumber(i0), 0],
            _ => [self.wavenumber(i0), self.wavenumber(i1)],
        }
    }

    /// Flat offset of the mode `-ξ`.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.points_per_axis;
        let [i0, i1] = self.multi_index(flat);
        self.flat_index([(n - i0) % n, (n - i1) % n])
    }

    /// Flat offset of a wavevector whose components satisfy `|ξ_a| < N/2`.
    pub fn index_of(&self, xi: [i64; 2]) -> usize {
        let n = self.points_per_axis as i64;
        let wrap = |k: i64| (((k % n) + n) % n) as usize;
        match self.dimension {
            1 => wrap(xi[0]),
            _ => self.flat_index([wrap(xi[0]), wrap(xi[1])]),
        }
    }

    /// Grid coordinates of a flat physical offset.
    pub fn coordinates(&self, flat: usize) -> [f64; 2] {
        let [i0, i1] = self.multi_index(flat);
        let h = self.spacing();
        [i0 as f64 * h, i1 as f64 * h]
    }
}

/// Grid samples of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "physical field",
                index,
            });
        }
        Ok(PhysicalField { domain, values })
    }

    pub(crate) fn from_raw(domain: DomainSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        PhysicalField { domain, values }
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        PhysicalField {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    pub fn constant(domain: DomainSpec, c: f64) -> Self {
        PhysicalField {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(domain: DomainSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.len()).map(|j| f(domain.coordinates(j))).collect();
        PhysicalField { domain, values }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PhysicalField {
        PhysicalField {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Trapezoid-rule integral over Ω.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
    }

    /// Periodic shift by whole cells: `out(x) = self(x - shift·h)`.
    pub fn shifted(&self, shift: [usize; 2]) -> PhysicalField {
        let n = self.domain.points_per_axis;
        let mut out = vec![0.0; self.values.len()];
        for (j, v) in self.values.iter().enumerate() {
            let [i0, i1] = self.domain.multi_index(j);
            let target = match self.domain.dimension {
                1 => [(i0 + shift[0]) % n, 0],
                _ => [(i0 + shift[0]) % n, (i1 + shift[1]) % n],
            };
            out[self.domain.flat_index(target)] = *v;
        }
        PhysicalField {
            domain: self.domain,
            values: out,
        }
    }
}

/// Complex-exponential coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: DomainSpec,
    coeffs: Vec<Complex64>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn transform(domain: &DomainSpec, data: &mut [Complex64], inverse: bool) {
    let n = domain.points_per_axis;
    let fft = plan(n, inverse);
    // contiguous rows (last axis) in one batched call
    fft.process(data);
    if domain.dimension == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for i1 in 0..n {
            for i0 in 0..n {
                column[i0] = data[i0 * n + i1];
            }
            fft.process(&mut column);
            for i0 in 0..n {
                data[i0 * n + i1] = column[i0];
            }
        }
    }
}

/// Physical samples to coefficients; the mean mode equals the field mean.
pub fn forward(f: &PhysicalField) -> Result<SpectralField> {
    if let Some(index) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "forward transform input",
            index,
        });
    }
    Ok(forward_unchecked(f))
}

pub(crate) fn forward_unchecked(f: &PhysicalField) -> SpectralField {
    let scale = 1.0 / f.domain.len() as f64;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&f.domain, &mut data, false);
    for c in &mut data {
        *c *= scale;
    }
    SpectralField {
        domain: f.domain,
        coeffs: data,
    }
}

/// Coefficients to physical samples. Rejects asymmetric input.
pub fn inverse(spec: &SpectralField) -> Result<PhysicalField> {
    spec.check_symmetry()?;
    Ok(inverse_unchecked(spec))
}

pub(crate) fn inverse_unchecked(spec: &SpectralField) -> PhysicalField {
    let mut data = spec.coeffs.clone();
    transform(&spec.domain, &mut data, true);
    PhysicalField {
        domain: spec.domain,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

impl SpectralField {
    /// Builds a field from raw coefficients; symmetry is checked.
    pub fn new(domain: DomainSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                domain.len(),
                coeffs.len()
            )));
        }
        let f = SpectralField { domain, coeffs };
        f.check_symmetry()?;
        Ok(f)
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        SpectralField {
            domain,
            coeffs: vec![Complex64::new(0.0, 0.0); domain.len()],
        }
    }

    /// The field `Σ amp_ξ e^{iξ·x} + c.c.` for the given modes (`|ξ_a| < N/2`).
    pub fn from_modes(domain: DomainSpec, modes: &[([i64; 2], Complex64)]) -> Self {
        let mut f = SpectralField::zeros(domain);
        for &(xi, amp) in modes {
            let j = domain.index_of(xi);
            let jc = domain.conjugate_index(j);
            if j == jc {
                f.coeffs[j] += Complex64::new(amp.re, 0.0);
            } else {
                f.coeffs[j] += amp;
                f.coeffs[jc] += amp.conj();
            }
        }
        f
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, xi: [i64; 2]) -> Complex64 {
        self.coeffs[self.domain.index_of(xi)]
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Largest `|c_{-ξ} - conj(c_ξ)|` over all modes, with its offset.
    pub fn symmetry_defect(&self) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for j in 0..self.coeffs.len() {
            let jc = self.domain.conjugate_index(j);
            let d = (self.coeffs[jc] - self.coeffs[j].conj()).norm();
            if d > worst.1 {
                worst = (j, d);
            }
        }
        worst
    }

    pub fn check_symmetry(&self) -> Result<()> {
        let scale = self.coeffs.iter().fold(1.0_f64, |a, c| a.max(c.norm()));
        let (index, violation) = self.symmetry_defect();
        if violation > SYMMETRY_TOL * scale || !violation.is_finite() {
            return Err(Error::SymmetryViolation { index, violation });
        }
        Ok(())
    }

    /// `sqrt(|Ω| Σ |c_ξ|²)`, the L²(Ω) norm of the represented function.
    pub fn l2_norm(&self) -> f64 {
        (self.domain.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `sqrt(|Ω| Σ |ξ|² |c_ξ|²)`, the H¹ seminorm.
    pub fn h1_seminorm(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| self.xi_sq(j) * c.norm_sqr())
            .sum();
        (self.domain.volume() * s).sqrt()
    }

    fn xi_sq(&self, j: usize) -> f64 {
        let [a, b] = self.domain.wavevector(j);
        (a * a + b * b) as f64
    }

    fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> SpectralField {
        SpectralField {
            domain: self.domain,
            coeffs: self.coeffs.iter().enumerate().map(|(j, &c)| f(j, c)).collect(),
        }
    }

    /// Spectral partial derivative along `axis`. The Nyquist component along
    /// that axis has no real derivative and is dropped.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        assert!(axis < self.domain.dimension, "axis out of range");
        let d = self.domain;
        self.map_modes(|j, c| {
            let i = d.multi_index(j)[axis];
            if d.is_nyquist(i) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, d.wavenumber(i) as f64)
            }
        })
    }

    pub fn gradient(&self) -> Vec<SpectralField> {
        (0..self.domain.dimension).map(|a| self.derivative(a)).collect()
    }

    pub fn laplacian(&self) -> SpectralField {
        self.map_modes(|j, c| c * -self.xi_sq(j))
    }

    pub fn bilaplacian(&self) -> SpectralField {
        self.map_modes(|j, c| {
            let k2 = self.xi_sq(j);
            c * (k2 * k2)
        })
    }

    /// Zeroes every mode with some `|ξ_a| > cutoff` (the L² projection Π_N).
    pub fn project(&self, cutoff: usize) -> SpectralField {
        let d = self.domain;
        let cutoff = cutoff as i64;
        self.map_modes(|j, c| {
            let xi = d.wavevector(j);
            if xi[0].abs() > cutoff || xi[1].abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    }

    pub fn dealias(&self) -> SpectralField {
        self.project(self.domain.dealias_cutoff())
    }

    /// Embeds (or truncates) the coefficients into another grid of the same dimension.
    /// Nyquist modes of the source are dropped.
    pub fn resample(&self, target: DomainSpec) -> Result<SpectralField> {
        if target.dimension != self.domain.dimension {
            return Err(Error::ShapeMismatch("resample across dimensions".into()));
        }
        let mut out = SpectralField::zeros(target);
        let limit = (self.domain.nyquist().min(target.nyquist())) as i64;
        for (j, &c) in self.coeffs.iter().enumerate() {
            let xi = self.domain.wavevector(j);
            if xi[0].abs() < limit && xi[1].abs() < limit {
                out.coeffs[target.index_of(xi)] = c;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        self.map_modes(|_, c| c * s)
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.domain, other.domain);
        self.map_modes(|j, c| c + other.coeffs[j])
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.domain, other.domain);
        self.map_modes(|j, c| c - other.coeffs[j])
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.domain, other.domain);
        self.map_modes(|j, c| c + other.coeffs[j] * s)
    }

    /// Applies a real multiplier that depends on `|ξ|²`.
    pub fn map_radial(&self, f: impl Fn(f64) -> f64) -> SpectralField {
        self.map_modes(|j, c| c * f(self.xi_sq(j)))
    }
}

/// `Σ_a ∂_a V_a`.
pub fn divergence(components: &[SpectralField]) -> Result<SpectralField> {
    let first = components
        .first()
        .ok_or_else(|| Error::ShapeMismatch("divergence of empty vector".into()))?;
    if components.len() != first.domain.dimension {
        return Err(Error::ShapeMismatch(format!(
            "divergence needs {} components, got {}",
            first.domain.dimension,
            components.len()
        )));
    }
    let mut acc = first.derivative(0);
    for (axis, comp) in components.iter().enumerate().skip(1) {
        if comp.domain != first.domain {
            return Err(Error::ShapeMismatch("divergence components on different grids".into()));
        }
        acc = acc.add(&comp.derivative(axis));
    }
    Ok(acc)
}

/// Kind of a real basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Constant,
    Cos,
    Sin,
}

/// Ordered real orthonormal trigonometric basis with `|ξ_a| <= cutoff`.
///
/// Wavevectors are taken from the half-lattice `ξ_0 > 0`, or `ξ_0 = 0, ξ_1 > 0`,
/// so every `±ξ` pair appears once. Index 0 is the constant function.
#[derive(Debug, Clone)]
pub struct RealBasis {
    dimension: usize,
    cutoff: usize,
    modes: Vec<([i64; 2], ModeKind)>,
}

impl RealBasis {
    pub fn new(dimension: usize, cutoff: usize) -> Self {
        let c = cutoff as i64;
        let mut modes = vec![([0, 0], ModeKind::Constant)];
        let mut reps = Vec::new();
        match dimension {
            1 => reps.extend((1..=c).map(|k| [k, 0])),
            _ => {
                for k0 in 0..=c {
                    for k1 in -c..=c {
                        if k0 > 0 || k1 > 0 {
                            reps.push([k0, k1]);
                        }
                    }
                }
            }
        }
        for xi in reps {
            modes.push((xi, ModeKind::Cos));
            modes.push((xi, ModeKind::Sin));
        }
        RealBasis {
            dimension,
            cutoff,
            modes,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> &[([i64; 2], ModeKind)] {
        &self.modes
    }

    /// Real-basis coordinates of `field` restricted to this basis' modes.
    pub fn from_spectral(&self, field: &SpectralField) -> Vec<f64> {
        let vol = field.domain.volume();
        self.modes
            .iter()
            .map(|&(xi, kind)| {
                let c = field.coeff(xi);
                match kind {
                    ModeKind::Constant => vol.sqrt() * c.re,
                    ModeKind::Cos => (2.0 * vol).sqrt() * c.re,
                    ModeKind::Sin => -(2.0 * vol).sqrt() * c.im,
                }
            })
            .collect()
    }

    pub fn to_spectral(&self, coords: &[f64], domain: DomainSpec) -> Result<SpectralField> {
        if coords.len() != self.modes.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} real coefficients, got {}",
                self.modes.len(),
                coords.len()
            )));
        }
        if domain.dimension != self.dimension || self.cutoff >= domain.nyquist() {
            return Err(Error::ShapeMismatch("basis does not fit the grid".into()));
        }
        let vol = domain.volume();
        let mut f = SpectralField::zeros(domain);
        for (&(xi, kind), &a) in self.modes.iter().zip(coords) {
            let j = domain.index_of(xi);
            match kind {
                ModeKind::Constant => f.coeffs[j] += a / vol.sqrt(),
                ModeKind::Cos | ModeKind::Sin => {
                    let s = a / (2.0 * vol).sqrt();
                    let c = if kind == ModeKind::Cos {
                        Complex64::new(s, 0.0)
                    } else {
                        Complex64::new(0.0, -s)
                    };
                    let jc = domain.conjugate_index(j);
                    f.coeffs[j] += c;
                    f.coeffs[jc] += c.conj();
                }
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_smooth(domain: DomainSpec, seed: u64, kmax: i64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = vec![([0, 0], Complex64::new(rng.random_range(-1.0..1.0), 0.0))];
        let k1max = if domain.dimension == 2 { kmax } else { 0 };
        for k0 in 0..=kmax {
            for k1 in -k1max..=k1max {
                if k0 > 0 || (k0 == 0 && k1 > 0) {
                    let amp = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    modes.push(([k0, k1], amp / (1.0 + (k0 * k0 + k1 * k1) as f64)));
                }
            }
        }
        SpectralField::from_modes(domain, &modes)
    }

    fn random_physical(domain: DomainSpec, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..domain.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        PhysicalField::new(domain, values).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    fn max_coeff_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .fold(0.0, |m, (x, y)| f64::max(m, (x - y).norm()))
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(1, 4).is_err());
        assert!(DomainSpec::new(1, 48).is_err());
        assert!(DomainSpec::new(3, 16).is_err());
        assert!(DomainSpec::with_dealias(1, 16, 0.0).is_err());
        assert!(DomainSpec::with_dealias(1, 16, 1.5).is_err());
        let d = DomainSpec::new(2, 64).unwrap();
        assert_eq!(d.len(), 4096);
        assert_eq!(d.dealias_cutoff(), 21);
        assert_eq!(DomainSpec::new(1, 128).unwrap().dealias_cutoff(), 42);
    }

    #[test]
    fn forward_of_zero_is_zero() {
        let d = DomainSpec::new(2, 16).unwrap();
        let f = forward(&PhysicalField::zeros(d)).unwrap();
        assert!(f.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn forward_of_cosine_has_two_modes() {
        let d = DomainSpec::new(1, 32).unwrap();
        let f = forward(&PhysicalField::from_fn(d, |x| x[0].cos())).unwrap();
        for (j, c) in f.coeffs().iter().enumerate() {
            let k = d.wavenumber(j);
            if k.abs() == 1 {
                assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            } else {
                assert!(c.norm() < 1e-13, "mode {k}: {c}");
            }
        }
    }

    #[test]
    fn forward_rejects_non_finite() {
        let d = DomainSpec::new(1, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        let f = PhysicalField::from_raw(d, v);
        assert!(matches!(forward(&f), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn inverse_of_resolved_modes() {
        let d = DomainSpec::new(1, 16).unwrap();
        assert!(inverse(&SpectralField::zeros(d)).unwrap().values().iter().all(|&v| v == 0.0));
        let f = SpectralField::from_modes(d, &[([2, 0], Complex64::new(0.5, 0.0))]);
        let u = inverse(&f).unwrap();
        let exact = PhysicalField::from_fn(d, |x| (2.0 * x[0]).cos());
        assert!(max_diff(u.values(), exact.values()) < 1e-13);
    }

    #[test]
    fn inverse_rejects_asymmetric_coefficients() {
        let d = DomainSpec::new(1, 16).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[1] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::new(d, c.clone()).is_err());
        let f = SpectralField { domain: d, coeffs: c };
        assert!(matches!(inverse(&f), Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn round_trip_and_parseval() {
        for (dim, n) in [(1, 8), (1, 64), (1, 1024), (2, 8), (2, 32), (2, 128)] {
            let d = DomainSpec::new(dim, n).unwrap();
            let f = random_physical(d, n as u64 + dim as u64);
            let spec = forward(&f).unwrap();
            spec.check_symmetry().unwrap();
            let back = inverse(&spec).unwrap();
            let scale = f.max_abs();
            assert!(max_diff(back.values(), f.values()) <= 1e-12 * scale, "{dim}D n={n}");
            let quad = f.map(|v| v * v).integrate().sqrt();
            let parseval = spec.l2_norm();
            assert!((quad - parseval).abs() <= 1e-12 * quad);
        }
    }

    #[test]
    fn derivatives_of_trig_polynomials() {
        let d1 = DomainSpec::new(1, 32).unwrap();
        let s = forward(&PhysicalField::from_fn(d1, |x| x[0].sin())).unwrap();
        let ds = inverse(&s.gradient()[0]).unwrap();
        let c = PhysicalField::from_fn(d1, |x| x[0].cos());
        assert!(max_diff(ds.values(), c.values()) < 1e-13);
        let lap = inverse(&s.laplacian()).unwrap();
        assert!(max_diff(lap.values(), s_neg(&d1).values()) < 1e-13);

        let k = forward(&PhysicalField::constant(d1, 3.0)).unwrap();
        assert!(k.gradient()[0].coeffs().iter().all(|c| c.norm() == 0.0));

        let s2 = forward(&PhysicalField::from_fn(d1, |x| (2.0 * x[0]).sin())).unwrap();
        let bl = inverse(&s2.bilaplacian()).unwrap();
        let exact = PhysicalField::from_fn(d1, |x| 16.0 * (2.0 * x[0]).sin());
        // round-off in the high modes is amplified by up to (N/2)^4
        let e = max_diff(bl.values(), exact.values());
        assert!(e < 1e-10, "{e}");

        let d2 = DomainSpec::new(2, 32).unwrap();
        let f = forward(&PhysicalField::from_fn(d2, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos())).unwrap();
        let g = f.gradient();
        let gx = inverse(&g[0]).unwrap();
        let gy = inverse(&g[1]).unwrap();
        let ex = PhysicalField::from_fn(d2, |x| 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos());
        let ey = PhysicalField::from_fn(d2, |x| -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin());
        assert!(max_diff(gx.values(), ex.values()) < 1e-12);
        assert!(max_diff(gy.values(), ey.values()) < 1e-12);
    }

    fn s_neg(d: &DomainSpec) -> PhysicalField {
        PhysicalField::from_fn(*d, |x| -x[0].sin())
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        for dim in [1, 2] {
            let d = DomainSpec::new(dim, 32).unwrap();
            let f = random_smooth(d, 7, 12);
            let lhs = divergence(&f.gradient()).unwrap();
            assert!(max_coeff_diff(&lhs, &f.laplacian()) < 1e-12);
        }
        let d = DomainSpec::new(2, 16).unwrap();
        let f = random_smooth(d, 1, 3);
        assert!(divergence(&f.gradient()[..1]).is_err());
    }

    #[test]
    fn projection_cases() {
        let d = DomainSpec::new(2, 32).unwrap();
        let f = random_smooth(d, 3, 10);
        let p = f.project(4);
        assert_eq!(p.project(4), p);
        assert!(p.l2_norm() <= f.l2_norm());
        let single = SpectralField::from_modes(d, &[([3, -4], Complex64::new(0.2, 0.7))]);
        assert_eq!(single.project(4), single);

        let d1 = DomainSpec::new(1, 64).unwrap();
        let u = random_physical(d1, 11);
        let p0 = forward(&u).unwrap().project(0);
        // quadrature mean oracle
        let mean = u.integrate() / d1.volume();
        assert!((p0.mean() - mean).abs() < 1e-15);
        assert!(p0.coeffs()[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn dealias_cases() {
        let d = DomainSpec::new(1, 32).unwrap();
        let cutoff = d.dealias_cutoff();
        assert_eq!(cutoff, 10);
        let f = random_smooth(d, 5, 15);
        let g = f.dealias();
        assert_eq!(g.dealias(), g);
        assert_eq!(g, f.project(cutoff));

        // u = cos(kx) with k = 12 > N/3: u² = 1/2 + cos(2kx)/2 and 2k = 24
        // aliases onto 24 - 32 = -8, inside the retained band.
        let k = 12.0;
        let u = PhysicalField::from_fn(d, |x| (k * x[0]).cos());
        let sq = forward(&u.map(|v| v * v)).unwrap().dealias();
        assert!((sq.coeff([8, 0]).re - 0.25).abs() < 1e-14);
        assert!((sq.mean() - 0.5).abs() < 1e-14);
        // below N/3 the product is alias-free
        let u = PhysicalField::from_fn(d, |x| (5.0 * x[0]).cos());
        let sq = forward(&u.map(|v| v * v)).unwrap().dealias();
        for (j, c) in sq.coeffs().iter().enumerate() {
            let expected = match d.wavenumber(j).abs() {
                0 => 0.5,
                10 => 0.25,
                _ => 0.0,
            };
            assert!((c.re - expected).abs() < 1e-14 && c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn real_basis_norms_match_quadrature() {
        for dim in [1, 2] {
            let d = DomainSpec::new(dim, 32).unwrap();
            let f = random_smooth(d, 21, 6);
            let basis = RealBasis::new(dim, 6);
            let coords = basis.from_spectral(&f);
            let l2 = coords.iter().map(|a| a * a).sum::<f64>().sqrt();
            let quad = inverse(&f).unwrap().map(|v| v * v).integrate().sqrt();
            assert!((l2 - quad).abs() < 1e-12 * quad);
            let back = basis.to_spectral(&coords, d).unwrap();
            assert!(max_coeff_diff(&back, &f) < 1e-14);
        }
        assert_eq!(RealBasis::new(1, 8).len(), 17);
        assert_eq!(RealBasis::new(2, 8).len(), 289);
    }

    #[test]
    fn resample_preserves_band_limited_field() {
        let coarse = DomainSpec::new(1, 16).unwrap();
        let fine = DomainSpec::new(1, 64).unwrap();
        let f = random_smooth(coarse, 2, 7);
        let up = f.resample(fine).unwrap();
        assert!((up.l2_norm() - f.l2_norm()).abs() < 1e-14);
        assert_eq!(up.resample(coarse).unwrap(), f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn operations_preserve_symmetry(seed in 0u64..1000, dim in 1usize..=2, cutoff in 0usize..8) {
                let d = DomainSpec::new(dim, 16).unwrap();
                let f = forward(&random_physical(d, seed)).unwrap();
                for g in f.gradient() {
                    g.check_symmetry().unwrap();
                }
                f.laplacian().check_symmetry().unwrap();
                f.bilaplacian().check_symmetry().unwrap();
                f.project(cutoff).check_symmetry().unwrap();
                f.dealias().check_symmetry().unwrap();
                divergence(&f.gradient()).unwrap().check_symmetry().unwrap();
            }

            #[test]
            fn projection_is_non_expansive(seed in 0u64..1000, cutoff in 0usize..12) {
                let d = DomainSpec::new(1, 32).unwrap();
                let f = forward(&random_physical(d, seed)).unwrap();
                let p = f.project(cutoff);
                prop_assert!(p.l2_norm() <= f.l2_norm() * (1.0 + 1e-15));
                prop_assert_eq!(p.project(cutoff), p);
            }
        }
    }
}
