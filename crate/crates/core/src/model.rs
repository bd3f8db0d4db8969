//! The convective Cahn–Hilliard model with degenerate mobility:
//!
//! ```text
//! ∂t u = ∇·(M(u) ∇μ) + β·∇ψ(u),     μ = -γ Δu + φ(u),
//! M(u) = |u|^{2m},   φ(u) = Σ_{i=1}^{2k+1} a_i u^i,   ψ(u) = Σ_{i=0}^{k} b_i u^{i+m}.
//! ```
//!
//! For `θ > 0` the mobility is replaced by the bounded-below surrogate
//! `M_θ(u) = |u|^{2m}` if `|u|² > θ`, else `θ^m`. `θ = 0` selects the raw
//! degenerate mobility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{divergence, forward_unchecked, inverse_unchecked, PhysicalField, SpectralField};

/// Fields whose magnitude exceeds this are treated as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Polynomial evaluation switches to compensated Horner above this magnitude.
pub const COMPENSATED_HORNER_ABOVE: f64 = 10.0;

/// Physical and model constants.
///
/// `phi_coeffs` holds `a_1..a_{2k+1}` and `psi_coeffs` holds `b_0..b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub m: f64,
    pub beta: Vec<f64>,
    pub phi_coeffs: Vec<f64>,
    pub psi_coeffs: Vec<f64>,
    pub theta: f64,
    /// Extends `u^{i+m}` to negative `u` as `sign(u)^i |u|^{i+m}` for non-integer `m`.
    #[serde(default)]
    pub signed_power: bool,
}

impl ModelParams {
    /// Classic double well `φ(u) = u³ - u` with `ψ(u) = u^{1+m}/2`.
    pub fn double_well(dimension: usize, gamma: f64, theta: f64, beta: f64) -> Self {
        let mut b = vec![0.0; dimension];
        b[0] = beta;
        ModelParams {
            gamma,
            m: 1.0,
            beta: b,
            phi_coeffs: vec![-1.0, 0.0, 1.0],
            psi_coeffs: vec![0.0, 0.5],
            theta,
            signed_power: false,
        }
    }

    /// `k` in `φ` of degree `2k+1`.
    pub fn k(&self) -> usize {
        self.phi_coeffs.len().saturating_sub(1) / 2
    }

    /// Checks structural constraints; errors name the offending field.
    pub fn validate(&self, dimension: usize) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        finite("gamma", self.gamma)?;
        finite("m", self.m)?;
        finite("theta", self.theta)?;
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if self.m <= 0.0 {
            return Err(Error::param("m", format!("must be > 0, got {}", self.m)));
        }
        if self.theta < 0.0 {
            return Err(Error::param("theta", format!("must be >= 0, got {}", self.theta)));
        }
        if self.beta.len() != dimension {
            return Err(Error::param(
                "beta",
                format!("needs {} components, got {}", dimension, self.beta.len()),
            ));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("beta", "must be finite"));
        }
        let n = self.phi_coeffs.len();
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::param(
                "phi_coeffs",
                format!("needs odd length 2k+1 with k >= 1, got {n}"),
            ));
        }
        if self.phi_coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("phi_coeffs", "must be finite"));
        }
        if self.phi_coeffs[n - 1] <= 0.0 {
            return Err(Error::param("phi_coeffs", "leading coefficient a_{2k+1} must be > 0"));
        }
        if self.psi_coeffs.len() != self.k() + 1 {
            return Err(Error::param(
                "psi_coeffs",
                format!("needs k+1 = {} entries, got {}", self.k() + 1, self.psi_coeffs.len()),
            ));
        }
        if self.psi_coeffs.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("psi_coeffs", "must be finite"));
        }
        Ok(())
    }

    pub fn beta_norm_sq(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    fn m_is_integer(&self) -> bool {
        self.m.fract() == 0.0 && self.m < i32::MAX as f64
    }

    /// `M(u) = |u|^{2m}`.
    pub fn mobility(&self, u: f64) -> f64 {
        abs_pow(u, 2.0 * self.m)
    }

    /// `M_θ(u)`; requires `θ > 0`.
    pub fn mobility_reg(&self, u: f64) -> Result<f64> {
        if self.theta <= 0.0 {
            return Err(Error::param("theta", "regularized mobility needs theta > 0"));
        }
        Ok(self.mobility_reg_unchecked(u))
    }

    fn mobility_reg_unchecked(&self, u: f64) -> f64 {
        if u * u > self.theta {
            self.mobility(u)
        } else {
            self.theta.powf(self.m)
        }
    }

    /// The mobility used by the solver: `M_θ` for `θ > 0`, `M` for `θ = 0`.
    pub fn effective_mobility(&self, u: f64) -> f64 {
        if self.theta > 0.0 {
            self.mobility_reg_unchecked(u)
        } else {
            self.mobility(u)
        }
    }

    pub fn phi(&self, u: f64) -> f64 {
        // φ(u) = u·(a_1 + a_2 u + ...)
        u * horner(&self.phi_coeffs, u)
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        horner_scaled(&self.phi_coeffs, u, |i| (i + 1) as f64)
    }

    /// `Φ(u) = ∫_0^u φ`, the bulk potential.
    pub fn potential(&self, u: f64) -> f64 {
        u * u * horner_scaled(&self.phi_coeffs, u, |i| 1.0 / (i + 2) as f64)
    }

    /// `ψ(u) = Σ b_i u^{i+m}`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        if self.m_is_integer() {
            return Ok(u.powi(self.m as i32) * horner(&self.psi_coeffs, u));
        }
        if u >= 0.0 {
            return Ok(u.powf(self.m) * horner(&self.psi_coeffs, u));
        }
        if !self.signed_power {
            return Err(Error::PsiDomain { value: u });
        }
        // sign(u)^i |u|^{i+m} = |u|^m (sign(u)|u|)^i = |u|^m u^i
        Ok(u.abs().powf(self.m) * horner(&self.psi_coeffs, u))
    }

    /// `ψ'(u)`, same domain rules as [`ModelParams::psi`].
    pub fn psi_prime(&self, u: f64) -> Result<f64> {
        let terms = self.psi_coeffs.iter().enumerate();
        if self.m_is_integer() {
            let m = self.m as i32;
            return Ok(terms
                .filter(|(i, _)| *i as i32 + m >= 1)
                .map(|(i, b)| b * (i as f64 + self.m) * u.powi(i as i32 + m - 1))
                .sum());
        }
        if u < 0.0 && !self.signed_power {
            return Err(Error::PsiDomain { value: u });
        }
        let s = u.signum();
        Ok(terms
            .map(|(i, b)| {
                let sign = if (i + 1) % 2 == 0 { 1.0 } else { s };
                b * (i as f64 + self.m) * sign * u.abs().powf(i as f64 + self.m - 1.0)
            })
            .sum())
    }

    pub fn phi_field(&self, u: &PhysicalField) -> PhysicalField {
        u.map(|v| self.phi(v))
    }

    pub fn psi_field(&self, u: &PhysicalField) -> Result<PhysicalField> {
        let values = u.values().iter().map(|&v| self.psi(v)).collect::<Result<Vec<_>>>()?;
        Ok(PhysicalField::from_raw(*u.domain(), values))
    }

    pub fn mobility_field(&self, u: &PhysicalField) -> PhysicalField {
        u.map(|v| self.effective_mobility(v))
    }
}

fn abs_pow(u: f64, p: f64) -> f64 {
    let a = u.abs();
    if p.fract() == 0.0 && p < i32::MAX as f64 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// `Σ w(i) c_i x^i`.
fn horner_scaled(c: &[f64], x: f64, w: impl Fn(usize) -> f64) -> f64 {
    if x.abs() > COMPENSATED_HORNER_ABOVE {
        let scaled: Vec<f64> = c.iter().enumerate().map(|(i, a)| w(i) * a).collect();
        return compensated_horner(&scaled, x);
    }
    c.iter().enumerate().rev().fold(0.0, |acc, (i, &a)| acc * x + w(i) * a)
}

/// `Σ c_i x^i` with `c` in ascending order.
pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    if x.abs() > COMPENSATED_HORNER_ABOVE {
        return compensated_horner(c, x);
    }
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Horner with error-free transformations; roughly twice the working precision.
pub(crate) fn compensated_horner(c: &[f64], x: f64) -> f64 {
    let mut it = c.iter().rev();
    let Some(&lead) = it.next() else {
        return 0.0;
    };
    let mut s = lead;
    let mut err = 0.0;
    for &a in it {
        let (p, pi) = two_prod(s, x);
        let (sn, sigma) = two_sum(p, a);
        s = sn;
        err = err * x + (pi + sigma);
    }
    s + err
}

fn check_field(u: &PhysicalField, context: &'static str) -> Result<()> {
    let max_abs = u.values().iter().fold(0.0_f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::INFINITY });
    if max_abs > BLOWUP_THRESHOLD || !max_abs.is_finite() {
        return Err(Error::Overflow { context, max_abs });
    }
    Ok(())
}

fn check_output(f: &SpectralField, context: &'static str) -> Result<()> {
    if f.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Overflow {
            context,
            max_abs: f64::INFINITY,
        });
    }
    Ok(())
}

/// `μ = -γ Δu + φ(u)`, dealiased.
pub fn chemical_potential(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    u.check_symmetry()?;
    let phys = inverse_unchecked(u);
    check_field(&phys, "chemical potential")?;
    chemical_potential_from(u, &phys, params)
}

fn chemical_potential_from(u: &SpectralField, phys: &PhysicalField, params: &ModelParams) -> Result<SpectralField> {
    let nonlinear = forward_unchecked(&params.phi_field(phys));
    let mu = u.laplacian().scale(-params.gamma).add(&nonlinear).dealias();
    check_output(&mu, "chemical potential")?;
    Ok(mu)
}

/// `∇·(M_θ(u) ∇μ) + β·∇ψ(u)`. Products are formed on the grid and dealiased.
pub fn rhs(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    u.check_symmetry()?;
    rhs_with_mobility_max(u, params).map(|(r, _)| r)
}

/// The right-hand side together with the grid maximum of the mobility.
pub(crate) fn rhs_with_mobility_max(u: &SpectralField, params: &ModelParams) -> Result<(SpectralField, f64)> {
    let phys = inverse_unchecked(u);
    check_field(&phys, "right-hand side")?;
    let mu = chemical_potential_from(u, &phys, params)?;
    let mobility = params.mobility_field(&phys);
    let max_mobility = mobility.values().iter().fold(0.0_f64, |a, &b| a.max(b));

    let flux: Vec<SpectralField> = mu
        .gradient()
        .iter()
        .map(|g| {
            let g = inverse_unchecked(g);
            let prod: Vec<f64> = g.values().iter().zip(mobility.values()).map(|(a, b)| a * b).collect();
            forward_unchecked(&PhysicalField::from_raw(*u.domain(), prod)).dealias()
        })
        .collect();
    let mut out = divergence(&flux)?;

    if params.beta.iter().any(|&b| b != 0.0) {
        let psi = forward_unchecked(&params.psi_field(&phys)?).dealias();
        for (axis, &b) in params.beta.iter().enumerate() {
            if b != 0.0 {
                out = out.axpy(b, &psi.derivative(axis));
            }
        }
    }
    check_output(&out, "right-hand side")?;
    Ok((out, max_mobility))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward, inverse, DomainSpec};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn dw() -> ModelParams {
        ModelParams::double_well(1, 0.01, 0.01, 1.0)
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn validation_names_fields() {
        let p = dw();
        p.validate(1).unwrap();
        let bad = |f: &dyn Fn(&mut ModelParams), name: &str| {
            let mut q = p.clone();
            f(&mut q);
            match q.validate(1) {
                Err(Error::InvalidParameter { name: n, .. }) => assert_eq!(n, name),
                other => panic!("expected error on {name}, got {other:?}"),
            }
        };
        bad(&|q| q.gamma = -1.0, "gamma");
        bad(&|q| q.m = 0.0, "m");
        bad(&|q| q.theta = -0.1, "theta");
        bad(&|q| q.beta = vec![1.0, 0.0], "beta");
        bad(&|q| q.phi_coeffs = vec![1.0, 1.0], "phi_coeffs");
        bad(&|q| q.phi_coeffs = vec![1.0], "phi_coeffs");
        bad(&|q| q.phi_coeffs = vec![-1.0, 0.0, -1.0], "phi_coeffs");
        bad(&|q| q.psi_coeffs = vec![1.0], "psi_coeffs");
        bad(&|q| q.gamma = f64::NAN, "gamma");
    }

    #[test]
    fn mobility_examples() {
        let mut p = dw();
        assert_eq!(p.mobility(0.0), 0.0);
        assert_eq!(p.mobility(2.0), 4.0);
        p.m = 1.5;
        assert!((p.mobility(-0.5) - 0.125).abs() < 1e-16);
        assert_eq!(p.mobility(-0.3), p.mobility(0.3));
    }

    #[test]
    fn regularized_mobility_examples() {
        let mut p = dw();
        p.theta = 0.01;
        assert!((p.mobility_reg(0.05).unwrap() - 0.01).abs() < 1e-18);
        assert_eq!(p.mobility_reg(1.0).unwrap(), 1.0);
        let edge = p.theta.sqrt();
        assert!((p.mobility_reg(edge).unwrap() - p.theta.powf(p.m)).abs() < 1e-15);
        assert!((p.mobility(edge * (1.0 + 1e-12)) - p.theta.powf(p.m)).abs() < 1e-12);
        p.theta = 0.0;
        assert!(matches!(p.mobility_reg(0.5), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn regularized_mobility_properties() {
        let samples: Vec<f64> = (0..401).map(|i| -2.0 + 0.01 * i as f64).collect();
        for m in [0.3, 1.0, 1.5, 2.0] {
            let mut p = dw();
            p.m = m;
            for theta in [1.0, 0.1, 0.01, 1e-3] {
                p.theta = theta;
                let floor = theta.powf(m);
                for &u in &samples {
                    let r = p.mobility_reg(u).unwrap();
                    assert!(r >= floor * (1.0 - 1e-15));
                    assert_eq!(r, p.mobility_reg(-u).unwrap());
                    if u * u > theta {
                        assert_eq!(r, p.mobility(u));
                    }
                }
            }
            // pointwise convergence as θ ↓ 0
            for &u in &[0.0, 0.01, -0.2, 0.7] {
                let errs: Vec<f64> = (1..8)
                    .map(|i| {
                        p.theta = 4f64.powi(-i);
                        (p.mobility_reg(u).unwrap() - p.mobility(u)).abs()
                    })
                    .collect();
                assert!(errs.windows(2).all(|w| w[1] <= w[0]));
                // |M_θ - M| ≤ θ^m
                assert!(*errs.last().unwrap() <= 4f64.powi(-7).powf(m) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn phi_examples() {
        let p = dw();
        for u in [1.0, 0.0, -1.0] {
            assert_eq!(p.phi(u), 0.0);
        }
        assert!((p.potential(1.0) + 0.25).abs() < 1e-16);
        assert_eq!(p.potential(0.0), 0.0);
    }

    #[test]
    fn finite_difference_derivatives() {
        let p = ModelParams {
            phi_coeffs: vec![-1.2, 0.3, 0.8, -0.4, 2.0],
            psi_coeffs: vec![0.3, -0.5, 0.25],
            ..dw()
        };
        let h = 1e-6;
        for u in [0.7, -1.3, 0.05, 2.5] {
            let fd = (p.phi(u + h) - p.phi(u - h)) / (2.0 * h);
            let fd_pot = (p.potential(u + h) - p.potential(u - h)) / (2.0 * h);
            let fd_psi = (p.psi(u + h).unwrap() - p.psi(u - h).unwrap()) / (2.0 * h);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
            assert!(rel(fd, p.phi_prime(u)) < 1e-6);
            assert!(rel(fd_pot, p.phi(u)) < 1e-6);
            assert!(rel(fd_psi, p.psi_prime(u).unwrap()) < 1e-6);
        }
        let mut q = p.clone();
        q.m = 1.5;
        q.signed_power = true;
        for u in [0.7, -1.3, 0.4] {
            let fd = (q.psi(u + h).unwrap() - q.psi(u - h).unwrap()) / (2.0 * h);
            assert!((fd - q.psi_prime(u).unwrap()).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn psi_examples() {
        let mut p = dw();
        p.psi_coeffs = vec![1.0, 0.0];
        assert_eq!(p.psi(2.0).unwrap(), 2.0);
        p.psi_coeffs = vec![0.7, -0.2];
        assert_eq!(p.psi(0.0).unwrap(), 0.0);
        p.m = 2.0;
        p.psi_coeffs = vec![0.0, 1.0];
        assert!((p.psi(-1.5).unwrap() + 3.375).abs() < 1e-15);
        p.m = 0.5;
        assert!(matches!(p.psi(-1.0), Err(Error::PsiDomain { .. })));
        assert_eq!(p.psi(0.0).unwrap(), 0.0);
        p.signed_power = true;
        // sign(u)^1 |u|^{1.5}
        assert!((p.psi(-4.0).unwrap() + 8.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_horner_matches_exact_integers() {
        // (x - 1)^5 expanded, at x = 1e3 + 0.5: exact value 999.5^5
        let c = [-1.0, 5.0, -10.0, 10.0, -5.0, 1.0];
        let x = 1000.5_f64;
        let exact = 999.5_f64.powi(5);
        assert!((compensated_horner(&c, x) - exact).abs() <= 1e-15 * exact);
        assert!((horner(&c, 3.0) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn chemical_potential_cases() {
        let d = DomainSpec::new(1, 32).unwrap();
        let p = dw();
        let c = forward(&PhysicalField::constant(d, 0.4)).unwrap();
        let mu = inverse(&chemical_potential(&c, &p).unwrap()).unwrap();
        assert!(mu.values().iter().all(|&v| (v - p.phi(0.4)).abs() < 1e-15));

        let lin = ModelParams {
            gamma: 1.0,
            phi_coeffs: vec![0.0, 0.0, 0.0],
            ..dw()
        };
        let s = forward(&PhysicalField::from_fn(d, |x| x[0].sin())).unwrap();
        let mu = inverse(&chemical_potential(&s, &lin).unwrap()).unwrap();
        let exact = PhysicalField::from_fn(d, |x| x[0].sin());
        let e = max_diff(mu.values(), exact.values());
        assert!(e < 1e-13, "{e}");
    }

    #[test]
    fn chemical_potential_matches_dense_quadrature() {
        let d = DomainSpec::new(1, 32).unwrap();
        let p = ModelParams { gamma: 0.3, ..dw() };
        let u = forward(&PhysicalField::from_fn(d, |x| x[0].cos())).unwrap();
        let mu = chemical_potential(&u, &p).unwrap();
        // oversampled direct-sum quadrature of μ(x) e^{-ikx}
        let m = 1024;
        for k in -10i64..=10 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let x = 2.0 * PI * j as f64 / m as f64;
                let v = p.gamma * x.cos() + p.phi(x.cos());
                acc += Complex64::from_polar(v, -(k as f64) * x);
            }
            acc /= m as f64;
            assert!((acc - mu.coeff([k, 0])).norm() < 1e-10, "mode {k}");
        }
    }

    #[test]
    fn rhs_of_constant_vanishes() {
        for dim in [1, 2] {
            let d = DomainSpec::new(dim, 16).unwrap();
            let p = ModelParams::double_well(dim, 0.02, 0.01, 1.0);
            let u = forward(&PhysicalField::constant(d, 0.37)).unwrap();
            let r = rhs(&u, &p).unwrap();
            assert!(r.coeffs().iter().all(|c| c.norm() < 1e-15));
        }
    }

    #[test]
    fn rhs_constant_mobility_closed_form() {
        let d = DomainSpec::new(1, 32).unwrap();
        let p = ModelParams {
            gamma: 0.2,
            m: 1.5,
            theta: 0.25,
            beta: vec![0.0],
            ..dw()
        };
        let eps = 0.1;
        let u = forward(&PhysicalField::from_fn(d, |x| eps * x[0].sin())).unwrap();
        let r = inverse(&rhs(&u, &p).unwrap()).unwrap();
        // θ^m Δ(-γΔu + u³ - u) for u = ε sin x, using sin³ = (3 sin x - sin 3x)/4
        let mob = p.theta.powf(p.m);
        let exact = PhysicalField::from_fn(d, |x| {
            let s1 = x[0].sin();
            let s3 = (3.0 * x[0]).sin();
            mob * (-p.gamma * eps * s1 + eps.powi(3) * (-3.0 * s1 + 9.0 * s3) / 4.0 + eps * s1)
        });
        assert!(max_diff(r.values(), exact.values()) < 1e-14);
    }

    #[test]
    fn rhs_convective_term() {
        let d = DomainSpec::new(1, 32).unwrap();
        let p = ModelParams {
            gamma: 1.0,
            phi_coeffs: vec![0.0, 0.0, 0.0],
            beta: vec![2.0],
            ..dw()
        };
        let u = forward(&PhysicalField::from_fn(d, |x| x[0].sin())).unwrap();
        let with = rhs(&u, &p).unwrap();
        let without = rhs(&u, &ModelParams { beta: vec![0.0], ..p.clone() }).unwrap();
        let conv = inverse(&with.sub(&without)).unwrap();
        // β ∂x (sin² x / 2) = β sin(2x)/2
        let exact = PhysicalField::from_fn(d, |x| (2.0 * x[0]).sin());
        assert!(max_diff(conv.values(), exact.values()) < 1e-14);
    }

    #[test]
    fn rhs_flags_overflow() {
        let d = DomainSpec::new(1, 16).unwrap();
        let u = forward(&PhysicalField::constant(d, 2e6)).unwrap();
        assert!(matches!(rhs(&u, &dw()), Err(Error::Overflow { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rhs_has_zero_mean(coeffs in proptest::collection::vec(-0.5f64..0.5, 12), mean in -1.0f64..1.0, theta in 1e-3f64..0.5) {
                let d = DomainSpec::new(1, 64).unwrap();
                let modes: Vec<_> = coeffs.chunks(2).enumerate()
                    .map(|(k, c)| ([k as i64 + 1, 0], Complex64::new(c[0], c[1]) / (1.0 + k as f64)))
                    .chain(std::iter::once(([0, 0], Complex64::new(mean, 0.0))))
                    .collect();
                let u = SpectralField::from_modes(d, &modes);
                let p = ModelParams::double_well(1, 0.05, theta, 1.0);
                let r = rhs(&u, &p).unwrap();
                prop_assert!(r.coeffs()[0].norm() <= 1e-13);
            }
        }
    }
}
