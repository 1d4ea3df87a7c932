//! Exact series solution of the electrostatic problem on the unit disk with
//! a concentric circular inclusion of radius `ρ` carrying a generalized
//! impedance boundary condition (GIBC).
//!
//! # Conventions
//!
//! These hold everywhere in the crate:
//!
//! * the outer boundary `Γ₁` is the unit circle, with outward normal `∂_r`,
//!   so the measured current is `∂_ν u = ∂_r u(1, θ)`;
//! * the inclusion boundary `Γ₀` is the circle `r = ρ`; the normal `ν` points
//!   out of the annulus `D₁`, i.e. toward the origin, so `∂_ν = -∂_r` there;
//! * arc length on `Γ₀` is `ds = ρ dθ`, hence `d/ds = (1/ρ) d/dθ`; on `Γ₁`,
//!   `ds = dθ`.
//!
//! With constant coefficients the GIBC on `Γ₀` reads
//! `(-∂_r - (η/ρ²) ∂²_θ + γ) u(ρ, θ) = 0`.
//!
//! In the annulus `u = a₀ + b₀ ln r + Σ_{n≠0} (a_n r^{|n|} + b_n r^{-|n|}) e^{inθ}`.

mod energy;
mod fd;

pub use energy::{energy_identity_residual, energy_terms, EnergyIdentity, EnergyTerms};
pub use fd::{fd_solve, FdSolution};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{unit_root, FourierCoefficients};

/// Complex GIBC coefficients `(η, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedancePair {
    pub eta: Complex64,
    pub gamma: Complex64,
}

impl ImpedancePair {
    /// Requires `Re η, Re γ > 0` and `Im η, Im γ ≥ 0`.
    pub fn new(eta: Complex64, gamma: Complex64) -> Result<Self> {
        let ok = |z: Complex64| z.re > 0.0 && z.im >= 0.0 && z.re.is_finite() && z.im.is_finite();
        if !ok(eta) || !ok(gamma) {
            return Err(invalid(format!(
                "impedance coefficients need positive real parts and nonnegative imaginary parts \
                 (eta = {eta}, gamma = {gamma})"
            )));
        }
        Ok(Self { eta, gamma })
    }

    /// Skips the sign checks. For limit studies (`η, γ → 0`) and parameter
    /// sweeps; the series routines still reject singular and resonant values.
    pub fn new_unchecked(eta: Complex64, gamma: Complex64) -> Self {
        Self { eta, gamma }
    }

    /// The sampling reconstruction needs `Im η > 0` and `Im γ > 0`.
    pub fn require_strict_absorption(&self) -> Result<()> {
        if self.eta.im > 0.0 && self.gamma.im > 0.0 {
            Ok(())
        } else {
            Err(invalid(format!(
                "sampling needs strictly positive imaginary parts (eta = {}, gamma = {})",
                self.eta, self.gamma
            )))
        }
    }
}

/// Geometry and discretization of the concentric annulus problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusConfig {
    pub rho: f64,
    pub kernel_truncation: usize,
    pub collocation_points: usize,
}

impl AnnulusConfig {
    pub const DEFAULT_TRUNCATION: usize = 20;
    pub const DEFAULT_POINTS: usize = 64;

    pub fn new(rho: f64, kernel_truncation: usize, collocation_points: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid(format!("inclusion radius must lie in (0, 1), got {rho}")));
        }
        if kernel_truncation < 1 {
            return Err(invalid("kernel truncation must be at least 1"));
        }
        if collocation_points <= 2 * kernel_truncation {
            return Err(invalid(format!(
                "need more than 2N = {} collocation points, got {collocation_points}",
                2 * kernel_truncation
            )));
        }
        Ok(Self {
            rho,
            kernel_truncation,
            collocation_points,
        })
    }

    /// Radius `ρ` with `N = 20`, `M = 64`.
    pub fn with_radius(rho: f64) -> Result<Self> {
        Self::new(rho, Self::DEFAULT_TRUNCATION, Self::DEFAULT_POINTS)
    }
}

/// Coefficients of the annulus series. `b` at mode 0 multiplies `ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    pub a: FourierCoefficients,
    pub b: FourierCoefficients,
    /// Smallest radius at which the series is meant to be evaluated
    /// (`ρ` for the defective problem, `0` for the healthy disk).
    pub inner_radius: f64,
}

impl HarmonicCoefficients {
    pub fn new(a: FourierCoefficients, b: FourierCoefficients, inner_radius: f64) -> Result<Self> {
        if a.order() != b.order() {
            return Err(invalid(format!(
                "harmonic coefficients need equal orders ({} vs {})",
                a.order(),
                b.order()
            )));
        }
        Ok(Self { a, b, inner_radius })
    }

    /// Healthy disk potential `u₀ = Σ f_n r^{|n|} e^{inθ}`.
    pub fn healthy(f: &FourierCoefficients) -> Self {
        Self {
            a: f.clone(),
            b: FourierCoefficients::zeros(f.order()),
            inner_radius: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.a.order()
    }

    fn has_singular_part(&self) -> bool {
        self.b.as_slice().iter().any(|v| *v != Complex64::new(0.0, 0.0))
    }

    /// Radial profile `R_n(r)` with `u = Σ R_n(r) e^{inθ}`.
    pub fn radial_mode(&self, n: i64, r: f64) -> Complex64 {
        let (a, b) = (self.a.get(n), self.b.get(n));
        if n == 0 {
            if b == Complex64::new(0.0, 0.0) {
                return a;
            }
            return a + b * r.ln();
        }
        let k = n.unsigned_abs() as i32;
        let mut v = a * r.powi(k);
        if b != Complex64::new(0.0, 0.0) {
            v += b * r.powi(-k);
        }
        v
    }

    /// `R_n'(r)`.
    pub fn radial_mode_derivative(&self, n: i64, r: f64) -> Complex64 {
        let (a, b) = (self.a.get(n), self.b.get(n));
        if n == 0 {
            if b == Complex64::new(0.0, 0.0) {
                return Complex64::new(0.0, 0.0);
            }
            return b / r;
        }
        let k = n.unsigned_abs() as i32;
        let kf = k as f64;
        let mut v = a * kf * r.powi(k - 1);
        if b != Complex64::new(0.0, 0.0) {
            v -= b * kf * r.powi(-k - 1);
        }
        v
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let tol = 1e-14;
        if !(r >= self.inner_radius - tol && r <= 1.0 + tol) {
            return Err(Error::Domain(format!(
                "radius {r} outside [{}, 1]",
                self.inner_radius
            )));
        }
        if r <= 0.0 && self.has_singular_part() {
            return Err(Error::Domain("singular series evaluated at r = 0".into()));
        }
        Ok(())
    }

    /// Fourier coefficients of `θ ↦ u(r, θ)`.
    pub fn trace_coefficients(&self, r: f64) -> Result<FourierCoefficients> {
        self.check_radius(r)?;
        Ok(self.a.map(|n, _| self.radial_mode(n, r)))
    }

    /// Fourier coefficients of `θ ↦ ∂_r u(r, θ)`.
    pub fn radial_derivative_coefficients(&self, r: f64) -> Result<FourierCoefficients> {
        self.check_radius(r)?;
        Ok(self.a.map(|n, _| self.radial_mode_derivative(n, r)))
    }
}

/// `σ_n = ρ^{2|n|} (|n|ρ − |n|²η − γρ²) / (|n|ρ + |n|²η + γρ²)` for `n ≠ 0`.
pub fn sigma_n(n: i64, config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Complex64> {
    if n == 0 {
        return Err(invalid("sigma_n is defined for n != 0; use sigma_0"));
    }
    let rho = config.rho;
    let k = n.unsigned_abs() as f64;
    let base = imp.gamma * rho * rho + imp.eta * (k * k);
    let num = -base + k * rho;
    let den = base + k * rho;
    if den.norm() == 0.0 {
        return Err(Error::SingularParameter(format!(
            "|n|rho + |n|^2 eta + gamma rho^2 = 0 at n = {n}"
        )));
    }
    Ok(num / den * rho.powi(2 * n.unsigned_abs() as i32))
}

/// `σ₀ = γρ / (γρ ln ρ − 1)`.
pub fn sigma_0(config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Complex64> {
    let gr = imp.gamma * config.rho;
    let den = gr * config.rho.ln() - 1.0;
    if den.norm() == 0.0 {
        return Err(Error::SingularParameter(
            "gamma rho ln(rho) = 1 makes sigma_0 singular".into(),
        ));
    }
    Ok(gr / den)
}

fn resonance_guard(n: i64, sigma: Complex64) -> Result<Complex64> {
    let denom = sigma + 1.0;
    if denom.norm() <= 1e-14 {
        return Err(Error::Resonance { mode: n });
    }
    Ok(denom)
}

/// `σ_n / (σ_n + 1)` with the resonance guard applied.
pub(crate) fn reflection_ratio(n: i64, config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Complex64> {
    let s = sigma_n(n, config, imp)?;
    Ok(s / resonance_guard(n, s)?)
}

/// Solves the defective problem for Dirichlet data `f` on the unit circle.
pub fn solve_defective(
    f: &FourierCoefficients,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
) -> Result<HarmonicCoefficients> {
    let s0 = sigma_0(config, imp)?;
    let mut a = FourierCoefficients::zeros(f.order());
    let mut b = FourierCoefficients::zeros(f.order());
    for (n, fn_) in f.iter() {
        if n == 0 {
            a.set(0, fn_)?;
            b.set(0, -s0 * fn_)?;
            continue;
        }
        let s = sigma_n(n, config, imp)?;
        let d = resonance_guard(n, s)?;
        a.set(n, fn_ / d)?;
        b.set(n, s * fn_ / d)?;
    }
    HarmonicCoefficients::new(a, b, config.rho)
}

/// Current `∂_r u(1, ·)` of the defective problem, mode by mode:
/// `-σ₀ f₀` at `n = 0` and `|n| f_n (1 − σ_n)/(σ_n + 1)` otherwise.
pub fn trace_current_defective(
    f: &FourierCoefficients,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
) -> Result<FourierCoefficients> {
    let s0 = sigma_0(config, imp)?;
    let mut g = FourierCoefficients::zeros(f.order());
    for (n, fn_) in f.iter() {
        let v = if n == 0 {
            -s0 * fn_
        } else {
            let s = sigma_n(n, config, imp)?;
            let d = resonance_guard(n, s)?;
            fn_ * (n.unsigned_abs() as f64) * (1.0 - s) / d
        };
        g.set(n, v)?;
    }
    Ok(g)
}

/// Current of the inclusion-free disk: `n ↦ |n| f_n`.
pub fn trace_current_healthy(f: &FourierCoefficients) -> FourierCoefficients {
    f.map(|n, v| v * n.unsigned_abs() as f64)
}

/// Eigenvalue of the current-gap operator `Λ₀ − Λ` on `e^{inθ}`:
/// `σ₀` for `n = 0`, `2|n| σ_n/(σ_n + 1)` otherwise.
pub fn gap_eigenvalue(n: i64, config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Complex64> {
    if n == 0 {
        return sigma_0(config, imp);
    }
    Ok(reflection_ratio(n, config, imp)? * (2.0 * n.unsigned_abs() as f64))
}

/// Current gap `(Λ₀ − Λ) f` in Fourier form.
pub fn current_gap(
    f: &FourierCoefficients,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
) -> Result<FourierCoefficients> {
    let mut out = FourierCoefficients::zeros(f.order());
    for (n, v) in f.iter() {
        out.set(n, v * gap_eigenvalue(n, config, imp)?)?;
    }
    Ok(out)
}

/// Evaluates the truncated series at `(r, θ)`.
pub fn evaluate_potential(h: &HarmonicCoefficients, r: f64, theta: f64) -> Result<Complex64> {
    h.check_radius(r)?;
    Ok(h
        .a
        .modes()
        .map(|n| h.radial_mode(n, r) * Complex64::from_polar(1.0, n as f64 * theta))
        .sum())
}

/// Per-mode weights of the kernel: `w_0 = σ₀/(2π)`, `w_n = |n| σ_n/(σ_n+1)/π`.
fn kernel_weights(config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Vec<Complex64>> {
    let mut w = Vec::with_capacity(config.kernel_truncation + 1);
    w.push(sigma_0(config, imp)? / (2.0 * PI));
    for n in 1..=config.kernel_truncation as i64 {
        w.push(reflection_ratio(n, config, imp)? * (n as f64 / PI));
    }
    Ok(w)
}

/// Truncated gap kernel `K(θ, φ)`, a function of `θ − φ` only.
pub fn gap_kernel(theta: f64, phi: f64, config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Complex64> {
    let w = kernel_weights(config, imp)?;
    let d = theta - phi;
    // σ_n depends on |n|, so the ±n terms pair into cosines.
    Ok(w[0]
        + w.iter()
            .enumerate()
            .skip(1)
            .map(|(n, wn)| wn * (2.0 * (n as f64 * d).cos()))
            .sum::<Complex64>())
}

/// `K(2πd/M)` for `d = 0..M`, mirrored so that `table[d] == table[M − d]`
/// holds bit-for-bit.
pub(crate) fn gap_kernel_table(config: &AnnulusConfig, imp: &ImpedancePair) -> Result<Vec<Complex64>> {
    let m = config.collocation_points;
    let w = kernel_weights(config, imp)?;
    let mut table = vec![Complex64::new(0.0, 0.0); m];
    for d in 0..=m / 2 {
        let v = w[0]
            + w.iter()
                .enumerate()
                .skip(1)
                .map(|(n, wn)| wn * (2.0 * unit_root(n as i64 * d as i64, m).re))
                .sum::<Complex64>();
        table[d] = v;
        table[(m - d) % m] = v;
    }
    Ok(table)
}
