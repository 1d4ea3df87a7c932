//! Energy identity for the current gap:
//!
//! `⟨f, (Λ₀ − Λ) f⟩ = ∫_D |∇u₀|² − ∫_{D₁} |∇u|² − ∫_{Γ₀} (η̄ |du/ds|² + γ̄ |u|²) ds`
//!
//! with the pairing `⟨φ, ψ⟩ = ∫_{Γ₁} φ ψ̄ ds`.
//!
//! The area integrals reduce to mode sums by orthogonality of `e^{inθ}`. For
//! `R_n = a_n r^k + b_n r^{-k}`, `k = |n| ≥ 1`, the cross terms of `|R_n'|² r`
//! and `k² |R_n|² / r` cancel and
//!
//! `∫_ρ^1 (|R_n'|² + k² |R_n|² / r²) r dr = k (|a_n|² (1 − ρ^{2k}) + |b_n|² (ρ^{-2k} − 1))`,
//!
//! while the `ln r` mode contributes `|b₀|² (−ln ρ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{current_gap, solve_defective, AnnulusConfig, ImpedancePair};
use crate::error::Result;
use crate::fourier::{boundary_pairing, synthesize, FourierCoefficients};

/// The four integrals on the right-hand side of the energy identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `∫_D |∇u₀|² dx`
    pub healthy: f64,
    /// `∫_{D₁} |∇u|² dx`
    pub defective: f64,
    /// `∫_{Γ₀} |du/ds|² ds`
    pub tangential: f64,
    /// `∫_{Γ₀} |u|² ds`
    pub trace: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentity {
    /// Discrete pairing `Σ_j f(θ_j) conj((Λ₀−Λ)f)(θ_j) · 2π/M`.
    pub lhs: Complex64,
    /// Right-hand side assembled from [`EnergyTerms`].
    pub rhs: Complex64,
}

impl EnergyIdentity {
    pub fn relative_residual(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.lhs.norm().max(1e-30)
    }
}

fn effective_data(f: &FourierCoefficients, config: &AnnulusConfig) -> FourierCoefficients {
    f.truncated(f.order().min(config.kernel_truncation))
}

/// Closed-form mode sums for the energy terms of the defective solution with
/// Dirichlet data `f` (truncated at the kernel order).
pub fn energy_terms(
    f: &FourierCoefficients,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
) -> Result<EnergyTerms> {
    let f = effective_data(f, config);
    let h = solve_defective(&f, config, imp)?;
    let rho = config.rho;

    let mut healthy = 0.0;
    let mut defective = h.b.get(0).norm_sqr() * (-rho.ln());
    let mut tangential = 0.0;
    let mut trace = 0.0;
    for n in f.modes() {
        let u = h.radial_mode(n, rho).norm_sqr();
        trace += u;
        if n == 0 {
            continue;
        }
        let k = n.unsigned_abs() as f64;
        let r2k = rho.powi(2 * n.unsigned_abs() as i32);
        healthy += k * f.get(n).norm_sqr();
        defective += k * (h.a.get(n).norm_sqr() * (1.0 - r2k) + h.b.get(n).norm_sqr() * (1.0 / r2k - 1.0));
        tangential += k * k * u;
    }
    Ok(EnergyTerms {
        healthy: 2.0 * PI * healthy,
        defective: 2.0 * PI * defective,
        tangential: 2.0 * PI * tangential / rho,
        trace: 2.0 * PI * rho * trace,
    })
}

/// Both sides of the energy identity for Dirichlet data `f`.
pub fn energy_identity_residual(
    f: &FourierCoefficients,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
) -> Result<EnergyIdentity> {
    let f = effective_data(f, config);
    let m = config.collocation_points;
    let angles: Vec<f64> = (0..m).map(|j| crate::fourier::grid_angle(j, m)).collect();
    let gap = current_gap(&f, config, imp)?;
    let lhs = boundary_pairing(&synthesize(&f, &angles), &synthesize(&gap, &angles), 1.0);

    let t = energy_terms(&f, config, imp)?;
    let rhs = Complex64::new(t.healthy - t.defective, 0.0)
        - (imp.eta.conj() * t.tangential + imp.gamma.conj() * t.trace);
    Ok(EnergyIdentity { lhs, rhs })
}
