//! Recovery of the impedance coefficients on a known inner boundary.
//!
//! Cauchy data `(f, g)` on the unit circle is continued to `r = ρ` through the
//! annulus series. Multiplying the boundary condition by `ū` and integrating
//! by parts along the closed curve `Γ₀` gives, for every solution,
//!
//! `∫_{Γ₀} ū ∂_r u ds = ∫_{Γ₀} η |du/ds|² + γ |u|² ds`,
//!
//! which is linear in `(η, γ)`. Each Cauchy pair contributes one row.

use std::f64::consts::PI;

use nalgebra::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{trace_current_defective, AnnulusConfig, HarmonicCoefficients, ImpedancePair};
use crate::fourier::{grid_angle, synthesize, FourierCoefficients, PeriodicGridFunction};
use crate::operator::{CMatrix, CVector};

/// Series truncation used for data completion.
pub const DEFAULT_ORDER: usize = 10;
/// Quadrature points on `Γ₀`.
pub const DEFAULT_QUADRATURE: usize = 256;
/// Systems with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Voltage `f` and current `g = ∂_r u` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyPair {
    f: FourierCoefficients,
    g: FourierCoefficients,
}

impl CauchyPair {
    pub fn new(f: FourierCoefficients, g: FourierCoefficients) -> Result<Self> {
        if f.order() != g.order() {
            return Err(invalid(format!(
                "Cauchy pair orders differ ({} vs {})",
                f.order(),
                g.order()
            )));
        }
        Ok(Self { f, g })
    }

    pub fn f(&self) -> &FourierCoefficients {
        &self.f
    }

    pub fn g(&self) -> &FourierCoefficients {
        &self.g
    }

    pub fn order(&self) -> usize {
        self.f.order()
    }

    pub fn with_current(&self, g: FourierCoefficients) -> Result<Self> {
        Self::new(self.f.clone(), g)
    }
}

/// Noiseless Cauchy pair of the defective problem for voltage `f`.
pub fn synthetic_pair(f: &FourierCoefficients, config: &AnnulusConfig, imp: &ImpedancePair) -> Result<CauchyPair> {
    CauchyPair::new(f.clone(), trace_current_defective(f, config, imp)?)
}

/// `g^δ = g + δ e^{ipθ}`.
pub fn add_current_noise(g: &FourierCoefficients, delta: f64, p: usize) -> Result<FourierCoefficients> {
    if p == 0 || p > g.order() {
        return Err(invalid(format!("noise mode p = {p} outside 1..={}", g.order())));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("noise level must be >= 0, got {delta}")));
    }
    let mut out = g.clone();
    let n = p as i64;
    out.set(n, g.get(n) + delta)?;
    Ok(out)
}

/// Continues `(f, g)` to the annulus series:
/// `a_n = (|n| f_n + g_n)/(2|n|)`, `b_n = (|n| f_n − g_n)/(2|n|)`, `a₀ = f₀`, `b₀ = g₀`.
pub fn complete_data(pair: &CauchyPair, order: usize, rho: f64) -> Result<HarmonicCoefficients> {
    if order > pair.order() {
        return Err(invalid(format!(
            "completion order {order} exceeds data order {}",
            pair.order()
        )));
    }
    let f = pair.f.truncated(order);
    let g = pair.g.truncated(order);
    let a = f.map(|n, fv| {
        if n == 0 {
            fv
        } else {
            let k = n.unsigned_abs() as f64;
            (fv * k + g.get(n)) / (2.0 * k)
        }
    });
    let b = f.map(|n, fv| {
        if n == 0 {
            g.get(0)
        } else {
            let k = n.unsigned_abs() as f64;
            (fv * k - g.get(n)) / (2.0 * k)
        }
    });
    HarmonicCoefficients::new(a, b, rho)
}

/// Samples on `Γ₀` at `θ_j = 2πj/M`.
#[derive(Debug, Clone)]
pub struct InnerTrace {
    pub u: PeriodicGridFunction,
    /// `∂_ν u = −∂_r u`.
    pub dnu_u: PeriodicGridFunction,
    /// `du/ds = (1/ρ) ∂_θ u`, from the series.
    pub ds_u: PeriodicGridFunction,
}

pub fn trace_on_gamma0(h: &HarmonicCoefficients, rho: f64, m: usize) -> Result<InnerTrace> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("inner radius must lie in (0, 1), got {rho}")));
    }
    let angles: Vec<f64> = (0..m).map(|j| grid_angle(j, m)).collect();
    let u = h.trace_coefficients(rho)?;
    let dr = h.radial_derivative_coefficients(rho)?;
    let ds = u.map(|n, v| v * Complex64::new(0.0, n as f64 / rho));
    Ok(InnerTrace {
        u: PeriodicGridFunction::new(synthesize(&u, &angles))?,
        dnu_u: PeriodicGridFunction::new(synthesize(&dr, &angles).into_iter().map(|v| -v).collect())?,
        ds_u: PeriodicGridFunction::new(synthesize(&ds, &angles))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "lowercase")]
pub enum BasisFunction {
    Constant,
    Cos(u32),
    Sin(u32),
}

impl BasisFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            BasisFunction::Constant => 1.0,
            BasisFunction::Cos(k) => (k as f64 * theta).cos(),
            BasisFunction::Sin(k) => (k as f64 * theta).sin(),
        }
    }
}

/// Expansion functions `η ≈ Σ η_n ψ¹_n`, `γ ≈ Σ γ_n ψ²_n` on `Γ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub eta: Vec<BasisFunction>,
    pub gamma: Vec<BasisFunction>,
}

impl BasisSet {
    pub fn constant() -> Self {
        Self {
            eta: vec![BasisFunction::Constant],
            gamma: vec![BasisFunction::Constant],
        }
    }

    pub fn unknowns(&self) -> usize {
        self.eta.len() + self.gamma.len()
    }

    /// Both families must be nonempty and linearly independent on the grid.
    pub fn check(&self, m: usize) -> Result<()> {
        for (name, fam) in [("eta", &self.eta), ("gamma", &self.gamma)] {
            if fam.is_empty() {
                return Err(invalid(format!("{name} basis is empty")));
            }
            let samples = CMatrix::from_fn(m, fam.len(), |j, k| Complex64::new(fam[k].eval(grid_angle(j, m)), 0.0));
            let cond = condition_number(&samples);
            let vanishing = samples.column_iter().any(|col| col.norm() <= 1e-8 * (m as f64).sqrt());
            if vanishing || !(cond <= MAX_CONDITION) {
                return Err(invalid(format!(
                    "{name} basis is linearly dependent on {m} points (condition {cond:e})"
                )));
            }
        }
        Ok(())
    }
}

fn condition_number(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Rows of the energy relation, one per retained Cauchy pair.
#[derive(Debug, Clone)]
pub struct ImpedanceSystem {
    pub matrix: CMatrix,
    pub rhs: CVector,
    pub condition: f64,
    /// Input indices of pairs dropped because `u ≡ 0` on `Γ₀`.
    pub excluded: Vec<usize>,
}

impl ImpedanceSystem {
    pub fn is_ill_posed(&self) -> bool {
        !(self.condition <= MAX_CONDITION)
    }
}

/// Row for pair `m`: `rhs = −Σ_j ū ∂_ν u ρ 2π/M`, columns
/// `Σ_j ψ¹_n |du/ds|² ρ 2π/M` then `Σ_j ψ² _n |u|² ρ 2π/M`.
pub fn assemble_impedance_system(
    pairs: &[CauchyPair],
    rho: f64,
    basis: &BasisSet,
    m: usize,
    order: usize,
) -> Result<ImpedanceSystem> {
    if pairs.is_empty() {
        return Err(invalid("at least one Cauchy pair is required"));
    }
    basis.check(m)?;
    let w = rho * 2.0 * PI / m as f64;
    let mut rows: Vec<(Vec<Complex64>, Complex64)> = Vec::new();
    let mut excluded = Vec::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let h = complete_data(pair, order, rho)?;
        let tr = trace_on_gamma0(&h, rho, m)?;
        if tr.u.values().iter().all(|v| v.norm() == 0.0) {
            log::warn!("Cauchy pair {idx} has a vanishing trace on the inner boundary; row excluded");
            excluded.push(idx);
            continue;
        }
        let rhs: Complex64 = -tr
            .u
            .values()
            .iter()
            .zip(tr.dnu_u.values())
            .map(|(u, d)| u.conj() * d)
            .sum::<Complex64>()
            * w;
        let mut row = Vec::with_capacity(basis.unknowns());
        for psi in &basis.eta {
            let s: f64 = (0..m).map(|j| psi.eval(grid_angle(j, m)) * tr.ds_u.values()[j].norm_sqr()).sum();
            row.push(Complex64::new(s * w, 0.0));
        }
        for psi in &basis.gamma {
            let s: f64 = (0..m).map(|j| psi.eval(grid_angle(j, m)) * tr.u.values()[j].norm_sqr()).sum();
            row.push(Complex64::new(s * w, 0.0));
        }
        rows.push((row, rhs));
    }
    if rows.is_empty() {
        return Err(invalid("every Cauchy pair has a vanishing inner trace"));
    }
    let ncols = basis.unknowns();
    let matrix = CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i].0[j]);
    let rhs = CVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let condition = condition_number(&matrix);
    Ok(ImpedanceSystem {
        matrix,
        rhs,
        condition,
        excluded,
    })
}

/// Least-squares solution of an impedance system with its residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaryingRecovery {
    pub eta_coeffs: Vec<Complex64>,
    pub gamma_coeffs: Vec<Complex64>,
    /// `‖matrix · x − rhs‖₂`.
    pub residual: f64,
    pub condition: f64,
}

fn solve_system(sys: &ImpedanceSystem, basis: &BasisSet) -> Result<VaryingRecovery> {
    if sys.matrix.nrows() < basis.unknowns() {
        return Err(invalid(format!(
            "{} usable Cauchy pairs for {} unknowns",
            sys.matrix.nrows(),
            basis.unknowns()
        )));
    }
    if sys.is_ill_posed() {
        return Err(Error::IllConditioned {
            condition: sys.condition,
        });
    }
    let svd = SVD::new(sys.matrix.clone(), true, true);
    let x = svd
        .solve(&sys.rhs, 0.0)
        .map_err(|e| Error::IllConditioned {
            condition: if e.is_empty() { f64::INFINITY } else { sys.condition },
        })?;
    let residual = (&sys.matrix * &x - &sys.rhs).norm();
    let ne = basis.eta.len();
    Ok(VaryingRecovery {
        eta_coeffs: x.iter().take(ne).copied().collect(),
        gamma_coeffs: x.iter().skip(ne).copied().collect(),
        residual,
        condition: sys.condition,
    })
}

pub fn recover_varying(
    pairs: &[CauchyPair],
    rho: f64,
    basis: &BasisSet,
    m: usize,
    order: usize,
) -> Result<VaryingRecovery> {
    let sys = assemble_impedance_system(pairs, rho, basis, m, order)?;
    solve_system(&sys, basis)
}

/// Constant `(η, γ)` from two or more pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecovery {
    pub eta: Complex64,
    pub gamma: Complex64,
    pub residual: f64,
    pub condition: f64,
}

pub fn recover_constants(pairs: &[CauchyPair], rho: f64, m: usize, order: usize) -> Result<ConstantRecovery> {
    if pairs.len() < 2 {
        return Err(invalid(format!(
            "constant recovery needs at least 2 Cauchy pairs, got {}",
            pairs.len()
        )));
    }
    let r = recover_varying(pairs, rho, &BasisSet::constant(), m, order)?;
    Ok(ConstantRecovery {
        eta: r.eta_coeffs[0],
        gamma: r.gamma_coeffs[0],
        residual: r.residual,
        condition: r.condition,
    })
}
