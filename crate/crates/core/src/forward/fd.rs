//! Second-order finite-difference solver for the annulus problem, used as an
//! independent check on the series solution.
//!
//! Grid: `r_i = ρ + i h`, `i = 0..Nr`, `h = (1 − ρ)/(Nr − 1)`, and the angles
//! of the Dirichlet data. Rows:
//!
//! * interior: `u_rr + u_r / r + u_θθ / r² = 0`, all centered;
//! * `r = 1`: `u = f`;
//! * `r = ρ`: `−∂_r u − (η/ρ²) ∂²_θ u + γ u = 0` with the one-sided
//!   `∂_r u ≈ (−3u₀ + 4u₁ − u₂)/(2h)`.
//!
//! The angular stencil is circulant, so the discrete Fourier basis
//! diagonalizes it exactly and the 2-D system splits into one radial system
//! per angular frequency. Each is solved directly (Thomas algorithm after
//! eliminating the extra entry of the boundary row).

use num_complex::Complex64;

use super::{AnnulusConfig, ImpedancePair};
use crate::error::{Error, Result};
use crate::fourier::{unit_root, PeriodicGridFunction};

#[derive(Debug, Clone)]
pub struct FdSolution {
    pub radii: Vec<f64>,
    /// `potential[i][j] ≈ u(r_i, θ_j)`.
    pub potential: Vec<Vec<Complex64>>,
    /// One-sided second-order `∂_r u(1, θ_j)`.
    pub current: Vec<Complex64>,
}

impl FdSolution {
    pub fn inner_trace(&self) -> &[Complex64] {
        &self.potential[0]
    }
}

pub fn fd_solve(
    f: &PeriodicGridFunction,
    config: &AnnulusConfig,
    imp: &ImpedancePair,
    radial_points: usize,
) -> Result<FdSolution> {
    if radial_points < 8 {
        return Err(Error::InvalidParameter(format!(
            "finite-difference oracle needs at least 8 radial points, got {radial_points}"
        )));
    }
    let m = f.len();
    let nr = radial_points;
    let rho = config.rho;
    let h = (1.0 - rho) / (nr - 1) as f64;
    let ht = 2.0 * std::f64::consts::PI / m as f64;
    let radii: Vec<f64> = (0..nr).map(|i| rho + i as f64 * h).collect();

    // forward DFT of the boundary data
    let fhat: Vec<Complex64> = (0..m)
        .map(|k| {
            f.values()
                .iter()
                .enumerate()
                .map(|(j, v)| v * unit_root(-((k * j) as i64), m))
                .sum::<Complex64>()
                / m as f64
        })
        .collect();

    let mut uhat = vec![vec![Complex64::new(0.0, 0.0); m]; nr];
    for k in 0..m {
        // eigenvalue of −∂²_θ's centered stencil on e^{ikθ}
        let lam = (2.0 - 2.0 * unit_root(k as i64, m).re) / (ht * ht);
        let col = solve_radial(&radii, h, lam, rho, imp, fhat[k])
            .map_err(|msg| Error::OracleFailure(format!("frequency {k}: {msg}")))?;
        for (i, v) in col.into_iter().enumerate() {
            uhat[i][k] = v;
        }
    }

    let inverse = |coeffs: &[Complex64]| -> Vec<Complex64> {
        (0..m)
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * unit_root((k * j) as i64, m))
                    .sum()
            })
            .collect()
    };
    let potential: Vec<Vec<Complex64>> = uhat.iter().map(|row| inverse(row)).collect();
    let current = (0..m)
        .map(|j| {
            (potential[nr - 1][j] * 3.0 - potential[nr - 2][j] * 4.0 + potential[nr - 3][j]) / (2.0 * h)
        })
        .collect();
    Ok(FdSolution {
        radii,
        potential,
        current,
    })
}

fn solve_radial(
    radii: &[f64],
    h: f64,
    lam: f64,
    rho: f64,
    imp: &ImpedancePair,
    boundary: Complex64,
) -> std::result::Result<Vec<Complex64>, String> {
    let n = radii.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut sub = vec![zero; n];
    let mut diag = vec![zero; n];
    let mut sup = vec![zero; n];
    let mut rhs = vec![zero; n];

    for i in 1..n - 1 {
        let r = radii[i];
        sub[i] = Complex64::new(1.0 / (h * h) - 1.0 / (2.0 * h * r), 0.0);
        diag[i] = Complex64::new(-2.0 / (h * h) - lam / (r * r), 0.0);
        sup[i] = Complex64::new(1.0 / (h * h) + 1.0 / (2.0 * h * r), 0.0);
    }
    diag[n - 1] = Complex64::new(1.0, 0.0);
    rhs[n - 1] = boundary;

    // GIBC row on (u₀, u₁, u₂); fold u₂ away using row 1
    let c0 = imp.eta * (lam / (rho * rho)) + imp.gamma + 3.0 / (2.0 * h);
    let c1 = Complex64::new(-2.0 / h, 0.0);
    let c2 = Complex64::new(1.0 / (2.0 * h), 0.0);
    let factor = c2 / sup[1];
    diag[0] = c0 - factor * sub[1];
    sup[0] = c1 - factor * diag[1];

    // Thomas
    let scale = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
    for i in 1..n {
        let pivot = diag[i - 1];
        if pivot.norm() <= 1e-14 * scale {
            return Err(format!("zero pivot at row {}", i - 1));
        }
        let w = sub[i] / pivot;
        diag[i] -= w * sup[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= w * prev;
    }
    if diag[n - 1].norm() <= 1e-14 * scale {
        return Err("singular last pivot".into());
    }
    let mut x = vec![zero; n];
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err("non-finite solution".into());
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve_defective, trace_current_defective};
    use crate::fourier::{analyze, synthesize};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn paper() -> (AnnulusConfig, ImpedancePair) {
        (
            AnnulusConfig::with_radius(0.5).unwrap(),
            ImpedancePair::new(c(5.0, 2.0), c(10.0, 1.0)).unwrap(),
        )
    }

    #[test]
    fn zero_data_gives_zero_grid() {
        let (cfg, imp) = paper();
        let f = PeriodicGridFunction::new(vec![c(0.0, 0.0); 16]).unwrap();
        let sol = fd_solve(&f, &cfg, &imp, 12).unwrap();
        assert!(sol.potential.iter().flatten().all(|v| v.norm() == 0.0));
        assert!(sol.current.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn too_few_radial_points() {
        let (cfg, imp) = paper();
        let f = PeriodicGridFunction::new(vec![c(1.0, 0.0); 16]).unwrap();
        assert!(fd_solve(&f, &cfg, &imp, 7).is_err());
    }

    fn inner_trace_error(level: usize) -> f64 {
        let (cfg, imp) = paper();
        let m = 16 << level;
        let f = PeriodicGridFunction::from_fn(m, |t| c(t.cos(), 0.0)).unwrap();
        let sol = fd_solve(&f, &cfg, &imp, (16 << level) + 1).unwrap();
        let h = solve_defective(&analyze(&f, 2).unwrap(), &cfg, &imp).unwrap();
        let series = synthesize(&h.trace_coefficients(cfg.rho).unwrap(), &f.angles());
        sol.inner_trace()
            .iter()
            .zip(&series)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn inner_trace_converges_to_series() {
        let coarse = inner_trace_error(1);
        let fine = inner_trace_error(2);
        assert!(fine < 1e-3, "{fine}");
        let ratio = coarse / fine;
        assert!(ratio > 3.0 && ratio < 5.0, "{coarse} {fine}");
    }

    #[test]
    fn current_error_is_second_order() {
        let (cfg, imp) = paper();
        let mut errs = vec![];
        for level in 0..3 {
            let m = 16 << level;
            let nr = (16 << level) + 1;
            let f = PeriodicGridFunction::from_fn(m, |t| c(t.cos(), 0.0)).unwrap();
            let sol = fd_solve(&f, &cfg, &imp, nr).unwrap();
            let g = trace_current_defective(&analyze(&f, 2).unwrap(), &cfg, &imp).unwrap();
            let exact = synthesize(&g, &f.angles());
            errs.push(
                sol.current
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max),
            );
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.0 && ratio < 5.0, "ratios from {errs:?}");
        }
    }
}
