//! Boundary functions on the circle: equispaced samples, truncated Fourier
//! coefficients, and the discrete quadrature shared by the rest of the crate.
//!
//! Every boundary integral uses the left-endpoint rule on `θ_j = 2πj/M`,
//! which is exact for trigonometric polynomials of degree below `M`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Sample angle `2πj/M`.
pub fn grid_angle(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

/// `e^{2πi k/M}` with the exponent reduced mod `M` first, so equal residues
/// produce bit-identical values.
pub(crate) fn unit_root(k: i64, m: usize) -> Complex64 {
    let r = k.rem_euclid(m as i64) as usize;
    Complex64::from_polar(1.0, grid_angle(r, m))
}

/// Samples of a 2π-periodic function at `θ_j = 2πj/M`, `j = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGridFunction {
    values: Vec<Complex64>,
}

impl PeriodicGridFunction {
    pub const MIN_POINTS: usize = 4;

    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < Self::MIN_POINTS {
            return Err(invalid(format!(
                "periodic grid needs at least {} samples, got {}",
                Self::MIN_POINTS,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("periodic grid contains non-finite samples"));
        }
        Ok(Self { values })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..m).map(|j| f(grid_angle(j, m))).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn angles(&self) -> Vec<f64> {
        let m = self.len();
        (0..m).map(|j| grid_angle(j, m)).collect()
    }
}

/// Truncated coefficients `c_n`, `|n| ≤ N`, of `Σ c_n e^{inθ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    order: usize,
    /// `coeffs[n + N]` holds `c_n`.
    coeffs: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    /// Builds from the `2N+1` coefficients ordered `n = -N..=N`.
    pub fn from_vec(order: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * order + 1 {
            return Err(invalid(format!(
                "order {order} needs {} coefficients, got {}",
                2 * order + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("non-finite Fourier coefficient"));
        }
        Ok(Self { order, coeffs })
    }

    /// A single mode `value · e^{inθ}`.
    pub fn single_mode(order: usize, n: i64, value: Complex64) -> Result<Self> {
        let mut c = Self::zeros(order);
        c.set(n, value)?;
        Ok(c)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let n = self.order as i64;
        -n..=n
    }

    /// `c_n`, or zero outside the stored range.
    pub fn get(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(n + self.order as i64) as usize]
    }

    pub fn set(&mut self, n: i64, value: Complex64) -> Result<()> {
        if n.unsigned_abs() as usize > self.order {
            return Err(invalid(format!(
                "mode {n} outside truncation order {}",
                self.order
            )));
        }
        self.coeffs[(n + self.order as i64) as usize] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.modes().zip(self.coeffs.iter().copied())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Applies `f(n, c_n)` to every coefficient.
    pub fn map(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self {
            order: self.order,
            coeffs: self.iter().map(|(n, c)| f(n, c)).collect(),
        }
    }

    /// Re-truncates to `order`, padding with zeros when growing.
    pub fn truncated(&self, order: usize) -> Self {
        let mut out = Self::zeros(order);
        for n in out.modes().collect::<Vec<_>>() {
            out.coeffs[(n + order as i64) as usize] = self.get(n);
        }
        out
    }

    pub fn sample(&self, m: usize) -> Result<PeriodicGridFunction> {
        let angles: Vec<f64> = (0..m).map(|j| grid_angle(j, m)).collect();
        PeriodicGridFunction::new(synthesize(self, &angles))
    }
}

/// Discrete Fourier analysis `c_n = (1/M) Σ_j f(θ_j) e^{-inθ_j}` for `|n| ≤ N`.
pub fn analyze(f: &PeriodicGridFunction, order: usize) -> Result<FourierCoefficients> {
    let m = f.len();
    if 2 * order + 2 > m {
        return Err(invalid(format!(
            "truncation order {order} too large for {m} samples (need N <= M/2 - 1)"
        )));
    }
    let scale = 1.0 / m as f64;
    let coeffs = (-(order as i64)..=order as i64)
        .map(|n| {
            f.values()
                .iter()
                .enumerate()
                .map(|(j, &v)| v * unit_root(-n * j as i64, m))
                .sum::<Complex64>()
                * scale
        })
        .collect();
    Ok(FourierCoefficients { order, coeffs })
}

/// `Σ_{|n|≤N} c_n e^{inθ}` at each angle.
pub fn synthesize(c: &FourierCoefficients, angles: &[f64]) -> Vec<Complex64> {
    angles
        .iter()
        .map(|&theta| {
            c.iter()
                .map(|(n, cn)| cn * Complex64::from_polar(1.0, n as f64 * theta))
                .sum()
        })
        .collect()
}

/// Discrete `L²` norm on a circle of the given radius: `ds = radius · dθ`.
pub fn boundary_l2_norm(f: &PeriodicGridFunction, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let m = f.len() as f64;
    let sum: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    Ok((radius * (2.0 * PI / m) * sum).sqrt())
}

/// Discrete sesquilinear pairing `∫ f ḡ ds` with `ds = radius · dθ`.
pub fn boundary_pairing(f: &[Complex64], g: &[Complex64], radius: f64) -> Complex64 {
    debug_assert_eq!(f.len(), g.len());
    let w = radius * 2.0 * PI / f.len() as f64;
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<Complex64>() * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_function() {
        let f = PeriodicGridFunction::from_fn(8, |_| c(1.0, 0.0)).unwrap();
        let co = analyze(&f, 2).unwrap();
        assert!((co.get(0) - c(1.0, 0.0)).norm() < 1e-15);
        for n in [-2, -1, 1, 2] {
            assert!(co.get(n).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_mode() {
        let f = PeriodicGridFunction::from_fn(8, |t| Complex64::from_polar(1.0, t)).unwrap();
        let co = analyze(&f, 2).unwrap();
        for (n, v) in co.iter() {
            let want = if n == 1 { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn cosine_against_direct_sum() {
        // oracle: plain real-arithmetic sums of cos(3θ)cos(nθ) and cos(3θ)sin(nθ)
        let m = 16;
        let f = PeriodicGridFunction::from_fn(m, |t| c((3.0 * t).cos(), 0.0)).unwrap();
        let co = analyze(&f, 4).unwrap();
        for n in -4i64..=4 {
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..m {
                let t = 2.0 * PI * j as f64 / m as f64;
                re += (3.0 * t).cos() * (n as f64 * t).cos();
                im -= (3.0 * t).cos() * (n as f64 * t).sin();
            }
            let oracle = c(re / m as f64, im / m as f64);
            assert!((co.get(n) - oracle).norm() < 1e-14);
            let want = if n.abs() == 3 { 0.5 } else { 0.0 };
            assert!((co.get(n) - c(want, 0.0)).norm() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn order_too_large_is_rejected() {
        let f = PeriodicGridFunction::from_fn(8, |_| c(1.0, 0.0)).unwrap();
        assert!(analyze(&f, 3).is_ok());
        let err = analyze(&f, 4).unwrap_err();
        assert!(err.to_string().contains("too large"));
    }

    #[test]
    fn grid_rejects_short_or_nonfinite() {
        assert!(PeriodicGridFunction::new(vec![c(1.0, 0.0); 3]).is_err());
        let mut v = vec![c(1.0, 0.0); 8];
        v[2] = c(f64::NAN, 0.0);
        assert!(PeriodicGridFunction::new(v).is_err());
    }

    #[test]
    fn synthesize_examples() {
        let one = FourierCoefficients::single_mode(3, 0, c(1.0, 0.0)).unwrap();
        for v in synthesize(&one, &[0.0, 0.3, 2.0, 5.5]) {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let mut cosine = FourierCoefficients::zeros(1);
        cosine.set(1, c(0.5, 0.0)).unwrap();
        cosine.set(-1, c(0.5, 0.0)).unwrap();
        assert!((synthesize(&cosine, &[0.0])[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn l2_norm_examples() {
        let one = PeriodicGridFunction::from_fn(64, |_| c(1.0, 0.0)).unwrap();
        assert!((boundary_l2_norm(&one, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!((boundary_l2_norm(&one, 0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        let e = PeriodicGridFunction::from_fn(64, |t| Complex64::from_polar(1.0, t)).unwrap();
        assert!((boundary_l2_norm(&e, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(boundary_l2_norm(&e, 0.0).is_err());
        assert!(boundary_l2_norm(&e, -1.0).is_err());
    }

    #[test]
    fn out_of_range_modes() {
        let mut co = FourierCoefficients::zeros(2);
        assert!(co.set(3, c(1.0, 0.0)).is_err());
        assert_eq!(co.get(-7), c(0.0, 0.0));
        assert!(FourierCoefficients::from_vec(2, vec![c(0.0, 0.0); 4]).is_err());
    }

    fn coeff_strategy(order: usize) -> impl Strategy<Value = FourierCoefficients> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2 * order + 1).prop_map(
            move |v| {
                FourierCoefficients::from_vec(order, v.into_iter().map(|(a, b)| c(a, b)).collect())
                    .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn analyze_inverts_synthesize(co in coeff_strategy(6), extra in 0usize..20) {
            let m = 2 * 6 + 2 + extra;
            let f = co.sample(m).unwrap();
            let back = analyze(&f, 6).unwrap();
            let scale = co.as_slice().iter().map(|v| v.norm()).fold(1e-300, f64::max);
            for (n, v) in co.iter() {
                prop_assert!((back.get(n) - v).norm() <= 1e-12 * scale);
            }
            let again = back.sample(m).unwrap();
            for (a, b) in again.values().iter().zip(f.values()) {
                prop_assert!((a - b).norm() <= 1e-12 * scale * 13.0);
            }
        }

        #[test]
        fn discrete_parseval(co in coeff_strategy(5)) {
            let m = 32;
            let f = co.sample(m).unwrap();
            let lhs: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * 2.0 * PI / m as f64;
            let rhs: f64 = 2.0 * PI * co.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
