//! Dense discretization of the current-gap operator `Λ₀ − Λ`, the
//! multiplicative noise model, and the Hermitian spectral tools used by the
//! sampling reconstruction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{gap_kernel_table, AnnulusConfig, ImpedancePair};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative noise level `δ` and the RNG seed for the noise matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid(format!("noise level must be finite and >= 0, got {delta}")));
        }
        Ok(Self { delta, seed })
    }
}

/// `M × M` collocation matrix of `Λ₀ − Λ` together with how it was made.
#[derive(Debug, Clone, PartialEq)]
pub struct GapMatrix {
    entries: CMatrix,
    config: AnnulusConfig,
    impedance: ImpedancePair,
    noise: Option<NoiseSpec>,
}

impl GapMatrix {
    pub fn from_parts(
        entries: CMatrix,
        config: AnnulusConfig,
        impedance: ImpedancePair,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        let m = config.collocation_points;
        if entries.nrows() != m || entries.ncols() != m {
            return Err(invalid(format!(
                "gap matrix is {}x{}, config expects {m}x{m}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("gap matrix has non-finite entries"));
        }
        Ok(Self {
            entries,
            config,
            impedance,
            noise,
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn config(&self) -> &AnnulusConfig {
        &self.config
    }

    pub fn impedance(&self) -> &ImpedancePair {
        &self.impedance
    }

    pub fn noise(&self) -> Option<&NoiseSpec> {
        self.noise.as_ref()
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Imaginary part of the operator with respect to the boundary pairing
    /// `⟨f, g⟩ = ∫ f ḡ ds`, which is conjugate-linear in its second slot:
    /// `Im⟨f, A f⟩ = f* H f` with `H = (A* − A)/(2i)`. This `H` is positive
    /// semidefinite for absorbing impedances and is the matrix whose square
    /// root the sampling method inverts.
    pub fn imaginary_part(&self) -> CMatrix {
        hermitian_imag(&self.entries.adjoint())
    }
}

/// `A_ij = K(θ_i, θ_j) · 2π/M` on `θ_k = 2πk/M`; exactly circulant.
pub fn assemble_gap_matrix(config: &AnnulusConfig, imp: &ImpedancePair) -> Result<GapMatrix> {
    let m = config.collocation_points;
    let w = 2.0 * std::f64::consts::PI / m as f64;
    let table: Vec<Complex64> = gap_kernel_table(config, imp)?.into_iter().map(|k| k * w).collect();
    let entries = CMatrix::from_fn(m, m, |i, j| table[(i + m - j) % m]);
    GapMatrix::from_parts(entries, *config, *imp, None)
}

/// Uniform `[-1, 1]` entries from ChaCha8 seeded with `seed`, drawn row by
/// row, then scaled to unit spectral norm.
pub fn noise_matrix(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            e[(i, j)] = rng.gen_range(-1.0..=1.0);
        }
    }
    let norm = e.clone().svd(false, false).singular_values.max();
    e / norm
}

/// `A^δ_ij = A_ij (1 + δ E_ij)` with `‖E‖₂ = 1`.
pub fn apply_noise(a: &GapMatrix, noise: NoiseSpec) -> GapMatrix {
    let mut out = a.clone();
    out.noise = Some(noise);
    if noise.delta == 0.0 {
        return out;
    }
    let e = noise_matrix(a.size(), noise.seed);
    out.entries
        .iter_mut()
        .zip(e.iter())
        .for_each(|(v, eij)| *v *= 1.0 + noise.delta * eij);
    out
}

/// `(A − A*)/(2i)`, with Hermitian symmetry imposed exactly.
pub fn hermitian_imag(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "hermitian_imag needs a square matrix");
    let n = a.nrows();
    let two_i = Complex64::new(0.0, 2.0);
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let upper = (a[(i, j)] - a[(j, i)].conj()) / two_i;
            let lower = (a[(j, i)] - a[(i, j)].conj()) / two_i;
            let v = (upper + lower.conj()) * 0.5;
            if i == j {
                h[(i, i)] = Complex64::new(v.re, 0.0);
            } else {
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
    }
    h
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl HermitianEigen {
    pub fn decompose(h: &CMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(invalid("eigendecomposition needs a square matrix"));
        }
        let n = h.nrows();
        let (values, vectors) = if n > 0 && is_circulant(h) {
            circulant_eigen(h)
        } else {
            let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000).ok_or(Error::EigenFailure(n))?;
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let values_sorted = order.iter().map(|&k| values[k]).collect();
        let vectors_sorted = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        Ok(Self {
            values: values_sorted,
            vectors: vectors_sorted,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(g(λ)) V*`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let scaled = CMatrix::from_fn(n, n, |i, k| self.vectors[(i, k)] * g(self.values[k]));
        scaled * self.vectors.adjoint()
    }

    /// Coordinates `V* b`.
    pub fn project(&self, b: &CVector) -> CVector {
        self.vectors.adjoint() * b
    }
}

/// Exact (bitwise) circulant structure: `h[i][j] == h[i+1][j+1]` cyclically.
fn is_circulant(h: &CMatrix) -> bool {
    let n = h.nrows();
    (0..n).all(|i| (0..n).all(|j| h[(i, j)] == h[((i + 1) % n, (j + 1) % n)]))
}

/// `(cos, sin)` of `2πr/M` with `r` folded so that `r` and `M − r` give
/// identical cosines and opposite sines bit for bit.
fn folded_trig(r: usize, m: usize) -> (f64, f64) {
    let r = r % m;
    if 2 * r > m {
        let t = 2.0 * std::f64::consts::PI * (m - r) as f64 / m as f64;
        (t.cos(), -t.sin())
    } else {
        let t = 2.0 * std::f64::consts::PI * r as f64 / m as f64;
        (t.cos(), t.sin())
    }
}

/// Circulant Hermitian matrices are diagonalized by the discrete Fourier
/// vectors `v_k[j] = e^{2πijk/M}/√M` with `λ_k = Σ_m c_m e^{−2πimk/M}`.
/// Eigenvalues of equal-modulus frequencies come out exactly degenerate
/// when `c` is real and even.
fn circulant_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let m = h.nrows();
    let col: Vec<Complex64> = (0..m).map(|i| h[(i, 0)]).collect();
    let values = (0..m)
        .map(|k| {
            let mut acc = col[0].re;
            for (mm, c) in col.iter().enumerate().skip(1) {
                let (cs, sn) = folded_trig(mm * k, m);
                // Re(c e^{-iθ}) = Re c cos θ + Im c sin θ
                acc += c.re * cs + c.im * sn;
            }
            acc
        })
        .collect();
    let s = 1.0 / (m as f64).sqrt();
    let vectors = CMatrix::from_fn(m, m, |j, k| {
        let (cs, sn) = folded_trig(j * k, m);
        Complex64::new(cs * s, sn * s)
    });
    (values, vectors)
}

/// Positive square root of a Hermitian matrix with its eigendecomposition
/// retained. Negative eigenvalues are clamped to zero first.
#[derive(Debug, Clone)]
pub struct PsdSqrt {
    eigen: HermitianEigen,
    roots: Vec<f64>,
    matrix: CMatrix,
}

impl PsdSqrt {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Decomposition of the matrix that was square-rooted (unclamped values).
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// `sqrt(max(λ_k, 0))`, aligned with `eigen().vectors()` columns.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// Applies `V diag(roots) V*` to `x`.
    pub fn apply(&self, x: &CVector) -> CVector {
        &self.matrix * x
    }
}

pub fn psd_sqrt(h: &CMatrix) -> Result<PsdSqrt> {
    let eigen = HermitianEigen::decompose(h)?;
    Ok(psd_sqrt_from(eigen))
}

pub fn psd_sqrt_from(eigen: HermitianEigen) -> PsdSqrt {
    let roots: Vec<f64> = eigen.values().iter().map(|&l| l.max(0.0).sqrt()).collect();
    let matrix = eigen.reconstruct_with(|l| l.max(0.0).sqrt());
    PsdSqrt { eigen, roots, matrix }
}
