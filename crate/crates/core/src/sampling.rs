//! Inclusion reconstruction by the factorization/sampling method: a point `z`
//! is inside the inclusion iff the Poisson-kernel signature `b_z` lies in the
//! range of `Im(A)^{1/2}`. The indicators are reciprocal norms of regularized
//! solutions, normalized to a maximum of one over the grid.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::grid_angle;
use crate::operator::{CMatrix, CVector, PsdSqrt};

pub const DEFAULT_CUTOFF: f64 = 1e-8;
pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_RESOLUTION: usize = 101;
pub const DEFAULT_MARGIN: f64 = 0.1;
/// Safety factor on the discrepancy target `τ δ ‖b‖₂`.
pub const MOROZOV_TAU: f64 = 1.2;
pub const ALPHA_MIN: f64 = 1e-16;
pub const ALPHA_MAX: f64 = 1e4;
const MOROZOV_RTOL: f64 = 1e-3;

/// Per-point status bits attached to indicator values.
pub mod flags {
    /// Every spectral mode fell below the cutoff; the value was set to 0.
    pub const DEGENERATE: u8 = 1;
    /// Discrepancy target not reached even at the largest `α`.
    pub const ALPHA_AT_UPPER: u8 = 2;
    /// Residual exceeds the target already at the smallest `α`.
    pub const ALPHA_AT_LOWER: u8 = 4;
    /// Noise level zero: no discrepancy target, smallest `α` used.
    pub const NOISELESS: u8 = 8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub i: usize,
    pub j: usize,
}

/// Sampling points strictly inside the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    points: Vec<[f64; 2]>,
    margin: f64,
    /// `(resolution, index per point)` when built from a square lattice.
    lattice: Option<(usize, Vec<LatticeIndex>)>,
}

impl SamplingGrid {
    /// `resolution × resolution` lattice on `[−1, 1]²`, keeping `|z| ≤ 1 − margin`.
    /// Coordinates are mirror-exact: `x_i = −x_{n−1−i}` bit for bit.
    pub fn lattice(resolution: usize, margin: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid(format!("lattice resolution must be >= 2, got {resolution}")));
        }
        check_margin(margin)?;
        let coords = lattice_coords(resolution);
        let limit = 1.0 - margin;
        let mut points = Vec::new();
        let mut index = Vec::new();
        for (j, &y) in coords.iter().enumerate() {
            for (i, &x) in coords.iter().enumerate() {
                if x.hypot(y) <= limit + 1e-12 {
                    points.push([x, y]);
                    index.push(LatticeIndex { i, j });
                }
            }
        }
        Ok(Self {
            points,
            margin,
            lattice: Some((resolution, index)),
        })
    }

    pub fn from_points(points: Vec<[f64; 2]>, margin: f64) -> Result<Self> {
        check_margin(margin)?;
        if let Some(p) = points.iter().find(|p| p[0].hypot(p[1]) > 1.0 - margin + 1e-12) {
            return Err(Error::Domain(format!(
                "sampling point ({}, {}) lies outside |z| <= {}",
                p[0],
                p[1],
                1.0 - margin
            )));
        }
        Ok(Self {
            points,
            margin,
            lattice: None,
        })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lattice_info(&self) -> Option<(usize, &[LatticeIndex])> {
        self.lattice.as_ref().map(|(n, idx)| (*n, idx.as_slice()))
    }
}

fn check_margin(margin: f64) -> Result<()> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(invalid(format!("margin must lie in (0, 1), got {margin}")));
    }
    Ok(())
}

fn lattice_coords(n: usize) -> Vec<f64> {
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let k = 2 * i as i64 - (n as i64 - 1);
            if k < 0 {
                -((-k) as f64 / d)
            } else {
                k as f64 / d
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndicatorKind {
    W,
    P,
}

impl std::fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IndicatorKind::W => "W",
            IndicatorKind::P => "P",
        })
    }
}

/// Normalized indicator values on a sampling grid.
#[derive(Debug, Clone)]
pub struct IndicatorGrid {
    pub grid: SamplingGrid,
    pub kind: IndicatorKind,
    pub values: Vec<f64>,
    pub flags: Vec<u8>,
    /// Tikhonov parameters per point (P only).
    pub alphas: Option<Vec<f64>>,
}

impl IndicatorGrid {
    fn normalized(grid: &SamplingGrid, kind: IndicatorKind, raw: Vec<f64>, flags: Vec<u8>, alphas: Option<Vec<f64>>) -> Self {
        let max = raw.iter().copied().fold(0.0, f64::max);
        let values = if max > 0.0 {
            raw.iter().map(|v| v / max).collect()
        } else {
            raw
        };
        Self {
            grid: grid.clone(),
            kind,
            values,
            flags,
            alphas,
        }
    }

    pub fn flagged_count(&self, flag: u8) -> usize {
        self.flags.iter().filter(|f| **f & flag != 0).count()
    }

    /// Median of values with `lo ≤ |z| < hi`.
    pub fn annulus_median(&self, lo: f64, hi: f64) -> Option<f64> {
        let sel: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| {
                let r = p[0].hypot(p[1]);
                r >= lo && r < hi
            })
            .map(|(_, v)| *v)
            .collect();
        median(&sel)
    }

    /// Median inside `|z| < inner` over median on `outer.0 < |z| < outer.1`.
    pub fn separation_ratio(&self, inner: f64, outer: (f64, f64)) -> Option<f64> {
        let inside = self.annulus_median(0.0, inner)?;
        let outside: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| {
                let r = p[0].hypot(p[1]);
                r > outer.0 && r < outer.1
            })
            .map(|(_, v)| *v)
            .collect();
        let outside = median(&outside)?;
        Some(inside / outside)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Spearman rank correlation (ties get averaged ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(invalid("spearman needs two samples of equal length >= 2"));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(invalid("spearman undefined for a constant sample"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end - 1) as f64 + 1.0;
        for &k in &idx[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

/// `b_z[j] = (1/2π)(1 − |z|²)/(|z|² + 1 − 2|z| cos(θ_j − θ_z))`.
pub fn poisson_rhs(z: [f64; 2], m: usize) -> Result<CVector> {
    let r = z[0].hypot(z[1]);
    if !(r < 1.0) {
        return Err(Error::Domain(format!("sampling point |z| = {r} must be < 1")));
    }
    let tz = z[1].atan2(z[0]);
    let r2 = r * r;
    Ok(CVector::from_fn(m, |j, _| {
        let k = (1.0 - r2) / (r2 + 1.0 - 2.0 * r * (grid_angle(j, m) - tz).cos()) / (2.0 * PI);
        Complex64::new(k, 0.0)
    }))
}

/// Spectral-cutoff solution of `S f = b` with `S = V diag(√λ) V*`; modes with
/// `√λ_k ≤ cutoff` are dropped. Returns the solution and whether every mode
/// was dropped.
pub fn solve_cutoff(s: &PsdSqrt, b: &CVector, cutoff: f64) -> (CVector, bool) {
    let eig = s.eigen();
    let coeffs = eig.project(b);
    let mut f = CVector::zeros(b.len());
    let mut kept = 0;
    for (k, &root) in s.roots().iter().enumerate() {
        if root > cutoff {
            kept += 1;
            f.axpy(coeffs[k] / root, &eig.vectors().column(k), Complex64::new(1.0, 0.0));
        }
    }
    (f, kept == 0)
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(invalid(format!("cutoff must be positive, got {cutoff}")));
    }
    Ok(())
}

/// `W(z) ∝ 1/‖f_z‖₂` with `f_z` the spectral-cutoff solution of `S f = b_z`.
pub fn indicator_w(grid: &SamplingGrid, s: &PsdSqrt, cutoff: f64) -> Result<IndicatorGrid> {
    if grid.is_empty() {
        return Err(invalid("sampling grid is empty"));
    }
    check_cutoff(cutoff)?;
    let m = s.matrix().nrows();
    let per_point: Vec<(f64, u8)> = grid
        .points()
        .par_iter()
        .map(|&z| {
            let b = poisson_rhs(z, m)?;
            let (f, degenerate) = solve_cutoff(s, &b, cutoff);
            let norm = f.norm();
            Ok(if degenerate || norm == 0.0 {
                (0.0, flags::DEGENERATE)
            } else {
                (1.0 / norm, 0)
            })
        })
        .collect::<Result<_>>()?;
    let (raw, fl) = per_point.into_iter().unzip();
    Ok(IndicatorGrid::normalized(grid, IndicatorKind::W, raw, fl, None))
}

/// `f^α = (H*H + αI)⁻¹ H* b` by a dense Cholesky solve.
pub fn tikhonov_solve(h: &CMatrix, b: &CVector, alpha: f64) -> Result<CVector> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("Tikhonov parameter must be positive, got {alpha}")));
    }
    let n = h.ncols();
    let hs = h.adjoint();
    let normal = &hs * h + CMatrix::identity(n, n) * Complex64::new(alpha, 0.0);
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::IllConditioned { condition: f64::INFINITY })?;
    Ok(chol.solve(&(hs * b)))
}

/// Outcome of a discrepancy-principle search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorozovChoice {
    pub alpha: f64,
    /// Zero or one of [`flags::ALPHA_AT_UPPER`] / [`flags::ALPHA_AT_LOWER`].
    pub flag: u8,
}

/// Bisection on `log α` over `[ALPHA_MIN, ALPHA_MAX]` for `residual(α) = target`,
/// stopping at `1e−3` relative agreement. `residual` must be nondecreasing.
pub fn morozov_search(residual: impl Fn(f64) -> Result<f64>, target: f64) -> Result<MorozovChoice> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(invalid(format!("discrepancy target must be positive, got {target}")));
    }
    let close = |r: f64| (r - target).abs() <= MOROZOV_RTOL * target;
    let r_hi = residual(ALPHA_MAX)?;
    if r_hi < target && !close(r_hi) {
        return Ok(MorozovChoice {
            alpha: ALPHA_MAX,
            flag: flags::ALPHA_AT_UPPER,
        });
    }
    let r_lo = residual(ALPHA_MIN)?;
    if r_lo > target && !close(r_lo) {
        return Ok(MorozovChoice {
            alpha: ALPHA_MIN,
            flag: flags::ALPHA_AT_LOWER,
        });
    }
    let (mut lo, mut hi) = (ALPHA_MIN.ln(), ALPHA_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid.exp())?;
        if close(r) {
            return Ok(MorozovChoice { alpha: mid.exp(), flag: 0 });
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MorozovChoice {
        alpha: (0.5 * (lo + hi)).exp(),
        flag: 0,
    })
}

/// Discrepancy-principle `α` for `H f = b` with absolute target `delta_abs`.
pub fn morozov_alpha(h: &CMatrix, b: &CVector, delta_abs: f64) -> Result<MorozovChoice> {
    morozov_search(|a| Ok((h * tikhonov_solve(h, b, a)? - b).norm()), delta_abs)
}

/// Tikhonov filtering on a Hermitian eigenbasis `H = V diag(λ) V*`:
/// `f^α = Σ λ_k/(λ_k² + α) c_k v_k` with `c = V* b`.
struct SpectralTikhonov<'a> {
    lambdas: &'a [f64],
    coeffs: CVector,
}

impl SpectralTikhonov<'_> {
    fn filtered(&self, alpha: f64) -> Vec<Complex64> {
        self.lambdas
            .iter()
            .zip(self.coeffs.iter())
            .map(|(&l, c)| c * (l / (l * l + alpha)))
            .collect()
    }

    fn residual(&self, alpha: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(self.coeffs.iter())
            .map(|(&l, c)| (c * (alpha / (l * l + alpha))).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `P(z) ∝ 1/‖S f_z^α‖₂` where `f_z^α` is the Tikhonov solution of `H f = b_z`
/// with `α` from the discrepancy principle at target `τ δ ‖b_z‖₂`. `s` must be
/// the square root of `H`; its retained eigendecomposition is that of `H`.
/// With `δ = 0` there is no target and the smallest `α` is used (flagged).
pub fn indicator_p(grid: &SamplingGrid, s: &PsdSqrt, delta: f64) -> Result<IndicatorGrid> {
    if grid.is_empty() {
        return Err(invalid("sampling grid is empty"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("noise level must be >= 0, got {delta}")));
    }
    let eig = s.eigen();
    let m = s.matrix().nrows();
    let per_point: Vec<(f64, u8, f64)> = grid
        .points()
        .par_iter()
        .map(|&z| {
            let b = poisson_rhs(z, m)?;
            let tik = SpectralTikhonov {
                lambdas: eig.values(),
                coeffs: eig.project(&b),
            };
            let choice = if delta == 0.0 {
                MorozovChoice {
                    alpha: ALPHA_MIN,
                    flag: flags::NOISELESS,
                }
            } else {
                morozov_search(|a| Ok(tik.residual(a)), MOROZOV_TAU * delta * b.norm())?
            };
            let fa = tik.filtered(choice.alpha);
            // ‖S f‖ in the eigenbasis: S acts by the clamped roots
            let norm = s
                .roots()
                .iter()
                .zip(&fa)
                .map(|(r, c)| (c * *r).norm_sqr())
                .sum::<f64>()
                .sqrt();
            Ok(if norm == 0.0 {
                (0.0, choice.flag | flags::DEGENERATE, choice.alpha)
            } else {
                (1.0 / norm, choice.flag, choice.alpha)
            })
        })
        .collect::<Result<_>>()?;
    let mut raw = Vec::with_capacity(per_point.len());
    let mut fl = Vec::with_capacity(per_point.len());
    let mut alphas = Vec::with_capacity(per_point.len());
    for (v, f, a) in per_point {
        raw.push(v);
        fl.push(f);
        alphas.push(a);
    }
    Ok(IndicatorGrid::normalized(grid, IndicatorKind::P, raw, fl, Some(alphas)))
}

/// A contour polyline; `closed` polylines repeat their first vertex at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn mean_radius(&self) -> f64 {
        let n = if self.closed { self.points.len() - 1 } else { self.points.len() };
        self.points[..n].iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Between lattice nodes `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between lattice nodes `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

/// Marching-squares level set of a lattice indicator. Cells with a corner
/// outside the sampling disk are skipped; saddles are resolved by the cell
/// average. Segments are chained into polylines through shared lattice edges.
pub fn extract_level_set(ind: &IndicatorGrid, threshold: f64) -> Result<Vec<Polyline>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let (n, index) = ind
        .grid
        .lattice_info()
        .ok_or_else(|| invalid("level sets need a lattice sampling grid"))?;
    let coords = lattice_coords(n);
    let mut field = vec![f64::NAN; n * n];
    for (idx, v) in index.iter().zip(&ind.values) {
        field[idx.j * n + idx.i] = *v;
    }
    let at = |i: usize, j: usize| field[j * n + i];

    let crossing = |e: EdgeKey| -> [f64; 2] {
        let (i0, j0, i1, j1) = match e {
            EdgeKey::H(i, j) => (i, j, i + 1, j),
            EdgeKey::V(i, j) => (i, j, i, j + 1),
        };
        let (va, vb) = (at(i0, j0), at(i1, j1));
        let t = (threshold - va) / (vb - va);
        [
            coords[i0] + t * (coords[i1] - coords[i0]),
            coords[j0] + t * (coords[j1] - coords[j0]),
        ]
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if corners.iter().any(|v| v.is_nan()) {
                continue;
            }
            let above: Vec<bool> = corners.iter().map(|v| *v >= threshold).collect();
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            // edge k joins corners k and k+1
            let cut: Vec<EdgeKey> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).map(|k| edges[k]).collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let center = corners.iter().sum::<f64>() / 4.0 >= threshold;
                    // isolate the diagonal pair whose class differs from the center
                    if above[0] == center {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(s);
        incident.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let walk = |start_seg: usize, start_edge: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut edge = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == edge { b } else { a };
            chain.push(next);
            if next == start_edge {
                return (chain, true);
            }
            match incident[&next].iter().find(|&&s| !used[s]) {
                Some(&s) => {
                    seg = s;
                    edge = next;
                }
                None => return (chain, false),
            }
        }
    };

    // open chains start at edges touched by a single segment
    let mut starts: Vec<(EdgeKey, usize)> = incident
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(e, segs)| (*e, segs[0]))
        .collect();
    starts.sort_by_key(|(e, _)| edge_order(*e));
    for (e, s) in starts {
        if !used[s] {
            let (chain, closed) = walk(s, e, &mut used);
            lines.push((chain, closed));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (chain, closed) = walk(s, segments[s].0, &mut used);
            lines.push((chain, closed));
        }
    }
    Ok(lines
        .into_iter()
        .map(|(chain, closed)| Polyline {
            points: chain.into_iter().map(crossing).collect(),
            closed,
        })
        .collect())
}

fn edge_order(e: EdgeKey) -> (u8, usize, usize) {
    match e {
        EdgeKey::H(i, j) => (0, j, i),
        EdgeKey::V(i, j) => (1, j, i),
    }
}
