//! The four run commands. Each validates its configuration, computes, then
//! writes every artifact from a single thread and finishes with a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::config::{format_complex, RunConfig};
use super::container;
use super::output::{read_cauchy_pair_csv, write_cauchy_pair_csv, write_contour_csv, write_indicator_csv, write_json, Manifest};
use crate::error::{Error, Result};
use crate::fourier::FourierCoefficients;
use crate::impedance::{add_current_noise, recover_constants, synthetic_pair, CauchyPair, ConstantRecovery};
use crate::operator::{apply_noise, assemble_gap_matrix, psd_sqrt, spectral_norm, GapMatrix};
use crate::sampling::{extract_level_set, flags, indicator_p, indicator_w, median, IndicatorGrid, IndicatorKind, Polyline};

pub const CLEAN_MATRIX: &str = "gap_matrix_clean.bin";
pub const NOISY_MATRIX: &str = "gap_matrix_noisy.bin";

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardReport {
    pub clean_path: PathBuf,
    pub noisy_path: PathBuf,
    pub manifest_path: PathBuf,
    pub clean_norm: f64,
    pub noisy_norm: f64,
    pub perturbation_norm: f64,
}

/// Assembles the gap matrix, perturbs it, and stores both containers.
pub fn cmd_forward(cfg: &RunConfig) -> Result<ForwardReport> {
    let parts = cfg.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let mut manifest = Manifest::new("forward", cfg);

    let t = Instant::now();
    let clean = assemble_gap_matrix(&parts.annulus, &parts.impedance)?;
    manifest.timings_ms.insert("assembly".into(), elapsed_ms(t));
    let t = Instant::now();
    let noisy = apply_noise(&clean, parts.noise);
    manifest.timings_ms.insert("noise".into(), elapsed_ms(t));

    let clean_norm = spectral_norm(clean.entries());
    let noisy_norm = spectral_norm(noisy.entries());
    let perturbation_norm = spectral_norm(&(noisy.entries() - clean.entries()));

    let clean_path = cfg.output_dir.join(CLEAN_MATRIX);
    let noisy_path = cfg.output_dir.join(NOISY_MATRIX);
    container::save(&clean, &clean_path)?;
    container::save(&noisy, &noisy_path)?;

    manifest.outputs = vec![CLEAN_MATRIX.into(), NOISY_MATRIX.into()];
    manifest.results = json!({
        "collocation_points": parts.annulus.collocation_points,
        "kernel_truncation": parts.annulus.kernel_truncation,
        "noise_delta": parts.noise.delta,
        "clean_spectral_norm": clean_norm,
        "noisy_spectral_norm": noisy_norm,
        "perturbation_spectral_norm": perturbation_norm,
    });
    let manifest_path = cfg.output_dir.join("forward_manifest.json");
    manifest.write(&manifest_path)?;
    log::info!("wrote {} and {}", clean_path.display(), noisy_path.display());
    Ok(ForwardReport {
        clean_path,
        noisy_path,
        manifest_path,
        clean_norm,
        noisy_norm,
        perturbation_norm,
    })
}

/// Radii used to summarize how well an indicator separates the inclusion:
/// inside `|z| < 0.8 ρ`, outside `max(0.65, ρ + 0.15) < |z| < 1 − margin`.
pub fn separation_regions(rho: f64, margin: f64) -> (f64, (f64, f64)) {
    (0.8 * rho, ((rho + 0.15).max(0.65), 1.0 - margin))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorSummary {
    pub kind: IndicatorKind,
    pub indicator_path: PathBuf,
    pub contour_path: PathBuf,
    pub points: usize,
    pub max_value: f64,
    pub separation_ratio: Option<f64>,
    pub contour_count: usize,
    pub contour_mean_radius: Option<f64>,
    pub degenerate_points: usize,
    pub alpha_at_upper: usize,
    pub alpha_at_lower: usize,
    pub noiseless_alpha: usize,
    pub alpha_min: Option<f64>,
    pub alpha_median: Option<f64>,
    pub alpha_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructReport {
    pub indicators: Vec<IndicatorSummary>,
    pub manifest_path: PathBuf,
}

/// Mean radius of the longest polyline.
pub fn main_contour_radius(lines: &[Polyline]) -> Option<f64> {
    lines.iter().max_by_key(|l| l.points.len()).map(Polyline::mean_radius)
}

fn summarize(
    ind: &IndicatorGrid,
    lines: &[Polyline],
    rho: f64,
    margin: f64,
    indicator_path: PathBuf,
    contour_path: PathBuf,
) -> IndicatorSummary {
    let (inner, outer) = separation_regions(rho, margin);
    let alphas = ind.alphas.as_deref().unwrap_or(&[]);
    IndicatorSummary {
        kind: ind.kind,
        indicator_path,
        contour_path,
        points: ind.values.len(),
        max_value: ind.values.iter().copied().fold(0.0, f64::max),
        separation_ratio: ind.separation_ratio(inner, outer),
        contour_count: lines.len(),
        contour_mean_radius: main_contour_radius(lines),
        degenerate_points: ind.flagged_count(flags::DEGENERATE),
        alpha_at_upper: ind.flagged_count(flags::ALPHA_AT_UPPER),
        alpha_at_lower: ind.flagged_count(flags::ALPHA_AT_LOWER),
        noiseless_alpha: ind.flagged_count(flags::NOISELESS),
        alpha_min: alphas.iter().copied().reduce(f64::min),
        alpha_median: median(alphas),
        alpha_max: alphas.iter().copied().reduce(f64::max),
    }
}

/// Indicator grids for an already loaded matrix; the noise level used by the
/// discrepancy principle is the one recorded in the matrix.
pub fn compute_indicators(cfg: &RunConfig, a: &GapMatrix) -> Result<Vec<(IndicatorGrid, Vec<Polyline>)>> {
    let parts = cfg.validate()?;
    let s = psd_sqrt(&a.imaginary_part())?;
    let delta = a.noise().map_or(0.0, |n| n.delta);
    let mut out = Vec::new();
    for kind in &cfg.indicators {
        let ind = match kind {
            IndicatorKind::W => indicator_w(&parts.grid, &s, cfg.cutoff)?,
            IndicatorKind::P => indicator_p(&parts.grid, &s, delta)?,
        };
        let lines = extract_level_set(&ind, cfg.threshold)?;
        out.push((ind, lines));
    }
    Ok(out)
}

pub fn cmd_reconstruct(cfg: &RunConfig, matrix_path: &Path) -> Result<ReconstructReport> {
    cfg.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let mut manifest = Manifest::new("reconstruct", cfg);
    let t = Instant::now();
    let a = container::load(matrix_path)?;
    manifest.timings_ms.insert("load".into(), elapsed_ms(t));
    let t = Instant::now();
    let computed = compute_indicators(cfg, &a)?;
    manifest.timings_ms.insert("indicators".into(), elapsed_ms(t));

    let rho = a.config().rho;
    let mut summaries = Vec::new();
    for (ind, lines) in &computed {
        let indicator_path = cfg.output_dir.join(format!("indicator_{}.csv", ind.kind));
        let contour_path = cfg.output_dir.join(format!("contour_{}.csv", ind.kind));
        write_indicator_csv(ind, &indicator_path)?;
        write_contour_csv(lines, &contour_path)?;
        manifest.outputs.push(file_name(&indicator_path));
        manifest.outputs.push(file_name(&contour_path));
        let s = summarize(ind, lines, rho, cfg.grid.margin, indicator_path, contour_path);
        if s.degenerate_points + s.alpha_at_lower + s.alpha_at_upper > 0 {
            log::warn!(
                "{} indicator: {} degenerate points, {} α at the lower bracket, {} at the upper bracket",
                s.kind,
                s.degenerate_points,
                s.alpha_at_lower,
                s.alpha_at_upper
            );
        }
        summaries.push(s);
    }
    manifest.results = json!({
        "matrix": matrix_path.display().to_string(),
        "matrix_rho": rho,
        "matrix_noise": a.noise(),
        "cutoff": cfg.cutoff,
        "threshold": cfg.threshold,
        "indicators": summaries,
    });
    let manifest_path = cfg.output_dir.join("reconstruct_manifest.json");
    manifest.write(&manifest_path)?;
    Ok(ReconstructReport {
        indicators: summaries,
        manifest_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpedanceReport {
    pub source: String,
    pub recovery: ConstantRecovery,
    pub truth: Option<(Complex64, Complex64)>,
    pub result_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Pairs for voltages `e^{ikθ}`, `k` in `voltage_modes`, with currents from
/// the forward solver perturbed by `δ e^{ipθ}`.
pub fn synthetic_pairs(cfg: &RunConfig) -> Result<Vec<CauchyPair>> {
    let parts = cfg.validate()?;
    let imp = &cfg.impedance;
    imp.voltage_modes
        .iter()
        .map(|&k| {
            let f = FourierCoefficients::single_mode(imp.order, k, Complex64::new(1.0, 0.0))?;
            let pair = synthetic_pair(&f, &parts.annulus, &parts.impedance)?;
            pair.with_current(add_current_noise(pair.g(), imp.delta, imp.p)?)
        })
        .collect()
}

/// Recovers constant `(η, γ)` from Cauchy pair CSVs, or from synthetic pairs
/// when `data` is empty.
pub fn cmd_impedance(cfg: &RunConfig, data: &[PathBuf]) -> Result<ImpedanceReport> {
    let parts = cfg.validate()?;
    prepare_dir(&cfg.output_dir)?;
    let mut manifest = Manifest::new("impedance", cfg);
    let t = Instant::now();
    let (pairs, source, truth) = if data.is_empty() {
        let pairs = synthetic_pairs(cfg)?;
        for (k, p) in pairs.iter().enumerate() {
            let name = format!("cauchy_pair_{k}.csv");
            write_cauchy_pair_csv(p, &cfg.output_dir.join(&name))?;
            manifest.outputs.push(name);
        }
        (pairs, "synthetic".to_string(), Some((parts.impedance.eta, parts.impedance.gamma)))
    } else {
        let pairs = data.iter().map(|p| read_cauchy_pair_csv(p)).collect::<Result<Vec<_>>>()?;
        let names: Vec<String> = data.iter().map(|p| p.display().to_string()).collect();
        (pairs, names.join(","), None)
    };
    let order = pairs.iter().map(CauchyPair::order).min().unwrap_or(0).min(cfg.impedance.order);
    let recovery = recover_constants(&pairs, cfg.rho, cfg.impedance.quadrature, order)?;
    manifest.timings_ms.insert("recovery".into(), elapsed_ms(t));

    let mut result = json!({
        "source": source,
        "eta": format_complex(recovery.eta),
        "gamma": format_complex(recovery.gamma),
        "eta_re": recovery.eta.re,
        "eta_im": recovery.eta.im,
        "gamma_re": recovery.gamma.re,
        "gamma_im": recovery.gamma.im,
        "residual": recovery.residual,
        "condition": recovery.condition,
        "order": order,
        "quadrature": cfg.impedance.quadrature,
        "current_noise": { "delta": cfg.impedance.delta, "p": cfg.impedance.p },
    });
    if let Some((eta, gamma)) = truth {
        result["true_eta"] = json!(format_complex(eta));
        result["true_gamma"] = json!(format_complex(gamma));
        result["eta_error"] = json!((recovery.eta - eta).norm());
        result["gamma_error"] = json!((recovery.gamma - gamma).norm());
    }
    let result_path = cfg.output_dir.join("impedance.json");
    write_json(&result, &result_path)?;
    manifest.outputs.push(file_name(&result_path));
    manifest.results = result;
    let manifest_path = cfg.output_dir.join("impedance_manifest.json");
    manifest.write(&manifest_path)?;
    Ok(ImpedanceReport {
        source,
        recovery,
        truth,
        result_path,
        manifest_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub forward: ForwardReport,
    pub reconstruct: ReconstructReport,
    pub impedance: ImpedanceReport,
    pub summary_path: PathBuf,
    pub total_seconds: f64,
}

/// Default configuration with a pinned seed: forward, reconstruction from the
/// noisy matrix, and impedance recovery with `δ = 0.01`, `p = 1` current noise.
pub fn demo_config(output_dir: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: output_dir.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.impedance.delta = 0.01;
    cfg.impedance.p = 1;
    cfg
}

pub fn cmd_demo(output_dir: &Path) -> Result<DemoReport> {
    let cfg = demo_config(output_dir);
    let t = Instant::now();
    let forward = cmd_forward(&cfg)?;
    let reconstruct = cmd_reconstruct(&cfg, &forward.noisy_path)?;
    let impedance = cmd_impedance(&cfg, &[])?;
    let total_seconds = t.elapsed().as_secs_f64();

    let w = &reconstruct.indicators[0];
    let (inner, outer) = separation_regions(cfg.rho, cfg.grid.margin);
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    let summary = format!(
        "inclusion radius rho = {rho}, eta = {eta}, gamma = {gamma}\n\
         gap matrix: M = {m}, N = {n}, noise delta = {delta}, seed = {seed}\n\
         spectral norms: clean {cn:.6e}, noisy {nn:.6e}, perturbation {pn:.6e}\n\
         W indicator on {pts} points, cutoff {cutoff:e}\n\
         separation ratio (median |z| < {inner:.2} / median {o0:.2} < |z| < {o1:.2}): {sep}\n\
         contours at threshold {thr}: {cc}, main contour mean radius {rad}\n\
         impedance recovery (current noise delta = {idelta}, p = {ip}): eta = {reta}, gamma = {rgamma}\n\
         impedance system condition number {cond:.3e}, residual {res:.3e}\n\
         total time {total_seconds:.2} s\n",
        rho = cfg.rho,
        eta = format_complex(cfg.eta),
        gamma = format_complex(cfg.gamma),
        m = cfg.collocation_points,
        n = cfg.kernel_truncation,
        delta = cfg.noise.delta,
        seed = cfg.noise.seed,
        cn = forward.clean_norm,
        nn = forward.noisy_norm,
        pn = forward.perturbation_norm,
        pts = w.points,
        cutoff = cfg.cutoff,
        o0 = outer.0,
        o1 = outer.1,
        sep = opt(w.separation_ratio),
        thr = cfg.threshold,
        cc = w.contour_count,
        rad = opt(w.contour_mean_radius),
        idelta = cfg.impedance.delta,
        ip = cfg.impedance.p,
        reta = format_complex(impedance.recovery.eta),
        rgamma = format_complex(impedance.recovery.gamma),
        cond = impedance.recovery.condition,
        res = impedance.recovery.residual,
    );
    let summary_path = output_dir.join("summary.txt");
    std::fs::write(&summary_path, &summary)?;
    Ok(DemoReport {
        forward,
        reconstruct,
        impedance,
        summary_path,
        total_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplingGrid;

    #[test]
    fn separation_regions_match_defaults() {
        let (inner, outer) = separation_regions(0.5, 0.1);
        assert!((inner - 0.4).abs() < 1e-15);
        assert_eq!(outer, (0.65, 0.9));
        assert!((separation_regions(0.25, 0.1).0 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn longest_contour_is_summarized() {
        let short = Polyline {
            points: vec![[0.9, 0.0], [0.9, 0.1]],
            closed: false,
        };
        let circle = Polyline {
            points: (0..=8).map(|k| {
                let t = k as f64 * std::f64::consts::PI / 4.0;
                [0.5 * t.cos(), 0.5 * t.sin()]
            })
            .collect(),
            closed: true,
        };
        assert!((main_contour_radius(&[short, circle]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(main_contour_radius(&[]), None);
    }

    #[test]
    fn small_grid_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig {
            output_dir: dir.path().to_path_buf(),
            indicators: vec![IndicatorKind::W, IndicatorKind::P],
            ..RunConfig::default()
        };
        cfg.grid.resolution = 31;
        let fwd = cmd_forward(&cfg).unwrap();
        let rec = cmd_reconstruct(&cfg, &fwd.noisy_path).unwrap();
        assert_eq!(rec.indicators.len(), 2);
        for s in &rec.indicators {
            assert_eq!(s.max_value, 1.0);
            assert_eq!(s.points, SamplingGrid::lattice(31, 0.1).unwrap().len());
            assert!(s.contour_count > 0);
        }
        assert!(rec.indicators[1].alpha_median.is_some());
    }
}
