//! Run configuration: one TOML file, every key optional, unknown keys
//! rejected. Complex values are written as strings such as `"5+2i"`.
//!
//! ```toml
//! rho = 0.5
//! eta = "5+2i"
//! gamma = "10+1i"
//! kernel_truncation = 20
//! collocation_points = 64
//! cutoff = 1e-8
//! threshold = 0.3
//! indicators = ["W", "P"]
//! output_dir = "out"
//!
//! [noise]          # multiplicative noise on the gap matrix
//! delta = 0.02
//! seed = 42
//!
//! [grid]
//! resolution = 101
//! margin = 0.1
//!
//! [impedance]      # deterministic current noise g + δ e^{ipθ}
//! delta = 0.0
//! p = 1
//! voltage_modes = [1, 2]
//! order = 10
//! quadrature = 256
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{AnnulusConfig, ImpedancePair};
use crate::impedance::{DEFAULT_ORDER, DEFAULT_QUADRATURE};
use crate::operator::NoiseSpec;
use crate::sampling::{IndicatorKind, SamplingGrid, DEFAULT_CUTOFF, DEFAULT_MARGIN, DEFAULT_RESOLUTION, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub rho: f64,
    #[serde(with = "complex_str")]
    pub eta: Complex64,
    #[serde(with = "complex_str")]
    pub gamma: Complex64,
    pub kernel_truncation: usize,
    pub collocation_points: usize,
    pub cutoff: f64,
    pub threshold: f64,
    pub indicators: Vec<IndicatorKind>,
    pub output_dir: PathBuf,
    pub noise: MatrixNoise,
    pub grid: GridConfig,
    pub impedance: ImpedanceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixNoise {
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub resolution: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceConfig {
    pub delta: f64,
    pub p: usize,
    pub voltage_modes: Vec<i64>,
    pub order: usize,
    pub quadrature: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            eta: Complex64::new(5.0, 2.0),
            gamma: Complex64::new(10.0, 1.0),
            kernel_truncation: 20,
            collocation_points: 64,
            cutoff: DEFAULT_CUTOFF,
            threshold: DEFAULT_THRESHOLD,
            indicators: vec![IndicatorKind::W],
            output_dir: PathBuf::from("out"),
            noise: MatrixNoise::default(),
            grid: GridConfig::default(),
            impedance: ImpedanceConfig::default(),
        }
    }
}

impl Default for MatrixNoise {
    fn default() -> Self {
        Self { delta: 0.02, seed: 42 }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl Default for ImpedanceConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            p: 1,
            voltage_modes: vec![1, 2],
            order: DEFAULT_ORDER,
            quadrature: DEFAULT_QUADRATURE,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rho: Option<f64>,
    pub eta: Option<Complex64>,
    pub gamma: Option<Complex64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub cutoff: Option<f64>,
    pub threshold: Option<f64>,
    pub indicators: Option<Vec<IndicatorKind>>,
    pub output_dir: Option<PathBuf>,
    pub impedance_delta: Option<f64>,
    pub impedance_p: Option<usize>,
}

/// The validated domain objects a run works with.
#[derive(Debug, Clone)]
pub struct RunParts {
    pub annulus: AnnulusConfig,
    pub impedance: ImpedancePair,
    pub noise: NoiseSpec,
    pub grid: SamplingGrid,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config, or the `config` object of a run manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value = serde_json::from_str(&text)?;
            let cfg = v
                .get_mut("config")
                .map(serde_json::Value::take)
                .ok_or_else(|| Error::Config(format!("{} has no `config` object", path.display())))?;
            return serde_json::from_value(cfg).map_err(|e| Error::Config(e.to_string()));
        }
        Self::from_toml_str(&text)
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.rho => self.rho);
        set!(o.eta => self.eta);
        set!(o.gamma => self.gamma);
        set!(o.delta => self.noise.delta);
        set!(o.seed => self.noise.seed);
        set!(o.resolution => self.grid.resolution);
        set!(o.cutoff => self.cutoff);
        set!(o.threshold => self.threshold);
        set!(o.indicators => self.indicators);
        set!(o.output_dir => self.output_dir);
        set!(o.impedance_delta => self.impedance.delta);
        set!(o.impedance_p => self.impedance.p);
        self
    }

    pub fn validate(&self) -> Result<RunParts> {
        let annulus = AnnulusConfig::new(self.rho, self.kernel_truncation, self.collocation_points)?;
        let impedance = ImpedancePair::new(self.eta, self.gamma)?;
        let noise = NoiseSpec::new(self.noise.delta, self.noise.seed)?;
        let grid = SamplingGrid::lattice(self.grid.resolution, self.grid.margin)?;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.cutoff > 0.0) {
            return bad(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.indicators.is_empty() {
            return bad("at least one indicator kind is required".into());
        }
        let imp = &self.impedance;
        if imp.voltage_modes.len() < 2 || imp.voltage_modes.iter().any(|&n| n == 0 || n.unsigned_abs() as usize > imp.order) {
            return bad(format!(
                "impedance.voltage_modes needs >= 2 nonzero modes within the order {}",
                imp.order
            ));
        }
        if imp.p == 0 || imp.p > imp.order {
            return bad(format!("impedance.p must lie in 1..={}", imp.order));
        }
        if !(imp.delta >= 0.0) {
            return bad(format!("impedance.delta must be >= 0, got {}", imp.delta));
        }
        if imp.quadrature < 2 * imp.order + 2 {
            return bad(format!("impedance.quadrature must be >= {}", 2 * imp.order + 2));
        }
        Ok(RunParts {
            annulus,
            impedance,
            noise,
            grid,
        })
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` (spaces ignored, exponents allowed).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Config(format!("cannot parse complex number {s:?}"));
    let num = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| err()),
        }
    };
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(t.parse::<f64>().map_err(|_| err())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let z = match split {
        Some(k) => Complex64::new(body[..k].parse::<f64>().map_err(|_| err())?, num(&body[k..])?),
        None => Complex64::new(0.0, num(body)?),
    };
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(err());
    }
    Ok(z)
}

/// `re±imi` with shortest round-trip digits.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

mod complex_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_complex(*z))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        let s = String::deserialize(d)?;
        parse_complex(&s).map_err(serde::de::Error::custom)
    }
}
