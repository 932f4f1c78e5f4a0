//! Experiment configuration: defaults, validation, and a plain `key = value`
//! text format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::conditional::{DEFAULT_GRID, DEFAULT_REGION_RADIUS};
use crate::functional::{NormConstant, RGrid};
use crate::gaf::{DEFAULT_DEGREE, DEFAULT_WINDOW};
use crate::geom::Region;

/// How `Ψ̃` is normalized when the conditional suite builds its kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum NormMode {
    #[serde(alias = "paper")]
    Stated,
    Oracle,
    /// A fixed constant, or `None` to calibrate on the run's own samples.
    Calibrated(Option<f64>),
    FiniteRadius,
}

impl NormMode {
    /// The functional-level normalization, given a calibrated constant for
    /// the case where none was fixed in advance.
    pub fn resolve(self, calibrated: Option<f64>) -> Option<NormConstant> {
        match self {
            NormMode::Stated => Some(NormConstant::Stated),
            NormMode::Oracle => Some(NormConstant::Oracle),
            NormMode::FiniteRadius => Some(NormConstant::FiniteRadius),
            NormMode::Calibrated(Some(c)) => Some(NormConstant::Calibrated(c)),
            NormMode::Calibrated(None) => calibrated.map(NormConstant::Calibrated),
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormMode::Stated => f.write_str("stated"),
            NormMode::Oracle => f.write_str("oracle"),
            NormMode::FiniteRadius => f.write_str("finite-radius"),
            NormMode::Calibrated(None) => f.write_str("calibrated"),
            NormMode::Calibrated(Some(c)) => write!(f, "calibrated:{c}"),
        }
    }
}

impl FromStr for NormMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "stated" | "paper" => Ok(NormMode::Stated),
            "oracle" => Ok(NormMode::Oracle),
            "finite-radius" => Ok(NormMode::FiniteRadius),
            "calibrated" => Ok(NormMode::Calibrated(None)),
            other => match other.strip_prefix("calibrated:") {
                Some(v) => Ok(NormMode::Calibrated(Some(parse_num(v, "norm_mode")?))),
                None => Err(HarnessError::Config(format!(
                    "unknown norm mode '{other}' (stated | oracle | finite-radius | calibrated[:value])"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Config(format!("unknown format '{other}' (csv | json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    pub samples: usize,
    /// Polynomial degree `N` of the truncated series.
    pub degree: usize,
    /// Observation window `|z| ≤ window`.
    pub window: f64,
    /// Conditioning region; must be a disc.
    pub region: Region,
    pub r_start: f64,
    pub r_step: f64,
    pub r_margin: f64,
    /// Radial × angular nodes of the conditional quadrature grid.
    pub grid: (usize, usize),
    pub norm_mode: NormMode,
    /// Off-center point `q = psi_offset` (real) used by the `Ψ̃` suite.
    pub psi_offset: f64,
    pub out: Option<PathBuf>,
    /// Optional CSV of `Ψ̃` partial products for the first sample.
    pub trace_out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "default".to_string(),
            master_seed: 7,
            samples: 2000,
            degree: DEFAULT_DEGREE,
            window: DEFAULT_WINDOW,
            region: Region::centered_disc(DEFAULT_REGION_RADIUS),
            r_start: RGrid::DEFAULT_START,
            r_step: RGrid::DEFAULT_STEP,
            r_margin: RGrid::DEFAULT_MARGIN,
            grid: DEFAULT_GRID,
            norm_mode: NormMode::FiniteRadius,
            psi_offset: 0.4,
            out: None,
            trace_out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_num<T: FromStr>(v: &str, key: &str) -> Result<T, HarnessError> {
    v.trim().parse().map_err(|_| HarnessError::Config(format!("cannot parse '{v}' for {key}")))
}

/// `r` for a centered disc or `cx,cy,r`.
pub fn parse_region(v: &str) -> Result<Region, HarnessError> {
    let parts: Vec<f64> = v.split(',').map(|p| parse_num(p, "region")).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [r] => Ok(Region::centered_disc(*r)),
        [cx, cy, r] => Ok(Region::disc(Complex64::new(*cx, *cy), *r)),
        _ => Err(HarnessError::Config(format!("region '{v}': expected 'r' or 'cx,cy,r'"))),
    }
}

fn format_region(r: &Region) -> String {
    match *r {
        Region::Disc { center, radius } => {
            if center == Complex64::new(0.0, 0.0) {
                radius.to_string()
            } else {
                format!("{},{},{}", center.re, center.im, radius)
            }
        }
        // not representable in the text format; validation rejects it anyway
        Region::AnnularSector { .. } => String::from("unsupported"),
    }
}

/// `12x24`.
pub fn parse_grid(v: &str) -> Result<(usize, usize), HarnessError> {
    let (a, b) =
        v.split_once(['x', 'X']).ok_or_else(|| HarnessError::Config(format!("grid '{v}': expected RADIALxANGULAR")))?;
    Ok((parse_num(a, "grid")?, parse_num(b, "grid")?))
}

impl ExperimentConfig {
    /// Sets one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        match key.trim() {
            "name" => self.name = v.to_string(),
            "seed" | "master_seed" => self.master_seed = parse_num(v, key)?,
            "samples" => self.samples = parse_num(v, key)?,
            "degree" => self.degree = parse_num(v, key)?,
            "window" => self.window = parse_num(v, key)?,
            "region" => self.region = parse_region(v)?,
            "r_start" => self.r_start = parse_num(v, key)?,
            "r_step" => self.r_step = parse_num(v, key)?,
            "r_margin" => self.r_margin = parse_num(v, key)?,
            "grid" => self.grid = parse_grid(v)?,
            "norm_mode" => self.norm_mode = v.parse()?,
            "psi_offset" => self.psi_offset = parse_num(v, key)?,
            "out" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "trace_out" => self.trace_out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "format" => self.format = v.parse()?,
            other => return Err(HarnessError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_kv_str(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_kv_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// The `key = value` form; parsing it back gives an equal config.
    pub fn to_kv_string(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        [
            format!("name = {}", self.name),
            format!("master_seed = {}", self.master_seed),
            format!("samples = {}", self.samples),
            format!("degree = {}", self.degree),
            format!("window = {}", self.window),
            format!("region = {}", format_region(&self.region)),
            format!("r_start = {}", self.r_start),
            format!("r_step = {}", self.r_step),
            format!("r_margin = {}", self.r_margin),
            format!("grid = {}x{}", self.grid.0, self.grid.1),
            format!("norm_mode = {}", self.norm_mode),
            format!("psi_offset = {}", self.psi_offset),
            format!("out = {}", path(&self.out)),
            format!("trace_out = {}", path(&self.trace_out)),
            format!("format = {}", self.format),
        ]
        .join("\n")
            + "\n"
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.degree == 0 {
            return bad("degree must be positive".into());
        }
        if !(self.window > 0.0 && self.window < 1.0) {
            return bad(format!("window {} outside (0, 1)", self.window));
        }
        if !matches!(self.region, Region::Disc { .. }) {
            return bad("region must be a disc".into());
        }
        self.region.validate()?;
        if self.region.max_modulus() >= self.window {
            return bad(format!("region reaches |z| = {} beyond the window", self.region.max_modulus()));
        }
        if !(self.r_start > 0.0 && self.r_step > 0.0 && self.r_start.is_finite() && self.r_step.is_finite()) {
            return bad("r_start and r_step must be positive".into());
        }
        if !(self.r_margin >= 0.0 && self.r_margin < self.window) {
            return bad(format!("r_margin {} outside [0, window)", self.r_margin));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if !(self.psi_offset >= 0.0 && self.psi_offset < self.window - self.r_margin) {
            return bad(format!("psi_offset {} outside the window", self.psi_offset));
        }
        if let NormMode::Calibrated(Some(c)) = self.norm_mode {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("calibrated constant {c} must be positive"));
            }
        }
        Ok(())
    }

    /// Radius grid for a `Ψ̃` estimate centred at `q`.
    pub fn r_grid(&self, q: crate::geom::Point) -> RGrid {
        RGrid::for_window_with(q, self.window, self.r_start, self.r_step, self.r_margin)
    }
}
