use std::fs;
use std::path::Path;

use scalespace::{FieldGrid, KernelParams, Signal, SignalGrid};
use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::error::CliError;

/// Relative tolerance on CSV sample spacing.
pub const SPACING_TOL: f64 = 1e-9;
/// Largest edge magnitude, relative to the signal maximum, of a transient signal.
pub const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Deserialize)]
struct JsonSignal {
    x0: f64,
    dx: f64,
    samples: Vec<f64>,
}

/// Samples as read, before padding.
#[derive(Debug, Clone)]
pub struct RawSignal {
    pub x0: f64,
    pub dx: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ingested {
    pub input_len: usize,
    pub n: usize,
    pub x0: f64,
    pub dx: f64,
    pub edge_magnitude: f64,
    pub scale: f64,
}

fn detect(path: &Path, format: Option<Format>) -> Result<Format, CliError> {
    if let Some(f) = format {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        _ => Err(CliError::Config(format!("cannot infer the format of {}; pass --format", path.display()))),
    }
}

fn parse_csv(text: &str) -> Result<RawSignal, CliError> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [x, v] => x.parse::<f64>().ok().zip(v.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((x, v)) => {
                xs.push(x);
                vs.push(v);
            }
            // a header is allowed before the first data row
            None if xs.is_empty() && cols.len() == 2 => continue,
            None => return Err(CliError::Ingest(format!("line {}: expected two numeric columns", lineno + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(CliError::Ingest("need at least two samples".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(CliError::NonUniformSampling(format!("x must increase, mean spacing {dx}")));
    }
    for (i, w) in xs.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dx).abs() > SPACING_TOL * dx {
            return Err(CliError::NonUniformSampling(format!(
                "step {step:e} between rows {i} and {} differs from {dx:e}",
                i + 1
            )));
        }
    }
    Ok(RawSignal { x0: xs[0], dx, samples: vs })
}

fn parse_json(text: &str) -> Result<RawSignal, CliError> {
    let s: JsonSignal = serde_json::from_str(text).map_err(|e| CliError::Ingest(format!("bad signal JSON: {e}")))?;
    if !(s.dx > 0.0) || !s.dx.is_finite() || !s.x0.is_finite() {
        return Err(CliError::Ingest(format!("invalid x0 = {}, dx = {}", s.x0, s.dx)));
    }
    Ok(RawSignal { x0: s.x0, dx: s.dx, samples: s.samples })
}

pub fn read_raw(path: &Path, format: Option<Format>) -> Result<RawSignal, CliError> {
    let format = detect(path, format)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    let raw = match format {
        Format::Csv => parse_csv(&text)?,
        Format::Json => parse_json(&text)?,
    };
    if let Some(j) = raw.samples.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Ingest(format!("sample {j} is not finite")));
    }
    Ok(raw)
}

/// Zero-pads `raw` symmetrically to a power-of-two lattice after checking
/// that it vanishes at both ends.
pub fn prepare(raw: &RawSignal, pad: usize, n: Option<usize>) -> Result<(Signal, Ingested), CliError> {
    let len = raw.samples.len();
    let scale = raw.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = raw.samples[0].abs().max(raw.samples[len - 1].abs());
    if edge > EDGE_TOL * scale {
        return Err(CliError::NotTransient { edge, scale });
    }
    if pad == 0 {
        return Err(CliError::Config("padding factor must be at least 1".into()));
    }
    let wanted = (len * pad).next_power_of_two().max(16);
    let n = match n {
        None => wanted,
        Some(n) if n.is_power_of_two() && n >= len && n >= 16 => n,
        Some(n) => {
            return Err(CliError::Config(format!("N = {n} must be a power of two >= max({len}, 16)")));
        }
    };
    let left = (n - len) / 2;
    let mut samples = vec![0.0; n];
    samples[left..left + len].copy_from_slice(&raw.samples);
    let x0 = raw.x0 - left as f64 * raw.dx;
    let sig = SignalGrid::new(x0, raw.dx, samples)?;
    let info = Ingested { input_len: len, n, x0, dx: raw.dx, edge_magnitude: edge, scale };
    Ok((sig, info))
}

pub fn ingest(path: &Path, format: Option<Format>, pad: usize, n: Option<usize>) -> Result<(Signal, Ingested), CliError> {
    prepare(&read_raw(path, format)?, pad, n)
}

/// Lattice description written next to a field CSV so that it can be read
/// back without rounding the grid coordinates.
#[derive(Debug, Serialize, Deserialize)]
pub struct FieldMeta {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    pub k: u32,
    pub sigma_order: u32,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub sigma_grid: Vec<f64>,
}

impl FieldMeta {
    pub fn of(field: &FieldGrid<f64>) -> Self {
        FieldMeta {
            x0: field.x0,
            dx: field.dx,
            n: field.n,
            k: field.k,
            sigma_order: field.sigma_order,
            alpha: field.params.alpha,
            beta: field.params.beta,
            p: field.params.p,
            sigma_grid: field.sigma_grid.clone(),
        }
    }
}

pub fn sidecar(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

/// Reads a field CSV (`sigma,x,value`, row-major) and its JSON sidecar.
pub fn read_field(path: &Path) -> Result<FieldGrid<f64>, CliError> {
    let meta_path = sidecar(path);
    let meta_text =
        fs::read_to_string(&meta_path).map_err(|e| CliError::Ingest(format!("{}: {e}", meta_path.display())))?;
    let meta: FieldMeta =
        serde_json::from_str(&meta_text).map_err(|e| CliError::Ingest(format!("{}: {e}", meta_path.display())))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(meta.n * meta.sigma_grid.len());
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let [s, x, v] = cols.as_slice() else {
            return Err(CliError::Ingest(format!("field line {}: expected sigma,x,value", lineno + 1)));
        };
        let parse = |t: &str| t.parse::<f64>().map_err(|e| CliError::Ingest(format!("field line {}: {e}", lineno + 1)));
        let (s, x, v) = (parse(s)?, parse(x)?, parse(v)?);
        let idx = values.len();
        let (i, j) = (idx / meta.n.max(1), idx % meta.n.max(1));
        let expect_x = meta.x0 + j as f64 * meta.dx;
        if meta.sigma_grid.get(i) != Some(&s) || x != expect_x {
            return Err(CliError::Ingest(format!("field line {}: node ({s}, {x}) does not match the sidecar lattice", lineno + 1)));
        }
        values.push(v);
    }
    if values.len() != meta.n * meta.sigma_grid.len() {
        return Err(CliError::Ingest(format!(
            "field has {} values, sidecar describes {}",
            values.len(),
            meta.n * meta.sigma_grid.len()
        )));
    }
    let params = KernelParams::new(meta.alpha, meta.beta, meta.p)?;
    Ok(FieldGrid {
        x0: meta.x0,
        dx: meta.dx,
        n: meta.n,
        sigma_grid: meta.sigma_grid,
        k: meta.k,
        sigma_order: meta.sigma_order,
        params,
        values,
    })
}
