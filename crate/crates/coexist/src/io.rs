//! CSV readers and writers. Floats are written with Rust's shortest
//! round-trip decimal form, so output is exact and reproducible.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use qkdcoex_core::calibrate::CalibrationFit;
use qkdcoex_core::channel_plan::{ChannelPlan, FilterChoice};
use qkdcoex_core::keyflow::TraceEvent;
use qkdcoex_core::montecarlo::{ComparisonRow, DecoyReport};
use qkdcoex_core::noise::RamanEntry;
use qkdcoex_core::qkd::RatePoint;

use crate::error::{ConfigError, Result};

pub const RESULTS_HEADER: [&str; 8] = [
    "distance_km",
    "loss_db",
    "bandwidth_gbps",
    "raman_w",
    "y0",
    "sifted_bps",
    "qber",
    "secure_bps",
];

pub const ANCHORS_HEADER: [&str; 4] = ["distance_km", "filter", "bandwidth_gbps", "observed_secure_bps"];

/// File at `path`, or stdout.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| ConfigError::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

pub fn write_results<W: Write>(out: W, rows: &[RatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.distance_km),
            num(r.loss_db),
            num(r.bandwidth_gbps),
            num(r.raman_w),
            num(r.y0),
            num(r.sifted_rate),
            num(r.qber),
            num(r.secure_rate),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_plan<W: Write>(out: W, plan: &ChannelPlan) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "frequency_thz", "wavelength_nm", "role", "launch_dbm"])?;
    for c in &plan.channels {
        w.write_record([
            num(c.itu_index),
            num(c.center_frequency_thz),
            num(c.wavelength_nm),
            c.role.as_str().to_string(),
            opt_num(c.launch_dbm),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Fitted coefficients: one `rho` row per pump and an `e_det` row when the
/// optical error was fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanProfileFile {
    pub entries: Vec<RamanEntry>,
    pub e_det: Option<f64>,
}

pub fn write_profile<W: Write>(out: W, profile: &RamanProfileFile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "pump_nm", "value"])?;
    for e in &profile.entries {
        w.write_record(["rho".to_string(), num(e.pump_nm), num(e.rho)])?;
    }
    if let Some(e) = profile.e_det {
        w.write_record(["e_det".to_string(), String::new(), num(e)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn parse_field(path: &Path, row: usize, name: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::file(path, format!("row {row}: {name} '{text}' is not a number")))
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| ConfigError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(ConfigError::file(
            path,
            format!("header {:?}, expected {}", got, header.join(",")),
        ));
    }
    Ok(r.records().collect::<std::result::Result<_, _>>()?)
}

pub fn read_profile(path: &Path) -> Result<RamanProfileFile> {
    let mut profile = RamanProfileFile {
        entries: Vec::new(),
        e_det: None,
    };
    for (i, rec) in read_csv(path, &["parameter", "pump_nm", "value"])?.iter().enumerate() {
        let row = i + 2;
        let value = parse_field(path, row, "value", &rec[2])?;
        match &rec[0] {
            "rho" => profile.entries.push(RamanEntry {
                pump_nm: parse_field(path, row, "pump_nm", &rec[1])?,
                rho: value,
            }),
            "e_det" => profile.e_det = Some(value),
            other => return Err(ConfigError::file(path, format!("row {row}: unknown parameter '{other}'"))),
        }
    }
    if profile.entries.is_empty() {
        return Err(ConfigError::file(path, "profile has no rho rows"));
    }
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRow {
    pub distance_km: f64,
    pub filter: FilterChoice,
    pub bandwidth_gbps: f64,
    pub observed_secure_bps: f64,
}

pub fn read_anchors(path: &Path) -> Result<Vec<AnchorRow>> {
    let records = read_csv(path, &ANCHORS_HEADER)?;
    if records.is_empty() {
        return Err(ConfigError::file(path, "no anchors"));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 2;
            Ok(AnchorRow {
                distance_km: parse_field(path, row, "distance_km", &rec[0])?,
                filter: rec[1]
                    .parse()
                    .map_err(|e: qkdcoex_core::Error| ConfigError::file(path, format!("row {row}: {e}")))?,
                bandwidth_gbps: parse_field(path, row, "bandwidth_gbps", &rec[2])?,
                observed_secure_bps: parse_field(path, row, "observed_secure_bps", &rec[3])?,
            })
        })
        .collect()
}

pub fn write_anchors<W: Write>(out: W, rows: &[AnchorRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANCHORS_HEADER)?;
    for a in rows {
        w.write_record([
            num(a.distance_km),
            a.filter.to_string(),
            num(a.bandwidth_gbps),
            num(a.observed_secure_bps),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Analytic-versus-empirical rows followed by the decoy bound checks, whose
/// `analytic` column holds the bound.
pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow], decoy: Option<&DecoyReport>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "analytic", "empirical", "sigma", "z"])?;
    for r in rows {
        w.write_record([r.quantity.to_string(), num(r.analytic), num(r.empirical), num(r.sigma), num(r.z)])?;
    }
    if let Some(d) = decoy {
        for (name, c) in [("y0_lower", d.y0), ("y1_lower", d.y1), ("e1_upper", d.e1)] {
            w.write_record([name.to_string(), num(c.bound), num(c.empirical), num(c.sigma), num(c.z)])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "event", "level"])?;
    for e in trace {
        w.write_record([num(e.t), e.kind.as_str().to_string(), e.level.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Residual table for humans.
pub fn format_fit(fit: &CalibrationFit, anchors: &[AnchorRow]) -> String {
    let mut s = String::from("distance_km  filter  bandwidth_gbps  observed_bps  ln(model/obs)\n");
    for (a, r) in anchors.iter().zip(&fit.residuals) {
        s.push_str(&format!(
            "{:>11}  {:>6}  {:>14}  {:>12.6e}  {:>+13.5}\n",
            a.distance_km, a.filter, a.bandwidth_gbps, a.observed_secure_bps, r
        ));
    }
    s.push_str(&format!(
        "raman scale {:.6e}, e_det {}, max |residual| {:.5} (threshold {})\n",
        fit.raman_scale,
        fit.e_det.map_or_else(|| "fixed".to_string(), |e| format!("{e:.6}")),
        fit.max_abs_residual,
        fit.threshold
    ));
    s
}

pub fn default_profile_path(config: &Path) -> PathBuf {
    config.with_extension("profile.csv")
}
