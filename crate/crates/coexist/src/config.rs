//! Scenario files: sectioned `key = value` text with `#` comments.
//!
//! Every key has a fixed dimension; values may carry a unit suffix and are
//! normalised on parse. [`ScenarioConfig::dump`] writes every key in
//! canonical units, so `parse(dump(c)) == c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qkdcoex_core::calibrate::FitParam;
use qkdcoex_core::channel_plan::{build_plan, ChannelSpec, FilterChoice, PlanConfig};
use qkdcoex_core::link_budget::{FiberSpan, DEFAULT_LAUNCH_CAP_DBM};
use qkdcoex_core::noise::{DetectorParams, RamanEntry, RamanProfile};
use qkdcoex_core::qkd::ProtocolParams;
use qkdcoex_core::scenario::{BandwidthEquivalence, LinkScenario};

use crate::error::{ConfigError, Result};
use crate::quantity::{format_number, format_quantity, parse_count, parse_quantity, Dimension};

/// Inclusive arithmetic range; `start == stop` is a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.start <= self.stop) {
            return Err(format!("start {} exceeds stop {}", self.start, self.stop));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(format!("step {} must be positive", self.step));
        }
        Ok(())
    }

    /// `start + k·step` up to `stop`, absorbing rounding at the end point.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanSettings {
    /// Coefficient at `reference_pump_nm`, 1/(km·nm); others scale with
    /// Stokes shift.
    pub rho: Option<f64>,
    pub reference_pump_nm: f64,
    /// Explicit per-pump coefficients; override `rho`.
    pub entries: Vec<RamanEntry>,
    /// Calibration profile written by `calibrate`; overrides both.
    pub profile: Option<PathBuf>,
    pub fit: Vec<FitParam>,
}

impl Default for RamanSettings {
    fn default() -> Self {
        Self {
            rho: None,
            reference_pump_nm: qkdcoex_core::scenario::REFERENCE_PUMP_NM,
            entries: Vec::new(),
            profile: None,
            fit: vec![FitParam::RamanScale, FitParam::OpticalError],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub distance_km: SweepRange,
    pub bandwidth_gbps: SweepRange,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            distance_km: SweepRange {
                start: 0.0,
                stop: 110.0,
                step: 5.0,
            },
            bandwidth_gbps: SweepRange {
                start: 100.0,
                stop: 10_000.0,
                step: 100.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSettings {
    pub gates: u64,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self { gates: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyflowSettings {
    pub cards: u32,
    pub policy_interval_s: f64,
    pub duration_s: f64,
    pub capacity_bits: u64,
    pub initial_level_bits: u64,
    /// Uses the modelled secure rate when absent.
    pub fill_rate_bps: Option<f64>,
    pub pre_fec_ber: f64,
}

impl Default for KeyflowSettings {
    fn default() -> Self {
        Self {
            cards: 2,
            policy_interval_s: 250e-6,
            duration_s: 60.0,
            capacity_bits: qkdcoex_core::keyflow::DEFAULT_CAPACITY_BITS,
            initial_level_bits: 0,
            fill_rate_bps: None,
            pre_fec_ber: 2.2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub plan: PlanConfig,
    pub launch_cap_dbm: f64,
    pub bandwidth: BandwidthEquivalence,
    pub detector: DetectorParams,
    pub protocol: ProtocolParams,
    pub raman: RamanSettings,
    pub sweep: SweepSettings,
    pub montecarlo: MonteCarloSettings,
    pub keyflow: KeyflowSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            length_km: 50.0,
            attenuation_db_per_km: 0.19,
            plan: PlanConfig::two_channel(),
            launch_cap_dbm: DEFAULT_LAUNCH_CAP_DBM,
            bandwidth: BandwidthEquivalence::default(),
            detector: DetectorParams::default(),
            protocol: ProtocolParams::default(),
            raman: RamanSettings::default(),
            sweep: SweepSettings::default(),
            montecarlo: MonteCarloSettings::default(),
            keyflow: KeyflowSettings::default(),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("fiber", &["length", "attenuation"]),
    ("quantum", &["channel"]),
    (
        "classical",
        &["data", "sync", "reconciliation", "launch", "launch_cap", "reference_launch", "gbps_per_channel"],
    ),
    (
        "filters",
        &[
            "select",
            "cwdm_loss",
            "dwdm96_loss",
            "loss_100ghz",
            "loss_25ghz",
            "passband_100ghz",
            "fwhm_100ghz",
            "passband_25ghz",
            "fwhm_25ghz",
        ],
    ),
    (
        "detector",
        &["efficiency", "dark_count", "afterpulse", "gate_rate", "on_time", "count"],
    ),
    (
        "protocol",
        &["mu", "nu1", "nu2", "p_basis", "p_signal", "p_nu1", "p_nu2", "f_ec", "clock", "e_det"],
    ),
    ("raman", &["rho", "reference_pump", "entries", "profile", "fit"]),
    (
        "sweep",
        &[
            "distance_start",
            "distance_stop",
            "distance_step",
            "bandwidth_start",
            "bandwidth_stop",
            "bandwidth_step",
        ],
    ),
    ("montecarlo", &["gates"]),
    (
        "keyflow",
        &["cards", "policy_interval", "duration", "capacity", "initial_level", "fill_rate", "pre_fec_ber"],
    ),
];

struct Entry {
    line: usize,
    value: String,
}

/// Raw key-value pairs with their source lines.
struct Raw {
    entries: BTreeMap<(String, String), Entry>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("unterminated section header '{content}'"),
                })?;
                let name = name.trim().to_string();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::UnknownSection { line, name });
                }
                section = Some(name);
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim().to_string();
            let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("key '{key}' outside any section"),
            })?;
            let known = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, section: sec, key });
            }
            let slot = (sec, key.clone());
            if entries.contains_key(&slot) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            entries.insert(
                slot,
                Entry {
                    line,
                    value: value.trim().to_string(),
                },
            );
        }
        Ok(Self { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn bad(entry: &Entry, key: &str, message: String) -> ConfigError {
        ConfigError::BadValue {
            line: entry.line,
            key: key.to_string(),
            message,
        }
    }

    fn with<T>(
        &self,
        section: &str,
        key: &str,
        target: &mut T,
        parse: impl FnOnce(&str) -> std::result::Result<T, String>,
    ) -> Result<()> {
        if let Some(e) = self.get(section, key) {
            *target = parse(&e.value).map_err(|m| Self::bad(e, key, m))?;
        }
        Ok(())
    }

    fn quantity(&self, section: &str, key: &str, dim: Dimension, target: &mut f64) -> Result<()> {
        self.with(section, key, target, |v| parse_quantity(v, dim))
    }

    /// An empty value clears the option.
    fn optional(&self, section: &str, key: &str, dim: Dimension, target: &mut Option<f64>) -> Result<()> {
        self.with(section, key, target, |v| optional_quantity(v, dim))
    }
}

fn optional_quantity(v: &str, dim: Dimension) -> std::result::Result<Option<f64>, String> {
    let v = v.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_quantity(v, dim).map(Some)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// `index[@wavelength][:power]`.
pub fn parse_channel(text: &str) -> std::result::Result<ChannelSpec, String> {
    let (head, power) = match text.split_once(':') {
        Some((h, p)) => (h, Some(parse_quantity(p, Dimension::Power)?)),
        None => (text, None),
    };
    let (index, nm) = match head.split_once('@') {
        Some((i, w)) => (i, Some(parse_quantity(w, Dimension::Wavelength)?)),
        None => (head, None),
    };
    Ok(ChannelSpec {
        itu_index: parse_quantity(index, Dimension::Plain)?,
        wavelength_nm: nm,
        launch_dbm: power,
    })
}

pub fn format_channel(spec: &ChannelSpec) -> String {
    let mut s = format_number(spec.itu_index);
    if let Some(nm) = spec.wavelength_nm {
        let _ = write!(s, "@{}", format_quantity(nm, Dimension::Wavelength));
    }
    if let Some(p) = spec.launch_dbm {
        let _ = write!(s, ":{}", format_quantity(p, Dimension::Power));
    }
    s
}

fn parse_channels(v: &str) -> std::result::Result<Vec<ChannelSpec>, String> {
    split_list(v).map(parse_channel).collect()
}

fn parse_entries(v: &str) -> std::result::Result<Vec<RamanEntry>, String> {
    split_list(v)
        .map(|item| {
            let (pump, rho) = item
                .split_once(':')
                .ok_or_else(|| format!("'{item}' should be pump:rho"))?;
            Ok(RamanEntry {
                pump_nm: parse_quantity(pump, Dimension::Wavelength)?,
                rho: parse_quantity(rho, Dimension::Plain)?,
            })
        })
        .collect()
}

fn parse_fit(v: &str) -> std::result::Result<Vec<FitParam>, String> {
    let mut out = Vec::new();
    for item in split_list(v) {
        let p = match item {
            "rho" | "raman_scale" => FitParam::RamanScale,
            "e_det" => FitParam::OpticalError,
            other => return Err(format!("unknown fit parameter '{other}' (rho, e_det)")),
        };
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

fn fit_name(p: FitParam) -> &'static str {
    match p {
        FitParam::RamanScale => "rho",
        FitParam::OpticalError => "e_det",
    }
}

fn to_u32(v: u64) -> std::result::Result<u32, String> {
    u32::try_from(v).map_err(|_| format!("{v} is too large"))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw = Raw::parse(text)?;
        let mut c = Self::default();
        use Dimension::*;

        raw.quantity("fiber", "length", Length, &mut c.length_km)?;
        raw.quantity("fiber", "attenuation", Attenuation, &mut c.attenuation_db_per_km)?;

        if let Some(e) = raw.get("quantum", "channel") {
            let spec = parse_channel(&e.value).map_err(|m| Raw::bad(e, "channel", m))?;
            if spec.launch_dbm.is_some() {
                return Err(Raw::bad(e, "channel", "the quantum channel has no launch power".into()));
            }
            c.plan.quantum = Some(spec);
        }
        raw.with("classical", "data", &mut c.plan.data, parse_channels)?;
        raw.with("classical", "sync", &mut c.plan.sync, parse_channels)?;
        raw.with("classical", "reconciliation", &mut c.plan.reconciliation, parse_channels)?;
        raw.quantity("classical", "launch", Power, &mut c.plan.default_launch_dbm)?;
        raw.quantity("classical", "launch_cap", Power, &mut c.launch_cap_dbm)?;
        raw.quantity("classical", "reference_launch", Power, &mut c.bandwidth.reference_launch_dbm)?;
        raw.quantity("classical", "gbps_per_channel", DataRate, &mut c.bandwidth.gbps_per_channel)?;

        raw.with("filters", "select", &mut c.plan.filter, |v| {
            v.parse::<FilterChoice>().map_err(|e| e.to_string())
        })?;
        let losses = &mut c.plan.losses;
        raw.quantity("filters", "cwdm_loss", Loss, &mut losses.cwdm_db)?;
        raw.quantity("filters", "dwdm96_loss", Loss, &mut losses.dwdm96_db)?;
        raw.quantity("filters", "loss_100ghz", Loss, &mut losses.filter_100ghz_db)?;
        raw.quantity("filters", "loss_25ghz", Loss, &mut losses.filter_25ghz_db)?;
        let shapes = &mut c.plan.filter_shapes;
        raw.quantity("filters", "passband_100ghz", OpticalWidth, &mut shapes.passband_100ghz)?;
        raw.optional("filters", "fwhm_100ghz", OpticalWidth, &mut shapes.fwhm_100ghz)?;
        raw.quantity("filters", "passband_25ghz", OpticalWidth, &mut shapes.passband_25ghz)?;
        raw.optional("filters", "fwhm_25ghz", OpticalWidth, &mut shapes.fwhm_25ghz)?;

        let d = &mut c.detector;
        raw.quantity("detector", "efficiency", Plain, &mut d.efficiency)?;
        raw.quantity("detector", "dark_count", Plain, &mut d.dark_count_prob)?;
        raw.quantity("detector", "afterpulse", Plain, &mut d.afterpulse_prob)?;
        raw.quantity("detector", "gate_rate", Rate, &mut d.gate_rate_hz)?;
        raw.quantity("detector", "on_time", Time, &mut d.effective_on_time_s)?;
        raw.with("detector", "count", &mut d.num_detectors, |v| parse_count(v).and_then(to_u32))?;

        let p = &mut c.protocol;
        raw.quantity("protocol", "mu", Plain, &mut p.mu)?;
        raw.quantity("protocol", "nu1", Plain, &mut p.nu1)?;
        raw.quantity("protocol", "nu2", Plain, &mut p.nu2)?;
        raw.quantity("protocol", "p_basis", Plain, &mut p.p_basis_major)?;
        raw.quantity("protocol", "p_signal", Plain, &mut p.p_signal)?;
        raw.quantity("protocol", "p_nu1", Plain, &mut p.p_nu1)?;
        raw.quantity("protocol", "p_nu2", Plain, &mut p.p_nu2)?;
        raw.quantity("protocol", "f_ec", Plain, &mut p.f_ec)?;
        raw.quantity("protocol", "clock", Rate, &mut p.clock_rate_hz)?;
        raw.quantity("protocol", "e_det", Plain, &mut p.e_det)?;

        let r = &mut c.raman;
        raw.optional("raman", "rho", Plain, &mut r.rho)?;
        raw.quantity("raman", "reference_pump", Wavelength, &mut r.reference_pump_nm)?;
        raw.with("raman", "entries", &mut r.entries, parse_entries)?;
        raw.with("raman", "profile", &mut r.profile, |v| {
            Ok((!v.is_empty()).then(|| PathBuf::from(v)))
        })?;
        raw.with("raman", "fit", &mut r.fit, parse_fit)?;

        let s = &mut c.sweep;
        raw.quantity("sweep", "distance_start", Length, &mut s.distance_km.start)?;
        raw.quantity("sweep", "distance_stop", Length, &mut s.distance_km.stop)?;
        raw.quantity("sweep", "distance_step", Length, &mut s.distance_km.step)?;
        raw.quantity("sweep", "bandwidth_start", DataRate, &mut s.bandwidth_gbps.start)?;
        raw.quantity("sweep", "bandwidth_stop", DataRate, &mut s.bandwidth_gbps.stop)?;
        raw.quantity("sweep", "bandwidth_step", DataRate, &mut s.bandwidth_gbps.step)?;
        for (key, range) in [("distance_step", s.distance_km), ("bandwidth_step", s.bandwidth_gbps)] {
            if let Err(m) = range.validate() {
                let line = raw.get("sweep", key).map_or(0, |e| e.line);
                return Err(ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    message: m,
                });
            }
        }

        raw.with("montecarlo", "gates", &mut c.montecarlo.gates, parse_count)?;

        let k = &mut c.keyflow;
        raw.with("keyflow", "cards", &mut k.cards, |v| parse_count(v).and_then(to_u32))?;
        raw.quantity("keyflow", "policy_interval", Time, &mut k.policy_interval_s)?;
        raw.quantity("keyflow", "duration", Time, &mut k.duration_s)?;
        raw.with("keyflow", "capacity", &mut k.capacity_bits, |v| {
            parse_quantity(v, Bits).map(|b| b.round() as u64)
        })?;
        raw.with("keyflow", "initial_level", &mut k.initial_level_bits, |v| {
            parse_quantity(v, Bits).map(|b| b.round() as u64)
        })?;
        raw.optional("keyflow", "fill_rate", BitRate, &mut k.fill_rate_bps)?;
        raw.quantity("keyflow", "pre_fec_ber", Plain, &mut k.pre_fec_ber)?;

        c.validate()?;
        Ok(c)
    }

    /// Parses `path`; a relative `profile` is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        let mut c = Self::parse(&text).map_err(|e| match e {
            ConfigError::Model(_) | ConfigError::Io { .. } => e,
            other => ConfigError::file(path, other.to_string()),
        })?;
        if let Some(p) = c.raman.profile.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(c)
    }

    /// Checks everything that does not need the Raman profile.
    pub fn validate(&self) -> Result<()> {
        build_plan(&self.plan)?;
        FiberSpan::new(self.length_km, self.attenuation_db_per_km)?;
        self.detector.validate()?;
        self.protocol.validate()?;
        if !(self.bandwidth.gbps_per_channel > 0.0) {
            return Err(qkdcoex_core::Error::InvalidPlan(format!(
                "gbps_per_channel {} must be positive",
                self.bandwidth.gbps_per_channel
            ))
            .into());
        }
        if let Some(rho) = self.raman.rho {
            if !(rho > 0.0) {
                return Err(qkdcoex_core::Error::InvalidRaman(format!("rho {rho} must be positive")).into());
            }
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        use Dimension::*;
        let mut out = String::new();
        let q = |v: f64, d: Dimension| format_quantity(v, d);
        let opt = |v: Option<f64>, d: Dimension| v.map_or_else(|| "none".to_string(), |v| q(v, d));
        let channels = |list: &[ChannelSpec]| list.iter().map(format_channel).collect::<Vec<_>>().join(", ");
        let mut section = |name: &str, pairs: Vec<(&str, String)>| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in pairs {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        };

        section(
            "fiber",
            vec![
                ("length", q(self.length_km, Length)),
                ("attenuation", q(self.attenuation_db_per_km, Attenuation)),
            ],
        );
        section(
            "quantum",
            self.plan.quantum.iter().map(|s| ("channel", format_channel(s))).collect(),
        );
        let plan = &self.plan;
        section(
            "classical",
            vec![
                ("data", channels(&plan.data)),
                ("sync", channels(&plan.sync)),
                ("reconciliation", channels(&plan.reconciliation)),
                ("launch", q(plan.default_launch_dbm, Power)),
                ("launch_cap", q(self.launch_cap_dbm, Power)),
                ("reference_launch", q(self.bandwidth.reference_launch_dbm, Power)),
                ("gbps_per_channel", q(self.bandwidth.gbps_per_channel, DataRate)),
            ],
        );
        let (l, s) = (&plan.losses, &plan.filter_shapes);
        section(
            "filters",
            vec![
                ("select", plan.filter.to_string()),
                ("cwdm_loss", q(l.cwdm_db, Loss)),
                ("dwdm96_loss", q(l.dwdm96_db, Loss)),
                ("loss_100ghz", q(l.filter_100ghz_db, Loss)),
                ("loss_25ghz", q(l.filter_25ghz_db, Loss)),
                ("passband_100ghz", q(s.passband_100ghz, OpticalWidth)),
                ("fwhm_100ghz", opt(s.fwhm_100ghz, OpticalWidth)),
                ("passband_25ghz", q(s.passband_25ghz, OpticalWidth)),
                ("fwhm_25ghz", opt(s.fwhm_25ghz, OpticalWidth)),
            ],
        );
        let d = &self.detector;
        section(
            "detector",
            vec![
                ("efficiency", q(d.efficiency, Plain)),
                ("dark_count", q(d.dark_count_prob, Plain)),
                ("afterpulse", q(d.afterpulse_prob, Plain)),
                ("gate_rate", q(d.gate_rate_hz, Rate)),
                ("on_time", q(d.effective_on_time_s, Time)),
                ("count", d.num_detectors.to_string()),
            ],
        );
        let p = &self.protocol;
        section(
            "protocol",
            vec![
                ("mu", q(p.mu, Plain)),
                ("nu1", q(p.nu1, Plain)),
                ("nu2", q(p.nu2, Plain)),
                ("p_basis", q(p.p_basis_major, Plain)),
                ("p_signal", q(p.p_signal, Plain)),
                ("p_nu1", q(p.p_nu1, Plain)),
                ("p_nu2", q(p.p_nu2, Plain)),
                ("f_ec", q(p.f_ec, Plain)),
                ("clock", q(p.clock_rate_hz, Rate)),
                ("e_det", q(p.e_det, Plain)),
            ],
        );
        let r = &self.raman;
        section(
            "raman",
            vec![
                ("rho", opt(r.rho, Plain)),
                ("reference_pump", q(r.reference_pump_nm, Wavelength)),
                (
                    "entries",
                    r.entries
                        .iter()
                        .map(|e| format!("{}:{}", q(e.pump_nm, Wavelength), format_number(e.rho)))
                        .collect::<Vec<_>>()
                        .join(", "),
                ),
                ("profile", r.profile.as_ref().map_or_else(String::new, |p| p.display().to_string())),
                ("fit", r.fit.iter().map(|&f| fit_name(f)).collect::<Vec<_>>().join(", ")),
            ],
        );
        let (dk, bw) = (&self.sweep.distance_km, &self.sweep.bandwidth_gbps);
        section(
            "sweep",
            vec![
                ("distance_start", q(dk.start, Length)),
                ("distance_stop", q(dk.stop, Length)),
                ("distance_step", q(dk.step, Length)),
                ("bandwidth_start", q(bw.start, DataRate)),
                ("bandwidth_stop", q(bw.stop, DataRate)),
                ("bandwidth_step", q(bw.step, DataRate)),
            ],
        );
        section("montecarlo", vec![("gates", self.montecarlo.gates.to_string())]);
        let k = &self.keyflow;
        section(
            "keyflow",
            vec![
                ("cards", k.cards.to_string()),
                ("policy_interval", q(k.policy_interval_s, Time)),
                ("duration", q(k.duration_s, Time)),
                ("capacity", format!("{}bit", k.capacity_bits)),
                ("initial_level", format!("{}bit", k.initial_level_bits)),
                ("fill_rate", opt(k.fill_rate_bps, BitRate)),
                ("pre_fec_ber", q(k.pre_fec_ber, Plain)),
            ],
        );
        out.pop();
        out
    }

    /// Plan inputs with an optional filter override.
    pub fn plan_config(&self, filter: Option<FilterChoice>) -> PlanConfig {
        let mut plan = self.plan.clone();
        if let Some(f) = filter {
            plan.filter = f;
        }
        plan
    }

    /// Scenario whose Raman profile is Stokes-scaled from `reference_rho`,
    /// ignoring any configured coefficients.
    pub fn scenario_with_rho(&self, filter: Option<FilterChoice>, reference_rho: f64) -> Result<LinkScenario> {
        let plan = build_plan(&self.plan_config(filter))?;
        let raman = RamanProfile::stokes_scaled(
            plan.quantum().wavelength_nm,
            self.raman.reference_pump_nm,
            reference_rho,
            plan.data_channels().map(|c| c.wavelength_nm),
        )?;
        self.assemble(plan, raman)
    }

    /// Scenario with explicit per-pump coefficients.
    pub fn scenario_with_profile(
        &self,
        filter: Option<FilterChoice>,
        entries: Vec<RamanEntry>,
    ) -> Result<LinkScenario> {
        let plan = build_plan(&self.plan_config(filter))?;
        let raman = RamanProfile::new(plan.quantum().wavelength_nm, entries)?;
        self.assemble(plan, raman)
    }

    fn assemble(&self, plan: qkdcoex_core::channel_plan::ChannelPlan, raman: RamanProfile) -> Result<LinkScenario> {
        let scenario = LinkScenario {
            plan,
            span: FiberSpan::new(self.length_km, self.attenuation_db_per_km)?,
            detector: self.detector,
            protocol: self.protocol,
            raman,
            launch_cap_dbm: self.launch_cap_dbm,
            bandwidth: self.bandwidth,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
