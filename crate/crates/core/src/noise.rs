//! Forward spontaneous Raman scattering from co-propagating data channels
//! into the quantum channel, and the per-gate background it produces in
//! gated single-photon detectors.
//!
//! The scattered power collected in a rectangular bandwidth `Δλ` after a span
//! of length `L` is
//!
//! ```text
//! P_R = Σ_pumps P_launch · ρ(pump) · Δλ · L · 10^(-αL/10)
//! ```
//!
//! with a single attenuation `α` for pump and signal. `ρ` is referenced to
//! the detector input, so receive-side insertion losses are already inside
//! it and are not applied again.

use alloc::format;
use alloc::vec::Vec;

use crate::channel_plan::{ChannelPlan, MuxElement};
use crate::error::{domain, Error, Result};
use crate::link_budget::{dbm_to_watts, FiberSpan};
use crate::math;
use crate::units::{C_M_PER_S, C_NM_THZ, PLANCK_C};

/// Pumps closer than this are the same table entry, nm.
pub const PUMP_MATCH_TOLERANCE_NM: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanEntry {
    pub pump_nm: f64,
    /// Scattering coefficient into the quantum wavelength, 1/(km·nm).
    pub rho: f64,
}

/// Per-pump forward scattering coefficients for one quantum wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanProfile {
    pub quantum_wavelength_nm: f64,
    pub entries: Vec<RamanEntry>,
}

/// Stokes frequency shift between pump and quantum channel, THz.
pub fn stokes_shift_thz(pump_nm: f64, quantum_nm: f64) -> f64 {
    C_NM_THZ / pump_nm - C_NM_THZ / quantum_nm
}

impl RamanProfile {
    pub fn new(quantum_wavelength_nm: f64, entries: Vec<RamanEntry>) -> Result<Self> {
        let profile = Self {
            quantum_wavelength_nm,
            entries,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Profile whose coefficients grow linearly with the Stokes shift, pinned
    /// to `reference_rho` at `reference_pump_nm`. Near 2 THz shifts the Raman
    /// gain of silica rises roughly linearly with detuning, so the pump
    /// furthest from the quantum channel scatters the most.
    pub fn stokes_scaled(
        quantum_wavelength_nm: f64,
        reference_pump_nm: f64,
        reference_rho: f64,
        pumps: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let reference_shift = stokes_shift_thz(reference_pump_nm, quantum_wavelength_nm);
        if !(reference_shift > 0.0) {
            return Err(Error::InvalidRaman(format!(
                "reference pump {reference_pump_nm} nm is not blue of the quantum channel"
            )));
        }
        let mut entries: Vec<RamanEntry> = Vec::new();
        for pump_nm in pumps {
            if entries.iter().any(|e| (e.pump_nm - pump_nm).abs() < PUMP_MATCH_TOLERANCE_NM) {
                continue;
            }
            let shift = stokes_shift_thz(pump_nm, quantum_wavelength_nm);
            entries.push(RamanEntry {
                pump_nm,
                rho: reference_rho * shift / reference_shift,
            });
        }
        Self::new(quantum_wavelength_nm, entries)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quantum_wavelength_nm > 0.0) {
            return Err(Error::InvalidRaman(format!(
                "quantum wavelength {} nm",
                self.quantum_wavelength_nm
            )));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if !(e.rho > 0.0) || !e.rho.is_finite() {
                return Err(Error::InvalidRaman(format!(
                    "coefficient {} for pump {} nm must be positive",
                    e.rho, e.pump_nm
                )));
            }
            if !(e.pump_nm > 0.0) {
                return Err(Error::InvalidRaman(format!("pump wavelength {} nm", e.pump_nm)));
            }
            if self.entries[..i]
                .iter()
                .any(|o| (o.pump_nm - e.pump_nm).abs() < PUMP_MATCH_TOLERANCE_NM)
            {
                return Err(Error::InvalidRaman(format!("duplicate pump {} nm", e.pump_nm)));
            }
        }
        Ok(())
    }

    pub fn rho_for(&self, pump_nm: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| (e.pump_nm - pump_nm).abs() < PUMP_MATCH_TOLERANCE_NM)
            .map(|e| e.rho)
            .ok_or(Error::MissingRamanEntry(pump_nm))
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            quantum_wavelength_nm: self.quantum_wavelength_nm,
            entries: self
                .entries
                .iter()
                .map(|e| RamanEntry {
                    pump_nm: e.pump_nm,
                    rho: e.rho * factor,
                })
                .collect(),
        }
    }

    /// Replaces or inserts the coefficient for one pump.
    pub fn set(&mut self, pump_nm: f64, rho: f64) {
        match self
            .entries
            .iter_mut()
            .find(|e| (e.pump_nm - pump_nm).abs() < PUMP_MATCH_TOLERANCE_NM)
        {
            Some(e) => e.rho = rho,
            None => self.entries.push(RamanEntry { pump_nm, rho }),
        }
    }
}

/// Gated detector parameters; defaults are the self-differencing InGaAs APDs
/// clocked at 1 GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// Dark count probability per gate per detector.
    pub dark_count_prob: f64,
    pub gate_rate_hz: f64,
    /// Effective on-time per gate after temporal filtering, s.
    pub effective_on_time_s: f64,
    pub num_detectors: u32,
    /// Added to the dark count probability.
    pub afterpulse_prob: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            efficiency: 0.225,
            dark_count_prob: 4.5e-6,
            gate_rate_hz: 1e9,
            effective_on_time_s: 125e-12,
            num_detectors: 2,
            afterpulse_prob: 0.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidDetector(format!("efficiency {} not in (0, 1]", self.efficiency)));
        }
        for (name, p) in [("dark count", self.dark_count_prob), ("afterpulse", self.afterpulse_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDetector(format!("{name} probability {p} not in [0, 1]")));
            }
        }
        if !(self.gate_rate_hz > 0.0) || !self.gate_rate_hz.is_finite() {
            return Err(Error::InvalidDetector(format!("gate rate {} Hz", self.gate_rate_hz)));
        }
        if !(self.effective_on_time_s >= 0.0) || self.effective_on_time_s * self.gate_rate_hz > 1.0 + 1e-12 {
            return Err(Error::InvalidDetector(format!(
                "effective on-time {} s must lie within one gate period",
                self.effective_on_time_s
            )));
        }
        if self.num_detectors == 0 {
            return Err(Error::InvalidDetector("at least one detector required".into()));
        }
        Ok(())
    }

    /// Fraction of continuous background light that falls inside the
    /// effective on-time.
    pub fn temporal_acceptance(&self) -> f64 {
        self.effective_on_time_s * self.gate_rate_hz
    }
}

/// Rectangular noise bandwidth of a filter, `Δλ = λ²·Δf/c`, using the FWHM
/// when it is known and the nominal passband otherwise.
pub fn filter_bandwidth_nm(filter: &MuxElement, quantum_wavelength_nm: f64) -> Result<f64> {
    let passband = filter.passband_ghz.ok_or(Error::MissingPassband)?;
    let width_ghz = filter.fwhm_ghz.unwrap_or(passband);
    let lambda_m = quantum_wavelength_nm * 1e-9;
    Ok(lambda_m * lambda_m * width_ghz * 1e9 / C_M_PER_S * 1e9)
}

/// Forward Raman power from one pump, W.
pub fn forward_raman_power(
    launch_w: f64,
    rho: f64,
    span: &FiberSpan,
    delta_lambda_nm: f64,
) -> Result<f64> {
    for (name, v) in [("launch power", launch_w), ("rho", rho), ("delta_lambda", delta_lambda_nm)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(domain(name, v, "[0, inf)"));
        }
    }
    let l = span.length_km;
    Ok(launch_w * rho * delta_lambda_nm * l * math::pow10(-span.attenuation_db_per_km * l / 10.0))
}

/// Forward Raman power summed over every data channel with a modelled
/// launch power, W.
pub fn plan_raman_power(
    plan: &ChannelPlan,
    profile: &RamanProfile,
    span: &FiberSpan,
    delta_lambda_nm: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for ch in plan.data_channels() {
        if let Some(dbm) = ch.launch_dbm {
            let rho = profile.rho_for(ch.wavelength_nm)?;
            total += forward_raman_power(dbm_to_watts(dbm), rho, span, delta_lambda_nm)?;
        }
    }
    Ok(total)
}

/// Length at which `L·10^(-αL/10)` peaks, `10 / (α·ln 10)` km.
pub fn raman_peak_distance(attenuation_db_per_km: f64) -> Result<f64> {
    if !(attenuation_db_per_km > 0.0) || !attenuation_db_per_km.is_finite() {
        return Err(domain("attenuation", attenuation_db_per_km, "(0, inf)"));
    }
    Ok(10.0 / (attenuation_db_per_km * core::f64::consts::LN_10))
}

/// Background seen by the detectors for one gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundYield {
    /// Raman photons per second arriving at the detector input.
    pub photon_rate: f64,
    /// Raman click probability per gate per detector.
    pub p_raman: f64,
    /// Dark plus afterpulse probability per gate per detector.
    pub p_dark: f64,
    /// Total background yield `Y0 = n·(p_dark + p_raman)`.
    pub y0: f64,
}

impl BackgroundYield {
    pub fn per_detector(&self) -> f64 {
        self.p_dark + self.p_raman
    }
}

pub fn background_click_prob(
    raman_w: f64,
    detector: &DetectorParams,
    quantum_wavelength_nm: f64,
) -> Result<BackgroundYield> {
    detector.validate()?;
    if !(raman_w >= 0.0) || !raman_w.is_finite() {
        return Err(domain("raman power", raman_w, "[0, inf)"));
    }
    let photon_rate = raman_w * quantum_wavelength_nm * 1e-9 / PLANCK_C;
    let p_raman = photon_rate * detector.efficiency * detector.effective_on_time_s;
    let p_dark = detector.dark_count_prob + detector.afterpulse_prob;
    Ok(BackgroundYield {
        photon_rate,
        p_raman,
        p_dark,
        y0: detector.num_detectors as f64 * (p_dark + p_raman),
    })
}
