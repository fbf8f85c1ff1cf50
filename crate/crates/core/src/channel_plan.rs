//! ITU DWDM grid arithmetic, CWDM banding and the mux/filter chain that
//! carries one quantum channel alongside classical data channels.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::units::C_NM_THZ;

/// Anchor frequency of the grid numbering, THz.
pub const GRID_ANCHOR_THZ: f64 = 190.0;
/// Frequency step per grid number, THz.
pub const GRID_STEP_THZ: f64 = 0.1;
pub const GRID_INDEX_MIN: f64 = -40.0;
pub const GRID_INDEX_MAX: f64 = 80.0;

/// Minimum separation between distinct channel frequencies, THz.
pub const MIN_SPACING_THZ: f64 = 0.05;
/// Frequency slack absorbing wavelengths printed to 0.01 nm (≈ 1.3 GHz).
pub const FREQUENCY_TOLERANCE_THZ: f64 = 0.0015;

/// Half-width of a CWDM band around its centre wavelength, nm.
pub const CWDM_HALF_WIDTH_NM: f64 = 9.0;
const CWDM_FIRST_CENTER_NM: f64 = 1271.0;
const CWDM_PITCH_NM: f64 = 20.0;

/// Default insertion losses, dB.
pub const DEFAULT_CWDM_LOSS_DB: f64 = 1.0;
pub const DEFAULT_DWDM96_LOSS_DB: f64 = 5.0;
pub const DEFAULT_FILTER_100GHZ_LOSS_DB: f64 = 0.9;
pub const DEFAULT_FILTER_25GHZ_LOSS_DB: f64 = 2.0;

/// Frequency of ITU grid number `n` (half-integers allowed), `190.0 + 0.1·n` THz.
pub fn itu_channel_to_frequency(n: f64) -> Result<f64> {
    if !(GRID_INDEX_MIN..=GRID_INDEX_MAX).contains(&n) {
        return Err(Error::GridIndexOutOfRange(n));
    }
    Ok(GRID_ANCHOR_THZ + GRID_STEP_THZ * n)
}

/// Vacuum wavelength in nm for a frequency in THz.
pub fn frequency_to_wavelength(f_thz: f64) -> Result<f64> {
    if !(f_thz > 0.0) || !f_thz.is_finite() {
        return Err(Error::NonPositiveFrequency(f_thz));
    }
    Ok(C_NM_THZ / f_thz)
}

/// Frequency in THz for a vacuum wavelength in nm.
pub fn wavelength_to_frequency(nm: f64) -> Result<f64> {
    if !(nm > 0.0) || !nm.is_finite() {
        return Err(Error::NonPositiveWavelength(nm));
    }
    Ok(C_NM_THZ / nm)
}

/// Rounds a wavelength to the 0.01 nm reporting precision.
pub fn round_to_hundredth(nm: f64) -> f64 {
    math::round(nm * 100.0) / 100.0
}

/// Index of the CWDM band containing `nm`, if any. Band `k` is centred on
/// `1271 + 20·k` nm.
pub fn cwdm_band(nm: f64) -> Option<i32> {
    let k = math::round((nm - CWDM_FIRST_CENTER_NM) / CWDM_PITCH_NM);
    let center = CWDM_FIRST_CENTER_NM + CWDM_PITCH_NM * k;
    if (nm - center).abs() <= CWDM_HALF_WIDTH_NM {
        Some(k as i32)
    } else {
        None
    }
}

/// Centre wavelength of CWDM band `k`, nm.
pub fn cwdm_band_center(k: i32) -> f64 {
    CWDM_FIRST_CENTER_NM + CWDM_PITCH_NM * k as f64
}

/// Number of whole DWDM slots of `spacing_ghz` that fit between the band edges
/// `center ± width/2`.
pub fn cwdm_band_capacity(center_nm: f64, width_nm: f64, spacing_ghz: f64) -> Result<usize> {
    if !(width_nm >= 0.0) || !(spacing_ghz > 0.0) || width_nm >= 2.0 * center_nm {
        return Err(Error::InvalidPlan(format!(
            "band width {width_nm} nm / spacing {spacing_ghz} GHz not usable"
        )));
    }
    let f_hi = wavelength_to_frequency(center_nm - width_nm / 2.0)?;
    let f_lo = wavelength_to_frequency(center_nm + width_nm / 2.0)?;
    Ok(math::floor((f_hi - f_lo) * 1e3 / spacing_ghz + 1e-9) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelRole {
    Quantum,
    Data,
    Sync,
    Reconciliation,
}

impl ChannelRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelRole::Quantum => "quantum",
            ChannelRole::Data => "data",
            ChannelRole::Sync => "sync",
            ChannelRole::Reconciliation => "reconciliation",
        }
    }
}

impl fmt::Display for ChannelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One wavelength on the fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalChannel {
    /// Grid number; may be half-integer.
    pub itu_index: f64,
    pub center_frequency_thz: f64,
    pub wavelength_nm: f64,
    pub role: ChannelRole,
    /// Launch power into the fibre. `None` for the quantum channel and for
    /// channels whose power is not modelled.
    pub launch_dbm: Option<f64>,
}

impl OpticalChannel {
    /// A channel placed exactly on the grid.
    pub fn on_grid(itu_index: f64, role: ChannelRole, launch_dbm: Option<f64>) -> Result<Self> {
        let f = itu_channel_to_frequency(itu_index)?;
        Ok(Self {
            itu_index,
            center_frequency_thz: f,
            wavelength_nm: frequency_to_wavelength(f)?,
            role,
            launch_dbm,
        })
    }

    /// A channel whose printed wavelength takes precedence over the grid rule.
    pub fn with_wavelength(
        itu_index: f64,
        wavelength_nm: f64,
        role: ChannelRole,
        launch_dbm: Option<f64>,
    ) -> Result<Self> {
        if !(GRID_INDEX_MIN..=GRID_INDEX_MAX).contains(&itu_index) {
            return Err(Error::GridIndexOutOfRange(itu_index));
        }
        Ok(Self {
            itu_index,
            center_frequency_thz: wavelength_to_frequency(wavelength_nm)?,
            wavelength_nm,
            role,
            launch_dbm,
        })
    }

    fn from_spec(spec: &ChannelSpec, role: ChannelRole) -> Result<Self> {
        match spec.wavelength_nm {
            Some(nm) => Self::with_wavelength(spec.itu_index, nm, role, spec.launch_dbm),
            None => Self::on_grid(spec.itu_index, role, spec.launch_dbm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MuxKind {
    Cwdm,
    Dwdm96,
    SpectralFilter100GHz,
    SpectralFilter25GHz,
}

impl MuxKind {
    pub fn is_filter(self) -> bool {
        matches!(self, MuxKind::SpectralFilter100GHz | MuxKind::SpectralFilter25GHz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuxElement {
    pub kind: MuxKind,
    pub insertion_loss_db: f64,
    pub passband_ghz: Option<f64>,
    pub fwhm_ghz: Option<f64>,
}

impl MuxElement {
    pub fn cwdm(insertion_loss_db: f64) -> Result<Self> {
        Self::new(MuxKind::Cwdm, insertion_loss_db, None, None)
    }

    pub fn dwdm96(insertion_loss_db: f64) -> Result<Self> {
        Self::new(MuxKind::Dwdm96, insertion_loss_db, None, None)
    }

    pub fn new(
        kind: MuxKind,
        insertion_loss_db: f64,
        passband_ghz: Option<f64>,
        fwhm_ghz: Option<f64>,
    ) -> Result<Self> {
        let element = Self {
            kind,
            insertion_loss_db,
            passband_ghz,
            fwhm_ghz,
        };
        element.validate()?;
        Ok(element)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.insertion_loss_db >= 0.0) || !self.insertion_loss_db.is_finite() {
            return Err(Error::InvalidElement(format!(
                "insertion loss {} dB must be finite and >= 0",
                self.insertion_loss_db
            )));
        }
        for (name, v) in [("passband", self.passband_ghz), ("fwhm", self.fwhm_ghz)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidElement(format!("{name} {v} GHz must be >= 0")));
                }
            }
        }
        if let (Some(pb), Some(fw)) = (self.passband_ghz, self.fwhm_ghz) {
            if fw > pb {
                return Err(Error::InvalidElement(format!(
                    "fwhm {fw} GHz exceeds passband {pb} GHz"
                )));
            }
        }
        Ok(())
    }
}

/// Which receive-side spectral filter isolates the quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FilterChoice {
    #[default]
    Ghz100,
    Ghz25,
}

impl FilterChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterChoice::Ghz100 => "100ghz",
            FilterChoice::Ghz25 => "25ghz",
        }
    }
}

impl fmt::Display for FilterChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "100ghz" | "100" => Ok(FilterChoice::Ghz100),
            "25ghz" | "25" => Ok(FilterChoice::Ghz25),
            other => Err(Error::InvalidPlan(format!(
                "unknown filter '{other}', expected 100ghz or 25ghz"
            ))),
        }
    }
}

/// Grid number plus optional printed-wavelength and launch-power overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub itu_index: f64,
    pub wavelength_nm: Option<f64>,
    pub launch_dbm: Option<f64>,
}

impl ChannelSpec {
    pub fn grid(itu_index: f64) -> Self {
        Self {
            itu_index,
            wavelength_nm: None,
            launch_dbm: None,
        }
    }

    pub fn printed(itu_index: f64, wavelength_nm: f64) -> Self {
        Self {
            itu_index,
            wavelength_nm: Some(wavelength_nm),
            launch_dbm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionLosses {
    pub cwdm_db: f64,
    pub dwdm96_db: f64,
    pub filter_100ghz_db: f64,
    pub filter_25ghz_db: f64,
}

impl Default for InsertionLosses {
    fn default() -> Self {
        Self {
            cwdm_db: DEFAULT_CWDM_LOSS_DB,
            dwdm96_db: DEFAULT_DWDM96_LOSS_DB,
            filter_100ghz_db: DEFAULT_FILTER_100GHZ_LOSS_DB,
            filter_25ghz_db: DEFAULT_FILTER_25GHZ_LOSS_DB,
        }
    }
}

/// Nominal passbands and measured FWHMs of the two thin-film filters, GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterShapes {
    pub passband_100ghz: f64,
    pub fwhm_100ghz: Option<f64>,
    pub passband_25ghz: f64,
    pub fwhm_25ghz: Option<f64>,
}

impl Default for FilterShapes {
    fn default() -> Self {
        Self {
            passband_100ghz: 100.0,
            fwhm_100ghz: None,
            passband_25ghz: 25.0,
            fwhm_25ghz: Some(15.0),
        }
    }
}

/// Everything needed to build a [`ChannelPlan`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub quantum: Option<ChannelSpec>,
    pub data: Vec<ChannelSpec>,
    pub sync: Vec<ChannelSpec>,
    pub reconciliation: Vec<ChannelSpec>,
    /// Launch power for data channels without their own override, dBm.
    pub default_launch_dbm: f64,
    pub filter: FilterChoice,
    pub losses: InsertionLosses,
    pub filter_shapes: FilterShapes,
}

impl PlanConfig {
    /// Quantum channel 37 with the two 100G encryptor wavelengths, using the
    /// printed wavelengths 1529.55 nm (60) and 1529.94 nm (60.5).
    pub fn two_channel() -> Self {
        Self {
            quantum: Some(ChannelSpec::printed(37.0, 1547.72)),
            data: alloc::vec![ChannelSpec::printed(60.0, 1529.55), ChannelSpec::printed(60.5, 1529.94)],
            sync: Vec::new(),
            reconciliation: Vec::new(),
            default_launch_dbm: -25.5,
            filter: FilterChoice::Ghz100,
            losses: InsertionLosses::default(),
            filter_shapes: FilterShapes::default(),
        }
    }

    /// The two encryptor wavelengths plus eight lasers filling the 50 GHz
    /// grid up to 1533.07 nm.
    pub fn ten_laser() -> Self {
        let mut plan = Self::two_channel();
        for k in 0..8 {
            let index = 59.0 - 0.5 * k as f64;
            let nm = round_to_hundredth(C_NM_THZ / (GRID_ANCHOR_THZ + GRID_STEP_THZ * index));
            plan.data.push(ChannelSpec::printed(index, nm));
        }
        plan
    }

    pub fn with_filter(mut self, filter: FilterChoice) -> Self {
        self.filter = filter;
        self
    }

    /// The receive filter element for `choice` with this config's losses and shapes.
    pub fn filter_element(&self, choice: FilterChoice) -> Result<MuxElement> {
        let shapes = &self.filter_shapes;
        match choice {
            FilterChoice::Ghz100 => MuxElement::new(
                MuxKind::SpectralFilter100GHz,
                self.losses.filter_100ghz_db,
                Some(shapes.passband_100ghz),
                shapes.fwhm_100ghz,
            ),
            FilterChoice::Ghz25 => MuxElement::new(
                MuxKind::SpectralFilter25GHz,
                self.losses.filter_25ghz_db,
                Some(shapes.passband_25ghz),
                shapes.fwhm_25ghz,
            ),
        }
    }
}

/// A validated set of channels plus transmit and receive mux chains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub channels: Vec<OpticalChannel>,
    pub tx_chain: Vec<MuxElement>,
    /// Receive side of the quantum path; ends in one spectral filter.
    pub rx_chain: Vec<MuxElement>,
}

impl ChannelPlan {
    pub fn new(
        channels: Vec<OpticalChannel>,
        tx_chain: Vec<MuxElement>,
        rx_chain: Vec<MuxElement>,
    ) -> Result<Self> {
        let plan = Self {
            channels,
            tx_chain,
            rx_chain,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let quantum: Vec<&OpticalChannel> = self
            .channels
            .iter()
            .filter(|c| c.role == ChannelRole::Quantum)
            .collect();
        match quantum.len() {
            0 => return Err(Error::InvalidPlan("no quantum channel".into())),
            1 => {}
            n => return Err(Error::InvalidPlan(format!("{n} quantum channels, expected one"))),
        }
        let q = quantum[0];

        for c in &self.channels {
            if (c.wavelength_nm - C_NM_THZ / c.center_frequency_thz).abs() > 0.01 {
                return Err(Error::InvalidPlan(format!(
                    "channel {} wavelength {} nm inconsistent with {} THz",
                    c.itu_index, c.wavelength_nm, c.center_frequency_thz
                )));
            }
            if c.role == ChannelRole::Quantum && c.launch_dbm.is_some() {
                return Err(Error::InvalidPlan("quantum channel cannot carry a launch power".into()));
            }
            if let Some(p) = c.launch_dbm {
                if !p.is_finite() {
                    return Err(Error::InvalidPlan(format!("channel {} launch power {p}", c.itu_index)));
                }
            }
        }

        for (i, a) in self.channels.iter().enumerate() {
            for b in &self.channels[i + 1..] {
                let df = (a.center_frequency_thz - b.center_frequency_thz).abs();
                if df < FREQUENCY_TOLERANCE_THZ {
                    return Err(Error::InvalidPlan(format!(
                        "duplicate frequency {:.4} THz (channels {} and {})",
                        a.center_frequency_thz, a.itu_index, b.itu_index
                    )));
                }
                if df < MIN_SPACING_THZ - FREQUENCY_TOLERANCE_THZ {
                    return Err(Error::InvalidPlan(format!(
                        "channels {} and {} only {:.1} GHz apart (minimum 50 GHz)",
                        a.itu_index,
                        b.itu_index,
                        df * 1e3
                    )));
                }
            }
        }

        let q_band = cwdm_band(q.wavelength_nm).ok_or_else(|| {
            Error::InvalidPlan(format!("quantum channel {} nm outside every CWDM band", q.wavelength_nm))
        })?;
        for c in self.channels.iter().filter(|c| c.role != ChannelRole::Quantum) {
            match cwdm_band(c.wavelength_nm) {
                None => {
                    return Err(Error::InvalidPlan(format!(
                        "{} channel {} nm outside every CWDM band",
                        c.role, c.wavelength_nm
                    )))
                }
                Some(band) if band == q_band => {
                    return Err(Error::InvalidPlan(format!(
                        "{} channel {} nm shares the {} nm CWDM band with the quantum channel",
                        c.role,
                        c.wavelength_nm,
                        cwdm_band_center(band)
                    )))
                }
                Some(_) => {}
            }
        }

        for e in self.tx_chain.iter().chain(&self.rx_chain) {
            e.validate()?;
        }
        let filters = self.rx_chain.iter().filter(|e| e.kind.is_filter()).count();
        if filters > 1 {
            return Err(Error::InvalidPlan(format!("{filters} spectral filters in rx chain")));
        }
        if filters == 1 && !self.rx_chain.last().is_some_and(|e| e.kind.is_filter()) {
            return Err(Error::InvalidPlan("spectral filter must terminate the rx chain".into()));
        }
        Ok(())
    }

    pub fn quantum(&self) -> &OpticalChannel {
        self.channels
            .iter()
            .find(|c| c.role == ChannelRole::Quantum)
            .expect("validated plan has a quantum channel")
    }

    pub fn data_channels(&self) -> impl Iterator<Item = &OpticalChannel> {
        self.channels.iter().filter(|c| c.role == ChannelRole::Data)
    }

    pub fn num_data_channels(&self) -> usize {
        self.data_channels().count()
    }

    /// The spectral filter terminating the receive chain.
    pub fn rx_filter(&self) -> Option<&MuxElement> {
        self.rx_chain.last().filter(|e| e.kind.is_filter())
    }

    /// Replaces the terminating spectral filter.
    pub fn with_rx_filter(mut self, filter: MuxElement) -> Result<Self> {
        if !filter.kind.is_filter() {
            return Err(Error::InvalidPlan("rx filter element must be a spectral filter".into()));
        }
        if self.rx_filter().is_some() {
            self.rx_chain.pop();
        }
        self.rx_chain.push(filter);
        self.validate()?;
        Ok(self)
    }

    /// Sets every data channel to the same launch power.
    pub fn set_data_launch(&mut self, dbm: f64) {
        for c in self.channels.iter_mut().filter(|c| c.role == ChannelRole::Data) {
            c.launch_dbm = Some(dbm);
        }
    }

    /// Launch powers of the data channels, dBm.
    pub fn data_launch_dbm(&self) -> Vec<f64> {
        self.data_channels().filter_map(|c| c.launch_dbm).collect()
    }
}

/// Builds and validates a plan: data channels pass a DWDM96 mux and then the
/// CWDM combiner; the quantum receive path is CWDM demux followed by the
/// selected spectral filter.
pub fn build_plan(config: &PlanConfig) -> Result<ChannelPlan> {
    let q = config
        .quantum
        .as_ref()
        .ok_or_else(|| Error::InvalidPlan("no quantum channel".into()))?;
    let mut channels = Vec::with_capacity(1 + config.data.len() + config.sync.len() + config.reconciliation.len());
    let mut quantum = OpticalChannel::from_spec(q, ChannelRole::Quantum)?;
    quantum.launch_dbm = None;
    channels.push(quantum);
    for spec in &config.data {
        let mut c = OpticalChannel::from_spec(spec, ChannelRole::Data)?;
        c.launch_dbm = Some(spec.launch_dbm.unwrap_or(config.default_launch_dbm));
        channels.push(c);
    }
    for (role, specs) in [
        (ChannelRole::Sync, &config.sync),
        (ChannelRole::Reconciliation, &config.reconciliation),
    ] {
        for spec in specs {
            channels.push(OpticalChannel::from_spec(spec, role)?);
        }
    }

    let mut tx_chain = Vec::new();
    if !config.data.is_empty() {
        tx_chain.push(MuxElement::dwdm96(config.losses.dwdm96_db)?);
    }
    tx_chain.push(MuxElement::cwdm(config.losses.cwdm_db)?);
    let rx_chain = alloc::vec![MuxElement::cwdm(config.losses.cwdm_db)?, config.filter_element(config.filter)?];

    ChannelPlan::new(channels, tx_chain, rx_chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use alloc::string::ToString;

    #[test]
    fn grid_numbers_map_to_printed_wavelengths() {
        assert_abs_diff_eq!(itu_channel_to_frequency(37.0).unwrap(), 193.7, epsilon = 1e-12);
        assert_abs_diff_eq!(itu_channel_to_frequency(60.0).unwrap(), 196.0, epsilon = 1e-12);
        assert_abs_diff_eq!(itu_channel_to_frequency(0.0).unwrap(), 190.0, epsilon = 1e-12);
        assert_eq!(round_to_hundredth(frequency_to_wavelength(193.7).unwrap()), 1547.72);
        assert_eq!(round_to_hundredth(frequency_to_wavelength(196.0).unwrap()), 1529.55);
        assert_eq!(round_to_hundredth(frequency_to_wavelength(299_792.458).unwrap()), 1.0);
    }

    #[test]
    fn out_of_range_inputs_rejected() {
        let err = itu_channel_to_frequency(80.5).unwrap_err();
        assert!(err.to_string().contains("[-40, 80]"));
        assert!(itu_channel_to_frequency(-40.5).is_err());
        assert!(frequency_to_wavelength(0.0).is_err());
        assert!(frequency_to_wavelength(-1.0).is_err());
        assert!(frequency_to_wavelength(f64::NAN).is_err());
    }

    #[test]
    fn half_index_printed_wavelength_is_not_the_grid_rule() {
        // 60.5 by rule is 196.05 THz, but the printed 1529.94 nm sits at 195.95 THz.
        let rule = frequency_to_wavelength(itu_channel_to_frequency(60.5).unwrap()).unwrap();
        assert!((rule - 1529.94).abs() > 0.5);
        let ch = OpticalChannel::with_wavelength(60.5, 1529.94, ChannelRole::Data, Some(-25.5)).unwrap();
        assert_abs_diff_eq!(ch.center_frequency_thz, 195.95, epsilon = 1e-3);
    }

    #[test]
    fn two_channel_plan_is_valid() {
        let plan = build_plan(&PlanConfig::two_channel()).unwrap();
        assert_eq!(plan.num_data_channels(), 2);
        assert_eq!(plan.quantum().itu_index, 37.0);
        let rx: f64 = plan.rx_chain.iter().map(|e| e.insertion_loss_db).sum();
        assert_abs_diff_eq!(rx, 1.9, epsilon = 1e-12);
        assert_eq!(plan.rx_filter().unwrap().kind, MuxKind::SpectralFilter100GHz);
        assert_eq!(plan.tx_chain[0].kind, MuxKind::Dwdm96);
        assert_eq!(plan.tx_chain[0].insertion_loss_db, 5.0);
    }

    #[test]
    fn ten_laser_plan_spans_to_1533_07() {
        let plan = build_plan(&PlanConfig::ten_laser()).unwrap();
        assert_eq!(plan.num_data_channels(), 10);
        let nms: Vec<f64> = plan.data_channels().map(|c| c.wavelength_nm).collect();
        assert_eq!(nms.iter().cloned().fold(f64::INFINITY, f64::min), 1529.55);
        assert_eq!(nms.iter().cloned().fold(0.0, f64::max), 1533.07);
    }

    #[test]
    fn duplicate_frequency_rejected() {
        let mut cfg = PlanConfig::two_channel();
        cfg.data = alloc::vec![ChannelSpec::grid(37.0)];
        let err = build_plan(&cfg).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let mut cfg = PlanConfig::two_channel();
        cfg.data.push(ChannelSpec::printed(60.0, 1529.55));
        assert!(build_plan(&cfg).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn band_collision_and_missing_quantum_rejected() {
        let mut cfg = PlanConfig::two_channel();
        cfg.data.push(ChannelSpec::grid(35.0));
        assert!(build_plan(&cfg).unwrap_err().to_string().contains("CWDM band"));

        let mut cfg = PlanConfig::two_channel();
        cfg.quantum = None;
        assert!(build_plan(&cfg).is_err());

        let plan = build_plan(&PlanConfig::two_channel()).unwrap();
        let channels: Vec<_> = plan.channels.iter().filter(|c| c.role != ChannelRole::Quantum).cloned().collect();
        assert!(ChannelPlan::new(channels, plan.tx_chain.clone(), plan.rx_chain.clone()).is_err());
    }

    #[test]
    fn sub_50ghz_spacing_rejected() {
        let mut cfg = PlanConfig::two_channel();
        cfg.data = alloc::vec![ChannelSpec::grid(60.0), ChannelSpec::grid(60.25)];
        assert!(build_plan(&cfg).unwrap_err().to_string().contains("50 GHz"));
    }

    #[test]
    fn cwdm_band_capacity_at_1550() {
        assert_eq!(cwdm_band_capacity(1551.0, 18.0, 50.0).unwrap(), 44);
        assert_eq!(cwdm_band_capacity(1551.0, 18.0, 100.0).unwrap(), 22);
        assert_eq!(cwdm_band(1547.72), Some(14));
        assert_eq!(cwdm_band(1529.55), Some(13));
        assert_eq!(cwdm_band(1541.0), None);
    }

    #[test]
    fn filter_element_invariants() {
        assert!(MuxElement::new(MuxKind::SpectralFilter25GHz, 2.0, Some(25.0), Some(30.0)).is_err());
        assert!(MuxElement::cwdm(-0.1).is_err());
        assert!(MuxElement::new(MuxKind::SpectralFilter25GHz, 2.0, Some(25.0), Some(15.0)).is_ok());
    }

    #[test]
    fn filter_choice_parses() {
        assert_eq!("25GHz".parse::<FilterChoice>().unwrap(), FilterChoice::Ghz25);
        assert_eq!("100ghz".parse::<FilterChoice>().unwrap(), FilterChoice::Ghz100);
        assert!("50ghz".parse::<FilterChoice>().is_err());
    }
}
