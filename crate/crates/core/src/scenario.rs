//! The full input to one simulation point.

use alloc::format;

use crate::channel_plan::{build_plan, ChannelPlan, FilterChoice, MuxElement, PlanConfig};
use crate::error::{Error, Result};
use crate::link_budget::{
    dbm_to_watts, quantum_path_loss, total_launch_power, transmittance_unchecked, watts_to_dbm,
    FiberSpan, LaunchPlan, LaunchTotal, DEFAULT_LAUNCH_CAP_DBM,
};
use crate::noise::{
    background_click_prob, filter_bandwidth_nm, plan_raman_power, BackgroundYield, DetectorParams,
    RamanProfile,
};
use crate::qkd::ProtocolParams;

/// Pump wavelength at which a Raman scale factor is quoted, nm.
pub const REFERENCE_PUMP_NM: f64 = 1529.55;

/// Maps data bandwidth onto launch power: each `gbps_per_channel` of traffic
/// is one channel launched at `reference_launch_dbm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthEquivalence {
    pub reference_launch_dbm: f64,
    pub gbps_per_channel: f64,
}

impl Default for BandwidthEquivalence {
    fn default() -> Self {
        Self {
            reference_launch_dbm: -25.5,
            gbps_per_channel: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub plan: ChannelPlan,
    pub span: FiberSpan,
    pub detector: DetectorParams,
    pub protocol: ProtocolParams,
    pub raman: RamanProfile,
    pub launch_cap_dbm: f64,
    pub bandwidth: BandwidthEquivalence,
}

/// Noise quantities derived from a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub delta_lambda_nm: f64,
    pub raman_w: f64,
    pub background: BackgroundYield,
}

impl LinkScenario {
    /// Default detector and protocol, Raman coefficients scaled with Stokes
    /// shift from `reference_rho` at [`REFERENCE_PUMP_NM`].
    pub fn new(plan: ChannelPlan, span: FiberSpan, reference_rho: f64) -> Result<Self> {
        let raman = RamanProfile::stokes_scaled(
            plan.quantum().wavelength_nm,
            REFERENCE_PUMP_NM,
            reference_rho,
            plan.data_channels().map(|c| c.wavelength_nm),
        )?;
        let scenario = Self {
            plan,
            span,
            detector: DetectorParams::default(),
            protocol: ProtocolParams::default(),
            raman,
            launch_cap_dbm: DEFAULT_LAUNCH_CAP_DBM,
            bandwidth: BandwidthEquivalence::default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Builds the plan from `config` on a 0.19 dB/km span of `length_km`.
    pub fn from_plan_config(config: &PlanConfig, length_km: f64, reference_rho: f64) -> Result<Self> {
        Self::new(build_plan(config)?, FiberSpan::new(length_km, 0.19)?, reference_rho)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.span.validate()?;
        self.detector.validate()?;
        self.protocol.validate()?;
        self.raman.validate()?;
        if self.plan.rx_filter().is_none() {
            return Err(Error::MissingRxFilter);
        }
        for ch in self.plan.data_channels().filter(|c| c.launch_dbm.is_some()) {
            self.raman.rho_for(ch.wavelength_nm)?;
        }
        let b = &self.bandwidth;
        if !(b.gbps_per_channel > 0.0) || !b.reference_launch_dbm.is_finite() {
            return Err(Error::InvalidPlan(format!("bandwidth equivalence {b:?}")));
        }
        Ok(())
    }

    pub fn launch_plan(&self) -> LaunchPlan {
        LaunchPlan {
            per_channel_dbm: self.plan.data_launch_dbm(),
            cap_dbm: self.launch_cap_dbm,
        }
    }

    /// Aggregate classical launch power; `None` when no data channel is lit.
    pub fn launch_total(&self) -> Option<LaunchTotal> {
        total_launch_power(&self.launch_plan()).ok()
    }

    /// Equivalent data bandwidth carried by the current launch powers.
    pub fn bandwidth_gbps(&self) -> f64 {
        let watts = self.launch_total().map_or(0.0, |t| t.watts);
        watts / dbm_to_watts(self.bandwidth.reference_launch_dbm) * self.bandwidth.gbps_per_channel
    }

    pub fn with_length(mut self, length_km: f64) -> Result<Self> {
        self.span = self.span.with_length(length_km)?;
        Ok(self)
    }

    pub fn with_filter(mut self, filter: MuxElement) -> Result<Self> {
        self.plan = self.plan.with_rx_filter(filter)?;
        Ok(self)
    }

    /// Spreads the launch power equivalent to `gbps` evenly over the data
    /// channels. Zero bandwidth switches the data lasers off.
    pub fn with_bandwidth(mut self, gbps: f64) -> Result<Self> {
        if !(gbps >= 0.0) || !gbps.is_finite() {
            return Err(crate::error::domain("bandwidth", gbps, "[0, inf)"));
        }
        let n = self.plan.num_data_channels();
        if gbps == 0.0 {
            for c in self.plan.channels.iter_mut().filter(|c| c.role == crate::channel_plan::ChannelRole::Data) {
                c.launch_dbm = None;
            }
            return Ok(self);
        }
        if n == 0 {
            return Err(Error::InvalidPlan("no data channels to carry bandwidth".into()));
        }
        let total_w = gbps / self.bandwidth.gbps_per_channel * dbm_to_watts(self.bandwidth.reference_launch_dbm);
        self.plan.set_data_launch(watts_to_dbm(total_w / n as f64)?);
        Ok(self)
    }

    pub fn with_data_launch(mut self, dbm: f64) -> Result<Self> {
        if !dbm.is_finite() {
            return Err(crate::error::domain("launch power", dbm, "finite dBm"));
        }
        self.plan.set_data_launch(dbm);
        Ok(self)
    }

    pub fn with_raman_scale(mut self, factor: f64) -> Self {
        self.raman = self.raman.scaled(factor);
        self
    }

    pub fn with_e_det(mut self, e_det: f64) -> Self {
        self.protocol.e_det = e_det;
        self
    }

    pub fn path_loss_db(&self) -> Result<f64> {
        quantum_path_loss(&self.plan, &self.span)
    }

    /// Channel transmittance times detector efficiency.
    pub fn system_transmittance(&self) -> Result<f64> {
        Ok(transmittance_unchecked(self.path_loss_db()?) * self.detector.efficiency)
    }

    pub fn noise(&self) -> Result<NoiseBudget> {
        let filter = self.plan.rx_filter().ok_or(Error::MissingRxFilter)?;
        let quantum_nm = self.plan.quantum().wavelength_nm;
        let delta_lambda_nm = filter_bandwidth_nm(filter, quantum_nm)?;
        let raman_w = plan_raman_power(&self.plan, &self.raman, &self.span, delta_lambda_nm)?;
        let background = background_click_prob(raman_w, &self.detector, quantum_nm)?;
        Ok(NoiseBudget {
            delta_lambda_nm,
            raman_w,
            background,
        })
    }
}

/// Scenario on the two-encryptor plan with `filter`, default losses.
pub fn two_channel_scenario(length_km: f64, filter: FilterChoice, reference_rho: f64) -> Result<LinkScenario> {
    LinkScenario::from_plan_config(&PlanConfig::two_channel().with_filter(filter), length_km, reference_rho)
}

/// Scenario on the ten-laser plan with `filter`, default losses.
pub fn ten_laser_scenario(length_km: f64, filter: FilterChoice, reference_rho: f64) -> Result<LinkScenario> {
    LinkScenario::from_plan_config(&PlanConfig::ten_laser().with_filter(filter), length_km, reference_rho)
}
