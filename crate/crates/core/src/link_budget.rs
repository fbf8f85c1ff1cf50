//! Fibre attenuation, power units and end-to-end loss.

use alloc::format;
use alloc::vec::Vec;

use crate::channel_plan::{ChannelPlan, MuxKind};
use crate::error::{Error, Result};
use crate::math;
pub use crate::units::{dbm_to_watts, transmittance, watts_to_dbm};

/// Default cap on the total classical launch power, dBm.
pub const DEFAULT_LAUNCH_CAP_DBM: f64 = 0.0;

/// A single fibre span with one effective attenuation for the whole C-band.
/// Connector and splice losses are folded into the attenuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpan {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
}

impl FiberSpan {
    pub fn new(length_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        let span = Self {
            length_km,
            attenuation_db_per_km,
        };
        span.validate()?;
        Ok(span)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0) || !self.length_km.is_finite() {
            return Err(Error::InvalidSpan(format!("length {} km must be >= 0", self.length_km)));
        }
        if !(self.attenuation_db_per_km > 0.0 && self.attenuation_db_per_km < 1.0) {
            return Err(Error::InvalidSpan(format!(
                "attenuation {} dB/km must lie in (0, 1)",
                self.attenuation_db_per_km
            )));
        }
        Ok(())
    }

    pub fn with_length(self, length_km: f64) -> Result<Self> {
        Self::new(length_km, self.attenuation_db_per_km)
    }
}

pub fn fiber_loss(span: &FiberSpan) -> f64 {
    span.length_km * span.attenuation_db_per_km
}

/// Loss seen by quantum photons: fibre plus every mux element on the quantum
/// path. The DWDM96 multiplexer only carries data and is skipped.
pub fn quantum_path_loss(plan: &ChannelPlan, span: &FiberSpan) -> Result<f64> {
    if plan.rx_filter().is_none() {
        return Err(Error::MissingRxFilter);
    }
    let tx: f64 = plan
        .tx_chain
        .iter()
        .filter(|e| e.kind != MuxKind::Dwdm96)
        .map(|e| e.insertion_loss_db)
        .sum();
    let rx: f64 = plan.rx_chain.iter().map(|e| e.insertion_loss_db).sum();
    Ok(fiber_loss(span) + tx + rx)
}

/// Per-channel launch powers and the aggregate power cap.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchPlan {
    pub per_channel_dbm: Vec<f64>,
    pub cap_dbm: f64,
}

impl LaunchPlan {
    pub fn new(per_channel_dbm: Vec<f64>) -> Self {
        Self {
            per_channel_dbm,
            cap_dbm: DEFAULT_LAUNCH_CAP_DBM,
        }
    }

    pub fn uniform(channels: usize, dbm: f64) -> Self {
        Self::new(alloc::vec![dbm; channels])
    }
}

/// Aggregate launch power and whether it breaks the cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchTotal {
    pub watts: f64,
    pub dbm: f64,
    pub cap_dbm: f64,
    pub exceeds_cap: bool,
}

pub fn total_launch_power(launch: &LaunchPlan) -> Result<LaunchTotal> {
    if launch.per_channel_dbm.is_empty() {
        return Err(Error::EmptyLaunchPlan);
    }
    let watts: f64 = launch.per_channel_dbm.iter().map(|&p| dbm_to_watts(p)).sum();
    let dbm = watts_to_dbm(watts)?;
    Ok(LaunchTotal {
        watts,
        dbm,
        cap_dbm: launch.cap_dbm,
        exceeds_cap: watts > dbm_to_watts(launch.cap_dbm),
    })
}

/// `10^(-loss/10)` as a plain helper for already-validated losses.
pub(crate) fn transmittance_unchecked(loss_db: f64) -> f64 {
    math::pow10(-loss_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_plan::{build_plan, FilterChoice, MuxElement, PlanConfig};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn fiber_loss_examples() {
        assert_abs_diff_eq!(fiber_loss(&FiberSpan::new(35.5, 0.1915).unwrap()), 6.80, epsilon = 0.005);
        assert_abs_diff_eq!(fiber_loss(&FiberSpan::new(101.0, 0.19).unwrap()), 19.19, epsilon = 1e-9);
        assert_eq!(fiber_loss(&FiberSpan::new(0.0, 0.19).unwrap()), 0.0);
    }

    #[test]
    fn span_invariants() {
        assert!(FiberSpan::new(-1.0, 0.19).is_err());
        assert!(FiberSpan::new(10.0, 0.0).is_err());
        assert!(FiberSpan::new(10.0, 1.0).is_err());
    }

    #[test]
    fn power_conversions() {
        assert_relative_eq!(dbm_to_watts(-25.5), 2.8184e-6, max_relative = 1e-4);
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-15);
        assert_abs_diff_eq!(watts_to_dbm(2.818_382_931_264_455e-6).unwrap(), -25.5, epsilon = 1e-9);
        assert_abs_diff_eq!(watts_to_dbm(2.818e-6).unwrap(), -25.5, epsilon = 1e-3);
        assert!(watts_to_dbm(0.0).is_err());
        assert!(watts_to_dbm(-1e-3).is_err());
    }

    #[test]
    fn quantum_path_loss_examples() {
        let span = FiberSpan::new(50.5, 0.19).unwrap();
        let plan = build_plan(&PlanConfig::two_channel()).unwrap();
        let loss = quantum_path_loss(&plan, &span).unwrap();
        assert_abs_diff_eq!(loss, 50.5 * 0.19 + 2.9, epsilon = 1e-12);
        let loss25 = quantum_path_loss(&build_plan(&PlanConfig::two_channel().with_filter(FilterChoice::Ghz25)).unwrap(), &span).unwrap();
        assert_abs_diff_eq!(loss25 - loss, 1.1, epsilon = 1e-12);
    }

    #[test]
    fn lossless_chain_at_zero_length() {
        let mut cfg = PlanConfig::two_channel();
        cfg.losses.cwdm_db = 0.0;
        cfg.losses.filter_100ghz_db = 0.0;
        let plan = build_plan(&cfg).unwrap();
        assert_eq!(quantum_path_loss(&plan, &FiberSpan::new(0.0, 0.19).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn missing_rx_filter_rejected() {
        let mut plan = build_plan(&PlanConfig::two_channel()).unwrap();
        plan.rx_chain = alloc::vec![MuxElement::cwdm(1.0).unwrap()];
        assert_eq!(quantum_path_loss(&plan, &FiberSpan::new(1.0, 0.19).unwrap()), Err(Error::MissingRxFilter));
    }

    #[test]
    fn launch_totals() {
        let t = total_launch_power(&LaunchPlan::uniform(100, -25.5)).unwrap();
        assert_abs_diff_eq!(t.dbm, -5.5, epsilon = 1e-9);
        assert!(!t.exceeds_cap);
        let t = total_launch_power(&LaunchPlan::uniform(1, -25.5)).unwrap();
        assert_abs_diff_eq!(t.dbm, -25.5, epsilon = 1e-12);
        let t = total_launch_power(&LaunchPlan::uniform(2, -3.0)).unwrap();
        assert_abs_diff_eq!(t.dbm, 0.0103, epsilon = 1e-4);
        assert!(t.exceeds_cap);
        assert_eq!(total_launch_power(&LaunchPlan::new(Vec::new())), Err(Error::EmptyLaunchPlan));
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(transmittance(0.0).unwrap(), 1.0);
        assert_relative_eq!(transmittance(10.0).unwrap(), 0.1, max_relative = 1e-15);
        assert_abs_diff_eq!(transmittance(9.6).unwrap(), 0.1096, epsilon = 1e-4);
        assert!(transmittance(-0.1).is_err());
    }
}
