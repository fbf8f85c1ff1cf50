//! Scenario assembly, sweeps, calibration and parallel Monte Carlo.

use rayon::prelude::*;

use qkdcoex_core::calibrate::{calibrate_raman, Anchor, CalibrationFit, CalibrationOptions, Observation};
use qkdcoex_core::channel_plan::FilterChoice;
use qkdcoex_core::montecarlo::{num_chunks, run_chunk, GateModel, Tally, TrialConfig, TrialResult};
use qkdcoex_core::qkd::{secure_rate, RatePoint};
use qkdcoex_core::scenario::LinkScenario;
use qkdcoex_core::Error as ModelError;

use crate::config::{ScenarioConfig, SweepRange};
use crate::error::{ConfigError, Result};
use crate::io::{read_profile, AnchorRow, RamanProfileFile};

/// Reference coefficient used as the starting point of a fit when the
/// configuration provides none, 1/(km·nm).
pub const CALIBRATION_BASE_RHO: f64 = 1e-9;

/// The configured scenario. A calibration profile takes precedence over
/// explicit entries, which take precedence over `rho`.
pub fn build_scenario(config: &ScenarioConfig, filter: Option<FilterChoice>) -> Result<LinkScenario> {
    let r = &config.raman;
    if let Some(path) = &r.profile {
        let profile = read_profile(path)?;
        let mut c = config.clone();
        if let Some(e) = profile.e_det {
            c.protocol.e_det = e;
        }
        return c.scenario_with_profile(filter, profile.entries);
    }
    if !r.entries.is_empty() {
        return config.scenario_with_profile(filter, r.entries.clone());
    }
    match r.rho {
        Some(rho) => config.scenario_with_rho(filter, rho),
        None => Err(ConfigError::MissingCalibration),
    }
}

/// One row per distance, in sweep order.
pub fn sweep_distance(base: &LinkScenario, range: &SweepRange) -> Result<Vec<RatePoint>> {
    range.validate().map_err(|m| ModelError::InvalidSpan(m))?;
    let rows: std::result::Result<Vec<_>, ModelError> = range
        .points()
        .par_iter()
        .map(|&km| secure_rate(&base.clone().with_length(km)?))
        .collect();
    Ok(rows?)
}

/// One row per bandwidth, in sweep order. Rows above the launch cap are
/// flagged, not dropped.
pub fn sweep_bandwidth(base: &LinkScenario, range: &SweepRange) -> Result<Vec<RatePoint>> {
    range
        .validate()
        .map_err(|m| ModelError::InvalidPlan(format!("bandwidth sweep: {m}")))?;
    let rows: std::result::Result<Vec<_>, ModelError> = range
        .points()
        .par_iter()
        .map(|&gbps| secure_rate(&base.clone().with_bandwidth(gbps)?))
        .collect();
    Ok(rows?)
}

pub fn anchor_scenario(base: &LinkScenario, config: &ScenarioConfig, row: &AnchorRow) -> Result<LinkScenario> {
    let filter = config.plan_config(Some(row.filter)).filter_element(row.filter)?;
    Ok(base
        .clone()
        .with_filter(filter)?
        .with_length(row.distance_km)?
        .with_bandwidth(row.bandwidth_gbps)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub fit: CalibrationFit,
    pub passed: bool,
    pub profile: RamanProfileFile,
}

/// Fits the configured free parameters to `anchors`. A fit that misses the
/// residual threshold is still returned, with `passed == false`.
pub fn run_calibration(config: &ScenarioConfig, anchors: &[AnchorRow]) -> Result<CalibrationOutcome> {
    if anchors.is_empty() {
        return Err(ModelError::Underdetermined {
            anchors: 0,
            params: config.raman.fit.len(),
        }
        .into());
    }
    let base = match build_scenario(config, None) {
        Err(ConfigError::MissingCalibration) => config.scenario_with_rho(None, CALIBRATION_BASE_RHO)?,
        other => other?,
    };
    let fit_anchors = anchors
        .iter()
        .map(|row| {
            Ok(Anchor {
                scenario: anchor_scenario(&base, config, row)?,
                observation: Observation::SecureRate(row.observed_secure_bps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let options = CalibrationOptions {
        free: config.raman.fit.clone(),
        ..CalibrationOptions::default()
    };
    let (fit, passed) = match calibrate_raman(&fit_anchors, &options) {
        Ok(fit) => (fit, true),
        Err(ModelError::CalibrationFailed(fit)) => (*fit, false),
        Err(e) => return Err(e.into()),
    };
    let fitted = fit.apply(&base);
    Ok(CalibrationOutcome {
        profile: RamanProfileFile {
            entries: fitted.raman.entries.clone(),
            e_det: fit.e_det,
        },
        fit,
        passed,
    })
}

/// Chunks run in parallel and merge in chunk order; the result matches
/// [`qkdcoex_core::montecarlo::run_trial`] exactly.
pub fn run_trial_parallel(model: &GateModel, config: &TrialConfig) -> Result<TrialResult> {
    if config.num_gates == 0 {
        return Err(ModelError::InvalidTrial("zero gates".into()).into());
    }
    let tallies: Vec<Tally> = (0..num_chunks(config.num_gates))
        .into_par_iter()
        .map(|i| run_chunk(model, config, i))
        .collect();
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(TrialResult::from_tally(total)?)
}
