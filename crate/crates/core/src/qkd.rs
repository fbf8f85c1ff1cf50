//! Decoy-state efficient BB84 in the asymptotic limit.
//!
//! Gains follow the Poissonian detection model
//!
//! ```text
//! Q   = Y0 + 1 - exp(-x·t)
//! E·Q = e0·Y0 + e_det·(1 - exp(-x·t))
//! ```
//!
//! for intensity `x` and system transmittance `t`. Single-photon yield and
//! error are bounded with one signal and two decoy intensities, and the key
//! is distilled from the majority basis only.

use alloc::format;

use crate::error::{domain, Error, Result};
use crate::link_budget::FiberSpan;
use crate::math;
use crate::scenario::{LinkScenario, NoiseBudget};

/// Error rate of background clicks.
pub const BACKGROUND_ERROR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Signal intensity, photons per pulse.
    pub mu: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Probability of the majority basis on both sides.
    pub p_basis_major: f64,
    pub p_signal: f64,
    pub p_nu1: f64,
    pub p_nu2: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    pub clock_rate_hz: f64,
    /// Intrinsic optical error probability.
    pub e_det: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            mu: 0.4,
            nu1: 0.1,
            nu2: 7e-3,
            p_basis_major: 31.0 / 32.0,
            p_signal: 0.9,
            p_nu1: 0.05,
            p_nu2: 0.05,
            f_ec: 1.16,
            clock_rate_hz: 1e9,
            e_det: 0.01,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidProtocol(msg));
        if !(self.nu2 >= 0.0 && self.nu1 > self.nu2 && self.mu > self.nu1) {
            return bad(format!(
                "intensities must satisfy mu > nu1 > nu2 >= 0 (got {}, {}, {})",
                self.mu, self.nu1, self.nu2
            ));
        }
        if !(self.nu1 + self.nu2 < self.mu) {
            return bad(format!("nu1 + nu2 = {} must be below mu = {}", self.nu1 + self.nu2, self.mu));
        }
        let probs = [self.p_signal, self.p_nu1, self.p_nu2];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad(format!("emission probabilities {probs:?} must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("emission probabilities sum to {sum}, expected 1"));
        }
        if !(self.p_basis_major > 0.5 && self.p_basis_major < 1.0) {
            return bad(format!("majority basis probability {} not in (1/2, 1)", self.p_basis_major));
        }
        if !(self.f_ec >= 1.0) || !self.f_ec.is_finite() {
            return bad(format!("error-correction inefficiency {} must be >= 1", self.f_ec));
        }
        if !(self.clock_rate_hz > 0.0) || !self.clock_rate_hz.is_finite() {
            return bad(format!("clock rate {} Hz", self.clock_rate_hz));
        }
        if !(0.0..=0.5).contains(&self.e_det) {
            return bad(format!("e_det {} not in [0, 0.5]", self.e_det));
        }
        Ok(())
    }

    /// Fraction of pulses where both parties chose the majority basis.
    pub fn sift_factor(&self) -> f64 {
        self.p_basis_major * self.p_basis_major
    }

    pub fn intensities(&self) -> [f64; 3] {
        [self.mu, self.nu1, self.nu2]
    }

    pub fn emission_probs(&self) -> [f64; 3] {
        [self.p_signal, self.p_nu1, self.p_nu2]
    }
}

/// Decoy-state observables for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainStats {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu1: f64,
    pub e_nu1: f64,
    pub q_nu2: f64,
    pub e_nu2: f64,
    pub y0: f64,
}

impl GainStats {
    pub fn validate(&self) -> Result<()> {
        for (name, q) in [("q_mu", self.q_mu), ("q_nu1", self.q_nu1), ("q_nu2", self.q_nu2)] {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::InvalidStats(format!("{name} = {q} not in (0, 1]")));
            }
        }
        for (name, e) in [("e_mu", self.e_mu), ("e_nu1", self.e_nu1), ("e_nu2", self.e_nu2)] {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::InvalidStats(format!("{name} = {e} not in [0, 0.5]")));
            }
        }
        if !(0.0..=1.0).contains(&self.y0) {
            return Err(Error::InvalidStats(format!("y0 = {} not in [0, 1]", self.y0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    pub y0_lower: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub distance_km: f64,
    pub loss_db: f64,
    pub bandwidth_gbps: f64,
    pub raman_w: f64,
    pub y0: f64,
    pub sifted_rate: f64,
    pub qber: f64,
    pub secure_rate: f64,
    /// Aggregate classical launch power, when any data channel is lit.
    pub launch_total_dbm: Option<f64>,
    pub exceeds_launch_cap: bool,
}

/// Everything computed for a scenario on the way to its [`RatePoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub point: RatePoint,
    pub t_sys: f64,
    pub noise: NoiseBudget,
    pub stats: GainStats,
    pub bounds: DecoyBounds,
}

/// Binary entropy in bits.
pub fn h2(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("h2 argument", x, "[0, 1]"));
    }
    Ok(binary_entropy(x))
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * math::log2(x) - (1.0 - x) * math::log2(1.0 - x)
}

/// Gain and QBER for one intensity. A zero gain reports the background
/// error rate.
pub fn gain_and_qber(intensity: f64, t_sys: f64, y0: f64, e_det: f64) -> Result<(f64, f64)> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(domain("intensity", intensity, "[0, inf)"));
    }
    if !(0.0..=1.0).contains(&t_sys) {
        return Err(domain("t_sys", t_sys, "[0, 1]"));
    }
    if !(0.0..=0.5).contains(&y0) {
        return Err(domain("y0", y0, "[0, 0.5]"));
    }
    if !(0.0..=0.5).contains(&e_det) {
        return Err(domain("e_det", e_det, "[0, 0.5]"));
    }
    let signal = -math::expm1(-intensity * t_sys);
    let gain = y0 + signal;
    if gain == 0.0 {
        return Ok((0.0, BACKGROUND_ERROR));
    }
    Ok((gain, (BACKGROUND_ERROR * y0 + e_det * signal) / gain))
}

/// Two-decoy lower bounds on the vacuum and single-photon yields and upper
/// bound on the single-photon error rate.
pub fn decoy_bounds(stats: &GainStats, params: &ProtocolParams) -> Result<DecoyBounds> {
    params.validate()?;
    stats.validate()?;
    let denom = decoy_denominator(params)?;
    let (mu, nu1, nu2) = (params.mu, params.nu1, params.nu2);
    let a1 = stats.q_nu1 * math::exp(nu1);
    let a2 = stats.q_nu2 * math::exp(nu2);

    let y0_lower = ((nu1 * a2 - nu2 * a1) / (nu1 - nu2)).max(0.0);
    let y1_lower = (mu / denom
        * (a1 - a2 - (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (stats.q_mu * math::exp(mu) - y0_lower)))
        .max(0.0);
    let e1_upper = if y1_lower > 0.0 {
        ((stats.e_nu1 * a1 - stats.e_nu2 * a2) / ((nu1 - nu2) * y1_lower)).clamp(0.0, BACKGROUND_ERROR)
    } else {
        BACKGROUND_ERROR
    };
    Ok(DecoyBounds {
        y0_lower,
        y1_lower,
        e1_upper,
    })
}

fn decoy_denominator(params: &ProtocolParams) -> Result<f64> {
    let (mu, nu1, nu2) = (params.mu, params.nu1, params.nu2);
    let denom = mu * (nu1 - nu2) - (nu1 * nu1 - nu2 * nu2);
    if !(denom > 0.0) {
        return Err(Error::InvalidProtocol(format!("decoy bound denominator {denom} must be positive")));
    }
    Ok(denom)
}

/// The same estimators before any clamping, smooth in the observables
/// `[Q_μ, Q_ν1, Q_ν2, EQ_μ, EQ_ν1, EQ_ν2]`. Error propagation differentiates
/// these; the clamps only ever move a bound towards its trivial value.
/// `e1` is the background error rate when the yield estimate is not positive.
pub(crate) fn unclamped_decoy_bounds(x: &[f64; 6], params: &ProtocolParams) -> Result<[f64; 3]> {
    let denom = decoy_denominator(params)?;
    let (mu, nu1, nu2) = (params.mu, params.nu1, params.nu2);
    let a1 = x[1] * math::exp(nu1);
    let a2 = x[2] * math::exp(nu2);
    let y0 = (nu1 * a2 - nu2 * a1) / (nu1 - nu2);
    let y1 = mu / denom * (a1 - a2 - (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (x[0] * math::exp(mu) - y0));
    let e1 = if y1 > 0.0 {
        (x[4] * math::exp(nu1) - x[5] * math::exp(nu2)) / ((nu1 - nu2) * y1)
    } else {
        BACKGROUND_ERROR
    };
    Ok([y0, y1, e1])
}

/// Analytic gain statistics for a scenario.
pub fn gain_stats(t_sys: f64, y0: f64, params: &ProtocolParams) -> Result<GainStats> {
    let (q_mu, e_mu) = gain_and_qber(params.mu, t_sys, y0, params.e_det)?;
    let (q_nu1, e_nu1) = gain_and_qber(params.nu1, t_sys, y0, params.e_det)?;
    let (q_nu2, e_nu2) = gain_and_qber(params.nu2, t_sys, y0, params.e_det)?;
    Ok(GainStats {
        q_mu,
        e_mu,
        q_nu1,
        e_nu1,
        q_nu2,
        e_nu2,
        y0,
    })
}

/// Secure key rate per pulse, before multiplying by clock, signal
/// probability and sift factor.
pub fn secure_fraction(stats: &GainStats, bounds: &DecoyBounds, params: &ProtocolParams) -> f64 {
    let q1 = bounds.y1_lower * params.mu * math::exp(-params.mu);
    let r = q1 * (1.0 - binary_entropy(bounds.e1_upper)) - params.f_ec * stats.q_mu * binary_entropy(stats.e_mu);
    r.max(0.0)
}

pub fn system_transmittance(scenario: &LinkScenario) -> Result<f64> {
    scenario.system_transmittance()
}

/// Full evaluation of one scenario.
pub fn evaluate(scenario: &LinkScenario) -> Result<Evaluation> {
    scenario.validate()?;
    let params = &scenario.protocol;
    let loss_db = scenario.path_loss_db()?;
    let t_sys = scenario.system_transmittance()?;
    let noise = scenario.noise()?;
    let y0 = noise.background.y0.min(0.5);
    let stats = gain_stats(t_sys, y0, params)?;
    let bounds = decoy_bounds(&stats, params)?;

    let per_pulse = params.clock_rate_hz * params.p_signal * params.sift_factor();
    let sifted_rate = per_pulse * stats.q_mu;
    let secure_rate = per_pulse * secure_fraction(&stats, &bounds, params);
    let launch = scenario.launch_total();
    let point = RatePoint {
        distance_km: scenario.span.length_km,
        loss_db,
        bandwidth_gbps: scenario.bandwidth_gbps(),
        raman_w: noise.raman_w,
        y0,
        sifted_rate,
        qber: stats.e_mu,
        secure_rate,
        launch_total_dbm: launch.map(|t| t.dbm),
        exceeds_launch_cap: launch.is_some_and(|t| t.exceeds_cap),
    };
    Ok(Evaluation {
        point,
        t_sys,
        noise,
        stats,
        bounds,
    })
}

pub fn secure_rate(scenario: &LinkScenario) -> Result<RatePoint> {
    evaluate(scenario).map(|e| e.point)
}

/// Convenience for sweeps: the same scenario at another length.
pub fn secure_rate_at(scenario: &LinkScenario, length_km: f64) -> Result<RatePoint> {
    let mut s = scenario.clone();
    s.span = FiberSpan::new(length_km, s.span.attenuation_db_per_km)?;
    secure_rate(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn binary_entropy_values() {
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2(1.0).unwrap(), 0.0);
        assert_eq!(h2(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(h2(0.11).unwrap(), 0.4999, epsilon = 1e-4);
        assert!(h2(-0.01).is_err());
        assert!(h2(1.01).is_err());
    }

    #[test]
    fn vacuum_and_opaque_channel_see_background_only() {
        let (q, e) = gain_and_qber(0.0, 0.3, 9e-6, 0.01).unwrap();
        assert_eq!(q, 9e-6);
        assert_eq!(e, 0.5);
        let (q, _) = gain_and_qber(0.4, 0.0, 9e-6, 0.01).unwrap();
        assert_eq!(q, 9e-6);
        assert_eq!(gain_and_qber(0.0, 0.0, 0.0, 0.0).unwrap(), (0.0, 0.5));
    }

    #[test]
    fn gain_and_qber_hand_evaluated() {
        // Independent evaluation: 1 - exp(-x) by its Taylor series.
        let x: f64 = 0.4 * 0.02466;
        let mut signal = 0.0;
        let mut term = 1.0;
        for n in 1..12 {
            term *= -x / n as f64;
            signal -= term;
        }
        let q_expected = 9e-6 + signal;
        let e_expected = (0.5 * 9e-6 + 0.01 * signal) / q_expected;
        let (q, e) = gain_and_qber(0.4, 0.02466, 9e-6, 0.01).unwrap();
        assert_relative_eq!(q, q_expected, max_relative = 1e-12);
        assert_relative_eq!(e, e_expected, max_relative = 1e-12);
        assert_relative_eq!(q, 9.8245e-3, max_relative = 1e-4);
        assert_abs_diff_eq!(e, 0.01045, epsilon = 5e-6);
    }

    #[test]
    fn protocol_validation() {
        assert!(ProtocolParams::default().validate().is_ok());
        let p = ProtocolParams { nu1: 0.395, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ProtocolParams { nu1: 0.007, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ProtocolParams { p_signal: 0.8, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ProtocolParams { p_basis_major: 0.5, ..Default::default() };
        assert!(p.validate().is_err());
        assert_abs_diff_eq!(ProtocolParams::default().sift_factor(), 0.938, epsilon = 1e-3);
    }

    #[test]
    fn bounds_conservative_for_poissonian_channel() {
        let params = ProtocolParams { e_det: 0.01, ..Default::default() };
        let (t, y0) = (0.02466, 9e-6);
        let stats = gain_stats(t, y0, &params).unwrap();
        let b = decoy_bounds(&stats, &params).unwrap();
        let y1_true = y0 + t - y0 * t;
        let e1_true = (0.5 * y0 + 0.01 * t) / y1_true;
        assert!(b.y1_lower <= y1_true && b.y1_lower > 0.9 * y1_true);
        assert!(b.e1_upper >= e1_true);
        assert!(b.y0_lower <= y0);
    }

    #[test]
    fn noiseless_channel_has_zero_single_photon_error() {
        let params = ProtocolParams { e_det: 0.0, ..Default::default() };
        let stats = gain_stats(0.05, 0.0, &params).unwrap();
        let b = decoy_bounds(&stats, &params).unwrap();
        assert_abs_diff_eq!(b.e1_upper, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn opaque_channel_yields_no_key() {
        let params = ProtocolParams::default();
        let y0 = 9e-6;
        let stats = gain_stats(0.0, y0, &params).unwrap();
        assert_eq!(stats.q_nu1, y0);
        assert_eq!(stats.q_nu2, y0);
        let b = decoy_bounds(&stats, &params).unwrap();
        // Background alone is a valid single-photon yield, but with error 1/2.
        assert!(b.y1_lower <= y0 * (1.0 + 1e-9));
        assert_eq!(b.e1_upper, 0.5);
        assert_eq!(secure_fraction(&stats, &b, &params), 0.0);
    }

    #[test]
    fn bad_stats_rejected() {
        let params = ProtocolParams::default();
        let mut stats = gain_stats(0.01, 1e-5, &params).unwrap();
        stats.e_mu = 0.6;
        assert!(decoy_bounds(&stats, &params).is_err());
    }

    #[test]
    fn forced_high_qber_clamps_rate() {
        let params = ProtocolParams::default();
        let mut stats = gain_stats(0.0129, 1e-5, &params).unwrap();
        let b = decoy_bounds(&stats, &params).unwrap();
        stats.e_mu = 0.2;
        assert_eq!(secure_fraction(&stats, &b, &params), 0.0);
    }
}
