//! Least-squares fit of the Raman scale factor and optical error against
//! observed rates.
//!
//! Residuals are `ln(model / observed)` per anchor. The search runs a coarse
//! grid over `log10(scale) × e_det` and then refines with cyclic
//! golden-section steps around the best grid cell.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::qkd::evaluate;
use crate::scenario::LinkScenario;

/// Stand-in for `ln(0)` so that a zero model rate still yields a finite,
/// very large residual.
const ZERO_RATE_FLOOR: f64 = 1e-300;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitParam {
    /// Common multiplier on every Raman coefficient.
    RamanScale,
    OpticalError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    SecureRate(f64),
    Qber(f64),
}

impl Observation {
    pub fn value(self) -> f64 {
        match self {
            Self::SecureRate(v) | Self::Qber(v) => v,
        }
    }

    fn same_kind(self, other: Self) -> bool {
        matches!(
            (self, other),
            (Self::SecureRate(_), Self::SecureRate(_)) | (Self::Qber(_), Self::Qber(_))
        )
    }
}

/// A scenario paired with one measured quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub scenario: LinkScenario,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub free: Vec<FitParam>,
    /// Search range for `log10` of the Raman scale factor.
    pub log10_scale_range: (f64, f64),
    pub e_det_range: (f64, f64),
    pub grid_points: usize,
    /// Stop refining once a full cycle improves the objective by less.
    pub tolerance: f64,
    pub max_cycles: usize,
    /// Largest acceptable `|ln(model/observed)|`.
    pub threshold: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            free: alloc::vec![FitParam::RamanScale, FitParam::OpticalError],
            log10_scale_range: (-3.0, 3.0),
            e_det_range: (0.0, 0.15),
            grid_points: 61,
            tolerance: 1e-12,
            max_cycles: 50,
            threshold: 0.05,
        }
    }
}

impl CalibrationOptions {
    fn is_free(&self, p: FitParam) -> bool {
        self.free.contains(&p)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.log10_scale_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidCalibration(format!("scale range ({lo}, {hi})")));
        }
        let (lo, hi) = self.e_det_range;
        if !(0.0 <= lo && lo < hi && hi <= 0.5) {
            return Err(Error::InvalidCalibration(format!("e_det range ({lo}, {hi}) not within [0, 0.5]")));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidCalibration("at least two grid points required".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidCalibration(format!("threshold {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    /// Multiplier applied to every anchor's Raman profile; 1 when not fitted.
    pub raman_scale: f64,
    /// Fitted optical error, `None` when each anchor keeps its own.
    pub e_det: Option<f64>,
    /// `ln(model/observed)` per anchor, in input order.
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub threshold: f64,
    /// Sum of squared residuals.
    pub objective: f64,
}

impl CalibrationFit {
    pub fn apply(&self, scenario: &LinkScenario) -> LinkScenario {
        let s = scenario.clone().with_raman_scale(self.raman_scale);
        match self.e_det {
            Some(e) => s.with_e_det(e),
            None => s,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_abs_residual <= self.threshold
    }
}

fn modelled(anchor: &Anchor, scale: f64, e_det: Option<f64>) -> Result<f64> {
    let mut s = anchor.scenario.clone().with_raman_scale(scale);
    if let Some(e) = e_det {
        s = s.with_e_det(e);
    }
    let point = evaluate(&s)?.point;
    Ok(match anchor.observation {
        Observation::SecureRate(_) => point.secure_rate,
        Observation::Qber(_) => point.qber,
    })
}

fn residuals(anchors: &[Anchor], scale: f64, e_det: Option<f64>) -> Result<Vec<f64>> {
    anchors
        .iter()
        .map(|a| {
            let m = modelled(a, scale, e_det)?.max(ZERO_RATE_FLOOR);
            Ok(math::ln(m / a.observation.value()))
        })
        .collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn validate_anchors(anchors: &[Anchor], free: usize) -> Result<()> {
    if anchors.len() < free.max(1) {
        return Err(Error::Underdetermined {
            anchors: anchors.len(),
            params: free,
        });
    }
    for (i, a) in anchors.iter().enumerate() {
        a.scenario.validate()?;
        let v = a.observation.value();
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidCalibration(format!("anchor {i}: observation {v} must be positive")));
        }
        if let Observation::Qber(q) = a.observation {
            if q > 0.5 {
                return Err(Error::InvalidCalibration(format!("anchor {i}: QBER {q} above 1/2")));
            }
        }
        for (j, b) in anchors[..i].iter().enumerate() {
            if a.scenario == b.scenario && a.observation.same_kind(b.observation) {
                return Err(Error::InvalidCalibration(format!("anchors {j} and {i} are duplicates")));
            }
        }
    }
    Ok(())
}

/// Golden-section minimisation of `f` on `[lo, hi]`.
fn golden_section(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Fits the free parameters to `anchors`.
///
/// Returns [`Error::CalibrationFailed`] carrying the best fit when any
/// residual exceeds `options.threshold`.
pub fn calibrate_raman(anchors: &[Anchor], options: &CalibrationOptions) -> Result<CalibrationFit> {
    options.validate()?;
    let fit_scale = options.is_free(FitParam::RamanScale);
    let fit_edet = options.is_free(FitParam::OpticalError);
    let n_free = usize::from(fit_scale) + usize::from(fit_edet);
    validate_anchors(anchors, n_free)?;

    let (s_lo, s_hi) = if fit_scale { options.log10_scale_range } else { (0.0, 0.0) };
    let (e_lo, e_hi) = options.e_det_range;
    let objective = |log_s: f64, e: f64| -> Result<f64> {
        let r = residuals(anchors, math::pow10(log_s), fit_edet.then_some(e))?;
        Ok(sum_sq(&r))
    };

    let n_s = if fit_scale { options.grid_points } else { 1 };
    let n_e = if fit_edet { options.grid_points } else { 1 };
    let (mut best_s, mut best_e, mut best) = (s_lo, e_lo, f64::INFINITY);
    for log_s in linspace(s_lo, s_hi, n_s.max(2)).take(n_s) {
        for e in linspace(e_lo, e_hi, n_e.max(2)).take(n_e) {
            let v = objective(log_s, e)?;
            if v < best {
                (best_s, best_e, best) = (log_s, e, v);
            }
        }
    }

    if n_free > 0 {
        let ds = (s_hi - s_lo) / (options.grid_points - 1) as f64;
        let de = (e_hi - e_lo) / (options.grid_points - 1) as f64;
        for _ in 0..options.max_cycles {
            let before = best;
            if fit_scale {
                let lo = (best_s - ds).max(s_lo);
                let hi = (best_s + ds).min(s_hi);
                let (x, v) = golden_section(lo, hi, 1e-10, |x| objective(x, best_e))?;
                if v < best {
                    (best_s, best) = (x, v);
                }
            }
            if fit_edet {
                let lo = (best_e - de).max(e_lo);
                let hi = (best_e + de).min(e_hi);
                let (x, v) = golden_section(lo, hi, 1e-12, |x| objective(best_s, x))?;
                if v < best {
                    (best_e, best) = (x, v);
                }
            }
            if before - best <= options.tolerance * before.max(1e-300) {
                break;
            }
        }
    }

    let raman_scale = math::pow10(best_s);
    let e_det = fit_edet.then_some(best_e);
    let res = residuals(anchors, raman_scale, e_det)?;
    let fit = CalibrationFit {
        raman_scale,
        e_det,
        max_abs_residual: res.iter().fold(0.0, |m, r| m.max(r.abs())),
        objective: sum_sq(&res),
        residuals: res,
        threshold: options.threshold,
    };
    if fit.passed() {
        Ok(fit)
    } else {
        Err(Error::CalibrationFailed(Box::new(fit)))
    }
}
