use alloc::boxed::Box;
use alloc::string::String;

use crate::calibrate::CalibrationFit;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("ITU grid index {0} outside the supported range [-40, 80]")]
    GridIndexOutOfRange(f64),
    #[error("frequency must be positive, got {0} THz")]
    NonPositiveFrequency(f64),
    #[error("wavelength must be positive, got {0} nm")]
    NonPositiveWavelength(f64),
    #[error("power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("loss must be non-negative, got {0} dB")]
    NegativeLoss(f64),
    #[error("invalid fibre span: {0}")]
    InvalidSpan(String),
    #[error("invalid mux element: {0}")]
    InvalidElement(String),
    #[error("invalid channel plan: {0}")]
    InvalidPlan(String),
    #[error("channel plan has no spectral filter on the receive side")]
    MissingRxFilter,
    #[error("filter element has no passband")]
    MissingPassband,
    #[error("launch plan has no channels")]
    EmptyLaunchPlan,
    #[error("invalid detector parameters: {0}")]
    InvalidDetector(String),
    #[error("invalid protocol parameters: {0}")]
    InvalidProtocol(String),
    #[error("invalid gain statistics: {0}")]
    InvalidStats(String),
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("no Raman coefficient for pump at {0} nm")]
    MissingRamanEntry(f64),
    #[error("invalid Raman profile: {0}")]
    InvalidRaman(String),
    #[error("calibration underdetermined: {anchors} anchor(s) for {params} free parameter(s)")]
    Underdetermined { anchors: usize, params: usize },
    #[error("invalid calibration input: {0}")]
    InvalidCalibration(String),
    #[error(
        "calibration failed: max |log-rate residual| {:.4} exceeds {:.4}",
        .0.max_abs_residual,
        .0.threshold
    )]
    CalibrationFailed(Box<CalibrationFit>),
    #[error("secure key rate is zero: no key refresh possible")]
    NoKeyRate,
    #[error("invalid key flow input: {0}")]
    InvalidKeyflow(String),
    #[error("invalid Monte Carlo trial: {0}")]
    InvalidTrial(String),
}

pub(crate) fn domain(name: &'static str, value: f64, domain_text: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain: domain_text,
    }
}
