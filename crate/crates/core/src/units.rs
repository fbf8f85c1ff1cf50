//! Physical constants and unit conversions shared by the models.

/// Speed of light expressed as nm·THz, so that `λ[nm] = C_NM_THZ / f[THz]`.
pub const C_NM_THZ: f64 = 299_792.458;

/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Planck constant, J·s (exact SI value).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Planck constant times speed of light, J·m.
pub const PLANCK_C: f64 = PLANCK_J_S * C_M_PER_S;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    crate::math::pow10(dbm / 10.0) * 1e-3
}

/// Converts a positive power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> crate::Result<f64> {
    if !(watts > 0.0) || !watts.is_finite() {
        return Err(crate::Error::NonPositivePower(watts));
    }
    Ok(10.0 * crate::math::log10(watts * 1e3))
}

/// Converts a loss in dB to a power ratio in (0, 1].
pub fn transmittance(loss_db: f64) -> crate::Result<f64> {
    if !(loss_db >= 0.0) {
        return Err(crate::Error::NegativeLoss(loss_db));
    }
    Ok(crate::math::pow10(-loss_db / 10.0))
}
