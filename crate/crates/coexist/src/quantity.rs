//! Numbers with optional unit suffixes, normalised to one canonical unit
//! per dimension.

use qkdcoex_core::units::watts_to_dbm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Canonical km.
    Length,
    /// Canonical nm.
    Wavelength,
    /// Canonical dBm; linear powers are converted.
    Power,
    /// Canonical dB.
    Loss,
    /// Canonical dB/km.
    Attenuation,
    /// Canonical Hz.
    Rate,
    /// Canonical GHz.
    OpticalWidth,
    /// Canonical s.
    Time,
    /// Canonical bit/s.
    BitRate,
    /// Canonical Gb/s.
    DataRate,
    /// Canonical bit.
    Bits,
    /// Plain number; `a/b` fractions allowed.
    Plain,
}

impl Dimension {
    pub fn canonical_suffix(self) -> &'static str {
        match self {
            Self::Length => "km",
            Self::Wavelength => "nm",
            Self::Power => "dBm",
            Self::Loss => "dB",
            Self::Attenuation => "dB/km",
            Self::Rate => "Hz",
            Self::OpticalWidth => "GHz",
            Self::Time => "s",
            Self::BitRate => "bps",
            Self::DataRate => "Gbps",
            Self::Bits => "bit",
            Self::Plain => "",
        }
    }

    fn scale(self, suffix: &str) -> Option<f64> {
        let table: &[(&str, f64)] = match self {
            Self::Length => &[("km", 1.0), ("m", 1e-3)],
            Self::Wavelength => &[("nm", 1.0), ("um", 1e3), ("µm", 1e3), ("pm", 1e-3)],
            Self::Power | Self::Plain => &[],
            Self::Loss => &[("dB", 1.0)],
            Self::Attenuation => &[("dB/km", 1.0)],
            Self::Rate => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9), ("THz", 1e12)],
            Self::OpticalWidth => &[("GHz", 1.0), ("MHz", 1e-3), ("THz", 1e3)],
            Self::Time => &[
                ("s", 1.0),
                ("ms", 1e-3),
                ("us", 1e-6),
                ("µs", 1e-6),
                ("ns", 1e-9),
                ("ps", 1e-12),
            ],
            Self::BitRate => &[("bps", 1.0), ("kbps", 1e3), ("Mbps", 1e6), ("Gbps", 1e9)],
            Self::DataRate => &[("Gbps", 1.0), ("Mbps", 1e-3), ("Tbps", 1e3)],
            Self::Bits => &[("bit", 1.0), ("kbit", 1e3), ("Mbit", 1e6)],
        };
        table.iter().find(|(s, _)| *s == suffix).map(|&(_, k)| k)
    }
}

fn split_suffix(text: &str) -> (&str, &str) {
    let cut = text
        .char_indices()
        .rev()
        .take_while(|&(_, c)| c.is_alphabetic() || c == '/' || c == 'µ')
        .last()
        .map_or(text.len(), |(i, _)| i);
    let (num, suffix) = text.split_at(cut);
    (num.trim(), suffix)
}

fn parse_number(text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("'{text}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}

pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let text = text.trim();
    if dim == Dimension::Plain {
        if let Some((a, b)) = text.split_once('/') {
            let (a, b) = (parse_number(a.trim())?, parse_number(b.trim())?);
            if b == 0.0 {
                return Err(format!("'{text}' divides by zero"));
            }
            return Ok(a / b);
        }
        return parse_number(text);
    }
    let (num, suffix) = split_suffix(text);
    let value = parse_number(num)?;
    if suffix.is_empty() {
        return Ok(value);
    }
    if dim == Dimension::Power {
        let watts = match suffix {
            "dBm" => return Ok(value),
            "W" => value,
            "mW" => value * 1e-3,
            "uW" | "µW" => value * 1e-6,
            "nW" => value * 1e-9,
            _ => return Err(format!("unit '{suffix}' is not a power")),
        };
        return watts_to_dbm(watts).map_err(|e| e.to_string());
    }
    dim.scale(suffix)
        .map(|k| value * k)
        .ok_or_else(|| format!("unit '{suffix}' not accepted here (expected {})", dim.canonical_suffix()))
}

pub fn parse_count(text: &str) -> Result<u64, String> {
    let t = text.trim();
    t.parse().map_err(|_| format!("'{t}' is not a non-negative integer"))
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn format_quantity(v: f64, dim: Dimension) -> String {
    format!("{}{}", format_number(v), dim.canonical_suffix())
}
