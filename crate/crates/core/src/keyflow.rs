//! Key delivery to AES-256 line cards.
//!
//! The QKD unit pushes 512-bit blocks; each block serves one pair of line
//! cards with 256 bits apiece.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math;

pub const BITS_PER_KEY: u64 = 256;
pub const BITS_PER_PUSH: u64 = 2 * BITS_PER_KEY;
pub const DEFAULT_CAPACITY_BITS: u64 = 1_000_000;
/// Pre-FEC bit error rate the classical transceivers tolerate, inclusive.
pub const FEC_THRESHOLD: f64 = 1.9e-2;

/// Absorbs rounding when fill and drain are commensurate.
const EVENT_SNAP: f64 = 1e-9;

/// Shortest refresh interval the key rate can sustain, s.
pub fn min_refresh_interval(secure_rate: f64, num_cards: u32) -> Result<f64> {
    if !secure_rate.is_finite() || secure_rate < 0.0 {
        return Err(domain("secure rate", secure_rate, "[0, inf)"));
    }
    if secure_rate == 0.0 {
        return Err(Error::NoKeyRate);
    }
    Ok(BITS_PER_KEY as f64 * f64::from(num_cards) / secure_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncryptorFleet {
    pub num_line_cards: u32,
}

impl EncryptorFleet {
    pub fn new(num_line_cards: u32) -> Result<Self> {
        if num_line_cards == 0 {
            return Err(Error::InvalidKeyflow("at least one line card required".into()));
        }
        Ok(Self { num_line_cards })
    }

    /// An odd card still consumes a whole push.
    pub fn card_pairs(&self) -> u64 {
        u64::from(self.num_line_cards).div_ceil(2)
    }

    /// Bits drained at every refresh.
    pub fn demand_bits(&self) -> u64 {
        self.card_pairs() * BITS_PER_PUSH
    }
}

/// Invariant: `level <= capacity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyBuffer {
    pub level: u64,
    pub fill_rate: f64,
    pub capacity: u64,
}

impl KeyBuffer {
    pub fn new(fill_rate: f64) -> Result<Self> {
        let b = Self {
            level: 0,
            fill_rate,
            capacity: DEFAULT_CAPACITY_BITS,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fill_rate.is_finite() || self.fill_rate < 0.0 {
            return Err(Error::InvalidKeyflow(format!("fill rate {} bit/s", self.fill_rate)));
        }
        if self.capacity < BITS_PER_PUSH {
            return Err(Error::InvalidKeyflow(format!("capacity {} below one push", self.capacity)));
        }
        if self.level > self.capacity {
            return Err(Error::InvalidKeyflow(format!(
                "level {} exceeds capacity {}",
                self.level, self.capacity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Push,
    /// A push that did not fit entirely.
    Overflow,
    Refresh,
    Stall,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Push => "push",
            Self::Overflow => "overflow",
            Self::Refresh => "refresh",
            Self::Stall => "stall",
        }
    }
}

/// Buffer level just after the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub t: f64,
    pub kind: EventKind,
    pub level: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferReport {
    pub initial_level: u64,
    pub final_level: u64,
    pub pushes: u64,
    pub refreshes: u64,
    pub stalls: u64,
    pub first_stall_s: Option<f64>,
    pub filled_bits: u64,
    pub drained_bits: u64,
    pub discarded_bits: u64,
    /// Fill rate minus refresh demand, bit/s.
    pub steady_state_slack_bps: f64,
    /// Empty unless a trace was requested.
    pub trace: Vec<TraceEvent>,
}

impl BufferReport {
    pub fn conserves_bits(&self) -> bool {
        self.initial_level + self.filled_bits == self.final_level + self.drained_bits + self.discarded_bits
    }
}

/// Pushes completed by time `t`.
fn pushes_by(fill_rate: f64, t: f64) -> u64 {
    math::floor(fill_rate * t / BITS_PER_PUSH as f64 + EVENT_SNAP) as u64
}

/// Discrete-event run over `(0, duration]`. Pushes arrive each time the
/// accumulated key crosses a multiple of 512 bits; refreshes drain the
/// fleet's demand every `policy_interval`. A push and a refresh at the same
/// instant are ordered push first. A refresh that finds too little key
/// stalls and leaves the buffer untouched.
pub fn simulate_buffer(
    buffer: &KeyBuffer,
    fleet: &EncryptorFleet,
    duration: f64,
    policy_interval: f64,
    record_trace: bool,
) -> Result<BufferReport> {
    buffer.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidKeyflow(format!("duration {duration} s must be positive")));
    }
    if !(policy_interval > 0.0) || !policy_interval.is_finite() {
        return Err(Error::InvalidKeyflow(format!("policy interval {policy_interval} s must be positive")));
    }
    let demand = fleet.demand_bits();
    let push_period = BITS_PER_PUSH as f64 / buffer.fill_rate;
    let mut r = BufferReport {
        initial_level: buffer.level,
        final_level: buffer.level,
        pushes: 0,
        refreshes: 0,
        stalls: 0,
        first_stall_s: None,
        filled_bits: 0,
        drained_bits: 0,
        discarded_bits: 0,
        steady_state_slack_bps: buffer.fill_rate - demand as f64 / policy_interval,
        trace: Vec::new(),
    };
    let mut level = buffer.level;

    let push_until = |count: u64, level: &mut u64, r: &mut BufferReport| {
        while r.pushes < count {
            r.pushes += 1;
            r.filled_bits += BITS_PER_PUSH;
            let room = buffer.capacity - *level;
            let kept = room.min(BITS_PER_PUSH);
            *level += kept;
            r.discarded_bits += BITS_PER_PUSH - kept;
            if record_trace {
                let kind = if kept < BITS_PER_PUSH { EventKind::Overflow } else { EventKind::Push };
                r.trace.push(TraceEvent {
                    t: r.pushes as f64 * push_period,
                    kind,
                    level: *level,
                });
            }
        }
    };

    let refreshes = math::floor(duration / policy_interval + EVENT_SNAP) as u64;
    for j in 1..=refreshes {
        let t = j as f64 * policy_interval;
        push_until(pushes_by(buffer.fill_rate, t), &mut level, &mut r);
        r.refreshes += 1;
        let kind = if level >= demand {
            level -= demand;
            r.drained_bits += demand;
            EventKind::Refresh
        } else {
            r.stalls += 1;
            r.first_stall_s.get_or_insert(t);
            EventKind::Stall
        };
        if record_trace {
            r.trace.push(TraceEvent { t, kind, level });
        }
    }
    push_until(pushes_by(buffer.fill_rate, duration), &mut level, &mut r);
    r.final_level = level;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FecVerdict {
    pub pass: bool,
    /// Threshold over measured BER; infinite for an error-free link.
    pub margin: f64,
}

pub fn fec_margin(pre_fec_ber: f64) -> Result<FecVerdict> {
    if !(0.0..=0.5).contains(&pre_fec_ber) {
        return Err(domain("pre-FEC BER", pre_fec_ber, "[0, 0.5]"));
    }
    Ok(FecVerdict {
        pass: pre_fec_ber <= FEC_THRESHOLD,
        margin: if pre_fec_ber == 0.0 { f64::INFINITY } else { FEC_THRESHOLD / pre_fec_ber },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn refresh_interval_examples() {
        assert_relative_eq!(min_refresh_interval(1.2e6, 1).unwrap(), 213.33e-6, max_relative = 1e-4);
        assert_relative_eq!(min_refresh_interval(10e3, 1).unwrap(), 25.6e-3, max_relative = 1e-12);
        assert_relative_eq!(min_refresh_interval(139e3, 100).unwrap(), 0.184, max_relative = 2e-3);
        assert_eq!(min_refresh_interval(0.0, 1), Err(Error::NoKeyRate));
        assert!(min_refresh_interval(-1.0, 1).is_err());
    }

    #[test]
    fn fec_examples() {
        let v = fec_margin(2.2e-3).unwrap();
        assert!(v.pass);
        assert_relative_eq!(v.margin, 8.636, max_relative = 1e-3);
        assert!(fec_margin(1.9e-2).unwrap().pass);
        assert!(!fec_margin(0.05).unwrap().pass);
        assert!(fec_margin(0.6).is_err());
        assert!(fec_margin(-0.1).is_err());
    }

    #[test]
    fn zero_fill_stalls_at_first_refresh() {
        let b = KeyBuffer::new(0.0).unwrap();
        let r = simulate_buffer(&b, &EncryptorFleet::new(2).unwrap(), 1e-3, 250e-6, false).unwrap();
        assert_eq!(r.first_stall_s, Some(250e-6));
        assert_eq!(r.stalls, 4);
        assert_eq!(r.pushes, 0);
    }

    #[test]
    fn balance_point_never_stalls() {
        let policy = 250e-6;
        let b = KeyBuffer::new(BITS_PER_PUSH as f64 / policy).unwrap();
        let r = simulate_buffer(&b, &EncryptorFleet::new(2).unwrap(), 60.0, policy, false).unwrap();
        assert_eq!(r.stalls, 0);
        assert_eq!(r.steady_state_slack_bps, 0.0);
        assert_eq!(r.final_level, 0);
        assert!(r.conserves_bits());
    }

    #[test]
    fn overflow_is_discarded_and_counted() {
        let b = KeyBuffer {
            level: 0,
            fill_rate: 1e6,
            capacity: 4096,
        };
        let r = simulate_buffer(&b, &EncryptorFleet::new(2).unwrap(), 1.0, 0.1, true).unwrap();
        assert!(r.discarded_bits > 0);
        assert!(r.conserves_bits());
        assert!(r.trace.iter().all(|e| e.level <= 4096));
        assert!(r.trace.iter().any(|e| e.kind == EventKind::Overflow));
    }

    #[test]
    fn invalid_inputs_rejected() {
        let b = KeyBuffer::new(1e6).unwrap();
        let f = EncryptorFleet::new(2).unwrap();
        assert!(simulate_buffer(&b, &f, 0.0, 1e-3, false).is_err());
        assert!(simulate_buffer(&b, &f, 1.0, 0.0, false).is_err());
        assert!(EncryptorFleet::new(0).is_err());
        assert!(KeyBuffer::new(-1.0).is_err());
    }
}
