//! Planning models for quantum key distribution sharing a fibre with
//! high-bandwidth DWDM data traffic.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the numerical side:
//!
//! * [`channel_plan`]: ITU grid arithmetic, CWDM banding and the mux/filter chain.
//! * [`link_budget`]: fibre attenuation, dBm/W conversion, path loss.
//! * [`noise`]: forward spontaneous Raman scattering and detector background.
//! * [`qkd`]: decoy-state efficient BB84 gains, bounds and secure key rate.
//! * [`calibrate`]: log-space least-squares fit of Raman scale and optical error.
//! * [`montecarlo`]: per-gate stochastic detection model used as an oracle.
//! * [`keyflow`]: AES key refresh arithmetic, key buffer simulation, FEC check.
//!
//! File formats, sweeps and the command line live in the `qkdcoex` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calibrate;
pub mod channel_plan;
pub mod error;
pub mod keyflow;
pub mod link_budget;
mod math;
pub mod montecarlo;
pub mod noise;
pub mod qkd;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use scenario::LinkScenario;
