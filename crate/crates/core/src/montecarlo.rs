//! Gate-by-gate stochastic simulation of the receiver.
//!
//! Each gate draws an intensity class and a Poissonian photon number. Every
//! photon survives the channel independently with probability `t_sys` and
//! lands in the wrong detector with probability `e_det`. Each detector also
//! fires on background with probability `p_raman + p_dark`. A double click is
//! resolved to a random bit. Detectors are labelled relative to the encoded
//! bit, so a click in the wrong detector alone is an error.
//!
//! Work is split into chunks of [`CHUNK_GATES`] gates. Chunk `i` uses a
//! ChaCha8 stream `i` under the trial seed, so tallies do not depend on how
//! chunks are distributed over workers.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::math;
use crate::qkd::{
    decoy_bounds, gain_stats, unclamped_decoy_bounds, DecoyBounds, GainStats, ProtocolParams, BACKGROUND_ERROR,
};
use crate::scenario::LinkScenario;

pub const CHUNK_GATES: u64 = 1 << 20;

/// Smallest run accepted by the statistical checks.
pub const MIN_STATISTICAL_GATES: u64 = 100_000;

/// Excursion threshold, in standard deviations.
pub const Z_LIMIT: f64 = 4.0;

const TWO_32: f64 = 4_294_967_296.0;
const MAX_PHOTONS: usize = 32;

/// `u32` draws below the threshold fire; `p = 1` maps to `2^32`.
fn threshold(p: f64) -> u64 {
    math::round(p.clamp(0.0, 1.0) * TWO_32) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialConfig {
    pub num_gates: u64,
    pub seed: u64,
}

/// Per-gate probabilities in draw-ready form.
#[derive(Debug, Clone, PartialEq)]
pub struct GateModel {
    pub intensities: [f64; 3],
    pub emission_probs: [f64; 3],
    pub t_sys: f64,
    pub e_det: f64,
    pub p_raman: f64,
    pub p_dark: f64,
    class_thresholds: [u64; 2],
    /// Cumulative Poisson thresholds; the last bucket takes the tail.
    poisson: [[u64; MAX_PHOTONS]; 3],
    survive: u64,
    flip: u64,
    raman: u64,
    background: u64,
}

impl GateModel {
    pub fn new(params: &ProtocolParams, t_sys: f64, p_raman: f64, p_dark: f64) -> Result<Self> {
        params.validate()?;
        for (name, p) in [("t_sys", t_sys), ("p_raman", p_raman), ("p_dark", p_dark)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidTrial(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if p_raman + p_dark > 1.0 {
            return Err(Error::InvalidTrial("background probability above 1".into()));
        }
        let intensities = params.intensities();
        let emission_probs = params.emission_probs();
        let mut poisson = [[0u64; MAX_PHOTONS]; 3];
        for (table, &x) in poisson.iter_mut().zip(&intensities) {
            let mut pmf = math::exp(-x);
            let mut cdf = 0.0;
            for (k, slot) in table.iter_mut().enumerate() {
                cdf += pmf;
                *slot = threshold(cdf);
                pmf *= x / (k + 1) as f64;
            }
            table[MAX_PHOTONS - 1] = 1 << 32;
        }
        Ok(Self {
            intensities,
            emission_probs,
            t_sys,
            e_det: params.e_det,
            p_raman,
            p_dark,
            class_thresholds: [
                threshold(emission_probs[0]),
                threshold(emission_probs[0] + emission_probs[1]),
            ],
            poisson,
            survive: threshold(t_sys),
            flip: threshold(params.e_det),
            raman: threshold(p_raman),
            background: threshold(p_raman + p_dark),
        })
    }

    /// Two detectors required; the correct/wrong labelling assumes a pair.
    pub fn from_scenario(scenario: &LinkScenario) -> Result<Self> {
        scenario.validate()?;
        if scenario.detector.num_detectors != 2 {
            return Err(Error::InvalidTrial(format!(
                "gate model needs exactly 2 detectors, got {}",
                scenario.detector.num_detectors
            )));
        }
        let bg = scenario.noise()?.background;
        Self::new(&scenario.protocol, scenario.system_transmittance()?, bg.p_raman, bg.p_dark)
    }

    fn photon_number(&self, class: usize, u: u64) -> usize {
        let table = &self.poisson[class];
        table.iter().position(|&t| u < t).unwrap_or(MAX_PHOTONS - 1)
    }
}

/// Click and error counts for one intensity class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub gates: u64,
    pub clicks: u64,
    pub errors: u64,
}

impl ClassTally {
    fn merge(&mut self, other: &Self) {
        self.gates += other.gates;
        self.clicks += other.clicks;
        self.errors += other.errors;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub classes: [ClassTally; 3],
    /// Gates that emitted no photon, over all classes.
    pub vacuum: ClassTally,
    /// Gates that emitted exactly one photon, over all classes.
    pub single: ClassTally,
    pub raman_events: u64,
    pub dark_events: u64,
    pub double_clicks: u64,
}

impl Tally {
    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.merge(b);
        }
        self.vacuum.merge(&other.vacuum);
        self.single.merge(&other.single);
        self.raman_events += other.raman_events;
        self.dark_events += other.dark_events;
        self.double_clicks += other.double_clicks;
    }

    pub fn gates(&self) -> u64 {
        self.classes.iter().map(|c| c.gates).sum()
    }
}

pub fn num_chunks(num_gates: u64) -> u64 {
    num_gates.div_ceil(CHUNK_GATES)
}

/// Simulates chunk `chunk_index` of a `num_gates` trial.
pub fn run_chunk(model: &GateModel, config: &TrialConfig, chunk_index: u64) -> Tally {
    let start = chunk_index.saturating_mul(CHUNK_GATES);
    let gates = config.num_gates.saturating_sub(start).min(CHUNK_GATES);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chunk_index);
    let mut tally = Tally::default();

    for _ in 0..gates {
        let draw = rng.next_u64();
        let hi = draw >> 32;
        let class = if hi < model.class_thresholds[0] {
            0
        } else if hi < model.class_thresholds[1] {
            1
        } else {
            2
        };
        let n = model.photon_number(class, draw & 0xffff_ffff);

        let (mut correct, mut wrong) = (false, false);
        for _ in 0..n {
            let v = rng.next_u64();
            if (v >> 32) < model.survive {
                if (v & 0xffff_ffff) < model.flip {
                    wrong = true;
                } else {
                    correct = true;
                }
            }
        }

        let bg = rng.next_u64();
        for (det, u) in [bg >> 32, bg & 0xffff_ffff].into_iter().enumerate() {
            if u < model.background {
                if u < model.raman {
                    tally.raman_events += 1;
                } else {
                    tally.dark_events += 1;
                }
                if det == 0 {
                    correct = true;
                } else {
                    wrong = true;
                }
            }
        }

        let click = correct || wrong;
        let error = match (correct, wrong) {
            (true, true) => {
                tally.double_clicks += 1;
                rng.next_u64() & 1 == 1
            }
            (false, true) => true,
            _ => false,
        };
        let (click, error) = (u64::from(click), u64::from(error));
        let c = &mut tally.classes[class];
        c.gates += 1;
        c.clicks += click;
        c.errors += error;
        let by_number = match n {
            0 => Some(&mut tally.vacuum),
            1 => Some(&mut tally.single),
            _ => None,
        };
        if let Some(t) = by_number {
            t.gates += 1;
            t.clicks += click;
            t.errors += error;
        }
    }
    tally
}

/// Runs every chunk in order on the current thread.
pub fn run_trial(model: &GateModel, config: &TrialConfig) -> Result<TrialResult> {
    if config.num_gates == 0 {
        return Err(Error::InvalidTrial("zero gates".into()));
    }
    let mut tally = Tally::default();
    for i in 0..num_chunks(config.num_gates) {
        tally.merge(&run_chunk(model, config, i));
    }
    TrialResult::from_tally(tally)
}

/// A proportion and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
    /// Number of trials behind the proportion.
    pub trials: u64,
}

impl Estimate {
    pub fn proportion(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                value: 0.0,
                sigma: 0.0,
                trials,
            };
        }
        let p = hits as f64 / trials as f64;
        Self {
            value: p,
            sigma: binomial_sigma(p, trials),
            trials,
        }
    }
}

fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    math::sqrt((p * (1.0 - p)).max(0.0) / trials as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub tally: Tally,
    /// Gain per intensity class, signal first.
    pub gains: [Estimate; 3],
    /// Error rate among clicks per intensity class.
    pub qbers: [Estimate; 3],
    /// Click probability given zero emitted photons.
    pub y0: Estimate,
    /// Click probability given one emitted photon.
    pub y1: Estimate,
    pub e1: Estimate,
    /// Raman clicks per detector per gate.
    pub raman_click_rate: Estimate,
}

impl TrialResult {
    pub fn from_tally(tally: Tally) -> Result<Self> {
        let gates = tally.gates();
        if gates == 0 {
            return Err(Error::InvalidTrial("zero gates".into()));
        }
        for c in tally.classes.iter().chain([&tally.vacuum, &tally.single]) {
            if c.clicks > c.gates || c.errors > c.clicks {
                return Err(Error::InvalidTrial(format!("inconsistent tally {c:?}")));
            }
        }
        let gains = tally.classes.map(|c| Estimate::proportion(c.clicks, c.gates));
        let qbers = tally.classes.map(|c| Estimate::proportion(c.errors, c.clicks));
        Ok(Self {
            gains,
            qbers,
            y0: Estimate::proportion(tally.vacuum.clicks, tally.vacuum.gates),
            y1: Estimate::proportion(tally.single.clicks, tally.single.gates),
            e1: Estimate::proportion(tally.single.errors, tally.single.clicks),
            raman_click_rate: Estimate::proportion(tally.raman_events, 2 * gates),
            tally,
        })
    }

    /// Empirical decoy observables; every class must have clicked.
    pub fn gain_stats(&self) -> Result<GainStats> {
        for (i, c) in self.tally.classes.iter().enumerate() {
            if c.clicks == 0 {
                return Err(Error::InvalidTrial(format!("intensity class {i} has no clicks")));
            }
        }
        Ok(GainStats {
            q_mu: self.gains[0].value,
            e_mu: self.qbers[0].value,
            q_nu1: self.gains[1].value,
            e_nu1: self.qbers[1].value,
            q_nu2: self.gains[2].value,
            e_nu2: self.qbers[2].value,
            y0: self.y0.value,
        })
    }
}

/// One analytic-versus-empirical line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub analytic: f64,
    pub empirical: f64,
    /// Binomial standard error under the analytic value.
    pub sigma: f64,
    pub z: f64,
}

impl ComparisonRow {
    fn new(quantity: &'static str, analytic: f64, empirical: Estimate) -> Self {
        let sigma = binomial_sigma(analytic, empirical.trials);
        let diff = empirical.value - analytic;
        let z = if sigma > 0.0 {
            diff / sigma
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            quantity,
            analytic,
            empirical: empirical.value,
            sigma,
            z,
        }
    }

    pub fn within(&self, z_limit: f64) -> bool {
        self.z.abs() <= z_limit
    }
}

/// Analytic gains, QBERs and background yield against the trial.
pub fn compare_with_analytic(scenario: &LinkScenario, result: &TrialResult) -> Result<Vec<ComparisonRow>> {
    let t_sys = scenario.system_transmittance()?;
    let y0 = scenario.noise()?.background.y0;
    let stats = gain_stats(t_sys, y0, &scenario.protocol)?;
    Ok(alloc::vec![
        ComparisonRow::new("q_mu", stats.q_mu, result.gains[0]),
        ComparisonRow::new("e_mu", stats.e_mu, result.qbers[0]),
        ComparisonRow::new("q_nu1", stats.q_nu1, result.gains[1]),
        ComparisonRow::new("e_nu1", stats.e_nu1, result.qbers[1]),
        ComparisonRow::new("q_nu2", stats.q_nu2, result.gains[2]),
        ComparisonRow::new("e_nu2", stats.e_nu2, result.qbers[2]),
        ComparisonRow::new("y0", y0, result.y0),
    ])
}

/// A bound against the quantity it should bracket. Positive `z` points in
/// the violating direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub bound: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub z: f64,
}

impl BoundCheck {
    fn new(bound: f64, empirical: f64, sigma: f64, lower: bool) -> Self {
        let excess = if lower { bound - empirical } else { empirical - bound };
        let z = if sigma > 0.0 {
            excess / sigma
        } else if excess <= 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        Self {
            bound,
            empirical,
            sigma,
            z,
        }
    }

    pub fn holds(&self) -> bool {
        self.bound_holds_exactly() || self.z <= Z_LIMIT
    }

    fn bound_holds_exactly(&self) -> bool {
        self.z <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyReport {
    pub bounds: DecoyBounds,
    pub y0: BoundCheck,
    pub y1: BoundCheck,
    pub e1: BoundCheck,
}

impl DecoyReport {
    pub fn holds(&self) -> bool {
        self.y0.holds() && self.y1.holds() && self.e1.holds()
    }

    /// Checks whose empirical value sits beyond the bound, at any margin.
    pub fn raw_violations(&self) -> usize {
        [self.y0, self.y1, self.e1].iter().filter(|c| !c.bound_holds_exactly()).count()
    }
}

/// Observables `[Q_μ, Q_ν1, Q_ν2, EQ_μ, EQ_ν1, EQ_ν2]`.
fn observables(stats: &GainStats) -> [f64; 6] {
    [
        stats.q_mu,
        stats.q_nu1,
        stats.q_nu2,
        stats.e_mu * stats.q_mu,
        stats.e_nu1 * stats.q_nu1,
        stats.e_nu2 * stats.q_nu2,
    ]
}

/// Feeds the empirical decoy statistics through the bounds and compares
/// with the true single-photon tallies. Bound uncertainty is propagated
/// linearly from the binomial covariance of clicks and errors per class,
/// through the unclamped estimators.
pub fn decoy_report(result: &TrialResult, params: &ProtocolParams) -> Result<DecoyReport> {
    params.validate()?;
    let stats = result.gain_stats()?;
    let x = observables(&stats);
    // Background-only classes can sample error rates just above 1/2.
    let clamp = |e: f64| e.min(BACKGROUND_ERROR);
    let bounded = GainStats {
        e_mu: clamp(stats.e_mu),
        e_nu1: clamp(stats.e_nu1),
        e_nu2: clamp(stats.e_nu2),
        ..stats
    };
    let bounds = decoy_bounds(&bounded, params)?;

    let mut var = [[0.0; 6]; 6];
    for c in 0..3 {
        let n = result.tally.classes[c].gates as f64;
        let (q, eq) = (x[c], x[c + 3]);
        var[c][c] = q * (1.0 - q) / n;
        var[c + 3][c + 3] = eq * (1.0 - eq) / n;
        let cov = eq * (1.0 - q) / n;
        var[c][c + 3] = cov;
        var[c + 3][c] = cov;
    }
    let mut grad = [[0.0; 6]; 3];
    for i in 0..6 {
        let h = (x[i] * 1e-4).max(1e-12);
        let (mut up, mut down) = (x, x);
        up[i] += h;
        down[i] -= h;
        let (bu, bd) = (unclamped_decoy_bounds(&up, params)?, unclamped_decoy_bounds(&down, params)?);
        for (g, (u, d)) in grad.iter_mut().zip(bu.iter().zip(&bd)) {
            g[i] = (u - d) / (2.0 * h);
        }
    }
    let quad = |g: &[f64; 6]| -> f64 {
        let mut s = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                s += g[i] * var[i][j] * g[j];
            }
        }
        s.max(0.0)
    };
    let combine = |g: &[f64; 6], emp: Estimate| math::sqrt(quad(g) + emp.sigma * emp.sigma);

    Ok(DecoyReport {
        bounds,
        y0: BoundCheck::new(bounds.y0_lower, result.y0.value, combine(&grad[0], result.y0), true),
        y1: BoundCheck::new(bounds.y1_lower, result.y1.value, combine(&grad[1], result.y1), true),
        e1: BoundCheck::new(bounds.e1_upper, result.e1.value, combine(&grad[2], result.e1), false),
    })
}

/// Validates the protocol before spending any gates, then runs and checks.
pub fn verify_decoy_bounds(scenario: &LinkScenario, config: &TrialConfig) -> Result<DecoyReport> {
    scenario.protocol.validate()?;
    let model = GateModel::from_scenario(scenario)?;
    let result = run_trial(&model, config)?;
    decoy_report(&result, &scenario.protocol)
}

/// Number of reports with a check beyond [`Z_LIMIT`].
pub fn count_excursions(reports: &[DecoyReport]) -> usize {
    reports.iter().filter(|r| !r.holds()).count()
}
