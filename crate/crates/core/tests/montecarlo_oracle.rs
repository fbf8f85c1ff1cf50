//! Gate-level simulation against the analytic model.

use qkdcoex_core::channel_plan::FilterChoice;
use qkdcoex_core::montecarlo::{
    compare_with_analytic, count_excursions, decoy_report, num_chunks, run_chunk, run_trial, verify_decoy_bounds,
    GateModel, Tally, TrialConfig, TrialResult, CHUNK_GATES, Z_LIMIT,
};
use qkdcoex_core::qkd::ProtocolParams;
use qkdcoex_core::scenario::{two_channel_scenario, LinkScenario};

fn fifty_km() -> LinkScenario {
    two_channel_scenario(50.0, FilterChoice::Ghz100, 2e-9).unwrap()
}

fn trial(s: &LinkScenario, num_gates: u64, seed: u64) -> TrialResult {
    run_trial(&GateModel::from_scenario(s).unwrap(), &TrialConfig { num_gates, seed }).unwrap()
}

#[test]
fn dark_counts_alone_give_y0() {
    let model = GateModel::new(&ProtocolParams::default(), 0.0, 0.0, 4.5e-6).unwrap();
    let r = run_trial(&model, &TrialConfig { num_gates: 100_000_000, seed: 11 }).unwrap();
    let n = r.y0.trials as f64;
    let sigma = (9e-6 * (1.0 - 9e-6) / n).sqrt();
    let z = (r.y0.value - 9e-6) / sigma;
    assert!(z.abs() <= Z_LIMIT, "y0 {} z {z}", r.y0.value);
    // Opaque channel: every class sees the same background.
    for g in r.gains {
        assert!(((g.value - 9e-6) / (9e-6 / g.trials as f64).sqrt()).abs() <= Z_LIMIT);
    }
    assert_eq!(r.raman_click_rate.value, 0.0);
}

#[test]
fn noiseless_signal_has_no_errors() {
    let params = ProtocolParams {
        e_det: 0.0,
        ..ProtocolParams::default()
    };
    let model = GateModel::new(&params, 0.05, 0.0, 0.0).unwrap();
    let r = run_trial(&model, &TrialConfig { num_gates: 5_000_000, seed: 2 }).unwrap();
    for (g, e) in r.gains.iter().zip(&r.qbers) {
        assert!(g.value > 0.0);
        assert_eq!(e.value, 0.0);
    }
    assert_eq!(r.e1.value, 0.0);
    assert_eq!(r.tally.double_clicks, 0);
}

#[test]
fn fifty_km_matches_analytic() {
    let s = fifty_km();
    let r = trial(&s, 100_000_000, 5);
    for row in compare_with_analytic(&s, &r).unwrap() {
        assert!(row.within(Z_LIMIT), "{} analytic {} empirical {} z {}", row.quantity, row.analytic, row.empirical, row.z);
    }
    let d = decoy_report(&r, &s.protocol).unwrap();
    assert!(d.holds(), "{d:?}");
}

#[test]
fn reproducible_per_seed() {
    let s = fifty_km();
    let a = trial(&s, 3_000_000, 42);
    let b = trial(&s, 3_000_000, 42);
    assert_eq!(a, b);
    let c = trial(&s, 3_000_000, 43);
    assert_ne!(a.tally, c.tally);
}

#[test]
fn shard_grouping_does_not_matter() {
    let model = GateModel::from_scenario(&fifty_km()).unwrap();
    let cfg = TrialConfig {
        num_gates: 7 * CHUNK_GATES + 12_345,
        seed: 9,
    };
    let whole = run_trial(&model, &cfg).unwrap();
    let chunks: Vec<Tally> = (0..num_chunks(cfg.num_gates)).map(|i| run_chunk(&model, &cfg, i)).collect();
    for group in [1, 2, 3, 5, 8] {
        // Merge within shards of `group` chunks, then merge shards in reverse.
        let shards: Vec<Tally> = chunks
            .chunks(group)
            .map(|g| {
                let mut t = Tally::default();
                g.iter().for_each(|c| t.merge(c));
                t
            })
            .collect();
        let mut total = Tally::default();
        shards.iter().rev().for_each(|s| total.merge(s));
        assert_eq!(total, whole.tally, "grouping {group}");
    }
    assert_eq!(whole.tally.gates(), cfg.num_gates);
}

#[test]
fn raman_clicks_scale_with_launch_power() {
    let base = fifty_km();
    let doubled = base.clone().with_bandwidth(2.0 * base.bandwidth_gbps()).unwrap();
    let one = trial(&base, 20_000_000, 21).raman_click_rate;
    let two = trial(&doubled, 20_000_000, 22).raman_click_rate;
    assert!(one.value > 0.0);
    let z = (two.value - 2.0 * one.value) / (two.sigma.powi(2) + 4.0 * one.sigma.powi(2)).sqrt();
    assert!(z.abs() <= Z_LIMIT, "{} vs 2 x {} (z {z})", two.value, one.value);
    let want = doubled.noise().unwrap().background.p_raman;
    assert!(((two.value - want) / two.sigma).abs() <= Z_LIMIT);
}

#[test]
fn analytic_inside_interval_for_most_seeds() {
    let s = fifty_km();
    let mut outliers = 0;
    let mut reports = Vec::new();
    for seed in 0..20 {
        let r = trial(&s, 2_000_000, 1000 + seed);
        if compare_with_analytic(&s, &r).unwrap().iter().any(|row| !row.within(Z_LIMIT)) {
            outliers += 1;
        }
        reports.push(decoy_report(&r, &s.protocol).unwrap());
    }
    assert!(outliers <= 1, "{outliers} runs outside {Z_LIMIT} sigma");
    assert!(count_excursions(&reports) <= 1);
}

#[test]
fn opaque_channel_bounds_hold() {
    let model = GateModel::new(&ProtocolParams::default(), 0.0, 0.0, 1e-3).unwrap();
    let r = run_trial(&model, &TrialConfig { num_gates: 10_000_000, seed: 4 }).unwrap();
    let d = decoy_report(&r, &ProtocolParams::default()).unwrap();
    assert!(d.holds(), "{d:?}");
}

#[test]
fn degenerate_decoys_rejected_before_running() {
    let mut s = fifty_km();
    s.protocol.nu2 = s.protocol.nu1;
    let cfg = TrialConfig {
        num_gates: u64::MAX,
        seed: 0,
    };
    assert!(verify_decoy_bounds(&s, &cfg).is_err());
}
