//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so every line always prints.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qkdcoex::config::ScenarioConfig;
use qkdcoex::io::read_anchors;
use qkdcoex::run::{build_scenario, run_calibration, run_trial_parallel, sweep_bandwidth, CalibrationOutcome};
use qkdcoex_core::channel_plan::FilterChoice;
use qkdcoex_core::keyflow::{fec_margin, min_refresh_interval};
use qkdcoex_core::link_budget::FiberSpan;
use qkdcoex_core::montecarlo::{compare_with_analytic, count_excursions, decoy_report, GateModel, TrialConfig, Z_LIMIT};
use qkdcoex_core::noise::{forward_raman_power, raman_peak_distance};
use qkdcoex_core::qkd::secure_rate;
use qkdcoex_core::scenario::LinkScenario;

const MC_GATES: u64 = 100_000_000;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenarios().join(name)).expect(name)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value > 0.0 && value <= target * factor && value >= target / factor
}

/// Scenario config with the fitted coefficient and optical error folded in.
fn fitted(mut config: ScenarioConfig, base_rho: f64, fit: &CalibrationOutcome) -> ScenarioConfig {
    config.raman.rho = Some(base_rho * fit.fit.raman_scale);
    config.raman.entries.clear();
    if let Some(e) = fit.fit.e_det {
        config.protocol.e_det = e;
    }
    config
}

fn calibration(fit: &CalibrationOutcome, elapsed: Duration) -> Outcome {
    let residuals: Vec<String> = fit.fit.residuals.iter().map(|r| format!("{r:+.4}")).collect();
    outcome(
        fit.fit.max_abs_residual <= 0.05 && elapsed < Duration::from_secs(10),
        format!(
            "ln residuals [{}] (limit 0.05), scale {:.3e}, e_det {:?}, {:.2} s",
            residuals.join(", "),
            fit.fit.raman_scale,
            fit.fit.e_det,
            elapsed.as_secs_f64()
        ),
    )
}

fn cross_filter(two: &ScenarioConfig) -> anyhow::Result<Outcome> {
    let narrow = secure_rate(&build_scenario(two, Some(FilterChoice::Ghz25))?.with_length(101.0)?)?.secure_rate;
    let wide = secure_rate(&build_scenario(two, Some(FilterChoice::Ghz100))?.with_length(100.0)?)?.secure_rate;
    Ok(outcome(
        within_factor(narrow, 1e4, 3.0) && wide == 0.0,
        format!("25 GHz at 101 km {narrow:.4e} b/s (want 3.33e3..3e4), 100 GHz at 100 km {wide:.4e} b/s (want 0)"),
    ))
}

fn bandwidth_sweep(ten: &ScenarioConfig) -> anyhow::Result<Outcome> {
    let wide = build_scenario(ten, Some(FilterChoice::Ghz100))?;
    let at_1tb = secure_rate(&wide.clone().with_bandwidth(1000.0)?)?.secure_rate;
    let rows = sweep_bandwidth(&wide, &ten.sweep.bandwidth_gbps)?;
    let first_zero = rows.iter().position(|r| r.secure_rate <= 0.0);
    let transition = match first_zero {
        Some(i) => {
            let g = rows[i].bandwidth_gbps;
            i > 0 && g > 4000.0 && g <= 8000.0 && rows[..i].iter().all(|r| r.secure_rate > 0.0)
        }
        None => false,
    };
    let narrow = secure_rate(&build_scenario(ten, Some(FilterChoice::Ghz25))?.with_bandwidth(10_000.0)?)?.secure_rate;
    Ok(outcome(
        at_1tb >= 1e6 && transition && within_factor(narrow, 1.39e5, 3.0),
        format!(
            "100 GHz at 1 Tb/s {at_1tb:.4e} b/s (want >= 1e6), first zero at {} Gb/s (want 4000..8000], 25 GHz at 10 Tb/s {narrow:.4e} b/s (want 4.63e4..4.17e5)",
            first_zero.map_or("none".to_string(), |i| rows[i].bandwidth_gbps.to_string())
        ),
    ))
}

fn raman_geometry() -> anyhow::Result<Outcome> {
    let peak = raman_peak_distance(0.19)?;
    let mut worst: f64 = 0.0;
    for (km, p, k) in [(1.0, 1e-6, 3.0), (22.86, 3.2e-3, 0.1), (50.0, 2.8e-6, 17.0), (101.0, 1e-3, 1e3)] {
        let span = FiberSpan::new(km, 0.19)?;
        let one = forward_raman_power(p, 2e-9, &span, 0.799)?;
        let scaled = forward_raman_power(k * p, 2e-9, &span, 0.799)?;
        worst = worst.max((scaled / (k * one) - 1.0).abs());
    }
    Ok(outcome(
        (peak - 22.86).abs() <= 0.01 && worst <= 4.0 * f64::EPSILON,
        format!("peak {peak:.4} km (want 22.86 +- 0.01), linearity error {worst:.2e} (limit 4 eps)"),
    ))
}

fn montecarlo(two: &LinkScenario, ten: &LinkScenario) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let cases = [
        ("0 km clean", two.clone().with_length(0.0)?.with_bandwidth(0.0)?),
        ("50 km 2 ch", two.clone()),
        ("50 km 10 Tb/s", ten.clone().with_bandwidth(10_000.0)?),
    ];
    let mut worst: f64 = 0.0;
    let mut outliers = Vec::new();
    for (i, (name, s)) in cases.iter().enumerate() {
        let r = run_trial_parallel(&GateModel::from_scenario(s)?, &TrialConfig { num_gates: MC_GATES, seed: 100 + i as u64 })?;
        for row in compare_with_analytic(s, &r)? {
            worst = worst.max(row.z.abs());
            if !row.within(Z_LIMIT) {
                outliers.push(format!("{name}/{} z {:.2}", row.quantity, row.z));
            }
        }
    }
    let model = GateModel::from_scenario(two)?;
    let mut reports = Vec::new();
    for seed in 0..20 {
        let r = run_trial_parallel(&model, &TrialConfig { num_gates: MC_GATES, seed: 1000 + seed })?;
        reports.push(decoy_report(&r, &two.protocol)?);
    }
    let excursions = count_excursions(&reports);
    let raw: usize = reports.iter().map(|r| r.raw_violations()).sum();
    let elapsed = start.elapsed();
    Ok(outcome(
        outliers.is_empty() && excursions <= 1 && elapsed < Duration::from_secs(120),
        format!(
            "max |z| {worst:.2} over 3 scenarios{}, decoy excursions {excursions}/20 (raw bound crossings {raw}), {:.1} s",
            if outliers.is_empty() { String::new() } else { format!(" outliers {outliers:?}") },
            elapsed.as_secs_f64()
        ),
    ))
}

fn keyflow() -> anyhow::Result<Outcome> {
    let a = min_refresh_interval(1.2e6, 1)?;
    let b = min_refresh_interval(1e4, 1)?;
    let c = min_refresh_interval(1.39e5, 100)?;
    let fec = fec_margin(2.2e-3)?;
    Ok(outcome(
        (a - 213.3e-6).abs() <= 0.05e-6 && (b - 25.6e-3).abs() <= 1e-15 && (c - 0.184).abs() <= 0.0005 && fec.pass && (fec.margin - 8.6).abs() <= 0.05,
        format!("{:.2} us, {:.3} ms, {:.4} s, FEC margin {:.2}x", a * 1e6, b * 1e3, c, fec.margin),
    ))
}

/// CLI output file for one invocation.
fn cli(args: &[&str], threads: &str) -> anyhow::Result<Vec<u8>> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("out.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_qkdcoex"))
        .args(["--out", out.to_str().unwrap()])
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .stderr(std::process::Stdio::null())
        .status()?;
    // Calibration exits 2 when the fit misses but still writes its profile.
    anyhow::ensure!(status.code().is_some_and(|c| c == 0 || c == 2), "{args:?}: {status}");
    Ok(std::fs::read(out)?)
}

fn determinism() -> anyhow::Result<Outcome> {
    let two = scenarios().join("two_channel.conf").display().to_string();
    let ten = scenarios().join("ten_laser.conf").display().to_string();
    let anchors = scenarios().join("anchors_100ghz.csv").display().to_string();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--config", &two, "plan"],
        vec!["--config", &ten, "--filter", "25ghz", "plan"],
        vec!["--config", &two, "simulate", "--distance", "75"],
        vec!["--config", &two, "sweep-distance"],
        vec!["--config", &ten, "sweep-bandwidth"],
        vec!["--config", &two, "calibrate", "--anchors", &anchors],
        vec!["--config", &two, "--seed", "3", "montecarlo", "--gates", "3000000"],
        vec!["--config", &two, "keyflow"],
    ];
    let mut differing = Vec::new();
    for args in &cases {
        let runs = [cli(args, "1")?, cli(args, "1")?, cli(args, "4")?];
        if runs[0].is_empty() || runs.iter().any(|r| r != &runs[0]) {
            differing.push(args[2..].join(" "));
        }
    }
    Ok(outcome(
        differing.is_empty(),
        format!("{} invocations x 3 runs (1, 1, 4 threads), differing: {differing:?}", cases.len()),
    ))
}

fn report(id: usize, name: &str, result: anyhow::Result<Outcome>) -> bool {
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e:#}")),
    };
    println!("criterion {id} {name}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    let two = load("two_channel.conf");
    let ten = load("ten_laser.conf");
    let base_rho = two.raman.rho.expect("two_channel.conf sets rho");

    let start = Instant::now();
    let fit = read_anchors(&scenarios().join("anchors_100ghz.csv"))
        .map_err(anyhow::Error::from)
        .and_then(|rows| Ok(run_calibration(&two, &rows)?));
    let elapsed = start.elapsed();

    let mut results = Vec::new();
    match &fit {
        Ok(fit) => {
            let two_fit = fitted(two.clone(), base_rho, fit);
            let ten_fit = fitted(ten.clone(), base_rho, fit);
            results.push(report(1, "calibration fit", Ok(calibration(fit, elapsed))));
            results.push(report(2, "cross-filter prediction", cross_filter(&two_fit)));
            results.push(report(3, "bandwidth sweep", bandwidth_sweep(&ten_fit)));
        }
        Err(e) => {
            for (id, name) in [(1, "calibration fit"), (2, "cross-filter prediction"), (3, "bandwidth sweep")] {
                results.push(report(id, name, Err(anyhow::anyhow!("calibration error: {e:#}"))));
            }
        }
    }
    results.push(report(4, "Raman geometry", raman_geometry()));
    let mc = build_scenario(&two, None)
        .and_then(|s| Ok((s.with_length(50.0)?, build_scenario(&ten, None)?)))
        .map_err(anyhow::Error::from)
        .and_then(|(two, ten)| montecarlo(&two, &ten));
    results.push(report(5, "Monte Carlo oracle", mc));
    results.push(report(6, "keyflow arithmetic", keyflow()));
    results.push(report(7, "determinism", determinism()));

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
