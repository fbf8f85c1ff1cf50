use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qkdcoex::config::ScenarioConfig;
use qkdcoex::io;
use qkdcoex::run::{build_scenario, run_calibration, run_trial_parallel, sweep_bandwidth, sweep_distance};
use qkdcoex_core::channel_plan::FilterChoice;
use qkdcoex_core::keyflow::{fec_margin, min_refresh_interval, simulate_buffer, EncryptorFleet, KeyBuffer};
use qkdcoex_core::montecarlo::{compare_with_analytic, decoy_report, GateModel, TrialConfig, Z_LIMIT};
use qkdcoex_core::qkd::{secure_rate, RatePoint};

#[derive(Parser)]
#[command(name = "qkdcoex", version, about = "QKD and DWDM data coexistence planner")]
struct Cli {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Receive filter override: 100ghz or 25ghz.
    #[arg(long, global = true)]
    filter: Option<FilterChoice>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel plan table.
    Plan,
    /// One operating point.
    Simulate {
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Secure rate against fibre length.
    SweepDistance,
    /// Secure rate against data bandwidth at a fixed length.
    SweepBandwidth {
        #[arg(long)]
        distance: Option<f64>,
    },
    /// Fit the Raman scale and optical error to observed rates.
    Calibrate {
        /// CSV with distance_km,filter,bandwidth_gbps,observed_secure_bps.
        #[arg(long)]
        anchors: PathBuf,
    },
    /// Gate-level simulation compared with the analytic model.
    Montecarlo {
        #[arg(long)]
        gates: Option<u64>,
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Key buffer simulation for the encryptor fleet.
    Keyflow {
        /// Key fill rate in bit/s; the modelled secure rate when omitted.
        #[arg(long)]
        fill_rate: Option<f64>,
    },
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn warn_cap(rows: &[RatePoint]) {
    for r in rows.iter().filter(|r| r.exceeds_launch_cap) {
        eprintln!(
            "warning: {} Gb/s launches {:.2} dBm, above the launch cap",
            r.bandwidth_gbps,
            r.launch_total_dbm.unwrap_or(f64::NAN)
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = load_config(cli.config.as_ref())?;
    let out = || io::open_output(cli.out.as_deref());
    let filter = cli.filter;

    match cli.command {
        Command::Plan => {
            let plan = qkdcoex_core::channel_plan::build_plan(&config.plan_config(filter))?;
            io::write_plan(out()?, &plan)?;
        }
        Command::Simulate { distance, bandwidth } => {
            let mut s = build_scenario(&config, filter)?;
            if let Some(km) = distance {
                s = s.with_length(km)?;
            }
            if let Some(b) = bandwidth {
                s = s.with_bandwidth(b)?;
            }
            let rows = [secure_rate(&s)?];
            warn_cap(&rows);
            io::write_results(out()?, &rows)?;
        }
        Command::SweepDistance => {
            let s = build_scenario(&config, filter)?;
            let rows = sweep_distance(&s, &config.sweep.distance_km)?;
            warn_cap(&rows);
            io::write_results(out()?, &rows)?;
        }
        Command::SweepBandwidth { distance } => {
            if let Some(km) = distance {
                config.length_km = km;
            }
            let s = build_scenario(&config, filter)?;
            let rows = sweep_bandwidth(&s, &config.sweep.bandwidth_gbps)?;
            warn_cap(&rows);
            io::write_results(out()?, &rows)?;
        }
        Command::Calibrate { anchors } => {
            let rows = io::read_anchors(&anchors)?;
            let outcome = run_calibration(&config, &rows)?;
            eprint!("{}", io::format_fit(&outcome.fit, &rows));
            io::write_profile(out()?, &outcome.profile)?;
            if !outcome.passed {
                eprintln!("error: fit residual exceeds threshold; profile written for inspection");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Montecarlo { gates, distance, bandwidth } => {
            let mut s = build_scenario(&config, filter)?;
            if let Some(km) = distance {
                s = s.with_length(km)?;
            }
            if let Some(b) = bandwidth {
                s = s.with_bandwidth(b)?;
            }
            let trial = TrialConfig {
                num_gates: gates.unwrap_or(config.montecarlo.gates),
                seed: cli.seed,
            };
            let model = GateModel::from_scenario(&s)?;
            let result = run_trial_parallel(&model, &trial)?;
            let rows = compare_with_analytic(&s, &result)?;
            let decoy = decoy_report(&result, &s.protocol).ok();
            io::write_comparison(out()?, &rows, decoy.as_ref())?;
            let outliers = rows.iter().filter(|r| !r.within(Z_LIMIT)).count();
            if outliers > 0 || decoy.is_some_and(|d| !d.holds()) {
                eprintln!("warning: {outliers} quantity(ies) beyond {Z_LIMIT} sigma or decoy bound excursion");
            }
        }
        Command::Keyflow { fill_rate } => {
            let k = &config.keyflow;
            let rate = match fill_rate.or(k.fill_rate_bps) {
                Some(r) => r,
                None => secure_rate(&build_scenario(&config, filter)?)?.secure_rate,
            };
            let buffer = KeyBuffer {
                level: k.initial_level_bits,
                fill_rate: rate,
                capacity: k.capacity_bits,
            };
            let fleet = EncryptorFleet::new(k.cards)?;
            let report = simulate_buffer(&buffer, &fleet, k.duration_s, k.policy_interval_s, true)?;
            io::write_trace(out()?, &report.trace)?;
            match min_refresh_interval(rate, k.cards) {
                Ok(t) => eprintln!("fill {rate} bit/s, minimum refresh interval {t} s for {} cards", k.cards),
                Err(e) => eprintln!("fill {rate} bit/s: {e}"),
            }
            eprintln!(
                "{} pushes, {} refreshes, {} stalls (first at {}), {} bits discarded",
                report.pushes,
                report.refreshes,
                report.stalls,
                report.first_stall_s.map_or_else(|| "never".to_string(), |t| format!("{t} s")),
                report.discarded_bits
            );
            let fec = fec_margin(k.pre_fec_ber)?;
            eprintln!(
                "pre-FEC BER {}: {} (margin {:.2}x)",
                k.pre_fec_ber,
                if fec.pass { "pass" } else { "fail" },
                fec.margin
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}


#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;

    fn scenario(name: &str) -> String {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).display().to_string()
    }

    /// Runs the CLI with `--out` pointed at a fresh file; returns status and file text.
    fn invoke(args: &[&str]) -> (anyhow::Result<ExitCode>, String) {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.csv");
        let mut argv = vec!["qkdcoex", "--out", out.to_str().unwrap()];
        argv.extend_from_slice(args);
        let status = run(Cli::parse_from(argv));
        (status, std::fs::read_to_string(&out).unwrap_or_default())
    }

    fn ok(args: &[&str]) -> String {
        let (status, text) = invoke(args);
        assert_eq!(status.unwrap(), ExitCode::SUCCESS, "{args:?}");
        text
    }

    #[test]
    fn every_subcommand_is_repeatable() {
        let two = scenario("two_channel.conf");
        let cases: [&[&str]; 7] = [
            &["plan"],
            &["--config", &two, "simulate", "--distance", "80"],
            &["--config", &two, "sweep-distance"],
            &["--config", &two, "--filter", "25ghz", "sweep-bandwidth", "--distance", "60"],
            &["--config", &two, "--seed", "7", "montecarlo", "--gates", "200000"],
            &["--config", &two, "keyflow", "--fill-rate", "1.2e6"],
            &["--config", &two, "keyflow"],
        ];
        for args in cases {
            let first = ok(args);
            assert!(!first.is_empty(), "{args:?}");
            assert_eq!(first, ok(args), "{args:?}");
        }
    }

    #[test]
    fn distance_sweep_covers_both_ends() {
        let text = ok(&["--config", &scenario("two_channel.conf"), "sweep-distance"]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(io::RESULTS_HEADER.join(",").as_str()));
        assert_eq!(lines.count(), 23);
    }

    #[test]
    fn single_point_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("point.conf");
        std::fs::write(&conf, "[raman]\nrho = 2e-9\n\n[sweep]\ndistance_start = 40km\ndistance_stop = 40km\ndistance_step = 5km\n").unwrap();
        let text = ok(&["--config", conf.to_str().unwrap(), "sweep-distance"]);
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn empty_anchor_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let anchors = dir.path().join("anchors.csv");
        std::fs::write(&anchors, "distance_km,filter,bandwidth_gbps,observed_secure_bps\n").unwrap();
        let (status, _) = invoke(&["calibrate", "--anchors", anchors.to_str().unwrap()]);
        assert!(status.is_err());
    }

    #[test]
    fn failed_fit_still_writes_profile() {
        let (status, text) = invoke(&[
            "--config",
            &scenario("two_channel.conf"),
            "calibrate",
            "--anchors",
            &scenario("anchors_100ghz.csv"),
        ]);
        assert_eq!(status.unwrap(), ExitCode::from(2));
        assert!(text.starts_with("parameter,pump_nm,value"), "{text}");
        assert!(text.lines().any(|l| l.starts_with("rho,")));
    }

    #[test]
    fn missing_config_is_an_error() {
        let (status, _) = invoke(&["--config", "/nonexistent/x.conf", "plan"]);
        assert!(status.is_err());
    }
}
