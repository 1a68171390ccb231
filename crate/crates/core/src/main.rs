use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mdmsim::link::{
    calibrate_default, characterize, run_link, sweep_crosstalk, sweep_rate, Component, LinkReport,
    RatePoint, Scenario, XtPoint, DEFAULT_RATE_POINTS,
};
use mdmsim::ofdm::TestVector;
use mdmsim::plot::{line_plot, Series};
use mdmsim::signal::Seed;
use mdmsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mdmsim",
    version,
    about = "Two-mode MDM silicon photonic link simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write report.json plus per-channel CSVs.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also render SVG plots.
        #[arg(long)]
        svg: bool,
    },
    /// Sweep the loaded subcarrier count or the mode crosstalk.
    Sweep {
        kind: SweepKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subcarrier counts or crosstalk values (dB).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        points: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Write component response curves as CSV.
    Characterize {
        which: ComponentArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the calibrated scenario as TOML.
    Calibrated,
    /// Write a reference OFDM frame (config, bits, grid, waveform).
    Testvector {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "1")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Rate,
    Crosstalk,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComponentArg {
    Ring,
    Pd,
    Dac,
    Adc,
    Mux,
}

impl From<ComponentArg> for Component {
    fn from(c: ComponentArg) -> Self {
        match c {
            ComponentArg::Ring => Component::Ring,
            ComponentArg::Pd => Component::Pd,
            ComponentArg::Dac => Component::Dac,
            ComponentArg::Adc => Component::Adc,
            ComponentArg::Mux => Component::Mux,
        }
    }
}

fn load(config: &Option<PathBuf>, seed: Option<u64>) -> Result<Scenario> {
    let mut s = match config {
        Some(p) => Scenario::load(p)?,
        None => calibrate_default(),
    };
    if let Some(seed) = seed {
        s.seed = Seed(seed);
    }
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct SnrRow {
    subcarrier: usize,
    freq_ghz: f64,
    snr_db: f64,
}

fn emit_report(r: &LinkReport, out: &Path, svg: bool) -> Result<()> {
    write(&out.join("report.json"), &r.to_json()?)?;
    let mut series = Vec::new();
    for (m, c) in &r.channels {
        let rows: Vec<SnrRow> = c
            .snr_per_sc_db
            .iter()
            .zip(&c.subcarrier_freq_hz)
            .enumerate()
            .map(|(i, (s, f))| SnrRow {
                subcarrier: i + 1,
                freq_ghz: f * 1e-9,
                snr_db: *s,
            })
            .collect();
        write_csv(&out.join(format!("snr_{}.csv", m.name())), &rows)?;
        series.push(Series {
            name: m.name().into(),
            points: rows.iter().map(|r| (r.freq_ghz, r.snr_db)).collect(),
        });
        println!(
            "{}: {:.2} Gb/s line, BER {:.3e} ({} errors / {} bits{}), EVM {:.2}%, Prx {:.2} dBm",
            m.name(),
            c.line_rate * 1e-9,
            c.ber,
            c.errors,
            c.bits,
            if c.low_confidence {
                ", low confidence"
            } else {
                ""
            },
            c.evm_rms * 100.0,
            c.received_power_dbm
        );
        for f in &c.fec {
            println!(
                "  {}: {} net {:.2} Gb/s",
                f.profile.label(),
                if f.pass { "pass" } else { "fail" },
                f.net_rate * 1e-9
            );
        }
        for n in &c.notes {
            println!("  note: {}", n.note);
        }
    }
    if let Some(x) = &r.crosstalk {
        println!(
            "crosstalk {:.1} dB: analytic penalty {:.3} dB (reference {:.3} dB); {}",
            x.xt_db, x.analytic_penalty_db, x.reference.reported_value, x.label
        );
    }
    if svg {
        write(
            &out.join("snr.svg"),
            &line_plot(
                "Per-subcarrier SNR",
                "frequency (GHz)",
                "SNR (dB)",
                &series,
                false,
            ),
        )?;
    }
    Ok(())
}

/// Writes the rate sweep; returns whether any point failed.
fn emit_rate(points: &[RatePoint], out: &Path, svg: bool) -> Result<bool> {
    write_csv(&out.join("sweep_rate.csv"), points)?;
    write(
        &out.join("sweep_rate.json"),
        &serde_json::to_string_pretty(points).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    for p in points {
        match (p.ber, &p.failure) {
            (Some(b), _) => println!(
                "{} {:>3} sc {:7.2} Gb/s  BER {:.3e}",
                p.mode.name(),
                p.n_data_sc,
                p.line_rate * 1e-9,
                b
            ),
            (None, Some(f)) => println!(
                "{} {:>3} sc {:7.2} Gb/s  failed: {f}",
                p.mode.name(),
                p.n_data_sc,
                p.line_rate * 1e-9
            ),
            _ => {}
        }
    }
    if svg {
        let mut series: Vec<Series> = Vec::new();
        for p in points {
            let name = p.mode.name();
            let idx = match series.iter().position(|s| s.name == name) {
                Some(i) => i,
                None => {
                    series.push(Series {
                        name: name.into(),
                        points: vec![],
                    });
                    series.len() - 1
                }
            };
            if let Some(b) = p.ber {
                series[idx].points.push((p.line_rate * 1e-9, b));
            }
        }
        write(
            &out.join("sweep_rate.svg"),
            &line_plot("BER vs line rate", "line rate (Gb/s)", "BER", &series, true),
        )?;
    }
    Ok(points.iter().any(|p| p.failure.is_some()))
}

fn emit_xt(points: &[XtPoint], out: &Path) -> Result<()> {
    write(
        &out.join("sweep_crosstalk.json"),
        &serde_json::to_string_pretty(points).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    let mut w = csv::Writer::from_path(out.join("sweep_crosstalk.csv"))?;
    w.write_record([
        "xt_db",
        "measured_penalty_db",
        "analytic_penalty_db",
        "montecarlo_penalty_db",
        "effective_xt_db",
        "baseline_ber",
    ])?;
    for p in points {
        let mc = p
            .montecarlo_penalty_db
            .map(|v| v.to_string())
            .unwrap_or_default();
        w.write_record([
            p.xt_db.to_string(),
            p.measured_penalty_db.to_string(),
            p.analytic_penalty_db.to_string(),
            mc,
            p.effective_xt_db.to_string(),
            p.baseline_ber.to_string(),
        ])?;
        println!(
            "xt {:6.1} dB: measured {:.3} dB, analytic {:.3} dB, monte-carlo {} (effective xt {:.1} dB)",
            p.xt_db,
            p.measured_penalty_db,
            p.analytic_penalty_db,
            p.montecarlo_penalty_db.map(|v| format!("{v:.3} dB")).unwrap_or_else(|| "n/a".into()),
            p.effective_xt_db
        );
    }
    w.flush()?;
    Ok(())
}

/// Returns true when the command completed but some sweep point failed.
fn execute(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run {
            config,
            seed,
            out,
            svg,
        } => {
            let s = load(&config, seed)?;
            emit_report(&run_link(&s)?, &out, svg)?;
            Ok(false)
        }
        Cmd::Sweep {
            kind,
            config,
            points,
            seed,
            out,
            svg,
        } => {
            let s = load(&config, seed)?;
            std::fs::create_dir_all(&out)?;
            match kind {
                SweepKind::Rate => {
                    let counts: Vec<usize> = if points.is_empty() {
                        DEFAULT_RATE_POINTS.to_vec()
                    } else {
                        points
                            .iter()
                            .map(|&p| {
                                if p >= 1.0 && p.fract() == 0.0 {
                                    Ok(p as usize)
                                } else {
                                    Err(Error::Config(format!(
                                        "subcarrier count {p} is not a positive integer"
                                    )))
                                }
                            })
                            .collect::<Result<_>>()?
                    };
                    emit_rate(&sweep_rate(&s, &counts)?, &out, svg)
                }
                SweepKind::Crosstalk => {
                    if points.is_empty() {
                        return Err(Error::Config(
                            "--points is required for a crosstalk sweep".into(),
                        ));
                    }
                    emit_xt(&sweep_crosstalk(&s, &points)?, &out)?;
                    Ok(false)
                }
            }
        }
        Cmd::Characterize { which, config, out } => {
            let s = load(&config, None)?;
            for f in characterize(&s, which.into(), &out)? {
                println!("{}", f.display());
            }
            Ok(false)
        }
        Cmd::Calibrated => {
            print!("{}", calibrate_default().to_toml()?);
            Ok(false)
        }
        Cmd::Testvector { config, seed, out } => {
            let s = load(&config, None)?;
            TestVector::generate(&s.ofdm, Seed(seed))?.write(&out)?;
            println!("{}", out.display());
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("MDMSIM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: MDMSIM_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = Cli::parse();
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: some sweep points failed; see the failure column");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_link_failure() { 2 } else { 1 })
        }
    }
}
