//! CLI for the verification lab. Subcommands mirror the experiment
//! sweeps; exit status is nonzero whenever an invoked suite's assertions
//! fail, so the binary can gate CI runs.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dlparity::experiments::csv::{write_csv, Cell};
use dlparity::experiments::sweeps::{
    run_all_bits, run_cov, run_spectral, run_thm1, run_train,
};
use dlparity::experiments::verify::run_verify;
use dlparity::experiments::{ExperimentId, SweepConfig, SweepConfigPatch};

#[derive(Parser)]
#[command(
    name = "dlparity",
    about = "Verification lab for gradient-based learning of the additive dlog parity bit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SharedFlags {
    /// Lower end of the prime range.
    #[arg(long)]
    pmin: Option<u64>,
    /// Upper end of the prime range.
    #[arg(long)]
    pmax: Option<u64>,
    /// Comma-separated bitlengths for the training sweeps.
    #[arg(long, value_delimiter = ',')]
    bitlengths: Option<Vec<u32>>,
    /// Comma-separated initialization seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Hidden layer widths, e.g. --width 100,100.
    #[arg(long = "width", value_delimiter = ',')]
    width: Option<Vec<usize>>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Dataset size m for the training sweeps.
    #[arg(long)]
    samples: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Output directory for CSV/SVG/JSON results.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Largest p stored as a dense matrix; larger primes go matrix-free.
    #[arg(long = "dense-limit")]
    dense_limit: Option<u64>,
    /// JSON file whose present fields override the flags.
    #[arg(long = "config")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact-identity verification suite across a prime range.
    Verify(SharedFlags),
    /// Gradient-concentration sweep: E[(v/g) sqrt(p)] against p.
    Thm1(SharedFlags),
    /// Train parity-bit networks across bitlengths.
    Train(SharedFlags),
    /// Exact mean-squared dlog covariance and its growth fit.
    Cov(SharedFlags),
    /// Train all-bits networks and record per-bit accuracies.
    AllBits(SharedFlags),
    /// Spectral-norm and harmonic-sum sweep.
    Spectral(SharedFlags),
}

impl Command {
    fn experiment(&self) -> ExperimentId {
        match self {
            Command::Verify(_) => ExperimentId::Verify,
            Command::Thm1(_) => ExperimentId::Thm1,
            Command::Train(_) => ExperimentId::Train,
            Command::Cov(_) => ExperimentId::Cov,
            Command::AllBits(_) => ExperimentId::AllBits,
            Command::Spectral(_) => ExperimentId::Spectral,
        }
    }

    fn flags(&self) -> &SharedFlags {
        match self {
            Command::Verify(f)
            | Command::Thm1(f)
            | Command::Train(f)
            | Command::Cov(f)
            | Command::AllBits(f)
            | Command::Spectral(f) => f,
        }
    }
}

fn build_config(cmd: &Command) -> Result<SweepConfig> {
    let flags = cmd.flags();
    let mut cfg = SweepConfig::default_for(cmd.experiment());
    if let Some(v) = flags.pmin {
        cfg.pmin = v;
    }
    if let Some(v) = flags.pmax {
        cfg.pmax = v;
    }
    if let Some(v) = &flags.bitlengths {
        cfg.bitlengths = v.clone();
    }
    if let Some(v) = &flags.seeds {
        cfg.seeds = v.clone();
    }
    if let Some(v) = &flags.width {
        cfg.hidden = v.clone();
    }
    if let Some(v) = flags.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = flags.batch {
        cfg.batch = v;
    }
    if let Some(v) = flags.samples {
        cfg.samples = v;
    }
    if let Some(v) = flags.lr {
        cfg.lr = v;
    }
    if let Some(v) = &flags.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = flags.dense_limit {
        cfg.dense_limit = v;
    }
    // the JSON config file, when given, overrides the flags
    if let Some(path) = &flags.config {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let patch: SweepConfigPatch =
            serde_json::from_str(&body).context("parsing config JSON")?;
        cfg.apply_patch(patch);
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Assertion {
    name: String,
    passed: bool,
    detail: String,
}

fn report(assertions: &[Assertion]) -> bool {
    let mut all = true;
    for a in assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        println!("{mark} {} — {}", a.name, a.detail);
        all &= a.passed;
    }
    all
}

fn run(cmd: &Command, cfg: &SweepConfig) -> Result<bool> {
    match cmd {
        Command::Verify(_) => {
            let rep = run_verify(cfg)?;
            print!("{}", rep.render());
            // persist the per-prime orthogonality statistics the suite
            // computed along the way
            std::fs::create_dir_all(&cfg.out_dir)?;
            let rows: Vec<Vec<Cell>> = rep
                .orthogonality
                .iter()
                .map(|r| {
                    vec![
                        Cell::UInt(r.p),
                        Cell::Float(r.var_f),
                        Cell::Float(r.var_scaled),
                        Cell::Float(r.sum_sq_offdiag),
                        Cell::Float(r.offdiag_ratio),
                    ]
                })
                .collect();
            let csv = cfg.out_dir.join("verify_orthogonality.csv");
            write_csv(
                &csv,
                &["p", "var_f", "var_scaled", "sum_sq_offdiag", "offdiag_ratio"],
                &rows,
            )?;
            let ok = rep.all_passed();
            println!(
                "{} checks, {} failures; wrote {}",
                rep.checks.len(),
                rep.failures().len(),
                csv.display()
            );
            Ok(ok)
        }
        Command::Thm1(_) => {
            let res = run_thm1(cfg)?;
            let first = res.rows.first().map(|r| r.mean_ratio).unwrap_or(0.0);
            let max = res
                .rows
                .iter()
                .map(|r| r.mean_ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = report(&[
                Assertion {
                    name: "curve-bounded".into(),
                    passed: max <= first * 1.5,
                    detail: format!("max {max:.4} vs first {first:.4}"),
                },
                Assertion {
                    name: "curve-slope-nonpositive".into(),
                    passed: res.slope <= 0.0,
                    detail: format!("slope {:+.3e}", res.slope),
                },
            ]);
            println!("wrote {}", res.csv_path.display());
            Ok(ok)
        }
        Command::Train(_) => {
            let res = run_train(cfg)?;
            let mut assertions = Vec::new();
            for w in res.mean_final_acc.windows(2) {
                assertions.push(Assertion {
                    name: format!("acc-nonincreasing-n{}-to-n{}", w[0].0, w[1].0),
                    passed: w[1].1 <= w[0].1 + 0.05,
                    detail: format!("{:.3} -> {:.3}", w[0].1, w[1].1),
                });
            }
            if let Some(&(bits, acc)) = res
                .mean_final_acc
                .iter()
                .find(|(b, _)| *b >= 24)
            {
                assertions.push(Assertion {
                    name: format!("chance-level-n{bits}"),
                    passed: (0.45..=0.55).contains(&acc),
                    detail: format!("final accuracy {acc:.3}"),
                });
            }
            let ok = report(&assertions);
            println!("wrote {}", res.svg_path.display());
            Ok(ok)
        }
        Command::Cov(_) => {
            let res = run_cov(cfg)?;
            let ok = report(&[Assertion {
                name: "growth-exponent".into(),
                passed: (2.8..=3.2).contains(&res.fit.alpha),
                detail: format!(
                    "fit c={:.4e}, alpha={:.3}, beta={:.3}",
                    res.fit.c, res.fit.alpha, res.fit.beta
                ),
            }]);
            println!("wrote {}", res.csv_path.display());
            Ok(ok)
        }
        Command::AllBits(_) => {
            let res = run_all_bits(cfg)?;
            let mut assertions = Vec::new();
            for row in &res.rows {
                let mean: f64 =
                    row.final_per_bit.iter().sum::<f64>() / row.final_per_bit.len() as f64;
                let lsb = row.final_per_bit.first().copied().unwrap_or(f64::NAN);
                let detail = format!("mean {mean:.3}, lsb {lsb:.3}");
                if row.bits >= 20 {
                    assertions.push(Assertion {
                        name: format!("lsb-chance-level-n{}-seed{}", row.bits, row.seed),
                        passed: (0.45..=0.55).contains(&lsb),
                        detail,
                    });
                } else {
                    assertions.push(Assertion {
                        name: format!("memorization-n{}-seed{}", row.bits, row.seed),
                        passed: mean > 0.6,
                        detail,
                    });
                }
            }
            let ok = report(&assertions);
            for p in &res.svg_paths {
                println!("wrote {}", p.display());
            }
            Ok(ok)
        }
        Command::Spectral(_) => {
            let res = run_spectral(cfg)?;
            let first = res.rows.first().map(|r| r.sigma_ratio).unwrap_or(0.0);
            let max = res
                .rows
                .iter()
                .map(|r| r.sigma_ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = report(&[
                Assertion {
                    name: "sigma-ratio-bounded".into(),
                    passed: max <= first * 1.5,
                    detail: format!("max {max:.4} vs first {first:.4}"),
                },
                Assertion {
                    name: "sigma-ratio-slope-nonpositive".into(),
                    passed: res.sigma_slope <= 0.0,
                    detail: format!("slope {:+.3e}", res.sigma_slope),
                },
                Assertion {
                    name: "harmonic-ratio-slope-nonpositive".into(),
                    passed: res.harmonic_slope <= 0.0,
                    detail: format!("slope {:+.3e}", res.harmonic_slope),
                },
            ]);
            println!("wrote {}", res.csv_path.display());
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
