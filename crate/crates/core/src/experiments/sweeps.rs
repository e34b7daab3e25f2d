//! The four experiment sweeps behind the CLI: gradient concentration,
//! parity training, dlog covariance growth, and all-bits training, plus
//! the spectral-norm sweep. Each runner writes CSV results (deterministic
//! bytes), an SVG plot, and a JSON sidecar with config echo and timings.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::csv::{write_csv, Cell};
use crate::experiments::fit::{linear_fit, power_law_fit, power_law_fit_raw, PowerLawFit};
use crate::experiments::svg::{render_svg, PlotConfig, Series};
use crate::experiments::{write_sidecar, ExperimentRecord, SweepConfig};
use crate::neural::adam::AdamHyper;
use crate::neural::exact::{gradient_variance, GradientVariance};
use crate::neural::train::{train, TargetKind, TrainConfig, TrainHistory};
use crate::neural::{init_params, LossKind, MlpArchitecture};
use crate::orthogonality::ExactRatio;
use crate::seeds::child_seed;
use crate::spectral::fourier::harmonic_sum;
use crate::spectral::{phi_spectral_norm, PhiVariant};
use crate::zp::{primes_in_range, sample_prime_in_bitlength, GroupSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Seed streams, so the same master seed never feeds two different choices.
mod stream {
    pub const INIT: u64 = 3;
    pub const PRIME: u64 = 4;
    pub const BASE: u64 = 5;
    pub const TRAIN: u64 = 6;
    pub const POWER: u64 = 7;
}

// ---------------------------------------------------------------------
// gradient concentration (thm1)
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Thm1Row {
    pub p: u64,
    pub mean_ratio: f64,
    pub std_ratio: f64,
}

#[derive(Debug)]
pub struct Thm1Result {
    pub rows: Vec<Thm1Row>,
    /// OLS slope of mean_ratio against p.
    pub slope: f64,
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub records: Vec<ExperimentRecord>,
}

/// Computes v, g for one (prime, seed) pair at the configured width.
pub fn concentration_point(
    group: GroupSpec,
    hidden: &[usize],
    seed: u64,
    loss: LossKind,
) -> Result<GradientVariance> {
    let n = group.bitlength() as usize;
    let arch = MlpArchitecture::new(n, hidden.to_vec(), 1)?;
    let params = init_params(&arch, child_seed(seed, stream::INIT, group.p()));
    gradient_variance(&params, &arch, group, loss)
}

/// Sweeps E_i[(v/g) sqrt(p)] over the prime range, averaging the
/// configured seeds per prime; cross-entropy loss, matching the paper's
/// experiment.
pub fn run_thm1(cfg: &SweepConfig) -> Result<Thm1Result> {
    cfg.validate()?;
    cfg.ensure_out_dir()?;
    let primes = primes_in_range(cfg.pmin, cfg.pmax);
    if primes.is_empty() {
        return Err(Error::Config(format!(
            "no primes in [{}, {}]",
            cfg.pmin, cfg.pmax
        )));
    }
    let tasks: Vec<(u64, u64)> = primes
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut points: Vec<(u64, u64, GradientVariance, f64)> = tasks
        .par_iter()
        .map(|&(p, seed)| {
            let start = Instant::now();
            let group = GroupSpec::new(p)?;
            let gv = concentration_point(group, &cfg.hidden, seed, LossKind::BinaryCrossEntropy)?;
            Ok((p, seed, gv, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|&(p, s, _, _)| (p, s));

    let mut records = Vec::with_capacity(points.len());
    let mut rows = Vec::with_capacity(primes.len());
    for &p in &primes {
        let ratios: Vec<f64> = points
            .iter()
            .filter(|&&(q, _, _, _)| q == p)
            .map(|&(_, _, gv, _)| gv.ratio_scaled)
            .collect();
        let n = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        rows.push(Thm1Row {
            p,
            mean_ratio: mean,
            std_ratio: var.sqrt(),
        });
    }
    for (p, seed, gv, wall) in &points {
        records.push(ExperimentRecord {
            experiment: cfg.experiment,
            p: *p,
            bits: 0,
            seed: *seed,
            stats: vec![
                ("v".into(), gv.v),
                ("g".into(), gv.g),
                ("ratio_scaled".into(), gv.ratio_scaled),
            ],
            wall_time_s: *wall,
        });
    }

    let csv_path = cfg.out_dir.join("thm1.csv");
    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.p),
                Cell::Float(r.mean_ratio),
                Cell::Float(r.std_ratio),
            ]
        })
        .collect();
    write_csv(&csv_path, &["p", "mean_ratio", "std_ratio"], &csv_rows)?;

    let svg_path = cfg.out_dir.join("thm1.svg");
    render_svg(
        &[Series {
            label: "mean (v/g) sqrt(p)".into(),
            points: rows.iter().map(|r| (r.p as f64, r.mean_ratio)).collect(),
        }],
        &PlotConfig::new("gradient concentration", "p", "(v/g) sqrt(p)"),
        &svg_path,
    )?;
    write_sidecar(cfg, &records)?;

    let slope = if rows.len() >= 2 {
        linear_fit(
            &rows
                .iter()
                .map(|r| (r.p as f64, r.mean_ratio))
                .collect::<Vec<_>>(),
        )?
        .slope
    } else {
        0.0
    };
    Ok(Thm1Result {
        rows,
        slope,
        csv_path,
        svg_path,
        records,
    })
}

// ---------------------------------------------------------------------
// parity training across bitlengths (train)
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrainRunRow {
    pub bits: u32,
    pub p: u64,
    pub seed: u64,
    pub final_test_acc: f64,
    pub history_csv: PathBuf,
}

#[derive(Debug)]
pub struct TrainResult {
    pub rows: Vec<TrainRunRow>,
    /// (bits, mean final test accuracy over seeds), ascending bits.
    pub mean_final_acc: Vec<(u32, f64)>,
    pub svg_path: PathBuf,
    pub records: Vec<ExperimentRecord>,
}

fn train_one(
    cfg: &SweepConfig,
    bits: u32,
    seed: u64,
    targets: TargetKind,
) -> Result<(u64, TrainHistory)> {
    // one prime per bitlength, shared across seeds (seeded by the sweep's
    // first seed so partial reruns pick the same group)
    let group = sample_prime_in_bitlength(bits, child_seed(cfg.seeds[0], stream::PRIME, bits as u64))?;
    let p = group.p();
    let mut base_rng = ChaCha12Rng::seed_from_u64(child_seed(seed, stream::BASE, p));
    let base = base_rng.gen_range(1..p);
    let n = bits as usize;
    let out_w = match targets {
        TargetKind::Parity => 1,
        TargetKind::AllBits => n,
    };
    let arch = MlpArchitecture::new(n, cfg.hidden.clone(), out_w)?;
    let tc = TrainConfig {
        dataset_size: cfg.samples,
        train_fraction: 0.7,
        batch: cfg.batch,
        epochs: cfg.epochs,
        hyper: AdamHyper {
            lr: cfg.lr,
            ..AdamHyper::default()
        },
        seed: child_seed(seed, stream::TRAIN, p),
        targets,
    };
    Ok((p, train(&arch, group, base, &tc)?))
}

fn history_csv(path: &std::path::Path, hist: &TrainHistory) -> Result<()> {
    let rows: Vec<Vec<Cell>> = hist
        .stats
        .iter()
        .map(|s| {
            vec![
                Cell::UInt(s.epoch as u64),
                Cell::Float(s.train_loss),
                Cell::Float(s.test_loss),
                Cell::Float(s.train_acc),
                Cell::Float(s.test_acc),
            ]
        })
        .collect();
    write_csv(
        path,
        &["epoch", "train_loss", "test_loss", "train_acc", "test_acc"],
        &rows,
    )
}

pub fn run_train(cfg: &SweepConfig) -> Result<TrainResult> {
    cfg.validate()?;
    cfg.ensure_out_dir()?;
    let tasks: Vec<(u32, u64)> = cfg
        .bitlengths
        .iter()
        .flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let mut runs: Vec<(u32, u64, u64, TrainHistory, f64)> = tasks
        .par_iter()
        .map(|&(bits, seed)| {
            let start = Instant::now();
            let (p, hist) = train_one(cfg, bits, seed, TargetKind::Parity)?;
            Ok((bits, seed, p, hist, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|&(b, s, _, _, _)| (b, s));

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut series = Vec::new();
    for (bits, seed, p, hist, wall) in &runs {
        let path = cfg.out_dir.join(format!("train_n{bits}_seed{seed}.csv"));
        history_csv(&path, hist)?;
        let final_acc = hist.final_test_accuracy();
        rows.push(TrainRunRow {
            bits: *bits,
            p: *p,
            seed: *seed,
            final_test_acc: final_acc,
            history_csv: path,
        });
        records.push(ExperimentRecord {
            experiment: cfg.experiment,
            p: *p,
            bits: *bits,
            seed: *seed,
            stats: vec![("final_test_acc".into(), final_acc)],
            wall_time_s: *wall,
        });
        series.push(Series {
            label: format!("n={bits} seed={seed}"),
            points: hist
                .stats
                .iter()
                .map(|s| (s.epoch as f64, s.test_acc))
                .collect(),
        });
    }
    let summary: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::UInt(r.bits as u64),
                Cell::UInt(r.p),
                Cell::UInt(r.seed),
                Cell::Float(r.final_test_acc),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("train_summary.csv"),
        &["bits", "p", "seed", "final_test_acc"],
        &summary,
    )?;
    let svg_path = cfg.out_dir.join("train.svg");
    render_svg(
        &series,
        &PlotConfig::new("parity-bit training", "epoch", "test accuracy"),
        &svg_path,
    )?;
    write_sidecar(cfg, &records)?;

    let mut mean_final_acc = Vec::new();
    let mut bits_sorted = cfg.bitlengths.clone();
    bits_sorted.sort_unstable();
    for &b in &bits_sorted {
        let accs: Vec<f64> = rows
            .iter()
            .filter(|r| r.bits == b)
            .map(|r| r.final_test_acc)
            .collect();
        mean_final_acc.push((b, accs.iter().sum::<f64>() / accs.len() as f64));
    }
    Ok(TrainResult {
        rows,
        mean_final_acc,
        svg_path,
        records,
    })
}

// ---------------------------------------------------------------------
// dlog covariance growth (cov)
// ---------------------------------------------------------------------

/// Cap for the O(p^3) exact covariance enumeration.
pub const COV_LIMIT: u64 = 1024;

/// Exact mean squared covariance E_{A,B}(Cov_X[log_A X, log_B X])^2 as an
/// integer-backed rational; A and B independent uniform on Z_p^*.
pub fn mean_squared_covariance(group: GroupSpec) -> Result<ExactRatio> {
    let p = group.p();
    if p > COV_LIMIT {
        return Err(Error::Capacity { p, limit: COV_LIMIT });
    }
    let m = (p - 1) as usize;
    // dlog rows: row a holds log_a x for x = 1..p-1
    let mut rows = vec![0u32; m * m];
    for a in 1..p {
        let inv = group.mod_inverse(a)?;
        let row = &mut rows[(a - 1) as usize * m..(a as usize) * m];
        let mut k = 0u64;
        for slot in row.iter_mut() {
            k += inv;
            if k >= p {
                k -= p;
            }
            *slot = k as u32;
        }
    }
    // Cov = S_ab/(p-1) - (p/2)^2 = (4 S_ab - p^2 (p-1)) / (4 (p-1))
    let shift = (p as i128) * (p as i128) * ((p - 1) as i128);
    let mut total: i128 = 0;
    for a in 0..m {
        let ra = &rows[a * m..(a + 1) * m];
        for b in a..m {
            let rb = &rows[b * m..(b + 1) * m];
            let s: u64 = ra
                .iter()
                .zip(rb)
                .map(|(&x, &y)| x as u64 * y as u64)
                .sum();
            let num4 = 4 * s as i128 - shift;
            let sq = num4 * num4;
            total += if a == b { sq } else { 2 * sq };
        }
    }
    let mm = (p - 1) as i128;
    Ok(ExactRatio::new(total, 16 * mm * mm * mm * mm))
}

/// Checks Var_X[log_a X] = p^2/12 - p/6 exactly for one base:
/// 12 [ (p-1) sum l^2 - (sum l)^2 ] = (p^2 - 2p)(p-1)^2 in integers.
pub fn dlog_variance_identity(group: GroupSpec, base: u64) -> Result<bool> {
    let (s1, s2) = crate::orthogonality::dlog_moments(group, base)?;
    let m = group.unit_count() as i128;
    let p = group.p() as i128;
    Ok(12 * (m * s2 - s1 * s1) == (p * p - 2 * p) * m * m)
}

#[derive(Debug, Clone)]
pub struct CovRow {
    pub p: u64,
    pub mscov: f64,
}

#[derive(Debug)]
pub struct CovResult {
    pub rows: Vec<CovRow>,
    pub fit: PowerLawFit,
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub records: Vec<ExperimentRecord>,
}

pub fn run_cov(cfg: &SweepConfig) -> Result<CovResult> {
    cfg.validate()?;
    cfg.ensure_out_dir()?;
    let primes = primes_in_range(cfg.pmin, cfg.pmax);
    if primes.is_empty() {
        return Err(Error::Config(format!(
            "no primes in [{}, {}]",
            cfg.pmin, cfg.pmax
        )));
    }
    let mut rows: Vec<(u64, f64, f64)> = primes
        .par_iter()
        .map(|&p| {
            let start = Instant::now();
            let group = GroupSpec::new(p)?;
            let mscov = mean_squared_covariance(group)?.as_f64();
            Ok((p, mscov, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|&(p, _, _)| p);

    let points: Vec<(f64, f64)> = rows.iter().map(|&(p, v, _)| (p as f64, v)).collect();
    // raw-scale least squares recovers the asymptotic exponent; the
    // log-space OLS is reported alongside for reference (its collinear
    // regressors trade growth into the (ln p)^beta factor)
    let fit = power_law_fit_raw(&points)?;
    let fit_log = power_law_fit(&points)?;

    let csv_path = cfg.out_dir.join("cov.csv");
    write_csv(
        &csv_path,
        &["p", "mscov"],
        &rows
            .iter()
            .map(|&(p, v, _)| vec![Cell::UInt(p), Cell::Float(v)])
            .collect::<Vec<_>>(),
    )?;
    let fit_json = serde_json::json!({
        "model": "c * p^alpha * (ln p)^beta",
        "c": fit.c,
        "alpha": fit.alpha,
        "beta": fit.beta,
        "log_space_ols": {
            "c": fit_log.c,
            "alpha": fit_log.alpha,
            "beta": fit_log.beta,
        },
    });
    std::fs::write(
        cfg.out_dir.join("cov_fit.json"),
        serde_json::to_string_pretty(&fit_json).expect("static json"),
    )?;

    let svg_path = cfg.out_dir.join("cov.svg");
    render_svg(
        &[
            Series {
                label: "measured".into(),
                points: rows.iter().map(|&(p, v, _)| (p as f64, v)).collect(),
            },
            Series {
                label: "fit".into(),
                points: rows
                    .iter()
                    .map(|&(p, _, _)| (p as f64, fit.eval(p as f64)))
                    .collect(),
            },
        ],
        &PlotConfig::new("mean squared dlog covariance", "p", "mscov").log_log(),
        &svg_path,
    )?;

    let records: Vec<ExperimentRecord> = rows
        .iter()
        .map(|&(p, v, wall)| ExperimentRecord {
            experiment: cfg.experiment,
            p,
            bits: 0,
            seed: 0,
            stats: vec![("mscov".into(), v)],
            wall_time_s: wall,
        })
        .collect();
    write_sidecar(cfg, &records)?;

    Ok(CovResult {
        rows: rows
            .iter()
            .map(|&(p, v, _)| CovRow { p, mscov: v })
            .collect(),
        fit,
        csv_path,
        svg_path,
        records,
    })
}

// ---------------------------------------------------------------------
// all-bits training (all-bits)
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AllBitsRow {
    pub bits: u32,
    pub p: u64,
    pub seed: u64,
    /// Final test accuracy per output bit, LSB first.
    pub final_per_bit: Vec<f64>,
}

#[derive(Debug)]
pub struct AllBitsResult {
    pub rows: Vec<AllBitsRow>,
    pub svg_paths: Vec<PathBuf>,
    pub records: Vec<ExperimentRecord>,
}

pub fn run_all_bits(cfg: &SweepConfig) -> Result<AllBitsResult> {
    cfg.validate()?;
    cfg.ensure_out_dir()?;
    let tasks: Vec<(u32, u64)> = cfg
        .bitlengths
        .iter()
        .flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let mut runs: Vec<(u32, u64, u64, TrainHistory, f64)> = tasks
        .par_iter()
        .map(|&(bits, seed)| {
            let start = Instant::now();
            let (p, hist) = train_one(cfg, bits, seed, TargetKind::AllBits)?;
            Ok((bits, seed, p, hist, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|&(b, s, _, _, _)| (b, s));

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut svg_paths = Vec::new();
    for (bits, seed, p, hist, wall) in &runs {
        let nbits = *bits as usize;
        let header: Vec<String> = std::iter::once("epoch".to_string())
            .chain((0..nbits).map(|b| format!("test_acc_bit{b}")))
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let csv_rows: Vec<Vec<Cell>> = hist
            .stats
            .iter()
            .map(|s| {
                std::iter::once(Cell::UInt(s.epoch as u64))
                    .chain(s.per_bit_test_acc.iter().map(|&a| Cell::Float(a)))
                    .collect()
            })
            .collect();
        let path = cfg.out_dir.join(format!("all_bits_n{bits}_seed{seed}.csv"));
        write_csv(&path, &header_refs, &csv_rows)?;

        let final_per_bit = hist
            .stats
            .last()
            .map(|s| s.per_bit_test_acc.clone())
            .unwrap_or_default();
        let series: Vec<Series> = (0..nbits)
            .map(|b| Series {
                label: format!("bit {b}"),
                points: hist
                    .stats
                    .iter()
                    .map(|s| (s.epoch as f64, s.per_bit_test_acc[b]))
                    .collect(),
            })
            .collect();
        let svg_path = cfg.out_dir.join(format!("all_bits_n{bits}_seed{seed}.svg"));
        render_svg(
            &series,
            &PlotConfig::new(
                &format!("all dlog bits, n={bits}"),
                "epoch",
                "test accuracy",
            ),
            &svg_path,
        )?;
        svg_paths.push(svg_path);
        records.push(ExperimentRecord {
            experiment: cfg.experiment,
            p: *p,
            bits: *bits,
            seed: *seed,
            stats: final_per_bit
                .iter()
                .enumerate()
                .map(|(b, &a)| (format!("final_acc_bit{b}"), a))
                .collect(),
            wall_time_s: *wall,
        });
        rows.push(AllBitsRow {
            bits: *bits,
            p: *p,
            seed: *seed,
            final_per_bit,
        });
    }
    write_sidecar(cfg, &records)?;
    Ok(AllBitsResult {
        rows,
        svg_paths,
        records,
    })
}

// ---------------------------------------------------------------------
// spectral-norm and harmonic-sum sweep (spectral)
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SpectralRow {
    pub p: u64,
    pub sigma1_phi: f64,
    pub sigma1_phi_prime: f64,
    /// sigma1(phi') / (sqrt(p) ln p)
    pub sigma_ratio: f64,
    pub harmonic: f64,
    /// S(p) / ln p
    pub harmonic_ratio: f64,
}

#[derive(Debug)]
pub struct SpectralResult {
    pub rows: Vec<SpectralRow>,
    pub sigma_slope: f64,
    pub harmonic_slope: f64,
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub records: Vec<ExperimentRecord>,
}

pub fn run_spectral(cfg: &SweepConfig) -> Result<SpectralResult> {
    cfg.validate()?;
    cfg.ensure_out_dir()?;
    let primes = primes_in_range(cfg.pmin, cfg.pmax);
    if primes.is_empty() {
        return Err(Error::Config(format!(
            "no primes in [{}, {}]",
            cfg.pmin, cfg.pmax
        )));
    }
    let seed0 = cfg.seeds[0];
    let mut rows: Vec<(SpectralRow, f64)> = primes
        .par_iter()
        .map(|&p| {
            let start = Instant::now();
            let group = GroupSpec::new(p)?;
            let s_phi = phi_spectral_norm(
                group,
                PhiVariant::Phi,
                cfg.dense_limit,
                child_seed(seed0, stream::POWER, p),
            )?;
            let s_phip = phi_spectral_norm(
                group,
                PhiVariant::PhiPrime,
                cfg.dense_limit,
                child_seed(seed0, stream::POWER, p ^ 1),
            )?;
            let pf = p as f64;
            let harmonic = harmonic_sum(group);
            Ok((
                SpectralRow {
                    p,
                    sigma1_phi: s_phi,
                    sigma1_phi_prime: s_phip,
                    sigma_ratio: s_phip / (pf.sqrt() * pf.ln()),
                    harmonic,
                    harmonic_ratio: harmonic / pf.ln(),
                },
                start.elapsed().as_secs_f64(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.0.p);

    let csv_path = cfg.out_dir.join("spectral.csv");
    write_csv(
        &csv_path,
        &[
            "p",
            "sigma1_phi",
            "sigma1_phi_prime",
            "sigma1_ratio",
            "harmonic_sum",
            "harmonic_ratio",
        ],
        &rows
            .iter()
            .map(|(r, _)| {
                vec![
                    Cell::UInt(r.p),
                    Cell::Float(r.sigma1_phi),
                    Cell::Float(r.sigma1_phi_prime),
                    Cell::Float(r.sigma_ratio),
                    Cell::Float(r.harmonic),
                    Cell::Float(r.harmonic_ratio),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let svg_path = cfg.out_dir.join("spectral.svg");
    render_svg(
        &[
            Series {
                label: "sigma1(phi')/(sqrt(p) ln p)".into(),
                points: rows.iter().map(|(r, _)| (r.p as f64, r.sigma_ratio)).collect(),
            },
            Series {
                label: "S(p)/ln p".into(),
                points: rows
                    .iter()
                    .map(|(r, _)| (r.p as f64, r.harmonic_ratio))
                    .collect(),
            },
        ],
        &PlotConfig::new("spectral-norm growth", "p", "normalized value"),
        &svg_path,
    )?;

    let records: Vec<ExperimentRecord> = rows
        .iter()
        .map(|(r, wall)| ExperimentRecord {
            experiment: cfg.experiment,
            p: r.p,
            bits: 0,
            seed: seed0,
            stats: vec![
                ("sigma1_phi".into(), r.sigma1_phi),
                ("sigma1_phi_prime".into(), r.sigma1_phi_prime),
                ("sigma1_ratio".into(), r.sigma_ratio),
                ("harmonic_sum".into(), r.harmonic),
                ("harmonic_ratio".into(), r.harmonic_ratio),
            ],
            wall_time_s: *wall,
        })
        .collect();
    write_sidecar(cfg, &records)?;

    let sigma_slope = linear_fit(
        &rows
            .iter()
            .map(|(r, _)| (r.p as f64, r.sigma_ratio))
            .collect::<Vec<_>>(),
    )?
    .slope;
    let harmonic_slope = linear_fit(
        &rows
            .iter()
            .map(|(r, _)| (r.p as f64, r.harmonic_ratio))
            .collect::<Vec<_>>(),
    )?
    .slope;
    Ok(SpectralResult {
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        sigma_slope,
        harmonic_slope,
        csv_path,
        svg_path,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::csv::read_csv;
    use crate::experiments::ExperimentId;

    fn temp_cfg(id: ExperimentId, tag: &str) -> SweepConfig {
        let mut cfg = SweepConfig::default_for(id);
        cfg.out_dir = std::env::temp_dir().join(format!("dlparity_test_{tag}_{}", std::process::id()));
        cfg
    }

    #[test]
    fn mscov_p3_enumeration_oracle() {
        // 2x2x2 enumeration: logs for a=1 are [1,2], for a=2 are [2,1];
        // every covariance is +/-1/4, so the mean square is 1/16.
        let g = GroupSpec::new(3).unwrap();
        let r = mean_squared_covariance(g).unwrap();
        assert_eq!(r.num * 16, r.den);
        assert!((r.as_f64() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn mscov_matches_float_oracle() {
        // independent float route over all (a, b) pairs
        for p in [5u64, 11, 31] {
            let g = GroupSpec::new(p).unwrap();
            let m = (p - 1) as f64;
            let mean = p as f64 / 2.0;
            let mut total = 0.0;
            for a in 1..p {
                for b in 1..p {
                    let mut e_ab = 0.0;
                    for x in 1..p {
                        let la = g.additive_dlog(a, x).unwrap() as f64;
                        let lb = g.additive_dlog(b, x).unwrap() as f64;
                        e_ab += la * lb / m;
                    }
                    let cov = e_ab - mean * mean;
                    total += cov * cov;
                }
            }
            let oracle = total / (m * m);
            let exact = mean_squared_covariance(g).unwrap().as_f64();
            assert!(
                (oracle - exact).abs() <= 1e-9 * oracle.max(1.0),
                "p={p}: {exact} vs {oracle}"
            );
        }
    }

    #[test]
    fn dlog_variance_closed_form_holds() {
        for p in [3u64, 11, 101, 997] {
            let g = GroupSpec::new(p).unwrap();
            for base in [1u64, 2, p - 1] {
                assert!(dlog_variance_identity(g, base).unwrap(), "p={p}, base={base}");
            }
        }
        // p = 11 gives 121/12 - 11/6 = 8.25
        let g = GroupSpec::new(11).unwrap();
        let (s1, s2) = crate::orthogonality::dlog_moments(g, 2).unwrap();
        let var = s2 as f64 / 10.0 - (s1 as f64 / 10.0).powi(2);
        assert!((var - 8.25).abs() < 1e-12);
    }

    #[test]
    fn thm1_single_point_and_csv_round_trip() {
        let mut cfg = temp_cfg(ExperimentId::Thm1, "thm1");
        cfg.pmin = 11;
        cfg.pmax = 11;
        cfg.seeds = vec![0];
        cfg.hidden = vec![6];
        let res = run_thm1(&cfg).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.records.len(), 1);
        let parsed = read_csv(&res.csv_path, &["p", "mean_ratio", "std_ratio"]).unwrap();
        assert_eq!(parsed.len(), 1);
        let back: f64 = parsed[0][1].parse().unwrap();
        assert_eq!(back.to_bits(), res.rows[0].mean_ratio.to_bits());
        std::fs::remove_dir_all(&cfg.out_dir).ok();
    }

    #[test]
    fn cov_sweep_small_range() {
        let mut cfg = temp_cfg(ExperimentId::Cov, "cov");
        cfg.pmax = 53;
        let res = run_cov(&cfg).unwrap();
        assert_eq!(res.rows.len(), primes_in_range(3, 53).len());
        assert!(res.svg_path.exists());
        std::fs::remove_dir_all(&cfg.out_dir).ok();
    }

    #[test]
    fn spectral_sweep_small_range() {
        let mut cfg = temp_cfg(ExperimentId::Spectral, "spec");
        cfg.pmax = 61;
        let res = run_spectral(&cfg).unwrap();
        for r in &res.rows {
            assert!(
                (r.sigma1_phi - r.sigma1_phi_prime).abs() <= 1e-8 * r.sigma1_phi,
                "p={}",
                r.p
            );
            assert!(r.sigma_ratio > 0.0 && r.harmonic_ratio > 0.0);
        }
        std::fs::remove_dir_all(&cfg.out_dir).ok();
    }

    #[test]
    fn identical_configs_identical_csv_bytes() {
        let mut cfg1 = temp_cfg(ExperimentId::Cov, "det1");
        cfg1.pmax = 31;
        let mut cfg2 = temp_cfg(ExperimentId::Cov, "det2");
        cfg2.pmax = 31;
        let r1 = run_cov(&cfg1).unwrap();
        let r2 = run_cov(&cfg2).unwrap();
        let b1 = std::fs::read(&r1.csv_path).unwrap();
        let b2 = std::fs::read(&r2.csv_path).unwrap();
        assert_eq!(b1, b2);
        std::fs::remove_dir_all(&cfg1.out_dir).ok();
        std::fs::remove_dir_all(&cfg2.out_dir).ok();
    }
}
