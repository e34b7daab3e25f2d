//! Cross-module invariants at ranges past what the per-module unit tests
//! cover: the long variance and harmonic-sum sweeps and the all-bits
//! training bands.

use rayon::prelude::*;

use dlparity::experiments::fit::linear_fit;
use dlparity::experiments::sweeps::run_all_bits;
use dlparity::experiments::{ExperimentId, SweepConfig};
use dlparity::orthogonality::FStatistic;
use dlparity::spectral::fourier::harmonic_sum;
use dlparity::zp::{primes_in_range, GroupSpec};

#[test]
fn variance_ratio_bounded_to_ten_thousand() {
    // Var[f] * p / ln^2 p stays bounded with a non-increasing trend
    let primes = primes_in_range(3, 10_000);
    let mut rows: Vec<(f64, f64)> = primes
        .par_iter()
        .map(|&p| {
            let g = GroupSpec::new(p).unwrap();
            let var = FStatistic::compute(g).variance().as_f64();
            let pf = p as f64;
            (pf, var * pf / (pf.ln() * pf.ln()))
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let first = rows[0].1;
    let max = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
    assert!(max <= first * 1.5, "ratio max {max} vs first {first}");
    let slope = linear_fit(&rows).unwrap().slope;
    assert!(slope <= 0.0, "variance ratio slope {slope:+e}");
    println!(
        "variance ratio over {} primes <= 10^4: first {first:.4}, max {max:.4}, slope {slope:+.2e}",
        rows.len()
    );
}

#[test]
fn harmonic_ratio_bounded_to_five_thousand() {
    let primes = primes_in_range(3, 5000);
    let mut rows: Vec<(f64, f64)> = primes
        .par_iter()
        .map(|&p| {
            let g = GroupSpec::new(p).unwrap();
            let pf = p as f64;
            (pf, harmonic_sum(g) / pf.ln())
        })
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let first = rows[0].1;
    let max = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
    assert!(max <= first * 1.5, "S(p)/ln p max {max} vs first {first}");
    println!("harmonic ratio over {} primes <= 5000: first {first:.4}, max {max:.4}", rows.len());
}

#[test]
fn all_bits_training_bands() {
    // n=8 memorizes (mean accuracy > 0.6); at n=20 the least-significant
    // bit stays at chance level
    let mut cfg = SweepConfig::default_for(ExperimentId::AllBits);
    cfg.bitlengths = vec![8, 20];
    cfg.seeds = vec![0];
    cfg.out_dir = std::env::temp_dir().join(format!("dlparity_allbits_{}", std::process::id()));
    let res = run_all_bits(&cfg).unwrap();
    for row in &res.rows {
        assert!(
            row.final_per_bit.iter().all(|&a| (0.0..=1.0).contains(&a)),
            "accuracy outside [0,1] at n={}",
            row.bits
        );
        let mean: f64 = row.final_per_bit.iter().sum::<f64>() / row.final_per_bit.len() as f64;
        if row.bits == 8 {
            assert!(mean > 0.6, "n=8 mean accuracy {mean} too low to be memorization");
        }
        if row.bits == 20 {
            let lsb = row.final_per_bit[0];
            assert!(
                (0.45..=0.55).contains(&lsb),
                "n=20 least-significant-bit accuracy {lsb} outside the chance band"
            );
        }
        println!(
            "all-bits n={} p={} final per-bit accuracies {:?}",
            row.bits, row.p, row.final_per_bit
        );
    }
    std::fs::remove_dir_all(&cfg.out_dir).ok();
}
