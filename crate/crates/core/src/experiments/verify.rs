//! The exact-identity verification suite: every computable invariant of
//! the number-theoretic and spectral machinery, run per prime across a
//! configured range, reported check by check.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::SweepConfig;
use crate::orthogonality::{
    boas_bellman_gap, dlog_base_distribution, phi_mean_over_y, FStatistic, InnerProductTable,
    TABLE_LIMIT,
};
use crate::spectral::fourier::{omega_submatrix_norm, reconstruct_phi_prime, sign_vector_residual};
use crate::spectral::jacobi::singular_values;
use crate::spectral::{
    build_phi, build_phi_prime, phi_spectral_norm, PhiVariant, SignMatrix, POWER_MAX_ITERS,
    POWER_TOL,
};
use crate::zp::{primes_in_range, GroupSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Caps mirroring the acceptance tolerances: where dense O(p^2)/O(p^3)
/// float machinery is involved, the exhaustive check stops at these sizes.
pub const SPECTRUM_MULTISET_LIMIT: u64 = 101;
pub const RESIDUAL_CHECK_LIMIT: u64 = 101;
pub const SUBMATRIX_CHECK_LIMIT: u64 = 503;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Passed,
    Failed(String),
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub p: Option<u64>,
    pub outcome: CheckOutcome,
}

impl VerifyCheck {
    fn passed(name: &'static str, p: u64) -> Self {
        VerifyCheck {
            name,
            p: Some(p),
            outcome: CheckOutcome::Passed,
        }
    }

    fn failed(name: &'static str, p: u64, detail: String) -> Self {
        VerifyCheck {
            name,
            p: Some(p),
            outcome: CheckOutcome::Failed(detail),
        }
    }

    fn from_flag(name: &'static str, p: u64, ok: bool, detail: impl FnOnce() -> String) -> Self {
        if ok {
            Self::passed(name, p)
        } else {
            Self::failed(name, p, detail())
        }
    }
}

/// Per-prime summary of the near-orthogonality statistics, emitted for
/// the experiment layer to persist.
#[derive(Debug, Clone, Copy)]
pub struct OrthoRecord {
    pub p: u64,
    pub var_f: f64,
    /// Var[f] * p / ln^2 p
    pub var_scaled: f64,
    pub sum_sq_offdiag: f64,
    /// sum_sq_offdiag / (p ln^2 p)
    pub offdiag_ratio: f64,
}

#[derive(Debug)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    pub orthogonality: Vec<OrthoRecord>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        !self
            .checks
            .iter()
            .any(|c| matches!(c.outcome, CheckOutcome::Failed(_)))
    }

    pub fn failures(&self) -> Vec<&VerifyCheck> {
        self.checks
            .iter()
            .filter(|c| matches!(c.outcome, CheckOutcome::Failed(_)))
            .collect()
    }

    /// One line per check: "PASS row-means-zero p=11".
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let state = match &c.outcome {
                CheckOutcome::Passed => "PASS".to_string(),
                CheckOutcome::Failed(d) => format!("FAIL ({d})"),
                CheckOutcome::Skipped(r) => format!("SKIP ({r})"),
            };
            match c.p {
                Some(p) => out.push_str(&format!("{state:<4} {} p={p}\n", c.name)),
                None => out.push_str(&format!("{state:<4} {}\n", c.name)),
            }
        }
        out
    }
}

/// Singular spectra of two sign matrices compared as sorted multisets;
/// returns (agree within tol, max deviation). Exposed separately so fault
/// injection can exercise it on a deliberately broken matrix.
pub fn spectrum_invariance_check(
    phi: &SignMatrix,
    phi_prime: &SignMatrix,
    tol: f64,
) -> (bool, f64) {
    let a = singular_values(phi);
    let b = singular_values(phi_prime);
    let max_dev = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    (a.len() == b.len() && max_dev <= tol, max_dev)
}

/// Exact chain identity: sum_{a,b} S_ab^2 = (p-1) * sum_y T_y^2, where
/// S_ab are inner-product numerators and T_y the f numerators.
pub fn chain_identity_check(table: &InnerProductTable, stat: &FStatistic) -> (bool, i128, i128) {
    let lhs = table.sum_squared_all_numerator();
    let rhs: i128 = (stat.group().unit_count() as i128)
        * stat
            .numerators()
            .iter()
            .map(|&n| (n as i128) * (n as i128))
            .sum::<i128>();
    (lhs == rhs, lhs, rhs)
}

/// Boas-Bellman over seeded random instances plus the two equality corner
/// cases; returns the failing case index if any.
pub fn boas_bellman_randomized(cases: usize, seed: u64) -> Result<()> {
    // corner 1: orthonormal system (Bessel), corner 2: singleton g = h
    let dim = 6;
    let scale = (dim as f64).sqrt();
    let hs: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { scale } else { 0.0 })
                .collect()
        })
        .collect();
    let g: Vec<f64> = (0..dim).map(|i| (i as f64) - 2.0).collect();
    let (lhs, rhs) = boas_bellman_gap(&g, &hs)?;
    if lhs > rhs * (1.0 + 1e-12) {
        return Err(Error::Verification {
            what: "Bessel corner case".into(),
            max_deviation: lhs - rhs,
        });
    }
    let h = vec![0.5, -1.5, 2.0];
    let (lhs, rhs) = boas_bellman_gap(&h, std::slice::from_ref(&h))?;
    if (lhs - rhs).abs() > 1e-12 * rhs.abs() {
        return Err(Error::Verification {
            what: "singleton equality corner case".into(),
            max_deviation: (lhs - rhs).abs(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for case in 0..cases {
        let dim = rng.gen_range(1..=50);
        let count = rng.gen_range(1..=20);
        let mut sample = || -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect() };
        let g = sample();
        let hs: Vec<Vec<f64>> = (0..count).map(|_| sample()).collect();
        let (lhs, rhs) = boas_bellman_gap(&g, &hs)?;
        if lhs > rhs * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Verification {
                what: format!("randomized instance {case}"),
                max_deviation: lhs - rhs,
            });
        }
    }
    Ok(())
}

/// Runs every invariant across the configured prime range. Capacity
/// overruns become Skipped entries; the suite keeps going.
pub fn run_verify(cfg: &SweepConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let primes = primes_in_range(cfg.pmin, cfg.pmax);
    if primes.is_empty() {
        return Err(Error::Config(format!(
            "no primes in [{}, {}]",
            cfg.pmin, cfg.pmax
        )));
    }
    let per_prime: Vec<(Vec<VerifyCheck>, Option<OrthoRecord>)> = primes
        .par_iter()
        .map(|&p| per_prime_checks(p, cfg.dense_limit))
        .collect();
    let mut checks = Vec::new();
    let mut orthogonality = Vec::new();
    for (mut chunk, rec) in per_prime {
        checks.append(&mut chunk);
        orthogonality.extend(rec);
    }
    checks.sort_by_key(|c| (c.p, c.name));
    orthogonality.sort_by_key(|r| r.p);
    checks.push(match boas_bellman_randomized(1000, 1_234_567) {
        Ok(()) => VerifyCheck {
            name: "bessel-type-inequality",
            p: None,
            outcome: CheckOutcome::Passed,
        },
        Err(e) => VerifyCheck {
            name: "bessel-type-inequality",
            p: None,
            outcome: CheckOutcome::Failed(e.to_string()),
        },
    });
    Ok(VerifyReport {
        checks,
        orthogonality,
    })
}

fn per_prime_checks(p: u64, dense_limit: u64) -> (Vec<VerifyCheck>, Option<OrthoRecord>) {
    let mut out = Vec::new();
    let mut record = None;
    let group = match GroupSpec::new(p) {
        Ok(g) => g,
        Err(e) => {
            out.push(VerifyCheck {
                name: "group-construction",
                p: Some(p),
                outcome: CheckOutcome::Failed(e.to_string()),
            });
            return (out, record);
        }
    };

    // zero row means of phi and zero mean of f, exact
    let stat = FStatistic::compute(group);
    let rows_ok = group
        .units()
        .all(|x| phi_mean_over_y(group, x).is_ok_and(|r| r.is_zero()));
    out.push(VerifyCheck::from_flag("row-means-zero", p, rows_ok, || {
        "some E_Y[phi(x, Y)] is nonzero".into()
    }));
    out.push(VerifyCheck::from_flag(
        "f-mean-zero",
        p,
        stat.mean().is_zero(),
        || format!("sum of f numerators = {}", stat.mean().num),
    ));

    // variance bounded by the squared spectral norm
    match phi_spectral_norm(group, PhiVariant::Phi, dense_limit, 17) {
        Ok(sigma) => {
            let var = stat.variance().as_f64();
            let bound = sigma * sigma / ((p - 1) as f64).powi(2);
            out.push(VerifyCheck::from_flag(
                "variance-spectral-bound",
                p,
                var <= bound * (1.0 + 1e-9),
                || format!("Var[f] = {var} exceeds bound {bound}"),
            ));
        }
        Err(e) => out.push(VerifyCheck {
            name: "variance-spectral-bound",
            p: Some(p),
            outcome: CheckOutcome::Skipped(e.to_string()),
        }),
    }

    // spectra of phi and phi_prime
    if p <= SPECTRUM_MULTISET_LIMIT {
        let phi = build_phi(group, dense_limit);
        let phip = build_phi_prime(group, dense_limit);
        match (phi, phip) {
            (Ok(phi), Ok(phip)) => {
                let (ok, dev) = spectrum_invariance_check(&phi, &phip, 1e-8);
                out.push(VerifyCheck::from_flag("spectrum-invariance", p, ok, || {
                    format!("multiset deviation {dev:e}")
                }));
                // power iteration vs the independent dense oracle
                let jac = singular_values(&phi)[0];
                match spectral_norm_power(&phi, p) {
                    Ok(pow) => out.push(VerifyCheck::from_flag(
                        "power-vs-jacobi",
                        p,
                        (pow - jac).abs() <= 1e-8 * jac,
                        || format!("power {pow} vs jacobi {jac}"),
                    )),
                    Err(e) => out.push(VerifyCheck {
                        name: "power-vs-jacobi",
                        p: Some(p),
                        outcome: CheckOutcome::Failed(e.to_string()),
                    }),
                }
            }
            _ => out.push(VerifyCheck {
                name: "spectrum-invariance",
                p: Some(p),
                outcome: CheckOutcome::Skipped("dense limit".into()),
            }),
        }
    } else {
        // top singular values only
        let a = phi_spectral_norm(group, PhiVariant::Phi, dense_limit, 23);
        let b = phi_spectral_norm(group, PhiVariant::PhiPrime, dense_limit, 29);
        match (a, b) {
            (Ok(a), Ok(b)) => out.push(VerifyCheck::from_flag(
                "spectrum-invariance",
                p,
                (a - b).abs() <= 1e-8 * a.max(b),
                || format!("sigma1(phi) = {a} vs sigma1(phi') = {b}"),
            )),
            (Err(e), _) | (_, Err(e)) => out.push(VerifyCheck {
                name: "spectrum-invariance",
                p: Some(p),
                outcome: CheckOutcome::Skipped(e.to_string()),
            }),
        }
    }

    // roots-of-unity decomposition residuals
    if p <= RESIDUAL_CHECK_LIMIT {
        let r = sign_vector_residual(group);
        out.push(VerifyCheck::from_flag(
            "sign-vector-decomposition",
            p,
            r <= 1e-10,
            || format!("residual {r:e}"),
        ));
        out.push(match reconstruct_phi_prime(group, 1e-9) {
            Ok(_) => VerifyCheck::passed("matrix-reconstruction", p),
            Err(e) => VerifyCheck::failed("matrix-reconstruction", p, e.to_string()),
        });
    }

    // submatrix norms stay below sqrt(p) for sampled l in Z_p^*
    if p <= SUBMATRIX_CHECK_LIMIT {
        let mut rng = ChaCha12Rng::seed_from_u64(p ^ 0x5eed);
        let cap = (p as f64).sqrt() * (1.0 + 1e-8);
        let mut ok = true;
        let mut detail = String::new();
        for _ in 0..10 {
            let ell = rng.gen_range(1..p);
            match omega_submatrix_norm(group, ell, 1e-9, POWER_MAX_ITERS, 7) {
                Ok(s) if s <= cap => {}
                Ok(s) => {
                    ok = false;
                    detail = format!("l={ell}: {s} > sqrt(p)");
                    break;
                }
                Err(e) => {
                    ok = false;
                    detail = e.to_string();
                    break;
                }
            }
        }
        out.push(VerifyCheck::from_flag(
            "submatrix-norm-bound",
            p,
            ok,
            move || detail,
        ));
    }

    // exact uniformity of log_B A
    match dlog_base_distribution(group) {
        Ok(counts) => {
            let ok = counts[0] == 0 && counts[1..].iter().all(|&c| c == p - 1);
            out.push(VerifyCheck::from_flag("dlog-uniformity", p, ok, || {
                "histogram is not exactly flat".into()
            }));
        }
        Err(e) => out.push(VerifyCheck {
            name: "dlog-uniformity",
            p: Some(p),
            outcome: CheckOutcome::Skipped(e.to_string()),
        }),
    }

    // chain identity between inner products and Var[f]
    if p <= TABLE_LIMIT {
        match InnerProductTable::compute(group) {
            Ok(table) => {
                let (ok, lhs, rhs) = chain_identity_check(&table, &stat);
                out.push(VerifyCheck::from_flag(
                    "offdiag-chain-identity",
                    p,
                    ok,
                    || format!("{lhs} != {rhs}"),
                ));
                let off = crate::orthogonality::sum_squared_offdiag(&table);
                let pf = p as f64;
                let var = stat.variance().as_f64();
                record = Some(OrthoRecord {
                    p,
                    var_f: var,
                    var_scaled: var * pf / (pf.ln() * pf.ln()),
                    sum_sq_offdiag: off.sum.as_f64(),
                    offdiag_ratio: off.normalized,
                });
            }
            Err(e) => out.push(VerifyCheck {
                name: "offdiag-chain-identity",
                p: Some(p),
                outcome: CheckOutcome::Skipped(e.to_string()),
            }),
        }
    }

    (out, record)
}

fn spectral_norm_power(m: &SignMatrix, seed: u64) -> Result<f64> {
    crate::spectral::spectral_norm_power(m, POWER_TOL, POWER_MAX_ITERS, seed)
}
