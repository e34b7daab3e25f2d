//! Exact integer statistics of the parity-bit class over Z_p^*.
//!
//! Everything here is computed in integer arithmetic with fixed known
//! denominators ((p-1), (p-1)^2, (p-1)^3), so equality assertions are
//! exact rather than toleranced. The pieces: the f statistic and its
//! variance, the zero row-means of phi, the pairwise inner products of
//! the parity functions h_a, the distribution of log_B A, and a general
//! Boas-Bellman inequality checker over real vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::zp::GroupSpec;

/// Exhaustive-enumeration cap for the exact paths.
pub const DEFAULT_EXHAUSTIVE_LIMIT: u64 = 10_000;

/// An exact rational with integer numerator and a fixed positive
/// denominator. Comparisons on equal denominators are integer-exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRatio {
    pub num: i128,
    pub den: i128,
}

impl ExactRatio {
    pub fn new(num: i128, den: i128) -> Self {
        debug_assert!(den > 0);
        ExactRatio { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
}

#[inline]
fn sign_of(k: u64) -> i64 {
    1 - 2 * ((k & 1) as i64)
}

/// Integer numerator of f(y): sum_x (-1)^x (-1)^{yx mod p}.
pub fn f_numerator(group: GroupSpec, y: u64) -> Result<i64> {
    let p = group.p();
    if y == 0 || y >= p {
        return Err(Error::Domain(format!("y={y} is not in Z_p^*")));
    }
    let mut s = 0u64; // yx mod p, stepped by y as x increases
    let mut acc = 0i64;
    for x in 1..p {
        s += y;
        if s >= p {
            s -= p;
        }
        acc += sign_of(x) * sign_of(s);
    }
    Ok(acc)
}

/// f(y) = E_X[(-1)^X (-1)^{yX mod p}] as an exact rational over p-1.
pub fn f_of_y(group: GroupSpec, y: u64) -> Result<ExactRatio> {
    Ok(ExactRatio::new(
        f_numerator(group, y)? as i128,
        group.unit_count() as i128,
    ))
}

/// All f numerators for y in Z_p^*, plus exact mean and variance.
#[derive(Debug, Clone)]
pub struct FStatistic {
    group: GroupSpec,
    numerators: Vec<i64>,
}

impl FStatistic {
    pub fn compute(group: GroupSpec) -> Self {
        let numerators = group
            .units()
            .map(|y| f_numerator(group, y).expect("y ranges over units"))
            .collect();
        FStatistic { group, numerators }
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// Numerator of f(y) over p-1.
    pub fn numerator(&self, y: u64) -> i64 {
        self.numerators[(y - 1) as usize]
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn value(&self, y: u64) -> ExactRatio {
        ExactRatio::new(self.numerator(y) as i128, self.group.unit_count() as i128)
    }

    /// E[f(Y)] over (p-1)^2; zero exactly.
    pub fn mean(&self) -> ExactRatio {
        let m = self.group.unit_count() as i128;
        let sum: i128 = self.numerators.iter().map(|&n| n as i128).sum();
        ExactRatio::new(sum, m * m)
    }

    /// Var[f(Y)] = E[f(Y)^2] over (p-1)^3 (the mean is zero).
    pub fn variance(&self) -> ExactRatio {
        let m = self.group.unit_count() as i128;
        let sum: i128 = self.numerators.iter().map(|&n| (n as i128) * (n as i128)).sum();
        ExactRatio::new(sum, m * m * m)
    }
}

/// Exact variance of f(Y); errors above the exhaustive limit.
pub fn variance_f(group: GroupSpec) -> Result<ExactRatio> {
    if group.p() > DEFAULT_EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity {
            p: group.p(),
            limit: DEFAULT_EXHAUSTIVE_LIMIT,
        });
    }
    Ok(FStatistic::compute(group).variance())
}

/// Monte-Carlo variance estimate past the exhaustive limit: samples y,
/// computes f(y) exactly per sample, and returns (estimate, standard
/// error) for E[f(Y)^2] over the declared sample count.
pub fn variance_f_sampled(group: GroupSpec, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let p = group.p();
    let m = group.unit_count() as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..samples {
        let y = rng.gen_range(1..p);
        let f = f_numerator(group, y)? as f64 / m;
        let f2 = f * f;
        sum += f2;
        sum_sq += f2 * f2;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var_of_f2 = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (var_of_f2 / n).sqrt()))
}

/// E_Y[phi(x, Y)] as an exact rational over p-1; zero for every x because
/// {yx mod p} sweeps Z_p^* and half the residues are odd.
pub fn phi_mean_over_y(group: GroupSpec, x: u64) -> Result<ExactRatio> {
    let p = group.p();
    if x == 0 || x >= p {
        return Err(Error::Domain(format!("x={x} is not in Z_p^*")));
    }
    let mut s = 0u64;
    let mut acc = 0i64;
    for _y in 1..p {
        s += x;
        if s >= p {
            s -= p;
        }
        acc += sign_of(s);
    }
    Ok(ExactRatio::new(
        (sign_of(x) * acc) as i128,
        group.unit_count() as i128,
    ))
}

/// Bit-packed parity rows: bit (x-1) of row a is set iff h_a(x) = -1.
/// Inner products of +/-1 vectors reduce to XOR + popcount.
struct ParityRows {
    words_per_row: usize,
    bits: Vec<u64>,
    len: usize,
}

impl ParityRows {
    fn build(group: GroupSpec) -> Result<Self> {
        let p = group.p();
        let len = (p - 1) as usize;
        let words_per_row = len.div_ceil(64);
        let mut bits = vec![0u64; words_per_row * len];
        for a in 1..p {
            let inv = group.mod_inverse(a)?;
            let row = &mut bits[(a - 1) as usize * words_per_row..][..words_per_row];
            let mut k = 0u64; // inv * x mod p, stepped by inv
            for x in 1..p {
                k += inv;
                if k >= p {
                    k -= p;
                }
                if k & 1 == 1 {
                    let bit = (x - 1) as usize;
                    row[bit / 64] |= 1u64 << (bit % 64);
                }
            }
        }
        Ok(ParityRows {
            words_per_row,
            bits,
            len,
        })
    }

    #[inline]
    fn row(&self, idx: usize) -> &[u64] {
        &self.bits[idx * self.words_per_row..(idx + 1) * self.words_per_row]
    }

    /// sum_x h_a(x) h_b(x) = (p-1) - 2 * popcount(row_a XOR row_b).
    #[inline]
    fn dot(&self, a: usize, b: usize) -> i64 {
        let mismatches: u32 = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(u, v)| (u ^ v).count_ones())
            .sum();
        self.len as i64 - 2 * mismatches as i64
    }
}

/// Table of pairwise inner products <h_a, h_b>, stored as exact integer
/// numerators over p-1. Symmetric with unit diagonal.
#[derive(Debug, Clone)]
pub struct InnerProductTable {
    group: GroupSpec,
    numerators: Vec<i64>,
}

/// Memory cap for the dense (p-1)^2 table.
pub const TABLE_LIMIT: u64 = 4096;

impl InnerProductTable {
    /// Builds the table through the group-generic definition (dlog-derived
    /// parity vectors), not through the f statistic, so the chain identity
    /// against Var[f] is a genuine cross-check.
    pub fn compute(group: GroupSpec) -> Result<Self> {
        let p = group.p();
        if p > TABLE_LIMIT {
            return Err(Error::Capacity {
                p,
                limit: TABLE_LIMIT,
            });
        }
        let m = (p - 1) as usize;
        let rows = ParityRows::build(group)?;
        let mut numerators = vec![0i64; m * m];
        for a in 0..m {
            for b in a..m {
                let v = rows.dot(a, b);
                numerators[a * m + b] = v;
                numerators[b * m + a] = v;
            }
        }
        Ok(InnerProductTable { group, numerators })
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// <h_a, h_b> as an exact rational over p-1 (a, b in [1, p-1]).
    pub fn cell(&self, a: u64, b: u64) -> ExactRatio {
        let m = self.group.unit_count() as usize;
        ExactRatio::new(
            self.numerators[(a - 1) as usize * m + (b - 1) as usize] as i128,
            self.group.unit_count() as i128,
        )
    }

    /// sum over ALL (a, b) pairs of numerator^2; feeds the chain identity
    /// sum <h_a,h_b>^2 / (p-1)^2 = Var[f(Y)].
    pub fn sum_squared_all_numerator(&self) -> i128 {
        self.numerators
            .iter()
            .map(|&n| (n as i128) * (n as i128))
            .sum()
    }

    /// sum over a != b of numerator^2.
    pub fn sum_squared_offdiag_numerator(&self) -> i128 {
        let m = self.group.unit_count() as i128;
        // diagonal cells are all (p-1): h_a has unit norm
        self.sum_squared_all_numerator() - m * m * m
    }
}

/// Off-diagonal mass of the inner-product table plus its normalization by
/// p ln^2 p, the scale at which it stays bounded.
#[derive(Debug, Clone, Copy)]
pub struct OffdiagSum {
    pub sum: ExactRatio,
    pub normalized: f64,
}

pub fn sum_squared_offdiag(table: &InnerProductTable) -> OffdiagSum {
    let m = table.group.unit_count() as i128;
    let num = table.sum_squared_offdiag_numerator();
    let sum = ExactRatio::new(num, m * m);
    let p = table.group.p() as f64;
    OffdiagSum {
        sum,
        normalized: sum.as_f64() / (p * p.ln() * p.ln()),
    }
}

/// Histogram of log_b a over all (a, b) in (Z_p^*)^2, indexed by the log
/// value in [0, p-1]. Bin 0 stays empty; every other bin holds exactly
/// p-1 pairs.
pub fn dlog_base_distribution(group: GroupSpec) -> Result<Vec<u64>> {
    let p = group.p();
    if p > DEFAULT_EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity {
            p,
            limit: DEFAULT_EXHAUSTIVE_LIMIT,
        });
    }
    let mut counts = vec![0u64; p as usize];
    for b in 1..p {
        let inv = group.mod_inverse(b)?;
        let mut k = 0u64; // log_b a = inv * a mod p, stepped by inv
        for _a in 1..p {
            k += inv;
            if k >= p {
                k -= p;
            }
            counts[k as usize] += 1;
        }
    }
    Ok(counts)
}

/// First and second moments of log_a X over X in Z_p^*: (sum, sum of
/// squares), exact.
pub fn dlog_moments(group: GroupSpec, base: u64) -> Result<(i128, i128)> {
    let p = group.p();
    let inv = group.mod_inverse(base)?;
    let mut k = 0u64;
    let (mut s1, mut s2) = (0i128, 0i128);
    for _x in 1..p {
        k += inv;
        if k >= p {
            k -= p;
        }
        s1 += k as i128;
        s2 += (k as i128) * (k as i128);
    }
    Ok((s1, s2))
}

/// Both sides of the Boas-Bellman inequality
///   sum_i <h_i, g>^2 <= ||g||^2 (max_i ||h_i||^2 + sqrt(sum_{i!=j} <h_i,h_j>^2))
/// under the expectation inner product <u, v> = (1/m) sum u_t v_t.
pub fn boas_bellman_gap(g: &[f64], hs: &[Vec<f64>]) -> Result<(f64, f64)> {
    let m = g.len();
    if m == 0 {
        return Err(Error::Domain("empty vector".into()));
    }
    if hs.is_empty() {
        return Err(Error::Domain("empty system".into()));
    }
    for h in hs {
        if h.len() != m {
            return Err(Error::Domain(format!(
                "dimension mismatch: {} vs {m}",
                h.len()
            )));
        }
    }
    let ip = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let lhs: f64 = hs.iter().map(|h| ip(h, g).powi(2)).sum();
    let g_norm_sq = ip(g, g);
    let max_h = hs
        .iter()
        .map(|h| ip(h, h))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut cross = 0.0;
    for (i, hi) in hs.iter().enumerate() {
        for hj in hs.iter().skip(i + 1) {
            cross += 2.0 * ip(hi, hj).powi(2);
        }
    }
    Ok((lhs, g_norm_sq * (max_h + cross.sqrt())))
}
