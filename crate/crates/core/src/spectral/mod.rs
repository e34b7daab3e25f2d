//! The structured ±1 matrices built from the parity class over Z_p^* and
//! the machinery for their spectral norms.
//!
//! Two matrices are in play, both (p-1) x (p-1) with rows/columns labeled
//! by Z_p^* in ascending order:
//!
//! - phi:        entry(x, y) = (-1)^x * (-1)^{yx mod p}
//! - phi_prime:  entry(j, k) = (-1)^{jk mod p}   (symmetric)
//!
//! phi equals phi_prime with row x scaled by (-1)^x, so the two share
//! singular spectra. The top singular value feeds the variance bound on
//! the f statistic.

pub mod fourier;
pub mod jacobi;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::zp::GroupSpec;

/// Default cap for dense storage: (5000)^2 entries ~ 200 MB of f64.
pub const DEFAULT_DENSE_LIMIT: u64 = 5000;

/// Power-iteration defaults: relative-change stopping rule.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 100_000;

/// Dense square matrix with entries in {-1, +1}, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SignMatrix {
    /// Wraps raw entries; every entry must be exactly +1 or -1.
    pub fn from_entries(order: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != order * order {
            return Err(Error::Domain(format!(
                "entry count {} does not match order {order}",
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e != 1.0 && e != -1.0) {
            return Err(Error::Domain("sign matrix entries must be +/-1".into()));
        }
        Ok(SignMatrix { order, entries })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    /// Flips one entry in place; used by fault-injection tests to confirm
    /// the verification suite actually detects broken builders.
    pub fn flip_entry(&mut self, row: usize, col: usize) {
        self.entries[row * self.order + col] *= -1.0;
    }
}

/// Matrix access used by the power iteration: dense or entry-on-the-fly.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// out = M x
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// out = M^T x
    fn apply_transpose(&self, x: &[f64], out: &mut [f64]);
}

impl LinearOperator for SignMatrix {
    fn dim(&self) -> usize {
        self.order
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.entries.chunks_exact(self.order)) {
            *o = row.iter().zip(x).map(|(m, v)| m * v).sum();
        }
    }

    fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (xi, row) in x.iter().zip(self.entries.chunks_exact(self.order)) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += m * xi;
            }
        }
    }
}

/// Which of the two sign matrices an operator stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiVariant {
    Phi,
    PhiPrime,
}

/// Matrix-free operator computing entries on the fly; used past the dense
/// limit. Row j of phi_prime is (-1)^{jk mod p}, walked incrementally.
#[derive(Debug, Clone, Copy)]
pub struct PhiOperator {
    group: GroupSpec,
    variant: PhiVariant,
}

impl PhiOperator {
    pub fn new(group: GroupSpec, variant: PhiVariant) -> Self {
        PhiOperator { group, variant }
    }

    /// Dot product of row j of phi_prime with x, j in [1, p-1]. The index
    /// walk and the sign are both branchless; the parity signs look random
    /// to a branch predictor.
    #[inline]
    fn phi_prime_row_dot(&self, j: u64, x: &[f64]) -> f64 {
        let p = self.group.p();
        let mut s = 0u64; // jk mod p, stepped by j
        let mut acc = 0.0;
        for &v in x {
            s += j;
            s = if s >= p { s - p } else { s };
            let sign = 1.0 - 2.0 * ((s & 1) as f64);
            acc += sign * v;
        }
        acc
    }

    /// Four consecutive row dots at once; the index walks are independent
    /// chains, which keeps the pipeline full.
    #[inline]
    fn phi_prime_row_dot4(&self, j: u64, x: &[f64]) -> [f64; 4] {
        let p = self.group.p();
        let steps = [j, j + 1, j + 2, j + 3];
        let mut s = [0u64; 4];
        let mut acc = [0.0f64; 4];
        for &v in x {
            for lane in 0..4 {
                let mut t = s[lane] + steps[lane];
                t = if t >= p { t - p } else { t };
                s[lane] = t;
                let sign = 1.0 - 2.0 * ((t & 1) as f64);
                acc[lane] += sign * v;
            }
        }
        acc
    }
}

impl LinearOperator for PhiOperator {
    fn dim(&self) -> usize {
        (self.group.p() - 1) as usize
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = out.len();
        let row_sign = |j: u64, dot: f64| match self.variant {
            PhiVariant::PhiPrime => dot,
            // phi row j carries the extra factor (-1)^j
            PhiVariant::Phi => {
                if j & 1 == 0 {
                    dot
                } else {
                    -dot
                }
            }
        };
        let mut idx = 0;
        while idx + 4 <= m {
            let j = idx as u64 + 1;
            let dots = self.phi_prime_row_dot4(j, x);
            for (lane, &d) in dots.iter().enumerate() {
                out[idx + lane] = row_sign(j + lane as u64, d);
            }
            idx += 4;
        }
        for (i, o) in out.iter_mut().enumerate().skip(idx) {
            let j = i as u64 + 1;
            *o = row_sign(j, self.phi_prime_row_dot(j, x));
        }
    }

    fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        match self.variant {
            // phi_prime is symmetric
            PhiVariant::PhiPrime => self.apply(x, out),
            // phi^T x = phi_prime (D x) with D = diag((-1)^j)
            PhiVariant::Phi => {
                let scaled: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(idx, &v)| if (idx + 1) & 1 == 0 { v } else { -v })
                    .collect();
                let plain = PhiOperator::new(self.group, PhiVariant::PhiPrime);
                plain.apply(&scaled, out);
            }
        }
    }
}

fn check_dense_limit(group: GroupSpec, dense_limit: u64) -> Result<()> {
    if group.p() > dense_limit {
        return Err(Error::Capacity {
            p: group.p(),
            limit: dense_limit,
        });
    }
    Ok(())
}

/// Dense phi: entry(x, y) = (-1)^x * (-1)^{yx mod p}.
pub fn build_phi(group: GroupSpec, dense_limit: u64) -> Result<SignMatrix> {
    check_dense_limit(group, dense_limit)?;
    Ok(build_variant(group, PhiVariant::Phi))
}

/// Dense phi_prime: entry(j, k) = (-1)^{jk mod p}.
pub fn build_phi_prime(group: GroupSpec, dense_limit: u64) -> Result<SignMatrix> {
    check_dense_limit(group, dense_limit)?;
    Ok(build_variant(group, PhiVariant::PhiPrime))
}

fn build_variant(group: GroupSpec, variant: PhiVariant) -> SignMatrix {
    let p = group.p();
    let m = (p - 1) as usize;
    let mut entries = Vec::with_capacity(m * m);
    for x in 1..p {
        let row_sign = match variant {
            PhiVariant::Phi => {
                if x & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            PhiVariant::PhiPrime => 1.0,
        };
        let mut s = 0u64; // yx mod p, stepped by x
        for _y in 1..p {
            s += x;
            if s >= p {
                s -= p;
            }
            entries.push(if s & 1 == 0 { row_sign } else { -row_sign });
        }
    }
    SignMatrix { order: m, entries }
}

/// Largest singular value by power iteration on the Gram matrix M^T M,
/// with a seeded start vector and a relative-change stopping rule.
///
/// The Rayleigh quotient along the iteration is monotone for the PSD Gram
/// matrix, so a plateau means convergence.
pub fn spectral_norm_power<M: LinearOperator + ?Sized>(
    m: &M,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<f64> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut y = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut lambda_prev = -1.0;
    for it in 1..=max_iters {
        m.apply(&v, &mut y);
        m.apply_transpose(&y, &mut w);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let wn = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if wn == 0.0 {
            // start vector fell into the null space; re-draw
            v = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut v);
            lambda_prev = -1.0;
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if it >= 2 && (lambda - lambda_prev).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok(lambda.max(0.0).sqrt());
        }
        lambda_prev = lambda;
    }
    // residual || Gram v - lambda v || with the final iterate
    m.apply(&v, &mut y);
    m.apply_transpose(&y, &mut w);
    let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    let residual = v
        .iter()
        .zip(&w)
        .map(|(vi, wi)| (wi - lambda * vi).powi(2))
        .sum::<f64>()
        .sqrt();
    Err(Error::Convergence {
        iters: max_iters,
        last: lambda.max(0.0).sqrt(),
        residual,
    })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n == 0.0 {
        v[0] = 1.0;
    } else {
        for a in v.iter_mut() {
            *a /= n;
        }
    }
}

/// Convenience: top singular value of phi or phi_prime, dense when p fits
/// under `dense_limit`, matrix-free otherwise.
pub fn phi_spectral_norm(
    group: GroupSpec,
    variant: PhiVariant,
    dense_limit: u64,
    seed: u64,
) -> Result<f64> {
    if group.p() <= dense_limit {
        let m = build_variant(group, variant);
        spectral_norm_power(&m, POWER_TOL, POWER_MAX_ITERS, seed)
    } else {
        let op = PhiOperator::new(group, variant);
        spectral_norm_power(&op, POWER_TOL, POWER_MAX_ITERS, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::primes_in_range;

    fn group(p: u64) -> GroupSpec {
        GroupSpec::new(p).unwrap()
    }

    #[test]
    fn phi_p3_enumeration() {
        // oracle: entry(x, y) = (-1)^x * (-1)^{yx mod p}, enumerated directly
        let m = build_phi(group(3), DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(m.order(), 2);
        assert_eq!(m.row(0), &[1.0, -1.0]); // x = 1
        assert_eq!(m.row(1), &[1.0, -1.0]); // x = 2
    }

    #[test]
    fn phi_prime_p3_and_p5() {
        let m = build_phi_prime(group(3), DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(m.row(0), &[-1.0, 1.0]);
        assert_eq!(m.row(1), &[1.0, -1.0]);

        let m = build_phi_prime(group(5), DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(m.row(0), &[-1.0, 1.0, -1.0, 1.0]); // j = 1
    }

    #[test]
    fn phi_prime_symmetry() {
        for p in primes_in_range(3, 503) {
            let m = build_phi_prime(group(p), DEFAULT_DENSE_LIMIT).unwrap();
            for j in 0..m.order() {
                for k in 0..j {
                    assert_eq!(m.entry(j, k), m.entry(k, j), "p={p}");
                }
            }
        }
    }

    #[test]
    fn hadamard_identity_exact() {
        // phi(x, y) = (-1)^x * phi_prime(x, y), checked at integer level
        for p in [3u64, 5, 7, 11, 101, 199] {
            let phi = build_phi(group(p), DEFAULT_DENSE_LIMIT).unwrap();
            let phip = build_phi_prime(group(p), DEFAULT_DENSE_LIMIT).unwrap();
            for x in 1..p as usize {
                let sign = if x & 1 == 0 { 1.0 } else { -1.0 };
                for y in 1..p as usize {
                    assert_eq!(phi.entry(x - 1, y - 1), sign * phip.entry(x - 1, y - 1));
                }
            }
        }
    }

    #[test]
    fn phi_row_sums_vanish() {
        // E_Y[phi(x, Y)] = 0 for every x; the column sums equal (p-1) f(y)
        // and are NOT all zero (column y=1 sums to p-1).
        for p in [5u64, 11, 97] {
            let phi = build_phi(group(p), DEFAULT_DENSE_LIMIT).unwrap();
            for x in 0..phi.order() {
                let s: f64 = phi.row(x).iter().sum();
                assert_eq!(s, 0.0, "row sum at p={p}, x={}", x + 1);
            }
            let col1: f64 = (0..phi.order()).map(|x| phi.entry(x, 0)).sum();
            assert_eq!(col1, (p - 1) as f64);
        }
    }

    #[test]
    fn dense_limit_enforced() {
        match build_phi(group(11), 7) {
            Err(Error::Capacity { p, limit }) => {
                assert_eq!((p, limit), (11, 7));
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn power_iteration_small_cases() {
        // p=3 phi_prime: eigenvalues of [[-1,1],[1,-1]] are 0 and -2
        let m = build_phi_prime(group(3), DEFAULT_DENSE_LIMIT).unwrap();
        let s = spectral_norm_power(&m, POWER_TOL, POWER_MAX_ITERS, 1).unwrap();
        assert!((s - 2.0).abs() < 1e-10, "sigma1 = {s}");

        // all-ones matrix of order m is rank one with sigma1 = m
        let ones = SignMatrix::from_entries(6, vec![1.0; 36]).unwrap();
        let s = spectral_norm_power(&ones, POWER_TOL, POWER_MAX_ITERS, 1).unwrap();
        assert!((s - 6.0).abs() < 1e-10);
    }

    #[test]
    fn phi_and_phi_prime_share_sigma1() {
        let g = group(11);
        let a = phi_spectral_norm(g, PhiVariant::Phi, DEFAULT_DENSE_LIMIT, 3).unwrap();
        let b = phi_spectral_norm(g, PhiVariant::PhiPrime, DEFAULT_DENSE_LIMIT, 4).unwrap();
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }

    #[test]
    fn matrix_free_matches_dense() {
        for p in [11u64, 101, 199] {
            let g = group(p);
            let dense = phi_spectral_norm(g, PhiVariant::PhiPrime, DEFAULT_DENSE_LIMIT, 9).unwrap();
            let free = phi_spectral_norm(g, PhiVariant::PhiPrime, 3, 9).unwrap();
            assert!((dense - free).abs() <= 1e-9 * dense, "p={p}: {dense} vs {free}");
            let dense = phi_spectral_norm(g, PhiVariant::Phi, DEFAULT_DENSE_LIMIT, 9).unwrap();
            let free = phi_spectral_norm(g, PhiVariant::Phi, 3, 9).unwrap();
            assert!((dense - free).abs() <= 1e-9 * dense, "p={p}: {dense} vs {free}");
        }
    }

    #[test]
    fn matrix_free_matvecs_match_dense() {
        let g = group(101);
        let dense = build_phi(g, DEFAULT_DENSE_LIMIT).unwrap();
        let op = PhiOperator::new(g, PhiVariant::Phi);
        let x: Vec<f64> = (0..dense.order()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut a = vec![0.0; dense.order()];
        let mut b = vec![0.0; dense.order()];
        dense.apply(&x, &mut a);
        op.apply(&x, &mut b);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
        dense.apply_transpose(&x, &mut a);
        op.apply_transpose(&x, &mut b);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn power_iteration_rejects_bad_inputs() {
        let m = build_phi_prime(group(3), DEFAULT_DENSE_LIMIT).unwrap();
        assert!(spectral_norm_power(&m, 0.0, 10, 1).is_err());
        match spectral_norm_power(&m, 1e-30, 1, 1) {
            Err(Error::Convergence { iters, last, .. }) => {
                assert_eq!(iters, 1);
                assert!(last >= 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
