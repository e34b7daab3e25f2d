//! Roots-of-unity decomposition of the alternating-sign vector and of
//! phi_prime, plus the harmonic sum controlling its spectral norm.
//!
//! With omega = e^{2 pi i / p}, the length-p vector a_s = (-1)^s expands in
//! the Fourier basis b_l (columns of [omega^{jk}]) with coefficients
//! (2/sqrt(p)) / (1 + omega^{-l}); summing the correspondingly scaled
//! submatrices of [omega_l^{jk}] reproduces phi_prime entrywise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::zp::GroupSpec;

/// omega^s for s in 0..p, each entry from its own polar form (no drift).
fn root_powers(p: u64) -> Vec<Complex64> {
    let step = std::f64::consts::TAU / p as f64;
    (0..p)
        .map(|s| Complex64::from_polar(1.0, step * s as f64))
        .collect()
}

/// Coefficient of the sign vector on the l-th Fourier basis vector:
/// (2/sqrt(p)) / (1 + omega^{-l}). Never singular for odd p.
pub fn fourier_coefficient(group: GroupSpec, ell: u64) -> Complex64 {
    let p = group.p();
    debug_assert!(ell < p);
    let step = std::f64::consts::TAU / p as f64;
    let omega_neg_ell = Complex64::from_polar(1.0, -step * (ell as f64));
    Complex64::new(2.0 / (p as f64).sqrt(), 0.0) / (Complex64::new(1.0, 0.0) + omega_neg_ell)
}

/// Reconstructs the sign vector a_s = (-1)^s from its Fourier expansion
/// and returns the largest absolute residual |a_hat_s - (-1)^s|.
pub fn sign_vector_residual(group: GroupSpec) -> f64 {
    let p = group.p();
    let reconstructed = reconstruct_sign_vector(group);
    let mut worst = 0.0f64;
    for (s, val) in reconstructed.iter().enumerate().take(p as usize) {
        let target = if s & 1 == 0 { 1.0 } else { -1.0 };
        let dev = (val - Complex64::new(target, 0.0)).norm();
        worst = worst.max(dev);
    }
    worst
}

/// a_hat_s = sum_l (2/p) / (1 + omega^{-l}) * omega^{l s}, for s in 0..p.
fn reconstruct_sign_vector(group: GroupSpec) -> Vec<Complex64> {
    let p = group.p();
    let powers = root_powers(p);
    let scale = 1.0 / (p as f64).sqrt();
    // coefficient already carries 2/sqrt(p); b_l entries need another 1/sqrt(p)
    // to be the orthonormal e_l, i.e. total weight (2/p)/(1+omega^{-l}).
    let coeffs: Vec<Complex64> = (0..p)
        .map(|l| fourier_coefficient(group, l) * scale)
        .collect();
    (0..p)
        .map(|s| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, c) in coeffs.iter().enumerate() {
                let idx = ((l as u64) * s) % p;
                acc += c * powers[idx as usize];
            }
            acc
        })
        .collect()
}

/// Result of reassembling phi_prime from the scaled Fourier submatrices.
#[derive(Debug)]
pub struct PhiPrimeReconstruction {
    pub order: usize,
    pub entries: Vec<Complex64>,
    pub max_real_deviation: f64,
    pub max_imag: f64,
}

impl PhiPrimeReconstruction {
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.order + col]
    }
}

/// Sums the p scaled submatrices Omega_l (the [omega_l^{jk}] matrices with
/// first row and column deleted) and verifies the result against the sign
/// matrix entrywise within `tol`.
pub fn reconstruct_phi_prime(group: GroupSpec, tol: f64) -> Result<PhiPrimeReconstruction> {
    let p = group.p();
    let m = (p - 1) as usize;
    // Omega_l entry (j,k) is omega^{l * jk}, so the per-entry sum only
    // depends on jk mod p and equals the reconstructed sign vector there.
    let values = reconstruct_sign_vector(group);
    let mut entries = Vec::with_capacity(m * m);
    let mut max_real_deviation = 0.0f64;
    let mut max_imag = 0.0f64;
    for j in 1..p {
        let mut s = 0u64;
        for _k in 1..p {
            s += j;
            if s >= p {
                s -= p;
            }
            let v = values[s as usize];
            let target = if s & 1 == 0 { 1.0 } else { -1.0 };
            max_real_deviation = max_real_deviation.max((v.re - target).abs());
            max_imag = max_imag.max(v.im.abs());
            entries.push(v);
        }
    }
    let worst = max_real_deviation.max(max_imag);
    if worst > tol {
        return Err(Error::Verification {
            what: format!("phi_prime reconstruction at p={p}"),
            max_deviation: worst,
        });
    }
    Ok(PhiPrimeReconstruction {
        order: m,
        entries,
        max_real_deviation,
        max_imag,
    })
}

/// S(p) = sum_{l=0}^{p-1} (2/p) / |1 + omega^l|; grows like log p.
pub fn harmonic_sum(group: GroupSpec) -> f64 {
    let p = group.p();
    let powers = root_powers(p);
    let scale = 2.0 / p as f64;
    powers
        .iter()
        .map(|w| scale / (Complex64::new(1.0, 0.0) + w).norm())
        .sum()
}

/// Top singular value of Omega_l (l in Z_p^*) by complex power iteration
/// on the Gram matrix. Used to confirm ||Omega_l|| <= sqrt(p).
pub fn omega_submatrix_norm(
    group: GroupSpec,
    ell: u64,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<f64> {
    let p = group.p();
    if ell == 0 || ell >= p {
        return Err(Error::Domain(format!(
            "submatrix index must lie in Z_p^*, got {ell}"
        )));
    }
    let m = (p - 1) as usize;
    let powers = root_powers(p);
    // (Omega_l v)_j = sum_k omega^{(l j k) mod p} v_k, walked incrementally.
    let apply = |conjugate: bool, x: &[Complex64], out: &mut [Complex64]| {
        for (idx, o) in out.iter_mut().enumerate() {
            let j = idx as u64 + 1;
            let step = (ell as u128 * j as u128 % p as u128) as u64;
            let mut s = 0u64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &v in x {
                s += step;
                if s >= p {
                    s -= p;
                }
                let w = powers[s as usize];
                acc += if conjugate { w.conj() * v } else { w * v };
            }
            *o = acc;
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..m)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    let mut lambda_prev = -1.0f64;
    for it in 1..=max_iters {
        apply(false, &v, &mut y);
        // Omega_l is symmetric, so the adjoint is the conjugate
        apply(true, &y, &mut w);
        let lambda: f64 = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let wn = norm(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if it >= 2 && (lambda - lambda_prev).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok(lambda.max(0.0).sqrt());
        }
        lambda_prev = lambda;
    }
    Err(Error::Convergence {
        iters: max_iters,
        last: lambda_prev.max(0.0).sqrt(),
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_phi_prime, DEFAULT_DENSE_LIMIT};
    use crate::zp::{primes_in_range, GroupSpec};

    fn group(p: u64) -> GroupSpec {
        GroupSpec::new(p).unwrap()
    }

    #[test]
    fn coefficient_at_zero_is_real() {
        for p in [3u64, 11, 101] {
            let c = fourier_coefficient(group(p), 0);
            let expect = 1.0 / (p as f64).sqrt();
            assert!((c.re - expect).abs() < 1e-15 && c.im.abs() < 1e-15);
        }
    }

    #[test]
    fn coefficient_matches_direct_sum() {
        // oracle: (1/sqrt(p)) sum_x omega^{-x l} (-1)^x by direct summation
        for p in primes_in_range(3, 101) {
            let g = group(p);
            let step = std::f64::consts::TAU / p as f64;
            for l in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..p {
                    let sign = if x & 1 == 0 { 1.0 } else { -1.0 };
                    acc += Complex64::from_polar(sign, -step * ((x * l % p) as f64));
                }
                acc /= (p as f64).sqrt();
                let c = fourier_coefficient(g, l);
                assert!(
                    (acc - c).norm() <= 1e-12,
                    "p={p}, l={l}: direct {acc} vs formula {c}"
                );
            }
        }
    }

    #[test]
    fn sign_vector_reconstruction_tight() {
        for p in primes_in_range(3, 101) {
            let r = sign_vector_residual(group(p));
            assert!(r <= 1e-10, "p={p}: residual {r:e}");
        }
    }

    #[test]
    fn phi_prime_reconstruction_small() {
        let rec = reconstruct_phi_prime(group(3), 1e-9).unwrap();
        assert!((rec.entry(0, 0).re - -1.0).abs() <= 1e-9);
        assert!((rec.entry(0, 1).re - 1.0).abs() <= 1e-9);
        assert!((rec.entry(1, 0).re - 1.0).abs() <= 1e-9);
        assert!((rec.entry(1, 1).re - -1.0).abs() <= 1e-9);

        for p in [11u64, 101] {
            let rec = reconstruct_phi_prime(group(p), 1e-9).unwrap();
            let m = build_phi_prime(group(p), DEFAULT_DENSE_LIMIT).unwrap();
            for j in 0..rec.order {
                for k in 0..rec.order {
                    assert!((rec.entry(j, k).re - m.entry(j, k)).abs() <= 1e-9);
                }
            }
            assert!(rec.max_imag <= 1e-9, "p={p}: imag {:e}", rec.max_imag);
        }
    }

    #[test]
    fn reconstruction_reports_excess_deviation() {
        match reconstruct_phi_prime(group(11), 1e-18) {
            Err(Error::Verification { max_deviation, .. }) => assert!(max_deviation > 1e-18),
            other => panic!("expected verification error, got {other:?}"),
        }
    }

    #[test]
    fn harmonic_sum_p3_closed_form() {
        // |1 + omega^l| = 2|cos(pi l / 3)| gives (2/3)(1/2 + 1 + 1) = 5/3
        let s = harmonic_sum(group(3));
        assert!((s - 5.0 / 3.0).abs() < 1e-12, "S(3) = {s}");
    }

    #[test]
    fn harmonic_sum_matches_cosine_form() {
        for p in primes_in_range(3, 503) {
            let s = harmonic_sum(group(p));
            let by_cos: f64 = (0..p)
                .map(|l| {
                    let c = (std::f64::consts::PI * l as f64 / p as f64).cos().abs();
                    (2.0 / p as f64) / (2.0 * c)
                })
                .sum();
            assert!((s - by_cos).abs() <= 1e-9 * by_cos, "p={p}");
        }
    }

    #[test]
    fn submatrix_norms_within_sqrt_p() {
        for p in [11u64, 101] {
            let g = group(p);
            for ell in [1u64, 2, p - 1] {
                let s = omega_submatrix_norm(g, ell, 1e-10, 100_000, 3).unwrap();
                assert!(
                    s <= (p as f64).sqrt() * (1.0 + 1e-8),
                    "p={p}, l={ell}: {s} > sqrt(p)"
                );
                // deleting one row/col of a sqrt(p)-unitary leaves most of it
                assert!(s >= (p as f64).sqrt() * 0.5);
            }
        }
        assert!(omega_submatrix_norm(group(11), 0, 1e-10, 100, 3).is_err());
    }
}
