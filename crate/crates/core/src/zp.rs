//! Exact modular arithmetic in (Z_p, +), primality testing, and the
//! additive-group discrete logarithm with its parity bit.
//!
//! All arithmetic is 64-bit with 128-bit intermediates, so every value is
//! exact. The discrete log in the additive group is `a^{-1} x mod p`,
//! computed through the extended Euclidean algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Moduli must stay below 2^63 so products fit in u128 and the dlog
/// representative fits in i64 range.
pub const MAX_MODULUS: u64 = 1 << 63;

/// A prime p > 2 identifying the additive cyclic group (Z_p, +).
///
/// Construction runs a deterministic primality test; a `GroupSpec` in hand
/// is proof that p is an odd prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    p: u64,
}

/// An element of Z_p, tagged with its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZpElement {
    value: u64,
    group: GroupSpec,
}

impl GroupSpec {
    pub fn new(p: u64) -> Result<Self> {
        if p <= 2 {
            return Err(Error::Domain(format!(
                "group order must be an odd prime > 2, got {p}"
            )));
        }
        if p >= MAX_MODULUS {
            return Err(Error::Range(format!("modulus {p} does not fit below 2^63")));
        }
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        Ok(GroupSpec { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// |Z_p^*| = p - 1.
    #[inline]
    pub fn unit_count(&self) -> u64 {
        self.p - 1
    }

    /// Number of bits of p.
    pub fn bitlength(&self) -> u32 {
        64 - self.p.leading_zeros()
    }

    pub fn element(&self, value: u64) -> Result<ZpElement> {
        if value >= self.p {
            return Err(Error::Domain(format!(
                "{value} is not a canonical element of Z_{}",
                self.p
            )));
        }
        Ok(ZpElement {
            value,
            group: *self,
        })
    }

    /// A nonzero element (member of Z_p^*).
    pub fn unit(&self, value: u64) -> Result<ZpElement> {
        if value == 0 {
            return Err(Error::Domain("0 is not a unit".into()));
        }
        self.element(value)
    }

    /// Iterator over Z_p^* = {1, ..., p-1}.
    pub fn units(&self) -> impl Iterator<Item = u64> {
        1..self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    /// Multiplicative inverse of a nonzero element, via extended Euclid.
    pub fn mod_inverse(&self, a: u64) -> Result<u64> {
        if a == 0 || a >= self.p {
            return Err(Error::Domain(format!(
                "mod_inverse needs 1 <= a < p, got a={a}, p={}",
                self.p
            )));
        }
        let (g, s, _) = ext_gcd(a, self.p)?;
        debug_assert_eq!(g, 1, "p prime and 0 < a < p imply gcd 1");
        let p = self.p as i128;
        Ok(((s % p + p) % p) as u64)
    }

    /// Discrete log of x to base a in (Z_p, +): the unique k in [1, p-1]
    /// with k*a = x (mod p), i.e. k = a^{-1} x mod p.
    pub fn additive_dlog(&self, base: u64, x: u64) -> Result<u64> {
        if x == 0 || x >= self.p {
            return Err(Error::Domain(format!(
                "dlog argument must lie in Z_p^*, got x={x}"
            )));
        }
        let inv = self.mod_inverse(base)?;
        Ok(self.mul(inv, x))
    }

    /// (-1)^{log_a x}, the parity bit of the discrete logarithm.
    pub fn parity_bit(&self, base: u64, x: u64) -> Result<i32> {
        let k = self.additive_dlog(base, x)?;
        Ok(if k & 1 == 0 { 1 } else { -1 })
    }
}

impl ZpElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn inverse(&self) -> Result<ZpElement> {
        let v = self.group.mod_inverse(self.value)?;
        Ok(ZpElement {
            value: v,
            group: self.group,
        })
    }
}

/// Extended Euclidean algorithm: returns (g, s, t) with s*a + t*b = g = gcd(a, b).
///
/// Any valid Bezout pair may be returned; callers check the identity, not
/// particular coefficients.
pub fn ext_gcd(a: u64, b: u64) -> Result<(u64, i128, i128)> {
    if a == 0 && b == 0 {
        return Err(Error::Domain("gcd(0, 0) is undefined".into()));
    }
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    Ok((r0 as u64, s0, t0))
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin valid for the full 64-bit range.
///
/// The witness set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} decides
/// primality for every n < 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes in [lo, hi], ascending.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}

/// Uniformly samples a prime from [2^{n-1}, 2^n - 1] by seeded rejection
/// sampling. Deterministic for a fixed seed.
///
/// n = 2 is degenerate (the only admissible prime is 3; 2 itself is
/// rejected at GroupSpec construction).
pub fn sample_prime_in_bitlength(bits: u32, seed: u64) -> Result<GroupSpec> {
    if bits < 2 {
        return Err(Error::Domain(format!(
            "no odd prime has bitlength {bits}"
        )));
    }
    if bits > 63 {
        return Err(Error::Range(format!(
            "bitlength {bits} exceeds the native 63-bit modulus cap"
        )));
    }
    let lo = 1u64 << (bits - 1);
    let hi = (1u64 << bits) - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Prime density in the interval is ~1/(bits ln 2); 100k draws cannot
    // realistically miss.
    for _ in 0..100_000 {
        let cand = rng.gen_range(lo..=hi);
        if cand > 2 && is_prime(cand) {
            return GroupSpec::new(cand);
        }
    }
    Err(Error::Domain(format!(
        "found no prime in [2^{}, 2^{} - 1]",
        bits - 1,
        bits
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ext_gcd_worked_examples() {
        // Bezout identity check; the particular coefficients are free.
        let (g, s, t) = ext_gcd(2, 11).unwrap();
        assert_eq!(g, 1);
        assert_eq!(s * 2 + t * 11, 1);

        let (g, s, t) = ext_gcd(11, 11).unwrap();
        assert_eq!(g, 11);
        assert_eq!(s * 11 + t * 11, 11);

        assert_eq!(ext_gcd(0, 7).unwrap(), (7, 0, 1));
        assert!(ext_gcd(0, 0).is_err());
    }

    proptest! {
        #[test]
        fn ext_gcd_bezout_identity(a in 0u64..1_000_000, b in 0u64..1_000_000) {
            prop_assume!(a != 0 || b != 0);
            let (g, s, t) = ext_gcd(a, b).unwrap();
            prop_assert_eq!(s * a as i128 + t * b as i128, g as i128);
            prop_assert!(a == 0 || g % gcd_oracle(a, b) == 0 && gcd_oracle(a, b) % g == 0);
        }
    }

    fn gcd_oracle(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    #[test]
    fn mod_inverse_examples() {
        let g11 = GroupSpec::new(11).unwrap();
        assert_eq!(g11.mod_inverse(2).unwrap(), 6);
        assert_eq!(g11.mod_inverse(1).unwrap(), 1);
        assert_eq!(g11.mod_inverse(10).unwrap(), 10); // (-1)^2 = 1
        assert!(g11.mod_inverse(0).is_err());
        for p in primes_in_range(3, 200) {
            let g = GroupSpec::new(p).unwrap();
            for a in g.units() {
                let inv = g.mod_inverse(a).unwrap();
                assert_eq!(g.mul(a, inv), 1);
                assert_eq!(g.mod_inverse(inv).unwrap(), a, "involution at p={p}");
            }
        }
    }

    #[test]
    fn primality_examples() {
        assert!(is_prime(11));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(2));
        assert!(is_prime(524_287)); // 2^19 - 1
        // trial-division oracle
        for n in 0u64..2_000 {
            let by_trial = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), by_trial, "n={n}");
        }
        // a strong-pseudoprime trap: 3215031751 fools bases {2,3,5,7}
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn group_spec_rejects_degenerates() {
        assert!(GroupSpec::new(2).is_err());
        assert!(GroupSpec::new(1).is_err());
        assert!(GroupSpec::new(9).is_err());
        assert!(GroupSpec::new(u64::MAX).is_err());
    }

    #[test]
    fn prime_sampling_examples() {
        // enumeration oracles for the target intervals
        assert_eq!(primes_in_range(8, 15), vec![11, 13]);
        assert_eq!(primes_in_range(4, 7), vec![5, 7]);
        for seed in 0..50 {
            let p = sample_prime_in_bitlength(4, seed).unwrap().p();
            assert!(p == 11 || p == 13);
            let p = sample_prime_in_bitlength(3, seed).unwrap().p();
            assert!(p == 5 || p == 7);
            assert_eq!(sample_prime_in_bitlength(2, seed).unwrap().p(), 3);
        }
        // determinism
        assert_eq!(
            sample_prime_in_bitlength(20, 7).unwrap(),
            sample_prime_in_bitlength(20, 7).unwrap()
        );
        assert!(sample_prime_in_bitlength(64, 0).is_err());
        assert!(sample_prime_in_bitlength(1, 0).is_err());
        // both primes of the interval actually occur across seeds
        let hits: std::collections::HashSet<u64> = (0..50)
            .map(|s| sample_prime_in_bitlength(4, s).unwrap().p())
            .collect();
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn dlog_worked_example() {
        let g = GroupSpec::new(11).unwrap();
        assert_eq!(g.additive_dlog(2, 3).unwrap(), 7);
        assert_eq!(g.additive_dlog(2, 2).unwrap(), 1);
        assert_eq!(g.additive_dlog(2, 5).unwrap(), 8);
        assert!(g.additive_dlog(2, 0).is_err());
        assert!(g.additive_dlog(0, 3).is_err());
        // full inversion of the k*a table at a=2
        for k in 1..11u64 {
            let x = g.mul(k, 2);
            assert_eq!(g.additive_dlog(2, x).unwrap(), k);
        }
    }

    #[test]
    fn parity_bit_examples() {
        let g = GroupSpec::new(11).unwrap();
        assert_eq!(g.parity_bit(2, 3).unwrap(), -1); // log = 7, odd
        assert_eq!(g.parity_bit(2, 2).unwrap(), -1); // log = 1
        for p in primes_in_range(3, 200) {
            let g = GroupSpec::new(p).unwrap();
            for a in g.units() {
                let sum: i64 = g.units().map(|x| g.parity_bit(a, x).unwrap() as i64).sum();
                assert_eq!(sum, 0, "parity sum at p={p}, a={a}");
            }
        }
    }

    #[test]
    fn dlog_round_trip_exhaustive() {
        for p in primes_in_range(3, 200) {
            let g = GroupSpec::new(p).unwrap();
            for a in g.units() {
                for k in g.units() {
                    let x = g.mul(k, a);
                    assert_eq!(g.additive_dlog(a, x).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn dlog_matches_brute_force() {
        // oracle: try every k until k*a = x
        for p in primes_in_range(3, 97) {
            let g = GroupSpec::new(p).unwrap();
            for a in g.units() {
                for x in g.units() {
                    let k = g.additive_dlog(a, x).unwrap();
                    let brute = (1..p).find(|&c| g.mul(c, a) == x).unwrap();
                    assert_eq!(k, brute);
                    assert!(k >= 1 && k < p);
                }
            }
        }
    }

    #[test]
    fn element_wrappers() {
        let g = GroupSpec::new(11).unwrap();
        let a = g.unit(2).unwrap();
        assert_eq!(a.inverse().unwrap().value(), 6);
        assert!(g.unit(0).is_err());
        assert!(g.element(11).is_err());
        assert!(!a.is_zero());
        assert_eq!(a.group().p(), 11);
    }
}
