//! Integer utilities shared across the crate: deterministic primality for u64,
//! Miller-Rabin for big integers, Brent-Pollard rho factorization with a trial
//! division front end, CRT combination, and small modular helpers.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

use crate::error::Error;

pub fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u64(acc, b, m);
        }
        b = mulmod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Modular inverse of `a` mod `m` for gcd(a, m) = 1.
pub fn invmod_u64(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// Legendre symbol (a|p) for odd prime p, returned as 1, -1, or 0.
pub fn legendre(a: i64, p: u64) -> i32 {
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    let s = powmod_u64(r, (p - 1) / 2, p);
    if s == 1 {
        1
    } else {
        -1
    }
}

fn miller_rabin_u64(n: u64, base: u64) -> bool {
    // n odd, n > 2, base reduced mod n and nonzero.
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    let mut x = powmod_u64(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mulmod_u64(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality for u64 via the standard 12-base Miller-Rabin set.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
        .iter()
        .all(|&b| miller_rabin_u64(n, b))
}

fn miller_rabin_big(n: &BigUint, base: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = base.modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

/// Primality test: deterministic below 2^64, 40-round Miller-Rabin with
/// deterministically derived bases above.
pub fn is_prime_big(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    if n.is_even() {
        return false;
    }
    for p in [3u32, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        if (n % p).is_zero() {
            return false;
        }
    }
    // Deterministic base schedule keeps certificates reproducible.
    let mut base = BigUint::from(2u32);
    for i in 0..40u32 {
        if !miller_rabin_big(n, &base) {
            return false;
        }
        base = (&base * BigUint::from(0x9e3779b97f4a7c15u64) + BigUint::from(i)) % (n - 3u32)
            + BigUint::from(2u32);
    }
    true
}

fn brent_rho(n: &BigUint) -> Option<BigUint> {
    // Brent's variant of Pollard rho; deterministic constant schedule.
    let one = BigUint::one();
    for c in 1u32..20 {
        let cc = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &cc) % n;
        let mut y = BigUint::from(2u32);
        let mut g = BigUint::one();
        let mut q = BigUint::one();
        let (mut x, mut ys) = (y.clone(), y.clone());
        let mut r: u64 = 1;
        let m: u64 = 128;
        'outer: while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0u64;
            while k < r && g == one {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    if diff.is_zero() {
                        break 'outer;
                    }
                    q = (&q * diff) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            r *= 2;
            if r > 1 << 22 {
                break;
            }
        }
        if g == one || g == *n {
            // Backtrack for the lost factor.
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                if diff.is_zero() {
                    break;
                }
                g = diff.gcd(n);
                if g != one {
                    break;
                }
            }
        }
        if g != one && g != *n {
            return Some(g);
        }
    }
    None
}

pub const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

/// Full factorization of n > 0: trial division up to 10^6, then Brent rho on
/// the cofactor. An unfactored composite cofactor is an error so that callers
/// can surface an `undetermined` verdict instead of a wrong certificate.
pub fn factor(n: &BigUint) -> Result<BTreeMap<BigUint, u32>, Error> {
    let mut out = BTreeMap::new();
    if n.is_zero() {
        return Err(Error::FactorZero);
    }
    let mut rem = n.clone();
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_BOUND {
        if rem.is_one() {
            return Ok(out);
        }
        let pb = BigUint::from(p);
        if (&pb * &pb) > rem {
            break;
        }
        while (&rem % &pb).is_zero() {
            rem /= &pb;
            *out.entry(pb.clone()).or_insert(0) += 1;
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    let mut stack = vec![rem];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_prime_big(&m) {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        match brent_rho(&m) {
            Some(d) => {
                stack.push(&m / &d);
                stack.push(d);
            }
            None => return Err(Error::UnfactoredCofactor(m.to_string())),
        }
    }
    Ok(out)
}

/// Prime divisors of |n| as u64, smallest first.
pub fn prime_support(n: &BigInt) -> Result<Vec<u64>, Error> {
    let fac = factor(&n.abs().to_biguint().unwrap())?;
    fac.keys()
        .map(|p| p.to_u64().ok_or(Error::UnfactoredCofactor(p.to_string())))
        .collect()
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let u = n.to_biguint().unwrap();
    let r = u.sqrt();
    &r * &r == u
}

/// One CRT step: solve x ≡ r1 (mod m1), x ≡ r2 (mod m2). Moduli need not be
/// coprime; None means the two congruences are inconsistent.
pub fn crt_pair(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> Option<(BigInt, BigInt)> {
    let g = m1.gcd(m2);
    if ((r2 - r1) % &g) != BigInt::zero() {
        return None;
    }
    let lcm = m1 / &g * m2;
    // r1 + m1 * t with t ≡ (r2 - r1)/g * inv(m1/g) mod (m2/g)
    let m1g = m1 / &g;
    let m2g = m2 / &g;
    let diff = (r2 - r1) / &g;
    let inv = modinv_big(&m1g, &m2g)?;
    let t = (diff * inv).mod_floor(&m2g);
    let x = (r1 + m1 * t).mod_floor(&lcm);
    Some((x, lcm))
}

pub fn modinv_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Iterator over rational primes in increasing order (trial-tested; fine for
/// the norm ranges the certifiers scan).
pub fn primes_from(start: u64) -> impl Iterator<Item = u64> {
    (start.max(2)..).filter(|&n| is_prime_u64(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn primality_small_and_carmichael() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(37012153));
        assert!(!is_prime_u64(561)); // Carmichael
        assert!(!is_prime_u64(1));
        assert!(is_prime_big(&BigUint::parse_bytes(b"37012153", 10).unwrap()));
    }

    #[test]
    fn factor_recovers_known_products() {
        let n = BigUint::from_u64(618889059855).unwrap();
        let fac = factor(&n).unwrap();
        let support: Vec<u64> = fac.keys().map(|p| p.to_u64().unwrap()).collect();
        assert_eq!(support, vec![3, 5, 11, 17, 113, 787, 827]);
        assert_eq!(fac[&BigUint::from(3u32)], 2);
    }

    #[test]
    fn factor_large_semiprime() {
        // 37012153 * 1315849, both prime, both beyond naive scanning comfort.
        let n = BigUint::from_u64(37012153) .unwrap()* BigUint::from_u64(1315849).unwrap();
        let fac = factor(&n).unwrap();
        assert_eq!(fac.len(), 2);
        assert!(fac.contains_key(&BigUint::from_u64(1315849).unwrap()));
    }

    #[test]
    fn crt_consistency_and_conflict() {
        let (x, m) = crt_pair(
            &BigInt::from(5),
            &BigInt::from(12),
            &BigInt::from(17),
            &BigInt::from(47),
        )
        .unwrap();
        assert_eq!(m, BigInt::from(564));
        assert_eq!(x.mod_floor(&BigInt::from(12)), BigInt::from(5));
        assert_eq!(x.mod_floor(&BigInt::from(47)), BigInt::from(17));
        // Overlapping moduli must agree on the overlap.
        assert!(crt_pair(
            &BigInt::from(1),
            &BigInt::from(6),
            &BigInt::from(2),
            &BigInt::from(4)
        )
        .is_none());
    }

    #[test]
    fn legendre_matches_square_table() {
        let squares: Vec<u64> = (1..31u64).map(|x| x * x % 31).collect();
        for a in 1..31i64 {
            let expect = if squares.contains(&(a as u64)) { 1 } else { -1 };
            assert_eq!(legendre(a, 31), expect);
        }
        assert_eq!(legendre(0, 31), 0);
        assert_eq!(legendre(3, 31), -1);
        assert_eq!(legendre(14, 31), 1);
    }

    #[test]
    fn perfect_squares() {
        assert!(is_perfect_square(&BigInt::from(81)));
        assert!(!is_perfect_square(&BigInt::from(-81)));
        assert!(!is_perfect_square(&BigInt::from(31)));
    }
}
