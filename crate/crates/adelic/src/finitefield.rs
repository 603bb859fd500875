//! Arithmetic in F_q = F_{p^f} for f <= 3, with coefficients held as u64 mod p.
//!
//! Everything here is sized for the point-counting and witness-scan loops:
//! exponentiation-based square tests, Tonelli-Shanks square roots, root
//! finding for polynomials of degree <= 3 (exhaustive for q <= 4096, gcd with
//! x^q - x and equal-degree splitting beyond), and the trace recurrence that
//! extends Frobenius data to extension fields.

use num_bigint::BigInt;
use num_traits::One;

use crate::arith::{is_prime_u64, mulmod_u64};
use crate::error::{Error, Result};

pub const EXHAUSTIVE_ROOTS_CEILING: u64 = 4096;

/// Field spec: characteristic, degree, and the monic modulus polynomial
/// (coefficients low-to-high of length f+1; ignored content for f = 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqSpec {
    pub p: u64,
    pub f: u8,
    pub modulus: Vec<u64>,
}

/// Element as coefficient vector c0 + c1 t + c2 t^2 (top coords zero when the
/// degree is smaller).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FqElem {
    pub c: [u64; 3],
}

impl FqSpec {
    pub fn new(p: u64, f: u8, modulus: Vec<u64>) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if !(1..=3).contains(&f) {
            return Err(Error::Config(format!("residue degree {f} out of range")));
        }
        let modulus = if f == 1 {
            vec![0, 1]
        } else {
            let m: Vec<u64> = modulus.iter().map(|c| c % p).collect();
            if m.len() != f as usize + 1 || *m.last().unwrap() != 1 {
                return Err(Error::Config("modulus must be monic of degree f".into()));
            }
            m
        };
        let spec = FqSpec { p, f, modulus };
        if f > 1 && spec.modulus_has_root() {
            // Degree 2 and 3 polynomials are irreducible iff they have no root.
            return Err(Error::Config("modulus is reducible".into()));
        }
        Ok(spec)
    }

    fn modulus_has_root(&self) -> bool {
        if self.p <= EXHAUSTIVE_ROOTS_CEILING {
            (0..self.p).any(|x| poly_eval(&self.modulus, x, self.p) == 0)
        } else {
            // gcd(x^p - x, m) has positive degree iff m has a root.
            let xp = powmod_poly_x(self.p, &self.modulus, self.p);
            let x = vec![0, 1];
            let diff = poly_sub(&xp, &x, self.p);
            poly_deg(&poly_gcd(&diff, &self.modulus, self.p)) > 0
        }
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.f as u32)
    }

    pub fn zero(&self) -> FqElem {
        FqElem { c: [0, 0, 0] }
    }

    pub fn one(&self) -> FqElem {
        FqElem { c: [1 % self.p, 0, 0] }
    }

    pub fn scalar(&self, n: u64) -> FqElem {
        FqElem {
            c: [n % self.p, 0, 0],
        }
    }

    pub fn scalar_int(&self, n: &BigInt) -> FqElem {
        let p = BigInt::from(self.p);
        let r = ((n % &p) + &p) % &p;
        self.scalar(r.to_u64_digits().1.first().copied().unwrap_or(0))
    }

    pub fn from_coords(&self, c: &[u64]) -> FqElem {
        let mut out = [0u64; 3];
        for (i, v) in c.iter().take(self.f as usize).enumerate() {
            out[i] = v % self.p;
        }
        FqElem { c: out }
    }

    pub fn is_zero(&self, a: &FqElem) -> bool {
        a.c.iter().all(|&x| x == 0)
    }

    pub fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let mut c = [0u64; 3];
        for i in 0..3 {
            c[i] = (a.c[i] + b.c[i]) % self.p;
        }
        FqElem { c }
    }

    pub fn neg(&self, a: &FqElem) -> FqElem {
        let mut c = [0u64; 3];
        for i in 0..3 {
            c[i] = (self.p - a.c[i]) % self.p;
        }
        FqElem { c }
    }

    pub fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let p = self.p;
        let f = self.f as usize;
        if f == 1 {
            return FqElem {
                c: [mulmod_u64(a.c[0], b.c[0], p), 0, 0],
            };
        }
        // Schoolbook product, then reduce by the monic modulus. Coefficient
        // products fit u128 comfortably (p <= 2^26 in all counting paths, and
        // mulmod keeps everything reduced regardless).
        let mut prod = [0u64; 5];
        for i in 0..f {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..f {
                prod[i + j] = (prod[i + j] + mulmod_u64(a.c[i], b.c[j], p)) % p;
            }
        }
        for k in (f..=2 * (f - 1)).rev() {
            let lead = prod[k];
            if lead == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..f {
                let sub = mulmod_u64(lead, self.modulus[i], p);
                prod[k - f + i] = (prod[k - f + i] + p - sub) % p;
            }
        }
        FqElem {
            c: [prod[0], prod[1], prod[2]],
        }
    }

    pub fn pow(&self, a: &FqElem, mut e: u64) -> FqElem {
        let mut base = *a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn inv(&self, a: &FqElem) -> Result<FqElem> {
        if self.is_zero(a) {
            return Err(Error::NotInvertible);
        }
        Ok(self.pow(a, self.q() - 2))
    }

    /// Index encoding c0 + c1 p + c2 p^2, used for deterministic iteration.
    pub fn decode(&self, idx: u64) -> FqElem {
        let p = self.p;
        FqElem {
            c: [idx % p, (idx / p) % p, (idx / (p * p)) % p],
        }
    }

    pub fn iter_elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        (0..self.q()).map(move |i| self.decode(i))
    }
}

// --- quadratic character -----------------------------------------------------

/// Euler-criterion square test: a^((q-1)/2) = 1. Errors on zero so callers
/// report that case separately; constant true in characteristic 2 where every
/// element is a square.
pub fn euler_is_square(spec: &FqSpec, a: &FqElem) -> Result<bool> {
    if spec.is_zero(a) {
        return Err(Error::ZeroElement);
    }
    if spec.p == 2 {
        return Ok(true);
    }
    let s = spec.pow(a, (spec.q() - 1) / 2);
    Ok(s == spec.one())
}

/// First non-square in index order; deterministic witness for Tonelli-Shanks.
fn first_nonresidue(spec: &FqSpec) -> FqElem {
    for i in 1..spec.q() {
        let e = spec.decode(i);
        if !euler_is_square(spec, &e).unwrap() {
            return e;
        }
    }
    unreachable!("odd q has non-squares")
}

/// Square root by Tonelli-Shanks (odd q); None when a is not a square.
pub fn fq_sqrt(spec: &FqSpec, a: &FqElem) -> Option<FqElem> {
    if spec.is_zero(a) {
        return Some(*a);
    }
    if spec.p == 2 {
        // q <= 8 in every path that reaches characteristic 2; x -> x^2 is a
        // bijection, so the root is a^(q/2).
        return Some(spec.pow(a, spec.q() / 2));
    }
    if !euler_is_square(spec, a).unwrap() {
        return None;
    }
    let q = spec.q();
    let s = (q - 1).trailing_zeros() as u64;
    let m = (q - 1) >> s;
    if s == 1 {
        // q ≡ 3 mod 4
        return Some(spec.pow(a, (q + 1) / 4));
    }
    let z = first_nonresidue(spec);
    let mut c = spec.pow(&z, m);
    let mut t = spec.pow(a, m);
    let mut r = spec.pow(a, (m + 1) / 2);
    let mut k = s;
    while t != spec.one() {
        // Find least i with t^(2^i) = 1.
        let mut i = 0u64;
        let mut t2 = t;
        while t2 != spec.one() {
            t2 = spec.mul(&t2, &t2);
            i += 1;
        }
        let b = spec.pow(&c, 1 << (k - i - 1));
        r = spec.mul(&r, &b);
        c = spec.mul(&b, &b);
        t = spec.mul(&t, &c);
        k = i;
    }
    Some(r)
}

// --- dense polynomials over F_q ----------------------------------------------

pub(crate) fn fq_poly_normalize(spec: &FqSpec, v: &mut Vec<FqElem>) {
    while v.len() > 1 && spec.is_zero(v.last().unwrap()) {
        v.pop();
    }
}

pub(crate) fn fq_poly_eval(spec: &FqSpec, f: &[FqElem], x: &FqElem) -> FqElem {
    let mut acc = spec.zero();
    for c in f.iter().rev() {
        acc = spec.add(&spec.mul(&acc, x), c);
    }
    acc
}

fn fq_poly_rem(spec: &FqSpec, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
    let mut r: Vec<FqElem> = a.to_vec();
    fq_poly_normalize(spec, &mut r);
    let mut bb = b.to_vec();
    fq_poly_normalize(spec, &mut bb);
    let d = bb.len() - 1;
    if d == 0 {
        return vec![spec.zero()];
    }
    let lead_inv = spec.inv(bb.last().unwrap()).expect("nonzero divisor");
    while r.len() - 1 >= d && !(r.len() == 1 && spec.is_zero(&r[0])) {
        let k = r.len() - 1;
        let q = spec.mul(&r[k], &lead_inv);
        for i in 0..=d {
            let s = spec.mul(&bb[i], &q);
            r[k - d + i] = spec.sub(&r[k - d + i], &s);
        }
        fq_poly_normalize(spec, &mut r);
    }
    r
}

fn fq_poly_gcd(spec: &FqSpec, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    fq_poly_normalize(spec, &mut x);
    fq_poly_normalize(spec, &mut y);
    while !(y.len() == 1 && spec.is_zero(&y[0])) {
        let r = fq_poly_rem(spec, &x, &y);
        x = y;
        y = r;
    }
    // Make monic for canonical output.
    if !(x.len() == 1 && spec.is_zero(&x[0])) {
        let li = spec.inv(x.last().unwrap()).unwrap();
        for c in x.iter_mut() {
            *c = spec.mul(c, &li);
        }
    }
    x
}

fn fq_poly_mulmod(spec: &FqSpec, a: &[FqElem], b: &[FqElem], m: &[FqElem]) -> Vec<FqElem> {
    let mut prod = vec![spec.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if spec.is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            let t = spec.mul(x, y);
            prod[i + j] = spec.add(&prod[i + j], &t);
        }
    }
    fq_poly_rem(spec, &prod, m)
}

fn fq_poly_powmod(spec: &FqSpec, base: &[FqElem], mut e: u64, m: &[FqElem]) -> Vec<FqElem> {
    let mut b = fq_poly_rem(spec, base, m);
    let mut acc = vec![spec.one()];
    while e > 0 {
        if e & 1 == 1 {
            acc = fq_poly_mulmod(spec, &acc, &b, m);
        }
        e >>= 1;
        if e > 0 {
            b = fq_poly_mulmod(spec, &b, &b, m);
        }
    }
    acc
}

/// Divide f by (x - r), asserting zero remainder; returns the quotient.
fn fq_poly_deflate(spec: &FqSpec, f: &[FqElem], r: &FqElem) -> Vec<FqElem> {
    let mut q = vec![spec.zero(); f.len() - 1];
    let mut carry = spec.zero();
    for i in (0..f.len()).rev() {
        let cur = spec.add(&f[i], &spec.mul(&carry, r));
        if i == 0 {
            debug_assert!(spec.is_zero(&cur), "deflation remainder must vanish");
        } else {
            q[i - 1] = cur;
            carry = cur;
        }
    }
    q
}

fn poly_deg_fq(spec: &FqSpec, f: &[FqElem]) -> usize {
    let mut v = f.to_vec();
    fq_poly_normalize(spec, &mut v);
    v.len() - 1
}

/// Roots in F_q (with multiplicity) of a nonzero polynomial of degree <= 3.
/// Exhaustive scan for q <= 4096; otherwise the linear-factor part is split
/// off with gcd(x^q - x, f) and resolved by quadratic formula or equal-degree
/// splitting with a deterministic shift schedule.
pub fn roots_deg_le3(spec: &FqSpec, f: &[FqElem]) -> Result<Vec<(FqElem, u32)>> {
    let mut fv = f.to_vec();
    fq_poly_normalize(spec, &mut fv);
    if fv.len() == 1 && spec.is_zero(&fv[0]) {
        return Err(Error::ZeroElement);
    }
    if fv.len() - 1 > 3 {
        return Err(Error::Config("degree > 3".into()));
    }
    let mut out: Vec<(FqElem, u32)> = Vec::new();
    let mut push_root = |spec: &FqSpec, fv: &mut Vec<FqElem>, r: FqElem| {
        let mut mult = 0;
        while fv.len() > 1 && spec.is_zero(&fq_poly_eval(spec, fv, &r)) {
            *fv = fq_poly_deflate(spec, fv, &r);
            mult += 1;
        }
        if mult > 0 {
            out.push((r, mult));
        }
    };
    if spec.q() <= EXHAUSTIVE_ROOTS_CEILING {
        for i in 0..spec.q() {
            if fv.len() == 1 {
                break;
            }
            let x = spec.decode(i);
            if spec.is_zero(&fq_poly_eval(spec, &fv, &x)) {
                push_root(spec, &mut fv, x);
            }
        }
        out.sort_by_key(|(r, _)| r.c);
        return Ok(out);
    }
    // Large q: pull out the distinct linear factors first.
    let xq = fq_poly_powmod(spec, &[spec.zero(), spec.one()], spec.q(), &fv);
    let mut xq_minus_x = xq;
    if xq_minus_x.len() < 2 {
        xq_minus_x.resize(2, spec.zero());
    }
    xq_minus_x[1] = spec.sub(&xq_minus_x[1], &spec.one());
    let lin = fq_poly_gcd(spec, &xq_minus_x, &fv);
    let mut lin_roots: Vec<FqElem> = Vec::new();
    match poly_deg_fq(spec, &lin) {
        0 => {}
        1 => lin_roots.push(spec.neg(&spec.mul(&lin[0], &spec.inv(&lin[1]).unwrap()))),
        2 => lin_roots.extend(quadratic_roots(spec, &lin)),
        3 => {
            // Fully split cubic: find one root by equal-degree splitting, then
            // finish with the quadratic formula.
            let r = split_one_root(spec, &lin)?;
            let quad = fq_poly_deflate(spec, &lin, &r);
            lin_roots.push(r);
            lin_roots.extend(quadratic_roots(spec, &quad));
        }
        _ => unreachable!(),
    }
    lin_roots.sort_by_key(|r| r.c);
    lin_roots.dedup();
    for r in lin_roots {
        push_root(spec, &mut fv, r);
    }
    out.sort_by_key(|(r, _)| r.c);
    Ok(out)
}

/// Both roots of a monic-izable quadratic known to split.
fn quadratic_roots(spec: &FqSpec, g: &[FqElem]) -> Vec<FqElem> {
    let a_inv = spec.inv(&g[2]).unwrap();
    let b = spec.mul(&g[1], &a_inv);
    let c = spec.mul(&g[0], &a_inv);
    // x^2 + bx + c: roots (-b ± sqrt(b^2-4c)) / 2
    let disc = spec.sub(&spec.mul(&b, &b), &spec.mul(&spec.scalar(4), &c));
    let s = fq_sqrt(spec, &disc).expect("split quadratic has square discriminant");
    let half = spec.inv(&spec.scalar(2)).unwrap();
    let r1 = spec.mul(&spec.sub(&s, &b), &half);
    let r2 = spec.mul(&spec.sub(&spec.neg(&b), &s), &half);
    vec![r1, r2]
}

/// One root of a fully-split cubic over odd q via (x+a)^((q-1)/2) splitting.
fn split_one_root(spec: &FqSpec, g: &[FqElem]) -> Result<FqElem> {
    debug_assert!(spec.p != 2);
    for shift in 0..spec.q() {
        let a = spec.decode(shift);
        let base = vec![a, spec.one()];
        let mut h = fq_poly_powmod(spec, &base, (spec.q() - 1) / 2, g);
        if h.is_empty() {
            continue;
        }
        h[0] = spec.sub(&h[0], &spec.one());
        let d = fq_poly_gcd(spec, &h, g);
        let deg = poly_deg_fq(spec, &d);
        if deg == 1 {
            return Ok(spec.neg(&spec.mul(&d[0], &spec.inv(&d[1]).unwrap())));
        }
        if deg == 2 {
            return Ok(quadratic_roots(spec, &d)[0]);
        }
    }
    Err(Error::Config("equal-degree splitting exhausted".into()))
}

// --- u64 polynomial helpers over F_p (used for modulus validation) ------------

fn poly_eval(f: &[u64], x: u64, p: u64) -> u64 {
    let mut acc = 0u64;
    for &c in f.iter().rev() {
        acc = (mulmod_u64(acc, x, p) + c % p) % p;
    }
    acc
}

fn poly_norm(mut v: Vec<u64>) -> Vec<u64> {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
    v
}

fn poly_deg(f: &[u64]) -> usize {
    poly_norm(f.to_vec()).len() - 1
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0) % p;
        let y = b.get(i).copied().unwrap_or(0) % p;
        out[i] = (x + p - y) % p;
    }
    poly_norm(out)
}

fn poly_rem_u64(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = poly_norm(a.to_vec());
    let b = poly_norm(b.to_vec());
    let d = b.len() - 1;
    if d == 0 {
        return vec![0];
    }
    let li = crate::arith::invmod_u64(*b.last().unwrap(), p).expect("unit leading coeff");
    while r.len() - 1 >= d && !(r.len() == 1 && r[0] == 0) {
        let k = r.len() - 1;
        let q = mulmod_u64(r[k], li, p);
        for i in 0..=d {
            let s = mulmod_u64(q, b[i], p);
            r[k - d + i] = (r[k - d + i] + p - s) % p;
        }
        r = poly_norm(r);
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = poly_norm(a.to_vec());
    let mut y = poly_norm(b.to_vec());
    while !(y.len() == 1 && y[0] == 0) {
        let r = poly_rem_u64(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

fn powmod_poly_x(e: u64, m: &[u64], p: u64) -> Vec<u64> {
    // x^e mod m over F_p
    let mut e = e;
    let mut base = poly_rem_u64(&[0, 1], m, p);
    let mut acc = vec![1u64];
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod_u64(&acc, &base, m, p);
        }
        e >>= 1;
        if e > 0 {
            base = poly_mulmod_u64(&base, &base, m, p);
        }
    }
    acc
}

fn poly_mulmod_u64(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + mulmod_u64(x, y, p)) % p;
        }
    }
    poly_rem_u64(&prod, m, p)
}

// --- trace recurrence ----------------------------------------------------------

/// s_0 = 2, s_1 = t, s_k = t s_{k-1} - q s_{k-2}: the trace of Frobenius over
/// F_{q^n} given the trace t over F_q, so #E(F_{q^n}) = q^n + 1 - s_n.
pub fn trace_extend(t: &BigInt, q: &BigInt, n: u64) -> BigInt {
    let mut s0 = BigInt::from(2);
    let mut s1 = t.clone();
    if n == 0 {
        return s0;
    }
    for _ in 1..n {
        let s2 = t * &s1 - q * &s0;
        s0 = s1;
        s1 = s2;
    }
    s1
}

/// Point count over the degree-n extension from base-field Frobenius data.
pub fn count_over_extension(t: &BigInt, q: &BigInt, n: u64) -> BigInt {
    q.pow(n as u32) + BigInt::one() - trace_extend(t, q, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn f27() -> FqSpec {
        // x^3 + 2x + 1 over F_3: no roots (1, 1+2+1=4=1, 8+4+1=13=1), irreducible.
        FqSpec::new(3, 3, vec![1, 2, 0, 1]).unwrap()
    }

    fn f121() -> FqSpec {
        // x^2 + 2x + 5 mod 11 is the residue field modulus the splitting layer
        // produces for the degree-2 prime above 11 in x^3+x+1.
        FqSpec::new(11, 2, vec![5, 2, 1]).unwrap()
    }

    #[test]
    fn rejects_reducible_modulus() {
        assert!(FqSpec::new(5, 2, vec![4, 0, 1]).is_err()); // x^2 - 1
        assert!(FqSpec::new(4, 1, vec![0, 1]).is_err()); // 4 not prime
    }

    #[test]
    fn frobenius_fixes_prime_field_and_powers_match() {
        // x^3 + x + 1 over F_157: checked irreducible by the constructor.
        let f157 = FqSpec::new(157, 3, vec![1, 1, 0, 1]).unwrap();
        for spec in [f27(), f121(), f157] {
            let q = spec.q();
            let mut rng = StdRng::seed_from_u64(q);
            for _ in 0..40 {
                let a = spec.decode(rng.gen_range(0..q));
                // a^q = a (Frobenius is the identity on F_q as a set power map).
                assert_eq!(spec.pow(&a, q), a);
                if !spec.is_zero(&a) {
                    assert_eq!(spec.mul(&a, &spec.inv(&a).unwrap()), spec.one());
                    assert_eq!(spec.pow(&a, q - 1), spec.one());
                }
            }
        }
    }

    #[test]
    fn euler_matches_square_enumeration() {
        for spec in [
            FqSpec::new(3, 2, vec![1, 0, 1]).unwrap(),  // x^2+1 over F_3
            FqSpec::new(5, 2, vec![2, 0, 1]).unwrap(),  // x^2+2 over F_5
            f27(),
            FqSpec::new(5, 3, vec![1, 1, 0, 1]).unwrap(), // x^3+x+1 over F_5
            f121(),
        ] {
            let q = spec.q();
            let mut squares = std::collections::HashSet::new();
            for i in 0..q {
                let e = spec.decode(i);
                squares.insert(spec.mul(&e, &e));
            }
            for i in 1..q {
                let e = spec.decode(i);
                assert_eq!(
                    euler_is_square(&spec, &e).unwrap(),
                    squares.contains(&e),
                    "q={q} idx={i}"
                );
            }
            assert!(euler_is_square(&spec, &spec.zero()).is_err());
        }
    }

    #[test]
    fn characteristic_two_everything_squares() {
        let f8 = FqSpec::new(2, 3, vec![1, 1, 0, 1]).unwrap();
        for i in 1..8 {
            let e = f8.decode(i);
            assert!(euler_is_square(&f8, &e).unwrap());
            let r = fq_sqrt(&f8, &e).unwrap();
            assert_eq!(f8.mul(&r, &r), e);
        }
    }

    #[test]
    fn sqrt_roundtrip_random() {
        for spec in [f27(), f121(), FqSpec::new(13, 1, vec![0, 1]).unwrap()] {
            let q = spec.q();
            let mut rng = StdRng::seed_from_u64(0xF00 + q);
            for _ in 0..60 {
                let a = spec.decode(rng.gen_range(0..q));
                let sq = spec.mul(&a, &a);
                let r = fq_sqrt(&spec, &sq).expect("squares have roots");
                assert_eq!(spec.mul(&r, &r), sq);
            }
        }
    }

    #[test]
    fn roots_match_exhaustive_oracle() {
        let mut rng = StdRng::seed_from_u64(0xBEEF);
        for (p, f, m) in [
            (7u64, 1u8, vec![0u64, 1]),
            (13, 1, vec![0, 1]),
            (3, 2, vec![1, 0, 1]),
            (5, 3, vec![1, 1, 0, 1]),
        ] {
            let spec = FqSpec::new(p, f, m.clone()).unwrap();
            let q = spec.q();
            for _ in 0..80 {
                let deg = rng.gen_range(1..=3usize);
                let mut poly: Vec<FqElem> =
                    (0..=deg).map(|_| spec.decode(rng.gen_range(0..q))).collect();
                if spec.is_zero(poly.last().unwrap()) {
                    *poly.last_mut().unwrap() = spec.one();
                }
                let got = roots_deg_le3(&spec, &poly).unwrap();
                // Oracle: scan every element, compute multiplicity by deflation.
                let mut expect: Vec<(FqElem, u32)> = Vec::new();
                for i in 0..q {
                    let x = spec.decode(i);
                    if spec.is_zero(&fq_poly_eval(&spec, &poly, &x)) {
                        let mut g = poly.clone();
                        let mut mult = 0;
                        while g.len() > 1 && spec.is_zero(&fq_poly_eval(&spec, &g, &x)) {
                            g = fq_poly_deflate(&spec, &g, &x);
                            mult += 1;
                        }
                        expect.push((x, mult));
                    }
                }
                expect.sort_by_key(|(r, _)| r.c);
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn roots_large_q_gcd_path() {
        // q = 157^3 > 4096 takes the x^q - x route; exercise a fully split
        // cubic and a double root.
        let spec = FqSpec::new(157, 3, vec![3, 1, 0, 1]).unwrap();
        let a = spec.decode(12345);
        let b = spec.decode(777_777);
        let c = spec.decode(2_222_222 % spec.q());
        // (x-a)(x-b)(x-c)
        let e1 = spec.neg(&spec.add(&spec.add(&a, &b), &c));
        let e0 = spec.neg(&spec.mul(&spec.mul(&a, &b), &c));
        let mut e2part = spec.add(&spec.mul(&a, &b), &spec.mul(&a, &c));
        e2part = spec.add(&e2part, &spec.mul(&b, &c));
        let poly = vec![e0, e2part, e1, spec.one()];
        let mut got: Vec<FqElem> = roots_deg_le3(&spec, &poly)
            .unwrap()
            .into_iter()
            .map(|(r, m)| {
                assert_eq!(m, 1);
                r
            })
            .collect();
        got.sort_by_key(|r| r.c);
        let mut expect = vec![a, b, c];
        expect.sort_by_key(|r| r.c);
        assert_eq!(got, expect);
        // Double root: (x-a)^2 (x-b)
        let s = spec.add(&a, &a);
        let poly2 = vec![
            spec.neg(&spec.mul(&spec.mul(&a, &a), &b)),
            spec.add(&spec.mul(&a, &a), &spec.mul(&s, &b)),
            spec.neg(&spec.add(&s, &b)),
            spec.one(),
        ];
        let got2 = roots_deg_le3(&spec, &poly2).unwrap();
        let mut map: std::collections::HashMap<FqElem, u32> = got2.into_iter().collect();
        assert_eq!(map.remove(&a), Some(2));
        assert_eq!(map.remove(&b), Some(1));
        assert!(map.is_empty());
    }

    #[test]
    fn trace_recurrence_reference_and_tower() {
        assert_eq!(
            trace_extend(&BigInt::from(2), &BigInt::from(5), 3),
            BigInt::from(-22)
        );
        // Tower consistency s_{mn}(t, q) = s_n(s_m(t, q), q^m).
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..200 {
            let qv = rng.gen_range(2..50i64);
            let q = BigInt::from(qv);
            let tmax = (qv as f64).sqrt() as i64 * 2 + 1;
            let t = BigInt::from(rng.gen_range(-tmax..=tmax));
            let (m, n) = (rng.gen_range(1..5u64), rng.gen_range(1..5u64));
            let lhs = trace_extend(&t, &q, m * n);
            let rhs = trace_extend(&trace_extend(&t, &q, m), &q.pow(m as u32), n);
            assert_eq!(lhs, rhs);
        }
    }
}
