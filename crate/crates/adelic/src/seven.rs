//! ℓ-adic certification over Q for curves with a rational ℓ-torsion point
//! (ℓ = 7 exemplar): the maximal possible image is the pre-image of the
//! half-Borel subgroup (1 *; 0 *) of GL₂(Z/ℓ), and maximality follows from
//! the mod-ℓ image being the half-Borel (not the half-Cartan (1 0; 0 *))
//! together with the mod-ℓ² image containing I + ℓ·Mat₂(Z/ℓ) ≅ (Z/ℓ)⁴.
//!
//! Both facts are certified by Frobenius data (p, a_p) gathered from point
//! counts over F_p:
//!
//! * step 1 — a characteristic polynomial T² − a_p T + p splitting mod ℓ²
//!   with roots distinct mod ℓ and distinct (ℓ−1)-st powers mod ℓ² gives a
//!   diagonal, non-scalar element of I + ℓ·Mat₂;
//! * step 2 — roots distinct mod ℓ with equal (ℓ−1)-st powers give a scalar
//!   element, scalar in every basis, upgrading step 1 to all diagonals;
//! * a Frobenius with (T − 1)² pattern mod ℓ but ℓ² ∤ 1 + p − a_p refutes
//!   the half split-Cartan (inside it, σ = I + ℓM forces ℓ² | 1 + p − a_p);
//! * step 3 — with σ = I + ℓM (certified by full ℓ-torsion over F_p), an
//!   irreducible characteristic polynomial for M yields an element that is
//!   upper-triangular in no basis, hence an antidiagonal generator;
//! * step 4 — conjugating the step-3 element by the diagonals from steps
//!   1–2 fills out the remaining generators; this is bookkeeping and is
//!   recorded as automatic once steps 1–3 hold.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Integral Weierstrass model over Q: coefficients a1, a2, a3, a4, a6.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurveQ {
    pub a: [i64; 5],
}

impl CurveQ {
    pub fn new(a: [i64; 5]) -> Self {
        CurveQ { a }
    }

    /// b-invariants (b2, b4, b6, b8).
    fn b_invariants(&self) -> (i128, i128, i128, i128) {
        let [a1, a2, a3, a4, a6] = self.a.map(i128::from);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        debug_assert_eq!(4 * b8, b2 * b6 - b4 * b4);
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> BigInt {
        let (b2, b4, b6, b8) = self.b_invariants();
        let (b2, b4, b6, b8) = (
            BigInt::from(b2),
            BigInt::from(b4),
            BigInt::from(b6),
            BigInt::from(b8),
        );
        -&b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6
    }

    pub fn good_reduction(&self, p: u64) -> bool {
        !(self.discriminant() % BigInt::from(p)).is_zero()
    }

    /// Coefficients of the completed square g(x) = 4x³ + b2 x² + 2 b4 x + b6
    /// with (2y + a1 x + a3)² = g(x), low degree first.
    fn g_coeffs(&self) -> [i128; 4] {
        let (b2, b4, b6, _) = self.b_invariants();
        [b6, 2 * b4, b2, 4]
    }

    /// #E(F_p) for an odd prime of good reduction, by the character sum
    /// p + 1 + Σ_x χ(g(x)) over the completed square.
    pub fn count_points_mod(&self, p: u64) -> Result<u64> {
        if p < 3 {
            return Err(Error::Config(
                "point counts use the completed square; p must be odd".into(),
            ));
        }
        if !self.good_reduction(p) {
            return Err(Error::BadReduction);
        }
        let g: [u64; 4] = self.g_coeffs().map(|c| c.rem_euclid(p as i128) as u64);
        let m = p as u128;
        let sum: i64 = (0..p)
            .map(|x| {
                let x = x as u128;
                let v = (((g[3] as u128 * x % m + g[2] as u128) * x % m + g[1] as u128) * x
                    % m
                    + g[0] as u128)
                    % m;
                jacobi(v as i64, p) as i64
            })
            .sum();
        Ok((p as i64 + 1 + sum) as u64)
    }
}

/// Jacobi symbol (a/n) for odd n > 0, by quadratic reciprocity; agrees with
/// the Legendre symbol at odd primes and avoids a modular exponentiation per
/// evaluation in the hot counting loop.
fn jacobi(mut a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut n = n as i64;
    a %= n;
    if a < 0 {
        a += n;
    }
    let mut t = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Frobenius datum over Q: prime of good reduction and the trace
/// a_p = p + 1 − #E(F_p).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrobQDatum {
    pub p: u64,
    pub a_p: i64,
}

impl FrobQDatum {
    /// Counts points from scratch and packages (p, a_p); the Hasse bound is
    /// asserted.
    pub fn collect(curve: &CurveQ, p: u64) -> Result<Self> {
        let n = curve.count_points_mod(p)? as i64;
        let a_p = p as i64 + 1 - n;
        assert!(
            (a_p as i128) * (a_p as i128) <= 4 * p as i128,
            "Hasse bound violated at {}",
            p
        );
        Ok(FrobQDatum { p, a_p })
    }
}

fn mod_u(x: i64, m: u64) -> u64 {
    x.rem_euclid(m as i64) as u64
}

/// Unordered root pairs {λ1, λ2} of T² − a_p T + p modulo ℓ², i.e. pairs
/// with λ1 + λ2 ≡ a_p and λ1 λ2 ≡ p (mod ℓ²), found exhaustively.
pub fn split_roots_mod_ell_sq(d: &FrobQDatum, ell: u64) -> Vec<(u64, u64)> {
    let m = ell * ell;
    let a = mod_u(d.a_p, m);
    let q = d.p % m;
    let mut out = Vec::new();
    for l1 in 0..m {
        let l2 = (a + m - l1) % m;
        if l1 <= l2 && (l1 as u128 * l2 as u128) % m as u128 == q as u128 {
            out.push((l1, l2));
        }
    }
    out
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Step 1: the characteristic polynomial splits mod ℓ² with roots distinct
/// mod ℓ (so Frobenius diagonalizes over Z_ℓ) whose (ℓ−1)-st powers differ
/// mod ℓ² — Frobenius^(ℓ−1) is then diagonal and non-scalar in
/// I + ℓ·Mat₂(Z/ℓ).
pub fn step1_witness(d: &FrobQDatum, ell: u64) -> bool {
    debug_assert!(d.p % ell != 0);
    let m = ell * ell;
    split_roots_mod_ell_sq(d, ell)
        .iter()
        .any(|&(l1, l2)| l1 % ell != l2 % ell && powmod(l1, ell - 1, m) != powmod(l2, ell - 1, m))
}

/// Step 2: roots distinct mod ℓ but with equal (ℓ−1)-st powers mod ℓ² —
/// Frobenius^(ℓ−1) is then scalar, and scalar in every basis.
pub fn step2_witness(d: &FrobQDatum, ell: u64) -> bool {
    debug_assert!(d.p % ell != 0);
    let m = ell * ell;
    split_roots_mod_ell_sq(d, ell)
        .iter()
        .any(|&(l1, l2)| l1 % ell != l2 % ell && powmod(l1, ell - 1, m) == powmod(l2, ell - 1, m))
}

fn has_unit_square_pattern(d: &FrobQDatum, ell: u64) -> bool {
    mod_u(d.a_p, ell) == 2 % ell && d.p % ell == 1
}

/// For a datum with T² − a_p T + p ≡ (T − 1)² mod ℓ: whether ℓ² divides
/// 1 + p − a_p.  Inside the half split-Cartan such a Frobenius would be
/// I + ℓM, forcing the divisibility — so a single FALSE permanently rules
/// the half split-Cartan out.
pub fn cartan_discriminator(d: &FrobQDatum, ell: u64) -> Result<bool> {
    if !has_unit_square_pattern(d, ell) {
        return Err(Error::Config(format!(
            "characteristic polynomial at {} is not (T-1)^2 mod {}",
            d.p, ell
        )));
    }
    let m = (ell * ell) as i64;
    Ok((1 + d.p as i64 - d.a_p) % m == 0)
}

/// Step 3: for a datum with the (T − 1)² pattern, ℓ² | 1 + p − a_p and
/// ℓ | a_p − 2, Frobenius = I + ℓM once it reduces to the identity mod ℓ
/// (certified by full ℓ-torsion over F_p); M has characteristic polynomial
/// T² − ((a_p − 2)/ℓ) T + (1 + p − a_p)/ℓ², and irreducibility mod ℓ means
/// the element is upper-triangular in no basis.
pub fn step3_witness(d: &FrobQDatum, ell: u64, curve: &CurveQ) -> Result<bool> {
    if !has_unit_square_pattern(d, ell) {
        return Err(Error::Config(format!(
            "characteristic polynomial at {} is not (T-1)^2 mod {}",
            d.p, ell
        )));
    }
    let l2 = (ell * ell) as i64;
    let num = 1 + d.p as i64 - d.a_p;
    if num % l2 != 0 || (d.a_p - 2) % ell as i64 != 0 {
        return Err(Error::Config(format!(
            "divisibility preconditions fail at {}: {} mod {}",
            d.p, num, l2
        )));
    }
    let c1 = mod_u((d.a_p - 2) / ell as i64, ell);
    let c0 = mod_u(num / l2, ell);
    if !quadratic_irreducible_mod(c1, c0, ell) {
        return Ok(false);
    }
    full_l_torsion_exhaustive(curve, d.p, ell)
}

/// T² − c1 T + c0 irreducible mod the odd prime ℓ, via the discriminant
/// character.
fn quadratic_irreducible_mod(c1: u64, c0: u64, ell: u64) -> bool {
    let disc = mod_u(c1 as i64 * c1 as i64 - 4 * c0 as i64, ell);
    jacobi(disc as i64, ell) == -1
}

// --- F_p point arithmetic ----------------------------------------------------------

type FpPoint = Option<(u64, u64)>;

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Square root mod an odd prime by Tonelli–Shanks (fast path for
/// p ≡ 3 mod 4); None for nonresidues.
fn sqrt_mod(n: u64, p: u64) -> Option<u64> {
    let n = n % p;
    if n == 0 {
        return Some(0);
    }
    if jacobi(n as i64, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(n, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while jacobi(z as i64, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(n, q, p);
    let mut r = powmod(n, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = (t2 as u128 * t2 as u128 % p as u128) as u64;
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = (b as u128 * b as u128 % p as u128) as u64;
        t = (t as u128 * c as u128 % p as u128) as u64;
        r = (r as u128 * b as u128 % p as u128) as u64;
    }
    Some(r)
}

struct FpCurve {
    p: u64,
    a: [u64; 5],
}

impl FpCurve {
    fn new(curve: &CurveQ, p: u64) -> Self {
        FpCurve { p, a: curve.a.map(|c| mod_u(c, p)) }
    }

    fn add(&self, pt1: FpPoint, pt2: FpPoint) -> FpPoint {
        let p = self.p;
        let (x1, y1) = match pt1 {
            None => return pt2,
            Some(v) => v,
        };
        let (x2, y2) = match pt2 {
            None => return pt1,
            Some(v) => v,
        };
        let m = p as u128;
        let lam = if x1 == x2 {
            // opposite points: y1 = −y2 − a1 x − a3
            if (y1 as u128 + y2 as u128 + self.a[0] as u128 * x2 as u128 + self.a[2] as u128)
                % m
                == 0
            {
                return None;
            }
            // tangent: (3x² + 2 a2 x + a4 − a1 y) / (2y + a1 x + a3)
            let num = ((3 * x1 as u128 % m * x1 as u128 + 2 * self.a[1] as u128 * x1 as u128
                + self.a[3] as u128
                + (p as u128 - self.a[0] as u128) * y1 as u128)
                % m) as u64;
            let den = ((2 * y1 as u128 + self.a[0] as u128 * x1 as u128 + self.a[2] as u128)
                % m) as u64;
            (num as u128 * invmod(den, p) as u128 % m) as u64
        } else {
            let num = (y2 + p - y1) % p;
            let den = (x2 + p - x1) % p;
            (num as u128 * invmod(den, p) as u128 % m) as u64
        };
        let x3 = ((lam as u128 * lam as u128 + self.a[0] as u128 * lam as u128
            + (p as u128 - self.a[1] as u128)
            + 2 * m
            - x1 as u128
            - x2 as u128)
            % m) as u64;
        let y3 = ((lam as u128 * ((x1 + p - x3) % p) as u128
            + (p as u128 - y1 as u128)
            + (p as u128 - self.a[0] as u128) * x3 as u128
            + (p as u128 - self.a[2] as u128))
            % m) as u64;
        Some((x3, y3))
    }

    fn mul(&self, k: u64, pt: FpPoint) -> FpPoint {
        let mut acc = None;
        let mut base = pt;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// All points with the given x-coordinate, from the completed square.
    fn lift_x(&self, curve: &CurveQ, x: u64) -> Vec<(u64, u64)> {
        let p = self.p;
        let m = p as u128;
        let g: [u64; 4] = curve.g_coeffs().map(|c| c.rem_euclid(p as i128) as u64);
        let v = ((((g[3] as u128 * x as u128 % m + g[2] as u128) * x as u128 % m
            + g[1] as u128)
            * x as u128
            % m)
            + g[0] as u128) as u64
            % p;
        let lin = ((self.a[0] as u128 * x as u128 + self.a[2] as u128) % m) as u64;
        let inv2 = invmod(2, p);
        match sqrt_mod(v, p) {
            None => vec![],
            Some(0) => vec![(x, ((p - lin) as u128 * inv2 as u128 % m) as u64)],
            Some(s) => {
                let y1 = (((s + p - lin) % p) as u128 * inv2 as u128 % m) as u64;
                let y2 = (((2 * p - s - lin) % p) as u128 * inv2 as u128 % m) as u64;
                vec![(x, y1), (x, y2)]
            }
        }
    }
}

/// Number of points of E(F_p) killed by ℓ, counted by exhausting all
/// x-coordinates and applying the group law; always 1, ℓ or ℓ² for odd ℓ.
pub fn l_torsion_count(curve: &CurveQ, p: u64, ell: u64) -> Result<u64> {
    if p < 3 {
        return Err(Error::Config("torsion scans need an odd prime".into()));
    }
    if !curve.good_reduction(p) {
        return Err(Error::BadReduction);
    }
    let fp = FpCurve::new(curve, p);
    let killed = (0..p)
        .into_par_iter()
        .map(|x| {
            fp.lift_x(curve, x)
                .into_iter()
                .filter(|&pt| fp.mul(ell, Some(pt)).is_none())
                .count() as u64
        })
        .sum::<u64>();
    Ok(killed + 1)
}

/// Whether E(F_p)[ℓ] is full, i.e. has ℓ² points; requires p ≡ 1 mod ℓ by
/// the Weil pairing, and certifies that a Frobenius with the (T − 1)²
/// pattern reduces to the identity mod ℓ.
pub fn full_l_torsion_exhaustive(curve: &CurveQ, p: u64, ell: u64) -> Result<bool> {
    Ok(l_torsion_count(curve, p, ell)? == ell * ell)
}

// --- rational torsion ----------------------------------------------------------

type QPoint = Option<(BigRational, BigRational)>;

fn q_add(curve: &CurveQ, pt1: &QPoint, pt2: &QPoint) -> QPoint {
    let [a1, a2, a3, a4, _] = curve.a.map(|c| BigRational::from_integer(BigInt::from(c)));
    let (x1, y1) = match pt1 {
        None => return pt2.clone(),
        Some(v) => v.clone(),
    };
    let (x2, y2) = match pt2 {
        None => return pt1.clone(),
        Some(v) => v.clone(),
    };
    let lam = if x1 == x2 {
        if (&y1 + &y2 + &a1 * &x2 + &a3).is_zero() {
            return None;
        }
        let three = BigRational::from_integer(BigInt::from(3));
        let two = BigRational::from_integer(BigInt::from(2));
        (&three * &x1 * &x1 + &two * &a2 * &x1 + &a4 - &a1 * &y1)
            / (&two * &y1 + &a1 * &x1 + &a3)
    } else {
        (&y2 - &y1) / (&x2 - &x1)
    };
    let x3 = &lam * &lam + &a1 * &lam - &a2 - &x1 - &x2;
    let y3 = &lam * (&x1 - &x3) - &y1 - &a1 * &x3 - &a3;
    Some((x3, y3))
}

/// Order of a rational point if it is at most `max`, by repeated addition.
fn rational_order(curve: &CurveQ, pt: &(BigRational, BigRational), max: u64) -> Option<u64> {
    let mut acc: QPoint = None;
    for k in 1..=max {
        acc = q_add(curve, &acc, &Some(pt.clone()));
        if acc.is_none() {
            return Some(k);
        }
    }
    None
}

/// Exhaustive small-height search for a rational point of exact order ℓ:
/// integer x with |x| ≤ x_bound whose completed square g(x) is a perfect
/// square giving an integral y.  Returns the first hit in ascending x.
pub fn find_rational_l_torsion(
    curve: &CurveQ,
    ell: u64,
    x_bound: i64,
) -> Option<(BigInt, BigInt)> {
    let g = curve.g_coeffs();
    let [a1, _, a3, _, _] = curve.a.map(i128::from);
    for x in -x_bound..=x_bound {
        let x = x as i128;
        let v = ((g[3] * x + g[2]) * x + g[1]) * x + g[0];
        if v < 0 {
            continue;
        }
        let s = BigInt::from(v).sqrt();
        if &s * &s != BigInt::from(v) {
            continue;
        }
        let s = s.to_i128().expect("square root of an i128 fits");
        let signs = if s == 0 { vec![0] } else { vec![s, -s] };
        for sg in signs {
            let num = -(a1 * x + a3) + sg;
            if num % 2 != 0 {
                continue;
            }
            let pt = (
                BigRational::from_integer(BigInt::from(x)),
                BigRational::from_integer(BigInt::from(num / 2)),
            );
            if rational_order(curve, &pt, ell) == Some(ell) {
                return Some((BigInt::from(x), BigInt::from(num / 2)));
            }
        }
    }
    None
}

/// Order of the reduction of an integral point mod p (None if the point is
/// singular on the reduction or does not gain order ≤ ℓ²).
fn reduction_order(curve: &CurveQ, p: u64, pt: &(BigInt, BigInt), max: u64) -> Option<u64> {
    let fp = FpCurve::new(curve, p);
    let pb = BigInt::from(p);
    let x = (pt.0.mod_floor(&pb)).to_u64()?;
    let y = (pt.1.mod_floor(&pb)).to_u64()?;
    let mut acc: FpPoint = None;
    for k in 1..=max {
        acc = fp.add(acc, Some((x, y)));
        if acc.is_none() {
            return Some(k);
        }
    }
    None
}

// --- certificate assembly ----------------------------------------------------------

#[derive(Clone, Debug)]
pub struct HalfBorelCertificate {
    pub curve: [i64; 5],
    pub ell: u64,
    pub search_bound: u64,
    /// Rational point of exact order ℓ located by exhaustive small-height
    /// search, with its order under the reduction maps at the witness
    /// primes (reduction compatibility).
    pub torsion_point: (BigInt, BigInt),
    pub reduction_orders: Vec<(u64, u64)>,
    pub step1: Option<FrobQDatum>,
    pub step2: Option<FrobQDatum>,
    /// Datum with the (T − 1)² pattern and ℓ² ∤ 1 + p − a_p, refuting the
    /// half split-Cartan; monotone — one refutation is permanent.
    pub cartan_refutation: Option<FrobQDatum>,
    pub step3: Option<FrobQDatum>,
    /// Conjugation bookkeeping: automatic once steps 1–3 hold (the step-1
    /// element is a non-scalar diagonal to conjugate the step-3
    /// antidiagonal by).
    pub step4_automatic: bool,
    pub certified: bool,
    pub notes: Vec<String>,
}

impl HalfBorelCertificate {
    /// Roles with no witness below the search bound.
    pub fn missing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.step1.is_none() {
            out.push("step1");
        }
        if self.step2.is_none() {
            out.push("step2");
        }
        if self.cartan_refutation.is_none() {
            out.push("cartan-refutation");
        }
        if self.step3.is_none() {
            out.push("step3");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let datum = |d: &Option<FrobQDatum>| {
            d.map(|d| json!({"p": d.p, "a_p": d.a_p})).unwrap_or(Value::Null)
        };
        json!({
            "kind": "half-borel-l-adic",
            "curve": self.curve,
            "ell": self.ell,
            "search_bound": self.search_bound,
            "torsion_point": [self.torsion_point.0.to_string(), self.torsion_point.1.to_string()],
            "reduction_orders": self.reduction_orders,
            "step1": datum(&self.step1),
            "step2": datum(&self.step2),
            "cartan_refutation": datum(&self.cartan_refutation),
            "step3": datum(&self.step3),
            "step4_automatic": self.step4_automatic,
            "certified": self.certified,
            "missing": self.missing(),
            "notes": self.notes,
        })
    }
}

fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if sieve[p] {
            out.push(p as u64);
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
    }
    out
}

/// Height bound for the rational-torsion search; all curves in scope have
/// their ℓ-torsion at small integral x.
const TORSION_X_BOUND: i64 = 10_000;

/// Assembles the half-Borel ℓ-adic certificate for a curve over Q with a
/// rational point of exact order ℓ: locates the torsion point, scans primes
/// of good reduction up to `search_bound` for the step-1/step-2 witnesses,
/// a half split-Cartan refutation and a step-3 witness (a_p recomputed from
/// scratch at every prime), and records step 4 as automatic bookkeeping.
/// Missing witnesses leave the certificate uncertified ("undetermined")
/// rather than erroring.
pub fn certify_half_borel(
    curve: &CurveQ,
    ell: u64,
    search_bound: u64,
) -> Result<HalfBorelCertificate> {
    if ell < 3 || !primes_up_to(ell).contains(&ell) {
        return Err(Error::Config("the torsion level must be an odd prime".into()));
    }
    let point = find_rational_l_torsion(curve, ell, TORSION_X_BOUND).ok_or_else(|| {
        Error::Config(format!(
            "no rational point of exact order {} with |x| <= {}",
            ell, TORSION_X_BOUND
        ))
    })?;

    let mut step1 = None;
    let mut step2 = None;
    let mut cartan = None;
    let mut step3 = None;
    let primes = primes_up_to(search_bound);
    for block in primes.chunks(64) {
        let data: Vec<Option<FrobQDatum>> = block
            .par_iter()
            .map(|&p| {
                if p < 3 || p == ell || !curve.good_reduction(p) {
                    None
                } else {
                    Some(FrobQDatum::collect(curve, p).expect("good odd prime"))
                }
            })
            .collect();
        for d in data.into_iter().flatten() {
            if step1.is_none() && step1_witness(&d, ell) {
                step1 = Some(d);
            }
            if step2.is_none() && step2_witness(&d, ell) {
                step2 = Some(d);
            }
            if has_unit_square_pattern(&d, ell) {
                if cartan.is_none() && !cartan_discriminator(&d, ell)? {
                    cartan = Some(d);
                }
                if step3.is_none()
                    && (1 + d.p as i64 - d.a_p) % ((ell * ell) as i64) == 0
                    && step3_witness(&d, ell, curve)?
                {
                    step3 = Some(d);
                }
            }
        }
        if step1.is_some() && step2.is_some() && cartan.is_some() && step3.is_some() {
            break;
        }
    }

    let mut reduction_orders = Vec::new();
    let mut compatible = true;
    for d in [&step1, &step2, &cartan, &step3].into_iter().flatten() {
        let ord = reduction_order(curve, d.p, &point, ell);
        compatible &= ord == Some(ell);
        reduction_orders.push((d.p, ord.unwrap_or(0)));
    }
    reduction_orders.sort_unstable();
    reduction_orders.dedup();

    let step4_automatic = step1.is_some() && step2.is_some() && step3.is_some();
    let certified =
        compatible && step1.is_some() && step2.is_some() && cartan.is_some() && step3.is_some();
    let mut notes = vec![
        "step 4 is conjugation bookkeeping: the step-3 antidiagonal element conjugated by the \
         non-scalar diagonals of steps 1-2 generates the rest of I + l*Mat2"
            .to_string(),
        "adelic assembly for the half-Borel product is reported per-reference".to_string(),
    ];
    if step2.is_none() {
        notes.push(
            "no scalar witness found below the bound; scalarity is not claimed necessary"
                .to_string(),
        );
    }
    Ok(HalfBorelCertificate {
        curve: curve.a,
        ell,
        search_bound,
        torsion_point: point,
        reduction_orders,
        step1,
        step2,
        cartan_refutation: cartan,
        step3,
        step4_automatic,
        certified,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith;

    fn demo_curve() -> CurveQ {
        CurveQ::new([1, -1, 1, -19353, 958713])
    }

    #[test]
    fn discriminant_and_reduction() {
        let e = demo_curve();
        let disc = e.discriminant();
        assert_eq!(disc, BigInt::from(70_810_888_830_976u64));
        // 2^21 * 7^7 * 41
        let support = arith::prime_support(&disc).unwrap();
        assert_eq!(support, vec![2, 7, 41]);
        assert!(!e.good_reduction(2));
        assert!(!e.good_reduction(7));
        assert!(!e.good_reduction(41));
        assert!(e.good_reduction(3));
        assert!(e.good_reduction(61));
    }

    #[test]
    fn frozen_traces_recomputed_from_scratch() {
        let e = demo_curve();
        let expect = [(61u64, 13i64), (127, 2), (971, 13), (19993, 2)];
        for (p, a) in expect {
            let d = FrobQDatum::collect(&e, p).unwrap();
            assert_eq!(d.a_p, a, "trace at {}", p);
            assert_eq!(e.count_points_mod(p).unwrap() as i64, p as i64 + 1 - a);
        }
    }

    #[test]
    fn character_sum_count_matches_naive_enumeration() {
        // Independent route: count solutions of the original equation
        // y² + a1 x y + a3 y = x³ + a2 x² + a4 x + a6 by brute force.
        let e = demo_curve();
        let [a1, a2, a3, a4, a6] = e.a;
        for p in [3u64, 5, 11, 13, 17, 19, 23, 29, 31, 37, 43, 53] {
            let pm = p as i64;
            let mut count = 1; // point at infinity
            for x in 0..pm {
                for y in 0..pm {
                    let lhs = (y * y + a1.rem_euclid(pm) * x * y + a3.rem_euclid(pm) * y)
                        .rem_euclid(pm);
                    let rhs = (((x + a2.rem_euclid(pm)) * x + a4.rem_euclid(pm)) * x
                        + a6.rem_euclid(pm))
                    .rem_euclid(pm);
                    if lhs == rhs {
                        count += 1;
                    }
                }
            }
            assert_eq!(e.count_points_mod(p).unwrap(), count as u64, "count at {}", p);
        }
    }

    #[test]
    fn jacobi_agrees_with_legendre() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
            for a in -60i64..60 {
                assert_eq!(jacobi(a, p), arith::legendre(a, p), "({}/{})", a, p);
            }
        }
    }

    #[test]
    fn step1_witness_at_61() {
        let e = demo_curve();
        let d = FrobQDatum::collect(&e, 61).unwrap();
        // Unique root pair mod 49: 1 + 12 = 13 = a_p, 1 * 12 = 12 = 61 mod 49,
        // distinct mod 7, 6th powers 1 vs 22 mod 49.
        assert_eq!(split_roots_mod_ell_sq(&d, 7), vec![(1, 12)]);
        assert_eq!(powmod(12, 6, 49), 22);
        assert!(step1_witness(&d, 7));
        assert!(!step2_witness(&d, 7));
    }

    #[test]
    fn step2_witness_at_971() {
        let e = demo_curve();
        let d = FrobQDatum::collect(&e, 971).unwrap();
        // Unique pair (5, 8): distinct mod 7, equal 6th powers 43 mod 49.
        assert_eq!(split_roots_mod_ell_sq(&d, 7), vec![(5, 8)]);
        assert_eq!(powmod(5, 6, 49), 43);
        assert_eq!(powmod(8, 6, 49), 43);
        assert!(step2_witness(&d, 7));
        assert!(!step1_witness(&d, 7));
    }

    #[test]
    fn root_pairs_satisfy_their_congruences() {
        // Exhaustive cross-check of the pair enumeration: every returned
        // pair solves both symmetric-function congruences, and an ordered
        // brute-force recount finds no others.
        let e = demo_curve();
        for p in [61u64, 971, 127, 19993, 5, 3, 11] {
            if !e.good_reduction(p) {
                continue;
            }
            let d = FrobQDatum::collect(&e, p).unwrap();
            let pairs = split_roots_mod_ell_sq(&d, 7);
            let a = mod_u(d.a_p, 49);
            let mut ordered = 0;
            for l1 in 0..49u64 {
                for l2 in 0..49u64 {
                    if (l1 + l2) % 49 == a && l1 * l2 % 49 == d.p % 49 {
                        ordered += 1;
                        assert!(pairs.contains(&(l1.min(l2), l1.max(l2))));
                    }
                }
            }
            let unordered_twice: usize =
                pairs.iter().map(|&(l1, l2)| if l1 == l2 { 1 } else { 2 }).sum();
            assert_eq!(ordered, unordered_twice, "pair count at {}", p);
        }
    }

    #[test]
    fn step_witnesses_are_mutually_exclusive() {
        let e = demo_curve();
        for p in primes_up_to(300) {
            if p < 3 || p == 7 || !e.good_reduction(p) {
                continue;
            }
            let d = FrobQDatum::collect(&e, p).unwrap();
            assert!(
                !(step1_witness(&d, 7) && step2_witness(&d, 7)),
                "both steps at {}",
                p
            );
        }
    }

    #[test]
    fn double_root_data_fail_both_steps() {
        let e = demo_curve();
        // 127: (T-1)^2 pattern and no splitting mod 49 at all.
        let d = FrobQDatum::collect(&e, 127).unwrap();
        assert!(split_roots_mod_ell_sq(&d, 7).is_empty());
        assert!(!step1_witness(&d, 7) && !step2_witness(&d, 7));
        // 19993 splits mod 49, but every pair has equal roots mod 7.
        let d = FrobQDatum::collect(&e, 19993).unwrap();
        let pairs = split_roots_mod_ell_sq(&d, 7);
        assert!(!pairs.is_empty());
        assert!(pairs.iter().all(|&(l1, l2)| l1 % 7 == l2 % 7));
        assert!(!step1_witness(&d, 7) && !step2_witness(&d, 7));
    }

    #[test]
    fn cartan_discriminator_cases() {
        let e = demo_curve();
        // 49 does not divide 1 + 127 - 2 = 126: half split-Cartan refuted.
        let d = FrobQDatum::collect(&e, 127).unwrap();
        assert_eq!(cartan_discriminator(&d, 7).unwrap(), false);
        // 49 divides 1 + 19993 - 2 = 19992.
        let d = FrobQDatum::collect(&e, 19993).unwrap();
        assert_eq!(cartan_discriminator(&d, 7).unwrap(), true);
        // Pattern precondition enforced.
        let d = FrobQDatum::collect(&e, 61).unwrap();
        assert!(cartan_discriminator(&d, 7).is_err());
        // Identity-like synthetic datum a_p = p + 1 forces 1 + p - a_p = 0.
        let d = FrobQDatum { p: 29, a_p: 30 };
        assert_eq!(cartan_discriminator(&d, 7).unwrap(), true);
    }

    #[test]
    fn step3_at_19993() {
        let e = demo_curve();
        let d = FrobQDatum::collect(&e, 19993).unwrap();
        // Reduced polynomial T² - 0·T + 2 mod 7, irreducible; full 7-torsion.
        assert_eq!(mod_u((d.a_p - 2) / 7, 7), 0);
        assert_eq!(mod_u((1 + d.p as i64 - d.a_p) / 49, 7), 2);
        assert!(quadratic_irreducible_mod(0, 2, 7));
        assert!(step3_witness(&d, 7, &e).unwrap());
        // Preconditions enforced: 127 has the pattern but 49 ∤ 126.
        let d127 = FrobQDatum::collect(&e, 127).unwrap();
        assert!(step3_witness(&d127, 7, &e).is_err());
        // Same prime, synthetic trace with reducible reduced polynomial:
        // a = -47 keeps both divisibilities but gives T² + 3, and
        // -3 ≡ 4 = 2² mod 7.
        let synth = FrobQDatum { p: 19993, a_p: -47 };
        assert!(!quadratic_irreducible_mod(0, 3, 7));
        assert_eq!(step3_witness(&synth, 7, &e).unwrap(), false);
    }

    #[test]
    fn quadratic_irreducibility_matches_root_scan() {
        // Exhaustive oracle over every monic quadratic mod 7.
        for c1 in 0..7u64 {
            for c0 in 0..7u64 {
                let has_root = (0..7i64)
                    .any(|t| (t * t - c1 as i64 * t + c0 as i64).rem_euclid(7) == 0);
                assert_eq!(
                    quadratic_irreducible_mod(c1, c0, 7),
                    !has_root,
                    "T² - {}T + {}",
                    c1,
                    c0
                );
            }
        }
    }

    #[test]
    fn torsion_counts_distinguish_cyclic_from_full() {
        let e = demo_curve();
        // #E(F_61) = 49 but 61 ≢ 1 mod 7: one 7-cycle only.
        assert_eq!(l_torsion_count(&e, 61, 7).unwrap(), 7);
        assert!(!full_l_torsion_exhaustive(&e, 61, 7).unwrap());
        // #E(F_19993) = 19992 = 2³·3·7²·17 with full 7-torsion.
        assert_eq!(l_torsion_count(&e, 19993, 7).unwrap(), 49);
        assert!(full_l_torsion_exhaustive(&e, 19993, 7).unwrap());
    }

    #[test]
    fn rational_torsion_point_and_reduction_compatibility() {
        let e = demo_curve();
        let pt = find_rational_l_torsion(&e, 7, 2000).unwrap();
        assert_eq!(pt, (BigInt::from(103), BigInt::from(172)));
        for p in [61u64, 127, 971, 19993] {
            assert_eq!(reduction_order(&e, p, &pt, 7), Some(7), "order at {}", p);
        }
    }

    #[test]
    fn certify_end_to_end() {
        let e = demo_curve();
        let cert = certify_half_borel(&e, 7, 2000).unwrap();
        assert!(cert.certified, "missing: {:?}", cert.missing());
        assert!(cert.step4_automatic);
        // First qualifying primes in scan order.
        assert_eq!(cert.step1.unwrap(), FrobQDatum { p: 5, a_p: -1 });
        assert_eq!(cert.step2.unwrap(), FrobQDatum { p: 3, a_p: -3 });
        assert_eq!(cert.cartan_refutation.unwrap(), FrobQDatum { p: 29, a_p: -5 });
        assert_eq!(cert.step3.unwrap(), FrobQDatum { p: 1933, a_p: -26 });
        assert_eq!(cert.torsion_point, (BigInt::from(103), BigInt::from(172)));
        let j = cert.to_json();
        assert_eq!(j["certified"], serde_json::json!(true));
        assert!(j["missing"].as_array().unwrap().is_empty());
    }

    #[test]
    fn certify_undetermined_when_step3_out_of_reach() {
        let e = demo_curve();
        // The first step-3 witness is 1933; below 1000 the other roles fill
        // but step 3 stays open and the certificate is undetermined.
        let cert = certify_half_borel(&e, 7, 1000).unwrap();
        assert!(!cert.certified);
        assert_eq!(cert.missing(), vec!["step3"]);
        assert!(cert.step1.is_some() && cert.step2.is_some());
        assert!(cert.cartan_refutation.is_some());
    }

    #[test]
    fn hasse_bound_holds_for_collected_data() {
        let e = demo_curve();
        for p in primes_up_to(500) {
            if p < 3 || !e.good_reduction(p) {
                continue;
            }
            let d = FrobQDatum::collect(&e, p).unwrap();
            assert!((d.a_p as i128) * (d.a_p as i128) <= 4 * p as i128);
            assert!(d.p.gcd(&(7 * 7)) <= 7);
        }
    }
}
