//! Weierstrass models over the cubic field: invariants, local reduction types
//! with certified minimality, and point counting over residue fields.
//!
//! Reduction classification is split by residue characteristic. Away from 2
//! and 3 the minimal valuations follow from (v(c4), v(c6), v(Delta)) alone.
//! At primes over 2 and 3 a model with v(Delta) >= 12 and v(c4) >= 4 may
//! still be minimal, so non-minimality is decided by an exhaustive search of
//! scaling substitutions (u, r, s, t) with u a uniformizer and r, s, t
//! ranging over complete residue systems mod P^2, P, P^3; a completed search
//! with no integral transform certifies minimality.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finitefield::{euler_is_square, FqElem, FqSpec};
use crate::ideals::{
    hnf_reduce, ideal_pow, residue, uniformizer_for, valuation, PrimeIdeal,
};
use crate::numberfield::{NumberFieldSpec, RingElement};

pub const COUNT_CEILING: u64 = 1 << 26;
pub const TORSION_ENUM_CEILING: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct Curve {
    pub a1: RingElement,
    pub a2: RingElement,
    pub a3: RingElement,
    pub a4: RingElement,
    pub a6: RingElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

#[derive(Clone, Debug)]
pub struct LocalClassification {
    pub prime_label: String,
    pub reduction: Reduction,
    /// Valuation of the minimal discriminant.
    pub v_disc_min: i64,
    /// Valuation of c4 for the minimal model (None when c4 = 0).
    pub v_c4_min: Option<i64>,
    /// Valuation of j (None when j = 0).
    pub v_j: Option<i64>,
    /// Additive primes with v(j) >= 0 have potentially good reduction.
    pub potentially_good: bool,
    /// Number of u = pi scalings applied before the model became minimal.
    pub scaling_steps: u32,
}

impl Curve {
    pub fn new(
        spec: &NumberFieldSpec,
        a1: RingElement,
        a2: RingElement,
        a3: RingElement,
        a4: RingElement,
        a6: RingElement,
    ) -> Result<Curve> {
        for a in [&a1, &a2, &a3, &a4, &a6] {
            spec.check(a)?;
        }
        let c = Curve { a1, a2, a3, a4, a6 };
        if c.discriminant(spec)?.is_zero() {
            return Err(Error::SingularModel);
        }
        Ok(c)
    }

    /// y^2 = x (x - r1) (x - r2): the full-2-torsion shape with roots
    /// {0, r1, r2}.
    pub fn two_torsion_form(
        spec: &NumberFieldSpec,
        r1: &RingElement,
        r2: &RingElement,
    ) -> Result<Curve> {
        let a2 = spec.neg(&spec.add(r1, r2)?);
        let a4 = spec.mul(r1, r2)?;
        Curve::new(spec, spec.zero(), a2, spec.zero(), a4, spec.zero())
    }

    pub fn b_invariants(
        &self,
        spec: &NumberFieldSpec,
    ) -> Result<(RingElement, RingElement, RingElement, RingElement)> {
        let t = |n: i64| spec.from_int(&BigInt::from(n));
        let a1sq = spec.mul(&self.a1, &self.a1)?;
        let b2 = spec.add(&a1sq, &spec.mul(&t(4), &self.a2)?)?;
        let b4 = spec.add(&spec.mul(&t(2), &self.a4)?, &spec.mul(&self.a1, &self.a3)?)?;
        let a3sq = spec.mul(&self.a3, &self.a3)?;
        let b6 = spec.add(&a3sq, &spec.mul(&t(4), &self.a6)?)?;
        // b8 = a1^2 a6 + 4 a2 a6 - a1 a3 a4 + a2 a3^2 - a4^2
        let mut b8 = spec.mul(&a1sq, &self.a6)?;
        b8 = spec.add(&b8, &spec.mul(&t(4), &spec.mul(&self.a2, &self.a6)?)?)?;
        b8 = spec.sub(&b8, &spec.mul(&self.a1, &spec.mul(&self.a3, &self.a4)?)?)?;
        b8 = spec.add(&b8, &spec.mul(&self.a2, &a3sq)?)?;
        b8 = spec.sub(&b8, &spec.mul(&self.a4, &self.a4)?)?;
        Ok((b2, b4, b6, b8))
    }

    pub fn c_invariants(&self, spec: &NumberFieldSpec) -> Result<(RingElement, RingElement)> {
        let (b2, b4, b6, _) = self.b_invariants(spec)?;
        let t = |n: i64| spec.from_int(&BigInt::from(n));
        let b2sq = spec.mul(&b2, &b2)?;
        let c4 = spec.sub(&b2sq, &spec.mul(&t(24), &b4)?)?;
        let mut c6 = spec.neg(&spec.mul(&b2sq, &b2)?);
        c6 = spec.add(&c6, &spec.mul(&t(36), &spec.mul(&b2, &b4)?)?)?;
        c6 = spec.sub(&c6, &spec.mul(&t(216), &b6)?)?;
        Ok((c4, c6))
    }

    pub fn discriminant(&self, spec: &NumberFieldSpec) -> Result<RingElement> {
        let (b2, b4, b6, b8) = self.b_invariants(spec)?;
        let t = |n: i64| spec.from_int(&BigInt::from(n));
        // -b2^2 b8 - 8 b4^3 - 27 b6^2 + 9 b2 b4 b6
        let b2sq = spec.mul(&b2, &b2)?;
        let mut d = spec.neg(&spec.mul(&b2sq, &b8)?);
        let b4cu = spec.mul(&spec.mul(&b4, &b4)?, &b4)?;
        d = spec.sub(&d, &spec.mul(&t(8), &b4cu)?)?;
        d = spec.sub(&d, &spec.mul(&t(27), &spec.mul(&b6, &b6)?)?)?;
        d = spec.add(&d, &spec.mul(&t(9), &spec.mul(&b2, &spec.mul(&b4, &b6)?)?)?)?;
        Ok(d)
    }

    pub fn j_invariant(&self, spec: &NumberFieldSpec) -> Result<RingElement> {
        let (c4, _) = self.c_invariants(spec)?;
        let d = self.discriminant(spec)?;
        let c4cu = spec.mul(&spec.mul(&c4, &c4)?, &c4)?;
        spec.div(&c4cu, &d)
    }

    /// Coordinate change x = u^2 x' + r, y = u^3 y' + u^2 s x' + t.
    pub fn transform(
        &self,
        spec: &NumberFieldSpec,
        u: &RingElement,
        r: &RingElement,
        s: &RingElement,
        t: &RingElement,
    ) -> Result<Curve> {
        let two = spec.from_int(&BigInt::from(2));
        let three = spec.from_int(&BigInt::from(3));
        let u2 = spec.mul(u, u)?;
        let u3 = spec.mul(&u2, u)?;
        let u4 = spec.mul(&u2, &u2)?;
        let u6 = spec.mul(&u3, &u3)?;
        let a1n = spec.add(&self.a1, &spec.mul(&two, s)?)?;
        let mut a2n = spec.sub(&self.a2, &spec.mul(s, &self.a1)?)?;
        a2n = spec.add(&a2n, &spec.mul(&three, r)?)?;
        a2n = spec.sub(&a2n, &spec.mul(s, s)?)?;
        let mut a3n = spec.add(&self.a3, &spec.mul(r, &self.a1)?)?;
        a3n = spec.add(&a3n, &spec.mul(&two, t)?)?;
        let mut a4n = spec.sub(&self.a4, &spec.mul(s, &self.a3)?)?;
        a4n = spec.add(&a4n, &spec.mul(&two, &spec.mul(r, &self.a2)?)?)?;
        let trs = spec.add(t, &spec.mul(r, s)?)?;
        a4n = spec.sub(&a4n, &spec.mul(&trs, &self.a1)?)?;
        a4n = spec.add(&a4n, &spec.mul(&three, &spec.mul(r, r)?)?)?;
        a4n = spec.sub(&a4n, &spec.mul(&two, &spec.mul(s, t)?)?)?;
        let mut a6n = spec.add(&self.a6, &spec.mul(r, &self.a4)?)?;
        a6n = spec.add(&a6n, &spec.mul(&spec.mul(r, r)?, &self.a2)?)?;
        a6n = spec.add(&a6n, &spec.mul(&spec.mul(r, r)?, r)?)?;
        a6n = spec.sub(&a6n, &spec.mul(t, &self.a3)?)?;
        a6n = spec.sub(&a6n, &spec.mul(t, t)?)?;
        a6n = spec.sub(&a6n, &spec.mul(&spec.mul(r, t)?, &self.a1)?)?;
        Ok(Curve {
            a1: spec.div(&a1n, u)?,
            a2: spec.div(&a2n, &u2)?,
            a3: spec.div(&a3n, &u3)?,
            a4: spec.div(&a4n, &u4)?,
            a6: spec.div(&a6n, &u6)?,
        })
    }
}

// --- reduction classification ----------------------------------------------------

/// Valuation helper treating zero as None (infinite valuation).
fn val_opt(
    spec: &NumberFieldSpec,
    x: &RingElement,
    prime: &PrimeIdeal,
) -> Result<Option<i64>> {
    if x.is_zero() {
        Ok(None)
    } else {
        Ok(Some(valuation(spec, x, prime)?))
    }
}

/// Classify the reduction of the curve at a prime. `over_p` must list every
/// prime above the same rational prime (used for uniformizer selection).
pub fn classify_reduction(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
    over_p: &[PrimeIdeal],
) -> Result<LocalClassification> {
    let (c4, c6) = curve.c_invariants(spec)?;
    let delta = curve.discriminant(spec)?;
    let v4 = val_opt(spec, &c4, prime)?;
    let v6 = val_opt(spec, &c6, prime)?;
    let vd = valuation(spec, &delta, prime)?;
    let vj = match v4 {
        None => None, // c4 = 0: j = 0
        Some(v) => Some(3 * v - vd),
    };
    if vd < 0 || v4.map_or(false, |v| v < 0) || v6.map_or(false, |v| v < 0) {
        return Err(Error::BadReduction);
    }

    if prime.p > 3 {
        return classify_tame(spec, curve, prime, over_p, v4, v6, vd, vj);
    }
    classify_wild(spec, curve, prime, over_p, vj)
}

/// Residue characteristic >= 5: minimal valuations from the scaling count
/// k = max { k : 4k <= v(c4), 6k <= v(c6), 12k <= v(Delta) }.
#[allow(clippy::too_many_arguments)]
fn classify_tame(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
    over_p: &[PrimeIdeal],
    v4: Option<i64>,
    v6: Option<i64>,
    vd: i64,
    vj: Option<i64>,
) -> Result<LocalClassification> {
    let mut k = vd / 12;
    if let Some(v) = v4 {
        k = k.min(v / 4);
    }
    if let Some(v) = v6 {
        k = k.min(v / 6);
    }
    let vd_min = vd - 12 * k;
    let v4_min = v4.map(|v| v - 4 * k);
    let reduction = if vd_min == 0 {
        Reduction::Good
    } else if v4_min == Some(0) {
        // Node: split iff (x0 - x1) is a square in the residue field, where
        // x0 is the double root and x1 the simple root of the reduced cubic
        // of the depressed model y^2 = x^3 + Ax + B.
        if multiplicative_is_split(spec, curve, prime, over_p, k)? {
            Reduction::SplitMultiplicative
        } else {
            Reduction::NonsplitMultiplicative
        }
    } else {
        Reduction::Additive
    };
    Ok(LocalClassification {
        prime_label: prime.label.clone(),
        reduction,
        v_disc_min: vd_min,
        v_c4_min: v4_min,
        v_j: vj,
        potentially_good: vj.map_or(true, |v| v >= 0),
        scaling_steps: k as u32,
    })
}

fn multiplicative_is_split(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
    over_p: &[PrimeIdeal],
    k: i64,
) -> Result<bool> {
    // Depressed model y^2 = x^3 + Ax + B with A = -c4/48, B = -c6/864,
    // rescaled by pi^k to make it P-minimal; 2, 3 are units here.
    let (c4, c6) = curve.c_invariants(spec)?;
    let a = spec.div(&spec.neg(&c4), &spec.from_int(&BigInt::from(48)))?;
    let b = spec.div(&spec.neg(&c6), &spec.from_int(&BigInt::from(864)))?;
    let (a, b) = if k > 0 {
        let pi = uniformizer_for(spec, prime, over_p)?;
        let pi4 = spec.pow(&pi, 4 * k as u64)?;
        let pi6 = spec.pow(&pi, 6 * k as u64)?;
        (spec.div(&a, &pi4)?, spec.div(&b, &pi6)?)
    } else {
        (a, b)
    };
    let (fq, ar) = residue(spec, &a, prime)?;
    let (_, br) = residue(spec, &b, prime)?;
    // Roots of x^3 + ar x + br: the node has a double root x0 and a simple
    // root x1 = -2 x0 (their sum vanishes).
    let poly = vec![br, ar, fq.zero(), fq.one()];
    let roots = crate::finitefield::roots_deg_le3(&fq, &poly)?;
    let x0 = roots
        .iter()
        .find(|(_, m)| *m == 2)
        .map(|(r, _)| *r)
        .ok_or(Error::BadReduction)?;
    let x1 = fq.neg(&fq.add(&x0, &x0));
    let diff = fq.sub(&x0, &x1);
    euler_is_square(&fq, &diff)
}

/// Residue characteristic 2 or 3: iterate the substitution search until the
/// model certifies minimal, then classify from minimal valuations with the
/// tangent-cone split test on the reduced singular point.
fn classify_wild(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
    over_p: &[PrimeIdeal],
    vj: Option<i64>,
) -> Result<LocalClassification> {
    let pi = uniformizer_for(spec, prime, over_p)?;
    let mut model = curve.clone();
    let mut steps = 0u32;
    let bound = {
        let d = curve.discriminant(spec)?;
        valuation(spec, &d, prime)? / 12 + 1
    };
    loop {
        let (c4, _) = model.c_invariants(spec)?;
        let delta = model.discriminant(spec)?;
        let vd = valuation(spec, &delta, prime)?;
        let v4 = val_opt(spec, &c4, prime)?;
        if vd < 0 || v4.map_or(false, |v| v < 0) {
            return Err(Error::BadReduction);
        }
        if vd < 12 || v4.map_or(false, |v| v < 4) {
            return finish_wild(spec, &model, prime, vd, v4, vj, steps);
        }
        match reduce_once(spec, &model, prime, &pi)? {
            Some(next) => {
                model = next;
                steps += 1;
                if steps as i64 > bound {
                    return Err(Error::Unclassified);
                }
            }
            // Exhausted the complete residue system: the model is minimal
            // even though v(Delta) >= 12 and v(c4) >= 4.
            None => return finish_wild(spec, &model, prime, vd, v4, vj, steps),
        }
    }
}

fn finish_wild(
    spec: &NumberFieldSpec,
    model: &Curve,
    prime: &PrimeIdeal,
    vd: i64,
    v4: Option<i64>,
    vj: Option<i64>,
    steps: u32,
) -> Result<LocalClassification> {
    let reduction = if vd == 0 {
        Reduction::Good
    } else if v4 == Some(0) {
        if node_is_split(spec, model, prime)? {
            Reduction::SplitMultiplicative
        } else {
            Reduction::NonsplitMultiplicative
        }
    } else {
        Reduction::Additive
    };
    Ok(LocalClassification {
        prime_label: prime.label.clone(),
        reduction,
        v_disc_min: vd,
        v_c4_min: v4,
        v_j: vj,
        potentially_good: vj.map_or(true, |v| v >= 0),
        scaling_steps: steps,
    })
}

/// One round of the non-minimality search: look for (r, s, t) making the
/// u = pi substitution integral. r runs over O/P^2, s over O/P, t over O/P^3;
/// in odd characteristic the linear conditions pin s and t uniquely, and away
/// from 3 they pin r, so the residue enumerations stay small.
fn reduce_once(
    spec: &NumberFieldSpec,
    model: &Curve,
    prime: &PrimeIdeal,
    pi: &RingElement,
) -> Result<Option<Curve>> {
    let p = prime.p;
    let h1 = prime.hnf.clone();
    let h2 = ideal_pow(spec, prime, 2)?;
    let h3 = ideal_pow(spec, prime, 3)?;
    let s_cands: Vec<RingElement> = if p == 2 {
        residue_reps(spec, &h1)?
    } else {
        // a1 + 2s = 0 mod P: s = -a1/2, unique mod P.
        let inv2 = inv_int_mod(spec, 2, prime, 1)?;
        let s = spec.mul(&spec.neg(&model.a1), &inv2)?;
        vec![reduce_to_rep(spec, &h1, &s)?]
    };
    for s in &s_cands {
        let a1n = spec.add(&model.a1, &spec.mul(&spec.from_int(&BigInt::from(2)), s)?)?;
        if !a1n.is_zero() && valuation(spec, &a1n, prime)? < 1 {
            continue;
        }
        let r_cands: Vec<RingElement> = if p == 3 {
            residue_reps(spec, &h2)?
        } else {
            // a2 - s a1 + 3r - s^2 = 0 mod P^2: r unique since 3 is a unit.
            let inv3 = inv_int_mod(spec, 3, prime, 2)?;
            let mut w = spec.sub(&model.a2, &spec.mul(s, &model.a1)?)?;
            w = spec.sub(&w, &spec.mul(s, s)?)?;
            let r = spec.mul(&spec.neg(&w), &inv3)?;
            vec![reduce_to_rep(spec, &h2, &r)?]
        };
        for r in &r_cands {
            let mut a2n = spec.sub(&model.a2, &spec.mul(s, &model.a1)?)?;
            a2n = spec.add(&a2n, &spec.mul(&spec.from_int(&BigInt::from(3)), r)?)?;
            a2n = spec.sub(&a2n, &spec.mul(s, s)?)?;
            if !a2n.is_zero() && valuation(spec, &a2n, prime)? < 2 {
                continue;
            }
            let t_cands: Vec<RingElement> = if p == 2 {
                residue_reps(spec, &h3)?
            } else {
                // a3 + r a1 + 2t = 0 mod P^3: t unique.
                let inv2 = inv_int_mod(spec, 2, prime, 3)?;
                let w = spec.add(&model.a3, &spec.mul(r, &model.a1)?)?;
                let t = spec.mul(&spec.neg(&w), &inv2)?;
                vec![reduce_to_rep(spec, &h3, &t)?]
            };
            for t in &t_cands {
                if let Some(next) = try_substitution(spec, model, prime, pi, r, s, t)? {
                    return Ok(Some(next));
                }
            }
        }
    }
    Ok(None)
}

fn try_substitution(
    spec: &NumberFieldSpec,
    model: &Curve,
    prime: &PrimeIdeal,
    pi: &RingElement,
    r: &RingElement,
    s: &RingElement,
    t: &RingElement,
) -> Result<Option<Curve>> {
    let next = model.transform(spec, pi, r, s, t)?;
    for (a, need) in [
        (&next.a1, 0),
        (&next.a2, 0),
        (&next.a3, 0),
        (&next.a4, 0),
        (&next.a6, 0),
    ] {
        if !a.is_zero() && valuation(spec, a, prime)? < need {
            return Ok(None);
        }
    }
    Ok(Some(next))
}

/// All residue representatives of O modulo the lattice h (coordinates in the
/// HNF fundamental box).
fn residue_reps(spec: &NumberFieldSpec, h: &crate::ideals::Hnf) -> Result<Vec<RingElement>> {
    let d0 = h[0][0].to_u64().ok_or(Error::TorsionCeiling(0))?;
    let d1 = h[1][1].to_u64().ok_or(Error::TorsionCeiling(0))?;
    let d2 = h[2][2].to_u64().ok_or(Error::TorsionCeiling(0))?;
    let mut out = Vec::with_capacity((d0 * d1 * d2) as usize);
    for c0 in 0..d0 {
        for c1 in 0..d1 {
            for c2 in 0..d2 {
                let coords = [BigInt::from(c0), BigInt::from(c1), BigInt::from(c2)];
                out.push(spec.from_integral_int_coords(&coords)?);
            }
        }
    }
    Ok(out)
}

fn reduce_to_rep(
    spec: &NumberFieldSpec,
    h: &crate::ideals::Hnf,
    x: &RingElement,
) -> Result<RingElement> {
    let (y, d) = crate::ideals::cleared_int_coords(spec, x)?;
    if !d.is_one() {
        return Err(Error::NotIntegralAtPrime);
    }
    spec.from_integral_int_coords(&hnf_reduce(h, &y))
}

/// Integer n inverted in O/P^k (requires p coprime to n), returned as the
/// rational-integer representative.
fn inv_int_mod(
    spec: &NumberFieldSpec,
    n: u64,
    prime: &PrimeIdeal,
    k: u32,
) -> Result<RingElement> {
    let m = BigInt::from(prime.p).pow(k * prime.e as u32);
    let inv = crate::arith::modinv_big(&BigInt::from(n), &m).ok_or(Error::NotInvertible)?;
    Ok(spec.from_int(&inv))
}

/// Tangent-cone test at the node of the reduced minimal model (residue
/// characteristic 2 or 3): split iff Y^2 + a1 X Y - (3 x0 + a2) X^2 factors
/// over the residue field.
fn node_is_split(spec: &NumberFieldSpec, model: &Curve, prime: &PrimeIdeal) -> Result<bool> {
    let (fq, a) = reduce_curve(spec, model, prime)?;
    let q = fq.q();
    // Locate the singular point by scanning F(x,y) and both partials.
    for xi in 0..q {
        for yi in 0..q {
            let x = fq.decode(xi);
            let y = fq.decode(yi);
            if !on_curve(&fq, &a, &x, &y) {
                continue;
            }
            // F_y = 2y + a1 x + a3, F_x = a1 y - 3x^2 - 2 a2 x - a4
            let fy = {
                let mut v = fq.add(&y, &y);
                v = fq.add(&v, &fq.mul(&a[0], &x));
                fq.add(&v, &a[2])
            };
            let fx = {
                let x2 = fq.mul(&x, &x);
                let mut v = fq.mul(&a[0], &y);
                v = fq.sub(&v, &fq.mul(&fq.scalar(3), &x2));
                v = fq.sub(&v, &fq.mul(&fq.scalar(2), &fq.mul(&a[1], &x)));
                fq.sub(&v, &a[3])
            };
            if !fq.is_zero(&fy) || !fq.is_zero(&fx) {
                continue;
            }
            // Q(X, Y) = Y^2 + a1 XY - (3 x0 + a2) X^2
            let c = fq.add(&fq.mul(&fq.scalar(3), &x), &a[1]);
            if fq.p == 2 {
                // Nodes in char 2 need a1 != 0; split iff z^2 + z = c / a1^2
                // has a root (Artin-Schreier trace).
                if fq.is_zero(&a[0]) {
                    return Err(Error::BadReduction);
                }
                let a1sq_inv = fq.inv(&fq.mul(&a[0], &a[0]))?;
                let w = fq.mul(&c, &a1sq_inv);
                let mut tr = fq.zero();
                let mut pow = w;
                for _ in 0..fq.f {
                    tr = fq.add(&tr, &pow);
                    pow = fq.mul(&pow, &pow);
                }
                return Ok(fq.is_zero(&tr));
            }
            // Odd characteristic: discriminant a1^2 + 4(3x0 + a2).
            let disc = fq.add(
                &fq.mul(&a[0], &a[0]),
                &fq.mul(&fq.scalar(4), &c),
            );
            if fq.is_zero(&disc) {
                return Err(Error::BadReduction);
            }
            return euler_is_square(&fq, &disc);
        }
    }
    Err(Error::BadReduction)
}

// --- reduction to residue fields and point counting --------------------------------

/// Residues [a1, a2, a3, a4, a6] of the model at a prime.
pub fn reduce_curve(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
) -> Result<(FqSpec, [FqElem; 5])> {
    let (fq, r1) = residue(spec, &curve.a1, prime)?;
    let (_, r2) = residue(spec, &curve.a2, prime)?;
    let (_, r3) = residue(spec, &curve.a3, prime)?;
    let (_, r4) = residue(spec, &curve.a4, prime)?;
    let (_, r6) = residue(spec, &curve.a6, prime)?;
    Ok((fq, [r1, r2, r3, r4, r6]))
}

fn on_curve(fq: &FqSpec, a: &[FqElem; 5], x: &FqElem, y: &FqElem) -> bool {
    // y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6
    let lhs = {
        let mut v = fq.mul(y, y);
        v = fq.add(&v, &fq.mul(&a[0], &fq.mul(x, y)));
        fq.add(&v, &fq.mul(&a[2], y))
    };
    let rhs = {
        let x2 = fq.mul(x, x);
        let mut v = fq.mul(&x2, x);
        v = fq.add(&v, &fq.mul(&a[1], &x2));
        v = fq.add(&v, &fq.mul(&a[3], x));
        fq.add(&v, &a[4])
    };
    lhs == rhs
}

/// #E(F_q) including the point at infinity. Brute force in characteristic 2
/// and for small q; character sums on the depressed cubic otherwise, with the
/// x-range fanned out across threads for large fields.
pub fn count_points(fq: &FqSpec, a: &[FqElem; 5]) -> Result<u64> {
    let q = fq.q();
    if q > COUNT_CEILING {
        return Err(Error::CountCeiling(q, COUNT_CEILING));
    }
    if fq.p == 2 {
        return count_char2(fq, a);
    }
    // Complete the square: y -> (y - a1 x - a3)/2 gives y^2 = 4x^3 + b2 x^2
    // + 2 b4 x + b6; same point counts since 2 is a unit.
    let b2 = {
        let a1sq = fq.mul(&a[0], &a[0]);
        fq.add(&a1sq, &fq.mul(&fq.scalar(4), &a[1]))
    };
    let b4 = fq.add(
        &fq.mul(&fq.scalar(2), &a[3]),
        &fq.mul(&a[0], &a[2]),
    );
    let b6 = fq.add(&fq.mul(&a[2], &a[2]), &fq.mul(&fq.scalar(4), &a[4]));
    let g = [b6, fq.add(&b4, &b4), b2, fq.scalar(4)];
    let chi_sum = |range: std::ops::Range<u64>| -> i64 {
        let mut acc = 0i64;
        for xi in range {
            let x = fq.decode(xi);
            let mut v = fq.zero();
            for c in g.iter().rev() {
                v = fq.add(&fq.mul(&v, &x), c);
            }
            if fq.is_zero(&v) {
                continue;
            }
            acc += if euler_is_square(fq, &v).expect("nonzero") {
                1
            } else {
                -1
            };
        }
        acc
    };
    let total: i64 = if q >= (1 << 16) {
        let chunks: Vec<(u64, u64)> = {
            let step = 1u64 << 14;
            (0..q)
                .step_by(step as usize)
                .map(|s| (s, (s + step).min(q)))
                .collect()
        };
        chunks.par_iter().map(|&(s, e)| chi_sum(s..e)).sum()
    } else {
        chi_sum(0..q)
    };
    Ok((q as i64 + 1 + total) as u64)
}

fn count_char2(fq: &FqSpec, a: &[FqElem; 5]) -> Result<u64> {
    let q = fq.q();
    let mut count = 1u64; // infinity
    for xi in 0..q {
        let x = fq.decode(xi);
        // y^2 + h y = g with h = a1 x + a3, g = x^3 + a2 x^2 + a4 x + a6
        let h = fq.add(&fq.mul(&a[0], &x), &a[2]);
        let g = {
            let x2 = fq.mul(&x, &x);
            let mut v = fq.mul(&x2, &x);
            v = fq.add(&v, &fq.mul(&a[1], &x2));
            v = fq.add(&v, &fq.mul(&a[3], &x));
            fq.add(&v, &a[4])
        };
        if fq.is_zero(&h) {
            // Squaring is a bijection: exactly one y.
            count += 1;
        } else {
            // Roots of y^2 + hy + g: substitute y = hz to get z^2 + z = g/h^2;
            // two roots iff trace vanishes.
            let w = fq.mul(&g, &fq.inv(&fq.mul(&h, &h))?);
            let mut tr = fq.zero();
            let mut pow = w;
            for _ in 0..fq.f {
                tr = fq.add(&tr, &pow);
                pow = fq.mul(&pow, &pow);
            }
            if fq.is_zero(&tr) {
                count += 2;
            }
        }
    }
    Ok(count)
}

/// Trace of Frobenius a_P = N(P) + 1 - #E(k_P) at a good prime.
pub fn frobenius_trace(
    spec: &NumberFieldSpec,
    curve: &Curve,
    prime: &PrimeIdeal,
) -> Result<BigInt> {
    let (fq, a) = reduce_curve(spec, curve, prime)?;
    if reduced_is_singular(&fq, &a) {
        return Err(Error::BadReduction);
    }
    let n = count_points(&fq, &a)?;
    Ok(BigInt::from(fq.q()) + BigInt::one() - BigInt::from(n))
}

pub fn reduced_is_singular(fq: &FqSpec, a: &[FqElem; 5]) -> bool {
    // Discriminant of the reduced model via the b-invariants.
    let a1sq = fq.mul(&a[0], &a[0]);
    let b2 = fq.add(&a1sq, &fq.mul(&fq.scalar(4), &a[1]));
    let b4 = fq.add(&fq.mul(&fq.scalar(2), &a[3]), &fq.mul(&a[0], &a[2]));
    let b6 = fq.add(&fq.mul(&a[2], &a[2]), &fq.mul(&fq.scalar(4), &a[4]));
    let mut b8 = fq.mul(&a1sq, &a[4]);
    b8 = fq.add(&b8, &fq.mul(&fq.scalar(4), &fq.mul(&a[1], &a[4])));
    b8 = fq.sub(&b8, &fq.mul(&a[0], &fq.mul(&a[2], &a[3])));
    b8 = fq.add(&b8, &fq.mul(&a[1], &fq.mul(&a[2], &a[2])));
    b8 = fq.sub(&b8, &fq.mul(&a[3], &a[3]));
    let b2sq = fq.mul(&b2, &b2);
    let mut d = fq.neg(&fq.mul(&b2sq, &b8));
    let b4cu = fq.mul(&fq.mul(&b4, &b4), &b4);
    d = fq.sub(&d, &fq.mul(&fq.scalar(8), &b4cu));
    d = fq.sub(&d, &fq.mul(&fq.scalar(27), &fq.mul(&b6, &b6)));
    d = fq.add(&d, &fq.mul(&fq.scalar(9), &fq.mul(&b2, &fq.mul(&b4, &b6))));
    fq.is_zero(&d)
}

// --- group law over F_q -------------------------------------------------------------

pub type FqPoint = Option<(FqElem, FqElem)>;

pub fn fq_point_on_curve(fq: &FqSpec, a: &[FqElem; 5], p: &FqPoint) -> bool {
    match p {
        None => true,
        Some((x, y)) => on_curve(fq, a, x, y),
    }
}

pub fn fq_neg_point(fq: &FqSpec, a: &[FqElem; 5], p: &FqPoint) -> FqPoint {
    p.map(|(x, y)| {
        let ny = fq.neg(&fq.add(&y, &fq.add(&fq.mul(&a[0], &x), &a[2])));
        (x, ny)
    })
}

pub fn fq_add_points(
    fq: &FqSpec,
    a: &[FqElem; 5],
    p1: &FqPoint,
    p2: &FqPoint,
) -> Result<FqPoint> {
    let (x1, y1) = match p1 {
        None => return Ok(*p2),
        Some(v) => *v,
    };
    let (x2, y2) = match p2 {
        None => return Ok(*p1),
        Some(v) => *v,
    };
    let (lam, nu) = if x1 != x2 {
        let dx = fq.sub(&x2, &x1);
        let dxi = fq.inv(&dx)?;
        let lam = fq.mul(&fq.sub(&y2, &y1), &dxi);
        let nu = fq.mul(&fq.sub(&fq.mul(&y1, &x2), &fq.mul(&y2, &x1)), &dxi);
        (lam, nu)
    } else {
        // x1 = x2: either inverse points or a doubling.
        let neg_y1 = fq.neg(&fq.add(&y1, &fq.add(&fq.mul(&a[0], &x1), &a[2])));
        if y2 == neg_y1 {
            return Ok(None);
        }
        let den = fq.add(
            &fq.add(&y1, &y1),
            &fq.add(&fq.mul(&a[0], &x1), &a[2]),
        );
        let deni = fq.inv(&den)?;
        let x1sq = fq.mul(&x1, &x1);
        let mut num = fq.mul(&fq.scalar(3), &x1sq);
        num = fq.add(&num, &fq.mul(&fq.scalar(2), &fq.mul(&a[1], &x1)));
        num = fq.add(&num, &a[3]);
        num = fq.sub(&num, &fq.mul(&a[0], &y1));
        let lam = fq.mul(&num, &deni);
        let mut nu_num = fq.neg(&fq.mul(&x1sq, &x1));
        nu_num = fq.add(&nu_num, &fq.mul(&a[3], &x1));
        nu_num = fq.add(&nu_num, &fq.add(&a[4], &a[4]));
        nu_num = fq.sub(&nu_num, &fq.mul(&a[2], &y1));
        let nu = fq.mul(&nu_num, &deni);
        (lam, nu)
    };
    let mut x3 = fq.mul(&lam, &lam);
    x3 = fq.add(&x3, &fq.mul(&a[0], &lam));
    x3 = fq.sub(&x3, &a[1]);
    x3 = fq.sub(&x3, &fq.add(&x1, &x2));
    let mut y3 = fq.neg(&fq.mul(&fq.add(&lam, &a[0]), &x3));
    y3 = fq.sub(&y3, &nu);
    y3 = fq.sub(&y3, &a[2]);
    Ok(Some((x3, y3)))
}

pub fn fq_scalar_mul(
    fq: &FqSpec,
    a: &[FqElem; 5],
    n: u64,
    p: &FqPoint,
) -> Result<FqPoint> {
    let mut acc: FqPoint = None;
    let mut base = *p;
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc = fq_add_points(fq, a, &acc, &base)?;
        }
        n >>= 1;
        if n > 0 {
            base = fq_add_points(fq, a, &base, &base)?;
        }
    }
    Ok(acc)
}

/// Number of F_q-rational l-torsion points, by exhausting the group (small q
/// only). The answer is 1, l, or l^2 for prime l.
pub fn ell_torsion_count(fq: &FqSpec, a: &[FqElem; 5], ell: u64) -> Result<u64> {
    let q = fq.q();
    if q > TORSION_ENUM_CEILING {
        return Err(Error::TorsionCeiling(q));
    }
    let mut count = 1u64; // infinity
    for xi in 0..q {
        for yi in 0..q {
            let x = fq.decode(xi);
            let y = fq.decode(yi);
            if !on_curve(fq, a, &x, &y) {
                continue;
            }
            let pt = Some((x, y));
            if fq_scalar_mul(fq, a, ell, &pt)?.is_none() {
                count += 1;
            }
        }
    }
    Ok(count)
}

// --- reference curves ------------------------------------------------------------

/// The maximal-image curve over the discriminant -31 field:
/// y^2 = x (x - (2a^2+7a+19)) (x - (18a^2+7a+3)).
pub fn curve_disc_m31(spec: &NumberFieldSpec) -> Result<Curve> {
    let r1 = spec.elem_i64(19, 7, 2);
    let r2 = spec.elem_i64(3, 7, 18);
    Curve::two_torsion_form(spec, &r1, &r2)
}

/// The nonsemistable example over the discriminant -503 field:
/// y^2 = x (x + (10b^2 - 3)) (x - (b + 4)).
pub fn curve_disc_m503(spec: &NumberFieldSpec) -> Result<Curve> {
    let r1 = spec.elem_i64(3, 0, -10);
    let r2 = spec.elem_i64(4, 1, 0);
    Curve::two_torsion_form(spec, &r1, &r2)
}

/// The trivial-torsion example over the discriminant -1823 field:
/// y^2 + xy + by = x^3 - 8x^2 - 6x - 1.
pub fn curve_disc_m1823(spec: &NumberFieldSpec) -> Result<Curve> {
    Curve::new(
        spec,
        spec.one(),
        spec.elem_i64(-8, 0, 0),
        spec.gen(),
        spec.elem_i64(-6, 0, 0),
        spec.elem_i64(-1, 0, 0),
    )
}

/// Family member y^2 = x (x - (a^2 + ba + c)) (x - 16(a^2 + a + 1)) over the
/// discriminant -31 field.
pub fn family_curve(spec: &NumberFieldSpec, b: &BigInt, c: &BigInt) -> Result<Curve> {
    let r1 = spec.elem([
        BigRational::from_integer(c.clone()),
        BigRational::from_integer(b.clone()),
        BigRational::one(),
    ]);
    let r2 = spec.elem_i64(16, 16, 16);
    Curve::two_torsion_form(spec, &r1, &r2)
}
