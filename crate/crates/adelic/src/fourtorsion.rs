//! 4-torsion field data for curves with full rational 2-torsion.
//!
//! For E: y^2 = (x - e1)(x - e2)(x - e3) the 4-division field is
//! K(E[4]) = K(i, sqrt(d1), sqrt(d2), sqrt(d3)) with di the "halving
//! discriminants" (ei - ej)(ei - ek); together with d4 = sqrt(Delta) these
//! generate the four independent quadratic subextensions.  Two global facts
//! reduce to squareness tests in K:
//!
//!  * [K(E[4]) : K] = 16  iff all 15 nonempty subset products of
//!    {d1, d2, d3, d4} are nonsquares in K;
//!  * K(E[4]) and the cyclotomic closure K^cyc can only share more than K(i)
//!    if t/s is a square in K for some subset product t of the di and some
//!    subset product s of the rational primes below 2*Delta.
//!
//! Verdicts are three-valued: a failed squareness scan never silently counts
//! as a nonsquare.  Congruence families certify the intersection condition
//! upstream by residue avoidance (see `family`); this module always performs
//! the full pair scan.

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;

use crate::arith;
use crate::ellcurve::Curve;
use crate::error::{Error, Result};
use crate::numberfield::{NumberFieldSpec, RingElement};
use crate::squares::{self, SquareVerdict};

/// Largest allowed rational-prime support of 2*Delta; |P_S| = 2^|S| - 1
/// squareness scans per d-product get expensive beyond this.
pub const MAX_S_SET: usize = 10;

#[derive(Clone, Debug)]
pub struct HalvingData {
    /// d[0..3] = halving discriminants, d[3] = exact square root of Delta.
    pub d: [RingElement; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriVerdict {
    Certified,
    Failed,
    Undetermined,
}

/// One subset-product squareness check; `mask` bit i selects d[i].
#[derive(Clone, Debug)]
pub struct ProductCheck {
    pub mask: u8,
    pub verdict: SquareVerdict,
}

#[derive(Clone, Debug)]
pub struct DegreeEvidence {
    pub verdict: TriVerdict,
    pub checks: Vec<ProductCheck>,
}

/// One (s, t)-pair check of the intersection criterion: t/s and t*s share a
/// square class, so the integral product is what gets tested.
#[derive(Clone, Debug)]
pub struct PairCheck {
    pub s: BigInt,
    pub t_mask: u8,
    pub verdict: SquareVerdict,
}

#[derive(Clone, Debug)]
pub struct IntersectionEvidence {
    pub verdict: TriVerdict,
    pub s_set: Vec<u64>,
    pub pairs: Vec<PairCheck>,
}

/// Outcome of the sqrt(Delta)-in-K^cyc test used by the no-2-torsion pipeline.
#[derive(Clone, Debug)]
pub enum DiscCycVerdict {
    /// Some Delta*s is a square: sqrt(Delta) lies in K^cyc (condition fails).
    InCyclotomic { s: BigInt },
    /// Every Delta*s is a nonsquare, with witnesses.
    NotInCyclotomic { pairs: Vec<PairCheck> },
    Undetermined { reason: String },
}

pub fn halving_discriminants(
    spec: &NumberFieldSpec,
    e: &[RingElement; 3],
) -> Result<HalvingData> {
    let diff = |i: usize, j: usize| -> Result<RingElement> {
        let d = spec.sub(&e[i], &e[j])?;
        if d.is_zero() {
            return Err(Error::SingularModel);
        }
        Ok(d)
    };
    let d01 = diff(0, 1)?;
    let d02 = diff(0, 2)?;
    let d12 = diff(1, 2)?;
    let d1 = spec.mul(&d01, &d02)?;
    let d2 = spec.mul(&spec.neg(&d01), &d12)?;
    let d3 = spec.mul(&spec.neg(&d02), &spec.neg(&d12))?;
    let four = spec.from_int(&BigInt::from(4));
    let d4 = spec.mul(&spec.mul(&four, &d1)?, &d12)?;

    // d4^2 must equal the discriminant of y^2 = (x-e1)(x-e2)(x-e3) exactly.
    let curve = curve_from_roots(spec, e)?;
    let delta = curve.discriminant(spec)?;
    debug_assert!(spec.sub(&spec.mul(&d4, &d4)?, &delta)?.is_zero());

    Ok(HalvingData {
        d: [d1, d2, d3, d4],
    })
}

/// The monic full-2-torsion model with the given roots.
pub fn curve_from_roots(spec: &NumberFieldSpec, e: &[RingElement; 3]) -> Result<Curve> {
    let a2 = spec.neg(&spec.add(&spec.add(&e[0], &e[1])?, &e[2])?);
    let e01 = spec.mul(&e[0], &e[1])?;
    let a4 = spec.add(
        &spec.add(&e01, &spec.mul(&e[0], &e[2])?)?,
        &spec.mul(&e[1], &e[2])?,
    )?;
    let a6 = spec.neg(&spec.mul(&e01, &e[2])?);
    Curve::new(spec, spec.zero(), a2, spec.zero(), a4, a6)
}

/// Product of the d[i] selected by `mask` (nonzero, bits 0..4).
pub fn subset_product(
    spec: &NumberFieldSpec,
    h: &HalvingData,
    mask: u8,
) -> Result<RingElement> {
    debug_assert!(mask != 0 && mask < 16);
    let mut acc = spec.one();
    for (i, d) in h.d.iter().enumerate() {
        if mask & (1 << i) != 0 {
            acc = spec.mul(&acc, d)?;
        }
    }
    Ok(acc)
}

/// [K(E[4]) : K] = 16 iff all 15 subset products are nonsquares.
pub fn mod4_degree_is_16(spec: &NumberFieldSpec, h: &HalvingData) -> Result<DegreeEvidence> {
    let masks: Vec<u8> = (1u8..16).collect();
    let mut checks = masks
        .par_iter()
        .map(|&mask| -> Result<ProductCheck> {
            let prod = subset_product(spec, h, mask)?;
            let verdict = squares::is_square_in_field(spec, &prod)?;
            Ok(ProductCheck { mask, verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    checks.sort_by_key(|c| c.mask);
    Ok(DegreeEvidence {
        verdict: merge_verdicts(checks.iter().map(|c| &c.verdict)),
        checks,
    })
}

fn merge_verdicts<'a, I: Iterator<Item = &'a SquareVerdict>>(it: I) -> TriVerdict {
    let mut out = TriVerdict::Certified;
    for v in it {
        match v {
            SquareVerdict::Square { .. } => return TriVerdict::Failed,
            SquareVerdict::NonSquare(_) => {}
            SquareVerdict::Undetermined { .. } => out = TriVerdict::Undetermined,
        }
    }
    out
}

/// Rational primes below the primes of K dividing 2*Delta: exactly the prime
/// support of N(2*Delta).
pub fn s_set(spec: &NumberFieldSpec, delta: &RingElement) -> Result<Vec<u64>> {
    let two_delta = spec.mul(&spec.from_int(&BigInt::from(2)), delta)?;
    let n = spec.norm(&two_delta)?;
    if !n.is_integer() {
        return Err(Error::Config(
            "discriminant must be integral for the S-set".into(),
        ));
    }
    arith::prime_support(&n.to_integer())
}

/// Nonempty subset products of the S-set, ascending.
pub fn subset_products_of_s(s: &[u64]) -> Result<Vec<BigInt>> {
    if s.len() > MAX_S_SET {
        return Err(Error::Config(format!(
            "S-set has {} primes; pair scan capped at {}",
            s.len(),
            MAX_S_SET
        )));
    }
    let mut out = Vec::with_capacity((1usize << s.len()) - 1);
    for mask in 1u32..(1u32 << s.len()) {
        let mut prod = BigInt::one();
        for (i, &p) in s.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= BigInt::from(p);
            }
        }
        out.push(prod);
    }
    out.sort();
    Ok(out)
}

/// Scan every (s, t) in P_S x P_T.  Certified = all products nonsquare, which
/// forces K(E[4]) cap K^cyc = K(i).  A square pair only *permits* a larger
/// intersection (the criterion is necessary, not sufficient), so the verdict
/// reports Failed with the pair rather than asserting the bad case.
pub fn cyclotomic_intersection_ok(
    spec: &NumberFieldSpec,
    h: &HalvingData,
    delta: &RingElement,
) -> Result<IntersectionEvidence> {
    let s_primes = s_set(spec, delta)?;
    let s_products = subset_products_of_s(&s_primes)?;
    let mut jobs = Vec::new();
    for s in &s_products {
        for t_mask in 1u8..16 {
            jobs.push((s.clone(), t_mask));
        }
    }
    let mut pairs = jobs
        .par_iter()
        .map(|(s, t_mask)| -> Result<PairCheck> {
            let t = subset_product(spec, h, *t_mask)?;
            let prod = spec.mul(&t, &spec.from_int(s))?;
            let verdict = squares::is_square_in_field(spec, &prod)?;
            Ok(PairCheck {
                s: s.clone(),
                t_mask: *t_mask,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|a, b| (a.s.clone(), a.t_mask).cmp(&(b.s.clone(), b.t_mask)));
    Ok(IntersectionEvidence {
        verdict: merge_verdicts(pairs.iter().map(|p| &p.verdict)),
        s_set: s_primes,
        pairs,
    })
}

/// For curves without full 2-torsion: sqrt(Delta) lies in K^cyc iff Delta*s is
/// a square for some s in P_S.  Certification wants NotInCyclotomic.
pub fn sqrt_disc_in_cyclotomic(
    spec: &NumberFieldSpec,
    delta: &RingElement,
) -> Result<DiscCycVerdict> {
    match squares::is_square_in_field(spec, delta)? {
        SquareVerdict::Square { .. } => {
            return Err(Error::Config(
                "Delta is a square in K; the quadratic criterion is vacuous".into(),
            ))
        }
        _ => {}
    }
    let s_primes = s_set(spec, delta)?;
    let s_products = subset_products_of_s(&s_primes)?;
    let mut pairs = Vec::new();
    for s in &s_products {
        let prod = spec.mul(delta, &spec.from_int(s))?;
        let verdict = squares::is_square_in_field(spec, &prod)?;
        match &verdict {
            SquareVerdict::Square { .. } => {
                return Ok(DiscCycVerdict::InCyclotomic { s: s.clone() })
            }
            SquareVerdict::Undetermined { reason } => {
                return Ok(DiscCycVerdict::Undetermined {
                    reason: format!("s = {}: {}", s, reason),
                })
            }
            SquareVerdict::NonSquare(_) => pairs.push(PairCheck {
                s: s.clone(),
                t_mask: 0,
                verdict,
            }),
        }
    }
    Ok(DiscCycVerdict::NotInCyclotomic { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numberfield::tests_support::field_disc_m31;
    use crate::squares::is_square_in_field;
    use num_rational::BigRational;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn e13_roots(spec: &NumberFieldSpec) -> [RingElement; 3] {
        [
            spec.zero(),
            spec.elem_i64(19, 7, 2),
            spec.elem_i64(3, 7, 18),
        ]
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn halving_identity_on_random_roots() {
        let spec = field_disc_m31();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..25 {
            let mut e: Vec<RingElement> = Vec::new();
            while e.len() < 3 {
                let cand = spec.elem([
                    rat(rng.gen_range(-9..10)),
                    rat(rng.gen_range(-9..10)),
                    rat(rng.gen_range(-9..10)),
                ]);
                if e.iter().all(|x| !spec.sub(x, &cand).unwrap().is_zero()) {
                    e.push(cand);
                }
            }
            let e: [RingElement; 3] = [e[0].clone(), e[1].clone(), e[2].clone()];
            let h = halving_discriminants(&spec, &e).unwrap();
            // d4^2 = Delta, checked against the assembled model.
            let delta = curve_from_roots(&spec, &e)
                .unwrap()
                .discriminant(&spec)
                .unwrap();
            assert!(spec
                .sub(&spec.mul(&h.d[3], &h.d[3]).unwrap(), &delta)
                .unwrap()
                .is_zero());
            // disc((x - e1)^2 - d1) = 4 d1: immediate from disc(x^2+bx+c) = b^2-4c,
            // asserted as the quadratic identity b^2 - 4c with b = -2e1, c = e1^2 - d1.
            let b = spec.neg(&spec.add(&e[0], &e[0]).unwrap());
            let c = spec
                .sub(&spec.mul(&e[0], &e[0]).unwrap(), &h.d[0])
                .unwrap();
            let disc = spec
                .sub(
                    &spec.mul(&b, &b).unwrap(),
                    &spec.mul(&spec.from_int(&BigInt::from(4)), &c).unwrap(),
                )
                .unwrap();
            let four_d1 = spec
                .mul(&spec.from_int(&BigInt::from(4)), &h.d[0])
                .unwrap();
            assert!(spec.sub(&disc, &four_d1).unwrap().is_zero());
        }
    }

    #[test]
    fn repeated_roots_rejected() {
        let spec = field_disc_m31();
        let e = [spec.zero(), spec.one(), spec.one()];
        assert!(matches!(
            halving_discriminants(&spec, &e),
            Err(Error::SingularModel)
        ));
    }

    #[test]
    fn symmetric_model_d_value() {
        // e = (0, 1, -1): d for e1 = 0 is (0-1)(0+1) = -1.
        let spec = field_disc_m31();
        let e = [spec.zero(), spec.one(), spec.neg(&spec.one())];
        let h = halving_discriminants(&spec, &e).unwrap();
        assert!(spec
            .sub(&h.d[0], &spec.neg(&spec.one()))
            .unwrap()
            .is_zero());
        // d2 = (1-0)(1+1) = 2 and d3 = (-1-0)(-1-1) = 2, so d2*d3 = 4 is a
        // square: the degree-16 test must fail on this model.
        let ev = mod4_degree_is_16(&spec, &h).unwrap();
        assert_eq!(ev.verdict, TriVerdict::Failed);
        let sq = ev
            .checks
            .iter()
            .find(|c| c.mask == 0b0110)
            .expect("d2*d3 check present");
        assert!(sq.verdict.is_square());
    }

    #[test]
    fn e13_d_values_match_printed_table_up_to_squares() {
        let spec = field_disc_m31();
        let h = halving_discriminants(&spec, &e13_roots(&spec)).unwrap();
        // Printed values for the reference curve; order there follows the
        // quadratic factors of the 4-division polynomial, not our root order.
        let printed = [
            spec.elem_i64(-83, -22, 361),
            spec.elem_i64(-640, -2048, -2112),
            spec.elem_i64(1552, 1976, -372),
        ];
        // The printed d1 is literally r1*r2 = our d[0].
        assert!(spec.sub(&printed[0], &h.d[0]).unwrap().is_zero());
        // The printed d2 is 4 * our d[2] (same square class).
        let four_d3 = spec
            .mul(&spec.from_int(&BigInt::from(4)), &h.d[2])
            .unwrap();
        assert!(spec.sub(&printed[1], &four_d3).unwrap().is_zero());
        // The printed d3 belongs to none of the 15 subset-product square
        // classes generated by the verified discriminants (the value as
        // printed is corrupt); our own d-values are anchored by d4^2 = Delta
        // and the exact matches above.
        for mask in 1u8..16 {
            let prod = subset_product(&spec, &h, mask).unwrap();
            let class = spec.mul(&printed[2], &prod).unwrap();
            assert!(
                !is_square_in_field(&spec, &class).unwrap().is_square(),
                "printed d3 unexpectedly matched mask {}",
                mask
            );
        }
        // Printed d4 = 2^6 alpha^3 r1 r2 (alpha - 1) equals our d[3] exactly.
        let alpha = spec.gen();
        let alpha_cubed = spec.pow(&alpha, 3).unwrap();
        let mut printed_d4 = spec.from_int(&BigInt::from(64));
        printed_d4 = spec.mul(&printed_d4, &alpha_cubed).unwrap();
        printed_d4 = spec.mul(&printed_d4, &spec.elem_i64(19, 7, 2)).unwrap();
        printed_d4 = spec.mul(&printed_d4, &spec.elem_i64(3, 7, 18)).unwrap();
        printed_d4 = spec
            .mul(&printed_d4, &spec.sub(&alpha, &spec.one()).unwrap())
            .unwrap();
        assert!(spec.sub(&printed_d4, &h.d[3]).unwrap().is_zero());
    }

    #[test]
    fn e13_degree_sixteen_certified() {
        let spec = field_disc_m31();
        let h = halving_discriminants(&spec, &e13_roots(&spec)).unwrap();
        let ev = mod4_degree_is_16(&spec, &h).unwrap();
        assert_eq!(ev.verdict, TriVerdict::Certified);
        assert_eq!(ev.checks.len(), 15);
        assert!(ev.checks.iter().all(|c| c.verdict.is_nonsquare()));
    }

    #[test]
    fn e13_s_set_and_pair_count() {
        let spec = field_disc_m31();
        let e = e13_roots(&spec);
        let delta = curve_from_roots(&spec, &e)
            .unwrap()
            .discriminant(&spec)
            .unwrap();
        let s = s_set(&spec, &delta).unwrap();
        assert_eq!(s, vec![2, 3, 31, 167, 6857]);
        assert_eq!(subset_products_of_s(&s).unwrap().len(), 31);
    }

    #[test]
    fn e13_intersection_scan_all_nonsquare() {
        let spec = field_disc_m31();
        let e = e13_roots(&spec);
        let h = halving_discriminants(&spec, &e).unwrap();
        let delta = curve_from_roots(&spec, &e)
            .unwrap()
            .discriminant(&spec)
            .unwrap();
        let ev = cyclotomic_intersection_ok(&spec, &h, &delta).unwrap();
        assert_eq!(ev.verdict, TriVerdict::Certified);
        assert_eq!(ev.pairs.len(), 465);
        assert!(ev.pairs.iter().all(|p| p.verdict.is_nonsquare()));
    }

    #[test]
    fn disc_square_input_rejected_for_cyc_test() {
        let spec = field_disc_m31();
        let four = spec.from_int(&BigInt::from(4));
        assert!(sqrt_disc_in_cyclotomic(&spec, &four).is_err());
    }

    #[test]
    fn disc_times_chosen_s_square_is_flagged() {
        // Delta = 2 * alpha^2 has sqrt in K^cyc iff some Delta*s is a square;
        // s = 2 gives (2 alpha)^2.
        let spec = field_disc_m31();
        let delta = spec
            .mul(
                &spec.from_int(&BigInt::from(2)),
                &spec.mul(&spec.gen(), &spec.gen()).unwrap(),
            )
            .unwrap();
        match sqrt_disc_in_cyclotomic(&spec, &delta).unwrap() {
            DiscCycVerdict::InCyclotomic { s } => assert_eq!(s, BigInt::from(2)),
            other => panic!("expected InCyclotomic, got {:?}", other),
        }
    }
}

