//! Congruence families of elliptic curves over K = Q(a), a³ + a + 1 = 0.
//!
//! Members are the curves E_{b,c}: y² = x (x − A) (x − B) with
//! A = a² + ba + c and B = 16 (a² + a + 1), parametrised by rational
//! integers (b, c).  The module provides the pieces needed to assemble and
//! audit a congruence class all of whose members have maximal adelic image:
//!
//! * the semistability congruence on (b, c) mod 12;
//! * brute-force residue scans locating the pairs (b, c) mod p for which the
//!   rational prime p divides the curve discriminant in O_K — the only way a
//!   4-torsion kummer generator can collide with the cyclotomic tower;
//! * symbolic verification of the division-polynomial identities and of the
//!   linear-elimination step that confines such p to a fixed finite list;
//! * CRT assembly of the per-condition congruence rows into one (M, b0, c0);
//! * spot checks that instantiate actual members and machine-verify every
//!   witness-prime condition at the fixed small primes.
//!
//! Everything here is specific to the x³ + x + 1 field; entry points
//! validate the supplied field spec and reject others.
//!
//! A note on the mod-4 witness condition: a degree-16 mod-4 image needs all
//! 15 nonempty subset products of the four kummer discriminants d₁..d₄ to be
//! nonsquares.  Witness primes 𝔭₁..𝔭₄ certify this whenever the 4×4 matrix of
//! quadratic-character bits χ(dⱼ mod 𝔭ᵢ) is invertible over F₂ (every subset
//! indicator then has a prime where the product is a nonsquare).  The
//! one-nonsquare-per-prime pattern recorded in an earlier hand calculation is
//! the special case of an identity matrix; at the stated base point the
//! machine-computed matrix is a different invertible matrix, which certifies
//! the same conclusion.  The hand-recorded generator for the fourth prime has
//! norm −199 and lies over no prime of {7, 23, 31}; the degree-1 prime over
//! 23 is the one that completes an invertible matrix and is used instead.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::arith;
use crate::certify::{full_four_torsion_in_residue, witness_triple, FrobeniusDatum};
use crate::ellcurve::family_curve;
use crate::error::{Error, Result};
use crate::ideals::{residue, split_prime, valuation, PrimeIdeal};
use crate::finitefield::euler_is_square;
use crate::numberfield::{NumberFieldSpec, RingElement};

/// Primes scanned for excluded residue pairs.  The first seven come from the
/// elimination bound (see [`linear_elimination_report`]); 113 divides the
/// hand-computed bound but not the actual elimination determinant, and its
/// scan is expected to come back empty — it is kept in the list so the
/// emptiness is recorded rather than assumed.
pub const SCAN_PRIMES: [u64; 8] = [3, 5, 11, 17, 31, 113, 787, 827];

/// Consolidated congruence rows: one (modulus, b-residue, c-residue) per
/// certified condition.  The mod-4 row's modulus is 4991 = 7·23·31 — the
/// product of the rational primes under the four witness primes.  (An
/// earlier hand consolidation annotated this modulus with a 13 in place of
/// the 23 and its final assembled residues inherit a slip at the
/// 23-component; `crt_assemble` recomputes the triple from the rows.)
const TABLE: &[(&str, u64, u64, u64)] = &[
    ("semistable", 12, 5, 4),
    ("mod-9", 47, 17, 4),
    ("mod-4", 4991, 3699, 4183),
    ("mod-31", 165, 17, 4),
    ("mod-8", 29, 17, 4),
    ("l-adic", 3, 2, 1),
    ("cyc-3", 3, 2, 1),
    ("cyc-5", 5, 2, 4),
    ("cyc-11", 11, 6, 4),
    ("cyc-17", 17, 0, 0),
    ("cyc-31", 31, 10, 29),
    ("cyc-787", 787, 0, 0),
    ("cyc-827", 827, 0, 0),
];

fn check_family_field(spec: &NumberFieldSpec) -> Result<()> {
    let want = [BigInt::one(), BigInt::one(), BigInt::zero()];
    if spec.poly != want || !spec.index.is_one() {
        return Err(Error::Config(
            "family machinery is specific to the field x^3 + x + 1".into(),
        ));
    }
    Ok(())
}

fn red(x: &BigInt, m: u64) -> u64 {
    x.mod_floor(&BigInt::from(m)).to_u64().expect("reduced residue fits")
}

// --- membership congruences ----------------------------------------------------------

/// Sufficient congruence for semistability of E_{b,c} at every prime:
/// b ≡ 1 (mod 4) and c ≡ 0 (mod 4) keep the model integral and
/// multiplicative at 2, while the mod-3 part keeps A = a² + ba + c a unit at
/// the degree-1 prime over 3 (the only prime dividing B beyond 2).
pub fn semistable_congruence(b: &BigInt, c: &BigInt) -> bool {
    let br = red(b, 12);
    let cr = red(c, 12);
    (br == 5 && (cr == 4 || cr == 8)) || (br == 9 && cr == 4)
}

// --- exclusion scans ----------------------------------------------------------

/// One product step in F_p[t]/(t³ + t + 1) on coefficient triples.
fn cubic_mul_mod(u: [u64; 3], v: [u64; 3], p: u64) -> [u64; 3] {
    let m = p as u128;
    let mut w = [0u128; 5];
    for i in 0..3 {
        for j in 0..3 {
            w[i + j] += (u[i] as u128) * (v[j] as u128);
        }
    }
    // t³ = −t − 1, t⁴ = −t² − t.
    let w4 = w[4] % m;
    let w3 = w[3] % m;
    let c2 = (w[2] % m + m - w4) % m;
    let c1 = (w[1] % m + 2 * m - w4 - w3) % m;
    let c0 = (w[0] % m + m - w3) % m;
    [c0 as u64, c1 as u64, c2 as u64]
}

/// Whether the odd rational prime p divides the discriminant
/// Δ = 16 (A·B·(A−B))² of E_{b,c} in O_K = Z[a], i.e. whether Δ reduces to
/// zero in F_p[t]/(t³ + t + 1).  (16 is a unit for odd p and is dropped.)
fn disc_vanishes_mod_p(b: u64, c: u64, p: u64) -> bool {
    let a = [c % p, b % p, 1 % p];
    let bb = [16 % p, 16 % p, 16 % p];
    let cc = [
        (a[0] + p - bb[0]) % p,
        (a[1] + p - bb[1]) % p,
        (a[2] + p - bb[2]) % p,
    ];
    let abc = cubic_mul_mod(cubic_mul_mod(a, bb, p), cc, p);
    let sq = cubic_mul_mod(abc, abc, p);
    sq == [0, 0, 0]
}

/// Brute-force scan of all residue pairs 0 < b, c ≤ p, returning those whose
/// curve discriminant is divisible by p in O_K (residues normalised to
/// 0..p−1).  Members must avoid these pairs for every scanned prime: at such
/// pairs a rational prime could divide a subset product of the 4-torsion
/// kummer generators, opening a cyclotomic intersection beyond K(i).
pub fn intersection_exclusions(p: u64) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = (1..=p)
        .into_par_iter()
        .flat_map_iter(|b| {
            (1..=p).filter_map(move |c| {
                disc_vanishes_mod_p(b, c, p).then_some((b % p, c % p))
            })
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

// --- symbolic layer ----------------------------------------------------------

/// Bivariate polynomial over Z in b and c: (deg_b, deg_c) → coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
struct Poly2(BTreeMap<(u32, u32), BigInt>);

impl Poly2 {
    fn zero() -> Self {
        Self::default()
    }

    fn term(n: i64, db: u32, dc: u32) -> Self {
        let mut m = BTreeMap::new();
        if n != 0 {
            m.insert((db, dc), BigInt::from(n));
        }
        Poly2(m)
    }

    fn cst(n: i64) -> Self {
        Self::term(n, 0, 0)
    }

    fn var_b() -> Self {
        Self::term(1, 1, 0)
    }

    fn var_c() -> Self {
        Self::term(1, 0, 1)
    }

    fn add(&self, o: &Self) -> Self {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            let e = m.entry(*k).or_insert_with(BigInt::zero);
            *e += v;
        }
        m.retain(|_, v| !v.is_zero());
        Poly2(m)
    }

    fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    fn scale(&self, n: i64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        Poly2(self.0.iter().map(|(k, v)| (*k, v * n)).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        let mut m: BTreeMap<(u32, u32), BigInt> = BTreeMap::new();
        for ((i, j), x) in &self.0 {
            for ((k, l), y) in &o.0 {
                let e = m.entry((i + k, j + l)).or_insert_with(BigInt::zero);
                *e += x * y;
            }
        }
        m.retain(|_, v| !v.is_zero());
        Poly2(m)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn coeff(&self, db: u32, dc: u32) -> BigInt {
        self.0.get(&(db, dc)).cloned().unwrap_or_else(BigInt::zero)
    }

    fn total_degree(&self) -> u32 {
        self.0.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }
}

/// Element of Z[b,c][a]/(a³ + a + 1): coefficients of 1, a, a².
type Ok3 = [Poly2; 3];

fn ok_zero() -> Ok3 {
    [Poly2::zero(), Poly2::zero(), Poly2::zero()]
}

fn ok_cst(n: i64) -> Ok3 {
    [Poly2::cst(n), Poly2::zero(), Poly2::zero()]
}

fn ok_mul(u: &Ok3, v: &Ok3) -> Ok3 {
    let mut w: [Poly2; 5] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            w[i + j] = w[i + j].add(&u[i].mul(&v[j]));
        }
    }
    // a³ = −a − 1, a⁴ = −a² − a.
    [
        w[0].sub(&w[3]),
        w[1].sub(&w[3]).sub(&w[4]),
        w[2].sub(&w[4]),
    ]
}

fn ok_add(u: &Ok3, v: &Ok3) -> Ok3 {
    [u[0].add(&v[0]), u[1].add(&v[1]), u[2].add(&v[2])]
}

fn ok_sub(u: &Ok3, v: &Ok3) -> Ok3 {
    [u[0].sub(&v[0]), u[1].sub(&v[1]), u[2].sub(&v[2])]
}

fn ok_scale(u: &Ok3, n: i64) -> Ok3 {
    [u[0].scale(n), u[1].scale(n), u[2].scale(n)]
}

/// Polynomial in x with Ok3 coefficients, low degree first.
fn x_mul(u: &[Ok3], v: &[Ok3]) -> Vec<Ok3> {
    let mut w = vec![ok_zero(); u.len() + v.len() - 1];
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            w[i + j] = ok_add(&w[i + j], &ok_mul(ui, vj));
        }
    }
    w
}

fn x_sub(u: &[Ok3], v: &[Ok3]) -> Vec<Ok3> {
    let n = u.len().max(v.len());
    (0..n)
        .map(|i| {
            let a = u.get(i).cloned().unwrap_or_else(ok_zero);
            let b = v.get(i).cloned().unwrap_or_else(ok_zero);
            ok_sub(&a, &b)
        })
        .collect()
}

fn x_is_zero(u: &[Ok3]) -> bool {
    u.iter().all(|c| c.iter().all(Poly2::is_zero))
}

fn sym_a() -> Ok3 {
    [Poly2::var_c(), Poly2::var_b(), Poly2::cst(1)]
}

fn sym_b() -> Ok3 {
    [Poly2::cst(16), Poly2::cst(16), Poly2::cst(16)]
}

/// (c − b − 1) + (c − 2) a + (b + c) a², the inner bracket shared by the
/// kummer discriminant formulas.  Symbolically this equals A·(a² + a + 1),
/// so AB = 16·inner.
fn sym_inner() -> Ok3 {
    [
        Poly2::var_c().sub(&Poly2::var_b()).sub(&Poly2::cst(1)),
        Poly2::var_c().sub(&Poly2::cst(2)),
        Poly2::var_b().add(&Poly2::var_c()),
    ]
}

/// The printed coefficient triple (x, y, z) with A(A − B) = x + y a + z a².
fn sym_xyz() -> Ok3 {
    let b = Poly2::var_b();
    let c = Poly2::var_c();
    let x = Poly2::cst(16)
        .add(&b.scale(14))
        .sub(&c.scale(16))
        .add(&c.mul(&c));
    let y = Poly2::cst(31)
        .sub(&c.scale(16))
        .add(&b.mul(&c).scale(2))
        .sub(&b.scale(2));
    let z = b.mul(&b).sub(&b.scale(16)).sub(&c.scale(14)).sub(&Poly2::cst(1));
    [x, y, z]
}

fn linear_row(p: &Poly2) -> Option<[i128; 3]> {
    if p.total_degree() > 1 {
        return None;
    }
    Some([
        p.coeff(1, 0).to_i128()?,
        p.coeff(0, 1).to_i128()?,
        p.coeff(0, 0).to_i128()?,
    ])
}

fn combo(cx: &Poly2, cy: &Poly2, cz: &Poly2) -> Poly2 {
    let [x, y, z] = sym_xyz();
    cx.mul(&x).add(&cy.mul(&y)).add(&cz.mul(&z))
}

/// Outcome of the symbolic elimination audit; [`linear_elimination_check`]
/// folds it to a single boolean.
#[derive(Clone, Debug)]
pub struct EliminationReport {
    /// (x² − AB)² − 4e·x(x−A)(x−B) = (x² − 2ex + AB)² for e ∈ {A, B}: the
    /// duplication identities pinning the three 4-division quadratics
    /// x² − AB, x² − 2Bx + AB, x² − 2Ax + AB.
    pub duplication_identities: bool,
    /// Discriminants of those quadratics match the stated d₁, d₂, d₃, and
    /// the stated d₄ equals −4·A·B·(A−B) (so d₄² is the curve discriminant).
    pub discriminant_formulas: bool,
    /// A(A − B) = x + y a + z a² with the printed (x, y, z) polynomials, and
    /// d₃ = 4(x + y a + z a²).
    pub xyz_coefficients: bool,
    /// The three coefficient combinations reproduce the printed linear forms.
    pub combos: [bool; 3],
    /// Determinant of the 3×3 system formed by the linear forms on (b, c, 1);
    /// any rational prime dividing all of x, y, z divides it.
    pub det: i128,
    pub det_support: Vec<u64>,
    /// The hand-computed elimination constant and its support.
    pub printed_constant: u64,
    pub printed_support: Vec<u64>,
    pub det_divides_printed: bool,
    /// Primes in the printed support that do not divide the determinant
    /// (their scans are expected to exclude nothing).
    pub extraneous_support: Vec<u64>,
}

impl EliminationReport {
    pub fn ok(&self) -> bool {
        self.duplication_identities
            && self.discriminant_formulas
            && self.xyz_coefficients
            && self.combos.iter().all(|&b| b)
            && self.det_divides_printed
            && self.det_support == [3, 5, 11, 17, 787, 827]
            && self.printed_support == [3, 5, 11, 17, 113, 787, 827]
    }

    pub fn to_json(&self) -> Value {
        json!({
            "duplication_identities": self.duplication_identities,
            "discriminant_formulas": self.discriminant_formulas,
            "xyz_coefficients": self.xyz_coefficients,
            "combos": self.combos,
            "det": self.det.to_string(),
            "det_support": self.det_support,
            "printed_constant": self.printed_constant,
            "printed_support": self.printed_support,
            "det_divides_printed": self.det_divides_printed,
            "extraneous_support": self.extraneous_support,
            "ok": self.ok(),
        })
    }
}

/// Symbolic audit of the elimination step bounding the scan primes: derives
/// the three 4-division quadratics from the duplication law, checks the
/// kummer discriminant formulas against them, verifies the printed (x, y, z)
/// coefficients of A(A−B) and the three linear coefficient combinations,
/// and factors the resulting elimination determinant.
pub fn linear_elimination_report() -> EliminationReport {
    let a = sym_a();
    let b = sym_b();
    let ab = ok_mul(&a, &b);
    let inner = sym_inner();
    let s = [Poly2::cst(1), Poly2::cst(1), Poly2::cst(1)];

    // Duplication identities: for e a 2-torsion x-coordinate, the quartic
    // (x² − AB)² − 4e·x(x−A)(x−B) is the square of the quadratic whose roots
    // are the x-coordinates halving (e, 0).
    let x_poly = [ok_zero(), ok_cst(1)];
    let x_minus = |r: &Ok3| vec![ok_scale(r, -1), ok_cst(1)];
    let cubic = x_mul(&x_mul(&x_poly, &x_minus(&a)), &x_minus(&b));
    let q1 = x_sub(&x_mul(&x_poly, &x_poly), &[ab.clone()]);
    let mut duplication = true;
    for e in [&a, &b] {
        let lhs = x_sub(
            &x_mul(&q1, &q1),
            &x_mul(&[ok_scale(e, 4)], &cubic),
        );
        let q = vec![ab.clone(), ok_scale(e, -2), ok_cst(1)];
        let rhs = x_mul(&q, &q);
        if !x_is_zero(&x_sub(&lhs, &rhs)) {
            duplication = false;
        }
    }

    // Discriminant formulas: disc(x² − AB) = 4AB = 64·inner;
    // disc(x² − 2Bx + AB) = 4B(B−A) = 64(16(1+a+a²)² − inner);
    // disc(x² − 2Ax + AB) = 4A(A−B) = 4A² − 64·inner; and the stated
    // d₄ = 64·A·(a²+a+1)·(B−A) equals −4·A·B·(A−B).
    let d1 = ok_scale(&inner, 64);
    let d2 = ok_scale(&ok_sub(&ok_scale(&ok_mul(&s, &s), 16), &inner), 64);
    let d3 = ok_sub(&ok_scale(&ok_mul(&a, &a), 4), &ok_scale(&inner, 64));
    let b_minus_a = ok_sub(&b, &a);
    let d4 = ok_scale(&ok_mul(&ok_mul(&a, &s), &b_minus_a), 64);
    let abc = ok_mul(&ok_mul(&a, &b), &ok_sub(&a, &b));
    let disc_q1 = ok_scale(&ab, 4);
    let disc_q2 = ok_scale(&ok_mul(&b, &b_minus_a), 4);
    let disc_q3 = ok_scale(&ok_mul(&a, &ok_sub(&a, &b)), 4);
    let discriminant_formulas = ok_sub(&disc_q1, &d1).iter().all(Poly2::is_zero)
        && ok_sub(&disc_q2, &d2).iter().all(Poly2::is_zero)
        && ok_sub(&disc_q3, &d3).iter().all(Poly2::is_zero)
        && ok_sub(&d4, &ok_scale(&abc, -4)).iter().all(Poly2::is_zero)
        && ok_sub(&ab, &ok_scale(&inner, 16)).iter().all(Poly2::is_zero);

    // Printed (x, y, z) with A(A−B) = x + ya + za², and d₃ = 4(x + ya + za²).
    let xyz = sym_xyz();
    let xyz_coefficients = ok_sub(&ok_mul(&a, &ok_sub(&a, &b)), &xyz)
        .iter()
        .all(Poly2::is_zero)
        && ok_sub(&d3, &ok_scale(&xyz, 4)).iter().all(Poly2::is_zero);

    // The three coefficient combinations.
    let [_, y, z] = sym_xyz();
    let vb = Poly2::var_b();
    let vc = Poly2::var_c();
    let l1 = combo(
        &Poly2::cst(28),
        &Poly2::cst(8).sub(&vb),
        &Poly2::cst(-2).add(&vc.scale(2)),
    );
    let l2 = combo(&Poly2::cst(16).sub(&vb.scale(2)), &vc.sub(&Poly2::cst(15)), &Poly2::cst(28));
    let l3 = combo(
        &z.scale(-4).sub(&vc.scale(56)).sub(&Poly2::cst(260)),
        &y.sub(&vb.scale(28)).add(&Poly2::cst(586)),
        &vb.scale(56).add(&Poly2::cst(4)),
    );
    let want1 = Poly2::cst(698).add(&vb.scale(377)).sub(&vc.scale(550));
    let want2 = Poly2::cst(-237).sub(&vb.scale(226)).sub(&vc.scale(377));
    let want3 = Poly2::cst(15027).sub(&vb.scale(4844)).sub(&vc.scale(6328));
    let combos = [l1 == want1, l2 == want2, l3 == want3];

    // Elimination determinant: if a rational prime divides x, y and z at some
    // integer pair (b, c), it divides every Z[b,c]-combination, hence all
    // three linear forms; the vector (b, c, 1) is then a nontrivial kernel
    // element of the coefficient matrix mod p, so p divides its determinant.
    let rows: Vec<[i128; 3]> = [&l1, &l2, &l3]
        .iter()
        .filter_map(|p| linear_row(p))
        .collect();
    let det = if rows.len() == 3 {
        let m = &rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    } else {
        0
    };
    let printed_constant: u64 = 618_889_059_855;
    let det_support = arith::prime_support(&BigInt::from(det)).unwrap_or_default();
    let printed_support =
        arith::prime_support(&BigInt::from(printed_constant)).unwrap_or_default();
    let det_divides_printed =
        det != 0 && BigInt::from(printed_constant).is_multiple_of(&BigInt::from(det.abs()));
    let extraneous_support: Vec<u64> = printed_support
        .iter()
        .copied()
        .filter(|p| !det_support.contains(p))
        .collect();

    EliminationReport {
        duplication_identities: duplication,
        discriminant_formulas,
        xyz_coefficients,
        combos,
        det,
        det_support,
        printed_constant,
        printed_support,
        det_divides_printed,
        extraneous_support,
    }
}

/// Single-boolean form of [`linear_elimination_report`].
pub fn linear_elimination_check() -> bool {
    linear_elimination_report().ok()
}

// --- CRT assembly ----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyComponent {
    pub id: String,
    pub modulus: u64,
    pub b: u64,
    pub c: u64,
}

/// The consolidated congruence rows, one per certified condition.
pub fn standard_components() -> Vec<FamilyComponent> {
    TABLE
        .iter()
        .map(|&(id, modulus, b, c)| FamilyComponent {
            id: id.to_string(),
            modulus,
            b,
            c,
        })
        .collect()
}

/// A congruence class (b, c) ≡ (b0, c0) mod M together with the component
/// rows it was assembled from.
#[derive(Clone, Debug)]
pub struct CongruenceFamily {
    pub modulus: BigInt,
    pub b0: BigInt,
    pub c0: BigInt,
    pub components: Vec<FamilyComponent>,
}

impl CongruenceFamily {
    /// CRT consistency: (b0, c0) reduces to every component's residues.
    pub fn validate(&self) -> Result<()> {
        for comp in &self.components {
            let m = comp.modulus;
            if red(&self.b0, m) != comp.b % m || red(&self.c0, m) != comp.c % m {
                return Err(Error::Config(format!(
                    "assembled residues do not reduce to component {} (mod {})",
                    comp.id, m
                )));
            }
        }
        Ok(())
    }

    /// The `count` smallest members (b0 + iM, c0 + jM), ordered by i + j
    /// then i.
    pub fn members(&self, count: usize) -> Vec<(BigInt, BigInt)> {
        let mut out = Vec::with_capacity(count);
        let mut s = 0u64;
        while out.len() < count {
            for i in 0..=s {
                let j = s - i;
                out.push((
                    &self.b0 + BigInt::from(i) * &self.modulus,
                    &self.c0 + BigInt::from(j) * &self.modulus,
                ));
                if out.len() == count {
                    break;
                }
            }
            s += 1;
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "modulus": self.modulus.to_string(),
            "b0": self.b0.to_string(),
            "c0": self.c0.to_string(),
            "components": self.components.iter().map(|c| json!({
                "id": c.id,
                "modulus": c.modulus,
                "b": c.b,
                "c": c.c,
            })).collect::<Vec<_>>(),
        })
    }
}

fn prime_power_parts(m: u64) -> Vec<(u64, u64)> {
    let mut parts = Vec::new();
    let mut n = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut q = 1;
            while n % p == 0 {
                n /= p;
                q *= p;
            }
            parts.push((p, q));
        }
        p += 1;
    }
    if n > 1 {
        parts.push((n, n));
    }
    parts
}

/// CRT-combines congruence components into one (M, b0, c0).  Component
/// moduli may overlap (e.g. several rows constraining the residues mod 3, or
/// the 12 = 4·3 split); overlapping constraints must agree, and any clash is
/// reported with both offending component ids.
pub fn crt_assemble(components: &[FamilyComponent]) -> Result<CongruenceFamily> {
    if components.is_empty() {
        return Err(Error::Config("no congruence components supplied".into()));
    }
    struct Slot {
        q: u64,
        b: u64,
        c: u64,
        owner: String,
    }
    let mut slots: BTreeMap<u64, Slot> = BTreeMap::new();
    for comp in components {
        if comp.modulus == 0 {
            return Err(Error::Config(format!("component {} has modulus 0", comp.id)));
        }
        for (p, q) in prime_power_parts(comp.modulus) {
            let rb = comp.b % q;
            let rc = comp.c % q;
            match slots.get_mut(&p) {
                None => {
                    slots.insert(
                        p,
                        Slot { q, b: rb, c: rc, owner: comp.id.clone() },
                    );
                }
                Some(slot) => {
                    let g = slot.q.min(q);
                    if slot.b % g != rb % g || slot.c % g != rc % g {
                        return Err(Error::Config(format!(
                            "inconsistent congruence components: {} and {} disagree mod {}",
                            slot.owner, comp.id, g
                        )));
                    }
                    if q > slot.q {
                        *slot = Slot { q, b: rb, c: rc, owner: comp.id.clone() };
                    }
                }
            }
        }
    }
    let mut modulus = BigInt::one();
    let mut b0 = BigInt::zero();
    let mut c0 = BigInt::zero();
    for slot in slots.values() {
        let q = BigInt::from(slot.q);
        let (nb, _) = arith::crt_pair(&b0, &modulus, &BigInt::from(slot.b), &q)
            .expect("prime-power moduli are coprime");
        let (nc, nm) = arith::crt_pair(&c0, &modulus, &BigInt::from(slot.c), &q)
            .expect("prime-power moduli are coprime");
        b0 = nb;
        c0 = nc;
        modulus = nm;
    }
    let fam = CongruenceFamily {
        modulus,
        b0,
        c0,
        components: components.to_vec(),
    };
    fam.validate()?;
    Ok(fam)
}

/// The member (b0, c0 + M/p): congruent to (b0, c0) modulo every prime-power
/// part of M except the one at p, isolating the condition certified there.
pub fn perturb_c(fam: &CongruenceFamily, p: u64) -> Result<(BigInt, BigInt)> {
    let pb = BigInt::from(p);
    if p < 2 || !fam.modulus.is_multiple_of(&pb) {
        return Err(Error::Config(format!(
            "{} does not divide the family modulus",
            p
        )));
    }
    Ok((fam.b0.clone(), &fam.c0 + &fam.modulus / pb))
}

// --- witness primes and d-values ----------------------------------------------------------

fn prime_dividing(spec: &NumberFieldSpec, p: u64, gen: &RingElement) -> Result<PrimeIdeal> {
    for pr in split_prime(spec, p)? {
        if valuation(spec, gen, &pr)? >= 1 {
            return Ok(pr);
        }
    }
    Err(Error::Config(format!(
        "no prime over {} divides the requested generator",
        p
    )))
}

fn prime_with_degree(spec: &NumberFieldSpec, p: u64, f: u8) -> Result<PrimeIdeal> {
    split_prime(spec, p)?
        .into_iter()
        .find(|pr| pr.f == f)
        .ok_or_else(|| Error::Config(format!("no prime of residue degree {} over {}", f, p)))
}

/// The four fixed witness primes for the mod-4 condition: the degree-1
/// unramified prime over 31 (a ↦ 3), the inert prime (7), the ramified prime
/// over 31 (a ↦ 14), and the degree-1 prime over 23 (a ↦ 4).
pub fn mod4_witness_primes(spec: &NumberFieldSpec) -> Result<[PrimeIdeal; 4]> {
    check_family_field(spec)?;
    let p1 = prime_dividing(spec, 31, &spec.elem_i64(-3, 1, 0))?;
    let p2 = prime_with_degree(spec, 7, 3)?;
    let p3 = prime_dividing(spec, 31, &spec.elem_i64(-1, 3, -1))?;
    let p4 = prime_dividing(spec, 23, &spec.elem_i64(-4, 1, 0))?;
    Ok([p1, p2, p3, p4])
}

fn big_elem(spec: &NumberFieldSpec, c0: BigInt, c1: BigInt, c2: BigInt) -> RingElement {
    spec.elem([
        BigRational::from_integer(c0),
        BigRational::from_integer(c1),
        BigRational::from_integer(c2),
    ])
}

/// The four kummer discriminants d₁..d₄ of E_{b,c}, computed exactly.
pub fn family_d_values(
    spec: &NumberFieldSpec,
    b: &BigInt,
    c: &BigInt,
) -> Result<[RingElement; 4]> {
    check_family_field(spec)?;
    let inner = big_elem(spec, c - b - 1, c - 2, b + c);
    let a = big_elem(spec, c.clone(), b.clone(), BigInt::one());
    let s = spec.elem_i64(1, 1, 1);
    let t64 = spec.from_int(&BigInt::from(64));
    let t16 = spec.from_int(&BigInt::from(16));
    let d1 = spec.mul(&t64, &inner)?;
    let ssq = spec.mul(&s, &s)?;
    let d2 = spec.mul(&t64, &spec.sub(&spec.mul(&t16, &ssq)?, &inner)?)?;
    let asq = spec.mul(&a, &a)?;
    let d3 = spec.sub(
        &spec.mul(&spec.from_int(&BigInt::from(4)), &asq)?,
        &d1,
    )?;
    let t3 = big_elem(spec, 16 - c, 16 - b, BigInt::from(15));
    let d4 = spec.mul(&t64, &spec.mul(&a, &spec.mul(&s, &t3)?)?)?;
    Ok([d1, d2, d3, d4])
}

/// Quadratic-character bits of the four d-values at the four witness primes.
#[derive(Clone, Debug)]
pub struct WitnessMatrix {
    pub prime_labels: [String; 4],
    /// rows[i][j]: Some(true) if d_{j+1} is a nonsquare in the residue field
    /// of prime i, Some(false) if a nonzero square, None if it reduces to 0.
    pub rows: [[Option<bool>; 4]; 4],
}

impl WitnessMatrix {
    /// Row pattern strings: N = nonsquare, s = square, Z = zero.
    pub fn patterns(&self) -> [String; 4] {
        let mut out: [String; 4] = Default::default();
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row
                .iter()
                .map(|e| match e {
                    Some(true) => 'N',
                    Some(false) => 's',
                    None => 'Z',
                })
                .collect();
        }
        out
    }

    /// All sixteen residues nonzero and the character-bit matrix invertible
    /// over F₂ — exactly the condition for every nonempty subset product of
    /// d₁..d₄ to be a nonsquare at one of the four primes.
    pub fn certifies(&self) -> bool {
        let mut bits = [0u8; 4];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                match e {
                    None => return false,
                    Some(true) => bits[i] |= 1 << j,
                    Some(false) => {}
                }
            }
        }
        // Gaussian elimination over F2.
        let mut rank = 0;
        for col in 0..4 {
            if let Some(pivot) = (rank..4).find(|&r| bits[r] & (1 << col) != 0) {
                bits.swap(rank, pivot);
                for r in 0..4 {
                    if r != rank && bits[r] & (1 << col) != 0 {
                        bits[r] ^= bits[rank];
                    }
                }
                rank += 1;
            }
        }
        rank == 4
    }

    pub fn to_json(&self) -> Value {
        json!({
            "primes": self.prime_labels,
            "patterns": self.patterns(),
            "certifies": self.certifies(),
        })
    }
}

/// Reduces d₁..d₄ at the four witness primes and records the square /
/// nonsquare / zero verdicts.  The verdicts depend only on (b, c) modulo the
/// rational prime below each witness, which is what lets one verified base
/// point certify the whole congruence class.
pub fn mod4_witness_matrix(
    spec: &NumberFieldSpec,
    b: &BigInt,
    c: &BigInt,
) -> Result<WitnessMatrix> {
    let primes = mod4_witness_primes(spec)?;
    let ds = family_d_values(spec, b, c)?;
    let mut rows: [[Option<bool>; 4]; 4] = Default::default();
    let mut labels: [String; 4] = Default::default();
    for (i, prime) in primes.iter().enumerate() {
        labels[i] = format!("{} (norm {})", prime.describe(), prime.norm);
        for (j, d) in ds.iter().enumerate() {
            let (fq, r) = residue(spec, d, prime)?;
            rows[i][j] = if fq.is_zero(&r) {
                None
            } else {
                Some(!euler_is_square(&fq, &r)?)
            };
        }
    }
    Ok(WitnessMatrix { prime_labels: labels, rows })
}

// --- member spot checks ----------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MemberCheck {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct MemberReport {
    pub b: BigInt,
    pub c: BigInt,
    pub checks: Vec<MemberCheck>,
}

impl MemberReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&MemberCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failed_ids(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.clone())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "b": self.b.to_string(),
            "c": self.c.to_string(),
            "all_pass": self.all_pass(),
            "checks": self.checks.iter().map(|c| json!({
                "id": c.id,
                "pass": c.pass,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

fn check(id: &str, pass: bool, detail: String) -> MemberCheck {
    MemberCheck { id: id.to_string(), pass, detail }
}

fn frobenius_or_fail(
    spec: &NumberFieldSpec,
    curve: &crate::ellcurve::Curve,
    prime: &PrimeIdeal,
) -> Result<std::result::Result<FrobeniusDatum, String>> {
    match FrobeniusDatum::collect(spec, curve, prime) {
        Ok(d) => Ok(Ok(d)),
        Err(Error::BadReduction) => Ok(Err(format!(
            "bad reduction at {}",
            prime.describe()
        ))),
        Err(e) => Err(e),
    }
}

/// Runs every per-member condition of the assembled family on one (b, c):
/// the semistability congruence, avoidance of all scan exclusions, the
/// mod-4 witness matrix, the 2-adic valuation bookkeeping of the d-values,
/// and the point-count / trace-pattern checks at the fixed small primes.
/// Failures come back as report rows, not errors.
pub fn member_report(
    spec: &NumberFieldSpec,
    b: &BigInt,
    c: &BigInt,
) -> Result<MemberReport> {
    check_family_field(spec)?;
    let curve = family_curve(spec, b, c)?;
    let a_elem = big_elem(spec, c.clone(), b.clone(), BigInt::one());
    let b_elem = spec.elem_i64(16, 16, 16);
    let roots = [spec.zero(), a_elem.clone(), b_elem.clone()];
    let mut checks = Vec::new();

    // Membership congruence for semistability.
    checks.push(check(
        "semistable-congruence",
        semistable_congruence(b, c),
        format!("b ≡ {} and c ≡ {} (mod 12)", red(b, 12), red(c, 12)),
    ));

    // Scan-prime avoidance: the member's own residue pair must not make the
    // discriminant vanish mod any scan prime.
    {
        let mut bad = Vec::new();
        let mut pairs = Vec::new();
        for &p in &SCAN_PRIMES {
            let (rb, rc) = (red(b, p), red(c, p));
            if disc_vanishes_mod_p(rb, rc, p) {
                bad.push(format!("{} at ({}, {})", p, rb, rc));
            }
            pairs.push(format!("{}:({},{})", p, rb, rc));
        }
        checks.push(check(
            "cyclotomic-exclusions",
            bad.is_empty(),
            if bad.is_empty() {
                format!("no scan prime divides the discriminant [{}]", pairs.join(" "))
            } else {
                format!("excluded residue pair hit: {}", bad.join(", "))
            },
        ));
    }

    // Mod-4 witness matrix.
    {
        let m = mod4_witness_matrix(spec, b, c)?;
        checks.push(check(
            "mod-4-witnesses",
            m.certifies(),
            format!(
                "character matrix [{}] invertible over F2: {}",
                m.patterns().join(", "),
                m.certifies()
            ),
        ));
    }

    // 2-adic bookkeeping: with b ≡ 1 and c ≡ 0 (mod 4) the d-values carry
    // the fixed 2-powers 2⁶, 2⁶, 2², 2⁶ and the monic 2-division cubic
    // discriminant (ABC)² carries 2⁸ (the curve discriminant 16(ABC)²
    // correspondingly carries 2¹²), so square-class arguments may ignore 2.
    {
        let two = prime_with_degree(spec, 2, 3)?;
        let ds = family_d_values(spec, b, c)?;
        let mut vals = Vec::new();
        for d in &ds {
            vals.push(valuation(spec, d, &two)?);
        }
        let abc = spec.mul(&spec.mul(&a_elem, &b_elem)?, &spec.sub(&a_elem, &b_elem)?)?;
        let v_abc_sq = 2 * valuation(spec, &abc, &two)?;
        let v_disc = valuation(spec, &curve.discriminant(spec)?, &two)?;
        let pass = vals == [6, 6, 2, 6] && v_abc_sq == 8 && v_disc == 12;
        checks.push(check(
            "two-power-bookkeeping",
            pass,
            format!(
                "v2(d) = {:?}, v2((ABC)²) = {}, v2(disc) = {}",
                vals, v_abc_sq, v_disc
            ),
        ));
    }

    // Point count 2³ at the degree-2 prime over 3: kills every mod-l
    // surjectivity obstruction with l not dividing 2·3·31 (the residual
    // 2, 3, 31 are covered by the mod-4/mod-8, mod-9 and mod-31 rows).
    let w3 = prime_with_degree(spec, 3, 2)?;
    {
        match frobenius_or_fail(spec, &curve, &w3)? {
            Err(msg) => checks.push(check("count-8-over-3", false, msg)),
            Ok(d) => {
                let count = &d.n_v + BigInt::one() - &d.t_v;
                checks.push(check(
                    "count-8-over-3",
                    count == BigInt::from(8),
                    format!("#E(F_9) = {} at {}", count, d.prime.describe()),
                ));
            }
        }
    }

    // Mod-8: norm ≡ 5 (mod 8) and full rational 4-torsion in the residue
    // field at the degree-1 prime over 29.
    {
        let p29 = prime_dividing(spec, 29, &spec.elem_i64(2, 0, 3))?;
        let full = full_four_torsion_in_residue(spec, &roots, &p29)?;
        let n_ok = red(&p29.norm, 8) == 5;
        checks.push(check(
            "mod-8-witness",
            full && n_ok,
            format!(
                "N = {} ≡ {} (mod 8), full 4-torsion in residue field: {}",
                p29.norm,
                red(&p29.norm, 8),
                full
            ),
        ));
    }

    // Mod-9: trace pattern t ≡ 6, N ≡ 2 (mod 9) at the degree-1 prime
    // over 47.
    {
        let p47 = prime_dividing(spec, 47, &spec.elem_i64(4, 1, 2))?;
        match frobenius_or_fail(spec, &curve, &p47)? {
            Err(msg) => checks.push(check("mod-9-witness", false, msg)),
            Ok(d) => {
                let t9 = red(&d.t_v, 9);
                let n9 = red(&d.n_v, 9);
                checks.push(check(
                    "mod-9-witness",
                    t9 == 6 && n9 == 2,
                    format!("t = {} ≡ {} and N ≡ {} (mod 9) at {}", d.t_v, t9, n9, d.prime.describe()),
                ));
            }
        }
    }

    // Mod-31: the three Frobenius witnesses must jointly rule out the
    // nonsplit Cartan (nonsquare t² − 4N, t ≠ 0), the split Cartan (square
    // nonzero t² − 4N, t ≠ 0) and the normalizer (u ∉ {0,1,2,4} with
    // u² − 3u + 1 ≠ 0).
    {
        let witnesses = [
            ("w1", prime_dividing(spec, 11, &spec.elem_i64(-3, 1, -5))?),
            ("w2", prime_with_degree(spec, 5, 3)?),
            ("w3", w3.clone()),
        ];
        let mut s1 = false;
        let mut s2 = false;
        let mut tw = false;
        let mut details = Vec::new();
        let mut failed = None;
        for (name, prime) in &witnesses {
            match frobenius_or_fail(spec, &curve, prime)? {
                Err(msg) => {
                    failed = Some(msg);
                    break;
                }
                Ok(d) => {
                    let t31 = red(&d.t_v, 31);
                    let mut roles = Vec::new();
                    if let Some((disc, u, poly)) = witness_triple(&d, 31) {
                        if t31 != 0 && arith::legendre(disc as i64, 31) == -1 {
                            s1 = true;
                            roles.push("nonsplit");
                        }
                        if t31 != 0 && arith::legendre(disc as i64, 31) == 1 {
                            s2 = true;
                            roles.push("split");
                        }
                        if !matches!(u, 0 | 1 | 2 | 4) && poly != 0 {
                            tw = true;
                            roles.push("normalizer");
                        }
                    }
                    details.push(format!(
                        "{} = {} [N {}]: t = {}, roles {{{}}}",
                        name,
                        d.prime.describe(),
                        d.n_v,
                        d.t_v,
                        roles.join(",")
                    ));
                }
            }
        }
        checks.push(match failed {
            Some(msg) => check("mod-31-witnesses", false, msg),
            None => check(
                "mod-31-witnesses",
                s1 && s2 && tw,
                details.join("; "),
            ),
        });
    }

    Ok(MemberReport { b: b.clone(), c: c.clone(), checks })
}

/// Instantiates the `count` smallest members of the family and runs
/// [`member_report`] on each, in parallel.
pub fn family_spot_check(
    spec: &NumberFieldSpec,
    fam: &CongruenceFamily,
    count: usize,
) -> Result<Vec<MemberReport>> {
    fam.validate()?;
    fam.members(count)
        .par_iter()
        .map(|(b, c)| member_report(spec, b, c))
        .collect()
}
