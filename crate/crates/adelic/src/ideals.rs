//! Prime ideals of the cubic order: Dedekind splitting away from the index,
//! Hermite-normal-form lattices for ideal arithmetic, valuations, residue
//! maps, and unit orders in quotients O/P^k.
//!
//! Ideals are 3x3 upper-triangular integer matrices whose rows are lattice
//! generators in integral-basis coordinates (positive diagonal, off-diagonal
//! entries reduced mod the column pivot), so equality of ideals is literal
//! equality of matrices.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::factor;
use crate::error::{Error, Result};
use crate::finitefield::{roots_deg_le3, FqElem, FqSpec};
use crate::numberfield::{NumberFieldSpec, RingElement};

pub type Hnf = [[BigInt; 3]; 3];

#[derive(Clone, Debug)]
pub struct PrimeIdeal {
    pub p: u64,
    /// Ramification index.
    pub e: u8,
    /// Residue degree.
    pub f: u8,
    /// Monic irreducible factor of the defining cubic mod p (coefficients
    /// low-to-high, length f+1). Empty for primes supplied externally at
    /// index divisors, where no such factor is available.
    pub gen_poly: Vec<u64>,
    /// Second generator: P = (p, gamma).
    pub second_gen: RingElement,
    pub hnf: Hnf,
    pub norm: BigInt,
    pub label: String,
    pub uniformizer: Option<RingElement>,
}

impl PartialEq for PrimeIdeal {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.hnf == other.hnf
    }
}
impl Eq for PrimeIdeal {}

impl PrimeIdeal {
    pub fn residue_field(&self) -> Result<FqSpec> {
        if self.gen_poly.is_empty() {
            if self.f == 1 {
                FqSpec::new(self.p, 1, vec![0, 1])
            } else {
                Err(Error::ResidueAtIndexDivisor)
            }
        } else {
            FqSpec::new(self.p, self.f, self.gen_poly.clone())
        }
    }

    /// Human-readable two-element form for certificates.
    pub fn describe(&self) -> String {
        format!(
            "({}, {})",
            self.p,
            crate::numberfield::format_power_coords(&self.second_gen.coords)
        )
    }
}

// --- Hermite normal form -------------------------------------------------------

/// Reduce a stack of row vectors to canonical upper-triangular HNF. Errors if
/// the rows do not span a finite-index sublattice (rank < 3).
pub fn hnf_from_rows(mut rows: Vec<[BigInt; 3]>) -> Result<Hnf> {
    let mut pivot = 0usize;
    for col in 0..3 {
        loop {
            let mut best: Option<usize> = None;
            for i in pivot..rows.len() {
                if !rows[i][col].is_zero()
                    && best.map_or(true, |b| rows[i][col].abs() < rows[b][col].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else {
                return Err(Error::BadIntegralBasis);
            };
            rows.swap(pivot, b);
            let mut cleared = true;
            for i in pivot + 1..rows.len() {
                if rows[i][col].is_zero() {
                    continue;
                }
                let q = &rows[i][col] / &rows[pivot][col];
                if !q.is_zero() {
                    for j in 0..3 {
                        let t = &rows[pivot][j] * &q;
                        rows[i][j] -= t;
                    }
                }
                if !rows[i][col].is_zero() {
                    cleared = false;
                }
            }
            if cleared {
                break;
            }
        }
        if rows[pivot][col].is_negative() {
            for j in 0..3 {
                rows[pivot][j] = -rows[pivot][j].clone();
            }
        }
        pivot += 1;
        if pivot == 3 {
            break;
        }
    }
    if pivot < 3 {
        return Err(Error::BadIntegralBasis);
    }
    for r in rows.iter().skip(3) {
        if r.iter().any(|x| !x.is_zero()) {
            return Err(Error::BadIntegralBasis);
        }
    }
    let mut h: Hnf = [
        rows[0].clone(),
        rows[1].clone(),
        rows[2].clone(),
    ];
    // Reduce above-diagonal entries into [0, pivot).
    for i in 0..3 {
        for j in i + 1..3 {
            let q = h[i][j].div_floor(&h[j][j]);
            if !q.is_zero() {
                for k in 0..3 {
                    let t = &h[j][k] * &q;
                    h[i][k] -= t;
                }
            }
        }
    }
    Ok(h)
}

pub fn hnf_det(h: &Hnf) -> BigInt {
    &h[0][0] * &h[1][1] * &h[2][2]
}

/// Lattice membership by forward substitution on the triangular rows.
pub fn hnf_contains(h: &Hnf, v: &[BigInt; 3]) -> bool {
    let mut v = v.clone();
    for i in 0..3 {
        let (q, r) = v[i].div_rem(&h[i][i]);
        if !r.is_zero() {
            return false;
        }
        if !q.is_zero() {
            for j in i..3 {
                let t = &h[i][j] * &q;
                v[j] -= t;
            }
        }
    }
    v.iter().all(|x| x.is_zero())
}

/// Canonical representative of v modulo the lattice (coordinates in
/// [0, pivot) after successive floor reductions).
pub fn hnf_reduce(h: &Hnf, v: &[BigInt; 3]) -> [BigInt; 3] {
    let mut v = v.clone();
    for i in 0..3 {
        let q = v[i].div_floor(&h[i][i]);
        if !q.is_zero() {
            for j in i..3 {
                let t = &h[i][j] * &q;
                v[j] -= t;
            }
        }
    }
    v
}

/// Product of two ideals: HNF of all pairwise products of the generators.
pub fn ideal_mul(spec: &NumberFieldSpec, a: &Hnf, b: &Hnf) -> Result<Hnf> {
    let mut rows = Vec::with_capacity(9);
    for ra in a.iter() {
        let ea = spec.from_integral_int_coords(ra)?;
        for rb in b.iter() {
            let eb = spec.from_integral_int_coords(rb)?;
            let prod = spec.mul(&ea, &eb)?;
            rows.push(integral_int_coords_exact(spec, &prod)?);
        }
    }
    hnf_from_rows(rows)
}

pub fn ideal_pow(spec: &NumberFieldSpec, prime: &PrimeIdeal, k: u32) -> Result<Hnf> {
    let mut acc = unit_ideal();
    for _ in 0..k {
        acc = ideal_mul(spec, &acc, &prime.hnf)?;
    }
    Ok(acc)
}

pub fn unit_ideal() -> Hnf {
    let mut h: Hnf = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] = if i == j { BigInt::one() } else { BigInt::zero() };
        }
    }
    h
}

fn integral_int_coords_exact(spec: &NumberFieldSpec, x: &RingElement) -> Result<[BigInt; 3]> {
    let c = spec.integral_coords(x)?;
    let mut out: [BigInt; 3] = Default::default();
    for i in 0..3 {
        if !c[i].is_integer() {
            return Err(Error::NotIntegralAtPrime);
        }
        out[i] = c[i].to_integer();
    }
    Ok(out)
}

/// Integral-basis coordinates of d*x with d the least positive integer
/// clearing denominators; returns (coords, d).
pub fn cleared_int_coords(spec: &NumberFieldSpec, x: &RingElement) -> Result<([BigInt; 3], BigInt)> {
    let c = spec.integral_coords(x)?;
    let mut d = BigInt::one();
    for i in 0..3 {
        d = d.lcm(c[i].denom());
    }
    let mut out: [BigInt; 3] = Default::default();
    for i in 0..3 {
        let v = &c[i] * BigRational::from_integer(d.clone());
        debug_assert!(v.is_integer());
        out[i] = v.to_integer();
    }
    Ok((out, d))
}

// --- splitting -------------------------------------------------------------------

/// Dedekind factorization of p away from the index: factor the defining cubic
/// mod p and map each irreducible factor g with multiplicity e to the prime
/// (p, g(alpha)) of residue degree deg g. Errors with IndexDivisor when p
/// divides [O_K : Z[alpha]], where the factor-ideal correspondence can fail.
pub fn split_prime(spec: &NumberFieldSpec, p: u64) -> Result<Vec<PrimeIdeal>> {
    let index = spec
        .index
        .to_u64()
        .ok_or_else(|| Error::Config("index overflow".into()))?;
    if index % p == 0 {
        return Err(Error::IndexDivisor(p));
    }
    let fp = FqSpec::new(p, 1, vec![0, 1])?;
    let fbar: Vec<FqElem> = {
        let c = [
            spec.poly[0].mod_floor(&BigInt::from(p)),
            spec.poly[1].mod_floor(&BigInt::from(p)),
            spec.poly[2].mod_floor(&BigInt::from(p)),
        ];
        let mut v: Vec<FqElem> = c
            .iter()
            .map(|x| fp.scalar(x.to_u64().expect("reduced residue")))
            .collect();
        v.push(fp.one());
        v
    };
    // Roots (with multiplicity) and the rootless cofactor give the complete
    // factorization of a cubic: any nonlinear cofactor of degree <= 3 with no
    // roots is irreducible.
    let roots = roots_deg_le3(&fp, &fbar)?;
    let mut factors: Vec<(Vec<u64>, u8, u8)> = Vec::new(); // (monic factor, e, f)
    let mut deg_used = 0u8;
    for (r, m) in &roots {
        factors.push((vec![(p - r.c[0] % p) % p, 1], *m as u8, 1));
        deg_used += *m as u8;
    }
    if deg_used < 3 {
        // Deflate out the roots to recover the irreducible cofactor.
        let mut g = fbar.clone();
        for (r, m) in &roots {
            for _ in 0..*m {
                g = deflate(&fp, &g, r);
            }
        }
        let coeffs: Vec<u64> = g.iter().map(|c| c.c[0]).collect();
        factors.push((coeffs, 1, (3 - deg_used) as u8));
    }
    factors.sort_by(|a, b| (a.2, a.1, &a.0).cmp(&(b.2, b.1, &b.0)));
    let mut out = Vec::new();
    for (idx, (g, e, f)) in factors.iter().enumerate() {
        let gamma = eval_mod_lift(spec, g)?;
        let hnf = two_element_hnf(spec, p, &gamma)?;
        let norm = BigInt::from(p).pow(*f as u32);
        if hnf_det(&hnf) != norm {
            return Err(Error::BadIntegralBasis);
        }
        out.push(PrimeIdeal {
            p,
            e: *e,
            f: *f,
            gen_poly: g.clone(),
            second_gen: gamma,
            hnf,
            norm,
            label: format!("{}{}", p, (b'a' + idx as u8) as char),
            uniformizer: None,
        });
    }
    debug_assert_eq!(
        out.iter().map(|q| (q.e * q.f) as u32).sum::<u32>(),
        3,
        "ef-sum must equal the degree"
    );
    Ok(out)
}

fn deflate(fp: &FqSpec, g: &[FqElem], r: &FqElem) -> Vec<FqElem> {
    let mut q = vec![fp.zero(); g.len() - 1];
    let mut carry = fp.zero();
    for i in (1..g.len()).rev() {
        let cur = fp.add(&g[i], &fp.mul(&carry, r));
        q[i - 1] = cur;
        carry = cur;
    }
    q
}

/// g(alpha) with coefficients lifted to [0, p).
fn eval_mod_lift(spec: &NumberFieldSpec, g: &[u64]) -> Result<RingElement> {
    let mut acc = spec.zero();
    for &c in g.iter().rev() {
        acc = spec.mul(&acc, &spec.gen())?;
        acc = spec.add(&acc, &spec.from_int(&BigInt::from(c)))?;
    }
    Ok(acc)
}

fn two_element_hnf(spec: &NumberFieldSpec, p: u64, gamma: &RingElement) -> Result<Hnf> {
    let mut rows: Vec<[BigInt; 3]> = Vec::with_capacity(6);
    let pbig = BigInt::from(p);
    for k in 0..3 {
        let mut row: [BigInt; 3] = Default::default();
        row[k] = pbig.clone();
        rows.push(row);
    }
    for k in 0..3 {
        let basis_k = spec.basis_element(k)?;
        let prod = spec.mul(gamma, &basis_k)?;
        rows.push(integral_int_coords_exact(spec, &prod)?);
    }
    hnf_from_rows(rows)
}

/// Construct a prime at an index divisor from externally supplied data
/// (second generator, e, f, optional uniformizer), validating the lattice.
pub fn prime_from_two_element(
    spec: &NumberFieldSpec,
    p: u64,
    e: u8,
    f: u8,
    gamma: RingElement,
    label: String,
    uniformizer: Option<RingElement>,
) -> Result<PrimeIdeal> {
    spec.check(&gamma)?;
    let hnf = two_element_hnf(spec, p, &gamma)?;
    let norm = BigInt::from(p).pow(f as u32);
    if hnf_det(&hnf) != norm {
        return Err(Error::Config(format!(
            "supplied prime {label}: lattice index {} != p^f = {norm}",
            hnf_det(&hnf)
        )));
    }
    let prime = PrimeIdeal {
        p,
        e,
        f,
        gen_poly: vec![],
        second_gen: gamma,
        hnf,
        norm,
        label,
        uniformizer,
    };
    if let Some(u) = &prime.uniformizer {
        if valuation(spec, u, &prime)? != 1 {
            return Err(Error::BadUniformizer);
        }
    }
    Ok(prime)
}

/// All primes above p, consulting the override table at index divisors.
/// Overrides are validated to multiply correctly: sum of e_i f_i = 3 and
/// pairwise-distinct lattices.
pub fn primes_above(
    spec: &NumberFieldSpec,
    p: u64,
    overrides: &BTreeMap<u64, Vec<PrimeIdeal>>,
) -> Result<Vec<PrimeIdeal>> {
    if let Some(list) = overrides.get(&p) {
        let efsum: u32 = list.iter().map(|q| (q.e * q.f) as u32).sum();
        if efsum != 3 {
            return Err(Error::Config(format!("override list at {p} has ef-sum {efsum}")));
        }
        for (i, a) in list.iter().enumerate() {
            for b in list.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::Config(format!("duplicate prime over {p}")));
                }
            }
        }
        return Ok(list.clone());
    }
    split_prime(spec, p)
}

/// Primes of norm <= bound, ordered by (norm, p, label). Index divisors
/// without an override entry are skipped; callers that must see them supply
/// overrides.
pub fn primes_by_norm(
    spec: &NumberFieldSpec,
    bound: u64,
    overrides: &BTreeMap<u64, Vec<PrimeIdeal>>,
) -> Result<Vec<PrimeIdeal>> {
    let mut out = Vec::new();
    let index = spec.index.to_u64().unwrap_or(1);
    for p in crate::arith::primes_from(2).take_while(|&p| p <= bound) {
        if index % p == 0 && !overrides.contains_key(&p) {
            continue;
        }
        for q in primes_above(spec, p, overrides)? {
            if q.norm <= BigInt::from(bound) {
                out.push(q);
            }
        }
    }
    out.sort_by(|a, b| (a.norm.clone(), a.p, a.label.clone()).cmp(&(b.norm.clone(), b.p, b.label.clone())));
    Ok(out)
}

// --- valuations ------------------------------------------------------------------

/// P-adic valuation of a nonzero field element (possibly fractional).
pub fn valuation(spec: &NumberFieldSpec, x: &RingElement, prime: &PrimeIdeal) -> Result<i64> {
    spec.check(x)?;
    if x.coords.iter().all(|c| c.is_zero()) {
        return Err(Error::ZeroElement);
    }
    let (y, d) = cleared_int_coords(spec, x)?;
    let mut vden = 0i64;
    let mut dd = d.clone();
    let pbig = BigInt::from(prime.p);
    while (&dd % &pbig).is_zero() {
        dd /= &pbig;
        vden += 1;
    }
    Ok(int_valuation(spec, &y, prime)? - (prime.e as i64) * vden)
}

fn int_valuation(spec: &NumberFieldSpec, y: &[BigInt; 3], prime: &PrimeIdeal) -> Result<i64> {
    if !hnf_contains(&prime.hnf, y) {
        return Ok(0);
    }
    let mut t = 1i64;
    let mut power = prime.hnf.clone();
    loop {
        power = ideal_mul(spec, &power, &prime.hnf)?;
        if !hnf_contains(&power, y) {
            return Ok(t);
        }
        t += 1;
        if t > 4096 {
            return Err(Error::Config("runaway valuation".into()));
        }
    }
}

/// Valuations at every prime over p at once, cross-checked against the norm:
/// sum f_i v_i must equal v_p(|N(x)|).
pub fn valuations_above(
    spec: &NumberFieldSpec,
    x: &RingElement,
    primes: &[PrimeIdeal],
) -> Result<Vec<i64>> {
    let p = primes
        .first()
        .ok_or_else(|| Error::Config("empty prime list".into()))?
        .p;
    if primes.iter().any(|q| q.p != p) {
        return Err(Error::Config("primes over different rationals".into()));
    }
    let vals: Vec<i64> = primes
        .iter()
        .map(|q| valuation(spec, x, q))
        .collect::<Result<_>>()?;
    let n = spec.norm(x)?;
    let num = n.numer().abs();
    let den = n.denom().abs();
    let pbig = BigInt::from(p);
    let vp = |mut z: BigInt| {
        let mut v = 0i64;
        while !z.is_zero() && (&z % &pbig).is_zero() {
            z /= &pbig;
            v += 1;
        }
        v
    };
    let expected = vp(num) - vp(den);
    let got: i64 = primes
        .iter()
        .zip(&vals)
        .map(|(q, v)| (q.f as i64) * v)
        .sum();
    if got != expected {
        return Err(Error::Config(format!(
            "valuation bookkeeping at {p}: sum f*v = {got}, v_p(N) = {expected}"
        )));
    }
    Ok(vals)
}

/// Search the lattice of P for an element with v_P = 1 and valuation zero at
/// every sibling prime over p. Small coordinate boxes suffice in practice;
/// gives up (MissingUniformizer) past radius 6 so callers can supply one.
pub fn uniformizer_for(
    spec: &NumberFieldSpec,
    prime: &PrimeIdeal,
    siblings: &[PrimeIdeal],
) -> Result<RingElement> {
    if let Some(u) = &prime.uniformizer {
        return Ok(u.clone());
    }
    for radius in 1i64..=6 {
        for c0 in -radius..=radius {
            for c1 in -radius..=radius {
                for c2 in -radius..=radius {
                    if (c0, c1, c2) == (0, 0, 0) {
                        continue;
                    }
                    let mut coords: [BigInt; 3] = Default::default();
                    for j in 0..3 {
                        coords[j] = &prime.hnf[0][j] * c0
                            + &prime.hnf[1][j] * c1
                            + &prime.hnf[2][j] * c2;
                    }
                    let cand = spec.from_integral_int_coords(&coords)?;
                    if valuation(spec, &cand, prime)? != 1 {
                        continue;
                    }
                    if siblings
                        .iter()
                        .filter(|q| q.hnf != prime.hnf)
                        .map(|q| valuation(spec, &cand, q))
                        .collect::<Result<Vec<_>>>()?
                        .iter()
                        .all(|&v| v == 0)
                    {
                        return Ok(cand);
                    }
                }
            }
        }
    }
    Err(Error::MissingUniformizer(prime.p))
}

// --- residues --------------------------------------------------------------------

/// Image of x in the residue field O/P. Requires the denominator of x to be
/// invertible at p; at index divisors only residue degree 1 is supported.
pub fn residue(spec: &NumberFieldSpec, x: &RingElement, prime: &PrimeIdeal) -> Result<(FqSpec, FqElem)> {
    spec.check(x)?;
    let p = prime.p;
    let pbig = BigInt::from(p);
    if prime.gen_poly.is_empty() {
        // Externally supplied prime: walk the f = 1 residue classes.
        if prime.f != 1 {
            return Err(Error::ResidueAtIndexDivisor);
        }
        let (y, d) = cleared_int_coords(spec, x)?;
        if d.gcd(&pbig) != BigInt::one() {
            return Err(Error::NotIntegralAtPrime);
        }
        let one_int = integral_int_coords_exact(spec, &spec.one())?;
        let fq = prime.residue_field()?;
        for r in 0..p {
            let mut v = y.clone();
            for j in 0..3 {
                v[j] -= &one_int[j] * BigInt::from(r);
            }
            if hnf_contains(&prime.hnf, &v) {
                let dinv = crate::arith::invmod_u64(
                    (d.mod_floor(&pbig)).to_u64().unwrap(),
                    p,
                )
                .ok_or(Error::NotInvertible)?;
                return Ok((fq.clone(), fq.scalar(crate::arith::mulmod_u64(r, dinv, p))));
            }
        }
        unreachable!("residue classes of a degree-1 prime cover O");
    }
    // Power-basis route: clear denominators of the power coordinates, reduce
    // the polynomial by gen_poly over F_p, divide by the cleared scalar.
    let mut d = BigInt::one();
    for c in &x.coords {
        d = d.lcm(c.denom());
    }
    if d.gcd(&pbig) != BigInt::one() {
        return Err(Error::NotIntegralAtPrime);
    }
    let fq = prime.residue_field()?;
    let t = if prime.f == 1 {
        fq.scalar((p - prime.gen_poly[0] % p) % p)
    } else {
        fq.from_coords(&[0, 1, 0])
    };
    let mut acc = fq.zero();
    for c in x.coords.iter().rev() {
        let num = (c * BigRational::from_integer(d.clone())).to_integer();
        acc = fq.add(&fq.mul(&acc, &t), &fq.scalar_int(&num));
    }
    let dinv = crate::arith::invmod_u64((d.mod_floor(&pbig)).to_u64().unwrap(), p)
        .ok_or(Error::NotInvertible)?;
    Ok((fq.clone(), fq.mul(&acc, &fq.scalar(dinv))))
}

// --- unit orders in O/m ------------------------------------------------------------

/// |(O/m)^x| for m = prod P_i^{k_i}: product of N^{k-1} (N-1).
pub fn modulus_unit_count(parts: &[(PrimeIdeal, u32)]) -> BigInt {
    let mut acc = BigInt::one();
    for (prime, k) in parts {
        acc *= prime.norm.pow(k - 1) * (&prime.norm - BigInt::one());
    }
    acc
}

/// Multiplicative order of u in (O/m)^x as the lcm of its orders modulo each
/// P^k, each computed by stripping primes from the group order.
pub fn unit_order_mod(
    spec: &NumberFieldSpec,
    u: &RingElement,
    parts: &[(PrimeIdeal, u32)],
) -> Result<BigInt> {
    let mut order = BigInt::one();
    for (prime, k) in parts {
        let component = component_order(spec, u, prime, *k)?;
        order = order.lcm(&component);
    }
    Ok(order)
}

fn component_order(
    spec: &NumberFieldSpec,
    u: &RingElement,
    prime: &PrimeIdeal,
    k: u32,
) -> Result<BigInt> {
    if valuation(spec, u, prime)? != 0 {
        return Err(Error::BadUnit);
    }
    let h = ideal_pow(spec, prime, k)?;
    let (y, d) = cleared_int_coords(spec, u)?;
    let pbig = BigInt::from(prime.p);
    if d.gcd(&pbig) != BigInt::one() {
        // Denominator has p-content at a sibling prime; fold it in by
        // inverting d modulo p^k (p^k Z sits inside P^k).
        return Err(Error::NotIntegralAtPrime);
    }
    let pk = pbig.pow(k);
    let dinv = crate::arith::modinv_big(&d, &pk).ok_or(Error::NotInvertible)?;
    let mut rep: [BigInt; 3] = Default::default();
    for j in 0..3 {
        rep[j] = &y[j] * &dinv;
    }
    let rep = hnf_reduce(&h, &rep);

    let group = prime.norm.pow(k - 1) * (&prime.norm - BigInt::one());
    let fac = factor(&group.to_biguint().expect("positive order"))
        .map_err(|_| Error::UnfactoredCofactor(group.to_string()))?;
    let one_rep = hnf_reduce(&h, &integral_int_coords_exact(spec, &spec.one())?);
    let mut ord = group.clone();
    for (q, _) in fac {
        let qb = BigInt::from(q);
        while (&ord % &qb).is_zero() {
            let cand = &ord / &qb;
            if quot_pow(spec, &h, &rep, &cand)? == one_rep {
                ord = cand;
            } else {
                break;
            }
        }
    }
    if quot_pow(spec, &h, &rep, &ord)? != one_rep {
        return Err(Error::BadUnit);
    }
    Ok(ord)
}

fn quot_mul(
    spec: &NumberFieldSpec,
    h: &Hnf,
    a: &[BigInt; 3],
    b: &[BigInt; 3],
) -> Result<[BigInt; 3]> {
    let ea = spec.from_integral_int_coords(a)?;
    let eb = spec.from_integral_int_coords(b)?;
    let prod = spec.mul(&ea, &eb)?;
    Ok(hnf_reduce(h, &integral_int_coords_exact(spec, &prod)?))
}

fn quot_pow(
    spec: &NumberFieldSpec,
    h: &Hnf,
    base: &[BigInt; 3],
    e: &BigInt,
) -> Result<[BigInt; 3]> {
    let bits = e.to_biguint().ok_or(Error::BadUnit)?;
    let mut acc = hnf_reduce(h, &integral_int_coords_exact(spec, &spec.one())?);
    let mut b = base.clone();
    let nbits = bits.bits();
    for i in 0..nbits {
        if bits.bit(i) {
            acc = quot_mul(spec, h, &acc, &b)?;
        }
        if i + 1 < nbits {
            b = quot_mul(spec, h, &b, &b)?;
        }
    }
    Ok(acc)
}
