//! 2x2 matrix groups over Z/m for small m (m = 8 in anger; any u64 modulus works).
//!
//! Everything the 2-adic image argument needs at the finite level lives here:
//! subgroup closures by breadth-first search, commutators, and the mod-8
//! identities that pin down squares and commutators of the congruence
//! filtration V_k = { g : g ≡ I mod 2^k }.  Groups are tiny (≤ 2^8 elements
//! in practice) so exhaustive enumeration is the proof.

use std::collections::{BTreeSet, VecDeque};

use crate::error::Error;

/// Hard ceiling on closure size; anything bigger than this is a bug in the
/// caller, not a group we ever mean to enumerate.
pub const CLOSURE_CEILING: usize = 1 << 20;

/// A 2x2 matrix with entries reduced mod `modulus`, row-major
/// `[a, b, c, d]` for (a b; c d).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MatMod {
    pub entries: [u64; 4],
    pub modulus: u64,
}

impl MatMod {
    pub fn new(entries: [u64; 4], modulus: u64) -> Result<Self, Error> {
        if modulus < 2 {
            return Err(Error::Config(format!(
                "matrix modulus must be >= 2, got {modulus}"
            )));
        }
        let entries = [
            entries[0] % modulus,
            entries[1] % modulus,
            entries[2] % modulus,
            entries[3] % modulus,
        ];
        Ok(MatMod { entries, modulus })
    }

    pub fn identity(modulus: u64) -> Result<Self, Error> {
        MatMod::new([1, 0, 0, 1], modulus)
    }

    pub fn mul(&self, other: &MatMod) -> Result<MatMod, Error> {
        if self.modulus != other.modulus {
            return Err(Error::Config(format!(
                "modulus mismatch: {} vs {}",
                self.modulus, other.modulus
            )));
        }
        let m = self.modulus;
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = other.entries;
        // entries < m <= 2^32 would be enough; guard anyway with u128.
        let mm = |x: u64, y: u64| ((x as u128 * y as u128) % m as u128) as u64;
        let add = |x: u64, y: u64| ((x as u128 + y as u128) % m as u128) as u64;
        MatMod::new(
            [
                add(mm(a, e), mm(b, g)),
                add(mm(a, f), mm(b, h)),
                add(mm(c, e), mm(d, g)),
                add(mm(c, f), mm(d, h)),
            ],
            m,
        )
    }

    pub fn det(&self) -> u64 {
        let m = self.modulus as u128;
        let [a, b, c, d] = self.entries;
        let ad = (a as u128 * d as u128) % m;
        let bc = (b as u128 * c as u128) % m;
        ((ad + m - bc) % m) as u64
    }

    pub fn trace(&self) -> u64 {
        (self.entries[0] + self.entries[3]) % self.modulus
    }

    /// Inverse via the adjugate; requires det invertible mod `modulus`.
    pub fn inv(&self) -> Result<MatMod, Error> {
        let m = self.modulus;
        let det = self.det();
        let det_inv = crate::arith::invmod_u64(det, m).ok_or_else(|| {
            Error::Config(format!(
                "matrix {:?} not invertible mod {}: det = {}",
                self.entries, m, det
            ))
        })?;
        let [a, b, c, d] = self.entries;
        let neg = |x: u64| (m - x % m) % m;
        let mm = |x: u64, y: u64| ((x as u128 * y as u128) % m as u128) as u64;
        MatMod::new(
            [
                mm(d, det_inv),
                mm(neg(b), det_inv),
                mm(neg(c), det_inv),
                mm(a, det_inv),
            ],
            m,
        )
    }

    pub fn is_identity(&self) -> bool {
        self.entries[0] == 1 % self.modulus
            && self.entries[1] == 0
            && self.entries[2] == 0
            && self.entries[3] == 1 % self.modulus
    }
}

/// g h g^{-1} h^{-1}.
pub fn commutator(g: &MatMod, h: &MatMod) -> Result<MatMod, Error> {
    g.mul(h)?.mul(&g.inv()?)?.mul(&h.inv()?)
}

/// Subgroup generated by `gens`: BFS under left-multiplication by the
/// generators and their inverses.  Errors out past `CLOSURE_CEILING`.
pub fn closure(gens: &[MatMod]) -> Result<BTreeSet<MatMod>, Error> {
    let modulus = match gens.first() {
        Some(g) => g.modulus,
        None => {
            return Err(Error::Config("closure of empty generating set".into()));
        }
    };
    let mut step = Vec::with_capacity(2 * gens.len());
    for g in gens {
        if g.modulus != modulus {
            return Err(Error::Config("mixed moduli in generating set".into()));
        }
        step.push(*g);
        step.push(g.inv()?);
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    let id = MatMod::identity(modulus)?;
    seen.insert(id);
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in &step {
            let y = g.mul(&x)?;
            if seen.insert(y) {
                if seen.len() > CLOSURE_CEILING {
                    return Err(Error::Budget(format!(
                        "closure exceeded ceiling {CLOSURE_CEILING}"
                    )));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(seen)
}

/// All matrices ≡ I mod 2^k, taken mod 2^n (k < n).  For (k, n) = (1, 3)
/// this is the 256-element image of V_1 in GL_2(Z/8); for (2, 3) the
/// 16-element image of V_2.
pub fn v_k_mod_2n(k: u32, n: u32) -> Result<Vec<MatMod>, Error> {
    if k == 0 || k >= n || n > 10 {
        return Err(Error::Config(format!(
            "need 0 < k < n <= 10, got k = {k}, n = {n}"
        )));
    }
    let modulus = 1u64 << n;
    let step = 1u64 << k;
    let offdiag: Vec<u64> = (0..modulus).step_by(step as usize).collect();
    let diag: Vec<u64> = (1..modulus).step_by(step as usize).collect();
    let mut out = Vec::new();
    for &a in &diag {
        for &b in &offdiag {
            for &c in &offdiag {
                for &d in &diag {
                    let m = MatMod::new([a, b, c, d], modulus)?;
                    // det ≡ 1 mod 2 automatically, so always invertible.
                    debug_assert!(m.det() % 2 == 1);
                    out.push(m);
                }
            }
        }
    }
    Ok(out)
}

/// The set { g² mod 8 : g ≡ I mod 2 }, computed by brute force over all
/// 256 classes I + 2S + 4T.  The argument needs this to be exactly five
/// matrices: I, I+4E12, I+4E21, (5,4;4,5), (5,0;0,5).
pub fn squares_of_v1_mod8() -> Result<BTreeSet<MatMod>, Error> {
    let mut out = BTreeSet::new();
    for g in v_k_mod_2n(1, 3)? {
        out.insert(g.mul(&g)?);
    }
    Ok(out)
}

/// The five-element square set, as a fixed constant for comparison.
pub fn expected_squares_mod8() -> Result<BTreeSet<MatMod>, Error> {
    let mats = [
        [1, 0, 0, 1],
        [1, 4, 0, 1],
        [1, 0, 4, 1],
        [5, 4, 4, 5],
        [5, 0, 0, 5],
    ];
    let mut out = BTreeSet::new();
    for m in mats {
        out.insert(MatMod::new(m, 8)?);
    }
    Ok(out)
}

/// Outcome of the mod-8 commutator computation for V_1/V_3.
#[derive(Debug)]
pub struct CommutatorLemmaReport {
    /// |V_1/V_3| as enumerated (must be 256).
    pub group_order: usize,
    /// Order of the commutator subgroup (must be 8).
    pub commutator_order: usize,
    /// Whether the commutator subgroup equals { I + 4A : tr A ≡ 0 mod 2 }.
    pub matches_traceless_form: bool,
}

/// Computes the commutator subgroup of V_1/V_3 ⊂ GL_2(Z/8) by brute force:
/// multiplicative closure of all pairwise commutators.  (The set of all
/// commutators is conjugation-stable — g[a,b]g⁻¹ = [gag⁻¹, gbg⁻¹] — so its
/// multiplicative closure is already the commutator subgroup.)
pub fn verify_commutator_lemma_mod8() -> Result<CommutatorLemmaReport, Error> {
    let v1 = v_k_mod_2n(1, 3)?;
    let group_order = v1.len();
    let mut comms = BTreeSet::new();
    for g in &v1 {
        for h in &v1 {
            comms.insert(commutator(g, h)?);
        }
    }
    let gens: Vec<MatMod> = comms.into_iter().collect();
    let subgroup = closure(&gens)?;

    // { I + 4A : tr A ≡ 0 mod 2 } mod 8: A ranges over Mat_2(F_2).
    let mut traceless = BTreeSet::new();
    for bits in 0u64..16 {
        let a = bits & 1;
        let b = (bits >> 1) & 1;
        let c = (bits >> 2) & 1;
        let d = (bits >> 3) & 1;
        if (a + d) % 2 != 0 {
            continue;
        }
        traceless.insert(MatMod::new([1 + 4 * a, 4 * b, 4 * c, 1 + 4 * d], 8)?);
    }

    Ok(CommutatorLemmaReport {
        group_order,
        commutator_order: subgroup.len(),
        matches_traceless_form: subgroup == traceless,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m8(e: [u64; 4]) -> MatMod {
        MatMod::new(e, 8).unwrap()
    }

    #[test]
    fn inverse_round_trip_mod8() {
        for g in v_k_mod_2n(1, 3).unwrap() {
            let gi = g.inv().unwrap();
            assert!(g.mul(&gi).unwrap().is_identity());
            assert!(gi.mul(&g).unwrap().is_identity());
        }
    }

    #[test]
    fn v1_has_256_elements_v2_has_16() {
        assert_eq!(v_k_mod_2n(1, 3).unwrap().len(), 256);
        assert_eq!(v_k_mod_2n(2, 3).unwrap().len(), 16);
    }

    #[test]
    fn squares_of_v1_are_exactly_the_five_matrices() {
        let got = squares_of_v1_mod8().unwrap();
        let want = expected_squares_mod8().unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn square_identity_i_plus_4s_plus_s_squared() {
        // (I + 2S + 4T)² ≡ I + 4(S + S²) mod 8, independent of T.
        for sbits in 0u64..16 {
            let s = [sbits & 1, (sbits >> 1) & 1, (sbits >> 2) & 1, (sbits >> 3) & 1];
            for tbits in 0u64..16 {
                let t = [tbits & 1, (tbits >> 1) & 1, (tbits >> 2) & 1, (tbits >> 3) & 1];
                let g = m8([
                    1 + 2 * s[0] + 4 * t[0],
                    2 * s[1] + 4 * t[1],
                    2 * s[2] + 4 * t[2],
                    1 + 2 * s[3] + 4 * t[3],
                ]);
                let smat = m8([s[0], s[1], s[2], s[3]]);
                let s2 = smat.mul(&smat).unwrap();
                let rhs = m8([
                    1 + 4 * (smat.entries[0] + s2.entries[0]),
                    4 * (smat.entries[1] + s2.entries[1]),
                    4 * (smat.entries[2] + s2.entries[2]),
                    1 + 4 * (smat.entries[3] + s2.entries[3]),
                ]);
                assert_eq!(g.mul(&g).unwrap(), rhs);
            }
        }
    }

    #[test]
    fn printed_commutator_identities_mod8() {
        let c1 = commutator(&m8([3, 0, 2, 3]), &m8([3, 0, 2, 1])).unwrap();
        assert_eq!(c1, m8([1, 0, 4, 1]));
        let c2 = commutator(&m8([3, 0, 0, 1]), &m8([1, 2, 2, 1])).unwrap();
        assert_eq!(c2, m8([1, 4, 4, 1]));
    }

    #[test]
    fn commutator_lemma_mod8() {
        let report = verify_commutator_lemma_mod8().unwrap();
        assert_eq!(report.group_order, 256);
        assert_eq!(report.commutator_order, 8);
        assert!(report.matches_traceless_form);
    }

    #[test]
    fn squares_plus_any_det5_element_generate_v2_mod8() {
        // V_2/V_3 has 16 elements.  The five squares have det ≡ 1 mod 8;
        // adjoining any single g ≡ I mod 4 with det g ≡ 5 mod 8 must
        // generate all of V_2/V_3.  det(I + 4A) ≡ 1 + 4·tr A mod 8, so the
        // det-5 elements are the 8 with tr A odd; check every one.
        let squares: Vec<MatMod> = expected_squares_mod8().unwrap().into_iter().collect();
        let v2: BTreeSet<MatMod> = v_k_mod_2n(2, 3).unwrap().into_iter().collect();
        let det5: Vec<MatMod> = v2.iter().copied().filter(|g| g.det() == 5).collect();
        assert_eq!(det5.len(), 8);
        for g in det5 {
            let mut gens = squares.clone();
            gens.push(g);
            let got = closure(&gens).unwrap();
            assert_eq!(got, v2, "det-5 element {:?} fails to fill V_2", g.entries);
        }
        // Without the det-5 element the squares generate a proper subgroup.
        let sub = closure(&squares).unwrap();
        assert!(sub.len() < 16);
        assert!(sub.iter().all(|g| g.det() == 1));
    }

    #[test]
    fn three_commutators_span_index_two_and_one_more_repairs_it() {
        // The two displayed commutators plus the transpose of the first have
        // A-classes E21, E12, E12+E21.  Mod 8 the multiplication on I + 4A
        // is additive in A, so they span only the off-diagonal 4-group — an
        // index-2 subgroup of the trace-zero set, not all of it as the
        // narrative asserts.  The conclusion is still right because another
        // commutator fills the missing coset: [I+2E12, I+2E21] ≡ I + 4(E11
        // − E22) ≡ diag(5,5) mod 8.
        let gens = vec![m8([1, 0, 4, 1]), m8([1, 4, 0, 1]), m8([1, 4, 4, 1])];
        let span = closure(&gens).unwrap();
        assert_eq!(span.len(), 4);

        let report = verify_commutator_lemma_mod8().unwrap();
        assert_eq!(report.commutator_order, 8);

        let repair = commutator(&m8([1, 2, 0, 1]), &m8([1, 0, 2, 1])).unwrap();
        assert_eq!(repair, m8([5, 0, 0, 5]));
        assert!(!span.contains(&repair));
        let mut gens2 = gens.clone();
        gens2.push(repair);
        let full = closure(&gens2).unwrap();
        assert_eq!(full.len(), 8);
        // trace of I + 4A with tr A even is 2 or 10, i.e. ≡ 2 mod 8
        assert!(full.iter().all(|g| g.trace() == 2));
        // and it is exactly the trace-zero form set
        let mut traceless = BTreeSet::new();
        for bits in 0u64..16 {
            let (a, b, c, d) = (bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1);
            if (a + d) % 2 == 0 {
                traceless.insert(m8([1 + 4 * a, 4 * b, 4 * c, 1 + 4 * d]));
            }
        }
        assert_eq!(full, traceless);
    }

    #[test]
    fn closure_is_idempotent_and_contains_generators() {
        let gens = vec![m8([1, 0, 4, 1]), m8([1, 4, 0, 1]), m8([1, 4, 4, 1])];
        let once = closure(&gens).unwrap();
        for g in &gens {
            assert!(once.contains(g));
        }
        let all: Vec<MatMod> = once.iter().copied().collect();
        let twice = closure(&all).unwrap();
        assert_eq!(once, twice);
        assert_eq!(closure(&[MatMod::identity(8).unwrap()]).unwrap().len(), 1);
    }

    #[test]
    fn closure_rejects_mixed_or_empty_input() {
        assert!(closure(&[]).is_err());
        let a = m8([1, 1, 0, 1]);
        let b = MatMod::new([1, 1, 0, 1], 7).unwrap();
        assert!(closure(&[a, b]).is_err());
    }

    #[test]
    fn closure_over_odd_modulus_sl2_f3() {
        // Sanity outside powers of 2: SL_2(F_3) has order 24 and is
        // generated by the two standard unipotents.
        let u = MatMod::new([1, 1, 0, 1], 3).unwrap();
        let l = MatMod::new([1, 0, 1, 1], 3).unwrap();
        let g = closure(&[u, l]).unwrap();
        assert_eq!(g.len(), 24);
        assert!(g.iter().all(|m| m.det() == 1));
    }
}
