//! Dilated lattices, the deck group and its dual.
//!
//! For a covering matrix `B` the deck group of `ℝᵖ/Bℤᵖ → ℝᵖ/ℤᵖ` is
//! `ℤᵖ/Bℤᵖ` and its dual is `Aℤᵖ/ℤᵖ` with `A = (Bᵀ)⁻¹`. Dual classes are
//! keyed by their canonical representative `s(k) ∈ Aℤᵖ ∩ [0,1)ᵖ`; class
//! indices below always refer to positions in the lexicographically sorted
//! representative list, so index `0` is the trivial class.
//!
//! ```
//! use solenoid::intlat::IntMatrix;
//! use solenoid::lattice::Covering;
//!
//! let cov = Covering::new(&IntMatrix::parse("1,-1;1,1").unwrap()).unwrap();
//! let g = cov.group();
//! assert_eq!(g.order, 2);
//! assert_eq!(g.dual_rep_strings(), vec![vec!["0", "0"], vec!["1/2", "1/2"]]);
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intlat::{
    self, check_covering, frac_vec, inverse, inverse_transpose, is_integral, norm_sq, sqrt_upper,
    IntMatrix, RatMatrix, Rational, SmithForm,
};

/// A unit complex number `e^{2πi·value}` with `value ∈ [0,1)` exact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase(Rational);

impl Phase {
    /// Reduces `x` mod 1.
    pub fn new(x: Rational) -> Self {
        let f = x.floor();
        Phase(x - f)
    }

    pub fn zero() -> Self {
        Phase(Rational::zero())
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Phase::new(intlat::rat(num, den))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, other: &Phase) -> Phase {
        Phase::new(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Phase) -> Phase {
        Phase::new(&self.0 - &other.0)
    }

    pub fn neg(&self) -> Phase {
        Phase::new(-&self.0)
    }

    /// `k·self`.
    pub fn times(&self, k: &BigInt) -> Phase {
        Phase::new(&self.0 * Rational::from_integer(k.clone()))
    }

    /// Order of the phase in `ℚ/ℤ` (its reduced denominator).
    pub fn order(&self) -> BigInt {
        self.0.denom().clone()
    }

    pub fn to_complex(&self) -> num_complex::Complex64 {
        let angle = 2.0 * std::f64::consts::PI * intlat::rat_to_f64(&self.0);
        num_complex::Complex64::new(angle.cos(), angle.sin())
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Phase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// `⟨x, y⟩ = Σ xₐyₐ mod 1`.
pub fn pairing(x: &[Rational], y: &[Rational]) -> Phase {
    assert_eq!(x.len(), y.len(), "pairing of vectors of different length");
    Phase::new(x.iter().zip(y).fold(Rational::zero(), |acc, (a, b)| acc + a * b))
}

/// Pairing of a rational vector with an integer vector.
pub fn pairing_int(x: &[Rational], y: &[BigInt]) -> Phase {
    assert_eq!(x.len(), y.len(), "pairing of vectors of different length");
    Phase::new(x.iter().zip(y).fold(Rational::zero(), |acc, (a, b)| acc + a * Rational::from_integer(b.clone())))
}

/// The deck group `ℤᵖ/Bℤᵖ` together with its dual `Aℤᵖ/ℤᵖ`.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientGroup {
    pub order: usize,
    #[serde(serialize_with = "serialize_ints")]
    pub factors: Vec<BigInt>,
    /// `s(k) ∈ Aℤᵖ ∩ [0,1)ᵖ`, sorted lexicographically.
    #[serde(serialize_with = "intlat::serialize_rational_vecs")]
    pub dual_reps: Vec<Vec<Rational>>,
    /// `ŝ(k) ∈ ℤᵖ ∩ B[0,1)ᵖ`, sorted lexicographically.
    #[serde(serialize_with = "serialize_int_vecs")]
    pub group_reps: Vec<Vec<BigInt>>,
    #[serde(skip)]
    dual_index: BTreeMap<Vec<Rational>, usize>,
    #[serde(skip)]
    group_index: BTreeMap<Vec<BigInt>, usize>,
    #[serde(skip)]
    b: IntMatrix,
    #[serde(skip)]
    b_inv: RatMatrix,
}

fn serialize_ints<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn serialize_int_vecs<S: Serializer>(v: &[Vec<BigInt>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

impl QuotientGroup {
    /// Index of the dual class containing `x ∈ Aℤᵖ`.
    pub fn dual_class(&self, x: &[Rational]) -> Option<usize> {
        self.dual_index.get(&frac_vec(x)).copied()
    }

    /// `j + k` in the dual group.
    pub fn dual_add(&self, j: usize, k: usize) -> usize {
        let sum = intlat::vec_add(&self.dual_reps[j], &self.dual_reps[k]);
        self.dual_class(&sum).expect("dual group closed under addition")
    }

    /// `−k` in the dual group.
    pub fn dual_neg(&self, k: usize) -> usize {
        self.dual_class(&intlat::vec_neg(&self.dual_reps[k])).expect("dual group closed under negation")
    }

    pub fn dual_sub(&self, j: usize, k: usize) -> usize {
        self.dual_add(j, self.dual_neg(k))
    }

    /// Canonical representative `B·frac(B⁻¹x)` of `x ∈ ℤᵖ` modulo `Bℤᵖ`.
    pub fn group_canonical(&self, x: &[BigInt]) -> Vec<BigInt> {
        let xr: Vec<Rational> = x.iter().map(|v| Rational::from_integer(v.clone())).collect();
        let y = frac_vec(&self.b_inv.mul_vec(&xr));
        self.b.to_rational().mul_vec(&y).into_iter().map(|v| v.to_integer()).collect()
    }

    /// Index of the group class of `x ∈ ℤᵖ`.
    pub fn group_class(&self, x: &[BigInt]) -> usize {
        self.group_index[&self.group_canonical(x)]
    }

    /// `⟨s(k), ŝ(g)⟩`, the value of character `k` at group element `g`.
    pub fn character(&self, k: usize, g: usize) -> Phase {
        pairing_int(&self.dual_reps[k], &self.group_reps[g])
    }

    pub fn dual_rep_strings(&self) -> Vec<Vec<String>> {
        self.dual_reps.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect()
    }
}

/// Cached data attached to a covering matrix `B`.
#[derive(Clone, Debug)]
pub struct Covering {
    b: IntMatrix,
    det: BigInt,
    a: RatMatrix,
    cofactor: IntMatrix,
    snf: SmithForm,
    group: QuotientGroup,
}

impl Covering {
    /// Validates `|det B| > 1` and enumerates the deck group.
    pub fn new(b: &IntMatrix) -> Result<Self> {
        let det = check_covering(b)?;
        let a = inverse_transpose(b)?;
        let cofactor = intlat::cofactor_matrix(b);
        let snf = intlat::smith_normal_form(b)?;
        let group = build_group(b, &snf)?;
        Ok(Covering { b: b.clone(), det, a, cofactor, snf, group })
    }

    pub fn b(&self) -> &IntMatrix {
        &self.b
    }

    pub fn a(&self) -> &RatMatrix {
        &self.a
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `r = |det B|`.
    pub fn order(&self) -> usize {
        self.group.order
    }

    pub fn smith(&self) -> &SmithForm {
        &self.snf
    }

    pub fn group(&self) -> &QuotientGroup {
        &self.group
    }

    /// `Aⁿ` exactly.
    pub fn a_pow(&self, n: u32) -> RatMatrix {
        self.a.pow(n)
    }

    /// Is `ξ ∈ Aⁿℤᵖ`? Equivalent to `(Bᵀ)ⁿξ ∈ ℤᵖ`.
    pub fn in_level(&self, xi: &[Rational], n: u32) -> bool {
        let bt = self.b.transpose().pow(n).to_rational();
        is_integral(&bt.mul_vec(xi))
    }

    /// Section `s_n(k) = A^{n−1}s₁(k)` for every dual class `k`.
    pub fn section(&self, n: u32) -> Section {
        assert!(n >= 1, "sections start at level 1");
        let an = self.a.pow(n - 1);
        Section { level: n, values: self.group.dual_reps.iter().map(|s| an.mul_vec(s)).collect() }
    }

    /// Class of `ξ ∈ Aⁿℤᵖ` in `Aⁿℤᵖ/A^{n−1}ℤᵖ ≅ Ẑ_B`, read off from `(Bᵀ)^{n−1}ξ`.
    pub fn level_class(&self, xi: &[Rational], n: u32) -> Result<usize> {
        assert!(n >= 1);
        let y = self.b.transpose().pow(n - 1).to_rational().mul_vec(xi);
        self.group.dual_class(&y).ok_or(Error::NotLevelFrequency { level: n as usize })
    }

    /// Forward mode bijection `ξ = m + Σ_h s_h(k_h)`.
    pub fn mode_fwd(&self, mode: &Mode) -> Vec<Rational> {
        let mut xi: Vec<Rational> = mode.m.iter().map(|x| Rational::from_integer(x.clone())).collect();
        for (h, &k) in mode.classes.iter().enumerate() {
            let s = self.a.pow(h as u32).mul_vec(&self.group.dual_reps[k]);
            xi = intlat::vec_add(&xi, &s);
        }
        xi
    }

    /// Inverse mode bijection: peels `k_n`, then `k_{n−1}`, down to `m ∈ ℤᵖ`.
    pub fn mode_inv(&self, xi: &[Rational], n: u32) -> Result<Mode> {
        if !self.in_level(xi, n) {
            return Err(Error::NotLevelFrequency { level: n as usize });
        }
        let mut rest = xi.to_vec();
        let mut classes = vec![0; n as usize];
        for h in (1..=n).rev() {
            let k = self.level_class(&rest, h)?;
            let s = self.a.pow(h - 1).mul_vec(&self.group.dual_reps[k]);
            rest = intlat::vec_sub(&rest, &s);
            classes[h as usize - 1] = k;
        }
        debug_assert!(is_integral(&rest));
        Ok(Mode { m: rest.iter().map(|x| x.to_integer()).collect(), classes })
    }

    /// Cocycle table `ω_n(j,k) = s_n(j) + s_n(k) − s_n(j+k)`.
    pub fn cocycle(&self, n: u32) -> Cocycle {
        let section = self.section(n);
        let r = self.order();
        let mut table = Vec::with_capacity(r);
        for j in 0..r {
            let mut row = Vec::with_capacity(r);
            for k in 0..r {
                let jk = self.group.dual_add(j, k);
                let w = intlat::vec_sub(&intlat::vec_add(&section.values[j], &section.values[k]), &section.values[jk]);
                row.push(w);
            }
            table.push(row);
        }
        Cocycle { level: n, table }
    }

    /// Lattice `Aⁿℤᵖ` with integer bookkeeping.
    pub fn lattice(&self, n: u32) -> DilatedLattice {
        DilatedLattice {
            level: n,
            basis: self.a.pow(n),
            numer: self.cofactor.pow(n),
            denom: num_traits::pow(self.det.clone(), n as usize),
            box_matrix: self.b.transpose().pow(n),
        }
    }

    /// All `ξ ∈ Aⁿℤᵖ` with `‖ξ‖² ≤ radius_sq`, ordered lexicographically by `m`.
    pub fn enumerate_ball(&self, n: u32, radius_sq: &Rational) -> Vec<LatticePoint> {
        self.lattice(n).ball(radius_sq)
    }
}

/// A decomposition `ξ = m + Σ_{h=1}^n s_h(k_h)`; `classes[h−1] = k_h`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mode {
    pub m: Vec<BigInt>,
    pub classes: Vec<usize>,
}

/// Section values `s_n(k)`, indexed by dual class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub level: u32,
    pub values: Vec<Vec<Rational>>,
}

/// `ω_n(j,k)` for all pairs of dual classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    pub level: u32,
    pub table: Vec<Vec<Vec<Rational>>>,
}

impl Cocycle {
    /// Checks normalization, membership in `A^{n−1}ℤᵖ` and the cocycle identity.
    pub fn verify(&self, cov: &Covering) -> bool {
        let r = self.table.len();
        let g = cov.group();
        let zero_row = (0..r).all(|k| self.table[0][k].iter().all(Zero::is_zero) && self.table[k][0].iter().all(Zero::is_zero));
        let members = self.table.iter().flatten().all(|w| cov.in_level(w, self.level - 1));
        let mut identity = true;
        for j in 0..r {
            for k in 0..r {
                for l in 0..r {
                    let lhs = intlat::vec_add(&self.table[j][k], &self.table[g.dual_add(j, k)][l]);
                    let rhs = intlat::vec_add(&self.table[k][l], &self.table[j][g.dual_add(k, l)]);
                    identity &= lhs == rhs;
                }
            }
        }
        zero_row && members && identity
    }
}

fn build_group(b: &IntMatrix, snf: &SmithForm) -> Result<QuotientGroup> {
    let p = b.dim();
    let factors = snf.factors();
    let order = factors.iter().product::<BigInt>().to_usize().ok_or_else(|| Error::precondition("deck group too large"))?;
    // Aℤᵖ = Sᵀ D⁻¹ ℤᵖ and ℤᵖ/Bℤᵖ ≅ S⁻¹(ℤᵖ/Dℤᵖ).
    let st = snf.s.transpose().to_rational();
    let s_inv = inverse(&snf.s)?;
    let b_inv = inverse(b)?;
    let br = b.to_rational();
    let mut dual = BTreeMap::new();
    let mut group = BTreeMap::new();
    let mut j = vec![BigInt::zero(); p];
    loop {
        let scaled: Vec<Rational> = j.iter().zip(&factors).map(|(x, d)| Rational::new(x.clone(), d.clone())).collect();
        dual.insert(frac_vec(&st.mul_vec(&scaled)), ());
        let jr: Vec<Rational> = j.iter().map(|x| Rational::from_integer(x.clone())).collect();
        let x = s_inv.mul_vec(&jr);
        let canon: Vec<BigInt> = br.mul_vec(&frac_vec(&b_inv.mul_vec(&x))).into_iter().map(|v| v.to_integer()).collect();
        group.insert(canon, ());
        // odometer over the box 0 ≤ j_i < d_i
        let mut i = 0;
        loop {
            if i == p {
                break;
            }
            j[i] += 1;
            if j[i] < factors[i] {
                break;
            }
            j[i] = BigInt::zero();
            i += 1;
        }
        if i == p {
            break;
        }
    }
    if dual.len() != order || group.len() != order {
        return Err(Error::invariant("quotient enumeration produced duplicate classes"));
    }
    let dual_reps: Vec<Vec<Rational>> = dual.into_keys().collect();
    let group_reps: Vec<Vec<BigInt>> = group.into_keys().collect();
    let dual_index = dual_reps.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let group_index = group_reps.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    Ok(QuotientGroup {
        order,
        factors,
        dual_reps,
        group_reps,
        dual_index,
        group_index,
        b: b.clone(),
        b_inv,
    })
}

/// Deck group and dual of `B`; errors on `|det B| ≤ 1`.
pub fn enumerate_quotient(b: &IntMatrix) -> Result<QuotientGroup> {
    Ok(Covering::new(b)?.group)
}

/// Verifies `Σ_k ⟨k,g⟩ = δ_{g,e}·r` exactly for every group element `g`.
///
/// The phases `{⟨k,g⟩}_k` form the image of the character map `k ↦ ⟨k,g⟩`,
/// so they are uniformly distributed over a cyclic subgroup of `ℚ/ℤ`. The sum
/// vanishes exactly when that subgroup is nontrivial. Returns the offending
/// group representative on failure.
pub fn schur_orthogonality_check(g: &QuotientGroup) -> std::result::Result<(), Vec<BigInt>> {
    for (gi, rep) in g.group_reps.iter().enumerate() {
        let mut counts: BTreeMap<Phase, usize> = BTreeMap::new();
        for k in 0..g.order {
            *counts.entry(g.character(k, gi)).or_default() += 1;
        }
        let m = counts.keys().fold(BigInt::one(), |acc, ph| acc.lcm(&ph.order()));
        let is_identity = rep.iter().all(Zero::is_zero);
        let ok = if m.is_one() {
            // every phase is 0 and the sum is r, which must only happen at g = e
            is_identity
        } else {
            let mu = m.to_usize().unwrap_or(usize::MAX);
            let uniform = counts.len() == mu && counts.values().all(|&c| c * mu == g.order);
            uniform && !is_identity
        };
        if !ok {
            return Err(rep.clone());
        }
    }
    Ok(())
}

/// `Aⁿℤᵖ` with `Aⁿ = Cⁿ/detⁿ`, `C` the cofactor matrix.
#[derive(Clone, Debug)]
pub struct DilatedLattice {
    pub level: u32,
    pub basis: RatMatrix,
    numer: IntMatrix,
    denom: BigInt,
    box_matrix: IntMatrix,
}

/// A point `ξ = Aⁿm`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePoint {
    pub m: Vec<BigInt>,
    pub xi: Vec<Rational>,
    pub norm_sq: Rational,
}

/// Integer data of a ball scan: `‖ξ‖² = key / denom_sq` for each coordinate vector.
#[derive(Clone, Debug)]
pub struct BallScan {
    pub denom_sq: BigInt,
    pub points: Vec<(Vec<i64>, BigInt)>,
}

impl DilatedLattice {
    pub fn point(&self, m: &[BigInt]) -> Vec<Rational> {
        let mr: Vec<Rational> = m.iter().map(|x| Rational::from_integer(x.clone())).collect();
        self.basis.mul_vec(&mr)
    }

    /// Coordinate box half-width guaranteeing completeness for `‖ξ‖ ≤ R`.
    pub fn box_bound(&self, radius_sq: &Rational) -> i64 {
        let r = sqrt_upper(radius_sq);
        let bound = (r * Rational::from_integer(self.box_matrix.row_sum_norm())).ceil().to_integer();
        bound.to_i64().expect("enumeration box too large")
    }

    /// Integer form of [`DilatedLattice::ball`], cheap for large balls.
    pub fn scan(&self, radius_sq: &Rational) -> BallScan {
        let p = self.basis.dim();
        let bound = self.box_bound(radius_sq);
        let denom_sq = &self.denom * &self.denom;
        // ‖Cⁿm‖² ≤ limit  ⇔  ‖ξ‖² ≤ R²
        let limit_num = radius_sq.numer() * &denom_sq;
        let limit_den = radius_sq.denom().clone();
        let max_entry = self.numer.entries().iter().map(|x| x.abs()).max().unwrap();
        let worst = BigInt::from(p as i64) * max_entry * BigInt::from(bound.max(1));
        let worst_sq = BigInt::from(p as i64) * &worst * &worst * &limit_den;
        let small = worst_sq.bits() < 120 && limit_num.bits() < 120;
        let mut points = Vec::new();
        let mut m = vec![-bound; p];
        if small {
            let numer: Vec<i128> = self.numer.entries().iter().map(|x| x.to_i128().unwrap()).collect();
            let lim = limit_num.to_i128().unwrap();
            let lden = limit_den.to_i128().unwrap();
            loop {
                let mut s: i128 = 0;
                for i in 0..p {
                    let mut v: i128 = 0;
                    for j in 0..p {
                        v += numer[i * p + j] * m[j] as i128;
                    }
                    s += v * v;
                }
                if s * lden <= lim {
                    points.push((m.clone(), BigInt::from(s)));
                }
                if !odometer(&mut m, bound) {
                    break;
                }
            }
        } else {
            loop {
                let mut s = BigInt::zero();
                for i in 0..p {
                    let mut v = BigInt::zero();
                    for j in 0..p {
                        v += self.numer.get(i, j) * BigInt::from(m[j]);
                    }
                    s += &v * &v;
                }
                if &s * &limit_den <= limit_num {
                    points.push((m.clone(), s));
                }
                if !odometer(&mut m, bound) {
                    break;
                }
            }
        }
        BallScan { denom_sq, points }
    }

    /// All lattice points in the closed ball of squared radius `radius_sq`.
    pub fn ball(&self, radius_sq: &Rational) -> Vec<LatticePoint> {
        let scan = self.scan(radius_sq);
        scan.points
            .into_iter()
            .map(|(m, key)| {
                let m: Vec<BigInt> = m.into_iter().map(BigInt::from).collect();
                let xi = self.point(&m);
                debug_assert_eq!(norm_sq(&xi), Rational::new(key.clone(), scan.denom_sq.clone()));
                LatticePoint { norm_sq: Rational::new(key, scan.denom_sq.clone()), xi, m }
            })
            .collect()
    }
}

/// Advances `m` through the box `[−bound, bound]ᵖ` in lexicographic order.
fn odometer(m: &mut [i64], bound: i64) -> bool {
    for i in (0..m.len()).rev() {
        if m[i] < bound {
            m[i] += 1;
            return true;
        }
        m[i] = -bound;
    }
    false
}

/// `∏dᵢ`, the group order predicted by the Smith form.
pub fn smith_order(snf: &SmithForm) -> BigInt {
    snf.factors().iter().product()
}

/// Convenience: integer vector as rationals.
pub fn to_rational_vec(v: &[BigInt]) -> Vec<Rational> {
    v.iter().map(|x| Rational::from_integer(x.clone())).collect()
}

/// Trace weight `r⁻ⁿ` of a level-`n` eigenvector.
pub fn level_weight(r: usize, n: u32) -> Rational {
    Rational::new(BigInt::one(), num_traits::pow(BigInt::from(r), n as usize))
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.m.iter().map(|x| x.to_string()).collect();
        write!(f, "m=({}) k={:?}", m.join(","), self.classes)
    }
}
