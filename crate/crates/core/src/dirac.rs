//! Dirac spectra on the covering tower and the quantities built from them.
//!
//! Four families live here:
//!
//! * the flat torus `𝕋_n = ℝᵖ/Aⁿℤᵖ` with `D = −iΣεᵃ∂ₐ`, whose eigenvalues are
//!   `±2π‖ξ‖` for `ξ ∈ Aⁿℤᵖ` ([`torus_spectrum`]), and the same spectrum
//!   rebuilt from the tensor decomposition `D₀⊗I + C_n`
//!   ([`assembled_cover_spectrum`]);
//! * crossed products by `Aⁿℤᵖ`, eigenvalues `√(λ² + ‖g‖²)`
//!   ([`crossed_spectrum`]);
//! * the UHF algebra with `D₀ = Σ r^{ks}Q_k` ([`UhfModel`]);
//! * commutator norms and the radii table showing that the Lip balls of the
//!   limit are unbounded ([`radii_divergence`]).
//!
//! Spectra are weighted multisets: each record carries a multiplicity and a
//! rational trace weight per eigenvector (`r⁻ⁿ` at level `n`).
//!
//! The decomposition `ξ = m − Σ_h s_h(k_h)` is used when assembling `D̂_n`.
//! With `m + Σ_h s_h(k_h)` the multiset comes out the same (the lattice is
//! symmetric), so the spectrum test cannot tell the two apart; the minus sign
//! is the one used for the operator.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intlat::{self, exact_sqrt, norm_sq, rat_to_f64, sqrt_upper, IntMatrix, Rational};
use crate::lattice::{level_weight, to_rational_vec, Covering};
use crate::nctorus::{NcCovering, NcTorus, RationalAngle, WeylMonomial};

/// Exact complex rationals, used for Clifford identities.
pub type ComplexRational = Complex<Rational>;

fn ser_opt_rat<S: Serializer>(value: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

/// Hermitian generators of a Clifford algebra with entries in `{0, ±1, ±i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordGens {
    pub count: usize,
    pub size: usize,
    /// Row-major `size × size` matrices.
    pub gens: Vec<Vec<Complex<i64>>>,
}

fn cmul(a: &[Complex<i64>], b: &[Complex<i64>], n: usize) -> Vec<Complex<i64>> {
    let mut out = vec![Complex::new(0, 0); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == Complex::new(0, 0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += x * b[k * n + j];
            }
        }
    }
    out
}

fn ckron(a: &[Complex<i64>], na: usize, b: &[Complex<i64>], nb: usize) -> Vec<Complex<i64>> {
    let n = na * nb;
    let mut out = vec![Complex::new(0, 0); n * n];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k) * n + j * nb + l] = a[i * na + j] * b[k * nb + l];
                }
            }
        }
    }
    out
}

fn cidentity(n: usize) -> Vec<Complex<i64>> {
    let mut out = vec![Complex::new(0, 0); n * n];
    for i in 0..n {
        out[i * n + i] = Complex::new(1, 0);
    }
    out
}

/// Recursive Pauli construction.
///
/// One generator is the scalar `1`. From `2m+1` generators of size `2^m`, the
/// next even family is `Γᵢ⊗σ_x` together with `I⊗σ_y`; the next odd family
/// appends `(−i)^m Γ₁⋯Γ_{2m}`.
pub fn clifford_generators(count: usize) -> CliffordGens {
    assert!(count >= 1, "at least one generator");
    let sx = vec![Complex::new(0, 0), Complex::new(1, 0), Complex::new(1, 0), Complex::new(0, 0)];
    let sy = vec![Complex::new(0, 0), Complex::new(0, -1), Complex::new(0, 1), Complex::new(0, 0)];
    let mut gens = vec![vec![Complex::new(1i64, 0)]];
    let mut size = 1;
    while gens.len() < count {
        let c = gens.len();
        if c % 2 == 1 {
            let mut next: Vec<_> = gens.iter().map(|g| ckron(g, size, &sx, 2)).collect();
            next.push(ckron(&cidentity(size), size, &sy, 2));
            gens = next;
            size *= 2;
        } else {
            let m = c / 2;
            let mut prod = cidentity(size);
            for g in &gens {
                prod = cmul(&prod, g, size);
            }
            let phase = [Complex::new(1, 0), Complex::new(0, -1), Complex::new(-1, 0), Complex::new(0, 1)][m % 4];
            gens.push(prod.into_iter().map(|x| x * phase).collect());
        }
    }
    CliffordGens { count, size, gens }
}

impl CliffordGens {
    /// `εᵃεᵇ + εᵇεᵃ = 2δ_{ab}I` and `(εᵃ)* = εᵃ`, checked exactly.
    pub fn verify(&self) -> bool {
        let n = self.size;
        let id = cidentity(n);
        for (a, ga) in self.gens.iter().enumerate() {
            let hermitian = (0..n).all(|i| (0..n).all(|j| ga[i * n + j] == ga[j * n + i].conj()));
            if !hermitian {
                return false;
            }
            for (b, gb) in self.gens.iter().enumerate() {
                let ab = cmul(ga, gb, n);
                let ba = cmul(gb, ga, n);
                let expect = if a == b { 2 } else { 0 };
                if !(0..n * n).all(|i| ab[i] + ba[i] == id[i] * expect) {
                    return false;
                }
            }
        }
        true
    }

    /// `Σₐ xₐεᵃ` with exact entries.
    pub fn combination(&self, x: &[Rational]) -> Vec<ComplexRational> {
        assert_eq!(x.len(), self.count);
        let n = self.size;
        let mut out = vec![ComplexRational::new(Rational::zero(), Rational::zero()); n * n];
        for (g, xa) in self.gens.iter().zip(x) {
            for (o, e) in out.iter_mut().zip(g) {
                if e.re != 0 || e.im != 0 {
                    *o = o.clone() + ComplexRational::new(xa * Rational::from_integer(e.re.into()), xa * Rational::from_integer(e.im.into()));
                }
            }
        }
        out
    }

    /// Checks that `Σₐxₐεᵃ` has characteristic polynomial `(λ² − ‖x‖²)^{size/2}`
    /// (or `λ − x` for a single generator).
    pub fn eigenvalue_law(&self, x: &[Rational]) -> bool {
        let poly = char_poly_complex(&self.combination(x), self.size);
        let expected: Vec<Rational> = if self.size == 1 {
            vec![-x[0].clone(), Rational::one()]
        } else {
            let base = [-norm_sq(x), Rational::zero(), Rational::one()];
            let mut acc = vec![Rational::one()];
            for _ in 0..self.size / 2 {
                let mut next = vec![Rational::zero(); acc.len() + 2];
                for (i, a) in acc.iter().enumerate() {
                    for (j, b) in base.iter().enumerate() {
                        next[i + j] += a * b;
                    }
                }
                acc = next;
            }
            acc
        };
        poly.len() == expected.len() && poly.iter().zip(&expected).all(|(p, e)| p.im.is_zero() && &p.re == e)
    }

    pub fn to_dense(&self, a: usize) -> DMatrix<Complex64> {
        let n = self.size;
        DMatrix::from_fn(n, n, |i, j| {
            let e = self.gens[a][i * n + j];
            Complex64::new(e.re as f64, e.im as f64)
        })
    }
}

/// Faddeev–LeVerrier over `ℚ(i)`; coefficients constant term first.
fn char_poly_complex(m: &[ComplexRational], n: usize) -> Vec<ComplexRational> {
    let zero = ComplexRational::new(Rational::zero(), Rational::zero());
    let mul = |a: &[ComplexRational], b: &[ComplexRational]| {
        let mut out = vec![zero.clone(); n * n];
        for i in 0..n {
            for k in 0..n {
                if a[i * n + k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] = out[i * n + j].clone() + a[i * n + k].clone() * b[k * n + j].clone();
                }
            }
        }
        out
    };
    let mut coeffs = vec![zero.clone(); n + 1];
    coeffs[n] = ComplexRational::new(Rational::one(), Rational::zero());
    let mut acc = vec![zero.clone(); n * n];
    for k in 1..=n {
        let mut next = mul(m, &acc);
        for i in 0..n {
            next[i * n + i] = next[i * n + i].clone() + coeffs[n - k + 1].clone();
        }
        acc = next;
        let am = mul(m, &acc);
        let tr = (0..n).fold(zero.clone(), |t, i| t + am[i * n + i].clone());
        let k_rat = Rational::from_integer(BigInt::from(k));
        coeffs[n - k] = ComplexRational::new(-tr.re / &k_rat, -tr.im / &k_rat);
    }
    coeffs
}

/// One line of a weighted spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRecord {
    /// `|D|`-eigenvalue.
    pub value: f64,
    /// Exact `value²/(2π)²` for lattice spectra, `value²` for crossed ones when exact.
    #[serde(serialize_with = "ser_opt_rat")]
    pub key: Option<Rational>,
    /// Both signs occur among the eigenvalues of `D`.
    pub signed: bool,
    pub multiplicity: u64,
    /// Trace weight per eigenvector.
    #[serde(serialize_with = "intlat::serialize_rational")]
    pub weight: Rational,
}

impl SpectrumRecord {
    /// `multiplicity · weight`.
    pub fn mass(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.multiplicity)) * &self.weight
    }
}

/// Metadata written alongside a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumMeta {
    pub model: String,
    pub matrix: Option<String>,
    pub level: u32,
    pub cutoff: f64,
}

/// A weighted eigenvalue multiset sorted by value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumMultiset {
    pub meta: SpectrumMeta,
    pub records: Vec<SpectrumRecord>,
}

impl SpectrumMultiset {
    pub fn new(meta: SpectrumMeta, mut records: Vec<SpectrumRecord>) -> Self {
        records.retain(|r| r.multiplicity > 0);
        records.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.key.cmp(&b.key)));
        SpectrumMultiset { meta, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of eigenvalues, ignoring weights.
    pub fn count(&self) -> u64 {
        self.records.iter().map(|r| r.multiplicity).sum()
    }

    /// Weighted number of eigenvalues.
    pub fn total_weight(&self) -> Rational {
        self.records.iter().map(SpectrumRecord::mass).sum()
    }

    /// Weighted count of eigenvalues with `|λ| ≤ t`.
    pub fn weighted_count(&self, t: f64) -> Rational {
        self.records.iter().take_while(|r| r.value <= t).map(SpectrumRecord::mass).sum()
    }

    /// Exact comparison as weighted multisets over the exact keys.
    ///
    /// Returns a description of the first difference, if any.
    pub fn difference(&self, other: &Self) -> Option<String> {
        let collect = |s: &Self| -> std::result::Result<BTreeMap<Rational, Rational>, String> {
            let mut map = BTreeMap::new();
            for r in &s.records {
                let key = r.key.clone().ok_or_else(|| format!("record at {} has no exact key", r.value))?;
                *map.entry(key).or_insert_with(Rational::zero) += r.mass();
            }
            Ok(map)
        };
        let a = match collect(self) {
            Ok(a) => a,
            Err(e) => return Some(e),
        };
        let b = match collect(other) {
            Ok(b) => b,
            Err(e) => return Some(e),
        };
        let mut keys: Vec<&Rational> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let x = a.get(k).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(k).cloned().unwrap_or_else(Rational::zero);
            if x != y {
                let value = 2.0 * PI * rat_to_f64(k).sqrt();
                return Some(format!("at |λ| = {value} (‖ξ‖² = {k}): weighted counts {x} vs {y}"));
            }
        }
        None
    }

    /// CSV: a `# {json}` metadata line, then `value,multiplicity,weight_num,weight_den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# ");
        out.push_str(&serde_json::to_string(&self.meta).expect("metadata serializes"));
        out.push('\n');
        out.push_str("value,multiplicity,weight_num,weight_den\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.value, r.multiplicity, r.weight.numer(), r.weight.denom()));
        }
        out
    }
}

/// `(Λ/2π)²` as an exact rational, the cutoff on `‖ξ‖²`.
pub fn cutoff_radius_sq(cutoff: f64) -> Rational {
    let r = cutoff / (2.0 * PI);
    Rational::from_float(r * r).unwrap_or_else(Rational::zero)
}

/// Spinor dimension `2^{⌊p/2⌋}` of the torus triple.
pub fn spinor_dim(p: usize) -> u64 {
    1u64 << (p / 2)
}

fn lattice_record(key: Rational, points: u64, p: usize, weight: &Rational) -> SpectrumRecord {
    SpectrumRecord {
        value: 2.0 * PI * rat_to_f64(&key).sqrt(),
        signed: !key.is_zero(),
        key: Some(key),
        multiplicity: points * spinor_dim(p),
        weight: weight.clone(),
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff.is_finite() && cutoff > 0.0 {
        Ok(())
    } else {
        Err(Error::precondition(format!("cutoff must be positive, got {cutoff}")))
    }
}

/// Spectrum of `D = −iΣεᵃ∂ₐ` on `ℝᵖ/Aⁿℤᵖ` up to `|λ| ≤ Λ`.
///
/// Each `ξ ∈ Aⁿℤᵖ` contributes `2^{⌊p/2⌋}` eigenvalues of modulus `2π‖ξ‖`,
/// half of each sign when `p ≥ 2`; for `p = 1` this is the single signed
/// eigenvalue `2πξ`. Weight `r⁻ⁿ`.
pub fn torus_spectrum(cov: &Covering, n: u32, cutoff: f64) -> Result<SpectrumMultiset> {
    check_cutoff(cutoff)?;
    let p = cov.dim();
    let weight = level_weight(cov.order(), n);
    let scan = cov.lattice(n).scan(&cutoff_radius_sq(cutoff));
    let mut shells: BTreeMap<BigInt, u64> = BTreeMap::new();
    for (_, key) in scan.points {
        *shells.entry(key).or_default() += 1;
    }
    let records = shells
        .into_iter()
        .map(|(key, count)| lattice_record(Rational::new(key, scan.denom_sq.clone()), count, p, &weight))
        .collect();
    Ok(SpectrumMultiset::new(
        SpectrumMeta { model: "torus".into(), matrix: Some(cov.b().to_string()), level: n, cutoff },
        records,
    ))
}

/// Spectrum of `D̂_n = D₀⊗I + C_n` built block by block.
///
/// For every class tuple `(k₁,…,k_n)` and `m ∈ ℤᵖ` the block
/// `2πΣεᵃ(m − Σ_h s_h(k_h))ₐ` has eigenvalues `±2π‖m − Σ_h s_h(k_h)‖`. The
/// result is compared with [`torus_spectrum`]; a mismatch is an invariant
/// violation.
pub fn assembled_cover_spectrum(cov: &Covering, n: u32, cutoff: f64) -> Result<SpectrumMultiset> {
    check_cutoff(cutoff)?;
    let p = cov.dim();
    let r = cov.order();
    let weight = level_weight(r, n);
    let radius_sq = cutoff_radius_sq(cutoff);
    let radius = sqrt_upper(&radius_sq);
    let sections: Vec<Vec<Vec<Rational>>> = (1..=n).map(|h| cov.section(h).values).collect();
    let mut shells: BTreeMap<Rational, u64> = BTreeMap::new();
    let tuples = r.checked_pow(n).ok_or_else(|| Error::precondition("too many class tuples"))?;
    for t in 0..tuples {
        let mut shift = vec![Rational::zero(); p];
        let mut rest = t;
        for section in &sections {
            let k = rest % r;
            rest /= r;
            shift = intlat::vec_add(&shift, &section[k]);
        }
        // integer form: ‖D·m − D·c‖² ≤ D²R² with D a common denominator
        let den = shift.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let c: Vec<BigInt> = shift.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect();
        let den_sq = &den * &den;
        let limit = &radius_sq * Rational::from_integer(den_sq.clone());
        let lo: Vec<i64> = shift.iter().map(|x| (x - &radius).ceil().to_integer().to_i64().unwrap()).collect();
        let hi: Vec<i64> = shift.iter().map(|x| (x + &radius).floor().to_integer().to_i64().unwrap()).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            continue;
        }
        let mut m = lo.clone();
        loop {
            let mut s = BigInt::zero();
            for i in 0..p {
                let d = &den * BigInt::from(m[i]) - &c[i];
                s += &d * &d;
            }
            if Rational::from_integer(s.clone()) <= limit {
                *shells.entry(Rational::new(s, den_sq.clone())).or_default() += 1;
            }
            let mut i = p;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if m[i] < hi[i] {
                    m[i] += 1;
                    done = false;
                    break;
                }
                m[i] = lo[i];
            }
            if done {
                break;
            }
        }
    }
    let records = shells.into_iter().map(|(key, count)| lattice_record(key, count, p, &weight)).collect();
    let assembled = SpectrumMultiset::new(
        SpectrumMeta { model: "assembled".into(), matrix: Some(cov.b().to_string()), level: n, cutoff },
        records,
    );
    let direct = torus_spectrum(cov, n, cutoff)?;
    if let Some(diff) = assembled.difference(&direct) {
        return Err(Error::invariant(format!("assembled spectrum differs from the lattice spectrum {diff}")));
    }
    Ok(assembled)
}

/// Norm of the bounded part `C_n` and the geometric bound on it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CnNorm {
    pub n: u32,
    /// `2π·max ‖Σ_h s_h(k_h)‖`.
    pub exact_norm: f64,
    /// `max ‖Σ_h s_h(k_h)‖²`, exact.
    #[serde(serialize_with = "intlat::serialize_rational")]
    pub exact_sq: Rational,
    /// `2π√p Σ_{h=1}^n ‖A^{h−1}‖_F`.
    pub series_bound: f64,
    /// `2π√p ‖Aⁿ‖_F`, the allowed growth to level `n+1`.
    pub step_bound: f64,
    pub within_bound: bool,
}

fn cross(o: &[Rational], a: &[Rational], b: &[Rational]) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Vertices of the convex hull of a planar point set, exact.
fn hull_2d(mut pts: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec<Rational>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<Rational>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Reduces a point set to candidates for the maximum of a convex function.
fn prune(pts: Vec<Vec<Rational>>, p: usize) -> Result<Vec<Vec<Rational>>> {
    match p {
        1 => {
            let lo = pts.iter().min().cloned();
            let hi = pts.iter().max().cloned();
            let mut out: Vec<_> = lo.into_iter().chain(hi).collect();
            out.dedup();
            Ok(out)
        }
        2 => Ok(hull_2d(pts)),
        _ => {
            let mut pts = pts;
            pts.sort();
            pts.dedup();
            if pts.len() > 1 << 20 {
                return Err(Error::precondition("too many section sums to enumerate"));
            }
            Ok(pts)
        }
    }
}

/// `‖C_n‖` for `n = 1..=n_max`.
///
/// The maximum of `‖Σ_h s_h(k_h)‖` over all tuples is attained at a vertex of
/// the Minkowski sum of the section sets, so the sum is pruned to its hull
/// after each level (exactly in dimensions 1 and 2, by deduplication above).
pub fn cn_norms(cov: &Covering, n_max: u32) -> Result<Vec<CnNorm>> {
    let p = cov.dim();
    let mut sums = vec![vec![Rational::zero(); p]];
    let mut out = Vec::new();
    let mut bound = 0.0;
    let sqrt_p = (p as f64).sqrt();
    for n in 1..=n_max {
        let section = cov.section(n);
        let mut next = Vec::with_capacity(sums.len() * section.values.len());
        for s in &sums {
            for v in &section.values {
                next.push(intlat::vec_add(s, v));
            }
        }
        sums = prune(next, p)?;
        let exact_sq = sums.iter().map(|s| norm_sq(s)).max().unwrap();
        let frob = |k: u32| rat_to_f64(&cov.a_pow(k).frobenius_sq()).sqrt();
        bound += 2.0 * PI * sqrt_p * frob(n - 1);
        let exact_norm = 2.0 * PI * rat_to_f64(&exact_sq).sqrt();
        out.push(CnNorm {
            n,
            exact_norm,
            exact_sq,
            series_bound: bound,
            step_bound: 2.0 * PI * sqrt_p * frob(n),
            within_bound: exact_norm <= bound * (1.0 + 1e-12),
        });
    }
    Ok(out)
}

/// `‖C_n‖` at a single level.
pub fn cn_norm(cov: &Covering, n: u32) -> Result<CnNorm> {
    if n == 0 {
        return Err(Error::precondition("C_n is defined for n ≥ 1"));
    }
    Ok(cn_norms(cov, n)?.pop().unwrap())
}

/// Spectrum of `D⊗ε₁ + I⊗M_ℓ` on the crossed product by `Aⁿℤᵖ`.
///
/// Every base eigenvector paired with `g` gives `2^{⌈p/2⌉}` eigenvalues
/// `±√(λ² + ‖g‖²)`; weight `r⁻ⁿ`.
pub fn crossed_spectrum(base: &SpectrumMultiset, cov: &Covering, n: u32, cutoff: f64) -> Result<SpectrumMultiset> {
    check_cutoff(cutoff)?;
    let p = cov.dim();
    let weight = level_weight(cov.order(), n);
    let cliff = 1u64 << p.div_ceil(2);
    let radius_sq = Rational::from_float(cutoff * cutoff).unwrap();
    let scan = cov.lattice(n).scan(&radius_sq);
    let mut shells: BTreeMap<BigInt, u64> = BTreeMap::new();
    for (_, key) in scan.points {
        *shells.entry(key).or_default() += 1;
    }
    let shells: Vec<(Rational, f64, u64)> = shells
        .into_iter()
        .map(|(k, c)| {
            let q = Rational::new(k, scan.denom_sq.clone());
            let f = rat_to_f64(&q);
            (q, f, c)
        })
        .collect();
    let mut records = Vec::new();
    for rec in &base.records {
        let lam_sq = rec.value * rec.value;
        if lam_sq > cutoff * cutoff {
            break;
        }
        for (g_sq, g_f, count) in &shells {
            let total = lam_sq + g_f;
            if total > cutoff * cutoff {
                break;
            }
            let key = (rec.value == 0.0).then(|| g_sq.clone());
            records.push(SpectrumRecord {
                value: total.sqrt(),
                key,
                signed: true,
                multiplicity: rec.multiplicity * count * cliff,
                weight: &rec.weight * &weight,
            });
        }
    }
    Ok(SpectrumMultiset::new(
        SpectrumMeta { model: format!("crossed({})", base.meta.model), matrix: Some(cov.b().to_string()), level: n, cutoff },
        records,
    ))
}

/// The type-I spectrum `{2πk : k ∈ ℤ}` of `−i d/dt` on the circle.
pub fn circle_spectrum(cutoff: f64) -> Result<SpectrumMultiset> {
    let cov = Covering::new(&IntMatrix::from_i64(1, &[2]))?;
    let mut s = torus_spectrum(&cov, 0, cutoff)?;
    s.meta.model = "circle".into();
    s.meta.matrix = None;
    Ok(s)
}

/// UHF(r^∞) with `D₀ = Σ_{k≥0} r^{ks}Q_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhfModel {
    pub r: u64,
    #[serde(serialize_with = "intlat::serialize_rational")]
    pub s: Rational,
}

/// Closed-form residue `(r² − 1)/(s·ln r)` of `t ↦ τ(|D_n|^{−t})` at `t = 2/s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhfResidue {
    /// Numerator `r² − 1`, the same at every level.
    #[serde(serialize_with = "intlat::serialize_rational")]
    pub coefficient: Rational,
    pub r: u64,
    #[serde(serialize_with = "intlat::serialize_rational")]
    pub s: Rational,
    pub value: f64,
}

impl UhfModel {
    pub fn new(r: u64, s: Rational) -> Result<Self> {
        if r < 2 {
            return Err(Error::precondition(format!("UHF needs r ≥ 2, got {r}")));
        }
        if !s.is_positive() {
            return Err(Error::precondition(format!("UHF needs s > 0, got {s}")));
        }
        Ok(UhfModel { r, s })
    }

    pub fn s_f64(&self) -> f64 {
        rat_to_f64(&self.s)
    }

    /// `r^{ks}`.
    pub fn eigenvalue(&self, k: i64) -> f64 {
        (self.r as f64).powf(k as f64 * self.s_f64())
    }

    fn r_pow(&self, e: i64) -> Rational {
        let base = Rational::from_integer(BigInt::from(self.r));
        if e >= 0 {
            num_traits::pow(base, e as usize)
        } else {
            num_traits::pow(base.recip(), (-e) as usize)
        }
    }

    /// `w_k = (1 − r⁻²)r^{2(k+1)}`.
    pub fn weight(&self, k: i64) -> Rational {
        (Rational::one() - self.r_pow(-2)) * self.r_pow(2 * (k + 1))
    }

    /// Weight `r^{−2n}` of the kernel at level `n`.
    pub fn kernel_weight(&self, n: u32) -> Rational {
        self.r_pow(-2 * n as i64)
    }

    /// `2/s`: the weights grow by `r²` per step while the eigenvalues grow by `r^s`.
    pub fn abscissa(&self) -> Rational {
        let growth = self.weight(1) / self.weight(0);
        debug_assert_eq!(growth, self.r_pow(2));
        Rational::from_integer(BigInt::from(2)) / &self.s
    }

    /// `Σ_{k≥−n} w_k r^{−kst}` for `t > 2/s`, the zero mode left out.
    pub fn zeta_closed_form(&self, n: u32, t: f64) -> f64 {
        let r = self.r as f64;
        let e = 2.0 - self.s_f64() * t;
        assert!(e < 0.0, "the series diverges for t ≤ 2/s");
        (r * r - 1.0) * r.powf(-(n as f64) * e) / (1.0 - r.powf(e))
    }

    /// Residue at the abscissa: `(r² − 1)r^{−n(2−st)}/(1 − r^{2−st})` times
    /// `t − 2/s` tends to `(r² − 1)/(s ln r)`; the level only enters through
    /// `r^{−n(2−st)} → 1`.
    pub fn residue(&self, n: u32) -> UhfResidue {
        let _ = n;
        let coefficient = self.r_pow(2) - Rational::one();
        let value = rat_to_f64(&coefficient) / (self.s_f64() * (self.r as f64).ln());
        UhfResidue { coefficient, r: self.r, s: self.s.clone(), value }
    }

    /// Spectrum of `D_n` with eigenvalue levels `k = −n..=K`.
    ///
    /// Multiplicities are the ranks of `Q_k` on positions `−n..=K`, weights
    /// `r^{−2n}` (normalized trace on the first `n` factors), so each line has
    /// mass `w_k`; the kernel has mass `r^{−2n}`.
    pub fn spectrum(&self, n: u32, k_max: u32) -> Result<SpectrumMultiset> {
        let w = self.kernel_weight(n);
        let mut records = vec![SpectrumRecord { value: 0.0, key: Some(Rational::zero()), signed: false, multiplicity: 1, weight: w.clone() }];
        let r2 = self.r * self.r;
        for k in -(n as i64)..=k_max as i64 {
            let e = (k + n as i64) as u32;
            let rank = r2
                .checked_pow(e + 1)
                .map(|hi| hi - r2.pow(e))
                .ok_or_else(|| Error::precondition("UHF truncation too large"))?;
            let key = if self.s.is_integer() { Some(self.r_pow(k * self.s.to_integer().to_i64().unwrap())) } else { None };
            records.push(SpectrumRecord {
                value: self.eigenvalue(k),
                key: key.map(|x| &x * &x),
                signed: false,
                multiplicity: rank,
                weight: w.clone(),
            });
        }
        Ok(SpectrumMultiset::new(
            SpectrumMeta {
                model: format!("uhf(r={},s={})", self.r, self.s),
                matrix: None,
                level: n,
                cutoff: self.eigenvalue(k_max as i64),
            },
            records,
        ))
    }
}

fn expectation_block(r: usize) -> DMatrix<f64> {
    let d = r * r;
    let mut e = DMatrix::zeros(d, d);
    for k in 0..r {
        for i in 0..r {
            e[(k * r + k, i * r + i)] = 1.0 / r as f64;
        }
    }
    e
}

fn kron_all(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

/// `Q_t = I^{⊗t} ⊗ F ⊗ E^{⊗(T−1−t)}` on `T` factors of `M_r` (matrix-unit basis).
pub fn uhf_q(r: usize, factors: usize, t: usize) -> DMatrix<f64> {
    let e = expectation_block(r);
    let f = DMatrix::identity(r * r, r * r) - &e;
    let mut parts = Vec::with_capacity(factors);
    for u in 0..factors {
        parts.push(match u.cmp(&t) {
            std::cmp::Ordering::Less => DMatrix::identity(r * r, r * r),
            std::cmp::Ordering::Equal => f.clone(),
            std::cmp::Ordering::Greater => e.clone(),
        });
    }
    kron_all(&parts)
}

/// Explicit `D_n` on positions `−n..=K`, assembled as
/// `I^{⊗n}⊗D₀ + Σ_{h=1}^n r^{−sh} I^{⊗(n−h)}⊗F⊗E`.
pub fn uhf_dirac_matrix(model: &UhfModel, n: u32, k_max: u32) -> DMatrix<f64> {
    let r = model.r as usize;
    let n = n as usize;
    let base_factors = k_max as usize + 1;
    let total = n + base_factors;
    let mut d0 = DMatrix::zeros((r * r).pow(base_factors as u32), (r * r).pow(base_factors as u32));
    for t in 0..base_factors {
        d0 += uhf_q(r, base_factors, t) * model.eigenvalue(t as i64);
    }
    let mut d = DMatrix::identity((r * r).pow(n as u32), (r * r).pow(n as u32)).kronecker(&d0);
    for h in 1..=n {
        d += uhf_q(r, total, n - h) * model.eigenvalue(-(h as i64));
    }
    d
}

/// Checks the closed-form weights against the eigenvalues of the explicit
/// tensor matrix. Returns the first discrepancy.
pub fn uhf_weight_oracle(model: &UhfModel, n: u32, k_max: u32) -> Result<()> {
    let d = uhf_dirac_matrix(model, n, k_max);
    let eig = d.symmetric_eigenvalues();
    let spec = model.spectrum(n, k_max)?;
    let scale = model.kernel_weight(n);
    for rec in &spec.records {
        let tol = 1e-9 * rec.value.max(1.0);
        let count = eig.iter().filter(|&&x| (x - rec.value).abs() <= tol).count() as u64;
        let mass = Rational::from_integer(BigInt::from(count)) * &scale;
        if mass != rec.mass() {
            return Err(Error::invariant(format!("UHF line {} has tensor mass {} but closed form {}", rec.value, mass, rec.mass())));
        }
    }
    let total: u64 = spec.count();
    if total != eig.len() as u64 {
        return Err(Error::invariant(format!("UHF truncation has {} eigenvalues, closed form {}", eig.len(), total)));
    }
    Ok(())
}

/// Operator norm of a complex matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `min_λ ‖b − λ‖`, the norm of `b` in `M_r/ℂ1`.
pub fn quotient_norm(b: &DMatrix<Complex64>) -> f64 {
    let n = b.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let f = |x: f64, y: f64| operator_norm(&(b - &id * Complex64::new(x, y)));
    let bound = operator_norm(b);
    // f is convex in (x, y), so nested golden-section search converges
    let inner = |x: f64| golden_min(|y| f(x, y), -bound, bound).1;
    golden_min(inner, -bound, bound).1
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

/// Commutator `[D, x_n]` for `x_n = b` placed at position `−n`, with bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhfCommutator {
    pub n: u32,
    /// Number of factors in the truncation, positions `−n−depth+1..=−n`.
    pub depth: u32,
    pub exact: f64,
    /// `r^{−ns}‖τ(bb*) − bτ(b*)‖₂/‖b‖₂`, from testing against `x_n*`.
    pub lower: f64,
    /// `2‖b‖ Σ_{k≤−n} r^{ks} = 2‖b‖r^{−ns}/(1 − r^{−s})`.
    pub upper: f64,
    /// The same bound summed only over the truncated positions.
    pub upper_truncated: f64,
    /// `2‖b‖r^{s−ns}/(1 − r^s)`, the bound with the geometric ratio inverted; negative for `r, s > 1`.
    pub flipped_upper: f64,
    pub holds: bool,
}

/// `‖[Σ_k r^{ks}Q_k, x_n]‖` on a `depth`-factor truncation ending at position `−n`.
///
/// Positions right of `−n` can be dropped: `x_n` commutes with every `P_k`,
/// `k ≥ −n`, and the commutator acts on them through the rank-one projection
/// onto `1`.
pub fn uhf_commutator(model: &UhfModel, b: &DMatrix<Complex64>, n: u32, depth: u32) -> Result<UhfCommutator> {
    let r = model.r as usize;
    if b.nrows() != r || b.ncols() != r {
        return Err(Error::precondition(format!("b must be {r}×{r}")));
    }
    if depth == 0 {
        return Err(Error::precondition("truncation depth must be at least 1"));
    }
    let t = depth as usize;
    let dim = (r * r).pow(depth);
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for u in 0..t {
        let position = -(n as i64) - (t - 1 - u) as i64;
        d += uhf_q(r, t, u) * model.eigenvalue(position);
    }
    let d = d.map(|x| Complex64::new(x, 0.0));
    let lb = b.kronecker(&DMatrix::<Complex64>::identity(r, r));
    let x = DMatrix::<Complex64>::identity(dim / (r * r), dim / (r * r)).kronecker(&lb);
    let comm = &d * &x - &x * &d;
    let exact = operator_norm(&comm);

    // lower bound from the vector x_n*
    let tr = |m: &DMatrix<Complex64>| m.trace() / Complex64::new(r as f64, 0.0);
    let bs = b.adjoint();
    let id = DMatrix::<Complex64>::identity(r, r);
    let v = &id * tr(&(b * &bs)) - b * tr(&bs);
    let l2 = |m: &DMatrix<Complex64>| tr(&(m.adjoint() * m)).re.max(0.0).sqrt();
    let decay = model.eigenvalue(-(n as i64));
    let lower = decay * l2(&v) / l2(b);

    let bn = operator_norm(b);
    let rs = model.eigenvalue(1);
    let upper = 2.0 * bn * decay / (1.0 - 1.0 / rs);
    let upper_truncated = 2.0 * bn * (0..t).map(|u| model.eigenvalue(-(n as i64) - u as i64)).sum::<f64>();
    let flipped_upper = 2.0 * bn * rs * decay / (1.0 - rs);
    let slack = 1e-9 * upper.max(1.0);
    Ok(UhfCommutator {
        n,
        depth,
        exact,
        lower,
        upper,
        upper_truncated,
        flipped_upper,
        holds: lower <= exact + slack && exact <= upper_truncated + slack && upper_truncated <= upper + slack,
    })
}

/// A monomial whose commutator with the Dirac operator is measured.
#[derive(Clone, Debug)]
pub enum Monomial {
    /// `e^{2πi⟨ξ,t⟩}` on the torus.
    Torus { xi: Vec<Rational> },
    /// `U_g` in the crossed product at a given level.
    Crossed { cov: Covering, level: u32, g: Vec<Rational> },
    /// `b` at position `−n` in the UHF algebra.
    Uhf { model: UhfModel, b: DMatrix<Complex64>, n: u32, depth: u32 },
}

/// `L(x) = ‖[D, x]‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipNorm {
    pub value: f64,
    /// `‖ξ‖²` (torus, value `2π‖ξ‖`) or `‖g‖²` (crossed, value `‖g‖`).
    #[serde(serialize_with = "ser_opt_rat")]
    pub exact_sq: Option<Rational>,
    pub uhf: Option<UhfCommutator>,
}

/// Commutator norm of a monomial.
///
/// Torus and crossed cases are exact through `‖Σεᵃvₐ‖ = ‖v‖`. In the crossed
/// case the level-`m` operator is `D₀⊗I + Ĉ_m` with
/// `Ĉ_m = Σ_h ℓ(s_h(j_h))`, so `[D, U_g]δ_h = (ℓ̂(h+g) − ℓ̂(h))U_gδ_h` where
/// `ℓ̂` is read off the mode decomposition of each frequency; the maximum over
/// a window of `h` is returned.
pub fn commutator_lipnorm(x: &Monomial) -> Result<LipNorm> {
    match x {
        Monomial::Torus { xi } => {
            let sq = norm_sq(xi);
            Ok(LipNorm { value: 2.0 * PI * rat_to_f64(&sq).sqrt(), exact_sq: Some(sq), uhf: None })
        }
        Monomial::Crossed { cov, level, g } => {
            if !cov.in_level(g, *level) {
                return Err(Error::NotLevelFrequency { level: *level as usize });
            }
            let assembled = |h: &[Rational]| -> Result<Vec<Rational>> {
                let mode = cov.mode_inv(h, *level)?;
                let mut v = to_rational_vec(&mode.m);
                for (i, &k) in mode.classes.iter().enumerate() {
                    v = intlat::vec_add(&v, &cov.section(i as u32 + 1).values[k]);
                }
                Ok(v)
            };
            if g.iter().all(|x| x.is_zero()) {
                return Ok(LipNorm { value: 0.0, exact_sq: Some(Rational::zero()), uhf: None });
            }
            // a window of radius 2‖g‖ around the origin, sized to the level lattice
            let radius = norm_sq(g) * Rational::from_integer(4.into());
            let mut best: Option<Rational> = None;
            for pt in cov.enumerate_ball(*level, &radius) {
                let moved = intlat::vec_add(&pt.xi, g);
                let diff = intlat::vec_sub(&assembled(&moved)?, &assembled(&pt.xi)?);
                let sq = norm_sq(&diff);
                if best.as_ref().map_or(true, |b| &sq > b) {
                    best = Some(sq);
                }
            }
            let sq = best.unwrap_or_else(Rational::zero);
            Ok(LipNorm { value: rat_to_f64(&sq).sqrt(), exact_sq: Some(sq), uhf: None })
        }
        Monomial::Uhf { model, b, n, depth } => {
            let c = uhf_commutator(model, b, *n, *depth)?;
            Ok(LipNorm { value: c.exact, exact_sq: None, uhf: Some(c) })
        }
    }
}

/// Which tower the radii table is computed on.
#[derive(Clone, Debug)]
pub enum RadiiModel {
    Torus(IntMatrix),
    Crossed(IntMatrix),
    NcTorus(IntMatrix, RationalAngle),
    Uhf { model: UhfModel, b: DMatrix<Complex64>, depth: u32 },
}

/// One row: `x_k`, its seminorm and the quotient norm of `y_k = x_k/L(x_k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiiRow {
    pub k: u32,
    pub seminorm: f64,
    pub quotient_norm: f64,
    /// Quotient norm without the `1/(2π)` factor (torus models) when it is rational.
    #[serde(serialize_with = "ser_opt_rat")]
    pub quotient_exact: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiiTable {
    pub model: String,
    pub rows: Vec<RadiiRow>,
    pub strictly_increasing: bool,
    pub warning: Option<String>,
}

fn unit_vector(p: usize) -> Vec<Rational> {
    let mut e = vec![Rational::zero(); p];
    e[0] = Rational::one();
    e
}

/// The quotient norms of the normalized sequence `y_k`.
///
/// Torus: `x_k = e^{2πi⟨Aᵏe₁,t⟩}`; crossed: `x_k = U_{Aᵏe₁}`; rotation algebra:
/// `x_k = φ_k(U)`; UHF: `x_k = b` at position `−k`. A unitary with full
/// spectrum has quotient norm `1`, so the torus rows read `1/L(x_k)`.
pub fn radii_divergence(model: &RadiiModel, k_max: u32) -> Result<RadiiTable> {
    let mut rows = Vec::new();
    let mut warning = None;
    let expanding_warning = |b: &IntMatrix| -> Result<Option<String>> {
        let rep = intlat::purely_expanding(b)?;
        Ok((!rep.purely_expanding).then(|| "matrix is not purely expanding; the radii need not diverge".to_string()))
    };
    let name;
    match model {
        RadiiModel::Torus(b) | RadiiModel::Crossed(b) => {
            let crossed = matches!(model, RadiiModel::Crossed(_));
            name = format!("{}({})", if crossed { "crossed" } else { "torus" }, b);
            warning = expanding_warning(b)?;
            let cov = Covering::new(b)?;
            let e1 = unit_vector(cov.dim());
            for k in 0..=k_max {
                let xi = cov.a_pow(k).mul_vec(&e1);
                let lip = if crossed {
                    commutator_lipnorm(&Monomial::Crossed { cov: cov.clone(), level: k, g: xi })?
                } else {
                    commutator_lipnorm(&Monomial::Torus { xi })?
                };
                let sq = lip.exact_sq.clone().unwrap();
                rows.push(RadiiRow {
                    k,
                    seminorm: lip.value,
                    quotient_norm: 1.0 / lip.value,
                    quotient_exact: exact_sqrt(&sq.recip()),
                });
            }
        }
        RadiiModel::NcTorus(b, theta) => {
            name = format!("nctorus({}, θ={})", b, theta);
            warning = expanding_warning(b)?;
            let torus = NcTorus::new(theta.clone());
            for k in 0..=k_max {
                let x = if k == 0 { torus.u() } else { NcCovering::new(theta.clone(), &b.pow(k))?.generators().0 };
                let seminorm = torus.lip_seminorm_monomial(&x);
                let sq = monomial_freq_sq(&x, theta);
                rows.push(RadiiRow { k, seminorm, quotient_norm: 1.0 / seminorm, quotient_exact: exact_sqrt(&sq.recip()) });
            }
        }
        RadiiModel::Uhf { model: m, b, depth } => {
            name = format!("uhf(r={},s={})", m.r, m.s);
            let q = quotient_norm(b);
            if q < 1e-12 {
                return Err(Error::precondition("b must not be a scalar matrix"));
            }
            for k in 0..=k_max {
                let c = uhf_commutator(m, b, k, *depth)?;
                if !c.holds {
                    return Err(Error::invariant(format!("UHF commutator bounds fail at n = {k}")));
                }
                rows.push(RadiiRow { k, seminorm: c.exact, quotient_norm: q / c.exact, quotient_exact: None });
            }
        }
    }
    let strictly_increasing = rows.windows(2).all(|w| w[1].quotient_norm > w[0].quotient_norm);
    Ok(RadiiTable { model: name, rows, strictly_increasing, warning })
}

/// `‖freq/θ‖²` of a Weyl monomial (`‖freq‖²` when `θ = 0`).
fn monomial_freq_sq(x: &WeylMonomial, theta: &RationalAngle) -> Rational {
    if theta.p == 0 {
        norm_sq(&x.freq)
    } else {
        let t = theta.value();
        norm_sq(&x.freq.iter().map(|f| f / &t).collect::<Vec<_>>())
    }
}

/// Outcome of comparing `L(φ_n(W(m)))` with `L(W(m))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipScaling {
    pub m: [i64; 2],
    pub n: u32,
    /// `L(φ_n(W(m)))²/L(W(m))²`, exact; `None` when `m = 0`.
    #[serde(serialize_with = "ser_opt_rat")]
    pub ratio_sq: Option<Rational>,
    /// `‖Aⁿm‖²/‖m‖²` from the matrix alone.
    #[serde(serialize_with = "ser_opt_rat")]
    pub expected_sq: Option<Rational>,
    pub base: f64,
    pub scaled: f64,
    pub holds: bool,
}

/// Builds `φ_n(W(m)) = U_{Bⁿ}^{m₁}V_{Bⁿ}^{m₂}` from the level-`n` generators and
/// compares its seminorm with that of `W(m)`. For `B = 2I` the ratio is `2⁻ⁿ`.
pub fn lip_scaling_check(theta: &RationalAngle, b: &IntMatrix, m: [i64; 2], n: u32) -> Result<LipScaling> {
    let torus = NcTorus::new(theta.clone());
    let base = torus.weyl(m);
    let image = if n == 0 {
        base.clone()
    } else {
        let (u, v) = NcCovering::new(theta.clone(), &b.pow(n))?.generators();
        u.pow(m[0]).mul(&v.pow(m[1]))
    };
    let l0 = torus.lip_seminorm_monomial(&base);
    let ln = torus.lip_seminorm_monomial(&image);
    let s0 = monomial_freq_sq(&base, theta);
    let sn = monomial_freq_sq(&image, theta);
    let mv = intlat::int_vec(&m);
    let expected_sq = if s0.is_zero() {
        None
    } else {
        Some(norm_sq(&Covering::new(b)?.a_pow(n).mul_vec(&mv)) / norm_sq(&mv))
    };
    let ratio_sq = (!s0.is_zero()).then(|| &sn / &s0);
    let holds = if s0.is_zero() { sn.is_zero() } else { ratio_sq == expected_sq };
    Ok(LipScaling { m, n, ratio_sq, expected_sq, base: l0, scaled: ln, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlat::rat;

    fn cov(text: &str) -> Covering {
        Covering::new(&IntMatrix::parse(text).unwrap()).unwrap()
    }

    fn dense(c: &CliffordGens, x: &[f64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(c.size, c.size);
        for (a, xa) in x.iter().enumerate() {
            m += c.to_dense(a) * Complex64::new(*xa, 0.0);
        }
        m
    }

    #[test]
    fn clifford_small_cases() {
        let c2 = clifford_generators(2);
        assert_eq!(c2.size, 2);
        let i = Complex::new(0, 1);
        let one = Complex::new(1, 0);
        let zero = Complex::new(0, 0);
        assert_eq!(c2.gens[0], vec![zero, one, one, zero]);
        assert_eq!(c2.gens[1], vec![zero, -i, i, zero]);
        let c3 = clifford_generators(3);
        assert_eq!(c3.gens[2], vec![one, zero, zero, -one]);
        for count in 1..=7 {
            let c = clifford_generators(count);
            assert_eq!(c.size, 1 << (count / 2));
            assert!(c.verify(), "count {count}");
        }
        assert_eq!(clifford_generators(5).size, 4);
    }

    #[test]
    fn clifford_eigenvalue_law() {
        let c = clifford_generators(4);
        assert!(c.eigenvalue_law(&[rat(1, 2), rat(-3, 7), rat(2, 1), rat(0, 1)]));
        let c = clifford_generators(3);
        assert!(c.eigenvalue_law(&[rat(1, 1), rat(2, 1), rat(2, 1)]));
        assert!(clifford_generators(1).eigenvalue_law(&[rat(-5, 3)]));
    }

    #[test]
    fn torus_small_spectrum_against_dense_blocks() {
        let c = cov("2,0;0,2");
        let spec = torus_spectrum(&c, 0, 7.0).unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(spec.records[0].multiplicity, 2);
        assert_eq!(spec.records[1].multiplicity, 8);
        assert!((spec.records[1].value - 2.0 * PI).abs() < 1e-12);
        // dense oracle: 2π(ε¹m₁ + ε²m₂) for each mode in the ball
        let gens = clifford_generators(2);
        let mut eig = Vec::new();
        for m1 in -2i32..=2 {
            for m2 in -2i32..=2 {
                let m = dense(&gens, &[2.0 * PI * m1 as f64, 2.0 * PI * m2 as f64]);
                for v in m.symmetric_eigen().eigenvalues.iter() {
                    if v.abs() <= 7.0 {
                        eig.push(*v);
                    }
                }
            }
        }
        assert_eq!(eig.len() as u64, spec.count());
        assert_eq!(eig.iter().filter(|v| **v > 1.0).count(), 4);
        // 3-4-5 mode
        let m = dense(&gens, &[2.0 * PI * 3.0, 2.0 * PI * 4.0]);
        let ev = m.symmetric_eigen().eigenvalues;
        assert!(ev.iter().all(|v| (v.abs() - 10.0 * PI).abs() < 1e-9));
    }

    #[test]
    fn circle_cover_spectrum() {
        let c = cov("2");
        let spec = torus_spectrum(&c, 1, 4.0 * PI).unwrap();
        let values: Vec<f64> = spec.records.iter().map(|r| r.value / PI).collect();
        assert_eq!(values.len(), 5);
        for (v, e) in values.iter().zip([0.0, 1.0, 2.0, 3.0, 4.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        assert_eq!(spec.count(), 9);
        assert_eq!(spec.records[1].weight, rat(1, 2));
        let assembled = assembled_cover_spectrum(&c, 1, 4.0 * PI).unwrap();
        assert!(assembled.difference(&spec).is_none());
    }

    #[test]
    fn assembled_matches_lattice() {
        for b in ["2,0;0,2", "1,-1;1,1", "2,1;0,2"] {
            let c = cov(b);
            for n in 0..=2 {
                assembled_cover_spectrum(&c, n, 20.0).unwrap();
            }
        }
    }

    #[test]
    fn assembled_detects_a_wrong_multiset() {
        let c = cov("2,0;0,2");
        let mut a = torus_spectrum(&c, 1, 20.0).unwrap();
        let b = a.clone();
        a.records[3].multiplicity += 1;
        assert!(a.difference(&b).is_some());
    }

    #[test]
    fn cn_norm_examples() {
        let c = cov("2,0;0,2");
        let first = cn_norm(&c, 1).unwrap();
        assert_eq!(first.exact_sq, rat(1, 2));
        assert!((first.exact_norm - PI * 2f64.sqrt()).abs() < 1e-12);
        let seq = cn_norms(&c, 12).unwrap();
        for (i, s) in seq.iter().enumerate() {
            let expect = 2.0 * PI * 2f64.sqrt() * (1.0 - 0.5f64.powi(i as i32 + 1));
            assert!((s.exact_norm - expect).abs() < 1e-12);
            assert!(s.within_bound);
        }
        // brute force over all tuples at a small level
        let c = cov("1,-1;1,1");
        let seq = cn_norms(&c, 4).unwrap();
        let mut best = Rational::zero();
        for t in 0..16usize {
            let mut s = vec![Rational::zero(); 2];
            for h in 0..4 {
                s = intlat::vec_add(&s, &c.section(h as u32 + 1).values[(t >> h) & 1]);
            }
            best = best.max(norm_sq(&s));
        }
        assert_eq!(seq[3].exact_sq, best);
    }

    #[test]
    fn crossed_trivial_base() {
        let base = SpectrumMultiset::new(
            SpectrumMeta { model: "point".into(), matrix: None, level: 0, cutoff: 0.0 },
            vec![SpectrumRecord { value: 0.0, key: Some(Rational::zero()), signed: false, multiplicity: 1, weight: Rational::one() }],
        );
        let spec = crossed_spectrum(&base, &cov("2"), 0, 3.0).unwrap();
        let values: Vec<f64> = spec.records.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.0, 1.0, 2.0, 3.0]);
        let mults: Vec<u64> = spec.records.iter().map(|r| r.multiplicity).collect();
        assert_eq!(mults, vec![2, 4, 4, 4]);
    }

    #[test]
    fn crossed_circle_against_matrix_model() {
        let base = circle_spectrum(2.0 * PI * 2.0 + 0.1).unwrap();
        let cutoff = 8.0;
        let spec = crossed_spectrum(&base, &cov("2"), 0, cutoff).unwrap();
        // D⊗ε₁ + I⊗M_ℓ on span{e_k ⊗ ℂ² ⊗ δ_g}, |k| ≤ 2, |g| ≤ 8
        let gens = clifford_generators(2);
        let mut eig = Vec::new();
        for k in -2i32..=2 {
            for g in -8i32..=8 {
                let m = dense(&gens, &[2.0 * PI * k as f64, g as f64]);
                eig.extend(m.symmetric_eigen().eigenvalues.iter().copied().filter(|v| v.abs() <= cutoff));
            }
        }
        assert_eq!(eig.len() as u64, spec.count());
        let mut abs: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let mut flat = Vec::new();
        for r in &spec.records {
            flat.extend(std::iter::repeat(r.value).take(r.multiplicity as usize));
        }
        for (a, b) in abs.iter().zip(&flat) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uhf_closed_form_and_oracle() {
        let m = UhfModel::new(2, rat(1, 1)).unwrap();
        let spec = m.spectrum(0, 3).unwrap();
        let masses: Vec<Rational> = spec.records.iter().map(SpectrumRecord::mass).collect();
        assert_eq!(masses, vec![rat(1, 1), rat(3, 1), rat(12, 1), rat(48, 1), rat(192, 1)]);
        let spec = m.spectrum(1, 0).unwrap();
        assert!((spec.records[1].value - 0.5).abs() < 1e-15);
        assert_eq!(spec.records[1].mass(), rat(3, 4));
        assert_eq!(m.spectrum(0, 0).unwrap().len(), 2);
        for (n, k) in [(0, 0), (0, 2), (1, 0), (1, 1), (2, 0), (2, 1)] {
            uhf_weight_oracle(&m, n, k).unwrap();
        }
        assert!((m.zeta_closed_form(0, 3.0) - 6.0).abs() < 1e-12);
        assert_eq!(m.abscissa(), rat(2, 1));
        assert!((m.residue(0).value - 3.0 / 2f64.ln()).abs() < 1e-12);
        assert_eq!(m.residue(0), m.residue(3));
    }

    #[test]
    fn uhf_level_one_is_shifted_base() {
        // D₁ = r^{−s}F⊗E + I⊗D₀
        let m = UhfModel::new(2, rat(3, 2)).unwrap();
        let d1 = uhf_dirac_matrix(&m, 1, 1);
        let mut direct = DMatrix::zeros(d1.nrows(), d1.ncols());
        for t in 0..3 {
            direct += uhf_q(2, 3, t) * m.eigenvalue(t as i64 - 1);
        }
        assert!((d1 - direct).abs().max() < 1e-12);
    }

    #[test]
    fn uhf_commutator_sandwich() {
        let m = UhfModel::new(2, rat(1, 1)).unwrap();
        let mut b = DMatrix::<Complex64>::zeros(2, 2);
        b[(0, 0)] = Complex64::new(1.0, 0.0);
        let c = uhf_commutator(&m, &b, 1, 3).unwrap();
        assert!(c.holds, "{c:?}");
        assert!(c.flipped_upper < 0.0);
        assert!((quotient_norm(&b) - 0.5).abs() < 1e-8);
        // scaling: one level deeper divides by r^s
        let c2 = uhf_commutator(&m, &b, 2, 3).unwrap();
        assert!((c.exact / c2.exact - 2.0).abs() < 1e-9);
        // scalar b commutes
        let id = DMatrix::<Complex64>::identity(2, 2);
        assert!(uhf_commutator(&m, &id, 1, 2).unwrap().exact < 1e-12);
    }

    #[test]
    fn lipnorm_examples() {
        let c = cov("2,0;0,2");
        for k in 0..5 {
            let xi = c.a_pow(k).mul_vec(&unit_vector(2));
            let l = commutator_lipnorm(&Monomial::Torus { xi: xi.clone() }).unwrap();
            assert_eq!(l.exact_sq, Some(Rational::new(1.into(), BigInt::from(4u64.pow(k)))));
            let a = commutator_lipnorm(&Monomial::Crossed { cov: c.clone(), level: k, g: xi.clone() }).unwrap();
            let b = commutator_lipnorm(&Monomial::Crossed { cov: c.clone(), level: k + 1, g: xi }).unwrap();
            assert_eq!(a.exact_sq, b.exact_sq);
        }
        let zero = commutator_lipnorm(&Monomial::Crossed { cov: c.clone(), level: 0, g: vec![rat(0, 1); 2] }).unwrap();
        assert_eq!(zero.value, 0.0);
        let bad = commutator_lipnorm(&Monomial::Crossed { cov: c, level: 0, g: vec![rat(1, 2), rat(0, 1)] });
        assert!(matches!(bad, Err(Error::NotLevelFrequency { .. })));
    }

    #[test]
    fn radii_tables() {
        let b = IntMatrix::parse("2,0;0,2").unwrap();
        let t = radii_divergence(&RadiiModel::Torus(b.clone()), 10).unwrap();
        for row in &t.rows {
            assert_eq!(row.quotient_exact, Some(Rational::from_integer(BigInt::from(1u64 << row.k))));
        }
        assert!((t.rows[0].quotient_norm - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(t.strictly_increasing && t.warning.is_none());
        let t = radii_divergence(&RadiiModel::Crossed(b.clone()), 6).unwrap();
        assert!(t.strictly_increasing);
        let t = radii_divergence(&RadiiModel::NcTorus(b, RationalAngle::new(1, 3).unwrap()), 4).unwrap();
        assert!(t.strictly_increasing);
        assert_eq!(t.rows[3].quotient_exact, Some(rat(8, 1)));
        let t = radii_divergence(&RadiiModel::Torus(IntMatrix::parse("2,0;0,1").unwrap()), 2).unwrap();
        assert!(t.warning.is_some());
    }

    #[test]
    fn lip_scaling_examples() {
        let theta = RationalAngle::new(1, 3).unwrap();
        let b = IntMatrix::parse("2,0;0,2").unwrap();
        let r = lip_scaling_check(&theta, &b, [1, 0], 1).unwrap();
        assert!(r.holds);
        assert_eq!(r.ratio_sq, Some(rat(1, 4)));
        let r = lip_scaling_check(&theta, &b, [0, 0], 2).unwrap();
        assert!(r.holds && r.base == 0.0 && r.scaled == 0.0);
        let r = lip_scaling_check(&theta, &b, [2, 3], 3).unwrap();
        assert!(r.holds);
        assert_eq!(r.ratio_sq, Some(rat(1, 64)));
    }
}
