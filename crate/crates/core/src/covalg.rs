//! Covering algebras as trigonometric polynomials.
//!
//! An element of level `n` is a finitely supported map `ξ ↦ c_ξ` on the
//! dilated lattice `Aⁿℤᵖ`, standing for `f(t) = Σ c_ξ e^{2πi⟨ξ,t⟩}`. The deck
//! group `ℤᵖ/Bℤᵖ` acts by translation by `B^{n−1}ĝ`, which multiplies `c_ξ` by
//! `⟨ξ, −B^{n−1}ĝ⟩`. The eigenspace `B_k` on which `g` acts by the character
//! `⟨k, g⟩` is therefore spanned by frequencies whose level class is `−k`.
//!
//! ```
//! use solenoid::covalg::{eigenspace_project, sigma_unitary, TrigPoly};
//! use solenoid::cyclotomic::Cyclotomic;
//! use solenoid::intlat::{rat, IntMatrix};
//! use solenoid::lattice::Covering;
//!
//! let cov = Covering::new(&IntMatrix::from_i64(1, &[2])).unwrap();
//! // σ(½) = e^{−πit} lives in the eigenspace of the class ½
//! let s: TrigPoly<Cyclotomic> = sigma_unitary(&cov, 1, 1);
//! assert_eq!(s.terms().next().unwrap().0, &vec![rat(-1, 2)]);
//! assert_eq!(eigenspace_project(&cov, 1, &s).unwrap(), s);
//! ```

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};
use crate::intlat::{self, rat_to_f64, RatMatrix, Rational};
use crate::lattice::{pairing, Covering, Phase};

/// Scalars a trigonometric polynomial may carry.
pub trait Coefficient: Clone + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &Rational) -> Self;
    /// `e^{2πi·phase}`.
    fn from_phase(phase: &Phase) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    /// Exact equality for exact types, `1e-12` closeness for floats.
    fn approx_eq(&self, other: &Self) -> bool;
    fn to_complex(&self) -> Complex64;
    /// Exact textual form, when there is one.
    fn exact(&self) -> Option<String> {
        None
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn scale(&self, q: &Rational) -> Self {
        self.mul(&Self::from_rational(q))
    }
}

impl Coefficient for Cyclotomic {
    fn zero() -> Self {
        Cyclotomic::zero()
    }
    fn one() -> Self {
        Cyclotomic::one()
    }
    fn from_rational(q: &Rational) -> Self {
        Cyclotomic::from_rational(q)
    }
    fn from_phase(phase: &Phase) -> Self {
        Cyclotomic::from_phase(phase)
    }
    fn is_zero(&self) -> bool {
        Cyclotomic::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Cyclotomic::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Cyclotomic::mul(self, other)
    }
    fn neg(&self) -> Self {
        Cyclotomic::neg(self)
    }
    fn conj(&self) -> Self {
        Cyclotomic::conj(self)
    }
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
    fn to_complex(&self) -> Complex64 {
        Cyclotomic::to_complex(self)
    }
    fn exact(&self) -> Option<String> {
        Some(self.to_string())
    }
    fn scale(&self, q: &Rational) -> Self {
        Cyclotomic::scale(self, q)
    }
}

/// Float tolerance for [`Complex64`] coefficients.
pub const COMPLEX_TOL: f64 = 1e-12;

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_rational(q: &Rational) -> Self {
        Complex64::new(rat_to_f64(q), 0.0)
    }
    fn from_phase(phase: &Phase) -> Self {
        phase.to_complex()
    }
    fn is_zero(&self) -> bool {
        self.norm() <= COMPLEX_TOL
    }
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }
    fn mul(&self, other: &Self) -> Self {
        *self * *other
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn approx_eq(&self, other: &Self) -> bool {
        (*self - *other).norm() <= COMPLEX_TOL * (1.0 + self.norm().max(other.norm()))
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
}

/// `f(t) = Σ c_ξ e^{2πi⟨ξ,t⟩}` with finitely many nonzero `c_ξ`.
#[derive(Clone, Debug)]
pub struct TrigPoly<C = Cyclotomic> {
    level: u32,
    dim: usize,
    terms: BTreeMap<Vec<Rational>, C>,
}

impl<C: Coefficient> TrigPoly<C> {
    pub fn zero(dim: usize, level: u32) -> Self {
        TrigPoly { level, dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, level: u32, c: C) -> Self {
        TrigPoly::monomial(level, vec![Rational::zero(); dim], c)
    }

    pub fn one(dim: usize, level: u32) -> Self {
        TrigPoly::constant(dim, level, C::one())
    }

    /// `c·e^{2πi⟨ξ,t⟩}`.
    pub fn monomial(level: u32, xi: Vec<Rational>, c: C) -> Self {
        let mut out = TrigPoly::zero(xi.len(), level);
        out.add_term(xi, c);
        out
    }

    pub fn from_terms(dim: usize, level: u32, terms: impl IntoIterator<Item = (Vec<Rational>, C)>) -> Self {
        let mut out = TrigPoly::zero(dim, level);
        for (xi, c) in terms {
            out.add_term(xi, c);
        }
        out
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic order of the frequency.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Rational>, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, xi: &[Rational]) -> C {
        self.terms.get(xi).cloned().unwrap_or_else(C::zero)
    }

    /// Adds `c·e^{2πi⟨ξ,t⟩}` in place, pruning zeros.
    pub fn add_term(&mut self, xi: Vec<Rational>, c: C) {
        assert_eq!(xi.len(), self.dim, "frequency dimension mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(xi) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// The same function viewed at a higher level.
    pub fn at_level(&self, level: u32) -> Self {
        assert!(level >= self.level, "cannot lower the level of an element");
        TrigPoly { level, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.at_level(self.level.max(other.level));
        for (xi, c) in &other.terms {
            out.add_term(xi.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        TrigPoly { level: self.level, dim: self.dim, terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        TrigPoly::from_terms(self.dim, self.level, self.terms.iter().map(|(k, v)| (k.clone(), v.mul(c))))
    }

    /// Pointwise product, i.e. convolution of coefficients.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = TrigPoly::zero(self.dim, self.level.max(other.level));
        for (x, a) in &self.terms {
            for (y, b) in &other.terms {
                out.add_term(intlat::vec_add(x, y), a.mul(b));
            }
        }
        out
    }

    /// `f*(t) = conj f(t)`: `c_ξ ↦ conj c_{−ξ}`.
    pub fn adjoint(&self) -> Self {
        TrigPoly::from_terms(self.dim, self.level, self.terms.iter().map(|(k, c)| (intlat::vec_neg(k), c.conj())))
    }

    /// `f(· − g)`: `c_ξ ↦ ⟨ξ, −g⟩ c_ξ`.
    pub fn translate(&self, g: &[Rational]) -> Self {
        TrigPoly::from_terms(
            self.dim,
            self.level,
            self.terms.iter().map(|(k, c)| (k.clone(), c.mul(&C::from_phase(&pairing(k, g).neg())))),
        )
    }

    /// Normalized Haar trace, the constant coefficient.
    pub fn trace(&self) -> C {
        self.coeff(&vec![Rational::zero(); self.dim])
    }

    /// `τ(f*f) = Σ |c_ξ|²`.
    pub fn l2_norm_sq(&self) -> C {
        self.terms.values().fold(C::zero(), |acc, c| acc.add(&c.mul(&c.conj())))
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(xi, c)| {
                let dot: f64 = xi.iter().zip(t).map(|(x, y)| rat_to_f64(x) * y).sum();
                let angle = 2.0 * std::f64::consts::PI * dot;
                c.to_complex() * Complex64::new(angle.cos(), angle.sin())
            })
            .sum()
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.terms.len() == other.terms.len()
            && self.terms.iter().all(|(k, c)| other.terms.get(k).is_some_and(|d| c.approx_eq(d)))
    }

    /// Fails with `NotLevelFrequency` unless every frequency lies in `Aⁿℤᵖ`.
    pub fn check_support(&self, cov: &Covering) -> Result<()> {
        if self.terms.keys().all(|xi| cov.in_level(xi, self.level)) {
            Ok(())
        } else {
            Err(Error::NotLevelFrequency { level: self.level as usize })
        }
    }

    fn at_level_unchecked(mut self, level: u32) -> Self {
        self.level = level;
        self
    }
}

impl<C: Coefficient> PartialEq for TrigPoly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl<C: Coefficient> Serialize for TrigPoly<C> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(xi, c)| {
                let z = c.to_complex();
                let mut obj = serde_json::json!({
                    "xi": xi.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "re": z.re,
                    "im": z.im,
                });
                if let Some(e) = c.exact() {
                    obj["exact"] = serde_json::Value::String(e);
                }
                obj
            })
            .collect();
        serde_json::json!({ "level": self.level, "terms": terms }).serialize(s)
    }
}

/// `q×q` matrix of trigonometric polynomials sharing a level.
#[derive(Clone, Debug)]
pub struct MatTrigPoly<C = Cyclotomic> {
    size: usize,
    entries: Vec<TrigPoly<C>>,
}

impl<C: Coefficient> MatTrigPoly<C> {
    pub fn zero(size: usize, dim: usize, level: u32) -> Self {
        MatTrigPoly { size, entries: vec![TrigPoly::zero(dim, level); size * size] }
    }

    pub fn identity(size: usize, dim: usize, level: u32) -> Self {
        let mut out = MatTrigPoly::zero(size, dim, level);
        for i in 0..size {
            out.set(i, i, TrigPoly::one(dim, level));
        }
        out
    }

    /// Constant matrix-valued function from a row-major scalar matrix.
    pub fn from_scalars(size: usize, dim: usize, level: u32, m: &[C]) -> Self {
        assert_eq!(m.len(), size * size);
        MatTrigPoly { size, entries: m.iter().map(|c| TrigPoly::constant(dim, level, c.clone())).collect() }
    }

    pub fn from_entries(size: usize, entries: Vec<TrigPoly<C>>) -> Self {
        assert_eq!(entries.len(), size * size);
        let level = entries.iter().map(TrigPoly::level).max().unwrap_or(0);
        let entries = entries.into_iter().map(|e| e.at_level(level)).collect();
        MatTrigPoly { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn level(&self) -> u32 {
        self.entries[0].level
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim
    }

    pub fn get(&self, i: usize, j: usize) -> &TrigPoly<C> {
        &self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: TrigPoly<C>) {
        let level = self.level().max(value.level);
        self.entries[i * self.size + j] = value;
        if self.entries.iter().any(|e| e.level != level) {
            for e in &mut self.entries {
                e.level = level;
            }
        }
    }

    pub fn at_level(&self, level: u32) -> Self {
        MatTrigPoly { size: self.size, entries: self.entries.iter().map(|e| e.at_level(level)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.size, other.size);
        MatTrigPoly { size: self.size, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.size, other.size);
        MatTrigPoly { size: self.size, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        MatTrigPoly { size: self.size, entries: self.entries.iter().map(|e| e.scale(c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.size, other.size);
        let q = self.size;
        let level = self.level().max(other.level());
        let mut out = MatTrigPoly::zero(q, self.dim(), level);
        for i in 0..q {
            for j in 0..q {
                let mut acc = TrigPoly::zero(self.dim(), level);
                for l in 0..q {
                    let a = self.get(i, l);
                    let b = other.get(l, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.mul(b));
                    }
                }
                out.entries[i * q + j] = acc;
            }
        }
        out
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let q = self.size;
        let mut entries = Vec::with_capacity(q * q);
        for i in 0..q {
            for j in 0..q {
                entries.push(self.get(j, i).adjoint());
            }
        }
        MatTrigPoly { size: q, entries }
    }

    pub fn translate(&self, g: &[Rational]) -> Self {
        MatTrigPoly { size: self.size, entries: self.entries.iter().map(|e| e.translate(g)).collect() }
    }

    /// `W f W*` for a constant unitary `W` given row-major.
    pub fn conjugate(&self, w: &[C]) -> Self {
        let q = self.size;
        let wm = MatTrigPoly::from_scalars(q, self.dim(), self.level(), w);
        wm.mul(self).mul(&wm.adjoint())
    }

    /// Normalized trace `(1/q) Σ_i τ(f_ii)`.
    pub fn trace(&self) -> C {
        let sum = (0..self.size).fold(C::zero(), |acc, i| acc.add(&self.get(i, i).trace()));
        sum.scale(&Rational::new(BigInt::one(), BigInt::from(self.size)))
    }

    pub fn is_diagonal(&self) -> bool {
        let q = self.size;
        (0..q).all(|i| (0..q).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.size == other.size && self.entries.iter().zip(&other.entries).all(|(a, b)| a.approx_eq(b))
    }

    pub fn eval(&self, t: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j).eval(t))
    }
}

impl<C: Coefficient> PartialEq for MatTrigPoly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl<C: Coefficient> Serialize for MatTrigPoly<C> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<&TrigPoly<C>>> = (0..self.size).map(|i| (0..self.size).map(|j| self.get(i, j)).collect()).collect();
        serde_json::json!({ "size": self.size, "level": self.level(), "entries": rows }).serialize(s)
    }
}

/// Translation `B^{n−1}ŝ(g)` realizing deck element `g` at level `n`.
pub fn deck_translation(cov: &Covering, n: u32, g: usize) -> Vec<Rational> {
    assert!(n >= 1, "the deck group acts from level 1 on");
    let rep = crate::lattice::to_rational_vec(&cov.group().group_reps[g]);
    cov.b().pow(n - 1).to_rational().mul_vec(&rep)
}

/// `γ_g(f)` for the top deck group of `f`'s level.
pub fn deck_action<C: Coefficient>(cov: &Covering, g: usize, f: &TrigPoly<C>) -> TrigPoly<C> {
    f.translate(&deck_translation(cov, f.level.max(1), g))
}

/// `ad(W)[f(· − g)]`, the matrix-valued deck action.
pub fn deck_action_mat<C: Coefficient>(g: &[Rational], unitary: &[C], f: &MatTrigPoly<C>) -> MatTrigPoly<C> {
    f.translate(g).conjugate(unitary)
}

/// All eigencomponents `E_k(b)`, indexed by dual class `k`.
pub fn decompose<C: Coefficient>(cov: &Covering, b: &TrigPoly<C>) -> Result<Vec<TrigPoly<C>>> {
    let n = b.level;
    if n == 0 {
        return Err(Error::precondition("eigenspace decomposition needs level ≥ 1"));
    }
    let g = cov.group();
    let mut parts = vec![TrigPoly::zero(b.dim, n); cov.order()];
    for (xi, c) in &b.terms {
        let class = cov.level_class(xi, n)?;
        parts[g.dual_neg(class)].terms.insert(xi.clone(), c.clone());
    }
    Ok(parts)
}

/// `E_k(b)`: keeps the frequencies of level class `−k`.
pub fn eigenspace_project<C: Coefficient>(cov: &Covering, k: usize, b: &TrigPoly<C>) -> Result<TrigPoly<C>> {
    Ok(decompose(cov, b)?.swap_remove(k))
}

/// `E_k(b) = (1/|Γ|) Σ_g conj⟨k,g⟩ γ_g(b)`, computed by averaging.
pub fn eigenspace_average<C: Coefficient>(cov: &Covering, k: usize, b: &TrigPoly<C>) -> TrigPoly<C> {
    let r = cov.order();
    let mut acc = TrigPoly::zero(b.dim, b.level);
    for g in 0..r {
        let w = C::from_phase(&cov.group().character(k, g).neg());
        acc = acc.add(&deck_action(cov, g, b).scale(&w));
    }
    acc.scale(&C::from_rational(&Rational::new(BigInt::one(), BigInt::from(r))))
}

/// `σ(k) = e^{−2πi⟨s_n(k), t⟩}`.
pub fn sigma_unitary<C: Coefficient>(cov: &Covering, k: usize, n: u32) -> TrigPoly<C> {
    let s = &cov.section(n).values[k];
    TrigPoly::monomial(n, intlat::vec_neg(s), C::one())
}

/// `M(b)_{hk} = σ(h)⁻¹ E_{h−k}(b) σ(k)`, entries at level `n − 1`.
pub fn matrix_embed<C: Coefficient>(cov: &Covering, b: &TrigPoly<C>) -> Result<MatTrigPoly<C>> {
    let n = b.level;
    let parts = decompose(cov, b)?;
    let g = cov.group();
    let r = cov.order();
    let sigmas: Vec<TrigPoly<C>> = (0..r).map(|k| sigma_unitary(cov, k, n)).collect();
    let mut entries = Vec::with_capacity(r * r);
    for h in 0..r {
        for k in 0..r {
            let part = &parts[g.dual_sub(h, k)];
            let e = if part.is_zero() {
                TrigPoly::zero(b.dim, n - 1)
            } else {
                let e = sigmas[h].adjoint().mul(part).mul(&sigmas[k]).at_level_unchecked(n - 1);
                e.check_support(cov).map_err(|_| Error::invariant(format!("M(b)[{h}][{k}] leaves the level-{} lattice", n - 1)))?;
                e
            };
            entries.push(e);
        }
    }
    Ok(MatTrigPoly { size: r, entries })
}

/// `a_j = σ(j)⁻¹ E_j(b)`, the coefficient vector over the lower level.
pub fn l2_isometry<C: Coefficient>(cov: &Covering, b: &TrigPoly<C>) -> Result<Vec<TrigPoly<C>>> {
    let n = b.level;
    let parts = decompose(cov, b)?;
    parts
        .iter()
        .enumerate()
        .map(|(j, part)| {
            let a = sigma_unitary::<C>(cov, j, n).adjoint().mul(part).at_level_unchecked(n - 1);
            a.check_support(cov).map_err(|_| Error::invariant(format!("isometry component {j} leaves the lower lattice")))?;
            Ok(a)
        })
        .collect()
}

/// `can(z)(g) = Σ_{j,k} ⟨k, −g⟩ σ(j) a_{j,k} σ(k)` for `z = Σ σ(j)a_{j,k} ⊗ σ(k)`.
pub fn can_apply<C: Coefficient>(cov: &Covering, n: u32, a: &[Vec<TrigPoly<C>>]) -> Vec<TrigPoly<C>> {
    let r = cov.order();
    let grp = cov.group();
    let dim = cov.dim();
    let sigmas: Vec<TrigPoly<C>> = (0..r).map(|k| sigma_unitary(cov, k, n)).collect();
    // z_k = Σ_j σ(j) a_{j,k} σ(k), then weight by characters
    let z: Vec<TrigPoly<C>> = (0..r)
        .map(|k| {
            let mut acc = TrigPoly::zero(dim, n);
            for j in 0..r {
                if !a[j][k].is_zero() {
                    acc = acc.add(&sigmas[j].mul(&a[j][k]).mul(&sigmas[k]));
                }
            }
            acc
        })
        .collect();
    (0..r)
        .map(|g| {
            let mut acc = TrigPoly::zero(dim, n);
            for (k, zk) in z.iter().enumerate() {
                acc = acc.add(&zk.scale(&C::from_phase(&grp.character(k, g).neg())));
            }
            acc
        })
        .collect()
}

/// Preimage of a target family under `can`.
#[derive(Clone, Debug, Serialize)]
pub struct CanSolution<C: Coefficient = Cyclotomic> {
    pub level: u32,
    /// `a[j][k]`, elements of the base level.
    pub coefficients: Vec<Vec<TrigPoly<C>>>,
}

/// Solves `can(z) = Σ_g b(g) ⊗ χ_g` for the coefficients `a_{j,k}`, checking the round trip.
pub fn can_solve<C: Coefficient>(cov: &Covering, n: u32, targets: &[TrigPoly<C>]) -> Result<CanSolution<C>> {
    let r = cov.order();
    if n == 0 {
        return Err(Error::precondition("can needs level ≥ 1"));
    }
    if targets.len() != r {
        return Err(Error::precondition(format!("expected {r} targets, one per deck element")));
    }
    let grp = cov.group();
    let dim = cov.dim();
    let inv_r = C::from_rational(&Rational::new(BigInt::one(), BigInt::from(r)));
    let mut a = vec![vec![TrigPoly::zero(dim, n - 1); r]; r];
    for l in 0..r {
        // c_ℓ = (1/r) Σ_g ⟨ℓ,g⟩ b(g) σ(ℓ)⁻¹ = Σ_j σ(j) a_{j,ℓ}
        let mut c = TrigPoly::zero(dim, n);
        for (g, b) in targets.iter().enumerate() {
            let b = b.at_level(n.max(b.level));
            if b.level != n {
                return Err(Error::precondition("targets must live at the covering level"));
            }
            c = c.add(&b.scale(&C::from_phase(&grp.character(l, g))));
        }
        c = c.mul(&sigma_unitary::<C>(cov, l, n).adjoint()).scale(&inv_r);
        let parts = decompose(cov, &c)?;
        for (j, part) in parts.iter().enumerate() {
            let aj = sigma_unitary::<C>(cov, j, n).adjoint().mul(part).at_level_unchecked(n - 1);
            aj.check_support(cov).map_err(|_| Error::invariant("can coefficient outside the base algebra"))?;
            a[j][l] = aj;
        }
    }
    let back = can_apply(cov, n, &a);
    for (g, (x, y)) in back.iter().zip(targets).enumerate() {
        if !x.approx_eq(&y.at_level(n)) {
            return Err(Error::invariant(format!("can round trip differs at deck element {g}")));
        }
    }
    Ok(CanSolution { level: n, coefficients: a })
}

/// Matrix algebra `M_q(ℂ)` with a finite abelian group acting by diagonal unitaries.
#[derive(Clone, Debug, Serialize)]
pub struct FinDimCovering {
    pub q: usize,
    /// Orders `d_i` of the cyclic factors.
    pub factors: Vec<u64>,
    /// `generators[i][a]`: `J_i = diag(e^{2πi·φ_a})`.
    pub generators: Vec<Vec<Phase>>,
}

impl FinDimCovering {
    /// Checks that each `J_i^{d_i}` acts trivially by conjugation.
    pub fn new(q: usize, factors: Vec<u64>, generators: Vec<Vec<Phase>>) -> Result<Self> {
        if factors.len() != generators.len() {
            return Err(Error::precondition("one generator per cyclic factor"));
        }
        if factors.iter().any(|&d| d == 0) {
            return Err(Error::precondition("cyclic factors must be positive"));
        }
        for (d, gen) in factors.iter().zip(&generators) {
            if gen.len() != q {
                return Err(Error::precondition("generator size differs from q"));
            }
            for a in gen {
                let diff = a.sub(&gen[0]).times(&BigInt::from(*d));
                if !diff.is_zero() {
                    return Err(Error::precondition("generator power J^d is not central"));
                }
            }
        }
        Ok(FinDimCovering { q, factors, generators })
    }

    /// `q = 3`, `Γ = ℤ₂`, `J = diag(1, −1, −1)`.
    pub fn no_unitaries_example() -> Self {
        let half = Phase::from_ratio(1, 2);
        FinDimCovering::new(3, vec![2], vec![vec![Phase::zero(), half.clone(), half]]).unwrap()
    }

    /// All dual elements `k` as digit tuples, odometer order.
    pub fn dual_elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for &d in &self.factors {
            out = out.into_iter().flat_map(|v| (0..d).map(move |x| [v.clone(), vec![x]].concat())).collect();
        }
        out
    }

    /// Matrix units spanning the eigenspace of `k`.
    pub fn eigenspace_basis(&self, k: &[u64]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.q {
            for b in 0..self.q {
                let fits = self.factors.iter().zip(&self.generators).zip(k).all(|((&d, gen), &ki)| {
                    // ad(J)(e_ab) = e^{2πi(φ_a − φ_b)} e_ab must equal ⟨k, gen⟩ = k_i/d_i
                    gen[a].sub(&gen[b]) == Phase::from_ratio(ki as i64, d as i64)
                });
                if fits {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Outcome of the invertibility test on one eigenspace.
#[derive(Clone, Debug, Serialize)]
pub struct ClassRegularity {
    pub class: Vec<u64>,
    pub basis: Vec<(usize, usize)>,
    /// `"symbolic"` or `"schwartz_zippel"`.
    pub method: &'static str,
    pub invertible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<Vec<Vec<String>>>,
    /// Polar part of the sample, row-major.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub classes: Vec<ClassRegularity>,
}

/// Symbolic bound: determinant expanded by permutations up to this size.
pub const SYMBOLIC_MAX_Q: usize = 4;
const REGULARITY_SEED: u64 = 0x5eed_0001;

/// Decides, for each dual class, whether the eigenspace holds an invertible element.
pub fn regularity_check(cov: &FinDimCovering) -> Result<RegularityReport> {
    let q = cov.q;
    let mut rng = ChaCha8Rng::seed_from_u64(REGULARITY_SEED);
    let mut classes = Vec::new();
    for k in cov.dual_elements() {
        let basis = cov.eigenspace_basis(&k);
        let (method, mut invertible) = if q <= SYMBOLIC_MAX_Q {
            // distinct coordinates per matrix unit: det ≠ 0 iff some permutation is supported
            ("symbolic", permutations(q).iter().any(|p| (0..q).all(|i| basis.contains(&(i, p[i])))))
        } else {
            ("schwartz_zippel", false)
        };
        let attempts = if q <= SYMBOLIC_MAX_Q { if invertible { 64 } else { 0 } } else { q * q + 1 };
        let mut sample = None;
        for _ in 0..attempts {
            let m = random_point(q, &basis, &mut rng);
            if !m.det().is_zero() {
                sample = Some(m);
                break;
            }
        }
        if method == "schwartz_zippel" {
            invertible = sample.is_some();
        } else if invertible && sample.is_none() {
            return Err(Error::invariant("no invertible sample found in a nondegenerate eigenspace"));
        }
        let unitary = match &sample {
            Some(m) => {
                let u = polar_unitary(m);
                let leak = (0..q)
                    .flat_map(|i| (0..q).map(move |j| (i, j)))
                    .filter(|ij| !basis.contains(ij))
                    .map(|(i, j)| u[(i, j)].abs())
                    .fold(0.0, f64::max);
                if leak > 1e-9 {
                    return Err(Error::invariant("polar unitary left the eigenspace"));
                }
                Some((0..q).map(|i| (0..q).map(|j| u[(i, j)]).collect()).collect())
            }
            None => None,
        };
        classes.push(ClassRegularity {
            class: k,
            basis,
            method,
            invertible,
            sample: sample.map(|m| (0..q).map(|i| m.row(i).iter().map(|x| x.to_string()).collect()).collect()),
            unitary,
        });
    }
    Ok(RegularityReport { regular: classes.iter().all(|c| c.invertible), classes })
}

/// For a lattice covering every `σ(k)` is unitary and lies in `B_k`; returns them after checking.
pub fn lattice_regularity<C: Coefficient>(cov: &Covering, n: u32) -> Result<Vec<TrigPoly<C>>> {
    (0..cov.order())
        .map(|k| {
            let s: TrigPoly<C> = sigma_unitary(cov, k, n);
            let unit = s.adjoint().mul(&s) == TrigPoly::one(cov.dim(), n);
            let graded = eigenspace_project(cov, k, &s)? == s;
            if unit && graded {
                Ok(s)
            } else {
                Err(Error::invariant(format!("σ({k}) is not a unitary in its eigenspace")))
            }
        })
        .collect()
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(q - 1) {
        for pos in 0..q {
            let mut v = p.clone();
            v.insert(pos, q - 1);
            out.push(v);
        }
    }
    out
}

fn random_point(q: usize, basis: &[(usize, usize)], rng: &mut ChaCha8Rng) -> RatMatrix {
    let mut m = RatMatrix::zero(q);
    for &(i, j) in basis {
        let num: i64 = rng.gen_range(-1000..=1000);
        let den: i64 = rng.gen_range(1..=97);
        m.set(i, j, intlat::rat(num, den));
    }
    m
}

/// `U` in `C = U|C|`, via the singular value decomposition.
fn polar_unitary(m: &RatMatrix) -> DMatrix<f64> {
    let q = m.dim();
    let dm = DMatrix::from_fn(q, q, |i, j| rat_to_f64(m.get(i, j)));
    let svd = dm.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlat::{rat, IntMatrix};
    use rand::Rng;

    fn cov(dim: usize, e: &[i64]) -> Covering {
        Covering::new(&IntMatrix::from_i64(dim, e)).unwrap()
    }

    fn cyc(num: i64, den: i64, phase: (i64, i64)) -> Cyclotomic {
        Cyclotomic::monomial(&rat(num, den), &Phase::from_ratio(phase.0, phase.1))
    }

    /// Random element of level `n` with small support and 12th-root coefficients.
    fn random_poly(c: &Covering, n: u32, rng: &mut ChaCha8Rng) -> TrigPoly {
        let basis = c.a_pow(n);
        let p = c.dim();
        let mut f = TrigPoly::zero(p, n);
        for _ in 0..rng.gen_range(1..5) {
            let m: Vec<Rational> = (0..p).map(|_| rat(rng.gen_range(-3..=3), 1)).collect();
            f.add_term(basis.mul_vec(&m), cyc(rng.gen_range(-3..=3), rng.gen_range(1..=3), (rng.gen_range(0..12), 12)));
        }
        f
    }

    #[test]
    fn deck_action_examples() {
        let c = cov(1, &[2]);
        let f = TrigPoly::monomial(1, vec![rat(1, 2)], Cyclotomic::one());
        assert_eq!(deck_action(&c, 1, &f), f.neg());
        assert_eq!(deck_action(&c, 0, &f), f);
    }

    #[test]
    fn deck_action_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in [cov(1, &[3]), cov(2, &[1, -1, 1, 1]), cov(2, &[2, 1, 0, 2])] {
            for n in 1..=2 {
                let f = random_poly(&c, n, &mut rng);
                for g in 0..c.order() {
                    for h in 0..c.order() {
                        let sum: Vec<BigInt> = c.group().group_reps[g].iter().zip(&c.group().group_reps[h]).map(|(x, y)| x + y).collect();
                        let gh = c.group().group_class(&sum);
                        assert_eq!(deck_action(&c, g, &deck_action(&c, h, &f)), deck_action(&c, gh, &f));
                    }
                }
            }
        }
    }

    #[test]
    fn eigenspace_examples() {
        let c = cov(1, &[2]);
        let f = TrigPoly::monomial(1, vec![rat(1, 2)], Cyclotomic::one());
        assert_eq!(eigenspace_project(&c, 1, &f).unwrap(), f);
        assert!(eigenspace_project(&c, 0, &f).unwrap().is_zero());
        // level-0 elements are fixed
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = random_poly(&c, 0, &mut rng).at_level(1);
        assert_eq!(eigenspace_project(&c, 0, &base).unwrap(), base);
    }

    #[test]
    fn projection_matches_character_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in [cov(1, &[3]), cov(2, &[1, -1, 1, 1]), cov(2, &[2, 0, 0, 3])] {
            let b = random_poly(&c, 1, &mut rng);
            let mut total = TrigPoly::zero(c.dim(), 1);
            for k in 0..c.order() {
                let e = eigenspace_project(&c, k, &b).unwrap();
                assert_eq!(eigenspace_average(&c, k, &b), e);
                assert_eq!(eigenspace_project(&c, k, &e).unwrap(), e);
                total = total.add(&e);
            }
            assert_eq!(total, b);
        }
    }

    #[test]
    fn eigenspaces_multiply_by_class_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = cov(2, &[2, 1, 0, 2]);
        let g = c.group();
        for _ in 0..10 {
            let b = random_poly(&c, 1, &mut rng);
            let b2 = random_poly(&c, 1, &mut rng);
            for j in 0..c.order() {
                for k in 0..c.order() {
                    let prod = eigenspace_project(&c, j, &b).unwrap().mul(&eigenspace_project(&c, k, &b2).unwrap());
                    assert_eq!(eigenspace_project(&c, g.dual_add(j, k), &prod).unwrap(), prod);
                }
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let c = cov(1, &[2]);
        assert_eq!(sigma_unitary::<Cyclotomic>(&c, 0, 1), TrigPoly::one(1, 1));
        assert_eq!(sigma_unitary::<Cyclotomic>(&c, 1, 1), TrigPoly::monomial(1, vec![rat(-1, 2)], Cyclotomic::one()));
        // σ(j)σ(k)σ(j+k)⁻¹ is the monomial at −ω(j,k)
        let c = cov(2, &[2, 1, 0, 2]);
        for n in 1..=2 {
            let w = c.cocycle(n);
            for j in 0..c.order() {
                for k in 0..c.order() {
                    let jk = c.group().dual_add(j, k);
                    let lhs = sigma_unitary::<Cyclotomic>(&c, j, n)
                        .mul(&sigma_unitary(&c, k, n))
                        .mul(&sigma_unitary::<Cyclotomic>(&c, jk, n).adjoint());
                    assert_eq!(lhs, TrigPoly::monomial(n, intlat::vec_neg(&w.table[j][k]), Cyclotomic::one()));
                }
            }
        }
        assert_eq!(lattice_regularity::<Cyclotomic>(&c, 2).unwrap().len(), 4);
    }

    #[test]
    fn matrix_embed_examples() {
        let c = cov(1, &[2]);
        let m = matrix_embed(&c, &TrigPoly::<Cyclotomic>::one(1, 1)).unwrap();
        assert_eq!(m, MatTrigPoly::identity(2, 1, 0));
        let b = TrigPoly::monomial(1, vec![rat(1, 2)], Cyclotomic::one());
        let m = matrix_embed(&c, &b).unwrap();
        // dual reps are 0 and ½; b lies in B_½ so only h − k = ½ survives
        assert!(m.get(0, 0).is_zero() && m.get(1, 1).is_zero());
        assert_eq!(m.get(0, 1), &TrigPoly::one(1, 0));
        assert_eq!(m.get(1, 0), &TrigPoly::monomial(0, vec![rat(1, 1)], Cyclotomic::one()));
    }

    #[test]
    fn matrix_embed_is_star_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [cov(1, &[2]), cov(1, &[3]), cov(2, &[1, -1, 1, 1])] {
            for _ in 0..50 {
                let b = random_poly(&c, 1, &mut rng);
                let b2 = random_poly(&c, 1, &mut rng);
                let mb = matrix_embed(&c, &b).unwrap();
                let mb2 = matrix_embed(&c, &b2).unwrap();
                assert_eq!(matrix_embed(&c, &b.mul(&b2)).unwrap(), mb.mul(&mb2));
                assert_eq!(matrix_embed(&c, &b.adjoint()).unwrap(), mb.adjoint());
            }
            let base = random_poly(&c, 0, &mut rng);
            let m = matrix_embed(&c, &base.at_level(1)).unwrap();
            assert!(m.is_diagonal());
            for h in 0..c.order() {
                assert_eq!(m.get(h, h), &base);
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let c = cov(2, &[2, 0, 0, 2]);
        let k = 3;
        let s: TrigPoly = sigma_unitary(&c, k, 1);
        let a = l2_isometry(&c, &s).unwrap();
        for (j, aj) in a.iter().enumerate() {
            assert_eq!(aj, &if j == k { TrigPoly::one(2, 0) } else { TrigPoly::zero(2, 0) });
        }
        let constant = TrigPoly::constant(2, 1, cyc(5, 2, (1, 3)));
        let a = l2_isometry(&c, &constant).unwrap();
        assert_eq!(a[0], TrigPoly::constant(2, 0, cyc(5, 2, (1, 3))));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let b = random_poly(&c, 1, &mut rng);
            let a = l2_isometry(&c, &b).unwrap();
            let rhs = a.iter().fold(Cyclotomic::zero(), |acc, x| acc.add(&x.l2_norm_sq()));
            assert_eq!(b.l2_norm_sq(), rhs);
        }
    }

    #[test]
    fn can_round_trips() {
        let c = cov(1, &[2]);
        let zero = vec![TrigPoly::<Cyclotomic>::zero(1, 1); 2];
        let sol = can_solve(&c, 1, &zero).unwrap();
        assert!(sol.coefficients.iter().flatten().all(TrigPoly::is_zero));
        // b(g) = ⟨g, ℓ₀⟩·1 concentrates on the column k = ℓ₀
        for l0 in 0..2 {
            let targets: Vec<TrigPoly> =
                (0..2).map(|g| TrigPoly::constant(1, 1, Cyclotomic::from_phase(&c.group().character(l0, g)))).collect();
            let sol = can_solve(&c, 1, &targets).unwrap();
            let kk = c.group().dual_neg(l0);
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(!sol.coefficients[j][k].is_zero(), j == c.group().dual_neg(kk) && k == kk, "{j} {k}");
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in [cov(1, &[2]), cov(2, &[1, -1, 1, 1])] {
            for _ in 0..10 {
                let targets: Vec<TrigPoly> = (0..c.order()).map(|_| random_poly(&c, 1, &mut rng)).collect();
                let sol = can_solve(&c, 1, &targets).unwrap();
                assert_eq!(can_apply(&c, 1, &sol.coefficients), targets);
            }
        }
    }

    #[test]
    fn can_is_bijective_on_truncation() {
        let c = cov(1, &[3]);
        let r = c.order();
        let base: Vec<Vec<Rational>> = (-2..=2).map(|m| vec![rat(m, 1)]).collect();
        let section = c.section(1);
        let mut shifted = std::collections::BTreeSet::new();
        for s in &section.values {
            for x in &base {
                shifted.insert(intlat::vec_sub(x, s));
            }
        }
        assert_eq!(shifted.len() * r, r * r * base.len());
        // injective: every basis coefficient family comes back unchanged
        for j in 0..r {
            for k in 0..r {
                for x in &base {
                    let mut a = vec![vec![TrigPoly::<Cyclotomic>::zero(1, 0); r]; r];
                    a[j][k] = TrigPoly::monomial(0, x.clone(), Cyclotomic::one());
                    let sol = can_solve(&c, 1, &can_apply(&c, 1, &a)).unwrap();
                    assert_eq!(sol.coefficients, a);
                }
            }
        }
        // surjective: every basis target is reached
        for g in 0..r {
            for xi in &shifted {
                let mut t = vec![TrigPoly::<Cyclotomic>::zero(1, 1); r];
                t[g] = TrigPoly::monomial(1, xi.clone(), Cyclotomic::one());
                can_solve(&c, 1, &t).unwrap();
            }
        }
    }

    #[test]
    fn no_unitaries_fixture() {
        let fix = FinDimCovering::no_unitaries_example();
        let report = regularity_check(&fix).unwrap();
        assert!(!report.regular);
        let one = &report.classes[1];
        assert_eq!(one.basis, vec![(0, 1), (0, 2), (1, 0), (2, 0)]);
        assert!(!one.invertible);
        assert!(report.classes[0].invertible);
        let u = report.classes[0].unitary.as_ref().unwrap();
        let um = DMatrix::from_fn(3, 3, |i, j| u[i][j]);
        assert!((um.transpose() * &um - DMatrix::identity(3, 3)).norm() < 1e-9);
    }

    #[test]
    fn trivial_and_large_fixtures() {
        let triv = FinDimCovering::new(2, vec![], vec![]).unwrap();
        let report = regularity_check(&triv).unwrap();
        assert!(report.regular && report.classes.len() == 1);
        // ℤ₅ acting on M₅ by a clock matrix is regular; shift-like supports
        let clock: Vec<Phase> = (0..5).map(|a| Phase::from_ratio(a, 5)).collect();
        let fix = FinDimCovering::new(5, vec![5], vec![clock]).unwrap();
        let report = regularity_check(&fix).unwrap();
        assert!(report.regular);
        assert!(report.classes.iter().all(|c| c.method == "schwartz_zippel"));
        // a degenerate q = 5 action: two eigenvalues only, unbalanced
        let mut gen = vec![Phase::zero(); 5];
        gen[0] = Phase::from_ratio(1, 2);
        let fix = FinDimCovering::new(5, vec![2], vec![gen]).unwrap();
        assert!(!regularity_check(&fix).unwrap().regular);
        assert!(FinDimCovering::new(2, vec![2], vec![vec![Phase::zero(), Phase::from_ratio(1, 3)]]).is_err());
    }
}
