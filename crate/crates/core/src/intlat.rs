//! Exact integer and rational linear algebra for covering matrices.
//!
//! A covering matrix `B` is a nonsingular integer matrix with `|det B| > 1`.
//! Everything downstream is expressed through `B` and its inverse transpose
//! `A = (Bᵀ)⁻¹`, whose entries have denominators dividing `|det B|`.
//!
//! ```
//! use solenoid::intlat::{IntMatrix, smith_normal_form, inverse_transpose};
//!
//! let b = IntMatrix::parse("2,4;6,8").unwrap();
//! let snf = smith_normal_form(&b).unwrap();
//! assert_eq!(snf.factors(), vec![2u32.into(), 4u32.into()]);
//!
//! let a = inverse_transpose(&IntMatrix::parse("1,-1;1,1").unwrap()).unwrap();
//! assert_eq!(a.to_string(), "1/2,-1/2;1/2,1/2");
//! ```

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number in canonical reduced form.
pub type Rational = BigRational;

/// Square `p × p` integer matrix.
pub type IntMatrix = Matrix<BigInt>;
/// Square `p × p` rational matrix.
pub type RatMatrix = Matrix<Rational>;

/// Builds the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational with denominator one.
pub fn rat_int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Parses `"n"`, `"-n"` or `"n/d"`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => match text.split_once('.') {
            // finite decimals such as "1.5" are exact rationals too
            Some((int, frac)) if !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit()) => {
                let negative = int.trim_start().starts_with('-');
                let whole: BigInt = if int.is_empty() || int == "-" { BigInt::zero() } else { int.parse().ok()? };
                let scale = num_traits::pow(BigInt::from(10), frac.len());
                let part = Rational::new(frac.parse::<BigInt>().ok()?, scale);
                let whole = Rational::from_integer(whole);
                Some(if negative { whole - part } else { whole + part })
            }
            _ => text.parse::<BigInt>().ok().map(Rational::from_integer),
        },
    }
}

/// Serde helper writing rationals as `"num/den"` strings.
pub fn serialize_rational<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

/// Serde helper for vectors of rationals.
pub fn serialize_rational_vec<S: Serializer>(
    value: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(value.iter().map(|x| x.to_string()))
}

/// Serde helper for lists of rational vectors.
pub fn serialize_rational_vecs<S: Serializer>(
    value: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(value.iter().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

/// `⌈√n⌉` for a nonnegative integer.
fn isqrt_ceil(n: &BigInt) -> BigInt {
    let s = n.sqrt();
    if &(&s * &s) < n {
        s + 1
    } else {
        s
    }
}

/// Exact square root when both numerator and denominator are perfect squares.
pub fn exact_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Rational upper bound for `√x` with relative error below `2⁻⁶⁰`.
pub fn sqrt_upper(x: &Rational) -> Rational {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    if let Some(s) = exact_sqrt(x) {
        return s;
    }
    let scale = BigInt::one() << 64u32;
    let d = x.denom();
    let radicand = x.numer() * d * &scale * &scale;
    Rational::new(isqrt_ceil(&radicand), d * &scale)
}

/// Floating value of a rational, robust for huge numerators and denominators.
pub fn rat_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to shifting both parts into range.
        let nb = x.numer().bits() as i64;
        let db = x.denom().bits() as i64;
        let shift = (nb.max(db) - 1000).max(0) as usize;
        let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (x.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Square matrix stored in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T> Matrix<T> {
    /// Wraps row-major entries. Panics when the length is not `dim²`.
    pub fn from_vec(dim: usize, entries: Vec<T>) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        assert_eq!(entries.len(), dim * dim, "expected {} entries", dim * dim);
        Matrix { dim, entries }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Matrix::from_vec(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<T>
    where
        T: Clone,
    {
        (0..self.dim).map(|i| self.get(i, j).clone()).collect()
    }
}

impl<T> Matrix<T>
where
    T: Clone + Zero + One + PartialEq,
    for<'a> &'a T: Add<&'a T, Output = T> + Sub<&'a T, Output = T> + Mul<&'a T, Output = T> + Neg<Output = T>,
{
    pub fn zero(dim: usize) -> Self {
        Matrix::from_fn(dim, |_, _| T::zero())
    }

    pub fn identity(dim: usize) -> Self {
        Matrix::from_fn(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diagonal(values: &[T]) -> Self {
        Matrix::from_fn(values.len(), |i, j| if i == j { values[i].clone() } else { T::zero() })
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix::identity(self.dim)
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| x * c)
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Matrix::from_fn(self.dim, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Matrix::from_fn(self.dim, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let p = self.dim;
        Matrix::from_fn(p, |i, j| {
            let mut acc = T::zero();
            for k in 0..p {
                acc = &acc + &(self.get(i, k) * other.get(k, j));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| {
                let mut acc = T::zero();
                for (k, vk) in v.iter().enumerate() {
                    acc = &acc + &(self.get(i, k) * vk);
                }
                acc
            })
            .collect()
    }

    /// `selfⁿ` for `n ≥ 0`.
    pub fn pow(&self, n: u32) -> Self {
        let mut result = Matrix::identity(self.dim);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        result
    }

    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            acc = &acc + self.get(i, i);
        }
        acc
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> T {
        let mut acc = T::zero();
        for x in &self.entries {
            acc = &acc + &(x * x);
        }
        acc
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let p = self.dim;
        let mut entries = Vec::with_capacity((p - 1) * (p - 1));
        for i in (0..p).filter(|&i| i != skip_row) {
            for j in (0..p).filter(|&j| j != skip_col) {
                entries.push(self.get(i, j).clone());
            }
        }
        Matrix::from_vec(p - 1, entries)
    }
}

impl IntMatrix {
    /// Parses the text format `a,b;c,d` (rows separated by `;`).
    pub fn parse(text: &str) -> Result<Self> {
        let rows = split_rows(text)?;
        let mut entries = Vec::new();
        for (row, start) in &rows {
            for (cell, pos) in row {
                let value: BigInt = cell
                    .parse()
                    .map_err(|_| Error::parse(start + pos, format!("expected an integer, found {:?}", cell)))?;
                entries.push(value);
            }
        }
        Ok(Matrix::from_vec(rows.len(), entries))
    }

    pub fn from_i64(dim: usize, entries: &[i64]) -> Self {
        Matrix::from_vec(dim, entries.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Scalar multiple of the identity.
    pub fn scalar(dim: usize, c: i64) -> Self {
        Matrix::identity(dim).scale(&BigInt::from(c))
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        let p = self.dim;
        let mut m: Vec<Vec<BigInt>> = (0..p).map(|i| self.row(i).to_vec()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..p {
            if m[k][k].is_zero() {
                match (k + 1..p).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..p {
                for j in k + 1..p {
                    let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = v / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[p - 1][p - 1]
    }

    /// Maximum absolute row sum (the operator norm induced by `‖·‖_∞`).
    pub fn row_sum_norm(&self) -> BigInt {
        (0..self.dim).map(|i| self.row(i).iter().map(|x| x.abs()).sum::<BigInt>()).max().unwrap()
    }

    pub fn to_rational(&self) -> RatMatrix {
        self.map(|x| Rational::from_integer(x.clone()))
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.dim {
                self.entries.swap(a * self.dim + j, b * self.dim + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.dim {
                self.entries.swap(i * self.dim + a, i * self.dim + b);
            }
        }
    }

    /// `row[target] += c · row[source]`.
    fn add_row_multiple(&mut self, target: usize, source: usize, c: &BigInt) {
        for j in 0..self.dim {
            let v = self.get(target, j) + c * self.get(source, j);
            self.set(target, j, v);
        }
    }

    /// `col[target] += c · col[source]`.
    fn add_col_multiple(&mut self, target: usize, source: usize, c: &BigInt) {
        for i in 0..self.dim {
            let v = self.get(i, target) + c * self.get(i, source);
            self.set(i, target, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.dim {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }
}

impl RatMatrix {
    /// Parses the text format with rational entries such as `1/2,0;0,1/2`.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = split_rows(text)?;
        let mut entries = Vec::new();
        for (row, start) in &rows {
            for (cell, pos) in row {
                let value = parse_rational(cell)
                    .ok_or_else(|| Error::parse(start + pos, format!("expected a rational, found {:?}", cell)))?;
                entries.push(value);
            }
        }
        Ok(Matrix::from_vec(rows.len(), entries))
    }

    /// Determinant by Gaussian elimination over the rationals.
    pub fn det(&self) -> Rational {
        let p = self.dim;
        let mut m: Vec<Vec<Rational>> = (0..p).map(|i| self.row(i).to_vec()).collect();
        let mut det = Rational::one();
        for k in 0..p {
            let Some(piv) = (k..p).find(|&i| !m[i][k].is_zero()) else {
                return Rational::zero();
            };
            if piv != k {
                m.swap(piv, k);
                det = -det;
            }
            det *= &m[k][k];
            for i in k + 1..p {
                if m[i][k].is_zero() {
                    continue;
                }
                let f = &m[i][k] / &m[k][k];
                for j in k..p {
                    let v = &m[i][j] - &f * &m[k][j];
                    m[i][j] = v;
                }
            }
        }
        det
    }

    /// Characteristic polynomial `det(λI − M)` as coefficients `c₀,…,c_p`
    /// (constant term first, monic), by Faddeev–LeVerrier.
    pub fn char_poly(&self) -> Vec<Rational> {
        let p = self.dim;
        let mut coeffs = vec![Rational::zero(); p + 1];
        coeffs[p] = Rational::one();
        let mut m = RatMatrix::zero(p);
        for k in 1..=p {
            let shifted = self.mul(&m).add(&RatMatrix::identity(p).scale(&coeffs[p - k + 1]));
            m = shifted;
            let am = self.mul(&m);
            coeffs[p - k] = -am.trace() / rat_int(k as i64);
        }
        coeffs
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(rat_to_f64).collect()
    }
}

type Rows<'a> = Vec<(Vec<(&'a str, usize)>, usize)>;

fn split_rows(text: &str) -> Result<Rows<'_>> {
    if text.trim().is_empty() {
        return Err(Error::parse(0, "empty matrix"));
    }
    let mut rows = Vec::new();
    let mut offset = 0;
    for row in text.split(';') {
        let mut cells = Vec::new();
        let mut cell_offset = 0;
        for cell in row.split(',') {
            let lead = cell.len() - cell.trim_start().len();
            cells.push((cell.trim(), cell_offset + lead));
            cell_offset += cell.len() + 1;
        }
        rows.push((cells, offset));
        offset += row.len() + 1;
    }
    let p = rows.len();
    for (cells, start) in &rows {
        if cells.len() != p {
            return Err(Error::parse(*start, format!("row has {} entries, expected {} (square matrix)", cells.len(), p)));
        }
        for (cell, pos) in cells {
            if cell.is_empty() {
                return Err(Error::parse(start + pos, "empty entry"));
            }
        }
    }
    Ok(rows)
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(";")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", self.entries[i * self.dim + j])?;
            }
        }
        Ok(())
    }
}

impl<T: fmt::Display> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Checks the covering-matrix invariant `det B ∉ {0, ±1}`.
pub fn check_covering(b: &IntMatrix) -> Result<BigInt> {
    let det = b.det();
    if det.is_zero() {
        Err(Error::SingularMatrix)
    } else if det.abs().is_one() {
        Err(Error::TrivialCovering)
    } else {
        Ok(det)
    }
}

/// Smith normal form `S·B·T = D`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmithForm {
    pub s: IntMatrix,
    pub t: IntMatrix,
    pub d: IntMatrix,
}

impl SmithForm {
    /// Invariant factors `d₁ | d₂ | … | d_p`.
    pub fn factors(&self) -> Vec<BigInt> {
        (0..self.d.dim()).map(|i| self.d.get(i, i).clone()).collect()
    }

    /// Checks `S·B·T = D`, unimodularity, positivity and the divisibility chain.
    pub fn verify(&self, b: &IntMatrix) -> bool {
        let f = self.factors();
        let diagonal = self.d == IntMatrix::diagonal(&f);
        let chain = f.windows(2).all(|w| w[1].is_multiple_of(&w[0]));
        diagonal
            && chain
            && f.iter().all(|x| x.is_positive())
            && self.s.mul(b).mul(&self.t) == self.d
            && self.s.det().abs().is_one()
            && self.t.det().abs().is_one()
    }
}

/// Classical Smith reduction with pivot = least nonzero `|entry|`, ties broken
/// in row-major order.
pub fn smith_normal_form(b: &IntMatrix) -> Result<SmithForm> {
    if b.det().is_zero() {
        return Err(Error::SingularMatrix);
    }
    let p = b.dim();
    let mut a = b.clone();
    let mut s = IntMatrix::identity(p);
    let mut t = IntMatrix::identity(p);
    for k in 0..p {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in k..p {
                for j in k..p {
                    let x = a.get(i, j);
                    if x.is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| x.abs() < a.get(bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let (pi, pj) = best.expect("nonsingular matrix has a nonzero pivot");
            a.swap_rows(k, pi);
            s.swap_rows(k, pi);
            a.swap_cols(k, pj);
            t.swap_cols(k, pj);

            let mut clean = true;
            for i in k + 1..p {
                let q = a.get(i, k).div_floor(a.get(k, k));
                if !q.is_zero() {
                    let c = -q;
                    a.add_row_multiple(i, k, &c);
                    s.add_row_multiple(i, k, &c);
                }
                clean &= a.get(i, k).is_zero();
            }
            for j in k + 1..p {
                let q = a.get(k, j).div_floor(a.get(k, k));
                if !q.is_zero() {
                    let c = -q;
                    a.add_col_multiple(j, k, &c);
                    t.add_col_multiple(j, k, &c);
                }
                clean &= a.get(k, j).is_zero();
            }
            if !clean {
                continue;
            }
            let pivot = a.get(k, k).clone();
            let offender = (k + 1..p).find(|&i| (k + 1..p).any(|j| !a.get(i, j).is_multiple_of(&pivot)));
            match offender {
                Some(i) => {
                    a.add_row_multiple(k, i, &BigInt::one());
                    s.add_row_multiple(k, i, &BigInt::one());
                }
                None => break,
            }
        }
        if a.get(k, k).is_negative() {
            a.negate_row(k);
            s.negate_row(k);
        }
    }
    let form = SmithForm { s, t, d: a };
    debug_assert!(form.verify(b));
    Ok(form)
}

/// Matrix of cofactors `C_{ij} = (−1)^{i+j} M_{ij}`.
///
/// For `B = (a b; c d)` this is `(d −c; −b a)`. It satisfies `B·Cᵀ = det(B)·I`;
/// its transpose is the adjugate, see [`adjugate`].
pub fn cofactor_matrix(b: &IntMatrix) -> IntMatrix {
    let p = b.dim();
    if p == 1 {
        return IntMatrix::identity(1);
    }
    IntMatrix::from_fn(p, |i, j| {
        let m = b.minor(i, j).det();
        if (i + j) % 2 == 0 {
            m
        } else {
            -m
        }
    })
}

/// Classical adjugate, `adj(B)·B = B·adj(B) = det(B)·I`.
pub fn adjugate(b: &IntMatrix) -> IntMatrix {
    cofactor_matrix(b).transpose()
}

/// `A = (Bᵀ)⁻¹`, equal to the cofactor matrix divided by `det B`.
pub fn inverse_transpose(b: &IntMatrix) -> Result<RatMatrix> {
    let det = b.det();
    if det.is_zero() {
        return Err(Error::SingularMatrix);
    }
    let det = Rational::from_integer(det);
    Ok(cofactor_matrix(b).map(|x| Rational::from_integer(x.clone()) / &det))
}

/// `B⁻¹ = adj(B)/det B`.
pub fn inverse(b: &IntMatrix) -> Result<RatMatrix> {
    Ok(inverse_transpose(b)?.transpose())
}

/// Largest exponent tried when looking for a Frobenius contraction.
pub const N_MAX: u32 = 64;

/// Why [`purely_expanding`] decided the way it did.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpansionCertificate {
    /// `‖A^N‖²_F < 1`, exact.
    Contraction {
        exponent: u32,
        #[serde(serialize_with = "serialize_rational")]
        frobenius_sq: Rational,
    },
    /// The Schur–Cohn recursion stopped with `|a₀| > |a_n|` at this step, so
    /// `char(A)` has a root of modulus at least one.
    RootOutsideDisk { step: usize },
    /// Schur–Cohn degenerated with `|a₀| = |a_n|`: boundary spectrum. This is
    /// what a unit-modulus root of `char(A)` produces; reciprocal root pairs
    /// `z, 1/z̄` can also trigger it. Either way some root has modulus `≥ 1`.
    UnitModulusRoot { step: usize },
}

/// Outcome of the exact root-location test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchurCohn {
    /// Every root lies strictly inside the unit disk.
    Stable,
    Unstable { step: usize },
    Degenerate { step: usize },
}

/// Schur–Cohn test on a real polynomial, coefficients constant term first.
pub fn schur_cohn(poly: &[Rational]) -> SchurCohn {
    let mut a: Vec<Rational> = poly.to_vec();
    while a.len() > 1 && a.last().unwrap().is_zero() {
        a.pop();
    }
    let mut step = 0;
    while a.len() > 1 {
        let n = a.len() - 1;
        let lead = a[n].abs();
        let constant = a[0].abs();
        if constant > lead {
            return SchurCohn::Unstable { step };
        }
        if constant == lead {
            return SchurCohn::Degenerate { step };
        }
        let reduced: Vec<Rational> = (0..n).map(|j| &a[n] * &a[j + 1] - &a[0] * &a[n - j - 1]).collect();
        a = reduced;
        step += 1;
    }
    SchurCohn::Stable
}

/// Exact decision whether `A = (Bᵀ)⁻¹` has spectral radius below one.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub purely_expanding: bool,
    pub certificate: ExpansionCertificate,
    /// Upper bounds for `‖Aⁿ‖_F`, `n = 0, 1, …`.
    #[serde(serialize_with = "serialize_rational_vec")]
    pub norm_sequence: Vec<Rational>,
    /// Upper bound on `Σₙ ‖Aⁿ‖_F` when purely expanding.
    #[serde(serialize_with = "serialize_opt_rational")]
    pub tail_bound: Option<Rational>,
    /// Floating-point spectral radius of `A`, for display only.
    pub spectral_radius_estimate: f64,
}

fn serialize_opt_rational<S: Serializer>(value: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

/// Float spectral radius of a rational matrix.
pub fn spectral_radius_f64(m: &RatMatrix) -> f64 {
    let p = m.dim();
    let dm = nalgebra::DMatrix::from_row_slice(p, p, &m.to_f64());
    dm.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Decides whether `B` is purely expanding, i.e. `spr(A) < 1`.
///
/// Powers of `A` are searched for an exact Frobenius contraction up to
/// [`N_MAX`]; otherwise the Schur–Cohn recursion on `char(A)` settles the
/// question. When Schur–Cohn reports stability the search simply continues,
/// which must terminate.
pub fn purely_expanding(b: &IntMatrix) -> Result<ExpansionReport> {
    let a = inverse_transpose(b)?;
    let p = a.dim();
    let radius = spectral_radius_f64(&a);
    let mut powers_sq = vec![Rational::from_integer(BigInt::from(p as i64))];
    let mut power = a.clone();
    let mut found = None;
    for n in 1..=N_MAX {
        let f = power.frobenius_sq();
        powers_sq.push(f.clone());
        if f < Rational::one() {
            found = Some(n);
            break;
        }
        power = power.mul(&a);
    }
    if found.is_none() {
        match schur_cohn(&a.char_poly()) {
            SchurCohn::Unstable { step } => {
                return Ok(ExpansionReport {
                    purely_expanding: false,
                    certificate: ExpansionCertificate::RootOutsideDisk { step },
                    norm_sequence: powers_sq.iter().map(sqrt_upper).collect(),
                    tail_bound: None,
                    spectral_radius_estimate: radius,
                })
            }
            SchurCohn::Degenerate { step } => {
                return Ok(ExpansionReport {
                    purely_expanding: false,
                    certificate: ExpansionCertificate::UnitModulusRoot { step },
                    norm_sequence: powers_sq.iter().map(sqrt_upper).collect(),
                    tail_bound: None,
                    spectral_radius_estimate: radius,
                })
            }
            SchurCohn::Stable => {
                let mut n = N_MAX;
                loop {
                    power = power.mul(&a);
                    n += 1;
                    let f = power.frobenius_sq();
                    powers_sq.push(f.clone());
                    if f < Rational::one() {
                        found = Some(n);
                        break;
                    }
                }
            }
        }
    }
    let exponent = found.unwrap();
    let norms: Vec<Rational> = powers_sq.iter().map(sqrt_upper).collect();
    let contraction_sq = powers_sq[exponent as usize].clone();
    let mut q = norms[exponent as usize].clone();
    if q >= Rational::one() {
        // sqrt_upper overshot; fall back on the crude bound (1 + q²)/2 ≥ q.
        q = (Rational::one() + &contraction_sq) / rat_int(2);
    }
    let head: Rational = norms[..exponent as usize].iter().fold(Rational::zero(), |acc, x| acc + x);
    let tail = head / (Rational::one() - q);
    Ok(ExpansionReport {
        purely_expanding: true,
        certificate: ExpansionCertificate::Contraction { exponent, frobenius_sq: contraction_sq },
        norm_sequence: norms,
        tail_bound: Some(tail),
        spectral_radius_estimate: radius,
    })
}

/// Exact squared Euclidean norm of a rational vector.
pub fn norm_sq(v: &[Rational]) -> Rational {
    v.iter().fold(Rational::zero(), |acc, x| acc + x * x)
}

/// Componentwise fractional part, in `[0,1)ᵖ`.
pub fn frac_vec(v: &[Rational]) -> Vec<Rational> {
    v.iter().map(|x| x - x.floor()).collect()
}

pub fn is_integral(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_integer())
}

pub fn vec_add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_neg(a: &[Rational]) -> Vec<Rational> {
    a.iter().map(|x| -x).collect()
}

pub fn int_vec(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| rat_int(x)).collect()
}
