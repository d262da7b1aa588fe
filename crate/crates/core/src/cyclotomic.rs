//! Exact arithmetic in cyclotomic fields `ℚ(ζ_N)`.
//!
//! Every coefficient produced by characters, sections and Weyl phases is a
//! rational combination of roots of unity. Storing such a number in the power
//! basis `1, ζ, …, ζ^{φ(N)−1}` reduced modulo the cyclotomic polynomial `Φ_N`
//! makes the representation canonical, so equality is exact.
//!
//! ```
//! use solenoid::cyclotomic::Cyclotomic;
//! use solenoid::lattice::Phase;
//!
//! // 1 + ω + ω² = 0 for a primitive cube root of unity ω.
//! let w = Cyclotomic::from_phase(&Phase::from_ratio(1, 3));
//! let sum = Cyclotomic::one().add(&w).add(&w.mul(&w));
//! assert!(sum.is_zero());
//! ```

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::intlat::{rat_to_f64, Rational};
use crate::lattice::Phase;

/// Largest conductor accepted; keeps reductions cheap.
pub const MAX_ORDER: u64 = 1 << 16;

/// Coefficients of `Φ_N`, constant term first.
fn cyclotomic_poly(n: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n − 1 divided by Φ_d for every proper divisor d.
    let mut poly = vec![0i64; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let divisor = cyclotomic_poly(d);
            poly = divide_exact(&poly, &divisor);
        }
    }
    let poly = Arc::new(poly);
    cache.lock().unwrap().insert(n, poly.clone());
    poly
}

fn divide_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut quot = vec![0i64; qd + 1];
    for i in (0..=qd).rev() {
        let c = rem[i + dd];
        quot[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    quot
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    (1..=n).filter(|&k| k.gcd(&n) == 1).count() as u64
}

/// An element of `ℚ(ζ_N)`, `ζ_N = e^{2πi/N}`.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u64,
    /// Power-basis coordinates, length `φ(order)`.
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic { order: 1, coeffs: vec![Rational::zero()] }
    }

    pub fn one() -> Self {
        Cyclotomic::from_rational(&Rational::one())
    }

    pub fn from_rational(q: &Rational) -> Self {
        Cyclotomic { order: 1, coeffs: vec![q.clone()] }
    }

    /// `e^{2πi·phase}`.
    pub fn from_phase(phase: &Phase) -> Self {
        let v = phase.value();
        let n = v.denom().to_u64().filter(|&n| n <= MAX_ORDER).expect("phase denominator too large");
        let j = v.numer().to_u64().unwrap() as usize;
        let mut poly = vec![Rational::zero(); n as usize];
        poly[j] = Rational::one();
        Cyclotomic::reduce(n, poly)
    }

    /// `q·e^{2πi·phase}`.
    pub fn monomial(q: &Rational, phase: &Phase) -> Self {
        Cyclotomic::from_phase(phase).scale(q)
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Rational value when the number lies in `ℚ`.
    pub fn as_rational(&self) -> Option<Rational> {
        // power basis starts with 1, so ℚ is the span of the first coordinate
        if self.coeffs.iter().skip(1).all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn reduce(order: u64, mut poly: Vec<Rational>) -> Self {
        let phi = cyclotomic_poly(order);
        let deg = phi.len() - 1;
        let support: Vec<(usize, i64)> = phi.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect();
        for i in (deg..poly.len()).rev() {
            if poly[i].is_zero() {
                continue;
            }
            let c = std::mem::take(&mut poly[i]);
            for &(j, pj) in &support {
                if i - deg + j == i {
                    continue;
                }
                let delta = &c * Rational::from_integer(BigInt::from(pj));
                poly[i - deg + j] -= delta;
            }
        }
        poly.truncate(deg);
        poly.resize(deg, Rational::zero());
        let mut out = Cyclotomic { order, coeffs: poly };
        if out.order > 1 && out.is_zero() {
            out = Cyclotomic::zero();
        }
        out
    }

    /// Rewrites the element over `ℚ(ζ_M)` with `order | M`.
    fn lift(&self, m: u64) -> Vec<Rational> {
        debug_assert_eq!(m % self.order, 0);
        let step = (m / self.order) as usize;
        let mut poly = vec![Rational::zero(); m as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                poly[(i * step) % m as usize] += c;
            }
        }
        poly
    }

    fn common(&self, other: &Self) -> u64 {
        let m = self.order.lcm(&other.order);
        assert!(m <= MAX_ORDER, "cyclotomic conductor too large");
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.order == other.order {
            let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
            let mut out = Cyclotomic { order: self.order, coeffs };
            if out.is_zero() {
                out = Cyclotomic::zero();
            }
            return out;
        }
        let m = self.common(other);
        let a = self.lift(m);
        let b = other.lift(m);
        Cyclotomic::reduce(m, a.into_iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn neg(&self) -> Self {
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Cyclotomic::zero();
        }
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| c * q).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Cyclotomic::zero();
        }
        if self.order == 1 {
            return other.scale(&self.coeffs[0]);
        }
        if other.order == 1 {
            return self.scale(&other.coeffs[0]);
        }
        let m = self.common(other);
        let (a, b) = if self.order == m && other.order == m {
            (self.coeffs.clone(), other.coeffs.clone())
        } else {
            (self.lift(m), other.lift(m))
        };
        let mut prod = vec![Rational::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        // fold exponents ≥ m back using ζ^m = 1 before reducing
        let mut folded = vec![Rational::zero(); m as usize];
        for (i, c) in prod.into_iter().enumerate() {
            if !c.is_zero() {
                folded[i % m as usize] += c;
            }
        }
        Cyclotomic::reduce(m, folded)
    }

    /// Complex conjugate, `ζ ↦ ζ⁻¹`.
    pub fn conj(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        let n = self.order as usize;
        let mut poly = vec![Rational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                poly[(n - i) % n] += c;
            }
        }
        Cyclotomic::reduce(self.order, poly)
    }

    /// `|z|²`, exact.
    pub fn abs_sq(&self) -> Self {
        self.mul(&self.conj())
    }

    pub fn to_complex(&self) -> Complex64 {
        let n = self.order as f64;
        let mut acc = Complex64::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / n;
                acc += Complex64::new(angle.cos(), angle.sin()) * rat_to_f64(c);
            }
        }
        acc
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl Eq for Cyclotomic {}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{}", q);
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}·ζ{}", c, self.order)?,
                _ => write!(f, "{}·ζ{}^{}", c, self.order, i)?,
            }
        }
        Ok(())
    }
}
