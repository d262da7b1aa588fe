//! Rational rotation algebras `A_θ`, `θ = p/q`, as `M_q`-valued functions on `ℝ²`.
//!
//! The fiber is generated by the clock `U₀ = diag(e^{2πi(k−1)θ})` and the
//! cyclic shift `V₀e_k = e_{k+1}`, so that `U₀V₀ = e^{2πiθ}V₀U₀`. The algebra
//! generators are `U(t) = e^{2πiθt₁}U₀` and `V(t) = e^{2πiθt₂}V₀`.
//!
//! Every element built from generators is a scalar phase, a character of `t`
//! and a monomial matrix with root-of-unity entries, so all identities below
//! are checked exactly.
//!
//! ```
//! use solenoid::nctorus::{NcTorus, RationalAngle};
//!
//! let t = NcTorus::new(RationalAngle::new(1, 3).unwrap());
//! let (u, v) = (t.u(), t.v());
//! let phase = u.commutation_phase(&v).unwrap();
//! assert_eq!(phase.to_string(), "1/3");
//! ```

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::covalg::{self, MatTrigPoly, TrigPoly};
use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};
use crate::intlat::{self, rat, rat_to_f64, IntMatrix, Rational};
use crate::lattice::{pairing, Covering, Phase};

/// `θ = p/q` in lowest terms with `0 ≤ p < q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RationalAngle {
    pub p: u64,
    pub q: u64,
}

impl RationalAngle {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::precondition("θ needs a positive denominator"));
        }
        let g = p.gcd(&q);
        let (p, q) = (p / g, q / g);
        if p >= q && !(p == 0 && q == 1) {
            return Err(Error::precondition("θ must lie in [0, 1)"));
        }
        Ok(RationalAngle { p, q })
    }

    /// Accepts `p/q` or an integer `0`.
    pub fn parse(text: &str) -> Result<Self> {
        let x = intlat::parse_rational(text.trim()).ok_or_else(|| Error::parse(0, format!("not a rational angle: {text:?}")))?;
        if x.is_negative() {
            return Err(Error::precondition("θ must lie in [0, 1)"));
        }
        let p = x.numer().to_u64().ok_or_else(|| Error::precondition("θ numerator too large"))?;
        let q = x.denom().to_u64().ok_or_else(|| Error::precondition("θ denominator too large"))?;
        RationalAngle::new(p, q)
    }

    pub fn value(&self) -> Rational {
        rat(self.p as i64, self.q as i64)
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// A `q×q` monomial matrix: row `h` holds `e^{2πi·phases[h]}` in column `cols[h]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseMatrix {
    pub cols: Vec<usize>,
    pub phases: Vec<Phase>,
}

impl PhaseMatrix {
    pub fn identity(q: usize) -> Self {
        PhaseMatrix { cols: (0..q).collect(), phases: vec![Phase::zero(); q] }
    }

    pub fn size(&self) -> usize {
        self.cols.len()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cols = self.cols.iter().map(|&c| other.cols[c]).collect();
        let phases = self.phases.iter().zip(&self.cols).map(|(p, &c)| p.add(&other.phases[c])).collect();
        PhaseMatrix { cols, phases }
    }

    /// Inverse, which is also the adjoint.
    pub fn inverse(&self) -> Self {
        let q = self.size();
        let mut cols = vec![0; q];
        let mut phases = vec![Phase::zero(); q];
        for h in 0..q {
            cols[self.cols[h]] = h;
            phases[self.cols[h]] = self.phases[h].neg();
        }
        PhaseMatrix { cols, phases }
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = PhaseMatrix::identity(self.size());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `φ` with `self = e^{2πiφ}·other`, if the two differ by a scalar.
    pub fn scalar_ratio(&self, other: &Self) -> Option<Phase> {
        if self.cols != other.cols {
            return None;
        }
        let first = self.phases.first()?.sub(&other.phases[0]);
        self.phases.iter().zip(&other.phases).all(|(a, b)| a.sub(b) == first).then_some(first)
    }

    /// Exact trace.
    pub fn trace(&self) -> Cyclotomic {
        (0..self.size()).filter(|&h| self.cols[h] == h).fold(Cyclotomic::zero(), |acc, h| acc.add(&Cyclotomic::from_phase(&self.phases[h])))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let q = self.size();
        let mut m = DMatrix::zeros(q, q);
        for h in 0..q {
            m[(h, self.cols[h])] = self.phases[h].to_complex();
        }
        m
    }

    /// Row-major exact entries.
    pub fn to_cyclotomic(&self) -> Vec<Cyclotomic> {
        let q = self.size();
        let mut out = vec![Cyclotomic::zero(); q * q];
        for h in 0..q {
            out[h * q + self.cols[h]] = Cyclotomic::from_phase(&self.phases[h]);
        }
        out
    }
}

/// `U₀ = diag(1, e^{2πiθ}, …, e^{2πi(q−1)θ})`.
pub fn clock(theta: &RationalAngle) -> PhaseMatrix {
    let q = theta.q as usize;
    PhaseMatrix { cols: (0..q).collect(), phases: (0..q).map(|h| Phase::new(theta.value() * rat(h as i64, 1))).collect() }
}

/// `V₀e_k = e_{k+1}` cyclically, i.e. `(V₀)_{hk} = δ_{h,k+1} + δ_{h,1}δ_{k,q}`.
pub fn shift(q: usize) -> PhaseMatrix {
    PhaseMatrix { cols: (0..q).map(|h| (h + q - 1) % q).collect(), phases: vec![Phase::zero(); q] }
}

/// The transpose of [`shift`], `(V₀)_{hk} = δ_{h+1,k} + δ_{h,q}δ_{k,1}`. With the
/// clock it satisfies `U₀V₀ = e^{−2πiθ}V₀U₀`, the opposite orientation.
pub fn shift_transposed(q: usize) -> PhaseMatrix {
    shift(q).inverse()
}

/// `(U₀, V₀)` with `U₀V₀ = e^{2πiθ}V₀U₀`.
pub fn clock_shift(theta: &RationalAngle) -> (PhaseMatrix, PhaseMatrix) {
    (clock(theta), shift(theta.q as usize))
}

/// `W(n)^k = e^{2πi·phase} W(kn)`; returns `(phase, kn)` with `phase = −θk(k−1)n₁n₂/2`.
pub fn weyl_power(theta: &RationalAngle, n: [i64; 2], k: i64) -> (Phase, [i64; 2]) {
    let x = theta.value() * rat(-k * (k - 1) * n[0] * n[1], 2);
    (Phase::new(x), [k * n[0], k * n[1]])
}

/// `e^{2πi·phase} e^{2πi⟨freq,t⟩} M`. Equality compares the product, so a
/// scalar may sit either in `phase` or in the entries of `M`.
#[derive(Clone, Debug)]
pub struct WeylMonomial {
    pub phase: Phase,
    pub freq: Vec<Rational>,
    pub matrix: PhaseMatrix,
}

impl WeylMonomial {
    pub fn identity(q: usize) -> Self {
        WeylMonomial { phase: Phase::zero(), freq: vec![Rational::zero(); 2], matrix: PhaseMatrix::identity(q) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        WeylMonomial {
            phase: self.phase.add(&other.phase),
            freq: intlat::vec_add(&self.freq, &other.freq),
            matrix: self.matrix.mul(&other.matrix),
        }
    }

    pub fn inverse(&self) -> Self {
        WeylMonomial { phase: self.phase.neg(), freq: intlat::vec_neg(&self.freq), matrix: self.matrix.inverse() }
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = WeylMonomial::identity(self.matrix.size());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn scale(&self, phase: &Phase) -> Self {
        WeylMonomial { phase: self.phase.add(phase), ..self.clone() }
    }

    /// `φ` with `self = e^{2πiφ}·other`, if any.
    pub fn scalar_ratio(&self, other: &Self) -> Option<Phase> {
        if self.freq != other.freq {
            return None;
        }
        Some(self.matrix.scalar_ratio(&other.matrix)?.add(&self.phase).sub(&other.phase))
    }

    /// `φ` with `xy = e^{2πiφ}yx`.
    pub fn commutation_phase(&self, other: &Self) -> Option<Phase> {
        self.mul(other).scalar_ratio(&other.mul(self))
    }

    pub fn to_mat(&self, level: u32) -> MatTrigPoly<Cyclotomic> {
        let q = self.matrix.size();
        let mut out = MatTrigPoly::zero(q, 2, level);
        for h in 0..q {
            let c = Cyclotomic::from_phase(&self.phase.add(&self.matrix.phases[h]));
            out.set(h, self.matrix.cols[h], TrigPoly::monomial(level, self.freq.clone(), c));
        }
        out
    }

    pub fn eval(&self, t: &[f64]) -> DMatrix<Complex64> {
        let dot: f64 = self.freq.iter().zip(t).map(|(x, y)| rat_to_f64(x) * y).sum();
        let angle = 2.0 * std::f64::consts::PI * dot;
        self.matrix.to_dense() * (self.phase.to_complex() * Complex64::new(angle.cos(), angle.sin()))
    }
}

impl PartialEq for WeylMonomial {
    fn eq(&self, other: &Self) -> bool {
        self.scalar_ratio(other).is_some_and(|p| p.is_zero())
    }
}

impl Eq for WeylMonomial {}

impl Serialize for WeylMonomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_json::json!({
            "phase": self.phase.to_string(),
            "freq": self.freq.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "cols": self.matrix.cols,
            "entry_phases": self.matrix.phases.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        })
        .serialize(s)
    }
}

/// `A_θ` for rational `θ`.
#[derive(Clone, Debug)]
pub struct NcTorus {
    pub theta: RationalAngle,
    u0: PhaseMatrix,
    v0: PhaseMatrix,
}

impl NcTorus {
    pub fn new(theta: RationalAngle) -> Self {
        let (u0, v0) = clock_shift(&theta);
        NcTorus { theta, u0, v0 }
    }

    pub fn q(&self) -> usize {
        self.theta.q as usize
    }

    /// `W₀(n) = U₀^{n₁}V₀^{n₂}`.
    pub fn w0(&self, n: [i64; 2]) -> PhaseMatrix {
        self.u0.pow(n[0]).mul(&self.v0.pow(n[1]))
    }

    pub fn u(&self) -> WeylMonomial {
        WeylMonomial { phase: Phase::zero(), freq: vec![self.theta.value(), Rational::zero()], matrix: self.u0.clone() }
    }

    pub fn v(&self) -> WeylMonomial {
        WeylMonomial { phase: Phase::zero(), freq: vec![Rational::zero(), self.theta.value()], matrix: self.v0.clone() }
    }

    /// `W(n) = U^{n₁}V^{n₂}`.
    pub fn weyl(&self, n: [i64; 2]) -> WeylMonomial {
        self.u().pow(n[0]).mul(&self.v().pow(n[1]))
    }

    /// `W₀(Jn)` with `J = (0 1; −1 0)`, the unitary implementing `γ̃_n`.
    pub fn implementing_unitary(&self, n: &[BigInt]) -> PhaseMatrix {
        let q = BigInt::from(self.q());
        let red = |x: &BigInt| x.mod_floor(&q).to_i64().unwrap();
        self.w0([red(&n[1]), -red(&n[0])])
    }

    /// `γ̃_n(x)(t) = ad(W₀(Jn))[x(t − n)]`.
    pub fn gamma(&self, n: &[BigInt], x: &WeylMonomial) -> WeylMonomial {
        let w = self.implementing_unitary(n);
        let shift = pairing(&x.freq, &crate::lattice::to_rational_vec(n)).neg();
        WeylMonomial { phase: x.phase.add(&shift), freq: x.freq.clone(), matrix: w.mul(&x.matrix).mul(&w.inverse()) }
    }

    pub fn gamma_mat(&self, n: &[BigInt], f: &MatTrigPoly<Cyclotomic>) -> MatTrigPoly<Cyclotomic> {
        let w = self.implementing_unitary(n).to_cyclotomic();
        covalg::deck_action_mat(&crate::lattice::to_rational_vec(n), &w, f)
    }

    /// `τ(f) = (1/q)·(zero Fourier coefficient of tr f)`, at any level.
    pub fn trace(&self, f: &MatTrigPoly<Cyclotomic>) -> Cyclotomic {
        f.trace()
    }

    /// `‖[D, x]‖ = 2π‖(h,k)‖` for a monomial of frequency `θ(h,k)`.
    pub fn lip_seminorm_monomial(&self, x: &WeylMonomial) -> f64 {
        let scale = if self.theta.p == 0 { Rational::from_integer(1.into()) } else { self.theta.value() };
        let sq: f64 = x.freq.iter().map(|f| rat_to_f64(&(f / &scale)).powi(2)).sum();
        2.0 * std::f64::consts::PI * sq.sqrt()
    }
}

/// A self-covering `A_θ ⊂ ℬ` given by a 2×2 matrix `B` with `det B ≡ 1 (mod q)`.
#[derive(Clone, Debug)]
pub struct NcCovering {
    pub torus: NcTorus,
    cov: Covering,
}

impl NcCovering {
    pub fn new(theta: RationalAngle, b: &IntMatrix) -> Result<Self> {
        if b.dim() != 2 {
            return Err(Error::precondition("rotation algebra coverings need a 2×2 matrix"));
        }
        let det = b.det();
        if det.abs() <= BigInt::from(1) {
            return Err(Error::precondition(format!("|det B| = {} must exceed 1", det.abs())));
        }
        let q = BigInt::from(theta.q);
        if !(&det - BigInt::from(1)).mod_floor(&q).is_zero() {
            return Err(Error::NotSelfCovering { det: det.to_string(), q: theta.q });
        }
        Ok(NcCovering { torus: NcTorus::new(theta), cov: Covering::new(b)? })
    }

    pub fn covering(&self) -> &Covering {
        &self.cov
    }

    fn entries(&self) -> [i64; 4] {
        let e: Vec<i64> = self.cov.b().entries().iter().map(|x| x.to_i64().expect("matrix entries fit in i64")).collect();
        [e[0], e[1], e[2], e[3]]
    }

    /// `(U_ℬ, V_ℬ)`: `e^{πiθbd(1−a+c)}e^{2πiθ⟨Ae₁,t⟩}W₀(C_Be₁)` and its partner.
    pub fn generators(&self) -> (WeylMonomial, WeylMonomial) {
        let [a, b, c, d] = self.entries();
        let theta = self.torus.theta.value();
        let am = self.cov.a();
        let col = |j: usize| vec![&theta * am.get(0, j), &theta * am.get(1, j)];
        // C_B = (d −c; −b a)
        let ub = WeylMonomial {
            phase: Phase::new(&theta * rat(b * d * (1 - a + c), 2)),
            freq: col(0),
            matrix: self.torus.w0([d, -b]),
        };
        let vb = WeylMonomial {
            phase: Phase::new(&theta * rat(a * c * (1 + b - d), 2)),
            freq: col(1),
            matrix: self.torus.w0([-c, a]),
        };
        (ub, vb)
    }

    /// `E(f) = (1/r)Σ_g γ̃_{B^{n−1}ĝ}(f)` on a level-`n` element.
    pub fn expectation(&self, f: &MatTrigPoly<Cyclotomic>) -> MatTrigPoly<Cyclotomic> {
        let n = f.level().max(1);
        let r = self.cov.order();
        let bn = self.cov.b().pow(n - 1);
        let mut acc = MatTrigPoly::zero(f.size(), 2, f.level());
        for rep in &self.cov.group().group_reps {
            let g = bn.mul_vec(rep);
            acc = acc.add(&self.torus.gamma_mat(&g, f));
        }
        acc.scale(&Cyclotomic::from_rational(&rat(1, r as i64)))
    }

    /// Checks the relations tying `U_ℬ, V_ℬ` to `U, V`, all exactly.
    pub fn fixed_point_identities(&self) -> NcReport {
        let t = &self.torus;
        let [a, b, c, d] = self.entries();
        let (ub, vb) = self.generators();
        let (u, v) = (t.u(), t.v());
        let mut checks = Vec::new();
        let mut check = |name: &str, holds: bool, detail: String| checks.push(IdentityCheck { name: name.to_string(), holds, detail });

        let u_back = ub.pow(a).mul(&vb.pow(b));
        check("U = U_B^a V_B^b", u_back == u, mismatch(&u_back, &u));
        let v_back = ub.pow(c).mul(&vb.pow(d));
        check("V = U_B^c V_B^d", v_back == v, mismatch(&v_back, &v));

        let theta = Phase::new(t.theta.value());
        let base = u.commutation_phase(&v);
        check("UV = e(θ) VU", base.as_ref() == Some(&theta), format!("{:?}", base.as_ref().map(Phase::to_string)));
        let gen = ub.commutation_phase(&vb);
        check("U_B V_B = e(θ) V_B U_B", gen.as_ref() == Some(&theta), format!("{:?}", gen.as_ref().map(Phase::to_string)));

        let det = self.cov.det().clone();
        let expected = theta.times(&det);
        let u1 = u.pow(a).mul(&v.pow(b));
        let v1 = u.pow(c).mul(&v.pow(d));
        let scaled = u1.commutation_phase(&v1);
        check("U^aV^b, U^cV^d commute up to det B·θ", scaled.as_ref() == Some(&expected), format!("{:?}", scaled.as_ref().map(Phase::to_string)));

        // U_ℬ, V_ℬ lie in the level-1 algebra; U, V are fixed by all of ℤ²
        let bcols: Vec<Vec<BigInt>> = (0..2).map(|j| self.cov.b().column(j)).collect();
        let e: Vec<Vec<BigInt>> = vec![vec![1.into(), 0.into()], vec![0.into(), 1.into()]];
        let level1 = bcols.iter().all(|m| t.gamma(m, &ub) == ub && t.gamma(m, &vb) == vb);
        check("U_B, V_B invariant under B Z^2", level1, String::new());
        let level0 = e.iter().all(|m| t.gamma(m, &u) == u && t.gamma(m, &v) == v);
        check("U, V invariant under Z^2", level0, String::new());
        // at θ = 0 the generators are constant and nothing moves
        let moved = t.theta.p == 0 || e.iter().any(|m| t.gamma(m, &ub) != ub || t.gamma(m, &vb) != vb);
        check("deck group moves U_B or V_B", moved, String::new());

        let one = MatTrigPoly::identity(t.q(), 2, 0);
        let tu = t.trace(&u.to_mat(0));
        let tuu = t.trace(&u.inverse().to_mat(0).mul(&u.to_mat(0)));
        let tu_expected = if t.q() == 1 && t.theta.p == 0 { Cyclotomic::one() } else { Cyclotomic::zero() };
        check("τ(1) = 1", t.trace(&one) == Cyclotomic::one(), String::new());
        check("τ(U) = 0", tu == tu_expected, tu.to_string());
        check("τ(U*U) = 1", tuu == Cyclotomic::one(), tuu.to_string());

        let first_mismatch = checks.iter().find(|c| !c.holds).map(|c| format!("{}: {}", c.name, c.detail));
        NcReport {
            theta: t.theta.to_string(),
            matrix: self.cov.b().to_string(),
            det: det.to_string(),
            u_b: ub,
            v_b: vb,
            base_commutator: base.map(|p| p.to_string()),
            generator_commutator: gen.map(|p| p.to_string()),
            scaled_commutator: scaled.map(|p| p.to_string()),
            expected_scaled: expected.to_string(),
            all_hold: checks.iter().all(|c| c.holds),
            checks,
            first_mismatch,
        }
    }
}

fn mismatch(got: &WeylMonomial, want: &WeylMonomial) -> String {
    if got == want {
        return String::new();
    }
    if got.freq != want.freq {
        return format!("frequency {:?} vs {:?}", got.freq.iter().map(|x| x.to_string()).collect::<Vec<_>>(), want.freq.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    }
    match got.scalar_ratio(want) {
        Some(p) => format!("off by the scalar e(2πi·{})", p),
        None => "different matrix support".to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NcReport {
    pub theta: String,
    pub matrix: String,
    pub det: String,
    pub u_b: WeylMonomial,
    pub v_b: WeylMonomial,
    pub base_commutator: Option<String>,
    pub generator_commutator: Option<String>,
    pub scaled_commutator: Option<String>,
    pub expected_scaled: String,
    pub checks: Vec<IdentityCheck>,
    pub all_hold: bool,
    pub first_mismatch: Option<String>,
}
