//! Counting functions, zeta sums and dimension estimates on weighted spectra.
//!
//! For a spectrum with trace weights the three distribution functions are
//!
//! * `Λ_T(s)`: weighted count of eigenvalues in `(−s, s)`;
//! * `λ_T(t)`: weighted count of `|λ| ≥ t` (closed interval);
//! * `μ_T(t) = inf{s : λ_T(s) ≤ t}`, the singular value function.
//!
//! `μ_T` does not change if `λ_T` is replaced by its right limit (counting
//! `|λ| > t`), and only that version satisfies `λ_T(μ_T(t)) ≤ t`; both are
//! exposed.
//!
//! ```
//! use solenoid::dirac::{SpectrumMeta, SpectrumMultiset, SpectrumRecord};
//! use solenoid::intlat::rat;
//! use solenoid::spectral::counting;
//!
//! let rec = |v: f64, w: i64| SpectrumRecord {
//!     value: v, key: None, signed: false, multiplicity: 1, weight: rat(w, 1),
//! };
//! let meta = SpectrumMeta { model: "toy".into(), matrix: None, level: 0, cutoff: 1.0 };
//! let n = counting(&SpectrumMultiset::new(meta, vec![rec(0.0, 1), rec(1.0, 3)]));
//! assert_eq!(n.count_f64(0.5), 1.0);
//! assert_eq!(n.count_f64(1.0), 4.0);
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dirac::{SpectrumMeta, SpectrumMultiset, SpectrumRecord, UhfModel, UhfResidue};
use crate::error::{Error, Result};
use crate::intlat::{rat_to_f64, Rational};

/// Smallest number of eigenvalue steps a fit window must contain.
pub const MIN_STEPS: usize = 50;

/// Neumaier's compensated sum, in the order given.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Step data of `N(λ) = Σ_{|value| ≤ λ} multiplicity·weight`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingFunction {
    /// Distinct values, ascending.
    pub values: Vec<f64>,
    /// Mass at each value.
    #[serde(skip)]
    pub masses: Vec<Rational>,
    /// `N(values[i])`, exact.
    #[serde(skip)]
    pub cumulative: Vec<Rational>,
    pub cumulative_f64: Vec<f64>,
    pub total: f64,
}

/// Builds the counting function of a spectrum.
pub fn counting(spec: &SpectrumMultiset) -> CountingFunction {
    let mut values: Vec<f64> = Vec::new();
    let mut masses: Vec<Rational> = Vec::new();
    for r in &spec.records {
        if values.last() == Some(&r.value) {
            *masses.last_mut().unwrap() += r.mass();
        } else {
            values.push(r.value);
            masses.push(r.mass());
        }
    }
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut acc = Rational::zero();
    for m in &masses {
        acc += m;
        cumulative.push(acc.clone());
    }
    let cumulative_f64: Vec<f64> = cumulative.iter().map(rat_to_f64).collect();
    let total = cumulative_f64.last().copied().unwrap_or(0.0);
    CountingFunction { values, masses, cumulative, cumulative_f64, total }
}

impl CountingFunction {
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    /// Number of values `≤ t`.
    fn upto(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v <= t)
    }

    /// Number of values `< t`.
    fn below(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v < t)
    }

    /// `N(t)`, exact.
    pub fn count(&self, t: f64) -> Rational {
        match self.upto(t) {
            0 => Rational::zero(),
            i => self.cumulative[i - 1].clone(),
        }
    }

    pub fn count_f64(&self, t: f64) -> f64 {
        match self.upto(t) {
            0 => 0.0,
            i => self.cumulative_f64[i - 1],
        }
    }

    /// `Λ_T(s)`: mass of `|λ| < s`.
    pub fn big_lambda(&self, s: f64) -> f64 {
        match self.below(s) {
            0 => 0.0,
            i => self.cumulative_f64[i - 1],
        }
    }

    /// `λ_T(t)`: mass of `|λ| ≥ t`.
    pub fn small_lambda(&self, t: f64) -> f64 {
        self.total - self.big_lambda(t)
    }

    /// Right limit of `λ_T` at `t`: mass of `|λ| > t`.
    pub fn small_lambda_open(&self, t: f64) -> f64 {
        self.total - self.count_f64(t)
    }

    /// `μ_T(t) = inf{s ≥ 0 : λ_T(s) ≤ t}`.
    ///
    /// Counting masses from the top, `μ_T(t) = v_j` on `[C_{j−1}, C_j)` where
    /// `C_j` is the mass of the `j` largest values.
    pub fn mu(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::INFINITY;
        }
        let mut from_top = 0.0;
        for (v, m) in self.values.iter().zip(&self.masses).rev() {
            from_top += rat_to_f64(m);
            if from_top > t {
                return *v;
            }
        }
        0.0
    }
}

/// Which function of `D` is summed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZetaForm {
    /// `|D|^{−s}`, zero modes skipped.
    AbsPower,
    /// `(D² + 1)^{−s/2}`.
    Resolvent,
}

/// `Σ mult·weight·f(value)` in ascending order of values.
pub fn zeta_truncated(spec: &SpectrumMultiset, s: f64, form: ZetaForm) -> f64 {
    compensated_sum(spec.records.iter().filter_map(|r| {
        let m = rat_to_f64(&r.mass());
        match form {
            ZetaForm::AbsPower if r.value > 0.0 => Some(m * r.value.powf(-s)),
            ZetaForm::AbsPower => None,
            ZetaForm::Resolvent => Some(m * (r.value * r.value + 1.0).powf(-s / 2.0)),
        }
    }))
}

/// Least-squares fit of `log N` against `log λ` on `[Λ/4, Λ]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionFit {
    pub d_hat: f64,
    /// Mean of `N(λ)/λ^{d̂}` over the window.
    pub c_hat: f64,
    /// `d̂·ĉ`.
    pub residue: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub window: (f64, f64),
    pub steps: usize,
}

/// Dimension and volume fit at the spectrum's own cutoff.
pub fn dimension_and_residue(spec: &SpectrumMultiset) -> Result<DimensionFit> {
    dimension_and_residue_at(spec, spec.meta.cutoff)
}

/// Fit over the dyadic window `[Λ/4, Λ]`, sampling `N` at step midpoints.
pub fn dimension_and_residue_at(spec: &SpectrumMultiset, cutoff: f64) -> Result<DimensionFit> {
    let n = counting(spec);
    let lo = cutoff / 4.0;
    let inside: Vec<usize> = (0..n.steps()).filter(|&i| n.values[i] >= lo && n.values[i] <= cutoff && n.values[i] > 0.0).collect();
    if inside.len() < MIN_STEPS {
        return Err(Error::InsufficientSpectrum { steps: inside.len(), required: MIN_STEPS });
    }
    // (midpoint, N just after the step)
    let mut pts = Vec::with_capacity(inside.len());
    for w in inside.windows(2) {
        let (i, j) = (w[0], w[1]);
        pts.push(((n.values[i] + n.values[j]) / 2.0, n.cumulative_f64[i]));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / k;
    let my = compensated_sum(ys.iter().copied()) / k;
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let d_hat = sxy / sxx;
    let intercept = my - d_hat * mx;
    let residual = (compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (y - intercept - d_hat * x).powi(2))) / k).sqrt();
    let c_hat = compensated_sum(pts.iter().map(|(l, c)| c / l.powf(d_hat))) / k;
    Ok(DimensionFit { d_hat, c_hat, residue: d_hat * c_hat, residual, window: (lo, cutoff), steps: inside.len() })
}

/// Dixmier-type averages of `(D² + 1)^{−d/2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DixmierAverage {
    /// `(1/log t)∫₁ᵗ μ(s)^d ds` at `t` = total weight.
    pub literal: f64,
    /// Slope of `∫₁ᵗ μ^d` against `log t` between `N(Λ/4)` and `N(Λ)`.
    pub log_slope: f64,
    pub total_weight: f64,
}

/// `μ` of `(D² + 1)^{−1/2}` is the resolvent of the ascending spectrum, so
/// `∫₀ᵗ μ^d` is a partial resolvent zeta sum. The integral starts at `1`:
/// the `(1/log t)` average of `∫₀ᵗ` differs by `O(1/log t)` and this keeps
/// a constant `μ ≡ 1` at `(t − 1)/log t`. Convergence of the literal average
/// is logarithmic; the log-slope reading removes the additive constant.
pub fn dixmier_average(spec: &SpectrumMultiset, d: f64) -> Result<DixmierAverage> {
    if d <= 0.0 {
        return Err(Error::precondition("d must be positive"));
    }
    let n = counting(spec);
    // F(t) = ∫₁ᵗ μ(s)^d ds at each cumulative mass t
    let mut ts = Vec::with_capacity(n.steps());
    let mut fs = Vec::with_capacity(n.steps());
    let mut f = 0.0f64;
    let mut comp = 0.0f64;
    let mut prev = 0.0f64;
    for (i, v) in n.values.iter().enumerate() {
        let t = n.cumulative_f64[i];
        let height = (v * v + 1.0).powf(-d / 2.0);
        let a = prev.max(1.0);
        if t > a {
            let term = height * (t - a);
            let s = f + term;
            comp += if f.abs() >= term.abs() { (f - s) + term } else { (term - s) + f };
            f = s;
        }
        prev = t;
        ts.push(t);
        fs.push(f + comp);
    }
    let total = n.total;
    let literal = if total > 1.0 { fs.last().copied().unwrap_or(0.0) / total.ln() } else { 0.0 };
    let lo = n.count_f64(spec.meta.cutoff / 4.0);
    let idx: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] >= lo && ts[i] > 1.0).collect();
    let log_slope = if idx.len() >= 2 {
        let xs: Vec<f64> = idx.iter().map(|&i| ts[i].ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| fs[i]).collect();
        let k = xs.len() as f64;
        let mx = compensated_sum(xs.iter().copied()) / k;
        let my = compensated_sum(ys.iter().copied()) / k;
        let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
        let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
        if sxx > 0.0 {
            sxy / sxx
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    Ok(DixmierAverage { literal, log_slope, total_weight: total })
}

/// Richardson extrapolation to `h → 0` for samples at `h, h/2, h/4, …`.
pub fn richardson(samples: &[f64]) -> f64 {
    let mut table = samples.to_vec();
    let mut factor = 2.0;
    while table.len() > 1 {
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 2.0;
    }
    table.first().copied().unwrap_or(f64::NAN)
}

/// `(s − d)ζ(s)` on a grid approaching `d`, extrapolated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueSide {
    pub grid: Vec<f64>,
    pub samples: Vec<f64>,
    pub extrapolated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueStability {
    pub d: f64,
    pub base: ResidueSide,
    pub perturbed: ResidueSide,
    /// `|perturbed − base| / |base|`.
    pub difference: f64,
    /// The two-form bound `|ζ_{|D|,cut}(s) − ζ_{(D²+1)^{1/2}}(s)| ≤ Σ_{λ<t}w + (s/2)Σ_{λ≥t}wλ^{−s−2}`.
    pub form_bound_holds: bool,
}

fn residue_side(spec: &SpectrumMultiset, d: f64, grid: &[f64]) -> Result<ResidueSide> {
    let fit = dimension_and_residue(spec)?;
    let cutoff = spec.meta.cutoff;
    // tail beyond Λ modelled by N(λ) ≈ ĉλ^d: ∫_Λ^∞ λ^{−s} dN = ĉdΛ^{d−s}/(s−d)
    let samples: Vec<f64> = grid
        .iter()
        .map(|&h| {
            let s = d + h;
            h * zeta_truncated(spec, s, ZetaForm::AbsPower) + fit.c_hat * d * cutoff.powf(-h)
        })
        .collect();
    Ok(ResidueSide { grid: grid.to_vec(), extrapolated: richardson(&samples), samples })
}

/// Checks the two-form bound of the resolvent comparison at exponent `s`,
/// splitting at `t`.
pub fn form_bound(spec: &SpectrumMultiset, s: f64, t: f64) -> bool {
    let cut = compensated_sum(spec.records.iter().filter(|r| r.value >= t).map(|r| rat_to_f64(&r.mass()) * r.value.powf(-s)));
    let res = zeta_truncated(spec, s, ZetaForm::Resolvent);
    let below = compensated_sum(spec.records.iter().filter(|r| r.value < t).map(|r| rat_to_f64(&r.mass())));
    let tail = compensated_sum(spec.records.iter().filter(|r| r.value >= t).map(|r| rat_to_f64(&r.mass()) * r.value.powf(-s - 2.0)));
    let lhs = (cut - res).abs();
    let rhs = below + s / 2.0 * tail;
    lhs <= rhs * (1.0 + 1e-12) + 1e-12
}

/// Default grid `h = s − d ∈ {1/2, 1/4, 1/8, 1/16}`.
pub fn default_grid() -> Vec<f64> {
    vec![0.5, 0.25, 0.125, 0.0625]
}

/// Compares extrapolated residues of two spectra at dimension `d`.
pub fn residue_stability_check(base: &SpectrumMultiset, perturbed: &SpectrumMultiset, d: f64, grid: &[f64]) -> Result<ResidueStability> {
    let b = residue_side(base, d, grid)?;
    let p = residue_side(perturbed, d, grid)?;
    let difference = (p.extrapolated - b.extrapolated).abs() / b.extrapolated.abs();
    let form_bound_holds = grid.iter().all(|&h| form_bound(base, d + h, 1.0) && form_bound(perturbed, d + h, 1.0));
    Ok(ResidueStability { d, base: b, perturbed: p, difference, form_bound_holds })
}

/// Closed-form residues of `D₀` and `D_n` for the UHF model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhfStability {
    pub n: u32,
    pub base: UhfResidue,
    pub perturbed: UhfResidue,
    /// Exact difference of the rational coefficients.
    pub difference: String,
    pub equal: bool,
}

/// `D_n − I⊗D₀` only adds the finitely many lines `k = −n..−1`, an entire
/// function of `t`, so the residues agree exactly.
pub fn uhf_residue_stability(model: &UhfModel, n: u32) -> UhfStability {
    let base = model.residue(0);
    let perturbed = model.residue(n);
    let diff = &perturbed.coefficient - &base.coefficient;
    UhfStability { n, equal: diff.is_zero() && base == perturbed, difference: diff.to_string(), base, perturbed }
}

/// Spectrum of a Hermitian matrix as an unweighted multiset of `|λ|`.
pub fn matrix_spectrum(eigenvalues: &[f64]) -> SpectrumMultiset {
    let records = eigenvalues
        .iter()
        .map(|&v| SpectrumRecord { value: v.abs(), key: None, signed: v < 0.0, multiplicity: 1, weight: Rational::from_integer(1.into()) })
        .collect();
    let cutoff = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    SpectrumMultiset::new(SpectrumMeta { model: "matrix".into(), matrix: None, level: 0, cutoff }, records)
}

/// Outcome of `Λ_{T+C}(s) ≤ Λ_T(s + c)` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub size: usize,
    pub c_norm: f64,
    pub grid_points: usize,
    pub violations: Vec<String>,
    /// `|λ|`-sorted eigenvalues satisfy `a_i(T+C) ≥ a_i(T) − c`, which gives
    /// `μ_{|T+C|⁻¹}(t) ≤ (μ_{|T|⁻¹}(t)⁻¹ − c)⁻¹` when `T` is invertible.
    pub singular_values_ok: bool,
    pub passed: bool,
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Tests the counting-function perturbation inequality for `T` and `T + C`.
pub fn perturbation_check(t: &DMatrix<Complex64>, c: &DMatrix<Complex64>, grid: &[f64]) -> PerturbationReport {
    let et = hermitian_eigenvalues(t);
    let etc = hermitian_eigenvalues(&(t + c));
    let c_norm = crate::dirac::operator_norm(c);
    let nt = counting(&matrix_spectrum(&et));
    let ntc = counting(&matrix_spectrum(&etc));
    let slack = 1e-9 * (1.0 + c_norm);
    let mut violations = Vec::new();
    for &s in grid {
        // a tiny widening absorbs eigensolver rounding
        let lhs = ntc.big_lambda(s);
        let rhs = nt.big_lambda(s + c_norm + slack);
        if lhs > rhs {
            violations.push(format!("Λ_(T+C)({s}) = {lhs} > Λ_T({}) = {rhs}", s + c_norm));
        }
    }
    let mut a: Vec<f64> = et.iter().map(|x| x.abs()).collect();
    let mut b: Vec<f64> = etc.iter().map(|x| x.abs()).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let singular_values_ok = a.iter().zip(&b).all(|(x, y)| *y >= x - c_norm - slack);
    if !singular_values_ok {
        violations.push("sorted |eigenvalues| moved by more than ‖C‖".into());
    }
    PerturbationReport { size: et.len(), c_norm, grid_points: grid.len(), passed: violations.is_empty(), violations, singular_values_ok }
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Runs `trials` random instances (sizes up to 60) with a fixed seed.
pub fn random_perturbation_trials(seed: u64, trials: usize) -> Vec<PerturbationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let n = rng.gen_range(2..=60);
            let t = random_hermitian(&mut rng, n, 5.0);
            let scale = rng.gen_range(0.0..1.0);
            let c = random_hermitian(&mut rng, n, scale);
            let top = hermitian_eigenvalues(&t).iter().fold(0.0f64, |a, v| a.max(v.abs())) + 2.0;
            let grid: Vec<f64> = (0..100).map(|i| top * i as f64 / 99.0).collect();
            perturbation_check(&t, &c, &grid)
        })
        .collect()
}

/// The JSON summary of a spectral analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub model: String,
    pub cutoff: f64,
    pub d_hat: f64,
    pub residue_hat: f64,
    pub dixmier_avg: f64,
    pub dixmier_log_slope: f64,
    pub window: (f64, f64),
    pub residual: f64,
}

pub fn report(spec: &SpectrumMultiset) -> Result<SpectralReport> {
    let fit = dimension_and_residue(spec)?;
    let dix = dixmier_average(spec, fit.d_hat)?;
    Ok(SpectralReport {
        model: spec.meta.model.clone(),
        cutoff: spec.meta.cutoff,
        d_hat: fit.d_hat,
        residue_hat: fit.residue,
        dixmier_avg: dix.literal,
        dixmier_log_slope: dix.log_slope,
        window: fit.window,
        residual: fit.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{crossed_spectrum, circle_spectrum, torus_spectrum};
    use crate::intlat::{rat, IntMatrix};
    use crate::lattice::Covering;
    use std::f64::consts::PI;

    fn toy(values: &[(f64, i64)]) -> SpectrumMultiset {
        let records = values
            .iter()
            .map(|&(v, w)| SpectrumRecord { value: v, key: None, signed: false, multiplicity: 1, weight: rat(w, 1) })
            .collect();
        SpectrumMultiset::new(SpectrumMeta { model: "toy".into(), matrix: None, level: 0, cutoff: 1.0 }, records)
    }

    fn torus2() -> Covering {
        Covering::new(&IntMatrix::parse("2,0;0,2").unwrap()).unwrap()
    }

    #[test]
    fn counting_examples() {
        let n = counting(&toy(&[(0.0, 1), (1.0, 3)]));
        assert_eq!(n.count(0.5), rat(1, 1));
        assert_eq!(n.count(1.0), rat(4, 1));
        let empty = counting(&toy(&[]));
        assert_eq!(empty.count_f64(10.0), 0.0);
        assert_eq!(empty.mu(0.0), 0.0);
        let cutoff = 2.0 * PI * 16.0;
        let spec = torus_spectrum(&torus2(), 0, cutoff).unwrap();
        let ratio = counting(&spec).count_f64(cutoff) / (cutoff * cutoff);
        assert!((ratio * 2.0 * PI - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn mu_and_lambda_are_inverse() {
        let n = counting(&toy(&[(0.0, 1), (1.0, 3), (2.5, 2), (4.0, 1)]));
        assert_eq!(n.mu(0.0), 4.0);
        assert_eq!(n.mu(0.999), 4.0);
        assert_eq!(n.mu(1.0), 2.5);
        assert_eq!(n.mu(6.5), 0.0);
        assert_eq!(n.mu(7.0), 0.0);
        for &t in &[0.0, 0.5, 1.0, 2.0, 3.0, 5.9, 6.0, 6.5, 8.0] {
            assert!(n.small_lambda_open(n.mu(t)) <= t);
        }
        for &s in &[0.0, 0.5, 1.0, 2.5, 3.0, 4.0, 5.0] {
            assert!(n.mu(n.small_lambda_open(s)) <= s);
            assert!(n.mu(n.small_lambda(s)) <= s);
            assert_eq!(n.big_lambda(s + 0.01) + n.small_lambda(s + 0.01), n.total);
        }
        // the closed version overshoots at atoms
        assert!(n.small_lambda(n.mu(0.5)) > 0.5);
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta_truncated(&toy(&[(1.0, 1)]), 7.3, ZetaForm::AbsPower), 1.0);
        let m = UhfModel::new(2, rat(1, 1)).unwrap();
        let spec = m.spectrum(0, 30).unwrap();
        assert!((zeta_truncated(&spec, 3.0, ZetaForm::AbsPower) - 6.0).abs() < 1e-8);
        assert!((m.zeta_closed_form(0, 3.0) - 6.0).abs() < 1e-12);
        let small = torus_spectrum(&torus2(), 0, 50.0).unwrap();
        let large = torus_spectrum(&torus2(), 0, 80.0).unwrap();
        assert!(zeta_truncated(&large, 2.5, ZetaForm::AbsPower) > zeta_truncated(&small, 2.5, ZetaForm::AbsPower));
    }

    #[test]
    fn torus_dimension_and_dixmier() {
        let spec = torus_spectrum(&torus2(), 0, 2.0 * PI * 50.0).unwrap();
        let fit = dimension_and_residue(&spec).unwrap();
        assert!((fit.d_hat - 2.0).abs() < 0.1, "{fit:?}");
        assert!((fit.residue * PI - 1.0).abs() < 0.05, "{fit:?}");
        let dix = dixmier_average(&spec, 2.0).unwrap();
        assert!((dix.log_slope * 2.0 * PI - 1.0).abs() < 0.1, "{dix:?}");
    }

    #[test]
    fn insufficient_window() {
        let spec = torus_spectrum(&torus2(), 0, 10.0).unwrap();
        assert!(matches!(dimension_and_residue(&spec), Err(Error::InsufficientSpectrum { .. })));
    }

    #[test]
    fn crossed_circle_dimension() {
        let cutoff = 300.0;
        let base = circle_spectrum(cutoff).unwrap();
        let cov = Covering::new(&IntMatrix::parse("2").unwrap()).unwrap();
        let spec = crossed_spectrum(&base, &cov, 0, cutoff).unwrap();
        let fit = dimension_and_residue(&spec).unwrap();
        assert!((fit.d_hat - 2.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn uhf_dixmier() {
        let m = UhfModel::new(2, rat(1, 1)).unwrap();
        let mut spec = m.spectrum(0, 30).unwrap();
        spec.meta.cutoff = m.eigenvalue(30);
        let dix = dixmier_average(&spec, 2.0).unwrap();
        let target = 3.0 / 2f64.ln() / 2.0;
        assert!((dix.literal / target - 1.0).abs() < 0.1, "{dix:?}");
        assert!((dix.log_slope / target - 1.0).abs() < 0.01, "{dix:?}");
        let constant = toy(&[(0.0, 10)]);
        let avg = dixmier_average(&constant, 1.0).unwrap().literal;
        assert!((avg - 9.0 / 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perturbation_examples() {
        let diag = |v: &[f64]| DMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { Complex64::new(v[i], 0.0) } else { Complex64::zero() });
        let t = diag(&[1.0, 2.0, 3.0]);
        let c = diag(&[0.5, 0.0, 0.0]);
        let nt = counting(&matrix_spectrum(&[1.0, 2.0, 3.0]));
        let ntc = counting(&matrix_spectrum(&[1.5, 2.0, 3.0]));
        assert_eq!(ntc.big_lambda(1.2), 0.0);
        assert_eq!(nt.big_lambda(1.7), 1.0);
        assert!(perturbation_check(&t, &c, &[1.2]).passed);
        assert!(perturbation_check(&t, &diag(&[0.0; 3]), &[0.5, 1.0, 2.5]).passed);
        let trials = random_perturbation_trials(7, 20);
        assert!(trials.iter().all(|r| r.passed));
    }

    #[test]
    fn residue_stability_identical_and_uhf() {
        let spec = torus_spectrum(&torus2(), 0, 2.0 * PI * 30.0).unwrap();
        let r = residue_stability_check(&spec, &spec, 2.0, &default_grid()).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!(r.form_bound_holds);
        let m = UhfModel::new(2, rat(1, 1)).unwrap();
        for n in 0..=3 {
            assert!(uhf_residue_stability(&m, n).equal);
        }
    }

    #[test]
    fn richardson_linear() {
        let f = |h: f64| 3.0 + 2.0 * h + 0.5 * h * h;
        let est = richardson(&[f(0.5), f(0.25), f(0.125)]);
        assert!((est - 3.0).abs() < 1e-12);
    }
}
