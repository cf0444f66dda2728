//! Index sets, polyhomogeneous expansions, cutoff Mellin integrals and leading-order fits.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{c, re, CMat, C64};
use crate::quad;

/// Default horizon above which exponents are dropped.
pub const DEFAULT_HORIZON: f64 = 6.0;

/// Exponents closer than this are treated as equal when adding them.
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhgError {
    #[error("dimension mismatch: {0:?} times {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("lambda coincides with the exponent z = {0}")]
    Pole(f64),
    #[error("integral diverges at 0: need re(lambda) < z, got re(z - lambda) = {0}")]
    Divergent(f64),
    #[error("leading-order fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("cutoff radii must satisfy 0 < inner < outer, got ({0}, {1})")]
    BadCutoff(f64, f64),
}

fn cmp_entry(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Finite set of (exponent, log power) pairs, sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexSet {
    entries: Vec<(f64, u32)>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(entries: impl IntoIterator<Item = (f64, u32)>) -> Self {
        let mut entries: Vec<(f64, u32)> = entries.into_iter().filter(|e| e.0.is_finite()).collect();
        entries.sort_by(cmp_entry);
        entries.dedup();
        Self { entries }
    }

    pub fn entries(&self) -> &[(f64, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// The empty set stands for rapid vanishing.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, z: f64, k: u32) -> bool {
        self.entries.binary_search_by(|e| cmp_entry(e, &(z, k))).is_ok()
    }

    /// Smallest exponent, `None` for the empty set.
    pub fn leading_exponent(&self) -> Option<f64> {
        self.entries.first().map(|e| e.0)
    }

    /// Smallest exponent together with the largest log power attached to it.
    pub fn leading(&self) -> Option<(f64, u32)> {
        let z = self.leading_exponent()?;
        self.entries.iter().filter(|e| e.0 == z).map(|e| *e).last()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        IndexSet::new(self.entries.iter().chain(other.entries.iter()).copied())
    }

    /// Adds `(z + j step, l)` for all `0 <= l <= k` and `z + j step <= horizon`.
    pub fn smooth_closure(&self, step: f64, horizon: f64) -> IndexSet {
        let mut out = Vec::new();
        for &(z, k) in &self.entries {
            let mut zz = z;
            while zz <= horizon + MERGE_TOL {
                for l in 0..=k {
                    out.push((zz, l));
                }
                zz += step;
            }
            if z > horizon {
                out.push((z, k));
            }
        }
        IndexSet::new(out)
    }

    pub fn is_smooth_closed(&self, step: f64, horizon: f64) -> bool {
        self.smooth_closure(step, horizon) == *self
    }

    pub fn truncate(&self, horizon: f64) -> IndexSet {
        IndexSet { entries: self.entries.iter().copied().filter(|e| e.0 <= horizon).collect() }
    }
}

/// `E ∪ F ∪ {(z, k + l + 1) : (z, k) ∈ E, (z, l) ∈ F}`.
pub fn extended_union(e: &IndexSet, f: &IndexSet) -> IndexSet {
    let mut out: Vec<(f64, u32)> = e.entries.iter().chain(f.entries.iter()).copied().collect();
    for &(z, k) in &e.entries {
        for &(w, l) in &f.entries {
            if z == w {
                out.push((z, k + l + 1));
            }
        }
    }
    IndexSet::new(out)
}

/// Finite matrix-valued sum `Σ a_{z,k} x^z (log x)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhgExpansion {
    rows: usize,
    cols: usize,
    terms: Vec<((f64, u32), CMat)>,
}

impl PhgExpansion {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self { rows, cols, terms: Vec::new() }
    }

    pub fn monomial(z: f64, k: u32, coeff: CMat) -> Self {
        let (rows, cols) = coeff.shape();
        let mut e = Self::zero(rows, cols);
        e.add_term(z, k, coeff);
        e
    }

    pub fn scalar_monomial(z: f64, k: u32, a: C64) -> Self {
        Self::monomial(z, k, CMat::from_element(1, 1, a))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> &[((f64, u32), CMat)] {
        &self.terms
    }

    /// Adds `coeff x^z (log x)^k`, merging with an existing term of (numerically) equal exponent.
    pub fn add_term(&mut self, z: f64, k: u32, coeff: CMat) {
        assert_eq!(coeff.shape(), (self.rows, self.cols), "coefficient shape");
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 .1 == k && (t.0 .0 - z).abs() <= MERGE_TOL) {
            t.1 += coeff;
        } else {
            self.terms.push(((z, k), coeff));
            self.terms.sort_by(|a, b| cmp_entry(&a.0, &b.0));
        }
    }

    pub fn index_set(&self) -> IndexSet {
        IndexSet::new(self.terms.iter().map(|t| t.0))
    }

    pub fn evaluate(&self, x: f64) -> CMat {
        let lx = x.ln();
        let mut out = CMat::zeros(self.rows, self.cols);
        for ((z, k), a) in &self.terms {
            out += a * re(x.powf(*z) * lx.powi(*k as i32));
        }
        out
    }

    /// Leading term: smallest exponent, then largest log power, among nonzero coefficients.
    pub fn leading_term(&self) -> Option<(f64, u32, &CMat)> {
        let nonzero: Vec<&((f64, u32), CMat)> = self.terms.iter().filter(|t| t.1.iter().any(|v| *v != re(0.0))).collect();
        let zmin = nonzero.first()?.0 .0;
        nonzero.iter().filter(|t| t.0 .0 == zmin).last().map(|t| (t.0 .0, t.0 .1, &t.1))
    }
}

/// Term-by-term product; exponents and log powers add, terms above `horizon` are dropped.
pub fn phg_mul(u: &PhgExpansion, v: &PhgExpansion, horizon: f64) -> Result<PhgExpansion, PhgError> {
    if u.cols != v.rows {
        return Err(PhgError::DimensionMismatch(u.shape(), v.shape()));
    }
    let mut out = PhgExpansion::zero(u.rows, v.cols);
    for ((z1, k1), a) in &u.terms {
        for ((z2, k2), b) in &v.terms {
            let z = z1 + z2;
            if z <= horizon + MERGE_TOL {
                out.add_term(z, k1 + k2, a * b);
            }
        }
    }
    Ok(out)
}

/// Shapes of the smooth transition from 1 to 0 used by cutoff functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffTemplate {
    /// `f(1-u) / (f(1-u) + f(u))` with `f(s) = exp(-1/s)`.
    ExpRatio,
    /// `(1 - tanh(tan(pi (u - 1/2)))) / 2`.
    TanhTan,
    /// As `ExpRatio` with `f(s) = exp(-1/s^2)`.
    GaussRatio,
}

impl CutoffTemplate {
    pub const ALL: [CutoffTemplate; 3] = [CutoffTemplate::ExpRatio, CutoffTemplate::TanhTan, CutoffTemplate::GaussRatio];

    /// (value, d/du) of the transition at `u` in (0, 1).
    fn transition(self, u: f64) -> (f64, f64) {
        if u <= 0.0 {
            return (1.0, 0.0);
        }
        if u >= 1.0 {
            return (0.0, 0.0);
        }
        match self {
            CutoffTemplate::ExpRatio => {
                let (a, b) = ((-1.0 / (1.0 - u)).exp(), (-1.0 / u).exp());
                let p = a / (a + b);
                (p, -p * (1.0 - p) * (1.0 / ((1.0 - u) * (1.0 - u)) + 1.0 / (u * u)))
            }
            CutoffTemplate::GaussRatio => {
                let (a, b) = ((-1.0 / ((1.0 - u) * (1.0 - u))).exp(), (-1.0 / (u * u)).exp());
                let p = a / (a + b);
                (p, -p * (1.0 - p) * (2.0 / (1.0 - u).powi(3) + 2.0 / u.powi(3)))
            }
            CutoffTemplate::TanhTan => {
                let arg = core::f64::consts::PI * (u - 0.5);
                let w = arg.tan();
                let p = 0.5 * (1.0 - w.tanh());
                let sech2 = if w.abs() > 300.0 { 0.0 } else { 1.0 / (w.cosh() * w.cosh()) };
                let sec2 = 1.0 / (arg.cos() * arg.cos());
                (p, -0.5 * sech2 * core::f64::consts::PI * sec2)
            }
        }
    }
}

/// Smooth cutoff equal to 1 on [0, inner] and 0 on [outer, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub template: CutoffTemplate,
    pub inner: f64,
    pub outer: f64,
}

impl CutoffSpec {
    pub fn new(template: CutoffTemplate, inner: f64, outer: f64) -> Result<Self, PhgError> {
        if !(inner > 0.0 && outer > inner) {
            return Err(PhgError::BadCutoff(inner, outer));
        }
        Ok(Self { template, inner, outer })
    }

    /// The three built-in cutoffs used for independence checks.
    pub fn builtins() -> [CutoffSpec; 3] {
        [
            CutoffSpec { template: CutoffTemplate::ExpRatio, inner: 0.5, outer: 1.0 },
            CutoffSpec { template: CutoffTemplate::TanhTan, inner: 0.3, outer: 1.7 },
            CutoffSpec { template: CutoffTemplate::GaussRatio, inner: 0.8, outer: 3.0 },
        ]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_and_derivative(x).0
    }

    pub fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        let width = self.outer - self.inner;
        let (p, dp) = self.template.transition((x - self.inner) / width);
        (p, dp / width)
    }
}

const MELLIN_PANELS: usize = 24;
const MELLIN_ORDER: usize = 24;

/// `∫_0^∞ x^{-λ} φ(x) x^z (log x)^k dx/x`.
///
/// On [0, inner] the cutoff is 1 and the integral is done in closed form; the transition region is
/// integrated with composite Gauss-Legendre.
pub fn mellin_cutoff_power(z: f64, k: u32, cutoff: &CutoffSpec, lambda: C64) -> Result<C64, PhgError> {
    let s = re(z) - lambda;
    if s.norm() == 0.0 {
        return Err(PhgError::Pole(z));
    }
    if s.re <= 0.0 {
        return Err(PhgError::Divergent(s.re));
    }
    // ∫_{y1}^∞ e^{-s y} (-y)^k dy with y1 = -ln(inner)
    let y1 = -cutoff.inner.ln();
    let mut tail = re(0.0);
    let mut falling = 1.0;
    let mut s_pow = s;
    for j in 0..=k {
        tail += re(falling * y1.powi((k - j) as i32)) / s_pow;
        falling *= (k - j) as f64;
        s_pow *= s;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let head = (-s * y1).exp() * tail * sign;
    let body: CPair = quad::integrate(
        |x| {
            let lx = x.ln();
            let v = (s * lx).exp() * re(cutoff.value(x) * lx.powi(k as i32) / x);
            CPair(v.re, v.im)
        },
        cutoff.inner,
        cutoff.outer,
        MELLIN_PANELS,
        MELLIN_ORDER,
    );
    Ok(head + c(body.0, body.1))
}

#[derive(Debug, Clone, Copy, Default)]
struct CPair(f64, f64);

impl core::ops::Add for CPair {
    type Output = CPair;
    fn add(self, o: CPair) -> CPair {
        CPair(self.0 + o.0, self.1 + o.1)
    }
}

impl core::ops::Mul<f64> for CPair {
    type Output = CPair;
    fn mul(self, w: f64) -> CPair {
        CPair(self.0 * w, self.1 * w)
    }
}

/// Result of probing the pole of the cutoff Mellin integral at `λ = z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleProbe {
    /// Rounded pole order.
    pub order: u32,
    /// Extrapolated `-ε d/dε log M(z - ε)` at ε → 0.
    pub fitted_order: f64,
    /// Extrapolated `ε^{order} M(z - ε)`; equals `(-1)^k k!`.
    pub leading: f64,
}

/// Approaches `λ = z` from below along `ε = ε0 2^{-j}` and extrapolates the local order and the
/// leading Laurent coefficient.
pub fn mellin_pole_probe(z: f64, k: u32, cutoff: &CutoffSpec) -> Result<PoleProbe, PhgError> {
    const LEVELS: usize = 7;
    let eps0 = 0.02;
    let mut eps = Vec::with_capacity(LEVELS);
    let mut orders = Vec::with_capacity(LEVELS);
    let mut lead = Vec::with_capacity(LEVELS);
    for j in 0..LEVELS {
        let e = eps0 / (1u64 << j) as f64;
        let lam = re(z - e);
        let mk = mellin_cutoff_power(z, k, cutoff, lam)?;
        let mk1 = mellin_cutoff_power(z, k + 1, cutoff, lam)?;
        eps.push(e);
        orders.push(-(e * mk1 / mk).re);
        lead.push(mk.re * e.powi(k as i32 + 1));
    }
    let fitted_order = quad::extrapolate_to_zero(&eps, &orders);
    let leading = quad::extrapolate_to_zero(&eps, &lead);
    Ok(PoleProbe { order: fitted_order.round().max(0.0) as u32, fitted_order, leading })
}

/// Confidence attached to a leading-order fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitConfidence {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadingFit {
    pub z: f64,
    pub k: u32,
    pub coeff: CMat,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub confidence: FitConfidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeadingOrder {
    Fit(LeadingFit),
    IdenticallyVanishing,
}

pub const MIN_FIT_SAMPLES: usize = 8;
const MAX_FIT_LOG_POWER: u32 = 2;
const LOW_CONFIDENCE_RESIDUAL: f64 = 1e-2;

/// Least-squares fit of `log|v| ≈ z log x + k log|log x| + b` over k ∈ {0, 1, 2}.
pub fn fit_leading_order(samples: &[(f64, CMat)]) -> Result<LeadingOrder, PhgError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(PhgError::TooFewSamples { needed: MIN_FIT_SAMPLES, got: samples.len() });
    }
    let pts: Vec<(f64, f64, &CMat)> = samples
        .iter()
        .filter(|(x, v)| *x > 0.0 && *x != 1.0 && v.norm() > 0.0)
        .map(|(x, v)| (*x, v.norm(), v))
        .collect();
    if pts.len() < 3 {
        return Ok(LeadingOrder::IdenticallyVanishing);
    }
    let mut best: Option<(f64, u32, f64, f64)> = None;
    for k in 0..=MAX_FIT_LOG_POWER {
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln() - k as f64 * p.0.ln().abs().ln()).collect();
        let (slope, icept, rms) = linear_fit(&xs, &ys);
        // a higher log power must explain the data clearly better than a lower one
        let better = match best {
            None => true,
            Some((_, _, _, r)) => rms < 0.1 * r,
        };
        if better {
            best = Some((slope, k, icept, rms));
        }
    }
    let (z, k, _, residual) = best.expect("at least one candidate");
    let (x0, _, v0) = pts.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).expect("nonempty");
    let scale = x0.powf(z) * x0.ln().powi(k as i32);
    let coeff = v0 / re(scale);
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let confidence = if residual > LOW_CONFIDENCE_RESIDUAL || (xmax / xmin).ln() < 1.0 { FitConfidence::Low } else { FitConfidence::High };
    Ok(LeadingOrder::Fit(LeadingFit { z, k, coeff, residual, confidence }))
}

/// Ordinary least squares `y = a x + b`; returns (a, b, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(f64, u32)]) -> IndexSet {
        IndexSet::new(v.iter().copied())
    }

    #[test]
    fn extended_union_examples() {
        assert_eq!(extended_union(&IndexSet::empty(), &set(&[(0.0, 0)])), set(&[(0.0, 0)]));
        assert_eq!(extended_union(&set(&[(0.0, 0)]), &set(&[(0.0, 0)])), set(&[(0.0, 0), (0.0, 1)]));
        assert_eq!(extended_union(&set(&[(1.0, 0)]), &set(&[(2.0, 1)])), set(&[(1.0, 0), (2.0, 1)]));
    }

    #[test]
    fn leading_prefers_largest_log_power() {
        let e = set(&[(0.5, 0), (0.5, 2), (1.0, 3)]);
        assert_eq!(e.leading(), Some((0.5, 2)));
        assert_eq!(IndexSet::empty().leading(), None);
    }

    #[test]
    fn smooth_closure_fills_integer_shifts() {
        let e = set(&[(0.5, 1)]).smooth_closure(1.0, 2.0);
        assert_eq!(e, set(&[(0.5, 0), (0.5, 1), (1.5, 0), (1.5, 1)]));
        assert!(e.is_smooth_closed(1.0, 2.0));
        assert!(!set(&[(0.5, 0)]).is_smooth_closed(1.0, 2.0));
    }

    #[test]
    fn product_examples() {
        let id = PhgExpansion::monomial(0.0, 0, CMat::identity(2, 2));
        let u = PhgExpansion::monomial(0.5, 1, CMat::from_element(2, 2, c(1.0, -2.0)));
        assert_eq!(phg_mul(&id, &u, DEFAULT_HORIZON).unwrap(), u);

        let p = phg_mul(&PhgExpansion::scalar_monomial(1.0, 0, re(1.0)), &PhgExpansion::scalar_monomial(1.0, 1, re(1.0)), DEFAULT_HORIZON).unwrap();
        assert_eq!(p.index_set(), set(&[(2.0, 1)]));

        let mut a = PhgExpansion::scalar_monomial(0.5, 0, re(1.0));
        a.add_term(1.0, 0, CMat::from_element(1, 1, re(1.0)));
        let b = PhgExpansion::scalar_monomial(0.5, 0, re(1.0));
        let ab = phg_mul(&a, &b, DEFAULT_HORIZON).unwrap();
        assert_eq!(ab.index_set(), set(&[(1.0, 0), (1.5, 0)]));
        let x = 0.37_f64;
        let direct = (x.sqrt() + x) * x.sqrt();
        assert!((ab.evaluate(x)[(0, 0)].re - direct).abs() < 1e-15);
    }

    #[test]
    fn product_dimension_mismatch() {
        let a = PhgExpansion::monomial(0.0, 0, CMat::zeros(2, 3));
        let b = PhgExpansion::monomial(0.0, 0, CMat::zeros(2, 3));
        assert!(matches!(phg_mul(&a, &b, 6.0), Err(PhgError::DimensionMismatch(..))));
    }

    #[test]
    fn cutoff_templates_are_monotone_with_consistent_derivative() {
        for cut in CutoffSpec::builtins() {
            assert_eq!(cut.value(0.5 * cut.inner), 1.0);
            assert_eq!(cut.value(cut.outer * 1.01), 0.0);
            let mut prev = 1.0;
            for i in 1..200 {
                let x = cut.inner + (cut.outer - cut.inner) * i as f64 / 200.0;
                let (v, dv) = cut.value_and_derivative(x);
                assert!(v <= prev + 1e-15);
                prev = v;
                let h = 1e-6;
                let fd = (cut.value(x + h) - cut.value(x - h)) / (2.0 * h);
                assert!((fd - dv).abs() < 1e-5 * (1.0 + dv.abs()), "{:?} at {x}: {fd} vs {dv}", cut.template);
            }
        }
    }

    #[test]
    fn mellin_absolutely_convergent_case() {
        let cut = CutoffSpec::builtins()[0];
        let v = mellin_cutoff_power(1.0, 0, &cut, re(0.0)).unwrap();
        let direct: f64 = quad::integrate(|x| cut.value(x), 0.0, cut.outer, 64, 20);
        assert!((v.re - direct).abs() < 1e-12 && v.im.abs() < 1e-15);
    }

    #[test]
    fn mellin_rejects_pole_and_divergence() {
        let cut = CutoffSpec::builtins()[1];
        assert!(matches!(mellin_cutoff_power(0.3, 0, &cut, re(0.3)), Err(PhgError::Pole(_))));
        assert!(matches!(mellin_cutoff_power(0.3, 0, &cut, re(0.5)), Err(PhgError::Divergent(_))));
    }

    #[test]
    fn fit_examples() {
        let xs: Vec<f64> = (0..12).map(|i| 0.1 * 0.5_f64.powi(i)).collect();
        let pow: Vec<(f64, CMat)> = xs.iter().map(|&x| (x, CMat::from_element(1, 1, re(3.0 * x * x)))).collect();
        let LeadingOrder::Fit(f) = fit_leading_order(&pow).unwrap() else { panic!() };
        assert_eq!(f.k, 0);
        assert!((f.z - 2.0).abs() < 1e-10 && (f.coeff[(0, 0)].re - 3.0).abs() < 0.03);

        let logp: Vec<(f64, CMat)> = xs.iter().map(|&x| (x, CMat::from_element(1, 1, re(x.sqrt() * x.ln())))).collect();
        let LeadingOrder::Fit(f) = fit_leading_order(&logp).unwrap() else { panic!() };
        assert_eq!(f.k, 1);
        assert!((f.z - 0.5).abs() < 1e-10);

        let two: Vec<(f64, CMat)> = xs.iter().map(|&x| (x, CMat::from_element(1, 1, re(x + x * x * x)))).collect();
        let LeadingOrder::Fit(f) = fit_leading_order(&two).unwrap() else { panic!() };
        assert_eq!(f.k, 0);
        assert!((f.z - 1.0).abs() < 1e-2);

        let zero: Vec<(f64, CMat)> = xs.iter().map(|&x| (x, CMat::zeros(2, 1))).collect();
        assert_eq!(fit_leading_order(&zero).unwrap(), LeadingOrder::IdenticallyVanishing);
        assert!(fit_leading_order(&zero[..3]).is_err());
    }
}
