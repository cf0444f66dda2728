//! Radial first-order systems `P = A d/dt + C(t)` with per-end conic data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, c, re, CMat};
use crate::phg::{CutoffSpec, CutoffTemplate};

/// Tolerance for the exact algebraic checks (skewness, commutation, unitarity).
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Sample radii |t| for the decay checks.
pub const DECAY_SAMPLES: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("{0}")]
    Dimension(String),
    #[error("ill-conditioned rank of phi_infinity at the {side:?} end: singular value {sigma:e} is near the rank threshold")]
    IllConditionedRank { side: Side, sigma: f64 },
    #[error("the Clifford block on V0 at the {0:?} end is not invertible")]
    SingularClifford(Side),
    #[error("phi_infinity does not commute with the Clifford matrix at the {0:?} end")]
    NotCommuting(Side),
    #[error("operator is not fully elliptic at the {0:?} end")]
    NotFullyElliptic(Side),
    #[error("unsupported dimension parameter n = {0} (must be odd and >= 1)")]
    BadN(u32),
}

/// Which infinity of the line an end sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Minus, Side::Plus];

    /// Sign of t on this end.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    /// `d/dt = orientation * x^2 d/dx` with `x = 1/|t|`; enters the indicial pencil as
    /// `I(λ) = B0 + orientation * A0 (λ + (n-1)/2)`.
    pub fn orientation(self) -> f64 {
        -self.sign()
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// `<t> = (1 + t^2)^{1/2}`.
#[inline]
pub fn japanese(t: f64) -> f64 {
    t.hypot(1.0)
}

/// Shape of the interpolating profile in the transition model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfTheta {
    /// `η / (1 + η)`.
    Rational,
    /// `tanh η`.
    Tanh,
}

/// Scalar radial profiles multiplying constant matrices in the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant,
    /// `tanh(scale t)`.
    Tanh { scale: f64 },
    /// `exp(-rate <t>)`.
    ExpDecay { rate: f64 },
    /// `<t>^{-power}`.
    PowerDecay { power: f64 },
    /// Smooth step in `<t>` on one end: 0 for `<t> <= inner` or on the other end, 1 for `<t> >= outer`.
    EndCutoff { side: Side, inner: f64, outer: f64 },
    /// `(η/<t>) Θ(η)` with `η = (t + <t>)/2`; vanishes like `|t|^-3` at -∞ and tends to 1 at +∞.
    TfRamp { theta: TfTheta },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant => 1.0,
            Profile::Tanh { scale } => (scale * t).tanh(),
            Profile::ExpDecay { rate } => (-rate * japanese(t)).exp(),
            Profile::PowerDecay { power } => japanese(t).powf(-power),
            Profile::EndCutoff { side, inner, outer } => {
                if t * side.sign() <= 0.0 {
                    return 0.0;
                }
                let step = CutoffSpec { template: CutoffTemplate::ExpRatio, inner, outer };
                1.0 - step.value(japanese(t))
            }
            Profile::TfRamp { theta } => {
                let jt = japanese(t);
                // (t + <t>)/2 without cancellation for t << 0
                let eta = if t >= 0.0 { 0.5 * (t + jt) } else { 0.5 / (jt - t) };
                let th = match theta {
                    TfTheta::Rational => eta / (1.0 + eta),
                    TfTheta::Tanh => eta.tanh(),
                };
                eta / jt * th
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Constant => "constant",
            Profile::Tanh { .. } => "tanh",
            Profile::ExpDecay { .. } => "exp-decay",
            Profile::PowerDecay { .. } => "power-decay",
            Profile::EndCutoff { .. } => "end-cutoff",
            Profile::TfRamp { .. } => "tf-ramp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTerm {
    pub profile: Profile,
    pub matrix: CMat,
}

impl PotentialTerm {
    pub fn new(profile: Profile, matrix: CMat) -> Self {
        Self { profile, matrix }
    }
}

/// Declared asymptotics at one end: `C(t) ~ Φ∞ + B0/<t> + O(<t>^{-1-ε})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndData {
    pub side: Side,
    pub n: u32,
    pub phi_infinity: CMat,
    pub b_term: CMat,
    /// Decay beyond `1/<t>` of the remainder and of the off-diagonal blocks.
    pub epsilon: f64,
    /// Decay beyond `1/<t>` of the skew part on V0.
    pub epsilon_prime: f64,
}

impl EndData {
    pub fn new(side: Side, phi_infinity: CMat, b_term: CMat) -> Self {
        Self { side, n: 1, phi_infinity, b_term, epsilon: 0.5, epsilon_prime: 0.5 }
    }

    /// (n - 1)/2.
    pub fn shift(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    pub name: String,
    pub clifford: CMat,
    pub potential: Vec<PotentialTerm>,
    pub minus: EndData,
    pub plus: EndData,
}

impl RadialOperator {
    pub fn dim(&self) -> usize {
        self.clifford.nrows()
    }

    pub fn end(&self, side: Side) -> &EndData {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn end_mut(&mut self, side: Side) -> &mut EndData {
        match side {
            Side::Minus => &mut self.minus,
            Side::Plus => &mut self.plus,
        }
    }

    /// C(t).
    pub fn coefficient(&self, t: f64) -> CMat {
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for term in &self.potential {
            let f = term.profile.eval(t);
            if f != 0.0 {
                out += &term.matrix * re(f);
            }
        }
        out
    }

    /// Declared asymptotic model `Φ∞ + B0/<t>` at the given end.
    pub fn declared_expansion(&self, side: Side, t: f64) -> CMat {
        let e = self.end(side);
        &e.phi_infinity + &e.b_term * re(1.0 / japanese(t))
    }

    /// Shape checks; every engine assumes these hold.
    pub fn check_shapes(&self) -> Result<(), ModelError> {
        let m = self.dim();
        if m == 0 || !self.clifford.is_square() {
            return Err(ModelError::Dimension(format!("clifford must be a nonempty square matrix, got {:?}", self.clifford.shape())));
        }
        for (i, term) in self.potential.iter().enumerate() {
            if term.matrix.shape() != (m, m) {
                return Err(ModelError::Dimension(format!("potential term {i} has shape {:?}, expected ({m}, {m})", term.matrix.shape())));
            }
        }
        for side in Side::ALL {
            let e = self.end(side);
            if e.side != side {
                return Err(ModelError::Dimension(format!("end data tagged {:?} stored at the {:?} end", e.side, side)));
            }
            if e.phi_infinity.shape() != (m, m) || e.b_term.shape() != (m, m) {
                return Err(ModelError::Dimension(format!("end data at the {side:?} end must be {m}x{m}")));
            }
            if e.n == 0 || e.n % 2 == 0 {
                return Err(ModelError::BadN(e.n));
            }
        }
        Ok(())
    }
}

/// The formal adjoint `A d/dt + C(t)^*` (valid because `A^* = -A`).
pub fn formal_adjoint(p: &RadialOperator) -> RadialOperator {
    let flip = |e: &EndData| EndData { phi_infinity: e.phi_infinity.adjoint(), b_term: e.b_term.adjoint(), ..e.clone() };
    let name = match p.name.strip_suffix('*') {
        Some(base) => String::from(base),
        None => format!("{}*", p.name),
    };
    RadialOperator {
        name,
        clifford: p.clifford.clone(),
        potential: p.potential.iter().map(|t| PotentialTerm::new(t.profile, t.matrix.adjoint())).collect(),
        minus: flip(&p.minus),
        plus: flip(&p.plus),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// `A^* = -A`, `A^*A = I`.
    CliffordUnitarySkew,
    PhiSkew,
    PhiCommutesWithClifford,
    /// `B0` is Hermitian on V0.
    BTermHermitian,
    /// Rank of the skew part of C(t) on sample points equals rank Φ∞.
    ConstantRank,
    /// `C - Φ∞ - B0/<t>` decays like `<t>^{-1-ε}`.
    RemainderDecay,
    /// V0/V1 off-diagonal blocks decay like `<t>^{-1-ε}`.
    OffDiagonalDecay,
    /// Skew part of the V0 block decays like `<t>^{-1-ε'}`.
    V0SkewDecay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub assumption: Assumption,
    pub side: Option<Side>,
    pub passed: bool,
    /// Measured decay exponent or defect norm; `None` when the quantity vanishes identically on the samples.
    pub measured: Option<f64>,
    pub required: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub ranks: [usize; 2],
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, a: Assumption, side: Option<Side>) -> Option<&Check> {
        self.checks.iter().find(|c| c.assumption == a && c.side == side)
    }
}

/// Exponent `p` in `f ~ <t>^{-p}` from a log-log fit over the decay samples on one end.
/// `None` when fewer than two samples are above the noise level (rapid or exact vanishing).
pub fn decay_exponent(side: Side, f: impl Fn(f64) -> (f64, f64)) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in DECAY_SAMPLES {
        let t = side.sign() * r;
        let (v, scale) = f(t);
        if v > 1e-14 * (1.0 + scale) {
            xs.push(japanese(t).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 2 {
        return None;
    }
    let (slope, _, _) = crate::phg::linear_fit(&xs, &ys);
    Some(-slope)
}

fn norm2(m: &CMat) -> f64 {
    linalg::svd(m).s.first().copied().unwrap_or(0.0)
}

/// Checks the structural assumptions on each end. Failures are reported, not raised.
pub fn validate_assumptions(p: &RadialOperator) -> ValidationReport {
    let mut report = ValidationReport::default();
    if p.check_shapes().is_err() {
        report.checks.push(Check { assumption: Assumption::CliffordUnitarySkew, side: None, passed: false, measured: None, required: None });
        return report;
    }
    let a = &p.clifford;
    let m = p.dim();
    let unit = linalg::max_abs_diff(&(a.adjoint() * a), &linalg::identity(m)).max(linalg::max_abs_diff(&a.adjoint(), &(-a)));
    report.checks.push(Check {
        assumption: Assumption::CliffordUnitarySkew,
        side: None,
        passed: unit <= STRUCTURE_TOL,
        measured: Some(unit),
        required: Some(STRUCTURE_TOL),
    });
    for (si, side) in Side::ALL.into_iter().enumerate() {
        let e = p.end(side);
        let phi = &e.phi_infinity;
        let skew = linalg::max_abs_diff(phi, &(-phi.adjoint()));
        let comm = linalg::max_abs(&linalg::commutator(phi, a));
        // only the V0 block enters the indicial pencil; on V1 a skew 1/<t> term is part of the potential
        let (v0, _) = coordinate_split(phi).unwrap_or_else(|| svd_split(phi));
        let b00 = v0.adjoint() * &e.b_term * &v0;
        let herm = linalg::max_abs_diff(&b00, &b00.adjoint());
        let mut push = |assumption, measured: Option<f64>, passed: bool, required: Option<f64>| {
            report.checks.push(Check { assumption, side: Some(side), passed, measured, required })
        };
        push(Assumption::PhiSkew, Some(skew), skew <= STRUCTURE_TOL, Some(STRUCTURE_TOL));
        push(Assumption::PhiCommutesWithClifford, Some(comm), comm <= STRUCTURE_TOL, Some(STRUCTURE_TOL));
        push(Assumption::BTermHermitian, Some(herm), herm <= STRUCTURE_TOL, Some(STRUCTURE_TOL));

        let sv = linalg::svd(phi).s;
        let top = sv.first().copied().unwrap_or(0.0).max(1.0);
        let rank = sv.iter().filter(|&&s| s > RANK_RTOL * top).count();
        report.ranks[si] = rank;
        let smallest = sv.iter().copied().filter(|&s| s > RANK_RTOL * top).fold(f64::INFINITY, f64::min);
        let threshold = if rank == 0 { 0.5 } else { 0.5 * smallest };
        let mut rank_ok = true;
        for r in [1e1, 1e2] {
            let sk = linalg::skew_part(&p.coefficient(side.sign() * r));
            let k = linalg::svd(&sk).s.iter().filter(|&&s| s > threshold).count();
            rank_ok &= k == rank;
        }
        push(Assumption::ConstantRank, Some(rank as f64), rank_ok, None);

        let need = 1.0 + e.epsilon;
        let rem = decay_exponent(side, |t| {
            let cm = p.coefficient(t);
            (norm2(&(&cm - p.declared_expansion(side, t))), linalg::max_abs(&cm))
        });
        push(Assumption::RemainderDecay, rem, rem.map_or(true, |x| x >= need - DECAY_SLACK), Some(need));

        let (v0, v1) = coordinate_split(phi).unwrap_or_else(|| svd_split(phi));
        let off = if v0.ncols() == 0 || v1.ncols() == 0 {
            None
        } else {
            decay_exponent(side, |t| {
                let cm = p.coefficient(t) - phi;
                let l01 = v0.adjoint() * &cm * &v1;
                let l10 = v1.adjoint() * &cm * &v0;
                (norm2(&l01).max(norm2(&l10)), linalg::max_abs(&cm))
            })
        };
        push(Assumption::OffDiagonalDecay, off, off.map_or(true, |x| x >= need - DECAY_SLACK), Some(need));

        let need0 = 1.0 + e.epsilon_prime;
        let sk0 = if v0.ncols() == 0 {
            None
        } else {
            decay_exponent(side, |t| {
                let cm = p.coefficient(t);
                (norm2(&linalg::skew_part(&(v0.adjoint() * &cm * &v0))), linalg::max_abs(&cm))
            })
        };
        push(Assumption::V0SkewDecay, sk0, sk0.map_or(true, |x| x >= need0 - DECAY_SLACK), Some(need0));
    }
    report
}

/// Slack on measured decay exponents (the log-log fit over four decades is biased by `<t>` vs `|t|`).
const DECAY_SLACK: f64 = 0.02;

/// Singular values of Φ∞ at or below this fraction of `max(1, σ_max)` count as zero.
pub const RANK_RTOL: f64 = 1e-9;
/// Singular values in `(ILL_LO, ILL_HI] * max(1, σ_max)` make the splitting ambiguous.
const ILL_LO: f64 = 1e-12;
const ILL_HI: f64 = 1e-6;

/// Coordinate splitting when the null space of Φ∞ is spanned by standard basis vectors, so that
/// block extraction is exact.
fn coordinate_split(phi: &CMat) -> Option<(CMat, CMat)> {
    let m = phi.nrows();
    let zero: Vec<usize> = (0..m).filter(|&i| (0..m).all(|j| phi[(i, j)] == re(0.0) && phi[(j, i)] == re(0.0))).collect();
    let rest: Vec<usize> = (0..m).filter(|i| !zero.contains(i)).collect();
    let sub = CMat::from_fn(rest.len(), rest.len(), |i, j| phi[(rest[i], rest[j])]);
    if linalg::rank(&sub, 1e-10) != rest.len() {
        return None;
    }
    let pick = |idx: &[usize]| CMat::from_fn(m, idx.len(), |i, j| if i == idx[j] { re(1.0) } else { re(0.0) });
    Some((pick(&zero), pick(&rest)))
}

fn svd_split(phi: &CMat) -> (CMat, CMat) {
    let top = linalg::svd(phi).s.first().copied().unwrap_or(0.0);
    let rtol = if top > 0.0 { RANK_RTOL * top.max(1.0) / top } else { 1.0 };
    let v0 = linalg::null_space(phi, rtol);
    let v1 = linalg::orth_complement(&v0, 1e-10);
    (v0, v1)
}

/// Splitting of the fiber at one end into `V0 = Null Φ∞` and `V1 = V0^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndSplit {
    pub side: Side,
    /// Orthonormal basis of V0 (columns).
    pub v0: CMat,
    /// Orthonormal basis of V1 (columns).
    pub v1: CMat,
    pub projector: CMat,
    /// Measured decay exponent of `L01`, `L10`; `None` when they vanish on the samples.
    pub offdiag_decay: Option<f64>,
}

impl EndSplit {
    pub fn rank(&self) -> usize {
        self.v1.ncols()
    }

    /// `D0` coefficient block `Q0^* C(t) Q0`.
    pub fn d0(&self, p: &RadialOperator, t: f64) -> CMat {
        self.v0.adjoint() * p.coefficient(t) * &self.v0
    }

    /// `D1 + Φ1` coefficient block.
    pub fn d1(&self, p: &RadialOperator, t: f64) -> CMat {
        self.v1.adjoint() * p.coefficient(t) * &self.v1
    }

    pub fn l01(&self, p: &RadialOperator, t: f64) -> CMat {
        self.v0.adjoint() * p.coefficient(t) * &self.v1
    }

    pub fn l10(&self, p: &RadialOperator, t: f64) -> CMat {
        self.v1.adjoint() * p.coefficient(t) * &self.v0
    }

    /// Clifford matrix restricted to V0.
    pub fn a0(&self, p: &RadialOperator) -> CMat {
        self.v0.adjoint() * &p.clifford * &self.v0
    }

    pub fn a1(&self, p: &RadialOperator) -> CMat {
        self.v1.adjoint() * &p.clifford * &self.v1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSplit {
    pub minus: EndSplit,
    pub plus: EndSplit,
}

impl BlockSplit {
    pub fn end(&self, side: Side) -> &EndSplit {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }
}

pub fn split_end(p: &RadialOperator, side: Side) -> Result<EndSplit, ModelError> {
    p.check_shapes()?;
    let e = p.end(side);
    let phi = &e.phi_infinity;
    if linalg::max_abs(&linalg::commutator(phi, &p.clifford)) > STRUCTURE_TOL {
        return Err(ModelError::NotCommuting(side));
    }
    let sv = linalg::svd(phi).s;
    let top = sv.first().copied().unwrap_or(0.0).max(1.0);
    if let Some(&s) = sv.iter().find(|&&s| s > ILL_LO * top && s <= ILL_HI * top) {
        return Err(ModelError::IllConditionedRank { side, sigma: s });
    }
    let (v0, v1) = coordinate_split(phi).unwrap_or_else(|| svd_split(phi));
    let projector = &v0 * v0.adjoint();
    let offdiag_decay = if v0.ncols() == 0 || v1.ncols() == 0 {
        None
    } else {
        decay_exponent(side, |t| {
            let cm = p.coefficient(t) - phi;
            ((v0.adjoint() * &cm * &v1).norm().max((v1.adjoint() * &cm * &v0).norm()), linalg::max_abs(&cm))
        })
    };
    Ok(EndSplit { side, v0, v1, projector, offdiag_decay })
}

pub fn split_blocks(p: &RadialOperator) -> Result<BlockSplit, ModelError> {
    Ok(BlockSplit { minus: split_end(p, Side::Minus)?, plus: split_end(p, Side::Plus)? })
}

/// The V0 block at one end after conjugation to b-form, with its indicial pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct BFragment {
    pub side: Side,
    pub n: u32,
    /// Clifford matrix on V0.
    pub a0: CMat,
    /// `B00 = Q0^* B0 Q0`.
    pub b00: CMat,
}

impl BFragment {
    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    pub fn shift(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    /// `(M0, M1)` with `I(λ) = M0 + λ M1`.
    pub fn pencil(&self) -> (CMat, CMat) {
        let o = self.side.orientation();
        let m1 = &self.a0 * re(o);
        let m0 = if self.n == 1 { self.b00.clone() } else { &self.b00 + &self.a0 * re(o * self.shift()) };
        (m0, m1)
    }

    /// Inverse of [`BFragment::pencil`].
    pub fn from_pencil(side: Side, n: u32, m0: &CMat, m1: &CMat) -> Self {
        let o = side.orientation();
        let a0 = m1 * re(o);
        let shift = (n as f64 - 1.0) / 2.0;
        let b00 = if n == 1 { m0.clone() } else { m0 - &a0 * re(o * shift) };
        Self { side, n, a0, b00 }
    }
}

/// `x^{-(n+1)/2} P x^{(n-1)/2}` on the V0 block at one end, reduced to its indicial data.
pub fn conjugate_to_b(p: &RadialOperator, split: &EndSplit) -> Result<BFragment, ModelError> {
    let e = p.end(split.side);
    if e.n == 0 || e.n % 2 == 0 {
        return Err(ModelError::BadN(e.n));
    }
    let a0 = split.a0(p);
    let k = a0.nrows();
    if k > 0 && linalg::rank(&a0, 1e-10) < k {
        return Err(ModelError::SingularClifford(split.side));
    }
    let b00 = split.v0.adjoint() * &e.b_term * &split.v0;
    Ok(BFragment { side: split.side, n: e.n, a0, b00 })
}

/// `A (iξ) + Φ∞`.
pub fn scattering_symbol(p: &RadialOperator, side: Side, xi: f64) -> CMat {
    &p.clifford * c(0.0, xi) + &p.end(side).phi_infinity
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipticity {
    pub fully_elliptic: bool,
    /// Smallest singular value of the symbol over the sampled ξ.
    pub min_sigma: f64,
}

/// Samples the symbol on ξ = 0 and a symmetric logarithmic grid over [1e-3, 1e3].
pub fn full_ellipticity(p: &RadialOperator, side: Side) -> Ellipticity {
    let mut xis = alloc::vec![0.0];
    for i in 0..=60 {
        let x = 10f64.powf(-3.0 + 0.1 * i as f64);
        xis.push(x);
        xis.push(-x);
    }
    let min_sigma = xis
        .iter()
        .map(|&x| linalg::svd(&scattering_symbol(p, side, x)).s.last().copied().unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    Ellipticity { fully_elliptic: min_sigma > 1e-8, min_sigma }
}

pub fn is_fully_elliptic(p: &RadialOperator) -> bool {
    Side::ALL.iter().all(|&s| full_ellipticity(p, s).fully_elliptic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{i_sigma2, sigma1, sigma3};
    use crate::models;

    #[test]
    fn model_a_passes_and_sigma3_fails_skewness() {
        let a = models::model_a(1.0);
        let r = validate_assumptions(&a);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.ranks, [2, 2]);
        let mut bad = a.clone();
        bad.plus.phi_infinity = sigma3();
        let r = validate_assumptions(&bad);
        assert!(!r.find(Assumption::PhiSkew, Some(Side::Plus)).unwrap().passed);
    }

    #[test]
    fn slow_coupling_fails_decay_with_exponent_one() {
        let mut p = models::model_c(&models::ModelCParams::default());
        let mut e13 = CMat::zeros(4, 4);
        e13[(0, 2)] = re(0.4);
        e13[(2, 0)] = re(0.4);
        p.potential.push(PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, e13));
        let r = validate_assumptions(&p);
        let chk = r.find(Assumption::OffDiagonalDecay, Some(Side::Plus)).unwrap();
        assert!(!chk.passed);
        assert!((chk.measured.unwrap() - 1.0).abs() < 0.02, "{:?}", chk.measured);
    }

    #[test]
    fn split_dimensions() {
        let s = split_blocks(&models::model_c(&models::ModelCParams::default())).unwrap();
        assert_eq!((s.plus.v0.ncols(), s.plus.v1.ncols()), (2, 2));
        let s = split_blocks(&models::model_a(1.0)).unwrap();
        assert_eq!(s.plus.v0.ncols(), 0);
        let s = split_blocks(&models::model_b(0.75)).unwrap();
        assert_eq!((s.minus.v0.ncols(), s.minus.v1.ncols()), (2, 0));
    }

    #[test]
    fn ill_conditioned_rank_is_rejected() {
        let mut p = models::model_a(1.0);
        p.plus.phi_infinity = linalg::identity(2) * c(0.0, 1e-9);
        assert!(matches!(split_end(&p, Side::Plus), Err(ModelError::IllConditionedRank { .. })));
    }

    #[test]
    fn pencils_of_model_b_fragments() {
        let b = 0.75;
        let p = models::model_b(b);
        let s = split_end(&p, Side::Plus).unwrap();
        let f = conjugate_to_b(&p, &s).unwrap();
        let (m0, m1) = f.pencil();
        assert_eq!(m0, sigma1() * re(b));
        assert_eq!(m1, -i_sigma2());
        let mut p3 = p.clone();
        p3.plus.n = 3;
        let f3 = conjugate_to_b(&p3, &s).unwrap();
        let (m0, m1) = f3.pencil();
        // b σ1 - iσ2 (λ + 1)
        assert_eq!(m0, sigma1() * re(b) - i_sigma2());
        assert_eq!(m1, -i_sigma2());
        assert_eq!(BFragment::from_pencil(Side::Plus, 3, &m0, &m1), f3);
        let e = models::euler();
        let f = conjugate_to_b(&e, &split_end(&e, Side::Plus).unwrap()).unwrap();
        assert_eq!(f.pencil().0, CMat::zeros(2, 2));
    }

    #[test]
    fn adjoint_is_involutive_and_flips_skew_part() {
        let p = models::model_c(&models::ModelCParams::default());
        let pp = formal_adjoint(&formal_adjoint(&p));
        assert_eq!(pp, p);
        let q = formal_adjoint(&p);
        for t in [-3.0, 0.4, 7.0] {
            let (cp, cq) = (p.coefficient(t), q.coefficient(t));
            assert!(linalg::max_abs_diff(&linalg::hermitian_part(&cp), &linalg::hermitian_part(&cq)) < 1e-15);
            assert!(linalg::max_abs_diff(&linalg::skew_part(&cp), &(-linalg::skew_part(&cq))) < 1e-15);
        }
        let d = models::euler();
        assert_eq!(formal_adjoint(&d).potential, d.potential);
    }

    #[test]
    fn symbol_invertibility() {
        let a = models::model_a(1.0);
        assert!(is_fully_elliptic(&a));
        assert_eq!(scattering_symbol(&a, Side::Plus, 0.0), a.plus.phi_infinity);
        assert!(!is_fully_elliptic(&models::model_b(0.75)));
    }

    #[test]
    fn profiles_have_declared_limits() {
        let ramp = Profile::TfRamp { theta: TfTheta::Rational };
        assert!((ramp.eval(1e8) - 1.0).abs() < 1e-7);
        assert!((ramp.eval(-1e3) * 1.6e10 - 1.0).abs() < 1e-2);
        let cut = Profile::EndCutoff { side: Side::Minus, inner: 2.0, outer: 4.0 };
        assert_eq!(cut.eval(-5.0), 1.0);
        assert_eq!(cut.eval(-1.0), 0.0);
        assert_eq!(cut.eval(5.0), 0.0);
    }
}
