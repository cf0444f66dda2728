//! Indicial pencils, b-spectra with Jordan chains, formal solutions, the boundary pairing, the
//! relative-index ledger and the defect index.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, c, re, CMat, CVec, C64};
use crate::model::{BFragment, Side};
use crate::phg::CutoffSpec;
use crate::quad;

/// Eigenvalues of `-M1^{-1} M0` closer than this (relative) are one root.
const CLUSTER_TOL: f64 = 1e-6;
/// Imaginary parts above this make a root non-real.
pub const REAL_TOL: f64 = 1e-8;
/// Distance from a root below which a weight counts as on-spectrum.
pub const ON_SPECTRUM_TOL: f64 = 1e-10;

pub const DEFAULT_WINDOW: (f64, f64) = (-10.0, 10.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndicialError {
    #[error("leading coefficient M1 of the pencil at the {0:?} end is singular")]
    SingularLeading(Side),
    #[error("eigenvalue solver did not converge")]
    EigenFailure,
    #[error("non-real root {re} + {im}i at the {side:?} end of a self-adjoint pencil")]
    NonReal { side: Side, re: f64, im: f64 },
    #[error("weight {alpha} lies on the b-spectrum (root {root})")]
    OnSpectrum { alpha: f64, root: f64 },
    #[error("parity violation at alpha = {alpha}: {total} formal solutions with |r| < |alpha|")]
    Parity { alpha: f64, total: usize },
    #[error("pairing diverges: exponents {0} and {1} do not sum to zero")]
    Divergent(f64, f64),
    #[error("empty or reversed window ({0}, {1})")]
    BadWindow(f64, f64),
}

/// `I(λ) = M0 + λ M1` at one end.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicialFamily {
    pub side: Side,
    pub n: u32,
    pub m0: CMat,
    pub m1: CMat,
}

impl IndicialFamily {
    pub fn from_fragment(f: &BFragment) -> Self {
        let (m0, m1) = f.pencil();
        Self { side: f.side, n: f.n, m0, m1 }
    }

    pub fn eval(&self, lambda: C64) -> CMat {
        &self.m0 + &self.m1 * lambda
    }

    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    /// Pencil of the model adjoint: `I(P*, λ) = M0^* - λ M1^*`.
    pub fn adjoint(&self) -> Self {
        Self { side: self.side, n: self.n, m0: self.m0.adjoint(), m1: -self.m1.adjoint() }
    }

    /// True when `M0` is Hermitian and `M1` skew-Hermitian (formally self-adjoint model).
    pub fn is_self_adjoint(&self) -> bool {
        linalg::is_hermitian(&self.m0, 1e-12) && linalg::is_skew_hermitian(&self.m1, 1e-12)
    }
}

/// `I(fragment, λ)`.
pub fn indicial_family(fragment: &BFragment, lambda: C64) -> CMat {
    IndicialFamily::from_fragment(fragment).eval(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    pub lambda: f64,
    pub imag: f64,
    /// Length of the longest Jordan chain, the pole order of `I(λ)^{-1}`.
    pub order: usize,
    /// Algebraic multiplicity, equal to `dim F` at this root.
    pub multiplicity: usize,
    /// Orthonormal basis of `Null I(λ0)`.
    pub nullspace: CMat,
    /// Jordan chains `[x0, x1, ...]` with `x0` in the null space and `(G - λ0) x_{j+1} = x_j`, `G = -M1^{-1} M0`.
    pub chains: Vec<Vec<CVec>>,
}

impl Root {
    pub fn nullity(&self) -> usize {
        self.nullspace.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSpectrum {
    pub side: Side,
    pub roots: Vec<Root>,
    /// Set when a non-self-adjoint pencil produced non-real roots (kept, sorted by real part).
    pub nonreal: bool,
}

impl BSpectrum {
    pub fn roots_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(move |r| r.lambda > lo && r.lambda < hi)
    }

    /// Multiset symmetry about 0 with matching orders and multiplicities.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.roots.iter().all(|r| {
            self.roots
                .iter()
                .any(|s| (s.lambda + r.lambda).abs() <= tol && s.order == r.order && s.multiplicity == r.multiplicity)
        })
    }

    pub fn restricted(&self, window: (f64, f64)) -> BSpectrum {
        BSpectrum { side: self.side, roots: self.roots_in(window.0, window.1).cloned().collect(), nonreal: self.nonreal }
    }
}

fn null_dim(m: &CMat, tol: f64) -> usize {
    let s = linalg::svd(m).s;
    s.iter().filter(|&&x| x <= tol).count() + m.ncols().saturating_sub(s.len())
}

/// Jordan chains of `n_op = G - λ0` on its generalized eigenspace of dimension `alg`.
fn jordan_chains(n_op: &CMat, alg: usize, tol: f64) -> Vec<Vec<CVec>> {
    let dim = n_op.nrows();
    let mut powers = alloc::vec![linalg::identity(dim)];
    let mut kdims = alloc::vec![0usize];
    while *kdims.last().unwrap() < alg && powers.len() <= alg {
        let next = n_op * powers.last().unwrap();
        kdims.push(null_dim(&next, tol).min(alg));
        powers.push(next);
    }
    let top = kdims.len() - 1;
    let kernel = |j: usize| -> CMat {
        if j == 0 {
            return CMat::zeros(dim, 0);
        }
        let d = linalg::svd(&powers[j]);
        let k = kdims[j];
        let vt = &d.v_t;
        CMat::from_fn(dim, k, |i, c_| vt[(dim - k + c_, i)].conj())
    };
    let mut chains: Vec<Vec<CVec>> = Vec::new();
    for len in (1..=top).rev() {
        let count_needed = (kdims[len] - kdims[len - 1])
            - chains.iter().filter(|ch| ch.len() > len).count();
        if count_needed == 0 {
            continue;
        }
        // avoid ker N^{len-1} and the level-len vectors of longer chains
        let mut avoid = kernel(len - 1);
        for ch in &chains {
            let v = &ch[len - 1];
            avoid = extend(&avoid, v);
        }
        let cand = kernel(len);
        let mut added = 0;
        for j in 0..cand.ncols() {
            if added == count_needed {
                break;
            }
            let v = cand.column(j).into_owned();
            let q = linalg::orthonormalize(&avoid);
            let resid = &v - &q * (q.adjoint() * &v);
            let nrm = resid.norm();
            if nrm > 1e-6 {
                let top_vec = resid / re(nrm);
                let mut chain = alloc::vec![top_vec.clone()];
                let mut cur = top_vec;
                for _ in 1..len {
                    cur = n_op * cur;
                    chain.push(cur.clone());
                }
                chain.reverse();
                avoid = extend(&avoid, &chain[len - 1]);
                chains.push(chain);
                added += 1;
            }
        }
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()));
    chains
}

fn extend(m: &CMat, v: &CVec) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols() + 1);
    out.view_mut((0, 0), m.shape()).copy_from(m);
    out.set_column(m.ncols(), v);
    out
}

/// All roots of `det(M0 + λ M1)`, with window-filtered reporting.
pub fn b_spectrum(fragment: &BFragment, window: (f64, f64)) -> Result<BSpectrum, IndicialError> {
    spectrum_of(&IndicialFamily::from_fragment(fragment)).map(|s| s.restricted(window))
}

pub fn spectrum_of(fam: &IndicialFamily) -> Result<BSpectrum, IndicialError> {
    let k = fam.dim();
    let side = fam.side;
    if k == 0 {
        return Ok(BSpectrum { side, roots: Vec::new(), nonreal: false });
    }
    let m1_inv = fam.m1.clone().try_inverse().ok_or(IndicialError::SingularLeading(side))?;
    if linalg::rank(&fam.m1, 1e-12) < k {
        return Err(IndicialError::SingularLeading(side));
    }
    let g = -(&m1_inv * &fam.m0);
    let eig = linalg::eigenvalues(&g).ok_or(IndicialError::EigenFailure)?;
    let self_adjoint = fam.is_self_adjoint();
    let scale = 1.0 + linalg::max_abs(&g);
    let mut roots = Vec::new();
    let mut nonreal = false;
    for (mu, mult) in linalg::cluster(&eig, CLUSTER_TOL) {
        let mut mu = mu;
        if mu.im.abs() > REAL_TOL * scale {
            if self_adjoint {
                return Err(IndicialError::NonReal { side, re: mu.re, im: mu.im });
            }
            nonreal = true;
        } else {
            mu.im = 0.0;
        }
        let n_op = &g - linalg::identity(k) * mu;
        let chains = jordan_chains(&n_op, mult, 1e-7 * scale);
        let nullspace = linalg::orthonormalize(&CMat::from_columns(&chains.iter().map(|ch| ch[0].clone()).collect::<Vec<_>>()));
        roots.push(Root {
            lambda: mu.re,
            imag: mu.im,
            order: chains.iter().map(|ch| ch.len()).max().unwrap_or(0),
            multiplicity: mult,
            nullspace,
            chains,
        });
    }
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.imag.total_cmp(&b.imag)));
    Ok(BSpectrum { side, roots, nonreal })
}

/// `x^{λ0} Σ_{j ≤ p} (log x)^j / j! c_j` at one end.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSolution {
    pub side: Side,
    pub exponent: f64,
    pub log_power: usize,
    /// `c_0, ..., c_p` with `c_p` in `Null I(λ0)`.
    pub coeffs: Vec<CVec>,
}

impl FormalSolution {
    pub fn eval(&self, x: f64) -> CVec {
        let l = x.ln();
        let mut out = CVec::zeros(self.coeffs[0].len());
        let mut pw = 1.0;
        for (j, cj) in self.coeffs.iter().enumerate() {
            if j > 0 {
                pw *= l / j as f64;
            }
            out += cj * re(pw);
        }
        out * re(x.powf(self.exponent))
    }

    /// `x d/dx` of the solution.
    pub fn x_derivative(&self, x: f64) -> CVec {
        let l = x.ln();
        let mut out = self.eval(x) * re(self.exponent);
        let mut pw = 1.0;
        for j in 1..self.coeffs.len() {
            if j > 1 {
                pw *= l / (j - 1) as f64;
            }
            out += &self.coeffs[j] * re(pw * x.powf(self.exponent));
        }
        out
    }

    /// Coefficients of `x^{λ0} (log x)^j / j!` in `I(x d/dx) u`; all vanish for a formal solution.
    pub fn residuals(&self, fam: &IndicialFamily) -> Vec<f64> {
        let i0 = fam.eval(re(self.exponent));
        (0..self.coeffs.len())
            .map(|j| {
                let mut r = &i0 * &self.coeffs[j];
                if j + 1 < self.coeffs.len() {
                    r += &fam.m1 * &self.coeffs[j + 1];
                }
                r.norm()
            })
            .collect()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c_| c_ * s).collect(), ..self.clone() }
    }
}

/// Basis of `F(P, r)` from the spectrum of the pencil at one end; empty when `r` is not a root.
pub fn formal_nullspace(spec: &BSpectrum, r: f64) -> Vec<FormalSolution> {
    let mut out = Vec::new();
    for root in spec.roots.iter().filter(|x| (x.lambda - r).abs() <= 1e-8 && x.imag == 0.0) {
        for chain in &root.chains {
            // c_j = N^j x_l = x_{l-j}
            for l in 0..chain.len() {
                let coeffs = (0..=l).map(|j| chain[l - j].clone()).collect();
                out.push(FormalSolution { side: spec.side, exponent: root.lambda, log_power: l, coeffs });
            }
        }
    }
    out
}

pub fn dim_formal(spec: &BSpectrum, r: f64) -> usize {
    spec.roots.iter().filter(|x| (x.lambda - r).abs() <= 1e-8).map(|x| x.multiplicity).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingValue {
    /// Quadrature of the commutator form.
    pub value: C64,
    /// `i <M1 u(1), v(1)>`.
    pub closed_form: C64,
}

const PAIRING_PANELS: usize = 48;
const PAIRING_ORDER: usize = 24;

/// `B(u, v) = (1/i) ∫ [<I(P)(φu), φv> - <φu, I(P*)(φv)>] ds/s` for `u ∈ F(P, r)`, `v ∈ F(P*, -r)`.
///
/// Both model operators are applied to `φu`, `φv` in full; the integrand vanishes where `φ` is
/// constant, so quadrature runs over the transition interval of the cutoff.
pub fn boundary_pairing(
    fam: &IndicialFamily,
    u: &FormalSolution,
    v: &FormalSolution,
    cutoff: &CutoffSpec,
) -> Result<PairingValue, IndicialError> {
    if u.side != v.side {
        return Ok(PairingValue { value: re(0.0), closed_form: re(0.0) });
    }
    if (u.exponent + v.exponent).abs() > 1e-8 {
        return Err(IndicialError::Divergent(u.exponent, v.exponent));
    }
    let adj = fam.adjoint();
    let apply = |f: &IndicialFamily, w: &FormalSolution, s: f64| -> (CVec, CVec) {
        let (phi, dphi) = cutoff.value_and_derivative(s);
        let val = w.eval(s) * re(phi);
        let sd = w.x_derivative(s) * re(phi) + w.eval(s) * re(s * dphi);
        (&f.m0 * &val + &f.m1 * sd, val)
    };
    let integrand = |s: f64| -> C64 {
        let (pu, phu) = apply(fam, u, s);
        let (pv, phv) = apply(&adj, v, s);
        (phv.dotc(&pu) - pv.dotc(&phu)) / s
    };
    let q: Cplx = quad::integrate(|s| Cplx(integrand(s)), cutoff.inner, cutoff.outer, PAIRING_PANELS, PAIRING_ORDER);
    let value = q.0 / c(0.0, 1.0);
    let closed_form = c(0.0, 1.0) * v.eval(1.0).dotc(&(&fam.m1 * u.eval(1.0)));
    Ok(PairingValue { value, closed_form })
}

#[derive(Debug, Clone, Copy, Default)]
struct Cplx(C64);

impl core::ops::Add for Cplx {
    type Output = Cplx;
    fn add(self, o: Cplx) -> Cplx {
        Cplx(self.0 + o.0)
    }
}

impl core::ops::Mul<f64> for Cplx {
    type Output = Cplx;
    fn mul(self, w: f64) -> Cplx {
        Cplx(self.0 * w)
    }
}

/// Pairing matrix between `F(P, r)` and `F(P*, -r)` at one end.
pub fn pairing_matrix(fam: &IndicialFamily, r: f64, cutoff: &CutoffSpec) -> Result<CMat, IndicialError> {
    let fu = formal_nullspace(&spectrum_of(fam)?, r);
    let fv = formal_nullspace(&spectrum_of(&fam.adjoint())?, -r);
    let mut m = CMat::zeros(fu.len(), fv.len());
    for (i, u) in fu.iter().enumerate() {
        for (j, v) in fv.iter().enumerate() {
            m[(i, j)] = boundary_pairing(fam, u, v, cutoff)?.value;
        }
    }
    Ok(m)
}

fn check_off_spectrum(spectra: &[BSpectrum], alpha: f64) -> Result<(), IndicialError> {
    for s in spectra {
        if let Some(r) = s.roots.iter().find(|r| (r.lambda - alpha).abs() <= ON_SPECTRUM_TOL) {
            return Err(IndicialError::OnSpectrum { alpha, root: r.lambda });
        }
    }
    Ok(())
}

/// `Σ_{α1 < r < α2} dim F(P, r)` over all supplied ends.
pub fn relative_index_ledger(spectra: &[BSpectrum], a1: f64, a2: f64) -> Result<i64, IndicialError> {
    if !(a1 < a2) {
        return Err(IndicialError::BadWindow(a1, a2));
    }
    check_off_spectrum(spectra, a1)?;
    check_off_spectrum(spectra, a2)?;
    Ok(spectra.iter().flat_map(|s| s.roots_in(a1, a2)).filter(|r| r.imag == 0.0).map(|r| r.multiplicity as i64).sum())
}

/// `-(1/2) sign(α) Σ_{|r| < |α|} dim F(P, r)`, the unique antisymmetric function with the jump law.
pub fn defect(spectra: &[BSpectrum], alpha: f64) -> Result<i64, IndicialError> {
    check_off_spectrum(spectra, alpha)?;
    check_off_spectrum(spectra, -alpha)?;
    let a = alpha.abs();
    let total: usize = spectra
        .iter()
        .flat_map(|s| s.roots.iter())
        .filter(|r| r.imag == 0.0 && r.lambda.abs() < a)
        .map(|r| r.multiplicity)
        .sum();
    if total % 2 == 1 {
        return Err(IndicialError::Parity { alpha, total });
    }
    let half = (total / 2) as i64;
    Ok(if alpha > 0.0 { -half } else { half })
}
