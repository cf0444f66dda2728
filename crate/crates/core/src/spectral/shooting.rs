//! Independent kernel/cokernel count by shooting admissible subspaces in from both ends.
//!
//! Classification uses the numerically computed eigenvalues of the frozen matrix `A C(T)` at the
//! start radius, not the declared end data.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::SpectralError;
use crate::linalg::{self, CMat};
use crate::model::{formal_adjoint, RadialOperator, Side};

pub const SHOOT_RTOL: f64 = 1e-10;
pub const SHOOT_ATOL: f64 = 1e-12;
pub const MAX_STEPS: usize = 2_000_000;
/// Singular values of the matching matrix below this are zero.
pub const MATCH_ZERO: f64 = 1e-6;
/// Singular values in `[MATCH_ZERO, MATCH_DOUBT)` flag the count as doubtful.
pub const MATCH_DOUBT: f64 = 1e-3;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `Y' = f(t) Y` from `t0` to `t1` with adaptive Dormand-Prince steps, calling `renorm`
/// after every accepted step. Returns the final state and the number of accepted steps.
pub fn dopri5(f: impl Fn(f64) -> CMat, t0: f64, t1: f64, y0: CMat, renorm: impl Fn(&CMat) -> CMat) -> Result<(CMat, usize), SpectralError> {
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let k0 = linalg::max_abs(&f(t0)).max(1e-12);
    let mut h = (0.01 / k0).min(0.01 * span).max(1e-12);
    let mut steps = 0;
    let mut k1 = f(t) * &y;
    while (t1 - t) * dir > 0.0 {
        if steps >= MAX_STEPS {
            return Err(SpectralError::Integration(alloc::format!("step limit reached at t = {t}")));
        }
        h = h.min((t1 - t).abs());
        let hs = h * dir;
        let k2 = f(t + C2 * hs) * (&y + &k1 * linalg::re(hs * A21));
        let k3 = f(t + C3 * hs) * (&y + (&k1 * linalg::re(A31) + &k2 * linalg::re(A32)) * linalg::re(hs));
        let k4 = f(t + C4 * hs) * (&y + (&k1 * linalg::re(A41) + &k2 * linalg::re(A42) + &k3 * linalg::re(A43)) * linalg::re(hs));
        let k5 = f(t + C5 * hs)
            * (&y + (&k1 * linalg::re(A51) + &k2 * linalg::re(A52) + &k3 * linalg::re(A53) + &k4 * linalg::re(A54)) * linalg::re(hs));
        let k6 = f(t + hs)
            * (&y
                + (&k1 * linalg::re(A61) + &k2 * linalg::re(A62) + &k3 * linalg::re(A63) + &k4 * linalg::re(A64) + &k5 * linalg::re(A65))
                    * linalg::re(hs));
        let y5 = &y + (&k1 * linalg::re(B1) + &k3 * linalg::re(B3) + &k4 * linalg::re(B4) + &k5 * linalg::re(B5) + &k6 * linalg::re(B6)) * linalg::re(hs);
        let k7 = f(t + hs) * &y5;
        let err = (&k1 * linalg::re(E1) + &k3 * linalg::re(E3) + &k4 * linalg::re(E4) + &k5 * linalg::re(E5) + &k6 * linalg::re(E6) + &k7 * linalg::re(E7))
            * linalg::re(hs);
        let mut en = 0.0f64;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y5.iter()) {
            let sc = SHOOT_ATOL + SHOOT_RTOL * a.norm().max(b.norm());
            en = en.max(e.norm() / sc);
        }
        if !en.is_finite() {
            return Err(SpectralError::Integration(alloc::format!("non-finite state at t = {t}")));
        }
        if en <= 1.0 {
            t += hs;
            steps += 1;
            let q = renorm(&y5);
            // restart the FSAL derivative from the renormalized state
            k1 = f(t) * &q;
            y = q;
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * span.max(1.0) {
            return Err(SpectralError::Integration(alloc::format!("step size underflow at t = {t}")));
        }
    }
    Ok((y, steps))
}

/// Counts for one operator at one weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchInfo {
    /// Admissible dimensions at (minus, plus).
    pub admissible: [usize; 2],
    pub start_radius: [f64; 2],
    /// Singular values of the matching matrix at `t = 0`.
    pub sigmas: Vec<f64>,
    pub dim_ker: usize,
    pub flagged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingReport {
    pub alpha: f64,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub primal: MatchInfo,
    pub adjoint: MatchInfo,
}

impl ShootingReport {
    pub fn index(&self) -> i64 {
        self.dim_ker as i64 - self.dim_coker as i64
    }

    pub fn flagged(&self) -> bool {
        self.primal.flagged || self.adjoint.flagged
    }
}

/// Start radius: `1e4` at zero-rank ends, otherwise `clamp(60 / c_min, 100, 1e4)`.
pub fn start_radius(p: &RadialOperator, side: Side) -> f64 {
    let s = linalg::svd(&p.end(side).phi_infinity).s;
    let top = s.first().copied().unwrap_or(0.0).max(1.0);
    match s.iter().copied().filter(|&x| x > 1e-9 * top).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x)))) {
        None => 1e4,
        Some(cmin) => (60.0 / cmin).clamp(100.0, 1e4),
    }
}

fn shoot_end(p: &RadialOperator, side: Side, alpha: f64) -> Result<(CMat, f64, usize), SpectralError> {
    let r = start_radius(p, side);
    let t0 = side.sign() * r;
    let gen = |t: f64| &p.clifford * p.coefficient(t);
    let k = gen(t0);
    // x^λ = |t|^{-λ}, and e^{μ t} behaves like |t|^{μ T} near T
    let keep = |mu: linalg::C64| match side {
        Side::Plus => mu.re * r < -alpha,
        Side::Minus => mu.re * r > alpha,
    };
    let y0 = linalg::invariant_subspace(&k, keep, 1e-9).ok_or(SpectralError::Integration(alloc::string::String::from("eigen solver failed")))?;
    if y0.ncols() == 0 {
        return Ok((y0, r, 0));
    }
    let (y, steps) = dopri5(gen, t0, 0.0, y0, linalg::orthonormalize)?;
    Ok((linalg::orthonormalize(&y), r, steps))
}

fn match_at_origin(p: &RadialOperator, alpha: f64) -> Result<MatchInfo, SpectralError> {
    let (ym, rm, sm) = shoot_end(p, Side::Minus, alpha)?;
    let (yp, rp, sp) = shoot_end(p, Side::Plus, alpha)?;
    let m = p.dim();
    let (dm, dp) = (ym.ncols(), yp.ncols());
    let mut joint = CMat::zeros(m, dm + dp);
    joint.view_mut((0, 0), (m, dm)).copy_from(&ym);
    joint.view_mut((0, dm), (m, dp)).copy_from(&yp);
    let sigmas = if dm + dp == 0 { Vec::new() } else { linalg::svd(&joint).s };
    let rank = sigmas.iter().filter(|&&s| s >= MATCH_ZERO).count();
    let flagged = sigmas.iter().any(|&s| (MATCH_ZERO..MATCH_DOUBT).contains(&s));
    Ok(MatchInfo { admissible: [dm, dp], start_radius: [rm, rp], sigmas, dim_ker: dm + dp - rank, flagged, steps: sm + sp })
}

/// `(dim ker, dim coker)` of `P` at b-weight `alpha`; the cokernel is the kernel of `P*` at `-alpha`.
pub fn shooting_oracle(p: &RadialOperator, alpha: f64) -> Result<ShootingReport, SpectralError> {
    for side in Side::ALL {
        if p.end(side).n != 1 {
            return Err(SpectralError::UnsupportedN(p.end(side).n));
        }
    }
    let primal = match_at_origin(p, alpha)?;
    let adjoint = match_at_origin(&formal_adjoint(p), -alpha)?;
    Ok(ShootingReport { alpha, dim_ker: primal.dim_ker, dim_coker: adjoint.dim_ker, primal, adjoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};

    #[test]
    fn dopri_matches_exponential() {
        let k = CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(-1.0), re(0.0)]);
        let y0 = CMat::from_row_slice(2, 1, &[re(1.0), re(0.0)]);
        let (y, _) = dopri5(|_| k.clone(), 0.0, 3.0, y0, |y| y.clone()).unwrap();
        assert!((y[(0, 0)] - re(3f64.cos())).norm() < 1e-9);
        assert!((y[(1, 0)] + re(3f64.sin())).norm() < 1e-9);
        let _ = c(0.0, 0.0);
    }
}
