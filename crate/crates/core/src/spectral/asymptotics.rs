//! Leading-order fits of numerical kernel elements at each end.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::assemble::{Discretization, Prepared};
use crate::linalg::{self, CMat, CVec};
use crate::model::{japanese, Side};
use crate::phg::{self, FitConfidence, LeadingOrder};

/// One element of the asymptotically filtered kernel basis at one end.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub side: Side,
    /// Fitted `z` in `x^z (log x)^k`, `x = 1/<t>`; `None` when the component vanishes on the window.
    pub exponent: Option<f64>,
    pub log_power: u32,
    pub residual: f64,
    pub low_confidence: bool,
    /// Local decay exponents on `<t>` in [2, 6] and [6, 18].
    pub window_exponents: (f64, f64),
    /// The local exponent grows with the window (faster than any power).
    pub superpolynomial: bool,
    /// True when the V0 component was fitted; false when V0 is trivial at this end.
    pub v0_component: bool,
}

const SAMPLES_PER_END: usize = 24;

fn nodes_in(t: &[f64], side: Side, lo: f64, hi: f64) -> Vec<usize> {
    (0..t.len()).filter(|&j| t[j] * side.sign() > 0.0 && japanese(t[j]) >= lo && japanese(t[j]) <= hi).collect()
}

fn nearest(t: &[f64], side: Side, radius: f64) -> usize {
    (0..t.len())
        .filter(|&j| t[j] * side.sign() > 0.0)
        .min_by(|&a, &b| (japanese(t[a]).ln() - radius.ln()).abs().total_cmp(&(japanese(t[b]).ln() - radius.ln()).abs()))
        .unwrap_or(0)
}

fn local_exponent(values: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = values.iter().filter(|(_, v)| *v > 0.0).map(|(r, v)| (r.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    -phg::linear_fit(&xs, &ys).0
}

/// Splits the kernel at each end into combinations that are pure modes asymptotically (eigenvectors
/// of the transfer between two far radii), then fits each one's V0 component over
/// `<t> ∈ [10, 10^{L-1}]`.
pub fn nullspace_asymptotics(prep: &Prepared, disc: &Discretization, kernel: &CMat, decades: f64) -> Vec<KernelFit> {
    let k = kernel.ncols();
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let t = &disc.t;
    let values: Vec<Vec<CVec>> = (0..k).map(|c| disc.unweighted(kernel.column(c).as_slice())).collect();
    let at = |j: usize| -> CMat { CMat::from_fn(disc.m, k, |i, c| values[c][j][i]) };
    for side in Side::ALL {
        let es = prep.split.end(side);
        let p0 = if es.v0.ncols() > 0 { es.projector.clone() } else { linalg::identity(disc.m) };
        let far = 10f64.powf(decades - 1.0);
        let (j1, j2) = (nearest(t, side, far / 10.0), nearest(t, side, far));
        let (u1, u2) = (&p0 * at(j1), &p0 * at(j2));
        let basis = filtered_basis(&u1, &u2).unwrap_or_else(|| linalg::identity(k));
        let window = nodes_in(t, side, 10.0, far);
        let stride = (window.len() / SAMPLES_PER_END).max(1);
        let picks: Vec<usize> = window.iter().copied().step_by(stride).collect();
        let near = |lo: f64, hi: f64| nodes_in(t, side, lo, hi);
        for c in 0..basis.ncols() {
            let coef = basis.column(c).into_owned();
            let value = |j: usize| -> CMat { let v = &p0 * at(j) * &coef; CMat::from_column_slice(v.len(), 1, v.as_slice()) };
            let samples: Vec<(f64, CMat)> = picks.iter().map(|&j| (1.0 / japanese(t[j]), value(j))).collect();
            let full = |j: usize| (at(j) * &coef).norm();
            let w1: Vec<(f64, f64)> = near(2.0, 6.0).iter().map(|&j| (japanese(t[j]), full(j))).collect();
            let w2: Vec<(f64, f64)> = near(6.0, 18.0).iter().map(|&j| (japanese(t[j]), full(j))).collect();
            let (z1, z2) = (local_exponent(&w1), local_exponent(&w2));
            let superpolynomial = z2 > z1 + 1.0 && z1 > 0.0;
            let (exponent, log_power, residual, low) = match phg::fit_leading_order(&samples) {
                Ok(LeadingOrder::Fit(f)) => (Some(f.z), f.k, f.residual, f.confidence == FitConfidence::Low),
                _ => (None, 0, 0.0, false),
            };
            out.push(KernelFit {
                side,
                exponent,
                log_power,
                residual,
                low_confidence: low,
                window_exponents: (z1, z2),
                superpolynomial,
                v0_component: es.v0.ncols() > 0,
            });
        }
    }
    out
}

/// Eigenvectors of the least-squares transfer `u1 c ↦ u2 c`, sorted by growth (slowest decay first).
fn filtered_basis(u1: &CMat, u2: &CMat) -> Option<CMat> {
    let k = u1.ncols();
    let d = linalg::svd(u1);
    let top = d.s.first().copied().unwrap_or(0.0);
    if top == 0.0 || d.s.iter().take(k).any(|&s| s < 1e-10 * top) || d.s.len() < k {
        return None;
    }
    let pinv = u1.clone().pseudo_inverse(1e-12 * top).ok()?;
    let x = pinv * u2;
    let eig = linalg::eigenvalues(&x)?;
    let mut cl = linalg::cluster(&eig, 1e-6);
    cl.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()));
    let mut cols = Vec::new();
    for (mu, _) in cl {
        let q = linalg::invariant_subspace(&x, |z| (z - mu).norm() <= 1e-6 * (1.0 + mu.norm()), 1e-6)?;
        for j in 0..q.ncols() {
            cols.push(q.column(j).into_owned());
        }
    }
    if cols.len() != k {
        return None;
    }
    Some(CMat::from_columns(&cols))
}
