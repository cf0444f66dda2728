//! Weighted box-scheme discretization with asymptotic boundary rows.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::banded::BandRow;
use super::grid::trapezoid_weights;
use super::SpectralError;
use crate::indicial::{self, BSpectrum, IndicialFamily};
use crate::linalg::{self, re, CMat, C64};
use crate::model::{self, japanese, BlockSplit, RadialOperator, Side};

/// b-weight `α` on V0 and sc-weight `β` on V1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl WeightSpec {
    /// `β = α + 1/2`.
    pub fn hybrid(alpha: f64) -> Self {
        Self { alpha, beta: alpha + 0.5 }
    }

    /// Unweighted on V1, as used for fully elliptic operators.
    pub fn scattering(alpha: f64) -> Self {
        Self { alpha, beta: 0.0 }
    }

    /// Weights of the dual space, used for the cokernel.
    pub fn dual(&self) -> Self {
        Self { alpha: -self.alpha, beta: -self.beta }
    }
}

/// An operator with its per-end splitting and V0 spectra.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub op: RadialOperator,
    pub split: BlockSplit,
    pub spectra: [BSpectrum; 2],
}

impl Prepared {
    pub fn new(p: &RadialOperator) -> Result<Self, SpectralError> {
        p.check_shapes()?;
        for side in Side::ALL {
            if p.end(side).n != 1 {
                return Err(SpectralError::UnsupportedN(p.end(side).n));
            }
        }
        let split = model::split_blocks(p)?;
        let mut spectra = Vec::with_capacity(2);
        for side in Side::ALL {
            let frag = model::conjugate_to_b(p, split.end(side))?;
            spectra.push(indicial::spectrum_of(&IndicialFamily::from_fragment(&frag))?);
        }
        let plus = spectra.pop().unwrap();
        let minus = spectra.pop().unwrap();
        Ok(Self { op: p.clone(), split, spectra: [minus, plus] })
    }

    pub fn spectrum(&self, side: Side) -> &BSpectrum {
        &self.spectra[side as usize]
    }

    /// Distance from `alpha` to the nearest V0 root over both ends.
    pub fn root_distance(&self, alpha: f64) -> (f64, Option<f64>) {
        let mut best = (f64::INFINITY, None);
        for s in &self.spectra {
            for r in &s.roots {
                let d = (r.lambda - alpha).abs();
                if d < best.0 {
                    best = (d, Some(r.lambda));
                }
            }
        }
        best
    }

    /// `(W_in, W_out)` at `t`; both equal the identity at `t = 0`.
    pub fn weights(&self, ws: &WeightSpec, t: f64) -> (CMat, CMat) {
        let side = if t >= 0.0 { Side::Plus } else { Side::Minus };
        let p0 = &self.split.end(side).projector;
        let p1 = linalg::identity(p0.nrows()) - p0;
        let jt = japanese(t);
        let w1 = jt.powf(ws.beta);
        let win = p0 * re(jt.powf(ws.alpha - 0.5)) + &p1 * re(w1);
        let wout = p0 * re(jt.powf(ws.alpha + 0.5)) + &p1 * re(w1);
        (win, wout)
    }

    fn weight_in_inverse(&self, ws: &WeightSpec, t: f64) -> CMat {
        let side = if t >= 0.0 { Side::Plus } else { Side::Minus };
        let p0 = &self.split.end(side).projector;
        let p1 = linalg::identity(p0.nrows()) - p0;
        let jt = japanese(t);
        p0 * re(jt.powf(0.5 - ws.alpha)) + &p1 * re(jt.powf(-ws.beta))
    }

    /// Values at `t = side * radius` of the solutions admissible at weight `alpha`: Jordan chains of
    /// V0 roots above `alpha`, and the outward-decaying eigenvectors of `A (Φ∞ + B0/T)` on V1.
    pub fn admissible_subspace(&self, side: Side, alpha: f64, radius: f64) -> CMat {
        let es = self.split.end(side);
        let m = self.op.dim();
        let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
        for root in self.spectrum(side).roots.iter().filter(|r| r.lambda > alpha) {
            for chain in &root.chains {
                for x in chain {
                    cols.push(&es.v0 * x);
                }
            }
        }
        if es.v1.ncols() > 0 {
            let e = self.op.end(side);
            let a1 = es.a1(&self.op);
            let k1 = &a1 * (es.v1.adjoint() * (&e.phi_infinity + &e.b_term * re(1.0 / japanese(radius))) * &es.v1);
            let sgn = side.sign();
            if let Some(q) = linalg::invariant_subspace(&k1, |mu| mu.re * sgn < 0.0, 1e-9) {
                for j in 0..q.ncols() {
                    cols.push(&es.v1 * q.column(j));
                }
            }
        }
        if cols.is_empty() {
            return CMat::zeros(m, 0);
        }
        linalg::orthonormalize(&CMat::from_columns(&cols))
    }
}

/// Rows of the weighted matrix in unknowns `y_j = sqrt(w_j) W_in(t_j) u_j`, node-major.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub t: Vec<f64>,
    pub m: usize,
    pub rows: Vec<BandRow>,
    pub ncols: usize,
    /// Per node: `W_in(t_j)^{-1} / sqrt(w_j)`, mapping `y_j` back to `u_j`.
    pub unweight: Vec<CMat>,
    /// Dimensions of the admissible subspaces at (minus, plus).
    pub admissible: [usize; 2],
}

impl Discretization {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Bandwidth of every row.
    pub fn bandwidth(&self) -> usize {
        2 * self.m
    }

    /// `ncols - nrows`, the index of the discrete problem.
    pub fn discrete_index(&self) -> i64 {
        self.ncols as i64 - self.nrows() as i64
    }

    /// Node values `u_j` of a vector in weighted unknowns.
    pub fn unweighted(&self, y: &[C64]) -> Vec<nalgebra::DVector<C64>> {
        (0..self.t.len())
            .map(|j| &self.unweight[j] * nalgebra::DVector::from_column_slice(&y[j * self.m..(j + 1) * self.m]))
            .collect()
    }

    pub fn to_dense(&self) -> CMat {
        let mut d = CMat::zeros(self.nrows(), self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, e) in r.entries.iter().enumerate() {
                d[(i, r.first + j)] = *e;
            }
        }
        d
    }
}

fn boundary_rows(prep: &Prepared, side: Side, alpha: f64, t_end: f64, win: &CMat, gamma: f64, first: usize) -> (Vec<BandRow>, usize) {
    let m = prep.op.dim();
    let e = prep.admissible_subspace(side, alpha, t_end.abs());
    let d = e.ncols();
    let g = if d == 0 { linalg::identity(m) } else { linalg::orth_complement(&linalg::orthonormalize(&(win * &e)), 1e-10) };
    let rows = (0..g.ncols())
        .map(|k| BandRow { first, entries: (0..m).map(|i| g[(i, k)].conj() * gamma).collect() })
        .collect();
    (rows, d)
}

pub fn assemble(prep: &Prepared, t: &[f64], ws: &WeightSpec) -> Discretization {
    let m = prep.op.dim();
    let a = &prep.op.clifford;
    let n = t.len();
    let w = trapezoid_weights(t);
    let unweight: Vec<CMat> = (0..n).map(|j| prep.weight_in_inverse(ws, t[j]) * re(1.0 / w[j].sqrt())).collect();
    let mut cells: Vec<BandRow> = Vec::with_capacity((n - 1) * m);
    let mut gamma_first = 0.0;
    let mut gamma_last = 0.0;
    for j in 0..n - 1 {
        let h = t[j + 1] - t[j];
        let tm = 0.5 * (t[j] + t[j + 1]);
        let (_, wout) = prep.weights(ws, tm);
        let cm = prep.op.coefficient(tm) * re(0.5);
        let ah = a * re(1.0 / h);
        let scale = re(h.sqrt());
        let left = &wout * (&cm - &ah) * &unweight[j] * scale;
        let right = &wout * (&cm + &ah) * &unweight[j + 1] * scale;
        let block_max = linalg::max_abs(&left).max(linalg::max_abs(&right));
        if j == 0 {
            gamma_first = block_max;
        }
        if j == n - 2 {
            gamma_last = block_max;
        }
        for i in 0..m {
            let mut entries = Vec::with_capacity(2 * m);
            entries.extend((0..m).map(|k| left[(i, k)]));
            entries.extend((0..m).map(|k| right[(i, k)]));
            cells.push(BandRow { first: j * m, entries });
        }
    }
    let (win0, _) = prep.weights(ws, t[0]);
    let (winn, _) = prep.weights(ws, t[n - 1]);
    let (left_rows, dl) = boundary_rows(prep, Side::Minus, ws.alpha, t[0], &win0, gamma_first, 0);
    let (right_rows, dr) = boundary_rows(prep, Side::Plus, ws.alpha, t[n - 1], &winn, gamma_last, (n - 1) * m);
    let mut rows = left_rows;
    rows.extend(cells);
    rows.extend(right_rows);
    Discretization { t: t.to_vec(), m, rows, ncols: n * m, unweight, admissible: [dl, dr] }
}
