//! Row-wise Givens QR of banded complex matrices and the lowest singular triplets of the factor.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, c, re, CMat, C64};

/// A sparse row: first nonzero column and the entries that follow it.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub first: usize,
    pub entries: Vec<C64>,
}

/// Upper-triangular banded factor `R` of `M = QR`; `R(k, k + j)` is stored at `data[k * bw + j]`.
/// Rows that never received a pivot stay zero.
#[derive(Debug, Clone)]
pub struct BandedR {
    pub n: usize,
    pub bw: usize,
    data: Vec<C64>,
    filled: Vec<bool>,
}

/// Givens rotation acting on rows `a` (slot owner) and `b` (incoming row) of the input.
#[derive(Debug, Clone, Copy)]
struct Rot {
    a: usize,
    b: usize,
    cs: f64,
    sn: C64,
}

/// `M = Q [R; 0]` with `Q^*` kept as a sequence of rotations; slot `k` of `R` sits at input row
/// `owner[k]` of `Q^* M`.
#[derive(Debug, Clone)]
pub struct BandedQr {
    pub r: BandedR,
    pub nrows: usize,
    owner: Vec<Option<usize>>,
    rotations: Vec<Rot>,
}

impl BandedQr {
    /// Factorizes the rows (in order of nondecreasing `first`) of an `_ x n` matrix whose rows
    /// span at most `bw` columns.
    pub fn factor(rows: &[BandRow], n: usize, bw: usize) -> Self {
        let mut data = vec![re(0.0); n * bw];
        let mut filled = vec![false; n];
        let mut owner = vec![None; n];
        let mut rotations = Vec::new();
        let mut buf = vec![re(0.0); bw];
        for (i, row) in rows.iter().enumerate() {
            debug_assert!(row.entries.len() <= bw);
            buf.iter_mut().for_each(|z| *z = re(0.0));
            buf[..row.entries.len()].copy_from_slice(&row.entries);
            let mut k = row.first;
            while k < n {
                if buf.iter().all(|z| *z == re(0.0)) {
                    break;
                }
                if buf[0] != re(0.0) {
                    let rk = &mut data[k * bw..(k + 1) * bw];
                    if !filled[k] {
                        rk.copy_from_slice(&buf);
                        filled[k] = true;
                        owner[k] = Some(i);
                        break;
                    }
                    let (a, b) = (rk[0], buf[0]);
                    let r = a.norm().hypot(b.norm());
                    let (cs, sn) = if a.norm() == 0.0 { (0.0, b.conj() / b.norm()) } else { (a.norm() / r, (a / a.norm()) * b.conj() / r) };
                    for j in 0..bw {
                        let (x, y) = (rk[j], buf[j]);
                        rk[j] = x * cs + sn * y;
                        buf[j] = -sn.conj() * x + y * cs;
                    }
                    buf[0] = re(0.0);
                    rotations.push(Rot { a: owner[k].unwrap_or(i), b: i, cs, sn });
                }
                buf.rotate_left(1);
                buf[bw - 1] = re(0.0);
                k += 1;
            }
        }
        Self { r: BandedR { n, bw, data, filled }, nrows: rows.len(), owner, rotations }
    }

    /// `Q x` for each column of an `nrows x _` matrix.
    pub fn apply_q(&self, x: &mut CMat) {
        for rot in self.rotations.iter().rev() {
            for col in 0..x.ncols() {
                let (ya, yb) = (x[(rot.a, col)], x[(rot.b, col)]);
                x[(rot.a, col)] = ya * rot.cs - rot.sn * yb;
                x[(rot.b, col)] = rot.sn.conj() * ya + yb * rot.cs;
            }
        }
    }

    /// Input rows that own no slot of `R`; `Q e_p` for these span the left null space of `M`.
    pub fn free_rows(&self) -> Vec<usize> {
        let mut owned = vec![false; self.nrows];
        for p in self.owner.iter().flatten() {
            owned[*p] = true;
        }
        (0..self.nrows).filter(|&p| !owned[p]).collect()
    }

    /// `Q [w; 0]`: slot values placed at their owner rows, then rotated back.
    pub fn embed(&self, w: &CMat) -> CMat {
        let mut x = CMat::zeros(self.nrows, w.ncols());
        for (k, p) in self.owner.iter().enumerate() {
            if let Some(p) = p {
                x.row_mut(*p).copy_from(&w.row(k));
            }
        }
        self.apply_q(&mut x);
        x
    }
}

impl BandedR {
    pub fn factor(rows: &[BandRow], n: usize, bw: usize) -> Self {
        BandedQr::factor(rows, n, bw).r
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> C64 {
        self.data[k * self.bw + j]
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.n)
            .map(|k| (0..self.bw).map(|j| self.get(k, j).norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn unfilled(&self) -> usize {
        self.filled.iter().filter(|f| !**f).count()
    }

    fn diag_floor(&self) -> f64 {
        let top = (0..self.n).map(|k| self.get(k, 0).norm()).fold(0.0, f64::max);
        1e-14 * top.max(f64::MIN_POSITIVE)
    }

    /// Pivot with tiny values (and unfilled rows) lifted to `1e-14 max|R_kk|`.
    fn pivot(&self, k: usize, floor: f64) -> C64 {
        let d = self.get(k, 0);
        if d.norm() < floor {
            re(floor)
        } else {
            d
        }
    }

    /// `R x` for each column.
    pub fn mul(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, x.ncols());
        for col in 0..x.ncols() {
            for k in 0..self.n {
                let mut acc = re(0.0);
                for j in 0..self.bw.min(self.n - k) {
                    acc += self.get(k, j) * x[(k + j, col)];
                }
                out[(k, col)] = acc;
            }
        }
        out
    }

    /// `R^* x` for each column.
    pub fn mul_adjoint(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, x.ncols());
        for col in 0..x.ncols() {
            for k in 0..self.n {
                let xk = x[(k, col)];
                for j in 0..self.bw.min(self.n - k) {
                    out[(k + j, col)] += self.get(k, j).conj() * xk;
                }
            }
        }
        out
    }

    /// Solves `R x = b`.
    pub fn solve(&self, b: &mut CMat) {
        let floor = self.diag_floor();
        for col in 0..b.ncols() {
            for k in (0..self.n).rev() {
                let mut acc = b[(k, col)];
                for j in 1..self.bw.min(self.n - k) {
                    acc -= self.get(k, j) * b[(k + j, col)];
                }
                b[(k, col)] = acc / self.pivot(k, floor);
            }
        }
    }

    /// Solves `R^* x = b`.
    pub fn solve_adjoint(&self, b: &mut CMat) {
        let floor = self.diag_floor();
        for col in 0..b.ncols() {
            for k in 0..self.n {
                let mut acc = b[(k, col)];
                for j in 1..self.bw.min(k + 1) {
                    acc -= self.get(k - j, j).conj() * b[(k - j, col)];
                }
                b[(k, col)] = acc / self.pivot(k, floor).conj();
            }
        }
    }

    pub fn to_dense(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| if j >= i && j - i < self.bw { self.get(i, j - i) } else { re(0.0) })
    }

    /// Rows of `R̃^*`, where `R̃` keeps the filled rows of `R` (renumbered in order).
    fn filled_adjoint_rows(&self) -> (Vec<BandRow>, usize) {
        let mut index = vec![usize::MAX; self.n];
        let mut count = 0;
        for k in 0..self.n {
            if self.filled[k] {
                index[k] = count;
                count += 1;
            }
        }
        let mut rows = Vec::with_capacity(self.n);
        let mut last_first = 0;
        for j in 0..self.n {
            let lo = (j + 1).saturating_sub(self.bw);
            let mut first = None;
            let mut entries = Vec::new();
            for k in lo..=j {
                if self.filled[k] {
                    first.get_or_insert(index[k]);
                    entries.push(self.get(k, j - k).conj());
                }
            }
            let first = first.unwrap_or(last_first);
            last_first = first;
            rows.push(BandRow { first, entries });
        }
        (rows, count)
    }
}

/// Lowest singular values (ascending) with right singular vectors as columns.
#[derive(Debug, Clone)]
pub struct LowSpectrum {
    pub sigma: Vec<f64>,
    pub vectors: CMat,
    pub iterations: usize,
    pub converged: bool,
}

pub const SUBSPACE_MAX_ITER: usize = 300;
pub const SUBSPACE_RTOL: f64 = 1e-8;

/// Rayleigh-Ritz of `R` on the orthonormal columns of `v`; ascending singular values.
fn ritz(apply: &impl Fn(&CMat) -> CMat, v: &CMat) -> (Vec<f64>, CMat) {
    let k = v.ncols();
    let d = linalg::svd(&apply(v));
    let order: Vec<usize> = (0..d.s.len()).rev().collect();
    let sigma = order.iter().map(|&i| d.s[i]).collect();
    let w = CMat::from_fn(k, k, |i, j| d.v_t[(order[j], i)].conj());
    (sigma, v * w)
}

/// Relative size below which a Ritz value is locked before the main sweeps.
const LOCK_RATIO: f64 = 1e-6;

/// Inverse subspace iteration on `(T^* T)^{-1}` for a square nonsingular `T` given by its inverse,
/// inverse adjoint and forward action. Near-null directions are locked first; afterwards every
/// half-step is projected off the locked right vectors (before `T^{-*}` and after `T^{-1}`) and
/// the matching left vectors (between), so their huge amplification never mixes into the rest.
fn subspace(
    n: usize,
    k: usize,
    seed: u64,
    floor: f64,
    inv: impl Fn(&mut CMat),
    inv_adj: impl Fn(&mut CMat),
    apply: impl Fn(&CMat) -> CMat,
) -> (LowSpectrum, CMat) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = linalg::orthonormalize(&CMat::from_fn(n, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    if k == 0 {
        return (LowSpectrum { sigma: Vec::new(), vectors: v.clone(), iterations: 0, converged: true }, v);
    }
    // two plain sweeps expose the near-null directions
    for _ in 0..2 {
        inv_adj(&mut v);
        inv(&mut v);
        v = linalg::orthonormalize(&v);
    }
    let (sigma0, v0) = ritz(&apply, &v);
    let top = sigma0.last().copied().unwrap_or(0.0);
    let locked = sigma0.iter().take_while(|&&x| x < LOCK_RATIO * top).count().min(k);
    let z = v0.columns(0, locked).into_owned();
    let mut y = z.clone();
    inv_adj(&mut y);
    let y = linalg::orthonormalize(&y);
    let free = k - locked;
    let mut w = project_out(&v0.columns(locked, free).into_owned(), &z);
    w = linalg::orthonormalize(&w);
    let mut prev: Vec<f64> = vec![f64::INFINITY; free];
    let mut iterations = 2;
    let mut converged = free == 0;
    while !converged && iterations < SUBSPACE_MAX_ITER {
        iterations += 1;
        inv_adj(&mut w);
        w = project_out(&w, &y);
        inv(&mut w);
        w = linalg::orthonormalize(&project_out(&w, &z));
        let (sg, ww) = ritz(&apply, &w);
        w = ww;
        let check = (k / 2).saturating_sub(locked).clamp(1, free);
        converged = (0..check).all(|i| (sg[i] - prev[i]).abs() <= SUBSPACE_RTOL * sg[i].max(floor));
        prev = sg;
    }
    let mut basis = CMat::zeros(n, k);
    basis.view_mut((0, 0), (n, locked)).copy_from(&z);
    basis.view_mut((0, locked), (n, free)).copy_from(&w);
    let (sigma, basis) = ritz(&apply, &linalg::orthonormalize(&basis));
    (LowSpectrum { sigma, vectors: CMat::zeros(0, 0), iterations, converged }, basis)
}

fn project_out(v: &CMat, z: &CMat) -> CMat {
    if z.ncols() == 0 {
        return v.clone();
    }
    let mut out = v - z * (z.adjoint() * v);
    out -= z * (z.adjoint() * &out);
    out
}

/// Lowest `k` singular triplets of `R` (right vectors). The structural kernel of unfilled rows
/// comes from a second QR of the filled rows' adjoint, whose triangular factor is nonsingular
/// and carries the remaining singular values.
pub fn lowest_singular(r: &BandedR, k: usize, seed: u64) -> LowSpectrum {
    let n = r.n;
    let k = k.min(n);
    if r.unfilled() == 0 {
        let floor = 10.0 * n as f64 * f64::EPSILON * r.max_row_norm();
        let (mut low, w) = subspace(n, k, seed, floor, |x| r.solve(x), |x| r.solve_adjoint(x), |x| r.mul(x));
        low.vectors = w;
        return low;
    }
    let (rows, count) = r.filled_adjoint_rows();
    let qr = BandedQr::factor(&rows, count, r.bw);
    let free = qr.free_rows();
    let locked = free.len().min(k);
    let mut e = CMat::zeros(n, locked);
    for (j, &p) in free.iter().take(locked).enumerate() {
        e[(p, j)] = re(1.0);
    }
    qr.apply_q(&mut e);
    let rest = (k - locked).min(count);
    let s_ = &qr.r;
    let floor = 10.0 * count as f64 * f64::EPSILON * s_.max_row_norm();
    // T = S^*: T^{-1} = S^{-*}, T^{-*} = S^{-1}
    let (low, w) = subspace(count, rest, seed, floor, |x| s_.solve_adjoint(x), |x| s_.solve(x), |x| s_.mul_adjoint(x));
    let v = qr.embed(&w);
    let mut basis = CMat::zeros(n, locked + rest);
    basis.view_mut((0, 0), (n, locked)).copy_from(&e);
    basis.view_mut((0, locked), (n, rest)).copy_from(&v);
    let basis = linalg::orthonormalize(&basis);
    let (sigma, vectors) = ritz(&|x: &CMat| r.mul(x), &basis);
    LowSpectrum { sigma, vectors, iterations: low.iterations, converged: low.converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_band(n: usize, extra: usize, bw: usize, seed: u64) -> (Vec<BandRow>, CMat) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let total = n + extra;
        let mut dense = CMat::zeros(total, n);
        for i in 0..total {
            let first = (i * n / total).min(n - 1);
            let width = bw.min(n - first);
            let entries: Vec<C64> = (0..width).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            for (j, e) in entries.iter().enumerate() {
                dense[(i, first + j)] = *e;
            }
            rows.push(BandRow { first, entries });
        }
        (rows, dense)
    }

    #[test]
    fn factor_preserves_gram_matrix() {
        let (rows, dense) = random_band(30, 5, 4, 1);
        let r = BandedR::factor(&rows, 30, 4).to_dense();
        let diff = linalg::max_abs_diff(&(r.adjoint() * &r), &(dense.adjoint() * &dense));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn lowest_singular_values_match_dense_svd() {
        let (mut rows, mut dense) = random_band(60, 0, 4, 2);
        // drop two rows so that the kernel is two-dimensional
        rows.truncate(58);
        dense = dense.rows(0, 58).into_owned();
        let r = BandedR::factor(&rows, 60, 4);
        let low = lowest_singular(&r, 6, 7);
        let mut s = linalg::svd(&dense).s;
        s.resize(60, 0.0);
        s.reverse();
        for i in 0..4 {
            assert!((low.sigma[i] - s[i]).abs() < 1e-9 * s[5], "{i}: {} vs {}", low.sigma[i], s[i]);
        }
        assert!(low.sigma[1] < 1e-12);
        let resid = (&dense * low.vectors.column(0)).norm();
        assert!(resid < 1e-10);
    }

    #[test]
    fn interior_deficiency_and_full_rank() {
        let (rows, dense) = random_band(50, 6, 5, 3);
        let keep: Vec<usize> = (0..56).filter(|i| !(20..24).contains(i)).collect();
        let rows: Vec<BandRow> = keep.iter().map(|&i| rows[i].clone()).collect();
        let dense = CMat::from_fn(keep.len(), 50, |i, j| dense[(keep[i], j)]);
        let r = BandedR::factor(&rows, 50, 5);
        let low = lowest_singular(&r, 5, 1);
        let mut s = linalg::svd(&dense).s;
        s.reverse();
        for i in 0..3 {
            assert!((low.sigma[i] - s[i]).abs() < 1e-9 * s[4].max(1e-3), "{i}: {} vs {}", low.sigma[i], s[i]);
        }
        let v = &low.vectors;
        assert!((&dense * v).column(0).norm() <= 2.0 * s[0] + 1e-12);
    }
}
