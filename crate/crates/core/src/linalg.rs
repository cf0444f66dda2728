//! Small dense complex linear algebra on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, Schur};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(n, m, |i, j| re(rows[i][j]))
}

/// Pauli matrices.
pub fn sigma1() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma2() -> CMat {
    CMat::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)])
}

pub fn sigma3() -> CMat {
    from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// `i sigma2 = [[0, 1], [-1, 0]]`.
pub fn i_sigma2() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(n, m);
    let (mut r, mut col) = (0, 0);
    for b in blocks {
        out.view_mut((r, col), b.shape()).copy_from(*b);
        r += b.nrows();
        col += b.ncols();
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn is_skew_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &(-m.adjoint())) <= tol
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

pub fn skew_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * re(0.5)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Singular values, descending, with `u` and `v^*` when requested.
/// Rows are zero-padded so that `v_t` always spans the full column space.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v_t: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let (r, cols) = m.shape();
    let padded = if r < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (r, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    if padded.nrows() == 0 || padded.ncols() == 0 {
        return Svd { u: CMat::zeros(r, 0), s: Vec::new(), v_t: CMat::identity(cols, cols) };
    }
    let d = padded.svd(true, true);
    let mut u = d.u.unwrap_or_else(|| CMat::zeros(r, 0));
    if r < cols {
        u = u.rows(0, r).into_owned();
    }
    Svd { u, s: d.singular_values.iter().copied().collect(), v_t: d.v_t.unwrap_or_else(|| CMat::zeros(0, cols)) }
}

/// Numerical rank with threshold `rtol * sigma_max`.
pub fn rank(m: &CMat, rtol: f64) -> usize {
    let s = svd(m).s;
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rtol * top && x > 0.0).count()
}

/// Orthonormal basis of the null space, as columns.
pub fn null_space(m: &CMat, rtol: f64) -> CMat {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return identity(cols);
    }
    let d = svd(m);
    let top = d.s.first().copied().unwrap_or(0.0);
    let k = d.s.iter().filter(|&&x| x > rtol * top && x > 0.0).count();
    let vt = &d.v_t;
    CMat::from_fn(cols, cols - k, |i, j| vt[(k + j, i)].conj())
}

/// Orthonormal basis of the column space.
pub fn range_basis(m: &CMat, rtol: f64) -> CMat {
    if m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let d = svd(m);
    let top = d.s.first().copied().unwrap_or(0.0);
    let k = d.s.iter().filter(|&&x| x > rtol * top && x > 0.0).count();
    d.u.columns(0, k).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`.
pub fn orth_complement(basis: &CMat, rtol: f64) -> CMat {
    let n = basis.nrows();
    if basis.ncols() == 0 {
        return identity(n);
    }
    null_space(&basis.adjoint(), rtol)
}

/// Thin QR orthonormalization of the columns (modified Gram-Schmidt with one reorthogonalization).
pub fn orthonormalize(m: &CMat) -> CMat {
    let (n, k) = m.shape();
    let mut q = m.clone();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).into_owned();
                let mut cj = q.column_mut(j);
                cj -= qi * proj;
            }
        }
        let nrm = q.column(j).norm();
        if nrm > 0.0 {
            let mut cj = q.column_mut(j);
            cj /= re(nrm);
        } else {
            let mut e = CVec::zeros(n);
            e[j % n.max(1)] = re(1.0);
            q.set_column(j, &e);
        }
    }
    q
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Option<Vec<C64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    if m.nrows() == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let h = hermitian_part(m);
    let e = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Orthonormal basis of the invariant subspace of `g` belonging to the eigenvalues selected by
/// `keep`, computed as the range of the product of `(g - mu)^mult` over the rejected clusters.
pub fn invariant_subspace(g: &CMat, keep: impl Fn(C64) -> bool, cluster_tol: f64) -> Option<CMat> {
    let n = g.nrows();
    let eig = eigenvalues(g)?;
    let clusters = cluster(&eig, cluster_tol);
    let kept: usize = clusters.iter().filter(|(mu, _)| keep(*mu)).map(|(_, k)| *k).sum();
    let mut p = identity(n);
    for (mu, mult) in &clusters {
        if keep(*mu) {
            continue;
        }
        let shifted = g - identity(n) * *mu;
        for _ in 0..*mult {
            p = &shifted * p;
        }
    }
    if kept == 0 {
        return Some(CMat::zeros(n, 0));
    }
    let d = svd(&p);
    Some(d.u.columns(0, kept).into_owned())
}

/// Groups nearly equal values; returns (mean, multiplicity).
pub fn cluster(vals: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut sorted: Vec<C64> = vals.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for v in sorted {
        let scale = 1.0_f64.max(v.norm());
        if let Some(last) = out.iter_mut().find(|(mean, _, _)| (*mean - v).norm() <= tol * scale) {
            last.1 += 1;
            last.2 += v;
            last.0 = last.2 / re(last.1 as f64);
        } else {
            out.push((v, 1, v));
        }
    }
    out.into_iter().map(|(m, k, _)| (m, k)).collect()
}
