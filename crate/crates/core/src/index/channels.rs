//! Partial-wave channels on the half-line `r > 0`: a regular singular point `K/r` at the origin and
//! a full-rank end at infinity, discretized with the same box scheme and singular-value count.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::IndexError;
use crate::linalg::{self, c, re, CMat, C64};
use crate::model::{PotentialTerm, Profile};
use crate::spectral::banded::BandRow;
use crate::spectral::grid::trapezoid_weights;
use crate::spectral::{self, Discretization, DEFAULT_GAP};

/// `A d/dr + K/r + Σ profile(r) M` on `L²(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    pub degeneracy: usize,
    pub clifford: CMat,
    /// Coefficient of `1/r`.
    pub origin: CMat,
    pub potential: Vec<PotentialTerm>,
}

impl Channel {
    pub fn dim(&self) -> usize {
        self.clifford.nrows()
    }

    pub fn coefficient(&self, r: f64) -> CMat {
        let mut out = &self.origin * re(1.0 / r);
        for term in &self.potential {
            out += &term.matrix * re(term.profile.eval(r));
        }
        out
    }

    /// `(A d/dr + C)^* = A d/dr + C^*` for constant skew `A`.
    pub fn adjoint(&self) -> Channel {
        Channel {
            label: format!("{}*", self.label),
            degeneracy: self.degeneracy,
            clifford: self.clifford.clone(),
            origin: self.origin.adjoint(),
            potential: self.potential.iter().map(|t| PotentialTerm::new(t.profile, t.matrix.adjoint())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFamily {
    pub channels: Vec<Channel>,
    /// Innermost node.
    pub inner: f64,
    /// Truncation radius; beyond it the coefficient is asserted invertible with `σ_min >= tail_bound`.
    pub cutoff: f64,
    pub tail_bound: f64,
    pub nodes: usize,
    pub gap: f64,
}

/// Free Dirac partial waves `[[0, -d/dr + κ/r], [d/dr + κ/r, 0]] + i c tanh(r)` for
/// `κ = ±1, ..., ±kmax`, each with degeneracy `2|κ|`.
pub fn free_dirac_channels(kmax: u32, c_: f64) -> ChannelFamily {
    let a = linalg::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
    let mut channels = Vec::new();
    for k in 1..=kmax as i32 {
        for kappa in [-k, k] {
            channels.push(Channel {
                label: format!("kappa={kappa}"),
                degeneracy: 2 * k as usize,
                clifford: a.clone(),
                origin: linalg::sigma1() * re(kappa as f64),
                potential: alloc::vec![PotentialTerm::new(Profile::Tanh { scale: 1.0 }, linalg::identity(2) * c(0.0, c_))],
            });
        }
    }
    ChannelFamily { channels, inner: 1e-4, cutoff: 30.0, tail_bound: 0.5 * c_.abs(), nodes: 1200, gap: DEFAULT_GAP }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub label: String,
    pub degeneracy: usize,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub gap_ratio: f64,
    /// Admissible dimensions at the origin and at the cutoff.
    pub admissible: [usize; 2],
}

/// Nodes `r = log(1 + e^s)` with `s` uniform: geometric near the origin, uniform far out.
pub fn channel_grid(inner: f64, cutoff: f64, nodes: usize) -> Vec<f64> {
    let s0 = inner.exp_m1().ln();
    let s1 = cutoff + (-(-cutoff).exp()).ln_1p();
    (0..nodes).map(|j| (s0 + (s1 - s0) * j as f64 / (nodes - 1) as f64).exp().ln_1p()).collect()
}

/// Unit eigenvectors of `g` whose eigenvalues satisfy `keep`.
fn selected(g: &CMat, keep: impl Fn(C64) -> bool) -> Result<CMat, IndexError> {
    linalg::invariant_subspace(g, keep, 1e-9).ok_or(IndexError::Unsupported("eigenvalue solver did not converge"))
}

fn closure_rows(adm: &CMat, m: usize, gamma: f64, first: usize) -> Vec<BandRow> {
    let g = if adm.ncols() == 0 { linalg::identity(m) } else { linalg::orth_complement(adm, 1e-10) };
    (0..g.ncols()).map(|k| BandRow { first, entries: (0..m).map(|i| g[(i, k)].conj() * gamma).collect() }).collect()
}

/// Box-scheme matrix of one channel in unknowns `sqrt(w_j) u_j`.
pub fn assemble_channel(ch: &Channel, r: &[f64]) -> Result<Discretization, IndexError> {
    let m = ch.dim();
    let a = &ch.clifford;
    let n = r.len();
    let w = trapezoid_weights(r);
    let unweight: Vec<CMat> = w.iter().map(|wj| linalg::identity(m) * re(1.0 / wj.sqrt())).collect();
    let mut cells = Vec::with_capacity((n - 1) * m);
    let (mut g0, mut g1) = (0.0, 0.0);
    for j in 0..n - 1 {
        let h = r[j + 1] - r[j];
        let cm = ch.coefficient(0.5 * (r[j] + r[j + 1])) * re(0.5);
        let ah = a * re(1.0 / h);
        let s = re(h.sqrt());
        let left = (&cm - &ah) * &unweight[j] * s;
        let right = (&cm + &ah) * &unweight[j + 1] * s;
        let bm = linalg::max_abs(&left).max(linalg::max_abs(&right));
        if j == 0 {
            g0 = bm;
        }
        g1 = bm;
        for i in 0..m {
            let mut entries = Vec::with_capacity(2 * m);
            entries.extend((0..m).map(|k| left[(i, k)]));
            entries.extend((0..m).map(|k| right[(i, k)]));
            cells.push(BandRow { first: j * m, entries });
        }
    }
    // u ~ r^μ v with A K v = μ v near 0; square integrable iff μ > -1/2
    let near = selected(&(a * &ch.origin), |mu| mu.re > -0.5)?;
    // u' = A C(R) u beyond the cutoff; keep the decaying directions
    let far = selected(&(a * ch.coefficient(r[n - 1])), |mu| mu.re < 0.0)?;
    let mut rows = closure_rows(&near, m, g0, 0);
    rows.extend(cells);
    rows.extend(closure_rows(&far, m, g1, (n - 1) * m));
    Ok(Discretization { t: r.to_vec(), m, rows, ncols: n * m, unweight, admissible: [near.ncols(), far.ncols()] })
}

fn channel_run(ch: &Channel, adj: &Channel, r: &[f64]) -> Result<(usize, usize, f64, i64, [usize; 2]), IndexError> {
    let disc = assemble_channel(ch, r)?;
    let primal = spectral::solve_kernel(&disc);
    let dual = spectral::solve_kernel(&assemble_channel(adj, r)?);
    Ok((primal.dim, dual.dim, primal.ratio.min(dual.ratio), disc.discrete_index(), disc.admissible))
}

/// Index of one channel on the family grid, confirmed on a grid with 1.5x the nodes.
pub fn channel_index(ch: &Channel, family: &ChannelFamily) -> Result<ChannelReport, IndexError> {
    let tail = linalg::svd(&ch.coefficient(family.cutoff)).s.last().copied().unwrap_or(0.0);
    if tail < family.tail_bound {
        return Err(IndexError::Unsupported("coefficient at the cutoff is below the asserted tail bound"));
    }
    let adj = ch.adjoint();
    let mut first = None;
    for nodes in [family.nodes, family.nodes * 3 / 2] {
        let r = channel_grid(family.inner, family.cutoff, nodes);
        let (k, ck, ratio, di, adm) = channel_run(ch, &adj, &r)?;
        if ratio < family.gap || k as i64 - ck as i64 != di {
            return Err(spectral::SpectralError::Indeterminate(alloc::boxed::Box::new(spectral::Indeterminate {
                reason: format!("channel {}: kernel {k}, cokernel {ck}, shape index {di}, gap {ratio:.3e} on {nodes} nodes", ch.label),
                history: Vec::new(),
            }))
            .into());
        }
        match first {
            None => first = Some((k, ck, ratio, adm)),
            Some((k0, c0, _, _)) if (k0, c0) != (k, ck) => {
                return Err(spectral::SpectralError::Indeterminate(alloc::boxed::Box::new(spectral::Indeterminate {
                    reason: format!("channel {}: (kernel, cokernel) moved from ({k0}, {c0}) to ({k}, {ck}) on {nodes} nodes", ch.label),
                    history: Vec::new(),
                }))
                .into());
            }
            _ => {}
        }
    }
    let (dim_ker, dim_coker, gap_ratio, admissible) = first.expect("two grids ran");
    Ok(ChannelReport {
        label: ch.label.clone(),
        degeneracy: ch.degeneracy,
        dim_ker,
        dim_coker,
        index: dim_ker as i64 - dim_coker as i64,
        gap_ratio,
        admissible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSum {
    pub channels: Vec<ChannelReport>,
    /// `Σ degeneracy * index`.
    pub weighted: i64,
}

pub fn collect_channels(channels: Vec<ChannelReport>) -> ChannelSum {
    let weighted = channels.iter().map(|c| c.degeneracy as i64 * c.index).sum();
    ChannelSum { channels, weighted }
}

pub fn channel_sum(family: &ChannelFamily) -> Result<ChannelSum, IndexError> {
    let reports = family.channels.iter().map(|ch| channel_index(ch, family)).collect::<Result<Vec<_>, _>>()?;
    Ok(collect_channels(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_the_half_line() {
        let r = channel_grid(1e-4, 30.0, 400);
        assert!((r[0] - 1e-4).abs() < 1e-12 && (r[399] - 30.0).abs() < 1e-9);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn low_channel_has_index_zero() {
        let mut fam = free_dirac_channels(1, 1.0);
        fam.nodes = 400;
        for ch in &fam.channels {
            let rep = channel_index(ch, &fam).unwrap();
            assert_eq!(rep.admissible, [1, 1]);
            assert_eq!((rep.dim_ker, rep.dim_coker), (0, 0), "{}", rep.label);
        }
    }
}
