//! Weighted discretization of radial operators, numerical Fredholm index by singular-value gaps,
//! kernel asymptotics, and the shooting oracle.

pub mod assemble;
pub mod asymptotics;
pub mod banded;
pub mod grid;
pub mod shooting;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use assemble::{assemble, Discretization, Prepared, WeightSpec};
pub use asymptotics::{nullspace_asymptotics, KernelFit};
pub use grid::GridSpec;
pub use shooting::{shooting_oracle, ShootingReport};

use crate::indicial::{self, IndicialError};
use crate::linalg::CMat;
use crate::model::{formal_adjoint, ModelError, RadialOperator};
use banded::{BandedR, LowSpectrum};

#[allow(unused_imports)]
use num_traits::Float;

/// Weights closer than this to a V0 root are rejected.
pub const ROOT_MARGIN: f64 = 0.02;
pub const DEFAULT_GAP: f64 = 1e3;
/// Start vectors of the subspace iteration are drawn from this fixed seed.
const SUBSPACE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error("the line discretization supports n = 1 only, got n = {0}")]
    UnsupportedN(u32),
    #[error("weight {alpha} is within {margin} of the root {root}")]
    WeightOnRoot { alpha: f64, root: f64, margin: f64 },
    #[error("grid with {} nodes over {} decades is too coarse", .0.nodes, .0.decades)]
    GridTooCoarse(GridSpec),
    #[error("indeterminate index: {}", .0.reason)]
    Indeterminate(Box<Indeterminate>),
    #[error("integration failed: {0}")]
    Integration(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Indeterminate {
    pub reason: String,
    pub history: Vec<RunSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolPolicy {
    /// Required ratio between the smallest retained and the largest discarded singular value.
    pub gap: f64,
    /// Run the two audit grids.
    pub refine: bool,
}

impl Default for TolPolicy {
    fn default() -> Self {
        Self { gap: DEFAULT_GAP, refine: true }
    }
}

/// One discretization run of the primal and adjoint problems.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub grid: GridSpec,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub gap_ratio: f64,
    pub coker_gap_ratio: f64,
    /// `cols - rows` of the primal matrix.
    pub discrete_index: i64,
    pub sigma_low: Vec<f64>,
    pub coker_sigma_low: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct IndexReport {
    pub weights: WeightSpec,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    /// Smaller of the primal and adjoint gap ratios on the base grid.
    pub gap_ratio: f64,
    pub history: Vec<RunSummary>,
    pub discretization: Discretization,
    /// Kernel basis in weighted unknowns (columns).
    pub kernel: CMat,
}

/// Kernel dimension by the largest ratio between consecutive singular values, with the noise floor
/// standing in below the smallest one. Returns (dimension, ratio).
pub fn rank_cut(sigma: &[f64], floor: f64) -> (usize, f64) {
    let below = sigma.iter().filter(|&&s| s < floor).count();
    let last = sigma.len().saturating_sub(2);
    let mut best = (below, 0.0);
    for k in below..=last.max(below) {
        if k >= sigma.len() {
            break;
        }
        let prev = if k == 0 { floor } else { sigma[k - 1].max(floor) };
        let ratio = sigma[k] / prev;
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    best
}

pub(crate) struct Solved {
    pub(crate) dim: usize,
    pub(crate) ratio: f64,
    pub(crate) low: LowSpectrum,
}

pub(crate) fn solve_kernel(disc: &Discretization) -> Solved {
    let r = BandedR::factor(&disc.rows, disc.ncols, disc.bandwidth());
    let k = 2 * disc.m + 6;
    let low = banded::lowest_singular(&r, k, SUBSPACE_SEED);
    let max_row = disc.rows.iter().map(|r| r.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let floor = 10.0 * disc.ncols as f64 * f64::EPSILON * max_row;
    let (dim, ratio) = rank_cut(&low.sigma, floor);
    Solved { dim, ratio, low }
}

fn run_once(prep: &Prepared, adj: &Prepared, grid: &GridSpec, ws: &WeightSpec) -> (RunSummary, Discretization, CMat) {
    let t = grid.nodes_vec();
    let disc = assemble(prep, &t, ws);
    let primal = solve_kernel(&disc);
    let dual = solve_kernel(&assemble(adj, &t, &ws.dual()));
    let kernel = primal.low.vectors.columns(0, primal.dim).into_owned();
    let summary = RunSummary {
        grid: *grid,
        dim_ker: primal.dim,
        dim_coker: dual.dim,
        gap_ratio: primal.ratio,
        coker_gap_ratio: dual.ratio,
        discrete_index: disc.discrete_index(),
        sigma_low: primal.low.sigma.clone(),
        coker_sigma_low: dual.low.sigma.clone(),
        converged: primal.low.converged && dual.low.converged,
    };
    (summary, disc, kernel)
}

fn indeterminate(reason: String, history: Vec<RunSummary>) -> SpectralError {
    SpectralError::Indeterminate(Box::new(Indeterminate { reason, history }))
}

/// Checks the weight against the V0 spectra of both ends.
pub fn check_weight(prep: &Prepared, alpha: f64) -> Result<(), SpectralError> {
    if let (d, Some(root)) = prep.root_distance(alpha) {
        if d < ROOT_MARGIN {
            return Err(SpectralError::WeightOnRoot { alpha, root, margin: ROOT_MARGIN });
        }
    }
    Ok(())
}

/// Numerical `(dim ker, dim coker, index)` on the weighted space, audited on two refined grids.
pub fn numerical_index(p: &RadialOperator, grid: &GridSpec, ws: WeightSpec, tol: &TolPolicy) -> Result<IndexReport, SpectralError> {
    if !grid.is_admissible() {
        return Err(SpectralError::GridTooCoarse(*grid));
    }
    let prep = Prepared::new(p)?;
    let adj = Prepared::new(&formal_adjoint(p))?;
    check_weight(&prep, ws.alpha)?;
    let mut grids = alloc::vec![*grid];
    if tol.refine {
        grids.extend(grid.refinements());
    }
    let mut history = Vec::new();
    let mut base = None;
    for g in &grids {
        let (summary, disc, kernel) = run_once(&prep, &adj, g, &ws);
        history.push(summary);
        if base.is_none() {
            base = Some((disc, kernel));
        }
    }
    for s in &history {
        if s.gap_ratio < tol.gap || s.coker_gap_ratio < tol.gap {
            return Err(indeterminate(
                alloc::format!(
                    "gap ratio {:.3e} (kernel) / {:.3e} (cokernel) below {:.1e} on {} nodes, {} decades",
                    s.gap_ratio, s.coker_gap_ratio, tol.gap, s.grid.nodes, s.grid.decades
                ),
                history,
            ));
        }
        if s.dim_ker as i64 - s.dim_coker as i64 != s.discrete_index {
            return Err(indeterminate(
                alloc::format!(
                    "kernel {} and adjoint kernel {} disagree with the matrix shape index {}",
                    s.dim_ker, s.dim_coker, s.discrete_index
                ),
                history,
            ));
        }
    }
    let first = (history[0].dim_ker, history[0].dim_coker);
    if history.iter().any(|s| (s.dim_ker, s.dim_coker) != first) {
        return Err(indeterminate(String::from("refinement changed (dim ker, dim coker)"), history));
    }
    let (discretization, kernel) = base.expect("at least one grid");
    Ok(IndexReport {
        weights: ws,
        dim_ker: first.0,
        dim_coker: first.1,
        index: first.0 as i64 - first.1 as i64,
        gap_ratio: history[0].gap_ratio.min(history[0].coker_gap_ratio),
        history,
        discretization,
        kernel,
    })
}

/// Leading-order fits of the kernel of an accepted report.
pub fn kernel_fits(p: &RadialOperator, report: &IndexReport) -> Result<Vec<KernelFit>, SpectralError> {
    let prep = Prepared::new(p)?;
    Ok(nullspace_asymptotics(&prep, &report.discretization, &report.kernel, report.history[0].grid.decades))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub gap_ratio: f64,
    pub grid_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// `index(α_i) - index(α_{i+1})` against the relative-index ledger for consecutive rows.
    pub jumps: Vec<(i64, i64)>,
    /// First failure, after which the sweep stopped.
    pub error: Option<SpectralError>,
}

impl Sweep {
    pub fn ledger_holds(&self) -> bool {
        self.error.is_none() && self.jumps.iter().all(|(a, b)| a == b)
    }

    pub fn antisymmetric(&self) -> bool {
        self.rows.iter().all(|r| {
            self.rows.iter().find(|s| (s.alpha + r.alpha).abs() < 1e-12).map_or(true, |s| s.index == -r.index)
        })
    }
}

pub fn sweep_row(report: &IndexReport) -> SweepRow {
    SweepRow {
        alpha: report.weights.alpha,
        dim_ker: report.dim_ker,
        dim_coker: report.dim_coker,
        index: report.index,
        gap_ratio: report.gap_ratio,
        grid_nodes: report.history[0].grid.nodes,
    }
}

/// Signed ledger between two weights in either order.
pub fn ledger_between(prep: &Prepared, a: f64, b: f64) -> Result<i64, SpectralError> {
    if a < b {
        Ok(indicial::relative_index_ledger(&prep.spectra, a, b)?)
    } else if a > b {
        Ok(-indicial::relative_index_ledger(&prep.spectra, b, a)?)
    } else {
        Ok(0)
    }
}

/// Assembles a sweep from per-weight results (computed in any order, listed in `alphas` order).
pub fn collect_sweep(p: &RadialOperator, results: Vec<Result<IndexReport, SpectralError>>) -> Sweep {
    let mut rows = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(rep) => rows.push(sweep_row(&rep)),
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    let mut jumps = Vec::new();
    match Prepared::new(p) {
        Ok(prep) => {
            for w in rows.windows(2) {
                match ledger_between(&prep, w[0].alpha, w[1].alpha) {
                    Ok(l) => jumps.push((w[0].index - w[1].index, l)),
                    Err(e) => {
                        error.get_or_insert(e);
                        break;
                    }
                }
            }
        }
        Err(e) => {
            error.get_or_insert(e);
        }
    }
    Sweep { rows, jumps, error }
}

/// Index over a list of weights with `β = α + 1/2`; stops at the first failure.
pub fn alpha_sweep(p: &RadialOperator, alphas: &[f64], grid: &GridSpec, tol: &TolPolicy) -> Sweep {
    let mut results = Vec::new();
    for &a in alphas {
        let r = numerical_index(p, grid, WeightSpec::hybrid(a), tol);
        let stop = r.is_err();
        results.push(r);
        if stop {
            break;
        }
    }
    collect_sweep(p, results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_cut_picks_largest_gap() {
        assert_eq!(rank_cut(&[1e-15, 2e-15, 0.3, 0.5, 0.9, 1.0], 1e-12).0, 2);
        assert_eq!(rank_cut(&[0.1, 0.3, 0.5, 0.9, 1.0], 1e-12).0, 0);
        let (k, ratio) = rank_cut(&[1e-9, 0.1, 0.2, 0.3], 1e-12);
        assert_eq!(k, 1);
        assert!((ratio - 1e8).abs() < 1.0);
    }
}
