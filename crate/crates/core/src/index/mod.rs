//! Index formulas: the graded boundary count at a point end, the classical Callias index, the
//! hybrid index with its defect term, the deformation family with its transition model, and the
//! channel sums of free partial-wave families.

pub mod channels;
pub mod transition;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

pub use channels::{free_dirac_channels, channel_index, channel_sum, Channel, ChannelFamily, ChannelReport, ChannelSum};
pub use transition::{
    deform_family, indicial_flip_check, tf_model, transition_additivity, ChiSpec, FlipCheck, TransitionModel,
    TransitionReport,
};

use crate::indicial::{self, IndicialError};
use crate::linalg::{self, c, CMat};
use crate::model::{self, EndData, ModelError, RadialOperator, Side};
use crate::spectral::{Prepared, SpectralError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("phi_infinity at the {0:?} end is not skew-Hermitian")]
    NotSkew(Side),
    #[error("grading on V+ at the {side:?} end has eigenvalue {value}, expected +1 or -1")]
    Grading { side: Side, value: f64 },
    #[error("{0}")]
    Unsupported(&'static str),
}

/// `V₊` and the grading at one end.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryIndexData {
    pub side: Side,
    /// Orthonormal basis of the `+i` eigenspace of `Φ∞`.
    pub v_plus: CMat,
    /// `s i A` restricted to `V₊`, `s` the orientation of the end.
    pub grading: CMat,
    /// Dimensions of the `+1` and `-1` eigenspaces of the grading.
    pub dims: (usize, usize),
}

impl BoundaryIndexData {
    pub fn index(&self) -> i64 {
        self.dims.0 as i64 - self.dims.1 as i64
    }
}

const GRADING_TOL: f64 = 1e-8;

pub fn boundary_index_data(clifford: &CMat, end: &EndData) -> Result<BoundaryIndexData, IndexError> {
    let side = end.side;
    let phi = &end.phi_infinity;
    if !linalg::is_skew_hermitian(phi, 1e-10 * linalg::max_abs(phi).max(1.0)) {
        return Err(IndexError::NotSkew(side));
    }
    if linalg::max_abs(&linalg::commutator(phi, clifford)) > model::STRUCTURE_TOL * linalg::max_abs(phi).max(1.0) {
        return Err(ModelError::NotCommuting(side).into());
    }
    // -i Φ∞ is Hermitian; its positive eigenvectors span V₊
    let (vals, vecs) = linalg::hermitian_eigen(&(phi * c(0.0, -1.0)));
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-10 * scale).collect();
    let m = clifford.nrows();
    let v_plus = CMat::from_fn(m, cols.len(), |i, j| vecs[(i, cols[j])]);
    let gamma = clifford * c(0.0, side.orientation());
    let grading = v_plus.adjoint() * gamma * &v_plus;
    let (gv, _) = linalg::hermitian_eigen(&grading);
    let mut dims = (0, 0);
    for v in gv {
        if (v - 1.0).abs() < GRADING_TOL {
            dims.0 += 1;
        } else if (v + 1.0).abs() < GRADING_TOL {
            dims.1 += 1;
        } else {
            return Err(IndexError::Grading { side, value: v });
        }
    }
    Ok(BoundaryIndexData { side, v_plus, grading, dims })
}

/// Graded index `dim V₊⁺ - dim V₊⁻` of a point end.
pub fn boundary_index_point(clifford: &CMat, end: &EndData) -> Result<i64, IndexError> {
    boundary_index_data(clifford, end).map(|d| d.index())
}

/// Sum of the boundary counts over both ends of a fully elliptic operator.
pub fn callias_index_fullrank(p: &RadialOperator) -> Result<i64, IndexError> {
    for side in Side::ALL {
        if !model::full_ellipticity(p, side).fully_elliptic {
            return Err(ModelError::NotFullyElliptic(side).into());
        }
    }
    boundary_sum(p)
}

fn boundary_sum(p: &RadialOperator) -> Result<i64, IndexError> {
    let mut total = 0;
    for side in Side::ALL {
        total += boundary_index_point(&p.clifford, p.end(side))?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBreakdown {
    pub boundary: i64,
    pub defect: i64,
    pub total: i64,
}

/// Boundary count of the V1 blocks plus the defect of the V0 spectra of both ends.
pub fn hybrid_index(p: &RadialOperator, alpha: f64) -> Result<IndexBreakdown, IndexError> {
    let prep = Prepared::new(p)?;
    let boundary = boundary_sum(p)?;
    let defect = indicial::defect(&prep.spectra, alpha)?;
    Ok(IndexBreakdown { boundary, defect, total: boundary + defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{i_sigma2, identity, kron, re};
    use crate::models;

    #[test]
    fn scalar_potential_splits_evenly() {
        let a = i_sigma2();
        let end = EndData::new(Side::Plus, identity(2) * c(0.0, 2.0), CMat::zeros(2, 2));
        let d = boundary_index_data(&a, &end).unwrap();
        assert_eq!(d.v_plus.ncols(), 2);
        assert_eq!(d.dims, (1, 1));
        let neg = EndData::new(Side::Plus, identity(2) * c(0.0, -2.0), CMat::zeros(2, 2));
        assert_eq!(boundary_index_data(&a, &neg).unwrap().v_plus.ncols(), 0);
        let a4 = kron(&identity(2), &i_sigma2());
        let mut phi = CMat::zeros(4, 4);
        for (i, s) in [1.0, 1.0, -1.0, -1.0].iter().enumerate() {
            phi[(i, i)] = c(0.0, *s);
        }
        let e4 = EndData::new(Side::Minus, phi, CMat::zeros(4, 4));
        assert_eq!(boundary_index_data(&a4, &e4).unwrap().dims, (1, 1));
    }

    #[test]
    fn clifford_valued_potential_counts_one_per_end() {
        let p = models::model_d(1.0);
        assert_eq!(boundary_index_point(&p.clifford, &p.plus).unwrap(), 1);
        assert_eq!(boundary_index_point(&p.clifford, &p.minus).unwrap(), 1);
        assert_eq!(callias_index_fullrank(&p).unwrap(), 2);
        assert_eq!(callias_index_fullrank(&models::model_a(1.0)).unwrap(), 0);
        assert!(callias_index_fullrank(&models::model_b(0.75)).is_err());
    }

    #[test]
    fn hybrid_breakdown_of_model_c() {
        let p = models::model_c(&Default::default());
        let b = hybrid_index(&p, 1.0).unwrap();
        assert_eq!((b.boundary, b.defect, b.total), (0, -2, -2));
        assert_eq!(hybrid_index(&p, 0.2).unwrap().total, 0);
        assert_eq!(hybrid_index(&p, -1.0).unwrap().defect, 2);
    }

    #[test]
    fn non_skew_end_is_rejected() {
        let end = EndData::new(Side::Plus, identity(2) * re(1.0), CMat::zeros(2, 2));
        assert!(matches!(boundary_index_data(&i_sigma2(), &end), Err(IndexError::NotSkew(_))));
    }
}
