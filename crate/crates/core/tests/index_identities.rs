use conedex_core::index::{
    self, boundary_index_data, boundary_index_point, callias_index_fullrank, channel_sum, deform_family,
    free_dirac_channels, hybrid_index, indicial_flip_check, tf_model, transition_additivity, ChiSpec,
};
use conedex_core::linalg::{self, c, i_sigma2, identity, kron, re, CMat};
use conedex_core::model::{self, EndData, Side, TfTheta};
use conedex_core::models;
use conedex_core::spectral::{numerical_index, shooting_oracle, GridSpec, TolPolicy, WeightSpec};
use proptest::prelude::*;

#[test]
fn scalar_end_value_counts_zero() {
    let end = EndData::new(Side::Plus, identity(2) * c(0.0, 1.5), CMat::zeros(2, 2));
    let d = boundary_index_data(&i_sigma2(), &end).unwrap();
    assert_eq!(d.dims, (1, 1));
    // grading on V+ = C^2 is ±iA = ∓σ2 with eigenvalues ±1
    assert!(linalg::is_hermitian(&d.grading, 1e-14));
    let negative = EndData::new(Side::Plus, identity(2) * c(0.0, -1.5), CMat::zeros(2, 2));
    assert_eq!(boundary_index_data(&i_sigma2(), &negative).unwrap().v_plus.ncols(), 0);
    assert_eq!(boundary_index_point(&i_sigma2(), &negative).unwrap(), 0);
}

#[test]
fn split_end_value_on_four_dimensions() {
    let a = kron(&identity(2), &i_sigma2());
    let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(-1.0)]));
    let phi = kron(&h, &identity(2)) * c(0.0, 1.0);
    let d = boundary_index_data(&a, &EndData::new(Side::Minus, phi, CMat::zeros(4, 4))).unwrap();
    assert_eq!(d.v_plus.ncols(), 2);
    assert_eq!(d.dims, (1, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grading_count_is_basis_invariant(seed in any::<u64>(), theta in -3.0f64..3.0) {
        let p = models::random_fullrank(seed);
        for side in Side::ALL {
            let base = boundary_index_point(&p.clifford, p.end(side)).unwrap();
            // A² = -1, so exp(θA) = cos θ + sin θ A is unitary and commutes with A and Φ∞
            let u = identity(4) * re(theta.cos()) + &p.clifford * re(theta.sin());
            let end = EndData::new(side, &u * &p.end(side).phi_infinity * u.adjoint(), CMat::zeros(4, 4));
            prop_assert_eq!(boundary_index_point(&(&u * &p.clifford * u.adjoint()), &end).unwrap(), base);
            // a general change of basis moves A and Φ∞ together
            let w = models::random_unitary(seed ^ 0x9e37, 4);
            let end = EndData::new(side, &w * &p.end(side).phi_infinity * w.adjoint(), CMat::zeros(4, 4));
            prop_assert_eq!(boundary_index_point(&(&w * &p.clifford * w.adjoint()), &end).unwrap(), base);
        }
    }
}

#[test]
fn callias_count_matches_both_oracles_on_random_models() {
    let grid = GridSpec::default();
    for seed in 0..5 {
        let p = models::random_fullrank(seed);
        assert!(model::is_fully_elliptic(&p));
        let formula = callias_index_fullrank(&p).unwrap();
        let num = numerical_index(&p, &grid, WeightSpec::scattering(0.0), &TolPolicy::default()).unwrap();
        let sh = shooting_oracle(&p, 0.0).unwrap();
        assert_eq!(num.index, formula, "seed {seed}");
        assert_eq!(sh.index(), formula, "seed {seed}");
    }
}

#[test]
fn builtin_full_rank_models() {
    let grid = GridSpec::default();
    for (p, expected) in [(models::model_a(1.0), 0), (models::model_d(1.0), 2)] {
        assert_eq!(callias_index_fullrank(&p).unwrap(), expected);
        let num = numerical_index(&p, &grid, WeightSpec::scattering(0.0), &TolPolicy::default()).unwrap();
        assert_eq!(num.index, expected, "{}", p.name);
    }
    assert!(callias_index_fullrank(&models::model_b(0.75)).is_err());
}

#[test]
fn hybrid_formula_matches_numerics_on_model_c() {
    let grid = GridSpec::default();
    let p = models::model_c(&Default::default());
    for (alpha, defect) in [(0.2, 0), (-0.2, 0), (1.0, -2), (-1.0, 2)] {
        let h = hybrid_index(&p, alpha).unwrap();
        assert_eq!((h.boundary, h.defect, h.total), (0, defect, defect));
        let num = numerical_index(&p, &grid, WeightSpec::hybrid(alpha), &TolPolicy::default()).unwrap();
        assert_eq!(num.index, h.total, "α = {alpha}");
    }
}

#[test]
fn hybrid_formula_beyond_the_second_pair() {
    let grid = GridSpec::default();
    let p = models::model_c(&models::ModelCParams::with_second_pair());
    for alpha in [1.6, -1.6] {
        let h = hybrid_index(&p, alpha).unwrap();
        assert_eq!(h.defect, if alpha > 0.0 { -4 } else { 4 });
        let tol = TolPolicy { refine: false, ..TolPolicy::default() };
        let num = numerical_index(&p, &grid, WeightSpec::hybrid(alpha), &tol).unwrap();
        assert_eq!(num.index, h.total, "α = {alpha}");
    }
}

#[test]
fn flip_identity_on_every_builtin() {
    for doc in models::CATALOG {
        let p = models::by_name(doc.name).unwrap();
        for theta in [TfTheta::Rational, TfTheta::Tanh] {
            match tf_model(&p, theta) {
                Ok(m) => {
                    let f = indicial_flip_check(&m).unwrap();
                    assert!(f.holds && f.diffs == [0.0, 0.0], "{}: {f:?}", doc.name);
                }
                Err(e) => assert!(matches!(e, index::IndexError::Unsupported(_)), "{}: {e}", doc.name),
            }
        }
    }
}

#[test]
fn deformation_is_fully_elliptic_with_index_zero() {
    let p = models::model_b(0.75);
    let grid = GridSpec::default();
    for chi in [ChiSpec::default(), ChiSpec::WIDE] {
        let q = deform_family(&p, 0.5, chi).unwrap();
        assert!(model::is_fully_elliptic(&q));
        assert_eq!(callias_index_fullrank(&q).unwrap(), 0);
        let tol = TolPolicy { refine: false, ..TolPolicy::default() };
        assert_eq!(numerical_index(&q, &grid, WeightSpec::scattering(1.0), &tol).unwrap().index, 0);
    }
    let q = deform_family(&p, 1e-9, ChiSpec::default()).unwrap();
    for t in [-3.0, 0.0, 5.0, 1e3] {
        assert!(linalg::max_abs_diff(&q.coefficient(t), &p.coefficient(t)) < 1e-8);
    }
}

#[test]
fn transition_components_add_up() {
    let p = models::model_b(0.75);
    let taus = [1e-3, 1e-2, 1e-1, 0.5];
    let rep = transition_additivity(&p, 1.0, &taus, &GridSpec::default(), &TolPolicy::default()).unwrap();
    assert!(rep.deformed.iter().all(|&(_, i)| i == 0));
    assert_eq!(rep.zf_index, -2);
    assert_eq!(rep.tf_total(), 2);
    assert!(rep.jump.holds && rep.jump.below - rep.jump.above == -(rep.jump.dim_f as i64));
    assert!(rep.holds());
}

#[test]
fn free_channels_all_vanish() {
    let sum = channel_sum(&free_dirac_channels(6, 1.0)).unwrap();
    assert_eq!(sum.channels.len(), 12);
    assert!(sum.channels.iter().all(|ch| ch.index == 0));
    assert_eq!(sum.weighted, 0);
}
