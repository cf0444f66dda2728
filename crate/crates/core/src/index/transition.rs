//! The τ-deformation `P - iτχΠ0` and the two normal operators at τ = 0: the b-type zf operator and
//! the half-infinite tf model `A_R d/dt + B/<t> - i φ`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::IndexError;
use crate::indicial::{self, IndicialFamily};
use crate::linalg::{self, c, identity, CMat};
use crate::model::{self, EndData, Profile, PotentialTerm, RadialOperator, Side, TfTheta};
use crate::spectral::{numerical_index, GridSpec, IndexReport, Prepared, SpectralError, TolPolicy, WeightSpec};

/// Smooth end cutoff χ: 0 for `<t> <= inner`, 1 for `<t> >= outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSpec {
    pub inner: f64,
    pub outer: f64,
}

impl Default for ChiSpec {
    fn default() -> Self {
        Self { inner: 2.0, outer: 4.0 }
    }
}

impl ChiSpec {
    pub const WIDE: ChiSpec = ChiSpec { inner: 8.0, outer: 16.0 };
}

/// `P - iτ Σ_e χ_e Π0^e`, with `Π0^e` the projector on `Null Φ∞` at end `e`.
pub fn deform_family(p: &RadialOperator, tau: f64, chi: ChiSpec) -> Result<RadialOperator, IndexError> {
    let split = model::split_blocks(p)?;
    let mut out = p.clone();
    out.name = format!("{}[tau={tau}]", p.name);
    for side in Side::ALL {
        let pi0 = &split.end(side).projector;
        if pi0.ncols() == 0 || linalg::max_abs(pi0) == 0.0 {
            continue;
        }
        let shift = pi0 * c(0.0, -tau);
        out.potential.push(PotentialTerm::new(Profile::EndCutoff { side, inner: chi.inner, outer: chi.outer }, shift.clone()));
        out.end_mut(side).phi_infinity += shift;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    /// The b-type operator seen at τ = 0 (the V0 block, or the operator itself at zero rank).
    pub zf: RadialOperator,
    /// One tf model per end of `zf`, indexed by [`Side`] of that end.
    pub tf: [RadialOperator; 2],
    pub theta: TfTheta,
}

/// The V0 block of an operator whose ends share `V0` and `B00`; zero-rank operators are returned
/// unchanged.
pub fn zf_operator(p: &RadialOperator) -> Result<RadialOperator, IndexError> {
    let split = model::split_blocks(p)?;
    if split.minus.rank() == 0 && split.plus.rank() == 0 {
        return Ok(p.clone());
    }
    let (pm, pp) = (&split.minus.projector, &split.plus.projector);
    if linalg::max_abs_diff(pm, pp) > 1e-12 {
        return Err(IndexError::Unsupported("the ends carry different V0 subspaces"));
    }
    let v0 = &split.plus.v0;
    if v0.ncols() == 0 {
        return Err(IndexError::Unsupported("V0 is trivial at both ends"));
    }
    let fm = model::conjugate_to_b(p, &split.minus)?;
    let fp = model::conjugate_to_b(p, &split.plus)?;
    if linalg::max_abs_diff(&fm.b00, &fp.b00) > 1e-12 {
        return Err(IndexError::Unsupported("the ends carry different B00 blocks"));
    }
    let k = v0.ncols();
    let a0 = v0.adjoint() * &p.clifford * v0;
    let zero = CMat::zeros(k, k);
    Ok(RadialOperator {
        name: format!("{}/zf", p.name),
        clifford: a0,
        potential: alloc::vec![PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, fp.b00.clone())],
        minus: EndData::new(Side::Minus, zero.clone(), fm.b00),
        plus: EndData::new(Side::Plus, zero, fp.b00),
    })
}

fn zf_family(zf: &RadialOperator, side: Side) -> Result<IndicialFamily, IndexError> {
    let split = model::split_end(zf, side)?;
    Ok(IndicialFamily::from_fragment(&model::conjugate_to_b(zf, &split)?))
}

/// tf model of one zf end: b-end at -∞ carrying the flipped pencil, sc-end at +∞ with potential
/// exactly `-i` in the limit.
fn tf_for_end(zf: &RadialOperator, side: Side, theta: TfTheta) -> Result<RadialOperator, IndexError> {
    let fam = zf_family(zf, side)?;
    let k = fam.dim();
    let a_r = -&fam.m1;
    let b_r = fam.m0.clone();
    let minus_i = identity(k) * c(0.0, -1.0);
    // Rational ramp: -i (η/<t>) η/(1+η) = -i + i/<t> + O(<t>^-2) at +∞
    let b_plus = match theta {
        TfTheta::Rational => &b_r + identity(k) * c(0.0, 1.0),
        TfTheta::Tanh => b_r.clone(),
    };
    Ok(RadialOperator {
        name: format!("{}/tf-{}", zf.name, side.name()),
        clifford: a_r,
        potential: alloc::vec![
            PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, b_r.clone()),
            PotentialTerm::new(Profile::TfRamp { theta }, minus_i.clone()),
        ],
        minus: EndData::new(Side::Minus, CMat::zeros(k, k), b_r),
        plus: EndData::new(Side::Plus, minus_i, b_plus),
    })
}

pub fn tf_model(p: &RadialOperator, theta: TfTheta) -> Result<TransitionModel, IndexError> {
    let zf = zf_operator(p)?;
    let tf = [tf_for_end(&zf, Side::Minus, theta)?, tf_for_end(&zf, Side::Plus, theta)?];
    Ok(TransitionModel { zf, tf, theta })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipCheck {
    /// Largest coefficient difference per zf end.
    pub diffs: [f64; 2],
    pub holds: bool,
}

/// Coefficient difference between `I(tf, λ)` and `I(zf, -λ)`.
pub fn flip_diff(zf: &IndicialFamily, tf: &IndicialFamily) -> f64 {
    if zf.m0.shape() != tf.m0.shape() {
        return f64::INFINITY;
    }
    linalg::max_abs_diff(&tf.m0, &zf.m0).max(linalg::max_abs_diff(&tf.m1, &(-&zf.m1)))
}

/// Exact identity `I(N_tf, λ) = I(N_zf, -λ)` at the b-end of each tf model.
pub fn indicial_flip_check(model: &TransitionModel) -> Result<FlipCheck, IndexError> {
    let mut diffs = [0.0; 2];
    for side in Side::ALL {
        let zf = zf_family(&model.zf, side)?;
        let tf = zf_family(&model.tf[side as usize], Side::Minus)?;
        diffs[side as usize] = flip_diff(&zf, &tf);
    }
    Ok(FlipCheck { diffs, holds: diffs.iter().all(|&d| d == 0.0) })
}

/// One numerical index computation of the additivity check.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionJob {
    pub label: String,
    pub op: RadialOperator,
    pub weights: WeightSpec,
}

impl TransitionJob {
    pub fn run(&self, grid: &GridSpec, tol: &TolPolicy) -> Result<IndexReport, SpectralError> {
        numerical_index(&self.op, grid, self.weights, tol)
    }
}

/// The jobs of [`transition_additivity`] with the data needed to judge them.
#[derive(Debug, Clone)]
pub struct TransitionPlan {
    pub alpha: f64,
    pub taus: Vec<f64>,
    pub model: TransitionModel,
    /// Root of the zf spectrum nearest to α and the half-width of the jump probe around it.
    pub root: f64,
    pub eps: f64,
    pub dim_f: usize,
    pub jobs: Vec<TransitionJob>,
}

pub fn plan_transition(p: &RadialOperator, alpha: f64, taus: &[f64], chi: ChiSpec, theta: TfTheta) -> Result<TransitionPlan, IndexError> {
    let model = tf_model(p, theta)?;
    let prep = Prepared::new(&model.zf)?;
    let mut roots: Vec<f64> = prep.spectra.iter().flat_map(|s| s.roots.iter().map(|r| r.lambda)).collect();
    roots.sort_by(f64::total_cmp);
    let root = roots
        .iter()
        .copied()
        .min_by(|a, b| (a - alpha).abs().total_cmp(&(b - alpha).abs()))
        .ok_or(IndexError::Unsupported("the zf operator has an empty b-spectrum"))?;
    let gap = roots.iter().filter(|&&r| (r - root).abs() > 1e-8).map(|r| (r - root).abs()).fold(f64::INFINITY, f64::min);
    let eps = 0.1_f64.min(0.45 * gap);
    let dim_f = prep.spectra.iter().map(|s| indicial::dim_formal(s, root)).sum();
    let mut jobs = Vec::new();
    for &tau in taus {
        jobs.push(TransitionJob { label: format!("deformed tau={tau}"), op: deform_family(&model.zf, tau, chi)?, weights: WeightSpec::scattering(alpha) });
    }
    jobs.push(TransitionJob { label: String::from("zf"), op: model.zf.clone(), weights: WeightSpec::hybrid(alpha) });
    for side in Side::ALL {
        let tf = &model.tf[side as usize];
        for (tag, w) in [("", -alpha), (" below", -(root - eps)), (" above", -(root + eps))] {
            jobs.push(TransitionJob { label: format!("tf-{}{tag}", side.name()), op: tf.clone(), weights: WeightSpec::hybrid(w) });
        }
    }
    Ok(TransitionPlan { alpha, taus: taus.to_vec(), model, root, eps, dim_f, jobs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpCheck {
    pub root: f64,
    pub eps: f64,
    pub dim_f: usize,
    /// `ind(N_tf, -(root - eps))` summed over ends.
    pub below: i64,
    /// `ind(N_tf, -(root + eps))` summed over ends.
    pub above: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub alpha: f64,
    pub deformed: Vec<(f64, i64)>,
    pub zf_index: i64,
    pub tf_index: [i64; 2],
    pub jump: JumpCheck,
    pub flip: FlipCheck,
    /// `ind 𝒫(τ)` is the same for every τ.
    pub tau_constant: bool,
    /// `ind 𝒫(τ) = ind(N_zf, α) + Σ ind(N_tf, -α)`.
    pub additive: bool,
    /// `ind(N_zf, α) + Σ ind(N_tf, -α) = 0`.
    pub components_cancel: bool,
}

impl TransitionReport {
    pub fn tf_total(&self) -> i64 {
        self.tf_index.iter().sum()
    }

    pub fn holds(&self) -> bool {
        self.tau_constant && self.additive && self.components_cancel && self.jump.holds && self.flip.holds
    }
}

impl TransitionPlan {
    /// Judges the job results, given in job order.
    pub fn finish(&self, results: Vec<Result<IndexReport, SpectralError>>) -> Result<TransitionReport, IndexError> {
        let mut idx = Vec::with_capacity(results.len());
        for r in results {
            idx.push(r?.index);
        }
        let nt = self.taus.len();
        let deformed: Vec<(f64, i64)> = self.taus.iter().copied().zip(idx[..nt].iter().copied()).collect();
        let zf_index = idx[nt];
        let tf = &idx[nt + 1..];
        let tf_index = [tf[0], tf[3]];
        let below = tf[1] + tf[4];
        let above = tf[2] + tf[5];
        let jump = JumpCheck { root: self.root, eps: self.eps, dim_f: self.dim_f, below, above, holds: below - above == -(self.dim_f as i64) };
        let sum = zf_index + tf_index[0] + tf_index[1];
        let tau_constant = deformed.windows(2).all(|w| w[0].1 == w[1].1);
        let additive = deformed.iter().all(|&(_, i)| i == sum);
        Ok(TransitionReport {
            alpha: self.alpha,
            deformed,
            zf_index,
            tf_index,
            jump,
            flip: indicial_flip_check(&self.model)?,
            tau_constant,
            additive,
            components_cancel: sum == 0,
        })
    }
}

/// Runs every job of the plan in order.
pub fn transition_additivity(
    p: &RadialOperator,
    alpha: f64,
    taus: &[f64],
    grid: &GridSpec,
    tol: &TolPolicy,
) -> Result<TransitionReport, IndexError> {
    let plan = plan_transition(p, alpha, taus, ChiSpec::default(), TfTheta::Rational)?;
    let results = plan.jobs.iter().map(|j| j.run(grid, tol)).collect();
    plan.finish(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_assumptions;
    use crate::linalg::re;
    use crate::models;

    #[test]
    fn flip_is_exact_and_detects_perturbation() {
        for name in ["MODEL-B", "EULER", "MODEL-C"] {
            let p = models::by_name(name).unwrap();
            let m = tf_model(&p, TfTheta::Rational).unwrap();
            assert!(indicial_flip_check(&m).unwrap().holds, "{name}");
        }
        let m = tf_model(&models::model_b(0.75), TfTheta::Rational).unwrap();
        let zf = zf_family(&m.zf, Side::Plus).unwrap();
        let mut tf = zf_family(&m.tf[1], Side::Minus).unwrap();
        tf.m0[(0, 1)] += re(1e-9);
        assert!(flip_diff(&zf, &tf) > 0.0);
    }

    #[test]
    fn tf_models_are_valid_and_flip_the_spectrum() {
        let m = tf_model(&models::model_b(0.75), TfTheta::Rational).unwrap();
        for tf in &m.tf {
            let r = validate_assumptions(tf);
            assert!(r.passed(), "{}: {:?}", tf.name, r.failures().collect::<Vec<_>>());
            let prep = Prepared::new(tf).unwrap();
            let roots: Vec<f64> = prep.spectrum(Side::Minus).roots.iter().map(|r| r.lambda).collect();
            assert_eq!(roots.len(), 2);
            assert!((roots[0] + 0.75).abs() < 1e-12 && (roots[1] - 0.75).abs() < 1e-12);
            assert!(model::full_ellipticity(tf, Side::Plus).fully_elliptic);
            assert_eq!(tf.coefficient(-1e6)[(0, 0)].im.abs() < 1e-15, true);
        }
        let t = tf_model(&models::model_b(0.75), TfTheta::Tanh).unwrap();
        assert!(validate_assumptions(&t.tf[0]).passed());
    }

    #[test]
    fn deformation_is_fully_elliptic_and_continuous() {
        let p = models::model_b(0.75);
        let d = deform_family(&p, 0.5, ChiSpec::default()).unwrap();
        assert!(model::is_fully_elliptic(&d));
        assert!(validate_assumptions(&d).passed());
        let small = deform_family(&p, 1e-12, ChiSpec::default()).unwrap();
        for t in [-30.0, -1.0, 0.5, 7.0, 100.0] {
            assert!(linalg::max_abs_diff(&small.coefficient(t), &p.coefficient(t)) <= 1e-12);
        }
    }

    #[test]
    fn zf_block_of_model_c() {
        let z = zf_operator(&models::model_c(&Default::default())).unwrap();
        assert_eq!(z.dim(), 2);
        let fam = zf_family(&z, Side::Plus).unwrap();
        let spec = indicial::spectrum_of(&fam).unwrap();
        assert_eq!(spec.roots.len(), 2);
        assert!(linalg::max_abs(&(z.coefficient(3.0) - linalg::sigma1() * re(0.75 / model::japanese(3.0)))) < 1e-14);
    }
}
