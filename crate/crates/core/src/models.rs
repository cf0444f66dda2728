//! Built-in models and randomized full-rank potentials.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, c, i_sigma2, identity, kron, re, sigma1, CMat};
use crate::model::{EndData, Profile, PotentialTerm, RadialOperator, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDoc {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub const CATALOG: [ModelDoc; 5] = [
    ModelDoc {
        name: "MODEL-A",
        params: "c = 1 (potential strength)",
        summary: "m = 2, A = i sigma2, C = i c tanh(t) I; full rank at both ends, kernel and cokernel one-dimensional",
    },
    ModelDoc {
        name: "MODEL-B",
        params: "b = 0.75 (indicial root)",
        summary: "m = 2, A = i sigma2, C = b sigma1 / <t>; zero rank at both ends, b-spectrum {-b, +b} per end",
    },
    ModelDoc {
        name: "MODEL-C",
        params: "b = 0.75, b11 = 0.3, g1 = 0.4, g2 = 0.5, second pair b2 = 1.3 (optional, m = 6)",
        summary: "m = 4, A = I2 (x) i sigma2; V0 = span(e1, e2) carries b sigma1/<t>, V1 = span(e3, e4) carries i tanh(t) + b11 sigma1/<t>; couplings g1 <t>^-2 (e1,e3) and g2 exp(-<t>) (e2,e4)",
    },
    ModelDoc {
        name: "MODEL-D",
        params: "c = 1",
        summary: "m = 2, A = i sigma2, C = c tanh(t) A; full rank, kernel cosh(t)^-c C^2, index 2",
    },
    ModelDoc { name: "EULER", params: "none", summary: "m = 2, A = i sigma2, C = 0; indicial root 0 of multiplicity 2 at both ends" },
];

fn end(side: Side, phi: CMat, b: CMat, eps: f64) -> EndData {
    EndData { side, n: 1, phi_infinity: phi, b_term: b, epsilon: eps, epsilon_prime: eps }
}

fn op(name: &str, clifford: CMat, potential: Vec<PotentialTerm>, minus: EndData, plus: EndData) -> RadialOperator {
    RadialOperator { name: String::from(name), clifford, potential, minus, plus }
}

pub fn model_a(c_: f64) -> RadialOperator {
    let phi = identity(2) * c(0.0, c_);
    op(
        "MODEL-A",
        i_sigma2(),
        vec![PotentialTerm::new(Profile::Tanh { scale: 1.0 }, phi.clone())],
        end(Side::Minus, -phi.clone(), CMat::zeros(2, 2), 1.0),
        end(Side::Plus, phi, CMat::zeros(2, 2), 1.0),
    )
}

pub fn model_b(b: f64) -> RadialOperator {
    let bt = sigma1() * re(b);
    op(
        "MODEL-B",
        i_sigma2(),
        vec![PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, bt.clone())],
        end(Side::Minus, CMat::zeros(2, 2), bt.clone(), 1.0),
        end(Side::Plus, CMat::zeros(2, 2), bt, 1.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCParams {
    pub b: f64,
    pub b11: f64,
    pub g1: f64,
    pub g2: f64,
    /// Indicial root of an extra V0 pair appended as coordinates 5, 6.
    pub second_pair: Option<f64>,
}

impl Default for ModelCParams {
    fn default() -> Self {
        Self { b: 0.75, b11: 0.3, g1: 0.4, g2: 0.5, second_pair: None }
    }
}

impl ModelCParams {
    pub fn with_second_pair() -> Self {
        Self { second_pair: Some(1.3), ..Self::default() }
    }
}

pub fn model_c(p: &ModelCParams) -> RadialOperator {
    let pairs = if p.second_pair.is_some() { 3 } else { 2 };
    let m = 2 * pairs;
    let a = kron(&identity(pairs), &i_sigma2());
    let mut b0 = CMat::zeros(m, m);
    b0.view_mut((0, 0), (2, 2)).copy_from(&(sigma1() * re(p.b)));
    b0.view_mut((2, 2), (2, 2)).copy_from(&(sigma1() * re(p.b11)));
    if let Some(b2) = p.second_pair {
        b0.view_mut((4, 4), (2, 2)).copy_from(&(sigma1() * re(b2)));
    }
    let mut v1 = CMat::zeros(m, m);
    v1[(2, 2)] = c(0.0, 1.0);
    v1[(3, 3)] = c(0.0, 1.0);
    let mut k13 = CMat::zeros(m, m);
    k13[(0, 2)] = re(p.g1);
    k13[(2, 0)] = re(p.g1);
    let mut k24 = CMat::zeros(m, m);
    k24[(1, 3)] = re(p.g2);
    k24[(3, 1)] = re(p.g2);
    let mut name = String::from("MODEL-C");
    if p.second_pair.is_some() {
        name.push_str("+pair");
    }
    op(
        &name,
        a,
        vec![
            PotentialTerm::new(Profile::Tanh { scale: 1.0 }, v1.clone()),
            PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, b0.clone()),
            PotentialTerm::new(Profile::PowerDecay { power: 2.0 }, k13),
            PotentialTerm::new(Profile::ExpDecay { rate: 1.0 }, k24),
        ],
        end(Side::Minus, -v1.clone(), b0.clone(), 0.5),
        end(Side::Plus, v1, b0, 0.5),
    )
}

pub fn model_d(c_: f64) -> RadialOperator {
    let phi = i_sigma2() * re(c_);
    op(
        "MODEL-D",
        i_sigma2(),
        vec![PotentialTerm::new(Profile::Tanh { scale: 1.0 }, phi.clone())],
        end(Side::Minus, -phi.clone(), CMat::zeros(2, 2), 1.0),
        end(Side::Plus, phi, CMat::zeros(2, 2), 1.0),
    )
}

/// `A d/dt` with no potential.
pub fn euler() -> RadialOperator {
    op(
        "EULER",
        i_sigma2(),
        Vec::new(),
        end(Side::Minus, CMat::zeros(2, 2), CMat::zeros(2, 2), 1.0),
        end(Side::Plus, CMat::zeros(2, 2), CMat::zeros(2, 2), 1.0),
    )
}

/// Built-in model by catalog name with default parameters.
pub fn by_name(name: &str) -> Option<RadialOperator> {
    match name.to_ascii_uppercase().as_str() {
        "MODEL-A" | "A" => Some(model_a(1.0)),
        "MODEL-B" | "B" => Some(model_b(0.75)),
        "MODEL-C" | "C" => Some(model_c(&ModelCParams::default())),
        "MODEL-C+PAIR" => Some(model_c(&ModelCParams::with_second_pair())),
        "MODEL-D" | "D" => Some(model_d(1.0)),
        "EULER" => Some(euler()),
        _ => None,
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> CMat {
    let g = CMat::from_fn(k, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::hermitian_part(&g) * re(scale)
}

/// A Clifford-commuting invertible end value `i H ⊗ I + Y ⊗ A` with `H`, `Y` Hermitian.
fn random_phi(rng: &mut ChaCha8Rng, a2: &CMat) -> CMat {
    loop {
        let h = random_hermitian(rng, 2, 1.5);
        let y = random_hermitian(rng, 2, 1.5);
        let phi = kron(&h, &identity(2)) * c(0.0, 1.0) + kron(&y, a2);
        if linalg::svd(&phi).s.last().copied().unwrap_or(0.0) > 0.4 {
            return phi;
        }
    }
}

/// Full-rank model on C^4 with `A = I2 ⊗ iσ2`, end values interpolated by `(1 ± tanh t)/2` and a
/// random Hermitian `B0/<t>`.
pub fn random_fullrank(seed: u64) -> RadialOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a2 = i_sigma2();
    let a = kron(&identity(2), &a2);
    let plus = random_phi(&mut rng, &a2);
    let minus = random_phi(&mut rng, &a2);
    let b = random_hermitian(&mut rng, 4, 0.5);
    let mut name = String::from("RANDOM-");
    name.push_str(&alloc::format!("{seed}"));
    op(
        &name,
        a,
        vec![
            PotentialTerm::new(Profile::Constant, (&plus + &minus) * re(0.5)),
            PotentialTerm::new(Profile::Tanh { scale: 1.0 }, (&plus - &minus) * re(0.5)),
            PotentialTerm::new(Profile::PowerDecay { power: 1.0 }, b.clone()),
        ],
        end(Side::Minus, minus, b.clone(), 1.0),
        end(Side::Plus, plus, b, 1.0),
    )
}

/// Unitary from Gram-Schmidt on a matrix with entries uniform in the unit square.
pub fn random_unitary(seed: u64, m: usize) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::from_fn(m, m, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::orthonormalize(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_assumptions;

    #[test]
    fn builtins_satisfy_assumptions() {
        for doc in CATALOG {
            let p = by_name(doc.name).unwrap();
            let r = validate_assumptions(&p);
            assert!(r.passed(), "{}: {:?}", doc.name, r.failures().collect::<Vec<_>>());
        }
        let p = model_c(&ModelCParams::with_second_pair());
        assert!(validate_assumptions(&p).passed());
        for seed in 0..5 {
            let p = random_fullrank(seed);
            let r = validate_assumptions(&p);
            assert!(r.passed(), "seed {seed}: {:?}", r.failures().collect::<Vec<_>>());
            assert_eq!(r.ranks, [4, 4]);
        }
    }
}
