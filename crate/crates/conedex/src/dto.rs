//! JSON forms of models. Complex numbers are `[re, im]`, matrices are row-major lists of rows.

use conedex_core::linalg::{c, CMat};
use conedex_core::model::{EndData, PotentialTerm, Profile, RadialOperator, Side, TfTheta};
use serde::{Deserialize, Serialize};

use crate::RunError;

pub type ComplexDto = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDto(pub Vec<Vec<ComplexDto>>);

impl From<&CMat> for MatrixDto {
    fn from(m: &CMat) -> Self {
        MatrixDto((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
    }
}

impl MatrixDto {
    pub fn to_matrix(&self) -> Result<CMat, RunError> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if self.0.iter().any(|r| r.len() != cols) {
            return Err(RunError::Config("ragged matrix rows".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| c(self.0[i][j][0], self.0[i][j][1])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideDto {
    Minus,
    Plus,
}

impl From<Side> for SideDto {
    fn from(s: Side) -> Self {
        match s {
            Side::Minus => SideDto::Minus,
            Side::Plus => SideDto::Plus,
        }
    }
}

impl From<SideDto> for Side {
    fn from(s: SideDto) -> Self {
        match s {
            SideDto::Minus => Side::Minus,
            SideDto::Plus => Side::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaDto {
    Rational,
    Tanh,
}

impl From<TfTheta> for ThetaDto {
    fn from(t: TfTheta) -> Self {
        match t {
            TfTheta::Rational => ThetaDto::Rational,
            TfTheta::Tanh => ThetaDto::Tanh,
        }
    }
}

impl From<ThetaDto> for TfTheta {
    fn from(t: ThetaDto) -> Self {
        match t {
            ThetaDto::Rational => TfTheta::Rational,
            ThetaDto::Tanh => TfTheta::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileDto {
    Constant,
    Tanh { scale: f64 },
    ExpDecay { rate: f64 },
    PowerDecay { power: f64 },
    EndCutoff { side: SideDto, inner: f64, outer: f64 },
    TfRamp { theta: ThetaDto },
}

impl From<Profile> for ProfileDto {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Constant => ProfileDto::Constant,
            Profile::Tanh { scale } => ProfileDto::Tanh { scale },
            Profile::ExpDecay { rate } => ProfileDto::ExpDecay { rate },
            Profile::PowerDecay { power } => ProfileDto::PowerDecay { power },
            Profile::EndCutoff { side, inner, outer } => ProfileDto::EndCutoff { side: side.into(), inner, outer },
            Profile::TfRamp { theta } => ProfileDto::TfRamp { theta: theta.into() },
        }
    }
}

impl From<ProfileDto> for Profile {
    fn from(p: ProfileDto) -> Self {
        match p {
            ProfileDto::Constant => Profile::Constant,
            ProfileDto::Tanh { scale } => Profile::Tanh { scale },
            ProfileDto::ExpDecay { rate } => Profile::ExpDecay { rate },
            ProfileDto::PowerDecay { power } => Profile::PowerDecay { power },
            ProfileDto::EndCutoff { side, inner, outer } => Profile::EndCutoff { side: side.into(), inner, outer },
            ProfileDto::TfRamp { theta } => Profile::TfRamp { theta: theta.into() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTermDto {
    pub profile: ProfileDto,
    pub matrix: MatrixDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndDto {
    #[serde(default = "one")]
    pub n: u32,
    pub phi_infinity: MatrixDto,
    pub b_term: MatrixDto,
    #[serde(default = "half")]
    pub epsilon: f64,
    #[serde(default = "half")]
    pub epsilon_prime: f64,
}

fn one() -> u32 {
    1
}

fn half() -> f64 {
    0.5
}

impl EndDto {
    fn from_end(e: &EndData) -> Self {
        Self {
            n: e.n,
            phi_infinity: (&e.phi_infinity).into(),
            b_term: (&e.b_term).into(),
            epsilon: e.epsilon,
            epsilon_prime: e.epsilon_prime,
        }
    }

    fn to_end(&self, side: Side) -> Result<EndData, RunError> {
        Ok(EndData {
            side,
            n: self.n,
            phi_infinity: self.phi_infinity.to_matrix()?,
            b_term: self.b_term.to_matrix()?,
            epsilon: self.epsilon,
            epsilon_prime: self.epsilon_prime,
        })
    }
}

/// A radial operator `A ∂t + Σ f_k(t) C_k` with its declared end data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDto {
    pub name: String,
    pub clifford: MatrixDto,
    pub potential: Vec<PotentialTermDto>,
    pub minus: EndDto,
    pub plus: EndDto,
}

impl From<&RadialOperator> for ModelDto {
    fn from(p: &RadialOperator) -> Self {
        Self {
            name: p.name.clone(),
            clifford: (&p.clifford).into(),
            potential: p
                .potential
                .iter()
                .map(|t| PotentialTermDto { profile: t.profile.into(), matrix: (&t.matrix).into() })
                .collect(),
            minus: EndDto::from_end(&p.minus),
            plus: EndDto::from_end(&p.plus),
        }
    }
}

impl ModelDto {
    pub fn to_operator(&self) -> Result<RadialOperator, RunError> {
        let potential = self
            .potential
            .iter()
            .map(|t| Ok(PotentialTerm::new(t.profile.into(), t.matrix.to_matrix()?)))
            .collect::<Result<Vec<_>, RunError>>()?;
        let p = RadialOperator {
            name: self.name.clone(),
            clifford: self.clifford.to_matrix()?,
            potential,
            minus: self.minus.to_end(Side::Minus)?,
            plus: self.plus.to_end(Side::Plus)?,
        };
        p.check_shapes().map_err(|e| RunError::Config(format!("model {}: {e}", self.name)))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conedex_core::models;

    #[test]
    fn builtins_round_trip_bit_exactly() {
        for doc in models::CATALOG {
            let p = models::by_name(doc.name).unwrap();
            let text = serde_json::to_string(&ModelDto::from(&p)).unwrap();
            let back: ModelDto = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_operator().unwrap(), p, "{}", doc.name);
        }
        let p = models::random_fullrank(17);
        let text = serde_json::to_string_pretty(&ModelDto::from(&p)).unwrap();
        let back: ModelDto = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_operator().unwrap(), p);
    }

    #[test]
    fn ragged_matrix_is_a_config_error() {
        let m = MatrixDto(vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]]);
        assert!(matches!(m.to_matrix(), Err(RunError::Config(_))));
    }

    #[test]
    fn profile_tags() {
        let t = serde_json::to_string(&ProfileDto::PowerDecay { power: 1.0 }).unwrap();
        assert_eq!(t, r#"{"kind":"power-decay","power":1.0}"#);
    }
}
