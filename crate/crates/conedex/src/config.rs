//! Experiment configuration: a JSON file, overridden field by field from the command line.

use std::path::{Path, PathBuf};

use conedex_core::model::{RadialOperator, TfTheta};
use conedex_core::models;
use conedex_core::spectral::{GridSpec, TolPolicy, DEFAULT_GAP};
use serde::{Deserialize, Serialize};

use crate::dto::{ModelDto, ThetaDto};
use crate::RunError;

pub const DEFAULT_TAUS: [f64; 4] = [1e-3, 1e-2, 1e-1, 0.5];
pub const DEFAULT_KMAX: u32 = 6;

/// A built-in name, a path to a JSON model, or an inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Inline(Box<ModelDto>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Which weight pair the index commands use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Scattering weights for fully elliptic operators, hybrid otherwise.
    #[default]
    Auto,
    /// `β = α + 1/2` on V1.
    Hybrid,
    /// `β = 0` on V1.
    Scattering,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelRef>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub taus: Option<Vec<f64>>,
    pub grid_nodes: Option<usize>,
    pub grid_decades: Option<f64>,
    pub tol_gap: Option<f64>,
    /// Skip the two audit grids.
    pub no_refine: bool,
    pub weights: Option<WeightMode>,
    pub theta: Option<ThetaDto>,
    pub kmax: Option<u32>,
    /// Strength `c` of the channel potential `i c tanh(r)`.
    pub channel_c: Option<f64>,
    /// Seed of randomized checks and of the `RANDOM` model; never affects discretization.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those of `self`.
    pub fn merge(mut self, over: ExperimentConfig) -> Self {
        // a weight given on one side replaces the weight list of the other
        if over.alpha.is_some() || over.alphas.is_some() {
            self.alpha = None;
            self.alphas = None;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(model, alpha, alphas, taus, grid_nodes, grid_decades, tol_gap, weights, theta, kmax, channel_c, seed, out, format);
        self.no_refine |= over.no_refine;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn grid(&self) -> GridSpec {
        let d = GridSpec::default();
        GridSpec::new(self.grid_nodes.unwrap_or(d.nodes), self.grid_decades.unwrap_or(d.decades))
    }

    pub fn tol(&self) -> TolPolicy {
        TolPolicy { gap: self.tol_gap.unwrap_or(DEFAULT_GAP), refine: !self.no_refine }
    }

    pub fn theta(&self) -> TfTheta {
        self.theta.map_or(TfTheta::Rational, Into::into)
    }

    pub fn taus(&self) -> Vec<f64> {
        self.taus.clone().unwrap_or_else(|| DEFAULT_TAUS.to_vec())
    }

    /// `alphas` if given, else the single `alpha`.
    pub fn alpha_list(&self) -> Result<Vec<f64>, RunError> {
        match (&self.alphas, self.alpha) {
            (Some(a), _) if !a.is_empty() => Ok(a.clone()),
            (_, Some(a)) => Ok(vec![a]),
            _ => Err(RunError::Config("no weight given (--alpha or --alphas)".into())),
        }
    }

    pub fn single_alpha(&self) -> Result<f64, RunError> {
        match (self.alpha, &self.alphas) {
            (Some(a), _) => Ok(a),
            (None, Some(v)) if v.len() == 1 => Ok(v[0]),
            _ => Err(RunError::Config("this command takes exactly one weight (--alpha)".into())),
        }
    }

    pub fn resolve_model(&self) -> Result<RadialOperator, RunError> {
        match &self.model {
            None => Err(RunError::Config("no model given (--model)".into())),
            Some(ModelRef::Inline(m)) => m.to_operator(),
            Some(ModelRef::Name(name)) => resolve_name(name, self.seed()),
        }
    }

    /// Rejects malformed grids, tolerances and parameter lists before any work is done.
    pub fn validate(&self) -> Result<(), RunError> {
        let g = self.grid();
        if !g.is_admissible() {
            return Err(RunError::Config(format!("grid with {} nodes over {} decades is too coarse", g.nodes, g.decades)));
        }
        if let Some(t) = self.tol_gap {
            if !(t > 1.0) {
                return Err(RunError::Config(format!("gap tolerance must exceed 1, got {t}")));
            }
        }
        if let Some(ts) = &self.taus {
            if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                return Err(RunError::Config("tau values must lie in (0, 1)".into()));
            }
        }
        let finite = |v: f64| v.is_finite();
        if self.alpha.is_some_and(|a| !finite(a)) || self.alphas.as_ref().is_some_and(|v| v.iter().any(|&a| !finite(a))) {
            return Err(RunError::Config("weights must be finite".into()));
        }
        Ok(())
    }
}

/// Built-in catalog names, `RANDOM` (seeded full-rank model), or a JSON model file.
pub fn resolve_name(name: &str, seed: u64) -> Result<RadialOperator, RunError> {
    if let Some(p) = models::by_name(name) {
        return Ok(p);
    }
    if name.eq_ignore_ascii_case("RANDOM") {
        return Ok(models::random_fullrank(seed));
    }
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{name}: {e}")))?;
        let dto: ModelDto = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{name}: {e}")))?;
        return dto.to_operator();
    }
    Err(RunError::Config(format!("unknown model {name:?}; see `conedex models`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_overrides_file() {
        let file: ExperimentConfig = serde_json::from_str(r#"{"model": "MODEL-B", "alphas": [-1.0, 1.0], "grid_nodes": 800}"#).unwrap();
        let cli = ExperimentConfig { alphas: Some(vec![0.2]), ..Default::default() };
        let m = file.merge(cli);
        assert_eq!(m.alphas, Some(vec![0.2]));
        assert_eq!(m.grid().nodes, 800);
        assert_eq!(m.model, Some(ModelRef::Name("MODEL-B".into())));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"modle": "MODEL-B"}"#).is_err());
    }

    #[test]
    fn validation() {
        let bad = ExperimentConfig { grid_nodes: Some(20), ..Default::default() };
        assert!(matches!(bad.validate(), Err(RunError::Config(_))));
        let bad = ExperimentConfig { taus: Some(vec![1.5]), ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
        assert!(resolve_name("NOPE", 0).is_err());
        assert_eq!(resolve_name("random", 3).unwrap().name, "RANDOM-3");
    }
}
