//! Scenario configuration files: one JSON document describing a complete
//! end-to-end run — the plant, the safety regions, the lifting dictionary,
//! the experiment parameters, and solver options.
//!
//! The format carries a versioned `schema` field. Parsing is strict about
//! the schema and tolerant about optional fields; `write(parse(text))` is
//! idempotent because serialization is field-order deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::Mat;
use crate::plant::{
    build_dictionary, make_plant, Atom, DictionaryRequest, DictionarySpec, Excitation,
    PlantModel,
};
use crate::poly::box_to_set;
use crate::sdp::SdpOptions;
use crate::synth::{SafetyProblem, SynthOptions};

pub const SCENARIO_SCHEMA: &str = "kcbc-scenario-1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Plant(#[from] crate::plant::PlantError),
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
}

/// Either a named benchmark plant or explicit dictionary-form coefficients
/// `x+ = A M(x) + B u` (A is n x N row-major, B is n x m row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSpec {
    Named { name: String },
    Custom { custom: CustomPlant },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomPlant {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

/// The nonlinear part of the lifting dictionary; the state coordinates are
/// always included first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryConfig {
    Linear,
    /// All monomials of total degree 2..=d.
    MaxDegree(u32),
    /// Explicit atoms appended after the states.
    Atoms(Vec<Atom>),
}

fn default_multiplier_degree() -> usize {
    SynthOptions::default().multiplier_degree
}
fn default_stabilize_target() -> f64 {
    SynthOptions::default().stabilize_target
}
fn default_max_iters() -> usize {
    SynthOptions::default().sdp.max_iters
}
fn default_stagnation_window() -> usize {
    SynthOptions::default().sdp.stagnation_window
}

/// Solver knobs exposed in configuration files; everything has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub multiplier_degree: usize,
    pub eps_max: Option<f64>,
    pub stabilize_attempts: usize,
    pub stabilize_target: f64,
    pub max_iters: usize,
    pub stagnation_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            multiplier_degree: default_multiplier_degree(),
            eps_max: None,
            stabilize_attempts: 0,
            stabilize_target: default_stabilize_target(),
            max_iters: default_max_iters(),
            stagnation_window: default_stagnation_window(),
        }
    }
}

/// A complete end-to-end scenario. Boxes are lists of `[lo, hi]` pairs, one
/// per state coordinate; `x_unsafe` is a union of such boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema: String,
    pub name: String,
    pub plant: PlantSpec,
    pub x: Vec<(f64, f64)>,
    pub x_init: Vec<(f64, f64)>,
    pub x_unsafe: Vec<Vec<(f64, f64)>>,
    pub dictionary: DictionaryConfig,
    /// Experiment horizon T.
    pub horizon: usize,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    /// State where the data-collection experiment starts.
    pub x_start: Vec<f64>,
    /// Symmetric bound on the excitation inputs; `None` uses the plant's
    /// default.
    #[serde(default)]
    pub excitation_bound: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if cfg.schema != SCENARIO_SCHEMA {
            return Err(ScenarioError::Parse(format!(
                "unsupported schema {:?}, expected {SCENARIO_SCHEMA:?}",
                cfg.schema
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialization");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.x.len();
        if n == 0 {
            return Err(ScenarioError::Invalid("state space box is empty".into()));
        }
        if self.x_init.len() != n || self.x_start.len() != n {
            return Err(ScenarioError::Invalid(
                "x_init and x_start must match the state dimension".into(),
            ));
        }
        if self.x_unsafe.is_empty() || self.x_unsafe.iter().any(|b| b.len() != n) {
            return Err(ScenarioError::Invalid(
                "x_unsafe must hold at least one box of the state dimension".into(),
            ));
        }
        if self.k == 0 {
            return Err(ScenarioError::Invalid("k must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(ScenarioError::Invalid("horizon must be >= 1".into()));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.x.len()
    }

    pub fn build_plant(&self) -> Result<PlantModel, ScenarioError> {
        match &self.plant {
            PlantSpec::Named { name } => Ok(make_plant(name)?),
            PlantSpec::Custom { custom } => {
                let a = rows_to_mat(&custom.a, "plant.custom.a")?;
                let b = rows_to_mat(&custom.b, "plant.custom.b")?;
                let dict = self.build_dictionary()?;
                Ok(PlantModel::custom(&custom.name, a, b, dict)?)
            }
        }
    }

    pub fn build_dictionary(&self) -> Result<DictionarySpec, ScenarioError> {
        let n = self.state_dim();
        let req = match &self.dictionary {
            DictionaryConfig::Linear => return Ok(DictionarySpec::linear(n)),
            DictionaryConfig::MaxDegree(d) => DictionaryRequest::MaxDegree(*d),
            DictionaryConfig::Atoms(atoms) => DictionaryRequest::Atoms(atoms.clone()),
        };
        Ok(build_dictionary(n, &req)?)
    }

    pub fn synth_options(&self) -> SynthOptions {
        let mut o = SynthOptions::default();
        o.multiplier_degree = self.solver.multiplier_degree;
        o.eps_max = self.solver.eps_max;
        o.stabilize_attempts = self.solver.stabilize_attempts;
        o.stabilize_target = self.solver.stabilize_target;
        o.sdp = SdpOptions {
            max_iters: self.solver.max_iters,
            stagnation_window: self.solver.stagnation_window,
            ..SdpOptions::default()
        };
        o
    }

    /// Assemble the safety problem; `k_override` substitutes the requested
    /// induction depth without editing the file.
    pub fn build_problem(&self, k_override: Option<usize>) -> Result<SafetyProblem, ScenarioError> {
        let n = self.state_dim();
        let plant = self.build_plant()?;
        let (xl, xu) = split_box(&self.x);
        let (il, iu) = split_box(&self.x_init);
        let mut unsafe_sets = Vec::new();
        for b in &self.x_unsafe {
            let (ul, uu) = split_box(b);
            unsafe_sets.push(box_to_set(&ul, &uu)?);
        }
        Ok(SafetyProblem::new(
            n,
            plant.input_dim(),
            box_to_set(&xl, &xu)?,
            box_to_set(&il, &iu)?,
            unsafe_sets,
            k_override.unwrap_or(self.k),
            self.build_dictionary()?,
            self.synth_options(),
        )?)
    }

    pub fn excitation(&self, plant: &PlantModel, seed: u64) -> Excitation {
        let bound = self
            .excitation_bound
            .unwrap_or_else(|| plant.default_input_bound());
        Excitation::symmetric(plant.input_dim(), bound, seed)
    }
}

fn split_box(b: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    b.iter().copied().unzip()
}

fn rows_to_mat(rows: &[Vec<f64>], field: &str) -> Result<Mat, ScenarioError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ScenarioError::Invalid(format!("{field} has ragged rows")));
    }
    Mat::new(nrows, ncols, rows.concat())
        .map_err(|e| ScenarioError::Invalid(format!("{field}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rlc_config() -> ScenarioConfig {
        ScenarioConfig {
            schema: SCENARIO_SCHEMA.into(),
            name: "rlc".into(),
            plant: PlantSpec::Named { name: "rlc".into() },
            x: vec![(-2.0, 2.0), (-4.0, 4.0)],
            x_init: vec![(0.0, 0.5), (0.0, 1.0)],
            x_unsafe: vec![vec![(1.0, 2.0), (-4.0, 4.0)]],
            dictionary: DictionaryConfig::Linear,
            horizon: 30,
            k: 3,
            seed: 0,
            x_start: vec![0.25, 0.5],
            excitation_bound: None,
            solver: SolverConfig {
                stabilize_attempts: 100,
                ..SolverConfig::default()
            },
            output_dir: None,
        }
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = rlc_config();
        let text = cfg.to_json();
        let parsed = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn builds_problem_and_plant() {
        let cfg = rlc_config();
        let plant = cfg.build_plant().unwrap();
        assert_eq!(plant.state_dim(), 2);
        let prob = cfg.build_problem(None).unwrap();
        assert_eq!(prob.k, 3);
        assert_eq!(prob.options.stabilize_attempts, 100);
        let prob1 = cfg.build_problem(Some(1)).unwrap();
        assert_eq!(prob1.k, 1);
    }

    #[test]
    fn atoms_dictionary_round_trips() {
        let mut cfg = rlc_config();
        cfg.x = vec![(-5.0, 5.0); 3];
        cfg.x_init = vec![(-5.0, -2.5), (-5.0, -2.5), (2.5, 5.0)];
        cfg.x_unsafe = vec![vec![(2.5, 5.0); 3]];
        cfg.x_start = vec![-3.75, -3.75, 3.75];
        cfg.dictionary = DictionaryConfig::Atoms(vec![
            Atom::Sin(2),
            Atom::Cos(2),
            Atom::Monomial(vec![2, 0, 0]),
        ]);
        let text = cfg.to_json();
        let parsed = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(parsed.dictionary, cfg.dictionary);
        let dict = parsed.build_dictionary().unwrap();
        assert_eq!(dict.total_terms(), 6);
    }

    #[test]
    fn bundled_scenarios_parse_and_build() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
        for name in ["rlc", "dcmotor", "car", "lorenz"] {
            let text = std::fs::read_to_string(format!("{dir}/{name}.json"))
                .unwrap_or_else(|e| panic!("{name}.json: {e}"));
            let cfg = ScenarioConfig::from_json(&text)
                .unwrap_or_else(|e| panic!("{name}.json: {e}"));
            assert_eq!(cfg.name, name);
            cfg.build_plant().unwrap();
            cfg.build_problem(None).unwrap();
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let mut cfg = rlc_config();
        cfg.schema = "other".into();
        let err = ScenarioConfig::from_json(&cfg.to_json()).unwrap_err();
        assert!(err.to_string().contains("unsupported schema"));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut cfg = rlc_config();
        cfg.x_start = vec![0.0];
        let err = ScenarioConfig::from_json(&cfg.to_json()).unwrap_err();
        assert!(err.to_string().contains("x_start"));
    }

    #[test]
    fn custom_plant_builds() {
        let mut cfg = rlc_config();
        cfg.plant = PlantSpec::Custom {
            custom: CustomPlant {
                name: "toy".into(),
                a: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
                b: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
        };
        let text = cfg.to_json();
        let parsed = ScenarioConfig::from_json(&text).unwrap();
        let plant = parsed.build_plant().unwrap();
        assert_eq!(plant.name(), "toy");
        assert_eq!(plant.step(&[1.0, 2.0], &[0.0, 0.0]), vec![0.5, 1.0]);
    }
}
