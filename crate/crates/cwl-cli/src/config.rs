//! Experiment configuration: the JSON schema, its validation, and the
//! digest embedded in every report.
//!
//! Measures are written as `{element-string: rational-string}` maps so that
//! exact mode never sees a float. All maps are BTreeMaps: serialization
//! order, and therefore the config digest, is independent of input order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use cwl_core::lattice::named_example_ids;

use crate::error::CliError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}{field}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
        field: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueMode {
    #[default]
    Exact,
    Float,
}

impl ValueMode {
    pub fn name(self) -> &'static str {
        match self {
            ValueMode::Exact => "rational",
            ValueMode::Float => "float",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    SlElementary { dim: usize },
    Matrix {
        dim: usize,
        generators: BTreeMap<String, Vec<Vec<i64>>>,
    },
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec::Free { rank: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SubgroupSpec {
    #[default]
    Trivial,
    WholeGroup,
    FreeGens { words: Vec<String> },
    CyclicPowers { element: String },
    UpperUnitriangular,
    LineStabilizer { line: Vec<i64> },
    SubspaceStabilizer { basis: Vec<Vec<i64>> },
    CongruenceLevel { modulus: u64 },
}

/// Either the named uniform measure on the generators, or an explicit
/// weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Named(String),
    Weights(BTreeMap<String, String>),
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec::Named("srw".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct WalkParams {
    pub n_max: u32,
    pub alphas: Vec<f64>,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            n_max: 12,
            alphas: vec![2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpectralParams {
    pub q_list: Vec<f64>,
    pub n_max: u32,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            q_list: vec![2.0],
            n_max: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct GrowthParams {
    pub radius: u32,
    /// Inclusive radius window passed to the fit; whole series when absent.
    pub window: Option<(u32, u32)>,
    /// Conjugators x for the H ∩ x⁻¹Hx series, as element strings.
    pub conjugators: Vec<String>,
    /// Externally supplied co-amenability fact, with its source, for the
    /// verdict rules.
    pub co_amenable: Option<CoAmenableSpec>,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            radius: 8,
            window: None,
            conjugators: Vec::new(),
            co_amenable: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CoAmenableSpec {
    pub flag: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ClassifyParams {
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct NormsParams {
    pub witness: Option<WitnessSpec>,
    pub family: Option<FamilySpec>,
    pub q_list: Vec<f64>,
    /// Radius of the coset ball searched for operator-norm test vectors.
    pub vec_radius: u32,
    pub trials: u32,
    pub crossover: Option<CrossoverSpec>,
}

impl Default for NormsParams {
    fn default() -> Self {
        NormsParams {
            witness: None,
            family: None,
            q_list: vec![2.0],
            vec_radius: 2,
            trials: 40,
            crossover: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "shape",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum WitnessSpec {
    Polynomial {
        c_h: f64,
        s1: u32,
    },
    PolynomialBall {
        c: f64,
        d: f64,
    },
    WeightTable {
        w: BTreeMap<String, f64>,
        radial: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    TranslatedBall {
        letters: Vec<String>,
        translator: String,
        radii: Vec<u32>,
    },
    RandomBall {
        radius: u32,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CrossoverSpec {
    pub c_num: u64,
    pub c_den: u64,
    pub d: u32,
    pub r_cap: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyParams {
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSpec,
    pub subgroup: SubgroupSpec,
    pub measure: MeasureSpec,
    pub walk: WalkParams,
    pub spectral: SpectralParams,
    pub growth: GrowthParams,
    pub classify: ClassifyParams,
    pub norms: NormsParams,
    pub verify: VerifyParams,
    pub seed: u64,
    pub mode: ValueMode,
    #[serde(default = "default_budget_elems")]
    pub budget_elems: usize,
    pub out_dir: Option<PathBuf>,
}

fn default_budget_elems() -> usize {
    cwl_core::group::DEFAULT_BUDGET
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        match &self.group {
            GroupSpec::Free { rank } | GroupSpec::FreeAbelian { rank } => {
                if *rank == 0 {
                    return Err("group.rank must be at least 1".into());
                }
            }
            GroupSpec::SlElementary { dim } => {
                if *dim < 2 {
                    return Err("group.dim must be at least 2".into());
                }
            }
            GroupSpec::Matrix { dim, generators } => {
                if *dim == 0 {
                    return Err("group.dim must be at least 1".into());
                }
                if generators.is_empty() {
                    return Err("group.generators must not be empty".into());
                }
                for (label, rows) in generators {
                    if rows.len() != *dim || rows.iter().any(|r| r.len() != *dim) {
                        return Err(format!(
                            "group.generators.{label} must be a {dim}x{dim} row list"
                        ));
                    }
                }
            }
        }
        if let MeasureSpec::Named(name) = &self.measure {
            if name != "srw" {
                return Err(format!(
                    "measure `{name}` is not recognized; use \"srw\" or a weight map"
                ));
            }
        }
        if self.walk.n_max == 0 {
            return Err("walk.n-max must be at least 1".into());
        }
        if self.budget_elems == 0 {
            return Err("budget-elems must be at least 1".into());
        }
        for id in &self.verify.examples {
            if !named_example_ids().contains(&id.as_str()) {
                return Err(format!(
                    "verify.examples references unknown example `{id}`; known: {}",
                    named_example_ids().join(", ")
                ));
            }
        }
        Ok(())
    }
}

pub fn default_config() -> ExperimentConfig {
    ExperimentConfig {
        budget_elems: default_budget_elems(),
        ..Default::default()
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(path, &text)
}

pub fn parse(path: &Path, text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = {
            let p = e.path().to_string();
            if p == "." {
                String::new()
            } else {
                format!(" (field `{p}`)")
            }
        };
        let inner = e.into_inner();
        ConfigError::Parse {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
            field,
        }
    })?;
    config.validate().map_err(ConfigError::Invalid)?;
    Ok(config)
}

/// First 8 bytes of the SHA-256 of the canonical serialization; all maps
/// are ordered, so this is independent of field order in the source file.
pub fn digest(config: &ExperimentConfig) -> String {
    let canon = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&canon)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
