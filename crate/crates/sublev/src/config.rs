//! Declarative experiment description. Every struct rejects unknown keys and
//! the published schema is generated from these types.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub datum: DatumSpec,
    pub grid: GridSpec,
    pub scheme: SchemeSpec,
    pub task: TaskSpec,
    pub outputs: OutputSpec,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum FamilySpec {
    Builtin(BuiltinFamily),
    Invariant(InvariantFamily),
    Tabulated(TabulatedFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BuiltinFamily {
    pub builtin: String,
    /// Truncation size for `remark-lk85`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
}

/// One-dimensional triplet; jumps are `[location, weight]` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TripletSpec {
    #[serde(default)]
    pub killing: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub diffusion: f64,
    #[serde(default)]
    pub jumps: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub label: String,
    #[serde(flatten)]
    pub triplet: TripletSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InvariantFamily {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub members: Vec<MemberSpec>,
}

/// `table[θ][k]` is the triplet of member `θ` at `nodes[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TabulatedFamily {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub labels: Vec<String>,
    pub nodes: Vec<f64>,
    pub table: Vec<Vec<TripletSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum DatumSpec {
    Builtin(BuiltinDatum),
    Values(SampledDatum),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BuiltinDatum {
    pub builtin: String,
}

/// Node values on the configured grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SampledDatum {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySpec {
    #[default]
    Constant,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum SymbolSpec {
    #[default]
    Lattice,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum EvolveMethod {
    #[default]
    Spectral,
    /// Closed-form sliding maximum; drift-uncertainty family only.
    Exact,
    Hjb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    /// Time step of the splitting scheme; requested times must be multiples.
    pub dt: f64,
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_leak")]
    pub leak_tolerance: f64,
    /// Explicit step for the finite-difference solver; CFL-derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hjb_dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub small_jump_cutoff: f64,
    /// Multiplier on the refinement change in check tolerances.
    #[serde(default = "default_safety")]
    pub check_safety: f64,
}

fn default_leak() -> f64 {
    sublev_core::semigroup::DEFAULT_LEAK_TOLERANCE
}

fn default_cfl() -> f64 {
    0.9
}

fn default_safety() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DynkinCase {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum McMode {
    #[default]
    Exhaustive,
    Dp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSpec {
    Symbol {
        xi: Vec<f64>,
        #[serde(default)]
        x: f64,
    },
    Generator {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<f64>>,
    },
    Evolve {
        times: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<f64>>,
        #[serde(default)]
        method: EvolveMethod,
    },
    Hjb {
        times: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<f64>>,
        /// Probes per direction for the touch test; skipped when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        viscosity_probes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        viscosity_tolerance: Option<f64>,
    },
    Dynkin {
        cases: Vec<DynkinCase>,
    },
    Slope {
        x: f64,
        t_grid: Vec<f64>,
        s_list: Vec<f64>,
    },
    Lipschitz {
        t_grid: Vec<f64>,
        #[serde(default = "default_favard")]
        relative_tolerance: f64,
    },
    Pmp {
        cases: usize,
    },
    Tightness {
        radii: Vec<f64>,
        #[serde(default)]
        x: f64,
        eps: f64,
    },
    Mc {
        t_final: f64,
        k: Vec<usize>,
        n_paths: usize,
        x: f64,
        #[serde(default)]
        mode: McMode,
        /// Value-grid size for the dynamic-programming mode.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dp_nodes: Option<usize>,
        /// Slack added to `3·stderr` when comparing with the evolved value.
        #[serde(default = "default_mc_tol")]
        tolerance: f64,
    },
    Crosscheck {
        t_final: f64,
        #[serde(default = "default_ratio")]
        min_ratio: f64,
    },
}

fn default_favard() -> f64 {
    0.05
}

fn default_mc_tol() -> f64 {
    2e-2
}

fn default_ratio() -> f64 {
    1.7
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Symbol { .. } => "symbol",
            TaskSpec::Generator { .. } => "generator",
            TaskSpec::Evolve { .. } => "evolve",
            TaskSpec::Hjb { .. } => "hjb",
            TaskSpec::Dynkin { .. } => "dynkin",
            TaskSpec::Slope { .. } => "slope",
            TaskSpec::Lipschitz { .. } => "lipschitz",
            TaskSpec::Pmp { .. } => "pmp",
            TaskSpec::Tightness { .. } => "tightness",
            TaskSpec::Mc { .. } => "mc",
            TaskSpec::Crosscheck { .. } => "crosscheck",
        }
    }
}

/// File names relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    /// Frame dump; trajectory tasks only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary: Option<String>,
}

pub fn schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(ExperimentConfig)).expect("schema serialises")
}

pub fn parse(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_str(text)
}
