//! Configuration schema. Every scenario is validated and its objects built before any
//! computation starts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use carnot::algebra::{algebra_preset, StratifiedAlgebra};
use carnot::domains::{BoundaryMethod, DomainPresetSpec};
use carnot::fields::{HorizontalFieldSpec, ScalarFieldSpec};
use carnot::metric::NormKind;
use carnot::mollify::{CommutationScheme, Profile};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub output: Output,
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default = "default_algebra")]
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default)]
    pub profile: Profile,
}

impl Default for Defaults {
    fn default() -> Self {
        Self { algebra: default_algebra(), norm: NormKind::default(), profile: Profile::default() }
    }
}

fn default_algebra() -> AlgebraSpec {
    AlgebraSpec::Preset("heisenberg1".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_json")]
    pub json: String,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: default_dir(), csv: default_csv(), json: default_json() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("cgg-out")
}
fn default_csv() -> String {
    "report.csv".into()
}
fn default_json() -> String {
    "report.json".into()
}

/// A preset name or an inline algebra; inline bracket entries are 1-based
/// `[i, j, k, c]` meaning `[e_i, e_j] ∋ c e_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraSpec {
    Preset(String),
    Inline { name: String, layer_dims: Vec<usize>, brackets: Vec<(usize, usize, usize, f64)> },
}

impl AlgebraSpec {
    pub fn build(&self) -> carnot::Result<StratifiedAlgebra<f64>> {
        match self {
            Self::Preset(name) => algebra_preset(name),
            Self::Inline { name, layer_dims, brackets } => {
                let mut zero_based = Vec::with_capacity(brackets.len());
                for &(i, j, k, c) in brackets {
                    if i == 0 || j == 0 || k == 0 {
                        return Err(carnot::Error::InvalidAlgebra("bracket indices are 1-based".into()));
                    }
                    zero_based.push((i - 1, j - 1, k - 1, c));
                }
                StratifiedAlgebra::new(name.clone(), layer_dims, &zero_based)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Suites the scenario belongs to besides its own name.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub algebra: Option<AlgebraSpec>,
    #[serde(default)]
    pub norm: Option<NormKind>,
    #[serde(default)]
    pub profile: Option<Profile>,
    pub tolerance: f64,
    pub check: Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Volume {
    pub cells: usize,
    #[serde(default = "two")]
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Boundary weight for the half-density average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    One,
    /// `max(0, 1 − |x − center| / radius)`.
    Tent {
        center: Vec<f64>,
        radius: f64,
    },
}

/// Coordinate plane `{x_axis = value}` (1-based axis), within `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub axis: usize,
    pub value: f64,
    #[serde(default = "tiny")]
    pub tol: f64,
}

/// Bump centered at `(o/2, −o/2, 0, …)`, at distance `o/√2` from the plane `x_1 = x_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetBump {
    pub offset: f64,
    /// Semi-axes; defaults to `o/4` in every coordinate.
    #[serde(default)]
    pub axes: Option<Vec<f64>>,
    #[serde(default)]
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    GroupAxioms {
        #[serde(default = "thousand")]
        samples: usize,
    },
    Dilation {
        #[serde(default = "thousand")]
        samples: usize,
        #[serde(default = "million")]
        haar_samples: usize,
        #[serde(default = "two_f")]
        r: f64,
    },
    Frame {
        #[serde(default = "hundred")]
        samples: usize,
    },
    GaussGreen {
        field: HorizontalFieldSpec,
        domain: DomainPresetSpec,
        resolution: usize,
        #[serde(default)]
        method: BoundaryMethod,
        volume: Volume,
        #[serde(default)]
        refine: bool,
        /// Judge on the absolute residual (divergence-free fields, where both sides vanish).
        #[serde(default)]
        absolute: bool,
    },
    GreenFirst {
        u: ScalarFieldSpec,
        v: ScalarFieldSpec,
        domain: DomainPresetSpec,
        resolution: usize,
        #[serde(default)]
        method: BoundaryMethod,
        volume: Volume,
        /// Also report the swap combination against the second identity.
        #[serde(default)]
        swap: bool,
    },
    GreenSecond {
        u: ScalarFieldSpec,
        v: ScalarFieldSpec,
        domain: DomainPresetSpec,
        resolution: usize,
        #[serde(default)]
        method: BoundaryMethod,
        volume: Volume,
    },
    HalfDensity {
        domain: DomainPresetSpec,
        eps: Vec<f64>,
        #[serde(default = "phi_one")]
        phi: PhiSpec,
        resolution: usize,
        #[serde(default)]
        method: BoundaryMethod,
        pairs: usize,
        /// Extra bounding-box margin around the domain.
        #[serde(default)]
        pad: f64,
    },
    TraceLocality {
        field: HorizontalFieldSpec,
        first: DomainPresetSpec,
        second: DomainPresetSpec,
        patch: PatchSpec,
        resolution: usize,
        #[serde(default = "align")]
        align_tol: f64,
        #[serde(default = "tiny")]
        normal_tol: f64,
    },
    TangentLocality {
        field: HorizontalFieldSpec,
        #[serde(default = "one_f")]
        r: f64,
        half_width: f64,
        #[serde(default = "four")]
        resolution: usize,
        #[serde(default = "align")]
        align_tol: f64,
        normal_tol: f64,
    },
    TraceBound {
        field: HorizontalFieldSpec,
        domain: DomainPresetSpec,
        resolution: usize,
        #[serde(default)]
        method: BoundaryMethod,
        volume: Volume,
    },
    DivergenceFree {
        field: HorizontalFieldSpec,
        bumps: Vec<OffsetBump>,
        delta: f64,
        volume: Volume,
    },
    Commutation {
        f: ScalarFieldSpec,
        /// Frame index, 1-based.
        j: usize,
        point: Vec<f64>,
        eps: f64,
        #[serde(default)]
        scheme: CommutationScheme,
        volume: Volume,
        /// Difference step `h = eps / h_ratio`; defaults to 64 for the fixed grid and to
        /// the library step otherwise.
        #[serde(default)]
        h_ratio: Option<f64>,
        #[serde(default)]
        region: Option<RegionSpec>,
    },
    PointwiseLimit {
        f: ScalarFieldSpec,
        point: Vec<f64>,
        eps: Vec<f64>,
        volume: Volume,
        ref_radius: f64,
        ref_samples: usize,
    },
    TotalVariation {
        domain: DomainPresetSpec,
        eps: Vec<f64>,
        #[serde(default)]
        region: Option<RegionSpec>,
        resolution: usize,
        samples: usize,
        #[serde(default)]
        min_ratio: Option<f64>,
    },
}

pub const CHECK_KINDS: &[(&str, &str)] = &[
    ("group_axioms", "associativity / identity / inverse residuals on random triples"),
    ("dilation", "distance homogeneity, dilation homomorphism, Haar scaling 2^Q"),
    ("frame", "frame table vs symbolic rows and left-invariance by differences"),
    ("gauss_green", "volume divergence vs boundary normal trace"),
    ("green_first", "first Green identity (optionally with the swap combination)"),
    ("green_second", "second Green identity"),
    ("half_density", "mollified indicator averaged on the boundary along an eps ladder"),
    ("trace_locality", "normal traces of two domains on a shared coordinate-plane patch"),
    ("tangent_locality", "normal traces of a sphere and its tangent plane on a tiny patch"),
    ("trace_bound", "per-sample trace bound |<F, nu>| <= sup |F|"),
    ("divergence_free", "distributional divergence of a field against offset bumps"),
    ("commutation", "X_j(rho_eps * f) vs rho_eps * X_j f under grid doubling"),
    ("pointwise_limit", "mollified values vs right-ball average along an eps ladder"),
    ("total_variation", "total variation of the mollified indicator vs h-perimeter"),
];

fn two() -> usize {
    2
}
fn four() -> usize {
    4
}
fn hundred() -> usize {
    100
}
fn thousand() -> usize {
    1000
}
fn million() -> usize {
    1_000_000
}
fn two_f() -> f64 {
    2.0
}
fn one_f() -> f64 {
    1.0
}
fn tiny() -> f64 {
    1e-12
}
fn align() -> f64 {
    1e-9
}
fn phi_one() -> PhiSpec {
    PhiSpec::One
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::GroupAxioms { .. } => "group_axioms",
            Check::Dilation { .. } => "dilation",
            Check::Frame { .. } => "frame",
            Check::GaussGreen { .. } => "gauss_green",
            Check::GreenFirst { .. } => "green_first",
            Check::GreenSecond { .. } => "green_second",
            Check::HalfDensity { .. } => "half_density",
            Check::TraceLocality { .. } => "trace_locality",
            Check::TangentLocality { .. } => "tangent_locality",
            Check::TraceBound { .. } => "trace_bound",
            Check::DivergenceFree { .. } => "divergence_free",
            Check::Commutation { .. } => "commutation",
            Check::PointwiseLimit { .. } => "pointwise_limit",
            Check::TotalVariation { .. } => "total_variation",
        }
    }
}

impl ScenarioConfig {
    pub fn in_suite(&self, suite: &str) -> bool {
        suite == self.name || self.suites.iter().any(|s| s == suite)
    }

    pub fn algebra<'a>(&'a self, defaults: &'a Defaults) -> &'a AlgebraSpec {
        self.algebra.as_ref().unwrap_or(&defaults.algebra)
    }
}

/// A report file embeds the resolved configuration under `config`.
#[derive(Deserialize)]
struct Embedded {
    config: Config,
}

impl Config {
    /// Reads TOML, or JSON (a report file with an embedded `config`, or a bare config).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            match serde_json::from_str::<Embedded>(&text) {
                Ok(e) => e.config,
                Err(_) => serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?,
            }
        } else {
            Self::parse(&text).map_err(|e| match e {
                CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn suite_members(&self, suite: &str) -> Vec<usize> {
        self.scenarios.iter().enumerate().filter(|(_, s)| s.in_suite(suite)).map(|(i, _)| i).collect()
    }

    pub fn suites(&self) -> Vec<String> {
        let mut out: Vec<String> = self.scenarios.iter().flat_map(|s| s.suites.iter().cloned()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Invariants not expressible in the schema; errors name the failing field path.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut names = std::collections::BTreeSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            let path = format!("scenario[{i}] ({})", s.name);
            let bad = |field: &str, msg: String| CliError::Invalid(format!("{path}.{field}: {msg}"));
            if !names.insert(s.name.as_str()) {
                return Err(bad("name", "duplicate scenario name".into()));
            }
            if !(s.tolerance >= 0.0) {
                return Err(bad("tolerance", "must be non-negative".into()));
            }
            let alg = Arc::new(s.algebra(&self.defaults).build().map_err(|e| bad("algebra", e.to_string()))?);
            crate::run::prepare(s, &self.defaults, &alg).map_err(|e| match e {
                CliError::Invalid(m) => CliError::Invalid(format!("{path}.{m}")),
                CliError::Core(e) => bad("check", e.to_string()),
                other => other,
            })?;
        }
        Ok(())
    }
}

pub(crate) fn check_ladder(field: &str, eps: &[f64]) -> Result<(), CliError> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CliError::Invalid(format!("check.{field}: eps ladder must be positive and strictly decreasing")));
    }
    Ok(())
}

pub(crate) fn check_positive(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::Invalid(format!("check.{field}: must be positive")));
    }
    Ok(())
}
