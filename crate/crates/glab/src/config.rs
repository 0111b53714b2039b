use std::path::{Path, PathBuf};

use glab_core::constants::ChainInputs;
use glab_core::cutoff::{CutoffFamily, OuterRadius, RadialFactor, RadialModel, TestFunction};
use glab_core::family::FamilyKind;
use glab_core::local_model::{LocalModel, Polynomial};
use glab_core::solver::{default_tol, IdentityPair, SolveOptions};
use glab_core::{MetricSpec, PeriodicGrid};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with the offending field.
#[derive(Debug, thiserror::Error)]
#[error("config error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Constants,
    Family,
    Cutoff,
    IdentityCheck,
    Volume,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Constants => "constants",
            ExperimentKind::Family => "family",
            ExperimentKind::Cutoff => "cutoff",
            ExperimentKind::IdentityCheck => "identity-check",
            ExperimentKind::Volume => "volume",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub random_start: bool,
    #[serde(default)]
    pub skip_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// Scales `c` for the `ρ(cω) = ρ(ω)` check.
    #[serde(default)]
    pub scaling: Vec<f64>,
    /// Write `rho.glf` and its sidecar.
    #[serde(default = "yes")]
    pub write_field: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    /// Assemble the chain from given inputs instead of measuring a metric.
    pub inputs: Option<ChainInputs>,
    /// Solve and check `sup ρ ≤ C_G`.
    #[serde(default = "yes")]
    pub check_bound: bool,
    /// Exponents for the Moser inequality spot check.
    #[serde(default)]
    pub moser_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub samples: Vec<f64>,
    pub path: FamilyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    pub n: usize,
    #[serde(default = "flat_model")]
    pub model: RadialModel,
    pub r0: f64,
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default = "fixed")]
    pub outer: OuterRadius,
    /// `ε = 10^{-2}, …, 10^{-2·decades}`.
    #[serde(default = "five")]
    pub decades: usize,
    /// Complex dimension of the negative control; `0` disables it.
    #[serde(default = "one_usize")]
    pub control_n: usize,
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    /// Outer radius schedule for the extension terms.
    pub terms_outer: Option<OuterRadius>,
    #[serde(default)]
    pub factors: Vec<RadialFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySection {
    pub pairs: Vec<IdentityPair>,
    #[serde(default = "identity_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSection {
    pub n: usize,
    #[serde(default = "a1")]
    pub polynomial: Polynomial,
    #[serde(default = "unit")]
    pub radius: f64,
    pub exclusion_radius: Option<f64>,
    pub t: Vec<[f64; 2]>,
    pub samples: usize,
    /// Seeds beyond the run seed, for the seed-agreement check.
    #[serde(default)]
    pub extra_seeds: Vec<u64>,
    /// `(r_in, r_out)` annulus for the quasi-isometry constant.
    pub annulus: Option<[f64; 2]>,
    #[serde(default = "quasi_points")]
    pub points: usize,
}

fn yes() -> bool {
    true
}
fn unit() -> f64 {
    1.0
}
fn five() -> usize {
    5
}
fn one_usize() -> usize {
    1
}
fn identity_tol() -> f64 {
    1e-6
}
fn quasi_points() -> usize {
    2000
}
fn flat_model() -> RadialModel {
    RadialModel::Flat
}
fn fixed() -> OuterRadius {
    OuterRadius::Fixed
}
fn a1() -> Polynomial {
    Polynomial::A1
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must match the subcommand when given.
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub metric: Option<MetricSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub solve: Option<SolveSection>,
    pub constants: Option<ConstantsSection>,
    pub family: Option<FamilySection>,
    pub cutoff: Option<CutoffSection>,
    pub identity: Option<IdentitySection>,
    pub volume: Option<VolumeSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| span_field(text, s.start)).unwrap_or_default();
            ConfigError::new(field, e.message().to_string())
        })
    }

    /// Checks everything the subcommand needs before any work starts.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(ConfigError::new(
                    "experiment",
                    format!("config is for `{}`, not `{}`", k.name(), kind.name()),
                ));
            }
        }
        if let Some(tol) = self.solver.tol {
            if !(tol >= 1e-12) {
                return Err(ConfigError::new("solver.tol", format!("must be >= 1e-12, got {tol}")));
            }
        }
        if self.solver.max_iter == Some(0) {
            return Err(ConfigError::new("solver.max_iter", "must be positive"));
        }
        match kind {
            ExperimentKind::Solve | ExperimentKind::IdentityCheck => {
                self.grid()?;
                self.metric()?;
                if kind == ExperimentKind::IdentityCheck {
                    let id = self.section(&self.identity, "identity")?;
                    if id.pairs.is_empty() {
                        return Err(ConfigError::new("identity.pairs", "at least one pair is required"));
                    }
                }
                if let Some(s) = &self.solve {
                    if let Some(c) = s.scaling.iter().find(|c| !(**c > 0.0)) {
                        return Err(ConfigError::new("solve.scaling", format!("scales must be positive, got {c}")));
                    }
                }
            }
            ExperimentKind::Constants => {
                let direct = self.constants.as_ref().and_then(|c| c.inputs).is_some();
                if !direct {
                    self.grid()?;
                    self.metric()?;
                }
            }
            ExperimentKind::Family => {
                self.grid()?;
                let f = self.section(&self.family, "family")?;
                if f.samples.is_empty() {
                    return Err(ConfigError::new("family.samples", "at least one parameter is required"));
                }
                if let Some(t) = f.samples.iter().find(|t| !(**t > 0.0 && **t <= 0.5)) {
                    return Err(ConfigError::new("family.samples", format!("{t} is outside (0, 1/2]")));
                }
            }
            ExperimentKind::Cutoff => {
                let c = self.section(&self.cutoff, "cutoff")?;
                if c.n == 0 {
                    return Err(ConfigError::new("cutoff.n", "must be positive"));
                }
                if c.decades == 0 {
                    return Err(ConfigError::new("cutoff.decades", "must be positive"));
                }
                if !(c.r0 > 0.0 && c.r0 < c.radius.min(1.0)) {
                    return Err(ConfigError::new("cutoff.r0", "need 0 < r0 < min(radius, 1)"));
                }
            }
            ExperimentKind::Volume => {
                let v = self.section(&self.volume, "volume")?;
                if v.samples < 10_000 {
                    return Err(ConfigError::new("volume.samples", "at least 10000 samples are required"));
                }
                if v.t.is_empty() {
                    return Err(ConfigError::new("volume.t", "at least one parameter is required"));
                }
                self.local_model()?
                    .validate()
                    .map_err(|e| ConfigError::new("volume", e.to_string()))?;
            }
        }
        Ok(())
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        s.as_ref().ok_or_else(|| ConfigError::new(name, "section is required"))
    }

    pub fn grid(&self) -> Result<PeriodicGrid, ConfigError> {
        let g = self.section(&self.grid, "grid")?;
        if !(2..=3).contains(&g.n) {
            return Err(ConfigError::new("grid.n", format!("complex dimension must be 2 or 3, got {}", g.n)));
        }
        if g.size < 4 || !g.size.is_power_of_two() {
            return Err(ConfigError::new("grid.N", format!("must be a power of two >= 4, got {}", g.size)));
        }
        PeriodicGrid::new(g.n, g.size).map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn metric(&self) -> Result<&MetricSpec, ConfigError> {
        self.section(&self.metric, "metric")
    }

    pub fn solve_options(&self, n: usize) -> SolveOptions {
        let mut o = SolveOptions::new(n);
        o.tol = self.solver.tol.unwrap_or(default_tol(n));
        if let Some(m) = self.solver.max_iter {
            o.max_iter = m;
        }
        o.seed = self.seed;
        o.random_start = self.solver.random_start;
        o.skip_gap = self.solver.skip_gap;
        o
    }

    pub fn cutoff_family(&self, n: usize, outer: OuterRadius) -> Result<CutoffFamily, ConfigError> {
        let c = self.section(&self.cutoff, "cutoff")?;
        Ok(CutoffFamily {
            n,
            model: c.model,
            r0: c.r0,
            radius: c.radius,
            outer,
        })
    }

    pub fn local_model(&self) -> Result<LocalModel, ConfigError> {
        let v = self.section(&self.volume, "volume")?;
        let mut m = LocalModel::a1(v.n);
        m.polynomial = v.polynomial;
        m.radius = v.radius;
        if let Some(r) = v.exclusion_radius {
            m.exclusion_radius = r;
        }
        Ok(m)
    }
}

/// Best-effort dotted path of the key whose value starts at `offset`.
fn span_field(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len();
        if pos > offset {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
