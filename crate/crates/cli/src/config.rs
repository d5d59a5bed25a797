//! Run configuration: JSON, unknown keys rejected everywhere.
//!
//! Paths inside the configuration (initial-guess files) are resolved relative
//! to the directory of the configuration file.

use std::path::{Path, PathBuf};

use nehari_core::multiplicity::{DistinctOptions, StartPlan};
use nehari_core::nehari::{InitialGuess, StepRule};
use nehari_core::sobolev::QuotientOptions;
use nehari_core::verify::Tolerances;
use nehari_core::{Boundary, Domain, GridFunction, Nonlinearity, Potential, Problem, SolverConfig};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence. Defaults to `out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sobolev: SobolevSpec,
    #[serde(default)]
    pub fiber: Option<FiberSpec>,
    #[serde(default)]
    pub distinct: Option<DistinctSpec>,
    #[serde(default)]
    pub verify: Tolerances,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    #[serde(default)]
    pub potential: Potential,
    pub nonlinearity: Nonlinearity,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub side: usize,
    pub boundary: Boundary,
    /// Symmetric generator set; defaults to `±e_i`.
    #[serde(default)]
    pub generators: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    /// Gaussian bump; centre defaults to the middle, width to `side/8`.
    Bump {
        #[serde(default)]
        center: Option<Vec<usize>>,
        #[serde(default)]
        width: Option<f64>,
        #[serde(default = "one")]
        height: f64,
    },
    /// Uniform on `[−1, 1]` from the run seed.
    Random,
    /// A `u.csv` as written by `solve`.
    File { path: PathBuf },
    /// Vertex values in row-major order.
    Values { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Bump {
            center: None,
            width: None,
            height: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct StepSpec {
    pub initial: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for StepSpec {
    fn default() -> Self {
        let s = StepRule::default();
        Self {
            initial: s.initial,
            backtrack: s.backtrack,
            armijo: s.armijo,
            min_step: s.min_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iterations: usize,
    /// Absolute bound on `‖residual‖_{p′}`; default `1e−8 · max(1, ‖u‖^{p−1})`.
    pub residual_tol: Option<f64>,
    pub fiber_tol: f64,
    pub initial: InitialSpec,
    pub step: StepSpec,
    pub override_hypotheses: bool,
    pub negative_part_exponent: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_iterations: d.max_iterations,
            residual_tol: d.residual_tol,
            fiber_tol: d.fiber_tol,
            initial: InitialSpec::default(),
            step: StepSpec::default(),
            override_hypotheses: d.override_hypotheses,
            negative_part_exponent: d.negative_part_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevSpec {
    /// Exponent of the quotient; defaults to the nonlinearity's `q`.
    pub q: Option<f64>,
    /// Random starts for the direct quotient minimization.
    pub starts: usize,
    pub max_iterations: usize,
    pub gradient_tol: f64,
}

impl Default for SobolevSpec {
    fn default() -> Self {
        let o = QuotientOptions::default();
        Self {
            q: None,
            starts: 5,
            max_iterations: o.max_iterations,
            gradient_tol: o.gradient_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    /// Direction `u`; defaults to the solver's initial guess.
    #[serde(default)]
    pub u: Option<InitialSpec>,
    pub t: TGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum TGrid {
    Points(Vec<f64>),
    Range(TRange),
}

/// `points` values from `from` to `to`, linearly or logarithmically spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl TGrid {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        let pts = match self {
            TGrid::Points(v) => v.clone(),
            TGrid::Range(TRange { from, to, points, log }) => {
                if *points == 0 {
                    return Err("t grid needs at least one point".into());
                }
                if *log && !(*from > 0.0 && *to > 0.0) {
                    return Err("log-spaced t grid needs positive end points".into());
                }
                let n = *points;
                (0..n)
                    .map(|i| {
                        let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        if *log {
                            (from.ln() + s * (to.ln() - from.ln())).exp()
                        } else {
                            from + s * (to - from)
                        }
                    })
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err("t grid is empty".into());
        }
        if pts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err("t values must be finite and nonnegative".into());
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum PlanSpec {
    Translated,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DistinctSpec {
    pub period: usize,
    #[serde(default = "five")]
    pub starts: usize,
    /// Orbit identification threshold; default `1e−4 · ‖u*‖`; `"inf"` merges
    /// everything.
    #[serde(default)]
    pub orbit_tol: Option<Threshold>,
    #[serde(default)]
    pub sign_companions: bool,
    #[serde(default = "translated")]
    pub plan: PlanSpec,
}

/// A nonnegative number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Named(Infinity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Infinity {
    Inf,
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Value(v) => v,
            Threshold::Named(Infinity::Inf) => f64::INFINITY,
        }
    }
}

fn five() -> usize {
    5
}

fn translated() -> PlanSpec {
    PlanSpec::Translated
}

impl DistinctSpec {
    pub fn options(&self) -> DistinctOptions {
        DistinctOptions {
            period: self.period,
            n_starts: self.starts,
            orbit_tol: self.orbit_tol.map(Threshold::value),
            sign_companions: self.sign_companions,
            plan: match self.plan {
                PlanSpec::Translated => StartPlan::Translated,
                PlanSpec::Mixed => StartPlan::Mixed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Box or torus side; values must be positive integers.
    Side,
    /// Exponent of the power nonlinearity.
    Q,
    /// Constant potential value, or the limit of a decaying potential.
    Potential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Also estimate the Sobolev constant of each domain.
    #[serde(default = "yes")]
    pub sobolev: bool,
}

fn yes() -> bool {
    true
}

/// 1-based line and column of the first occurrence of `"key"` in `text`.
fn locate(text: &str, key: &str) -> Option<(usize, usize)> {
    let needle = format!("\"{key}\"");
    let offset = text.find(&needle)?;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

/// A loaded configuration together with its source text, for anchoring
/// semantic errors to a position in the file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub path: PathBuf,
    text: String,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(path, text)
    }

    pub fn parse(path: &Path, text: String) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            CliError::Config(format!("{}:{}:{}: {msg}", path.display(), e.line(), e.column()))
        })?;
        Ok(Self {
            config,
            path: path.to_path_buf(),
            text,
        })
    }

    /// A config error anchored at `key` when it appears in the file.
    pub fn error_at(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match locate(&self.text, key) {
            Some((line, col)) => CliError::Config(format!("{}:{line}:{col}: {key}: {msg}", self.path.display())),
            None => CliError::Config(format!("{}: {key}: {msg}", self.path.display())),
        }
    }

    fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    pub fn domain(&self, spec: &DomainSpec) -> Result<Domain, CliError> {
        Domain::new(spec.dim, spec.side, spec.boundary, spec.generators.clone()).map_err(|e| self.error_at("domain", e))
    }

    pub fn problem(&self, spec: &ProblemSpec) -> Result<Problem, CliError> {
        let domain = self.domain(&spec.domain)?;
        Problem::new(domain, spec.potential.clone(), spec.nonlinearity.clone(), spec.p).map_err(|e| {
            use nehari_core::Error::*;
            let key = match e {
                InvalidExponent(_) => "p",
                InvalidModel(ref m) if m.contains("weight") => "nonlinearity",
                _ => "potential",
            };
            self.error_at(key, e)
        })
    }

    pub fn initial_guess(&self, spec: &InitialSpec, domain: &Domain) -> Result<InitialGuess, CliError> {
        Ok(match spec {
            InitialSpec::Bump { center, width, height } => InitialGuess::Bump {
                center: center.clone(),
                width: *width,
                height: *height,
            },
            InitialSpec::Random => InitialGuess::Random,
            InitialSpec::Values { values } => InitialGuess::Values(GridFunction::new(values.clone())),
            InitialSpec::File { path } => {
                let full = self.base_dir().join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| self.error_at("path", format!("cannot read {}: {e}", full.display())))?;
                let u = GridFunction::from_csv(domain, &text)
                    .map_err(|e| self.error_at("path", format!("{}: {e}", full.display())))?;
                InitialGuess::Values(u)
            }
        })
    }

    pub fn solver(&self, spec: &SolverSpec, domain: &Domain, seed: u64) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig {
            max_iterations: spec.max_iterations,
            residual_tol: spec.residual_tol,
            fiber_tol: spec.fiber_tol,
            initial: self.initial_guess(&spec.initial, domain)?,
            step: StepRule {
                initial: spec.step.initial,
                backtrack: spec.step.backtrack,
                armijo: spec.step.armijo,
                min_step: spec.step.min_step,
            },
            seed,
            override_hypotheses: spec.override_hypotheses,
            negative_part_exponent: spec.negative_part_exponent,
        };
        cfg.validate().map_err(|e| self.error_at("solver", e))?;
        Ok(cfg)
    }
}

/// The JSON Schema of [`RunConfig`].
pub fn schema() -> schemars::schema::RootSchema {
    schemars::schema_for!(RunConfig)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
  "problem": {
    "domain": { "dim": 1, "side": 1, "boundary": "dirichlet" },
    "nonlinearity": { "family": "power", "q": 4 },
    "p": 2
  }
}"#;

    #[test]
    fn defaults_fill_in() {
        let l = Loaded::parse(Path::new("c.json"), TINY.into()).unwrap();
        assert_eq!(l.config.seed, 0);
        assert_eq!(l.config.problem.potential, Potential::default());
        assert_eq!(l.config.solver, SolverSpec::default());
        assert_eq!(l.config.verify, Tolerances::default());
    }

    #[test]
    fn unknown_key_is_line_anchored() {
        let text = TINY.replace("\"p\": 2", "\"p\": 2,\n    \"pp\": 3");
        let err = Loaded::parse(Path::new("c.json"), text).unwrap_err().to_string();
        assert!(err.starts_with("c.json:6:"), "{err}");
        assert!(err.contains("unknown field `pp`"), "{err}");
    }

    #[test]
    fn semantic_errors_point_at_their_key() {
        let text = TINY.replace("\"side\": 1", "\"side\": 0");
        let l = Loaded::parse(Path::new("c.json"), text).unwrap();
        let err = l.problem(&l.config.problem).unwrap_err().to_string();
        assert!(err.starts_with("c.json:3:5: domain:"), "{err}");
    }

    #[test]
    fn t_grids() {
        assert_eq!(TGrid::Points(vec![1.0]).points().unwrap(), vec![1.0]);
        let g = TGrid::Range(TRange {
            from: 0.01,
            to: 100.0,
            points: 5,
            log: true,
        })
        .points()
        .unwrap();
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!(TGrid::Points(vec![]).points().is_err());
        assert!(TGrid::Range(TRange {
            from: 0.0,
            to: 1.0,
            points: 3,
            log: true
        })
        .points()
        .is_err());
    }
}
