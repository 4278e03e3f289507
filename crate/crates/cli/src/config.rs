//! Run configuration: a single JSON document, unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};

use dampwave::{
    bump_profile, DensityProfile, Model64, Nonlinearity, RadialField64, RadialGrid64, SearchRanges,
    SolverConfig64, Theorem, Tolerances,
};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            Self::Parse(e) => write!(f, "malformed config: {e}"),
            Self::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<dampwave::Error> for ConfigError {
    fn from(e: dampwave::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_dim: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "N")]
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    /// `(1 - (r/R0)^2)_+^power`.
    Bump {
        #[serde(rename = "R0")]
        support: f64,
        power: f64,
    },
    /// Piecewise linear through `(r, u)`, zero beyond the last abscissa.
    Table { r: Vec<f64>, u: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    pub profile: ProfileConfig,
    pub lambda: f64,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TheoremChoice {
    Low,
    High,
}

impl TryFrom<u8> for TheoremChoice {
    type Error = String;

    fn try_from(x: u8) -> Result<Self, String> {
        match x {
            23 => Ok(Self::Low),
            25 => Ok(Self::High),
            other => Err(format!("theorem must be 23 or 25, got {other}")),
        }
    }
}

impl From<TheoremChoice> for u8 {
    fn from(t: TheoremChoice) -> u8 {
        match t {
            TheoremChoice::Low => 23,
            TheoremChoice::High => 25,
        }
    }
}

impl From<TheoremChoice> for Theorem {
    fn from(t: TheoremChoice) -> Theorem {
        match t {
            TheoremChoice::Low => Theorem::LowEnergy23,
            TheoremChoice::High => Theorem::HighEnergy25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    pub theorem: TheoremChoice,
    #[serde(default)]
    pub tolerances: Tolerances<f64>,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            theorem: TheoremChoice::Low,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda: Vec<f64>,
    #[serde(default = "zero_kappa")]
    pub kappa: Vec<f64>,
}

fn zero_kappa() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Largest accepted relative deviation of the finite-difference energy check.
    pub fd_tol: f64,
    pub cs_tol: f64,
    pub concavity_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            fd_tol: 1e-3,
            cs_tol: dampwave::oracle::DEFAULT_TOL_CS,
            concavity_tol: dampwave::oracle::DEFAULT_TOL_CONCAVITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub density: DensityProfile<f64>,
    pub nonlinearity: Nonlinearity<f64>,
    #[serde(default)]
    pub mass: f64,
    pub datum: DatumConfig,
    #[serde(default)]
    pub solver: SolverConfig64,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchRanges<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Sweep worker threads; defaults to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated configuration together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub model: Model64,
    pub profile: RadialField64,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn u0(&self) -> RadialField64 {
        self.profile.scaled(self.config.datum.lambda)
    }

    pub fn u1(&self) -> RadialField64 {
        self.profile.scaled(self.config.datum.kappa)
    }

    pub fn with_datum(&self, lambda: f64, kappa: f64) -> Resolved {
        let mut next = self.clone();
        next.config.datum.lambda = lambda;
        next.config.datum.kappa = kappa;
        next
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    /// Re-validates every component and builds the model and datum profile.
    pub fn resolve(self) -> Result<Resolved, ConfigError> {
        let grid = RadialGrid64::new(self.grid.n_dim, self.grid.radius, self.grid.cells)?;
        self.density.validate()?;
        self.nonlinearity.check_exponent(self.grid.n_dim)?;
        if !self.mass.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "mass must be finite, got {}",
                self.mass
            )));
        }
        self.solver.validate()?;
        let datum = &self.datum;
        if !datum.lambda.is_finite() || !datum.kappa.is_finite() {
            return Err(ConfigError::Invalid(
                "lambda and kappa must be finite".into(),
            ));
        }
        if let Some(search) = &self.search {
            search.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.lambda.is_empty() || sweep.kappa.is_empty() {
                return Err(ConfigError::Invalid(
                    "sweep needs at least one lambda and kappa".into(),
                ));
            }
            if sweep
                .lambda
                .iter()
                .chain(&sweep.kappa)
                .any(|x| !x.is_finite())
            {
                return Err(ConfigError::Invalid("sweep values must be finite".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(ConfigError::Invalid("workers must be positive".into()));
        }
        let profile = build_profile(&grid, &datum.profile)?;
        let model = Model64::new(grid, self.density, self.nonlinearity, self.mass)?;
        let warnings = self.solver.cfl_warning(&model).into_iter().collect();
        Ok(Resolved {
            config: self,
            model,
            profile,
            warnings,
        })
    }
}

fn build_profile(
    grid: &RadialGrid64,
    profile: &ProfileConfig,
) -> Result<RadialField64, ConfigError> {
    match profile {
        ProfileConfig::Bump { support, power } => {
            if !(*support > 0.0 && support.is_finite() && *power > 0.0 && power.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "bump needs positive R0 and power, got {support} and {power}"
                )));
            }
            Ok(bump_profile(grid, *support, *power))
        }
        ProfileConfig::Table { r, u } => {
            let ok = r.len() >= 2
                && r.len() == u.len()
                && r[0] == 0.0
                && r.windows(2).all(|w| w[1] > w[0])
                && r.iter().chain(u).all(|x| x.is_finite());
            if !ok {
                return Err(ConfigError::Invalid(
                    "table needs matching r and u, r strictly increasing from 0".into(),
                ));
            }
            Ok(RadialField64::dirichlet_from_fn(grid, |x| {
                interpolate(r, u, x)
            }))
        }
    }
}

fn interpolate(r: &[f64], u: &[f64], x: f64) -> f64 {
    if x > r[r.len() - 1] {
        return 0.0;
    }
    let k = r.partition_point(|&ri| ri <= x).clamp(1, r.len() - 1);
    let theta = (x - r[k - 1]) / (r[k] - r[k - 1]);
    u[k - 1] + theta * (u[k] - u[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "grid": {"n_dim": 3, "R": 10.0, "N": 64},
        "density": {"kind": "inverse_power", "rho0": 1.0, "s": 2.0},
        "nonlinearity": {"p": 2.0, "c": 1.0},
        "datum": {"profile": {"kind": "bump", "R0": 4.0, "power": 2.0}, "lambda": 1.0}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.mass, 0.0);
        assert_eq!(cfg.datum.kappa, 0.0);
        assert_eq!(cfg.solver, SolverConfig64::default());
        assert_eq!(cfg.criteria.theorem, TheoremChoice::Low);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json]);
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.profile.len(), 65);
        assert_eq!(resolved.profile[0], 1.0);
    }

    #[test]
    fn unknown_keys_fail() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["grid"]["extra"] = 1.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["solver"] = serde_json::json!({"dt": 1.0});
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["nonlinearity"]["q"] = 1.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["density"]["power"] = 1.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn theorem_codes() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["criteria"] = serde_json::json!({"theorem": 25});
        let cfg = RunConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.criteria.theorem, TheoremChoice::High);
        v["criteria"] = serde_json::json!({"theorem": 24});
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn critical_exponent_is_invalid() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["nonlinearity"]["p"] = 3.0.into();
        let cfg = RunConfig::from_json(&v.to_string()).unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn round_trip_preserves_config() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn table_profile_interpolates() {
        assert_eq!(interpolate(&[0.0, 1.0, 2.0], &[2.0, 1.0, 0.0], 0.5), 1.5);
        assert_eq!(interpolate(&[0.0, 1.0, 2.0], &[2.0, 1.0, 0.0], 3.0), 0.0);
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["datum"]["profile"] =
            serde_json::json!({"kind": "table", "r": [0.0, 5.0], "u": [1.0, 0.0]});
        let resolved = RunConfig::from_json(&v.to_string())
            .unwrap()
            .resolve()
            .unwrap();
        assert!((resolved.profile[32] - 0.0).abs() < 1e-15);
        assert!((resolved.profile[16] - 0.5).abs() < 1e-15);
        v["datum"]["profile"] =
            serde_json::json!({"kind": "table", "r": [1.0, 0.0], "u": [1.0, 0.0]});
        assert!(RunConfig::from_json(&v.to_string())
            .unwrap()
            .resolve()
            .is_err());
    }
}
