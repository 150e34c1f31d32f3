//! Problem files: a TOML description of domain, mesh, curvature, boundary
//! data, solver options and the post-processing to run, plus sweep grids over
//! dotted keys of that file.
//!
//! ```toml
//! [domain]
//! alpha = "pi/2"
//! delta_star = 1.0
//!
//! [mesh]
//! h_max = 0.05
//!
//! [curvature]
//! kind = "constant"
//! h = -0.5
//!
//! [boundary.side_plus]
//! type = "capillary"
//! gamma = { kind = "constant", value = "pi/2" }
//! ```

use crate::geometry::{Point, WedgeDomain};
use crate::mesh::{generate_mesh, Mesh, MeshError};
use crate::solver::{BoundarySpec, MeanCurvatureSpec, SolverOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{}{message}", line.map_or(String::new(), |l| format!("line {l}: ")))]
    Parse { line: Option<usize>, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("sweep: {0}")]
    Sweep(String),
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h_max: f64,
    #[serde(default = "default_grading")]
    pub grading: f64,
}

fn default_grading() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub rays: usize,
    /// Dyadic radii `(delta*/4) 2^-k`, `k < levels`.
    pub levels: usize,
    /// Classification tolerance; the numerical default when absent.
    pub tol: Option<f64>,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { rays: 64, levels: 7, tol: None }
    }
}

/// Corner conditions to report alongside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsConfig {
    #[serde(deserialize_with = "crate::angle::deserialize")]
    pub gamma2: f64,
    #[serde(default, deserialize_with = "crate::angle::deserialize_opt")]
    pub lambda1: Option<f64>,
    #[serde(default, deserialize_with = "crate::angle::deserialize_opt")]
    pub lambda2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichConfig {
    #[serde(deserialize_with = "crate::angle::deserialize")]
    pub mu: f64,
    pub delta: f64,
    #[serde(default)]
    pub w: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the problem file, e.g. `boundary.side_minus.gamma.value`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: WedgeDomain,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub curvature: MeanCurvatureSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub radial: RadialConfig,
    #[serde(default)]
    pub conditions: Option<ConditionsConfig>,
    #[serde(default)]
    pub sandwich: Option<SandwichConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> ConfigError {
    ConfigError::Parse { line: e.span().map(|s| line_of(text, s.start)), message: e.message().to_string() }
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ProblemConfig = toml::from_str(text).map_err(|e| parse_error(text, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.mesh.h_max > 0.0 && self.mesh.h_max.is_finite()) {
            return Err(invalid("mesh.h_max", "must be positive"));
        }
        if !(self.mesh.grading >= 0.0 && self.mesh.grading.is_finite()) {
            return Err(invalid("mesh.grading", "must be >= 0"));
        }
        if self.radial.rays < 2 {
            return Err(invalid("radial.rays", "need at least 2 rays"));
        }
        if self.radial.levels < 4 {
            return Err(invalid("radial.levels", "the limit fit needs at least 4 radii"));
        }
        if let Some(tol) = self.radial.tol {
            if !(tol > 0.0) {
                return Err(invalid("radial.tol", "must be positive"));
            }
        }
        if let Some(c) = &self.conditions {
            if c.lambda1.is_some() != c.lambda2.is_some() {
                return Err(invalid("conditions.lambda1", "lambda1 and lambda2 go together"));
            }
        }
        if let Some(s) = &self.sandwich {
            if !(s.delta > 0.0 && s.delta < 1.0) {
                return Err(invalid("sandwich.delta", "must lie in (0, 1)"));
            }
            if !(s.mu > 0.0) {
                return Err(invalid("sandwich.mu", "must be positive"));
            }
        }
        if let Some(s) = &self.sweep {
            check_axes(&s.axes)?;
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh, MeshError> {
        generate_mesh(&self.domain, self.mesh.h_max, self.mesh.grading)
    }
}

fn check_axes(axes: &[SweepAxis]) -> Result<(), ConfigError> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(ConfigError::Sweep(format!("need one or two axes, got {}", axes.len())));
    }
    for a in axes {
        if a.values.is_empty() {
            return Err(ConfigError::Sweep(format!("empty value list for `{}`", a.key)));
        }
        if a.key.split('.').any(str::is_empty) {
            return Err(ConfigError::Sweep(format!("malformed key `{}`", a.key)));
        }
    }
    Ok(())
}

/// One grid point of a sweep: the assigned values and the resulting problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub assignments: Vec<(String, toml::Value)>,
    pub config: Result<ProblemConfig, ConfigError>,
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("keys are non-empty");
    let mut t = table;
    for p in parents {
        t = t
            .get_mut(*p)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| ConfigError::Sweep(format!("`{key}`: no table `{p}` in the problem file")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Expands the sweep of `text` (or `sweep`, if given) into its grid points in
/// row-major order. Invalid grid points are returned as errors, not dropped.
pub fn expand_sweep(text: &str, sweep: Option<&SweepConfig>) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut base: toml::Table = text.parse().map_err(|e| parse_error(text, e))?;
    let from_file = match base.remove("sweep") {
        Some(v) => Some(v.try_into::<SweepConfig>().map_err(|e| ConfigError::Sweep(e.message().to_string()))?),
        None => None,
    };
    let sweep = sweep.cloned().or(from_file).ok_or_else(|| ConfigError::Sweep("no [sweep] axes given".into()))?;
    check_axes(&sweep.axes)?;
    let mut grid: Vec<Vec<(String, toml::Value)>> = vec![vec![]];
    for axis in &sweep.axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    grid.into_iter()
        .map(|assignments| {
            let mut t = base.clone();
            for (k, v) in &assignments {
                set_path(&mut t, k, v.clone())?;
            }
            let text = toml::to_string(&t).map_err(|e| ConfigError::Sweep(e.to_string()))?;
            Ok(SweepPoint { assignments, config: ProblemConfig::from_toml(&text) })
        })
        .collect()
}

/// Display form of a sweep value: strings unquoted, numbers as written.
pub fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
