//! System specification files.
//!
//! ```json
//! {
//!   "schema": "lkdual-system/1",
//!   "name": "scalar-delay",
//!   "n": 1,
//!   "delays": [1.0],
//!   "matrices": [[[0.0]], [[-1.0]]],
//!   "family": { "parameter": "tau", "delay_scaling": true },
//!   "analysis": { "degree": 2, "tol": 0.001, "lo": 1.0, "hi": 2.0 }
//! }
//! ```
//!
//! `matrices` lists `A₀ … A_K` as arrays of rows. A family either scales
//! all delays so that the largest equals the parameter (`delay_scaling`)
//! or adds `λ · direction[i]` to every `Aᵢ`. Unknown fields are rejected.

use lkdual::dual_lmi::ParameterizedFamily;
use lkdual::operators::DelaySystem;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::CliError;

/// Accepted value of the `schema` field.
pub const SYSTEM_SCHEMA: &str = "lkdual-system/1";

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub schema: String,
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub delays: Vec<f64>,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub analysis: AnalysisDefaults,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// Display name of `λ`, e.g. `"tau"` or `"b"`.
    pub parameter: String,
    #[serde(default)]
    pub delay_scaling: bool,
    #[serde(default)]
    pub direction: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDefaults {
    #[serde(default)]
    pub degree: Option<u32>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

/// A parsed and validated specification plus its source text.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub spec: SystemSpec,
    pub system: DelaySystem,
    pub family: Option<ParameterizedFamily>,
    pub source: String,
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(source: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    source
        .lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |p| p + 1)
}

fn semantic(source: &str, key: &str, msg: impl Into<String>) -> CliError {
    CliError::Spec {
        line: line_of(source, key),
        column: None,
        msg: msg.into(),
    }
}

fn to_matrix(
    source: &str,
    key: &str,
    n: usize,
    rows: &[Vec<f64>],
    label: &str,
) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(semantic(source, key, format!("{label} must be {n}×{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(semantic(
            source,
            key,
            format!("{label} has a non-finite entry"),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

impl LoadedSpec {
    /// Parses and validates spec text.
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let spec: SystemSpec = serde_json::from_str(source).map_err(|e| CliError::Spec {
            line: e.line(),
            column: Some(e.column()),
            msg: e.to_string(),
        })?;
        if spec.schema != SYSTEM_SCHEMA {
            return Err(semantic(
                source,
                "schema",
                format!(
                    "unsupported schema '{}', expected '{SYSTEM_SCHEMA}'",
                    spec.schema
                ),
            ));
        }
        if spec.n == 0 {
            return Err(semantic(source, "n", "n must be positive"));
        }
        if spec.delays.is_empty() {
            return Err(semantic(source, "delays", "at least one delay is required"));
        }
        if spec.delays.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(semantic(
                source,
                "delays",
                "delays must be finite and positive",
            ));
        }
        if spec.delays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(semantic(
                source,
                "delays",
                "delays must be strictly ascending",
            ));
        }
        let k = spec.delays.len();
        if spec.matrices.len() != k + 1 {
            return Err(semantic(
                source,
                "matrices",
                format!(
                    "{} delays need {} matrices A0…A{k}, got {}",
                    k,
                    k + 1,
                    spec.matrices.len()
                ),
            ));
        }
        let a = spec
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| to_matrix(source, "matrices", spec.n, m, &format!("A{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let system = DelaySystem::new(a, &spec.delays)
            .map_err(|e| semantic(source, "matrices", e.to_string()))?;

        let family = match &spec.family {
            None => None,
            Some(f) => Some(match (&f.direction, f.delay_scaling) {
                (Some(_), true) => {
                    return Err(semantic(
                        source,
                        "family",
                        "family needs exactly one of direction or delay_scaling",
                    ))
                }
                (None, false) => {
                    return Err(semantic(
                        source,
                        "family",
                        "family needs exactly one of direction or delay_scaling",
                    ))
                }
                (None, true) => ParameterizedFamily::delay_scaling(system.clone()),
                (Some(dir), false) => {
                    if dir.len() != k + 1 {
                        return Err(semantic(
                            source,
                            "direction",
                            format!("direction needs {} matrices, got {}", k + 1, dir.len()),
                        ));
                    }
                    let d = dir
                        .iter()
                        .enumerate()
                        .map(|(i, m)| {
                            to_matrix(source, "direction", spec.n, m, &format!("direction[{i}]"))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    ParameterizedFamily::matrix(system.clone(), d)
                        .map_err(|e| semantic(source, "direction", e.to_string()))?
                }
            }),
        };

        let an = &spec.analysis;
        if an.epsilon.is_some_and(|e| !(e.is_finite() && e > 0.0)) {
            return Err(semantic(
                source,
                "epsilon",
                "epsilon must be finite and positive",
            ));
        }
        if an.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(semantic(source, "tol", "tol must be finite and positive"));
        }
        Ok(LoadedSpec {
            spec,
            system,
            family,
            source: source.to_string(),
        })
    }

    /// Reads and parses a spec file.
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&source)
    }

    /// The system itself, or the family member at `λ` when given.
    pub fn system_at(&self, lambda: Option<f64>) -> Result<DelaySystem, CliError> {
        match lambda {
            None => Ok(self.system.clone()),
            Some(l) => Ok(self.require_family()?.at(l)?),
        }
    }

    pub fn require_family(&self) -> Result<&ParameterizedFamily, CliError> {
        self.family.as_ref().ok_or_else(|| {
            CliError::Usage("this command needs a spec with a \"family\" section".into())
        })
    }

    pub fn parameter_name(&self) -> Option<&str> {
        self.spec.family.as_ref().map(|f| f.parameter.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "schema": "lkdual-system/1",
  "n": 1,
  "delays": [1.0],
  "matrices": [[[0.0]], [[-1.0]]],
  "family": { "parameter": "tau", "delay_scaling": true }
}"#;

    #[test]
    fn parses_a_minimal_spec() {
        let s = LoadedSpec::parse(GOOD).unwrap();
        assert_eq!(s.system.k(), 1);
        assert!(s.family.is_some());
        assert_eq!(s.system_at(Some(2.0)).unwrap().taus(), &[2.0]);
    }

    #[test]
    fn unknown_field_is_rejected_with_position() {
        let bad = GOOD.replace("\"n\": 1,", "\"n\": 1,\n  \"extra\": true,");
        match LoadedSpec::parse(&bad) {
            Err(CliError::Spec { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn descending_delays_point_at_the_delays_line() {
        let bad = GOOD
            .replace("[1.0]", "[2.0, 1.0]")
            .replace("[[[0.0]], [[-1.0]]]", "[[[0.0]], [[-1.0]], [[0.0]]]");
        match LoadedSpec::parse(&bad) {
            Err(CliError::Spec { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("ascending"));
            }
            other => panic!("expected spec error, got {other:?}"),
        }
    }
}
