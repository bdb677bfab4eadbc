//! Scenario configuration schema and typed parameter resolution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{FsConvention, Quadrature};
use crate::dynamics::{Method, TimeGrid};
use crate::error::{Error, Result};
use crate::timefn::ScalarFn;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Example1,
    Example2,
    Example3,
    Custom,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Example1 => "example1",
            ScenarioKind::Example2 => "example2",
            ScenarioKind::Example3 => "example3",
            ScenarioKind::Custom => "custom",
        }
    }
}

/// Switches and thresholds for the per-run invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub picture_check: bool,
    pub bloch_oracle: bool,
    pub snr_quadrature: Quadrature,
    pub mt_quadrature: Quadrature,
    pub fs_convention: FsConvention,
    /// Overlay tolerance; scenario default when absent.
    pub overlay_tol: Option<f64>,
    pub picture_tol: f64,
    pub bloch_tol: f64,
    pub mt_tol: f64,
    pub special_point_tol: f64,
    pub tail_tol: f64,
    pub norm_defect_limit: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            picture_check: true,
            bloch_oracle: true,
            snr_quadrature: Quadrature::EndpointMax,
            mt_quadrature: Quadrature::EndpointMax,
            fs_convention: FsConvention::Factor2,
            overlay_tol: None,
            picture_tol: 1e-9,
            bloch_tol: 1e-8,
            mt_tol: 1e-6,
            special_point_tol: 1e-4,
            tail_tol: 1e-8,
            norm_defect_limit: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    /// Output file stem; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub grid: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub options: RunOptions,
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        Self::from_json_str(&v.to_string())
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.name.as_str())
    }

    /// Structural checks that do not depend on the scenario parameters.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate().map_err(|e| Error::config("grid", e.to_string()))?;
        if let Some(l) = &self.label {
            if l.is_empty() || l.contains(['/', '\\']) || l.starts_with('.') {
                return Err(Error::config("label", "must be a plain, non-empty file stem"));
            }
        }
        for (name, v) in [
            ("tolerances.sigma_floor", self.tolerances.sigma_floor),
            ("tolerances.tight", self.tolerances.tight),
            ("tolerances.h_op", self.tolerances.h_op),
            ("tolerances.norm_budget", self.tolerances.norm_budget),
            ("tolerances.quad", self.tolerances.quad),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, format!("must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Params<'_> {
        Params { map: &self.params }
    }
}

/// Typed view over the parameter map with field-path diagnostics.
pub struct Params<'a> {
    map: &'a BTreeMap<String, Value>,
}

fn path(key: &str) -> String {
    format!("params.{key}")
}

impl<'a> Params<'a> {
    /// Reject names outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::config(path(k), format!("unknown parameter; expected one of {}", allowed.join(", "))));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(Error::config(path(key), format!("expected a finite number, got {v}"))),
            },
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| Error::config(path(key), "missing required parameter"))
    }

    pub fn positive(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = match default {
            Some(d) => self.f64_opt(key)?.unwrap_or(d),
            None => self.f64_req(key)?,
        };
        if v <= 0.0 {
            return Err(Error::config(path(key), format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(x) => Ok(Some(x as usize)),
                None => match v.as_f64() {
                    Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e9 => Ok(Some(x as usize)),
                    _ => Err(Error::config(path(key), format!("expected a non-negative integer, got {v}"))),
                },
            },
        }
    }

    pub fn bool_opt(&self, key: &str) -> Result<Option<bool>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::config(path(key), format!("expected a boolean, got {v}"))),
        }
    }

    /// Whitelisted coefficient function: a number or one of `t`, `t^2`, `cos t`, `sin t`.
    pub fn function(&self, key: &str, default: Option<ScalarFn>) -> Result<ScalarFn> {
        match self.map.get(key) {
            None => default.ok_or_else(|| Error::config(path(key), "missing required parameter")),
            Some(v) => parse_function(v).map_err(|e| Error::config(path(key), e)),
        }
    }

    /// Complex number as `[re, im]` or a bare real.
    pub fn complex(&self, key: &str, default: Option<Complex64>) -> Result<Complex64> {
        match self.map.get(key) {
            None => default.ok_or_else(|| Error::config(path(key), "missing required parameter")),
            Some(v) => parse_complex(v).map_err(|e| Error::config(path(key), e)),
        }
    }
}

pub fn parse_function(v: &Value) -> std::result::Result<ScalarFn, String> {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x.is_finite() => Ok(ScalarFn::Const(x)),
            _ => Err(format!("non-finite constant {n}")),
        },
        Value::String(s) => ScalarFn::parse_selector(s).map_err(|e| e.to_string()),
        other => Err(format!("expected a number or a function selector string, got {other}")),
    }
}

pub fn parse_complex(v: &Value) -> std::result::Result<Complex64, String> {
    match v {
        Value::Number(n) => n.as_f64().filter(|x| x.is_finite()).map(|x| Complex64::new(x, 0.0)).ok_or("non-finite".into()),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) if re.is_finite() && im.is_finite() => Ok(Complex64::new(re, im)),
            _ => Err(format!("expected [re, im] with finite numbers, got {v}")),
        },
        other => Err(format!("expected [re, im], got {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"{
        "name": "example1",
        "params": {"omega0": 1.0, "nu0": 1.0, "a": "t"},
        "grid": {"t0": 0.0, "t1": 5.0, "n_steps": 5000}
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ScenarioConfig::from_json_str(EX1).unwrap();
        assert_eq!(cfg.name, ScenarioKind::Example1);
        assert_eq!(cfg.label(), "example1");
        assert_eq!(cfg.params().f64_req("omega0").unwrap(), 1.0);
        assert_eq!(cfg.params().function("a", None).unwrap(), ScalarFn::T);
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn reports_field_paths() {
        let bad = EX1.replace("\"n_steps\": 5000", "\"n_steps\": \"many\"");
        match ScenarioConfig::from_json_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.n_steps"),
            other => panic!("{other:?}"),
        }
        let typo = EX1.replace("\"grid\"", "\"gird\"");
        assert!(matches!(ScenarioConfig::from_json_str(&typo), Err(Error::Config { .. })));
        let cfg = ScenarioConfig::from_json_str(&EX1.replace("\"omega0\": 1.0, ", "")).unwrap();
        match cfg.params().f64_req("omega0") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "params.omega0"),
            other => panic!("{other:?}"),
        }
        let back = EX1.replace("\"t1\": 5.0", "\"t1\": -1.0");
        assert!(matches!(ScenarioConfig::from_json_str(&back), Err(Error::Config { path, .. }) if path == "grid"));
    }

    #[test]
    fn complex_and_functions() {
        assert_eq!(parse_complex(&serde_json::json!([2.0, 1.0])).unwrap(), Complex64::new(2.0, 1.0));
        assert_eq!(parse_complex(&serde_json::json!(0.5)).unwrap(), Complex64::new(0.5, 0.0));
        assert!(parse_complex(&serde_json::json!([1.0])).is_err());
        assert_eq!(parse_function(&serde_json::json!(3)).unwrap(), ScalarFn::Const(3.0));
        assert!(parse_function(&serde_json::json!("tan t")).is_err());
    }
}
