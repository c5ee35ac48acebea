//! JSON configuration documents.
//!
//! Every rate and frequency is written as an ordinary frequency `f` in Hz
//! and used internally as the angular value `2 pi f` in rad/s. Temperatures
//! are in kelvin. Fields left out take the reference values.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{angular, ordinary};
use crate::cumulant::DEFAULT_SEED_CORRELATION;
use crate::error::{Error, Result};
use crate::model::{Model, PhysicalParams, Variant, DEFAULT_TUNNELING_PER_GAMMA2};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParam {
    T1,
    T2,
    NStructures,
}

impl AxisParam {
    /// CSV column name, with the unit.
    pub fn column(&self) -> &'static str {
        match self {
            AxisParam::T1 => "t1_k",
            AxisParam::T2 => "t2_k",
            AxisParam::NStructures => "n_structures",
        }
    }

    /// Sets this parameter on `p`. Structure counts are rounded.
    pub fn apply(&self, p: &mut PhysicalParams, value: f64) {
        match self {
            AxisParam::T1 => p.t1 = value,
            AxisParam::T2 => p.t2 = value,
            AxisParam::NStructures => p.n_structures = value.round().max(1.0) as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub parameter: AxisParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn new(parameter: AxisParam, min: f64, max: f64, points: usize, spacing: Spacing) -> Self {
        AxisSpec {
            parameter,
            min,
            max,
            points,
            spacing,
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.points < 2 {
            return Err(Error::config(&format!("{field}.points"), "must be >= 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::config(
                &format!("{field}.max"),
                "bounds must be finite with min < max",
            ));
        }
        let floor = match self.parameter {
            AxisParam::NStructures => 1.0,
            _ => 0.0,
        };
        if self.min < floor || (self.spacing == Spacing::Log && self.min <= 0.0) {
            return Err(Error::config(
                &format!("{field}.min"),
                format!("must be >= {floor} (and > 0 for log spacing)"),
            ));
        }
        Ok(())
    }

    /// Grid values, exact at both ends.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == n - 1 {
                    return self.max;
                }
                let s = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * s,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * s).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    PhotonNumber,
    Linewidth,
    OccupationRatio,
    Thresholds,
    SpectrumAtPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tunneling {
    Real(f64),
    /// `[re, im]`.
    Complex([f64; 2]),
}

impl Tunneling {
    fn hz(&self) -> Complex64 {
        match *self {
            Tunneling::Real(x) => Complex64::new(x, 0.0),
            Tunneling::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Standard,
    AbsorptiveInjection,
}

/// Model parameters as written in the document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub kappa_hz: Option<f64>,
    pub g_hz: Option<f64>,
    pub delta_u_hz: Option<f64>,
    pub gamma_hz: Option<[f64; 4]>,
    pub omega_hz: Option<[f64; 4]>,
    pub j1_hz: Option<Tunneling>,
    pub j2_hz: Option<Tunneling>,
    pub n_structures: Option<u64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub variant: Option<VariantName>,
    pub omega_u_shift_hz: Option<f64>,
}

impl ParamsSection {
    /// Resolves the section against the reference set. `force_variant`
    /// selects the absorptive-injection set regardless of `variant`.
    pub fn resolve(&self, force_variant: bool) -> Result<PhysicalParams> {
        let variant = if force_variant {
            Variant::AbsorptiveInjection
        } else {
            match self.variant {
                Some(VariantName::AbsorptiveInjection) => Variant::AbsorptiveInjection,
                _ => Variant::Standard,
            }
        };
        let t1 = self.t1.unwrap_or(300.0);
        let t2 = self.t2.unwrap_or(0.1);
        let n = self.n_structures.unwrap_or(10_000_000);
        let mut p = match variant {
            Variant::Standard => PhysicalParams::reference(t1, t2, n),
            Variant::AbsorptiveInjection => PhysicalParams::reference_absorptive(t1, t2, n),
        };
        if let Some(v) = self.kappa_hz {
            p.kappa = angular(v);
        }
        if let Some(v) = self.g_hz {
            p.g = angular(v);
        }
        if let Some(v) = self.delta_u_hz {
            p.delta_u = angular(v);
        }
        if let Some(v) = self.gamma_hz {
            p.gamma = v.map(angular);
        }
        if let Some(v) = self.omega_hz {
            p.omega = v.map(angular);
        }
        if let Some(v) = self.omega_u_shift_hz {
            p.omega_u_shift = angular(v);
        }
        let default_j = Complex64::new(DEFAULT_TUNNELING_PER_GAMMA2 * p.gamma[1], 0.0);
        p.j1 = self
            .j1_hz
            .map(|j| j.hz() * angular(1.0))
            .unwrap_or(default_j);
        p.j2 = self
            .j2_hz
            .map(|j| j.hz() * angular(1.0))
            .unwrap_or(default_j);
        check_params(&p)?;
        Ok(p)
    }
}

/// Runs the model-level checks and reports failures against the document
/// field that carries the value.
pub fn check_params(p: &PhysicalParams) -> Result<()> {
    match Model::new(p.clone()) {
        Ok(_) => Ok(()),
        Err(Error::InvalidParam { field, reason }) => {
            let doc = match field.as_str() {
                "kappa" | "g" | "delta_u" | "j1" | "j2" | "omega_u_shift" => {
                    format!("params.{field}_hz")
                }
                f if f.starts_with("gamma") => "params.gamma_hz".into(),
                f if f.starts_with("omega") => "params.omega_hz".into(),
                f => format!("params.{f}"),
            };
            Err(Error::config(&doc, reason))
        }
        Err(Error::InconsistentLevels { residual }) => Err(Error::config(
            "params.omega_hz",
            format!(
                "level energies do not close (residual {:.3e} Hz)",
                ordinary(residual)
            ),
        )),
        Err(e) => Err(Error::config("params", e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub outputs: Vec<OutputKind>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed_correlation: Option<f64>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: PhysicalParams,
    pub axes: Vec<AxisSpec>,
    pub outputs: Vec<OutputKind>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed_correlation: f64,
}

impl Config {
    pub fn from_json(text: &str, force_variant: bool) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: ConfigDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "document".to_string()
            } else {
                path
            };
            Error::config(&field, e.inner().to_string())
        })?;
        Self::from_document(&doc, force_variant)
    }

    pub fn from_path(path: &Path, force_variant: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text, force_variant)
    }

    pub fn from_document(doc: &ConfigDocument, force_variant: bool) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    doc.schema_version
                ),
            ));
        }
        let params = doc.params.resolve(force_variant)?;
        for (i, a) in doc.axes.iter().enumerate() {
            a.validate(&format!("axes[{i}]"))?;
            if doc.axes[..i].iter().any(|b| b.parameter == a.parameter) {
                return Err(Error::config(
                    &format!("axes[{i}].parameter"),
                    "axis repeated",
                ));
            }
        }
        if doc.workers == Some(0) {
            return Err(Error::config("workers", "must be >= 1"));
        }
        let seed = doc.seed_correlation.unwrap_or(DEFAULT_SEED_CORRELATION);
        if !seed.is_finite() {
            return Err(Error::config("seed_correlation", "must be finite"));
        }
        Ok(Config {
            params,
            axes: doc.axes.clone(),
            outputs: doc.outputs.clone(),
            output: doc.output.clone(),
            workers: doc.workers,
            seed_correlation: seed,
        })
    }

    /// A configuration holding only model parameters.
    pub fn from_params(params: PhysicalParams) -> Self {
        Config {
            params,
            axes: Vec::new(),
            outputs: Vec::new(),
            output: None,
            workers: None,
            seed_correlation: DEFAULT_SEED_CORRELATION,
        }
    }

    /// Checks the sweep-only invariants: one or two axes and at least one
    /// requested output.
    pub fn validate_sweep(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::config(
                "axes",
                format!("a sweep needs 1 or 2 axes, got {}", self.axes.len()),
            ));
        }
        if self.outputs.is_empty() {
            return Err(Error::config(
                "outputs",
                "at least one output must be requested",
            ));
        }
        Ok(())
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}

/// Worker count from the command line, then the environment, then the
/// document, then the machine.
pub fn resolve_workers(
    flag: Option<usize>,
    env: Option<&str>,
    document: Option<usize>,
) -> Result<usize> {
    let chosen =
        match (flag, env) {
            (Some(k), _) => Some(k),
            (None, Some(s)) => Some(s.trim().parse::<usize>().map_err(|e| {
                Error::config("GRADLASE_WORKERS", format!("not a worker count: {e}"))
            })?),
            (None, None) => document,
        };
    match chosen {
        Some(0) => Err(Error::config("workers", "must be >= 1")),
        Some(k) => Ok(k),
        None => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_is_the_reference_set() {
        let c = Config::from_json(r#"{"schema_version": 1}"#, false).unwrap();
        assert_eq!(c.params, PhysicalParams::reference(300.0, 0.1, 10_000_000));
    }

    #[test]
    fn frequencies_are_read_in_hertz() {
        let c = Config::from_json(
            r#"{"schema_version": 1, "params": {"kappa_hz": 1e6, "j1_hz": [1e3, 2e3]}}"#,
            false,
        )
        .unwrap();
        assert!((c.params.kappa - angular(1e6)).abs() < 1e-6);
        assert!((c.params.j1 - Complex64::new(angular(1e3), angular(2e3))).norm() < 1e-9);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"schema_version": 2}"#, "schema_version"),
            (
                r#"{"schema_version": 1, "params": {"kappa_hz": "fast"}}"#,
                "params.kappa_hz",
            ),
            (
                r#"{"schema_version": 1, "params": {"kappa_hz": -1}}"#,
                "params.kappa_hz",
            ),
            (
                r#"{"schema_version": 1, "params": {"omega_hz": [1, 2, 3, 4]}}"#,
                "params.omega_hz",
            ),
            (
                r#"{"schema_version": 1, "axes": [{"parameter": "t1", "min": 1, "max": 2, "points": 1}]}"#,
                "axes[0].points",
            ),
            (
                r#"{"schema_version": 1, "axes": [{"parameter": "t3", "min": 1, "max": 2, "points": 2}]}"#,
                "axes[0].parameter",
            ),
            (r#"{"schema_version": 1, "workers": 0}"#, "workers"),
        ];
        for (text, field) in cases {
            match Config::from_json(text, false) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = Config::from_json(r#"{"schema_version": 1, "params": {"kapa_hz": 1}}"#, false)
            .unwrap_err();
        assert!(e.to_string().contains("kapa_hz"), "{e}");
    }

    #[test]
    fn variant_flag_selects_absorptive_set() {
        let c = Config::from_json(r#"{"schema_version": 1}"#, true).unwrap();
        assert_eq!(c.params.variant, Variant::AbsorptiveInjection);
        assert_eq!(c.params.gamma[2], c.params.gamma[0]);
    }

    #[test]
    fn log_axis_hits_both_ends() {
        let a = AxisSpec::new(AxisParam::T1, 50.0, 400.0, 40, Spacing::Log);
        let v = a.values();
        assert_eq!(v.len(), 40);
        assert_eq!(v[0], 50.0);
        assert_eq!(v[39], 400.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn worker_precedence() {
        assert_eq!(resolve_workers(Some(3), Some("5"), Some(7)).unwrap(), 3);
        assert_eq!(resolve_workers(None, Some("5"), Some(7)).unwrap(), 5);
        assert_eq!(resolve_workers(None, None, Some(7)).unwrap(), 7);
        assert!(resolve_workers(None, Some("many"), None).is_err());
        assert!(resolve_workers(Some(0), None, None).is_err());
    }
}
