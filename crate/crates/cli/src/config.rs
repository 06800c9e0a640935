//! JSON schemas of the per-command configs.

use anyhow::{anyhow, Context, Result};
use lclab_core::dynamics::{Diagnostic, Probe};
use lclab_core::hamiltonian::HamiltonianJson;
use lclab_core::{InteractionTerm, Pauli};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use std::path::Path;

/// Parses `text` into `T`, reporting the field path of the first violation.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<(T, Value)> {
    let value: Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let parsed = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("config error at `{path}`: {}", e.into_inner())
    })?;
    Ok((parsed, value))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, Value)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// A single Pauli-string term.
    Pauli(InteractionTerm),
    /// Hermitian part of a Haar-random unitary on `sites`, scaled to unit norm; drawn from `--seed`.
    RandomHermitian { sites: Vec<usize> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBounds {
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub hamiltonian: HamiltonianJson,
    pub operator: OperatorSpec,
    #[serde(default = "default_probe_pauli")]
    pub probe_pauli: Pauli,
    pub t_grid: Vec<f64>,
    pub probe: Probe,
    /// Attach the main bound to every row; requires `alpha > 2D + 1`.
    #[serde(default)]
    pub bounds: Option<ScanBounds>,
}

fn default_probe_pauli() -> Pauli {
    Pauli::Z
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curves {
    pub t_grid: Vec<f64>,
    /// Sample points `ln x = ln(v_bar t) + offset`.
    pub ln_x_offsets: Vec<f64>,
    #[serde(default = "one")]
    pub size_x: f64,
    #[serde(default = "one")]
    pub size_y: f64,
}

impl Default for Curves {
    fn default() -> Self {
        Curves {
            t_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            ln_x_offsets: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            size_x: 1.0,
            size_y: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(rename = "D")]
    pub d: usize,
    pub alpha: f64,
    pub g0: f64,
    #[serde(default = "one")]
    pub g: f64,
    pub gamma: f64,
    #[serde(default)]
    pub k_local: Option<usize>,
    #[serde(default)]
    pub curves: Curves,
    /// Accuracies for the light-cone front `x(delta, t)`, sampled on `curves.t_grid`.
    #[serde(default = "default_deltas")]
    pub delta_grid: Vec<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![1e-1, 1e-3, 1e-6]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummationSpec {
    pub alphas: Vec<f64>,
    pub xi: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dim: usize,
    pub extents: Vec<usize>,
    pub xi_range: Vec<f64>,
    pub r_range: Vec<f64>,
    #[serde(default = "default_summation")]
    pub summation: SummationSpec,
    /// `(xi1, xi2)` for the nesting check and `c` for the two-scale check, both at every site.
    #[serde(default = "default_nesting")]
    pub nesting: (f64, f64),
    #[serde(default = "default_two_scale")]
    pub two_scale: (f64, f64),
}

fn default_summation() -> SummationSpec {
    SummationSpec { alphas: vec![3.0, 4.0, 6.0], xi: 1.0, x0: 1.0 }
}

fn default_nesting() -> (f64, f64) {
    (1.0, 2.0)
}

fn default_two_scale() -> (f64, f64) {
    (1.0, 2.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synthetic {
    pub v: f64,
    pub t_grid: Vec<f64>,
    pub r_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FrontSource {
    /// Path to a `scan.json` artifact, relative to the config file.
    Scan(String),
    /// `exp(-(r - v t))` fixture.
    Synthetic(Synthetic),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontConfig {
    pub source: FrontSource,
    pub delta: f64,
    #[serde(default = "default_diagnostic")]
    pub diagnostic: Diagnostic,
}

fn default_diagnostic() -> Diagnostic {
    Diagnostic::Commutator
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_field_path() {
        let err = parse::<BoundsConfig>(r#"{"D": 1, "alpha": "x", "g0": 1, "gamma": 1}"#).unwrap_err();
        assert!(err.to_string().contains("`alpha`"), "{err}");
        let err = parse::<FrontConfig>(r#"{"source": {"synthetic": {"v": 2, "t_grid": [1], "r_max": 3, "w": 1}}, "delta": 0.5}"#)
            .unwrap_err();
        assert!(err.to_string().contains("source.synthetic"), "{err}");
    }

    #[test]
    fn defaults_fill_in() {
        let (c, _) = parse::<LatticeConfig>(r#"{"dim": 1, "extents": [8], "xi_range": [1], "r_range": [1, 2]}"#).unwrap();
        assert_eq!(c.summation.alphas, vec![3.0, 4.0, 6.0]);
    }
}
