//! Declarative run description, loadable from JSON and overridable by flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use subspec::fields::{BoxRegion, FamilySelector, FieldFamily};
use subspec::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Lambda1,
    Modes,
    Metric,
    Holder,
    Calibrate,
    Convergence,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::Lambda1, Task::Modes, Task::Metric, Task::Holder, Task::Calibrate, Task::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Task::Lambda1 => "lambda1",
            Task::Modes => "modes",
            Task::Metric => "metric",
            Task::Holder => "holder",
            Task::Calibrate => "calibrate",
            Task::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| format!("unknown task '{s}' (expected one of lambda1, modes, metric, holder, calibrate, convergence)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `euclidean`, `grushin:β` or `heisenberg`.
    pub family: String,
    /// Ambient dimension; defaults to 2 (3 for Heisenberg).
    pub dim: Option<usize>,
    pub p: f64,
    /// `[a1, b1, a2, b2(, a3, b3)]`; the family's default box when absent.
    #[serde(rename = "box")]
    pub region: Option<Vec<f64>>,
    /// Cells per side. Single-grid tasks use the finest entry.
    pub grid: Vec<usize>,
    pub modes: usize,
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub eps0: f64,
    pub eps_min: f64,
    pub seed: u64,
    pub trials: usize,
    pub radius: usize,
    pub holder_sources: usize,
    pub holder_alphas: Vec<f64>,
    pub calibration_p: Vec<f64>,
    pub calibration_samples: usize,
    pub out: PathBuf,
    pub tasks: Vec<Task>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: "euclidean".into(),
            dim: None,
            p: 2.0,
            region: None,
            grid: vec![64],
            modes: 6,
            tol: None,
            max_iter: 100_000,
            eps0: 1e-1,
            eps_min: 1e-10,
            seed: 0x5EED,
            trials: 0,
            radius: subspec::metric::DEFAULT_RADIUS,
            holder_sources: 16,
            holder_alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            calibration_p: vec![1.2, 1.5, 2.0, 3.0, 4.0, 6.0],
            calibration_samples: subspec::functionals::inequalities::DEFAULT_CALIBRATION_SAMPLES,
            out: PathBuf::from("subspec-out"),
            tasks: vec![Task::Lambda1],
        }
    }
}

fn config_message(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config file: {e}"))
    }

    pub fn family(&self) -> Result<FieldFamily, String> {
        let sel: FamilySelector = self.family.parse().map_err(config_message)?;
        sel.with_dim(self.dim.unwrap_or_else(|| sel.default_dim())).map_err(config_message)
    }

    pub fn box_region(&self, family: &FieldFamily) -> Result<BoxRegion, String> {
        match &self.region {
            None => Ok(family.default_region()),
            Some(v) => {
                let d = family.dim();
                if v.len() != 2 * d {
                    return Err(format!("box needs {} numbers for dimension {d}, got {}", 2 * d, v.len()));
                }
                let lo: Vec<f64> = v.chunks(2).map(|c| c[0]).collect();
                let hi: Vec<f64> = v.chunks(2).map(|c| c[1]).collect();
                BoxRegion::new(&lo, &hi).map_err(config_message)
            }
        }
    }

    pub fn finest(&self) -> usize {
        self.grid.iter().copied().max().unwrap_or(0)
    }

    /// Requested tasks plus their prerequisites, in execution order.
    pub fn plan(&self) -> Vec<Task> {
        let mut t: Vec<Task> = self.tasks.clone();
        if t.contains(&Task::Modes) || t.contains(&Task::Holder) {
            t.push(Task::Lambda1);
        }
        if t.contains(&Task::Holder) {
            t.push(Task::Metric);
        }
        t.sort();
        t.dedup();
        t
    }
}

/// Every reason the configuration cannot run; empty iff it can.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();
    if !(cfg.p.is_finite() && (1.1..=10.0).contains(&cfg.p)) {
        v.push(format!("p ∈ [1.1, 10] (got {})", cfg.p));
    }
    match cfg.family() {
        Err(e) => v.push(e),
        Ok(fam) => {
            if let Err(e) = cfg.box_region(&fam) {
                v.push(e);
            }
        }
    }
    if cfg.grid.is_empty() {
        v.push("at least one resolution is required".into());
    }
    if cfg.grid.iter().any(|&n| n < 2) {
        v.push("N_k ≥ 2".into());
    }
    if cfg.grid.windows(2).any(|w| w[1] <= w[0]) {
        v.push("resolutions must be strictly ascending".into());
    }
    if cfg.modes < 1 {
        v.push("n_max ≥ 1".into());
    }
    if let Some(t) = cfg.tol {
        if !(t.is_finite() && t > 0.0) {
            v.push("tol > 0".into());
        }
    }
    if cfg.max_iter == 0 {
        v.push("max_iter ≥ 1".into());
    }
    if !(cfg.eps_min > 0.0 && cfg.eps0 >= cfg.eps_min && cfg.eps0.is_finite()) {
        v.push("ε₀ ≥ ε_min > 0".into());
    }
    if !(1..=4).contains(&cfg.radius) {
        v.push("stencil radius ∈ {1, …, 4}".into());
    }
    if cfg.holder_sources < subspec::metric::MIN_HOLDER_SOURCES {
        v.push(format!("holder_sources ≥ {}", subspec::metric::MIN_HOLDER_SOURCES));
    }
    if cfg.holder_alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        v.push("Hölder exponents must be finite and ≥ 0".into());
    }
    if cfg.calibration_p.iter().any(|p| !(p.is_finite() && (1.1..=10.0).contains(p))) {
        v.push("calibration exponents ∈ [1.1, 10]".into());
    }
    if cfg.calibration_samples == 0 {
        v.push("calibration_samples ≥ 1".into());
    }
    if cfg.tasks.is_empty() {
        v.push("at least one task is required".into());
    }
    if cfg.out.as_os_str().is_empty() {
        v.push("output directory must be set".into());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert!(validate(&RunConfig::default()).is_empty());
    }

    #[test]
    fn examples_of_violations() {
        let c = RunConfig { grid: vec![1], ..Default::default() };
        assert!(validate(&c).contains(&"N_k ≥ 2".to_string()));
        let c = RunConfig { family: "grushin:0".into(), ..Default::default() };
        assert!(validate(&c).contains(&"β ∈ ℤ⁺".to_string()));
        let c = RunConfig { p: 0.5, ..Default::default() };
        assert_eq!(validate(&c).len(), 1);
        let c = RunConfig { grid: vec![64, 32], ..Default::default() };
        assert!(!validate(&c).is_empty());
        let c = RunConfig { region: Some(vec![0.0, 1.0]), ..Default::default() };
        assert!(!validate(&c).is_empty());
    }

    #[test]
    fn plan_adds_prerequisites_in_order() {
        let c = RunConfig { tasks: vec![Task::Holder, Task::Calibrate], ..Default::default() };
        assert_eq!(c.plan(), vec![Task::Lambda1, Task::Metric, Task::Holder, Task::Calibrate]);
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let c = RunConfig { family: "grushin:2".into(), tasks: vec![Task::Modes], ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        assert!(RunConfig::from_json(r#"{"famly": "euclidean"}"#).is_err());
        let partial = RunConfig::from_json(r#"{"p": 3, "box": [0, 2, 0, 1]}"#).unwrap();
        assert_eq!(partial.p, 3.0);
        assert_eq!(partial.grid, vec![64]);
    }
}
