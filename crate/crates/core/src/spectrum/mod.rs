//! The first eigenvalue by constrained descent, upper bounds for higher
//! variational eigenvalues over nested frames, and supporting diagnostics.

mod descent;
mod diagnostics;
pub mod pencil;
mod subspace;

use serde::Serialize;
use std::sync::Arc;

use crate::domain::export::json_float;
use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};

pub use descent::{minimize_lambda1, weak_residual};
pub use diagnostics::{diagnostics, nonpositive_fraction, Diagnostics};
pub use pencil::{lowest_modes, Mode, Workspace};
pub use subspace::{
    build_frames, nested_maxmin, subspace_maxmin, FrameProvenance, MaxMinConfig, MaxMinResult, SubspaceFrame,
    MAX_FRAME_CONDITION,
};

#[derive(Clone)]
pub struct EigenPair {
    pub p: f64,
    pub lambda: f64,
    /// `1 / λ`.
    pub mu: f64,
    /// Normalized to `F = 1` with positive mean.
    pub eigenfunction: GridFunction,
    pub residual: f64,
    pub iterations: usize,
    /// Regularization in effect at the last stage.
    pub epsilon_final: f64,
    /// Quotient after every accepted step at the target exponent.
    pub history: Vec<f64>,
}

impl std::fmt::Debug for EigenPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenPair")
            .field("p", &self.p)
            .field("lambda", &self.lambda)
            .field("residual", &self.residual)
            .field("iterations", &self.iterations)
            .field("epsilon_final", &self.epsilon_final)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Initializer {
    /// Quadratic ground mode, then continuation in `p`.
    Continuation,
    /// `|random|`, seeded.
    Random { seed: u64 },
    Given(GridFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    /// Descent direction is the representative in the `p = 2` energy pairing.
    Energy,
    /// Plain weighted `L²` representative.
    Identity,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// `None`: `1e-8` for `p ≥ 2`, `1e-6` for `p < 2`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub eps0: f64,
    pub eps_min: f64,
    pub p_step: f64,
    pub sufficient_decrease: f64,
    pub initializer: Initializer,
    pub preconditioner: Preconditioner,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: 100_000,
            eps0: 1e-1,
            eps_min: 1e-10,
            p_step: 0.25,
            sufficient_decrease: 1e-4,
            initializer: Initializer::Continuation,
            preconditioner: Preconditioner::Energy,
            seed: 0x5EED,
        }
    }
}

impl SolverConfig {
    pub fn tolerance(&self, p: f64) -> f64 {
        self.tol.unwrap_or(if p >= 2.0 { 1e-8 } else { 1e-6 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tolerance must be positive");
            }
        }
        if !(self.eps0 >= self.eps_min && self.eps_min > 0.0 && self.eps0.is_finite()) {
            return bad("need eps0 ≥ eps_min > 0");
        }
        if !(self.p_step > 0.0) {
            return bad("p_step must be positive");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 0.5) {
            return bad("sufficient decrease constant must lie in (0, 1/2)");
        }
        Ok(())
    }
}

/// `+1` or `−1`, chosen so that `sign · u` has positive mean (ties broken by
/// the first nonzero interior node).
pub(crate) fn sign_of(u: &GridFunction) -> f64 {
    let m = u.mean();
    if m != 0.0 {
        return m.signum();
    }
    let first = u.interior_values().into_iter().find(|&v| v != 0.0).unwrap_or(0.0);
    if first < 0.0 { -1.0 } else { 1.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NotConverged,
}

#[derive(Clone, Debug)]
pub struct SpectrumConfig {
    pub solver: SolverConfig,
    pub maxmin: MaxMinConfig,
    /// Number of nested frames; zero computes the ground state only.
    pub modes: usize,
    /// Random restarts for [`Diagnostics`]; zero skips them.
    pub trials: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), maxmin: MaxMinConfig::default(), modes: 6, trials: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub status: Status,
    pub p: f64,
    pub family: String,
    pub resolution: Vec<usize>,
    /// `λ₁` from the descent; at `p = 2` followed by the exact pencil eigenvalues.
    #[serde(serialize_with = "json_float::vec")]
    pub lambda: Vec<f64>,
    #[serde(serialize_with = "json_float::vec")]
    pub nu_upper: Vec<f64>,
    #[serde(serialize_with = "json_float::vec")]
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    #[serde(serialize_with = "json_float::vec")]
    pub frame_condition: Vec<f64>,
    pub diagnostics: Option<Diagnostics>,
    /// Where a Hölder report for the ground state was written, if anywhere.
    pub holder: Option<String>,
    /// `pairs[0]` is the computed ground state; at `p = 2` the exact pencil
    /// modes follow.
    #[serde(skip)]
    pub pairs: Vec<EigenPair>,
}

impl SpectrumReport {
    pub fn ground(&self) -> &EigenPair {
        &self.pairs[0]
    }
}

impl SpectrumReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Ground state, frame bounds `ν_1..ν_modes` and optional restart diagnostics.
/// A descent that fails to converge yields a report with
/// [`Status::NotConverged`] built from the best iterate.
pub fn compute_spectrum(domain: &Arc<DiscreteDomain>, p: f64, cfg: &SpectrumConfig) -> Result<SpectrumReport> {
    crate::domain::check_exponent(p)?;
    let ws = Workspace::new(domain)?;
    lowest_modes(&ws, cfg.modes.max(1), cfg.solver.seed)?;
    let (ground, status) = match descent::minimize_with(&ws, p, &cfg.solver) {
        Ok(pair) => (pair, Status::Converged),
        Err(Error::NotConverged { best, .. }) => (*best, Status::NotConverged),
        Err(e) => return Err(e),
    };
    let frames = if cfg.modes > 0 {
        subspace::build_frames_with(&ws, cfg.modes, cfg.solver.seed)?
    } else {
        Vec::new()
    };
    let nu = nested_maxmin(&frames, p, &cfg.maxmin)?;
    let diagnostics = if cfg.trials > 0 {
        Some(diagnostics::diagnostics_with(&ws, &ground, cfg.trials, cfg.solver.seed, &cfg.solver)?)
    } else {
        None
    };
    let mut pairs = vec![ground];
    if p == 2.0 {
        for m in lowest_modes(&ws, cfg.modes, cfg.solver.seed)?.into_iter().skip(1) {
            let residual = weak_residual(&m.vector, m.lambda, 2.0, 0.0)?;
            pairs.push(EigenPair {
                p,
                lambda: m.lambda,
                mu: 1.0 / m.lambda,
                eigenfunction: m.vector,
                residual,
                iterations: 0,
                epsilon_final: 0.0,
                history: Vec::new(),
            });
        }
    }
    Ok(SpectrumReport {
        status,
        p,
        family: domain.family().to_string(),
        resolution: domain.resolution().to_vec(),
        lambda: pairs.iter().map(|q| q.lambda).collect(),
        nu_upper: nu.iter().map(|r| r.value).collect(),
        residuals: pairs.iter().map(|q| q.residual).collect(),
        iterations: pairs.iter().map(|q| q.iterations).collect(),
        frame_condition: frames.iter().map(|f| f.condition()).collect(),
        diagnostics,
        holder: None,
        pairs,
    })
}
