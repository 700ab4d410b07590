//! Uniqueness and positivity evidence for a computed ground state.

use serde::Serialize;

use crate::domain::export::json_float;

use super::descent::minimize_with;
use super::pencil::Workspace;
use super::{EigenPair, Initializer, SolverConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub trials: usize,
    pub converged_trials: usize,
    /// `max |λ_i − λ| / λ` over the random restarts.
    #[serde(serialize_with = "json_float::serialize")]
    pub lambda_spread: f64,
    /// `max ‖u_i − u‖_∞ / ‖u‖_∞`, after sign alignment.
    #[serde(serialize_with = "json_float::serialize")]
    pub eigenfunction_discrepancy: f64,
    /// Fraction of interior nodes where the reference eigenfunction is `≤ 0`.
    pub nonpositive_fraction: f64,
    pub positive: bool,
}

pub fn nonpositive_fraction(u: &crate::domain::GridFunction) -> f64 {
    let vals = u.interior_values();
    vals.iter().filter(|&&v| v <= 0.0).count() as f64 / vals.len() as f64
}

pub(crate) fn diagnostics_with(
    ws: &Workspace,
    reference: &EigenPair,
    trials: usize,
    base_seed: u64,
    cfg: &SolverConfig,
) -> Result<Diagnostics> {
    let p = reference.p;
    let runs = crate::exec::map_jobs(trials, |i| {
        let c = SolverConfig {
            initializer: Initializer::Random { seed: base_seed.wrapping_add(i as u64) },
            ..cfg.clone()
        };
        match minimize_with(ws, p, &c) {
            Ok(pair) => Ok((pair, true)),
            Err(Error::NotConverged { best, .. }) => Ok((*best, false)),
            Err(e) => Err(e),
        }
    });
    let u = &reference.eigenfunction;
    let scale = u.max_abs();
    let mut spread = 0f64;
    let mut disc = 0f64;
    let mut converged = 0;
    for r in runs {
        let (pair, ok) = r?;
        converged += ok as usize;
        spread = spread.max((pair.lambda - reference.lambda).abs() / reference.lambda);
        let v = &pair.eigenfunction;
        let v = if v.dot(u) < 0.0 { v.scaled(-1.0) } else { v.clone() };
        disc = disc.max((&v - u).max_abs() / scale);
    }
    let frac = nonpositive_fraction(u);
    Ok(Diagnostics {
        trials,
        converged_trials: converged,
        lambda_spread: spread,
        eigenfunction_discrepancy: disc,
        nonpositive_fraction: frac,
        positive: frac == 0.0,
    })
}

/// Reruns the descent from `trials` random positive starts and compares with
/// `reference`.
pub fn diagnostics(reference: &EigenPair, trials: usize, base_seed: u64, cfg: &SolverConfig) -> Result<Diagnostics> {
    let ws = Workspace::new(reference.eigenfunction.domain())?;
    diagnostics_with(&ws, reference, trials, base_seed, cfg)
}
