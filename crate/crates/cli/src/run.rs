//! Task execution and artifact writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use subspec::domain::export::{write_csv, write_pgm};
use subspec::functionals::inequalities::{calibrate_row, calibration_csv_header, calibration_csv_line};
use subspec::metric::{build_moves, cc_distance, cc_distances, holder_report, sample_sources, MoveSet};
use subspec::spectrum::{compute_spectrum, minimize_lambda1, MaxMinConfig, SolverConfig, SpectrumConfig, Status};
use subspec::{exec, DiscreteDomain, Error};

use crate::config::{validate, RunConfig, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug)]
pub enum RunError {
    Config(Vec<String>),
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Failed(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(v) => {
                writeln!(f, "invalid configuration:")?;
                for m in v {
                    writeln!(f, "  - {m}")?;
                }
                Ok(())
            }
            RunError::Failed(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => RunError::Config(vec![m]),
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Failed(e.to_string())
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// False when any solve stopped at its iteration budget.
    pub converged: bool,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

pub fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        eps0: cfg.eps0,
        eps_min: cfg.eps_min,
        seed: cfg.seed,
        ..SolverConfig::default()
    }
}

fn domain_at(cfg: &RunConfig, n: usize) -> Result<Arc<DiscreteDomain>, RunError> {
    let family = cfg.family().map_err(|m| RunError::Config(vec![m]))?;
    let region = cfg.box_region(&family).map_err(|m| RunError::Config(vec![m]))?;
    let d = family.dim();
    Ok(DiscreteDomain::new(family, region, &vec![n; d])?)
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: &'a mut Outcome,
}

impl Writer<'_> {
    fn create(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.outcome.artifacts.push(path);
        Ok(())
    }
}

/// Validate, then execute the task plan. Nothing is written when validation
/// fails or the domain cannot be built.
pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let violations = validate(cfg);
    if !violations.is_empty() {
        return Err(RunError::Config(violations));
    }
    let plan = cfg.plan();
    let finest = domain_at(cfg, cfg.finest())?;
    let coarse: Vec<Arc<DiscreteDomain>> = if plan.contains(&Task::Convergence) {
        cfg.grid.iter().map(|&n| domain_at(cfg, n)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    fs::create_dir_all(&cfg.out)?;
    let mut outcome = Outcome { converged: true, ..Outcome::default() };
    let mut w = Writer { dir: &cfg.out, outcome: &mut outcome };
    let solver = solver_config(cfg);
    let mut report = None;
    let mut moves: Option<MoveSet> = None;

    for task in plan {
        match task {
            Task::Lambda1 => {
                let scfg = SpectrumConfig {
                    solver: solver.clone(),
                    maxmin: MaxMinConfig { seed: cfg.seed, ..MaxMinConfig::default() },
                    modes: if cfg.plan().contains(&Task::Modes) { cfg.modes } else { 0 },
                    trials: cfg.trials,
                };
                let r = compute_spectrum(&finest, cfg.p, &scfg)?;
                if r.status == Status::NotConverged {
                    w.outcome.converged = false;
                }
                let g = r.ground();
                w.outcome.summary.push(format!(
                    "lambda1 = {:.12e} (residual {:.3e}, {} iterations, {:?})",
                    g.lambda, g.residual, g.iterations, r.status
                ));
                w.create("eigenfunction.csv", |f| write_csv(&g.eigenfunction, f))?;
                w.create("eigenfunction.pgm", |f| write_pgm(&finest, g.eigenfunction.values(), f))?;
                report = Some(r);
            }
            Task::Modes => {
                let r = report.as_ref().expect("lambda1 precedes modes");
                for (k, nu) in r.nu_upper.iter().enumerate() {
                    w.outcome.summary.push(format!("nu_{} <= {nu:.12e}", k + 1));
                }
                for (k, pair) in r.pairs.iter().enumerate().skip(1) {
                    w.create(&format!("mode_{}.csv", k + 1), |f| write_csv(&pair.eigenfunction, f))?;
                }
            }
            Task::Metric => {
                let m = build_moves(&finest, cfg.radius)?;
                let centre: Vec<f64> = (0..finest.dim())
                    .map(|k| 0.5 * (finest.region().lo[k] + finest.region().hi[k]))
                    .collect();
                let field = cc_distance(&m, finest.nearest_node(&centre))?;
                w.outcome.summary.push(format!(
                    "metric: {} moves, {} unreachable nodes from the centre",
                    m.len(),
                    field.unreachable()
                ));
                w.create("distance.csv", |f| field.write_csv(f))?;
                moves = Some(m);
            }
            Task::Holder => {
                let m = moves.as_ref().expect("metric precedes holder");
                let r = report.as_mut().expect("lambda1 precedes holder");
                let sources = sample_sources(&finest, cfg.holder_sources);
                let dists = cc_distances(m, &sources)?;
                let h = holder_report(&r.ground().eigenfunction, &dists, &cfg.holder_alphas)?;
                w.create("holder.json", |f| writeln!(f, "{}", h.to_json()))?;
                r.holder = Some("holder.json".into());
            }
            Task::Calibrate => {
                let rows = exec::map_jobs(cfg.calibration_p.len(), |k| {
                    calibrate_row(cfg.calibration_p[k], cfg.calibration_samples, cfg.seed)
                });
                w.create("calibration.csv", |f| {
                    writeln!(f, "{}", calibration_csv_header())?;
                    for row in &rows {
                        writeln!(f, "{}", calibration_csv_line(row))?;
                    }
                    Ok(())
                })?;
            }
            Task::Convergence => {
                let cells = exec::map_jobs(coarse.len(), |k| match minimize_lambda1(&coarse[k], cfg.p, &solver) {
                    Ok(pair) => Ok((pair, true)),
                    Err(Error::NotConverged { best, .. }) => Ok((*best, false)),
                    Err(e) => Err(e),
                });
                let mut rows = Vec::with_capacity(cells.len());
                for (n, cell) in cfg.grid.iter().zip(cells) {
                    let (pair, ok) = cell?;
                    w.outcome.converged &= ok;
                    rows.push(format!("{n},{:e},{:e},{}", pair.lambda, pair.residual, pair.iterations));
                }
                w.create("convergence.csv", |f| {
                    writeln!(f, "N,lambda1,residual,iters")?;
                    for row in &rows {
                        writeln!(f, "{row}")?;
                    }
                    Ok(())
                })?;
            }
        }
    }
    if let Some(r) = &report {
        w.create("spectrum.json", |f| writeln!(f, "{}", r.to_json()))?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dof_run_writes_artifacts() {
        let dir = std::env::temp_dir().join(format!("subspec-unit-{}", std::process::id()));
        let cfg = RunConfig {
            grid: vec![2],
            tasks: vec![Task::Lambda1, Task::Convergence],
            out: dir.clone(),
            ..RunConfig::default()
        };
        let out = run(&cfg).unwrap();
        assert_eq!(out.exit_code(), EXIT_OK);
        let csv = fs::read_to_string(dir.join("convergence.csv")).unwrap();
        assert!(csv.starts_with("N,lambda1,residual,iters\n2,1.6e1,"), "{csv}");
        assert!(dir.join("spectrum.json").exists());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = std::env::temp_dir().join(format!("subspec-unit-bad-{}", std::process::id()));
        let cfg = RunConfig { p: 0.5, out: dir.clone(), ..RunConfig::default() };
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(!dir.exists());
    }
}
