//! Low modes of the quadratic (`p = 2`) pencil `K x = λ M x` by block inverse
//! iteration with Rayleigh–Ritz extraction. `M = (Π h) I` on a uniform grid.

use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::linalg::{assemble_energy, CsrMatrix, SpdSolver};

const RITZ_TOL: f64 = 1e-11;
const MAX_SWEEPS: usize = 600;

/// Energy matrix and its solver, shared by the mode solver and the
/// preconditioned descent.
#[derive(Debug)]
pub struct Workspace {
    pub domain: Arc<DiscreteDomain>,
    pub energy: CsrMatrix,
    pub solver: SpdSolver,
    cache: Mutex<Option<(u64, Vec<Mode>)>>,
}

impl Workspace {
    pub fn new(domain: &Arc<DiscreteDomain>) -> Result<Arc<Self>> {
        let energy = assemble_energy(domain);
        let solver = SpdSolver::new(energy.clone())?;
        Ok(Arc::new(Self {
            domain: domain.clone(),
            energy,
            solver,
            cache: Mutex::new(None),
        }))
    }

    /// `K⁻¹ (Π h · g)` for node data `g`, returned as a grid function: the
    /// representative of the functional `⟨g, ·⟩` in the energy inner product.
    pub fn energy_riesz(&self, g: &GridFunction) -> Result<GridFunction> {
        let w = self.domain.weight();
        let rhs: Vec<f64> = g.interior_values().iter().map(|v| v * w).collect();
        let z = self.solver.solve(&rhs)?;
        GridFunction::from_interior(&self.domain, &z)
    }
}

/// A discrete quadratic eigenpair, `‖u‖_{L²} = 1`.
#[derive(Clone, Debug)]
pub struct Mode {
    pub lambda: f64,
    pub vector: GridFunction,
    pub residual: f64,
}

fn orthonormalize(y: &mut DMatrix<f64>) -> Result<()> {
    // two passes of modified Gram–Schmidt
    let b = y.ncols();
    for _ in 0..2 {
        for j in 0..b {
            for i in 0..j {
                let r = y.column(i).dot(&y.column(j));
                let ci = y.column(i).clone_owned();
                let mut cj = y.column_mut(j);
                cj.axpy(-r, &ci, 1.0);
            }
            let nrm = y.column(j).norm();
            if nrm == 0.0 || !nrm.is_finite() {
                return Err(Error::Solver("pencil block lost rank".into()));
            }
            y.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    Ok(())
}

/// First `n` modes, ascending; for a degenerate eigenvalue an arbitrary
/// orthonormal basis of its eigenspace is returned (fixed by `seed`).
/// Results are cached on the workspace: a later request for at most as many
/// modes with the same seed returns a prefix of the earlier ones.
pub fn lowest_modes(ws: &Workspace, n: usize, seed: u64) -> Result<Vec<Mode>> {
    let mut cache = ws.cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((s, modes)) = cache.as_ref() {
        if *s == seed && modes.len() >= n {
            return Ok(modes[..n].to_vec());
        }
    }
    let modes = compute_modes(ws, n, seed)?;
    *cache = Some((seed, modes.clone()));
    Ok(modes)
}

fn compute_modes(ws: &Workspace, n: usize, seed: u64) -> Result<Vec<Mode>> {
    let dom = &ws.domain;
    let dofs = dom.num_interior();
    if n == 0 || n > dofs {
        return Err(Error::Config(format!("requested {n} modes of a {dofs}-dof pencil")));
    }
    let block = (2 * n + 2).min(dofs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(dofs, block, |_, _| rng.random::<f64>() - 0.5);
    orthonormalize(&mut x)?;
    let k = &ws.energy;
    let mut kx = DMatrix::zeros(dofs, block);
    for sweep in 0..MAX_SWEEPS {
        // Y = K⁻¹ X
        let mut y = DMatrix::zeros(dofs, block);
        for j in 0..block {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let sol = ws.solver.solve(&col)?;
            y.column_mut(j).copy_from_slice(&sol);
        }
        orthonormalize(&mut y)?;
        for j in 0..block {
            let col: Vec<f64> = y.column(j).iter().copied().collect();
            let mut out = vec![0.0; dofs];
            k.matvec(&col, &mut out);
            kx.column_mut(j).copy_from_slice(&out);
        }
        let h = y.transpose() * &kx;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let v = DMatrix::from_fn(block, block, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &y * &v;
        kx = &kx * &v;
        let residuals: Vec<f64> = (0..n)
            .map(|j| {
                let r = kx.column(j) - x.column(j) * theta[j];
                r.norm() / kx.column(j).norm()
            })
            .collect();
        if residuals.iter().all(|&r| r <= RITZ_TOL) || sweep + 1 == MAX_SWEEPS {
            if residuals.iter().any(|&r| r > 1e3 * RITZ_TOL) {
                return Err(Error::Solver(format!(
                    "block inverse iteration stalled (residuals {residuals:?})"
                )));
            }
            let w = dom.weight();
            return (0..n)
                .map(|j| {
                    let vals: Vec<f64> = x.column(j).iter().copied().collect();
                    let mut u = GridFunction::from_interior(dom, &vals)?;
                    let mut s = u.dot(&u).sqrt();
                    if crate::spectrum::sign_of(&u) < 0.0 {
                        s = -s;
                    }
                    u = u.scaled(1.0 / s);
                    Ok(Mode {
                        lambda: theta[j] / w,
                        vector: u,
                        residual: residuals[j],
                    })
                })
                .collect();
        }
    }
    unreachable!()
}
