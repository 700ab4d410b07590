//! Upper bounds `ν_n = max_{u ∈ span Φ_n} E(u)` over nested frames.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::descent::{energy_change, line_search};
use super::pencil::{lowest_modes, Workspace};
use crate::domain::{self, check_exponent, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::functionals;

pub const MAX_FRAME_CONDITION: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameProvenance {
    /// Lowest modes of the quadratic pencil.
    P2Modes,
    /// Modes obtained one at a time with deflation.
    Deflated,
    User,
}

/// A linearly independent family of grid functions on one domain.
#[derive(Clone, Debug)]
pub struct SubspaceFrame {
    functions: Vec<GridFunction>,
    provenance: FrameProvenance,
    /// Orthonormal basis of the span, in the weighted `L²` pairing.
    basis: Vec<GridFunction>,
    /// `functions = basis · r` columnwise; used to report coefficients.
    r: DMatrix<f64>,
    condition: f64,
}

impl SubspaceFrame {
    pub fn new(functions: Vec<GridFunction>) -> Result<Self> {
        Self::with_provenance(functions, FrameProvenance::User)
    }

    pub fn with_provenance(functions: Vec<GridFunction>, provenance: FrameProvenance) -> Result<Self> {
        let n = functions.len();
        if n == 0 {
            return Err(Error::Precondition("empty frame".into()));
        }
        for f in &functions[1..] {
            functions[0].check_same(f)?;
        }
        let gram = DMatrix::from_fn(n, n, |i, j| functions[i].dot(&functions[j]));
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition < MAX_FRAME_CONDITION) {
            return Err(Error::Frame { condition });
        }
        let chol = gram.cholesky().ok_or(Error::Frame { condition: f64::INFINITY })?;
        // Gram = L Lᵀ; basis = functions · L⁻ᵀ
        let l = chol.l();
        let linv_t = l.clone().try_inverse().ok_or(Error::Frame { condition })?.transpose();
        let basis = (0..n)
            .map(|j| {
                let mut acc = GridFunction::zeros(functions[0].domain());
                for i in 0..n {
                    let c = linv_t[(i, j)];
                    if c != 0.0 {
                        acc = acc.axpy(c, &functions[i]);
                    }
                }
                acc
            })
            .collect();
        Ok(Self { functions, provenance, basis, r: l.transpose(), condition })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
    pub fn functions(&self) -> &[GridFunction] {
        &self.functions
    }
    pub fn provenance(&self) -> FrameProvenance {
        self.provenance
    }
    pub fn condition(&self) -> f64 {
        self.condition
    }
    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        self.functions[0].domain()
    }

    fn combine(&self, c: &DVector<f64>) -> GridFunction {
        let dom = self.domain();
        let vals = crate::exec::map_collect(dom.num_nodes(), |k| {
            self.basis.iter().zip(c.iter()).map(|(b, ci)| ci * b.values()[k]).sum()
        });
        GridFunction::from_nodes_unchecked(dom, vals)
    }

    /// Coefficients in terms of the original functions.
    fn original_coefficients(&self, c: &DVector<f64>) -> Vec<f64> {
        let a = self
            .r
            .clone()
            .solve_upper_triangular(c)
            .expect("triangular factor of a positive-definite Gram matrix");
        a.iter().copied().collect()
    }

    /// Orthonormal coordinates of `Σ a_i φ_i`.
    fn from_original(&self, a: &[f64]) -> DVector<f64> {
        let mut full = DVector::zeros(self.len());
        for (i, &v) in a.iter().enumerate().take(self.len()) {
            full[i] = v;
        }
        &self.r * full
    }
}

#[derive(Clone, Debug)]
pub struct MaxMinConfig {
    /// Applied in the gradient of `G` for `p < 2`. At zero, `Φ` is extended by
    /// continuity at cells where `Xu` vanishes.
    pub eps: f64,
    pub max_iter: usize,
    /// Relative tangential gradient tolerance.
    pub tol: f64,
    pub random_starts: Option<usize>,
    pub seed: u64,
    /// Coefficients (in the frame's own functions) of an extra starting point.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for MaxMinConfig {
    fn default() -> Self {
        Self { eps: 0.0, max_iter: 4000, tol: 1e-10, random_starts: None, seed: 0x5EED, warm_start: None }
    }
}

#[derive(Clone, Debug)]
pub struct MaxMinResult {
    pub value: f64,
    pub argmax: GridFunction,
    /// Coefficients of the maximizer in the frame's functions.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
}

struct Ascent {
    value: f64,
    c: DVector<f64>,
    iterations: usize,
}

fn value_and_gradient(frame: &SubspaceFrame, c: &DVector<f64>, p: f64, eps: f64) -> (f64, DVector<f64>) {
    let u = frame.combine(c);
    let ev = functionals::evaluate(&u, p, eps);
    let e = ev.g / ev.f;
    let g = ev.grad_g.axpy(-e, &ev.grad_f);
    let grad = DVector::from_iterator(frame.len(), frame.basis.iter().map(|b| g.pair(b) / ev.f));
    // tangential part on the coefficient sphere
    let grad = &grad - c * c.dot(&grad);
    (e, grad)
}

fn ascend(frame: &SubspaceFrame, start: DVector<f64>, p: f64, cfg: &MaxMinConfig) -> Ascent {
    let mut c = start.normalize();
    let (mut e, mut grad) = value_and_gradient(frame, &c, p, cfg.eps);
    let mut t = 1.0 / (p * e.max(1e-300));
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let gn = grad.norm();
        if gn <= cfg.tol * p * e {
            break;
        }
        let u = frame.combine(&c);
        let dir = frame.combine(&(-&grad));
        let (f, g) = (domain::lp_power(&u, p), domain::seminorm_power(&u, p));
        let phi = |t: f64| {
            let (df, dg) = energy_change(&u, &dir, t, p);
            let fnew = f + df;
            (fnew > 0.0).then(|| -(dg * f - g * df) / (f * fnew))
        };
        let Some((ts, _)) = line_search(phi, gn * gn, t, 1e-4, 50) else {
            break;
        };
        t = ts;
        c = (&c + &grad * t).normalize();
        iterations += 1;
        let (en, gr) = value_and_gradient(frame, &c, p, cfg.eps);
        e = en;
        grad = gr;
    }
    Ascent { value: e, c, iterations }
}

/// `max { E(u) : u ∈ span(frame) \ {0} }` by Riemannian ascent on the unit
/// sphere of orthonormal coordinates, from the coordinate axes, random
/// directions and an optional warm start; the best end point wins.
pub fn subspace_maxmin(frame: &SubspaceFrame, p: f64, cfg: &MaxMinConfig) -> Result<MaxMinResult> {
    check_exponent(p)?;
    if cfg.eps < 0.0 || !cfg.eps.is_finite() {
        return Err(Error::Config(format!("regularization ε must be ≥ 0, got {}", cfg.eps)));
    }
    let n = frame.len();
    let mut starts: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
    for _ in 0..cfg.random_starts.unwrap_or(n + 1) {
        starts.push(DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0));
    }
    if let Some(w) = &cfg.warm_start {
        let c = frame.from_original(w);
        if c.norm() > 0.0 {
            starts.push(c);
        }
    }
    let runs = crate::exec::map_jobs(starts.len(), |k| ascend(frame, starts[k].clone(), p, cfg));
    let best = runs
        .into_iter()
        .filter(|r| r.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(Error::UndefinedQuotient)?;
    let total: usize = best.iterations;
    Ok(MaxMinResult {
        value: best.value,
        argmax: frame.combine(&best.c),
        coefficients: frame.original_coefficients(&best.c),
        iterations: total,
    })
}

/// Frames `Φ_1 ⊂ Φ_2 ⊂ … ⊂ Φ_{n_max}` spanned by the lowest quadratic modes.
pub fn build_frames(domain: &Arc<DiscreteDomain>, n_max: usize, seed: u64) -> Result<Vec<SubspaceFrame>> {
    let ws = Workspace::new(domain)?;
    build_frames_with(&ws, n_max, seed)
}

pub(crate) fn build_frames_with(ws: &Workspace, n_max: usize, seed: u64) -> Result<Vec<SubspaceFrame>> {
    let modes = lowest_modes(ws, n_max, seed)?;
    let fns: Vec<GridFunction> = modes.into_iter().map(|m| m.vector).collect();
    (1..=n_max)
        .map(|n| SubspaceFrame::with_provenance(fns[..n].to_vec(), FrameProvenance::P2Modes))
        .collect()
}

/// `ν_1 ≤ ν_2 ≤ …` over nested frames; each ascent is also started from the
/// previous maximizer, so the sequence is nondecreasing by construction.
pub fn nested_maxmin(frames: &[SubspaceFrame], p: f64, cfg: &MaxMinConfig) -> Result<Vec<MaxMinResult>> {
    let mut out: Vec<MaxMinResult> = Vec::with_capacity(frames.len());
    for frame in frames {
        let mut c = cfg.clone();
        if let Some(prev) = out.last() {
            c.warm_start = Some(prev.coefficients.clone());
        }
        out.push(subspace_maxmin(frame, p, &c)?);
    }
    Ok(out)
}
