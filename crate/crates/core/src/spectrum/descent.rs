//! Projected descent for `λ₁ = min { G(u) : F(u) = 1 }`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pencil::{lowest_modes, Workspace};
use super::{sign_of, EigenPair, Initializer, Preconditioner, SolverConfig};
use crate::domain::{self, cell_gradient, check_exponent, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::exec;
use crate::functionals::{self, FunctionalGradient};

const MAX_HALVINGS: usize = 60;
const STAGE_TOL: f64 = 1e-4;
const STAGE_BUDGET: usize = 500;

/// `‖G'_ε(u) − λ F'(u)‖ / ‖G'_ε(u)‖`, both sides as Riesz representatives.
/// Invariant under scaling of `u` when `λ` is its quotient.
pub fn weak_residual(u: &GridFunction, lambda: f64, p: f64, eps: f64) -> Result<f64> {
    check_exponent(p)?;
    if u.is_zero() {
        return Err(Error::UndefinedQuotient);
    }
    let ev = functionals::evaluate(u, p, eps);
    Ok(residual_of(&ev.grad_g, &ev.grad_f, lambda))
}

fn residual_of(gg: &FunctionalGradient, gf: &FunctionalGradient, lambda: f64) -> f64 {
    let r = gg.axpy(-lambda, gf);
    let denom = gg.norm();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        r.norm() / denom
    }
}

pub(crate) fn normalize(u: &GridFunction, p: f64) -> Result<GridFunction> {
    let f = domain::lp_power(u, p);
    if f == 0.0 || !f.is_finite() {
        return Err(Error::UndefinedQuotient);
    }
    Ok(u.scaled(f.powf(-1.0 / p)))
}

/// `(s + δ)^q − s^q` without cancellation.
fn power_change(s: f64, delta: f64, q: f64) -> f64 {
    if s == 0.0 {
        let n = delta.max(0.0);
        return if n == 0.0 { 0.0 } else { n.powf(q) };
    }
    let r = delta / s;
    if r <= -1.0 {
        return -s.powf(q);
    }
    s.powf(q) * (q * r.ln_1p()).exp_m1()
}

/// `(F(u − t d) − F(u), G(u − t d) − G(u))`, summed term by term so that the
/// change stays accurate when it is far below the size of `F` and `G`.
pub(crate) fn energy_change(u: &GridFunction, d: &GridFunction, t: f64, p: f64) -> (f64, f64) {
    let dom = u.domain();
    let (uv, dv) = (u.values(), d.values());
    let q = 0.5 * p;
    let df = exec::sum(uv.len(), |i| {
        let (a, b) = (uv[i], dv[i]);
        power_change(a * a, t * b * (t * b - 2.0 * a), q)
    });
    let m = dom.fields();
    let dg = exec::sum(dom.num_cells(), |c| {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        cell_gradient(dom, uv, c, &mut a);
        cell_gradient(dom, dv, c, &mut b);
        let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
        for k in 0..m {
            aa += a[k] * a[k];
            ab += a[k] * b[k];
            bb += b[k] * b[k];
        }
        power_change(aa, t * (t * bb - 2.0 * ab), q)
    });
    (df * dom.weight(), dg * dom.weight())
}

/// Backtracking search for `φ(t) ≤ −c t s`, where `φ` is the change of the
/// objective along the search path and `s > 0` the initial rate of decrease.
/// Each evaluated trial also fits `φ(t) ≈ −s t + a t²` and tries its
/// minimizer, which removes the two-cycle a fixed doubling/halving rule
/// falls into on stiff components. Returns the accepted step and change.
pub(crate) fn line_search(
    phi: impl Fn(f64) -> Option<f64>,
    s: f64,
    t0: f64,
    c: f64,
    max_trials: usize,
) -> Option<(f64, f64)> {
    let mut t = t0;
    for _ in 0..max_trials {
        let Some(d) = phi(t) else {
            t *= 0.5;
            continue;
        };
        let a = (d + s * t) / (t * t);
        let model = if a > 0.0 && a.is_finite() { Some(s / (2.0 * a)) } else { None };
        if let Some(ts) = model.filter(|&ts| ts > 0.125 * t && ts < 8.0 * t && ts != t) {
            if let Some(ds) = phi(ts) {
                if ds < d && ds <= -c * ts * s {
                    return Some((ts, ds));
                }
            }
        }
        if d <= -c * t * s {
            return Some((t, d));
        }
        t = match model {
            Some(ts) => ts.clamp(0.1 * t, 0.5 * t),
            None => 0.5 * t,
        };
    }
    None
}

struct Stage {
    p: f64,
    eps: f64,
    tol: f64,
    budget: usize,
    record: bool,
}

struct Outcome {
    u: GridFunction,
    lambda: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn descend(
    ws: &Workspace,
    u0: &GridFunction,
    st: &Stage,
    cfg: &SolverConfig,
    history: &mut Vec<f64>,
) -> Result<Outcome> {
    let p = st.p;
    let f0 = domain::lp_power(u0, p);
    let mut u = if (f0 - 1.0).abs() <= 1e-13 { u0.clone() } else { normalize(u0, p)? };
    let t0 = match cfg.preconditioner {
        Preconditioner::Energy => 1.0 / p,
        Preconditioner::Identity => 0.0,
    };
    let mut t_next = 0.0;
    let mut iterations = 0;
    loop {
        let ev = functionals::evaluate(&u, p, st.eps);
        let e = ev.g / ev.f;
        if st.record && history.is_empty() {
            history.push(e);
        }
        let g = ev.grad_g.axpy(-e, &ev.grad_f);
        let residual = {
            let d = ev.grad_g.norm();
            if d == 0.0 { f64::INFINITY } else { g.norm() / d }
        };
        if residual <= st.tol || iterations >= st.budget {
            return Ok(Outcome { u, lambda: e, residual, iterations, converged: residual <= st.tol });
        }
        let g = g.into_grid();
        let d = match cfg.preconditioner {
            Preconditioner::Energy => ws.energy_riesz(&g)?,
            Preconditioner::Identity => g.clone(),
        };
        let slope = g.dot(&d) / ev.f;
        if !(slope > 0.0) {
            return Ok(Outcome { u, lambda: e, residual, iterations, converged: false });
        }
        let t = if t_next > 0.0 {
            t_next
        } else if t0 > 0.0 {
            t0
        } else {
            1.0 / e
        };
        let phi = |t: f64| {
            let (df, dg) = energy_change(&u, &d, t, p);
            let fnew = ev.f + df;
            (fnew > 0.0).then(|| (dg * ev.f - ev.g * df) / (ev.f * fnew))
        };
        let Some((t, _)) = line_search(phi, slope, t, cfg.sufficient_decrease, MAX_HALVINGS) else {
            return Ok(Outcome { u, lambda: e, residual, iterations, converged: false });
        };
        u = normalize(&u.axpy(-t, &d), p)?;
        iterations += 1;
        if st.record {
            history.push(domain::seminorm_power(&u, p) / domain::lp_power(&u, p));
        }
        t_next = t;
    }
}

fn initial_guess(ws: &Workspace, cfg: &SolverConfig) -> Result<GridFunction> {
    let dom = &ws.domain;
    match &cfg.initializer {
        Initializer::Continuation => Ok(lowest_modes(ws, 1, cfg.seed)?.remove(0).vector),
        Initializer::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let vals: Vec<f64> = (0..dom.num_interior()).map(|_| rng.random::<f64>() + 1e-3).collect();
            GridFunction::from_interior(dom, &vals)
        }
        Initializer::Given(u) => {
            if !Arc::ptr_eq(u.domain(), dom) && u.domain().resolution() != dom.resolution() {
                return Err(Error::DomainMismatch);
            }
            GridFunction::from_interior(dom, &u.interior_values())
        }
    }
}

fn continuation_path(p: f64, step: f64) -> Vec<f64> {
    let mut path = Vec::new();
    let dir = if p > 2.0 { 1.0 } else { -1.0 };
    let mut k = 1.0;
    while (2.0 + dir * k * step - p) * dir < -1e-12 {
        path.push(2.0 + dir * k * step);
        k += 1.0;
    }
    path
}

/// Ground state of `G` on `{F = 1}`.
///
/// The iteration moves along `−z`, where `z` is the representative of
/// `G'_ε(u) − E(u) F'(u)` in the chosen inner product, with Armijo
/// backtracking on the unregularized quotient, followed by renormalization.
/// [`Initializer::Continuation`] starts from the quadratic ground mode and
/// walks `p` in steps of `cfg.p_step`; for `p < 2` the regularization is
/// halved from `cfg.eps0` down to `cfg.eps_min`.
pub fn minimize_lambda1(domain: &Arc<DiscreteDomain>, p: f64, cfg: &SolverConfig) -> Result<EigenPair> {
    let ws = Workspace::new(domain)?;
    minimize_with(&ws, p, cfg)
}

pub(crate) fn minimize_with(ws: &Workspace, p: f64, cfg: &SolverConfig) -> Result<EigenPair> {
    check_exponent(p)?;
    cfg.validate()?;
    let tol = cfg.tolerance(p);
    let mut u = initial_guess(ws, cfg)?;
    let mut scratch = Vec::new();
    let mut used = 0;
    if matches!(cfg.initializer, Initializer::Continuation) {
        for q in continuation_path(p, cfg.p_step) {
            let eps = if q < 2.0 { cfg.eps0 } else { 0.0 };
            let st = Stage { p: q, eps, tol: STAGE_TOL.max(tol), budget: STAGE_BUDGET, record: false };
            let out = descend(ws, &u, &st, cfg, &mut scratch)?;
            used += out.iterations;
            u = out.u;
        }
    }
    let mut eps_schedule = Vec::new();
    if p < 2.0 {
        let mut e = cfg.eps0;
        while e > cfg.eps_min {
            eps_schedule.push(e);
            e *= 0.5;
        }
    }
    eps_schedule.push(if p < 2.0 { cfg.eps_min } else { 0.0 });
    let mut history = Vec::new();
    let last = eps_schedule.len() - 1;
    let mut out = None;
    for (k, &eps) in eps_schedule.iter().enumerate() {
        let remaining = cfg.max_iter.saturating_sub(used);
        let st = if k == last {
            Stage { p, eps, tol, budget: remaining, record: true }
        } else {
            Stage { p, eps, tol: STAGE_TOL.max(tol), budget: remaining.min(STAGE_BUDGET), record: true }
        };
        let o = descend(ws, &u, &st, cfg, &mut history)?;
        used += o.iterations;
        u = o.u.clone();
        out = Some((o, eps));
    }
    let (o, eps) = out.expect("schedule is never empty");
    let s = sign_of(&o.u);
    let pair = EigenPair {
        p,
        lambda: o.lambda,
        mu: 1.0 / o.lambda,
        eigenfunction: o.u.scaled(s),
        residual: o.residual,
        iterations: used,
        epsilon_final: eps,
        history,
    };
    if o.converged {
        Ok(pair)
    } else {
        Err(Error::NotConverged { iterations: used, residual: o.residual, best: Box::new(pair) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldFamily;

    #[test]
    fn path_steps() {
        assert_eq!(continuation_path(2.0, 0.25), Vec::<f64>::new());
        assert_eq!(continuation_path(2.6, 0.25), vec![2.25, 2.5]);
        assert_eq!(continuation_path(1.5, 0.25), vec![1.75]);
        assert_eq!(continuation_path(3.0, 0.25), vec![2.25, 2.5, 2.75]);
    }

    #[test]
    fn single_dof_closed_form() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 2).unwrap();
        for p in [1.5, 2.0, 3.0, 4.0] {
            let pair = minimize_lambda1(&dom, p, &SolverConfig::default()).unwrap();
            let exact = 2f64.powf(p + 1.0) + 8f64.powf(p / 2.0);
            assert!((pair.lambda - exact).abs() <= 1e-12 * exact, "p={p}: {}", pair.lambda);
        }
    }

    #[test]
    fn quadratic_case_is_pencil_ground_state() {
        let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 12).unwrap();
        let ws = Workspace::new(&dom).unwrap();
        let m = lowest_modes(&ws, 1, 3).unwrap();
        let pair = minimize_with(&ws, 2.0, &SolverConfig::default()).unwrap();
        assert!((pair.lambda - m[0].lambda).abs() < 1e-10 * m[0].lambda);
        assert!(pair.residual <= 1e-8);
    }

    #[test]
    fn history_is_monotone_and_random_start_agrees() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 12).unwrap();
        for p in [1.5, 3.0] {
            let a = minimize_lambda1(&dom, p, &SolverConfig::default()).unwrap();
            assert!(a.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13)));
            let cfg = SolverConfig { initializer: Initializer::Random { seed: 9 }, ..SolverConfig::default() };
            let b = minimize_lambda1(&dom, p, &cfg).unwrap();
            assert!((a.lambda - b.lambda).abs() < 1e-6 * a.lambda, "p={p}: {} {}", a.lambda, b.lambda);
            assert!(a.eigenfunction.interior_values().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn identity_direction_also_converges() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 6).unwrap();
        let cfg = SolverConfig { preconditioner: Preconditioner::Identity, ..SolverConfig::default() };
        let a = minimize_lambda1(&dom, 3.0, &cfg).unwrap();
        let b = minimize_lambda1(&dom, 3.0, &SolverConfig::default()).unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-7 * b.lambda);
    }

    #[test]
    fn half_square_scales_by_four() {
        let fam = FieldFamily::euclidean(2).unwrap();
        let unit = DiscreteDomain::uniform(fam.clone(), 10).unwrap();
        let half = DiscreteDomain::new(fam, crate::fields::BoxRegion::cube(2, 0.0, 0.5), &[10, 10]).unwrap();
        let a = minimize_lambda1(&unit, 2.0, &SolverConfig::default()).unwrap();
        let b = minimize_lambda1(&half, 2.0, &SolverConfig::default()).unwrap();
        assert!((b.lambda - 4.0 * a.lambda).abs() < 1e-10 * b.lambda);
        assert!((a.mu * a.lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_dof_residual_vanishes_at_sixteen() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 2).unwrap();
        let u = GridFunction::from_interior(&dom, &[0.7]).unwrap();
        assert!(weak_residual(&u, 16.0, 2.0, 0.0).unwrap() < 1e-15);
        assert!(weak_residual(&u, 15.0, 2.0, 0.0).unwrap() > 1e-3);
    }

    #[test]
    fn zero_function_residual_is_an_error() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 4).unwrap();
        let z = GridFunction::zeros(&dom);
        assert!(matches!(weak_residual(&z, 1.0, 2.0, 0.0), Err(Error::UndefinedQuotient)));
    }
}
