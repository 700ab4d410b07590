//! The energies `F(u) = Σ|u|^p`, `G(u) = Σ|Xu|^p`, their exact gradients, the
//! quotient `E = G/F` and the constrained derivative `G' − E F'`, plus
//! quantitative checks of the monotonicity and convexity estimates that the
//! variational argument rests on.

pub mod constants;
pub mod inequalities;

use std::sync::Arc;

use crate::domain::{self, cell_gradient, check_exponent, DiscreteDomain, GridFunction};
use crate::error::{Error, Result};
use crate::exec;

pub use inequalities::{
    constant, constants_for, ineq_51, ineq_52, ineq_53, ineq_54, Bound, CalibrationRow, Inequality,
};

/// Riesz representative of a derivative under the weighted node pairing:
/// `⟨g, v⟩ = Σ_nodes g v Π h`. Boundary entries are zero.
#[derive(Clone, Debug)]
pub struct FunctionalGradient(GridFunction);

impl FunctionalGradient {
    pub fn pair(&self, v: &GridFunction) -> f64 {
        self.0.dot(v)
    }
    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
    pub fn as_grid(&self) -> &GridFunction {
        &self.0
    }
    pub fn into_grid(self) -> GridFunction {
        self.0
    }
    pub fn norm(&self) -> f64 {
        self.0.dot(&self.0).sqrt()
    }
    pub(crate) fn axpy(&self, t: f64, other: &FunctionalGradient) -> FunctionalGradient {
        FunctionalGradient(self.0.axpy(t, &other.0))
    }
}

#[allow(non_snake_case)]
pub fn F(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(domain::lp_power(u, p))
}

#[allow(non_snake_case)]
pub fn G(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(domain::seminorm_power(u, p))
}

/// `p |u|^{p−2} u`.
pub fn grad_f(u: &GridFunction, p: f64) -> Result<FunctionalGradient> {
    check_exponent(p)?;
    Ok(grad_f_unchecked(u, p))
}

fn grad_f_unchecked(u: &GridFunction, p: f64) -> FunctionalGradient {
    let v = u.values();
    let out = exec::map_collect(v.len(), |i| {
        let a = v[i];
        if a == 0.0 {
            0.0
        } else {
            p * a.abs().powf(p - 2.0) * a
        }
    });
    FunctionalGradient(GridFunction::from_nodes_unchecked(u.domain(), out))
}

/// `X*( p (|Xu|² + ε²)^{(p−2)/2} Xu )`. The regularization only acts for `p < 2`.
///
/// With `p < 2` and `ε = 0`, a vanishing `Xu` on a cell that touches the
/// interior is reported as [`Error::DegenerateGradient`]; cells whose stencil
/// is entirely on the boundary never contribute and are skipped.
pub fn grad_g(u: &GridFunction, p: f64, eps: f64) -> Result<FunctionalGradient> {
    check_exponent(p)?;
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::Config(format!("regularization ε must be ≥ 0, got {eps}")));
    }
    let dom = u.domain();
    if p < 2.0 && eps == 0.0 {
        let vals = u.values();
        if let Some(cell) = (0..dom.num_cells()).find(|&c| {
            if dom.cell_is_inert(c) {
                return false;
            }
            let mut g = [0.0; 3];
            cell_gradient(dom, vals, c, &mut g);
            g.iter().all(|&x| x == 0.0)
        }) {
            return Err(Error::DegenerateGradient { cell });
        }
    }
    Ok(grad_g_unchecked(u, p, eps))
}

pub(crate) fn grad_g_unchecked(u: &GridFunction, p: f64, eps: f64) -> FunctionalGradient {
    let dom: &Arc<DiscreteDomain> = u.domain();
    let vals = u.values();
    let m = dom.fields();
    let e2 = if p < 2.0 { eps * eps } else { 0.0 };
    let expo = 0.5 * (p - 2.0);
    let out = domain::transpose_gather(dom, |c, w: &mut [f64; 3]| {
        cell_gradient(dom, vals, c, w);
        let s: f64 = w[..m].iter().map(|x| x * x).sum::<f64>() + e2;
        let factor = if s == 0.0 {
            0.0
        } else if p == 2.0 {
            2.0
        } else {
            p * s.powf(expo)
        };
        for x in w[..m].iter_mut() {
            *x *= factor;
        }
    });
    FunctionalGradient(GridFunction::from_nodes_unchecked(dom, out))
}

/// `E(u) = G(u) / F(u)`.
pub fn rayleigh(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let f = domain::lp_power(u, p);
    if f == 0.0 {
        return Err(Error::UndefinedQuotient);
    }
    Ok(domain::seminorm_power(u, p) / f)
}

/// `G'(u) − E(u) F'(u)`; orthogonal to `u` by the Euler identities.
pub fn manifold_gradient(u: &GridFunction, p: f64, eps: f64) -> Result<FunctionalGradient> {
    let e = rayleigh(u, p)?;
    let gg = grad_g(u, p, eps)?;
    Ok(gg.axpy(-e, &grad_f_unchecked(u, p)))
}

/// Everything the descent needs at one iterate.
pub(crate) struct Evaluation {
    pub f: f64,
    pub g: f64,
    pub grad_f: FunctionalGradient,
    pub grad_g: FunctionalGradient,
}

pub(crate) fn evaluate(u: &GridFunction, p: f64, eps: f64) -> Evaluation {
    Evaluation {
        f: domain::lp_power(u, p),
        g: domain::seminorm_power(u, p),
        grad_f: grad_f_unchecked(u, p),
        grad_g: grad_g_unchecked(u, p, eps),
    }
}

/// `Σ_c term(Xu|_c, Xz|_c) Π h`.
fn cell_pairing(
    u: &GridFunction,
    z: &GridFunction,
    term: impl Fn(&[f64; 3], &[f64; 3], usize) -> f64 + Sync + Send,
) -> f64 {
    let dom = u.domain();
    let (uv, zv) = (u.values(), z.values());
    dom.weight()
        * exec::sum(dom.num_cells(), |c| {
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            cell_gradient(dom, uv, c, &mut a);
            cell_gradient(dom, zv, c, &mut b);
            term(&a, &b, dom.fields())
        })
}

/// `(⟨G'(u) − G'(v), u − v⟩, p(‖u‖^{p−1} − ‖v‖^{p−1})(‖u‖ − ‖v‖), p C₅₄ ‖u − v‖^p)`.
/// The last entry is `None` for `p < 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityGap {
    pub lhs: f64,
    pub rhs_weak: f64,
    pub rhs_strong: Option<f64>,
}

impl MonotonicityGap {
    pub fn holds(&self) -> bool {
        let slack = inequalities::CONTRACT_SLACK * self.lhs.abs().max(self.rhs_weak.abs());
        let weak = self.lhs + slack >= self.rhs_weak;
        let strong = self
            .rhs_strong
            .is_none_or(|r| self.lhs + inequalities::CONTRACT_SLACK * self.lhs.abs().max(r) >= r);
        weak && strong
    }
}

pub fn monotonicity_gap(u: &GridFunction, v: &GridFunction, p: f64) -> Result<MonotonicityGap> {
    check_exponent(p)?;
    u.check_same(v)?;
    let diff = u - v;
    let lhs = p * cell_pairing(u, v, |a, b, m| {
        let na = a[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
        let (sa, sb) = (inequalities::phi_scale(na, p), inequalities::phi_scale(nb, p));
        (0..m).map(|i| (sa * a[i] - sb * b[i]) * (a[i] - b[i])).sum()
    });
    let nu = domain::seminorm_power(u, p).powf(1.0 / p);
    let nv = domain::seminorm_power(v, p).powf(1.0 / p);
    let rhs_weak = p * (nu.powf(p - 1.0) - nv.powf(p - 1.0)) * (nu - nv);
    let rhs_strong = if p >= 2.0 {
        let c = constant(Inequality::I54, p)?;
        Some(p * c * domain::seminorm_power(&diff, p))
    } else {
        None
    };
    Ok(MonotonicityGap {
        lhs,
        rhs_weak,
        rhs_strong,
    })
}

/// `(‖(u+v)/2‖, bound)` for `‖u‖ = ‖v‖ = 1`, with `ε = ‖u − v‖` and
/// `bound = (1 − (ε/2)^q)^{1/q}`, `q = p` for `p ≥ 2` and `q = p/(p−1)` below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityCheck {
    pub midpoint_norm: f64,
    pub bound: f64,
    pub separation: f64,
}

impl ConvexityCheck {
    pub fn holds(&self) -> bool {
        self.midpoint_norm <= self.bound + inequalities::CONTRACT_SLACK
    }
}

pub const NORMALIZATION_TOL: f64 = 1e-9;

pub fn uniform_convexity_check(u: &GridFunction, v: &GridFunction, p: f64) -> Result<ConvexityCheck> {
    check_exponent(p)?;
    u.check_same(v)?;
    let nu = domain::seminorm_power(u, p).powf(1.0 / p);
    let nv = domain::seminorm_power(v, p).powf(1.0 / p);
    if (nu - 1.0).abs() > NORMALIZATION_TOL || (nv - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Precondition(format!(
            "uniform convexity check needs ‖u‖ = ‖v‖ = 1, got {nu} and {nv}"
        )));
    }
    let mid = (u + v).scaled(0.5);
    let midpoint_norm = domain::seminorm_power(&mid, p).powf(1.0 / p);
    let separation = domain::seminorm_power(&(u - v), p).powf(1.0 / p);
    let q = if p >= 2.0 { p } else { p / (p - 1.0) };
    let bound = (1.0 - (0.5 * separation).powf(q)).max(0.0).powf(1.0 / q);
    Ok(ConvexityCheck {
        midpoint_norm,
        bound,
        separation,
    })
}

/// Strong continuity of `F'`: `Σ |Φ(uₙ) − Φ(u)|^{p'} Π h` against
/// `C₅₁^{p'} ‖uₙ − u‖_p^p` (`p < 2`) or
/// `C₅₂^{p'} ‖uₙ − u‖_p^{p'} (‖uₙ‖_p + ‖u‖_p)^{p'(p−2)}` (`p ≥ 2`).
pub fn strong_continuity_check(un: &GridFunction, u: &GridFunction, p: f64) -> Result<Bound> {
    check_exponent(p)?;
    un.check_same(u)?;
    let q = p / (p - 1.0);
    let (a, b) = (un.values(), u.values());
    let phi = |x: f64| if x == 0.0 { 0.0 } else { x.abs().powf(p - 2.0) * x };
    let lhs = un.domain().weight() * exec::sum(a.len(), |i| (phi(a[i]) - phi(b[i])).abs().powf(q));
    let diff = domain::lp_power(&(un - u), p);
    let rhs = if p < 2.0 {
        constant(Inequality::I51, p)?.powf(q) * diff
    } else {
        let s = domain::lp_power(un, p).powf(1.0 / p) + domain::lp_power(u, p).powf(1.0 / p);
        constant(Inequality::I52, p)?.powf(q) * diff.powf(q / p) * s.powf(q * (p - 2.0))
    };
    Ok(Bound { lhs, rhs, upper: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_dof() -> GridFunction {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 2).unwrap();
        GridFunction::from_interior(&dom, &[1.0]).unwrap()
    }

    fn random(dom: &Arc<DiscreteDomain>, rng: &mut ChaCha8Rng) -> GridFunction {
        let v: Vec<f64> = (0..dom.num_interior()).map(|_| rng.random::<f64>() - 0.5).collect();
        GridFunction::from_interior(dom, &v).unwrap()
    }

    #[test]
    fn single_dof_values() {
        let u = single_dof();
        assert!((F(&u, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((G(&u, 2.0).unwrap() - 4.0).abs() < 1e-15);
        for t in [0.3, -2.0, 7.5] {
            assert!((rayleigh(&u.scaled(t), 2.0).unwrap() - 16.0).abs() < 1e-12);
        }
        for p in [1.5, 3.0, 4.0] {
            let e = rayleigh(&u, p).unwrap();
            let expect = 2f64.powf(p + 1.0) + 8f64.powf(0.5 * p);
            assert!((e - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn zero_function() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 4).unwrap();
        let z = GridFunction::zeros(&dom);
        assert_eq!(F(&z, 2.0).unwrap(), 0.0);
        assert_eq!(G(&z, 2.0).unwrap(), 0.0);
        assert!(grad_g(&z, 3.0, 0.0).unwrap().as_grid().is_zero());
        assert!(grad_f(&z, 3.0).unwrap().as_grid().is_zero());
        assert!(matches!(rayleigh(&z, 2.0), Err(Error::UndefinedQuotient)));
        assert!(matches!(grad_g(&z, 1.5, 0.0), Err(Error::DegenerateGradient { .. })));
        assert!(grad_g(&z, 1.5, 1e-3).is_ok());
    }

    #[test]
    fn homogeneity_and_euler_identities() {
        let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random(&dom, &mut rng);
        for p in [2.0, 2.5, 4.0] {
            let f = F(&u, p).unwrap();
            assert!((F(&u.scaled(-1.7), p).unwrap() - 1.7f64.powf(p) * f).abs() < 1e-12 * f);
            let gf = grad_f(&u, p).unwrap().pair(&u);
            let gg = grad_g(&u, p, 0.0).unwrap().pair(&u);
            assert!((gf - p * f).abs() < 1e-12 * gf.abs());
            let g = G(&u, p).unwrap();
            assert!((gg - p * g).abs() < 1e-12 * gg.abs());
            let mg = manifold_gradient(&u, p, 0.0).unwrap().pair(&u);
            assert!(mg.abs() < 1e-12 * gg.abs());
        }
    }

    // Oracle: central differences of G along a random direction.
    #[test]
    fn gradient_matches_central_differences() {
        let dom = DiscreteDomain::uniform(FieldFamily::Heisenberg, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random(&dom, &mut rng);
        let v = random(&dom, &mut rng);
        let p = 3.0;
        let exact = grad_g(&u, p, 0.0).unwrap().pair(&v);
        let mut errs = Vec::new();
        for t in [1e-2, 1e-3] {
            let fd = (G(&u.axpy(t, &v), p).unwrap() - G(&u.axpy(-t, &v), p).unwrap()) / (2.0 * t);
            errs.push((fd - exact).abs());
        }
        let slope = (errs[0] / errs[1]).log10();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope} errs {errs:?}");
    }

    #[test]
    fn regularized_gradient_is_exact_for_regularized_energy() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random(&dom, &mut rng);
        let v = random(&dom, &mut rng);
        let (p, eps) = (1.5, 0.3);
        let g_eps = |w: &GridFunction| {
            let xw = domain::apply_x(w);
            (0..dom.num_cells())
                .map(|c| (xw.cell_norm(c).powi(2) + eps * eps).powf(0.5 * p))
                .sum::<f64>()
                * dom.weight()
        };
        let t = 1e-5;
        let fd = (g_eps(&u.axpy(t, &v)) - g_eps(&u.axpy(-t, &v))) / (2.0 * t);
        let exact = grad_g(&u, p, eps).unwrap().pair(&v);
        assert!((fd - exact).abs() < 1e-7 * exact.abs().max(1.0));
    }

    #[test]
    fn monotonicity_examples() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random(&dom, &mut rng);
        let same = monotonicity_gap(&u, &u, 3.0).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert_eq!(same.rhs_weak, 0.0);
        assert_eq!(same.rhs_strong, Some(0.0));

        let z = GridFunction::zeros(&dom);
        for p in [1.5, 3.0] {
            let gap = monotonicity_gap(&u, &z, p).unwrap();
            let g = G(&u, p).unwrap();
            assert!((gap.lhs - p * g).abs() < 1e-12 * gap.lhs);
            assert!((gap.rhs_weak - p * g).abs() < 1e-12 * gap.lhs);
            assert!(gap.holds());
        }
        assert!(monotonicity_gap(&u, &z, 1.5).unwrap().rhs_strong.is_none());
    }

    #[test]
    fn monotonicity_lhs_matches_gradient_pairing() {
        let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 2).unwrap(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random(&dom, &mut rng);
        let v = random(&dom, &mut rng);
        let p = 3.0;
        let gap = monotonicity_gap(&u, &v, p).unwrap();
        let du = &u - &v;
        let lhs = grad_g(&u, p, 0.0).unwrap().pair(&du) - grad_g(&v, p, 0.0).unwrap().pair(&du);
        assert!((gap.lhs - lhs).abs() < 1e-12 * lhs.abs());
        assert!(gap.holds());
    }

    #[test]
    fn convexity_examples() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [1.5, 3.0] {
            let u = random(&dom, &mut rng);
            let u = u.scaled(1.0 / domain::seminorm_x(&u, p).unwrap());
            let same = uniform_convexity_check(&u, &u, p).unwrap();
            assert!((same.midpoint_norm - 1.0).abs() < 1e-12);
            assert!((same.bound - 1.0).abs() < 1e-15);
            assert!(same.holds());
            let opp = uniform_convexity_check(&u, &u.scaled(-1.0), p).unwrap();
            assert_eq!(opp.midpoint_norm, 0.0);
            assert!((opp.separation - 2.0).abs() < 1e-12);
            assert!(opp.holds());
            assert!(uniform_convexity_check(&u.scaled(2.0), &u, p).is_err());
        }
    }

    #[test]
    fn strong_continuity_holds_on_random_pairs() {
        let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in [1.5, 3.0] {
            for _ in 0..50 {
                let u = random(&dom, &mut rng);
                let v = u.axpy(rng.random::<f64>(), &random(&dom, &mut rng));
                assert!(strong_continuity_check(&v, &u, p).unwrap().holds());
            }
        }
    }
}
