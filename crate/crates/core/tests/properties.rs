use proptest::prelude::*;
use std::sync::Arc;

use subspec::fields::FieldFamily;
use subspec::functionals::{self, inequalities::Inequality};
use subspec::{apply_x, apply_x_star, lp_norm, seminorm_x, DiscreteDomain, GridFunction, HorizontalField};

fn domains() -> Vec<Arc<DiscreteDomain>> {
    vec![
        DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 7).unwrap(),
        DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 8).unwrap(),
        DiscreteDomain::uniform(FieldFamily::grushin(2, 2).unwrap(), 6).unwrap(),
        DiscreteDomain::uniform(FieldFamily::Heisenberg, 4).unwrap(),
    ]
}

fn function(dom: &Arc<DiscreteDomain>, vals: &[f64]) -> GridFunction {
    let vals: Vec<f64> = (0..dom.num_interior()).map(|i| vals[i % vals.len()] * (1.0 + i as f64 * 0.01)).collect();
    GridFunction::from_interior(dom, &vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_pairing(k in 0usize..4, a in prop::collection::vec(-2.0f64..2.0, 5..40), b in prop::collection::vec(-2.0f64..2.0, 5..40)) {
        let dom = &domains()[k];
        let u = function(dom, &a);
        let n = dom.num_cells() * dom.fields();
        let w = HorizontalField::from_values(dom, (0..n).map(|i| b[i % b.len()] - 0.002 * i as f64).collect()).unwrap();
        let lhs = apply_x(&u).dot(&w);
        let rhs = u.dot(&apply_x_star(&w));
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn linearity_and_homogeneity(k in 0usize..4, a in prop::collection::vec(-2.0f64..2.0, 5..40), s in -3.0f64..3.0, p in 1.1f64..10.0) {
        let dom = &domains()[k];
        let u = function(dom, &a);
        let v = function(dom, &a.iter().rev().copied().collect::<Vec<_>>());
        let lhs = apply_x(&u.axpy(s, &v));
        let (xu, xv) = (apply_x(&u), apply_x(&v));
        for (i, x) in lhs.values().iter().enumerate() {
            prop_assert!((x - xu.values()[i] - s * xv.values()[i]).abs() <= 1e-10 * (1.0 + x.abs()));
        }
        let su = u.scaled(s);
        prop_assert!((lp_norm(&su, p).unwrap() - s.abs() * lp_norm(&u, p).unwrap()).abs() <= 1e-11 * (1.0 + lp_norm(&su, p).unwrap()));
        prop_assert!((seminorm_x(&su, p).unwrap() - s.abs() * seminorm_x(&u, p).unwrap()).abs() <= 1e-11 * (1.0 + seminorm_x(&su, p).unwrap()));
    }

    #[test]
    fn euler_identities_and_scale_invariance(k in 0usize..4, a in prop::collection::vec(0.1f64..2.0, 5..40), p in 2.0f64..10.0, s in 0.1f64..5.0) {
        let dom = &domains()[k];
        let u = function(dom, &a);
        let f = functionals::F(&u, p).unwrap();
        let g = functionals::G(&u, p).unwrap();
        let gf = functionals::grad_f(&u, p).unwrap();
        let gg = functionals::grad_g(&u, p, 0.0).unwrap();
        prop_assert!((gf.pair(&u) - p * f).abs() <= 1e-10 * p * f);
        prop_assert!((gg.pair(&u) - p * g).abs() <= 1e-10 * p * g);
        let m = functionals::manifold_gradient(&u, p, 0.0).unwrap();
        prop_assert!(m.pair(&u).abs() <= 1e-9 * p * g);
        let e = functionals::rayleigh(&u, p).unwrap();
        prop_assert!((functionals::rayleigh(&u.scaled(s), p).unwrap() - e).abs() <= 1e-11 * e);
    }

    #[test]
    fn pointwise_inequalities(w1 in prop::collection::vec(-10.0f64..10.0, 1..4), w2 in prop::collection::vec(-10.0f64..10.0, 1..4), p in prop::sample::select(vec![1.2, 1.5, 2.0, 3.0, 4.0, 6.0])) {
        let n = w1.len().min(w2.len());
        for which in Inequality::ALL {
            if which.applies(p) {
                let b = functionals::inequalities::evaluate(which, &w1[..n], &w2[..n], p).unwrap();
                prop_assert!(b.holds(), "{which} p={p} {b:?}");
            }
        }
    }

    #[test]
    fn monotonicity_and_convexity(a in prop::collection::vec(-2.0f64..2.0, 5..30), b in prop::collection::vec(-2.0f64..2.0, 5..30), p in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let dom = &domains()[1];
        let u = function(dom, &a);
        let v = function(dom, &b);
        let gap = functionals::monotonicity_gap(&u, &v, p).unwrap();
        prop_assert!(gap.holds(), "{gap:?}");
        let (su, sv) = (seminorm_x(&u, p).unwrap(), seminorm_x(&v, p).unwrap());
        prop_assume!(su > 1e-8 && sv > 1e-8);
        let un = u.scaled(1.0 / su);
        let vn = v.scaled(1.0 / sv);
        let c = functionals::uniform_convexity_check(&un, &vn, p).unwrap();
        prop_assert!(c.holds(), "{c:?}");
    }
}
