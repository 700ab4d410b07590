//! Cross-checks against a dense eigensolve of the matrix of `X*X`, assembled
//! column by column from the operators themselves.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use subspec::fields::FieldFamily;
use subspec::spectrum::{
    build_frames, minimize_lambda1, nested_maxmin, subspace_maxmin, MaxMinConfig, SolverConfig, SubspaceFrame,
};
use subspec::{apply_x, apply_x_star, DiscreteDomain, GridFunction};

fn dense_operator(dom: &Arc<DiscreteDomain>) -> DMatrix<f64> {
    let n = dom.num_interior();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let u = GridFunction::from_interior(dom, &e).unwrap();
        let col = apply_x_star(&apply_x(&u)).interior_values();
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    a
}

fn dense_spectrum(dom: &Arc<DiscreteDomain>) -> Vec<f64> {
    let a = dense_operator(dom);
    let a = (&a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest eigenvalue of the `(G, F)` pencil restricted to `span(fns)`.
fn restricted_pencil_max(fns: &[GridFunction]) -> f64 {
    let n = fns.len();
    let xs: Vec<_> = fns.iter().map(apply_x).collect();
    let g = DMatrix::from_fn(n, n, |i, j| xs[i].dot(&xs[j]));
    let f = DMatrix::from_fn(n, n, |i, j| fns[i].dot(&fns[j]));
    let l = f.cholesky().unwrap().l();
    let linv = l.try_inverse().unwrap();
    let m = &linv * g * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::MIN, f64::max)
}

#[test]
fn quadratic_ground_state_matches_dense_solve() {
    for (fam, n) in [
        (FieldFamily::euclidean(2).unwrap(), 24),
        (FieldFamily::grushin(2, 1).unwrap(), 24),
        (FieldFamily::grushin(2, 2).unwrap(), 16),
        (FieldFamily::Heisenberg, 6),
    ] {
        let dom = DiscreteDomain::uniform(fam.clone(), n).unwrap();
        let exact = dense_spectrum(&dom)[0];
        let pair = minimize_lambda1(&dom, 2.0, &SolverConfig::default()).unwrap();
        assert!((pair.lambda - exact).abs() <= 1e-6 * exact, "{fam}: {} vs {exact}", pair.lambda);
    }
}

#[test]
fn frame_maxima_match_restricted_pencil() {
    let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 20).unwrap();
    let frames = build_frames(&dom, 4, 11).unwrap();
    let res = nested_maxmin(&frames, 2.0, &MaxMinConfig::default()).unwrap();
    let dense = dense_spectrum(&dom);
    for (k, (f, r)) in frames.iter().zip(&res).enumerate() {
        let oracle = restricted_pencil_max(f.functions());
        assert!((r.value - oracle).abs() <= 1e-8 * oracle, "frame {}: {} vs {oracle}", k + 1, r.value);
        assert!((r.value - dense[k]).abs() <= 1e-8 * dense[k]);
    }
    // a frame unrelated to the pencil
    let fns: Vec<_> = (1..=3)
        .map(|k| GridFunction::from_fn(&dom, move |x| (x[0] + 1.0).powi(k) * (1.0 - x[0]) * (1.0 - x[1] * x[1]) * (1.0 + 0.3 * x[1]).powi(k)))
        .collect();
    let frame = SubspaceFrame::new(fns.clone()).unwrap();
    let r = subspace_maxmin(&frame, 2.0, &MaxMinConfig::default()).unwrap();
    let oracle = restricted_pencil_max(&fns);
    assert!((r.value - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", r.value);
}

#[test]
fn euclidean_mode_table() {
    let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 64).unwrap();
    let frames = build_frames(&dom, 5, 0).unwrap();
    let res = nested_maxmin(&frames, 2.0, &MaxMinConfig::default()).unwrap();
    for (r, k) in res.iter().zip([2.0, 5.0, 5.0, 8.0, 10.0]) {
        let exact = k * PI * PI;
        assert!((r.value - exact).abs() <= 0.02 * exact, "{} vs {exact}", r.value);
    }
}

#[test]
fn analytic_two_mode_frame() {
    let dom = DiscreteDomain::uniform(FieldFamily::euclidean(2).unwrap(), 128).unwrap();
    let s = |a: f64, b: f64| move |x: &[f64]| (a * PI * x[0]).sin() * (b * PI * x[1]).sin();
    let frame = SubspaceFrame::new(vec![GridFunction::from_fn(&dom, s(1.0, 1.0)), GridFunction::from_fn(&dom, s(2.0, 1.0))]).unwrap();
    let r = subspace_maxmin(&frame, 2.0, &MaxMinConfig::default()).unwrap();
    assert!((r.value - 5.0 * PI * PI).abs() <= 0.02 * 5.0 * PI * PI);
}

#[test]
fn frame_bounds_dominate_ground_state_for_other_exponents() {
    let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 16).unwrap();
    let frames = build_frames(&dom, 4, 0).unwrap();
    for p in [1.5, 3.0] {
        let pair = minimize_lambda1(&dom, p, &SolverConfig::default()).unwrap();
        let res = nested_maxmin(&frames, p, &MaxMinConfig::default()).unwrap();
        assert!(pair.lambda <= res[0].value * (1.0 + 1e-10));
        assert!(res.windows(2).all(|w| w[1].value >= w[0].value));
    }
}
