//! End-to-end runs through the public API at small sizes.

use parafermion::bounds::{minimal_beta, nontriviality_lower_bound, BETA_REFINE_TOL, BETA_X_MAX};
use parafermion::discrete::{count_walks, critical_x, max_relation_residual, HexDomain};
use parafermion::loewner_flow::{sample_driving_path, trace_curve};
use parafermion::observable::{
    estimate_f0, estimate_from_samples, exponents_from, predicted_f, t_infinity_values, McConfig,
};
use parafermion::Complex64;

#[test]
fn estimate_is_reproducible_and_respects_the_bound() {
    let mc = McConfig { n: 400, dt: 2e-3, delta: 1e-2, tail_tol: 1e-3, seed: 11 };
    let e = exponents_from(4.0, 0.25).unwrap();
    let one = estimate_f0(&e, &mc).unwrap();
    let two = estimate_f0(&e, &mc).unwrap();
    assert_eq!(one, two);
    assert_eq!(one.dropped, 0);

    let beta = minimal_beta(e.a, BETA_X_MAX, BETA_REFINE_TOL).unwrap().beta_min;
    let lb = nontriviality_lower_bound(e.a, e.sigma, beta).unwrap();
    assert!(one.mean.re > lb - 4.0 * one.stderr, "{} vs {lb}", one.mean.re);
    assert!(one.mean.im.abs() < 4.0 * one.stderr);
}

#[test]
fn shared_samples_serve_several_spins() {
    let mc = McConfig { n: 200, dt: 2e-3, delta: 1e-2, tail_tol: 1e-3, seed: 3 };
    let samples = t_infinity_values(1.0, &mc).unwrap();
    let zero = estimate_from_samples(&exponents_from(2.0, 0.0).unwrap(), &samples.values, samples.dropped);
    assert_eq!(zero.mean, Complex64::new(1.0, 0.0));
    let e = exponents_from(2.0, 0.3).unwrap();
    assert_eq!(estimate_from_samples(&e, &samples.values, samples.dropped), estimate_f0(&e, &mc).unwrap());
}

#[test]
fn prediction_at_origin_is_f0() {
    let e = exponents_from(3.0, 0.2).unwrap();
    let f0 = Complex64::new(0.9, -0.05);
    assert!((predicted_f(Complex64::new(0.0, 0.0), &e, f0).unwrap() - f0).norm() < 1e-15);
}

#[test]
fn traced_curve_stays_in_disk() {
    let path = sample_driving_path(5, 0.5, 1e-3).unwrap();
    let curve = trace_curve(&path, 0.5, 1e-3).unwrap();
    assert!(curve.points.iter().all(|p| p.norm() < 1.0));
}

#[test]
fn hexagon_observable_is_discretely_holomorphic() {
    let d = HexDomain::from_text("0 0\n1 0\n0 1\n1 -1\n-1 1\n").unwrap();
    for &w in d.boundary_mid_edges().iter().step_by(3) {
        let f = count_walks(&d, w, d.vertices.len()).unwrap().field(critical_x(), 0.625);
        assert!(max_relation_residual(&d, &f).1 < 1e-12);
    }
}
