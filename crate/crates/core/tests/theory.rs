use approx::assert_abs_diff_eq;
use focal_core::theory::{
    gibbs_bound_check, misallocation_mc, preferred_direction, static_gap, xi_surrogate,
    HeadroomModel, LatentModel,
};
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn scalar_misallocation_matches_gaussian_tail() {
    // With K = 1 the misallocation event is {η + ζ <= 0}, probability Φ(-η/σ).
    let model = LatentModel::isotropic(vec![3.0], 1.0).unwrap();
    let est = misallocation_mc(&[1.0], &model, 1_000_000, 2024).unwrap();
    let exact = Normal::standard().cdf(-3.0);
    assert_abs_diff_eq!(exact, 0.0013498980316301, epsilon = 1e-12);
    assert!((est.empirical_rate - exact).abs() <= 4.0 * est.std_err);
    assert_abs_diff_eq!(est.bound, (-4.5f64).exp(), epsilon = 1e-15);
    assert!(est.empirical_rate + 3.0 * est.std_err <= est.bound);
}

#[test]
fn anisotropic_tail_uses_the_worse_label() {
    // Two labels with different noise; the exact failure rate is the
    // label-weighted mix of the two Gaussian tails.
    let eta = vec![1.0, 0.5];
    let plus = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let minus = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 2.0]);
    let model = LatentModel::new(eta.clone(), plus.clone(), minus.clone(), 0.3).unwrap();
    let a = [0.8, 0.6];
    let signal = a[0] * eta[0] + a[1] * eta[1];
    let var = |m: &DMatrix<f64>| {
        let v = nalgebra::DVector::from_column_slice(&a);
        (v.transpose() * m * &v)[(0, 0)]
    };
    let n = Normal::standard();
    let exact = 0.3 * n.cdf(-signal / var(&plus).sqrt()) + 0.7 * n.cdf(-signal / var(&minus).sqrt());
    let est = misallocation_mc(&a, &model, 400_000, 5).unwrap();
    assert!((est.empirical_rate - exact).abs() <= 4.0 * est.std_err);
    let xi = signal * signal / var(&plus).max(var(&minus));
    assert_abs_diff_eq!(xi_surrogate(&a, &model).unwrap(), xi, epsilon = 1e-12);
    assert!(exact <= (-xi / 2.0).exp());
}

#[test]
fn misallocation_is_reproducible() {
    let model = LatentModel::isotropic(vec![0.4, 0.2], 1.0).unwrap();
    let a = misallocation_mc(&[1.0, 1.0], &model, 10_001, 9).unwrap();
    let b = misallocation_mc(&[1.0, 1.0], &model, 10_001, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples, 10_001);
}

#[test]
fn worked_gap_example() {
    let m = HeadroomModel::new(vec![1.0, 1.0], vec![1.0, 0.0], 1.0, 1.0, 1.0).unwrap();
    let g = static_gap(&m).unwrap();
    assert_abs_diff_eq!(g.closed_form, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(g.oracle, 0.5, epsilon = 1e-15);
    let d = preferred_direction(&m).unwrap();
    assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
}

#[test]
fn logistic_frontier_case() {
    for (delta, t) in [(5.0, 10.0), (1.0, 0.5), (30.0, 2.0)] {
        let c = gibbs_bound_check(&[delta, 0.0], &[0], t, &[0.25, 0.75]).unwrap();
        let x: f64 = delta / t;
        assert_abs_diff_eq!(c.mass_out, 1.0 / (1.0 + x.exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(c.bound, (-x).exp(), epsilon = 1e-15);
        // P_S = z_1, so |P - P_S| = (1 - ρ)|z_2 - z_1|.
        assert_abs_diff_eq!(c.p_gap, 0.5 * c.mass_out, epsilon = 1e-15);
        assert!(c.holds(0.0));
    }
}
