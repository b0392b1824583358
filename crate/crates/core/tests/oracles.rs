mod common;

use approx::assert_relative_eq;
use common::*;
use rmlab::matrices::{operator_norm, sample_matrix, smallest_singular_value, LuFactorization, SquareMatrix};
use rmlab::EntryDistribution;

#[test]
fn subset_minimum_matches_exhaustive_search() {
    let (checked, bad) = subset_oracle(2000, 11);
    assert_eq!(bad, 0, "{bad} of {checked} instances disagree");
}

#[test]
fn enumeration_inside_convolution_interval() {
    let (checked, bad) = convolution_oracle(200, 12);
    assert_eq!(bad, 0, "{bad} of {checked} instances disagree");
}

#[test]
fn extreme_singular_values_match_jacobi() {
    let worst = spectral_oracle(100, 13);
    assert!(worst <= 1e-8, "worst deviation {worst}");
}

#[test]
fn jacobi_reference_on_known_matrices() {
    let d = SquareMatrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.5]]);
    assert_eq!(jacobi_singular_values(&d), vec![3.0, 1.0, 0.5]);
    // [[1,1],[0,1]] has singular values (√5 ± 1)/2
    let j = jacobi_singular_values(&SquareMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]));
    assert_relative_eq!(j[0], (5f64.sqrt() + 1.0) / 2.0, epsilon = 1e-14);
    assert_relative_eq!(j[1], (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-14);
}

fn inverse(a: &SquareMatrix<f64>) -> SquareMatrix<f64> {
    let n = a.dim();
    let lu = LuFactorization::factor(a, 1e-14).unwrap();
    let mut inv = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in lu.solve(&e).into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    inv
}

#[test]
fn sigma_min_times_inverse_norm_is_one() {
    for seed in 0..20 {
        let a = sample_matrix::<f64>(&EntryDistribution::Gaussian, 3 + seed as usize % 8, seed).unwrap().matrix;
        let smin = smallest_singular_value(&a, 1e-14, 1, tight());
        let inv_norm = operator_norm(&inverse(&a), 2, tight()).value;
        assert_relative_eq!(smin.value * inv_norm, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn singular_values_scale_with_the_matrix() {
    for seed in 0..20 {
        let a = sample_matrix::<f64>(&EntryDistribution::Gaussian, 5, 100 + seed).unwrap().matrix;
        let norm = operator_norm(&a, 1, tight()).value;
        let smin = smallest_singular_value(&a, 1e-14, 1, tight()).value;
        for c in [2.0, -3.0] {
            let b = a.scaled(c);
            assert_relative_eq!(operator_norm(&b, 1, tight()).value, c.abs() * norm, max_relative = 1e-9);
            assert_relative_eq!(smallest_singular_value(&b, 1e-14, 1, tight()).value, c.abs() * smin, max_relative = 1e-9);
        }
    }
}
