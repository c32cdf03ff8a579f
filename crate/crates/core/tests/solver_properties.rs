mod common;

use cgl_core::dynamics::analytic_covariance;
use cgl_core::graphs::{laplacian_of, validate_cgl};
use cgl_core::linalg;
use cgl_core::solvers::{
    hybrid, laplacian_from_weights, nearest_cgl, ordered_spec_temp, solve_spectral_templates, spec_temp_leigvec, TemplateOrder,
};
use cgl_core::spectral::inverse_filter;
use cgl_core::{Distance, FilterSpec, SampleCovariance, SolverConfig, WeightedGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `‖L(a) − L̂‖_F² + β Σ|L_ij|` evaluated on the dense matrices.
fn dense_objective(a: &[f64], l_hat: &DMatrix<f64>, beta: f64) -> f64 {
    let l = laplacian_from_weights(4, a);
    linalg::frobenius(&(&l - l_hat)).powi(2) + beta * l.iter().map(|v| v.abs()).sum::<f64>()
}

/// Grid over the six edge weights followed by a shrinking pattern search.
fn brute_force(l_hat: &DMatrix<f64>, beta: f64) -> [f64; 6] {
    let levels = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
    let mut best = [0.0; 6];
    let mut best_v = f64::INFINITY;
    let mut idx = [0usize; 6];
    loop {
        let a = idx.map(|i| levels[i]);
        let v = dense_objective(&a, l_hat, beta);
        if v < best_v {
            best_v = v;
            best = a;
        }
        let mut k = 0;
        while k < 6 {
            idx[k] += 1;
            if idx[k] < levels.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == 6 {
            break;
        }
    }
    let mut h = 0.25;
    while h > 1e-10 {
        let mut improved = false;
        for k in 0..6 {
            for s in [-h, h] {
                let mut a = best;
                a[k] = (a[k] + s).max(0.0);
                let v = dense_objective(&a, l_hat, beta);
                if v < best_v - 1e-15 {
                    best_v = v;
                    best = a;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}

fn noisy_four_node() -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(prop_oneof![Just(0.0), 0.2..2.0f64], 6), prop::collection::vec(-0.3..0.3f64, 16)).prop_map(|(w, noise)| {
        let l = laplacian_from_weights(4, &w);
        let e = DMatrix::from_column_slice(4, 4, &noise);
        l + (&e + e.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_form_matches_dense_brute_force(l_hat in noisy_four_node(), beta in prop_oneof![Just(0.0), Just(0.05)]) {
        let cfg = SolverConfig { beta, opt_tol: 1e-12, max_iters: 200_000, ..Default::default() };
        let sol = nearest_cgl(&l_hat, &cfg).unwrap();
        let oracle = brute_force(&l_hat, beta);
        for k in 0..6 {
            prop_assert!((sol.weights[k] - oracle[k]).abs() <= 1e-4, "edge {}: {:?} vs {:?}", k, sol.weights, oracle);
        }
    }

    #[test]
    fn every_solver_returns_a_valid_cgl(l_hat in noisy_four_node(), beta in 0.0..0.1f64, eta in 1usize..4) {
        for distance in [Distance::FrobeniusSq, Distance::MaxNorm] {
            let cfg = SolverConfig { beta, distance, ..Default::default() };
            let sol = nearest_cgl(&l_hat, &cfg).unwrap();
            prop_assert!(validate_cgl(&sol.l_star, 1e-6).unwrap().passed);
        }
        let (_, u) = linalg::eigh_descending(&linalg::symmetrize(&l_hat));
        for order in [TemplateOrder::Lagged { eta }, TemplateOrder::LeadingOnly] {
            let cfg = SolverConfig { beta, eta, ..Default::default() };
            let sol = solve_spectral_templates(&u, &cfg, order).unwrap();
            prop_assert!(validate_cgl(&sol.l_star, 1e-6).unwrap().passed);
            let g = sol.gamma_star.unwrap();
            prop_assert_eq!(g[3], 1.0);
            if let TemplateOrder::Lagged { eta } = order {
                for i in 0..4 - eta {
                    prop_assert!(g[i] <= g[i + eta] + 1e-8, "{:?}", g);
                }
            }
        }
    }
}

#[test]
fn two_node_exact_data_recovers_the_edge() {
    let w = 0.8;
    let l = laplacian_of(&WeightedGraph::new(2, [(0, 1, w)]).unwrap());
    let f = FilterSpec::constant(0.5 / l.lambda_max(), 2).unwrap();
    let cov = SampleCovariance::from_matrix(analytic_covariance(&l, &f, 1.0).unwrap());
    let exact = SolverConfig { opt_tol: 1e-12, ..Default::default() };

    let est = inverse_filter(&cov, &f).unwrap();
    assert!((est.lambda_hat[1] - 2.0 * w).abs() < 1e-10);
    let near = nearest_cgl(&est.l_hat, &exact).unwrap();
    assert!((near.weights[0] - w).abs() < 1e-10);

    // Template methods recover up to scale; the scale is fixed by the last coefficient.
    for sol in [
        ordered_spec_temp(&cov, &SolverConfig { epsilon: Some(0.0), ..exact.clone() }).unwrap(),
        spec_temp_leigvec(&cov, &SolverConfig { epsilon: Some(0.0), ..exact.clone() }).unwrap(),
    ] {
        assert!((sol.weights[0] - 0.5).abs() < 1e-8, "{:?}", sol.weights);
    }
    let hy = hybrid(&cov, &SolverConfig { epsilon: Some(0.0), t_max: 4, ..exact.clone() }).unwrap();
    // With a single nonzero eigenvalue every time fits equally well; ties go to t = 1.
    assert_eq!(hy.t_hat, 1);
    assert!(cgl_core::metrics::recovery_error(&hy.solution.l_star, l.matrix(), true).unwrap() < 1e-10);

    #[cfg(feature = "structglasso")]
    {
        let g = cgl_core::solvers::struct_glasso_baseline(l.matrix(), 0.0, &exact).unwrap();
        assert!((g.weights[0] - w).abs() < 1e-8);
    }
}
