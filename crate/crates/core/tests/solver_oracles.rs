//! Independent-oracle checks of the interpolation and SVM solvers:
//! pseudoinverse reference solutions, brute-force active-set search,
//! KKT verification on random instances, and the exhaustive label sweep
//! tying the slackness certificate to solver agreement.

use minterp::linalg::Cholesky;
use minterp::rng::{self, tags};
use minterp::solvers::{
    SolverOptions, gram_matrix, kkt_check, min_norm_interpolate, slackness_predictor,
    solve_svm_hard_margin, support_vector_fraction,
};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ShapeBuilder};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut stream = rng::stream(seed);
    let mut phi = Array2::zeros((n, d).f());
    for v in phi.iter_mut() {
        *v = StandardNormal.sample(&mut stream);
    }
    phi
}

fn random_labels(n: usize, seed: u64) -> Array1<f64> {
    let mut stream = rng::stream(seed);
    Array1::from_iter((0..n).map(|_| if stream.random::<bool>() { 1.0 } else { -1.0 }))
}

fn pinv_solution(phi: &Array2<f64>, targets: &Array1<f64>) -> Array1<f64> {
    let (n, d) = phi.dim();
    let m = DMatrix::from_fn(n, d, |i, j| phi[[i, j]]);
    let pinv = m.svd(true, true).pseudo_inverse(1e-12).expect("svd converges");
    let t = nalgebra::DVector::from_fn(n, |i, _| targets[i]);
    let alpha = pinv * t;
    Array1::from_iter(alpha.iter().copied())
}

fn rel_linf(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn min_norm_matches_pseudoinverse_on_random_instances() {
    for case in 0..50u64 {
        let seed = rng::derive_seed(1000, tags::GENERIC, case);
        let mut sizes = rng::stream(seed);
        let n = sizes.random_range(1..=10usize);
        let d = sizes.random_range(n..=40usize);
        let phi = random_matrix(n, d, rng::derive_seed(seed, tags::COLUMN, 0));
        let mut tstream = rng::stream(rng::derive_seed(seed, tags::VALUE, 0));
        let targets = Array1::from_iter((0..n).map(|_| {
            let v: f64 = StandardNormal.sample(&mut tstream);
            2.0 * v
        }));
        let coeff = min_norm_interpolate(&phi, &targets, &SolverOptions::linear())
            .unwrap_or_else(|e| panic!("case {case} (n={n}, d={d}): {e}"));
        let oracle = pinv_solution(&phi, &targets);
        let gap = rel_linf(&coeff.alpha, &oracle);
        assert!(gap <= 1e-8, "case {case} (n={n}, d={d}): gap {gap}");
    }
}

#[test]
fn svm_satisfies_kkt_on_random_instances() {
    for case in 0..50u64 {
        let seed = rng::derive_seed(2000, tags::GENERIC, case);
        let mut sizes = rng::stream(seed);
        let n = sizes.random_range(1..=10usize);
        let d = sizes.random_range(n.max(2)..=40usize);
        let phi = random_matrix(n, d, rng::derive_seed(seed, tags::COLUMN, 0));
        let y = random_labels(n, rng::derive_seed(seed, tags::NOISE, 0));
        let (coeff, dual) = solve_svm_hard_margin(&phi, &y, &SolverOptions::svm())
            .unwrap_or_else(|e| panic!("case {case} (n={n}, d={d}): {e}"));
        let report = kkt_check(&phi, &y, &coeff.alpha, &dual.beta, 1e-8);
        assert!(
            report.feasible,
            "case {case} (n={n}, d={d}): {report:?}, gap {}",
            dual.kkt_gap
        );
        assert!(dual.kkt_gap <= 1e-8);
    }
}

#[test]
fn svm_matches_active_set_enumeration_for_two_points() {
    for case in 0..20u64 {
        let seed = rng::derive_seed(3000, tags::GENERIC, case);
        let phi = random_matrix(2, 5, seed);
        let y = random_labels(2, rng::derive_seed(seed, tags::NOISE, 0));
        let a = gram_matrix(&phi);
        // enumerate nonempty active sets; margins are 1 on the set, beta 0 off it
        let mut best: Option<(f64, [f64; 2])> = None;
        for mask in 1..4u8 {
            let idx: Vec<usize> = (0..2).filter(|i| mask & (1 << i) != 0).collect();
            let beta = match idx.len() {
                1 => {
                    let i = idx[0];
                    let mut b = [0.0; 2];
                    b[i] = y[i] / a[[i, i]];
                    b
                }
                _ => {
                    let det = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]];
                    [
                        (a[[1, 1]] * y[0] - a[[0, 1]] * y[1]) / det,
                        (a[[0, 0]] * y[1] - a[[1, 0]] * y[0]) / det,
                    ]
                }
            };
            // feasibility: correct signs on the set, margins >= 1 off it
            let mut ok = true;
            for i in 0..2 {
                let m: f64 = (0..2).map(|j| a[[i, j]] * beta[j]).sum::<f64>() * y[i];
                if idx.contains(&i) {
                    ok &= y[i] * beta[i] >= -1e-12;
                } else {
                    ok &= m >= 1.0 - 1e-12;
                }
            }
            if !ok {
                continue;
            }
            let objective = (0..2).map(|i| y[i] * beta[i]).sum::<f64>()
                - 0.5
                    * (0..2)
                        .map(|i| (0..2).map(|j| beta[i] * a[[i, j]] * beta[j]).sum::<f64>())
                        .sum::<f64>();
            if best.map_or(true, |(obj, _)| objective > obj) {
                best = Some((objective, beta));
            }
        }
        let (_, beta_oracle) = best.expect("some active set is feasible");
        let alpha_oracle = phi.t().dot(&Array1::from_iter(beta_oracle));
        let (coeff, _) = solve_svm_hard_margin(&phi, &y, &SolverOptions::svm()).unwrap();
        let gap = rel_linf(&coeff.alpha, &alpha_oracle);
        assert!(gap <= 1e-7, "case {case}: gap {gap}");
    }
}

#[test]
fn interpolator_lies_in_row_space_and_has_minimal_norm() {
    for case in 0..20u64 {
        let seed = rng::derive_seed(4000, tags::GENERIC, case);
        let mut sizes = rng::stream(seed);
        let n = sizes.random_range(2..=8usize);
        let d = sizes.random_range(n + 2..=30usize);
        let phi = random_matrix(n, d, rng::derive_seed(seed, tags::COLUMN, 0));
        let y = random_labels(n, rng::derive_seed(seed, tags::NOISE, 0));
        let coeff = min_norm_interpolate(&phi, &y, &SolverOptions::linear()).unwrap();

        // row-space membership: alpha equals its own projection onto the rows
        let a = gram_matrix(&phi);
        let ch = Cholesky::factor(&a.view()).expect("gaussian gram is PD");
        let mut u = phi.dot(&coeff.alpha);
        ch.solve_in_place(u.as_slice_mut().unwrap());
        let projected = phi.t().dot(&u);
        assert!(rel_linf(&projected, &coeff.alpha) <= 1e-8, "case {case}");

        // any null-space shift keeps interpolation but grows the norm
        let mut vstream = rng::stream(rng::derive_seed(seed, tags::VALUE, 1));
        let v = Array1::from_iter((0..d).map(|_| {
            let x: f64 = StandardNormal.sample(&mut vstream);
            x
        }));
        let mut pv = phi.dot(&v);
        ch.solve_in_place(pv.as_slice_mut().unwrap());
        let v_null = &v - &phi.t().dot(&pv);
        let shifted = &coeff.alpha + &v_null;
        let resid = phi.dot(&shifted) - &phi.dot(&coeff.alpha);
        assert!(resid.iter().all(|r| r.abs() < 1e-7), "null shift broke interpolation");
        let base: f64 = coeff.alpha.iter().map(|x| x * x).sum();
        let grown: f64 = shifted.iter().map(|x| x * x).sum();
        let null_mass: f64 = v_null.iter().map(|x| x * x).sum();
        assert!(grown >= base - 1e-10);
        if null_mass > 1e-8 {
            assert!(grown > base, "case {case}: perturbed norm did not grow");
        }
    }
}

#[test]
fn solutions_scale_correctly_with_feature_scaling() {
    let seed = rng::derive_seed(5000, tags::GENERIC, 0);
    let n = 6;
    let d = 200; // overparameterized enough that all points are support vectors
    let phi = random_matrix(n, d, seed);
    let y = random_labels(n, rng::derive_seed(seed, tags::NOISE, 0));
    let base_mn = min_norm_interpolate(&phi, &y, &SolverOptions::linear()).unwrap();
    let (base_svm, _) = solve_svm_hard_margin(&phi, &y, &SolverOptions::svm()).unwrap();
    for c in [0.5, 2.0, 17.0] {
        let scaled = phi.mapv(|v| c * v);
        let mn = min_norm_interpolate(&scaled, &y, &SolverOptions::linear()).unwrap();
        let expected = base_mn.alpha.mapv(|v| v / c);
        assert!(rel_linf(&mn.alpha, &expected) <= 1e-10, "min-norm at c = {c}");
        let (svm, _) = solve_svm_hard_margin(&scaled, &y, &SolverOptions::svm()).unwrap();
        let expected = base_svm.alpha.mapv(|v| v / c);
        assert!(rel_linf(&svm.alpha, &expected) <= 1e-9, "svm at c = {c}");
    }
}

#[test]
fn equivalence_dichotomy_on_random_instances() {
    let mut saw_all_sv = false;
    let mut saw_slack = false;
    for case in 0..30u64 {
        let seed = rng::derive_seed(6000, tags::GENERIC, case);
        let mut sizes = rng::stream(seed);
        // aspect ratios near 1 leave slack margins; wide ones certify all-SV
        let n = 10;
        let d = sizes.random_range(11..=40usize);
        let phi = random_matrix(n, d, rng::derive_seed(seed, tags::COLUMN, 0));
        let y = random_labels(n, rng::derive_seed(seed, tags::NOISE, 0));
        let cert = slackness_predictor(&phi, &y).unwrap();
        let (svm, _) = solve_svm_hard_margin(&phi, &y, &SolverOptions::svm()).unwrap();
        if cert.all_sv {
            saw_all_sv = true;
            let mn = min_norm_interpolate(&phi, &y, &SolverOptions::linear()).unwrap();
            let gap = rel_linf(&svm.alpha, &mn.alpha);
            assert!(gap <= 1e-6, "case {case} (d={d}): certified but solutions differ by {gap}");
            assert_eq!(support_vector_fraction(&phi, &y, &svm.alpha, 1e-6), 1.0);
        } else {
            saw_slack = true;
            let margins = &y * &phi.dot(&svm.alpha);
            let loose = margins.iter().any(|&m| m > 1.0 + 1e-6);
            assert!(loose, "case {case} (d={d}): no strictly slack margin");
        }
    }
    assert!(saw_all_sv && saw_slack, "sweep failed to hit both sides of the dichotomy");
}

#[test]
fn certificate_predicts_equivalence_for_every_label_vector() {
    // isotropic features wide enough to satisfy the general l1-vs-l2 spectral
    // condition, so every one of the 2^n label vectors must be all-SV
    let n = 8;
    let d = 720_000;
    let phi = random_matrix(n, d, rng::derive_seed(7000, tags::COLUMN, 0));
    let spectrum = minterp::ensembles::build_spectrum(&minterp::ensembles::EnsembleSpec::Isotropic { n, d })
        .unwrap();
    let condition = minterp::theory::all_sv_condition_general(&spectrum, n).unwrap();
    assert!(condition.holds, "lhs {} rhs {}", condition.lhs, condition.rhs);

    let a = gram_matrix(&phi);
    let ch = Cholesky::factor(&a.view()).expect("gram is PD");
    for mask in 0..(1u32 << n) {
        let y = Array1::from_iter((0..n).map(|i| if mask & (1 << i) != 0 { 1.0 } else { -1.0 }));
        let mut beta = y.clone();
        ch.solve_in_place(beta.as_slice_mut().unwrap());
        let min_value = (0..n).map(|i| y[i] * beta[i]).fold(f64::INFINITY, f64::min);
        assert!(min_value > 0.0, "certificate failed for mask {mask}: {min_value}");
    }

    // full solver agreement spot-checked on a few label vectors
    for mask in [0u32, 1, 0b10101010, 0b11001100, (1 << n) - 1] {
        let y = Array1::from_iter((0..n).map(|i| if mask & (1 << i) != 0 { 1.0 } else { -1.0 }));
        let cert = slackness_predictor(&phi, &y).unwrap();
        assert!(cert.all_sv);
        let (svm, dual) = solve_svm_hard_margin(&phi, &y, &SolverOptions::svm()).unwrap();
        let mn = min_norm_interpolate(&phi, &y, &SolverOptions::linear()).unwrap();
        assert!(rel_linf(&svm.alpha, &mn.alpha) <= 1e-6, "mask {mask}");
        assert_eq!(dual.iterations, 0, "warm start should already be optimal");
    }
}
