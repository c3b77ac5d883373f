mod common;

use common::{normal_vec, random_chain, random_instance, rng, FeatureKind};
use linear_td::linalg::{kernel_basis, max_principal_angle_sin, orthogonal_complement, RankCutoff};
use linear_td::mdp::{differential_value, discounted_value, stationary_distribution};
use linear_td::oracle::{
    ar_solution_set, build_system, feature_decomposition, lambda_operators, neg_def_margin, ones_fit_residual,
    solution_set, x1_substitution_gap, AffineSet, Analysis, Setting,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const CUT: RankCutoff = RankCutoff { rel: 1e-12 };

fn series_operators(p: &DMatrix<f64>, r: &DVector<f64>, gamma: f64, lambda: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = p.nrows();
    let mut pk = DMatrix::identity(n, n);
    let mut p_l = DMatrix::zeros(n, n);
    let mut r_l = DVector::zeros(n);
    let mut c = 1.0;
    for _ in 0..200 {
        r_l += &pk * r * c;
        pk = &pk * p;
        p_l += &pk * c;
        c *= gamma * lambda;
    }
    (p_l * (1.0 - lambda), r_l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lambda_operators_match_truncated_series(seed in any::<u64>(), gi in 0usize..4, li in 0usize..3) {
        let chain = random_chain(2 + (seed % 5) as usize, &mut rng(seed));
        let gamma = [0.5, 0.9, 0.99, 1.0][gi];
        let lambda = [0.0, 0.4, 0.8][li];
        let ops = lambda_operators(&chain, gamma, lambda).unwrap();
        let (p_s, r_s) = series_operators(&chain.p, &chain.r, gamma, lambda);
        prop_assert!((&ops.p_lambda - p_s).amax() < 1e-10);
        prop_assert!((&ops.r_lambda - r_s).amax() < 1e-10);
    }

    #[test]
    fn value_functions_are_fixed_points(seed in any::<u64>(), li in 0usize..3) {
        let chain = random_chain(2 + (seed % 7) as usize, &mut rng(seed));
        let lambda = [0.0, 0.4, 0.8][li];
        let n = chain.num_states();

        let gamma = 0.9;
        let v = discounted_value(&chain, gamma).unwrap();
        let ops = lambda_operators(&chain, gamma, lambda).unwrap();
        let tv = &ops.r_lambda + &ops.p_lambda * &v * gamma;
        prop_assert!((tv - &v).amax() < 1e-9);

        let vbar = differential_value(&chain).unwrap();
        let ops = lambda_operators(&chain, 1.0, lambda).unwrap();
        let shift = DVector::from_element(n, chain.avg_reward / (1.0 - lambda));
        let tv = &ops.r_lambda - shift + &ops.p_lambda * &vbar;
        prop_assert!((tv - &vbar).amax() < 1e-9);
    }

    #[test]
    fn stationary_distribution_matches_power_iteration(seed in any::<u64>()) {
        let chain = random_chain(2 + (seed % 7) as usize, &mut rng(seed));
        let mut d = DVector::from_element(chain.num_states(), 1.0 / chain.num_states() as f64);
        // Cesàro averaging converges even for slowly mixing chains.
        let mut avg = DVector::zeros(d.len());
        let iters = 20_000;
        for _ in 0..iters {
            d = chain.p.transpose() * d;
            avg += &d;
        }
        avg /= iters as f64;
        prop_assert!((stationary_distribution(&chain.p).unwrap() - &chain.d).amax() < 1e-14);
        prop_assert!((avg - &chain.d).amax() < 1e-3);
        prop_assert!((d - &chain.d).amax() < 1e-9);
    }

    #[test]
    fn stationary_dirichlet_form_has_constant_kernel(seed in any::<u64>(), li in 0usize..3) {
        let mut r = rng(seed);
        let chain = random_chain(2 + (seed % 7) as usize, &mut r);
        let n = chain.num_states();
        let lambda = [0.0, 0.4, 0.8][li];
        let ops = lambda_operators(&chain, 1.0, lambda).unwrap();
        let m = chain.d_matrix() * (&ops.p_lambda - DMatrix::identity(n, n));
        let ones = DVector::from_element(n, 3.7);
        prop_assert!(ones.dot(&(&m * &ones)).abs() < 1e-12);
        for _ in 0..100 {
            let v = normal_vec(n, &mut r);
            let centred = &v - DVector::from_element(n, v.mean());
            if centred.norm() < 1e-6 * v.norm() {
                continue;
            }
            prop_assert!(v.dot(&(&m * &v)) < 0.0);
        }
    }

    #[test]
    fn decomposition_invariants(seed in any::<u64>()) {
        let (_, x, kind) = random_instance(seed);
        let dec = feature_decomposition(&x, CUT).unwrap();
        let check = dec.check(&x);
        prop_assert!(check.holds(1e-10), "{check:?}");
        if kind == FeatureKind::OnesColumn || (kind == FeatureKind::HiddenOnes && x.dim() >= 2) {
            prop_assert!(dec.one_in_col_x);
        }
        prop_assert_eq!(dec.one_in_col_x, ones_fit_residual(x.matrix(), CUT) <= 1e-8 * (x.num_states() as f64).sqrt());
    }

    #[test]
    fn kernel_of_x1_shifts_values_by_constants(seed in any::<u64>()) {
        let (_, x, _) = random_instance(seed);
        let dec = feature_decomposition(&x, CUT).unwrap();
        for v in dec.kernel_x1().column_iter() {
            let xv = x.matrix() * v;
            prop_assert!(xv.max() - xv.min() < 1e-8);
        }
        if dec.one_in_col_x {
            let ones = DVector::from_element(x.num_states(), 1.0);
            let w = linear_td::linalg::pseudo_inverse(x.matrix(), CUT) * &ones;
            prop_assert!((x.matrix() * &w - &ones).norm() < 1e-8);
            prop_assert!((&dec.x1 * &w).norm() < 1e-8);
        }
    }

    #[test]
    fn average_reward_system_structure(seed in any::<u64>(), li in 0usize..3) {
        let (chain, x, _) = random_instance(seed);
        let lambda = [0.0, 0.4, 0.8][li];
        let dec = feature_decomposition(&x, CUT).unwrap();
        let ops = lambda_operators(&chain, 1.0, lambda).unwrap();
        prop_assert!(x1_substitution_gap(&ops, &chain, &x, &dec.x1, lambda) <= 1e-10);
        let sys = build_system(&chain, &x, Setting::AverageReward, lambda).unwrap();
        let set = ar_solution_set(&sys, &dec, CUT).unwrap();
        prop_assert!(sys.mean_field(set.particular()).norm() <= 1e-8);
        let angle = max_principal_angle_sin(set.basis(), &dec.kernel_x1());
        prop_assert!(angle.is_some_and(|s| s <= 1e-8));
    }

    #[test]
    fn discounted_kernel_is_feature_kernel(seed in any::<u64>(), li in 0usize..3) {
        let (chain, x, _) = random_instance(seed);
        let lambda = [0.0, 0.4, 0.8][li];
        let sys = build_system(&chain, &x, Setting::Discounted { gamma: 0.9 }, lambda).unwrap();
        let set = solution_set(&sys, CUT).unwrap();
        let angle = max_principal_angle_sin(set.basis(), &kernel_basis(x.matrix(), CUT));
        prop_assert!(angle.is_some_and(|s| s <= 1e-8));
        let comp = orthogonal_complement(set.basis(), x.dim());
        prop_assert!(neg_def_margin(&sys.a, &comp) > 0.0);
    }

    #[test]
    fn drift_inequality_on_random_points(seed in any::<u64>()) {
        let (chain, x, _) = random_instance(seed);
        let a = Analysis::from_chain(chain, &x, Setting::Discounted { gamma: 0.9 }, 0.5, 1.0, CUT).unwrap();
        let xi = a.margin();
        let mut r = rng(seed ^ 1);
        for _ in 0..100 {
            let w = normal_vec(x.dim(), &mut r) * 5.0;
            let g = a.solution.lyapunov_gradient(&w);
            let lhs = g.dot(&(&a.system.a * &g));
            prop_assert!(lhs <= -xi * g.norm_squared() + 1e-10 * g.norm_squared().max(1.0));
        }
    }

    #[test]
    fn combined_distance_identity(seed in any::<u64>(), li in 0usize..3) {
        let (chain, x, _) = random_instance(seed);
        let lambda = [0.0, 0.4, 0.8][li];
        let a = Analysis::from_chain(chain, &x, Setting::AverageReward, lambda, 2.0, CUT).unwrap();
        let mut r = rng(seed ^ 2);
        for _ in 0..20 {
            let w = normal_vec(x.dim(), &mut r) * 10.0;
            let j = common::normal(&mut r);
            let split = (j - a.chain.avg_reward).powi(2) + a.distance_sq(&w);
            let joint = a.combined_distance_sq(j, &w).unwrap();
            prop_assert!((split - joint).abs() <= 1e-10 * split.max(1.0));
        }
        let tilde = a.tilde.as_ref().unwrap();
        let star = tilde.solution(&a.solution);
        prop_assert!(tilde.mean_field(star.particular()).norm() <= 1e-8);
        if lambda == 0.0 {
            let xd = x.matrix().transpose() * &a.chain.d;
            prop_assert!((&tilde.trace_mean - xd).amax() < 1e-15);
        }
    }
}

fn random_affine(dim: usize, k: usize, seed: u64) -> (AffineSet, DMatrix<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let raw = common::normal_mat(dim, k, &mut r);
    let p = normal_vec(dim, &mut r);
    let q = raw.clone().qr().q();
    (AffineSet::new(p.clone(), q).unwrap(), raw, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_matches_least_squares(seed in any::<u64>(), k in 0usize..5) {
        let (set, raw, p) = random_affine(5, k, seed);
        let mut r = rng(seed ^ 3);
        for _ in 0..10 {
            let w = normal_vec(5, &mut r) * 3.0;
            let brute = if k == 0 {
                p.clone()
            } else {
                let gram = raw.transpose() * &raw;
                let z = gram.lu().solve(&(raw.transpose() * (&w - &p))).unwrap();
                &p + &raw * z
            };
            prop_assert!((set.project(&w) - &brute).amax() < 1e-9);
            prop_assert!((set.distance_sq(&w) - (&w - &brute).norm_squared()).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(seed in any::<u64>(), k in 0usize..5) {
        let (set, _, _) = random_affine(5, k, seed);
        let mut r = rng(seed ^ 4);
        for _ in 0..20 {
            let u = normal_vec(5, &mut r) * 4.0;
            let v = normal_vec(5, &mut r) * 4.0;
            let pu = set.project(&u);
            prop_assert!((set.project(&pu) - &pu).amax() < 1e-12);
            prop_assert!((&pu - set.project(&v)).norm() <= (&u - &v).norm() * (1.0 + 1e-10));
            prop_assert!((set.basis().transpose() * (&u - &pu)).amax() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_gradient_matches_finite_differences(seed in any::<u64>(), k in 0usize..5) {
        let (set, _, _) = random_affine(5, k, seed);
        let mut r = rng(seed ^ 5);
        let w = normal_vec(5, &mut r) * 2.0;
        let h = 1e-5;
        let fd = DVector::from_fn(5, |i, _| {
            let mut e = DVector::zeros(5);
            e[i] = h;
            (set.lyapunov(&(&w + &e)) - set.lyapunov(&(&w - &e))) / (2.0 * h)
        });
        let g = set.lyapunov_gradient(&w);
        prop_assert!((&fd - &g).norm() <= 1e-5 * g.norm().max(1e-3));
    }

    #[test]
    fn lyapunov_is_one_smooth(seed in any::<u64>(), k in 0usize..5) {
        let (set, _, _) = random_affine(5, k, seed);
        let mut r = rng(seed ^ 6);
        for _ in 0..50 {
            let w = normal_vec(5, &mut r) * 3.0;
            let w2 = normal_vec(5, &mut r) * 3.0;
            let bound = set.lyapunov(&w) + set.lyapunov_gradient(&w).dot(&(&w2 - &w)) + 0.5 * (&w2 - &w).norm_squared();
            prop_assert!(set.lyapunov(&w2) <= bound + 1e-10);
        }
    }

    #[test]
    fn distances_ignore_choice_of_particular_point(seed in any::<u64>(), k in 1usize..5) {
        let (set, _, _) = random_affine(5, k, seed);
        let mut r = rng(seed ^ 7);
        let other = set.member(&normal_vec(k, &mut r));
        let moved = set.with_particular(other).unwrap();
        for _ in 0..10 {
            let w = normal_vec(5, &mut r) * 3.0;
            prop_assert!((set.distance_sq(&w) - moved.distance_sq(&w)).abs() < 1e-10);
        }
    }
}

#[test]
fn lambda_one_discounted_kills_bootstrap() {
    let chain = random_chain(4, &mut rng(11));
    let ops = lambda_operators(&chain, 0.9, 1.0).unwrap();
    assert_eq!(ops.p_lambda.amax(), 0.0);
    let v = discounted_value(&chain, 0.9).unwrap();
    assert!((ops.r_lambda - v).amax() < 1e-12);
}

#[test]
fn discounted_value_matches_series() {
    let chain = random_chain(5, &mut rng(12));
    let gamma = 0.99;
    let mut v = DVector::zeros(5);
    let mut term = chain.r.clone();
    for _ in 0..10_000 {
        v += &term;
        term = &chain.p * term * gamma;
    }
    assert!((discounted_value(&chain, gamma).unwrap() - v).amax() < 1e-9);
}

#[test]
fn differential_value_matches_cesaro_series() {
    let chain = random_chain(5, &mut rng(13));
    let n = 5;
    let shift = DVector::from_element(n, chain.avg_reward);
    let mut partial = DVector::zeros(n);
    let mut cesaro = DVector::zeros(n);
    let mut pk_r = chain.r.clone();
    let terms = 20_000;
    for _ in 0..terms {
        partial += &pk_r - &shift;
        cesaro += &partial;
        pk_r = &chain.p * pk_r;
    }
    cesaro /= terms as f64;
    let vbar = differential_value(&chain).unwrap();
    assert!(vbar.dot(&chain.d).abs() < 1e-12);
    assert!((vbar - &partial).amax() < 1e-9);
    assert!((differential_value(&chain).unwrap() - cesaro).amax() < 1e-2);
}
