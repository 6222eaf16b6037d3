mod common;

use common::*;
use proptest::prelude::*;
use remle::{decompose, DesignMatrix};

#[test]
fn trace_of_gram_matches_entry_sum() {
    let mut r = rng(1);
    let z = gaussian_matrix(5, 8, &mut r);
    let c = decompose(&z).unwrap();
    let direct: f64 = (0..5).flat_map(|i| (0..8).map(move |j| (i, j))).map(|(i, j)| z.get(i, j).powi(2)).sum::<f64>() / 8.0;
    let total: f64 = c.eigenvalues().iter().sum();
    assert!((total - direct).abs() < 1e-10);
}

#[test]
fn rotation_matches_dense_product() {
    let mut r = rng(2);
    let z = gaussian_matrix(4, 4, &mut r);
    let y = gaussian_vec(4, &mut r);
    let c = decompose(&z).unwrap();
    let u = c.eigenvectors();
    let ry = c.rotate_response(&y).unwrap();
    for k in 0..4 {
        let direct: f64 = (0..4).map(|i| u[(i, k)] * y[i]).sum();
        assert!((ry.values()[k] - direct).abs() < 1e-12);
    }
}

#[test]
fn traces_match_dense_inverse_n30() {
    let mut r = rng(3);
    let z = gaussian_matrix(30, 45, &mut r);
    let y = gaussian_vec(30, &mut r);
    let c = decompose(&z).unwrap();
    let ry = c.rotate_response(&y).unwrap();
    let g = gram(&z);

    let vinv = inverse(&combine(1.0, &[(2.0, &g)]));
    assert!(rel_err(c.trace_inv(2.0, 1).unwrap(), trace(&vinv)) < 1e-8);

    let vinv = inverse(&combine(1.0, &[(0.7, &g)]));
    let w = matmul(&vinv, &vinv);
    assert!(rel_err(c.trace_inv_gram(0.7, 2).unwrap(), trace(&matmul(&w, &g))) < 1e-8);
    assert!(rel_err(c.quad_form_inv(&ry, 0.7, 1).unwrap(), quad(&vinv, &y)) < 1e-8);
    assert!(rel_err(c.quad_form_inv(&ry, 0.7, 2).unwrap(), quad(&w, &y)) < 1e-8);
    let wgw = matmul(&matmul(&vinv, &g), &vinv);
    assert!(rel_err(c.quad_form_inv_gram(&ry, 0.7, 2).unwrap(), quad(&wgw, &y)) < 1e-8);
}

#[test]
fn higher_powers_match_dense() {
    let mut r = rng(4);
    let z = gaussian_matrix(12, 9, &mut r);
    let c = decompose(&z).unwrap();
    let vinv = inverse(&combine(1.0, &[(1.3, &gram(&z))]));
    let mut acc = identity(12);
    for power in 1..=4 {
        acc = matmul(&acc, &vinv);
        assert!(rel_err(c.trace_inv(1.3, power).unwrap(), trace(&acc)) < 1e-8);
    }
}

#[test]
fn rank_deficient_zero_count() {
    let mut r = rng(5);
    let z = gaussian_matrix(20, 7, &mut r);
    let c = decompose(&z).unwrap();
    let lmax = c.eigenvalues()[0];
    let zeros = c.eigenvalues().iter().filter(|&&l| l <= 1e-8 * lmax).count();
    assert_eq!(zeros, 13);
    assert!(c.eigenvalues().iter().all(|&l| l >= 0.0));
}

#[test]
fn single_precision_tracks_double() {
    let mut r = rng(6);
    let z = gaussian_matrix(15, 20, &mut r);
    let z32 = DesignMatrix::<f32>::from_fn(15, 20, |i, j| z.get(i, j) as f32).unwrap();
    let c64 = decompose(&z).unwrap();
    let c32 = decompose(&z32).unwrap();
    let a = c64.trace_inv(1.0, 1).unwrap();
    let b = c32.trace_inv(1.0f32, 1).unwrap() as f64;
    assert!(rel_err(b, a) < 1e-4);
}

fn instance() -> impl Strategy<Value = (usize, usize, u64, f64)> {
    (2usize..16, 1usize..16, any::<u64>(), 0.0f64..20.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_identity((n, p, seed, gamma) in instance()) {
        let mut r = rng(seed);
        let c = decompose(&gaussian_matrix(n, p, &mut r)).unwrap();
        let lhs = c.trace_inv(gamma, 1).unwrap() + gamma * c.trace_inv_gram(gamma, 1).unwrap();
        prop_assert!((lhs - n as f64).abs() < 1e-8 * n as f64);
    }

    #[test]
    fn powers_decrease((n, p, seed, gamma) in instance()) {
        let mut r = rng(seed);
        let c = decompose(&gaussian_matrix(n, p, &mut r)).unwrap();
        for k in 1..4 {
            prop_assert!(c.trace_inv(gamma, k + 1).unwrap() <= c.trace_inv(gamma, k).unwrap() + 1e-12);
        }
        let t = c.trace_inv(gamma, 1).unwrap();
        prop_assert!(t > 0.0 && t <= n as f64 + 1e-12);
    }

    #[test]
    fn trace_decreasing_in_gamma((n, p, seed, gamma) in instance()) {
        let mut r = rng(seed);
        let c = decompose(&gaussian_matrix(n, p, &mut r)).unwrap();
        prop_assert!(c.trace_inv(gamma + 0.5, 1).unwrap() <= c.trace_inv(gamma, 1).unwrap());
    }

    #[test]
    fn sign_flips_leave_functionals((n, p, seed, gamma) in instance()) {
        let mut r = rng(seed);
        let z = gaussian_matrix(n, p, &mut r);
        let y = gaussian_vec(n, &mut r);
        let flips: Vec<f64> = (0..p).map(|j| if (seed >> (j % 64)) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let zf = DesignMatrix::from_fn(n, p, |i, j| z.get(i, j) * flips[j]).unwrap();
        let (c, cf) = (decompose(&z).unwrap(), decompose(&zf).unwrap());
        let (ry, ryf) = (c.rotate_response(&y).unwrap(), cf.rotate_response(&y).unwrap());
        let a = c.trace_inv(gamma, 1).unwrap();
        let b = cf.trace_inv(gamma, 1).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let a = c.quad_form_inv(&ry, gamma, 1).unwrap();
        let b = cf.quad_form_inv(&ryf, gamma, 1).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn decomposition_invariants((n, p, seed, _g) in instance()) {
        let mut r = rng(seed);
        let z = gaussian_matrix(n, p, &mut r);
        let y = gaussian_vec(n, &mut r);
        let c = decompose(&z).unwrap();
        let u = c.eigenvectors();
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n).map(|k| u[(k, i)] * u[(k, j)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - target).abs() < 1e-8);
            }
        }
        let ev = c.eigenvalues();
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(ev.iter().all(|&l| l >= 0.0));
        let tr: f64 = ev.iter().sum();
        let direct = trace(&gram(&z));
        prop_assert!((tr - direct).abs() <= 1e-8 * direct);
        let ry = c.rotate_response(&y).unwrap();
        prop_assert!(rel_err(ry.norm_sq(), dot(&y, &y)) < 1e-8);
    }
}
