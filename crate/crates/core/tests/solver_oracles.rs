mod common;

use common::*;
use homecare_alp::optim::{optimal_tour, solve_lp, solve_mip, subset_tour_lengths, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_packing_lps_match_tableau_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (c, a, b) = random_packing_lp(&mut rng, 5, 4);
        let expected = tableau_max(&c, &a, &b).expect("bounded");
        let r = solve_lp(&packing_model(&c, &a, &b));
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{} vs {expected}", r.objective);
    }
}

#[test]
fn random_general_lps_satisfy_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..200 {
        let model = random_general_lp(&mut rng, 6, 5);
        let r = solve_lp(&model);
        assert_eq!(r.status, Status::Optimal, "case {case}");
        let res = duality_residual(&model, &r);
        assert!(res <= 1e-6, "case {case}: residual {res}");
    }
}

#[test]
fn random_binary_mips_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..100 {
        let model = random_binary_mip(&mut rng, 8);
        let r = solve_mip(&model);
        match enumerate_binary(&model) {
            None => assert_eq!(r.status, Status::Infeasible, "case {case}"),
            Some(v) => {
                assert_eq!(r.status, Status::Optimal, "case {case}");
                assert!((r.objective - v).abs() <= 1e-6, "case {case}: {} vs {v}", r.objective);
            }
        }
    }
}

#[test]
fn tour_is_invariant_to_subset_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    use rand::Rng;
    let pts: Vec<(f64, f64)> = (0..8).map(|_| (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0))).collect();
    let d: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| (a.0 - b.0).abs() + (a.1 - b.1).abs()).collect()).collect();
    let a = optimal_tour(&[1, 2, 3, 4, 5, 6, 7], &d).unwrap();
    let b = optimal_tour(&[7, 3, 5, 1, 6, 2, 4], &d).unwrap();
    assert_eq!(a, b);
    assert!((a.length - brute_force_tour(&[1, 2, 3, 4, 5, 6, 7], &d)).abs() < 1e-9);
    let table = subset_tour_lengths(&[1, 2, 3], &d).unwrap();
    assert!((table[0b101] - brute_force_tour(&[1, 3], &d)).abs() < 1e-12);
}
