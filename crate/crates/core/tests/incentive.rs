mod common;

use ltcoop::incentive::*;
use proptest::prelude::*;

fn costs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..5.0, 2..=20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equilibrium_is_stable(eps in costs(), reward in 0.01f64..=10.0) {
        let bids = bids_from_costs(&eps);
        let prof = compute_equilibrium(&bids, reward).unwrap();
        let t = &prof.t;
        for &i in &prof.participants {
            prop_assert!(t[i] > 0.0);
            let m = common::follower_marginal(t, i, reward, &eps);
            prop_assert!(m.abs() < 1e-6, "first-order residual {m} for {i}");
            let base = common::follower_utility(t, i, reward, &eps);
            for h in [-1e-4, 1e-4] {
                let mut d = t.clone();
                d[i] = (d[i] + h).max(0.0);
                prop_assert!(common::follower_utility(&d, i, reward, &eps) <= base + 1e-8);
            }
            prop_assert!(base >= -1e-12, "participant {i} loses money");
        }
        for i in 0..eps.len() {
            if !prof.participants.contains(&i) {
                prop_assert_eq!(t[i], 0.0);
                let others: f64 = t.iter().sum();
                prop_assert!(reward / others <= eps[i] + 1e-12, "outsider {i} would want in");
            }
        }
    }

    #[test]
    fn follower_utility_is_concave(eps in costs(), reward in 0.1f64..10.0, pick in any::<prop::sample::Index>(), scale in 0.1f64..3.0) {
        let bids = bids_from_costs(&eps);
        let prof = compute_equilibrium(&bids, reward).unwrap();
        let i = prof.participants[pick.index(prof.participants.len())];
        let mut t = prof.t.clone();
        t[i] *= scale;
        let h = 1e-3 * t[i].max(1e-3);
        let at = |x: f64| { let mut d = t.clone(); d[i] = x; common::follower_utility(&d, i, reward, &eps) };
        let second = at(t[i] + h) - 2.0 * at(t[i]) + at(t[i] - h);
        prop_assert!(second < 1e-12, "second difference {second}");
    }

    #[test]
    fn library_matches_oracle_utility(eps in costs(), reward in 0.1f64..10.0) {
        let bids = bids_from_costs(&eps);
        let prof = compute_equilibrium(&bids, reward).unwrap();
        for i in 0..eps.len() {
            let lib = au_utility(&prof.t, i, reward, &bids).unwrap();
            prop_assert!((lib - common::follower_utility(&prof.t, i, reward, &eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn permuting_bids_permutes_profile(eps in costs(), reward in 0.1f64..10.0, rot in 0usize..20) {
        let k = rot % eps.len();
        let mut rotated = eps.clone();
        rotated.rotate_left(k);
        let a = compute_equilibrium(&bids_from_costs(&eps), reward).unwrap();
        let b = compute_equilibrium(&bids_from_costs(&rotated), reward).unwrap();
        let mut expect = a.t.clone();
        expect.rotate_left(k);
        for (x, y) in expect.iter().zip(&b.t) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn membership_ignores_reward(eps in costs(), r1 in 0.1f64..10.0, r2 in 0.1f64..10.0) {
        let bids = bids_from_costs(&eps);
        let mut a = compute_equilibrium(&bids, r1).unwrap().participants;
        let mut b = compute_equilibrium(&bids, r2).unwrap().participants;
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn coefficients_scale_inversely(eps in costs(), c in 0.5f64..4.0) {
        let bids = bids_from_costs(&eps);
        let scaled = bids_from_costs(&eps.iter().map(|e| e * c).collect::<Vec<_>>());
        let k = participants(&bids).unwrap();
        let s1: f64 = coefficients(&bids, &k).unwrap().iter().sum();
        let s2: f64 = coefficients(&scaled, &participants(&scaled).unwrap()).unwrap().iter().sum();
        prop_assert!((s1 / c - s2).abs() < 1e-9 * s1.max(1.0));
    }

    #[test]
    fn leader_reward_matches_grid(eps in prop::collection::vec(1.0f64..5.0, 2..=12), gamma in 2.0f64..15.0) {
        let out = optimal_reward(&bids_from_costs(&eps), gamma, 1e-9).unwrap();
        let hi = (2.0 * out.reward).max(1.0);
        let grid = common::grid_argmax(&out.coefficients, gamma, hi, 1e-3);
        prop_assert!((out.reward - grid).abs() < 2e-3, "bisection {} grid {}", out.reward, grid);
        let reported = out.server_utility;
        let direct = common::leader_utility(&out.coefficients, gamma, out.reward);
        prop_assert!((reported - direct).abs() < 1e-9);
        for &i in &out.profile.participants {
            prop_assert!(out.au_utilities[i] >= -1e-12);
        }
    }

    #[test]
    fn payment_rearrangements(eps in costs(), gamma in 2.0f64..15.0) {
        let out = optimal_reward(&bids_from_costs(&eps), gamma, 1e-9).unwrap();
        let p0 = ru_payment(&out, 0.0);
        prop_assert!((p0 - (out.server_utility + out.reward)).abs() < 1e-9);
        let pmu = ru_payment(&out, out.server_utility);
        prop_assert!((pmu - out.reward).abs() < 1e-9);
    }
}

#[test]
fn worked_examples() {
    let two = compute_equilibrium(&bids_from_costs(&[1.0, 1.0]), 4.0).unwrap();
    assert!((two.t[0] - 1.0).abs() < 1e-12 && (two.t[1] - 1.0).abs() < 1e-12);

    let lopsided = compute_equilibrium(&bids_from_costs(&[1.0, 100.0]), 4.0).unwrap();
    let s = 101.0;
    assert!((lopsided.t[0] - 4.0 / s * (1.0 - 1.0 / s)).abs() < 1e-12);
    assert!((lopsided.t[1] - 4.0 / s * (1.0 - 100.0 / s)).abs() < 1e-12);

    // 10 * 2 >= 1 + 1: the third bidder stays out.
    let three = compute_equilibrium(&bids_from_costs(&[1.0, 1.0, 10.0]), 4.0).unwrap();
    assert_eq!(three.t[2], 0.0);
    assert_eq!(three.participants.len(), 2);

    let c = coefficients(&bids_from_costs(&[1.0, 1.0]), &[0, 1]).unwrap();
    assert_eq!(c, vec![0.25, 0.25]);
}

#[test]
fn unprofitable_game_pays_nothing() {
    let out = optimal_reward(&bids_from_costs(&[50.0, 60.0]), 1.01, 1e-9).unwrap();
    assert_eq!(out.reward, 0.0);
    assert!(out.profile.t.iter().all(|&t| t == 0.0));
}

#[test]
fn bad_inputs_rejected() {
    assert!(matches!(participants(&bids_from_costs(&[1.0])), Err(GameError::DegenerateGame(1))));
    assert!(optimal_reward(&bids_from_costs(&[1.0, 2.0]), 1.0, 1e-9).is_err());
    assert!(optimal_reward(&bids_from_costs(&[1.0, 2.0]), 10.0, 0.0).is_err());
    assert!(compute_equilibrium(&bids_from_costs(&[1.0, 2.0]), 0.0).is_err());
    assert!(participants(&bids_from_costs(&[1.0, f64::NAN])).is_err());
}

#[test]
fn leader_utility_concave_along_reward() {
    let out = optimal_reward(&bids_from_costs(&[1.0, 1.5, 2.0, 3.0, 4.5]), 10.0, 1e-9).unwrap();
    let h = 1e-3;
    for k in 1..200 {
        let r = k as f64 * 0.1;
        let f = |x| reward_utility(&out.coefficients, 10.0, x);
        assert!(f(r + h) - 2.0 * f(r) + f(r - h) < 0.0, "not concave at {r}");
    }
}
