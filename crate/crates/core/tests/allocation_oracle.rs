use noma_pfs::allocation::{
    crossing_theta, normalized_weight, optimal_schedule_ideal, optimal_schedule_ideal_counted,
    optimal_schedule_practical, post_sic_sinr, rates_from_allocation, Allocation, Candidate,
};
use noma_pfs::oracle::{
    brute_force_allocation, crossing_theta_suite, max_cf_integral, optimality_suite,
    random_candidates,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn candidates_strategy(max_users: usize) -> impl Strategy<Value = Vec<Candidate>> {
    prop::collection::vec((-1.0f64..2.0, -1.0f64..1.0), 1..=max_users).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(u, (phi, r))| Candidate {
                user_id: u,
                cqi: 10f64.powf(phi),
                avg_rate: 10f64.powf(r),
            })
            .collect()
    })
}

#[test]
fn envelope_matches_brute_force() {
    let r = optimality_suite(150, 5, 1000, 1e-4, 7).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn practical_matches_brute_force_over_small_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let cands = random_candidates(&mut rng, 6);
        let mut best = f64::NEG_INFINITY;
        for i in 0..6 {
            for j in i..6 {
                let pool: Vec<Candidate> = if i == j {
                    vec![cands[i]]
                } else {
                    vec![cands[i], cands[j]]
                };
                best = best.max(brute_force_allocation(&pool, 1000).weight);
            }
        }
        let got =
            normalized_weight(&optimal_schedule_practical(&cands, 2).unwrap(), &cands).unwrap();
        assert!((got - best).abs() <= 1e-4 * best, "{got} vs {best}");
        assert!(optimal_schedule_practical(&cands, 2).unwrap().len() <= 2);
    }
}

#[test]
fn pair_cases_agree_with_dense_comparison() {
    let r = crossing_theta_suite(|u, v| crossing_theta(u, v).unwrap(), 10_000, 1000, 3);
    assert!(r.passed(), "{r:?}");
}

#[test]
fn sign_flipped_crossing_point_is_caught() {
    let r = crossing_theta_suite(|u, v| -crossing_theta(u, v).unwrap(), 500, 50, 3);
    assert!(!r.passed());
}

#[test]
fn ideal_weight_equals_max_cf_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let n = rng.random_range(1..=12);
        let cands = random_candidates(&mut rng, n);
        let w = normalized_weight(&optimal_schedule_ideal(&cands).unwrap(), &cands).unwrap();
        let q = max_cf_integral(&cands).unwrap();
        assert!((w - q).abs() <= 1e-6 * q, "{w} vs {q}");
    }
}

#[test]
fn random_feasible_allocations_never_beat_ideal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let cands = random_candidates(&mut rng, n);
        let ideal = normalized_weight(&optimal_schedule_ideal(&cands).unwrap(), &cands).unwrap();
        for _ in 0..50 {
            let mut members: Vec<&Candidate> =
                cands.iter().filter(|_| rng.random_bool(0.5)).collect();
            if members.is_empty() {
                members.push(&cands[0]);
            }
            members.sort_by(|a, b| b.cqi.total_cmp(&a.cqi));
            let raw: Vec<f64> = members
                .iter()
                .map(|_| rng.random_range(0.01..1.0))
                .collect();
            let total: f64 = raw.iter().sum();
            let ratios: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let a =
                Allocation::from_power_ratios(members.iter().map(|c| c.user_id).collect(), &ratios)
                    .unwrap();
            let w = normalized_weight(&a, &cands).unwrap();
            assert!(w <= ideal * (1.0 + 1e-12), "{w} > {ideal}");
        }
    }
}

#[test]
fn shannon_rates_match_post_sic_sinr() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let n = rng.random_range(1..=8);
        let cands = random_candidates(&mut rng, n);
        let cqis: Vec<f64> = cands.iter().map(|c| c.cqi).collect();
        let a = optimal_schedule_ideal(&cands).unwrap();
        let rates = rates_from_allocation(&a, &cqis, 1.0).unwrap();
        let gammas = post_sic_sinr(&a, &cqis).unwrap();
        for u in 0..n {
            let want = if a.sequence().contains(&u) {
                gammas[u].ln_1p() / std::f64::consts::LN_2
            } else {
                0.0
            };
            assert!((rates[u] - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}

#[test]
fn envelope_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let n = rng.random_range(1..=15);
        let cands = random_candidates(&mut rng, n);
        let (a, evals) = optimal_schedule_ideal_counted(&cands).unwrap();
        assert!(
            evals <= n * (n + 1) / 2,
            "{evals} evaluations for {n} users"
        );
        let seq: Vec<&Candidate> = a.sequence().iter().map(|&u| &cands[u]).collect();
        // strictly descending CQI
        assert!(seq.windows(2).all(|w| w[0].cqi > w[1].cqi));
        // internal CPRs strictly increasing and equal to consecutive crossings
        let cprs = a.cprs();
        assert!(cprs.windows(2).all(|w| w[0] < w[1]));
        for (k, w) in seq.windows(2).enumerate() {
            let th = crossing_theta(w[0], w[1]).unwrap();
            assert!((th - cprs[k + 1]).abs() <= 1e-9, "{th} vs {}", cprs[k + 1]);
            // the earlier user dominates before the crossing, the later one after
            for i in 1..20 {
                let x = th * i as f64 / 20.0;
                assert!(w[0].cf(x) >= w[1].cf(x) * (1.0 - 1e-12));
                let y = th + (1.0 - th) * i as f64 / 20.0;
                assert!(w[1].cf(y) >= w[0].cf(y) * (1.0 - 1e-12));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn practical_is_bounded_by_ideal_and_monotone(cands in candidates_strategy(8)) {
        let ideal = optimal_schedule_ideal(&cands).unwrap();
        let wi = normalized_weight(&ideal, &cands).unwrap();
        let mut prev = 0.0;
        for s in 1..=cands.len() + 1 {
            let a = optimal_schedule_practical(&cands, s).unwrap();
            prop_assert!(a.len() <= s);
            let w = normalized_weight(&a, &cands).unwrap();
            prop_assert!(w <= wi * (1.0 + 1e-12));
            prop_assert!(w >= prev * (1.0 - 1e-12));
            if s >= ideal.len() {
                prop_assert!((w - wi).abs() <= 1e-12 * wi);
            }
            prev = w;
        }
    }

    #[test]
    fn power_ratios_sum_to_one(cands in candidates_strategy(10), s in 1usize..4) {
        for a in [optimal_schedule_ideal(&cands).unwrap(), optimal_schedule_practical(&cands, s).unwrap()] {
            let total: f64 = a.power_ratios().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(a.power_ratios().iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn scaling_all_rates_keeps_the_schedule(cands in candidates_strategy(8), k in 0.01f64..100.0) {
        let scaled: Vec<Candidate> = cands.iter().map(|c| Candidate { avg_rate: c.avg_rate * k, ..*c }).collect();
        let a = optimal_schedule_ideal(&cands).unwrap();
        let b = optimal_schedule_ideal(&scaled).unwrap();
        prop_assert_eq!(a.sequence(), b.sequence());
        let wa = normalized_weight(&a, &cands).unwrap();
        let wb = normalized_weight(&b, &scaled).unwrap();
        prop_assert!((wa - k * wb).abs() <= 1e-9 * wa);
    }
}
