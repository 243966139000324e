use noma_pfs::sim::{
    build_layout, drop_users, generate_drop, realize_cqi, run_drop, FadingMode, MeanPowers,
    Scheduler, SimConfig,
};
use noma_pfs::SinrDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ks_distance(mut samples: Vec<f64>, dist: &SinrDistribution) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x).unwrap();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn strong_interference() -> MeanPowers {
    MeanPowers {
        serving: 4e-9,
        interferers: vec![1e-9, 6e-10, 3e-10, 1e-10, 5e-11],
    }
}

#[test]
fn drops_are_uniform_over_sectors() {
    let layout = build_layout(&SimConfig::default());
    let pts = drop_users(&layout, 100_000, &mut ChaCha8Rng::seed_from_u64(77));
    let mut counts = [0f64; 6];
    for p in &pts {
        let a = p.y.atan2(p.x).rem_euclid(std::f64::consts::TAU);
        counts[((a / (std::f64::consts::TAU / 6.0)) as usize).min(5)] += 1.0;
    }
    let expected = pts.len() as f64 / 6.0;
    let chi2: f64 = counts
        .iter()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    // 99th percentile of chi-square with 5 degrees of freedom
    assert!(chi2 < 15.086, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn serving_fade_only_cqis_follow_the_model() {
    let m = strong_interference();
    let noise = 2e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = (0..1_000_000)
        .map(|_| realize_cqi(&m, noise, FadingMode::ServingOnly, &mut rng))
        .collect();
    let d = ks_distance(samples, &m.serving_fade_distribution(noise).unwrap());
    assert!(d < 0.005, "KS distance {d}");
}

#[test]
fn fully_faded_cqis_follow_the_exact_model() {
    let m = strong_interference();
    let noise = 2e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let samples = (0..1_000_000)
        .map(|_| realize_cqi(&m, noise, FadingMode::Full, &mut rng))
        .collect();
    let exact = ks_distance(samples, &m.exact_distribution(noise).unwrap());
    assert!(exact < 0.005, "KS distance {exact}");
}

#[test]
fn single_user_gets_average_shannon_rate() {
    let c = SimConfig {
        warmup_frames: 0,
        measured_frames: 100_000,
        ..SimConfig::default()
    };
    for seed in [3, 4] {
        let g = generate_drop(&c, &build_layout(&c), 1, seed).unwrap();
        let o = run_drop(&c, &g, Scheduler::Ideal, false).unwrap();
        let want = g.means[0]
            .exact_distribution(g.noise_power_w)
            .unwrap()
            .mean_capacity(c.bandwidth_hz)
            .unwrap();
        assert!(
            (o.mean_rates[0] - want).abs() <= 0.02 * want,
            "{} vs {want}",
            o.mean_rates[0]
        );
    }
}

#[test]
fn runs_are_pure_functions_of_config_and_seed() {
    let c = SimConfig {
        warmup_frames: 100,
        measured_frames: 500,
        ..SimConfig::default()
    };
    let l = build_layout(&c);
    let a = run_drop(
        &c,
        &generate_drop(&c, &l, 10, 8).unwrap(),
        Scheduler::Practical(3),
        false,
    )
    .unwrap();
    let b = run_drop(
        &c,
        &generate_drop(&c, &l, 10, 8).unwrap(),
        Scheduler::Practical(3),
        false,
    )
    .unwrap();
    assert_eq!(a, b);
    assert!(a.max_power_sum_error <= 1e-12);
}

#[test]
fn noma_beats_oma_on_paired_drops() {
    let c = SimConfig {
        warmup_frames: 500,
        measured_frames: 2000,
        ..SimConfig::default()
    };
    let l = build_layout(&c);
    for seed in 0..3 {
        let g = generate_drop(&c, &l, 10, seed).unwrap();
        let ideal = run_drop(&c, &g, Scheduler::Ideal, true).unwrap();
        let two = run_drop(&c, &g, Scheduler::Practical(2), false).unwrap();
        let oma = run_drop(&c, &g, Scheduler::OMA, false).unwrap();
        assert!(two.overall() >= oma.overall(), "seed {seed}");
        assert_eq!(ideal.audit.unwrap().violations, 0);
        assert!(ideal.metric_trace.iter().all(|m| m.is_finite() && *m > 0.0));
    }
}
