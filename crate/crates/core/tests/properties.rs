use proptest::prelude::*;

use stmimo::decomposition::{als_masked, random_factors, AlsOptions};
use stmimo::estimator::{angles_from_stacked_factor, uniqueness_check};
use stmimo::experiments::{
    format_g9, matched_squared_errors, ExperimentConfig, ExperimentKind, Preset,
};
use stmimo::scene::{
    add_noise_with_power, build_mask, complex_normal, steering_matrix, trial_rng, RadarConfig,
};
use stmimo::tensor::{cp_construct, CMatrix};
use stmimo::C64;

/// Angles in radians at least `gap` apart.
fn spread_angles(k: usize, gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.2f64..1.2, k).prop_filter("angles too close", move |v| {
        v.iter()
            .enumerate()
            .all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).abs() >= gap))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stacked_angles_ignore_column_order_and_scale(
        angles in spread_angles(3, 0.08),
        rows in 4usize..9,
        perm_seed in any::<u64>(),
    ) {
        let k = angles.len();
        let full = steering_matrix(&angles, rows + 1);
        let f0 = full.row_range(0..rows).vstack(&full.row_range(1..rows + 1)).unwrap();
        let base = angles_from_stacked_factor(&f0).unwrap();

        let mut rng = trial_rng(perm_seed, 0);
        let mut perm: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let scales: Vec<C64> = (0..k).map(|_| complex_normal(&mut rng, 1.0) + C64::new(0.1, 0.0)).collect();
        let g = CMatrix::from_fn(2 * rows, k, |r, c| f0[(r, perm[c])] * scales[c]);
        let got = angles_from_stacked_factor(&g).unwrap();
        for (x, y) in got.sorted.iter().zip(&base.sorted) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        // each column keeps its own angle
        for (c, &p) in perm.iter().enumerate() {
            prop_assert!((got.per_column[c] - angles[p]).abs() <= 1e-9);
        }
    }

    #[test]
    fn uniqueness_matches_literal_inequality(m in 1usize..12, n in 1usize..12, q in 1usize..12, k in 1usize..20) {
        let u = uniqueness_check(m, n, q, k);
        prop_assert_eq!(u.holds, m.min(k) + n.min(k) + q.min(k) >= 2 * k + 2);
        prop_assert!(u.max_k == 0 || uniqueness_check(m, n, q, u.max_k).holds);
        prop_assert!(!uniqueness_check(m, n, q, u.max_k + 1).holds);
        prop_assert_eq!(u.generic_max_k, (m * n).min(m * q).min(n * q));
    }

    #[test]
    fn matched_errors_ignore_estimate_order(
        truth in prop::collection::vec((-60.0f64..60.0, -60.0f64..60.0), 1..6),
        jitter in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 6),
        rot in 0usize..6,
    ) {
        let est: Vec<(f64, f64)> = truth.iter().zip(&jitter).map(|(t, j)| (t.0 + j.0, t.1 + j.1)).collect();
        let mut rotated = est.clone();
        let len = rotated.len();
        rotated.rotate_left(rot % len);
        let total = |v: Vec<(f64, f64)>| v.iter().map(|e| e.0 + e.1).sum::<f64>();
        let a = total(matched_squared_errors(&truth, &est));
        let b = total(matched_squared_errors(&truth, &rotated));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn g9_round_trips_to_nine_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_g9(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs());
    }

    #[test]
    fn config_text_round_trips(trials in 1usize..500, seed in any::<u64>(), desk in any::<bool>(), res in any::<bool>()) {
        let kind = if res { ExperimentKind::Resolution } else { ExperimentKind::Rmse };
        let preset = if desk { Preset::Desk } else { Preset::Paper };
        let cfg = ExperimentConfig { trials, seed, ..ExperimentConfig::preset(kind, preset) };
        let back = ExperimentConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        prop_assert_eq!(back.to_kv_string(), cfg.to_kv_string());
        prop_assert_eq!(back.trials, trials);
        prop_assert_eq!(back.seed, seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn masked_als_residual_never_increases(
        m in 2usize..5, n in 2usize..5, blocks in 3usize..6, k in 1usize..4, seed in any::<u64>(), noise in 0.0f64..0.3,
    ) {
        let cfg = RadarConfig::new(m, n, m * blocks, 50e3, 10e-6, 4e6).unwrap();
        let mask = build_mask(&cfg);
        let mut rng = trial_rng(seed, 0);
        let (a, b, c) = random_factors::<f64, _>((cfg.m, cfg.n, cfg.q), k, &mut rng);
        let clean = cp_construct(&a, &b, &c).unwrap().hadamard(mask.tensor()).unwrap();
        let y = add_noise_with_power(&clean, noise * clean.mean_power(), &mut rng);
        let fs = als_masked(&y, &mask, k, &AlsOptions { seed, max_iters: 200, ..AlsOptions::default() }).unwrap();
        for w in fs.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{:?}", fs.residual_history);
        }
        prop_assert!((fs.fit - fs.residual_history.last().copied().unwrap_or(fs.fit)).abs() <= 1e-9);
    }
}
