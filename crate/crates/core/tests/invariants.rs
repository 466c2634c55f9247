mod common;

use levy_passage::estimators::{passage_sweep, SweepConfig};
use levy_passage::oracles::{brute_force_small_instance, drift_passage_exact, Skeleton};
use levy_passage::pathsim::{first_passage, sample_path, Sided};
use levy_passage::stability::{c_alpha, g_func, NormingPair, NormingRule, Regime};
use levy_passage::{JumpMeasure, LevyModel, Side};
use proptest::prelude::*;

use common::family_zoo;

fn zoo_model() -> impl Strategy<Value = (&'static str, LevyModel)> {
    (0..family_zoo().len()).prop_map(|i| family_zoo().swap_remove(i))
}

/// Finite-activity models the event-driven sampler handles with `h = 0`.
fn simulable() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|a| LevyModel::poisson_drift(a).unwrap()),
        (0.2..3.0f64, 0.1..3.0f64, 0.2..4.0f64).prop_map(|(d, l, a)| LevyModel::with_drift(
            d,
            JumpMeasure::exponential_plus(l, a)
        )
        .unwrap()),
        (-1.0..2.0f64, 0.1..3.0f64, 0.2..4.0f64).prop_map(|(d, l, a)| LevyModel::with_drift(
            d,
            JumpMeasure::exponential_minus(l, a)
        )
        .unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mean_and_variance_identities((name, m) in zoo_model(), lx in -8.0..3.0f64) {
        let x = 10f64.powf(lx);
        let a = m.winsorized_mean(x).unwrap();
        let nu = m.truncated_mean(x).unwrap();
        let (u, v) = m.winsorized_variance(x).unwrap();
        let tp = m.tail(x, Side::Plus).unwrap();
        let tm = m.tail(x, Side::Minus).unwrap();
        let scale = a.abs() + nu.abs() + x * (tp + tm);
        prop_assert!((a - nu - x * (tp - tm)).abs() <= 1e-12 * scale);
        prop_assert!((u - v - x * x * (tp + tm)).abs() <= 1e-12 * u.abs().max(f64::MIN_POSITIVE));
        prop_assert!(u >= m.sigma2());
        // the stated log-squared tail is not monotone, so its "measure" is signed and V may dip below 0
        if name != "log_squared" {
            prop_assert!(v >= -1e-12 * u);
        }
    }

    #[test]
    fn tails_nonincreasing_and_u_nondecreasing((name, m) in zoo_model(), lx in -8.0..2.0f64, step in 0.0..2.0f64) {
        let (x1, x2) = (10f64.powf(lx), 10f64.powf(lx + step));
        // the log-squared tail formula is not monotone on [e^-2, e^-1)
        if name != "log_squared" || x2 < (-2.0f64).exp() {
            for side in [Side::Plus, Side::Minus] {
                prop_assert!(m.tail(x2, side).unwrap() <= m.tail(x1, side).unwrap());
            }
        }
        prop_assert!(m.winsorized_variance(x2).unwrap().0 >= m.winsorized_variance(x1).unwrap().0 * (1.0 - 1e-12));
    }

    #[test]
    fn g_is_increasing_into_unit_interval(b in 0.05..0.95f64, lx in -6.0..6.0f64, step in 1e-3..3.0f64) {
        let (x1, x2) = (10f64.powf(lx), 10f64.powf(lx + step));
        let (g1, g2) = (g_func(b, x1).unwrap(), g_func(b, x2).unwrap());
        prop_assert!(g1 > 0.0 && g2 < 1.0 && g1 < g2);
    }

    #[test]
    fn c_alpha_inverts_g_monotonically(b in 0.1..0.9f64, a1 in 1e-6..0.8f64, da in 1e-3..0.1f64) {
        let (c1, c2) = (c_alpha(b, a1).unwrap(), c_alpha(b, a1 + da).unwrap());
        prop_assert!(c1 < c2);
        prop_assert!((g_func(b, c1).unwrap() - a1).abs() <= 1e-12);
    }

    #[test]
    fn drift_passage_matches_closed_form(gamma in 0.05..20.0f64, b in 0.0..0.95f64, lr in -8.0..0.0f64) {
        let r = 10f64.powf(lr);
        let exact = drift_passage_exact(gamma, b, r).unwrap();
        let m = LevyModel::drift_only(gamma).unwrap();
        let horizon = 2.0 * exact;
        let path = sample_path(&m, 0, 0, horizon, 0.0).unwrap();
        let t = first_passage(&path, r, b, Sided::One, Regime::SmallTime).unwrap().passage_time.unwrap();
        prop_assert!((t / exact - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn passage_time_monotone_in_level(m in simulable(), seed in 0u64..1000, b in 0.0..0.9f64, lr in -4.0..-0.5f64, step in 0.0..2.0f64) {
        let (r_lo, r_hi) = (10f64.powf(lr - step), 10f64.powf(lr));
        let path = sample_path(&m, seed, 3, 20.0, 0.0).unwrap();
        let time = |r: f64, sided| first_passage(&path, r, b, sided, Regime::SmallTime).unwrap().passage_time.unwrap_or(f64::INFINITY);
        let (lo, hi) = (time(r_lo, Sided::One), time(r_hi, Sided::One));
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        // leaving the two-sided band is never later than crossing the upper boundary
        prop_assert!(time(r_hi, Sided::Two) <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn overshoot_ratio_at_least_one(m in simulable(), seed in 0u64..1000, b in 0.0..0.9f64, lr in -4.0..-0.5f64) {
        let path = sample_path(&m, seed, 0, 20.0, 0.0).unwrap();
        let rec = first_passage(&path, 10f64.powf(lr), b, Sided::One, Regime::SmallTime).unwrap();
        if !rec.censored {
            prop_assert!(rec.overshoot_ratio >= 1.0 - 1e-9);
            prop_assert!((path.value_at(rec.passage_time.unwrap()) - rec.position).abs() <= 1e-9 * rec.position.abs().max(1.0));
        }
    }

    #[test]
    fn paths_reproduce_per_stream(m in simulable(), seed in any::<u64>(), stream in 0u64..1_000_000) {
        let a = sample_path(&m, seed, stream, 5.0, 0.0).unwrap();
        let b = sample_path(&m, seed, stream, 5.0, 0.0).unwrap();
        prop_assert_eq!(&a, &b);
        let c = sample_path(&m, seed, stream + 1, 5.0, 0.0).unwrap();
        prop_assert!(a.jumps.is_empty() || a != c);
    }

    #[test]
    fn norming_inverse_round_trips(b in 0.0..0.9f64, lr in -6.0..0.0f64) {
        // d_X > 0, so A > 0 throughout and B(t)/t^b is increasing
        let m = LevyModel::new(1.5, 0.0, JumpMeasure::exponential_plus(2.0, 1.0)).unwrap();
        let pair = NormingPair::new(&m, b, Regime::SmallTime, NormingRule::Solver).unwrap();
        let r = 10f64.powf(lr);
        let c = pair.c_of(r).unwrap();
        let back = pair.b_of(c).unwrap() / c.powf(b);
        prop_assert!((back / r - 1.0).abs() <= 1e-9);
        prop_assert!(pair.c_of(r * 1.01).unwrap() > c);
    }

    #[test]
    fn brute_force_law_is_a_distribution(steps in 1usize..8, up in 0.1..2.0f64, down in -2.0..0.0f64, p in 0.05..0.95f64, r in 0.1..3.0f64, b in 0.0..1.5f64) {
        let skel = Skeleton { steps, dt: 1.0, increments: vec![(up, p), (down, 1.0 - p)] };
        let one = brute_force_small_instance(&skel, r, b, Sided::One).unwrap();
        let two = brute_force_small_instance(&skel, r, b, Sided::Two).unwrap();
        let total: f64 = one.probabilities.iter().sum::<f64>() + one.censored;
        prop_assert!((total - 1.0).abs() <= 1e-12);
        // the two-sided exit happens no later, so it is censored no more often
        prop_assert!(two.censored <= one.censored + 1e-12);
        let cdf = |law: &levy_passage::oracles::PassageLaw, k: usize| law.probabilities[..k].iter().sum::<f64>();
        for k in 1..=steps {
            prop_assert!(cdf(&two, k) >= cdf(&one, k) - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sweep_statistics_are_ordered_and_worker_independent(m in simulable(), seed in 0u64..1000, b in 0.0..0.8f64) {
        let mut cfg = SweepConfig::new(&m, b, Sided::One, Regime::SmallTime);
        cfg.n_paths = 2000;
        cfg.seed = seed;
        cfg.r_grid = vec![0.1, 0.01];
        cfg.deltas = vec![0.5, 0.1, 0.01];
        let (Ok(one), Ok(four)) = (passage_sweep(&m, &cfg, 1), passage_sweep(&m, &cfg, 4)) else {
            // drift <= 0 has no closed-form norming; nothing to compare
            return Ok(());
        };
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
        for row in &one.rows {
            if row.n_censored < row.n_paths {
                prop_assert!(row.quantiles.windows(2).all(|w| w[0] <= w[1]));
            }
            let devs: Vec<f64> = row.prob_dev.iter().map(|d| d.fraction).collect();
            prop_assert!(devs.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((0.0..=1.0).contains(&row.equality_fraction));
        }
    }
}

#[test]
fn x_times_winsorized_mean_vanishes_at_zero() {
    for (name, m) in family_zoo() {
        let v: Vec<f64> = [1e-4, 1e-8, 1e-12]
            .iter()
            .map(|&x| (x * m.winsorized_mean(x).unwrap()).abs())
            .collect();
        assert!(v[2] < 1e-5, "{name}: {v:?}");
        assert!(v[2] <= v[0], "{name}: {v:?}");
    }
}

#[test]
fn c_alpha_small_alpha_limit() {
    for b in [0.2, 0.5, 0.8] {
        let e = 1.0 / (1.0 - b);
        let ratios: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&a: &f64| c_alpha(b, a).unwrap() / a.powf(e) / b.powf(-e))
            .collect();
        assert!((ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs());
        assert!((ratios[2] - 1.0).abs() < 1e-3, "{ratios:?}");
    }
}
