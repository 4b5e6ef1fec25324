use excursion_core::{
    classify, count_excursions, fit_slope, ClassifierConfig, EpsilonGrid, ExcursionProfile, Trajectory,
};
use proptest::prelude::*;

/// Paths on a 1/64 lattice so that shifts by integers and scalings by
/// powers of two are exact in floating point.
fn lattice_path() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-64i32..=64, 2..400).prop_map(|steps| {
        let mut x = 0i64;
        steps
            .into_iter()
            .map(|s| {
                x += s as i64;
                x as f64 / 64.0
            })
            .collect()
    })
}

fn traj(v: Vec<f64>) -> Trajectory {
    Trajectory::new(v, 1.0).unwrap()
}

proptest! {
    #[test]
    fn counts_do_not_increase_with_epsilon(path in lattice_path(), a in 0.01f64..5.0, b in 0.01f64..5.0) {
        let t = traj(path);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(count_excursions(&t, lo).unwrap() >= count_excursions(&t, hi).unwrap());
    }

    #[test]
    fn counts_ignore_integer_shifts(path in lattice_path(), c in -1000i32..1000, eps in 0.05f64..3.0) {
        let shifted: Vec<f64> = path.iter().map(|x| x + c as f64).collect();
        prop_assert_eq!(
            count_excursions(&traj(path), eps).unwrap(),
            count_excursions(&traj(shifted), eps).unwrap()
        );
    }

    #[test]
    fn counts_scale_with_epsilon(path in lattice_path(), k in -6i32..6, eps in 0.05f64..3.0) {
        let s = 2f64.powi(k);
        let scaled: Vec<f64> = path.iter().map(|x| x * s).collect();
        prop_assert_eq!(
            count_excursions(&traj(path), eps).unwrap(),
            count_excursions(&traj(scaled), eps * s).unwrap()
        );
    }

    #[test]
    fn counts_ignore_reflection(path in lattice_path(), eps in 0.05f64..3.0) {
        let flipped: Vec<f64> = path.iter().map(|x| -x).collect();
        prop_assert_eq!(
            count_excursions(&traj(path), eps).unwrap(),
            count_excursions(&traj(flipped), eps).unwrap()
        );
    }

    #[test]
    fn planted_power_law_is_recovered(p in -3.0f64..=0.0, lo in 0.01f64..0.1, ratio in 5.0f64..50.0, n in 6usize..30) {
        let grid = EpsilonGrid::geometric(lo, lo * ratio, n).unwrap();
        // counts large enough that integer rounding is far below 1e-6 in log space
        let scale = 1e12;
        let n_emp: Vec<u64> = grid.as_slice().iter().map(|e| (scale * (e / lo).powf(p)).round() as u64).collect();
        let profile = ExcursionProfile {
            n_theory: vec![1.0; n],
            k_ratio: vec![1.0; n],
            qv: 1.0,
            n_emp,
            grid,
        };
        let fit = fit_slope(&profile, (0, n - 1)).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-6, "planted {} fitted {}", p, fit.slope);
    }

    #[test]
    fn classify_is_pure(path in lattice_path()) {
        prop_assume!(path.len() > 50);
        let t = traj(path);
        let config = ClassifierConfig::default();
        prop_assert_eq!(classify(&t, &config).ok(), classify(&t.clone(), &config.clone()).ok());
    }
}

#[test]
fn dense_sine_counts_one_excursion_per_period() {
    let amp = 3.0;
    let n = 100_000;
    let v: Vec<f64> = (0..=n)
        .map(|i| amp * (20.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
        .collect();
    let c = count_excursions(&traj(v), amp / 2.0).unwrap();
    assert!((9..=11).contains(&c), "count {c}");
}
