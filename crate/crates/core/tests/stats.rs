mod support;

use calibkit::stats_tests::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::wilcoxon_enumerate;

fn against_zero(d: &[f64], mode: ModeChoice) -> WilcoxonResult {
    wilcoxon_signed_rank_with(d, &vec![0.0; d.len()], mode).unwrap()
}

/// Integer-valued differences on a small range so ties and zeros are common.
fn random_diffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random_range(-4i32..=4) as f64).collect()
    } else {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

#[test]
fn exact_matches_enumeration_up_to_twelve() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..500 {
        let n = 1 + case % 12;
        let d = random_diffs(&mut rng, n);
        let (w, p, m) = wilcoxon_enumerate(&d);
        let r = against_zero(&d, ModeChoice::Exact);
        assert_eq!(r.n_effective, m, "{d:?}");
        assert!((r.w_statistic - w).abs() < 1e-12, "{d:?}");
        assert!((r.p_value - p).abs() < 1e-12, "{d:?}: {} vs {p}", r.p_value);
    }
}

#[test]
fn textbook_five_positive() {
    let r = against_zero(&[1.0, 2.0, 3.0, 4.0, 5.0], ModeChoice::Auto);
    assert_eq!(r.mode, WilcoxonMode::Exact);
    assert_eq!(r.w_statistic, 15.0);
    assert!((r.p_value - 0.0625).abs() < 1e-15);
}

#[test]
fn all_zero_differences_are_not_significant() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert_eq!(r.n_effective, 0);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn input_errors() {
    assert_eq!(
        wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]),
        Err(StatsError::LengthMismatch(1, 2))
    );
    assert_eq!(wilcoxon_signed_rank(&[], &[]), Err(StatsError::Empty));
    assert_eq!(
        wilcoxon_signed_rank(&[0.0, f64::NAN], &[0.0, 0.0]),
        Err(StatsError::NonFinite(1))
    );
}

#[test]
fn auto_switches_to_normal_above_exact_limit() {
    let d: Vec<f64> = (1..=EXACT_MAX_N as i32 + 1).map(|i| i as f64 - 10.5).collect();
    assert_eq!(against_zero(&d, ModeChoice::Auto).mode, WilcoxonMode::NormalApproximation);
    assert_eq!(against_zero(&d[..EXACT_MAX_N], ModeChoice::Auto).mode, WilcoxonMode::Exact);
}

#[test]
fn normal_approximation_is_close_at_twenty() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let shift = rng.random_range(-0.6..0.6);
        let d: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
        let exact = against_zero(&d, ModeChoice::Exact).p_value;
        let normal = against_zero(&d, ModeChoice::Normal).p_value;
        assert!((exact - normal).abs() < 0.01, "{exact} vs {normal}");
    }
}

#[test]
fn stars_follow_alpha() {
    assert!(significance_stars(0.01, DEFAULT_ALPHA));
    assert!(!significance_stars(0.0101, DEFAULT_ALPHA));
}

proptest! {
    #[test]
    fn p_is_a_probability_and_swap_symmetric(
        pairs in prop::collection::vec((-3i32..=3, -3i32..=3), 1..30)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let a = wilcoxon_signed_rank(&x, &y).unwrap();
        let b = wilcoxon_signed_rank(&y, &x).unwrap();
        prop_assert!(a.p_value > 0.0 && a.p_value <= 1.0);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        let n = a.n_effective as f64;
        prop_assert!((a.w_statistic + b.w_statistic - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn ranks_are_a_permutation_average(values in prop::collection::vec(-5i32..5, 1..40)) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let r = average_ranks(&v);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(r[i] < r[j]);
                }
            }
        }
    }
}
