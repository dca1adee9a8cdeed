//! Statistics against frozen reference values and invariants.

mod suite;

use fishtank::render::Pigment;
use fishtank::stats::*;
use fishtank::RngStream;
use proptest::prelude::*;

#[test]
fn tail_probabilities_match_reference_points() {
    suite::stats::reference_tails().unwrap();
}

#[test]
fn worked_examples() {
    suite::stats::worked_examples().unwrap();
}

#[test]
fn two_group_anova_is_squared_t() {
    suite::stats::anova_is_squared_t().unwrap();
}

#[test]
fn near_null_samples_give_small_t_and_identical_groups_zero_f() {
    let near = one_sample_ttest(&[0.5 + 1e-9, 0.5 - 1e-9, 0.5 + 2e-9, 0.5 - 2e-9], 0.5).unwrap();
    assert!(near.t.abs() < 1e-6 && near.p > 0.999);
    let same = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
    assert!(same.f.abs() < 1e-12);
}

#[test]
fn paired_test_is_one_sample_on_differences() {
    let a = [3.0, 4.5, 2.0, 5.0];
    let b = [1.0, 2.0, 1.5, 2.5];
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    assert_eq!(paired_ttest(&a, &b).unwrap(), one_sample_ttest(&d, 0.0).unwrap());
}

fn sample(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-2.0, 3.0)).collect()
}

proptest! {
    #[test]
    fn t_is_shift_invariant(seed in any::<u64>(), n in 2usize..30, c in -100.0f64..100.0, mu in -1.0f64..1.0) {
        let mut rng = RngStream::new(seed);
        let v = sample(&mut rng, n);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let (a, b) = (one_sample_ttest(&v, mu).unwrap(), one_sample_ttest(&shifted, mu + c).unwrap());
        prop_assert!((a.t - b.t).abs() <= 1e-6 * a.t.abs().max(1.0));
    }

    #[test]
    fn sem_is_homogeneous(seed in any::<u64>(), n in 2usize..30, c in -10.0f64..10.0) {
        let mut rng = RngStream::new(seed);
        let v = sample(&mut rng, n);
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((sem(&scaled).unwrap() - c.abs() * sem(&v).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn preference_is_rigid_motion_invariant(seed in any::<u64>(), angle in 0.0f64..std::f64::consts::TAU, dx in -50.0f64..50.0, dz in -50.0f64..50.0) {
        let mut rng = RngStream::new(seed);
        let pts: Vec<Point> = (0..200).map(|_| [rng.uniform_range(-15.0, 15.0), rng.uniform_range(-5.0, 5.0)]).collect();
        let (fam, nov) = ([12.0, 0.0], [-12.0, 0.0]);
        let (s, c) = angle.sin_cos();
        let mv = |p: Point| [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dz];
        let moved: Vec<Point> = pts.iter().map(|&p| mv(p)).collect();
        let a = preference_proportion(&pts, fam, nov).unwrap();
        let b = preference_proportion(&moved, mv(fam), mv(nov)).unwrap();
        prop_assert_eq!(a.proportion, b.proportion);
    }

    #[test]
    fn swapping_pigments_swaps_in_and_out(seed in any::<u64>(), focal in 0usize..8) {
        let mut rng = RngStream::new(seed);
        let steps: Vec<Vec<Point>> = (0..5).map(|_| (0..8).map(|_| [rng.uniform_range(-7.0, 7.0), rng.uniform_range(-7.0, 7.0)]).collect()).collect();
        let pig: Vec<Pigment> = (0..8).map(|i| if i % 2 == 0 { Pigment::Orange } else { Pigment::Blue }).collect();
        let (i, o) = segregation_distances(&steps, &pig, focal).unwrap();
        // Companions change color, the focal fish keeps its own.
        let swapped: Vec<Pigment> = pig.iter().enumerate().map(|(j, &p)| if j == focal { p } else { p.other() }).collect();
        let (i2, o2) = segregation_distances(&steps, &swapped, focal).unwrap();
        prop_assert_eq!((i2, o2), (o, i));
        // Relabelling everyone changes nothing.
        let all: Vec<Pigment> = pig.iter().map(|p| p.other()).collect();
        prop_assert_eq!(segregation_distances(&steps, &all, focal).unwrap(), (i, o));
    }
}

#[test]
fn random_static_configurations_are_exchangeable() {
    let mut rng = RngStream::new(77);
    let pig: Vec<Pigment> = (0..8).map(|i| if i < 4 { Pigment::Orange } else { Pigment::Blue }).collect();
    let diffs: Vec<f64> = (0..1000)
        .map(|_| {
            let step: Vec<Point> = (0..8).map(|_| [rng.uniform_range(-7.0, 7.0), rng.uniform_range(-7.0, 7.0)]).collect();
            let (i, o) = segregation_distances(&[step], &pig, rng.below(8)).unwrap();
            i - o
        })
        .collect();
    // Within four standard errors of zero.
    let m = mean(&diffs);
    assert!(m.abs() < 4.0 * sem(&diffs).unwrap(), "mean in-out difference {m}");
}
