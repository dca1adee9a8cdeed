//! Statistics against frozen reference values.

use super::{run_property, Outcome};
use fishtank::stats::*;
use fishtank::RngStream;
use proptest::prelude::*;

pub const P_TOL: f64 = 1e-4;

// Two-tailed Student-t tails, (t, df, p), frozen from an independent reference implementation.
pub const T_REFERENCE: [(f64, f64, f64); 6] = [
    (2.0, 5.0, 0.10193947882985828),
    (3.4641016151377544, 2.0, 0.07417990022744854),
    (5.27, 7.0, 0.0011606215097208206),
    (15.5, 7.0, 1.1236665036044053e-06),
    (0.5, 30.0, 0.6207230048851273),
    (1.96, 1000.0, 0.05027318495574871),
];

// Upper F tails, (F, df1, df2, p).
pub const F_REFERENCE: [(f64, f64, f64, f64); 6] = [
    (1.5, 1.0, 4.0, 0.2878641347266907),
    (8.923, 7.0, 7992.0, 5.387522854356342e-11),
    (2.0, 3.0, 20.0, 0.1464388030866216),
    (0.5, 2.0, 10.0, 0.620921323059155),
    (4.0, 5.0, 15.0, 0.016613670764100072),
    (1.0, 10.0, 10.0, 0.5000000000000001),
];

pub fn reference_tails() -> Outcome {
    let mut worst = 0.0f64;
    for (t, df, p) in T_REFERENCE {
        let err = (t_two_tailed_p(t, df) - p).abs();
        require!(err < P_TOL, "t = {t}, df = {df}: off by {err:.2e}");
        worst = worst.max(err);
    }
    for (f, d1, d2, p) in F_REFERENCE {
        let err = (f_upper_p(f, d1, d2) - p).abs();
        require!(err < P_TOL, "F = {f}, df = ({d1}, {d2}): off by {err:.2e}");
        worst = worst.max(err);
    }
    Ok(format!("{} points, worst {worst:.1e}", T_REFERENCE.len() + F_REFERENCE.len()))
}

pub fn worked_examples() -> Outcome {
    let t = one_sample_ttest(&[0.6, 0.7, 0.8], 0.5).map_err(|e| e.to_string())?;
    require!((t.t - 2.0 * 3f64.sqrt()).abs() < 1e-9 && t.df == 2.0, "t = {} on {} df", t.t, t.df);
    let a = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).map_err(|e| e.to_string())?;
    require!((a.f - 1.5).abs() < 1e-12 && (a.df_between, a.df_within) == (1.0, 4.0), "F = {} on ({}, {})", a.f, a.df_between, a.df_within);
    let s = sem(&[0.6, 0.7, 0.8]).map_err(|e| e.to_string())?;
    require!((s - 0.1 / 3f64.sqrt()).abs() < 1e-12, "SEM = {s}");
    Ok(format!("t = {:.6}, F = {:.3}, SEM = {s:.6}", t.t, a.f))
}

fn sample(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-2.0, 3.0)).collect()
}

/// A two-group ANOVA is the squared pooled two-sample t-test.
pub fn anova_is_squared_t() -> Outcome {
    run_property(256, (any::<u64>(), 2usize..20, 2usize..20), |(seed, na, nb)| {
        let mut rng = RngStream::new(seed);
        let (a, b) = (sample(&mut rng, na), sample(&mut rng, nb));
        let f = one_way_anova(&[a.clone(), b.clone()]).unwrap();
        let t = two_sample_ttest(&a, &b).unwrap();
        prop_assert!((f.f - t.t * t.t).abs() <= 1e-9 * f.f.max(1.0));
        prop_assert!((f.p - t.p).abs() < 1e-9);
        Ok(())
    })?;
    Ok("256 random group pairs".into())
}
