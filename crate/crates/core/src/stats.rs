//! Behavioral metrics and the tests used to report them.
//!
//! Student-t and F tail probabilities come from `statrs`, which evaluates the
//! regularized incomplete beta function by continued fraction.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{ensure, Error, Result};
use crate::render::Pigment;

pub type Point = [f64; 2];

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the `n − 1` denominator.
fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Standard error of the mean.
pub fn sem(values: &[f64]) -> Result<f64> {
    ensure!(values.len() >= 2, Contract, "SEM needs at least 2 values, got {}", values.len());
    Ok((variance(values) / values.len() as f64).sqrt())
}

/// Two-tailed `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Upper tail `P(F ≥ f)` of the F distribution.
pub fn f_upper_p(f: f64, df1: f64, df2: f64) -> f64 {
    FisherSnedecor::new(df1, df2).expect("df > 0").sf(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn one_sample_ttest(values: &[f64], mu0: f64) -> Result<TTest> {
    ensure!(values.len() >= 2, Contract, "t-test needs at least 2 values, got {}", values.len());
    let var = variance(values);
    ensure!(var > 0.0, Degenerate, "t-test on a zero-variance sample");
    let n = values.len() as f64;
    let t = (mean(values) - mu0) / (var / n).sqrt();
    let df = n - 1.0;
    Ok(TTest { t, df, p: t_two_tailed_p(t, df) })
}

/// Paired test of `a − b` against zero.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    ensure!(a.len() == b.len(), Dimension, "paired samples differ in length: {} vs {}", a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    one_sample_ttest(&d, 0.0)
}

/// Pooled-variance two-sample test.
pub fn two_sample_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    ensure!(a.len() >= 2 && b.len() >= 2, Contract, "two-sample t-test needs 2+ values per group");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / df;
    ensure!(pooled > 0.0, Degenerate, "two-sample t-test with zero pooled variance");
    let t = (mean(a) - mean(b)) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTest { t, df, p: t_two_tailed_p(t, df) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<Anova> {
    ensure!(groups.len() >= 2, Contract, "ANOVA needs at least 2 groups");
    ensure!(groups.iter().all(|g| g.len() >= 2), Contract, "every ANOVA group needs at least 2 values");
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let ssb: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ssw: f64 = groups.iter().map(|g| {
        let m = mean(g);
        g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    }).sum();
    ensure!(ssw > 0.0, Degenerate, "ANOVA with zero within-group variance");
    let df_between = (groups.len() - 1) as f64;
    let df_within = (all.len() - groups.len()) as f64;
    let f = (ssb / df_between) / (ssw / df_within);
    Ok(Anova { f, df_between, df_within, p: f_upper_p(f, df_between, df_within) })
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Share of time spent nearer the familiar shoal center than the novel one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preference {
    pub proportion: f64,
    /// Steps that were strictly nearer one of the two centers.
    pub counted: usize,
    /// Every step was equidistant; `proportion` is reported as 0.5.
    pub all_ties: bool,
}

pub fn preference_proportion(focal: &[Point], familiar: Point, novel: Point) -> Result<Preference> {
    ensure!(!focal.is_empty(), Contract, "preference of an empty trial");
    let (mut near, mut counted) = (0usize, 0usize);
    for &p in focal {
        let (df, dn) = (dist(p, familiar), dist(p, novel));
        if df != dn {
            counted += 1;
            near += usize::from(df < dn);
        }
    }
    Ok(if counted == 0 {
        Preference { proportion: 0.5, counted, all_ties: true }
    } else {
        Preference { proportion: near as f64 / counted as f64, counted, all_ties: false }
    })
}

/// Mean over steps of `fish`'s mean distance to same-pigment and to other-pigment fish.
pub fn segregation_distances(steps: &[Vec<Point>], pigments: &[Pigment], fish: usize) -> Result<(f64, f64)> {
    ensure!(!steps.is_empty(), Contract, "segregation distances of an empty trial");
    ensure!(fish < pigments.len(), Data, "fish {fish} not among {} fish", pigments.len());
    let same: Vec<usize> = (0..pigments.len()).filter(|&j| j != fish && pigments[j] == pigments[fish]).collect();
    let other: Vec<usize> = (0..pigments.len()).filter(|&j| pigments[j] != pigments[fish]).collect();
    ensure!(!same.is_empty() && !other.is_empty(), Data, "fish {fish} lacks in-group or out-group companions");
    let (mut din, mut dout) = (0.0, 0.0);
    for (t, pos) in steps.iter().enumerate() {
        if pos.len() != pigments.len() {
            return Err(Error::Data(format!("step {t} has {} fish, expected {}", pos.len(), pigments.len())));
        }
        din += same.iter().map(|&j| dist(pos[fish], pos[j])).sum::<f64>() / same.len() as f64;
        dout += other.iter().map(|&j| dist(pos[fish], pos[j])).sum::<f64>() / other.len() as f64;
    }
    let n = steps.len() as f64;
    Ok((din / n, dout / n))
}

/// Time-averaged pairwise distances; symmetric with a zero diagonal.
pub fn mean_distance_matrix(steps: &[Vec<Point>]) -> Result<Vec<Vec<f64>>> {
    ensure!(!steps.is_empty(), Contract, "distance matrix of an empty trial");
    let k = steps[0].len();
    let mut m = vec![vec![0.0; k]; k];
    for (t, pos) in steps.iter().enumerate() {
        ensure!(pos.len() == k, Data, "step {t} has {} fish, expected {k}", pos.len());
        for i in 0..k {
            for j in i + 1..k {
                let d = dist(pos[i], pos[j]);
                m[i][j] += d;
                m[j][i] += d;
            }
        }
    }
    let n = steps.len() as f64;
    m.iter_mut().flatten().for_each(|v| *v /= n);
    Ok(m)
}

/// Sample whose test could not be computed (fewer than two values or zero spread) yields `None`.
fn try_test(r: Result<TTest>) -> Result<Option<TTest>> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(Error::Degenerate(_) | Error::Contract(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn try_anova(groups: &[Vec<f64>]) -> Result<Option<Anova>> {
    match one_way_anova(groups) {
        Ok(a) => Ok(Some(a)),
        Err(Error::Degenerate(_) | Error::Contract(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn try_sem(values: &[f64]) -> Option<f64> {
    sem(values).ok()
}

/// Per-trial results of one subject in the choice test.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectPreference {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FishPreferenceSummary {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub trials: usize,
    pub mean: f64,
    pub sem: Option<f64>,
    /// Trial proportions against chance.
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceSummary {
    pub fish: Vec<FishPreferenceSummary>,
    pub group_mean: f64,
    pub group_sem: Option<f64>,
    /// Fish means against chance; `df = fish − 1`.
    pub group_test: Option<TTest>,
    /// Per-trial proportions grouped by subject.
    pub anova: Option<Anova>,
}

pub const CHANCE: f64 = 0.5;

pub fn summarize_preference(subjects: &[SubjectPreference]) -> Result<PreferenceSummary> {
    ensure!(!subjects.is_empty(), Contract, "no subjects to summarize");
    let mut fish = Vec::with_capacity(subjects.len());
    for s in subjects {
        ensure!(!s.proportions.is_empty(), Contract, "fish {} has no trials", s.fish_id);
        ensure!(s.proportions.iter().all(|p| (0.0..=1.0).contains(p)), Data, "fish {} has a proportion outside [0, 1]", s.fish_id);
        fish.push(FishPreferenceSummary {
            fish_id: s.fish_id,
            pigment: s.pigment,
            trials: s.proportions.len(),
            mean: mean(&s.proportions),
            sem: try_sem(&s.proportions),
            test: try_test(one_sample_ttest(&s.proportions, CHANCE))?,
        });
    }
    let means: Vec<f64> = fish.iter().map(|f| f.mean).collect();
    let groups: Vec<Vec<f64>> = subjects.iter().map(|s| s.proportions.clone()).collect();
    Ok(PreferenceSummary {
        group_mean: mean(&means),
        group_sem: try_sem(&means),
        group_test: try_test(one_sample_ttest(&means, CHANCE))?,
        anova: try_anova(&groups)?,
        fish,
    })
}

/// Per-trial `(in, out)` mean distances of one subject in the segregation test.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSegregation {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FishSegregationSummary {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub trials: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    /// Trial-wise `out` against `in`; positive `t` means closer to the in-group.
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegregationSummary {
    pub fish: Vec<FishSegregationSummary>,
    pub group_mean_in: f64,
    pub group_mean_out: f64,
    /// Fish means, `out` against `in`; `df = fish − 1`.
    pub group_test: Option<TTest>,
    /// Per-trial `out − in` grouped by subject.
    pub anova: Option<Anova>,
}

pub fn summarize_segregation(subjects: &[SubjectSegregation]) -> Result<SegregationSummary> {
    ensure!(!subjects.is_empty(), Contract, "no subjects to summarize");
    let mut fish = Vec::with_capacity(subjects.len());
    let mut margins = Vec::with_capacity(subjects.len());
    for s in subjects {
        ensure!(!s.pairs.is_empty(), Contract, "fish {} has no trials", s.fish_id);
        ensure!(s.pairs.iter().all(|&(i, o)| i >= 0.0 && o >= 0.0), Data, "fish {} has a negative distance", s.fish_id);
        let din: Vec<f64> = s.pairs.iter().map(|p| p.0).collect();
        let dout: Vec<f64> = s.pairs.iter().map(|p| p.1).collect();
        margins.push(s.pairs.iter().map(|&(i, o)| o - i).collect::<Vec<f64>>());
        fish.push(FishSegregationSummary {
            fish_id: s.fish_id,
            pigment: s.pigment,
            trials: s.pairs.len(),
            mean_in: mean(&din),
            mean_out: mean(&dout),
            test: try_test(paired_ttest(&dout, &din))?,
        });
    }
    let fin: Vec<f64> = fish.iter().map(|f| f.mean_in).collect();
    let fout: Vec<f64> = fish.iter().map(|f| f.mean_out).collect();
    Ok(SegregationSummary {
        group_mean_in: mean(&fin),
        group_mean_out: mean(&fout),
        group_test: try_test(paired_ttest(&fout, &fin))?,
        anova: try_anova(&margins)?,
        fish,
    })
}

fn fmt_p(p: f64) -> String {
    if p < 1e-5 {
        "p < .00001".to_owned()
    } else {
        format!("p = {p:.5}")
    }
}

fn fmt_t(t: &Option<TTest>) -> String {
    match t {
        Some(t) => format!("t({}) = {:.3}, {}", t.df, t.t, fmt_p(t.p)),
        None => "t undefined (degenerate sample)".to_owned(),
    }
}

fn fmt_f(a: &Option<Anova>) -> String {
    match a {
        Some(a) => format!("F({}, {}) = {:.3}, {}", a.df_between, a.df_within, a.f, fmt_p(a.p)),
        None => "F undefined (degenerate sample)".to_owned(),
    }
}

impl PreferenceSummary {
    /// Plain-text results panel: per-fish bars as numbers, then group and subject-identity tests.
    pub fn report(&self) -> String {
        let mut out = String::from("Two-alternative choice: time nearer the familiar-pigment shoal\n");
        for f in &self.fish {
            let sem = f.sem.map_or("n/a".to_owned(), |s| format!("{:.2}%", 100.0 * s));
            out += &format!("  fish {} ({}): {:.1}% (SEM = {sem}, n = {}), {}\n", f.fish_id, f.pigment, 100.0 * f.mean, f.trials, fmt_t(&f.test));
        }
        let sem = self.group_sem.map_or("n/a".to_owned(), |s| format!("{:.1}%", 100.0 * s));
        out += &format!("group: {:.1}% (SEM = {sem}), chance = 50%, {}\n", 100.0 * self.group_mean, fmt_t(&self.group_test));
        out += &format!("subject identity: {}\n", fmt_f(&self.anova));
        out
    }
}

impl SegregationSummary {
    pub fn report(&self) -> String {
        let mut out = String::from("Self-segregation: mean distance to in-group vs out-group\n");
        for f in &self.fish {
            out += &format!(
                "  fish {} ({}): in = {:.3}, out = {:.3} (n = {}), {}\n",
                f.fish_id, f.pigment, f.mean_in, f.mean_out, f.trials, fmt_t(&f.test)
            );
        }
        out += &format!("group: in = {:.3}, out = {:.3}, {}\n", self.group_mean_in, self.group_mean_out, fmt_t(&self.group_test));
        out += &format!("subject identity (out − in): {}\n", fmt_f(&self.anova));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let t = one_sample_ttest(&[0.6, 0.7, 0.8], 0.5).unwrap();
        assert!((t.t - 2.0 * 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(t.df, 2.0);
        assert!((sem(&[0.6, 0.7, 0.8]).unwrap() - 0.1 / 3f64.sqrt()).abs() < 1e-12);
        let a = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap();
        assert!((a.f - 1.5).abs() < 1e-12);
        assert_eq!((a.df_between, a.df_within), (1.0, 4.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(one_sample_ttest(&[0.5, 0.5, 0.5], 0.5), Err(Error::Degenerate(_))));
        assert!(sem(&[1.0]).is_err());
        assert_eq!(sem(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(one_way_anova(&[vec![1.0, 1.0], vec![2.0, 2.0]]), Err(Error::Degenerate(_))));
        assert!(preference_proportion(&[], [1.0, 0.0], [-1.0, 0.0]).is_err());
    }

    #[test]
    fn preference_cases() {
        let parked = preference_proportion(&[[12.0, 0.0]; 30], [12.0, 0.0], [-12.0, 0.0]).unwrap();
        assert_eq!(parked.proportion, 1.0);
        let bisector = preference_proportion(&[[0.0, 3.0]; 30], [12.0, 0.0], [-12.0, 0.0]).unwrap();
        assert!(bisector.all_ties && bisector.proportion == 0.5);
    }

    #[test]
    fn unit_square_geometry() {
        use Pigment::{Blue as B, Orange as O};
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        // Same-pigment pairs share an edge.
        let pig = [O, O, B, B];
        for f in 0..4 {
            let (i, o) = segregation_distances(&[square.clone()], &pig, f).unwrap();
            assert!((i - 1.0).abs() < 1e-12);
            assert!((o - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-12);
        }
        let (i, o) = segregation_distances(&[vec![[0.3, 0.3]; 8]], &[O, O, O, O, B, B, B, B], 5).unwrap();
        assert_eq!((i, o), (0.0, 0.0));
        assert!(segregation_distances(&[square.clone(), square[..3].to_vec()], &pig, 0).is_err());
        let m = mean_distance_matrix(&[square]).unwrap();
        for i in 0..4 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
    }
}
