use std::f64::consts::TAU;
use std::path::Path;

use anyhow::Context;
use fishtank::checkpoint::Checkpoint;
use fishtank::config::ExperimentConfig;
use fishtank::ppo::PolicyNet;
use fishtank::protocols::{
    afc_layout, afc_world, load_frozen_policy, run_2afc, run_segregation, AfcSpec, Controller, PolicyController, SegSpec, SegSubject,
};
use fishtank::render::{render_view, CameraModel, Observation, Pigment};
use fishtank::rng::RngStream;
use fishtank::stats::{summarize_preference, summarize_segregation, SubjectPreference, SubjectSegregation};
use fishtank::world::{AgentPose, TrajectoryRow, TrajectoryWriter, WorldState};
use serde::{Deserialize, Serialize};

use crate::output::{ensure_dir, load_checkpoints, resolve_checkpoints, write_csv, write_echo};
use crate::plot;

pub const AFC_TRIALS: &str = "afc-trials.csv";
pub const SEG_TRIALS: &str = "seg-trials.csv";
pub const DISTANCE_MATRIX: &str = "distance-matrix.csv";

#[derive(Debug, Serialize, Deserialize)]
pub struct AfcRow {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub trial: usize,
    pub familiar_left: bool,
    pub preference_proportion: f64,
    pub counted_steps: usize,
    pub all_ties: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegRow {
    pub fish_id: u32,
    pub pigment: Pigment,
    pub trial: usize,
    pub in_dist: f64,
    pub out_dist: f64,
}

fn load_policies(cfg: &ExperimentConfig, cks: &[Checkpoint]) -> anyhow::Result<Vec<PolicyNet<f32>>> {
    cks.iter()
        .map(|c| load_frozen_policy(cfg, c).with_context(|| format!("loading fish {}", c.meta.fish_id)))
        .collect()
}

fn save_frame(obs: &Observation, path: &Path) -> anyhow::Result<()> {
    let img = image::RgbImage::from_raw(64, 64, obs.to_rgb8()).context("frame buffer size")?;
    img.save(path)?;
    Ok(())
}

/// Replays recorded poses through a fresh world so the frames match what the fish saw.
fn replay_frames(mut world: WorldState, poses: &[Vec<AgentPose>], viewers: &[usize], n: usize, dir: &Path, tag: &str) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    let cam = CameraModel::default();
    let agents: Vec<usize> = world.agents().collect();
    let phase_step = world.kinematics.phase_step;
    for (s, step) in poses.iter().take(n).enumerate() {
        let scene = world.scene();
        for &v in viewers {
            save_frame(&render_view(&scene, v, &cam), &dir.join(format!("{tag}-fish{v:02}-step{s:05}.png")))?;
        }
        for (&i, p) in agents.iter().zip(step) {
            world.fish[i].pose = *p;
        }
        for f in &mut world.fish {
            f.phase = (f.phase + phase_step) % TAU;
        }
    }
    Ok(())
}

fn write_trajectory(path: &Path, trial: usize, ids: &[u32], pigments: &[Pigment], poses: &[Vec<AgentPose>], append_to: &mut Option<TrajectoryWriter<std::fs::File>>) -> anyhow::Result<()> {
    if append_to.is_none() {
        *append_to = Some(TrajectoryWriter::new(std::fs::File::create(path)?));
    }
    let w = append_to.as_mut().expect("created above");
    for (s, step) in poses.iter().enumerate() {
        for ((p, &id), pig) in step.iter().zip(ids).zip(pigments) {
            w.write(&TrajectoryRow { trial_id: trial, step: s, fish_id: id as usize, pigment: pig.to_string(), x: p.x, z: p.z, heading: p.heading })?;
        }
    }
    Ok(())
}

pub fn test_2afc(cfg: &ExperimentConfig, paths: &[std::path::PathBuf], out: &Path, dump_frames: Option<usize>) -> anyhow::Result<()> {
    let paths = resolve_checkpoints(paths)?;
    let cks = load_checkpoints(&paths, cfg)?;
    let policies = load_policies(cfg, &cks)?;
    ensure_dir(out)?;
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    let mut traj = None;
    for (ck, policy) in cks.iter().zip(&policies) {
        let (id, pigment) = (ck.meta.fish_id, ck.meta.pigment);
        let seed = RngStream::derive(cfg.protocol.seed, "afc", id as u64).next_u64();
        seeds.push((id, pigment, seed));
        let mut spec = AfcSpec::from_config(cfg, seed);
        if dump_frames.is_some() {
            spec.keep_poses = spec.keep_poses.max(1);
        }
        let before = policy.params.fingerprint();
        log::info!("2AFC: fish {id} ({pigment}), {} trials x {} steps", spec.trials, spec.steps);
        let trials = run_2afc(cfg, pigment, &PolicyController(policy), &spec)?;
        anyhow::ensure!(before == policy.params.fingerprint(), "weights of fish {id} changed during testing");
        for t in &trials {
            rows.push(AfcRow {
                fish_id: id,
                pigment,
                trial: t.trial,
                familiar_left: t.familiar_left,
                preference_proportion: t.preference.proportion,
                counted_steps: t.preference.counted,
                all_ties: t.preference.all_ties,
            });
            if let Some(p) = &t.poses {
                let steps: Vec<Vec<AgentPose>> = p.iter().map(|&q| vec![q]).collect();
                write_trajectory(&out.join("afc-trajectories.csv"), t.trial, &[id], &[pigment], &steps, &mut traj)?;
            }
        }
        if let (Some(n), Some(t0)) = (dump_frames, trials.first().and_then(|t| t.poses.as_ref())) {
            let mut world = afc_world(cfg, &afc_layout(cfg), pigment, true, spec.steps);
            world.reset_episode(&mut RngStream::derive(spec.seed, "afc-spawn", 0));
            let steps: Vec<Vec<AgentPose>> = t0.iter().map(|&q| vec![q]).collect();
            replay_frames(world, &steps, &[0], n, &out.join("frames"), &format!("afc-id{id:02}"))?;
        }
    }
    if let Some(mut w) = traj {
        w.flush()?;
    }
    write_echo(out, cfg, &seeds)?;
    write_csv(&out.join(AFC_TRIALS), &rows)?;
    write_afc_outputs(out, &rows)
}

pub fn afc_subjects(rows: &[AfcRow]) -> Vec<SubjectPreference> {
    let mut subjects: Vec<SubjectPreference> = Vec::new();
    for r in rows {
        match subjects.iter_mut().find(|s| s.fish_id == r.fish_id) {
            Some(s) => s.proportions.push(r.preference_proportion),
            None => subjects.push(SubjectPreference { fish_id: r.fish_id, pigment: r.pigment, proportions: vec![r.preference_proportion] }),
        }
    }
    subjects
}

#[derive(Serialize)]
struct FishTestRow {
    fish_id: u32,
    pigment: Pigment,
    trials: usize,
    mean: f64,
    sem: Option<f64>,
    t: Option<f64>,
    df: Option<f64>,
    p: Option<f64>,
}

#[derive(Serialize)]
struct GroupRow {
    fish: usize,
    mean: f64,
    sem: Option<f64>,
    t: Option<f64>,
    df: Option<f64>,
    p: Option<f64>,
    anova_f: Option<f64>,
    anova_df_between: Option<f64>,
    anova_df_within: Option<f64>,
    anova_p: Option<f64>,
}

pub fn write_afc_outputs(out: &Path, rows: &[AfcRow]) -> anyhow::Result<()> {
    let s = summarize_preference(&afc_subjects(rows))?;
    write_csv(
        &out.join("afc-fish-summary.csv"),
        s.fish.iter().map(|f| FishTestRow {
            fish_id: f.fish_id,
            pigment: f.pigment,
            trials: f.trials,
            mean: f.mean,
            sem: f.sem,
            t: f.test.map(|t| t.t),
            df: f.test.map(|t| t.df),
            p: f.test.map(|t| t.p),
        }),
    )?;
    write_csv(
        &out.join("afc-group-summary.csv"),
        [GroupRow {
            fish: s.fish.len(),
            mean: s.group_mean,
            sem: s.group_sem,
            t: s.group_test.map(|t| t.t),
            df: s.group_test.map(|t| t.df),
            p: s.group_test.map(|t| t.p),
            anova_f: s.anova.map(|a| a.f),
            anova_df_between: s.anova.map(|a| a.df_between),
            anova_df_within: s.anova.map(|a| a.df_within),
            anova_p: s.anova.map(|a| a.p),
        }],
    )?;
    let report = s.report();
    print!("{report}");
    std::fs::write(out.join("afc-report.txt"), &report)?;
    let bars: Vec<(Pigment, f64, f64)> = s.fish.iter().map(|f| (f.pigment, f.mean, f.sem.unwrap_or(0.0))).collect();
    plot::preference_bars(&bars).save(out.join("afc-preference.png"))?;
    Ok(())
}

pub fn test_segregation(cfg: &ExperimentConfig, paths: &[std::path::PathBuf], out: &Path, dump_frames: Option<usize>) -> anyhow::Result<()> {
    let paths = resolve_checkpoints(paths)?;
    let mut cks = load_checkpoints(&paths, cfg)?;
    cks.sort_by_key(|c| c.meta.fish_id);
    let per = cfg.protocol.fish_per_group;
    let orange = cks.iter().filter(|c| c.meta.pigment == Pigment::Orange).count();
    if cks.len() != 2 * per || orange != per {
        return Err(fishtank::Error::Config(format!(
            "segregation needs {} checkpoints, {per} per pigment; got {} ({orange} orange)",
            2 * per,
            cks.len()
        ))
        .into());
    }
    let policies = load_policies(cfg, &cks)?;
    let before: Vec<_> = policies.iter().map(|p| p.params.fingerprint()).collect();
    let controllers: Vec<PolicyController> = policies.iter().map(PolicyController).collect();
    let subjects: Vec<SegSubject> = cks
        .iter()
        .zip(&controllers)
        .map(|(c, ctl)| SegSubject { fish_id: c.meta.fish_id, pigment: c.meta.pigment, controller: ctl as &dyn Controller })
        .collect();
    let seed = RngStream::derive(cfg.protocol.seed, "seg", 0).next_u64();
    let mut spec = SegSpec::from_config(cfg, seed);
    if dump_frames.is_some() {
        spec.keep_poses = spec.keep_poses.max(1);
    }
    ensure_dir(out)?;
    log::info!("segregation: {} fish, {} trials x {} steps", subjects.len(), spec.trials, spec.steps);
    let trials = run_segregation(cfg, &subjects, &spec)?;
    let after: Vec<_> = policies.iter().map(|p| p.params.fingerprint()).collect();
    anyhow::ensure!(before == after, "weights changed during testing");

    let ids: Vec<u32> = subjects.iter().map(|s| s.fish_id).collect();
    let pigments: Vec<Pigment> = subjects.iter().map(|s| s.pigment).collect();
    let mut rows = Vec::new();
    let n = subjects.len();
    let mut matrix = vec![vec![0.0; n]; n];
    let mut traj = None;
    for t in &trials {
        for (k, &(i, o)) in t.pairs.iter().enumerate() {
            rows.push(SegRow { fish_id: ids[k], pigment: pigments[k], trial: t.trial, in_dist: i, out_dist: o });
        }
        for (acc, row) in matrix.iter_mut().zip(&t.distances) {
            for (a, d) in acc.iter_mut().zip(row) {
                *a += d / trials.len() as f64;
            }
        }
        if let Some(p) = &t.poses {
            write_trajectory(&out.join("seg-trajectories.csv"), t.trial, &ids, &pigments, p, &mut traj)?;
        }
    }
    if let Some(mut w) = traj {
        w.flush()?;
    }
    if let (Some(k), Some(t0)) = (dump_frames, trials.first().and_then(|t| t.poses.as_ref())) {
        let mut world = WorldState::new(cfg.world.segregation_tank(), spec.steps, cfg.world.kinematics());
        for &p in &pigments {
            world.add_agent(p);
        }
        world.spawn_ring = cfg.world.spawn_ring;
        world.reset_episode(&mut RngStream::derive(spec.seed, "seg-spawn", 0));
        let viewers: Vec<usize> = (0..n).collect();
        replay_frames(world, t0, &viewers, k, &out.join("frames"), "seg")?;
    }
    write_echo(out, cfg, &cks.iter().map(|c| (c.meta.fish_id, c.meta.pigment, seed)).collect::<Vec<_>>())?;
    write_csv(&out.join(SEG_TRIALS), &rows)?;
    write_matrix(&out.join(DISTANCE_MATRIX), &ids, &matrix)?;
    write_seg_outputs(out, &rows, Some((&ids, &matrix)))
}

fn write_matrix(path: &Path, ids: &[u32], m: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["fish_id".to_owned()];
    header.extend(ids.iter().map(|i| i.to_string()));
    w.write_record(&header)?;
    for (id, row) in ids.iter().zip(m) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> anyhow::Result<(Vec<u32>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut ids = Vec::new();
    let mut m = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| fishtank::Error::Data(format!("{}: {e}", path.display())));
        ids.push(parse(&rec[0])? as u32);
        m.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((ids, m))
}

pub fn seg_subjects(rows: &[SegRow]) -> Vec<SubjectSegregation> {
    let mut subjects: Vec<SubjectSegregation> = Vec::new();
    for r in rows {
        match subjects.iter_mut().find(|s| s.fish_id == r.fish_id) {
            Some(s) => s.pairs.push((r.in_dist, r.out_dist)),
            None => subjects.push(SubjectSegregation { fish_id: r.fish_id, pigment: r.pigment, pairs: vec![(r.in_dist, r.out_dist)] }),
        }
    }
    subjects
}

#[derive(Serialize)]
struct SegFishRow {
    fish_id: u32,
    pigment: Pigment,
    trials: usize,
    mean_in: f64,
    mean_out: f64,
    t: Option<f64>,
    df: Option<f64>,
    p: Option<f64>,
}

#[derive(Serialize)]
struct SegGroupRow {
    fish: usize,
    mean_in: f64,
    mean_out: f64,
    t: Option<f64>,
    df: Option<f64>,
    p: Option<f64>,
    anova_f: Option<f64>,
    anova_df_between: Option<f64>,
    anova_df_within: Option<f64>,
    anova_p: Option<f64>,
}

pub fn write_seg_outputs(out: &Path, rows: &[SegRow], matrix: Option<(&[u32], &[Vec<f64>])>) -> anyhow::Result<()> {
    let s = summarize_segregation(&seg_subjects(rows))?;
    write_csv(
        &out.join("seg-fish-summary.csv"),
        s.fish.iter().map(|f| SegFishRow {
            fish_id: f.fish_id,
            pigment: f.pigment,
            trials: f.trials,
            mean_in: f.mean_in,
            mean_out: f.mean_out,
            t: f.test.map(|t| t.t),
            df: f.test.map(|t| t.df),
            p: f.test.map(|t| t.p),
        }),
    )?;
    write_csv(
        &out.join("seg-group-summary.csv"),
        [SegGroupRow {
            fish: s.fish.len(),
            mean_in: s.group_mean_in,
            mean_out: s.group_mean_out,
            t: s.group_test.map(|t| t.t),
            df: s.group_test.map(|t| t.df),
            p: s.group_test.map(|t| t.p),
            anova_f: s.anova.map(|a| a.f),
            anova_df_between: s.anova.map(|a| a.df_between),
            anova_df_within: s.anova.map(|a| a.df_within),
            anova_p: s.anova.map(|a| a.p),
        }],
    )?;
    let report = s.report();
    print!("{report}");
    std::fs::write(out.join("seg-report.txt"), &report)?;
    let bars: Vec<(Pigment, f64, f64)> = s.fish.iter().map(|f| (f.pigment, f.mean_in, f.mean_out)).collect();
    plot::segregation_bars(&bars).save(out.join("seg-distances.png"))?;
    if let Some((ids, m)) = matrix {
        let pig: Vec<Pigment> = ids.iter().map(|id| s.fish.iter().find(|f| f.fish_id == *id).map_or(Pigment::Orange, |f| f.pigment)).collect();
        plot::heatmap(m, &pig).save(out.join("distance-heatmap.png"))?;
    }
    Ok(())
}
