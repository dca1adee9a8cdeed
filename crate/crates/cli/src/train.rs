use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::Context;
use fishtank::checkpoint::Checkpoint;
use fishtank::config::ExperimentConfig;
use fishtank::protocols::{initial_learners, run_rearing, Learner, RearingEvent};
use serde::Deserialize;

use crate::output::{checkpoint_name, ensure_dir, write_echo, CHECKPOINT_EXT};
use crate::plot;

fn metrics_path(out: &Path, fish_id: u32) -> PathBuf {
    out.join(format!("metrics-fish{fish_id:02}.csv"))
}

/// Step checkpoints per fish: `fish_id -> step -> path`.
fn scan_checkpoints(dir: &Path) -> anyhow::Result<BTreeMap<u32, BTreeMap<u64, PathBuf>>> {
    let mut found: BTreeMap<u32, BTreeMap<u64, PathBuf>> = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(found);
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(&format!(".{CHECKPOINT_EXT}")) else { continue };
        let parts: Vec<&str> = stem.split('-').collect();
        if let [fish, _, step] = parts[..] {
            if let (Some(id), Some(s)) = (fish.strip_prefix("fish").and_then(|v| v.parse().ok()), step.strip_prefix("step").and_then(|v| v.parse().ok())) {
                found.entry(id).or_default().insert(s, path);
            }
        }
    }
    Ok(found)
}

/// Latest step at which every fish has a checkpoint.
fn resume_learners(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<Vec<Learner>> {
    let found = scan_checkpoints(dir)?;
    let n = cfg.fish_count() as u32;
    let common = (0..n)
        .map(|id| found.get(&id).map(|m| m.keys().copied().collect::<Vec<_>>()).unwrap_or_default())
        .reduce(|a, b| a.into_iter().filter(|s| b.contains(s)).collect())
        .unwrap_or_default();
    let Some(&step) = common.iter().max() else {
        return Err(fishtank::Error::Checkpoint(format!("no step reached by all {n} fish in {}", dir.display())).into());
    };
    log::info!("resuming all fish from step {step}");
    (0..n)
        .map(|id| {
            let ck = Checkpoint::load(&found[&id][&step])?;
            if ck.meta.config_hash != cfg.training_hash() {
                log::warn!("fish {id}: checkpoint was written under a different configuration");
            }
            Ok(Learner::from_checkpoint(cfg, &ck)?)
        })
        .collect()
}

/// Drops metric rows past `step` so a resumed run appends cleanly.
fn truncate_metrics(path: &Path, step: u64) -> anyhow::Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = headers.iter().position(|h| h == "env_step").context("metrics file lacks env_step")?;
    let mut keep = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec[col].parse::<u64>().map_err(|e| fishtank::Error::Data(format!("{}: {e}", path.display())))? <= step {
            keep.push(rec);
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&headers)?;
    for rec in keep {
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CurvePoint {
    env_step: u64,
    mean_intrinsic_reward: f64,
}

pub fn train(cfg: &ExperimentConfig, out: &Path, resume: bool) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let ckdir = out.join("checkpoints");
    ensure_dir(&ckdir)?;
    let learners = if resume { resume_learners(cfg, &ckdir)? } else { initial_learners(cfg)? };
    write_echo(out, cfg, &learners.iter().map(|l| (l.fish_id, l.pigment, l.seed)).collect::<Vec<_>>())?;

    let mut writers = Vec::with_capacity(learners.len());
    for l in &learners {
        let path = metrics_path(out, l.fish_id);
        if resume {
            truncate_metrics(&path, l.env_step)?;
        }
        let append = resume && path.exists();
        let file: File = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(&path)?;
        writers.push(Mutex::new(csv::WriterBuilder::new().has_headers(!append).from_writer(file)));
    }
    let hash = cfg.training_hash();
    let total = cfg.ppo.max_steps;
    run_rearing(cfg, learners, &|event| {
        match event {
            RearingEvent::Update(r) => {
                let mut w = writers[r.fish_id as usize].lock().expect("metrics writer");
                w.serialize(r)?;
                w.flush()?;
                log::info!(
                    "fish {} ({}) step {}/{}: reward {:.4e}, policy {:.4}, value {:.4}, entropy {:.3}",
                    r.fish_id, r.pigment, r.env_step, total, r.mean_intrinsic_reward, r.policy_loss, r.value_loss, r.entropy
                );
            }
            RearingEvent::Checkpoint { learner, last } => {
                let ck = learner.to_checkpoint(hash);
                ck.save(&ckdir.join(checkpoint_name(learner.fish_id, learner.pigment, Some(learner.env_step))))?;
                if last {
                    ck.save(&ckdir.join(checkpoint_name(learner.fish_id, learner.pigment, None)))?;
                }
            }
        }
        Ok(())
    })?;

    let mut curves = Vec::new();
    for id in 0..cfg.fish_count() as u32 {
        let mut r = csv::Reader::from_path(metrics_path(out, id))?;
        let pts: Vec<(f64, f64)> = r.deserialize::<CurvePoint>().map(|p| p.map(|p| (p.env_step as f64, p.mean_intrinsic_reward))).collect::<Result<_, _>>()?;
        curves.push(pts);
    }
    plot::learning_curves(&curves, cfg.protocol.fish_per_group).save(out.join("learning_curve.png"))?;
    log::info!("training finished; outputs in {}", out.display());
    Ok(())
}
