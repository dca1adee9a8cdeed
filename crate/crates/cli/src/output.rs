use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fishtank::checkpoint::Checkpoint;
use fishtank::config::ExperimentConfig;
use fishtank::render::Pigment;
use serde::Serialize;

pub const CONFIG_ECHO: &str = "config.toml";
pub const CHECKPOINT_EXT: &str = "fsht";

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Serialize)]
struct SeedRow {
    fish_id: usize,
    pigment: Pigment,
    seed: u64,
}

/// Writes the resolved configuration and per-fish seeds beside a run's outputs.
pub fn write_echo(dir: &Path, cfg: &ExperimentConfig, fish: &[(u32, Pigment, u64)]) -> anyhow::Result<()> {
    fs::write(dir.join(CONFIG_ECHO), cfg.to_toml())?;
    let mut w = csv::Writer::from_path(dir.join("seeds.csv"))?;
    for &(id, pigment, seed) in fish {
        w.serialize(SeedRow { fish_id: id as usize, pigment, seed })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn checkpoint_name(fish_id: u32, pigment: Pigment, step: Option<u64>) -> String {
    match step {
        Some(s) => format!("fish{fish_id:02}-{pigment}-step{s:09}.{CHECKPOINT_EXT}"),
        None => format!("fish{fish_id:02}-{pigment}-final.{CHECKPOINT_EXT}"),
    }
}

/// Expands directories to their final checkpoints (sorted); files pass through.
pub fn resolve_checkpoints(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(&format!("-final.{CHECKPOINT_EXT}"))))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(fishtank::Error::Checkpoint(format!("no final checkpoints in {}", p.display())).into());
            }
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Loads checkpoints, warning when they were written under a different configuration.
pub fn load_checkpoints(paths: &[PathBuf], cfg: &ExperimentConfig) -> anyhow::Result<Vec<Checkpoint>> {
    let hash = cfg.training_hash();
    paths
        .iter()
        .map(|p| {
            let c = Checkpoint::load(p)?;
            if c.meta.config_hash != hash {
                log::warn!("{} was written under config {:016x}, current config is {:016x}", p.display(), c.meta.config_hash, hash);
            }
            Ok(c)
        })
        .collect()
}
