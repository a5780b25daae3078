//! Readers and writers for maps, scene logs, scenarios and run configs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use scene_forecaster_core::config::RunConfig;
use scene_forecaster_core::scenario::archetypes::{named_map, Archetype};
use scene_forecaster_core::scenario::{Frame, ScenarioSpec, SceneLog};
use scene_forecaster_core::{LaneGraph, MapSpec};

fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(s)
}

pub fn parse_map(json: &str) -> Result<LaneGraph> {
    let spec: MapSpec = serde_json::from_str(json).context("malformed map JSON")?;
    Ok(LaneGraph::from_spec(&spec)?)
}

pub fn read_map(path: &Path) -> Result<LaneGraph> {
    parse_map(&read_to_string(path)?).with_context(|| format!("in map {}", path.display()))
}

/// Map from a file, or a built-in map when no such file exists.
pub fn resolve_map(arg: &str) -> Result<LaneGraph> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(spec) = named_map(arg) {
            return Ok(LaneGraph::from_spec(&spec)?);
        }
    }
    read_map(path)
}

pub fn write_map(spec: &MapSpec, path: &Path) -> Result<()> {
    write_json(spec, path)
}

/// Scenario from a JSON file, or an archetype by name.
pub fn resolve_scenario(arg: &str, seed: u64) -> Result<ScenarioSpec> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(arch) = Archetype::from_name(arg) {
            return Ok(arch.spec(seed));
        }
    }
    let mut spec: ScenarioSpec =
        serde_json::from_str(&read_to_string(path)?).with_context(|| format!("malformed scenario {}", path.display()))?;
    spec.seed = seed;
    Ok(spec)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(&read_to_string(path)?).with_context(|| format!("malformed config {}", path.display()))?;
    Ok(config)
}

pub fn parse_scene_log<R: BufRead>(reader: R) -> Result<SceneLog> {
    let mut log = SceneLog::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("line {}", n + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: Frame = serde_json::from_str(&line).with_context(|| format!("line {}: malformed frame", n + 1))?;
        log.frames.push(frame);
    }
    if log.frames.is_empty() {
        bail!("scene log has no frames");
    }
    log.validate()?;
    Ok(log)
}

pub fn read_scene_log(path: &Path) -> Result<SceneLog> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_scene_log(BufReader::new(file)).with_context(|| format!("in scene log {}", path.display()))
}

pub fn write_scene_log<W: Write>(log: &SceneLog, mut out: W) -> Result<()> {
    for frame in &log.frames {
        serde_json::to_writer(&mut out, frame)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: serde::Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
