//! Plot-ready files. Everything here is written in a fixed order with fixed
//! formatting so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use seeker_core::apf::{FieldContext, PotentialGrid, PotentialParams};
use seeker_core::world::{MissionRecord, PlannerMode};
use seeker_core::Vec2;

use crate::experiments::{BenchmarkOutput, BenchmarkSummary, CircleTest, MapInfo, RunRecord, ToolError};

pub const GRID_RESOLUTION: f64 = 0.5;

/// Index written next to the records so the summary can be rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub map_names: Vec<String>,
    pub tool_errors: Vec<ToolError>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write(path, s)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn run_stem(r: &RunRecord) -> String {
    format!("s{}_m{}_r{}_{}", r.seed, r.map_index + 1, r.run, r.mission.mode.as_str())
}

pub fn write_trail(path: &Path, trail: &[Vec2]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "x", "y"])?;
    for (i, p) in trail.iter().enumerate() {
        w.write_record([i.to_string(), format!("{:.6}", p.x), format!("{:.6}", p.y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_circle(path: &Path, t: &CircleTest) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["true_deg", "est_deg", "err_deg"])?;
    for r in &t.rows {
        w.write_record([format!("{:.6}", r.true_deg), opt(r.est_deg), opt(r.err_deg)])?;
    }
    w.flush()?;
    Ok(())
}

/// Heat-map grid of the full field around `goal` over the whole map.
pub fn potential_grid(info: &MapInfo, params: PotentialParams, goal: Vec2, r_drone: f64) -> PotentialGrid {
    let ctx = FieldContext::new(goal, &info.map.obstacles, params, r_drone);
    let e = info.map.extent;
    PotentialGrid::sample(&ctx, Vec2::ZERO, Vec2::new(e, e), GRID_RESOLUTION)
}

pub fn write_summary_csvs(dir: &Path, s: &BenchmarkSummary) -> Result<()> {
    let modes = [PlannerMode::Standard, PlannerMode::Modified];
    let mut w = csv_writer(&dir.join("success_rates.csv"))?;
    w.write_record(["map", "mode", "successes", "n_runs", "success_rate"])?;
    for m in &s.maps {
        for mode in modes {
            let (k, rate) = match mode {
                PlannerMode::Standard => (m.successes_standard, m.success_rate_standard),
                PlannerMode::Modified => (m.successes_modified, m.success_rate_modified),
            };
            w.write_record([
                m.name.clone(),
                mode.as_str().into(),
                k.to_string(),
                m.n_runs.to_string(),
                format!("{rate:.6}"),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("relative_lengths.csv"))?;
    w.write_record(["map", "mode", "n_both_succeeded", "avg_relative_length"])?;
    for m in &s.maps {
        for mode in modes {
            let l = match mode {
                PlannerMode::Standard => m.avg_relative_length_standard,
                PlannerMode::Modified => m.avg_relative_length_modified,
            };
            w.write_record([m.name.clone(), mode.as_str().into(), m.n_both_succeeded.to_string(), opt(l)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "seed",
        "map",
        "run",
        "mode",
        "outcome",
        "start_x",
        "start_y",
        "target_x",
        "target_y",
        "path_length",
        "straight_distance",
        "relative_length",
        "replans",
        "min_clearance",
        "mean_bearing_error_deg",
    ])?;
    for r in records {
        let m = &r.mission;
        w.write_record([
            r.seed.to_string(),
            r.map_name.clone(),
            r.run.to_string(),
            m.mode.as_str().into(),
            m.outcome.label().into(),
            format!("{:.6}", m.start.x),
            format!("{:.6}", m.start.y),
            format!("{:.6}", m.target.x),
            format!("{:.6}", m.target.y),
            format!("{:.6}", m.path_length),
            format!("{:.6}", m.straight_distance),
            format!("{:.6}", m.relative_length),
            m.replans().to_string(),
            opt(m.min_clearance),
            format!("{:.6}", m.mean_abs_bearing_error().to_degrees()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the complete benchmark artifact set under `dir`.
pub fn export_benchmark(dir: &Path, out: &BenchmarkOutput, map_names: &[String], mu: PotentialParams, r_drone: f64) -> Result<()> {
    for sub in ["records", "trails", "maps", "potential"] {
        ensure_dir(&dir.join(sub))?;
    }
    write_json(&dir.join("summary.json"), &out.summary)?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            map_names: map_names.to_vec(),
            tool_errors: out.tool_errors.clone(),
        },
    )?;
    write_summary_csvs(dir, &out.summary)?;
    write_runs_csv(&dir.join("runs.csv"), &out.records)?;

    for info in &out.maps {
        let stem = format!("s{}_m{}", info.seed, info.index + 1);
        write(&dir.join("maps").join(format!("{stem}.txt")), info.map.to_text())?;
        // goal of the first run on this map, the map's own target otherwise
        let goal = out
            .records
            .iter()
            .find(|r| r.seed == info.seed && r.map_index == info.index)
            .map_or(info.map.target, |r| r.mission.target);
        write(
            &dir.join("potential").join(format!("{stem}.txt")),
            potential_grid(info, mu, goal, r_drone).to_text(),
        )?;
    }
    for r in &out.records {
        let stem = run_stem(r);
        write_json(&dir.join("records").join(format!("{stem}.json")), r)?;
        write_trail(&dir.join("trails").join(format!("{stem}.csv")), &r.mission.trail)?;
    }
    Ok(())
}

/// Reads back an exported benchmark: map names, run records and tool errors.
pub fn load_records(dir: &Path) -> Result<(Manifest, Vec<RunRecord>)> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?,
    )
    .with_context(|| format!("parsing {}", manifest_path.display()))?;
    let records_dir = dir.join("records");
    let mut paths: Vec<PathBuf> = fs::read_dir(&records_dir)
        .with_context(|| format!("listing {}", records_dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    let mut records = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let r: RunRecord = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        if r.map_index >= manifest.map_names.len() {
            bail!("{} refers to map {} but the manifest lists {}", p.display(), r.map_index, manifest.map_names.len());
        }
        records.push(r);
    }
    records.sort_by_key(|r| (r.seed, r.map_index, r.run, r.mission.mode.tag()));
    Ok((manifest, records))
}

/// Summary rebuilt from an exported directory.
pub fn recompute_summary(dir: &Path) -> Result<BenchmarkSummary> {
    let (manifest, records) = load_records(dir)?;
    Ok(BenchmarkSummary::from_records(&manifest.map_names, &records, manifest.tool_errors.len()))
}

pub fn write_mission(dir: &Path, stem: &str, record: &MissionRecord) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join(format!("{stem}.json")), record)?;
    write_trail(&dir.join(format!("{stem}_trail.csv")), &record.trail)
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    write_json(path, value)
}
