use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use seeker_core::apf::PotentialParams;
use seeker_core::world::{obstacle_density, run_mission, sample_endpoints, PlannerMode, WorldMap};
use seeker_core::RngStream;
use seeker_cli::config::{ScenarioConfig, CALIBRATED_NOISE_SIGMA};
use seeker_cli::experiments::{build_map, run_benchmark, run_rf_circle_test, run_rf_pursuit_test, MapInfo};
use seeker_cli::export;

#[derive(Parser)]
#[command(name = "seeker", version, about = "RF source seeking and potential-field planner experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed (replaces the config's seed list)
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario file (JSON); omitted fields keep their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<PlannerMode>,
    /// Sampled parameter sets per replan
    #[arg(long)]
    samples: Option<usize>,
    /// Temperature of the sample weights
    #[arg(long)]
    lambda: Option<f64>,
    /// Keep the sampling means fixed between replans
    #[arg(long)]
    frozen_means: bool,
    /// Let the means follow the chosen sample
    #[arg(long, conflicts_with = "frozen_means")]
    adaptive_means: bool,
    /// Reveal obstacles through circle fits of sensed arcs
    #[arg(long)]
    fit_sensor: bool,
    /// Receiver sample noise (amplitude units)
    #[arg(long)]
    noise_sigma: Option<f64>,
}

fn parse_mode(s: &str) -> Result<PlannerMode, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Generate a map matching a density target
    GenMap {
        #[command(flatten)]
        common: Common,
        /// Reference target 1-5 from the scenario's map list
        #[arg(long, default_value_t = 1)]
        map: usize,
    },
    /// Bearing error around a stationary drone
    RfCircle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        positions: Option<usize>,
    },
    /// Open-field seeking run
    RfPursuit {
        #[command(flatten)]
        common: Common,
    },
    /// One mission on a map file (or a generated map)
    Mission {
        #[command(flatten)]
        common: Common,
        /// Map file; its start and target are used as given
        #[arg(long)]
        map_file: Option<PathBuf>,
        /// Reference target to generate when no map file is given
        #[arg(long, default_value_t = 1)]
        map: usize,
    },
    /// Paired standard/modified runs over every map
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild summary files from an exported benchmark directory
    Export {
        #[command(flatten)]
        common: Common,
        /// Directory written by `benchmark`
        #[arg(long)]
        from: PathBuf,
    },
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(m) = self.mode {
            cfg.modes = vec![m];
        }
        let m = &mut cfg.mission;
        if let Some(n) = self.samples {
            m.sampling.n_samples = n;
        }
        if let Some(l) = self.lambda {
            m.sampling.lambda = l;
        }
        if self.frozen_means {
            m.frozen_means = true;
        }
        if self.adaptive_means {
            m.frozen_means = false;
        }
        if self.fit_sensor {
            m.sensor.fit = true;
        }
        if let Some(s) = self.noise_sigma {
            m.rf.noise_sigma = s;
        }
        m.sampling.validate().context("sampling settings")?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ScenarioConfig) -> Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn seed(&self, cfg: &ScenarioConfig) -> u64 {
        cfg.seeds.first().copied().unwrap_or(1)
    }

    fn mode(&self, cfg: &ScenarioConfig) -> PlannerMode {
        cfg.modes.first().copied().unwrap_or(PlannerMode::Modified)
    }
}

fn generated_map(cfg: &ScenarioConfig, seed: u64, map: usize) -> Result<MapInfo> {
    let Some(index) = map.checked_sub(1).filter(|&i| i < cfg.maps.len()) else {
        bail!("map {map} is not in the scenario (1..={})", cfg.maps.len());
    };
    build_map(cfg, seed, index).map_err(anyhow::Error::msg)
}

fn mu(cfg: &ScenarioConfig) -> PotentialParams {
    cfg.mission.sampling.mu
}

fn gen_map(common: &Common, map: usize) -> Result<bool> {
    let cfg = common.scenario()?;
    let out = common.out_dir(&cfg)?;
    let seed = common.seed(&cfg);
    let mut info = generated_map(&cfg, seed, map)?;
    let mut rng = RngStream::new(seeker_core::random::mix_seed(&[seed, info.index as u64, 0]), 1);
    if let Ok((s, t)) = sample_endpoints(info.map.extent, &info.map.obstacles, cfg.mission.descent.r_drone, cfg.endpoint_separation, 0.5, &mut rng) {
        info.map = info.map.with_endpoints(s, t);
    }
    let stem = format!("map{map}_s{seed}");
    std::fs::write(out.join(format!("{stem}.txt")), info.map.to_text())?;
    std::fs::write(
        out.join(format!("{stem}_potential.txt")),
        export::potential_grid(&info, mu(&cfg), info.map.target, cfg.mission.descent.r_drone).to_text(),
    )?;
    export::write_json_file(&out.join(format!("{stem}_density.json")), &obstacle_density(&info.map))?;
    println!(
        "{}: {} obstacles, density mean {:.4} variance {:.5}",
        info.name,
        info.map.obstacles.len(),
        info.density_mean,
        info.density_variance
    );
    Ok(true)
}

fn rf_circle(common: &Common, radius: Option<f64>, positions: Option<usize>) -> Result<bool> {
    let cfg = common.scenario()?;
    let out = common.out_dir(&cfg)?;
    // noiseless unless asked for
    let mut rf = cfg.mission.rf;
    rf.noise_sigma = common.noise_sigma.unwrap_or(0.0);
    let radius = radius.unwrap_or(cfg.circle.radius);
    if radius <= rf.square_array().aperture() {
        bail!("radius {radius} m does not clear the array");
    }
    let t = run_rf_circle_test(radius, positions.unwrap_or(cfg.circle.positions), &rf, common.seed(&cfg));
    export::write_circle(&out.join("rf_circle.csv"), &t)?;
    println!(
        "circle r={radius} m sigma={}: mean {:.3}°, max {:.3}°, {} rejected",
        rf.noise_sigma,
        t.mean_abs_err_deg(),
        t.max_abs_err_deg(),
        t.failures()
    );
    Ok(true)
}

fn rf_pursuit(common: &Common) -> Result<bool> {
    let mut cfg = common.scenario()?;
    let out = common.out_dir(&cfg)?;
    if common.noise_sigma.is_none() && common.config.is_none() {
        cfg.mission.rf.noise_sigma = CALIBRATED_NOISE_SIGMA;
    }
    let mode = common.mode(&cfg);
    let r = run_rf_pursuit_test(&cfg.mission, mode, common.seed(&cfg));
    export::write_mission(&out, "rf_pursuit", &r.record)?;
    println!(
        "pursuit ({}): {}, mean bearing error {:.3}°, path {:.2} m",
        mode.as_str(),
        r.record.outcome.label(),
        r.mean_error_deg,
        r.record.path_length
    );
    Ok(true)
}

fn mission(common: &Common, map_file: Option<&Path>, map: usize) -> Result<bool> {
    let cfg = common.scenario()?;
    let out = common.out_dir(&cfg)?;
    let seed = common.seed(&cfg);
    let world = match map_file {
        Some(p) => WorldMap::from_text(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => {
            let info = generated_map(&cfg, seed, map)?;
            let mut rng = RngStream::new(seeker_core::random::mix_seed(&[seed, info.index as u64, 0]), 1);
            let (s, t) = sample_endpoints(
                info.map.extent,
                &info.map.obstacles,
                cfg.mission.descent.r_drone,
                cfg.endpoint_separation,
                0.5,
                &mut rng,
            )?;
            info.map.with_endpoints(s, t)
        }
    };
    world.validate(cfg.mission.descent.r_drone)?;
    for &mode in &cfg.modes {
        let r = run_mission(&world, mode, &cfg.mission, seed);
        export::write_mission(&out, &format!("mission_{}", mode.as_str()), &r)?;
        println!(
            "{}: {}, relative length {:.3}, {} replans",
            mode.as_str(),
            r.outcome.label(),
            r.relative_length,
            r.replans()
        );
    }
    Ok(true)
}

fn print_summary(s: &seeker_cli::experiments::BenchmarkSummary) {
    println!("{:<8} {:>9} {:>9} {:>10} {:>10}", "map", "standard", "modified", "len std", "len mod");
    let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.3}"));
    for m in &s.maps {
        println!(
            "{:<8} {:>6}/{:<2} {:>6}/{:<2} {:>10} {:>10}",
            m.name,
            m.successes_standard,
            m.n_runs,
            m.successes_modified,
            m.n_runs,
            f(m.avg_relative_length_standard),
            f(m.avg_relative_length_modified)
        );
    }
    println!(
        "total    {:>6}/{:<2} {:>6}/{:<2} {:>10} {:>10}",
        s.total_successes_standard,
        s.total_runs,
        s.total_successes_modified,
        s.total_runs,
        f(s.mean_relative_length_standard),
        f(s.mean_relative_length_modified)
    );
}

fn benchmark(common: &Common) -> Result<bool> {
    let cfg = common.scenario()?;
    let out = common.out_dir(&cfg)?;
    let result = run_benchmark(&cfg);
    let names: Vec<String> = cfg.maps.iter().map(|m| m.name().to_string()).collect();
    export::export_benchmark(&out, &result, &names, mu(&cfg), cfg.mission.descent.r_drone)?;
    std::fs::write(out.join("scenario.json"), cfg.to_json() + "\n")?;
    print_summary(&result.summary);
    for e in &result.tool_errors {
        eprintln!("tool error: seed {} map {} run {}: {}", e.seed, e.map_index + 1, e.run, e.message);
    }
    Ok(result.tool_errors.is_empty())
}

fn export_verb(common: &Common, from: &Path) -> Result<bool> {
    let (manifest, records) = export::load_records(from)?;
    let summary = seeker_cli::experiments::BenchmarkSummary::from_records(&manifest.map_names, &records, manifest.tool_errors.len());
    let out = common.out.clone().unwrap_or_else(|| from.to_path_buf());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    export::write_json_file(&out.join("summary.json"), &summary)?;
    export::write_summary_csvs(&out, &summary)?;
    print_summary(&summary);
    Ok(manifest.tool_errors.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenMap { common, map } => gen_map(common, *map),
        Command::RfCircle {
            common,
            radius,
            positions,
        } => rf_circle(common, *radius, *positions),
        Command::RfPursuit { common } => rf_pursuit(common),
        Command::Mission { common, map_file, map } => mission(common, map_file.as_deref(), *map),
        Command::Benchmark { common } => benchmark(common),
        Command::Export { common, from } => export_verb(common, from),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
