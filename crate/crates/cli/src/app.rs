//! Command-line entry points.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use scene_forecaster_core::config::RunConfig;
use scene_forecaster_core::evaluation::{metric_rows, run_model, ModelKind};
use scene_forecaster_core::forecast::{predict_scene, RolloutMode};
use scene_forecaster_core::inference::ParticleFilter;
use scene_forecaster_core::scenario::{self, SceneLog};
use scene_forecaster_core::LaneGraph;

use crate::io;
use crate::output::{MetricRecord, PosteriorSeries, PredictionView};

pub const SEED_ENV: &str = "SCENE_FORECASTER_SEED";

#[derive(Debug, Parser)]
#[command(name = "scene-forecaster", version, about = "Interaction-aware scene estimation and trajectory prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write a JSONL scene log.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario JSON file or archetype name (scene1, scene1b, scene2, roundabout, lone).
        #[arg(long)]
        scenario: String,
    },
    /// Run a filter over a scene log and write the posterior series as JSON.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "interactive", value_parser = parse_model)]
        model: ModelKind,
    },
    /// Filter up to a time and write the prediction set as JSON.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Time of the last frame fed to the filter (s).
        #[arg(long)]
        at: f64,
        /// Forecast horizon (s).
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value = "interactive", value_parser = parse_model)]
        model: ModelKind,
    },
    /// Run models over a scene log and write the metrics CSV.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Comma-separated models; all by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_model)]
        models: Vec<ModelKind>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Map JSON file or built-in map name (four_way, roundabout, crossroads, straight_road).
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Run config JSON; omitted fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed; falls back to SCENE_FORECASTER_SEED, then to the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Particle count override.
    #[arg(long)]
    pub particles: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::from_name(s).ok_or_else(|| format!("unknown model `{s}`"))
}

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

trait UsageContext<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T> UsageContext<T> for Result<T> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(Failure::Usage)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).with_context(|| format!("{SEED_ENV} must be an unsigned integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => io::read_config(path).usage()?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed.map_or_else(env_seed, |s| Ok(Some(s))).usage()? {
            config.seed = seed;
        }
        if let Some(n) = self.particles {
            config.particles = n;
        }
        config.validate().map_err(|e| Failure::Usage(e.into()))?;
        Ok(config)
    }

    fn graph(&self) -> Result<LaneGraph, Failure> {
        io::resolve_map(&self.map).usage()
    }
}

fn load_log(path: &std::path::Path) -> Result<SceneLog, Failure> {
    if !path.exists() {
        return Err(Failure::Usage(anyhow!("scene log {} does not exist", path.display())));
    }
    Ok(io::read_scene_log(path)?)
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { common, scenario } => {
            let config = common.run_config()?;
            let graph = common.graph()?;
            let spec = io::resolve_scenario(&scenario, config.seed).usage()?;
            let log = scenario::simulate(&spec, &graph, &config).map_err(|e| Failure::Usage(e.into()))?;
            io::write_scene_log(&log, io::create(&common.out)?)?;
        }
        Command::Estimate { common, scene, model } => {
            let config = common.run_config()?;
            let graph = common.graph()?;
            let log = load_log(&scene)?;
            if model == ModelKind::Ctrv {
                return Err(Failure::Usage(anyhow!("ctrv has no intention posterior")));
            }
            let run = run_model(model, &log, &graph, &config, false).map_err(anyhow::Error::from)?;
            let series = PosteriorSeries::new(&run, &graph);
            if series.warnings > 0 {
                eprintln!("warning: belief re-initialized {} time(s)", series.warnings);
            }
            io::write_json(&series, &common.out)?;
        }
        Command::Predict { common, scene, at, horizon, model } => {
            let mut config = common.run_config()?;
            if let Some(h) = horizon {
                config.horizon = h;
                config.validate().map_err(|e| Failure::Usage(e.into()))?;
            }
            let graph = common.graph()?;
            let log = load_log(&scene)?;
            let view = predict_at(&log, &graph, &config, model, at)?;
            io::write_json(&view, &common.out)?;
        }
        Command::Eval { common, scene, models } => {
            let config = common.run_config()?;
            let graph = common.graph()?;
            let log = load_log(&scene)?;
            let models = if models.is_empty() { ModelKind::ALL.to_vec() } else { models };
            let mut writer = csv::Writer::from_writer(io::create(&common.out)?);
            for kind in models {
                let run = run_model(kind, &log, &graph, &config, true).map_err(anyhow::Error::from)?;
                for row in metric_rows(&run, &log, &graph, config.sigma_eval) {
                    writer.serialize(MetricRecord::from(&row)).map_err(anyhow::Error::from)?;
                }
            }
            writer.flush().map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

/// Feeds every frame up to `at` to the model and forecasts from there.
pub fn predict_at(log: &SceneLog, graph: &LaneGraph, config: &RunConfig, model: ModelKind, at: f64) -> Result<PredictionView> {
    let last = log.frames.last().map_or(f64::NEG_INFINITY, |f| f.t);
    if !(at.is_finite() && at <= last + 1e-9) {
        bail!("--at {at} lies beyond the log, which ends at {last}");
    }
    let Some(index) = log.frame_at(at) else {
        bail!("--at {at} lies before the first frame");
    };
    let prefix = SceneLog { frames: log.frames[..=index].to_vec() };
    let t = prefix.frames[index].t;
    if model == ModelKind::Ctrv {
        let run = run_model(model, &prefix, graph, config, true)?;
        let set = run.frames[index].prediction.as_ref().context("no measurement at the requested time")?;
        return Ok(PredictionView::new(model.name(), t, set));
    }
    let config = model.configure(config);
    let filter = ParticleFilter::new(graph, config);
    let mut belief = None;
    for frame in &prefix.frames {
        if frame.agents.is_empty() && belief.is_none() {
            continue;
        }
        let (b, reinit) = filter.step(belief.take(), &frame.measurements())?;
        if reinit {
            eprintln!("warning: belief re-initialized at t = {}", frame.t);
        }
        belief = Some(b);
    }
    let belief = belief.context("no measurement at or before the requested time")?;
    let set = predict_scene(&belief, graph, &config, RolloutMode::Mean);
    Ok(PredictionView::new(model.name(), t, &set))
}

/// Parses the arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let code = failure.exit_code();
            let (Failure::Usage(e) | Failure::Runtime(e)) = failure;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
