use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freight_resilience::disruption::{RankingMode, Scenario};
use freight_resilience::pipeline::{build, render_plots, ErrorKind, PipelineError, ReportBundle, RunConfig, Stage, Stages};
use freight_resilience::synth::{write_synthetic, SynthSpec};
use freight_resilience::Mode;

#[derive(Parser)]
#[command(name = "freight-resilience", version, about = "Robustness of freight networks under random, targeted and heat-driven node loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the network; write canonical tables and a summary.
    Ingest(RunArgs),
    /// Degree, closeness and betweenness scores and top-k rankings.
    Centrality(RunArgs),
    /// Hot-day profiles, period changes, ensemble statistics and top-k frequency.
    Hotdays(RunArgs),
    /// Removal sequences, robustness curves and collapse points.
    Simulate(RunArgs),
    /// Every stage, including the SVG charts.
    Run(RunArgs),
    /// Re-render the SVG charts of an existing output directory.
    Report {
        /// Output directory of an earlier run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic network and hot-day profiles.
    Synth {
        /// JSON spec; defaults apply to omitted fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the daily temperature series.
        #[arg(long)]
        series: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Analyse only this mode (repeatable).
    #[arg(long = "mode")]
    modes: Vec<Mode>,
    /// Run only this scenario (repeatable).
    #[arg(long = "scenario")]
    scenarios: Vec<Scenario>,
    /// Number of random removal orders.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// `static` or `adaptive` ranking for targeted scenarios.
    #[arg(long)]
    ranking: Option<RankingMode>,
    /// Hot-day threshold in degrees C.
    #[arg(long)]
    threshold_c: Option<f64>,
    /// SCF value at or below which the network counts as collapsed.
    #[arg(long)]
    scf_collapse: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::from_file(&self.config)?;
        if !self.modes.is_empty() {
            cfg.modes = self.modes.clone();
        }
        if !self.scenarios.is_empty() {
            cfg.scenarios = self.scenarios.clone();
        }
        if let Some(n) = self.seeds {
            cfg.random.trials = n;
        }
        if let Some(s) = self.base_seed {
            cfg.random.base_seed = s;
        }
        if let Some(r) = self.ranking {
            cfg.ranking = r;
        }
        if let Some(t) = self.threshold_c {
            match &mut cfg.climate {
                Some(c) => c.threshold_c = t,
                None => {
                    return Err(PipelineError::new(
                        Stage::Config,
                        ErrorKind::Config,
                        "--threshold-c needs a `climate` section in the config",
                    ))
                }
            }
        }
        if let Some(c) = self.scf_collapse {
            cfg.collapse_threshold = c;
        }
        if let Some(k) = self.top_k {
            cfg.top_k = k;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn execute(args: &RunArgs, stages: Stages) -> Result<(), PipelineError> {
    let cfg = args.config()?;
    let bundle = build(&cfg, stages)?;
    finish(&bundle, &cfg.out)
}

fn finish(bundle: &ReportBundle, out: &Path) -> Result<(), PipelineError> {
    let manifest = bundle.write(out)?;
    println!("wrote {} files to {} (manifest {})", manifest.files.len(), out.display(), manifest.sha256());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), PipelineError> {
    let only = |f: fn(&mut Stages)| {
        let mut s = Stages::INGEST;
        f(&mut s);
        s
    };
    match cli.command {
        Command::Ingest(a) => execute(&a, Stages::INGEST),
        Command::Centrality(a) => execute(&a, only(|s| s.centrality = true)),
        Command::Hotdays(a) => execute(&a, only(|s| s.hotdays = true)),
        Command::Simulate(a) => execute(&a, only(|s| s.simulate = true)),
        Command::Run(a) => execute(&a, Stages::ALL),
        Command::Report { out } => {
            let mut bundle = ReportBundle::read_dir(&out)?;
            bundle.files.retain(|name, _| !name.ends_with(".svg"));
            let plots = render_plots(&bundle.files)?;
            if plots.is_empty() {
                return Err(PipelineError::data(Stage::Report, format!("{} holds nothing to plot", out.display())));
            }
            bundle.files.extend(plots);
            finish(&bundle, &out)
        }
        Command::Synth { spec, out, series } => {
            let mut spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        PipelineError::new(Stage::Config, ErrorKind::Config, format!("cannot read {}: {e}", path.display()))
                    })?;
                    serde_json::from_str::<SynthSpec>(&text)
                        .map_err(|e| PipelineError::new(Stage::Config, ErrorKind::Config, format!("{}: {e}", path.display())))?
                }
                None => SynthSpec::default(),
            };
            spec.write_series |= series;
            let files = write_synthetic(&spec, &out).map_err(|e| PipelineError::data(Stage::Ingest, e))?;
            println!("wrote synthetic inputs to {}", files.nodes.parent().unwrap_or(&out).display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
