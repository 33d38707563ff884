use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aggspec::presets::{preset, preset_names, PRESETS};
use aggspec::{load_scenario, run, ScenarioSpec};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

/// Electronic and CES vibronic absorption spectra of molecular aggregates.
#[derive(Parser)]
#[command(name = "aggspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in preset.
    Run(RunArgs),
    /// List the built-in presets.
    ListPresets,
    /// Parse and validate a scenario file without running it.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file path or preset name.
    scenario: String,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Sweep points evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

fn resolve(name: &str) -> anyhow::Result<ScenarioSpec> {
    let path = Path::new(name);
    if path.exists() {
        return Ok(load_scenario(path)?);
    }
    match preset(name) {
        Some(spec) => Ok(spec?),
        None => Err(anyhow!(
            "'{name}' is neither a file nor a preset (presets: {})",
            preset_names().collect::<Vec<_>>().join(", ")
        )),
    }
}

fn run_command(args: RunArgs) -> anyhow::Result<bool> {
    let mut spec = resolve(&args.scenario)?;
    spec.override_grid(args.grid_min, args.grid_max, args.grid_points)?;
    let manifest = run(&spec, &args.out_dir, args.jobs).context("running scenario")?;
    for p in &manifest.points {
        match &p.error {
            None => println!("ok     {} ({} outputs)", p.label, p.outputs.len()),
            Some(e) => println!("FAILED {}: {e}", p.label),
        }
    }
    println!(
        "{}: {} succeeded, {} failed; manifest {}",
        manifest.scenario_id,
        manifest.succeeded,
        manifest.failed,
        args.out_dir
            .join(&manifest.scenario_id)
            .join(aggspec::MANIFEST_NAME)
            .display()
    );
    Ok(manifest.all_succeeded())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::ListPresets => {
            for (name, text) in PRESETS {
                let description = aggspec::parse_scenario(text)
                    .map(|s| s.scenario.description)
                    .unwrap_or_default();
                println!("{name:<12} {description}");
            }
            Ok(true)
        }
        Command::Validate { file } => load_scenario(&file).map_err(Into::into).map(|s| {
            println!(
                "{}: valid, {} run(s)",
                s.id(),
                s.points().len()
            );
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
