use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use platoon_core::config::Config;
use platoon_core::experiment::{
    bin_and_aggregate, gain_vs_baseline, read_records_csv, run_experiment, run_simulation, write_audit_csv,
    write_gains_csv, write_manifest, write_records_csv, write_stats_csv, ExperimentRecord, RunOptions,
};
use platoon_core::mobility::Approach;
use platoon_core::trip_cost::analysis::{run_numerical_analysis, write_analysis_csv};
use platoon_core::trip_cost::SlipstreamModel;

/// Freeway platooning simulator with a monetary trip-cost metric.
#[derive(Parser)]
#[command(name = "platoon-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate travel time, fuel and trip cost over the abstract grid.
    Analyze(Common),
    /// Run a single simulation.
    Simulate(SimulateArgs),
    /// Run the full approach x density x seed matrix and emit gains.
    Sweep(SweepArgs),
    /// Compute gains from an existing records.csv.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// human, acc, similarity or trip-cost.
    #[arg(long)]
    approach: Option<Approach>,
    /// Vehicles per km and lane.
    #[arg(long)]
    density: Option<f64>,
    /// Write trace.csv with every vehicle at every step.
    #[arg(long)]
    trace: bool,
    /// Write audit.csv with every formation decision.
    #[arg(long)]
    audit: bool,
    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Seeds to run, replacing the configured list. Repeatable.
    #[arg(long)]
    seed: Vec<u64>,
    /// Approaches to run, replacing the configured list. Repeatable.
    #[arg(long)]
    approach: Vec<Approach>,
    /// Densities to run, replacing the configured list. Repeatable.
    #[arg(long)]
    density: Vec<f64>,
    #[arg(long, default_value = "acc")]
    baseline: Approach,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Records to aggregate.
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value = "acc")]
    baseline: Approach,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Report(args) => report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn analyze(args: &Common) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    prepare_out(&args.out)?;
    let rows = run_numerical_analysis(&cfg.analysis, &cfg.fuel_model()?, &SlipstreamModel::default())?;
    let mut w = create(&args.out, "analysis.csv")?;
    write_analysis_csv(&rows, &mut w)?;
    w.flush()?;
    println!("analysis: {} rows -> {}", rows.len(), args.out.join("analysis.csv").display());
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if let Some(d) = args.duration {
        cfg.scenario.duration_s = d;
        cfg.scenario.warmup_s = cfg.scenario.warmup_s.min(d / 2.0);
        cfg.validate()?;
    }
    let approach = args.approach.unwrap_or(cfg.scenario.approach);
    let density = args.density.unwrap_or(cfg.scenario.density_per_km_lane);
    let seed = args.seed.unwrap_or(cfg.scenario.seed);
    prepare_out(&args.common.out)?;

    let mut trace = if args.trace { Some(create(&args.common.out, "trace.csv")?) } else { None };
    let options = RunOptions { record_audit: args.audit, trace: trace.as_mut().map(|w| w as &mut dyn Write) };
    let run = run_simulation(&cfg, approach, density, seed, options)?;
    if let Some(mut t) = trace {
        t.flush()?;
    }

    let mut w = create(&args.common.out, "records.csv")?;
    write_records_csv(&run.records, &mut w)?;
    w.flush()?;
    if args.audit {
        let mut w = create(&args.common.out, "audit.csv")?;
        write_audit_csv(&run.audit, &mut w)?;
        w.flush()?;
    }
    println!(
        "{approach} density {density} seed {seed}: {} trips, completeness {:.3}",
        run.records.len(),
        run.completeness()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    if !args.approach.is_empty() {
        cfg.sweep.approaches = args.approach.clone();
    }
    if !args.density.is_empty() {
        cfg.sweep.densities_per_km_lane = args.density.clone();
    }
    if !args.seed.is_empty() {
        cfg.sweep.seeds = args.seed.clone();
    }
    prepare_out(&args.common.out)?;

    let cells = run_experiment(&cfg, &cfg.sweep.approaches, &cfg.sweep.densities_per_km_lane, &cfg.sweep.seeds);
    let mut failed = 0;
    let mut records: Vec<ExperimentRecord> = Vec::new();
    for cell in &cells {
        match &cell.outcome {
            Ok(run) => {
                println!(
                    "{} density {} seed {}: {} trips, completeness {:.3}",
                    cell.approach,
                    cell.density,
                    cell.seed,
                    run.records.len(),
                    run.completeness()
                );
                records.extend(run.records.iter().cloned());
            }
            Err(e) => {
                failed += 1;
                eprintln!("{} density {} seed {} failed: {e}", cell.approach, cell.density, cell.seed);
            }
        }
    }

    let mut w = create(&args.common.out, "manifest.toml")?;
    write_manifest(&cfg, &cells, &mut w)?;
    w.flush()?;
    let mut w = create(&args.common.out, "records.csv")?;
    write_records_csv(&records, &mut w)?;
    w.flush()?;
    write_tables(&records, cfg.sweep.bin_width_eur_per_h, args.baseline, &args.common.out)?;
    if failed > 0 {
        bail!("{failed} of {} runs failed", cells.len());
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    let file = File::open(&args.records).with_context(|| format!("opening {}", args.records.display()))?;
    let records = read_records_csv(std::io::BufReader::new(file))?;
    prepare_out(&args.common.out)?;
    write_tables(&records, cfg.sweep.bin_width_eur_per_h, args.baseline, &args.common.out)
}

fn write_tables(records: &[ExperimentRecord], bin_width: f64, baseline: Approach, out: &Path) -> Result<()> {
    let stats = bin_and_aggregate(records, bin_width);
    let mut w = create(out, "stats.csv")?;
    write_stats_csv(&stats, &mut w)?;
    w.flush()?;
    if !records.iter().any(|r| r.approach == baseline) {
        bail!("missing baseline: no {baseline} records to compare against");
    }
    let gains = gain_vs_baseline(&stats, baseline)?;
    for warning in &gains.warnings {
        eprintln!("warning: {warning}");
    }
    let mut w = create(out, "gains.csv")?;
    write_gains_csv(&gains, &mut w)?;
    w.flush()?;
    println!("gains: {} rows -> {}", gains.rows.len(), out.join("gains.csv").display());
    Ok(())
}
