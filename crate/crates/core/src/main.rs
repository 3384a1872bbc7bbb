use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reach_core::active::Strategy;
use reach_core::config::Config;
use reach_core::dataset::{
    generate_scene, ingest_detections, label_with_oracle, read_labeled, write_detections, write_labeled, Benchmark,
};
use reach_core::kinematics::sample_envelope;
use reach_core::report::{
    format_table, plot_curves, plot_envelope, read_results, read_summary, run_grid, summarize, write_summary,
    ExperimentGrid,
};
use reach_core::{Error, Result};

/// Reachability prediction with active learning.
#[derive(Debug, Parser)]
#[command(name = "reach-al", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scene seed for gen-scene, first seed of the sweep, cell seed for run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Defaults to $REACH_AL_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit nonzero when any experiment cell fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic detection file.
    GenScene,
    /// Localize and label a detection file into a labelled cache.
    Label {
        /// Detection file; defaults to <out>/detections.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run a single experiment cell.
    Run {
        #[arg(long, default_value = "entropy")]
        strategy: Strategy,
        #[arg(long, default_value_t = 10)]
        init: usize,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        /// Labelled cache; the synthetic benchmark is used when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the full strategy x init x budget x seed grid.
    Sweep {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Plot the reachable envelope with labelled fruit.
    Envelope {
        /// Grid steps per joint.
        #[arg(long, default_value_t = 15)]
        steps: usize,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Plot learning curves from a results file.
    Plot {
        /// Defaults to <out>/results.csv.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Print the final-accuracy table.
    Report {
        /// Results file to aggregate; <out>/summary.csv is read when absent.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn out_dir(global: &Global) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| std::env::var_os("REACH_AL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(global: &Global) -> Result<Config> {
    match &global.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn benchmark(cfg: &Config, input: Option<&Path>) -> Result<Benchmark> {
    let bench = match input {
        Some(path) => Benchmark::from_samples(read_labeled(path)?, cfg.data.n_samples, cfg.data.pool_size),
        None => Benchmark::synthetic(&cfg.scene, &cfg.pipeline(), cfg.data.n_samples, cfg.data.pool_size)?,
    };
    if bench.samples.len() < cfg.data.n_samples {
        eprintln!("warning: only {} labelled samples available", bench.samples.len());
    }
    if bench.candidates.len() < cfg.data.pool_size {
        eprintln!("warning: candidate pool holds {} of {} requested", bench.candidates.len(), cfg.data.pool_size);
    }
    Ok(bench)
}

/// Runs `grid`, then writes the summary and the configuration used.
fn sweep(cfg: &Config, grid: &ExperimentGrid, bench: &Benchmark, out: &Path, strict: bool) -> Result<ExitCode> {
    let results = out.join("results.csv");
    let outcome = run_grid(grid, bench, &results)?;
    let summary = summarize(&outcome.rows);
    write_summary(&out.join("summary.csv"), &summary)?;
    let cfg_path = out.join("config.txt");
    std::fs::write(&cfg_path, cfg.to_text()).map_err(|e| Error::Io { path: cfg_path, source: e })?;
    print!("{}", format_table(&summary));
    println!("wrote {} rows to {}", outcome.rows.len(), results.display());
    if outcome.failed_cells > 0 {
        eprintln!("{} cell(s) failed", outcome.failed_cells);
        if strict {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let mut cfg = load_config(g)?;
    let out = out_dir(g);
    std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;

    match cli.command {
        Command::GenScene => {
            if let Some(seed) = g.seed {
                cfg.scene.seed = seed;
            }
            let records = generate_scene(&cfg.scene, &cfg.intrinsics, cfg.features.window)?;
            let path = out.join("detections.csv");
            write_detections(&path, &records)?;
            println!("wrote {} detections to {}", records.len(), path.display());
        }
        Command::Label { input } => {
            let input = input.unwrap_or_else(|| out.join("detections.csv"));
            let ingested = ingest_detections(&input)?;
            if ingested.skipped > 0 {
                eprintln!("warning: skipped {} malformed rows", ingested.skipped);
            }
            let outcome = label_with_oracle(&ingested.records, &cfg.pipeline());
            let records: Vec<_> = outcome.samples.iter().map(|s| &ingested.records[s.id]).collect();
            let path = out.join("labeled.csv");
            write_labeled(&path, &records, &outcome.samples)?;
            let density = if ingested.has_window { "window" } else { "patch" };
            let meta = format!(
                "source = {}\nrecords = {}\nskipped = {}\ndropped_boundary = {}\ndropped_depth = {}\nlocal_density_source = {density}\n",
                input.display(),
                ingested.records.len(),
                ingested.skipped,
                outcome.dropped_boundary,
                outcome.dropped_depth
            );
            let meta_path = out.join("labeled.meta");
            std::fs::write(&meta_path, meta).map_err(|e| Error::Io { path: meta_path, source: e })?;
            if !ingested.has_window {
                eprintln!("note: no density window in {}; local density uses the 5x5 patch", input.display());
            }
            let reachable = outcome.samples.iter().filter(|s| s.label == reach_core::Label::Reachable).count();
            println!(
                "labelled {} samples ({} reachable), dropped {} at the border and {} without depth; wrote {}",
                outcome.samples.len(),
                reachable,
                outcome.dropped_boundary,
                outcome.dropped_depth,
                path.display()
            );
        }
        Command::Run { strategy, init, budget, input } => {
            let mut grid = ExperimentGrid::from_config(&cfg);
            grid.strategies = vec![strategy];
            grid.init_sizes = vec![init];
            grid.budgets = vec![budget];
            grid.seeds = vec![g.seed.unwrap_or(cfg.grid.seed_base)];
            let bench = benchmark(&cfg, input.as_deref())?;
            return sweep(&cfg, &grid, &bench, &out, g.strict);
        }
        Command::Sweep { input } => {
            if let Some(seed) = g.seed {
                cfg.grid.seed_base = seed;
            }
            let grid = ExperimentGrid::from_config(&cfg);
            let bench = benchmark(&cfg, input.as_deref())?;
            return sweep(&cfg, &grid, &bench, &out, g.strict);
        }
        Command::Envelope { steps, input } => {
            let envelope = sample_envelope(&cfg.arm, steps)?;
            let fruit = benchmark(&cfg, input.as_deref())?.samples;
            let points: String = envelope.iter().map(|p| format!("{} {} {}\n", p.x, p.y, p.z)).collect();
            let txt = out.join("envelope.txt");
            std::fs::write(&txt, points).map_err(|e| Error::Io { path: txt, source: e })?;
            let path = out.join("envelope.svg");
            plot_envelope(&envelope, &fruit, &path)?;
            println!("wrote {} ({} envelope points, {} fruit)", path.display(), envelope.len(), fruit.len());
        }
        Command::Plot { results } => {
            let rows = read_results(&results.unwrap_or_else(|| out.join("results.csv")))?;
            if rows.is_empty() {
                eprintln!("warning: no results to plot");
            }
            for p in plot_curves(&rows, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Report { results } => {
            let summary = match results {
                Some(path) => summarize(&read_results(&path)?),
                None => read_summary(&out.join("summary.csv"))?,
            };
            if summary.is_empty() {
                eprintln!("warning: no results to report");
            } else {
                print!("{}", format_table(&summary));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
