//! File round trips, grid bookkeeping and CLI behaviour.

use std::path::Path;
use std::process::{Command, Output};

use reach_core::active::Strategy;
use reach_core::config::Config;
use reach_core::dataset::{
    generate_scene, ingest_detections, label_with_oracle, read_labeled, write_detections, write_labeled, Benchmark,
    Pipeline, SceneConfig,
};
use reach_core::metrics::mean_std;
use reach_core::report::{read_results, read_summary, run_grid, summarize, ExperimentGrid, ResultRow, RESULTS_HEADER};

fn small_config() -> Config {
    let mut cfg = Config::default();
    cfg.scene.n_images = 120;
    cfg.data.n_samples = 300;
    cfg.data.pool_size = 400;
    cfg.forest.n_trees = 20;
    cfg
}

fn small_bench(cfg: &Config) -> Benchmark {
    Benchmark::synthetic(&cfg.scene, &cfg.pipeline(), cfg.data.n_samples, cfg.data.pool_size).unwrap()
}

#[test]
fn detections_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::benchmark();
    let scene = SceneConfig { n_images: 40, ..SceneConfig::default() };
    let records = generate_scene(&scene, &pipeline.intrinsics, pipeline.features.window).unwrap();
    let path = dir.path().join("det.csv");
    write_detections(&path, &records).unwrap();
    let back = ingest_detections(&path).unwrap();
    assert_eq!(back.skipped, 0);
    assert!(back.has_window);
    assert_eq!(back.records, records);
}

#[test]
fn labelled_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::benchmark();
    let scene = SceneConfig { n_images: 40, ..SceneConfig::default() };
    let records = generate_scene(&scene, &pipeline.intrinsics, pipeline.features.window).unwrap();
    let out = label_with_oracle(&records, &pipeline);
    let sources: Vec<_> = out.samples.iter().map(|s| &records[s.id]).collect();
    let path = dir.path().join("labeled.csv");
    write_labeled(&path, &sources, &out.samples).unwrap();
    let back = read_labeled(&path).unwrap();
    assert_eq!(back.len(), out.samples.len());
    for (i, (a, b)) in back.iter().zip(&out.samples).enumerate() {
        assert_eq!(a.id, i);
        assert_eq!((a.label, a.features, a.arm_point), (b.label, b.features, b.arm_point));
    }
}

#[test]
fn grid_rows_reparse_and_summary_recomputes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let bench = small_bench(&cfg);
    let grid = ExperimentGrid {
        strategies: vec![Strategy::Random, Strategy::Margin, Strategy::Qbc],
        init_sizes: vec![10, 30],
        budgets: vec![50, 70],
        seeds: vec![0, 1, 2],
        ..ExperimentGrid::from_config(&cfg)
    };
    let path = dir.path().join("results.csv");
    let outcome = run_grid(&grid, &bench, &path).unwrap();
    assert_eq!(outcome.failed_cells, 0);

    // Rounds per cell: 1 + ceil(budget / 50).
    let expected: usize = grid.cells().iter().map(|c| 1 + c.budget.div_ceil(50)).sum();
    assert_eq!(outcome.rows.len(), expected);
    assert_eq!(read_results(&path).unwrap(), outcome.rows);

    let summary = summarize(&outcome.rows);
    assert_eq!(summary.len(), 3 * 2 * 2);
    for s in &summary {
        let finals: Vec<&ResultRow> = outcome
            .rows
            .iter()
            .filter(|r| (r.cell.strategy, r.cell.init_size, r.cell.budget) == (s.strategy, s.init_size, s.budget))
            .filter(|r| r.round == Some(1 + s.budget.div_ceil(50) - 1))
            .collect();
        assert_eq!(finals.len(), 3);
        let (m, sd) = mean_std(finals.iter().map(|r| r.accuracy)).unwrap();
        let (sm, ssd) = s.accuracy.unwrap();
        assert!((m - sm).abs() <= 1e-9 && (sd - ssd).abs() <= 1e-9);
        assert_eq!(s.n_labeled, Some((s.init_size + s.budget) as f64));
    }
}

#[test]
fn failing_cells_are_recorded_and_others_proceed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let bench = small_bench(&cfg);
    // init 10_000 exceeds the non-test samples.
    let grid = ExperimentGrid {
        strategies: vec![Strategy::Entropy],
        init_sizes: vec![10, 10_000],
        budgets: vec![50],
        seeds: vec![4],
        ..ExperimentGrid::from_config(&cfg)
    };
    let path = dir.path().join("results.csv");
    let outcome = run_grid(&grid, &bench, &path).unwrap();
    assert_eq!(outcome.failed_cells, 1);
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].is_failed() && rows[2].accuracy.is_none());
    assert!(std::fs::read_to_string(&path).unwrap().lines().last().unwrap().ends_with("NA,NA,NA,NA,NA,NA,NA,NA"));
}

#[test]
fn unwritable_results_path_is_fatal() {
    let cfg = small_config();
    let bench = small_bench(&cfg);
    let grid = ExperimentGrid::from_config(&cfg);
    assert!(run_grid(&grid, &bench, Path::new("/nonexistent/dir/results.csv")).is_err());
}

fn reach_al(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reach-al")).arg("--out").arg(out).args(args).output().unwrap()
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "# reduced grid\nscene.n_images = 120\ndata.n_samples = 300\ndata.pool_size = 400\nforest.n_trees = 20\n\
         grid.strategies = random, entropy\ngrid.init_sizes = 10\ngrid.budgets = 50\ngrid.seeds = 2\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("out");
    for args in [
        vec!["--config", &cfg, "gen-scene"],
        vec!["--config", &cfg, "label"],
        vec!["--config", &cfg, "sweep", "--input", out.join("labeled.csv").to_str().unwrap()],
        vec!["plot"],
        vec!["--config", &cfg, "envelope", "--steps", "6"],
        vec!["report"],
    ] {
        let o = reach_al(&out, &args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with(RESULTS_HEADER));
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(read_summary(&out.join("summary.csv")).unwrap().len(), 2);
    assert!(out.join("curves_init10_budget50.svg").exists());
    assert!(out.join("envelope.svg").exists());
    let envelope = std::fs::read_to_string(out.join("envelope.txt")).unwrap();
    assert!(envelope.lines().all(|l| l.split(' ').filter_map(|v| v.parse::<f64>().ok()).count() == 3));
    let meta = std::fs::read_to_string(out.join("labeled.meta")).unwrap();
    assert!(meta.contains("local_density_source = window"), "{meta}");
    let saved = Config::load(&out.join("config.txt")).unwrap();
    assert_eq!(saved.grid.seeds, 2);

    let report = reach_al(&out, &["report"]);
    let table = String::from_utf8(report.stdout).unwrap();
    assert!(table.contains("entropy") && table.contains("random"), "{table}");
}

#[test]
fn cli_fatal_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "forest.n_tres = 10\n").unwrap();
    let o = reach_al(dir.path(), &["--config", bad.to_str().unwrap(), "sweep"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_tres"));

    let o = reach_al(dir.path(), &["label", "--input", "/nonexistent.csv"]);
    assert!(!o.status.success());
    let o = reach_al(dir.path(), &["plot", "--results", "/nonexistent.csv"]);
    assert!(!o.status.success());
}

#[test]
fn cli_strict_fails_on_cell_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let args = ["--config", &cfg, "run", "--init", "100000"];
    let lenient = reach_al(&dir.path().join("a"), &args);
    assert!(lenient.status.success());
    let mut strict_args = vec!["--strict"];
    strict_args.extend(args);
    let strict = reach_al(&dir.path().join("b"), &strict_args);
    assert!(!strict.status.success());
}

#[test]
fn cli_honours_the_output_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_reach-al"))
        .env("REACH_AL_OUT", &target)
        .args(["--config", &write_small_config(dir.path()), "gen-scene"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("detections.csv").exists());
}

#[test]
fn empty_results_plot_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    std::fs::write(&path, format!("{RESULTS_HEADER}\n")).unwrap();
    let o = reach_al(dir.path(), &["plot", "--results", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
