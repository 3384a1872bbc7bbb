//! Experiment grid execution, results files, plots and summary tables.
//!
//! `results.csv` holds one row per (cell, round) with header
//! [`RESULTS_HEADER`]; undefined metrics and the fields of a failed cell are
//! written as [`NA`]. Rows are written in cell order as cells complete, so the
//! file is byte-identical across runs regardless of thread count.
//! `summary.csv` holds final-round means and population standard deviations
//! across seeds per (strategy, init_size, budget).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use crate::active::{run_loop, ALConfig, RoundLog, Strategy};
use crate::config::{AlSettings, Config};
use crate::dataset::{make_splits, Benchmark, LabeledSample};
use crate::error::{Error, Result};
use crate::forest::TrainConfig;
use crate::kinematics::ArmPoint;
use crate::metrics::mean_std;
use crate::Label;

pub const RESULTS_HEADER: &str =
    "strategy,seed,init_size,budget,round,n_labeled,accuracy,precision,recall,f1,auc,ik_reduction";

pub const SUMMARY_HEADER: &str = "strategy,init_size,budget,seeds,failed,n_labeled,accuracy_mean,accuracy_std,\
precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,auc_mean,auc_std,ik_reduction_mean,ik_reduction_std";

/// Marker for undefined or unavailable values.
pub const NA: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub strategy: Strategy,
    pub seed: u64,
    pub init_size: usize,
    pub budget: usize,
}

/// One results-file row. A failed cell has a single row with every field
/// after `budget` undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub cell: CellKey,
    pub round: Option<usize>,
    pub n_labeled: Option<usize>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub ik_reduction: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Option<Option<T>> {
    if s == NA {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

impl ResultRow {
    pub fn failed(cell: CellKey) -> Self {
        ResultRow {
            cell,
            round: None,
            n_labeled: None,
            accuracy: None,
            precision: None,
            recall: None,
            f1: None,
            auc: None,
            ik_reduction: None,
        }
    }

    pub fn from_log(cell: CellKey, log: &RoundLog) -> Self {
        let m = &log.metrics;
        ResultRow {
            cell,
            round: Some(log.round),
            n_labeled: Some(log.n_labeled),
            accuracy: Some(m.accuracy),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: m.auc,
            ik_reduction: Some(m.ik_reduction()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.round.is_none()
    }

    pub fn to_csv(&self) -> String {
        let c = &self.cell;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.strategy,
            c.seed,
            c.init_size,
            c.budget,
            opt(self.round),
            opt(self.n_labeled),
            opt(self.accuracy),
            opt(self.precision),
            opt(self.recall),
            opt(self.f1),
            opt(self.auc),
            opt(self.ik_reduction)
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed results row '{line}'"));
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 12 {
            return Err(bad());
        }
        let cell = CellKey {
            strategy: f[0].parse()?,
            seed: f[1].parse().map_err(|_| bad())?,
            init_size: f[2].parse().map_err(|_| bad())?,
            budget: f[3].parse().map_err(|_| bad())?,
        };
        let float = |s: &str| parse_opt::<f64>(s).ok_or_else(bad);
        Ok(ResultRow {
            cell,
            round: parse_opt(f[4]).ok_or_else(bad)?,
            n_labeled: parse_opt(f[5]).ok_or_else(bad)?,
            accuracy: float(f[6])?,
            precision: float(f[7])?,
            recall: float(f[8])?,
            f1: float(f[9])?,
            auc: float(f[10])?,
            ik_reduction: float(f[11])?,
        })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == RESULTS_HEADER => {}
        _ => return Err(Error::Format(format!("{} lacks the results header", path.display()))),
    }
    lines.filter(|l| !l.trim().is_empty()).map(ResultRow::parse).collect()
}

/// Cells, settings and seeds of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub strategies: Vec<Strategy>,
    pub init_sizes: Vec<usize>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub al: AlSettings,
    pub train: TrainConfig,
    pub test_frac: f64,
}

impl ExperimentGrid {
    pub fn from_config(cfg: &Config) -> Self {
        ExperimentGrid {
            strategies: cfg.grid.strategies.clone(),
            init_sizes: cfg.grid.init_sizes.clone(),
            budgets: cfg.grid.budgets.clone(),
            seeds: cfg.seeds().collect(),
            al: cfg.al,
            train: cfg.forest,
            test_frac: cfg.data.test_frac,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.init_sizes.is_empty() || self.budgets.is_empty() || self.seeds.is_empty()
        {
            return Err(Error::Config("experiment grid lists must be nonempty".into()));
        }
        self.train.validate()
    }

    /// Cells in output order: init size, budget, strategy, seed.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &init_size in &self.init_sizes {
            for &budget in &self.budgets {
                for &strategy in &self.strategies {
                    for &seed in &self.seeds {
                        out.push(CellKey { strategy, seed, init_size, budget });
                    }
                }
            }
        }
        out
    }

    pub fn al_config(&self, cell: &CellKey) -> ALConfig {
        ALConfig {
            strategy: cell.strategy,
            init_size: cell.init_size,
            batch_size: self.al.batch_size,
            n_queries: cell.budget,
            committee_size: self.al.committee_size,
            committee_trees: self.al.committee_trees,
            score_cap: self.al.score_cap,
            seed: cell.seed,
        }
    }
}

/// Runs one cell: split with the cell seed, then the active-learning loop.
pub fn run_cell(bench: &Benchmark, grid: &ExperimentGrid, cell: &CellKey) -> Result<Vec<RoundLog>> {
    let split = make_splits(&bench.samples, &bench.candidates, grid.test_frac, cell.init_size, cell.seed)?;
    run_loop(split, &grid.al_config(cell), &grid.train)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub rows: Vec<ResultRow>,
    pub failed_cells: usize,
    pub truncated_cells: usize,
}

fn write_line(out: &mut impl Write, path: &Path, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io(path, e))
}

/// Executes every cell in parallel and streams rows to `results` in cell
/// order. Failed cells get one undefined row and a warning on stderr.
pub fn run_grid(grid: &ExperimentGrid, bench: &Benchmark, results: &Path) -> Result<GridOutcome> {
    grid.validate()?;
    let cells = grid.cells();
    let file = File::create(results).map_err(|e| Error::io(results, e))?;
    let mut out = BufWriter::new(file);
    write_line(&mut out, results, RESULTS_HEADER)?;
    out.flush().map_err(|e| Error::io(results, e))?;

    type Done = (usize, Vec<ResultRow>, bool);
    let (tx, rx) = mpsc::channel::<Done>();
    std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<GridOutcome> {
            let mut pending: BTreeMap<usize, (Vec<ResultRow>, bool)> = BTreeMap::new();
            let mut next = 0;
            let mut outcome = GridOutcome { rows: Vec::new(), failed_cells: 0, truncated_cells: 0 };
            for (i, rows, truncated) in rx {
                pending.insert(i, (rows, truncated));
                while let Some((rows, truncated)) = pending.remove(&next) {
                    for r in &rows {
                        write_line(&mut out, results, &r.to_csv())?;
                    }
                    out.flush().map_err(|e| Error::io(results, e))?;
                    outcome.failed_cells += rows.iter().any(ResultRow::is_failed) as usize;
                    outcome.truncated_cells += truncated as usize;
                    outcome.rows.extend(rows);
                    next += 1;
                }
            }
            Ok(outcome)
        });
        cells.par_iter().enumerate().for_each_with(tx, |tx, (i, cell)| {
            let done = match run_cell(bench, grid, cell) {
                Ok(logs) => {
                    let truncated = logs.last().is_some_and(|l| l.truncated);
                    if truncated {
                        eprintln!("warning: pool exhausted in cell {cell:?}");
                    }
                    (i, logs.iter().map(|l| ResultRow::from_log(*cell, l)).collect(), truncated)
                }
                Err(e) => {
                    eprintln!("warning: cell {cell:?} failed: {e}");
                    (i, vec![ResultRow::failed(*cell)], false)
                }
            };
            let _ = tx.send(done);
        });
        writer.join().expect("results writer panicked")
    })
}

/// Final-round statistics of one (strategy, init_size, budget) group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub init_size: usize,
    pub budget: usize,
    pub seeds: usize,
    pub failed: usize,
    pub n_labeled: Option<f64>,
    /// `(mean, std)` per metric, `None` when no seed defines it.
    pub accuracy: Option<(f64, f64)>,
    pub precision: Option<(f64, f64)>,
    pub recall: Option<(f64, f64)>,
    pub f1: Option<(f64, f64)>,
    pub auc: Option<(f64, f64)>,
    pub ik_reduction: Option<(f64, f64)>,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        let pair = |v: Option<(f64, f64)>| match v {
            Some((m, s)) => format!("{m},{s}"),
            None => format!("{NA},{NA}"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.strategy,
            self.init_size,
            self.budget,
            self.seeds,
            self.failed,
            opt(self.n_labeled),
            pair(self.accuracy),
            pair(self.precision),
            pair(self.recall),
            pair(self.f1),
            pair(self.auc),
            pair(self.ik_reduction)
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed summary row '{line}'"));
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 18 {
            return Err(bad());
        }
        let pair = |i: usize| -> Result<Option<(f64, f64)>> {
            let m = parse_opt::<f64>(f[i]).ok_or_else(bad)?;
            let s = parse_opt::<f64>(f[i + 1]).ok_or_else(bad)?;
            Ok(m.zip(s))
        };
        Ok(SummaryRow {
            strategy: f[0].parse()?,
            init_size: f[1].parse().map_err(|_| bad())?,
            budget: f[2].parse().map_err(|_| bad())?,
            seeds: f[3].parse().map_err(|_| bad())?,
            failed: f[4].parse().map_err(|_| bad())?,
            n_labeled: parse_opt(f[5]).ok_or_else(bad)?,
            accuracy: pair(6)?,
            precision: pair(8)?,
            recall: pair(10)?,
            f1: pair(12)?,
            auc: pair(14)?,
            ik_reduction: pair(16)?,
        })
    }
}

/// Groups rows by (init_size, budget, strategy) and aggregates each seed's
/// last round.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    // (init, budget, strategy) -> seed -> final row (None when failed)
    let mut groups: BTreeMap<(usize, usize, Strategy), BTreeMap<u64, Option<ResultRow>>> = BTreeMap::new();
    for r in rows {
        let c = &r.cell;
        let seeds = groups.entry((c.init_size, c.budget, c.strategy)).or_default();
        let slot = seeds.entry(c.seed).or_insert(None);
        if !r.is_failed() && slot.is_none_or(|s| s.round < r.round) {
            *slot = Some(*r);
        }
    }
    groups
        .into_iter()
        .map(|((init_size, budget, strategy), seeds)| {
            let finals: Vec<ResultRow> = seeds.values().flatten().copied().collect();
            let stat = |f: fn(&ResultRow) -> Option<f64>| mean_std(finals.iter().map(f));
            SummaryRow {
                strategy,
                init_size,
                budget,
                seeds: seeds.len(),
                failed: seeds.len() - finals.len(),
                n_labeled: stat(|r| r.n_labeled.map(|n| n as f64)).map(|(m, _)| m),
                accuracy: stat(|r| r.accuracy),
                precision: stat(|r| r.precision),
                recall: stat(|r| r.recall),
                f1: stat(|r| r.f1),
                auc: stat(|r| r.auc),
                ik_reduction: stat(|r| r.ik_reduction),
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for s in summary {
        text.push_str(&s.to_csv());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == SUMMARY_HEADER => {}
        _ => return Err(Error::Format(format!("{} lacks the summary header", path.display()))),
    }
    lines.filter(|l| !l.trim().is_empty()).map(SummaryRow::parse).collect()
}

/// Plain-text table of final accuracy (mean ± std) per strategy, one line per
/// (init_size, budget).
pub fn format_table(summary: &[SummaryRow]) -> String {
    let mut strategies: Vec<Strategy> = summary.iter().map(|s| s.strategy).collect();
    strategies.sort();
    strategies.dedup();
    let mut cells: Vec<(usize, usize)> = summary.iter().map(|s| (s.init_size, s.budget)).collect();
    cells.sort();
    cells.dedup();

    let mut out = format!("{:>6} {:>6} {:>9}", "init", "budget", "labels");
    for s in &strategies {
        let _ = write!(out, " {:>18}", s.name());
    }
    out.push('\n');
    for (init, budget) in cells {
        let _ = write!(out, "{init:>6} {budget:>6} {:>9}", init + budget);
        for s in &strategies {
            let row = summary.iter().find(|r| r.strategy == *s && r.init_size == init && r.budget == budget);
            let cell = match row.and_then(|r| r.accuracy) {
                Some((m, sd)) => format!("{m:.4} ± {sd:.4}"),
                None => "-".to_string(),
            };
            let _ = write!(out, " {cell:>18}");
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// SVG output

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;

fn color(s: Strategy) -> &'static str {
    match s {
        Strategy::Random => "#555555",
        Strategy::LeastConfidence => "#1f77b4",
        Strategy::Margin => "#ff7f0e",
        Strategy::Entropy => "#2ca02c",
        Strategy::Qbc => "#9467bd",
    }
}

/// Linear map from a data rectangle to a panel placed at `(ox, oy)`.
struct Panel {
    ox: f64,
    oy: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.ox + MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (PANEL_W - 1.5 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.oy + PANEL_H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (PANEL_H - 1.5 * MARGIN)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.px(self.x.0), self.px(self.x.1));
        let (b, t) = (self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(
            svg,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#000"/>"##,
            r - l,
            b - t
        );
        for i in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let (xp, yp) = (self.px(fx), self.py(fy));
            let _ =
                writeln!(svg, r##"<line x1="{xp:.1}" y1="{b:.1}" x2="{xp:.1}" y2="{:.1}" stroke="#000"/>"##, b + 4.0);
            let _ = writeln!(
                svg,
                r#"<text x="{xp:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                b + 15.0,
                tick(fx)
            );
            let _ =
                writeln!(svg, r##"<line x1="{:.1}" y1="{yp:.1}" x2="{l:.1}" y2="{yp:.1}" stroke="#000"/>"##, l - 4.0);
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                l - 6.0,
                yp + 3.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{title}</text>"#,
            0.5 * (l + r),
            t - 8.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{xlabel}</text>"#,
            0.5 * (l + r),
            b + 30.0
        );
        let (yx, yy) = (self.ox + 12.0, 0.5 * (t + b));
        let _ = writeln!(
            svg,
            r#"<text x="{yx:.1}" y="{yy:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {yx:.1} {yy:.1})">{ylabel}</text>"#
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn svg_document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n{body}</svg>\n"
    )
}

/// Mean and std of accuracy across seeds for each round of one strategy.
struct Curve {
    strategy: Strategy,
    points: Vec<(f64, f64, f64)>,
}

fn curves_for(rows: &[ResultRow], init: usize, budget: usize) -> Vec<Curve> {
    let mut by: BTreeMap<Strategy, BTreeMap<usize, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.cell.init_size == init && r.cell.budget == budget) {
        if let (Some(round), Some(n), Some(acc)) = (r.round, r.n_labeled, r.accuracy) {
            by.entry(r.cell.strategy).or_default().entry(round).or_default().push((n as f64, acc));
        }
    }
    by.into_iter()
        .map(|(strategy, rounds)| {
            let points = rounds
                .into_values()
                .map(|v| {
                    let n = v.iter().map(|p| p.0).sum::<f64>() / v.len() as f64;
                    let (m, s) = mean_std(v.iter().map(|p| Some(p.1))).unwrap_or((0.0, 0.0));
                    (n, m, s)
                })
                .collect();
            Curve { strategy, points }
        })
        .collect()
}

/// Writes one learning-curve plot per (init_size, budget) into `dir` and
/// returns the paths. Empty input writes nothing.
pub fn plot_curves(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut cells: Vec<(usize, usize)> = rows.iter().map(|r| (r.cell.init_size, r.cell.budget)).collect();
    cells.sort();
    cells.dedup();
    let mut written = Vec::new();
    for (init, budget) in cells {
        let curves = curves_for(rows, init, budget);
        if curves.is_empty() {
            continue;
        }
        let lo = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1 - p.2)).fold(1.0, f64::min);
        let y0 = ((lo - 0.02) * 20.0).floor() / 20.0;
        let panel = Panel { ox: 0.0, oy: 0.0, x: (init as f64, (init + budget) as f64), y: (y0.max(0.0), 1.0) };
        let mut body = String::new();
        panel.axes(&mut body, &format!("init {init}, budget {budget}"), "labelled samples", "test accuracy");
        for c in &curves {
            let col = color(c.strategy);
            let upper: Vec<String> =
                c.points.iter().map(|p| format!("{:.2},{:.2}", panel.px(p.0), panel.py(p.1 + p.2))).collect();
            let lower: Vec<String> =
                c.points.iter().rev().map(|p| format!("{:.2},{:.2}", panel.px(p.0), panel.py(p.1 - p.2))).collect();
            let _ = writeln!(
                body,
                r#"<polygon points="{} {}" fill="{col}" fill-opacity="0.15" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            );
            let line: Vec<String> =
                c.points.iter().map(|p| format!("{:.2},{:.2}", panel.px(p.0), panel.py(p.1))).collect();
            let dash = if c.strategy.is_active() { "" } else { r#" stroke-dasharray="6 4""# };
            let _ = writeln!(
                body,
                r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="2"{dash}/>"#,
                line.join(" ")
            );
            for p in &c.points {
                let _ = writeln!(
                    body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{col}"/>"#,
                    panel.px(p.0),
                    panel.py(p.1)
                );
            }
        }
        for (i, c) in curves.iter().enumerate() {
            let (x, y) = (PANEL_W - 20.0, 20.0 + 14.0 * i as f64);
            let dash = if c.strategy.is_active() { "" } else { r#" stroke-dasharray="6 4""# };
            let _ = writeln!(
                body,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"{dash}/>"#,
                x + 18.0,
                color(c.strategy)
            );
            let _ = writeln!(body, r#"<text x="{}" y="{}" font-size="10">{}</text>"#, x + 22.0, y + 3.0, c.strategy);
        }
        let path = dir.join(format!("curves_init{init}_budget{budget}.svg"));
        fs::write(&path, svg_document(PANEL_W + 140.0, PANEL_H, &body)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Top (x, y), side (x, z) and front (y, z) projections of the sampled
/// envelope with fruit points overlaid (green reachable, red unreachable).
pub fn plot_envelope(envelope: &[ArmPoint], fruit: &[LabeledSample], path: &Path) -> Result<()> {
    let all = envelope.iter().chain(fruit.iter().map(|s| &s.arm_point));
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for p in all {
        for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    if !lo[0].is_finite() {
        return Err(Error::Usage("nothing to plot".into()));
    }
    let range = |k: usize| {
        let pad = 0.05 * (hi[k] - lo[k]).max(0.1);
        (lo[k] - pad, hi[k] + pad)
    };
    let views = [
        ("top view", 0, 1, "x (m)", "y (m)"),
        ("side view", 0, 2, "x (m)", "z (m)"),
        ("front view", 1, 2, "y (m)", "z (m)"),
    ];
    let mut body = String::new();
    for (i, (title, a, b, xl, yl)) in views.into_iter().enumerate() {
        let panel = Panel { ox: i as f64 * PANEL_W, oy: 0.0, x: range(a), y: range(b) };
        panel.axes(&mut body, title, xl, yl);
        let coord = |p: &ArmPoint, k: usize| [p.x, p.y, p.z][k];
        // One mark per 2-pixel bin keeps dense envelopes small.
        let mut seen = std::collections::BTreeSet::new();
        for p in envelope {
            let (x, y) = (panel.px(coord(p, a)), panel.py(coord(p, b)));
            if seen.insert(((x / 2.0) as i64, (y / 2.0) as i64)) {
                let _ = writeln!(
                    body,
                    r##"<rect x="{:.1}" y="{:.1}" width="2" height="2" fill="#9ecae1"/>"##,
                    x - 1.0,
                    y - 1.0
                );
            }
        }
        for s in fruit {
            let col = if s.label == Label::Reachable { "#2ca02c" } else { "#d62728" };
            let (x, y) = (panel.px(coord(&s.arm_point, a)), panel.py(coord(&s.arm_point, b)));
            let _ = writeln!(body, r#"<circle cx="{x:.1}" cy="{y:.1}" r="1.8" fill="{col}" fill-opacity="0.7"/>"#);
        }
    }
    fs::write(path, svg_document(3.0 * PANEL_W, PANEL_H, &body)).map_err(|e| Error::io(path, e))
}
