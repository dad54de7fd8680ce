use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::preset::Preset;
use crate::convergence::{compare_truncations, summarize_run, write_traces_csv, Classification, RunSummary, TruncationComparison};
use crate::error::{Error, Result};
use crate::lattice::ModeLattice;
use crate::oracle::{default_dt, integrate, max_abs_difference, OdeRunConfig};
use crate::taylor::{build_series, read_table, write_table, ConvolutionMethod, TaylorTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRACES_FILE: &str = "traces.csv";
pub const VERDICT_FILE: &str = "verdict.json";
pub const TABLE_FILE: &str = "table.bin";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub dt: f64,
    /// Largest coefficient-wise gap between the Taylor sum and the RK4 state.
    pub max_abs_difference: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub series_seconds: f64,
    pub analysis_seconds: f64,
    pub oracle_seconds: f64,
}

/// One `(N, v_max, t)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub bound: usize,
    /// `None` when a file or inline condition ran unscaled.
    pub v_max: Option<f64>,
    pub t: f64,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
    pub oracle: Option<OracleCheck>,
    pub timings: Timings,
    pub dir: Option<PathBuf>,
}

impl RunRecord {
    pub fn classification(&self) -> Option<Classification> {
        self.summary.as_ref().map(|s| s.verdict.classification)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extrapolation {
    #[serde(rename = "suggests nonconvergence for unbounded N")]
    SuggestsNonconvergence,
    #[serde(rename = "suggests convergence, N-insensitive")]
    SuggestsConvergence,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Extrapolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Extrapolation::SuggestsNonconvergence => "suggests nonconvergence for unbounded N",
            Extrapolation::SuggestsConvergence => "suggests convergence, N-insensitive",
            Extrapolation::Inconclusive => "inconclusive",
        })
    }
}

/// What runs at several truncations of one `(v_max, t)` point say about the
/// untruncated problem. Also returns the pairwise comparisons it used.
pub fn extrapolation_verdict(runs: &[&RunSummary]) -> (Extrapolation, Vec<TruncationComparison>) {
    let mut sorted: Vec<&RunSummary> = runs.to_vec();
    sorted.sort_by_key(|s| s.bound);
    sorted.dedup_by_key(|s| s.bound);
    if sorted.len() < 2 {
        return (Extrapolation::Inconclusive, Vec::new());
    }
    let mut comparisons = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            match compare_truncations(a, b) {
                Ok(c) => comparisons.push(c),
                Err(_) => return (Extrapolation::Inconclusive, comparisons),
            }
        }
    }
    let monotone = comparisons.iter().all(|c| c.monotone());
    let largest = sorted[sorted.len() - 1];
    let verdict = if largest.verdict.classification == Classification::Nonconvergent && monotone {
        Extrapolation::SuggestsNonconvergence
    } else if sorted.iter().all(|s| s.verdict.classification == Classification::LikelyConvergent)
        && comparisons.iter().all(|c| c.agrees_to_six_figures == Some(true))
    {
        Extrapolation::SuggestsConvergence
    } else {
        Extrapolation::Inconclusive
    };
    (verdict, comparisons)
}

/// Cross-truncation view of one `(v_max, t)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub v_max: Option<f64>,
    pub t: f64,
    pub comparisons: Vec<TruncationComparison>,
    pub monotonicity_violations: usize,
    pub anomalies: usize,
    pub extrapolation: Extrapolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub v_max: Option<f64>,
    pub t: f64,
    /// One cell per entry of the config's `n` list.
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub points: Vec<PointReport>,
    pub table: Vec<SummaryRow>,
}

impl SweepReport {
    pub fn record(&self, bound: usize, v_max: Option<f64>, t: f64) -> Option<&RunRecord> {
        self.records.iter().find(|r| r.bound == bound && r.v_max == v_max && r.t == t)
    }

    pub fn point(&self, v_max: Option<f64>, t: f64) -> Option<&PointReport> {
        self.points.iter().find(|p| p.v_max == v_max && p.t == t)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("v_max,t");
        for n in &self.config.n {
            out.push_str(&format!(",N={n}"));
        }
        out.push('\n');
        for row in &self.table {
            let v = row.v_max.map_or_else(|| "ic".to_string(), |v| v.to_string());
            out.push_str(&format!("{v},{}", row.t));
            for cell in &row.cells {
                out.push(',');
                out.push_str(cell);
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_dir_name(bound: usize, v_max: Option<f64>, t: f64) -> String {
    let v = v_max.map_or_else(|| "ic".to_string(), |v| v.to_string());
    format!("N{bound}_v{v}_t{t}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let io = |source| Error::Io { path: path.into(), source };
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(value).map_err(|source| Error::Json { path: path.into(), source })
}

fn oracle_against(table: &TaylorTable, t: f64, dt: f64) -> OracleCheck {
    let config = OdeRunConfig::new(table.initial().clone(), table.alpha(), t, dt);
    match integrate(&config) {
        Ok(state) => OracleCheck { dt, max_abs_difference: Some(max_abs_difference(&state, &table.evaluate(t))), skipped: None },
        Err(e) => OracleCheck { dt, max_abs_difference: None, skipped: Some(e.to_string()) },
    }
}

/// Builds one series and analyses it at every `t`.
fn run_job(config: &ExperimentConfig, bound: usize, v_max: Option<f64>) -> Vec<RunRecord> {
    let blank = |t: f64, error: Option<String>| RunRecord {
        version: VERSION.to_string(),
        bound,
        v_max,
        t,
        summary: None,
        error,
        oracle: None,
        timings: Timings::default(),
        dir: None,
    };
    let start = Instant::now();
    let table = ModeLattice::new(bound)
        .and_then(|lattice| config.initial_state(lattice, v_max))
        .and_then(|ic| build_series(ic, config.alpha, config.p_max, config.method()));
    let table = match table {
        Ok(table) => table,
        Err(e) => return config.t.iter().map(|&t| blank(t, Some(e.to_string()))).collect(),
    };
    let series_seconds = start.elapsed().as_secs_f64();

    config
        .t
        .iter()
        .map(|&t| {
            let mut record = blank(t, None);
            record.timings.series_seconds = series_seconds;
            let analysis = Instant::now();
            let (summary, traces) = match summarize_run(&table, t, config.p_max) {
                Ok(done) => done,
                Err(e) => {
                    record.error = Some(e.to_string());
                    return record;
                }
            };
            record.timings.analysis_seconds = analysis.elapsed().as_secs_f64();
            if config.oracle {
                let dt = config.oracle_dt.unwrap_or_else(|| default_dt(t));
                let began = Instant::now();
                record.oracle = Some(if summary.verdict.classification == Classification::LikelyConvergent {
                    oracle_against(&table, t, dt)
                } else {
                    OracleCheck { dt, max_abs_difference: None, skipped: Some("series not likely convergent".into()) }
                });
                record.timings.oracle_seconds = began.elapsed().as_secs_f64();
            }
            record.summary = Some(summary);
            if let Some(root) = &config.output_dir {
                let dir = root.join(run_dir_name(bound, v_max, t));
                if let Err(e) = write_run(&dir, &record, &traces, config.write_tables.then_some(&table)) {
                    record.error = Some(e.to_string());
                }
                record.dir = Some(dir);
            }
            record
        })
        .collect()
}

fn write_run(
    dir: &Path,
    record: &RunRecord,
    traces: &[crate::convergence::PartialSumTrace],
    table: Option<&TaylorTable>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    let mut csv = Vec::new();
    write_traces_csv(traces, &mut csv)?;
    write_atomic(&dir.join(TRACES_FILE), &csv)?;
    let verdict = dir.join(VERDICT_FILE);
    write_atomic(&verdict, &to_json(record, &verdict)?)?;
    if let Some(table) = table {
        let path = dir.join(TABLE_FILE);
        let tmp = path.with_extension("partial");
        write_table(table, &tmp)?;
        std::fs::rename(&tmp, &path).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

/// Runs every `(N, v_max, t)` point, compares truncations per `(v_max, t)`
/// and writes the report when `output_dir` is set. Failed points are
/// recorded and do not stop the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    let config = config.clone().validate()?;
    let v_axis = config.v_max_axis();
    let jobs: Vec<(usize, Option<f64>)> =
        config.n.iter().flat_map(|&n| v_axis.iter().map(move |&v| (n, v))).collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = config.workers {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter { field: "workers", reason: e.to_string() })?;
    let records: Vec<RunRecord> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter().flat_map_iter(|&(n, v)| run_job(&config, n, v)).collect()
    });

    let mut points = Vec::new();
    let mut table = Vec::new();
    for &v in &v_axis {
        for &t in &config.t {
            let at: Vec<&RunRecord> = records.iter().filter(|r| r.v_max == v && r.t == t).collect();
            let summaries: Vec<&RunSummary> = at.iter().filter_map(|r| r.summary.as_ref()).collect();
            let (mut extrapolation, comparisons) = extrapolation_verdict(&summaries);
            if summaries.len() != at.len() {
                extrapolation = Extrapolation::Inconclusive;
            }
            points.push(PointReport {
                v_max: v,
                t,
                monotonicity_violations: comparisons.iter().map(|c| c.monotonicity_violations.len()).sum(),
                anomalies: summaries.iter().filter(|s| s.verdict.anomaly).count(),
                comparisons,
                extrapolation,
            });
            let cells = config
                .n
                .iter()
                .map(|&n| {
                    at.iter()
                        .find(|r| r.bound == n)
                        .and_then(|r| r.classification())
                        .map_or_else(|| "error".to_string(), |c| c.to_string())
                })
                .collect();
            table.push(SummaryRow { v_max: v, t, cells });
        }
    }

    let report = SweepReport { version: VERSION.to_string(), config, records, points, table };
    if let Some(root) = &report.config.output_dir {
        std::fs::create_dir_all(root).map_err(|source| Error::Io { path: root.clone(), source })?;
        write_atomic(&root.join(SUMMARY_FILE), report.summary_csv().as_bytes())?;
        let path = root.join(REPORT_FILE);
        write_atomic(&path, &to_json(&report, &path)?)?;
    }
    Ok(report)
}

pub fn read_record(dir: &Path) -> Result<RunRecord> {
    let path = dir.join(VERDICT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

/// Compares two run directories written by [`run_sweep`].
pub fn compare_dirs(a: &Path, b: &Path) -> Result<TruncationComparison> {
    let summary = |dir: &Path| -> Result<RunSummary> {
        let record = read_record(dir)?;
        record.summary.ok_or_else(|| Error::Incomparable(format!("{} holds no completed run", dir.display())))
    };
    compare_truncations(&summary(a)?, &summary(b)?)
}

/// Re-integrates a stored run with RK4 and measures its gap to the Taylor sum.
pub fn oracle_check_dir(dir: &Path, dt: Option<f64>) -> Result<OracleCheck> {
    let record = read_record(dir)?;
    let table = read_table(&dir.join(TABLE_FILE))?;
    let dt = dt.unwrap_or_else(|| default_dt(record.t));
    let check = OdeRunConfig::new(table.initial().clone(), table.alpha(), record.t, dt);
    let state = integrate(&check)?;
    Ok(OracleCheck { dt, max_abs_difference: Some(max_abs_difference(&state, &table.evaluate(record.t))), skipped: None })
}

/// Bracket around the paper-example speed where the run verdict stops being
/// likely convergent at every listed bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipBracket {
    pub convergent_at: f64,
    pub nonconvergent_at: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn locate_flip(
    bounds: &[usize],
    alpha: f64,
    t: f64,
    p_max: usize,
    lo: f64,
    hi: f64,
    iterations: usize,
    method: ConvolutionMethod,
) -> Result<Option<FlipBracket>> {
    let convergent = |v: f64| -> Result<bool> {
        for &n in bounds {
            let ic = Preset::PaperExample.build(ModeLattice::new(n)?, v, None)?;
            let table = build_series(ic, alpha, p_max, method)?;
            let (summary, _) = summarize_run(&table, t, p_max)?;
            if summary.verdict.classification != Classification::LikelyConvergent {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !convergent(lo)? || convergent(hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        if convergent(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(FlipBracket { convergent_at: lo, nonconvergent_at: hi }))
}
