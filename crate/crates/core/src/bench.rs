//! Method comparison harness: runs a roster over several instance sizes,
//! aggregates lengths and times, and renders the result tables.
//!
//! Statistics are population statistics (divide by `k`, not `k - 1`).
//! Gaps are measured against the best mean length among the methods run on
//! the same instance.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::data::{generate_dataset, write_atomic, BoundingBox};
use crate::error::{param, Error, Result};
use crate::geo::{DistanceMatrix, MetricKind};
use crate::solve::{lookup, solve, SolveOptions};
use crate::tour::{gap_to_best, SolveTrace, TraceSample};

/// Instance sizes of the reference comparison.
pub const BENCH_SIZES: [usize; 6] = [20, 50, 100, 200, 500, 1000];
pub const DEFAULT_REPEATS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub methods: Vec<String>,
    pub sizes: Vec<usize>,
    /// Runs per stochastic method; deterministic methods run once.
    pub repeats: u32,
    /// Run `k` of a stochastic method uses seed `seed + k`.
    pub seed: u64,
    pub budget: Budget,
    pub keep_traces: bool,
}

impl SuiteConfig {
    pub fn new(methods: Vec<String>, sizes: Vec<usize>) -> Self {
        SuiteConfig {
            methods,
            sizes,
            repeats: DEFAULT_REPEATS,
            seed: 0,
            budget: Budget::millis(2_000),
            keep_traces: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.sizes.is_empty() {
            return Err(param("suite", "needs at least one method and one size"));
        }
        if self.repeats == 0 {
            return Err(param("repeats", "must be >= 1"));
        }
        Ok(())
    }
}

/// What a solver reports back for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tour_len_m: f64,
    pub elapsed_ms: f64,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: String,
    pub size: usize,
    pub run: u32,
    pub seed: u64,
    pub tour_len_m: Option<f64>,
    pub elapsed_ms: Option<f64>,
    /// Against the shortest run on the same instance.
    pub gap_pct: Option<f64>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<SolveTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub var: f64,
    pub min: f64,
    pub max: f64,
}

/// Two-pass population mean, variance and standard deviation.
pub fn population_stats(xs: &[f64]) -> Result<Stats> {
    if xs.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k;
    Ok(Stats {
        mean,
        std: var.sqrt(),
        var,
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub size: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean_len_m: f64,
    pub min_len_m: f64,
    pub std_len_m: f64,
    pub var_len_m: f64,
    pub gap_pct: f64,
    pub mean_time_s: f64,
    pub std_time_s: f64,
    pub var_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
}

impl SuiteReport {
    /// Aggregates runs per (method, size). Rows follow first appearance in
    /// `runs`; methods without a successful run get no row.
    pub fn from_runs(runs: &[RunResult]) -> Result<Self> {
        let mut keys: Vec<(String, usize)> = Vec::new();
        for r in runs {
            let k = (r.method.clone(), r.size);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut rows = Vec::new();
        for (method, size) in keys {
            // sort so the sums do not depend on the order runs finished in
            let mut cohort: Vec<&RunResult> = runs.iter().filter(|r| r.method == method && r.size == size).collect();
            cohort.sort_by_key(|r| r.run);
            let ok: Vec<(f64, f64)> = cohort
                .iter()
                .filter_map(|r| Some((r.tour_len_m?, r.elapsed_ms?)))
                .collect();
            if ok.is_empty() {
                continue;
            }
            let len = population_stats(&ok.iter().map(|x| x.0).collect::<Vec<_>>())?;
            let time = population_stats(&ok.iter().map(|x| x.1 / 1e3).collect::<Vec<_>>())?;
            rows.push(ReportRow {
                method,
                size,
                runs: ok.len(),
                failures: cohort.len() - ok.len(),
                mean_len_m: len.mean,
                min_len_m: len.min,
                std_len_m: len.std,
                var_len_m: len.var,
                gap_pct: 0.0,
                mean_time_s: time.mean,
                std_time_s: time.std,
                var_time_s: time.var,
            });
        }
        let mut report = SuiteReport { rows };
        report.fill_gaps()?;
        Ok(report)
    }

    fn fill_gaps(&mut self) -> Result<()> {
        let sizes: Vec<usize> = self.rows.iter().map(|r| r.size).collect();
        for size in sizes {
            let best = self.best_mean(size).expect("size has rows");
            for r in self.rows.iter_mut().filter(|r| r.size == size) {
                r.gap_pct = if r.mean_len_m == best { 0.0 } else { gap_to_best(r.mean_len_m, best)? };
            }
        }
        Ok(())
    }

    fn best_mean(&self, size: usize) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.size == size)
            .map(|r| r.mean_len_m)
            .min_by(|a, b| a.total_cmp(b))
    }

    fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !s.contains(&r.size) {
                s.push(r.size);
            }
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| param("report", e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| param("report", e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize().enumerate() {
            rows.push(rec.map_err(|e| Error::Parse { line: i + 2, detail: e.to_string() })?);
        }
        Ok(SuiteReport { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One table per instance size: Method, Tour Len., Gap to best (%), Time (s).
    /// The best row of each table is bold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("Tour lengths in meters; mean over runs. Std and var are population statistics.\n");
        for size in self.sizes() {
            let best = self.best_mean(size).expect("size has rows");
            let _ = write!(
                out,
                "\n### {size} points\n\n| Method | Tour Len. | Gap to best (%) | Time (s) |\n|---|---:|---:|---:|\n"
            );
            for r in self.rows.iter().filter(|r| r.size == size) {
                let cells = [
                    r.method.clone(),
                    format!("{:.1}", r.mean_len_m),
                    format!("{:.2}", r.gap_pct),
                    format!("{:.3}", r.mean_time_s),
                ];
                let cells: Vec<String> = if r.mean_len_m == best {
                    cells.iter().map(|c| format!("**{c}**")).collect()
                } else {
                    cells.to_vec()
                };
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown];

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

/// Writes `report.{csv,json,md}` into `dir`; returns the paths written.
pub fn emit_report(report: &SuiteReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::Empty("report"));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &f in formats {
        let text = match f {
            ReportFormat::Csv => report.to_csv()?,
            ReportFormat::Json => report.to_json()?,
            ReportFormat::Markdown => report.to_markdown(),
        };
        let path = dir.join(format!("report.{}", f.extension()));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Writes one `elapsed_ms,best_cost_m` CSV per run that kept its trace.
pub fn write_traces(runs: &[RunResult], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in runs {
        if let Some(t) = &r.trace {
            let name = format!("trace_{}_{}_{}.csv", r.method.replace([':', '/'], "_"), r.size, r.run);
            let path = dir.join(name);
            write_atomic(&path, t.to_csv().as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Trailing running mean of the best-cost samples over `window` samples.
pub fn smooth_trace(trace: &SolveTrace, window: usize) -> Result<SolveTrace> {
    if window == 0 {
        return Err(param("window", "must be >= 1"));
    }
    let costs: Vec<f64> = trace.samples.iter().map(|s| s.best_cost_m).collect();
    let samples = trace
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let lo = (i + 1).saturating_sub(window);
            let w = &costs[lo..=i];
            TraceSample {
                best_cost_m: w.iter().sum::<f64>() / w.len() as f64,
                ..*s
            }
        })
        .collect();
    Ok(SolveTrace { samples })
}

/// Seeded synthetic site of `n` points in the default 11 km² box.
pub fn default_dataset(n: usize, seed: u64) -> Result<DistanceMatrix> {
    let set = generate_dataset(n, &BoundingBox::default_site(), seed.wrapping_add(n as u64))?;
    DistanceMatrix::build(&set, MetricKind::Haversine)
}

struct Job<'a> {
    method: &'a str,
    size: usize,
    run: u32,
    seed: u64,
}

/// Runs the full cross-product with an injected dataset provider and
/// solver. Every method on a given size sees the same matrix. Failed runs are
/// kept as results with an error message.
pub fn run_suite_with<P, S, R>(
    cfg: &SuiteConfig,
    provider: P,
    is_stochastic: S,
    solver: R,
) -> Result<(Vec<RunResult>, SuiteReport)>
where
    P: Fn(usize) -> Result<DistanceMatrix>,
    S: Fn(&str) -> bool,
    R: Fn(&DistanceMatrix, &str, &SolveOptions) -> Result<RunOutput> + Sync,
{
    cfg.validate()?;
    let mut runs = Vec::new();
    for &size in &cfg.sizes {
        let d = provider(size)?;
        let mut jobs = Vec::new();
        for m in &cfg.methods {
            let reps = if is_stochastic(m) { cfg.repeats } else { 1 };
            for run in 0..reps {
                jobs.push(Job {
                    method: m,
                    size,
                    run,
                    seed: cfg.seed.wrapping_add(run as u64),
                });
            }
        }
        let exec = |j: &Job| -> RunResult {
            let opts = SolveOptions {
                rng_seed: j.seed,
                start: 0,
                budget: cfg.budget,
                params: Default::default(),
            };
            let out = solver(&d, j.method, &opts);
            let (tour_len_m, elapsed_ms, error, trace) = match out {
                Ok(o) => (Some(o.tour_len_m), Some(o.elapsed_ms), None, cfg.keep_traces.then_some(o.trace)),
                Err(e) => (None, None, Some(e.to_string()), None),
            };
            RunResult {
                method: j.method.to_string(),
                size: j.size,
                run: j.run,
                seed: j.seed,
                tour_len_m,
                elapsed_ms,
                gap_pct: None,
                error,
                trace,
            }
        };
        #[cfg(feature = "parallel")]
        let mut batch: Vec<RunResult> = {
            use rayon::prelude::*;
            jobs.par_iter().map(exec).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let mut batch: Vec<RunResult> = jobs.iter().map(exec).collect();

        let best = batch.iter().filter_map(|r| r.tour_len_m).min_by(|a, b| a.total_cmp(b));
        if let Some(best) = best {
            for r in &mut batch {
                r.gap_pct = match r.tour_len_m {
                    Some(l) if l == best => Some(0.0),
                    Some(l) => Some(gap_to_best(l, best)?),
                    None => None,
                };
            }
        }
        runs.extend(batch);
    }
    let report = SuiteReport::from_runs(&runs)?;
    Ok((runs, report))
}

/// [`run_suite_with`] over the registered methods and seeded synthetic sites.
pub fn run_suite(cfg: &SuiteConfig) -> Result<(Vec<RunResult>, SuiteReport)> {
    let mut stochastic = Vec::new();
    for m in &cfg.methods {
        stochastic.push((m.as_str(), lookup(m)?.stochastic));
    }
    run_suite_with(
        cfg,
        |n| default_dataset(n, cfg.seed),
        |m| stochastic.iter().any(|&(id, s)| id == m && s),
        |d, m, o| {
            let s = solve(d, m, o)?;
            Ok(RunOutput {
                tour_len_m: s.tour.length_m(),
                elapsed_ms: s.elapsed_ms,
                trace: s.trace,
            })
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::random;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stub(lengths: Vec<f64>) -> impl Fn(&DistanceMatrix, &str, &SolveOptions) -> Result<RunOutput> + Sync {
        move |_, _, o| {
            Ok(RunOutput {
                tour_len_m: lengths[o.rng_seed as usize],
                elapsed_ms: 1.0,
                trace: SolveTrace::default(),
            })
        }
    }

    #[test]
    fn injected_fixture_statistics() {
        let mut cfg = SuiteConfig::new(vec!["stub".into()], vec![5]);
        cfg.repeats = 5;
        let (runs, rep) =
            run_suite_with(&cfg, |n| Ok(random(n, 1)), |_| true, stub(vec![10.0, 10.0, 10.0, 10.0, 20.0])).unwrap();
        assert_eq!(runs.len(), 5);
        let r = &rep.rows[0];
        assert_eq!(r.mean_len_m, 12.0);
        assert_eq!(r.var_len_m, 16.0);
        assert_eq!(r.std_len_m, 4.0);
        assert_eq!(r.gap_pct, 0.0);
        assert_eq!(runs[4].gap_pct, Some(100.0));
    }

    #[test]
    fn table_gap_arithmetic() {
        assert!((gap_to_best(12951.0, 11096.2).unwrap() - 16.72).abs() <= 0.01);
    }

    #[test]
    fn deterministic_method_runs_once() {
        let cfg = SuiteConfig {
            budget: Budget::iterations(500),
            ..SuiteConfig::new(vec!["christofides".into(), "sa".into()], vec![12])
        };
        let (runs, rep) = run_suite(&cfg).unwrap();
        assert_eq!(runs.iter().filter(|r| r.method == "christofides").count(), 1);
        assert_eq!(runs.iter().filter(|r| r.method == "sa").count(), 10);
        let c = rep.rows.iter().find(|r| r.method == "christofides").unwrap();
        assert_eq!((c.runs, c.std_len_m), (1, 0.0));
        assert_eq!(rep.rows.iter().filter(|r| r.gap_pct == 0.0).count(), 1);
        let (runs2, rep2) = run_suite(&cfg).unwrap();
        let lens = |rs: &[RunResult]| rs.iter().map(|r| r.tour_len_m).collect::<Vec<_>>();
        assert_eq!(lens(&runs), lens(&runs2));
        let strip = |r: &SuiteReport| r.rows.iter().map(|x| (x.mean_len_m, x.gap_pct)).collect::<Vec<_>>();
        assert_eq!(strip(&rep), strip(&rep2));
        assert!(run_suite(&SuiteConfig::new(vec!["foo".into()], vec![5])).is_err());
    }

    #[test]
    fn failures_are_recorded() {
        let cfg = SuiteConfig {
            budget: Budget::iterations(50),
            ..SuiteConfig::new(vec!["held_karp".into(), "nn".into()], vec![25])
        };
        let (runs, rep) = run_suite(&cfg).unwrap();
        assert!(runs[0].error.is_some() && runs[0].tour_len_m.is_none());
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].method, "nn");
    }

    #[test]
    fn smoothing() {
        let mk = |v: &[f64]| SolveTrace {
            samples: v
                .iter()
                .enumerate()
                .map(|(i, &c)| TraceSample {
                    elapsed_ms: i as f64,
                    iteration: i as u64,
                    best_cost_m: c,
                })
                .collect(),
        };
        let t = mk(&[4.0, 2.0, 2.0]);
        assert_eq!(smooth_trace(&t, 2).unwrap(), mk(&[4.0, 3.0, 2.0]));
        assert_eq!(smooth_trace(&t, 1).unwrap(), t);
        assert_eq!(smooth_trace(&mk(&[5.0; 4]), 3).unwrap(), mk(&[5.0; 4]));
        assert!(smooth_trace(&t, 0).is_err());
    }

    fn sample_report() -> SuiteReport {
        let runs: Vec<RunResult> = [("a", 10.0), ("b", 12.5), ("a", 11.0), ("c", 10.25)]
            .iter()
            .enumerate()
            .map(|(i, &(m, l))| RunResult {
                method: m.into(),
                size: 20,
                run: i as u32,
                seed: 0,
                tour_len_m: Some(l),
                elapsed_ms: Some(3.0 + i as f64),
                gap_pct: None,
                error: None,
                trace: None,
            })
            .collect();
        SuiteReport::from_runs(&runs).unwrap()
    }

    #[test]
    fn report_formats() {
        let rep = sample_report();
        assert_eq!(SuiteReport::from_csv(&rep.to_csv().unwrap()).unwrap(), rep);
        let back: SuiteReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
        let best = rep.rows.iter().map(|r| r.mean_len_m).fold(f64::INFINITY, f64::min);
        for r in &rep.rows {
            assert_relative_eq!(r.gap_pct, 100.0 * (r.mean_len_m - best) / best, epsilon = 0.01);
        }
        let md = rep.to_markdown();
        assert!(md.contains("| Method | Tour Len. | Gap to best (%) | Time (s) |"));
        assert!(md.contains("| **c** | **10.2** | **0.00** |"), "{md}");
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&rep, dir.path(), &ReportFormat::ALL).unwrap();
        assert_eq!(files.len(), 3);
        assert!(emit_report(&SuiteReport::default(), dir.path(), &ReportFormat::ALL).is_err());
    }

    #[test]
    fn single_row_markdown_has_four_columns() {
        let mut rep = sample_report();
        rep.rows.truncate(1);
        let md = rep.to_markdown();
        let table: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
        assert_eq!(table.len(), 3);
        assert!(table.iter().all(|l| l.matches('|').count() == 5));
    }

    proptest! {
        #[test]
        fn stats_match_direct_formulas(xs in proptest::collection::vec(0.0f64..1e6, 1..40)) {
            let s = population_stats(&xs).unwrap();
            let k = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / k;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / k - mean * mean;
            prop_assert!((s.mean - mean).abs() <= 1e-9 * mean.max(1.0));
            prop_assert!((s.var - var).abs() <= 1e-6 * (mean * mean).max(1.0));
            prop_assert!((s.var - s.std * s.std).abs() <= 1e-9 * s.var.max(1e-12));
        }

        #[test]
        fn report_ignores_run_order(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            let base: Vec<RunResult> = (0..6).map(|i| RunResult {
                method: if i % 2 == 0 { "x".into() } else { "y".into() },
                size: 10,
                run: (i / 2) as u32,
                seed: 0,
                tour_len_m: Some(100.0 + (i * i) as f64 * 0.1),
                elapsed_ms: Some(1.0),
                gap_pct: None,
                error: None,
                trace: None,
            }).collect();
            let shuffled: Vec<RunResult> = perm.iter().map(|&i| base[i].clone()).collect();
            let a = SuiteReport::from_runs(&base).unwrap();
            let mut b = SuiteReport::from_runs(&shuffled).unwrap();
            b.rows.sort_by(|p, q| p.method.cmp(&q.method));
            prop_assert_eq!(a, b);
        }
    }
}
