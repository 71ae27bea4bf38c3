//! Alpha sweeps over seeded realizations, producing figure-ready CSV.
//!
//! A synthetic sweep draws one ground truth and rating table per realization
//! and runs the engine on that same table for every alpha, recording the
//! quality error and the reputation tau. A dataset sweep loads the data once,
//! runs the engine once per alpha, and repeats only the random tie-breaking of
//! the ranking, recording both AUC variants.
//!
//! Seeds are derived from `(base_seed, realization)` and, for tie-breaking,
//! the alpha index as well, so adding realizations or alphas leaves earlier
//! results untouched. Realizations run in parallel but are reduced in
//! realization order; reports do not depend on the worker count.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_to_fixed_point, EngineConfig, EngineError};
use crate::ingest::{load_benchmarks, load_ratings, DatasetManifest, IngestError};
use crate::metrics::{
    auc, auc_pairwise, quality_rmse_rated, rank_objects, reputation_tau, MetricError, TauReference,
};
use crate::synth::{generate, GeneratorConfig, GeneratorError};

pub const REPORT_HEADER: &str = "alpha,metric,mean,std,n,mean_iterations,convergence_rate";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{0} sweep needs a {1} workload")]
    WrongWorkload(&'static str, &'static str),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("report line {line}: {reason}")]
    Report { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Synthetic(GeneratorConfig),
    Dataset(DatasetManifest),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub realizations: usize,
    pub base_seed: u64,
    pub workload: Workload,
    /// Engine settings; `alpha` is overridden by each grid point.
    pub engine: EngineConfig,
    /// Reference list for the reputation tau of synthetic sweeps.
    pub tau_reference: TauReference,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(workload: Workload) -> Self {
        Self {
            alphas: default_alphas(),
            realizations: 100,
            base_seed: 0,
            workload,
            engine: EngineConfig::default(),
            tau_reference: TauReference::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.alphas.is_empty() {
            return Err(SweepError::InvalidSpec("alpha grid is empty".into()));
        }
        if self.realizations == 0 {
            return Err(SweepError::InvalidSpec(
                "need at least one realization".into(),
            ));
        }
        for &alpha in &self.alphas {
            self.engine_at(alpha).validate()?;
        }
        if let Workload::Synthetic(cfg) = &self.workload {
            cfg.validate()?;
        }
        Ok(())
    }

    fn engine_at(&self, alpha: f64) -> EngineConfig {
        EngineConfig {
            alpha,
            ..self.engine
        }
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T, SweepError> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }
}

/// `0.0, 0.1, ..., 2.0`.
pub fn default_alphas() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 10.0).collect()
}

/// Deterministically mixes `path` into `base`, one ChaCha8 stream per step.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |acc, &step| {
        let mut rng = ChaCha8Rng::seed_from_u64(acc);
        rng.set_stream(step);
        rng.next_u64()
    })
}

/// Generator seed of synthetic realization `r`.
pub fn realization_seed(base: u64, r: usize) -> u64 {
    derive_seed(base, &[r as u64])
}

const TIE_BREAK_DOMAIN: u64 = 0x7469_6562_7265_616b;

/// Tie-break seed of dataset realization `r` at grid point `alpha_index`.
pub fn tie_break_seed(base: u64, alpha_index: usize, r: usize) -> u64 {
    derive_seed(base, &[TIE_BREAK_DOMAIN, alpha_index as u64, r as u64])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Delta,
    Tau,
    AucEq9,
    AucPairwise,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Delta => "delta",
            Metric::Tau => "tau",
            Metric::AucEq9 => "auc_eq9",
            Metric::AucPairwise => "auc_pairwise",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(Metric::Delta),
            "tau" => Ok(Metric::Tau),
            "auc_eq9" => Ok(Metric::AucEq9),
            "auc_pairwise" => Ok(Metric::AucPairwise),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Aggregate of one metric at one alpha across realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single realization.
    pub std: f64,
    pub n: usize,
    pub mean_iterations: f64,
    /// Fraction of engine runs that converged.
    pub convergence_rate: f64,
}

impl SweepRow {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn make_row(
    alpha: f64,
    metric: Metric,
    values: &[f64],
    iterations: &[usize],
    converged: &[bool],
) -> SweepRow {
    let (mean, std) = mean_std(values);
    SweepRow {
        alpha,
        metric,
        mean,
        std,
        n: values.len(),
        mean_iterations: iterations.iter().sum::<usize>() as f64 / iterations.len() as f64,
        convergence_rate: converged.iter().filter(|&&c| c).count() as f64 / converged.len() as f64,
    }
}

struct RunOutcome {
    delta: f64,
    tau: f64,
    iterations: usize,
    converged: bool,
}

/// Quality error and reputation tau versus alpha on synthetic workloads.
pub fn run_synthetic_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let Workload::Synthetic(generator) = &spec.workload else {
        return Err(SweepError::WrongWorkload("synthetic", "synthetic"));
    };
    spec.validate()?;

    let realizations: Vec<Vec<RunOutcome>> = spec.install(|| {
        (0..spec.realizations)
            .into_par_iter()
            .map(|r| {
                let cfg = generator.with_seed(realization_seed(spec.base_seed, r));
                let (truth, table) = generate(&cfg)?;
                spec.alphas
                    .iter()
                    .map(|&alpha| {
                        let state = run_to_fixed_point(&table, &spec.engine_at(alpha))?;
                        Ok(RunOutcome {
                            delta: quality_rmse_rated(&state.q, &truth.quality)?,
                            tau: reputation_tau(&state, &truth, &table, spec.tau_reference)?,
                            iterations: state.iterations,
                            converged: state.converged,
                        })
                    })
                    .collect::<Result<Vec<_>, SweepError>>()
            })
            .collect::<Result<Vec<_>, SweepError>>()
    })??;

    let mut rows = Vec::with_capacity(2 * spec.alphas.len());
    for (a, &alpha) in spec.alphas.iter().enumerate() {
        let runs: Vec<&RunOutcome> = realizations.iter().map(|per_alpha| &per_alpha[a]).collect();
        let iterations: Vec<usize> = runs.iter().map(|o| o.iterations).collect();
        let converged: Vec<bool> = runs.iter().map(|o| o.converged).collect();
        let deltas: Vec<f64> = runs.iter().map(|o| o.delta).collect();
        let taus: Vec<f64> = runs.iter().map(|o| o.tau).collect();
        rows.push(make_row(
            alpha,
            Metric::Delta,
            &deltas,
            &iterations,
            &converged,
        ));
        rows.push(make_row(alpha, Metric::Tau, &taus, &iterations, &converged));
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Benchmark AUC versus alpha on a loaded dataset.
pub fn run_dataset_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let Workload::Dataset(manifest) = &spec.workload else {
        return Err(SweepError::WrongWorkload("dataset", "dataset"));
    };
    if manifest.benchmark_path.is_none() {
        return Err(IngestError::NoBenchmarkPath(manifest.name.clone()).into());
    }
    spec.validate()?;
    let dataset = load_ratings(manifest)?;
    let bench = load_benchmarks(manifest, &dataset)?.set;
    let table = &dataset.table;

    let mut rows = Vec::with_capacity(2 * spec.alphas.len());
    for (a, &alpha) in spec.alphas.iter().enumerate() {
        let state = run_to_fixed_point(table, &spec.engine_at(alpha))?;
        let scores: Vec<(f64, f64)> = spec.install(|| {
            (0..spec.realizations)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(tie_break_seed(spec.base_seed, a, r));
                    let ranking = rank_objects(&state.q, &mut rng);
                    Ok((auc(&ranking, &bench)?, auc_pairwise(&ranking, &bench)?))
                })
                .collect::<Result<Vec<_>, MetricError>>()
        })??;
        let iterations = [state.iterations];
        let converged = [state.converged];
        let eq9: Vec<f64> = scores.iter().map(|s| s.0).collect();
        let pairwise: Vec<f64> = scores.iter().map(|s| s.1).collect();
        rows.push(make_row(
            alpha,
            Metric::AucEq9,
            &eq9,
            &iterations,
            &converged,
        ));
        rows.push(make_row(
            alpha,
            Metric::AucPairwise,
            &pairwise,
            &iterations,
            &converged,
        ));
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Dispatches on the workload kind.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    match spec.workload {
        Workload::Synthetic(_) => run_synthetic_sweep(spec),
        Workload::Dataset(_) => run_dataset_sweep(spec),
    }
}

/// Orders rows by metric, then alpha.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| a.metric.cmp(&b.metric).then(a.alpha.total_cmp(&b.alpha)));
}

/// Renders rows as CSV, sorted by `(metric, alpha)`.
pub fn format_report(rows: &[SweepRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.alpha, r.metric, r.mean, r.std, r.n, r.mean_iterations, r.convergence_rate
        ));
    }
    out
}

pub fn write_report(rows: &[SweepRow], path: &Path) -> Result<(), SweepError> {
    fs::write(path, format_report(rows)).map_err(|source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses CSV produced by [`format_report`].
pub fn parse_report(text: &str) -> Result<Vec<SweepRow>, SweepError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == REPORT_HEADER => {}
        _ => {
            return Err(SweepError::Report {
                line: 1,
                reason: format!("expected header `{REPORT_HEADER}`"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |reason: String| SweepError::Report {
                line: i + 1,
                reason,
            };
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 7 {
                return Err(bad(format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            Ok(SweepRow {
                alpha: num(f[0])?,
                metric: f[1].parse().map_err(bad)?,
                mean: num(f[2])?,
                std: num(f[3])?,
                n: f[4].parse().map_err(|e| bad(format!("{:?}: {e}", f[4])))?,
                mean_iterations: num(f[5])?,
                convergence_rate: num(f[6])?,
            })
        })
        .collect()
}
