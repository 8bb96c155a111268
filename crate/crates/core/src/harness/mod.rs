//! Experiment configuration, batch execution, and persistence.

mod config;
mod records;

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::gf2::ParitySystem;
use crate::hashing::HashFamily;
use crate::model::{exact_log_partition, FactorGraph};
use crate::solvers::{branch_and_bound, build_ilp, BnbOptions, Budget, EncodingPolicy, LpOptions};
use crate::wish::{median_aggregate, sample_query_system, wish_run, Preprocess};

pub use config::{ExperimentConfig, ModelSource};
pub use records::{
    parse_summary, read_rows, read_rows_file, summary_text, write_rows, write_rows_file, QueryRow, RunRecord,
    SeedSummary, CSV_HEADER,
};

pub const ROWS_FILE: &str = "queries.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Runs the experiment in memory: one WISH run per master seed, plus the
/// exact log-partition when the oracle can handle the model.
pub fn collect_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let model = config.model.build()?;
    config.wish.validate()?;
    let mut warnings = Vec::new();
    if config.repetitions == 0 {
        warnings.push("repetitions = 0: nothing was run".to_string());
    }
    let exact_log_z = if config.repetitions == 0 {
        None
    } else {
        match exact_log_partition(&model) {
            Ok(z) => Some(z),
            Err(Error::TooLarge { .. }) => {
                warnings.push("exact: unavailable (model exceeds the exact oracle limits)".to_string());
                None
            }
            Err(e) => return Err(e),
        }
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for rep in 0..config.repetitions {
        let seed = config.wish.seed.wrapping_add(rep as u64);
        let run_start = Instant::now();
        let est = wish_run(&model, &crate::wish::WishConfig { seed, ..config.wish.clone() })?;
        rows.extend(est.records.iter().map(QueryRow::from));
        summaries.push(SeedSummary {
            seed,
            n: est.n,
            t: est.t,
            mode: est.mode,
            guarantee: est.guarantee,
            medians: est.medians,
            log_estimate: est.log_estimate,
            wall_ms: run_start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(RunRecord {
        config_hash: config.hash(),
        config_text: config.to_kv(),
        rows,
        summaries,
        exact_log_z,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings,
    })
}

/// [`collect_experiment`], then writes `queries.csv` and `summary.txt` into
/// the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    let record = collect_experiment(config)?;
    write_record(&record, &config.out_dir)?;
    Ok(record)
}

pub fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows_file(&dir.join(ROWS_FILE), &record.config_text, &record.rows)?;
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, summary_text(record)).map_err(|e| Error::io(&path, e))
}

/// One bound change during branch-and-bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub elapsed_ms: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Runs branch-and-bound on one query and returns every bound change.
pub fn emit_anytime_trace(model: &FactorGraph, system: &ParitySystem, budget: Budget, lp: &LpOptions) -> Result<Vec<TracePoint>> {
    let ilp = build_ilp(model, system, EncodingPolicy::Auto)?;
    let opts = BnbOptions {
        budget,
        lp: lp.clone(),
        root_only: false,
    };
    let outcome = branch_and_bound(&ilp, model, system, &opts)?;
    Ok(outcome
        .events
        .iter()
        .map(|e| TracePoint {
            elapsed_ms: e.elapsed.as_secs_f64() * 1e3,
            upper: e.upper,
            lower: e.lower,
        })
        .collect())
}

/// Writes the two-column `elapsed_ms upper` plot file.
pub fn write_trace<W: Write>(mut out: W, points: &[TracePoint]) -> Result<()> {
    let mut text = String::from("# elapsed_ms upper\n");
    for p in points {
        let _ = writeln!(text, "{} {}", p.elapsed_ms, p.upper);
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<trace>", e))
}

/// Settings for [`sparsification_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub budget: Budget,
    /// Systems drawn per `m`; every preprocessor sees the same systems.
    pub repetitions: usize,
    pub seed: u64,
    pub greedy_depth: usize,
    pub lp: LpOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            budget: Budget::seconds(60.0),
            repetitions: 3,
            seed: 0,
            greedy_depth: 4,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub preprocess: Preprocess,
    pub trials: usize,
    /// Trials that ended with an incumbent.
    pub feasible: usize,
    pub median_lower: f64,
    pub median_upper: f64,
    pub median_runtime_ms: f64,
}

impl SweepRow {
    pub fn feasible_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.feasible as f64 / self.trials as f64
        }
    }
}

/// Branch-and-bound under `budget` on Toeplitz systems with `m` rows, with no
/// preprocessing, with row reduction, and with row reduction plus greedy
/// sparsification.
pub fn sparsification_sweep(model: &FactorGraph, ms: &[usize], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if opts.repetitions == 0 {
        return Err(Error::InvalidParameter("sweep needs at least one repetition".into()));
    }
    let preprocessors = [Preprocess::None, Preprocess::Rref, Preprocess::RrefGreedy(opts.greedy_depth)];
    let bnb = BnbOptions {
        budget: opts.budget,
        lp: opts.lp.clone(),
        root_only: false,
    };
    let mut table = Vec::new();
    for &m in ms {
        let systems = (0..opts.repetitions)
            .map(|r| sample_query_system(HashFamily::Toeplitz, model.n(), m, r + 1, opts.seed))
            .collect::<Result<Vec<_>>>()?;
        for pre in preprocessors {
            let (mut lowers, mut uppers, mut times) = (Vec::new(), Vec::new(), Vec::new());
            let mut feasible = 0;
            for raw in &systems {
                let system = pre.apply(raw)?;
                let start = Instant::now();
                let ilp = build_ilp(model, &system, EncodingPolicy::Auto)?;
                let result = branch_and_bound(&ilp, model, &system, &bnb)?.result;
                times.push(start.elapsed().as_secs_f64() * 1e3);
                feasible += usize::from(result.incumbent.is_some());
                lowers.push(result.lower);
                uppers.push(result.upper);
            }
            table.push(SweepRow {
                m,
                preprocess: pre,
                trials: systems.len(),
                feasible,
                median_lower: median_aggregate(&lowers)?,
                median_upper: median_aggregate(&uppers)?,
                median_runtime_ms: median_aggregate(&times)?,
            });
        }
    }
    Ok(table)
}

/// Whitespace-separated sweep table with a header comment.
pub fn write_sweep<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    let mut text = String::from("# m preprocess trials feasible feasible_rate median_lower median_upper median_runtime_ms\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{} {} {} {} {} {} {} {}",
            r.m,
            r.preprocess,
            r.trials,
            r.feasible,
            r.feasible_rate(),
            r.median_lower,
            r.median_upper,
            r.median_runtime_ms
        );
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<sweep>", e))
}
