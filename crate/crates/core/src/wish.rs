//! The WISH estimator: MAP queries under `i` random parity constraints for
//! every level `i = 0..=n`, medians over `T` trials, and a weighted sum of
//! the medians.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::{ParitySystem, DEFAULT_ENUMERATION_CAP};
use crate::hashing::{HashFamily, HashFamilySpec, SeededRng};
use crate::model::{log_sum_exp, FactorGraph};
use crate::solvers::{
    branch_and_bound, build_ilp, message_passing_decode, solve_lp, BnbOptions, Budget, BruteSolver, EncodingPolicy,
    LpOptions, LpStatus, MapResult, MapStatus, MessagePassingOptions, SolverKind,
};

/// The concentration constant used by default (the `c = 2` case of the
/// median lemma). The constant quoted for the general guarantee is far
/// smaller and implies a much larger `T`.
pub const DEFAULT_ALPHA: f64 = 0.125;

/// The constant for which the 16-approximation is proven.
pub const PROVEN_ALPHA: f64 = 0.0042;

/// Which per-query value feeds the medians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Proven optima; every query must close.
    #[default]
    Exact,
    /// Best feasible values.
    LowerBound,
    /// Relaxation or branch-and-bound upper bounds.
    UpperBound,
    /// Best feasible values under short (sparse) parity rows.
    ShortXor,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::LowerBound => "lower",
            Mode::UpperBound => "upper",
            Mode::ShortXor => "shortxor",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => Mode::Exact,
            "lower" => Mode::LowerBound,
            "upper" => Mode::UpperBound,
            "shortxor" => Mode::ShortXor,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown mode {other:?} (expected exact, lower, upper or shortxor)"
                )))
            }
        })
    }
}

/// What the assembled estimate is known to satisfy (with probability
/// `1 − δ` under the stated `α`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Guarantee {
    /// Within a factor 16 of `Z`.
    SixteenApprox,
    /// At most `16 Z`.
    LowerOnly,
    /// At least `Z / 16`.
    UpperOnly,
}

impl fmt::Display for Guarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guarantee::SixteenApprox => "sixteen_approx",
            Guarantee::LowerOnly => "lower_only",
            Guarantee::UpperOnly => "upper_only",
        })
    }
}

impl FromStr for Guarantee {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sixteen_approx" => Guarantee::SixteenApprox,
            "lower_only" => Guarantee::LowerOnly,
            "upper_only" => Guarantee::UpperOnly,
            other => return Err(Error::InvalidParameter(format!("unknown guarantee {other:?}"))),
        })
    }
}

/// Transformation applied to each sampled system before solving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Preprocess {
    None,
    #[default]
    Rref,
    /// Row reduction followed by greedy sparsification of the given depth.
    RrefGreedy(usize),
}

impl Preprocess {
    pub fn apply(&self, system: &ParitySystem) -> Result<ParitySystem> {
        Ok(match self {
            Preprocess::None => system.clone(),
            Preprocess::Rref => system.rref(),
            Preprocess::RrefGreedy(depth) => system.rref().greedy_sparsify(*depth)?,
        })
    }
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preprocess::None => f.write_str("none"),
            Preprocess::Rref => f.write_str("rref"),
            Preprocess::RrefGreedy(4) => f.write_str("rref+greedy"),
            Preprocess::RrefGreedy(k) => write!(f, "rref+greedy:{k}"),
        }
    }
}

impl FromStr for Preprocess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Preprocess::None),
            "rref" => Ok(Preprocess::Rref),
            "rref+greedy" => Ok(Preprocess::RrefGreedy(4)),
            other => match other.strip_prefix("rref+greedy:").map(str::parse) {
                Some(Ok(k)) if k >= 2 => Ok(Preprocess::RrefGreedy(k)),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown preprocessor {other:?} (expected none, rref, rref+greedy or rref+greedy:<k>)"
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WishConfig {
    pub delta: f64,
    pub alpha: f64,
    /// Explicit repetition count; computed from `delta`, `alpha`, `n` if absent.
    pub t_override: Option<usize>,
    pub family: HashFamily,
    pub mode: Mode,
    pub solver: SolverKind,
    pub policy: EncodingPolicy,
    pub preprocess: Preprocess,
    pub budget: Budget,
    pub lp: LpOptions,
    pub mp: MessagePassingOptions,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for WishConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            alpha: DEFAULT_ALPHA,
            t_override: None,
            family: HashFamily::Toeplitz,
            mode: Mode::Exact,
            solver: SolverKind::BranchAndBound,
            policy: EncodingPolicy::Auto,
            preprocess: Preprocess::Rref,
            budget: Budget::unlimited(),
            lp: LpOptions::default(),
            mp: MessagePassingOptions::default(),
            seed: 0,
            workers: 0,
        }
    }
}

impl WishConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.t_override == Some(0) {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        let sparse = matches!(self.family, HashFamily::Sparse { .. });
        match self.mode {
            Mode::ShortXor if !sparse => Err(Error::InvalidParameter(
                "shortxor mode needs the sparse:<k> family".into(),
            )),
            Mode::Exact | Mode::UpperBound if !self.family.is_pairwise_independent() => Err(Error::InvalidParameter(
                format!("{} mode needs a pairwise-independent family (dense or toeplitz)", self.mode),
            )),
            _ => Ok(()),
        }
    }

    /// The repetition count used on a model with `n` variables.
    pub fn repetitions(&self, n: usize) -> Result<usize> {
        match self.t_override {
            Some(t) => Ok(t),
            None => compute_t(self.delta, self.alpha, n),
        }
    }

    /// A short description of the `α` regime in force.
    pub fn alpha_regime(&self) -> String {
        if self.alpha <= PROVEN_ALPHA {
            format!("alpha = {} (within the proven constant {PROVEN_ALPHA})", self.alpha)
        } else {
            format!(
                "alpha = {} (desk-scale regime; the 16-approximation is proven only for alpha <= {PROVEN_ALPHA})",
                self.alpha
            )
        }
    }
}

/// `T = ⌈ln(1/δ)/α · ln n⌉`.
pub fn compute_t(delta: f64, alpha: f64, n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("T is undefined for n = {n} (needs n >= 2)")));
    }
    if !(delta > 0.0 && delta < 1.0) || alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidParameter("need 0 < delta < 1 and alpha > 0".into()));
    }
    Ok(((1.0 / delta).ln() / alpha * (n as f64).ln()).ceil() as usize)
}

/// Median of log-weights; for even counts the lower of the two middle values.
pub fn median_aggregate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("median of an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("median of a list containing NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[values.len().div_ceil(2) - 1])
}

/// `log(M₀ + Σᵢ Mᵢ₊₁ 2ⁱ)` from log-domain medians `M₀..Mₙ`.
pub fn assemble_estimate(medians: &[f64]) -> f64 {
    let Some((&m0, rest)) = medians.split_first() else {
        return f64::NEG_INFINITY;
    };
    let ln2 = std::f64::consts::LN_2;
    let mut terms = Vec::with_capacity(medians.len());
    terms.push(m0);
    terms.extend(rest.iter().enumerate().map(|(i, &m)| m + i as f64 * ln2));
    log_sum_exp(&terms)
}

/// One answered query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub level: usize,
    /// 1-based trial index.
    pub trial: usize,
    /// Master seed the system was drawn under.
    pub seed: u64,
    pub result: MapResult,
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WishEstimate {
    pub n: usize,
    pub t: usize,
    pub mode: Mode,
    pub medians: Vec<f64>,
    pub log_estimate: f64,
    pub guarantee: Guarantee,
    pub records: Vec<QueryRecord>,
}

/// The log-weight a query contributes in `mode`.
pub fn query_value(record: &QueryRecord, mode: Mode) -> Result<f64> {
    let r = &record.result;
    if r.status == MapStatus::Infeasible {
        return Ok(f64::NEG_INFINITY);
    }
    match mode {
        Mode::Exact => {
            if r.status == MapStatus::Optimal {
                Ok(r.lower)
            } else {
                Err(Error::NotClosed {
                    level: record.level,
                    trial: record.trial,
                    status: r.status.to_string(),
                })
            }
        }
        Mode::LowerBound | Mode::ShortXor => Ok(r.lower),
        Mode::UpperBound => Ok(r.upper),
    }
}

/// Medians and estimate for `mode` from stored records on `n` variables.
pub fn assemble_for_mode(records: &[QueryRecord], n: usize, mode: Mode) -> Result<(Vec<f64>, f64)> {
    let mut per_level: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 1];
    let mut sorted: Vec<&QueryRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.level, r.trial));
    for r in sorted {
        if r.level > n {
            return Err(Error::InvalidParameter(format!("record level {} exceeds n = {n}", r.level)));
        }
        per_level[r.level].push((r.trial, query_value(r, mode)?));
    }
    let medians = per_level
        .iter()
        .enumerate()
        .map(|(i, vals)| {
            if vals.is_empty() {
                return Err(Error::InvalidParameter(format!("no records for level {i}")));
            }
            median_aggregate(&vals.iter().map(|v| v.1).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = assemble_estimate(&medians);
    Ok((medians, estimate))
}

fn guarantee_for(mode: Mode) -> Guarantee {
    match mode {
        Mode::Exact => Guarantee::SixteenApprox,
        Mode::LowerBound | Mode::ShortXor => Guarantee::LowerOnly,
        Mode::UpperBound => Guarantee::UpperOnly,
    }
}

/// The system for query `(level, trial)` under `master_seed`, before
/// preprocessing.
pub fn sample_query_system(family: HashFamily, n: usize, level: usize, trial: usize, master_seed: u64) -> Result<ParitySystem> {
    let spec = HashFamilySpec::new(family, n, level)?;
    Ok(spec.sample(&mut SeededRng::new(master_seed, level, trial)))
}

/// Runs every `(level, trial)` query and assembles the estimate.
///
/// Results depend only on the model and configuration, never on how queries
/// are scheduled, as long as budgets are node counts rather than wall clock.
pub fn wish_run(model: &FactorGraph, config: &WishConfig) -> Result<WishEstimate> {
    config.validate()?;
    let n = model.n();
    let t = config.repetitions(n)?;
    let brute = match config.solver {
        SolverKind::Brute => Some(BruteSolver::new(model)?),
        _ => None,
    };
    let cap = match config.solver {
        SolverKind::BranchAndBound | SolverKind::RootLp => unconstrained_bound(model, &config.lp)?,
        _ => None,
    };
    let queries: Vec<(usize, usize)> = (0..=n).flat_map(|i| (1..=t).map(move |tr| (i, tr))).collect();
    let run_one = |&(level, trial): &(usize, usize)| -> Result<QueryRecord> {
        let start = Instant::now();
        let raw = sample_query_system(config.family, n, level, trial, config.seed)?;
        let system = config.preprocess.apply(&raw)?;
        let mut result = solve_one(model, &system, config, brute.as_ref())?;
        if let Some(cap) = cap {
            if result.upper > cap {
                result.upper = cap.max(result.lower);
            }
        }
        Ok(QueryRecord {
            level,
            trial,
            seed: config.seed,
            result,
            runtime: start.elapsed(),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    let records: Vec<QueryRecord> = pool.install(|| queries.par_iter().map(run_one).collect::<Result<_>>())?;
    let (medians, log_estimate) = assemble_for_mode(&records, n, config.mode)?;
    Ok(WishEstimate {
        n,
        t,
        mode: config.mode,
        medians,
        log_estimate,
        guarantee: guarantee_for(config.mode),
        records,
    })
}

fn solve_one(model: &FactorGraph, system: &ParitySystem, config: &WishConfig, brute: Option<&BruteSolver>) -> Result<MapResult> {
    match config.solver {
        SolverKind::Brute => brute.expect("brute solver prepared").solve(system),
        SolverKind::MessagePassing => message_passing_decode(model, system, &config.mp),
        SolverKind::BranchAndBound | SolverKind::RootLp => {
            if !system.is_consistent() {
                return Ok(MapResult::infeasible(0));
            }
            let ilp = build_ilp(model, system, config.policy)?;
            let opts = BnbOptions {
                budget: config.budget,
                lp: config.lp.clone(),
                root_only: config.solver == SolverKind::RootLp,
            };
            Ok(branch_and_bound(&ilp, model, system, &opts)?.result)
        }
    }
}

/// Root LP bound of the model with no parity rows. Any parity-constrained
/// optimum is at most this, so it caps upper bounds of interrupted queries.
fn unconstrained_bound(model: &FactorGraph, lp: &LpOptions) -> Result<Option<f64>> {
    let ilp = build_ilp(model, &ParitySystem::empty(model.n()), EncodingPolicy::Auto)?;
    let r = solve_lp(&ilp, &LpOptions { deadline: None, ..lp.clone() })?;
    Ok((r.status == LpStatus::Optimal).then(|| r.value + 1e-9 * (1.0 + r.value.abs())))
}

/// `log bᵢ`: the log-weight of the `2ⁱ`-th heaviest configuration
/// (1-indexed), so `b₀` is the maximum weight.
pub fn level_quantile_oracle(model: &FactorGraph, i: usize) -> Result<f64> {
    let n = model.n();
    if n > DEFAULT_ENUMERATION_CAP {
        return Err(Error::TooLarge {
            what: "weight quantile oracle",
            size: n,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    if i > n {
        return Err(Error::InvalidParameter(format!("quantile level {i} exceeds n = {n}")));
    }
    let mut weights = model.log_weight_table()?;
    weights.sort_by(|a, b| b.total_cmp(a));
    Ok(weights[(1usize << i) - 1])
}

/// All quantiles `log b₀ .. log bₙ` from a single sort.
pub fn level_quantiles(model: &FactorGraph) -> Result<Vec<f64>> {
    let n = model.n();
    if n > DEFAULT_ENUMERATION_CAP {
        return Err(Error::TooLarge {
            what: "weight quantile oracle",
            size: n,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let mut weights = model.log_weight_table()?;
    weights.sort_by(|a, b| b.total_cmp(a));
    Ok((0..=n).map(|i| weights[(1usize << i) - 1]).collect())
}
