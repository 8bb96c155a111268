//! Parity-constrained MAP solvers.

mod bnb;
mod brute;
mod ilp;
mod lp;
mod lp_sparse;
mod message_passing;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gf2::{BitVec, ParitySystem};
use crate::model::FactorGraph;

pub use bnb::{branch_and_bound, BnbOptions, BnbOutcome, BoundEvent};
pub use brute::BruteSolver;
pub use ilp::{
    build_ilp, build_objective_and_marginal_polytope, encode_feldman, encode_jeroslow,
    encode_yannakakis, Encoding, EncodingPolicy, IlpConstraint, IlpModel, IlpVar, Sense,
    EXPONENTIAL_ENCODING_CAP,
};
pub use lp::{
    solve_lp, solve_lp_bounded, verify_farkas, LpEngine, LpOptions, LpResult, LpStatus, DENSE_CELL_CAP,
    DENSE_CELL_LIMIT,
};
pub use message_passing::{
    message_passing_decode, parity_message_update, MessagePassingOptions, Semiring,
};

/// Gap below which lower and upper bounds are considered matched.
pub const BOUND_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapStatus {
    /// Bounds matched; `lower` is the optimum.
    Optimal,
    /// A feasible incumbent without a matching upper bound.
    FeasibleLower,
    /// A valid upper bound without any incumbent.
    UpperOnly,
    /// The parity system has no solutions.
    Infeasible,
    /// The budget ran out before the bounds met.
    BudgetExhausted,
}

impl MapStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapStatus::Optimal => "optimal",
            MapStatus::FeasibleLower => "feasible_lower",
            MapStatus::UpperOnly => "upper_only",
            MapStatus::Infeasible => "infeasible",
            MapStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for MapStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => MapStatus::Optimal,
            "feasible_lower" => MapStatus::FeasibleLower,
            "upper_only" => MapStatus::UpperOnly,
            "infeasible" => MapStatus::Infeasible,
            "budget_exhausted" => MapStatus::BudgetExhausted,
            other => return Err(Error::InvalidParameter(format!("unknown status {other:?}"))),
        })
    }
}

/// Outcome of one parity-constrained MAP query, as log-weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MapResult {
    pub lower: f64,
    pub upper: f64,
    pub incumbent: Option<BitVec>,
    pub status: MapStatus,
    /// Branch-and-bound nodes or message-passing iterations spent.
    pub nodes: u64,
}

impl MapResult {
    pub fn optimal(value: f64, incumbent: BitVec, nodes: u64) -> Self {
        Self {
            lower: value,
            upper: value,
            incumbent: Some(incumbent),
            status: MapStatus::Optimal,
            nodes,
        }
    }

    /// Empty solution set: weight 0 on both sides.
    pub fn infeasible(nodes: u64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::NEG_INFINITY,
            incumbent: None,
            status: MapStatus::Infeasible,
            nodes,
        }
    }

    pub fn gap(&self) -> f64 {
        if self.lower == self.upper {
            0.0
        } else {
            self.upper - self.lower
        }
    }
}

/// Per-query resource limits. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn seconds(secs: f64) -> Self {
        Self {
            time: Some(Duration::from_secs_f64(secs)),
            nodes: None,
        }
    }

    pub fn nodes(nodes: u64) -> Self {
        Self {
            time: None,
            nodes: Some(nodes),
        }
    }

    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time.map(|t| start + t)
    }
}

/// Which MAP solver answers a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Anytime branch-and-bound over the ILP.
    BranchAndBound,
    /// Only the root LP relaxation; yields an upper bound in polynomial time.
    RootLp,
    /// Max-product message passing with parity factors.
    MessagePassing,
    /// Exhaustive search over the affine solution space.
    Brute,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::BranchAndBound => "bnb",
            SolverKind::RootLp => "lp",
            SolverKind::MessagePassing => "mp",
            SolverKind::Brute => "brute",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bnb" => SolverKind::BranchAndBound,
            "lp" => SolverKind::RootLp,
            "mp" => SolverKind::MessagePassing,
            "brute" => SolverKind::Brute,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown solver {other:?} (expected bnb, lp, mp or brute)"
                )))
            }
        })
    }
}

/// Everything a single query needs besides the model and the system.
#[derive(Clone, Debug)]
pub struct QueryOptions {
    pub solver: SolverKind,
    pub policy: EncodingPolicy,
    pub budget: Budget,
    pub lp: LpOptions,
    pub mp: MessagePassingOptions,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::BranchAndBound,
            policy: EncodingPolicy::default(),
            budget: Budget::unlimited(),
            lp: LpOptions::default(),
            mp: MessagePassingOptions::default(),
        }
    }
}

/// Answers one query with the configured solver. The brute solver is built on
/// the fly here; callers issuing many queries should keep a [`BruteSolver`].
pub fn solve_query(model: &FactorGraph, system: &ParitySystem, opts: &QueryOptions) -> Result<MapResult> {
    match opts.solver {
        SolverKind::Brute => BruteSolver::new(model)?.solve(system),
        SolverKind::MessagePassing => message_passing_decode(model, system, &opts.mp),
        SolverKind::BranchAndBound | SolverKind::RootLp => {
            let ilp = build_ilp(model, system, opts.policy)?;
            let bnb = BnbOptions {
                budget: opts.budget,
                lp: opts.lp.clone(),
                root_only: opts.solver == SolverKind::RootLp,
            };
            Ok(branch_and_bound(&ilp, model, system, &bnb)?.result)
        }
    }
}
