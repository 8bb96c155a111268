//! Anytime best-bound branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gf2::{BitVec, ParitySystem};
use crate::model::FactorGraph;

use super::ilp::IlpModel;
use super::lp::{solve_lp_bounded, LpOptions, LpResult, LpStatus};
use super::{Budget, MapResult, MapStatus, BOUND_TOLERANCE};

/// Open nodes whose bound is within this of the incumbent are pruned.
const PRUNE_TOL: f64 = 1e-7;
const INTEGRALITY_TOL: f64 = 1e-6;

/// LP values are inflated by this relative margin before being used as
/// bounds, so floating-point error cannot push them below an incumbent.
const LP_SLACK: f64 = 1e-9;

fn safe_bound(lp_value: f64) -> f64 {
    lp_value + LP_SLACK * (1.0 + lp_value.abs())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BnbOptions {
    pub budget: Budget,
    pub lp: LpOptions,
    /// Stop after the root relaxation (upper bound plus a rounded incumbent).
    pub root_only: bool,
}

/// A change in either global bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEvent {
    pub elapsed: Duration,
    pub nodes: u64,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Clone, Debug)]
pub struct BnbOutcome {
    pub result: MapResult,
    pub events: Vec<BoundEvent>,
    pub root_lp: Option<LpResult>,
}

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // highest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    ilp: &'a IlpModel,
    model: &'a FactorGraph,
    system: &'a ParitySystem,
    start: Instant,
    nodes: u64,
    lower: f64,
    upper: f64,
    incumbent: Option<BitVec>,
    events: Vec<BoundEvent>,
}

impl Search<'_> {
    fn log_event(&mut self) {
        self.events.push(BoundEvent {
            elapsed: self.start.elapsed(),
            nodes: self.nodes,
            upper: self.upper,
            lower: self.lower,
        });
    }

    /// Lowers the global upper bound (never raises it); logs on change.
    fn set_upper(&mut self, candidate: f64) {
        let candidate = candidate.max(self.lower);
        if candidate < self.upper {
            self.upper = candidate;
            self.log_event();
        }
    }

    /// Rounds `μ` at 0.5, projects onto the parity solutions, and keeps the
    /// result if it beats the incumbent on the true model.
    fn try_incumbent(&mut self, point: &[f64]) -> Result<()> {
        let n = self.model.n();
        let mut x = BitVec::zeros(n);
        for (i, &v) in self.ilp.mu_index.iter().enumerate() {
            x.set(i, point[v] > 0.5);
        }
        let x = self.system.project(&x)?;
        debug_assert!(self.system.is_satisfied_by(&x));
        let lw = self.model.log_weight(&x)?;
        if lw > self.lower {
            self.lower = lw;
            self.incumbent = Some(x);
            if self.upper < self.lower {
                self.upper = self.lower;
            }
            self.log_event();
        }
        Ok(())
    }

    fn finish(self, status: MapStatus, root_lp: Option<LpResult>) -> BnbOutcome {
        BnbOutcome {
            result: MapResult {
                lower: self.lower,
                upper: self.upper,
                incumbent: self.incumbent,
                status,
                nodes: self.nodes,
            },
            events: self.events,
            root_lp,
        }
    }
}

/// Most fractional `μᵢ`, lowest index on ties; `None` when all are integral.
fn branching_variable(ilp: &IlpModel, point: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &v in &ilp.mu_index {
        let frac = (point[v] - point[v].round()).abs();
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, f)| frac > f + 1e-12) {
            best = Some((v, frac));
        }
    }
    best.map(|(v, _)| v)
}

/// Branch-and-bound on the `μ` indicators of `ilp`, which must have been
/// built from `model` and `system`.
///
/// Incumbents are always re-evaluated on the model and checked against the
/// parity system itself. The returned upper bound is the largest LP bound
/// among open nodes; both bounds move monotonically and every change is
/// recorded in the event log.
pub fn branch_and_bound(
    ilp: &IlpModel,
    model: &FactorGraph,
    system: &ParitySystem,
    opts: &BnbOptions,
) -> Result<BnbOutcome> {
    let n = model.n();
    if ilp.mu_index.len() != n || system.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if ilp.mu_index.len() != n { ilp.mu_index.len() } else { system.n() },
        });
    }
    let start = Instant::now();
    let deadline = opts.budget.deadline(start);
    let lp_opts = LpOptions {
        deadline: match (deadline, opts.lp.deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        },
        ..opts.lp.clone()
    };
    let mut search = Search {
        ilp,
        model,
        system,
        start,
        nodes: 0,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        incumbent: None,
        events: Vec::new(),
    };
    if !system.is_consistent() {
        search.upper = f64::NEG_INFINITY;
        search.log_event();
        return Ok(search.finish(MapStatus::Infeasible, None));
    }
    let out_of_budget = |s: &Search| {
        opts.budget.nodes.is_some_and(|cap| s.nodes >= cap) || deadline.is_some_and(|d| Instant::now() >= d)
    };

    // root
    search.nodes += 1;
    let root = solve_lp_bounded(ilp, &[], &lp_opts)?;
    match root.status {
        LpStatus::Interrupted => return Ok(search.finish(MapStatus::BudgetExhausted, Some(root))),
        LpStatus::Infeasible => {
            search.upper = f64::NEG_INFINITY;
            search.log_event();
            return Ok(search.finish(MapStatus::Infeasible, Some(root)));
        }
        LpStatus::Unbounded => return Err(Error::Numerical("LP relaxation reported unbounded".into())),
        LpStatus::Optimal => {}
    }
    search.set_upper(safe_bound(root.value));
    search.try_incumbent(&root.point)?;
    let root_branch = branching_variable(ilp, &root.point);
    if root_branch.is_none() || search.upper - search.lower <= PRUNE_TOL {
        search.set_upper(search.lower);
        return Ok(search.finish(MapStatus::Optimal, Some(root)));
    }
    if opts.root_only {
        let status = if search.upper - search.lower <= BOUND_TOLERANCE {
            MapStatus::Optimal
        } else {
            MapStatus::UpperOnly
        };
        return Ok(search.finish(status, Some(root)));
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push_children = |heap: &mut BinaryHeap<Node>, fixings: &[(usize, f64)], var: usize, bound: f64| {
        for value in [0.0, 1.0] {
            let mut f = fixings.to_vec();
            f.push((var, value));
            heap.push(Node { bound, seq, fixings: f });
            seq += 1;
        }
    };
    push_children(&mut heap, &[], root_branch.unwrap(), search.upper);

    loop {
        let best_open = heap.peek().map_or(f64::NEG_INFINITY, |node| node.bound);
        if best_open <= search.lower + PRUNE_TOL {
            // closed: every open node is dominated by the incumbent
            search.set_upper(search.lower);
            let status = if search.incumbent.is_some() {
                MapStatus::Optimal
            } else {
                MapStatus::Infeasible
            };
            return Ok(search.finish(status, Some(root)));
        }
        search.set_upper(best_open);
        if out_of_budget(&search) {
            return Ok(search.finish(MapStatus::BudgetExhausted, Some(root)));
        }
        let node = heap.pop().expect("nonempty heap");
        search.nodes += 1;
        let overrides: Vec<(usize, f64, f64)> = node.fixings.iter().map(|&(v, x)| (v, x, x)).collect();
        let lp = solve_lp_bounded(ilp, &overrides, &lp_opts)?;
        match lp.status {
            LpStatus::Interrupted => {
                heap.push(node);
                let best_open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
                search.set_upper(best_open);
                return Ok(search.finish(MapStatus::BudgetExhausted, Some(root)));
            }
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(Error::Numerical("LP relaxation reported unbounded".into())),
            LpStatus::Optimal => {}
        }
        let bound = safe_bound(lp.value).min(node.bound);
        search.try_incumbent(&lp.point)?;
        if bound <= search.lower + PRUNE_TOL {
            continue;
        }
        if let Some(var) = branching_variable(ilp, &lp.point) {
            push_children(&mut heap, &node.fixings, var, bound);
        }
    }
}
