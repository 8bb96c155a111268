//! Sparse LP backend for relaxations too large for a dense tableau.

use std::collections::BTreeMap;
use std::time::Instant;

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolutionStatus, SolveOutcome};

use crate::error::{Error, Result};

use super::ilp::{IlpModel, Sense};
use super::lp::{LpOptions, LpResult, LpStatus};

pub(crate) fn solve(
    ilp: &IlpModel,
    rows: &[usize],
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
) -> Result<LpResult> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let mut obj = vec![0.0; ilp.vars.len()];
    for &(v, c) in &ilp.objective {
        obj[v] += c;
    }
    let vars: Vec<_> = (0..ilp.vars.len())
        .map(|j| problem.add_var(obj[j], (lower[j], upper[j])))
        .collect();
    for &i in rows {
        let c = &ilp.constraints[i];
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, a) in &c.terms {
            *merged.entry(v).or_insert(0.0) += a;
        }
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
            Sense::Ge => ComparisonOp::Ge,
        };
        problem.add_constraint(
            merged.into_iter().filter(|&(_, a)| a != 0.0).map(|(v, a)| (vars[v], a)).collect::<Vec<_>>(),
            op,
            c.rhs,
        );
    }
    if let Some(deadline) = opts.deadline {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Ok(interrupted());
        }
        problem.set_time_limit(left);
    }
    match problem.solve() {
        Ok(SolveOutcome::Solution(sol)) if sol.status() == SolutionStatus::Optimal => {
            let point: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
            Ok(LpResult {
                status: LpStatus::Optimal,
                value: ilp.objective_value(&point),
                point,
                iterations: 0,
                farkas: None,
            })
        }
        Ok(_) => Ok(interrupted()),
        Err(microlp::Error::Infeasible) => Ok(LpResult {
            status: LpStatus::Infeasible,
            value: f64::NEG_INFINITY,
            point: Vec::new(),
            iterations: 0,
            farkas: None,
        }),
        Err(microlp::Error::Unbounded) => Ok(LpResult {
            status: LpStatus::Unbounded,
            value: f64::INFINITY,
            point: Vec::new(),
            iterations: 0,
            farkas: None,
        }),
        Err(e) => Err(Error::Numerical(e.to_string())),
    }
}

fn interrupted() -> LpResult {
    LpResult {
        status: LpStatus::Interrupted,
        value: f64::NAN,
        point: Vec::new(),
        iterations: 0,
        farkas: None,
    }
}
