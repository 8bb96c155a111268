//! Exact oracles: log-partition by brute force or frontier elimination, and
//! parity-constrained MAP by enumeration.

use crate::error::{Error, Result};
use crate::gf2::{BitVec, ParitySystem};
use crate::solvers::MapResult;

use super::FactorGraph;

/// Largest `n` handled by exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 25;

/// Largest elimination frontier (table of `2^cap` entries).
pub const FRONTIER_CAP: usize = 20;

/// `ln(eᵃ + eᵇ)` without overflow; `−∞` is the additive identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ eᵛ`; the empty sum is `−∞`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    shift: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if v <= self.shift {
            self.sum += (v - self.shift).exp();
        } else {
            self.sum = self.sum * (self.shift - v).exp() + 1.0;
            self.shift = v;
        }
    }

    fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.shift + self.sum.ln()
        }
    }
}

/// `log Z` by summing all `2ⁿ` weights.
pub fn brute_force_log_partition(model: &FactorGraph) -> Result<f64> {
    let n = model.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            what: "brute-force partition function",
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut acc = LogSum::new();
    for code in 0..1u64 << n {
        acc.push(model.log_weight_code(code));
    }
    Ok(acc.value())
}

/// Largest frontier reached when eliminating variables in index order.
fn max_frontier(model: &FactorGraph) -> usize {
    let last = last_neighbor(model);
    let mut live = 0usize;
    let mut worst = 0usize;
    let mut retire = vec![0usize; model.n() + 1];
    for v in 0..model.n() {
        live += 1;
        worst = worst.max(live);
        retire[last[v].max(v)] += 1;
        live -= retire[v];
    }
    worst
}

/// For each variable, the highest-indexed neighbor (or itself).
fn last_neighbor(model: &FactorGraph) -> Vec<usize> {
    let mut last: Vec<usize> = (0..model.n()).collect();
    for e in model.edges() {
        last[e.i] = last[e.i].max(e.j);
        last[e.j] = last[e.j].max(e.i);
    }
    last
}

/// `log Z` by sweeping variables in index order while keeping a table over
/// the frontier of processed variables that still have unprocessed
/// neighbors. On an `M × M` grid the frontier holds one row plus one cell.
pub fn eliminate_log_partition(model: &FactorGraph) -> Result<f64> {
    let width = max_frontier(model);
    if width > FRONTIER_CAP {
        return Err(Error::TooLarge {
            what: "elimination frontier",
            size: width,
            cap: FRONTIER_CAP,
        });
    }
    let last = last_neighbor(model);
    let incident = model.incident_edges();
    let mut frontier: Vec<usize> = Vec::new();
    let mut table = vec![0.0f64];
    for v in 0..model.n() {
        // extend by v: bit position frontier.len()
        let pos = frontier.len();
        let earlier: Vec<(usize, [[f64; 2]; 2])> = incident[v]
            .iter()
            .map(|&k| &model.edges()[k])
            .filter_map(|e| {
                let (u, t) = if e.i == v {
                    (e.j, [[e.table[0][0], e.table[1][0]], [e.table[0][1], e.table[1][1]]])
                } else {
                    (e.i, e.table)
                };
                // t[x_u][x_v]
                (u < v).then(|| (frontier.iter().position(|&f| f == u).expect("neighbor on frontier"), t))
            })
            .collect();
        let theta = model.node_logpot()[v];
        let mut next = vec![0.0; table.len() * 2];
        for (idx, &val) in table.iter().enumerate() {
            for xv in 0..2usize {
                let mut s = val + theta[xv];
                for &(p, t) in &earlier {
                    s += t[idx >> p & 1][xv];
                }
                next[idx | xv << pos] = s;
            }
        }
        table = next;
        frontier.push(v);
        // sum out every variable whose neighbors are now all processed
        let mut p = 0;
        while p < frontier.len() {
            if last[frontier[p]] <= v {
                table = sum_out(&table, p);
                frontier.remove(p);
            } else {
                p += 1;
            }
        }
    }
    debug_assert_eq!(table.len(), 1);
    Ok(table[0])
}

/// Marginalizes bit `p` out of a log table, compacting the remaining bits.
fn sum_out(table: &[f64], p: usize) -> Vec<f64> {
    let low = (1usize << p) - 1;
    (0..table.len() / 2)
        .map(|idx| {
            let base = (idx & low) | (idx & !low) << 1;
            log_add(table[base], table[base | 1 << p])
        })
        .collect()
}

/// `log Z`, by elimination when the frontier fits and by enumeration otherwise.
pub fn exact_log_partition(model: &FactorGraph) -> Result<f64> {
    if max_frontier(model) <= FRONTIER_CAP {
        return eliminate_log_partition(model);
    }
    if model.n() <= BRUTE_FORCE_CAP {
        return brute_force_log_partition(model);
    }
    Err(Error::TooLarge {
        what: "exact partition function",
        size: model.n(),
        cap: BRUTE_FORCE_CAP,
    })
}

/// Maximum of `log w(x)` over the solution set of `system`, by enumerating
/// the cube and filtering. Ties resolve to the smallest configuration code.
pub fn exact_map_with_parity(model: &FactorGraph, system: &ParitySystem) -> Result<MapResult> {
    let n = model.n();
    if system.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: system.n(),
        });
    }
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            what: "brute-force MAP",
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let rows: Vec<(u64, u32)> = system
        .rows()
        .iter()
        .map(|r| (r.coeffs.to_u64(), r.parity as u32))
        .collect();
    let mut best: Option<(f64, u64)> = None;
    for code in 0..1u64 << n {
        if rows.iter().any(|&(a, b)| (a & code).count_ones() & 1 != b) {
            continue;
        }
        let lw = model.log_weight_code(code);
        if best.is_none_or(|(v, _)| lw > v) {
            best = Some((lw, code));
        }
    }
    Ok(match best {
        Some((value, code)) => MapResult::optimal(value, BitVec::from_u64(code, n), 0),
        None => MapResult::infeasible(0),
    })
}
