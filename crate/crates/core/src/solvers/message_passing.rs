//! Loopy message passing on the model augmented with one XOR factor per
//! parity row.

use crate::error::{Error, Result};
use crate::gf2::{BitVec, ParitySystem};
use crate::model::FactorGraph;

use super::{MapResult, MapStatus};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Semiring {
    Sum,
    #[default]
    Max,
}

impl Semiring {
    #[inline]
    fn plus(self, a: f64, b: f64) -> f64 {
        match self {
            Semiring::Sum => a + b,
            Semiring::Max => a.max(b),
        }
    }
}

/// Outgoing messages of an XOR factor `[x₁ ⊕ … ⊕ x_k = parity]`.
///
/// Entry `l` of the result is the message to variable `l`, computed from all
/// other incoming messages by prefix and suffix tables over the running
/// parity, so the whole update is linear in `k`.
pub fn parity_message_update(incoming: &[[f64; 2]], parity: bool, semiring: Semiring) -> Vec<[f64; 2]> {
    let k = incoming.len();
    // prefix[l][p]: combined weight of x₀..x_{l−1} having parity p
    let mut prefix = vec![[1.0, 0.0]; k + 1];
    for l in 0..k {
        let (f, m) = (prefix[l], incoming[l]);
        prefix[l + 1] = [
            semiring.plus(f[0] * m[0], f[1] * m[1]),
            semiring.plus(f[1] * m[0], f[0] * m[1]),
        ];
    }
    let mut suffix = vec![[1.0, 0.0]; k + 1];
    for l in (0..k).rev() {
        let (s, m) = (suffix[l + 1], incoming[l]);
        suffix[l] = [
            semiring.plus(s[0] * m[0], s[1] * m[1]),
            semiring.plus(s[1] * m[0], s[0] * m[1]),
        ];
    }
    let b = parity as usize;
    (0..k)
        .map(|l| {
            let (f, s) = (prefix[l], suffix[l + 1]);
            let out = |x: usize| semiring.plus(f[0] * s[b ^ x], f[1] * s[b ^ 1 ^ x]);
            [out(0), out(1)]
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MessagePassingOptions {
    pub semiring: Semiring,
    pub max_iters: usize,
    /// Weight kept from the previous factor-to-variable message.
    pub damping: f64,
    /// Largest message change at which the schedule is declared converged.
    pub tolerance: f64,
}

impl Default for MessagePassingOptions {
    fn default() -> Self {
        Self {
            semiring: Semiring::Max,
            max_iters: 10_000,
            damping: 0.5,
            tolerance: 1e-8,
        }
    }
}

enum Factor {
    Pair { table: [[f64; 2]; 2] },
    Parity { parity: bool },
}

fn normalize(m: [f64; 2]) -> [f64; 2] {
    let s = m[0] + m[1];
    if s > 0.0 && s.is_finite() {
        [m[0] / s, m[1] / s]
    } else {
        [0.5, 0.5]
    }
}

/// Runs flooding message passing and returns the best parity-feasible
/// rounding of the beliefs seen. If no rounding is feasible, the last one is
/// projected onto the solution set. The result is a lower bound only.
pub fn message_passing_decode(
    model: &FactorGraph,
    system: &ParitySystem,
    opts: &MessagePassingOptions,
) -> Result<MapResult> {
    let n = model.n();
    if system.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: system.n(),
        });
    }
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::InvalidParameter("damping must lie in [0, 1)".into()));
    }
    if !system.is_consistent() {
        return Ok(MapResult::infeasible(0));
    }

    let unary: Vec<[f64; 2]> = model
        .node_logpot()
        .iter()
        .map(|t| {
            let m = t[0].max(t[1]);
            [(t[0] - m).exp(), (t[1] - m).exp()]
        })
        .collect();

    // factors and their sockets (factor, variable) in factor order
    let mut factors = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for e in model.edges() {
        let m = e.table.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let table = e.table.map(|r| r.map(|v| (v - m).exp()));
        factors.push(Factor::Pair { table });
        members.push(vec![e.i, e.j]);
    }
    for row in system.rows() {
        let support = row.support();
        if support.is_empty() {
            continue;
        }
        factors.push(Factor::Parity { parity: row.parity });
        members.push(support);
    }
    let mut socket_start = Vec::with_capacity(factors.len() + 1);
    let mut socket_var = Vec::new();
    for vars in &members {
        socket_start.push(socket_var.len());
        socket_var.extend_from_slice(vars);
    }
    socket_start.push(socket_var.len());
    let mut var_sockets = vec![Vec::new(); n];
    for (s, &v) in socket_var.iter().enumerate() {
        var_sockets[v].push(s);
    }

    let sockets = socket_var.len();
    let mut to_factor = vec![[0.5, 0.5]; sockets];
    let mut to_var = vec![[0.5, 0.5]; sockets];
    let mut best: Option<(f64, BitVec)> = None;
    let mut last = BitVec::zeros(n);
    let mut iterations = 0u64;
    let mut incoming = Vec::new();

    for _ in 0..opts.max_iters {
        iterations += 1;
        // variable to factor: leave-one-out products
        for (i, socks) in var_sockets.iter().enumerate() {
            let d = socks.len();
            let mut pre = vec![unary[i]; d + 1];
            for (p, &s) in socks.iter().enumerate() {
                pre[p + 1] = normalize([pre[p][0] * to_var[s][0], pre[p][1] * to_var[s][1]]);
            }
            let mut suf = [1.0, 1.0];
            for p in (0..d).rev() {
                let s = socks[p];
                to_factor[s] = normalize([pre[p][0] * suf[0], pre[p][1] * suf[1]]);
                suf = normalize([suf[0] * to_var[s][0], suf[1] * to_var[s][1]]);
            }
        }
        // factor to variable, damped
        let mut change: f64 = 0.0;
        for (a, f) in factors.iter().enumerate() {
            let range = socket_start[a]..socket_start[a + 1];
            let fresh: Vec<[f64; 2]> = match f {
                Factor::Pair { table } => {
                    let (si, sj) = (range.start, range.start + 1);
                    let (mi, mj) = (to_factor[si], to_factor[sj]);
                    let sr = opts.semiring;
                    vec![
                        [
                            sr.plus(table[0][0] * mj[0], table[0][1] * mj[1]),
                            sr.plus(table[1][0] * mj[0], table[1][1] * mj[1]),
                        ],
                        [
                            sr.plus(table[0][0] * mi[0], table[1][0] * mi[1]),
                            sr.plus(table[0][1] * mi[0], table[1][1] * mi[1]),
                        ],
                    ]
                }
                Factor::Parity { parity } => {
                    incoming.clear();
                    incoming.extend_from_slice(&to_factor[range.clone()]);
                    parity_message_update(&incoming, *parity, opts.semiring)
                }
            };
            for (s, msg) in range.zip(fresh) {
                let msg = normalize(msg);
                let old = to_var[s];
                let damped = normalize([
                    opts.damping * old[0] + (1.0 - opts.damping) * msg[0],
                    opts.damping * old[1] + (1.0 - opts.damping) * msg[1],
                ]);
                change = change.max((damped[0] - old[0]).abs()).max((damped[1] - old[1]).abs());
                to_var[s] = damped;
            }
        }
        // beliefs and rounding, ties to 0
        let mut x = BitVec::zeros(n);
        for (i, socks) in var_sockets.iter().enumerate() {
            let mut b = unary[i];
            for &s in socks {
                b = normalize([b[0] * to_var[s][0], b[1] * to_var[s][1]]);
            }
            x.set(i, b[1] > b[0]);
        }
        if system.is_satisfied_by(&x) {
            let lw = model.log_weight(&x)?;
            if best.as_ref().is_none_or(|(v, _)| lw > *v) {
                best = Some((lw, x.clone()));
            }
        }
        last = x;
        if change < opts.tolerance {
            break;
        }
    }

    let (lower, incumbent) = match best {
        Some(b) => b,
        None => {
            let x = system.project(&last)?;
            (model.log_weight(&x)?, x)
        }
    };
    Ok(MapResult {
        lower,
        upper: f64::INFINITY,
        incumbent: Some(incumbent),
        status: MapStatus::FeasibleLower,
        nodes: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_decoding_model, exact_map_with_parity, Edge};

    fn table_oracle(incoming: &[[f64; 2]], parity: bool, sr: Semiring) -> Vec<[f64; 2]> {
        let k = incoming.len();
        let mut out = vec![[0.0; 2]; k];
        for l in 0..k {
            for x in 0..2 {
                let mut acc = 0.0;
                for code in 0u32..1 << k {
                    if (code >> l & 1) as usize != x || (code.count_ones() % 2 == 1) != parity {
                        continue;
                    }
                    let prod: f64 = (0..k).filter(|&m| m != l).map(|m| incoming[m][(code >> m & 1) as usize]).product();
                    acc = sr.plus(acc, prod);
                }
                out[l][x] = acc;
            }
        }
        out
    }

    #[test]
    fn uniform_inputs_give_uniform_outputs() {
        let out = parity_message_update(&[[0.5, 0.5]; 4], true, Semiring::Sum);
        for m in out {
            assert!((m[0] - m[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_variable_even_row_copies_the_other_message() {
        let out = parity_message_update(&[[0.3, 0.7], [0.9, 0.1]], false, Semiring::Sum);
        assert!((out[0][0] - 0.9).abs() < 1e-15 && (out[0][1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_literal_row_is_an_indicator() {
        assert_eq!(parity_message_update(&[[0.2, 0.8]], true, Semiring::Max), vec![[0.0, 1.0]]);
        assert_eq!(parity_message_update(&[[0.2, 0.8]], false, Semiring::Sum), vec![[1.0, 0.0]]);
    }

    #[test]
    fn matches_table_on_fixed_messages() {
        let msgs = [[0.1, 0.9], [0.6, 0.4], [0.25, 0.75], [0.5, 0.2], [1.0, 3.0]];
        for sr in [Semiring::Sum, Semiring::Max] {
            for parity in [false, true] {
                let a = parity_message_update(&msgs, parity, sr);
                let b = table_oracle(&msgs, parity, sr);
                for (x, y) in a.iter().zip(&b) {
                    for v in 0..2 {
                        assert!((x[v] - y[v]).abs() <= 1e-12 * y[v].abs().max(1e-300));
                    }
                }
            }
        }
    }

    #[test]
    fn exact_on_a_chain_without_constraints() {
        let g = FactorGraph::new(
            vec![[0.0, 0.3], [0.0, -0.2], [0.0, 0.1]],
            vec![
                Edge { i: 0, j: 1, table: [[0.0, 0.0], [0.0, 1.5]] },
                Edge { i: 1, j: 2, table: [[0.0, 0.0], [0.0, -2.0]] },
            ],
        )
        .unwrap();
        let sys = ParitySystem::empty(3);
        let r = message_passing_decode(&g, &sys, &MessagePassingOptions::default()).unwrap();
        let oracle = exact_map_with_parity(&g, &sys).unwrap();
        assert_eq!(r.status, MapStatus::FeasibleLower);
        assert!((r.lower - oracle.lower).abs() < 1e-12);
        assert_eq!(r.upper, f64::INFINITY);
    }

    #[test]
    fn decoding_finds_a_codeword() {
        let d = build_decoding_model(6).unwrap();
        let sys = ParitySystem::from_strs(6, &[("110100", true), ("011010", false), ("101001", true)]).unwrap();
        let r = message_passing_decode(&d, &sys, &MessagePassingOptions::default()).unwrap();
        let x = r.incumbent.unwrap();
        assert!(sys.is_satisfied_by(&x));
        assert!(r.lower <= exact_map_with_parity(&d, &sys).unwrap().lower + 1e-12);
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        let d = build_decoding_model(2).unwrap();
        let sys = ParitySystem::from_strs(2, &[("11", true), ("11", false)]).unwrap();
        let r = message_passing_decode(&d, &sys, &MessagePassingOptions::default()).unwrap();
        assert_eq!(r.status, MapStatus::Infeasible);
    }
}
