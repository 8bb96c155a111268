//! Binary pairwise factor graphs in the log domain.
//!
//! The weight of a configuration is
//! `w(x) = exp(Σᵢ θᵢ(xᵢ) + Σ₍ᵢ,ⱼ₎ θᵢⱼ(xᵢ, xⱼ))`; everything here works with
//! `log w` directly.

mod exact;

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::BitVec;

pub use exact::{
    brute_force_log_partition, eliminate_log_partition, exact_log_partition,
    exact_map_with_parity, log_add, log_sum_exp, BRUTE_FORCE_CAP, FRONTIER_CAP,
};

/// Largest `n` for which [`FactorGraph::log_weight_table`] is materialized.
pub const WEIGHT_TABLE_CAP: usize = 24;

/// A pairwise interaction `θᵢⱼ(xᵢ, xⱼ)`, indexed `table[xᵢ][xⱼ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub table: [[f64; 2]; 2],
}

impl Edge {
    #[inline]
    pub fn value(&self, xi: bool, xj: bool) -> f64 {
        self.table[xi as usize][xj as usize]
    }
}

/// A factor graph over binary variables with unary and pairwise log-potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorGraph {
    node_logpot: Vec<[f64; 2]>,
    edges: Vec<Edge>,
}

impl FactorGraph {
    pub fn new(node_logpot: Vec<[f64; 2]>, edges: Vec<Edge>) -> Result<Self> {
        let n = node_logpot.len();
        if node_logpot.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("node log-potentials must be finite".into()));
        }
        let mut seen = HashSet::new();
        for e in &edges {
            if e.i >= n || e.j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) references a variable outside 0..{n}",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::InvalidParameter(format!("self loop on variable {}", e.i)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge between {} and {}",
                    e.i, e.j
                )));
            }
            if e.table.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("edge log-potentials must be finite".into()));
            }
        }
        Ok(Self { node_logpot, edges })
    }

    pub fn n(&self) -> usize {
        self.node_logpot.len()
    }

    pub fn node_logpot(&self) -> &[[f64; 2]] {
        &self.node_logpot
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `log w(x)`.
    pub fn log_weight(&self, x: &BitVec) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        Ok(self.log_weight_with(|i| x.get(i)))
    }

    /// `log w` of the configuration whose bit `i` is bit `i` of `code`.
    #[inline]
    pub fn log_weight_code(&self, code: u64) -> f64 {
        debug_assert!(self.n() <= 64);
        self.log_weight_with(|i| code >> i & 1 == 1)
    }

    #[inline]
    fn log_weight_with(&self, x: impl Fn(usize) -> bool) -> f64 {
        let unary: f64 = self
            .node_logpot
            .iter()
            .enumerate()
            .map(|(i, t)| t[x(i) as usize])
            .sum();
        let pairwise: f64 = self.edges.iter().map(|e| e.value(x(e.i), x(e.j))).sum();
        unary + pairwise
    }

    /// `log w` for every configuration, indexed by configuration code.
    pub fn log_weight_table(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > WEIGHT_TABLE_CAP {
            return Err(Error::TooLarge {
                what: "log-weight table",
                size: n,
                cap: WEIGHT_TABLE_CAP,
            });
        }
        Ok((0..1u64 << n).map(|c| self.log_weight_code(c)).collect())
    }

    /// For each variable, the indices of edges touching it.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for (k, e) in self.edges.iter().enumerate() {
            out[e.i].push(k);
            out[e.j].push(k);
        }
        out
    }

    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    /// Parses the model file format: header `n e`, then `n` lines `θᵢ(0) θᵢ(1)`,
    /// then `e` lines `i j θ(0,0) θ(0,1) θ(1,0) θ(1,1)`.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(hl, format!("bad integer {t:?}"))))
            .collect::<Result<_>>()?;
        let [n, e] = head[..] else {
            return Err(Error::parse(hl, "header must be `n e`"));
        };
        let mut next_floats = |count: usize| -> Result<(usize, Vec<f64>)> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| Error::parse(hl, "unexpected end of model file"))?;
            let vals: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(line, format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() != count {
                return Err(Error::parse(line, format!("expected {count} fields, found {}", vals.len())));
            }
            Ok((line, vals))
        };
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (_, v) = next_floats(2)?;
            nodes.push([v[0], v[1]]);
        }
        let mut edges = Vec::with_capacity(e);
        for _ in 0..e {
            let (line, v) = next_floats(6)?;
            let idx = |f: f64| {
                if f >= 0.0 && f.fract() == 0.0 {
                    Ok(f as usize)
                } else {
                    Err(Error::parse(line, format!("bad variable index {f}")))
                }
            };
            edges.push(Edge {
                i: idx(v[0])?,
                j: idx(v[1])?,
                table: [[v[2], v[3]], [v[4], v[5]]],
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::parse(line, "trailing content after last edge"));
        }
        Self::new(nodes, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.edges.len());
        for t in &self.node_logpot {
            let _ = writeln!(out, "{:?} {:?}", t[0], t[1]);
        }
        for e in &self.edges {
            let t = &e.table;
            let _ = writeln!(
                out,
                "{} {} {:?} {:?} {:?} {:?}",
                e.i, e.j, t[0][0], t[0][1], t[1][0], t[1][1]
            );
        }
        out
    }
}

/// Parameters of an `M × M` Ising grid with random fields and couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub side: usize,
    /// Fields are drawn uniformly from `[−field, field]`.
    pub field: f64,
    /// Couplings are drawn uniformly from `[−coupling, coupling]`.
    pub coupling: f64,
    pub seed: u64,
}

/// Builds an Ising grid with `ψᵢ(xᵢ) = exp(fᵢ xᵢ)` and `ψᵢⱼ = exp(wᵢⱼ xᵢ xⱼ)`.
///
/// Variable `(r, c)` has index `r·M + c`. Fields are drawn first (by index),
/// then couplings in edge order: for each cell, its right edge then its down
/// edge.
pub fn build_ising_grid(spec: &GridSpec) -> Result<FactorGraph> {
    if spec.side == 0 {
        return Err(Error::InvalidParameter("grid side must be at least 1".into()));
    }
    if !(spec.field >= 0.0 && spec.coupling >= 0.0) {
        return Err(Error::InvalidParameter("field and coupling magnitudes must be nonnegative".into()));
    }
    let m = spec.side;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut symmetric = |mag: f64| mag * (2.0 * rng.random::<f64>() - 1.0);
    let nodes = (0..m * m).map(|_| [0.0, symmetric(spec.field)]).collect();
    let mut edges = Vec::with_capacity(2 * m * (m - 1));
    for r in 0..m {
        for c in 0..m {
            let i = r * m + c;
            let mut push = |j: usize| {
                let w = symmetric(spec.coupling);
                edges.push(Edge {
                    i,
                    j,
                    table: [[0.0, 0.0], [0.0, w]],
                });
            };
            if c + 1 < m {
                push(i + 1);
            }
            if r + 1 < m {
                push(i + m);
            }
        }
    }
    FactorGraph::new(nodes, edges)
}

/// The maximum-likelihood decoding model: no edges, `ψᵢ(xᵢ) = exp(−xᵢ)`, so
/// `log w(x)` is minus the Hamming weight of `x`.
pub fn build_decoding_model(n: usize) -> Result<FactorGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("decoding model needs at least one variable".into()));
    }
    FactorGraph::new(vec![[0.0, -1.0]; n], Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_graphs() {
        let e = |i, j| Edge { i, j, table: [[0.0; 2]; 2] };
        assert!(FactorGraph::new(vec![[0.0, 0.0]; 2], vec![e(0, 0)]).is_err());
        assert!(FactorGraph::new(vec![[0.0, 0.0]; 2], vec![e(0, 1), e(1, 0)]).is_err());
        assert!(FactorGraph::new(vec![[0.0, 0.0]; 2], vec![e(0, 2)]).is_err());
        assert!(FactorGraph::new(vec![[f64::NAN, 0.0]], vec![]).is_err());
    }

    #[test]
    fn log_weight_examples() {
        let zero = FactorGraph::new(vec![[0.0, 0.0]; 3], vec![]).unwrap();
        assert_eq!(zero.log_weight(&"101".parse().unwrap()).unwrap(), 0.0);
        let single = FactorGraph::new(vec![[0.0, 1.0]], vec![]).unwrap();
        assert_eq!(single.log_weight(&"1".parse().unwrap()).unwrap(), 1.0);
        let chain = FactorGraph::new(
            vec![[0.0, 0.0]; 2],
            vec![Edge { i: 0, j: 1, table: [[0.0, 0.0], [0.0, 3.0]] }],
        )
        .unwrap();
        assert_eq!(chain.log_weight(&"11".parse().unwrap()).unwrap(), 3.0);
        assert!(chain.log_weight(&"1".parse().unwrap()).is_err());
    }

    #[test]
    fn grid_shape_and_ranges() {
        let one = build_ising_grid(&GridSpec { side: 1, field: 1.0, coupling: 3.0, seed: 0 }).unwrap();
        assert_eq!((one.n(), one.edges().len()), (1, 0));
        let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed: 7 }).unwrap();
        assert_eq!((g.n(), g.edges().len()), (9, 12));
        let g = build_ising_grid(&GridSpec { side: 2, field: 1.0, coupling: 3.0, seed: 11 }).unwrap();
        for t in g.node_logpot() {
            assert_eq!(t[0], 0.0);
            assert!(t[1].abs() <= 1.0);
        }
        for e in g.edges() {
            assert_eq!(e.table[0], [0.0, 0.0]);
            assert_eq!(e.table[1][0], 0.0);
            assert!(e.table[1][1].abs() <= 3.0);
        }
        let again = build_ising_grid(&GridSpec { side: 2, field: 1.0, coupling: 3.0, seed: 11 }).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn decoding_model_is_negative_hamming_weight() {
        let d = build_decoding_model(5).unwrap();
        assert_eq!(d.log_weight(&"00000".parse().unwrap()).unwrap(), 0.0);
        assert_eq!(d.log_weight(&"10101".parse().unwrap()).unwrap(), -3.0);
        assert!(build_decoding_model(0).is_err());
    }

    #[test]
    fn weight_table_matches_direct_evaluation() {
        let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed: 5 }).unwrap();
        let table = g.log_weight_table().unwrap();
        for code in 0..table.len() as u64 {
            assert!((table[code as usize] - g.log_weight_code(code)).abs() < 1e-12);
        }
    }

    #[test]
    fn model_text_round_trip() {
        let g = build_ising_grid(&GridSpec { side: 2, field: 0.1, coupling: 3.0, seed: 2 }).unwrap();
        let parsed = FactorGraph::parse_text(&g.to_text()).unwrap();
        assert_eq!(parsed, g);
        assert!(FactorGraph::parse_text("2 1\n0 0\n0 0\n0 1 0 0 0\n").is_err());
        assert!(FactorGraph::parse_text("1 0\n0 x\n").is_err());
    }

    #[test]
    fn forest_detection() {
        let chain = FactorGraph::new(
            vec![[0.0, 0.0]; 3],
            vec![
                Edge { i: 0, j: 1, table: [[0.0; 2]; 2] },
                Edge { i: 1, j: 2, table: [[0.0; 2]; 2] },
            ],
        )
        .unwrap();
        assert!(chain.is_forest());
        let grid = build_ising_grid(&GridSpec { side: 2, field: 0.0, coupling: 0.0, seed: 0 }).unwrap();
        assert!(!grid.is_forest());
    }
}
