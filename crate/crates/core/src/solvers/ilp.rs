//! Integer programs for pairwise MAP with parity constraints.
//!
//! Each model variable `i` gets an indicator `μᵢ`; each edge gets the four
//! joint indicators `μᵢⱼ(a, b)` tied to `μᵢ`, `μⱼ` by marginalization
//! equalities. Parity rows are added with one of three exact encodings of
//! the parity polytope. A row with parity bit 1 gains a literal for the
//! constant variable `d = 1`, which turns it into an even-parity row.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::{ParityRow, ParitySystem};
use crate::model::FactorGraph;

/// Row length (literals, counting the constant) beyond which the
/// exponential-size encodings are refused.
pub const EXPONENTIAL_ENCODING_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlpVar {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlpConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl IlpConstraint {
    pub fn activity(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point[v]).sum()
    }

    pub fn is_satisfied(&self, point: &[f64], tol: f64) -> bool {
        let a = self.activity(point);
        match self.sense {
            Sense::Le => a <= self.rhs + tol,
            Sense::Eq => (a - self.rhs).abs() <= tol,
            Sense::Ge => a >= self.rhs - tol,
        }
    }
}

/// A maximization ILP: `max cᵀx + offset` subject to sparse linear rows and
/// variable bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IlpModel {
    pub vars: Vec<IlpVar>,
    pub constraints: Vec<IlpConstraint>,
    pub objective: Vec<(usize, f64)>,
    pub offset: f64,
    /// `mu_index[i]` is the ILP variable `μᵢ`.
    pub mu_index: Vec<usize>,
    /// The constant-one variable, created on first use.
    pub dummy: Option<usize>,
}

impl IlpModel {
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integral: bool) -> usize {
        self.vars.push(IlpVar {
            name: name.into(),
            lower,
            upper,
            integral,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(IlpConstraint { terms, sense, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.offset + self.objective.iter().map(|&(v, c)| c * point[v]).sum::<f64>()
    }

    /// Checks bounds, integrality, and every constraint at `point`.
    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.vars.len()
            && self.vars.iter().zip(point).all(|(v, &x)| {
                x >= v.lower - tol && x <= v.upper + tol && (!v.integral || (x - x.round()).abs() <= tol)
            })
            && self.constraints.iter().all(|c| c.is_satisfied(point, tol))
    }

    fn dummy_var(&mut self) -> usize {
        match self.dummy {
            Some(d) => d,
            None => {
                let d = self.add_var("d", 1.0, 1.0, false);
                self.dummy = Some(d);
                d
            }
        }
    }

    /// Literal variables of a parity row: its support plus the constant when
    /// the parity bit is 1. The literals must then have even parity.
    fn literals(&mut self, row: &ParityRow) -> Vec<usize> {
        let mut lits: Vec<usize> = row.coeffs.iter_ones().map(|i| self.mu_index[i]).collect();
        if row.parity {
            lits.push(self.dummy_var());
        }
        lits
    }
}

/// The marginal-polytope ILP of a pairwise model, without parity rows.
///
/// The objective is shifted so that its value at an integral point is exactly
/// `log w(x)`: `θᵢ(0)` moves into the offset and `μᵢ` carries
/// `θᵢ(1) − θᵢ(0)`.
pub fn build_objective_and_marginal_polytope(model: &FactorGraph) -> IlpModel {
    let mut ilp = IlpModel::default();
    for (i, theta) in model.node_logpot().iter().enumerate() {
        let v = ilp.add_var(format!("mu[{i}]"), 0.0, 1.0, true);
        ilp.mu_index.push(v);
        ilp.offset += theta[0];
        if theta[1] != theta[0] {
            ilp.objective.push((v, theta[1] - theta[0]));
        }
    }
    for e in model.edges() {
        let mut pair = [[0usize; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let v = ilp.add_var(format!("mu[{},{}]({a},{b})", e.i, e.j), 0.0, 1.0, false);
                pair[a][b] = v;
                if e.table[a][b] != 0.0 {
                    ilp.objective.push((v, e.table[a][b]));
                }
            }
        }
        let (mi, mj) = (ilp.mu_index[e.i], ilp.mu_index[e.j]);
        ilp.add_constraint(vec![(pair[0][0], 1.0), (pair[0][1], 1.0), (mi, 1.0)], Sense::Eq, 1.0);
        ilp.add_constraint(vec![(pair[1][0], 1.0), (pair[1][1], 1.0), (mi, -1.0)], Sense::Eq, 0.0);
        ilp.add_constraint(vec![(pair[0][0], 1.0), (pair[1][0], 1.0), (mj, 1.0)], Sense::Eq, 1.0);
        ilp.add_constraint(vec![(pair[0][1], 1.0), (pair[1][1], 1.0), (mj, -1.0)], Sense::Eq, 0.0);
    }
    ilp
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    Jeroslow,
    Feldman,
    Yannakakis,
}

/// How each parity row is encoded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EncodingPolicy {
    /// Jeroslow for rows of at most [`EXPONENTIAL_ENCODING_CAP`] literals,
    /// Yannakakis otherwise.
    #[default]
    Auto,
    Fixed(Encoding),
}

impl EncodingPolicy {
    pub fn choose(&self, literals: usize) -> Encoding {
        match self {
            EncodingPolicy::Auto if literals <= EXPONENTIAL_ENCODING_CAP => Encoding::Jeroslow,
            EncodingPolicy::Auto => Encoding::Yannakakis,
            EncodingPolicy::Fixed(e) => *e,
        }
    }
}

impl fmt::Display for EncodingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingPolicy::Auto => "auto",
            EncodingPolicy::Fixed(Encoding::Jeroslow) => "jeroslow",
            EncodingPolicy::Fixed(Encoding::Feldman) => "feldman",
            EncodingPolicy::Fixed(Encoding::Yannakakis) => "yannakakis",
        })
    }
}

impl FromStr for EncodingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => EncodingPolicy::Auto,
            "jeroslow" => EncodingPolicy::Fixed(Encoding::Jeroslow),
            "feldman" => EncodingPolicy::Fixed(Encoding::Feldman),
            "yannakakis" => EncodingPolicy::Fixed(Encoding::Yannakakis),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown encoding {other:?} (expected auto, jeroslow, feldman or yannakakis)"
                )))
            }
        })
    }
}

fn check_dims(ilp: &IlpModel, system: &ParitySystem) -> Result<()> {
    if system.n() != ilp.mu_index.len() {
        return Err(Error::DimensionMismatch {
            expected: ilp.mu_index.len(),
            actual: system.n(),
        });
    }
    Ok(())
}

fn literal_count(row: &ParityRow) -> usize {
    row.weight()
}

fn check_cap(index: usize, row: &ParityRow) -> Result<()> {
    let len = literal_count(row);
    if len > EXPONENTIAL_ENCODING_CAP {
        return Err(Error::RowTooLong {
            row: index,
            len,
            cap: EXPONENTIAL_ENCODING_CAP,
        });
    }
    Ok(())
}

/// Jeroslow's encoding: one cut per odd subset of the literals.
///
/// With the constant literal present, cuts whose odd subset omits it are
/// implied by the box and are not emitted, so a row with `L` real variables
/// always yields `2^(L−1)` cuts.
pub fn encode_jeroslow(ilp: &mut IlpModel, system: &ParitySystem) -> Result<()> {
    check_dims(ilp, system)?;
    for (j, row) in system.rows().iter().enumerate() {
        check_cap(j, row)?;
    }
    for row in system.rows() {
        jeroslow_row(ilp, row);
    }
    Ok(())
}

fn jeroslow_row(ilp: &mut IlpModel, row: &ParityRow) {
    let support: Vec<usize> = row.coeffs.iter_ones().map(|i| ilp.mu_index[i]).collect();
    let l = support.len();
    // subsets S of the support with |S| ≢ b; each gives Σ_S μ − Σ_rest μ ≤ |S| − 1
    for mask in 0u64..1 << l {
        let size = mask.count_ones() as usize;
        if (size % 2 == 1) == row.parity {
            continue;
        }
        let terms = support
            .iter()
            .enumerate()
            .map(|(p, &v)| (v, if mask >> p & 1 == 1 { 1.0 } else { -1.0 }))
            .collect();
        ilp.add_constraint(terms, Sense::Le, size as f64 - 1.0);
    }
}

/// Feldman's encoding: a binary `w[j,S]` per even subset `S` of the
/// literals, exactly one selected, with each literal equal to the total
/// weight of the subsets containing it.
pub fn encode_feldman(ilp: &mut IlpModel, system: &ParitySystem) -> Result<()> {
    check_dims(ilp, system)?;
    for (j, row) in system.rows().iter().enumerate() {
        check_cap(j, row)?;
    }
    for (j, row) in system.rows().iter().enumerate() {
        feldman_row(ilp, j, row);
    }
    Ok(())
}

fn feldman_row(ilp: &mut IlpModel, j: usize, row: &ParityRow) {
    let lits = ilp.literals(row);
    let l = lits.len();
    let subsets: Vec<(u64, usize)> = (0u64..1 << l)
        .filter(|m| m.count_ones() % 2 == 0)
        .map(|mask| {
            let label: Vec<String> = (0..l).filter(|p| mask >> p & 1 == 1).map(|p| ilp.vars[lits[p]].name.clone()).collect();
            let w = ilp.add_var(format!("w[{j},{{{}}}]", label.join(",")), 0.0, 1.0, true);
            (mask, w)
        })
        .collect();
    ilp.add_constraint(subsets.iter().map(|&(_, w)| (w, 1.0)).collect(), Sense::Eq, 1.0);
    for (p, &lit) in lits.iter().enumerate() {
        let mut terms = vec![(lit, 1.0)];
        terms.extend(subsets.iter().filter(|(m, _)| m >> p & 1 == 1).map(|&(_, w)| (w, -1.0)));
        ilp.add_constraint(terms, Sense::Eq, 0.0);
    }
}

/// Yannakakis' encoding: a binary `α[j,k]` selects the even count `k` of
/// true literals, and `z[i,j,k] ≤ α[j,k]` splits each literal across counts.
pub fn encode_yannakakis(ilp: &mut IlpModel, system: &ParitySystem) -> Result<()> {
    check_dims(ilp, system)?;
    for (j, row) in system.rows().iter().enumerate() {
        yannakakis_row(ilp, j, row);
    }
    Ok(())
}

fn yannakakis_row(ilp: &mut IlpModel, j: usize, row: &ParityRow) {
    let lits = ilp.literals(row);
    let counts: Vec<usize> = (0..=lits.len()).step_by(2).collect();
    let alphas: Vec<usize> = counts
        .iter()
        .map(|k| ilp.add_var(format!("alpha[{j},{k}]"), 0.0, 1.0, true))
        .collect();
    ilp.add_constraint(alphas.iter().map(|&a| (a, 1.0)).collect(), Sense::Eq, 1.0);
    let mut z = vec![Vec::with_capacity(counts.len()); lits.len()];
    for (p, &lit) in lits.iter().enumerate() {
        let name = ilp.vars[lit].name.clone();
        for (&k, &alpha) in counts.iter().zip(&alphas) {
            let v = ilp.add_var(format!("z[{name},{j},{k}]"), 0.0, 1.0, true);
            ilp.add_constraint(vec![(v, 1.0), (alpha, -1.0)], Sense::Le, 0.0);
            z[p].push(v);
        }
    }
    for (p, &lit) in lits.iter().enumerate() {
        let mut terms = vec![(lit, 1.0)];
        terms.extend(z[p].iter().map(|&v| (v, -1.0)));
        ilp.add_constraint(terms, Sense::Eq, 0.0);
    }
    for (c, (&k, &alpha)) in counts.iter().zip(&alphas).enumerate() {
        let mut terms: Vec<(usize, f64)> = z.iter().map(|zs| (zs[c], 1.0)).collect();
        if k > 0 {
            terms.push((alpha, -(k as f64)));
        }
        ilp.add_constraint(terms, Sense::Eq, 0.0);
    }
}

/// The full ILP: marginal polytope plus every parity row encoded per `policy`.
pub fn build_ilp(model: &FactorGraph, system: &ParitySystem, policy: EncodingPolicy) -> Result<IlpModel> {
    let mut ilp = build_objective_and_marginal_polytope(model);
    check_dims(&ilp, system)?;
    for (j, row) in system.rows().iter().enumerate() {
        match policy.choose(literal_count(row)) {
            Encoding::Jeroslow => {
                check_cap(j, row)?;
                jeroslow_row(&mut ilp, row);
            }
            Encoding::Feldman => {
                check_cap(j, row)?;
                feldman_row(&mut ilp, j, row);
            }
            Encoding::Yannakakis => yannakakis_row(&mut ilp, j, row),
        }
    }
    Ok(ilp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitVec;
    use crate::model::{build_ising_grid, Edge, GridSpec};

    fn no_edges(n: usize) -> FactorGraph {
        FactorGraph::new(vec![[0.0, 0.0]; n], vec![]).unwrap()
    }

    #[test]
    fn marginal_polytope_counts_on_grid() {
        let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed: 1 }).unwrap();
        let ilp = build_objective_and_marginal_polytope(&g);
        assert_eq!(ilp.num_vars(), 9 + 12 * 4);
        assert_eq!(ilp.num_constraints(), 12 * 4);
        assert!(ilp.constraints.iter().all(|c| c.sense == Sense::Eq));
        assert!(ilp.mu_index.iter().all(|&v| ilp.vars[v].integral && ilp.vars[v].lower == 0.0 && ilp.vars[v].upper == 1.0));
    }

    #[test]
    fn single_edge_integral_points_are_the_four_assignments() {
        let g = FactorGraph::new(
            vec![[0.1, 0.4], [-0.2, 0.3]],
            vec![Edge { i: 0, j: 1, table: [[0.5, -1.0], [2.0, 0.7]] }],
        )
        .unwrap();
        let ilp = build_objective_and_marginal_polytope(&g);
        let mut found = 0;
        for bits in 0u32..1 << 6 {
            let point: Vec<f64> = (0..6).map(|b| (bits >> b & 1) as f64).collect();
            if ilp.is_feasible(&point, 1e-9) {
                found += 1;
                let x = BitVec::from_bools(&[point[0] == 1.0, point[1] == 1.0]);
                let direct = g.log_weight(&x).unwrap();
                assert!((ilp.objective_value(&point) - direct).abs() < 1e-12);
            }
        }
        assert_eq!(found, 4);
    }

    #[test]
    fn jeroslow_counts_and_cuts() {
        let mut ilp = build_objective_and_marginal_polytope(&no_edges(5));
        let sys = ParitySystem::from_strs(5, &[("11111", false)]).unwrap();
        encode_jeroslow(&mut ilp, &sys).unwrap();
        assert_eq!(ilp.num_constraints(), 16);

        let mut ilp = build_objective_and_marginal_polytope(&no_edges(2));
        let sys = ParitySystem::from_strs(2, &[("11", false)]).unwrap();
        encode_jeroslow(&mut ilp, &sys).unwrap();
        assert_eq!(ilp.num_constraints(), 2);
        for c in &ilp.constraints {
            assert_eq!(c.rhs, 0.0);
            let mut coeffs: Vec<f64> = c.terms.iter().map(|t| t.1).collect();
            coeffs.sort_by(f64::total_cmp);
            assert_eq!(coeffs, vec![-1.0, 1.0]);
        }

        let mut ilp = build_objective_and_marginal_polytope(&no_edges(1));
        let sys = ParitySystem::from_strs(1, &[("1", true)]).unwrap();
        encode_jeroslow(&mut ilp, &sys).unwrap();
        assert!(!ilp.is_feasible(&[0.0], 1e-9));
        assert!(ilp.is_feasible(&[1.0], 1e-9));
    }

    #[test]
    fn feldman_and_yannakakis_sizes() {
        let mut ilp = build_objective_and_marginal_polytope(&no_edges(4));
        let sys = ParitySystem::from_strs(4, &[("1111", false)]).unwrap();
        encode_feldman(&mut ilp, &sys).unwrap();
        assert_eq!(ilp.num_vars() - 4, 8);

        let mut ilp = build_objective_and_marginal_polytope(&no_edges(6));
        let sys = ParitySystem::from_strs(6, &[("111111", false)]).unwrap();
        encode_yannakakis(&mut ilp, &sys).unwrap();
        let alphas = ilp.vars.iter().filter(|v| v.name.starts_with("alpha")).count();
        let zs = ilp.vars.iter().filter(|v| v.name.starts_with("z[")).count();
        assert_eq!((alphas, zs), (4, 24));
    }

    #[test]
    fn explicit_exponential_encodings_refuse_long_rows() {
        let n = 12;
        let sys = ParitySystem::from_strs(n, &[("111111111110", true)]).unwrap();
        for enc in [Encoding::Jeroslow, Encoding::Feldman] {
            let err = build_ilp(&no_edges(n), &sys, EncodingPolicy::Fixed(enc)).unwrap_err();
            assert!(matches!(err, Error::RowTooLong { row: 0, len: 12, .. }));
        }
        assert!(build_ilp(&no_edges(n), &sys, EncodingPolicy::Fixed(Encoding::Yannakakis)).is_ok());
    }

    #[test]
    fn auto_policy_switches_on_length() {
        let n = 60;
        let short = BitVec::from_bools(&(0..n).map(|i| i < 10).collect::<Vec<_>>());
        let long = BitVec::from_bools(&(0..n).map(|i| i < 50).collect::<Vec<_>>());
        let sys = ParitySystem::from_rows(n, vec![ParityRow::new(short, false)]).unwrap();
        let ilp = build_ilp(&no_edges(n), &sys, EncodingPolicy::Auto).unwrap();
        assert_eq!(ilp.num_vars(), n);
        assert_eq!(ilp.num_constraints(), 512);

        let sys = ParitySystem::from_rows(n, vec![ParityRow::new(long, false)]).unwrap();
        let ilp = build_ilp(&no_edges(n), &sys, EncodingPolicy::Auto).unwrap();
        assert_eq!(ilp.vars.iter().filter(|v| v.name.starts_with("alpha")).count(), 26);

        let ilp = build_ilp(&no_edges(3), &ParitySystem::empty(3), EncodingPolicy::Auto).unwrap();
        assert_eq!((ilp.num_vars(), ilp.num_constraints()), (3, 0));
    }

    #[test]
    fn policy_names_round_trip() {
        for s in ["auto", "jeroslow", "feldman", "yannakakis"] {
            assert_eq!(s.parse::<EncodingPolicy>().unwrap().to_string(), s);
        }
    }
}
