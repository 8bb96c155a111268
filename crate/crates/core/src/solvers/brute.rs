//! Exhaustive MAP over the affine solution space, for many queries on one model.

use crate::error::{Error, Result};
use crate::gf2::{BitVec, ParitySystem};
use crate::model::FactorGraph;

use super::MapResult;

/// Caches every configuration's log-weight so each query costs one table
/// lookup per solution.
#[derive(Clone, Debug)]
pub struct BruteSolver {
    n: usize,
    table: Vec<f64>,
}

impl BruteSolver {
    pub fn new(model: &FactorGraph) -> Result<Self> {
        Ok(Self {
            n: model.n(),
            table: model.log_weight_table()?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.table
    }

    /// Exact optimum; ties resolve to the smallest configuration code.
    pub fn solve(&self, system: &ParitySystem) -> Result<MapResult> {
        if system.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: system.n(),
            });
        }
        let Some(space) = system.affine_space() else {
            return Ok(MapResult::infeasible(0));
        };
        let base = space.base.to_u64();
        let basis: Vec<u64> = space.basis.iter().map(BitVec::to_u64).collect();
        let mut code = base;
        let mut best = (self.table[code as usize], code);
        for step in 1u64..1 << basis.len() {
            code ^= basis[step.trailing_zeros() as usize];
            let v = self.table[code as usize];
            if v > best.0 || (v == best.0 && code < best.1) {
                best = (v, code);
            }
        }
        Ok(MapResult::optimal(best.0, BitVec::from_u64(best.1, self.n), 1 << basis.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_ising_grid, exact_map_with_parity, GridSpec};

    #[test]
    fn agrees_with_enumeration_oracle() {
        let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed: 9 }).unwrap();
        let solver = BruteSolver::new(&g).unwrap();
        let systems = [
            ParitySystem::empty(9),
            ParitySystem::from_strs(9, &[("110100101", true), ("011011000", false)]).unwrap(),
            ParitySystem::from_strs(9, &[("100000000", true), ("100000000", false)]).unwrap(),
        ];
        for s in &systems {
            let a = solver.solve(s).unwrap();
            let b = exact_map_with_parity(&g, s).unwrap();
            assert_eq!(a.status, b.status);
            assert_eq!(a.lower, b.lower);
            assert_eq!(a.incumbent, b.incumbent);
        }
    }
}
