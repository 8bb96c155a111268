//! Fixtures shared by the benchmarks in `benches/`.

use xorwish::model::{build_ising_grid, FactorGraph, GridSpec};
use xorwish::wish::sample_query_system;
use xorwish::{HashFamily, ParitySystem};

/// A mixed Ising grid with field 1.0 and coupling 3.0.
pub fn grid(side: usize, seed: u64) -> FactorGraph {
    build_ising_grid(&GridSpec { side, field: 1.0, coupling: 3.0, seed }).expect("valid grid")
}

/// A Toeplitz system with `m` rows over `n` variables.
pub fn toeplitz(n: usize, m: usize, seed: u64) -> ParitySystem {
    sample_query_system(HashFamily::Toeplitz, n, m, 1, seed).expect("valid dimensions")
}
