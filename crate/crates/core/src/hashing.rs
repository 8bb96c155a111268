//! Random parity-hash families `h(x) = A·x + b (mod 2)`.
//!
//! Three families are provided: dense (every entry a fair coin), Toeplitz
//! (constant along diagonals, `n + m − 1` matrix bits) and sparse (each row a
//! uniformly random `k`-subset). Dense and Toeplitz are pairwise independent;
//! sparse is only uniform. [`independence_audit`] checks these properties by
//! exact enumeration for small parameters.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{next_combination, BitVec, ParityRow, ParitySystem};

/// Which hash family to sample from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HashFamily {
    Dense,
    Toeplitz,
    /// Rows of exactly `k` ones.
    Sparse { k: usize },
}

impl HashFamily {
    pub fn is_pairwise_independent(&self) -> bool {
        matches!(self, HashFamily::Dense | HashFamily::Toeplitz)
    }
}

impl fmt::Display for HashFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashFamily::Dense => f.write_str("dense"),
            HashFamily::Toeplitz => f.write_str("toeplitz"),
            HashFamily::Sparse { k } => write!(f, "sparse:{k}"),
        }
    }
}

impl FromStr for HashFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dense" => Ok(HashFamily::Dense),
            "toeplitz" => Ok(HashFamily::Toeplitz),
            other => match other.strip_prefix("sparse:") {
                Some(k) => k
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .map(|k| HashFamily::Sparse { k })
                    .ok_or_else(|| Error::InvalidParameter(format!("bad sparse row weight {k:?}"))),
                None => Err(Error::InvalidParameter(format!(
                    "unknown hash family {other:?} (expected dense, toeplitz or sparse:<k>)"
                ))),
            },
        }
    }
}

/// A family together with its domain and range sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashFamilySpec {
    pub family: HashFamily,
    /// Domain bits.
    pub n: usize,
    /// Range bits (number of parity rows).
    pub m: usize,
}

impl HashFamilySpec {
    pub fn new(family: HashFamily, n: usize, m: usize) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidParameter(format!(
                "hash range {m} exceeds domain {n}"
            )));
        }
        if let HashFamily::Sparse { k } = family {
            if k == 0 || k > n {
                return Err(Error::InvalidParameter(format!(
                    "sparse row weight {k} must lie in 1..={n}"
                )));
            }
        }
        Ok(Self { family, n, m })
    }

    pub fn sample<R: RandomBits + ?Sized>(&self, rng: &mut R) -> ParitySystem {
        match self.family {
            HashFamily::Dense => sample_dense(self.n, self.m, rng),
            HashFamily::Toeplitz => sample_toeplitz(self.n, self.m, rng),
            HashFamily::Sparse { k } => sample_sparse(self.n, self.m, k, rng),
        }
    }
}

/// Source of randomness for the samplers.
pub trait RandomBits {
    fn next_bit(&mut self) -> bool;

    /// Uniform integer in `0..bound`.
    fn next_below(&mut self, bound: usize) -> usize;
}

/// Deterministic generator keyed by a master seed and a `(level, trial)` label.
///
/// Each label selects an independent ChaCha stream, so the bits a query sees
/// do not depend on the order in which queries are dispatched.
#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    buffer: u64,
    available: u32,
    bits_consumed: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64, level: usize, trial: usize) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(((level as u64) << 32) | (trial as u64 & 0xffff_ffff));
        Self {
            inner,
            buffer: 0,
            available: 0,
            bits_consumed: 0,
        }
    }

    /// Number of single bits handed out by [`RandomBits::next_bit`].
    pub fn bits_consumed(&self) -> u64 {
        self.bits_consumed
    }
}

impl RandomBits for SeededRng {
    fn next_bit(&mut self) -> bool {
        if self.available == 0 {
            self.buffer = self.inner.next_u64();
            self.available = 64;
        }
        let bit = self.buffer & 1 == 1;
        self.buffer >>= 1;
        self.available -= 1;
        self.bits_consumed += 1;
        bit
    }

    fn next_below(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }
}

/// Replays a fixed bit sequence; used to enumerate families exactly.
#[derive(Clone, Debug)]
pub struct FixedBits {
    bits: Vec<bool>,
    pos: usize,
}

impl FixedBits {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits, pos: 0 }
    }

    /// The low `count` bits of `value`, least significant first.
    pub fn from_u64(value: u64, count: usize) -> Self {
        Self::new((0..count).map(|i| value >> i & 1 == 1).collect())
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl RandomBits for FixedBits {
    fn next_bit(&mut self) -> bool {
        let bit = *self
            .bits
            .get(self.pos)
            .expect("fixed bit source exhausted");
        self.pos += 1;
        bit
    }

    fn next_below(&mut self, _bound: usize) -> usize {
        panic!("fixed bit source does not produce integers")
    }
}

fn random_row<R: RandomBits + ?Sized>(n: usize, rng: &mut R) -> BitVec {
    let mut row = BitVec::zeros(n);
    for i in 0..n {
        row.set(i, rng.next_bit());
    }
    row
}

fn attach_parities<R: RandomBits + ?Sized>(n: usize, coeffs: Vec<BitVec>, rng: &mut R) -> ParitySystem {
    let rows = coeffs
        .into_iter()
        .map(|c| ParityRow::new(c, rng.next_bit()))
        .collect();
    ParitySystem::from_rows(n, rows).expect("rows are built with length n")
}

/// Dense pairwise-independent hash: `n·m + m` fair coins, matrix row-major
/// first, then `b`.
pub fn sample_dense<R: RandomBits + ?Sized>(n: usize, m: usize, rng: &mut R) -> ParitySystem {
    let coeffs = (0..m).map(|_| random_row(n, rng)).collect();
    attach_parities(n, coeffs, rng)
}

/// Toeplitz hash: the first row (`n` bits), then the rest of the first column
/// (`m − 1` bits), then `b` (`m` bits). Entry `(r, c)` copies the boundary
/// value on its diagonal.
pub fn sample_toeplitz<R: RandomBits + ?Sized>(n: usize, m: usize, rng: &mut R) -> ParitySystem {
    if m == 0 {
        return ParitySystem::empty(n);
    }
    let first_row: Vec<bool> = (0..n).map(|_| rng.next_bit()).collect();
    let mut first_col = vec![first_row.first().copied().unwrap_or(false)];
    first_col.extend((1..m).map(|_| rng.next_bit()));
    let coeffs = (0..m)
        .map(|r| {
            let mut row = BitVec::zeros(n);
            for c in 0..n {
                let bit = if c >= r { first_row[c - r] } else { first_col[r - c] };
                row.set(c, bit);
            }
            row
        })
        .collect();
    attach_parities(n, coeffs, rng)
}

/// Sparse uniform hash: each row a uniform `k`-subset of the columns (partial
/// Fisher-Yates), then `m` fair parity bits.
pub fn sample_sparse<R: RandomBits + ?Sized>(n: usize, m: usize, k: usize, rng: &mut R) -> ParitySystem {
    assert!((1..=n).contains(&k), "row weight {k} must lie in 1..={n}");
    let coeffs = (0..m)
        .map(|_| {
            let mut cols: Vec<usize> = (0..n).collect();
            let mut row = BitVec::zeros(n);
            for i in 0..k {
                let j = i + rng.next_below(n - i);
                cols.swap(i, j);
                row.set(cols[i], true);
            }
            row
        })
        .collect();
    attach_parities(n, coeffs, rng)
}

/// Evaluates `A·x + b (mod 2)`.
pub fn eval_hash(system: &ParitySystem, x: &BitVec) -> Result<BitVec> {
    if x.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            actual: x.len(),
        });
    }
    let bits: Vec<bool> = system
        .rows()
        .iter()
        .map(|r| r.coeffs.dot(x) ^ r.parity)
        .collect();
    Ok(BitVec::from_bools(&bits))
}

/// Largest family the audit will enumerate.
pub const AUDIT_MEMBER_CAP: usize = 1 << 20;
const AUDIT_DOMAIN_CAP: usize = 8;

/// Exact distributional audit of a hash family.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub spec: HashFamilySpec,
    /// Number of (equally likely) parameter assignments enumerated.
    pub members: u64,
    /// `marginals[x][y]`: members with `h(x) = y`.
    pub marginals: Vec<Vec<u64>>,
    pub marginals_uniform: bool,
    /// Pairs `x₁ < x₂` (as integers) whose joint `(h(x₁), h(x₂))` is not
    /// exactly uniform over `{0,1}^{2m}`.
    pub nonuniform_pairs: Vec<(u64, u64)>,
    pub pairs_checked: u64,
}

impl AuditReport {
    pub fn pairwise_independent(&self) -> bool {
        self.marginals_uniform && self.nonuniform_pairs.is_empty()
    }
}

fn enumerate_members(spec: &HashFamilySpec) -> Result<Vec<ParitySystem>> {
    let (n, m) = (spec.n, spec.m);
    let by_bits = |bits: usize, sampler: &dyn Fn(&mut FixedBits) -> ParitySystem| {
        if bits >= 63 || (1usize << bits) > AUDIT_MEMBER_CAP {
            return Err(Error::TooLarge {
                what: "hash family",
                size: bits,
                cap: AUDIT_MEMBER_CAP.trailing_zeros() as usize,
            });
        }
        Ok((0..1u64 << bits)
            .map(|v| sampler(&mut FixedBits::from_u64(v, bits)))
            .collect())
    };
    match spec.family {
        HashFamily::Dense => by_bits(n * m + m, &|r| sample_dense(n, m, r)),
        HashFamily::Toeplitz if m == 0 => Ok(vec![ParitySystem::empty(n)]),
        HashFamily::Toeplitz => by_bits(n + 2 * m - 1, &|r| sample_toeplitz(n, m, r)),
        HashFamily::Sparse { k } => {
            let mut subsets = Vec::new();
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                let mut row = BitVec::zeros(n);
                idx.iter().for_each(|&c| row.set(c, true));
                subsets.push(row);
                if !next_combination(&mut idx, n) {
                    break;
                }
            }
            let total = (subsets.len() as u128).pow(m as u32) << m;
            if total > AUDIT_MEMBER_CAP as u128 {
                return Err(Error::TooLarge {
                    what: "hash family",
                    size: total.min(usize::MAX as u128) as usize,
                    cap: AUDIT_MEMBER_CAP,
                });
            }
            let mut members = Vec::with_capacity(total as usize);
            for code in 0..total as usize {
                let mut rest = code;
                let rows = (0..m)
                    .map(|_| {
                        let coeffs = subsets[rest % subsets.len()].clone();
                        rest /= subsets.len();
                        coeffs
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(|c| {
                        let parity = rest & 1 == 1;
                        rest >>= 1;
                        ParityRow::new(c, parity)
                    })
                    .collect();
                members.push(ParitySystem::from_rows(n, rows)?);
            }
            Ok(members)
        }
    }
}

/// Enumerates every member of a small family and tabulates the exact
/// distribution of `H(x)` for each `x` and of `(H(x₁), H(x₂))` for each pair.
pub fn independence_audit(spec: &HashFamilySpec) -> Result<AuditReport> {
    if spec.n > AUDIT_DOMAIN_CAP {
        return Err(Error::TooLarge {
            what: "audit domain",
            size: spec.n,
            cap: AUDIT_DOMAIN_CAP,
        });
    }
    let members = enumerate_members(spec)?;
    let points = 1usize << spec.n;
    let outcomes = 1usize << spec.m;
    // hashes[member * points + x]
    let mut hashes = vec![0u8; members.len() * points];
    for (mi, sys) in members.iter().enumerate() {
        for x in 0..points {
            let h = eval_hash(sys, &BitVec::from_u64(x as u64, spec.n))?;
            hashes[mi * points + x] = h.to_u64() as u8;
        }
    }
    let total = members.len() as u64;

    let mut marginals = vec![vec![0u64; outcomes]; points];
    for mi in 0..members.len() {
        for x in 0..points {
            marginals[x][hashes[mi * points + x] as usize] += 1;
        }
    }
    let marginals_uniform = marginals
        .iter()
        .all(|row| row.iter().all(|&c| c * outcomes as u64 == total));

    let mut nonuniform_pairs = Vec::new();
    let mut pairs_checked = 0;
    let mut joint = vec![0u64; outcomes * outcomes];
    for x1 in 0..points {
        for x2 in x1 + 1..points {
            joint.iter_mut().for_each(|c| *c = 0);
            for mi in 0..members.len() {
                let a = hashes[mi * points + x1] as usize;
                let b = hashes[mi * points + x2] as usize;
                joint[a * outcomes + b] += 1;
            }
            pairs_checked += 1;
            let cells = (outcomes * outcomes) as u64;
            if !joint.iter().all(|&c| c * cells == total) {
                nonuniform_pairs.push((x1 as u64, x2 as u64));
            }
        }
    }

    Ok(AuditReport {
        spec: *spec,
        members: total,
        marginals,
        marginals_uniform,
        nonuniform_pairs,
        pairs_checked,
    })
}
