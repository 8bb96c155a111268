//! Linear algebra over GF(2).
//!
//! A [`ParitySystem`] is a set of XOR constraints `A·x = b (mod 2)` over `n`
//! binary variables. Its meaning is its solution set; every transformation in
//! this module (row reduction, greedy sparsification) preserves that set, so
//! the outputs can be handed to any downstream encoder interchangeably.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default cap on `n` for brute-force enumeration of solution sets.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// A packed vector over GF(2).
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `len` are
/// always zero, so derived equality and hashing are semantic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Builds a vector whose bit `i` is bit `i` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = value & mask;
        }
        v
    }

    /// Low 64 bits as an integer (bit `i` of the result is bit `i` of `self`).
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len, "bit {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = Error;

    /// Parses a string of `0`/`1` characters, first character is bit 0.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(1, format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

/// One XOR constraint: `coeffs · x = parity (mod 2)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParityRow {
    pub coeffs: BitVec,
    pub parity: bool,
}

impl ParityRow {
    pub fn new(coeffs: BitVec, parity: bool) -> Self {
        Self { coeffs, parity }
    }

    /// Number of variables in the constraint (its "length").
    pub fn len(&self) -> usize {
        self.coeffs.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_zero()
    }

    /// 1-norm of the augmented row `[a | b]`.
    pub fn weight(&self) -> usize {
        self.coeffs.count_ones() + usize::from(self.parity)
    }

    pub fn support(&self) -> Vec<usize> {
        self.coeffs.iter_ones().collect()
    }

    #[inline]
    pub fn is_satisfied_by(&self, x: &BitVec) -> bool {
        self.coeffs.dot(x) == self.parity
    }

    fn xor_assign(&mut self, other: &ParityRow) {
        self.coeffs.xor_assign(&other.coeffs);
        self.parity ^= other.parity;
    }
}

/// A system of XOR constraints over `n` binary variables.
///
/// `m = 0` is the unconstrained system whose solution set is the whole cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParitySystem {
    n: usize,
    rows: Vec<ParityRow>,
}

/// The solution set of a consistent system written as `base + span(basis)`.
#[derive(Clone, Debug)]
pub struct AffineSpace {
    pub base: BitVec,
    pub basis: Vec<BitVec>,
}

impl ParitySystem {
    /// The unconstrained system on `n` variables.
    pub fn empty(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    pub fn from_rows(n: usize, rows: Vec<ParityRow>) -> Result<Self> {
        for row in &rows {
            if row.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.coeffs.len(),
                });
            }
        }
        Ok(Self { n, rows })
    }

    /// Convenience constructor from `0`/`1` strings, e.g. `[("1100", false)]`.
    pub fn from_strs(n: usize, rows: &[(&str, bool)]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|(c, b)| Ok(ParityRow::new(c.parse()?, *b)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(n, rows)
    }

    pub fn push_row(&mut self, row: ParityRow) -> Result<()> {
        if row.coeffs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: row.coeffs.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[ParityRow] {
        &self.rows
    }

    pub fn is_satisfied_by(&self, x: &BitVec) -> bool {
        x.len() == self.n && self.rows.iter().all(|r| r.is_satisfied_by(x))
    }

    /// Total 1-norm of the augmented matrix `[A | b]`.
    pub fn augmented_norm(&self) -> usize {
        self.rows.iter().map(ParityRow::weight).sum()
    }

    pub fn max_row_len(&self) -> usize {
        self.rows.iter().map(ParityRow::len).max().unwrap_or(0)
    }

    /// Gauss-Jordan elimination of `[A | b]` to reduced row echelon form.
    ///
    /// Zero rows with parity 0 are dropped. An inconsistent system keeps a
    /// single `0 = 1` row (as the last row) and its other parity bits are
    /// cleared, as the augmented column is then itself a pivot column.
    pub fn rref(&self) -> ParitySystem {
        self.rref_with_pivots().0
    }

    /// Like [`rref`](Self::rref) but also returns the pivot column of every
    /// non-contradiction row.
    pub fn rref_with_pivots(&self) -> (ParitySystem, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.n {
            if next == rows.len() {
                break;
            }
            let Some(found) = (next..rows.len()).find(|&r| rows[r].coeffs.get(col)) else {
                continue;
            };
            rows.swap(next, found);
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next && row.coeffs.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        let inconsistent = rows[next..].iter().any(|r| r.parity);
        rows.truncate(next);
        if inconsistent {
            for row in &mut rows {
                row.parity = false;
            }
            rows.push(ParityRow::new(BitVec::zeros(self.n), true));
        }
        (ParitySystem { n: self.n, rows }, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref_with_pivots().1.len()
    }

    /// True iff the solution set is nonempty.
    pub fn is_consistent(&self) -> bool {
        !self
            .rref()
            .rows
            .iter()
            .any(|r| r.coeffs.is_zero() && r.parity)
    }

    /// Greedy row-combination sparsification.
    ///
    /// Scans combinations of `2..=depth` rows in lexicographic order of their
    /// index tuples. Whenever the GF(2) sum of a combination has strictly
    /// smaller augmented weight than its densest member, that member (lowest
    /// index among ties) is replaced by the sum and the scan restarts. Stops at
    /// a fixed point or after `10·m` substitutions.
    pub fn greedy_sparsify(&self, depth: usize) -> Result<ParitySystem> {
        if depth < 2 {
            return Err(Error::InvalidParameter(format!(
                "greedy sparsification depth must be at least 2, got {depth}"
            )));
        }
        let mut rows = self.rows.clone();
        let m = rows.len();
        let mut weights: Vec<usize> = rows.iter().map(ParityRow::weight).collect();
        let cap = 10 * m;
        let mut substitutions = 0;
        let max_size = depth.min(m);

        'scan: while substitutions < cap {
            for size in 2..=max_size {
                let mut idx: Vec<usize> = (0..size).collect();
                loop {
                    let mut sum = rows[idx[0]].clone();
                    for &i in &idx[1..] {
                        sum.xor_assign(&rows[i]);
                    }
                    // densest member, lowest index on ties
                    let densest = idx
                        .iter()
                        .copied()
                        .fold(idx[0], |best, i| if weights[i] > weights[best] { i } else { best });
                    let w = sum.weight();
                    if w < weights[densest] {
                        rows[densest] = sum;
                        weights[densest] = w;
                        substitutions += 1;
                        continue 'scan;
                    }
                    if !next_combination(&mut idx, m) {
                        break;
                    }
                }
            }
            break;
        }
        Ok(ParitySystem { n: self.n, rows })
    }

    /// Exact solution set by brute force over `{0,1}^n`, with the default cap.
    pub fn solution_set(&self) -> Result<BTreeSet<BitVec>> {
        self.solution_set_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn solution_set_capped(&self, cap: usize) -> Result<BTreeSet<BitVec>> {
        if self.n > cap || self.n > 63 {
            return Err(Error::TooLarge {
                what: "solution set enumeration",
                size: self.n,
                cap: cap.min(63),
            });
        }
        Ok((0..1u64 << self.n)
            .map(|v| BitVec::from_u64(v, self.n))
            .filter(|x| self.is_satisfied_by(x))
            .collect())
    }

    /// Maps `point` onto the solution set by Gaussian elimination.
    ///
    /// Free (non-pivot) variables keep their input values and pivot variables
    /// are solved for, so members of the solution set are fixed points.
    pub fn project(&self, point: &BitVec) -> Result<BitVec> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: point.len(),
            });
        }
        let (reduced, pivots) = self.rref_with_pivots();
        if reduced.rows.len() > pivots.len() {
            return Err(Error::Inconsistent);
        }
        let mut x = point.clone();
        for (row, &p) in reduced.rows.iter().zip(&pivots) {
            // every other column in an RREF row is free, so order does not matter
            let rest = row.coeffs.dot(&x) ^ x.get(p);
            x.set(p, row.parity ^ rest);
        }
        Ok(x)
    }

    /// Solution set as an affine subspace, or `None` when inconsistent.
    pub fn affine_space(&self) -> Option<AffineSpace> {
        let (reduced, pivots) = self.rref_with_pivots();
        if reduced.rows.len() > pivots.len() {
            return None;
        }
        let mut base = BitVec::zeros(self.n);
        for (row, &p) in reduced.rows.iter().zip(&pivots) {
            base.set(p, row.parity);
        }
        let mut is_pivot = vec![false; self.n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let basis = (0..self.n)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVec::zeros(self.n);
                v.set(free, true);
                for (row, &p) in reduced.rows.iter().zip(&pivots) {
                    if row.coeffs.get(free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect();
        Some(AffineSpace { base, basis })
    }

    /// Parses the textual format: a header `n m` followed by `m` lines of
    /// `n` coefficient digits and one parity digit, whitespace separated.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let nums = parse_usizes(hline, header)?;
        let [n, m] = nums[..] else {
            return Err(Error::parse(hline, "header must be `n m`"));
        };
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, text) = lines
                .next()
                .ok_or_else(|| Error::parse(hline, format!("expected {m} rows")))?;
            let digits = parse_usizes(line, text)?;
            if digits.len() != n + 1 {
                return Err(Error::parse(
                    line,
                    format!("expected {} digits, found {}", n + 1, digits.len()),
                ));
            }
            if digits.iter().any(|&d| d > 1) {
                return Err(Error::parse(line, "digits must be 0 or 1"));
            }
            let coeffs: Vec<bool> = digits[..n].iter().map(|&d| d == 1).collect();
            rows.push(ParityRow::new(BitVec::from_bools(&coeffs), digits[n] == 1));
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::parse(line, "trailing content after last row"));
        }
        Self::from_rows(n, rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for row in &self.rows {
            for i in 0..self.n {
                out.push(if row.coeffs.get(i) { '1' } else { '0' });
                out.push(' ');
            }
            out.push(if row.parity { '1' } else { '0' });
            out.push('\n');
        }
        out
    }
}

fn parse_usizes(line: usize, text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(line, format!("expected an integer, found {t:?}")))
        })
        .collect()
}

/// Advances `idx` to the next `k`-combination of `0..m` in lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: usize, rows: &[(&str, bool)]) -> ParitySystem {
        ParitySystem::from_strs(n, rows).unwrap()
    }

    #[test]
    fn bitvec_basics() {
        let mut v: BitVec = "10110".parse().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 2, 3]);
        v.toggle(0);
        assert_eq!(v.to_string(), "00110");
        let wide = BitVec::ones(130);
        assert_eq!(wide.count_ones(), 130);
        assert_eq!(wide.iter_ones().last(), Some(129));
        assert!(!wide.dot(&wide)); // 130 ones, even
    }

    #[test]
    fn rref_identity_unchanged() {
        let s = sys(3, &[("100", true), ("010", false), ("001", true)]);
        assert_eq!(s.rref(), s);
    }

    #[test]
    fn rref_eliminates_above_pivot() {
        let s = sys(4, &[("1100", false), ("0100", true)]);
        let expected = sys(4, &[("1000", true), ("0100", true)]);
        assert_eq!(s.rref(), expected);
        assert_eq!(s.solution_set().unwrap(), expected.solution_set().unwrap());
    }

    #[test]
    fn rref_flags_contradiction() {
        let s = sys(4, &[("1010", true), ("1010", false)]);
        let r = s.rref();
        assert!(r
            .rows()
            .iter()
            .any(|row| row.coeffs.is_zero() && row.parity));
        assert!(!s.is_consistent());
        assert!(r.solution_set().unwrap().is_empty());
    }

    #[test]
    fn rref_drops_redundant_rows() {
        let s = sys(3, &[("110", true), ("011", false), ("101", true)]);
        let r = s.rref();
        assert_eq!(r.m(), 2);
        assert_eq!(r.solution_set().unwrap(), s.solution_set().unwrap());
    }

    #[test]
    fn consistency_edge_cases() {
        assert!(ParitySystem::empty(4).is_consistent());
        assert!(!sys(4, &[("0000", true)]).is_consistent());
        assert!(sys(4, &[("0000", false)]).is_consistent());
    }

    #[test]
    fn greedy_replaces_densest_row() {
        let s = sys(4, &[("1110", false), ("0111", false)]);
        assert_eq!(s.augmented_norm(), 6);
        let g = s.greedy_sparsify(2).unwrap();
        assert_eq!(g.rows()[0], ParityRow::new("1001".parse().unwrap(), false));
        assert_eq!(g.rows()[1], s.rows()[1]);
        assert_eq!(g.augmented_norm(), 5);
        assert_eq!(g.solution_set().unwrap(), s.solution_set().unwrap());
    }

    #[test]
    fn greedy_leaves_diagonal_and_single_row_alone() {
        let diag = sys(3, &[("100", true), ("010", false), ("001", true)]);
        assert_eq!(diag.greedy_sparsify(4).unwrap(), diag);
        let single = sys(3, &[("111", true)]);
        assert_eq!(single.greedy_sparsify(2).unwrap(), single);
        assert!(single.greedy_sparsify(1).is_err());
    }

    #[test]
    fn solution_set_small_cases() {
        let all = ParitySystem::empty(2).solution_set().unwrap();
        assert_eq!(all.len(), 4);
        let eq = sys(2, &[("11", false)]).solution_set().unwrap();
        assert_eq!(
            eq,
            ["00", "11"].iter().map(|s| s.parse().unwrap()).collect()
        );
        let one = sys(2, &[("11", false), ("01", true)]).solution_set().unwrap();
        assert_eq!(one, ["11"].iter().map(|s| s.parse().unwrap()).collect());
        assert!(matches!(
            ParitySystem::empty(21).solution_set(),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn projection_cases() {
        let s = sys(2, &[("11", false)]);
        let out = s.project(&"01".parse().unwrap()).unwrap();
        assert_eq!(out.to_string(), "11");
        let member: BitVec = "00".parse().unwrap();
        assert_eq!(s.project(&member).unwrap(), member);
        let free: BitVec = "10".parse().unwrap();
        assert_eq!(ParitySystem::empty(2).project(&free).unwrap(), free);
        assert!(matches!(
            sys(2, &[("00", true)]).project(&free),
            Err(Error::Inconsistent)
        ));
        assert!(s.project(&"011".parse().unwrap()).is_err());
    }

    #[test]
    fn affine_space_spans_solution_set() {
        let s = sys(5, &[("11010", true), ("01101", false)]);
        let space = s.affine_space().unwrap();
        assert_eq!(space.basis.len(), 3);
        let mut generated = BTreeSet::new();
        for mask in 0..1u32 << space.basis.len() {
            let mut x = space.base.clone();
            for (k, b) in space.basis.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    x.xor_assign(b);
                }
            }
            generated.insert(x);
        }
        assert_eq!(generated, s.solution_set().unwrap());
        assert!(sys(2, &[("00", true)]).affine_space().is_none());
    }

    #[test]
    fn text_format_round_trip() {
        let s = sys(3, &[("101", true), ("011", false)]);
        let text = s.to_text();
        assert_eq!(text, "3 2\n1 0 1 1\n0 1 1 0\n");
        assert_eq!(ParitySystem::parse_text(&text).unwrap(), s);
        assert!(ParitySystem::parse_text("3 1\n1 0 1\n").is_err());
        assert!(ParitySystem::parse_text("2 1\n1 2 0\n").is_err());
        assert_eq!(ParitySystem::parse_text("4 0\n").unwrap().m(), 0);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }
}
