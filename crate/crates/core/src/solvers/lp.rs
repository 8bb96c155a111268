//! LP relaxations of [`IlpModel`]s.
//!
//! The dense engine is a two-phase bounded-variable primal simplex on a full
//! tableau. Large relaxations go to a sparse revised simplex backend instead.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};

use super::ilp::{IlpModel, Sense};
use super::lp_sparse;

/// Tableau size (rows × columns) above which `Auto` switches to the sparse engine.
pub const DENSE_CELL_LIMIT: usize = 3_000_000;

/// Hard cap on the dense tableau even when requested explicitly (about 800 MB).
pub const DENSE_CELL_CAP: usize = 100_000_000;

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-12;
const DEGENERATE_SWITCH: usize = 50;
const REFRESH_EVERY: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LpEngine {
    #[default]
    Auto,
    Dense,
    Sparse,
}

impl fmt::Display for LpEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpEngine::Auto => "auto",
            LpEngine::Dense => "dense",
            LpEngine::Sparse => "sparse",
        })
    }
}

impl FromStr for LpEngine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => LpEngine::Auto,
            "dense" => LpEngine::Dense,
            "sparse" => LpEngine::Sparse,
            other => return Err(Error::InvalidParameter(format!("unknown LP engine {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptions {
    pub engine: LpEngine,
    /// Primal feasibility and optimality tolerance.
    pub tolerance: f64,
    pub deadline: Option<Instant>,
    /// Pivot cap for the dense engine; `None` picks one from the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            engine: LpEngine::Auto,
            tolerance: 1e-7,
            deadline: None,
            max_iterations: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The deadline passed before the solve finished.
    Interrupted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective including the offset; meaningful only when `Optimal`.
    pub value: f64,
    pub point: Vec<f64>,
    pub iterations: usize,
    /// For `Infeasible` from the dense engine: row multipliers `y` such that
    /// `max yᵀ(Ax + s)` over the variable and slack boxes is below `yᵀb`,
    /// where `s` is the slack (`≥ 0` for `≤` rows, `≤ 0` for `≥` rows, `= 0`
    /// for equalities).
    pub farkas: Option<Vec<f64>>,
}

impl LpResult {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            value: match status {
                LpStatus::Infeasible => f64::NEG_INFINITY,
                LpStatus::Unbounded => f64::INFINITY,
                _ => f64::NAN,
            },
            point: Vec::new(),
            iterations,
            farkas: None,
        }
    }
}

pub fn solve_lp(ilp: &IlpModel, opts: &LpOptions) -> Result<LpResult> {
    solve_lp_bounded(ilp, &[], opts)
}

/// Solves the relaxation with some variable bounds replaced by
/// `(var, lower, upper)` overrides.
pub fn solve_lp_bounded(ilp: &IlpModel, overrides: &[(usize, f64, f64)], opts: &LpOptions) -> Result<LpResult> {
    let mut lower: Vec<f64> = ilp.vars.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = ilp.vars.iter().map(|v| v.upper).collect();
    for &(v, lo, hi) in overrides {
        if v >= lower.len() {
            return Err(Error::InvalidParameter(format!("bound override for unknown variable {v}")));
        }
        lower[v] = lower[v].max(lo);
        upper[v] = upper[v].min(hi);
    }
    for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "LP variable {} needs finite bounds",
                ilp.vars[j].name
            )));
        }
        if lo > hi {
            return Ok(LpResult::without_point(LpStatus::Infeasible, 0));
        }
    }
    // rows without terms are decided here so the engines never see them
    let mut rows = Vec::with_capacity(ilp.constraints.len());
    for (i, c) in ilp.constraints.iter().enumerate() {
        if c.terms.iter().all(|&(_, a)| a == 0.0) {
            let violated = match c.sense {
                Sense::Le => c.rhs < -opts.tolerance,
                Sense::Eq => c.rhs.abs() > opts.tolerance,
                Sense::Ge => c.rhs > opts.tolerance,
            };
            if violated {
                let mut y = vec![0.0; ilp.constraints.len()];
                y[i] = if c.rhs > 0.0 { 1.0 } else { -1.0 };
                let mut r = LpResult::without_point(LpStatus::Infeasible, 0);
                r.farkas = Some(y);
                return Ok(r);
            }
        } else {
            rows.push(i);
        }
    }
    let cells = rows.len() * (ilp.vars.len() + 2 * rows.len() + 1);
    let engine = match opts.engine {
        LpEngine::Auto => {
            if cells <= DENSE_CELL_LIMIT {
                LpEngine::Dense
            } else {
                LpEngine::Sparse
            }
        }
        LpEngine::Dense if cells > DENSE_CELL_CAP => {
            return Err(Error::TooLarge {
                what: "dense simplex tableau",
                size: cells,
                cap: DENSE_CELL_CAP,
            })
        }
        e => e,
    };
    match engine {
        LpEngine::Sparse => lp_sparse::solve(ilp, &rows, &lower, &upper, opts),
        _ => {
            let mut result = DenseSimplex::new(ilp, &rows, lower, upper, opts).run()?;
            if let Some(y) = result.farkas.take() {
                let mut full = vec![0.0; ilp.constraints.len()];
                for (k, &i) in rows.iter().enumerate() {
                    full[i] = y[k];
                }
                result.farkas = Some(full);
            }
            Ok(result)
        }
    }
}

/// Checks a Farkas certificate returned for an infeasible relaxation.
pub fn verify_farkas(ilp: &IlpModel, overrides: &[(usize, f64, f64)], y: &[f64], tol: f64) -> bool {
    if y.len() != ilp.constraints.len() {
        return false;
    }
    let mut coef = vec![0.0; ilp.vars.len()];
    let mut rhs = 0.0;
    let mut slack_max = 0.0;
    for (c, &yi) in ilp.constraints.iter().zip(y) {
        if yi == 0.0 {
            continue;
        }
        for &(v, a) in &c.terms {
            coef[v] += yi * a;
        }
        rhs += yi * c.rhs;
        let (slo, shi) = slack_bounds(c.sense);
        slack_max += if yi > 0.0 { yi * shi } else { yi * slo };
    }
    let mut max = slack_max;
    for (j, v) in ilp.vars.iter().enumerate() {
        let (mut lo, mut hi) = (v.lower, v.upper);
        for &(k, l, h) in overrides {
            if k == j {
                lo = lo.max(l);
                hi = hi.min(h);
            }
        }
        max += if coef[j] > 0.0 { coef[j] * hi } else { coef[j] * lo };
    }
    max < rhs - tol
}

fn slack_bounds(sense: Sense) -> (f64, f64) {
    match sense {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Eq => (0.0, 0.0),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
    }
}

/// Full-tableau bounded primal simplex.
///
/// Columns are structural variables, then one slack per row, then
/// artificials; a final column holds `B⁻¹b`. Every variable, basic or not,
/// has its current value in `x`.
struct DenseSimplex<'a> {
    ilp: &'a IlpModel,
    rows: &'a [usize],
    m: usize,
    n: usize,
    ncols: usize,
    width: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    first_art: usize,
    tol: f64,
    deadline: Option<Instant>,
    max_iter: usize,
    iterations: usize,
}

enum Phase {
    Done,
    Unbounded,
    Interrupted,
}

impl<'a> DenseSimplex<'a> {
    fn new(ilp: &'a IlpModel, rows: &'a [usize], lower: Vec<f64>, upper: Vec<f64>, opts: &LpOptions) -> Self {
        let n = ilp.vars.len();
        let m = rows.len();
        let x0 = lower.clone();
        let mut resid = Vec::with_capacity(m);
        let mut need_art = 0;
        for &i in rows {
            let c = &ilp.constraints[i];
            let r = c.rhs - c.terms.iter().map(|&(v, a)| a * x0[v]).sum::<f64>();
            let (slo, shi) = slack_bounds(c.sense);
            let s0 = r.clamp(slo, shi);
            if (r - s0).abs() > opts.tolerance {
                need_art += 1;
            }
            resid.push((r, s0));
        }
        let ncols = n + m + need_art;
        let width = ncols + 1;
        let mut me = Self {
            ilp,
            rows,
            m,
            n,
            ncols,
            width,
            t: vec![0.0; m * width],
            lo: Vec::with_capacity(ncols),
            hi: Vec::with_capacity(ncols),
            x: vec![0.0; ncols],
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            basis: vec![0; m],
            row_of: vec![usize::MAX; ncols],
            first_art: n + m,
            tol: opts.tolerance,
            deadline: opts.deadline,
            max_iter: opts.max_iterations.unwrap_or(200 * (m + ncols) + 10_000),
            iterations: 0,
        };
        me.lo.extend(&lower);
        me.hi.extend(&upper);
        me.x[..n].copy_from_slice(&x0);
        for &i in rows {
            let (slo, shi) = slack_bounds(ilp.constraints[i].sense);
            me.lo.push(slo);
            me.hi.push(shi);
        }
        me.lo.resize(ncols, 0.0);
        me.hi.resize(ncols, f64::INFINITY);
        let mut art = n + m;
        for (k, &i) in rows.iter().enumerate() {
            let c = &ilp.constraints[i];
            let row = &mut me.t[k * width..(k + 1) * width];
            for &(v, a) in &c.terms {
                row[v] += a;
            }
            row[n + k] = 1.0;
            row[ncols] = c.rhs;
            let (r, s0) = resid[k];
            if (r - s0).abs() > opts.tolerance {
                let sigma = if r > s0 { 1.0 } else { -1.0 };
                row[art] = sigma;
                if sigma < 0.0 {
                    row.iter_mut().for_each(|e| *e = -*e);
                }
                me.x[n + k] = s0;
                me.x[art] = (r - s0).abs();
                me.basis[k] = art;
                me.row_of[art] = k;
                me.cost[art] = -1.0;
                art += 1;
            } else {
                me.x[n + k] = r;
                me.basis[k] = n + k;
                me.row_of[n + k] = k;
            }
        }
        me
    }

    #[inline]
    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.width + j]
    }

    fn run(mut self) -> Result<LpResult> {
        if self.first_art < self.ncols {
            self.recompute_reduced_costs();
            match self.iterate()? {
                Phase::Interrupted => return Ok(LpResult::without_point(LpStatus::Interrupted, self.iterations)),
                Phase::Unbounded => return Err(Error::Numerical("phase 1 reported unbounded".into())),
                Phase::Done => {}
            }
            let infeasibility: f64 = (self.first_art..self.ncols).map(|j| self.x[j]).sum();
            if infeasibility > self.tol * (1.0 + self.m as f64).sqrt() * 10.0 {
                let mut r = LpResult::without_point(LpStatus::Infeasible, self.iterations);
                r.farkas = self.farkas();
                return Ok(r);
            }
            self.drive_out_artificials();
        }
        self.cost = vec![0.0; self.ncols];
        for &(v, c) in &self.ilp.objective {
            self.cost[v] += c;
        }
        self.recompute_reduced_costs();
        match self.iterate()? {
            Phase::Interrupted => Ok(LpResult::without_point(LpStatus::Interrupted, self.iterations)),
            Phase::Unbounded => Ok(LpResult::without_point(LpStatus::Unbounded, self.iterations)),
            Phase::Done => {
                let point = self.x[..self.n].to_vec();
                Ok(LpResult {
                    status: LpStatus::Optimal,
                    value: self.ilp.objective_value(&point),
                    point,
                    iterations: self.iterations,
                    farkas: None,
                })
            }
        }
    }

    /// Phase-1 row duals `y = −d_slack`, signed so that they certify
    /// infeasibility; `None` if the check fails numerically.
    fn farkas(&self) -> Option<Vec<f64>> {
        let y: Vec<f64> = (0..self.m).map(|k| -self.d[self.n + k]).collect();
        let mut coef = vec![0.0; self.n];
        let mut rhs = 0.0;
        let (mut max, mut min) = (0.0, 0.0);
        for (k, &yk) in y.iter().enumerate() {
            if yk == 0.0 {
                continue;
            }
            let c = &self.ilp.constraints[self.rows[k]];
            let (slo, shi) = (self.lo[self.n + k], self.hi[self.n + k]);
            max += if yk > 0.0 { yk * shi } else { yk * slo };
            min += if yk > 0.0 { yk * slo } else { yk * shi };
            rhs += yk * c.rhs;
            for &(v, a) in &c.terms {
                coef[v] += yk * a;
            }
        }
        for (j, &cj) in coef.iter().enumerate() {
            max += if cj > 0.0 { cj * self.hi[j] } else { cj * self.lo[j] };
            min += if cj > 0.0 { cj * self.lo[j] } else { cj * self.hi[j] };
        }
        let margin = 1e-9 * (1.0 + rhs.abs());
        if max < rhs - margin {
            Some(y)
        } else if min > rhs + margin {
            Some(y.into_iter().map(|v| -v).collect())
        } else {
            None
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.d[..].copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let base = r * self.width;
            for j in 0..self.ncols {
                self.d[j] -= cb * self.t[base + j];
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Recomputes basic values from `B⁻¹b` and the nonbasic values.
    fn refresh_basics(&mut self) {
        let nonbasic: Vec<(usize, f64)> = (0..self.ncols)
            .filter(|&j| self.row_of[j] == usize::MAX && self.x[j] != 0.0)
            .map(|j| (j, self.x[j]))
            .collect();
        for r in 0..self.m {
            let row = self.row(r);
            let mut v = row[self.ncols];
            for &(j, xj) in &nonbasic {
                v -= row[j] * xj;
            }
            let b = self.basis[r];
            self.x[b] = v;
        }
    }

    fn eligible(&self, j: usize) -> Option<f64> {
        if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
            return None;
        }
        let dj = self.d[j];
        if dj > self.tol && self.x[j] < self.hi[j] {
            Some(1.0)
        } else if dj < -self.tol && self.x[j] > self.lo[j] {
            Some(-1.0)
        } else {
            None
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if let Some(dir) = self.eligible(j) {
                if bland {
                    return Some((j, dir));
                }
                let score = self.d[j].abs();
                if score > best_score {
                    best_score = score;
                    best = Some((j, dir));
                }
            }
        }
        best
    }

    fn iterate(&mut self) -> Result<Phase> {
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        let mut verified = false;
        loop {
            if self.iterations >= self.max_iter {
                return Err(Error::Numerical(format!(
                    "simplex hit its iteration limit ({}) on a {}x{} tableau",
                    self.max_iter, self.m, self.ncols
                )));
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(deadline) = self.deadline {
                    if Instant::now() >= deadline {
                        return Ok(Phase::Interrupted);
                    }
                }
            }
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let Some((q, dir)) = self.choose_entering(bland) else {
                if verified {
                    return Ok(Phase::Done);
                }
                // confirm optimality against freshly computed quantities
                self.recompute_reduced_costs();
                self.refresh_basics();
                since_refresh = 0;
                verified = true;
                continue;
            };
            verified = false;
            self.iterations += 1;

            // ratio test: entering moves by t·dir, basic r moves by −t·dir·T[r][q]
            let mut limit = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for r in 0..self.m {
                let a = self.at(r, q);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = -dir * a;
                let b = self.basis[r];
                let (ratio, to_upper) = if delta < 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / -delta).max(0.0), false)
                } else {
                    if self.hi[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.hi[b] - self.x[b]) / delta).max(0.0), true)
                };
                let better = match leave {
                    _ if ratio < limit - 1e-12 => true,
                    Some((lr, _)) if ratio <= limit + 1e-12 => {
                        if bland {
                            b < self.basis[lr]
                        } else {
                            a.abs() > leave_mag
                        }
                    }
                    _ => false,
                };
                if better {
                    limit = ratio.min(limit);
                    leave = Some((r, to_upper));
                    leave_mag = a.abs();
                }
            }
            if limit == f64::INFINITY {
                return Ok(Phase::Unbounded);
            }
            if limit <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            let step = limit * dir;
            if step != 0.0 {
                for r in 0..self.m {
                    let a = self.at(r, q);
                    if a != 0.0 {
                        let b = self.basis[r];
                        self.x[b] -= step * a;
                    }
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((p, to_upper)) => {
                    self.x[q] += step;
                    let b = self.basis[p];
                    self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    self.pivot(p, q);
                    since_refresh += 1;
                    if since_refresh >= REFRESH_EVERY {
                        self.refresh_basics();
                        since_refresh = 0;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.t[p * w + q];
        {
            let prow = &mut self.t[p * w..(p + 1) * w];
            for e in prow.iter_mut() {
                if *e != 0.0 {
                    *e /= piv;
                }
            }
            prow[q] = 1.0;
        }
        let nz: Vec<usize> = (0..w).filter(|&j| self.t[p * w + j] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&j| self.t[p * w + j]).collect();
        for r in 0..self.m {
            if r == p {
                continue;
            }
            let f = self.t[r * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (&j, &v) in nz.iter().zip(&prow) {
                let e = row[j] - f * v;
                row[j] = if e.abs() < DROP_TOL { 0.0 } else { e };
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (&j, &v) in nz.iter().zip(&prow) {
                if j < self.ncols {
                    self.d[j] -= dq * v;
                }
            }
            self.d[q] = 0.0;
        }
        let old = self.basis[p];
        self.row_of[old] = usize::MAX;
        self.basis[p] = q;
        self.row_of[q] = p;
    }

    /// Pivots zero-valued basic artificials out where possible and pins every
    /// artificial to zero for phase 2.
    fn drive_out_artificials(&mut self) {
        for p in 0..self.m {
            let b = self.basis[p];
            if b < self.first_art {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut best_mag = PIVOT_TOL * 1e3;
            for j in 0..self.first_art {
                if self.row_of[j] != usize::MAX {
                    continue;
                }
                let a = self.at(p, j).abs();
                if a > best_mag {
                    best_mag = a;
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                // degenerate pivot; basics are recomputed below
                self.x[b] = 0.0;
                self.pivot(p, q);
            }
        }
        for j in self.first_art..self.ncols {
            self.lo[j] = 0.0;
            self.hi[j] = 0.0;
            if self.row_of[j] == usize::MAX {
                self.x[j] = 0.0;
            }
        }
        self.refresh_basics();
    }
}
