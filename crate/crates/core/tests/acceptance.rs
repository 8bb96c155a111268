//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion straight to stdout (bypassing the capture) and then asserts.
//!
//! Criteria 11 and 12 run reduced budgets by default; set
//! `XORWISH_ACCEPTANCE_FULL=1` for the long configuration.

use std::io::Write as _;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xorwish::gf2::{BitVec, ParityRow, ParitySystem};
use xorwish::harness::{sparsification_sweep, write_sweep, SweepOptions, SweepRow};
use xorwish::hashing::{independence_audit, HashFamily, HashFamilySpec};
use xorwish::model::{build_ising_grid, exact_log_partition, exact_map_with_parity, FactorGraph, GridSpec};
use xorwish::solvers::{
    branch_and_bound, build_ilp, parity_message_update, BnbOptions, BruteSolver, Budget, Encoding, EncodingPolicy,
    IlpModel, MapStatus, Semiring, Sense, SolverKind,
};
use xorwish::wish::{compute_t, level_quantiles, sample_query_system, wish_run, Mode, Preprocess, WishConfig};

const LN16: f64 = 2.772588722239781;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("criterion {id:>2} {} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn full_run() -> bool {
    std::env::var("XORWISH_ACCEPTANCE_FULL").is_ok_and(|v| v == "1")
}

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn grid(side: usize, field: f64, seed: u64) -> FactorGraph {
    build_ising_grid(&GridSpec { side, field, coupling: 3.0, seed }).unwrap()
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, max_len: usize) -> ParitySystem {
    let rows = (0..m)
        .map(|_| {
            let len = rng.random_range(1..=max_len.min(n));
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..len {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            let mut coeffs = BitVec::zeros(n);
            for &i in &idx[..len] {
                coeffs.set(i, true);
            }
            ParityRow::new(coeffs, rng.random())
        })
        .collect();
    ParitySystem::from_rows(n, rows).unwrap()
}

// ---------------------------------------------------------------------------
// Integer-feasibility oracle for encodings: fix the μ indicators, split the
// remaining variables into independent components, and search each one.

struct Feasibility<'a> {
    ilp: &'a IlpModel,
    components: Vec<Vec<usize>>,
    /// Constraints with no free variable at all.
    fixed_only: Vec<usize>,
    var_cons: Vec<Vec<(usize, f64)>>,
}

impl<'a> Feasibility<'a> {
    fn new(ilp: &'a IlpModel) -> Self {
        let nv = ilp.vars.len();
        let is_mu: Vec<bool> = (0..nv).map(|v| ilp.mu_index.contains(&v)).collect();
        let free = |v: usize| !is_mu[v] && ilp.vars[v].lower < ilp.vars[v].upper;
        for v in 0..nv {
            if free(v) {
                assert!(ilp.vars[v].integral, "continuous auxiliary variable {}", ilp.vars[v].name);
            }
        }
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        let mut var_cons = vec![Vec::new(); nv];
        let mut fixed_only = Vec::new();
        for (ci, c) in ilp.constraints.iter().enumerate() {
            let frees: Vec<usize> = c.terms.iter().map(|t| t.0).filter(|&v| free(v)).collect();
            if frees.is_empty() {
                fixed_only.push(ci);
            }
            for w in frees.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
            for &(v, a) in &c.terms {
                var_cons[v].push((ci, a));
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in (0..nv).filter(|&v| free(v)) {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        Self {
            ilp,
            components: groups.into_values().collect(),
            fixed_only,
            var_cons,
        }
    }

    fn feasible_at(&self, x: &BitVec) -> bool {
        let ilp = self.ilp;
        let mut lo: Vec<f64> = ilp.vars.iter().map(|v| v.lower).collect();
        let mut hi: Vec<f64> = ilp.vars.iter().map(|v| v.upper).collect();
        for (i, &v) in ilp.mu_index.iter().enumerate() {
            let val = if x.get(i) { 1.0 } else { 0.0 };
            if val < lo[v] || val > hi[v] {
                return false;
            }
            lo[v] = val;
            hi[v] = val;
        }
        let activity = |lo: &[f64], hi: &[f64], ci: usize| -> (f64, f64) {
            ilp.constraints[ci].terms.iter().fold((0.0, 0.0), |(a, b), &(v, c)| {
                if c >= 0.0 {
                    (a + c * lo[v], b + c * hi[v])
                } else {
                    (a + c * hi[v], b + c * lo[v])
                }
            })
        };
        let ok = |ci: usize, min: f64, max: f64| -> bool {
            let c = &ilp.constraints[ci];
            let eps = 1e-9;
            match c.sense {
                Sense::Le => min <= c.rhs + eps,
                Sense::Ge => max >= c.rhs - eps,
                Sense::Eq => min <= c.rhs + eps && max >= c.rhs - eps,
            }
        };
        for &ci in &self.fixed_only {
            let (a, b) = activity(&lo, &hi, ci);
            if !ok(ci, a, b) {
                return false;
            }
        }
        for comp in &self.components {
            let cons: Vec<usize> = {
                let mut c: Vec<usize> = comp.iter().flat_map(|&v| self.var_cons[v].iter().map(|t| t.0)).collect();
                c.sort_unstable();
                c.dedup();
                c
            };
            let mut min = vec![0.0; ilp.constraints.len()];
            let mut max = vec![0.0; ilp.constraints.len()];
            for &ci in &cons {
                (min[ci], max[ci]) = activity(&lo, &hi, ci);
                if !ok(ci, min[ci], max[ci]) {
                    return false;
                }
            }
            if !self.search(comp, 0, &mut lo, &mut hi, &mut min, &mut max, &ok) {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        comp: &[usize],
        depth: usize,
        lo: &mut [f64],
        hi: &mut [f64],
        min: &mut [f64],
        max: &mut [f64],
        ok: &dyn Fn(usize, f64, f64) -> bool,
    ) -> bool {
        let Some(&v) = comp.get(depth) else { return true };
        let (l, h) = (lo[v], hi[v]);
        let mut val = l.ceil();
        while val <= h.floor() {
            let mut good = true;
            for &(ci, c) in &self.var_cons[v] {
                let (dmin, dmax) = if c >= 0.0 { (c * (val - l), c * (val - h)) } else { (c * (val - h), c * (val - l)) };
                min[ci] += dmin;
                max[ci] += dmax;
                good &= ok(ci, min[ci], max[ci]);
            }
            lo[v] = val;
            hi[v] = val;
            let found = good && self.search(comp, depth + 1, lo, hi, min, max, ok);
            lo[v] = l;
            hi[v] = h;
            for &(ci, c) in &self.var_cons[v] {
                let (dmin, dmax) = if c >= 0.0 { (c * (val - l), c * (val - h)) } else { (c * (val - h), c * (val - l)) };
                min[ci] -= dmin;
                max[ci] -= dmax;
            }
            if found {
                return true;
            }
            val += 1.0;
        }
        false
    }
}

#[test]
fn c01_encoding_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(0..=4);
        let sys = random_system(&mut rng, n, m, 6);
        let model = FactorGraph::new(vec![[0.0, 0.0]; n], vec![]).unwrap();
        let truth = sys.solution_set().unwrap();
        for enc in [Encoding::Jeroslow, Encoding::Feldman, Encoding::Yannakakis] {
            let ilp = build_ilp(&model, &sys, EncodingPolicy::Fixed(enc)).unwrap();
            let oracle = Feasibility::new(&ilp);
            let projected: std::collections::BTreeSet<BitVec> = (0..1u64 << n)
                .map(|c| BitVec::from_u64(c, n))
                .filter(|x| oracle.feasible_at(x))
                .collect();
            if projected != truth {
                mismatches.push(format!("case {case} {enc:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "encoding equivalence",
        mismatches.is_empty() && elapsed < Duration::from_secs(60),
        &format!("300 encodings checked, {} mismatches {:?}, {:.1?}", mismatches.len(), mismatches, elapsed),
    );
}

#[test]
fn c02_sparsification_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = Vec::new();
    for case in 0..200 {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(0..=n + 2);
        let sys = random_system(&mut rng, n, m, n);
        let truth = sys.solution_set().unwrap();
        let reduced = sys.rref();
        if reduced.solution_set().unwrap() != truth {
            failures.push(format!("case {case}: rref"));
        }
        for input in [&sys, &reduced] {
            let greedy = input.greedy_sparsify(4).unwrap();
            if greedy.solution_set().unwrap() != truth {
                failures.push(format!("case {case}: greedy solution set"));
            }
            if greedy.augmented_norm() > input.augmented_norm() {
                failures.push(format!("case {case}: greedy norm grew"));
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        "sparsification soundness",
        failures.is_empty() && elapsed < Duration::from_secs(60),
        &format!("200 systems, failures {failures:?}, {elapsed:.1?}"),
    );
}

struct OracleRun {
    label: String,
    lower: f64,
    upper: f64,
    status: MapStatus,
    oracle: f64,
    incumbent_ok: bool,
    events_monotone: bool,
}

/// Suite 3's runs, shared with criterion 4.
fn solver_suite() -> &'static (Vec<OracleRun>, Duration) {
    static SUITE: OnceLock<(Vec<OracleRun>, Duration)> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let mut runs = Vec::new();
        for inst in 0..50u64 {
            let side = if inst % 2 == 0 { 3 } else { 4 };
            let field = if inst / 2 % 2 == 0 { 0.1 } else { 1.0 };
            let g = grid(side, field, inst);
            let n = g.n();
            let mut rng = ChaCha8Rng::seed_from_u64(inst);
            let m = rng.random_range(0..=n);
            let sys = sample_query_system(HashFamily::Toeplitz, n, m, 1, 3000 + inst).unwrap().rref();
            let oracle = exact_map_with_parity(&g, &sys).unwrap();
            let ilp = build_ilp(&g, &sys, EncodingPolicy::Auto).unwrap();
            let out = branch_and_bound(&ilp, &g, &sys, &BnbOptions::default()).unwrap();
            let r = &out.result;
            runs.push(OracleRun {
                label: format!("{side}x{side} f={field} seed={inst} m={m}"),
                lower: r.lower,
                upper: r.upper,
                status: r.status,
                oracle: oracle.lower,
                incumbent_ok: r
                    .incumbent
                    .as_ref()
                    .is_none_or(|x| sys.is_satisfied_by(x) && (g.log_weight(x).unwrap() - r.lower).abs() < 1e-9),
                events_monotone: out
                    .events
                    .windows(2)
                    .all(|w| w[1].upper <= w[0].upper && w[1].lower >= w[0].lower),
            });
        }
        (runs, start.elapsed())
    })
}

#[test]
fn c03_solver_oracle_agreement() {
    let (runs, elapsed) = solver_suite();
    let bad: Vec<&str> = runs
        .iter()
        .filter(|r| {
            let closed = matches!(r.status, MapStatus::Optimal | MapStatus::Infeasible);
            let matches = if r.oracle == f64::NEG_INFINITY {
                r.lower == f64::NEG_INFINITY && r.status == MapStatus::Infeasible
            } else {
                (r.lower - r.oracle).abs() <= 1e-6 && (r.upper - r.oracle).abs() <= 1e-6
            };
            !(closed && matches)
        })
        .map(|r| r.label.as_str())
        .collect();
    report(
        3,
        "solver-oracle agreement",
        runs.len() == 50 && bad.is_empty() && *elapsed < Duration::from_secs(600),
        &format!("{} instances, {} mismatches {:?}, {:.1?}", runs.len(), bad.len(), bad, elapsed),
    );
}

#[test]
fn c04_anytime_contract() {
    let (runs, _) = solver_suite();
    let non_monotone = runs.iter().filter(|r| !r.events_monotone).count();
    let bad_incumbents = runs.iter().filter(|r| !r.incumbent_ok).count();
    report(
        4,
        "anytime contract",
        non_monotone == 0 && bad_incumbents == 0,
        &format!("{} event logs, {non_monotone} non-monotone, {bad_incumbents} incumbents violating parity", runs.len()),
    );
}

fn table_marginalization(incoming: &[[f64; 2]], parity: bool, sr: Semiring) -> Vec<[f64; 2]> {
    let k = incoming.len();
    let plus = |a: f64, b: f64| match sr {
        Semiring::Sum => a + b,
        Semiring::Max => a.max(b),
    };
    let mut out = vec![[0.0; 2]; k];
    for code in 0u32..1 << k {
        if (code.count_ones() % 2 == 1) != parity {
            continue;
        }
        for (l, slot) in out.iter_mut().enumerate() {
            let prod: f64 = (0..k).filter(|&j| j != l).map(|j| incoming[j][(code >> j & 1) as usize]).product();
            let x = (code >> l & 1) as usize;
            slot[x] = plus(slot[x], prod);
        }
    }
    out
}

#[test]
fn c05_parity_dp() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    let mut sets = 0;
    for trial in 0..500 {
        let k = 1 + trial % 10;
        let incoming: Vec<[f64; 2]> = (0..k).map(|_| [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)]).collect();
        let parity = rng.random();
        for sr in [Semiring::Sum, Semiring::Max] {
            let fast = parity_message_update(&incoming, parity, sr);
            let slow = table_marginalization(&incoming, parity, sr);
            for (a, b) in fast.iter().zip(&slow) {
                for x in 0..2 {
                    let scale = a[x].abs().max(b[x].abs());
                    if scale > 0.0 {
                        worst = worst.max((a[x] - b[x]).abs() / scale);
                    }
                }
            }
        }
        sets += 1;
    }
    let elapsed = start.elapsed();
    report(
        5,
        "parity DP correctness",
        worst <= 1e-9 && elapsed < Duration::from_secs(60),
        &format!("{sets} message sets x 2 semirings, worst relative error {worst:.2e}, {elapsed:.1?}"),
    );
}

#[test]
fn c06_hash_family_audits() {
    let start = Instant::now();
    let dense = independence_audit(&HashFamilySpec::new(HashFamily::Dense, 3, 2).unwrap()).unwrap();
    let toeplitz = independence_audit(&HashFamilySpec::new(HashFamily::Toeplitz, 3, 2).unwrap()).unwrap();
    let sparse = independence_audit(&HashFamilySpec::new(HashFamily::Sparse { k: 2 }, 6, 2).unwrap()).unwrap();
    let pass = dense.members == 256
        && dense.pairwise_independent()
        && toeplitz.members == 64
        && toeplitz.pairwise_independent()
        && sparse.marginals_uniform
        && start.elapsed() < Duration::from_secs(60);
    report(
        6,
        "hash-family audits",
        pass,
        &format!(
            "dense {} members pairwise={}, toeplitz {} members pairwise={}, sparse:2 {} members uniform marginals={} ({} non-uniform pairs), {:.1?}",
            dense.members,
            dense.pairwise_independent(),
            toeplitz.members,
            toeplitz.pairwise_independent(),
            sparse.members,
            sparse.marginals_uniform,
            sparse.nonuniform_pairs.len(),
            start.elapsed()
        ),
    );
}

/// `(log estimate − log Z)` for each of `seeds` runs on alternating 4×4 grids.
fn wish_errors(seeds: u64, config: &WishConfig) -> Vec<f64> {
    (0..seeds)
        .map(|s| {
            let g = grid(4, if s % 2 == 0 { 0.1 } else { 1.0 }, s);
            let z = exact_log_partition(&g).unwrap();
            let est = wish_run(&g, &WishConfig { seed: 7000 + s, ..config.clone() }).unwrap();
            est.log_estimate - z
        })
        .collect()
}

fn describe(errors: &[f64]) -> String {
    let mut e = errors.to_vec();
    e.sort_by(f64::total_cmp);
    format!("error range [{:.3}, {:.3}], median {:.3}", e[0], e[e.len() - 1], e[(e.len() - 1) / 2])
}

#[test]
fn c07_wish_sixteen_approximation() {
    let start = Instant::now();
    let config = WishConfig {
        delta: 0.1,
        alpha: 0.125,
        family: HashFamily::Toeplitz,
        mode: Mode::Exact,
        solver: SolverKind::Brute,
        ..Default::default()
    };
    assert_eq!(compute_t(0.1, 0.125, 16).unwrap(), 52);
    let errors = wish_errors(20, &config);
    let hits = errors.iter().filter(|e| e.abs() <= LN16).count();
    report(
        7,
        "WISH 16-approximation (alpha = 1/8 desk-scale regime, T = 52)",
        hits * 10 >= errors.len() * 9,
        &format!("{hits}/{} runs within ln 16; {}; {:.1?}", errors.len(), describe(&errors), start.elapsed()),
    );
}

#[test]
fn c08_short_xor_lower_bound() {
    let start = Instant::now();
    let config = WishConfig {
        delta: 0.1,
        alpha: 0.125,
        family: HashFamily::Sparse { k: 4 },
        mode: Mode::ShortXor,
        solver: SolverKind::Brute,
        ..Default::default()
    };
    let errors = wish_errors(40, &config);
    let hits = errors.iter().filter(|&&e| e <= LN16).count();
    let below = errors.iter().filter(|&&e| e <= 0.0).count();
    report(
        8,
        "short-XOR lower-bound contract (k = 4)",
        hits * 100 >= errors.len() * 95,
        &format!(
            "{hits}/{} runs <= log Z + ln 16, {below} <= log Z; {}; {:.1?}",
            errors.len(),
            describe(&errors),
            start.elapsed()
        ),
    );
}

#[test]
fn c09_upper_bound_mode() {
    let start = Instant::now();
    let config = WishConfig {
        delta: 0.1,
        alpha: 0.125,
        family: HashFamily::Toeplitz,
        mode: Mode::UpperBound,
        solver: SolverKind::RootLp,
        ..Default::default()
    };
    let errors = wish_errors(20, &config);
    let hits = errors.iter().filter(|&&e| e >= -LN16).count();
    report(
        9,
        "upper-bound mode validity (root LP only)",
        hits * 10 >= errors.len() * 9,
        &format!("{hits}/{} runs >= log Z - ln 16; {}; {:.1?}", errors.len(), describe(&errors), start.elapsed()),
    );
}

#[test]
fn c10_level_quantile_bound() {
    let start = Instant::now();
    let g = grid(3, 1.0, 0);
    let b = level_quantiles(&g).unwrap();
    let brute = BruteSolver::new(&g).unwrap();
    let mut worst = (1.0f64, String::new());
    let mut lines = Vec::new();
    for family in [HashFamily::Dense, HashFamily::Toeplitz, HashFamily::Sparse { k: 4 }] {
        let mut family_worst = 1.0f64;
        for i in 2..=g.n() {
            let hits = (1..=200)
                .filter(|&t| {
                    let sys = sample_query_system(family, g.n(), i, t, 10_000).unwrap();
                    brute.solve(&sys).unwrap().lower <= b[i - 2] + 1e-12
                })
                .count();
            let rate = hits as f64 / 200.0;
            family_worst = family_worst.min(rate);
            if rate < worst.0 {
                worst = (rate, format!("{family} level {i}"));
            }
        }
        lines.push(format!("{family} min rate {family_worst:.3}"));
    }
    report(
        10,
        "level quantile bound Pr[w_i <= b_(i-2)] >= 0.70",
        worst.0 >= 0.70 && start.elapsed() < Duration::from_secs(600),
        &format!("{}; worst at {}; {:.1?}", lines.join(", "), worst.1, start.elapsed()),
    );
}

#[test]
fn c11_large_grid_sandwich() {
    let start = Instant::now();
    let full = full_run();
    let (fields, seeds, t, budget, lower_solver) = if full {
        (
            vec![0.1, 1.0],
            env_or("XORWISH_C11_SEEDS", 2u64),
            env_or("XORWISH_C11_T", 1usize),
            env_or("XORWISH_C11_BUDGET", 600.0f64),
            SolverKind::BranchAndBound,
        )
    } else {
        (vec![1.0], 1, 1, 1.0, SolverKind::MessagePassing)
    };
    let mut report_text = format!(
        "# 10x10 grids, coupling 3.0, T = {t}, per-query budget {budget} s, lower solver {lower_solver}, upper solver lp\n# field seed exact lower_est upper_est lower_gap upper_gap\n"
    );
    let mut all_ok = true;
    let mut summary = Vec::new();
    for &field in &fields {
        let g = grid(10, field, 0);
        let z = exact_log_partition(&g).unwrap();
        for s in 0..seeds {
            let base = WishConfig {
                t_override: Some(t),
                family: HashFamily::Toeplitz,
                budget: Budget::seconds(budget),
                preprocess: Preprocess::Rref,
                seed: 500 + s,
                ..Default::default()
            };
            let lower = wish_run(&g, &WishConfig { mode: Mode::LowerBound, solver: lower_solver, ..base.clone() }).unwrap();
            let upper = wish_run(&g, &WishConfig { mode: Mode::UpperBound, solver: SolverKind::RootLp, ..base.clone() }).unwrap();
            let ok = lower.log_estimate <= z + LN16 && upper.log_estimate >= z - LN16;
            all_ok &= ok;
            report_text.push_str(&format!(
                "{field} {} {z} {} {} {} {}\n",
                500 + s,
                lower.log_estimate,
                upper.log_estimate,
                z - lower.log_estimate,
                upper.log_estimate - z
            ));
            summary.push(format!(
                "f={field}: exact {z:.2}, lower {:.2}, upper {:.2}",
                lower.log_estimate, upper.log_estimate
            ));
        }
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_c11_gaps.txt");
    std::fs::write(&path, &report_text).unwrap();
    report(
        11,
        if full { "10x10 sandwich (full budgets)" } else { "10x10 sandwich (reduced budgets)" },
        all_ok,
        &format!("{}; report {}; {:.1?}", summary.join("; "), path.display(), start.elapsed()),
    );
}

#[test]
fn c12_sparsification_sweep() {
    let start = Instant::now();
    let full = full_run();
    let g = grid(10, 1.0, 0);
    let (ms, opts): (Vec<usize>, SweepOptions) = if full {
        (
            (0..=100).step_by(5).collect(),
            SweepOptions {
                budget: Budget::seconds(env_or("XORWISH_C12_BUDGET", 600.0)),
                repetitions: env_or("XORWISH_C12_REPS", 3),
                seed: 12,
                ..Default::default()
            },
        )
    } else {
        (vec![5, 20, 50, 80], SweepOptions { budget: Budget::seconds(10.0), repetitions: 1, seed: 12, ..Default::default() })
    };
    let rows = sparsification_sweep(&g, &ms, &opts).unwrap();
    let rate = |m: usize, p: Preprocess| -> f64 {
        rows.iter().find(|r: &&SweepRow| r.m == m && r.preprocess == p).unwrap().feasible_rate()
    };
    let never_worse = ms.iter().all(|&m| rate(m, Preprocess::Rref) >= rate(m, Preprocess::None));
    let strict: Vec<usize> = ms
        .iter()
        .copied()
        .filter(|&m| m > 15 && rate(m, Preprocess::Rref) > rate(m, Preprocess::None))
        .collect();
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_c12_sweep.txt");
    write_sweep(std::fs::File::create(&path).unwrap(), &rows).unwrap();
    let rates: Vec<String> = ms
        .iter()
        .map(|&m| format!("m={m} none {:.2} rref {:.2}", rate(m, Preprocess::None), rate(m, Preprocess::Rref)))
        .collect();
    report(
        12,
        if full { "sparsification sweep (full budgets)" } else { "sparsification sweep (reduced budgets)" },
        never_worse && !strict.is_empty(),
        &format!("{}; strict gains at m = {strict:?}; table {}; {:.1?}", rates.join(", "), path.display(), start.elapsed()),
    );
}
