use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use xorwish::gf2::ParitySystem;
use xorwish::harness::{
    emit_anytime_trace, run_experiment, sparsification_sweep, write_sweep, write_trace, ExperimentConfig,
    SweepOptions,
};
use xorwish::hashing::{independence_audit, HashFamily, HashFamilySpec};
use xorwish::model::{exact_log_partition, exact_map_with_parity, FactorGraph};
use xorwish::solvers::{solve_query, Budget, QueryOptions};
use xorwish::wish::{sample_query_system, Preprocess};

#[derive(Parser)]
#[command(name = "xorwish", version, about = "Partition function estimates and bounds via MAP queries under random parity constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the WISH estimator and write queries.csv and summary.txt.
    Estimate(EstimateArgs),
    /// Exact log-partition function by elimination or enumeration.
    Exact(ModelArgs),
    /// Solve one parity-constrained MAP query.
    Map(MapArgs),
    /// Row-reduce (and optionally greedily sparsify) a parity system.
    Sparsify(SparsifyArgs),
    /// Bound trace of one branch-and-bound run as `elapsed_ms upper`.
    Trace(TraceArgs),
    /// Feasibility and bounds with and without preprocessing across row counts.
    Sweep(SweepArgs),
    /// Enumerate a small hash family and check uniformity and pairwise independence.
    Audit(AuditArgs),
    /// Quick oracle-equivalence checks.
    Selftest,
}

/// Model selection. Defaults: a 4x4 grid with field 1.0, coupling 3.0, seed 0.
#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Config file (flat `key = value`); flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid side length [default: 4].
    #[arg(long)]
    grid_side: Option<usize>,
    /// Field magnitude; fields are uniform in [-f, f] [default: 1.0].
    #[arg(long)]
    grid_field: Option<f64>,
    /// Coupling magnitude; couplings are uniform in [-w, w] [default: 3.0].
    #[arg(long)]
    grid_coupling: Option<f64>,
    /// Seed for the grid potentials [default: 0].
    #[arg(long)]
    grid_seed: Option<u64>,
    /// Model text file instead of a grid.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> Result<()> {
            if let Some(v) = value {
                c.apply(key, &v)?;
            }
            Ok(())
        };
        set("grid_side", self.grid_side.map(|v| v.to_string()))?;
        set("grid_field", self.grid_field.map(|v| v.to_string()))?;
        set("grid_coupling", self.grid_coupling.map(|v| v.to_string()))?;
        set("grid_seed", self.grid_seed.map(|v| v.to_string()))?;
        set("model_file", self.model.as_ref().map(|p| p.display().to_string()))?;
        Ok(c)
    }

    fn build(&self) -> Result<FactorGraph> {
        Ok(self.config()?.model.build()?)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// exact | lower | upper | shortxor [default: exact]
    #[arg(long)]
    mode: Option<String>,
    /// Failure probability [default: 0.1].
    #[arg(long)]
    delta: Option<f64>,
    /// Concentration constant [default: 0.125].
    #[arg(long)]
    alpha: Option<f64>,
    /// Repetitions per level [default: computed from delta, alpha, n].
    #[arg(long = "T")]
    t: Option<usize>,
    /// dense | toeplitz | sparse:<k> [default: toeplitz]
    #[arg(long)]
    family: Option<String>,
    /// bnb | lp | mp | brute [default: bnb]
    #[arg(long)]
    solver: Option<String>,
    /// Parity encoding: auto | jeroslow | feldman | yannakakis [default: auto]
    #[arg(long)]
    policy: Option<String>,
    /// none | rref | rref+greedy | rref+greedy:<k> [default: rref]
    #[arg(long)]
    preprocess: Option<String>,
    /// LP engine: auto | dense | sparse [default: auto]
    #[arg(long)]
    engine: Option<String>,
    /// Per-query wall-clock budget [default: unlimited].
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Per-query branch-and-bound node budget [default: unlimited].
    #[arg(long)]
    budget_nodes: Option<u64>,
    /// Worker threads, 0 = all cores [default: 0].
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of master seeds (seed, seed+1, ...) [default: 1].
    #[arg(long)]
    repetitions: Option<usize>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Parity system text file; otherwise one is sampled.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Rows to sample when no system file is given [default: 0].
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Family to sample from [default: toeplitz].
    #[arg(long, default_value = "toeplitz")]
    family: String,
    /// Seed for sampling [default: 0].
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none | rref | rref+greedy | rref+greedy:<k>
    #[arg(long, default_value = "rref")]
    preprocess: String,
    /// bnb | lp | mp | brute
    #[arg(long, default_value = "bnb")]
    solver: String,
    /// Wall-clock budget in seconds [default: unlimited].
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Also run the enumeration oracle (n <= 25).
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SparsifyArgs {
    /// Parity system text file.
    system: PathBuf,
    /// Greedy combination depth after row reduction (0 disables).
    #[arg(long, default_value_t = 0)]
    greedy: usize,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Toeplitz rows to sample.
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none | rref | rref+greedy
    #[arg(long, default_value = "rref")]
    preprocess: String,
    /// Wall-clock budget in seconds [default: unlimited].
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated row counts.
    #[arg(long, default_value = "0,5,10,15,20,30")]
    m: String,
    /// Systems per row count.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-query wall-clock budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    budget_seconds: f64,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// dense | toeplitz | sparse:<k>
    #[arg(long, default_value = "toeplitz")]
    family: String,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
}

fn budget(secs: Option<f64>) -> Result<Budget> {
    match secs {
        None => Ok(Budget::unlimited()),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Budget::seconds(s)),
        Some(s) => bail!("budget must be positive, got {s}"),
    }
}

fn write_output(out: Option<&PathBuf>, write: impl FnOnce(&mut dyn std::io::Write) -> xorwish::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write(&mut file)?;
        }
        None => write(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let mut c = args.model.config()?;
    let opt = |v: &Option<String>| v.clone();
    let pairs: [(&str, Option<String>); 15] = [
        ("mode", opt(&args.mode)),
        ("delta", args.delta.map(|v| v.to_string())),
        ("alpha", args.alpha.map(|v| v.to_string())),
        ("t", args.t.map(|v| v.to_string())),
        ("family", opt(&args.family)),
        ("solver", opt(&args.solver)),
        ("policy", opt(&args.policy)),
        ("preprocess", opt(&args.preprocess)),
        ("engine", opt(&args.engine)),
        ("budget_seconds", args.budget_seconds.map(|v| v.to_string())),
        ("budget_nodes", args.budget_nodes.map(|v| v.to_string())),
        ("workers", args.workers.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("repetitions", args.repetitions.map(|v| v.to_string())),
        ("out_dir", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            c.apply(k, &v)?;
        }
    }
    eprintln!("{}", c.wish.alpha_regime());
    let record = run_experiment(&c)?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    for s in &record.summaries {
        print!("seed {} n {} T {} mode {} guarantee {} log_estimate {}", s.seed, s.n, s.t, s.mode, s.guarantee, s.log_estimate);
        if let Some(z) = record.exact_log_z {
            print!(" exact {z} abs_error {}", (s.log_estimate - z).abs());
        }
        println!();
    }
    println!("wrote {}", c.out_dir.display());
    Ok(())
}

fn map(args: &MapArgs) -> Result<()> {
    let g = args.model.build()?;
    let raw = match &args.system {
        Some(path) => ParitySystem::parse_text(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => sample_query_system(args.family.parse()?, g.n(), args.m, 1, args.seed)?,
    };
    let system = args.preprocess.parse::<Preprocess>()?.apply(&raw)?;
    let opts = QueryOptions {
        solver: args.solver.parse()?,
        budget: budget(args.budget_seconds)?,
        ..Default::default()
    };
    let r = solve_query(&g, &system, &opts)?;
    println!("status {}", r.status);
    println!("lower {}", r.lower);
    println!("upper {}", r.upper);
    println!("nodes {}", r.nodes);
    if let Some(x) = &r.incumbent {
        println!("incumbent {x}");
    }
    if args.check {
        let o = exact_map_with_parity(&g, &system)?;
        println!("oracle {}", o.lower);
    }
    Ok(())
}

fn sparsify(args: &SparsifyArgs) -> Result<()> {
    let text = fs::read_to_string(&args.system).with_context(|| format!("reading {}", args.system.display()))?;
    let sys = ParitySystem::parse_text(&text)?;
    let mut out = sys.rref();
    eprintln!("input norm {} rank {} consistent {}", sys.augmented_norm(), sys.rank(), sys.is_consistent());
    if args.greedy > 0 {
        out = out.greedy_sparsify(args.greedy)?;
    }
    eprintln!("output norm {} max row length {}", out.augmented_norm(), out.max_row_len());
    print!("{}", out.to_text());
    Ok(())
}

fn trace(args: &TraceArgs) -> Result<()> {
    let g = args.model.build()?;
    let raw = sample_query_system(HashFamily::Toeplitz, g.n(), args.m, 1, args.seed)?;
    let system = args.preprocess.parse::<Preprocess>()?.apply(&raw)?;
    let points = emit_anytime_trace(&g, &system, budget(args.budget_seconds)?, &Default::default())?;
    write_output(args.out.as_ref(), |w| write_trace(w, &points))
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let g = args.model.build()?;
    let ms = args
        .m
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad row count {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    let opts = SweepOptions {
        budget: budget(Some(args.budget_seconds))?,
        repetitions: args.reps,
        seed: args.seed,
        ..Default::default()
    };
    let rows = sparsification_sweep(&g, &ms, &opts)?;
    write_output(args.out.as_ref(), |w| write_sweep(w, &rows))
}

fn audit(args: &AuditArgs) -> Result<()> {
    let family: HashFamily = args.family.parse()?;
    let report = independence_audit(&HashFamilySpec::new(family, args.n, args.m)?)?;
    println!("family {family} n {} m {}", args.n, args.m);
    println!("members {}", report.members);
    println!("uniform_marginals {}", report.marginals_uniform);
    println!("pairs_checked {}", report.pairs_checked);
    println!("nonuniform_pairs {}", report.nonuniform_pairs.len());
    println!("pairwise_independent {}", report.pairwise_independent());
    Ok(())
}

fn selftest() -> Result<bool> {
    use xorwish::model::{brute_force_log_partition, build_ising_grid, eliminate_log_partition, GridSpec};
    use xorwish::solvers::{parity_message_update, Semiring, SolverKind};

    let mut all = true;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };
    let mut agree = true;
    for seed in 0..6u64 {
        let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed })?;
        for m in [0, 2, 4, 6, 8] {
            let sys = sample_query_system(HashFamily::Toeplitz, 9, m, 1, seed)?.rref();
            let oracle = exact_map_with_parity(&g, &sys)?;
            let r = solve_query(&g, &sys, &QueryOptions { solver: SolverKind::BranchAndBound, ..Default::default() })?;
            agree &= r.status == oracle.status && (r.status != xorwish::MapStatus::Optimal || (r.lower - oracle.lower).abs() < 1e-6);
        }
    }
    check("branch-and-bound matches enumeration on 3x3 grids", agree);
    let mut sound = true;
    for seed in 0..20u64 {
        let sys = sample_query_system(HashFamily::Dense, 8, (seed % 8) as usize, 1, seed)?;
        let truth = sys.solution_set()?;
        sound &= sys.rref().solution_set()? == truth && sys.greedy_sparsify(3)?.solution_set()? == truth;
    }
    check("row reduction and greedy sparsification keep solution sets", sound);
    let g = build_ising_grid(&GridSpec { side: 3, field: 1.0, coupling: 3.0, seed: 1 })?;
    check(
        "elimination matches enumeration",
        (eliminate_log_partition(&g)? - brute_force_log_partition(&g)?).abs() < 1e-9,
    );
    let incoming = [[0.2, 0.8], [0.6, 0.4], [0.5, 0.9]];
    let out = parity_message_update(&incoming, true, Semiring::Sum);
    // message to x0 under odd parity: x1 ⊕ x2 = 1 ⊕ x0
    let expect0 = incoming[1][0] * incoming[2][1] + incoming[1][1] * incoming[2][0];
    check("parity message update", (out[0][0] - expect0).abs() < 1e-12);
    let spec = HashFamilySpec::new(HashFamily::Toeplitz, 3, 2)?;
    check("toeplitz family is pairwise independent", independence_audit(&spec)?.pairwise_independent());
    let _ = std::io::stdout().flush();
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Exact(a) => a.build().and_then(|g| {
            println!("{}", exact_log_partition(&g)?);
            Ok(())
        }),
        Command::Map(a) => map(a),
        Command::Sparsify(a) => sparsify(a),
        Command::Trace(a) => trace(a),
        Command::Sweep(a) => sweep(a),
        Command::Audit(a) => audit(a),
        Command::Selftest => match selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
