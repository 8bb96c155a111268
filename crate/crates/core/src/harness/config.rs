use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{build_ising_grid, FactorGraph, GridSpec};
use crate::solvers::{Budget, LpEngine};
use crate::wish::WishConfig;

/// Where the model comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    Grid(GridSpec),
    File(PathBuf),
}

impl ModelSource {
    pub fn build(&self) -> Result<FactorGraph> {
        match self {
            ModelSource::Grid(spec) => build_ising_grid(spec),
            ModelSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                FactorGraph::parse_text(&text)
            }
        }
    }
}

/// A full experiment description, stored as a flat `key = value` file.
///
/// Recognized keys (defaults in parentheses):
///
/// ```text
/// grid_side (4)  grid_field (1.0)  grid_coupling (3.0)  grid_seed (0)
/// model_file     (unset; overrides the grid when present)
/// mode (exact)   family (toeplitz)  solver (bnb)  policy (auto)
/// preprocess (rref)  engine (auto)
/// delta (0.1)    alpha (0.125)      t (computed)
/// budget_seconds (unlimited)  budget_nodes (unlimited)
/// seed (0)       repetitions (1)    workers (0 = all cores)
/// out_dir (out)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub wish: WishConfig,
    /// Number of master seeds, `seed, seed + 1, …`.
    pub repetitions: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSource::Grid(GridSpec {
                side: 4,
                field: 1.0,
                coupling: 3.0,
                seed: 0,
            }),
            wish: WishConfig::default(),
            repetitions: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidParameter(format!("bad value {value:?} for {key}: {e}")))
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if matches!(value, "" | "none" | "auto" | "unlimited") {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl ExperimentConfig {
    /// Reads a config file: one `key = value` per line, `#` starts a comment.
    /// Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(no + 1, format!("expected key = value, got {line:?}")))?;
            config.apply(key.trim(), value.trim()).map_err(|e| match e {
                Error::InvalidParameter(msg) => Error::parse(no + 1, msg),
                other => other,
            })?;
        }
        Ok(config)
    }

    pub fn load(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    /// Sets one key. Grid keys switch the model source back to a grid.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let grid = |cfg: &mut Self| -> GridSpec {
            match &cfg.model {
                ModelSource::Grid(g) => *g,
                ModelSource::File(_) => ExperimentConfig::default_grid(),
            }
        };
        let w = &mut self.wish;
        match key {
            "grid_side" | "grid_field" | "grid_coupling" | "grid_seed" => {
                let mut g = grid(self);
                match key {
                    "grid_side" => g.side = parse_value(key, value)?,
                    "grid_field" => g.field = parse_value(key, value)?,
                    "grid_coupling" => g.coupling = parse_value(key, value)?,
                    _ => g.seed = parse_value(key, value)?,
                }
                self.model = ModelSource::Grid(g);
            }
            "model_file" => {
                self.model = match value {
                    "" | "none" => ModelSource::Grid(grid(self)),
                    path => ModelSource::File(PathBuf::from(path)),
                }
            }
            "mode" => w.mode = parse_value(key, value)?,
            "family" => w.family = parse_value(key, value)?,
            "solver" => w.solver = parse_value(key, value)?,
            "policy" => w.policy = parse_value(key, value)?,
            "preprocess" => w.preprocess = parse_value(key, value)?,
            "engine" => w.lp.engine = parse_value::<LpEngine>(key, value)?,
            "delta" => w.delta = parse_value(key, value)?,
            "alpha" => w.alpha = parse_value(key, value)?,
            "t" => w.t_override = optional(key, value)?,
            "budget_seconds" => {
                let secs: Option<f64> = optional(key, value)?;
                if let Some(s) = secs {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::InvalidParameter(format!("budget_seconds must be positive, got {s}")));
                    }
                }
                w.budget.time = secs.map(Duration::from_secs_f64);
            }
            "budget_nodes" => w.budget.nodes = optional(key, value)?,
            "seed" => w.seed = parse_value(key, value)?,
            "workers" => w.workers = parse_value(key, value)?,
            "repetitions" => self.repetitions = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::InvalidParameter(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn default_grid() -> GridSpec {
        match Self::default().model {
            ModelSource::Grid(g) => g,
            ModelSource::File(_) => unreachable!(),
        }
    }

    /// Canonical text form; `parse(to_kv())` gives back an equal config.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.model {
            ModelSource::Grid(g) => {
                kv("grid_side", g.side.to_string());
                kv("grid_field", format!("{:?}", g.field));
                kv("grid_coupling", format!("{:?}", g.coupling));
                kv("grid_seed", g.seed.to_string());
            }
            ModelSource::File(p) => kv("model_file", p.display().to_string()),
        }
        let w = &self.wish;
        kv("mode", w.mode.to_string());
        kv("family", w.family.to_string());
        kv("solver", w.solver.to_string());
        kv("policy", w.policy.to_string());
        kv("preprocess", w.preprocess.to_string());
        kv("engine", w.lp.engine.to_string());
        kv("delta", format!("{:?}", w.delta));
        kv("alpha", format!("{:?}", w.alpha));
        kv("t", w.t_override.map_or("auto".into(), |t| t.to_string()));
        kv(
            "budget_seconds",
            w.budget.time.map_or("unlimited".into(), |d| format!("{:?}", d.as_secs_f64())),
        );
        kv("budget_nodes", w.budget.nodes.map_or("unlimited".into(), |n| n.to_string()));
        kv("seed", w.seed.to_string());
        kv("workers", w.workers.to_string());
        kv("repetitions", self.repetitions.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        out
    }

    /// SHA-256 of [`to_kv`](Self::to_kv), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_kv().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// The per-query budget as configured.
    pub fn budget(&self) -> Budget {
        self.wish.budget
    }
}
