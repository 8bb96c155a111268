use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::MapStatus;
use crate::wish::{assemble_estimate, Guarantee, Mode, QueryRecord};

pub const CSV_HEADER: [&str; 8] = ["level", "trial", "seed", "lower", "upper", "status", "nodes", "runtime_ms"];

/// One line of the per-query CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryRow {
    pub level: usize,
    pub trial: usize,
    pub seed: u64,
    pub lower: f64,
    pub upper: f64,
    pub status: MapStatus,
    pub nodes: u64,
    pub runtime_ms: f64,
}

impl From<&QueryRecord> for QueryRow {
    fn from(r: &QueryRecord) -> Self {
        Self {
            level: r.level,
            trial: r.trial,
            seed: r.seed,
            lower: r.result.lower,
            upper: r.result.upper,
            status: r.result.status,
            nodes: r.result.nodes,
            runtime_ms: r.runtime.as_secs_f64() * 1e3,
        }
    }
}

/// Per-master-seed summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub mode: Mode,
    pub guarantee: Guarantee,
    pub medians: Vec<f64>,
    pub log_estimate: f64,
    pub wall_ms: f64,
}

impl SeedSummary {
    /// The estimate recomputed from the stored medians.
    pub fn recomputed_estimate(&self) -> f64 {
        assemble_estimate(&self.medians)
    }
}

/// Everything one experiment produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    /// The config echoed as `key = value` lines.
    pub config_text: String,
    pub rows: Vec<QueryRow>,
    pub summaries: Vec<SeedSummary>,
    /// `None` when the exact oracle is out of reach.
    pub exact_log_z: Option<f64>,
    pub wall_ms: f64,
    pub warnings: Vec<String>,
}

/// Writes rows with the config echoed as leading `#` comment lines.
pub fn write_rows<W: Write>(out: W, config_text: &str, rows: &[QueryRow]) -> Result<()> {
    let mut out = out;
    for line in config_text.lines() {
        writeln!(out, "# {line}").map_err(|e| Error::io("<csv>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.status.to_string(),
            r.nodes.to_string(),
            r.runtime_ms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| Error::parse(line, format!("missing column {}", CSV_HEADER[idx])))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {} value {raw:?}", CSV_HEADER[idx])))
}

/// Parses what [`write_rows`] produced; comment lines are skipped.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<QueryRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let status: String = field(&rec, 5, line)?;
        rows.push(QueryRow {
            level: field(&rec, 0, line)?,
            trial: field(&rec, 1, line)?,
            seed: field(&rec, 2, line)?,
            lower: field(&rec, 3, line)?,
            upper: field(&rec, 4, line)?,
            status: status.parse().map_err(|_| Error::parse(line, format!("bad status {status:?}")))?,
            nodes: field(&rec, 6, line)?,
            runtime_ms: field(&rec, 7, line)?,
        });
    }
    Ok(rows)
}

pub fn write_rows_file(path: &Path, config_text: &str, rows: &[QueryRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), config_text, rows)
}

pub fn read_rows_file(path: &Path) -> Result<Vec<QueryRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(std::io::BufReader::new(file))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// The summary document: config echo, then one `key = value` block per seed.
pub fn summary_text(record: &RunRecord) -> String {
    let mut out = String::new();
    for line in record.config_text.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "config_hash = {}", record.config_hash);
    let _ = writeln!(
        out,
        "exact_log_z = {}",
        record.exact_log_z.map_or("unavailable".into(), |z| z.to_string())
    );
    let _ = writeln!(out, "wall_ms = {}", record.wall_ms);
    let _ = writeln!(out, "runs = {}", record.summaries.len());
    for w in &record.warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    for s in &record.summaries {
        let _ = writeln!(out, "\n[seed {}]", s.seed);
        let _ = writeln!(out, "n = {}", s.n);
        let _ = writeln!(out, "t = {}", s.t);
        let _ = writeln!(out, "mode = {}", s.mode);
        let _ = writeln!(out, "guarantee = {}", s.guarantee);
        let _ = writeln!(out, "log_estimate = {}", s.log_estimate);
        if let Some(z) = record.exact_log_z {
            let _ = writeln!(out, "abs_error = {}", (s.log_estimate - z).abs());
        }
        let _ = writeln!(out, "wall_ms = {}", s.wall_ms);
        let _ = writeln!(out, "medians = {}", join(&s.medians));
    }
    out
}

/// Reads back the per-seed blocks of a summary document.
pub fn parse_summary(text: &str) -> Result<Vec<SeedSummary>> {
    let mut out: Vec<SeedSummary> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line_no = no + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("[seed ").and_then(|r| r.strip_suffix(']')) {
            out.push(SeedSummary {
                seed: rest.parse().map_err(|_| Error::parse(line_no, "bad seed header"))?,
                n: 0,
                t: 0,
                mode: Mode::Exact,
                guarantee: Guarantee::SixteenApprox,
                medians: Vec::new(),
                log_estimate: f64::NAN,
                wall_ms: 0.0,
            });
            continue;
        }
        let Some(cur) = out.last_mut() else { continue };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        let bad = || Error::parse(line_no, format!("bad value for {k}"));
        match k {
            "n" => cur.n = v.parse().map_err(|_| bad())?,
            "t" => cur.t = v.parse().map_err(|_| bad())?,
            "mode" => cur.mode = v.parse()?,
            "guarantee" => cur.guarantee = v.parse()?,
            "log_estimate" => cur.log_estimate = v.parse().map_err(|_| bad())?,
            "wall_ms" => cur.wall_ms = v.parse().map_err(|_| bad())?,
            "medians" => {
                cur.medians = v
                    .split_whitespace()
                    .map(|x| x.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?
            }
            _ => {}
        }
    }
    Ok(out)
}
