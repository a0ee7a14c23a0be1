//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 resource limit,
//! 4 validation or agreement failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounds::{self, BoundKind, MSelection};
use crate::error::{Error, Result};
use crate::linalg::{MatrixJson, RectMatrix, SymmetricMatrix};
use crate::partitions::Partition;
use crate::series::{self, Mode, SeriesParams};
use crate::stiefel_mc;
use crate::verify;
use crate::zonal::{cache_dir, cache_key, ZonalCoeffTable, DEFAULT_WEIGHT_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Largest truncation order whose table fits under the weight cap.
const M_MAX: u32 = DEFAULT_WEIGHT_CAP + 1;

#[derive(Debug, Parser, Serialize)]
#[command(name = "stiefel-norm", version, about = "Normalizing constants on the Stiefel manifold with certified remainder bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Truncated matrix Bingham constant Phi_{d,p}(A, Sigma) with remainder bounds.
    Phi(PhiArgs),
    /// Truncated matrix Langevin constant Psi_{d,p}(B) with remainder bounds.
    Psi(PsiArgs),
    /// Dump exact zonal polynomial coefficients of one weight.
    Zonal(ZonalArgs),
    /// CSV grid of remainder bounds over d and m.
    BoundsTable(BoundsTableArgs),
    /// Run the inequality suite.
    Validate(ValidateArgs),
    /// Compare a Monte Carlo estimate with the certified series value.
    McCheck(McCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args, Serialize)]
pub struct SeriesOpts {
    /// Truncation order: degrees 0..m-1 are summed.
    #[arg(long, default_value_t = 10)]
    pub m: u32,
    /// Pick the smallest m whose closed-form bound is at most this tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also certify the remainder by explicit summation up to this degree.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Exact rational summation (diagonal inputs only).
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct PhiArgs {
    /// p x p symmetric matrix (JSON).
    #[arg(long)]
    pub a: PathBuf,
    /// d x d symmetric matrix (JSON).
    #[arg(long)]
    pub sigma: PathBuf,
    #[command(flatten)]
    pub series: SeriesOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct PsiArgs {
    /// d x p matrix (JSON).
    #[arg(long)]
    pub b: PathBuf,
    #[command(flatten)]
    pub series: SeriesOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct ZonalArgs {
    #[arg(long)]
    pub weight: u32,
    /// Largest partition length listed; defaults to the weight.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Only list this partition, e.g. "[2,1]".
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Phi,
    Psi,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsTableArgs {
    #[arg(long, value_enum, default_value_t = Kind::Phi)]
    pub kind: Kind,
    /// Grid "start:stop:lin|log|dyadic[:n]" or a single integer.
    #[arg(long)]
    pub d: String,
    /// Grid of truncation orders, same syntax.
    #[arg(long)]
    pub m: String,
    #[arg(long, default_value_t = 1)]
    pub p: u64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// tr(A_+) for the Bingham abscissa; defaults to p.
    #[arg(long)]
    pub trace_a: Option<f64>,
    /// Use the corrected Langevin abscissa instead of the default one.
    #[arg(long)]
    pub corrected: bool,
    /// Report underflowed values as natural logarithms.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 6)]
    pub max_weight: u32,
    /// Comma-separated dimensions.
    #[arg(long, default_value = "2,3,4,6", value_delimiter = ',')]
    pub dims: Vec<u64>,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = verify::DEFAULT_INSTANCES)]
    pub instances: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct McCheckArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, requires = "sigma", conflicts_with = "b")]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Truncation order of the series side; the rest is the certified remainder.
    #[arg(long, default_value_t = 2)]
    pub m: u32,
}

/// Outcome of a subcommand: text for stdout and the exit code.
struct Outcome {
    stdout: String,
    code: i32,
    warnings: Vec<String>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: EXIT_OK, warnings: Vec::new() }
    }
}

pub fn run_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => {
            for w in &o.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let _ = out.write_all(o.stdout.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let hash = config_hash(cli)?;
    match &cli.command {
        Command::Phi(a) => cmd_phi(a, &hash),
        Command::Psi(a) => cmd_psi(a, &hash),
        Command::Zonal(a) => cmd_zonal(a, &hash),
        Command::BoundsTable(a) => cmd_bounds_table(a, &hash),
        Command::Validate(a) => cmd_validate(a, &hash),
        Command::McCheck(a) => cmd_mc_check(a, &hash),
    }
}

/// SHA-256 over the parsed arguments and the bytes of every matrix file they name.
fn config_hash(cli: &Cli) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cli)?);
    let files: Vec<&Path> = match &cli.command {
        Command::Phi(a) => vec![&a.a, &a.sigma],
        Command::Psi(a) => vec![&a.b],
        Command::McCheck(a) => [&a.a, &a.sigma, &a.b].into_iter().flatten().map(|p| p.as_path()).collect(),
        _ => vec![],
    };
    for f in files {
        // unreadable files are reported later by the reader
        if let Ok(bytes) = std::fs::read(f) {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn provenance(seed: Option<u64>, table_key: Option<&str>, hash: &str) -> Value {
    json!({
        "tool": "stiefel-norm",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "table_cache_key": table_key,
        "config_hash": hash,
    })
}

fn provenance_comment(seed: Option<u64>, table_key: Option<&str>, hash: &str) -> String {
    let mut s = format!("# stiefel-norm {}\n", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# seed: {}", seed.map_or("none".to_string(), |v| v.to_string()));
    let _ = writeln!(s, "# table_cache_key: {}", table_key.unwrap_or("none"));
    let _ = writeln!(s, "# config_hash: {hash}");
    s
}

/// 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON with floats at 17 significant digits; non-finite floats become `null`.
pub fn to_json_string(v: &Value) -> String {
    let mut s = String::new();
    emit(v, 0, &mut s);
    s.push('\n');
    s
}

fn emit(v: &Value, indent: usize, s: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            s.push_str(&if x.is_finite() { format_f64(x) } else { "null".into() });
        }
        Value::Array(items) if !items.is_empty() => {
            s.push_str("[\n");
            for (i, it) in items.iter().enumerate() {
                s.push_str(&pad(indent + 1));
                emit(it, indent + 1, s);
                s.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            s.push_str(&pad(indent));
            s.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            s.push_str("{\n");
            for (i, (k, it)) in map.iter().enumerate() {
                s.push_str(&pad(indent + 1));
                s.push_str(&Value::String(k.clone()).to_string());
                s.push_str(": ");
                emit(it, indent + 1, s);
                s.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            s.push_str(&pad(indent));
            s.push('}');
        }
        other => s.push_str(&other.to_string()),
    }
}

fn to_text(v: &Value, prefix: &str, s: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, it) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                to_text(it, &key, s);
            }
        }
        Value::Array(items) => {
            for (i, it) in items.iter().enumerate() {
                to_text(it, &format!("{prefix}[{i}]"), s);
            }
        }
        Value::Number(n) if n.is_f64() => {
            let _ = writeln!(s, "{prefix}: {}", format_f64(n.as_f64().unwrap_or(f64::NAN)));
        }
        Value::String(x) => {
            let _ = writeln!(s, "{prefix}: {x}");
        }
        other => {
            let _ = writeln!(s, "{prefix}: {other}");
        }
    }
}

fn render(format: Format, header: Value, body: Value) -> String {
    match format {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("provenance".into(), header);
            if let Value::Object(m) = body {
                obj.extend(m);
            }
            to_json_string(&Value::Object(obj))
        }
        Format::Text => {
            let mut s = String::new();
            to_text(&json!({ "provenance": header }), "", &mut s);
            to_text(&body, "", &mut s);
            s
        }
    }
}

fn read_symmetric(path: &Path) -> Result<SymmetricMatrix> {
    MatrixJson::read(path).and_then(MatrixJson::into_symmetric).map_err(|e| with_path(e, path))
}

fn read_rect(path: &Path) -> Result<RectMatrix> {
    MatrixJson::read(path).and_then(MatrixJson::into_rect).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Input(format!("{}: {io}", path.display())),
        Error::Json(j) => Error::Input(format!("{}: {j}", path.display())),
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Table for degrees `< m` with `l(kappa) <= p` at spectra of size `n`, through the on-disk cache.
fn cached_table(m: u32, p: u64, n: u64) -> Result<ZonalCoeffTable> {
    if m > M_MAX {
        return Err(Error::Resource(format!("m={m} needs weight {} above the cap {DEFAULT_WEIGHT_CAP}", m - 1)));
    }
    let w = m.saturating_sub(1);
    let lambda_len = (n as usize).min(w as usize).max(p as usize);
    ZonalCoeffTable::load_or_build(&cache_dir(), w, p as usize, lambda_len, DEFAULT_WEIGHT_CAP)
}

fn choose_m(opts: &SeriesOpts, t: f64, p: u64, kind: BoundKind) -> Result<(u32, Value)> {
    let Some(tol) = opts.tol else {
        return Ok((opts.m, Value::Null));
    };
    if !(tol > 0.0) {
        return Err(Error::Input(format!("--tol must be positive, got {tol}")));
    }
    match bounds::select_m(tol, kind, t, p, M_MAX)? {
        MSelection::Found { m, bound } => Ok((m, json!({ "tol": tol, "m": m, "bound": bound }))),
        MSelection::NotFound { min_bound, argmin } => Err(Error::Resource(format!(
            "no m <= {M_MAX} reaches tol {tol:e}; smallest bound {min_bound:e} at m={argmin}"
        ))),
    }
}

fn mode(opts: &SeriesOpts) -> Mode {
    if opts.exact { Mode::Exact } else { Mode::Floating }
}

fn cmd_phi(args: &PhiArgs, hash: &str) -> Result<Outcome> {
    let a = read_symmetric(&args.a)?;
    let sigma = read_symmetric(&args.sigma)?;
    let (p, d) = (a.order() as u64, sigma.order() as u64);
    if d < p {
        return Err(Error::Input(format!("A is {p}x{p} but Sigma is {d}x{d}; need p <= d")));
    }
    let norm = sigma.frobenius_norm();
    let g = bounds::minimal_growth(norm, d, BoundKind::Phi);
    let t = if norm == 0.0 { 0.0 } else { bounds::t_phi(&a, d, p, g)? };
    let (m, selection) = choose_m(&args.series, t, p, BoundKind::Phi)?;
    let k_max = args.series.k_max.unwrap_or(m).max(m);
    let params = SeriesParams::new(d, p, m, k_max)?.with_mode(mode(&args.series));
    let table = cached_table(m.max(k_max), p, d)?;
    let report = series::phi_truncated(&a, &sigma, &params, &table)?;
    let growth = bounds::check_growth(&sigma, d, g, BoundKind::Phi);
    let mut body = json!({
        "d": d, "p": p, "m": m, "mode": params.mode,
        "value": report.value,
        "degree_terms": report.degree_terms,
        "t": report.t_value,
        "upper_series": report.remainder_upper_series,
        "upper_closed": report.remainder_upper_closed,
        "lower": report.remainder_lower,
        "growth": { "gamma0": g.gamma0, "r": g.r, "satisfied": growth.satisfied },
        "tol_selection": selection,
    });
    if args.series.k_max.is_some_and(|k| k > m) {
        let rem = series::phi_remainder_reference(&a, &sigma, &params, &table)?;
        body["remainder_reference"] = serde_json::to_value(rem)?;
    }
    Ok(Outcome::ok(render(args.series.format, provenance(None, Some(&table.cache_key()), hash), body)))
}

fn cmd_psi(args: &PsiArgs, hash: &str) -> Result<Outcome> {
    let b = read_rect(&args.b)?;
    let (d, p) = (b.rows() as u64, b.cols() as u64);
    let norm = b.frobenius_norm();
    let g = bounds::minimal_growth(norm, d, BoundKind::Psi);
    let t_corr = if norm == 0.0 { 0.0 } else { bounds::t_psi_corrected(d, p, g)? };
    // m is chosen against the corrected abscissa; the default one does not bound the tail
    let (m, selection) = choose_m(&args.series, t_corr, p, BoundKind::Psi)?;
    let k_max = args.series.k_max.unwrap_or(m).max(m);
    let params = SeriesParams::new(d, p, m, k_max)?.with_mode(mode(&args.series));
    let table = cached_table(m.max(k_max), p, p)?;
    let report = series::psi_truncated(&b, &params, &table)?;
    let corrected = if m >= 2 {
        let r = bounds::upper_from_t(m, t_corr, p, bounds::n_dim(p), true)?;
        json!({ "t": t_corr, "upper_series": r.upper_series, "upper_closed": r.upper_closed })
    } else {
        Value::Null
    };
    let lower = bounds::psi_lower(m, &b).ok();
    let mut body = json!({
        "d": d, "p": p, "m": m, "mode": params.mode,
        "value": report.value,
        "degree_terms": report.degree_terms,
        "t": report.t_value,
        "upper_series": report.remainder_upper_series,
        "upper_closed": report.remainder_upper_closed,
        "corrected": corrected,
        "lower": lower.as_ref().map(|l| l.full),
        "lower_single_term": lower.as_ref().map(|l| l.single_term),
        "growth": { "gamma0": g.gamma0, "r": g.r, "satisfied": bounds::check_growth(&b, d, g, BoundKind::Psi).satisfied },
        "tol_selection": selection,
    });
    if args.series.k_max.is_some_and(|k| k > m) {
        let rem = series::psi_remainder_reference(&b, &params, &table)?;
        body["remainder_reference"] = serde_json::to_value(rem)?;
    }
    Ok(Outcome::ok(render(args.series.format, provenance(None, Some(&table.cache_key()), hash), body)))
}

fn cmd_zonal(args: &ZonalArgs, hash: &str) -> Result<Outcome> {
    let w = args.weight;
    let len = args.max_len.unwrap_or(w as usize).clamp(1, (w as usize).max(1));
    let filter = args.kappa.as_deref().map(|s| s.trim().trim_start_matches("κ=").parse::<Partition>()).transpose()?;
    let table = ZonalCoeffTable::load_or_build(&cache_dir(), w, len, (w as usize).max(len), DEFAULT_WEIGHT_CAP)?;
    let block = table.block(w).ok_or_else(|| Error::Resource(format!("weight {w} not in table")))?;
    let rows: Vec<Value> = block
        .rows
        .iter()
        .filter(|r| filter.as_ref().is_none_or(|k| &r.kappa == k))
        .map(|r| {
            let coeffs: Vec<Value> = r
                .exact
                .iter()
                .map(|(i, c)| json!({ "lambda": block.lambdas[*i].to_string(), "coeff": c.to_string(), "value": c.to_f64() }))
                .collect();
            json!({ "kappa": r.kappa.to_string(), "coefficients": coeffs })
        })
        .collect();
    if let Some(k) = &filter {
        if rows.is_empty() {
            return Err(Error::Input(format!("{k} is not a partition of {w} with at most {len} parts")));
        }
    }
    let key = cache_key(w, len, (w as usize).max(len));
    let out = match args.format {
        Format::Json => render(Format::Json, provenance(None, Some(&key), hash), json!({ "weight": w, "max_len": len, "rows": rows })),
        Format::Text => {
            let mut s = provenance_comment(None, Some(&key), hash);
            for r in &rows {
                for c in r["coefficients"].as_array().into_iter().flatten() {
                    let _ = writeln!(s, "C{} M{} {}", r["kappa"].as_str().unwrap_or(""), c["lambda"].as_str().unwrap_or(""), c["coeff"].as_str().unwrap_or(""));
                }
            }
            s
        }
    };
    Ok(Outcome::ok(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spacing {
    Lin,
    Log,
    Dyadic,
}

/// Parses "start:stop:lin|log|dyadic[:n]" or a single integer into a sorted set of integers.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Input(format!("malformed grid \"{spec}\"; expected start:stop:lin|log|dyadic[:n]"));
    let parts: Vec<&str> = spec.trim().split(':').collect();
    if parts.len() == 1 {
        return Ok(vec![parts[0].parse().map_err(|_| bad())?]);
    }
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let start: u64 = parts[0].parse().map_err(|_| bad())?;
    let stop: u64 = parts[1].parse().map_err(|_| bad())?;
    let spacing = match parts[2] {
        "lin" => Spacing::Lin,
        "log" => Spacing::Log,
        "dyadic" => Spacing::Dyadic,
        _ => return Err(bad()),
    };
    let n: Option<usize> = parts.get(3).map(|s| s.parse().map_err(|_| bad())).transpose()?;
    if start < 1 || stop < start || n == Some(0) {
        return Err(bad());
    }
    let mut v: Vec<u64> = match (spacing, n) {
        (Spacing::Lin, None) => (start..=stop).collect(),
        (Spacing::Lin, Some(n)) => spaced(n, |f| start as f64 + f * (stop - start) as f64),
        (Spacing::Log, n) => {
            let (a, b) = ((start as f64).ln(), (stop as f64).ln());
            spaced(n.unwrap_or(10), |f| (a + f * (b - a)).exp())
        }
        (Spacing::Dyadic, n) => {
            let mut v = Vec::new();
            let mut x = start;
            while x <= stop && n.is_none_or(|n| v.len() < n) {
                v.push(x);
                x = x.checked_mul(2).ok_or_else(bad)?;
            }
            v
        }
    };
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn spaced(n: usize, at: impl Fn(f64) -> f64) -> Vec<u64> {
    if n == 1 {
        return vec![at(0.0).round() as u64];
    }
    (0..n).map(|i| at(i as f64 / (n - 1) as f64).round() as u64).collect()
}

fn cell(x: Option<f64>, ln: Option<f64>, log: bool, name: &str, flags: &mut Vec<String>) -> String {
    match x {
        None => String::new(),
        Some(v) if v == 0.0 || (v != 0.0 && v.abs() < f64::MIN_POSITIVE) => {
            if log {
                if let Some(l) = ln.filter(|l| l.is_finite()) {
                    flags.push(format!("ln_{name}"));
                    return format_f64(l);
                }
            }
            flags.push(format!("underflow_{name}"));
            format_f64(v)
        }
        Some(v) => format_f64(v),
    }
}

fn cmd_bounds_table(args: &BoundsTableArgs, hash: &str) -> Result<Outcome> {
    let ds = parse_grid(&args.d)?;
    let ms = parse_grid(&args.m)?;
    let p = args.p;
    if p < 1 {
        return Err(Error::Input("--p must be >= 1".into()));
    }
    if let Some(&m) = ms.iter().find(|&&m| m < 2 || m > u32::MAX as u64) {
        return Err(Error::Input(format!("bounds need m >= 2, grid has m={m}")));
    }
    if let Some(&d) = ds.iter().find(|&&d| d < p) {
        return Err(Error::Input(format!("grid has d={d} below p={p}")));
    }
    let g = bounds::GrowthParams::new(args.gamma0, args.r)?;
    let kind = match args.kind {
        Kind::Phi => BoundKind::Phi,
        Kind::Psi => BoundKind::Psi,
    };
    let tr_a = args.trace_a.unwrap_or(p as f64);
    let mut s = provenance_comment(None, None, hash);
    s.push_str("d,p,m,t,upper_series,upper_closed,lower,flags\n");
    for &d in &ds {
        let t = match kind {
            BoundKind::Phi => bounds::t_phi_from_trace(tr_a, d, p, g)?,
            BoundKind::Psi if args.corrected => bounds::t_psi_corrected(d, p, g)?,
            BoundKind::Psi => bounds::t_psi(d, p, g)?,
        };
        let n = match kind {
            BoundKind::Phi => bounds::n_dim(d),
            BoundKind::Psi => bounds::n_dim(p),
        };
        for &m in &ms {
            let m = m as u32;
            let mut flags = vec![if kind.r_in_range(args.r) { "r_in_range".to_string() } else { "r_out_of_range".to_string() }];
            let (upper, ln_upper) = match bounds::upper_from_t(m, t, p, n, kind.r_in_range(args.r)) {
                Ok(r) => ((Some(r.upper_series), Some(r.upper_closed)), (Some(r.ln_upper_series), Some(r.ln_upper_closed))),
                Err(Error::Overflow(_)) => {
                    flags.push("overflow".into());
                    ((Some(f64::INFINITY), Some(f64::INFINITY)), (None, None))
                }
                Err(e) => return Err(e),
            };
            let (lower, ln_lower) = canonical_lower(kind, m, d, p, g, tr_a);
            let us = cell(upper.0, ln_upper.0, args.log, "upper_series", &mut flags);
            let uc = cell(upper.1, ln_upper.1, args.log, "upper_closed", &mut flags);
            let lo = cell(lower, ln_lower, args.log, "lower", &mut flags);
            let _ = writeln!(s, "{d},{p},{m},{},{us},{uc},{lo},{}", format_f64(t), flags.join(";"));
        }
    }
    Ok(Outcome::ok(s))
}

/// Lower bound at the isotropic instance on the growth boundary:
/// `A = (tr A / p) I_p`, `Sigma = gamma0 d^{(r-1)/2} I_d`, or `B = c [I_p; 0]` with `||B|| = 2 gamma0^{1/2} d^{r/4}`.
fn canonical_lower(kind: BoundKind, m: u32, d: u64, p: u64, g: bounds::GrowthParams, tr_a: f64) -> (Option<f64>, Option<f64>) {
    let df = d as f64;
    match kind {
        BoundKind::Phi => {
            if !(tr_a > 0.0) {
                return (None, None);
            }
            let a = SymmetricMatrix::scaled_identity(p as usize, tr_a / p as f64);
            let sigma = SymmetricMatrix::scaled_identity(d as usize, g.gamma0 * df.powf((g.r - 1.0) / 2.0));
            let ln = bounds::ln_phi_lower(m, &a, &sigma, d, p).ok();
            (ln.map(f64::exp), ln)
        }
        BoundKind::Psi => {
            let norm = 2.0 * g.gamma0.sqrt() * df.powf(g.r / 4.0);
            let c = norm / (p as f64).sqrt();
            let mut data = vec![0.0; (d * p) as usize];
            for j in 0..p as usize {
                data[j * p as usize + j] = c;
            }
            let Ok(b) = RectMatrix::from_row_major(d as usize, p as usize, data) else {
                return (None, None);
            };
            match bounds::psi_lower(m, &b) {
                Ok(l) => (Some(l.full), Some(l.ln_full)),
                Err(_) => (None, None),
            }
        }
    }
}

fn cmd_validate(args: &ValidateArgs, hash: &str) -> Result<Outcome> {
    let report = verify::run_suite(args.max_weight, &args.dims, args.seed, args.instances)?;
    let mut out = if args.json {
        render(Format::Json, provenance(Some(args.seed), None, hash), serde_json::to_value(&report)?)
    } else {
        let mut s = provenance_comment(Some(args.seed), None, hash);
        for c in &report.checks {
            let _ = writeln!(
                s,
                "{} {} instances={} failures={} worst_relative_margin={}",
                if c.failures == 0 { "PASS" } else { "FAIL" },
                c.name,
                c.instances,
                c.failures,
                format_f64(c.worst.relative_margin())
            );
        }
        s
    };
    let mut o = Outcome::ok(String::new());
    if let Some(f) = report.failing().next() {
        o.code = EXIT_VALIDATION;
        o.warnings.push(format!("{} failed: lhs={} rhs={} ({})", f.name, format_f64(f.worst.lhs), format_f64(f.worst.rhs), f.worst.witness));
    }
    std::mem::swap(&mut o.stdout, &mut out);
    Ok(o)
}

fn cmd_mc_check(args: &McCheckArgs, hash: &str) -> Result<Outcome> {
    let (d, p) = (args.d, args.p);
    if p < 1 || d < p {
        return Err(Error::Input(format!("need d >= p >= 1, got d={d}, p={p}")));
    }
    if args.m < 1 {
        return Err(Error::Input("--m must be >= 1".into()));
    }
    let (est, value, rem) = match (&args.a, &args.sigma, &args.b) {
        (Some(af), Some(sf), None) => {
            let a = read_symmetric(af)?;
            let sigma = read_symmetric(sf)?;
            if a.order() != p || sigma.order() != d {
                return Err(Error::Input(format!("A is {0}x{0} and Sigma is {1}x{1}; expected p={p}, d={d}", a.order(), sigma.order())));
            }
            let params = SeriesParams::new(d as u64, p as u64, args.m, args.m)?;
            let table = cached_table(args.m, p as u64, d as u64)?;
            let value = series::phi_truncated(&a, &sigma, &params, &table)?.value;
            let rem = series::phi_remainder_auto(&a, &sigma, d as u64, p as u64, args.m, M_MAX)?;
            (stiefel_mc::mc_phi(&a, &sigma, args.samples, args.seed)?, value, rem)
        }
        (None, None, Some(bf)) => {
            let b = read_rect(bf)?;
            if b.rows() != d || b.cols() != p {
                return Err(Error::Input(format!("B is {}x{}; expected {d}x{p}", b.rows(), b.cols())));
            }
            let params = SeriesParams::new(d as u64, p as u64, args.m, args.m)?;
            let table = cached_table(args.m, p as u64, p as u64)?;
            let value = series::psi_truncated(&b, &params, &table)?.value;
            let rem = series::psi_remainder_auto(&b, args.m, M_MAX)?;
            (stiefel_mc::mc_psi(&b, args.samples, args.seed)?, value, rem)
        }
        _ => return Err(Error::Input("mc-check needs either --a and --sigma, or --b".into())),
    };
    let target = value + rem.midpoint;
    let agree = est.agrees_with(target, rem.radius);
    let body = json!({
        "mean": est.mean,
        "stderr": est.stderr,
        "n": est.n,
        "target": target,
        "target_radius": rem.radius,
        "agree_3sigma": agree,
    });
    let mut o = Outcome::ok(render(Format::Json, provenance(Some(args.seed), None, hash), body));
    if est.heavy_tail {
        o.warnings.push(format!("heavy tail: max summand {} exceeds 1e6 x mean", format_f64(est.max_summand)));
    }
    if !agree {
        o.code = EXIT_VALIDATION;
        o.warnings.push(format!("Monte Carlo mean {} differs from {} by more than 3 stderr", format_f64(est.mean), format_f64(target)));
    }
    Ok(o)
}
