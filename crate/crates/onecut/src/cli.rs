//! Command-line adapters over the library. Every subcommand reads flags
//! (optionally merged over a flat key=value config file), calls one library
//! entry point and writes CSV or JSON.

use crate::curve::{classify_support, CurveError, EnsembleParams, SpectralCurve};
use crate::finitemop::{FiniteKernel, FiniteMopError, WeightPair, DEFAULT_PREC};
use crate::hgeometry::{trace_hset, HError, Window};
use crate::kernels::{tw_table, KernelError, TwMethod};
use crate::montecarlo::{self, EigenSample, MonteCarloError, SampleConfig};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

pub const SCHEMA: &str = "v1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "onecut", version, about = "Spectral curve, level sets, kernels and Monte Carlo checks for two-point covariance Wishart ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fredholm,
    Painleve,
    Both,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key=value file with the same keys as the long flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Base seed for sampling.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct Triple {
    /// Second covariance eigenvalue (a > 0, a ≠ 1).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Aspect ratio c = N/M in (0,1).
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Fraction β = N1/N in (0,1).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Support classification as JSON: quartic roots, λ1..λ4, Δ, cut count.
    Classify {
        #[command(flatten)]
        params: Triple,
        #[command(flatten)]
        common: Common,
    },
    /// Density table. CSV columns: z, rho, rho_over_c.
    Density {
        #[command(flatten)]
        params: Triple,
        /// lo:hi:step (default: 201 points across [λ1, λ2]).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Zero set of Re(θ2 − θ3). CSV columns: curve, point, re, im. The
    /// x_L, x_R, ι report goes to standard output when --out is set and to
    /// standard error otherwise.
    Hset {
        #[command(flatten)]
        params: Triple,
        /// re_lo,re_hi,im_lo,im_hi (default -2,6,-5,5).
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// Grid columns (default 400).
        #[arg(long)]
        nx: Option<usize>,
        /// Grid rows (default 400).
        #[arg(long)]
        ny: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Tracy-Widom CDF table. CSV columns: s, then one column per method
    /// (fredholm, painleve), plus abs_diff for --method both.
    Tw {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// lo:hi:step (default -8:4:0.05).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-N correlation kernel on a square grid. CSV columns: x, y, K.
    KernelFinite {
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        n1: Option<u32>,
        #[arg(long)]
        a: Option<f64>,
        /// lo:hi:step for both axes (default 0.25:5:0.25).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Working precision in bits (default 256).
        #[arg(long)]
        prec: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo bulk density, bulk spacing and edge KS tests as a JSON
    /// report. Exit status 1 if any check fails.
    Validate {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        a: Option<f64>,
        /// Replicates for the density and spacing tests (default 200).
        #[arg(long)]
        replicates: Option<usize>,
        /// Replicates for the edge test (default 400, at least 200).
        #[arg(long)]
        edge_replicates: Option<usize>,
        /// Bulk density KS threshold (default 0.02).
        #[arg(long)]
        ks_bulk: Option<f64>,
        /// Sine-law spacing KS threshold (default 0.05).
        #[arg(long)]
        ks_spacing: Option<f64>,
        /// Minimum KS against exponential spacings (default 0.2).
        #[arg(long)]
        ks_exponential: Option<f64>,
        /// Edge KS threshold against Tracy-Widom (default 0.1).
        #[arg(long)]
        ks_edge: Option<f64>,
        /// Add wall-clock seconds per stage to the report.
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_VALIDATION,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::InvalidParams(_) | CurveError::OneCutRequired { .. } | CurveError::CriticalParameters { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<HError> for CliError {
    fn from(e: HError) -> Self {
        match e {
            HError::Curve(c) => c.into(),
            HError::InvalidWindow(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::RangeError(_) | KernelError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<FiniteMopError> for CliError {
    fn from(e: FiniteMopError) -> Self {
        match e {
            FiniteMopError::InvalidWeight(_) | FiniteMopError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Curve(c) => c.into(),
            MonteCarloError::Kernel(k) => k.into(),
            MonteCarloError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse a flat key=value document. Blank lines and lines starting with
/// '#' are skipped; keys use the long flag names.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

/// Config values with flag overrides.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(sub: &str, common: &Common) -> CliResult<Self> {
        let file = match &common.config {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("--config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
        };
        let cmd = Cli::command();
        let known: Vec<String> = cmd
            .find_subcommand(sub)
            .expect("subcommand exists")
            .get_arguments()
            .filter_map(|a| a.get_long().map(str::to_string))
            .filter(|k| k != "config")
            .collect();
        for k in file.keys() {
            if !known.contains(k) {
                return Err(CliError::Usage(format!("unknown config key '{k}' for {sub}")));
            }
        }
        Ok(Settings { file })
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Usage(format!("config key '{key}' = '{v}': {e}"))),
        }
    }

    fn need<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key, flag)?.ok_or_else(|| CliError::Usage(format!("missing --{key}")))
    }

    fn flag(&self, key: &str, flag: bool) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key, None)?.unwrap_or(false))
    }

    fn format(&self, common: &Common, default: Format) -> CliResult<Format> {
        if let Some(f) = common.format {
            return Ok(f);
        }
        match self.file.get("format").map(String::as_str) {
            None => Ok(default),
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(v) => Err(CliError::Usage(format!("config key 'format' = '{v}': expected csv or json"))),
        }
    }

    fn out(&self, common: &Common) -> Option<PathBuf> {
        common.out.clone().or_else(|| self.file.get("out").map(PathBuf::from))
    }
}

/// (a, c, β), with range errors for supplied values reported before
/// missing ones.
fn ensemble(s: &Settings, t: &Triple) -> CliResult<EnsembleParams> {
    let a = s.get("a", t.a)?;
    let c = s.get("c", t.c)?;
    let beta = s.get("beta", t.beta)?;
    EnsembleParams::new(a.unwrap_or(2.0), c.unwrap_or(0.5), beta.unwrap_or(0.5))?;
    let missing: Vec<&str> = [("a", a), ("c", c), ("beta", beta)].iter().filter(|(_, v)| v.is_none()).map(|(k, _)| *k).collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!("missing {}", missing.iter().map(|k| format!("--{k}")).collect::<Vec<_>>().join(", "))));
    }
    Ok(EnsembleParams::new(a.unwrap(), c.unwrap(), beta.unwrap())?)
}

/// "lo:hi:step" into its points, hi included when it falls on the lattice.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("grid '{spec}': expected lo:hi:step with lo < hi and step > 0"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(lo.is_finite() && hi.is_finite() && lo < hi && step > 0.0) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::Usage(format!("grid '{spec}' has {count} points")));
    }
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

fn parse_window(spec: &str) -> CliResult<Window> {
    let bad = || CliError::Usage(format!("window '{spec}': expected re_lo,re_hi,im_lo,im_hi"));
    let v: Vec<f64> = spec.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, c, d] = v[..] else { return Err(bad()) };
    Ok(Window::new(a, b, c, d))
}

/// Round-trip decimal: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num_row(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| fmt17(x)).collect()
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Output of one run: the main artifact (to --out or stdout) and an
/// optional side report.
pub struct Output {
    pub body: String,
    pub side: Option<String>,
    pub code: i32,
}

fn classify(params: &Triple, common: &Common) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("classify", common)?;
    let p = ensemble(&s, params)?;
    let info = classify_support(&p)?;
    let fmt = s.format(common, Format::Json)?;
    let body = match fmt {
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "classify",
            "params": {"a": p.a, "c": p.c, "beta": p.beta},
            "delta": info.delta,
            "cuts": info.cuts.to_string(),
            "lambda1": info.lambda1(),
            "lambda2": info.lambda2(),
            "lambda": info.lambda.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "gamma": info.gamma.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut rows = vec![
                vec!["delta".into(), fmt17(info.delta), String::new()],
                vec!["cuts".into(), info.cuts.to_string(), String::new()],
            ];
            for (k, z) in info.lambda.iter().enumerate() {
                rows.push(vec![format!("lambda{}", k + 1), fmt17(z.re), fmt17(z.im)]);
            }
            for (k, z) in info.gamma.iter().enumerate() {
                rows.push(vec![format!("gamma{}", k + 1), fmt17(z.re), fmt17(z.im)]);
            }
            csv(&["key", "re", "im"], rows)
        }
    };
    Ok((Output { body, side: None, code: EXIT_OK }, s.out(common)))
}

fn density(params: &Triple, grid: &Option<String>, common: &Common) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("density", common)?;
    let p = ensemble(&s, params)?;
    let curve = SpectralCurve::new(&p)?;
    curve.require_one_cut()?;
    let zs = match s.get::<String>("grid", grid.clone())? {
        Some(g) => parse_grid(&g)?,
        None => {
            let (l1, l2) = (curve.support.lambda1(), curve.support.lambda2());
            (0..=200).map(|k| l1 + (l2 - l1) * k as f64 / 200.0).collect()
        }
    };
    let rho = zs.iter().map(|&z| curve.density(z)).collect::<Result<Vec<_>, _>>()?;
    let body = match s.format(common, Format::Csv)? {
        Format::Csv => csv(&["z", "rho", "rho_over_c"], zs.iter().zip(&rho).map(|(&z, &r)| num_row(&[z, r, r / p.c]))),
        Format::Json => to_json(&json!({
            "schema": SCHEMA, "command": "density",
            "params": {"a": p.a, "c": p.c, "beta": p.beta},
            "z": zs, "rho": rho, "rho_over_c": rho.iter().map(|r| r / p.c).collect::<Vec<_>>(),
        })),
    };
    Ok((Output { body, side: None, code: EXIT_OK }, s.out(common)))
}

fn hset(params: &Triple, window: &Option<String>, nx: Option<usize>, ny: Option<usize>, common: &Common) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("hset", common)?;
    let p = ensemble(&s, params)?;
    let win = parse_window(&s.get::<String>("window", window.clone())?.unwrap_or_else(|| "-2,6,-5,5".into()))?;
    let nx = s.get("nx", nx)?.unwrap_or(400);
    let ny = s.get("ny", ny)?.unwrap_or(400);
    let g = trace_hset(&p, win, nx, ny)?;
    let report = json!({
        "schema": SCHEMA, "command": "hset",
        "params": {"a": p.a, "c": p.c, "beta": p.beta},
        "window": [win.re.0, win.re.1, win.im.0, win.im.1], "nx": nx, "ny": ny,
        "x_l": g.x_l, "x_r": g.x_r, "iota": g.iota,
    });
    let out = s.out(common);
    let o = match s.format(common, Format::Csv)? {
        Format::Csv => {
            let rows = g.curves.iter().flat_map(|c| {
                c.points.iter().enumerate().map(move |(i, z)| vec![c.tag.to_string(), i.to_string(), fmt17(z.re), fmt17(z.im)])
            });
            Output { body: csv(&["curve", "point", "re", "im"], rows), side: Some(to_json(&report)), code: EXIT_OK }
        }
        Format::Json => {
            let mut r = report;
            r["curves"] = json!(g
                .curves
                .iter()
                .map(|c| json!({"tag": c.tag.to_string(), "points": c.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()}))
                .collect::<Vec<_>>());
            Output { body: to_json(&r), side: None, code: EXIT_OK }
        }
    };
    Ok((o, out))
}

fn tw(method: Option<MethodArg>, grid: &Option<String>, common: &Common) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("tw", common)?;
    let method = match s.get::<String>("method", None)? {
        _ if method.is_some() => method.unwrap(),
        None => MethodArg::Both,
        Some(m) => MethodArg::from_str(&m, true).map_err(|_| CliError::Usage(format!("config key 'method' = '{m}': expected fredholm, painleve or both")))?,
    };
    let grid = parse_grid(&s.get::<String>("grid", grid.clone())?.unwrap_or_else(|| "-8:4:0.05".into()))?;
    let methods: Vec<TwMethod> = match method {
        MethodArg::Fredholm => vec![TwMethod::Fredholm],
        MethodArg::Painleve => vec![TwMethod::Painleve],
        MethodArg::Both => vec![TwMethod::Fredholm, TwMethod::Painleve],
    };
    let tables = methods.iter().map(|&m| tw_table(&grid, m)).collect::<Result<Vec<_>, _>>()?;
    let body = match s.format(common, Format::Csv)? {
        Format::Csv => {
            let mut header = vec!["s"];
            header.extend(methods.iter().map(|m| if *m == TwMethod::Fredholm { "fredholm" } else { "painleve" }));
            if tables.len() == 2 {
                header.push("abs_diff");
            }
            let rows = grid.iter().enumerate().map(|(i, &x)| {
                let mut r = vec![x];
                r.extend(tables.iter().map(|t| t.f2[i]));
                if tables.len() == 2 {
                    r.push((tables[0].f2[i] - tables[1].f2[i]).abs());
                }
                num_row(&r)
            });
            csv(&header, rows)
        }
        Format::Json => {
            let mut v = json!({"schema": SCHEMA, "command": "tw", "s": grid});
            for t in &tables {
                v[t.method.to_string()] = json!(t.f2);
            }
            to_json(&v)
        }
    };
    Ok((Output { body, side: None, code: EXIT_OK }, s.out(common)))
}

#[allow(clippy::too_many_arguments)]
fn kernel_finite(m: Option<u32>, n: Option<u32>, n1: Option<u32>, a: Option<f64>, grid: &Option<String>, prec: Option<u32>, common: &Common) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("kernel-finite", common)?;
    let w = WeightPair::new(s.need("m", m)?, s.need("n", n)?, s.need("n1", n1)?, s.need("a", a)?)?;
    let prec = s.get("prec", prec)?.unwrap_or(DEFAULT_PREC);
    if !(64..=4096).contains(&prec) {
        return Err(CliError::Usage(format!("--prec {prec} outside 64..=4096")));
    }
    let xs = parse_grid(&s.get::<String>("grid", grid.clone())?.unwrap_or_else(|| "0.25:5:0.25".into()))?;
    let k = FiniteKernel::new(&w, prec)?;
    let mut rows = Vec::with_capacity(xs.len() * xs.len());
    for &x in &xs {
        for &y in &xs {
            rows.push((x, y, k.eval(x, y)?));
        }
    }
    let body = match s.format(common, Format::Csv)? {
        Format::Csv => csv(&["x", "y", "K"], rows.iter().map(|&(x, y, v)| num_row(&[x, y, v]))),
        Format::Json => to_json(&json!({
            "schema": SCHEMA, "command": "kernel-finite",
            "weights": {"m": w.m, "n": w.n, "n1": w.n1, "a": w.a}, "prec": prec,
            "x": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            "y": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            "k": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        })),
    };
    Ok((Output { body, side: None, code: EXIT_OK }, s.out(common)))
}

/// One check of a validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// "<" or ">".
    pub relation: &'static str,
    pub threshold: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        match self.relation {
            "<" => self.value < self.threshold,
            _ => self.value > self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub statistics: Value,
    pub checks: Vec<Check>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub stages: Vec<Stage>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.stages.iter().all(|s| s.checks.iter().all(Check::pass))
    }
}

/// JSON document for a validation report. Keys are emitted in sorted order.
pub fn emit_report(r: &Report) -> CliResult<String> {
    if r.stages.is_empty() {
        return Err(CliError::Usage("report has no stages".into()));
    }
    let stages: Vec<Value> = r
        .stages
        .iter()
        .map(|s| {
            let mut v = json!({
                "name": s.name,
                "statistics": s.statistics,
                "checks": s.checks.iter().map(|c| json!({
                    "name": c.name, "value": c.value, "relation": c.relation,
                    "threshold": c.threshold, "pass": c.pass(),
                })).collect::<Vec<_>>(),
                "pass": s.checks.iter().all(Check::pass),
            });
            if let Some(t) = s.seconds {
                v["wall_clock_s"] = json!(t);
            }
            v
        })
        .collect();
    Ok(to_json(&json!({
        "schema": SCHEMA,
        "command": r.command,
        "seed": r.seed,
        "config": r.config,
        "stages": stages,
        "pass": r.pass(),
    })))
}

fn report_csv(r: &Report) -> String {
    let rows = r.stages.iter().flat_map(|s| {
        s.checks.iter().map(move |c| vec![s.name.clone(), c.name.clone(), fmt17(c.value), c.relation.to_string(), fmt17(c.threshold), c.pass().to_string()])
    });
    csv(&["stage", "check", "value", "relation", "threshold", "pass"], rows)
}

pub struct ValidateArgs {
    pub cfg: SampleConfig,
    pub edge_replicates: usize,
    pub ks_bulk: f64,
    pub ks_spacing: f64,
    pub ks_exponential: f64,
    pub ks_edge: f64,
    pub timings: bool,
}

/// Run the three Monte Carlo checks. Bulk and spacing use the first
/// `cfg.replicates` replicates of one sample; the edge check uses
/// `edge_replicates`.
pub fn run_validation(v: &ValidateArgs) -> CliResult<Report> {
    let cfg = v.cfg;
    let params = cfg.params()?;
    SpectralCurve::new(&params)?.require_one_cut()?;
    if v.edge_replicates < 200 {
        return Err(CliError::Usage(format!("--edge-replicates {} is below 200", v.edge_replicates)));
    }
    let clock = |t: Instant| if v.timings { Some(t.elapsed().as_secs_f64()) } else { None };
    let t = Instant::now();
    let all = montecarlo::sample_spectrum(&SampleConfig { replicates: cfg.replicates.max(v.edge_replicates), ..cfg })?;
    let sampling = clock(t);
    let head = |k: usize| EigenSample { eigenvalues: all.eigenvalues[..k].to_vec(), seeds: all.seeds[..k].to_vec() };
    let bulk_sample = head(cfg.replicates);
    let mut stages = Vec::new();

    let t = Instant::now();
    let b = montecarlo::bulk_density_from(&params, &bulk_sample)?;
    stages.push(Stage {
        name: "bulk_density".into(),
        statistics: json!({"ks": b.ks, "outside_fraction": b.outside_fraction, "samples": b.samples}),
        checks: vec![
            Check { name: "ks".into(), value: b.ks, relation: "<", threshold: v.ks_bulk },
            Check { name: "outside_fraction".into(), value: b.outside_fraction, relation: "<", threshold: 0.01 },
        ],
        seconds: clock(t).map(|x| x + sampling.unwrap_or(0.0)),
    });

    let t = Instant::now();
    let sp = montecarlo::bulk_spacing_from(&params, cfg.m, &bulk_sample)?;
    stages.push(Stage {
        name: "bulk_spacing".into(),
        statistics: json!({"ks_sine": sp.ks_sine, "ks_exponential": sp.ks_exponential, "mean_spacing": sp.mean_spacing, "samples": sp.samples}),
        checks: vec![
            Check { name: "ks_sine".into(), value: sp.ks_sine, relation: "<", threshold: v.ks_spacing },
            Check { name: "ks_exponential".into(), value: sp.ks_exponential, relation: ">", threshold: v.ks_exponential },
        ],
        seconds: clock(t),
    });

    let t = Instant::now();
    let e = montecarlo::edge_fluctuation_from(&params, cfg.m, &head(v.edge_replicates))?;
    stages.push(Stage {
        name: "edge_fluctuation".into(),
        statistics: json!({"ks": e.ks, "mean": e.mean, "tw_mean": e.tw_mean, "samples": e.samples}),
        checks: vec![Check { name: "ks".into(), value: e.ks, relation: "<", threshold: v.ks_edge }],
        seconds: clock(t),
    });

    Ok(Report {
        command: "validate".into(),
        seed: cfg.seed,
        config: json!({
            "m": cfg.m, "n": cfg.n, "n1": cfg.n1, "a": cfg.a,
            "replicates": cfg.replicates, "edge_replicates": v.edge_replicates,
        }),
        stages,
    })
}

#[allow(clippy::too_many_arguments)]
fn validate(
    m: Option<usize>,
    n: Option<usize>,
    n1: Option<usize>,
    a: Option<f64>,
    replicates: Option<usize>,
    edge_replicates: Option<usize>,
    thresholds: [Option<f64>; 4],
    timings: bool,
    common: &Common,
) -> CliResult<(Output, Option<PathBuf>)> {
    let s = Settings::load("validate", common)?;
    let cfg = SampleConfig {
        m: s.need("m", m)?,
        n: s.need("n", n)?,
        n1: s.need("n1", n1)?,
        a: s.need("a", a)?,
        replicates: s.get("replicates", replicates)?.unwrap_or(200),
        seed: s.get("seed", common.seed)?.unwrap_or(0),
    };
    cfg.validate()?;
    let args = ValidateArgs {
        cfg,
        edge_replicates: s.get("edge-replicates", edge_replicates)?.unwrap_or(400),
        ks_bulk: s.get("ks-bulk", thresholds[0])?.unwrap_or(0.02),
        ks_spacing: s.get("ks-spacing", thresholds[1])?.unwrap_or(0.05),
        ks_exponential: s.get("ks-exponential", thresholds[2])?.unwrap_or(0.2),
        ks_edge: s.get("ks-edge", thresholds[3])?.unwrap_or(0.1),
        timings: s.flag("timings", timings)?,
    };
    let report = run_validation(&args)?;
    let body = match s.format(common, Format::Json)? {
        Format::Json => emit_report(&report)?,
        Format::Csv => report_csv(&report),
    };
    let code = if report.pass() { EXIT_OK } else { EXIT_VALIDATION };
    Ok((Output { body, side: None, code }, s.out(common)))
}

fn dispatch(cmd: &Command) -> CliResult<(Output, Option<PathBuf>)> {
    match cmd {
        Command::Classify { params, common } => classify(params, common),
        Command::Density { params, grid, common } => density(params, grid, common),
        Command::Hset { params, window, nx, ny, common } => hset(params, window, *nx, *ny, common),
        Command::Tw { method, grid, common } => tw(*method, grid, common),
        Command::KernelFinite { m, n, n1, a, grid, prec, common } => kernel_finite(*m, *n, *n1, *a, grid, *prec, common),
        Command::Validate { m, n, n1, a, replicates, edge_replicates, ks_bulk, ks_spacing, ks_exponential, ks_edge, timings, common } => {
            validate(*m, *n, *n1, *a, *replicates, *edge_replicates, [*ks_bulk, *ks_spacing, *ks_exponential, *ks_edge], *timings, common)
        }
    }
}

/// Run with explicit arguments (the first is the program name) and
/// streams. Returns the exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok((o, path)) => {
            let written = match &path {
                Some(p) => std::fs::write(p, &o.body).map_err(|e| format!("--out {}: {e}", p.display())),
                None => stdout.write_all(o.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
            if let Some(side) = o.side {
                let _ = if path.is_some() { stdout.write_all(side.as_bytes()) } else { stderr.write_all(side.as_bytes()) };
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

pub fn main() -> i32 {
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    run(std::env::args_os(), &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("-8:4:0.05").unwrap().len(), 241);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn config_lines() {
        let m = parse_config("# comment\n a = 0.9\nbeta=0.7\n\nks_bulk = 0.03").unwrap();
        assert_eq!(m["a"], "0.9");
        assert_eq!(m["ks-bulk"], "0.03");
        assert!(parse_config("a 0.9").is_err());
        assert!(parse_config("a=1\na=2").is_err());
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt17(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt17(-2.5e-300).parse::<f64>().unwrap(), -2.5e-300);
    }

    #[test]
    fn empty_report_is_rejected() {
        let r = Report { command: "validate".into(), seed: 0, config: json!({}), stages: vec![] };
        assert!(emit_report(&r).is_err());
    }
}
