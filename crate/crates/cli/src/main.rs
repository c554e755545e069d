use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use parafermion::bounds::{
    admissibility, minimal_beta, region_scan, solve_conformal_range, variance_ceiling, Axis, BetaChoice,
    BETA_REFINE_TOL, BETA_X_MAX,
};
use parafermion::discrete::{count_walks, local_relation_residual, HexDomain};
use parafermion::loewner_flow::{sample_driving_path, trace_curve_with, TraceOptions};
use parafermion::observable::{estimate_f0, exponents_from, predicted_f, total_mass, McConfig};
use parafermion::reverse_flow::simulate_reverse_path;
use parafermion::verify::{run_check, VerifyConfig, CHECK_COUNT};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Simulation, estimation and verification tools for the radial SLE
/// parafermionic observable.
#[derive(Debug, Parser, Serialize, Deserialize)]
#[command(name = "parafermion", version)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Trace an SLE curve by inverting the forward Loewner flow.
    Flow(FlowArgs),
    /// Simulate one path of the reverse flow.
    Reverse(ReverseArgs),
    /// Monte Carlo estimate of F(0).
    F0(F0Args),
    /// F(z) on a polar grid from a given F(0).
    Predict(PredictArgs),
    /// Minimal beta, variance ceiling and lower bound at one parameter point.
    Bounds(BoundsArgs),
    /// Admissible (a, sigma) region.
    Region(RegionArgs),
    /// Ends of the proven conformal range.
    Roots(RootsArgs),
    /// Exact discrete observable on a hexagonal domain.
    Saw(SawArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct FlowArgs {
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Driving path sample spacing.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    /// Trace every n-th driving sample.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct ReverseArgs {
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct F0Args {
    #[arg(long)]
    kappa: f64,
    /// Spin; defaults to the conformal value b.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    tail_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct PredictArgs {
    #[arg(long)]
    kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    f0_re: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    f0_im: f64,
    /// Radial and angular resolution of the grid.
    #[arg(long, default_value_t = 16)]
    grid: usize,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct BoundsArgs {
    #[arg(long)]
    kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// Use this beta instead of the minimal one.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct RegionArgs {
    /// lo:hi:n
    #[arg(long, default_value = "0.05:1.0:96", allow_hyphen_values = true)]
    a: AxisArg,
    /// lo:hi:n
    #[arg(long, default_value = "-1:1:96", allow_hyphen_values = true)]
    sigma: AxisArg,
    #[arg(long, value_enum, default_value_t = BetaArg::Minimal)]
    beta: BetaArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BetaArg {
    Minimal,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
struct AxisArg(Axis);

impl FromStr for AxisArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("{hi:?}: {e}"))?;
        let n: usize = n.parse().map_err(|e| format!("{n:?}: {e}"))?;
        if n == 0 || lo > hi {
            return Err(format!("need lo <= hi and n >= 1, got {s:?}"));
        }
        Ok(AxisArg(Axis { lo, hi, n }))
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct RootsArgs {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct SawArgs {
    /// Cell list, one "q r" per line; the seven-cell flower when absent.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Step weight; the critical value when absent.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long, default_value_t = 0.625, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, default_value_t = 64)]
    max_len: usize,
    /// Index into the boundary mid-edges (lexicographic order).
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Emit per-vertex residuals instead of the field.
    #[arg(long)]
    residuals: bool,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 2000)]
    ks_paths: usize,
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
    /// Run only these checks (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
}

/// Output of a command: rows for CSV, a value for JSON, and a summary line.
struct Artifact {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    json: Value,
    summary: String,
    default_format: Format,
    success: bool,
}

impl Artifact {
    fn table(header: Vec<&'static str>, rows: Vec<Vec<String>>, json: Value, summary: String) -> Self {
        Artifact { header, rows, json, summary, default_format: Format::Csv, success: true }
    }

    fn record(header: Vec<&'static str>, row: Vec<String>, json: Value, summary: String) -> Self {
        Artifact { header, rows: vec![row], json, summary, default_format: Format::Json, success: true }
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn sigma_or_b(kappa: f64, sigma: Option<f64>) -> Result<f64> {
    match sigma {
        Some(s) => Ok(s),
        None => Ok(parafermion::observable::conformal_exponents(kappa)?.b),
    }
}

fn flow(args: &FlowArgs) -> Result<Artifact> {
    let a = 2.0 / args.kappa;
    let path = sample_driving_path(args.seed, args.duration, args.dt)?;
    let curve = trace_curve_with(&path, a, args.delta, TraceOptions { stride: args.stride, tol: args.tol })?;
    let rows: Vec<Vec<String>> =
        curve.times.iter().zip(&curve.points).map(|(t, p)| vec![num(*t), num(p.re), num(p.im)]).collect();
    let json = json!({ "curve": curve });
    let summary = format!("traced {} points ({} dropped)", curve.points.len(), curve.dropped);
    Ok(Artifact::table(vec!["t", "re", "im"], rows, json, summary))
}

fn reverse(args: &ReverseArgs) -> Result<Artifact> {
    let path = simulate_reverse_path(2.0 / args.kappa, args.delta, args.duration, args.dt, args.seed)?;
    let rows = path.iter().map(|s| vec![num(s.t), num(s.theta), num(s.r), num(s.t_drift())]).collect();
    let last = path.last().expect("path starts with the initial state");
    let summary = format!("{} states, R = {:.6} at t = {}", path.len(), last.r, last.t);
    Ok(Artifact::table(vec!["t", "theta", "r", "T"], rows, json!({ "path": path }), summary))
}

fn f0(args: &F0Args) -> Result<Artifact> {
    let sigma = sigma_or_b(args.kappa, args.sigma)?;
    let e = exponents_from(args.kappa, sigma)?;
    let mc = McConfig { n: args.paths, dt: args.dt, delta: args.delta, tail_tol: args.tail_tol, seed: args.seed };
    let est = estimate_f0(&e, &mc)?;
    let report = est.report(&mc);
    let summary = format!(
        "F(0) = {:.6} {:+.6}i ± {:.6} ({} paths, {} dropped)",
        report.mean_re, report.mean_im, report.stderr, report.n, est.dropped
    );
    let row = vec![
        num(report.kappa),
        num(report.sigma),
        num(report.nu),
        num(report.b),
        num(report.b_tilde),
        report.n.to_string(),
        num(report.mean_re),
        num(report.mean_im),
        num(report.stderr),
        num(report.delta),
        num(report.dt),
        report.seed.to_string(),
    ];
    let header =
        vec!["kappa", "sigma", "nu", "b", "b_tilde", "n", "mean_re", "mean_im", "stderr", "delta", "dt", "seed"];
    Ok(Artifact::record(header, row, serde_json::to_value(&report)?, summary))
}

fn predict(args: &PredictArgs) -> Result<Artifact> {
    let sigma = sigma_or_b(args.kappa, args.sigma)?;
    let e = exponents_from(args.kappa, sigma)?;
    let f0 = Complex64::new(args.f0_re, args.f0_im);
    let n = args.grid.max(1);
    let mut rows = Vec::new();
    for i in 0..n {
        let radius = 0.95 * i as f64 / n as f64;
        let angles = if i == 0 { 1 } else { n };
        for j in 0..angles {
            let z = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let f = predicted_f(z, &e, f0)?;
            rows.push(vec![num(z.re), num(z.im), num(f.re), num(f.im), num(total_mass(z, &e)?)]);
        }
    }
    let summary = format!("{} grid points at kappa = {}, sigma = {}", rows.len(), args.kappa, sigma);
    let json = json!({ "exponents": e, "f0": [f0.re, f0.im], "points": rows });
    Ok(Artifact::table(vec!["re_z", "im_z", "re_f", "im_f", "total_mass"], rows, json, summary))
}

fn bounds(args: &BoundsArgs) -> Result<Artifact> {
    let a = 2.0 / args.kappa;
    let sigma = sigma_or_b(args.kappa, args.sigma)?;
    let profile = minimal_beta(a, BETA_X_MAX, BETA_REFINE_TOL)?;
    let beta = args.beta.unwrap_or(profile.beta_min);
    let ceiling =
        variance_ceiling(a, beta).with_context(|| format!("no variance ceiling at a = {a}, beta = {beta}"))?;
    let adm = admissibility(a, sigma, &[beta]);
    let json = json!({
        "a": a, "sigma": sigma, "beta": beta, "profile": profile,
        "ceiling": ceiling, "lower_bound": adm.lower_bound, "admissible": adm.admissible,
    });
    let summary = format!("beta = {beta:.8}, ceiling = {ceiling:.6}, F(0) >= {:.6}", adm.lower_bound);
    let header = vec!["a", "sigma", "beta", "beta_min", "ceiling", "lower_bound", "admissible"];
    let row = vec![
        num(a),
        num(sigma),
        num(beta),
        num(profile.beta_min),
        num(ceiling),
        num(adm.lower_bound),
        adm.admissible.to_string(),
    ];
    Ok(Artifact::record(header, row, json, summary))
}

fn region(args: &RegionArgs) -> Result<Artifact> {
    let choice = match args.beta {
        BetaArg::Minimal => BetaChoice::Minimal,
        BetaArg::Fixed => BetaChoice::Fixed,
    };
    let grid = region_scan(args.a.0, args.sigma.0, choice)?;
    let mut rows = Vec::new();
    let mut count = 0;
    for (i, &a) in grid.a_values.iter().enumerate() {
        for (j, &s) in grid.sigma_values.iter().enumerate() {
            let beta = grid.beta[i].map_or_else(|| "NaN".to_string(), num);
            count += grid.admissible[i][j] as usize;
            rows.push(vec![num(a), num(s), beta, num(grid.lower_bound[i][j]), grid.admissible[i][j].to_string()]);
        }
    }
    let summary = format!("{count} of {} cells admissible", rows.len());
    Ok(Artifact::table(
        vec!["a", "sigma", "beta_min", "lower_bound", "admissible"],
        rows,
        serde_json::to_value(&grid)?,
        summary,
    ))
}

fn roots(args: &RootsArgs) -> Result<Artifact> {
    let r = solve_conformal_range(args.tol)?;
    let summary = format!("a in ({:.10}, {:.10}), kappa in ({:.10}, {:.10})", r.a0, r.a1, r.kappa0, r.kappa1);
    let row = vec![num(r.a0), num(r.a1), num(r.kappa0), num(r.kappa1), num(r.residuals[0]), num(r.residuals[1])];
    Ok(Artifact::record(
        vec!["a0", "a1", "kappa0", "kappa1", "residual0", "residual1"],
        row,
        serde_json::to_value(r)?,
        summary,
    ))
}

fn saw(args: &SawArgs) -> Result<Artifact> {
    let domain = match &args.domain {
        Some(p) => HexDomain::from_text(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => HexDomain::flower(),
    };
    let boundary = domain.boundary_mid_edges();
    let Some(&w) = boundary.get(args.start) else {
        bail!("start index {} out of range ({} boundary mid-edges)", args.start, boundary.len());
    };
    let x = args.x.unwrap_or_else(parafermion::discrete::critical_x);
    let counts = count_walks(&domain, w, args.max_len)?;
    let field = counts.field(x, args.sigma);
    let trunc = if field.truncated { ", truncated by max-len" } else { "" };
    if args.residuals {
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for (v, vert) in domain.vertices.iter().enumerate() {
            let r = local_relation_residual(&domain, &field, v)?;
            worst = worst.max(r.norm());
            rows.push(vec![num(vert.pos.re), num(vert.pos.im), num(r.re), num(r.im), num(r.norm())]);
        }
        let summary = format!("max residual {worst:.3e} over {} vertices{trunc}", rows.len());
        let json = json!({ "truncated": field.truncated, "residuals": rows });
        return Ok(Artifact::table(vec!["x", "y", "re", "im", "abs"], rows, json, summary));
    }
    let rows: Vec<Vec<String>> = domain
        .mid_edges
        .iter()
        .zip(field.values.iter().zip(&field.unsigned))
        .map(|(m, (f, u))| vec![num(m.pos.re), num(m.pos.im), num(f.re), num(f.im), num(*u)])
        .collect();
    let summary = format!("{} walks, {} mid-edges{trunc}", counts.total(), rows.len());
    Ok(Artifact::table(
        vec!["x", "y", "re_f", "im_f", "unsigned"],
        rows,
        json!({ "walks": counts.total(), "field": field }),
        summary,
    ))
}

fn verify(args: &VerifyArgs) -> Result<Artifact> {
    let cfg = VerifyConfig { paths: args.paths, ks_paths: args.ks_paths, seed: args.seed };
    let ids: Vec<u8> = if args.only.is_empty() { (1..=CHECK_COUNT).collect() } else { args.only.clone() };
    let mut checks = Vec::new();
    for id in ids {
        let Some(c) = run_check(id, &cfg) else {
            bail!("unknown check {id} (valid: 1 to {CHECK_COUNT})");
        };
        eprintln!("{}", c.line());
        checks.push(c);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let rows = checks
        .iter()
        .map(|c| vec![c.id.to_string(), c.name.clone(), c.pass.to_string(), num(c.seconds), c.detail.clone()])
        .collect();
    let summary = format!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(Artifact {
        header: vec!["id", "name", "pass", "seconds", "detail"],
        rows,
        json: json!({ "checks": checks }),
        summary,
        default_format: Format::Json,
        success: failed == 0,
    })
}

fn render(art: &Artifact, format: Format, config: &RunConfig) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&art.header)?;
            for row in &art.rows {
                w.write_record(row)?;
            }
            Ok(w.into_inner()?)
        }
        Format::Json => {
            let mut v = json!({ "config": config });
            if let (Value::Object(out), Value::Object(body)) = (&mut v, &art.json) {
                out.extend(body.clone());
            } else {
                v["result"] = art.json.clone();
            }
            let mut s = serde_json::to_vec_pretty(&v)?;
            s.push(b'\n');
            Ok(s)
        }
    }
}

fn run(config: &RunConfig) -> Result<bool> {
    let art = match &config.command {
        Command::Flow(a) => flow(a)?,
        Command::Reverse(a) => reverse(a)?,
        Command::F0(a) => f0(a)?,
        Command::Predict(a) => predict(a)?,
        Command::Bounds(a) => bounds(a)?,
        Command::Region(a) => region(a)?,
        Command::Roots(a) => roots(a)?,
        Command::Saw(a) => saw(a)?,
        Command::Verify(a) => verify(a)?,
    };
    let bytes = render(&art, config.format.unwrap_or(art.default_format), config)?;
    match &config.out {
        Some(p) => fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    eprintln!("{}", art.summary);
    Ok(art.success)
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
