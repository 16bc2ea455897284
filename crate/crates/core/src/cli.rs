//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or input error (a JSON
//! object `{code, message, context}` is written to stderr), 3 when `verify`
//! has a failing check.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::estimate::{default_k, hill_estimator, tail_scan, EmpiricalLaw};
use crate::fluctuation::{ExpTimeLaw, PassageLaw};
use crate::laplace::Method;
use crate::models::{parse_key_values, LevyModel, ModelConfig};
use crate::scale::{Backend, ScaleEvaluator, ScaleOptions};
use crate::simulate::{simulate_path, simulate_paths, SimConfig, StoppedStats, StoppingRule};
use crate::verify::{run_check, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "maxloss", version, about = "Maximum loss and gain of Lévy processes: formulas and Monte Carlo checks")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Nodes of the fixed Talbot contour used for scale functions.
    #[arg(long, global = true)]
    talbot_nodes: Option<usize>,
    /// Key/value configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// bm, stable-sn, stable or jump-diffusion.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    jump_rate: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    jump_mean: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate W^(q), Z^(q) and W^(q)'+.
    Scale(ScaleArgs),
    /// Evaluate a distribution formula.
    Dist(DistArgs),
    /// Simulate paths and summarise the stopped functionals.
    Simulate(SimulateArgs),
    /// Hill tail-index estimate from a CSV sample.
    TailIndex(TailArgs),
    /// Compare formulas with Monte Carlo estimates.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Stability index of a stable model.
    #[arg(long, visible_alias = "model-alpha")]
    alpha: Option<f64>,
    /// Skewness of a stable model.
    #[arg(long, visible_alias = "model-beta", allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Grid A:B:N of N points from A to B.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKind {
    /// P(M- <= u) at passage above beta.
    MaxlossPassage,
    /// P(M- <= u, I >= -alpha) at passage above beta.
    JointPassage,
    /// P(M- <= u, M+ <= v) at passage above beta.
    JointGain,
    /// P(M-_T > a) at an exponential time with rate gamma.
    MaxlossExp,
    /// P(M+_T > a) at an exponential time with rate gamma.
    MaxgainExp,
    /// P(a < I_T, S_T < b).
    SupInf,
    /// h at x - a = x.
    H,
}

impl DistKind {
    fn grid_var(&self) -> &'static str {
        match self {
            DistKind::MaxlossPassage | DistKind::JointPassage | DistKind::JointGain => "u",
            DistKind::MaxlossExp | DistKind::MaxgainExp => "a",
            DistKind::SupInf => "b",
            DistKind::H => "x",
        }
    }

    fn params(&self) -> &'static [&'static str] {
        match self {
            DistKind::MaxlossPassage => &["u", "beta"],
            DistKind::JointPassage => &["u", "alpha", "beta"],
            DistKind::JointGain => &["u", "v", "beta"],
            DistKind::MaxlossExp | DistKind::MaxgainExp => &["a", "gamma"],
            DistKind::SupInf => &["a", "b", "gamma"],
            DistKind::H => &["x", "gamma"],
        }
    }
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(value_enum)]
    kind: DistKind,
    #[command(flatten)]
    model: ModelArgs,
    /// Stability index of a stable model.
    #[arg(long)]
    model_alpha: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Infimum barrier.
    #[arg(long)]
    alpha: Option<f64>,
    /// Passage level.
    #[arg(long)]
    beta: Option<f64>,
    /// Rate of the exponential time.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Distance x - a above the barrier, for h.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Grid A:B:N over the first argument of the chosen law.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, visible_alias = "model-alpha")]
    alpha: Option<f64>,
    #[arg(long, visible_alias = "model-beta", allow_hyphen_values = true)]
    beta: Option<f64>,
    /// fixed:T, passage:B or exp:G.
    #[arg(long)]
    stop: String,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    bridge_correction: bool,
    /// Stop once the maximum loss exceeds this value.
    #[arg(long)]
    drawdown_cap: Option<f64>,
    /// Stop at the first passage below this negative level.
    #[arg(long, allow_hyphen_values = true)]
    barrier: Option<f64>,
    /// Write the grids of the first paths to this CSV file.
    #[arg(long)]
    emit_paths: Option<String>,
    #[arg(long, default_value_t = 10)]
    emit_count: usize,
}

#[derive(Debug, Args)]
struct TailArgs {
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "m_minus")]
    column: String,
    #[arg(long, conflicts_with = "scan")]
    k: Option<usize>,
    /// Scan K1:K2:STEP.
    #[arg(long)]
    scan: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// theorem1, theorem2, corollary1, prop-exp-time, prop-sup-inf, theorem3 or all.
    check: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    model_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    model_beta: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Passage level for the marginal maximum-loss check.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Turn off the Brownian-bridge extremes.
    #[arg(long)]
    no_bridge: bool,
    /// Add wall-clock runtimes to the report.
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Usage(String),
    Module(Error, String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e, String::new())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Ctx {
    global: GlobalArgs,
    file: BTreeMap<String, String>,
}

impl Ctx {
    fn file_num<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Failure::Module(Error::Input(format!("config key {key}: bad value '{v}'")), "config".into())),
        }
    }

    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file_num(key),
        }
    }

    fn seed(&self) -> CliResult<u64> {
        Ok(self.pick(self.global.seed, "seed")?.unwrap_or(7))
    }

    fn workers(&self) -> CliResult<usize> {
        Ok(self.pick(self.global.workers, "workers")?.unwrap_or(0))
    }

    fn scale_options(&self) -> CliResult<ScaleOptions> {
        let mut opts = ScaleOptions::default();
        if let Some(n) = self.pick(self.global.talbot_nodes, "talbot_nodes")? {
            opts.method = Method::FixedTalbot(n);
            opts.method.validate()?;
        }
        Ok(opts)
    }

    /// The model from file keys overlaid with flags, or `None` if no model is named.
    fn model(&self, m: &ModelArgs, alpha: Option<f64>, beta: Option<f64>) -> CliResult<Option<LevyModel>> {
        let mut map: BTreeMap<String, String> = self
            .file
            .iter()
            .filter(|(k, _)| crate::models::MODEL_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if let Some(name) = &m.model {
            map.insert("model".into(), name.clone());
        }
        let nums = [
            ("mu", m.mu),
            ("sigma", m.sigma),
            ("c", m.c),
            ("jump_rate", m.jump_rate),
            ("jump_mean", m.jump_mean),
            ("alpha", alpha),
            ("beta", beta),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                map.insert(k.into(), v.to_string());
            }
        }
        if !map.contains_key("model") {
            return Ok(None);
        }
        let cfg = ModelConfig::from_map(&map)?;
        Ok(Some(LevyModel::try_from(cfg)?))
    }

    fn require_model(&self, m: &ModelArgs, alpha: Option<f64>, beta: Option<f64>) -> CliResult<LevyModel> {
        self.model(m, alpha, beta)?
            .ok_or_else(|| Failure::Usage("a model is required (--model or a config file)".into()))
    }

    fn emit(&self, out: &mut dyn Write, json_value: &Value, csv_rows: Option<(Vec<String>, Vec<Vec<f64>>)>) -> CliResult<()> {
        let text = match (self.global.format, csv_rows) {
            (Format::Csv, Some((header, rows))) => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&header).map_err(io_error)?;
                for r in rows {
                    w.write_record(r.iter().map(|v| v.to_string())).map_err(io_error)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| io_error(e.into_error()))?).expect("csv is utf-8")
            }
            _ => serde_json::to_string_pretty(json_value).expect("json") + "\n",
        };
        write_output(self.global.out.as_deref(), out, &text)
    }
}

fn io_error<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Module(Error::Input(e.to_string()), "io".into())
}

fn write_output(path: Option<&str>, out: &mut dyn Write, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(format!("{p}: {e}"))),
        None => out.write_all(text.as_bytes()).map_err(io_error),
    }
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::Usage(format!("grid '{spec}' is not of the form A:B:N"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn scale_cmd(ctx: &Ctx, args: &ScaleArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ctx.require_model(&args.model, args.alpha, args.beta)?;
    let backend = match args.backend {
        Some(BackendArg::Closed) => Backend::ClosedForm,
        Some(BackendArg::Numeric) => Backend::NumericInversion,
        None => ScaleEvaluator::new(model, args.q)?.backend(),
    };
    let ev = ScaleEvaluator::with_options(model, args.q, backend, ctx.scale_options()?)?;
    let xs = match (&args.grid, args.x) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(x)) => vec![x],
        (None, None) => return Err(Failure::Usage("scale needs --x or --grid".into())),
    };
    let mut rows = Vec::new();
    let mut objs = Vec::new();
    for &x in &xs {
        let w = ev.w(x)?;
        let z = ev.z(x)?;
        let wp = if x > 0.0 { Some(ev.w_right_derivative(x)?) } else { None };
        rows.push(vec![x, w, z, wp.unwrap_or(f64::NAN)]);
        objs.push(json!({"x": x, "W": w, "Z": z, "Wprime": wp}));
    }
    let value = if args.grid.is_none() { objs.remove(0) } else { Value::Array(objs) };
    let header = ["x", "W", "Z", "Wprime"].map(String::from).to_vec();
    ctx.emit(out, &value, Some((header, rows)))
}

fn dist_cmd(ctx: &Ctx, args: &DistArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ctx.require_model(&args.model, args.model_alpha, None)?;
    let given: BTreeMap<&str, Option<f64>> = [
        ("u", args.u),
        ("v", args.v),
        ("alpha", args.alpha),
        ("beta", args.beta),
        ("gamma", args.gamma),
        ("a", args.a),
        ("b", args.b),
        ("x", args.x),
    ]
    .into_iter()
    .collect();
    let var = args.kind.grid_var();
    let points = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => vec![given[var].ok_or_else(|| Failure::Usage(format!("--{var} is required")))?],
    };
    let mut fixed = BTreeMap::new();
    for &p in args.kind.params() {
        if p != var {
            let v = given[p].ok_or_else(|| Failure::Usage(format!("--{p} is required")))?;
            fixed.insert(p, v);
        }
    }
    let opts = ctx.scale_options()?;
    let passage = || -> CliResult<PassageLaw> {
        let backend = ScaleEvaluator::new(model, 0.0)?.backend();
        Ok(PassageLaw::from_evaluator(ScaleEvaluator::with_options(model, 0.0, backend, opts)?)?)
    };
    let exp = || -> CliResult<ExpTimeLaw> {
        let g = fixed["gamma"];
        let backend = ScaleEvaluator::new(model, g)?.backend();
        Ok(ExpTimeLaw::from_evaluator(ScaleEvaluator::with_options(model, g, backend, opts)?)?)
    };
    enum Law {
        Passage(PassageLaw),
        Exp(ExpTimeLaw),
    }
    let law = match args.kind {
        DistKind::MaxlossPassage | DistKind::JointPassage | DistKind::JointGain => Law::Passage(passage()?),
        _ => Law::Exp(exp()?),
    };
    let header: Vec<String> = args.kind.params().iter().map(|s| s.to_string()).chain(["p".to_string()]).collect();
    let mut rows = Vec::new();
    let mut objs = Vec::new();
    for &t in &points {
        let mut vals = fixed.clone();
        vals.insert(var, t);
        let p = match (&law, args.kind) {
            (Law::Passage(l), DistKind::MaxlossPassage) => l.maxloss_cdf(vals["u"], vals["beta"]),
            (Law::Passage(l), DistKind::JointPassage) => l.joint_maxloss_inf_cdf(vals["u"], vals["alpha"], vals["beta"]),
            (Law::Passage(l), DistKind::JointGain) => l.joint_maxloss_maxgain_cdf(vals["u"], vals["v"], vals["beta"]),
            (Law::Exp(l), DistKind::MaxlossExp) => l.maxloss_tail(vals["a"]),
            (Law::Exp(l), DistKind::MaxgainExp) => l.maxgain_tail(vals["a"]),
            (Law::Exp(l), DistKind::SupInf) => l.sup_inf_cdf(vals["a"], vals["b"]),
            (Law::Exp(l), DistKind::H) => l.h(vals["x"]),
            _ => unreachable!(),
        }?;
        let mut obj = serde_json::Map::new();
        let mut row = Vec::new();
        for &name in args.kind.params() {
            obj.insert(name.into(), json!(vals[name]));
            row.push(vals[name]);
        }
        obj.insert("p".into(), json!(p));
        row.push(p);
        rows.push(row);
        objs.push(Value::Object(obj));
    }
    let value = if args.grid.is_none() { objs.remove(0) } else { Value::Array(objs) };
    ctx.emit(out, &value, Some((header, rows)))
}

fn summary(values: &[f64]) -> Value {
    match EmpiricalLaw::new(values.to_vec()) {
        Err(_) => Value::Null,
        Ok(law) => json!({
            "mean": law.mean(),
            "se": law.std_error(),
            "q05": law.quantile(0.05),
            "q25": law.quantile(0.25),
            "q50": law.quantile(0.5),
            "q75": law.quantile(0.75),
            "q95": law.quantile(0.95),
        }),
    }
}

fn simulate_cmd(ctx: &Ctx, args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ctx.require_model(&args.model, args.alpha, args.beta)?;
    let stopping = StoppingRule::parse(&args.stop).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut cfg = SimConfig::new(model, stopping);
    if let Some(dt) = ctx.pick(args.dt, "dt")? {
        cfg.dt = dt;
    }
    if let Some(n) = ctx.pick(args.paths, "paths")? {
        cfg.n_paths = n;
    }
    if let Some(h) = ctx.pick(args.horizon, "horizon")? {
        cfg.horizon = h;
    }
    cfg.seed = ctx.seed()?;
    cfg.workers = ctx.workers()?;
    cfg.bridge_correction = args.bridge_correction;
    cfg.drawdown_cap = args.drawdown_cap;
    cfg.barrier_below = args.barrier;
    let stats = simulate_paths(&cfg)?;

    if let Some(path) = &args.out_path(ctx) {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_error(format!("{path}: {e}")))?;
        for s in &stats {
            w.serialize(s).map_err(io_error)?;
        }
        w.flush().map_err(io_error)?;
    }
    if let Some(path) = &args.emit_paths {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_error(format!("{path}: {e}")))?;
        w.write_record(["path", "t", "x", "sup", "inf", "drawdown", "drawup"]).map_err(io_error)?;
        for i in 0..args.emit_count.min(cfg.n_paths) {
            let (g, _) = simulate_path(&cfg, i as u64)?;
            for k in 0..g.values.len() {
                let rec = [
                    i.to_string(),
                    g.times[k].to_string(),
                    g.values[k].to_string(),
                    g.running_sup[k].to_string(),
                    g.running_inf[k].to_string(),
                    g.drawdown[k].to_string(),
                    g.drawup[k].to_string(),
                ];
                w.write_record(&rec).map_err(io_error)?;
            }
        }
        w.flush().map_err(io_error)?;
    }

    let mut reasons = BTreeMap::new();
    for s in &stats {
        *reasons.entry(s.stop_reason.as_str()).or_insert(0usize) += 1;
    }
    let col = |f: fn(&StoppedStats) -> f64| summary(&stats.iter().map(f).collect::<Vec<_>>());
    let value = json!({
        "model": ModelConfig::from(model),
        "paths": stats.len(),
        "dt": cfg.dt,
        "seed": cfg.seed,
        "stop": args.stop,
        "stop_reasons": reasons,
        "m_minus": col(|s| s.m_minus),
        "m_plus": col(|s| s.m_plus),
        "sup": col(|s| s.sup),
        "inf": col(|s| s.inf),
        "stop_time": col(|s| s.stop_time),
    });
    let text = serde_json::to_string_pretty(&value).expect("json") + "\n";
    out.write_all(text.as_bytes()).map_err(io_error)
}

impl SimulateArgs {
    /// Samples go to `--out`; the summary always goes to stdout.
    fn out_path(&self, ctx: &Ctx) -> Option<String> {
        ctx.global.out.clone()
    }
}

fn read_column(path: &str, column: &str) -> CliResult<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_error(format!("{path}: {e}")))?;
    let headers = r.headers().map_err(io_error)?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Failure::Module(Error::Input(format!("{path}: no column '{column}'")), "tail-index".into()))?;
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(io_error)?;
        let field = rec.get(idx).unwrap_or("").trim();
        let v: f64 = field.parse().map_err(|_| {
            Failure::Module(
                Error::Input(format!("{path}: row {}: '{field}' is not a number", line + 2)),
                "tail-index".into(),
            )
        })?;
        values.push(v);
    }
    Ok(values)
}

fn tail_cmd(ctx: &Ctx, args: &TailArgs, out: &mut dyn Write) -> CliResult<()> {
    let law = EmpiricalLaw::new(read_column(&args.input, &args.column)?)?;
    if let Some(spec) = &args.scan {
        let bad = || Failure::Usage(format!("scan '{spec}' is not of the form K1:K2:STEP"));
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        if parts.len() != 3 || parts[2] == 0 {
            return Err(bad());
        }
        let ks: Vec<usize> = (parts[0]..=parts[1]).step_by(parts[2]).collect();
        let fits = tail_scan(&law, &ks)?;
        let rows = fits.iter().map(|f| vec![f.k as f64, f.index_estimate, f.std_error]).collect();
        let header = ["k", "alpha_hat", "se"].map(String::from).to_vec();
        return ctx.emit(out, &serde_json::to_value(&fits).expect("json"), Some((header, rows)));
    }
    let k = args.k.unwrap_or_else(|| default_k(law.len()));
    let fit = hill_estimator(&law, k)?;
    let header = ["k", "alpha_hat", "se"].map(String::from).to_vec();
    let rows = vec![vec![fit.k as f64, fit.index_estimate, fit.std_error]];
    ctx.emit(out, &serde_json::to_value(fit).expect("json"), Some((header, rows)))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    pass: bool,
    reports: &'a [crate::verify::VerifyReport],
}

fn verify_cmd(ctx: &Ctx, args: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut opts = VerifyOptions {
        model: ctx.model(&args.model, args.model_alpha, args.model_beta)?,
        seed: ctx.seed()?,
        workers: ctx.workers()?,
        scale: ctx.scale_options()?,
        timing: args.timing,
        ..Default::default()
    };
    if let Some(n) = ctx.pick(args.paths, "paths")? {
        opts.paths = n;
    }
    if let Some(dt) = ctx.pick(args.dt, "dt")? {
        opts.dt = dt;
    }
    if let Some(b) = args.beta {
        opts.beta = b;
    }
    if let Some(g) = ctx.pick(args.gamma, "gamma")? {
        opts.gamma = g;
    }
    if let Some(h) = ctx.pick(args.horizon, "horizon")? {
        opts.horizon = h;
    }
    if args.no_bridge {
        opts.bridge = Some(false);
    }
    let reports = run_check(&args.check, &opts).map_err(|e| match e {
        Error::Argument(m) => Failure::Usage(m),
        other => Failure::Module(other, format!("verify {}", args.check)),
    })?;
    let pass = reports.iter().all(|r| r.pass);
    let value = serde_json::to_value(VerifyOutput { pass, reports: &reports }).expect("json");
    let header = ["analytic_value", "mc_estimate", "mc_std_error", "z_score", "pass"].map(String::from);
    let header: Vec<String> = header.to_vec();
    let rows = reports
        .iter()
        .flat_map(|r| r.rows.iter())
        .map(|row| {
            vec![
                row.analytic_value,
                row.mc_estimate,
                row.mc_std_error,
                row.z_score.unwrap_or(f64::NAN),
                if row.pass { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    ctx.emit(out, &value, Some((header, rows)))?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
        Err(Failure::Verify(failed.join(", ")))
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let context = match &cli.command {
        Command::Scale(_) => "scale",
        Command::Dist(_) => "dist",
        Command::Simulate(_) => "simulate",
        Command::TailIndex(_) => "tail-index",
        Command::Verify(_) => "verify",
    };
    let result = (|| -> CliResult<()> {
        let file = match &cli.global.config {
            None => BTreeMap::new(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| io_error(format!("{p}: {e}")))?;
                parse_key_values(&text)?
            }
        };
        let ctx = Ctx {
            global: cli.global,
            file,
        };
        match &cli.command {
            Command::Scale(a) => scale_cmd(&ctx, a, out),
            Command::Dist(a) => dist_cmd(&ctx, a, out),
            Command::Simulate(a) => simulate_cmd(&ctx, a, out),
            Command::TailIndex(a) => tail_cmd(&ctx, a, out),
            Command::Verify(a) => verify_cmd(&ctx, a, out),
        }
    })();
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Module(e, ctx_note)) => {
            let obj = json!({
                "code": e.code(),
                "message": e.to_string(),
                "context": if ctx_note.is_empty() { context.to_string() } else { ctx_note },
            });
            let _ = writeln!(err, "{obj}");
            2
        }
        Err(Failure::Verify(which)) => {
            let _ = writeln!(err, "verification failed: {which}");
            3
        }
    }
}
