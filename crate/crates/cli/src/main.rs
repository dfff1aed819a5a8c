use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levystop_core::{
    check_assumptions, class_d_closed_form, emery_root, epsilon_stop_paths, kou_roots, phi, policy_value,
    simulate_hit_levels, sweep, threshold_with, AssumptionReport, ConvexityPolicy, EpsilonBoundary, Error,
    HittingTransforms, LevyModel, McEstimate, ProblemInput, ProblemSpec, ScaleFunction, SimConfig, ThresholdOptions,
    ThresholdResult, ValueFunction,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "levystop", version, about = "Optimal liquidation thresholds for Levy-driven firm values")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exponent, roots and assumption report for a problem.
    Inspect(Io),
    /// Optimal threshold B_c as JSON.
    Threshold {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Convexity::Abort)]
        convexity: Convexity,
    },
    /// Value function w and s over a grid of firm values.
    Value {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Scale function W^(q), W^(q)' and Z^(q) over a grid of x.
    ScaleFn {
        #[command(flatten)]
        io: Io,
        /// Defaults to the discount rate of the spec.
        #[arg(long)]
        q: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte Carlo value of one threshold policy, as JSON.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sim: SimArgs,
        /// Threshold; defaults to B_c.
        #[arg(long, conflicts_with = "threshold")]
        b: Option<f64>,
        /// Output of `levystop threshold`; its b_c is used.
        #[arg(long)]
        threshold: Option<PathBuf>,
    },
    /// Monte Carlo policy values over a grid of thresholds.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sim: SimArgs,
        /// Defaults to 21 geometric points over [B_c/3, 3 B_c].
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte Carlo downward passage transforms L and G at negative levels.
    Hit {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Stopping times of the epsilon-optimal rules.
    Epsilon {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sim: SimArgs,
        /// Comma separated, descending.
        #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01,0.001,0.0001")]
        eps: Vec<f64>,
    },
    /// Class D diagnostic E[exp(-r R_n + X_{R_n})] over a ladder of n.
    Classd {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sim: SimArgs,
        /// Defaults to n = 2, 4, ..., 256.
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    spec: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat numerical-quality warnings as failures (exit 3).
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GridArgs {
    /// "a:b:n", n points from a to b inclusive.
    #[arg(long)]
    grid: Option<String>,
    /// Space the grid points geometrically.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Time cap; defaults to 50/(r - psi(1)).
    #[arg(long)]
    horizon: Option<f64>,
    /// Disable the Brownian bridge crossing correction.
    #[arg(long)]
    no_bridge: bool,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.paths,
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            bridge_correction: !self.no_bridge,
            ..SimConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Convexity {
    Abort,
    Warn,
    Skip,
}

enum Failure {
    Input(String),
    Assumption(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Assumption(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Assumption(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Assumption(_) => Failure::Assumption(msg),
            // E[e^Y] < ∞ is one of the standing assumptions.
            Error::InvalidParameter { name: "eta1", .. } => Failure::Assumption(msg),
            Error::InvalidParameter { .. } | Error::Domain { .. } | Error::Unsupported { .. } => Failure::Input(msg),
            Error::Bracket(_) | Error::Accuracy(_) | Error::Convexity(_) => Failure::Numerical(msg),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(format!("writing csv: {e}"))
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message());
        return ExitCode::from(f.code());
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> Res<()> {
    let Ok(raw) = std::env::var("LEVYSTOP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("LEVYSTOP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))
}

fn run(cmd: Cmd) -> Res<()> {
    match cmd {
        Cmd::Inspect(io) => inspect(&io),
        Cmd::Threshold { io, convexity } => {
            let spec = load_spec(&io.spec)?;
            let th = solve(&spec, convexity)?;
            warn_or_fail(&io, &th.warnings)?;
            emit_json(&io, &th)
        }
        Cmd::Value { io, grid } => value(&io, &grid),
        Cmd::ScaleFn { io, q, grid } => scale_fn(&io, q, &grid),
        Cmd::Simulate { io, sim, b, threshold } => simulate(&io, &sim, b, threshold.as_deref()),
        Cmd::Sweep { io, sim, grid } => run_sweep(&io, &sim, &grid),
        Cmd::Hit { io, sim, grid } => hit(&io, &sim, &grid),
        Cmd::Epsilon { io, sim, eps } => epsilon(&io, &sim, &eps),
        Cmd::Classd { io, sim, grid } => classd(&io, &sim, &grid),
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("reading {}: {e}", path.display())))
}

fn load_input(path: &Path) -> Res<ProblemInput> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("parsing {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Res<ProblemSpec> {
    Ok(ProblemSpec::try_from(load_input(path)?)?)
}

fn solve(spec: &ProblemSpec, convexity: Convexity) -> Res<ThresholdResult> {
    let opts = ThresholdOptions {
        convexity: match convexity {
            Convexity::Abort => ConvexityPolicy::Abort,
            Convexity::Warn => ConvexityPolicy::Warn,
            Convexity::Skip => ConvexityPolicy::Skip,
        },
        scale: None,
    };
    Ok(threshold_with(spec, &opts)?)
}

fn warn_or_fail(io: &Io, warnings: &[String]) -> Res<()> {
    if warnings.is_empty() {
        return Ok(());
    }
    if io.strict {
        return Err(Failure::Numerical(warnings.join("; ")));
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn sink(io: &Io) -> Res<Box<dyn Write>> {
    match &io.out {
        Some(p) => fs::File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Input(format!("creating {}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit_json<T: Serialize>(io: &Io, value: &T) -> Res<()> {
    let mut w = sink(io)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Input(format!("writing output: {e}")))
}

fn csv_writer(io: &Io) -> Res<csv::Writer<Box<dyn Write>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(sink(io)?))
}

/// 17 significant digits, independent of locale.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn parse_grid(raw: &str, log: bool) -> Res<Vec<f64>> {
    let bad = || Failure::Input(format!("--grid expects \"a:b:n\", got {raw:?}"));
    let parts: Vec<&str> = raw.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if log && !(a > 0.0 && b > 0.0) {
        return Err(Failure::Input("--log needs a positive grid".into()));
    }
    Ok(spaced(a, b, n, log))
}

fn spaced(a: f64, b: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        })
        .collect()
}

fn grid_or(g: &GridArgs, default: impl FnOnce() -> Vec<f64>) -> Res<Vec<f64>> {
    match &g.grid {
        Some(raw) => parse_grid(raw, g.log),
        None => Ok(default()),
    }
}

#[derive(Serialize)]
struct Inspection {
    family: &'static str,
    psi1: f64,
    phi_r: Option<f64>,
    roots: Option<Vec<f64>>,
    threshold_cap: Option<f64>,
    assumptions: AssumptionReport,
}

fn characteristic_roots(model: &LevyModel, r: f64) -> Option<Vec<f64>> {
    match *model {
        LevyModel::BrownianDrift { m, sigma } => {
            let s2 = sigma * sigma;
            let d = (m * m + 2.0 * s2 * r).sqrt();
            Some(vec![(d - m) / s2, -(d + m) / s2])
        }
        LevyModel::KouJD { .. } | LevyModel::SpectNegKou { .. } => kou_roots(model, r).ok().map(|k| k.descending()),
        LevyModel::ExpJD { .. } => {
            let mut v = kou_roots(model, r).ok()?.descending();
            v.push(-emery_root(model, r).ok()?.lam_bar);
            Some(v)
        }
        LevyModel::NegPoisson { .. } => None,
    }
}

fn inspect(io: &Io) -> Res<()> {
    let input = load_input(&io.spec)?;
    let model = input.model;
    if let Err(e) = model.validate() {
        return Err(e.into());
    }
    if !(input.r > 0.0 && input.r.is_finite()) {
        return Err(Failure::Input(format!("invalid parameter `r`: must be > 0, got {}", input.r)));
    }
    let report = check_assumptions(&model, input.r);
    let spec = ProblemSpec::try_from(input);
    let out = Inspection {
        family: model.family().name(),
        psi1: report.psi1,
        phi_r: phi(&model, input.r).ok(),
        roots: characteristic_roots(&model, input.r),
        threshold_cap: spec.as_ref().ok().map(|s| s.threshold_cap()),
        assumptions: report.clone(),
    };
    emit_json(io, &out)?;
    if !report.all_hold() {
        return Err(Failure::Assumption(format!(
            "assumption violated: {}",
            report.failures().join("; ")
        )));
    }
    spec.map(|_| ()).map_err(Failure::from)
}

fn value(io: &Io, g: &GridArgs) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let th = solve(&spec, Convexity::Abort)?;
    warn_or_fail(io, &th.warnings)?;
    let vf = ValueFunction::new(&spec, &th)?;
    let grid = grid_or(g, || spaced(th.b_c / 3.0, 3.0 * th.b_c, 61, false))?;
    if grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Failure::Input("firm values must be > 0".into()));
    }
    let mut w = csv_writer(io)?;
    w.write_record(["v", "w", "s", "payoff", "stop"])?;
    for &v in &grid {
        let wv = vf.w(v);
        w.write_record([num(v), num(wv), num(vf.s(v)), num(vf.payoff(v)), (v <= th.b_c).to_string()])?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn scale_fn(io: &Io, q: Option<f64>, g: &GridArgs) -> Res<()> {
    let text = read(&io.spec)?;
    let parse_err = |e: serde_json::Error| Failure::Input(format!("parsing {}: {e}", io.spec.display()));
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    // A full problem or a bare model both work here.
    let (model, r) = if raw.get("model").is_some() {
        let p: ProblemInput = serde_json::from_value(raw).map_err(parse_err)?;
        (p.model, Some(p.r))
    } else {
        (serde_json::from_value::<LevyModel>(raw).map_err(parse_err)?, None)
    };
    let q = q
        .or(r)
        .ok_or_else(|| Failure::Input("--q is required when the spec holds only a model".into()))?;
    let sf = ScaleFunction::new(&model, q)?;
    let grid = grid_or(g, || spaced(0.0, 5.0, 51, false))?;
    if grid.iter().any(|&x| !(x >= 0.0)) {
        return Err(Failure::Input("scale function grid must be >= 0".into()));
    }
    let mut w = csv_writer(io)?;
    w.write_record(["x", "w", "w_prime", "z"])?;
    for &x in &grid {
        w.write_record([num(x), num(sf.w(x)), num(sf.w_prime(x)), num(sf.z(x))])?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    let n = sf.inversion_warnings();
    let warnings = if n > 0 {
        vec![format!("scale function inversion missed its accuracy target {n} times")]
    } else {
        Vec::new()
    };
    warn_or_fail(io, &warnings)
}

#[derive(Serialize)]
struct Simulation {
    b: f64,
    b_c: Option<f64>,
    v: f64,
    /// Analytic g(v, b) when b is the optimal threshold.
    analytic: Option<f64>,
    direct: McEstimate,
    lemma: McEstimate,
    difference: McEstimate,
    consistent: bool,
}

fn simulate(io: &Io, sim: &SimArgs, b: Option<f64>, threshold_file: Option<&Path>) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let cfg = sim.config();
    let th = match threshold_file {
        Some(p) => Some(
            serde_json::from_str::<ThresholdResult>(&read(p)?)
                .map_err(|e| Failure::Input(format!("parsing {}: {e}", p.display())))?,
        ),
        None if b.is_none() => Some(solve(&spec, Convexity::Abort)?),
        None => None,
    };
    let b = b.or(th.as_ref().map(|t| t.b_c)).expect("threshold or b");
    if !(b > 0.0 && b.is_finite()) {
        return Err(Failure::Input(format!("--b must be > 0, got {b}")));
    }
    let pv = policy_value(&spec, b, &cfg)?;
    let analytic = match &th {
        Some(t) if t.b_c == b => Some(ValueFunction::new(&spec, t)?.w(spec.v())),
        _ => None,
    };
    let out = Simulation {
        b,
        b_c: th.as_ref().map(|t| t.b_c),
        v: spec.v(),
        analytic,
        direct: pv.direct,
        lemma: pv.lemma,
        difference: pv.difference,
        consistent: pv.consistent,
    };
    emit_json(io, &out)?;
    if !pv.consistent {
        warn_or_fail(
            io,
            &[format!(
                "direct and lemma estimators differ by {} ({} standard errors)",
                pv.difference.mean,
                pv.difference.z_score(0.0)
            )],
        )?;
    }
    Ok(())
}

fn estimate_fields(e: &McEstimate) -> [String; 4] {
    [
        num(e.mean),
        num(e.std_error),
        e.n_paths.to_string(),
        num(e.truncation_fraction),
    ]
}

fn run_sweep(io: &Io, sim: &SimArgs, g: &GridArgs) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let cfg = sim.config();
    let grid = match &g.grid {
        Some(raw) => parse_grid(raw, g.log)?,
        None => {
            // Built around B_c so that it is a grid point exactly.
            let b = solve(&spec, Convexity::Abort)?.b_c;
            (-10..=10).map(|i| b * 3f64.powf(i as f64 / 10.0)).collect()
        }
    };
    let res = sweep(&spec, &grid, &cfg)?;
    let mut w = csv_writer(io)?;
    w.write_record([
        "b",
        "mean",
        "std_error",
        "n_paths",
        "truncated_fraction",
        "lemma_mean",
        "lemma_std_error",
        "gap_mean",
        "gap_std_error",
        "consistent",
        "flat",
        "argmax",
    ])?;
    for j in 0..grid.len() {
        let mut row: Vec<String> = vec![num(grid[j])];
        row.extend(estimate_fields(&res.direct[j]));
        row.push(num(res.lemma[j].mean));
        row.push(num(res.lemma[j].std_error));
        row.push(num(res.gap[j].mean));
        row.push(num(res.gap[j].std_error));
        row.push(res.consistent[j].to_string());
        row.push((res.flat.0 <= j && j <= res.flat.1).to_string());
        row.push((j == res.argmax).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    let bad: Vec<String> = (0..grid.len())
        .filter(|&j| !res.consistent[j])
        .map(|j| format!("estimators disagree at b = {}", grid[j]))
        .collect();
    warn_or_fail(io, &bad)
}

fn hit(io: &Io, sim: &SimArgs, g: &GridArgs) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let model = *spec.model();
    let cfg = sim.config();
    let levels = grid_or(g, || vec![-0.05, -0.25, -0.5, -1.0, -2.0])?;
    let est = simulate_hit_levels(&model, spec.r(), &levels, &cfg)?;
    let exact = HittingTransforms::new(&model, spec.r())?;
    let mut w = csv_writer(io)?;
    w.write_record(["x", "functional", "mean", "std_error", "n_paths", "truncated_fraction", "analytic"])?;
    for (&x, (l, gv)) in levels.iter().zip(&est) {
        for (name, e, a) in [("L", l, exact.laplace_l(x)), ("G", gv, exact.laplace_g(x))] {
            let mut row = vec![num(x), name.to_string()];
            row.extend(estimate_fields(e));
            row.push(num(a));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn epsilon(io: &Io, sim: &SimArgs, eps: &[f64]) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let th = solve(&spec, Convexity::Abort)?;
    warn_or_fail(io, &th.warnings)?;
    let run = epsilon_stop_paths(&spec, &th, eps, &sim.config())?;
    let mut w = csv_writer(io)?;
    w.write_record(["rule", "eps", "boundary", "mean", "std_error", "n_paths", "truncated_fraction"])?;
    for (k, e) in run.mean_time.iter().enumerate() {
        let boundary = match run.boundaries[k] {
            EpsilonBoundary::Level(b) => num(b),
            EpsilonBoundary::Everywhere => "inf".to_string(),
        };
        let mut row = vec!["epsilon".to_string(), num(run.eps[k]), boundary];
        row.extend(estimate_fields(e));
        w.write_record(&row)?;
    }
    let mut row = vec!["threshold".to_string(), String::new(), num(th.b_c)];
    row.extend(estimate_fields(&run.threshold_time));
    w.write_record(&row)?;
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn classd(io: &Io, sim: &SimArgs, g: &GridArgs) -> Res<()> {
    let spec = load_spec(&io.spec)?;
    let model = *spec.model();
    let ns = grid_or(g, || (1..=8).map(|k| 2f64.powi(k)).collect())?;
    let est = levystop_core::class_d_diagnostic(&model, spec.r(), &ns, &sim.config())?;
    let mut w = csv_writer(io)?;
    w.write_record(["n", "mean", "std_error", "n_paths", "truncated_fraction", "closed_form"])?;
    for (&n, e) in ns.iter().zip(&est) {
        let mut row = vec![num(n)];
        row.extend(estimate_fields(e));
        row.push(opt_num(class_d_closed_form(&model, spec.r(), n).ok()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}
