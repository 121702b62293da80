//! Batch front-end behind the `g2lab` binary.
//!
//! Every subcommand prints (or atomically writes with `--out`) one JSON
//! envelope carrying the structure-table hash. Exit codes: 0 on success, 2 on
//! invalid arguments or config, 1 on numerical failure with a diagnostic JSON
//! envelope on stdout.
//!
//! `--config FILE` may appear anywhere after the subcommand. The file is a flat
//! JSON object whose keys are flag names (`eps_list` for `--eps-list`); its
//! entries are spliced in at that position, so later flags override them.
//! `schema/config.schema.json` describes the accepted keys per command.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::calib::{classify_3plane, classify_4plane, FourFrame, ThreeFrame};
use crate::cayley::{structure_table, Vec7};
use crate::coassoc::{almost_complex_from_form, normal_to_selfdual, selfdual_square_identity};
use crate::dirac::{poincare_check, BoundaryCondition, CylinderGrid, SpectralOptions, SpectralRoute, Warp};
use crate::instanton::{self, CurveGraph, FlatModel, InstantonError, SolveOptions, SweepOptions};
use crate::kantor::{convergence_order, newton_solve, DenseMap, Diagonal, Euclidean, NewtonError, NewtonOptions};
use crate::report::{envelope, to_csv, write_atomic};
use crate::verify;

#[derive(Parser, Debug)]
#[command(name = "g2lab", version, about = "Numerical experiments on G2 calibrated geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Octonion structure constants as JSON.
    DumpTable(OutArg),
    /// Classify a 3- or 4-plane given by a 7x3/7x4 (or 3x7/4x7) JSON matrix.
    Classify(ClassifyArgs),
    /// Self-dual form and complex structure of a normal vector on a coassociative plane.
    NormalForm(NormalFormArgs),
    /// Lowest eigenvalues of the twisted Dirac operator on a thin cylinder.
    Spectrum(SpectrumArgs),
    /// One-dimensional Poincare inequality on sample profiles.
    Poincare(PoincareArgs),
    /// Certified Newton on small polynomial systems.
    KantorDemo(KantorArgs),
    /// Instanton correction and the eps-scaling table.
    #[command(subcommand)]
    Instanton(InstantonCommand),
    /// Property suite over all modules.
    VerifyAll(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum InstantonCommand {
    Solve(SolveArgs),
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    plane: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct NormalFormArgs {
    /// JSON array of 7 numbers or a basis name `e1`..`e7`.
    #[arg(long)]
    v: String,
    /// 7x4 JSON matrix; defaults to `span{e4, e5, e6, e7}`.
    #[arg(long)]
    frame: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BcArg {
    Hminus,
    Hplus,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Fourier,
    Lanczos,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, value_parser = parse_pair)]
    twist: (f64, f64),
    /// `flat`, `const:H` or `cosine:A` for `h = 1 + A cos x2`.
    #[arg(long, default_value = "flat")]
    warp: String,
    #[arg(long, value_enum, default_value = "hminus")]
    bc: BcArg,
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    #[arg(long, default_value_t = 8)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV of the lowest eigenvalues.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct PoincareArgs {
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value = "all")]
    profile: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct KantorArgs {
    #[arg(long, default_value_t = 1.2)]
    x0: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 24)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Constant part `re,im` of the holomorphic graph.
    #[arg(long, value_parser = parse_pair, default_value = "0.3,-0.1")]
    base: (f64, f64),
    /// Ruling direction, JSON array of 7 numbers or `e1`..`e7`.
    #[arg(long, default_value = "e1")]
    v: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    /// Seed of the Lipschitz and power-iteration sampling.
    #[arg(long, default_value_t = 7)]
    sample_seed: u64,
    /// Iterate even when the certificate fails.
    #[arg(long, action = ArgAction::SetTrue)]
    no_certificate: bool,
    /// CSV of the residual trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.4")]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// CSV of the scaling table.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, action = ArgAction::SetTrue)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug)]
enum Failure {
    /// Exit 2.
    Invalid(String),
    /// Exit 1, with a diagnostic payload.
    Numerical { message: String, detail: Value },
}

impl Failure {
    fn numerical(message: impl ToString, detail: Value) -> Self {
        Failure::Numerical {
            message: message.to_string(),
            detail,
        }
    }
}

type Outcome = Result<(), Failure>;

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e| format!("{a}: {e}"))?,
            b.parse().map_err(|e| format!("{b}: {e}"))?,
        )),
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

fn parse_vec7(s: &str) -> Result<Vec7, Failure> {
    let t = s.trim();
    if let Some(i) = t.strip_prefix('e').and_then(|d| d.parse::<usize>().ok()) {
        if (1..=7).contains(&i) {
            return Ok(Vec7::e(i));
        }
    }
    // Config files hand numeric arrays over as comma lists.
    let t = if t.starts_with('[') { t.to_string() } else { format!("[{t}]") };
    let v: Vec<f64> = serde_json::from_str(&t).map_err(|e| Failure::Invalid(format!("vector `{s}`: {e}")))?;
    let arr: [f64; 7] = v
        .try_into()
        .map_err(|v: Vec<f64>| Failure::Invalid(format!("vector needs 7 entries, got {}", v.len())))?;
    Ok(Vec7(arr))
}

/// Columns of a 7xk matrix, or rows of a kx7 one.
fn parse_frame(s: &str) -> Result<Vec<Vec7>, Failure> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(s).map_err(|e| Failure::Invalid(format!("matrix `{s}`: {e}")))?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Failure::Invalid("ragged matrix".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Failure::Invalid("matrix has non-finite entries".into()));
    }
    match (rows.len(), ncols) {
        (7, k @ (3 | 4)) => Ok((0..k).map(|j| Vec7(std::array::from_fn(|i| rows[i][j]))).collect()),
        (k @ (3 | 4), 7) => Ok((0..k).map(|i| Vec7(std::array::from_fn(|j| rows[i][j]))).collect()),
        (r, c) => Err(Failure::Invalid(format!("expected a 7x3, 7x4, 3x7 or 4x7 matrix, got {r}x{c}"))),
    }
}

fn emit(command: &str, result: &Value, out: &OutArg) -> Outcome {
    let text = envelope(command, result).map_err(|e| Failure::numerical(e, Value::Null))?;
    write_or_print(out.out.as_deref(), &text)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => write_atomic(p, text).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn dump_table(a: &OutArg) -> Outcome {
    emit("dump-table", &to_value(&structure_table()), a)
}

fn classify(a: &ClassifyArgs) -> Outcome {
    let f = parse_frame(&a.plane)?;
    let report = match f.as_slice() {
        [f1, f2, f3] => {
            let fr = ThreeFrame::new(*f1, *f2, *f3).map_err(|e| Failure::Invalid(e.to_string()))?;
            classify_3plane(&fr, a.tol)
        }
        [f1, f2, f3, f4] => {
            let fr = FourFrame::new(*f1, *f2, *f3, *f4).map_err(|e| Failure::Invalid(e.to_string()))?;
            classify_4plane(&fr, a.tol)
        }
        _ => unreachable!("parse_frame returns 3 or 4 vectors"),
    };
    emit("classify", &to_value(&report), &a.out)
}

fn normal_form(a: &NormalFormArgs) -> Outcome {
    let v = parse_vec7(&a.v)?;
    let c = match &a.frame {
        None => FourFrame::c0(),
        Some(s) => match parse_frame(s)?.as_slice() {
            [f1, f2, f3, f4] => FourFrame::new(*f1, *f2, *f3, *f4).map_err(|e| Failure::Invalid(e.to_string()))?,
            _ => return Err(Failure::Invalid("--frame needs four vectors".into())),
        },
    };
    let eta = normal_to_selfdual(&v, &c).map_err(|e| Failure::Invalid(e.to_string()))?;
    let j = almost_complex_from_form(&eta, &c).map_err(|e| Failure::Invalid(e.to_string()))?;
    let (lhs, rhs) = selfdual_square_identity(&eta);
    let result = json!({
        "eta": eta,
        "eta_components": eta.components(),
        "wedge_square": lhs,
        "norm_squared_volume": rhs,
        "j": j,
    });
    emit("normal-form", &result, &a.out)
}

fn spectrum(a: &SpectrumArgs) -> Outcome {
    let grid = CylinderGrid::new(a.eps, a.m, a.n, [a.twist.0, a.twist.1]).map_err(|e| Failure::Invalid(e.to_string()))?;
    let warp = a.warp.trim();
    let grid = match warp.split_once(':') {
        None if warp == "flat" => Ok(grid),
        Some(("const", h)) => {
            let h: f64 = h.parse().map_err(|_| Failure::Invalid(format!("bad warp `{warp}`")))?;
            grid.with_warp(Warp::Const(h))
        }
        Some(("cosine", amp)) => {
            let amp: f64 = amp.parse().map_err(|_| Failure::Invalid(format!("bad warp `{warp}`")))?;
            grid.with_warp_fn(|x2, _| 1.0 + amp * x2.cos())
        }
        _ => return Err(Failure::Invalid(format!("unknown warp `{warp}`"))),
    }
    .map_err(|e| Failure::Invalid(e.to_string()))?;
    let bc = match a.bc {
        BcArg::Hminus => BoundaryCondition::Hminus,
        BcArg::Hplus => BoundaryCondition::Hplus,
    };
    let opts = SpectralOptions {
        count: a.count.max(1),
        route: a.route.map(|r| match r {
            RouteArg::Fourier => SpectralRoute::Fourier,
            RouteArg::Lanczos => SpectralRoute::Lanczos,
        }),
        seed: a.seed,
        ..Default::default()
    };
    let rep = crate::dirac::lowest_eigenvalues(&grid, bc, &opts).map_err(|e| match e {
        crate::dirac::DiracError::InvalidGrid(m) => Failure::Invalid(m),
        other => Failure::numerical(other, Value::Null),
    })?;
    if let Some(p) = &a.csv {
        let rows: Vec<Vec<f64>> = rep.lowest.iter().enumerate().map(|(i, l)| vec![i as f64, *l]).collect();
        write_or_print(Some(p), &to_csv(&["index", "lambda"], &rows))?;
    }
    emit("spectrum", &to_value(&rep), &a.out)
}

fn poincare(a: &PoincareArgs) -> Outcome {
    if a.m < 2 || !(a.eps > 0.0) {
        return Err(Failure::Invalid("need m >= 2 and eps > 0".into()));
    }
    let profiles: [(&str, fn(f64) -> f64); 3] = [
        ("linear", |x| x),
        ("sine", |x| (std::f64::consts::FRAC_PI_2 * x).sin()),
        ("quadratic", |x| x * (2.0 - x)),
    ];
    let chosen: Vec<_> = profiles
        .iter()
        .filter(|(name, _)| a.profile == "all" || a.profile == *name)
        .collect();
    if chosen.is_empty() {
        return Err(Failure::Invalid(format!("unknown profile `{}`", a.profile)));
    }
    let mut rows = Vec::new();
    for (name, f) in chosen {
        // Profiles live on the unit interval and are stretched to [0, eps].
        let v: Vec<f64> = (0..a.m).map(|k| f(k as f64 / (a.m - 1) as f64)).collect();
        let (lhs, rhs) = poincare_check(&v, a.eps).map_err(|e| Failure::numerical(e, Value::Null))?;
        rows.push(json!({"profile": name, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}));
    }
    emit("poincare", &json!({"eps": a.eps, "m": a.m, "profiles": rows}), &a.out)
}

fn kantor_demo(a: &KantorArgs) -> Outcome {
    let opts = NewtonOptions {
        tol: 1e-14,
        seed: a.seed,
        ..Default::default()
    };
    let scalar = DenseMap {
        dim_in: 1,
        dim_out: 1,
        f: |x: &[f64]| vec![x[0] * x[0] - 1.0],
        df: |x: &[f64]| nalgebra::DMatrix::from_element(1, 1, 2.0 * x[0]),
    };
    let planar = DenseMap {
        dim_in: 2,
        dim_out: 2,
        f: |x: &[f64]| vec![x[0] * x[0] - x[1], x[1] * x[1] - x[0]],
        df: |x: &[f64]| nalgebra::DMatrix::from_row_slice(2, 2, &[2.0 * x[0], -1.0, -1.0, 2.0 * x[1]]),
    };
    let summarize = |r: Result<crate::kantor::NewtonOutcome, NewtonError>| match r {
        Ok(o) => json!({
            "root": o.x,
            "certificate": o.certificate,
            "trace": o.trace,
            "distance": o.distance,
            "within_ball": o.within_ball(),
            "order": convergence_order(&o.trace.residuals, 1e-14, 1.0),
        }),
        Err(e) => json!({"error": e.to_string()}),
    };
    let s = summarize(newton_solve(&scalar, &[a.x0], &Euclidean, &Diagonal(vec![1.0]), &opts));
    let p = summarize(newton_solve(&planar, &[a.x0, 0.9], &Euclidean, &Diagonal(vec![1.0; 2]), &opts));
    let (_, trials) = verify::newton_kantorovich(a.trials, a.seed);
    emit("kantor-demo", &json!({"scalar": s, "planar": p, "random_trials": trials}), &a.out)
}

fn instanton_failure(e: InstantonError) -> Failure {
    let detail = match &e {
        InstantonError::InvalidInput(m) => return Failure::Invalid(m.clone()),
        InstantonError::CertificateFailed(c) => json!({"certificate": c}),
        InstantonError::NoConvergence { trace, .. } => json!({"trace": trace}),
        InstantonError::ImmersionFailure { node, condition } => json!({"node": node, "condition": condition}),
        InstantonError::BoundaryViolation { max } => json!({"max": max}),
        InstantonError::NotAnInstanton { tau_sup } => json!({"tau_sup": tau_sup}),
        InstantonError::SingularDerivative => Value::Null,
    };
    Failure::numerical(e, detail)
}

fn instanton_solve(a: &SolveArgs) -> Outcome {
    let v = parse_vec7(&a.v)?;
    let model = FlatModel::new(v, a.eps).map_err(instanton_failure)?;
    let curve = CurveGraph::perturbed(a.n, C64::new(a.base.0, a.base.1), a.delta, a.seed).map_err(instanton_failure)?;
    let opts = SolveOptions {
        m: a.m,
        tol: a.tol,
        max_iter: a.max_iter,
        seed: a.sample_seed,
        require_certificate: !a.no_certificate,
        ..Default::default()
    };
    let sol = instanton::solve_instanton(&model, &curve, &opts).map_err(instanton_failure)?;
    if let Some(p) = &a.trace {
        let t = &sol.trace;
        let rows: Vec<Vec<f64>> = t
            .residuals
            .iter()
            .enumerate()
            .map(|(k, r)| {
                vec![
                    k as f64,
                    *r,
                    t.step_norms.get(k).copied().unwrap_or(f64::NAN),
                    t.halvings.get(k).map_or(f64::NAN, |h| *h as f64),
                ]
            })
            .collect();
        write_or_print(Some(p), &to_csv(&["iteration", "residual", "step_norm", "halvings"], &rows))?;
    }
    let result = json!({
        "params": {"eps": a.eps, "n": a.n, "m": a.m, "delta": a.delta, "seed": a.seed, "base": [a.base.0, a.base.1], "v": v},
        "certificate": sol.certificate,
        "trace": sol.trace,
        "report": sol.report,
    });
    emit("instanton solve", &result, &a.out)
}

fn instanton_sweep(a: &SweepArgs) -> Outcome {
    if a.eps_list.is_empty() || a.eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Failure::Invalid("--eps-list needs positive values".into()));
    }
    let opts = SweepOptions {
        eps_list: a.eps_list.clone(),
        n: a.n,
        m: a.m,
        seed: a.seed,
        ..Default::default()
    };
    let rows = instanton::sweep(&opts).map_err(instanton_failure)?;
    if let Some(p) = &a.csv {
        let data: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let q = r.ratios();
                vec![r.eps, r.tau_sup, r.metric_defect, r.operator_gap, q[0], q[1], q[2]]
            })
            .collect();
        let header = [
            "eps",
            "tau_sup",
            "metric_defect",
            "operator_gap",
            "tau_sup_over_eps",
            "metric_defect_over_eps",
            "operator_gap_over_eps",
        ];
        write_or_print(Some(p), &to_csv(&header, &data))?;
    }
    emit("instanton sweep", &json!({"options": opts, "rows": rows}), &a.out)
}

fn verify_all(a: &VerifyArgs) -> Outcome {
    let checks = verify::run_all(a.quick, a.seed);
    for c in &checks {
        eprintln!("{:<20} {} ({:.2}s)", c.name, if c.passed { "PASS" } else { "FAIL" }, c.seconds);
    }
    let passed = checks.iter().all(|c| c.passed);
    let result = json!({"quick": a.quick, "seed": a.seed, "passed": passed, "checks": checks});
    if passed {
        emit("verify-all", &result, &a.out)
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::numerical(format!("failed checks: {}", failed.join(", ")), result))
    }
}

/// Replaces `--config FILE` with the flags it encodes.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let path = if arg == "--config" {
            it.next().ok_or("--config needs a file")?
        } else if let Some(p) = arg.strip_prefix("--config=") {
            p.to_string()
        } else {
            out.push(arg);
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
        let Value::Object(map) = value else {
            return Err(format!("config {path}: expected a JSON object"));
        };
        for (key, v) in map {
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(format!("config {path}: invalid key `{key}`"));
            }
            let flag = format!("--{}", key.replace('_', "-"));
            let scalar = |v: &Value| match v {
                Value::Number(n) => Ok(n.to_string()),
                Value::String(s) => Ok(s.clone()),
                _ => Err(format!("config {path}: unsupported value for `{key}`")),
            };
            match &v {
                Value::Bool(true) => out.push(flag),
                Value::Bool(false) => {}
                Value::Array(items) if items.iter().all(|x| x.is_number()) => {
                    let parts: Result<Vec<String>, String> = items.iter().map(scalar).collect();
                    out.push(flag);
                    out.push(parts?.join(","));
                }
                // Matrices and vectors for classify/normal-form stay JSON.
                Value::Array(_) => {
                    out.push(flag);
                    out.push(v.to_string());
                }
                other => {
                    let s = scalar(other)?;
                    out.push(flag);
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

fn override_self(cmd: clap::Command) -> clap::Command {
    cmd.args_override_self(true).mut_subcommands(override_self)
}

fn thread_pool() -> Result<(), String> {
    let Ok(s) = std::env::var("G2LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = s
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("G2LAB_THREADS must be a positive integer, got `{s}`"))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command line `argv` (including the program name) and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    if let Err(e) = thread_pool() {
        eprintln!("error: {e}");
        return 2;
    }
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let parsed = override_self(Cli::command())
        .try_get_matches_from(&argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, outcome) = match &cli.command {
        Command::DumpTable(a) => ("dump-table", dump_table(a)),
        Command::Classify(a) => ("classify", classify(a)),
        Command::NormalForm(a) => ("normal-form", normal_form(a)),
        Command::Spectrum(a) => ("spectrum", spectrum(a)),
        Command::Poincare(a) => ("poincare", poincare(a)),
        Command::KantorDemo(a) => ("kantor-demo", kantor_demo(a)),
        Command::Instanton(InstantonCommand::Solve(a)) => ("instanton solve", instanton_solve(a)),
        Command::Instanton(InstantonCommand::Sweep(a)) => ("instanton sweep", instanton_sweep(a)),
        Command::VerifyAll(a) => ("verify-all", verify_all(a)),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Numerical { message, detail }) => {
            eprintln!("error: {message}");
            let diag = json!({"error": message, "detail": detail});
            match envelope(name, &diag) {
                Ok(text) => print!("{text}"),
                Err(e) => eprintln!("error: {e}"),
            }
            1
        }
    }
}
