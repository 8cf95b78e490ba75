//! Command-line front end. [`run_cli`] parses arguments, runs one analysis,
//! writes its outputs and returns the process exit code:
//! 0 verified (or success), 2 unknown, 3 falsified, 1 usage or runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fabre_core::backward_over::{backward_over_step_parallel, backward_over_trajectory, BnbConfig};
use fabre_core::backward_under::{under_approximate, UnderChoice};
use fabre_core::forward::{draw_trajectory_inputs, falsify, forward_trajectory, simulate};
use fabre_core::io::{load_system, plot_projection, PlotAxis, ReportFile, SetRepr, TOOL_NAME};
use fabre_core::verifier::{verify, verify_avoid, verify_reach, FabreConfig, Verdict};
use fabre_core::{Error, Hyperrect, SystemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "fabre",
    version,
    about = "Reach-avoid verification of neural feedback systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full reach-avoid check combining forward and backward analysis.
    Verify(VerifyArgs),
    /// Forward over-approximation from the initial set.
    Forward(ForwardArgs),
    /// Outer backward boxes of the goal or of an avoid box.
    BackwardOver(BackwardOverArgs),
    /// Certified inner box of the one-step backward set of the goal.
    BackwardUnder(BackwardUnderArgs),
    /// Exact point trajectory.
    Simulate(SimulateArgs),
    /// Random search for a trajectory entering an avoid box.
    Falsify(FalsifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropertyArg {
    Reach,
    Avoid,
    ReachAvoid,
}

#[derive(Args, Debug)]
struct BnbArgs {
    /// Terminal cell width of the backward search [default: 1e-3 x min domain width].
    #[arg(long)]
    width_tol: Option<f64>,
    /// Cell budget of the backward search.
    #[arg(long)]
    max_boxes: Option<usize>,
}

impl BnbArgs {
    fn config(&self, sys: &SystemSpec) -> BnbConfig {
        let mut cfg = BnbConfig::for_domain(sys.domain());
        if let Some(w) = self.width_tol {
            cfg.width_tol = w;
        }
        if let Some(m) = self.max_boxes {
            cfg.max_boxes = m;
        }
        cfg
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    system: PathBuf,
    #[arg(long)]
    forward_steps: Option<usize>,
    #[arg(long)]
    backward_steps: Option<usize>,
    /// Inner-box method: gss, ich, leb or best.
    #[arg(long, default_value = "best")]
    method: UnderChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "reach-avoid")]
    property: PropertyArg,
    #[command(flatten)]
    bnb: BnbArgs,
    /// Resolution of the shrink factor search.
    #[arg(long)]
    rho_tol: Option<f64>,
    #[arg(long)]
    sample_count: Option<usize>,
    #[arg(long, default_value_t = FabreConfig::DEFAULT_FALSIFY_SAMPLES)]
    falsify_samples: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Projection as "i,j" or "i,t" [default: "0,1", or "0,t" when n = 1].
    #[arg(long)]
    plot_dims: Option<String>,
    /// Leave timings out of the report so that reruns are byte-identical.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args, Debug)]
struct ForwardArgs {
    system: PathBuf,
    /// Number of steps [default: the system horizon].
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BackwardOverArgs {
    system: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    /// Start from avoid box `i` instead of the goal.
    #[arg(long)]
    avoid: Option<usize>,
    #[command(flatten)]
    bnb: BnbArgs,
    /// Evaluate the one-step search in parallel batches (steps = 1 only).
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BackwardUnderArgs {
    system: PathBuf,
    #[arg(long, default_value = "best")]
    method: UnderChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    bnb: BnbArgs,
    #[arg(long)]
    rho_tol: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    system: PathBuf,
    /// Initial state, comma separated [default: drawn from the initial set].
    #[arg(long)]
    x0: Option<String>,
    /// Perturbations, one comma-separated vector per step, steps separated by ';'.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample index used when drawing inputs.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FalsifyArgs {
    system: PathBuf,
    #[arg(long, default_value_t = FabreConfig::DEFAULT_FALSIFY_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Error> {
    match command {
        Command::Verify(a) => run_verify(a),
        Command::Forward(a) => run_forward(a),
        Command::BackwardOver(a) => run_backward_over(a),
        Command::BackwardUnder(a) => run_backward_under(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Falsify(a) => run_falsify(a),
    }
}

fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Verified => EXIT_OK,
        Verdict::Unknown => EXIT_UNKNOWN,
        Verdict::Falsified => EXIT_FALSIFIED,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(value: &Value, output: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
    match output {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sets_json(sets: &[Hyperrect]) -> Value {
    json!(sets.iter().map(SetRepr::from).collect::<Vec<_>>())
}

fn split(sys: &SystemSpec, f: Option<usize>, b: Option<usize>) -> Result<(usize, usize), Error> {
    let t = sys.steps();
    let rest = |x: usize| {
        t.checked_sub(x).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "forward and backward steps must partition the horizon, T = F + B (got {x} > T = {t})"
            ))
        })
    };
    Ok(match (f, b) {
        (Some(f), Some(b)) => (f, b),
        (Some(f), None) => (f, rest(f)?),
        (None, Some(b)) => (rest(b)?, b),
        (None, None) => (t - t / 2, t / 2),
    })
}

fn parse_dims(spec: Option<&str>, n: usize) -> Result<(usize, PlotAxis), Error> {
    let Some(spec) = spec else {
        return Ok(if n >= 2 {
            (0, PlotAxis::Dim(1))
        } else {
            (0, PlotAxis::Time)
        });
    };
    let bad = || {
        Error::InvalidConfig(format!(
            "plot dimensions must look like \"0,1\" or \"0,t\", got {spec:?}"
        ))
    };
    let (i, j) = spec.split_once(',').ok_or_else(bad)?;
    let i = i.trim().parse().map_err(|_| bad())?;
    let j = match j.trim() {
        "t" | "time" => PlotAxis::Time,
        j => PlotAxis::Dim(j.parse().map_err(|_| bad())?),
    };
    Ok((i, j))
}

fn parse_vector(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("not a number: {v:?}")))
        })
        .collect()
}

fn run_verify(a: VerifyArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let (f, b) = split(&sys, a.forward_steps, a.backward_steps)?;
    let mut cfg = FabreConfig::with_split(&sys, f, b);
    cfg.bnb = a.bnb.config(&sys);
    cfg.under.seed = a.seed;
    if let Some(r) = a.rho_tol {
        cfg.under.rho_tol = r;
    }
    if let Some(s) = a.sample_count {
        cfg.under.sample_count = s;
    }
    cfg.under_method = a.method;
    cfg.falsify_samples = a.falsify_samples;
    let dims = parse_dims(a.plot_dims.as_deref(), sys.n())?;

    let report = match a.property {
        PropertyArg::Reach => verify_reach(&sys, &cfg)?,
        PropertyArg::Avoid => verify_avoid(&sys, &cfg)?,
        PropertyArg::ReachAvoid => verify(&sys, &cfg)?,
    };

    let file = ReportFile::new(&report, &cfg, !a.no_timings);
    if let Some(path) = &a.report {
        file.write(path)?;
    }
    if let Some(path) = &a.plot {
        plot_projection(&sys, &report, dims, path)?;
    }

    println!("verdict: {}", report.verdict);
    println!("split: F = {f}, B = {b}");
    if let Some(cex) = &report.counterexample {
        println!(
            "counterexample: sample {} enters avoid box {} at step {}",
            cex.sample_index, cex.avoid_index, cex.step
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(exit_code(report.verdict))
}

fn run_forward(a: ForwardArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let traj = forward_trajectory(&sys, sys.init(), a.steps.unwrap_or(sys.steps()))?;
    emit(
        &json!({ "sets": sets_json(&traj.sets) }),
        a.output.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn run_backward_over(a: BackwardOverArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let cfg = a.bnb.config(&sys);
    let target = match a.avoid {
        None => sys.goal().clone(),
        Some(i) => sys
            .avoid()
            .get(i)
            .cloned()
            .ok_or_else(|| Error::InvalidConfig(format!("no avoid box {i}")))?,
    };
    let steps = a.steps.unwrap_or(1);
    let results = if a.parallel {
        if steps != 1 {
            return Err(Error::InvalidConfig("--parallel requires --steps 1".into()));
        }
        let r = backward_over_step_parallel(&sys, &target, &cfg)?;
        vec![
            fabre_core::backward_over::BackwardOverResult {
                set: target,
                certified: true,
                visited: 0,
            },
            r,
        ]
    } else {
        backward_over_trajectory(&sys, &target, steps, &cfg)?
    };
    let entries: Vec<Value> = results
        .iter()
        .map(|r| json!({ "set": SetRepr::from(&r.set), "certified": r.certified, "visited": r.visited }))
        .collect();
    emit(
        &json!({ "config": cfg, "steps": entries }),
        a.output.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn run_backward_under(a: BackwardUnderArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let bnb = a.bnb.config(&sys);
    let over = backward_over_trajectory(&sys, sys.goal(), 1, &bnb)?
        .pop()
        .expect("two entries");
    let mut cfg = FabreConfig::for_system(&sys).under;
    cfg.seed = a.seed;
    if let Some(r) = a.rho_tol {
        cfg.rho_tol = r;
    }
    let under = if over.set.is_empty() {
        None
    } else {
        Some(under_approximate(
            &sys,
            &over.set,
            sys.goal(),
            a.method,
            &cfg,
        )?)
    };
    let validated = under.as_ref().is_some_and(|u| u.validated);
    emit(
        &json!({
            "over": SetRepr::from(&over.set),
            "over_certified": over.certified,
            "under": SetRepr::from(&under.as_ref().map_or_else(|| Hyperrect::empty(sys.n()), |u| u.set.clone())),
            "method": under.as_ref().map(|u| u.method),
            "validated": validated,
            "queries": under.as_ref().map_or(0, |u| u.queries),
        }),
        a.output.as_deref(),
    )?;
    Ok(if validated { EXIT_OK } else { EXIT_UNKNOWN })
}

fn run_simulate(a: SimulateArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let (drawn_x0, drawn_eps) = draw_trajectory_inputs(&sys, a.seed, a.index);
    let x0 = match &a.x0 {
        Some(s) => parse_vector(s)?,
        None => drawn_x0,
    };
    let eps = match &a.eps {
        Some(s) if s.trim().is_empty() => Vec::new(),
        Some(s) => s
            .split(';')
            .map(parse_vector)
            .collect::<Result<Vec<_>, _>>()?,
        None => drawn_eps,
    };
    let states = simulate(&sys, &x0, &eps)?;
    emit(
        &json!({ "states": states, "perturbations": eps }),
        a.output.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn run_falsify(a: FalsifyArgs) -> Result<i32, Error> {
    let sys = load_system(&a.system)?;
    let cex = falsify(&sys, a.samples, a.seed);
    if let Some(path) = &a.report {
        let doc = json!({
            "tool": TOOL_NAME,
            "version": env!("CARGO_PKG_VERSION"),
            "verdict": if cex.is_some() { Verdict::Falsified } else { Verdict::Unknown },
            "seed": a.seed,
            "samples": a.samples,
            "counterexample": cex,
        });
        write_text(
            path,
            &(serde_json::to_string_pretty(&doc).expect("json serializes") + "\n"),
        )?;
    }
    match cex {
        Some(c) => {
            println!(
                "falsified: sample {} enters avoid box {} at step {}",
                c.sample_index, c.avoid_index, c.step
            );
            Ok(EXIT_FALSIFIED)
        }
        None => {
            println!("no counterexample in {} samples", a.samples);
            Ok(EXIT_UNKNOWN)
        }
    }
}
