//! `craft` command-line interface.
//!
//! Exit codes: 0 certified or success, 1 unknown, 2 usage or input error,
//! 3 diverged or exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use craft::engine::{EngineConfig, Expansion};
use craft::householder::{analyze_root, householder_engine_config, kleene_root, KleeneRoot, RootMode, RootTask};
use craft::model_io::{load_model, save_model};
use craft::mondeq::{random_monotone_model, MonDeq, SolverConfig};
use craft::verifier::{
    verify_box, verify_global, verify_kleene, verify_local, G2Policy, KleeneDomain, LambdaOpt, LocalTask, Status,
    Verdict, VerifyConfig,
};

#[derive(Parser)]
#[command(name = "craft", version, about = "Abstract fixpoint verification for monotone equilibrium models")]
struct Cli {
    /// Seed for anything randomized (model generation)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that every input in an ∞-ball is classified as the target
    VerifyLocal {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Phase-2 solver: fb-linesearch, pr or fb:<alpha>
        #[arg(long, default_value = "fb-linesearch", value_parser = parse_g2)]
        g2: G2Policy,
        #[arg(long, value_enum, default_value_t = LambdaArg::Off)]
        lambda_opt: LambdaArg,
        /// Per-step CSV trace (step, phase, mean_width, margin)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify sub-boxes of an input box by bisection
    VerifyGlobal {
        #[arg(long)]
        model: PathBuf,
        /// Lower corner, comma separated
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        lo: Point,
        /// Upper corner, comma separated
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        hi: Point,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value = "fb-linesearch", value_parser = parse_g2)]
        g2: G2Policy,
        /// Per-leaf CSV (lo_i, hi_i, depth, label)
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Root interval of Householder's 1/√x iteration over [lo, hi]
    Householder {
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Fix)]
        mode: ModeArg,
        /// Also run the Kleene baseline
        #[arg(long)]
        kleene: bool,
        #[arg(long, default_value_t = 500)]
        n_max: usize,
        /// Per-step CSV of the s hull (step, lo, hi)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random monotone model
    GenModel {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kleene or interval baselines on a local task
    Baseline {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum)]
        kind: BaselineKind,
        /// Domain for the Kleene baseline
        #[arg(long, value_enum, default_value_t = DomainArg::Zonotope)]
        domain: DomainArg,
        /// Join-free steps before the Kleene joins start
        #[arg(long, default_value_t = 2)]
        unroll: usize,
        /// Solver iterated by the Kleene baseline: pr or fb:<alpha>
        #[arg(long, default_value = "pr", value_parser = parse_g1)]
        solver: SolverChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input point, comma separated
    #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
    input: Point,
    /// ∞-ball radius
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    target: usize,
}

#[derive(Args)]
struct EngineArgs {
    /// PR step size for phase 1
    #[arg(long, default_value_t = 0.1)]
    alpha_pr: f64,
    /// Consolidate every r steps
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Phase-2 stall unit
    #[arg(long, default_value_t = 50)]
    r_prime: usize,
    #[arg(long, default_value_t = 500)]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = ExpansionArg::Const)]
    expansion: ExpansionArg,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig, String> {
        let cfg = EngineConfig {
            r: self.r,
            r_prime: self.r_prime,
            n_max: self.n_max,
            expansion: match self.expansion {
                ExpansionArg::Const => Expansion::Const,
                ExpansionArg::Exp => Expansion::Exp,
            },
            ..EngineConfig::default()
        };
        cfg.validate()?;
        if !(self.alpha_pr > 0.0 && self.alpha_pr.is_finite()) {
            return Err(format!("--alpha-pr must be positive, got {}", self.alpha_pr));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LambdaArg {
    Off,
    Reduced,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fix,
    Reach,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpansionArg {
    Const,
    Exp,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Kleene,
    Box,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Zonotope,
    Box,
}

#[derive(Clone, Copy)]
enum SolverChoice {
    Pr,
    Fb(f64),
}

/// Comma-separated coordinates.
#[derive(Clone)]
struct Point(Vec<f64>);

fn parse_vec(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Point)
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(format!("step size must be positive, got {a}"))
    }
}

fn parse_g2(s: &str) -> Result<G2Policy, String> {
    match s {
        "fb-linesearch" => Ok(G2Policy::FbLineSearch),
        "pr" => Ok(G2Policy::Pr),
        _ => match s.strip_prefix("fb:") {
            Some(a) => parse_alpha(a).map(G2Policy::Fb),
            None => Err(format!("expected fb-linesearch, pr or fb:<alpha>, got {s:?}")),
        },
    }
}

fn parse_g1(s: &str) -> Result<SolverChoice, String> {
    match s {
        "pr" => Ok(SolverChoice::Pr),
        _ => match s.strip_prefix("fb:") {
            Some(a) => parse_alpha(a).map(SolverChoice::Fb),
            None => Err(format!("expected pr or fb:<alpha>, got {s:?}")),
        },
    }
}

enum Failure {
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_for(status: Status) -> u8 {
    match status {
        Status::Certified => 0,
        Status::Unknown => 1,
        Status::Diverged | Status::Exhausted => 3,
    }
}

#[derive(Serialize)]
struct LocalReport<'a> {
    task: &'a LocalTask,
    verdict: &'a Verdict,
}

fn load(path: &Path) -> Result<MonDeq, Failure> {
    Ok(MonDeq::new(load_model(path)?)?)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::VerifyLocal { task, engine, g2, lambda_opt, trace, out } => {
            let model = load(&task.model)?;
            let cfg = VerifyConfig {
                g1: SolverConfig::pr(engine.alpha_pr),
                g2,
                engine: engine.config()?,
                lambda_opt: match lambda_opt {
                    LambdaArg::Off => LambdaOpt::Off,
                    LambdaArg::Reduced => LambdaOpt::Reduced,
                    LambdaArg::Full => LambdaOpt::Full,
                },
            };
            let t = LocalTask::ball(task.input.0, task.eps, task.target);
            let v = verify_local(&model, &t, &cfg)?;
            if let Some(p) = trace {
                v.trace.write_csv(fs::File::create(p)?)?;
            }
            emit(&LocalReport { task: &t, verdict: &v }, out.as_deref())?;
            eprintln!("{:?} (margin {:?}) in {:.3}s", v.status, v.margin, v.wallclock);
            Ok(exit_for(v.status))
        }
        Command::VerifyGlobal { model, lo, hi, max_depth, jobs, engine, g2, csv, out } => {
            let model = load(&model)?;
            let cfg = VerifyConfig { g1: SolverConfig::pr(engine.alpha_pr), g2, engine: engine.config()?, ..VerifyConfig::default() };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
            let report = pool.install(|| verify_global(&model, &lo.0, &hi.0, max_depth, &cfg))?;
            if let Some(p) = csv {
                report.write_csv(fs::File::create(p)?)?;
            }
            emit(&report, out.as_deref())?;
            eprintln!("certified fraction {:.4} over {} leaves", report.certified_fraction, report.leaves.len());
            Ok(0)
        }
        Command::Householder { lo, hi, mode, kleene, n_max, trace, out } => {
            let mode = match mode {
                ModeArg::Fix => RootMode::Fix,
                ModeArg::Reach => RootMode::Reach,
            };
            let task = RootTask::new(lo, hi, mode);
            task.validate()?;
            let cfg = EngineConfig { n_max, ..householder_engine_config() };
            #[derive(Serialize)]
            struct Report {
                task: RootTask,
                root: Option<(f64, f64)>,
                iterations: Option<usize>,
                error: Option<String>,
                kleene: Option<KleeneRoot>,
            }
            let res = analyze_root(&task, &cfg);
            let kl = if kleene { Some(kleene_root(&task, None)?) } else { None };
            let code = match &res {
                Ok(r) => {
                    eprintln!("root interval [{:.4}, {:.4}] after {} iterations", r.root_lo, r.root_hi, r.iterations);
                    if let Some(p) = &trace {
                        let mut w = csv::Writer::from_path(p)?;
                        w.write_record(["step", "lo", "hi"])?;
                        for (i, (l, h)) in r.hulls.iter().enumerate() {
                            w.write_record([(i + 1).to_string(), l.to_string(), h.to_string()])?;
                        }
                        w.flush()?;
                    }
                    0
                }
                Err(e) => {
                    eprintln!("{e}");
                    3
                }
            };
            let report = Report {
                root: res.as_ref().ok().map(|r| (r.root_lo, r.root_hi)),
                iterations: res.as_ref().ok().map(|r| r.iterations),
                error: res.as_ref().err().map(|e| e.to_string()),
                task,
                kleene: kl,
            };
            emit(&report, out.as_deref())?;
            Ok(code)
        }
        Command::GenModel { p, q, r, m, out } => {
            if p == 0 || q == 0 || r == 0 {
                return Err(Failure::Usage("p, q and r must be positive".into()));
            }
            let params = random_monotone_model(p, q, r, m, cli.seed);
            MonDeq::new(params.clone())?;
            save_model(&params, &out)?;
            Ok(0)
        }
        Command::Baseline { task, engine, kind, domain, unroll, solver, out } => {
            let model = load(&task.model)?;
            let g1 = match (kind, solver) {
                (BaselineKind::Kleene, SolverChoice::Fb(a)) => SolverConfig::fb(a),
                _ => SolverConfig::pr(engine.alpha_pr),
            };
            let cfg = VerifyConfig { g1, engine: engine.config()?, ..VerifyConfig::default() };
            let t = LocalTask::ball(task.input.0, task.eps, task.target);
            let v = match kind {
                BaselineKind::Kleene => {
                    let d = match domain {
                        DomainArg::Zonotope => KleeneDomain::Zonotope,
                        DomainArg::Box => KleeneDomain::Box,
                    };
                    verify_kleene(&model, &t, &cfg, d, unroll)?
                }
                BaselineKind::Box => verify_box(&model, &t, &cfg)?,
            };
            emit(&LocalReport { task: &t, verdict: &v }, out.as_deref())?;
            eprintln!("{:?} (margin {:?})", v.status, v.margin);
            Ok(exit_for(v.status))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
