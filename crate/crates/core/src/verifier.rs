//! Local and global robustness verification of monotone equilibrium models.
//!
//! [`verify_local`] encloses the fixpoint set of every input in an ∞-ball
//! with phase 1 (PR splitting by default), then tightens with phase 2 until
//! the worst-class margin is positive. [`verify_kleene`] and [`verify_box`]
//! are the join-based and interval baselines. [`verify_global`] bisects an
//! input box and certifies leaves in parallel.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chzono::CHZonotope;
use crate::engine::{
    phase1_contract, phase2_tighten, AbstractTransformer, BoxDomain, ChDomain, EngineConfig, EngineError,
    IterationState, Phase2Status, Trace,
};
use crate::mondeq::{BoxStep, ChStep, Method, MonDeq, MonDeqError, Slopes, Solver, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error(transparent)]
    Model(#[from] MonDeqError),
    #[error(transparent)]
    Engine(EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Certified,
    Unknown,
    Diverged,
    Exhausted,
}

/// Phase-2 transformer choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum G2Policy {
    /// FB on the z-marginal with a golden-section search for α.
    FbLineSearch,
    /// FB on the z-marginal with a fixed α.
    Fb(f64),
    /// Keep iterating the phase-1 PR solver on the full state.
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaOpt {
    Off,
    Reduced,
    Full,
}

impl LambdaOpt {
    /// `(unrolled steps, evaluation budget)`.
    pub fn budget(self) -> Option<(usize, usize)> {
        match self {
            LambdaOpt::Off => None,
            LambdaOpt::Reduced => Some((20, 60)),
            LambdaOpt::Full => Some((40, 200)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub g1: SolverConfig,
    pub g2: G2Policy,
    pub engine: EngineConfig,
    pub lambda_opt: LambdaOpt,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            g1: SolverConfig::pr(0.1),
            g2: G2Policy::FbLineSearch,
            engine: EngineConfig::default(),
            lambda_opt: LambdaOpt::Off,
        }
    }
}

/// Local robustness query on the box `x ± radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTask {
    pub x: Vec<f64>,
    pub radius: Vec<f64>,
    pub target: usize,
}

impl LocalTask {
    /// ∞-ball of radius `eps` around `x`.
    pub fn ball(x: Vec<f64>, eps: f64, target: usize) -> Self {
        let radius = vec![eps; x.len()];
        LocalTask { x, radius, target }
    }

    fn validate(&self, model: &MonDeq) -> Result<(), VerifyError> {
        if self.x.len() != model.q() || self.radius.len() != model.q() {
            return Err(VerifyError::InvalidTask(format!(
                "input has {} entries and radius {}, model expects {}",
                self.x.len(),
                self.radius.len(),
                model.q()
            )));
        }
        if self.radius.iter().any(|r| !(*r >= 0.0 && r.is_finite())) || self.x.iter().any(|v| !v.is_finite()) {
            return Err(VerifyError::InvalidTask("input and radius must be finite, radius non-negative".into()));
        }
        if self.target >= model.num_classes() {
            return Err(VerifyError::InvalidTask(format!(
                "target {} out of range for {} classes",
                self.target,
                model.num_classes()
            )));
        }
        Ok(())
    }

    pub fn input(&self) -> CHZonotope {
        CHZonotope::from_box(self.x.clone(), &self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Worst-class lower bound of `y_t − y_i`; `None` when no enclosure was found.
    pub margin: Option<f64>,
    pub phase1_steps: usize,
    pub phase2_steps: usize,
    pub g2_alpha: Option<f64>,
    pub lambda_margin: Option<f64>,
    #[serde(skip)]
    pub wallclock: f64,
    #[serde(skip)]
    pub trace: Trace,
}

impl Verdict {
    fn failed(status: Status, phase1_steps: usize, trace: Trace, start: Instant) -> Self {
        Verdict {
            status,
            margin: None,
            phase1_steps,
            phase2_steps: 0,
            g2_alpha: None,
            lambda_margin: None,
            wallclock: start.elapsed().as_secs_f64(),
            trace,
        }
    }
}

/// Worst-class margin of `target` over the z rows (first `p`) of `s`.
pub fn output_margin(model: &MonDeq, target: usize, s: &CHZonotope) -> f64 {
    let z = s.marginal(0..model.p());
    model
        .margin_functionals(target)
        .iter()
        .map(|(d, c)| z.linear_bounds(d).0 + c)
        .fold(f64::INFINITY, f64::min)
}

/// Largest hull width among the logits over the z rows of `s`.
pub fn output_scale(model: &MonDeq, s: &CHZonotope) -> f64 {
    let z = s.marginal(0..model.p());
    let v = &model.params().v;
    (0..model.r())
        .map(|i| {
            let (lo, hi) = z.linear_bounds(v.row(i));
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn status_of(err: &EngineError) -> Option<Status> {
    match err {
        EngineError::Diverged { .. } => Some(Status::Diverged),
        EngineError::Exhausted { .. } => Some(Status::Exhausted),
        EngineError::Domain(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ch,
    Box,
}

fn step_with<'a>(kind: Kind, solver: &'a Solver<'a>, x: &'a CHZonotope) -> Box<dyn AbstractTransformer<IterationState> + 'a> {
    match kind {
        Kind::Ch => Box::new(ChStep { solver, x, slopes: Slopes::Default }),
        Kind::Box => Box::new(BoxStep { solver, x }),
    }
}

const PROBE_STEPS: usize = 30;
const PROBES: usize = 12;
const LAMBDA_TRIGGER: f64 = 0.1;

/// Best margin over a short FB run with step `alpha`; `-∞` on divergence.
fn probe_margin(
    kind: Kind,
    model: &MonDeq,
    x: &CHZonotope,
    start: &IterationState,
    target: usize,
    alpha: f64,
    cfg: &EngineConfig,
) -> f64 {
    let Ok(solver) = model.solver(&SolverConfig::fb(alpha)) else {
        return f64::NEG_INFINITY;
    };
    let g = step_with(kind, &solver, x);
    let mut st = start.clone();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..PROBE_STEPS {
        st = match g.apply(&st) {
            Ok(s) => s,
            Err(_) => return best,
        };
        let w = st.s.max_width();
        if !w.is_finite() || w > cfg.abort_width {
            return best;
        }
        best = best.max(output_margin(model, target, &st.s));
    }
    best
}

/// Golden-section search for the FB step on `(0, 1]`, maximizing the probe
/// margin. Returns the best probed α.
fn line_search_alpha(
    kind: Kind,
    model: &MonDeq,
    x: &CHZonotope,
    start: &IterationState,
    target: usize,
    cfg: &EngineConfig,
) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-3, 1.0);
    let f = |alpha: f64| probe_margin(kind, model, x, start, target, alpha, cfg);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 2..PROBES {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best.0
}

/// Maximizes `f` over `τ ∈ [−1, 1]^blocks` by cyclic coordinate search with
/// a three-point quadratic fit per coordinate, starting from `τ = 0`.
///
/// `evals` bounds the probes beyond the initial evaluation. The returned
/// value is never below `f(0)`.
pub fn coordinate_search<F: FnMut(&[f64]) -> f64>(blocks: usize, evals: usize, mut f: F) -> (Vec<f64>, f64) {
    let mut tau = vec![0.0; blocks];
    let mut best = f(&tau);
    if blocks == 0 {
        return (tau, best);
    }
    let mut used = 0;
    let mut h = 0.5;
    while used < evals {
        for t in 0..blocks {
            if used >= evals {
                break;
            }
            let t0 = tau[t];
            let mut pts: Vec<(f64, f64)> = vec![(t0, best)];
            for cand in [t0 - h, t0 + h] {
                let c = cand.clamp(-1.0, 1.0);
                if used >= evals || pts.iter().any(|(p, _)| (p - c).abs() < 1e-12) {
                    continue;
                }
                tau[t] = c;
                pts.push((c, f(&tau)));
                used += 1;
            }
            if pts.len() == 3 && used < evals {
                if let Some(v) = quadratic_argmax(&pts) {
                    if pts.iter().all(|(p, _)| (p - v).abs() > 1e-9) {
                        tau[t] = v;
                        pts.push((v, f(&tau)));
                        used += 1;
                    }
                }
            }
            let &(bt, bv) = pts.iter().fold(&pts[0], |acc, p| if p.1 > acc.1 { p } else { acc });
            tau[t] = bt;
            best = bv;
        }
        h = (h * 0.5).max(1e-3);
    }
    (tau, best)
}

/// Maximizer on `[−1, 1]` of the parabola through three points.
fn quadratic_argmax(pts: &[(f64, f64)]) -> Option<f64> {
    let (x0, y0) = pts[0];
    let (x1, y1) = pts[1];
    let (x2, y2) = pts[2];
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    if d0 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return None;
    }
    let a = y0 / d0 + y1 / d1 + y2 / d2;
    let b = -(y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 + y2 * (x0 + x1) / d2);
    let q = |x: f64| a * x * x + b * x;
    let v = if a < -1e-15 {
        (-b / (2.0 * a)).clamp(-1.0, 1.0)
    } else if q(1.0) >= q(-1.0) {
        1.0
    } else {
        -1.0
    };
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaResult {
    /// Slope offset per unrolled step.
    pub taus: Vec<f64>,
    /// Realized slopes per unrolled step (`None` where defaults were used).
    pub slopes: Vec<Option<Vec<f64>>>,
    pub margin: f64,
    pub default_margin: f64,
}

/// Margin after `taus.len()` unrolled steps from `start`, with the slopes
/// used at each step.
fn unrolled_margin(
    solver: &Solver,
    x: &CHZonotope,
    start: &IterationState,
    target: usize,
    taus: &[f64],
) -> (f64, Vec<Option<Vec<f64>>>) {
    let mut st = start.clone();
    let mut used = Vec::with_capacity(taus.len());
    for &t in taus {
        let slopes = if t == 0.0 { Slopes::Default } else { Slopes::Tau(t) };
        match solver.abstract_step_traced(x, &st, &slopes) {
            Ok((next, lam)) if next.s.is_finite() => {
                st = next;
                used.push(lam);
            }
            _ => return (f64::NEG_INFINITY, used),
        }
    }
    (output_margin(solver.model(), target, &st.s), used)
}

/// Searches per-step ReLU slopes for an unrolled phase-2 prefix from
/// `start`; falls back to the defaults when nothing better is found.
pub fn optimize_lambda(
    solver: &Solver,
    x: &CHZonotope,
    start: &IterationState,
    target: usize,
    unroll: usize,
    evals: usize,
) -> LambdaResult {
    let zeros = vec![0.0; unroll];
    let (default_margin, default_slopes) = unrolled_margin(solver, x, start, target, &zeros);
    let (taus, margin) = coordinate_search(unroll, evals, |t| unrolled_margin(solver, x, start, target, t).0);
    if margin > default_margin {
        let (_, slopes) = unrolled_margin(solver, x, start, target, &taus);
        LambdaResult { taus, slopes, margin, default_margin }
    } else {
        LambdaResult { taus: zeros, slopes: default_slopes, margin: default_margin, default_margin }
    }
}

fn run_pipeline(kind: Kind, model: &MonDeq, task: &LocalTask, cfg: &VerifyConfig) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    task.validate(model)?;
    cfg.engine.validate().map_err(VerifyError::InvalidTask)?;
    if cfg.g2 == G2Policy::Pr && cfg.g1.method != Method::Pr {
        return Err(VerifyError::InvalidTask("PR phase 2 requires a PR phase-1 solver".into()));
    }
    let g1 = model.solver(&cfg.g1)?;
    let z_star = g1.solve(&task.x)?;
    let x = task.input();
    let s0 = g1.point_state(&z_star);

    let t1 = step_with(kind, &g1, &x);
    let p1 = match kind {
        Kind::Ch => phase1_contract(&mut ChDomain::new(cfg.engine.pca_refresh), t1.as_ref(), s0, &cfg.engine),
        Kind::Box => phase1_contract(&mut BoxDomain, t1.as_ref(), s0, &cfg.engine),
    };
    let (s_star, n1, mut trace) = match p1 {
        Ok(v) => v,
        Err(e) => {
            return match status_of(&e) {
                Some(st) => {
                    let steps = match e {
                        EngineError::Diverged { step, .. } => step,
                        EngineError::Exhausted { steps } => steps,
                        EngineError::Domain(_) => 0,
                    };
                    Ok(Verdict::failed(st, steps, Trace::default(), start))
                }
                None => Err(VerifyError::Engine(e)),
            };
        }
    };

    let (g2_cfg, s2, g2_alpha) = match cfg.g2 {
        G2Policy::Pr => (cfg.g1, s_star.clone(), None),
        G2Policy::Fb(a) => (SolverConfig::fb(a), s_star.z_marginal(), Some(a)),
        G2Policy::FbLineSearch => {
            let z = s_star.z_marginal();
            let a = line_search_alpha(kind, model, &x, &z, task.target, &cfg.engine);
            (SolverConfig::fb(a), z, Some(a))
        }
    };
    let g2 = model.solver(&g2_cfg)?;
    let t2 = step_with(kind, &g2, &x);
    let check = |st: &IterationState| output_margin(model, task.target, &st.s);
    let p2 = match kind {
        Kind::Ch => phase2_tighten(&ChDomain::new(cfg.engine.pca_refresh), t2.as_ref(), s2, check, &cfg.engine),
        Kind::Box => phase2_tighten(&BoxDomain, t2.as_ref(), s2, check, &cfg.engine),
    };
    let r2 = match p2 {
        Ok(r) => r,
        Err(e) => {
            let margin = output_margin(model, task.target, &s_star.s);
            return match status_of(&e) {
                Some(st) => Ok(Verdict { margin: Some(margin), g2_alpha, ..Verdict::failed(st, n1, trace, start) }),
                None => Err(VerifyError::Engine(e)),
            };
        }
    };
    trace.extend(r2.trace);
    let mut verdict = Verdict {
        status: if r2.status == Phase2Status::Certified { Status::Certified } else { Status::Unknown },
        margin: Some(r2.margin),
        phase1_steps: n1,
        phase2_steps: r2.steps,
        g2_alpha,
        lambda_margin: None,
        wallclock: 0.0,
        trace,
    };
    if verdict.status == Status::Unknown && kind == Kind::Ch {
        if let Some((unroll, evals)) = cfg.lambda_opt.budget() {
            let scale = output_scale(model, &r2.best.s);
            if r2.margin > -LAMBDA_TRIGGER * scale {
                let res = optimize_lambda(&g2, &x, &r2.best, task.target, unroll, evals);
                verdict.lambda_margin = Some(res.margin);
                if res.margin > 0.0 {
                    verdict.status = Status::Certified;
                    verdict.margin = Some(res.margin);
                }
            }
        }
    }
    verdict.wallclock = start.elapsed().as_secs_f64();
    Ok(verdict)
}

/// Two-phase verification with CH-Zonotopes.
pub fn verify_local(model: &MonDeq, task: &LocalTask, cfg: &VerifyConfig) -> Result<Verdict, VerifyError> {
    run_pipeline(Kind::Ch, model, task, cfg)
}

/// The same pipeline with interval transformers and hull containment.
pub fn verify_box(model: &MonDeq, task: &LocalTask, cfg: &VerifyConfig) -> Result<Verdict, VerifyError> {
    run_pipeline(Kind::Box, model, task, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KleeneDomain {
    Zonotope,
    Box,
}

const WIDEN_AFTER: usize = 200;
const STABLE_TOL: f64 = 1e-9;

fn hull_within(outer: &CHZonotope, inner: &CHZonotope) -> bool {
    let (lo, hi) = outer.interval_hull();
    let (l2, h2) = inner.interval_hull();
    (0..lo.len()).all(|i| {
        let tol = STABLE_TOL * (1.0 + lo[i].abs().max(hi[i].abs()));
        l2[i] >= lo[i] - tol && h2[i] <= hi[i] + tol
    })
}

fn hull_join(a: &CHZonotope, b: &CHZonotope) -> CHZonotope {
    let (l1, h1) = a.interval_hull();
    let (l2, h2) = b.interval_hull();
    let lo: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a.min(*b)).collect();
    let hi: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a.max(*b)).collect();
    let c = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let r: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).collect();
    CHZonotope::from_box(c, &r)
}

/// Kleene iteration from `s = 0` with the phase-1 solver: `unroll_k`
/// join-free steps, then interval-hull joins until the next iterate lies in
/// the current box. After 200 joins every still-growing bound is widened to
/// infinity, which reports `Diverged`.
pub fn verify_kleene(
    model: &MonDeq,
    task: &LocalTask,
    cfg: &VerifyConfig,
    domain: KleeneDomain,
    unroll_k: usize,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    task.validate(model)?;
    let solver = model.solver(&cfg.g1)?;
    let x = task.input();
    let kind = match domain {
        KleeneDomain::Zonotope => Kind::Ch,
        KleeneDomain::Box => Kind::Box,
    };
    let g = step_with(kind, &solver, &x);
    let mut trace = Trace::default();
    let mut s = solver.point_state(&vec![0.0; model.p()]);
    let mut steps = 0;
    let too_wide = |st: &IterationState| {
        let w = st.s.max_width();
        !w.is_finite() || w > cfg.engine.abort_width
    };
    for _ in 0..unroll_k {
        s = g.apply(&s).map_err(VerifyError::Engine)?;
        steps += 1;
        trace.push(steps, 1, s.s.mean_width(), None);
        if too_wide(&s) {
            return Ok(Verdict::failed(Status::Diverged, steps, trace, start));
        }
    }
    let mut joins = 0;
    loop {
        if steps >= cfg.engine.n_max.max(unroll_k + WIDEN_AFTER + 1) {
            return Ok(Verdict::failed(Status::Exhausted, steps, trace, start));
        }
        let f = g.apply(&s).map_err(VerifyError::Engine)?;
        steps += 1;
        if too_wide(&f) {
            return Ok(Verdict::failed(Status::Diverged, steps, trace, start));
        }
        if joins > 0 && hull_within(&s.s, &f.s) {
            let margin = output_margin(model, task.target, &s.s);
            return Ok(Verdict {
                status: if margin > 0.0 { Status::Certified } else { Status::Unknown },
                margin: Some(margin),
                phase1_steps: steps,
                phase2_steps: 0,
                g2_alpha: None,
                lambda_margin: None,
                wallclock: start.elapsed().as_secs_f64(),
                trace,
            });
        }
        let joined = hull_join(&s.s, &f.s);
        joins += 1;
        if joins > WIDEN_AFTER {
            // Widening: any bound that still moves goes to infinity.
            trace.push(steps, 1, f64::INFINITY, None);
            return Ok(Verdict::failed(Status::Diverged, steps, trace, start));
        }
        trace.push(steps, 1, joined.mean_width(), None);
        s = IterationState { s: joined, input_cols: 0, ..f };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub depth: usize,
    /// Certified class, if any.
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub max_depth: usize,
    /// Fraction of the input box's volume covered by certified leaves.
    pub certified_fraction: f64,
    pub leaves: Vec<Leaf>,
}

impl RegionReport {
    /// One row per leaf: `lo_i..., hi_i..., depth, label` (empty label when
    /// not certified).
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let q = self.lo.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..q).map(|i| format!("lo_{i}")).collect();
        header.extend((0..q).map(|i| format!("hi_{i}")));
        header.push("depth".into());
        header.push("label".into());
        w.write_record(&header)?;
        for leaf in &self.leaves {
            let mut row: Vec<String> = leaf.lo.iter().chain(&leaf.hi).map(|v| v.to_string()).collect();
            row.push(leaf.depth.to_string());
            row.push(leaf.label.map(|l| l.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()
    }
}

fn certify_leaf(model: &MonDeq, lo: &[f64], hi: &[f64], cfg: &VerifyConfig) -> Option<usize> {
    let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let radius: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect();
    let target = model.predict(&x, &cfg.g1).ok()?;
    let task = LocalTask { x, radius, target };
    match verify_local(model, &task, cfg) {
        Ok(v) if v.status == Status::Certified => Some(target),
        _ => None,
    }
}

fn split(model: &MonDeq, lo: Vec<f64>, hi: Vec<f64>, depth: usize, max_depth: usize, cfg: &VerifyConfig) -> Vec<Leaf> {
    let label = certify_leaf(model, &lo, &hi, cfg);
    if label.is_some() || depth >= max_depth {
        return vec![Leaf { lo, hi, depth, label }];
    }
    let dim = (0..lo.len())
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = 0.5 * (lo[dim] + hi[dim]);
    let (mut hi_left, mut lo_right) = (hi.clone(), lo.clone());
    hi_left[dim] = mid;
    lo_right[dim] = mid;
    let (mut left, right) = rayon::join(
        || split(model, lo, hi_left, depth + 1, max_depth, cfg),
        || split(model, lo_right, hi, depth + 1, max_depth, cfg),
    );
    left.extend(right);
    left
}

/// Certifies sub-boxes of `[lo, hi]`, bisecting the widest dimension of any
/// uncertified box down to `max_depth`. Leaves run on the current rayon pool.
pub fn verify_global(
    model: &MonDeq,
    lo: &[f64],
    hi: &[f64],
    max_depth: usize,
    cfg: &VerifyConfig,
) -> Result<RegionReport, VerifyError> {
    if lo.len() != model.q() || hi.len() != model.q() {
        return Err(VerifyError::InvalidTask(format!("box must have {} dimensions", model.q())));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
        return Err(VerifyError::InvalidTask("box bounds must be finite with lo ≤ hi".into()));
    }
    let leaves = split(model, lo.to_vec(), hi.to_vec(), 0, max_depth, cfg);
    let certified_fraction = leaves
        .iter()
        .filter(|l| l.label.is_some())
        .map(|l| 0.5f64.powi(l.depth as i32))
        .fold(0.0, |a, b| a + b);
    Ok(RegionReport { lo: lo.to_vec(), hi: hi.to_vec(), max_depth, certified_fraction, leaves })
}
