//! Householder's iteration for `1/√x` on a set of inputs.
//!
//! ```text
//! while s <= 0 || |s·s − 1/x| >= ε {
//!     h = 1 − x·s·s
//!     s = s + s·(0.5·h + 0.375·h·h)
//! }
//! ```
//!
//! States are scalar affine forms over named error symbols, so `x` and `s`
//! stay correlated through the products. Consolidation keeps only `x`'s
//! symbol as a generator and boxes the rest, which makes containment a
//! three-term scalar inequality.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{phase1_contract, AbstractTransformer, Domain, EngineConfig, EngineError, Expansion};

/// Error symbol of the input `x`.
pub const INPUT_SYMBOL: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HouseholderError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("no convergence within {steps} steps")]
    NonConvergence { steps: usize },
    #[error("abstraction diverged after {steps} steps")]
    Diverged { steps: usize },
    #[error("no containment found within {steps} steps")]
    Exhausted { steps: usize },
}

/// `c + Σ kᵢ·νᵢ + b·η` with `νᵢ, η ∈ [−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    center: f64,
    coeffs: BTreeMap<u64, f64>,
    box_radius: f64,
}

impl AffineForm {
    pub fn constant(c: f64) -> Self {
        AffineForm { center: c, coeffs: BTreeMap::new(), box_radius: 0.0 }
    }

    /// `[lo, hi]` carried by symbol `id`.
    pub fn interval(lo: f64, hi: f64, id: u64) -> Self {
        let mut coeffs = BTreeMap::new();
        if hi > lo {
            coeffs.insert(id, 0.5 * (hi - lo));
        }
        AffineForm { center: 0.5 * (lo + hi), coeffs, box_radius: 0.0 }
    }

    pub fn new(center: f64, coeffs: BTreeMap<u64, f64>, box_radius: f64) -> Self {
        assert!(box_radius >= 0.0, "box radius must be non-negative");
        AffineForm { center, coeffs, box_radius }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeff(&self, id: u64) -> f64 {
        self.coeffs.get(&id).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, f64> {
        &self.coeffs
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    fn coeff_sum(&self) -> f64 {
        self.coeffs.values().map(|v| v.abs()).sum()
    }

    pub fn radius(&self) -> f64 {
        self.coeff_sum() + self.box_radius
    }

    pub fn hull(&self) -> (f64, f64) {
        let r = self.radius();
        (self.center - r, self.center + r)
    }

    pub fn is_finite(&self) -> bool {
        self.center.is_finite() && self.box_radius.is_finite() && self.coeffs.values().all(|v| v.is_finite())
    }

    /// Value for a symbol assignment (missing symbols read as 0) and box value `eta`.
    pub fn eval(&self, nu: &BTreeMap<u64, f64>, eta: f64) -> f64 {
        self.center
            + self.coeffs.iter().map(|(k, v)| v * nu.get(k).copied().unwrap_or(0.0)).sum::<f64>()
            + self.box_radius * eta
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        let mut coeffs = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            *coeffs.entry(*k).or_insert(0.0) += v;
        }
        AffineForm { center: self.center + other.center, coeffs, box_radius: self.box_radius + other.box_radius }
    }

    /// `f·self + off`.
    pub fn scale_shift(&self, f: f64, off: f64) -> AffineForm {
        AffineForm {
            center: f * self.center + off,
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, f * v)).collect(),
            box_radius: f.abs() * self.box_radius,
        }
    }

    /// Product with the quadratic part over-approximated: squared shared
    /// symbols contribute `½kᵢmᵢ` to the center and `½|kᵢmᵢ|` to the box.
    pub fn mul(&self, other: &AffineForm) -> AffineForm {
        let (a0, b0) = (self.center, other.center);
        let mut coeffs = BTreeMap::new();
        let mut center = a0 * b0;
        let mut diag = 0.0;
        for k in self.coeffs.keys().chain(other.coeffs.keys()) {
            if coeffs.contains_key(k) {
                continue;
            }
            let (ai, bi) = (self.coeff(*k), other.coeff(*k));
            coeffs.insert(*k, a0 * bi + b0 * ai);
            center += 0.5 * ai * bi;
            diag += 0.5 * (ai * bi).abs();
        }
        let (sa, sb) = (self.coeff_sum(), other.coeff_sum());
        let rem = sa * sb - diag
            + self.box_radius * (b0.abs() + sb + other.box_radius)
            + other.box_radius * (a0.abs() + sa);
        AffineForm { center, coeffs, box_radius: rem }
    }

    /// Moves the box term onto the fresh symbol `id`.
    pub fn lift_box(&self, id: u64) -> AffineForm {
        let mut out = self.clone();
        if out.box_radius > 0.0 {
            out.coeffs.insert(id, out.box_radius);
            out.box_radius = 0.0;
        }
        out
    }

    /// Keeps symbol `keep`, moves everything else into an expanded box.
    pub fn collapse_except(&self, keep: u64, w_mul: f64, w_add: f64) -> AffineForm {
        let other: f64 = self.coeffs.iter().filter(|(k, _)| **k != keep).map(|(_, v)| v.abs()).sum();
        let mut coeffs = BTreeMap::new();
        let k = self.coeff(keep);
        if k != 0.0 {
            coeffs.insert(keep, k);
        }
        AffineForm { center: self.center, coeffs, box_radius: (1.0 + w_mul) * (other + self.box_radius) + w_add }
    }
}

/// Symbolic evaluation of one loop body, lifting every product's remainder
/// into a fresh symbol. `next_id` supplies symbol ids.
pub fn householder_step_abstract(x: &AffineForm, s: &AffineForm, next_id: &mut dyn FnMut() -> u64) -> AffineForm {
    let mut lift = |f: AffineForm| {
        let id = next_id();
        f.lift_box(id)
    };
    let s = lift(s.clone());
    let xs = lift(x.mul(&s));
    let t = lift(xs.mul(&s));
    let h = t.scale_shift(-1.0, 1.0);
    let hh = lift(h.mul(&h));
    let inner = lift(h.scale_shift(0.5, 0.0).add(&hh.scale_shift(0.375, 0.0)));
    let q = lift(s.mul(&inner));
    s.add(&q)
}

/// One concrete loop body.
pub fn householder_step(x: f64, s: f64) -> f64 {
    let h = 1.0 - x * s * s;
    s + s * (0.5 * h + 0.375 * h * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootMode {
    Fix,
    Reach,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTask {
    pub lo: f64,
    pub hi: f64,
    pub s0: f64,
    pub epsilon: f64,
    pub mode: RootMode,
}

impl RootTask {
    pub fn new(lo: f64, hi: f64, mode: RootMode) -> Self {
        RootTask { lo, hi, s0: 0.125, epsilon: 1e-8, mode }
    }

    pub fn validate(&self) -> Result<(), HouseholderError> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi.is_finite()) {
            return Err(HouseholderError::InvalidTask(format!("need 0 < lo ≤ hi, got [{}, {}]", self.lo, self.hi)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / self.hi) {
            return Err(HouseholderError::InvalidTask(format!("epsilon {} must lie in (0, 1/hi)", self.epsilon)));
        }
        if !self.s0.is_finite() {
            return Err(HouseholderError::InvalidTask("s0 must be finite".into()));
        }
        Ok(())
    }

    fn input(&self) -> AffineForm {
        AffineForm::interval(self.lo, self.hi, INPUT_SYMBOL)
    }
}

const CONCRETE_MAX_STEPS: usize = 10_000;

/// Runs the loop for a single input and returns the final `s ≈ 1/√x`.
pub fn root_concrete(x: f64, task: &RootTask) -> Result<f64, HouseholderError> {
    if !(x > 0.0) {
        return Err(HouseholderError::InvalidTask(format!("x must be positive, got {x}")));
    }
    let mut s = task.s0;
    for _ in 0..CONCRETE_MAX_STEPS {
        if s > 0.0 && (s * s - 1.0 / x).abs() < task.epsilon {
            return Ok(s);
        }
        s = householder_step(x, s);
        if !s.is_finite() {
            break;
        }
    }
    Err(HouseholderError::NonConvergence { steps: CONCRETE_MAX_STEPS })
}

/// Scalar domain: consolidation boxes every symbol except the input's,
/// containment compares the retained coefficient, center and box.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarDomain;

impl Domain for ScalarDomain {
    type Elem = AffineForm;

    fn consolidate(&mut self, e: &AffineForm, w_mul: f64, w_add: f64) -> Result<AffineForm, EngineError> {
        Ok(e.collapse_except(INPUT_SYMBOL, w_mul, w_add))
    }

    fn contains(&self, outer: &AffineForm, inner: &AffineForm) -> bool {
        let o = outer.collapse_except(INPUT_SYMBOL, 0.0, 0.0);
        let i = inner.collapse_except(INPUT_SYMBOL, 0.0, 0.0);
        (i.center - o.center).abs() + (i.coeff(INPUT_SYMBOL) - o.coeff(INPUT_SYMBOL)).abs() + i.box_radius
            <= o.box_radius
    }

    fn mean_width(&self, e: &AffineForm) -> f64 {
        2.0 * e.radius()
    }

    fn max_width(&self, e: &AffineForm) -> f64 {
        2.0 * e.radius()
    }
}

struct HhStep {
    x: AffineForm,
    next: Cell<u64>,
    hulls: RefCell<Vec<(f64, f64)>>,
}

impl AbstractTransformer<AffineForm> for HhStep {
    fn apply(&self, s: &AffineForm) -> Result<AffineForm, EngineError> {
        let mut fresh = || {
            let id = self.next.get();
            self.next.set(id + 1);
            id
        };
        let out = householder_step_abstract(&self.x, s, &mut fresh);
        self.hulls.borrow_mut().push(out.hull());
        Ok(out)
    }

    fn name(&self) -> String {
        "householder".into()
    }
}

/// Engine settings for the scalar analysis: consolidate every step, no expansion.
pub fn householder_engine_config() -> EngineConfig {
    EngineConfig { r: 1, history_len: 10, w_mul: 0.0, w_add: 0.0, expansion: Expansion::Const, ..EngineConfig::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root_lo: f64,
    pub root_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub iterations: usize,
    /// Hull of `s` after each abstract step.
    pub hulls: Vec<(f64, f64)>,
}

fn to_root(task: &RootTask, s_lo: f64, s_hi: f64) -> Option<(f64, f64)> {
    let d = if task.mode == RootMode::Reach { task.epsilon.sqrt() } else { 0.0 };
    let (l, h) = (s_lo - d, s_hi + d);
    (l > 0.0 && h.is_finite()).then(|| (1.0 / h, 1.0 / l))
}

/// Encloses every terminating value of the loop over `[lo, hi]` by the
/// phase-1 contraction and reports the corresponding root interval `1/s`.
pub fn analyze_root(task: &RootTask, cfg: &EngineConfig) -> Result<RootResult, HouseholderError> {
    task.validate()?;
    let g = HhStep { x: task.input(), next: Cell::new(INPUT_SYMBOL + 1), hulls: RefCell::new(Vec::new()) };
    let (s, n, _) = match phase1_contract(&mut ScalarDomain, &g, AffineForm::constant(task.s0), cfg) {
        Ok(v) => v,
        Err(EngineError::Diverged { step, .. }) => return Err(HouseholderError::Diverged { steps: step }),
        Err(EngineError::Exhausted { steps }) => return Err(HouseholderError::Exhausted { steps }),
        Err(EngineError::Domain(e)) => return Err(HouseholderError::InvalidTask(e.to_string())),
    };
    let (s_lo, s_hi) = s.hull();
    let (root_lo, root_hi) = to_root(task, s_lo, s_hi).ok_or(HouseholderError::Diverged { steps: n })?;
    Ok(RootResult { root_lo, root_hi, s_lo, s_hi, iterations: n, hulls: g.hulls.into_inner() })
}

/// Does interval evaluation prove the loop guard true for every `(x, s)`?
fn guard_surely_true(x: (f64, f64), s: (f64, f64), eps: f64) -> bool {
    let (l, u) = s;
    if u <= 0.0 {
        return true;
    }
    if l <= 0.0 {
        return false;
    }
    let lo = l * l - 1.0 / x.0;
    let hi = u * u - 1.0 / x.1;
    lo >= eps || hi <= -eps
}

/// Join keeping the input coefficient of smaller magnitude (zero on a sign
/// change) and the smallest center/box covering both arguments.
pub fn join(a: &AffineForm, b: &AffineForm) -> AffineForm {
    let a = a.collapse_except(INPUT_SYMBOL, 0.0, 0.0);
    let b = b.collapse_except(INPUT_SYMBOL, 0.0, 0.0);
    let (ka, kb) = (a.coeff(INPUT_SYMBOL), b.coeff(INPUT_SYMBOL));
    let k = if ka * kb > 0.0 {
        if ka.abs() < kb.abs() { ka } else { kb }
    } else {
        0.0
    };
    let spread = |f: &AffineForm| (f.coeff(INPUT_SYMBOL) - k).abs() + f.box_radius;
    let lo = (a.center - spread(&a)).min(b.center - spread(&b));
    let hi = (a.center + spread(&a)).max(b.center + spread(&b));
    let mut coeffs = BTreeMap::new();
    if k != 0.0 {
        coeffs.insert(INPUT_SYMBOL, k);
    }
    AffineForm { center: 0.5 * (lo + hi), coeffs, box_radius: 0.5 * (hi - lo) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KleeneRoot {
    Interval { root_lo: f64, root_hi: f64, unrolled: usize, iterations: usize },
    Diverged { iterations: usize },
}

const KLEENE_MAX_JOINS: usize = 10_000;
const KLEENE_ABORT: f64 = 1e9;

/// Kleene baseline: join-free steps while the guard provably holds (at most
/// `unroll_k`), then joins until the next iterate is below the current one.
/// An `s` interval reaching 0 makes the root unbounded and counts as
/// divergence.
pub fn kleene_root(task: &RootTask, unroll_k: Option<usize>) -> Result<KleeneRoot, HouseholderError> {
    task.validate()?;
    let x = task.input();
    let mut next = INPUT_SYMBOL + 1;
    let mut fresh = || {
        next += 1;
        next
    };
    let mut s = AffineForm::constant(task.s0);
    let mut n = 0;
    let cap = unroll_k.unwrap_or(usize::MAX);
    while n < cap && guard_surely_true((task.lo, task.hi), s.hull(), task.epsilon) {
        s = householder_step_abstract(&x, &s, &mut fresh).collapse_except(INPUT_SYMBOL, 0.0, 0.0);
        n += 1;
        if !s.is_finite() || s.radius() > KLEENE_ABORT {
            return Ok(KleeneRoot::Diverged { iterations: n });
        }
    }
    let unrolled = n;
    for _ in 0..KLEENE_MAX_JOINS {
        let f = householder_step_abstract(&x, &s, &mut fresh).collapse_except(INPUT_SYMBOL, 0.0, 0.0);
        n += 1;
        let j = join(&s, &f);
        if le_rel(&j, &s) {
            let (l, h) = s.hull();
            return Ok(match to_root(task, l, h) {
                Some((root_lo, root_hi)) => KleeneRoot::Interval { root_lo, root_hi, unrolled, iterations: n },
                None => KleeneRoot::Diverged { iterations: n },
            });
        }
        s = j;
        let (l, _) = s.hull();
        if !s.is_finite() || 2.0 * s.radius() > KLEENE_ABORT || l <= 0.0 {
            return Ok(KleeneRoot::Diverged { iterations: n });
        }
    }
    Err(HouseholderError::Exhausted { steps: n })
}

/// Relational order with a rounding allowance relative to the center.
fn le_rel(a: &AffineForm, b: &AffineForm) -> bool {
    let tol = 1e-15 * (1.0 + b.center.abs());
    (a.center - b.center).abs() + (a.coeff(INPUT_SYMBOL) - b.coeff(INPUT_SYMBOL)).abs() + a.box_radius
        <= b.box_radius + tol
}
