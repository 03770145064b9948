//! Two-phase abstract fixpoint iteration.
//!
//! Phase 1 iterates a sound abstract transformer, consolidating every `r`
//! steps, until the current element is contained in one of the recently
//! consolidated elements. The contained element then encloses every
//! concrete fixpoint. Phase 2 keeps applying a fixpoint-set-preserving
//! transformer, without consolidation or containment, and stops as soon as
//! a margin becomes positive or stops improving.
//!
//! The engine is generic over a [`Domain`], which owns consolidation and
//! containment, so CH-Zonotopes, boxes and scalar affine forms share it.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chzono::{CHZonotope, ChzError};
use crate::numerics::{invert, pca_basis, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("abstraction diverged at step {step} (width {width:e})")]
    Diverged { step: usize, width: f64 },
    #[error("no containment found within {steps} steps")]
    Exhausted { steps: usize },
    #[error(transparent)]
    Domain(#[from] ChzError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    Const,
    Exp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub r: usize,
    pub pca_refresh: usize,
    pub history_len: usize,
    pub n_max: usize,
    pub abort_width: f64,
    /// Phase-2 stall bound as a multiple of `r_prime`.
    pub stall_multiple: usize,
    pub r_prime: usize,
    pub w_mul: f64,
    pub w_add: f64,
    pub expansion: Expansion,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            r: 3,
            pca_refresh: 30,
            history_len: 10,
            n_max: 500,
            abort_width: 1e9,
            stall_multiple: 3,
            r_prime: 50,
            w_mul: 1e-3,
            w_add: 1e-2,
            expansion: Expansion::Const,
        }
    }
}

impl EngineConfig {
    pub fn stall_window(&self) -> usize {
        self.stall_multiple * self.r_prime
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.r == 0 || self.history_len == 0 || self.n_max == 0 || self.pca_refresh == 0 {
            return Err("r, history_len, n_max and pca_refresh must be at least 1".into());
        }
        if self.w_mul < 0.0 || self.w_add < 0.0 || !self.w_mul.is_finite() || !self.w_add.is_finite() {
            return Err("expansion weights must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Consolidation, containment and size measures for one abstract domain.
pub trait Domain {
    type Elem: Clone;

    /// Over-approximates `e` by an element the containment test accepts as
    /// an outer element, inflated by `(w_mul, w_add)`.
    fn consolidate(&mut self, e: &Self::Elem, w_mul: f64, w_add: f64) -> Result<Self::Elem, EngineError>;

    /// Sound (possibly incomplete) test for `γ(inner) ⊆ γ(outer)`.
    fn contains(&self, outer: &Self::Elem, inner: &Self::Elem) -> bool;

    fn mean_width(&self, e: &Self::Elem) -> f64;

    fn max_width(&self, e: &Self::Elem) -> f64;
}

/// One abstract solver step.
pub trait AbstractTransformer<E> {
    fn apply(&self, state: &E) -> Result<E, EngineError>;
    fn name(&self) -> String;
}

/// Stacked solver state `[z; u]` as a single CH-Zonotope.
///
/// The last `input_cols` generator columns of `s` are the input's own
/// generator block, so the state stays correlated with the input between
/// consolidations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub s: CHZonotope,
    pub z_dims: usize,
    pub u_dims: usize,
    pub input_cols: usize,
    pub step: usize,
}

impl IterationState {
    pub fn new(s: CHZonotope, z_dims: usize, u_dims: usize) -> Self {
        assert_eq!(s.dim(), z_dims + u_dims, "state dimension must be z_dims + u_dims");
        IterationState { s, z_dims, u_dims, input_cols: 0, step: 0 }
    }

    /// The z rows only, keeping the input columns.
    pub fn z_marginal(&self) -> IterationState {
        IterationState {
            s: self.s.marginal(0..self.z_dims),
            z_dims: self.z_dims,
            u_dims: 0,
            input_cols: self.input_cols,
            step: self.step,
        }
    }
}

/// CH-Zonotope consolidation onto a PCA basis, refreshed once `pca_refresh`
/// solver steps have passed since the last refresh. A basis taken from a
/// state without generators is used once and then discarded.
#[derive(Debug, Clone)]
pub struct ChDomain {
    pca_refresh: usize,
    basis: Option<(Matrix, Matrix)>,
    refreshed_at: usize,
}

impl ChDomain {
    pub fn new(pca_refresh: usize) -> Self {
        ChDomain { pca_refresh: pca_refresh.max(1), basis: None, refreshed_at: 0 }
    }

    fn refresh(&mut self, e: &IterationState) -> Result<(), EngineError> {
        let b = pca_basis(e.s.gens());
        let inv = invert(&b).map_err(ChzError::from)?;
        self.basis = Some((b, inv));
        self.refreshed_at = e.step;
        Ok(())
    }
}

impl Domain for ChDomain {
    type Elem = IterationState;

    fn consolidate(&mut self, e: &IterationState, w_mul: f64, w_add: f64) -> Result<IterationState, EngineError> {
        let stale = e.step < self.refreshed_at || e.step - self.refreshed_at >= self.pca_refresh;
        if self.basis.is_none() || stale {
            self.refresh(e)?;
        }
        let (b, inv) = self.basis.as_ref().expect("basis set above");
        let s = match e.s.consolidate_with_inverse(b, inv, w_mul, w_add) {
            Ok(s) => s,
            Err(_) => {
                // A stale basis can make the result ill-conditioned; retry
                // with a fresh one before giving up.
                self.refresh(e)?;
                let (b, inv) = self.basis.as_ref().expect("basis set above");
                e.s.consolidate_with_inverse(b, inv, w_mul, w_add)?
            }
        };
        if e.s.gens().max_abs() == 0.0 {
            self.basis = None;
        }
        Ok(IterationState { s, input_cols: 0, ..e.clone() })
    }

    fn contains(&self, outer: &IterationState, inner: &IterationState) -> bool {
        outer.s.contains(&inner.s)
    }

    fn mean_width(&self, e: &IterationState) -> f64 {
        e.s.mean_width()
    }

    fn max_width(&self, e: &IterationState) -> f64 {
        e.s.max_width()
    }
}

/// Interval domain: elements are held as pure boxes, consolidation only
/// applies the expansion and containment compares hulls.
#[derive(Debug, Clone, Default)]
pub struct BoxDomain;

impl Domain for BoxDomain {
    type Elem = IterationState;

    fn consolidate(&mut self, e: &IterationState, w_mul: f64, w_add: f64) -> Result<IterationState, EngineError> {
        let r: Vec<f64> = e.s.radius().iter().map(|r| (1.0 + w_mul) * r + w_add).collect();
        let s = CHZonotope::box_only(e.s.center().to_vec(), r);
        Ok(IterationState { s, input_cols: 0, ..e.clone() })
    }

    fn contains(&self, outer: &IterationState, inner: &IterationState) -> bool {
        let (lo, hi) = outer.s.interval_hull();
        let (l2, h2) = inner.s.interval_hull();
        lo.iter().zip(&l2).all(|(a, b)| a <= b) && hi.iter().zip(&h2).all(|(a, b)| b <= a)
    }

    fn mean_width(&self, e: &IterationState) -> f64 {
        e.s.mean_width()
    }

    fn max_width(&self, e: &IterationState) -> f64 {
        e.s.max_width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub phase: u8,
    pub mean_width: f64,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn push(&mut self, step: usize, phase: u8, mean_width: f64, margin: Option<f64>) {
        self.rows.push(TraceRow { step, phase, mean_width, margin });
    }

    pub fn extend(&mut self, other: Trace) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "phase", "mean_width", "margin"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                r.phase.to_string(),
                format!("{:e}", r.mean_width),
                r.margin.map(|m| format!("{m:e}")).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}

/// Index of the first history element that contains `current`.
pub fn check_history<D: Domain>(domain: &D, current: &D::Elem, history: &VecDeque<D::Elem>) -> Option<usize> {
    history.iter().position(|h| domain.contains(h, current))
}

fn too_wide(width: f64, cfg: &EngineConfig) -> bool {
    !width.is_finite() || width > cfg.abort_width
}

/// Phase 1: iterate until contraction is detected.
///
/// Returns the contained element, which encloses all concrete fixpoints
/// when `g1` is sound for a convergent iteration, together with the number
/// of transformer applications and a width trace.
pub fn phase1_contract<D, T>(
    domain: &mut D,
    g1: &T,
    s0: D::Elem,
    cfg: &EngineConfig,
) -> Result<(D::Elem, usize, Trace), EngineError>
where
    D: Domain,
    T: AbstractTransformer<D::Elem> + ?Sized,
{
    let mut trace = Trace::default();
    let mut history: VecDeque<D::Elem> = VecDeque::with_capacity(cfg.history_len);
    let mut state = s0;
    let (mut w_mul, mut w_add) = (cfg.w_mul, cfg.w_add);
    for n in 0..cfg.n_max {
        if cfg.expansion == Expansion::Exp && n > 0 && n % 2 == 0 {
            w_mul *= 1.1;
            w_add *= 1.2;
        }
        if n % cfg.r == 0 {
            state = domain.consolidate(&state, w_mul, w_add)?;
            trace.push(n, 1, domain.mean_width(&state), None);
            if history.len() == cfg.history_len {
                history.pop_front();
            }
            history.push_back(state.clone());
        }
        state = g1.apply(&state)?;
        let width = domain.max_width(&state);
        trace.push(n + 1, 1, domain.mean_width(&state), None);
        if too_wide(width, cfg) {
            return Err(EngineError::Diverged { step: n + 1, width });
        }
        if check_history(domain, &state, &history).is_some() {
            return Ok((state, n + 1, trace));
        }
    }
    Err(EngineError::Exhausted { steps: cfg.n_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase2Status {
    Certified,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Phase2Result<E> {
    pub status: Phase2Status,
    /// Best margin seen, or the certifying one.
    pub margin: f64,
    pub steps: usize,
    /// Element at which `margin` was observed.
    pub best: E,
    pub trace: Trace,
}

/// Phase 2: tighten with a fixpoint-set-preserving transformer.
///
/// `check` maps an element to a margin; a positive margin certifies.
/// Stops with `Unknown` after `cfg.stall_window()` steps without a margin
/// improvement of at least 1e-9, or after `cfg.n_max` steps.
pub fn phase2_tighten<D, T, F>(
    domain: &D,
    g2: &T,
    s_star: D::Elem,
    mut check: F,
    cfg: &EngineConfig,
) -> Result<Phase2Result<D::Elem>, EngineError>
where
    D: Domain,
    T: AbstractTransformer<D::Elem> + ?Sized,
    F: FnMut(&D::Elem) -> f64,
{
    const MIN_IMPROVEMENT: f64 = 1e-9;
    let mut trace = Trace::default();
    let mut state = s_star.clone();
    let mut best = f64::NEG_INFINITY;
    let mut best_state = s_star;
    let mut since = 0;
    for n in 1..=cfg.n_max {
        state = g2.apply(&state)?;
        let width = domain.max_width(&state);
        if too_wide(width, cfg) {
            return Err(EngineError::Diverged { step: n, width });
        }
        let margin = check(&state);
        trace.push(n, 2, domain.mean_width(&state), Some(margin));
        if margin > 0.0 {
            return Ok(Phase2Result { status: Phase2Status::Certified, margin, steps: n, best: state, trace });
        }
        if margin > best + MIN_IMPROVEMENT || best == f64::NEG_INFINITY {
            best = margin;
            best_state = state.clone();
            since = 0;
        } else {
            since += 1;
            if since >= cfg.stall_window() {
                return Ok(Phase2Result { status: Phase2Status::Unknown, margin: best, steps: n, best: best_state, trace });
            }
        }
    }
    Ok(Phase2Result { status: Phase2Status::Unknown, margin: best, steps: cfg.n_max, best: best_state, trace })
}
