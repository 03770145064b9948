//! Monotone operator equilibrium models and their solvers.
//!
//! The hidden state is the fixpoint `z* = ReLU(W z* + U x + b)` with
//! `W = (1 − m)I − PᵀP + Q − Qᵀ`, which makes `I − W` strongly monotone
//! (`I − W ⪰ mI`) and the fixpoint unique. The output is `y = V z* + v`.
//!
//! Two splitting solvers are provided, forward-backward (FB) with state `z`
//! and Peaceman-Rachford (PR) with state `[z; u]`. Both are written as one
//! affine map of `(state, x)` followed by a ReLU on the first `p` rows, which
//! is what the abstract transformers lift to CH-Zonotopes and boxes.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chzono::{CHZonotope, ChzError};
use crate::engine::{AbstractTransformer, EngineError, IterationState};
use crate::numerics::{invert, min_sym_eig, spectral_norm, LinalgError, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonDeqError {
    #[error("shape mismatch for {field}: expected {expected}, got {got}")]
    ShapeMismatch { field: String, expected: String, got: String },
    #[error("monotonicity parameter m must be positive and finite, got {0}")]
    InvalidMonotonicity(f64),
    #[error("I − W has minimum eigenvalue {min_eig} below m = {m}")]
    NotMonotone { min_eig: f64, m: f64 },
    #[error("step size {0} must be positive and finite")]
    InvalidAlpha(f64),
    #[error("solver did not converge in {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Raw model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MonDeqParams {
    pub p_mat: Matrix,
    pub q_mat: Matrix,
    pub u: Matrix,
    pub bias: Vec<f64>,
    pub v: Matrix,
    pub v_bias: Vec<f64>,
    pub m: f64,
}

fn shape_err(field: &str, expected: String, got: String) -> MonDeqError {
    MonDeqError::ShapeMismatch { field: field.into(), expected, got }
}

impl MonDeqParams {
    /// Hidden width `p`.
    pub fn p(&self) -> usize {
        self.p_mat.rows()
    }

    /// Input width `q`.
    pub fn q(&self) -> usize {
        self.u.cols()
    }

    /// Number of classes `r`.
    pub fn r(&self) -> usize {
        self.v.rows()
    }

    pub fn validate(&self) -> Result<(), MonDeqError> {
        let p = self.p();
        let q = self.q();
        let r = self.r();
        let check = |field: &str, m: &Matrix, rows: usize, cols: usize| {
            if m.rows() != rows || m.cols() != cols {
                Err(shape_err(field, format!("{rows}x{cols}"), format!("{}x{}", m.rows(), m.cols())))
            } else {
                Ok(())
            }
        };
        check("P", &self.p_mat, p, p)?;
        check("Q", &self.q_mat, p, p)?;
        check("U", &self.u, p, q)?;
        check("V", &self.v, r, p)?;
        if self.bias.len() != p {
            return Err(shape_err("bias", p.to_string(), self.bias.len().to_string()));
        }
        if self.v_bias.len() != r {
            return Err(shape_err("v", r.to_string(), self.v_bias.len().to_string()));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(MonDeqError::InvalidMonotonicity(self.m));
        }
        Ok(())
    }

    /// `W = (1 − m)I − PᵀP + Q − Qᵀ`.
    pub fn weight(&self) -> Matrix {
        let p = self.p();
        let ptp = self.p_mat.transpose().matmul(&self.p_mat);
        let skew = self.q_mat.sub(&self.q_mat.transpose());
        Matrix::identity(p).scale(1.0 - self.m).sub(&ptp).add(&skew)
    }
}

/// A validated model with its derived weight matrix.
#[derive(Debug, Clone)]
pub struct MonDeq {
    params: MonDeqParams,
    w: Matrix,
    i_minus_w: Matrix,
}

impl MonDeq {
    /// Validates shapes and checks `λ_min(sym(I − W)) ≥ m` numerically.
    pub fn new(params: MonDeqParams) -> Result<Self, MonDeqError> {
        params.validate()?;
        let w = params.weight();
        let i_minus_w = Matrix::identity(params.p()).sub(&w);
        // Only the symmetric part matters for monotonicity; the skew part cancels.
        let sym = i_minus_w.add(&i_minus_w.transpose()).scale(0.5);
        let min_eig = min_sym_eig(&sym)?;
        if min_eig < params.m - 1e-6 * (1.0 + params.m) {
            return Err(MonDeqError::NotMonotone { min_eig, m: params.m });
        }
        Ok(MonDeq { params, w, i_minus_w })
    }

    pub fn params(&self) -> &MonDeqParams {
        &self.params
    }

    pub fn p(&self) -> usize {
        self.params.p()
    }

    pub fn q(&self) -> usize {
        self.params.q()
    }

    pub fn r(&self) -> usize {
        self.params.r()
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn i_minus_w(&self) -> &Matrix {
        &self.i_minus_w
    }

    /// Conservative FB step bound `2m / ‖I − W‖_F²`.
    ///
    /// The Frobenius norm dominates the spectral norm, so every step size
    /// below this bound also satisfies the spectral condition.
    pub fn fb_alpha_max(&self) -> f64 {
        let f = self.i_minus_w.frobenius_norm();
        2.0 * self.params.m / (f * f)
    }

    /// FB step bound `2m / ‖I − W‖₂²` with the spectral norm.
    pub fn fb_alpha_max_spectral(&self) -> Result<f64, MonDeqError> {
        let s = spectral_norm(&self.i_minus_w)?;
        Ok(2.0 * self.params.m / (s * s))
    }

    /// Logits `V z + v`.
    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        let mut y = self.params.v.matvec(z);
        y.iter_mut().zip(&self.params.v_bias).for_each(|(a, b)| *a += b);
        y
    }

    pub fn solver(&self, cfg: &SolverConfig) -> Result<Solver<'_>, MonDeqError> {
        Solver::new(self, cfg)
    }

    /// Concrete fixpoint for `x`.
    pub fn fixpoint(&self, x: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>, MonDeqError> {
        self.solver(cfg)?.solve(x)
    }

    /// Number of classes; a single logit is read as a binary classifier.
    pub fn num_classes(&self) -> usize {
        self.r().max(2)
    }

    /// Class of a logit vector: `argmax` (lowest index on ties), or `y > 0`
    /// for a single logit.
    pub fn classify(&self, y: &[f64]) -> usize {
        if y.len() == 1 {
            usize::from(y[0] > 0.0)
        } else {
            argmax(y)
        }
    }

    /// Class of `x` at its concrete fixpoint.
    pub fn predict(&self, x: &[f64], cfg: &SolverConfig) -> Result<usize, MonDeqError> {
        let z = self.fixpoint(x, cfg)?;
        Ok(self.classify(&self.logits(&z)))
    }

    /// Affine functionals `(d, c)` of `z` whose lower bounds must all be
    /// positive for `target` to win: `y_t − y_i` for every `i ≠ t`, or
    /// `±y` for a single logit.
    pub fn margin_functionals(&self, target: usize) -> Vec<(Vec<f64>, f64)> {
        let v = &self.params.v;
        let vb = &self.params.v_bias;
        if self.r() == 1 {
            let sign = if target == 1 { 1.0 } else { -1.0 };
            return vec![(v.row(0).iter().map(|a| sign * a).collect(), sign * vb[0])];
        }
        (0..self.r())
            .filter(|&i| i != target)
            .map(|i| {
                let d = v.row(target).iter().zip(v.row(i)).map(|(a, b)| a - b).collect();
                (d, vb[target] - vb[i])
            })
            .collect()
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fb,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub alpha: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn fb(alpha: f64) -> Self {
        SolverConfig { method: Method::Fb, alpha, tol: 1e-10, max_steps: 100_000 }
    }

    pub fn pr(alpha: f64) -> Self {
        SolverConfig { method: Method::Pr, alpha, tol: 1e-10, max_steps: 100_000 }
    }
}

/// ReLU slope selection for one abstract step.
#[derive(Debug, Clone, PartialEq)]
pub enum Slopes {
    /// `λ = u / (u − l)` on crossing neurons.
    Default,
    /// Shared offset `τ ∈ [−1, 1]` from the default, see [`tau_slope`].
    Tau(f64),
    /// One slope per ReLU row.
    Explicit(Vec<f64>),
}

/// `λ_def + τ(1 − λ_def)` for `τ ≥ 0`, `λ_def(1 + τ)` otherwise.
pub fn tau_slope(default: f64, tau: f64) -> f64 {
    let t = tau.clamp(-1.0, 1.0);
    if t >= 0.0 {
        default + t * (1.0 - default)
    } else {
        default * (1.0 + t)
    }
}

/// A splitting solver as `s' = ReLU_{0..p}(W_s s + W_x x + c)`.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    model: &'a MonDeq,
    cfg: SolverConfig,
    w_s: Matrix,
    w_x: Matrix,
    c: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a MonDeq, cfg: &SolverConfig) -> Result<Self, MonDeqError> {
        if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
            return Err(MonDeqError::InvalidAlpha(cfg.alpha));
        }
        let p = model.p();
        let a = cfg.alpha;
        let prm = &model.params;
        let (w_s, w_x, c) = match cfg.method {
            Method::Fb => {
                let w_s = Matrix::identity(p).scale(1.0 - a).add(&model.w.scale(a));
                let w_x = prm.u.scale(a);
                let c: Vec<f64> = prm.bias.iter().map(|b| a * b).collect();
                (w_s, w_x, c)
            }
            Method::Pr => {
                // u½ = 2z − u, z½ = M(u½ + α(Ux + b)), u' = 2z½ − u½, z' = ReLU(u')
                // with M = (I + α(I − W))⁻¹, so u' = (2M − I)u½ + 2αM(Ux + b).
                let m = invert(&Matrix::identity(p).add(&model.i_minus_w.scale(a)))?;
                let t = m.scale(2.0).sub(&Matrix::identity(p));
                let k = t.scale(2.0).hcat(&t.scale(-1.0));
                let l = m.matmul(&prm.u).scale(2.0 * a);
                let cm: Vec<f64> = m.matvec(&prm.bias).iter().map(|v| 2.0 * a * v).collect();
                let mut c2 = cm.clone();
                c2.extend_from_slice(&cm);
                (k.vcat(&k), l.vcat(&l), c2)
            }
        };
        Ok(Solver { model, cfg: *cfg, w_s, w_x, c })
    }

    pub fn model(&self) -> &MonDeq {
        self.model
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Width of the solver state (`p` for FB, `2p` for PR).
    pub fn state_dim(&self) -> usize {
        self.w_s.rows()
    }

    /// Rows the ReLU acts on.
    pub fn relu_rows(&self) -> Range<usize> {
        0..self.model.p()
    }

    /// Solver state for a hidden vector `z`: `z` for FB, `[z; z]` for PR.
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut s = z.to_vec();
        if self.cfg.method == Method::Pr {
            s.extend_from_slice(z);
        }
        s
    }

    pub fn step(&self, x: &[f64], s: &[f64]) -> Vec<f64> {
        let mut out = self.w_s.matvec(s);
        let ux = self.w_x.matvec(x);
        for ((o, u), c) in out.iter_mut().zip(ux).zip(&self.c) {
            *o += u + c;
        }
        for o in &mut out[self.relu_rows()] {
            *o = o.max(0.0);
        }
        out
    }

    /// Iterates from zero until successive states differ by at most `tol`
    /// in the max norm, returning the `z` part.
    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>, MonDeqError> {
        if x.len() != self.model.q() {
            return Err(shape_err("x", self.model.q().to_string(), x.len().to_string()));
        }
        let mut s = vec![0.0; self.state_dim()];
        let mut residual = f64::INFINITY;
        for _ in 0..self.cfg.max_steps {
            let next = self.step(x, &s);
            residual = next.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            s = next;
            if !residual.is_finite() {
                break;
            }
            if residual <= self.cfg.tol {
                s.truncate(self.model.p());
                return Ok(s);
            }
        }
        Err(MonDeqError::NonConvergence { steps: self.cfg.max_steps, residual })
    }

    fn slopes_for(&self, pre: &CHZonotope, slopes: &Slopes) -> Result<Option<Vec<f64>>, ChzError> {
        let rows = self.relu_rows();
        match slopes {
            Slopes::Default => Ok(None),
            Slopes::Explicit(v) => {
                if v.len() != rows.len() {
                    return Err(ChzError::DimensionMismatch(format!("{} slopes for {} rows", v.len(), rows.len())));
                }
                Ok(Some(v.clone()))
            }
            Slopes::Tau(t) => {
                let (lo, hi) = pre.interval_hull();
                Ok(Some(
                    rows.map(|i| {
                        let (l, u) = (lo[i], hi[i]);
                        if l < 0.0 && u > 0.0 {
                            tau_slope(u / (u - l), *t)
                        } else {
                            1.0
                        }
                    })
                    .collect(),
                ))
            }
        }
    }

    /// Sound CH-Zonotope image of one solver step, keeping the correlation
    /// with the input abstraction `x`.
    pub fn abstract_step(
        &self,
        x: &CHZonotope,
        st: &IterationState,
        slopes: &Slopes,
    ) -> Result<IterationState, ChzError> {
        self.abstract_step_traced(x, st, slopes).map(|(s, _)| s)
    }

    /// [`Solver::abstract_step`] that also returns the slopes it used
    /// (`None` for the defaults).
    pub fn abstract_step_traced(
        &self,
        x: &CHZonotope,
        st: &IterationState,
        slopes: &Slopes,
    ) -> Result<(IterationState, Option<Vec<f64>>), ChzError> {
        let pre = st.s.affine_with_input(&self.w_s, x, &self.w_x, &self.c, st.input_cols);
        let lam = self.slopes_for(&pre, slopes)?;
        let s = pre.relu_dims(self.relu_rows(), lam.as_deref())?;
        let next = IterationState {
            s,
            z_dims: st.z_dims,
            u_dims: st.u_dims,
            input_cols: x.generator_block().cols(),
            step: st.step + 1,
        };
        Ok((next, lam))
    }

    /// Interval image of one solver step; input and output are boxes.
    pub fn box_step(&self, x: &CHZonotope, st: &IterationState) -> IterationState {
        let (sc, sr) = (st.s.center(), st.s.radius());
        let (xc, xr) = (x.center(), x.radius());
        let mut c = self.w_s.matvec(sc);
        let xcc = self.w_x.matvec(xc);
        let rs = abs_matvec(&self.w_s, &sr);
        let rx = abs_matvec(&self.w_x, &xr);
        let mut r: Vec<f64> = rs.iter().zip(&rx).map(|(a, b)| a + b).collect();
        for ((ci, x), k) in c.iter_mut().zip(xcc).zip(&self.c) {
            *ci += x + k;
        }
        for i in self.relu_rows() {
            let lo = (c[i] - r[i]).max(0.0);
            let hi = (c[i] + r[i]).max(0.0);
            c[i] = 0.5 * (lo + hi);
            r[i] = 0.5 * (hi - lo);
        }
        IterationState {
            s: CHZonotope::box_only(c, r),
            z_dims: st.z_dims,
            u_dims: st.u_dims,
            input_cols: 0,
            step: st.step + 1,
        }
    }

    /// Initial abstract state: the point lift of `z`.
    pub fn point_state(&self, z: &[f64]) -> IterationState {
        let p = self.model.p();
        let u_dims = self.state_dim() - p;
        IterationState::new(CHZonotope::point(self.lift(z)), p, u_dims)
    }
}

fn abs_matvec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows()).map(|i| m.row(i).iter().zip(v).map(|(a, b)| a.abs() * b).sum()).collect()
}

/// Abstract solver step on CH-Zonotopes for a fixed input abstraction.
pub struct ChStep<'s, 'm> {
    pub solver: &'s Solver<'m>,
    pub x: &'s CHZonotope,
    pub slopes: Slopes,
}

impl AbstractTransformer<IterationState> for ChStep<'_, '_> {
    fn apply(&self, st: &IterationState) -> Result<IterationState, EngineError> {
        Ok(self.solver.abstract_step(self.x, st, &self.slopes)?)
    }

    fn name(&self) -> String {
        format!("{:?}(alpha={})", self.solver.cfg.method, self.solver.cfg.alpha)
    }
}

/// Interval solver step for a fixed input box.
pub struct BoxStep<'s, 'm> {
    pub solver: &'s Solver<'m>,
    pub x: &'s CHZonotope,
}

impl AbstractTransformer<IterationState> for BoxStep<'_, '_> {
    fn apply(&self, st: &IterationState) -> Result<IterationState, EngineError> {
        Ok(self.solver.box_step(self.x, st))
    }

    fn name(&self) -> String {
        format!("box-{:?}(alpha={})", self.solver.cfg.method, self.solver.cfg.alpha)
    }
}

/// Random monotone model: `P, Q, U, V ~ U[−1, 1]/√p`, `bias, v ~ U[−0.5, 0.5]`.
pub fn random_monotone_model(p: usize, q: usize, r: usize, m: f64, seed: u64) -> MonDeqParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (p.max(1) as f64).sqrt();
    let mat = |rows, cols, rng: &mut ChaCha8Rng| Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0) * s);
    let p_mat = mat(p, p, &mut rng);
    let q_mat = mat(p, p, &mut rng);
    let u = mat(p, q, &mut rng);
    let v = mat(r, p, &mut rng);
    let bias = (0..p).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    let v_bias = (0..r).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    MonDeqParams { p_mat, q_mat, u, bias, v, v_bias, m }
}
