//! CH-Zonotopes: `γ = {Aν + diag(b)η + a | ν ∈ [-1,1]^k, η ∈ [-1,1]^p}`.
//!
//! A CH-Zonotope is *proper* when `A` is square and invertible; proper
//! elements support the cheap containment test in [`CHZonotope::contains`].
//! The inverse is cached at construction so repeated containment checks
//! against the same outer element only pay for the products.

use std::ops::Range;

use thiserror::Error;

use crate::numerics::{invert, LinalgError, Matrix};

/// Slack allowed on the containment inequality to absorb rounding in `A⁻¹A`.
pub const CONTAINS_TOL: f64 = 1e-10;

/// Lower floor for consolidation coefficients, keeps the result invertible.
pub const MIN_COEFF: f64 = 1e-12;

/// Coefficients are also kept within this ratio of the largest one.
pub const REL_COEFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChzError {
    #[error("relu slope {lambda} for dimension {dim} is outside [0, 1]")]
    InvalidSlope { dim: usize, lambda: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug)]
pub struct CHZonotope {
    center: Vec<f64>,
    gens: Matrix,
    radii: Vec<f64>,
    inverse: Option<Matrix>,
}

impl PartialEq for CHZonotope {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.gens == other.gens && self.radii == other.radii
    }
}

impl CHZonotope {
    /// Builds an improper element from raw parts.
    pub fn new(center: Vec<f64>, gens: Matrix, radii: Vec<f64>) -> Result<Self, ChzError> {
        let p = center.len();
        if gens.rows() != p || radii.len() != p {
            return Err(ChzError::DimensionMismatch(format!(
                "center has {p} entries, generators {} rows, box {} entries",
                gens.rows(),
                radii.len()
            )));
        }
        if radii.iter().any(|&r| r < 0.0 || r.is_nan()) {
            return Err(ChzError::DimensionMismatch("box radii must be non-negative".into()));
        }
        Ok(CHZonotope { center, gens, radii, inverse: None })
    }

    /// Like [`CHZonotope::new`], but marks the result proper when `A` is
    /// square and passes [`invert`].
    pub fn new_checked(center: Vec<f64>, gens: Matrix, radii: Vec<f64>) -> Result<Self, ChzError> {
        let mut z = CHZonotope::new(center, gens, radii)?;
        z.refresh_properness();
        Ok(z)
    }

    pub fn point(a: Vec<f64>) -> Self {
        let p = a.len();
        CHZonotope { center: a, gens: Matrix::zeros(p, 0), radii: vec![0.0; p], inverse: None }
    }

    pub fn from_box(center: Vec<f64>, radius: &[f64]) -> Self {
        assert_eq!(center.len(), radius.len(), "from_box length mismatch");
        assert!(radius.iter().all(|&r| r >= 0.0), "from_box radius must be non-negative");
        let p = center.len();
        let mut z = CHZonotope {
            center,
            gens: Matrix::from_diag(radius),
            radii: vec![0.0; p],
            inverse: None,
        };
        z.refresh_properness();
        z
    }

    /// Axis-aligned box held entirely in the box component (`A` has no columns).
    pub fn box_only(center: Vec<f64>, radius: Vec<f64>) -> Self {
        let p = center.len();
        CHZonotope { center, gens: Matrix::zeros(p, 0), radii: radius, inverse: None }
    }

    fn refresh_properness(&mut self) {
        self.inverse = if self.gens.is_square() && self.gens.rows() > 0 {
            invert(&self.gens).ok()
        } else {
            None
        };
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_gens(&self) -> usize {
        self.gens.cols()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn gens(&self) -> &Matrix {
        &self.gens
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn is_proper(&self) -> bool {
        self.inverse.is_some()
    }

    /// Per-dimension total radius `|A|·1 + b`.
    pub fn radius(&self) -> Vec<f64> {
        self.gens.abs_row_sums().iter().zip(&self.radii).map(|(g, b)| g + b).collect()
    }

    pub fn interval_hull(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.radius();
        let lo = self.center.iter().zip(&r).map(|(a, r)| a - r).collect();
        let hi = self.center.iter().zip(&r).map(|(a, r)| a + r).collect();
        (lo, hi)
    }

    pub fn mean_width(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        2.0 * self.radius().iter().sum::<f64>() / self.dim() as f64
    }

    pub fn max_width(&self) -> f64 {
        2.0 * self.radius().into_iter().fold(0.0, f64::max)
    }

    /// `[A, diag(b)]` with the all-zero box columns dropped.
    pub fn generator_block(&self) -> Matrix {
        let p = self.dim();
        let nz: Vec<usize> = (0..p).filter(|&i| self.radii[i] > 0.0).collect();
        if nz.is_empty() {
            return self.gens.clone();
        }
        let boxes = Matrix::from_fn(p, nz.len(), |i, j| if i == nz[j] { self.radii[i] } else { 0.0 });
        self.gens.hcat(&boxes)
    }

    /// Exact affine image `w·z + c`; the box is recast as generators first.
    pub fn affine(&self, w: &Matrix, c: &[f64]) -> CHZonotope {
        assert_eq!(w.cols(), self.dim(), "affine: w has wrong column count");
        assert_eq!(w.rows(), c.len(), "affine: offset length mismatch");
        let mut center = w.matvec(&self.center);
        center.iter_mut().zip(c).for_each(|(a, c)| *a += c);
        let gens = w.matmul(&self.generator_block());
        let q = w.rows();
        CHZonotope { center, gens, radii: vec![0.0; q], inverse: None }
    }

    /// Affine image of the pair `(self, x)` under `w_s·s + w_x·x + c` where
    /// the last `shared` generator columns of `self` are x's own generator
    /// block (see [`CHZonotope::generator_block`]) and therefore refer to the
    /// same error symbols. `shared` is either 0 or the width of that block.
    ///
    /// The output carries x's block as its trailing columns, so it can be
    /// fed back with `shared = x.generator_block().cols()`.
    pub fn affine_with_input(
        &self,
        w_s: &Matrix,
        x: &CHZonotope,
        w_x: &Matrix,
        c: &[f64],
        shared: usize,
    ) -> CHZonotope {
        let gx = x.generator_block();
        assert!(shared == 0 || shared == gx.cols(), "affine_with_input: shared columns do not match input");
        assert!(shared <= self.num_gens(), "affine_with_input: more shared columns than generators");
        assert_eq!(w_s.cols(), self.dim());
        assert_eq!(w_x.cols(), x.dim());
        assert_eq!(w_s.rows(), w_x.rows());

        let own = self.num_gens() - shared;
        let mut center = w_s.matvec(&self.center);
        let cx = w_x.matvec(&x.center);
        for ((a, b), c) in center.iter_mut().zip(cx).zip(c) {
            *a += b + c;
        }

        let mut own_block = self.gens.select_cols(0..own);
        let p = self.dim();
        let nz: Vec<usize> = (0..p).filter(|&i| self.radii[i] > 0.0).collect();
        if !nz.is_empty() {
            let boxes = Matrix::from_fn(p, nz.len(), |i, j| if i == nz[j] { self.radii[i] } else { 0.0 });
            own_block = own_block.hcat(&boxes);
        }
        let mut input_part = w_x.matmul(&gx);
        if shared > 0 {
            let carried = w_s.matmul(&self.gens.select_cols(own..own + shared));
            input_part = input_part.add(&carried);
        }
        let gens = w_s.matmul(&own_block).hcat(&input_part);
        let q = w_s.rows();
        CHZonotope { center, gens, radii: vec![0.0; q], inverse: None }
    }

    pub fn relu(&self, slopes: Option<&[f64]>) -> Result<CHZonotope, ChzError> {
        self.relu_dims(0..self.dim(), slopes)
    }

    /// ReLU applied to the dimensions in `dims` only; other rows pass through.
    /// `slopes`, when given, is indexed relative to `dims.start`.
    pub fn relu_dims(&self, dims: Range<usize>, slopes: Option<&[f64]>) -> Result<CHZonotope, ChzError> {
        if let Some(s) = slopes {
            if s.len() != dims.len() {
                return Err(ChzError::DimensionMismatch(format!(
                    "{} slopes for {} relu dimensions",
                    s.len(),
                    dims.len()
                )));
            }
        }
        let (lo, hi) = self.interval_hull();
        let mut out = self.clone();
        let mut zeroed = false;
        let mut rescaled = false;
        for i in dims.clone() {
            let (l, u) = (lo[i], hi[i]);
            if l >= 0.0 {
                continue;
            }
            if u <= 0.0 {
                out.gens.row_mut(i).iter_mut().for_each(|v| *v = 0.0);
                out.radii[i] = 0.0;
                out.center[i] = 0.0;
                zeroed = true;
                continue;
            }
            let crossing = u / (u - l);
            let lambda = match slopes {
                Some(s) => {
                    let lam = s[i - dims.start];
                    if !(0.0..=1.0).contains(&lam) {
                        return Err(ChzError::InvalidSlope { dim: i, lambda: lam });
                    }
                    lam
                }
                None => crossing,
            };
            let mu = if lambda <= crossing { (1.0 - lambda) * u / 2.0 } else { -lambda * l / 2.0 };
            out.gens.row_mut(i).iter_mut().for_each(|v| *v *= lambda);
            out.radii[i] = lambda * out.radii[i] + mu;
            out.center[i] = lambda * out.center[i] + mu;
            rescaled = true;
        }
        if zeroed {
            out.inverse = None;
        } else if rescaled && out.inverse.is_some() {
            out.refresh_properness();
        }
        Ok(out)
    }

    /// Order reduction onto `basis`: every generator is re-expressed in the
    /// basis and bounded coordinate-wise, giving `A' = basis·diag(c)` with
    /// `c = (1 + w_mul)|basis⁻¹A|·1 + w_add`. Box and center are kept.
    pub fn consolidate(&self, basis: &Matrix, w_mul: f64, w_add: f64) -> Result<CHZonotope, ChzError> {
        let inv = invert(basis)?;
        self.consolidate_with_inverse(basis, &inv, w_mul, w_add)
    }

    /// [`CHZonotope::consolidate`] with a precomputed `basis⁻¹`.
    pub fn consolidate_with_inverse(
        &self,
        basis: &Matrix,
        basis_inv: &Matrix,
        w_mul: f64,
        w_add: f64,
    ) -> Result<CHZonotope, ChzError> {
        let p = self.dim();
        if basis.rows() != p || !basis.is_square() {
            return Err(ChzError::DimensionMismatch(format!("basis must be {p}x{p}")));
        }
        let coeffs = basis_inv.matmul(&self.gens).abs_row_sums();
        let raw: Vec<f64> = coeffs.iter().map(|s| (1.0 + w_mul) * s + w_add).collect();
        let floor = raw.iter().fold(MIN_COEFF, |m, &v| m.max(v * REL_COEFF_FLOOR));
        let c: Vec<f64> = raw.iter().map(|v| v.max(floor)).collect();
        let gens = Matrix::from_fn(p, p, |i, j| basis[(i, j)] * c[j]);
        let inv_c: Vec<f64> = c.iter().map(|v| 1.0 / v).collect();
        let cand_inv = Matrix::from_fn(p, p, |i, j| inv_c[i] * basis_inv[(i, j)]);
        let cond = gens.norm1() * cand_inv.norm1();
        if !cond.is_finite() || cond > crate::numerics::MAX_CONDITION {
            return Err(ChzError::Linalg(LinalgError::SingularMatrix { cond }));
        }
        Ok(CHZonotope { center: self.center.clone(), gens, radii: self.radii.clone(), inverse: Some(cand_inv) })
    }

    /// Sufficient test for `γ(inner) ⊆ γ(self)`; `self` must be proper,
    /// otherwise the answer is `false`.
    pub fn contains(&self, inner: &CHZonotope) -> bool {
        let Some(inv) = &self.inverse else {
            return false;
        };
        if inner.dim() != self.dim() {
            return false;
        }
        let p = self.dim();
        let mut lhs = if inner.num_gens() > 0 {
            inv.matmul(&inner.gens).abs_row_sums()
        } else {
            vec![0.0; p]
        };
        let d: Vec<f64> = (0..p)
            .map(|i| ((inner.center[i] - self.center[i]).abs() + inner.radii[i] - self.radii[i]).max(0.0))
            .collect();
        for (i, l) in lhs.iter_mut().enumerate() {
            *l += inv.row(i).iter().zip(&d).map(|(m, d)| (m * d).abs()).sum::<f64>();
        }
        lhs.iter().all(|&v| v <= 1.0 + CONTAINS_TOL)
    }

    /// Exact range of `d·x` over `γ(self)`.
    pub fn linear_bounds(&self, d: &[f64]) -> (f64, f64) {
        assert_eq!(d.len(), self.dim(), "linear_bounds length mismatch");
        let mid = crate::numerics::dot(d, &self.center);
        let proj = self.gens.tr_matvec(d);
        let r: f64 = proj.iter().map(|v| v.abs()).sum::<f64>()
            + d.iter().zip(&self.radii).map(|(d, b)| d.abs() * b).sum::<f64>();
        (mid - r, mid + r)
    }

    /// Projection onto the dimensions in `dims` (a sound marginal).
    pub fn marginal(&self, dims: Range<usize>) -> CHZonotope {
        CHZonotope {
            center: self.center[dims.clone()].to_vec(),
            gens: self.gens.select_rows(dims.clone()),
            radii: self.radii[dims].to_vec(),
            inverse: None,
        }
    }

    /// Interval hull held as a pure box (`A` with no columns).
    pub fn to_box(&self) -> CHZonotope {
        let r = self.radius();
        CHZonotope::box_only(self.center.clone(), r)
    }

    /// Point `Aν + diag(b)η + a` for given symbol values.
    pub fn eval(&self, nu: &[f64], eta: &[f64]) -> Vec<f64> {
        let g = self.gens.matvec(nu);
        (0..self.dim()).map(|i| self.center[i] + g[i] + self.radii[i] * eta[i]).collect()
    }

    /// Drops all-zero generator columns.
    pub fn prune_zero_gens(&self) -> CHZonotope {
        let keep: Vec<usize> = (0..self.num_gens())
            .filter(|&j| (0..self.dim()).any(|i| self.gens[(i, j)] != 0.0))
            .collect();
        if keep.len() == self.num_gens() {
            return self.clone();
        }
        let gens = Matrix::from_fn(self.dim(), keep.len(), |i, j| self.gens[(i, keep[j])]);
        CHZonotope { center: self.center.clone(), gens, radii: self.radii.clone(), inverse: None }
    }

    /// Stacks `self` on top of `other` with block-diagonal generators.
    pub fn stack_independent(&self, other: &CHZonotope) -> CHZonotope {
        let (p1, p2) = (self.dim(), other.dim());
        let (k1, k2) = (self.num_gens(), other.num_gens());
        let gens = Matrix::from_fn(p1 + p2, k1 + k2, |i, j| match (i < p1, j < k1) {
            (true, true) => self.gens[(i, j)],
            (false, false) => other.gens[(i - p1, j - k1)],
            _ => 0.0,
        });
        let mut center = self.center.clone();
        center.extend_from_slice(&other.center);
        let mut radii = self.radii.clone();
        radii.extend_from_slice(&other.radii);
        CHZonotope { center, gens, radii, inverse: None }
    }

    pub fn is_finite(&self) -> bool {
        self.center.iter().chain(&self.radii).all(|v| v.is_finite()) && self.gens.is_finite()
    }
}
