//! Exact membership test for CH-Zonotopes, used as an independent oracle
//! in tests.
//!
//! `x ∈ γ(z)` iff the box-constrained system `[A, diag(b)]·y = x − a`,
//! `-1 ≤ y ≤ 1` is feasible. After shifting `y` to `[0, 2]` this is solved
//! with a phase-1 bounded-variable simplex (artificial per row, nonbasic
//! variables sit at either bound).

use crate::chzono::CHZonotope;
use crate::numerics::Matrix;

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

/// Membership of `x` in `γ(z)` up to a feasibility tolerance of 1e-9.
pub fn member(z: &CHZonotope, x: &[f64]) -> bool {
    assert_eq!(x.len(), z.dim(), "member: point has wrong dimension");
    let g = z.generator_block();
    let shifted: Vec<f64> = (0..z.dim())
        .map(|i| x[i] - z.center()[i] + g.row(i).iter().sum::<f64>())
        .collect();
    let upper = vec![2.0; g.cols()];
    box_feasible(&g, &shifted, &upper)
}

/// Is there `y` with `g·y = rhs` and `0 ≤ y ≤ upper`?
pub fn box_feasible(g: &Matrix, rhs: &[f64], upper: &[f64]) -> bool {
    let m = g.rows();
    let n = g.cols();
    if m == 0 {
        return true;
    }
    let scale = rhs.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let total = n + m;
    // Row-normalized so every artificial starts non-negative.
    let mut tab = vec![0.0; m * total];
    let mut xb = vec![0.0; m];
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[i * total + j] = sign * g[(i, j)];
        }
        tab[i * total + n + i] = 1.0;
        xb[i] = sign * rhs[i];
    }
    let mut ub = upper.to_vec();
    ub.extend(std::iter::repeat(f64::INFINITY).take(m));
    let cost: Vec<f64> = (0..total).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let mut basis: Vec<usize> = (n..total).collect();
    let mut in_basis = vec![false; total];
    basis.iter().for_each(|&b| in_basis[b] = true);
    let mut at_upper = vec![false; total];

    let max_iter = 50 * (total + m) + 1000;
    for iter in 0..max_iter {
        let bland = iter > 10 * (total + m);
        // Reduced costs d_j = c_j − c_Bᵀ·T_j.
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..total {
            if in_basis[j] {
                continue;
            }
            let mut d = cost[j];
            for (i, &b) in basis.iter().enumerate() {
                d -= cost[b] * tab[i * total + j];
            }
            let gain = if at_upper[j] { d } else { -d };
            if gain > PIVOT_TOL && (ub[j] > 0.0) {
                let better = match enter {
                    None => true,
                    Some((_, g)) => !bland && gain > g,
                };
                if better {
                    enter = Some((j, gain));
                }
                if bland {
                    break;
                }
            }
        }
        let Some((j, _)) = enter else {
            break;
        };
        // Moving x_j by θ ≥ 0 in direction dir changes x_B by −dir·θ·T_j.
        let dir = if at_upper[j] { -1.0 } else { 1.0 };
        let mut theta = ub[j];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..m {
            let t = dir * tab[i * total + j];
            if t > PIVOT_TOL {
                let lim = xb[i] / t;
                if lim < theta {
                    theta = lim.max(0.0);
                    leave = Some((i, false));
                }
            } else if t < -PIVOT_TOL && ub[basis[i]].is_finite() {
                let lim = (ub[basis[i]] - xb[i]) / (-t);
                if lim < theta {
                    theta = lim.max(0.0);
                    leave = Some((i, true));
                }
            }
        }
        if !theta.is_finite() {
            // Unbounded direction cannot occur in phase 1 (objective ≥ 0).
            break;
        }
        for i in 0..m {
            xb[i] -= dir * theta * tab[i * total + j];
        }
        match leave {
            None => {
                at_upper[j] = !at_upper[j];
            }
            Some((r, to_upper)) => {
                let old = basis[r];
                let entering_value = if at_upper[j] { ub[j] - theta } else { theta };
                let piv = tab[r * total + j];
                for c in 0..total {
                    tab[r * total + c] /= piv;
                }
                for i in 0..m {
                    if i == r {
                        continue;
                    }
                    let f = tab[i * total + j];
                    if f != 0.0 {
                        for c in 0..total {
                            tab[i * total + c] -= f * tab[r * total + c];
                        }
                    }
                }
                in_basis[old] = false;
                at_upper[old] = to_upper;
                in_basis[j] = true;
                at_upper[j] = false;
                basis[r] = j;
                xb[r] = entering_value;
            }
        }
    }
    let infeas: f64 = basis
        .iter()
        .zip(&xb)
        .filter(|(&b, _)| b >= n)
        .map(|(_, &v)| v.max(0.0))
        .sum::<f64>();
    infeas <= FEAS_TOL * scale
}
