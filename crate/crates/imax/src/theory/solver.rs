//! Box-constrained maximization of the concave imitation objective in Q.
//!
//! With exact occupancy weights the objective separates over `(s, a)` rows:
//!
//! `J(Q) = sum_(s,a) [ <rho_E(s,a,.), q> - m(s,a) lse(q) ]`,
//!
//! `m(s,a) = d_E(s) pi^a(a|s)`. Each row is a smooth concave problem whose
//! KKT point has the closed form `q_i = clamp(ln(r_i / m) + mu, lo, hi)`
//! with `mu = ln Z` fixed by a monotone scalar equation, so one bisection
//! solves a row to machine precision. The box keeps the maximum attained:
//! with zeros in the dynamics the unconstrained supremum pushes entries to
//! minus infinity.

use crate::dense::{log_sum_exp, softmax, Tensor3};
use crate::imitation::{AllyPolicy, QTable};

/// Aggregate solve diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SolveInfo {
    pub value: f64,
    /// Sup norm of the projected gradient across all rows; the solve meets
    /// the gradient tolerance when this is small.
    pub worst_projected_grad: f64,
}

fn row_value(r: &[f64], m: f64, q: &[f64]) -> f64 {
    let dot: f64 = r.iter().zip(q.iter()).map(|(&a, &b)| a * b).sum();
    dot - m * log_sum_exp(q)
}

fn projected_grad_norm(q: &[f64], g: &[f64], lo: f64, hi: f64) -> f64 {
    q.iter()
        .zip(g.iter())
        .map(|(&qi, &gi)| {
            if qi <= lo {
                gi.max(0.0)
            } else if qi >= hi {
                (-gi).max(0.0)
            } else {
                gi.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Exact KKT solve of `max <r,q> - m lse(q)` over the box.
fn solve_row(r: &[f64], m: f64, lo: f64, hi: f64, q: &mut [f64]) -> (f64, f64) {
    if m <= 0.0 {
        for v in q.iter_mut() {
            *v = hi;
        }
        return (row_value(r, 0.0, q), 0.0);
    }
    let ln_rm: Vec<f64> =
        r.iter().map(|&ri| if ri > 0.0 { (ri / m).ln() } else { f64::NEG_INFINITY }).collect();
    let fill = |mu: f64, q: &mut [f64]| {
        for (qi, &l) in q.iter_mut().zip(ln_rm.iter()) {
            *qi = (l + mu).clamp(lo, hi);
        }
    };
    // g(mu) = lse(q(mu)) - mu is monotone non-increasing with a unique root.
    let max_finite = ln_rm.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let span = lo.abs() + hi.abs() + max_finite.abs() + 16.0;
    let (mut a, mut b) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        fill(mid, q);
        if log_sum_exp(q) - mid > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    fill(0.5 * (a + b), q);
    let p = softmax(q);
    let g: Vec<f64> = r.iter().zip(p.iter()).map(|(&ri, &pi)| ri - m * pi).collect();
    (row_value(r, m, q), projected_grad_norm(q, &g, lo, hi))
}

/// Maximizes `J` over Q-tables with entries in `[lo, hi]`.
pub fn max_q_objective(
    rho_e: &Tensor3,
    ally: &AllyPolicy,
    gamma: f64,
    p0: &[f64],
    lo: f64,
    hi: f64,
) -> (QTable, SolveInfo) {
    let (n, n_actions, _) = rho_e.dims();
    // d_E(s) = gamma * next-marginal + (1-gamma) * p0.
    let mut d = vec![0.0; n];
    for s in 0..n {
        for a in 0..n_actions {
            let row = rho_e.row(s, a);
            for (sp, dv) in d.iter_mut().enumerate() {
                *dv += gamma * row[sp];
            }
        }
    }
    for (dv, &p) in d.iter_mut().zip(p0.iter()) {
        *dv += (1.0 - gamma) * p;
    }

    let mut q = QTable::zeros(n, n_actions, gamma);
    let mut total = 0.0;
    let mut worst_pg = 0.0f64;
    for s in 0..n {
        for a in 0..n_actions {
            let m = d[s] * ally.probs.at(s, a);
            let (value, pg) = solve_row(rho_e.row(s, a), m, lo, hi, q.values.row_mut(s, a));
            total += value;
            worst_pg = worst_pg.max(pg);
        }
    }
    (q, SolveInfo { value: total, worst_projected_grad: worst_pg })
}
