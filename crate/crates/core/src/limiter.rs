//! Scaling limiter around positive cell averages.
//!
//! `ñ_h = θ (n_h - n̄_j) + n̄_j` with `θ = min{1, n̄_j / (n̄_j - min n_h)}`, the
//! minimum taken over the cell (full mode) or over its Gauss nodes
//! (gauss-only mode). In the Legendre basis this scales coefficients `i >= 1`
//! by `θ` and leaves the average bit-for-bit unchanged.

use serde::{Deserialize, Serialize};

use crate::basis::{eval_legendre_series, legendre_derivative, DgState};
use crate::mesh::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimiterMode {
    /// Minimum over the whole cell.
    Full,
    /// Minimum over the scheme's Gauss nodes.
    #[default]
    GaussOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimiterReport {
    pub thetas: Vec<f64>,
    /// Cells with `θ < 1`.
    pub touched: usize,
    pub mode: LimiterMode,
    /// Cells left alone because their average is negative.
    pub skipped: Vec<usize>,
}

impl LimiterReport {
    pub fn min_theta(&self) -> f64 {
        self.thetas.iter().copied().fold(1.0, f64::min)
    }
}

pub fn limit_state(state: &DgState, rule: &QuadratureRule, mode: LimiterMode) -> (DgState, LimiterReport) {
    let mut out = state.clone();
    let report = limit_in_place(&mut out, rule, mode);
    (out, report)
}

pub fn limit_in_place(state: &mut DgState, rule: &QuadratureRule, mode: LimiterMode) -> LimiterReport {
    let n = state.num_cells();
    let mut thetas = vec![1.0; n];
    let mut skipped = Vec::new();
    for (j, theta_out) in thetas.iter_mut().enumerate() {
        let cell = state.cell_mut(j);
        let avg = cell[0];
        if cell.len() == 1 {
            if avg < 0.0 {
                skipped.push(j);
            }
            continue;
        }
        let min = tested_minimum(cell, rule, mode);
        if min >= 0.0 {
            continue;
        }
        if avg < 0.0 {
            skipped.push(j);
            continue;
        }
        // avg == 0 with a negative value: the only nonnegative polynomial is zero.
        let mut theta = if avg > 0.0 { (avg / (avg - min)).min(1.0) } else { 0.0 };
        let original: Vec<f64> = cell[1..].to_vec();
        for _ in 0..4 {
            for (c, o) in cell[1..].iter_mut().zip(&original) {
                *c = theta * o;
            }
            if theta == 0.0 || tested_minimum(cell, rule, mode) >= 0.0 {
                break;
            }
            // Rounding left a tiny negative value.
            theta *= 1.0 - 4.0 * f64::EPSILON;
        }
        if tested_minimum(cell, rule, mode) < 0.0 {
            theta = 0.0;
            cell[1..].iter_mut().for_each(|c| *c = 0.0);
        }
        *theta_out = theta;
    }
    let touched = thetas.iter().filter(|&&t| t < 1.0).count();
    LimiterReport {
        thetas,
        touched,
        mode,
        skipped,
    }
}

/// Minimum of the cell polynomial on the tested set.
pub fn tested_minimum(cell: &[f64], rule: &QuadratureRule, mode: LimiterMode) -> f64 {
    match mode {
        LimiterMode::GaussOnly => rule
            .nodes()
            .iter()
            .map(|&s| eval_legendre_series(cell, s))
            .fold(f64::INFINITY, f64::min),
        LimiterMode::Full => polynomial_minimum(cell),
    }
}

/// Minimum of `Σ c_i φ_i` on `[-1, 1]`.
///
/// Closed form up to degree 2; above that, 64 Chebyshev samples plus a
/// Newton refinement of the derivative root near the smallest sample.
pub fn polynomial_minimum(cell: &[f64]) -> f64 {
    let ends = eval_legendre_series(cell, -1.0).min(eval_legendre_series(cell, 1.0));
    match cell.len() {
        1 => cell[0],
        2 => ends,
        3 => {
            // p'(ξ) = c1 + 3 c2 ξ
            let (c1, c2) = (cell[1], cell[2]);
            if c2 > 0.0 {
                let xi = -c1 / (3.0 * c2);
                if xi.abs() < 1.0 {
                    return ends.min(eval_legendre_series(cell, xi));
                }
            }
            ends
        }
        _ => {
            const SAMPLES: usize = 64;
            let mut best = (ends, 1.0);
            if eval_legendre_series(cell, -1.0) < eval_legendre_series(cell, 1.0) {
                best.1 = -1.0;
            }
            for m in 0..SAMPLES {
                let xi = (std::f64::consts::PI * (m as f64 + 0.5) / SAMPLES as f64).cos();
                let v = eval_legendre_series(cell, xi);
                if v < best.0 {
                    best = (v, xi);
                }
            }
            // Newton on p'(ξ) = 0 from the best sample.
            let derivative = |xi: f64, order: usize| -> f64 {
                cell.iter()
                    .enumerate()
                    .map(|(i, c)| c * nth_derivative(i, xi, order))
                    .sum()
            };
            let mut xi = best.1;
            for _ in 0..8 {
                let d2 = derivative(xi, 2);
                if d2 <= 0.0 {
                    break;
                }
                let step = derivative(xi, 1) / d2;
                let next = (xi - step).clamp(-1.0, 1.0);
                if (next - xi).abs() < 1e-15 {
                    break;
                }
                xi = next;
            }
            best.0.min(eval_legendre_series(cell, xi))
        }
    }
}

fn nth_derivative(i: usize, xi: f64, order: usize) -> f64 {
    match order {
        1 => legendre_derivative(i, xi),
        _ => {
            let h = 1e-5;
            (legendre_derivative(i, xi + h) - legendre_derivative(i, xi - h)) / (2.0 * h)
        }
    }
}
