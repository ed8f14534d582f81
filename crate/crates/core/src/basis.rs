//! Legendre basis on the reference cell and the piecewise-polynomial state.

use crate::mesh::{Mesh, QuadratureRule};
use crate::{Error, Result};

/// Gauss order used for L² projection of initial data.
pub const PROJECTION_ORDER: usize = 16;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 20;

/// `φ_i(ξ)`, the Legendre polynomial of degree `i`.
pub fn legendre_eval(i: usize, xi: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, xi);
    match i {
        0 => 1.0,
        1 => xi,
        _ => {
            for m in 1..i {
                let m = m as f64;
                let p2 = ((2.0 * m + 1.0) * xi * p1 - m * p0) / (m + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `φ_i'(ξ)` from `P'_{m+1} = P'_{m-1} + (2m + 1) P_m`.
pub fn legendre_derivative(i: usize, xi: f64) -> f64 {
    // values = [P_{m-1}, P_m], derivs = [P'_{m-1}, P'_m]
    let mut values = [1.0, xi];
    let mut derivs = [0.0, 1.0];
    match i {
        0 => 0.0,
        1 => 1.0,
        _ => {
            for m in 1..i {
                let mf = m as f64;
                let next_val = ((2.0 * mf + 1.0) * xi * values[1] - mf * values[0]) / (mf + 1.0);
                let next_der = derivs[0] + (2.0 * mf + 1.0) * values[1];
                values = [values[1], next_val];
                derivs = [derivs[1], next_der];
            }
            derivs[1]
        }
    }
}

/// `c_i = ∫_{-1}^{1} φ_i² dξ = 2 / (2i + 1)`.
#[inline]
pub fn normalization(i: usize) -> f64 {
    2.0 / (2.0 * i as f64 + 1.0)
}

/// `Σ_i coeffs[i] φ_i(ξ)`, a single pass of the recurrence.
#[inline]
pub fn eval_legendre_series(coeffs: &[f64], xi: f64) -> f64 {
    let mut acc = coeffs[0];
    if coeffs.len() == 1 {
        return acc;
    }
    let (mut p0, mut p1) = (1.0, xi);
    acc += coeffs[1] * xi;
    for (m, c) in coeffs.iter().enumerate().skip(2) {
        let mf = (m - 1) as f64;
        let p2 = ((2.0 * mf + 1.0) * xi * p1 - mf * p0) / (mf + 1.0);
        acc += c * p2;
        p0 = p1;
        p1 = p2;
    }
    acc
}

/// Per-cell Legendre coefficients of the mass density `n_h`, plus time.
#[derive(Debug, Clone, PartialEq)]
pub struct DgState {
    coeffs: Vec<f64>,
    cells: usize,
    degree: usize,
    pub time: f64,
}

impl DgState {
    pub fn zeros(cells: usize, degree: usize) -> Self {
        Self {
            coeffs: vec![0.0; cells * (degree + 1)],
            cells,
            degree,
            time: 0.0,
        }
    }

    /// State from row-major coefficients, `k + 1` per cell.
    pub fn from_coefficients(cells: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != cells * (degree + 1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                cells * (degree + 1),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(Self {
            coeffs,
            cells,
            degree,
            time: 0.0,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let w = self.degree + 1;
        &self.coeffs[j * w..(j + 1) * w]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [f64] {
        let w = self.degree + 1;
        &mut self.coeffs[j * w..(j + 1) * w]
    }

    /// `n̄_j`, the leading Legendre coefficient.
    #[inline]
    pub fn cell_average(&self, j: usize) -> f64 {
        self.coeffs[j * (self.degree + 1)]
    }

    pub fn averages(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs.iter().step_by(self.degree + 1).copied()
    }

    /// `n_h` in cell `j` at reference coordinate `ξ`.
    #[inline]
    pub fn eval_reference(&self, j: usize, xi: f64) -> f64 {
        eval_legendre_series(self.cell(j), xi)
    }

    /// `n_h` at a physical point known to lie in cell `j`.
    #[inline]
    pub fn eval_in_cell(&self, mesh: &Mesh, j: usize, x: f64) -> f64 {
        self.eval_reference(j, mesh.reference_coordinate(j, x))
    }

    /// `n_h(x)`; on an interface the left cell is used.
    pub fn eval(&self, mesh: &Mesh, x: f64) -> Result<f64> {
        self.check_mesh(mesh)?;
        let j = mesh.locate_cell(x)?;
        Ok(self.eval_in_cell(mesh, j, x))
    }

    /// Total mass `Σ_j h_j n̄_j`.
    pub fn mass(&self, mesh: &Mesh) -> f64 {
        self.averages().zip(mesh.widths()).map(|(a, h)| a * h).sum()
    }

    /// `(1/2) Σ_α ω_α n_h(x̂_j^α)`, equal to `n̄_j` when the rule integrates degree `k` exactly.
    pub fn quadrature_average(&self, rule: &QuadratureRule, j: usize) -> f64 {
        0.5 * rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(s, w)| w * self.eval_reference(j, *s))
            .sum::<f64>()
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if mesh.num_cells() != self.cells {
            return Err(Error::InvalidArgument(format!(
                "state has {} cells, mesh has {}",
                self.cells,
                mesh.num_cells()
            )));
        }
        Ok(())
    }

    /// `self + factor * other` coefficientwise; time untouched.
    pub(crate) fn axpy(&mut self, factor: f64, other: &[f64]) {
        for (c, d) in self.coeffs.iter_mut().zip(other) {
            *c += factor * d;
        }
    }

    /// `a * x + b * y` coefficientwise, with time `a * x.t + b * y.t`.
    pub(crate) fn convex_combination(a: f64, x: &DgState, b: f64, y: &DgState) -> DgState {
        let coeffs = x.coeffs.iter().zip(&y.coeffs).map(|(p, q)| a * p + b * q).collect();
        DgState {
            coeffs,
            cells: x.cells,
            degree: x.degree,
            time: a * x.time + b * y.time,
        }
    }
}

/// Piecewise L² projection of `n0` onto degree-`k` polynomials.
///
/// `n_j^i = (1 / c_i) ∫_{-1}^{1} n0(x(ξ)) φ_i(ξ) dξ`, integrated with a
/// `projection_order`-point Gauss rule per cell.
pub fn project_initial(
    n0: impl Fn(f64) -> f64,
    mesh: &Mesh,
    degree: usize,
    projection_order: usize,
) -> Result<DgState> {
    if degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!("degree {degree} exceeds {MAX_DEGREE}")));
    }
    let rule = QuadratureRule::gauss(projection_order)?;
    let basis: Vec<Vec<f64>> = rule
        .nodes()
        .iter()
        .map(|&s| (0..=degree).map(|i| legendre_eval(i, s)).collect())
        .collect();
    let mut state = DgState::zeros(mesh.num_cells(), degree);
    for j in 0..mesh.num_cells() {
        let samples: Vec<f64> = mesh.gauss_points_of_cell(&rule, j).into_iter().map(&n0).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::ProjectionFailure { cell: j });
        }
        let cell = state.cell_mut(j);
        for (i, c) in cell.iter_mut().enumerate() {
            let integral: f64 = samples
                .iter()
                .zip(rule.weights())
                .zip(&basis)
                .map(|((v, w), phi)| w * v * phi[i])
                .sum();
            *c = integral / normalization(i);
        }
    }
    Ok(state)
}
