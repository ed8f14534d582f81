//! Semi-discrete DG right-hand side, forward Euler update and the
//! positivity time-step bound.
//!
//! With the diagonal Legendre mass matrix each coefficient evolves as
//!
//! ```text
//! (h_j / 2) c_i dn_j^i/dt = Σ_γ ω_γ φ_i'(s_γ) F(x̂_j^γ) - [F_{j+1/2} - (-1)^i F_{j-1/2}]
//! ```
//!
//! so the `i = 0` row is the finite volume update of the cell average.

use crate::basis::{legendre_derivative, normalization, DgState};
use crate::flux::{FluxDecomposition, FluxField, FluxOperator};
use crate::kernels::KernelSet;
use crate::mesh::{Mesh, QuadratureRule};
use crate::{Error, Result};

/// Time derivatives of all coefficients together with the fluxes behind them.
#[derive(Debug, Clone)]
pub struct RhsEvaluation {
    pub dcoeffs: Vec<f64>,
    pub flux: FluxField,
}

impl RhsEvaluation {
    /// `F_{N+1/2}`, the flux leaving the truncated domain.
    pub fn outflow(&self) -> f64 {
        let n = self.flux.interface_aggregation.len() - 1;
        self.flux.interface(n)
    }
}

#[derive(Debug, Clone)]
pub struct DgScheme {
    op: FluxOperator,
    degree: usize,
    /// `φ_i'(s_γ)`, index `γ (k + 1) + i`.
    dphi: Vec<f64>,
}

impl DgScheme {
    pub fn new(mesh: Mesh, rule: QuadratureRule, kernels: KernelSet, degree: usize) -> Result<Self> {
        if degree > crate::basis::MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("degree {degree} too large")));
        }
        if 2 * rule.order() < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "Q = {} cannot reproduce cell averages of degree {degree}",
                rule.order()
            )));
        }
        let dphi = rule
            .nodes()
            .iter()
            .flat_map(|&s| (0..=degree).map(move |i| legendre_derivative(i, s)))
            .collect();
        Ok(Self {
            op: FluxOperator::new(mesh, rule, kernels),
            degree,
            dphi,
        })
    }

    pub fn operator(&self) -> &FluxOperator {
        &self.op
    }

    pub fn mesh(&self) -> &Mesh {
        self.op.mesh()
    }

    pub fn rule(&self) -> &QuadratureRule {
        self.op.rule()
    }

    pub fn kernels(&self) -> &KernelSet {
        self.op.kernels()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn check_state(&self, state: &DgState) -> Result<()> {
        state.check_mesh(self.mesh())?;
        if state.degree() != self.degree {
            return Err(Error::InvalidArgument(format!(
                "state degree {} differs from scheme degree {}",
                state.degree(),
                self.degree
            )));
        }
        Ok(())
    }

    pub fn assemble_rhs(&self, state: &DgState) -> Result<RhsEvaluation> {
        self.check_state(state)?;
        let mesh = self.mesh();
        let n = mesh.num_cells();
        let w = self.degree + 1;
        // φ_0' = 0, so the interior fluxes only matter for k >= 1.
        let flux = self.op.evaluate(state, self.degree > 0)?;
        let weights = self.rule().weights();
        let mut dcoeffs = vec![0.0; n * w];
        for c in 0..n {
            let (left, right) = (flux.interface(c), flux.interface(c + 1));
            let scale = 0.5 * mesh.width(c);
            for i in 0..w {
                let mut volume = 0.0;
                if i > 0 {
                    for (gamma, wg) in weights.iter().enumerate() {
                        volume += wg * self.dphi[gamma * w + i] * flux.interior(c, gamma);
                    }
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let value = (volume - (right - sign * left)) / (scale * normalization(i));
                if !value.is_finite() {
                    return Err(Error::DivergedState { cell: c, point: i });
                }
                dcoeffs[c * w + i] = value;
            }
        }
        Ok(RhsEvaluation { dcoeffs, flux })
    }

    /// Flux-difference decomposition of every cell for the given evaluation.
    pub fn decompose(&self, state: &DgState, rhs: &RhsEvaluation) -> Vec<FluxDecomposition> {
        self.op.decompose_all(state, &rhs.flux)
    }

    /// Largest forward Euler step for which all cell averages stay positive:
    ///
    /// ```text
    /// 1 / max_{j,α} ( (Γ_{j,j}^α)_+ + G_{j-1,j}^α + (-B_{a,j})_+ / (h_j n̄_j) )
    /// ```
    ///
    /// `f64::INFINITY` when the maximum is zero. Every cell average must be positive.
    pub fn cfl_max_dt(&self, state: &DgState) -> Result<f64> {
        self.check_state(state)?;
        if let Some((j, avg)) = state.averages().enumerate().find(|(_, a)| !(*a > 0.0)) {
            return Err(Error::InvalidState(format!("cell {j} has average {avg:e}")));
        }
        let rhs = self.assemble_rhs(state)?;
        Ok(self.cfl_bound(state, &rhs, false))
    }

    /// CFL bound from an existing evaluation. With `skip_empty`, cells whose
    /// average is not positive are left out instead of forcing a zero bound.
    pub fn cfl_bound(&self, state: &DgState, rhs: &RhsEvaluation, skip_empty: bool) -> f64 {
        let mesh = self.mesh();
        let mut worst: f64 = 0.0;
        for (c, d) in self.decompose(state, rhs).into_iter().enumerate() {
            let avg = state.cell_average(c);
            if !(avg > 0.0) {
                if skip_empty {
                    continue;
                }
                return 0.0;
            }
            let birth = (-d.aggregation_birth).max(0.0) / (mesh.width(c) * avg);
            for (g, b) in d.aggregation_death.iter().zip(&d.breakage_death) {
                worst = worst.max(g.max(0.0) + b + birth);
            }
        }
        if worst > 0.0 {
            1.0 / worst
        } else {
            f64::INFINITY
        }
    }

    /// State-independent bound `1 / max G_{j-1,j}^α` for pure breakage, where
    /// the aggregation terms of [`DgScheme::cfl_max_dt`] vanish.
    pub fn breakage_cfl_bound(&self) -> Option<f64> {
        if self.kernels().has_aggregation() {
            return None;
        }
        let tables = self.op.breakage_tables()?;
        let q = self.rule().order();
        let worst = (0..self.mesh().num_cells())
            .flat_map(|c| (0..q).map(move |a| (c, a)))
            .map(|(c, a)| tables.get(c, c, a))
            .fold(0.0, f64::max);
        Some(if worst > 0.0 { 1.0 / worst } else { f64::INFINITY })
    }
}

/// `n^{m+1} = n^m + Δt dn/dt`, time advanced by `Δt`.
pub fn euler_update(state: &DgState, rhs: &RhsEvaluation, dt: f64) -> DgState {
    let mut next = state.clone();
    next.axpy(dt, &rhs.dcoeffs);
    next.time += dt;
    next
}
