//! Quadrature evaluation of the nonlocal aggregation and breakage fluxes.
//!
//! Notation (cells and nodes zero-based): `x̂[l][α]` is node `α` of cell `l`,
//! `w[l][α] = (h_l / 2) ω_α n_h(x̂[l][α])` its weighted density, and interface
//! `i` sits at `x_i = interfaces[i]`, with cells `0..i` to its left.
//!
//! Aggregation at interface `i`:
//!
//! ```text
//! Fa_i = Σ_{l < i} Σ_α w[l][α] Γ(x̂[l][α]; x_i - x̂[l][α])
//! Γ(u; a) = ∫_a^{x_{J+1}} A(u, v) n_h(v) dv   (Q-point rule, a ∈ cell J)
//!         + Σ_{i' > J} Σ_β w[i'][β] A(u, x̂[i'][β])
//! ```
//!
//! The second part of `Γ` is a suffix sum that depends only on `u`. For the
//! `N Q` standard abscissae it is tabulated once per state, which brings a
//! full interface sweep down to `O(N² Q²)` kernel evaluations.
//!
//! Breakage at interface `i`:
//!
//! ```text
//! Fb_i = -Σ_{l >= i} Σ_α w[l][α] G(i, l, α)
//! G(i, l, α) = Σ_{i' < i} Σ_β (h_{i'} / 2) ω_β B(x̂[i'][β], x̂[l][α])
//! ```
//!
//! `G` does not involve the state and is tabulated at construction, as are
//! the partial-cell variants needed at interior Gauss points.

use rayon::prelude::*;

use crate::basis::DgState;
use crate::kernels::KernelSet;
use crate::mesh::{Mesh, QuadratureRule};
use crate::{Error, Result};

/// Partial intervals shorter than this contribute nothing.
const DEGENERATE_INTERVAL: f64 = 1e-300;

/// Time-independent breakage prefix sums at the standard Gauss points.
#[derive(Debug, Clone)]
pub struct BreakageTables {
    cells: usize,
    order: usize,
    /// `(i, l, α) -> G(i, l, α)`, `i ∈ 0..=N`, `l ∈ 0..N`.
    values: Vec<f64>,
}

impl BreakageTables {
    /// Prefix over cells `0..i`, evaluated at node `α` of cell `l`.
    #[inline]
    pub fn get(&self, i: usize, l: usize, alpha: usize) -> f64 {
        self.values[(i * self.cells + l) * self.order + alpha]
    }

    pub fn num_cells(&self) -> usize {
        self.cells
    }
}

/// Builds `G(i, l, α)` for all interfaces and nodes.
pub fn build_breakage_tables(mesh: &Mesh, rule: &QuadratureRule, kernels: &KernelSet) -> BreakageTables {
    let n = mesh.num_cells();
    let q = rule.order();
    let pts = gauss_points(mesh, rule);
    let hw = half_weights(mesh, rule);
    let mut values = vec![0.0; (n + 1) * n * q];
    for l in 0..n {
        for alpha in 0..q {
            let v = pts[l * q + alpha];
            let mut acc = 0.0;
            values[l * q + alpha] = 0.0;
            for i in 0..n {
                // B vanishes for u >= v, so cells right of l add nothing.
                if i <= l {
                    acc += (0..q)
                        .map(|beta| hw[i * q + beta] * kernels.b_unchecked(pts[i * q + beta], v))
                        .sum::<f64>();
                }
                values[((i + 1) * n + l) * q + alpha] = acc;
            }
        }
    }
    BreakageTables { cells: n, order: q, values }
}

/// Breakage prefixes for the partial cells used at interior Gauss points.
///
/// For node `γ` of cell `c`, with `x* = x̂[c][γ]`, stores `G*(v)` = prefix over
/// cells `0..c` plus the partial cell `[x_c, x*]`, at the abscissae
/// `v = u_α ∈ [x*, x_{c+1}]` (for `l = c`) and `v = x̂[l][α]` (for `l > c`).
#[derive(Debug, Clone)]
struct InteriorBreakage {
    order: usize,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl InteriorBreakage {
    fn build(mesh: &Mesh, rule: &QuadratureRule, kernels: &KernelSet, tables: &BreakageTables) -> Self {
        let n = mesh.num_cells();
        let q = rule.order();
        let pts = gauss_points(mesh, rule);
        let hw = half_weights(mesh, rule);
        let mut offsets = Vec::with_capacity(n * q + 1);
        let mut values = Vec::new();
        for c in 0..n {
            for gamma in 0..q {
                offsets.push(values.len());
                let xs = pts[c * q + gamma];
                let left = partial_nodes(rule, mesh.left(c), xs);
                let right = partial_nodes(rule, xs, mesh.right(c));
                let partial = |v: f64| -> f64 {
                    left.half
                        * left
                            .nodes
                            .iter()
                            .zip(rule.weights())
                            .map(|(&u, w)| w * kernels.b_unchecked(u, v))
                            .sum::<f64>()
                };
                for &v in &right.nodes {
                    let full: f64 = (0..c * q).map(|p| hw[p] * kernels.b_unchecked(pts[p], v)).sum();
                    values.push(full + partial(v));
                }
                for l in c + 1..n {
                    for alpha in 0..q {
                        let v = pts[l * q + alpha];
                        values.push(tables.get(c, l, alpha) + partial(v));
                    }
                }
            }
        }
        offsets.push(values.len());
        Self { order: q, offsets, values }
    }

    /// Row for node `γ` of cell `c`; entry `(l - c) * Q + α`.
    #[inline]
    fn row(&self, c: usize, gamma: usize) -> &[f64] {
        let k = c * self.order + gamma;
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }
}

/// Affine image of the rule on `[a, b]`.
struct PartialNodes {
    half: f64,
    nodes: Vec<f64>,
}

fn partial_nodes(rule: &QuadratureRule, a: f64, b: f64) -> PartialNodes {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    PartialNodes {
        half,
        nodes: rule.nodes().iter().map(|s| mid + half * s).collect(),
    }
}

fn gauss_points(mesh: &Mesh, rule: &QuadratureRule) -> Vec<f64> {
    (0..mesh.num_cells()).flat_map(|j| mesh.gauss_points_of_cell(rule, j)).collect()
}

fn half_weights(mesh: &Mesh, rule: &QuadratureRule) -> Vec<f64> {
    mesh.widths()
        .iter()
        .flat_map(|h| rule.weights().iter().map(move |w| 0.5 * h * w))
        .collect()
}

/// Per-state aggregation data: weighted densities and the suffix-sum table.
#[derive(Debug, Clone)]
pub struct AggregationWorkspace {
    /// `n_h(x̂[l][α])`
    values: Vec<f64>,
    /// `w[l][α]`
    weighted: Vec<f64>,
    /// `(p, i) -> Σ_{i' >= i} Σ_β w[i'][β] A(x̂_p, x̂[i'][β])`, `i ∈ 0..=N`.
    suffix: Vec<f64>,
    cells: usize,
}

impl AggregationWorkspace {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weighted(&self) -> &[f64] {
        &self.weighted
    }

    /// Suffix sum from cell `i` for standard abscissa `p = l Q + α`.
    #[inline]
    pub fn suffix(&self, p: usize, i: usize) -> f64 {
        self.suffix[p * (self.cells + 1) + i]
    }
}

/// Fluxes at every interface and every interior Gauss point.
#[derive(Debug, Clone)]
pub struct FluxField {
    pub interface_aggregation: Vec<f64>,
    pub interface_breakage: Vec<f64>,
    /// Empty unless interior fluxes were requested; index `c Q + γ`.
    pub interior_aggregation: Vec<f64>,
    pub interior_breakage: Vec<f64>,
    /// `Γ(x̂[l][α]; x_i - x̂[l][α])` for `1 <= i <= N`, `l < i`.
    gamma: Vec<f64>,
    order: usize,
}

impl FluxField {
    /// Total flux `F_i` at interface `i`.
    pub fn interface(&self, i: usize) -> f64 {
        self.interface_aggregation[i] + self.interface_breakage[i]
    }

    /// Total flux at node `γ` of cell `c`.
    pub fn interior(&self, c: usize, gamma: usize) -> f64 {
        let k = c * self.order + gamma;
        self.interior_aggregation.get(k).copied().unwrap_or(0.0)
            + self.interior_breakage.get(k).copied().unwrap_or(0.0)
    }

    /// Interface partial flux `Γ` for interface `i >= 1` and node `α` of cell `l < i`.
    #[inline]
    pub fn gamma(&self, i: usize, l: usize, alpha: usize) -> f64 {
        self.gamma[gamma_offset(i, self.order) + l * self.order + alpha]
    }
}

#[inline]
fn gamma_offset(i: usize, q: usize) -> usize {
    q * i * (i - 1) / 2
}

/// Aggregation and breakage parts of the flux at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFlux {
    pub aggregation: f64,
    pub breakage: f64,
}

impl PointFlux {
    pub fn total(&self) -> f64 {
        self.aggregation + self.breakage
    }
}

/// Birth/death split of the flux difference across cell `c`.
///
/// ```text
/// F_{c+1} - F_c = -aggregation_birth
///               + Σ_α (h_c / 2) ω_α n_h(x̂[c][α]) (aggregation_death[α] + breakage_death[α])
///               - breakage_birth
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct FluxDecomposition {
    /// `B_a = Σ_{l < c} Σ_α w[l][α] (Γ_{c,l}^α - Γ_{c+1,l}^α)`
    pub aggregation_birth: f64,
    /// `Γ_{c+1,c}^α`
    pub aggregation_death: Vec<f64>,
    /// `G(c, c, α)`
    pub breakage_death: Vec<f64>,
    /// `Σ_{l > c} Σ_α w[l][α] (G(c+1, l, α) - G(c, l, α))`
    pub breakage_birth: f64,
}

/// Mesh, quadrature and kernels, with the time-independent tables built once.
#[derive(Debug, Clone)]
pub struct FluxOperator {
    mesh: Mesh,
    rule: QuadratureRule,
    kernels: KernelSet,
    points: Vec<f64>,
    half_weights: Vec<f64>,
    breakage: Option<BreakageTables>,
    interior_breakage: Option<InteriorBreakage>,
}

impl FluxOperator {
    pub fn new(mesh: Mesh, rule: QuadratureRule, kernels: KernelSet) -> Self {
        let points = gauss_points(&mesh, &rule);
        let half_weights = half_weights(&mesh, &rule);
        let (breakage, interior_breakage) = if kernels.has_breakage() {
            let tables = build_breakage_tables(&mesh, &rule, &kernels);
            let interior = InteriorBreakage::build(&mesh, &rule, &kernels, &tables);
            (Some(tables), Some(interior))
        } else {
            (None, None)
        };
        Self {
            mesh,
            rule,
            kernels,
            points,
            half_weights,
            breakage,
            interior_breakage,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn breakage_tables(&self) -> Option<&BreakageTables> {
        self.breakage.as_ref()
    }

    /// Standard Gauss points, index `l Q + α`.
    pub fn gauss_points(&self) -> &[f64] {
        &self.points
    }

    fn order(&self) -> usize {
        self.rule.order()
    }

    /// Samples the state and tabulates aggregation suffix sums.
    pub fn workspace(&self, state: &DgState) -> AggregationWorkspace {
        let n = self.mesh.num_cells();
        let q = self.order();
        let values: Vec<f64> = (0..n)
            .flat_map(|c| self.rule.nodes().iter().map(move |&s| state.eval_reference(c, s)))
            .collect();
        let weighted: Vec<f64> = values.iter().zip(&self.half_weights).map(|(v, hw)| v * hw).collect();
        let mut suffix = Vec::new();
        if self.kernels.has_aggregation() {
            suffix = vec![0.0; n * q * (n + 1)];
            suffix.par_chunks_mut(n + 1).enumerate().for_each(|(p, row)| {
                let u = self.points[p];
                let mut acc = 0.0;
                for i in (0..n).rev() {
                    for beta in 0..q {
                        let k = i * q + beta;
                        let w = weighted[k];
                        if w != 0.0 {
                            acc += w * self.kernels.a_unchecked(u, self.points[k]);
                        }
                    }
                    row[i] = acc;
                }
            });
        }
        AggregationWorkspace {
            values,
            weighted,
            suffix,
            cells: n,
        }
    }

    /// `∫_a^{x_{J+1}} A(u, v) n_h(v) dv` with the Q-point rule, `a` in cell `J`.
    #[inline]
    fn partial_aggregation(&self, state: &DgState, u: f64, a: f64) -> (usize, f64) {
        let cell = self.mesh.locate_unchecked(a);
        let b = self.mesh.right(cell);
        if b - a <= DEGENERATE_INTERVAL {
            return (cell, 0.0);
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let sum: f64 = self
            .rule
            .nodes()
            .iter()
            .zip(self.rule.weights())
            .map(|(s, w)| {
                let y = mid + half * s;
                // Only Gauss values are limiter-guaranteed; clip the rest.
                let nv = state.eval_in_cell(&self.mesh, cell, y).max(0.0);
                if nv == 0.0 {
                    0.0
                } else {
                    w * self.kernels.a_unchecked(u, y) * nv
                }
            })
            .sum();
        (cell, half * sum)
    }

    /// `Γ(u; a)` for a standard abscissa `p`.
    #[inline]
    fn gamma_standard(&self, state: &DgState, ws: &AggregationWorkspace, p: usize, a: f64) -> f64 {
        let (cell, part) = self.partial_aggregation(state, self.points[p], a);
        part + ws.suffix(p, cell + 1)
    }

    /// `Γ(u; a)` for an arbitrary abscissa, summing the suffix directly.
    fn gamma_general(&self, state: &DgState, ws: &AggregationWorkspace, u: f64, a: f64) -> f64 {
        let (cell, part) = self.partial_aggregation(state, u, a);
        let q = self.order();
        let start = (cell + 1) * q;
        let tail: f64 = ws.weighted[start..]
            .iter()
            .zip(&self.points[start..])
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, &v)| w * self.kernels.a_unchecked(u, v))
            .sum();
        part + tail
    }

    /// Aggregation flux at `x` in cell `c`: full cells `0..c`, partial cell `[x_c, x]`.
    fn aggregation_at(&self, state: &DgState, ws: &AggregationWorkspace, c: usize, x: f64) -> f64 {
        let q = self.order();
        let mut total = 0.0;
        for p in 0..c * q {
            let w = ws.weighted[p];
            if w != 0.0 {
                total += w * self.gamma_standard(state, ws, p, x - self.points[p]);
            }
        }
        let part = partial_nodes(&self.rule, self.mesh.left(c), x);
        if part.half > DEGENERATE_INTERVAL {
            let mut s = 0.0;
            for (&u, w) in part.nodes.iter().zip(self.rule.weights()) {
                let nu = state.eval_in_cell(&self.mesh, c, u);
                if nu != 0.0 {
                    s += w * nu * self.gamma_general(state, ws, u, x - u);
                }
            }
            total += part.half * s;
        }
        total
    }

    /// Breakage flux at `x` in cell `c`, computed without the interior cache.
    fn breakage_at_uncached(&self, state: &DgState, ws: &AggregationWorkspace, c: usize, x: f64) -> f64 {
        let Some(tables) = &self.breakage else {
            return 0.0;
        };
        let q = self.order();
        let left = partial_nodes(&self.rule, self.mesh.left(c), x);
        let right = partial_nodes(&self.rule, x, self.mesh.right(c));
        let partial_prefix = |v: f64| -> f64 {
            left.half
                * left
                    .nodes
                    .iter()
                    .zip(self.rule.weights())
                    .map(|(&u, w)| w * self.kernels.b_unchecked(u, v))
                    .sum::<f64>()
        };
        let mut total = 0.0;
        if right.half > DEGENERATE_INTERVAL {
            let mut s = 0.0;
            for (&v, w) in right.nodes.iter().zip(self.rule.weights()) {
                let full: f64 = (0..c * q)
                    .map(|p| self.half_weights[p] * self.kernels.b_unchecked(self.points[p], v))
                    .sum();
                s += w * state.eval_in_cell(&self.mesh, c, v) * (full + partial_prefix(v));
            }
            total += right.half * s;
        }
        for l in c + 1..self.mesh.num_cells() {
            for alpha in 0..q {
                let p = l * q + alpha;
                total += ws.weighted[p] * (tables.get(c, l, alpha) + partial_prefix(self.points[p]));
            }
        }
        -total
    }

    /// Breakage flux at node `γ` of cell `c`, from the interior cache.
    fn breakage_at_node(&self, state: &DgState, ws: &AggregationWorkspace, c: usize, gamma: usize) -> f64 {
        let Some(cache) = &self.interior_breakage else {
            return 0.0;
        };
        let q = self.order();
        let row = cache.row(c, gamma);
        let xs = self.points[c * q + gamma];
        let right = partial_nodes(&self.rule, xs, self.mesh.right(c));
        let mut partial = 0.0;
        for (alpha, (&v, w)) in right.nodes.iter().zip(self.rule.weights()).enumerate() {
            partial += w * state.eval_in_cell(&self.mesh, c, v) * row[alpha];
        }
        let tail: f64 = ws.weighted[(c + 1) * q..]
            .iter()
            .zip(&row[q..])
            .map(|(w, g)| w * g)
            .sum();
        -(right.half * partial + tail)
    }

    /// Interface breakage flux `Fb_i`.
    fn breakage_interface(&self, ws: &AggregationWorkspace, i: usize) -> f64 {
        let Some(tables) = &self.breakage else {
            return 0.0;
        };
        let q = self.order();
        let mut total = 0.0;
        for l in i..self.mesh.num_cells() {
            for alpha in 0..q {
                total += ws.weighted[l * q + alpha] * tables.get(i, l, alpha);
            }
        }
        -total
    }

    /// Interface `Γ` table, `1 <= i <= N`.
    fn gamma_table(&self, state: &DgState, ws: &AggregationWorkspace) -> Vec<f64> {
        let n = self.mesh.num_cells();
        let q = self.order();
        if !self.kernels.has_aggregation() {
            return vec![0.0; gamma_offset(n + 1, q)];
        }
        let rows: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|i| {
                let x = self.mesh.interfaces()[i];
                (0..i * q)
                    .map(|p| self.gamma_standard(state, ws, p, x - self.points[p]))
                    .collect()
            })
            .collect();
        rows.concat()
    }

    /// Fluxes at all interfaces and, if `interior`, at all interior Gauss points.
    pub fn evaluate(&self, state: &DgState, interior: bool) -> Result<FluxField> {
        state.check_mesh(&self.mesh)?;
        let n = self.mesh.num_cells();
        let q = self.order();
        let ws = self.workspace(state);
        let gamma = self.gamma_table(state, &ws);

        let mut interface_aggregation = vec![0.0; n + 1];
        for i in 1..=n {
            let off = gamma_offset(i, q);
            interface_aggregation[i] = ws.weighted[..i * q]
                .iter()
                .zip(&gamma[off..off + i * q])
                .map(|(w, g)| w * g)
                .sum();
        }
        let interface_breakage: Vec<f64> = (0..=n).map(|i| self.breakage_interface(&ws, i)).collect();

        let (mut interior_aggregation, mut interior_breakage) = (Vec::new(), Vec::new());
        if interior {
            interior_aggregation = if self.kernels.has_aggregation() {
                (0..n * q)
                    .into_par_iter()
                    .map(|p| self.aggregation_at(state, &ws, p / q, self.points[p]))
                    .collect()
            } else {
                vec![0.0; n * q]
            };
            interior_breakage = (0..n * q)
                .into_par_iter()
                .map(|p| self.breakage_at_node(state, &ws, p / q, p % q))
                .collect();
        }

        for (k, v) in interior_aggregation.iter().zip(&interior_breakage).enumerate() {
            if !(v.0 + v.1).is_finite() {
                return Err(Error::DivergedState { cell: k / q, point: k % q });
            }
        }
        for (i, (a, b)) in interface_aggregation.iter().zip(&interface_breakage).enumerate() {
            if !(a + b).is_finite() {
                return Err(Error::DivergedState {
                    cell: i.min(n - 1),
                    point: q,
                });
            }
        }
        Ok(FluxField {
            interface_aggregation,
            interface_breakage,
            interior_aggregation,
            interior_breakage,
            gamma,
            order: q,
        })
    }

    /// `Fb` at interface `i ∈ 0..=N`.
    pub fn interface_flux_brk(&self, state: &DgState, i: usize) -> Result<f64> {
        self.check_interface(state, i)?;
        let ws = self.workspace(state);
        Ok(self.breakage_interface(&ws, i))
    }

    /// `Fa` at interface `i ∈ 0..=N`.
    pub fn interface_flux_agg(&self, state: &DgState, i: usize) -> Result<f64> {
        self.check_interface(state, i)?;
        if i == 0 || !self.kernels.has_aggregation() {
            return Ok(0.0);
        }
        let ws = self.workspace(state);
        let x = self.mesh.interfaces()[i];
        Ok((0..i * self.order())
            .map(|p| ws.weighted[p] * self.gamma_standard(state, &ws, p, x - self.points[p]))
            .sum())
    }

    /// Flux at node `γ` of cell `c`.
    pub fn interior_flux(&self, state: &DgState, c: usize, gamma: usize) -> Result<PointFlux> {
        state.check_mesh(&self.mesh)?;
        if c >= self.mesh.num_cells() || gamma >= self.order() {
            return Err(Error::InvalidArgument(format!("no node ({c}, {gamma})")));
        }
        let ws = self.workspace(state);
        let x = self.points[c * self.order() + gamma];
        let aggregation = if self.kernels.has_aggregation() {
            self.aggregation_at(state, &ws, c, x)
        } else {
            0.0
        };
        Ok(PointFlux {
            aggregation,
            breakage: self.breakage_at_node(state, &ws, c, gamma),
        })
    }

    /// Flux at an arbitrary point `x ∈ (0, L]`, same quadrature structure as
    /// the interior nodes with `x` in place of `x̂[c][γ]`.
    pub fn flux_at(&self, state: &DgState, x: f64) -> Result<PointFlux> {
        state.check_mesh(&self.mesh)?;
        let c = self.mesh.locate_cell(x)?;
        let ws = self.workspace(state);
        let aggregation = if self.kernels.has_aggregation() {
            self.aggregation_at(state, &ws, c, x)
        } else {
            0.0
        };
        Ok(PointFlux {
            aggregation,
            breakage: self.breakage_at_uncached(state, &ws, c, x),
        })
    }

    /// Birth/death split of `F_{c+1} - F_c` for cell `c`.
    pub fn flux_difference_decomposition(&self, state: &DgState, c: usize) -> Result<FluxDecomposition> {
        if c >= self.mesh.num_cells() {
            return Err(Error::InvalidArgument(format!("no cell {c}")));
        }
        let field = self.evaluate(state, false)?;
        let ws = self.workspace_values_only(state);
        Ok(self.decompose(&field, &ws, c))
    }

    /// Decomposition for every cell, reusing one flux evaluation.
    pub fn decompose_all(&self, state: &DgState, field: &FluxField) -> Vec<FluxDecomposition> {
        let ws = self.workspace_values_only(state);
        (0..self.mesh.num_cells()).map(|c| self.decompose(field, &ws, c)).collect()
    }

    fn workspace_values_only(&self, state: &DgState) -> AggregationWorkspace {
        let n = self.mesh.num_cells();
        let values: Vec<f64> = (0..n)
            .flat_map(|c| self.rule.nodes().iter().map(move |&s| state.eval_reference(c, s)))
            .collect();
        let weighted = values.iter().zip(&self.half_weights).map(|(v, hw)| v * hw).collect();
        AggregationWorkspace {
            values,
            weighted,
            suffix: Vec::new(),
            cells: n,
        }
    }

    fn decompose(&self, field: &FluxField, ws: &AggregationWorkspace, c: usize) -> FluxDecomposition {
        let q = self.order();
        let n = self.mesh.num_cells();
        let has_agg = self.kernels.has_aggregation();
        let aggregation_birth = if has_agg && c > 0 {
            (0..c * q)
                .map(|p| ws.weighted[p] * (field.gamma(c, p / q, p % q) - field.gamma(c + 1, p / q, p % q)))
                .sum()
        } else {
            0.0
        };
        let aggregation_death = (0..q)
            .map(|alpha| if has_agg { field.gamma(c + 1, c, alpha) } else { 0.0 })
            .collect();
        let (breakage_death, breakage_birth) = match &self.breakage {
            Some(t) => (
                (0..q).map(|alpha| t.get(c, c, alpha)).collect(),
                (c + 1..n)
                    .flat_map(|l| (0..q).map(move |alpha| (l, alpha)))
                    .map(|(l, alpha)| ws.weighted[l * q + alpha] * (t.get(c + 1, l, alpha) - t.get(c, l, alpha)))
                    .sum(),
            ),
            None => (vec![0.0; q], 0.0),
        };
        FluxDecomposition {
            aggregation_birth,
            aggregation_death,
            breakage_death,
            breakage_birth,
        }
    }

    fn check_interface(&self, state: &DgState, i: usize) -> Result<()> {
        state.check_mesh(&self.mesh)?;
        if i > self.mesh.num_cells() {
            return Err(Error::InvalidArgument(format!("no interface {i}")));
        }
        Ok(())
    }
}
