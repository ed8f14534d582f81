//! Truncated partitions of `(0, L]` and Gauss-Legendre quadrature.
//!
//! Cells are half-open on the left, `I_j = (x_{j-1/2}, x_{j+1/2}]`, and are
//! indexed from zero: cell `j` spans `(interfaces[j], interfaces[j + 1]]`.
//! Interface `i` sits at `interfaces[i]`; interface `0` is the origin.

use serde::Serialize;

use crate::{Error, Result};

/// Number of doublings spanned by the default geometric mesh (about nine decades).
pub const DEFAULT_SPAN_EXPONENT: f64 = 30.0;

/// Largest supported Gauss-Legendre order.
pub const MAX_GAUSS_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    interfaces: Vec<f64>,
    widths: Vec<f64>,
    pivots: Vec<f64>,
    ratio: Option<f64>,
}

/// JSON view of a mesh for run reports.
#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    #[serde(rename = "N")]
    pub cells: usize,
    pub x0: f64,
    pub r: Option<f64>,
    pub interfaces: Vec<f64>,
}

impl Mesh {
    /// Geometric mesh with `x_{1/2} = 0`, `x_{3/2} = x0` and
    /// `x_{j+1/2} = r x_{j-1/2}` for the remaining interfaces, where
    /// `r = 2^(span_exponent / cells)`.
    pub fn geometric(cells: usize, x0: f64, span_exponent: f64) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidArgument(format!(
                "geometric mesh needs at least 2 cells, got {cells}"
            )));
        }
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidArgument(format!("x0 must be positive, got {x0}")));
        }
        if !(span_exponent > 0.0 && span_exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "span exponent must be positive, got {span_exponent}"
            )));
        }
        let ratio = (span_exponent / cells as f64).exp2();
        // powi instead of repeated multiplication keeps x_{j+1/2} = r^{j-1} x0 to one rounding.
        let interfaces: Vec<f64> = std::iter::once(0.0)
            .chain((0..cells).map(|m| x0 * ratio.powi(m as i32)))
            .collect();
        let mut mesh = Self::from_interfaces(interfaces)?;
        mesh.ratio = Some(ratio);
        Ok(mesh)
    }

    /// Mesh from an explicit, strictly increasing interface array.
    pub fn from_interfaces(interfaces: Vec<f64>) -> Result<Self> {
        if interfaces.len() < 2 {
            return Err(Error::InvalidArgument("a mesh needs at least one cell".into()));
        }
        if interfaces[0] < 0.0 || interfaces.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "interfaces must be finite and nonnegative".into(),
            ));
        }
        if interfaces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("interfaces must be strictly increasing".into()));
        }
        let widths = interfaces.windows(2).map(|w| w[1] - w[0]).collect();
        let pivots = interfaces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            interfaces,
            widths,
            pivots,
            ratio: None,
        })
    }

    /// Uniform mesh of `[0, length]`.
    pub fn uniform(cells: usize, length: f64) -> Result<Self> {
        if cells == 0 || !(length > 0.0) {
            return Err(Error::InvalidArgument("uniform mesh needs cells > 0 and length > 0".into()));
        }
        let h = length / cells as f64;
        let mut interfaces: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        interfaces[cells] = length;
        Self::from_interfaces(interfaces)
    }

    pub fn num_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    /// Geometric growth factor, for geometric meshes only.
    pub fn ratio(&self) -> Option<f64> {
        self.ratio
    }

    pub fn width(&self, j: usize) -> f64 {
        self.widths[j]
    }

    pub fn pivot(&self, j: usize) -> f64 {
        self.pivots[j]
    }

    pub fn left(&self, j: usize) -> f64 {
        self.interfaces[j]
    }

    pub fn right(&self, j: usize) -> f64 {
        self.interfaces[j + 1]
    }

    pub fn lower(&self) -> f64 {
        self.interfaces[0]
    }

    pub fn upper(&self) -> f64 {
        self.interfaces[self.interfaces.len() - 1]
    }

    /// Cell `J` with `x_{J-1/2} < x <= x_{J+1/2}`.
    pub fn locate_cell(&self, x: f64) -> Result<usize> {
        if !(x > self.lower() && x <= self.upper()) {
            return Err(Error::OutOfDomain {
                x,
                upper: self.upper(),
            });
        }
        Ok(self.locate_unchecked(x))
    }

    /// [`Mesh::locate_cell`] without the domain check; `x` must lie in the domain.
    #[inline]
    pub(crate) fn locate_unchecked(&self, x: f64) -> usize {
        // First interface >= x, minus one.
        let idx = self.interfaces.partition_point(|&xi| xi < x);
        idx.saturating_sub(1).min(self.num_cells() - 1)
    }

    /// Physical coordinates `x_j + (h_j / 2) s_α` of the rule's nodes in cell `j`.
    pub fn gauss_points_of_cell(&self, rule: &QuadratureRule, j: usize) -> Vec<f64> {
        let (c, hh) = (self.pivots[j], 0.5 * self.widths[j]);
        rule.nodes().iter().map(|s| c + hh * s).collect()
    }

    /// Maps `x` to the reference coordinate of cell `j`.
    #[inline]
    pub fn reference_coordinate(&self, j: usize, x: f64) -> f64 {
        2.0 * (x - self.pivots[j]) / self.widths[j]
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            cells: self.num_cells(),
            x0: self.interfaces[1],
            r: self.ratio,
            interfaces: self.interfaces.clone(),
        }
    }

    /// Whether `other` covers the same interval `[x_{1/2}, x_{N+1/2}]`.
    pub fn same_domain(&self, other: &Mesh) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        close(self.lower(), other.lower()) && close(self.upper(), other.upper())
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `order`-point Gauss-Legendre rule, nodes increasing.
    ///
    /// Nodes are Newton-refined roots of `P_order` starting from the
    /// Chebyshev-like guess `cos(π (i + 3/4) / (order + 1/2))`.
    pub fn gauss(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_GAUSS_ORDER {
            return Err(Error::InvalidArgument(format!(
                "Gauss order must be in 1..={MAX_GAUSS_ORDER}, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // cos guess orders roots from the right.
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b g` by the affine image of the rule.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let (c, hh) = (0.5 * (a + b), 0.5 * (b - a));
        hh * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * g(c + hh * s))
            .sum::<f64>()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
