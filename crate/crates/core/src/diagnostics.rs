//! Error norms, convergence orders, moments and the PDE residual oracle.

use serde::Serialize;

use crate::basis::DgState;
use crate::kernels::KernelSet;
use crate::mesh::{Mesh, QuadratureRule};
use crate::{Error, Result};

/// Gauss order `R` of the norm and moment rules.
pub const NORM_ORDER: usize = 16;

/// Per-cell `(h_j / 2) Σ_α ω_α |n_h - reference|` over the given rule.
fn cell_errors(state: &DgState, mesh: &Mesh, reference: &dyn Fn(f64) -> f64, rule: &QuadratureRule) -> Vec<f64> {
    (0..mesh.num_cells())
        .map(|j| {
            let half = 0.5 * mesh.width(j);
            rule.nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&s, &w)| {
                    let x = mesh.left(j) + half * (s + 1.0);
                    w * (state.eval_reference(j, s) - reference(x)).abs()
                })
                .sum::<f64>()
                * half
        })
        .collect()
}

/// Continuous L¹ error `e_h` with an `order`-point Gauss rule per cell.
pub fn error_continuous(state: &DgState, mesh: &Mesh, reference: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
    state.check_mesh(mesh)?;
    let rule = QuadratureRule::gauss(order)?;
    Ok(cell_errors(state, mesh, &reference, &rule).iter().sum())
}

/// Discrete L¹ error `e_hd` at the scheme's own quadrature points.
pub fn error_discrete(state: &DgState, mesh: &Mesh, reference: impl Fn(f64) -> f64, rule: &QuadratureRule) -> Result<f64> {
    state.check_mesh(mesh)?;
    Ok(cell_errors(state, mesh, &reference, rule).iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub t: f64,
    pub e_h: f64,
    pub e_hd: f64,
    /// Contribution of each cell to `e_h`.
    pub per_cell: Vec<f64>,
}

impl ErrorReport {
    pub fn new(
        state: &DgState,
        mesh: &Mesh,
        reference: impl Fn(f64) -> f64,
        scheme_rule: &QuadratureRule,
        order: usize,
    ) -> Result<Self> {
        state.check_mesh(mesh)?;
        let per_cell = cell_errors(state, mesh, &reference, &QuadratureRule::gauss(order)?);
        Ok(Self {
            t: state.time,
            e_h: per_cell.iter().sum(),
            e_hd: cell_errors(state, mesh, &reference, scheme_rule).iter().sum(),
            per_cell,
        })
    }
}

/// `ln(e_i / e_{i+1}) / ln 2` for consecutive mesh doublings.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("EOC needs at least two errors".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!("EOC needs positive errors, got {e}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).ln() / std::f64::consts::LN_2).collect())
}

/// L¹ distance between a coarse state and a finer one, integrated over the
/// fine cells with the `order`-point rule.
///
/// The coarse domain must be a prefix of the fine one; past its end the coarse
/// state counts as zero. Geometric meshes of `N` and `2N` cells nest this way.
pub fn self_error(coarse: &DgState, coarse_mesh: &Mesh, fine: &DgState, fine_mesh: &Mesh, order: usize) -> Result<f64> {
    coarse.check_mesh(coarse_mesh)?;
    fine.check_mesh(fine_mesh)?;
    let upper_ok = coarse_mesh.upper() <= fine_mesh.upper() * (1.0 + 1e-12);
    if coarse_mesh.lower() != fine_mesh.lower() || !upper_ok {
        return Err(Error::MismatchedDomains(format!(
            "({}, {}] is not a prefix of ({}, {}]",
            coarse_mesh.lower(),
            coarse_mesh.upper(),
            fine_mesh.lower(),
            fine_mesh.upper()
        )));
    }
    let coarse_eval = |x: f64| {
        if x > coarse_mesh.upper() {
            return 0.0;
        }
        let j = coarse_mesh.locate_unchecked(x);
        coarse.eval_in_cell(coarse_mesh, j, x)
    };
    error_continuous(fine, fine_mesh, coarse_eval, order)
}

/// `M_p = Σ_j (h_j / 2) Σ_α ω_α x^{p-1} n_h(x)` for `p = 0..=p_max`.
pub fn moments(state: &DgState, mesh: &Mesh, p_max: usize, order: usize) -> Result<Vec<f64>> {
    state.check_mesh(mesh)?;
    let rule = QuadratureRule::gauss(order)?;
    let mut out = vec![0.0; p_max + 1];
    for j in 0..mesh.num_cells() {
        let half = 0.5 * mesh.width(j);
        for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
            let x = mesh.left(j) + half * (s + 1.0);
            let base = half * w * state.eval_reference(j, s);
            let mut power = 1.0 / x;
            for m in out.iter_mut() {
                *m += base * power;
                power *= x;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub t: f64,
    /// `M_{p,h}`, `p = 0..=p_max`.
    pub moments: Vec<f64>,
    /// Reference values where known.
    pub reference: Vec<Option<f64>>,
    /// `|M_{p,h} - M_p| / |M_p|`.
    pub relative_errors: Vec<Option<f64>>,
    /// Degree of aggregation `1 - M_{0,h}(t) / M_{0,h}(0)`.
    pub i_agg: Option<f64>,
}

impl MomentReport {
    pub fn new(t: f64, moments: Vec<f64>, reference: Vec<Option<f64>>, initial_m0: Option<f64>) -> Self {
        let relative_errors = moments
            .iter()
            .zip(reference.iter().chain(std::iter::repeat(&None)))
            .map(|(m, r)| r.filter(|r| *r != 0.0).map(|r| ((m - r) / r).abs()))
            .collect();
        let i_agg = initial_m0.filter(|m| *m > 0.0).map(|m0| 1.0 - moments[0] / m0);
        Self {
            t,
            reference: reference.into_iter().chain(std::iter::repeat(None)).take(moments.len()).collect(),
            moments,
            relative_errors,
            i_agg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EocRow {
    pub cells: usize,
    pub e_h: f64,
    pub eoc_h: Option<f64>,
    pub e_hd: Option<f64>,
    pub eoc_hd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EocTable {
    pub title: String,
    pub degree: usize,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    /// Rows over successive doublings; EOC entries start at the second row.
    pub fn new(title: impl Into<String>, degree: usize, cells: &[usize], e_h: &[f64], e_hd: Option<&[f64]>) -> Result<Self> {
        if cells.len() != e_h.len() || e_hd.is_some_and(|d| d.len() != e_h.len()) {
            return Err(Error::InvalidArgument("EOC table columns differ in length".into()));
        }
        let slopes = |e: &[f64]| -> Vec<Option<f64>> {
            let mut out = vec![None];
            out.extend(e.windows(2).map(|w| eoc(w).ok().map(|s| s[0])));
            out
        };
        let eoc_h = slopes(e_h);
        let eoc_hd = e_hd.map(slopes).unwrap_or_else(|| vec![None; e_h.len()]);
        let rows = (0..cells.len())
            .map(|i| EocRow {
                cells: cells[i],
                e_h: e_h[i],
                eoc_h: if i == 0 { None } else { eoc_h[i] },
                e_hd: e_hd.map(|d| d[i]),
                eoc_hd: if i == 0 { None } else { eoc_hd[i] },
            })
            .collect();
        Ok(Self {
            title: title.into(),
            degree,
            rows,
        })
    }

    pub fn finest_eoc_h(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.eoc_h)
    }

    pub fn finest_eoc_hd(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.eoc_hd)
    }

    pub fn to_markdown(&self) -> String {
        let has_hd = self.rows.iter().any(|r| r.e_hd.is_some());
        let opt = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"));
        let mut s = format!("### {} (k = {})\n\n", self.title, self.degree);
        if has_hd {
            s.push_str("| N | e_h | EOC | e_hd | EOC |\n|---:|---:|---:|---:|---:|\n");
        } else {
            s.push_str("| N | e_h | EOC |\n|---:|---:|---:|\n");
        }
        for r in &self.rows {
            s.push_str(&format!("| {} | {:.2e} | {} ", r.cells, r.e_h, opt(r.eoc_h, 2)));
            if has_hd {
                s.push_str(&format!("| {} | {} ", r.e_hd.map_or("-".into(), |v| format!("{v:.2e}")), opt(r.eoc_hd, 2)));
            }
            s.push_str("|\n");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.16e}"));
        let mut s = String::from("k,N,e_h,eoc_h,e_hd,eoc_hd\r\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.16e},{},{},{}\r\n",
                self.degree,
                r.cells,
                r.e_h,
                opt(r.eoc_h),
                opt(r.e_hd),
                opt(r.eoc_hd)
            ));
        }
        s
    }
}

/// `∫_a^b f` by adaptive bisection of 10-point Gauss panels, to relative
/// tolerance `rel_tol` of `∫|f|`.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 50;
    if b <= a {
        return Ok(0.0);
    }
    let rule = QuadratureRule::gauss(10)?;
    let panel = |lo: f64, hi: f64| -> (f64, f64) {
        let half = 0.5 * (hi - lo);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
            let v = f(lo + half * (s + 1.0));
            sum += w * v;
            abs += w * v.abs();
        }
        (sum * half, abs * half)
    };
    const START: usize = 32;
    let width = (b - a) / START as f64;
    let panels: Vec<(f64, f64, f64)> = (0..START)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == START { b } else { lo + width };
            let (v, _) = panel(lo, hi);
            (lo, hi, v)
        })
        .collect();
    let scale: f64 = (0..START)
        .map(|i| panel(panels[i].0, panels[i].1).1)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let abs_tol = rel_tol * scale;

    fn refine(
        panel: &dyn Fn(f64, f64) -> (f64, f64),
        lo: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let (l, _) = panel(lo, mid);
        let (r, _) = panel(mid, hi);
        if (l + r - whole).abs() <= tol {
            return Ok(l + r);
        }
        if depth == 0 {
            return Err(Error::OracleFailure { a: lo, b: hi });
        }
        Ok(refine(panel, lo, mid, l, 0.5 * tol, depth - 1)? + refine(panel, mid, hi, r, 0.5 * tol, depth - 1)?)
    }

    panels
        .into_iter()
        .map(|(lo, hi, v)| refine(&panel, lo, hi, v, abs_tol / START as f64, MAX_DEPTH))
        .sum()
}

/// Upper integration limit standing in for infinity in [`pde_residual`].
pub const RESIDUAL_UPPER: f64 = 200.0;

/// Both sides of the number-density equation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResidual {
    pub dfdt: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `|∂t f - (aggregation birth - death + breakage birth - death)|` for a
/// candidate solution `f(t, x)`.
///
/// `∂t f` uses the fourth-order five-point stencil with step
/// `1e-4 max(t, 1)`; the collision integrals are truncated at `upper` and
/// integrated adaptively to relative tolerance `1e-9`.
pub fn pde_residual(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    kernels: &KernelSet,
    t: f64,
    x: f64,
    upper: f64,
) -> Result<PdeResidual> {
    const TOL: f64 = 1e-9;
    let h = 1e-4 * t.max(1.0);
    if t - 2.0 * h < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} too close to 0 for the time stencil")));
    }
    let dfdt = (f(t - 2.0 * h, x)? - 8.0 * f(t - h, x)? + 8.0 * f(t + h, x)? - f(t + 2.0 * h, x)?) / (12.0 * h);

    // Integrand failures are surfaced after the quadrature.
    let failure = std::cell::Cell::new(None::<Error>);
    let ft = |y: f64| match f(t, y) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let fx = f(t, x)?;
    let mut rhs = 0.0;
    if kernels.has_aggregation() {
        let birth = adaptive_integrate(&|y| kernels.k(x - y, y) * ft(x - y) * ft(y), 0.0, x, TOL)?;
        let death = adaptive_integrate(&|y| kernels.k(x, y) * ft(y), 0.0, upper, TOL)?;
        rhs += 0.5 * birth - fx * death;
    }
    if kernels.has_breakage() {
        let birth = adaptive_integrate(&|y| kernels.b(x, y) * kernels.s(y) * ft(y), x, upper, TOL)?;
        rhs += birth - kernels.s(x) * fx;
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(PdeResidual {
        dfdt,
        rhs,
        residual: (dfdt - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticCase, AnalyticSolution};
    use crate::basis::project_initial;
    use approx::assert_relative_eq;

    #[test]
    fn own_polynomial_has_zero_error() {
        let mesh = Mesh::geometric(10, 1e-3, 15.0).unwrap();
        let s = project_initial(|x| x * (-x).exp(), &mesh, 2, 16).unwrap();
        let own = |x: f64| s.eval(&mesh, x).unwrap();
        assert!(error_continuous(&s, &mesh, own, 16).unwrap() < 1e-15);
        assert!(error_discrete(&s, &mesh, own, &QuadratureRule::gauss(3).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn constant_offset_gives_width() {
        let mesh = Mesh::uniform(4, 1.0).unwrap();
        let s = DgState::from_coefficients(4, 1, vec![1.0, 0.2, 1.0, -0.1, 2.0, 0.0, 0.5, 0.3]).unwrap();
        let shifted = |x: f64| s.eval(&mesh, x).unwrap() + 0.3;
        assert_relative_eq!(error_continuous(&s, &mesh, shifted, 16).unwrap(), 0.3, max_relative = 1e-14);
        let scaled = |x: f64| s.eval(&mesh, x).unwrap() + 0.6;
        assert_relative_eq!(error_continuous(&s, &mesh, scaled, 16).unwrap(), 0.6, max_relative = 1e-14);
    }

    #[test]
    fn midpoint_rule_for_piecewise_constants() {
        let mesh = Mesh::geometric(6, 0.1, 6.0).unwrap();
        let s = DgState::from_coefficients(6, 0, vec![1.0, 0.5, 0.2, 0.1, 0.05, 0.0]).unwrap();
        let reference = |x: f64| (-x).exp();
        let expected: f64 = (0..6)
            .map(|j| mesh.width(j) * (s.cell_average(j) - reference(mesh.pivot(j))).abs())
            .sum();
        let got = error_discrete(&s, &mesh, reference, &QuadratureRule::gauss(1).unwrap()).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-14);
    }

    #[test]
    fn eoc_examples() {
        assert_relative_eq!(eoc(&[4.2e-1, 2.1e-1]).unwrap()[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(eoc(&[1e-2, 2.5e-3]).unwrap()[0], 2.0, max_relative = 1e-12);
        assert!((eoc(&[7.4e-2, 8.0e-3]).unwrap()[0] - 3.21).abs() < 0.005);
        let seq: Vec<f64> = (0..5).map(|i| 3.0 * 0.5f64.powi(3 * i)).collect();
        for s in eoc(&seq).unwrap() {
            assert!((s - 3.0).abs() < 1e-12);
        }
        assert!(eoc(&[1.0]).is_err());
        assert!(eoc(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn self_error_examples() {
        let coarse = Mesh::uniform(2, 1.0).unwrap();
        let fine = Mesh::uniform(4, 1.0).unwrap();
        let a = DgState::from_coefficients(2, 0, vec![1.0, 2.0]).unwrap();
        let b = DgState::from_coefficients(4, 0, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        assert!(self_error(&a, &coarse, &b, &fine, 16).unwrap() < 1e-15);
        let c = DgState::from_coefficients(4, 0, vec![1.0, 1.0, 2.0, 2.5]).unwrap();
        assert_relative_eq!(self_error(&a, &coarse, &c, &fine, 16).unwrap(), 0.125, max_relative = 1e-14);
        // A longer fine mesh counts the coarse state as zero past x = 1.
        let longer = Mesh::uniform(4, 2.0).unwrap();
        let d = DgState::from_coefficients(4, 0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(self_error(&a, &coarse, &d, &longer, 16).unwrap(), 3.5, max_relative = 1e-14);
        assert!(matches!(self_error(&d, &longer, &a, &coarse, 16), Err(Error::MismatchedDomains(_))));
    }

    #[test]
    fn moments_of_projected_initial_data() {
        let mesh = Mesh::geometric(30, 1e-3, 30.0).unwrap();
        let s = project_initial(|x| x * (-x).exp(), &mesh, 2, 16).unwrap();
        let m = moments(&s, &mesh, 5, 16).unwrap();
        // ∫ x^{p-1} x e^{-x} dx = p!
        for (p, expected) in [(0, 1.0), (1, 1.0), (2, 2.0), (3, 6.0)] {
            assert_relative_eq!(m[p], expected, max_relative = 1e-6);
        }
        assert_relative_eq!(m[1], s.mass(&mesh), max_relative = 1e-13);
        let zero = moments(&DgState::zeros(30, 2), &mesh, 5, 16).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moment_report_errors_and_aggregation_degree() {
        let r = MomentReport::new(1.0, vec![0.5, 1.0], vec![Some(0.4), Some(1.0)], Some(1.0));
        assert_relative_eq!(r.relative_errors[0].unwrap(), 0.25, max_relative = 1e-14);
        assert_eq!(r.relative_errors[1], Some(0.0));
        assert_relative_eq!(r.i_agg.unwrap(), 0.5);
        let none = MomentReport::new(1.0, vec![0.5, 1.0, 3.0], vec![None], None);
        assert_eq!(none.relative_errors, vec![None, None, None]);
        assert_eq!(none.reference.len(), 3);
    }

    #[test]
    fn eoc_table_rendering() {
        let t = EocTable::new("sum_agg", 1, &[15, 30, 60], &[1e-1, 2.5e-2, 6.25e-3], Some(&[1e-2, 1.25e-3, 1.5625e-4])).unwrap();
        assert!((t.finest_eoc_h().unwrap() - 2.0).abs() < 1e-12);
        assert!((t.finest_eoc_hd().unwrap() - 3.0).abs() < 1e-12);
        let md = t.to_markdown();
        assert!(md.contains("| 30 | 2.50e-2 | 2.00 | 1.25e-3 | 3.00 |"), "{md}");
        let csv = t.to_csv();
        assert!(csv.starts_with("k,N,e_h,eoc_h,e_hd,eoc_hd\r\n1,15,1.0000000000000001e-1,,"), "{csv}");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn adaptive_quadrature_accuracy() {
        let v = adaptive_integrate(&|x| (-x).exp() * x.sin(), 0.0, 200.0, 1e-12).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-11);
        let w = adaptive_integrate(&|x| x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(w, 2.0 / 3.0, max_relative = 1e-9);
    }

    fn residual_of(case: AnalyticCase, t: f64, x: f64) -> f64 {
        let sol = AnalyticSolution::new(case);
        let kernels = KernelSet::from_id(case.kernel_id(), None, None).unwrap();
        pde_residual(&|t, x| sol.number_density(t, x), &kernels, t, x, RESIDUAL_UPPER)
            .unwrap()
            .residual
    }

    #[test]
    fn steady_and_linear_breakage_residuals() {
        for &(t, x) in &[(0.5, 0.3), (2.0, 1.0), (7.0, 4.0)] {
            assert!(residual_of(AnalyticCase::CoupledSteady, t, x) <= 1e-8);
        }
        assert!(residual_of(AnalyticCase::BinLinBrk, 0.5, 1.0) <= 1e-6);
    }

    #[test]
    fn perturbed_solution_is_detected() {
        let sol = AnalyticSolution::new(AnalyticCase::BinLinBrk);
        let kernels = KernelSet::from_id("binlin_brk", None, None).unwrap();
        let perturbed = |t: f64, x: f64| Ok(sol.number_density(t, x)? * (1.0 + 0.01 * x));
        let r = pde_residual(&perturbed, &kernels, 0.5, 1.0, RESIDUAL_UPPER).unwrap();
        assert!(r.residual > 1e-3, "{r:?}");
    }
}
