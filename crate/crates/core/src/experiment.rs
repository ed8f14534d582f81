//! Runs of the benchmark cases and the convergence batteries built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{DgState, PROJECTION_ORDER};
use crate::cases::{CaseId, CaseSpec, NormalInitial};
use crate::diagnostics::{moments, self_error, EocTable, ErrorReport, MomentReport, NORM_ORDER};
use crate::limiter::LimiterReport;
use crate::mesh::{Mesh, QuadratureRule};
use crate::scheme::DgScheme;
use crate::timeloop::{advance_with, initialize, RunConfig, RunOutcome, StepInfo};
use crate::{Error, Result};

/// Highest moment order in reports.
pub const MOMENT_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub case: CaseId,
    #[serde(rename = "N")]
    pub cells: usize,
    pub k: usize,
    /// Gauss points per cell, `k + 1` when absent.
    #[serde(rename = "Q", default)]
    pub order: Option<usize>,
    pub run: RunConfig,
    #[serde(default)]
    pub normal: Option<NormalInitial>,
}

impl RunSpec {
    pub fn new(case: CaseId, cells: usize, k: usize, run: RunConfig) -> Self {
        Self {
            case,
            cells,
            k,
            order: None,
            run,
            normal: None,
        }
    }

    pub fn quadrature_order(&self) -> usize {
        self.order.unwrap_or(self.k + 1)
    }

    pub fn case_spec(&self) -> Result<CaseSpec> {
        let spec = CaseSpec::new(self.case);
        match self.normal {
            Some(n) => spec.with_normal(n),
            None => Ok(spec),
        }
    }

    pub fn build(&self) -> Result<(CaseSpec, DgScheme)> {
        if self.cells == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        let case = self.case_spec()?;
        let mesh = case.mesh(self.cells)?;
        let rule = QuadratureRule::gauss(self.quadrature_order())?;
        let scheme = DgScheme::new(mesh, rule, case.kernels(), self.k)?;
        Ok((case, scheme))
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub spec: RunSpec,
    pub mesh: Mesh,
    pub rule: QuadratureRule,
    pub initial: DgState,
    pub initial_limiter: Option<LimiterReport>,
    pub outcome: RunOutcome,
    /// Projection error of the initial data, when an analytic solution exists.
    pub initial_errors: Option<ErrorReport>,
    /// Against the analytic solution at `t_end`, when one exists.
    pub errors: Option<ErrorReport>,
    pub moments: MomentReport,
}

pub fn run(spec: &RunSpec) -> Result<RunResult> {
    run_with(spec, |_| {})
}

pub fn run_with(spec: &RunSpec, observer: impl FnMut(&StepInfo<'_>)) -> Result<RunResult> {
    let (case, scheme) = spec.build()?;
    let limiter = spec.run.limiter.then_some(spec.run.limiter_mode);
    let (initial, initial_limiter) = initialize(|x| case.initial(x), &scheme, limiter, PROJECTION_ORDER)?;
    let outcome = advance_with(&scheme, initial.clone(), &spec.run, observer)?;
    let mesh = scheme.mesh().clone();
    let rule = scheme.rule().clone();
    let t = outcome.state.time;

    let errors_at = |state: &DgState| -> Result<Option<ErrorReport>> {
        let Some(sol) = case.solution() else { return Ok(None) };
        let t = state.time;
        sol.mass_density(t, 1.0)?;
        let report = ErrorReport::new(state, &mesh, |x| sol.mass_density(t, x).unwrap_or(f64::NAN), &rule, NORM_ORDER)?;
        Ok(Some(report))
    };
    let initial_errors = errors_at(&initial)?;
    let errors = errors_at(&outcome.state)?;

    let initial_moments = moments(&initial, &mesh, MOMENT_ORDER, NORM_ORDER)?;
    let m = moments(&outcome.state, &mesh, MOMENT_ORDER, NORM_ORDER)?;
    let mut reference = vec![None; MOMENT_ORDER + 1];
    if let Some(sol) = case.solution() {
        reference[0] = sol.m0(t);
    }
    // The scheme's own ledger: initial mass minus what left through x = L.
    let outflow = outcome.trace.mass_ledger.last().map_or(0.0, |s| s.outflow);
    reference[1] = Some(initial.mass(&mesh) - outflow);
    let moments = MomentReport::new(t, m, reference, Some(initial_moments[0]));

    Ok(RunResult {
        spec: spec.clone(),
        mesh,
        rule,
        initial,
        initial_limiter,
        outcome,
        initial_errors,
        errors,
        moments,
    })
}

/// EOC table for one case and degree over the given mesh sizes.
///
/// Cases with an analytic solution report `e_h` and `e_hd`; case 3 reports the
/// self-convergence error `||n_N - n_{2N}||`, which needs one extra run at
/// twice the finest `N`.
pub fn eoc_battery(case: CaseId, k: usize, cells: &[usize], run_config: &RunConfig, order: Option<usize>) -> Result<EocTable> {
    if cells.len() < 2 {
        return Err(Error::InvalidArgument("an EOC battery needs at least two mesh sizes".into()));
    }
    let spec_for = |n: usize| RunSpec {
        order,
        ..RunSpec::new(case, n, k, run_config.clone())
    };
    let title = format!("case {case}");
    if CaseSpec::new(case).analytic.is_some() {
        let results: Vec<RunResult> = cells.par_iter().map(|&n| run(&spec_for(n))).collect::<Result<_>>()?;
        let e_h: Vec<f64> = results.iter().map(|r| r.errors.as_ref().map_or(f64::NAN, |e| e.e_h)).collect();
        let e_hd: Vec<f64> = results.iter().map(|r| r.errors.as_ref().map_or(f64::NAN, |e| e.e_hd)).collect();
        EocTable::new(title, k, cells, &e_h, Some(&e_hd))
    } else {
        let mut all: Vec<usize> = cells.to_vec();
        all.push(2 * cells[cells.len() - 1]);
        let results: Vec<RunResult> = all.par_iter().map(|&n| run(&spec_for(n))).collect::<Result<_>>()?;
        let e_h: Vec<f64> = results
            .windows(2)
            .map(|w| self_error(&w[0].outcome.state, &w[0].mesh, &w[1].outcome.state, &w[1].mesh, NORM_ORDER))
            .collect::<Result<_>>()?;
        EocTable::new(format!("{title} (self-convergence)"), k, cells, &e_h, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeloop::TimeMethod;

    #[test]
    fn short_run_reports_errors_and_moments() {
        let mut config = RunConfig::new(1e-3, 1e-4);
        config.method = TimeMethod::SspRk2;
        let r = run(&RunSpec::new(CaseId::CoupledSteady, 15, 1, config)).unwrap();
        assert_eq!(r.outcome.state.time, 1e-3);
        let e = r.errors.unwrap();
        assert!(e.e_h > 0.0 && e.e_h < 0.5, "{e:?}");
        assert!(r.moments.relative_errors[1].unwrap() < 1e-13);
        assert!((r.moments.moments[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn product_kernel_past_gelation_is_rejected() {
        let config = RunConfig::new(1.5, 0.5);
        let err = run(&RunSpec::new(CaseId::ProdAgg, 15, 0, config)).unwrap_err();
        assert!(matches!(err, Error::Validity { .. }));
    }

    #[test]
    fn battery_needs_two_sizes() {
        let config = RunConfig::new(1e-3, 1e-4);
        assert!(eoc_battery(CaseId::SumAgg, 0, &[15], &config, None).is_err());
    }
}
