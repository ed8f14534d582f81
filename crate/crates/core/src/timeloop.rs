//! Time integration: projection of the initial data, SSP Runge-Kutta stages
//! built from forward Euler steps, the scaling limiter after every stage, and
//! time-step halving whenever a cell average fails the positivity check.
//!
//! A step is accepted when no cell average is negative and every cell that
//! was positive before the step is still positive. Cells whose average
//! underflowed to exactly zero (the far tail of a geometric mesh) may stay at
//! zero or fill up from the left.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{project_initial, DgState};
use crate::limiter::{limit_in_place, LimiterMode, LimiterReport};
use crate::scheme::{euler_update, DgScheme, RhsEvaluation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMethod {
    #[default]
    Euler,
    SspRk2,
    SspRk3,
}

impl TimeMethod {
    pub fn stages(self) -> usize {
        ssp_stage_weights(self).len()
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeMethod::Euler => "euler",
            TimeMethod::SspRk2 => "ssp_rk2",
            TimeMethod::SspRk3 => "ssp_rk3",
        }
    }
}

impl FromStr for TimeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" | "1" | "rk1" => Ok(TimeMethod::Euler),
            "ssp_rk2" | "rk2" | "2" => Ok(TimeMethod::SspRk2),
            "ssp_rk3" | "rk3" | "3" => Ok(TimeMethod::SspRk3),
            other => Err(Error::InvalidArgument(format!("unknown time method '{other}'"))),
        }
    }
}

/// Shu-Osher rows: the first stage is `E(u^n)`; row `[a, b]` forms
/// `a u^n + b E(u^{(s-1)})`, with `E` one forward Euler step.
pub fn ssp_stage_weights(method: TimeMethod) -> &'static [&'static [f64]] {
    match method {
        TimeMethod::Euler => &[&[1.0]],
        TimeMethod::SspRk2 => &[&[1.0], &[0.5, 0.5]],
        TimeMethod::SspRk3 => &[&[1.0], &[0.75, 0.25], &[1.0 / 3.0, 2.0 / 3.0]],
    }
}

fn default_safety() -> f64 {
    0.99
}

fn default_halvings() -> u32 {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    /// Initial step; also the cap when the CFL bound is in use.
    pub dt: f64,
    #[serde(default)]
    pub method: TimeMethod,
    #[serde(default)]
    pub limiter: bool,
    #[serde(default)]
    pub limiter_mode: LimiterMode,
    #[serde(default)]
    pub use_cfl_bound: bool,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
    /// Snapshot times in `(0, t_end]`; `t_end` is always included.
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// Double `Δt` (up to `dt`) after this many steps without halving.
    /// Off by default: after a halving the step stays reduced.
    #[serde(default)]
    pub regrow_after: Option<usize>,
}

impl RunConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            method: TimeMethod::Euler,
            limiter: true,
            limiter_mode: LimiterMode::GaussOnly,
            use_cfl_bound: false,
            cfl_safety: default_safety(),
            max_halvings: default_halvings(),
            output_times: Vec::new(),
            regrow_after: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.max_halvings < 1 {
            return bad("max_halvings must be at least 1");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if self.output_times.iter().any(|&t| !(t > 0.0 && t <= self.t_end)) {
            return bad("output_times must lie in (0, t_end]");
        }
        if self.regrow_after == Some(0) {
            return bad("regrow_after must be positive");
        }
        Ok(())
    }

    fn targets(&self, start: f64) -> Vec<f64> {
        let mut t: Vec<f64> = self.output_times.iter().copied().filter(|&t| t > start).collect();
        t.push(self.t_end);
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalvingEvent {
    pub time: f64,
    pub old_dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSample {
    pub time: f64,
    pub mass: f64,
    /// `∫_0^t F_{N+1/2} ds`, mass that has left the domain.
    pub outflow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimiterSnapshot {
    pub time: f64,
    /// Cells scaled at any stage since the previous output time.
    pub touched: usize,
    pub min_theta: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunTrace {
    pub steps: usize,
    pub halvings: Vec<HalvingEvent>,
    pub limiter: Vec<LimiterSnapshot>,
    pub mass_ledger: Vec<MassSample>,
    pub final_dt: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: DgState,
    /// States at the output times, `t_end` last.
    pub snapshots: Vec<DgState>,
    pub trace: RunTrace,
}

/// What an observer sees after every accepted step.
#[derive(Debug)]
pub struct StepInfo<'a> {
    pub step: usize,
    pub dt: f64,
    pub state: &'a DgState,
}

/// Projects `n0`, checks that the averages resolve its support and applies
/// the limiter once.
pub fn initialize(
    n0: impl Fn(f64) -> f64,
    scheme: &DgScheme,
    limiter: Option<LimiterMode>,
    projection_order: usize,
) -> Result<(DgState, Option<LimiterReport>)> {
    let mut state = project_initial(n0, scheme.mesh(), scheme.degree(), projection_order)?;
    check_initial_averages(&state)?;
    let report = limiter.map(|mode| limit_in_place(&mut state, scheme.rule(), mode));
    Ok((state, report))
}

/// Averages must be nonnegative, not all zero, and zero only in the
/// underflowed tails at either end of the mesh.
fn check_initial_averages(state: &DgState) -> Result<()> {
    let avgs: Vec<f64> = state.averages().collect();
    if let Some((cell, &average)) = avgs.iter().enumerate().find(|(_, a)| !(**a >= 0.0)) {
        return Err(Error::UnresolvableInitialData { cell, average });
    }
    let first = avgs.iter().position(|&a| a > 0.0);
    let last = avgs.iter().rposition(|&a| a > 0.0);
    match (first, last) {
        (Some(first), Some(last)) => {
            if let Some(offset) = avgs[first..=last].iter().position(|&a| a == 0.0) {
                return Err(Error::UnresolvableInitialData {
                    cell: first + offset,
                    average: 0.0,
                });
            }
            Ok(())
        }
        _ => Err(Error::UnresolvableInitialData { cell: 0, average: 0.0 }),
    }
}

pub fn advance(scheme: &DgScheme, state: DgState, config: &RunConfig) -> Result<RunOutcome> {
    advance_with(scheme, state, config, |_| {})
}

/// Advances to `config.t_end`, calling `observer` after every accepted step.
pub fn advance_with(
    scheme: &DgScheme,
    mut state: DgState,
    config: &RunConfig,
    mut observer: impl FnMut(&StepInfo<'_>),
) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let limiter = config.limiter.then_some(config.limiter_mode);
    let mut trace = RunTrace::default();
    let mut snapshots = Vec::new();
    let mut outflow = 0.0;
    trace.mass_ledger.push(MassSample {
        time: state.time,
        mass: state.mass(scheme.mesh()),
        outflow,
    });

    let mut dt_current = config.dt;
    let mut clean_steps = 0usize;
    let mut touched = vec![false; state.num_cells()];
    let mut min_theta: f64 = 1.0;

    for target in config.targets(state.time) {
        while state.time < target {
            let rhs0 = assemble_or_diverged(scheme, &state)?;
            let rhs0 = rhs0.ok_or(Error::DivergedState { cell: 0, point: 0 })?;
            let mut dt = dt_current;
            if config.use_cfl_bound {
                dt = dt.min(config.cfl_safety * scheme.cfl_bound(&state, &rhs0, true));
            }
            let mut hits = false;
            if state.time + dt >= target - 1e-12 * dt {
                dt = target - state.time;
                hits = true;
            }
            let mut halvings = 0u32;
            let accepted = loop {
                match attempt_step(scheme, &state, &rhs0, dt, config.method, limiter)? {
                    Some(result) => break result,
                    None => {
                        trace.halvings.push(HalvingEvent {
                            time: state.time,
                            old_dt: dt,
                        });
                        halvings += 1;
                        if halvings > config.max_halvings {
                            return Err(Error::NonConvergence {
                                time: state.time,
                                halvings: (halvings - 1) as usize,
                            });
                        }
                        dt *= 0.5;
                        hits = false;
                        dt_current = dt_current.min(dt);
                    }
                }
            };
            let (mut next, step_outflow, reports) = accepted;
            next.time = if hits { target } else { state.time + dt };
            outflow += step_outflow;
            for r in &reports {
                min_theta = min_theta.min(r.min_theta());
                for (flag, theta) in touched.iter_mut().zip(&r.thetas) {
                    *flag |= *theta < 1.0;
                }
            }
            state = next;
            trace.steps += 1;
            trace.mass_ledger.push(MassSample {
                time: state.time,
                mass: state.mass(scheme.mesh()),
                outflow,
            });
            observer(&StepInfo {
                step: trace.steps,
                dt,
                state: &state,
            });

            if halvings == 0 {
                clean_steps += 1;
                if let Some(n) = config.regrow_after {
                    if clean_steps >= n && dt_current < config.dt {
                        dt_current = (2.0 * dt_current).min(config.dt);
                        clean_steps = 0;
                    }
                }
            } else {
                clean_steps = 0;
            }
        }
        trace.limiter.push(LimiterSnapshot {
            time: state.time,
            touched: touched.iter().filter(|&&t| t).count(),
            min_theta,
        });
        touched.iter_mut().for_each(|t| *t = false);
        min_theta = 1.0;
        snapshots.push(state.clone());
    }
    trace.final_dt = dt_current;
    trace.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RunOutcome {
        state,
        snapshots,
        trace,
    })
}

fn assemble_or_diverged(scheme: &DgScheme, state: &DgState) -> Result<Option<RhsEvaluation>> {
    match scheme.assemble_rhs(state) {
        Ok(rhs) => Ok(Some(rhs)),
        Err(Error::DivergedState { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

type Accepted = (DgState, f64, Vec<LimiterReport>);

/// One SSP step of size `dt`. `None` when a stage fails the positivity check
/// or the right-hand side diverges.
fn attempt_step(
    scheme: &DgScheme,
    state: &DgState,
    rhs0: &RhsEvaluation,
    dt: f64,
    method: TimeMethod,
    limiter: Option<LimiterMode>,
) -> Result<Option<Accepted>> {
    let mut reports = Vec::new();
    let mut stage = state.clone();
    let mut stage_outflow = 0.0;
    for (s, row) in ssp_stage_weights(method).iter().enumerate() {
        let owned;
        let rhs = if s == 0 {
            rhs0
        } else {
            match assemble_or_diverged(scheme, &stage)? {
                Some(r) => {
                    owned = r;
                    &owned
                }
                None => return Ok(None),
            }
        };
        let euler = euler_update(&stage, rhs, dt);
        let euler_outflow = stage_outflow + dt * rhs.outflow();
        (stage, stage_outflow) = match row {
            [b] => (scale(&euler, *b), b * euler_outflow),
            [a, b] => (DgState::convex_combination(*a, state, *b, &euler), b * euler_outflow),
            _ => unreachable!("stage rows have one or two weights"),
        };
        if let Some(mode) = limiter {
            let report = limit_in_place(&mut stage, scheme.rule(), mode);
            if !report.skipped.is_empty() {
                return Ok(None);
            }
            reports.push(report);
        }
        if !positivity_kept(state, &stage) {
            return Ok(None);
        }
    }
    Ok(Some((stage, stage_outflow, reports)))
}

fn scale(state: &DgState, factor: f64) -> DgState {
    if factor == 1.0 {
        return state.clone();
    }
    DgState::convex_combination(factor, state, 0.0, state)
}

/// No negative or non-finite average, and no positive average lost.
fn positivity_kept(before: &DgState, after: &DgState) -> bool {
    before
        .averages()
        .zip(after.averages())
        .all(|(b, a)| if b > 0.0 { a > 0.0 } else { a >= 0.0 } && a.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BuiltinKernel, KernelSet};
    use crate::limiter::limit_state;
    use crate::mesh::{Mesh, QuadratureRule};
    use approx::assert_relative_eq;

    fn scheme(mesh: Mesh, k: usize, kind: BuiltinKernel) -> DgScheme {
        DgScheme::new(mesh, QuadratureRule::gauss(k + 1).unwrap(), KernelSet::builtin(kind), k).unwrap()
    }

    #[test]
    fn stage_rows_are_convex() {
        assert_eq!(ssp_stage_weights(TimeMethod::Euler), &[&[1.0][..]]);
        for m in [TimeMethod::Euler, TimeMethod::SspRk2, TimeMethod::SspRk3] {
            for row in ssp_stage_weights(m) {
                assert!(row.iter().all(|&w| w >= 0.0));
                assert_relative_eq!(row.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
            }
        }
        assert_eq!(TimeMethod::SspRk3.stages(), 3);
        assert!("rk4".parse::<TimeMethod>().is_err());
        assert_eq!("ssp_rk2".parse::<TimeMethod>().unwrap(), TimeMethod::SspRk2);
    }

    /// Applies the stage table to `y' = -y`.
    fn integrate_decay(method: TimeMethod, dt: f64, t_end: f64) -> f64 {
        let steps = (t_end / dt).round() as usize;
        let mut y = 1.0;
        for _ in 0..steps {
            let y0 = y;
            let mut stage = y0;
            for row in ssp_stage_weights(method) {
                let euler = stage - dt * stage;
                stage = match row {
                    [b] => b * euler,
                    [a, b] => a * y0 + b * euler,
                    _ => unreachable!(),
                };
            }
            y = stage;
        }
        y
    }

    #[test]
    fn ssp_rk3_is_third_order() {
        let exact = (-1.0f64).exp();
        let e1 = (integrate_decay(TimeMethod::SspRk3, 0.1, 1.0) - exact).abs();
        let e2 = (integrate_decay(TimeMethod::SspRk3, 0.05, 1.0) - exact).abs();
        let slope = (e1 / e2).log2();
        assert!((2.8..=3.2).contains(&slope), "{slope}");
        let r1 = (integrate_decay(TimeMethod::SspRk2, 0.1, 1.0) - exact).abs();
        let r2 = (integrate_decay(TimeMethod::SspRk2, 0.05, 1.0) - exact).abs();
        assert!(((r1 / r2).log2() - 2.0).abs() < 0.2);
    }

    #[test]
    fn constant_initial_data_projects_exactly() {
        let s = scheme(Mesh::uniform(5, 2.0).unwrap(), 2, BuiltinKernel::BinLinBrk);
        let (state, report) = initialize(|_| 1.0, &s, Some(LimiterMode::GaussOnly), 16).unwrap();
        for j in 0..5 {
            assert_relative_eq!(state.cell(j)[0], 1.0, max_relative = 1e-14);
            assert!(state.cell(j)[1..].iter().all(|c| c.abs() < 1e-14));
        }
        assert_eq!(report.unwrap().touched, 0);
    }

    #[test]
    fn zero_plateau_is_rejected() {
        let s = scheme(Mesh::uniform(6, 6.0).unwrap(), 1, BuiltinKernel::BinLinBrk);
        let n0 = |x: f64| if (2.0..4.0).contains(&x) { 0.0 } else { 1.0 };
        assert!(matches!(
            initialize(n0, &s, None, 16),
            Err(Error::UnresolvableInitialData { cell: 2, .. })
        ));
        assert!(initialize(|_| 0.0, &s, None, 16).is_err());
    }

    #[test]
    fn resolved_initial_data_is_positive() {
        let s = scheme(Mesh::geometric(30, 1e-3, 30.0).unwrap(), 2, BuiltinKernel::SumAgg);
        let (state, _) = initialize(|x| x * (-x).exp(), &s, Some(LimiterMode::GaussOnly), 16).unwrap();
        let positive = state.averages().take_while(|&a| a > 0.0).count();
        assert!(positive >= 20);
        assert!(state.averages().skip(positive).all(|a| a == 0.0));
    }

    #[test]
    fn single_euler_step_matches_composition() {
        let mesh = Mesh::geometric(12, 1e-3, 15.0).unwrap();
        let s = scheme(mesh, 1, BuiltinKernel::Coupled);
        let (state, _) = initialize(|x| x * (-x).exp(), &s, Some(LimiterMode::GaussOnly), 16).unwrap();
        let mut config = RunConfig::new(1e-3, 1e-3);
        config.limiter = true;
        let out = advance(&s, state.clone(), &config).unwrap();
        let rhs = s.assemble_rhs(&state).unwrap();
        let (expected, _) = limit_state(&euler_update(&state, &rhs, 1e-3), s.rule(), LimiterMode::GaussOnly);
        assert_eq!(out.trace.steps, 1);
        assert_eq!(out.state.coefficients(), expected.coefficients());
        assert_eq!(out.state.time, 1e-3);
    }

    #[test]
    fn oversized_step_is_halved() {
        let mesh = Mesh::uniform(2, 1.0).unwrap();
        let s = scheme(mesh, 0, BuiltinKernel::BinLinBrk);
        let state = DgState::from_coefficients(2, 0, vec![1.0, 1.0]).unwrap();
        let bound = s.cfl_max_dt(&state).unwrap();
        let config = RunConfig::new(20.0 * bound, 10.0 * bound);
        let out = advance(&s, state, &config).unwrap();
        assert!(!out.trace.halvings.is_empty());
        assert!(out.state.averages().all(|a| a > 0.0));
        assert_relative_eq!(out.state.time, 20.0 * bound);
        let e = out.trace.halvings[0];
        assert_eq!(e.old_dt, 10.0 * bound);
        if out.trace.halvings.len() > 1 && out.trace.halvings[1].time == e.time {
            assert_eq!(out.trace.halvings[1].old_dt, e.old_dt / 2.0);
        }
    }

    #[test]
    fn halving_limit_reports_nonconvergence() {
        let mesh = Mesh::uniform(2, 1.0).unwrap();
        let s = scheme(mesh, 0, BuiltinKernel::BinLinBrk);
        let state = DgState::from_coefficients(2, 0, vec![1.0, 1.0]).unwrap();
        let mut config = RunConfig::new(1e6, 1e6);
        config.max_halvings = 2;
        assert!(matches!(advance(&s, state, &config), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn output_times_align_steps() {
        let mesh = Mesh::geometric(8, 1e-3, 12.0).unwrap();
        let s = scheme(mesh, 1, BuiltinKernel::BinQuadBrk);
        let (state, _) = initialize(|x| x * (-x).exp(), &s, None, 16).unwrap();
        let mut config = RunConfig::new(0.01, 0.003);
        config.output_times = vec![0.005, 0.01];
        config.method = TimeMethod::SspRk3;
        let out = advance(&s, state, &config).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.005, 0.01]);
        assert_eq!(out.trace.limiter.len(), 2);
        assert_eq!(out.trace.mass_ledger.len(), out.trace.steps + 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let mesh = Mesh::geometric(10, 1e-3, 20.0).unwrap();
        let s = scheme(mesh, 2, BuiltinKernel::Coupled);
        let (state, _) = initialize(|x| x * (-x).exp(), &s, Some(LimiterMode::GaussOnly), 16).unwrap();
        let mut config = RunConfig::new(0.05, 0.01);
        config.method = TimeMethod::SspRk2;
        let a = advance(&s, state.clone(), &config).unwrap();
        let b = advance(&s, state, &config).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn step_stays_reduced_without_regrowth() {
        let mesh = Mesh::uniform(2, 1.0).unwrap();
        let s = scheme(mesh, 0, BuiltinKernel::BinLinBrk);
        let state = DgState::from_coefficients(2, 0, vec![1.0, 1.0]).unwrap();
        let bound = s.cfl_max_dt(&state).unwrap();
        let mut config = RunConfig::new(100.0 * bound, 4.0 * bound);
        config.regrow_after = Some(3);
        let out = advance(&s, state.clone(), &config).unwrap();
        assert!(!out.trace.halvings.is_empty());
        config.regrow_after = None;
        let fixed = advance(&s, state, &config).unwrap();
        assert!(fixed.trace.final_dt < config.dt);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig::new(1.0, 0.1);
        c.max_halvings = 0;
        assert!(c.validate().is_err());
        assert!(RunConfig::new(-1.0, 0.1).validate().is_err());
        assert!(RunConfig::new(1.0, 0.0).validate().is_err());
        assert!("rk4".parse::<TimeMethod>().is_err());
    }
}
