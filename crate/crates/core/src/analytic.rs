//! Closed-form reference solutions of the benchmark problems.
//!
//! All formulas are for the number density `f(t, x)`; the solver's mass
//! density is `n = x f`. Every case starts from total mass one.
//!
//! | case | kernels | `f(t, x)` |
//! |---|---|---|
//! | `const_agg` | `K = 1` | `M0² e^{-M0 x}`, `M0 = 2 / (2 + t)` |
//! | `sum_agg` | `K = x + y` | `(1 - T) e^{-(1+T) x} I1(2x√T) / (x√T)`, `T = 1 - e^{-t}` |
//! | `prod_agg` | `K = x y` | `e^{-(1+t) x} I1(2x√t) / (x² √t)`, `t <= 1` |
//! | `binlin_brk` | `b = 2/y`, `S = x` | `(1 + t)² e^{-(1+t) x}` |
//! | `binquad_brk` | `b = 2/y`, `S = x²` | `e^{-x - t x²} (1 + 2t(1 + x))` |
//! | `coupled_steady` | `K = 1`, `b = 2/y`, `S = x/2` | `e^{-x}` |
//! | `coupled_transient` | same | see [`coupled_transient`] |

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticCase {
    ConstAgg,
    SumAgg,
    ProdAgg,
    BinLinBrk,
    BinQuadBrk,
    CoupledSteady,
    CoupledTransient,
}

impl AnalyticCase {
    pub const ALL: [AnalyticCase; 7] = [
        AnalyticCase::ConstAgg,
        AnalyticCase::SumAgg,
        AnalyticCase::ProdAgg,
        AnalyticCase::BinLinBrk,
        AnalyticCase::BinQuadBrk,
        AnalyticCase::CoupledSteady,
        AnalyticCase::CoupledTransient,
    ];

    pub fn parse(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.id() == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no analytic solution '{id}'")))
    }

    pub fn id(self) -> &'static str {
        match self {
            AnalyticCase::ConstAgg => "const_agg",
            AnalyticCase::SumAgg => "sum_agg",
            AnalyticCase::ProdAgg => "prod_agg",
            AnalyticCase::BinLinBrk => "binlin_brk",
            AnalyticCase::BinQuadBrk => "binquad_brk",
            AnalyticCase::CoupledSteady => "coupled_steady",
            AnalyticCase::CoupledTransient => "coupled_transient",
        }
    }

    /// Kernel catalog id the solution belongs to.
    pub fn kernel_id(self) -> &'static str {
        match self {
            AnalyticCase::CoupledSteady | AnalyticCase::CoupledTransient => "coupled",
            other => other.id(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSolution {
    case: AnalyticCase,
}

impl AnalyticSolution {
    pub fn new(case: AnalyticCase) -> Self {
        Self { case }
    }

    pub fn case(&self) -> AnalyticCase {
        self.case
    }

    /// Last time at which the formula holds (gelation for the product kernel).
    pub fn validity(&self) -> Option<f64> {
        match self.case {
            AnalyticCase::ProdAgg => Some(1.0),
            _ => None,
        }
    }

    fn check(&self, t: f64, x: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) || !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "analytic solution needs t >= 0 and x > 0, got t = {t}, x = {x}"
            )));
        }
        if let Some(limit) = self.validity() {
            if t > limit {
                return Err(Error::Validity {
                    case: self.case.id().to_string(),
                    t,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Number density `f(t, x)`.
    pub fn number_density(&self, t: f64, x: f64) -> Result<f64> {
        self.check(t, x)?;
        Ok(match self.case {
            AnalyticCase::ConstAgg => {
                let m0 = 2.0 / (2.0 + t);
                m0 * m0 * (-m0 * x).exp()
            }
            AnalyticCase::SumAgg => sum_kernel(t, x),
            AnalyticCase::ProdAgg => product_kernel(t, x),
            AnalyticCase::BinLinBrk => (1.0 + t).powi(2) * (-x * (1.0 + t)).exp(),
            AnalyticCase::BinQuadBrk => (-x - t * x * x).exp() * (1.0 + 2.0 * t * (1.0 + x)),
            AnalyticCase::CoupledSteady => (-x).exp(),
            AnalyticCase::CoupledTransient => coupled_transient(t, x),
        })
    }

    /// Mass density `n(t, x) = x f(t, x)`.
    pub fn mass_density(&self, t: f64, x: f64) -> Result<f64> {
        Ok(x * self.number_density(t, x)?)
    }

    /// Initial mass density.
    pub fn initial(&self, x: f64) -> Result<f64> {
        self.mass_density(0.0, x)
    }

    /// Zeroth moment `M0(t)` where a closed form is known.
    pub fn m0(&self, t: f64) -> Option<f64> {
        if t < 0.0 || self.validity().is_some_and(|l| t > l) {
            return None;
        }
        Some(match self.case {
            AnalyticCase::ConstAgg => 2.0 / (2.0 + t),
            AnalyticCase::SumAgg => (-t).exp(),
            // f(0, x) = e^{-x} / x has no finite zeroth moment.
            AnalyticCase::ProdAgg => return None,
            AnalyticCase::BinLinBrk => 1.0 + t,
            AnalyticCase::BinQuadBrk => {
                // 1 + 2t ∫_0^∞ e^{-x - t x²} dx
                if t == 0.0 {
                    1.0
                } else {
                    let y = 0.5 / t.sqrt();
                    1.0 + 2.0 * t * (std::f64::consts::PI / t).sqrt() * 0.5 * erfcx(y)
                }
            }
            AnalyticCase::CoupledSteady | AnalyticCase::CoupledTransient => 1.0,
        })
    }

    /// Exponential decay rate of `f(t, x)` as `x -> ∞`.
    pub fn tail_rate(&self, t: f64) -> f64 {
        match self.case {
            AnalyticCase::ConstAgg => 2.0 / (2.0 + t),
            AnalyticCase::SumAgg => {
                let tt = -(-t).exp_m1();
                (1.0 - tt.sqrt()).powi(2)
            }
            AnalyticCase::ProdAgg => (1.0 - t.sqrt()).powi(2),
            AnalyticCase::BinLinBrk => 1.0 + t,
            AnalyticCase::BinQuadBrk | AnalyticCase::CoupledSteady | AnalyticCase::CoupledTransient => 1.0,
        }
    }

    /// Point beyond which `f(t, ·)` is negligible, at least `200`.
    pub fn truncation(&self, t: f64) -> f64 {
        let rate = self.tail_rate(t);
        if rate > 0.0 {
            (200.0 / rate).clamp(200.0, 1e7)
        } else {
            1e7
        }
    }

    /// First moment (total mass), conserved inside the validity window.
    pub fn m1(&self, t: f64) -> Option<f64> {
        (t >= 0.0 && !self.validity().is_some_and(|l| t > l)).then_some(1.0)
    }
}

/// `e^{y²} erfc(y)` for `y >= 0`.
fn erfcx(y: f64) -> f64 {
    if y < 25.0 {
        (y * y).exp() * libm::erfc(y)
    } else {
        // Asymptotic series, next term below 1e-17 relative.
        let inv = 1.0 / (2.0 * y * y);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..6 {
            term *= -((2 * k - 1) as f64) * inv;
            sum += term;
        }
        sum / (y * std::f64::consts::PI.sqrt())
    }
}

/// `e^{-z} I1(z)` for `z >= 0`.
///
/// Power series below `z = 30` (all terms positive), Hankel's asymptotic
/// expansion above.
pub fn bessel_i1_scaled(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(Error::InvalidArgument(format!("Bessel argument must be finite and >= 0, got {z}")));
    }
    if z < 30.0 {
        let half = 0.5 * z;
        let q = half * half;
        let mut term = half;
        let mut sum = half;
        let mut m = 0.0;
        while term > 1e-17 * sum {
            m += 1.0;
            term *= q / (m * (m + 1.0));
            sum += term;
        }
        Ok(sum * (-z).exp())
    } else {
        // μ = 4ν² = 4
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let odd = (2 * k - 1) as f64;
            let next = -term * (4.0 - odd * odd) / (k as f64 * 8.0 * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        // Hankel: I1(z) ~ e^z / sqrt(2πz) Σ (-1)^k a_k(1) / z^k
        Ok(sum / (2.0 * std::f64::consts::PI * z).sqrt())
    }
}

/// `2 I1(z) / z`, tending to 1 as `z -> 0`.
fn i1_ratio_log(z: f64) -> f64 {
    if z < 1e-6 {
        (1.0 + z * z / 8.0).ln()
    } else {
        // ln(2 e^{-z} I1(z) / z) + z
        (2.0 * bessel_i1_scaled(z).expect("z >= 0") / z).ln() + z
    }
}

fn sum_kernel(t: f64, x: f64) -> f64 {
    let tt = -(-t).exp_m1();
    if tt == 0.0 {
        return (-x).exp();
    }
    let z = 2.0 * x * tt.sqrt();
    // (1 - T) e^{-(1+T)x} I1(z) / (x√T) with I1(z) / (x√T) = 2 I1(z) / z
    ((-t) - (1.0 + tt) * x + i1_ratio_log(z)).exp()
}

fn product_kernel(t: f64, x: f64) -> f64 {
    if t == 0.0 {
        return (-x).exp() / x;
    }
    let z = 2.0 * x * t.sqrt();
    // I1(z) / (x² √t) = (2 I1(z) / z) / x
    (-(1.0 + t) * x + i1_ratio_log(z)).exp() / x
}

/// Coupled `K = 1`, `b = 2/y`, `S = x/2` from `f(0, x) = 4x e^{-2x}`.
///
/// With `a = e^t` and `c = (t + 7)/2`, let `σ1`, `σ2` be the roots of
/// `a σ² + (a (c - 1) - 1/2) σ + 1`, `r_i = σ_i - 1` and
/// `g(r) = r² e^{r x} / (r + 1)`. Then
///
/// ```text
/// f(t, x) = -e^{-t} (g(r1) - g(r2)) / (r1 - r2)
/// ```
///
/// The divided difference is expanded as
/// `p(r1) e^{r2 x} expm1(δ x) / δ + e^{r2 x} (1 - a)` with `p(r) = r² / (r + 1)`,
/// `δ = r1 - r2` and `σ1 σ2 = 1 / a`, which stays accurate both where the
/// roots merge at `t = 0` and where `σ2 -> 0` for large `t`.
pub fn coupled_transient(t: f64, x: f64) -> f64 {
    let a = t.exp();
    let c = 0.5 * (t + 7.0);
    let b = a * (c - 1.0) - 0.5;
    let disc = (b * b - 4.0 * a).max(0.0);
    let q = -0.5 * (b + disc.sqrt());
    let (s1, s2) = (q / a, 1.0 / q);
    let delta = s1 - s2;
    let r2 = s2 - 1.0;
    let p1 = (s1 - 1.0) * (s1 - 1.0) / s1;
    let ratio = if delta == 0.0 { x } else { (delta * x).exp_m1() / delta };
    let e2 = (r2 * x).exp();
    let diff = p1 * e2 * ratio - e2 * t.exp_m1();
    -(-t).exp() * diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // e^{-z} I1(z) evaluated at 30 significant digits.
    const BESSEL: [(f64, f64); 10] = [
        (1e-3, 4.995_003_123_542_213e-4),
        (0.5, 0.156_420_803_184_871_7),
        (1.0, 0.207_910_415_349_708_45),
        (5.0, 0.163_972_266_944_542_36),
        (8.0, 0.134_142_493_292_698_18),
        (29.9, 0.072_033_374_911_868_79),
        (30.1, 0.071_799_854_351_014_33),
        (50.0, 0.055_993_123_892_895_4),
        (200.0, 0.028_156_503_394_832_92),
        (1e4, 0.003_989_273_195_983_662),
    ];

    #[test]
    fn scaled_bessel_matches_reference() {
        for (z, expected) in BESSEL {
            assert_relative_eq!(bessel_i1_scaled(z).unwrap(), expected, max_relative = 1e-13);
        }
        assert_eq!(bessel_i1_scaled(0.0).unwrap(), 0.0);
        assert!(bessel_i1_scaled(-1.0).is_err());
        assert!(bessel_i1_scaled(f64::NAN).is_err());
    }

    #[test]
    fn initial_data_matches_cases() {
        let xs: [f64; 6] = [1e-6, 1e-3, 0.1, 1.0, 7.5, 40.0];
        for case in AnalyticCase::ALL {
            let s = AnalyticSolution::new(case);
            for &x in &xs {
                let n0 = match case {
                    AnalyticCase::ProdAgg => (-x).exp(),
                    AnalyticCase::CoupledTransient => 4.0 * x * x * (-2.0 * x).exp(),
                    _ => x * (-x).exp(),
                };
                assert_relative_eq!(s.initial(x).unwrap(), n0, max_relative = 1e-12);
                // Just after t = 0 the formulas take their generic branch.
                assert_relative_eq!(s.mass_density(1e-14, x).unwrap(), n0, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn product_kernel_validity_window() {
        let s = AnalyticSolution::new(AnalyticCase::ProdAgg);
        assert!(s.number_density(1.0, 2.0).is_ok());
        assert!(matches!(s.number_density(1.5, 2.0), Err(Error::Validity { .. })));
        assert_eq!(s.m0(1.5), None);
        assert!(AnalyticSolution::new(AnalyticCase::SumAgg).number_density(0.5, 0.0).is_err());
    }

    #[test]
    fn sum_kernel_values_far_out_stay_finite() {
        let s = AnalyticSolution::new(AnalyticCase::SumAgg);
        for &x in &[1e2, 1e4, 1e6] {
            let v = s.number_density(3.0, x).unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn coupled_transient_approaches_steady_state() {
        for &x in &[0.1, 1.0, 4.0] {
            assert_relative_eq!(coupled_transient(40.0, x), (-x).exp(), max_relative = 1e-6);
        }
    }

    #[test]
    fn quadratic_breakage_m0() {
        // 1 + 2t ∫ e^{-x - t x²}, checked by direct composite Simpson.
        let s = AnalyticSolution::new(AnalyticCase::BinQuadBrk);
        for &t in &[1e-4, 0.01, 1.0, 10.0] {
            let h = 1e-4;
            let n = 600_000;
            let f = |x: f64| (-x - t * x * x).exp();
            let mut sum = f(0.0) + f(n as f64 * h);
            for i in 1..n {
                sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = sum * h / 3.0;
            assert_relative_eq!(s.m0(t).unwrap(), 1.0 + 2.0 * t * integral, max_relative = 1e-10);
        }
    }

    #[test]
    fn ids_round_trip() {
        for case in AnalyticCase::ALL {
            assert_eq!(AnalyticCase::parse(case.id()).unwrap(), case);
        }
        assert_eq!(AnalyticCase::CoupledSteady.kernel_id(), "coupled");
        assert!(AnalyticCase::parse("hillng_brk").is_err());
    }
}
