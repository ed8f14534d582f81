//! Aggregation and breakage kernels and the flux integrands derived from them.
//!
//! - `A(u, v) = K(u, v) / v`
//! - `B(u, v) = u b(u, v) S(v) / v`, zero for `u >= v`

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

pub type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Hill-Ng multiple breakage parameters: `p` fragments per event, shape `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillNg {
    pub fragments: u32,
    pub shape: f64,
}

impl Default for HillNg {
    fn default() -> Self {
        Self { fragments: 4, shape: 2.0 }
    }
}

impl HillNg {
    pub fn new(fragments: u32, shape: f64) -> Result<Self> {
        if fragments < 2 {
            return Err(Error::InvalidArgument(format!(
                "Hill-Ng fragment count must be >= 2, got {fragments}"
            )));
        }
        if !(shape >= 0.0 && shape.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Hill-Ng shape must be >= 0, got {shape}"
            )));
        }
        Ok(Self { fragments, shape })
    }

    /// Exponent of `(y - x)`: `m + (m + 1)(p - 2)`.
    fn tail_exponent(&self) -> f64 {
        self.shape + (self.shape + 1.0) * (self.fragments as f64 - 2.0)
    }

    /// `ln( p [m + (m+1)(p-1)]! / (m! [m + (m+1)(p-2)]!) )`.
    fn log_coefficient(&self) -> f64 {
        let m = self.shape;
        let p = self.fragments as f64;
        let top = m + (m + 1.0) * (p - 1.0);
        p.ln() + libm::lgamma(top + 1.0) - libm::lgamma(m + 1.0) - libm::lgamma(self.tail_exponent() + 1.0)
    }

    /// Daughter distribution `b(x, y)`, written as `c (x/y)^m (1 - x/y)^e / y`.
    fn daughter_fn(&self) -> PairFn {
        let coef = self.log_coefficient().exp();
        let (m, e) = (self.shape, self.tail_exponent());
        Arc::new(move |x: f64, y: f64| {
            if x >= y || x <= 0.0 {
                return 0.0;
            }
            let z = x / y;
            coef * z.powf(m) * (1.0 - z).powf(e) / y
        })
    }
}

/// Builtin kernel catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinKernel {
    /// `K = 1`
    ConstAgg,
    /// `K = x + y`
    SumAgg,
    /// `K = x y`
    ProdAgg,
    /// `b = 2 / y`, `S = x`
    BinLinBrk,
    /// `b = 2 / y`, `S = x²`
    BinQuadBrk,
    /// Hill-Ng `b` with `S = x²`
    HillNgBrk(HillNg),
    /// `K = 1`, `b = 2 / y`, `S = x / 2`
    Coupled,
}

impl BuiltinKernel {
    /// Parses a catalog id; `p`/`m` are only read for `hillng_brk` (defaults 4 and 2).
    pub fn parse(id: &str, fragments: Option<u32>, shape: Option<f64>) -> Result<Self> {
        Ok(match id {
            "const_agg" => Self::ConstAgg,
            "sum_agg" => Self::SumAgg,
            "prod_agg" => Self::ProdAgg,
            "binlin_brk" => Self::BinLinBrk,
            "binquad_brk" => Self::BinQuadBrk,
            "hillng_brk" => Self::HillNgBrk(HillNg::new(fragments.unwrap_or(4), shape.unwrap_or(2.0))?),
            "coupled" => Self::Coupled,
            other => return Err(Error::UnknownKernel(other.to_string())),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::ConstAgg => "const_agg",
            Self::SumAgg => "sum_agg",
            Self::ProdAgg => "prod_agg",
            Self::BinLinBrk => "binlin_brk",
            Self::BinQuadBrk => "binquad_brk",
            Self::HillNgBrk(_) => "hillng_brk",
            Self::Coupled => "coupled",
        }
    }
}

/// Aggregation kernel `K`, breakage function `b` and selection function `S`.
///
/// Either process may be absent. Kernels are plain closures so callers can
/// register their own.
#[derive(Clone)]
pub struct KernelSet {
    name: String,
    aggregation: Option<PairFn>,
    breakage: Option<(PairFn, RateFn)>,
    hill_ng: Option<HillNg>,
}

impl fmt::Debug for KernelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSet")
            .field("name", &self.name)
            .field("has_aggregation", &self.has_aggregation())
            .field("has_breakage", &self.has_breakage())
            .field("hill_ng", &self.hill_ng)
            .finish()
    }
}

impl KernelSet {
    pub fn new(
        name: impl Into<String>,
        aggregation: Option<PairFn>,
        breakage: Option<(PairFn, RateFn)>,
    ) -> Self {
        Self {
            name: name.into(),
            aggregation,
            breakage,
            hill_ng: None,
        }
    }

    pub fn aggregation(name: impl Into<String>, k: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, Some(Arc::new(k)), None)
    }

    pub fn breakage(
        name: impl Into<String>,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        s: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, None, Some((Arc::new(b), Arc::new(s))))
    }

    pub fn builtin(kind: BuiltinKernel) -> Self {
        let binary: PairFn = Arc::new(|x: f64, y: f64| if x < y { 2.0 / y } else { 0.0 });
        let mut set = match kind {
            BuiltinKernel::ConstAgg => Self::aggregation(kind.id(), |_, _| 1.0),
            BuiltinKernel::SumAgg => Self::aggregation(kind.id(), |x, y| x + y),
            BuiltinKernel::ProdAgg => Self::aggregation(kind.id(), |x, y| x * y),
            BuiltinKernel::BinLinBrk => Self::new(kind.id(), None, Some((binary, Arc::new(|x| x)))),
            BuiltinKernel::BinQuadBrk => {
                Self::new(kind.id(), None, Some((binary, Arc::new(|x| x * x))))
            }
            BuiltinKernel::HillNgBrk(h) => {
                Self::new(kind.id(), None, Some((h.daughter_fn(), Arc::new(|x| x * x))))
            }
            BuiltinKernel::Coupled => Self::new(
                kind.id(),
                Some(Arc::new(|_, _| 1.0)),
                Some((binary, Arc::new(|x| 0.5 * x))),
            ),
        };
        if let BuiltinKernel::HillNgBrk(h) = kind {
            set.hill_ng = Some(h);
        }
        set
    }

    /// Builtin set by catalog id.
    pub fn from_id(id: &str, fragments: Option<u32>, shape: Option<f64>) -> Result<Self> {
        BuiltinKernel::parse(id, fragments, shape).map(Self::builtin)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_aggregation(&self) -> bool {
        self.aggregation.is_some()
    }

    pub fn has_breakage(&self) -> bool {
        self.breakage.is_some()
    }

    pub fn hill_ng(&self) -> Option<HillNg> {
        self.hill_ng
    }

    /// `K(x, y)`, zero without aggregation.
    pub fn k(&self, x: f64, y: f64) -> f64 {
        self.aggregation.as_ref().map_or(0.0, |k| k(x, y))
    }

    /// `b(x, y)`, zero for `x >= y` or without breakage.
    pub fn b(&self, x: f64, y: f64) -> f64 {
        match &self.breakage {
            Some((b, _)) if x < y => b(x, y),
            _ => 0.0,
        }
    }

    /// `S(x)`, zero without breakage.
    pub fn s(&self, x: f64) -> f64 {
        self.breakage.as_ref().map_or(0.0, |(_, s)| s(x))
    }

    /// `A(u, v) = K(u, v) / v`.
    pub fn a_integrand(&self, u: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("A(u, v) needs v > 0, got {v}")));
        }
        Ok(self.a_unchecked(u, v))
    }

    /// `B(u, v) = u b(u, v) S(v) / v`.
    pub fn b_integrand(&self, u: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("B(u, v) needs v > 0, got {v}")));
        }
        Ok(self.b_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn a_unchecked(&self, u: f64, v: f64) -> f64 {
        match &self.aggregation {
            Some(k) => k(u, v) / v,
            None => 0.0,
        }
    }

    #[inline]
    pub(crate) fn b_unchecked(&self, u: f64, v: f64) -> f64 {
        match &self.breakage {
            Some((b, s)) if u < v => u * b(u, v) * s(v) / v,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::QuadratureRule;
    use approx::assert_relative_eq;

    fn log_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64)).collect()
    }

    fn all_builtins() -> Vec<BuiltinKernel> {
        vec![
            BuiltinKernel::ConstAgg,
            BuiltinKernel::SumAgg,
            BuiltinKernel::ProdAgg,
            BuiltinKernel::BinLinBrk,
            BuiltinKernel::BinQuadBrk,
            BuiltinKernel::HillNgBrk(HillNg::new(4, 2.0).unwrap()),
            BuiltinKernel::Coupled,
        ]
    }

    #[test]
    fn coupled_values() {
        let k = KernelSet::from_id("coupled", None, None).unwrap();
        assert_eq!(k.k(3.0, 5.0), 1.0);
        assert_eq!(k.s(4.0), 2.0);
        assert_eq!(k.b(1.0, 4.0), 0.5);
        assert_eq!(k.b(4.0, 4.0), 0.0);
        assert_eq!(k.b(5.0, 4.0), 0.0);
    }

    #[test]
    fn unknown_and_invalid_ids() {
        assert!(matches!(KernelSet::from_id("gravity", None, None), Err(Error::UnknownKernel(_))));
        assert!(KernelSet::from_id("hillng_brk", Some(1), Some(2.0)).is_err());
        assert!(KernelSet::from_id("hillng_brk", Some(4), Some(-0.5)).is_err());
    }

    #[test]
    fn aggregation_integrand() {
        let c = KernelSet::builtin(BuiltinKernel::ConstAgg);
        assert_eq!(c.a_integrand(2.0, 4.0).unwrap(), 0.25);
        let s = KernelSet::builtin(BuiltinKernel::SumAgg);
        assert_eq!(s.a_integrand(1.0, 1.0).unwrap(), 2.0);
        let p = KernelSet::builtin(BuiltinKernel::ProdAgg);
        for v in log_grid(9) {
            assert_relative_eq!(p.a_integrand(0.7, v).unwrap(), 0.7, max_relative = 1e-15);
        }
        assert!(c.a_integrand(1.0, 0.0).is_err());
    }

    #[test]
    fn breakage_integrand() {
        let lin = KernelSet::builtin(BuiltinKernel::BinLinBrk);
        assert_eq!(lin.b_integrand(1.0, 2.0).unwrap(), 1.0);
        let quad = KernelSet::builtin(BuiltinKernel::BinQuadBrk);
        assert_eq!(quad.b_integrand(1.0, 2.0).unwrap(), 2.0);
        for set in [lin, quad, KernelSet::builtin(BuiltinKernel::Coupled)] {
            let v = 3.0;
            assert!(set.b_integrand(v / (1.0 + 1e-12), v).unwrap().is_finite());
            assert_eq!(set.b_integrand(v, v).unwrap(), 0.0);
            assert!(set.b_integrand(1.0, -1.0).is_err());
        }
    }

    #[test]
    fn builtin_kernels_are_symmetric_and_nonnegative() {
        let grid = log_grid(20);
        for kind in all_builtins() {
            let set = KernelSet::builtin(kind);
            for &x in &grid {
                assert!(set.s(x) >= 0.0);
                for &y in &grid {
                    assert_eq!(set.k(x, y), set.k(y, x), "{kind:?}");
                    assert!(set.k(x, y) >= 0.0);
                    assert!(set.b(x, y) >= 0.0);
                    if x >= y {
                        assert_eq!(set.b(x, y), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn hill_ng_reduces_to_binary() {
        let h = KernelSet::from_id("hillng_brk", Some(2), Some(0.0)).unwrap();
        for (x, y) in [(0.1, 1.0), (2.0, 3.0), (1e-4, 10.0)] {
            assert_relative_eq!(h.b(x, y), 2.0 / y, max_relative = 1e-14);
        }
    }

    #[test]
    fn hill_ng_counts_fragments_and_conserves_mass() {
        let rule = QuadratureRule::gauss(20).unwrap();
        // Integrands are polynomials in x of degree <= 2m + (m+1)(p-2) + 1 for integer m.
        let panels = |y: f64, g: &dyn Fn(f64) -> f64| {
            let n = 2;
            (0..n)
                .map(|i| rule.integrate(y * i as f64 / n as f64, y * (i + 1) as f64 / n as f64, g))
                .sum::<f64>()
        };
        for (p, m) in [(4u32, 2.0), (2, 0.0), (2, 1.0), (2, 3.0), (2, 5.0), (3, 1.0), (6, 2.0)] {
            let set = KernelSet::builtin(BuiltinKernel::HillNgBrk(HillNg::new(p, m).unwrap()));
            for y in [0.1, 1.0, 10.0] {
                let count = panels(y, &|x| set.b(x, y));
                assert_relative_eq!(count, p as f64, max_relative = 1e-10);
                let mass = panels(y, &|x| x * set.b(x, y));
                assert_relative_eq!(mass, y, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn hill_ng_large_parameters_stay_finite() {
        let set = KernelSet::from_id("hillng_brk", Some(40), Some(60.0)).unwrap();
        let v = set.b(0.01, 1.0);
        assert!(v.is_finite() && v >= 0.0);
    }
}
