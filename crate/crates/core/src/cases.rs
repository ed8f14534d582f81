//! Benchmark catalog: kernels, domains and initial data of the test cases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticCase, AnalyticSolution};
use crate::kernels::{BuiltinKernel, HillNg, KernelSet};
use crate::mesh::{Mesh, DEFAULT_SPAN_EXPONENT};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "1a")]
    ConstAgg,
    #[serde(rename = "1b")]
    SumAgg,
    #[serde(rename = "1c")]
    ProdAgg,
    #[serde(rename = "2a")]
    LinearBreakage,
    #[serde(rename = "2b")]
    QuadraticBreakage,
    #[serde(rename = "3")]
    MultipleBreakage,
    #[serde(rename = "4a")]
    CoupledSteady,
    #[serde(rename = "4b")]
    CoupledTransient,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::ConstAgg,
        CaseId::SumAgg,
        CaseId::ProdAgg,
        CaseId::LinearBreakage,
        CaseId::QuadraticBreakage,
        CaseId::MultipleBreakage,
        CaseId::CoupledSteady,
        CaseId::CoupledTransient,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CaseId::ConstAgg => "1a",
            CaseId::SumAgg => "1b",
            CaseId::ProdAgg => "1c",
            CaseId::LinearBreakage => "2a",
            CaseId::QuadraticBreakage => "2b",
            CaseId::MultipleBreakage => "3",
            CaseId::CoupledSteady => "4a",
            CaseId::CoupledTransient => "4b",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown case '{s}'")))
    }
}

/// Parameters of the normal initial density of case 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalInitial {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for NormalInitial {
    fn default() -> Self {
        Self { mu: 1.0, sigma: 0.2 }
    }
}

impl NormalInitial {
    /// Mass of the normal density on `x <= 0`, which the domain drops.
    pub fn clipped_mass(&self) -> f64 {
        0.5 * libm::erfc(self.mu / (self.sigma * std::f64::consts::SQRT_2))
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub id: CaseId,
    pub kernel: BuiltinKernel,
    /// First interior interface.
    pub x0: f64,
    pub analytic: Option<AnalyticCase>,
    pub normal: NormalInitial,
}

impl CaseSpec {
    pub fn new(id: CaseId) -> Self {
        let (kernel, x0, analytic) = match id {
            CaseId::ConstAgg => (BuiltinKernel::ConstAgg, 1e-3, Some(AnalyticCase::ConstAgg)),
            CaseId::SumAgg => (BuiltinKernel::SumAgg, 1e-3, Some(AnalyticCase::SumAgg)),
            CaseId::ProdAgg => (BuiltinKernel::ProdAgg, 1e-3, Some(AnalyticCase::ProdAgg)),
            CaseId::LinearBreakage => (BuiltinKernel::BinLinBrk, 1e-6, Some(AnalyticCase::BinLinBrk)),
            CaseId::QuadraticBreakage => (BuiltinKernel::BinQuadBrk, 1e-6, Some(AnalyticCase::BinQuadBrk)),
            CaseId::MultipleBreakage => (BuiltinKernel::HillNgBrk(HillNg::default()), 1e-6, None),
            CaseId::CoupledSteady => (BuiltinKernel::Coupled, 1e-3, Some(AnalyticCase::CoupledSteady)),
            CaseId::CoupledTransient => (BuiltinKernel::Coupled, 1e-3, Some(AnalyticCase::CoupledTransient)),
        };
        Self {
            id,
            kernel,
            x0,
            analytic,
            normal: NormalInitial::default(),
        }
    }

    pub fn with_normal(mut self, normal: NormalInitial) -> Result<Self> {
        if !(normal.sigma > 0.0 && normal.mu.is_finite() && normal.sigma.is_finite()) {
            return Err(Error::InvalidArgument("normal initial data needs sigma > 0".into()));
        }
        if normal.clipped_mass() >= 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "normal initial data loses {:e} of its mass below x = 0",
                normal.clipped_mass()
            )));
        }
        self.normal = normal;
        Ok(self)
    }

    pub fn kernels(&self) -> KernelSet {
        KernelSet::builtin(self.kernel)
    }

    pub fn solution(&self) -> Option<AnalyticSolution> {
        self.analytic.map(AnalyticSolution::new)
    }

    /// Initial mass density `n(0, x)`.
    pub fn initial(&self, x: f64) -> f64 {
        match self.id {
            CaseId::ProdAgg => (-x).exp(),
            CaseId::MultipleBreakage => self.normal.density(x),
            CaseId::CoupledTransient => 4.0 * x * x * (-2.0 * x).exp(),
            _ => x * (-x).exp(),
        }
    }

    /// Geometric mesh of `cells` cells starting at `x0`.
    pub fn mesh(&self, cells: usize) -> Result<Mesh> {
        Mesh::geometric(cells, self.x0, DEFAULT_SPAN_EXPONENT)
    }
}
