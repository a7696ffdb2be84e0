use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::catalog::SolutionSpec;
use crate::field::Grid1D;
use crate::gaussian::GaussianState;
use crate::io::TimeRange;
use crate::params::{GaugeElement, Invariants, NuMuParams};

/// Fully resolved command. This is what every command echoes before it runs,
/// and `dg replay` accepts it back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandConfig {
    Invariants { params: NuMuParams },
    GaugeApply { params: NuMuParams, element: GaugeElement },
    GaugeFind { from: NuMuParams, to: NuMuParams },
    GaugeFix { params: NuMuParams },
    Solution(SolutionConfig),
    Residual(ResidualConfig),
    GaussianIntegrate(GaussianConfig),
    GaussianClassify(GaussianConfig),
    Evolve(EvolveConfig),
    Sweep(SweepConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionConfig {
    pub spec: SolutionSpec,
    pub grid: Grid1D,
    pub times: TimeRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FieldSource {
    Spec { spec: SolutionSpec, t: f64 },
    Field { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    pub source: FieldSource,
    pub grid: Grid1D,
    pub params: NuMuParams,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianConfig {
    pub invariants: Invariants,
    pub kappa: f64,
    pub initial: GaussianState,
    pub horizon: f64,
    pub dt: f64,
    /// Row decimation of the trajectory CSV.
    #[serde(default = "one")]
    pub every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub source: FieldSource,
    pub grid: Grid1D,
    pub invariants: Invariants,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub safety: f64,
    pub dealias: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// One of `i0` .. `i5`.
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn index(&self) -> Option<usize> {
        match self.name.as_str() {
            "i0" => Some(0),
            "i1" => Some(1),
            "i2" => Some(2),
            "i3" => Some(3),
            "i4" => Some(4),
            "i5" => Some(5),
            _ => None,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Contents of the sweep grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: Invariants,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub initial: GaussianState,
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub horizon: f64,
    pub dt: f64,
    pub out: PathBuf,
    pub jobs: usize,
}
