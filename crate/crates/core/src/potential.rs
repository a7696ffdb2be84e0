use serde::{Deserialize, Serialize};

use crate::field::Grid1D;

/// External potential `V(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    #[default]
    Free,
    /// `kappa x^2 / 2`
    Harmonic { kappa: f64 },
    /// `sum_j c_j x^j`
    Polynomial { coeffs: Vec<f64> },
    /// `-depth exp(-x^2 / width^2)`
    GaussianWell { depth: f64, width: f64 },
}

impl Potential {
    pub fn harmonic(kappa: f64) -> Self {
        if kappa == 0.0 {
            Potential::Free
        } else {
            Potential::Harmonic { kappa }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { kappa } => 0.5 * kappa * x * x,
            Potential::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Potential::GaussianWell { depth, width } => -depth * (-(x / width).powi(2)).exp(),
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.points().into_iter().map(|x| self.eval(x)).collect()
    }

    pub fn is_free(&self) -> bool {
        match self {
            Potential::Free => true,
            Potential::Harmonic { kappa } => *kappa == 0.0,
            Potential::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            Potential::GaussianWell { depth, .. } => *depth == 0.0,
        }
    }

    /// Spring constant when the potential is harmonic or free.
    pub fn harmonic_kappa(&self) -> Option<f64> {
        match self {
            Potential::Harmonic { kappa } => Some(*kappa),
            p if p.is_free() => Some(0.0),
            _ => None,
        }
    }
}
