//! Sampled wavefunctions, the log-amplitude/phase decomposition and the
//! residual operators of the equation family.

mod grid;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::{winding_slope, Boundary, Derivatives, Differentiator, Grid1D, MIN_POINTS};

use crate::error::{Error, Result};
use crate::params::{GaugeElement, Invariants, NuMuParams};

/// Smallest admissible `|psi|`. Every division by the density goes through a
/// check against this floor.
pub const AMPLITUDE_FLOOR: f64 = 1e-14;

/// `psi = exp(theta1 + i theta2)` sampled on a grid, with optional time derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaField {
    pub grid: Grid1D,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_theta1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_theta2: Option<Vec<f64>>,
}

impl ThetaField {
    pub fn new(grid: Grid1D, theta1: Vec<f64>, theta2: Vec<f64>) -> Result<Self> {
        grid.check_len(theta1.len())?;
        grid.check_len(theta2.len())?;
        Ok(Self {
            grid,
            theta1,
            theta2,
            dt_theta1: None,
            dt_theta2: None,
        })
    }

    pub fn with_time_derivatives(mut self, dt_theta1: Vec<f64>, dt_theta2: Vec<f64>) -> Result<Self> {
        self.grid.check_len(dt_theta1.len())?;
        self.grid.check_len(dt_theta2.len())?;
        self.dt_theta1 = Some(dt_theta1);
        self.dt_theta2 = Some(dt_theta2);
        Ok(self)
    }

    pub fn rho(&self) -> Vec<f64> {
        self.theta1.iter().map(|t| (2.0 * t).exp()).collect()
    }

    pub fn to_complex(&self) -> ComplexField {
        let values = self
            .theta1
            .iter()
            .zip(&self.theta2)
            .map(|(a, b)| Complex64::new(*a, *b).exp())
            .collect();
        ComplexField {
            grid: self.grid,
            values,
        }
    }

    /// Time derivative of `psi`, available when both theta derivatives are.
    pub fn dt_psi(&self) -> Result<Vec<Complex64>> {
        let (d1, d2) = self.time_derivatives()?;
        Ok(self
            .theta1
            .iter()
            .zip(&self.theta2)
            .zip(d1.iter().zip(d2))
            .map(|((a, b), (da, db))| Complex64::new(*da, *db) * Complex64::new(*a, *b).exp())
            .collect())
    }

    fn time_derivatives(&self) -> Result<(&[f64], &[f64])> {
        match (&self.dt_theta1, &self.dt_theta2) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::MissingTimeDerivative),
        }
    }

    /// Applies the gauge element in theta form: `theta2 -> gamma theta1 + Lambda theta2`.
    pub fn gauge(&self, a: GaugeElement) -> Self {
        let mix = |t1: &[f64], t2: &[f64]| -> Vec<f64> {
            t1.iter()
                .zip(t2)
                .map(|(x, y)| a.gamma * x + a.lambda * y)
                .collect()
        };
        Self {
            grid: self.grid,
            theta1: self.theta1.clone(),
            theta2: mix(&self.theta1, &self.theta2),
            dt_theta1: self.dt_theta1.clone(),
            dt_theta2: match (&self.dt_theta1, &self.dt_theta2) {
                (Some(a1), Some(a2)) => Some(mix(a1, a2)),
                _ => None,
            },
        }
    }

    /// Spatial derivatives of both components, removing a quantized phase ramp
    /// on periodic grids.
    pub fn spatial_derivatives(&self, d: &Differentiator) -> (Derivatives<f64>, Derivatives<f64>) {
        let slope = winding_slope(&self.grid, &self.theta2);
        d.pair_with_ramp(&self.theta1, &self.theta2, slope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn rho(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn check_nodeless(&self) -> Result<()> {
        for (index, z) in self.values.iter().enumerate() {
            let amplitude = z.norm();
            if !(amplitude >= AMPLITUDE_FLOOR) {
                return Err(Error::NodeEncountered { index, amplitude });
            }
        }
        Ok(())
    }

    /// Log-amplitude and unwrapped phase. The phase starts at `arg psi[0]` and
    /// accumulates principal-value increments left to right.
    pub fn to_theta(&self) -> Result<ThetaField> {
        self.check_nodeless()?;
        let v = &self.values;
        let theta1 = v.iter().map(|z| z.norm().ln()).collect();
        let mut theta2 = Vec::with_capacity(v.len());
        theta2.push(v[0].arg());
        for i in 1..v.len() {
            let step = (v[i] * v[i - 1].conj()).arg();
            theta2.push(theta2[i - 1] + step);
        }
        ThetaField::new(self.grid, theta1, theta2)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * c).collect(),
        }
    }
}

/// The five degree-zero functionals evaluated pointwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Functionals {
    pub r: [Vec<f64>; 5],
}

impl Functionals {
    pub fn r1(&self) -> &[f64] {
        &self.r[0]
    }
    pub fn r2(&self) -> &[f64] {
        &self.r[1]
    }
    pub fn r3(&self) -> &[f64] {
        &self.r[2]
    }
    pub fn r4(&self) -> &[f64] {
        &self.r[3]
    }
    pub fn r5(&self) -> &[f64] {
        &self.r[4]
    }
}

pub fn functionals(f: &ComplexField) -> Result<Functionals> {
    f.check_nodeless()?;
    let d = f.grid.differentiator();
    Ok(functionals_with(f, &d.complex(&f.values)))
}

fn functionals_with(f: &ComplexField, d: &Derivatives<Complex64>) -> Functionals {
    let n = f.values.len();
    let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    for i in 0..n {
        let psi = f.values[i];
        let (p1, p2) = (d.d1[i], d.d2[i]);
        let rho = psi.norm_sqr();
        let cj = psi.conj();
        let j = (cj * p1).im;
        let drho = 2.0 * (cj * p1).re;
        let dj = (cj * p2).im;
        let d2rho = 2.0 * (cj * p2).re + 2.0 * p1.norm_sqr();
        r[0][i] = dj / rho;
        r[1][i] = d2rho / rho;
        r[2][i] = j * j / (rho * rho);
        r[3][i] = j * drho / (rho * rho);
        r[4][i] = drho * drho / (rho * rho);
    }
    Functionals { r }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub l2: f64,
    pub linf: f64,
    pub per_equation: BTreeMap<String, Norms>,
}

impl ResidualReport {
    fn from_parts(grid: &Grid1D, parts: &[(&str, &[f64])]) -> Self {
        let dx = grid.dx();
        let range = grid.residual_range();
        let mut per_equation = BTreeMap::new();
        let (mut sum, mut linf) = (0.0, 0.0f64);
        for (name, r) in parts {
            let s: f64 = r[range.clone()].iter().map(|v| v * v).sum();
            let m = r[range.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            per_equation.insert(
                name.to_string(),
                Norms {
                    l2: (dx * s).sqrt(),
                    linf: m,
                },
            );
            sum += s;
            linf = linf.max(m);
        }
        Self {
            l2: (dx * sum).sqrt(),
            linf,
            per_equation,
        }
    }
}

/// Residual of the nonlinear Schrodinger form. The real and imaginary parts of
/// the defect are reported separately as `re` and `im`.
pub fn nse_residual(
    f: &ComplexField,
    dt_psi: &[Complex64],
    p: &NuMuParams,
    v: &[f64],
) -> Result<ResidualReport> {
    f.grid.check_len(dt_psi.len())?;
    f.grid.check_len(v.len())?;
    f.check_nodeless()?;
    let d = f.grid.differentiator().complex(&f.values);
    let r = functionals_with(f, &d);
    let i = Complex64::i();
    let n = f.values.len();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let psi = f.values[k];
        let imag_part = p.nu1 * r.r[0][k] + p.nu2 * r.r[1][k];
        let real_part = p.mu1 * r.r[0][k]
            + p.mu2 * r.r[1][k]
            + p.mu3 * r.r[2][k]
            + p.mu4 * r.r[3][k]
            + p.mu5 * r.r[4][k]
            + p.mu0 * v[k];
        let s = i * dt_psi[k] - i * imag_part * psi - real_part * psi;
        re[k] = s.re;
        im[k] = s.im;
    }
    Ok(ResidualReport::from_parts(&f.grid, &[("re", &re), ("im", &im)]))
}

/// Residual of the gauge-fixed amplitude and phase equations, written as
/// `dt theta - rhs` for each component.
pub fn ap_residual(t: &ThetaField, inv: &Invariants, v: &[f64]) -> Result<ResidualReport> {
    let (dt1, dt2) = t.time_derivatives()?;
    t.grid.check_len(v.len())?;
    let (a, b) = t.spatial_derivatives(&t.grid.differentiator());
    let mut amp = vec![0.0; t.grid.n];
    let mut phase = vec![0.0; t.grid.n];
    gauge_fixed_rhs(inv, v, &a, &b, &mut amp, &mut phase);
    for k in 0..t.grid.n {
        amp[k] = dt1[k] - amp[k];
        phase[k] = dt2[k] - phase[k];
    }
    Ok(ResidualReport::from_parts(
        &t.grid,
        &[("amplitude", &amp), ("phase", &phase)],
    ))
}

/// Residual of the amplitude and phase equations for arbitrary `(nu, mu)`.
pub fn ap_residual_general(t: &ThetaField, p: &NuMuParams, v: &[f64]) -> Result<ResidualReport> {
    let (dt1, dt2) = t.time_derivatives()?;
    t.grid.check_len(v.len())?;
    let (a, b) = t.spatial_derivatives(&t.grid.differentiator());
    let n = t.grid.n;
    let (mut amp, mut phase) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let (t1x, t1xx, t2x, t2xx) = (a.d1[k], a.d2[k], b.d1[k], b.d2[k]);
        amp[k] = dt1[k] - 2.0 * p.nu2 * t1xx - p.nu1 * t2xx - 4.0 * p.nu2 * t1x * t1x
            - 2.0 * p.nu1 * t1x * t2x;
        phase[k] = dt2[k]
            + 2.0 * p.mu2 * t1xx
            + p.mu1 * t2xx
            + 4.0 * (p.mu2 + p.mu5) * t1x * t1x
            + 2.0 * (p.mu1 + p.mu4) * t1x * t2x
            + p.mu3 * t2x * t2x
            + p.mu0 * v[k];
    }
    Ok(ResidualReport::from_parts(
        &t.grid,
        &[("amplitude", &amp), ("phase", &phase)],
    ))
}

/// Right-hand sides of the gauge-fixed system given spatial derivatives of
/// `theta1` (`a`) and `theta2` (`b`).
pub fn gauge_fixed_rhs(
    inv: &Invariants,
    v: &[f64],
    a: &Derivatives<f64>,
    b: &Derivatives<f64>,
    amp: &mut [f64],
    phase: &mut [f64],
) {
    let k = inv.gradient_coefficient();
    let (i0, i1, i2, i3, i4) = (inv.i0, inv.i1, inv.i2, inv.i3, inv.i4);
    for j in 0..amp.len() {
        let (t1x, t1xx, t2x, t2xx) = (a.d1[j], a.d2[j], b.d1[j], b.d2[j]);
        amp[j] = -i2 * t1xx + t2xx - 2.0 * i2 * t1x * t1x + 2.0 * t1x * t2x;
        phase[j] = -2.0 * i1 * t1xx - k * t1x * t1x - 2.0 * i4 * t1x * t2x
            - (i3 - 1.0) * t2x * t2x
            - i0 * v[j];
    }
}

/// Nonlinear gauge transformation of a nodeless wavefunction. The density is
/// unchanged; only the phase picks up `gamma theta1 + (Lambda - 1) theta2`.
pub fn push_gauge(f: &ComplexField, a: GaugeElement) -> Result<ComplexField> {
    let t = f.to_theta()?;
    let mut out = t.gauge(a).to_complex();
    for (z, orig) in out.values.iter_mut().zip(&f.values) {
        *z = Complex64::from_polar(orig.norm(), z.arg());
    }
    Ok(out)
}
