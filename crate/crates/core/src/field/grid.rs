use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of grid points; the one-sided closures need six.
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// `x_max` is identified with `x_min`; spectral differentiation.
    Periodic,
    /// Both endpoints are sampled; fourth-order finite differences.
    Dirichlet,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::Parse(format!("unknown boundary '{other}'"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize, boundary: Boundary) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn periodic(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::new(x_min, x_max, n, Boundary::Periodic)
    }

    pub fn dirichlet(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::new(x_min, x_max, n, Boundary::Dirichlet)
    }

    /// The same nodes treated as a bounded interval, so that finite differences
    /// apply to data that are not periodic.
    pub fn as_dirichlet(&self) -> Self {
        Self {
            x_max: self.x_min + (self.n - 1) as f64 * self.dx(),
            boundary: Boundary::Dirichlet,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {}",
                self.n
            )));
        }
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need x_max > x_min, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.length() / self.n as f64,
            Boundary::Dirichlet => self.length() / (self.n - 1) as f64,
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|i| self.x_min + i as f64 * dx).collect()
    }

    /// Quadrature weights: uniform on periodic grids, trapezoid otherwise.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n];
        if self.boundary == Boundary::Dirichlet {
            w[0] = 0.5 * dx;
            w[self.n - 1] = 0.5 * dx;
        }
        w
    }

    /// Index range on which residuals are reported. Dirichlet grids drop the
    /// two points on each side that use one-sided stencils.
    pub fn residual_range(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.n,
            Boundary::Dirichlet => 2..self.n - 2,
        }
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.quadrature_weights()
            .iter()
            .zip(f)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn differentiator(&self) -> Differentiator {
        Differentiator::new(*self, false)
    }
}

/// Parses `min:max:n`.
impl FromStr for Grid1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid must be min:max:n, got '{s}'")));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad grid bound '{p}': {e}")))
        };
        let n = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad grid size '{}': {e}", parts[2])))?;
        Grid1D::new(num(parts[0])?, num(parts[1])?, n, Boundary::Dirichlet)
    }
}

/// First and second derivatives on a grid.
#[derive(Clone, Debug)]
pub struct Derivatives<T> {
    pub d1: Vec<T>,
    pub d2: Vec<T>,
}

/// Spatial derivative operator bound to one grid. Periodic grids differentiate
/// in Fourier space; Dirichlet grids use fourth-order central differences with
/// fourth-order one-sided closures on the two outermost points of each side.
#[derive(Clone)]
pub struct Differentiator {
    grid: Grid1D,
    spectral: Option<Spectral>,
}

#[derive(Clone)]
struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    ik: Vec<Complex64>,
    minus_k2: Vec<f64>,
}

impl fmt::Debug for Differentiator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Differentiator")
            .field("grid", &self.grid)
            .field("spectral", &self.spectral.is_some())
            .finish()
    }
}

impl Differentiator {
    /// `dealias` zeroes the upper third of the spectrum (periodic grids only).
    pub fn new(grid: Grid1D, dealias: bool) -> Self {
        let spectral = (grid.boundary == Boundary::Periodic).then(|| {
            let n = grid.n;
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let base = 2.0 * PI / grid.length();
            let cutoff = n / 3;
            let mut ik = vec![Complex64::new(0.0, 0.0); n];
            let mut minus_k2 = vec![0.0; n];
            for j in 0..n {
                let m = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                if dealias && m.unsigned_abs() as usize > cutoff {
                    continue;
                }
                let k = base * m as f64;
                // The Nyquist mode has no odd counterpart; drop it from the first derivative.
                if !(n % 2 == 0 && j == n / 2) {
                    ik[j] = Complex64::new(0.0, k / n as f64);
                }
                minus_k2[j] = -k * k / n as f64;
            }
            Spectral {
                forward,
                inverse,
                ik,
                minus_k2,
            }
        });
        Self { grid, spectral }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn complex(&self, f: &[Complex64]) -> Derivatives<Complex64> {
        debug_assert_eq!(f.len(), self.grid.n);
        match &self.spectral {
            Some(sp) => {
                let mut hat = f.to_vec();
                sp.forward.process(&mut hat);
                let mut d1: Vec<Complex64> = hat.iter().zip(&sp.ik).map(|(h, k)| h * k).collect();
                let mut d2: Vec<Complex64> =
                    hat.iter().zip(&sp.minus_k2).map(|(h, k)| h * k).collect();
                sp.inverse.process(&mut d1);
                sp.inverse.process(&mut d2);
                Derivatives { d1, d2 }
            }
            None => {
                let re: Vec<f64> = f.iter().map(|z| z.re).collect();
                let im: Vec<f64> = f.iter().map(|z| z.im).collect();
                let (dr, di) = (self.fd(&re), self.fd(&im));
                Derivatives {
                    d1: dr.d1.iter().zip(&di.d1).map(|(a, b)| Complex64::new(*a, *b)).collect(),
                    d2: dr.d2.iter().zip(&di.d2).map(|(a, b)| Complex64::new(*a, *b)).collect(),
                }
            }
        }
    }

    pub fn real(&self, f: &[f64]) -> Derivatives<f64> {
        self.pair(f, &vec![0.0; f.len()]).0
    }

    /// Derivatives of two real arrays at once (one complex transform on periodic grids).
    pub fn pair(&self, f: &[f64], g: &[f64]) -> (Derivatives<f64>, Derivatives<f64>) {
        match &self.spectral {
            Some(_) => {
                let z: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| Complex64::new(*a, *b)).collect();
                let d = self.complex(&z);
                let split = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) {
                    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
                };
                let (f1, g1) = split(&d.d1);
                let (f2, g2) = split(&d.d2);
                (Derivatives { d1: f1, d2: f2 }, Derivatives { d1: g1, d2: g2 })
            }
            None => (self.fd(f), self.fd(g)),
        }
    }

    /// Derivatives of a phase-like array. On periodic grids the array may wind
    /// by a multiple of `2 pi` across the period; `slope` is that linear ramp
    /// (see [`winding_slope`]) and is removed before the transform.
    pub fn pair_with_ramp(
        &self,
        f: &[f64],
        g: &[f64],
        slope: f64,
    ) -> (Derivatives<f64>, Derivatives<f64>) {
        if self.spectral.is_none() || slope == 0.0 {
            return self.pair(f, g);
        }
        let x0 = self.grid.x_min;
        let dx = self.grid.dx();
        let g0: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, v)| v - slope * (x0 + i as f64 * dx))
            .collect();
        let (df, mut dg) = self.pair(f, &g0);
        dg.d1.iter_mut().for_each(|v| *v += slope);
        (df, dg)
    }

    fn fd(&self, f: &[f64]) -> Derivatives<f64> {
        let n = f.len();
        let h = self.grid.dx();
        let c1 = 1.0 / (12.0 * h);
        let c2 = 1.0 / (12.0 * h * h);
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 2..n - 2 {
            d1[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) * c1;
            d2[i] = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) * c2;
        }
        // One-sided fourth-order closures; the right side mirrors the left.
        let left1 = |g: &dyn Fn(usize) -> f64| {
            (
                (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) * c1,
                (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) * c1,
            )
        };
        let left2 = |g: &dyn Fn(usize) -> f64| {
            (
                (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4)
                    - 10.0 * g(5))
                    * c2,
                (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) * c2,
            )
        };
        let fwd = |k: usize| f[k];
        let bwd = |k: usize| f[n - 1 - k];
        let (a, b) = left1(&fwd);
        d1[0] = a;
        d1[1] = b;
        let (a, b) = left1(&bwd);
        d1[n - 1] = -a;
        d1[n - 2] = -b;
        let (a, b) = left2(&fwd);
        d2[0] = a;
        d2[1] = b;
        let (a, b) = left2(&bwd);
        d2[n - 1] = a;
        d2[n - 2] = b;
        Derivatives { d1, d2 }
    }
}

/// Slope of the `2 pi m / L` ramp by which `phase` winds across a periodic grid.
pub fn winding_slope(grid: &Grid1D, phase: &[f64]) -> f64 {
    if grid.boundary != Boundary::Periodic {
        return 0.0;
    }
    let n = phase.len();
    let extrapolated = 2.0 * phase[n - 1] - phase[n - 2];
    let turns = ((extrapolated - phase[0]) / (2.0 * PI)).round();
    2.0 * PI * turns / grid.length()
}
