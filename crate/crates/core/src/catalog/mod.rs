//! Closed-form solution families of the gauge-fixed amplitude and phase
//! equations, each with analytic space and time derivatives.
//!
//! Every constructor takes gauge-fixed invariants (`nu1 = 1`, `mu1 = 0`).
//! Stationary families share the form `theta2 = i2 theta1 - omega t` with
//!
//! ```text
//! omega = 2 i1 theta1'' + 2 (i1 + i5) theta1'^2 + i0 V
//! ```

mod linear;
mod profile;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use linear::{solve as solve_linear_problem, LinearMode};
pub use profile::{ln_cosh, Profile};

use crate::error::{Error, Result};
use crate::field::{Boundary, ComplexField, Grid1D, ThetaField};
use crate::gaussian::{self, GaussianState, Kinematics};
use crate::params::Invariants;
use crate::potential::Potential;
use crate::quad;

/// Relative tolerance for the admissibility equalities (`i1 = 0`, `i2 i3 + i4 = 0`, ...).
pub const REGIME_TOLERANCE: f64 = 1e-12;

/// Log-amplitude and phase with their first derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ThetaPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub dx_theta1: f64,
    pub dx_theta2: f64,
    pub dt_theta1: f64,
    pub dt_theta2: f64,
}

impl ThetaPoint {
    pub fn collect(grid: &Grid1D, pts: &[ThetaPoint]) -> ThetaField {
        let col = |f: fn(&ThetaPoint) -> f64| pts.iter().map(f).collect::<Vec<f64>>();
        ThetaField {
            grid: *grid,
            theta1: col(|p| p.theta1),
            theta2: col(|p| p.theta2),
            dt_theta1: Some(col(|p| p.dt_theta1)),
            dt_theta2: Some(col(|p| p.dt_theta2)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PlaneWave,
    LinearizedStationary,
    HoGroundState,
    EikonalStationary,
    PoissonStationary,
    FreeInvariantStationary,
    CoshSoliton,
    GaussianSoliton,
    ArbitraryProfileSoliton,
    BoostedStationary,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::PlaneWave,
        Family::LinearizedStationary,
        Family::HoGroundState,
        Family::EikonalStationary,
        Family::PoissonStationary,
        Family::FreeInvariantStationary,
        Family::CoshSoliton,
        Family::GaussianSoliton,
        Family::ArbitraryProfileSoliton,
        Family::BoostedStationary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::PlaneWave => "plane_wave",
            Family::LinearizedStationary => "linearized_stationary",
            Family::HoGroundState => "ho_ground_state",
            Family::EikonalStationary => "eikonal_stationary",
            Family::PoissonStationary => "poisson_stationary",
            Family::FreeInvariantStationary => "free_invariant_stationary",
            Family::CoshSoliton => "cosh_soliton",
            Family::GaussianSoliton => "gaussian_soliton",
            Family::ArbitraryProfileSoliton => "arbitrary_profile_soliton",
            Family::BoostedStationary => "boosted_stationary",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .find(|f| f.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown solution family '{s}'")))
    }
}

/// Family-specific parameters. Unused fields are ignored by other families.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Extras {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_grid: Option<Grid1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<SolutionSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpec {
    pub family: Family,
    pub invariants: Invariants,
    #[serde(flatten)]
    pub extras: Extras,
}

impl SolutionSpec {
    pub fn new(family: Family, invariants: Invariants) -> Self {
        Self {
            family,
            invariants,
            extras: Extras::default(),
        }
    }

    pub fn with(mut self, f: impl FnOnce(&mut Extras)) -> Self {
        f(&mut self.extras);
        self
    }

    pub fn build(&self) -> Result<AnalyticSolution> {
        build(self)
    }
}

pub type Slice = Box<dyn Fn(f64) -> ThetaPoint + Send + Sync>;
type SliceFn = Arc<dyn Fn(f64) -> Slice + Send + Sync>;

/// A solution family instance: `(x, t) -> theta` with analytic derivatives.
#[derive(Clone)]
pub struct AnalyticSolution {
    pub spec: SolutionSpec,
    pub square_integrable: bool,
    pub potential: Potential,
    /// Frequency of the family. Stationary families carry `theta2 = i2 theta1 - omega t`;
    /// the plane wave carries `theta2 = k x + omega t`.
    pub omega: Option<f64>,
    /// Time-independent `theta1` solving the free stationary equations, so that
    /// the solution may be boosted.
    pub boostable: bool,
    slice: SliceFn,
}

impl fmt::Debug for AnalyticSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticSolution")
            .field("spec", &self.spec)
            .field("square_integrable", &self.square_integrable)
            .field("potential", &self.potential)
            .field("omega", &self.omega)
            .finish()
    }
}

impl AnalyticSolution {
    /// Evaluator for a fixed time.
    pub fn at(&self, t: f64) -> Slice {
        (self.slice)(t)
    }

    pub fn eval(&self, x: f64, t: f64) -> ThetaPoint {
        self.at(t)(x)
    }

    pub fn invariants(&self) -> &Invariants {
        &self.spec.invariants
    }

    pub fn sample(&self, grid: &Grid1D, t: f64) -> ThetaField {
        let f = self.at(t);
        let pts: Vec<ThetaPoint> = grid.points().into_iter().map(f).collect();
        ThetaPoint::collect(grid, &pts)
    }

    /// `psi` and `dt psi` on the grid.
    pub fn sample_psi(&self, grid: &Grid1D, t: f64) -> (ComplexField, Vec<Complex64>) {
        let th = self.sample(grid, t);
        let dt = th.dt_psi().expect("catalog samples carry time derivatives");
        (th.to_complex(), dt)
    }

    pub fn potential_on(&self, grid: &Grid1D) -> Vec<f64> {
        self.potential.sample(grid)
    }

    fn with_offset(mut self, c: f64) -> Self {
        if c != 0.0 {
            let inner = self.slice.clone();
            self.slice = Arc::new(move |t| {
                let f = inner(t);
                Box::new(move |x| {
                    let mut p = f(x);
                    p.theta1 += c;
                    p
                })
            });
        }
        self
    }
}

fn near_zero(v: f64, scale: f64) -> bool {
    v.abs() <= REGIME_TOLERANCE * scale.abs().max(1.0)
}

fn regime(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidRegime(msg()))
    }
}

fn require<T: Copy>(v: Option<T>, family: Family, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParams(format!("{family} needs '{name}'")))
}

fn friction_free(inv: &Invariants) -> bool {
    near_zero(inv.friction(), inv.i2 * inv.i3)
}

fn stationary_slice(inv: Invariants, omega: f64, theta1: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> SliceFn {
    let theta1 = Arc::new(theta1);
    Arc::new(move |t| {
        let theta1 = theta1.clone();
        Box::new(move |x| {
            let (v, d1) = theta1(x);
            ThetaPoint {
                theta1: v,
                theta2: inv.i2 * v - omega * t,
                dx_theta1: d1,
                dx_theta2: inv.i2 * d1,
                dt_theta1: 0.0,
                dt_theta2: -omega,
            }
        })
    })
}

fn base_spec(family: Family, inv: &Invariants) -> SolutionSpec {
    SolutionSpec::new(family, *inv)
}

/// `theta1 = const`, `theta2 = k x + (1 - i3) k^2 t`.
pub fn plane_wave(inv: &Invariants, k: f64) -> Result<AnalyticSolution> {
    let omega = (1.0 - inv.i3) * k * k;
    Ok(AnalyticSolution {
        spec: base_spec(Family::PlaneWave, inv).with(|e| e.k = Some(k)),
        square_integrable: false,
        potential: Potential::Free,
        omega: Some(omega),
        boostable: false,
        slice: Arc::new(move |t| {
            Box::new(move |x| ThetaPoint {
                theta1: 0.0,
                theta2: k * x + omega * t,
                dx_theta1: 0.0,
                dx_theta2: k,
                dt_theta1: 0.0,
                dt_theta2: omega,
            })
        }),
    })
}

/// Harmonic ground state `theta1 = -(w/4) x^2` with `w = sqrt(-kappa i0 / (i1 + i5))`.
pub fn ho_ground_state(inv: &Invariants, kappa: f64) -> Result<AnalyticSolution> {
    let p = inv.dispersion();
    regime(kappa > 0.0, || format!("spring constant must be positive, got {kappa}"))?;
    regime(inv.i0 * p < 0.0, || {
        format!("needs i0 (i1 + i5) < 0, got {}", inv.i0 * p)
    })?;
    let w = (-kappa * inv.i0 / p).sqrt();
    let omega = -inv.i1 * w;
    Ok(AnalyticSolution {
        spec: base_spec(Family::HoGroundState, inv).with(|e| e.kappa = Some(kappa)),
        square_integrable: true,
        potential: Potential::harmonic(kappa),
        omega: Some(omega),
        boostable: false,
        slice: stationary_slice(*inv, omega, move |x| (-0.25 * w * x * x, -0.5 * w * x)),
    })
}

/// Default grid for the auxiliary eigenproblem with a non-harmonic potential.
pub fn default_eigen_grid() -> Grid1D {
    Grid1D::dirichlet(-12.0, 12.0, 601).expect("valid default grid")
}

/// `psi = phi^(i1/(i1+i5))` with `phi` a nodeless mode of the auxiliary linear problem.
pub fn linearized_stationary(
    inv: &Invariants,
    potential: &Potential,
    mode: usize,
    eigen_grid: Option<Grid1D>,
) -> Result<AnalyticSolution> {
    let p = inv.dispersion();
    regime(inv.i1 != 0.0 && p != 0.0, || "needs i1 != 0 and i1 + i5 != 0".into())?;
    let a = inv.i1 / p;
    let alpha = 2.0 * inv.i1 * inv.i1 / p;
    let spec = base_spec(Family::LinearizedStationary, inv).with(|e| {
        e.potential = Some(potential.clone());
        e.mode = Some(mode);
        e.eigen_grid = eigen_grid;
    });
    if let Some(kappa) = potential.harmonic_kappa() {
        if mode > 0 {
            return Err(Error::NodefulMode { mode });
        }
        let r = -inv.i0 * kappa / (8.0 * alpha);
        regime(r > 0.0, || "harmonic auxiliary problem has no normalizable ground state".into())?;
        let beta = r.sqrt();
        let omega = -2.0 * alpha * beta;
        return Ok(AnalyticSolution {
            spec,
            square_integrable: a > 0.0,
            potential: potential.clone(),
            omega: Some(omega),
            boostable: false,
            slice: stationary_slice(*inv, omega, move |x| (-a * beta * x * x, -2.0 * a * beta * x)),
        });
    }
    let grid = eigen_grid.unwrap_or_else(default_eigen_grid);
    if grid.boundary != Boundary::Dirichlet {
        return Err(Error::InvalidGrid("eigen grid must be dirichlet".into()));
    }
    let sol = linear::solve(alpha, inv.i0, potential, &grid, mode)?;
    let log_phi: Vec<f64> = sol.phi.iter().map(|v| a * v.ln()).collect();
    let x0 = sol.x[0];
    let x1 = *sol.x.last().expect("interior points");
    let profile = Profile::sampled(x0, x1, log_phi)?;
    let omega = sol.omega;
    Ok(AnalyticSolution {
        spec,
        square_integrable: a > 0.0,
        potential: potential.clone(),
        omega: Some(omega),
        boostable: false,
        slice: stationary_slice(*inv, omega, move |x| {
            let (v, d1, _) = profile.eval(x);
            (v, d1)
        }),
    })
}

/// `i1 = 0 != i5`. Free case `theta1 = k x`, `omega = 2 i5 k^2`.
pub fn eikonal_free(inv: &Invariants, k: f64) -> Result<AnalyticSolution> {
    eikonal_check(inv)?;
    let omega = 2.0 * inv.i5 * k * k;
    Ok(AnalyticSolution {
        spec: base_spec(Family::EikonalStationary, inv).with(|e| e.k = Some(k)),
        square_integrable: false,
        potential: Potential::Free,
        omega: Some(omega),
        boostable: true,
        slice: stationary_slice(*inv, omega, move |x| (k * x, k)),
    })
}

fn eikonal_check(inv: &Invariants) -> Result<()> {
    regime(near_zero(inv.i1, inv.i5) && inv.i5 != 0.0, || {
        format!("needs i1 = 0 != i5, got i1 = {}, i5 = {}", inv.i1, inv.i5)
    })
}

/// `i1 = 0 != i5` with a potential: `theta1' = sqrt((omega - i0 V) / (2 i5))`,
/// integrated from `domain[0]`.
pub fn eikonal_stationary(inv: &Invariants, potential: &Potential, omega: f64, domain: [f64; 2]) -> Result<AnalyticSolution> {
    eikonal_check(inv)?;
    let [lo, hi] = domain;
    if !(hi > lo) {
        return Err(Error::InvalidParams(format!("empty domain [{lo}, {hi}]")));
    }
    let i0 = inv.i0;
    let i5 = inv.i5;
    let pot = potential.clone();
    let radicand = move |x: f64| (omega - i0 * pot.eval(x)) / (2.0 * i5);
    for j in 0..=2000 {
        let x = lo + (hi - lo) * j as f64 / 2000.0;
        let value = radicand(x);
        if value < 0.0 {
            return Err(Error::NegativeRadicand { x, value });
        }
    }
    let slope = move |x: f64| radicand(x).max(0.0).sqrt();
    Ok(AnalyticSolution {
        spec: base_spec(Family::EikonalStationary, inv).with(|e| {
            e.potential = Some(potential.clone());
            e.omega = Some(omega);
            e.domain = Some(domain);
        }),
        square_integrable: false,
        potential: potential.clone(),
        omega: Some(omega),
        boostable: potential.is_free(),
        slice: stationary_slice(*inv, omega, move |x| {
            (quad::adaptive_simpson(&slope, lo, x, quad::DEFAULT_TOLERANCE), slope(x))
        }),
    })
}

/// `i1 + i5 = 0 != i1`, free: `theta1 = eta x^2 + k x`, `omega = 4 i1 eta`.
pub fn poisson_stationary(inv: &Invariants, eta: f64, k: f64) -> Result<AnalyticSolution> {
    regime(near_zero(inv.dispersion(), inv.i1) && inv.i1 != 0.0, || {
        format!("needs i1 + i5 = 0 != i1, got i1 = {}, i5 = {}", inv.i1, inv.i5)
    })?;
    let omega = 4.0 * inv.i1 * eta;
    Ok(AnalyticSolution {
        spec: base_spec(Family::PoissonStationary, inv).with(|e| {
            e.eta = Some(eta);
            e.k = Some(k);
        }),
        square_integrable: eta < 0.0,
        potential: Potential::Free,
        omega: Some(omega),
        boostable: true,
        slice: stationary_slice(*inv, omega, move |x| (eta * x * x + k * x, 2.0 * eta * x + k)),
    })
}

/// `i1 = 0 = i5`, free: arbitrary `theta1`, `omega = 0`.
pub fn free_invariant_stationary(inv: &Invariants, profile: &Profile) -> Result<AnalyticSolution> {
    regime(near_zero(inv.i1, 1.0) && near_zero(inv.i5, 1.0), || {
        format!("needs i1 = 0 = i5, got i1 = {}, i5 = {}", inv.i1, inv.i5)
    })?;
    let mut prof = profile.clone();
    prof.prepare()?;
    let decays = prof.decays();
    Ok(AnalyticSolution {
        spec: base_spec(Family::FreeInvariantStationary, inv).with(|e| e.profile = Some(profile.clone())),
        square_integrable: decays,
        potential: Potential::Free,
        omega: Some(0.0),
        boostable: true,
        slice: stationary_slice(*inv, 0.0, move |x| {
            let (v, d1, _) = prof.eval(x);
            (v, d1)
        }),
    })
}

/// Galilei-type boost of a free stationary solution; needs `i2 i3 + i4 = 0`.
pub fn boost(sol: &AnalyticSolution, v: f64) -> Result<AnalyticSolution> {
    let inv = *sol.invariants();
    regime(friction_free(&inv), || {
        format!("boost needs i2 i3 + i4 = 0, got {}", inv.friction())
    })?;
    regime(sol.boostable, || format!("{} is not a free stationary solution", sol.spec.family))?;
    let spec = SolutionSpec::new(Family::BoostedStationary, inv).with(|e| {
        e.base = Some(Box::new(sol.spec.clone()));
        e.v = Some(v);
    });
    if v == 0.0 {
        return Ok(AnalyticSolution {
            spec,
            boostable: false,
            ..sol.clone()
        });
    }
    let inner = sol.slice.clone();
    let drift = 0.25 * v * v * (1.0 - inv.i3);
    Ok(AnalyticSolution {
        spec,
        square_integrable: sol.square_integrable,
        potential: Potential::Free,
        omega: sol.omega,
        boostable: false,
        slice: Arc::new(move |t| {
            let f = inner(t);
            Box::new(move |x| {
                let p = f(x - v * t);
                ThetaPoint {
                    theta1: p.theta1,
                    theta2: p.theta2 - 0.5 * v * x + drift * t,
                    dx_theta1: p.dx_theta1,
                    dx_theta2: p.dx_theta2 - 0.5 * v,
                    dt_theta1: p.dt_theta1 - v * p.dx_theta1,
                    dt_theta2: p.dt_theta2 - v * p.dx_theta2 + drift,
                }
            })
        }),
    })
}

/// `theta1 = a ln cosh(k (x - v t))` with `a = i1 / (i1 + i5) < 0`.
pub fn cosh_soliton(inv: &Invariants, k: f64, v: f64) -> Result<AnalyticSolution> {
    let p = inv.dispersion();
    regime(inv.i1 * p < 0.0, || format!("needs i1 (i1 + i5) < 0, got {}", inv.i1 * p))?;
    regime(k != 0.0, || "wavenumber must be nonzero".into())?;
    let a = inv.i1 / p;
    let omega = 2.0 * inv.i1 * inv.i1 * k * k / p;
    let stationary = AnalyticSolution {
        spec: base_spec(Family::CoshSoliton, inv),
        square_integrable: true,
        potential: Potential::Free,
        omega: Some(omega),
        boostable: true,
        slice: stationary_slice(*inv, omega, move |x| (a * ln_cosh(k * x), a * k * (k * x).tanh())),
    };
    let spec = base_spec(Family::CoshSoliton, inv).with(|e| {
        e.k = Some(k);
        e.v = Some(v);
    });
    if v == 0.0 {
        return Ok(AnalyticSolution { spec, ..stationary });
    }
    let moving = boost(&stationary, v)?;
    Ok(AnalyticSolution { spec, ..moving })
}

/// `i1 = i5 = 0 = i2 i3 + i4`: arbitrary `theta1` translated rigidly.
pub fn arbitrary_profile_soliton(inv: &Invariants, profile: &Profile, v: f64) -> Result<AnalyticSolution> {
    regime(
        near_zero(inv.i1, 1.0) && near_zero(inv.i5, 1.0) && friction_free(inv),
        || "needs i1 = i2 i3 + i4 = i5 = 0".into(),
    )?;
    let factor = if inv.i2 != 0.0 {
        1.0 + inv.i4 / inv.i2
    } else {
        log::warn!("i2 = 0: using the drift factor (1 - i3) in place of (1 + i4/i2)");
        1.0 - inv.i3
    };
    let drift = 0.25 * v * v * factor;
    let mut prof = profile.clone();
    prof.prepare()?;
    let decays = prof.decays();
    let prof = Arc::new(prof);
    let i2 = inv.i2;
    Ok(AnalyticSolution {
        spec: base_spec(Family::ArbitraryProfileSoliton, inv).with(|e| {
            e.profile = Some(profile.clone());
            e.v = Some(v);
        }),
        square_integrable: decays,
        potential: Potential::Free,
        omega: Some(0.0),
        boostable: false,
        slice: Arc::new(move |t| {
            let prof = prof.clone();
            Box::new(move |x| {
                let (q, dq, _) = prof.eval(x - v * t);
                ThetaPoint {
                    theta1: q,
                    theta2: i2 * q - 0.5 * v * x + drift * t,
                    dx_theta1: dq,
                    dx_theta2: i2 * dq - 0.5 * v,
                    dt_theta1: -v * dq,
                    dt_theta2: -v * i2 * dq + drift,
                }
            })
        }),
    })
}

/// Solution of `s'' = lambda s' + mu s`.
#[derive(Clone, Copy, Debug)]
struct CenterMotion {
    roots: [Complex64; 2],
    amps: [Complex64; 2],
    repeated: Option<(f64, f64, f64)>,
}

impl CenterMotion {
    fn new(lambda: f64, mu: f64, s0: f64, u0: f64) -> Self {
        let disc = lambda * lambda + 4.0 * mu;
        if disc.abs() <= 1e-14 * (lambda * lambda + 4.0 * mu.abs()).max(1e-300) || disc == 0.0 {
            let r = 0.5 * lambda;
            return Self {
                roots: [Complex64::new(r, 0.0); 2],
                amps: [Complex64::new(0.0, 0.0); 2],
                repeated: Some((r, s0, u0 - r * s0)),
            };
        }
        let sq = Complex64::new(disc, 0.0).sqrt();
        let r1 = 0.5 * (lambda + sq);
        let r2 = 0.5 * (lambda - sq);
        let a = (u0 - r2 * s0) / (r1 - r2);
        let b = s0 - a;
        Self {
            roots: [r1, r2],
            amps: [a, b],
            repeated: None,
        }
    }

    fn eval(&self, t: f64) -> (f64, f64, f64) {
        if let Some((r, c0, c1)) = self.repeated {
            let e = (r * t).exp();
            let s = (c0 + c1 * t) * e;
            let ds = c1 * e + r * s;
            let dds = r * c1 * e + r * ds;
            return (s, ds, dds);
        }
        let mut out = [0.0; 3];
        for j in 0..2 {
            let e = self.amps[j] * (self.roots[j] * t).exp();
            out[0] += e.re;
            out[1] += (e * self.roots[j]).re;
            out[2] += (e * self.roots[j] * self.roots[j]).re;
        }
        (out[0], out[1], out[2])
    }
}

/// Gaussian of constant width. Free case needs `i1 + i5 = 0` (any width);
/// with a harmonic potential the width is the ground-state width.
pub fn gaussian_soliton(inv: &Invariants, kappa: f64, sigma0: Option<f64>, s0: f64, ds0: f64) -> Result<AnalyticSolution> {
    let sigma = if kappa == 0.0 {
        regime(near_zero(inv.dispersion(), inv.i1), || "free gaussian solitary waves need i1 + i5 = 0".into())?;
        sigma0.ok_or_else(|| Error::InvalidParams("gaussian_soliton needs 'sigma0' when kappa = 0".into()))?
    } else {
        let sinf = gaussian::sigma_infinity(inv, kappa)
            .ok_or_else(|| Error::InvalidRegime("no real ground-state width for these invariants".into()))?;
        if let Some(s) = sigma0 {
            regime((s - sinf).abs() <= 1e-12 * sinf, || {
                format!("with kappa != 0 the width must equal sigma_inf = {sinf}, got {s}")
            })?;
        }
        sinf
    };
    if !(sigma > 0.0) {
        return Err(Error::NonpositiveWidth(sigma));
    }
    let motion = CenterMotion::new(2.0 * inv.friction() / (sigma * sigma), 2.0 * kappa * inv.i0, s0, ds0);
    let inv_c = *inv;
    let kin = move |t: f64| {
        let (s, ds, dds) = motion.eval(t);
        Kinematics {
            sigma,
            dsigma: 0.0,
            ddsigma: 0.0,
            s,
            ds,
            dds,
        }
    };
    let rate = move |t: f64| kin(t).phase_c_rate(&inv_c);
    Ok(AnalyticSolution {
        spec: base_spec(Family::GaussianSoliton, inv).with(|e| {
            e.kappa = Some(kappa);
            e.sigma0 = Some(sigma);
            e.s0 = Some(s0);
            e.ds0 = Some(ds0);
        }),
        square_integrable: true,
        potential: Potential::harmonic(kappa),
        omega: None,
        boostable: false,
        slice: Arc::new(move |t| {
            let k = kin(t);
            let c = quad::adaptive_simpson(&rate, 0.0, t, 1e-13);
            let dc = rate(t);
            Box::new(move |x| k.theta_at(&inv_c, x, c, dc))
        }),
    })
}

/// Gaussian state of a constant-width solitary wave at `t = 0`.
pub fn gaussian_soliton_state(sol: &AnalyticSolution) -> Option<GaussianState> {
    let e = &sol.spec.extras;
    if sol.spec.family != Family::GaussianSoliton {
        return None;
    }
    Some(GaussianState::new(e.sigma0?, 0.0, e.s0.unwrap_or(0.0), e.ds0.unwrap_or(0.0)))
}

/// Builds the solution described by `spec`.
pub fn build(spec: &SolutionSpec) -> Result<AnalyticSolution> {
    let inv = &spec.invariants;
    let e = &spec.extras;
    let fam = spec.family;
    let free_only = |e: &Extras| -> Result<()> {
        let free = e.potential.as_ref().map_or(true, |p| p.is_free()) && e.kappa.unwrap_or(0.0) == 0.0;
        regime(free, || format!("{fam} is defined only for V = 0"))
    };
    let sol = match fam {
        Family::PlaneWave => {
            free_only(e)?;
            plane_wave(inv, require(e.k, fam, "k")?)?
        }
        Family::HoGroundState => ho_ground_state(inv, require(e.kappa, fam, "kappa")?)?,
        Family::LinearizedStationary => {
            let pot = match (&e.potential, e.kappa) {
                (Some(p), _) => p.clone(),
                (None, Some(k)) => Potential::harmonic(k),
                (None, None) => return Err(Error::InvalidParams(format!("{fam} needs 'potential' or 'kappa'"))),
            };
            linearized_stationary(inv, &pot, e.mode.unwrap_or(0), e.eigen_grid)?
        }
        Family::EikonalStationary => match &e.potential {
            Some(p) if !p.is_free() => {
                eikonal_stationary(inv, p, require(e.omega, fam, "omega")?, require(e.domain, fam, "domain")?)?
            }
            _ => {
                free_only(e)?;
                eikonal_free(inv, require(e.k, fam, "k")?)?
            }
        },
        Family::PoissonStationary => {
            free_only(e)?;
            poisson_stationary(inv, require(e.eta, fam, "eta")?, e.k.unwrap_or(0.0))?
        }
        Family::FreeInvariantStationary => {
            free_only(e)?;
            let profile = e
                .profile
                .as_ref()
                .ok_or_else(|| Error::InvalidParams(format!("{fam} needs 'profile'")))?;
            free_invariant_stationary(inv, profile)?
        }
        Family::CoshSoliton => {
            free_only(e)?;
            cosh_soliton(inv, require(e.k, fam, "k")?, e.v.unwrap_or(0.0))?
        }
        Family::GaussianSoliton => gaussian_soliton(
            inv,
            e.kappa.unwrap_or(0.0),
            e.sigma0,
            e.s0.unwrap_or(0.0),
            e.ds0.unwrap_or(0.0),
        )?,
        Family::ArbitraryProfileSoliton => {
            free_only(e)?;
            let profile = e
                .profile
                .as_ref()
                .ok_or_else(|| Error::InvalidParams(format!("{fam} needs 'profile'")))?;
            arbitrary_profile_soliton(inv, profile, e.v.unwrap_or(0.0))?
        }
        Family::BoostedStationary => {
            let base = e
                .base
                .as_ref()
                .ok_or_else(|| Error::InvalidParams(format!("{fam} needs 'base'")))?;
            let mut base = (**base).clone();
            base.invariants = *inv;
            boost(&build(&base)?, require(e.v, fam, "v")?)?
        }
    };
    let offset = e.theta1_offset.unwrap_or(0.0);
    let mut sol = sol.with_offset(offset);
    sol.spec = spec.clone();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ap_residual, nse_residual};

    fn check_ap(sol: &AnalyticSolution, grid: &Grid1D, t: f64, tol: f64) {
        let th = sol.sample(grid, t);
        let r = ap_residual(&th, sol.invariants(), &sol.potential_on(grid)).unwrap();
        assert!(r.linf < tol, "{}: ap residual {:.3e}", sol.spec.family, r.linf);
    }

    #[test]
    fn plane_wave_dispersion() {
        let w = |i3: f64, k: f64| plane_wave(&Invariants::new([0.0, 0.0, 0.0, i3, 0.0, 0.0]), k).unwrap().omega.unwrap();
        assert_eq!(w(0.0, 1.0), 1.0);
        assert_eq!(w(1.0, 3.0), 0.0);
        assert_eq!(w(-1.0, 2.0), 8.0);
    }

    #[test]
    fn ho_ground_state_width() {
        let inv = Invariants::new([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]);
        let sol = ho_ground_state(&inv, 2.0).unwrap();
        let p = sol.eval(1.0, 0.0);
        assert!((p.theta1 + 8f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(p.theta2, 0.0);
        let g = Grid1D::dirichlet(-8.0, 8.0, 512).unwrap();
        check_ap(&sol, &g, 0.7, 1e-9);
        assert!(matches!(
            ho_ground_state(&Invariants::new([0.5, 0.125, 0.0, 0.0, 0.0, 0.0]), 2.0),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn linearized_harmonic_matches_ground_state() {
        let inv = Invariants::new([-0.5, 0.125, 0.7, 0.3, -0.2, 0.125]);
        let a = linearized_stationary(&inv, &Potential::harmonic(2.0), 0, None).unwrap();
        let b = ho_ground_state(&inv, 2.0).unwrap();
        for x in [-1.0, 0.3, 2.0] {
            let (p, q) = (a.eval(x, 0.4), b.eval(x, 0.4));
            assert!((p.theta1 - q.theta1).abs() < 1e-13);
            assert!((p.theta2 - q.theta2).abs() < 1e-13);
        }
        let w = (1.0f64 / 0.25).sqrt();
        assert!((b.eval(1.0, 0.0).theta1 + w / 4.0).abs() < 1e-14);
    }

    #[test]
    fn linearized_general_potential_residual() {
        let inv = Invariants::new([-1.0, 0.25, 0.3, 0.0, 0.0, 0.25]);
        let pot = Potential::GaussianWell { depth: 2.0, width: 1.5 };
        let eg = Grid1D::dirichlet(-12.0, 12.0, 801).unwrap();
        let sol = linearized_stationary(&inv, &pot, 0, Some(eg)).unwrap();
        let g = Grid1D::dirichlet(-6.0, 6.0, 301).unwrap();
        check_ap(&sol, &g, 0.0, 1e-3);
        assert!(matches!(
            linearized_stationary(&inv, &pot, 1, Some(eg)),
            Err(Error::NodefulMode { mode: 1 })
        ));
    }

    #[test]
    fn cosh_soliton_example() {
        let inv = Invariants::new([0.0, 0.125, 0.0, 0.0, 0.0, -0.25]);
        let sol = cosh_soliton(&inv, 1.0, 0.0).unwrap();
        let p = sol.eval(0.8, 2.0);
        assert!((p.theta1 + 0.8f64.cosh().ln()).abs() < 1e-14);
        assert!((p.theta2 - 0.5).abs() < 1e-14);
        assert!(matches!(
            cosh_soliton(&Invariants::new([0.0, 0.125, 0.0, 0.0, 0.0, 0.25]), 1.0, 0.0),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn moving_cosh_equals_boosted_stationary() {
        let inv = Invariants::new([0.3, 0.125, 0.4, 0.5, -0.2, -0.25]);
        let a = cosh_soliton(&inv, 1.3, 0.7).unwrap();
        let b = boost(&cosh_soliton(&inv, 1.3, 0.0).unwrap(), 0.7).unwrap();
        for (x, t) in [(0.1, 0.0), (-2.0, 1.5), (3.0, 4.0)] {
            assert_eq!(a.eval(x, t), b.eval(x, t));
        }
        let g = Grid1D::dirichlet(-16.0, 16.0, 2048).unwrap();
        check_ap(&a, &g, 1.0, 1e-7);
    }

    #[test]
    fn boost_requires_no_friction() {
        let inv = Invariants::new([0.3, 0.125, 0.4, 0.5, 0.0, -0.25]);
        let sol = cosh_soliton(&inv, 1.0, 0.0).unwrap();
        assert!(matches!(boost(&sol, 1.0), Err(Error::InvalidRegime(_))));
        let zero = boost(&sol, 0.0);
        assert!(zero.is_err());
    }

    #[test]
    fn eikonal_forms() {
        let inv = Invariants::new([0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let sol = eikonal_free(&inv, 1.0).unwrap();
        let p = sol.eval(0.5, 1.0);
        assert_eq!((p.theta1, p.theta2), (0.5, -2.0));
        let inv3 = Invariants { i2: 3.0, ..inv };
        let p = eikonal_free(&inv3, 1.0).unwrap().eval(0.5, 0.0);
        assert_eq!(p.dx_theta2, 3.0 * p.dx_theta1);

        let inv = Invariants::new([1.0, 0.0, 0.4, 0.0, 0.0, 0.5]);
        let pot = Potential::GaussianWell { depth: 1.0, width: 1.0 };
        let sol = eikonal_stationary(&inv, &pot, 0.5, [-4.0, 4.0]).unwrap();
        let h = 1e-4;
        for x in [-2.0, 0.0, 1.3] {
            let fd = (sol.eval(x + h, 0.0).theta1 - sol.eval(x - h, 0.0).theta1) / (2.0 * h);
            let exact = ((0.5 - pot.eval(x)) / 1.0).sqrt();
            assert!((fd - exact).abs() < 1e-8);
        }
        assert!(matches!(
            eikonal_stationary(&inv, &pot, -0.5, [-4.0, 4.0]),
            Err(Error::NegativeRadicand { .. })
        ));
    }

    #[test]
    fn poisson_and_free_invariant() {
        let inv = Invariants::new([0.0, 0.125, 1.0, 0.0, 0.0, -0.125]);
        let sol = poisson_stationary(&inv, -1.0, 0.0).unwrap();
        assert_eq!(sol.omega, Some(-0.5));
        assert!(sol.square_integrable);
        let g = Grid1D::dirichlet(-5.0, 5.0, 256).unwrap();
        check_ap(&sol, &g, 0.3, 1e-9);

        let inv = Invariants::new([0.4, 0.0, 0.5, 0.2, -0.1, 0.0]);
        let sol = free_invariant_stationary(&inv, &Profile::Cosh { a: 1.0, k: 1.0 }).unwrap();
        assert!(sol.square_integrable);
        check_ap(&sol, &Grid1D::dirichlet(-3.0, 3.0, 512).unwrap(), 0.0, 1e-9);
    }

    #[test]
    fn arbitrary_profile_translates() {
        let inv = Invariants::new([0.0, 0.0, 1.0, -1.0, 1.0, 0.0]);
        let profile = Profile::Polynomial { coeffs: vec![0.0, 0.0, 0.0, 0.0, -1.0] };
        let sol = arbitrary_profile_soliton(&inv, &profile, 1.0).unwrap();
        for x in [-0.5, 0.0, 0.7] {
            assert_eq!(sol.eval(x + 1.0, 1.0).theta1, sol.eval(x, 0.0).theta1);
        }
        check_ap(&sol, &Grid1D::dirichlet(-2.0, 3.0, 256).unwrap(), 0.5, 1e-9);
    }

    #[test]
    fn gaussian_soliton_residuals() {
        let inv = Invariants::new([-0.5, 0.1, 0.2, 0.5, -0.6, 0.025]);
        let sol = gaussian_soliton(&inv, 2.0, None, 0.5, 0.3).unwrap();
        let g = Grid1D::dirichlet(-6.0, 6.0, 2049).unwrap();
        let (psi, dt) = sol.sample_psi(&g, 0.8);
        let r = nse_residual(&psi, &dt, &inv.gauge_fixed(), &sol.potential_on(&g)).unwrap();
        assert!(r.linf < 1e-8, "{:.3e}", r.linf);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec: SolutionSpec =
            serde_json::from_str(r#"{"family":"cosh_soliton","invariants":[0,0.125,0,0,0,-0.25],"k":1,"v":1}"#).unwrap();
        assert_eq!(spec.family, Family::CoshSoliton);
        assert_eq!(spec.extras.v, Some(1.0));
        let back: SolutionSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
