//! Method-of-lines integration of the gauge-fixed amplitude and phase system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gauge_fixed_rhs, winding_slope, Derivatives, Differentiator, Grid1D, ThetaField};
use crate::params::Invariants;
use crate::potential::Potential;

pub const DEFAULT_SAFETY: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolverConfig {
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    pub invariants: Invariants,
    pub kappa: f64,
    pub record_every: usize,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default)]
    pub dealias: bool,
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}

impl EvolverConfig {
    pub fn new(grid: Grid1D, dt: f64, t_end: f64, invariants: Invariants, kappa: f64) -> Self {
        Self {
            grid,
            dt,
            t_end,
            invariants,
            kappa,
            record_every: 1,
            safety: DEFAULT_SAFETY,
            dealias: false,
        }
    }

    /// Largest admissible step, `safety dx^2 / max(1, |i1|, |i2|, |i1 + i5|)`.
    pub fn dt_limit(&self) -> f64 {
        let inv = &self.invariants;
        let scale = 1f64.max(inv.i1.abs()).max(inv.i2.abs()).max(inv.dispersion().abs());
        let dx = self.grid.dx();
        self.safety * dx * dx / scale
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.record_every == 0 {
            return Err(Error::InvalidParams(
                "need dt > 0, t_end >= 0 and record_every >= 1".into(),
            ));
        }
        let limit = self.dt_limit();
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StabilityGuard { dt: self.dt, limit });
        }
        Ok(())
    }

    /// Number of RK4 steps; the step is shortened so the run ends on `t_end`.
    /// When `dt` divides `t_end` a trace holds
    /// `floor(t_end / (dt record_every)) + 1` snapshots.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub fields: Vec<ThetaField>,
    pub mass: Vec<f64>,
    /// Time at which non-finite values appeared; the trace stops there.
    pub diverged: Option<f64>,
}

impl EvolutionTrace {
    pub fn into_result(self) -> Result<Self> {
        match self.diverged {
            Some(t) => Err(Error::Diverged { t }),
            None => Ok(self),
        }
    }

    pub fn last(&self) -> &ThetaField {
        self.fields.last().expect("trace holds the initial snapshot")
    }
}

struct Rhs<'a> {
    inv: &'a Invariants,
    v: Vec<f64>,
    diff: Differentiator,
    slope: f64,
}

impl Rhs<'_> {
    fn eval(&self, t1: &[f64], t2: &[f64], out1: &mut [f64], out2: &mut [f64]) {
        let (a, b): (Derivatives<f64>, Derivatives<f64>) = self.diff.pair_with_ramp(t1, t2, self.slope);
        gauge_fixed_rhs(self.inv, &self.v, &a, &b, out1, out2);
    }
}

/// Integrates `initial` to `cfg.t_end` with classical RK4.
pub fn evolve(initial: &ThetaField, cfg: &EvolverConfig) -> Result<EvolutionTrace> {
    cfg.validate()?;
    if initial.grid != cfg.grid {
        return Err(Error::InvalidGrid("initial field and config use different grids".into()));
    }
    let grid = cfg.grid;
    let n = grid.n;
    let rhs = Rhs {
        inv: &cfg.invariants,
        v: Potential::harmonic(cfg.kappa).sample(&grid),
        diff: Differentiator::new(grid, cfg.dealias),
        slope: winding_slope(&grid, &initial.theta2),
    };
    let steps = cfg.steps();
    let h = if steps == 0 { 0.0 } else { cfg.t_end / steps as f64 };

    let mut t1 = initial.theta1.clone();
    let mut t2 = initial.theta2.clone();
    let mut k = [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]], [
        vec![0.0; n],
        vec![0.0; n],
    ]];
    let mut s1 = vec![0.0; n];
    let mut s2 = vec![0.0; n];

    let snapshot = |t1: &[f64], t2: &[f64]| -> ThetaField {
        let (mut d1, mut d2) = (vec![0.0; n], vec![0.0; n]);
        rhs.eval(t1, t2, &mut d1, &mut d2);
        ThetaField {
            grid,
            theta1: t1.to_vec(),
            theta2: t2.to_vec(),
            dt_theta1: Some(d1),
            dt_theta2: Some(d2),
        }
    };
    let mass_of = |t1: &[f64]| grid.integrate(&t1.iter().map(|v| (2.0 * v).exp()).collect::<Vec<_>>());

    let mut trace = EvolutionTrace {
        times: vec![0.0],
        fields: vec![snapshot(&t1, &t2)],
        mass: vec![mass_of(&t1)],
        diverged: None,
    };

    for step in 1..=steps {
        {
            let [k1, k2, k3, k4] = &mut k;
            let [k1a, k1b] = k1;
            rhs.eval(&t1, &t2, k1a, k1b);
            for j in 0..n {
                s1[j] = t1[j] + 0.5 * h * k1a[j];
                s2[j] = t2[j] + 0.5 * h * k1b[j];
            }
            let [k2a, k2b] = k2;
            rhs.eval(&s1, &s2, k2a, k2b);
            for j in 0..n {
                s1[j] = t1[j] + 0.5 * h * k2a[j];
                s2[j] = t2[j] + 0.5 * h * k2b[j];
            }
            let [k3a, k3b] = k3;
            rhs.eval(&s1, &s2, k3a, k3b);
            for j in 0..n {
                s1[j] = t1[j] + h * k3a[j];
                s2[j] = t2[j] + h * k3b[j];
            }
            let [k4a, k4b] = k4;
            rhs.eval(&s1, &s2, k4a, k4b);
            for j in 0..n {
                t1[j] += h / 6.0 * (k1a[j] + 2.0 * k2a[j] + 2.0 * k3a[j] + k4a[j]);
                t2[j] += h / 6.0 * (k1b[j] + 2.0 * k2b[j] + 2.0 * k3b[j] + k4b[j]);
            }
        }
        let t = step as f64 * h;
        if t1.iter().chain(&t2).any(|v| !v.is_finite()) || t1.iter().any(|v| *v > 700.0) {
            log::warn!("evolution diverged at t = {t}");
            trace.diverged = Some(t);
            return Ok(trace);
        }
        if step % cfg.record_every == 0 {
            trace.times.push(t);
            trace.fields.push(snapshot(&t1, &t2));
            trace.mass.push(mass_of(&t1));
        }
    }
    Ok(trace)
}

/// Per-snapshot moments of the density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub t: f64,
    pub mass: f64,
    pub center: f64,
    /// `sqrt(<(x - center)^2>)`; a Gaussian `exp(-(x - s)^2 / sigma^2)` has width `sigma / sqrt(2)`.
    pub width: f64,
}

pub fn field_observables(field: &ThetaField, t: f64) -> Observables {
    let grid = &field.grid;
    let x = grid.points();
    let rho = field.rho();
    let mass = grid.integrate(&rho);
    let center = grid.integrate(&x.iter().zip(&rho).map(|(x, r)| x * r).collect::<Vec<_>>()) / mass;
    let var = grid.integrate(
        &x.iter()
            .zip(&rho)
            .map(|(x, r)| (x - center) * (x - center) * r)
            .collect::<Vec<_>>(),
    ) / mass;
    Observables {
        t,
        mass,
        center,
        width: var.max(0.0).sqrt(),
    }
}

pub fn observables(trace: &EvolutionTrace) -> Vec<Observables> {
    trace
        .times
        .iter()
        .zip(&trace.fields)
        .map(|(t, f)| field_observables(f, *t))
        .collect()
}
