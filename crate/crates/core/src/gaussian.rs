//! Moment dynamics of Gaussian wavepackets.
//!
//! With the ansatz
//!
//! ```text
//! theta1 = -(x - s)^2 / (2 sigma^2) - ln(sigma) / 2
//! theta2 = a x^2 + b x + c
//! ```
//!
//! the gauge-fixed amplitude and phase equations reduce to second-order ODEs
//! for the width `sigma(t)` and center `s(t)`; `a` and `b` follow
//! algebraically and `c` by quadrature.

use serde::{Deserialize, Serialize};

use crate::catalog::ThetaPoint;
use crate::error::{Error, Result};
use crate::field::{Grid1D, ThetaField};
use crate::params::Invariants;
use crate::quad;

pub const COLLAPSE_THRESHOLD: f64 = 1e-8;
pub const SPREAD_THRESHOLD: f64 = 1e8;
pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest relative change of `sigma` tolerated in one step.
pub const MAX_STEP_CHANGE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    #[serde(default)]
    pub t: f64,
    pub sigma: f64,
    pub dsigma: f64,
    pub s: f64,
    pub ds: f64,
}

impl GaussianState {
    pub fn new(sigma: f64, dsigma: f64, s: f64, ds: f64) -> Self {
        Self {
            t: 0.0,
            sigma,
            dsigma,
            s,
            ds,
        }
    }
}

impl Default for GaussianState {
    fn default() -> Self {
        Self::new(1.0, 0.0, 0.5, 0.0)
    }
}

/// `(sigma'', s'')`.
pub fn sigma_rhs(state: &GaussianState, inv: &Invariants, kappa: f64) -> Result<(f64, f64)> {
    let GaussianState {
        sigma, dsigma, ds, s, ..
    } = *state;
    if !(sigma > 0.0) {
        return Err(Error::NonpositiveWidth(sigma));
    }
    let g = inv.friction();
    let p = inv.dispersion();
    let s2 = sigma * sigma;
    let ddsigma = inv.i3 * dsigma * dsigma / sigma
        + 4.0 * g * dsigma / s2
        + 8.0 * p / (s2 * sigma)
        + 2.0 * kappa * inv.i0 * sigma;
    let dds = (inv.i3 * dsigma / sigma + 2.0 * g / s2) * ds + 2.0 * kappa * inv.i0 * s;
    Ok((ddsigma, dds))
}

/// Asymptotic ground-state width `(4 (i1 + i5) / (-kappa i0))^(1/4)`, when real.
pub fn sigma_infinity(inv: &Invariants, kappa: f64) -> Option<f64> {
    let r = 4.0 * inv.dispersion() / (-kappa * inv.i0);
    (r.is_finite() && r > 0.0).then(|| r.powf(0.25))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Collapsed,
    Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<GaussianState>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &GaussianState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn rk4<const N: usize>(y: [f64; N], h: f64, f: impl Fn(&[f64; N]) -> Result<[f64; N]>) -> Result<[f64; N]> {
    let add = |a: &[f64; N], b: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = f(&y)?;
    let k2 = f(&add(&y, &k1, 0.5 * h))?;
    let k3 = f(&add(&y, &k2, 0.5 * h))?;
    let k4 = f(&add(&y, &k3, h))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParams(format!("t_end must be nonnegative, got {t_end}")));
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

/// One classical RK4 step of the `(sigma, s)` system.
pub fn step(state: &GaussianState, inv: &Invariants, kappa: f64, h: f64) -> Result<GaussianState> {
    let y = [state.sigma, state.dsigma, state.s, state.ds];
    let y = rk4(y, h, |y| {
        let st = GaussianState::new(y[0], y[1], y[2], y[3]);
        let (a, b) = sigma_rhs(&st, inv, kappa)?;
        Ok([y[1], a, y[3], b])
    })?;
    Ok(GaussianState {
        t: state.t + h,
        sigma: y[0],
        dsigma: y[1],
        s: y[2],
        ds: y[3],
    })
}

/// Fixed-step RK4 on `[t0, t0 + t_end]`. The step is `t_end / ceil(t_end / dt)`
/// so the final sample lands on `t_end` exactly.
pub fn integrate(
    initial: &GaussianState,
    inv: &Invariants,
    kappa: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(initial.sigma > 0.0) {
        return Err(Error::NonpositiveWidth(initial.sigma));
    }
    let n = step_count(t_end, dt)?;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };
    let mut states = Vec::with_capacity(n + 1);
    states.push(*initial);
    let mut cur = *initial;
    for i in 0..n {
        let next = step(&cur, inv, kappa, h).map_err(|e| match e {
            Error::NonpositiveWidth(_) => Error::StepSizeTooLarge {
                t: cur.t,
                relative_change: 100.0,
            },
            other => other,
        })?;
        if !next.sigma.is_finite() || !next.s.is_finite() {
            return Err(Error::Diverged { t: next.t });
        }
        let change = (next.sigma - cur.sigma).abs() / cur.sigma;
        if change > MAX_STEP_CHANGE {
            return Err(Error::StepSizeTooLarge {
                t: cur.t,
                relative_change: 100.0 * change,
            });
        }
        let next = GaussianState {
            t: initial.t + (i + 1) as f64 * h,
            ..next
        };
        states.push(next);
        cur = next;
        if cur.sigma < COLLAPSE_THRESHOLD {
            return Ok(Trajectory {
                states,
                termination: Termination::Collapsed,
            });
        }
        if cur.sigma > SPREAD_THRESHOLD {
            return Ok(Trajectory {
                states,
                termination: Termination::Spread,
            });
        }
    }
    Ok(Trajectory {
        states,
        termination: Termination::Completed,
    })
}

fn require_q_form(inv: &Invariants) -> Result<()> {
    if inv.i3 == 1.0 {
        return Err(Error::InvalidRegime("q-form is undefined for i3 = 1".into()));
    }
    Ok(())
}

/// `q''` for `q = sigma^(1 - i3)`.
pub fn q_form_rhs(q: f64, dq: f64, inv: &Invariants, kappa: f64) -> Result<f64> {
    require_q_form(inv)?;
    if !(q > 0.0) {
        return Err(Error::NonpositiveQ(q));
    }
    let e = inv.i3 - 1.0;
    Ok(4.0 * inv.friction() * q.powf(2.0 / e) * dq
        - 8.0 * inv.dispersion() * e * q.powf((inv.i3 + 3.0) / e)
        - 2.0 * kappa * inv.i0 * e * q)
}

/// `s''` written in terms of `q`.
pub fn s_rhs_q_form(q: f64, dq: f64, ds: f64, s: f64, inv: &Invariants, kappa: f64) -> Result<f64> {
    require_q_form(inv)?;
    if !(q > 0.0) {
        return Err(Error::NonpositiveQ(q));
    }
    let e = inv.i3 - 1.0;
    Ok((2.0 * inv.friction() * q.powf(2.0 / e) - inv.i3 / e * dq / q) * ds + 2.0 * kappa * inv.i0 * s)
}

/// Integrates the q-form system and maps back to `(sigma, s)`.
pub fn integrate_q_form(
    initial: &GaussianState,
    inv: &Invariants,
    kappa: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<GaussianState>> {
    require_q_form(inv)?;
    if !(initial.sigma > 0.0) {
        return Err(Error::NonpositiveWidth(initial.sigma));
    }
    let n = step_count(t_end, dt)?;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };
    let p = 1.0 - inv.i3;
    let to_q = |st: &GaussianState| {
        let q = st.sigma.powf(p);
        [q, p * st.sigma.powf(-inv.i3) * st.dsigma, st.s, st.ds]
    };
    let from_q = |y: &[f64; 4], t: f64| {
        let sigma = y[0].powf(1.0 / p);
        GaussianState {
            t,
            sigma,
            dsigma: y[1] * sigma.powf(inv.i3) / p,
            s: y[2],
            ds: y[3],
        }
    };
    let mut y = to_q(initial);
    let mut out = vec![*initial];
    for i in 0..n {
        y = rk4(y, h, |y| {
            Ok([
                y[1],
                q_form_rhs(y[0], y[1], inv, kappa)?,
                y[3],
                s_rhs_q_form(y[0], y[1], y[3], y[2], inv, kappa)?,
            ])
        })?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { t: initial.t + (i + 1) as f64 * h });
        }
        out.push(from_q(&y, initial.t + (i + 1) as f64 * h));
    }
    Ok(out)
}

/// Newtonian picture of the q and s equations: `q'' = -U_q'(q) + F_q` and
/// `s'' = -U_s'(s) + F_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonianForces {
    pub u_q: f64,
    pub f_q: f64,
    pub u_s: f64,
    pub f_s: f64,
}

pub fn q_potential(q: f64, inv: &Invariants, kappa: f64) -> Result<f64> {
    require_q_form(inv)?;
    if !(q > 0.0) {
        return Err(Error::NonpositiveQ(q));
    }
    let p = inv.dispersion();
    let ki0 = kappa * inv.i0;
    let i3 = inv.i3;
    Ok(if i3 == -3.0 {
        -32.0 * p * q - 4.0 * ki0 * q * q
    } else if i3 == -1.0 {
        -16.0 * p * q.ln() - 2.0 * ki0 * q * q
    } else {
        let e = i3 - 1.0;
        4.0 * p * e * e / (i3 + 1.0) * q.powf(2.0 * (i3 + 1.0) / e) + ki0 * e * q * q
    })
}

pub fn potential_and_friction(
    q: f64,
    dq: f64,
    s: f64,
    ds: f64,
    inv: &Invariants,
    kappa: f64,
) -> Result<NewtonianForces> {
    let u_q = q_potential(q, inv, kappa)?;
    let e = inv.i3 - 1.0;
    let f_q = 4.0 * inv.friction() * q.powf(2.0 / e) * dq;
    let u_s = -kappa * inv.i0 * s * s;
    let f_s = (2.0 * inv.friction() * q.powf(2.0 / e) - inv.i3 / e * dq / q) * ds;
    Ok(NewtonianForces { u_q, f_q, u_s, f_s })
}

/// `q'^2 / 2 + U_q(q)`, conserved when the friction vanishes.
pub fn q_energy(state: &GaussianState, inv: &Invariants, kappa: f64) -> Result<f64> {
    require_q_form(inv)?;
    let p = 1.0 - inv.i3;
    let q = state.sigma.powf(p);
    let dq = p * state.sigma.powf(-inv.i3) * state.dsigma;
    Ok(0.5 * dq * dq + q_potential(q, inv, kappa)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    ConvergesToGroundState,
    Spreads,
    Collapses,
    PeriodicOrBounded,
    Undetermined,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::ConvergesToGroundState => "ConvergesToGroundState",
            VerdictKind::Spreads => "Spreads",
            VerdictKind::Collapses => "Collapses",
            VerdictKind::PeriodicOrBounded => "PeriodicOrBounded",
            VerdictKind::Undetermined => "Undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVerdict {
    pub kind: VerdictKind,
    pub sigma_limit: Option<f64>,
    pub s_limit: Option<f64>,
    pub horizon: f64,
}

/// Whether the sign conditions for relaxation to the ground state hold.
pub fn convergent_regime(inv: &Invariants, kappa: f64) -> bool {
    inv.i0 < 0.0 && inv.dispersion() > 0.0 && inv.friction() < 0.0 && kappa > 0.0
}

/// Integrates to `horizon` and labels the long-time behaviour.
pub fn classify_asymptotics(
    initial: &GaussianState,
    inv: &Invariants,
    kappa: f64,
    horizon: f64,
    dt: f64,
) -> Result<AsymptoticVerdict> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    let verdict = |kind, sigma_limit, s_limit| AsymptoticVerdict {
        kind,
        sigma_limit,
        s_limit,
        horizon,
    };
    let traj = match integrate(initial, inv, kappa, horizon, dt) {
        Ok(t) => t,
        Err(Error::StepSizeTooLarge { .. }) => {
            let probe = integrate(initial, inv, kappa, horizon, dt / 16.0);
            return Ok(match probe {
                Ok(t) if t.termination == Termination::Spread => verdict(VerdictKind::Spreads, None, None),
                Ok(t) if t.termination == Termination::Collapsed => {
                    verdict(VerdictKind::Collapses, Some(0.0), None)
                }
                Err(Error::StepSizeTooLarge { .. }) => verdict(VerdictKind::Collapses, Some(0.0), None),
                _ => verdict(VerdictKind::Undetermined, None, None),
            });
        }
        Err(e) => return Err(e),
    };
    match traj.termination {
        Termination::Collapsed => return Ok(verdict(VerdictKind::Collapses, Some(0.0), None)),
        Termination::Spread => return Ok(verdict(VerdictKind::Spreads, None, None)),
        Termination::Completed => {}
    }
    let states = &traj.states;
    let last = traj.last();
    if let Some(sinf) = sigma_infinity(inv, kappa) {
        let settled = (last.sigma - sinf).abs() < 1e-4 * sinf
            && last.dsigma.abs() < 1e-4
            && last.s.abs() < 1e-4
            && last.ds.abs() < 1e-4;
        if settled && convergent_regime(inv, kappa) {
            return Ok(verdict(VerdictKind::ConvergesToGroundState, Some(sinf), Some(0.0)));
        }
    }
    let tail = &states[states.len() / 2..];
    let increasing = tail.windows(2).all(|w| w[1].sigma >= w[0].sigma);
    let decreasing = tail.windows(2).all(|w| w[1].sigma <= w[0].sigma);
    let start = initial.sigma;
    if increasing && last.sigma > 10.0 * start {
        return Ok(verdict(VerdictKind::Spreads, None, None));
    }
    if decreasing && last.sigma < 0.1 * start {
        return Ok(verdict(VerdictKind::Collapses, Some(0.0), None));
    }
    let turning = tail
        .windows(2)
        .filter(|w| w[0].dsigma.signum() != w[1].dsigma.signum())
        .count();
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.sigma), hi.max(s.sigma)));
    let (slo, shi) = states
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.sigma), hi.max(s.sigma)));
    if turning >= 2 && lo > 0.5 * slo && hi < 2.0 * shi {
        return Ok(verdict(VerdictKind::PeriodicOrBounded, None, None));
    }
    if (last.dsigma.abs() < 1e-6) && (hi - lo) < 1e-6 * hi {
        return Ok(verdict(VerdictKind::PeriodicOrBounded, Some(last.sigma), None));
    }
    Ok(verdict(VerdictKind::Undetermined, None, None))
}

/// Coefficients `A, B, C` of `theta2 = i0 (A x^2 + B x + C)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PhaseCoefficients {
    pub A: f64,
    pub B: f64,
    pub C: f64,
}

impl PhaseCoefficients {
    /// Divides the raw polynomial coefficients by `i0`. At `i0 = 0` the raw
    /// coefficients are returned unchanged.
    pub fn from_raw(inv: &Invariants, a: f64, b: f64, c: f64) -> Self {
        let scale = if inv.i0 == 0.0 { 1.0 } else { 1.0 / inv.i0 };
        Self {
            A: a * scale,
            B: b * scale,
            C: c * scale,
        }
    }
}

/// Width and center with their first two time derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub sigma: f64,
    pub dsigma: f64,
    pub ddsigma: f64,
    pub s: f64,
    pub ds: f64,
    pub dds: f64,
}

impl Kinematics {
    pub fn from_state(state: &GaussianState, inv: &Invariants, kappa: f64) -> Result<Self> {
        let (ddsigma, dds) = sigma_rhs(state, inv, kappa)?;
        Ok(Self {
            sigma: state.sigma,
            dsigma: state.dsigma,
            ddsigma,
            s: state.s,
            ds: state.ds,
            dds,
        })
    }

    /// Raw coefficients `(a, b)` of `theta2` and their time derivatives.
    pub fn phase_ab(&self, inv: &Invariants) -> [f64; 4] {
        let Kinematics {
            sigma: sg,
            dsigma: dsg,
            ddsigma: ddsg,
            s,
            ds,
            dds,
        } = *self;
        let s2 = sg * sg;
        let a = -dsg / (4.0 * sg) - inv.i2 / (2.0 * s2);
        let b = -ds / 2.0 - 2.0 * a * s;
        let da = -ddsg / (4.0 * sg) + dsg * dsg / (4.0 * s2) + inv.i2 * dsg / (s2 * sg);
        let db = -dds / 2.0 - 2.0 * da * s - 2.0 * a * ds;
        [a, b, da, db]
    }

    /// Rate of the constant phase term `c`.
    pub fn phase_c_rate(&self, inv: &Invariants) -> f64 {
        let [_, b, _, _] = self.phase_ab(inv);
        let (sg, s) = (self.sigma, self.s);
        let s2 = sg * sg;
        2.0 * inv.i1 / s2 - inv.gradient_coefficient() * s * s / (s2 * s2) - 2.0 * inv.i4 * s * b / s2
            - (inv.i3 - 1.0) * b * b
    }

    pub fn theta_at(&self, inv: &Invariants, x: f64, c: f64, dc: f64) -> ThetaPoint {
        let [a, b, da, db] = self.phase_ab(inv);
        let (sg, dsg, s, ds) = (self.sigma, self.dsigma, self.s, self.ds);
        let s2 = sg * sg;
        let y = x - s;
        ThetaPoint {
            theta1: -y * y / (2.0 * s2) - 0.5 * sg.ln(),
            theta2: a * x * x + b * x + c,
            dx_theta1: -y / s2,
            dx_theta2: 2.0 * a * x + b,
            dt_theta1: y * ds / s2 + y * y * dsg / (s2 * sg) - dsg / (2.0 * sg),
            dt_theta2: da * x * x + db * x + dc,
        }
    }
}

/// Reconstructed Gaussian at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSnapshot {
    pub state: GaussianState,
    pub coefficients: PhaseCoefficients,
    #[serde(skip)]
    kinematics: Option<Kinematics>,
    #[serde(skip)]
    raw_c: f64,
    #[serde(skip)]
    inv: Option<Invariants>,
}

impl GaussianSnapshot {
    pub fn theta_at(&self, x: f64) -> ThetaPoint {
        let (k, inv) = (self.kinematics.expect("built by reconstruct_theta"), self.inv.expect("set"));
        k.theta_at(&inv, x, self.raw_c, k.phase_c_rate(&inv))
    }

    pub fn sample(&self, grid: &Grid1D) -> ThetaField {
        let pts: Vec<ThetaPoint> = grid.points().into_iter().map(|x| self.theta_at(x)).collect();
        ThetaPoint::collect(grid, &pts)
    }
}

/// Builds the ansatz at `state`; `c` is the accumulated constant phase term.
pub fn reconstruct_theta(state: &GaussianState, inv: &Invariants, kappa: f64, c: f64) -> Result<GaussianSnapshot> {
    let k = Kinematics::from_state(state, inv, kappa)?;
    let [a, b, _, _] = k.phase_ab(inv);
    Ok(GaussianSnapshot {
        state: *state,
        coefficients: PhaseCoefficients::from_raw(inv, a, b, c),
        kinematics: Some(k),
        raw_c: c,
        inv: Some(*inv),
    })
}

/// Snapshots along a trajectory with `c(t)` accumulated by the trapezoid rule.
pub fn reconstruct_trajectory(traj: &[GaussianState], inv: &Invariants, kappa: f64) -> Result<Vec<GaussianSnapshot>> {
    let mut out = Vec::with_capacity(traj.len());
    let mut c = 0.0;
    let mut prev_rate: Option<(f64, f64)> = None;
    for st in traj {
        let rate = Kinematics::from_state(st, inv, kappa)?.phase_c_rate(inv);
        if let Some((t0, r0)) = prev_rate {
            c += 0.5 * (st.t - t0) * (r0 + rate);
        }
        prev_rate = Some((st.t, rate));
        out.push(reconstruct_theta(st, inv, kappa, c)?);
    }
    Ok(out)
}

/// Explicit special solutions of the width equation.
pub mod closed_form {
    use super::*;

    /// Free spreading width of the linear class with `i1 + i5 = 1/8`.
    pub fn linear_free_width(sigma0: f64, t: f64) -> f64 {
        (sigma0 * sigma0 + t * t / (sigma0 * sigma0)).sqrt()
    }

    /// `sigma = sqrt((exp(2 s1 t - s1 s2) + 2 (i2 + i4)) / s1)` for `i3 = 1`,
    /// `i1 + i5 = 0`, `kappa = 0`.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct ExponentialWidth {
        pub sigma1: f64,
        pub sigma2: f64,
        pub g: f64,
    }

    impl ExponentialWidth {
        pub fn fit(state: &GaussianState, inv: &Invariants) -> Result<Self> {
            if inv.i3 != 1.0 || inv.dispersion() != 0.0 {
                return Err(Error::InvalidRegime("needs i3 = 1 and i1 + i5 = 0".into()));
            }
            let g = inv.i2 + inv.i4;
            let e0 = state.sigma * state.dsigma;
            let sigma1 = (e0 + 2.0 * g) / (state.sigma * state.sigma);
            if !(e0 > 0.0) || sigma1 == 0.0 {
                return Err(Error::InvalidRegime(
                    "initial data outside the admissible region (need sigma * sigma' > 0)".into(),
                ));
            }
            Ok(Self {
                sigma1,
                sigma2: -e0.ln() / sigma1,
                g,
            })
        }

        pub fn eval(&self, t: f64) -> f64 {
            (((2.0 * self.sigma1 * t - self.sigma1 * self.sigma2).exp() + 2.0 * self.g) / self.sigma1).sqrt()
        }
    }

    /// `sigma = sigma0 (sigma1 t + 1)^(1 / (1 - i3))` for `i4 = -i2 i3`,
    /// `i1 + i5 = 0`, `kappa = 0`.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct PowerWidth {
        pub sigma0: f64,
        pub sigma1: f64,
        pub exponent: f64,
    }

    impl PowerWidth {
        pub fn fit(state: &GaussianState, inv: &Invariants) -> Result<Self> {
            if inv.i3 == 1.0 || inv.friction() != 0.0 || inv.dispersion() != 0.0 {
                return Err(Error::InvalidRegime(
                    "needs i4 = -i2 i3, i3 != 1 and i1 + i5 = 0".into(),
                ));
            }
            let exponent = 1.0 / (1.0 - inv.i3);
            Ok(Self {
                sigma0: state.sigma,
                sigma1: state.dsigma / (state.sigma * exponent),
                exponent,
            })
        }

        pub fn eval(&self, t: f64) -> f64 {
            self.sigma0 * (self.sigma1 * t + 1.0).powf(self.exponent)
        }
    }

    /// Constant `C1` of the implicit solution, fitted to the initial data.
    pub fn implicit_constant(state: &GaussianState, inv: &Invariants) -> f64 {
        let (sg, dsg) = (state.sigma, state.dsigma);
        if inv.i3 == -1.0 {
            2.0 * sg * dsg - 8.0 * (inv.i4 - inv.i2) * sg.ln()
        } else {
            (2.0 * sg * dsg + 8.0 * inv.friction() / (1.0 + inv.i3)) / sg.powf(inv.i3 + 1.0)
        }
    }

    /// Left side of the implicit relation `int_{sigma0}^{sigma} 2x dx / h(x) = t - t0`.
    pub fn implicit_time(sigma0: f64, sigma: f64, c1: f64, inv: &Invariants) -> f64 {
        let g = inv.friction();
        let i3 = inv.i3;
        let f = |x: f64| {
            let h = if i3 == -1.0 {
                8.0 * (inv.i4 - inv.i2) * x.ln() + c1
            } else {
                c1 * x.powf(i3 + 1.0) - 8.0 * g / (1.0 + i3)
            };
            2.0 * x / h
        };
        quad::adaptive_simpson(&f, sigma0, sigma, 1e-13)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> Invariants {
        Invariants::new([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn rhs_examples() {
        let (a, _) = sigma_rhs(&GaussianState::new(1.0, 0.0, 0.0, 0.0), &linear(), 0.0).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
        let inv = Invariants::new([-0.5, 0.1, 0.0, 0.0, -1.0, 0.025]);
        let sinf = sigma_infinity(&inv, 2.0).unwrap();
        assert!((sinf - 0.5f64.powf(0.25)).abs() < 1e-15);
        let (a, b) = sigma_rhs(&GaussianState::new(sinf, 0.0, 0.0, 0.0), &inv, 2.0).unwrap();
        assert!(a.abs() < 1e-14 && b == 0.0);
        assert!(matches!(
            sigma_rhs(&GaussianState::new(0.0, 0.0, 0.0, 0.0), &inv, 2.0),
            Err(Error::NonpositiveWidth(_))
        ));
    }

    #[test]
    fn linear_free_spreading() {
        let s0 = 0.8;
        let tr = integrate(&GaussianState::new(s0, 0.0, 0.0, 0.0), &linear(), 0.0, 1.0, 1e-4).unwrap();
        let last = tr.last();
        assert!((last.t - 1.0).abs() < 1e-12);
        assert!((last.sigma - closed_form::linear_free_width(s0, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn step_guard_trips() {
        let err = integrate(&GaussianState::new(1.0, -5.0, 0.0, 0.0), &linear(), 0.0, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::StepSizeTooLarge { .. }));
    }

    #[test]
    fn q_form_reduces_to_sigma_form_at_i3_zero() {
        let inv = Invariants::new([-0.3, 0.2, 0.4, 0.0, -0.7, 0.1]);
        let st = GaussianState::new(1.3, 0.4, 0.0, 0.0);
        let (a, _) = sigma_rhs(&st, &inv, 1.5).unwrap();
        let q = q_form_rhs(st.sigma, st.dsigma, &inv, 1.5).unwrap();
        assert!((a - q).abs() < 1e-13);
        assert!(matches!(
            q_form_rhs(1.0, 0.0, &Invariants::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]), 0.0),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn potential_examples() {
        let inv = Invariants::new([0.0, 0.125, 0.0, 3.0, 0.0, 0.0]);
        let f = potential_and_friction(1.7, 0.3, 0.0, 0.0, &inv, 0.0).unwrap();
        assert!((f.u_q - 0.5 * 1.7f64.powi(4)).abs() < 1e-12);
        assert_eq!(f.f_q, 0.0);
        let inv = Invariants::new([-0.5, 0.1, 0.0, -1.0, 0.0, 0.05]);
        let u = q_potential(2.0, &inv, 2.0).unwrap();
        assert!((u - (-16.0 * 0.15 * 2f64.ln() + 2.0 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn force_is_minus_potential_gradient() {
        for i3 in [-3.0, -1.0, -0.4, 0.5, 2.0] {
            let inv = Invariants::new([-0.7, 0.3, 0.2, i3, 0.0, 0.1]);
            let inv = Invariants { i4: -inv.i2 * i3, ..inv };
            let kappa = 1.3;
            for q in [0.5, 1.0, 2.2] {
                let h = 1e-5;
                let du = (q_potential(q + h, &inv, kappa).unwrap() - q_potential(q - h, &inv, kappa).unwrap()) / (2.0 * h);
                let acc = q_form_rhs(q, 0.0, &inv, kappa).unwrap();
                assert!((acc + du).abs() < 1e-7 * (1.0 + acc.abs()), "i3={i3} q={q}");
            }
        }
    }

    #[test]
    fn ground_state_fixed_point_is_stationary() {
        let inv = Invariants::new([-0.5, 0.1, 0.0, 0.0, -1.0, 0.025]);
        let sinf = sigma_infinity(&inv, 2.0).unwrap();
        let tr = integrate(&GaussianState::new(sinf, 0.0, 0.0, 0.0), &inv, 2.0, 10.0, 1e-3).unwrap();
        assert!(tr.states.iter().all(|s| (s.sigma - sinf).abs() < 1e-13 && s.s == 0.0));
    }

    #[test]
    fn classify_examples() {
        let inv = Invariants::new([-0.5, 0.125, 0.0, 0.0, -1.0, 0.0]);
        let v = classify_asymptotics(&GaussianState::default(), &inv, 2.0, DEFAULT_HORIZON, DEFAULT_DT).unwrap();
        assert_eq!(v.kind, VerdictKind::ConvergesToGroundState);
        assert!((v.sigma_limit.unwrap() - 0.840896).abs() < 1e-6);
        let v = classify_asymptotics(&GaussianState::default(), &linear(), 0.0, DEFAULT_HORIZON, DEFAULT_DT).unwrap();
        assert_eq!(v.kind, VerdictKind::Spreads);
        let unstable = Invariants::new([0.5, -0.125, 0.0, 0.0, 0.0, 0.0]);
        let sinf = sigma_infinity(&unstable, 2.0).unwrap();
        let v = classify_asymptotics(&GaussianState::new(1.01 * sinf, 0.0, 0.0, 0.0), &unstable, 2.0, 100.0, 1e-3)
            .unwrap();
        assert_ne!(v.kind, VerdictKind::ConvergesToGroundState);
    }

    #[test]
    fn symmetric_start_has_no_linear_phase() {
        let snap = reconstruct_theta(&GaussianState::new(1.2, 0.0, 0.0, 0.0), &linear(), 0.0, 0.0).unwrap();
        assert_eq!(snap.coefficients.B, 0.0);
    }

    #[test]
    fn sigsol_closed_forms() {
        let inv = Invariants::new([0.3, 0.2, 0.5, 1.0, -0.25, -0.2]);
        let st = GaussianState::new(1.1, 0.4, 0.0, 0.0);
        let cf = closed_form::ExponentialWidth::fit(&st, &inv).unwrap();
        assert!((cf.eval(0.0) - 1.1).abs() < 1e-14);
        let tr = integrate(&st, &inv, 0.0, 1.0, 1e-3).unwrap();
        assert!((tr.last().sigma - cf.eval(1.0)).abs() < 1e-7);

        let inv = Invariants::new([0.3, 0.2, 0.5, -0.5, 0.25, -0.2]);
        let st = GaussianState::new(0.9, 0.3, 0.0, 0.0);
        let cf = closed_form::PowerWidth::fit(&st, &inv).unwrap();
        let tr = integrate(&st, &inv, 0.0, 1.0, 1e-3).unwrap();
        assert!((tr.last().sigma - cf.eval(1.0)).abs() < 1e-7);
    }
}
