use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::*;
use super::sweep;
use crate::catalog::{AnalyticSolution, SolutionSpec};
use crate::error::{Error, Result};
use crate::evolver::{self, EvolverConfig};
use crate::field::{ap_residual, ap_residual_general, nse_residual, Boundary, Grid1D, ResidualReport, ThetaField};
use crate::gaussian::{self, Termination};
use crate::io;
use crate::params::{GaugeElement, Invariants, NuMuParams};
use crate::potential::Potential;

/// Result of a command: a JSON value for `--json` and a text rendering.
pub struct Outcome {
    pub result: Value,
    pub text: String,
}

impl Outcome {
    pub fn new_value(result: Value, text: String) -> Result<Self> {
        Ok(Self { result, text })
    }

    fn new<T: Serialize>(result: &T, text: String) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            text,
        })
    }
}

pub fn execute(cfg: &CommandConfig) -> Result<Outcome> {
    match cfg {
        CommandConfig::Invariants { params } => invariants(params),
        CommandConfig::GaugeApply { params, element } => gauge_apply(params, *element),
        CommandConfig::GaugeFind { from, to } => {
            let a = GaugeElement::connecting(from, to)?;
            Outcome::new(
                &json!({ "element": a }),
                format!("lambda = {}\ngamma = {}", a.lambda, a.gamma),
            )
        }
        CommandConfig::GaugeFix { params } => {
            let fixed = params.invariants().gauge_fixed();
            let a = GaugeElement::connecting(params, &fixed)?;
            Outcome::new(
                &json!({ "element": a, "params": fixed }),
                format!(
                    "lambda = {}\ngamma = {}\nnu = {}\nmu = {}",
                    a.lambda,
                    a.gamma,
                    tuple(&fixed.nu()),
                    tuple(&fixed.mu())
                ),
            )
        }
        CommandConfig::Solution(c) => solution(c),
        CommandConfig::Residual(c) => residual(c),
        CommandConfig::GaussianIntegrate(c) => gaussian_integrate(c),
        CommandConfig::GaussianClassify(c) => gaussian_classify(c),
        CommandConfig::Evolve(c) => evolve(c),
        CommandConfig::Sweep(c) => sweep::run(c),
    }
}

pub fn tuple(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{}", x + 0.0)).collect();
    format!("({})", parts.join(", "))
}

fn invariants(p: &NuMuParams) -> Result<Outcome> {
    let inv = p.invariants();
    Outcome::new(
        &json!({
            "invariants": inv,
            "linearizable": inv.is_linearizable(),
            "friction": inv.friction(),
            "dispersion": inv.dispersion(),
        }),
        format!(
            "invariants = {}\nlinearizable = {}",
            tuple(&inv.as_array()),
            inv.is_linearizable()
        ),
    )
}

fn gauge_apply(p: &NuMuParams, a: GaugeElement) -> Result<Outcome> {
    let a = GaugeElement::new(a.lambda, a.gamma)?;
    let image = p.gauge(a);
    let deviation = p.invariants().max_relative_deviation(&image.invariants());
    Outcome::new(
        &json!({ "params": image, "invariants": image.invariants(), "invariant_deviation": deviation }),
        format!(
            "nu = {}\nmu = {}\ninvariants = {}",
            tuple(&image.nu()),
            tuple(&image.mu()),
            tuple(&image.invariants().as_array())
        ),
    )
}

#[derive(Serialize)]
struct SnapshotResidual {
    t: f64,
    nse: ResidualReport,
    ap: ResidualReport,
}

/// `nse` on the grid as given; `ap` on the same nodes with finite differences,
/// since the phase and log-amplitude need not be periodic.
fn residual_pair(field: &ThetaField, p: &NuMuParams, gauge_fixed: Option<&Invariants>, v: &[f64]) -> Result<(ResidualReport, ResidualReport)> {
    let psi = field.to_complex();
    let dt_psi = field.dt_psi()?;
    let nse = nse_residual(&psi, &dt_psi, p, v)?;
    let fd = ThetaField {
        grid: field.grid.as_dirichlet(),
        ..field.clone()
    };
    let ap = match gauge_fixed {
        Some(inv) => ap_residual(&fd, inv, v)?,
        None => ap_residual_general(&fd, p, v)?,
    };
    Ok((nse, ap))
}

fn build(spec: &SolutionSpec) -> Result<AnalyticSolution> {
    let sol = spec.build()?;
    log::info!("built {} solution", spec.family);
    Ok(sol)
}

fn solution(c: &SolutionConfig) -> Result<Outcome> {
    let sol = build(&c.spec)?;
    let inv = *sol.invariants();
    let p = inv.gauge_fixed();
    let v = sol.potential_on(&c.grid);
    let times = c.times.times();
    let ranged = c.times.t1 > c.times.t0;
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
    }
    let mut reports = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let field = sol.sample(&c.grid, t);
        if let Some(dir) = &c.out {
            fs::write(
                dir.join(format!("snapshot_{i:04}.csv")),
                io::field_csv(&field, ranged.then_some(t), false),
            )?;
        }
        let (nse, ap) = residual_pair(&field, &p, Some(&inv), &v)?;
        reports.push(SnapshotResidual { t, nse, ap });
    }
    let max_nse = reports.iter().fold(0.0f64, |m, r| m.max(r.nse.linf));
    let max_ap = reports.iter().fold(0.0f64, |m, r| m.max(r.ap.linf));
    let result = json!({
        "family": c.spec.family,
        "omega": sol.omega,
        "square_integrable": sol.square_integrable,
        "snapshots": reports.len(),
        "max_nse_linf": max_nse,
        "max_ap_linf": max_ap,
        "residuals": reports,
    });
    if let Some(dir) = &c.out {
        io::write_json(&dir.join("residuals.json"), &result)?;
    }
    let mut text = format!("{} snapshots of {}\n", reports.len(), c.spec.family);
    for r in &reports {
        let _ = writeln!(text, "t = {:<8} nse linf = {:.3e}  ap linf = {:.3e}", r.t, r.nse.linf, r.ap.linf);
    }
    let _ = write!(text, "max nse linf = {max_nse:.3e}\nmax ap linf = {max_ap:.3e}");
    Outcome::new(&result, text)
}

fn load_source(source: &FieldSource, grid: &Grid1D) -> Result<(ThetaField, Option<AnalyticSolution>)> {
    match source {
        FieldSource::Spec { spec, t } => {
            let sol = build(spec)?;
            Ok((sol.sample(grid, *t), Some(sol)))
        }
        FieldSource::Field { path } => {
            let f = io::load_field_csv(path, grid.boundary)?;
            if f.grid.n != grid.n || (f.grid.x_min - grid.x_min).abs() > 1e-12 * grid.length().max(1.0) {
                return Err(Error::InvalidGrid(format!("{} does not match the configured grid", path.display())));
            }
            Ok((ThetaField { grid: *grid, ..f }, None))
        }
    }
}

/// Grid of a field file, for resolving commands that start from one.
pub fn field_grid(path: &Path, boundary: Boundary) -> Result<Grid1D> {
    Ok(io::load_field_csv(path, boundary)?.grid)
}

fn residual(c: &ResidualConfig) -> Result<Outcome> {
    let (field, sol) = load_source(&c.source, &c.grid)?;
    let v = match &sol {
        Some(s) => s.potential_on(&c.grid),
        None => Potential::harmonic(c.kappa).sample(&c.grid),
    };
    let gauge_fixed = sol.as_ref().map(|s| *s.invariants());
    let (nse, ap) = residual_pair(&field, &c.params, gauge_fixed.as_ref(), &v)?;
    let text = format!(
        "nse: l2 = {:.3e}  linf = {:.3e}\nap:  l2 = {:.3e}  linf = {:.3e}",
        nse.l2, nse.linf, ap.l2, ap.linf
    );
    Outcome::new(&json!({ "nse": nse, "ap": ap }), text)
}

fn gaussian_integrate(c: &GaussianConfig) -> Result<Outcome> {
    if c.every == 0 {
        return Err(Error::InvalidParams("every must be at least 1".into()));
    }
    let traj = gaussian::integrate(&c.initial, &c.invariants, c.kappa, c.horizon, c.dt)?;
    let snaps = gaussian::reconstruct_trajectory(&traj.states, &c.invariants, c.kappa)?;
    let last_index = snaps.len() - 1;
    let kept: Vec<_> = snaps
        .iter()
        .enumerate()
        .filter(|(i, _)| i % c.every == 0 || *i == last_index)
        .map(|(_, s)| *s)
        .collect();
    if let Some(path) = &c.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, io::trajectory_csv(&kept))?;
    }
    let last = *traj.last();
    if traj.termination == Termination::Collapsed {
        return Err(Error::Collapsed { t: last.t });
    }
    let termination = match traj.termination {
        Termination::Completed => "completed",
        Termination::Spread => "spread",
        Termination::Collapsed => unreachable!(),
    };
    let text = format!(
        "termination = {termination}\nt = {}\nsigma = {}\ndsigma = {}\ns = {}\nds = {}",
        last.t, last.sigma, last.dsigma, last.s, last.ds
    );
    Outcome::new(&json!({ "termination": termination, "rows": kept.len(), "final": last }), text)
}

fn gaussian_classify(c: &GaussianConfig) -> Result<Outcome> {
    let verdict = gaussian::classify_asymptotics(&c.initial, &c.invariants, c.kappa, c.horizon, c.dt)?;
    if let Some(path) = &c.out {
        io::write_json(path, &verdict)?;
    }
    let mut text = verdict.kind.as_str().to_string();
    if let Some(s) = verdict.sigma_limit {
        let _ = write!(text, ", sigma_inf = {s:.6}");
    }
    if let Some(s) = gaussian::sigma_infinity(&c.invariants, c.kappa) {
        let _ = write!(text, "\nanalytic sigma_inf = {s}");
    }
    Outcome::new(&verdict, text)
}

fn evolve(c: &EvolveConfig) -> Result<Outcome> {
    let (initial, _) = load_source(&c.source, &c.grid)?;
    let cfg = EvolverConfig {
        grid: c.grid,
        dt: c.dt,
        t_end: c.t_end,
        invariants: c.invariants,
        kappa: c.kappa,
        record_every: c.record_every,
        safety: c.safety,
        dealias: c.dealias,
    };
    let trace = evolver::evolve(&initial, &cfg)?;
    let obs = evolver::observables(&trace);
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir)?;
        for (i, (t, f)) in trace.times.iter().zip(&trace.fields).enumerate() {
            fs::write(dir.join(format!("snapshot_{i:04}.csv")), io::field_csv(f, Some(*t), true))?;
        }
        fs::write(dir.join("observables.csv"), io::observables_csv(&obs))?;
        io::write_json(&dir.join("run.json"), &CommandConfig::Evolve(c.clone()))?;
    }
    if let Some(t) = trace.diverged {
        return Err(Error::Diverged { t });
    }
    let (m0, m1) = (trace.mass[0], *trace.mass.last().expect("nonempty"));
    let drift = (m1 - m0).abs() / m0.abs();
    let last = obs.last().expect("nonempty");
    let text = format!(
        "steps = {}\nsnapshots = {}\nmass drift = {drift:.3e}\ncenter = {}\nwidth = {}",
        cfg.steps(),
        trace.times.len(),
        last.center,
        last.width
    );
    Outcome::new(
        &json!({
            "steps": cfg.steps(),
            "snapshots": trace.times.len(),
            "mass_drift": drift,
            "final": last,
        }),
        text,
    )
}
