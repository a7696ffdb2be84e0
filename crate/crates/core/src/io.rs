//! File formats: parameter documents, field and trajectory CSV, JSON reports.
//!
//! CSV output uses 17 significant digits, `,` separators and `\n` line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::Observables;
use crate::field::{Boundary, Grid1D, ThetaField};
use crate::gaussian::GaussianSnapshot;
use crate::params::{Invariants, NuMuParams, PhysicalParams};

pub const FIELD_HEADER: &str = "x,theta1,theta2,re_psi,im_psi,rho";
pub const TRAJECTORY_HEADER: &str = "t,sigma,dsigma,s,ds,A,B,C";
pub const OBSERVABLES_HEADER: &str = "t,mass,center,width";

/// `{:.16e}`: 17 significant digits, locale-free.
pub fn num(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// Any of the accepted parameter documents. The flat component form is what
/// `gauge apply` and `gauge fix` emit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsDocument {
    NuMu {
        nu: [f64; 2],
        mu: [f64; 6],
    },
    Physical {
        physical: PhysicalParams,
    },
    Invariants {
        invariants: Invariants,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauge: Option<[f64; 2]>,
    },
    Components(NuMuParams),
}

impl ParamsDocument {
    pub fn normalize(&self) -> Result<NuMuParams> {
        match self {
            ParamsDocument::NuMu { nu, mu } => NuMuParams::new(*nu, *mu),
            ParamsDocument::Physical { physical } => NuMuParams::from_physical(physical),
            ParamsDocument::Invariants { invariants, gauge } => {
                let [nu1, mu1] = gauge.unwrap_or([1.0, 0.0]);
                invariants.reconstruct(nu1, mu1)
            }
            ParamsDocument::Components(p) => NuMuParams::new(p.nu(), p.mu()),
        }
    }

    /// Spring constant carried by a physical document.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            ParamsDocument::Physical { physical } => Some(physical.kappa),
            _ => None,
        }
    }
}

pub fn parse_params(text: &str) -> Result<ParamsDocument> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "parameter document must have nu/mu, physical, invariants, or nu1..mu5 keys: {e}"
        ))
    })
}

pub fn load_params(path: &Path) -> Result<ParamsDocument> {
    parse_params(&read(path)?)
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Field dump; `t` is prepended as a column when given, and the time
/// derivatives are appended as `dt_theta1,dt_theta2` when requested and present.
pub fn field_csv(field: &ThetaField, t: Option<f64>, with_dt: bool) -> String {
    let psi = field.to_complex();
    let rho = field.rho();
    let dt = match (&field.dt_theta1, &field.dt_theta2) {
        (Some(a), Some(b)) if with_dt => Some((a, b)),
        _ => None,
    };
    let mut out = String::new();
    if t.is_some() {
        out.push_str("t,");
    }
    out.push_str(FIELD_HEADER);
    if dt.is_some() {
        out.push_str(",dt_theta1,dt_theta2");
    }
    out.push('\n');
    for i in 0..field.grid.n {
        if let Some(t) = t {
            out.push_str(&num(t));
            out.push(',');
        }
        let v = psi.values[i];
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            num(field.grid.x(i)),
            num(field.theta1[i]),
            num(field.theta2[i]),
            num(v.re),
            num(v.im),
            num(rho[i])
        );
        if let Some((a, b)) = dt {
            let _ = write!(out, ",{},{}", num(a[i]), num(b[i]));
        }
        out.push('\n');
    }
    out
}

/// Reads a field dump. The grid is recovered from the `x` column; periodic
/// grids exclude the right endpoint.
pub fn parse_field_csv(text: &str, boundary: Boundary) -> Result<ThetaField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let (ix, i1, i2) = match (col("x"), col("theta1"), col("theta2")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Parse("field file needs x, theta1 and theta2 columns".into())),
    };
    let dt_cols = col("dt_theta1").zip(col("dt_theta2"));
    let (mut x, mut t1, mut t2, mut d1, mut d2) = (vec![], vec![], vec![], vec![], vec![]);
    for (row, line) in lines.enumerate() {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: bad number '{c}': {e}", row + 2)))
            })
            .collect::<Result<_>>()?;
        if cells.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} cells, expected {}", row + 2, cells.len(), header.len())));
        }
        x.push(cells[ix]);
        t1.push(cells[i1]);
        t2.push(cells[i2]);
        if let Some((a, b)) = dt_cols {
            d1.push(cells[a]);
            d2.push(cells[b]);
        }
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidGrid(format!("field file has {n} rows")));
    }
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    if x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0)) {
        return Err(Error::InvalidGrid("x column is not uniformly spaced".into()));
    }
    let x_max = match boundary {
        Boundary::Periodic => x[0] + n as f64 * dx,
        Boundary::Dirichlet => x[n - 1],
    };
    let grid = Grid1D::new(x[0], x_max, n, boundary)?;
    let field = ThetaField::new(grid, t1, t2)?;
    if dt_cols.is_some() {
        field.with_time_derivatives(d1, d2)
    } else {
        Ok(field)
    }
}

pub fn load_field_csv(path: &Path, boundary: Boundary) -> Result<ThetaField> {
    parse_field_csv(&read(path)?, boundary)
}

pub fn trajectory_csv(snapshots: &[GaussianSnapshot]) -> String {
    let mut out = String::with_capacity(snapshots.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in snapshots {
        let (st, c) = (&s.state, &s.coefficients);
        let row = [st.t, st.sigma, st.dsigma, st.s, st.ds, c.A, c.B, c.C].map(num);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn observables_csv(obs: &[Observables]) -> String {
    let mut out = String::new();
    out.push_str(OBSERVABLES_HEADER);
    out.push('\n');
    for o in obs {
        out.push_str(&[o.t, o.mass, o.center, o.width].map(num).join(","));
        out.push('\n');
    }
    out
}

/// Parses `a,b,c,d,e,f` into invariants.
pub fn parse_invariants(s: &str) -> Result<Invariants> {
    let v = parse_list(s)?;
    let arr: [f64; 6] = v
        .try_into()
        .map_err(|v: Vec<f64>| Error::Parse(format!("expected 6 invariants, got {}", v.len())))?;
    Ok(Invariants::new(arr))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number '{p}': {e}")))
        })
        .collect()
}

/// Sampling times from `t0:t1:dt`, inclusive of `t1` up to roundoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl TimeRange {
    pub fn single(t: f64) -> Self {
        Self { t0: t, t1: t, dt: 1.0 }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = ((self.t1 - self.t0) / self.dt + 1e-9).floor().max(0.0) as usize;
        (0..=n).map(|i| self.t0 + i as f64 * self.dt).collect()
    }
}

impl std::str::FromStr for TimeRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad time '{p}': {e}")))
            })
            .collect::<Result<_>>()?;
        match v.as_slice() {
            [t] => Ok(Self::single(*t)),
            [t0, t1, dt] if *dt > 0.0 && t1 >= t0 => Ok(Self {
                t0: *t0,
                t1: *t1,
                dt: *dt,
            }),
            _ => Err(Error::Parse(format!("time range must be t0:t1:dt with dt > 0 and t1 >= t0, got '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_documents() {
        let a = parse_params(r#"{"nu":[1,0.25],"mu":[-0.5,0,0.125,0,0,0]}"#).unwrap();
        assert!(matches!(a, ParamsDocument::NuMu { .. }));
        let b = parse_params(r#"{"physical":{"m":1,"hbar":1,"D":0,"Dprime":0}}"#).unwrap();
        let inv = b.normalize().unwrap().invariants();
        assert_eq!(inv.as_array(), [-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]);
        let c = parse_params(r#"{"invariants":[-0.5,0.125,0,0,0,0]}"#).unwrap();
        let p = c.normalize().unwrap();
        assert_eq!((p.nu1, p.mu1), (1.0, 0.0));
        assert!(parse_params(r#"{"nu":[1,0]}"#).is_err());
        let flat = to_json(&p.gauge(crate::params::GaugeElement::new(2.0, 0.5).unwrap())).unwrap();
        assert!(matches!(parse_params(&flat).unwrap(), ParamsDocument::Components(_)));
    }

    #[test]
    fn field_round_trip() {
        let g = Grid1D::periodic(-1.0, 1.0, 16).unwrap();
        let x = g.points();
        let f = ThetaField::new(g, x.iter().map(|x| -x * x).collect(), x.iter().map(|x| 3.0 * x).collect())
            .unwrap()
            .with_time_derivatives(vec![0.5; 16], vec![-1.0; 16])
            .unwrap();
        let text = field_csv(&f, Some(0.25), true);
        assert!(text.starts_with("t,x,theta1,theta2,re_psi,im_psi,rho,dt_theta1,dt_theta2\n"));
        assert!(!text.contains('\r'));
        let back = parse_field_csv(&text, Boundary::Periodic).unwrap();
        assert_eq!(back.theta1, f.theta1);
        assert_eq!(back.theta2, f.theta2);
        assert_eq!(back.dt_theta1, f.dt_theta1);
        assert!((back.grid.x_max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn time_ranges() {
        let r: TimeRange = "0:4:0.5".parse().unwrap();
        assert_eq!(r.times().len(), 9);
        assert_eq!("2".parse::<TimeRange>().unwrap().times(), vec![2.0]);
        assert!("1:0:0.5".parse::<TimeRange>().is_err());
    }
}
