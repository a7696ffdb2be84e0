use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth log-amplitude profile `theta1(x)` for the families that accept an
/// arbitrary one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `sum_j c_j x^j`
    Polynomial { coeffs: Vec<f64> },
    /// `-a cosh(k x)`
    Cosh { a: f64, k: f64 },
    /// `a ln cosh(k x)`
    LogCosh { a: f64, k: f64 },
    /// Natural cubic spline through uniformly spaced samples on `[x_min, x_max]`.
    Sampled {
        x_min: f64,
        x_max: f64,
        values: Vec<f64>,
        #[serde(skip)]
        moments: Option<Vec<f64>>,
    },
}

/// `ln cosh(y)` without overflow.
pub fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Profile {
    pub fn sampled(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        let mut p = Profile::Sampled {
            x_min,
            x_max,
            values,
            moments: None,
        };
        p.prepare()?;
        Ok(p)
    }

    /// Validates the profile and precomputes spline moments.
    pub fn prepare(&mut self) -> Result<()> {
        match self {
            Profile::Sampled {
                x_min,
                x_max,
                values,
                moments,
            } => {
                if values.len() < 4 || !(x_max > x_min) {
                    return Err(Error::InvalidParams(
                        "sampled profile needs at least 4 values on a nonempty interval".into(),
                    ));
                }
                let h = (*x_max - *x_min) / (values.len() - 1) as f64;
                *moments = Some(spline_moments(values, h));
            }
            Profile::Polynomial { coeffs } if coeffs.is_empty() => {
                return Err(Error::InvalidParams("polynomial profile needs coefficients".into()))
            }
            _ => {}
        }
        Ok(())
    }

    /// `(theta1, theta1', theta1'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Profile::Polynomial { coeffs } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + v;
                    v = v * x + c;
                }
                (v, d1, d2)
            }
            Profile::Cosh { a, k } => {
                let y = k * x;
                (-a * y.cosh(), -a * k * y.sinh(), -a * k * k * y.cosh())
            }
            Profile::LogCosh { a, k } => {
                let y = k * x;
                let sech = 1.0 / y.cosh();
                (a * ln_cosh(y), a * k * y.tanh(), a * k * k * sech * sech)
            }
            Profile::Sampled {
                x_min,
                x_max,
                values,
                moments,
            } => {
                let m = moments.as_ref().expect("prepared sampled profile");
                let n = values.len();
                let h = (x_max - x_min) / (n - 1) as f64;
                let i = (((x - x_min) / h).floor().max(0.0) as usize).min(n - 2);
                let (x0, x1) = (x_min + i as f64 * h, x_min + (i + 1) as f64 * h);
                let (a, b) = ((x1 - x) / h, (x - x0) / h);
                let (y0, y1, m0, m1) = (values[i], values[i + 1], m[i], m[i + 1]);
                let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
                let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 + (3.0 * b * b - 1.0) * h / 6.0 * m1;
                let d2 = a * m0 + b * m1;
                (v, d1, d2)
            }
        }
    }

    /// Whether `exp(2 theta1)` is integrable on the real line.
    pub fn decays(&self) -> bool {
        match self {
            Profile::Polynomial { coeffs } => {
                let deg = coeffs.iter().rposition(|c| *c != 0.0);
                matches!(deg, Some(d) if d >= 1 && d % 2 == 0 && coeffs[d] < 0.0)
            }
            Profile::Cosh { a, k } => *a > 0.0 && *k != 0.0,
            Profile::LogCosh { a, k } => *a < 0.0 && *k != 0.0,
            Profile::Sampled { .. } => false,
        }
    }
}

/// Second-derivative moments of the natural cubic spline (Thomas algorithm).
fn spline_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for j in 0..k {
        let rhs = 6.0 * (y[j + 2] - 2.0 * y[j + 1] + y[j]) / (h * h);
        let denom = 4.0 - if j > 0 { c[j - 1] } else { 0.0 };
        c[j] = 1.0 / denom;
        d[j] = (rhs - if j > 0 { d[j - 1] } else { 0.0 }) / denom;
    }
    for j in (0..k).rev() {
        m[j + 1] = d[j] - if j + 1 < k { c[j] * m[j + 2] } else { 0.0 };
    }
    m
}
