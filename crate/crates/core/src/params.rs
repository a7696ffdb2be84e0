//! Equation parameters, the affine gauge group acting on them, and the
//! six gauge invariants that label each orbit.
//!
//! The equation family is written as
//!
//! ```text
//! i dt psi - i (nu1 R1 + nu2 R2) psi - sum_j mu_j R_j psi - mu0 V psi = 0
//! ```
//!
//! with `R1..R5` the degree-zero nonlinear functionals of `psi`. A gauge
//! element `(Lambda, gamma)` acts on the log-amplitude/phase pair as the
//! lower-triangular matrix `[[1, 0], [gamma, Lambda]]` and correspondingly
//! on `(nu, mu)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether two parameter sets share a gauge orbit.
pub const ORBIT_TOLERANCE: f64 = 1e-10;

/// Absolute tolerance for the vanishing invariants of the linearizable class.
pub const LINEAR_CLASS_TOLERANCE: f64 = 1e-12;

/// Physical parameterization with explicit units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    #[serde(rename = "m")]
    pub mass: f64,
    pub hbar: f64,
    #[serde(rename = "D")]
    pub diffusion: f64,
    #[serde(rename = "Dprime")]
    pub diffusion_prime: f64,
    #[serde(default)]
    pub c: [f64; 5],
    /// Spring constant of `V(x) = kappa x^2 / 2`; zero for a free particle.
    #[serde(default)]
    pub kappa: f64,
}

impl PhysicalParams {
    pub fn linear(mass: f64, hbar: f64) -> Self {
        Self {
            mass,
            hbar,
            diffusion: 0.0,
            diffusion_prime: 0.0,
            c: [0.0; 5],
            kappa: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// The eight dimensionless coefficients `(nu1, nu2, mu0, ..., mu5)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuMuParams {
    pub nu1: f64,
    pub nu2: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub mu5: f64,
}

impl NuMuParams {
    pub fn new(nu: [f64; 2], mu: [f64; 6]) -> Result<Self> {
        let p = Self {
            nu1: nu[0],
            nu2: nu[1],
            mu0: mu[0],
            mu1: mu[1],
            mu2: mu[2],
            mu3: mu[3],
            mu4: mu[4],
            mu5: mu[5],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if self.nu1 == 0.0 {
            return Err(Error::InvalidParams("nu1 must be nonzero".into()));
        }
        Ok(())
    }

    pub fn nu(&self) -> [f64; 2] {
        [self.nu1, self.nu2]
    }

    pub fn mu(&self) -> [f64; 6] {
        [self.mu0, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5]
    }

    /// `[nu1, nu2, mu0, ..., mu5]`
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.nu1, self.nu2, self.mu0, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5,
        ]
    }

    /// Maps the physical equation onto the abstract coefficients: divide by
    /// hbar and expand the Laplacian as `(i R1 + R2/2 - R3 - R5/4) psi`.
    pub fn from_physical(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let kinetic = p.hbar / (2.0 * p.mass);
        let dp = p.diffusion_prime;
        Self::new(
            [-kinetic, p.diffusion / 2.0],
            [
                1.0 / p.hbar,
                dp * p.c[0],
                -kinetic / 2.0 + dp * p.c[1],
                kinetic + dp * p.c[2],
                dp * p.c[3],
                kinetic / 4.0 + dp * p.c[4],
            ],
        )
    }

    pub fn invariants(&self) -> Invariants {
        Invariants::of(self)
    }

    /// Action of a gauge element on the coefficients.
    pub fn gauge(&self, a: GaugeElement) -> Self {
        let GaugeElement { lambda: l, gamma: g } = a;
        let Self {
            nu1,
            nu2,
            mu0,
            mu1,
            mu2,
            mu3,
            mu4,
            mu5,
        } = *self;
        Self {
            nu1: nu1 / l,
            nu2: -g / (2.0 * l) * nu1 + nu2,
            mu0: l * mu0,
            mu1: -g / l * nu1 + mu1,
            mu2: g * g / (2.0 * l) * nu1 - g * nu2 - g / 2.0 * mu1 + l * mu2,
            mu3: mu3 / l,
            mu4: -g / l * mu3 + mu4,
            mu5: g * g / (4.0 * l) * mu3 - g / 2.0 * mu4 + l * mu5,
        }
    }

    /// Componentwise closeness, relative to the larger magnitude (floored at one).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .all(|(a, b)| rel_close(*a, b, tol))
    }
}

/// Element `(Lambda, gamma)` of the one-dimensional affine group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeElement {
    pub lambda: f64,
    pub gamma: f64,
}

impl GaugeElement {
    pub const IDENTITY: Self = Self {
        lambda: 1.0,
        gamma: 0.0,
    };

    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gauge element needs finite nonzero Lambda, got ({lambda}, {gamma})"
            )));
        }
        Ok(Self { lambda, gamma })
    }

    /// `self * rhs`, i.e. apply `rhs` first.
    pub fn compose(self, rhs: Self) -> Self {
        Self {
            lambda: self.lambda * rhs.lambda,
            gamma: self.gamma + self.lambda * rhs.gamma,
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            lambda: 1.0 / self.lambda,
            gamma: -self.gamma / self.lambda,
        }
    }

    /// Matrix acting on `(theta1, theta2)`.
    pub fn matrix(self) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [self.gamma, self.lambda]]
    }

    /// Transforms a `(theta1, theta2)` pair.
    #[inline]
    pub fn apply_theta(self, theta1: f64, theta2: f64) -> (f64, f64) {
        (theta1, self.gamma * theta1 + self.lambda * theta2)
    }

    /// Finds the element taking `p` to `q`.
    pub fn connecting(p: &NuMuParams, q: &NuMuParams) -> Result<Self> {
        p.validate()?;
        q.validate()?;
        let ip = p.invariants();
        let iq = q.invariants();
        let deviation = ip.max_relative_deviation(&iq);
        if deviation > ORBIT_TOLERANCE {
            return Err(Error::NotEquivalent { deviation });
        }
        let lambda = p.nu1 / q.nu1;
        let gamma = lambda * (p.mu1 - q.mu1) / p.nu1;
        let a = Self { lambda, gamma };
        let image = p.gauge(a);
        if !image.approx_eq(q, ORBIT_TOLERANCE) {
            let deviation = image
                .as_array()
                .iter()
                .zip(q.as_array())
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
                .fold(0.0, f64::max);
            return Err(Error::NotEquivalent { deviation });
        }
        Ok(a)
    }
}

impl Default for GaugeElement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// The six gauge invariants `(i0, ..., i5)`. Serialized as a plain array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Invariants {
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
}

impl From<[f64; 6]> for Invariants {
    fn from(v: [f64; 6]) -> Self {
        Self::new(v)
    }
}

impl From<Invariants> for [f64; 6] {
    fn from(v: Invariants) -> Self {
        v.as_array()
    }
}

impl Invariants {
    /// Signed zeros are normalized to `+0`.
    pub fn new(values: [f64; 6]) -> Self {
        let [i0, i1, i2, i3, i4, i5] = values.map(|v| v + 0.0);
        Self {
            i0,
            i1,
            i2,
            i3,
            i4,
            i5,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.i0, self.i1, self.i2, self.i3, self.i4, self.i5]
    }

    pub fn of(p: &NuMuParams) -> Self {
        let NuMuParams {
            nu1,
            nu2,
            mu0,
            mu1,
            mu2,
            mu3,
            mu4,
            mu5,
        } = *p;
        Self::new([
            nu1 * mu0,
            nu1 * mu2 - nu2 * mu1,
            mu1 - 2.0 * nu2,
            1.0 + mu3 / nu1,
            mu4 - mu1 * mu3 / nu1,
            nu1 * (mu2 + 2.0 * mu5) - nu2 * (mu1 + 2.0 * mu4) + 2.0 * nu2 * nu2 * mu3 / nu1,
        ])
    }

    /// Parameters on this orbit with group coordinates `(nu1, mu1)`.
    pub fn reconstruct(&self, nu1: f64, mu1: f64) -> Result<NuMuParams> {
        if nu1 == 0.0 {
            return Err(Error::InvalidParams("nu1 must be nonzero".into()));
        }
        let [i0, i1, i2, i3, i4, i5] = self.as_array();
        NuMuParams::new(
            [nu1, 0.5 * (mu1 - i2)],
            [
                i0 / nu1,
                mu1,
                0.5 * (2.0 * i1 - i2 * mu1 + mu1 * mu1) / nu1,
                (i3 - 1.0) * nu1,
                i4 - mu1 + i3 * mu1,
                0.5 * (i5 - i1 + i4 * (mu1 - i2) + 0.5 * (mu1 * mu1 - i2 * i2) * (i3 - 1.0)) / nu1,
            ],
        )
    }

    /// The representative with `nu1 = 1`, `mu1 = 0`.
    pub fn gauge_fixed(&self) -> NuMuParams {
        self.reconstruct(1.0, 0.0)
            .expect("nu1 = 1 is always a valid group coordinate")
    }

    /// True for the orbit of the linear Schrodinger equation.
    pub fn is_linearizable(&self) -> bool {
        self.i0 < 0.0
            && self.i1 > 0.0
            && [self.i2, self.i3, self.i4, self.i5]
                .iter()
                .all(|v| v.abs() < LINEAR_CLASS_TOLERANCE)
    }

    /// `i2 i3 + i4`: sign of the friction on Gaussian widths and centres.
    pub fn friction(&self) -> f64 {
        self.i2 * self.i3 + self.i4
    }

    /// `i1 + i5`: strength of the dispersive `1/sigma^3` term.
    pub fn dispersion(&self) -> f64 {
        self.i1 + self.i5
    }

    /// Coefficient of `(grad theta1)^2` in the gauge-fixed phase equation.
    pub fn gradient_coefficient(&self) -> f64 {
        2.0 * self.i5 + 2.0 * self.i1 - 2.0 * self.i4 * self.i2 - self.i2 * self.i2 * (self.i3 - 1.0)
    }

    pub fn max_relative_deviation(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-14, "{a} != {b}");
    }

    #[test]
    fn physical_linear_unit_mass() {
        let p = NuMuParams::from_physical(&PhysicalParams::linear(1.0, 1.0)).unwrap();
        assert_eq!(p.nu(), [-0.5, 0.0]);
        assert_eq!(p.mu(), [1.0, 0.0, -0.25, 0.5, 0.0, 0.125]);
        let inv = p.invariants();
        assert_eq!(inv.as_array(), [-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]);
        assert!(inv.is_linearizable());
    }

    #[test]
    fn physical_c3_shifts_i3() {
        let mut phys = PhysicalParams::linear(1.0, 1.0);
        phys.diffusion_prime = 1.0;
        phys.c = [0.0, 0.0, 1.0, 0.0, 0.0];
        let p = NuMuParams::from_physical(&phys).unwrap();
        assert_eq!(p.mu3, 1.5);
        // -2 m D' c3 / hbar
        close(p.invariants().i3, -2.0);
    }

    #[test]
    fn physical_mass_two() {
        let inv = NuMuParams::from_physical(&PhysicalParams::linear(2.0, 1.0))
            .unwrap()
            .invariants();
        close(inv.i0, -0.25);
        close(inv.i1, 1.0 / 32.0);
    }

    #[test]
    fn physical_rejects_bad_mass() {
        assert!(NuMuParams::from_physical(&PhysicalParams::linear(0.0, 1.0)).is_err());
        assert!(NuMuParams::from_physical(&PhysicalParams::linear(1.0, -1.0)).is_err());
    }

    #[test]
    fn invariants_by_hand() {
        let p = NuMuParams::new([1.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.invariants().as_array(), [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

        let p = NuMuParams::new([2.0, 1.0], [1.0; 6]).unwrap();
        let inv = p.invariants();
        close(inv.i1, 1.0);
        close(inv.i2, -1.0);
        close(inv.i3, 1.5);
        close(inv.i4, 0.5);
        close(inv.i5, 4.0);
        close(inv.i0, 2.0);
    }

    #[test]
    fn zero_nu1_rejected() {
        assert!(NuMuParams::new([0.0, 1.0], [1.0; 6]).is_err());
        assert!(Invariants::new([0.0; 6]).reconstruct(0.0, 1.0).is_err());
        assert!(GaugeElement::new(0.0, 1.0).is_err());
    }

    #[test]
    fn gauge_identity_and_scaling() {
        let p = NuMuParams::from_physical(&PhysicalParams::linear(1.0, 1.0)).unwrap();
        assert_eq!(p.gauge(GaugeElement::IDENTITY), p);

        let q = p.gauge(GaugeElement::new(2.0, 0.0).unwrap());
        assert_eq!(q.nu(), [-0.25, 0.0]);
        assert_eq!(q.mu(), [2.0, 0.0, -0.5, 0.25, 0.0, 0.25]);
        assert_eq!(q.invariants(), p.invariants());
    }

    #[test]
    fn gauge_shear() {
        let p = NuMuParams::new([1.0, 0.0], [0.0; 6]).unwrap();
        let q = p.gauge(GaugeElement::new(1.0, 2.0).unwrap());
        assert_eq!(q.nu(), [1.0, -1.0]);
        assert_eq!(q.mu1, -2.0);
        assert_eq!(q.mu2, 2.0);
        assert_eq!([q.mu0, q.mu3, q.mu4, q.mu5], [0.0; 4]);
    }

    #[test]
    fn compose_matches_matrix_product() {
        let a2 = GaugeElement::new(2.0, 1.0).unwrap();
        let a1 = GaugeElement::new(3.0, 4.0).unwrap();
        let c = a2.compose(a1);
        assert_eq!((c.lambda, c.gamma), (6.0, 9.0));

        let (m2, m1) = (a2.matrix(), a1.matrix());
        let mut prod = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                prod[i][j] = (0..2).map(|k| m2[i][k] * m1[k][j]).sum();
            }
        }
        assert_eq!(prod, c.matrix());

        assert_eq!(GaugeElement::IDENTITY.compose(a1), a1);
        let e = a1.inverse().compose(a1);
        assert!((e.lambda - 1.0).abs() < 1e-15 && e.gamma.abs() < 1e-15);
    }

    #[test]
    fn reconstruct_linear_class() {
        let inv = Invariants::new([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]);
        let p = inv.reconstruct(-0.5, 0.0).unwrap();
        let expected = NuMuParams::from_physical(&PhysicalParams::linear(1.0, 1.0)).unwrap();
        assert!(p.approx_eq(&expected, 1e-15));

        let fixed = inv.gauge_fixed();
        assert_eq!((fixed.nu1, fixed.mu1), (1.0, 0.0));
        assert!(fixed.invariants().max_relative_deviation(&inv) < 1e-15);
    }

    #[test]
    fn find_gauge_cases() {
        let p = NuMuParams::new([0.7, -0.3], [1.1, 0.4, -0.2, 0.9, 0.3, -0.6]).unwrap();
        let a = GaugeElement::new(2.0, 3.0).unwrap();
        let found = GaugeElement::connecting(&p, &p.gauge(a)).unwrap();
        assert!((found.lambda - 2.0).abs() < 1e-12 && (found.gamma - 3.0).abs() < 1e-12);

        let lin = NuMuParams::from_physical(&PhysicalParams::linear(1.0, 1.0)).unwrap();
        let fixed = lin.invariants().gauge_fixed();
        let a = GaugeElement::connecting(&lin, &fixed).unwrap();
        let lambda = lin.nu1 / fixed.nu1;
        assert_eq!(a.lambda, lambda);
        assert_eq!(a.gamma, lambda * (lin.mu1 - fixed.mu1) / lin.nu1);

        let q0 = Invariants::new([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).gauge_fixed();
        let q1 = Invariants::new([1.0, 1.0, 0.0, 1.0, 0.0, 0.0]).gauge_fixed();
        assert!(matches!(
            GaugeElement::connecting(&q0, &q1),
            Err(Error::NotEquivalent { .. })
        ));
    }

    #[test]
    fn linearizable_predicate() {
        assert!(Invariants::new([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]).is_linearizable());
        assert!(!Invariants::new([0.5, 0.125, 0.0, 0.0, 0.0, 0.0]).is_linearizable());
        assert!(!Invariants::new([-0.5, 0.125, 0.0, 1.0, 0.0, 0.0]).is_linearizable());
        assert!(!Invariants::new([-0.5, -0.125, 0.0, 0.0, 0.0, 0.0]).is_linearizable());
    }
}
