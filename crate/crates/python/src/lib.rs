//! Python bindings for `dg-core`.

use std::collections::BTreeMap;

use dg_core::gaussian;
use dg_core::{
    ap_residual, nse_residual, Boundary, EvolverConfig, GaugeElement, GaussianState, Grid1D, Invariants,
    NuMuParams, PhysicalParams, ResidualReport, SolutionSpec, ThetaField,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: dg_core::Error) -> PyErr {
    match e {
        dg_core::Error::Collapsed { .. } | dg_core::Error::Diverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Invariants", frozen, from_py_object)]
#[derive(Clone)]
struct PyInvariants(Invariants);

#[pymethods]
impl PyInvariants {
    #[new]
    fn new(values: [f64; 6]) -> Self {
        Self(Invariants::new(values))
    }

    #[getter]
    fn values(&self) -> [f64; 6] {
        self.0.as_array()
    }

    fn gauge_fixed(&self) -> PyNuMuParams {
        PyNuMuParams(self.0.gauge_fixed())
    }

    fn reconstruct(&self, nu1: f64, mu1: f64) -> PyResult<PyNuMuParams> {
        self.0.reconstruct(nu1, mu1).map(PyNuMuParams).map_err(err)
    }

    fn is_linearizable(&self) -> bool {
        self.0.is_linearizable()
    }

    fn max_relative_deviation(&self, other: &PyInvariants) -> f64 {
        self.0.max_relative_deviation(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Invariants({:?})", self.0.as_array())
    }
}

#[pyclass(name = "NuMuParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyNuMuParams(NuMuParams);

#[pymethods]
impl PyNuMuParams {
    #[new]
    fn new(nu: [f64; 2], mu: [f64; 6]) -> PyResult<Self> {
        NuMuParams::new(nu, mu).map(Self).map_err(err)
    }

    /// Parameters of the physical form with mass `m`, `hbar`, diffusion `D`, `D'`
    /// and nonlinear couplings `c1..c5`.
    #[staticmethod]
    #[pyo3(signature = (m, hbar, d=0.0, d_prime=0.0, c=[0.0; 5], kappa=0.0))]
    fn from_physical(m: f64, hbar: f64, d: f64, d_prime: f64, c: [f64; 5], kappa: f64) -> PyResult<Self> {
        let p = PhysicalParams {
            mass: m,
            hbar,
            diffusion: d,
            diffusion_prime: d_prime,
            c,
            kappa,
        };
        NuMuParams::from_physical(&p).map(Self).map_err(err)
    }

    #[getter]
    fn nu(&self) -> [f64; 2] {
        self.0.nu()
    }

    #[getter]
    fn mu(&self) -> [f64; 6] {
        self.0.mu()
    }

    fn invariants(&self) -> PyInvariants {
        PyInvariants(self.0.invariants())
    }

    fn gauge(&self, a: &PyGaugeElement) -> Self {
        Self(self.0.gauge(a.0))
    }

    fn __repr__(&self) -> String {
        format!("NuMuParams(nu={:?}, mu={:?})", self.0.nu(), self.0.mu())
    }
}

#[pyclass(name = "GaugeElement", frozen, from_py_object)]
#[derive(Clone)]
struct PyGaugeElement(GaugeElement);

#[pymethods]
impl PyGaugeElement {
    #[new]
    fn new(lambda: f64, gamma: f64) -> PyResult<Self> {
        GaugeElement::new(lambda, gamma).map(Self).map_err(err)
    }

    /// The element mapping `p` to `q`.
    #[staticmethod]
    fn connecting(p: &PyNuMuParams, q: &PyNuMuParams) -> PyResult<Self> {
        GaugeElement::connecting(&p.0, &q.0).map(Self).map_err(err)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    /// `self` after `rhs`.
    fn compose(&self, rhs: &PyGaugeElement) -> Self {
        Self(self.0.compose(rhs.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn __repr__(&self) -> String {
        format!("GaugeElement(lambda={}, gamma={})", self.0.lambda, self.0.gamma)
    }
}

#[pyclass(name = "Grid1D", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid(Grid1D);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (x_min, x_max, n, periodic=true))]
    fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> PyResult<Self> {
        let b = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        Grid1D::new(x_min, x_max, n, b).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.0.boundary == Boundary::Periodic
    }

    fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    fn __repr__(&self) -> String {
        let g = &self.0;
        format!("Grid1D({}, {}, {}, {})", g.x_min, g.x_max, g.n, g.boundary)
    }
}

#[pyclass(name = "ThetaField", frozen, from_py_object)]
#[derive(Clone)]
struct PyThetaField(ThetaField);

#[pymethods]
impl PyThetaField {
    #[new]
    #[pyo3(signature = (grid, theta1, theta2, dt_theta1=None, dt_theta2=None))]
    fn new(
        grid: &PyGrid,
        theta1: Vec<f64>,
        theta2: Vec<f64>,
        dt_theta1: Option<Vec<f64>>,
        dt_theta2: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let f = ThetaField::new(grid.0, theta1, theta2).map_err(err)?;
        match (dt_theta1, dt_theta2) {
            (Some(a), Some(b)) => f.with_time_derivatives(a, b).map(Self).map_err(err),
            (None, None) => Ok(Self(f)),
            _ => Err(PyValueError::new_err("give both time derivatives or neither")),
        }
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid)
    }

    #[getter]
    fn theta1(&self) -> Vec<f64> {
        self.0.theta1.clone()
    }

    #[getter]
    fn theta2(&self) -> Vec<f64> {
        self.0.theta2.clone()
    }

    #[getter]
    fn dt_theta1(&self) -> Option<Vec<f64>> {
        self.0.dt_theta1.clone()
    }

    #[getter]
    fn dt_theta2(&self) -> Option<Vec<f64>> {
        self.0.dt_theta2.clone()
    }

    fn rho(&self) -> Vec<f64> {
        self.0.rho()
    }

    fn psi(&self) -> Vec<Complex64> {
        self.0.to_complex().values
    }

    fn gauge(&self, a: &PyGaugeElement) -> Self {
        Self(self.0.gauge(a.0))
    }
}

/// An exact solution built from a JSON spec such as
/// `{"family": "cosh_soliton", "invariants": [...], "k": 1, "v": 1}`.
#[pyclass(name = "Solution", frozen)]
struct PySolution(dg_core::AnalyticSolution);

#[pymethods]
impl PySolution {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: SolutionSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.build().map(Self).map_err(err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.spec.family.as_str()
    }

    #[getter]
    fn invariants(&self) -> PyInvariants {
        PyInvariants(*self.0.invariants())
    }

    #[getter]
    fn square_integrable(&self) -> bool {
        self.0.square_integrable
    }

    fn sample(&self, grid: &PyGrid, t: f64) -> PyThetaField {
        PyThetaField(self.0.sample(&grid.0, t))
    }

    fn potential(&self, grid: &PyGrid) -> Vec<f64> {
        self.0.potential_on(&grid.0)
    }
}

fn report(r: ResidualReport) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::from([("l2".to_string(), r.l2), ("linf".to_string(), r.linf)]);
    for (name, n) in r.per_equation {
        out.insert(format!("{name}_linf"), n.linf);
    }
    out
}

/// Residual of the gauge-fixed amplitude and phase equations.
#[pyfunction]
fn amplitude_phase_residual(
    field: &PyThetaField,
    inv: &PyInvariants,
    potential: Vec<f64>,
) -> PyResult<BTreeMap<String, f64>> {
    ap_residual(&field.0, &inv.0, &potential).map(report).map_err(err)
}

/// Residual of the Schrodinger form with the gauge-fixed coefficients of `inv`.
#[pyfunction]
fn schrodinger_residual(
    field: &PyThetaField,
    inv: &PyInvariants,
    potential: Vec<f64>,
) -> PyResult<BTreeMap<String, f64>> {
    let dt = field.0.dt_psi().map_err(err)?;
    nse_residual(&field.0.to_complex(), &dt, &inv.0.gauge_fixed(), &potential)
        .map(report)
        .map_err(err)
}

/// Width and centre of a Gaussian packet in `V = kappa x^2 / 2`. Returns rows
/// `(t, sigma, dsigma, s, ds)`.
#[pyfunction]
#[pyo3(signature = (inv, kappa, state, t_end, dt=gaussian::DEFAULT_DT))]
fn gaussian_integrate(
    inv: &PyInvariants,
    kappa: f64,
    state: [f64; 4],
    t_end: f64,
    dt: f64,
) -> PyResult<Vec<[f64; 5]>> {
    let [sigma, dsigma, s, ds] = state;
    let tr = gaussian::integrate(&GaussianState::new(sigma, dsigma, s, ds), &inv.0, kappa, t_end, dt).map_err(err)?;
    Ok(tr.states.iter().map(|g| [g.t, g.sigma, g.dsigma, g.s, g.ds]).collect())
}

/// Long-time label of a Gaussian packet and the limiting width, if any.
#[pyfunction]
#[pyo3(signature = (inv, kappa, state=[1.0, 0.0, 0.5, 0.0], horizon=100.0, dt=gaussian::DEFAULT_DT))]
fn gaussian_classify(
    inv: &PyInvariants,
    kappa: f64,
    state: [f64; 4],
    horizon: f64,
    dt: f64,
) -> PyResult<(&'static str, Option<f64>)> {
    let [sigma, dsigma, s, ds] = state;
    let v = gaussian::classify_asymptotics(&GaussianState::new(sigma, dsigma, s, ds), &inv.0, kappa, horizon, dt)
        .map_err(err)?;
    Ok((v.kind.as_str(), v.sigma_limit))
}

#[pyfunction]
fn sigma_infinity(inv: &PyInvariants, kappa: f64) -> Option<f64> {
    gaussian::sigma_infinity(&inv.0, kappa)
}

/// Integrates `field` in `V = kappa x^2 / 2`. `dt` defaults to the stability limit.
#[pyfunction]
#[pyo3(signature = (field, inv, kappa, t_end, dt=None, record_every=1))]
fn evolve(
    py: Python<'_>,
    field: &PyThetaField,
    inv: &PyInvariants,
    kappa: f64,
    t_end: f64,
    dt: Option<f64>,
    record_every: usize,
) -> PyResult<(Vec<f64>, Vec<PyThetaField>)> {
    let mut cfg = EvolverConfig::new(field.0.grid, 0.0, t_end, inv.0, kappa);
    cfg.dt = dt.unwrap_or_else(|| cfg.dt_limit());
    cfg.record_every = record_every;
    let initial = field.0.clone();
    let trace = py
        .detach(|| dg_core::evolve(&initial, &cfg).and_then(|t| t.into_result()))
        .map_err(err)?;
    Ok((trace.times, trace.fields.into_iter().map(PyThetaField).collect()))
}

#[pymodule]
fn dgnls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInvariants>()?;
    m.add_class::<PyNuMuParams>()?;
    m.add_class::<PyGaugeElement>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyThetaField>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(amplitude_phase_residual, m)?)?;
    m.add_function(wrap_pyfunction!(schrodinger_residual, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_integrate, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_classify, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    Ok(())
}
