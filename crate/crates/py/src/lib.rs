//! Python bindings: `import imrecon`.

use imrecon_core::farfield::{self, ExtractionSchedule};
use imrecon_core::fields::{self, ImSamples, Orientation, RayGeometry, Term};
use imrecon_core::propagate::{self, HalfPlaneSpec, PipelineOptions, SourceDisk};
use imrecon_core::scatter;
use imrecon_core::scenario::{self, Command, Scenario};
use imrecon_core::{karp, specfun, Error, LineSpec, Vec2};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

create_exception!(imrecon, NumericalError, PyRuntimeError);

type Point = (f64, f64);

fn err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

fn v2(p: Point) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn pt(v: Vec2) -> Point {
    (v.x, v.y)
}

fn orientation(side: &str) -> PyResult<Orientation> {
    match side {
        "+" | "plus" => Ok(Orientation::Plus),
        "-" | "minus" => Ok(Orientation::Minus),
        _ => Err(PyValueError::new_err(format!("side must be '+' or '-', got {side:?}"))),
    }
}

#[pyfunction]
fn bessel_j(n: i32, x: f64) -> PyResult<f64> {
    specfun::bessel_j(n, x).map_err(err)
}

#[pyfunction]
fn bessel_y(n: i32, x: f64) -> PyResult<f64> {
    specfun::bessel_y(n, x).map_err(err)
}

#[pyfunction]
fn hankel1(n: i32, x: f64) -> PyResult<Complex64> {
    specfun::hankel1(n, x).map_err(err)
}

#[pyfunction]
fn j0_roots(k: usize) -> PyResult<Vec<f64>> {
    specfun::j0_roots(k).map_err(err)
}

/// Superposition of multipoles and point sources.
#[pyclass(module = "imrecon", skip_from_py_object)]
#[derive(Clone)]
struct RadiationField {
    inner: fields::RadiationField,
}

#[pymethods]
impl RadiationField {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(RadiationField { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (kappa, y0, c = Complex64::new(1.0, 0.0)))]
    fn point_source(kappa: f64, y0: Point, c: Complex64) -> PyResult<Self> {
        let inner = fields::RadiationField::new(kappa, vec![Term::PointSource { y0: v2(y0), c }]).map_err(err)?;
        Ok(RadiationField { inner })
    }

    /// Sum of `c_m H_m(kappa r) e^{i m phi}` over `(m, c_m)` pairs.
    #[staticmethod]
    fn multipoles(kappa: f64, terms: Vec<(i32, Complex64)>) -> PyResult<Self> {
        let terms = terms.into_iter().map(|(m, c)| Term::Multipole { m, c }).collect();
        let inner = fields::RadiationField::new(kappa, terms).map_err(err)?;
        Ok(RadiationField { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn source_radius(&self) -> f64 {
        self.inner.source_radius
    }

    fn eval(&self, x: Point) -> PyResult<Complex64> {
        self.inner.eval(v2(x)).map_err(err)
    }

    /// Exact `f_0..f_n` at angle `phi` in the frame centred at `q`.
    fn farfield(&self, q: Point, phi: f64, n: usize) -> PyResult<Vec<Complex64>> {
        self.inner.farfield_oracle_at(v2(q), phi, n).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("RadiationField(kappa={}, terms={})", self.inner.kappa, self.inner.terms.len())
    }
}

/// Weighted `Im psi` samples along one ray.
#[pyclass(module = "imrecon", skip_from_py_object)]
#[derive(Clone)]
struct Samples {
    inner: ImSamples,
}

#[pymethods]
impl Samples {
    #[getter]
    fn abscissas(&self) -> Vec<f64> {
        self.inner.abscissas.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
#[pyo3(signature = (field, origin, direction, side, abscissas, sigma = 0.0, seed = 0))]
fn sample_im(
    field: &RadiationField,
    origin: Point,
    direction: Point,
    side: &str,
    abscissas: Vec<f64>,
    sigma: f64,
    seed: u64,
) -> PyResult<Samples> {
    let ray = RayGeometry::new(v2(origin), v2(direction), orientation(side)?).map_err(err)?;
    let inner = fields::sample_im_on_ray(&field.inner, &ray, &abscissas, sigma, seed).map_err(err)?;
    Ok(Samples { inner })
}

/// Abscissas the reconstruction pipeline expects on each ray.
#[pyfunction]
fn pipeline_abscissas(kappa: f64) -> PyResult<Vec<f64>> {
    let s = ExtractionSchedule::default_for(kappa).map_err(err)?;
    Ok(propagate::pipeline_abscissas(&s, kappa, s.radii[0], 10.0))
}

#[pyclass(module = "imrecon", get_all, skip_from_py_object)]
#[derive(Clone)]
struct FarField {
    phi: f64,
    q: Point,
    f_plus: Vec<Complex64>,
    f_minus: Vec<Complex64>,
}

/// `f_0..f_order` on both rays from schedule samples, in the frame at the rays' origin.
#[pyfunction]
fn extract(plus: &Samples, minus: &Samples, order: usize) -> PyResult<FarField> {
    let sched = ExtractionSchedule::default_for(plus.inner.kappa).map_err(err)?;
    let q = plus.inner.ray.origin;
    let (ff, _) = farfield::extract_all_at(&plus.inner, &minus.inner, order, &sched, q).map_err(err)?;
    Ok(FarField {
        phi: ff.phi,
        q: pt(ff.origin_shift),
        f_plus: ff.f_plus,
        f_minus: ff.f_minus,
    })
}

/// Karp coefficients `F_j`, `G_j` on the line at angle `phi`.
#[pyclass(module = "imrecon")]
struct Karp {
    inner: karp::KarpCoeffs,
}

#[pymethods]
impl Karp {
    #[staticmethod]
    fn from_farfield(kappa: f64, ff: &FarField) -> PyResult<Self> {
        let c = farfield::FarFieldCoeffs {
            kappa,
            phi: ff.phi,
            origin_shift: v2(ff.q),
            f_plus: ff.f_plus.clone(),
            f_minus: ff.f_minus.clone(),
        };
        Ok(Karp {
            inner: karp::karp_from_farfield(&c).map_err(err)?,
        })
    }

    #[getter(F)]
    fn f(&self) -> Vec<Complex64> {
        self.inner.f.clone()
    }

    #[getter(G)]
    fn g(&self) -> Vec<Complex64> {
        self.inner.g.clone()
    }

    /// Field at distance `r` from `q` on the given side.
    #[pyo3(signature = (r, side = "+"))]
    fn eval(&self, r: f64, side: &str) -> PyResult<Complex64> {
        karp::eval_karp(&self.inner, r, orientation(side)?).map_err(err)
    }
}

/// `psi` at `targets` from `Im psi` samples of the two rays of the line.
///
/// `normal` points out of the target half-plane; the sources lie in the disk
/// `(disk_center, disk_radius)`.
#[pyfunction]
#[pyo3(signature = (plus, minus, order, normal, targets, disk_center = (0.0, 0.0), disk_radius = 0.0))]
fn reconstruct(
    plus: &Samples,
    minus: &Samples,
    order: usize,
    normal: Point,
    targets: Vec<Point>,
    disk_center: Point,
    disk_radius: f64,
) -> PyResult<Vec<Complex64>> {
    let ray = plus.inner.ray;
    let line = LineSpec::new(ray.origin, ray.direction).map_err(err)?;
    let spec = HalfPlaneSpec::new(line, v2(normal)).map_err(err)?;
    let disk = SourceDisk {
        center: v2(disk_center),
        radius: disk_radius,
    };
    let opts = PipelineOptions::new(plus.inner.kappa, disk).map_err(err)?;
    let xs: Vec<Vec2> = targets.into_iter().map(v2).collect();
    let r = propagate::reconstruct_from_im(&plus.inner, &minus.inner, order, &spec, &xs, &opts).map_err(err)?;
    Ok(r.values)
}

#[pyfunction]
fn counterexample<'py>(py: Python<'py>, kappa: f64, j: usize, n_angles: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = fields::counterexample_report(kappa, j, n_angles).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("radius", r.radius)?;
    d.set_item("max_abs_im", r.max_abs_im)?;
    d.set_item("max_abs_psi", r.max_abs_psi)?;
    Ok(d)
}

/// Piecewise-constant potential on an `n x n` grid; `v` is row-major, rows along `y`.
#[pyclass(module = "imrecon", skip_from_py_object)]
#[derive(Clone)]
struct PotentialGrid {
    inner: scatter::PotentialGrid,
}

#[pymethods]
impl PotentialGrid {
    #[new]
    fn new(bbox: [f64; 4], n: usize, kappa: f64, v: Vec<Complex64>) -> PyResult<Self> {
        Ok(PotentialGrid {
            inner: scatter::PotentialGrid::new(bbox, n, kappa, v).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(PotentialGrid { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    fn centers(&self) -> Vec<Point> {
        self.inner.centers().into_iter().map(pt).collect()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
}

/// Factorised Lippmann–Schwinger operator of one potential.
#[pyclass(module = "imrecon")]
struct Scatterer {
    inner: scatter::LsSolver,
}

#[pymethods]
impl Scatterer {
    #[new]
    fn new(grid: &PotentialGrid) -> PyResult<Self> {
        Ok(Scatterer {
            inner: scatter::LsSolver::new(&grid.inner).map_err(err)?,
        })
    }

    #[getter]
    fn cond_estimate(&self) -> f64 {
        self.inner.cond_estimate()
    }

    /// `R+(x, y)` for each `x` in `targets`.
    fn resolvent(&self, y: Point, targets: Vec<Point>) -> PyResult<Vec<Complex64>> {
        let r = self.inner.resolvent(v2(y)).map_err(err)?;
        targets.into_iter().map(|x| r.eval(v2(x)).map_err(err)).collect()
    }

    /// Total field `psi+(x, k)` for each `x` in `targets`.
    fn plane_wave(&self, k: Point, targets: Vec<Point>) -> PyResult<Vec<Complex64>> {
        let f = self.inner.plane_wave(v2(k)).map_err(err)?;
        targets.into_iter().map(|x| f.eval(v2(x)).map_err(err)).collect()
    }

    /// `A(k, kappa x)` for unit directions `x`.
    fn amplitude(&self, k: Point, directions: Vec<Point>) -> PyResult<Vec<Complex64>> {
        let dirs: Vec<Vec2> = directions.into_iter().map(v2).collect();
        let radii = scatter::far_radii(self.inner.grid.kappa);
        scatter::scattering_amplitude_at(&self.inner, v2(k), &dirs, &radii).map_err(err)
    }
}

#[pyclass(module = "imrecon", get_all)]
struct GklReport {
    points: Vec<Point>,
    recovered: Vec<Vec<Complex64>>,
    direct: Vec<Vec<Complex64>>,
    max_rel_error: f64,
    reciprocity_recovered: f64,
    reciprocity_direct: f64,
}

/// Recovers `R+` on `points` equispaced points of `interval` on the line from `Im R+`.
#[pyfunction]
#[pyo3(signature = (grid, line_point, line_direction, interval, points = 5, order = 2))]
fn gkl_reduce(
    grid: &PotentialGrid,
    line_point: Point,
    line_direction: Point,
    interval: [f64; 2],
    points: usize,
    order: usize,
) -> PyResult<GklReport> {
    let line = LineSpec::new(v2(line_point), v2(line_direction)).map_err(err)?;
    let r = scatter::gkl_reduce(&grid.inner, &line, interval, points, order).map_err(err)?;
    Ok(GklReport {
        points: r.points.into_iter().map(pt).collect(),
        recovered: r.recovered,
        direct: r.direct,
        max_rel_error: r.max_rel_error,
        reciprocity_recovered: r.reciprocity_recovered,
        reciprocity_direct: r.reciprocity_direct,
    })
}

/// Runs a scenario file and writes its artifacts; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (path, command, out = None, order = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    path: PathBuf,
    command: &str,
    out: Option<PathBuf>,
    order: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let command: Command = command.parse().map_err(err)?;
    let sc = Scenario::load(&path).map_err(err)?;
    let a = scenario::run(&sc, command, order).map_err(err)?;
    scenario::write_artifacts(&scenario::output_dir(&sc, out.as_deref()), &a).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("scenario", &a.report.scenario)?;
    d.set_item("command", &a.report.command)?;
    d.set_item("metrics", a.report.metrics.clone())?;
    d.set_item("status", &a.report.status)?;
    Ok(d)
}

#[pymodule]
fn imrecon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<RadiationField>()?;
    m.add_class::<Samples>()?;
    m.add_class::<FarField>()?;
    m.add_class::<Karp>()?;
    m.add_class::<PotentialGrid>()?;
    m.add_class::<Scatterer>()?;
    m.add_class::<GklReport>()?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_y, m)?)?;
    m.add_function(wrap_pyfunction!(hankel1, m)?)?;
    m.add_function(wrap_pyfunction!(j0_roots, m)?)?;
    m.add_function(wrap_pyfunction!(sample_im, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline_abscissas, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(gkl_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
