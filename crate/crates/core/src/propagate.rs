//! Half-plane propagation of a line trace, and the reconstruction pipeline
//! from imaginary-part samples on one line.

use crate::error::StageExt;
use crate::farfield::{self, ExtractionReport, ExtractionSchedule, FarFieldCoeffs};
use crate::fields::{signed_hankel, ImSamples, MultipoleExpansion, Orientation};
use crate::karp::{self, KarpCoeffs};
use crate::{linalg, quadrature, specfun, Error, LineSpec, Result, Vec2, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Gauss–Legendre points per panel.
pub const PANEL_RULE: usize = 8;
/// Lower-order rule used for the per-panel error estimate.
const CHECK_RULE: usize = 4;
/// Degree of the local Lagrange interpolant for tabulated traces.
pub const INTERP_ORDER: usize = 6;
/// Closest admissible target, in wavelengths.
pub const MIN_DISTANCE: f64 = 0.25;

fn wavelength(kappa: f64) -> f64 {
    2.0 * PI / kappa
}

/// The line `L` and the half-plane `V_L` on the `-normal` side of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSpec {
    pub line: LineSpec,
    pub normal: Vec2,
}

impl HalfPlaneSpec {
    pub fn new(line: LineSpec, normal: Vec2) -> Result<Self> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Geometry("degenerate normal".into()));
        }
        let line = LineSpec::new(line.point, line.direction)?;
        let normal = normal.normalized();
        if line.direction.dot(normal).abs() > 1e-14 {
            return Err(Error::Geometry("normal is not perpendicular to the line".into()));
        }
        Ok(HalfPlaneSpec { line, normal })
    }

    /// Half-plane on the far side of `line` as seen from `p`.
    pub fn away_from(line: LineSpec, p: Vec2) -> Result<Self> {
        let line = LineSpec::new(line.point, line.direction)?;
        let mut normal = line.direction.perp();
        if (p - line.point).dot(normal) < 0.0 {
            normal = -normal;
        }
        HalfPlaneSpec::new(line, normal)
    }

    /// Signed distance along the normal; negative inside `V_L`.
    pub fn offset(&self, x: Vec2) -> f64 {
        (x - self.line.point).dot(self.normal)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.offset(x) < 0.0
    }
}

/// Values of `psi` along the line, by abscissa from `line.point`.
#[derive(Clone)]
pub enum TraceData {
    Table { abscissas: Vec<f64>, values: Vec<C64> },
    Function(Arc<dyn Fn(f64) -> Result<C64> + Send + Sync>),
}

impl fmt::Debug for TraceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceData::Table { abscissas, .. } => write!(f, "Table({} samples)", abscissas.len()),
            TraceData::Function(_) => write!(f, "Function"),
        }
    }
}

/// A trace on `[-half_length, half_length]` with its quadrature settings.
#[derive(Debug, Clone)]
pub struct LineTrace {
    pub data: TraceData,
    pub half_length: f64,
    pub panels_per_wavelength: f64,
    /// Relative tolerance for the truncation tail.
    pub tail_tol: f64,
}

impl LineTrace {
    pub fn table(abscissas: Vec<f64>, values: Vec<C64>, half_length: f64) -> Result<Self> {
        if abscissas.len() != values.len() || abscissas.len() <= INTERP_ORDER {
            return Err(Error::Validation(format!(
                "trace table needs matching abscissas and values, at least {} of them",
                INTERP_ORDER + 1
            )));
        }
        if abscissas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("trace abscissas must be increasing".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Validation("non-finite trace value".into()));
        }
        if abscissas[0] > -half_length || *abscissas.last().unwrap() < half_length {
            return Err(Error::Coverage(format!(
                "trace table covers [{:.4e}, {:.4e}], not [-S, S] with S = {half_length:.4e}",
                abscissas[0],
                abscissas.last().unwrap()
            )));
        }
        LineTrace::with_data(TraceData::Table { abscissas, values }, half_length)
    }

    pub fn function(f: impl Fn(f64) -> Result<C64> + Send + Sync + 'static, half_length: f64) -> Result<Self> {
        LineTrace::with_data(TraceData::Function(Arc::new(f)), half_length)
    }

    fn with_data(data: TraceData, half_length: f64) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Validation("trace half length must be positive".into()));
        }
        Ok(LineTrace {
            data,
            half_length,
            panels_per_wavelength: 10.0,
            tail_tol: 1e-3,
        })
    }

    pub fn with_panels(mut self, panels_per_wavelength: f64) -> Self {
        self.panels_per_wavelength = panels_per_wavelength;
        self
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn value(&self, s: f64) -> Result<C64> {
        match &self.data {
            TraceData::Table { abscissas, values } => Ok(lagrange(abscissas, values, s)),
            TraceData::Function(f) => f(s),
        }
    }

    fn check(&self, kappa: f64) -> Result<()> {
        if !(self.panels_per_wavelength >= 1.0) {
            return Err(Error::Validation("need at least one panel per wavelength".into()));
        }
        if let TraceData::Table { abscissas, .. } = &self.data {
            let step = abscissas.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if step > wavelength(kappa) / 10.0 * (1.0 + 1e-9) {
                return Err(Error::Validation(format!(
                    "trace table spacing {step:.4e} exceeds a tenth of a wavelength"
                )));
            }
        }
        Ok(())
    }
}

fn lagrange(a: &[f64], v: &[C64], s: f64) -> C64 {
    let k = INTERP_ORDER + 1;
    let i = a.partition_point(|&t| t < s);
    let start = i.saturating_sub(k / 2 + 1).min(a.len() - k);
    let xs = &a[start..start + k];
    let ys = &v[start..start + k];
    let mut out = C64::new(0.0, 0.0);
    for j in 0..k {
        let mut l = 1.0;
        for m in 0..k {
            if m != j {
                l *= (s - xs[m]) / (xs[j] - xs[m]);
            }
        }
        out += l * ys[j];
    }
    out
}

/// Outgoing free-space Green function `(i/4) H_0(kappa |z|)`.
pub fn outgoing_green(z: Vec2, kappa: f64) -> Result<C64> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Singularity("Green function at zero separation".into()));
    }
    Ok(C64::new(0.0, 0.25) * specfun::hankel1(0, kappa * r)?)
}

/// Derivative of `G+(x - y)` with respect to `y` in the direction `nu`.
pub fn green_kernel_normal(x: Vec2, y: Vec2, nu: Vec2, kappa: f64) -> Result<C64> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singularity("kernel evaluated at x = y".into()));
    }
    Ok(kernel(d, r, nu, kappa))
}

fn kernel(d: Vec2, r: f64, nu: Vec2, kappa: f64) -> C64 {
    let (_, h1) = specfun::h01(kappa * r);
    C64::new(0.0, 0.25 * kappa) * h1 * (d.dot(nu) / r)
}

/// Propagated value with its error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Propagated {
    pub value: C64,
    /// Panel-rule comparison plus a rounding floor.
    pub quad_error: f64,
    /// Bound on the integral beyond `[-S, S]`.
    pub tail_error: f64,
}

struct PanelNodes {
    s: Vec<f64>,
    w: Vec<f64>,
    panels: usize,
}

const PER_PANEL: usize = PANEL_RULE + CHECK_RULE;

fn panel_nodes(half_length: f64, kappa: f64, per_wavelength: f64) -> PanelNodes {
    let panels = ((2.0 * half_length * per_wavelength / wavelength(kappa)).ceil() as usize).max(1);
    let (x8, w8) = quadrature::gauss_legendre(PANEL_RULE);
    let (x4, w4) = quadrature::gauss_legendre(CHECK_RULE);
    let h = 2.0 * half_length / panels as f64;
    let mut s = Vec::with_capacity(panels * PER_PANEL);
    let mut w = Vec::with_capacity(panels * PER_PANEL);
    for p in 0..panels {
        let a = -half_length + p as f64 * h;
        let b = if p + 1 == panels { half_length } else { a + h };
        for (si, wi) in quadrature::mapped(&x8, &w8, a, b).chain(quadrature::mapped(&x4, &w4, a, b)) {
            s.push(si);
            w.push(wi);
        }
    }
    PanelNodes { s, w, panels }
}

fn check_target(spec: &HalfPlaneSpec, x: Vec2, kappa: f64) -> Result<()> {
    if !x.is_finite() || !spec.contains(x) {
        return Err(Error::Geometry(format!("target ({}, {}) is not in the half-plane", x.x, x.y)));
    }
    let d = -spec.offset(x);
    let min = MIN_DISTANCE * wavelength(kappa);
    if d < min {
        return Err(Error::Proximity { distance: d, min });
    }
    Ok(())
}

/// `psi(x) = -2 int_L dG+(x - y)/d nu_y psi(y) dy` at every target, with
/// `nu` the outward normal of `V_L`.
pub fn propagate_targets(
    trace: &LineTrace,
    spec: &HalfPlaneSpec,
    targets: &[Vec2],
    kappa: f64,
) -> Result<Vec<Propagated>> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Validation("kappa must be positive".into()));
    }
    trace.check(kappa)?;
    for &x in targets {
        check_target(spec, x, kappa)?;
    }
    let sl = trace.half_length;
    let nodes = panel_nodes(sl, kappa, trace.panels_per_wavelength);
    let psi: Vec<C64> = nodes
        .s
        .par_iter()
        .map(|&s| trace.value(s))
        .collect::<Result<_>>()?;
    if psi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Domain("trace produced a non-finite value".into()));
    }
    let ends = [(-sl, trace.value(-sl)?), (sl, trace.value(sl)?)];
    let line = spec.line;
    let nu = spec.normal;
    targets
        .par_iter()
        .map(|&x| {
            let mut total = C64::new(0.0, 0.0);
            let mut quad_error = 0.0;
            let mut magnitude = 0.0;
            for p in 0..nodes.panels {
                let mut q8 = C64::new(0.0, 0.0);
                let mut q4 = C64::new(0.0, 0.0);
                for k in p * PER_PANEL..(p + 1) * PER_PANEL {
                    let d = x - line.at(nodes.s[k]);
                    let term = -2.0 * nodes.w[k] * kernel(d, d.norm(), nu, kappa) * psi[k];
                    if k < p * PER_PANEL + PANEL_RULE {
                        q8 += term;
                        magnitude += term.norm();
                    } else {
                        q4 += term;
                    }
                }
                total += q8;
                quad_error += (q8 - q4).norm();
            }
            quad_error += 64.0 * f64::EPSILON * magnitude;
            // one integration by parts against the outgoing phase
            let tail_error: f64 = ends
                .iter()
                .map(|&(s, v)| {
                    let d = x - line.at(s);
                    (2.0 * kernel(d, d.norm(), nu, kappa) * v).norm() * 2.0 / kappa
                })
                .sum();
            if tail_error > trace.tail_tol * total.norm() {
                return Err(Error::Coverage(format!(
                    "truncation S = {sl:.4e} leaves a tail bound {tail_error:.3e} at ({}, {}), above {:.1e} relative",
                    x.x, x.y, trace.tail_tol
                )));
            }
            Ok(Propagated {
                value: total,
                quad_error,
                tail_error,
            })
        })
        .collect()
}

/// `psi(x)` for `x` in `V_L` from the trace on `L`.
pub fn propagate_halfplane(trace: &LineTrace, spec: &HalfPlaneSpec, x: Vec2, kappa: f64) -> Result<C64> {
    Ok(propagate_targets(trace, spec, &[x], kappa)?[0].value)
}

/// Disk known to contain every source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceDisk {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub schedule: ExtractionSchedule,
    pub disk: SourceDisk,
    /// Truncation half length `S` of the line integral.
    pub half_length: f64,
    pub panels_per_wavelength: f64,
    /// Relative accuracy asked of the reconstructed trace.
    pub trace_tol: f64,
}

impl PipelineOptions {
    /// Default schedule, `S` = 200 wavelengths, 10 panels per wavelength.
    pub fn new(kappa: f64, disk: SourceDisk) -> Result<Self> {
        Ok(PipelineOptions {
            schedule: ExtractionSchedule::default_for(kappa)?,
            disk,
            half_length: 200.0 * wavelength(kappa),
            panels_per_wavelength: 10.0,
            trace_tol: 1e-4,
        })
    }
}

/// Complex field on the measurement line recovered from `Im psi`.
#[derive(Debug, Clone)]
pub struct RecoveredTrace {
    /// Line through the shift `q` with the `+` ray's direction.
    pub line: LineSpec,
    pub farfield: FarFieldCoeffs,
    pub extraction: ExtractionReport,
    pub karp: KarpCoeffs,
    /// Exterior multipole fit used for `|s| < coverage_radius`.
    pub near: MultipoleExpansion,
    pub coverage_radius: f64,
    /// Relative misfit of `near` against the Karp values on the overlap.
    pub fit_residual: f64,
}

impl RecoveredTrace {
    /// Field at abscissa `s` from `q`.
    pub fn value_at(&self, s: f64) -> Result<C64> {
        if s.abs() >= self.coverage_radius {
            let side = if s > 0.0 { Orientation::Plus } else { Orientation::Minus };
            karp::eval_karp(&self.karp, s.abs(), side)
        } else {
            self.near.eval(self.line.at(s))
        }
    }

    /// Field at the projection of `y` onto the line.
    pub fn value(&self, y: Vec2) -> Result<C64> {
        self.value_at(self.line.abscissa(y))
    }
}

/// Size of the first omitted Karp term at radius `r`, by the ratio of the
/// last two retained terms.
fn karp_truncation(kc: &KarpCoeffs, r: f64, side: Orientation) -> (f64, f64) {
    let (h0, h1) = specfun::h01(kc.kappa * r);
    let (f, g) = kc.side(side);
    let t: Vec<f64> = f
        .iter()
        .zip(&g)
        .enumerate()
        .map(|(j, (a, b))| (a.norm() * h0.norm() + b.norm() * h1.norm()) / r.powi(j as i32))
        .collect();
    let n = t.len() - 1;
    let est = if n == 0 || t[n - 1] == 0.0 {
        t[n]
    } else {
        t[n] * (t[n] / t[n - 1]).min(1.0)
    };
    (est, t[0])
}

/// Smallest radius beyond which the Karp series meets `tol` on both sides.
fn coverage_radius(
    kc: &KarpCoeffs,
    report: &ExtractionReport,
    r_min: f64,
    r_max: f64,
    tol: f64,
) -> Result<f64> {
    let unc: Vec<f64> = report
        .uncertainty_plus
        .iter()
        .zip(&report.uncertainty_minus)
        .map(|(a, b)| a.max(*b))
        .collect();
    let meets = |r: f64| -> bool {
        let h = specfun::h01(kc.kappa * r).0.norm();
        let data: f64 = unc.iter().enumerate().map(|(j, u)| u * h / r.powi(j as i32)).sum();
        [Orientation::Plus, Orientation::Minus].into_iter().all(|side| {
            let (trunc, scale) = karp_truncation(kc, r, side);
            trunc + data <= tol * scale
        })
    };
    if !meets(r_max) {
        return Err(Error::Coverage(format!(
            "order-{} Karp series misses tolerance {tol:.1e} even at r = {r_max:.4e}",
            kc.order()
        )));
    }
    let mut r = r_max;
    while r * 0.97 >= r_min && meets(r * 0.97) {
        r *= 0.97;
    }
    Ok(r.max(r_min))
}

/// Radius of the smoothness prior on the multipole coefficients.
fn prior_radius(kappa: f64, rho: f64) -> f64 {
    rho.max(1.0 / kappa)
}

/// Multipole bandwidth for an exterior fit on a line at distance `d` from a
/// disk of radius `rho`.
fn near_bandwidth(kappa: f64, rho: f64, d: f64) -> usize {
    let geometric = (1e-12f64.ln() / (rho / d).ln()).ceil() as usize;
    ((kappa * rho).ceil() as usize + geometric.max(8)).min(60)
}

fn multipole_row(center: Vec2, kappa: f64, m_top: usize, y: Vec2) -> Vec<C64> {
    let z = y - center;
    let h = specfun::hn_all(m_top, kappa * z.norm());
    let a = z.angle();
    let m = m_top as i32;
    (-m..=m)
        .map(|k| signed_hankel(&h, k) * C64::from_polar(1.0, k as f64 * a))
        .collect()
}

pub(crate) const NEAR_RIDGE: f64 = 1e-6;

pub(crate) fn fit_near(
    line: LineSpec,
    near: [&ImSamples; 2],
    kc: &KarpCoeffs,
    disk: SourceDisk,
    r_cov: f64,
    ridge: f64,
) -> Result<(MultipoleExpansion, f64)> {
    let kappa = kc.kappa;
    let lambda = wavelength(kappa);
    let d = line.distance(disk.center);
    if d <= disk.radius {
        return Err(Error::Geometry("measurement line meets the source disk".into()));
    }
    for samples in near {
        let mut last = 0.0;
        let mut gap: f64 = 0.0;
        for &s in samples.abscissas.iter().take_while(|&&s| s <= r_cov) {
            gap = gap.max(s - last);
            last = s;
        }
        gap = gap.max(r_cov - last);
        if gap > 0.5 * lambda {
            return Err(Error::Coverage(format!(
                "Im samples leave a gap of {gap:.4e} on the near segment |s| < {r_cov:.4e}"
            )));
        }
    }
    let rho_p = prior_radius(kappa, disk.radius);
    let m_top = near_bandwidth(kappa, rho_p, d);
    let h_d = specfun::hn_all(m_top, kappa * d);
    // unknowns scaled to their expected size c_m H_m(kappa d) ~ (rho/d)^|m|
    let scale: Vec<f64> = (-(m_top as i32)..=m_top as i32)
        .map(|m| (rho_p / d).powi(m.abs()) / h_d[m.unsigned_abs() as usize].norm())
        .collect();
    let cols = 2 * (2 * m_top + 1);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    let scaled = |b: Vec<C64>| -> Vec<C64> { b.into_iter().zip(&scale).map(|(z, s)| z * *s).collect() };
    for samples in near {
        for (y, v) in samples.points().zip(samples.im_psi()) {
            let b = scaled(multipole_row(disk.center, kappa, m_top, y));
            rows.push(b.iter().flat_map(|z| [z.im, z.re]).collect());
            rhs.push(v);
        }
    }
    let steps = ((r_cov / (0.25 * lambda)).ceil() as usize).max(8);
    let mut anchors = Vec::new();
    for side in [Orientation::Plus, Orientation::Minus] {
        for k in 0..=steps {
            let r = r_cov * (1.0 + k as f64 / steps as f64);
            let v = karp::eval_karp(kc, r, side)?;
            let y = line.at(side.sign() * r);
            let b = scaled(multipole_row(disk.center, kappa, m_top, y));
            rows.push(b.iter().flat_map(|z| [z.re, -z.im]).collect());
            rhs.push(v.re);
            rows.push(b.iter().flat_map(|z| [z.im, z.re]).collect());
            rhs.push(v.im);
            anchors.push((y, v));
        }
    }
    let data_rows = rows.len();
    let frob = (rows.iter().flatten().map(|a| a * a).sum::<f64>() / cols as f64).sqrt();
    let a = DMatrix::from_fn(data_rows + cols, cols, |i, j| {
        if i < data_rows {
            rows[i][j]
        } else if i - data_rows == j {
            ridge * frob
        } else {
            0.0
        }
    });
    let mut b = rhs;
    b.resize(data_rows + cols, 0.0);
    let (x, cond) = linalg::least_squares(a, &DVector::from_vec(b));
    if !cond.is_finite() {
        return Err(Error::RankDeficient { cond });
    }
    let expansion = MultipoleExpansion {
        center: disk.center,
        kappa,
        m_min: -(m_top as i32),
        coeffs: (0..2 * m_top + 1)
            .map(|k| C64::new(x[2 * k], x[2 * k + 1]) * scale[k])
            .collect(),
    };
    let mut misfit: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (y, v) in anchors {
        misfit = misfit.max((expansion.eval(y)? - v).norm());
        peak = peak.max(v.norm());
    }
    let residual = if peak > 0.0 { misfit / peak } else { misfit };
    Ok((expansion, residual))
}

/// Recovers `psi` on the measurement line from `Im psi` on its two rays.
///
/// The rays must start at a common point `q`. Besides the schedule radii the
/// samples must resolve the segment where the Karp series is not yet accurate.
pub fn recover_trace(
    samples_plus: &ImSamples,
    samples_minus: &ImSamples,
    order: usize,
    options: &PipelineOptions,
) -> Result<RecoveredTrace> {
    let q = farfield::default_shift(samples_plus, samples_minus);
    let (ff, report) =
        farfield::extract_all_at(samples_plus, samples_minus, order, &options.schedule, q).stage("farfield")?;
    let kc = karp::karp_from_farfield(&ff).stage("karp")?;
    let line = LineSpec::new(q, samples_plus.ray.direction)?;
    let rho_q = (q - options.disk.center).norm() + options.disk.radius;
    let r_cov = coverage_radius(&kc, &report, 1.5 * rho_q, options.half_length, options.trace_tol)
        .stage("coverage")?;
    let plus = farfield::rebase(samples_plus, q).window(0.0, 2.0 * r_cov);
    let minus = farfield::rebase(samples_minus, q).window(0.0, 2.0 * r_cov);
    let (near, fit_residual) = fit_near(line, [&plus, &minus], &kc, options.disk, r_cov, NEAR_RIDGE).stage("near-field fit")?;
    Ok(RecoveredTrace {
        line,
        farfield: ff,
        extraction: report,
        karp: kc,
        near,
        coverage_radius: r_cov,
        fit_residual,
    })
}

/// Sample abscissas for one ray: a grid of `per_wavelength` points per
/// wavelength on `(0, near_extent]` merged with the schedule points.
pub fn pipeline_abscissas(
    schedule: &ExtractionSchedule,
    kappa: f64,
    near_extent: f64,
    per_wavelength: f64,
) -> Vec<f64> {
    let h = wavelength(kappa) / per_wavelength;
    let count = (near_extent / h).floor() as usize;
    let mut s: Vec<f64> = (0..count).map(|k| (k as f64 + 0.5) * h).collect();
    let sched = schedule.abscissas();
    s.retain(|&a| sched.iter().all(|&b| (a - b).abs() > 1e-6 * h));
    s.extend(sched);
    s.sort_by(f64::total_cmp);
    s
}

/// Pipeline output at the targets.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub values: Vec<C64>,
    pub estimates: Vec<Propagated>,
    pub trace: Arc<RecoveredTrace>,
}

/// `psi` at `targets` in `V_L` from `Im psi` sampled on the two rays of `L`.
pub fn reconstruct_from_im(
    samples_plus: &ImSamples,
    samples_minus: &ImSamples,
    order: usize,
    spec: &HalfPlaneSpec,
    targets: &[Vec2],
    options: &PipelineOptions,
) -> Result<Reconstruction> {
    let ray = &samples_plus.ray;
    let scale = 1.0 + (ray.origin - spec.line.point).norm();
    if spec.line.distance(ray.origin) > 1e-9 * scale || ray.direction.cross(spec.line.direction).abs() > 1e-12 {
        return Err(Error::Geometry("samples do not lie on the half-plane boundary".into()));
    }
    let trace = Arc::new(recover_trace(samples_plus, samples_minus, order, options)?);
    let on_line = trace.clone();
    let line = spec.line;
    let lt = LineTrace::function(move |s| on_line.value(line.at(s)), options.half_length)?
        .with_panels(options.panels_per_wavelength);
    let estimates = propagate_targets(&lt, spec, targets, samples_plus.kappa).stage("propagate")?;
    Ok(Reconstruction {
        values: estimates.iter().map(|e| e.value).collect(),
        estimates,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{RadiationField, Term};

    fn spec() -> HalfPlaneSpec {
        let line = LineSpec::new(Vec2::new(0.0, -2.0), Vec2::new(1.0, 0.0)).unwrap();
        HalfPlaneSpec::new(line, Vec2::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn kernel_vanishes_along_the_line() {
        let k = green_kernel_normal(Vec2::new(3.0, 0.0), Vec2::ZERO, Vec2::new(0.0, 1.0), 2.0).unwrap();
        assert_eq!(k, C64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_matches_central_difference() {
        let kappa = 1.7;
        let x = Vec2::new(0.4, -3.0);
        let y = Vec2::new(1.1, 0.2);
        let nu = Vec2::new(0.6, 0.8);
        let h = 1e-4;
        let g = |y: Vec2| outgoing_green(x - y, kappa).unwrap();
        let fd = (g(y + h * nu) - g(y - h * nu)) / (2.0 * h);
        let k = green_kernel_normal(x, y, nu, kappa).unwrap();
        assert!((fd - k).norm() < 1e-7 * k.norm());
    }

    #[test]
    fn kernel_large_argument_envelope() {
        let kappa = 2.0;
        let x = Vec2::new(30.0, 40.0);
        let nu = Vec2::new(0.0, 1.0);
        let k = green_kernel_normal(x, Vec2::ZERO, nu, kappa).unwrap();
        let want = kappa / 4.0 * (2.0 / (PI * 100.0)).sqrt() * 0.8;
        assert!((k.norm() / want - 1.0).abs() < 0.01);
        assert!(green_kernel_normal(x, x, nu, kappa).is_err());
    }

    #[test]
    fn zero_trace_gives_zero() {
        let t = LineTrace::function(|_| Ok(C64::new(0.0, 0.0)), 20.0).unwrap();
        let v = propagate_halfplane(&t, &spec(), Vec2::new(0.0, -4.0), 3.0).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_targets_off_the_half_plane() {
        let t = LineTrace::function(|_| Ok(C64::new(1.0, 0.0)), 20.0).unwrap();
        let s = spec();
        assert!(matches!(
            propagate_halfplane(&t, &s, Vec2::new(0.0, -2.01), 3.0),
            Err(Error::Proximity { .. })
        ));
        assert!(matches!(
            propagate_halfplane(&t, &s, Vec2::new(0.0, 1.0), 3.0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn short_truncation_is_a_coverage_error() {
        let field = RadiationField::new(3.0, vec![Term::Multipole { m: 0, c: C64::new(1.0, 0.0) }]).unwrap();
        let s = spec();
        let t = LineTrace::function(move |u| field.eval(s.line.at(u)), 3.0).unwrap();
        assert!(matches!(
            propagate_halfplane(&t, &s, Vec2::new(0.0, -4.0), 3.0),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn lagrange_reproduces_degree_six() {
        let a: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let p = |x: f64| C64::new(1.0 - x + x.powi(6), x.powi(3));
        let v: Vec<C64> = a.iter().map(|&x| p(x)).collect();
        for s in [0.05, 0.93, 1.87] {
            assert!((lagrange(&a, &v, s) - p(s)).norm() < 1e-12);
        }
    }

    #[test]
    fn half_plane_orientation() {
        let s = HalfPlaneSpec::away_from(spec().line, Vec2::ZERO).unwrap();
        assert!(s.contains(Vec2::new(5.0, -3.0)));
        assert!(!s.contains(Vec2::ZERO));
        let line = LineSpec::new(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!(HalfPlaneSpec::new(line, Vec2::new(1.0, 1.0)).is_err());
    }
}

