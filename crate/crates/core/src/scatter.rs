//! Potential scattering on a cell grid: the Lippmann–Schwinger resolvent
//! `R = -G+ + int G+(x - z) v(z) R(z, y) dz`, plane-wave solutions with the
//! same operator, far-field relations and the line-data reduction.

use crate::error::StageExt;
use crate::fields::{ImSamples, Orientation, RayGeometry};
use crate::linalg::{self, ComplexLu};
use crate::propagate::{self, PipelineOptions, SourceDisk};
use crate::{specfun, Error, LineSpec, Result, Vec2, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Largest accepted condition estimate of `I - K V`.
pub const MAX_COND: f64 = 1e12;

#[derive(Debug, Deserialize)]
struct RawGrid {
    bbox: [f64; 4],
    n: usize,
    kappa: f64,
    v: Vec<C64>,
}

/// Piecewise-constant potential on an `n x n` grid over
/// `bbox = [x_min, y_min, x_max, y_max]`; `v` is row-major with rows along `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct PotentialGrid {
    pub bbox: [f64; 4],
    pub n: usize,
    pub kappa: f64,
    pub v: Vec<C64>,
}

impl TryFrom<RawGrid> for PotentialGrid {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        PotentialGrid::new(r.bbox, r.n, r.kappa, r.v)
    }
}

impl PotentialGrid {
    pub fn new(bbox: [f64; 4], n: usize, kappa: f64, v: Vec<C64>) -> Result<Self> {
        if !bbox.iter().all(|b| b.is_finite()) || bbox[2] <= bbox[0] || bbox[3] <= bbox[1] {
            return Err(Error::Validation(format!("invalid bbox {bbox:?}")));
        }
        if n == 0 || v.len() != n * n {
            return Err(Error::Validation(format!("expected {} potential values, got {}", n * n, v.len())));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Validation("kappa must be positive".into()));
        }
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Validation("non-finite potential value".into()));
        }
        Ok(PotentialGrid { bbox, n, kappa, v })
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(bbox: [f64; 4], n: usize, kappa: f64, f: impl Fn(Vec2) -> C64) -> Result<Self> {
        let g = PotentialGrid::new(bbox, n, kappa, vec![C64::new(0.0, 0.0); n * n])?;
        let v = g.centers().into_iter().map(f).collect();
        PotentialGrid::new(bbox, n, kappa, v)
    }

    pub fn zero(bbox: [f64; 4], n: usize, kappa: f64) -> Result<Self> {
        PotentialGrid::new(bbox, n, kappa, vec![C64::new(0.0, 0.0); n * n])
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.bbox[2] - self.bbox[0]) / self.n as f64,
            (self.bbox[3] - self.bbox[1]) / self.n as f64,
        )
    }

    pub fn centers(&self) -> Vec<Vec2> {
        let (hx, hy) = self.cell_size();
        (0..self.n * self.n)
            .map(|k| {
                let (i, j) = (k / self.n, k % self.n);
                Vec2::new(self.bbox[0] + (j as f64 + 0.5) * hx, self.bbox[1] + (i as f64 + 0.5) * hy)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, lambda: f64) -> PotentialGrid {
        PotentialGrid {
            v: self.v.iter().map(|z| z * lambda).collect(),
            ..self.clone()
        }
    }

    /// Same potential averaged over 2 x 2 blocks.
    pub fn coarsened(&self) -> Result<PotentialGrid> {
        if !self.n.is_multiple_of(2) || self.n < 2 {
            return Err(Error::Validation("coarsening needs an even grid".into()));
        }
        let m = self.n / 2;
        let v = (0..m * m)
            .map(|k| {
                let (i, j) = (2 * (k / m), 2 * (k % m));
                let at = |a: usize, b: usize| self.v[a * self.n + b];
                0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1))
            })
            .collect();
        PotentialGrid::new(self.bbox, m, self.kappa, v)
    }

    /// True for points in the closed box.
    pub fn contains(&self, x: Vec2) -> bool {
        x.x >= self.bbox[0] && x.x <= self.bbox[2] && x.y >= self.bbox[1] && x.y <= self.bbox[3]
    }

    /// Smallest disk about the box centre holding every cell centre.
    pub fn source_disk(&self) -> SourceDisk {
        let (hx, hy) = self.cell_size();
        let w = self.bbox[2] - self.bbox[0] - hx;
        let h = self.bbox[3] - self.bbox[1] - hy;
        SourceDisk {
            center: Vec2::new(0.5 * (self.bbox[0] + self.bbox[2]), 0.5 * (self.bbox[1] + self.bbox[3])),
            radius: 0.5 * w.hypot(h),
        }
    }
}

/// `int ln|z| dz` over the rectangle `[-a, a] x [-b, b]`.
pub(crate) fn log_integral_rect(a: f64, b: f64) -> f64 {
    2.0 * (a * b * ((a * a + b * b).ln() - 3.0) + a * a * (b / a).atan() + b * b * (a / b).atan())
}

fn green(z: Vec2, kappa: f64) -> C64 {
    C64::new(0.0, 0.25) * specfun::hn(0, kappa * z.norm())
}

/// Discretised operator `K` with the self-cell singularity integrated in
/// closed form, factorised as `I - K V`.
pub struct LsSolver {
    pub grid: PotentialGrid,
    centers: Vec<Vec2>,
    area: f64,
    self_weight: C64,
    lu: Option<ComplexLu>,
}

impl LsSolver {
    /// Assembles and factorises; fails with `SingularSystem` when `I - K V`
    /// is (numerically) singular at this `kappa`.
    pub fn new(grid: &PotentialGrid) -> Result<Self> {
        let (hx, hy) = grid.cell_size();
        let area = hx * hy;
        let kappa = grid.kappa;
        let self_weight = area * C64::new(-((0.5 * kappa).ln() + EULER_GAMMA) / (2.0 * PI), 0.25)
            - log_integral_rect(0.5 * hx, 0.5 * hy) / (2.0 * PI);
        let centers = grid.centers();
        let mut solver = LsSolver {
            grid: grid.clone(),
            centers,
            area,
            self_weight,
            lu: None,
        };
        if !grid.is_zero() {
            let n = solver.centers.len();
            let cols: Vec<Vec<C64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let vj = grid.v[j];
                    (0..n)
                        .map(|i| {
                            let k = solver.weight(solver.centers[i], j) * vj;
                            if i == j {
                                C64::new(1.0, 0.0) - k
                            } else {
                                -k
                            }
                        })
                        .collect()
                })
                .collect();
            let a = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
            solver.lu = Some(ComplexLu::new(a, MAX_COND)?);
        }
        Ok(solver)
    }

    /// Weight of a cell acting on its own centre.
    pub fn self_weight(&self) -> C64 {
        self.self_weight
    }

    pub fn cond_estimate(&self) -> f64 {
        self.lu.as_ref().map_or(1.0, |lu| lu.cond_estimate)
    }

    /// Quadrature weight of cell `j` for the kernel `G+(x - z)`.
    fn weight(&self, x: Vec2, j: usize) -> C64 {
        let d = x - self.centers[j];
        if d.norm() == 0.0 {
            self.self_weight
        } else {
            self.area * green(d, self.grid.kappa)
        }
    }

    /// `int G+(x - z) s(z) dz` for cell densities `s`.
    fn potential(&self, x: Vec2, density: &[C64]) -> C64 {
        density
            .iter()
            .enumerate()
            .filter(|(_, s)| s.norm() != 0.0)
            .map(|(j, s)| self.weight(x, j) * s)
            .sum()
    }

    /// Solves `u = f + K V u` and returns the density `V u`.
    fn density(&self, incident: Vec<C64>) -> Vec<C64> {
        match &self.lu {
            None => vec![C64::new(0.0, 0.0); incident.len()],
            Some(lu) => {
                let u = lu.solve(&DVector::from_vec(incident));
                u.iter().zip(&self.grid.v).map(|(a, b)| a * b).collect()
            }
        }
    }

    /// `R+(., y)`.
    pub fn resolvent(&self, y: Vec2) -> Result<ScatteredField<'_>> {
        if !y.is_finite() {
            return Err(Error::Validation("non-finite source point".into()));
        }
        if self.centers.contains(&y) && !self.grid.is_zero() {
            return Err(Error::Singularity("source point on a cell centre".into()));
        }
        let f = self.centers.iter().map(|&z| -green(z - y, self.grid.kappa)).collect();
        Ok(ScatteredField {
            solver: self,
            incident: Incident::Point(y),
            density: self.density(f),
        })
    }

    /// Plane-wave solution `psi+(., k)` of the same equation.
    pub fn plane_wave(&self, k: Vec2) -> Result<ScatteredField<'_>> {
        if (k.norm() - self.grid.kappa).abs() > 1e-12 * self.grid.kappa {
            return Err(Error::Validation(format!("|k| = {} differs from kappa", k.norm())));
        }
        let f = self.centers.iter().map(|&z| C64::from_polar(1.0, k.dot(z))).collect();
        Ok(ScatteredField {
            solver: self,
            incident: Incident::Plane(k),
            density: self.density(f),
        })
    }

    /// First Born term `-int G+(x - z) v(z) G+(z - y) dz`.
    pub fn born_first_order(&self, x: Vec2, y: Vec2) -> C64 {
        let kappa = self.grid.kappa;
        let s: Vec<C64> = self
            .centers
            .iter()
            .zip(&self.grid.v)
            .map(|(&z, &v)| -v * green(z - y, kappa))
            .collect();
        self.potential(x, &s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Incident {
    Point(Vec2),
    Plane(Vec2),
}

/// Incident field plus the potential of the solved density.
pub struct ScatteredField<'a> {
    solver: &'a LsSolver,
    incident: Incident,
    density: Vec<C64>,
}

impl ScatteredField<'_> {
    pub fn incident(&self, x: Vec2) -> Result<C64> {
        Ok(match self.incident {
            Incident::Point(y) => -propagate::outgoing_green(x - y, self.solver.grid.kappa)?,
            Incident::Plane(k) => C64::from_polar(1.0, k.dot(x)),
        })
    }

    /// Field minus the incident part.
    pub fn scattered(&self, x: Vec2) -> C64 {
        self.solver.potential(x, &self.density)
    }

    pub fn eval(&self, x: Vec2) -> Result<C64> {
        Ok(self.incident(x)? + self.scattered(x))
    }
}

/// `R+(x, y)` at each target `x`.
pub fn solve_lippmann_schwinger(grid: &PotentialGrid, y: Vec2, targets: &[Vec2]) -> Result<Vec<C64>> {
    let s = LsSolver::new(grid)?;
    let r = s.resolvent(y)?;
    targets.iter().map(|&x| r.eval(x)).collect()
}

/// Relative defect `|R(x, y) - R(y, x)| / |R(x, y)|`.
pub fn check_reciprocity(grid: &PotentialGrid, x: Vec2, y: Vec2) -> Result<f64> {
    let s = LsSolver::new(grid)?;
    reciprocity_defect(&s, x, y)
}

fn reciprocity_defect(s: &LsSolver, x: Vec2, y: Vec2) -> Result<f64> {
    let a = s.resolvent(y)?.eval(x)?;
    let b = s.resolvent(x)?.eval(y)?;
    Ok((a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
}

/// `|R_n(x, y) - R_{n/2}(x, y)| / |R_n(x, y)|` with the 2 x 2 averaged grid.
pub fn discretization_estimate(grid: &PotentialGrid, x: Vec2, y: Vec2) -> Result<f64> {
    let fine = LsSolver::new(grid)?.resolvent(y)?.eval(x)?;
    let coarse = LsSolver::new(&grid.coarsened()?)?.resolvent(y)?.eval(x)?;
    Ok((fine - coarse).norm() / fine.norm().max(f64::MIN_POSITIVE))
}

/// Default radii for far-field limits: 100, 200, 400, 800 wavelengths.
pub fn far_radii(kappa: f64) -> Vec<f64> {
    (0..4).map(|k| 100.0 * 2f64.powi(k) * 2.0 * PI / kappa).collect()
}

fn extrapolate(radii: &[f64], values: &[C64]) -> C64 {
    let h: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    linalg::neville_at_zero(&h, values)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Validation("radii must be positive".into()));
    }
    Ok(())
}

/// Estimates of `psi+(y, -kappa direction)` from `R(r direction, y)` at each
/// radius, before extrapolation.
pub fn psi_plus_from_resolvent(
    solver: &LsSolver,
    y: Vec2,
    direction: Vec2,
    radii: &[f64],
) -> Result<Vec<C64>> {
    check_radii(radii)?;
    let kappa = solver.grid.kappa;
    let dir = direction.normalized();
    let r_field = solver.resolvent(y)?;
    radii
        .iter()
        .map(|&r| {
            let pre = -0.5 * (1.0 / (2.0 * PI * kappa * r)).sqrt() * C64::from_polar(1.0, kappa * r + FRAC_PI_4);
            Ok(r_field.eval(r * dir)? / pre)
        })
        .collect()
}

/// `psi+(y, -kappa direction)` from the far field of `R(., y)`, extrapolated in `1/r`.
pub fn psi_plus_farfield(grid: &PotentialGrid, y: Vec2, direction: Vec2, radii: &[f64]) -> Result<C64> {
    let s = LsSolver::new(grid)?;
    let est = psi_plus_from_resolvent(&s, y, direction, radii)?;
    Ok(extrapolate(radii, &est))
}

/// `A(k, kappa x)` for each unit direction `x`, from `psi+_sc` at `radii`.
pub fn scattering_amplitude_at(
    solver: &LsSolver,
    k: Vec2,
    directions: &[Vec2],
    radii: &[f64],
) -> Result<Vec<C64>> {
    check_radii(radii)?;
    let kappa = solver.grid.kappa;
    let field = solver.plane_wave(k)?;
    Ok(directions
        .par_iter()
        .map(|d| {
            let dir = d.normalized();
            let est: Vec<C64> = radii
                .iter()
                .map(|&r| field.scattered(r * dir) * r.sqrt() * C64::from_polar(1.0, -kappa * r))
                .collect();
            extrapolate(radii, &est)
        })
        .collect())
}

pub fn scattering_amplitude(grid: &PotentialGrid, k: Vec2, directions: &[Vec2]) -> Result<Vec<C64>> {
    let s = LsSolver::new(grid)?;
    scattering_amplitude_at(&s, k, directions, &far_radii(grid.kappa))
}

/// Recovered and direct `R+(x_i, x_k)` on the points of `Lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct GklReport {
    pub points: Vec<Vec2>,
    /// `recovered[k][i] = R(points[i], points[k])`; diagonal entries are zero.
    pub recovered: Vec<Vec<C64>>,
    pub direct: Vec<Vec<C64>>,
    /// Largest off-diagonal relative error.
    pub max_rel_error: f64,
    pub reciprocity_recovered: f64,
    pub reciprocity_direct: f64,
}

fn table_reciprocity(t: &[Vec<C64>]) -> f64 {
    let n = t.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                worst = worst.max((t[k][i] - t[i][k]).norm() / t[k][i].norm().max(f64::MIN_POSITIVE));
            }
        }
    }
    worst
}

/// For each source point `y` on `Lambda`, recovers `R+(., y)` on `Lambda` from
/// `Im R+(., y)` sampled on the two rays of `line`.
///
/// The free part `-G+(x - y)` is known in closed form and removed before the
/// pipeline sees the data; what remains radiates from `Omega` only.
pub fn gkl_reduce(
    grid: &PotentialGrid,
    line: &LineSpec,
    interval: [f64; 2],
    points: usize,
    order: usize,
) -> Result<GklReport> {
    if points < 2 || !(interval[1] > interval[0]) {
        return Err(Error::Validation("need at least two points on a non-empty interval".into()));
    }
    let disk = grid.source_disk();
    let kappa = grid.kappa;
    let line = LineSpec::new(line.point, line.direction)?;
    if line.distance(disk.center) <= disk.radius {
        return Err(Error::Geometry("line meets the disk around Omega".into()));
    }
    let q = line.at(line.abscissa(disk.center));
    let lam: Vec<Vec2> = (0..points)
        .map(|k| {
            let t = interval[0] + (interval[1] - interval[0]) * k as f64 / (points - 1) as f64;
            line.at(t)
        })
        .collect();
    let solver = LsSolver::new(grid).stage("lippmann-schwinger")?;
    let options = PipelineOptions::new(kappa, disk)?;
    let abscissas = propagate::pipeline_abscissas(&options.schedule, kappa, options.schedule.radii[0], 10.0);
    let plus = RayGeometry::new(q, line.direction, Orientation::Plus)?;
    let minus = RayGeometry::new(q, line.direction, Orientation::Minus)?;
    let rows: Vec<(Vec<C64>, Vec<C64>)> = lam
        .iter()
        .map(|&y| {
            let r = solver.resolvent(y)?;
            let im_data = |ray: &RayGeometry| -> Result<ImSamples> {
                let values: Vec<f64> = abscissas
                    .par_iter()
                    .map(|&s| {
                        let x = ray.point(s);
                        r.scattered(x).im * (x - q).norm().sqrt()
                    })
                    .collect();
                let mut s = ImSamples::new(*ray, abscissas.clone(), values, kappa, 0.0)?;
                s.frame = q;
                Ok(s)
            };
            let trace = propagate::recover_trace(&im_data(&plus)?, &im_data(&minus)?, order, &options)?;
            let mut rec = Vec::with_capacity(points);
            let mut dir = Vec::with_capacity(points);
            for &x in &lam {
                if x == y {
                    rec.push(C64::new(0.0, 0.0));
                    dir.push(C64::new(0.0, 0.0));
                    continue;
                }
                let free = -propagate::outgoing_green(x - y, kappa)?;
                rec.push(free + trace.value(x)?);
                dir.push(r.eval(x)?);
            }
            Ok((rec, dir))
        })
        .collect::<Result<_>>()
        .stage("gkl")?;
    let (recovered, direct): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut max_rel_error: f64 = 0.0;
    for (a, b) in recovered.iter().zip(&direct) {
        for (u, w) in a.iter().zip(b) {
            if w.norm() > 0.0 {
                max_rel_error = max_rel_error.max((u - w).norm() / w.norm());
            }
        }
    }
    Ok(GklReport {
        points: lam,
        reciprocity_recovered: table_reciprocity(&recovered),
        reciprocity_direct: table_reciprocity(&direct),
        recovered,
        direct,
        max_rel_error,
    })
}
