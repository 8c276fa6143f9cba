//! Recovery of far-field coefficients `f_j` from `I = sqrt(r) Im(psi)` on two
//! opposite rays of one line.
//!
//! Convention: `psi(r theta) ~ sqrt(2/(pi kappa r)) e^{i(kappa r - pi/4)} sum_j f_j r^{-j}`.

use crate::fields::{ImSamples, Orientation, RayGeometry};
use crate::linalg::{self, Extrapolated};
use crate::{Error, Result, Vec2, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

/// Smallest admissible `|sin(kappa tau)|` for a single two-point solve.
pub const MIN_SIN_KT: f64 = 1e-6;
/// Largest supported extraction order.
pub const MAX_ORDER: usize = 4;
/// Relative tolerance used to locate schedule radii among sample abscissas.
const ABSCISSA_MATCH: f64 = 1e-9;

/// Coefficients `f_0..f_n` at `phi` and at `phi + pi`, in the frame centred at `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldCoeffs {
    pub kappa: f64,
    pub phi: f64,
    #[serde(rename = "q")]
    pub origin_shift: Vec2,
    pub f_plus: Vec<C64>,
    pub f_minus: Vec<C64>,
}

impl FarFieldCoeffs {
    pub fn order(&self) -> usize {
        self.f_plus.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_plus.len() != self.f_minus.len() || self.f_plus.is_empty() {
            return Err(Error::OrderMismatch(format!(
                "{} coefficients at phi, {} at phi + pi",
                self.f_plus.len(),
                self.f_minus.len()
            )));
        }
        Ok(())
    }
}

/// Radii at which the two-point solve is applied, the pair offset, and the
/// extrapolation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSchedule {
    pub radii: Vec<f64>,
    pub tau: f64,
    pub extrapolation_depth: usize,
}

impl ExtractionSchedule {
    /// Radii close to `s0 g^k`, `k = 0..=count`, rounded to whole wavelengths so
    /// that `kappa r` is the same modulo `2 pi` at every radius.
    pub fn geometric(
        kappa: f64,
        s0: f64,
        growth: f64,
        count: usize,
        depth: usize,
        tau: Option<f64>,
    ) -> Result<Self> {
        if !(kappa > 0.0 && s0 > 0.0 && growth > 1.0) {
            return Err(Error::Validation(format!(
                "schedule needs kappa > 0, s0 > 0, growth > 1 (got {kappa}, {s0}, {growth})"
            )));
        }
        let wl = 2.0 * PI / kappa;
        let mut radii: Vec<f64> = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let r = wl * (s0 * growth.powi(k as i32) / wl).round().max(1.0);
            if radii.last().is_some_and(|&p| r <= p) {
                return Err(Error::Validation(
                    "schedule radii collapse after rounding to wavelengths; increase s0 or growth".into(),
                ));
            }
            radii.push(r);
        }
        let s = ExtractionSchedule {
            radii,
            tau: tau.unwrap_or(PI / (2.0 * kappa)),
            extrapolation_depth: depth,
        };
        s.validate(kappa)?;
        Ok(s)
    }

    /// Default schedule: `s0 = 1e3/kappa`, growth 2, eleven radii, depth 3.
    pub fn default_for(kappa: f64) -> Result<Self> {
        ExtractionSchedule::geometric(kappa, 1e3 / kappa, 2.0, 10, 3, None)
    }

    pub fn validate(&self, kappa: f64) -> Result<()> {
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("schedule radii must be strictly increasing".into()));
        }
        if self.radii[0] <= 0.0 {
            return Err(Error::Validation("schedule radii must be positive".into()));
        }
        let skt = (kappa * self.tau).sin().abs();
        if !(self.tau > 0.0) || skt < 0.5 {
            return Err(Error::Validation(format!(
                "tau = {} gives |sin(kappa tau)| = {skt:.3} < 0.5",
                self.tau
            )));
        }
        Ok(())
    }

    /// Every radius at which `I` must be sampled, sorted.
    pub fn abscissas(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .radii
            .iter()
            .flat_map(|&r| [r, r + self.tau])
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }
}

/// `sqrt(r) psi_im`.
pub fn weighted_im(psi_im: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    Ok(r.sqrt() * psi_im)
}

/// Solves `sqrt(2/(pi kappa)) Im(e^{i(kappa r - pi/4)} f) = I` at two radii.
pub fn two_point_solve(i_x: f64, i_y: f64, r_x: f64, r_y: f64, kappa: f64) -> Result<C64> {
    let ax = kappa * r_x - FRAC_PI_4;
    let ay = kappa * r_y - FRAC_PI_4;
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let det = sx * cy - cx * sy;
    if det.abs() < MIN_SIN_KT {
        return Err(Error::Conditioning { sin_kt: det.abs() });
    }
    let w = (PI * kappa / 2.0).sqrt();
    let (bx, by) = (i_x * w, i_y * w);
    let re = (bx * cy - cx * by) / det;
    let im = (sx * by - bx * sy) / det;
    Ok(C64::new(re, im))
}

/// Two-point estimate of `f_0` from `I` at `r` and `r + tau`.
pub fn extract_f0_two_point(i_x: f64, i_y: f64, r: f64, tau: f64, kappa: f64) -> Result<C64> {
    if !(r > 0.0 && kappa > 0.0) {
        return Err(Error::Domain(format!("need r > 0 and kappa > 0 (got {r}, {kappa})")));
    }
    two_point_solve(i_x, i_y, r, r + tau, kappa)
}

/// `sqrt(r) Im(psi_n(r))` for the far-field partial sum built from `known`.
fn weighted_partial(known: &[C64], r: f64, kappa: f64) -> f64 {
    if known.is_empty() {
        return 0.0;
    }
    let w = 1.0 / r;
    let series = known.iter().rev().fold(C64::new(0.0, 0.0), |acc, &f| acc * w + f);
    let phase = C64::from_polar(1.0, kappa * r - FRAC_PI_4);
    (2.0 / (PI * kappa)).sqrt() * (phase * series).im
}

/// `r^{n+1} (I(r) - I_n(r))` with `n + 1 = known.len()`.
fn reduced(i: f64, known: &[C64], r: f64, kappa: f64) -> f64 {
    r.powi(known.len() as i32) * (i - weighted_partial(known, r, kappa))
}

fn lookup(samples: &ImSamples, s: f64) -> Result<f64> {
    let idx = samples.abscissas.partition_point(|&a| a < s * (1.0 - ABSCISSA_MATCH));
    match samples.abscissas.get(idx) {
        Some(&a) if (a - s).abs() <= ABSCISSA_MATCH * s => Ok(samples.values[idx]),
        _ => Err(Error::MissingSample(format!("no sample at abscissa {s}"))),
    }
}

/// Radius `|x(s) - frame|` of the sample at abscissa `s`.
fn radius_of(samples: &ImSamples, s: f64) -> f64 {
    (samples.ray.point(s) - samples.frame).norm()
}

/// Estimate of `f_{n+1}` at angle of `samples.ray` from `known = f_0..f_n`,
/// using the samples at abscissas `r` and `r + tau`.
pub fn extract_next_coeff(samples: &ImSamples, known: &[C64], r: f64, tau: f64) -> Result<C64> {
    let i_x = lookup(samples, r)?;
    let i_y = lookup(samples, r + tau)?;
    let rx = radius_of(samples, r);
    let ry = radius_of(samples, r + tau);
    two_point_solve(
        reduced(i_x, known, rx, samples.kappa),
        reduced(i_y, known, ry, samples.kappa),
        rx,
        ry,
        samples.kappa,
    )
}

/// Depth-`depth` Neville extrapolant in `1/r` of the last `depth + 1` estimates.
pub fn extract_sequence_extrapolated(estimates: &[(f64, C64)], depth: usize) -> C64 {
    let n = estimates.len();
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    let depth = depth.min(n - 1);
    let (r, v): (Vec<f64>, Vec<C64>) = estimates[n - 1 - depth..].iter().copied().unzip();
    linalg::extrapolate_window(&r, &v, 0, depth)
}

/// Diagnostics of an extraction run.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExtractionReport {
    /// Extrapolation error estimates, per order, at `phi` and `phi + pi`.
    pub uncertainty_plus: Vec<f64>,
    pub uncertainty_minus: Vec<f64>,
    /// Raw (unextrapolated) `f_0` estimates per schedule radius, at `phi`.
    pub raw_f0_plus: Vec<C64>,
    pub warnings: Vec<String>,
}

/// Result of one side's recursive extraction.
struct SideResult {
    coeffs: Vec<C64>,
    uncertainty: Vec<f64>,
    raw_f0: Vec<C64>,
    warnings: Vec<String>,
}

fn extract_side(samples: &ImSamples, n: usize, schedule: &ExtractionSchedule) -> Result<SideResult> {
    let radii = &schedule.radii;
    let mut pairs = Vec::with_capacity(radii.len());
    for &r in radii {
        let ry = r + schedule.tau;
        pairs.push((
            lookup(samples, r)?,
            lookup(samples, ry)?,
            radius_of(samples, r),
            radius_of(samples, ry),
        ));
    }
    let kappa = samples.kappa;
    let mut known: Vec<C64> = Vec::with_capacity(n + 1);
    let mut uncertainty = Vec::with_capacity(n + 1);
    let mut warnings = Vec::new();
    let mut raw_f0 = Vec::new();
    for order in 0..=n {
        if order > 0 {
            let amp = known
                .iter()
                .zip(&uncertainty)
                .enumerate()
                .map(|(j, (_, &u))| u * radii[0].powi((order - j) as i32))
                .fold(0.0, f64::max);
            if amp > 0.1 {
                warnings.push(format!(
                    "order {order}: lower-order uncertainty amplified to {amp:.2e} at r = {:.4e}",
                    radii[0]
                ));
            }
        }
        let mut est = Vec::with_capacity(radii.len());
        for &(ix, iy, rx, ry) in &pairs {
            est.push(two_point_solve(
                reduced(ix, &known, rx, kappa),
                reduced(iy, &known, ry, kappa),
                rx,
                ry,
                kappa,
            )?);
        }
        if order == 0 {
            raw_f0 = est.clone();
        }
        let rs: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        let depth = schedule.extrapolation_depth.max(n - order + 1);
        // lower-order errors re-enter order `order` multiplied by r^(order - j)
        let propagated = |start: usize, d: usize| {
            let r_top = rs[start + d];
            uncertainty
                .iter()
                .enumerate()
                .map(|(j, &u): (usize, &f64)| u * r_top.powi((order - j) as i32))
                .sum::<f64>()
        };
        let Extrapolated { value, error, .. } =
            linalg::extrapolate_adaptive_with(&rs, &est, depth, propagated);
        known.push(value);
        uncertainty.push(error);
    }
    Ok(SideResult {
        coeffs: known,
        uncertainty,
        raw_f0,
        warnings,
    })
}

/// Checks that the two rays lie on one line with opposite headings.
fn check_rays(plus: &RayGeometry, minus: &RayGeometry) -> Result<()> {
    if plus.orientation != Orientation::Plus || minus.orientation != Orientation::Minus {
        return Err(Error::Geometry("rays must be oriented + and - respectively".into()));
    }
    if (plus.direction - minus.direction).norm() > 1e-12 {
        return Err(Error::Geometry("rays must share the direction theta".into()));
    }
    let off = crate::geometry::line_distance(plus.origin, plus.direction, minus.origin);
    if off > 1e-9 * (1.0 + (plus.origin - minus.origin).norm()) {
        return Err(Error::Geometry(format!("rays are not collinear (offset {off:.3e})")));
    }
    Ok(())
}

/// Default shift: the common ray origin when both rays start at one point,
/// otherwise the foot of the perpendicular from the weighting centre.
pub fn default_shift(samples_plus: &ImSamples, samples_minus: &ImSamples) -> Vec2 {
    let ray = &samples_plus.ray;
    if (ray.origin - samples_minus.ray.origin).norm() <= 1e-12 * (1.0 + ray.origin.norm()) {
        return ray.origin;
    }
    let t = (samples_plus.frame - ray.origin).dot(ray.direction);
    ray.origin + t * ray.direction
}

/// Re-expresses `samples` on a ray starting at `q` (on the same line), weighted about `q`.
pub fn rebase(samples: &ImSamples, q: Vec2) -> ImSamples {
    let re = samples.reframe(q);
    let heading = samples.ray.heading();
    let mut abscissas = Vec::with_capacity(re.len());
    let mut values = Vec::with_capacity(re.len());
    for (x, &v) in re.points().zip(&re.values) {
        let s = (x - q).dot(heading);
        if s > 0.0 {
            abscissas.push(s);
            values.push(v);
        }
    }
    ImSamples {
        ray: RayGeometry {
            origin: q,
            ..samples.ray
        },
        abscissas,
        values,
        ..re
    }
}

/// Recovers `f_0..f_n` at both angles in the frame centred at the default shift.
pub fn extract_all(
    samples_plus: &ImSamples,
    samples_minus: &ImSamples,
    n: usize,
    schedule: &ExtractionSchedule,
) -> Result<FarFieldCoeffs> {
    let q = default_shift(samples_plus, samples_minus);
    Ok(extract_all_at(samples_plus, samples_minus, n, schedule, q)?.0)
}

/// Recovers `f_0..f_n` at both angles in the frame centred at `q` (on the line).
pub fn extract_all_at(
    samples_plus: &ImSamples,
    samples_minus: &ImSamples,
    n: usize,
    schedule: &ExtractionSchedule,
    q: Vec2,
) -> Result<(FarFieldCoeffs, ExtractionReport)> {
    check_rays(&samples_plus.ray, &samples_minus.ray)?;
    let theta = samples_plus.ray.direction;
    if crate::geometry::line_distance(samples_plus.ray.origin, theta, q) > 1e-9 * (1.0 + q.norm()) {
        return Err(Error::Geometry("shift q must lie on the measurement line".into()));
    }
    if (samples_plus.kappa - samples_minus.kappa).abs() > 1e-12 * samples_plus.kappa {
        return Err(Error::Validation("sample sets have different kappa".into()));
    }
    if n > MAX_ORDER {
        return Err(Error::Validation(format!("order {n} exceeds supported maximum {MAX_ORDER}")));
    }
    schedule.validate(samples_plus.kappa)?;
    let plus = rebase(samples_plus, q);
    let minus = rebase(samples_minus, q);
    let (p, m) = rayon::join(
        || extract_side(&plus, n, schedule),
        || extract_side(&minus, n, schedule),
    );
    let (p, m) = (p?, m?);
    let mut warnings = p.warnings;
    warnings.extend(m.warnings.into_iter().map(|w| format!("phi + pi, {w}")));
    let coeffs = FarFieldCoeffs {
        kappa: samples_plus.kappa,
        phi: theta.angle(),
        origin_shift: q,
        f_plus: p.coeffs,
        f_minus: m.coeffs,
    };
    let report = ExtractionReport {
        uncertainty_plus: p.uncertainty,
        uncertainty_minus: m.uncertainty,
        raw_f0_plus: p.raw_f0,
        warnings,
    };
    Ok((coeffs, report))
}

/// Least-squares fit of `f_0..f_model` to every sample, reporting `f_0..f_n`.
pub fn extract_least_squares_model(samples: &ImSamples, n: usize, model: usize) -> Result<Vec<C64>> {
    let model = model.max(n);
    let unknowns = 2 * (model + 1);
    if samples.len() < 4 * (model + 1) {
        return Err(Error::Validation(format!(
            "{} samples too few for {} unknowns",
            samples.len(),
            unknowns
        )));
    }
    let kappa = samples.kappa;
    let amp = (2.0 / (PI * kappa)).sqrt();
    let radii: Vec<f64> = samples.abscissas.iter().map(|&s| radius_of(samples, s)).collect();
    let span = radii.last().unwrap() - radii[0];
    if span * kappa < 2.0 * PI {
        return Err(Error::Validation("samples must span at least one wavelength".into()));
    }
    let rows = samples.len();
    // column j scaled by r_min^j for equilibration; undone below
    let r0 = radii[0];
    let a = DMatrix::from_fn(rows, unknowns, |i, col| {
        let r = radii[i];
        let j = col / 2;
        let alpha = kappa * r - FRAC_PI_4;
        let w = amp * (r0 / r).powi(j as i32);
        if col % 2 == 0 {
            w * alpha.sin()
        } else {
            w * alpha.cos()
        }
    });
    let b = DVector::from_column_slice(&samples.values);
    let (x, cond) = linalg::least_squares(a, &b);
    if cond > 1e12 {
        return Err(Error::RankDeficient { cond });
    }
    Ok((0..=n)
        .map(|j| C64::new(x[2 * j], x[2 * j + 1]) * r0.powi(j as i32))
        .collect())
}

/// Least-squares fit with four extra model orders to absorb truncation bias.
pub fn extract_least_squares(samples: &ImSamples, n: usize) -> Result<Vec<C64>> {
    extract_least_squares_model(samples, n, n + 4)
}
