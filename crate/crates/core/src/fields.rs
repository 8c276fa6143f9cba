//! Exact synthetic radiation fields, their far-field coefficients, and
//! weighted `Im(psi)` samples along rays.

use crate::specfun::{self, hankel_asym_coeffs};
use crate::{Error, Result, Vec2, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Translation series are cut once `|J_k| < GRAF_TOL` past the turning point.
pub const GRAF_TOL: f64 = 1e-16;
/// Largest translation order before giving up.
pub const GRAF_MAX_ORDER: usize = 200;

/// One elementary outgoing solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    /// `c H_m(kappa r) e^{i m phi}` about the origin.
    Multipole { m: i32, c: C64 },
    /// `c (i/4) H_0(kappa |x - y0|)`.
    PointSource { y0: Vec2, c: C64 },
}

#[derive(Deserialize)]
struct RawField {
    kappa: f64,
    terms: Vec<Term>,
    #[serde(default)]
    source_radius: Option<f64>,
}

/// Superposition of multipoles and point sources radiating at wavenumber `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField")]
pub struct RadiationField {
    pub kappa: f64,
    pub terms: Vec<Term>,
    pub source_radius: f64,
}

impl TryFrom<RawField> for RadiationField {
    type Error = Error;

    fn try_from(raw: RawField) -> Result<Self> {
        let field = RadiationField::new(raw.kappa, raw.terms)?;
        match raw.source_radius {
            None => Ok(field),
            Some(r) => field.with_source_radius(r),
        }
    }
}

impl RadiationField {
    /// Builds a field; the source radius defaults to the farthest point source.
    pub fn new(kappa: f64, terms: Vec<Term>) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Validation(format!("kappa must be positive, got {kappa}")));
        }
        let mut rho: f64 = 0.0;
        for t in &terms {
            match *t {
                Term::Multipole { m, c } => {
                    if m < 0 {
                        return Err(Error::Validation(format!("multipole order {m} < 0")));
                    }
                    if !(c.re.is_finite() && c.im.is_finite()) {
                        return Err(Error::Validation("non-finite coefficient".into()));
                    }
                }
                Term::PointSource { y0, c } => {
                    if !y0.is_finite() || !(c.re.is_finite() && c.im.is_finite()) {
                        return Err(Error::Validation("non-finite point source".into()));
                    }
                    rho = rho.max(y0.norm());
                }
            }
        }
        Ok(RadiationField {
            kappa,
            terms,
            source_radius: rho,
        })
    }

    /// Overrides the source radius; it may only enlarge the default one.
    pub fn with_source_radius(mut self, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= self.source_radius) {
            return Err(Error::Validation(format!(
                "source_radius {rho} smaller than farthest source {}",
                self.source_radius
            )));
        }
        self.source_radius = rho;
        Ok(self)
    }

    pub fn zero(kappa: f64) -> Result<Self> {
        RadiationField::new(kappa, Vec::new())
    }

    /// `psi(x)`.
    pub fn eval(&self, x: Vec2) -> Result<C64> {
        let k = self.kappa;
        let r = x.norm();
        let mut sum = C64::new(0.0, 0.0);
        for t in &self.terms {
            match *t {
                Term::Multipole { m, c } => {
                    if r == 0.0 {
                        return Err(Error::Singularity("multipole evaluated at the origin".into()));
                    }
                    let phase = C64::from_polar(1.0, m as f64 * x.angle());
                    sum += c * specfun::hn(m as usize, k * r) * phase;
                }
                Term::PointSource { y0, c } => {
                    let d = (x - y0).norm();
                    if d == 0.0 {
                        return Err(Error::Singularity(format!(
                            "point source at ({}, {})",
                            y0.x, y0.y
                        )));
                    }
                    sum += c * C64::new(0.0, 0.25) * specfun::hn(0, k * d);
                }
            }
        }
        Ok(sum)
    }

    /// Multipole series of the field about `center`, valid outside the
    /// smallest disk around `center` containing every source. Translation
    /// series are cut on the size of `J_k` alone, which is exact for far-field
    /// coefficients but loses accuracy when evaluated close to that disk.
    pub fn expansion_about(&self, center: Vec2) -> Result<MultipoleExpansion> {
        let mut exp = MultipoleExpansion::zero(center, self.kappa);
        for t in &self.terms {
            match *t {
                Term::Multipole { m, c } => exp.add_translated(m, c, Vec2::ZERO)?,
                Term::PointSource { y0, c } => {
                    exp.add_translated(0, c * C64::new(0.0, 0.25), y0)?
                }
            }
        }
        exp.trim();
        Ok(exp)
    }

    /// Far-field coefficients `f_0..f_n` at angle `phi` in the frame centred at `q`.
    pub fn farfield_oracle_at(&self, q: Vec2, phi: f64, n: usize) -> Result<Vec<C64>> {
        Ok(self.expansion_about(q)?.farfield(phi, n))
    }

    /// Radius of the smallest disk about `center` containing all sources.
    pub fn source_radius_about(&self, center: Vec2) -> f64 {
        let mut rho: f64 = 0.0;
        for t in &self.terms {
            let p = match *t {
                Term::Multipole { .. } => Vec2::ZERO,
                Term::PointSource { y0, .. } => y0,
            };
            rho = rho.max((p - center).norm());
        }
        if center == Vec2::ZERO {
            rho.max(self.source_radius)
        } else {
            rho
        }
    }
}

/// Far-field coefficients `f_0..f_n` at angle `phi` about the origin.
pub fn farfield_oracle(field: &RadiationField, phi: f64, n: usize) -> Result<Vec<C64>> {
    field.farfield_oracle_at(Vec2::ZERO, phi, n)
}

/// `psi(x)` for `field`.
pub fn eval_field(field: &RadiationField, x: Vec2) -> Result<C64> {
    field.eval(x)
}

/// `sum_m c_m H_m(kappa |x - center|) e^{i m arg(x - center)}` over integer `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleExpansion {
    pub center: Vec2,
    pub kappa: f64,
    /// Order of `coeffs[0]`.
    pub m_min: i32,
    pub coeffs: Vec<C64>,
}

impl MultipoleExpansion {
    pub fn zero(center: Vec2, kappa: f64) -> Self {
        MultipoleExpansion {
            center,
            kappa,
            m_min: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn m_max(&self) -> i32 {
        self.m_min + self.coeffs.len() as i32 - 1
    }

    fn coeff_mut(&mut self, m: i32) -> &mut C64 {
        let zero = C64::new(0.0, 0.0);
        if self.coeffs.is_empty() {
            self.m_min = m;
            self.coeffs.push(zero);
        }
        if m < self.m_min {
            let extra = (self.m_min - m) as usize;
            self.coeffs.splice(0..0, std::iter::repeat_n(zero, extra));
            self.m_min = m;
        }
        let idx = (m - self.m_min) as usize;
        if idx >= self.coeffs.len() {
            self.coeffs.resize(idx + 1, zero);
        }
        &mut self.coeffs[idx]
    }

    /// Iterator over `(m, c_m)`.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.m_min + i as i32, c))
    }

    /// Adds `c H_m(kappa|x - p|) e^{i m arg(x - p)}`, re-expanded about `self.center`.
    pub fn add_translated(&mut self, m: i32, c: C64, p: Vec2) -> Result<()> {
        let y = p - self.center;
        let ky = self.kappa * y.norm();
        if ky == 0.0 {
            *self.coeff_mut(m) += c;
            return Ok(());
        }
        let kmax = graf_order(ky)?;
        let j = specfun::jn_all(kmax, ky);
        let arg = y.angle();
        for k in -(kmax as i32)..=(kmax as i32) {
            let ka = k.unsigned_abs() as usize;
            let jk = if k < 0 && ka % 2 == 1 { -j[ka] } else { j[ka] };
            let w = c * jk * C64::from_polar(1.0, -(k as f64) * arg);
            *self.coeff_mut(m + k) += w;
        }
        Ok(())
    }

    /// Drops negligible outer coefficients.
    fn trim(&mut self) {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = peak * 1e-300;
        while self.coeffs.last().is_some_and(|c| c.norm() <= cut) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.norm() <= cut).count();
        self.coeffs.drain(..lead);
        self.m_min += lead as i32;
        if self.coeffs.is_empty() {
            self.m_min = 0;
        }
    }

    pub fn eval(&self, x: Vec2) -> Result<C64> {
        if self.coeffs.is_empty() {
            return Ok(C64::new(0.0, 0.0));
        }
        let d = x - self.center;
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::Singularity("expansion evaluated at its centre".into()));
        }
        let top = self.m_min.unsigned_abs().max(self.m_max().unsigned_abs()) as usize;
        let h = specfun::hn_all(top, self.kappa * r);
        let phi = d.angle();
        Ok(self
            .terms()
            .map(|(m, c)| c * signed_hankel(&h, m) * C64::from_polar(1.0, m as f64 * phi))
            .sum())
    }

    /// Coefficients `f_0..f_n` of the far-field expansion at angle `phi`.
    pub fn farfield(&self, phi: f64, n: usize) -> Vec<C64> {
        let mut f = vec![C64::new(0.0, 0.0); n + 1];
        for (m, c) in self.terms() {
            let a = hankel_asym_coeffs(m.unsigned_abs(), n);
            let w = c * C64::from_polar(1.0, m as f64 * (phi - PI / 2.0));
            let mut kp = 1.0;
            for (fj, &aj) in f.iter_mut().zip(&a.coeffs) {
                *fj += w * aj * kp;
                kp /= self.kappa;
            }
        }
        f
    }
}

/// `H_m` for signed `m` from a table of `H_0..H_|m|`.
pub(crate) fn signed_hankel(h: &[C64], m: i32) -> C64 {
    let a = m.unsigned_abs() as usize;
    if m < 0 && a % 2 == 1 {
        -h[a]
    } else {
        h[a]
    }
}

/// Number of Graf terms needed for a translation of length `ky` (in units of 1/kappa).
fn graf_order(ky: f64) -> Result<usize> {
    let start = ky.ceil() as usize + 1;
    if start > GRAF_MAX_ORDER {
        return Err(Error::Truncation {
            max_order: GRAF_MAX_ORDER,
        });
    }
    let j = specfun::jn_all(GRAF_MAX_ORDER + 1, ky);
    for (k, v) in j.iter().enumerate().skip(start) {
        if v.abs() < GRAF_TOL && j[k - 1].abs() < GRAF_TOL.sqrt() {
            return Ok(k);
        }
    }
    Err(Error::Truncation {
        max_order: GRAF_MAX_ORDER,
    })
}

/// Which way a ray runs from its origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Plus => Orientation::Minus,
            Orientation::Minus => Orientation::Plus,
        }
    }
}

/// Half-line `origin ± s direction`, `s > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayGeometry {
    pub origin: Vec2,
    pub direction: Vec2,
    pub orientation: Orientation,
}

impl RayGeometry {
    pub fn new(origin: Vec2, direction: Vec2, orientation: Orientation) -> Result<Self> {
        let n = direction.norm();
        if !(origin.is_finite() && n.is_finite() && n > 0.0) {
            return Err(Error::Geometry("degenerate ray".into()));
        }
        Ok(RayGeometry {
            origin,
            direction: direction.normalized(),
            orientation,
        })
    }

    /// Unit vector along which `s` increases.
    pub fn heading(&self) -> Vec2 {
        self.orientation.sign() * self.direction
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.origin + s * self.heading()
    }

    /// Distance from `p` to the ray.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        crate::geometry::ray_distance(self.origin, self.heading(), p)
    }
}

/// `I(s) = sqrt|x(s) - frame| Im psi(x(s))` along a ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImSamples {
    pub ray: RayGeometry,
    pub abscissas: Vec<f64>,
    pub values: Vec<f64>,
    pub kappa: f64,
    pub noise_sigma: f64,
    /// Centre of the `sqrt|x|` weight.
    #[serde(default)]
    pub frame: Vec2,
}

impl ImSamples {
    pub fn new(
        ray: RayGeometry,
        abscissas: Vec<f64>,
        values: Vec<f64>,
        kappa: f64,
        noise_sigma: f64,
    ) -> Result<Self> {
        let s = ImSamples {
            ray,
            abscissas,
            values,
            kappa,
            noise_sigma,
            frame: Vec2::ZERO,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.abscissas.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "{} abscissas but {} values",
                self.abscissas.len(),
                self.values.len()
            )));
        }
        if self.abscissas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Validation("abscissas must be positive".into()));
        }
        if self.abscissas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("abscissas must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite sample value".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Validation("kappa must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.abscissas.iter().map(|&s| self.ray.point(s))
    }

    /// `Im psi` at every sample, undoing the weight.
    pub fn im_psi(&self) -> Vec<f64> {
        self.points()
            .zip(&self.values)
            .map(|(x, &v)| v / (x - self.frame).norm().sqrt())
            .collect()
    }

    /// Same data weighted about `q` instead of `self.frame`.
    pub fn reframe(&self, q: Vec2) -> ImSamples {
        let values = self
            .points()
            .zip(&self.values)
            .map(|(x, &v)| v / (x - self.frame).norm().sqrt() * (x - q).norm().sqrt())
            .collect();
        ImSamples {
            values,
            frame: q,
            ..self.clone()
        }
    }

    /// Keeps the samples with `lo <= s <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> ImSamples {
        let (abscissas, values) = self
            .abscissas
            .iter()
            .zip(&self.values)
            .filter(|(&s, _)| s >= lo && s <= hi)
            .map(|(&s, &v)| (s, v))
            .unzip();
        ImSamples {
            abscissas,
            values,
            ..self.clone()
        }
    }
}

/// Weighted imaginary part of `field` at `abscissas` along `ray`, plus seeded
/// gaussian noise of standard deviation `noise_sigma`.
pub fn sample_im_on_ray(
    field: &RadiationField,
    ray: &RayGeometry,
    abscissas: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<ImSamples> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Validation(format!("noise sigma {noise_sigma} < 0")));
    }
    let gap = ray.distance_to(Vec2::ZERO);
    let inside = abscissas.iter().any(|&s| ray.point(s).norm() <= field.source_radius);
    if gap < field.source_radius || inside {
        return Err(Error::Geometry(format!(
            "ray passes within {gap:.4} of the origin, inside the source disk of radius {:.4}",
            field.source_radius
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Validation(e.to_string()))?;
    let mut values = Vec::with_capacity(abscissas.len());
    for &s in abscissas {
        let x = ray.point(s);
        let mut v = x.norm().sqrt() * field.eval(x)?.im;
        if noise_sigma > 0.0 {
            v += normal.sample(&mut rng);
        }
        values.push(v);
    }
    ImSamples::new(*ray, abscissas.to_vec(), values, field.kappa, noise_sigma)
}

/// Nodal circle of the fundamental solution and the field sizes on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub kappa: f64,
    pub j: usize,
    pub radius: f64,
    pub max_abs_im: f64,
    pub max_abs_psi: f64,
}

/// `psi = (i/4) H_0(kappa|x|)` on the circle of radius `c_j / kappa`.
pub fn counterexample_report(kappa: f64, j: usize, n_angles: usize) -> Result<CounterexampleReport> {
    if j < 1 {
        return Err(Error::Validation("root index j must be at least 1".into()));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Validation(format!("kappa must be positive, got {kappa}")));
    }
    if n_angles == 0 {
        return Err(Error::Validation("n_angles must be positive".into()));
    }
    let c = specfun::j0_roots(j)?[j - 1];
    let radius = c / kappa;
    let field = RadiationField::new(
        kappa,
        vec![Term::PointSource {
            y0: Vec2::ZERO,
            c: C64::new(1.0, 0.0),
        }],
    )?;
    let mut max_abs_im: f64 = 0.0;
    let mut max_abs_psi: f64 = 0.0;
    for i in 0..n_angles {
        let phi = 2.0 * PI * i as f64 / n_angles as f64;
        let psi = field.eval(Vec2::from_polar(radius, phi))?;
        max_abs_im = max_abs_im.max(psi.im.abs());
        max_abs_psi = max_abs_psi.max(psi.norm());
    }
    Ok(CounterexampleReport {
        kappa,
        j,
        radius,
        max_abs_im,
        max_abs_psi,
    })
}
