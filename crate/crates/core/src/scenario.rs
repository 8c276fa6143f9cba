//! JSON scenarios and the batch runner behind the `imrecon` binary.
//!
//! A run writes `results.csv`, `report.json` and, where the command produces
//! coefficients, `coefficients.json` into the output directory. Nothing is
//! written when the scenario fails validation.

use crate::farfield::{self, ExtractionSchedule};
use crate::fields::{self, ImSamples, Orientation, RadiationField, RayGeometry, Term};
use crate::karp;
use crate::linalg::loglog_slope;
use crate::propagate::{self, HalfPlaneSpec, LineTrace, PipelineOptions, SourceDisk};
use crate::scatter::{self, LsSolver, PotentialGrid};
use crate::{Error, LineSpec, Result, Vec2, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Extract,
    Karp,
    Propagate,
    Counterexample,
    Scatter,
    Gkl,
    Pipeline,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Synth,
        Command::Extract,
        Command::Karp,
        Command::Propagate,
        Command::Counterexample,
        Command::Scatter,
        Command::Gkl,
        Command::Pipeline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Extract => "extract",
            Command::Karp => "karp",
            Command::Propagate => "propagate",
            Command::Counterexample => "counterexample",
            Command::Scatter => "scatter",
            Command::Gkl => "gkl",
            Command::Pipeline => "pipeline",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.as_str()).collect();
            Error::Validation(format!("unknown command {s:?}, expected one of {}", names.join(", ")))
        })
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub s0: f64,
    pub growth: f64,
    pub count: usize,
    pub depth: usize,
    #[serde(default)]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSpec {
    pub half_length_wavelengths: f64,
    pub panels_per_wavelength: f64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            half_length_wavelengths: 200.0,
            panels_per_wavelength: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSpec {
    pub j: usize,
    pub n_angles: usize,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        CounterexampleSpec { j: 1, n_angles: 720 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSpec {
    /// Source point `y` of `R+(., y)`.
    pub source: Vec2,
    /// Direction angle of the incident wave vector.
    #[serde(default)]
    pub incident_angle: f64,
    #[serde(default = "default_directions")]
    pub n_directions: usize,
}

fn default_directions() -> usize {
    16
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kappa: f64,
    #[serde(default)]
    pub field: Option<RadiationField>,
    #[serde(default)]
    pub potential: Option<PotentialGrid>,
    #[serde(default)]
    pub line: Option<LineSpec>,
    /// Unit normal of the line pointing out of the target half-plane.
    #[serde(default)]
    pub normal: Option<Vec2>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub targets: Vec<Vec2>,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub trace: TraceSpec,
    #[serde(default)]
    pub counterexample: CounterexampleSpec,
    #[serde(default)]
    pub scatter: Option<ScatterSpec>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let mut sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&mut self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name must be non-empty and contain no path separators"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid(format!("kappa: must be positive, got {}", self.kappa)));
        }
        if self.field.is_some() && self.potential.is_some() {
            return Err(invalid("field and potential are mutually exclusive"));
        }
        let same = |k: f64| (k - self.kappa).abs() <= 1e-12 * self.kappa;
        if let Some(f) = &self.field {
            if !same(f.kappa) {
                return Err(invalid(format!("field.kappa {} differs from kappa {}", f.kappa, self.kappa)));
            }
        }
        if let Some(g) = &self.potential {
            if !same(g.kappa) {
                return Err(invalid(format!("potential.kappa {} differs from kappa {}", g.kappa, self.kappa)));
            }
        }
        if let Some(l) = self.line {
            let line = LineSpec::new(l.point, l.direction).map_err(|e| invalid(format!("line: {e}")))?;
            if let Some(d) = self.source_disk() {
                if line.distance(d.center) <= d.radius {
                    return Err(Error::Geometry(format!(
                        "line passes within {:.4} of the sources (radius {:.4})",
                        line.distance(d.center),
                        d.radius
                    )));
                }
            }
            if let Some(nu) = self.normal {
                HalfPlaneSpec::new(line, nu).map_err(|e| invalid(format!("normal: {e}")))?;
            }
            self.line = Some(line);
        } else if self.normal.is_some() {
            return Err(invalid("normal given without line"));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(invalid("targets: non-finite point"));
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(invalid("noise.sigma must be finite and >= 0"));
        }
        if let Some(s) = self.schedule {
            self.build_schedule(Some(s))?;
        }
        if let Some([a, b]) = self.interval {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(invalid("interval must be [s_min, s_max] with s_min < s_max"));
            }
        }
        let t = self.trace;
        if !(t.half_length_wavelengths > 0.0 && t.panels_per_wavelength >= 1.0) {
            return Err(invalid("trace: half_length_wavelengths > 0 and panels_per_wavelength >= 1 required"));
        }
        Ok(())
    }

    fn source_disk(&self) -> Option<SourceDisk> {
        if let Some(f) = &self.field {
            return Some(SourceDisk {
                center: Vec2::ZERO,
                radius: f.source_radius,
            });
        }
        self.potential.as_ref().map(PotentialGrid::source_disk)
    }

    fn build_schedule(&self, spec: Option<ScheduleSpec>) -> Result<ExtractionSchedule> {
        match spec {
            None => ExtractionSchedule::default_for(self.kappa),
            Some(s) => ExtractionSchedule::geometric(self.kappa, s.s0, s.growth, s.count, s.depth, s.tau),
        }
        .map_err(|e| invalid(format!("schedule: {e}")))
    }

    fn schedule(&self) -> Result<ExtractionSchedule> {
        self.build_schedule(self.schedule)
    }

    fn need_field(&self) -> Result<&RadiationField> {
        self.field.as_ref().ok_or_else(|| invalid("field: required by this command"))
    }

    fn need_potential(&self) -> Result<&PotentialGrid> {
        self.potential.as_ref().ok_or_else(|| invalid("potential: required by this command"))
    }

    fn need_line(&self) -> Result<LineSpec> {
        self.line.ok_or_else(|| invalid("line: required by this command"))
    }

    fn need_targets(&self) -> Result<&[Vec2]> {
        if self.targets.is_empty() {
            return Err(invalid("targets: at least one point required"));
        }
        Ok(&self.targets)
    }

    fn half_plane(&self, line: LineSpec) -> Result<HalfPlaneSpec> {
        match self.normal {
            Some(nu) => HalfPlaneSpec::new(line, nu),
            None => HalfPlaneSpec::away_from(line, self.source_disk().map_or(Vec2::ZERO, |d| d.center)),
        }
    }

    /// Rays of the line starting at the foot of the perpendicular from the
    /// source centre.
    fn rays(&self, line: LineSpec) -> Result<(RayGeometry, RayGeometry)> {
        let c = self.source_disk().map_or(Vec2::ZERO, |d| d.center);
        let q = line.at(line.abscissa(c));
        Ok((
            RayGeometry::new(q, line.direction, Orientation::Plus)?,
            RayGeometry::new(q, line.direction, Orientation::Minus)?,
        ))
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > farfield::MAX_ORDER {
            return Err(invalid(format!("order: {order} exceeds {}", farfield::MAX_ORDER)));
        }
        Ok(())
    }

    /// Command-specific requirements, checked before any computation.
    pub fn check_command(&self, command: Command, order: usize) -> Result<()> {
        match command {
            Command::Counterexample => {
                let c = self.counterexample;
                if c.j == 0 || c.n_angles == 0 {
                    return Err(invalid("counterexample: j and n_angles must be positive"));
                }
                if self.potential.is_some() {
                    return Err(invalid("counterexample: takes no potential"));
                }
            }
            Command::Synth | Command::Extract | Command::Karp => {
                self.need_field()?;
                self.need_line()?;
                self.check_order(order)?;
            }
            Command::Propagate | Command::Pipeline => {
                self.need_field()?;
                let spec = self.half_plane(self.need_line()?)?;
                for t in self.need_targets()? {
                    if !spec.contains(*t) {
                        return Err(Error::Geometry(format!("target {:?} is not in the half-plane", [t.x, t.y])));
                    }
                }
                self.check_order(order)?;
            }
            Command::Scatter => {
                let g = self.need_potential()?;
                self.need_targets()?;
                let s = self.scatter.ok_or_else(|| invalid("scatter: required by this command"))?;
                if s.n_directions == 0 {
                    return Err(invalid("scatter.n_directions must be positive"));
                }
                for p in self.targets.iter().chain([&s.source]) {
                    if g.contains(*p) {
                        return Err(Error::Geometry(format!("point {:?} lies in the potential box", [p.x, p.y])));
                    }
                }
            }
            Command::Gkl => {
                self.need_potential()?;
                self.need_line()?;
                if self.interval.is_none() {
                    return Err(invalid("interval: required by this command"));
                }
                if self.points.is_some_and(|p| p < 2) {
                    return Err(invalid("points: at least two required"));
                }
                self.check_order(order)?;
            }
        }
        Ok(())
    }
}

/// `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub command: String,
    pub metrics: BTreeMap<String, f64>,
    pub status: String,
}

/// Everything a run writes, held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: Report,
    pub results_csv: String,
    pub coefficients: Option<serde_json::Value>,
    /// Further CSV tables by file name.
    pub extra: Vec<(String, String)>,
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Csv {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, label: Option<&str>, values: &[f64]) {
        let mut first = true;
        if let Some(l) = label {
            self.0.push_str(l);
            first = false;
        }
        for v in values {
            if !first {
                self.0.push(',');
            }
            first = false;
            let _ = write!(self.0, "{v:e}");
        }
        self.0.push('\n');
    }
}

fn rel_err(got: C64, want: C64) -> f64 {
    let d = (got - want).norm();
    if want.norm() > 0.0 {
        d / want.norm()
    } else {
        d
    }
}

#[derive(Default)]
struct Metrics(BTreeMap<String, f64>);

impl Metrics {
    fn set(&mut self, k: impl Into<String>, v: f64) {
        self.0.insert(k.into(), v);
    }
}

fn sample_pair(sc: &Scenario, abscissas: &[f64]) -> Result<(ImSamples, ImSamples)> {
    let field = sc.need_field()?;
    let (p, m) = sc.rays(sc.need_line()?)?;
    let seed = sc.noise.seed;
    Ok((
        fields::sample_im_on_ray(field, &p, abscissas, sc.noise.sigma, seed)?,
        fields::sample_im_on_ray(field, &m, abscissas, sc.noise.sigma, seed.wrapping_add(1))?,
    ))
}

fn samples_csv(field: &RadiationField, sets: [&ImSamples; 2]) -> Result<(Csv, f64)> {
    let mut csv = Csv::new(&["side", "s", "x", "y", "re_psi", "im_psi", "i_weighted"]);
    let mut max_im: f64 = 0.0;
    for (label, set) in ["+", "-"].into_iter().zip(sets) {
        for (&s, &v) in set.abscissas.iter().zip(&set.values) {
            let x = set.ray.point(s);
            let psi = field.eval(x)?;
            max_im = max_im.max(psi.im.abs());
            csv.row(Some(label), &[s, x.x, x.y, psi.re, psi.im, v]);
        }
    }
    Ok((csv, max_im))
}

fn run_synth(sc: &Scenario) -> Result<Artifacts> {
    let sched = sc.schedule()?;
    let ab = propagate::pipeline_abscissas(&sched, sc.kappa, sched.radii[0], 10.0);
    let (p, m) = sample_pair(sc, &ab)?;
    let (csv, max_im) = samples_csv(sc.need_field()?, [&p, &m])?;
    let mut mt = Metrics::default();
    mt.set("n_samples", (p.len() + m.len()) as f64);
    mt.set("noise_sigma", sc.noise.sigma);
    mt.set("max_abs_im", max_im);
    Ok(artifacts(sc, Command::Synth, mt, csv, None))
}

struct Extraction {
    ff: farfield::FarFieldCoeffs,
    report: farfield::ExtractionReport,
    reference: [Vec<C64>; 2],
    sched: ExtractionSchedule,
}

fn extraction(sc: &Scenario, order: usize) -> Result<Extraction> {
    let sched = sc.schedule()?;
    let (p, m) = sample_pair(sc, &sched.abscissas())?;
    let q = p.ray.origin;
    let (ff, report) = farfield::extract_all_at(&p, &m, order, &sched, q).map_err(|e| e.at("farfield"))?;
    let field = sc.need_field()?;
    let reference = [
        field.farfield_oracle_at(q, ff.phi, order)?,
        field.farfield_oracle_at(q, ff.phi + PI, order)?,
    ];
    Ok(Extraction {
        ff,
        report,
        reference,
        sched,
    })
}

fn farfield_metrics(ex: &Extraction, mt: &mut Metrics) -> Csv {
    let mut csv = Csv::new(&["side", "j", "re_f", "im_f", "re_ref", "im_ref", "abs_err"]);
    let mut worst = vec![0.0_f64; ex.ff.f_plus.len()];
    for (label, (got, want)) in ["+", "-"]
        .into_iter()
        .zip([(&ex.ff.f_plus, &ex.reference[0]), (&ex.ff.f_minus, &ex.reference[1])])
    {
        for (j, (g, w)) in got.iter().zip(want.iter()).enumerate() {
            worst[j] = worst[j].max(rel_err(*g, *w));
            csv.row(Some(label), &[j as f64, g.re, g.im, w.re, w.im, (g - w).norm()]);
        }
    }
    for (j, e) in worst.iter().enumerate() {
        mt.set(format!("rel_error_f{j}"), *e);
    }
    mt.set("max_rel_error", worst.iter().copied().fold(0.0, f64::max));
    let f0 = ex.reference[0][0];
    let raw_err: Vec<f64> = ex.report.raw_f0_plus.iter().map(|r| (r - f0).norm()).collect();
    if raw_err.len() >= 2 && raw_err.iter().all(|e| *e > 0.0) {
        mt.set("f0_slope", loglog_slope(&ex.sched.radii[..raw_err.len()], &raw_err));
    }
    csv
}

fn run_extract(sc: &Scenario, order: usize) -> Result<Artifacts> {
    let ex = extraction(sc, order)?;
    let mut mt = Metrics::default();
    let csv = farfield_metrics(&ex, &mut mt);
    mt.set("warnings", ex.report.warnings.len() as f64);
    let coeffs = serde_json::json!({ "farfield": ex.ff, "extraction": ex.report });
    Ok(artifacts(sc, Command::Extract, mt, csv, Some(coeffs)))
}

fn run_karp(sc: &Scenario, order: usize) -> Result<Artifacts> {
    let ex = extraction(sc, order)?;
    let kc = karp::karp_from_farfield(&ex.ff).map_err(|e| e.at("karp"))?;
    let field = sc.need_field()?;
    let q = kc.origin_shift;
    let rho = q.norm() + field.source_radius;
    let theta = sc.need_line()?.direction;
    let mut csv = Csv::new(&["side", "r", "re_karp", "im_karp", "re_ref", "im_ref", "abs_err"]);
    let mut mt = Metrics::default();
    let mut worst_far: f64 = 0.0;
    for (label, side) in [("+", Orientation::Plus), ("-", Orientation::Minus)] {
        for k in 1..=12 {
            let r = rho.max(1.0 / sc.kappa) * 2f64.powi(k);
            let got = karp::eval_karp(&kc, r, side)?;
            let want = field.eval(q + (side.sign() * r) * theta)?;
            if r >= ex.sched.radii[0] {
                worst_far = worst_far.max(rel_err(got, want));
            }
            csv.row(Some(label), &[r, got.re, got.im, want.re, want.im, (got - want).norm()]);
        }
    }
    farfield_metrics(&ex, &mut mt);
    mt.set("max_rel_error", worst_far);
    let coeffs = serde_json::json!({ "karp": kc, "farfield": ex.ff });
    Ok(artifacts(sc, Command::Karp, mt, csv, Some(coeffs)))
}

fn target_csv(header_extra: &[&str]) -> Csv {
    let mut h = vec!["x", "y", "re_psi", "im_psi", "re_ref", "im_ref", "abs_err"];
    h.extend_from_slice(header_extra);
    Csv::new(&h)
}

fn run_propagate(sc: &Scenario) -> Result<Artifacts> {
    let field = sc.need_field()?.clone();
    let line = sc.need_line()?;
    let spec = sc.half_plane(line)?;
    let wl = 2.0 * PI / sc.kappa;
    let f = field.clone();
    let trace = LineTrace::function(move |s| f.eval(line.at(s)), sc.trace.half_length_wavelengths * wl)?
        .with_panels(sc.trace.panels_per_wavelength);
    let res = propagate::propagate_targets(&trace, &spec, &sc.targets, sc.kappa).map_err(|e| e.at("propagate"))?;
    let mut csv = target_csv(&["quad_error", "tail_error"]);
    let mut mt = Metrics::default();
    let (mut worst, mut worst_est): (f64, f64) = (0.0, 0.0);
    for (x, r) in sc.targets.iter().zip(&res) {
        let want = field.eval(*x)?;
        let v = r.value;
        worst = worst.max(rel_err(v, want));
        worst_est = worst_est.max((r.quad_error + r.tail_error) / want.norm());
        csv.row(None, &[x.x, x.y, v.re, v.im, want.re, want.im, (v - want).norm(), r.quad_error, r.tail_error]);
    }
    mt.set("max_rel_error", worst);
    mt.set("max_rel_estimate", worst_est);
    Ok(artifacts(sc, Command::Propagate, mt, csv, None))
}

fn run_counterexample(sc: &Scenario) -> Result<Artifacts> {
    let c = sc.counterexample;
    let rep = fields::counterexample_report(sc.kappa, c.j, c.n_angles)?;
    let field = RadiationField::new(
        sc.kappa,
        vec![Term::PointSource {
            y0: Vec2::ZERO,
            c: C64::new(1.0, 0.0),
        }],
    )?;
    let mut csv = Csv::new(&["angle", "x", "y", "re_psi", "im_psi"]);
    for i in 0..c.n_angles {
        let phi = 2.0 * PI * i as f64 / c.n_angles as f64;
        let x = Vec2::from_polar(rep.radius, phi);
        let psi = field.eval(x)?;
        csv.row(None, &[phi, x.x, x.y, psi.re, psi.im]);
    }
    let mut mt = Metrics::default();
    mt.set("j", c.j as f64);
    mt.set("radius", rep.radius);
    mt.set("max_abs_im", rep.max_abs_im);
    mt.set("max_abs_psi", rep.max_abs_psi);
    Ok(artifacts(sc, Command::Counterexample, mt, csv, None))
}

fn run_scatter(sc: &Scenario) -> Result<Artifacts> {
    let grid = sc.need_potential()?;
    let spec = sc.scatter.ok_or_else(|| invalid("scatter: required by this command"))?;
    let solver = LsSolver::new(grid).map_err(|e| e.at("lippmann-schwinger"))?;
    let y = spec.source;
    let r = solver.resolvent(y)?;
    let mut csv = Csv::new(&["x", "y", "re_r", "im_r", "re_born", "im_born"]);
    let mut mt = Metrics::default();
    let mut recip: f64 = 0.0;
    for x in &sc.targets {
        let v = r.eval(*x)?;
        let born = -propagate::outgoing_green(*x - y, sc.kappa)? + solver.born_first_order(*x, y);
        recip = recip.max(rel_err(solver.resolvent(*x)?.eval(y)?, v));
        csv.row(None, &[x.x, x.y, v.re, v.im, born.re, born.im]);
    }
    mt.set("cond_estimate", solver.cond_estimate());
    mt.set("reciprocity_defect", recip);
    if grid.n % 2 == 0 {
        mt.set("discretization_estimate", scatter::discretization_estimate(grid, sc.targets[0], y)?);
    }
    let k = Vec2::from_polar(sc.kappa, spec.incident_angle);
    let radii = scatter::far_radii(sc.kappa);
    let dirs: Vec<Vec2> = (0..spec.n_directions)
        .map(|j| Vec2::from_polar(1.0, 2.0 * PI * j as f64 / spec.n_directions as f64))
        .collect();
    let amps = scatter::scattering_amplitude_at(&solver, k, &dirs, &radii)?;
    let mut amp_csv = Csv::new(&["angle", "re_a", "im_a"]);
    for (d, a) in dirs.iter().zip(&amps) {
        amp_csv.row(None, &[d.angle(), a.re, a.im]);
    }
    // psi+(y, k) two ways: far field of R(., y) in direction -k, and the direct solve
    let est = scatter::psi_plus_from_resolvent(&solver, y, -1.0 * k.normalized(), &radii)?;
    let h: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let via_r = crate::linalg::neville_at_zero(&h, &est);
    let direct = solver.plane_wave(k)?.eval(y)?;
    mt.set("psi_plus_rel_error", rel_err(via_r, direct));
    let mut a = artifacts(sc, Command::Scatter, mt, csv, None);
    a.extra.push(("amplitude.csv".into(), amp_csv.0));
    Ok(a)
}

fn run_gkl(sc: &Scenario, order: usize) -> Result<Artifacts> {
    let grid = sc.need_potential()?;
    let line = sc.need_line()?;
    let interval = sc.interval.ok_or_else(|| invalid("interval: required by this command"))?;
    let rep = scatter::gkl_reduce(grid, &line, interval, sc.points.unwrap_or(9), order)?;
    let mut csv = Csv::new(&[
        "s_x",
        "s_y",
        "re_recovered",
        "im_recovered",
        "re_direct",
        "im_direct",
        "abs_err",
    ]);
    for (k, y) in rep.points.iter().enumerate() {
        for (i, x) in rep.points.iter().enumerate() {
            if i == k {
                continue;
            }
            let (u, w) = (rep.recovered[k][i], rep.direct[k][i]);
            csv.row(
                None,
                &[line.abscissa(*x), line.abscissa(*y), u.re, u.im, w.re, w.im, (u - w).norm()],
            );
        }
    }
    let mut mt = Metrics::default();
    mt.set("max_rel_error", rep.max_rel_error);
    mt.set("reciprocity_recovered", rep.reciprocity_recovered);
    mt.set("reciprocity_direct", rep.reciprocity_direct);
    Ok(artifacts(sc, Command::Gkl, mt, csv, None))
}

fn run_pipeline(sc: &Scenario, order: usize) -> Result<Artifacts> {
    let field = sc.need_field()?;
    let spec = sc.half_plane(sc.need_line()?)?;
    let mut opts = PipelineOptions::new(
        sc.kappa,
        SourceDisk {
            center: Vec2::ZERO,
            radius: field.source_radius,
        },
    )?;
    opts.schedule = sc.schedule()?;
    opts.half_length = sc.trace.half_length_wavelengths * 2.0 * PI / sc.kappa;
    opts.panels_per_wavelength = sc.trace.panels_per_wavelength;
    let ab = propagate::pipeline_abscissas(&opts.schedule, sc.kappa, opts.schedule.radii[0], 10.0);
    let (p, m) = sample_pair(sc, &ab)?;
    let rec = propagate::reconstruct_from_im(&p, &m, order, &spec, &sc.targets, &opts)?;
    let mut csv = target_csv(&[]);
    let mut worst: f64 = 0.0;
    for (x, v) in sc.targets.iter().zip(&rec.values) {
        let want = field.eval(*x)?;
        worst = worst.max(rel_err(*v, want));
        csv.row(None, &[x.x, x.y, v.re, v.im, want.re, want.im, (v - want).norm()]);
    }
    let mut mt = Metrics::default();
    mt.set("max_rel_error", worst);
    mt.set("coverage_radius", rec.trace.coverage_radius);
    mt.set("fit_residual", rec.trace.fit_residual);
    let coeffs = serde_json::json!({ "farfield": rec.trace.farfield, "karp": rec.trace.karp });
    Ok(artifacts(sc, Command::Pipeline, mt, csv, Some(coeffs)))
}

fn artifacts(sc: &Scenario, command: Command, mt: Metrics, csv: Csv, coefficients: Option<serde_json::Value>) -> Artifacts {
    Artifacts {
        report: Report {
            scenario: sc.name.clone(),
            command: command.to_string(),
            metrics: mt.0,
            status: "ok".into(),
        },
        results_csv: csv.0,
        coefficients,
        extra: Vec::new(),
    }
}

/// Runs `command` on a validated scenario; `order` overrides the scenario's.
pub fn run(sc: &Scenario, command: Command, order: Option<usize>) -> Result<Artifacts> {
    let order = order.or(sc.order).unwrap_or(2);
    sc.check_command(command, order)?;
    match command {
        Command::Synth => run_synth(sc),
        Command::Extract => run_extract(sc, order),
        Command::Karp => run_karp(sc, order),
        Command::Propagate => run_propagate(sc),
        Command::Counterexample => run_counterexample(sc),
        Command::Scatter => run_scatter(sc),
        Command::Gkl => run_gkl(sc, order),
        Command::Pipeline => run_pipeline(sc, order),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn write_artifacts(dir: &Path, a: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(dir, "results.csv", &a.results_csv)?;
    if let Some(c) = &a.coefficients {
        write_file(dir, "coefficients.json", &to_json(c)?)?;
    }
    for (name, text) in &a.extra {
        write_file(dir, name, text)?;
    }
    write_file(dir, "report.json", &to_json(&a.report)?)
}

/// `report.json` for a run that failed numerically.
pub fn write_failure(dir: &Path, sc: &Scenario, command: Command, err: &Error) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let report = Report {
        scenario: sc.name.clone(),
        command: command.to_string(),
        metrics: BTreeMap::new(),
        status: format!("failed: {err}"),
    };
    write_file(dir, "report.json", &to_json(&report)?)
}

/// Output directory: `out` if given, else the scenario's, else `out/<name>`.
pub fn output_dir(sc: &Scenario, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| sc.out.clone())
        .unwrap_or_else(|| Path::new("out").join(&sc.name))
}
