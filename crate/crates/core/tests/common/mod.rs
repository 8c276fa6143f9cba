#![allow(dead_code)]

use imrecon::farfield::ExtractionSchedule;
use imrecon::fields::{sample_im_on_ray, ImSamples, Orientation, RadiationField, RayGeometry, Term};
use imrecon::{Vec2, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn point_source(kappa: f64, y0: Vec2) -> RadiationField {
    RadiationField::new(kappa, vec![Term::PointSource { y0, c: c(1.0, 0.0) }]).unwrap()
}

/// `H_0 + 0.5i H_1 e^{i phi} + 0.2 H_2 e^{2i phi}`.
pub fn multipole_mix(kappa: f64) -> RadiationField {
    RadiationField::new(
        kappa,
        vec![
            Term::Multipole { m: 0, c: c(1.0, 0.0) },
            Term::Multipole { m: 1, c: c(0.0, 0.5) },
            Term::Multipole { m: 2, c: c(0.2, 0.0) },
        ],
    )
    .unwrap()
}

/// The two rays of the horizontal line through `q`, both starting at `q`.
pub fn rays(q: Vec2) -> (RayGeometry, RayGeometry) {
    let th = Vec2::new(1.0, 0.0);
    (
        RayGeometry::new(q, th, Orientation::Plus).unwrap(),
        RayGeometry::new(q, th, Orientation::Minus).unwrap(),
    )
}

pub fn sample_pair(
    field: &RadiationField,
    q: Vec2,
    abscissas: &[f64],
    sigma: f64,
) -> (ImSamples, ImSamples) {
    let (p, m) = rays(q);
    (
        sample_im_on_ray(field, &p, abscissas, sigma, 1).unwrap(),
        sample_im_on_ray(field, &m, abscissas, sigma, 2).unwrap(),
    )
}

pub fn schedule_samples(
    field: &RadiationField,
    q: Vec2,
    sched: &ExtractionSchedule,
) -> (ImSamples, ImSamples) {
    sample_pair(field, q, &sched.abscissas(), 0.0)
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub mod pipeline {
    use super::*;
    use imrecon::propagate::{pipeline_abscissas, HalfPlaneSpec, PipelineOptions, SourceDisk};
    use imrecon::LineSpec;

    /// Two-ray samples on the line `y = y_line` with the near grid up to the
    /// first schedule radius.
    pub fn line_samples(field: &RadiationField, y_line: f64, sigma: f64) -> (ImSamples, ImSamples, PipelineOptions) {
        let kappa = field.kappa;
        let q = Vec2::new(0.0, y_line);
        let opts = PipelineOptions::new(
            kappa,
            SourceDisk {
                center: Vec2::ZERO,
                radius: field.source_radius,
            },
        )
        .unwrap();
        let ab = pipeline_abscissas(&opts.schedule, kappa, opts.schedule.radii[0], 10.0);
        let (p, m) = sample_pair(field, q, &ab, sigma);
        (p, m, opts)
    }

    pub fn lower_half(y_line: f64) -> HalfPlaneSpec {
        let line = LineSpec::new(Vec2::new(0.0, y_line), Vec2::new(1.0, 0.0)).unwrap();
        HalfPlaneSpec::new(line, Vec2::new(0.0, 1.0)).unwrap()
    }

    pub fn five_targets(y_line: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, y_line - 2.5),
            Vec2::new(1.5, y_line - 2.5),
            Vec2::new(-2.0, y_line - 0.8),
            Vec2::new(3.0, y_line - 4.0),
            Vec2::new(-0.7, y_line - 1.0),
        ]
    }
}
