mod common;

use common::pipeline::*;
use common::*;
use imrecon::fields::{ImSamples, Orientation, RadiationField, RayGeometry};
use imrecon::propagate::*;
use imrecon::{Error, Vec2};

fn max_rel(field: &RadiationField, targets: &[Vec2], got: &[imrecon::C64]) -> f64 {
    targets
        .iter()
        .zip(got)
        .map(|(x, v)| rel(*v, field.eval(*x).unwrap()))
        .fold(0.0, f64::max)
}

#[test]
fn point_source_scenario() {
    let field = point_source(5.0, Vec2::new(0.3, 0.2));
    let (p, m, opts) = line_samples(&field, -2.0, 0.0);
    let xs = five_targets(-2.0);
    let r = reconstruct_from_im(&p, &m, 2, &lower_half(-2.0), &xs, &opts).unwrap();
    let err = max_rel(&field, &xs, &r.values);
    assert!(err <= 1e-2, "{err:e}");
}

#[test]
fn multipole_mix_scenario() {
    let field = multipole_mix(5.0);
    let (p, m, opts) = line_samples(&field, -2.0, 0.0);
    let xs = five_targets(-2.0);
    let r = reconstruct_from_im(&p, &m, 2, &lower_half(-2.0), &xs, &opts).unwrap();
    let err = max_rel(&field, &xs, &r.values);
    assert!(err <= 1e-2, "{err:e}");
}

#[test]
fn recovered_trace_matches_the_field_on_the_line() {
    let field = point_source(3.0, Vec2::new(-0.4, 0.1));
    let (p, m, opts) = line_samples(&field, -1.5, 0.0);
    let t = recover_trace(&p, &m, 2, &opts).unwrap();
    assert!(t.coverage_radius > 0.0);
    for k in -40..=40 {
        let s = 7.3 * k as f64;
        let y = Vec2::new(s, -1.5);
        let want = field.eval(y).unwrap();
        assert!(rel(t.value(y).unwrap(), want) < 1e-2, "s = {s}");
    }
}

#[test]
fn zero_samples_give_zero() {
    let field = RadiationField::zero(5.0).unwrap();
    let (p, m, opts) = line_samples(&field, -2.0, 0.0);
    let xs = five_targets(-2.0);
    let r = reconstruct_from_im(&p, &m, 2, &lower_half(-2.0), &xs, &opts).unwrap();
    assert!(r.values.iter().all(|v| v.norm() == 0.0));
}

fn flipped(s: &ImSamples) -> ImSamples {
    let ray = RayGeometry::new(s.ray.origin, -s.ray.direction, s.ray.orientation.flipped()).unwrap();
    ImSamples { ray, ..s.clone() }
}

#[test]
fn relabelling_the_rays_changes_nothing() {
    let field = multipole_mix(5.0);
    let (p, m, opts) = line_samples(&field, -2.0, 0.0);
    let xs = five_targets(-2.0);
    let spec = lower_half(-2.0);
    let a = reconstruct_from_im(&p, &m, 2, &spec, &xs, &opts).unwrap();
    let b = reconstruct_from_im(&flipped(&m), &flipped(&p), 2, &spec, &xs, &opts).unwrap();
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!(rel(*v, *u) <= 1e-8, "{:e}", rel(*v, *u));
    }
}

#[test]
fn schedule_only_samples_cannot_cover_the_near_segment() {
    let field = point_source(5.0, Vec2::new(0.3, 0.2));
    let (_, _, opts) = line_samples(&field, -2.0, 0.0);
    let (p, m) = schedule_samples(&field, Vec2::new(0.0, -2.0), &opts.schedule);
    let err = reconstruct_from_im(&p, &m, 2, &lower_half(-2.0), &five_targets(-2.0), &opts).unwrap_err();
    assert!(!err.is_validation());
    assert!(err.to_string().starts_with("near-field fit"), "{err}");
}

#[test]
fn samples_off_the_boundary_are_rejected() {
    let field = point_source(5.0, Vec2::new(0.3, 0.2));
    let (p, m, opts) = line_samples(&field, -2.0, 0.0);
    let err = reconstruct_from_im(&p, &m, 2, &lower_half(-2.5), &[Vec2::new(0.0, -5.0)], &opts).unwrap_err();
    assert!(matches!(err, Error::Geometry(_)));
}

#[test]
fn noisy_samples_still_reconstruct() {
    let field = point_source(5.0, Vec2::new(0.3, 0.2));
    let (p, m, opts) = line_samples(&field, -2.0, 1e-9);
    let xs = five_targets(-2.0);
    let r = reconstruct_from_im(&p, &m, 2, &lower_half(-2.0), &xs, &opts).unwrap();
    assert!(max_rel(&field, &xs, &r.values) <= 1e-2);
}

#[test]
fn rays_must_share_an_origin_on_the_line() {
    let field = point_source(5.0, Vec2::new(0.3, 0.2));
    let (p, _, opts) = line_samples(&field, -2.0, 0.0);
    let ray = RayGeometry::new(Vec2::new(0.0, -2.0), Vec2::new(0.0, 1.0), Orientation::Minus).unwrap();
    let m = ImSamples { ray, ..p.clone() };
    assert!(recover_trace(&p, &m, 2, &opts).is_err());
}

#[test]
fn extraction_is_frame_covariant() {
    use imrecon::farfield::{extract_all_at, ExtractionSchedule};
    use imrecon::karp::{eval_karp, karp_from_farfield};
    let field = multipole_mix(2.0);
    let sched = ExtractionSchedule::default_for(2.0).unwrap();
    let mut ab = sched.abscissas();
    ab.extend(sched.abscissas().iter().map(|s| s + 3.0));
    ab.extend(sched.abscissas().iter().map(|s| s - 3.0));
    ab.sort_by(f64::total_cmp);
    ab.dedup();
    let (p, m) = sample_pair(&field, Vec2::new(0.0, -2.0), &ab, 0.0);
    let value = |q: Vec2, x: f64| {
        let (ff, _) = extract_all_at(&p, &m, 2, &sched, q).unwrap();
        let kc = karp_from_farfield(&ff).unwrap();
        let s = x - q.x;
        let side = if s > 0.0 { Orientation::Plus } else { Orientation::Minus };
        eval_karp(&kc, s.abs(), side).unwrap()
    };
    for x in [800.0, -1500.0] {
        let a = value(Vec2::new(0.0, -2.0), x);
        let b = value(Vec2::new(3.0, -2.0), x);
        assert!(rel(b, a) <= 1e-6, "{:e}", rel(b, a));
    }
}
