mod common;

use common::*;
use imrecon::fields::RadiationField;
use imrecon::propagate::*;
use imrecon::{LineSpec, Vec2, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn lower_half_plane(y: f64) -> HalfPlaneSpec {
    let line = LineSpec::new(Vec2::new(0.0, y), Vec2::new(1.0, 0.0)).unwrap();
    HalfPlaneSpec::new(line, Vec2::new(0.0, 1.0)).unwrap()
}

fn exact_trace(field: RadiationField, spec: HalfPlaneSpec, s: f64) -> LineTrace {
    LineTrace::function(move |u| field.eval(spec.line.at(u)), s).unwrap()
}

fn targets(kappa: f64, y_line: f64) -> Vec<Vec2> {
    let lam = 2.0 * PI / kappa;
    vec![
        Vec2::new(0.0, y_line - 2.0 * lam),
        Vec2::new(1.5, y_line - 2.0 * lam),
        Vec2::new(-2.0, y_line - 0.8),
        Vec2::new(3.0, y_line - 4.0),
        Vec2::new(-0.7, y_line - 1.0),
    ]
}

#[test]
fn point_source_reproduction_at_five_targets() {
    let kappa = 5.0;
    let lam = 2.0 * PI / kappa;
    let field = point_source(kappa, Vec2::new(0.3, 0.2));
    let spec = lower_half_plane(-2.0);
    let trace = exact_trace(field.clone(), spec, 200.0 * lam);
    let xs = targets(kappa, -2.0);
    let out = propagate_targets(&trace, &spec, &xs, kappa).unwrap();
    for (x, p) in xs.iter().zip(&out) {
        let want = field.eval(*x).unwrap();
        assert!(rel(p.value, want) <= 1e-3, "{x:?}: {:e}", rel(p.value, want));
    }
}

#[test]
fn panel_doubling_stays_within_estimate() {
    let kappa = 3.0;
    let lam = 2.0 * PI / kappa;
    let field = point_source(kappa, Vec2::new(-0.2, 0.5));
    let spec = lower_half_plane(-1.0);
    let xs = targets(kappa, -1.0);
    let coarse = propagate_targets(&exact_trace(field.clone(), spec, 100.0 * lam), &spec, &xs, kappa).unwrap();
    let fine = propagate_targets(
        &exact_trace(field, spec, 100.0 * lam).with_panels(20.0),
        &spec,
        &xs,
        kappa,
    )
    .unwrap();
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a.value - b.value).norm() <= a.quad_error, "{:e} > {:e}", (a.value - b.value).norm(), a.quad_error);
    }
}

#[test]
fn error_shrinks_with_truncation_length() {
    let kappa = 4.0;
    let lam = 2.0 * PI / kappa;
    let field = multipole_mix(kappa);
    let spec = lower_half_plane(-1.5);
    let x = Vec2::new(0.5, -3.0);
    let want = field.eval(x).unwrap();
    let errs: Vec<f64> = [10.0, 40.0, 160.0]
        .iter()
        .map(|&w| {
            let t = exact_trace(field.clone(), spec, w * lam).with_tail_tol(1.0);
            rel(propagate_halfplane(&t, &spec, x, kappa).unwrap(), want)
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn tabulated_trace_agrees_with_callable() {
    let kappa = 2.0;
    let lam = 2.0 * PI / kappa;
    let field = point_source(kappa, Vec2::new(0.1, 0.3));
    let spec = lower_half_plane(-1.0);
    let sl = 60.0 * lam;
    let h = lam / 12.0;
    let n = (2.0 * sl / h).ceil() as usize + 1;
    let a: Vec<f64> = (0..n).map(|k| -sl + k as f64 * h).collect();
    let v: Vec<C64> = a.iter().map(|&s| field.eval(spec.line.at(s)).unwrap()).collect();
    let table = LineTrace::table(a, v, sl).unwrap();
    let x = Vec2::new(0.3, -2.5);
    let t = propagate_halfplane(&table, &spec, x, kappa).unwrap();
    let f = propagate_halfplane(&exact_trace(field.clone(), spec, sl), &spec, x, kappa).unwrap();
    assert!(rel(t, f) < 1e-4);
    assert!(rel(t, field.eval(x).unwrap()) < 1e-3);
}

#[test]
fn sparse_table_is_rejected() {
    let a: Vec<f64> = (0..50).map(|k| -10.0 + k as f64 * 0.5).collect();
    let v = vec![c(1.0, 0.0); 50];
    let t = LineTrace::table(a, v, 10.0).unwrap();
    assert!(propagate_halfplane(&t, &lower_half_plane(0.0), Vec2::new(0.0, -2.0), 3.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn linear_in_the_trace(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let kappa = 2.0;
        let field = point_source(kappa, Vec2::new(0.0, 0.4));
        let spec = lower_half_plane(-1.0);
        let lam = 2.0 * PI / kappa;
        let x = Vec2::new(0.2, -2.0);
        let base = propagate_halfplane(&exact_trace(field.clone(), spec, 50.0 * lam), &spec, x, kappa).unwrap();
        let l = C64::new(re, im);
        let f2 = field.clone();
        let scaled = LineTrace::function(move |u| Ok(l * f2.eval(spec.line.at(u))?), 50.0 * lam).unwrap();
        let v = propagate_halfplane(&scaled, &spec, x, kappa).unwrap();
        prop_assert!((v - l * base).norm() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn estimate_bounds_self_convergence(
        sx in -1.0f64..1.0, sy in -1.0f64..0.5, kappa in 1.0f64..6.0,
        tx in -3.0f64..3.0, depth in 0.3f64..3.0,
    ) {
        let field = point_source(kappa, Vec2::new(sx, sy));
        let spec = lower_half_plane(-1.5);
        let lam = 2.0 * PI / kappa;
        let x = Vec2::new(tx, -1.5 - depth * lam);
        let t = exact_trace(field, spec, 40.0 * lam).with_tail_tol(1.0);
        let a = propagate_targets(&t, &spec, &[x], kappa).unwrap()[0];
        let b = propagate_targets(&t.clone().with_panels(20.0), &spec, &[x], kappa).unwrap()[0];
        prop_assert!((a.value - b.value).norm() <= a.quad_error);
    }
}
