//! Bessel functions `J_m`, `Y_m` and Hankel functions `H_m = J_m + i Y_m` of
//! the first kind for integer order and real positive argument.
//!
//! Evaluation scheme:
//!
//! * `x < ASYMPTOTIC_SPLIT`: Miller's backward recurrence normalised by
//!   `J_0 + 2 sum J_2k = 1`, with `Y_0` and `Y_1` from the Neumann series in
//!   the same `J_k` values.
//! * `x >= ASYMPTOTIC_SPLIT`: the large-argument Hankel expansion summed to
//!   its smallest term (below `1e-17` relative for `x >= 25`).
//!
//! Higher orders use downward recurrence for `J_m` (whenever `m` exceeds the
//! argument) and upward recurrence for `Y_m`.

use crate::{Error, Result, C64};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_SPLIT: f64 = 25.0;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Coefficients `a_k` of `H_m(z) ~ sqrt(2/(pi z)) e^{i(z - m pi/2 - pi/4)} sum_k a_k z^{-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCoeffs {
    pub order: u32,
    pub coeffs: Vec<C64>,
}

impl AsymptoticCoeffs {
    /// Truncated series `sum_k a_k z^{-k}`.
    pub fn sum(&self, z: f64) -> C64 {
        let w = 1.0 / z;
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &a| acc * w + a)
    }
}

fn check_order(m: i32) -> Result<usize> {
    if m < 0 {
        return Err(Error::Domain(format!("negative order {m}")));
    }
    Ok(m as usize)
}

fn check_arg(x: f64, allow_zero: bool) -> Result<()> {
    if x.is_nan() || x < 0.0 || (!allow_zero && x == 0.0) {
        return Err(Error::Domain(format!("argument {x} out of range")));
    }
    Ok(())
}

/// `J_m(x)` for `m >= 0`, `x >= 0`.
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    let m = check_order(m)?;
    check_arg(x, true)?;
    Ok(jn(m, x))
}

/// `Y_m(x)` for `m >= 0`, `x > 0`.
pub fn bessel_y(m: i32, x: f64) -> Result<f64> {
    let m = check_order(m)?;
    check_arg(x, false)?;
    Ok(yn(m, x))
}

/// `H_m(x) = J_m(x) + i Y_m(x)`.
pub fn hankel1(m: i32, x: f64) -> Result<C64> {
    let m = check_order(m)?;
    check_arg(x, false)?;
    Ok(hn(m, x))
}

/// First `n` positive zeros of `J_0`.
pub fn j0_roots(n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::Domain("at least one root must be requested".into()));
    }
    Ok((1..=n).map(j0_root).collect())
}

/// Coefficients of the large-argument expansion of `H_m`, `k = 0..=k_max`.
pub fn hankel_asym_coeffs(m: u32, k_max: usize) -> AsymptoticCoeffs {
    let mu = 4.0 * (m as f64) * (m as f64);
    let mut coeffs = Vec::with_capacity(k_max + 1);
    let mut a = C64::new(1.0, 0.0);
    coeffs.push(a);
    for k in 1..=k_max {
        let odd = (2 * k - 1) as f64;
        a *= C64::new(0.0, (mu - odd * odd) / (8.0 * k as f64));
        coeffs.push(a);
    }
    AsymptoticCoeffs { order: m, coeffs }
}

/// Unchecked `J_n(x)`.
pub(crate) fn jn(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < ASYMPTOTIC_SPLIT {
        return miller_j(n, x)[n];
    }
    let (j0, j1, _, _) = asymptotic_01(x);
    match n {
        0 => j0,
        1 => j1,
        _ if (n as f64) < x => {
            let (mut prev, mut cur) = (j0, j1);
            for k in 1..n {
                let next = (2.0 * k as f64 / x) * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
        _ => downward_j_matched(n, x, j0, j1),
    }
}

/// Unchecked `Y_n(x)`, `x > 0`.
pub(crate) fn yn(n: usize, x: f64) -> f64 {
    let (_, _, y0, y1) = base_01(x);
    upward(n, x, y0, y1)
}

/// Unchecked `H_n(x)`, `x > 0`.
pub(crate) fn hn(n: usize, x: f64) -> C64 {
    let (j0, j1, y0, y1) = base_01(x);
    let j = match n {
        0 => j0,
        1 => j1,
        _ => jn(n, x),
    };
    C64::new(j, upward(n, x, y0, y1))
}

/// `H_0(x)` and `H_1(x)` in one pass.
pub(crate) fn h01(x: f64) -> (C64, C64) {
    let (j0, j1, y0, y1) = base_01(x);
    (C64::new(j0, y0), C64::new(j1, y1))
}

/// `J_0..=J_nmax` at `x >= 0`.
pub(crate) fn jn_all(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        return v;
    }
    if x < ASYMPTOTIC_SPLIT {
        let mut v = miller_j(nmax, x);
        v.truncate(nmax + 1);
        return v;
    }
    // stable upward up to the turning point, downward beyond
    let (j0, j1, _, _) = asymptotic_01(x);
    let mut v = vec![j0, j1];
    let up_to = nmax.min(x.floor() as usize);
    for k in 1..up_to {
        let next = (2.0 * k as f64 / x) * v[k] - v[k - 1];
        v.push(next);
    }
    if nmax > up_to {
        let tail = downward_sequence(nmax, x);
        // tail is proportional to J_k for k <= nmax; match at k = up_to
        let anchor = up_to.max(1);
        let scale = v[anchor] / tail[anchor];
        v.truncate(anchor + 1);
        for k in anchor + 1..=nmax {
            v.push(tail[k] * scale);
        }
    }
    v.truncate(nmax + 1);
    v
}

/// `H_0..=H_nmax` at `x > 0`.
pub(crate) fn hn_all(nmax: usize, x: f64) -> Vec<C64> {
    let j = jn_all(nmax, x);
    let (_, _, y0, y1) = base_01(x);
    let mut y = vec![y0, y1];
    for k in 1..nmax {
        let next = (2.0 * k as f64 / x) * y[k] - y[k - 1];
        y.push(next);
    }
    j.iter().zip(y).map(|(&a, b)| C64::new(a, b)).collect()
}

fn upward(n: usize, x: f64, c0: f64, c1: f64) -> f64 {
    match n {
        0 => c0,
        1 => c1,
        _ => {
            let (mut prev, mut cur) = (c0, c1);
            for k in 1..n {
                let next = (2.0 * k as f64 / x) * cur - prev;
                prev = cur;
                cur = next;
                if !cur.is_finite() {
                    break;
                }
            }
            cur
        }
    }
}

fn base_01(x: f64) -> (f64, f64, f64, f64) {
    if x >= ASYMPTOTIC_SPLIT {
        asymptotic_01(x)
    } else {
        neumann_01(x)
    }
}

/// Even starting order for backward recurrence that resolves orders up to `n` at `x`.
fn miller_start(n: usize, x: f64) -> usize {
    let top = (n as f64).max(x.ceil()).max(1.0);
    let start = top as usize + (60.0 * top).sqrt().ceil() as usize + 12;
    start + start % 2
}

/// Unnormalised backward recurrence from `miller_start(n, x)` down to order 0.
/// Entries above the rescaling point may have underflowed to zero.
fn downward_sequence(n: usize, x: f64) -> Vec<f64> {
    let start = miller_start(n, x);
    let mut v = vec![0.0; start + 2];
    v[start + 1] = 0.0;
    v[start] = 1.0;
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / x) * v[k] - v[k + 1];
        v[k - 1] = prev;
        if prev.abs() > RESCALE_ABOVE {
            for e in v[k - 1..].iter_mut() {
                *e *= RESCALE_BY;
            }
        }
    }
    v
}

/// `J_0..=J_start` by Miller's algorithm with the even-sum normalisation.
fn miller_j(n: usize, x: f64) -> Vec<f64> {
    let mut v = downward_sequence(n, x);
    let even: f64 = v.iter().skip(2).step_by(2).sum();
    let norm = v[0] + 2.0 * even;
    for e in v.iter_mut() {
        *e /= norm;
    }
    v
}

fn downward_j_matched(n: usize, x: f64, j0: f64, j1: f64) -> f64 {
    let v = downward_sequence(n, x);
    if j0.abs() >= j1.abs() {
        v[n] * (j0 / v[0])
    } else {
        v[n] * (j1 / v[1])
    }
}

/// `(J_0, J_1, Y_0, Y_1)` below the asymptotic split.
fn neumann_01(x: f64) -> (f64, f64, f64, f64) {
    let j = miller_j(0, x);
    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut sign = -1.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        sign = -sign;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * (-j[0] / x + log_term * j[1] + s1);
    (j[0], j[1], y0, y1)
}

/// Sum of the Hankel asymptotic series for order `m` at `x`, stopped at the
/// smallest term.
fn asymptotic_series(m: u32, x: f64) -> C64 {
    let mu = 4.0 * (m as f64) * (m as f64);
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * C64::new(0.0, (mu - odd * odd) / (8.0 * k as f64 * x));
        let mag = next.norm();
        if mag >= last {
            break;
        }
        sum += next;
        term = next;
        last = mag;
        if mag < 1e-18 {
            break;
        }
    }
    sum
}

fn asymptotic_01(x: f64) -> (f64, f64, f64, f64) {
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = x.sin_cos();
    // e^{i(x - pi/4)}
    let e0 = C64::new((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2);
    // e^{i(x - 3pi/4)} = -i e^{i(x - pi/4)}
    let e1 = C64::new(e0.im, -e0.re);
    let h0 = amp * e0 * asymptotic_series(0, x);
    let h1 = amp * e1 * asymptotic_series(1, x);
    (h0.re, h1.re, h0.im, h1.im)
}

fn j0_root(j: usize) -> f64 {
    // McMahon's expansion as the starting guess
    let beta = (j as f64 - 0.25) * PI;
    let b8 = 8.0 * beta;
    let mut c = beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3));
    let (mut lo, mut hi) = (c - 0.5, c + 0.5);
    for _ in 0..50 {
        let (j0, j1, _, _) = base_01(c);
        let step = j0 / j1;
        let next = c + step;
        if next <= lo || next >= hi {
            // fall back to bisection inside the bracket
            let flo = jn(0, lo);
            if flo * j0 > 0.0 {
                lo = c;
            } else {
                hi = c;
            }
            c = 0.5 * (lo + hi);
        } else {
            c = next;
        }
        if step.abs() < 1e-15 * c {
            break;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series of J_0 summed to convergence (test oracle, small x only).
    fn j0_series(x: f64) -> f64 {
        let q = -x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn j0_at_origin_and_one() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        let oracle = j0_series(1.0);
        assert!((oracle - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(0, 1.0).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn first_root_by_bisection_oracle() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0_series(lo) * j0_series(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 2.404_825_557_695_773).abs() < 1e-13);
        let roots = j0_roots(1).unwrap();
        assert!((roots[0] - root).abs() < 1e-12);
        assert!(bessel_j(0, 2.404_825_557_695_773).unwrap().abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(-1, 1.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_y(0, 0.0).is_err());
        assert!(bessel_y(-2, 1.0).is_err());
        assert!(hankel1(0, 0.0).is_err());
        assert!(hankel1(0, f64::NAN).is_err());
        assert!(j0_roots(0).is_err());
    }

    #[test]
    fn y1_small_argument_leading_term() {
        let x = 1e-6;
        let y = bessel_y(1, x).unwrap();
        let lead = -2.0 / (PI * x);
        assert!(((y - lead) / lead).abs() < 0.01);
    }

    #[test]
    fn hankel_recurrence_at_five() {
        let h0 = hankel1(0, 5.0).unwrap();
        let h1 = hankel1(1, 5.0).unwrap();
        let h2 = hankel1(2, 5.0).unwrap();
        assert!((h2 - (2.0 / 5.0 * h1 - h0)).norm() < 1e-12);
    }

    #[test]
    fn hankel_leading_asymptotics_at_100() {
        let h = hankel1(0, 100.0).unwrap();
        let lead = (2.0 / (PI * 100.0)).sqrt() * C64::from_polar(1.0, 100.0 - PI / 4.0);
        assert!((h - lead).norm() / lead.norm() < 2e-3);
    }

    #[test]
    fn asymptotic_coefficients() {
        let a = hankel_asym_coeffs(0, 0);
        assert_eq!(a.coeffs, vec![C64::new(1.0, 0.0)]);
        let a = hankel_asym_coeffs(0, 2);
        assert!((a.coeffs[1] - C64::new(0.0, -0.125)).norm() < 1e-16);
        assert!((a.coeffs[2] - C64::new(-9.0 / 128.0, 0.0)).norm() < 1e-16);
        for m in [0u32, 1] {
            let z = 200.0;
            let a = hankel_asym_coeffs(m, 2);
            let phase = z - (m as f64) * PI / 2.0 - PI / 4.0;
            let reduced = hankel1(m as i32, z).unwrap() * (PI * z / 2.0).sqrt()
                * C64::from_polar(1.0, -phase);
            let rel = (a.sum(z) - reduced).norm() / reduced.norm();
            assert!(rel < 1e-5, "m={m} rel={rel:e}");
        }
    }

    #[test]
    fn truncated_series_error_bound_at_50() {
        for m in [0u32, 1, 3] {
            for k in [2usize, 4, 6] {
                let a = hankel_asym_coeffs(m, k);
                let z = 50.0;
                let phase = z - (m as f64) * PI / 2.0 - PI / 4.0;
                let reduced = hankel1(m as i32, z).unwrap() * (PI * z / 2.0).sqrt()
                    * C64::from_polar(1.0, -phase);
                let bound = 10.0 * a.coeffs[k].norm() * z.powi(-(k as i32));
                let err = (a.sum(z) - reduced).norm();
                assert!(err <= bound.max(1e-15), "m={m} k={k} err={err:e} bound={bound:e}");
            }
        }
    }

    #[test]
    fn roots_spacing_and_residual() {
        let r = j0_roots(5).unwrap();
        assert!((r[1] - r[0] - PI).abs() < 0.1);
        for c in r {
            assert!(jn(0, c).abs() <= 1e-11);
        }
    }

    #[test]
    fn jn_all_matches_single_evaluations() {
        for &x in &[0.3, 7.0, 24.9, 25.1, 60.0, 300.0] {
            let all = jn_all(70, x);
            for (n, &v) in all.iter().enumerate() {
                let single = jn(n, x);
                assert!(
                    (v - single).abs() <= 1e-13 * single.abs().max(1e-300) + 1e-300,
                    "x={x} n={n} {v:e} vs {single:e}"
                );
            }
        }
    }
}
