//! Small numerical kernels shared by the extraction and scattering code.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// Value at `h = 0` of the polynomial through `(h_i, v_i)` (Neville's scheme).
pub fn neville_at_zero(h: &[f64], v: &[C64]) -> C64 {
    assert_eq!(h.len(), v.len());
    let mut p = v.to_vec();
    let n = h.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i]);
        }
    }
    p[0]
}

/// Extrapolation of a sequence with an error expansion in powers of `1/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: C64,
    /// Tableau-based error estimate.
    pub error: f64,
    /// Index of the first estimate used.
    pub start: usize,
    pub depth: usize,
}

/// Depth-`depth` extrapolant in `1/r` using the window starting at `start`.
pub fn extrapolate_window(r: &[f64], v: &[C64], start: usize, depth: usize) -> C64 {
    let h: Vec<f64> = r[start..=start + depth].iter().map(|x| 1.0 / x).collect();
    neville_at_zero(&h, &v[start..=start + depth])
}

/// Chooses the window of `depth + 1` consecutive estimates whose extrapolant
/// is most stable against dropping either end point.
pub fn extrapolate_adaptive(r: &[f64], v: &[C64], depth: usize) -> Extrapolated {
    extrapolate_adaptive_with(r, v, depth, |_, _| 0.0)
}

/// As [`extrapolate_adaptive`], adding `penalty(start, depth)` to each window's
/// error estimate before comparing.
pub fn extrapolate_adaptive_with(
    r: &[f64],
    v: &[C64],
    depth: usize,
    penalty: impl Fn(usize, usize) -> f64,
) -> Extrapolated {
    let n = r.len();
    assert!(n > 0 && n == v.len());
    let depth = depth.min(n - 1);
    if depth == 0 {
        let start = n - 1;
        let tail = if n > 1 { (v[n - 1] - v[n - 2]).norm() } else { f64::INFINITY };
        let error = tail + penalty(start, 0);
        return Extrapolated { value: v[start], error, start, depth };
    }
    let mut best: Option<Extrapolated> = None;
    for start in 0..n - depth {
        let value = extrapolate_window(r, v, start, depth);
        let drop_last = extrapolate_window(r, v, start, depth - 1);
        let drop_first = extrapolate_window(r, v, start + 1, depth - 1);
        let error = (value - drop_last).norm().max((value - drop_first).norm())
            + penalty(start, depth);
        if best.is_none_or(|b| error < b.error) {
            best = Some(Extrapolated { value, error, start, depth });
        }
    }
    best.expect("at least one window")
}

/// Minimum-norm least-squares solution of `a x = b` with column equilibration.
/// Returns the solution and the 2-norm condition number of the scaled matrix.
pub fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let mut a = a;
    let scales: Vec<f64> = (0..a.ncols())
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let mut x = svd
        .solve(b, smax * 1e-15)
        .unwrap_or_else(|_| DVector::zeros(b.len()));
    for (j, s) in scales.iter().enumerate() {
        x[j] /= s;
    }
    (x, cond)
}

/// Dense complex LU solve with a cheap condition estimate.
pub struct ComplexLu {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    pub cond_estimate: f64,
}

impl ComplexLu {
    /// Factorises `a`; fails if the estimated condition number exceeds `max_cond`.
    pub fn new(a: DMatrix<C64>, max_cond: f64) -> Result<Self> {
        let n = a.nrows();
        let norm_a = one_norm(&a);
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem { cond: f64::INFINITY });
        }
        // ||A^{-1}||_1 from a few probe solves
        let mut inv_norm: f64 = 0.0;
        for probe in 0..3 {
            let rhs = DVector::from_fn(n, |i, _| {
                let t = ((i * 7 + probe * 13) % 17) as f64 / 17.0 - 0.5;
                C64::new(1.0 + t, t * (probe as f64 - 1.0))
            });
            let rn: f64 = rhs.iter().map(|z| z.norm()).sum();
            let x = lu.solve(&rhs).ok_or(Error::SingularSystem { cond: f64::INFINITY })?;
            let xn: f64 = x.iter().map(|z| z.norm()).sum();
            inv_norm = inv_norm.max(xn / rn);
        }
        let cond_estimate = norm_a * inv_norm;
        if !(cond_estimate.is_finite() && cond_estimate <= max_cond) {
            return Err(Error::SingularSystem { cond: cond_estimate });
        }
        Ok(ComplexLu { lu, cond_estimate })
    }

    pub fn solve(&self, b: &DVector<C64>) -> DVector<C64> {
        self.lu.solve(b).expect("factorisation checked invertible")
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_removes_polynomial_error() {
        let r: Vec<f64> = (0..4).map(|k| 100.0 * 2f64.powi(k)).collect();
        let v: Vec<C64> = r
            .iter()
            .map(|x| C64::new(1.0 + 1.0 / x - 3.0 / (x * x), 2.0 + 0.5 / x))
            .collect();
        let e = extrapolate_window(&r, &v, 0, 2);
        assert!((e - C64::new(1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn adaptive_prefers_clean_window() {
        let r: Vec<f64> = (0..8).map(|k| 10.0 * 2f64.powi(k)).collect();
        let mut v: Vec<C64> = r.iter().map(|x| C64::new(1.0 + 1.0 / x, 0.0)).collect();
        v[0] += C64::new(0.3, 0.0);
        let e = extrapolate_adaptive(&r, &v, 1);
        assert!(e.start > 0);
        assert!((e.value - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_line() {
        let a = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { 1e6 * i as f64 });
        let b = DVector::from_fn(5, |i, _| 2.0 + 3e6 * i as f64);
        let (x, cond) = least_squares(a, &b);
        assert!((x[0] - 2.0).abs() < 1e-8 && (x[1] - 3.0).abs() < 1e-12, "{x} {cond}");
        assert!(cond < 10.0);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DMatrix::from_element(3, 3, C64::new(1.0, 0.0));
        assert!(matches!(ComplexLu::new(a, 1e12), Err(Error::SingularSystem { .. })));
        let id = DMatrix::<C64>::identity(3, 3);
        let lu = ComplexLu::new(id, 1e12).unwrap();
        assert!(lu.cond_estimate <= 1.0 + 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 / v).collect();
        assert!((loglog_slope(&x, &y) + 1.0).abs() < 1e-12);
    }
}
