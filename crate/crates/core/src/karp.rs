//! Convergent expansion `psi = H_0(kappa r) sum F_j r^{-j} + H_1(kappa r) sum G_j r^{-j}`
//! and its relation to the far-field coefficients.
//!
//! Values at the antipodal angle follow from
//! `F_j(phi + pi) = (-1)^j F_j(phi)` and `G_j(phi + pi) = (-1)^{j+1} G_j(phi)`.

use crate::farfield::FarFieldCoeffs;
use crate::fields::{MultipoleExpansion, Orientation};
use crate::specfun::{self, hankel_asym_coeffs};
use crate::{Error, Result, Vec2, C64};
use serde::{Deserialize, Serialize};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `F_0..F_n`, `G_0..G_n` at angle `phi`, in the frame centred at `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KarpCoeffs {
    pub kappa: f64,
    pub phi: f64,
    #[serde(rename = "q")]
    pub origin_shift: Vec2,
    #[serde(rename = "F")]
    pub f: Vec<C64>,
    #[serde(rename = "G")]
    pub g: Vec<C64>,
}

fn parity(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl KarpCoeffs {
    pub fn order(&self) -> usize {
        self.f.len().saturating_sub(1)
    }

    /// Coefficients on the given side: `phi` for `Plus`, `phi + pi` for `Minus`.
    pub fn side(&self, side: Orientation) -> (Vec<C64>, Vec<C64>) {
        match side {
            Orientation::Plus => (self.f.clone(), self.g.clone()),
            Orientation::Minus => (
                self.f.iter().enumerate().map(|(j, &v)| v * parity(j)).collect(),
                self.g.iter().enumerate().map(|(j, &v)| -v * parity(j)).collect(),
            ),
        }
    }

    /// Truncated to orders `0..=n`.
    pub fn truncated(&self, n: usize) -> KarpCoeffs {
        let k = (n + 1).min(self.f.len());
        KarpCoeffs {
            f: self.f[..k].to_vec(),
            g: self.g[..k].to_vec(),
            ..self.clone()
        }
    }

    fn check(&self) -> Result<()> {
        if self.f.len() != self.g.len() || self.f.is_empty() {
            return Err(Error::OrderMismatch(format!(
                "{} F coefficients but {} G coefficients",
                self.f.len(),
                self.g.len()
            )));
        }
        Ok(())
    }

    /// Size of the last retained term at radius `r`.
    pub fn last_term(&self, r: f64, side: Orientation) -> Result<f64> {
        self.check()?;
        let n = self.order();
        let (f, g) = self.side(side);
        let (h0, h1) = specfun::h01(self.kappa * r);
        Ok((f[n].norm() * h0.norm() + g[n].norm() * h1.norm()) / r.powi(n as i32))
    }
}

/// `sum_{k+l=j} kappa^{-k} [a_k(0) F_l - i a_k(1) G_l]` with `l < j` only.
fn lower_terms(f: &[C64], g: &[C64], a0: &[C64], a1: &[C64], kappa: f64, j: usize) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for l in 0..j {
        let k = j - l;
        s += kappa.powi(-(k as i32)) * (a0[k] * f[l] - I * a1[k] * g[l]);
    }
    s
}

/// Solves the order-by-order matching against far-field data at both angles.
pub fn karp_from_farfield(ff: &FarFieldCoeffs) -> Result<KarpCoeffs> {
    ff.validate()?;
    let n = ff.order();
    let a0 = hankel_asym_coeffs(0, n).coeffs;
    let a1 = hankel_asym_coeffs(1, n).coeffs;
    let mut f: Vec<C64> = Vec::with_capacity(n + 1);
    let mut g: Vec<C64> = Vec::with_capacity(n + 1);
    let mut fm: Vec<C64> = Vec::with_capacity(n + 1);
    let mut gm: Vec<C64> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let a = ff.f_plus[j] - lower_terms(&f, &g, &a0, &a1, ff.kappa, j);
        let b = parity(j) * (ff.f_minus[j] - lower_terms(&fm, &gm, &a0, &a1, ff.kappa, j));
        let fj = 0.5 * (a + b);
        let gj = 0.5 * I * (a - b);
        f.push(fj);
        g.push(gj);
        fm.push(parity(j) * fj);
        gm.push(-parity(j) * gj);
    }
    Ok(KarpCoeffs {
        kappa: ff.kappa,
        phi: ff.phi,
        origin_shift: ff.origin_shift,
        f,
        g,
    })
}

/// Far-field coefficients `f_0..f_n` implied by `kc` at both angles.
pub fn farfield_from_karp(kc: &KarpCoeffs, n: usize) -> Result<FarFieldCoeffs> {
    kc.check()?;
    if kc.order() < n {
        return Err(Error::OrderMismatch(format!(
            "requested order {n} from Karp coefficients of order {}",
            kc.order()
        )));
    }
    let a0 = hankel_asym_coeffs(0, n).coeffs;
    let a1 = hankel_asym_coeffs(1, n).coeffs;
    let forward = |f: &[C64], g: &[C64]| -> Vec<C64> {
        (0..=n)
            .map(|j| f[j] - I * g[j] + lower_terms(f, g, &a0, &a1, kc.kappa, j))
            .collect()
    };
    let (fm, gm) = kc.side(Orientation::Minus);
    Ok(FarFieldCoeffs {
        kappa: kc.kappa,
        phi: kc.phi,
        origin_shift: kc.origin_shift,
        f_plus: forward(&kc.f, &kc.g),
        f_minus: forward(&fm, &gm),
    })
}

/// Truncated series at `q ± r theta`.
pub fn eval_karp(kc: &KarpCoeffs, r: f64, side: Orientation) -> Result<C64> {
    kc.check()?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let (f, g) = kc.side(side);
    let w = 1.0 / r;
    let horner = |c: &[C64]| c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &v| acc * w + v);
    let (h0, h1) = specfun::h01(kc.kappa * r);
    Ok(h0 * horner(&f) + h1 * horner(&g))
}

/// Integer polynomials in `w = 1/z` with `H_m(z) = P_m(w) H_0(z) + Q_m(w) H_1(z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LommelPolys {
    pub p: Vec<i128>,
    pub q: Vec<i128>,
}

fn trim(mut v: Vec<i128>) -> Vec<i128> {
    while v.len() > 1 && v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// `P_m`, `Q_m` from `H_{m+1} = (2m/z) H_m - H_{m-1}`, keeping powers up to `w^order`.
pub fn lommel_karp_oracle(m: u32, order: usize) -> Result<LommelPolys> {
    let overflow = || Error::Domain(format!("Lommel coefficients of order {m} overflow i128"));
    let step = |cur: &[i128], prev: &[i128], k: u32| -> Option<Vec<i128>> {
        let len = (cur.len() + 1).max(prev.len());
        let mut next = vec![0i128; len];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] = c.checked_mul(2 * k as i128)?;
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i] = next[i].checked_sub(p)?;
        }
        Some(trim(next))
    };
    let (mut p_prev, mut p_cur) = (vec![1i128], vec![0i128]);
    let (mut q_prev, mut q_cur) = (vec![0i128], vec![1i128]);
    let (p, q) = if m == 0 {
        (p_prev, q_prev)
    } else {
        for k in 1..m {
            let pn = step(&p_cur, &p_prev, k).ok_or_else(overflow)?;
            let qn = step(&q_cur, &q_prev, k).ok_or_else(overflow)?;
            p_prev = std::mem::replace(&mut p_cur, pn);
            q_prev = std::mem::replace(&mut q_cur, qn);
        }
        (p_cur, q_cur)
    };
    let cut = |mut v: Vec<i128>| {
        v.truncate(order + 1);
        trim(v)
    };
    Ok(LommelPolys { p: cut(p), q: cut(q) })
}

/// Floating-point `P_m`, `Q_m` for `m = 0..=m_max`, each as coefficients of `w^0..w^order`.
fn lommel_table(m_max: usize, order: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut table = Vec::with_capacity(m_max + 1);
    let mut p_prev = vec![0.0; order + 1];
    let mut q_prev = vec![0.0; order + 1];
    p_prev[0] = 1.0;
    table.push((p_prev.clone(), q_prev.clone()));
    if m_max == 0 {
        return table;
    }
    let mut p_cur = vec![0.0; order + 1];
    let mut q_cur = vec![0.0; order + 1];
    q_cur[0] = 1.0;
    table.push((p_cur.clone(), q_cur.clone()));
    for k in 1..m_max {
        let mut pn = vec![0.0; order + 1];
        let mut qn = vec![0.0; order + 1];
        for i in 0..=order {
            if i >= 1 {
                pn[i] += 2.0 * k as f64 * p_cur[i - 1];
                qn[i] += 2.0 * k as f64 * q_cur[i - 1];
            }
            pn[i] -= p_prev[i];
            qn[i] -= q_prev[i];
        }
        p_prev = std::mem::replace(&mut p_cur, pn);
        q_prev = std::mem::replace(&mut q_cur, qn);
        table.push((p_cur.clone(), q_cur.clone()));
    }
    table
}

/// Karp coefficients of a multipole expansion at angle `phi`, from the Lommel polynomials.
pub fn karp_from_expansion(exp: &MultipoleExpansion, phi: f64, order: usize) -> KarpCoeffs {
    let m_abs = exp.m_min.unsigned_abs().max(exp.m_max().unsigned_abs()) as usize;
    let table = lommel_table(m_abs, order);
    let mut f = vec![C64::new(0.0, 0.0); order + 1];
    let mut g = vec![C64::new(0.0, 0.0); order + 1];
    for (m, c) in exp.terms() {
        let a = m.unsigned_abs() as usize;
        let sign = if m < 0 && a % 2 == 1 { -1.0 } else { 1.0 };
        let w = sign * c * C64::from_polar(1.0, m as f64 * phi);
        let (p, q) = &table[a];
        for j in 0..=order {
            let kj = exp.kappa.powi(-(j as i32));
            f[j] += w * p[j] * kj;
            g[j] += w * q[j] * kj;
        }
    }
    KarpCoeffs {
        kappa: exp.kappa,
        phi,
        origin_shift: exp.center,
        f,
        g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ff(f_plus: Vec<C64>, f_minus: Vec<C64>) -> FarFieldCoeffs {
        FarFieldCoeffs {
            kappa: 2.0,
            phi: 0.3,
            origin_shift: Vec2::ZERO,
            f_plus,
            f_minus,
        }
    }

    #[test]
    fn h0_field() {
        let kc = karp_from_farfield(&ff(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)])).unwrap();
        assert_eq!(kc.f, vec![c(1.0, 0.0)]);
        assert_eq!(kc.g, vec![c(0.0, 0.0)]);
        let v = eval_karp(&kc, 3.0, Orientation::Plus).unwrap();
        assert_eq!(v, specfun::hankel1(0, 6.0).unwrap());
    }

    #[test]
    fn h1_field() {
        let phi = 0.3;
        let e = C64::from_polar(1.0, phi);
        let kc = karp_from_farfield(&ff(vec![-I * e], vec![I * e])).unwrap();
        assert!(kc.f[0].norm() < 1e-16);
        assert!((kc.g[0] - e).norm() < 1e-16);
    }

    #[test]
    fn lommel_examples() {
        assert_eq!(lommel_karp_oracle(0, 5).unwrap(), LommelPolys { p: vec![1], q: vec![0] });
        assert_eq!(lommel_karp_oracle(1, 5).unwrap(), LommelPolys { p: vec![0], q: vec![1] });
        assert_eq!(lommel_karp_oracle(2, 5).unwrap(), LommelPolys { p: vec![-1], q: vec![0, 2] });
        let l3 = lommel_karp_oracle(3, 5).unwrap();
        assert_eq!(l3, LommelPolys { p: vec![0, -4], q: vec![-1, 0, 8] });
        let z: f64 = 10.0;
        let (h0, h1) = specfun::h01(z);
        let eval = |v: &[i128]| v.iter().rev().fold(0.0, |acc, &x| acc / z + x as f64);
        let h3 = eval(&l3.p) * h0 + eval(&l3.q) * h1;
        assert!((h3 - specfun::hankel1(3, z).unwrap()).norm() < 1e-12);
        assert!(lommel_karp_oracle(200, 300).is_err());
    }

    #[test]
    fn lommel_parity_structure() {
        for m in 0..12u32 {
            let l = lommel_karp_oracle(m, 20).unwrap();
            for (j, &v) in l.p.iter().enumerate() {
                assert!(v == 0 || (j as u32 + m).is_multiple_of(2));
            }
            for (j, &v) in l.q.iter().enumerate() {
                assert!(v == 0 || (j as u32 + m) % 2 == 1);
            }
        }
    }

    #[test]
    fn float_table_matches_exact() {
        let t = lommel_table(9, 12);
        for (m, (p, q)) in t.iter().enumerate() {
            let l = lommel_karp_oracle(m as u32, 12).unwrap();
            for j in 0..=12 {
                assert_eq!(p[j], *l.p.get(j).unwrap_or(&0) as f64);
                assert_eq!(q[j], *l.q.get(j).unwrap_or(&0) as f64);
            }
        }
    }

    #[test]
    fn order_mismatch() {
        assert!(karp_from_farfield(&ff(vec![c(1.0, 0.0)], vec![])).is_err());
        let kc = karp_from_farfield(&ff(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)])).unwrap();
        assert!(matches!(farfield_from_karp(&kc, 2), Err(Error::OrderMismatch(_))));
        assert!(eval_karp(&kc, 0.0, Orientation::Plus).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let z = vec![c(0.0, 0.0); 4];
        let kc = karp_from_farfield(&ff(z.clone(), z.clone())).unwrap();
        let back = farfield_from_karp(&kc, 3).unwrap();
        assert!(back.f_plus.iter().chain(&back.f_minus).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn json_keys() {
        let kc = karp_from_farfield(&ff(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)])).unwrap();
        let v = serde_json::to_value(&kc).unwrap();
        for k in ["kappa", "phi", "q", "F", "G"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
