//! Quadrature: adaptive Simpson for scalar and matrix integrands, and
//! cumulative rules over sampled data.

use crate::linops::{max_abs, r, CMatrix};

/// Values that adaptive Simpson can combine.
pub trait Integrand: Clone {
    fn lin(a: &Self, wa: f64, b: &Self, wb: f64) -> Self;
    fn size(&self) -> f64;
}

impl Integrand for f64 {
    fn lin(a: &Self, wa: f64, b: &Self, wb: f64) -> Self {
        a * wa + b * wb
    }
    fn size(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for CMatrix {
    fn lin(a: &Self, wa: f64, b: &Self, wb: f64) -> Self {
        a * r(wa) + b * r(wb)
    }
    fn size(&self) -> f64 {
        max_abs(self)
    }
}

const MAX_DEPTH: u32 = 48;

fn simpson<T: Integrand>(fa: &T, fm: &T, fb: &T, h: f64) -> T {
    // h/6 (fa + 4 fm + fb)
    let ends = T::lin(fa, 1.0, fb, 1.0);
    T::lin(&ends, h / 6.0, fm, 4.0 * h / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Integrand, F: Fn(f64) -> T>(
    f: &F,
    a: f64,
    b: f64,
    fa: &T,
    fm: &T,
    fb: &T,
    whole: &T,
    tol: f64,
    depth: u32,
) -> T {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, &flm, fm, m - a);
    let right = simpson(fm, &frm, fb, b - m);
    let both = T::lin(&left, 1.0, &right, 1.0);
    let diff = T::lin(&both, 1.0, whole, -1.0);
    if depth >= MAX_DEPTH || diff.size() <= 15.0 * tol {
        return T::lin(&both, 1.0, &diff, 1.0 / 15.0);
    }
    let l = recurse(f, a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1);
    let rr = recurse(f, m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1);
    T::lin(&l, 1.0, &rr, 1.0)
}

/// ∫_a^b f with absolute tolerance `tol`.
pub fn adaptive_simpson<T: Integrand, F: Fn(f64) -> T>(f: F, a: f64, b: f64, tol: f64) -> T {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(&fa, &fm, &fb, b - a);
    recurse(&f, a, b, &fa, &fm, &fb, &whole, tol, 0)
}

/// Running integrals ∫_{t_0}^{t_k} f over a sorted grid, one adaptive panel per interval.
pub fn cumulative_simpson<T: Integrand, F: Fn(f64) -> T>(f: F, ts: &[f64], tol: f64, zero: T) -> Vec<T> {
    let span = (ts[ts.len() - 1] - ts[0]).abs().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = zero;
    out.push(acc.clone());
    for w in ts.windows(2) {
        let piece = adaptive_simpson(&f, w[0], w[1], tol * (w[1] - w[0]).abs() / span);
        acc = T::lin(&acc, 1.0, &piece, 1.0);
        out.push(acc.clone());
    }
    out
}

/// Running trapezoid integrals of sampled values.
pub fn cumulative_trapezoid(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..ys.len() {
        acc += 0.5 * (ts[k] - ts[k - 1]) * (ys[k] + ys[k - 1]);
        out.push(acc);
    }
    out
}

/// Running upper Riemann sums using the larger endpoint of each interval.
pub fn cumulative_endpoint_max(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..ys.len() {
        acc += (ts[k] - ts[k - 1]) * ys[k].max(ys[k - 1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::c;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_scalar() {
        let v: f64 = adaptive_simpson(|t: f64| t.cos(), 0.0, 5.0, 1e-13);
        assert_abs_diff_eq!(v, 5f64.sin(), epsilon = 1e-12);
        let p: f64 = adaptive_simpson(|t: f64| t * t * t, -1.0, 2.0, 1e-12);
        assert_abs_diff_eq!(p, 3.75, epsilon = 1e-14);
    }

    #[test]
    fn simpson_matrix() {
        let m = adaptive_simpson(
            |t: f64| CMatrix::from_row_slice(1, 2, &[c(t.sin(), 0.0), c(0.0, t.exp())]),
            0.0,
            1.0,
            1e-12,
        );
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0 - 1f64.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(m[(0, 1)].im, 1f64.exp() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cumulative_rules() {
        let ts: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let cs = cumulative_simpson(|t: f64| t.cos(), &ts, 1e-12, 0.0);
        for (t, v) in ts.iter().zip(&cs) {
            assert_abs_diff_eq!(*v, t.sin(), epsilon = 1e-12);
        }
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let tr = cumulative_trapezoid(&ts, &ys);
        assert_abs_diff_eq!(tr[100], 25.0, epsilon = 1e-12);
        let up = cumulative_endpoint_max(&ts, &ys);
        assert!(up[100] > 25.0);
        let ys2: Vec<f64> = ts.iter().map(|t| (3.0 * t).sin().abs()).collect();
        let (a, b) = (cumulative_trapezoid(&ts, &ys2), cumulative_endpoint_max(&ts, &ys2));
        assert!(a.iter().zip(&b).all(|(x, y)| y >= x));
    }
}
