//! Quadrature plumbing: adaptive Gauss-Kronrod (7/15) for real and complex
//! integrands, and Gauss-Legendre nodes.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Scalar types the integrators accept.
pub trait Field: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn abs(self) -> f64;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Nodes of the 15-point Kronrod rule on [a, b], in increasing order.
pub fn gk15_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    for k in 0..7 {
        x[k] = c - h * XGK[k];
        x[14 - k] = c + h * XGK[k];
    }
    x[7] = c;
    x
}

/// Combine integrand values at [`gk15_nodes`] into (Kronrod estimate, error
/// estimate).
pub fn gk15_combine<T: Field>(a: f64, b: f64, f: &[T; 15]) -> (T, f64) {
    let h = 0.5 * (b - a);
    let mut k = f[7] * WGK[7];
    let mut g = f[7] * WG[3];
    for j in 0..7 {
        let pair = f[j] + f[14 - j];
        k = k + pair * WGK[j];
        if j % 2 == 1 {
            g = g + pair * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).abs())
}

pub fn gk15<T: Field, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let xs = gk15_nodes(a, b);
    let mut v = [T::zero(); 15];
    for (vi, x) in v.iter_mut().zip(xs) {
        *vi = f(x);
    }
    gk15_combine(a, b, &v)
}

const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive bisection with a per-panel absolute tolerance scaled by the
/// panel's share of the interval.
pub fn adaptive<T: Field, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> QuadResult<T> {
    let mut total = T::zero();
    let mut err = 0.0;
    let mut ok = true;
    let mut stack = vec![(a, b, 0u32)];
    let len = (b - a).abs();
    let mut panels = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi);
        panels += 1;
        let budget = tol * ((hi - lo).abs() / len).max(1e-3);
        // Below this the error estimate is rounding noise.
        let floor = 64.0 * f64::EPSILON * v.abs();
        if e <= budget || e <= floor || depth >= max_depth || panels >= MAX_PANELS {
            if e > budget && e > floor {
                ok = false;
            }
            total = total + v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    QuadResult { value: total, error: err, converged: ok }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|t| h * t).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 60);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn complex_integrand() {
        let r = adaptive(|t: f64| Complex64::new(0.0, t).exp(), 0.0, std::f64::consts::PI, 1e-13, 40);
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }
}
