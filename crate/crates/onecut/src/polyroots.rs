//! Closed-form cubic and quartic root finders with discriminants, and a
//! companion-matrix oracle for cross-checking them.
//!
//! Cubics are solved by Cardano's formula. When all coefficients are real
//! and the cubic has one real root, the real cube root of a real argument is
//! used, which is the branch the density formula in [`crate::curve`] relies
//! on. Quartics go through Ferrari's resolvent. Every root gets one Newton
//! polish step, kept only if it lowers the residual.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

type C64 = Complex64;

/// Roots closer than this (relative) are flagged as a multiple root.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("DegreeDegenerate: leading coefficient is zero")]
    DegreeDegenerate,
    #[error("DegreeZero: a constant polynomial has no roots")]
    DegreeZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub c3: C64,
    pub c2: C64,
    pub c1: C64,
    pub c0: C64,
}

impl CubicCoeffs {
    pub fn new(c3: C64, c2: C64, c1: C64, c0: C64) -> Self {
        CubicCoeffs { c3, c2, c1, c0 }
    }

    pub fn real(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        CubicCoeffs::new(c3.into(), c2.into(), c1.into(), c0.into())
    }

    pub fn eval(&self, x: C64) -> C64 {
        ((self.c3 * x + self.c2) * x + self.c1) * x + self.c0
    }

    pub fn deriv(&self, x: C64) -> C64 {
        (self.c3 * 3.0 * x + self.c2 * 2.0) * x + self.c1
    }

    pub fn scale(&self) -> f64 {
        [self.c3, self.c2, self.c1, self.c0]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn is_real(&self) -> bool {
        self.c3.im == 0.0 && self.c2.im == 0.0 && self.c1.im == 0.0 && self.c0.im == 0.0
    }

    /// 18abcd - 4b^3 d + b^2 c^2 - 4ac^3 - 27a^2 d^2.
    pub fn discriminant(&self) -> C64 {
        let (a, b, c, d) = (self.c3, self.c2, self.c1, self.c0);
        a * b * c * d * 18.0 - b * b * b * d * 4.0 + b * b * c * c
            - a * c * c * c * 4.0
            - a * a * d * d * 27.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub q4: f64,
    pub q3: f64,
    pub q2: f64,
    pub q1: f64,
    pub q0: f64,
}

impl QuarticCoeffs {
    pub fn new(q4: f64, q3: f64, q2: f64, q1: f64, q0: f64) -> Self {
        QuarticCoeffs { q4, q3, q2, q1, q0 }
    }

    pub fn eval(&self, x: C64) -> C64 {
        (((x * self.q4 + self.q3) * x + self.q2) * x + self.q1) * x + self.q0
    }

    pub fn deriv(&self, x: C64) -> C64 {
        ((x * (4.0 * self.q4) + 3.0 * self.q3) * x + 2.0 * self.q2) * x + self.q1
    }

    pub fn scale(&self) -> f64 {
        [self.q4, self.q3, self.q2, self.q1, self.q0]
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max)
    }

    /// Discriminant from the coefficient formula. Suffers cancellation when
    /// the quartic is close to having a double root; [`solve_quartic`]
    /// reports the product form instead.
    pub fn discriminant_formula(&self) -> f64 {
        let (a, b, c, d, e) = (self.q4, self.q3, self.q2, self.q1, self.q0);
        256.0 * a.powi(3) * e.powi(3) - 192.0 * a * a * b * d * e * e
            - 128.0 * a * a * c * c * e * e
            + 144.0 * a * a * c * d * d * e
            - 27.0 * a * a * d.powi(4)
            + 144.0 * a * b * b * c * e * e
            - 6.0 * a * b * b * d * d * e
            - 80.0 * a * b * c * c * d * e
            + 18.0 * a * b * c * d.powi(3)
            + 16.0 * a * c.powi(4) * e
            - 4.0 * a * c.powi(3) * d * d
            - 27.0 * b.powi(4) * e * e
            + 18.0 * b.powi(3) * c * d * e
            - 4.0 * b.powi(3) * d.powi(3)
            - 4.0 * b * b * c.powi(3) * e
            + b * b * c * c * d * d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<C64>,
    /// `multiple[i]` is set when root `i` lies within the multiplicity
    /// tolerance of another root.
    pub multiple: Vec<bool>,
    pub discriminant: C64,
}

impl RootSet {
    fn build(roots: Vec<C64>, lead: C64) -> Self {
        let multiple = multiplicity_flags(&roots);
        let discriminant = product_discriminant(&roots, lead);
        RootSet { roots, multiple, discriminant }
    }

    pub fn has_multiple(&self) -> bool {
        self.multiple.iter().any(|&m| m)
    }

    /// Number of roots with exactly zero imaginary part. Solvers for real
    /// polynomials snap real roots onto the axis, so this is a clean count.
    pub fn real_count(&self) -> usize {
        self.roots.iter().filter(|r| r.im == 0.0).count()
    }
}

fn multiplicity_flags(roots: &[C64]) -> Vec<bool> {
    let mut flags = vec![false; roots.len()];
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let s = 1f64.max(roots[i].norm()).max(roots[j].norm());
            if (roots[i] - roots[j]).norm() <= MULTIPLICITY_TOL * s {
                flags[i] = true;
                flags[j] = true;
            }
        }
    }
    flags
}

/// lead^(2n-2) * prod_{i<j} (r_i - r_j)^2
fn product_discriminant(roots: &[C64], lead: C64) -> C64 {
    let n = roots.len() as i32;
    let mut d = lead.powi(2 * n - 2);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let diff = roots[i] - roots[j];
            d *= diff * diff;
        }
    }
    d
}

fn polish<F, G>(x: C64, f: F, df: G) -> C64
where
    F: Fn(C64) -> C64,
    G: Fn(C64) -> C64,
{
    let fx = f(x);
    let dfx = df(x);
    if dfx == C64::new(0.0, 0.0) || fx == C64::new(0.0, 0.0) {
        return x;
    }
    let y = x - fx / dfx;
    if y.is_finite() && f(y).norm() < fx.norm() {
        y
    } else {
        x
    }
}

/// Cube root of a complex number on the principal branch, except that real
/// arguments get their real cube root.
fn cbrt_c(w: C64) -> C64 {
    if w.im == 0.0 {
        C64::new(w.re.cbrt(), 0.0)
    } else {
        w.powf(1.0 / 3.0)
    }
}

pub fn solve_cubic(c: &CubicCoeffs) -> Result<RootSet, PolyError> {
    if c.c3 == C64::new(0.0, 0.0) {
        return Err(PolyError::DegreeDegenerate);
    }
    let b = c.c2 / c.c3;
    let cc = c.c1 / c.c3;
    let d = c.c0 / c.c3;
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = b * b * b * (2.0 / 27.0) - b * cc / 3.0 + d;
    let mut roots = if c.is_real() {
        real_depressed_cubic(p.re, q.re)
    } else {
        complex_depressed_cubic(p, q)
    };
    for r in roots.iter_mut() {
        *r -= shift;
    }
    if c.is_real() {
        // Keep exact conjugate structure through the polish.
        for r in roots.iter_mut() {
            if r.im == 0.0 {
                let x = polish(*r, |x| c.eval(x), |x| c.deriv(x));
                *r = C64::new(x.re, 0.0);
            }
        }
        if roots[1].im != 0.0 {
            let z = polish(roots[1], |x| c.eval(x), |x| c.deriv(x));
            roots[1] = z;
            roots[2] = z.conj();
        }
    } else {
        for r in roots.iter_mut() {
            *r = polish(*r, |x| c.eval(x), |x| c.deriv(x));
        }
    }
    Ok(RootSet::build(roots.to_vec(), c.c3))
}

/// Roots of t^3 + p t + q with real p, q. With one real root it comes first
/// and the complex pair follows, upper half plane member first.
fn real_depressed_cubic(p: f64, q: f64) -> [C64; 3] {
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if p == 0.0 && q == 0.0 {
        return [C64::new(0.0, 0.0); 3];
    }
    if disc > 0.0 {
        let sd = disc.sqrt();
        // Take the sign that avoids cancellation, recover the other factor
        // from u v = -p/3.
        let w = if q > 0.0 { -q / 2.0 - sd } else { -q / 2.0 + sd };
        let u = w.cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let re = -(u + v) / 2.0;
        let im = 3f64.sqrt() / 2.0 * (u - v).abs();
        [
            C64::new(u + v, 0.0),
            C64::new(re, im),
            C64::new(re, -im),
        ]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        let mut t = [
            2.0 * r * phi.cos(),
            2.0 * r * (phi - tau).cos(),
            2.0 * r * (phi - 2.0 * tau).cos(),
        ];
        t.sort_by(|a, b| a.total_cmp(b));
        [t[0].into(), t[1].into(), t[2].into()]
    }
}

fn complex_depressed_cubic(p: C64, q: C64) -> [C64; 3] {
    let sd = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let w1 = -q / 2.0 + sd;
    let w2 = -q / 2.0 - sd;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let u = cbrt_c(w);
    let v = if u.norm() > 0.0 { -p / (u * 3.0) } else { C64::new(0.0, 0.0) };
    let om = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let om2 = om.conj();
    [u + v, om * u + om2 * v, om2 * u + om * v]
}

fn solve_quadratic(a: C64, b: C64, c: C64) -> [C64; 2] {
    let sd = (b * b - a * c * 4.0).sqrt();
    // Choose the sign that avoids cancellation.
    let s = if (b.conj() * sd).re >= 0.0 { b + sd } else { b - sd };
    if s.norm() == 0.0 {
        return [C64::new(0.0, 0.0); 2];
    }
    let q = -s / 2.0;
    [q / a, c / q]
}

pub fn solve_quartic(q: &QuarticCoeffs) -> Result<RootSet, PolyError> {
    if q.q4 == 0.0 {
        return Err(PolyError::DegreeDegenerate);
    }
    let b = q.q3 / q.q4;
    let c = q.q2 / q.q4;
    let d = q.q1 / q.q4;
    let e = q.q0 / q.q4;
    let shift = b / 4.0;
    let p = c - 3.0 * b * b / 8.0;
    let qq = d - b * c / 2.0 + b * b * b / 8.0;
    let r = e - b * d / 4.0 + b * b * c / 16.0 - 3.0 * b.powi(4) / 256.0;
    let one = C64::new(1.0, 0.0);

    let ys: [C64; 4] = if qq.abs() <= 1e-14 * (1.0 + p.abs() + r.abs().sqrt()) {
        let [w1, w2] = solve_quadratic(one, p.into(), r.into());
        let (s1, s2) = (w1.sqrt(), w2.sqrt());
        [s1, -s1, s2, -s2]
    } else {
        // Largest positive root of 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2.
        let res = solve_cubic(&CubicCoeffs::real(8.0, 8.0 * p, 2.0 * p * p - 8.0 * r, -qq * qq))?;
        let m = res
            .roots
            .iter()
            .filter(|z| z.im == 0.0 && z.re > 0.0)
            .map(|z| z.re)
            .fold(f64::NAN, f64::max);
        let m = if m.is_nan() {
            // Rounding pushed the positive root off the axis; take the
            // root of largest modulus.
            res.roots.iter().fold(C64::new(0.0, 0.0), |acc, z| {
                if z.norm() > acc.norm() {
                    *z
                } else {
                    acc
                }
            })
        } else {
            C64::new(m, 0.0)
        };
        let s = (m * 2.0).sqrt();
        let k = C64::from(p / 2.0) + m;
        let t = C64::from(qq) / (s * 2.0);
        let [y1, y2] = solve_quadratic(one, -s, k + t);
        let [y3, y4] = solve_quadratic(one, s, k - t);
        [y1, y2, y3, y4]
    };

    let f = |x: C64| q.eval(x);
    let df = |x: C64| q.deriv(x);
    let mut xs: Vec<C64> = ys.iter().map(|y| polish(*y - shift, f, df)).collect();
    xs = conjugate_cleanup(xs, &f, &df);
    Ok(RootSet::build(xs, C64::new(q.q4, 0.0)))
}

/// Snap nearly real roots of a real polynomial onto the axis and force
/// complex roots into exact conjugate pairs. Output: real roots ascending,
/// then pairs (upper half plane member first) ordered by real part.
fn conjugate_cleanup<F, G>(xs: Vec<C64>, f: &F, df: &G) -> Vec<C64>
where
    F: Fn(C64) -> C64,
    G: Fn(C64) -> C64,
{
    let n = xs.len();
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for x in xs {
        if x.im.abs() <= 1e-13 * (1.0 + x.re.abs()) {
            real.push(x.re);
        } else if x.im > 0.0 {
            upper.push(x);
        } else {
            lower.push(x);
        }
    }
    // An unpaired complex root means rounding split a near-real pair
    // unevenly; fall back to treating the leftovers as real.
    while upper.len() > lower.len() {
        let z = upper.pop().unwrap();
        real.push(z.re);
    }
    while lower.len() > upper.len() {
        let z = lower.pop().unwrap();
        real.push(z.re);
    }
    let mut out: Vec<C64> = Vec::with_capacity(n);
    real.sort_by(|a, b| a.total_cmp(b));
    for r in real {
        let x = polish(C64::new(r, 0.0), f, df);
        out.push(C64::new(x.re, 0.0));
    }
    let mut pairs = Vec::new();
    let mut lower_left = lower;
    for u in upper {
        let (k, _) = lower_left
            .iter()
            .enumerate()
            .map(|(k, l)| (k, (u - l.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let l = lower_left.swap_remove(k);
        let z = (u + l.conj()) / 2.0;
        pairs.push(polish(z, f, df));
    }
    pairs.sort_by(|a, b| a.re.total_cmp(&b.re));
    for z in pairs {
        out.push(z);
        out.push(z.conj());
    }
    out
}

/// Roots as eigenvalues of the companion matrix. Coefficients are ordered
/// from the leading term down. Used as an independent oracle only.
pub fn companion_roots(coeffs: &[C64]) -> Result<RootSet, PolyError> {
    if coeffs.len() < 2 {
        return Err(PolyError::DegreeZero);
    }
    let lead = coeffs[0];
    if lead == C64::new(0.0, 0.0) {
        return Err(PolyError::DegreeDegenerate);
    }
    let n = coeffs.len() - 1;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let eig = m
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular");
    let p = |x: C64| coeffs.iter().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
    let dp = |x: C64| {
        coeffs[..n]
            .iter()
            .enumerate()
            .fold(C64::new(0.0, 0.0), |acc, (k, c)| acc * x + c * (n - k) as f64)
    };
    let roots: Vec<C64> = eig.iter().map(|z| polish(*z, p, dp)).collect();
    Ok(RootSet::build(roots, lead))
}

pub fn companion_roots_real(coeffs: &[f64]) -> Result<RootSet, PolyError> {
    let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
    companion_roots(&c)
}
