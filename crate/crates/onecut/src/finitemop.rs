//! Multiple Laguerre polynomials of types I and II for the weights
//! x^{M-N} e^{-Mx} and x^{M-N} e^{-Mx/a}, and the finite-N correlation
//! kernel built from them, in MPFR arithmetic.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer};
use thiserror::Error;

pub const DEFAULT_PREC: u32 = 256;
/// Largest total degree n1 + n2 accepted by `build_mops`.
pub const MAX_DEGREE: u32 = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiniteMopError {
    #[error("InvalidWeight: {0}")]
    InvalidWeight(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("SingularMomentMatrix: the moment system for (n1, n2) = ({n1}, {n2}) is singular at {prec} bits; raise the precision")]
    SingularMomentMatrix { n1: u32, n2: u32, prec: u32 },
    #[error("Overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, FiniteMopError>;

/// Sizes (M, N, N1) and the second covariance eigenvalue a.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightPair {
    pub m: u32,
    pub n: u32,
    pub n1: u32,
    pub a: f64,
}

impl WeightPair {
    pub fn new(m: u32, n: u32, n1: u32, a: f64) -> Result<Self> {
        if n == 0 || m < n {
            return Err(FiniteMopError::InvalidWeight(format!("need M ≥ N ≥ 1, got M = {m}, N = {n}")));
        }
        if n1 > n {
            return Err(FiniteMopError::InvalidWeight(format!("N1 = {n1} exceeds N = {n}")));
        }
        if !(a > 0.0 && a.is_finite()) || a == 1.0 {
            return Err(FiniteMopError::InvalidWeight(format!("a = {a} must be positive and different from 1")));
        }
        Ok(WeightPair { m, n, n1, a })
    }

    pub fn n0(&self) -> u32 {
        self.n - self.n1
    }

    /// Power M - N of the common factor x^{M-N}.
    pub fn exponent(&self) -> u32 {
        self.m - self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    One,
    A,
}

/// ∫_0^∞ x^{k+M-N} e^{-Mx/s} dx = s^{p+1} p! / M^{p+1} with p = k + M - N.
pub fn moment(w: &WeightPair, scale: Scale, k: u32, prec: u32) -> Result<Float> {
    let p = k + w.exponent();
    let fact = Integer::from(Integer::factorial(p));
    let s = match scale {
        Scale::One => Float::with_val(prec, 1),
        Scale::A => Float::with_val(prec, w.a),
    };
    let ratio = s / w.m;
    let v = Float::with_val(prec, &fact) * ratio.pow(p + 1);
    if !v.is_normal() {
        return Err(FiniteMopError::Overflow(format!("moment of order {p} leaves the exponent range at {prec} bits")));
    }
    Ok(v)
}

/// Moments μ_k for k < count for both weights.
fn moment_table(w: &WeightPair, count: u32, prec: u32) -> Result<(Vec<Float>, Vec<Float>)> {
    let one = (0..count).map(|k| moment(w, Scale::One, k, prec)).collect::<Result<Vec<_>>>()?;
    let a = (0..count).map(|k| moment(w, Scale::A, k, prec)).collect::<Result<Vec<_>>>()?;
    Ok((one, a))
}

/// Gaussian elimination with partial pivoting. None if a pivot falls below
/// the working precision relative to the matrix size.
fn solve(mut a: Vec<Vec<Float>>, mut b: Vec<Float>, prec: u32) -> Option<Vec<Float>> {
    let n = b.len();
    let norm = a.iter().flatten().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let tiny = Float::with_val(prec, norm) >> (prec as i32 - 16);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].cmp_abs(&a[j][c]).unwrap())?;
        if a[p][c].cmp_abs(&tiny) != Some(std::cmp::Ordering::Greater) {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = Float::with_val(prec, &a[r][c] / &a[c][c]);
            for k in c..n {
                let t = Float::with_val(prec, &f * &a[c][k]);
                a[r][k] -= t;
            }
            let t = Float::with_val(prec, &f * &b[c]);
            b[r] -= t;
        }
    }
    let mut x = vec![Float::new(prec); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for k in r + 1..n {
            s -= Float::with_val(prec, &a[r][k] * &x[k]);
        }
        x[r] = s / &a[r][r];
    }
    Some(x)
}

/// Type II polynomial L_{n1,n2} (monic, ascending coefficients), the type-I
/// pair (A^1, A^a) of Q_{n1,n2} = A^1 e^{-Mx} + A^a e^{-Mx/a}, and the
/// normalisation constants h^(1), h^(2).
#[derive(Debug, Clone)]
pub struct MopSet {
    pub n1: u32,
    pub n2: u32,
    pub prec: u32,
    pub l: Vec<Float>,
    pub a1: Vec<Float>,
    pub aa: Vec<Float>,
    pub h1: Float,
    pub h2: Float,
    /// Largest relative residual over all orthogonality conditions.
    pub residual: f64,
}

impl MopSet {
    pub fn degree(&self) -> u32 {
        self.n1 + self.n2
    }

    pub fn eval_l(&self, x: &Float) -> Float {
        horner(&self.l, x, self.prec)
    }

    pub fn eval_l_prime(&self, x: &Float) -> Float {
        let d: Vec<Float> = self.l.iter().enumerate().skip(1).map(|(k, c)| Float::with_val(self.prec, c * k as u32)).collect();
        horner(&d, x, self.prec)
    }

    /// Q_{n1,n2}(x) for given e^{-Mx}, e^{-Mx/a}.
    pub fn eval_q(&self, x: &Float, e1: &Float, ea: &Float) -> Float {
        let p = self.prec;
        Float::with_val(p, horner(&self.a1, x, p) * e1) + Float::with_val(p, horner(&self.aa, x, p) * ea)
    }
}

fn horner(c: &[Float], x: &Float, prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for v in c.iter().rev() {
        acc *= x;
        acc += v;
    }
    acc
}

/// |Σ t_j| / Σ |t_j|, with 0 for an empty or all-zero sum.
fn relative(terms: impl Iterator<Item = Float>, target: &Float, prec: u32) -> f64 {
    let mut s = Float::with_val(prec, -target);
    let mut mag = Float::with_val(prec, target.abs_ref());
    for t in terms {
        mag += Float::with_val(prec, t.abs_ref());
        s += t;
    }
    if mag.is_zero() {
        return 0.0;
    }
    (s.abs() / mag).to_f64()
}

pub fn build_mops(w: &WeightPair, n1: u32, n2: u32, prec: u32) -> Result<MopSet> {
    let n = n1 + n2;
    if n > MAX_DEGREE {
        return Err(FiniteMopError::InvalidArgument(format!("n1 + n2 = {n} exceeds {MAX_DEGREE}")));
    }
    let (mu1, mua) = moment_table(w, 2 * n + 1, prec)?;
    let singular = FiniteMopError::SingularMomentMatrix { n1, n2, prec };
    let zero = Float::new(prec);

    // Type II: Σ_j l_j μ_{i+j} = 0 for the n1 + n2 conditions, l_n = 1.
    let rows: Vec<(&Vec<Float>, u32)> = (0..n1).map(|i| (&mu1, i)).chain((0..n2).map(|i| (&mua, i))).collect();
    let mat: Vec<Vec<Float>> = rows.iter().map(|(mu, i)| (0..n).map(|j| mu[(i + j) as usize].clone()).collect()).collect();
    let rhs: Vec<Float> = rows.iter().map(|(mu, i)| Float::with_val(prec, -&mu[(i + n) as usize])).collect();
    let mut l = solve(mat, rhs, prec).ok_or(singular.clone())?;
    l.push(Float::with_val(prec, 1));

    // Type I: Σ_j α_j μ¹_{i+j} + Σ_j β_j μᵃ_{i+j} = δ_{i,n-1}.
    let (a1, aa) = if n == 0 {
        (vec![], vec![])
    } else {
        let mat: Vec<Vec<Float>> = (0..n)
            .map(|i| {
                (0..n1)
                    .map(|j| mu1[(i + j) as usize].clone())
                    .chain((0..n2).map(|j| mua[(i + j) as usize].clone()))
                    .collect()
            })
            .collect();
        let rhs: Vec<Float> = (0..n).map(|i| Float::with_val(prec, (i + 1 == n) as u32)).collect();
        let mut sol = solve(mat, rhs, prec).ok_or(singular.clone())?;
        let aa = sol.split_off(n1 as usize);
        (sol, aa)
    };

    let pair = |mu: &[Float], shift: u32| -> Float {
        let mut s = Float::new(prec);
        for (j, c) in l.iter().enumerate() {
            s += Float::with_val(prec, c * &mu[j + shift as usize]);
        }
        s
    };
    let h1 = pair(&mu1, n1);
    let h2 = pair(&mua, n2);
    if h1.is_zero() || h2.is_zero() {
        return Err(singular);
    }

    let mut residual = 0.0f64;
    for (mu, i) in &rows {
        let r = relative(l.iter().enumerate().map(|(j, c)| Float::with_val(prec, c * &mu[j + *i as usize])), &zero, prec);
        residual = residual.max(r);
    }
    for i in 0..n {
        let terms = a1
            .iter()
            .enumerate()
            .map(|(j, c)| Float::with_val(prec, c * &mu1[(i + j as u32) as usize]))
            .chain(aa.iter().enumerate().map(|(j, c)| Float::with_val(prec, c * &mua[(i + j as u32) as usize])));
        let target = Float::with_val(prec, (i + 1 == n) as u32);
        residual = residual.max(relative(terms, &target, prec));
    }
    let bound = 10f64.powf(-(prec as f64) / 5.0);
    if !(residual <= bound) {
        return Err(singular);
    }
    Ok(MopSet { n1, n2, prec, l, a1, aa, h1, h2, residual })
}

/// One term c · L(x) Q(y) of the Christoffel-Darboux numerator.
#[derive(Debug, Clone)]
struct CdTerm {
    coef: Float,
    l: MopSet,
    q: MopSet,
}

/// The correlation kernel K_{M,N} assembled from five MOP systems.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    pub w: WeightPair,
    pub prec: u32,
    terms: Vec<CdTerm>,
}

impl FiniteKernel {
    pub fn new(w: &WeightPair, prec: u32) -> Result<Self> {
        let (n0, n1) = (w.n0(), w.n1);
        let mut idx = vec![(n0, n1), (n0 + 1, n1), (n0, n1 + 1)];
        if n0 > 0 {
            idx.push((n0 - 1, n1));
        }
        if n1 > 0 {
            idx.push((n0, n1 - 1));
        }
        let sets = idx.par_iter().map(|&(i, j)| build_mops(w, i, j, prec)).collect::<Result<Vec<_>>>()?;
        let get = |i: u32, j: u32| sets.iter().find(|s| s.n1 == i && s.n2 == j).expect("built above").clone();
        let centre = get(n0, n1);
        let mut terms = vec![CdTerm { coef: Float::with_val(prec, 1), l: centre.clone(), q: centre.clone() }];
        if n0 > 0 {
            let lower = get(n0 - 1, n1);
            let coef = -Float::with_val(prec, &centre.h1 / &lower.h1);
            terms.push(CdTerm { coef, l: lower, q: get(n0 + 1, n1) });
        }
        if n1 > 0 {
            let lower = get(n0, n1 - 1);
            let coef = -Float::with_val(prec, &centre.h2 / &lower.h2);
            terms.push(CdTerm { coef, l: lower, q: get(n0, n1 + 1) });
        }
        Ok(FiniteKernel { w: *w, prec, terms })
    }

    /// Largest orthogonality residual over the systems used.
    pub fn residual(&self) -> f64 {
        self.terms.iter().map(|t| t.l.residual.max(t.q.residual)).fold(0.0, f64::max)
    }

    fn exps(&self, y: &Float) -> (Float, Float) {
        let p = self.prec;
        let m = -Float::with_val(p, y * self.w.m);
        let e1 = Float::with_val(p, m.exp_ref());
        let ea = Float::with_val(p, m / self.w.a).exp();
        (e1, ea)
    }

    /// K(x, y) in working precision.
    pub fn eval_big(&self, x: f64, y: f64) -> Result<Float> {
        if !(x > 0.0 && y > 0.0) {
            return Err(FiniteMopError::InvalidArgument(format!("kernel needs x, y > 0, got ({x}, {y})")));
        }
        let p = self.prec;
        let (xb, yb) = (Float::with_val(p, x), Float::with_val(p, y));
        let (e1, ea) = self.exps(&yb);
        let mut num = Float::new(p);
        let ex = self.w.exponent();
        if x == y {
            // Numerator vanishes at x = y, so the kernel is its x-derivative.
            for t in &self.terms {
                let v = Float::with_val(p, t.l.eval_l_prime(&xb) * t.q.eval_q(&yb, &e1, &ea));
                num += Float::with_val(p, &t.coef * &v);
            }
            return Ok(num * Float::with_val(p, xb.pow(ex)));
        }
        for t in &self.terms {
            let v = Float::with_val(p, t.l.eval_l(&xb) * t.q.eval_q(&yb, &e1, &ea));
            num += Float::with_val(p, &t.coef * &v);
        }
        let pref = Float::with_val(p, &xb * &yb).sqrt().pow(ex);
        Ok(num * pref / Float::with_val(p, &xb - &yb))
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.eval_big(x, y)?.to_f64())
    }

    /// det(K(y_j, y_k)) for 1 ≤ m ≤ 6 points.
    pub fn correlation(&self, points: &[f64]) -> Result<f64> {
        let m = points.len();
        if !(1..=6).contains(&m) {
            return Err(FiniteMopError::InvalidArgument(format!("m = {m} points, expected 1 to 6")));
        }
        let mut a = Vec::with_capacity(m);
        for &yj in points {
            a.push(points.iter().map(|&yk| self.eval_big(yj, yk)).collect::<Result<Vec<_>>>()?);
        }
        Ok(det_big(a, self.prec).to_f64())
    }
}

/// Sup-norm distance between the rescaled kernel at x0 and the sine kernel
/// over |u|, |v| ≤ 1 on a `grid`×`grid` lattice, with `scale` = Mρ(x0).
///
/// K is only determined up to a conjugation g(x)/g(y), so the comparison is
/// made on the invariant √(K(x,y)K(y,x)) against |sin π(u−v)/π(u−v)|.
pub fn bulk_sine_distance(k: &FiniteKernel, x0: f64, scale: f64, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(FiniteMopError::InvalidArgument("grid needs at least 2 points".into()));
    }
    let pts: Vec<f64> = (0..grid).map(|i| -1.0 + 2.0 * i as f64 / (grid - 1) as f64).collect();
    let rows = pts
        .par_iter()
        .map(|&u| {
            let mut d = 0.0f64;
            for &v in &pts {
                let (x, y) = (x0 + u / scale, x0 + v / scale);
                let kk = k.eval(x, y)? * k.eval(y, x)? / (scale * scale);
                let inv = kk.signum() * kk.abs().sqrt();
                d = d.max((inv - crate::kernels::sine_kernel(u, v).abs()).abs());
            }
            Ok(d)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

fn det_big(mut a: Vec<Vec<Float>>, prec: u32) -> Float {
    let n = a.len();
    let mut det = Float::with_val(prec, 1);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].cmp_abs(&a[j][c]).unwrap()).unwrap();
        if a[p][c].is_zero() {
            return Float::new(prec);
        }
        if p != c {
            a.swap(c, p);
            det = -det;
        }
        det *= &a[c][c];
        for r in c + 1..n {
            let f = Float::with_val(prec, &a[r][c] / &a[c][c]);
            for k in c..n {
                let t = Float::with_val(prec, &f * &a[c][k]);
                a[r][k] -= t;
            }
        }
    }
    det
}

/// K_{M,N}(x, y) at the default precision. Builds the MOP systems on every
/// call; use `FiniteKernel` for repeated evaluation.
pub fn kernel_finite(w: &WeightPair, x: f64, y: f64) -> Result<f64> {
    FiniteKernel::new(w, DEFAULT_PREC)?.eval(x, y)
}

pub fn correlation_m(w: &WeightPair, points: &[f64]) -> Result<f64> {
    FiniteKernel::new(w, DEFAULT_PREC)?.correlation(points)
}
