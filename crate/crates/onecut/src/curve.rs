//! The spectral curve
//!
//! ```text
//! z a xi^3 + (A2 z + B2) xi^2 + (z + B1) xi + 1 = 0,
//! A2 = 1 + a,  B2 = a (1 - c),  B1 = 1 - c (1 - beta) + a (1 - c beta),
//! ```
//!
//! its three branches, the support of the limiting spectral law and the
//! limiting density.
//!
//! Branches are labelled by continuation from a far real anchor where they
//! are recognised from their behaviour at infinity:
//! `xi1 ~ -1/z`, `xi2 ~ -1 + c(1-beta)/z`, `xi3 ~ -1/a + c beta/z`.
//! `xi1` is the Stieltjes transform of the limit of the empirical law of
//! `X Sigma X^dagger / M`, which carries mass `1 - c` at the origin. The
//! density returned by [`density`] is the absolutely continuous part of that
//! law, so it integrates to `c`. Divide by `c` (see [`density_f`]) for the
//! eigenvalue law of `B_N`.

use crate::polyroots::{solve_cubic, solve_quartic, CubicCoeffs, PolyError, QuarticCoeffs};
use crate::quad;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error("BranchCollision: continuation stalled at z = {at}")]
    BranchCollision { at: C64 },
    #[error("NearBranchPoint: z = {z} is within 1e-10 of a branch point or of 0")]
    NearBranchPoint { z: C64 },
    #[error("CriticalParameters: the support quartic has a multiple root (delta = {delta:e})")]
    CriticalParameters { delta: f64 },
    #[error("OneCutRequired: delta = {delta:e} is not negative")]
    OneCutRequired { delta: f64 },
    #[error("ExtrapolationDiverged: edge estimates {coarse} and {fine} disagree")]
    ExtrapolationDiverged { coarse: f64, fine: f64 },
    #[error("Poly: {0}")]
    Poly(#[from] PolyError),
}

pub type Result<T> = std::result::Result<T, CurveError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteSizes {
    pub m: usize,
    pub n: usize,
    pub n1: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub a: f64,
    pub c: f64,
    pub beta: f64,
    pub sizes: Option<FiniteSizes>,
}

impl EnsembleParams {
    pub fn new(a: f64, c: f64, beta: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(CurveError::InvalidParams(format!("a must be positive, got {a}")));
        }
        if (a - 1.0).abs() < 1e-12 {
            return Err(CurveError::InvalidParams(
                "a must differ from 1 (use beta -> 0 or 1 for the single-eigenvalue case)".into(),
            ));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(CurveError::InvalidParams(format!("c must lie in (0,1), got {c}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(CurveError::InvalidParams(format!("beta must lie in (0,1), got {beta}")));
        }
        Ok(EnsembleParams { a, c, beta, sizes: None })
    }

    /// Parameters read off finite sizes: c = N/M, beta = N1/N.
    pub fn from_sizes(a: f64, m: usize, n: usize, n1: usize) -> Result<Self> {
        if m == 0 || n == 0 || n > m {
            return Err(CurveError::InvalidParams(format!("need 0 < N <= M, got M={m} N={n}")));
        }
        let mut p = EnsembleParams::new(a, n as f64 / m as f64, n1 as f64 / n as f64)?;
        p.sizes = Some(FiniteSizes { m, n, n1 });
        Ok(p)
    }

    /// Attach finite sizes, which must sit within O(1) of the limits.
    pub fn with_sizes(mut self, m: usize, n: usize, n1: usize) -> Result<Self> {
        if (self.c * m as f64 - n as f64).abs() > 1.0 || (self.beta * n as f64 - n1 as f64).abs() > 1.0 {
            return Err(CurveError::InvalidParams(format!(
                "sizes (M,N,N1)=({m},{n},{n1}) are not within O(1) of c={}, beta={}",
                self.c, self.beta
            )));
        }
        self.sizes = Some(FiniteSizes { m, n, n1 });
        Ok(self)
    }

    pub fn a2(&self) -> f64 {
        1.0 + self.a
    }

    pub fn b2(&self) -> f64 {
        self.a * (1.0 - self.c)
    }

    pub fn b1(&self) -> f64 {
        1.0 - self.c * (1.0 - self.beta) + self.a * (1.0 - self.c * self.beta)
    }

    pub fn curve_coeffs(&self, z: C64) -> CubicCoeffs {
        CubicCoeffs::new(z * self.a, z * self.a2() + self.b2(), z + self.b1(), C64::new(1.0, 0.0))
    }

    /// Residual of the curve equation at (z, xi).
    pub fn residual(&self, z: C64, xi: C64) -> C64 {
        self.curve_coeffs(z).eval(xi)
    }

    /// z(xi) = -1/xi + c(1-beta)/(1+xi) + c a beta/(1+a xi).
    pub fn z_of_xi(&self, xi: C64) -> C64 {
        let (a, c, b) = (self.a, self.c, self.beta);
        -1.0 / xi + c * (1.0 - b) / (xi + 1.0) + c * a * b / (xi * a + 1.0)
    }

    pub fn zprime(&self, xi: f64) -> f64 {
        let (a, c, b) = (self.a, self.c, self.beta);
        1.0 / (xi * xi) - c * (1.0 - b) / (1.0 + xi).powi(2) - c * a * a * b / (1.0 + a * xi).powi(2)
    }

    pub fn zsecond(&self, xi: f64) -> f64 {
        let (a, c, b) = (self.a, self.c, self.beta);
        -2.0 / xi.powi(3) + 2.0 * c * (1.0 - b) / (1.0 + xi).powi(3)
            + 2.0 * c * a.powi(3) * b / (1.0 + a * xi).powi(3)
    }

    /// Numerator of z'(xi) after clearing xi^2 (1+xi)^2 (1+a xi)^2.
    pub fn support_quartic(&self) -> QuarticCoeffs {
        let (a, c, b) = (self.a, self.c, self.beta);
        QuarticCoeffs::new(
            a * a * (1.0 - c),
            2.0 * (a * a * (1.0 - c * b) + a * (1.0 - c * (1.0 - b))),
            1.0 - c * (1.0 - b) + a * a * (1.0 - c * b) + 4.0 * a,
            2.0 * (1.0 + a),
            1.0,
        )
    }

    /// Discriminant in xi of the curve at z.
    pub fn d3(&self, z: f64) -> f64 {
        let a3 = self.a * z;
        let a2 = self.a2() * z + self.b2();
        let a1 = z + self.b1();
        let a0 = 1.0;
        18.0 * a3 * a2 * a1 * a0 - 4.0 * a2.powi(3) * a0 + a2 * a2 * a1 * a1
            - 4.0 * a3 * a1.powi(3)
            - 27.0 * a3 * a3 * a0 * a0
    }

    /// D3 as a polynomial in z, highest degree first.
    pub fn d3_poly(&self) -> [f64; 5] {
        // Expand by sampling: D3 is a quartic in z, recover it exactly from
        // its values at five points through Newton divided differences.
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|&x| self.d3(x)).collect();
        let mut coef = ys.clone();
        for j in 1..5 {
            for i in (j..5).rev() {
                coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j]);
            }
        }
        // Newton form -> monomial form
        let mut poly = [0.0f64; 5]; // ascending
        let mut basis = vec![1.0f64];
        for k in 0..5 {
            for (i, b) in basis.iter().enumerate() {
                poly[i] += coef[k] * b;
            }
            if k < 4 {
                let mut nb = vec![0.0; basis.len() + 1];
                for (i, b) in basis.iter().enumerate() {
                    nb[i + 1] += b;
                    nb[i] -= xs[k] * b;
                }
                basis = nb;
            }
        }
        [poly[4], poly[3], poly[2], poly[1], poly[0]]
    }

    /// The real function r(z) entering the density formula.
    pub fn r_of_z(&self, z: f64) -> f64 {
        let a = self.a;
        let (a2, b1, b2) = (self.a2(), self.b1(), self.b2());
        let w = 1.0 / z;
        let t3 = -2.0 * b2.powi(3) / a.powi(3);
        let t2 = 9.0 * b1 * b2 / (a * a) - 6.0 * a2 * b2 * b2 / a.powi(3);
        let t1 = 9.0 * b2 / (a * a) + 9.0 * b1 * a2 / (a * a) - 27.0 / a - 6.0 * a2 * a2 * b2 / a.powi(3);
        let t0 = 9.0 * a2 / (a * a) - 2.0 * a2.powi(3) / a.powi(3);
        (((t3 * w + t2) * w + t1) * w + t0) / 27.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cuts {
    OneCut,
    TwoCut,
}

impl std::fmt::Display for Cuts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Cuts::OneCut => "one-cut",
            Cuts::TwoCut => "two-cut",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInfo {
    /// One-cut: gamma1 < gamma2 real, then the conjugate pair. Two-cut: all
    /// four real, ascending.
    pub gamma: [C64; 4],
    pub lambda: [C64; 4],
    /// Discriminant of the support quartic, from its roots.
    pub delta: f64,
    pub cuts: Cuts,
}

impl SupportInfo {
    pub fn lambda1(&self) -> f64 {
        self.lambda[0].re
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda[1].re
    }

    pub fn lambda3(&self) -> C64 {
        self.lambda[2]
    }
}

pub fn classify_support(p: &EnsembleParams) -> Result<SupportInfo> {
    let q = p.support_quartic();
    let rs = solve_quartic(&q)?;
    let delta = rs.discriminant.re;
    if rs.has_multiple() {
        return Err(CurveError::CriticalParameters { delta });
    }
    let mut gamma = [rs.roots[0], rs.roots[1], rs.roots[2], rs.roots[3]];
    let cuts = match rs.real_count() {
        2 => Cuts::OneCut,
        4 => Cuts::TwoCut,
        _ => return Err(CurveError::CriticalParameters { delta }),
    };
    let mut lambda = gamma.map(|g| p.z_of_xi(g));
    if cuts == Cuts::OneCut && lambda[2].im < 0.0 {
        gamma.swap(2, 3);
        lambda.swap(2, 3);
    }
    for l in lambda.iter_mut() {
        if gamma.iter().all(|g| g.im == 0.0) {
            l.im = 0.0;
        }
    }
    if cuts == Cuts::OneCut {
        lambda[0].im = 0.0;
        lambda[1].im = 0.0;
        lambda[3] = lambda[2].conj();
    }
    Ok(SupportInfo { gamma, lambda, delta, cuts })
}

/// The three solutions of the curve at `z`, labelled by continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTriple {
    pub z: C64,
    pub xi1: C64,
    pub xi2: C64,
    pub xi3: C64,
}

impl BranchTriple {
    pub fn as_array(&self) -> [C64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }
}

/// A curve together with its support data and labelling anchor. Construct
/// once and reuse when evaluating many points.
#[derive(Debug, Clone)]
pub struct SpectralCurve {
    pub params: EnsembleParams,
    pub support: SupportInfo,
    anchor: f64,
    anchor_roots: [C64; 3],
    singular: [C64; 5],
    eta: f64,
    right_edge: f64,
}

impl SpectralCurve {
    pub fn new(p: &EnsembleParams) -> Result<Self> {
        let support = classify_support(p)?;
        let right_edge = support.lambda.iter().map(|l| l.re).fold(f64::MIN, f64::max);
        let big = support.lambda.iter().map(|l| l.norm()).fold(0.0, f64::max);
        let anchor = right_edge + 10.0 * (1.0 + big);
        let eta = match support.cuts {
            Cuts::OneCut => 0.5 * support.lambda[2].im,
            Cuts::TwoCut => 0.5,
        };
        let singular = [
            support.lambda[0],
            support.lambda[1],
            support.lambda[2],
            support.lambda[3],
            C64::new(0.0, 0.0),
        ];
        let mut curve = SpectralCurve {
            params: *p,
            support,
            anchor,
            anchor_roots: [C64::new(0.0, 0.0); 3],
            singular,
            eta,
            right_edge,
        };
        curve.anchor_roots = curve.asymptotic_labels(C64::new(anchor, 0.0))?;
        Ok(curve)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn lambda(&self) -> [C64; 4] {
        self.support.lambda
    }

    pub fn require_one_cut(&self) -> Result<()> {
        match self.support.cuts {
            Cuts::OneCut => Ok(()),
            Cuts::TwoCut => Err(CurveError::OneCutRequired { delta: self.support.delta }),
        }
    }

    fn unlabeled_roots(&self, z: C64) -> Result<[C64; 3]> {
        let r = solve_cubic(&self.params.curve_coeffs(z))?;
        Ok([r.roots[0], r.roots[1], r.roots[2]])
    }

    /// Label the roots at a point far from the branch points by matching the
    /// behaviour at infinity.
    pub fn asymptotic_labels(&self, z: C64) -> Result<[C64; 3]> {
        let p = &self.params;
        let pred = [
            -1.0 / z,
            -1.0 + p.c * (1.0 - p.beta) / z,
            -1.0 / p.a + p.c * p.beta / z,
        ];
        let roots = self.unlabeled_roots(z)?;
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut best = (f64::MAX, [0usize; 3]);
        for perm in perms {
            let err = (0..3).map(|j| (roots[perm[j]] - pred[j]).norm()).fold(0.0, f64::max);
            if err < best.0 {
                best = (err, perm);
            }
        }
        let sep = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (pred[i] - pred[j]).norm())
            .fold(f64::MAX, f64::min);
        if best.0 > sep / 3.0 {
            return Err(CurveError::BranchCollision { at: z });
        }
        Ok(best.1.map(|k| roots[k]))
    }

    fn dist_to_singular(&self, w: C64) -> f64 {
        self.singular.iter().map(|s| (w - s).norm()).fold(f64::MAX, f64::min)
    }

    /// Continue labelled roots from `from` to `to` along the straight segment.
    pub fn track(&self, from: C64, roots: [C64; 3], to: C64) -> Result<[C64; 3]> {
        let mut w = from;
        let mut r = roots;
        let mut last = f64::INFINITY;
        loop {
            let remaining = (to - w).norm();
            if remaining == 0.0 {
                return Ok(r);
            }
            let mut h = remaining.min(0.25 * self.dist_to_singular(w)).min(2.0 * last);
            let floor = 1e-15 * (1.0 + w.norm());
            loop {
                let next = if h >= remaining { to } else { w + (to - w) * (h / remaining) };
                let cand = self.unlabeled_roots(next)?;
                if let Some(m) = match_roots(&r, &cand) {
                    w = next;
                    r = m;
                    last = h;
                    break;
                }
                h *= 0.5;
                if h < floor {
                    return Err(CurveError::BranchCollision { at: w });
                }
            }
        }
    }

    /// Continue from the anchor through the given waypoints.
    pub fn track_path(&self, waypoints: &[C64]) -> Result<[C64; 3]> {
        let mut w = C64::new(self.anchor, 0.0);
        let mut r = self.anchor_roots;
        for &p in waypoints {
            r = self.track(w, r, p)?;
            w = p;
        }
        Ok(r)
    }

    /// The continuation path used to label the roots at `z`: a straight
    /// segment from the anchor, lifted off the real axis by `eta` when `z`
    /// sits low over or left of the support. Points with `Im z < 0` use the
    /// mirror-image path; real points get boundary values from above.
    pub fn default_path(&self, z: C64) -> Vec<C64> {
        let s = if z.im < 0.0 { -1.0 } else { 1.0 };
        if z.im.abs() >= self.eta || z.re >= self.right_edge + self.eta {
            vec![z]
        } else {
            let h = C64::new(0.0, s * self.eta);
            vec![C64::new(self.anchor, 0.0) + h, C64::new(z.re, 0.0) + h, z]
        }
    }

    fn check_regular(&self, z: C64) -> Result<()> {
        let scale = 1.0 + z.norm();
        if self.dist_to_singular(z) <= 1e-10 * scale {
            return Err(CurveError::NearBranchPoint { z });
        }
        Ok(())
    }

    pub fn branch_values(&self, z: C64) -> Result<BranchTriple> {
        self.check_regular(z)?;
        let r = self.track_path(&self.default_path(z))?;
        Ok(BranchTriple { z, xi1: r[0], xi2: r[1], xi3: r[2] })
    }

    /// Labels obtained by continuing from a far point on the negative real
    /// axis, passing over the pole at 0. This is the labelling used for the
    /// interval (0, lambda1) when discussing which sheets meet at lambda1.
    pub fn branch_values_from_left(&self, z: C64) -> Result<BranchTriple> {
        self.check_regular(z)?;
        let start = C64::new(-self.anchor, 0.0);
        let start_roots = self.asymptotic_labels(start)?;
        let d = 0.5 * self.support.lambda1().abs().max(1e-3);
        let hop = [C64::new(-d, 0.0), C64::new(0.0, d), z];
        let mut w = start;
        let mut r = start_roots;
        for p in hop {
            r = self.track(w, r, p)?;
            w = p;
        }
        Ok(BranchTriple { z, xi1: r[0], xi2: r[1], xi3: r[2] })
    }

    /// Labels of the two branches that meet at lambda_k (k = 1 or 2),
    /// observed at distance `dist` outside the support. lambda2 is
    /// approached from the right along the continuation from the right
    /// anchor, lambda1 from the left along the continuation from the left.
    pub fn merging_pair(&self, k: usize, dist: f64) -> Result<(usize, usize)> {
        self.require_one_cut()?;
        let t = match k {
            1 => self.branch_values_from_left(C64::new(self.support.lambda1() - dist, 0.0))?,
            2 => self.branch_values(C64::new(self.support.lambda2() + dist, 0.0))?,
            _ => return Err(CurveError::InvalidParams("endpoint index must be 1 or 2".into())),
        };
        let xi = t.as_array();
        let mut best = (f64::MAX, (0, 0));
        for i in 0..3 {
            for j in i + 1..3 {
                let d = (xi[i] - xi[j]).norm();
                if d < best.0 {
                    best = (d, (i + 1, j + 1));
                }
            }
        }
        Ok(best.1)
    }

    /// Density of the absolutely continuous part of the limiting law,
    /// normalised to total mass c.
    pub fn density(&self, z: f64) -> Result<f64> {
        self.require_one_cut()?;
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        if z <= l1 || z >= l2 {
            return Ok(0.0);
        }
        Ok(density_formula(&self.params, z))
    }

    /// Density of the eigenvalue law of B_N in the limit (mass one).
    pub fn density_f(&self, z: f64) -> Result<f64> {
        Ok(self.density(z)? / self.params.c)
    }

    /// ∫_{lambda1}^{x} rho. Uses the substitution
    /// x = lambda1 + (lambda2-lambda1)(1-cos t)/2 to remove the edge
    /// square roots.
    pub fn cdf_underline(&self, x: f64) -> Result<f64> {
        self.require_one_cut()?;
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        if x <= l1 {
            return Ok(0.0);
        }
        let x = x.min(l2);
        let t_hi = (1.0 - 2.0 * (x - l1) / (l2 - l1)).clamp(-1.0, 1.0).acos();
        Ok(self.integrate_theta(0.0, t_hi))
    }

    /// ∫ rho between the points with angle parameters t0 < t1.
    pub(crate) fn integrate_theta(&self, t0: f64, t1: f64) -> f64 {
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        let w = l2 - l1;
        let p = self.params;
        let f = |t: f64| {
            let x = l1 + w * (1.0 - t.cos()) / 2.0;
            if x <= l1 || x >= l2 {
                0.0
            } else {
                density_formula(&p, x) * w * t.sin() / 2.0
            }
        };
        quad::adaptive(f, t0, t1, 1e-13, 30).value
    }

    pub fn theta_of(&self, x: f64) -> f64 {
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        (1.0 - 2.0 * (x.clamp(l1, l2) - l1) / (l2 - l1)).clamp(-1.0, 1.0).acos()
    }

    /// Total mass of the density; equals c.
    pub fn total_mass(&self) -> Result<f64> {
        self.require_one_cut()?;
        Ok(self.integrate_theta(0.0, PI))
    }

    pub fn stieltjes_mf(&self, z: C64) -> Result<C64> {
        let t = self.branch_values(z)?;
        let c = self.params.c;
        Ok((t.xi1 + (1.0 - c) / z) / c)
    }

    /// Edge constants with base offset `h`: rho_k = lim pi rho / |z - lambda_k|^(1/2),
    /// from Richardson extrapolation over h, h/2, h/4.
    pub fn edge_constants_at(&self, h: f64) -> Result<(f64, f64)> {
        self.require_one_cut()?;
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        let est = |edge: f64, dir: f64| -> Result<f64> {
            let f = |d: f64| PI * density_formula(&self.params, edge + dir * d) / d.sqrt();
            let (f1, f2, f4) = (f(h), f(h / 2.0), f(h / 4.0));
            let r1a = 2.0 * f2 - f1;
            let r1b = 2.0 * f4 - f2;
            let r2 = (4.0 * r1b - r1a) / 3.0;
            if !(r2.is_finite() && r2 > 0.0) || (r2 - r1b).abs() > 1e-4 * r2.abs() {
                return Err(CurveError::ExtrapolationDiverged { coarse: r1b, fine: r2 });
            }
            Ok(r2)
        };
        Ok((est(l1, 1.0)?, est(l2, -1.0)?))
    }

    /// Base offset for [`Self::edge_constants`]: 1e-3 of the support width,
    /// or of lambda1 when the pole at 0 is closer than that.
    pub fn edge_offset(&self) -> f64 {
        let (l1, l2) = (self.support.lambda1(), self.support.lambda2());
        1e-3 * (l2 - l1).min(l1)
    }

    pub fn edge_constants(&self) -> Result<(f64, f64)> {
        self.require_one_cut()?;
        self.edge_constants_at(self.edge_offset())
    }
}

/// Pair each labelled root with its nearest candidate. Fails unless every
/// nearest candidate is more than three times closer than the runner-up and
/// the pairing is a permutation.
fn match_roots(prev: &[C64; 3], cand: &[C64; 3]) -> Option<[C64; 3]> {
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut used = [false; 3];
    for j in 0..3 {
        let mut d = [0.0; 3];
        for k in 0..3 {
            d[k] = (prev[j] - cand[k]).norm();
        }
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
        let (k1, k2) = (idx[0], idx[1]);
        if !(d[k2] > 3.0 * d[k1]) || used[k1] {
            return None;
        }
        used[k1] = true;
        out[j] = cand[k1];
    }
    Some(out)
}

/// The closed-form density with real cube roots of real arguments. No
/// support check; callers clip to [lambda1, lambda2].
pub fn density_formula(p: &EnsembleParams, z: f64) -> f64 {
    let a = p.a;
    let r = p.r_of_z(z);
    let mut arg = -p.d3(z) / (27.0 * a.powi(4) * z.powi(4));
    if arg < 0.0 {
        if arg.abs() < 1e-13 * (1.0 + r * r) {
            arg = 0.0;
        } else {
            return 0.0;
        }
    }
    let s = arg.sqrt();
    3f64.sqrt() / (2.0 * PI) * (((r + s) / 2.0).cbrt() - ((r - s) / 2.0).cbrt()).abs()
}

pub fn branch_values(p: &EnsembleParams, z: C64) -> Result<BranchTriple> {
    SpectralCurve::new(p)?.branch_values(z)
}

pub fn density(p: &EnsembleParams, z: f64) -> Result<f64> {
    SpectralCurve::new(p)?.density(z)
}

pub fn density_f(p: &EnsembleParams, z: f64) -> Result<f64> {
    SpectralCurve::new(p)?.density_f(z)
}

pub fn edge_constants(p: &EnsembleParams) -> Result<(f64, f64)> {
    SpectralCurve::new(p)?.edge_constants()
}

pub fn stieltjes_mf(p: &EnsembleParams, z: C64) -> Result<C64> {
    SpectralCurve::new(p)?.stieltjes_mf(z)
}

/// Support estimate from the Silverstein-Choi characterisation: the
/// complement of the support in (0, inf) is the image under z(m) of the
/// real m (m != 0, -1, -1/a) with z'(m) > 0. Independent of
/// [`classify_support`]. The m-axis is sampled as m = tan(t) with
/// `resolution` uniform points in t.
pub fn support_scan_oracle(p: &EnsembleParams, resolution: usize) -> Vec<(f64, f64)> {
    let (a, c, b) = (p.a, p.c, p.beta);
    let z = |m: f64| -1.0 / m + c * (1.0 - b) / (1.0 + m) + c * a * b / (1.0 + a * m);
    let zp = |m: f64| 1.0 / (m * m) - c * (1.0 - b) / (1.0 + m).powi(2) - c * a * a * b / (1.0 + a * m).powi(2);
    let poles = [0.0, -1.0, -1.0 / a];
    let n = resolution.max(2);
    let ms: Vec<f64> = (0..n)
        .map(|i| (-PI / 2.0 + PI * (i as f64 + 0.5) / n as f64).tan())
        .collect();
    let crosses_pole = |m0: f64, m1: f64| poles.iter().any(|&q| (m0 - q) * (m1 - q) < 0.0);

    // Images of maximal runs of admissible samples between poles.
    let mut images: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        if zp(ms[i]) <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && zp(ms[i + 1]) > 0.0 && !crosses_pole(ms[i], ms[i + 1]) {
            i += 1;
        }
        let end = i;
        // z is increasing on the run.
        let mut lo = z(ms[start]);
        let mut hi = z(ms[end]);
        if start == 0 {
            lo = 0.0; // z(-inf) = 0+
        } else if crosses_pole(ms[start - 1], ms[start]) {
            lo = f64::NEG_INFINITY;
        }
        if end == n - 1 {
            hi = 0.0; // z(+inf) = 0-
        } else if crosses_pole(ms[end], ms[end + 1]) {
            hi = f64::INFINITY;
        }
        images.push((lo, hi));
        i += 1;
    }
    images.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in images {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    // Complement in (0, inf).
    let mut out = Vec::new();
    let mut cursor = 0.0f64;
    for (lo, hi) in merged {
        if hi <= cursor {
            continue;
        }
        if lo > cursor {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor.is_finite() {
        out.push((cursor, f64::INFINITY));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> EnsembleParams {
        EnsembleParams::new(0.9, 0.4, 0.7).unwrap()
    }

    #[test]
    fn validation() {
        assert!(EnsembleParams::new(1.0, 0.4, 0.7).is_err());
        assert!(EnsembleParams::new(0.9, 1.5, 0.7).is_err());
        assert!(EnsembleParams::new(0.9, 0.4, 0.0).is_err());
        assert!(EnsembleParams::new(-2.0, 0.4, 0.5).is_err());
        let p = EnsembleParams::from_sizes(2.0, 16, 8, 3).unwrap();
        assert_eq!(p.c, 0.5);
        assert_eq!(p.beta, 0.375);
        assert!(fig2().with_sizes(400, 160, 112).is_ok());
        assert!(fig2().with_sizes(400, 170, 112).is_err());
    }

    #[test]
    fn figure2_support() {
        let s = classify_support(&fig2()).unwrap();
        assert_eq!(s.cuts, Cuts::OneCut);
        assert!(s.delta < 0.0);
        assert!((s.lambda1() - 0.12518).abs() < 1e-4);
        assert!((s.lambda2() - 2.48841).abs() < 1e-4);
        assert!((s.lambda3() - C64::new(2.40520, 3.2516)).norm() < 1e-3);
        assert!(s.gamma[0].re < s.gamma[1].re && s.gamma[1].re < 0.0);
    }

    #[test]
    fn r_matches_depressed_cubic() {
        // r = -q for the monic depressed form of the curve in xi.
        let p = fig2();
        for z in [0.3, 1.0, 2.2] {
            let k = p.curve_coeffs(C64::new(z, 0.0));
            let (b, c, d) = ((k.c2 / k.c3).re, (k.c1 / k.c3).re, (k.c0 / k.c3).re);
            let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
            assert!((p.r_of_z(z) + q).abs() < 1e-12 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn density_at_one() {
        let p = fig2();
        let curve = SpectralCurve::new(&p).unwrap();
        let rho = curve.density(1.0).unwrap();
        let t = curve.branch_values(C64::new(1.0, 0.0)).unwrap();
        assert!((rho - t.xi1.im / PI).abs() < 1e-12);
        assert!((rho - 0.19401).abs() < 1e-5);
    }

    #[test]
    fn anchor_labels_follow_asymptotics() {
        let p = fig2();
        let t = branch_values(&p, C64::new(1e6, 0.0)).unwrap();
        assert!((t.xi1 - C64::new(-1e-6, 0.0)).norm() < 1e-5);
        assert!((t.xi2 - C64::new(-1.0, 0.0)).norm() < 1e-5);
        assert!((t.xi3 - C64::new(-1.0 / 0.9, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn match_requires_margin() {
        let a = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let b = [C64::new(0.6, 0.0), C64::new(0.4, 0.0), C64::new(2.0, 0.0)];
        assert!(match_roots(&a, &b).is_none());
        let c = [C64::new(1.05, 0.0), C64::new(0.01, 0.0), C64::new(2.0, 0.0)];
        assert_eq!(match_roots(&a, &c).unwrap(), [c[1], c[0], c[2]]);
    }

    #[test]
    fn d3_poly_reproduces_d3() {
        let p = fig2();
        let k = p.d3_poly();
        for z in [-3.0, 0.5, 4.0] {
            let v = k.iter().fold(0.0, |acc, c| acc * z + c);
            assert!((v - p.d3(z)).abs() < 1e-9 * (1.0 + p.d3(z).abs()));
        }
        // leading coefficient (1-a)^2
        assert!((k[0] - (1.0f64 - 0.9).powi(2)).abs() < 1e-10);
    }
}
