//! The Abelian integral `theta2 - theta3` based at lambda3, the real
//! function `h`, and the zero set of `Re(theta2 - theta3)`.
//!
//! Branch labels for this module come from a continuation that leaves the
//! anchor vertically, runs horizontally above lambda3 and drops vertically
//! onto the target. With this rule `xi2 ~ -1` at both ends of the real axis,
//! and the only place where the labels of `xi2`, `xi3` jump in the upper
//! half plane is the vertical segment below lambda3. Across that segment
//! `theta2 - theta3` changes sign, which leaves its zero set untouched.

use crate::curve::{CurveError, EnsembleParams, SpectralCurve};
use crate::quad;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("PathThroughBranchPoint: segment {from} -> {to} passes within 1e-6 of {near}")]
    PathThroughBranchPoint { from: C64, to: C64, near: C64 },
    #[error("ComponentCountMismatch: {0}")]
    ComponentCountMismatch(String),
    #[error("MultipleSignChanges: {count} sign changes of Re(xi_I - xi_R) on the support")]
    MultipleSignChanges { count: usize },
    #[error("InvalidWindow: {0}")]
    InvalidWindow(String),
}

pub type Result<T> = std::result::Result<T, HError>;

const PANEL_TOL: f64 = 1e-10;
const BRANCH_CLEARANCE: f64 = 1e-6;
/// Cells whose centre is within this many cell diagonals of lambda3 are
/// not contoured.
const SKIP_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaDiff {
    pub z: C64,
    pub value: C64,
    pub path_record: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CurveTag {
    #[serde(rename = "H_inf_plus")]
    HInfPlus,
    #[serde(rename = "H_inf_minus")]
    HInfMinus,
    #[serde(rename = "H_L")]
    HL,
    #[serde(rename = "H_R")]
    HR,
}

impl std::fmt::Display for CurveTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CurveTag::HInfPlus => "H_inf_plus",
            CurveTag::HInfMinus => "H_inf_minus",
            CurveTag::HL => "H_L",
            CurveTag::HR => "H_R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggedCurve {
    pub tag: CurveTag,
    pub points: Vec<C64>,
}

/// Axis-aligned rectangle `[re.0, re.1] x [im.0, im.1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Window {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Window { re: (re_lo, re_hi), im: (im_lo, im_hi) }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetGeometry {
    pub curves: Vec<TaggedCurve>,
    pub x_l: f64,
    pub x_r: f64,
    pub iota: f64,
    /// Grid spacing (dx, dy).
    pub spacing: (f64, f64),
}

impl LevelSetGeometry {
    pub fn curve(&self, tag: CurveTag) -> &TaggedCurve {
        self.curves.iter().find(|c| c.tag == tag).expect("all four tags are present")
    }
}

/// Evaluator for `theta2 - theta3` that owns the labelled curve.
#[derive(Debug, Clone)]
pub struct ThetaEvaluator {
    pub curve: SpectralCurve,
    height: f64,
    x0: f64,
}

fn seg_dist(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sqr() == 0.0 { 0.0 } else { ((p - a) * ab.conj()).re / ab.norm_sqr() };
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

impl ThetaEvaluator {
    pub fn new(p: &EnsembleParams) -> Result<Self> {
        let curve = SpectralCurve::new(p)?;
        curve.require_one_cut()?;
        let l3 = curve.support.lambda3();
        let height = l3.im + l3.im.max(1.0);
        let x0 = l3.re.max(curve.support.lambda2()) + l3.im;
        Ok(ThetaEvaluator { curve, height, x0 })
    }

    pub fn lambda3(&self) -> C64 {
        self.curve.support.lambda3()
    }

    pub fn lambda4(&self) -> C64 {
        self.curve.support.lambda[3]
    }

    /// Waypoints of the labelling path for `z` on side `s` (+1 upper,
    /// -1 lower; real points use the upper side).
    fn label_path(&self, z: C64, s: f64) -> [C64; 3] {
        let a = self.curve.anchor();
        let y = s * self.height.max(z.im.abs());
        [C64::new(a, y), C64::new(z.re, y), z]
    }

    /// Labelled roots at `z`, seen from side `s`.
    pub fn labels(&self, z: C64, s: f64) -> Result<[C64; 3]> {
        self.check_clear(z)?;
        Ok(self.curve.track_path(&self.label_path(z, s))?)
    }

    fn check_clear(&self, z: C64) -> Result<()> {
        for l in self.curve.lambda() {
            if (z - l).norm() <= 1e-10 * (1.0 + z.norm()) {
                return Err(CurveError::NearBranchPoint { z }.into());
            }
        }
        Ok(())
    }

    fn check_segment(&self, from: C64, to: C64, base: Option<C64>) -> Result<()> {
        for l in self.curve.lambda() {
            if Some(l) == base {
                continue;
            }
            if seg_dist(l, from, to) < BRANCH_CLEARANCE {
                return Err(HError::PathThroughBranchPoint { from, to, near: l });
            }
        }
        Ok(())
    }

    /// ∫_{base}^{z} (xi2 - xi3) along the straight segment, with labels
    /// `roots` given at `z` and continued back towards `base`. The
    /// substitution x = base + (z - base) t^2 removes the square root at a
    /// branch point `base`.
    fn segment_from_branch(&self, base: C64, z: C64, roots: [C64; 3]) -> Result<C64> {
        let dz = z - base;
        let mut state = (z, roots);
        let mut fail: Option<CurveError> = None;
        let f = |t: f64| -> C64 {
            if fail.is_some() || t == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let x = base + dz * (t * t);
            match self.curve.track(state.0, state.1, x) {
                Ok(r) => {
                    state = (x, r);
                    (r[1] - r[2]) * dz * (2.0 * t)
                }
                Err(e) => {
                    fail = Some(e);
                    C64::new(0.0, 0.0)
                }
            }
        };
        let res = quad::adaptive(f, 0.0, 1.0, PANEL_TOL, 40);
        if let Some(e) = fail {
            return Err(e.into());
        }
        Ok(res.value)
    }

    /// `theta2 - theta3` at `z` in the fixed homotopy class of each half
    /// plane: the straight segment from lambda3 above the axis, and
    /// lambda3 -> x0 -> lambda4 -> z below it, with x0 on the real axis to
    /// the right of every branch point.
    pub fn theta_diff(&self, z: C64) -> Result<ThetaDiff> {
        let l3 = self.lambda3();
        let l4 = self.lambda4();
        if z == l3 {
            return Ok(ThetaDiff { z, value: C64::new(0.0, 0.0), path_record: vec![l3] });
        }
        if z.im >= 0.0 {
            self.check_segment(l3, z, Some(l3))?;
            let r = self.labels(z, 1.0)?;
            let value = self.segment_from_branch(l3, z, r)?;
            return Ok(ThetaDiff { z, value, path_record: vec![l3, z] });
        }
        let x0 = C64::new(self.x0, 0.0);
        self.check_segment(l3, x0, Some(l3))?;
        self.check_segment(x0, l4, Some(l4))?;
        let up = self.segment_from_branch(l3, x0, self.labels(x0, 1.0)?)?;
        let down = self.segment_from_branch(l4, x0, self.labels(x0, -1.0)?)?;
        let mut value = up - down;
        if z != l4 {
            self.check_segment(l4, z, Some(l4))?;
            value += self.segment_from_branch(l4, z, self.labels(z, -1.0)?)?;
        }
        Ok(ThetaDiff { z, value, path_record: vec![l3, x0, l4, z] })
    }

    /// `theta2 - theta3` along an arbitrary polyline starting at lambda3
    /// (or lambda4) and ending at `path.last()`, with the end labels taken
    /// from the side `s`.
    pub fn theta_along(&self, path: &[C64], s: f64) -> Result<C64> {
        if path.len() < 2 {
            return Ok(C64::new(0.0, 0.0));
        }
        let base = path[0];
        for w in path.windows(2) {
            self.check_segment(w[0], w[1], Some(base))?;
        }
        let end = *path.last().unwrap();
        let mut roots = self.labels(end, s)?;
        let mut total = C64::new(0.0, 0.0);
        for k in (1..path.len() - 1).rev() {
            let (a, b) = (path[k], path[k + 1]);
            let mut state = (b, roots);
            let mut fail: Option<CurveError> = None;
            // Integrate from b down to a so that the first node tracked is
            // next to the known labels.
            let f = |t: f64| -> C64 {
                if fail.is_some() {
                    return C64::new(0.0, 0.0);
                }
                let x = b + (a - b) * t;
                match self.curve.track(state.0, state.1, x) {
                    Ok(r) => {
                        state = (x, r);
                        (r[1] - r[2]) * (a - b)
                    }
                    Err(e) => {
                        fail = Some(e);
                        C64::new(0.0, 0.0)
                    }
                }
            };
            let v = quad::adaptive(f, 0.0, 1.0, PANEL_TOL, 40).value;
            if let Some(e) = fail {
                return Err(e.into());
            }
            total -= v;
            roots = self.curve.track(state.0, state.1, a)?;
        }
        Ok(total + self.segment_from_branch(base, path[1], roots)?)
    }

    /// `Re(theta2 - theta3)` on the real axis with labels continued along
    /// the axis from the right, so that `h` is continuous on the line.
    pub fn h_value(&self, x: f64) -> Result<f64> {
        let l3 = self.lambda3();
        let z = C64::new(x, 0.0);
        self.check_segment(l3, z, Some(l3))?;
        let r = self.curve.branch_values(z)?.as_array();
        Ok(self.segment_from_branch(l3, z, r)?.re)
    }

    /// `xi2 - xi3` on the side `s`.
    pub fn branch_difference(&self, z: C64, s: f64) -> Result<C64> {
        let r = self.labels(z, s)?;
        Ok(r[1] - r[2])
    }

    /// Zero of `Re(xi_I - xi_R)` on the support, where `xi_I` is the
    /// conjugate partner of `xi1` and `xi_R` the real branch.
    pub fn find_iota(&self) -> Result<f64> {
        let (l1, l2) = (self.curve.support.lambda1(), self.curve.support.lambda2());
        let g = |x: f64| -> Result<f64> { Ok(balance_function(&self.curve, x)?) };
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|k| l1 + (l2 - l1) * (k as f64 + 0.5) / n as f64).collect();
        let vals = xs.iter().map(|&x| g(x)).collect::<Result<Vec<_>>>()?;
        let changes: Vec<usize> = (1..n).filter(|&k| (vals[k - 1] < 0.0) != (vals[k] < 0.0)).collect();
        if changes.len() != 1 {
            return Err(HError::MultipleSignChanges { count: changes.len() });
        }
        let k = changes[0];
        let (mut lo, mut hi) = (xs[k - 1], xs[k]);
        let neg_lo = vals[k - 1] < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (g(mid)? < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `Re(xi_I - xi_R)` at a point of the support, from the labels of the curve
/// continued to the upper side of the axis.
pub fn balance_function(curve: &SpectralCurve, x: f64) -> std::result::Result<f64, CurveError> {
    let t = curve.branch_values(C64::new(x, 0.0))?;
    let target = t.xi1.conj();
    let (xi_i, xi_r) = if (t.xi2 - target).norm() <= (t.xi3 - target).norm() {
        (t.xi2, t.xi3)
    } else {
        (t.xi3, t.xi2)
    };
    Ok(xi_i.re - xi_r.re)
}

pub fn theta_diff(p: &EnsembleParams, z: C64) -> Result<ThetaDiff> {
    ThetaEvaluator::new(p)?.theta_diff(z)
}

pub fn h_value(p: &EnsembleParams, x: f64) -> Result<f64> {
    ThetaEvaluator::new(p)?.h_value(x)
}

pub fn find_iota(p: &EnsembleParams) -> Result<f64> {
    ThetaEvaluator::new(p)?.find_iota()
}

/// Values of `Re(theta2 - theta3)` and `xi2 - xi3` on the nodes of the upper
/// half grid, row-major with row 0 on the real axis. Unavailable nodes hold
/// NaN.
#[derive(Debug, Clone)]
pub struct HalfGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<C64>,
}

impl HalfGrid {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }
}

impl ThetaEvaluator {
    /// ∫ (xi2 - xi3) along the segment from `from` to `to`, with labels
    /// `roots` at `from`. Returns the integral and the labels at `to`.
    fn segment_tracked(&self, from: C64, roots: [C64; 3], to: C64) -> Result<(C64, [C64; 3])> {
        let dz = to - from;
        let mut state = (from, roots);
        let mut fail: Option<CurveError> = None;
        let f = |t: f64| -> C64 {
            if fail.is_some() {
                return C64::new(0.0, 0.0);
            }
            let x = from + dz * t;
            match self.curve.track(state.0, state.1, x) {
                Ok(r) => {
                    state = (x, r);
                    (r[1] - r[2]) * dz
                }
                Err(e) => {
                    fail = Some(e);
                    C64::new(0.0, 0.0)
                }
            }
        };
        let v = quad::adaptive(f, 0.0, 1.0, PANEL_TOL, 40).value;
        if let Some(e) = fail {
            return Err(e.into());
        }
        let r = self.curve.track(state.0, state.1, to)?;
        Ok((v, r))
    }

    /// Evaluate the upper half grid. Each column starts from the straight
    /// segment lambda3 -> top node and descends node by node, so its values
    /// depend only on the column and not on how columns are scheduled.
    pub fn half_grid(&self, xs: Vec<f64>, ys: Vec<f64>) -> HalfGrid {
        let l3 = self.lambda3();
        let ny = ys.len();
        let nan = (f64::NAN, C64::new(f64::NAN, f64::NAN));
        let columns: Vec<Vec<(f64, C64)>> = xs
            .par_iter()
            .map(|&x| {
                let mut out = vec![nan; ny];
                let top = C64::new(x, ys[ny - 1]);
                let start = self
                    .labels(top, 1.0)
                    .and_then(|r| Ok((self.segment_from_branch(l3, top, r)?, r)));
                let Ok((mut acc, mut roots)) = start else { return out };
                out[ny - 1] = (acc.re, roots[1] - roots[2]);
                for j in (0..ny - 1).rev() {
                    let (from, to) = (C64::new(x, ys[j + 1]), C64::new(x, ys[j]));
                    if self.check_clear(to).is_err() || self.check_segment(from, to, None).is_err() {
                        break;
                    }
                    match self.segment_tracked(from, roots, to) {
                        Ok((v, r)) => {
                            acc += v;
                            roots = r;
                            out[j] = (acc.re, r[1] - r[2]);
                        }
                        Err(_) => break,
                    }
                }
                out
            })
            .collect();
        let nx = xs.len();
        let mut h = vec![f64::NAN; nx * ny];
        let mut d = vec![C64::new(f64::NAN, f64::NAN); nx * ny];
        for (i, col) in columns.into_iter().enumerate() {
            for (j, (hv, dv)) in col.into_iter().enumerate() {
                h[j * nx + i] = hv;
                d[j * nx + i] = dv;
            }
        }
        HalfGrid { xs, ys, h, d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EndKind {
    Lambda,
    Axis,
    Boundary,
    Interior,
}

/// Zero crossing on the edge between nodes p and q, with q re-signed to the
/// label convention of p.
fn edge_crossing(g: &HalfGrid, p: (usize, usize), q: (usize, usize)) -> Option<C64> {
    let (ip, iq) = (g.idx(p.0, p.1), g.idx(q.0, q.1));
    let (hp, mut hq) = (g.h[ip], g.h[iq]);
    if !(hp.is_finite() && hq.is_finite()) {
        return None;
    }
    if (g.d[ip] * g.d[iq].conj()).re < 0.0 {
        hq = -hq;
    }
    if (hp < 0.0) == (hq < 0.0) {
        return None;
    }
    let t = hp / (hp - hq);
    let zp = C64::new(g.xs[p.0], g.ys[p.1]);
    let zq = C64::new(g.xs[q.0], g.ys[q.1]);
    Some(zp + (zq - zp) * t)
}

/// Marching squares on the upper half grid. Returns polylines as point
/// lists; cells near `skip` are left out so that the three curves leaving
/// it start on separate cells.
fn march(g: &HalfGrid, skip: C64) -> Vec<Vec<C64>> {
    let (nx, ny) = (g.xs.len(), g.ys.len());
    let mut points: HashMap<EdgeKey, C64> = HashMap::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                if let Some(z) = edge_crossing(g, (i, j), (i + 1, j)) {
                    points.insert(EdgeKey::H(i, j), z);
                }
            }
            if j + 1 < ny {
                if let Some(z) = edge_crossing(g, (i, j), (i, j + 1)) {
                    points.insert(EdgeKey::V(i, j), z);
                }
            }
        }
    }
    let mut adj: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (x0, x1, y0, y1) = (g.xs[i], g.xs[i + 1], g.ys[j], g.ys[j + 1]);
            let centre = C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
            if (centre - skip).norm() <= SKIP_RADIUS * (x1 - x0).hypot(y1 - y0) {
                continue;
            }
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| !g.h[g.idx(a, b)].is_finite()) {
                continue;
            }
            // Bottom, right, top, left.
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let hit: Vec<EdgeKey> = edges.iter().copied().filter(|e| points.contains_key(e)).collect();
            let mut link = |a: EdgeKey, b: EdgeKey| {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            };
            match hit.len() {
                2 => link(hit[0], hit[1]),
                4 => {
                    // Saddle: decide by the re-signed centre value.
                    let d0 = g.d[g.idx(i, j)];
                    let vals: Vec<f64> = corners
                        .iter()
                        .map(|&(a, b)| {
                            let k = g.idx(a, b);
                            if (g.d[k] * d0.conj()).re < 0.0 {
                                -g.h[k]
                            } else {
                                g.h[k]
                            }
                        })
                        .collect();
                    let centre = vals.iter().sum::<f64>() / 4.0;
                    if (centre < 0.0) == (vals[0] < 0.0) {
                        link(edges[0], edges[1]);
                        link(edges[2], edges[3]);
                    } else {
                        link(edges[0], edges[3]);
                        link(edges[1], edges[2]);
                    }
                }
                _ => {}
            }
        }
    }
    let mut keys: Vec<EdgeKey> = adj.keys().copied().collect();
    keys.sort_by_key(|k| match *k {
        EdgeKey::H(i, j) => (0, j, i),
        EdgeKey::V(i, j) => (1, j, i),
    });
    let mut seen: std::collections::HashSet<EdgeKey> = std::collections::HashSet::new();
    let mut lines = Vec::new();
    // Open chains first, starting from their degree-one ends; then loops.
    for pass in 0..2 {
        for &k in &keys {
            if seen.contains(&k) || (pass == 0 && adj[&k].len() != 1) {
                continue;
            }
            let mut line = vec![points[&k]];
            seen.insert(k);
            let mut cur = k;
            while let Some(&next) = adj[&cur].iter().find(|n| !seen.contains(*n)) {
                seen.insert(next);
                line.push(points[&next]);
                cur = next;
            }
            lines.push(line);
        }
    }
    lines
}

/// Extract the zero set of `Re(theta2 - theta3)` in `window` on an
/// `nx x ny` grid.
pub fn trace_hset(p: &EnsembleParams, window: Window, nx: usize, ny: usize) -> Result<LevelSetGeometry> {
    ThetaEvaluator::new(p)?.trace_hset(window, nx, ny)
}

impl ThetaEvaluator {
    pub fn trace_hset(&self, window: Window, nx: usize, ny: usize) -> Result<LevelSetGeometry> {
        if nx < 200 || ny < 200 {
            return Err(HError::InvalidWindow(format!("resolution {nx}x{ny} is below 200x200")));
        }
        let (wx, wy) = (window.re.1 - window.re.0, window.im.1 - window.im.0);
        for l in self.curve.lambda() {
            let ok = l.re - window.re.0 >= 0.15 * wx
                && window.re.1 - l.re >= 0.15 * wx
                && l.im - window.im.0 >= 0.15 * wy
                && window.im.1 - l.im >= 0.15 * wy;
            if !ok {
                return Err(HError::InvalidWindow(format!(
                    "branch point {l} is closer than 15% of the span to the window edge"
                )));
            }
        }
        let dx = wx / nx as f64;
        let dy = wy / ny as f64;
        let ytop = window.im.1.max(-window.im.0);
        let nrows = (ytop / dy).ceil() as usize;
        let xs: Vec<f64> = (0..=nx).map(|i| window.re.0 + i as f64 * dx).collect();
        let ys: Vec<f64> = (0..=nrows).map(|j| j as f64 * dy).collect();
        let grid = self.half_grid(xs, ys);
        let l3 = self.lambda3();
        let lines = march(&grid, l3);
        let near = (SKIP_RADIUS + 1.0) * dx.hypot(dy);
        let xmax = grid.xs[grid.xs.len() - 1];
        let ymax = grid.ys[grid.ys.len() - 1];
        let kind = |z: C64| -> EndKind {
            if (z - l3).norm() <= near {
                EndKind::Lambda
            } else if z.im.abs() <= 1e-12 * (1.0 + z.norm()) {
                EndKind::Axis
            } else if (z.re - window.re.0).abs() < 1e-9 * wx
                || (z.re - xmax).abs() < 1e-9 * wx
                || (z.im - ymax).abs() < 1e-9 * wy
            {
                EndKind::Boundary
            } else {
                EndKind::Interior
            }
        };
        let mut axis_lines: Vec<(f64, Vec<C64>)> = Vec::new();
        let mut inf_lines: Vec<Vec<C64>> = Vec::new();
        for mut line in lines.into_iter() {
            let (k0, k1) = (kind(line[0]), kind(*line.last().unwrap()));
            if k1 == EndKind::Lambda && k0 != EndKind::Lambda {
                line.reverse();
            }
            let (k0, k1) = (kind(line[0]), kind(*line.last().unwrap()));
            match (k0, k1) {
                (EndKind::Lambda, EndKind::Axis) => {
                    let x = line.last().unwrap().re;
                    axis_lines.push((x, line));
                }
                (EndKind::Lambda, EndKind::Boundary) => inf_lines.push(line),
                _ => {
                    return Err(HError::ComponentCountMismatch(format!(
                        "a zero curve runs from {:?} to {:?} ({} points)",
                        line[0],
                        line.last().unwrap(),
                        line.len()
                    )))
                }
            }
        }
        if axis_lines.len() != 2 || inf_lines.len() != 1 {
            return Err(HError::ComponentCountMismatch(format!(
                "expected two curves from lambda3 to the real axis and one to the window edge, \
                 found {} and {}",
                axis_lines.len(),
                inf_lines.len()
            )));
        }
        axis_lines.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x_l, x_r) = (axis_lines[0].0, axis_lines[1].0);
        let l4 = self.lambda4();

        let clip = |pts: Vec<C64>| -> Vec<C64> { pts.into_iter().take_while(|z| window.contains(*z)).collect() };
        let closed = |upper: &[C64]| -> Vec<C64> {
            let mut pts = vec![l3];
            pts.extend_from_slice(upper);
            pts.extend(upper.iter().rev().skip(1).map(|z| z.conj()));
            pts.push(l4);
            pts
        };
        let mut inf_upper = vec![l3];
        inf_upper.extend(inf_lines[0].iter().copied());
        let inf_lower: Vec<C64> = inf_upper.iter().map(|z| z.conj()).collect();
        let curves = vec![
            TaggedCurve { tag: CurveTag::HInfPlus, points: clip(inf_upper) },
            TaggedCurve { tag: CurveTag::HInfMinus, points: clip(inf_lower) },
            TaggedCurve { tag: CurveTag::HL, points: closed(&axis_lines[0].1) },
            TaggedCurve { tag: CurveTag::HR, points: closed(&axis_lines[1].1) },
        ];
        let iota = self.find_iota()?;
        Ok(LevelSetGeometry { curves, x_l, x_r, iota, spacing: (dx, dy) })
    }
}
