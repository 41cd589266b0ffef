//! Seeded sampling of B_N = M⁻¹ Σ^{1/2} X†X Σ^{1/2}, a Hermitian eigensolver,
//! and KS checks of the limiting density, bulk spacings and edge law.

use crate::curve::{CurveError, EnsembleParams, SpectralCurve};
use crate::kernels::{self, KernelError, SpacingTable, TwMethod, TwTable};
use crate::quad::gk15;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;
use thiserror::Error;

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("NoConvergence: QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, MonteCarloError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleConfig {
    pub m: usize,
    pub n: usize,
    pub n1: usize,
    pub a: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < self.n {
            return Err(MonteCarloError::InvalidConfig(format!("need M ≥ N ≥ 1, got M = {}, N = {}", self.m, self.n)));
        }
        if self.n1 > self.n {
            return Err(MonteCarloError::InvalidConfig(format!("N1 = {} exceeds N = {}", self.n1, self.n)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(MonteCarloError::InvalidConfig(format!("a = {} must be positive", self.a)));
        }
        if self.replicates == 0 {
            return Err(MonteCarloError::InvalidConfig("replicates must be positive".into()));
        }
        Ok(())
    }

    /// Limiting parameters c = N/M, β = N1/N.
    pub fn params(&self) -> Result<EnsembleParams> {
        Ok(EnsembleParams::from_sizes(self.a, self.m, self.n, self.n1)?)
    }

    /// Diagonal of Σ: N − N1 ones, then N1 copies of a.
    pub fn sigma(&self) -> Vec<f64> {
        (0..self.n).map(|j| if j < self.n - self.n1 { 1.0 } else { self.a }).collect()
    }

    /// trace Σ = E[trace B_N].
    pub fn expected_trace(&self) -> f64 {
        (self.n - self.n1) as f64 + self.n1 as f64 * self.a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSample {
    /// Ascending eigenvalues, one list per replicate.
    pub eigenvalues: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

impl EigenSample {
    pub fn pooled(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.eigenvalues.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn largest(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v[v.len() - 1]).collect()
    }
}

/// Seed of replicate `r`: the splitmix64 finaliser applied to the base seed
/// offset by the golden-ratio increment.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed.wrapping_add((r + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// B_N for one replicate, column-major N×N (only the lower triangle is
/// filled).
fn sample_matrix(cfg: &SampleConfig, seed: u64) -> Vec<C64> {
    let (m, n) = (cfg.m, cfg.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    let sigma = cfg.sigma();
    // Y = X Σ^{1/2}, column-major so that columns are contiguous.
    let mut y = vec![C64::new(0.0, 0.0); m * n];
    for j in 0..n {
        let s = sigma[j].sqrt() * sd;
        for i in 0..m {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            y[i + j * m] = C64::new(re * s, im * s);
        }
    }
    let mut b = vec![C64::new(0.0, 0.0); n * n];
    let inv_m = 1.0 / m as f64;
    for j in 0..n {
        let cj = &y[j * m..(j + 1) * m];
        for i in j..n {
            let ci = &y[i * m..(i + 1) * m];
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..m {
                // conj(Y_kj) · Y_ki -> B_ij
                re += cj[k].re * ci[k].re + cj[k].im * ci[k].im;
                im += cj[k].re * ci[k].im - cj[k].im * ci[k].re;
            }
            b[i + j * n] = C64::new(re * inv_m, im * inv_m);
        }
    }
    b
}

/// Eigenvalues of a Hermitian matrix stored column-major with its lower
/// triangle filled: Householder reduction to a real tridiagonal, then
/// implicit QL.
fn eigen_lower(mut a: Vec<C64>, n: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let sigma = (lo..n).map(|i| a[i + k * n].norm_sqr()).sum::<f64>().sqrt();
        if sigma == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[lo + k * n];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * sigma;
        for i in lo..n {
            v[i] = a[i + k * n];
        }
        v[lo] -= alpha;
        let vnorm2: f64 = (lo..n).map(|i| v[i].norm_sqr()).sum();
        e[k] = sigma;
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // p = β A v on the trailing block, from the lower triangle.
        for i in lo..n {
            p[i] = C64::new(0.0, 0.0);
        }
        for j in lo..n {
            let ajj = a[j + j * n].re;
            p[j] += v[j] * ajj;
            let vj = v[j];
            let mut acc = C64::new(0.0, 0.0);
            for i in j + 1..n {
                let aij = a[i + j * n];
                p[i] += aij * vj;
                acc += aij.conj() * v[i];
            }
            p[j] += acc;
        }
        let mut vp = C64::new(0.0, 0.0);
        for i in lo..n {
            p[i] *= beta;
            vp += v[i].conj() * p[i];
        }
        let c = 0.5 * beta * vp.re;
        for i in lo..n {
            p[i] -= v[i] * c;
        }
        // A -= v w† + w v† with w = p.
        for j in lo..n {
            let (vj, wj) = (v[j].conj(), p[j].conj());
            for i in j..n {
                a[i + j * n] -= v[i] * wj + p[i] * vj;
            }
        }
    }
    for i in 0..n {
        d[i] = a[i + i * n].re;
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Implicit QL on the symmetric tridiagonal (d, e), e[i] coupling i and
/// i+1. Eigenvalues replace d.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(MonteCarloError::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Sorted eigenvalues of a Hermitian matrix. The input must be Hermitian
/// within 1e-12 relative to its largest entry.
pub fn hermitian_eigen(h: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(MonteCarloError::InvalidConfig(format!("matrix is {}×{}, not square", n, h.ncols())));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..n {
        for i in j..n {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > 1e-12 * scale {
                return Err(MonteCarloError::InvalidConfig(format!("matrix is not Hermitian at ({i}, {j})")));
            }
        }
    }
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in j..n {
            a[i + j * n] = if i == j { C64::new(h[(i, i)].re, 0.0) } else { h[(i, j)] };
        }
    }
    eigen_lower(a, n)
}

/// The sampled B_N of replicate `r` as a full Hermitian matrix.
pub fn replicate_matrix(cfg: &SampleConfig, r: usize) -> Result<DMatrix<C64>> {
    cfg.validate()?;
    let n = cfg.n;
    let b = sample_matrix(cfg, replicate_seed(cfg.seed, r as u64));
    Ok(DMatrix::from_fn(n, n, |i, j| if i >= j { b[i + j * n] } else { b[j + i * n].conj() }))
}

pub fn sample_replicate(cfg: &SampleConfig, r: usize) -> Result<Vec<f64>> {
    let seed = replicate_seed(cfg.seed, r as u64);
    eigen_lower(sample_matrix(cfg, seed), cfg.n)
}

pub fn sample_spectrum(cfg: &SampleConfig) -> Result<EigenSample> {
    cfg.validate()?;
    let eigenvalues = (0..cfg.replicates).into_par_iter().map(|r| sample_replicate(cfg, r)).collect::<Result<Vec<_>>>()?;
    let seeds = (0..cfg.replicates as u64).map(|r| replicate_seed(cfg.seed, r)).collect();
    Ok(EigenSample { eigenvalues, seeds })
}

/// sup |F_n − F| for a sorted sample.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// ∫_{λ1}^x ρ tabulated in the angle t, x = λ1 + (λ2−λ1)(1−cos t)/2, with
/// linear interpolation in t.
#[derive(Debug, Clone)]
pub struct MassTable {
    lambda1: f64,
    lambda2: f64,
    cum: Vec<f64>,
}

impl MassTable {
    pub const PANELS: usize = 4000;

    pub fn new(curve: &SpectralCurve) -> Result<Self> {
        curve.require_one_cut()?;
        let s = &curve.support;
        let (l1, l2) = (s.lambda1(), s.lambda2());
        let p = curve.params;
        let w = l2 - l1;
        let dt = PI / Self::PANELS as f64;
        let mut f = |t: f64| {
            let x = l1 + w * (1.0 - t.cos()) / 2.0;
            if x <= l1 || x >= l2 {
                0.0
            } else {
                crate::curve::density_formula(&p, x) * w * t.sin() / 2.0
            }
        };
        let mut cum = Vec::with_capacity(Self::PANELS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for k in 0..Self::PANELS {
            acc += gk15(&mut f, k as f64 * dt, (k + 1) as f64 * dt).0;
            cum.push(acc);
        }
        Ok(MassTable { lambda1: l1, lambda2: l2, cum })
    }

    /// ∫_{λ1}^x ρ, between 0 and c.
    pub fn mass(&self, x: f64) -> f64 {
        if x <= self.lambda1 {
            return 0.0;
        }
        if x >= self.lambda2 {
            return self.cum[Self::PANELS];
        }
        let t = (1.0 - 2.0 * (x - self.lambda1) / (self.lambda2 - self.lambda1)).clamp(-1.0, 1.0).acos();
        let u = t / PI * Self::PANELS as f64;
        let k = (u.floor() as usize).min(Self::PANELS - 1);
        let f = u - k as f64;
        self.cum[k] + f * (self.cum[k + 1] - self.cum[k])
    }

    pub fn total(&self) -> f64 {
        self.cum[Self::PANELS]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BulkDensityReport {
    pub ks: f64,
    /// Share of eigenvalues outside [λ1 − 0.1, λ2 + 0.1].
    pub outside_fraction: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeReport {
    pub ks: f64,
    pub mean: f64,
    pub tw_mean: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingReport {
    pub ks_sine: f64,
    pub ks_exponential: f64,
    pub mean_spacing: f64,
    pub samples: usize,
}

/// Pooled eigenvalues against the limiting law ρ/c.
pub fn bulk_density_from(params: &EnsembleParams, sample: &EigenSample) -> Result<BulkDensityReport> {
    let curve = SpectralCurve::new(params)?;
    curve.require_one_cut()?;
    let table = MassTable::new(&curve)?;
    let total = table.total();
    let pooled = sample.pooled();
    let ks = ks_statistic(&pooled, |x| table.mass(x) / total);
    let (l1, l2) = (curve.support.lambda1(), curve.support.lambda2());
    let outside = pooled.iter().filter(|&&x| x < l1 - 0.1 || x > l2 + 0.1).count();
    Ok(BulkDensityReport { ks, outside_fraction: outside as f64 / pooled.len() as f64, samples: pooled.len() })
}

pub fn bulk_density_test(cfg: &SampleConfig) -> Result<BulkDensityReport> {
    let params = cfg.params()?;
    SpectralCurve::new(&params)?.require_one_cut()?;
    bulk_density_from(&params, &sample_spectrum(cfg)?)
}

/// Tracy-Widom table used for the edge KS: Airy determinant on [-8, 6] in
/// steps of 0.01, linear interpolation.
pub fn tw_reference() -> Result<&'static TwTable> {
    static TABLE: OnceLock<std::result::Result<TwTable, KernelError>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let grid: Vec<f64> = (0..=1400).map(|k| -8.0 + 0.01 * k as f64).collect();
        kernels::tw_table(&grid, TwMethod::Fredholm)
    });
    t.as_ref().map_err(|e| MonteCarloError::Kernel(e.clone()))
}

fn tw_mean_cached() -> Result<f64> {
    static MEAN: OnceLock<std::result::Result<f64, KernelError>> = OnceLock::new();
    MEAN.get_or_init(|| kernels::tw_mean(TwMethod::Fredholm)).clone().map_err(MonteCarloError::Kernel)
}

/// Rescaled largest eigenvalues s = (y_max − λ2)(M ρ2)^{2/3}.
pub fn edge_scaled(params: &EnsembleParams, m: usize, sample: &EigenSample) -> Result<Vec<f64>> {
    let curve = SpectralCurve::new(params)?;
    curve.require_one_cut()?;
    let (_, rho2) = curve.edge_constants()?;
    let l2 = curve.support.lambda2();
    let scale = (m as f64 * rho2).powf(2.0 / 3.0);
    Ok(sample.largest().into_iter().map(|y| (y - l2) * scale).collect())
}

pub fn edge_fluctuation_from(params: &EnsembleParams, m: usize, sample: &EigenSample) -> Result<EdgeReport> {
    let mut s = edge_scaled(params, m, sample)?;
    s.sort_by(f64::total_cmp);
    let tw = tw_reference()?;
    let ks = ks_statistic(&s, |x| tw.cdf(x));
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    Ok(EdgeReport { ks, mean, tw_mean: tw_mean_cached()?, samples: s.len() })
}

pub fn edge_fluctuation_test(cfg: &SampleConfig) -> Result<EdgeReport> {
    if cfg.replicates < 200 {
        return Err(MonteCarloError::InvalidConfig(format!("edge test needs at least 200 replicates, got {}", cfg.replicates)));
    }
    let params = cfg.params()?;
    SpectralCurve::new(&params)?.require_one_cut()?;
    edge_fluctuation_from(&params, cfg.m, &sample_spectrum(cfg)?)
}

/// Sine-process spacing CDF on [0, 6] in steps of 0.005.
pub fn spacing_reference() -> &'static SpacingTable {
    static TABLE: OnceLock<SpacingTable> = OnceLock::new();
    TABLE.get_or_init(|| SpacingTable::new(6.0, 0.005))
}

/// Unfolded nearest-neighbour spacings u = M ∫^y ρ, for eigenvalues whose
/// limiting CDF lies in the central 20% of the bulk.
pub fn unfolded_spacings(params: &EnsembleParams, m: usize, sample: &EigenSample) -> Result<Vec<f64>> {
    let curve = SpectralCurve::new(params)?;
    curve.require_one_cut()?;
    let table = MassTable::new(&curve)?;
    let total = table.total();
    let mut out = Vec::new();
    for ev in &sample.eigenvalues {
        let mut prev: Option<f64> = None;
        for &y in ev {
            let mass = table.mass(y);
            let f = mass / total;
            if (0.4..=0.6).contains(&f) {
                let u = m as f64 * mass;
                if let Some(p) = prev {
                    out.push(u - p);
                }
                prev = Some(u);
            } else {
                prev = None;
            }
        }
    }
    Ok(out)
}

pub fn bulk_spacing_from(params: &EnsembleParams, m: usize, sample: &EigenSample) -> Result<SpacingReport> {
    let mut s = unfolded_spacings(params, m, sample)?;
    s.sort_by(f64::total_cmp);
    let table = spacing_reference();
    let ks_sine = ks_statistic(&s, |x| table.eval(x));
    let ks_exponential = ks_statistic(&s, |x| 1.0 - (-x.max(0.0)).exp());
    let mean_spacing = s.iter().sum::<f64>() / s.len() as f64;
    Ok(SpacingReport { ks_sine, ks_exponential, mean_spacing, samples: s.len() })
}

pub fn bulk_spacing_test(cfg: &SampleConfig) -> Result<SpacingReport> {
    let params = cfg.params()?;
    SpectralCurve::new(&params)?.require_one_cut()?;
    bulk_spacing_from(&params, cfg.m, &sample_spectrum(cfg)?)
}
