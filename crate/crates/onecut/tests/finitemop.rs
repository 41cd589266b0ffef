use onecut::curve::{classify_support, EnsembleParams, SpectralCurve};
use onecut::finitemop::*;
use onecut::quad::adaptive;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;

/// Exp-sinh quadrature ∫_0^∞ f in MPFR: x = exp(π/2 · sinh t).
fn exp_sinh<F: Fn(&Float) -> Float>(f: F, prec: u32) -> Float {
    let pi_half = Float::with_val(prec, rug::float::Constant::Pi) / 2u32;
    let h = Float::with_val(prec, 1) / 256u32;
    let mut sum = Float::new(prec);
    for k in -1600i32..=900 {
        let t = Float::with_val(prec, &h * k);
        let sh = Float::with_val(prec, t.sinh_ref());
        let ch = Float::with_val(prec, t.cosh_ref());
        let x = Float::with_val(prec, &pi_half * &sh).exp();
        let jac = Float::with_val(prec, &pi_half * &ch) * &x;
        sum += f(&x) * jac;
    }
    sum * h
}

fn poly(c: &[Float], x: &Float) -> Float {
    let prec = x.prec();
    let mut acc = Float::new(prec);
    for v in c.iter().rev() {
        acc *= x;
        acc += v;
    }
    acc
}

fn weight(w: &WeightPair, scale: Scale, power: u32, x: &Float) -> Float {
    let prec = x.prec();
    let rate = match scale {
        Scale::One => Float::with_val(prec, w.m),
        Scale::A => Float::with_val(prec, w.m) / w.a,
    };
    let e = (-(rate * x)).exp();
    x.clone().pow(power) * e
}

fn wp(m: u32, n: u32, n1: u32, a: f64) -> WeightPair {
    WeightPair::new(m, n, n1, a).unwrap()
}

#[test]
fn moment_examples() {
    let w = wp(7, 7, 3, 2.5);
    assert_eq!(moment(&w, Scale::One, 0, 128).unwrap(), Float::with_val(128, 1) / 7u32);
    let v = moment(&w, Scale::A, 1, 128).unwrap();
    let expect = Float::with_val(128, 2.5f64 * 2.5) / 49u32;
    assert!(Float::with_val(128, &v - &expect).abs() < 1e-35);
}

#[test]
fn moments_match_quadrature() {
    for (m, n, k, scale) in [(8, 5, 0, Scale::One), (12, 4, 7, Scale::A), (20, 20, 13, Scale::One), (9, 3, 11, Scale::A)] {
        let w = wp(m, n, 1, 0.7);
        let exact = moment(&w, scale, k, 128).unwrap();
        let quad = exp_sinh(|x| weight(&w, scale, k + m - n, x), 128);
        let rel = (Float::with_val(128, &quad - &exact) / &exact).abs().to_f64();
        assert!(rel < 1e-25, "{m} {n} {k}: {rel:e}");
    }
}

#[test]
fn first_type_two_polynomials() {
    let w = wp(6, 6, 2, 3.0);
    let s = build_mops(&w, 1, 0, 128).unwrap();
    assert!((s.l[0].to_f64() + 1.0 / 6.0).abs() < 1e-30 && s.l[1] == 1);
    let s = build_mops(&w, 0, 1, 128).unwrap();
    assert!((s.l[0].to_f64() + 0.5).abs() < 1e-30);
}

/// Relative residual of ∫ f · x^power · weight over ∫ |f| · x^power · weight.
fn orth_residual<F: Fn(&Float) -> Float>(f: F, w: &WeightPair, scale: Scale, power: u32, target: f64, prec: u32) -> f64 {
    let v = exp_sinh(|x| f(x) * weight(w, scale, power, x), prec);
    let mag = exp_sinh(|x| f(x).abs() * weight(w, scale, power, x), prec);
    Float::with_val(prec, (v - target) / mag).abs().to_f64()
}

#[test]
fn orthogonality_by_quadrature() {
    let prec = 256;
    let w = wp(16, 8, 4, 2.0);
    let s = build_mops(&w, 4, 4, prec).unwrap();
    assert!(s.residual < 1e-40);
    let ex = w.exponent();
    for i in 0..4 {
        for scale in [Scale::One, Scale::A] {
            let r = orth_residual(|x| poly(&s.l, x), &w, scale, i + ex, 0.0, prec);
            assert!(r < 1e-40, "L against x^{i} ({scale:?}): {r:e}");
        }
    }
    // Type I: ∫ x^i Q x^{M-N} = δ_{i,7}.
    let q = |x: &Float| {
        let e1 = (-Float::with_val(prec, x * 16u32)).exp();
        let ea = (-Float::with_val(prec, x * 8u32)).exp();
        poly(&s.a1, x) * e1 + poly(&s.aa, x) * ea
    };
    for i in 0..8u32 {
        let v = exp_sinh(|x| q(x) * x.clone().pow(i + ex), prec);
        let target = if i == 7 { 1.0 } else { 0.0 };
        let mag = exp_sinh(|x| q(x).abs() * x.clone().pow(i + ex), prec);
        let r = Float::with_val(prec, (v - target) / mag).abs().to_f64();
        assert!(r < 1e-40, "Q against x^{i}: {r:e}");
    }
}

#[test]
fn normalisation_constants_match_quadrature() {
    let prec = 128;
    let w = wp(10, 6, 2, 0.4);
    for (n1, n2) in [(4, 2), (3, 2), (5, 2), (4, 1), (4, 3)] {
        let s = build_mops(&w, n1, n2, prec).unwrap();
        let ex = w.exponent();
        for (h, scale, k) in [(&s.h1, Scale::One, n1), (&s.h2, Scale::A, n2)] {
            assert!(!h.is_zero());
            let q = exp_sinh(|x| poly(&s.l, x) * weight(&w, scale, k + ex, x), prec);
            let rel = (Float::with_val(prec, &q - h) / h).abs().to_f64();
            assert!(rel < 1e-20, "({n1},{n2}) {scale:?}: {rel:e}");
        }
    }
}

/// Projection kernel of the biorthogonal ensemble from the Gram matrix
/// G_{k,i} = ∫ φ_k(y) y^{i+M-N} dy, with φ the N functions y^j e^{-My},
/// y^j e^{-My/a}: K(x,y) = (xy)^{(M-N)/2} Σ x^j (G^{-1})_{jk} φ_k(y).
fn gram_kernel(w: &WeightPair, x: f64, y: f64, prec: u32) -> f64 {
    let (n, n0, ex) = (w.n as usize, w.n0() as usize, w.exponent());
    let rate = |k: usize| if k < n0 { Float::with_val(prec, w.m) } else { Float::with_val(prec, w.m) / w.a };
    let deg = |k: usize| if k < n0 { k } else { k - n0 };
    // ∫ y^p e^{-r y} dy = Γ(p+1)/r^{p+1}
    let mut g: Vec<Vec<Float>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let p = (deg(k) + i) as u32 + ex;
                    Float::with_val(prec, p + 1).gamma() / rate(k).pow(p + 1)
                })
                .collect()
        })
        .collect();
    // Invert G by Gauss-Jordan.
    let mut inv: Vec<Vec<Float>> = (0..n).map(|i| (0..n).map(|j| Float::with_val(prec, (i == j) as u32)).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| g[i][c].cmp_abs(&g[j][c]).unwrap()).unwrap();
        g.swap(c, p);
        inv.swap(c, p);
        let d = g[c][c].clone();
        for k in 0..n {
            g[c][k] /= &d;
            inv[c][k] /= &d;
        }
        for r in 0..n {
            if r != c {
                let f = g[r][c].clone();
                for k in 0..n {
                    let t = Float::with_val(prec, &f * &g[c][k]);
                    g[r][k] -= t;
                    let t = Float::with_val(prec, &f * &inv[c][k]);
                    inv[r][k] -= t;
                }
            }
        }
    }
    // C = G^{-1} (C G = I) is indexed [monomial][φ].
    let (xb, yb) = (Float::with_val(prec, x), Float::with_val(prec, y));
    let mut s = Float::new(prec);
    for j in 0..n {
        for k in 0..n {
            let phi = yb.clone().pow(deg(k) as u32) * (-(rate(k) * &yb)).exp();
            s += xb.clone().pow(j as u32) * &inv[j][k] * phi;
        }
    }
    let pref = Float::with_val(prec, &xb * &yb).sqrt().pow(ex);
    (s * pref).to_f64()
}

#[test]
fn kernel_matches_gram_projection() {
    for (m, n, n1, a) in [(16, 8, 3, 2.0), (12, 6, 2, 0.5), (9, 5, 4, 1.7)] {
        let w = wp(m, n, n1, a);
        let k = FiniteKernel::new(&w, 256).unwrap();
        for (x, y) in [(0.3, 0.9), (1.2, 0.4), (2.5, 2.5), (0.8, 3.1), (1.0, 1.0 + 1e-12)] {
            let (v, o) = (k.eval(x, y).unwrap(), gram_kernel(&w, x, y, 256));
            assert!((v - o).abs() <= 1e-12 * o.abs().max(1e-3), "{m},{n},{n1},{a} at ({x},{y}): {v} vs {o}");
        }
    }
}

#[test]
fn one_point_density_integrates_to_n() {
    let w = wp(16, 8, 3, 2.0);
    let k = FiniteKernel::new(&w, 256).unwrap();
    assert!(k.residual() < 1e-40);
    let r = adaptive(|x: f64| if x > 0.0 { k.eval(x, x).unwrap() } else { 0.0 }, 0.0, 40.0, 1e-10, 30);
    assert!((r.value - 8.0).abs() < 1e-6, "{}", r.value);
}

#[test]
fn two_point_correlation_is_nonnegative() {
    let w = wp(16, 8, 3, 2.0);
    let k = FiniteKernel::new(&w, 256).unwrap();
    let pts: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
    for &x in &pts {
        for &y in &pts {
            assert!(k.correlation(&[x, y]).unwrap() >= -1e-9, "({x}, {y})");
        }
    }
}

#[test]
fn correlation_examples() {
    let w = wp(16, 8, 3, 2.0);
    let k = FiniteKernel::new(&w, 256).unwrap();
    assert!(k.correlation(&[1.3, 1.3]).unwrap().abs() < 1e-9);
    let (x, y) = (0.6, 2.2);
    let hand = k.eval(x, x).unwrap() * k.eval(y, y).unwrap() - k.eval(x, y).unwrap() * k.eval(y, x).unwrap();
    assert!((k.correlation(&[x, y]).unwrap() - hand).abs() < 1e-12 * hand.abs());
    let three = k.correlation(&[0.5, 1.5, 2.5]).unwrap();
    assert!(three > 0.0);
    assert!(k.correlation(&[]).is_err());
    assert!(correlation_m(&w, &[1.0; 7]).is_err());
    assert!((correlation_m(&w, &[0.9]).unwrap() - kernel_finite(&w, 0.9, 0.9).unwrap()).abs() < 1e-14);
}

/// Christoffel-Darboux sum of orthonormal polynomials for the single
/// weight x^{M-N} e^{-Mx}, via Cholesky of the Hankel moment matrix.
fn laguerre_kernel(m: u32, n: u32, x: f64, y: f64, prec: u32) -> f64 {
    let nn = n as usize;
    let ex = m - n;
    let mu = |k: usize| Float::with_val(prec, k as u32 + ex + 1).gamma() / Float::with_val(prec, m).pow(k as u32 + ex + 1);
    // H = R^T R; orthonormal p_k have coefficients from R^{-1} columns.
    let h: Vec<Vec<Float>> = (0..nn).map(|i| (0..nn).map(|j| mu(i + j)).collect()).collect();
    let mut r = vec![vec![Float::new(prec); nn]; nn];
    for i in 0..nn {
        for j in i..nn {
            let mut s = h[i][j].clone();
            for k in 0..i {
                s -= Float::with_val(prec, &r[k][i] * &r[k][j]);
            }
            r[i][j] = if i == j { s.sqrt() } else { s / &r[i][i] };
        }
    }
    // Solve R^T c = e_k to get p_k(x) = Σ_j (R^{-1})_{jk} x^j.
    let mut rinv = vec![vec![Float::new(prec); nn]; nn];
    for k in 0..nn {
        for j in (0..=k).rev() {
            let mut s = Float::with_val(prec, (j == k) as u32);
            for l in j + 1..=k {
                s -= Float::with_val(prec, &r[j][l] * &rinv[l][k]);
            }
            rinv[j][k] = s / &r[j][j];
        }
    }
    let (xb, yb) = (Float::with_val(prec, x), Float::with_val(prec, y));
    let mut sum = Float::new(prec);
    for k in 0..nn {
        let (mut px, mut py) = (Float::new(prec), Float::new(prec));
        for j in 0..=k {
            px += xb.clone().pow(j as u32) * &rinv[j][k];
            py += yb.clone().pow(j as u32) * &rinv[j][k];
        }
        sum += px * py;
    }
    let w = (Float::with_val(prec, &xb * &yb).sqrt().pow(ex)) * (-(Float::with_val(prec, &xb + &yb) * m / 2u32)).exp();
    (sum * w).to_f64()
}

#[test]
fn single_weight_reduction() {
    let (m, n) = (12, 7);
    let k = FiniteKernel::new(&wp(m, n, 0, 2.0), 256).unwrap();
    for (x, y) in [(0.4, 0.4), (0.3, 1.1), (1.5, 0.7), (2.0, 2.6)] {
        // The biorthogonal kernel differs from the symmetric one by the
        // conjugation e^{-M(y-x)/2}.
        let sym = laguerre_kernel(m, n, x, y, 256) * (-(m as f64) * (y - x) / 2.0).exp();
        let v = k.eval(x, y).unwrap();
        assert!((v - sym).abs() < 1e-12 * sym.abs().max(1e-3), "({x},{y}): {v} vs {sym}");
    }
}

#[test]
fn kernel_rejects_nonpositive_points() {
    let k = FiniteKernel::new(&wp(8, 4, 2, 2.0), 128).unwrap();
    assert!(k.eval(0.0, 1.0).is_err());
    assert!(build_mops(&wp(8, 4, 2, 2.0), 30, 30, 128).is_err());
}

#[test]
fn low_precision_is_reported_as_singular() {
    let w = wp(40, 20, 10, 2.0);
    assert!(matches!(build_mops(&w, 10, 10, 24), Err(FiniteMopError::SingularMomentMatrix { .. })));
}

#[test]
fn rescaled_kernel_approaches_sine_kernel() {
    let (a, c, beta) = (2.0, 0.5, 0.5);
    let p = EnsembleParams::new(a, c, beta).unwrap();
    let s = classify_support(&p).unwrap();
    let x0 = 0.5 * (s.lambda1() + s.lambda2());
    let rho = SpectralCurve::new(&p).unwrap().density(x0).unwrap();
    let dist: Vec<f64> = [8u32, 12, 16, 20]
        .iter()
        .map(|&n| {
            let (m, n1) = ((n as f64 / c) as u32, (n as f64 * beta) as u32);
            let k = FiniteKernel::new(&wp(m, n, n1, a), 256).unwrap();
            bulk_sine_distance(&k, x0, m as f64 * rho, 21).unwrap()
        })
        .collect();
    assert!(dist.windows(2).all(|d| d[1] < d[0]), "{dist:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn built_systems_are_orthogonal(n1 in 0u32..4, n2 in 0u32..4, extra in 0u32..5, a in prop_oneof![0.2f64..0.8, 1.3f64..4.0]) {
        let n = (n1 + n2).max(1) + 1;
        let w = WeightPair::new(n + extra, n, 1, a).unwrap();
        let s = build_mops(&w, n1, n2, 128).unwrap();
        prop_assert!(s.residual <= 10f64.powf(-128.0 / 5.0));
        prop_assert_eq!(s.l.len() as u32, n1 + n2 + 1);
        prop_assert_eq!(s.a1.len() as u32, n1);
        prop_assert_eq!(s.aa.len() as u32, n2);
        if n1 > 0 {
            let r = orth_residual(|x| poly(&s.l, x), &w, Scale::One, n1 - 1 + extra, 0.0, 128);
            prop_assert!(r < 1e-20, "{:e}", r);
        }
    }
}
