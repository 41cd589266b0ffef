use num_complex::Complex64 as C64;
use onecut::curve::*;
use onecut::hgeometry::*;
use onecut::polyroots::{companion_roots, companion_roots_real};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig2() -> EnsembleParams {
    EnsembleParams::new(0.9, 0.4, 0.7).unwrap()
}

fn wide_window() -> Window {
    Window::new(-2.0, 6.0, -5.0, 5.0)
}

/// Re(xi_I - xi_R) at real x from the companion matrix: the complex pair
/// minus the real root. No continuation involved.
fn balance_oracle(p: &EnsembleParams, x: f64) -> f64 {
    let r = companion_roots_real(&[p.a * x, p.a2() * x + p.b2(), x + p.b1(), 1.0]).unwrap().roots;
    let (mut re_pair, mut real) = (0.0, 0.0);
    for z in &r {
        if z.im.abs() > 1e-12 {
            re_pair = z.re;
        } else {
            real = z.re;
        }
    }
    re_pair - real
}

/// |Re ∫_{lambda3}^{x} (xi_a - xi_b)| for the pair merging at lambda3, by
/// composite Simpson in t (x = lambda3 + (x - lambda3) t^2) with the pair
/// followed by nearest-root matching on companion-matrix roots.
fn abs_h_oracle(p: &EnsembleParams, l3: C64, x: f64, steps: usize) -> f64 {
    let z = C64::new(x, 0.0);
    let roots = |w: C64| {
        companion_roots(&[w * p.a, w * p.a2() + p.b2(), w + p.b1(), C64::new(1.0, 0.0)]).unwrap().roots
    };
    let mut pair: Option<(C64, C64)> = None;
    let mut sum = C64::new(0.0, 0.0);
    let hstep = 1.0 / steps as f64;
    for k in 1..=steps {
        let t = k as f64 * hstep;
        let r = roots(l3 + (z - l3) * (t * t));
        let next = match pair {
            None => {
                let mut best = (f64::MAX, 0, 0);
                for i in 0..3 {
                    for j in i + 1..3 {
                        let d = (r[i] - r[j]).norm();
                        if d < best.0 {
                            best = (d, i, j);
                        }
                    }
                }
                (r[best.1], r[best.2])
            }
            Some((u, v)) => {
                let pick = |w: C64| *r.iter().min_by(|a, b| (*a - w).norm().total_cmp(&(*b - w).norm())).unwrap();
                (pick(u), pick(v))
            }
        };
        pair = Some(next);
        let w = if k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += (next.0 - next.1) * (z - l3) * (2.0 * t) * w;
    }
    (sum * (hstep / 3.0)).re.abs()
}

#[test]
fn theta_at_lambda4_is_imaginary() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let t = ev.theta_diff(ev.lambda4()).unwrap();
    assert!(t.value.re.abs() < 1e-9, "{}", t.value);
    assert!(t.value.im.abs() > 1e-3);
    assert_eq!(t.path_record.len(), 4);
}

#[test]
fn real_part_is_symmetric_under_conjugation() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut n = 0;
    while n < 20 {
        let z = C64::new(rng.random_range(-2.0..6.0), rng.random_range(0.05..5.0));
        let (Ok(up), Ok(down)) = (ev.theta_diff(z), ev.theta_diff(z.conj())) else { continue };
        assert!((up.value.re - down.value.re).abs() < 1e-8, "{z}: {} vs {}", up.value, down.value);
        n += 1;
    }
}

#[test]
fn homotopic_paths_agree() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let l3 = ev.lambda3();
    for (z, w) in [
        (C64::new(4.5, 1.0), C64::new(4.0, 3.5)),
        (C64::new(0.5, 4.5), C64::new(1.5, 4.8)),
        (C64::new(-1.0, 1.0), C64::new(0.5, 3.0)),
    ] {
        let direct = ev.theta_diff(z).unwrap().value;
        let bent = ev.theta_along(&[l3, w, z], 1.0).unwrap();
        assert!((direct - bent).norm() < 2e-9, "{z}: {direct} vs {bent}");
    }
}

#[test]
fn h_changes_sign_twice() {
    let p = fig2();
    let ev = ThetaEvaluator::new(&p).unwrap();
    let geo = ev.trace_hset(wide_window(), 400, 400).unwrap();
    let (lo, hi) = (geo.x_l - 1.0, geo.x_r + 1.0);
    let n = 600;
    let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * (k as f64 + 0.31) / (n as f64 + 1.0)).collect();
    let hs: Vec<f64> = xs.iter().map(|&x| ev.h_value(x).unwrap()).collect();
    let crossings: Vec<usize> = (1..hs.len()).filter(|&k| (hs[k - 1] < 0.0) != (hs[k] < 0.0)).collect();
    assert_eq!(crossings.len(), 2, "{crossings:?}");

    let l3 = ev.lambda3();
    for (k, grid_x) in crossings.iter().zip([geo.x_l, geo.x_r]) {
        let (mut a, mut b) = (xs[k - 1], xs[*k]);
        let neg_a = hs[k - 1] < 0.0;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if (ev.h_value(m).unwrap() < 0.0) == neg_a {
                a = m;
            } else {
                b = m;
            }
        }
        let root = 0.5 * (a + b);
        assert!(ev.h_value(root).unwrap().abs() < 1e-7);
        assert!((root - grid_x).abs() < geo.spacing.0, "{root} vs grid {grid_x}");
        // Independent integration: |h| is small at the root and grows
        // linearly away from it.
        let at = abs_h_oracle(&p, l3, root, 4000);
        let off = abs_h_oracle(&p, l3, root + 1e-3, 4000);
        assert!(at < 1e-7, "{at}");
        assert!(off > 1e-5, "{off}");
    }
}

#[test]
fn h_grows_linearly_at_infinity() {
    for (a, c, b) in [(0.9, 0.4, 0.7), (2.0, 0.4, 0.25)] {
        let p = EnsembleParams::new(a, c, b).unwrap();
        let ev = ThetaEvaluator::new(&p).unwrap();
        let x = 200.0;
        let slope = (ev.h_value(2.0 * x).unwrap() - ev.h_value(x).unwrap()) / x;
        assert!((slope - (1.0 / a - 1.0)).abs() < 5e-3, "{slope}");
    }
}

#[test]
fn figure2_level_set() {
    let p = fig2();
    let ev = ThetaEvaluator::new(&p).unwrap();
    let geo = ev.trace_hset(wide_window(), 400, 400).unwrap();
    let s = &ev.curve.support;
    assert!(geo.x_l < geo.x_r);
    assert!(geo.x_l < s.lambda2() && geo.x_r > s.lambda1());
    for tag in [CurveTag::HL, CurveTag::HR] {
        let pts = &geo.curve(tag).points;
        assert_eq!(pts[0], s.lambda[2]);
        assert_eq!(*pts.last().unwrap(), s.lambda[3]);
        let sign_changes = pts.windows(2).filter(|w| (w[0].im > 0.0) != (w[1].im > 0.0)).count();
        assert_eq!(sign_changes, 1, "{tag}");
    }
    let up = &geo.curve(CurveTag::HInfPlus).points;
    let down = &geo.curve(CurveTag::HInfMinus).points;
    assert_eq!(up[0], s.lambda[2]);
    assert_eq!(down[0], s.lambda[3]);
    for (u, d) in up.iter().zip(down) {
        assert_eq!(u.conj(), *d);
    }
    // Leaves through the top edge, heading upwards.
    let end = *up.last().unwrap();
    assert!((end.im - 5.0).abs() < geo.spacing.1);
    let k = up.len() - up.len() / 5;
    let tail = end - up[k];
    assert!(tail.im > 0.0 && (tail.re / tail.im).abs() < 0.5, "{tail}");
}

#[test]
fn extracted_set_is_mirror_symmetric() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let geo = ev.trace_hset(wide_window(), 400, 400).unwrap();
    let cell = geo.spacing.0.hypot(geo.spacing.1);
    let all: Vec<C64> = geo.curves.iter().flat_map(|c| c.points.iter().copied()).collect();
    for w in &all {
        let d = all.iter().map(|v| (*v - w.conj()).norm()).fold(f64::MAX, f64::min);
        assert!(d <= cell, "{w}");
    }
}

#[test]
fn crossings_converge_under_refinement() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let coarse = ev.trace_hset(wide_window(), 400, 400).unwrap();
    let fine = ev.trace_hset(wide_window(), 800, 800).unwrap();
    assert!((coarse.x_l - fine.x_l).abs() < coarse.spacing.0);
    assert!((coarse.x_r - fine.x_r).abs() < coarse.spacing.0);
}

#[test]
fn tail_tangent_straightens_in_taller_window() {
    let ev = ThetaEvaluator::new(&fig2()).unwrap();
    let tangent = |w: Window| {
        let g = ev.trace_hset(w, 400, 400).unwrap();
        let up = &g.curve(CurveTag::HInfPlus).points;
        let t = up[up.len() - 1] - up[up.len() - 1 - up.len() / 10];
        (t.re / t.im).abs()
    };
    let short = tangent(wide_window());
    let tall = tangent(Window::new(-4.0, 8.0, -15.0, 15.0));
    assert!(tall < short, "{tall} vs {short}");
}

#[test]
fn sign_structure() {
    for (a, c, b) in [(0.9, 0.4, 0.7), (2.0, 0.4, 0.25), (0.5, 0.3, 0.4), (1.5, 0.5, 0.5)] {
        let p = EnsembleParams::new(a, c, b).unwrap();
        let ev = ThetaEvaluator::new(&p).unwrap();
        let l = ev.curve.lambda();
        let span = l.iter().map(|z| z.norm()).fold(0.0, f64::max) + 1.0;
        let w = Window::new(-2.0 * span, 2.0 * span, -2.0 * span, 2.0 * span);
        let geo = ev.trace_hset(w, 300, 300).unwrap();
        let sign = if a < 1.0 { 1.0 } else { -1.0 };
        let left = [
            C64::new(geo.x_l - 0.5, 0.0),
            C64::new(-3.0 * span, 1.0),
            C64::new(-3.0 * span, -4.0 * span),
        ];
        let right = [
            C64::new(geo.x_r + 0.5, 0.0),
            C64::new(4.0 * span, 0.5),
            C64::new(4.0 * span, -4.0 * span),
        ];
        for z in left {
            let v = ev.theta_diff(z).unwrap().value.re;
            assert!(sign * v < 0.0, "a={a} left {z}: {v}");
        }
        for z in right {
            let v = ev.theta_diff(z).unwrap().value.re;
            assert!(sign * v > 0.0, "a={a} right {z}: {v}");
        }
    }
}

#[test]
fn iota_matches_companion_oracle() {
    for (a, c, b) in [(0.9, 0.4, 0.7), (2.0, 0.4, 0.25), (0.5, 0.3, 0.4)] {
        let p = EnsembleParams::new(a, c, b).unwrap();
        let ev = ThetaEvaluator::new(&p).unwrap();
        let iota = ev.find_iota().unwrap();
        let s = &ev.curve.support;
        assert!(iota > s.lambda1() && iota < s.lambda2());
        let (mut lo, mut hi) = (s.lambda1() + 1e-9, s.lambda2() - 1e-9);
        let neg_lo = balance_oracle(&p, lo) < 0.0;
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if (balance_oracle(&p, m) < 0.0) == neg_lo {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((iota - 0.5 * (lo + hi)).abs() < 1e-10, "{iota} vs {lo}");
        let e = 1e-5;
        let slope = (balance_function(&ev.curve, iota + e).unwrap() - balance_function(&ev.curve, iota - e).unwrap())
            / (2.0 * e);
        assert!(slope > 0.0, "{slope}");
    }
}

#[test]
fn figure2_iota_against_caption() {
    // The caption quotes 0.602 to three digits; the zero of Re(xi_I - xi_R)
    // computed two independent ways sits at 0.61088.
    let iota = find_iota(&fig2()).unwrap();
    assert!((iota - 0.6108799138).abs() < 1e-9, "{iota}");
    assert!((iota - 0.602).abs() < 1e-2);
}

#[test]
fn small_window_or_grid_is_rejected() {
    let p = fig2();
    assert!(matches!(trace_hset(&p, wide_window(), 100, 400), Err(HError::InvalidWindow(_))));
    assert!(matches!(trace_hset(&p, Window::new(0.0, 3.0, -5.0, 5.0), 400, 400), Err(HError::InvalidWindow(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugate_symmetry_of_real_part(x in -3.0f64..7.0, y in 0.02f64..6.0, k in 0usize..3) {
        let params = [(0.9, 0.4, 0.7), (2.0, 0.4, 0.25), (0.5, 0.3, 0.4)][k];
        let p = EnsembleParams::new(params.0, params.1, params.2).unwrap();
        let ev = ThetaEvaluator::new(&p).unwrap();
        let z = C64::new(x, y);
        if let (Ok(u), Ok(d)) = (ev.theta_diff(z), ev.theta_diff(z.conj())) {
            prop_assert!((u.value.re - d.value.re).abs() < 1e-8);
        }
    }
}
