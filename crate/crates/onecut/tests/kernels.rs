use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use onecut::kernels::*;
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;

/// Ai and Ai' from the Maclaurin series in MPFR arithmetic, for complex z.
/// The two fundamental series are summed separately with the closed-form
/// initial values, so nothing is shared with the library implementation.
fn airy_oracle(z: Complex64, prec: u32) -> (Complex64, Complex64) {
    let f = |x: f64| Float::with_val(prec, x);
    // Ai(0) = 3^{-2/3}/Γ(2/3), Ai'(0) = -3^{-1/3}/Γ(1/3)
    let three = f(3.0);
    let ai0 = Float::with_val(prec, three.clone().pow(f(-2.0) / 3u32)) / Float::with_val(prec, (f(2.0) / 3u32).gamma());
    let aip0 = -Float::with_val(prec, three.pow(f(-1.0) / 3u32)) / Float::with_val(prec, (f(1.0) / 3u32).gamma());
    let (zr, zi) = (f(z.re), f(z.im));
    let mul = |ar: &Float, ai: &Float, br: &Float, bi: &Float| {
        let re = Float::with_val(prec, ar * br) - Float::with_val(prec, ai * bi);
        let im = Float::with_val(prec, ar * bi) + Float::with_val(prec, ai * br);
        (re, im)
    };
    // f(z) = Σ z^{3k} / (2·3)(5·6)...; g(z) = Σ z^{3k+1} / (3·4)(6·7)...
    let (z3r, z3i) = {
        let (a, b) = mul(&zr, &zi, &zr, &zi);
        mul(&a, &b, &zr, &zi)
    };
    let mut fr = f(1.0);
    let mut fi = f(0.0);
    let mut gr = zr.clone();
    let mut gi = zi.clone();
    let mut fpr = f(0.0);
    let mut fpi = f(0.0);
    let mut gpr = f(1.0);
    let mut gpi = f(0.0);
    let (mut tfr, mut tfi) = (f(1.0), f(0.0));
    let (mut tgr, mut tgi) = (zr.clone(), zi.clone());
    for k in 1..2000u32 {
        let (a, b) = mul(&tfr, &tfi, &z3r, &z3i);
        let d = f(((3 * k - 1) * (3 * k)) as f64);
        tfr = a / &d;
        tfi = b / &d;
        let (a, b) = mul(&tgr, &tgi, &z3r, &z3i);
        let d = f(((3 * k) * (3 * k + 1)) as f64);
        tgr = a / &d;
        tgi = b / &d;
        fr += &tfr;
        fi += &tfi;
        gr += &tgr;
        gi += &tgi;
        // derivatives: d/dz z^{n} = n z^{n-1}
        let (ir, ii) = {
            let n2 = Float::with_val(prec, zr.clone() * &zr) + Float::with_val(prec, zi.clone() * &zi);
            (Float::with_val(prec, &zr / &n2), Float::with_val(prec, -zi.clone() / &n2))
        };
        let (a, b) = mul(&tfr, &tfi, &ir, &ii);
        fpr += a * (3 * k);
        fpi += b * (3 * k);
        let (a, b) = mul(&tgr, &tgi, &ir, &ii);
        gpr += a * (3 * k + 1);
        gpi += b * (3 * k + 1);
        let small = tfr.clone().abs() + tfi.clone().abs() + tgr.clone().abs() + tgi.clone().abs();
        if k > 10 && small < Float::with_val(prec, 1e-60) {
            break;
        }
    }
    let ai = (
        Float::with_val(prec, &ai0 * &fr) + Float::with_val(prec, &aip0 * &gr),
        Float::with_val(prec, &ai0 * &fi) + Float::with_val(prec, &aip0 * &gi),
    );
    let aip = (
        Float::with_val(prec, &ai0 * &fpr) + Float::with_val(prec, &aip0 * &gpr),
        Float::with_val(prec, &ai0 * &fpi) + Float::with_val(prec, &aip0 * &gpi),
    );
    (Complex64::new(ai.0.to_f64(), ai.1.to_f64()), Complex64::new(aip.0.to_f64(), aip.1.to_f64()))
}

fn oracle_at(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() == 0.0 {
        return (Complex64::new(AI0, 0.0), Complex64::new(AIP0, 0.0));
    }
    airy_oracle(z, 600)
}

#[test]
fn airy_at_origin_matches_series_constants() {
    let (a, b) = airy_oracle(Complex64::new(1e-300, 0.0), 256);
    assert!((a.re - 0.3550280539).abs() < 1e-10);
    let (x, y) = airy_real(0.0).unwrap();
    assert!((x - a.re).abs() < 1e-16 && (y - b.re).abs() < 1e-16);
}

#[test]
fn airy_matches_extended_precision_series() {
    let pts = [
        (0.5, 0.0),
        (-2.0, 0.0),
        (5.9, 0.0),
        (6.1, 0.0),
        (-6.1, 0.0),
        (-9.0, 0.0),
        (-15.0, 0.0),
        (-30.0, 0.0),
        (12.0, 0.0),
        (3.0, 4.0),
        (-4.0, 5.0),
        (-7.0, -3.0),
        (2.0, -8.0),
        (-10.0, 0.5),
        (8.0, 8.0),
    ];
    for (re, im) in pts {
        let z = Complex64::new(re, im);
        let (a, b) = airy(z).unwrap();
        let (ea, eb) = oracle_at(z);
        let scale = 1.0f64.max(ea.norm());
        assert!((a - ea).norm() < 1e-11 * scale, "Ai({z}) = {a}, oracle {ea}");
        let scale = 1.0f64.max(eb.norm());
        assert!((b - eb).norm() < 1e-11 * scale, "Ai'({z}) = {b}, oracle {eb}");
    }
}

#[test]
fn airy_is_relatively_accurate_on_the_decaying_ray() {
    for x in [8.0, 15.0, 30.0] {
        let (a, b) = airy_real(x).unwrap();
        let (ea, eb) = oracle_at(Complex64::new(x, 0.0));
        assert!(((a - ea.re) / ea.re).abs() < 1e-11, "x = {x}");
        assert!(((b - eb.re) / eb.re).abs() < 1e-11, "x = {x}");
    }
}

#[test]
fn airy_satisfies_its_differential_equation() {
    let h = 1e-2;
    for x in [-2.0, 0.0, 2.0, 5.0] {
        let f = |t: f64| airy_real(t).unwrap().0;
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        assert!((d2 - x * f(x)).abs() < 1e-7, "x = {x}");
    }
}

#[test]
fn airy_asymptotic_ratio_tends_to_one() {
    let ratio = |x: f64| airy_real(x).unwrap().0 * 2.0 * std::f64::consts::PI.sqrt() * x.powf(0.25) * (2.0 / 3.0 * x.powf(1.5)).exp();
    let r20 = ratio(20.0);
    assert!((r20 - 1.0).abs() < 1e-2);
    assert!((ratio(40.0) - 1.0).abs() < (r20 - 1.0).abs());
}

#[test]
fn airy_rejects_huge_arguments() {
    assert!(matches!(airy(Complex64::new(2e3, 0.0)), Err(KernelError::RangeError(_))));
}

#[test]
fn limit_kernel_examples() {
    assert_eq!(limit_kernel(LimitKind::Sine, 0.3, 0.3).unwrap(), 1.0);
    assert!(limit_kernel(LimitKind::Sine, 1.7, 0.7).unwrap().abs() < 1e-15);
    let d = limit_kernel(LimitKind::Airy, 0.0, 0.0).unwrap();
    let (_, eb) = airy_oracle(Complex64::new(1e-300, 0.0), 256);
    assert!((d - eb.re * eb.re).abs() < 1e-15);
}

#[test]
fn airy_kernel_is_continuous_across_the_series_switch() {
    for v in [-3.0, 0.5, 2.0] {
        for h in [0.0999, 0.1001, -0.0999, -0.1001, 0.05] {
            let (a, b) = (oracle_at(Complex64::new(v + h, 0.0)), oracle_at(Complex64::new(v, 0.0)));
            let exact = (a.0.re * b.1.re - a.1.re * b.0.re) / h;
            assert!((airy_kernel(v + h, v).unwrap() - exact).abs() < 1e-12, "v={v} h={h}");
        }
    }
}

#[test]
fn rank_one_determinant() {
    let k = KernelOperator::custom(0.0, 1.0, |_, _| 0.5);
    assert!((fredholm_det(&k, 20).unwrap() - 0.5).abs() < 1e-14);
}

#[test]
fn sine_determinant_matches_eigenvalue_product() {
    for s in [0.5, 1.0, 2.5, 4.0] {
        let k = KernelOperator::sine(0.0, s);
        let n = 40;
        let eig = SymmetricEigen::new(k.nystrom(n)).eigenvalues;
        let prod: f64 = eig.iter().map(|m| 1.0 - m).product();
        assert!((k.det_at(n) - prod).abs() < 1e-10, "s = {s}");
    }
}

#[test]
fn airy_nystrom_matrix_is_positive_semidefinite() {
    for s in [-6.0, -2.0, 0.0, 3.0] {
        let m = KernelOperator::airy(s, s + TW_TRUNCATION).nystrom(TW_NODES);
        let min = SymmetricEigen::new(m).eigenvalues.min();
        assert!(min >= -1e-10, "s = {s}: {min}");
    }
}

#[test]
fn doubling_the_nodes_is_negligible() {
    for s in [-6.0, -2.0, 0.0, 4.0] {
        let k = KernelOperator::airy(s, s + TW_TRUNCATION);
        assert!((k.det_at(TW_NODES) - k.det_at(2 * TW_NODES)).abs() < 1e-10, "s = {s}");
    }
    for s in [0.5, 3.0, 8.0] {
        let k = KernelOperator::sine(0.0, s);
        let n = 20 + (4.0 * s).ceil() as usize;
        assert!((k.det_at(n) - k.det_at(2 * n)).abs() < 1e-10, "s = {s}");
    }
}

#[test]
fn rough_kernel_is_flagged() {
    let k = KernelOperator::custom(0.0, 1.0, |u, v| if u + v > 1.0 { 0.9 } else { 0.0 });
    assert!(matches!(fredholm_det(&k, 21), Err(KernelError::NonConvergent { .. })));
}

#[test]
fn tracy_widom_routes_agree() {
    for s in [-4.0, -2.0, 0.0, 2.0] {
        let (f, p) = (tw_cdf(s, TwMethod::Fredholm).unwrap(), tw_cdf(s, TwMethod::Painleve).unwrap());
        assert!((f - p).abs() < 1e-6, "s = {s}: {f} vs {p}");
    }
    let grid: Vec<f64> = (0..=200).map(|k| -6.0 + 0.05 * k as f64).collect();
    let f = tw_table(&grid, TwMethod::Fredholm).unwrap();
    let p = tw_table(&grid, TwMethod::Painleve).unwrap();
    for (a, b) in f.f2.iter().zip(&p.f2) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn tracy_widom_table_shape() {
    let grid: Vec<f64> = (0..=160).map(|k| -10.0 + 0.1 * k as f64).collect();
    for method in [TwMethod::Fredholm, TwMethod::Painleve] {
        let t = tw_table(&grid, method).unwrap();
        assert!(t.f2.windows(2).all(|w| w[1] >= w[0]), "{method}");
        assert!(t.f2.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(t.f2[0] < 1e-4);
        assert!((1.0 - t.f2[160]).abs() < 1e-6);
    }
}

#[test]
fn tracy_widom_mean_golden() {
    let m = tw_mean(TwMethod::Fredholm).unwrap();
    assert!((m - (-1.7710868074)).abs() < 1e-9, "{m}");
    let p = tw_mean(TwMethod::Painleve).unwrap();
    assert!((p - m).abs() < 1e-8);
}

#[test]
fn painleve_tail_expansion_joins_the_ode() {
    // The expansion is used only past the switch point; just before it the
    // integrated q should already agree with it closely.
    let s = PAINLEVE_SWITCH;
    let q = hastings_mcleod_left(s);
    assert!((q - (-s / 2.0).sqrt()).abs() < 2e-3);
    assert!(tw_painleve(s + 1e-9).unwrap() > 0.0);
}

#[test]
fn gap_probability_examples() {
    assert_eq!(gap_probability_sine(0.0).unwrap(), 1.0);
    let s = 1e-3;
    assert!((gap_probability_sine(s).unwrap() - (1.0 - s)).abs() < 1e-5);
    let vals: Vec<f64> = (1..=10).map(|k| gap_probability_sine(0.5 * k as f64).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
    assert!(matches!(gap_probability_sine(11.0), Err(KernelError::RangeError(_))));
}

#[test]
fn spacing_law_has_unit_mean() {
    let t = SpacingTable::new(5.0, 0.01);
    // mean = ∫ (1 - F)
    let mean: f64 = t.cdf.windows(2).map(|w| 0.01 * (2.0 - w[0] - w[1]) / 2.0).sum();
    assert!((mean - 1.0).abs() < 1e-3, "{mean}");
    assert!(t.cdf.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_symmetric(u in -8.0f64..5.0, d in -1.0f64..1.0) {
        let v = u + d;
        let (a, b) = (airy_kernel(u, v).unwrap(), airy_kernel(v, u).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((sine_kernel(u, v) - sine_kernel(v, u)).abs() <= 1e-15);
    }

    #[test]
    fn gap_probability_is_a_probability(s in 0.01f64..6.0) {
        let g = gap_probability_sine(s).unwrap();
        prop_assert!(g > 0.0 && g < 1.0);
    }
}
