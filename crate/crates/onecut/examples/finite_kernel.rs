//! Exact finite-N correlation kernel from multiple Laguerre polynomials,
//! and its approach to the sine kernel in the bulk.
//!
//!     cargo run --release --example finite_kernel

use onecut::curve::{EnsembleParams, SpectralCurve};
use onecut::finitemop::{bulk_sine_distance, FiniteKernel, WeightPair};
use onecut::quad::adaptive;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = WeightPair::new(16, 8, 3, 2.0)?;
    let k = FiniteKernel::new(&w, 256)?;
    println!("orthogonality residual {:.1e}", k.residual());
    let n = adaptive(|x: f64| if x > 0.0 { k.eval(x, x).unwrap() } else { 0.0 }, 0.0, 40.0, 1e-10, 30).value;
    println!("∫ K(x,x) dx = {n:.10}");
    for x in [0.5, 1.0, 2.0, 3.0] {
        println!("R1({x}) = {:.6}   R2({x}, {}) = {:.6}", k.eval(x, x)?, x + 0.3, k.correlation(&[x, x + 0.3])?);
    }

    let (a, c, beta) = (2.0, 0.5, 0.5);
    let curve = SpectralCurve::new(&EnsembleParams::new(a, c, beta)?)?;
    let x0 = 0.5 * (curve.support.lambda1() + curve.support.lambda2());
    let rho = curve.density(x0)?;
    for n in [8u32, 12, 16, 20] {
        let m = 2 * n;
        let k = FiniteKernel::new(&WeightPair::new(m, n, n / 2, a)?, 256)?;
        println!("N = {n:2}: sup distance to sine kernel {:.4}", bulk_sine_distance(&k, x0, m as f64 * rho, 21)?);
    }
    Ok(())
}
