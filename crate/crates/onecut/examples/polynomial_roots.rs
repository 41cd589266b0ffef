//! Closed-form cubic and quartic roots with a companion-matrix cross-check.
//!
//!     cargo run --release --example polynomial_roots

use num_complex::Complex64 as C64;
use onecut::polyroots::{companion_roots_real, solve_cubic, solve_quartic, CubicCoeffs, QuarticCoeffs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cubic = solve_cubic(&CubicCoeffs::real(1.0, -6.0, 11.0, -6.0))?;
    println!("x^3 - 6x^2 + 11x - 6: {}", show(&cubic.roots));

    let q = QuarticCoeffs::new(1.0, -2.0, 3.0, 4.0, -5.0);
    let closed = solve_quartic(&q)?;
    let comp = companion_roots_real(&[1.0, -2.0, 3.0, 4.0, -5.0])?;
    println!("closed form: {}", show(&closed.roots));
    println!("companion:   {}", show(&comp.roots));
    println!("discriminant {:.6}, multiple {:?}", closed.discriminant.re, closed.multiple);
    Ok(())
}

fn show(r: &[C64]) -> String {
    r.iter().map(|z| format!("{z:.12}")).collect::<Vec<_>>().join("  ")
}
