//! Airy function on the complex plane and the Airy kernel.
//!
//!     cargo run --release --example airy

use num_complex::Complex64 as C64;
use onecut::kernels::{airy, airy_kernel, airy_real};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for x in [-8.0, -2.0, 0.0, 1.0, 5.0, 12.0] {
        let (ai, aip) = airy_real(x)?;
        println!("Ai({x:5.1}) = {ai:+.15e}   Ai'({x:5.1}) = {aip:+.15e}");
    }
    for z in [C64::new(1.0, 1.0), C64::new(-3.0, 2.0), C64::new(6.0, -4.0)] {
        let (ai, _) = airy(z)?;
        println!("Ai({z}) = {ai:.12}");
    }
    println!("K_Ai(0.5, 0.5) = {:.12}", airy_kernel(0.5, 0.5)?);
    println!("K_Ai(0.5, 1.5) = {:.12}", airy_kernel(0.5, 1.5)?);
    Ok(())
}
