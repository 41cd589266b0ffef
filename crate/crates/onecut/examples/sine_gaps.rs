//! Bulk gap probability E(0; s) of the sine process and the nearest-neighbour
//! spacing law, compared with the Wigner surmise.
//!
//!     cargo run --release --example sine_gaps

use onecut::kernels::{gap_probability_sine, sine_spacing_cdf};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>12} {:>12} {:>12}", "s", "E(0;s)", "P(S<s)", "surmise");
    for k in 0..=12 {
        let s = 0.25 * k as f64;
        let surmise = 1.0 - (-4.0 * s * s / PI).exp();
        println!("{s:5.2} {:12.8} {:12.8} {surmise:12.8}", gap_probability_sine(s)?, sine_spacing_cdf(s));
    }
    Ok(())
}
