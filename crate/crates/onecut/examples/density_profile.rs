//! Limiting eigenvalue density on its support, with the edge constants
//! that set the M^{2/3} scale at the soft edges.
//!
//!     cargo run --release --example density_profile -- [a c beta]

use onecut::curve::{EnsembleParams, SpectralCurve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let (a, c, beta) = match args[..] {
        [a, c, b] => (a, c, b),
        _ => (0.9, 0.4, 0.7),
    };
    let curve = SpectralCurve::new(&EnsembleParams::new(a, c, beta)?)?;
    curve.require_one_cut()?;
    let (l1, l2) = (curve.support.lambda1(), curve.support.lambda2());
    println!("mass {:.12} (c = {c})", curve.total_mass()?);
    let (r1, r2) = curve.edge_constants()?;
    println!("edge constants ρ1 = {r1:.6}, ρ2 = {r2:.6}");
    for k in 0..=24 {
        let x = l1 + (l2 - l1) * k as f64 / 24.0;
        let rho = curve.density(x)?;
        println!("{x:8.4} {rho:9.5} {}", "#".repeat((rho * 60.0) as usize));
    }
    Ok(())
}
