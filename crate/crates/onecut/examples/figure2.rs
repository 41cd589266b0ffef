//! Support, branch points and the zero set of Re(θ2 − θ3) for
//! a = 0.9, c = 0.4, β = 0.7.
//!
//!     cargo run --release --example figure2

use onecut::curve::{classify_support, EnsembleParams};
use onecut::hgeometry::{trace_hset, Window};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = EnsembleParams::new(0.9, 0.4, 0.7)?;
    let s = classify_support(&p)?;
    println!("Δ = {:.6}  ({})", s.delta, s.cuts);
    println!("support [{:.5}, {:.5}]", s.lambda1(), s.lambda2());
    println!("λ3 = {:.5}", s.lambda3());

    let geo = trace_hset(&p, Window::new(-2.0, 6.0, -5.0, 5.0), 400, 400)?;
    for c in &geo.curves {
        let (a, b) = (c.points[0], c.points[c.points.len() - 1]);
        println!("{:<12} {:>5} points  {:.3} -> {:.3}", c.tag.to_string(), c.points.len(), a, b);
    }
    println!("x_L = {:.5}, x_R = {:.5}, ι = {:.5}", geo.x_l, geo.x_r, geo.iota);
    Ok(())
}
