//! Phase diagram slice: one or two cuts across (a, β) at fixed c, with the
//! discriminant-based classification checked against a direct scan.
//!
//!     cargo run --release --example support_scan

use onecut::curve::{classify_support, support_scan_oracle, Cuts, EnsembleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = 0.3;
    let betas: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    print!("  a \\ β");
    for b in &betas {
        print!(" {b:4.1}");
    }
    println!();
    let mut disagreements = 0;
    for a in [0.1, 0.2, 0.35, 0.5, 0.7, 1.5, 2.5, 4.0, 6.0, 10.0] {
        print!("{a:7.2}");
        for &b in &betas {
            let p = EnsembleParams::new(a, c, b)?;
            let mark = match classify_support(&p) {
                Ok(s) => {
                    let scanned = support_scan_oracle(&p, 20_000).len();
                    let expected = if s.cuts == Cuts::OneCut { 1 } else { 2 };
                    disagreements += usize::from(scanned != expected);
                    if s.cuts == Cuts::OneCut { "   1" } else { "   2" }
                }
                Err(_) => "   ?",
            };
            print!(" {mark}");
        }
        println!();
    }
    println!("scan disagreements: {disagreements}");
    Ok(())
}
