//! Tracy-Widom GUE distribution by its two routes: the Airy-kernel
//! Fredholm determinant and the Hastings-McLeod solution of Painlevé II.
//!
//!     cargo run --release --example tracy_widom

use onecut::kernels::{tw_mean, tw_table, TwMethod};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid: Vec<f64> = (0..=20).map(|k| -6.0 + 0.5 * k as f64).collect();
    let fr = tw_table(&grid, TwMethod::Fredholm)?;
    let pa = tw_table(&grid, TwMethod::Painleve)?;
    println!("{:>6} {:>22} {:>22} {:>9}", "s", "Fredholm", "Painleve", "gap");
    for (i, s) in grid.iter().enumerate() {
        println!("{s:6.2} {:22.16} {:22.16} {:9.1e}", fr.f2[i], pa.f2[i], (fr.f2[i] - pa.f2[i]).abs());
    }
    println!("mean {:.12}", tw_mean(TwMethod::Fredholm)?);
    Ok(())
}
