//! Sample the two-point covariance Wishart ensemble and compare with the
//! limiting density, the sine-kernel spacing law and Tracy-Widom.
//!
//!     cargo run --release --example monte_carlo -- [replicates] [seed]

use onecut::montecarlo::{bulk_density_from, bulk_spacing_from, edge_fluctuation_from, sample_spectrum, SampleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let replicates = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let cfg = SampleConfig { m: 400, n: 160, n1: 112, a: 0.9, replicates, seed };
    let params = cfg.params()?;
    let sample = sample_spectrum(&cfg)?;
    let mean_trace: f64 = sample.eigenvalues.iter().map(|e| e.iter().sum::<f64>()).sum::<f64>() / replicates as f64;
    println!("mean trace {mean_trace:.3} (expected {:.3})", cfg.expected_trace());

    let b = bulk_density_from(&params, &sample)?;
    println!("bulk density KS {:.4}, outside support {:.2e}", b.ks, b.outside_fraction);
    let s = bulk_spacing_from(&params, cfg.m, &sample)?;
    println!("spacings: KS sine {:.4}, KS exponential {:.4}, mean {:.4}", s.ks_sine, s.ks_exponential, s.mean_spacing);
    if replicates >= 200 {
        let e = edge_fluctuation_from(&params, cfg.m, &sample)?;
        println!("edge: KS {:.4}, mean {:.4} (TW {:.4})", e.ks, e.mean, e.tw_mean);
    }
    Ok(())
}
