//! How the sufficient conditions move as the second coupling is scanned.
//! Analysis only, so it runs in milliseconds; the `sweep` CLI command does
//! the same with full simulations.
//!
//! cargo run --release --example condition_sweep

use std::f64::consts::FRAC_PI_4;

use leaksync::model::TwoModeParams;
use leaksync::slmp::{check_conditions, transform_params};

fn main() -> leaksync::Result<()> {
    println!("   g2    gamma      r1      r2      r3   sufficient");
    for step in 1..=12 {
        let g2 = 0.025 * step as f64;
        let spec = TwoModeParams {
            omega: [0.95, 1.01],
            omega0: 1.0,
            g: [0.2, g2],
            theta: [0.0, FRAC_PI_4],
            gamma: 0.1,
            n_max: 6,
        }
        .into_spec();
        let t = transform_params(&spec)?;
        let c = check_conditions(&spec, 0.5)?;
        println!(
            "{g2:6.3} {:7.4} {:7.4} {:7.4} {:7.4}   {}",
            t.gamma_angle,
            c.ratios.r1,
            c.ratios.r2,
            c.ratios.r3,
            c.sufficient()
        );
    }
    Ok(())
}
