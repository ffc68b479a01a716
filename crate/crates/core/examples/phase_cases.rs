//! The coupling phases decide how the oscillators lock: equal phases give
//! antiphase motion, phases differing by π give in-phase motion.
//!
//! cargo run --release --example phase_cases

use std::path::Path;

use leaksync::config::ScenarioConfig;
use leaksync::scenario::{compare_run, simulate};

fn main() -> leaksync::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    println!("scenario  theta2     predicted  fitted");
    for name in ["fig2a", "fig2b", "fig1"] {
        let cfg = ScenarioConfig::load(&dir.join(format!("{name}.cfg")))?;
        let traj = simulate(&cfg)?;
        let c = compare_run(&cfg, &traj)?;
        println!(
            "{name:<9} {:<10.4} {:<10.4} {:.4}",
            cfg.spec()?.phases[0][1],
            c.prediction.phase_diff,
            c.estimate.phase_diff
        );
    }
    Ok(())
}
